//! Log-Gamma and regularized incomplete Gamma functions.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln n!`, exact summation for small `n`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else if n <= 32 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `Γ(n, x) / Γ(n) = e^{-x} Σ_{k<n} x^k / k!` for integer `n ≥ 1`.
///
/// Terms are formed in log space so large `x` underflows gracefully instead
/// of producing `0 · ∞`.
pub fn regularized_upper_gamma(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "order must be at least 1");
    assert!(x >= 0.0, "argument must be non-negative, got {x}");
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let lx = x.ln();
    let sum: f64 = (0..n as u64)
        .map(|k| (-x + k as f64 * lx - ln_factorial(k)).exp())
        .sum();
    sum.min(1.0)
}

/// `γ(n, x) / Γ(n)`, the complement of [`regularized_upper_gamma`].
///
/// For `x < n` the tail `e^{-x} Σ_{k≥n} x^k / k!` is summed directly so that
/// tiny probabilities keep full relative precision.
pub fn regularized_lower_gamma(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "order must be at least 1");
    assert!(x >= 0.0, "argument must be non-negative, got {x}");
    if x == 0.0 {
        return 0.0;
    }
    if x >= n as f64 {
        return 1.0 - regularized_upper_gamma(n, x);
    }
    lower_series(n as f64, x)
}

/// `(P(a, x), Q(a, x))` for real `a > 0`. The smaller of the two carries full
/// relative precision; the other is its complement.
pub fn regularized_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    if x < a + 1.0 {
        let p = lower_series(a, x);
        (p, 1.0 - p)
    } else {
        let q = upper_continued_fraction(a, x);
        (1.0 - q, q)
    }
}

/// `e^{-x} x^a / Γ(a+1) · Σ_j x^j / ((a+1)···(a+j))`.
fn lower_series(a: f64, x: f64) -> f64 {
    let prefactor = (-x + a * x.ln() - ln_gamma(a + 1.0)).exp();
    if prefactor == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = a;
    for _ in 0..100_000 {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (prefactor * sum).min(1.0)
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let prefactor = (-x + a * x.ln() - ln_gamma(a)).exp();
    if prefactor == 0.0 {
        return 0.0;
    }
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..100_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (prefactor * h).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(0.5), PI.sqrt().ln(), epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(101.0), ln_factorial(100), max_relative = 1e-14);
        assert_relative_eq!(ln_factorial(20), (2_432_902_008_176_640_000f64).ln(), max_relative = 1e-15);
        assert_relative_eq!(ln_gamma(33.0), ln_factorial(32), max_relative = 1e-14);
    }

    #[test]
    fn upper_gamma_examples() {
        assert_eq!(regularized_upper_gamma(4, 0.0), 1.0);
        assert_abs_diff_eq!(regularized_upper_gamma(1, 2f64.ln()), 0.5, epsilon = 1e-15);
        // e^{-2}(1 + 2 + 2) = 5 e^{-2}
        assert_abs_diff_eq!(regularized_upper_gamma(3, 2.0), 5.0 * (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(regularized_upper_gamma(3, 2.0), 0.676_676_416_183_063_9, epsilon = 1e-15);
    }

    #[test]
    fn complement_sums_to_one() {
        for n in [1u32, 2, 5, 21, 60] {
            for x in [1e-6, 0.3, 1.0, 4.0, 20.0, 80.0] {
                let s = regularized_upper_gamma(n, x) + regularized_lower_gamma(n, x);
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn lower_gamma_keeps_relative_precision_in_tail() {
        // P(21, 1e-3) = e^{-x} Σ_{k≥21} x^k/k! ≈ x^21 / 21!
        let x: f64 = 1e-3;
        let lead = (21.0 * x.ln() - ln_factorial(21)).exp();
        let expected = lead * (-x).exp() * (1.0 + x / 22.0 + x * x / (22.0 * 23.0));
        assert_relative_eq!(regularized_lower_gamma(21, x), expected, max_relative = 1e-13);
    }

    #[test]
    fn real_order_pair_matches_integer_sum() {
        for n in [1u32, 3, 12, 40] {
            for x in [0.1, 2.0, 11.0, 39.5, 75.0] {
                let (p, q) = regularized_gamma_pq(n as f64, x);
                assert_abs_diff_eq!(q, regularized_upper_gamma(n, x), epsilon = 1e-13);
                assert_abs_diff_eq!(p, regularized_lower_gamma(n, x), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn huge_argument_underflows_to_zero() {
        assert_eq!(regularized_upper_gamma(21, 5000.0), 0.0);
        assert_eq!(regularized_lower_gamma(21, 5000.0), 1.0);
    }
}
