//! First-order Marcum-Q function via its Poisson-mixture series
//! `Q₁(a, b) = Σ_k e^{-λ} λ^k / k! · Q(k+1, b²/2)`, `λ = a²/2`.

use super::gamma::{ln_factorial, regularized_gamma_pq};

/// Poisson weights below this are dropped.
const WEIGHT_CUTOFF: f64 = 1e-17;

/// First-order Marcum-Q function, `P(X > b)` for `X` a Rician envelope with
/// noncentrality `a` and unit per-dimension variance.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    marcum_pair(a, b).0
}

/// Complement `1 - Q₁(a, b)`, accurate when it is small.
pub fn marcum_p1(a: f64, b: f64) -> f64 {
    marcum_pair(a, b).1
}

fn marcum_pair(a: f64, b: f64) -> (f64, f64) {
    assert!(a >= 0.0 && b >= 0.0, "Marcum-Q arguments must be non-negative, got ({a}, {b})");
    if b == 0.0 {
        return (1.0, 0.0);
    }
    let lambda = 0.5 * a * a;
    let x = 0.5 * b * b;
    if lambda == 0.0 {
        return ((-x).exp(), -(-x).exp_m1());
    }
    if x.is_infinite() {
        return (0.0, 1.0);
    }

    let ln_lambda = lambda.ln();
    let ln_x = x.ln();
    let weight = |k: u64| (-lambda + k as f64 * ln_lambda - ln_factorial(k)).exp();
    // e^{-x} x^j / j!
    let poisson_x = |j: u64| (-x + j as f64 * ln_x - ln_factorial(j)).exp();

    // Poisson mass more than ~9 standard deviations below the mean is < e^{-40}.
    let k_lo = (lambda - 9.0 * lambda.sqrt() - 10.0).max(0.0).floor() as u64;

    // Upward pass: Q(k+1, x) only grows with k, so its recurrence adds.
    let mut q_k = regularized_gamma_pq(k_lo as f64 + 1.0, x).1;
    let mut q_sum = 0.0;
    let mut k = k_lo;
    loop {
        let w = weight(k);
        q_sum += w * q_k;
        // Past the mode the remaining weights form a dominated geometric tail.
        if k as f64 > lambda && w < WEIGHT_CUTOFF {
            break;
        }
        q_k = (q_k + poisson_x(k + 1)).min(1.0);
        k += 1;
    }
    let k_hi = k;

    // Downward pass: P(k+1, x) grows as k decreases.
    let mut p_k = regularized_gamma_pq(k_hi as f64 + 1.0, x).0;
    let mut p_sum = 0.0;
    for k in (k_lo..=k_hi).rev() {
        p_sum += weight(k) * p_k;
        p_k = (p_k + poisson_x(k)).min(1.0);
    }

    let q = if q_sum <= 0.5 { q_sum } else { 1.0 - p_sum };
    let p = if p_sum <= 0.5 { p_sum } else { 1.0 - q_sum };
    (q.clamp(0.0, 1.0), p.clamp(0.0, 1.0))
}
