//! Integer-order modified Bessel functions of the second kind.
//!
//! `K_0` and `K_1` come from their logarithmic power series for `x < 2` and
//! from the integral `∫₀^∞ e^{-x cosh t} cosh(νt) dt` otherwise; higher orders
//! follow by the (stable) upward recurrence.

use super::SpecFunError;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
/// Trapezoid step in `t`. The integrand is analytic in the strip
/// `|Im t| < π/2`, so the discretization error is about `exp(-π²/h)`.
const TRAPEZOID_STEP: f64 = 0.125;

/// `K_ν(x)` for integer `ν ≥ 0` and `x > 0`.
pub fn bessel_k_int(nu: u32, x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || x.is_nan() {
        return Err(SpecFunError::Domain(format!("K_nu requires x > 0, got {x}")));
    }
    let (k0, k1) = if x < SERIES_LIMIT { k01_series(x) } else { k01_integral(x) };
    if nu == 0 {
        return Ok(k0);
    }
    let (mut prev, mut cur) = (k0, k1);
    for n in 1..nu {
        let next = prev + 2.0 * n as f64 / x * cur;
        prev = cur;
        cur = next;
        if !cur.is_finite() {
            break;
        }
    }
    if !cur.is_finite() {
        return Err(SpecFunError::Range(format!("K_{nu}({x}) overflows")));
    }
    Ok(cur)
}

/// Signed-order wrapper, using `K_{-ν} = K_ν`.
pub fn bessel_k(nu: i32, x: f64) -> Result<f64, SpecFunError> {
    bessel_k_int(nu.unsigned_abs(), x)
}

/// Meijer `G^{2,0}_{0,2}[x | a, b] = 2 x^{(a+b)/2} K_{a-b}(2√x)` for
/// non-negative integers `a`, `b`.
pub fn meijer_g20_02(x: f64, a: u32, b: u32) -> Result<f64, SpecFunError> {
    if x < 0.0 {
        return Err(SpecFunError::Domain(format!("Meijer-G argument must be non-negative, got {x}")));
    }
    if x == 0.0 {
        // Limits at the origin: 0 if both parameters are positive, Γ(max(a, b))
        // if exactly one is zero, logarithmic divergence if both are.
        return match (a.min(b), a.max(b)) {
            (0, 0) => Err(SpecFunError::Range("G^{2,0}_{0,2}[0 | 0, 0] diverges".into())),
            (0, m) => Ok(super::ln_factorial(u64::from(m) - 1).exp()),
            _ => Ok(0.0),
        };
    }
    let k = bessel_k(a as i32 - b as i32, 2.0 * x.sqrt())?;
    if k == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * (0.5 * (a + b) as f64 * x.ln() + k.ln()).exp())
}

fn k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let log_half = (0.5 * x).ln();

    // I_0, I_1 and the digamma-weighted sums share the same power of y.
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut t0 = 1.0; // y^k / (k!)^2
    let mut t1 = 1.0; // y^k / (k! (k+1)!)
    let mut harmonic = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            t0 *= y / (kf * kf);
            t1 *= y / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let harmonic_next = harmonic + 1.0 / (kf + 1.0);
        i0 += t0;
        i1 += t1;
        s0 += harmonic * t0;
        s1 += (harmonic + harmonic_next - 2.0 * EULER_GAMMA) * t1;
        if t0 < 1e-18 * i0 && t1 < 1e-18 * i1 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * s1;
    (k0, k1)
}

fn k01_integral(x: f64) -> (f64, f64) {
    // e^{-x} ∫ e^{-x (cosh t - 1)} cosh(νt) dt, trapezoid on [0, ∞).
    let h = TRAPEZOID_STEP;
    let mut s0 = 0.5;
    let mut s1 = 0.5;
    let mut j = 1;
    loop {
        let t = j as f64 * h;
        let c = t.cosh();
        let e = (-x * (c - 1.0)).exp();
        s0 += e;
        s1 += e * c;
        if e * c < 1e-18 * s1 {
            break;
        }
        j += 1;
    }
    let scale = h * (-x).exp();
    (scale * s0, scale * s1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{integrate_to_infinity, QuadratureSpec};
    use approx::assert_relative_eq;

    fn oracle(nu: u32, x: f64) -> f64 {
        let spec = QuadratureSpec::new(1e-13, 1e-300, 400).unwrap();
        integrate_to_infinity(|t: f64| (-x * t.cosh()).exp() * (nu as f64 * t).cosh(), 0.0, &spec)
            .unwrap()
            .value
    }

    #[test]
    fn known_values() {
        assert_relative_eq!(bessel_k_int(0, 1.0).unwrap(), 0.421_024_438_240_708_3, max_relative = 1e-14);
        assert_relative_eq!(bessel_k_int(1, 2.0).unwrap(), 0.139_865_881_816_522_4, max_relative = 1e-14);
        assert_relative_eq!(bessel_k_int(0, 0.5).unwrap(), 0.924_419_071_227_665_6, max_relative = 1e-14);
        assert_relative_eq!(bessel_k_int(3, 0.7).unwrap(), 21.972_169_025_650_94, max_relative = 1e-13);
        assert_relative_eq!(bessel_k_int(5, 4.0).unwrap(), 0.154_342_548_725_997_1, max_relative = 1e-13);
    }

    #[test]
    fn matches_integral_oracle() {
        for nu in 0..6 {
            for x in [0.3, 1.0, 1.99, 2.0, 3.7, 10.0, 35.0] {
                let k = bessel_k_int(nu, x).unwrap();
                assert_relative_eq!(k, oracle(nu, x), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn signed_order_symmetry() {
        for nu in 0..5 {
            assert_eq!(bessel_k(-nu, 1.3).unwrap(), bessel_k(nu, 1.3).unwrap());
        }
    }

    #[test]
    fn domain_and_range_errors() {
        assert!(matches!(bessel_k_int(0, 0.0), Err(SpecFunError::Domain(_))));
        assert!(matches!(bessel_k_int(0, -1.0), Err(SpecFunError::Domain(_))));
        assert!(matches!(bessel_k_int(200, 1e-6), Err(SpecFunError::Range(_))));
    }

    #[test]
    fn meijer_form_matches_bessel() {
        // G^{2,0}_{0,2}[x | 0, 0] = 2 K_0(2√x)
        let g = meijer_g20_02(0.25, 0, 0).unwrap();
        assert_relative_eq!(g, 2.0 * bessel_k_int(0, 1.0).unwrap(), max_relative = 1e-14);
        assert_eq!(meijer_g20_02(0.0, 2, 3).unwrap(), 0.0);
        assert_relative_eq!(meijer_g20_02(0.0, 0, 4).unwrap(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(meijer_g20_02(1e-10, 0, 4).unwrap(), 6.0, max_relative = 1e-6);
        assert!(meijer_g20_02(0.0, 0, 0).is_err());
    }
}
