//! Distribution of the product of two independent unit-scale Gamma variables
//! with integer shapes.
//!
//! The CDF is the Meijer function `z G^{2,1}_{1,3}[z | 0; n1-1, n2-1, -1]`
//! divided by `Γ(n1) Γ(n2)`. It is evaluated here as the mixture integral
//! `∫ P(n1, z/v) f_{n2}(v) dv`, split at `v = √z` where the integrand peaks.

use super::gamma::{ln_factorial, regularized_lower_gamma};
use super::quadrature::{integrate, integrate_to_infinity, QuadratureSpec};
use super::{meijer_g20_02, SpecFunError};

/// `P(U V ≤ z)` with `U ~ Gamma(n1, 1)` and `V ~ Gamma(n2, 1)` independent.
pub fn product_gamma_cdf(n1: u32, n2: u32, z: f64, quad: &QuadratureSpec) -> Result<f64, SpecFunError> {
    if n1 == 0 || n2 == 0 {
        return Err(SpecFunError::Domain(format!("shapes must be positive, got ({n1}, {n2})")));
    }
    if !(z >= 0.0) {
        return Err(SpecFunError::Domain(format!("threshold must be non-negative, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    let ln_norm = ln_factorial(u64::from(n2) - 1);
    let shape = f64::from(n2) - 1.0;
    let integrand = |v: f64| {
        if v <= 0.0 {
            return 0.0;
        }
        let density = (shape * v.ln() - v - ln_norm).exp();
        if density == 0.0 {
            return 0.0;
        }
        density * regularized_lower_gamma(n1, z / v)
    };
    // Breakpoints: the density mode, the symmetry point √z and the
    // transition of P(n1, z/v). Only those inside the density's reach help.
    let n2f = f64::from(n2);
    let reach = n2f + 10.0 * n2f.sqrt() + 50.0;
    let mut splits = vec![shape, z.sqrt(), z / f64::from(n1)];
    splits.retain(|s| *s > 0.0 && *s < reach);
    splits.sort_by(f64::total_cmp);
    splits.dedup();
    let mut total = 0.0;
    let mut lo = 0.0;
    for s in splits {
        total += integrate(integrand, lo, s, quad)?.value;
        lo = s;
    }
    total += integrate_to_infinity(integrand, lo, quad)?.value;
    Ok(total.clamp(0.0, 1.0))
}

/// Density of `U V` at `z > 0`, through the `G^{2,0}_{0,2}` Bessel form.
pub fn product_gamma_pdf(n1: u32, n2: u32, z: f64) -> Result<f64, SpecFunError> {
    if n1 == 0 || n2 == 0 {
        return Err(SpecFunError::Domain(format!("shapes must be positive, got ({n1}, {n2})")));
    }
    let g = meijer_g20_02(z, n1 - 1, n2 - 1)?;
    Ok(g * (-ln_factorial(u64::from(n1) - 1) - ln_factorial(u64::from(n2) - 1)).exp())
}
