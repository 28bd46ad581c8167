//! Closed-form outage probabilities of the four receivers.
//!
//! All evaluators take the configured stream index. With identical gains the
//! direct, RIS and full-CSI laws do not depend on it; the joint receiver's
//! does, because the QR diagonal `r_ii²` of an N×M Gaussian matrix has
//! `N - i` complex degrees of freedom (0-based `i`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ScaleMode, SystemConfig};
use crate::detectors::Scheme;
use crate::error::{Error, Result};
use crate::specfun::{
    integrate, integrate_to_infinity, kummer_1f1_c2_scaled, ln_factorial, marcum_p1, product_gamma_cdf, product_gamma_pdf,
    regularized_lower_gamma, QuadratureSpec,
};

/// Evaluation route for the unconditional joint-receiver outage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointMethod {
    /// Finite Kummer-series closed form. Its constants assume
    /// [`ScaleMode::Paper`].
    Printed,
    /// Adaptive quadrature of the conditional outage against the Gamma law
    /// of the coherent part. Valid for any scale mode.
    #[default]
    Quadrature,
}

impl JointMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            JointMethod::Printed => "printed",
            JointMethod::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for JointMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JointMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "printed" => Ok(JointMethod::Printed),
            "quadrature" => Ok(JointMethod::Quadrature),
            other => Err(Error::config(format!("unknown joint method '{other}' (expected printed|quadrature)"))),
        }
    }
}

/// Settings shared by every analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalyticOptions {
    pub scale_mode: ScaleMode,
    pub joint_method: JointMethod,
    #[serde(skip)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub scheme: Scheme,
    pub stream: usize,
    pub gamma_th: f64,
    pub probability: f64,
}

fn check_stream(cfg: &SystemConfig, i: usize) -> Result<()> {
    if i >= cfg.streams {
        return Err(Error::config(format!("stream index {i} out of range for M = {}", cfg.streams)));
    }
    Ok(())
}

fn check_threshold(gamma_th: f64) -> Result<()> {
    if !(gamma_th >= 0.0) {
        return Err(Error::config(format!("outage threshold must be non-negative, got {gamma_th}")));
    }
    Ok(())
}

fn zf_shape(cfg: &SystemConfig) -> u32 {
    (cfg.antennas - cfg.streams + 1) as u32
}

/// Direct-link CSI: the normalized SNR is `Gamma(N - M + 1)`.
pub fn outage_direct(cfg: &SystemConfig, i: usize, gamma_th: f64) -> Result<f64> {
    check_stream(cfg, i)?;
    check_threshold(gamma_th)?;
    let p = cfg.snr;
    let inflation = p * cfg.ris_elements as f64 * cfg.gain_ris_rx * cfg.sum_gain_tx_ris() + 1.0;
    Ok(regularized_lower_gamma(zf_shape(cfg), gamma_th * inflation / (p * cfg.gain_direct[i])))
}

fn check_ris_dims(cfg: &SystemConfig) -> Result<()> {
    if !cfg.supports_ris_analysis() {
        return Err(Error::config(format!(
            "RIS-only outage requires N >= L >= M, got N = {}, L = {}, M = {}",
            cfg.antennas, cfg.ris_elements, cfg.streams
        )));
    }
    Ok(())
}

/// `κ` such that the RIS-only SNR is `U V / κ` with unit-scale Gamma
/// variables `U`, `V`.
fn ris_kappa(cfg: &SystemConfig, i: usize) -> f64 {
    let p = cfg.snr;
    (p * cfg.sum_gain_direct() + 1.0) / (p * cfg.gain_ris_rx * cfg.gain_tx_ris[i])
}

fn ris_shapes(cfg: &SystemConfig) -> (u32, u32) {
    (zf_shape(cfg), (cfg.ris_elements - cfg.streams + 1) as u32)
}

/// Cascaded-link CSI: product of `Gamma(N - M + 1)` and `Gamma(L - M + 1)`.
pub fn outage_ris(cfg: &SystemConfig, i: usize, gamma_th: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_stream(cfg, i)?;
    check_threshold(gamma_th)?;
    check_ris_dims(cfg)?;
    let (n1, n2) = ris_shapes(cfg);
    Ok(product_gamma_cdf(n1, n2, ris_kappa(cfg, i) * gamma_th, quad)?)
}

/// Density of the RIS-only SNR at `gamma > 0`.
pub fn pdf_ris(cfg: &SystemConfig, i: usize, gamma: f64) -> Result<f64> {
    check_stream(cfg, i)?;
    check_ris_dims(cfg)?;
    let (n1, n2) = ris_shapes(cfg);
    let kappa = ris_kappa(cfg, i);
    Ok(kappa * product_gamma_pdf(n1, n2, kappa * gamma)?)
}

/// Full CSI with the cascaded link replaced by its Gaussian surrogate.
pub fn outage_full_clt(cfg: &SystemConfig, i: usize, gamma_th: f64, mode: ScaleMode) -> Result<f64> {
    check_stream(cfg, i)?;
    check_threshold(gamma_th)?;
    let scale = cfg.snr * (cfg.gain_direct[i] + mode.psi2(cfg, i));
    Ok(regularized_lower_gamma(zf_shape(cfg), gamma_th / scale))
}

/// Joint receiver outage given the coherent energy `y = p r_ii²`.
pub fn outage_joint_conditional(y: f64, cfg: &SystemConfig, i: usize, gamma_th: f64, mode: ScaleMode) -> Result<f64> {
    check_stream(cfg, i)?;
    check_threshold(gamma_th)?;
    if !(y >= 0.0) {
        return Err(Error::config(format!("coherent energy must be non-negative, got {y}")));
    }
    let sigma2 = 0.5 * cfg.snr * mode.psi2(cfg, i);
    Ok(marcum_p1((y / sigma2).sqrt(), (gamma_th / sigma2).sqrt()))
}

/// Shape of `r_ii²` for the 0-based stream `i`.
pub fn joint_coherent_shape(cfg: &SystemConfig, i: usize) -> u32 {
    (cfg.antennas - i) as u32
}

/// Unconditional joint-receiver outage.
pub fn outage_joint(
    cfg: &SystemConfig,
    i: usize,
    gamma_th: f64,
    mode: ScaleMode,
    method: JointMethod,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_stream(cfg, i)?;
    check_threshold(gamma_th)?;
    match method {
        JointMethod::Printed => {
            if mode != ScaleMode::Paper {
                return Err(Error::config(format!(
                    "the printed joint closed form assumes scale mode 'paper', got '{mode}'; use the quadrature method"
                )));
            }
            Ok(joint_printed(cfg, i, gamma_th))
        }
        JointMethod::Quadrature => joint_quadrature(cfg, i, gamma_th, mode, quad),
    }
}

fn joint_printed(cfg: &SystemConfig, i: usize, gamma_th: f64) -> f64 {
    if gamma_th == 0.0 {
        return 0.0;
    }
    let k = joint_coherent_shape(cfg, i);
    let p = cfg.snr;
    let l = cfg.ris_elements as f64;
    let xi_d = cfg.gain_direct[i];
    let c = cfg.gain_ris_rx * cfg.gain_tx_ris[i];
    let rayleigh = l * gamma_th / (p * c);
    let z = l * l * gamma_th / (l * p * c + p * c * c / xi_d);
    let ratio = l * xi_d / c + 1.0;
    // z - Lγ/(pc) = -γ/(pξ_D + pc/L), never positive.
    let envelope = (z - rayleigh).exp();
    let mut sum = 0.0;
    let mut weight = z;
    for a in 1..=k {
        sum += weight * envelope * kummer_1f1_c2_scaled(a, z);
        weight /= ratio;
    }
    (1.0 - (-rayleigh).exp() - sum).clamp(0.0, 1.0)
}

fn joint_quadrature(cfg: &SystemConfig, i: usize, gamma_th: f64, mode: ScaleMode, quad: &QuadratureSpec) -> Result<f64> {
    if gamma_th == 0.0 {
        return Ok(0.0);
    }
    let k = joint_coherent_shape(cfg, i);
    let theta = cfg.snr * cfg.gain_direct[i];
    let sigma2 = 0.5 * cfg.snr * mode.psi2(cfg, i);
    let b = (gamma_th / sigma2).sqrt();
    let shape = f64::from(k) - 1.0;
    let ln_norm = ln_factorial(u64::from(k) - 1);
    // y = θ u with u ~ Gamma(k, 1).
    let integrand = |u: f64| {
        if u <= 0.0 {
            return if k == 1 { marcum_p1(0.0, b) } else { 0.0 };
        }
        let density = (shape * u.ln() - u - ln_norm).exp();
        if density == 0.0 {
            return 0.0;
        }
        density * marcum_p1((theta * u / sigma2).sqrt(), b)
    };
    // Past `reach` the Gamma density carries no representable mass, so a
    // threshold beyond it is not a useful breakpoint.
    let reach = f64::from(k) + 10.0 * f64::from(k).sqrt() + 50.0;
    let mut splits = vec![shape.max(0.0), gamma_th / theta];
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

/// High-SNR limit of the outage for schemes with a floor, `None` otherwise.
pub fn outage_floor(scheme: Scheme, cfg: &SystemConfig, i: usize, gamma_th: f64, quad: &QuadratureSpec) -> Result<Option<f64>> {
    check_stream(cfg, i)?;
    check_threshold(gamma_th)?;
    match scheme {
        Scheme::DirectCsi => {
            let kappa = cfg.ris_elements as f64 * cfg.gain_ris_rx * cfg.sum_gain_tx_ris() / cfg.gain_direct[i];
            Ok(Some(regularized_lower_gamma(zf_shape(cfg), kappa * gamma_th)))
        }
        Scheme::RisCsi => {
            check_ris_dims(cfg)?;
            let (n1, n2) = ris_shapes(cfg);
            let kappa = cfg.sum_gain_direct() / (cfg.gain_ris_rx * cfg.gain_tx_ris[i]);
            Ok(Some(product_gamma_cdf(n1, n2, kappa * gamma_th, quad)?))
        }
        Scheme::FullCsi | Scheme::Joint => Ok(None),
    }
}

/// Dispatches to the evaluator of `scheme`.
pub fn outage(scheme: Scheme, cfg: &SystemConfig, i: usize, gamma_th: f64, opts: &AnalyticOptions) -> Result<OutagePoint> {
    let probability = match scheme {
        Scheme::DirectCsi => outage_direct(cfg, i, gamma_th)?,
        Scheme::RisCsi => outage_ris(cfg, i, gamma_th, &opts.quad)?,
        Scheme::FullCsi => outage_full_clt(cfg, i, gamma_th, opts.scale_mode)?,
        Scheme::Joint => outage_joint(cfg, i, gamma_th, opts.scale_mode, opts.joint_method, &opts.quad)?,
    };
    Ok(OutagePoint {
        scheme,
        stream: i,
        gamma_th,
        probability,
    })
}
