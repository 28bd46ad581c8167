//! Per-stream post-detection SNR of the four receivers.
//!
//! * `DirectCsi`: zero-forcing on the direct link; the RIS path is noise.
//! * `RisCsi`: zero-forcing on the cascaded link; the direct path is noise.
//! * `FullCsi`: zero-forcing on the full composite channel.
//! * `Joint`: QR-based zero-forcing on the direct link, with the RIS
//!   contribution on each diagonal entry collected noncoherently.
//!
//! Every SNR factors as `p · g` over an affine function of `p`, where the
//! gain `g` depends only on the channel draw. [`TrialGains`] computes those
//! gains once per draw so a single realization can be scored at any SNR.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SystemConfig};
use crate::cmatrix::{HouseholderQr, LinalgError};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    DirectCsi,
    RisCsi,
    FullCsi,
    Joint,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::DirectCsi, Scheme::RisCsi, Scheme::FullCsi, Scheme::Joint];

    /// Short command-line label.
    pub fn label(self) -> &'static str {
        match self {
            Scheme::DirectCsi => "d",
            Scheme::RisCsi => "ris",
            Scheme::FullCsi => "full",
            Scheme::Joint => "joint",
        }
    }

    /// Legend name used in plots.
    pub fn display_name(self) -> &'static str {
        match self {
            Scheme::DirectCsi => "D",
            Scheme::RisCsi => "RIS",
            Scheme::FullCsi => "D+RIS",
            Scheme::Joint => "Joint",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }

    /// Whether the SNR saturates as the transmit power grows.
    pub fn has_floor(self) -> bool {
        matches!(self, Scheme::DirectCsi | Scheme::RisCsi)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "direct" => Ok(Scheme::DirectCsi),
            "ris" => Ok(Scheme::RisCsi),
            "full" | "d+ris" => Ok(Scheme::FullCsi),
            "joint" => Ok(Scheme::Joint),
            other => Err(Error::config(format!("unknown scheme '{other}' (expected d|ris|full|joint)"))),
        }
    }
}

/// Per-stream SNRs of one scheme on one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSample {
    pub scheme: Scheme,
    pub gamma: Vec<f64>,
}

/// `γ_th = 2^R - 1`.
pub fn threshold_from_rate(rate: f64) -> f64 {
    if rate < 1.0 {
        (rate * std::f64::consts::LN_2).exp_m1()
    } else {
        rate.exp2() - 1.0
    }
}

/// Inverse of [`threshold_from_rate`].
pub fn rate_from_threshold(gamma_th: f64) -> f64 {
    if gamma_th < 1.0 {
        gamma_th.ln_1p() / std::f64::consts::LN_2
    } else {
        (gamma_th + 1.0).log2()
    }
}

/// Interference-plus-noise power the scheme treats as noise, per unit of
/// `1/[Gram^{-1}]_{ii}`.
fn noise_inflation(scheme: Scheme, cfg: &SystemConfig) -> f64 {
    let p = cfg.snr;
    match scheme {
        Scheme::DirectCsi => p * cfg.ris_elements as f64 * cfg.gain_ris_rx * cfg.sum_gain_tx_ris() + 1.0,
        Scheme::RisCsi => p * cfg.sum_gain_direct() + 1.0,
        Scheme::FullCsi | Scheme::Joint => 1.0,
    }
}

/// SNR from a p-independent gain.
#[inline]
pub fn snr_from_gain(scheme: Scheme, cfg: &SystemConfig, gain: f64) -> f64 {
    cfg.snr * gain / noise_inflation(scheme, cfg)
}

/// High-SNR ceiling from a p-independent gain. Infinite for schemes without
/// a floor.
pub fn floor_from_gain(scheme: Scheme, cfg: &SystemConfig, gain: f64) -> f64 {
    match scheme {
        Scheme::DirectCsi => gain / (cfg.ris_elements as f64 * cfg.gain_ris_rx * cfg.sum_gain_tx_ris()),
        Scheme::RisCsi => gain / cfg.sum_gain_direct(),
        Scheme::FullCsi | Scheme::Joint => f64::INFINITY,
    }
}

/// Per-stream gains of the requested schemes on one realization.
///
/// Direct and joint detection share the QR of `H_D`; RIS, full and joint
/// detection share the cascaded product.
#[derive(Debug, Clone)]
pub struct TrialGains {
    gains: [Option<std::result::Result<Vec<f64>, LinalgError>>; 4],
}

impl TrialGains {
    pub fn compute(real: &ChannelRealization, schemes: &[Scheme]) -> Self {
        let wants = |s: Scheme| schemes.contains(&s);
        let mut gains: [Option<std::result::Result<Vec<f64>, LinalgError>>; 4] = Default::default();

        let direct_qr = (wants(Scheme::DirectCsi) || wants(Scheme::Joint)).then(|| HouseholderQr::factor(&real.direct));
        let cascaded = (wants(Scheme::RisCsi) || wants(Scheme::FullCsi) || wants(Scheme::Joint)).then(|| real.cascaded());

        if wants(Scheme::DirectCsi) {
            let qr = direct_qr.as_ref().expect("factored above");
            gains[0] = Some(qr.clone().map(|qr| invert_all(qr.gram_inverse_diag())));
        }
        if wants(Scheme::RisCsi) {
            let c = cascaded.as_ref().expect("formed above");
            gains[1] = Some(HouseholderQr::factor(c).map(|qr| invert_all(qr.gram_inverse_diag())));
        }
        if wants(Scheme::FullCsi) {
            let c = cascaded.as_ref().expect("formed above");
            let composite = real.direct.add(c).expect("consistent dimensions");
            gains[2] = Some(HouseholderQr::factor(&composite).map(|qr| invert_all(qr.gram_inverse_diag())));
        }
        if wants(Scheme::Joint) {
            let qr = direct_qr.as_ref().expect("factored above");
            let c = cascaded.as_ref().expect("formed above");
            gains[3] = Some(qr.clone().and_then(|qr| joint_gains(&qr, c)));
        }
        Self { gains }
    }

    /// Gains of `scheme`, or `None` if it was not requested.
    pub fn get(&self, scheme: Scheme) -> Option<std::result::Result<&[f64], &LinalgError>> {
        self.gains[scheme.index()].as_ref().map(|r| r.as_deref())
    }
}

fn invert_all(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| 1.0 / x).collect()
}

/// `|r_ii + [Q^H X]_ii|²` per stream.
fn joint_gains(qr: &HouseholderQr, cascaded: &crate::cmatrix::CMatrix) -> std::result::Result<Vec<f64>, LinalgError> {
    let rotated = qr.qh_product_diag(cascaded)?;
    Ok(qr
        .r_diag()
        .into_iter()
        .zip(rotated)
        .map(|(r, x)| (x + r).norm_sqr())
        .collect())
}

fn sample(real: &ChannelRealization, cfg: &SystemConfig, scheme: Scheme) -> Result<SnrSample> {
    let gains = TrialGains::compute(real, &[scheme]);
    let g = gains.get(scheme).expect("requested").map_err(|e| Error::Linalg(e.clone()))?;
    Ok(SnrSample {
        scheme,
        gamma: g.iter().map(|&g| snr_from_gain(scheme, cfg, g)).collect(),
    })
}

fn floors(real: &ChannelRealization, cfg: &SystemConfig, scheme: Scheme) -> Result<Vec<f64>> {
    let gains = TrialGains::compute(real, &[scheme]);
    let g = gains.get(scheme).expect("requested").map_err(|e| Error::Linalg(e.clone()))?;
    Ok(g.iter().map(|&g| floor_from_gain(scheme, cfg, g)).collect())
}

/// `γ_i = p / ((p L ξ²_H Σξ²_G + 1) [(H_D^H H_D)^{-1}]_ii)`.
pub fn snr_direct(real: &ChannelRealization, cfg: &SystemConfig) -> Result<SnrSample> {
    sample(real, cfg, Scheme::DirectCsi)
}

/// `γ_i = p / ((p Σξ²_D + 1) [((HΦG)^H HΦG)^{-1}]_ii)`.
pub fn snr_ris(real: &ChannelRealization, cfg: &SystemConfig) -> Result<SnrSample> {
    if cfg.ris_elements < cfg.streams {
        return Err(Error::config(format!(
            "RIS-only detection needs L >= M, got L = {}, M = {}",
            cfg.ris_elements, cfg.streams
        )));
    }
    sample(real, cfg, Scheme::RisCsi)
}

/// `γ_i = p / [(C^H C)^{-1}]_ii` with `C = H_D + HΦG`.
pub fn snr_full(real: &ChannelRealization, cfg: &SystemConfig) -> Result<SnrSample> {
    sample(real, cfg, Scheme::FullCsi)
}

/// `γ_i = p |[R + Q^H HΦG]_ii|²` with `H_D = QR`.
pub fn snr_joint(real: &ChannelRealization, cfg: &SystemConfig) -> Result<SnrSample> {
    sample(real, cfg, Scheme::Joint)
}

/// Dispatches on `scheme`.
pub fn snr(real: &ChannelRealization, cfg: &SystemConfig, scheme: Scheme) -> Result<SnrSample> {
    match scheme {
        Scheme::DirectCsi => snr_direct(real, cfg),
        Scheme::RisCsi => snr_ris(real, cfg),
        Scheme::FullCsi => snr_full(real, cfg),
        Scheme::Joint => snr_joint(real, cfg),
    }
}

/// `lim_{p→∞} γ_i` under direct-link CSI.
pub fn floor_direct(real: &ChannelRealization, cfg: &SystemConfig) -> Result<Vec<f64>> {
    floors(real, cfg, Scheme::DirectCsi)
}

/// `lim_{p→∞} γ_i` under cascaded-link CSI.
pub fn floor_ris(real: &ChannelRealization, cfg: &SystemConfig) -> Result<Vec<f64>> {
    floors(real, cfg, Scheme::RisCsi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channels, SeedSpec};
    use crate::cmatrix::CMatrix;
    use crate::specfun::marcum_p1;
    use crate::stats::ks_test;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, Gamma};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar_realization(hd: Complex64, h: Complex64, g: Complex64, phi: f64) -> ChannelRealization {
        ChannelRealization {
            direct: CMatrix::from_rows(&[vec![hd]]).unwrap(),
            ris_rx: CMatrix::from_rows(&[vec![h]]).unwrap(),
            tx_ris: CMatrix::from_rows(&[vec![g]]).unwrap(),
            phases: vec![phi],
        }
    }

    fn unit_cfg(n: usize, m: usize, l: usize, snr: f64) -> SystemConfig {
        SystemConfig::uniform(n, m, l, snr, 3.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_from_rate(0.0), 0.0);
        assert_relative_eq!(threshold_from_rate(1.0), 1.0, max_relative = 1e-15);
        assert_eq!(threshold_from_rate(3.0), 7.0);
        assert_eq!(rate_from_threshold(7.0), 3.0);
        assert_relative_eq!(rate_from_threshold(7.0), 3.0, max_relative = 1e-15);
    }

    #[test]
    fn scheme_labels_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.label().parse::<Scheme>().unwrap(), s);
        }
        assert!("x".parse::<Scheme>().is_err());
    }

    #[test]
    fn scalar_reductions() {
        let (hd, h, g, phi) = (c(0.3, -1.1), c(0.8, 0.4), c(-0.5, 0.9), 1.234);
        let real = scalar_realization(hd, h, g, phi);
        let cfg = SystemConfig::uniform(1, 1, 1, 2.5, 1.0, 0.6, 0.9, 1.3).unwrap();
        let p = cfg.snr;
        let rot = Complex64::from_polar(1.0, phi);

        let d = snr_direct(&real, &cfg).unwrap().gamma[0];
        assert_relative_eq!(d, p * hd.norm_sqr() / (p * 1.3 * 0.9 + 1.0), max_relative = 1e-14);
        let r = snr_ris(&real, &cfg).unwrap().gamma[0];
        assert_relative_eq!(r, p * (h * g).norm_sqr() / (p * 0.6 + 1.0), max_relative = 1e-14);
        let f = snr_full(&real, &cfg).unwrap().gamma[0];
        assert_relative_eq!(f, p * (hd + h * rot * g).norm_sqr(), max_relative = 1e-14);
        let j = snr_joint(&real, &cfg).unwrap().gamma[0];
        let expected = (Complex64::new(hd.norm(), 0.0) + Complex64::from_polar(1.0, -hd.arg()) * h * rot * g).norm_sqr();
        assert_relative_eq!(j, p * expected, max_relative = 1e-14);

        assert_relative_eq!(floor_direct(&real, &cfg).unwrap()[0], hd.norm_sqr() / (1.3 * 0.9), max_relative = 1e-14);
        assert_relative_eq!(floor_ris(&real, &cfg).unwrap()[0], (h * g).norm_sqr() / 0.6, max_relative = 1e-14);
    }

    #[test]
    fn orthonormal_direct_link() {
        let (n, m, l) = (4, 2, 3);
        let cfg = unit_cfg(n, m, l, 2.0);
        let mut real = draw_channels(&cfg, SeedSpec::new(1, 0));
        real.direct = CMatrix::from_fn(n, m, |r, col| if r == col { c(0.0, 1.0) } else { c(0.0, 0.0) });
        let g = snr_direct(&real, &cfg).unwrap().gamma;
        for v in g {
            assert_relative_eq!(v, 2.0 / (2.0 * (l * m) as f64 + 1.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn without_ris_path_full_and_joint_reduce_to_direct_zf() {
        let cfg = unit_cfg(5, 3, 4, 1.7);
        let mut real = draw_channels(&cfg, SeedSpec::new(2, 0));
        real.ris_rx = CMatrix::zeros(5, 4);
        let qr = HouseholderQr::factor(&real.direct).unwrap();
        let full = snr_full(&real, &cfg).unwrap().gamma;
        let joint = snr_joint(&real, &cfg).unwrap().gamma;
        for (i, inv) in qr.gram_inverse_diag().into_iter().enumerate() {
            assert_relative_eq!(full[i], 1.7 / inv, max_relative = 1e-12);
        }
        for (i, r) in qr.r_diag().into_iter().enumerate() {
            assert_relative_eq!(joint[i], 1.7 * r * r, max_relative = 1e-12);
        }
    }

    #[test]
    fn ris_snr_with_and_without_phases() {
        // Same (H, G): Φ changes the Gram diagonal per realization but not
        // its distribution. The Φ-free form is the unit-phase realization.
        let cfg = unit_cfg(6, 2, 4, 1.0);
        let real = draw_channels(&cfg, SeedSpec::new(3, 0));
        let with = snr_ris(&real, &cfg).unwrap().gamma;
        let without = snr_ris(&real.with_phases(vec![0.0; 4]), &cfg).unwrap().gamma;
        assert!(with.iter().zip(&without).all(|(a, b)| a.is_finite() && b.is_finite()));
        let again = snr_ris(&real.with_phases(real.phases.clone()), &cfg).unwrap().gamma;
        assert_eq!(with, again);
    }

    #[test]
    fn ris_requires_enough_elements() {
        let cfg = unit_cfg(4, 3, 2, 1.0);
        let real = draw_channels(&cfg, SeedSpec::new(1, 0));
        assert!(matches!(snr_ris(&real, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn floors_are_high_snr_limits() {
        let cfg = unit_cfg(6, 3, 4, 1.0);
        let real = draw_channels(&cfg, SeedSpec::new(4, 0));
        let hi = cfg.with_snr(1e6);
        let fd = floor_direct(&real, &cfg).unwrap();
        let fr = floor_ris(&real, &cfg).unwrap();
        assert_eq!(fd, floor_direct(&real, &cfg.with_snr(37.0)).unwrap());
        assert_eq!(fr, floor_ris(&real, &cfg.with_snr(37.0)).unwrap());
        for (a, b) in snr_direct(&real, &hi).unwrap().gamma.iter().zip(&fd) {
            assert_relative_eq!(*a, *b, max_relative = 1e-3);
            assert!(a < b);
        }
        for (a, b) in snr_ris(&real, &hi).unwrap().gamma.iter().zip(&fr) {
            assert_relative_eq!(*a, *b, max_relative = 1e-3);
            assert!(a < b);
        }
    }

    #[test]
    fn normalized_direct_snr_is_gamma_distributed() {
        let (n, m, l) = (4, 2, 8);
        let cfg = unit_cfg(n, m, l, 1.0);
        let scale = (cfg.snr * l as f64 * cfg.sum_gain_tx_ris() + 1.0) / cfg.snr;
        let samples: Vec<f64> = (0..100_000u64)
            .map(|t| snr_direct(&draw_channels(&cfg, SeedSpec::new(11, t)), &cfg).unwrap().gamma[0] * scale)
            .collect();
        let oracle = Gamma::new((n - m + 1) as f64, 1.0).unwrap();
        let ks = ks_test(&samples, |x| oracle.cdf(x));
        assert!(!ks.rejects(0.01), "{ks:?}");
    }

    #[test]
    fn joint_snr_conditional_on_direct_link_is_noncentral_chi_square() {
        // The noncentral law is a large-L limit; at L = 32 the gap is already
        // visible to a 10^5-sample KS test for some direct links.
        let (n, m, l) = (32, 12, 128);
        let cfg = unit_cfg(n, m, l, 1.0);
        let fixed = draw_channels(&cfg, SeedSpec::new(21, 0)).direct;
        let stream = m - 1;
        let r = HouseholderQr::factor(&fixed).unwrap().r_diag()[stream];
        let y = cfg.snr * r * r;
        let sigma2 = cfg.snr * crate::channel::ScaleMode::Derived.psi2(&cfg, stream) / 2.0;
        let samples: Vec<f64> = (0..100_000u64)
            .map(|t| {
                let mut real = draw_channels(&cfg, SeedSpec::new(22, t));
                real.direct = fixed.clone();
                snr_joint(&real, &cfg).unwrap().gamma[stream]
            })
            .collect();
        let ks = ks_test(&samples, |g| marcum_p1((y / sigma2).sqrt(), (g / sigma2).sqrt()));
        assert!(!ks.rejects(0.01), "{ks:?}");
    }

    fn random_phases(m: usize, seed: u64) -> Vec<Complex64> {
        let real = draw_channels(&unit_cfg(m, m, m, 1.0), SeedSpec::new(seed, 99));
        real.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }

    fn permute_columns(a: &CMatrix, perm: &[usize]) -> CMatrix {
        CMatrix::from_fn(a.rows(), a.cols(), |r, col| a[(r, perm[col])])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn all_snrs_positive_and_coherent_schemes_linear_in_p(seed in any::<u64>(), n in 2usize..7, m in 1usize..3, l in 2usize..5, p in 0.01f64..100.0) {
            let m = m.min(n).min(l);
            let cfg = unit_cfg(n, m, l, p);
            let real = draw_channels(&cfg, SeedSpec::new(seed, 0));
            for s in Scheme::ALL {
                let g = snr(&real, &cfg, s).unwrap().gamma;
                prop_assert!(g.iter().all(|v| *v > 0.0 && v.is_finite()));
            }
            let double = cfg.with_snr(2.0 * p);
            for s in [Scheme::FullCsi, Scheme::Joint] {
                let a = snr(&real, &cfg, s).unwrap().gamma;
                let b = snr(&real, &double, s).unwrap().gamma;
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((y / x - 2.0).abs() < 1e-12);
                }
            }
            for s in [Scheme::DirectCsi, Scheme::RisCsi] {
                let a = snr(&real, &cfg, s).unwrap().gamma;
                let b = snr(&real, &double, s).unwrap().gamma;
                let f = floors(&real, &cfg, s).unwrap();
                for ((x, y), ceiling) in a.iter().zip(&b).zip(&f) {
                    prop_assert!(y >= x && y < ceiling);
                }
            }
        }

        #[test]
        fn joint_snr_ignores_qr_phase_convention(seed in any::<u64>()) {
            let cfg = unit_cfg(6, 3, 4, 1.3);
            let real = draw_channels(&cfg, SeedSpec::new(seed, 0));
            let base = snr_joint(&real, &cfg).unwrap().gamma;
            // Rotating column i of H_D and G together rotates column i of the
            // composite channel; the joint SNR must not notice.
            let rot = random_phases(3, seed);
            let mut rotated = real.clone();
            rotated.direct.scale_columns(&rot);
            rotated.tx_ris.scale_columns(&rot);
            let other = snr_joint(&rotated, &cfg).unwrap().gamma;
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a / b - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn stream_relabelling_permutes_snrs(seed in any::<u64>()) {
            let gd = vec![0.5, 1.0, 2.0];
            let gg = vec![1.5, 0.7, 0.9];
            let cfg = SystemConfig::new(6, 3, 4, 1.1, 3.0, gd.clone(), gg.clone(), 0.8).unwrap();
            let real = draw_channels(&cfg, SeedSpec::new(seed, 0));
            let perm = [2usize, 0, 1];
            let pcfg = SystemConfig::new(6, 3, 4, 1.1, 3.0, perm.iter().map(|&k| gd[k]).collect(), perm.iter().map(|&k| gg[k]).collect(), 0.8).unwrap();
            let preal = ChannelRealization {
                direct: permute_columns(&real.direct, &perm),
                tx_ris: permute_columns(&real.tx_ris, &perm),
                ..real.clone()
            };
            // Joint detection depends on the QR ordering, so it is excluded.
            for s in [Scheme::DirectCsi, Scheme::RisCsi, Scheme::FullCsi] {
                let a = snr(&real, &cfg, s).unwrap().gamma;
                let b = snr(&preal, &pcfg, s).unwrap().gamma;
                for (col, &k) in perm.iter().enumerate() {
                    prop_assert!((b[col] / a[k] - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}
