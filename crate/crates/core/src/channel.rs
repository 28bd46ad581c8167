//! Scenario configuration and random channel generation.
//!
//! One realization holds the direct link `H_D` (N×M), the RIS-to-receiver
//! link `H` (N×L), the transmitter-to-RIS link `G` (L×M) and the RIS phase
//! vector. All links are independent Rayleigh fading; column `i` of `H_D`
//! and `G` carries the large-scale gain of transmitter `i`.
//!
//! Randomness is counter based: a [`SeedSpec`] selects a ChaCha8 key (from
//! the master seed) and stream (the trial index), so any trial can be
//! regenerated on its own, on any thread, in any order.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cmatrix::CMatrix;
use crate::error::{Error, Result};

/// Every scenario parameter. Noise variance is fixed at one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Receive antennas `N`.
    pub antennas: usize,
    /// Transmitted streams (single-antenna users) `M`.
    pub streams: usize,
    /// RIS elements `L`.
    pub ris_elements: usize,
    /// Transmit SNR `p`, linear.
    pub snr: f64,
    /// Target rate `R` in bps/Hz.
    pub rate: f64,
    /// Direct-link gains `ξ²_{D,i}`, one per stream.
    pub gain_direct: Vec<f64>,
    /// Transmitter-to-RIS gains `ξ²_{G,i}`, one per stream.
    pub gain_tx_ris: Vec<f64>,
    /// RIS-to-receiver gain `ξ²_H`.
    pub gain_ris_rx: f64,
}

impl SystemConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        antennas: usize,
        streams: usize,
        ris_elements: usize,
        snr: f64,
        rate: f64,
        gain_direct: Vec<f64>,
        gain_tx_ris: Vec<f64>,
        gain_ris_rx: f64,
    ) -> Result<Self> {
        let cfg = Self {
            antennas,
            streams,
            ris_elements,
            snr,
            rate,
            gain_direct,
            gain_tx_ris,
            gain_ris_rx,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Identical large-scale gains for every stream.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        antennas: usize,
        streams: usize,
        ris_elements: usize,
        snr: f64,
        rate: f64,
        gain_direct: f64,
        gain_tx_ris: f64,
        gain_ris_rx: f64,
    ) -> Result<Self> {
        Self::new(
            antennas,
            streams,
            ris_elements,
            snr,
            rate,
            vec![gain_direct; streams],
            vec![gain_tx_ris; streams],
            gain_ris_rx,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m, l) = (self.antennas, self.streams, self.ris_elements);
        if m == 0 || l == 0 {
            return Err(Error::config(format!("need M >= 1 and L >= 1, got M = {m}, L = {l}")));
        }
        if n < m {
            return Err(Error::config(format!("need N >= M, got N = {n}, M = {m}")));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(Error::config(format!("transmit SNR must be positive and finite, got {}", self.snr)));
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return Err(Error::config(format!("rate must be non-negative, got {}", self.rate)));
        }
        for (name, gains) in [("direct", &self.gain_direct), ("tx-RIS", &self.gain_tx_ris)] {
            if gains.len() != m {
                return Err(Error::config(format!("{name} gain vector has {} entries, expected M = {m}", gains.len())));
            }
            if let Some(g) = gains.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
                return Err(Error::config(format!("{name} gains must be positive, got {g}")));
            }
        }
        if !(self.gain_ris_rx > 0.0) || !self.gain_ris_rx.is_finite() {
            return Err(Error::config(format!("RIS-rx gain must be positive, got {}", self.gain_ris_rx)));
        }
        Ok(())
    }

    pub fn with_snr(&self, snr: f64) -> Self {
        Self { snr, ..self.clone() }
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        self.with_snr(db_to_linear(snr_db))
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        Self { rate, ..self.clone() }
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr.log10()
    }

    pub fn sum_gain_direct(&self) -> f64 {
        self.gain_direct.iter().sum()
    }

    pub fn sum_gain_tx_ris(&self) -> f64 {
        self.gain_tx_ris.iter().sum()
    }

    /// Whether `N ≥ L ≥ M`, required by the RIS-only closed form.
    pub fn supports_ris_analysis(&self) -> bool {
        self.antennas >= self.ris_elements && self.ris_elements >= self.streams
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Key and stream selecting one independent random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Same master seed, stream advanced by `offset`.
    pub fn offset(self, offset: u64) -> Self {
        Self {
            master: self.master,
            stream: self.stream.wrapping_add(offset),
        }
    }
}

/// Separates the channel and surrogate generators sharing one seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Domain {
    Channel = 0,
    Surrogate = 1,
}

pub(crate) struct ChannelRng(ChaCha8Rng);

impl ChannelRng {
    fn new(seed: SeedSpec, domain: Domain) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.master.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(seed.stream);
        Self(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    fn open_unit(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// `CN(0, 1)` by Box-Muller; always two raw draws.
    #[inline]
    fn complex_normal(&mut self) -> Complex64 {
        let radius = (-self.open_unit().ln()).sqrt();
        let (s, c) = (TAU * self.unit()).sin_cos();
        Complex64::new(radius * c, radius * s)
    }

    /// Uniform phase on `[0, 2π)`; one raw draw.
    #[inline]
    fn phase(&mut self) -> f64 {
        let phi = TAU * self.unit();
        if phi >= TAU {
            0.0
        } else {
            phi
        }
    }

    fn gaussian_matrix(&mut self, rows: usize, cols: usize, col_variance: impl Fn(usize) -> f64) -> CMatrix {
        let scales: Vec<f64> = (0..cols).map(|c| col_variance(c).sqrt()).collect();
        let mut m = CMatrix::zeros(rows, cols);
        for row in m.as_mut_slice().chunks_exact_mut(cols) {
            for (z, &s) in row.iter_mut().zip(&scales) {
                *z = self.complex_normal() * s;
            }
        }
        m
    }
}

/// One draw of every link plus the RIS phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Direct link `H_D`, N×M.
    pub direct: CMatrix,
    /// RIS-to-receiver link `H`, N×L.
    pub ris_rx: CMatrix,
    /// Transmitter-to-RIS link `G`, L×M.
    pub tx_ris: CMatrix,
    /// RIS phase rotations `φ_l ∈ [0, 2π)`.
    pub phases: Vec<f64>,
}

impl ChannelRealization {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.direct.rows(), self.direct.cols(), self.phases.len())
    }

    /// `Φ = diag(e^{jφ_l})`.
    pub fn phase_matrix(&self) -> CMatrix {
        let d: Vec<Complex64> = self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        CMatrix::from_diag(&d)
    }

    /// The cascaded RIS channel `H Φ G`, N×M.
    pub fn cascaded(&self) -> CMatrix {
        let (_, m, l) = self.dims();
        let mut phased = self.tx_ris.clone();
        for r in 0..l {
            let rot = Complex64::from_polar(1.0, self.phases[r]);
            for c in 0..m {
                phased[(r, c)] *= rot;
            }
        }
        self.ris_rx
            .matmul(&phased)
            .expect("realization dimensions are consistent by construction")
    }

    /// Same realization with the phases replaced.
    pub fn with_phases(&self, phases: Vec<f64>) -> Self {
        assert_eq!(phases.len(), self.phases.len());
        Self {
            phases,
            ..self.clone()
        }
    }
}

/// Draws every link of one realization. Deterministic in `seed`.
///
/// Draw order: `H_D`, `H`, `G` (each row-major, two raw draws per entry),
/// then the `L` phases (one raw draw each).
pub fn draw_channels(cfg: &SystemConfig, seed: SeedSpec) -> ChannelRealization {
    let (n, m, l) = (cfg.antennas, cfg.streams, cfg.ris_elements);
    let mut rng = ChannelRng::new(seed, Domain::Channel);
    let direct = rng.gaussian_matrix(n, m, |c| cfg.gain_direct[c]);
    let ris_rx = rng.gaussian_matrix(n, l, |_| cfg.gain_ris_rx);
    let tx_ris = rng.gaussian_matrix(l, m, |c| cfg.gain_tx_ris[c]);
    let phases = (0..l).map(|_| rng.phase()).collect();
    ChannelRealization {
        direct,
        ris_rx,
        tx_ris,
        phases,
    }
}

/// The end-to-end channel `H_D + H Φ G`.
pub fn composite_channel(real: &ChannelRealization) -> CMatrix {
    real.direct
        .add(&real.cascaded())
        .expect("realization dimensions are consistent by construction")
}

/// How the per-stream variance of the Gaussian surrogate for `H Φ G` scales
/// with the number of RIS elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `ψ²_i = ξ²_H ξ²_{G,i} / L`.
    Paper,
    /// `ψ²_i = L ξ²_H ξ²_{G,i}`, the exact per-entry variance of `H Φ G`.
    Derived,
}

impl Default for ScaleMode {
    /// The mode matching the second moment of the cascaded channel.
    fn default() -> Self {
        ScaleMode::Derived
    }
}

impl ScaleMode {
    pub fn psi2(self, cfg: &SystemConfig, stream: usize) -> f64 {
        let l = cfg.ris_elements as f64;
        let base = cfg.gain_ris_rx * cfg.gain_tx_ris[stream];
        match self {
            ScaleMode::Paper => base / l,
            ScaleMode::Derived => base * l,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScaleMode::Paper => "paper",
            ScaleMode::Derived => "derived",
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(ScaleMode::Paper),
            "derived" => Ok(ScaleMode::Derived),
            other => Err(Error::config(format!("unknown scale mode '{other}' (expected paper|derived)"))),
        }
    }
}

/// Gaussian stand-in `A Ψ^{1/2}` for the cascaded channel `H Φ G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltSurrogate {
    /// `A`, N×M with i.i.d. `CN(0, 1)` entries.
    pub a: CMatrix,
    pub psi2: Vec<f64>,
    pub scale_mode: ScaleMode,
}

impl CltSurrogate {
    /// `A Ψ^{1/2}`.
    pub fn matrix(&self) -> CMatrix {
        let mut out = self.a.clone();
        let s: Vec<Complex64> = self.psi2.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect();
        out.scale_columns(&s);
        out
    }
}

/// Draws the surrogate. Uses a generator separate from [`draw_channels`], so
/// one seed may drive both.
pub fn clt_surrogate(cfg: &SystemConfig, seed: SeedSpec, mode: ScaleMode) -> CltSurrogate {
    let mut rng = ChannelRng::new(seed, Domain::Surrogate);
    let a = rng.gaussian_matrix(cfg.antennas, cfg.streams, |_| 1.0);
    let psi2 = (0..cfg.streams).map(|i| mode.psi2(cfg, i)).collect();
    CltSurrogate {
        a,
        psi2,
        scale_mode: mode,
    }
}
