//! Empirical outage estimation and parameter sweeps.
//!
//! Each trial draws one realization from its own substream (`seed.stream +
//! trial`), computes the p-independent gains of every requested scheme once,
//! and scores them against every sweep point. All schemes and all points
//! therefore see the same channel draws. Tallies are integers, so the
//! reduction is exact and the result does not depend on the worker count.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::analytic::{outage, AnalyticOptions, JointMethod};
use crate::channel::{db_to_linear, draw_channels, ScaleMode, SeedSpec, SystemConfig};
use crate::cmatrix::LinalgError;
use crate::detectors::{rate_from_threshold, snr_from_gain, threshold_from_rate, Scheme, TrialGains};
use crate::error::{Error, Result};
use crate::specfun::QuadratureSpec;
use crate::stats::wilson_interval;

/// Largest tolerated fraction of trials whose detector failed.
pub const MAX_FAILURE_RATE: f64 = 1e-6;
/// A Wilson interval is attached when fewer events than this were seen.
pub const WILSON_EVENT_LIMIT: f64 = 50.0;
const WILSON_Z: f64 = 1.959_963_984_540_054;
const CHUNK: u64 = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub scheme: Scheme,
    pub stream: usize,
    pub probability: f64,
    pub stderr: f64,
    /// Trials that produced an SNR.
    pub trials: u64,
    /// Trials whose detector failed; excluded from `trials`.
    pub failures: u64,
    /// 95% Wilson interval, present when `probability · trials < 50`.
    pub wilson: Option<(f64, f64)>,
}

impl OutageEstimate {
    fn from_counts(scheme: Scheme, stream: usize, hits: u64, trials: u64, failures: u64) -> Self {
        let n = trials as f64;
        let p = if trials == 0 { 0.0 } else { hits as f64 / n };
        let stderr = if trials == 0 { 0.0 } else { (p * (1.0 - p) / n).sqrt() };
        let wilson = (trials > 0 && p * n < WILSON_EVENT_LIMIT).then(|| wilson_interval(hits, trials, WILSON_Z));
        Self {
            scheme,
            stream,
            probability: p,
            stderr,
            trials,
            failures,
            wilson,
        }
    }
}

/// Integer tallies of one block of trials.
#[derive(Debug, Clone)]
struct Tally {
    /// Indexed `[scheme][point][stream]`, flattened.
    hits: Vec<u64>,
    failures: Vec<u64>,
    first_failure: Vec<Option<(u64, LinalgError)>>,
}

impl Tally {
    fn new(schemes: usize, points: usize, streams: usize) -> Self {
        Self {
            hits: vec![0; schemes * points * streams],
            failures: vec![0; schemes],
            first_failure: vec![None; schemes],
        }
    }

    fn merge(&mut self, other: Tally) {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
        for (a, b) in self.failures.iter_mut().zip(other.failures) {
            *a += b;
        }
        for (a, b) in self.first_failure.iter_mut().zip(other.first_failure) {
            match (a.as_ref(), b) {
                (None, Some(b)) => *a = Some(b),
                (Some((ta, _)), Some(b)) if b.0 < *ta => *a = Some(b),
                _ => {}
            }
        }
    }
}

/// One evaluation point: the configuration (for `p`) and the threshold.
#[derive(Debug, Clone)]
struct Point {
    cfg: SystemConfig,
    gamma_th: f64,
}

struct Engine<'a> {
    base: &'a SystemConfig,
    schemes: &'a [Scheme],
    points: &'a [Point],
    trials: u64,
    seed: SeedSpec,
    workers: usize,
}

impl Engine<'_> {
    fn run_block(&self, start: u64, end: u64) -> Tally {
        let m = self.base.streams;
        let np = self.points.len();
        let mut tally = Tally::new(self.schemes.len(), np, m);
        for t in start..end {
            let real = draw_channels(self.base, self.seed.offset(t));
            let gains = TrialGains::compute(&real, self.schemes);
            for (s, &scheme) in self.schemes.iter().enumerate() {
                match gains.get(scheme).expect("requested") {
                    Ok(g) => {
                        for (j, pt) in self.points.iter().enumerate() {
                            let base = (s * np + j) * m;
                            for (i, &gi) in g.iter().enumerate() {
                                if snr_from_gain(scheme, &pt.cfg, gi) < pt.gamma_th {
                                    tally.hits[base + i] += 1;
                                }
                            }
                        }
                    }
                    Err(e) => {
                        tally.failures[s] += 1;
                        if tally.first_failure[s].is_none() {
                            tally.first_failure[s] = Some((t, e.clone()));
                        }
                    }
                }
            }
        }
        tally
    }

    fn run(&self) -> Result<Tally> {
        let blocks: Vec<(u64, u64)> = (0..self.trials.div_ceil(CHUNK))
            .map(|b| (b * CHUNK, ((b + 1) * CHUNK).min(self.trials)))
            .collect();
        let work = || -> Vec<Tally> { blocks.par_iter().map(|&(a, b)| self.run_block(a, b)).collect() };
        let partials = if self.workers == 0 {
            work()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::config(format!("cannot start {} worker threads: {e}", self.workers)))?
                .install(work)
        };
        let mut total = Tally::new(self.schemes.len(), self.points.len(), self.base.streams);
        for p in partials {
            total.merge(p);
        }
        for (s, &scheme) in self.schemes.iter().enumerate() {
            let failed = total.failures[s];
            if failed as f64 > MAX_FAILURE_RATE * self.trials as f64 {
                let first = total.first_failure[s].take().expect("recorded with the failure").1;
                return Err(Error::TrialFailures {
                    scheme: scheme.label().to_string(),
                    failed,
                    trials: self.trials,
                    first,
                });
            }
        }
        Ok(total)
    }

    fn estimate(&self, tally: &Tally, s: usize, point: usize, stream: usize) -> OutageEstimate {
        let m = self.base.streams;
        let hits = tally.hits[(s * self.points.len() + point) * m + stream];
        let failures = tally.failures[s];
        OutageEstimate::from_counts(self.schemes[s], stream, hits, self.trials - failures, failures)
    }
}

fn check_schemes(cfg: &SystemConfig, schemes: &[Scheme]) -> Result<()> {
    if schemes.is_empty() {
        return Err(Error::config("no schemes selected"));
    }
    if schemes.contains(&Scheme::RisCsi) && cfg.ris_elements < cfg.streams {
        return Err(Error::config(format!(
            "RIS-only detection needs L >= M, got L = {}, M = {}",
            cfg.ris_elements, cfg.streams
        )));
    }
    Ok(())
}

fn dedup_schemes(schemes: &[Scheme]) -> Vec<Scheme> {
    let mut v = schemes.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Empirical `P(γ_i < γ_th)` for every stream `i`.
pub fn estimate_outage(cfg: &SystemConfig, scheme: Scheme, gamma_th: f64, trials: u64, seed: SeedSpec) -> Result<Vec<OutageEstimate>> {
    estimate_outage_with_workers(cfg, scheme, gamma_th, trials, seed, 0)
}

/// [`estimate_outage`] on a pool of `workers` threads (0 = all cores).
pub fn estimate_outage_with_workers(
    cfg: &SystemConfig,
    scheme: Scheme,
    gamma_th: f64,
    trials: u64,
    seed: SeedSpec,
    workers: usize,
) -> Result<Vec<OutageEstimate>> {
    cfg.validate()?;
    check_schemes(cfg, &[scheme])?;
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    if gamma_th.is_nan() || gamma_th < 0.0 {
        return Err(Error::config(format!("outage threshold must be non-negative, got {gamma_th}")));
    }
    let schemes = [scheme];
    let points = [Point {
        cfg: cfg.clone(),
        gamma_th,
    }];
    let engine = Engine {
        base: cfg,
        schemes: &schemes,
        points: &points,
        trials,
        seed,
        workers,
    };
    let tally = engine.run()?;
    Ok((0..cfg.streams).map(|i| engine.estimate(&tally, 0, 0, i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Transmit SNR in dB at the configured rate.
    SnrDb,
    /// Target rate in bps/Hz at the configured SNR.
    Rate,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::Rate => "rate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, values: Vec<f64>) -> Result<Self> {
        let spec = Self { variable, values };
        spec.validate()?;
        Ok(spec)
    }

    /// `start, start + step, ...` up to `stop` inclusive.
    pub fn range(variable: SweepVariable, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::config(format!("invalid range {start}:{stop}:{step}")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::new(variable, (0..count).map(|k| start + k as f64 * step).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep grid is empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep values must be finite"));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("sweep values must be strictly increasing"));
        }
        if self.variable == SweepVariable::Rate && self.values[0] < 0.0 {
            return Err(Error::config("rates must be non-negative"));
        }
        Ok(())
    }

    fn point(&self, base: &SystemConfig, value: f64) -> Point {
        match self.variable {
            SweepVariable::SnrDb => Point {
                cfg: base.with_snr(db_to_linear(value)),
                gamma_th: threshold_from_rate(base.rate),
            },
            SweepVariable::Rate => Point {
                cfg: base.with_rate(value),
                gamma_th: threshold_from_rate(value),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Reported stream; `None` selects the last stream, `M - 1`.
    pub stream: Option<usize>,
    pub scale_mode: ScaleMode,
    pub joint_method: JointMethod,
    #[serde(skip)]
    pub quad: QuadratureSpec,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
}

impl SweepOptions {
    pub fn resolved_stream(&self, cfg: &SystemConfig) -> Result<usize> {
        let i = self.stream.unwrap_or(cfg.streams - 1);
        if i >= cfg.streams {
            return Err(Error::config(format!("stream index {i} out of range for M = {}", cfg.streams)));
        }
        Ok(i)
    }

    pub fn analytic(&self) -> AnalyticOptions {
        AnalyticOptions {
            scale_mode: self.scale_mode,
            joint_method: self.joint_method,
            quad: self.quad,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeResult {
    pub scheme: Scheme,
    pub analytic: f64,
    pub estimate: OutageEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sweep_value: f64,
    pub snr_db: f64,
    pub rate: f64,
    pub gamma_th: f64,
    pub results: Vec<SchemeResult>,
}

impl CurvePoint {
    pub fn result(&self, scheme: Scheme) -> Option<&SchemeResult> {
        self.results.iter().find(|r| r.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub variable: SweepVariable,
    pub stream: usize,
    pub trials: u64,
    pub seed: SeedSpec,
    pub points: Vec<CurvePoint>,
}

impl OutageCurve {
    /// `(sweep value, analytic, empirical)` triples of one scheme.
    pub fn series(&self, scheme: Scheme) -> Vec<(f64, f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.result(scheme).map(|r| (p.sweep_value, r.analytic, r.estimate.probability)))
            .collect()
    }
}

/// Runs every scheme over the sweep grid on shared channel draws.
pub fn run_sweep(
    base: &SystemConfig,
    sweep: &SweepSpec,
    schemes: &[Scheme],
    trials: u64,
    seed: SeedSpec,
    opts: &SweepOptions,
) -> Result<OutageCurve> {
    base.validate()?;
    sweep.validate()?;
    let schemes = dedup_schemes(schemes);
    check_schemes(base, &schemes)?;
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let stream = opts.resolved_stream(base)?;
    opts.quad.validate()?;
    let points: Vec<Point> = sweep.values.iter().map(|&v| sweep.point(base, v)).collect();

    // Analytic values first: configuration errors surface before the
    // expensive part.
    let analytic_opts = opts.analytic();
    let mut analytic = vec![vec![0.0; points.len()]; schemes.len()];
    for (s, &scheme) in schemes.iter().enumerate() {
        for (j, pt) in points.iter().enumerate() {
            analytic[s][j] = outage(scheme, &pt.cfg, stream, pt.gamma_th, &analytic_opts)?.probability;
        }
    }

    let engine = Engine {
        base,
        schemes: &schemes,
        points: &points,
        trials,
        seed,
        workers: opts.workers,
    };
    let tally = engine.run()?;

    let curve_points = points
        .iter()
        .enumerate()
        .map(|(j, pt)| CurvePoint {
            sweep_value: sweep.values[j],
            snr_db: pt.cfg.snr_db(),
            rate: match sweep.variable {
                SweepVariable::Rate => sweep.values[j],
                SweepVariable::SnrDb => rate_from_threshold(pt.gamma_th),
            },
            gamma_th: pt.gamma_th,
            results: schemes
                .iter()
                .enumerate()
                .map(|(s, &scheme)| SchemeResult {
                    scheme,
                    analytic: analytic[s][j],
                    estimate: engine.estimate(&tally, s, j, stream),
                })
                .collect(),
        })
        .collect();
    Ok(OutageCurve {
        variable: sweep.variable,
        stream,
        trials,
        seed,
        points: curve_points,
    })
}
