//! Fully resolved run descriptions, figure presets and the flat config file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use semiblind_core::channel::db_to_linear;
use semiblind_core::{JointMethod, ScaleMode, Scheme, SweepOptions, SweepSpec, SweepVariable, SystemConfig};

use crate::error::CliError;

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RATE: f64 = 3.0;
pub const DEFAULT_SNR_DB: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::config(format!("unknown format '{other}' (expected csv|json)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig1,
    Fig2,
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig1" => Ok(Preset::Fig1),
            "fig2" => Ok(Preset::Fig2),
            other => Err(CliError::config(format!("unknown preset '{other}' (expected fig1|fig2)"))),
        }
    }
}

/// Everything a run needs, with no implicit defaults left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SystemConfig,
    pub sweep: SweepSpec,
    pub schemes: Vec<Scheme>,
    pub trials: u64,
    pub seed: u64,
    pub stream: usize,
    pub scale_mode: ScaleMode,
    pub joint_method: JointMethod,
    /// Worker threads, 0 for all cores. Does not affect results.
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunManifest {
    pub fn validate(&self) -> Result<(), CliError> {
        self.config.validate()?;
        self.sweep.validate()?;
        if self.schemes.is_empty() {
            return Err(CliError::config("no schemes selected"));
        }
        if self.trials == 0 {
            return Err(CliError::config("trials must be at least 1"));
        }
        if self.stream >= self.config.streams {
            return Err(CliError::config(format!(
                "stream index {} out of range for M = {}",
                self.stream, self.config.streams
            )));
        }
        Ok(())
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            stream: Some(self.stream),
            scale_mode: self.scale_mode,
            joint_method: self.joint_method,
            workers: self.workers,
            ..SweepOptions::default()
        }
    }

    /// `key: value` lines describing the run, for output headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let c = &self.config;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        vec![
            ("antennas".into(), c.antennas.to_string()),
            ("streams".into(), c.streams.to_string()),
            ("ris_elements".into(), c.ris_elements.to_string()),
            ("snr_db".into(), format!("{}", c.snr_db())),
            ("rate_bps_hz".into(), format!("{}", c.rate)),
            ("gain_d".into(), list(&c.gain_direct)),
            ("gain_g".into(), list(&c.gain_tx_ris)),
            ("gain_h".into(), format!("{}", c.gain_ris_rx)),
            ("sweep_variable".into(), self.sweep.variable.as_str().into()),
            ("sweep_values".into(), list(&self.sweep.values)),
            (
                "schemes".into(),
                self.schemes.iter().map(|s| s.label()).collect::<Vec<_>>().join(","),
            ),
            ("trials".into(), self.trials.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("stream_index".into(), self.stream.to_string()),
            ("scale_mode".into(), self.scale_mode.to_string()),
            ("joint_method".into(), self.joint_method.to_string()),
            ("workers".into(), self.workers.to_string()),
            ("format".into(), self.format.to_string()),
        ]
    }
}

fn base_manifest(config: SystemConfig, sweep: SweepSpec) -> RunManifest {
    let stream = config.streams.saturating_sub(1);
    RunManifest {
        config,
        sweep,
        schemes: Scheme::ALL.to_vec(),
        trials: DEFAULT_TRIALS,
        seed: DEFAULT_SEED,
        stream,
        scale_mode: ScaleMode::default(),
        joint_method: JointMethod::default(),
        workers: 0,
        output: None,
        format: OutputFormat::Csv,
    }
}

/// SNR sweep at `N = 32`, `M = 12`, unit gains and `R = 3`, with `L = 16`
/// or `L = 32`.
pub fn preset_fig1(ris_elements: usize) -> Result<RunManifest, CliError> {
    if ris_elements != 16 && ris_elements != 32 {
        return Err(CliError::config(format!(
            "the fig1 preset has L = 16 or L = 32, got L = {ris_elements}"
        )));
    }
    let config = SystemConfig::uniform(32, 12, ris_elements, db_to_linear(DEFAULT_SNR_DB), 3.0, 1.0, 1.0, 1.0)?;
    let sweep = SweepSpec::range(SweepVariable::SnrDb, -10.0, 10.0, 1.0)?;
    Ok(base_manifest(config, sweep))
}

/// Rate sweep at `N = 32`, `M = 14`, `L = 16`, `p = 3` dB and
/// `ξ²_H = ξ²_G = 0.7`, with unit direct-link gain.
pub fn preset_fig2() -> RunManifest {
    preset_fig2_with_direct_gain(1.0).expect("preset parameters are valid")
}

/// [`preset_fig2`] with another direct-link gain.
pub fn preset_fig2_with_direct_gain(gain_direct: f64) -> Result<RunManifest, CliError> {
    let config = SystemConfig::uniform(32, 14, 16, db_to_linear(3.0), 3.0, gain_direct, 0.7, 0.7)?;
    let sweep = SweepSpec::range(SweepVariable::Rate, 0.5, 6.0, 0.5)?;
    Ok(base_manifest(config, sweep))
}

/// Pilot channel uses for full cascaded CSI and for direct-link CSI.
pub fn pilot_overhead(antennas: usize, streams: usize, ris_elements: usize) -> (usize, usize) {
    let direct = antennas * streams;
    (antennas * ris_elements * streams + direct, direct)
}

pub fn report_pilot_overhead(cfg: &SystemConfig) -> (usize, usize) {
    pilot_overhead(cfg.antennas, cfg.streams, cfg.ris_elements)
}

/// Per-run settings from flags or a config file; unset fields fall back to
/// the preset and then to the defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub l: Option<usize>,
    pub snr_db: Option<Vec<f64>>,
    pub rate: Option<Vec<f64>>,
    pub rate_fixed: Option<f64>,
    pub snr_db_fixed: Option<f64>,
    pub gain_d: Option<Vec<f64>>,
    pub gain_g: Option<Vec<f64>>,
    pub gain_h: Option<f64>,
    pub schemes: Option<Vec<Scheme>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub stream: Option<usize>,
    pub scale_mode: Option<ScaleMode>,
    pub joint_method: Option<JointMethod>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::config(format!("invalid value '{raw}' for {key}")))
}

/// `start:stop:step`, a comma list, or a single value.
pub fn parse_grid(key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    let raw = raw.trim();
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::config(format!("{key} range must be start:stop:step, got '{raw}'")));
        }
        let start: f64 = parse_value(key, parts[0])?;
        let stop: f64 = parse_value(key, parts[1])?;
        let step: f64 = parse_value(key, parts[2])?;
        return Ok(SweepSpec::range(SweepVariable::SnrDb, start, stop, step)
            .map_err(|e| CliError::config(format!("{key}: {e}")))?
            .values);
    }
    parse_list(key, raw)
}

/// A single value or a comma-separated list.
pub fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',').map(|v| parse_value(key, v)).collect()
}

pub fn parse_schemes(raw: &str) -> Result<Vec<Scheme>, CliError> {
    raw.split(',')
        .map(|s| s.parse::<Scheme>().map_err(CliError::from))
        .collect()
}

fn broadcast(key: &str, values: &[f64], streams: usize) -> Result<Vec<f64>, CliError> {
    match values.len() {
        1 => Ok(vec![values[0]; streams]),
        n if n == streams => Ok(values.to_vec()),
        n => Err(CliError::config(format!("{key} has {n} entries; give one or M = {streams}"))),
    }
}

impl Overrides {
    /// Parses the flat `key = value` format. Keys are the long flag names.
    pub fn from_config_text(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::config(format!("config line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let mut o = Overrides::default();
        for (key, v) in &map {
            let v = v.as_str();
            match key.as_str() {
                "preset" => o.preset = Some(v.parse()?),
                "n" => o.n = Some(parse_value(key, v)?),
                "m" => o.m = Some(parse_value(key, v)?),
                "l" => o.l = Some(parse_value(key, v)?),
                "snr-db" => o.snr_db = Some(parse_grid(key, v)?),
                "rate" => o.rate = Some(parse_grid(key, v)?),
                "rate-fixed" => o.rate_fixed = Some(parse_value(key, v)?),
                "snr-db-fixed" => o.snr_db_fixed = Some(parse_value(key, v)?),
                "gain-d" => o.gain_d = Some(parse_list(key, v)?),
                "gain-g" => o.gain_g = Some(parse_list(key, v)?),
                "gain-h" => o.gain_h = Some(parse_value(key, v)?),
                "schemes" => o.schemes = Some(parse_schemes(v)?),
                "trials" => o.trials = Some(parse_value(key, v)?),
                "seed" => o.seed = Some(parse_value(key, v)?),
                "stream" => o.stream = Some(parse_value(key, v)?),
                "scale-mode" => o.scale_mode = Some(v.parse()?),
                "joint-method" => o.joint_method = Some(v.parse()?),
                "workers" => o.workers = Some(parse_value(key, v)?),
                "output" => o.output = Some(PathBuf::from(v)),
                "format" => o.format = Some(v.parse()?),
                other => return Err(CliError::config(format!("unknown config key '{other}'"))),
            }
        }
        Ok(o)
    }

    /// Fields set in `self` win over those in `fallback`.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            preset: self.preset.or(fallback.preset),
            n: self.n.or(fallback.n),
            m: self.m.or(fallback.m),
            l: self.l.or(fallback.l),
            snr_db: self.snr_db.or(fallback.snr_db),
            rate: self.rate.or(fallback.rate),
            rate_fixed: self.rate_fixed.or(fallback.rate_fixed),
            snr_db_fixed: self.snr_db_fixed.or(fallback.snr_db_fixed),
            gain_d: self.gain_d.or(fallback.gain_d),
            gain_g: self.gain_g.or(fallback.gain_g),
            gain_h: self.gain_h.or(fallback.gain_h),
            schemes: self.schemes.or(fallback.schemes),
            trials: self.trials.or(fallback.trials),
            seed: self.seed.or(fallback.seed),
            stream: self.stream.or(fallback.stream),
            scale_mode: self.scale_mode.or(fallback.scale_mode),
            joint_method: self.joint_method.or(fallback.joint_method),
            workers: self.workers.or(fallback.workers),
            output: self.output.or(fallback.output),
            format: self.format.or(fallback.format),
        }
    }

    /// `(N, M, L)` without resolving a full run; `L = 0` is allowed.
    pub fn dimensions(&self) -> Result<(usize, usize, usize), CliError> {
        let preset = match self.preset {
            Some(Preset::Fig1) => Some(preset_fig1(self.l.unwrap_or(16))?.config),
            Some(Preset::Fig2) => Some(preset_fig2().config),
            None => None,
        };
        let pick = |flag: Option<usize>, from_preset: Option<usize>, name: &str| {
            flag.or(from_preset)
                .ok_or_else(|| CliError::config(format!("--{name} is required without a preset")))
        };
        Ok((
            pick(self.n, preset.as_ref().map(|c| c.antennas), "n")?,
            pick(self.m, preset.as_ref().map(|c| c.streams), "m")?,
            pick(self.l, preset.as_ref().map(|c| c.ris_elements), "l")?,
        ))
    }

    pub fn resolve(&self) -> Result<RunManifest, CliError> {
        if self.snr_db.is_some() && self.rate.is_some() {
            return Err(CliError::config("give either an SNR sweep or a rate sweep, not both"));
        }
        let mut man = match self.preset {
            Some(Preset::Fig1) => preset_fig1(self.l.unwrap_or(16))?,
            Some(Preset::Fig2) => preset_fig2(),
            None => {
                let (n, m, l) = match (self.n, self.m, self.l) {
                    (Some(n), Some(m), Some(l)) => (n, m, l),
                    _ => return Err(CliError::config("without a preset, --n, --m and --l are required")),
                };
                let sweep = match (&self.snr_db, &self.rate) {
                    (Some(v), None) => SweepSpec::new(SweepVariable::SnrDb, v.clone())?,
                    (None, Some(v)) => SweepSpec::new(SweepVariable::Rate, v.clone())?,
                    _ => return Err(CliError::config("without a preset, --snr-db or --rate is required")),
                };
                // Checked by the final validation, after every override.
                let config = SystemConfig {
                    antennas: n,
                    streams: m,
                    ris_elements: l,
                    snr: db_to_linear(DEFAULT_SNR_DB),
                    rate: DEFAULT_RATE,
                    gain_direct: vec![1.0; m],
                    gain_tx_ris: vec![1.0; m],
                    gain_ris_rx: 1.0,
                };
                base_manifest(config, sweep)
            }
        };

        let c = &mut man.config;
        if let Some(n) = self.n {
            c.antennas = n;
        }
        if let Some(m) = self.m {
            if m != c.streams {
                c.streams = m;
                c.gain_direct = vec![c.gain_direct[0]; m];
                c.gain_tx_ris = vec![c.gain_tx_ris[0]; m];
            }
        }
        if let Some(l) = self.l {
            c.ris_elements = l;
        }
        let m = c.streams;
        if m == 0 {
            return Err(CliError::config("need M >= 1"));
        }
        if let Some(g) = &self.gain_d {
            c.gain_direct = broadcast("gain-d", g, m)?;
        }
        if let Some(g) = &self.gain_g {
            c.gain_tx_ris = broadcast("gain-g", g, m)?;
        }
        if let Some(g) = self.gain_h {
            c.gain_ris_rx = g;
        }
        if let Some(r) = self.rate_fixed {
            c.rate = r;
        }
        if let Some(s) = self.snr_db_fixed {
            c.snr = db_to_linear(s);
        }
        if let Some(v) = &self.snr_db {
            man.sweep = SweepSpec::new(SweepVariable::SnrDb, v.clone())?;
        }
        if let Some(v) = &self.rate {
            man.sweep = SweepSpec::new(SweepVariable::Rate, v.clone())?;
        }
        if let Some(s) = &self.schemes {
            let mut s = s.clone();
            s.sort();
            s.dedup();
            man.schemes = s;
        }
        man.trials = self.trials.unwrap_or(man.trials);
        man.seed = self.seed.unwrap_or(man.seed);
        man.stream = self.stream.unwrap_or(m - 1);
        man.scale_mode = self.scale_mode.unwrap_or(man.scale_mode);
        man.joint_method = self.joint_method.unwrap_or(man.joint_method);
        man.workers = self.workers.unwrap_or(man.workers);
        man.output = self.output.clone().or(man.output);
        man.format = self.format.unwrap_or(man.format);
        man.validate()?;
        Ok(man)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_presets() {
        let m = preset_fig1(16).unwrap();
        assert_eq!((m.config.antennas, m.config.streams, m.config.ris_elements), (32, 12, 16));
        assert_eq!(m.sweep.variable, SweepVariable::SnrDb);
        assert_eq!(m.sweep.values.first(), Some(&-10.0));
        assert_eq!(m.sweep.values.last(), Some(&10.0));
        assert_eq!(m.schemes, Scheme::ALL.to_vec());
        assert_eq!(m.config.rate, 3.0);
        assert_eq!(preset_fig1(32).unwrap().config.ris_elements, 32);
        assert!(matches!(preset_fig1(17), Err(CliError::Config(_))));
    }

    #[test]
    fn fig2_presets() {
        let m = preset_fig2();
        let c = &m.config;
        assert_eq!((c.antennas, c.streams, c.ris_elements), (32, 14, 16));
        assert_eq!(c.gain_ris_rx, 0.7);
        assert!(c.gain_tx_ris.iter().all(|&g| g == 0.7));
        assert!((c.snr_db() - 3.0).abs() < 1e-12);
        assert_eq!(m.sweep.variable, SweepVariable::Rate);
        assert_eq!(m.sweep.values.len(), 12);
        let v = preset_fig2_with_direct_gain(0.7).unwrap();
        assert!(v.config.gain_direct.iter().all(|&g| g == 0.7));
        assert!(preset_fig2_with_direct_gain(0.0).is_err());
    }

    #[test]
    fn pilot_overheads() {
        assert_eq!(pilot_overhead(32, 12, 16), (6528, 384));
        assert_eq!(pilot_overhead(32, 12, 0), (384, 384));
        assert_eq!(pilot_overhead(1, 1, 1), (2, 1));
        assert_eq!(report_pilot_overhead(&preset_fig1(16).unwrap().config), (6528, 384));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("x", "-2:2:1").unwrap(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(parse_grid("x", "1,2.5").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_grid("x", "4").unwrap(), vec![4.0]);
        assert!(parse_grid("x", "1:2").is_err());
        assert!(parse_grid("x", "a").is_err());
        assert!(parse_grid("x", "0:1:0").is_err());
    }

    #[test]
    fn config_file_round_trip() {
        let text = "# comment\npreset = fig2\ngain-d = 0.35\ntrials = 500\nschemes = joint,d\nscale_mode = paper # inline\n";
        let o = Overrides::from_config_text(text).unwrap();
        let m = o.resolve().unwrap();
        assert_eq!(m.trials, 500);
        assert_eq!(m.schemes, vec![Scheme::DirectCsi, Scheme::Joint]);
        assert_eq!(m.scale_mode, ScaleMode::Paper);
        assert!(m.config.gain_direct.iter().all(|&g| g == 0.35));
        assert!(Overrides::from_config_text("bogus = 1").is_err());
        assert!(Overrides::from_config_text("trials = 1\ntrials = 2").is_err());
        assert!(Overrides::from_config_text("no equals sign").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = Overrides::from_config_text("preset = fig1\ntrials = 10\nseed = 4").unwrap();
        let flags = Overrides {
            trials: Some(20),
            l: Some(32),
            ..Overrides::default()
        };
        let m = flags.or(file).resolve().unwrap();
        assert_eq!((m.trials, m.seed, m.config.ris_elements), (20, 4, 32));
    }

    #[test]
    fn custom_runs() {
        let o = Overrides {
            n: Some(8),
            m: Some(3),
            l: Some(4),
            rate: Some(vec![1.0, 2.0]),
            gain_d: Some(vec![1.0, 0.5, 0.25]),
            snr_db_fixed: Some(10.0),
            ..Overrides::default()
        };
        let m = o.resolve().unwrap();
        assert_eq!(m.config.gain_direct, vec![1.0, 0.5, 0.25]);
        assert_eq!(m.stream, 2);
        assert!((m.config.snr - 10.0).abs() < 1e-12);
        let bad_gains = Overrides {
            gain_d: Some(vec![1.0, 0.5]),
            ..o.clone()
        };
        assert!(bad_gains.resolve().is_err());
        let both = Overrides {
            snr_db: Some(vec![0.0]),
            ..o.clone()
        };
        assert!(both.resolve().is_err());
        let missing = Overrides {
            n: None,
            ..o.clone()
        };
        assert!(missing.resolve().is_err());
        let too_many_streams = Overrides { m: Some(9), gain_d: None, ..o };
        assert!(matches!(too_many_streams.resolve(), Err(CliError::Config(_))));
    }
}
