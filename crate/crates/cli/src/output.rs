//! CSV and JSON serialization of outage curves.

use std::io::Write;

use serde::Serialize;

use semiblind_core::OutageCurve;

use crate::error::CliError;
use crate::manifest::RunManifest;

pub const CSV_COLUMNS: [&str; 12] = [
    "scheme",
    "sweep_variable",
    "sweep_value",
    "snr_db",
    "rate_bps_hz",
    "gamma_th",
    "stream_index",
    "analytic_outage",
    "mc_outage",
    "mc_stderr",
    "trials",
    "seed",
];

/// One output row: a scheme at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scheme: &'static str,
    pub sweep_variable: &'static str,
    pub sweep_value: f64,
    pub snr_db: f64,
    pub rate_bps_hz: f64,
    pub gamma_th: f64,
    pub stream_index: usize,
    pub analytic_outage: f64,
    pub mc_outage: f64,
    pub mc_stderr: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_wilson_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_wilson_high: Option<f64>,
}

/// Rows grouped by scheme, in sweep order within each scheme.
pub fn rows(curve: &OutageCurve, seed: u64) -> Vec<Row> {
    let schemes: Vec<_> = curve
        .points
        .first()
        .map(|p| p.results.iter().map(|r| r.scheme).collect())
        .unwrap_or_default();
    let mut out = Vec::with_capacity(schemes.len() * curve.points.len());
    for scheme in schemes {
        for p in &curve.points {
            let r = p.result(scheme).expect("every point carries every scheme");
            out.push(Row {
                scheme: scheme.label(),
                sweep_variable: curve.variable.as_str(),
                sweep_value: p.sweep_value,
                snr_db: p.snr_db,
                rate_bps_hz: p.rate,
                gamma_th: p.gamma_th,
                stream_index: curve.stream,
                analytic_outage: r.analytic,
                mc_outage: r.estimate.probability,
                mc_stderr: r.estimate.stderr,
                trials: r.estimate.trials,
                seed,
                mc_wilson_low: r.estimate.wilson.map(|w| w.0),
                mc_wilson_high: r.estimate.wilson.map(|w| w.1),
            });
        }
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut w: W, manifest: &RunManifest, curve: &OutageCurve) -> std::io::Result<()> {
    for (k, v) in manifest.describe() {
        writeln!(w, "# {k}: {v}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(CSV_COLUMNS)?;
    for r in rows(curve, manifest.seed) {
        csv.write_record([
            r.scheme.to_string(),
            r.sweep_variable.to_string(),
            num(r.sweep_value),
            num(r.snr_db),
            num(r.rate_bps_hz),
            num(r.gamma_th),
            r.stream_index.to_string(),
            num(r.analytic_outage),
            num(r.mc_outage),
            num(r.mc_stderr),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    csv.flush()
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    manifest: &'a RunManifest,
    rows: Vec<Row>,
}

pub fn write_json<W: Write>(mut w: W, manifest: &RunManifest, curve: &OutageCurve) -> std::io::Result<()> {
    let doc = JsonDocument {
        manifest,
        rows: rows(curve, manifest.seed),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
}

pub fn io_error(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}
