use std::fs::File;
use std::io::{self, BufWriter, Write};

use semiblind_core::{run_sweep, OutageCurve, SeedSpec};

use crate::error::CliError;
use crate::manifest::{OutputFormat, RunManifest};
use crate::output::{io_error, rows, write_csv, write_json};

pub fn simulate(manifest: &RunManifest) -> Result<OutageCurve, CliError> {
    manifest.validate()?;
    Ok(run_sweep(
        &manifest.config,
        &manifest.sweep,
        &manifest.schemes,
        manifest.trials,
        SeedSpec::new(manifest.seed, 0),
        &manifest.sweep_options(),
    )?)
}

pub fn write_output<W: Write>(w: W, manifest: &RunManifest, curve: &OutageCurve) -> io::Result<()> {
    match manifest.format {
        OutputFormat::Csv => write_csv(w, manifest, curve),
        OutputFormat::Json => write_json(w, manifest, curve),
    }
}

/// Fixed-width table of analytic and simulated outage.
pub fn summary_table(manifest: &RunManifest, curve: &OutageCurve) -> String {
    let mut s = format!(
        "{:<6} {:>10} {:>12} {:>12} {:>10}\n",
        "scheme",
        manifest.sweep.variable.as_str(),
        "analytic",
        "monte_carlo",
        "stderr"
    );
    for r in rows(curve, manifest.seed) {
        s.push_str(&format!(
            "{:<6} {:>10.3} {:>12.4e} {:>12.4e} {:>10.2e}\n",
            r.scheme, r.sweep_value, r.analytic_outage, r.mc_outage, r.mc_stderr
        ));
    }
    s
}

/// Runs the sweep and writes data to the output file or stdout. The summary
/// goes to stdout when data goes to a file and to stderr otherwise.
pub fn execute(manifest: &RunManifest) -> Result<(), CliError> {
    let curve = simulate(manifest)?;
    let table = summary_table(manifest, &curve);
    match &manifest.output {
        Some(path) => {
            let file = File::create(path).map_err(io_error(path))?;
            let mut w = BufWriter::new(file);
            write_output(&mut w, manifest, &curve).map_err(io_error(path))?;
            w.flush().map_err(io_error(path))?;
            print!("{table}");
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write_output(&mut w, manifest, &curve).map_err(|e| CliError::io("<stdout>", e))?;
            eprint!("{table}");
        }
    }
    Ok(())
}
