use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use semiblind_cli::manifest::{parse_grid, parse_list, parse_schemes, pilot_overhead};
use semiblind_cli::{execute, CliError, Overrides};

/// Outage of zero-forcing receivers in an RIS-assisted multiuser uplink.
#[derive(Debug, Parser)]
#[command(name = "semiblind", version)]
struct Args {
    /// Figure preset: fig1 or fig2.
    #[arg(long)]
    preset: Option<String>,
    /// Receive antennas.
    #[arg(long)]
    n: Option<usize>,
    /// Streams.
    #[arg(long)]
    m: Option<usize>,
    /// RIS elements.
    #[arg(long)]
    l: Option<usize>,
    /// SNR sweep in dB: start:stop:step, a comma list or one value.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Rate sweep in bps/Hz: start:stop:step, a comma list or one value.
    #[arg(long)]
    rate: Option<String>,
    /// Rate used by an SNR sweep.
    #[arg(long)]
    rate_fixed: Option<f64>,
    /// SNR in dB used by a rate sweep.
    #[arg(long, allow_hyphen_values = true)]
    snr_db_fixed: Option<f64>,
    /// Direct-link gains, one value or one per stream.
    #[arg(long)]
    gain_d: Option<String>,
    /// Transmitter-to-RIS gains, one value or one per stream.
    #[arg(long)]
    gain_g: Option<String>,
    /// RIS-to-receiver gain.
    #[arg(long)]
    gain_h: Option<f64>,
    /// Comma list of d, ris, full, joint.
    #[arg(long)]
    schemes: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reported stream index; defaults to the last one.
    #[arg(long)]
    stream: Option<usize>,
    /// Surrogate variance: paper or derived.
    #[arg(long)]
    scale_mode: Option<String>,
    /// Joint receiver outage: printed or quadrature.
    #[arg(long)]
    joint_method: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Data file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Flat key = value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print pilot lengths for full and direct-only CSI and exit.
    #[arg(long)]
    overhead_report: bool,
}

impl Args {
    fn overrides(&self) -> Result<Overrides, CliError> {
        Ok(Overrides {
            preset: self.preset.as_deref().map(str::parse).transpose()?,
            n: self.n,
            m: self.m,
            l: self.l,
            snr_db: self.snr_db.as_deref().map(|v| parse_grid("snr-db", v)).transpose()?,
            rate: self.rate.as_deref().map(|v| parse_grid("rate", v)).transpose()?,
            rate_fixed: self.rate_fixed,
            snr_db_fixed: self.snr_db_fixed,
            gain_d: self.gain_d.as_deref().map(|v| parse_list("gain-d", v)).transpose()?,
            gain_g: self.gain_g.as_deref().map(|v| parse_list("gain-g", v)).transpose()?,
            gain_h: self.gain_h,
            schemes: self.schemes.as_deref().map(parse_schemes).transpose()?,
            trials: self.trials,
            seed: self.seed,
            stream: self.stream,
            scale_mode: self.scale_mode.as_deref().map(str::parse).transpose()?,
            joint_method: self.joint_method.as_deref().map(str::parse).transpose()?,
            workers: self.workers,
            output: self.output.clone(),
            format: self.format.as_deref().map(str::parse).transpose()?,
        })
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    let mut overrides = args.overrides()?;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        overrides = overrides.or(Overrides::from_config_text(&text)?);
    }
    if args.overhead_report {
        let (n, m, l) = overrides.dimensions()?;
        let (full, direct) = pilot_overhead(n, m, l);
        println!("N = {n}, M = {m}, L = {l}");
        println!("full cascaded CSI pilot length: {full}");
        println!("direct-link CSI pilot length: {direct}");
        return Ok(());
    }
    execute(&overrides.resolve()?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("semiblind: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
