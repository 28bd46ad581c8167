use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn semiblind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiblind"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn run_to(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let mut args = vec!["--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = semiblind(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read_to_string(path).unwrap()
}

const SMALL: &[&str] = &["--n", "6", "--m", "3", "--l", "4", "--snr-db", "-5:10:5", "--trials", "3000", "--seed", "9"];

#[test]
fn fig1_preset_structure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to(dir.path(), "fig1.csv", &["--preset", "fig1", "--l", "32", "--trials", "10000"]);
    let header: Vec<&str> = csv.lines().filter(|l| l.starts_with('#')).collect();
    for key in ["antennas: 32", "streams: 12", "ris_elements: 32", "trials: 10000", "seed: 1", "scale_mode: derived"] {
        assert!(header.iter().any(|h| h.contains(key)), "missing {key} in header");
    }
    let columns = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        columns,
        "scheme,sweep_variable,sweep_value,snr_db,rate_bps_hz,gamma_th,stream_index,analytic_outage,mc_outage,mc_stderr,trials,seed"
    );
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 4 * 21);
    for scheme in ["d", "ris", "full", "joint"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{scheme},"))).count(), 21);
    }
    // 17 significant digits, and gamma_th = 7 at R = 3.
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[5], "7.0000000000000000e0");
    assert_eq!(first[6], "11");
}

#[test]
fn fig2_preset_rate_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to(dir.path(), "fig2.csv", &["--preset", "fig2", "--trials", "2000", "--schemes", "d,joint"]);
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2 * 12);
    let at_three = rows
        .iter()
        .map(|r| r.split(',').collect::<Vec<_>>())
        .find(|f| f[1] == "rate" && f[2].parse::<f64>().unwrap() == 3.0)
        .unwrap();
    assert_eq!(at_three[5].parse::<f64>().unwrap(), 7.0);
    assert!((at_three[3].parse::<f64>().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let csv = run_to(dir.path(), "a.csv", SMALL);
    let json = run_to(dir.path(), "a.json", &[SMALL, &["--format", "json"]].concat());
    let doc: Value = serde_json::from_str(&json).unwrap();
    let jrows = doc["rows"].as_array().unwrap();
    let crows = data_rows(&csv);
    assert_eq!(jrows.len(), crows.len());
    let numeric = [
        "sweep_value",
        "snr_db",
        "rate_bps_hz",
        "gamma_th",
        "analytic_outage",
        "mc_outage",
        "mc_stderr",
    ];
    for (c, j) in crows.iter().zip(jrows) {
        let f: Vec<&str> = c.split(',').collect();
        assert_eq!(f[0], j["scheme"].as_str().unwrap());
        assert_eq!(f[1], j["sweep_variable"].as_str().unwrap());
        for (k, name) in numeric.iter().enumerate() {
            let col = [2, 3, 4, 5, 7, 8, 9][k];
            let from_csv: f64 = f[col].parse().unwrap();
            assert_eq!(from_csv.to_bits(), j[*name].as_f64().unwrap().to_bits(), "{name}");
        }
        assert_eq!(f[6].parse::<u64>().unwrap(), j["stream_index"].as_u64().unwrap());
        assert_eq!(f[10].parse::<u64>().unwrap(), j["trials"].as_u64().unwrap());
        assert_eq!(f[11].parse::<u64>().unwrap(), j["seed"].as_u64().unwrap());
    }
    assert_eq!(doc["manifest"]["trials"], 3000);
    assert_eq!(doc["manifest"]["config"]["antennas"], 6);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_to(dir.path(), "a.csv", SMALL);
    let b = run_to(dir.path(), "b.csv", &[SMALL, &["--workers", "1"]].concat());
    assert_eq!(data_rows(&a), data_rows(&b));
    let c = run_to(dir.path(), "c.csv", &[&SMALL[..SMALL.len() - 1], &["10"]].concat());
    assert_ne!(data_rows(&a), data_rows(&c));
}

#[test]
fn stdout_output_and_summary() {
    let out = semiblind(SMALL);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_rows(&stdout).len(), 4 * 4);
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("scheme"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "n = 6\nm = 3\nl = 4\nrate = 1:2:1\nsnr-db-fixed = 5\ntrials = 100\nschemes = ris\n").unwrap();
    let csv = run_to(dir.path(), "out.csv", &["--config", cfg.to_str().unwrap(), "--trials", "200"]);
    assert!(csv.contains("# trials: 200"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("ris,rate,")));
}

#[test]
fn overhead_report() {
    let out = semiblind(&["--n", "32", "--m", "12", "--l", "16", "--overhead-report"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("6528") && text.contains("384"), "{text}");
}

#[test]
fn exit_codes() {
    assert_eq!(semiblind(&["--preset", "fig1", "--l", "17"]).status.code(), Some(2));
    assert_eq!(semiblind(&["--n", "2", "--m", "3", "--l", "1", "--rate", "1"]).status.code(), Some(2));
    assert_eq!(semiblind(&[SMALL, &["--scale-mode", "bogus"]].concat()).status.code(), Some(2));
    // The printed joint form needs the 'paper' scale mode.
    assert_eq!(
        semiblind(&[SMALL, &["--schemes", "joint", "--joint-method", "printed"]].concat()).status.code(),
        Some(2)
    );
    assert_eq!(semiblind(&["--config", "/nonexistent/run.conf"]).status.code(), Some(4));
    assert_eq!(
        semiblind(&[SMALL, &["--output", "/nonexistent/dir/out.csv"]].concat()).status.code(),
        Some(4)
    );
}
