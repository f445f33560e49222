use std::process::{Command, Output};

fn mediated(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mediated")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn params_reports_desk_point() {
    let o = mediated(&["params"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("# command: params"));
    assert!(s.contains("J,-1.04154"));
    assert!(s.contains("regime,quantum"));
    assert!(s.contains("validity_G_over_kappa,"));
    assert!(s.contains("# optical-spring:"));
}

#[test]
fn json_matches_csv_values() {
    let csv = stdout(&mediated(&["nulls", "--kappa", "0.5"]));
    let json = stdout(&mediated(&["--format", "json", "nulls", "--kappa", "0.5"]));
    assert!(json.trim_start().starts_with('{'));
    for line in csv.lines().filter(|l| l.starts_with("5.0")) {
        for field in line.split(',') {
            assert!(json.contains(field), "{field} missing from json");
        }
    }
}

#[test]
fn writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.csv");
    let o = mediated(&["--out", path.to_str().unwrap(), "fig1", "--kappa", "0.5,3", "--delta-count", "21"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# table: curves"));
    assert!(text.contains("# table: nulls"));
}

#[test]
fn config_hash_ignores_output_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let a = stdout(&mediated(&["params"]));
    mediated(&["--threads", "2", "--out", path.to_str().unwrap(), "params"]);
    assert_eq!(a, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn convention_changes_rates_but_not_coupling() {
    let s = stdout(&mediated(&["params"]));
    let h = stdout(&mediated(&["--convention", "halved-mirrored", "params"]));
    let get = |t: &str, k: &str| t.lines().find(|l| l.starts_with(k)).unwrap().to_string();
    assert_eq!(get(&s, "J,"), get(&h, "J,"));
    assert_ne!(get(&s, "Gamma_total,"), get(&h, "Gamma_total,"));
    assert!(h.contains("# rate-convention: halved-mirrored"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(mediated(&["--config", "/definitely/missing.cfg", "params"]).status.code(), Some(2));
    assert_eq!(mediated(&["--format", "xml", "params"]).status.code(), Some(2));
    assert_eq!(mediated(&["nosuchcommand"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kappa = -1\n").unwrap();
    assert_eq!(mediated(&["--config", cfg.to_str().unwrap(), "params"]).status.code(), Some(2));
    let big = mediated(&["simulate-effective", "--dims", "100,100"]);
    assert_eq!(big.status.code(), Some(2));
}

#[test]
fn failed_validation_exits_one() {
    let o = mediated(&["validate", "--no-full", "--corrupt-term", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("oracle-vs-closed-form,fail"));
    assert!(s.contains("#2 "));
}

#[test]
fn verbose_validation_lists_dropped_terms() {
    let o = mediated(&["validate", "--no-full", "--verbose", "--corrupt-term", "0"]);
    assert!(stdout(&o).contains("# table: dropped_terms"));
}

#[test]
fn effective_transfer_matches_closed_form() {
    let o = mediated(&["simulate-effective", "--records", "200", "--compare-gauss"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let value = |k: &str| -> f64 {
        s.lines().find(|l| l.starts_with(k)).unwrap().split(',').nth(1).unwrap().parse().unwrap()
    };
    assert!(value("j_relative_error,") < 0.01);
    assert!(value("max_fock_gauss_occupation_diff,") < 1e-3);
}
