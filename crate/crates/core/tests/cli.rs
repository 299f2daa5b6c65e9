use std::fs;
use std::process::{Command, Output};

fn lorae_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorae-sim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn params_prints_provenance_csv() {
    let o = lorae_sim(&["params"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("region,dr,parameter,table_value,model_value\n"));
    assert!(out.contains("DR8"));
}

#[test]
fn toa_reports_rates_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = lorae_sim(&["toa", "--dr", "DR0,DR8", "--payload", "10", "--output", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("DR0,10,991.232,36.3"), "{out}");
    assert!(out.contains("DR8,10,"));
    assert!(dir.path().join("rates_10B.csv").exists());
}

#[test]
fn sweep_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = lorae_sim(&[
        "sweep", "--dr", "DR8", "--payload", "10", "--devices", "100,400", "--horizon-ms", "600000",
        "--replications", "2", "--output", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["sweep_rows.csv", "sweep_aggregate.csv", "plot_goodput_vs_devices.dat", "plot_goodput_vs_load.dat"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let rows = fs::read_to_string(dir.path().join("sweep_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 2);
}

#[test]
fn config_file_values_apply_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "dr = DR9\npayload = 10\ndevices = 50, 60\nhorizon_ms = 600000\nreplications = 1\nseed = 4\n").unwrap();
    let o = lorae_sim(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().skip(1).all(|l| l.starts_with("DR9,10,")));

    let o = lorae_sim(&["sweep", "--config", cfg.to_str().unwrap(), "--dr", "DR8", "--devices", "70"]);
    let out = stdout(&o);
    assert_eq!(out.lines().nth(1).unwrap().split(',').take(3).collect::<Vec<_>>(), ["DR8", "10", "70"]);
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        &["toa", "--dr", "DR7"][..],
        &["toa", "--dr", "DR0", "--payload", "500"],
        &["sweep", "--devices", "0"],
        &["sweep", "--config", "/nonexistent/file.cfg"],
        &["crossover", "--lora-dr", "DR8", "--lorae-dr", "DR0"],
    ] {
        let o = lorae_sim(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}
