//! End-to-end checks of the `ceco` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ceco::config::ScenarioConfig;
use ceco::trace_io;
use ceco_core::mpc::ControllerKind;
use ceco_core::sim::{ComparisonTable, MetricsReport};

const SHORT_CYCLE: &str = "t_s,v_mps,w_rad_wm2,t_amb_k\n0,0,900,308.15\n20,18,850,308.15\n40,18,800,308.15\n";

fn ceco(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ceco"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CECO_SEED")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Temp dir with a short cycle and a config pointing at it.
fn short_setup(extra: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("short.csv"), SHORT_CYCLE).unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, format!("cycle = \"short.csv\"\noutput_dir = \"out\"\n{extra}")).unwrap();
    (dir, cfg)
}

#[test]
fn run_writes_trace_and_metrics() {
    let (dir, cfg) = short_setup("");
    let o = ceco(&["run", "--config", cfg.to_str().unwrap(), "--controller", "ceco-e"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let rows = trace_io::read_trace_file(&out.join("trace_ceco-e.csv")).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.solve_ms == 0.0));
    let m = ceco::report::read_metrics(&out.join("metrics_ceco-e.json")).unwrap();
    assert_eq!(m.controller, ControllerKind::CecoE);
    assert_eq!(m.steps, 8);
    assert!(stdout(&o).contains("ceco-e"));
}

#[test]
fn dumped_default_config_runs_unedited() {
    let dir = tempfile::tempdir().unwrap();
    let o = ceco(&["--dump-default-config"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let parsed = ScenarioConfig::from_toml(&text, Path::new("dump.toml")).unwrap();
    assert_eq!(parsed, ScenarioConfig::default());
    assert_eq!(parsed.to_toml(), text);
    let cfg = dir.path().join("default.cfg");
    std::fs::write(&cfg, &text).unwrap();
    let o = ceco(&["run", "--config", "default.cfg", "--controller", "baseline"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("ceco-out/trace_baseline.csv").exists());
    assert!(dir.path().join("ceco-out/metrics_baseline.json").exists());
}

#[test]
fn invalid_fields_are_all_named() {
    let (dir, cfg) = short_setup("[mpc]\ncomfort_weight = -1.0\nnp = 0\n[occupant]\nalpha1 = 0.5\n");
    let o = ceco(&["run", "--config", cfg.to_str().unwrap(), "--controller", "ceco-c"], dir.path());
    assert!(!o.status.success());
    let err = stderr(&o);
    for field in ["mpc.comfort_weight", "mpc.np", "occupant.alpha2"] {
        assert!(err.contains(field), "missing {field} in {err}");
    }
    assert!(!dir.path().join("out").exists(), "nothing is written before validation passes");
}

#[test]
fn unknown_key_and_controller_are_rejected() {
    let (dir, cfg) = short_setup("[solver]\ntolerance = 1e-3\n");
    let o = ceco(&["run", "--config", cfg.to_str().unwrap(), "--controller", "ceco-e"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("tolerance"));
    let o = ceco(&["run", "--controller", "ceco-x"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ceco-x"));
}

#[test]
fn bad_cycle_row_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "t_s,v_mps,w_rad_wm2,t_amb_k\n0,0,900,308\n5,fast,900,308\n").unwrap();
    std::fs::write(dir.path().join("c.toml"), "cycle = \"bad.csv\"\n").unwrap();
    let o = ceco(&["run", "--config", "c.toml", "--controller", "baseline"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn compare_matches_individual_runs() {
    let (dir, cfg) = short_setup("");
    let cfg = cfg.to_str().unwrap();
    let o = ceco(&["compare", "--config", cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let table: ComparisonTable = ceco::report::read_comparison(&out.join("comparison.json")).unwrap();
    let kinds: Vec<ControllerKind> = table.rows.iter().map(|r| r.controller).collect();
    assert_eq!(kinds, ControllerKind::ALL);
    assert_eq!(table.rows[0].savings_pct, Some(0.0));
    let printed = stdout(&o);
    for k in ControllerKind::ALL {
        assert!(printed.contains(k.as_str()));
        assert!(out.join(format!("trace_{k}.csv")).exists());
    }

    let single = dir.path().join("single");
    for k in ControllerKind::ALL {
        let o = ceco(
            &["run", "--config", cfg, "--controller", k.as_str(), "--out-dir", single.to_str().unwrap()],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        let m: MetricsReport = ceco::report::read_metrics(&single.join(format!("metrics_{k}.json"))).unwrap();
        assert_eq!(table.get(k), Some(&m), "{k}");
        let a = std::fs::read(out.join(format!("trace_{k}.csv"))).unwrap();
        let b = std::fs::read(single.join(format!("trace_{k}.csv"))).unwrap();
        assert_eq!(a, b, "{k}");
    }
}

#[test]
fn seed_override_changes_the_plant() {
    let (dir, cfg) = short_setup("");
    let cfg = cfg.to_str().unwrap();
    let run = |seed: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_ceco"));
        c.args(["run", "--config", cfg, "--controller", "baseline", "--out-dir", out])
            .current_dir(dir.path())
            .env_remove("CECO_SEED");
        if let Some(s) = seed {
            c.env("CECO_SEED", s);
        }
        c.output().unwrap()
    };
    assert!(run(None, "a").status.success());
    assert!(run(Some("42"), "b").status.success());
    assert!(run(Some("7"), "c").status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("trace_baseline.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let o = run(Some("seven"), "d");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("CECO_SEED"));
}

#[test]
fn solver_log_has_iterations() {
    let (dir, cfg) = short_setup("");
    let o = ceco(
        &["run", "--config", cfg.to_str().unwrap(), "--controller", "ceco-ioch", "--solver-log", "log.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("step,iter,f,violation,step_length,grad_norm,penalty"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split(',').count() == 7));
}

#[test]
fn timing_fills_solve_times() {
    let (dir, cfg) = short_setup("");
    let o = ceco(
        &["run", "--config", cfg.to_str().unwrap(), "--controller", "ceco-c", "--timing"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = trace_io::read_trace_file(&dir.path().join("out/trace_ceco-c.csv")).unwrap();
    assert!(rows.iter().any(|r| r.solve_ms > 0.0));
}

#[test]
fn plot_writes_four_svgs() {
    let (dir, cfg) = short_setup("");
    let o = ceco(&["run", "--config", cfg.to_str().unwrap(), "--controller", "ceco-c"], dir.path());
    assert!(o.status.success());
    let o = ceco(&["plot", "--trace", "out/trace_ceco-c.csv", "--out-dir", "svg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ceco::plot::PLOT_FILES {
        let svg = std::fs::read_to_string(dir.path().join("svg").join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{name}");
    }
    let pmv = std::fs::read_to_string(dir.path().join("svg/pmv.svg")).unwrap();
    assert_eq!(pmv.matches("stroke-dasharray").count(), 4, "two dashed bounds plus their legend swatches");
}

#[test]
fn plot_rejects_empty_and_malformed_traces() {
    let dir = tempfile::tempdir().unwrap();
    let header = trace_io::TRACE_HEADER.join(",");
    std::fs::write(dir.path().join("empty.csv"), format!("{header}\n")).unwrap();
    let o = ceco(&["plot", "--trace", "empty.csv"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty trace"), "{}", stderr(&o));

    std::fs::write(
        dir.path().join("bad.csv"),
        format!("{header}\n0,1,2,3,4,5,6,7,8,9,10,11,12,13\n5,1,2,3,4,5,6,7,8,9,10,11,oops,13\n"),
    )
    .unwrap();
    let o = ceco(&["plot", "--trace", "bad.csv"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn pmv_eval_prints_value_and_label() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["pmv", "eval", "--t-cab", "299.15", "--t-ain", "283.15", "--t-int", "301.15", "--m-bl", "0.1"];
    let o = ceco(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("pmv"))
        .and_then(|v| v.trim().parse().ok())
        .expect("pmv line");
    let occ = ceco_core::comfort::OccupantParams::default();
    let expect = ceco_core::comfort::pmv_modified(26.0, 10.0, 28.0, 0.1, 0.0, &occ);
    assert!((value - expect).abs() < 1e-4, "{value} vs {expect}");
    assert!(text.contains("sensation"));
}
