use std::fs;

use dobac_core::{DobacError, RunLog};
use dobac_harness::config::{file_from_table, resolve_table, Source, MSD_CUBIC_PRESET};
use dobac_harness::plot::{legend, plot, PlotSpec};
use dobac_harness::report::parse_numbers;
use dobac_harness::run::{run_to_dir, sweep};

fn short(extra: &[&str]) -> toml::Table {
    let mut o: Vec<String> = vec!["sim.horizon=2.0".into(), "analysis.window=[1.0, 2.0]".into()];
    o.extend(extra.iter().map(|s| s.to_string()));
    resolve_table(&Source { preset: Some(MSD_CUBIC_PRESET), config: None, overrides: &o }).unwrap()
}

#[test]
fn run_writes_a_log_that_reloads_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let file = file_from_table(short(&["sim.decimation=7"])).unwrap();
    let sc = file.to_scenario().unwrap();
    let out = run_to_dir(&file, &sc, dir.path(), "r").unwrap();
    let back = RunLog::load(&out.csv).unwrap();
    assert_eq!(back.samples(), out.log.samples());
    // 2000 steps, every 7th logged, plus the final row
    assert_eq!(back.len(), 2000 / 7 + 2);

    let text = fs::read_to_string(&out.report_path).unwrap();
    assert!(text.contains("mode = integrating"));
    let nums = parse_numbers(&text);
    let rms = nums.iter().find(|(k, _)| k == "rms_e").unwrap().1;
    assert!((rms - out.report.metrics.rms_e).abs() <= 1e-9 * rms);
}

#[test]
fn sweep_runs_every_value_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = ["1.0", "10.0", "-3.0"].iter().map(|s| s.to_string()).collect();
    let s = sweep(&short(&[]), "rejection.k_eta", &values, dir.path()).unwrap();
    assert_eq!(s.entries.len(), 3);
    let failed: Vec<_> = s.failures().map(|(v, _)| v.to_string()).collect();
    assert_eq!(failed, vec!["-3.0"]);
    let table = fs::read_to_string(&s.table_path).unwrap();
    assert_eq!(table.lines().filter(|l| l.ends_with(" ok")).count(), 2);
    assert!(table.contains("failed"));
    assert!(dir.path().join("msd-cubic-paper__rejection.k_eta=10.0.csv").exists());
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = sweep(&short(&[]), "rejection.k_eta", &[], dir.path()).unwrap_err();
    assert!(matches!(err, DobacError::Config { .. }));
}

#[test]
fn unknown_sweep_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = sweep(&short(&[]), "rejection.gain", &["1".to_string()], dir.path()).unwrap_err();
    assert!(matches!(err, DobacError::Config { ref field, .. } if field == "rejection.gain"), "{err:?}");
}

#[test]
fn mode_sweep_feeds_an_error_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = ["off", "direct", "integrating"].iter().map(|s| s.to_string()).collect();
    let s = sweep(&short(&[]), "rejection.mode", &values, dir.path()).unwrap();
    let logs: Vec<(String, RunLog)> = s
        .entries
        .iter()
        .map(|e| (e.value.clone(), e.outcome.as_ref().unwrap().log.clone()))
        .collect();
    assert_eq!(logs[0].1.samples().iter().map(|r| r.u_drj.abs()).fold(0.0, f64::max), 0.0);
    let path = dir.path().join("cmp.svg");
    plot(PlotSpec::ErrorComparison, &logs, None, &path).unwrap();
    assert_eq!(legend(PlotSpec::ErrorComparison, &logs, None).unwrap(), values);
}

#[test]
fn plots_render_and_reject_mixed_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let file = file_from_table(short(&["sim.decimation=10"])).unwrap();
    let sc = file.to_scenario().unwrap();
    let log = run_to_dir(&file, &sc, dir.path(), "a").unwrap().log;
    let logs = vec![("a".to_string(), log.clone())];
    for spec in PlotSpec::ALL {
        let path = dir.path().join(format!("{}.svg", spec.name()));
        plot(spec, &logs, Some(10.0), &path).unwrap();
        assert!(fs::read_to_string(&path).unwrap().starts_with("<svg"));
    }
    assert_eq!(legend(PlotSpec::UDrj, &logs, Some(10.0)).unwrap(), vec!["a: u_drj", "+u_bar", "-u_bar"]);

    let other = RunLog::new(3, 1, 0);
    let mixed = vec![("a".to_string(), log), ("b".to_string(), other)];
    let err = plot(PlotSpec::Eta, &mixed, None, &dir.path().join("x.svg")).unwrap_err();
    assert!(matches!(err, DobacError::SchemaMismatch(_)));
    assert!(matches!("sideways".parse::<PlotSpec>(), Err(DobacError::Config { .. })));
}
