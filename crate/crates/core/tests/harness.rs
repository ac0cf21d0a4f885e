use std::fs;
use std::path::Path;

use pimsim::harness::config::{random_orientation, OrientationSpec, SCENARIO_PRESETS};
use pimsim::harness::{emit_plot_data, run, run_to_dir, sweep_power_variation, write_sweep, ScenarioConfig};
use pimsim::PimError;

const MINIMAL: &str = r#"
[seeds]
scenario = 3
canceller = 4

[array]
preset = "2T2R"

[record]
train_len = 32768
test_len = 16384

[[sources]]
position_m = [0.0, 0.0, 2.5]
orientation = [0.0, 0.6, 0.8]
"#;

fn quick(cfg: &mut ScenarioConfig) {
    cfg.canceller.max_refreshes = 3;
    cfg.canceller.blocks_per_epoch = 4;
    cfg.output.psd_nfft = 512;
}

#[test]
fn every_preset_round_trips_through_toml() {
    for name in SCENARIO_PRESETS {
        let cfg = ScenarioConfig::preset(name).unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back, "{name}");
        assert_eq!(cfg.hash(), back.hash());
    }
}

#[test]
fn minimal_file_takes_defaults() {
    let cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
    assert_eq!(cfg.noise.pim_over_noise_db, 15.0);
    assert_eq!(cfg.canceller.n_sources, 1);
    let sc = cfg.scenario().unwrap();
    assert_eq!(sc.layout.n_chains, 2);
    assert_eq!(sc.seed, 3);
}

#[test]
fn non_unit_orientation_names_the_field() {
    let text = MINIMAL.replace("[0.0, 0.6, 0.8]", "[0.0, 0.6, 0.9]");
    match ScenarioConfig::from_toml_str(&text) {
        Err(PimError::Config { field, .. }) => assert!(field.contains("orientation"), "{field}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn unknown_key_is_a_parse_error_with_line() {
    let text = MINIMAL.replace("canceller = 4", "canceller = 4\ncanceler_typo = 1");
    match ScenarioConfig::from_toml_str(&text) {
        Err(PimError::Parse(msg)) => assert!(msg.contains("line"), "{msg}"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn seeds_are_mandatory() {
    let text = MINIMAL.replace("[seeds]\nscenario = 3\ncanceller = 4\n", "");
    assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(PimError::Parse(_))));
    let text = MINIMAL.replace("canceller = 4\n", "");
    assert!(matches!(ScenarioConfig::from_toml_str(&text), Err(PimError::Parse(_))));
}

#[test]
fn unknown_presets_are_rejected() {
    assert!(ScenarioConfig::preset("paper-scenario-9").is_err());
    let text = MINIMAL.replace("\"2T2R\"", "\"3T3R\"");
    assert!(ScenarioConfig::from_toml_str(&text).is_err());
}

#[test]
fn scenario_one_preset_has_the_published_source() {
    let cfg = ScenarioConfig::preset("paper-scenario-1").unwrap();
    assert_eq!(cfg.sources.len(), 1);
    assert_eq!(cfg.sources[0].position_m, [0.0, 0.0, 2.5]);
    assert_eq!((cfg.record.train_len, cfg.record.test_len), (131_072, 65_536));
    let sc = cfg.scenario().unwrap();
    assert_eq!(sc.layout.n_chains, 16);
    assert_eq!(sc.layout.elements.len(), 64);
    assert!((sc.plan.rx_center_hz() - 1771.5e6).abs() < 1e-3);
}

#[test]
fn paper_presets_reject_edited_constants() {
    let mut cfg = ScenarioConfig::preset("paper-scenario-2").unwrap();
    cfg.sources[1].position_m = [0.0, 0.0, 3.5];
    assert!(cfg.validate().is_err());
    let mut cfg = ScenarioConfig::preset("paper-scenario-1").unwrap();
    cfg.record.train_len = 65_536;
    assert!(cfg.validate().is_err());
    let mut cfg = ScenarioConfig::preset("paper-scenario-1").unwrap();
    cfg.carriers.cc_offsets_hz[0] -= 1.0;
    assert!(cfg.validate().is_err());
    // Desk presets carry no such constraint.
    let mut cfg = ScenarioConfig::preset("desk-scenario-1").unwrap();
    cfg.sources[0].position_m = [0.0, 0.0, 3.5];
    assert!(cfg.validate().is_ok());
}

#[test]
fn off_grid_record_is_rejected() {
    let text = MINIMAL.replace("train_len = 32768", "train_len = 24576");
    assert!(ScenarioConfig::from_toml_str(&text).is_err());
}

#[test]
fn random_orientation_is_unit_and_seeded() {
    let a = random_orientation(5, 0);
    assert!((a.norm() - 1.0).abs() < 1e-12);
    assert_eq!(a, random_orientation(5, 0));
    assert_ne!(a, random_orientation(5, 1));
    assert_ne!(a, random_orientation(6, 0));
    let cfg = ScenarioConfig::preset("desk-scenario-2").unwrap();
    assert!(cfg.sources.iter().all(|s| matches!(&s.orientation, OrientationSpec::Keyword(k) if k == "random")));
    let sc = cfg.scenario().unwrap();
    assert_eq!(sc.sources[2].orientation, random_orientation(cfg.seeds.scenario, 2));
}

fn data_rows(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# schema: pimsim-"), "{}", path.display());
    lines.skip(1).map(|s| s.to_string()).collect()
}

#[test]
fn run_exports_consistent_plot_data() {
    let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
    quick(&mut cfg);
    cfg.noise.power_db = -3.0;
    let dir = tempfile::tempdir().unwrap();
    let report = run_to_dir(&cfg, dir.path()).unwrap();
    assert_eq!(report.config_hash, cfg.hash());
    for f in &report.files {
        assert!(dir.path().join(f).exists(), "{f} listed but missing");
    }
    let psd = data_rows(&dir.path().join("psd.csv"));
    assert_eq!(psd.len(), 512);
    for row in &psd {
        let nf: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!((nf - (-3.0)).abs() < 1e-9);
    }
    assert_eq!(data_rows(&dir.path().join("psd_chains.csv")).len(), 2 * 512);
    assert_eq!(data_rows(&dir.path().join("suppression.csv")).len(), 2);
    let conv = data_rows(&dir.path().join("convergence.csv"));
    assert!(!conv.is_empty() && conv.len() <= 3);
    // Every CSV carries a schema tag.
    for entry in fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            data_rows(&p);
        }
    }
    let back = ScenarioConfig::from_toml_str(&fs::read_to_string(dir.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(back.hash(), report.config_hash);
}

#[test]
fn emit_rejects_incomplete_output() {
    let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
    quick(&mut cfg);
    let mut out = run(&cfg).unwrap();
    out.psd_residual.pop();
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_plot_data(&out, &cfg, dir.path()).is_err());
}

#[test]
fn signal_dumps_are_written_on_request() {
    let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
    quick(&mut cfg);
    cfg.output.dump_signals = true;
    let dir = tempfile::tempdir().unwrap();
    let report = run_to_dir(&cfg, dir.path()).unwrap();
    let res = pimsim::waveform::dump::read_dump(&dir.path().join("signals/residual_01.iq")).unwrap();
    assert_eq!(res.len(), (32768 + 16384) / 8);
    assert!(report.files.iter().any(|f| f == "sim/manifest.json"));
}

#[test]
fn sweep_heat_map_matches_layout_grid() {
    let mut cfg = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
    cfg.array = pimsim::harness::config::ArraySpec::preset("paper-16T16R");
    let res = sweep_power_variation(&cfg, &[0.5]).unwrap();
    assert_eq!(res.distances[0].chain_db.len(), 16);
    assert_eq!(res.distances[0].element_db.len(), 64);
    let dir = tempfile::tempdir().unwrap();
    let files = write_sweep(&cfg, &res, dir.path()).unwrap();
    for pol in ["vertical", "horizontal"] {
        let name = format!("heatmap_0p5m_{pol}.csv");
        assert!(files.contains(&name));
        let rows = data_rows(&dir.path().join(&name));
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.split(',').count() == 4));
    }
    assert!(sweep_power_variation(&cfg, &[0.0]).is_err());
}
