use novelbench::benchmark::metrics::{nm_variance, reactivity};
use novelbench::benchmark::report::{
    config_hash, export_report, parse_report_csv, parse_traces_csv, write_report_csv,
    write_traces_csv,
};
use novelbench::benchmark::{
    extract_dataset, run_benchmark, BenchConfig, EvalProtocol, SetFeatures, Slice,
};
use novelbench::detectors::DetectorKind;
use novelbench::features::WaveletSpec;
use novelbench::signal::{default_specs, generate_dataset};
use proptest::collection::vec;
use proptest::prelude::*;

/// Sets 1, 2 and 5 at 120 s with light noise.
fn small_sets() -> Vec<SetFeatures> {
    let specs: Vec<_> = default_specs()
        .into_iter()
        .filter(|s| ["set1", "set2", "set5"].contains(&s.set_name.as_str()))
        .map(|s| s.with_duration(120.0).with_noise(0.01))
        .collect();
    extract_dataset(
        &generate_dataset(&specs, 0).unwrap(),
        &WaveletSpec::default(),
    )
    .unwrap()
}

fn small_protocol() -> EvalProtocol {
    EvalProtocol {
        train: Slice::new("set1", 0, Some(80)),
        nominal: Slice::new("set1", 80, None),
        novelty: Some(Slice::new("set5", 0, None)),
        trace: Vec::new(),
    }
}

fn untimed() -> BenchConfig {
    BenchConfig {
        timing_evals: 0,
        ..BenchConfig::default()
    }
}

fn report_bytes(cfg: &BenchConfig) -> (String, String) {
    let result = run_benchmark(&small_sets(), &small_protocol(), cfg).unwrap();
    let (mut r, mut t) = (Vec::new(), Vec::new());
    write_report_csv(&result.rows, &mut r).unwrap();
    write_traces_csv(&result.traces, &mut t).unwrap();
    (String::from_utf8(r).unwrap(), String::from_utf8(t).unwrap())
}

#[test]
fn full_grid_has_every_column_and_unit_traces() {
    let sets = small_sets();
    let result = run_benchmark(
        &sets,
        &small_protocol(),
        &BenchConfig {
            timing_evals: 50,
            ..BenchConfig::default()
        },
    )
    .unwrap();
    assert_eq!(result.rows.len(), 24);
    assert_eq!(result.n_feat, 70);
    for row in &result.rows {
        assert!(
            !row.failed(),
            "{} {}: {}",
            row.detector,
            row.transform,
            row.flags
        );
        for v in [
            row.fp_pct,
            row.variance_scaled,
            row.variance_raw,
            row.reactivity,
            row.infer_us_mean,
            row.infer_us_median,
        ] {
            assert!(v.is_some_and(f64::is_finite));
        }
        let scaled: Vec<f64> = result
            .traces
            .iter()
            .filter(|t| t.detector == row.detector && t.transform == row.transform)
            .map(|t| t.nm_scaled.unwrap())
            .collect();
        assert_eq!(scaled.len(), 3 * 120 - 80);
        assert_eq!(scaled.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        assert_eq!(
            scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            1.0
        );
    }
}

#[test]
fn repeated_runs_write_identical_reports() {
    let cfg = untimed();
    assert_eq!(report_bytes(&cfg), report_bytes(&cfg));
}

#[test]
fn report_csv_parses_back() {
    let cfg = BenchConfig {
        detectors: vec![DetectorKind::KMeans, DetectorKind::Lof],
        timing_evals: 20,
        ..BenchConfig::default()
    };
    let result = run_benchmark(&small_sets(), &small_protocol(), &cfg).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&result.rows, &mut buf).unwrap();
    assert_eq!(
        parse_report_csv(std::str::from_utf8(&buf).unwrap()).unwrap(),
        result.rows
    );
    let mut buf = Vec::new();
    write_traces_csv(&result.traces, &mut buf).unwrap();
    assert_eq!(
        parse_traces_csv(std::str::from_utf8(&buf).unwrap()).unwrap(),
        result.traces
    );

    let dir = tempfile::tempdir().unwrap();
    let paths = export_report(&result, 0, "abc", dir.path()).unwrap();
    assert_eq!(paths.len(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
    assert_eq!(json["config_hash"], "abc");
}

#[test]
fn config_hash_tracks_settings() {
    let p = EvalProtocol::default();
    let cfg = BenchConfig::default();
    let h = config_hash(&p, &cfg, "ctx");
    assert_eq!(h, config_hash(&p, &cfg, "ctx"));
    assert_ne!(
        h,
        config_hash(
            &p,
            &BenchConfig {
                seed: 1,
                ..cfg.clone()
            },
            "ctx"
        )
    );
    assert_ne!(h, config_hash(&p, &cfg, "other"));
    let mut det = cfg.clone();
    det.detector.lof_k = 7;
    assert_ne!(h, config_hash(&p, &det, "ctx"));
}

#[test]
fn default_protocol_traces_1548_chunks() {
    let specs = default_specs();
    let sets: Vec<SetFeatures> = specs
        .iter()
        .map(|s| SetFeatures {
            name: s.set_name.clone(),
            rows: vec![vec![0.0]; 206],
        })
        .collect();
    assert_eq!(
        EvalProtocol::default().trace_index(&sets).unwrap().len(),
        1548
    );
}

proptest! {
    #[test]
    fn reactivity_of_identical_sets_is_zero(xs in vec(-1e3f64..1e3, 1..40)) {
        prop_assert_eq!(reactivity(&xs, &xs).unwrap(), 0.0);
    }

    #[test]
    fn variance_ignores_shift_and_scales_quadratically(
        xs in vec(-10.0f64..10.0, 2..60),
        shift in -1e3f64..1e3,
        scale in -20.0f64..20.0,
    ) {
        let v = nm_variance(&xs).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        prop_assert!((nm_variance(&shifted).unwrap() - v).abs() <= 1e-9 * (1.0 + shift * shift));
        prop_assert!((nm_variance(&scaled).unwrap() - scale * scale * v).abs() <= 1e-9 * (1.0 + scale * scale * v));
    }
}
