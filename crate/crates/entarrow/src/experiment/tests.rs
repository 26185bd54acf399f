use super::*;
use approx::assert_relative_eq;

fn config_from(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "frobnicate", "seed": 1, "params": {}}"#,
    );
    assert!(matches!(config.validate(), Err(Error::Config(_))));
    assert!(matches!(run(&config), Err(Error::Config(_))));
}

#[test]
fn malformed_envelopes_are_config_errors() {
    // Unknown top-level field.
    let r = ExperimentConfig::from_json(
        r#"{"schema_version": 1, "experiment": "arrow", "seed": 1, "params": {}, "extra": 1}"#,
    );
    assert!(matches!(r, Err(Error::Config(_))));
    // Missing seed.
    let r = ExperimentConfig::from_json(
        r#"{"schema_version": 1, "experiment": "arrow", "params": {}}"#,
    );
    assert!(matches!(r, Err(Error::Config(_))));
    // Wrong schema version.
    let r = ExperimentConfig::from_json(
        r#"{"schema_version": 99, "experiment": "arrow", "seed": 1, "params": {}}"#,
    );
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn unknown_param_fields_are_config_errors() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "arrow", "seed": 1,
            "params": {"n_env": 4, "bogus": true}}"#,
    );
    let err = config.validate().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bogus"), "message was {msg}");
}

#[test]
fn out_of_range_params_are_config_errors() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "arrow", "seed": 1,
            "params": {"n_env": 0}}"#,
    );
    assert!(matches!(config.validate(), Err(Error::Config(_))));
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "typicality", "seed": 1,
            "params": {"dim_a": 2, "dim_b": 2, "n_samples": 10}}"#,
    );
    assert!(matches!(config.validate(), Err(Error::Config(_))));
}

fn arrow_config(seed: u64) -> ExperimentConfig {
    config_from(&format!(
        r#"{{"schema_version": 1, "experiment": "arrow", "seed": {seed},
            "params": {{"n_env": 5, "t_max": 2.0, "n_times": 41}}}}"#
    ))
}

#[test]
fn arrow_run_produces_overlap_series_and_reversal() {
    let record = run(&arrow_config(7)).unwrap();
    assert_eq!(record.series.len(), 1);
    let overlap = &record.series[0];
    assert_eq!(overlap.name, "overlap");
    assert_eq!(overlap.columns, vec!["t", "re_r", "im_r", "abs_r", "s_ent"]);
    assert_eq!(overlap.rows.len(), 41);
    assert_relative_eq!(overlap.rows[0][3], 1.0, epsilon = 1e-12);
    assert_relative_eq!(overlap.rows[0][4], 0.0, epsilon = 1e-12);

    let reversal = record.summary["reversal_entropy_error"].as_f64().unwrap();
    assert!(reversal < 1e-8, "reversal entropy error {reversal}");
    let state_err = record.summary["reversal_state_error"].as_f64().unwrap();
    assert!(state_err < 1e-8, "reversal state error {state_err}");
    assert!(record.summary["decoherence_time"].is_number());
}

#[test]
fn arrow_scaling_fit_has_negative_slope() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "arrow", "seed": 3,
            "params": {"n_env": 3, "t_max": 1.0, "n_times": 11,
                       "scaling": {"env_sizes": [2, 3, 4, 5, 6], "seeds_per_size": 12,
                                   "t_star": 1.0}}}"#,
    );
    let record = run(&config).unwrap();
    let fit = &record.summary["scaling_fit"];
    assert!(fit["slope"].as_f64().unwrap() < 0.0);
    assert!(fit["r_squared"].as_f64().unwrap() > 0.8);
    assert!(record.series.iter().any(|s| s.name == "scaling"));
}

fn cl_config(gamma: f64) -> ExperimentConfig {
    config_from(&format!(
        r#"{{"schema_version": 1, "experiment": "cl", "seed": 0,
            "params": {{"n_points": 64, "half_width": 8.0, "mass": 1.0,
                        "gamma": {gamma}, "temperature": 2.0, "omega": 1.0,
                        "initial": {{"kind": "cat", "centers": [-2.0, 2.0], "width": 0.7}},
                        "terms": ["decoherence"], "t_final": 0.3,
                        "snapshot_stride": 20, "separation": 4.0,
                        "snapshot_times": [0.0, 0.3]}}}}"#
    ))
}

#[test]
fn cl_run_reports_timescales_and_snapshots() {
    let record = run(&cl_config(0.05)).unwrap();
    let names: Vec<&str> = record.series.iter().map(|s| s.name.as_str()).collect();
    assert!(names.contains(&"coherence"));
    assert!(names.contains(&"min_eig"));
    assert!(names.contains(&"snapshots"));
    let ts = &record.summary["timescales"];
    assert!(ts["tau_decoherence"].as_f64().unwrap() > 0.0);
    assert!(record.summary["expected_ratio"].as_f64().unwrap() > 0.0);
    // Dephasing-only runs stay positive.
    assert!(record.summary["min_eig_overall"].as_f64().unwrap() >= -1e-8);

    let snapshots = record.series.iter().find(|s| s.name == "snapshots").unwrap();
    assert_eq!(snapshots.columns, vec!["t", "x", "y", "re_rho", "im_rho"]);
    assert_eq!(snapshots.rows.len(), 2 * 64 * 64);
}

#[test]
fn cl_without_relaxation_has_null_timescales() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "cl", "seed": 0,
            "params": {"n_points": 64, "half_width": 8.0, "mass": 1.0,
                       "gamma": 0.0, "temperature": 2.0, "omega": 1.0,
                       "initial": {"kind": "gaussian", "center": 0.0, "width": 0.8},
                       "terms": ["unitary"], "t_final": 0.2,
                       "separation": 2.0}}"#,
    );
    let record = run(&config).unwrap();
    assert!(record.summary["timescales"].is_null());
}

#[test]
fn cl_unstable_step_is_a_config_error() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "cl", "seed": 0,
            "params": {"n_points": 64, "half_width": 8.0, "mass": 1.0,
                       "gamma": 0.1, "temperature": 2.0, "omega": 1.0,
                       "initial": {"kind": "gaussian", "center": 0.0, "width": 0.8},
                       "terms": ["unitary"], "t_final": 0.2, "dt": 1.0,
                       "separation": 2.0}}"#,
    );
    assert!(matches!(config.validate(), Err(Error::Config(_))));
}

/// Exact Haar average of the single-side entropy for dims (m, n), m <= n:
/// `sum_{k=n+1}^{mn} 1/k - (m-1)/(2n)`.
fn page_mean(m: usize, n: usize) -> f64 {
    let harmonic: f64 = (n + 1..=m * n).map(|k| 1.0 / k as f64).sum();
    harmonic - (m - 1) as f64 / (2 * n) as f64
}

#[test]
fn typicality_mean_matches_the_exact_page_value() {
    let samples = typicality_samples(2, 16, 4000, 11, None).unwrap();
    // The bipartite sum counts both sides of a pure state.
    let mean_single = samples.iter().sum::<f64>() / samples.len() as f64 / 2.0;
    let expected = page_mean(2, 16);
    assert!(
        (mean_single - expected).abs() < 0.02 * expected,
        "mean {mean_single} vs Page {expected}"
    );
}

#[test]
fn typicality_stats_are_consistent() {
    let stats = typicality(4, 4, 500, 3, None).unwrap();
    assert!(stats.min <= stats.mean && stats.mean <= stats.max);
    assert!(stats.max <= stats.max_possible + 1e-9);
    assert!((0.0..=1.0).contains(&stats.fraction_below_low));
    assert!((0.0..=1.0).contains(&stats.fraction_above_high));
    assert_eq!(stats.n_samples, 500);
    assert!(stats.restriction_dim.is_none());
}

#[test]
fn typicality_rejects_bad_arguments() {
    assert!(matches!(typicality_samples(2, 2, 10, 0, None), Err(Error::Usage(_))));
    assert!(matches!(typicality_samples(1, 1, 500, 0, None), Err(Error::Usage(_))));
}

#[test]
fn restriction_to_a_product_span_suppresses_entanglement() {
    // Subspace spanned by |0>_A|0>_B and |0>_A|1>_B: every vector is a
    // product, so restricted sampling cannot generate entanglement.
    let dim = 64;
    let decomposition = MacrostateDecomposition::from_basis_groups(
        HilbertSpace::single(dim).unwrap(),
        &[vec![0, 1], (2..dim).collect()],
        vec!["products".into(), "rest".into()],
    )
    .unwrap();
    let stats = typicality(8, 8, 300, 5, Some((&decomposition, 0))).unwrap();
    assert!(stats.mean < 1e-9, "restricted mean {0}", stats.mean);
    assert_eq!(stats.restriction_dim, Some(2));

    // A too-small restriction subspace is rejected.
    let tiny = MacrostateDecomposition::from_basis_groups(
        HilbertSpace::single(dim).unwrap(),
        &[vec![0], (1..dim).collect()],
        vec!["point".into(), "rest".into()],
    )
    .unwrap();
    assert!(matches!(
        typicality(8, 8, 300, 5, Some((&tiny, 0))),
        Err(Error::Usage(_))
    ));
}

#[test]
fn restriction_flows_through_the_config_path() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "typicality", "seed": 8,
            "params": {"dim_a": 8, "dim_b": 8, "n_samples": 150,
                       "restriction": {"basis_indices": [0, 1]}}}"#,
    );
    let record = run(&config).unwrap();
    let stats = &record.summary["stats"];
    assert!(stats["mean"].as_f64().unwrap() < 1e-9);
    assert_eq!(stats["restriction_dim"], 2);

    // Duplicate and out-of-range indices are config errors.
    let dup = config_from(
        r#"{"schema_version": 1, "experiment": "typicality", "seed": 8,
            "params": {"dim_a": 8, "dim_b": 8, "n_samples": 150,
                       "restriction": {"basis_indices": [0, 0]}}}"#,
    );
    assert!(matches!(dup.validate(), Err(Error::Config(_))));
    let oob = config_from(
        r#"{"schema_version": 1, "experiment": "typicality", "seed": 8,
            "params": {"dim_a": 8, "dim_b": 8, "n_samples": 150,
                       "restriction": {"basis_indices": [0, 64]}}}"#,
    );
    assert!(matches!(oob.validate(), Err(Error::Config(_))));
}

#[test]
fn standard_error_halves_under_sample_doubling() {
    // sigma/sqrt(n) scaling over three doublings; deterministic seeds make
    // this a fixed computation, not a statistical gamble.
    let mut errors = Vec::new();
    for n in [400usize, 800, 1600, 3200] {
        let samples = typicality_samples(2, 4, n, 21, None).unwrap();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var =
            samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n as f64 - 1.0);
        errors.push((var / n as f64).sqrt());
    }
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            (0.55..=0.9).contains(&ratio),
            "standard error ratio {ratio} outside the sqrt scaling band; errors {errors:?}"
        );
    }
}

#[test]
fn eph_run_produces_verdicts() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "eph", "seed": 5,
            "params": {
              "state": {"kind": "amplitudes", "dims": [2, 2, 2],
                        "re": [0, 0, 0.7071067811865476, 0, 0.7071067811865476, 0, 0, 0],
                        "im": [0, 0, 0, 0, 0, 0, 0, 0]},
              "checks": [
                {"variant": "eph_m", "m": 0.0, "tol": 1e-9,
                 "factorization": {"dims": [4, 2]}},
                {"variant": "eph_0r", "tol": 1e-9,
                 "class": {"kind": "qubit_permutations", "dims": [2, 2, 2]}},
                {"variant": "eph_leq_mr", "m": 1.5, "tol": 1e-9,
                 "class": {"kind": "spatial_blocks", "block_size": 1, "chain_len": 3}}
              ]}}"#,
    );
    let record = run(&config).unwrap();
    assert_eq!(record.verdicts.len(), 3);
    use crate::factorization::EphStatus;
    assert_eq!(record.verdicts[0].status, EphStatus::Satisfied);
    assert_eq!(record.verdicts[1].status, EphStatus::Refuted);
    assert_eq!(record.verdicts[2].status, EphStatus::Satisfied);
}

#[test]
fn export_writes_csv_and_json_with_exact_floats() {
    let record = run(&arrow_config(9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = export(&record, dir.path(), ExportFormat::All).unwrap();
    assert!(files.iter().any(|p| p.file_name().unwrap() == "arrow_9_overlap.csv"));
    assert!(files.iter().any(|p| p.file_name().unwrap() == "arrow_9_summary.json"));

    let csv = std::fs::read_to_string(dir.path().join("arrow_9_overlap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,re_r,im_r,abs_r,s_ent");
    for (row, line) in record.series[0].rows.iter().zip(lines) {
        for (value, cell) in row.iter().zip(line.split(',')) {
            let parsed: f64 = cell.parse().unwrap();
            assert_eq!(parsed.to_bits(), value.to_bits(), "cell {cell} != {value}");
        }
    }

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("arrow_9_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["schema_version"], SCHEMA_VERSION);
    assert_eq!(summary["config"]["seed"], 9);
}

#[test]
fn eph_export_writes_the_verdict_file() {
    let config = config_from(
        r#"{"schema_version": 1, "experiment": "eph", "seed": 12,
            "params": {
              "state": {"kind": "basis", "dims": [2, 2], "index": 0},
              "checks": [{"variant": "eph_0r", "tol": 1e-9,
                          "class": {"kind": "qubit_permutations", "dims": [2, 2]}}]}}"#,
    );
    let record = run(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&record, dir.path(), ExportFormat::All).unwrap();
    let text = std::fs::read_to_string(dir.path().join("eph_12_verdict.json")).unwrap();
    let verdicts: serde_json::Value = serde_json::from_str(&text).unwrap();
    let v = &verdicts[0];
    for field in
        ["variant", "status", "extremal_value", "tolerance", "witness_parameters", "restarts_used"]
    {
        assert!(v.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let record_a = run(&arrow_config(4)).unwrap();
    let record_b = run(&arrow_config(4)).unwrap();
    let files_a = export(&record_a, dir_a.path(), ExportFormat::All).unwrap();
    let files_b = export(&record_b, dir_b.path(), ExportFormat::All).unwrap();
    assert_eq!(files_a.len(), files_b.len());
    for (a, b) in files_a.iter().zip(&files_b) {
        assert_eq!(a.file_name(), b.file_name());
        let bytes_a = std::fs::read(a).unwrap();
        let bytes_b = std::fs::read(b).unwrap();
        assert_eq!(bytes_a, bytes_b, "files differ: {a:?}");
    }
}
