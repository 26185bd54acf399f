//! Seeded, reproducible experiments over the library: the spin-bath arrow
//! study, the Caldeira-Leggett timescale study, Haar typicality of
//! entanglement entropy, and EPH verdict runs. Each run returns a
//! [`RunRecord`] whose time series export as CSV and whose summary and
//! verdicts export as JSON; identical (config, seed) pairs reproduce the
//! output files byte for byte within one build.

mod config;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde_json::json;

pub use config::{
    ArrowParams, ClParams, ClSetup, ClassParams, EphCheckParams, EphParams, ExperimentConfig,
    ExperimentKind, FactorizationParams, InitialStateParams, RestrictionParams, ScalingParams,
    StateParams, TypicalityParams, MAX_QUBITS, SCHEMA_VERSION,
};

use crate::caldeira;
use crate::dynamics;
use crate::entropy::{entanglement_entropy, MacrostateDecomposition};
use crate::error::{Error, Result};
use crate::factorization::{EphVerdict, Factorization};
use crate::fit::linear_fit;
use crate::hilbert::{derive_stream_seed, haar_sample_in_span, HilbertSpace, PureState};

/// A named table of float columns, exported as one CSV file.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// The in-memory result of one experiment run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Echo of the exact configuration, sufficient to re-run the experiment.
    pub config: ExperimentConfig,
    pub version: String,
    /// Wall-clock duration; deliberately absent from the exported files so
    /// that reruns stay byte-identical.
    pub duration: Duration,
    pub series: Vec<Series>,
    pub summary: serde_json::Value,
    pub verdicts: Vec<EphVerdict>,
}

/// Runs the experiment named by the config and returns its record.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let started = Instant::now();
    let (series, summary_body, verdicts) = match config.kind()? {
        ExperimentKind::Arrow => run_arrow(config).map_err(|e| e.with_context("arrow"))?,
        ExperimentKind::Cl => run_cl(config).map_err(|e| e.with_context("cl"))?,
        ExperimentKind::Typicality => {
            run_typicality(config).map_err(|e| e.with_context("typicality"))?
        }
        ExperimentKind::Eph => run_eph(config).map_err(|e| e.with_context("eph"))?,
    };
    let version = env!("CARGO_PKG_VERSION").to_string();
    let mut summary = json!({
        "schema_version": SCHEMA_VERSION,
        "experiment": config.experiment,
        "seed": config.seed,
        "version": version,
        "config": serde_json::to_value(config).expect("config serializes"),
    });
    merge_objects(&mut summary, summary_body);
    Ok(RunRecord {
        config: config.clone(),
        version,
        duration: started.elapsed(),
        series,
        summary,
        verdicts,
    })
}

fn merge_objects(base: &mut serde_json::Value, extra: serde_json::Value) {
    if let (Some(base_map), serde_json::Value::Object(extra_map)) = (base.as_object_mut(), extra)
    {
        for (k, v) in extra_map {
            base_map.insert(k, v);
        }
    }
}

impl Error {
    fn with_context(self, experiment: &str) -> Self {
        match self {
            Error::Usage(m) => Error::Usage(format!("{experiment}: {m}")),
            Error::Integration(m) => Error::Integration(format!("{experiment}: {m}")),
            Error::Fit(m) => Error::Fit(format!("{experiment}: {m}")),
            Error::Config(m) => Error::Config(format!("{experiment}: {m}")),
            other => other,
        }
    }
}

type RunnerOutput = (Vec<Series>, serde_json::Value, Vec<EphVerdict>);

// ---------------------------------------------------------------------------
// arrow

fn run_arrow(config: &ExperimentConfig) -> Result<RunnerOutput> {
    let p = config.arrow_params()?;
    let (model, h) = dynamics::build_spin_bath(
        p.n_env,
        (p.coupling_lo, p.coupling_hi),
        config.seed,
    )?;
    let times = linspace(0.0, p.t_max, p.n_times);
    let overlaps = dynamics::environment_overlap(&model, &h, &times)?;
    let bipartition = Factorization::identity(vec![2, 1 << p.n_env])?;
    let psi0 = model.initial_state();
    let entropies = dynamics::entanglement_trajectory(&psi0, &h, &bipartition, &times)?;

    let overlap_series = Series {
        name: "overlap".into(),
        columns: vec!["t".into(), "re_r".into(), "im_r".into(), "abs_r".into(), "s_ent".into()],
        rows: times
            .iter()
            .zip(&overlaps)
            .zip(&entropies)
            .map(|((&t, r), &s)| vec![t, r.re, r.im, r.norm(), s])
            .collect(),
    };

    let crossing_series: Vec<(f64, Complex64)> =
        times.iter().copied().zip(overlaps.iter().copied()).collect();
    let t_decoherence = dynamics::decoherence_time(&crossing_series, p.threshold)?;

    // Recoherence: evolve to t_max, reverse, and compare with the start.
    let forward = dynamics::evolve(&psi0, &h, p.t_max)?;
    let back = dynamics::evolve(&forward, &h, -p.t_max)?;
    let reversal_state_error = (back.amplitudes() - psi0.amplitudes()).norm();
    let s_start = entanglement_entropy(&psi0, &bipartition)?;
    let s_back = entanglement_entropy(&back, &bipartition)?;
    let reversal_entropy_error = (s_back - s_start).abs();

    let mut series = vec![overlap_series];
    let mut scaling_summary = serde_json::Value::Null;
    if let Some(scaling) = &p.scaling {
        let (scaling_series, fit) = run_arrow_scaling(config.seed, &p, scaling)?;
        series.push(scaling_series);
        scaling_summary = fit;
    }

    let summary = json!({
        "n_env": p.n_env,
        "threshold": p.threshold,
        "decoherence_time": t_decoherence,
        "final_abs_r": overlaps.last().map(|r| r.norm()),
        "max_s_ent": entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "reversal_state_error": reversal_state_error,
        "reversal_entropy_error": reversal_entropy_error,
        "scaling_fit": scaling_summary,
    });
    Ok((series, summary, Vec::new()))
}

/// Mean log overlap magnitude at `t_star` per environment size, with an
/// affine fit over the sizes.
fn run_arrow_scaling(
    seed: u64,
    p: &ArrowParams,
    scaling: &ScalingParams,
) -> Result<(Series, serde_json::Value)> {
    let jobs: Vec<(usize, u64)> = scaling
        .env_sizes
        .iter()
        .flat_map(|&n| {
            (0..scaling.seeds_per_size)
                .map(move |i| (n, derive_stream_seed(seed, ((n as u64) << 32) | i as u64)))
        })
        .collect();
    let logs: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|&(n, sub_seed)| -> Result<(usize, f64)> {
            let (model, h) =
                dynamics::build_spin_bath(n, (p.coupling_lo, p.coupling_hi), sub_seed)?;
            let r = dynamics::environment_overlap(&model, &h, &[scaling.t_star])?[0];
            Ok((n, r.norm().max(1e-300).ln()))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(scaling.env_sizes.len());
    for &n in &scaling.env_sizes {
        let values: Vec<f64> =
            logs.iter().filter(|(m, _)| *m == n).map(|(_, v)| *v).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        rows.push(vec![n as f64, mean]);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let fit = linear_fit(&xs, &ys)
        .map(|(slope, intercept, r_squared)| {
            json!({ "slope": slope, "intercept": intercept, "r_squared": r_squared })
        })
        .unwrap_or(serde_json::Value::Null);
    let series = Series {
        name: "scaling".into(),
        columns: vec!["n_env".into(), "mean_log_abs_r".into()],
        rows,
    };
    Ok((series, fit))
}

// ---------------------------------------------------------------------------
// cl

fn run_cl(config: &ExperimentConfig) -> Result<RunnerOutput> {
    let p = config.cl_params()?;
    let setup = p.build()?;
    let traj = caldeira::integrate(
        &setup.initial,
        &setup.params,
        p.t_final,
        setup.dt,
        setup.terms,
        p.snapshot_stride,
    )?;

    let coherence = caldeira::coherence_series(&traj, p.separation)?;
    let min_eigs: Vec<f64> = traj.states.iter().map(caldeira::positivity_min_eig).collect();

    let coherence_series = Series {
        name: "coherence".into(),
        columns: vec!["t".into(), "coherence".into()],
        rows: traj.times.iter().zip(&coherence).map(|(&t, &c)| vec![t, c]).collect(),
    };
    let min_eig_series = Series {
        name: "min_eig".into(),
        columns: vec!["t".into(), "min_eig".into()],
        rows: traj.times.iter().zip(&min_eigs).map(|(&t, &m)| vec![t, m]).collect(),
    };

    let mut series = vec![coherence_series, min_eig_series];
    if !p.snapshot_times.is_empty() {
        series.push(snapshot_series(&traj, &p.snapshot_times));
    }

    let snapped = caldeira::snapped_separation(setup.initial.grid(), p.separation)?;
    let constants = setup.params.constants;
    let expected_ratio = 2.0 * setup.params.mass * constants.k_b * setup.params.temperature
        * snapped
        * snapped
        / (constants.hbar * constants.hbar);
    let timescales = if setup.params.gamma > 0.0 && p.fit_timescales {
        serde_json::to_value(caldeira::timescales(&traj, &setup.params, p.separation)?)
            .expect("timescales serialize")
    } else {
        serde_json::Value::Null
    };

    let trace_drift = traj
        .states
        .iter()
        .map(|s| (s.trace() - 1.0).abs())
        .fold(0.0, f64::max);
    let min_eig_pairs: Vec<[f64; 2]> =
        traj.times.iter().zip(&min_eigs).map(|(&t, &m)| [t, m]).collect();
    let summary = json!({
        "dt": setup.dt,
        "separation": p.separation,
        "snapped_separation": snapped,
        "expected_ratio": expected_ratio,
        "timescales": timescales,
        "min_eig_series": min_eig_pairs,
        "min_eig_overall": min_eigs.iter().copied().fold(f64::INFINITY, f64::min),
        "max_trace_drift": trace_drift,
    });
    Ok((series, summary, Vec::new()))
}

/// Rows `(t, x, y, re_rho, im_rho)` for the stored snapshots nearest to the
/// requested times (deduplicated).
fn snapshot_series(traj: &caldeira::CLTrajectory, requested: &[f64]) -> Series {
    let mut picked: Vec<usize> = requested
        .iter()
        .map(|&t_req| {
            traj.times
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (*a - t_req).abs().partial_cmp(&(*b - t_req).abs()).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap_or(0)
        })
        .collect();
    picked.sort_unstable();
    picked.dedup();

    let mut rows = Vec::new();
    for &idx in &picked {
        let state = &traj.states[idx];
        let t = traj.times[idx];
        let grid = state.grid();
        let n = grid.n_points();
        for i in 0..n {
            for j in 0..n {
                let z = state.matrix()[(i, j)];
                rows.push(vec![t, grid.x(i), grid.x(j), z.re, z.im]);
            }
        }
    }
    Series {
        name: "snapshots".into(),
        columns: vec!["t".into(), "x".into(), "y".into(), "re_rho".into(), "im_rho".into()],
        rows,
    }
}

// ---------------------------------------------------------------------------
// typicality

/// Summary statistics of bipartite entanglement entropy over Haar samples.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TypicalityStats {
    pub n_samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    /// Largest attainable value, `2 ln min(dim_a, dim_b)`.
    pub max_possible: f64,
    /// Thresholds used for the fractions below, recorded so readers can
    /// re-threshold.
    pub low_threshold: f64,
    pub high_threshold: f64,
    /// Fraction of near-product samples (entropy below `0.1 * max_possible`).
    pub fraction_below_low: f64,
    /// Fraction of highly entangled samples (at or above `0.9 * max_possible`).
    pub fraction_above_high: f64,
    pub restriction_dim: Option<usize>,
}

/// Per-sample bipartite entanglement entropies of Haar states on
/// `dim_a * dim_b`, optionally restricted to one subspace of a macrostate
/// decomposition (Haar within that subspace). Per-sample seeds derive from
/// the master seed, so parallel and serial runs agree.
pub fn typicality_samples(
    dim_a: usize,
    dim_b: usize,
    n_samples: usize,
    seed: u64,
    restriction: Option<(&MacrostateDecomposition, usize)>,
) -> Result<Vec<f64>> {
    if dim_a < 1 || dim_b < 1 || dim_a * dim_b < 2 {
        return Err(Error::usage("the product dimension must be at least 2"));
    }
    if n_samples < 100 {
        return Err(Error::usage("typicality needs at least 100 samples"));
    }
    let dim = dim_a * dim_b;
    let subspace = match restriction {
        None => None,
        Some((decomposition, index)) => {
            if decomposition.space().total_dim() != dim {
                return Err(Error::usage(
                    "restriction decomposition does not match the product dimension",
                ));
            }
            if index >= decomposition.len() {
                return Err(Error::usage("restriction subspace index out of range"));
            }
            let basis = projector_range_basis(decomposition.projector(index));
            if basis.len() < 2 {
                return Err(Error::usage(
                    "the restriction subspace must have dimension at least 2",
                ));
            }
            Some(basis)
        }
    };

    let space = HilbertSpace::new(vec![dim_a, dim_b])?;
    let bipartition = Factorization::identity(vec![dim_a, dim_b])?;
    (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_stream_seed(seed, i as u64));
            let amplitudes = match &subspace {
                None => crate::hilbert::haar_sample_rng(dim, &mut rng)?
                    .amplitudes()
                    .clone(),
                Some(basis) => haar_sample_in_span(basis, &mut rng)?,
            };
            let psi = PureState::new(space.clone(), amplitudes)?;
            entanglement_entropy(&psi, &bipartition)
        })
        .collect()
}

/// Orthonormal basis of a projector's range (eigenvectors with eigenvalue
/// near 1).
fn projector_range_basis(projector: &nalgebra::DMatrix<Complex64>) -> Vec<DVector<Complex64>> {
    let eig = projector.clone().symmetric_eigen();
    let mut basis = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.5 {
            basis.push(eig.eigenvectors.column(k).into_owned());
        }
    }
    basis
}

/// Statistics of [`typicality_samples`].
pub fn typicality(
    dim_a: usize,
    dim_b: usize,
    n_samples: usize,
    seed: u64,
    restriction: Option<(&MacrostateDecomposition, usize)>,
) -> Result<TypicalityStats> {
    let restriction_dim = restriction
        .map(|(decomposition, index)| decomposition.rank(index));
    let samples = typicality_samples(dim_a, dim_b, n_samples, seed, restriction)?;
    Ok(stats_from_samples(dim_a, dim_b, &samples, restriction_dim))
}

fn stats_from_samples(
    dim_a: usize,
    dim_b: usize,
    samples: &[f64],
    restriction_dim: Option<usize>,
) -> TypicalityStats {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance =
        samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n as f64 - 1.0);
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_possible = 2.0 * (dim_a.min(dim_b) as f64).ln();
    let low_threshold = 0.1 * max_possible;
    let high_threshold = 0.9 * max_possible;
    let below = samples.iter().filter(|&&s| s < low_threshold).count();
    let above = samples.iter().filter(|&&s| s >= high_threshold).count();
    TypicalityStats {
        n_samples: n,
        mean,
        variance,
        min,
        max,
        max_possible,
        low_threshold,
        high_threshold,
        fraction_below_low: below as f64 / n as f64,
        fraction_above_high: above as f64 / n as f64,
        restriction_dim,
    }
}

fn run_typicality(config: &ExperimentConfig) -> Result<RunnerOutput> {
    let p = config.typicality_params()?;
    let dim = p.dim_a * p.dim_b;
    let decomposition = match &p.restriction {
        None => None,
        Some(r) => {
            let complement: Vec<usize> =
                (0..dim).filter(|i| !r.basis_indices.contains(i)).collect();
            let mut groups = vec![r.basis_indices.clone()];
            let mut labels = vec!["restricted".to_string()];
            if !complement.is_empty() {
                groups.push(complement);
                labels.push("rest".to_string());
            }
            Some(MacrostateDecomposition::from_basis_groups(
                HilbertSpace::single(dim)?,
                &groups,
                labels,
            )?)
        }
    };
    let restriction = decomposition.as_ref().map(|d| (d, 0));
    let samples = typicality_samples(p.dim_a, p.dim_b, p.n_samples, config.seed, restriction)?;
    let stats = stats_from_samples(
        p.dim_a,
        p.dim_b,
        &samples,
        decomposition.as_ref().map(|d| d.rank(0)),
    );

    let series = Series {
        name: "samples".into(),
        columns: vec!["sample".into(), "s_ent".into()],
        rows: samples.iter().enumerate().map(|(i, &s)| vec![i as f64, s]).collect(),
    };
    let summary = json!({
        "dim_a": p.dim_a,
        "dim_b": p.dim_b,
        "stats": serde_json::to_value(&stats).expect("stats serialize"),
    });
    Ok((vec![series], summary, Vec::new()))
}

// ---------------------------------------------------------------------------
// eph

fn run_eph(config: &ExperimentConfig) -> Result<RunnerOutput> {
    let p = config.eph_params()?;
    let psi = p.build_state(config.seed)?;
    let mut verdicts = Vec::with_capacity(p.checks.len());
    for (i, check) in p.checks.iter().enumerate() {
        let spec = p.build_spec(check, i, config.seed)?;
        verdicts.push(crate::factorization::check_eph(&psi, &spec)?);
    }
    let summary = json!({
        "state_dim": psi.dim(),
        "check_count": verdicts.len(),
        "statuses": verdicts
            .iter()
            .map(|v| serde_json::to_value(v.status).expect("status serializes"))
            .collect::<Vec<_>>(),
    });
    Ok((Vec::new(), summary, verdicts))
}

// ---------------------------------------------------------------------------
// export

/// Which files to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Time-series CSV files only.
    Csv,
    /// Summary and verdict JSON files only.
    Json,
    /// Everything.
    All,
}

/// Writes the record's files into `dir` and returns their paths. Time
/// series become `<experiment>_<seed>_<name>.csv` with one header row and
/// 17-significant-digit floats; the summary becomes
/// `<experiment>_<seed>_summary.json`; EPH verdicts become
/// `eph_<seed>_verdict.json`.
pub fn export(record: &RunRecord, dir: &Path, format: ExportFormat) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}_{}", record.config.experiment, record.config.seed);
    let mut written = Vec::new();

    if matches!(format, ExportFormat::Csv | ExportFormat::All) {
        for series in &record.series {
            let path = dir.join(format!("{stem}_{}.csv", series.name));
            let mut out = String::new();
            out.push_str(&series.columns.join(","));
            out.push('\n');
            for row in &series.rows {
                let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            std::fs::write(&path, out)?;
            written.push(path);
        }
    }

    if matches!(format, ExportFormat::Json | ExportFormat::All) {
        let path = dir.join(format!("{stem}_summary.json"));
        let mut text = serde_json::to_string_pretty(&record.summary)
            .map_err(|e| Error::config(format!("summary serialization: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text)?;
        written.push(path);

        if !record.verdicts.is_empty() {
            let path = dir.join(format!("eph_{}_verdict.json", record.config.seed));
            let mut text = serde_json::to_string_pretty(&record.verdicts)
                .map_err(|e| Error::config(format!("verdict serialization: {e}")))?;
            text.push('\n');
            std::fs::write(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// 17 significant digits: enough for an exact f64 round trip.
fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    let step = (to - from) / (n - 1) as f64;
    (0..n).map(|k| from + step * k as f64).collect()
}

#[cfg(test)]
mod tests;
