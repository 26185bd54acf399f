//! Experiment configuration: a versioned JSON envelope with one typed
//! parameter block per experiment. Parsing is strict (unknown fields are
//! rejected) and semantic validation runs before any computation.

use serde::{Deserialize, Serialize};

use crate::caldeira::{CLParameters, PositionGrid, TermSet};
use crate::error::{Error, Result};
use crate::factorization::{EphSpec, Factorization, FactorizationClass, FullUnitarySearch};
use crate::hilbert::{HilbertSpace, PhysicalConstants};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest supported qubit register for the spin-bath experiments
/// (total dimension 2^12).
pub const MAX_QUBITS: usize = 12;

/// The parsed envelope. The parameter block is kept as raw JSON so the
/// config echo reproduces the input exactly; [`ExperimentConfig::validate`]
/// and the runners parse it into the typed structs below.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Arrow,
    Cl,
    Typicality,
    Eph,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Arrow => "arrow",
            ExperimentKind::Cl => "cl",
            ExperimentKind::Typicality => "typicality",
            ExperimentKind::Eph => "eph",
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("malformed config: {e}")))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        match self.experiment.as_str() {
            "arrow" => Ok(ExperimentKind::Arrow),
            "cl" => Ok(ExperimentKind::Cl),
            "typicality" => Ok(ExperimentKind::Typicality),
            "eph" => Ok(ExperimentKind::Eph),
            other => Err(Error::config(format!("experiment: unknown experiment `{other}`"))),
        }
    }

    /// Full semantic validation: parses the parameter block and dry-runs
    /// every constructible domain object.
    pub fn validate(&self) -> Result<()> {
        match self.kind()? {
            ExperimentKind::Arrow => {
                self.arrow_params()?;
            }
            ExperimentKind::Cl => {
                self.cl_params()?.build()?;
            }
            ExperimentKind::Typicality => {
                self.typicality_params()?;
            }
            ExperimentKind::Eph => {
                let p = self.eph_params()?;
                p.validate(self.seed)?;
            }
        }
        Ok(())
    }

    pub fn arrow_params(&self) -> Result<ArrowParams> {
        let p: ArrowParams = parse_params(&self.params)?;
        p.validate()?;
        Ok(p)
    }

    pub fn cl_params(&self) -> Result<ClParams> {
        parse_params(&self.params)
    }

    pub fn typicality_params(&self) -> Result<TypicalityParams> {
        let p: TypicalityParams = parse_params(&self.params)?;
        p.validate()?;
        Ok(p)
    }

    pub fn eph_params(&self) -> Result<EphParams> {
        parse_params(&self.params)
    }
}

fn parse_params<T: for<'de> Deserialize<'de>>(value: &serde_json::Value) -> Result<T> {
    serde_json::from_value(value.clone())
        .map_err(|e| Error::config(format!("params: {e}")))
}

// ---------------------------------------------------------------------------
// arrow

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowParams {
    pub n_env: usize,
    #[serde(default = "default_coupling_lo")]
    pub coupling_lo: f64,
    #[serde(default = "default_coupling_hi")]
    pub coupling_hi: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub scaling: Option<ScalingParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    pub env_sizes: Vec<usize>,
    pub seeds_per_size: usize,
    pub t_star: f64,
}

fn default_coupling_lo() -> f64 {
    0.5
}
fn default_coupling_hi() -> f64 {
    1.5
}
fn default_t_max() -> f64 {
    3.0
}
fn default_n_times() -> usize {
    121
}
fn default_threshold() -> f64 {
    0.05
}

impl ArrowParams {
    fn validate(&self) -> Result<()> {
        if self.n_env == 0 || self.n_env + 1 > MAX_QUBITS {
            return Err(Error::config(format!(
                "params.n_env: must be in 1..={}",
                MAX_QUBITS - 1
            )));
        }
        if !(self.coupling_lo > 0.0) || self.coupling_hi < self.coupling_lo {
            return Err(Error::config(
                "params.coupling_lo/coupling_hi: need 0 < lo <= hi",
            ));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::config("params.t_max: must be positive"));
        }
        if self.n_times < 2 {
            return Err(Error::config("params.n_times: need at least 2 samples"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("params.threshold: must lie in (0, 1)"));
        }
        if let Some(s) = &self.scaling {
            if s.env_sizes.is_empty() {
                return Err(Error::config("params.scaling.env_sizes: must be non-empty"));
            }
            if s.env_sizes.iter().any(|&n| n == 0 || n + 1 > MAX_QUBITS) {
                return Err(Error::config(format!(
                    "params.scaling.env_sizes: entries must be in 1..={}",
                    MAX_QUBITS - 1
                )));
            }
            if s.seeds_per_size == 0 {
                return Err(Error::config("params.scaling.seeds_per_size: must be >= 1"));
            }
            if !(s.t_star > 0.0) {
                return Err(Error::config("params.scaling.t_star: must be positive"));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// cl

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClParams {
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub omega: f64,
    #[serde(default = "default_unit")]
    pub hbar: f64,
    #[serde(default = "default_unit")]
    pub k_b: f64,
    pub initial: InitialStateParams,
    #[serde(default = "default_terms")]
    pub terms: Vec<String>,
    pub t_final: f64,
    /// Upper bound on the RK4 step; defaults to half the stability bound.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    pub separation: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Fit the decoherence/relaxation timescales (needs gamma > 0 and a
    /// decaying coherence signal). Positivity-focused runs switch this off.
    #[serde(default = "default_true")]
    pub fit_timescales: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateParams {
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
    Cat {
        centers: Vec<f64>,
        width: f64,
        #[serde(default)]
        momentum: f64,
    },
}

fn default_n_points() -> usize {
    128
}
fn default_half_width() -> f64 {
    8.0
}
fn default_mass() -> f64 {
    1.0
}
fn default_unit() -> f64 {
    1.0
}
fn default_terms() -> Vec<String> {
    vec!["unitary".into(), "dissipation".into(), "decoherence".into()]
}
fn default_stride() -> usize {
    10
}

/// Domain objects assembled from a validated [`ClParams`].
pub struct ClSetup {
    pub grid: PositionGrid,
    pub params: CLParameters,
    pub initial: crate::caldeira::CLState,
    pub terms: TermSet,
    pub dt: f64,
}

impl ClParams {
    pub fn build(&self) -> Result<ClSetup> {
        let config_err = |field: &str, e: Error| Error::config(format!("params.{field}: {e}"));
        let grid = PositionGrid::from_half_width(self.n_points, self.half_width)
            .map_err(|e| config_err("n_points/half_width", e))?;
        let constants = PhysicalConstants::new(self.hbar, self.k_b)
            .map_err(|e| config_err("hbar/k_b", e))?;
        let params =
            CLParameters::new(self.mass, self.gamma, self.temperature, self.omega, constants)
                .map_err(|e| config_err("mass/gamma/temperature/omega", e))?;
        let initial = match &self.initial {
            InitialStateParams::Gaussian { center, width, momentum } => {
                crate::caldeira::CLState::gaussian_packet(
                    grid.clone(),
                    *center,
                    *width,
                    *momentum,
                    &constants,
                )
            }
            InitialStateParams::Cat { centers, width, momentum } => {
                let packets: Vec<(f64, f64)> =
                    centers.iter().map(|&c| (c, *momentum)).collect();
                crate::caldeira::CLState::superposed_packets(
                    grid.clone(),
                    &packets,
                    *width,
                    &constants,
                )
            }
        }
        .map_err(|e| config_err("initial", e))?;

        let mut terms = TermSet { unitary: false, dissipation: false, decoherence: false };
        for term in &self.terms {
            match term.as_str() {
                "unitary" => terms.unitary = true,
                "dissipation" => terms.dissipation = true,
                "decoherence" => terms.decoherence = true,
                other => {
                    return Err(Error::config(format!("params.terms: unknown term `{other}`")))
                }
            }
        }
        if terms.is_empty() {
            return Err(Error::config("params.terms: at least one term is required"));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::config("params.t_final: must be positive"));
        }
        let bound = crate::caldeira::stability_bound(&params, &grid);
        let dt = match self.dt {
            Some(dt) if dt >= bound => {
                return Err(Error::config(format!(
                    "params.dt: {dt} violates the stability bound {bound:e}"
                )))
            }
            Some(dt) if dt <= 0.0 => {
                return Err(Error::config("params.dt: must be positive"))
            }
            Some(dt) => dt,
            None => 0.5 * bound,
        };
        crate::caldeira::band_index(&grid, self.separation)
            .map_err(|e| config_err("separation", e))?;
        if self.snapshot_stride == 0 {
            return Err(Error::config("params.snapshot_stride: must be >= 1"));
        }
        for (i, &t) in self.snapshot_times.iter().enumerate() {
            if t < 0.0 || t > self.t_final {
                return Err(Error::config(format!(
                    "params.snapshot_times[{i}]: must lie in [0, t_final]"
                )));
            }
        }
        Ok(ClSetup { grid, params, initial, terms, dt })
    }
}

// ---------------------------------------------------------------------------
// typicality

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalityParams {
    pub dim_a: usize,
    pub dim_b: usize,
    pub n_samples: usize,
    #[serde(default)]
    pub restriction: Option<RestrictionParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictionParams {
    /// Computational-basis indices spanning the sampling subspace.
    pub basis_indices: Vec<usize>,
}

impl TypicalityParams {
    fn validate(&self) -> Result<()> {
        if self.dim_a < 1 || self.dim_b < 1 || self.dim_a * self.dim_b < 2 {
            return Err(Error::config(
                "params.dim_a/dim_b: the product dimension must be at least 2",
            ));
        }
        if self.n_samples < 100 {
            return Err(Error::config("params.n_samples: must be >= 100"));
        }
        if let Some(r) = &self.restriction {
            let dim = self.dim_a * self.dim_b;
            if r.basis_indices.len() < 2 {
                return Err(Error::config(
                    "params.restriction.basis_indices: the subspace needs dimension >= 2",
                ));
            }
            let mut seen = vec![false; dim];
            for &idx in &r.basis_indices {
                if idx >= dim {
                    return Err(Error::config(format!(
                        "params.restriction.basis_indices: index {idx} out of range for \
                         dimension {dim}"
                    )));
                }
                if seen[idx] {
                    return Err(Error::config(format!(
                        "params.restriction.basis_indices: index {idx} repeated"
                    )));
                }
                seen[idx] = true;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// eph

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EphParams {
    pub state: StateParams,
    pub checks: Vec<EphCheckParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateParams {
    /// Haar-random state drawn with the experiment seed.
    Haar { dim: usize },
    Basis { dims: Vec<usize>, index: usize },
    Amplitudes { dims: Vec<usize>, re: Vec<f64>, im: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EphCheckParams {
    pub variant: String,
    #[serde(default)]
    pub m: f64,
    pub tol: f64,
    #[serde(default)]
    pub factorization: Option<FactorizationParams>,
    #[serde(default)]
    pub class: Option<ClassParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorizationParams {
    pub dims: Vec<usize>,
    #[serde(default)]
    pub qubit_grouping: Option<Vec<Vec<usize>>>,
}

impl FactorizationParams {
    pub fn build(&self) -> Result<Factorization> {
        match &self.qubit_grouping {
            None => Factorization::identity(self.dims.clone()),
            Some(groups) => {
                let n: usize = groups.iter().map(|g| g.len()).sum();
                let f = Factorization::from_qubit_grouping(n, groups)?;
                if f.dims() != self.dims.as_slice() {
                    return Err(Error::config(format!(
                        "factorization dims {:?} disagree with the grouping dims {:?}",
                        self.dims,
                        f.dims()
                    )));
                }
                Ok(f)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassParams {
    Single {
        dims: Vec<usize>,
        #[serde(default)]
        qubit_grouping: Option<Vec<Vec<usize>>>,
    },
    QubitPermutations {
        dims: Vec<usize>,
    },
    SpatialBlocks {
        block_size: usize,
        chain_len: usize,
        #[serde(default)]
        include_offsets: bool,
    },
    FullUnitary {
        dims: Vec<usize>,
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default = "default_step_tol")]
        step_tol: f64,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
    },
}

fn default_restarts() -> usize {
    FullUnitarySearch::default().restarts
}
fn default_step_tol() -> f64 {
    FullUnitarySearch::default().step_tol
}
fn default_max_iters() -> usize {
    FullUnitarySearch::default().max_iters
}

impl ClassParams {
    /// Builds the class; full-unitary searches are seeded from the
    /// experiment seed and the check index so reruns reproduce verdicts.
    pub fn build(&self, search_seed: u64) -> Result<FactorizationClass> {
        match self {
            ClassParams::Single { dims, qubit_grouping } => {
                let f = FactorizationParams {
                    dims: dims.clone(),
                    qubit_grouping: qubit_grouping.clone(),
                }
                .build()?;
                Ok(FactorizationClass::Single(f))
            }
            ClassParams::QubitPermutations { dims } => {
                Ok(FactorizationClass::QubitPermutations { dims: dims.clone() })
            }
            ClassParams::SpatialBlocks { block_size, chain_len, include_offsets } => {
                Ok(FactorizationClass::SpatialBlocks {
                    block_size: *block_size,
                    chain_len: *chain_len,
                    include_offsets: *include_offsets,
                })
            }
            ClassParams::FullUnitary { dims, restarts, step_tol, max_iters } => {
                Ok(FactorizationClass::FullUnitary {
                    dims: dims.clone(),
                    search: FullUnitarySearch {
                        restarts: *restarts,
                        step_tol: *step_tol,
                        max_iters: *max_iters,
                        seed: search_seed,
                    },
                })
            }
        }
    }
}

impl EphParams {
    pub fn validate(&self, seed: u64) -> Result<()> {
        let state = self.build_state(seed)?;
        if self.checks.is_empty() {
            return Err(Error::config("params.checks: at least one check is required"));
        }
        for (i, check) in self.checks.iter().enumerate() {
            self.build_spec(check, i, seed)
                .map_err(|e| Error::config(format!("params.checks[{i}]: {e}")))?;
        }
        let _ = state;
        Ok(())
    }

    pub fn build_state(&self, seed: u64) -> Result<crate::hilbert::PureState> {
        match &self.state {
            StateParams::Haar { dim } => crate::hilbert::haar_sample(*dim, seed)
                .map_err(|e| Error::config(format!("params.state: {e}"))),
            StateParams::Basis { dims, index } => {
                let space = HilbertSpace::new(dims.clone())
                    .map_err(|e| Error::config(format!("params.state.dims: {e}")))?;
                crate::hilbert::PureState::basis_state(space, *index)
                    .map_err(|e| Error::config(format!("params.state: {e}")))
            }
            StateParams::Amplitudes { dims, re, im } => {
                let space = HilbertSpace::new(dims.clone())
                    .map_err(|e| Error::config(format!("params.state.dims: {e}")))?;
                if re.len() != space.total_dim() || im.len() != space.total_dim() {
                    return Err(Error::config(
                        "params.state: re/im length must equal the total dimension",
                    ));
                }
                let amps = nalgebra::DVector::from_iterator(
                    re.len(),
                    re.iter().zip(im).map(|(&r, &i)| num_complex::Complex64::new(r, i)),
                );
                crate::hilbert::PureState::normalized(space, amps)
                    .map_err(|e| Error::config(format!("params.state: {e}")))
            }
        }
    }

    pub fn build_spec(&self, check: &EphCheckParams, index: usize, seed: u64) -> Result<EphSpec> {
        if !(check.tol > 0.0) {
            return Err(Error::config("tol: must be positive"));
        }
        if check.m < 0.0 {
            return Err(Error::config("m: must be non-negative"));
        }
        let search_seed = crate::hilbert::derive_stream_seed(seed, index as u64);
        let class = || -> Result<FactorizationClass> {
            check
                .class
                .as_ref()
                .ok_or_else(|| Error::config("class: required for this variant"))?
                .build(search_seed)
        };
        match check.variant.as_str() {
            "eph_m" => {
                let f = check
                    .factorization
                    .as_ref()
                    .ok_or_else(|| Error::config("factorization: required for eph_m"))?
                    .build()?;
                Ok(EphSpec::Value { factorization: f, m: check.m, tol: check.tol })
            }
            "eph_0" => Ok(EphSpec::ZeroEvery { class: class()?, tol: check.tol }),
            "eph_0r" => Ok(EphSpec::ZeroClass { class: class()?, tol: check.tol }),
            "eph_leq_m" => {
                Ok(EphSpec::BoundedEvery { class: class()?, m: check.m, tol: check.tol })
            }
            "eph_leq_mr" => {
                Ok(EphSpec::BoundedClass { class: class()?, m: check.m, tol: check.tol })
            }
            other => Err(Error::config(format!("variant: unknown variant `{other}`"))),
        }
    }
}
