//! Python bindings for the entarrow decoherence laboratory.
//!
//! Exposes the core state types, entropy operations, the spin-bath
//! overlap, entanglement-entropy extremization, and the experiment runner.
//! Build with `cargo build -p entarrow-py --release --features
//! extension-module` and import the produced `entarrow_py` module; see
//! `python/smoke_test.py` for a worked example.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use entarrow::dynamics;
use entarrow::entropy;
use entarrow::experiment;
use entarrow::factorization::{self, Direction, FactorizationClass, FullUnitarySearch};
use entarrow::hilbert::{self, HilbertSpace};

fn to_py_err(e: entarrow::Error) -> PyErr {
    match &e {
        entarrow::Error::Usage(_) | entarrow::Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A normalized pure state over an ordered tensor factorization.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct PureState {
    inner: hilbert::PureState,
}

#[pymethods]
impl PureState {
    /// Builds a state from amplitudes (normalized on entry) and factor dims.
    #[new]
    fn new(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> PyResult<Self> {
        let space = HilbertSpace::new(dims).map_err(to_py_err)?;
        let inner = hilbert::PureState::normalized(space, DVector::from_vec(amplitudes))
            .map_err(to_py_err)?;
        Ok(PureState { inner })
    }

    /// Haar-random state on one factor of the given dimension.
    #[staticmethod]
    fn haar(dim: usize, seed: u64) -> PyResult<Self> {
        Ok(PureState { inner: hilbert::haar_sample(dim, seed).map_err(to_py_err)? })
    }

    /// Computational basis state `|index>`.
    #[staticmethod]
    fn basis(dims: Vec<usize>, index: usize) -> PyResult<Self> {
        let space = HilbertSpace::new(dims).map_err(to_py_err)?;
        Ok(PureState {
            inner: hilbert::PureState::basis_state(space, index).map_err(to_py_err)?,
        })
    }

    fn dims(&self) -> Vec<usize> {
        self.inner.space().dims().to_vec()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().iter().copied().collect()
    }

    /// Kronecker product `self (x) other`.
    fn tensor(&self, other: &PureState) -> PyResult<Self> {
        let joint =
            hilbert::tensor(&[self.inner.clone(), other.inner.clone()]).map_err(to_py_err)?;
        Ok(PureState { inner: joint })
    }

    /// Reduced density matrix on the kept factor indices.
    fn reduced_density(&self, keep: Vec<usize>) -> PyResult<DensityMatrix> {
        Ok(DensityMatrix { inner: self.inner.reduced_density(&keep).map_err(to_py_err)? })
    }

    /// Entanglement entropy relative to a factorization, in nats.
    fn entanglement_entropy(&self, factorization: &Factorization) -> PyResult<f64> {
        entropy::entanglement_entropy(&self.inner, &factorization.inner).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("PureState(dim={}, dims={:?})", self.inner.dim(), self.inner.space().dims())
    }
}

/// A Hermitian unit-trace density matrix.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct DensityMatrix {
    inner: hilbert::DensityMatrix,
}

#[pymethods]
impl DensityMatrix {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>, dims: Vec<usize>) -> PyResult<Self> {
        let space = HilbertSpace::new(dims).map_err(to_py_err)?;
        let d = space.total_dim();
        if matrix.len() != d || matrix.iter().any(|row| row.len() != d) {
            return Err(PyValueError::new_err("matrix shape does not match dims"));
        }
        let m = DMatrix::from_fn(d, d, |i, j| matrix[i][j]);
        Ok(DensityMatrix { inner: hilbert::DensityMatrix::new(space, m).map_err(to_py_err)? })
    }

    fn dims(&self) -> Vec<usize> {
        self.inner.space().dims().to_vec()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.matrix();
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    /// `-Tr(rho ln rho)` in nats.
    fn von_neumann(&self) -> PyResult<f64> {
        entropy::von_neumann(&self.inner).map_err(to_py_err)
    }

    /// `Tr(rho^2)`.
    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn partial_trace(&self, keep: Vec<usize>) -> PyResult<DensityMatrix> {
        Ok(DensityMatrix { inner: self.inner.partial_trace(&keep).map_err(to_py_err)? })
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dim={})", self.inner.dim())
    }
}

/// A tensor-product reading of a Hilbert space.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Factorization {
    inner: factorization::Factorization,
}

#[pymethods]
impl Factorization {
    /// Reinterpret the amplitudes with the given factor dims, no rotation.
    #[staticmethod]
    fn identity(dims: Vec<usize>) -> PyResult<Self> {
        Ok(Factorization {
            inner: factorization::Factorization::identity(dims).map_err(to_py_err)?,
        })
    }

    /// Regroup qubit positions into factors (one factor per group).
    #[staticmethod]
    fn qubit_grouping(n_qubits: usize, groups: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(Factorization {
            inner: factorization::Factorization::from_qubit_grouping(n_qubits, &groups)
                .map_err(to_py_err)?,
        })
    }

    fn dims(&self) -> Vec<usize> {
        self.inner.dims().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Factorization(dims={:?})", self.inner.dims())
    }
}

/// Overlap `r(t)` of the two conditional environment branches of the
/// pure-dephasing spin bath, one complex value per time.
#[pyfunction]
fn spin_bath_overlap(
    n_env: usize,
    coupling_lo: f64,
    coupling_hi: f64,
    seed: u64,
    times: Vec<f64>,
) -> PyResult<Vec<Complex64>> {
    let (model, h) =
        dynamics::build_spin_bath(n_env, (coupling_lo, coupling_hi), seed).map_err(to_py_err)?;
    dynamics::environment_overlap(&model, &h, &times).map_err(to_py_err)
}

/// Couplings drawn for the given spin-bath seed (for cross-checks).
#[pyfunction]
fn spin_bath_couplings(
    n_env: usize,
    coupling_lo: f64,
    coupling_hi: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let (model, _) =
        dynamics::build_spin_bath(n_env, (coupling_lo, coupling_hi), seed).map_err(to_py_err)?;
    Ok(model.couplings().to_vec())
}

fn extremize(
    state: &PureState,
    dims: Vec<usize>,
    restarts: usize,
    seed: u64,
    direction: Direction,
) -> PyResult<f64> {
    let class = FactorizationClass::FullUnitary {
        dims,
        search: FullUnitarySearch { restarts, seed, ..Default::default() },
    };
    factorization::extremize_entropy(&state.inner, &class, direction)
        .map(|outcome| outcome.value)
        .map_err(to_py_err)
}

/// Best minimum of the entanglement entropy over all unitary rotations at
/// the given dims signature.
#[pyfunction]
#[pyo3(signature = (state, dims, restarts = 8, seed = 0))]
fn min_entanglement(
    state: &PureState,
    dims: Vec<usize>,
    restarts: usize,
    seed: u64,
) -> PyResult<f64> {
    extremize(state, dims, restarts, seed, Direction::Min)
}

/// Best maximum of the entanglement entropy over all unitary rotations at
/// the given dims signature.
#[pyfunction]
#[pyo3(signature = (state, dims, restarts = 8, seed = 0))]
fn max_entanglement(
    state: &PureState,
    dims: Vec<usize>,
    restarts: usize,
    seed: u64,
) -> PyResult<f64> {
    extremize(state, dims, restarts, seed, Direction::Max)
}

/// Runs an experiment from a JSON config string and returns the summary
/// JSON; when `out_dir` is given the CSV/JSON files are written there too.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir = None))]
fn run_experiment(config_json: &str, out_dir: Option<&str>) -> PyResult<String> {
    let config = experiment::ExperimentConfig::from_json(config_json).map_err(to_py_err)?;
    let record = experiment::run(&config).map_err(to_py_err)?;
    if let Some(dir) = out_dir {
        experiment::export(&record, std::path::Path::new(dir), experiment::ExportFormat::All)
            .map_err(to_py_err)?;
    }
    serde_json::to_string_pretty(&record.summary)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn entarrow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PureState>()?;
    m.add_class::<DensityMatrix>()?;
    m.add_class::<Factorization>()?;
    m.add_function(wrap_pyfunction!(spin_bath_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(spin_bath_couplings, m)?)?;
    m.add_function(wrap_pyfunction!(min_entanglement, m)?)?;
    m.add_function(wrap_pyfunction!(max_entanglement, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
