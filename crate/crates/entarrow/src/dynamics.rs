//! Closed-system evolution and the pure-dephasing spin-bath model.
//!
//! The bath model couples one system qubit to `n` environment qubits
//! through `H = sigma_z^(S) (x) sum_k g_k sigma_z^(k)` acting on the
//! `(1 + n)`-qubit space, with the system as factor 0. Starting from
//! `((|0> + |1>)/sqrt(2)) (x) |+>^n`, the two conditional environment
//! states drift apart and their overlap `r(t)` is exactly the suppression
//! factor of the system's off-diagonal matrix elements. Populations are
//! untouched: decoherence without dissipation.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::hilbert::{HilbertSpace, PureState, HERMITICITY_TOL};

/// Ceiling on dense-Hamiltonian dimensions (2^12); everything here is
/// exact dense algebra and larger spaces need a different representation.
pub const MAX_DENSE_DIM: usize = 4096;

/// A Hermitian Hamiltonian over a [`HilbertSpace`]. The spectral
/// decomposition is computed on first use and cached; diagonal matrices
/// take a fast path that never builds eigenvectors.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: DMatrix<Complex64>,
    space: HilbertSpace,
    spectral: OnceLock<Spectral>,
}

#[derive(Debug, Clone)]
enum Spectral {
    Diagonal { energies: DVector<f64> },
    Dense { energies: DVector<f64>, vectors: DMatrix<Complex64> },
}

impl Hamiltonian {
    pub fn new(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = space.total_dim();
        if d > MAX_DENSE_DIM {
            return Err(Error::usage(format!(
                "dimension {d} exceeds the dense cap {MAX_DENSE_DIM}"
            )));
        }
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::usage(format!(
                "Hamiltonian shape {}x{} does not match space dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = crate::hilbert::hermiticity_deviation(&matrix);
        if dev > HERMITICITY_TOL {
            return Err(Error::usage(format!(
                "Hamiltonian deviates from Hermiticity by {dev:e} (tolerance {HERMITICITY_TOL:e})"
            )));
        }
        Ok(Hamiltonian { matrix, space, spectral: OnceLock::new() })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::usage("state dimension does not match the Hamiltonian"));
        }
        Ok(psi.amplitudes().dotc(&(&self.matrix * psi.amplitudes())).re)
    }

    fn spectral(&self) -> &Spectral {
        self.spectral.get_or_init(|| {
            let d = self.dim();
            let mut diagonal = true;
            'outer: for i in 0..d {
                for j in 0..d {
                    if i != j && self.matrix[(i, j)] != Complex64::default() {
                        diagonal = false;
                        break 'outer;
                    }
                }
            }
            if diagonal {
                Spectral::Diagonal { energies: self.matrix.diagonal().map(|z| z.re) }
            } else {
                let sym = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
                let eig = sym.symmetric_eigen();
                Spectral::Dense { energies: eig.eigenvalues, vectors: eig.eigenvectors }
            }
        })
    }

    fn propagate(&self, amplitudes: &DVector<Complex64>, t: f64, hbar: f64) -> DVector<Complex64> {
        match self.spectral() {
            Spectral::Diagonal { energies } => DVector::from_iterator(
                amplitudes.len(),
                amplitudes
                    .iter()
                    .zip(energies.iter())
                    .map(|(a, e)| a * Complex64::new(0.0, -e * t / hbar).exp()),
            ),
            Spectral::Dense { energies, vectors } => {
                let mut coeffs = vectors.adjoint() * amplitudes;
                for (k, c) in coeffs.iter_mut().enumerate() {
                    *c *= Complex64::new(0.0, -energies[k] * t / hbar).exp();
                }
                vectors * coeffs
            }
        }
    }
}

/// `exp(-i H t / hbar) |psi>` in natural units (`hbar = 1`).
///
/// Unitary and exactly self-inverse in time: evolving by `t` and then `-t`
/// returns the state up to roundoff.
pub fn evolve(psi: &PureState, h: &Hamiltonian, t: f64) -> Result<PureState> {
    evolve_with(psi, h, t, 1.0)
}

/// As [`evolve`] with an explicit `hbar`.
pub fn evolve_with(psi: &PureState, h: &Hamiltonian, t: f64, hbar: f64) -> Result<PureState> {
    if psi.dim() != h.dim() {
        return Err(Error::usage(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            psi.dim(),
            h.dim()
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::usage("hbar must be strictly positive"));
    }
    let amplitudes = h.propagate(psi.amplitudes(), t, hbar);
    PureState::new(psi.space().clone(), amplitudes)
}

/// A pure-dephasing qubit bath: `n_env` environment qubits with fixed
/// couplings to the system qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathModel {
    n_env: usize,
    couplings: Vec<f64>,
    seed: u64,
}

impl SpinBathModel {
    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Full Hilbert space: system qubit first, then the environment qubits.
    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::qubits(1 + self.n_env).expect("n_env >= 1")
    }

    /// The fixed initial state `((|0> + |1>)/sqrt(2)) (x) |+>^n`, i.e. the
    /// uniform superposition over the full register.
    pub fn initial_state(&self) -> PureState {
        PureState::uniform_superposition(self.space())
    }
}

/// Builds the dephasing bath `H = sigma_z^(S) (x) sum_k g_k sigma_z^(k)`
/// with couplings drawn uniformly from `[lo, hi]` under the given seed.
pub fn build_spin_bath(
    n_env: usize,
    coupling_range: (f64, f64),
    seed: u64,
) -> Result<(SpinBathModel, Hamiltonian)> {
    let (lo, hi) = coupling_range;
    if n_env == 0 {
        return Err(Error::usage("the bath needs at least one environment qubit"));
    }
    if !(lo > 0.0) || hi < lo {
        return Err(Error::usage("coupling range must satisfy 0 < lo <= hi"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let couplings: Vec<f64> = (0..n_env)
        .map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) })
        .collect();
    let model = SpinBathModel { n_env, couplings, seed };
    let h = dephasing_hamiltonian(&model)?;
    Ok((model, h))
}

fn dephasing_hamiltonian(model: &SpinBathModel) -> Result<Hamiltonian> {
    let n = model.n_env;
    let space = model.space();
    let d = space.total_dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for idx in 0..d {
        let system_sign = if (idx >> n) & 1 == 0 { 1.0 } else { -1.0 };
        let mut bath = 0.0;
        for (k, &g) in model.couplings.iter().enumerate() {
            let bit = (idx >> (n - 1 - k)) & 1;
            bath += if bit == 0 { g } else { -g };
        }
        m[(idx, idx)] = Complex64::new(system_sign * bath, 0.0);
    }
    Hamiltonian::new(space, m)
}

/// Overlap `r(t) = <E_1(t)|E_2(t)>` of the two conditional environment
/// states, starting from the model's fixed initial state. Under the
/// dephasing Hamiltonian this equals the suppression factor of the
/// system's off-diagonal matrix elements.
pub fn environment_overlap(
    model: &SpinBathModel,
    h: &Hamiltonian,
    times: &[f64],
) -> Result<Vec<Complex64>> {
    let psi0 = model.initial_state();
    if psi0.dim() != h.dim() {
        return Err(Error::usage("Hamiltonian does not match the bath model dimensions"));
    }
    let half = psi0.dim() / 2;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let psi_t = evolve(&psi0, h, t)?;
        let a = psi_t.amplitudes();
        let e1 = a.rows(0, half);
        let e2 = a.rows(half, half);
        let n1 = e1.norm();
        let n2 = e2.norm();
        if n1 == 0.0 || n2 == 0.0 {
            return Err(Error::usage("a conditional branch has zero weight"));
        }
        out.push(e1.dotc(&e2) / Complex64::new(n1 * n2, 0.0));
    }
    Ok(out)
}

/// First time at which `|r(t)|` drops to `threshold`, linearly interpolated
/// between samples; `None` when the series never crosses.
pub fn decoherence_time(
    series: &[(f64, Complex64)],
    threshold: f64,
) -> Result<Option<f64>> {
    if series.is_empty() {
        return Err(Error::usage("the overlap series is empty"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::usage("threshold must lie strictly between 0 and 1"));
    }
    let mags: Vec<f64> = series.iter().map(|(_, r)| r.norm()).collect();
    if mags[0] <= threshold {
        return Err(Error::usage("the series must start above the threshold"));
    }
    for i in 1..series.len() {
        if mags[i] <= threshold {
            let (t_prev, t_here) = (series[i - 1].0, series[i].0);
            let (m_prev, m_here) = (mags[i - 1], mags[i]);
            let frac = (m_prev - threshold) / (m_prev - m_here);
            return Ok(Some(t_prev + frac * (t_here - t_prev)));
        }
    }
    Ok(None)
}

/// Entanglement entropy of the evolving full state relative to `f`, one
/// value per requested time.
pub fn entanglement_trajectory(
    psi0: &PureState,
    h: &Hamiltonian,
    f: &Factorization,
    times: &[f64],
) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            let psi_t = evolve(psi0, h, t)?;
            crate::entropy::entanglement_entropy(&psi_t, f)
        })
        .collect()
}
