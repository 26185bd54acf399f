//! Finite-dimensional Hilbert-space algebra.
//!
//! States are dense complex vectors over an ordered tensor factorization.
//! The index convention is row-major throughout the crate: for factor
//! dimensions `(d_1, ..., d_N)` the basis index of the multi-index
//! `(i_1, ..., i_N)` is `i_1 * d_2 * ... * d_N + ... + i_N`, i.e. factor 0
//! is the most significant digit. Partial traces, factorization
//! permutations, and the spin-bath model all rely on this convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity tolerance for density matrices and Hamiltonians.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[EIGENVALUE_FLOOR, 0)` are numerical noise and are
/// clipped to zero before logarithms; anything below is a genuine
/// positivity violation.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// An ordered tensor factorization of a finite-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    /// A space with the given ordered factor dimensions.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::usage("a Hilbert space needs at least one factor"));
        }
        if dims.contains(&0) {
            return Err(Error::usage("factor dimensions must be >= 1"));
        }
        Ok(HilbertSpace { dims })
    }

    /// A single unstructured factor of dimension `dim`.
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    /// `n` qubit factors.
    pub fn qubits(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("qubit count must be >= 1"));
        }
        Ok(HilbertSpace { dims: vec![2; n] })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major stride of factor `k` (the weight of its digit).
    pub(crate) fn stride(&self, k: usize) -> usize {
        self.dims[k + 1..].iter().product()
    }

    /// Validates a `keep` index set: non-empty, in range, no duplicates.
    /// Returns the set sorted ascending.
    pub(crate) fn checked_subset(&self, keep: &[usize]) -> Result<Vec<usize>> {
        if keep.is_empty() {
            return Err(Error::usage("the kept factor set must be non-empty"));
        }
        let mut sorted: Vec<usize> = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != keep.len() {
            return Err(Error::usage("the kept factor set contains duplicates"));
        }
        if let Some(&bad) = sorted.iter().find(|&&k| k >= self.n_factors()) {
            return Err(Error::usage(format!(
                "factor index {bad} is out of range for a space with {} factors",
                self.n_factors()
            )));
        }
        Ok(sorted)
    }
}

/// Physical constants entering the entropy and master-equation formulas.
/// Defaults are natural units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { hbar: 1.0, k_b: 1.0 }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, k_b: f64) -> Result<Self> {
        if !(hbar > 0.0) || !(k_b > 0.0) {
            return Err(Error::usage("physical constants must be strictly positive"));
        }
        Ok(PhysicalConstants { hbar, k_b })
    }
}

/// A normalized pure state over a [`HilbertSpace`].
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
    space: HilbertSpace,
}

impl PureState {
    /// Wraps an amplitude vector, checking the length and unit norm.
    pub fn new(space: HilbertSpace, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::usage(format!(
                "amplitude length {} does not match space dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::usage(format!(
                "state norm {norm} deviates from 1 by more than {NORM_TOL:e}"
            )));
        }
        Ok(PureState { amplitudes, space })
    }

    /// Normalizes the amplitude vector first; errors on the zero vector.
    pub fn normalized(space: HilbertSpace, mut amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::usage(format!(
                "amplitude length {} does not match space dimension {}",
                amplitudes.len(),
                space.total_dim()
            )));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::usage("cannot normalize the zero vector"));
        }
        amplitudes /= Complex64::new(norm, 0.0);
        Ok(PureState { amplitudes, space })
    }

    /// The computational basis state `|index>`.
    pub fn basis_state(space: HilbertSpace, index: usize) -> Result<Self> {
        let d = space.total_dim();
        if index >= d {
            return Err(Error::usage(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut amplitudes = DVector::zeros(d);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(PureState { amplitudes, space })
    }

    /// The uniform superposition of all basis states ( |+>^(n) for qubits ).
    pub fn uniform_superposition(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        let a = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        PureState { amplitudes: DVector::from_element(d, a), space }
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Reinterprets the same amplitudes over a different factor structure
    /// of equal total dimension.
    pub fn with_space(&self, space: HilbertSpace) -> Result<Self> {
        if space.total_dim() != self.dim() {
            return Err(Error::usage(format!(
                "cannot relabel a dim-{} state with a dim-{} space",
                self.dim(),
                space.total_dim()
            )));
        }
        Ok(PureState { amplitudes: self.amplitudes.clone(), space })
    }

    /// The projector `|psi><psi|` as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { matrix: m, space: self.space.clone() }
    }

    /// Reduced density matrix on the kept factors (ascending order), i.e.
    /// the partial trace of `|psi><psi|` over the complement.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.space.checked_subset(keep)?;
        let m = reshape_keep_by_rest(&self.amplitudes, &self.space, &keep);
        let rho = &m * m.adjoint();
        let dims: Vec<usize> = keep.iter().map(|&k| self.space.dims()[k]).collect();
        Ok(DensityMatrix { matrix: rho, space: HilbertSpace { dims } })
    }
}

/// Reshapes an amplitude vector into a `dim(keep) x dim(rest)` matrix with
/// the kept factors indexing rows (in the given ascending order) and the
/// remaining factors indexing columns (in their original order).
pub(crate) fn reshape_keep_by_rest(
    amplitudes: &DVector<Complex64>,
    space: &HilbertSpace,
    keep: &[usize],
) -> DMatrix<Complex64> {
    let rest: Vec<usize> = (0..space.n_factors()).filter(|k| !keep.contains(k)).collect();
    let keep_dim: usize = keep.iter().map(|&k| space.dims()[k]).product();
    let rest_dim: usize = rest.iter().map(|&k| space.dims()[k]).product();
    let keep_strides: Vec<usize> = keep.iter().map(|&k| space.stride(k)).collect();
    let rest_strides: Vec<usize> = rest.iter().map(|&k| space.stride(k)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| space.dims()[k]).collect();
    let rest_dims: Vec<usize> = rest.iter().map(|&k| space.dims()[k]).collect();

    let mut m = DMatrix::zeros(keep_dim, rest_dim);
    for row in 0..keep_dim {
        let row_base = digit_dot(row, &keep_dims, &keep_strides);
        for col in 0..rest_dim {
            let idx = row_base + digit_dot(col, &rest_dims, &rest_strides);
            m[(row, col)] = amplitudes[idx];
        }
    }
    m
}

/// Expands `packed` in the mixed radix `dims` and contracts the digits with
/// `strides` to produce a full-space index contribution.
fn digit_dot(packed: usize, dims: &[usize], strides: &[usize]) -> usize {
    let mut rem = packed;
    let mut acc = 0;
    for k in (0..dims.len()).rev() {
        let digit = rem % dims[k];
        rem /= dims[k];
        acc += digit * strides[k];
    }
    acc
}

/// A density matrix over a [`HilbertSpace`]: Hermitian with unit trace.
///
/// Positivity is not checked at construction; eigenvalue-consuming
/// operations clip noise in `[EIGENVALUE_FLOOR, 0)` to zero and report a
/// [`Error::Positivity`] below that floor. The Caldeira-Leggett module
/// deliberately works with grid states that may leave the positive cone.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
    space: HilbertSpace,
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: DMatrix<Complex64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::usage(format!(
                "matrix shape {}x{} does not match space dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_dev = hermiticity_deviation(&matrix);
        if herm_dev > HERMITICITY_TOL {
            return Err(Error::usage(format!(
                "matrix deviates from Hermiticity by {herm_dev:e} (tolerance {HERMITICITY_TOL:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::usage(format!(
                "trace {trace} deviates from 1 by more than {TRACE_TOL:e}"
            )));
        }
        Ok(DensityMatrix { matrix, space })
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        let matrix = DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0));
        DensityMatrix { matrix, space }
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

    /// `Tr(rho^2)`; 1 for pure states, `1/d` for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Real eigenvalues of the (symmetrized) matrix, unordered.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        sym.symmetric_eigen().eigenvalues.iter().copied().collect()
    }

    /// Partial trace onto the kept factors (ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let keep = self.space.checked_subset(keep)?;
        let rest: Vec<usize> =
            (0..self.space.n_factors()).filter(|k| !keep.contains(k)).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&k| self.space.dims()[k]).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&k| self.space.dims()[k]).collect();
        let keep_strides: Vec<usize> = keep.iter().map(|&k| self.space.stride(k)).collect();
        let rest_strides: Vec<usize> = rest.iter().map(|&k| self.space.stride(k)).collect();
        let keep_dim: usize = keep_dims.iter().product();
        let rest_dim: usize = rest_dims.iter().product();

        let mut out = DMatrix::zeros(keep_dim, keep_dim);
        for a in 0..keep_dim {
            let a_base = digit_dot(a, &keep_dims, &keep_strides);
            for b in 0..keep_dim {
                let b_base = digit_dot(b, &keep_dims, &keep_strides);
                let mut sum = Complex64::new(0.0, 0.0);
                for e in 0..rest_dim {
                    let offset = digit_dot(e, &rest_dims, &rest_strides);
                    sum += self.matrix[(a_base + offset, b_base + offset)];
                }
                out[(a, b)] = sum;
            }
        }
        Ok(DensityMatrix { matrix: out, space: HilbertSpace { dims: keep_dims } })
    }
}

pub(crate) fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Partial trace of a pure state or a density matrix onto the kept factors.
///
/// Pure inputs are treated as the projector `|psi><psi|`; the reduction is
/// computed directly from the amplitudes without materializing it.
pub fn partial_trace(state: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    state.reduced_density(keep)
}

/// Kronecker product of pure states, in the given order. The resulting
/// space carries the concatenated factor dimensions.
pub fn tensor(parts: &[PureState]) -> Result<PureState> {
    let Some((first, others)) = parts.split_first() else {
        return Err(Error::usage("tensor product of an empty state list"));
    };
    let mut amplitudes = first.amplitudes.clone();
    let mut dims = first.space.dims().to_vec();
    for part in others {
        amplitudes = amplitudes.kronecker(&part.amplitudes);
        dims.extend_from_slice(part.space.dims());
    }
    PureState::new(HilbertSpace::new(dims)?, amplitudes)
}

/// Draws a Haar-distributed pure state on a dim-`dim` space: a normalized
/// vector of independent standard complex Gaussians. Deterministic for a
/// fixed seed within this implementation.
pub fn haar_sample(dim: usize, seed: u64) -> Result<PureState> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    haar_sample_rng(dim, &mut rng)
}

/// As [`haar_sample`] but drawing from a caller-owned generator.
pub fn haar_sample_rng<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim == 0 {
        return Err(Error::usage("Haar sampling needs dimension >= 1"));
    }
    let amplitudes = DVector::from_iterator(dim, (0..dim).map(|_| gaussian_complex(rng)));
    PureState::normalized(HilbertSpace::single(dim)?, amplitudes)
}

/// Haar sample within the span of the given orthonormal vectors.
pub fn haar_sample_in_span<R: rand::Rng + ?Sized>(
    basis: &[DVector<Complex64>],
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if basis.is_empty() {
        return Err(Error::usage("Haar sampling needs a non-empty subspace basis"));
    }
    let dim = basis[0].len();
    let mut v: DVector<Complex64> = DVector::zeros(dim);
    for b in basis {
        let c = gaussian_complex(rng);
        v.axpy(c, b, Complex64::new(1.0, 0.0));
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::usage("degenerate subspace sample"));
    }
    Ok(v / Complex64::new(norm, 0.0))
}

fn gaussian_complex<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Mixes a master seed with a stream index so that per-item generators are
/// independent and parallel and serial sample loops agree. Deterministic
/// within this implementation only.
pub(crate) fn derive_stream_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined value.
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
