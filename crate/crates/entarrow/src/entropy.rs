//! Entropy measures: von Neumann entropy of a density matrix,
//! factorization-relative entanglement entropy of a pure state, and
//! quantum Boltzmann entropy over a macrostate decomposition.
//!
//! All entropies are in nats (natural logarithm). The entanglement entropy
//! of a pure state relative to a factorization `F` with factors
//! `1, ..., N` is the sum of the von Neumann entropies of all `N` reduced
//! factor states; it is zero exactly when the rotated state is a full
//! product state.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::factorization::Factorization;
use crate::hilbert::{
    reshape_keep_by_rest, DensityMatrix, HilbertSpace, PhysicalConstants, PureState,
    EIGENVALUE_FLOOR,
};

/// Tolerance for projector idempotence, mutual orthogonality, and
/// completeness checks.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// An orthogonal decomposition of a Hilbert space into labeled macrostate
/// subspaces: Hermitian idempotent projectors that are mutually orthogonal
/// and sum to the identity.
#[derive(Debug, Clone)]
pub struct MacrostateDecomposition {
    projectors: Vec<DMatrix<Complex64>>,
    labels: Vec<String>,
    space: HilbertSpace,
}

impl MacrostateDecomposition {
    pub fn new(
        space: HilbertSpace,
        projectors: Vec<DMatrix<Complex64>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        if projectors.is_empty() {
            return Err(Error::usage("a decomposition needs at least one projector"));
        }
        if projectors.len() != labels.len() {
            return Err(Error::usage("one label per projector is required"));
        }
        let d = space.total_dim();
        for (k, p) in projectors.iter().enumerate() {
            if p.nrows() != d || p.ncols() != d {
                return Err(Error::usage(format!(
                    "projector {k} has shape {}x{}, expected {d}x{d}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            let herm = crate::hilbert::hermiticity_deviation(p);
            if herm > PROJECTOR_TOL {
                return Err(Error::usage(format!(
                    "projector {k} deviates from Hermiticity by {herm:e}"
                )));
            }
            let idem = max_abs(&(p * p - p));
            if idem > PROJECTOR_TOL {
                return Err(Error::usage(format!(
                    "projector {k} deviates from idempotence by {idem:e}"
                )));
            }
        }
        for i in 0..projectors.len() {
            for j in i + 1..projectors.len() {
                let cross = max_abs(&(&projectors[i] * &projectors[j]));
                if cross > PROJECTOR_TOL {
                    return Err(Error::usage(format!(
                        "projectors {i} and {j} are not orthogonal (max |P_i P_j| = {cross:e})"
                    )));
                }
            }
        }
        let mut sum = DMatrix::<Complex64>::zeros(d, d);
        for p in &projectors {
            sum += p;
        }
        let ident = DMatrix::<Complex64>::identity(d, d);
        let completeness = max_abs(&(sum - ident));
        if completeness > PROJECTOR_TOL {
            return Err(Error::usage(format!(
                "projectors do not sum to the identity (max deviation {completeness:e})"
            )));
        }
        Ok(MacrostateDecomposition { projectors, labels, space })
    }

    /// Decomposition whose subspaces are spanned by disjoint groups of
    /// computational basis vectors. The groups must partition the basis.
    pub fn from_basis_groups(
        space: HilbertSpace,
        groups: &[Vec<usize>],
        labels: Vec<String>,
    ) -> Result<Self> {
        let d = space.total_dim();
        let mut seen = vec![false; d];
        let mut projectors = Vec::with_capacity(groups.len());
        for group in groups {
            let mut p = DMatrix::<Complex64>::zeros(d, d);
            for &idx in group {
                if idx >= d {
                    return Err(Error::usage(format!(
                        "basis index {idx} out of range for dimension {d}"
                    )));
                }
                if seen[idx] {
                    return Err(Error::usage(format!("basis index {idx} used twice")));
                }
                seen[idx] = true;
                p[(idx, idx)] = Complex64::new(1.0, 0.0);
            }
            projectors.push(p);
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::usage("basis groups must cover every basis vector"));
        }
        Self::new(space, projectors, labels)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, i: usize) -> &DMatrix<Complex64> {
        &self.projectors[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Subspace dimension of projector `i`: its trace rounded to the
    /// nearest integer (ranks are integers; the trace is exact to rounding).
    pub fn rank(&self, i: usize) -> usize {
        let tr = self.projectors[i].trace();
        tr.re.round() as usize
    }

    /// `<psi|P_i|psi>` for every projector.
    pub fn weights(&self, psi: &PureState) -> Result<Vec<f64>> {
        if psi.dim() != self.space.total_dim() {
            return Err(Error::usage("state dimension does not match decomposition"));
        }
        Ok(self
            .projectors
            .iter()
            .map(|p| psi.amplitudes().dotc(&(p * psi.amplitudes())).re)
            .collect())
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Entropy `-sum l ln l` of an eigenvalue list, clipping numerical noise in
/// `[EIGENVALUE_FLOOR, 0)` to zero and rejecting anything below the floor.
pub(crate) fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < EIGENVALUE_FLOOR {
            return Err(Error::Positivity { min_eigenvalue: l });
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    // Eigenvalues a hair above 1 contribute a tiny negative amount.
    Ok(s.max(0.0))
}

/// Von Neumann entropy `-Tr(rho ln rho)` in nats, with `0 ln 0 := 0`.
pub fn von_neumann(rho: &DensityMatrix) -> Result<f64> {
    entropy_from_eigenvalues(&rho.eigenvalues())
}

/// Entanglement entropy of `psi` relative to the factorization `f`:
/// the sum of the von Neumann entropies of all reduced factor states of
/// the rotated state.
pub fn entanglement_entropy(psi: &PureState, f: &Factorization) -> Result<f64> {
    if f.total_dim() != psi.dim() {
        return Err(Error::usage(format!(
            "factorization dimension {} does not match state dimension {}",
            f.total_dim(),
            psi.dim()
        )));
    }
    let rotated = f.apply(psi)?;
    sum_factor_entropies(rotated.amplitudes(), f.dims())
}

/// Sum of single-factor entropies of a pure amplitude vector read with the
/// given factor dimensions.
///
/// For each factor the nonzero spectrum of the reduced state equals that of
/// the smaller Gram matrix of the factor-by-rest reshape, so only
/// `min(d_i, d/d_i)`-sized eigenproblems are solved.
pub(crate) fn sum_factor_entropies(
    amplitudes: &DVector<Complex64>,
    dims: &[usize],
) -> Result<f64> {
    let space = HilbertSpace::new(dims.to_vec())?;
    let mut total = 0.0;
    for factor in 0..dims.len() {
        total += factor_entropy(amplitudes, &space, factor)?;
    }
    Ok(total)
}

fn factor_entropy(
    amplitudes: &DVector<Complex64>,
    space: &HilbertSpace,
    factor: usize,
) -> Result<f64> {
    let d_i = space.dims()[factor];
    let d_rest = space.total_dim() / d_i;
    if d_i == 1 || d_rest == 1 {
        return Ok(0.0);
    }
    let m = reshape_keep_by_rest(amplitudes, space, &[factor]);
    let gram = if d_i <= d_rest { &m * m.adjoint() } else { m.adjoint() * &m };
    let eig = gram.symmetric_eigen().eigenvalues;
    entropy_from_eigenvalues(eig.as_slice())
}

/// Index of the unique macrostate holding `psi` with weight at least
/// `1 - epsilon`. Fails with [`Error::NoMacrostate`] when no projector
/// reaches the threshold, signaling that the state is not macroscopically
/// definite.
pub fn macrostate_of(
    psi: &PureState,
    decomposition: &MacrostateDecomposition,
    epsilon: f64,
) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::usage("epsilon must lie strictly between 0 and 0.5"));
    }
    let weights = decomposition.weights(psi)?;
    let threshold = 1.0 - epsilon;
    // The threshold exceeds 1/2, so at most one projector can qualify.
    for (i, &w) in weights.iter().enumerate() {
        if w >= threshold {
            return Ok(i);
        }
    }
    let best = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Err(Error::NoMacrostate { best_weight: best, threshold })
}

/// Quantum Boltzmann entropy `k_B ln dim(H_M)` of the macrostate subspace
/// holding `psi` under the tolerant membership rule of [`macrostate_of`].
pub fn quantum_boltzmann(
    psi: &PureState,
    decomposition: &MacrostateDecomposition,
    epsilon: f64,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let idx = macrostate_of(psi, decomposition, epsilon)?;
    let rank = decomposition.rank(idx);
    Ok(constants.k_b * (rank as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::Factorization;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// (|01> + |10>) |0> / sqrt(2) on three qubits.
    fn entangled_pair_with_spectator() -> PureState {
        let mut a = DVector::zeros(8);
        a[2] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        a[4] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState::new(HilbertSpace::qubits(3).unwrap(), a).unwrap()
    }

    /// Test-local partial trace by explicit index summation, kept
    /// independent of the library implementation.
    fn brute_force_reduced(psi: &PureState, keep: usize) -> DMatrix<Complex64> {
        let dims = psi.space().dims().to_vec();
        let n = dims.len();
        let strides: Vec<usize> =
            (0..n).map(|k| dims[k + 1..].iter().product::<usize>()).collect();
        let d_k = dims[keep];
        let mut rho = DMatrix::<Complex64>::zeros(d_k, d_k);
        let total: usize = dims.iter().product();
        for i in 0..total {
            for j in 0..total {
                let digits_i: Vec<usize> = (0..n).map(|k| (i / strides[k]) % dims[k]).collect();
                let digits_j: Vec<usize> = (0..n).map(|k| (j / strides[k]) % dims[k]).collect();
                let env_match =
                    (0..n).all(|k| k == keep || digits_i[k] == digits_j[k]);
                if env_match {
                    rho[(digits_i[keep], digits_j[keep])] +=
                        psi.amplitudes()[i] * psi.amplitudes()[j].conj();
                }
            }
        }
        rho
    }

    fn brute_force_entropy(m: &DMatrix<Complex64>) -> f64 {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .filter(|&&l| l > 1e-15)
            .map(|&l| -l * l.ln())
            .sum()
    }

    #[test]
    fn pure_states_have_zero_entropy() {
        for seed in 0..5u64 {
            let psi = crate::hilbert::haar_sample(9, seed).unwrap();
            let s = von_neumann(&psi.to_density()).unwrap();
            assert!(s.abs() < 1e-9, "seed {seed}: entropy {s}");
        }
    }

    #[test]
    fn maximally_mixed_qubit_has_ln_two() {
        let rho = DensityMatrix::maximally_mixed(HilbertSpace::qubits(1).unwrap());
        assert_relative_eq!(von_neumann(&rho).unwrap(), 2.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_level_mixture_matches_scalar_formula() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.9, 0.0), c(0.1, 0.0)]));
        let rho = DensityMatrix::new(HilbertSpace::qubits(1).unwrap(), m).unwrap();
        let expected = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        assert_relative_eq!(von_neumann(&rho).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalue_below_floor_is_a_positivity_error() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.2, 0.0), c(-0.2, 0.0)]));
        let rho = DensityMatrix::new(HilbertSpace::qubits(1).unwrap(), m).unwrap();
        assert!(matches!(von_neumann(&rho), Err(Error::Positivity { .. })));
    }

    #[test]
    fn pair_as_one_factor_gives_zero_entanglement() {
        let psi = entangled_pair_with_spectator();
        let f = Factorization::identity(vec![4, 2]).unwrap();
        let s = entanglement_entropy(&psi, &f).unwrap();
        assert!(s.abs() < 1e-10, "entropy {s}");
    }

    #[test]
    fn three_way_split_matches_brute_force_oracle() {
        let psi = entangled_pair_with_spectator();
        let f = Factorization::identity(vec![2, 2, 2]).unwrap();
        let s = entanglement_entropy(&psi, &f).unwrap();

        // Oracle: brute-force partial traces of each factor.
        let expected: f64 =
            (0..3).map(|k| brute_force_entropy(&brute_force_reduced(&psi, k))).sum();
        assert_relative_eq!(s, expected, epsilon = 1e-10);
        assert_relative_eq!(s, 2.0 * 2.0_f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn product_state_has_zero_entanglement_in_native_factorization() {
        let parts = [
            crate::hilbert::haar_sample(2, 1).unwrap(),
            crate::hilbert::haar_sample(3, 2).unwrap(),
            crate::hilbert::haar_sample(2, 3).unwrap(),
        ];
        let psi = crate::hilbert::tensor(&parts).unwrap();
        let f = Factorization::identity(vec![2, 3, 2]).unwrap();
        assert!(entanglement_entropy(&psi, &f).unwrap() < 1e-10);
    }

    #[test]
    fn entanglement_entropy_requires_matching_dimensions() {
        let psi = entangled_pair_with_spectator();
        let f = Factorization::identity(vec![2, 2]).unwrap();
        assert!(matches!(entanglement_entropy(&psi, &f), Err(Error::Usage(_))));
    }

    #[test]
    fn entanglement_entropy_differs_between_factorizations() {
        let psi = entangled_pair_with_spectator();
        let coarse = Factorization::identity(vec![4, 2]).unwrap();
        let fine = Factorization::identity(vec![2, 2, 2]).unwrap();
        let s_coarse = entanglement_entropy(&psi, &coarse).unwrap();
        let s_fine = entanglement_entropy(&psi, &fine).unwrap();
        assert!((s_fine - s_coarse).abs() > 1.0);
    }

    #[test]
    fn factor_entropies_are_bounded_by_log_dim() {
        for seed in 0..5u64 {
            let psi = crate::hilbert::haar_sample(12, seed).unwrap();
            let space = HilbertSpace::new(vec![3, 4]).unwrap();
            let psi = psi.with_space(space.clone()).unwrap();
            for (k, &d) in space.dims().iter().enumerate() {
                let s = von_neumann(&psi.reduced_density(&[k]).unwrap()).unwrap();
                assert!(s <= (d as f64).ln() + 1e-9);
            }
        }
    }

    #[test]
    fn von_neumann_is_unitarily_invariant() {
        // Fixed mixed state, random unitaries from Hermitian generators.
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let space = HilbertSpace::new(vec![4]).unwrap();
        let psi_big = crate::hilbert::haar_sample(16, 1).unwrap();
        let psi_big = psi_big.with_space(HilbertSpace::new(vec![4, 4]).unwrap()).unwrap();
        let rho = psi_big.reduced_density(&[0]).unwrap();
        let s0 = von_neumann(&rho).unwrap();
        for _ in 0..5 {
            let mut b = DMatrix::<Complex64>::zeros(4, 4);
            for i in 0..4 {
                b[(i, i)] = c(rng.random_range(-1.0..1.0), 0.0);
                for j in i + 1..4 {
                    let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    b[(i, j)] = z;
                    b[(j, i)] = z.conj();
                }
            }
            let eig = b.symmetric_eigen();
            let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| {
                Complex64::new(0.0, l).exp()
            }));
            let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
            let rotated = &u * rho.matrix() * u.adjoint();
            let sym = (&rotated + rotated.adjoint()) * c(0.5, 0.0);
            let rho_u = DensityMatrix::new(space.clone(), sym).unwrap();
            assert!((von_neumann(&rho_u).unwrap() - s0).abs() < 1e-9);
        }
    }

    fn two_block_decomposition() -> MacrostateDecomposition {
        MacrostateDecomposition::from_basis_groups(
            HilbertSpace::new(vec![4]).unwrap(),
            &[vec![0, 1], vec![2, 3]],
            vec!["low".into(), "high".into()],
        )
        .unwrap()
    }

    #[test]
    fn exact_membership_is_found_for_any_epsilon() {
        let d = two_block_decomposition();
        let psi = PureState::basis_state(HilbertSpace::new(vec![4]).unwrap(), 2).unwrap();
        assert_eq!(macrostate_of(&psi, &d, 0.49).unwrap(), 1);
        assert_eq!(macrostate_of(&psi, &d, 1e-6).unwrap(), 1);
    }

    #[test]
    fn dominant_weight_selects_the_macrostate() {
        let d = two_block_decomposition();
        let a = DVector::from_vec(vec![
            c(0.99_f64.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.01_f64.sqrt(), 0.0),
            c(0.0, 0.0),
        ]);
        let psi = PureState::new(HilbertSpace::new(vec![4]).unwrap(), a).unwrap();
        assert_eq!(macrostate_of(&psi, &d, 0.05).unwrap(), 0);
    }

    #[test]
    fn balanced_weights_have_no_macrostate() {
        let d = two_block_decomposition();
        let a = DVector::from_vec(vec![
            c(0.5_f64.sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.5_f64.sqrt(), 0.0),
            c(0.0, 0.0),
        ]);
        let psi = PureState::new(HilbertSpace::new(vec![4]).unwrap(), a).unwrap();
        assert!(matches!(
            macrostate_of(&psi, &d, 0.05),
            Err(Error::NoMacrostate { .. })
        ));
    }

    #[test]
    fn invalid_epsilon_is_a_usage_error() {
        let d = two_block_decomposition();
        let psi = PureState::basis_state(HilbertSpace::new(vec![4]).unwrap(), 0).unwrap();
        assert!(matches!(macrostate_of(&psi, &d, 0.5), Err(Error::Usage(_))));
        assert!(matches!(macrostate_of(&psi, &d, 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn boltzmann_entropy_is_log_rank() {
        let constants = PhysicalConstants::default();
        let space = HilbertSpace::new(vec![8]).unwrap();

        // dim-1 macrostate.
        let d = MacrostateDecomposition::from_basis_groups(
            space.clone(),
            &[vec![0], (1..8).collect()],
            vec!["point".into(), "rest".into()],
        )
        .unwrap();
        let psi = PureState::basis_state(space.clone(), 0).unwrap();
        assert_relative_eq!(
            quantum_boltzmann(&psi, &d, 0.01, &constants).unwrap(),
            0.0,
            epsilon = 1e-12
        );

        // dim-4 macrostate.
        let d = MacrostateDecomposition::from_basis_groups(
            space.clone(),
            &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert_relative_eq!(
            quantum_boltzmann(&psi, &d, 0.01, &constants).unwrap(),
            4.0_f64.ln(),
            epsilon = 1e-12
        );

        // Single projector covering the whole dim-8 space.
        let d = MacrostateDecomposition::from_basis_groups(
            space.clone(),
            &[(0..8).collect()],
            vec!["everything".into()],
        )
        .unwrap();
        assert_relative_eq!(
            quantum_boltzmann(&psi, &d, 0.01, &constants).unwrap(),
            8.0_f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn boltzmann_entropy_ignores_block_preserving_rotations() {
        // A rotation acting inside each block commutes with the projectors:
        // the macrostate index and its rank are unchanged.
        let space = HilbertSpace::new(vec![4]).unwrap();
        let d = two_block_decomposition();
        let constants = PhysicalConstants::default();
        let a = DVector::from_vec(vec![c(0.8, 0.0), c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let psi = PureState::new(space.clone(), a).unwrap();
        let s0 = quantum_boltzmann(&psi, &d, 0.01, &constants).unwrap();

        // Block rotation: swap the two basis vectors inside block 0.
        let rotated = DVector::from_vec(vec![c(0.6, 0.0), c(0.8, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let psi_rot = PureState::new(space, rotated).unwrap();
        let s1 = quantum_boltzmann(&psi_rot, &d, 0.01, &constants).unwrap();
        assert_eq!(s0, s1);
    }

    #[test]
    fn malformed_projectors_are_rejected() {
        let space = HilbertSpace::new(vec![2]).unwrap();
        // Not idempotent.
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(0.5, 0.0)]));
        assert!(MacrostateDecomposition::new(
            space.clone(),
            vec![p, q],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        // Incomplete.
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert!(MacrostateDecomposition::new(space, vec![p], vec!["a".into()]).is_err());
    }
}
