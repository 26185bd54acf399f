//! Position-grid integrator for the Caldeira-Leggett master equation with
//! independently toggleable terms:
//!
//! ```text
//! d rho/dt = -(i/hbar) [H, rho]                                  (unitary)
//!            - gamma (x - y) (d/dx - d/dy) rho                   (dissipation)
//!            - (2 M gamma k_B T / hbar^2) (x - y)^2 rho          (decoherence)
//! ```
//!
//! with `H = p^2/2M + M omega^2 x^2 / 2` (a trap keeps the state on the
//! grid), second-order central differences, Dirichlet boundaries, and a
//! fixed-step fourth-order Runge-Kutta loop that re-symmetrizes the matrix
//! after every step. Positivity is tracked, not enforced: the equation is
//! free to push eigenvalues negative, and [`positivity_min_eig`] measures
//! by how much.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::hilbert::PhysicalConstants;

/// Stability safety factor: `dt` must stay below `0.2 * min(M dx^2 / hbar,
/// 1 / (Lambda span^2), 1 / gamma)`.
pub const STABILITY_FACTOR: f64 = 0.2;
/// Construction-time ceiling on probability density at the grid edge.
pub const EDGE_DENSITY_TOL: f64 = 1e-8;
/// Allowed trace drift over an integration run.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;

/// A uniform position grid centered at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionGrid {
    n_points: usize,
    spacing: f64,
}

impl PositionGrid {
    pub fn new(n_points: usize, spacing: f64) -> Result<Self> {
        if n_points < 16 {
            return Err(Error::usage("the grid needs at least 16 points"));
        }
        if !(spacing > 0.0) {
            return Err(Error::usage("grid spacing must be positive"));
        }
        Ok(PositionGrid { n_points, spacing })
    }

    /// Grid spanning `[-half_width, half_width]` with `n_points` points.
    pub fn from_half_width(n_points: usize, half_width: f64) -> Result<Self> {
        if n_points < 16 {
            return Err(Error::usage("the grid needs at least 16 points"));
        }
        if !(half_width > 0.0) {
            return Err(Error::usage("the half-width must be positive"));
        }
        Ok(PositionGrid { n_points, spacing: 2.0 * half_width / (n_points - 1) as f64 })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Distance between the first and last grid point.
    pub fn extent(&self) -> f64 {
        (self.n_points - 1) as f64 * self.spacing
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.n_points - 1) as f64 / 2.0) * self.spacing
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }
}

/// Bath and trap parameters of the master equation.
#[derive(Debug, Clone, PartialEq)]
pub struct CLParameters {
    pub mass: f64,
    /// Relaxation rate; zero switches the bath terms off.
    pub gamma: f64,
    pub temperature: f64,
    /// Trap frequency.
    pub omega: f64,
    pub constants: PhysicalConstants,
}

impl CLParameters {
    pub fn new(
        mass: f64,
        gamma: f64,
        temperature: f64,
        omega: f64,
        constants: PhysicalConstants,
    ) -> Result<Self> {
        if !(mass > 0.0) || !(temperature > 0.0) || !(omega > 0.0) {
            return Err(Error::usage("mass, temperature, and omega must be positive"));
        }
        if gamma < 0.0 {
            return Err(Error::usage("gamma must be non-negative"));
        }
        Ok(CLParameters { mass, gamma, temperature, omega, constants })
    }

    /// Decoherence strength `Lambda = 2 M gamma k_B T / hbar^2`.
    pub fn lambda(&self) -> f64 {
        2.0 * self.mass * self.gamma * self.constants.k_b * self.temperature
            / (self.constants.hbar * self.constants.hbar)
    }
}

/// Which right-hand-side terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermSet {
    pub unitary: bool,
    pub dissipation: bool,
    pub decoherence: bool,
}

impl TermSet {
    pub fn all() -> Self {
        TermSet { unitary: true, dissipation: true, decoherence: true }
    }

    pub fn unitary_only() -> Self {
        TermSet { unitary: true, dissipation: false, decoherence: false }
    }

    pub fn decoherence_only() -> Self {
        TermSet { unitary: false, dissipation: false, decoherence: true }
    }

    pub fn is_empty(&self) -> bool {
        !(self.unitary || self.dissipation || self.decoherence)
    }
}

/// A density matrix sampled on a position grid: `rho[(i, j)] = rho(x_i, x_j)`
/// with trace `sum_i rho(x_i, x_i) dx = 1`. Positivity is not an invariant.
#[derive(Debug, Clone)]
pub struct CLState {
    rho: DMatrix<Complex64>,
    grid: PositionGrid,
}

impl CLState {
    pub fn new(grid: PositionGrid, rho: DMatrix<Complex64>) -> Result<Self> {
        let n = grid.n_points();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::usage(format!(
                "matrix shape {}x{} does not match the {n}-point grid",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let herm = crate::hilbert::hermiticity_deviation(&rho);
        if herm > 1e-9 {
            return Err(Error::usage(format!(
                "grid state deviates from Hermiticity by {herm:e}"
            )));
        }
        let state = CLState { rho, grid };
        let tr = state.trace();
        if (tr - 1.0).abs() > TRACE_DRIFT_TOL {
            return Err(Error::usage(format!("grid trace {tr} deviates from 1")));
        }
        Ok(state)
    }

    fn from_raw(grid: PositionGrid, rho: DMatrix<Complex64>) -> Self {
        CLState { rho, grid }
    }

    /// A normalized Gaussian wave packet `exp(-(x-c)^2/(4 w^2) + i p x / hbar)`
    /// as a pure-state density matrix. Fails when the packet does not fit
    /// on the grid (edge density above [`EDGE_DENSITY_TOL`]).
    pub fn gaussian_packet(
        grid: PositionGrid,
        center: f64,
        width: f64,
        momentum: f64,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        Self::superposed_packets(grid, &[(center, momentum)], width, constants)
    }

    /// A normalized superposition of Gaussian packets with a common width
    /// ("cat" states for two well-separated centers).
    pub fn superposed_packets(
        grid: PositionGrid,
        centers_momenta: &[(f64, f64)],
        width: f64,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        if centers_momenta.is_empty() {
            return Err(Error::usage("at least one packet is required"));
        }
        if !(width > 0.0) {
            return Err(Error::usage("the packet width must be positive"));
        }
        let n = grid.n_points();
        let mut psi = vec![Complex64::default(); n];
        for (i, slot) in psi.iter_mut().enumerate() {
            let x = grid.x(i);
            for &(c, p) in centers_momenta {
                let envelope = (-(x - c) * (x - c) / (4.0 * width * width)).exp();
                let phase = Complex64::new(0.0, p * x / constants.hbar).exp();
                *slot += Complex64::new(envelope, 0.0) * phase;
            }
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
        if norm2 == 0.0 {
            return Err(Error::usage("the packet vanishes on the grid"));
        }
        let scale = 1.0 / norm2.sqrt();
        for z in psi.iter_mut() {
            *z *= Complex64::new(scale, 0.0);
        }
        let edge = psi[0].norm_sqr().max(psi[n - 1].norm_sqr()) * grid.spacing();
        if edge > EDGE_DENSITY_TOL {
            return Err(Error::usage(format!(
                "edge density {edge:e} exceeds {EDGE_DENSITY_TOL:e}; widen the grid"
            )));
        }
        let mut rho = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Ok(CLState { rho, grid })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    /// `sum_i rho(x_i, x_i) dx`.
    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum::<f64>() * self.grid.spacing()
    }

    /// `Tr(rho^2)` on the grid: `sum_ij |rho_ij|^2 dx^2`.
    pub fn purity(&self) -> f64 {
        let dx = self.grid.spacing();
        self.rho.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx * dx
    }

    /// `<p> = Re( i hbar/2 sum_i (rho(i, i+1) - rho(i, i-1)) )`.
    pub fn mean_momentum(&self, constants: &PhysicalConstants) -> f64 {
        let n = self.grid.n_points();
        let mut acc = Complex64::default();
        for i in 0..n {
            if i + 1 < n {
                acc += self.rho[(i, i + 1)];
            }
            if i >= 1 {
                acc -= self.rho[(i, i - 1)];
            }
        }
        (Complex64::new(0.0, constants.hbar / 2.0) * acc).re
    }
}

/// Right-hand side of the master equation for the enabled terms. With all
/// flags set this equals the sum of the three single-flag evaluations.
pub fn cl_rhs(
    state: &CLState,
    params: &CLParameters,
    terms: TermSet,
) -> Result<DMatrix<Complex64>> {
    if terms.is_empty() {
        return Err(Error::usage("at least one term must be enabled"));
    }
    Ok(rhs_unchecked(state.matrix(), state.grid(), params, terms))
}

fn rhs_unchecked(
    rho: &DMatrix<Complex64>,
    grid: &PositionGrid,
    params: &CLParameters,
    terms: TermSet,
) -> DMatrix<Complex64> {
    let n = grid.n_points();
    let dx = grid.spacing();
    let hbar = params.constants.hbar;
    let kinetic = -hbar * hbar / (2.0 * params.mass * dx * dx);
    let half_m_w2 = 0.5 * params.mass * params.omega * params.omega;
    let lambda = params.lambda();
    let gamma = params.gamma;
    let minus_i_over_hbar = Complex64::new(0.0, -1.0 / hbar);
    let zero = Complex64::default();
    let at = |i: isize, j: isize| -> Complex64 {
        if i < 0 || j < 0 || i as usize >= n || j as usize >= n {
            zero
        } else {
            rho[(i as usize, j as usize)]
        }
    };

    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let xi = grid.x(i);
        for j in 0..n {
            let xj = grid.x(j);
            let (ii, jj) = (i as isize, j as isize);
            let mut dot = zero;
            if terms.unitary {
                let lap_x = at(ii + 1, jj) - rho[(i, j)] * 2.0 + at(ii - 1, jj);
                let lap_y = at(ii, jj + 1) - rho[(i, j)] * 2.0 + at(ii, jj - 1);
                let h_rho =
                    (lap_x - lap_y) * kinetic + rho[(i, j)] * (half_m_w2 * (xi * xi - xj * xj));
                dot += minus_i_over_hbar * h_rho;
            }
            if terms.dissipation && gamma > 0.0 {
                let d_dx = (at(ii + 1, jj) - at(ii - 1, jj)) / (2.0 * dx);
                let d_dy = (at(ii, jj + 1) - at(ii, jj - 1)) / (2.0 * dx);
                dot += (d_dx - d_dy) * (-gamma * (xi - xj));
            }
            if terms.decoherence && lambda > 0.0 {
                dot += rho[(i, j)] * (-lambda * (xi - xj) * (xi - xj));
            }
            out[(i, j)] = dot;
        }
    }
    out
}

/// Largest admissible time step for the given parameters and grid.
pub fn stability_bound(params: &CLParameters, grid: &PositionGrid) -> f64 {
    let span = grid.extent();
    let kinetic = params.mass * grid.spacing() * grid.spacing() / params.constants.hbar;
    let lambda = params.lambda();
    let dephasing = if lambda > 0.0 { 1.0 / (lambda * span * span) } else { f64::INFINITY };
    let relaxation = if params.gamma > 0.0 { 1.0 / params.gamma } else { f64::INFINITY };
    STABILITY_FACTOR * kinetic.min(dephasing).min(relaxation)
}

/// A sequence of snapshots from [`integrate`].
#[derive(Debug, Clone)]
pub struct CLTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CLState>,
}

/// Integrates the master equation with fixed-step RK4 from `rho0` to
/// `t_final`, storing a snapshot every `snapshot_stride` steps (plus the
/// initial and final states). `dt` is an upper bound on the step; the
/// actual step divides `t_final` evenly. The matrix is re-symmetrized
/// after every step and the run aborts if the trace drifts beyond
/// [`TRACE_DRIFT_TOL`].
pub fn integrate(
    rho0: &CLState,
    params: &CLParameters,
    t_final: f64,
    dt: f64,
    terms: TermSet,
    snapshot_stride: usize,
) -> Result<CLTrajectory> {
    if terms.is_empty() {
        return Err(Error::usage("at least one term must be enabled"));
    }
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(Error::usage("t_final and dt must be positive"));
    }
    let bound = stability_bound(params, rho0.grid());
    if dt >= bound {
        return Err(Error::usage(format!("dt = {dt} violates the stability bound {bound:e}")));
    }
    let stride = snapshot_stride.max(1);
    let n_steps = (t_final / dt).ceil() as usize;
    let step = t_final / n_steps as f64;
    let grid = rho0.grid().clone();

    let mut rho = rho0.matrix().clone();
    let mut times = vec![0.0];
    let mut states = vec![CLState::from_raw(grid.clone(), rho.clone())];

    let half_step = Complex64::new(0.5 * step, 0.0);
    let full_step = Complex64::new(step, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let sixth = Complex64::new(step / 6.0, 0.0);
    for k in 1..=n_steps {
        let k1 = rhs_unchecked(&rho, &grid, params, terms);
        let k2 = rhs_unchecked(&(&rho + &k1 * half_step), &grid, params, terms);
        let k3 = rhs_unchecked(&(&rho + &k2 * half_step), &grid, params, terms);
        let k4 = rhs_unchecked(&(&rho + &k3 * full_step), &grid, params, terms);
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        // Roundoff control; the exact dynamics preserves Hermiticity.
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);

        let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum::<f64>() * grid.spacing();
        if (trace - 1.0).abs() > TRACE_DRIFT_TOL {
            return Err(Error::Integration(format!(
                "trace drifted to {trace} at step {k} (t = {})",
                k as f64 * step
            )));
        }
        if k % stride == 0 || k == n_steps {
            times.push(k as f64 * step);
            states.push(CLState::from_raw(grid.clone(), rho.clone()));
        }
    }
    Ok(CLTrajectory { times, states })
}

/// Mean `|rho(x, x + s)|` over the diagonal band at separation `s`
/// (snapped to a whole number of grid spacings), unnormalized.
pub fn offdiag_coherence(state: &CLState, separation: f64) -> Result<f64> {
    let k = band_index(state.grid(), separation)?;
    let n = state.grid().n_points();
    let count = n - k;
    let mut acc = 0.0;
    for i in 0..count {
        acc += state.matrix()[(i, i + k)].norm();
    }
    Ok(acc / count as f64)
}

/// Snaps a physical separation to a band offset, rejecting values beyond
/// the grid extent.
pub fn band_index(grid: &PositionGrid, separation: f64) -> Result<usize> {
    if separation < 0.0 {
        return Err(Error::usage("the separation must be non-negative"));
    }
    let k = (separation / grid.spacing()).round() as usize;
    if k >= grid.n_points() {
        return Err(Error::usage(format!(
            "separation {separation} exceeds the grid extent {}",
            grid.extent()
        )));
    }
    Ok(k)
}

/// The actual separation used for a requested one, after grid snapping.
pub fn snapped_separation(grid: &PositionGrid, separation: f64) -> Result<f64> {
    Ok(band_index(grid, separation)? as f64 * grid.spacing())
}

/// Off-diagonal coherence along a trajectory, normalized to its initial
/// value.
pub fn coherence_series(traj: &CLTrajectory, separation: f64) -> Result<Vec<f64>> {
    let first = offdiag_coherence(&traj.states[0], separation)?;
    if first <= 0.0 {
        return Err(Error::usage("the initial coherence at this separation vanishes"));
    }
    traj.states.iter().map(|s| Ok(offdiag_coherence(s, separation)? / first)).collect()
}

/// Minimum eigenvalue of the Hermitian-symmetrized grid density matrix
/// scaled by `dx`, so that a valid state has spectrum in `[0, 1]`.
/// Negative values quantify the positivity violation.
pub fn positivity_min_eig(state: &CLState) -> f64 {
    let sym = (state.matrix() + state.matrix().adjoint())
        * Complex64::new(0.5 * state.grid().spacing(), 0.0);
    sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Decoherence and relaxation timescales extracted from a trajectory.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Timescales {
    /// From an exponential fit of the normalized off-diagonal coherence.
    pub tau_decoherence: f64,
    /// `1 / gamma`.
    pub tau_relaxation: f64,
    /// `tau_relaxation / tau_decoherence`.
    pub ratio: f64,
    /// Set when relaxation outpaces decoherence (`ratio < 1`), the
    /// strong-coupling low-temperature corner.
    pub dissipation_dominant: bool,
}

/// Normalized-coherence floor for the timescale fit. The decay rate at the
/// requested separation is an initial-time coefficient; deeper into the
/// decay the dissipation term has already pulled the coherence support
/// toward the diagonal and the apparent rate drifts.
const FIT_FLOOR: f64 = 0.35;

/// Fits `tau_D` from the early coherence decay at `separation` and
/// compares it with `tau_R = 1/gamma`. For dephasing-dominated runs the
/// ratio agrees with `2 M k_B T s^2 / hbar^2` at the snapped separation.
pub fn timescales(
    traj: &CLTrajectory,
    params: &CLParameters,
    separation: f64,
) -> Result<Timescales> {
    if params.gamma <= 0.0 {
        return Err(Error::Fit("gamma = 0: no relaxation timescale exists".into()));
    }
    let series = coherence_series(traj, separation)?;
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (t, c) in traj.times.iter().zip(&series) {
        if *c >= FIT_FLOOR {
            ts.push(*t);
            logs.push(c.ln());
        }
    }
    if ts.len() < 3 {
        return Err(Error::Fit("too few usable coherence samples for a fit".into()));
    }
    let (slope, _, _) =
        linear_fit(&ts, &logs).ok_or_else(|| Error::Fit("degenerate fit abscissas".into()))?;
    if slope >= 0.0 {
        return Err(Error::Fit("the coherence signal does not decay".into()));
    }
    let tau_decoherence = -1.0 / slope;
    let tau_relaxation = 1.0 / params.gamma;
    let ratio = tau_relaxation / tau_decoherence;
    Ok(Timescales { tau_decoherence, tau_relaxation, ratio, dissipation_dominant: ratio < 1.0 })
}
