//! A numerical laboratory for the decoherent arrow of time.
//!
//! The crate simulates how small quantum systems entangle with larger
//! environments and what the various entropy measures say about it:
//!
//! - [`hilbert`] — finite-dimensional Hilbert-space algebra: pure states,
//!   density matrices, tensor products, partial traces, Haar sampling.
//! - [`entropy`] — von Neumann entropy, factorization-relative entanglement
//!   entropy, and quantum Boltzmann entropy over macrostate decompositions.
//! - [`dynamics`] — exact closed-system evolution and a pure-dephasing
//!   spin-bath model with the environment-overlap decay `r(t)`.
//! - [`caldeira`] — a position-grid Runge-Kutta integrator for the
//!   Caldeira-Leggett master equation with toggleable terms.
//! - [`factorization`] — tensor-product factorizations, enumerable
//!   factorization classes, entanglement-entropy extremization, and
//!   verdicts for the entanglement-past-hypothesis variants.
//! - [`experiment`] — seeded, reproducible experiment runner with CSV/JSON
//!   output behind the `entarrow` command-line tool.

// Validations use `!(x > 0.0)` so that NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod caldeira;
pub mod dynamics;
pub mod entropy;
mod error;
mod fit;
pub mod experiment;
pub mod factorization;
pub mod hilbert;

pub use error::{Error, Result};
