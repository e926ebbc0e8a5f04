//! Autonomous unitary dilations of finite-dimensional open quantum dynamics.
//!
//! The pipeline runs from a GKLS generator (or any analytic CPTP family) to a
//! time-dependent unitary dilation on `H1 ⊗ H0`, and from there to bang-bang
//! dynamical decoupling on the clock-extended, autonomous dilation:
//!
//! 1. [`channels`]: the Schrödinger-picture family `Φ_t*` as superoperators.
//! 2. [`choi_kraus`]: Choi eigenpaths tracked along a time grid, square-root
//!    branches and the continuous Kraus family `M_k(t)`.
//! 3. [`dilation`]: the propagator grid `U(t,0)` (Kraus columns completed to a
//!    unitary frame), its Hamiltonian `H(t)` and the clock reduction.
//! 4. [`decoupling`]: decoupling sets and cycles, the decoupled propagator,
//!    the averaged target `U_e`, error brackets, sweeps and rate fits.
//!
//! [`pointstate`] holds the finite-width point-localised clock states on
//! functions of position and momentum.
//!
//! All tensor products put the bath factor first.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod choi_kraus;
pub mod decoupling;
pub mod dilation;
pub mod error;
pub mod grid;
pub mod numerics;
pub mod pointstate;
pub mod tolerances;

pub use channels::{ChannelFamily, Lindbladian, Superoperator};
pub use choi_kraus::{ChoiMatrix, KrausFamily, SpectralPath};
pub use decoupling::{DecouplingCycle, DecouplingSet, RateClass, RateFit, SweepRecord, SweepResult};
pub use dilation::{DilationSource, PropagatorGrid};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use numerics::{ComplexMatrix, ComplexVector, DensityMatrix, UnitaryMatrix, C64};
pub use tolerances::Tolerances;
