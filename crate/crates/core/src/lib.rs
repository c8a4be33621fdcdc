//! Energy-minimizing solitons of the diffraction-managed discrete nonlinear
//! Schrödinger equation
//!
//! ```text
//!     ω φ = -d_av Δφ - ∫ T_r^{-1}[ P(T_r φ) ] μ(dr),      T_r = e^{irΔ}
//! ```
//!
//! on `l²(ℤ)`, computed as minimizers of
//! `H(φ) = (d_av/2)‖D₊φ‖₂² - N(φ)` under the power constraint `‖φ‖₂² = λ`.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches
//! files, the command line or threads lives in the `dmsol` companion crate.
//!
//! Module map:
//!
//! - [`lattice`]: truncated lattice fields, `Δ`, `D±`, norms, exponential profiles
//! - [`evolution`]: the free propagator `T_r`, its kernel and margin sizing
//! - [`profile`]: diffraction measures `μ` and nonlinear potentials `V`
//! - [`energy`]: `N`, `H`, their gradient, `ω` and the Euler–Lagrange residual
//! - [`minimizer`]: sphere-constrained descent and the energy curve `λ ↦ E_λ`
//! - [`threshold`]: the quotient `R(λ)` and the critical power `λ_cr`
//! - [`decay`]: tail distribution and (super-)exponential rate fits
//! - [`verify`]: randomized checks of the exact identities and explicit bounds
//! - [`propagate`]: time integration of the averaged and the full equation
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod decay;
pub mod energy;
mod error;
pub mod evolution;
pub mod lattice;
pub mod minimizer;
pub mod profile;
pub mod propagate;
pub mod quadrature;
pub mod random;
pub mod sum;
pub mod threshold;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use energy::{Functional, Problem};
pub use evolution::{EvolutionKind, EvolutionMethod};
pub use lattice::{BoxPolicy, LatticeField};
pub use minimizer::{SolveConfig, SolveResult};
pub use profile::{DiffractionMeasure, Nonlinearity, PiecewiseProfile};
