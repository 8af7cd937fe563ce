//! Guided TE/TM modes of planar gradient waveguides.
//!
//! The mode equations for arbitrary continuous ε(x), μ(x) are rewritten as a
//! 1-D Schrödinger problem `−ψ″ + Vψ = −β²ψ` and solved on a Dirichlet box.
//! When εμ is constant the TE and TM potentials are supersymmetric partners;
//! [`susy`] detects that case and checks the factorization, the level pairing
//! and the zero mode numerically.
//!
//! Units are natural with c = 1: the driving parameter is the free-space
//! wavenumber `k0`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod oracles;
pub mod profiles;
pub mod reduction;
pub mod spectral;
pub mod susy;

pub use error::{Error, Result};
pub use profiles::{Grid, MaterialProfile, ProfileKind, ProfileSample, TabulatedProfile};
pub use reduction::{EffectivePotential, Polarization, PotentialForm};
pub use spectral::{compute_spectrum, DiscreteHamiltonian, Mode, ModeSpectrum};
pub use susy::{Superpotential, SusyClassification, SusyReport};
