//! Coherent spaces and coherent-state quantization.
//!
//! A coherent space is a set of points together with a coherent product
//! `K(z, z')` whose Gram matrices are Hermitian positive semidefinite. This
//! crate evaluates such products for a catalog of spaces, cross-checks their
//! differential geometry against a finite-difference oracle, quantizes
//! coherent maps and oscillator generators on the Klauder space (bosonic Fock
//! calculus), and analyzes Schrödinger dynamics through autocorrelations,
//! resolvents and the Dirac–Frenkel principle.
//!
//! Module map:
//!
//! * [`space`]: points, the [`space::CoherentProduct`] trait, Gram matrices,
//!   PSD certification and the metric quantities built from `K`.
//! * [`catalog`]: concrete spaces with closed-form geometry and the
//!   finite-difference calculus used to validate it.
//! * [`quantum`]: finite spans of coherent states and the lift `Γ` of
//!   coherent maps.
//! * [`fock`]: oscillator semigroup, `dΓ`, normal ordering and Weyl operators.
//! * [`dynamics`]: exact and integrated flows, Hamiltonian vector fields,
//!   Poisson brackets, Euler–Lagrange propagation.
//! * [`spectral`]: spectra, projectors and resolvents from autocorrelations.
//! * [`experiment`]: JSON-configured experiments behind the `cohk` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod dynamics;
pub mod experiment;
pub mod fock;
pub mod linalg;
pub mod quantum;
pub mod sampling;
pub mod space;
pub mod spectral;

pub use num_complex::Complex64 as C64;

/// Seed used by every randomized routine unless the caller supplies one.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

pub use space::{Domain, Point, SpaceError, SpaceHandle, Tangent};
