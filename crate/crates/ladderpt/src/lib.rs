//! Operator perturbation theory over abstract ladder operators.
//!
//! Given a truncated eigenbasis of an unperturbed Hamiltonian (energies
//! `eps0` and ladder coefficients `c`), and a perturbation written as a sum
//! of normal-ordered ladder monomials `coeff * raise^m * lower^n`, this crate
//! solves order by order for the effective-Hamiltonian corrections `W_k`, the
//! antihermitian generators `G_k`, perturbed energies, and perturbed
//! eigenkets.
//!
//! The pieces:
//!
//! * [`basis`] — the truncated eigenbasis and its ladder coefficients.
//! * [`band`] — operators stored band-by-band (shift-diagonal form), with the
//!   full operator arithmetic (products, commutators, adjoints, kets).
//! * [`superop`] — the parallel projection and the derivation superoperator
//!   together with its inverse on the orthogonal subspace.
//! * [`diagram`] — the bracket diagrams enumerating the nested-commutator
//!   expressions at each order.
//! * [`engine`] — the order-by-order solve and the energy/eigenket series.
//! * [`oracle`] — an independent dense-matrix route (exact diagonalization,
//!   textbook second-order sums, transformed-Hamiltonian reference) used to
//!   cross-check the banded implementation.

pub mod band;
pub mod basis;
pub mod diagram;
pub mod engine;
pub mod oracle;
pub mod superop;

pub use band::{BandOperator, Ket, LadderExpr, LadderTerm, OperatorError};
pub use basis::{BasisError, BasisSpec};
pub use diagram::{Diagram, DiagramError, RightSide};
pub use engine::{EngineError, PerturbationResult};
pub use superop::{ProjectionMode, SuperopError};
