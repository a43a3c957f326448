//! Superoperators over the banded representation.
//!
//! The derivation map `gamma(A) = [H0, A]` acts entrywise in band form: the
//! element `<k+s|A|k>` is multiplied by the transition energy
//! `eps0[k+s] - eps0[k]`. Its inverse therefore divides by the same gaps,
//! which is well defined exactly on the orthogonal subspace (no zero-gap
//! entries). The parallel projection `pi` extracts the component commuting
//! with `H0`.
//!
//! On a degenerate spectrum the strictly-diagonal projection leaves zero-gap
//! entries off the diagonal, where the gap division blows up. Kernel mode
//! projects onto all entries whose transition energy is below the basis
//! degeneracy threshold — the kernel of `gamma` — so the inverse stays well
//! defined. On a strictly monotone spectrum the two modes agree exactly.

use crate::band::BandOperator;
use crate::basis::BasisSpec;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuperopError {
    #[error(
        "input is not orthogonal: projected entry of magnitude {magnitude:.3e} exceeds {tol:.3e}"
    )]
    NotOrthogonal { magnitude: f64, tol: f64 },
    #[error(
        "degenerate transition {col}->{row} (gap {gap:.3e}) carries magnitude {magnitude:.3e}; \
         kernel mode is required"
    )]
    DegenerateTransition {
        row: usize,
        col: usize,
        gap: f64,
        magnitude: f64,
    },
}

/// How the parallel projection treats degenerate levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Keep exactly the shift-zero band.
    Strict,
    /// Keep every entry whose transition energy is within the basis
    /// degeneracy threshold (the kernel of the derivation map).
    Kernel,
}

impl ProjectionMode {
    /// Strict on strictly monotone spectra, kernel otherwise.
    pub fn auto(basis: &BasisSpec) -> Self {
        if basis.strictly_monotone() {
            ProjectionMode::Strict
        } else {
            ProjectionMode::Kernel
        }
    }
}

fn in_kernel(basis: &BasisSpec, s: i64, k: usize, mode: ProjectionMode) -> bool {
    match mode {
        ProjectionMode::Strict => s == 0,
        ProjectionMode::Kernel => {
            let row = (k as i64 + s) as usize;
            basis.transition_energy(row, k).abs() <= basis.tol_deg()
        }
    }
}

/// Parallel projection: the component of `a` commuting with `H0`.
/// Idempotent and linear; annihilates the orthogonal part exactly.
pub fn pi(a: &BandOperator, mode: ProjectionMode) -> BandOperator {
    match mode {
        ProjectionMode::Strict => a.split().0,
        ProjectionMode::Kernel => {
            let basis = a.basis().clone();
            a.map_entries(|s, k, v| {
                if in_kernel(&basis, s, k, mode) {
                    v
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        }
    }
}

/// Derivation superoperator `[H0, .]`, applied entrywise as multiplication by
/// the transition energy.
pub fn gamma(a: &BandOperator) -> BandOperator {
    let basis = a.basis().clone();
    a.map_entries(|s, k, v| {
        let row = (k as i64 + s) as usize;
        v * basis.transition_energy(row, k)
    })
}

/// Default orthogonality tolerance for [`gamma_inv`]: `1e-10` of the largest
/// entry magnitude of the input.
pub fn default_tol_orth(b: &BandOperator) -> f64 {
    1e-10 * b.max_abs()
}

/// Inverse of the derivation superoperator, defined on the orthogonal
/// subspace: divides each entry by its transition energy.
///
/// The projection of the input under `mode` must vanish within `tol_orth`
/// (`NotOrthogonal` otherwise). In strict mode an off-diagonal entry sitting
/// on a degenerate transition cannot be divided; if its magnitude exceeds
/// `tol_orth` this fails with `DegenerateTransition`, signalling that kernel
/// mode is needed. Entries below `tol_orth` on zero-gap transitions are
/// dropped rather than amplified.
pub fn gamma_inv(b: &BandOperator, mode: ProjectionMode) -> Result<BandOperator, SuperopError> {
    let tol_orth = default_tol_orth(b);
    let basis = b.basis().clone();

    for (s, d) in b.bands() {
        for (i, &v) in d.iter().enumerate() {
            let k = (-s).max(0) as usize + i;
            if in_kernel(&basis, s, k, mode) && v.norm() > tol_orth {
                return Err(SuperopError::NotOrthogonal {
                    magnitude: v.norm(),
                    tol: tol_orth,
                });
            }
        }
    }

    let mut degenerate: Option<SuperopError> = None;
    let out = b.map_entries(|s, k, v| {
        let row = (k as i64 + s) as usize;
        let gap = basis.transition_energy(row, k);
        if in_kernel(&basis, s, k, mode) {
            // Projected away within tolerance; do not divide.
            return Complex64::new(0.0, 0.0);
        }
        if gap.abs() <= basis.tol_deg() {
            // Strict mode only: a degenerate transition outside the strict
            // projection. Small residue is dropped, anything larger is fatal.
            if v.norm() > tol_orth && degenerate.is_none() {
                degenerate = Some(SuperopError::DegenerateTransition {
                    row,
                    col: k,
                    gap,
                    magnitude: v.norm(),
                });
            }
            return Complex64::new(0.0, 0.0);
        }
        v / gap
    });
    match degenerate {
        Some(err) => Err(err),
        None => Ok(out),
    }
}
