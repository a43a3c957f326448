//! Truncated eigenbasis of the unperturbed Hamiltonian.
//!
//! A [`BasisSpec`] holds the retained eigenkets `|0>..|dim-1>` through their
//! zeroth-order energies `eps0[n]` and the ladder coefficients `c[n]` that
//! couple `|n>` to `|n+1>`. The spectrum is treated as bounded: the implicit
//! coefficient below the bottom level is zero, and the stored top coefficient
//! `c[dim-1]` must be exactly zero. Truncating an unbounded model this way
//! keeps the algebra closed but corrupts results near the top edge; the
//! `trust` index marks how many levels are free of those edge artifacts.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("basis needs at least one level")]
    Empty,
    #[error("energy list has {energies} entries but ladder list has {ladders}")]
    LengthMismatch { energies: usize, ladders: usize },
    #[error("top ladder coefficient must be exactly zero, got {0}")]
    NonzeroBoundary(Complex64),
    #[error("trust index {trust} outside 1..={dim}")]
    TrustOutOfRange { trust: usize, dim: usize },
    #[error("non-finite value in basis data")]
    NonFinite,
    #[error("degeneracy threshold must be nonnegative and finite, got {0}")]
    BadTolerance(f64),
}

/// Truncated eigenbasis: energies, ladder coefficients, trust band, and the
/// degeneracy threshold used by kernel-mode projection.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    eps0: Vec<f64>,
    c: Vec<Complex64>,
    trust: usize,
    tol_deg: f64,
    strictly_monotone: bool,
}

impl BasisSpec {
    /// Build a basis from explicit energies and ladder coefficients.
    ///
    /// `c[k]` couples `|k>` to `|k+1>`; the last entry must be exactly zero
    /// (bounded-spectrum boundary). `trust` must lie in `1..=dim`. `tol_deg`
    /// is the energy threshold below which two levels count as degenerate.
    pub fn new(
        eps0: Vec<f64>,
        c: Vec<Complex64>,
        trust: usize,
        tol_deg: f64,
    ) -> Result<Self, BasisError> {
        if eps0.is_empty() {
            return Err(BasisError::Empty);
        }
        if eps0.len() != c.len() {
            return Err(BasisError::LengthMismatch {
                energies: eps0.len(),
                ladders: c.len(),
            });
        }
        if eps0.iter().any(|e| !e.is_finite())
            || c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(BasisError::NonFinite);
        }
        let top = *c.last().expect("nonempty");
        if top != Complex64::new(0.0, 0.0) {
            return Err(BasisError::NonzeroBoundary(top));
        }
        if trust == 0 || trust > eps0.len() {
            return Err(BasisError::TrustOutOfRange {
                trust,
                dim: eps0.len(),
            });
        }
        if !(tol_deg.is_finite() && tol_deg >= 0.0) {
            return Err(BasisError::BadTolerance(tol_deg));
        }
        let strictly_monotone = eps0.windows(2).all(|w| w[1] - w[0] > tol_deg);
        Ok(BasisSpec {
            eps0,
            c,
            trust,
            tol_deg,
            strictly_monotone,
        })
    }

    /// Bosonic oscillator basis: `eps0[n] = omega*(n + 1/2)`, `c[n] = sqrt(n+1)`
    /// with the top coefficient forced to zero.
    pub fn bosonic(dim: usize, omega: f64, trust: usize) -> Result<Self, BasisError> {
        let eps0: Vec<f64> = (0..dim).map(|n| omega * (n as f64 + 0.5)).collect();
        let mut c: Vec<Complex64> = (0..dim)
            .map(|n| Complex64::new(((n + 1) as f64).sqrt(), 0.0))
            .collect();
        if let Some(last) = c.last_mut() {
            *last = Complex64::new(0.0, 0.0);
        }
        let tol = Self::default_tol_deg(&eps0);
        Self::new(eps0, c, trust, tol)
    }

    /// Scale-invariant default degeneracy threshold: `1e-9` of the spectral span.
    pub fn default_tol_deg(eps0: &[f64]) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &e in eps0 {
            lo = lo.min(e);
            hi = hi.max(e);
        }
        if lo.is_finite() && hi > lo {
            1e-9 * (hi - lo)
        } else {
            0.0
        }
    }

    /// Default trust index for a run to order `k` with ladder monomials of
    /// degree up to `max_degree`: each nested product widens the edge-corrupted
    /// zone by at most one operand reach, so `dim - 2*k*max_degree`, floored
    /// at one level.
    pub fn default_trust(dim: usize, order: usize, max_degree: usize) -> usize {
        dim.saturating_sub(2 * order * max_degree).max(1)
    }

    pub fn dim(&self) -> usize {
        self.eps0.len()
    }

    pub fn eps0(&self) -> &[f64] {
        &self.eps0
    }

    pub fn ladder(&self) -> &[Complex64] {
        &self.c
    }

    /// Ladder coefficient with the implicit zero boundary: indices outside
    /// `0..dim` return zero.
    pub fn c_at(&self, k: i64) -> Complex64 {
        if k < 0 || k as usize >= self.c.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.c[k as usize]
        }
    }

    pub fn trust(&self) -> usize {
        self.trust
    }

    pub fn tol_deg(&self) -> f64 {
        self.tol_deg
    }

    /// True iff `eps0` is strictly increasing with every gap above `tol_deg`.
    pub fn strictly_monotone(&self) -> bool {
        self.strictly_monotone
    }

    /// Transition energy `eps0[row] - eps0[col]` for an entry at band shift
    /// `row - col`.
    pub fn transition_energy(&self, row: usize, col: usize) -> f64 {
        self.eps0[row] - self.eps0[col]
    }

    /// Copy of this basis with a different trust index.
    pub fn with_trust(&self, trust: usize) -> Result<Self, BasisError> {
        Self::new(self.eps0.clone(), self.c.clone(), trust, self.tol_deg)
    }
}
