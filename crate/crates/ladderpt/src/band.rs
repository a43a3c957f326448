//! Banded operator arithmetic over a truncated eigenbasis.
//!
//! On a truncated basis every normal-ordered ladder monomial
//! `raise^m * lower^n` occupies a single band: the set of matrix elements
//! `<k+s|A|k>` at fixed shift `s = m - n`. A [`BandOperator`] stores an
//! operator as a map from shift to amplitude sequence, which keeps sums,
//! products, commutators and adjoints cheap and keeps the parallel/orthogonal
//! split (shift zero vs the rest) a bookkeeping operation.
//!
//! Only exact zeros are pruned from storage, so operator equality is exact
//! rather than tolerance-dependent.

use crate::basis::BasisSpec;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("operands are defined over different bases")]
    BasisMismatch,
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("band at shift {shift} has {len} entries, expected {expected}")]
    BandShape {
        shift: i64,
        len: usize,
        expected: usize,
    },
}

/// One normal-ordered term `coeff * raise^m * lower^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderTerm {
    pub coeff: Complex64,
    pub raise: u32,
    pub lower: u32,
}

/// Sum of normal-ordered ladder monomials, the input form of a perturbation.
///
/// Duplicate `(raise, lower)` pairs are allowed; they are merged when the
/// expression is compiled to bands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LadderExpr {
    pub terms: Vec<LadderTerm>,
}

impl LadderExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coeff: Complex64, raise: u32, lower: u32) {
        self.terms.push(LadderTerm {
            coeff,
            raise,
            lower,
        });
    }

    pub fn from_terms(terms: &[(Complex64, u32, u32)]) -> Self {
        let mut e = Self::new();
        for &(coeff, m, n) in terms {
            e.push(coeff, m, n);
        }
        e
    }

    /// Largest ladder reach `max(raise, lower)` over all terms; zero for the
    /// empty expression.
    pub fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.raise.max(t.lower) as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Range of column indices `k` for which `<k+s|A|k>` exists inside a
/// `dim x dim` square: `max(0,-s) <= k <= min(dim-1, dim-1-s)`.
fn col_start(s: i64) -> usize {
    (-s).max(0) as usize
}

fn band_len(dim: usize, s: i64) -> usize {
    dim - s.unsigned_abs() as usize
}

/// Operator stored as bands: shift `s` maps to the amplitudes
/// `d_s[k] = <k+s|A|k>`, kept as a dense slice over the valid `k` range.
#[derive(Debug, Clone, PartialEq)]
pub struct BandOperator {
    basis: Arc<BasisSpec>,
    bands: BTreeMap<i64, Vec<Complex64>>,
}

impl BandOperator {
    /// The zero operator (no bands).
    pub fn zero(basis: &Arc<BasisSpec>) -> Self {
        BandOperator {
            basis: Arc::clone(basis),
            bands: BTreeMap::new(),
        }
    }

    /// The identity operator.
    pub fn identity(basis: &Arc<BasisSpec>) -> Self {
        Self::diagonal(basis, vec![Complex64::new(1.0, 0.0); basis.dim()])
            .expect("length matches dim")
    }

    /// Diagonal operator from explicit entries.
    pub fn diagonal(basis: &Arc<BasisSpec>, entries: Vec<Complex64>) -> Result<Self, OperatorError> {
        if entries.len() != basis.dim() {
            return Err(OperatorError::BandShape {
                shift: 0,
                len: entries.len(),
                expected: basis.dim(),
            });
        }
        let mut op = Self::zero(basis);
        op.insert_band(0, entries);
        Ok(op)
    }

    /// The unperturbed Hamiltonian: diagonal of the basis energies.
    pub fn h0(basis: &Arc<BasisSpec>) -> Self {
        let entries = basis.eps0().iter().map(|&e| Complex64::new(e, 0.0)).collect();
        Self::diagonal(basis, entries).expect("length matches dim")
    }

    /// Build an operator from raw bands, validating each band's length.
    pub fn from_bands(
        basis: &Arc<BasisSpec>,
        bands: BTreeMap<i64, Vec<Complex64>>,
    ) -> Result<Self, OperatorError> {
        let dim = basis.dim() as i64;
        let mut op = Self::zero(basis);
        for (s, d) in bands {
            if s <= -dim || s >= dim {
                return Err(OperatorError::BandShape {
                    shift: s,
                    len: d.len(),
                    expected: 0,
                });
            }
            let expected = band_len(basis.dim(), s);
            if d.len() != expected {
                return Err(OperatorError::BandShape {
                    shift: s,
                    len: d.len(),
                    expected,
                });
            }
            op.insert_band(s, d);
        }
        Ok(op)
    }

    /// The normal-ordered monomial `raise^m * lower^n`: a single band at shift
    /// `m - n` whose amplitude at column `k` is the product of the ladder
    /// coefficients along the chain `|k> -> |k-n> -> |k-n+m>`, with the
    /// implicit zero coefficients outside the basis killing out-of-range
    /// chains.
    pub fn monomial(basis: &Arc<BasisSpec>, m: u32, n: u32) -> Self {
        let dim = basis.dim();
        let s = m as i64 - n as i64;
        let mut op = Self::zero(basis);
        if s.unsigned_abs() as usize >= dim {
            return op;
        }
        let start = col_start(s);
        let len = band_len(dim, s);
        let mut d = vec![ZERO; len];
        for (i, slot) in d.iter_mut().enumerate() {
            let k = (start + i) as i64;
            let mut amp = Complex64::new(1.0, 0.0);
            for j in 1..=n as i64 {
                amp *= basis.c_at(k - j).conj();
            }
            for i in 0..m as i64 {
                amp *= basis.c_at(k - n as i64 + i);
            }
            *slot = amp;
        }
        op.insert_band(s, d);
        op
    }

    /// Compile a ladder expression to bands, merging duplicate monomials first.
    pub fn compile(basis: &Arc<BasisSpec>, expr: &LadderExpr) -> Self {
        let mut merged: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        for t in &expr.terms {
            *merged.entry((t.raise, t.lower)).or_insert(ZERO) += t.coeff;
        }
        let mut out = Self::zero(basis);
        for ((m, n), coeff) in merged {
            let term = Self::monomial(basis, m, n).scale(coeff);
            out = out.add(&term).expect("same basis");
        }
        out
    }

    fn insert_band(&mut self, s: i64, d: Vec<Complex64>) {
        if d.iter().any(|&z| z != ZERO) {
            self.bands.insert(s, d);
        }
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.bands.is_empty()
    }

    /// Stored band shifts, ascending.
    pub fn shifts(&self) -> Vec<i64> {
        self.bands.keys().copied().collect()
    }

    /// Iterate over stored bands as `(shift, amplitudes)`.
    pub fn bands(&self) -> impl Iterator<Item = (i64, &[Complex64])> {
        self.bands.iter().map(|(&s, d)| (s, d.as_slice()))
    }

    /// Matrix element `<k+s|A|k>`; zero for unstored bands or out-of-range `k`.
    pub fn entry(&self, s: i64, k: usize) -> Complex64 {
        match self.bands.get(&s) {
            None => ZERO,
            Some(d) => {
                let start = col_start(s);
                if k < start || k - start >= d.len() {
                    ZERO
                } else {
                    d[k - start]
                }
            }
        }
    }

    fn check_same_basis(&self, other: &Self) -> Result<(), OperatorError> {
        if self.basis == other.basis {
            Ok(())
        } else {
            Err(OperatorError::BasisMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_same_basis(other)?;
        let mut out = Self::zero(&self.basis);
        let shifts: Vec<i64> = self
            .bands
            .keys()
            .chain(other.bands.keys())
            .copied()
            .collect();
        for s in shifts {
            if out.bands.contains_key(&s) {
                continue;
            }
            let len = band_len(self.dim(), s);
            let start = col_start(s);
            let d: Vec<Complex64> = (0..len)
                .map(|i| self.entry(s, start + i) + other.entry(s, start + i))
                .collect();
            out.insert_band(s, d);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = Self::zero(&self.basis);
        for (&s, d) in &self.bands {
            out.insert_band(s, d.iter().map(|&z| factor * z).collect());
        }
        out
    }

    /// Operator product. Band shifts add; each output amplitude sums over the
    /// compatible splits `d_a[k + s_b] * d_b[k]`. Agrees with the dense matrix
    /// product.
    pub fn mul(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_same_basis(other)?;
        let dim = self.dim() as i64;
        let mut acc: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
        for (&sa, da) in &self.bands {
            for (&sb, db) in &other.bands {
                let s = sa + sb;
                if s <= -dim || s >= dim {
                    continue;
                }
                let start = col_start(s);
                let len = band_len(self.dim(), s);
                let d = acc.entry(s).or_insert_with(|| vec![ZERO; len]);
                // k must be a valid column for B's band and k+sb for A's.
                let b_start = col_start(sb);
                let a_start = col_start(sa);
                let k_lo = start
                    .max(b_start)
                    .max((a_start as i64 - sb).max(0) as usize);
                let k_hi_excl = (start + len)
                    .min(b_start + db.len())
                    .min(((a_start + da.len()) as i64 - sb).max(0) as usize);
                for k in k_lo..k_hi_excl {
                    let a_idx = (k as i64 + sb - a_start as i64) as usize;
                    d[k - start] += da[a_idx] * db[k - b_start];
                }
            }
        }
        let mut out = Self::zero(&self.basis);
        for (s, d) in acc {
            out.insert_band(s, d);
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, OperatorError> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Hermitian adjoint: band `s` maps to band `-s` with conjugated entries.
    /// An exact involution.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(&self.basis);
        for (&s, d) in &self.bands {
            // <k+s|A|k> becomes the entry at column k+s of band -s; the
            // stored slice order is unchanged.
            out.insert_band(-s, d.iter().map(|z| z.conj()).collect());
        }
        out
    }

    /// Apply to a ket: `out[k+s] += d_s[k] * amps[k]` over stored bands.
    pub fn apply(&self, ket: &Ket) -> Result<Ket, OperatorError> {
        if self.basis != ket.basis {
            return Err(OperatorError::BasisMismatch);
        }
        let mut amps = vec![ZERO; self.dim()];
        for (&s, d) in &self.bands {
            let start = col_start(s);
            for (i, &v) in d.iter().enumerate() {
                let k = start + i;
                let j = (k as i64 + s) as usize;
                amps[j] += v * ket.amps[k];
            }
        }
        Ok(Ket {
            basis: Arc::clone(&self.basis),
            amps,
        })
    }

    /// Diagonal matrix element `<n|A|n>`.
    pub fn expectation(&self, n: usize) -> Result<Complex64, OperatorError> {
        if n >= self.dim() {
            return Err(OperatorError::IndexOutOfRange {
                index: n,
                dim: self.dim(),
            });
        }
        Ok(self.entry(0, n))
    }

    /// Split into the parallel part (shift-zero band) and the orthogonal part
    /// (every other band). The two parts share no band and re-add exactly.
    pub fn split(&self) -> (Self, Self) {
        let mut par = Self::zero(&self.basis);
        let mut perp = Self::zero(&self.basis);
        for (&s, d) in &self.bands {
            if s == 0 {
                par.insert_band(s, d.clone());
            } else {
                perp.insert_band(s, d.clone());
            }
        }
        (par, perp)
    }

    /// Restriction to the trusted square: entries with both row and column
    /// below `limit`; everything else dropped.
    pub fn restrict(&self, limit: usize) -> Self {
        let mut out = Self::zero(&self.basis);
        for (&s, d) in &self.bands {
            let start = col_start(s);
            let kept: Vec<Complex64> = d
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let k = start + i;
                    let row = (k as i64 + s) as usize;
                    if k < limit && row < limit {
                        v
                    } else {
                        ZERO
                    }
                })
                .collect();
            out.insert_band(s, kept);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.bands
            .values()
            .flat_map(|d| d.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.bands
            .values()
            .flat_map(|d| d.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Map every stored entry through `f(shift, column, value)`, pruning bands
    /// that come out exactly zero.
    pub(crate) fn map_entries<F>(&self, mut f: F) -> Self
    where
        F: FnMut(i64, usize, Complex64) -> Complex64,
    {
        let mut out = Self::zero(&self.basis);
        for (&s, d) in &self.bands {
            let start = col_start(s);
            let mapped: Vec<Complex64> = d
                .iter()
                .enumerate()
                .map(|(i, &v)| f(s, start + i, v))
                .collect();
            out.insert_band(s, mapped);
        }
        out
    }
}

/// State vector over the truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    basis: Arc<BasisSpec>,
    amps: Vec<Complex64>,
}

impl Ket {
    /// The basis ket `|n>`.
    pub fn basis_state(basis: &Arc<BasisSpec>, n: usize) -> Result<Self, OperatorError> {
        if n >= basis.dim() {
            return Err(OperatorError::IndexOutOfRange {
                index: n,
                dim: basis.dim(),
            });
        }
        let mut amps = vec![ZERO; basis.dim()];
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(Ket {
            basis: Arc::clone(basis),
            amps,
        })
    }

    pub fn from_amps(basis: &Arc<BasisSpec>, amps: Vec<Complex64>) -> Result<Self, OperatorError> {
        if amps.len() != basis.dim() {
            return Err(OperatorError::IndexOutOfRange {
                index: amps.len(),
                dim: basis.dim(),
            });
        }
        Ok(Ket {
            basis: Arc::clone(basis),
            amps,
        })
    }

    pub fn zero_ket(basis: &Arc<BasisSpec>) -> Self {
        Ket {
            basis: Arc::clone(basis),
            amps: vec![ZERO; basis.dim()],
        }
    }

    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        if self.basis != other.basis {
            return Err(OperatorError::BasisMismatch);
        }
        let amps = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Ket {
            basis: Arc::clone(&self.basis),
            amps,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Ket {
            basis: Arc::clone(&self.basis),
            amps: self.amps.iter().map(|&z| factor * z).collect(),
        }
    }
}
