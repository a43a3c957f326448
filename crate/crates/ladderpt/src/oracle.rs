//! Independent dense-matrix verification route.
//!
//! Everything here deliberately works in the explicit matrix representation
//! that the banded algebra avoids: densified operators, a cyclic-Jacobi
//! Hermitian eigensolver, the textbook second-order sums, and the
//! transformed-Hamiltonian reference built from a dense matrix exponential.
//! These are the adversarial cross-checks for the band implementation.

use crate::band::BandOperator;
use crate::basis::BasisSpec;
use num_complex::Complex64;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("spectrum is not strictly monotone; second-order sums are undefined")]
    Degenerate,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        DenseMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| factor * z).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from conjugate symmetry.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for i in 0..self.dim {
            for j in 0..=i {
                defect = defect.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        defect
    }

    pub fn apply(&self, vec: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(vec.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * vec[j]).sum())
            .collect()
    }
}

/// Expand a banded operator to its dense matrix: `entry(k+s, k) = d_s[k]`.
pub fn densify(op: &BandOperator) -> DenseMatrix {
    let dim = op.dim();
    let mut m = DenseMatrix::zeros(dim);
    for (s, d) in op.bands() {
        let start = (-s).max(0) as usize;
        for (i, &v) in d.iter().enumerate() {
            let k = start + i;
            m.set((k as i64 + s) as usize, k, v);
        }
    }
    m
}

/// Eigenvalues of a Hermitian matrix, sorted ascending.
///
/// The complex Hermitian problem is embedded as a real symmetric one of twice
/// the size (`[[X, -Y], [Y, X]]` for `H = X + iY`), solved by cyclic Jacobi
/// rotations, and the doubled spectrum is collapsed back.
pub fn exact_spectrum(h: &DenseMatrix) -> Result<Vec<f64>, OracleError> {
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    let tol = 1e-10 * scale;
    if defect > tol {
        return Err(OracleError::NotHermitian { defect, tol });
    }
    let n = h.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[i * m + (j + n)] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    let eigs = jacobi_eigenvalues(&mut a, m);
    // Every eigenvalue of the embedding appears twice.
    let mut sorted = eigs;
    sorted.sort_by(f64::total_cmp);
    Ok(sorted.into_iter().step_by(2).collect())
}

/// Cyclic Jacobi sweeps on a real symmetric matrix stored row-major in `a`.
fn jacobi_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = 1e-300f64.max(norm * 1e-15);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= threshold / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Textbook first- and second-order corrections per level, summed from the
/// dense form of the perturbation:
///
/// ```text
/// E1_n = Re <n|V|n>
/// E2_n = sum_{k != n} |<k|V|n>|^2 / (eps0_n - eps0_k)
/// ```
pub fn rspt2(basis: &BasisSpec, v: &BandOperator) -> Result<Vec<(f64, f64)>, OracleError> {
    if !basis.strictly_monotone() {
        return Err(OracleError::Degenerate);
    }
    if basis.dim() != v.dim() {
        return Err(OracleError::DimensionMismatch {
            left: basis.dim(),
            right: v.dim(),
        });
    }
    let dense = densify(v);
    let eps = basis.eps0();
    let dim = basis.dim();
    let mut out = Vec::with_capacity(dim);
    for n in 0..dim {
        let e1 = dense.get(n, n).re;
        let mut e2 = 0.0;
        for k in 0..dim {
            if k != n {
                e2 += dense.get(k, n).norm_sqr() / (eps[n] - eps[k]);
            }
        }
        out.push((e1, e2));
    }
    Ok(out)
}

/// Dense matrix exponential by scaling and squaring with a Taylor expansion
/// of at most `terms` terms on the scaled matrix.
pub fn expm(g: &DenseMatrix, terms: usize) -> DenseMatrix {
    let norm = g.frobenius_norm();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = g.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut acc = DenseMatrix::identity(g.dim());
    let mut term = DenseMatrix::identity(g.dim());
    for j in 1..=terms.max(1) {
        term = term.mul(&scaled).scale(Complex64::new(1.0 / j as f64, 0.0));
        acc = acc.add(&term);
        if term.frobenius_norm() < 1e-18 * acc.frobenius_norm().max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        acc = acc.mul(&acc);
    }
    acc
}

/// Dense reference for the transformed Hamiltonian:
/// `exp(G) (H0 + lambda V) exp(-G) - H0`.
pub fn bch_reference(
    h0: &DenseMatrix,
    v: &DenseMatrix,
    g: &DenseMatrix,
    lambda: f64,
    terms: usize,
) -> DenseMatrix {
    let h = h0.add(&v.scale(Complex64::new(lambda, 0.0)));
    let exp_g = expm(g, terms);
    let exp_neg_g = expm(&g.scale(Complex64::new(-1.0, 0.0)), terms);
    exp_g.mul(&h).mul(&exp_neg_g).sub(h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::LadderExpr;
    use std::sync::Arc;

    fn z(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bosonic(dim: usize) -> Arc<BasisSpec> {
        Arc::new(BasisSpec::bosonic(dim, 1.0, (dim - 2).max(1)).unwrap())
    }

    #[test]
    fn densify_examples() {
        let b = bosonic(4);
        let id = densify(&BandOperator::identity(&b));
        assert_eq!(id, DenseMatrix::identity(4));
        let up = densify(&BandOperator::monomial(&b, 1, 0));
        assert_eq!(up.get(1, 0), z(1.0));
        assert_eq!(up.get(2, 1), z(2.0f64.sqrt()));
        assert_eq!(up.get(3, 2), z(3.0f64.sqrt()));
        assert_eq!(up.get(0, 1), z(0.0));
        assert_eq!(densify(&BandOperator::zero(&b)), DenseMatrix::zeros(4));
    }

    #[test]
    fn spectrum_of_diagonal_is_exact() {
        let b = bosonic(4);
        let h0 = densify(&BandOperator::h0(&b));
        let eigs = exact_spectrum(&h0).unwrap();
        assert_eq!(eigs, vec![0.5, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn spectrum_of_flip() {
        let mut m = DenseMatrix::zeros(2);
        m.set(0, 1, z(1.0));
        m.set(1, 0, z(1.0));
        let eigs = exact_spectrum(&m).unwrap();
        assert!((eigs[0] + 1.0).abs() <= 1e-12);
        assert!((eigs[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spectrum_rejects_non_hermitian() {
        let mut m = DenseMatrix::zeros(2);
        m.set(0, 1, z(1.0));
        assert!(matches!(
            exact_spectrum(&m),
            Err(OracleError::NotHermitian { .. })
        ));
    }

    #[test]
    fn stark_ground_state_energy() {
        let b = bosonic(64);
        let c = z(-1.0 / 2.0f64.sqrt());
        let v = BandOperator::compile(&b, &LadderExpr::from_terms(&[(c, 1, 0), (c, 0, 1)]));
        let h = densify(&BandOperator::h0(&b)).add(&densify(&v).scale(z(0.1)));
        let eigs = exact_spectrum(&h).unwrap();
        assert!((eigs[0] - 0.495).abs() <= 1e-7, "ground {}", eigs[0]);
    }

    #[test]
    fn complex_hermitian_spectrum() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let mut m = DenseMatrix::zeros(2);
        m.set(0, 0, z(1.0));
        m.set(1, 1, z(1.0));
        m.set(0, 1, Complex64::new(0.0, 1.0));
        m.set(1, 0, Complex64::new(0.0, -1.0));
        let eigs = exact_spectrum(&m).unwrap();
        assert!(eigs[0].abs() <= 1e-12);
        assert!((eigs[1] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn rspt2_diagonal_perturbation() {
        let b = bosonic(6);
        let v = BandOperator::monomial(&b, 1, 1);
        let rows = rspt2(&b, &v).unwrap();
        for (n, &(e1, e2)) in rows.iter().enumerate() {
            assert!((e1 - n as f64).abs() <= 1e-14);
            assert_eq!(e2, 0.0);
        }
    }

    #[test]
    fn rspt2_stark_interior() {
        let b = bosonic(32);
        let c = z(-1.0 / 2.0f64.sqrt());
        let v = BandOperator::compile(&b, &LadderExpr::from_terms(&[(c, 1, 0), (c, 0, 1)]));
        let rows = rspt2(&b, &v).unwrap();
        for (n, &(e1, e2)) in rows.iter().enumerate().take(30).skip(1) {
            assert!(e1.abs() <= 1e-15);
            assert!((e2 + 0.5).abs() <= 1e-12, "level {n}: {e2}");
        }
    }

    #[test]
    fn rspt2_two_photon_ground() {
        let b = bosonic(8);
        let v = BandOperator::compile(
            &b,
            &LadderExpr::from_terms(&[(z(1.0), 2, 0), (z(1.0), 0, 2)]),
        );
        let rows = rspt2(&b, &v).unwrap();
        // Single path |0> -> |2>: |sqrt(2)|^2 / (0.5 - 2.5) = -1.
        assert_eq!(rows[0].0, 0.0);
        assert!((rows[0].1 + 1.0).abs() <= 1e-14);
    }

    #[test]
    fn rspt2_rejects_degenerate() {
        let eps = vec![0.0, 0.0, 1.0];
        let c = vec![z(1.0), z(1.0), z(0.0)];
        let basis = BasisSpec::new(eps, c, 3, 1e-9).unwrap();
        let arc = Arc::new(basis.clone());
        let v = BandOperator::monomial(&arc, 1, 0);
        assert_eq!(rspt2(&basis, &v).unwrap_err(), OracleError::Degenerate);
    }

    #[test]
    fn bch_reference_limits() {
        let b = bosonic(6);
        let h0 = densify(&BandOperator::h0(&b));
        let v = densify(&BandOperator::monomial(&b, 1, 1));
        let zero = DenseMatrix::zeros(6);
        // G = 0: the reference is lambda * V.
        let w = bch_reference(&h0, &v, &zero, 0.3, 20);
        assert!(w.sub(&v.scale(z(0.3))).frobenius_norm() <= 1e-12);
        // lambda = 0 and G antihermitian: exp(G) H0 exp(-G) - H0 is a
        // similarity transform of H0 minus itself; with G = 0 it vanishes.
        let w0 = bch_reference(&h0, &v, &zero, 0.0, 20);
        assert!(w0.frobenius_norm() <= 1e-12);
    }

    #[test]
    fn expm_unitary_for_antihermitian() {
        let b = bosonic(8);
        let up = densify(&BandOperator::monomial(&b, 1, 0));
        let g = up.sub(&up.adjoint()).scale(z(0.7));
        let u = expm(&g, 64);
        let residual = u.mul(&u.adjoint()).sub(&DenseMatrix::identity(8));
        assert!(residual.frobenius_norm() <= 1e-12);
    }

    #[test]
    fn densify_is_multiplicative() {
        let b = bosonic(8);
        let x = BandOperator::compile(
            &b,
            &LadderExpr::from_terms(&[(z(0.5), 2, 1), (Complex64::new(0.0, 1.0), 0, 1)]),
        );
        let y = BandOperator::compile(
            &b,
            &LadderExpr::from_terms(&[(z(1.0), 1, 0), (z(-2.0), 1, 2)]),
        );
        let lhs = densify(&x.mul(&y).unwrap());
        let rhs = densify(&x).mul(&densify(&y));
        assert!(lhs.sub(&rhs).frobenius_norm() <= 1e-12 * rhs.frobenius_norm().max(1.0));
    }
}
