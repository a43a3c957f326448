//! Order-by-order solve for the effective-Hamiltonian corrections.
//!
//! At each order `n` the source operator `A_n` is assembled from the bracket
//! diagrams (nested commutators of the already-solved generators with `V` or
//! `H0`). The correction and generator follow from the superoperators:
//!
//! ```text
//! W_n = pi(A_n)
//! G_n = gamma_inv(A_n - W_n)
//! ```
//!
//! so `W_n` commutes with `H0` (its diagonal carries the order-`n` energy
//! corrections) and `G_n` is the orthogonal, antihermitian generator of the
//! unitary transformation. Each order is gated by the residual of the
//! commutator equation `[H0, G_n] = A_n - W_n`, recomputed through the
//! banded product rather than the entrywise solve.

use crate::band::{BandOperator, Ket, OperatorError};
use crate::basis::BasisSpec;
use crate::diagram::{enumerate_diagrams, Diagram, DiagramError, RightSide};
use crate::superop::{self, ProjectionMode, SuperopError};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

/// Residual gate on the order-`n` commutator equation, relative to `||A_n||`.
pub const RESIDUAL_GATE: f64 = 1e-9;

/// A term of the exponential series is considered converged once its norm
/// falls below this threshold.
pub const EXP_TERM_TOL: f64 = 1e-14;

/// Imaginary residue allowed on a diagonal correction, relative to the
/// largest entry of the order's correction operator.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("order must be at least 1")]
    InvalidOrder,
    #[error("diagram references generator {referenced} but only {solved} are solved")]
    MissingGenerator { referenced: u32, solved: usize },
    #[error(
        "order {order} residual {residual:.3e} exceeds {bound:.3e}; \
         truncation bandwidth exhausted, increase the basis dimension"
    )]
    ResidualTooLarge {
        order: usize,
        residual: f64,
        bound: f64,
    },
    #[error(
        "diagonal correction at level {level}, order {order} has imaginary residue {imag:.3e}"
    )]
    NonRealCorrection {
        level: usize,
        order: usize,
        imag: f64,
    },
    #[error("exponential series did not converge within {terms} terms (last term norm {last:.3e})")]
    ExponentialNotConverged { terms: usize, last: f64 },
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Superop(#[from] SuperopError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Operators available when evaluating diagrams at one order: the data of the
/// problem plus the generators solved so far (`generators[i]` is `G_(i+1)`).
pub struct DiagramContext<'a> {
    pub h0: &'a BandOperator,
    pub v: &'a BandOperator,
    pub generators: &'a [BandOperator],
}

/// Evaluate one diagram: the weighted nested commutator
/// `(1/k!) [G_{i1}, [..., [G_{ik}, X]...]]` with `X` chosen by the right side.
pub fn evaluate_diagram(
    diagram: &Diagram,
    ctx: &DiagramContext<'_>,
) -> Result<BandOperator, EngineError> {
    let mut acc = match diagram.right() {
        RightSide::V => ctx.v.clone(),
        RightSide::H0 => ctx.h0.clone(),
    };
    for &idx in diagram.left().iter().rev() {
        let g = ctx
            .generators
            .get(idx as usize - 1)
            .ok_or(EngineError::MissingGenerator {
                referenced: idx,
                solved: ctx.generators.len(),
            })?;
        acc = g.commutator(&acc)?;
    }
    Ok(acc.scale(Complex64::new(diagram.weight(), 0.0)))
}

/// Sum of all diagrams of order `n`.
pub fn assemble_order(n: usize, ctx: &DiagramContext<'_>) -> Result<BandOperator, EngineError> {
    if n == 0 {
        return Err(EngineError::InvalidOrder);
    }
    let mut acc = BandOperator::zero(ctx.v.basis());
    for diagram in enumerate_diagrams(n)? {
        acc = acc.add(&evaluate_diagram(&diagram, ctx)?)?;
    }
    Ok(acc)
}

/// One solved order.
struct OrderSolution {
    a: BandOperator,
    w: BandOperator,
    g: BandOperator,
    residual: f64,
}

/// Solve order `n` given the generators of orders `1..n`.
fn solve_order(
    n: usize,
    h0: &BandOperator,
    v: &BandOperator,
    generators: &[BandOperator],
    mode: ProjectionMode,
) -> Result<OrderSolution, EngineError> {
    let ctx = DiagramContext {
        h0,
        v,
        generators,
    };
    let a = assemble_order(n, &ctx)?;
    let w = superop::pi(&a, mode);
    let orthogonal = a.sub(&w)?;
    let g = superop::gamma_inv(&orthogonal, mode)?;

    // Gate on the commutator equation, rebuilt through the banded product.
    let residual = h0.commutator(&g)?.sub(&orthogonal)?.frobenius_norm();
    let bound = RESIDUAL_GATE * a.frobenius_norm();
    if residual > bound {
        return Err(EngineError::ResidualTooLarge {
            order: n,
            residual,
            bound,
        });
    }
    Ok(OrderSolution { a, w, g, residual })
}

/// Per-order corrections, generators, and the energy-correction table.
#[derive(Debug, Clone)]
pub struct PerturbationResult {
    basis: Arc<BasisSpec>,
    mode: ProjectionMode,
    order: usize,
    a_ops: Vec<BandOperator>,
    w_ops: Vec<BandOperator>,
    g_ops: Vec<BandOperator>,
    /// `energy_table[n][k-1]` is the order-`k` correction to level `n`.
    energy_table: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

/// Run the order-by-order solve up to `order` for the perturbation `v`.
pub fn run(
    basis: &Arc<BasisSpec>,
    v: &BandOperator,
    order: usize,
    mode: ProjectionMode,
) -> Result<PerturbationResult, EngineError> {
    if order == 0 {
        return Err(EngineError::InvalidOrder);
    }
    let h0 = BandOperator::h0(basis);
    let mut a_ops = Vec::with_capacity(order);
    let mut w_ops = Vec::with_capacity(order);
    let mut g_ops = Vec::with_capacity(order);
    let mut residuals = Vec::with_capacity(order);
    for n in 1..=order {
        let sol = solve_order(n, &h0, v, &g_ops, mode)?;
        a_ops.push(sol.a);
        w_ops.push(sol.w);
        g_ops.push(sol.g);
        residuals.push(sol.residual);
    }

    let mut energy_table = vec![Vec::with_capacity(order); basis.dim()];
    for (k, w) in w_ops.iter().enumerate() {
        let scale = w.max_abs().max(1.0);
        for n in 0..basis.dim() {
            let value = w.expectation(n)?;
            if value.im.abs() > IMAG_RESIDUE_TOL * scale {
                return Err(EngineError::NonRealCorrection {
                    level: n,
                    order: k + 1,
                    imag: value.im,
                });
            }
            energy_table[n].push(value.re);
        }
    }

    Ok(PerturbationResult {
        basis: Arc::clone(basis),
        mode,
        order,
        a_ops,
        w_ops,
        g_ops,
        energy_table,
        residuals,
    })
}

impl PerturbationResult {
    pub fn basis(&self) -> &Arc<BasisSpec> {
        &self.basis
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Source operator `A_k` (`k` is 1-based).
    pub fn a_op(&self, k: usize) -> &BandOperator {
        &self.a_ops[k - 1]
    }

    /// Correction operator `W_k`.
    pub fn w_op(&self, k: usize) -> &BandOperator {
        &self.w_ops[k - 1]
    }

    /// Generator `G_k`.
    pub fn g_op(&self, k: usize) -> &BandOperator {
        &self.g_ops[k - 1]
    }

    /// Residual norm of the order-`k` commutator equation.
    pub fn residual(&self, k: usize) -> f64 {
        self.residuals[k - 1]
    }

    /// Order-`k` correction to level `n`.
    pub fn correction(&self, n: usize, k: usize) -> f64 {
        self.energy_table[n][k - 1]
    }

    pub fn energy_table(&self) -> &[Vec<f64>] {
        &self.energy_table
    }

    /// Energy series at coupling `lambda` for any level, trusted or not.
    pub fn series_energy(&self, n: usize, lambda: f64) -> f64 {
        let mut e = self.basis.eps0()[n];
        let mut pow = 1.0;
        for k in 0..self.order {
            pow *= lambda;
            e += pow * self.energy_table[n][k];
        }
        e
    }

    /// Perturbed energy of a trusted level.
    pub fn energy(&self, n: usize, lambda: f64) -> Result<f64, EngineError> {
        if n >= self.basis.trust() {
            return Err(EngineError::Operator(OperatorError::IndexOutOfRange {
                index: n,
                dim: self.basis.trust(),
            }));
        }
        Ok(self.series_energy(n, lambda))
    }

    /// Generator series `G(lambda) = sum_k lambda^k G_k`.
    pub fn generator(&self, lambda: f64) -> BandOperator {
        let mut g = BandOperator::zero(&self.basis);
        let mut pow = 1.0;
        for gk in &self.g_ops {
            pow *= lambda;
            g = g
                .add(&gk.scale(Complex64::new(pow, 0.0)))
                .expect("same basis");
        }
        g
    }

    /// Correction series `W(lambda) = sum_k lambda^k W_k`.
    pub fn correction_operator(&self, lambda: f64) -> BandOperator {
        let mut w = BandOperator::zero(&self.basis);
        let mut pow = 1.0;
        for wk in &self.w_ops {
            pow *= lambda;
            w = w
                .add(&wk.scale(Complex64::new(pow, 0.0)))
                .expect("same basis");
        }
        w
    }

    /// Perturbed eigenket `exp(-G(lambda)) |n>`, evaluated by applying the
    /// exponential's series to the ket. Stops once a term's norm drops below
    /// [`EXP_TERM_TOL`]; fails if that does not happen within `max_terms`.
    pub fn eigenket(&self, n: usize, lambda: f64, max_terms: usize) -> Result<Ket, EngineError> {
        if n >= self.basis.trust() {
            return Err(EngineError::Operator(OperatorError::IndexOutOfRange {
                index: n,
                dim: self.basis.trust(),
            }));
        }
        let minus_g = self.generator(lambda).scale(Complex64::new(-1.0, 0.0));
        let mut term = Ket::basis_state(&self.basis, n)?;
        let mut acc = term.clone();
        let mut last = term.norm();
        for j in 1..=max_terms {
            term = minus_g
                .apply(&term)?
                .scale(Complex64::new(1.0 / j as f64, 0.0));
            acc = acc.add(&term)?;
            last = term.norm();
            if last < EXP_TERM_TOL {
                return Ok(acc);
            }
        }
        if last < EXP_TERM_TOL {
            Ok(acc)
        } else {
            Err(EngineError::ExponentialNotConverged {
                terms: max_terms,
                last,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::LadderExpr;

    fn z(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn stark_basis(dim: usize, trust: usize) -> Arc<BasisSpec> {
        Arc::new(BasisSpec::bosonic(dim, 1.0, trust).unwrap())
    }

    /// The linear perturbation `-(raise + lower)/sqrt(2)`.
    fn stark_v(basis: &Arc<BasisSpec>) -> BandOperator {
        let c = z(-1.0 / 2.0f64.sqrt());
        BandOperator::compile(basis, &LadderExpr::from_terms(&[(c, 1, 0), (c, 0, 1)]))
    }

    #[test]
    fn evaluate_plain_v() {
        let b = stark_basis(8, 6);
        let v = stark_v(&b);
        let h0 = BandOperator::h0(&b);
        let ctx = DiagramContext {
            h0: &h0,
            v: &v,
            generators: &[],
        };
        let d = enumerate_diagrams(1).unwrap().remove(0);
        assert_eq!(evaluate_diagram(&d, &ctx).unwrap(), v);
    }

    #[test]
    fn evaluate_reports_missing_generator() {
        let b = stark_basis(8, 6);
        let v = stark_v(&b);
        let h0 = BandOperator::h0(&b);
        let ctx = DiagramContext {
            h0: &h0,
            v: &v,
            generators: &[],
        };
        let d = Diagram::new(vec![1], RightSide::V).unwrap();
        assert_eq!(
            evaluate_diagram(&d, &ctx).unwrap_err(),
            EngineError::MissingGenerator {
                referenced: 1,
                solved: 0
            }
        );
    }

    #[test]
    fn nested_diagram_weights() {
        let b = stark_basis(10, 8);
        let v = stark_v(&b);
        let h0 = BandOperator::h0(&b);
        let g1 = superop::gamma_inv(&v, ProjectionMode::Strict).unwrap();
        let gens = vec![g1.clone()];
        let ctx = DiagramContext {
            h0: &h0,
            v: &v,
            generators: &gens,
        };
        let single = Diagram::new(vec![1], RightSide::V).unwrap();
        assert_eq!(
            evaluate_diagram(&single, &ctx).unwrap(),
            g1.commutator(&v).unwrap()
        );
        let double = Diagram::new(vec![1, 1], RightSide::H0).unwrap();
        let expect = g1
            .commutator(&g1.commutator(&h0).unwrap())
            .unwrap()
            .scale(z(0.5));
        assert_eq!(evaluate_diagram(&double, &ctx).unwrap(), expect);
    }

    #[test]
    fn stark_first_order() {
        let b = stark_basis(16, 12);
        let v = stark_v(&b);
        let result = run(&b, &v, 1, ProjectionMode::Strict).unwrap();
        assert!(result.w_op(1).is_zero());
        // G1 = (lower - raise)/sqrt(2).
        let c = z(1.0 / 2.0f64.sqrt());
        let expect = BandOperator::compile(
            &b,
            &LadderExpr::from_terms(&[(c, 0, 1), (-c, 1, 0)]),
        );
        let defect = result.g_op(1).sub(&expect).unwrap().max_abs();
        assert!(defect <= 1e-14, "defect {defect}");
    }

    #[test]
    fn stark_second_order_shift() {
        let b = stark_basis(16, 12);
        let v = stark_v(&b);
        let result = run(&b, &v, 2, ProjectionMode::Strict).unwrap();
        for n in 0..b.trust() {
            assert!((result.correction(n, 1)).abs() <= 1e-14);
            assert!(
                (result.correction(n, 2) + 0.5).abs() <= 1e-12,
                "level {n}: {}",
                result.correction(n, 2)
            );
        }
    }

    #[test]
    fn diagonal_perturbation_is_first_order_exact() {
        let b = stark_basis(8, 6);
        let v = BandOperator::compile(&b, &LadderExpr::from_terms(&[(z(1.0), 1, 1)]));
        let result = run(&b, &v, 3, ProjectionMode::Strict).unwrap();
        assert_eq!(result.w_op(1), &v);
        assert!(result.g_op(1).is_zero());
        assert!(result.w_op(2).is_zero());
        assert!(result.w_op(3).is_zero());
        // Exactly solvable: eps(lambda) = eps0 + lambda * n.
        assert_eq!(result.energy(2, 0.5).unwrap(), 2.5 + 0.5 * 2.0);
    }

    #[test]
    fn first_order_column_is_diagonal_of_v() {
        let b = stark_basis(8, 6);
        let v = BandOperator::compile(
            &b,
            &LadderExpr::from_terms(&[(z(0.3), 1, 1), (z(1.0), 2, 0), (z(1.0), 0, 2)]),
        );
        let result = run(&b, &v, 1, ProjectionMode::Strict).unwrap();
        for n in 0..b.dim() {
            assert_eq!(
                result.correction(n, 1),
                v.expectation(n).unwrap().re,
                "level {n}"
            );
        }
    }

    #[test]
    fn energy_at_zero_coupling_is_unperturbed() {
        let b = stark_basis(8, 6);
        let v = stark_v(&b);
        let result = run(&b, &v, 4, ProjectionMode::Strict).unwrap();
        for n in 0..b.trust() {
            assert_eq!(result.energy(n, 0.0).unwrap(), b.eps0()[n]);
        }
        assert!(result.energy(7, 0.0).is_err());
    }

    #[test]
    fn stark_energy_matches_completed_square() {
        let b = stark_basis(64, 56);
        let v = stark_v(&b);
        let result = run(&b, &v, 4, ProjectionMode::Strict).unwrap();
        let e = result.energy(0, 0.1).unwrap();
        assert!((e - 0.495).abs() <= 1e-9, "energy {e}");
    }

    #[test]
    fn eigenket_identity_at_zero_coupling() {
        let b = stark_basis(16, 12);
        let v = stark_v(&b);
        let result = run(&b, &v, 2, ProjectionMode::Strict).unwrap();
        let ket = result.eigenket(1, 0.0, 32).unwrap();
        assert_eq!(ket, Ket::basis_state(&b, 1).unwrap());
    }

    #[test]
    fn stark_eigenket_residual() {
        let b = stark_basis(64, 56);
        let v = stark_v(&b);
        let lambda = 0.1;
        let result = run(&b, &v, 2, ProjectionMode::Strict).unwrap();
        let ket = result.eigenket(0, lambda, 128).unwrap();
        assert!((ket.norm() - 1.0).abs() <= 1e-8);
        let h = BandOperator::h0(&b)
            .add(&v.scale(z(lambda)))
            .unwrap();
        let e = result.energy(0, lambda).unwrap();
        let residual = h
            .apply(&ket)
            .unwrap()
            .sub(&ket.scale(z(e)))
            .unwrap()
            .norm();
        assert!(residual <= 1e-6, "residual {residual}");
    }

    #[test]
    fn eigenket_requires_convergence_budget() {
        let b = stark_basis(32, 24);
        let v = stark_v(&b);
        let result = run(&b, &v, 2, ProjectionMode::Strict).unwrap();
        let err = result.eigenket(0, 0.9, 2).unwrap_err();
        assert!(matches!(err, EngineError::ExponentialNotConverged { terms: 2, .. }));
    }

    #[test]
    fn run_rejects_order_zero() {
        let b = stark_basis(8, 6);
        let v = stark_v(&b);
        assert_eq!(
            run(&b, &v, 0, ProjectionMode::Strict).unwrap_err(),
            EngineError::InvalidOrder
        );
    }

    #[test]
    fn strict_mode_on_degenerate_coupling_fails() {
        let eps = vec![0.0, 0.0, 1.0, 2.0];
        let c = vec![z(1.0), z(1.0), z(1.0), z(0.0)];
        let tol = BasisSpec::default_tol_deg(&eps);
        let basis = Arc::new(BasisSpec::new(eps, c, 4, tol).unwrap());
        let v = BandOperator::compile(
            &basis,
            &LadderExpr::from_terms(&[(z(1.0), 1, 0), (z(1.0), 0, 1)]),
        );
        let err = run(&basis, &v, 1, ProjectionMode::Strict).unwrap_err();
        assert!(matches!(
            err,
            EngineError::Superop(SuperopError::DegenerateTransition { .. })
        ));
        // Kernel mode completes and keeps the degenerate block in W1.
        let result = run(&basis, &v, 2, ProjectionMode::Kernel).unwrap();
        assert_eq!(result.w_op(1).entry(1, 0), z(1.0));
        assert_eq!(result.w_op(1).entry(-1, 1), z(1.0));
    }
}
