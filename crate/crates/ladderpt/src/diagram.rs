//! Bracket diagrams for the order-by-order commutator expressions.
//!
//! A diagram `(i1,...,ik|r)` stands for the weighted nested commutator
//! `(1/k!) [G_{i1}, [G_{i2}, ..., [G_{ik}, X_r]...]]` with `X_1 = V` and
//! `X_0 = H0`. The diagrams contributing at order `n` are exactly
//!
//! * every composition of `n-1` on the left with `r = 1` (the empty
//!   composition giving plain `V` at order one), and
//! * every composition of `n` of length at least two with `r = 0`; the
//!   single-element bracket with `r = 0` is the unknown side of the order-`n`
//!   commutator equation and never appears as a source term.
//!
//! This gives `2^(n-2) + 2^(n-1) - 1` diagrams at order `n >= 2` and one at
//! order one.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagramError {
    #[error("diagram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("left entries must be positive")]
    ZeroLeftEntry,
    #[error("bracket ({0}|0) is the unknown side of the commutator equation")]
    SingleLeftWithH0(u32),
}

/// The operator sitting innermost in the nesting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightSide {
    /// `0`: the unperturbed Hamiltonian.
    H0,
    /// `1`: the perturbation.
    V,
}

impl RightSide {
    /// Contribution of the right side to the diagram order.
    pub fn order_weight(self) -> u32 {
        match self {
            RightSide::H0 => 0,
            RightSide::V => 1,
        }
    }
}

/// A bracket `(i1,...,ik|r)`: generator indices on the left, `H0` or `V` on
/// the right, weighted by `1/k!`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    left: Vec<u32>,
    right: RightSide,
}

impl Diagram {
    pub fn new(left: Vec<u32>, right: RightSide) -> Result<Self, DiagramError> {
        if left.iter().any(|&i| i == 0) {
            return Err(DiagramError::ZeroLeftEntry);
        }
        let d = Diagram { left, right };
        if d.order() == 0 {
            return Err(DiagramError::InvalidOrder(0));
        }
        if d.right == RightSide::H0 && d.left.len() < 2 {
            return Err(DiagramError::SingleLeftWithH0(
                d.left.first().copied().unwrap_or(0),
            ));
        }
        Ok(d)
    }

    /// Generator indices, outermost first.
    pub fn left(&self) -> &[u32] {
        &self.left
    }

    pub fn right(&self) -> RightSide {
        self.right
    }

    /// Sum of the left indices plus the right side's contribution.
    pub fn order(&self) -> usize {
        self.left.iter().map(|&i| i as usize).sum::<usize>()
            + self.right.order_weight() as usize
    }

    /// `1 / k!` for `k` left entries.
    pub fn weight(&self) -> f64 {
        let mut f = 1.0;
        for i in 2..=self.left.len() as u64 {
            f *= i as f64;
        }
        1.0 / f
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.left.is_empty() {
            // The order-one diagram is written without the bar.
            return write!(f, "(1)");
        }
        write!(f, "(")?;
        for (i, v) in self.left.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "|{})", self.right.order_weight())
    }
}

/// All compositions of `n` in lexicographic order; the empty composition for
/// `n = 0`.
fn compositions(n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// The diagrams of order `n`, deterministically ordered: right side `V`
/// first, then `H0`, lexicographic by left indices within each group.
pub fn enumerate_diagrams(n: usize) -> Result<Vec<Diagram>, DiagramError> {
    if n == 0 {
        return Err(DiagramError::InvalidOrder(0));
    }
    let mut out = Vec::new();
    for left in compositions(n - 1) {
        out.push(Diagram::new(left, RightSide::V).expect("valid by construction"));
    }
    for left in compositions(n) {
        if left.len() >= 2 {
            out.push(Diagram::new(left, RightSide::H0).expect("valid by construction"));
        }
    }
    Ok(out)
}

/// Number of diagrams at order `n`: `2^(n-2) + 2^(n-1) - 1` for `n >= 2`,
/// one for `n = 1`.
pub fn diagram_count(n: usize) -> usize {
    match n {
        0 => 0,
        1 => 1,
        _ => (1 << (n - 2)) + (1 << (n - 1)) - 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(left: &[u32], right: RightSide) -> Diagram {
        Diagram::new(left.to_vec(), right).unwrap()
    }

    #[test]
    fn order_one_is_plain_v() {
        let ds = enumerate_diagrams(1).unwrap();
        assert_eq!(ds, vec![d(&[], RightSide::V)]);
        assert_eq!(ds[0].to_string(), "(1)");
        assert_eq!(ds[0].weight(), 1.0);
    }

    #[test]
    fn order_two_listing() {
        let ds = enumerate_diagrams(2).unwrap();
        assert_eq!(ds, vec![d(&[1], RightSide::V), d(&[1, 1], RightSide::H0)]);
        assert_eq!(ds[0].to_string(), "(1|1)");
        assert_eq!(ds[1].to_string(), "(1,1|0)");
        assert_eq!(ds[1].weight(), 0.5);
    }

    #[test]
    fn order_three_set() {
        let ds = enumerate_diagrams(3).unwrap();
        let strings: Vec<String> = ds.iter().map(|x| x.to_string()).collect();
        let mut sorted = strings.clone();
        sorted.sort();
        let mut expected = vec!["(2|1)", "(1,2|0)", "(2,1|0)", "(1,1|1)", "(1,1,1|0)"];
        expected.sort_unstable();
        assert_eq!(sorted, expected);
    }

    #[test]
    fn order_four_set() {
        let ds = enumerate_diagrams(4).unwrap();
        assert_eq!(ds.len(), 11);
        let mut got: Vec<String> = ds.iter().map(|x| x.to_string()).collect();
        got.sort();
        let mut expected = vec![
            "(3|1)",
            "(1,2|1)",
            "(2,1|1)",
            "(1,1,1|1)",
            "(1,3|0)",
            "(3,1|0)",
            "(2,2|0)",
            "(1,1,2|0)",
            "(1,2,1|0)",
            "(2,1,1|0)",
            "(1,1,1,1|0)",
        ];
        expected.sort_unstable();
        assert_eq!(got, expected);
    }

    #[test]
    fn counts_match_closed_form() {
        for n in 1..=12 {
            assert_eq!(enumerate_diagrams(n).unwrap().len(), diagram_count(n));
        }
        assert_eq!(
            (1..=4).map(diagram_count).collect::<Vec<_>>(),
            vec![1, 2, 5, 11]
        );
    }

    #[test]
    fn invalid_diagrams_rejected() {
        assert_eq!(enumerate_diagrams(0).unwrap_err(), DiagramError::InvalidOrder(0));
        assert_eq!(
            Diagram::new(vec![2], RightSide::H0).unwrap_err(),
            DiagramError::SingleLeftWithH0(2)
        );
        assert_eq!(
            Diagram::new(vec![1, 0], RightSide::V).unwrap_err(),
            DiagramError::ZeroLeftEntry
        );
        assert_eq!(
            Diagram::new(vec![], RightSide::H0).unwrap_err(),
            DiagramError::InvalidOrder(0)
        );
    }

    #[test]
    fn enumeration_order_is_deterministic() {
        let ds = enumerate_diagrams(3).unwrap();
        let strings: Vec<String> = ds.iter().map(|x| x.to_string()).collect();
        assert_eq!(
            strings,
            vec!["(1,1|1)", "(2|1)", "(1,1,1|0)", "(1,2|0)", "(2,1|0)"]
        );
    }
}
