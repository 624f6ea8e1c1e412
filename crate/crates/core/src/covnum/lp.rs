//! Dense-tableau two-phase simplex over an exact ordered field.
//!
//! Entering columns and leaving rows are chosen by Bland's rule, so the
//! method terminates on degenerate instances.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The arithmetic the simplex method needs.
pub trait OrderedField:
    Clone
    + PartialOrd
    + Zero
    + One
    + Debug
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> OrderedField for T where
    T: Clone
        + PartialOrd
        + Zero
        + One
        + Debug
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<F> {
    pub coeffs: Vec<F>,
    pub relation: Relation,
    pub rhs: F,
}

/// `sense c·x` subject to the constraint rows and `x ≥ lower_bounds`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<F> {
    pub sense: Sense,
    pub objective: Vec<F>,
    pub constraints: Vec<Constraint<F>>,
    /// One per variable; empty means all zero.
    pub lower_bounds: Vec<F>,
}

pub type RationalLP = LinearProgram<BigRational>;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<F> {
    pub value: F,
    pub x: Vec<F>,
    /// One multiplier per constraint row. At an optimum
    /// `value = c·l + Σ_i duals[i]·(rhs_i − a_i·l)` with `l` the lower bounds.
    pub duals: Vec<F>,
    /// Basic columns at the optimum. Indices below `x.len()` are variables,
    /// the rest are slack, surplus or artificial columns.
    pub basis: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<F> {
    Optimal(LpSolution<F>),
    Infeasible,
    Unbounded,
}

impl<F> LpOutcome<F> {
    pub fn optimal(self) -> Option<LpSolution<F>> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl<F: OrderedField> LinearProgram<F> {
    pub fn new(sense: Sense, objective: Vec<F>) -> Self {
        LinearProgram { sense, objective, constraints: Vec::new(), lower_bounds: Vec::new() }
    }

    pub fn constrain(mut self, coeffs: Vec<F>, relation: Relation, rhs: F) -> Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }
}

struct Tableau<F> {
    rows: Vec<Vec<F>>,
    rhs: Vec<F>,
    basis: Vec<usize>,
    cost: Vec<F>,
    cost_rhs: F,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<F: OrderedField> Tableau<F> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        self.rhs[r] = self.rhs[r].clone() / p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            self.cost_rhs = self.cost_rhs.clone() - f * pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes with `cost[j] = z_j − c_j`; a column may enter while its
    /// entry is negative.
    fn optimize(&mut self, enterable: &[bool]) -> Step {
        loop {
            let entering = (0..self.cost.len()).find(|&j| enterable[j] && self.cost[j] < F::zero());
            let Some(c) = entering else { return Step::Optimal };
            let mut best: Option<(usize, F)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if *a > F::zero() {
                    let ratio = self.rhs[i].clone() / a.clone();
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return Step::Unbounded,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn reset_cost(&mut self, col_cost: &[F]) {
        let width = self.cost.len();
        self.cost = (0..width).map(|j| -col_cost[j].clone()).collect();
        self.cost_rhs = F::zero();
        for i in 0..self.rows.len() {
            let cb = col_cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..width {
                if !self.rows[i][j].is_zero() {
                    self.cost[j] = self.cost[j].clone() + cb.clone() * self.rows[i][j].clone();
                }
            }
            self.cost_rhs = self.cost_rhs.clone() + cb * self.rhs[i].clone();
        }
    }
}

/// Solves `lp` exactly.
pub fn solve_lp<F: OrderedField>(lp: &LinearProgram<F>) -> Result<LpOutcome<F>> {
    let n = lp.n_vars();
    if n == 0 {
        return invalid("linear program has no variables");
    }
    if !lp.lower_bounds.is_empty() && lp.lower_bounds.len() != n {
        return invalid(format!("{} lower bounds for {n} variables", lp.lower_bounds.len()));
    }
    for (i, row) in lp.constraints.iter().enumerate() {
        if row.coeffs.len() != n {
            return invalid(format!("constraint {i} has {} coefficients, expected {n}", row.coeffs.len()));
        }
    }
    let lower: Vec<F> = if lp.lower_bounds.is_empty() {
        vec![F::zero(); n]
    } else {
        lp.lower_bounds.clone()
    };
    let flip_obj = lp.sense == Sense::Minimize;
    let obj: Vec<F> = lp
        .objective
        .iter()
        .map(|c| if flip_obj { -c.clone() } else { c.clone() })
        .collect();
    let offset = dot(&obj, &lower);

    // Shift to x' = x − l ≥ 0 and make every right-hand side non-negative.
    let m = lp.constraints.len();
    let mut rows: Vec<Vec<F>> = Vec::with_capacity(m);
    let mut rhs: Vec<F> = Vec::with_capacity(m);
    let mut rels: Vec<Relation> = Vec::with_capacity(m);
    let mut negated = vec![false; m];
    for (i, row) in lp.constraints.iter().enumerate() {
        let b = row.rhs.clone() - dot(&row.coeffs, &lower);
        if b < F::zero() {
            negated[i] = true;
            rows.push(row.coeffs.iter().map(|a| -a.clone()).collect());
            rhs.push(-b);
            rels.push(match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            });
        } else {
            rows.push(row.coeffs.clone());
            rhs.push(b);
            rels.push(row.relation);
        }
    }

    // Columns: variables, then one slack or surplus per inequality row, then
    // one artificial per ≥ or = row. `unit_col[i]` started as e_i.
    let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
    let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
    let width = n + n_slack + n_art;
    let mut unit_col = vec![0usize; m];
    let mut basis = vec![0usize; m];
    let mut is_art = vec![false; width];
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for i in 0..m {
        let mut full = std::mem::take(&mut rows[i]);
        full.resize(width, F::zero());
        match rels[i] {
            Relation::Le => {
                full[next_slack] = F::one();
                unit_col[i] = next_slack;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                full[next_slack] = -F::one();
                next_slack += 1;
                full[next_art] = F::one();
                unit_col[i] = next_art;
                basis[i] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
            Relation::Eq => {
                full[next_art] = F::one();
                unit_col[i] = next_art;
                basis[i] = next_art;
                is_art[next_art] = true;
                next_art += 1;
            }
        }
        rows[i] = full;
    }

    let mut tab = Tableau { rows, rhs, basis, cost: vec![F::zero(); width], cost_rhs: F::zero() };
    let everything = vec![true; width];

    if n_art > 0 {
        let phase1: Vec<F> = (0..width)
            .map(|j| if is_art[j] { -F::one() } else { F::zero() })
            .collect();
        tab.reset_cost(&phase1);
        tab.optimize(&everything);
        if tab.cost_rhs < F::zero() {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot zero-level artificials out of the basis where possible; rows
        // where that fails are linear combinations of the others.
        for r in 0..m {
            if !is_art[tab.basis[r]] {
                continue;
            }
            if let Some(c) = (0..width).find(|&j| !is_art[j] && !tab.rows[r][j].is_zero()) {
                tab.pivot(r, c);
            }
        }
    }

    let mut phase2 = vec![F::zero(); width];
    phase2[..n].clone_from_slice(&obj);
    tab.reset_cost(&phase2);
    let enterable: Vec<bool> = is_art.iter().map(|a| !a).collect();
    if let Step::Unbounded = tab.optimize(&enterable) {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = lower;
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = x[b].clone() + tab.rhs[r].clone();
        }
    }
    let sign = |v: F, flip: bool| if flip { -v } else { v };
    let duals = (0..m)
        .map(|i| sign(sign(tab.cost[unit_col[i]].clone(), negated[i]), flip_obj))
        .collect();
    let value = sign(offset + tab.cost_rhs.clone(), flip_obj);
    Ok(LpOutcome::Optimal(LpSolution { value, x, duals, basis: tab.basis }))
}

fn dot<F: OrderedField>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn qr(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn check_duality(lp: &RationalLP, sol: &LpSolution<BigRational>) {
        let dual_value: BigRational = lp
            .constraints
            .iter()
            .zip(&sol.duals)
            .map(|(c, y)| c.rhs.clone() * y.clone())
            .sum();
        assert_eq!(dual_value, sol.value);
    }

    #[test]
    fn single_bound() {
        let lp = RationalLP::new(Sense::Maximize, vec![q(1)]).constrain(vec![q(1)], Relation::Le, q(3));
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(sol.value, q(3));
        assert_eq!(sol.x, vec![q(3)]);
        check_duality(&lp, &sol);
    }

    #[test]
    fn simplex_face() {
        let lp = RationalLP::new(Sense::Maximize, vec![q(1), q(1)]).constrain(vec![q(1), q(1)], Relation::Le, q(1));
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(sol.value, q(1));
        check_duality(&lp, &sol);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let lp = RationalLP::new(Sense::Maximize, vec![q(1)]).constrain(vec![q(1)], Relation::Le, q(-1));
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
        let lp = RationalLP::new(Sense::Maximize, vec![q(1), q(0)]).constrain(vec![q(1), q(-1)], Relation::Le, q(1));
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn minimize_with_equalities_and_ge_rows() {
        // min 2x + 3y s.t. x + y = 4, x − y ≥ −2, x ≤ 3
        let lp = RationalLP::new(Sense::Minimize, vec![q(2), q(3)])
            .constrain(vec![q(1), q(1)], Relation::Eq, q(4))
            .constrain(vec![q(1), q(-1)], Relation::Ge, q(-2))
            .constrain(vec![q(1), q(0)], Relation::Le, q(3));
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(sol.value, q(9));
        assert_eq!(sol.x, vec![q(3), q(1)]);
        check_duality(&lp, &sol);
    }

    #[test]
    fn redundant_equalities() {
        let lp = RationalLP::new(Sense::Maximize, vec![q(1), q(2)])
            .constrain(vec![q(1), q(1)], Relation::Eq, q(1))
            .constrain(vec![q(2), q(2)], Relation::Eq, q(2));
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(sol.value, q(2));
        check_duality(&lp, &sol);
    }

    #[test]
    fn lower_bounds_shift() {
        // max −x − y s.t. x + y ≥ 1/2 with x ≥ 1/3, y ≥ 0
        let mut lp = RationalLP::new(Sense::Maximize, vec![q(-1), q(-1)]).constrain(vec![q(1), q(1)], Relation::Ge, qr(1, 2));
        lp.lower_bounds = vec![qr(1, 3), q(0)];
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(sol.value, qr(-1, 2));
    }

    #[test]
    fn degenerate_cycling_instance() {
        // Beale's example cycles under the largest-coefficient rule.
        let lp = RationalLP::new(Sense::Minimize, vec![qr(-3, 4), q(150), qr(-1, 50), q(6)])
            .constrain(vec![qr(1, 4), q(-60), qr(-1, 25), q(9)], Relation::Le, q(0))
            .constrain(vec![qr(1, 2), q(-90), qr(-1, 50), q(3)], Relation::Le, q(0))
            .constrain(vec![q(0), q(0), q(1), q(0)], Relation::Le, q(1));
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(sol.value, qr(-1, 20));
        check_duality(&lp, &sol);
    }

    #[test]
    fn malformed_dimensions() {
        let lp = RationalLP::new(Sense::Maximize, vec![q(1)]).constrain(vec![q(1), q(2)], Relation::Le, q(1));
        assert!(solve_lp(&lp).is_err());
    }
}
