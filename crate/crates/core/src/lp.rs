//! Exact rational linear programming: two-phase tableau simplex with
//! Bland's rule. Variables are implicitly non-negative.

use num::{One, Signed, Zero};

use crate::valuation::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub rel: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rational>, rel: Relation, rhs: Rational) -> Self {
        Constraint { coeffs, rel, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rational, x: Vec<Rational> },
}

/// Maximize `objective · x` subject to `constraints` and `x ≥ 0`.
pub fn maximize(num_vars: usize, constraints: &[Constraint], objective: &[Rational]) -> LpOutcome {
    let mut t = match Tableau::phase_one(num_vars, constraints) {
        Some(t) => t,
        None => return LpOutcome::Infeasible,
    };
    let mut cost = vec![Rational::zero(); t.cols];
    for (j, c) in objective.iter().enumerate().take(num_vars) {
        cost[j] = c.clone();
    }
    if !t.optimize(&cost) {
        return LpOutcome::Unbounded;
    }
    let x = t.solution(num_vars);
    let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { value, x }
}

/// Some `x ≥ 0` satisfying all constraints, if one exists.
pub fn feasible_point(num_vars: usize, constraints: &[Constraint]) -> Option<Vec<Rational>> {
    Tableau::phase_one(num_vars, constraints).map(|t| t.solution(num_vars))
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    cols: usize,
    /// Columns that may not enter the basis (artificials after phase one).
    blocked: Vec<bool>,
}

impl Tableau {
    /// Builds the tableau and runs phase one; `None` if infeasible.
    fn phase_one(num_vars: usize, constraints: &[Constraint]) -> Option<Tableau> {
        let m = constraints.len();
        let mut normalized: Vec<(Vec<Rational>, Relation, Rational)> = Vec::with_capacity(m);
        for c in constraints {
            let mut coeffs = c.coeffs.clone();
            coeffs.resize(num_vars, Rational::zero());
            if c.rhs.is_negative() {
                let rel = match c.rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                normalized.push((coeffs.into_iter().map(|v| -v).collect(), rel, -c.rhs.clone()));
            } else {
                normalized.push((coeffs, c.rel, c.rhs.clone()));
            }
        }
        let slacks = normalized.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let artificials = normalized.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let cols = num_vars + slacks + artificials;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (num_vars, num_vars + slacks);
        for (coeffs, rel, b) in normalized {
            let mut row = coeffs;
            row.resize(cols, Rational::zero());
            match rel {
                Relation::Le => {
                    row[next_slack] = Rational::one();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -Rational::one();
                    next_slack += 1;
                    row[next_art] = Rational::one();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = Rational::one();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        let art_start = num_vars + slacks;
        let mut t = Tableau { rows, rhs, basis, cols, blocked: vec![false; cols] };
        if artificials == 0 {
            return Some(t);
        }
        let mut cost = vec![Rational::zero(); cols];
        for c in cost.iter_mut().skip(art_start) {
            *c = -Rational::one();
        }
        // Phase one is bounded above by 0, so `optimize` always terminates.
        t.optimize(&cost);
        let infeasibility: Rational =
            t.basis.iter().zip(&t.rhs).filter(|(b, _)| **b >= art_start).map(|(_, v)| v.clone()).sum();
        if infeasibility.is_positive() {
            return None;
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for b in t.blocked.iter_mut().skip(art_start) {
            *b = true;
        }
        Some(t)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            *v *= &inv;
        }
        self.rhs[r] *= &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][c].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost · x` from the current basic feasible solution.
    /// Returns false if the objective is unbounded.
    fn optimize(&mut self, cost: &[Rational]) -> bool {
        loop {
            let entering = (0..self.cols).filter(|&j| !self.blocked[j]).find(|&j| {
                let mut reduced = cost[j].clone();
                for (row, &b) in self.rows.iter().zip(&self.basis) {
                    if !row[j].is_zero() && !cost[b].is_zero() {
                        reduced -= &cost[b] * &row[j];
                    }
                }
                reduced.is_positive()
            });
            let Some(j) = entering else { return true };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                if !self.rows[i][j].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.rows[i][j];
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((i, _)) = leave else { return false };
            self.pivot(i, j);
        }
    }

    fn solution(&self, num_vars: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); num_vars];
        for (b, v) in self.basis.iter().zip(&self.rhs) {
            if *b < num_vars {
                x[*b] = v.clone();
            }
        }
        x
    }
}
