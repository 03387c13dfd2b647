//! Exact linear programming by the two-phase primal simplex method.
//!
//! Variables are free unless marked nonnegative; other bounds are ordinary
//! constraints. Pivoting follows
//! Bland's rule (smallest eligible index enters, ties in the ratio test go to
//! the smallest basic index), so the method terminates on degenerate input.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        let lhs = self.coeffs.iter().zip(x).fold(Rational::zero(), |acc, (a, b)| acc + a * b);
        match self.relation {
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Le => lhs <= self.rhs,
        }
    }
}

/// A system of linear constraints over `num_vars` rational variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<LinearConstraint>,
    pub nonnegative: Vec<bool>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, constraints: Vec::new(), nonnegative: vec![false; num_vars] }
    }

    pub fn set_nonnegative(&mut self, var: usize) {
        self.nonnegative[var] = true;
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width mismatch");
        self.constraints.push(LinearConstraint { coeffs, relation, rhs });
    }

    /// Adds `sum coeff * x[var] (relation) rhs` from sparse terms.
    pub fn add_sparse(&mut self, terms: &[(usize, Rational)], relation: Relation, rhs: Rational) {
        let mut coeffs = vec![Rational::zero(); self.num_vars];
        for (var, c) in terms {
            coeffs[*var] += c;
        }
        self.add(coeffs, relation, rhs);
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars
            && x.iter().zip(&self.nonnegative).all(|(v, &nn)| !nn || !v.is_negative())
            && self.constraints.iter().all(|c| c.is_satisfied_by(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rational, point: Vec<Rational> },
}

/// Exact feasibility: a witness satisfying every constraint, or `None`.
pub fn lp_feasible(lp: &LinearProgram) -> Option<Vec<Rational>> {
    let mut t = Tableau::build(lp);
    if !t.phase_one() {
        return None;
    }
    let x = t.extract();
    debug_assert!(lp.is_satisfied_by(&x));
    Some(x)
}

/// Exact minimization of `objective · x` over the feasible set.
pub fn lp_minimize(lp: &LinearProgram, objective: &[Rational]) -> LpOutcome {
    assert_eq!(objective.len(), lp.num_vars, "objective width mismatch");
    let mut t = Tableau::build(lp);
    if !t.phase_one() {
        return LpOutcome::Infeasible;
    }
    let mut cost = vec![Rational::zero(); t.width()];
    for (j, c) in objective.iter().enumerate() {
        let (pos, neg) = t.cols[j];
        cost[pos] = c.clone();
        if let Some(neg) = neg {
            cost[neg] = -c.clone();
        }
    }
    if !t.run(&cost, t.art_start) {
        return LpOutcome::Unbounded;
    }
    let point = t.extract();
    debug_assert!(lp.is_satisfied_by(&point));
    let value = objective.iter().zip(&point).fold(Rational::zero(), |acc, (a, b)| acc + a * b);
    LpOutcome::Optimal { value, point }
}

struct Tableau {
    /// `m` rows of `width + 1` entries, the last being the right-hand side.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    art_start: usize,
    obj: Vec<Rational>,
    /// Column of each variable's positive part and, for free variables, of
    /// its negative part.
    cols: Vec<(usize, Option<usize>)>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let mut cols = Vec::with_capacity(n);
        let mut next = 0;
        for &nn in &lp.nonnegative {
            cols.push((next, if nn { None } else { Some(next + 1) }));
            next += if nn { 1 } else { 2 };
        }
        let num_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let art_start = next + num_slack;
        let width = art_start + m;
        let mut rows = Vec::with_capacity(m);
        let mut slack = next;
        for (i, c) in lp.constraints.iter().enumerate() {
            let flip = c.rhs.is_negative();
            let s = |v: &Rational| if flip { -v.clone() } else { v.clone() };
            let mut row = vec![Rational::zero(); width + 1];
            for (a, &(pos, neg)) in c.coeffs.iter().zip(&cols) {
                row[pos] = s(a);
                if let Some(neg) = neg {
                    row[neg] = -s(a);
                }
            }
            let rel = match (c.relation, flip) {
                (Relation::Ge, true) => Relation::Le,
                (Relation::Le, true) => Relation::Ge,
                (r, _) => r,
            };
            match rel {
                Relation::Ge => {
                    row[slack] = Rational::from_integer((-1).into());
                    slack += 1;
                }
                Relation::Le => {
                    row[slack] = Rational::from_integer(1.into());
                    slack += 1;
                }
                Relation::Eq => {}
            }
            row[art_start + i] = Rational::from_integer(1.into());
            row[width] = s(&c.rhs);
            rows.push(row);
        }
        Tableau { rows, basis: (art_start..width).collect(), art_start, obj: Vec::new(), cols }
    }

    fn width(&self) -> usize {
        self.rows.first().map_or(self.art_start, |r| r.len() - 1)
    }

    fn set_objective(&mut self, cost: &[Rational]) {
        let w = self.width();
        let mut obj: Vec<Rational> = cost.iter().cloned().chain(std::iter::once(Rational::zero())).collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for j in 0..=w {
                obj[j] -= cb * &row[j];
            }
        }
        self.obj = obj;
    }

    /// Minimizes `cost` over columns `< limit`. Returns false when unbounded.
    fn run(&mut self, cost: &[Rational], limit: usize) -> bool {
        self.set_objective(cost);
        let w = self.width();
        loop {
            let Some(enter) = (0..limit).find(|&j| self.obj[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = &row[w] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, enter);
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let inv = self.rows[r][c].recip();
        for x in self.rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for j in 0..=w {
                if !pivot_row[j].is_zero() {
                    row[j] -= &f * &pivot_row[j];
                }
            }
        }
        if !self.obj.is_empty() && !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for (o, p) in self.obj.iter_mut().zip(&pivot_row).take(w + 1) {
                if !p.is_zero() {
                    *o -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Phase one; on success artificial variables have left the basis
    /// (redundant rows are dropped).
    fn phase_one(&mut self) -> bool {
        let w = self.width();
        let mut cost = vec![Rational::zero(); w];
        for c in cost.iter_mut().skip(self.art_start) {
            *c = Rational::from_integer(1.into());
        }
        self.run(&cost, w);
        if !self.obj[w].is_zero() {
            return false;
        }
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.art_start {
                match (0..self.art_start).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        true
    }

    fn extract(&self) -> Vec<Rational> {
        let w = self.width();
        let mut vals = vec![Rational::zero(); self.art_start];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.art_start {
                vals[b] = row[w].clone();
            }
        }
        self.cols
            .iter()
            .map(|&(pos, neg)| match neg {
                Some(neg) => &vals[pos] - &vals[neg],
                None => vals[pos].clone(),
            })
            .collect()
    }
}
