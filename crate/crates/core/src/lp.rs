//! Small dense linear-programming solver.
//!
//! Two-phase primal simplex on a full tableau with Bland's anti-cycling
//! rule. Problems in this crate have at most a few hundred variables, so no
//! attempt is made at sparsity or warm starts.

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
pub const LP_TOLERANCE: f64 = 1e-9;

/// Entries smaller than this are flushed to zero after each pivot.
const DROP_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarBound {
    /// `x >= l`.
    Lower(f64),
    Free,
}

/// `maximize objective · x` subject to equality rows, `<=` rows and
/// per-variable bounds (default `x >= 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    equalities: Vec<(Vec<f64>, f64)>,
    inequalities: Vec<(Vec<f64>, f64)>,
    bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { x: Vec<f64>, objective_value: f64 },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn status(&self) -> LpStatus {
        match self {
            LpSolution::Optimal { .. } => LpStatus::Optimal,
            LpSolution::Infeasible => LpStatus::Infeasible,
            LpSolution::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn x(&self) -> Option<&[f64]> {
        match self {
            LpSolution::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn objective_value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal {
                objective_value, ..
            } => Some(*objective_value),
            _ => None,
        }
    }
}

impl LpProblem {
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            bounds: vec![VarBound::Lower(0.0); n],
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::maximize(objective.into_iter().map(|c| -c).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn equalities(&self) -> &[(Vec<f64>, f64)] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[(Vec<f64>, f64)] {
        &self.inequalities
    }

    pub fn bounds(&self) -> &[VarBound] {
        &self.bounds
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        self.objective = objective;
    }

    pub fn add_equality(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.equalities.push((coeffs, rhs));
    }

    /// `coeffs · x <= rhs`.
    pub fn add_less_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.inequalities.push((coeffs, rhs));
    }

    /// `coeffs · x >= rhs`, stored as its negated `<=` row.
    pub fn add_greater_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.inequalities
            .push((coeffs.into_iter().map(|c| -c).collect(), -rhs));
    }

    pub fn set_bound(&mut self, var: usize, bound: VarBound) {
        self.bounds[var] = bound;
    }

    pub fn with_equality(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.add_equality(coeffs, rhs);
        self
    }

    pub fn with_less_eq(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.add_less_eq(coeffs, rhs);
        self
    }

    pub fn with_greater_eq(mut self, coeffs: Vec<f64>, rhs: f64) -> Self {
        self.add_greater_eq(coeffs, rhs);
        self
    }

    pub fn with_bound(mut self, var: usize, bound: VarBound) -> Self {
        self.set_bound(var, bound);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if n == 0 {
            return Err(Error::Config("linear program has no variables".into()));
        }
        if self.bounds.len() != n {
            return Err(Error::Arity {
                expected: n,
                found: self.bounds.len(),
            });
        }
        for (coeffs, rhs) in self.equalities.iter().chain(&self.inequalities) {
            if coeffs.len() != n {
                return Err(Error::Arity {
                    expected: n,
                    found: coeffs.len(),
                });
            }
            if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Validation("non-finite linear program data".into()));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::Validation("non-finite objective".into()));
        }
        Ok(())
    }

    /// Solves the program. Infeasibility and unboundedness are statuses,
    /// not errors.
    pub fn solve(&self) -> Result<LpSolution> {
        self.validate()?;
        Tableau::build(self).solve(self)
    }
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    /// Row-major `rows x width`; the last column is the right-hand side.
    data: Vec<f64>,
    basis: Vec<usize>,
    columns: Vec<ColumnMap>,
    structural: usize,
    artificial_start: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn build(p: &LpProblem) -> Self {
        let mut columns = Vec::with_capacity(p.num_vars());
        let mut structural = 0;
        for b in &p.bounds {
            match *b {
                VarBound::Lower(lower) => {
                    columns.push(ColumnMap::Shifted {
                        col: structural,
                        lower,
                    });
                    structural += 1;
                }
                VarBound::Free => {
                    columns.push(ColumnMap::Split {
                        pos: structural,
                        neg: structural + 1,
                    });
                    structural += 2;
                }
            }
        }

        let n_ineq = p.inequalities.len();
        let rows = p.equalities.len() + n_ineq;
        let slack_start = structural;
        let artificial_start = slack_start + n_ineq;

        // Expand rows over structural columns and shift right-hand sides.
        let mut expanded: Vec<(Vec<f64>, f64, Option<usize>)> = Vec::with_capacity(rows);
        let push_row = |coeffs: &[f64], rhs: f64, slack: Option<usize>, out: &mut Vec<_>| {
            let mut row = vec![0.0; structural];
            let mut b = rhs;
            for (a, map) in coeffs.iter().zip(&columns) {
                match *map {
                    ColumnMap::Shifted { col, lower } => {
                        row[col] = *a;
                        b -= a * lower;
                    }
                    ColumnMap::Split { pos, neg } => {
                        row[pos] = *a;
                        row[neg] = -*a;
                    }
                }
            }
            out.push((row, b, slack));
        };
        for (i, (coeffs, rhs)) in p.inequalities.iter().enumerate() {
            push_row(coeffs, *rhs, Some(slack_start + i), &mut expanded);
        }
        for (coeffs, rhs) in &p.equalities {
            push_row(coeffs, *rhs, None, &mut expanded);
        }

        let n_art = expanded
            .iter()
            .filter(|(_, b, slack)| slack.is_none() || *b < 0.0)
            .count();
        let width = artificial_start + n_art + 1;
        let mut data = vec![0.0; rows * width];
        let mut basis = Vec::with_capacity(rows);
        let mut next_art = artificial_start;
        for (i, (row, b, slack)) in expanded.into_iter().enumerate() {
            let line = &mut data[i * width..(i + 1) * width];
            line[..structural].copy_from_slice(&row);
            if let Some(s) = slack {
                line[s] = 1.0;
            }
            line[width - 1] = b;
            if b < 0.0 {
                line.iter_mut().for_each(|v| *v = -*v);
            }
            if let Some(col) = slack.filter(|_| b >= 0.0) {
                basis.push(col);
            } else {
                line[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }

        Self {
            rows,
            width,
            data,
            basis,
            columns,
            structural,
            artificial_start,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        {
            let row = &mut self.data[r * w..(r + 1) * w];
            row.iter_mut().for_each(|v| *v /= p);
            row[c] = 1.0;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        let eliminate = |line: &mut [f64]| {
            let factor = line[c];
            if factor != 0.0 {
                for (v, pr) in line.iter_mut().zip(&pivot_row) {
                    *v -= factor * pr;
                    if v.abs() < DROP_TOLERANCE {
                        *v = 0.0;
                    }
                }
                line[c] = 0.0;
            }
        };
        for i in 0..self.rows {
            if i != r {
                eliminate(&mut self.data[i * w..(i + 1) * w]);
            }
        }
        eliminate(obj);
        self.basis[r] = c;
    }

    /// Primal simplex on reduced-cost row `obj`, entering only columns
    /// `< limit`.
    fn run(&mut self, obj: &mut [f64], limit: usize) -> Result<Outcome> {
        let max_iter = 50 * (self.rows + self.width) + 1000;
        for _ in 0..max_iter {
            // Bland: lowest-index improving column.
            let Some(c) = (0..limit).find(|&j| obj[j] > LP_TOLERANCE) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > LP_TOLERANCE {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || ((ratio - br).abs() <= 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            self.pivot(obj, r, c);
        }
        Err(Error::Numerical(format!(
            "simplex did not converge within {max_iter} pivots"
        )))
    }

    fn remove_rows(&mut self, drop: &[usize]) {
        if drop.is_empty() {
            return;
        }
        let w = self.width;
        let mut data = Vec::with_capacity(self.data.len());
        let mut basis = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            if !drop.contains(&i) {
                data.extend_from_slice(&self.data[i * w..(i + 1) * w]);
                basis.push(self.basis[i]);
            }
        }
        self.data = data;
        self.basis = basis;
        self.rows = self.basis.len();
    }

    fn solve(mut self, p: &LpProblem) -> Result<LpSolution> {
        let w = self.width;
        let art = self.artificial_start;

        if art + 1 < w {
            // Phase 1: maximize -(sum of artificials).
            let mut obj = vec![0.0; w];
            for j in art..w - 1 {
                obj[j] = -1.0;
            }
            for i in 0..self.rows {
                if self.basis[i] >= art {
                    for j in 0..w {
                        obj[j] += self.at(i, j);
                    }
                }
            }
            self.run(&mut obj, w - 1)?;
            let scale = 1.0
                + (0..self.rows)
                    .map(|i| self.rhs(i).abs())
                    .fold(0.0, f64::max);
            if obj[w - 1] > LP_TOLERANCE * scale {
                return Ok(LpSolution::Infeasible);
            }
            // Drive remaining artificials out of the basis.
            let mut redundant = Vec::new();
            for i in 0..self.rows {
                if self.basis[i] >= art {
                    match (0..art).find(|&j| self.at(i, j).abs() > LP_TOLERANCE) {
                        Some(j) => self.pivot(&mut obj, i, j),
                        None => redundant.push(i),
                    }
                }
            }
            self.remove_rows(&redundant);
        }

        // Phase 2.
        let mut cost = vec![0.0; w];
        for (c, map) in p.objective.iter().zip(&self.columns) {
            match *map {
                ColumnMap::Shifted { col, .. } => cost[col] = *c,
                ColumnMap::Split { pos, neg } => {
                    cost[pos] = *c;
                    cost[neg] = -*c;
                }
            }
        }
        let mut obj = cost.clone();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * self.at(i, j);
                }
            }
        }
        for v in &mut obj[art..w - 1] {
            *v = 0.0;
        }
        if let Outcome::Unbounded = self.run(&mut obj, art)? {
            return Ok(LpSolution::Unbounded);
        }

        let mut xs = vec![0.0; self.structural];
        for i in 0..self.rows {
            let b = self.basis[i];
            if b < self.structural {
                xs[b] = self.rhs(i).max(0.0);
            }
        }
        let x: Vec<f64> = self
            .columns
            .iter()
            .map(|map| match *map {
                ColumnMap::Shifted { col, lower } => lower + xs[col],
                ColumnMap::Split { pos, neg } => xs[pos] - xs[neg],
            })
            .collect();
        let objective_value = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution::Optimal { x, objective_value })
    }
}
