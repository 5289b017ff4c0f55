//! The constrained weight polytope `W(C)`.
//!
//! `W(C)` is the standard weight simplex `{w >= 0, Σw = 1}` cut by a list of
//! user constraints. It parameterizes the linear scoring-function family, and
//! because every member of that family is linear, checks over the whole family
//! reduce to checks at the polytope's vertices.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LpProblem, LpSolution, LP_TOLERANCE};

/// Two enumerated vertices closer than this are the same vertex.
pub const VERTEX_MERGE_DISTANCE: f64 = 1e-7;

/// Pivots below this make an active set singular.
const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintOp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// `coeffs · w (op) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub op: ConstraintOp,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, op: ConstraintOp, rhs: f64) -> Self {
        Self { coeffs, op, rhs }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, ConstraintOp::Le, rhs)
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, ConstraintOp::Ge, rhs)
    }

    /// The constraint as `a · w <= b`.
    fn as_upper(&self) -> (Vec<f64>, f64) {
        match self.op {
            ConstraintOp::Le => (self.coeffs.clone(), self.rhs),
            ConstraintOp::Ge => (self.coeffs.iter().map(|c| -c).collect(), -self.rhs),
        }
    }

    pub fn is_satisfied(&self, w: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(w).map(|(a, x)| a * x).sum();
        match self.op {
            ConstraintOp::Le => lhs <= self.rhs + tol,
            ConstraintOp::Ge => lhs >= self.rhs - tol,
        }
    }
}

/// A non-empty `W(C)` with its vertex set computed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPolytope {
    dim: usize,
    constraints: Vec<LinearConstraint>,
    vertices: Vec<Vec<f64>>,
}

impl WeightPolytope {
    pub fn new(dim: usize, constraints: Vec<LinearConstraint>) -> Result<Self> {
        if is_empty(dim, &constraints)? {
            return Err(Error::EmptyPolytope);
        }
        let vertices = enumerate_vertices(dim, &constraints);
        if vertices.is_empty() {
            return Err(Error::Numerical(
                "feasible weight polytope produced no vertices".into(),
            ));
        }
        Ok(Self {
            dim,
            constraints,
            vertices,
        })
    }

    /// The unconstrained standard simplex.
    pub fn simplex(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Extreme points, deduplicated and sorted lexicographically.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Arithmetic mean of the vertices.
    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for v in &self.vertices {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi;
            }
        }
        let n = self.vertices.len() as f64;
        c.iter_mut().for_each(|x| *x /= n);
        c
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.dim
            && w.iter().all(|x| *x >= -LP_TOLERANCE)
            && (w.iter().sum::<f64>() - 1.0).abs() <= LP_TOLERANCE
            && self
                .constraints
                .iter()
                .all(|c| c.is_satisfied(w, LP_TOLERANCE))
    }

    /// `maximize objective · w` over this polytope.
    pub fn maximize(&self, objective: Vec<f64>) -> Result<LpSolution> {
        weight_program(self.dim, &self.constraints, objective).solve()
    }

    /// An LP over `w` (the first `dim` variables, constrained to `W(C)`)
    /// followed by `extra` free-standing variables with default bounds.
    pub fn program_with_extra(&self, objective: Vec<f64>, extra: usize) -> LpProblem {
        let mut obj = objective;
        obj.resize(self.dim + extra, 0.0);
        let mut p = LpProblem::maximize(obj);
        let pad = |mut row: Vec<f64>| {
            row.resize(self.dim + extra, 0.0);
            row
        };
        p.add_equality(pad(vec![1.0; self.dim]), 1.0);
        for c in &self.constraints {
            let (a, b) = c.as_upper();
            p.add_less_eq(pad(a), b);
        }
        p
    }
}

fn check_lengths(dim: usize, constraints: &[LinearConstraint]) -> Result<()> {
    if dim == 0 {
        return Err(Error::Validation("weight dimension must be positive".into()));
    }
    for c in constraints {
        if c.coeffs.len() != dim {
            return Err(Error::Arity {
                expected: dim,
                found: c.coeffs.len(),
            });
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite constraint data".into()));
        }
    }
    Ok(())
}

fn weight_program(dim: usize, constraints: &[LinearConstraint], objective: Vec<f64>) -> LpProblem {
    let mut p = LpProblem::maximize(objective).with_equality(vec![1.0; dim], 1.0);
    for c in constraints {
        let (a, b) = c.as_upper();
        p.add_less_eq(a, b);
    }
    p
}

/// True iff the simplex cut by `constraints` has no feasible point.
pub fn is_empty(dim: usize, constraints: &[LinearConstraint]) -> Result<bool> {
    check_lengths(dim, constraints)?;
    let sol = weight_program(dim, constraints, vec![0.0; dim]).solve()?;
    Ok(matches!(sol, LpSolution::Infeasible))
}

/// Exhaustive active-set enumeration: every choice of `dim - 1` facets made
/// tight together with `Σw = 1`, kept when the solution is feasible.
fn enumerate_vertices(dim: usize, constraints: &[LinearConstraint]) -> Vec<Vec<f64>> {
    let mut facets: Vec<(Vec<f64>, f64)> = constraints.iter().map(|c| c.as_upper()).collect();
    for i in 0..dim {
        let mut a = vec![0.0; dim];
        a[i] = -1.0;
        facets.push((a, 0.0));
    }

    let mut found: Vec<Vec<f64>> = Vec::new();
    for active in (0..facets.len()).combinations(dim - 1) {
        let mut system: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut rhs = Vec::with_capacity(dim);
        for &k in &active {
            system.push(facets[k].0.clone());
            rhs.push(facets[k].1);
        }
        system.push(vec![1.0; dim]);
        rhs.push(1.0);
        let Some(mut w) = solve_square(system, rhs) else {
            continue;
        };
        for x in &mut w {
            if x.abs() < SINGULAR_PIVOT {
                *x = 0.0;
            }
        }
        let feasible = facets.iter().all(|(a, b)| {
            let lhs: f64 = a.iter().zip(&w).map(|(p, q)| p * q).sum();
            lhs <= b + LP_TOLERANCE
        });
        if feasible && !found.iter().any(|v| distance(v, &w) < VERTEX_MERGE_DISTANCE) {
            found.push(w);
        }
    }
    found.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    found
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < SINGULAR_PIVOT {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
