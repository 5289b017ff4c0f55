//! Pairwise preference tests.
//!
//! Everything here works in canonical space (lower is better). Scores that
//! differ by at most [`SCORE_TOLERANCE`] are treated as equal.
//!
//! `t` F-dominates `s` when every function of the family scores `t` no worse
//! than `s`, and additionally `t` is strictly better under some function or
//! Pareto-dominates `s` outright. The second half of the strictness clause
//! only matters for weight polytopes lying on a coordinate face; it keeps
//! Pareto dominance a special case of F-dominance for every family. A tuple
//! never dominates itself or an exact duplicate.

use crate::error::{Error, Result};
use crate::lp::{LpProblem, LpSolution};
use crate::model::{dot, FunctionFamily, Tuple};
use crate::polytope::WeightPolytope;

pub const SCORE_TOLERANCE: f64 = 1e-9;

/// How an F-dominance test is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// `Direct` for finite families, `Ve` for linear ones.
    #[default]
    Auto,
    /// One LP over the weight polytope per direction.
    Lp,
    /// Score comparison at every polytope vertex.
    Ve,
    /// Evaluate every member of a finite family.
    Direct,
}

/// `(no worse everywhere, strictly better somewhere)` for `a` against `b`.
#[inline]
pub(crate) fn compare_scores(a: &[f64], b: &[f64]) -> (bool, bool) {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if *x > *y + SCORE_TOLERANCE {
            return (false, false);
        }
        if *x < *y - SCORE_TOLERANCE {
            strict = true;
        }
    }
    (true, strict)
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
#[inline]
pub(crate) fn dominates_scores(a: &[f64], b: &[f64]) -> bool {
    compare_scores(a, b) == (true, true)
}

/// F-dominance given family scores and canonical values of both tuples.
#[inline]
pub(crate) fn f_dominates_scores(a_scores: &[f64], b_scores: &[f64], a: &[f64], b: &[f64]) -> bool {
    match compare_scores(a_scores, b_scores) {
        (true, true) => true,
        (true, false) => dominates_scores(a, b),
        _ => false,
    }
}

fn same_arity(t: &Tuple, s: &Tuple) -> Result<()> {
    if t.arity() != s.arity() {
        return Err(Error::Arity {
            expected: t.arity(),
            found: s.arity(),
        });
    }
    Ok(())
}

/// Classical Pareto dominance on canonical values.
pub fn pareto_dominates(t: &Tuple, s: &Tuple) -> Result<bool> {
    same_arity(t, s)?;
    Ok(dominates_scores(t.values(), s.values()))
}

/// Scores of `values` at every vertex of `p`.
pub(crate) fn vertex_scores(p: &WeightPolytope, values: &[f64]) -> Vec<f64> {
    p.vertices().iter().map(|v| dot(v, values)).collect()
}

/// F-dominance of `t` over `s`.
pub fn f_dominates(t: &Tuple, s: &Tuple, family: &FunctionFamily, method: Method) -> Result<bool> {
    same_arity(t, s)?;
    family.check_arity(t.arity())?;
    match (family, method) {
        (FunctionFamily::Finite(fs), Method::Auto | Method::Direct) => {
            let a: Vec<f64> = fs.iter().map(|f| f.eval_unchecked(t.values())).collect();
            let b: Vec<f64> = fs.iter().map(|f| f.eval_unchecked(s.values())).collect();
            Ok(f_dominates_scores(&a, &b, t.values(), s.values()))
        }
        (FunctionFamily::Linear(p), Method::Auto | Method::Ve) => Ok(f_dominates_scores(
            &vertex_scores(p, t.values()),
            &vertex_scores(p, s.values()),
            t.values(),
            s.values(),
        )),
        (FunctionFamily::Linear(p), Method::Lp) => lp_f_dominates(p, t.values(), s.values()),
        (FunctionFamily::Finite(_), m) => Err(Error::Config(format!(
            "method {m:?} needs a linear family"
        ))),
        (FunctionFamily::Linear(_), m) => Err(Error::Config(format!(
            "method {m:?} needs a finite family"
        ))),
    }
}

fn optimal_value(sol: LpSolution) -> Result<f64> {
    match sol {
        LpSolution::Optimal {
            objective_value, ..
        } => Ok(objective_value),
        other => Err(Error::Numerical(format!(
            "LP over a non-empty bounded polytope returned {:?}",
            other.status()
        ))),
    }
}

/// LP route: `max w·(t - s) <= tol` over the polytope, and then either
/// `min w·(t - s) < -tol` or Pareto dominance.
pub(crate) fn lp_f_dominates(p: &WeightPolytope, t: &[f64], s: &[f64]) -> Result<bool> {
    let diff: Vec<f64> = t.iter().zip(s).map(|(a, b)| a - b).collect();
    let worst = optimal_value(p.maximize(diff.clone())?)?;
    if worst > SCORE_TOLERANCE {
        return Ok(false);
    }
    let best_gap = optimal_value(p.maximize(diff.into_iter().map(|x| -x).collect())?)?;
    Ok(best_gap > SCORE_TOLERANCE || dominates_scores(t, s))
}

/// Maximum total slack of a blend of `others` below `target`, where every
/// vector holds scores at the polytope vertices. `None` when no blend is
/// weakly below the target at every vertex.
pub(crate) fn blend_slack(target: &[f64], others: &[&[f64]]) -> Result<Option<f64>> {
    let m = others.len();
    let nv = target.len();
    let mut objective = vec![0.0; m];
    objective.extend(std::iter::repeat_n(1.0, nv));
    let mut lp = LpProblem::maximize(objective);
    let mut simplex_row = vec![1.0; m];
    simplex_row.extend(std::iter::repeat_n(0.0, nv));
    lp.add_equality(simplex_row, 1.0);
    for (v, &rhs) in target.iter().enumerate() {
        let mut row: Vec<f64> = others.iter().map(|o| o[v]).collect();
        row.extend((0..nv).map(|k| if k == v { 1.0 } else { 0.0 }));
        lp.add_equality(row, rhs);
    }
    match lp.solve()? {
        LpSolution::Optimal {
            objective_value, ..
        } => Ok(Some(objective_value)),
        LpSolution::Infeasible => Ok(None),
        LpSolution::Unbounded => Err(Error::Numerical("blend LP is unbounded".into())),
    }
}

fn blend_inputs(t: &Tuple, others: &[&Tuple], p: &WeightPolytope) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if others.is_empty() {
        return Err(Error::Validation("convex combination needs at least one tuple".into()));
    }
    if t.arity() != p.dim() {
        return Err(Error::Arity {
            expected: p.dim(),
            found: t.arity(),
        });
    }
    for o in others {
        same_arity(t, o)?;
    }
    let target = vertex_scores(p, t.values());
    let rows = others.iter().map(|o| vertex_scores(p, o.values())).collect();
    Ok((target, rows))
}

/// Is `t` F-dominated, under the linear family over `p`, by some convex
/// combination of `others`? Strictness is required at one vertex at least.
pub fn convex_combo_f_dominates(t: &Tuple, others: &[&Tuple], p: &WeightPolytope) -> Result<bool> {
    let (target, rows) = blend_inputs(t, others, p)?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(blend_slack(&target, &refs)?.is_some_and(|s| s > SCORE_TOLERANCE))
}

/// Like [`convex_combo_f_dominates`] but without the strictness clause: some
/// blend scores no worse than `t` under every function of the family.
pub fn convex_combo_weakly_f_dominates(
    t: &Tuple,
    others: &[&Tuple],
    p: &WeightPolytope,
) -> Result<bool> {
    let (target, rows) = blend_inputs(t, others, p)?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Ok(blend_slack(&target, &refs)?.is_some())
}
