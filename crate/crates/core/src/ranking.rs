//! Top-k queries and the precision/recall metrics comparing an operator's
//! output with a ranking.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::digest::stable_digest;
use crate::dominance::SCORE_TOLERANCE;
use crate::error::{Error, Result};
use crate::model::{Relation, ScoringFunction};
use crate::operators::{Operator, QueryResult};
use crate::polytope::WeightPolytope;

/// Every tuple ordered best-first by canonical score. Scores within
/// tolerance of each other form a tie group ordered by id.
pub fn ranking(r: &Relation, f: &ScoringFunction) -> Result<Vec<(usize, f64)>> {
    f.check_arity(r.arity())?;
    let mut scored: Vec<(usize, f64)> = r
        .tuples()
        .iter()
        .map(|t| (t.id(), f.eval_unchecked(t.values())))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut start = 0;
    for i in 1..=scored.len() {
        if i == scored.len() || scored[i].1 - scored[i - 1].1 > SCORE_TOLERANCE {
            scored[start..i].sort_by_key(|&(id, _)| id);
            start = i;
        }
    }
    Ok(scored)
}

/// The `k` best tuples under `f`; all of them when `k` exceeds the relation.
pub fn topk(r: &Relation, f: &ScoringFunction, k: usize) -> Result<QueryResult> {
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    let start = Instant::now();
    let mut best = ranking(r, f)?;
    best.truncate(k);
    best.sort_by_key(|&(id, _)| id);
    let (ids, scores): (Vec<usize>, Vec<f64>) = best.into_iter().unzip();
    let digest = stable_digest(&[
        Operator::Topk.name(),
        &format!("k={k} f={:?}", f.terms()),
        &format!("n={} d={}", r.len(), r.arity()),
        env!("CARGO_PKG_VERSION"),
    ]);
    let mut res = QueryResult::new(Operator::Topk, ids, start.elapsed(), digest);
    res.scores = Some(scores);
    Ok(res)
}

fn overlap(s: &BTreeSet<usize>, r: &Relation, f: &ScoringFunction, k: usize) -> Result<usize> {
    let top = topk(r, f, k)?;
    Ok(top.ids.iter().filter(|id| s.contains(id)).count())
}

/// `|S ∩ T_k| / k`.
pub fn precision(s: &[usize], r: &Relation, f: &ScoringFunction, k: usize) -> Result<f64> {
    let set: BTreeSet<usize> = s.iter().copied().collect();
    Ok(overlap(&set, r, f, k)? as f64 / k as f64)
}

/// `|S ∩ T_k| / |S|`.
pub fn recall(s: &[usize], r: &Relation, f: &ScoringFunction, k: usize) -> Result<f64> {
    let set: BTreeSet<usize> = s.iter().copied().collect();
    if set.is_empty() {
        return Err(Error::Validation("recall of an empty set is undefined".into()));
    }
    Ok(overlap(&set, r, f, k)? as f64 / set.len() as f64)
}

/// The weighted sum whose weights are the polytope's vertex centroid.
pub fn centroid_function(p: &WeightPolytope) -> ScoringFunction {
    ScoringFunction::linear(&p.centroid()).expect("centroid weights sum to one")
}
