//! Set-valued query operators: SKY, ND and PO.
//!
//! All operators evaluate over a window of survivors (block nested loops).
//! Sorted variants feed tuples in topological order; unsorted ones in
//! ingestion order. Either way a newcomer may evict window members, so the
//! result never depends on ties in the sort key.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::digest::stable_digest;
use crate::dominance::{
    blend_slack, compare_scores, dominates_scores, f_dominates_scores, lp_f_dominates,
    SCORE_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::lp::{LpSolution, VarBound};
use crate::model::{dot, FunctionFamily, Relation, ScoringFunction};
use crate::polytope::WeightPolytope;

/// ND algorithm: sorted/unsorted × vertex enumeration/LP × one/two phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NdAlgorithm {
    Sve1,
    Sve2,
    Ulp1,
    Ulp2,
}

impl NdAlgorithm {
    pub const ALL: [NdAlgorithm; 4] = [Self::Sve1, Self::Sve2, Self::Ulp1, Self::Ulp2];

    pub fn is_sorted(self) -> bool {
        matches!(self, Self::Sve1 | Self::Sve2)
    }

    pub fn uses_lp(self) -> bool {
        matches!(self, Self::Ulp1 | Self::Ulp2)
    }

    /// Skyline first, then F-dominance within it.
    pub fn is_two_phase(self) -> bool {
        matches!(self, Self::Sve2 | Self::Ulp2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Sve1 => "SVE1",
            Self::Sve2 => "SVE2",
            Self::Ulp1 => "ULP1",
            Self::Ulp2 => "ULP2",
        }
    }
}

impl fmt::Display for NdAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NdAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown ND algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PoMethod {
    /// One LP per ND member maximizing its winning margin.
    #[default]
    Direct,
    /// Prune ND members dominated by convex combinations of the others.
    Pond,
}

impl PoMethod {
    pub fn name(self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Pond => "pond",
        }
    }
}

impl FromStr for PoMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Self::Direct),
            "pond" => Ok(Self::Pond),
            _ => Err(Error::Config(format!("unknown PO method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Sky,
    Nd,
    Po,
    Topk,
}

impl Operator {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sky => "SKY",
            Self::Nd => "ND",
            Self::Po => "PO",
            Self::Topk => "TOPK",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Output of any operator. `ids` are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub operator: Operator,
    pub ids: Vec<usize>,
    pub size: usize,
    pub elapsed: Duration,
    pub config_digest: String,
    /// Canonical scores aligned with `ids`; only set by top-k.
    pub scores: Option<Vec<f64>>,
}

impl QueryResult {
    pub(crate) fn new(operator: Operator, mut ids: Vec<usize>, elapsed: Duration, digest: String) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self {
            operator,
            size: ids.len(),
            ids,
            elapsed,
            config_digest: digest,
            scores: None,
        }
    }

    pub fn id_set(&self) -> BTreeSet<usize> {
        self.ids.iter().copied().collect()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.ids.binary_search(&id).is_ok()
    }
}

pub(crate) fn describe_family(family: &FunctionFamily) -> String {
    match family {
        FunctionFamily::Finite(fs) => format!("finite:{:?}", fs.iter().map(|f| f.terms()).collect::<Vec<_>>()),
        FunctionFamily::Linear(p) => format!("linear:{}:{:?}", p.dim(), p.constraints()),
    }
}

fn digest(operator: Operator, detail: &str, r: &Relation) -> String {
    stable_digest(&[
        operator.name(),
        detail,
        &format!("n={} d={}", r.len(), r.arity()),
        env!("CARGO_PKG_VERSION"),
    ])
}

/// Row-major per-tuple score vectors (one column per function or vertex).
struct ScoreMatrix {
    width: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    fn from_vertices(r: &Relation, p: &WeightPolytope) -> Self {
        let width = p.vertices().len();
        let mut data = Vec::with_capacity(width * r.len());
        for t in r.tuples() {
            data.extend(p.vertices().iter().map(|v| dot(v, t.values())));
        }
        Self { width, data }
    }

    fn from_functions(r: &Relation, fs: &[ScoringFunction]) -> Self {
        let mut data = Vec::with_capacity(fs.len() * r.len());
        for t in r.tuples() {
            data.extend(fs.iter().map(|f| f.eval_unchecked(t.values())));
        }
        Self {
            width: fs.len(),
            data,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Sort order for [`window_filter`]: per-tuple keys the order ascends by,
/// and how far a dominating tuple's key may exceed the dominated one's.
struct SortedBy<'a> {
    keys: &'a [f64],
    slack: f64,
}

/// Block-nested-loops window filter with bidirectional tests. With a sort
/// key, a newcomer can only evict the window tail whose keys are within
/// slack of its own.
fn window_filter<F>(order: &[usize], sorted: Option<SortedBy<'_>>, mut dominates: F) -> Result<Vec<usize>>
where
    F: FnMut(usize, usize) -> Result<bool>,
{
    let mut window: Vec<usize> = Vec::new();
    'next: for &i in order {
        for &w in &window {
            if dominates(w, i)? {
                continue 'next;
            }
        }
        let from = match &sorted {
            Some(s) => {
                let floor = s.keys[i] - s.slack - 1e-12 * s.keys[i].abs();
                window.partition_point(|&w| s.keys[w] < floor)
            }
            None => 0,
        };
        let tail = window.split_off(from);
        for w in tail {
            if !dominates(i, w)? {
                window.push(w);
            }
        }
        window.push(i);
    }
    Ok(window)
}

/// Pareto skyline, visiting tuples by ascending attribute sum. Same
/// algorithm as [`window_filter`], with the window's values kept contiguous.
fn skyline_ids(r: &Relation) -> Vec<usize> {
    let t = r.tuples();
    let d = r.arity().max(1);
    let keys: Vec<f64> = t.iter().map(|x| x.values().iter().sum()).collect();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order_by_keys(r, &keys, &mut order);
    let slack = d as f64 * SCORE_TOLERANCE;

    let mut ids: Vec<usize> = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    'next: for &i in &order {
        let v = t[i].values();
        if rows.chunks_exact(d).any(|w| dominates_scores(w, v)) {
            continue 'next;
        }
        let floor = keys[i] - slack - 1e-12 * keys[i].abs();
        let from = ids.partition_point(|&w| keys[w] < floor);
        let mut kept = from;
        for j in from..ids.len() {
            if !dominates_scores(v, &rows[j * d..(j + 1) * d]) {
                ids[kept] = ids[j];
                rows.copy_within(j * d..(j + 1) * d, kept * d);
                kept += 1;
            }
        }
        ids.truncate(kept);
        rows.truncate(kept * d);
        ids.push(i);
        rows.extend_from_slice(v);
    }
    ids
}

/// Tuples not Pareto-dominated by any other tuple.
pub fn sky(r: &Relation) -> QueryResult {
    let start = Instant::now();
    let ids = skyline_ids(r);
    QueryResult::new(Operator::Sky, ids, start.elapsed(), digest(Operator::Sky, "sfs", r))
}

fn sort_keys(r: &Relation, family: &FunctionFamily) -> Vec<f64> {
    match family {
        FunctionFamily::Linear(p) => {
            let c = p.centroid();
            r.tuples().iter().map(|t| dot(&c, t.values())).collect()
        }
        FunctionFamily::Finite(fs) => r
            .tuples()
            .iter()
            .map(|t| fs.iter().map(|f| f.eval_unchecked(t.values())).sum())
            .collect(),
    }
}

fn order_by_keys(r: &Relation, keys: &[f64], ids: &mut [usize]) {
    let t = r.tuples();
    ids.sort_by(|&a, &b| {
        keys[a]
            .total_cmp(&keys[b])
            .then_with(|| {
                t[a].values()
                    .iter()
                    .zip(t[b].values())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
}

/// Ascending order by a family-consistent key: the centroid score for linear
/// families, the summed member scores for finite ones. Ties fall back to
/// lexicographic value order, then id. An F-dominating tuple never has a
/// larger key than the tuple it dominates.
pub fn topo_sort(r: &Relation, family: &FunctionFamily) -> Result<Vec<usize>> {
    family.check_arity(r.arity())?;
    let keys = sort_keys(r, family);
    let mut ids: Vec<usize> = (0..r.len()).collect();
    order_by_keys(r, &keys, &mut ids);
    Ok(ids)
}

fn nd_ids(r: &Relation, family: &FunctionFamily, alg: NdAlgorithm) -> Result<Vec<usize>> {
    family.check_arity(r.arity())?;
    let keys = sort_keys(r, family);
    let order = if alg.is_sorted() {
        let mut ids: Vec<usize> = (0..r.len()).collect();
        order_by_keys(r, &keys, &mut ids);
        ids
    } else {
        (0..r.len()).collect()
    };
    let candidates = if alg.is_two_phase() {
        let sky: BTreeSet<usize> = skyline_ids(r).into_iter().collect();
        order.into_iter().filter(|i| sky.contains(i)).collect()
    } else {
        order
    };
    // A dominator's key exceeds the dominated key by at most the summed
    // per-function tolerance: one function's worth for the centroid key.
    let sorted = alg.is_sorted().then(|| SortedBy {
        keys: &keys,
        slack: match family {
            FunctionFamily::Finite(fs) => fs.len() as f64 * SCORE_TOLERANCE,
            FunctionFamily::Linear(_) => SCORE_TOLERANCE,
        },
    });
    let t = r.tuples();
    match family {
        FunctionFamily::Finite(fs) => {
            log::debug!("{alg}: finite family, using direct evaluation");
            let m = ScoreMatrix::from_functions(r, fs);
            window_filter(&candidates, sorted, |a, b| {
                Ok(f_dominates_scores(m.row(a), m.row(b), t[a].values(), t[b].values()))
            })
        }
        FunctionFamily::Linear(p) if alg.uses_lp() => {
            window_filter(&candidates, sorted, |a, b| lp_f_dominates(p, t[a].values(), t[b].values()))
        }
        FunctionFamily::Linear(p) => {
            let m = ScoreMatrix::from_vertices(r, p);
            window_filter(&candidates, sorted, |a, b| {
                Ok(f_dominates_scores(m.row(a), m.row(b), t[a].values(), t[b].values()))
            })
        }
    }
}

/// Tuples not F-dominated by any other tuple. All four algorithms return
/// the same set; finite families always use direct evaluation.
pub fn nd(r: &Relation, family: &FunctionFamily, alg: NdAlgorithm) -> Result<QueryResult> {
    let start = Instant::now();
    let ids = nd_ids(r, family, alg)?;
    let detail = format!("{alg}|{}", describe_family(family));
    Ok(QueryResult::new(Operator::Nd, ids, start.elapsed(), digest(Operator::Nd, &detail, r)))
}

fn check_polytope(r: &Relation, p: &WeightPolytope) -> Result<()> {
    if p.dim() != r.arity() {
        return Err(Error::Arity {
            expected: p.dim(),
            found: r.arity(),
        });
    }
    Ok(())
}

/// Whether some other tuple has the same score as `t` at every vertex, which
/// rules `t` out of PO regardless of anything else.
fn has_score_twin(m: &ScoreMatrix, n: usize, t: usize) -> bool {
    (0..n).any(|s| s != t && compare_scores(m.row(s), m.row(t)) == (true, false))
}

fn po_direct_ids(r: &Relation, p: &WeightPolytope) -> Result<Vec<usize>> {
    check_polytope(r, p)?;
    let family = FunctionFamily::Linear(p.clone());
    let nd = nd_ids(r, &family, NdAlgorithm::Sve1)?;
    let m = ScoreMatrix::from_vertices(r, p);
    let d = p.dim();
    let mut out = Vec::new();
    for &t in &nd {
        if has_score_twin(&m, r.len(), t) {
            continue;
        }
        if nd.len() == 1 {
            out.push(t);
            continue;
        }
        // Variables: w (d), margin. Maximize the margin by which t beats
        // every other ND member under some w in the polytope.
        let mut objective = vec![0.0; d];
        objective.push(1.0);
        let mut lp = p.program_with_extra(objective, 1);
        lp.set_bound(d, VarBound::Free);
        let tv = r.tuples()[t].values();
        for &s in nd.iter().filter(|&&s| s != t) {
            let sv = r.tuples()[s].values();
            let mut row: Vec<f64> = sv.iter().zip(tv).map(|(a, b)| b - a).collect();
            row.push(1.0);
            lp.add_less_eq(row, 0.0);
        }
        match lp.solve()? {
            LpSolution::Optimal {
                objective_value, ..
            } if objective_value > SCORE_TOLERANCE => out.push(t),
            LpSolution::Optimal { .. } => {}
            LpSolution::Unbounded => out.push(t),
            LpSolution::Infeasible => {
                return Err(Error::Numerical("margin LP infeasible over a non-empty polytope".into()))
            }
        }
    }
    Ok(out)
}

/// Potentially optimal tuples: those that are the strict unique best under
/// some weight vector of the polytope. Solved with one LP per ND member.
pub fn po_direct(r: &Relation, p: &WeightPolytope) -> Result<QueryResult> {
    let start = Instant::now();
    let ids = po_direct_ids(r, p)?;
    let detail = format!("direct|{}", describe_family(&FunctionFamily::Linear(p.clone())));
    Ok(QueryResult::new(Operator::Po, ids, start.elapsed(), digest(Operator::Po, &detail, r)))
}

fn po_pond_ids(r: &Relation, p: &WeightPolytope) -> Result<Vec<usize>> {
    check_polytope(r, p)?;
    let family = FunctionFamily::Linear(p.clone());
    let mut cands = nd_ids(r, &family, NdAlgorithm::Sve1)?;
    let m = ScoreMatrix::from_vertices(r, p);
    if cands.len() <= 1 {
        cands.retain(|&t| !has_score_twin(&m, r.len(), t));
        return Ok(cands);
    }
    let keys = sort_keys(r, &family);
    order_by_keys(r, &keys, &mut cands);

    // Sufficient-condition rounds: blends of the best-keyed few candidates,
    // doubling the blend size each round, tried on candidates from the back.
    let mut blend = 2;
    while cands.len() >= 2 && blend < cands.len() {
        let snapshot = cands.clone();
        for &t in snapshot.iter().rev() {
            let pool: Vec<&[f64]> = cands
                .iter()
                .filter(|&&s| s != t)
                .take(blend)
                .map(|&s| m.row(s))
                .collect();
            if pool.is_empty() {
                continue;
            }
            if blend_slack(m.row(t), &pool)?.is_some_and(|s| s > SCORE_TOLERANCE) {
                cands.retain(|&s| s != t);
            }
        }
        blend *= 2;
    }

    // Exact pass against a fixed pool. A candidate survives only if no blend
    // of the others is at least as good at every vertex.
    let pool = cands.clone();
    let mut out = Vec::new();
    for &t in &pool {
        let others: Vec<&[f64]> = pool.iter().filter(|&&s| s != t).map(|&s| m.row(s)).collect();
        if blend_slack(m.row(t), &others)?.is_none() && !has_score_twin(&m, r.len(), t) {
            out.push(t);
        }
    }
    Ok(out)
}

/// PO computed from ND by pruning members F-dominated by convex
/// combinations of other members. Same set as [`po_direct`].
pub fn po_pond(r: &Relation, p: &WeightPolytope) -> Result<QueryResult> {
    let start = Instant::now();
    let ids = po_pond_ids(r, p)?;
    let detail = format!("pond|{}", describe_family(&FunctionFamily::Linear(p.clone())));
    Ok(QueryResult::new(Operator::Po, ids, start.elapsed(), digest(Operator::Po, &detail, r)))
}

/// PO over a finite family: the union of every member's strict unique
/// minimizer.
pub fn po_finite(r: &Relation, members: &[ScoringFunction]) -> Result<QueryResult> {
    let start = Instant::now();
    let family = FunctionFamily::finite(members.to_vec())?;
    family.check_arity(r.arity())?;
    let mut ids = Vec::new();
    for f in members {
        let scores: Vec<f64> = r.tuples().iter().map(|t| f.eval_unchecked(t.values())).collect();
        let Some((best, &low)) = scores.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) else {
            continue;
        };
        let unique = scores
            .iter()
            .enumerate()
            .all(|(i, s)| i == best || *s > low + SCORE_TOLERANCE);
        if unique {
            ids.push(best);
        }
    }
    let detail = format!("finite|{}", describe_family(&family));
    Ok(QueryResult::new(Operator::Po, ids, start.elapsed(), digest(Operator::Po, &detail, r)))
}

/// PO for any family. Finite families ignore `method`.
pub fn po(r: &Relation, family: &FunctionFamily, method: PoMethod) -> Result<QueryResult> {
    match (family, method) {
        (FunctionFamily::Finite(fs), _) => po_finite(r, fs),
        (FunctionFamily::Linear(p), PoMethod::Direct) => po_direct(r, p),
        (FunctionFamily::Linear(p), PoMethod::Pond) => po_pond(r, p),
    }
}
