#![allow(dead_code)]

use flexsky::{
    f_dominates, gen_synthetic, pareto_dominates, Distribution, FunctionFamily, LinearConstraint,
    Method, Relation, ScoringFunction, SyntheticSpec, Term,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const DISTRIBUTIONS: [Distribution; 3] = [
    Distribution::Independent,
    Distribution::Correlated,
    Distribution::Anticorrelated,
];

/// A synthetic relation; a quarter of them are rounded to one decimal so
/// exact ties and duplicates show up.
pub fn random_relation(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Relation {
    let spec = SyntheticSpec {
        n,
        d,
        distribution: DISTRIBUTIONS[rng.random_range(0..3)],
        seed: rng.random(),
    };
    let r = gen_synthetic(&spec).unwrap();
    if rng.random_bool(0.25) {
        let rows = r
            .tuples()
            .iter()
            .map(|t| t.values().iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>());
        Relation::from_rows(d, rows).unwrap()
    } else {
        r
    }
}

/// A point strictly inside the simplex.
pub fn interior_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// `count` random half-spaces that all keep `center` strictly inside, so
/// the polytope has a full-dimensional relative interior.
pub fn constraints_around(rng: &mut ChaCha8Rng, center: &[f64], count: usize) -> Vec<LinearConstraint> {
    (0..count)
        .map(|_| {
            let coeffs: Vec<f64> = center.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let at: f64 = coeffs.iter().zip(center).map(|(a, b)| a * b).sum();
            let margin = rng.random_range(0.01..0.2);
            if rng.random_bool(0.5) {
                LinearConstraint::le(coeffs, at + margin)
            } else {
                LinearConstraint::ge(coeffs, at - margin)
            }
        })
        .collect()
}

pub fn random_constraints(rng: &mut ChaCha8Rng, d: usize, max: usize) -> Vec<LinearConstraint> {
    let center = interior_point(rng, d);
    let count = rng.random_range(0..=max);
    constraints_around(rng, &center, count)
}

/// A finite family of random monotone power sums.
pub fn random_finite_family(rng: &mut ChaCha8Rng, d: usize) -> FunctionFamily {
    let members = (0..rng.random_range(1..=4))
        .map(|_| {
            let terms = (0..d)
                .map(|attr| Term {
                    attr,
                    coeff: if rng.random_bool(0.8) { rng.random_range(0.1..2.0) } else { 0.0 },
                    exp: [1.0, 1.0, 2.0, 3.0][rng.random_range(0..4)],
                })
                .collect::<Vec<_>>();
            let mut terms = terms;
            if terms.iter().all(|t| t.coeff == 0.0) {
                terms[0].coeff = 1.0;
            }
            ScoringFunction::new(terms).unwrap()
        })
        .collect();
    FunctionFamily::finite(members).unwrap()
}

/// Quadratic skyline straight from the predicate.
pub fn naive_sky(r: &Relation) -> Vec<usize> {
    let t = r.tuples();
    (0..t.len())
        .filter(|&i| !t.iter().any(|s| pareto_dominates(s, &t[i]).unwrap()))
        .collect()
}

/// Quadratic ND straight from the predicate.
pub fn naive_nd(r: &Relation, family: &FunctionFamily, method: Method) -> Vec<usize> {
    let t = r.tuples();
    (0..t.len())
        .filter(|&i| !t.iter().any(|s| f_dominates(s, &t[i], family, method).unwrap()))
        .collect()
}

pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

/// Solves a square system by Gauss-Jordan elimination with full row
/// search; `None` when it is (numerically) singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Maximum of `c·x` over `{x >= 0, a x <= b}` by enumerating every basic
/// solution; `None` when no vertex is feasible. Only valid for bounded
/// feasible regions.
pub fn brute_force_lp(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    // Every facet as (row, rhs): the given rows, then -x_i <= 0.
    let mut facets: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        facets.push((row, 0.0));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for active in itertools::Itertools::combinations(0..facets.len(), n) {
        let rows = active.iter().map(|&i| facets[i].0.clone()).collect();
        let rhs = active.iter().map(|&i| facets[i].1).collect();
        let Some(x) = solve_square(rows, rhs) else { continue };
        let feasible = facets
            .iter()
            .all(|(row, r)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= r + 1e-9);
        if feasible {
            let value: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, x));
            }
        }
    }
    best
}
