//! Relational data model and scoring functions.
//!
//! Every tuple carries two views of its data: the raw values as ingested and
//! the canonical values every operator works on. Canonical values are
//! non-negative and lower is better; data loaded through [`crate::data_io`]
//! is additionally min-max normalized into `[0, 1]`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::WeightPolytope;

/// Polarity of a raw attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "min", alias = "minimize")]
    Minimize,
    #[serde(rename = "max", alias = "maximize")]
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub direction: Direction,
}

impl AttributeSpec {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            direction,
        }
    }
}

/// Ordered list of attributes. Names are nonempty and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Validation("schema needs at least one attribute".into()));
        }
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.name.trim().is_empty() {
                return Err(Error::Validation("attribute name is empty".into()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate attribute name `{}`",
                    a.name
                )));
            }
        }
        Ok(Self { attributes })
    }

    /// `d` minimize-direction attributes named `a0`, `a1`, ...
    pub fn anonymous(d: usize) -> Result<Self> {
        Self::new(
            (0..d)
                .map(|i| AttributeSpec::new(format!("a{i}"), Direction::Minimize))
                .collect(),
        )
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuple {
    id: usize,
    values: Vec<f64>,
    raw_values: Vec<f64>,
}

impl Tuple {
    /// A tuple whose raw values coincide with its canonical values.
    pub fn new(id: usize, values: Vec<f64>) -> Result<Self> {
        let raw = values.clone();
        Self::with_raw(id, values, raw)
    }

    pub fn with_raw(id: usize, values: Vec<f64>, raw_values: Vec<f64>) -> Result<Self> {
        if values.len() != raw_values.len() {
            return Err(Error::Arity {
                expected: values.len(),
                found: raw_values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!(
                "tuple {id}: canonical value {v} is not a finite non-negative number"
            )));
        }
        if raw_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("tuple {id}: non-finite raw value")));
        }
        Ok(Self {
            id,
            values,
            raw_values,
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// Canonical (lower-is-better) values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.raw_values
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }
}

/// Affine map from a raw column onto its canonical `[0, 1]` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnScale {
    pub min: f64,
    pub max: f64,
    pub direction: Direction,
}

impl ColumnScale {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn normalize(&self, v: f64) -> f64 {
        let range = self.range();
        if range <= 0.0 {
            return 0.0;
        }
        let x = match self.direction {
            Direction::Minimize => (v - self.min) / range,
            Direction::Maximize => (self.max - v) / range,
        };
        x.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    schema: Schema,
    tuples: Vec<Tuple>,
    scales: Option<Vec<ColumnScale>>,
}

impl Relation {
    pub fn new(schema: Schema, tuples: Vec<Tuple>) -> Result<Self> {
        let d = schema.arity();
        for (pos, t) in tuples.iter().enumerate() {
            if t.id != pos {
                return Err(Error::Validation(format!(
                    "tuple at position {pos} has id {}; ids must equal ingestion order",
                    t.id
                )));
            }
            if t.arity() != d {
                return Err(Error::Arity {
                    expected: d,
                    found: t.arity(),
                });
            }
        }
        Ok(Self {
            schema,
            tuples,
            scales: None,
        })
    }

    /// Builds a relation from canonical rows with an anonymous schema.
    pub fn from_rows<I, R>(d: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: Into<Vec<f64>>,
    {
        let tuples = rows
            .into_iter()
            .enumerate()
            .map(|(id, row)| Tuple::new(id, row.into()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Schema::anonymous(d)?, tuples)
    }

    pub(crate) fn with_scales(mut self, scales: Vec<ColumnScale>) -> Self {
        debug_assert_eq!(scales.len(), self.arity());
        self.scales = Some(scales);
        self
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn tuple(&self, id: usize) -> Option<&Tuple> {
        self.tuples.get(id)
    }

    /// Per-column normalization applied at ingestion, when known.
    pub fn scales(&self) -> Option<&[ColumnScale]> {
        self.scales.as_deref()
    }

    pub fn arity(&self) -> usize {
        self.schema.arity()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// One `coeff * x[attr]^exp` summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub attr: usize,
    pub coeff: f64,
    pub exp: f64,
}

/// Monotone sum of power terms over canonical attribute values.
///
/// Coefficients are non-negative and exponents at least one, which keeps
/// every member non-decreasing in each attribute on the non-negative orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringFunction {
    terms: Vec<Term>,
}

impl ScoringFunction {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if !t.coeff.is_finite() || t.coeff < 0.0 {
                return Err(Error::Validation(format!(
                    "term {i}: coefficient {} must be finite and non-negative",
                    t.coeff
                )));
            }
            if !t.exp.is_finite() || t.exp < 1.0 {
                return Err(Error::Validation(format!(
                    "term {i}: exponent {} must be at least 1",
                    t.exp
                )));
            }
        }
        if !terms.iter().any(|t| t.coeff > 0.0) {
            return Err(Error::Validation(
                "scoring function needs a term with positive coefficient".into(),
            ));
        }
        Ok(Self { terms })
    }

    /// The weighted sum `w · x`.
    pub fn linear(weights: &[f64]) -> Result<Self> {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(attr, &coeff)| Term {
                    attr,
                    coeff,
                    exp: 1.0,
                })
                .collect(),
        )
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|t| t.exp == 1.0)
    }

    /// Smallest arity a tuple needs for this function to be evaluable.
    pub fn min_arity(&self) -> usize {
        self.terms.iter().map(|t| t.attr + 1).max().unwrap_or(0)
    }

    /// Coefficient vector of length `d` when the function is linear.
    pub fn weight_vector(&self, d: usize) -> Option<Vec<f64>> {
        if !self.is_linear() || self.min_arity() > d {
            return None;
        }
        let mut w = vec![0.0; d];
        for t in &self.terms {
            w[t.attr] += t.coeff;
        }
        Some(w)
    }

    pub fn evaluate(&self, t: &Tuple) -> Result<f64> {
        self.check_arity(t.arity())?;
        Ok(self.eval_unchecked(t.values()))
    }

    pub(crate) fn check_arity(&self, d: usize) -> Result<()> {
        let need = self.min_arity();
        if need > d {
            return Err(Error::Arity {
                expected: need,
                found: d,
            });
        }
        Ok(())
    }

    pub(crate) fn eval_unchecked(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let x = values[t.attr];
                let p = if t.exp == 1.0 {
                    x
                } else if t.exp == 2.0 {
                    x * x
                } else {
                    x.powf(t.exp)
                };
                t.coeff * p
            })
            .sum()
    }
}

/// `w · t.values`.
pub fn linear_score(w: &[f64], t: &Tuple) -> Result<f64> {
    if w.len() != t.arity() {
        return Err(Error::Arity {
            expected: t.arity(),
            found: w.len(),
        });
    }
    if let Some(x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Validation(format!("weight {x} must be non-negative")));
    }
    Ok(dot(w, t.values()))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A set of monotone scoring functions.
#[derive(Debug, Clone)]
pub enum FunctionFamily {
    Finite(Vec<ScoringFunction>),
    /// Every weighted sum whose weight vector lies in the polytope.
    Linear(WeightPolytope),
}

impl FunctionFamily {
    pub fn finite(members: Vec<ScoringFunction>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Validation("finite family needs at least one member".into()));
        }
        Ok(FunctionFamily::Finite(members))
    }

    pub fn linear(polytope: WeightPolytope) -> Self {
        FunctionFamily::Linear(polytope)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, FunctionFamily::Linear(_))
    }

    pub(crate) fn check_arity(&self, d: usize) -> Result<()> {
        match self {
            FunctionFamily::Finite(fs) => fs.iter().try_for_each(|f| f.check_arity(d)),
            FunctionFamily::Linear(p) if p.dim() != d => Err(Error::Arity {
                expected: p.dim(),
                found: d,
            }),
            FunctionFamily::Linear(_) => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(terms: &[(usize, f64, f64)]) -> ScoringFunction {
        ScoringFunction::new(
            terms
                .iter()
                .map(|&(attr, coeff, exp)| Term { attr, coeff, exp })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn worked_example_scores() {
        let t = Tuple::new(0, vec![1.0, 5.0]).unwrap();
        let k = Tuple::new(1, vec![2.0, 4.0]).unwrap();
        let f1 = f(&[(0, 1.0, 2.0), (1, 1.0, 1.0)]);
        let f2 = f(&[(0, 1.0, 1.0), (1, 1.0, 1.0)]);
        let f3 = f(&[(0, 1.0, 1.0), (1, 1.0, 2.0)]);
        assert_eq!(f1.evaluate(&t).unwrap(), 6.0);
        assert_eq!(f1.evaluate(&k).unwrap(), 8.0);
        assert_eq!(f2.evaluate(&t).unwrap(), 6.0);
        assert_eq!(f2.evaluate(&k).unwrap(), 6.0);
        assert_eq!(f3.evaluate(&t).unwrap(), 26.0);
        assert_eq!(f3.evaluate(&k).unwrap(), 18.0);
        assert!(!f1.is_linear());
        assert!(f2.is_linear());
    }

    #[test]
    fn zero_tuple_scores_zero() {
        let z = Tuple::new(0, vec![0.0; 3]).unwrap();
        let g = f(&[(0, 2.0, 3.0), (2, 0.5, 1.0)]);
        assert_eq!(g.evaluate(&z).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_rejects_short_tuple() {
        let g = f(&[(2, 1.0, 1.0)]);
        let t = Tuple::new(0, vec![0.1, 0.2]).unwrap();
        assert_eq!(
            g.evaluate(&t),
            Err(Error::Arity {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn linear_score_examples() {
        let t = Tuple::new(0, vec![1.0, 5.0]).unwrap();
        assert_eq!(linear_score(&[1.0, 0.0], &t).unwrap(), 1.0);
        let t = Tuple::new(0, vec![2.0, 4.0]).unwrap();
        approx::assert_abs_diff_eq!(linear_score(&[0.6, 0.4], &t).unwrap(), 2.8, epsilon = 1e-12);
        let t = Tuple::new(0, vec![0.37, 0.37]).unwrap();
        approx::assert_abs_diff_eq!(linear_score(&[0.5, 0.5], &t).unwrap(), 0.37, epsilon = 1e-12);
        assert!(matches!(linear_score(&[1.0], &t), Err(Error::Arity { .. })));
        assert!(matches!(linear_score(&[-1.0, 2.0], &t), Err(Error::Validation(_))));
    }

    #[test]
    fn scoring_function_guards() {
        assert!(ScoringFunction::new(vec![Term { attr: 0, coeff: -1.0, exp: 1.0 }]).is_err());
        assert!(ScoringFunction::new(vec![Term { attr: 0, coeff: 1.0, exp: 0.5 }]).is_err());
        assert!(ScoringFunction::new(vec![Term { attr: 0, coeff: 0.0, exp: 1.0 }]).is_err());
        assert!(ScoringFunction::new(vec![]).is_err());
    }

    #[test]
    fn schema_rejects_duplicates_and_empty() {
        let a = AttributeSpec::new("x", Direction::Minimize);
        assert!(Schema::new(vec![a.clone(), a.clone()]).is_err());
        assert!(Schema::new(vec![]).is_err());
        assert!(Schema::new(vec![AttributeSpec::new(" ", Direction::Maximize)]).is_err());
    }

    #[test]
    fn relation_checks_ids_and_arity() {
        let s = Schema::anonymous(2).unwrap();
        let t1 = Tuple::new(1, vec![0.0, 0.0]).unwrap();
        assert!(Relation::new(s.clone(), vec![t1]).is_err());
        let t0 = Tuple::new(0, vec![0.0]).unwrap();
        assert!(Relation::new(s, vec![t0]).is_err());
    }

    proptest! {
        #[test]
        fn scoring_functions_are_monotone(
            terms in prop::collection::vec((0usize..4, 0.0f64..3.0, 1.0f64..4.0), 1..6),
            a in prop::collection::vec(0.0f64..1.0, 4),
            bump in prop::collection::vec(0.0f64..0.5, 4),
        ) {
            let terms: Vec<Term> = terms.into_iter().map(|(attr, coeff, exp)| Term { attr, coeff, exp }).collect();
            prop_assume!(terms.iter().any(|t| t.coeff > 0.0));
            let g = ScoringFunction::new(terms).unwrap();
            let b: Vec<f64> = a.iter().zip(&bump).map(|(x, y)| x + y).collect();
            let ta = Tuple::new(0, a).unwrap();
            let tb = Tuple::new(1, b).unwrap();
            prop_assert!(g.evaluate(&ta).unwrap() <= g.evaluate(&tb).unwrap());
        }

        #[test]
        fn linear_evaluate_matches_dot(
            w in prop::collection::vec(0.0f64..2.0, 3),
            x in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            prop_assume!(w.iter().any(|v| *v > 0.0));
            let g = ScoringFunction::linear(&w).unwrap();
            let t = Tuple::new(0, x).unwrap();
            let lhs = g.evaluate(&t).unwrap();
            let rhs = linear_score(&g.weight_vector(3).unwrap(), &t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
