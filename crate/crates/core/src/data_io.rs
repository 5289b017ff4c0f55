//! Dataset ingestion, normalization, configuration parsing and synthetic
//! workload generation.
//!
//! Ingested data is min-max normalized per column into canonical space:
//! `[0, 1]`, lower is better. Maximize columns are flipped, constant columns
//! become all zeros.
//!
//! File formats:
//!
//! * dataset: UTF-8 CSV with a header row; columns not named in the schema
//!   (labels, for instance) are ignored.
//! * schema: `{"attributes":[{"name":"hp","direction":"max"}, ...]}`
//! * constraints: `[{"coeffs":[1,0],"op":">=","rhs":0.6}, ...]`
//! * family: `{"finite":[[{"attr":0,"coeff":1,"exp":2}, ...], ...]}` or
//!   `{"linear":{"constraints":[...]}}`

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    AttributeSpec, ColumnScale, Direction, FunctionFamily, Relation, Schema, ScoringFunction,
    Term, Tuple,
};
use crate::polytope::{LinearConstraint, WeightPolytope};

/// PRNG behind [`gen_synthetic`]; recorded in generated metadata.
pub const PRNG_ALGORITHM: &str = "chacha8";

/// Jitter scale of the correlated and anticorrelated generators.
const JITTER_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    #[default]
    #[serde(rename = "minmax")]
    MinMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub attributes: Vec<AttributeSpec>,
    #[serde(default)]
    pub normalization: Normalization,
}

impl DatasetConfig {
    pub fn new(attributes: Vec<AttributeSpec>) -> Self {
        Self {
            attributes,
            normalization: Normalization::MinMax,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::parse("schema", e.to_string()))?;
        cfg.schema()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn schema(&self) -> Result<Schema> {
        Schema::new(self.attributes.clone())
    }
}

/// Reads a CSV dataset and normalizes it.
pub fn load_csv(path: impl AsRef<Path>, config: &DatasetConfig) -> Result<Relation> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, config)
}

pub fn read_csv<R: Read>(reader: R, config: &DatasetConfig) -> Result<Relation> {
    let schema = config.schema()?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse("header", e.to_string()))?
        .clone();
    let columns: Vec<usize> = schema
        .attributes()
        .iter()
        .map(|a| {
            headers.iter().position(|h| h == a.name).ok_or_else(|| {
                Error::parse("header", format!("missing column `{}`", a.name))
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::parse(format!("row {}", i + 1), e.to_string()))?;
        let row = columns
            .iter()
            .zip(schema.attributes())
            .map(|(&c, a)| {
                let cell = record.get(c).unwrap_or("");
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::parse(
                            format!("row {}, column `{}`", i + 1, a.name),
                            format!("`{cell}` is not a finite number"),
                        )
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    normalize_relation(rows, config)
}

/// Min-max normalizes raw rows into canonical space.
pub fn normalize_relation(raw_rows: Vec<Vec<f64>>, config: &DatasetConfig) -> Result<Relation> {
    let schema = config.schema()?;
    let d = schema.arity();
    for (i, row) in raw_rows.iter().enumerate() {
        if row.len() != d {
            return Err(Error::parse(
                format!("row {}", i + 1),
                format!("expected {d} values, found {}", row.len()),
            ));
        }
    }
    let scales: Vec<ColumnScale> = schema
        .attributes()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let (min, max) = raw_rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            });
            let (min, max) = if raw_rows.is_empty() { (0.0, 0.0) } else { (min, max) };
            ColumnScale {
                min,
                max,
                direction: a.direction,
            }
        })
        .collect();
    let tuples = raw_rows
        .into_iter()
        .enumerate()
        .map(|(id, raw)| {
            let values = raw.iter().zip(&scales).map(|(v, s)| s.normalize(*v)).collect();
            Tuple::with_raw(id, values, raw)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Relation::new(schema, tuples)?.with_scales(scales))
}

/// Writes the raw values with the schema's header.
pub fn write_csv<W: Write>(r: &Relation, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(r.schema().attributes().iter().map(|a| a.name.as_str()))
        .map_err(io)?;
    for t in r.tuples() {
        w.write_record(t.raw_values().iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Independent,
    Correlated,
    Anticorrelated,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::Correlated => "correlated",
            Self::Anticorrelated => "anticorrelated",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independent" | "ind" => Ok(Self::Independent),
            "correlated" | "cor" => Ok(Self::Correlated),
            "anticorrelated" | "anti" => Ok(Self::Anticorrelated),
            _ => Err(Error::Config(format!("unknown distribution `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub distribution: Distribution,
    pub seed: u64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seeded synthetic relation in canonical space.
///
/// Stream 0 drives per-row draws shared across columns; column `j` draws
/// from stream `j + 1`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Relation> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::Validation("synthetic spec needs n >= 1 and d >= 1".into()));
    }
    let d = spec.d;
    let mut base = stream(spec.seed, 0);
    let mut cols: Vec<ChaCha8Rng> = (0..d as u64).map(|j| stream(spec.seed, j + 1)).collect();
    let jitter = Normal::new(0.0, JITTER_SIGMA).expect("valid sigma");

    let mut rows = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let row: Vec<f64> = match spec.distribution {
            Distribution::Independent => cols.iter_mut().map(|c| c.random::<f64>()).collect(),
            Distribution::Correlated => {
                let u: f64 = base.random();
                cols.iter_mut()
                    .map(|c| (u + jitter.sample(c)).clamp(0.0, 1.0))
                    .collect()
            }
            Distribution::Anticorrelated => {
                // Project a uniform point onto a plane near Σx = d/2.
                let target = d as f64 / 2.0 + jitter.sample(&mut base);
                let mut x: Vec<f64> = cols.iter_mut().map(|c| c.random::<f64>()).collect();
                let shift = (target - x.iter().sum::<f64>()) / d as f64;
                x.iter_mut().for_each(|v| *v = (*v + shift).clamp(0.0, 1.0));
                x
            }
        };
        rows.push(row);
    }
    let tuples = rows
        .into_iter()
        .enumerate()
        .map(|(id, v)| Tuple::new(id, v))
        .collect::<Result<Vec<_>>>()?;
    let scales = vec![
        ColumnScale {
            min: 0.0,
            max: 1.0,
            direction: Direction::Minimize
        };
        d
    ];
    Ok(Relation::new(Schema::anonymous(d)?, tuples)?.with_scales(scales))
}

#[derive(Deserialize)]
struct RawConstraint {
    coeffs: Vec<f64>,
    op: String,
    rhs: f64,
}

fn constraint_from_value(v: Value, index: usize, d: usize) -> Result<LinearConstraint> {
    let loc = || format!("constraint {index}");
    let raw: RawConstraint = serde_json::from_value(v).map_err(|e| Error::parse(loc(), e.to_string()))?;
    if raw.coeffs.len() != d {
        return Err(Error::parse(
            loc(),
            format!("expected {d} coefficients, found {}", raw.coeffs.len()),
        ));
    }
    let op = match raw.op.as_str() {
        "<=" => crate::polytope::ConstraintOp::Le,
        ">=" => crate::polytope::ConstraintOp::Ge,
        other => return Err(Error::parse(loc(), format!("unknown operator `{other}`"))),
    };
    Ok(LinearConstraint::new(raw.coeffs, op, raw.rhs))
}

fn constraints_from_value(v: Value, d: usize) -> Result<Vec<LinearConstraint>> {
    let Value::Array(items) = v else {
        return Err(Error::parse("constraints", "expected a JSON array"));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| constraint_from_value(item, i, d))
        .collect()
}

/// Parses a JSON constraint list over `d` weights.
pub fn parse_constraints(text: &str, d: usize) -> Result<Vec<LinearConstraint>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::parse("constraints", e.to_string()))?;
    constraints_from_value(v, d)
}

#[derive(Deserialize)]
struct RawTerm {
    attr: usize,
    coeff: f64,
    #[serde(default = "one")]
    exp: f64,
}

fn one() -> f64 {
    1.0
}

fn member_from_value(v: Value, index: usize, d: usize) -> Result<ScoringFunction> {
    let terms: Vec<RawTerm> =
        serde_json::from_value(v).map_err(|e| Error::parse(format!("member {index}"), e.to_string()))?;
    if let Some(t) = terms.iter().find(|t| t.attr >= d) {
        return Err(Error::Validation(format!(
            "member {index}: attribute {} out of range for {d} attributes",
            t.attr
        )));
    }
    ScoringFunction::new(
        terms
            .into_iter()
            .map(|t| Term {
                attr: t.attr,
                coeff: t.coeff,
                exp: t.exp,
            })
            .collect(),
    )
    .map_err(|e| match e {
        Error::Validation(m) => Error::Validation(format!("member {index}: {m}")),
        other => other,
    })
}

/// Parses a JSON function family over `d` attributes.
pub fn parse_family(text: &str, d: usize) -> Result<FunctionFamily> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::parse("family", e.to_string()))?;
    let finite = |members: Value| -> Result<FunctionFamily> {
        let Value::Array(items) = members else {
            return Err(Error::parse("family", "`finite` must be an array of members"));
        };
        let fs = items
            .into_iter()
            .enumerate()
            .map(|(i, m)| member_from_value(m, i, d))
            .collect::<Result<Vec<_>>>()?;
        FunctionFamily::finite(fs)
    };
    match v {
        Value::Array(_) => finite(v),
        Value::Object(mut obj) => {
            if let Some(members) = obj.remove("finite") {
                finite(members)
            } else if let Some(mut linear) = obj.remove("linear") {
                let cs = match linear.get_mut("constraints") {
                    Some(c) => constraints_from_value(c.take(), d)?,
                    None => Vec::new(),
                };
                Ok(FunctionFamily::Linear(WeightPolytope::new(d, cs)?))
            } else {
                Err(Error::parse("family", "expected a `finite` or `linear` key"))
            }
        }
        _ => Err(Error::parse("family", "expected a JSON object or array")),
    }
}

/// Turns weights meant for raw attribute values into the canonical-space
/// weighted sum that ranks tuples identically.
///
/// For a maximize column the raw utility `w·v` grows as the canonical value
/// shrinks; both are affine in each other with slope `range`, so the
/// canonical coefficient is `w * range`.
pub fn function_from_raw_weights(r: &Relation, weights: &[f64]) -> Result<ScoringFunction> {
    if weights.len() != r.arity() {
        return Err(Error::Arity {
            expected: r.arity(),
            found: weights.len(),
        });
    }
    let coeffs: Vec<f64> = match r.scales() {
        Some(scales) => weights.iter().zip(scales).map(|(w, s)| w * s.range()).collect(),
        None => weights.to_vec(),
    };
    ScoringFunction::linear(&coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CARS: &str = "CAR,Horsepower,MPG\n\
        BMW,300,30\nAudi,250,35\nOpel,150,25\nHyundai,250,25\n\
        Toyota,100,50\nRenault,200,45\nSkoda,250,55\n";

    fn cars_config() -> DatasetConfig {
        DatasetConfig::from_json(
            r#"{"attributes":[{"name":"Horsepower","direction":"max"},{"name":"MPG","direction":"max"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn loads_cars() {
        let r = read_csv(CARS.as_bytes(), &cars_config()).unwrap();
        assert_eq!(r.len(), 7);
        assert_eq!(r.tuple(0).unwrap().raw_values(), &[300.0, 30.0]);
        // HP spans 100..300: BMW is best, Toyota worst.
        assert_eq!(r.tuple(0).unwrap().values()[0], 0.0);
        assert_eq!(r.tuple(4).unwrap().values()[0], 1.0);
        assert!(r.tuples().iter().flat_map(|t| t.values()).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn empty_data_section() {
        let r = read_csv("CAR,Horsepower,MPG\n".as_bytes(), &cars_config()).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn header_mismatch_and_bad_cells() {
        let err = read_csv("CAR,HP,MPG\nBMW,1,2\n".as_bytes(), &cars_config()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        assert!(err.to_string().contains("Horsepower"));
        let err = read_csv("CAR,Horsepower,MPG\nBMW,fast,2\n".as_bytes(), &cars_config()).unwrap_err();
        assert!(err.to_string().contains("row 1") && err.to_string().contains("Horsepower"), "{err}");
        let err = read_csv("CAR,Horsepower,MPG\nBMW,1\n".as_bytes(), &cars_config()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn normalization_rules() {
        let cfg = DatasetConfig::new(vec![
            AttributeSpec::new("a", Direction::Minimize),
            AttributeSpec::new("b", Direction::Maximize),
            AttributeSpec::new("c", Direction::Maximize),
        ]);
        let r = normalize_relation(vec![vec![10.0, 1.0, 7.0], vec![20.0, 3.0, 7.0]], &cfg).unwrap();
        assert_eq!(r.tuple(0).unwrap().values(), &[0.0, 1.0, 0.0]);
        assert_eq!(r.tuple(1).unwrap().values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn csv_round_trip_preserves_raw_values() {
        let r = read_csv(CARS.as_bytes(), &cars_config()).unwrap();
        let mut out = Vec::new();
        write_csv(&r, &mut out).unwrap();
        let again = read_csv(out.as_slice(), &cars_config()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn synthetic_is_deterministic() {
        for distribution in [Distribution::Independent, Distribution::Correlated, Distribution::Anticorrelated] {
            let spec = SyntheticSpec { n: 50, d: 3, distribution, seed: 7 };
            let a = gen_synthetic(&spec).unwrap();
            assert_eq!(a, gen_synthetic(&spec).unwrap());
            assert_ne!(a, gen_synthetic(&SyntheticSpec { seed: 8, ..spec }).unwrap());
            assert!(a.tuples().iter().flat_map(|t| t.values()).all(|v| (0.0..=1.0).contains(v)));
        }
        let one = gen_synthetic(&SyntheticSpec { n: 1, d: 2, distribution: Distribution::Independent, seed: 1 }).unwrap();
        assert_eq!(one.len(), 1);
        assert!(gen_synthetic(&SyntheticSpec { n: 0, d: 2, distribution: Distribution::Independent, seed: 1 }).is_err());
    }

    #[test]
    fn synthetic_correlation_signs() {
        let corr = |dist| {
            let r = gen_synthetic(&SyntheticSpec { n: 4000, d: 2, distribution: dist, seed: 3 }).unwrap();
            let n = r.len() as f64;
            let (mx, my) = r.tuples().iter().fold((0.0, 0.0), |(a, b), t| (a + t.values()[0] / n, b + t.values()[1] / n));
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for t in r.tuples() {
                let (x, y) = (t.values()[0] - mx, t.values()[1] - my);
                sxy += x * y;
                sxx += x * x;
                syy += y * y;
            }
            sxy / (sxx * syy).sqrt()
        };
        assert!(corr(Distribution::Correlated) > 0.8);
        assert!(corr(Distribution::Anticorrelated) < -0.8);
        assert!(corr(Distribution::Independent).abs() < 0.1);
    }

    #[test]
    fn constraint_parsing() {
        let cs = parse_constraints(r#"[{"coeffs":[1,0],"op":">=","rhs":0.6}]"#, 2).unwrap();
        assert_eq!(cs, vec![LinearConstraint::ge(vec![1.0, 0.0], 0.6)]);
        assert!(parse_constraints("[]", 2).unwrap().is_empty());
        let err = parse_constraints(r#"[{"coeffs":[1,0],"op":"<=","rhs":1},{"coeffs":[1],"op":"<=","rhs":1}]"#, 2)
            .unwrap_err();
        assert!(err.to_string().contains("constraint 1"), "{err}");
        assert!(parse_constraints(r#"[{"coeffs":[1,0],"op":"<","rhs":1}]"#, 2).is_err());
    }

    #[test]
    fn family_parsing() {
        let fam = parse_family(
            r#"[[{"attr":0,"coeff":1,"exp":2},{"attr":1,"coeff":1,"exp":1}],
                [{"attr":0,"coeff":1,"exp":1},{"attr":1,"coeff":1,"exp":1}]]"#,
            2,
        )
        .unwrap();
        let FunctionFamily::Finite(fs) = fam else { panic!("expected finite") };
        let t = Tuple::new(0, vec![1.0, 5.0]).unwrap();
        assert_eq!(fs[0].evaluate(&t).unwrap(), 6.0);
        assert_eq!(fs[1].evaluate(&t).unwrap(), 6.0);

        let wrapped = parse_family(r#"{"finite":[[{"attr":1,"coeff":2}]]}"#, 2).unwrap();
        assert!(matches!(wrapped, FunctionFamily::Finite(ref f) if f.len() == 1));

        let FunctionFamily::Linear(p) = parse_family(r#"{"linear":{"constraints":[]}}"#, 2).unwrap() else {
            panic!("expected linear")
        };
        assert_eq!(p.vertices().len(), 2);

        let err = parse_family(r#"[[{"attr":0,"coeff":1,"exp":0.5}]]"#, 2).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = parse_family(r#"[[{"attr":0,"coeff":-1,"exp":1}]]"#, 2).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        assert!(parse_family(r#"[[{"attr":5,"coeff":1}]]"#, 2).is_err());
        assert_eq!(
            parse_family(r#"{"linear":{"constraints":[{"coeffs":[1,0],"op":">=","rhs":2}]}}"#, 2).unwrap_err(),
            Error::EmptyPolytope
        );
    }

    #[test]
    fn raw_weights_rank_like_raw_utility() {
        let r = read_csv(CARS.as_bytes(), &cars_config()).unwrap();
        let f = function_from_raw_weights(&r, &[0.8, 1.6]).unwrap();
        // Raw utilities: BMW 288, Audi 256, Opel 160, Hyundai 240,
        // Toyota 160, Renault 232, Skoda 288.
        let utility = [288.0, 256.0, 160.0, 240.0, 160.0, 232.0, 288.0];
        let scores: Vec<f64> = r.tuples().iter().map(|t| f.evaluate(t).unwrap()).collect();
        for i in 0..7 {
            for j in 0..7 {
                if utility[i] > utility[j] {
                    assert!(scores[i] < scores[j] - 1e-9);
                } else if utility[i] == utility[j] {
                    assert!((scores[i] - scores[j]).abs() <= 1e-9);
                }
            }
        }
    }
}
