//! Skyline, restricted skyline and top-k operators over relations of
//! numeric tuples.
//!
//! Values live in canonical space: non-negative, lower is better. A
//! [`FunctionFamily`] is either a finite set of monotone scoring functions or
//! every weighted sum whose weights lie in a [`WeightPolytope`]. Given one:
//!
//! * [`nd`] keeps tuples no other tuple beats under every member of the family;
//! * [`po`] keeps tuples that are the unique best for at least one member;
//! * [`sky`] is the plain Pareto skyline, the case with no restriction at all.
//!
//! ```
//! use flexsky::{nd, po, sky, LinearConstraint, FunctionFamily, NdAlgorithm, PoMethod, Relation, WeightPolytope};
//!
//! let r = Relation::from_rows(2, vec![vec![0.1, 0.9], vec![0.3, 0.4], vec![0.9, 0.1]])?;
//! let p = WeightPolytope::new(2, vec![LinearConstraint::ge(vec![1.0, 0.0], 0.6)])?;
//! let family = FunctionFamily::linear(p.clone());
//!
//! assert_eq!(sky(&r).ids, vec![0, 1, 2]);
// Tuple 2 is only best when the first weight is below 0.6.
//! assert_eq!(nd(&r, &family, NdAlgorithm::Sve1)?.ids, vec![0, 1]);
//! assert_eq!(po(&r, &family, PoMethod::Direct)?.ids, vec![0, 1]);
//! # Ok::<(), flexsky::Error>(())
//! ```

pub mod data_io;
pub mod digest;
pub mod dominance;
pub mod error;
pub mod lp;
pub mod model;
pub mod operators;
pub mod polytope;
pub mod ranking;

pub use data_io::{
    function_from_raw_weights, gen_synthetic, load_csv, normalize_relation, parse_constraints,
    parse_family, read_csv, write_csv, DatasetConfig, Distribution, SyntheticSpec,
};
pub use dominance::{
    convex_combo_f_dominates, convex_combo_weakly_f_dominates, f_dominates, pareto_dominates,
    Method,
};
pub use error::{Error, Result};
pub use lp::{LpProblem, LpSolution, LpStatus, VarBound};
pub use model::{
    linear_score, AttributeSpec, ColumnScale, Direction, FunctionFamily, Relation, Schema,
    ScoringFunction, Term, Tuple,
};
pub use operators::{
    nd, po, po_direct, po_finite, po_pond, sky, topo_sort, NdAlgorithm, Operator, PoMethod,
    QueryResult,
};
pub use polytope::{ConstraintOp, LinearConstraint, WeightPolytope};
pub use ranking::{centroid_function, precision, ranking, recall, topk};

// The guide's snippets run as doctests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/data-model.md")]
    struct DataModel;
    #[doc = include_str!("../../../book/src/dominance.md")]
    struct Dominance;
    #[doc = include_str!("../../../book/src/weight-polytopes.md")]
    struct WeightPolytopes;
    #[doc = include_str!("../../../book/src/skyline-and-nd.md")]
    struct SkylineAndNd;
    #[doc = include_str!("../../../book/src/potentially-optimal.md")]
    struct PotentiallyOptimal;
    #[doc = include_str!("../../../book/src/ranking.md")]
    struct Ranking;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
