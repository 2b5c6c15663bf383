//! Exact engine for lattice sums of small connected multigraphs.
//!
//! The crate enumerates connected n-edge multigraph topologies, evaluates
//! their weighted sums over Z^d as exact Laurent polynomials in the dimension
//! d, reduces graphs with bridge edges to bridge-free ones, and verifies the
//! exponent structure of the results. A finite-torus evaluator provides an
//! independent ground truth for the same sums before the large-lattice limit.
//!
//! All engine arithmetic is exact rational; the polynomial core is generic
//! over the scalar type so the same code evaluates with `f64` where only an
//! approximation is wanted.

pub mod catalog;
pub mod embed;
pub mod graph;
pub mod poly;
pub mod reduce;
pub mod torus;
pub mod verify;
pub mod weighted;

use thiserror::Error;

/// Exact scalar used throughout the engine.
pub type Rational = num::BigRational;
/// Embedding-count polynomial in the dimension d (nonnegative powers only).
pub type DimPoly = poly::Polynomial<Rational>;
/// Weighted-sum result: Laurent polynomial in d.
pub type LaurentPoly = poly::Laurent<Rational>;

pub use catalog::{enumerate_topologies, kind_assignments, TopologyCatalog, GENERATOR_VERSION};
pub use embed::{count_embeddings, embedding_polynomial, EmbedCache};
pub use graph::{
    bridges, canonicalize, ground_float_split, is_nondegenerate, Edge, EdgeKind, GroundFloatSplit,
    Multigraph, Topology,
};
pub use reduce::{
    mark_bridges_wavy, reduce_free_edge, reduce_to_nondegenerate, survives_limit, BridgeOrder,
    MatchingPattern, Reduction, SignedGraphTerm,
};
pub use torus::{
    extrapolate_branch, extrapolate_limit, finite_branch_sum, finite_weighted_sum, NSeries,
    TorusSpec,
};
pub use verify::{
    path_decomposition, validate_path_decomposition, verify_ear_degree_bound, verify_form,
    verify_sweep, FormReport, PathDecomposition, SweepReport,
};
pub use weighted::{
    assemble_kernel, assignment_branches, laurent_from_terms, topology_reduction, weighted_sum,
    Branch, KernelResult, PsiTable,
};

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("missing psi coefficients for topology hashes: {0:?}")]
    MissingPsi(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Serde helpers for exact rationals as "p/q" strings.
pub(crate) mod ratstr {
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        Rational::from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// Integer as an exact rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// The fraction p/q as an exact rational. Panics if q = 0.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}
