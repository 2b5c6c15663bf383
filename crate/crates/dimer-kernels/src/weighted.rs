//! Assembly of the large-lattice weighted sum W_T(d) of all graphs of a
//! topology as an exact Laurent polynomial in d, and of kernel values from
//! per-topology sums with externally supplied, dimension-independent
//! coefficients.
//!
//! Pipeline per topology: loop edges stay solid (the dashed variants vanish
//! in the limit), bridges enter wavy, the reduction expands them into
//! all-solid bridge-free terms, and each term contributes
//! coefficient * (1/(2d))^n * (embedding polynomial).

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde_json::json;

use crate::catalog::TopologyCatalog;
use crate::embed::EmbedCache;
use crate::graph::{bridges, ground_float_split, EdgeKind, Multigraph, Topology};
use crate::poly::Laurent;
use crate::reduce::{mark_bridges_wavy, reduce_to_nondegenerate, BridgeOrder, Reduction};
use crate::verify::{verify_form, FormReport};
use crate::{rat, ratio, Error, LaurentPoly, Rational, Result};

/// Full reduction of a topology's canonical representative.
pub fn topology_reduction(t: &Topology, order: BridgeOrder) -> Result<Reduction> {
    reduce_to_nondegenerate(&mark_bridges_wavy(t.canonical()), order)
}

/// Sum the reduced terms into the Laurent weighted sum: each all-solid term
/// graph contributes coefficient * (1/(2d))^n * count polynomial.
pub fn laurent_from_terms(n: usize, red: &Reduction, cache: &EmbedCache) -> Result<LaurentPoly> {
    let scale = ratio(1, 1i64 << n);
    let mut w = LaurentPoly::zero();
    for term in &red.terms {
        let poly = cache.embedding_polynomial(&term.graph)?;
        let contrib = Laurent::from_polynomial(&poly, -(n as i64))
            .scale(&(term.coefficient.clone() * scale.clone()));
        w = &w + &contrib;
    }
    Ok(w)
}

/// Large-lattice weighted sum of all graphs of topology `t` with vertex 0
/// fixed and the others summed over Z^d, as an exact Laurent polynomial.
pub fn weighted_sum(t: &Topology, cache: &EmbedCache) -> Result<LaurentPoly> {
    let red = topology_reduction(t, BridgeOrder::LowestId)?;
    laurent_from_terms(t.edge_count(), &red, cache)
}

/// One surviving kind assignment (dashed edges only on bridges) together
/// with its own large-lattice limit.
#[derive(Debug, Clone)]
pub struct Branch {
    pub kinds: Vec<EdgeKind>,
    pub solid_count: u32,
    pub contribution: LaurentPoly,
}

/// Per-assignment limits, computed by an independent route: a dashed bridge
/// detaches its float (one factor of -1), solid components contribute their
/// embedding polynomials. Summing the branches reproduces `weighted_sum`.
pub fn assignment_branches(t: &Topology, cache: &EmbedCache) -> Result<Vec<Branch>> {
    let g = t.canonical();
    let bridge_ids: Vec<usize> = bridges(g).into_iter().collect();
    let n = g.edge_count();
    let mut out = Vec::with_capacity(1 << bridge_ids.len());
    for mask in 0u32..(1 << bridge_ids.len()) {
        let dashed: BTreeSet<usize> = bridge_ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &id)| id)
            .collect();
        let kinds: Vec<EdgeKind> = g
            .edges()
            .iter()
            .map(|e| {
                if dashed.contains(&e.id) {
                    EdgeKind::Dashed
                } else {
                    EdgeKind::Solid
                }
            })
            .collect();
        let assigned = g.with_kinds(&kinds)?;
        let contribution = branch_limit(&assigned, cache)?;
        out.push(Branch {
            kinds,
            solid_count: (n - dashed.len()) as u32,
            contribution,
        });
    }
    Ok(out)
}

fn branch_limit(g: &Multigraph, cache: &EmbedCache) -> Result<LaurentPoly> {
    let dashed = g
        .edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::Dashed)
        .map(|e| e.id)
        .min();
    match dashed {
        None => {
            let n = g.edge_count();
            let poly = cache.embedding_polynomial(g)?;
            Ok(Laurent::from_polynomial(&poly, -(n as i64)).scale(&ratio(1, 1i64 << n)))
        }
        Some(id) => {
            // the dashed edge must be a bridge; its float detaches in the
            // limit with a single factor of -1
            let split = ground_float_split(g, id)?;
            let ground = extract_piece(g, &split.ground_vertices, 0);
            let float = extract_piece(g, &split.float_vertices, split.float_anchor);
            let wg = branch_limit(&ground, cache)?;
            let wf = branch_limit(&float, cache)?;
            Ok((&wg * &wf).scale(&rat(-1)))
        }
    }
}

/// Induced subgraph on `vertices` with `pinned` relabeled to 0 and the rest
/// compacted in ascending order. Edge ids and kinds are preserved.
fn extract_piece(g: &Multigraph, vertices: &BTreeSet<usize>, pinned: usize) -> Multigraph {
    let mut order: Vec<usize> = vec![pinned];
    order.extend(vertices.iter().copied().filter(|&v| v != pinned));
    let relabel: BTreeMap<usize, usize> = order
        .iter()
        .enumerate()
        .map(|(new, &old)| (old, new))
        .collect();
    let edges = g
        .edges()
        .iter()
        .filter(|e| vertices.contains(&e.a) && vertices.contains(&e.b))
        .map(|e| crate::graph::Edge {
            a: relabel[&e.a],
            b: relabel[&e.b],
            kind: e.kind,
            id: e.id,
        })
        .collect();
    Multigraph::new(vertices.len(), edges).expect("piece of a valid graph is valid")
}

/// Dimension-independent per-topology coefficients, supplied externally.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    pub values: BTreeMap<String, Rational>,
    pub source: String,
}

impl PsiTable {
    pub fn new(values: BTreeMap<String, Rational>, source: impl Into<String>) -> Self {
        Self {
            values,
            source: source.into(),
        }
    }

    /// The same value for every topology of a catalog.
    pub fn uniform(catalog: &TopologyCatalog, value: Rational, source: impl Into<String>) -> Self {
        let values = catalog
            .entries
            .iter()
            .map(|t| (t.hash().to_string(), value.clone()))
            .collect();
        Self::new(values, source)
    }

    /// Parse the flat JSON map {"<hash>": "p/q", ...}.
    pub fn from_json_str(s: &str, source: impl Into<String>) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(s)?;
        let mut values = BTreeMap::new();
        for (hash, v) in raw {
            let r = Rational::from_str(&v)
                .map_err(|_| Error::InvalidInput(format!("bad rational {v:?} for {hash}")))?;
            values.insert(hash, r);
        }
        Ok(Self::new(values, source))
    }

    pub fn get(&self, hash: &str) -> Option<&Rational> {
        self.values.get(hash)
    }
}

/// Assembled kernel value for one edge count.
#[derive(Debug, Clone)]
pub struct KernelResult {
    pub n: u32,
    pub value: LaurentPoly,
    pub per_topology: BTreeMap<String, LaurentPoly>,
}

impl KernelResult {
    pub fn to_json(&self) -> serde_json::Value {
        let per: serde_json::Map<String, serde_json::Value> = self
            .per_topology
            .iter()
            .map(|(h, w)| (h.clone(), json!(w.to_string_map())))
            .collect();
        json!({
            "n": self.n,
            "value": self.value.to_string_map(),
            "perTopology": per,
        })
    }
}

/// Kernel assembly: value = sum over topologies of psi(T) * W_T. The form of
/// the assembled value is re-checked and returned alongside.
pub fn assemble_kernel(
    catalog: &TopologyCatalog,
    psi: &PsiTable,
    cache: &EmbedCache,
) -> Result<(KernelResult, FormReport)> {
    let missing: Vec<String> = catalog
        .entries
        .iter()
        .filter(|t| psi.get(t.hash()).is_none())
        .map(|t| t.hash().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPsi(missing));
    }
    let mut per_topology = BTreeMap::new();
    let mut value = LaurentPoly::zero();
    for t in &catalog.entries {
        let w = weighted_sum(t, cache)?;
        value = &value + &w.scale(psi.get(t.hash()).unwrap());
        per_topology.insert(t.hash().to_string(), w);
    }
    let report = verify_form(&value, catalog.n, "assembled");
    Ok((
        KernelResult {
            n: catalog.n,
            value,
            per_topology,
        },
        report,
    ))
}
