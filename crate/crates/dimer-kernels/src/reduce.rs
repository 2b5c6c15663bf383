//! Graph elimination: the dashed-loop filter (contributions with a dashed
//! edge inside a closed loop vanish on the growing lattice) and the inductive
//! bridge reduction. Each bridge, carried as a wavy edge, is replaced by a
//! solid edge while subtracting one merged graph per way the float can land
//! on the ground; the recursion terminates in all-solid, bridge-free graphs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{
    bridges, ground_float_split, is_nondegenerate, EdgeKind, GroundFloatSplit, Multigraph,
};
use crate::{rat, Error, Rational, Result};

/// Keep/discard decision for a kind assignment: a dashed edge that lies in a
/// closed loop makes the whole contribution vanish in the limit.
pub fn survives_limit(g: &Multigraph) -> bool {
    let b = bridges(g);
    g.edges()
        .iter()
        .all(|e| e.kind != EdgeKind::Dashed || b.contains(&e.id))
}

/// Bridges become wavy, everything else solid. This is the entry marking for
/// the reduction pipeline: loop edges only survive solid, while both kinds of
/// a bridge are summed analytically inside the reduction identity.
pub fn mark_bridges_wavy(g: &Multigraph) -> Multigraph {
    let b = bridges(g);
    let kinds: Vec<EdgeKind> = g
        .edges()
        .iter()
        .map(|e| {
            if b.contains(&e.id) {
                EdgeKind::Wavy
            } else {
                EdgeKind::Solid
            }
        })
        .collect();
    g.with_kinds(&kinds).expect("marking keeps the graph valid")
}

/// Nonempty injective partial map from float vertices to ground vertices:
/// the exact coincidence pattern of one way the float bumps into the ground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingPattern {
    pub pairs: BTreeMap<usize, usize>,
}

/// All nonempty injective partial maps float -> ground, in a deterministic
/// order (float vertices ascending, skip-before-match).
pub fn matching_patterns(split: &GroundFloatSplit) -> Vec<MatchingPattern> {
    let floats: Vec<usize> = split.float_vertices.iter().copied().collect();
    let grounds: Vec<usize> = split.ground_vertices.iter().copied().collect();
    let mut out = Vec::new();
    let mut used = vec![false; grounds.len()];
    let mut current = BTreeMap::new();
    fn go(
        floats: &[usize],
        grounds: &[usize],
        used: &mut [bool],
        idx: usize,
        current: &mut BTreeMap<usize, usize>,
        out: &mut Vec<MatchingPattern>,
    ) {
        if idx == floats.len() {
            if !current.is_empty() {
                out.push(MatchingPattern {
                    pairs: current.clone(),
                });
            }
            return;
        }
        go(floats, grounds, used, idx + 1, current, out);
        for (gi, &gv) in grounds.iter().enumerate() {
            if used[gi] {
                continue;
            }
            used[gi] = true;
            current.insert(floats[idx], gv);
            go(floats, grounds, used, idx + 1, current, out);
            current.remove(&floats[idx]);
            used[gi] = false;
        }
    }
    go(&floats, &grounds, &mut used, 0, &mut current, &mut out);
    out
}

/// One pattern's outcome: the merged graph with coefficient -1, or a
/// zero-weight record when the merge would create a self-loop.
#[derive(Debug, Clone)]
pub struct ReductionStep {
    pub pattern: MatchingPattern,
    pub coefficient: Rational,
    pub graph: Option<Multigraph>,
}

/// Replace the sum over the float's offset by minus the sum over all merged
/// graphs, one per matching pattern. The free edge comes back solid; matched
/// float vertices are identified with their ground partners; labels are
/// compacted with vertex 0 preserved.
pub fn reduce_free_edge(g: &Multigraph, free_edge: usize) -> Result<Vec<ReductionStep>> {
    let e = g
        .edge_by_id(free_edge)
        .ok_or_else(|| Error::InvalidInput(format!("no edge with id {free_edge}")))?;
    if e.kind != EdgeKind::Wavy {
        return Err(Error::InvalidInput(format!(
            "free edge {free_edge} must be wavy, found {:?}",
            e.kind
        )));
    }
    let b = bridges(g);
    if !b.contains(&free_edge) {
        return Err(Error::InvalidInput(format!(
            "edge {free_edge} is not a bridge"
        )));
    }
    for edge in g.edges() {
        if !b.contains(&edge.id) && edge.kind != EdgeKind::Solid {
            return Err(Error::InvalidInput(format!(
                "loop edge {} must be solid before reduction",
                edge.id
            )));
        }
    }
    let split = ground_float_split(g, free_edge)?;
    let solidify = BTreeSet::from([free_edge]);
    let mut out = Vec::new();
    for pattern in matching_patterns(&split) {
        match g.merge_vertices(&pattern.pairs, &solidify) {
            Some(merged) => {
                debug_assert!(merged.vertex_count() < g.vertex_count());
                out.push(ReductionStep {
                    pattern,
                    coefficient: rat(-1),
                    graph: Some(merged),
                })
            }
            None => out.push(ReductionStep {
                pattern,
                coefficient: rat(0),
                graph: None,
            }),
        }
    }
    Ok(out)
}

/// Which wavy bridge to process next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeOrder {
    LowestId,
    HighestId,
}

/// Rational-weighted all-solid graph, the output unit of the full reduction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedGraphTerm {
    #[serde(rename = "coeff", with = "crate::ratstr")]
    pub coefficient: Rational,
    pub graph: Multigraph,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub terms: Vec<SignedGraphTerm>,
    pub zero_weight_dropped: usize,
}

/// Expand every wavy bridge until all terms are all-solid and bridge-free.
/// Coefficients are (-1)^steps; merged graphs that acquire a self-loop are
/// counted and dropped. Terminates because every merge loses a vertex.
pub fn reduce_to_nondegenerate(g: &Multigraph, order: BridgeOrder) -> Result<Reduction> {
    let b = bridges(g);
    for e in g.edges() {
        if b.contains(&e.id) {
            if e.kind != EdgeKind::Wavy {
                return Err(Error::InvalidInput(format!(
                    "bridge {} must enter the reduction wavy",
                    e.id
                )));
            }
        } else if e.kind != EdgeKind::Solid {
            return Err(Error::InvalidInput(format!(
                "loop edge {} must enter the reduction solid",
                e.id
            )));
        }
    }
    let mut terms = Vec::new();
    let mut dropped = 0usize;
    let mut stack: Vec<(i64, Multigraph)> = vec![(1, g.clone())];
    let budget = g.vertex_count() + 1;
    while let Some((sign, cur)) = stack.pop() {
        let wavy: Vec<usize> = cur
            .edges()
            .iter()
            .filter(|e| e.kind == EdgeKind::Wavy)
            .map(|e| e.id)
            .collect();
        if wavy.is_empty() {
            debug_assert!(cur.all_solid());
            debug_assert!(is_nondegenerate(&cur));
            terms.push(SignedGraphTerm {
                coefficient: rat(sign),
                graph: cur,
            });
            continue;
        }
        // merges strictly shrink the vertex set, so the step count per branch
        // is bounded by the vertex count
        if (g.vertex_count() - cur.vertex_count()) >= budget {
            return Err(Error::Consistency("reduction step budget exceeded".into()));
        }
        let target = match order {
            BridgeOrder::LowestId => *wavy.iter().min().unwrap(),
            BridgeOrder::HighestId => *wavy.iter().max().unwrap(),
        };
        for step in reduce_free_edge(&cur, target)? {
            match step.graph {
                Some(next) => stack.push((-sign, next)),
                None => dropped += 1,
            }
        }
    }
    Ok(Reduction {
        terms,
        zero_weight_dropped: dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::canonicalize;
    use crate::graph::testutil::{mg, mg_kinds, ring_ear_pendant};

    fn wavy_path3() -> Multigraph {
        mg_kinds(3, &[(0, 1, EdgeKind::Wavy), (1, 2, EdgeKind::Wavy)])
    }

    #[test]
    fn dashed_loop_edges_are_discarded() {
        let mixed = mg_kinds(2, &[(0, 1, EdgeKind::Solid), (0, 1, EdgeKind::Dashed)]);
        assert!(!survives_limit(&mixed));
        let both = mg_kinds(2, &[(0, 1, EdgeKind::Dashed), (0, 1, EdgeKind::Dashed)]);
        assert!(!survives_limit(&both));
        // a dashed bridge is kept: bridges are handled by the reduction
        let path = mg_kinds(3, &[(0, 1, EdgeKind::Solid), (1, 2, EdgeKind::Dashed)]);
        assert!(survives_limit(&path));
    }

    #[test]
    fn marking_sets_bridges_wavy() {
        let fig = ring_ear_pendant();
        let marked = mark_bridges_wavy(&fig);
        for e in marked.edges() {
            if e.id == 7 {
                assert_eq!(e.kind, EdgeKind::Wavy);
            } else {
                assert_eq!(e.kind, EdgeKind::Solid);
            }
        }
    }

    #[test]
    fn path_reduces_to_minus_double_edge() {
        let path = wavy_path3();
        let steps = reduce_free_edge(&path, 1).unwrap();
        assert_eq!(steps.len(), 2);
        let nonzero: Vec<_> = steps.iter().filter(|s| s.graph.is_some()).collect();
        assert_eq!(nonzero.len(), 1);
        let merged = nonzero[0].graph.as_ref().unwrap();
        assert_eq!(nonzero[0].coefficient, rat(-1));
        assert_eq!(merged.vertex_count(), 2);
        assert!(merged.all_solid());
        assert_eq!(
            canonicalize(merged).hash(),
            canonicalize(&mg(2, &[(0, 1), (0, 1)])).hash()
        );

        let red = reduce_to_nondegenerate(&path, BridgeOrder::LowestId).unwrap();
        assert_eq!(red.terms.len(), 1);
        assert_eq!(red.terms[0].coefficient, rat(-1));
        assert_eq!(
            canonicalize(&red.terms[0].graph).hash(),
            canonicalize(&mg(2, &[(0, 1), (0, 1)])).hash()
        );
    }

    #[test]
    fn single_edge_reduces_to_nothing() {
        let g = mg_kinds(2, &[(0, 1, EdgeKind::Wavy)]);
        let steps = reduce_free_edge(&g, 0).unwrap();
        assert_eq!(steps.len(), 1);
        assert!(steps[0].graph.is_none());
        assert_eq!(steps[0].coefficient, rat(0));

        let red = reduce_to_nondegenerate(&g, BridgeOrder::LowestId).unwrap();
        assert!(red.terms.is_empty());
        assert_eq!(red.zero_weight_dropped, 1);
    }

    #[test]
    fn double_edge_is_already_reduced() {
        let g = mg(2, &[(0, 1), (0, 1)]);
        let red = reduce_to_nondegenerate(&g, BridgeOrder::LowestId).unwrap();
        assert_eq!(red.terms.len(), 1);
        assert_eq!(red.terms[0].coefficient, rat(1));
        assert_eq!(&red.terms[0].graph, &g);
    }

    #[test]
    fn pendant_reduction_enumerates_all_ground_matches() {
        let marked = mark_bridges_wavy(&ring_ear_pendant());
        let steps = reduce_free_edge(&marked, 7).unwrap();
        // independent recount of nonempty injective partial maps {6} -> 6 ground vertices
        assert_eq!(steps.len(), 6);
        let zeros: Vec<_> = steps.iter().filter(|s| s.graph.is_none()).collect();
        // the only self-loop comes from matching the pendant to its own anchor
        assert_eq!(zeros.len(), 1);
        assert_eq!(zeros[0].pattern.pairs, BTreeMap::from([(6, 1)]));
        for s in &steps {
            if let Some(graph) = &s.graph {
                assert_eq!(s.coefficient, rat(-1));
                assert_eq!(graph.vertex_count(), 6);
                assert_eq!(graph.edge_count(), 8);
            }
        }
    }

    #[test]
    fn pattern_count_matches_closed_form() {
        // sum over k >= 1 of C(|F|,k) * P(|G|,k)
        let fig = mark_bridges_wavy(&mg(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]));
        let split = ground_float_split(&fig, 4).unwrap();
        let f = split.float_vertices.len();
        let g = split.ground_vertices.len();
        fn c(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        fn p(n: usize, k: usize) -> usize {
            (0..k).fold(1, |acc, i| acc * (n - i))
        }
        let expect: usize = (1..=f.min(g)).map(|k| c(f, k) * p(g, k)).sum();
        assert_eq!(matching_patterns(&split).len(), expect);
    }

    #[test]
    fn merges_shrink_vertices_and_never_create_bridges() {
        for pairs in [
            vec![(0, 1), (1, 2), (2, 3)],
            vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)],
            vec![(0, 1), (1, 2), (1, 2), (2, 3)],
        ] {
            let marked = mark_bridges_wavy(&mg(
                pairs.iter().map(|p| p.0.max(p.1)).max().unwrap() + 1,
                &pairs,
            ));
            let wavy: Vec<usize> = marked
                .edges()
                .iter()
                .filter(|e| e.kind == EdgeKind::Wavy)
                .map(|e| e.id)
                .collect();
            for &w in &wavy {
                let before = bridges(&marked);
                for step in reduce_free_edge(&marked, w).unwrap() {
                    if let Some(child) = step.graph {
                        assert!(child.vertex_count() < marked.vertex_count());
                        assert_eq!(child.edge_count(), marked.edge_count());
                        // no new bridges: every bridge of the child was one before
                        for b in bridges(&child) {
                            assert!(before.contains(&b));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coincidence_patterns_partition_torus_placements() {
        // On a finite cycle of N sites, group placements of the original
        // vertices (internal distinctness only) by their exact float/ground
        // coincidence pattern. Each nonempty pattern's bucket must equal the
        // injective placement count of the corresponding merged vertex set.
        let n_sites: usize = 10;
        let falling = |k: usize| -> usize { (0..k).fold(1, |acc, i| acc * (n_sites - 1 - i)) };

        // path 0-1-2 split at edge 0: ground {0}, float {1, 2}
        let path = wavy_path3();
        let split = ground_float_split(&path, 0).unwrap();
        let patterns = matching_patterns(&split);
        let mut tally: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        for x1 in 0..n_sites {
            for x2 in 0..n_sites {
                if x1 == x2 {
                    continue;
                }
                let sites = [0, x1, x2];
                let mut realized = Vec::new();
                for &f in &split.float_vertices {
                    for &g in &split.ground_vertices {
                        if sites[f] == sites[g] {
                            realized.push((f, g));
                        }
                    }
                }
                *tally.entry(realized).or_insert(0) += 1;
            }
        }
        for p in &patterns {
            let key: Vec<(usize, usize)> = p.pairs.iter().map(|(&f, &g)| (f, g)).collect();
            let merged_free = path.vertex_count() - p.pairs.len() - 1;
            assert_eq!(tally.get(&key).copied().unwrap_or(0), falling(merged_free));
        }
        // the empty pattern holds the rest
        let covered: usize = patterns
            .iter()
            .map(|p| falling(path.vertex_count() - p.pairs.len() - 1))
            .sum();
        assert_eq!(
            tally.get(&Vec::new()).copied().unwrap_or(0),
            n_sites * (n_sites - 1) - covered
        );
    }

    #[test]
    fn rejects_bad_reduction_inputs() {
        let path = wavy_path3();
        assert!(reduce_free_edge(&path, 9).is_err());
        let double = mg(2, &[(0, 1), (0, 1)]);
        assert!(reduce_free_edge(&double, 0).is_err());
        // dashed loop edge blocks the pipeline
        let bad = mg_kinds(
            3,
            &[
                (0, 1, EdgeKind::Solid),
                (1, 2, EdgeKind::Dashed),
                (1, 2, EdgeKind::Solid),
            ],
        );
        assert!(reduce_to_nondegenerate(&bad, BridgeOrder::LowestId).is_err());
    }
}
