//! Enumeration of all connected multigraph topologies with a given edge
//! count, deduplicated by canonical form, plus the solid/dashed kind
//! assignments of a topology.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::graph::{canonicalize, EdgeKind, Multigraph, Topology};
use crate::{Error, Result};

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest supported edge count. Enumeration stays desk-scale up to here and
/// the downstream sweeps only ever ask for less.
pub const MAX_EDGES: u32 = 7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyCatalog {
    pub n: u32,
    pub entries: Vec<Topology>,
    #[serde(rename = "generatedAt")]
    pub generated_at: String,
    #[serde(rename = "generatorVersion")]
    pub generator_version: String,
}

impl TopologyCatalog {
    pub fn find(&self, hash: &str) -> Option<&Topology> {
        self.entries.iter().find(|t| t.hash() == hash)
    }
}

/// All connected multigraphs with exactly `n` edges, no self-loops, between
/// 2 and n+1 vertices, up to isomorphism. Entries are sorted by canonical
/// hash, so the output is deterministic.
pub fn enumerate_topologies(n: u32) -> Result<TopologyCatalog> {
    if !(1..=MAX_EDGES).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "edge count {n} outside supported range 1..={MAX_EDGES}"
        )));
    }
    let mut seen: BTreeMap<String, Topology> = BTreeMap::new();
    for v in 2..=(n as usize + 1) {
        let mut pairs = Vec::new();
        for a in 0..v {
            for b in (a + 1)..v {
                pairs.push((a, b));
            }
        }
        let mut mult = vec![0u32; pairs.len()];
        distribute(n, 0, &mut mult, &mut |mult| {
            collect_candidate(v, &pairs, mult, &mut seen);
        });
    }
    let generated_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default();
    Ok(TopologyCatalog {
        n,
        entries: seen.into_values().collect(),
        generated_at,
        generator_version: GENERATOR_VERSION.to_string(),
    })
}

/// Spread `remaining` multiplicity over `mult[idx..]`.
fn distribute(remaining: u32, idx: usize, mult: &mut [u32], sink: &mut impl FnMut(&[u32])) {
    if idx == mult.len() {
        if remaining == 0 {
            sink(mult);
        }
        return;
    }
    if idx + 1 == mult.len() {
        mult[idx] = remaining;
        sink(mult);
        mult[idx] = 0;
        return;
    }
    for m in 0..=remaining {
        mult[idx] = m;
        distribute(remaining - m, idx + 1, mult, sink);
    }
    mult[idx] = 0;
}

fn collect_candidate(
    v: usize,
    pairs: &[(usize, usize)],
    mult: &[u32],
    seen: &mut BTreeMap<String, Topology>,
) {
    // every vertex must be touched, and the pair graph must connect them
    let mut degree = vec![0u32; v];
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = v;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        if mult[i] == 0 {
            continue;
        }
        degree[a] += mult[i];
        degree[b] += mult[i];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    if components != 1 || degree.contains(&0) {
        return;
    }
    let mut flat = Vec::new();
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for _ in 0..mult[i] {
            flat.push((a, b));
        }
    }
    let g = Multigraph::from_pairs(v, &flat, EdgeKind::Solid)
        .expect("connected candidate builds a valid graph");
    let t = canonicalize(&g);
    seen.entry(t.hash().to_string()).or_insert(t);
}

/// The 2^n graphs obtained by assigning solid/dashed to each edge of the
/// canonical representative, in mask order (bit i set = edge i dashed).
pub fn kind_assignments(t: &Topology) -> Vec<Multigraph> {
    let n = t.edge_count();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let kinds: Vec<EdgeKind> = (0..n)
            .map(|i| {
                if mask & (1 << i) != 0 {
                    EdgeKind::Dashed
                } else {
                    EdgeKind::Solid
                }
            })
            .collect();
        out.push(
            t.canonical()
                .with_kinds(&kinds)
                .expect("kind reassignment keeps the graph valid"),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::testutil::mg;
    use crate::reduce::survives_limit;

    /// Independent generate-and-dedup oracle with a different generation
    /// order: grow connected graphs one edge at a time, deduplicating at each
    /// level by full-permutation canonical encoding (no refinement).
    fn oracle_topology_count(n: u32) -> usize {
        use std::collections::BTreeSet;

        fn full_perm_code(g: &Multigraph) -> String {
            let v = g.vertex_count();
            let mut perm: Vec<usize> = (0..v).collect();
            let mut best: Option<Vec<(usize, usize)>> = None;
            fn go(
                g: &Multigraph,
                perm: &mut Vec<usize>,
                k: usize,
                best: &mut Option<Vec<(usize, usize)>>,
            ) {
                if k == perm.len() {
                    let mut enc: Vec<(usize, usize)> = g
                        .edges()
                        .iter()
                        .map(|e| {
                            let (x, y) = (perm[e.a], perm[e.b]);
                            (x.min(y), x.max(y))
                        })
                        .collect();
                    enc.sort_unstable();
                    match best {
                        Some(b) if *b <= enc => {}
                        _ => *best = Some(enc),
                    }
                    return;
                }
                for i in k..perm.len() {
                    perm.swap(k, i);
                    go(g, perm, k + 1, best);
                    perm.swap(k, i);
                }
            }
            go(g, &mut perm, 0, &mut best);
            format!("{}|{:?}", v, best.unwrap())
        }

        let mut level: BTreeMap<String, Multigraph> = BTreeMap::new();
        let seed = mg(2, &[(0, 1)]);
        level.insert(full_perm_code(&seed), seed);
        for _ in 1..n {
            let mut next: BTreeMap<String, Multigraph> = BTreeMap::new();
            for g in level.values() {
                let v = g.vertex_count();
                let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.a, e.b)).collect();
                // add an edge between existing vertices
                let mut targets: BTreeSet<(usize, usize)> = BTreeSet::new();
                for a in 0..v {
                    for b in (a + 1)..v {
                        targets.insert((a, b));
                    }
                }
                for &(a, b) in &targets {
                    let mut p = pairs.clone();
                    p.push((a, b));
                    let h = Multigraph::from_pairs(v, &p, EdgeKind::Solid).unwrap();
                    next.entry(full_perm_code(&h)).or_insert(h);
                }
                // or hang a new vertex off an existing one
                for a in 0..v {
                    let mut p = pairs.clone();
                    p.push((a, v));
                    let h = Multigraph::from_pairs(v + 1, &p, EdgeKind::Solid).unwrap();
                    next.entry(full_perm_code(&h)).or_insert(h);
                }
            }
            level = next;
        }
        level.len()
    }

    #[test]
    fn small_catalog_counts() {
        // frozen counts, first computed with the growth oracle below
        for (n, expect) in [(1u32, 1usize), (2, 2), (3, 5), (4, 12), (5, 33)] {
            assert_eq!(enumerate_topologies(n).unwrap().entries.len(), expect);
        }
    }

    #[test]
    fn counts_match_independent_oracle() {
        for n in 1..=5u32 {
            let catalog = enumerate_topologies(n).unwrap();
            assert_eq!(
                catalog.entries.len(),
                oracle_topology_count(n),
                "catalog size disagrees with growth oracle at n={n}"
            );
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(enumerate_topologies(0).is_err());
        assert!(enumerate_topologies(8).is_err());
    }

    #[test]
    fn doubled_middle_path_is_catalogued_at_n4() {
        let catalog = enumerate_topologies(4).unwrap();
        let shape = mg(4, &[(0, 1), (1, 2), (1, 2), (2, 3)]);
        let hash = canonicalize(&shape).hash().to_string();
        assert!(catalog.find(&hash).is_some());
    }

    #[test]
    fn entries_are_canonical_and_sorted() {
        let catalog = enumerate_topologies(4).unwrap();
        let mut prev: Option<&str> = None;
        for t in &catalog.entries {
            let again = canonicalize(t.canonical());
            assert_eq!(t.hash(), again.hash());
            assert_eq!(t.canonical(), again.canonical());
            if let Some(p) = prev {
                assert!(p < t.hash());
            }
            prev = Some(t.hash());
        }
    }

    #[test]
    fn labeled_enumeration_groups_onto_catalog() {
        // brute labeled enumeration grouped by canonical hash must reproduce
        // each catalog entry exactly once
        for n in 1..=4u32 {
            let catalog = enumerate_topologies(n).unwrap();
            let mut hit: BTreeMap<String, usize> = BTreeMap::new();
            for v in 2..=(n as usize + 1) {
                let mut pairs = Vec::new();
                for a in 0..v {
                    for b in (a + 1)..v {
                        pairs.push((a, b));
                    }
                }
                let mut mult = vec![0u32; pairs.len()];
                distribute(n, 0, &mut mult, &mut |mult| {
                    let mut flat = Vec::new();
                    for (i, &(a, b)) in pairs.iter().enumerate() {
                        for _ in 0..mult[i] {
                            flat.push((a, b));
                        }
                    }
                    if flat.is_empty() {
                        return;
                    }
                    if let Ok(g) = Multigraph::from_pairs(v, &flat, EdgeKind::Solid) {
                        *hit.entry(canonicalize(&g).hash().to_string()).or_insert(0) += 1;
                    }
                });
            }
            let catalog_hashes: Vec<&str> = catalog.entries.iter().map(|t| t.hash()).collect();
            let seen: Vec<&str> = hit.keys().map(|s| s.as_str()).collect();
            assert_eq!(catalog_hashes, seen);
        }
    }

    #[test]
    fn kind_assignment_counts() {
        let single = canonicalize(&mg(2, &[(0, 1)]));
        assert_eq!(kind_assignments(&single).len(), 2);

        let n4 = enumerate_topologies(4).unwrap();
        for t in &n4.entries {
            assert_eq!(kind_assignments(t).len(), 16);
        }

        // of the 4 kind assignments of the double edge, only the all-solid
        // one survives the large-lattice filter
        let double = canonicalize(&mg(2, &[(0, 1), (0, 1)]));
        let graphs = kind_assignments(&double);
        assert_eq!(graphs.len(), 4);
        let survivors: Vec<_> = graphs.iter().filter(|g| survives_limit(g)).collect();
        assert_eq!(survivors.len(), 1);
        assert!(survivors[0].all_solid());
    }
}
