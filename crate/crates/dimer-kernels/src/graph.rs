//! Multigraphs with labeled vertices, edge kinds, canonical forms under
//! relabeling, bridge detection, and ground/float splits at a bridge edge.
//!
//! Vertex 0 is the fixed vertex of every lattice sum. All types are immutable
//! after construction and every operation is a pure function.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    /// Carries a 1/(2d) factor and a nearest-neighbor constraint.
    Solid,
    /// Carries a -1/(N-1) factor, no placement constraint.
    Dashed,
    /// Kind not yet resolved; allowed only on bridge edges during reduction.
    Wavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    pub id: usize,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, v: usize) -> bool {
        self.a == v || self.b == v
    }
}

/// Connected multigraph without self-loops. Edge ids are unique and stay
/// attached to their edge through every transformation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson")]
pub struct Multigraph {
    vertices: usize,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct GraphJson {
    vertices: usize,
    edges: Vec<Edge>,
}

impl TryFrom<GraphJson> for Multigraph {
    type Error = String;
    fn try_from(raw: GraphJson) -> std::result::Result<Self, String> {
        Multigraph::new(raw.vertices, raw.edges).map_err(|e| e.to_string())
    }
}

/// Connectivity of a raw edge list over `vertices` labels (isolated vertices
/// count as disconnected unless the graph is a single vertex).
fn connected_raw(vertices: usize, edges: &[Edge]) -> bool {
    if vertices == 0 {
        return false;
    }
    let mut parent: Vec<usize> = (0..vertices).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let root = find(&mut parent, 0);
    (0..vertices).all(|v| find(&mut parent, v) == root)
}

/// Bridge edge ids of a raw edge list, by lowlink DFS. A parallel copy of an
/// edge acts as a back edge, so parallel edges are never bridges.
fn bridges_raw(vertices: usize, edges: &[Edge]) -> BTreeSet<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertices];
    for (idx, e) in edges.iter().enumerate() {
        adj[e.a].push((e.b, idx));
        adj[e.b].push((e.a, idx));
    }
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        adj: &[Vec<(usize, usize)>],
        edges: &[Edge],
        disc: &mut [Option<u32>],
        low: &mut [u32],
        timer: &mut u32,
        out: &mut BTreeSet<usize>,
        v: usize,
        entry: Option<usize>,
    ) {
        disc[v] = Some(*timer);
        low[v] = *timer;
        *timer += 1;
        for &(to, idx) in &adj[v] {
            if Some(idx) == entry {
                continue;
            }
            match disc[to] {
                Some(t) => low[v] = low[v].min(t),
                None => {
                    dfs(adj, edges, disc, low, timer, out, to, Some(idx));
                    low[v] = low[v].min(low[to]);
                    if low[to] > disc[v].unwrap() {
                        out.insert(edges[idx].id);
                    }
                }
            }
        }
    }
    let mut disc = vec![None; vertices];
    let mut low = vec![0u32; vertices];
    let mut timer = 0u32;
    let mut out = BTreeSet::new();
    if vertices > 0 {
        dfs(
            &adj, edges, &mut disc, &mut low, &mut timer, &mut out, 0, None,
        );
    }
    out
}

impl Multigraph {
    pub fn new(vertices: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertices == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        if vertices > edges.len() + 1 {
            return Err(Error::InvalidGraph(format!(
                "{vertices} vertices cannot be connected by {} edges",
                edges.len()
            )));
        }
        let mut ids = BTreeSet::new();
        for e in &edges {
            if e.a >= vertices || e.b >= vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge {} endpoint out of range",
                    e.id
                )));
            }
            if e.a == e.b {
                return Err(Error::InvalidGraph(format!("edge {} is a self-loop", e.id)));
            }
            if !ids.insert(e.id) {
                return Err(Error::InvalidGraph(format!("duplicate edge id {}", e.id)));
            }
        }
        if !connected_raw(vertices, &edges) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        let b = bridges_raw(vertices, &edges);
        for e in &edges {
            if e.kind == EdgeKind::Wavy && !b.contains(&e.id) {
                return Err(Error::InvalidGraph(format!(
                    "edge {} is wavy but lies in a closed loop",
                    e.id
                )));
            }
        }
        Ok(Self { vertices, edges })
    }

    /// Build from endpoint pairs with one kind and ids 0..len.
    pub fn from_pairs(vertices: usize, pairs: &[(usize, usize)], kind: EdgeKind) -> Result<Self> {
        let edges = pairs
            .iter()
            .enumerate()
            .map(|(id, &(a, b))| Edge { a, b, kind, id })
            .collect();
        Self::new(vertices, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_by_id(&self, id: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Per-vertex incidence list of (neighbor, edge index into `edges()`).
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for (idx, e) in self.edges.iter().enumerate() {
            adj[e.a].push((e.b, idx));
            adj[e.b].push((e.a, idx));
        }
        adj
    }

    pub fn all_solid(&self) -> bool {
        self.edges.iter().all(|e| e.kind == EdgeKind::Solid)
    }

    /// Same graph with kinds replaced edge-by-edge (same order as `edges()`).
    pub fn with_kinds(&self, kinds: &[EdgeKind]) -> Result<Self> {
        if kinds.len() != self.edges.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} kinds, got {}",
                self.edges.len(),
                kinds.len()
            )));
        }
        let edges = self
            .edges
            .iter()
            .zip(kinds)
            .map(|(e, &kind)| Edge { kind, ..*e })
            .collect();
        Self::new(self.vertices, edges)
    }

    /// Apply a vertex substitution, compact the surviving labels preserving
    /// order (vertex 0 stays 0), and force `solidify` edge ids to Solid.
    /// Returns None when an edge would become a self-loop.
    pub(crate) fn merge_vertices(
        &self,
        mapping: &BTreeMap<usize, usize>,
        solidify: &BTreeSet<usize>,
    ) -> Option<Self> {
        let target = |v: usize| mapping.get(&v).copied().unwrap_or(v);
        let survivors: BTreeSet<usize> = (0..self.vertices)
            .filter(|v| !mapping.contains_key(v))
            .collect();
        let relabel: BTreeMap<usize, usize> = survivors
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (a, b) = (target(e.a), target(e.b));
            if a == b {
                return None;
            }
            let kind = if solidify.contains(&e.id) {
                EdgeKind::Solid
            } else {
                e.kind
            };
            edges.push(Edge {
                a: relabel[&a],
                b: relabel[&b],
                kind,
                id: e.id,
            });
        }
        // wavy edges that landed in a loop become solid (their kind split is
        // resolved inside the loop machinery)
        let b = bridges_raw(survivors.len(), &edges);
        for e in &mut edges {
            if e.kind == EdgeKind::Wavy && !b.contains(&e.id) {
                e.kind = EdgeKind::Solid;
            }
        }
        Some(Self::new(survivors.len(), edges).expect("merge of a valid graph stays valid"))
    }

    /// Vertices reachable from `start` without traversing edge id `skip`.
    pub(crate) fn reachable_without(&self, start: usize, skip: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                if e.id == skip || !e.touches(v) {
                    continue;
                }
                let w = e.other(v);
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Edge ids whose removal disconnects the graph; equivalently the edges that
/// lie in no closed loop.
pub fn bridges(g: &Multigraph) -> BTreeSet<usize> {
    bridges_raw(g.vertices, &g.edges)
}

/// True iff every edge lies in some closed loop.
pub fn is_nondegenerate(g: &Multigraph) -> bool {
    bridges(g).is_empty()
}

/// Partition of the graph at a bridge edge: the ground holds vertex 0, the
/// float is what the bridge cuts off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundFloatSplit {
    pub free_edge: usize,
    pub ground_vertices: BTreeSet<usize>,
    pub float_vertices: BTreeSet<usize>,
    pub ground_anchor: usize,
    pub float_anchor: usize,
}

pub fn ground_float_split(g: &Multigraph, free_edge: usize) -> Result<GroundFloatSplit> {
    if !bridges(g).contains(&free_edge) {
        return Err(Error::InvalidInput(format!(
            "edge {free_edge} is not a bridge"
        )));
    }
    let e = g
        .edge_by_id(free_edge)
        .ok_or_else(|| Error::InvalidInput(format!("no edge with id {free_edge}")))?;
    let ground = g.reachable_without(0, free_edge);
    let float: BTreeSet<usize> = (0..g.vertex_count())
        .filter(|v| !ground.contains(v))
        .collect();
    let (ground_anchor, float_anchor) = if ground.contains(&e.a) {
        (e.a, e.b)
    } else {
        (e.b, e.a)
    };
    debug_assert!(float.contains(&float_anchor));
    Ok(GroundFloatSplit {
        free_edge,
        ground_vertices: ground,
        float_vertices: float,
        ground_anchor,
        float_anchor,
    })
}

/// Isomorphism-class representative: canonical relabeling with kinds erased,
/// the automorphism count of the canonical form, and a stable digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyJson")]
pub struct Topology {
    #[serde(flatten)]
    canonical: Multigraph,
    automorphisms: u64,
    hash: String,
}

#[derive(Deserialize)]
struct TopologyJson {
    vertices: usize,
    edges: Vec<Edge>,
    automorphisms: u64,
    hash: String,
}

impl TryFrom<TopologyJson> for Topology {
    type Error = String;
    fn try_from(raw: TopologyJson) -> std::result::Result<Self, String> {
        let g = Multigraph::new(raw.vertices, raw.edges).map_err(|e| e.to_string())?;
        let t = canonicalize(&g);
        if t.automorphisms != raw.automorphisms || t.hash != raw.hash {
            return Err("topology fields do not match the canonical form of the graph".into());
        }
        Ok(t)
    }
}

impl Topology {
    pub fn canonical(&self) -> &Multigraph {
        &self.canonical
    }

    pub fn automorphisms(&self) -> u64 {
        self.automorphisms
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn edge_count(&self) -> usize {
        self.canonical.edge_count()
    }
}

/// Color refinement on the multigraph: classes of vertices ordered by a
/// relabel-invariant key. Any isomorphism preserves these classes, so a
/// minimum taken over class-preserving relabelings is a canonical form.
fn refinement_classes(g: &Multigraph) -> Vec<Vec<usize>> {
    let adj = g.adjacency();
    let v = g.vertex_count();
    // initial color: degree counting multiplicity
    let mut colors: Vec<usize> = {
        let degrees: Vec<usize> = adj.iter().map(|l| l.len()).collect();
        let palette: BTreeSet<usize> = degrees.iter().copied().collect();
        let index: BTreeMap<usize, usize> = palette
            .into_iter()
            .enumerate()
            .map(|(i, d)| (d, i))
            .collect();
        degrees.iter().map(|d| index[d]).collect()
    };
    let mut count = colors.iter().collect::<BTreeSet<_>>().len();
    loop {
        let keys: Vec<(usize, Vec<usize>)> = (0..v)
            .map(|u| {
                let mut nbr: Vec<usize> = adj[u].iter().map(|&(w, _)| colors[w]).collect();
                nbr.sort_unstable();
                (colors[u], nbr)
            })
            .collect();
        let palette: BTreeSet<&(usize, Vec<usize>)> = keys.iter().collect();
        let index: BTreeMap<&(usize, Vec<usize>), usize> = palette
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        let next: Vec<usize> = keys.iter().map(|k| index[k]).collect();
        let next_count = index.len();
        if next_count == count {
            break;
        }
        colors = next;
        count = next_count;
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (vtx, c) in colors.iter().enumerate() {
        classes.entry(*c).or_default().push(vtx);
    }
    classes.into_values().collect()
}

/// Relabel-and-sort image of the edge multiset; the minimum over allowed
/// relabelings is the canonical encoding.
type Encoding = Vec<(u16, u16)>;

fn encode_under(g: &Multigraph, perm: &[usize]) -> Encoding {
    let mut enc: Encoding = g
        .edges()
        .iter()
        .map(|e| {
            let (x, y) = (perm[e.a] as u16, perm[e.b] as u16);
            (x.min(y), x.max(y))
        })
        .collect();
    enc.sort_unstable();
    enc
}

struct CanonSearch<'a> {
    g: &'a Multigraph,
    perm: Vec<usize>,
    best: Option<(Encoding, Vec<usize>)>,
    matches: u64,
    target: Option<Encoding>,
}

impl CanonSearch<'_> {
    fn visit_leaf(&mut self) {
        let enc = encode_under(self.g, &self.perm);
        if let Some(target) = &self.target {
            if &enc == target {
                self.matches += 1;
            }
            return;
        }
        match &self.best {
            Some((cur, _)) if cur <= &enc => {}
            _ => self.best = Some((enc, self.perm.clone())),
        }
    }

    fn assign_class(&mut self, classes: &mut [Vec<usize>], ci: usize, pos: usize, base: usize) {
        let len = classes[ci].len();
        if pos == len {
            if ci + 1 == classes.len() {
                self.visit_leaf();
            } else {
                self.assign_class(classes, ci + 1, 0, base + len);
            }
            return;
        }
        for i in pos..len {
            classes[ci].swap(pos, i);
            self.perm[classes[ci][pos]] = base + pos;
            self.assign_class(classes, ci, pos + 1, base);
            classes[ci].swap(pos, i);
        }
    }
}

fn hash_encoding(vertices: usize, enc: &[(u16, u16)]) -> String {
    let body: Vec<String> = enc.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    let material = format!("v{vertices}|{}", body.join(","));
    let digest = Sha256::digest(material.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Canonical form of the isomorphism class of `g` under vertex relabeling and
/// edge-kind changes. Disconnected input cannot occur: `Multigraph` is
/// connected by construction.
pub fn canonicalize(g: &Multigraph) -> Topology {
    let mut classes = refinement_classes(g);
    let mut search = CanonSearch {
        g,
        perm: vec![0; g.vertex_count()],
        best: None,
        matches: 0,
        target: None,
    };
    search.assign_class(&mut classes, 0, 0, 0);
    let (enc, _perm) = search.best.expect("at least one relabeling exists");

    let canonical_edges: Vec<Edge> = enc
        .iter()
        .enumerate()
        .map(|(id, &(a, b))| Edge {
            a: a as usize,
            b: b as usize,
            kind: EdgeKind::Solid,
            id,
        })
        .collect();
    let canonical =
        Multigraph::new(g.vertex_count(), canonical_edges).expect("canonical form is valid");

    // automorphisms of the canonical form: class-preserving relabelings that
    // reproduce the canonical encoding
    let mut canon_classes = refinement_classes(&canonical);
    let automorphisms = {
        let mut counter = CanonSearch {
            g: &canonical,
            perm: vec![0; canonical.vertex_count()],
            best: None,
            matches: 0,
            target: Some(enc.clone()),
        };
        counter.assign_class(&mut canon_classes, 0, 0, 0);
        counter.matches
    };

    let hash = hash_encoding(g.vertex_count(), &enc);
    Topology {
        canonical,
        automorphisms,
        hash,
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn mg(vertices: usize, pairs: &[(usize, usize)]) -> Multigraph {
        Multigraph::from_pairs(vertices, pairs, EdgeKind::Solid).unwrap()
    }

    pub fn mg_kinds(vertices: usize, spec: &[(usize, usize, EdgeKind)]) -> Multigraph {
        let edges = spec
            .iter()
            .enumerate()
            .map(|(id, &(a, b, kind))| Edge { a, b, kind, id })
            .collect();
        Multigraph::new(vertices, edges).unwrap()
    }

    /// Ring A,B,C,D + ear E,F,G + pendant edge H (ids 0..=7).
    pub fn ring_ear_pendant() -> Multigraph {
        mg(
            7,
            &[
                (0, 1), // A
                (1, 2), // B
                (2, 3), // C
                (3, 0), // D
                (0, 4), // E
                (4, 5), // F
                (5, 2), // G
                (1, 6), // H
            ],
        )
    }

    /// Brute-force bridge oracle: an edge is a bridge iff removing it
    /// disconnects the graph.
    pub fn bridge_oracle(g: &Multigraph) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for e in g.edges() {
            let reach = g.reachable_without(0, e.id);
            if reach.len() != g.vertex_count() {
                out.insert(e.id);
            }
        }
        out
    }

    /// Brute-force isomorphism oracle: search all vertex bijections for one
    /// that maps the edge pair multiset of `a` onto that of `b`.
    pub fn isomorphic_oracle(a: &Multigraph, b: &Multigraph) -> bool {
        if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
            return false;
        }
        let v = a.vertex_count();
        let target: Vec<(u16, u16)> = {
            let ident: Vec<usize> = (0..v).collect();
            encode_under(b, &ident)
        };
        let mut perm: Vec<usize> = (0..v).collect();
        fn go(a: &Multigraph, perm: &mut Vec<usize>, k: usize, target: &[(u16, u16)]) -> bool {
            let v = perm.len();
            if k == v {
                return encode_under(a, perm) == target;
            }
            for i in k..v {
                perm.swap(k, i);
                if go(a, perm, k + 1, target) {
                    return true;
                }
                perm.swap(k, i);
            }
            false
        }
        go(a, &mut perm, 0, &target)
    }
}
