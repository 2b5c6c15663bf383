//! Exact counting of multigraph embeddings into Z^d (vertex 0 pinned at the
//! origin, all images distinct, every edge a nearest-neighbor pair) and the
//! interpolation of those counts into a polynomial in d.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::catalog::GENERATOR_VERSION;
use crate::graph::{canonicalize, EdgeKind, Multigraph};
use crate::poly::interpolate;
use crate::{rat, DimPoly, Error, Rational, Result};

const MAX_DIM: u32 = 16;
const MAX_VERTICES: usize = 16;
/// Cap on the raw (2d)^(v-1) search-space estimate.
const MAX_SEARCH: f64 = 4.0e9;

/// Cached per-(graph, dimension) count. `method` records how the value was
/// obtained; only brute-force counts are ever persisted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingCountRecord {
    #[serde(rename = "topologyHash")]
    pub topology_hash: String,
    pub d: u32,
    pub count: u64,
    pub method: CountMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Bruteforce,
    Interpolated,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    hash: String,
    d: u32,
    count: u64,
}

/// Number of maps from the vertices of an all-solid graph into Z^d with
/// vertex 0 at the origin, all images distinct, and every edge's endpoints at
/// unit distance. Depth-first assignment along a spanning tree with
/// incremental constraint checks.
pub fn count_embeddings(g: &Multigraph, d: u32) -> Result<u64> {
    if d < 1 {
        return Err(Error::InvalidInput("dimension must be at least 1".into()));
    }
    if d > MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dimension {d} exceeds {MAX_DIM}"
        )));
    }
    if g.edges().iter().any(|e| e.kind != EdgeKind::Solid) {
        return Err(Error::InvalidInput(
            "embedding counts are defined for all-solid graphs".into(),
        ));
    }
    let v = g.vertex_count();
    if v > MAX_VERTICES {
        return Err(Error::InvalidInput(format!("too many vertices: {v}")));
    }
    if ((2 * d) as f64).powi(v as i32 - 1) > MAX_SEARCH {
        return Err(Error::InvalidInput(format!(
            "search space (2*{d})^{} too large",
            v - 1
        )));
    }

    // BFS order from vertex 0; each later vertex keeps a tree parent and the
    // full list of already-placed neighbors to constrain against.
    let adj = g.adjacency();
    let mut order = vec![0usize];
    let mut pos_of = vec![usize::MAX; v];
    pos_of[0] = 0;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &(w, _) in &adj[u] {
            if pos_of[w] == usize::MAX {
                pos_of[w] = order.len();
                order.push(w);
            }
        }
    }
    debug_assert_eq!(order.len(), v);
    // for the k-th placed vertex: (tree parent slot, slots of other placed neighbors)
    let mut parents = vec![0usize; v];
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (k, &u) in order.iter().enumerate().skip(1) {
        let mut parent = None;
        for &(w, _) in &adj[u] {
            let slot = pos_of[w];
            if slot < k {
                match parent {
                    None => parent = Some(slot),
                    Some(_) => checks[k].push(slot),
                }
            }
        }
        parents[k] = parent.expect("connected graph gives every vertex a placed neighbor");
    }

    let mut coords = [[0i16; MAX_DIM as usize]; MAX_VERTICES];
    Ok(place(&mut coords, &parents, &checks, v, d as usize, 1))
}

fn unit_apart(a: &[i16], b: &[i16], d: usize) -> bool {
    let mut dist = 0u32;
    for i in 0..d {
        dist += a[i].abs_diff(b[i]) as u32;
        if dist > 1 {
            return false;
        }
    }
    dist == 1
}

fn place(
    coords: &mut [[i16; MAX_DIM as usize]; MAX_VERTICES],
    parents: &[usize],
    checks: &[Vec<usize>],
    v: usize,
    d: usize,
    k: usize,
) -> u64 {
    if k == v {
        return 1;
    }
    let mut total = 0;
    let parent = parents[k];
    for axis in 0..d {
        for step in [1i16, -1] {
            let mut pos = coords[parent];
            pos[axis] += step;
            // distinctness against every placed vertex
            if (0..k).any(|j| coords[j][..d] == pos[..d]) {
                continue;
            }
            // non-tree solid edges to already-placed vertices
            if checks[k].iter().any(|&j| !unit_apart(&coords[j], &pos, d)) {
                continue;
            }
            coords[k] = pos;
            total += place(coords, parents, checks, v, d, k + 1);
        }
    }
    total
}

/// Exact polynomial in d through the counts at d = 1..=n+1, with a built-in
/// self-check at d = n+2 and n+3 against fresh brute-force counts. A mismatch
/// means the degree bound failed and is reported, never absorbed.
pub fn embedding_polynomial(g: &Multigraph) -> Result<DimPoly> {
    embedding_polynomial_via(g, |d| count_embeddings(g, d))
}

fn embedding_polynomial_via(
    g: &Multigraph,
    mut count: impl FnMut(u32) -> Result<u64>,
) -> Result<DimPoly> {
    let n = g.edge_count() as u32;
    let mut points = Vec::with_capacity(n as usize + 1);
    for d in 1..=(n + 1) {
        points.push((rat(d as i64), rat(count(d)? as i64)));
    }
    let poly = interpolate(&points);
    for d in [n + 2, n + 3] {
        let expect = rat(count(d)? as i64);
        let got = poly.eval(&rat(d as i64));
        if got != expect {
            return Err(Error::Consistency(format!(
                "embedding polynomial self-check failed at d={d}: interpolant gives {got}, brute force gives {expect}"
            )));
        }
    }
    Ok(poly)
}

/// Persistent count cache plus an in-memory polynomial memo, both keyed by
/// canonical hash. Counts are pure, so concurrent writers of identical values
/// are benign.
pub struct EmbedCache {
    counts: Mutex<HashMap<(String, u32), u64>>,
    polys: Mutex<HashMap<String, DimPoly>>,
    writer: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl EmbedCache {
    /// Memory-only cache.
    pub fn in_memory() -> Self {
        Self {
            counts: Mutex::new(HashMap::new()),
            polys: Mutex::new(HashMap::new()),
            writer: None,
            path: None,
        }
    }

    /// Cache persisted under `dir`; the file name carries the generator
    /// version, so stale caches from other versions are simply not read.
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("embed-counts-v{GENERATOR_VERSION}.jsonl"));
        let mut counts = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheLine = serde_json::from_str(&line)
                    .map_err(|e| Error::InvalidInput(format!("bad cache line: {e}")))?;
                counts.insert((rec.hash, rec.d), rec.count);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            counts: Mutex::new(counts),
            polys: Mutex::new(HashMap::new()),
            writer: Some(Mutex::new(BufWriter::new(file))),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.counts.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn count_for(&self, g: &Multigraph, hash: &str, d: u32) -> Result<u64> {
        let key = (hash.to_string(), d);
        if let Some(&c) = self.counts.lock().unwrap().get(&key) {
            return Ok(c);
        }
        let c = count_embeddings(g, d)?;
        self.counts.lock().unwrap().insert(key, c);
        if let Some(w) = &self.writer {
            let line = serde_json::to_string(&CacheLine {
                hash: hash.to_string(),
                d,
                count: c,
            })?;
            let mut w = w.lock().unwrap();
            writeln!(w, "{line}")?;
            w.flush()?;
        }
        Ok(c)
    }

    /// Embedding polynomial memoized by canonical hash; counts come from the
    /// persistent layer where available.
    pub fn embedding_polynomial(&self, g: &Multigraph) -> Result<DimPoly> {
        let hash = canonicalize(g).hash().to_string();
        if let Some(p) = self.polys.lock().unwrap().get(&hash) {
            return Ok(p.clone());
        }
        let poly = embedding_polynomial_via(g, |d| self.count_for(g, &hash, d))?;
        self.polys.lock().unwrap().insert(hash, poly.clone());
        Ok(poly)
    }

    pub fn count(&self, g: &Multigraph, d: u32) -> Result<u64> {
        let hash = canonicalize(g).hash().to_string();
        self.count_for(g, &hash, d)
    }

    /// Brute-force count as an auditable record.
    pub fn record(&self, g: &Multigraph, d: u32) -> Result<EmbeddingCountRecord> {
        let hash = canonicalize(g).hash().to_string();
        let count = self.count_for(g, &hash, d)?;
        Ok(EmbeddingCountRecord {
            topology_hash: hash,
            d,
            count,
            method: CountMethod::Bruteforce,
        })
    }
}

/// Count read off the interpolated polynomial instead of enumeration.
pub fn interpolated_record(g: &Multigraph, poly: &DimPoly, d: u32) -> Result<EmbeddingCountRecord> {
    use num::ToPrimitive;
    let value = poly.eval(&rat(d as i64));
    let count = value
        .to_integer()
        .to_u64()
        .filter(|_| value.is_integer())
        .ok_or_else(|| {
            Error::Consistency(format!(
                "interpolated count at d={d} is not a nonnegative integer"
            ))
        })?;
    Ok(EmbeddingCountRecord {
        topology_hash: canonicalize(g).hash().to_string(),
        d,
        count,
        method: CountMethod::Interpolated,
    })
}

/// Evaluate a count polynomial at integer d, as a rational.
pub fn eval_at(poly: &DimPoly, d: u32) -> Rational {
    poly.eval(&rat(d as i64))
}
