//! Independent ground truth: exact pre-limit weighted sums on finite tori,
//! their expansion in 1/(N-1), and the extracted large-N constant term.
//!
//! This module deliberately shares no code with the reduction engine or the
//! embedding counter; placements are enumerated directly on the torus.

use std::collections::BTreeSet;

use crate::graph::{EdgeKind, Topology};
use crate::poly::{interpolate, Polynomial};
use crate::{rat, ratio, Error, Rational, Result};

/// Even-sided torus (Z/L)^d. Evenness keeps the lattice bipartite; the side
/// must also clear 2 * edge count so no solid path can wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusSpec {
    pub d: u32,
    pub side: u64,
}

/// Guard on the raw N^(v-1) placement space.
const MAX_PLACEMENTS: f64 = 2.0e9;

impl TorusSpec {
    pub fn new(d: u32, side: u64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidInput(
                "torus dimension must be at least 1".into(),
            ));
        }
        if side < 2 || !side.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "torus side {side} must be even and >= 2"
            )));
        }
        Ok(Self { d, side })
    }

    pub fn sites(&self) -> u64 {
        self.side.pow(self.d)
    }

    /// Wrap guard for a graph with `n` edges.
    pub fn validate_for_edges(&self, n: usize) -> Result<()> {
        if self.side <= 2 * n as u64 {
            return Err(Error::InvalidInput(format!(
                "torus side {} does not clear the wrap guard 2*{n}",
                self.side
            )));
        }
        Ok(())
    }
}

fn is_nn(mut a: u64, mut b: u64, d: u32, side: u64) -> bool {
    let mut hits = 0;
    for _ in 0..d {
        let (ca, cb) = (a % side, b % side);
        if ca != cb {
            let diff = ca.abs_diff(cb);
            if diff != 1 && diff != side - 1 {
                return false;
            }
            hits += 1;
            if hits > 1 {
                return false;
            }
        }
        a /= side;
        b /= side;
    }
    hits == 1
}

/// Per-vertex list of earlier-labeled endpoints, so every edge is examined
/// exactly once, when its later endpoint is placed.
fn earlier_neighbors(t: &Topology) -> Vec<Vec<usize>> {
    let g = t.canonical();
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); g.vertex_count()];
    for e in g.edges() {
        let (lo, hi) = (e.a.min(e.b), e.a.max(e.b));
        earlier[hi].push(lo);
    }
    earlier
}

fn guard_placements(t: &Topology, torus: &TorusSpec) -> Result<()> {
    torus.validate_for_edges(t.edge_count())?;
    let v = t.canonical().vertex_count();
    if (torus.sites() as f64).powi(v as i32 - 1) > MAX_PLACEMENTS {
        return Err(Error::InvalidInput(format!(
            "placement space {}^{} too large for exact enumeration",
            torus.sites(),
            v - 1
        )));
    }
    Ok(())
}

/// Histogram over injective placements (vertex 0 at site 0) of the number of
/// edges whose endpoints land on torus neighbors. Summing the 2^n kind
/// assignments edge-by-edge turns this into the full weighted sum.
fn nn_histogram(t: &Topology, torus: &TorusSpec) -> Result<Vec<u64>> {
    guard_placements(t, torus)?;
    let g = t.canonical();
    let v = g.vertex_count();
    let n = g.edge_count();
    let earlier = earlier_neighbors(t);
    let n_sites = torus.sites();
    let mut hist = vec![0u64; n + 1];
    let mut sites = vec![0u64; v];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        m: usize,
        k: usize,
        v: usize,
        n_sites: u64,
        torus: &TorusSpec,
        earlier: &[Vec<usize>],
        sites: &mut Vec<u64>,
        hist: &mut Vec<u64>,
    ) {
        if m == v {
            hist[k] += 1;
            return;
        }
        for site in 0..n_sites {
            if sites[..m].contains(&site) {
                continue;
            }
            let gained = earlier[m]
                .iter()
                .filter(|&&u| is_nn(sites[u], site, torus.d, torus.side))
                .count();
            sites[m] = site;
            rec(m + 1, k + gained, v, n_sites, torus, earlier, sites, hist);
        }
    }
    rec(1, 0, v, n_sites, torus, &earlier, &mut sites, &mut hist);
    Ok(hist)
}

fn rat_pow(base: &Rational, k: usize) -> Rational {
    let mut acc = rat(1);
    for _ in 0..k {
        acc *= base.clone();
    }
    acc
}

/// Exact pre-limit weighted sum of all kind assignments of a topology on a
/// finite torus: sum over injective placements of the product over edges of
/// (1/(2d) on torus neighbors) - 1/(N-1).
pub fn finite_weighted_sum(t: &Topology, torus: &TorusSpec) -> Result<Rational> {
    let hist = nn_histogram(t, torus)?;
    let n = t.edge_count();
    let n_sites = torus.sites();
    let dash = -ratio(1, n_sites as i64 - 1);
    let solid_nn = ratio(1, 2 * torus.d as i64) + dash.clone();
    let mut total = rat(0);
    for (k, &count) in hist.iter().enumerate() {
        if count == 0 {
            continue;
        }
        total += rat(count as i64) * rat_pow(&solid_nn, k) * rat_pow(&dash, n - k);
    }
    Ok(total)
}

/// Exact pre-limit value of a single kind assignment: solid edges constrain
/// endpoints to torus neighbors, dashed edges contribute -1/(N-1) freely.
pub fn finite_branch_sum(t: &Topology, kinds: &[EdgeKind], torus: &TorusSpec) -> Result<Rational> {
    let g = t.canonical();
    if kinds.len() != g.edge_count() {
        return Err(Error::InvalidInput(format!(
            "expected {} kinds, got {}",
            g.edge_count(),
            kinds.len()
        )));
    }
    if kinds.contains(&EdgeKind::Wavy) {
        return Err(Error::InvalidInput(
            "branch evaluation needs solid/dashed kinds".into(),
        ));
    }
    guard_placements(t, torus)?;
    let v = g.vertex_count();
    // solid edges grouped by their later endpoint
    let mut solid_earlier: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (e, kind) in g.edges().iter().zip(kinds) {
        if *kind == EdgeKind::Solid {
            let (lo, hi) = (e.a.min(e.b), e.a.max(e.b));
            solid_earlier[hi].push(lo);
        }
    }
    let n_sites = torus.sites();
    let mut sites = vec![0u64; v];

    fn rec(
        m: usize,
        v: usize,
        n_sites: u64,
        torus: &TorusSpec,
        solid_earlier: &[Vec<usize>],
        sites: &mut Vec<u64>,
    ) -> u64 {
        if m == v {
            return 1;
        }
        let mut total = 0;
        for site in 0..n_sites {
            if sites[..m].contains(&site) {
                continue;
            }
            if solid_earlier[m]
                .iter()
                .any(|&u| !is_nn(sites[u], site, torus.d, torus.side))
            {
                continue;
            }
            sites[m] = site;
            total += rec(m + 1, v, n_sites, torus, solid_earlier, sites);
        }
        total
    }
    let count = rec(1, v, n_sites, torus, &solid_earlier, &mut sites);
    let a = kinds.iter().filter(|k| **k == EdgeKind::Solid).count();
    let b = kinds.len() - a;
    let weight =
        rat_pow(&ratio(1, 2 * torus.d as i64), a) * rat_pow(&(-ratio(1, n_sites as i64 - 1)), b);
    Ok(rat(count as i64) * weight)
}

/// Exact polynomial in 1/(N-1) describing the pre-limit value at fixed d.
/// The constant term is the large-N limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NSeries {
    coeffs: Polynomial<Rational>,
}

impl NSeries {
    pub fn constant_term(&self) -> Rational {
        self.coeffs.coeff(0)
    }

    pub fn coeff(&self, k: u32) -> Rational {
        self.coeffs.coeff(k)
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.degree()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_zero()
    }

    /// Evaluate at a concrete site count N.
    pub fn eval_at_sites(&self, n_sites: u64) -> Rational {
        self.coeffs.eval(&ratio(1, n_sites as i64 - 1))
    }

    pub fn to_string_map(&self) -> std::collections::BTreeMap<String, String> {
        self.coeffs.to_string_map()
    }
}

fn validate_sides(n: usize, d: u32, sides: &[u64]) -> Result<Vec<TorusSpec>> {
    let mut seen = BTreeSet::new();
    let mut specs = Vec::with_capacity(sides.len());
    for &side in sides {
        if !seen.insert(side) {
            return Err(Error::InvalidInput(format!("duplicate torus side {side}")));
        }
        let spec = TorusSpec::new(d, side)?;
        spec.validate_for_edges(n)?;
        specs.push(spec);
    }
    if specs.len() < n + 1 {
        return Err(Error::InvalidInput(format!(
            "need at least {} torus sizes for a degree-{n} fit, got {}",
            n + 1,
            specs.len()
        )));
    }
    Ok(specs)
}

fn fit_series(
    n: usize,
    specs: &[TorusSpec],
    mut value: impl FnMut(&TorusSpec) -> Result<Rational>,
) -> Result<NSeries> {
    let mut samples = Vec::with_capacity(specs.len());
    for spec in specs {
        samples.push((spec.sites(), value(spec)?));
    }
    let points: Vec<(Rational, Rational)> = samples[..n + 1]
        .iter()
        .map(|(sites, v)| (ratio(1, *sites as i64 - 1), v.clone()))
        .collect();
    let poly = interpolate(&points);
    let series = NSeries { coeffs: poly };
    for (sites, expect) in &samples[n + 1..] {
        let got = series.eval_at_sites(*sites);
        if &got != expect {
            return Err(Error::Consistency(format!(
                "residual check failed at N={sites}: series gives {got}, direct evaluation gives {expect}; the degree bound {n} does not hold"
            )));
        }
    }
    Ok(series)
}

/// Fit the pre-limit values at the given torus sides (all with the same d) to
/// a polynomial of degree <= n in 1/(N-1). At least n+1 sides are required;
/// one extra torus is always evaluated as an exact residual check (a further
/// side is synthesized when none is left over).
pub fn extrapolate_limit(t: &Topology, d: u32, sides: &[u64]) -> Result<NSeries> {
    let n = t.edge_count();
    let specs = sized_specs(n, d, sides)?;
    fit_series(n, &specs, |spec| finite_weighted_sum(t, spec))
}

/// Same fit for a single kind assignment.
pub fn extrapolate_branch(
    t: &Topology,
    kinds: &[EdgeKind],
    d: u32,
    sides: &[u64],
) -> Result<NSeries> {
    let n = t.edge_count();
    let specs = sized_specs(n, d, sides)?;
    fit_series(n, &specs, |spec| finite_branch_sum(t, kinds, spec))
}

fn sized_specs(n: usize, d: u32, sides: &[u64]) -> Result<Vec<TorusSpec>> {
    let mut specs = validate_sides(n, d, sides)?;
    if specs.len() == n + 1 {
        let extra = specs.iter().map(|s| s.side).max().unwrap() + 2;
        specs.push(TorusSpec::new(d, extra)?);
    }
    Ok(specs)
}
