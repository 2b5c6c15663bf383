//! Command-line front end: catalogs, weighted sums, reduction, embedding
//! polynomials, the finite-torus oracle, the form verifier, and kernel
//! assembly, with a persistent embedding-count cache.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 internal
//! consistency failure, 4 theorem-check failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use num::ToPrimitive;
use serde_json::json;
use sha2::{Digest, Sha256};

use dimer_kernels::{
    assemble_kernel, enumerate_topologies, reduce_to_nondegenerate, verify_sweep, weighted_sum,
    BridgeOrder, EmbedCache, Error, LaurentPoly, Multigraph, PsiTable, Topology, GENERATOR_VERSION,
};

#[derive(Parser)]
#[command(
    name = "dimer-kernels",
    version,
    about = "Exact lattice sums of small multigraph topologies as Laurent polynomials in the dimension"
)]
struct RunConfig {
    /// Directory for the persistent embedding-count cache
    #[arg(long, global = true, env = "DIMER_KERNELS_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    /// Worker threads for catalog sweeps (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Add approximate decimal values next to the exact rationals
    #[arg(long, global = true)]
    decimal: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the catalog of connected n-edge topologies
    Topologies {
        #[arg(long)]
        n: u32,
        /// Write the catalog to this file (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write to DIR/topologies-n{n}.json
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Weighted sums for every topology of a catalog file, or one topology
    WeightedSum {
        /// Catalog JSON produced by `topologies`
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Single topology JSON
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Write one laurent-{hash}.json per topology into this directory
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Expand a graph with wavy bridges into signed all-solid terms
    Reduce {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Embedding-count polynomial of an all-solid graph
    EmbedPoly {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Finite-torus evaluation and large-N extrapolation for a topology
    Oracle {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        d: u32,
        /// Comma-separated even torus side lengths
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u64>,
    },
    /// Sweep the full n-edge catalog and check the exponent form
    Verify {
        #[arg(long)]
        n: u32,
        /// Write the full JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Assemble the kernel from per-topology sums and a psi table
    Kernel {
        #[arg(long)]
        n: u32,
        /// Flat JSON map {"<topology hash>": "p/q", ...}
        #[arg(long)]
        psi: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    if let Some(jobs) = cfg.jobs {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .is_err()
        {
            eprintln!("error: could not configure {jobs} worker threads");
            return ExitCode::from(2);
        }
    }
    match run(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Consistency(_)) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn open_cache(cfg: &RunConfig) -> anyhow::Result<EmbedCache> {
    match &cfg.cache_dir {
        Some(dir) => Ok(EmbedCache::open(dir)?),
        None => Ok(EmbedCache::in_memory()),
    }
}

fn digest(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_or_print(path: Option<&Path>, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn laurent_json(w: &LaurentPoly, decimal: bool) -> serde_json::Value {
    let mut obj = json!({ "laurent": w.to_string_map() });
    if decimal {
        obj["decimal"] = json!(w.to_decimal_map());
    }
    obj
}

fn load_topology(path: &Path) -> anyhow::Result<Topology> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing topology from {}", path.display()))
}

fn run(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    match &cfg.command {
        Command::Topologies { n, out, out_dir } => {
            let catalog = enumerate_topologies(*n)?;
            let value = serde_json::to_value(&catalog.entries)?;
            let path = match (out, out_dir) {
                (Some(p), _) => Some(p.clone()),
                (None, Some(dir)) => Some(dir.join(format!("topologies-n{n}.json"))),
                (None, None) => None,
            };
            write_or_print(path.as_deref(), &value)?;
            eprintln!("{} topologies with {n} edges", catalog.entries.len());
            Ok(ExitCode::SUCCESS)
        }

        Command::WeightedSum {
            catalog,
            topology,
            out_dir,
        } => {
            let cache = open_cache(cfg)?;
            let topologies: Vec<Topology> = match (catalog, topology) {
                (Some(path), None) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("parsing catalog from {}", path.display()))?
                }
                (None, Some(path)) => vec![load_topology(path)?],
                _ => bail!("pass exactly one of --catalog or --topology"),
            };
            let mut outputs = Vec::new();
            for t in &topologies {
                let w = weighted_sum(t, &cache)?;
                let mut obj = laurent_json(&w, cfg.decimal);
                obj["topologyHash"] = json!(t.hash());
                obj["n"] = json!(t.edge_count());
                outputs.push((t.hash().to_string(), obj));
            }
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    for (hash, obj) in &outputs {
                        write_or_print(Some(&dir.join(format!("laurent-{hash}.json"))), obj)?;
                    }
                    eprintln!("wrote {} weighted sums to {}", outputs.len(), dir.display());
                }
                None => {
                    let arr: Vec<_> = outputs.into_iter().map(|(_, o)| o).collect();
                    if arr.len() == 1 {
                        write_or_print(None, &arr[0])?;
                    } else {
                        write_or_print(None, &json!(arr))?;
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Reduce { graph } => {
            let text = fs::read_to_string(graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let g: Multigraph = serde_json::from_str(&text)
                .with_context(|| format!("parsing graph from {}", graph.display()))?;
            // all-solid input gets its bridges marked automatically
            let marked = if g.all_solid() {
                dimer_kernels::mark_bridges_wavy(&g)
            } else {
                g
            };
            let red = reduce_to_nondegenerate(&marked, BridgeOrder::LowestId)?;
            write_or_print(None, &serde_json::to_value(&red.terms)?)?;
            eprintln!(
                "{} terms, {} zero-weight merges dropped",
                red.terms.len(),
                red.zero_weight_dropped
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::EmbedPoly { graph } => {
            let cache = open_cache(cfg)?;
            let text = fs::read_to_string(graph)
                .with_context(|| format!("reading {}", graph.display()))?;
            let g: Multigraph = serde_json::from_str(&text)
                .with_context(|| format!("parsing graph from {}", graph.display()))?;
            let poly = cache.embedding_polynomial(&g)?;
            let mut obj = json!({
                "degree": poly.degree(),
                "coeffs": poly.to_string_map(),
            });
            if cfg.decimal {
                let dec: BTreeMap<String, f64> = poly
                    .iter()
                    .map(|(e, c)| (e.to_string(), c.to_f64().unwrap_or(f64::NAN)))
                    .collect();
                obj["decimal"] = json!(dec);
            }
            write_or_print(None, &obj)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Oracle { topology, d, sizes } => {
            let t = load_topology(topology)?;
            let series = dimer_kernels::extrapolate_limit(&t, *d, sizes)?;
            let limit = series.constant_term();
            let mut obj = json!({
                "series": series.to_string_map(),
                "limit": limit.to_string(),
            });
            if cfg.decimal {
                obj["limitDecimal"] = json!(limit.to_f64().unwrap_or(f64::NAN));
            }
            write_or_print(None, &obj)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { n, report } => {
            let cache = open_cache(cfg)?;
            let sweep = verify_sweep(*n, &cache)?;
            let mut failed = 0usize;
            for r in &sweep.reports {
                let status = if r.passes_form && r.passes_sum_bound {
                    "pass"
                } else {
                    "FAIL"
                };
                if status == "FAIL" {
                    failed += 1;
                }
                println!(
                    "{status}  {}  r={}  max={}  W={}",
                    &r.topology_hash[..16],
                    r.min_exponent.map_or("-".into(), |e| e.to_string()),
                    r.max_exponent.map_or("-".into(), |e| e.to_string()),
                    r.laurent
                );
            }
            println!(
                "verify n={n}: {} topologies, {} passed, {failed} failed, {} zero sums, min 1/d exponent {:?}",
                sweep.reports.len(),
                sweep.reports.len() - failed,
                sweep.zero_sums,
                sweep.observed_min_r
            );
            if let Some(path) = report {
                let value = json!({
                    "generatorVersion": GENERATOR_VERSION,
                    "command": "verify",
                    "n": n,
                    "inputDigest": digest(&[format!("verify:n={n}").as_bytes()]),
                    "summary": {
                        "topologies": sweep.reports.len(),
                        "passed": sweep.reports.len() - failed,
                        "failed": failed,
                        "zeroSums": sweep.zero_sums,
                        "leavesChecked": sweep.leaves_checked,
                        "minExponentObserved": sweep.observed_min_r,
                    },
                    "reports": sweep.reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
                });
                write_or_print(Some(path), &value)?;
            }
            if failed > 0 {
                Ok(ExitCode::from(4))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::Kernel { n, psi, report } => {
            let cache = open_cache(cfg)?;
            let catalog = enumerate_topologies(*n)?;
            let text =
                fs::read_to_string(psi).with_context(|| format!("reading {}", psi.display()))?;
            let table = PsiTable::from_json_str(&text, psi.display().to_string())?;
            let (result, form) = assemble_kernel(&catalog, &table, &cache)?;
            let mut value = result.to_json();
            value["generatorVersion"] = json!(GENERATOR_VERSION);
            value["inputDigest"] =
                digest(&[format!("kernel:n={n}:").as_bytes(), text.as_bytes()]).into();
            value["formPasses"] = json!(form.passes_form);
            if cfg.decimal {
                value["valueDecimal"] = json!(result.value.to_decimal_map());
            }
            write_or_print(report.as_deref(), &value)?;
            if !form.passes_form {
                eprintln!("assembled kernel violates the exponent form");
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
