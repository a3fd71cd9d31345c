//! Instances built from a config, sweeps over them, and the `run` bundle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tngeo_core::holo::{self, FiniteRangeMERA};
use tngeo_core::mera::{self, BinaryMERA};
use tngeo_core::mps::{self, HomogeneousMPS};
use tngeo_core::netgraph::{
    build_branching_mera_graph_1d, build_finite_range_mera_graph_dims, build_mera_graph_dims, build_mps_graph,
    build_peps_graph, geodesic, min_cut, Region, TNGraph,
};
use tngeo_core::tensor::derive_seed;
use tngeo_core::LocalOperator;

use crate::config::{ExperimentConfig, Format, Geometry, Quantity, Sweep};
use crate::fit::{fit_decay, fit_entropy, ScalingReport};
use crate::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A state to measure on.
pub enum Instance {
    Mps { state: HomogeneousMPS, n: usize },
    Mera(BinaryMERA),
    FiniteRange(FiniteRangeMERA),
}

pub fn build_instance(cfg: &ExperimentConfig) -> CliResult<Instance> {
    let seed = cfg.seed;
    Ok(match cfg.geometry {
        Geometry::Mps { n, chi, d } => Instance::Mps { state: HomogeneousMPS::random(chi, d, seed)?, n },
        Geometry::Mera { n, chi, d, scale_invariant, .. } => {
            let t = cfg.geometry.mera_layers().unwrap_or(0);
            Instance::Mera(mera::random_mera_with_dim(n, t, d, chi, seed, scale_invariant)?)
        }
        Geometry::FiniteRangeMera { n, z_xi, dz, chi, d } => {
            Instance::FiniteRange(holo::build_finite_range_mera_with_dim(n, z_xi, dz, d, chi, seed)?)
        }
        Geometry::Peps { .. } | Geometry::BranchingMera { .. } => {
            return Err(CliError::Config(format!("a {} graph carries no state", cfg.geometry.name())))
        }
    })
}

/// Network graph of the configured geometry, with its bond dimensions.
pub fn build_graph(geometry: &Geometry) -> CliResult<TNGraph> {
    Ok(match *geometry {
        Geometry::Mps { n, chi, d } => build_mps_graph(n)?.with_uniform_bond_dim(chi)?.with_site_dim(d)?,
        Geometry::Peps { lx, ly } => build_peps_graph(lx, ly)?,
        Geometry::Mera { n, chi, d, scale_invariant, .. } => {
            build_mera_graph_dims(n, geometry.mera_layers().unwrap_or(0), scale_invariant, d, chi)?
        }
        Geometry::FiniteRangeMera { n, z_xi, dz, chi, d } => build_finite_range_mera_graph_dims(n, z_xi + dz, d, chi)?,
        Geometry::BranchingMera { n, ref schedule } => {
            build_branching_mera_graph_1d(n, &schedule.iter().copied().collect())?
        }
    })
}

/// The P and Q of every correlator, drawn from the master seed.
pub fn operators(seed: u64, d: usize) -> (LocalOperator, LocalOperator) {
    (LocalOperator::random_traceless(d, derive_seed(seed, 1)), LocalOperator::random_traceless(d, derive_seed(seed, 2)))
}

fn site_dim(g: &Geometry) -> usize {
    match *g {
        Geometry::Mps { d, .. } | Geometry::Mera { d, .. } | Geometry::FiniteRangeMera { d, .. } => d,
        Geometry::Peps { .. } | Geometry::BranchingMera { .. } => 2,
    }
}

/// Geodesics on the open finite-range chain start a quarter in, away from
/// the edge.
pub fn default_x1(g: &Geometry) -> usize {
    match g {
        Geometry::FiniteRangeMera { n, .. } => n / 4,
        _ => 0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub quantity: Quantity,
    pub geometry: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// (x, y) pairs handed to the fit: first column against the last.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r[0], r[r.len() - 1])).collect()
    }
}

/// Shortest round-trip form; scientific notation for small magnitudes.
pub fn fmt_num(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub table: SweepTable,
    pub report: ScalingReport,
}

fn pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Config(format!("worker pool: {e}")))
}

/// Evaluate every grid point (in parallel, collected in grid order) and fit.
pub fn sweep(cfg: &ExperimentConfig, s: &Sweep) -> CliResult<SweepResult> {
    let mut grid = match s.quantity {
        Quantity::Correlator | Quantity::Geodesic => s.r.clone(),
        Quantity::Entropy | Quantity::Mincut => s.l.clone(),
    }
    .unwrap_or_default();
    grid.sort_unstable();
    grid.dedup();
    let pool = pool(cfg.workers)?;
    let (columns, rows): (Vec<&str>, Vec<Vec<f64>>) = match s.quantity {
        Quantity::Correlator => {
            let inst = build_instance(cfg)?;
            let (p, q) = operators(cfg.seed, site_dim(&cfg.geometry));
            let x1 = s.x1.unwrap_or(0);
            let rows = pool.install(|| {
                grid.par_iter()
                    .map(|&r| {
                        let c = match &inst {
                            Instance::Mps { state, .. } => mps::two_point_correlator(state, &p, &q, x1, x1 + r)?,
                            Instance::Mera(m) => mera::correlator_causal_cone(m, &p, &q, x1, x1 + r)?,
                            Instance::FiniteRange(m) => holo::correlator(m, &p, &q, x1, x1 + r)?,
                        };
                        Ok(vec![r as f64, c.re, c.im, c.norm()])
                    })
                    .collect::<CliResult<Vec<_>>>()
            })?;
            (vec!["r", "re", "im", "abs"], rows)
        }
        Quantity::Entropy => {
            let inst = build_instance(cfg)?;
            let rows = pool.install(|| {
                grid.par_iter()
                    .map(|&l| {
                        let s = match &inst {
                            Instance::Mps { state, n } => mps::block_entropy(state, l, *n)?,
                            Instance::Mera(m) => mera::block_entropy_central(m, l)?,
                            Instance::FiniteRange(m) => mera::block_entropy_central(m.mera(), l)?,
                        };
                        Ok(vec![l as f64, s])
                    })
                    .collect::<CliResult<Vec<_>>>()
            })?;
            (vec!["l", "entropy_bits"], rows)
        }
        Quantity::Mincut => {
            let g = build_graph(&cfg.geometry)?;
            let rows = pool.install(|| {
                grid.par_iter()
                    .map(|&l| {
                        let region = match cfg.geometry {
                            Geometry::Peps { lx, ly } => Region::rect((lx - l) / 2, (ly - l) / 2, l, l)?,
                            _ => Region::central(l, cfg.geometry.n_sites())?,
                        };
                        let c = min_cut(&g, &region)?;
                        Ok(vec![l as f64, c.weight, c.n_a as f64])
                    })
                    .collect::<CliResult<Vec<_>>>()
            })?;
            (vec!["l", "weight_bits", "n_a"], rows)
        }
        Quantity::Geodesic => {
            let g = build_graph(&cfg.geometry)?;
            let x1 = s.x1.unwrap_or_else(|| default_x1(&cfg.geometry));
            let rows = pool.install(|| {
                grid.par_iter()
                    .map(|&r| Ok(vec![r as f64, geodesic(&g, x1, x1 + r)? as f64]))
                    .collect::<CliResult<Vec<_>>>()
            })?;
            (vec!["r", "length"], rows)
        }
    };
    let table = SweepTable {
        quantity: s.quantity,
        geometry: cfg.geometry.name().into(),
        columns: columns.into_iter().map(String::from).collect(),
        rows,
    };
    let report = match s.quantity {
        Quantity::Correlator => fit_decay(&table.points())?,
        _ => fit_entropy(&table.points())?,
    };
    Ok(SweepResult { table, report })
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    /// Output file name → SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numeric(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write(dir: &Path, name: &str, body: &str) -> CliResult<()> {
    std::fs::write(dir.join(name), body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", dir.display())))
}

/// Run the configured sweep into `dir`: the sweep table (CSV or JSON),
/// report.json, and manifest.json are byte-stable for a fixed config; wall
/// time goes to timing.txt.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> CliResult<Manifest> {
    let s = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("field `sweep`: required by `run`".into()))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let start = Instant::now();
    let res = sweep(cfg, s)?;
    let (name, table) = match cfg.output.format {
        Format::Csv => ("sweep.csv", res.table.to_csv()),
        Format::Json => ("sweep.json", to_json(&res.table)?),
    };
    let report = to_json(&res.report)?;
    write(dir, name, &table)?;
    write(dir, "report.json", &report)?;
    let config_text = to_json(cfg)?;
    let manifest = Manifest {
        tool: "tngeo".into(),
        version: VERSION.into(),
        seed: cfg.seed,
        config: cfg.clone(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        files: BTreeMap::from([
            (name.to_string(), sha256_hex(table.as_bytes())),
            ("report.json".to_string(), sha256_hex(report.as_bytes())),
        ]),
    };
    write(dir, "manifest.json", &to_json(&manifest)?)?;
    write(dir, "timing.txt", &format!("wall_seconds {:.6}\n", start.elapsed().as_secs_f64()))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn mps_correlator_sweep_is_exponential() {
        let c = cfg(r#"{"seed": 21, "geometry": {"kind": "mps", "n": 64, "chi": 4},
                         "sweep": {"quantity": "correlator", "r": [9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26, 27]}}"#);
        let res = sweep(&c, c.sweep.as_ref().unwrap()).unwrap();
        assert_eq!(res.report.model, "exponential");
        assert_eq!(res.table.rows.len(), 19);
        assert_eq!(res.report.points.len(), 19);
    }

    #[test]
    fn mera_mincut_sweep_is_log() {
        let c = cfg(r#"{"seed": 1, "geometry": {"kind": "mera", "n": 256, "chi": 2},
                        "sweep": {"quantity": "mincut", "l": [4, 8, 16, 32, 64]}}"#);
        let res = sweep(&c, c.sweep.as_ref().unwrap()).unwrap();
        assert_eq!(res.report.model, "log");
    }

    #[test]
    fn csv_layout() {
        let t = SweepTable {
            quantity: Quantity::Entropy,
            geometry: "mps".into(),
            columns: vec!["l".into(), "entropy_bits".into()],
            rows: vec![vec![2.0, 0.5], vec![4.0, 2.5e-7]],
        };
        assert_eq!(t.to_csv(), "l,entropy_bits\n2,0.5\n4,2.5e-7\n");
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
