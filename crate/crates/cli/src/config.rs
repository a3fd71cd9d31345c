//! Experiment configuration: one JSON document, validated before any work.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random tensor and operator derives from it.
    pub seed: u64,
    pub geometry: Geometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// Sweep points evaluated concurrently (default: rayon's choice).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Geometry {
    Mps {
        n: usize,
        chi: usize,
        #[serde(default = "two")]
        d: usize,
    },
    Peps {
        lx: usize,
        ly: usize,
    },
    Mera {
        n: usize,
        /// Defaults to log₂N, a single top site.
        #[serde(default)]
        layers: Option<usize>,
        chi: usize,
        #[serde(default = "two")]
        d: usize,
        #[serde(default = "yes")]
        scale_invariant: bool,
    },
    FiniteRangeMera {
        n: usize,
        z_xi: usize,
        #[serde(default = "one")]
        dz: usize,
        chi: usize,
        #[serde(default = "two")]
        d: usize,
    },
    BranchingMera {
        n: usize,
        #[serde(default)]
        schedule: Vec<usize>,
    },
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

fn yes() -> bool {
    true
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Mps { .. } => "mps",
            Geometry::Peps { .. } => "peps",
            Geometry::Mera { .. } => "mera",
            Geometry::FiniteRangeMera { .. } => "finite-range-mera",
            Geometry::BranchingMera { .. } => "branching-mera",
        }
    }

    /// Number of physical sites along the chain (lx·ly for PEPS).
    pub fn n_sites(&self) -> usize {
        match *self {
            Geometry::Mps { n, .. }
            | Geometry::Mera { n, .. }
            | Geometry::FiniteRangeMera { n, .. }
            | Geometry::BranchingMera { n, .. } => n,
            Geometry::Peps { lx, ly } => lx * ly,
        }
    }

    pub fn mera_layers(&self) -> Option<usize> {
        match *self {
            Geometry::Mera { n, layers, .. } => Some(layers.unwrap_or(n.max(1).trailing_zeros() as usize)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Correlator,
    Entropy,
    Mincut,
    Geodesic,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub quantity: Quantity,
    /// Separations for correlator and geodesic sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<usize>>,
    /// Block lengths for entropy and min-cut sweeps (square side for PEPS).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<usize>>,
    /// Left site of correlator and geodesic pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parameter consistency. Size caps of the numerics are left to the
    /// engines, which report them as config errors too.
    pub fn validate(&self) -> CliResult<()> {
        let pow2 = |name: &str, n: usize| {
            if n < 2 || !n.is_power_of_two() {
                Err(field(name, format!("{n} is not a power of two ≥ 2")))
            } else {
                Ok(())
            }
        };
        match self.geometry {
            Geometry::Mps { n, chi, d } => {
                if n < 2 {
                    return Err(field("geometry.n", "need at least 2 sites"));
                }
                if chi == 0 || d == 0 {
                    return Err(field("geometry.chi", "χ and d must be positive"));
                }
            }
            Geometry::Peps { lx, ly } => {
                if lx == 0 || ly == 0 {
                    return Err(field("geometry.lx", "empty lattice"));
                }
            }
            Geometry::Mera { n, chi, d, .. } => {
                pow2("geometry.n", n)?;
                let t = self.geometry.mera_layers().unwrap_or(0);
                if t == 0 || n % (1 << t) != 0 {
                    return Err(field("geometry.layers", format!("{t} layers do not fit N={n}")));
                }
                if chi == 0 || d == 0 {
                    return Err(field("geometry.chi", "χ and d must be positive"));
                }
            }
            Geometry::FiniteRangeMera { n, z_xi, dz, chi, d } => {
                pow2("geometry.n", n)?;
                if z_xi + dz > n.trailing_zeros() as usize {
                    return Err(field("geometry.z_xi", format!("z₀ = {} exceeds log₂N", z_xi + dz)));
                }
                if chi == 0 || d == 0 {
                    return Err(field("geometry.chi", "χ and d must be positive"));
                }
            }
            Geometry::BranchingMera { n, ref schedule } => {
                pow2("geometry.n", n)?;
                if let Some(z) = schedule.iter().find(|&&z| z >= n.trailing_zeros() as usize) {
                    return Err(field("geometry.schedule", format!("split at layer {z} is above the top")));
                }
            }
        }
        if self.workers == Some(0) {
            return Err(field("workers", "must be at least 1"));
        }
        if let Some(s) = &self.sweep {
            self.validate_sweep(s)?;
        }
        Ok(())
    }

    fn validate_sweep(&self, s: &Sweep) -> CliResult<()> {
        let n = self.geometry.n_sites();
        let geo = self.geometry.name();
        match s.quantity {
            Quantity::Correlator | Quantity::Geodesic => {
                let (min, what) = if s.quantity == Quantity::Correlator { (5, "correlator") } else { (4, "geodesic") };
                let r = s.r.as_ref().ok_or_else(|| field("sweep.r", format!("required for a {what} sweep")))?;
                if r.len() < min {
                    return Err(field("sweep.r", format!("a {what} fit needs at least {min} separations")));
                }
                if r.contains(&0) {
                    return Err(field("sweep.r", "separations must be positive"));
                }
                if s.l.is_some() {
                    return Err(field("sweep.l", format!("not used by a {what} sweep")));
                }
                let x1 = s.x1.unwrap_or(0);
                let max = r.iter().max().copied().unwrap_or(0);
                let bounded = !matches!(self.geometry, Geometry::Mps { .. }) || s.quantity == Quantity::Geodesic;
                if bounded && x1 + max >= n {
                    return Err(field("sweep.r", format!("x1 + r = {} is off the {n}-site lattice", x1 + max)));
                }
                if matches!(self.geometry, Geometry::Peps { .. }) {
                    return Err(field("sweep.quantity", format!("{what} sweeps are defined on chains, not {geo}")));
                }
                if s.quantity == Quantity::Correlator && matches!(self.geometry, Geometry::BranchingMera { .. }) {
                    return Err(field("sweep.quantity", "branching MERA graphs carry no state"));
                }
            }
            Quantity::Entropy | Quantity::Mincut => {
                let l = s.l.as_ref().ok_or_else(|| field("sweep.l", "required for entropy and min-cut sweeps"))?;
                if l.len() < 4 {
                    return Err(field("sweep.l", "an entropy fit needs at least 4 block sizes"));
                }
                let side = match self.geometry {
                    Geometry::Peps { lx, ly } => lx.min(ly),
                    _ => n,
                };
                if l.iter().any(|&v| v == 0 || v > side) {
                    return Err(field("sweep.l", format!("block sizes must lie in 1..={side}")));
                }
                if s.r.is_some() || s.x1.is_some() {
                    return Err(field("sweep.r", "not used by an entropy or min-cut sweep"));
                }
                if s.quantity == Quantity::Entropy
                    && matches!(self.geometry, Geometry::Peps { .. } | Geometry::BranchingMera { .. })
                {
                    return Err(field("sweep.quantity", format!("no state behind a {geo} graph")));
                }
            }
        }
        Ok(())
    }
}
