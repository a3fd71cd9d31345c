//! `tngeo` argument parsing and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tngeo_core::holo::{self, FermionClass};
use tngeo_core::mera;
use tngeo_core::mps;
use tngeo_core::netgraph::{geodesic, min_cut, Region};

use crate::config::{ExperimentConfig, Format, Quantity, Sweep};
use crate::experiment::{self, build_graph, build_instance, fmt_num, to_json, Instance};
use crate::fit::{fit_decay, fit_entropy};
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "tngeo", version, about = "Geodesics, min-cuts, correlators and entropies of MPS and MERA networks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (output directory for `run`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Emit the network graph in text form.
    Build,
    /// Hop distance between two sites.
    Geodesic {
        #[arg(long)]
        x1: usize,
        #[arg(long)]
        x2: usize,
    },
    /// Minimal cut around a block (`--start/--len` on chains, `--rect x,y,w,h` on PEPS).
    Mincut {
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        len: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        rect: Option<Vec<usize>>,
    },
    #[command(subcommand)]
    Mps(StateOp),
    #[command(subcommand)]
    Mera(StateOp),
    #[command(subcommand)]
    Frmera(FrOp),
    #[command(subcommand)]
    Branch(BranchOp),
    /// Model selection on (x, y) points read from a two-column CSV.
    Fit {
        #[arg(value_enum)]
        kind: FitKind,
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the configured sweep and write the report bundle.
    Run,
}

#[derive(Debug, Subcommand)]
pub enum StateOp {
    /// Connected two-point correlators and a decay fit.
    Corr {
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<usize>>,
        #[arg(long)]
        x1: Option<usize>,
    },
    /// Central-block entropies and a growth fit.
    Entropy {
        #[arg(long, value_delimiter = ',')]
        l: Option<Vec<usize>>,
    },
    /// Transfer-matrix (MPS) or scaling-superoperator (MERA) spectrum.
    Spectrum,
}

#[derive(Debug, Subcommand)]
pub enum FrOp {
    /// Graph of the finite-range MERA.
    Build,
    /// Exact MPS compilation with fidelity and bond dimensions.
    Convert,
    /// Log-to-linear geodesic crossover.
    Crossover {
        #[arg(long, value_delimiter = ',')]
        r: Option<Vec<usize>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BranchOp {
    /// Entropy scaling class of a branching tree, or the whole fermion table.
    Classify {
        #[arg(long, required_unless_present = "table")]
        dim: Option<usize>,
        /// `gapped` or `surface:Γ`.
        #[arg(long, default_value = "gapped")]
        class: String,
        #[arg(long, default_value_t = 4)]
        z0: usize,
        #[arg(long)]
        table: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FitKind {
    Decay,
    Entropy,
}

/// Parse, dispatch, print errors; returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tngeo: {e}");
            e.exit_code()
        }
    }
}

fn load(common: &Common) -> CliResult<ExperimentConfig> {
    let path = common.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(f) = common.format {
        cfg.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    Ok(cfg)
}

fn emit(common: &Common, body: &str) -> CliResult<()> {
    match &common.out {
        Some(p) => std::fs::write(p, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn render<T: Serialize>(cfg_format: Format, csv: impl FnOnce() -> String, value: &T) -> CliResult<String> {
    match cfg_format {
        Format::Csv => Ok(csv()),
        Format::Json => to_json(value),
    }
}

fn require(cfg: &ExperimentConfig, kind: &str) -> CliResult<()> {
    if cfg.geometry.name() != kind {
        return Err(CliError::Config(format!("field `geometry.kind`: this command needs {kind}, config has {}", cfg.geometry.name())));
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let common = &cli.common;
    match &cli.cmd {
        Cmd::Build => emit(common, &build_graph(&load(common)?.geometry)?.to_text()),
        Cmd::Geodesic { x1, x2 } => {
            let cfg = load(common)?;
            let g = build_graph(&cfg.geometry)?;
            let length = geodesic(&g, *x1, *x2)?;
            #[derive(Serialize)]
            struct Out {
                x1: usize,
                x2: usize,
                length: usize,
            }
            let out = Out { x1: *x1, x2: *x2, length };
            emit(common, &render(cfg.output.format, || format!("x1,x2,length\n{x1},{x2},{length}\n"), &out)?)
        }
        Cmd::Mincut { start, len, rect } => {
            let cfg = load(common)?;
            let g = build_graph(&cfg.geometry)?;
            let region = match (rect, start, len) {
                (Some(r), None, None) if r.len() == 4 => Region::rect(r[0], r[1], r[2], r[3])?,
                (None, Some(s), Some(l)) => Region::interval(*s, *l)?,
                (None, None, Some(l)) => Region::central(*l, cfg.geometry.n_sites())?,
                _ => return Err(CliError::Config("give --len [--start] or --rect x,y,w,h".into())),
            };
            let c = min_cut(&g, &region)?;
            emit(common, &render(cfg.output.format, || format!("n_a,weight_bits\n{},{}\n", c.n_a, fmt_num(c.weight)), &c)?)
        }
        Cmd::Mps(op) => state_op(common, "mps", op),
        Cmd::Mera(op) => state_op(common, "mera", op),
        Cmd::Frmera(op) => fr_op(common, op),
        Cmd::Branch(BranchOp::Classify { dim, class, z0, table }) => {
            let format = common.format.map_or(Format::Json, |f| match f {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            });
            if *table {
                let rows = holo::fermion_table()?;
                let csv = || {
                    let mut s = String::from("dim,class,scaling\n");
                    for r in &rows {
                        let class = match r.class {
                            FermionClass::Gapped => "gapped".to_string(),
                            FermionClass::Surface(g) => format!("surface:{g}"),
                        };
                        s.push_str(&format!("{},{class},{}\n", r.dim, r.label));
                    }
                    s
                };
                return emit(common, &render(format, csv, &rows)?);
            }
            let dim = dim.unwrap_or(1);
            let class = parse_class(class)?;
            let pred = holo::classify_branching(&holo::fermion_tree(dim, class, *z0)?, dim)?;
            emit(common, &render(format, || format!("dim,scaling\n{dim},{}\n", pred.class_label), &pred)?)
        }
        Cmd::Fit { kind, input } => {
            let points = read_points(input)?;
            let rep = match kind {
                FitKind::Decay => fit_decay(&points)?,
                FitKind::Entropy => fit_entropy(&points)?,
            };
            emit(common, &to_json(&rep)?)
        }
        Cmd::Run => {
            let cfg = load(common)?;
            let dir = common
                .out
                .clone()
                .or_else(|| cfg.output.dir.clone())
                .ok_or_else(|| CliError::Config("`run` needs --out DIR or output.dir".into()))?;
            let manifest = experiment::run(&cfg, &dir)?;
            eprintln!("wrote {} files to {}", manifest.files.len() + 2, dir.display());
            Ok(())
        }
    }
}

fn parse_class(s: &str) -> CliResult<FermionClass> {
    if s == "gapped" {
        return Ok(FermionClass::Gapped);
    }
    s.strip_prefix("surface:")
        .and_then(|g| g.parse().ok())
        .map(FermionClass::Surface)
        .ok_or_else(|| CliError::Config(format!("--class {s}: expected `gapped` or `surface:Γ`")))
}

/// Two numeric columns; a non-numeric first line is taken as a header.
fn read_points(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cells.as_slice() {
            [x, y] => x.parse::<f64>().ok().zip(y.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => points.push(p),
            None if i == 0 => continue,
            None => return Err(CliError::Config(format!("{}:{}: expected `x,y`", path.display(), i + 1))),
        }
    }
    Ok(points)
}

fn grid_sweep(cfg: &ExperimentConfig, quantity: Quantity, grid: Option<Vec<usize>>, x1: Option<usize>) -> CliResult<Sweep> {
    let base = cfg.sweep.clone().filter(|s| s.quantity == quantity);
    let mut s = base.unwrap_or(Sweep { quantity, r: None, l: None, x1: None });
    match quantity {
        Quantity::Correlator | Quantity::Geodesic => s.r = grid.or(s.r),
        Quantity::Entropy | Quantity::Mincut => s.l = grid.or(s.l),
    }
    s.x1 = x1.or(s.x1);
    let mut check = cfg.clone();
    check.sweep = Some(s.clone());
    check.validate()?;
    Ok(s)
}

fn state_op(common: &Common, kind: &str, op: &StateOp) -> CliResult<()> {
    let cfg = load(common)?;
    require(&cfg, kind)?;
    let sweep = match op {
        StateOp::Corr { r, x1 } => grid_sweep(&cfg, Quantity::Correlator, r.clone(), *x1)?,
        StateOp::Entropy { l } => grid_sweep(&cfg, Quantity::Entropy, l.clone(), None)?,
        StateOp::Spectrum => return spectrum(common, &cfg),
    };
    let res = experiment::sweep(&cfg, &sweep)?;
    emit(common, &render(cfg.output.format, || res.table.to_csv(), &res)?)
}

#[derive(Serialize)]
struct MpsSpectrum {
    correlation: mps::CorrelationLength,
    eigenvalues: Vec<tngeo_core::C64>,
}

fn spectrum_csv(eigs: &[tngeo_core::C64], exponents: Option<&[f64]>) -> String {
    let mut s = String::from(if exponents.is_some() { "k,re,im,abs,exponent\n" } else { "k,re,im,abs\n" });
    for (k, l) in eigs.iter().enumerate() {
        s.push_str(&format!("{k},{},{},{}", fmt_num(l.re), fmt_num(l.im), fmt_num(l.norm())));
        if let Some(q) = exponents {
            s.push_str(&format!(",{}", fmt_num(q[k])));
        }
        s.push('\n');
    }
    s
}

fn spectrum(common: &Common, cfg: &ExperimentConfig) -> CliResult<()> {
    match build_instance(cfg)? {
        Instance::Mps { state, .. } => {
            let mut eigenvalues: Vec<_> = tngeo_core::linalg::general_eig(state.transfer_matrix(None)?.matrix())?
                .into_iter()
                .map(|(l, _)| l)
                .collect();
            eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.re.total_cmp(&a.re)).then(b.im.total_cmp(&a.im)));
            let out = MpsSpectrum { correlation: mps::correlation_length(&state)?, eigenvalues };
            emit(common, &render(cfg.output.format, || spectrum_csv(&out.eigenvalues, None), &out)?)
        }
        Instance::Mera(m) => {
            let sp = mera::scaling_spectrum(&m)?;
            emit(common, &render(cfg.output.format, || spectrum_csv(&sp.eigenvalues, Some(&sp.exponents)), &sp)?)
        }
        Instance::FiniteRange(_) => Err(CliError::Config("spectra are defined for mps and mera geometries".into())),
    }
}

fn fr_op(common: &Common, op: &FrOp) -> CliResult<()> {
    let cfg = load(common)?;
    require(&cfg, "finite-range-mera")?;
    match op {
        FrOp::Build => emit(common, &build_graph(&cfg.geometry)?.to_text()),
        FrOp::Convert => {
            let Instance::FiniteRange(m) = build_instance(&cfg)? else { unreachable!("geometry checked above") };
            let rep = holo::mera_to_mps(&m)?;
            let csv = || {
                let mut s = String::from("bond,chi_mps\n");
                for (i, c) in rep.chi_mps_per_bond.iter().enumerate() {
                    s.push_str(&format!("{i},{c}\n"));
                }
                s
            };
            emit(common, &render(cfg.output.format, csv, &rep)?)
        }
        FrOp::Crossover { r } => {
            let n = cfg.geometry.n_sites();
            let origin = experiment::default_x1(&cfg.geometry);
            let rs = r.clone().unwrap_or_else(|| {
                (1..usize::BITS as usize).map(|k| 1usize << k).take_while(|&v| origin + v < n).collect()
            });
            let rep = holo::crossover_diagnostics(&build_graph(&cfg.geometry)?, &rs)?;
            let csv = || {
                let mut s = String::from("r,geodesic,regime\n");
                for row in &rep.rows {
                    s.push_str(&format!("{},{},{:?}\n", row.r, row.geodesic, row.regime).to_lowercase());
                }
                s
            };
            emit(common, &render(cfg.output.format, csv, &rep)?)
        }
    }
}
