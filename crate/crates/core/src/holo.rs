//! Gapped-regime machinery on top of the MERA engine: finite-range MERA
//! states, geodesic crossover, entropy saturation, exact MERA→MPS
//! compilation, and the branching-tree entropy classifier.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eig, Mat, C64, ZERO};
use crate::mera::{self, random_layers, BinaryMERA, MeraLayer, Top};
use crate::mps::FiniteMPS;
use crate::netgraph::{
    geodesic, layer_sum_predictor, level_dims, Boundary, min_cut, BranchingTree, GeometryKind, Prediction, Region, ScalingClass,
    TNGraph,
};
use crate::stats::{least_squares, LinearFit};
use crate::statevec;
use crate::tensor::{derive_seed, random_isometry_matrix, random_unit_vector, Tensor};

/// z_ξ layers shared with the scale-invariant MERA of the same seed, Δz
/// free random layers, and a product state on top.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteRangeMERA {
    mera: BinaryMERA,
    z_xi: usize,
    dz: usize,
}

impl FiniteRangeMERA {
    pub fn mera(&self) -> &BinaryMERA {
        &self.mera
    }

    pub fn z_xi(&self) -> usize {
        self.z_xi
    }

    pub fn dz(&self) -> usize {
        self.dz
    }

    pub fn z0(&self) -> usize {
        self.z_xi + self.dz
    }

    pub fn to_graph(&self) -> Result<TNGraph> {
        self.mera.to_graph()
    }
}

pub fn build_finite_range_mera(n: usize, z_xi: usize, dz: usize, chi: usize, seed: u64) -> Result<FiniteRangeMERA> {
    build_finite_range_mera_with_dim(n, z_xi, dz, 2, chi, seed)
}

pub fn build_finite_range_mera_with_dim(
    n: usize,
    z_xi: usize,
    dz: usize,
    d: usize,
    chi: usize,
    seed: u64,
) -> Result<FiniteRangeMERA> {
    let z0 = z_xi + dz;
    if n == 0 || z0 >= usize::BITS as usize || n % (1usize << z0) != 0 {
        return Err(invalid(format!("depth z₀={z0} exceeds what N={n} allows")));
    }
    if d < 2 || chi < d {
        return Err(invalid(format!("need d >= 2 and χ >= d, got d={d}, χ={chi}")));
    }
    let dims = level_dims(d, chi, z0);
    let mut layers: Vec<MeraLayer> = Vec::with_capacity(z0);
    layers.extend(random_layers(d, chi, z_xi, seed, true)?);
    for z in z_xi..z0 {
        let (df, dc) = (dims[z], dims[z + 1]);
        let s = derive_seed(seed, 0x1000 + z as u64);
        layers.push(MeraLayer::new(
            random_isometry_matrix(df * df, df * df, derive_seed(s, 0))?,
            random_isometry_matrix(df * df, dc, derive_seed(s, 1))?,
        )?);
    }
    let phi = random_unit_vector(dims[z0], derive_seed(seed, 0x2000));
    let mera = BinaryMERA::new(n, layers, Top::Product(phi), false)?.with_boundary(Boundary::Open);
    Ok(FiniteRangeMERA { mera, z_xi, dz })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Log,
    Linear,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossoverRow {
    pub r: usize,
    pub geodesic: usize,
    pub regime: Regime,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossoverReport {
    pub z0: Option<usize>,
    /// Site the geodesics start from: 0 on periodic graphs, N/4 on open ones
    /// so the chain edge stays out of reach.
    pub origin: usize,
    pub rows: Vec<CrossoverRow>,
    /// a + b·log₂r on the short-distance segment.
    pub log_fit: LinearFit,
    /// a′ + b′·r on the long-distance segment (None if no linear regime).
    pub linear_fit: Option<LinearFit>,
    /// Geometric mean of the last log-regime r and the first linear-regime r.
    pub kink: Option<f64>,
    pub linear_regime: bool,
}

/// Geodesics from site 0 to each r, split into a logarithmic segment and a
/// linear one. Every split with at least two points per side is tried and
/// the smallest total residual wins; the upper segment only counts as
/// linear if its slope is positive and it fits a straight line in r better
/// than a line in log₂r.
pub fn crossover_diagnostics(g: &TNGraph, rs: &[usize]) -> Result<CrossoverReport> {
    if !matches!(g.meta().kind, GeometryKind::FiniteRangeMera | GeometryKind::Mera) {
        return Err(invalid("crossover diagnostics need a MERA-type graph"));
    }
    let mut rs = rs.to_vec();
    rs.sort_unstable();
    rs.dedup();
    if rs.len() < 4 || rs[0] == 0 {
        return Err(invalid("need at least four distinct positive r values"));
    }
    let n = g.meta().n_sites;
    let origin = if g.meta().boundary == Boundary::Open { n / 4 } else { 0 };
    if origin + rs[rs.len() - 1] >= n {
        return Err(invalid(format!("r = {} runs off the {n}-site chain from site {origin}", rs[rs.len() - 1])));
    }
    let geo: Vec<usize> = rs.iter().map(|&r| geodesic(g, origin, origin + r)).collect::<Result<_>>()?;
    let x: Vec<f64> = rs.iter().map(|&r| r as f64).collect();
    let lx: Vec<f64> = x.iter().map(|r| r.log2()).collect();
    let y: Vec<f64> = geo.iter().map(|&v| v as f64).collect();
    let log_basis: [&dyn Fn(f64) -> f64; 2] = [&|_| 1.0, &|v| v];
    let full_log = least_squares(&lx, &y, &log_basis)?;
    let mut best: Option<(f64, usize, LinearFit, LinearFit)> = None;
    for s in 2..=rs.len() - 2 {
        let left = least_squares(&lx[..s], &y[..s], &log_basis)?;
        let right = least_squares(&x[s..], &y[s..], &log_basis)?;
        let right_log = least_squares(&lx[s..], &y[s..], &log_basis)?;
        if right.slope() <= 0.0 || right.rss >= right_log.rss {
            continue;
        }
        let total = left.rss + right.rss;
        if best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, s, left, right));
        }
    }
    let row = |i: usize, regime| CrossoverRow { r: rs[i], geodesic: geo[i], regime };
    Ok(match best {
        Some((_, s, left, right)) => CrossoverReport {
            origin,
            z0: g.meta().z0,
            rows: (0..rs.len()).map(|i| row(i, if i < s { Regime::Log } else { Regime::Linear })).collect(),
            log_fit: left,
            linear_fit: Some(right),
            kink: Some((x[s - 1] * x[s]).sqrt()),
            linear_regime: true,
        },
        None => CrossoverReport {
            origin,
            z0: g.meta().z0,
            rows: (0..rs.len()).map(|i| row(i, Regime::Log)).collect(),
            log_fit: full_log,
            linear_fit: None,
            kink: None,
            linear_regime: false,
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationRow {
    pub l: usize,
    pub min_cut: usize,
    pub min_cut_weight: f64,
    /// Central-block entropy in bits, when the state vector is within reach.
    pub entropy: Option<f64>,
}

pub fn entropy_saturation(m: &FiniteRangeMERA, ls: &[usize]) -> Result<Vec<SaturationRow>> {
    let g = m.to_graph()?;
    let n = m.mera.n_sites();
    let psi = statevec::checked_size(m.mera.dims()[0], n).ok().map(|_| m.mera.state_vector()).transpose()?;
    ls.iter()
        .map(|&l| {
            let cut = min_cut(&g, &Region::central(l, n)?)?;
            let entropy = match &psi {
                Some(p) => Some(statevec::block_entropy(p.data(), n, m.mera.dims()[0], (n - l) / 2, l)?),
                None => None,
            };
            Ok(SaturationRow { l, min_cut: cut.n_a, min_cut_weight: cut.weight, entropy })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConversionReport {
    pub chi_mera: usize,
    pub z0: usize,
    pub chi_mps_max: usize,
    pub chi_mps_per_bond: Vec<usize>,
    pub fidelity: f64,
    #[serde(skip)]
    pub mps: FiniteMPS,
}

impl ConversionReport {
    /// χ^{2z₀}: each of the z₀ layers contributes at most two bonds to a
    /// cut separating a prefix of the open chain from the rest (one at the
    /// cut itself, one at the periodic seam).
    pub fn bound(&self) -> f64 {
        (self.chi_mera as f64).powi(2 * self.z0 as i32)
    }
}

/// Relative cutoff on Gram eigenvalues (squared singular values).
const RANK_CUTOFF: f64 = 1e-13;

/// Exact compilation to an open MPS: sweep the explicit amplitudes left to
/// right, at each cut keeping the full range of the reduced left factor.
/// No truncation beyond rounding-level eigenvalues.
pub fn mera_to_mps(m: &FiniteRangeMERA) -> Result<ConversionReport> {
    let n = m.mera.n_sites();
    let d = m.mera.dims()[0];
    let psi = m.mera.state_vector()?.into_data();
    let mps = compile_state(&psi, n, d)?;
    let fidelity = statevec::fidelity(&psi, &mps.state_vector()?)?;
    let chi_mps_per_bond = mps.bond_dims();
    Ok(ConversionReport {
        chi_mera: m.mera.chi(),
        z0: m.z0(),
        chi_mps_max: chi_mps_per_bond.iter().copied().max().unwrap_or(1),
        chi_mps_per_bond,
        fidelity,
        mps,
    })
}

/// Sequential rank-revealing factorization of a state vector into an open MPS.
pub fn compile_state(psi: &[C64], n: usize, d: usize) -> Result<FiniteMPS> {
    if Some(psi.len()) != statevec::checked_size(d, n).ok() {
        return Err(Error::DimMismatch(format!("{} amplitudes for {n} sites of dim {d}", psi.len())));
    }
    let mut tensors = Vec::with_capacity(n);
    // rest: (χ_left·d) × d^{remaining−1}, row-major
    let mut rest = psi.to_vec();
    let mut chi_left = 1;
    for site in 0..n - 1 {
        let rows = chi_left * d;
        let cols = rest.len() / rows;
        let m = Mat::from_vec(rows, cols, rest)?;
        let gram = m.matmul(&m.adjoint());
        let gram = gram.add(&gram.adjoint()).scale(C64::new(0.5, 0.0));
        let (vals, vecs) = hermitian_eig(&gram)?;
        let top = vals.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Err(invalid("zero state"));
        }
        let keep = vals.iter().take_while(|&&v| v > RANK_CUTOFF * top).count().max(1);
        let u = Mat::from_fn(rows, keep, |i, j| vecs[(i, j)]);
        tensors.push(Tensor::new(vec![chi_left, d, keep], vec![format!("l{site}"), format!("s{site}"), format!("r{site}")], u.data().to_vec())?);
        rest = u.adjoint().matmul(&m).into_data();
        chi_left = keep;
    }
    tensors.push(Tensor::new(vec![chi_left, d, 1], vec!["l", "s", "r"], rest)?);
    FiniteMPS::new(tensors)
}

/// Entropy-scaling class of a branching tree in D dimensions, with the
/// layer sum evaluated at L = 2^20.
pub fn classify_branching(tree: &BranchingTree, dim: usize) -> Result<Prediction> {
    layer_sum_predictor(dim, (1u64 << 20) as f64, 20, Some(tree), 1.0)
}

/// Column of the free-fermion entropy table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FermionClass {
    Gapped,
    /// Fermi surface of dimension Γ.
    Surface(usize),
}

/// Branching tree standing in for a free-fermion class: a gapped system is
/// a single branch ending at `z0`; a Γ-dimensional Fermi surface is a tree
/// splitting into 2^Γ branches at every scale (Γ = 0: one unbounded branch).
pub fn fermion_tree(dim: usize, class: FermionClass, z0: usize) -> Result<BranchingTree> {
    match class {
        FermionClass::Gapped => BranchingTree::single_finite(dim, z0.max(1)),
        FermionClass::Surface(g) if g >= dim => Err(invalid(format!("Fermi surface of dimension {g} in D={dim}"))),
        FermionClass::Surface(0) => BranchingTree::single_unbounded(dim),
        FermionClass::Surface(g) => BranchingTree::split_every_scale(dim, 1 << g),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableEntry {
    pub dim: usize,
    pub class: FermionClass,
    pub scaling: ScalingClass,
    pub label: String,
}

/// All nine (D, class) cells: gapped and Γ = 0 … D−1 for D = 1, 2, 3.
pub fn fermion_table() -> Result<Vec<TableEntry>> {
    let mut out = Vec::new();
    for dim in 1..=3 {
        let classes = std::iter::once(FermionClass::Gapped).chain((0..dim).map(FermionClass::Surface));
        for class in classes {
            let p = classify_branching(&fermion_tree(dim, class, 3)?, dim)?;
            out.push(TableEntry { dim, class, scaling: p.class, label: p.class_label });
        }
    }
    Ok(out)
}

/// Connected correlator helper for finite-range states (causal cone).
pub fn correlator(
    m: &FiniteRangeMERA,
    p: &crate::tensor::LocalOperator,
    q: &crate::tensor::LocalOperator,
    x1: usize,
    x2: usize,
) -> Result<C64> {
    if m.z0() == 0 {
        if x1 == x2 {
            return Err(invalid("correlator sites must differ"));
        }
        return Ok(ZERO);
    }
    mera::correlator_causal_cone(&m.mera, p, q, x1, x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build_finite_range_mera_graph;
    use crate::tensor::LocalOperator;

    #[test]
    fn layer_counts_and_sharing() {
        let m = build_finite_range_mera(16, 2, 1, 2, 5).unwrap();
        assert_eq!(m.mera().depth(), 3);
        assert_eq!(m.z0(), 3);
        let si = crate::mera::random_mera(16, 3, 2, 5, true).unwrap();
        assert_eq!(&m.mera().layers()[..2], &si.layers()[..2]);
        assert_ne!(m.mera().layers()[2], si.layers()[2]);
        assert!(build_finite_range_mera(16, 3, 2, 2, 0).is_err());
    }

    #[test]
    fn zero_depth_is_a_product_state() {
        let m = build_finite_range_mera(8, 0, 0, 2, 3).unwrap();
        let psi = m.mera().state_vector().unwrap().into_data();
        for l in 1..8 {
            assert!(statevec::block_entropy(&psi, 8, 2, (8 - l) / 2, l).unwrap().abs() < 1e-12);
        }
        let p = LocalOperator::random_traceless(2, 1);
        assert_eq!(correlator(&m, &p, &p, 0, 3).unwrap(), ZERO);
        let r = mera_to_mps(&m).unwrap();
        assert!(r.chi_mps_per_bond.iter().all(|&c| c == 1));
        assert!((r.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conversion_is_exact_and_bounded() {
        let r1 = mera_to_mps(&build_finite_range_mera(8, 0, 1, 2, 7).unwrap()).unwrap();
        assert!(1.0 - r1.fidelity < 1e-10, "{} {:?}", r1.fidelity, r1.chi_mps_per_bond);
        assert!(r1.chi_mps_max <= 4, "{:?}", r1.chi_mps_per_bond);
        let r2 = mera_to_mps(&build_finite_range_mera(16, 1, 1, 2, 7).unwrap()).unwrap();
        assert!(1.0 - r2.fidelity < 1e-10);
        assert!(r2.chi_mps_max as f64 <= r2.bound());
        assert!(r2.chi_mps_max > r1.chi_mps_max);
        let json = serde_json::to_value(&r2).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["chi_mera", "chi_mps_max", "chi_mps_per_bond", "fidelity", "z0"]);
    }

    #[test]
    fn compile_bell_pairs() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let psi: Vec<C64> = bell.iter().flat_map(|a| bell.iter().map(move |b| a * b)).collect();
        let mps = compile_state(&psi, 4, 2).unwrap();
        assert_eq!(mps.bond_dims(), vec![2, 1, 2]);
        assert!((statevec::fidelity(&psi, &mps.state_vector().unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossover_on_finite_range_graph() {
        let rs: Vec<usize> = (1..=7).map(|k| 1 << k).collect();
        let g = build_finite_range_mera_graph(256, 2).unwrap();
        let rep = crossover_diagnostics(&g, &rs).unwrap();
        assert!(rep.linear_regime);
        let kink = rep.kink.unwrap();
        assert!((2.0..=8.0).contains(&kink), "kink {kink}");
        assert!(rep.linear_fit.as_ref().unwrap().slope() > 0.0);
        let full = build_finite_range_mera_graph(256, 8).unwrap();
        assert!(!crossover_diagnostics(&full, &rs).unwrap().linear_regime);
        assert!(crossover_diagnostics(&g, &[2, 4]).is_err());
    }

    #[test]
    fn saturation_table() {
        let m = build_finite_range_mera(16, 1, 1, 2, 2).unwrap();
        for row in entropy_saturation(&m, &[2, 4, 6, 8]).unwrap() {
            assert!(row.entropy.unwrap() <= row.min_cut_weight + 1e-9);
        }
        let big = build_finite_range_mera(256, 1, 1, 2, 2).unwrap();
        let rows = entropy_saturation(&big, &[2, 4, 32, 64]).unwrap();
        assert!(rows.iter().all(|r| r.entropy.is_none()));
        assert!(rows[0].min_cut < rows[2].min_cut);
        assert_eq!(rows[2].min_cut, rows[3].min_cut);
    }

    #[test]
    fn table_entries() {
        let labels: Vec<(usize, String)> = fermion_table().unwrap().into_iter().map(|e| (e.dim, e.label)).collect();
        let expect = [
            (1, "constant"),
            (1, "log L"),
            (2, "L"),
            (2, "L"),
            (2, "L·log L"),
            (3, "L^2"),
            (3, "L^2"),
            (3, "L^2"),
            (3, "L^2·log L"),
        ];
        assert_eq!(labels.len(), 9);
        for ((d, l), (ed, el)) in labels.iter().zip(expect) {
            assert_eq!((*d, l.as_str()), (ed, el));
        }
        assert!(fermion_tree(2, FermionClass::Surface(2), 1).is_err());
    }

    #[test]
    fn trivial_tree_matches_unbranched_predictor() {
        for dim in 1..=3 {
            let tree = BranchingTree::single_unbounded(dim).unwrap();
            let a = classify_branching(&tree, dim).unwrap();
            let b = layer_sum_predictor(dim, (1u64 << 20) as f64, 20, None, 1.0).unwrap();
            assert_eq!(a.class, b.class);
            assert!((a.value - b.value).abs() < 1e-9);
        }
    }
}
