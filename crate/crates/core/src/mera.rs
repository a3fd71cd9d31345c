//! Binary 1D MERA states: construction, top-down state vectors, causal-cone
//! correlators and the scaling superoperator.
//!
//! Layout follows the graph builders: level z has W_z = N/2^z sites of
//! dimension d_z (periodic). Going down through layer z, isometry i maps
//! coarse site i to fine sites (2i, 2i+1), then disentangler j acts on
//! (2j+1, 2j+2 mod W_z). Matrices act on kets: u is d_z²×d_z² with the first
//! tensor factor on the left site of its pair, w is d_z²×d_{z+1}.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, general_eig, Mat, C64, ONE, ZERO};
use crate::netgraph::{build_finite_range_mera_graph_with, build_mera_graph_dims, level_dims, Boundary, TNGraph};
use crate::statevec;
use crate::tensor::{contract, derive_seed, random_isometry_matrix, random_unit_vector, LocalOperator, Tensor};

const ISOMETRY_TOL: f64 = 1e-10;
/// Largest factor (product of site dimensions) the causal cone will hold.
pub const CONE_DIM_CAP: usize = 4096;
/// Largest level state the cone will switch to before reaching the top.
const CONE_STATE_CAP: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub struct MeraLayer {
    u: Mat,
    w: Mat,
    d_fine: usize,
    d_coarse: usize,
}

impl MeraLayer {
    pub fn new(u: Mat, w: Mat) -> Result<Self> {
        let d2 = u.rows();
        let d_fine = (d2 as f64).sqrt().round() as usize;
        if d_fine * d_fine != d2 || !u.is_square() {
            return Err(Error::DimMismatch(format!("disentangler is {}x{}, need d²xd²", u.rows(), u.cols())));
        }
        if w.rows() != d2 || w.cols() == 0 || w.cols() > d2 {
            return Err(Error::DimMismatch(format!("isometry is {}x{} for fine dim {d_fine}", w.rows(), w.cols())));
        }
        let dev_u = u.adjoint().matmul(&u).max_abs_diff(&Mat::identity(d2));
        let dev_w = w.adjoint().matmul(&w).max_abs_diff(&Mat::identity(w.cols()));
        if dev_u > ISOMETRY_TOL || dev_w > ISOMETRY_TOL {
            return Err(invalid(format!("isometric constraints violated: |u†u−I| = {dev_u:e}, |w†w−I| = {dev_w:e}")));
        }
        let d_coarse = w.cols();
        Ok(MeraLayer { u, w, d_fine, d_coarse })
    }

    pub fn u(&self) -> &Mat {
        &self.u
    }

    pub fn w(&self) -> &Mat {
        &self.w
    }

    pub fn d_fine(&self) -> usize {
        self.d_fine
    }

    pub fn d_coarse(&self) -> usize {
        self.d_coarse
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Top {
    /// Amplitudes over the W_T top sites.
    State(Vec<C64>),
    /// The same single-site vector on every top site.
    Product(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMERA {
    n_sites: usize,
    /// d_0 … d_T.
    dims: Vec<usize>,
    layers: Vec<MeraLayer>,
    top: Top,
    scale_invariant: bool,
    boundary: Boundary,
}

impl BinaryMERA {
    pub fn new(n_sites: usize, layers: Vec<MeraLayer>, top: Top, scale_invariant: bool) -> Result<Self> {
        let t = layers.len();
        if n_sites == 0 || t >= usize::BITS as usize || n_sites % (1usize << t) != 0 {
            return Err(invalid(format!("N={n_sites} is not a multiple of 2^{t}")));
        }
        let mut dims = Vec::with_capacity(t + 1);
        for (z, l) in layers.iter().enumerate() {
            if z > 0 && l.d_fine != dims[z] {
                return Err(Error::DimMismatch(format!("layer {z} expects fine dim {}, level has {}", l.d_fine, dims[z])));
            }
            if z == 0 {
                dims.push(l.d_fine);
            }
            dims.push(l.d_coarse);
        }
        let d_top = match (&top, dims.last()) {
            (_, Some(&d)) => d,
            (Top::State(v), None) => {
                return Err(invalid(format!("a MERA without layers needs a product top, got {} amplitudes", v.len())))
            }
            (Top::Product(v), None) => {
                dims.push(v.len());
                v.len()
            }
        };
        let w_top = n_sites >> t;
        match &top {
            Top::State(v) => {
                if Some(v.len()) != statevec::checked_size(d_top, w_top).ok() {
                    return Err(Error::DimMismatch(format!("top has {} amplitudes, need {d_top}^{w_top}", v.len())));
                }
                check_unit(v)?;
            }
            Top::Product(v) => {
                if v.len() != d_top {
                    return Err(Error::DimMismatch(format!("product top vector has dim {}, need {d_top}", v.len())));
                }
                check_unit(v)?;
            }
        }
        if scale_invariant {
            for (z, l) in layers.iter().enumerate() {
                if let Some(first) = layers.iter().find(|o| o.d_fine == l.d_fine && o.d_coarse == l.d_coarse) {
                    if first != l {
                        return Err(invalid(format!("scale-invariant MERA has a distinct layer {z}")));
                    }
                }
            }
        }
        Ok(BinaryMERA { n_sites, dims, layers, top, scale_invariant, boundary: Boundary::Periodic })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> &[MeraLayer] {
        &self.layers
    }

    pub fn top(&self) -> &Top {
        &self.top
    }

    pub fn is_scale_invariant(&self) -> bool {
        self.scale_invariant
    }

    /// Open chains drop the seam disentangler on (W_z−1, 0) at every layer.
    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Disentangler pairs of layer z, as (index, left site, right site).
    fn dis_pairs(&self, z: usize) -> impl Iterator<Item = (usize, usize, usize)> {
        let width = self.width(z);
        let n = match self.boundary {
            Boundary::Periodic => width / 2,
            Boundary::Open => width / 2 - 1,
        };
        (0..n).map(move |j| (j, 2 * j + 1, (2 * j + 2) % width))
    }

    pub fn width(&self, z: usize) -> usize {
        self.n_sites >> z
    }

    /// Largest coarse-site dimension, the χ of the network.
    pub fn chi(&self) -> usize {
        self.dims[1..].iter().copied().max().unwrap_or(self.dims[0])
    }

    /// Matching network graph with bond dims d_z.
    pub fn to_graph(&self) -> Result<TNGraph> {
        let t = self.depth();
        let (d, chi) = (self.dims[0], self.chi());
        if level_dims(d, chi, t) != self.dims {
            return Err(invalid(format!("level dims {:?} do not follow min(χ, d²) growth", self.dims)));
        }
        match (&self.top, self.boundary) {
            (Top::State(_), Boundary::Periodic) => build_mera_graph_dims(self.n_sites, t, self.scale_invariant, d, chi),
            (Top::State(_), Boundary::Open) => Err(invalid("no graph builder for an open MERA with an entangled top")),
            (Top::Product(_), b) => build_finite_range_mera_graph_with(self.n_sites, t, d, chi, b),
        }
    }

    /// State on the W_z sites of level z, obtained by descending from the top.
    pub fn level_state(&self, z: usize) -> Result<Vec<C64>> {
        let t = self.depth();
        if z > t {
            return Err(invalid(format!("level {z} above top {t}")));
        }
        for zz in z..=t {
            statevec::checked_size(self.dims[zz], self.width(zz))?;
        }
        let mut psi = match &self.top {
            Top::State(v) => v.clone(),
            Top::Product(v) => {
                let mut acc = vec![ONE];
                for _ in 0..self.width(t) {
                    acc = acc.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
                }
                acc
            }
        };
        for zz in (z..t).rev() {
            psi = self.descend(&psi, zz);
        }
        Ok(psi)
    }

    /// Apply layer z to a state on level z+1.
    fn descend(&self, psi: &[C64], z: usize) -> Vec<C64> {
        let layer = &self.layers[z];
        let (df, width) = (layer.d_fine, self.width(z));
        let mut dims = vec![layer.d_coarse; width / 2];
        let mut psi = psi.to_vec();
        for i in (0..width / 2).rev() {
            psi = expand_site(&psi, &dims, i, &layer.w);
            dims.splice(i..=i, [df, df]);
        }
        for (_, a, b) in self.dis_pairs(z) {
            psi = apply_gate(&psi, &dims, &[a, b], &layer.u);
        }
        psi
    }

    /// Physical amplitudes, labels s0…s{N−1}.
    pub fn state_vector(&self) -> Result<Tensor> {
        statevec::checked_size(self.dims[0], self.n_sites)?;
        let psi = self.level_state(0)?;
        let labels: Vec<String> = (0..self.n_sites).map(|i| format!("s{i}")).collect();
        Tensor::new(vec![self.dims[0]; self.n_sites], labels, psi)
    }
}

fn check_unit(v: &[C64]) -> Result<()> {
    let n = linalg::norm(v);
    if (n - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("top vector has norm {n}, expected 1")));
    }
    Ok(())
}

/// Replace site `pos` (dim m.cols()) by two sites whose joint dim is m.rows().
fn expand_site(psi: &[C64], dims: &[usize], pos: usize, m: &Mat) -> Vec<C64> {
    let din = dims[pos];
    let right: usize = dims[pos + 1..].iter().product();
    let left = psi.len() / (din * right);
    let dout = m.rows();
    let mut out = vec![ZERO; left * dout * right];
    for l in 0..left {
        for a in 0..dout {
            let dst = (l * dout + a) * right;
            for b in 0..din {
                let c = m[(a, b)];
                if c == ZERO {
                    continue;
                }
                let src = (l * din + b) * right;
                for r in 0..right {
                    out[dst + r] += c * psi[src + r];
                }
            }
        }
    }
    out
}

/// Apply a square operator on the listed sites (first listed = most
/// significant factor of the operator's index).
fn apply_gate(psi: &[C64], dims: &[usize], sites: &[usize], m: &Mat) -> Vec<C64> {
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let gdim: usize = sites.iter().map(|&s| dims[s]).product();
    let offs: Vec<usize> = (0..gdim)
        .map(|mut j| {
            let mut off = 0;
            for &s in sites.iter().rev() {
                off += (j % dims[s]) * strides[s];
                j /= dims[s];
            }
            off
        })
        .collect();
    let mut out = vec![ZERO; psi.len()];
    let mut buf = vec![ZERO; gdim];
    for base in 0..psi.len() {
        if sites.iter().any(|&s| (base / strides[s]) % dims[s] != 0) {
            continue;
        }
        for (b, &o) in buf.iter_mut().zip(&offs) {
            *b = psi[base + o];
        }
        for (a, &o) in offs.iter().enumerate() {
            out[base + o] = m.row(a).iter().zip(&buf).map(|(x, y)| x * y).sum();
        }
    }
    out
}

/// Seeded random MERA with d = 2.
pub fn random_mera(n: usize, layers: usize, chi: usize, seed: u64, scale_invariant: bool) -> Result<BinaryMERA> {
    random_mera_with_dim(n, layers, 2, chi, seed, scale_invariant)
}

/// Haar-like u and w per layer from the seed. With `scale_invariant`, all
/// layers of equal shape reuse the tensors of the lowest such layer, so for
/// d = χ a single (u, w) pair fills the whole network.
pub fn random_mera_with_dim(
    n: usize,
    layers: usize,
    d: usize,
    chi: usize,
    seed: u64,
    scale_invariant: bool,
) -> Result<BinaryMERA> {
    if d < 2 || chi < d {
        return Err(invalid(format!("need d >= 2 and χ >= d, got d={d}, χ={chi}")));
    }
    if layers == 0 || layers >= usize::BITS as usize || n % (1usize << layers) != 0 {
        return Err(invalid(format!("N={n} is not compatible with T={layers}")));
    }
    let built = random_layers(d, chi, layers, seed, scale_invariant)?;
    let dims = level_dims(d, chi, layers);
    let top_len = statevec::checked_size(dims[layers], n >> layers)?;
    let top = Top::State(random_unit_vector(top_len, derive_seed(seed, u64::MAX)));
    BinaryMERA::new(n, built, top, scale_invariant)
}

/// The layer stack of [`random_mera_with_dim`] without a top.
pub fn random_layers(d: usize, chi: usize, layers: usize, seed: u64, scale_invariant: bool) -> Result<Vec<MeraLayer>> {
    let dims = level_dims(d, chi, layers);
    let mut built: Vec<MeraLayer> = Vec::with_capacity(layers);
    for z in 0..layers {
        let (df, dc) = (dims[z], dims[z + 1]);
        let reuse = scale_invariant.then(|| built.iter().find(|l| l.d_fine == df && l.d_coarse == dc)).flatten();
        let layer = match reuse {
            Some(l) => l.clone(),
            None => MeraLayer::new(
                random_isometry_matrix(df * df, df * df, derive_seed(seed, 2 * z as u64))?,
                random_isometry_matrix(df * df, dc, derive_seed(seed, 2 * z as u64 + 1))?,
            )?,
        };
        built.push(layer);
    }
    Ok(built)
}

/// Product construction: u = I and w = |00⟩ at the bottom layer, trivial
/// one-dimensional layers above. The state is |0…0⟩.
pub fn product_mera(n: usize, layers: usize, d: usize) -> Result<BinaryMERA> {
    if layers == 0 || d == 0 {
        return Err(invalid("product MERA needs at least one layer and d >= 1"));
    }
    let mut e0 = Mat::zeros(d * d, 1);
    e0[(0, 0)] = ONE;
    let mut built = vec![MeraLayer::new(Mat::identity(d * d), e0)?];
    for _ in 1..layers {
        built.push(MeraLayer::new(Mat::identity(1), Mat::identity(1))?);
    }
    BinaryMERA::new(n, built, Top::Product(vec![ONE]), true)
}

/// Operator factor on a set of sites of one level; labels o{s} (row) and i{s}.
#[derive(Clone, Debug)]
struct Factor {
    sites: BTreeSet<usize>,
    t: Tensor,
}

fn lo(s: usize) -> String {
    format!("o{s}")
}

fn li(s: usize) -> String {
    format!("i{s}")
}

impl Factor {
    fn single(op: &Mat, site: usize) -> Result<Self> {
        Ok(Factor { sites: BTreeSet::from([site]), t: Tensor::from_matrix(op, &lo(site), &li(site))? })
    }

    fn merge(self, other: Factor) -> Result<Self> {
        let t = contract(&self.t, &other.t, &[])?;
        let mut sites = self.sites;
        sites.extend(other.sites);
        Ok(Factor { sites, t })
    }

    fn extend(mut self, sites: &[usize], d: usize) -> Result<Self> {
        for &s in sites {
            if self.sites.insert(s) {
                let id = Tensor::from_matrix(&Mat::identity(d), &lo(s), &li(s))?;
                self.t = contract(&self.t, &id, &[])?;
            }
        }
        Ok(self)
    }

    /// Matrix over the sites in ascending order.
    fn matrix(&self) -> Result<Mat> {
        let rows: Vec<String> = self.sites.iter().map(|&s| lo(s)).collect();
        let cols: Vec<String> = self.sites.iter().map(|&s| li(s)).collect();
        let order: Vec<&str> = rows.iter().chain(&cols).map(String::as_str).collect();
        Ok(self.t.permute(&order)?.to_matrix(&rows)?.0)
    }
}

/// u† F u on the pair (a, b).
fn conjugate_pair(t: &Tensor, a: usize, b: usize, u: &Mat, d: usize) -> Result<Tensor> {
    let g = Tensor::new(vec![d, d, d, d], vec!["ga", "gb", "ha", "hb"], u.data().to_vec())?;
    let fu = contract(t, &g, &[(&li(a), "ga"), (&li(b), "gb")])?.relabel("ha", &li(a))?.relabel("hb", &li(b))?;
    contract(&g.conj(), &fu, &[("ga", &lo(a)), ("gb", &lo(b))])?.relabel("ha", &lo(a))?.relabel("hb", &lo(b))
}

/// w† F w taking fine sites (2c, 2c+1) to coarse site c; coarse labels are
/// upper-case until the whole factor has been lifted.
fn lift_pair(t: &Tensor, c: usize, w: &Mat, d: usize, dc: usize) -> Result<Tensor> {
    let g = Tensor::new(vec![d, d, dc], vec!["ga", "gb", "h"], w.data().to_vec())?;
    let (f0, f1) = (2 * c, 2 * c + 1);
    let fw = contract(t, &g, &[(&li(f0), "ga"), (&li(f1), "gb")])?.relabel("h", &format!("I{c}"))?;
    contract(&g.conj(), &fw, &[("ga", &lo(f0)), ("gb", &lo(f1))])?.relabel("h", &format!("O{c}"))
}

/// Merge factors whose key sets intersect.
fn merge_by(factors: Vec<Factor>, keys: impl Fn(&Factor) -> BTreeSet<usize>) -> Result<Vec<Factor>> {
    let mut groups: Vec<(BTreeSet<usize>, Factor)> = Vec::new();
    for f in factors {
        let mut k = keys(&f);
        let mut f = f;
        let mut i = 0;
        while i < groups.len() {
            if groups[i].0.is_disjoint(&k) {
                i += 1;
            } else {
                let (gk, gf) = groups.remove(i);
                k.extend(gk);
                f = gf.merge(f)?;
                i = 0;
            }
        }
        groups.push((k, f));
    }
    Ok(groups.into_iter().map(|(_, f)| f).collect())
}

fn check_cap(f: &Factor, d: usize) -> Result<()> {
    let size = statevec::checked_size(d, f.sites.len()).ok().filter(|&s| s <= CONE_DIM_CAP);
    if size.is_none() {
        return Err(Error::SizeCap(format!("causal-cone factor on {} sites of dim {d} exceeds {CONE_DIM_CAP}", f.sites.len())));
    }
    Ok(())
}

/// Ascend every factor through layer z.
fn ascend(m: &BinaryMERA, z: usize, factors: Vec<Factor>) -> Result<Vec<Factor>> {
    let layer = &m.layers[z];
    let (d, dc, width) = (layer.d_fine, layer.d_coarse, m.width(z));
    let half = width / 2;
    let present: Vec<(usize, usize)> = m.dis_pairs(z).map(|(_, a, b)| (a, b)).collect();
    let dis_of = |s: usize| {
        let j = if s % 2 == 1 { (s - 1) / 2 } else { (s / 2 + half - 1) % half };
        (j < present.len()).then_some(j)
    };
    let factors = merge_by(factors, |f| f.sites.iter().filter_map(|&s| dis_of(s)).collect())?;
    let mut lifted = Vec::with_capacity(factors.len());
    for f in factors {
        let dis: BTreeSet<usize> = f.sites.iter().filter_map(|&s| dis_of(s)).collect();
        let pairs: Vec<(usize, usize)> = dis.iter().map(|&j| present[j]).collect();
        let all: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let mut f = f.extend(&all, d)?;
        check_cap(&f, d)?;
        for (a, b) in pairs {
            f.t = conjugate_pair(&f.t, a, b, &layer.u, d)?;
        }
        lifted.push(f);
    }
    let lifted = merge_by(lifted, |f| f.sites.iter().map(|&s| s / 2).collect())?;
    let mut out = Vec::with_capacity(lifted.len());
    for f in lifted {
        let coarse: BTreeSet<usize> = f.sites.iter().map(|&s| s / 2).collect();
        let fine: Vec<usize> = coarse.iter().flat_map(|&c| [2 * c, 2 * c + 1]).collect();
        let mut f = f.extend(&fine, d)?;
        check_cap(&f, d)?;
        for &c in &coarse {
            f.t = lift_pair(&f.t, c, &layer.w, d, dc)?;
        }
        for &c in &coarse {
            f.t = f.t.relabel(&format!("O{c}"), &lo(c))?.relabel(&format!("I{c}"), &li(c))?;
        }
        out.push(Factor { sites: coarse, t: f.t });
    }
    Ok(out)
}

fn evaluate_on_level(m: &BinaryMERA, z: usize, factors: &[Factor]) -> Result<C64> {
    let d = m.dims[z];
    if let (true, Top::Product(phi)) = (z == m.depth(), &m.top) {
        let mut acc = ONE;
        for f in factors {
            let mut v = vec![ONE];
            for _ in &f.sites {
                v = v.iter().flat_map(|a| phi.iter().map(move |b| a * b)).collect();
            }
            acc *= linalg::dot(&v, &f.matrix()?.mul_vec(&v));
        }
        return Ok(acc);
    }
    let psi = m.level_state(z)?;
    let dims = vec![d; m.width(z)];
    let mut phi = psi.clone();
    for f in factors {
        let sites: Vec<usize> = f.sites.iter().copied().collect();
        phi = apply_gate(&phi, &dims, &sites, &f.matrix()?);
    }
    Ok(linalg::dot(&psi, &phi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeStop {
    /// Switch to the explicit level state once the level is narrow.
    Auto,
    /// Ascend through every layer.
    Top,
}

/// ⟨Π_k O_k⟩ for single-site operators at distinct sites, contracting only
/// the joint causal cone.
pub fn cone_expectation(m: &BinaryMERA, ops: &[(&LocalOperator, usize)], stop: ConeStop) -> Result<C64> {
    let mut factors = Vec::with_capacity(ops.len());
    let mut seen = BTreeSet::new();
    for &(op, x) in ops {
        if x >= m.n_sites {
            return Err(Error::UnknownSite(x.to_string()));
        }
        if !seen.insert(x) {
            return Err(invalid(format!("two operators on site {x}")));
        }
        if op.dim() != m.dims[0] {
            return Err(Error::DimMismatch(format!("operator dim {} for site dim {}", op.dim(), m.dims[0])));
        }
        factors.push(Factor::single(op.matrix(), x)?);
    }
    let t = m.depth();
    for z in 0..=t {
        let support: usize = factors.iter().map(|f| f.sites.len()).sum();
        let narrow = matches!(m.top, Top::State(_))
            && stop == ConeStop::Auto
            && m.width(z) <= 2 * support + 4
            && statevec::checked_size(m.dims[z], m.width(z)).is_ok_and(|s| s <= CONE_STATE_CAP);
        if z == t || narrow {
            return evaluate_on_level(m, z, &factors);
        }
        factors = ascend(m, z, factors)?;
    }
    unreachable!("loop returns at the top level")
}

/// Connected ⟨P_{x1} Q_{x2}⟩ via causal cones.
pub fn correlator_causal_cone(m: &BinaryMERA, p: &LocalOperator, q: &LocalOperator, x1: usize, x2: usize) -> Result<C64> {
    correlator_causal_cone_with(m, p, q, x1, x2, ConeStop::Auto)
}

pub fn correlator_causal_cone_with(
    m: &BinaryMERA,
    p: &LocalOperator,
    q: &LocalOperator,
    x1: usize,
    x2: usize,
    stop: ConeStop,
) -> Result<C64> {
    if x1 == x2 {
        return Err(invalid("correlator sites must differ"));
    }
    let pq = cone_expectation(m, &[(p, x1), (q, x2)], stop)?;
    let ep = cone_expectation(m, &[(p, x1)], stop)?;
    let eq = cone_expectation(m, &[(q, x2)], stop)?;
    Ok(pq - ep * eq)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingSpectrum {
    /// Modulus-descending eigenvalues.
    pub eigenvalues: Vec<C64>,
    /// q_k = −2·log₂|λ_k| (infinite for λ_k = 0).
    pub exponents: Vec<f64>,
}

/// Spectrum of the ascending map for two-site operators on the window
/// (−1, 0): a fine pair (2c+1, 2c+2) sits under one disentangler and lifts
/// to the coarse pair (c, c+1), and site −1 ≡ W−1 maps to −1 again, so the
/// window is closed under ascent. Built from the topmost layer.
pub fn scaling_spectrum(m: &BinaryMERA) -> Result<ScalingSpectrum> {
    if !m.scale_invariant {
        return Err(invalid("scaling spectrum needs a scale-invariant MERA"));
    }
    let layer = m.layers.last().ok_or_else(|| invalid("MERA has no layers"))?;
    if layer.d_fine != layer.d_coarse {
        return Err(invalid(format!("top layer maps dim {} to {}", layer.d_fine, layer.d_coarse)));
    }
    let s = superoperator(layer)?;
    let eig = general_eig(&s)?;
    let eigenvalues: Vec<C64> = eig.into_iter().map(|(l, _)| l).collect();
    let exponents = eigenvalues.iter().map(|l| if l.norm() > 0.0 { -2.0 * l.norm().log2() } else { f64::INFINITY }).collect();
    Ok(ScalingSpectrum { eigenvalues, exponents })
}

/// The χ⁴×χ⁴ matrix of O ↦ (w⊗w)†(I⊗u†Ou⊗I)(w⊗w), acting on row-major
/// vectorized two-site operators.
pub fn superoperator(layer: &MeraLayer) -> Result<Mat> {
    let d = layer.d_fine;
    let k = d * d;
    let mut s = Mat::zeros(k * k, k * k);
    let probe = BinaryMERA {
        n_sites: 8,
        dims: vec![d, d],
        layers: vec![layer.clone()],
        top: Top::Product(vec![ONE; d]),
        scale_invariant: true,
        boundary: Boundary::Periodic,
    };
    for col in 0..k * k {
        let mut e = Mat::zeros(k, k);
        e[(col / k, col % k)] = ONE;
        let t = Tensor::new(vec![d, d, d, d], vec![lo(1), lo(2), li(1), li(2)], e.into_data())?;
        let f = Factor { sites: BTreeSet::from([1, 2]), t };
        let up = ascend(&probe, 0, vec![f])?;
        if up.len() != 1 || up[0].sites != BTreeSet::from([0, 1]) {
            return Err(invalid("two-site window did not close under ascent"));
        }
        let v = up[0].matrix()?.into_data();
        for (row, x) in v.into_iter().enumerate() {
            s[(row, col)] = x;
        }
    }
    Ok(s)
}

/// Entropy in bits of `len` sites starting at `start` (state-vector route).
pub fn block_entropy(m: &BinaryMERA, start: usize, len: usize) -> Result<f64> {
    let psi = m.state_vector()?.into_data();
    statevec::block_entropy(&psi, m.n_sites, m.dims[0], start, len)
}

/// Entropy of the `len` central sites.
pub fn block_entropy_central(m: &BinaryMERA, len: usize) -> Result<f64> {
    if len == 0 || len > m.n_sites {
        return Err(invalid(format!("block of {len} sites in {}", m.n_sites)));
    }
    block_entropy(m, (m.n_sites - len) / 2, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{min_cut, Region};
    use crate::statevec::connected_correlator;

    fn sv(m: &BinaryMERA) -> Vec<C64> {
        m.state_vector().unwrap().into_data()
    }

    #[test]
    fn random_layers_are_isometric() {
        let m = random_mera(4, 2, 2, 1, false).unwrap();
        for l in m.layers() {
            assert!(l.u().adjoint().matmul(l.u()).max_abs_diff(&Mat::identity(4)) < 1e-12);
            assert!(l.w().adjoint().matmul(l.w()).max_abs_diff(&Mat::identity(2)) < 1e-12);
        }
        let m = random_mera(16, 3, 3, 2, true).unwrap();
        assert_eq!(m.dims(), &[2, 3, 3, 3]);
        assert_eq!(m.layers()[1], m.layers()[2]);
        assert_ne!(m.layers()[0].u().rows(), m.layers()[1].u().rows());
        assert!(random_mera(12, 3, 2, 0, false).is_err());
        assert!(random_mera(16, 2, 1, 0, false).is_err());
    }

    #[test]
    fn norm_and_determinism() {
        let m = random_mera(8, 2, 2, 11, false).unwrap();
        assert!((linalg::norm(&sv(&m)) - 1.0).abs() < 1e-12);
        assert_eq!(sv(&m), sv(&random_mera(8, 2, 2, 11, false).unwrap()));
        let m = random_mera(16, 3, 4, 3, false).unwrap();
        assert!((linalg::norm(&sv(&m)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_layer_identity_tensors_pass_top_through() {
        // T=1, N=2: w = I maps the top site (dim 4) onto both fine sites.
        let layer = MeraLayer::new(Mat::identity(4), Mat::identity(4)).unwrap();
        let top: Vec<C64> = linalg::normalized(&(1..=4).map(|k| C64::new(k as f64, -1.0)).collect::<Vec<_>>());
        let m = BinaryMERA::new(2, vec![layer], Top::State(top.clone()), false).unwrap();
        assert_eq!(sv(&m), top);
    }

    /// Contract layer by layer with explicit tensors: physical sites first,
    /// then adjoint layers applied in the reverse direction.
    #[test]
    fn state_vector_matches_bottom_up_contraction() {
        let m = random_mera(16, 3, 2, 9, false).unwrap();
        let psi = sv(&m);
        // ⟨ψ|ψ_top lifted⟩: pull ψ up through every adjoint layer and compare
        // with the stored top.
        let mut cur = psi.clone();
        let mut dims = vec![2usize; 16];
        for z in 0..m.depth() {
            let l = &m.layers()[z];
            let width = m.width(z);
            for j in 0..width / 2 {
                cur = apply_gate(&cur, &dims, &[2 * j + 1, (2 * j + 2) % width], &l.u().adjoint());
            }
            let mut t = Tensor::new(dims.clone(), (0..width).map(|i| format!("s{i}")).collect(), cur).unwrap();
            for c in 0..width / 2 {
                let wt = Tensor::new(vec![2, 2, l.d_coarse()], vec!["a", "b", "c"], l.w().conj().data().to_vec()).unwrap();
                t = contract(&t, &wt, &[(&format!("s{}", 2 * c), "a"), (&format!("s{}", 2 * c + 1), "b")])
                    .unwrap()
                    .relabel("c", &format!("S{c}"))
                    .unwrap();
            }
            let order: Vec<String> = (0..width / 2).map(|c| format!("S{c}")).collect();
            let t = t.permute(&order).unwrap();
            dims = t.dims().to_vec();
            cur = t.into_data();
        }
        let Top::State(top) = m.top() else { panic!() };
        let diff = cur.iter().zip(top).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn product_construction() {
        let m = product_mera(8, 3, 2).unwrap();
        let psi = sv(&m);
        assert!((psi[0] - ONE).norm() < 1e-15);
        assert!(block_entropy_central(&m, 4).unwrap().abs() < 1e-12);
        let p = LocalOperator::random_traceless(2, 1);
        let q = LocalOperator::random_traceless(2, 2);
        assert!(correlator_causal_cone(&m, &p, &q, 1, 6).unwrap().norm() < 1e-14);
        let spec = scaling_spectrum(&m).unwrap();
        assert_eq!(spec.eigenvalues.len(), 1);
        assert!((spec.eigenvalues[0] - ONE).norm() < 1e-12);
    }

    #[test]
    fn cone_matches_state_vector() {
        for (seed, chi) in [(1, 2), (2, 3)] {
            let m = random_mera(16, 3, chi, seed, false).unwrap();
            let psi = sv(&m);
            let p = LocalOperator::random_traceless(2, 10 + seed);
            let q = LocalOperator::random_traceless(2, 20 + seed);
            for x1 in 0..16 {
                for x2 in 0..16 {
                    if x1 == x2 {
                        continue;
                    }
                    let exact = connected_correlator(&psi, 16, 2, p.matrix(), q.matrix(), x1, x2).unwrap();
                    // Ascending all the way at χ=3 would need whole-level factors.
                    let stops: &[ConeStop] = if chi == 2 { &[ConeStop::Auto, ConeStop::Top] } else { &[ConeStop::Auto] };
                    for &stop in stops {
                        let cone = correlator_causal_cone_with(&m, &p, &q, x1, x2, stop).unwrap();
                        assert!((cone - exact).norm() < 1e-9, "χ={chi} ({x1},{x2}) {stop:?}: {cone} vs {exact}");
                    }
                }
            }
        }
    }

    #[test]
    fn cone_handles_product_top() {
        let layers = random_mera(16, 2, 2, 4, false).unwrap().layers().to_vec();
        let phi = random_unit_vector(2, 5);
        let m = BinaryMERA::new(16, layers, Top::Product(phi), false).unwrap();
        let psi = sv(&m);
        let p = LocalOperator::random_traceless(2, 1);
        for x2 in [1, 3, 7, 12] {
            let exact = connected_correlator(&psi, 16, 2, p.matrix(), p.matrix(), 0, x2).unwrap();
            let cone = correlator_causal_cone(&m, &p, &p, 0, x2).unwrap();
            assert!((cone - exact).norm() < 1e-10);
        }
        // Separated by more than the cone reach of two layers: exactly zero.
        assert!(correlator_causal_cone(&m, &p, &p, 0, 8).unwrap().norm() < 1e-14);
    }

    #[test]
    fn superoperator_fixes_identity() {
        let m = random_mera(64, 4, 2, 3, true).unwrap();
        let s = superoperator(&m.layers()[0]).unwrap();
        let id = Mat::identity(4).into_data();
        let img = s.mul_vec(&id);
        assert!(img.iter().zip(&id).all(|(a, b)| (a - b).norm() < 1e-12));
        let spec = scaling_spectrum(&m).unwrap();
        assert!((spec.eigenvalues[0] - ONE).norm() < 1e-10);
        assert!(spec.eigenvalues.iter().all(|l| l.norm() <= 1.0 + 1e-10));
        assert!(scaling_spectrum(&random_mera(64, 4, 2, 3, false).unwrap()).is_err());
    }

    #[test]
    fn entropy_within_min_cut() {
        let m = random_mera(16, 4, 2, 6, true).unwrap();
        let g = m.to_graph().unwrap();
        for len in 1..16 {
            let s = block_entropy_central(&m, len).unwrap();
            let cut = min_cut(&g, &Region::central(len, 16).unwrap()).unwrap();
            assert!(s <= cut.weight + 1e-9, "L={len}: {s} > {}", cut.weight);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let m = random_mera(8, 2, 2, 0, false).unwrap();
        let p = LocalOperator::random_traceless(2, 0);
        assert!(correlator_causal_cone(&m, &p, &p, 3, 3).is_err());
        assert!(matches!(correlator_causal_cone(&m, &p, &p, 3, 8), Err(Error::UnknownSite(_))));
        let bad = Mat::from_real(4, 4, &[2.0; 16]).unwrap();
        assert!(MeraLayer::new(bad, Mat::identity(4)).is_err());
    }
}
