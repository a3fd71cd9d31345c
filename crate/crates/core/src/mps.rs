//! Homogeneous and site-dependent matrix product states.
//!
//! Transfer matrix convention: E[(a,a'),(b,b')] = Σ_s A[a,s,b]·conj(A[a',s,b']),
//! dressed by an operator O as Σ_{s,s'} A[a,s,b]·O[s',s]·conj(A[a',s',b']).
//! Left environments are row vectors acted on from the left (vᵀE).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, dominant_eigs, hermitian_eig, psd_sqrt, Mat, C64, ONE, ZERO};
use crate::statevec;
use crate::tensor::{LocalOperator, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousMPS {
    /// Site tensor with dims (χ, d, χ) and labels (l, s, r).
    a: Tensor,
    left: Vec<C64>,
    right: Vec<C64>,
    /// Accumulated factor by which `a` has been divided by normalization.
    scale: f64,
}

impl HomogeneousMPS {
    pub fn new(a: Tensor, left: Vec<C64>, right: Vec<C64>) -> Result<Self> {
        let dims = a.dims().to_vec();
        if dims.len() != 3 || dims[0] != dims[2] {
            return Err(Error::DimMismatch(format!("site tensor must be (χ, d, χ), got {dims:?}")));
        }
        if left.len() != dims[0] || right.len() != dims[0] {
            return Err(Error::DimMismatch("boundary vectors must have dimension χ".into()));
        }
        if linalg::norm(&left) == 0.0 || linalg::norm(&right) == 0.0 {
            return Err(invalid("boundary vectors must be nonzero"));
        }
        let a = a.with_labels(vec!["l", "s", "r"])?;
        Ok(HomogeneousMPS { a, left: linalg::normalized(&left), right: linalg::normalized(&right), scale: 1.0 })
    }

    /// Site tensor from a row-major (χ, d, χ) array.
    pub fn from_data(chi: usize, d: usize, data: Vec<C64>, left: Vec<C64>, right: Vec<C64>) -> Result<Self> {
        HomogeneousMPS::new(Tensor::new(vec![chi, d, chi], vec!["l", "s", "r"], data)?, left, right)
    }

    /// χ = 1 product state |φ⟩^{⊗N}.
    pub fn product(phi: &[C64]) -> Result<Self> {
        HomogeneousMPS::from_data(1, phi.len(), phi.to_vec(), vec![ONE], vec![ONE])
    }

    /// Complex Gaussian site tensor (ChaCha20 stream from `seed`), normalized,
    /// with boundary vectors taken as the dominant eigenvectors of the left
    /// and right fixed points so finite chains mimic the infinite state.
    pub fn random(chi: usize, d: usize, seed: u64) -> Result<Self> {
        if chi == 0 || d == 0 {
            return Err(invalid("χ and d must be positive"));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let data = Mat::random_gaussian(chi * d * chi, 1, &mut rng).into_data();
        let ones = vec![ONE; chi];
        let m = normalize(&HomogeneousMPS::from_data(chi, d, data, ones.clone(), ones)?)?;
        let (l, r) = fixed_points(&m)?;
        let left = dominant_vector(&fixed_point_matrix(&l, chi))?;
        let right = dominant_vector(&fixed_point_matrix(&r, chi))?;
        Ok(HomogeneousMPS { left, right, ..m })
    }

    pub fn chi(&self) -> usize {
        self.a.dims()[0]
    }

    pub fn d(&self) -> usize {
        self.a.dims()[1]
    }

    pub fn tensor(&self) -> &Tensor {
        &self.a
    }

    pub fn left(&self) -> &[C64] {
        &self.left
    }

    pub fn right(&self) -> &[C64] {
        &self.right
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn entry(&self, a: usize, s: usize, b: usize) -> C64 {
        let (chi, d) = (self.chi(), self.d());
        self.a.data()[(a * d + s) * chi + b]
    }

    /// The χ×χ matrix A^s.
    pub fn matrix(&self, s: usize) -> Mat {
        Mat::from_fn(self.chi(), self.chi(), |a, b| self.entry(a, s, b))
    }

    pub fn scaled(&self, factor: C64) -> HomogeneousMPS {
        HomogeneousMPS { a: self.a.scale(factor), ..self.clone() }
    }

    pub fn transfer_matrix(&self, op: Option<&LocalOperator>) -> Result<TransferMatrix> {
        let (chi, d) = (self.chi(), self.d());
        if let Some(o) = op {
            if o.dim() != d {
                return Err(Error::DimMismatch(format!("operator dim {} for site dim {d}", o.dim())));
            }
        }
        let n = chi * chi;
        let mut e = Mat::zeros(n, n);
        for s in 0..d {
            for sp in 0..d {
                let w = match op {
                    Some(o) => o.matrix()[(sp, s)],
                    None if s == sp => ONE,
                    None => continue,
                };
                if w == ZERO {
                    continue;
                }
                for a in 0..chi {
                    for ap in 0..chi {
                        for b in 0..chi {
                            let x = self.entry(a, s, b) * w;
                            for bp in 0..chi {
                                e[(a * chi + ap, b * chi + bp)] += x * self.entry(ap, sp, bp).conj();
                            }
                        }
                    }
                }
            }
        }
        Ok(TransferMatrix { matrix: e, chi })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    matrix: Mat,
    chi: usize,
}

impl TransferMatrix {
    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn chi(&self) -> usize {
        self.chi
    }
}

/// Rescale A so the dominant transfer eigenvalue is 1.
pub fn normalize(m: &HomogeneousMPS) -> Result<HomogeneousMPS> {
    if m.a.norm() == 0.0 {
        return Err(invalid("zero site tensor"));
    }
    // Pre-scaling by the Frobenius norm makes the result independent of any
    // overall factor on A up to rounding.
    let fro = m.a.norm();
    let pre = m.scaled(C64::new(1.0 / fro, 0.0));
    let e = pre.transfer_matrix(None)?;
    let lambda = dominant_eigs(e.matrix(), 1)?.pairs[0].0.norm();
    if lambda == 0.0 {
        return Err(invalid("dominant transfer eigenvalue is zero"));
    }
    let f = 1.0 / lambda.sqrt();
    let mut out = pre.scaled(C64::new(f, 0.0));
    out.scale = m.scale * fro / f;
    Ok(out)
}

fn transfer_power_vec_left(e: &Mat, v: &[C64], k: usize) -> Vec<C64> {
    (0..k).fold(v.to_vec(), |acc, _| e.vec_mul(&acc))
}

fn transfer_power_vec_right(e: &Mat, v: &[C64], k: usize) -> Vec<C64> {
    (0..k).fold(v.to_vec(), |acc, _| e.mul_vec(&acc))
}

fn outer_conj(v: &[C64]) -> Vec<C64> {
    v.iter().flat_map(|a| v.iter().map(move |b| a * b.conj())).collect()
}

/// Left and right dominant eigenvectors (as χ² vectors) of the normalized
/// transfer matrix, scaled so that lᵀr = 1.
pub fn fixed_points(m: &HomogeneousMPS) -> Result<(Vec<C64>, Vec<C64>)> {
    let e = m.transfer_matrix(None)?;
    let r = dominant_eigs(e.matrix(), 1)?.pairs.remove(0).1;
    let l = dominant_eigs(&e.matrix().transpose(), 1)?.pairs.remove(0).1;
    let overlap: C64 = l.iter().zip(&r).map(|(a, b)| a * b).sum();
    if overlap.norm() < 1e-14 {
        return Err(Error::Degenerate("left and right fixed points are orthogonal".into()));
    }
    let l = l.iter().map(|x| x / overlap).collect();
    Ok((l, r))
}

/// Reshape a fixed-point vector to a χ×χ matrix and strip its overall phase
/// so it is Hermitian positive semidefinite.
fn fixed_point_matrix(v: &[C64], chi: usize) -> Mat {
    let m = Mat::from_vec(chi, chi, v.to_vec()).expect("χ² entries");
    let tr = m.trace();
    let phase = if tr.norm() > 0.0 { tr.conj() / tr.norm() } else { ONE };
    let m = m.scale(phase);
    m.add(&m.adjoint()).scale(C64::new(0.5, 0.0))
}

fn dominant_vector(m: &Mat) -> Result<Vec<C64>> {
    let (_, vecs) = hermitian_eig(m)?;
    Ok(vecs.col(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationLength {
    /// −1/ln|λ₂|; 0 for a product state, infinite when flagged.
    pub xi: f64,
    pub lambda2: Option<C64>,
    /// |λ₂| is within 1e−10 of 1: correlations do not decay.
    pub infinite: bool,
    /// λ₂ shares its modulus with λ₃ (typically a complex-conjugate pair);
    /// ξ is still well defined but C(r) oscillates.
    pub modulus_tie: bool,
}

/// Correlation length from the second transfer eigenvalue of a normalized MPS.
pub fn correlation_length(m: &HomogeneousMPS) -> Result<CorrelationLength> {
    let e = m.transfer_matrix(None)?;
    let n = e.matrix().rows();
    if n == 1 {
        return Ok(CorrelationLength { xi: 0.0, lambda2: None, infinite: false, modulus_tie: false });
    }
    let eig = dominant_eigs(e.matrix(), n.min(3))?;
    let l1 = eig.pairs[0].0;
    if (l1.norm() - 1.0).abs() > 1e-8 {
        return Err(invalid(format!("MPS is not normalized: |λ₁| = {}", l1.norm())));
    }
    let l2 = eig.pairs[1].0;
    if (l2 - l1).norm() <= 1e-10 {
        return Err(Error::Degenerate("dominant transfer eigenvalue is degenerate".into()));
    }
    let modulus_tie = eig.modulus_ties.contains(&1);
    let mod2 = l2.norm();
    if (1.0 - mod2).abs() <= 1e-10 {
        return Ok(CorrelationLength { xi: f64::INFINITY, lambda2: Some(l2), infinite: true, modulus_tie });
    }
    let xi = if mod2 <= 1e-300 { 0.0 } else { -1.0 / mod2.ln() };
    Ok(CorrelationLength { xi, lambda2: Some(l2), infinite: false, modulus_tie })
}

fn ordered<'a>(
    p: &'a LocalOperator,
    q: &'a LocalOperator,
    x1: usize,
    x2: usize,
) -> Result<(&'a LocalOperator, &'a LocalOperator, usize, usize)> {
    match x1.cmp(&x2) {
        std::cmp::Ordering::Less => Ok((p, q, x1, x2)),
        std::cmp::Ordering::Greater => Ok((q, p, x2, x1)),
        std::cmp::Ordering::Equal => Err(invalid("correlator sites must differ")),
    }
}

/// Connected ⟨P_{x1} Q_{x2}⟩ in the infinite homogeneous state, using the
/// transfer-matrix fixed points as environments.
pub fn two_point_correlator(m: &HomogeneousMPS, p: &LocalOperator, q: &LocalOperator, x1: usize, x2: usize) -> Result<C64> {
    let (first, second, a, b) = ordered(p, q, x1, x2)?;
    let (l, r) = fixed_points(m)?;
    let e = m.transfer_matrix(None)?;
    let e1 = m.transfer_matrix(Some(first))?;
    let e2 = m.transfer_matrix(Some(second))?;
    let lp = e1.matrix().vec_mul(&l);
    let mid = transfer_power_vec_left(e.matrix(), &lp, b - a - 1);
    let joint: C64 = e2.matrix().vec_mul(&mid).iter().zip(&r).map(|(x, y)| x * y).sum();
    let m1: C64 = lp.iter().zip(&r).map(|(x, y)| x * y).sum();
    let m2: C64 = e2.matrix().vec_mul(&l).iter().zip(&r).map(|(x, y)| x * y).sum();
    Ok(joint - m1 * m2)
}

/// Connected correlator on an open chain of `n` sites closed by the MPS
/// boundary vectors.
pub fn two_point_correlator_finite(
    m: &HomogeneousMPS,
    p: &LocalOperator,
    q: &LocalOperator,
    x1: usize,
    x2: usize,
    n: usize,
) -> Result<C64> {
    let (first, second, a, b) = ordered(p, q, x1, x2)?;
    if b >= n {
        return Err(invalid(format!("site {b} outside chain of {n}")));
    }
    let e = m.transfer_matrix(None)?;
    let e1 = m.transfer_matrix(Some(first))?;
    let e2 = m.transfer_matrix(Some(second))?;
    let vl = outer_conj(&m.left);
    let vr = outer_conj(&m.right);
    let la = transfer_power_vec_left(e.matrix(), &vl, a);
    let rb = transfer_power_vec_right(e.matrix(), &vr, n - b - 1);
    let close = |v: &[C64], w: &[C64]| -> C64 { v.iter().zip(w).map(|(x, y)| x * y).sum() };
    let z = close(&transfer_power_vec_left(e.matrix(), &vl, n), &vr);
    let lp = e1.matrix().vec_mul(&la);
    let joint = close(&e2.matrix().vec_mul(&transfer_power_vec_left(e.matrix(), &lp, b - a - 1)), &rb);
    let ep = close(&transfer_power_vec_left(e.matrix(), &lp, n - a - 1), &vr);
    let eq = close(&e2.matrix().vec_mul(&transfer_power_vec_left(e.matrix(), &vl, b)), &rb);
    Ok(joint / z - (ep / z) * (eq / z))
}

/// Entropy in bits of the `l` central sites of an `n`-site chain.
///
/// With ψ = Σ_{ab} |L_a⟩|M_ab⟩|R_b⟩, ρ_A = X G X† where X has columns M_ab
/// and G = Gram(L) ⊗ Gram(R); its nonzero spectrum equals that of
/// G^{1/2}(X†X)G^{1/2}, a χ²×χ² problem whose entries all come from powers
/// of the transfer matrix.
pub fn block_entropy(m: &HomogeneousMPS, l: usize, n: usize) -> Result<f64> {
    if l == 0 || l >= n {
        return Err(invalid(format!("block of {l} sites in a chain of {n}")));
    }
    let chi = m.chi();
    let start = (n - l) / 2;
    let e = m.transfer_matrix(None)?;
    let gl = transfer_power_vec_left(e.matrix(), &outer_conj(&m.left), start);
    let gr = transfer_power_vec_right(e.matrix(), &outer_conj(&m.right), n - start - l);
    let mut el = Mat::identity(chi * chi);
    for _ in 0..l {
        el = el.matmul(e.matrix());
    }
    let k = chi * chi;
    let idx = |a: usize, b: usize| a * chi + b;
    // G[(a,b),(a',b')] = ⟨L_a'|L_a⟩⟨R_b'|R_b⟩; gl[(a,a')] = ⟨L_a'|L_a⟩.
    let g = Mat::from_fn(k, k, |i, j| {
        let (a, b) = (i / chi, i % chi);
        let (ap, bp) = (j / chi, j % chi);
        gl[idx(a, ap)] * gr[idx(b, bp)]
    });
    // (X†X)[(a',b'),(a,b)] = ⟨M_a'b'|M_ab⟩ = E^l[(a,a'),(b,b')].
    let xx = Mat::from_fn(k, k, |i, j| {
        let (ap, bp) = (i / chi, i % chi);
        let (a, b) = (j / chi, j % chi);
        el[(idx(a, ap), idx(b, bp))]
    });
    let g = g.add(&g.adjoint()).scale(C64::new(0.5, 0.0));
    let gh = psd_sqrt(&g)?;
    let kmat = gh.matmul(&xx).matmul(&gh);
    let kmat = kmat.add(&kmat.adjoint()).scale(C64::new(0.5, 0.0));
    let (vals, _) = hermitian_eig(&kmat)?;
    Ok(linalg::entropy_bits(&vals))
}

/// Explicit amplitudes of the open chain leftᵀ A^{s_1} ⋯ A^{s_N} right.
pub fn state_vector(m: &HomogeneousMPS, n: usize) -> Result<Tensor> {
    let d = m.d();
    statevec::checked_size(d, n)?;
    if n == 0 {
        return Err(invalid("chain needs at least one site"));
    }
    let mats: Vec<Mat> = (0..d).map(|s| m.matrix(s)).collect();
    // rows: prefix configurations, columns: current bond index
    let mut cur = vec![m.left.clone()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(cur.len() * d);
        for v in &cur {
            for mat in &mats {
                next.push(mat.vec_mul(v));
            }
        }
        cur = next;
    }
    let amps: Vec<C64> = cur.iter().map(|v| v.iter().zip(&m.right).map(|(a, b)| a * b).sum()).collect();
    let labels: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    Tensor::new(vec![d; n], labels, amps)
}

/// Open-boundary MPS with site-dependent tensors of dims (χ_{i−1}, d, χ_i),
/// χ_0 = χ_N = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMPS {
    tensors: Vec<Tensor>,
}

impl FiniteMPS {
    pub fn new(tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(invalid("empty MPS"));
        }
        let mut prev = 1;
        for (i, t) in tensors.iter().enumerate() {
            let dims = t.dims();
            if dims.len() != 3 || dims[0] != prev {
                return Err(Error::DimMismatch(format!("site {i} has dims {dims:?}, left bond should be {prev}")));
            }
            prev = dims[2];
        }
        if prev != 1 {
            return Err(Error::DimMismatch("right boundary bond must be 1".into()));
        }
        let tensors = tensors
            .into_iter()
            .map(|t| t.with_labels(vec!["l", "s", "r"]))
            .collect::<Result<Vec<_>>>()?;
        Ok(FiniteMPS { tensors })
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// χ_1 … χ_{N−1}.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.dims()[2]).collect()
    }

    pub fn state_vector(&self) -> Result<Vec<C64>> {
        let total: usize = self.tensors.iter().map(|t| t.dims()[1]).product();
        if total > statevec::MAX_AMPLITUDES {
            return Err(Error::SizeCap(format!("{total} amplitudes exceed 2^20")));
        }
        let mut cur = vec![vec![ONE]];
        for t in &self.tensors {
            let (cl, d, cr) = (t.dims()[0], t.dims()[1], t.dims()[2]);
            let data = t.data();
            let mut next = Vec::with_capacity(cur.len() * d);
            for v in &cur {
                for s in 0..d {
                    let mut w = vec![ZERO; cr];
                    for (a, &va) in v.iter().enumerate().take(cl) {
                        for (b, wb) in w.iter_mut().enumerate() {
                            *wb += va * data[(a * d + s) * cr + b];
                        }
                    }
                    next.push(w);
                }
            }
            cur = next;
        }
        Ok(cur.into_iter().map(|v| v[0]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::connected_correlator;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// MPS of a two-state Markov chain with transition matrix
    /// [[3/4, 1/4], [1/4, 3/4]]: A^s_{ab} = δ_{sb}·sqrt(P_ab). Its transfer
    /// spectrum is that of P, i.e. {1, 1/2}, padded with zeros.
    fn markov() -> HomogeneousMPS {
        let p: [[f64; 2]; 2] = [[0.75, 0.25], [0.25, 0.75]];
        let mut data = vec![ZERO; 8];
        for a in 0..2 {
            for s in 0..2 {
                data[(a * 2 + s) * 2 + s] = c(p[a][s].sqrt());
            }
        }
        HomogeneousMPS::from_data(2, 2, data, vec![c(1.0), c(1.0)], vec![c(1.0), c(1.0)]).unwrap()
    }

    #[test]
    fn product_state_normalization_and_correlations() {
        let m = HomogeneousMPS::product(&[c(0.6), C64::new(0.0, 0.8)]).unwrap();
        let n = normalize(&m).unwrap();
        assert!(n.tensor().data().iter().zip(m.tensor().data()).all(|(a, b)| (a - b).norm() < 1e-15));
        let p = LocalOperator::random_traceless(2, 1);
        let q = LocalOperator::random_traceless(2, 2);
        assert!(two_point_correlator(&n, &p, &q, 0, 5).unwrap().norm() < 1e-14);
        assert_eq!(correlation_length(&n).unwrap().xi, 0.0);
        assert!(block_entropy(&n, 3, 8).unwrap().abs() < 1e-12);
    }

    #[test]
    fn normalization_ignores_overall_scale() {
        let m = HomogeneousMPS::random(3, 2, 5).unwrap();
        let a = normalize(&m).unwrap();
        let b = normalize(&m.scaled(c(7.0))).unwrap();
        assert!(a.tensor().data().iter().zip(b.tensor().data()).all(|(x, y)| (x - y).norm() < 1e-13));
        let lam = dominant_eigs(a.transfer_matrix(None).unwrap().matrix(), 1).unwrap().pairs[0].0;
        assert!((lam - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn markov_chain_correlation_length() {
        let m = normalize(&markov()).unwrap();
        let cl = correlation_length(&m).unwrap();
        assert!((cl.xi - 1.0 / 2f64.ln()).abs() < 1e-10);
        assert!((cl.lambda2.unwrap() - c(0.5)).norm() < 1e-10);
        // Connected correlators decay exactly as 2^{-r}.
        let z = LocalOperator::new(Mat::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()).unwrap();
        let c1 = two_point_correlator(&m, &z, &z, 0, 1).unwrap();
        for r in 2..8 {
            let cr = two_point_correlator(&m, &z, &z, 0, r).unwrap();
            assert!((cr / c1 - c(0.5f64.powi(r as i32 - 1))).norm() < 1e-10);
        }
    }

    #[test]
    fn ghz_is_degenerate() {
        let mut data = vec![ZERO; 8];
        data[0] = c(1.0);
        data[7] = c(1.0);
        let m = normalize(&HomogeneousMPS::from_data(2, 2, data, vec![c(1.0); 2], vec![c(1.0); 2]).unwrap()).unwrap();
        assert!(matches!(correlation_length(&m), Err(Error::Degenerate(_))));
        // Split in half, the two-site GHZ state is a Bell pair.
        assert!((block_entropy(&m, 1, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transfer_matrix_dressing_with_identity() {
        let m = HomogeneousMPS::random(3, 2, 8).unwrap();
        let plain = m.transfer_matrix(None).unwrap();
        let dressed = m.transfer_matrix(Some(&LocalOperator::identity(2))).unwrap();
        assert!(plain.matrix().max_abs_diff(dressed.matrix()) < 1e-12);
        assert!(m.transfer_matrix(Some(&LocalOperator::identity(3))).is_err());
    }

    #[test]
    fn dominant_eigs_agree_with_full_solve_on_transfer_matrix() {
        let m = HomogeneousMPS::random(3, 2, 4).unwrap();
        let e = m.transfer_matrix(None).unwrap();
        let full = linalg::general_eig(e.matrix()).unwrap();
        let dom = dominant_eigs(e.matrix(), 4).unwrap();
        for (i, (l, _)) in dom.pairs.iter().enumerate() {
            assert!((l.norm() - full[i].0.norm()).abs() < 1e-7);
        }
    }

    #[test]
    fn finite_correlator_matches_state_vector() {
        for seed in 0..4 {
            let m = HomogeneousMPS::random(3, 2, seed).unwrap();
            let psi = state_vector(&m, 12).unwrap().into_data();
            let p = LocalOperator::random_traceless(2, 100 + seed);
            let q = LocalOperator::random_traceless(2, 200 + seed);
            for (x1, x2) in [(0, 11), (3, 7), (8, 2), (5, 6)] {
                let tm = two_point_correlator_finite(&m, &p, &q, x1, x2, 12).unwrap();
                let sv = connected_correlator(&psi, 12, 2, p.matrix(), q.matrix(), x1, x2).unwrap();
                assert!((tm - sv).norm() < 1e-10, "seed {seed} ({x1},{x2}): {tm} vs {sv}");
            }
        }
    }

    #[test]
    fn identity_operators_have_no_connected_part() {
        let m = HomogeneousMPS::random(3, 2, 1).unwrap();
        let id = LocalOperator::identity(2);
        assert!(two_point_correlator(&m, &id, &id, 2, 9).unwrap().norm() < 1e-10);
        assert!(two_point_correlator_finite(&m, &id, &id, 2, 9, 12).unwrap().norm() < 1e-12);
    }

    #[test]
    fn schmidt_entropy_matches_partial_trace() {
        for (chi, seed) in [(2, 1), (3, 2), (4, 3)] {
            let m = HomogeneousMPS::random(chi, 2, seed).unwrap();
            let psi = state_vector(&m, 10).unwrap().into_data();
            for l in 1..10 {
                let start = (10 - l) / 2;
                let sv = statevec::block_entropy(&psi, 10, 2, start, l).unwrap();
                let tm = block_entropy(&m, l, 10).unwrap();
                assert!((sv - tm).abs() < 1e-9, "χ={chi} l={l}: {sv} vs {tm}");
            }
        }
    }

    #[test]
    fn state_vector_small_cases() {
        let m = HomogeneousMPS::random(2, 3, 6).unwrap();
        let psi = state_vector(&m, 2).unwrap();
        for s1 in 0..3 {
            for s2 in 0..3 {
                let direct = linalg::dot(
                    &m.left().iter().map(|z| z.conj()).collect::<Vec<_>>(),
                    &m.matrix(s1).matmul(&m.matrix(s2)).mul_vec(m.right()),
                );
                assert!((psi.get(&[s1, s2]) - direct).norm() < 1e-12);
            }
        }
        let phi = [c(0.6), c(0.8)];
        let p = state_vector(&HomogeneousMPS::product(&phi).unwrap(), 3).unwrap();
        assert!((p.get(&[1, 0, 1]) - c(0.8 * 0.6 * 0.8)).norm() < 1e-15);
        let big = HomogeneousMPS::random(2, 2, 0).unwrap();
        assert!(matches!(state_vector(&big, 21), Err(Error::SizeCap(_))));
        let v = state_vector(&big, 8).unwrap();
        let nv = linalg::normalized(v.data());
        assert!((linalg::norm(&nv) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_mps_contracts() {
        let t1 = Tensor::new(vec![1, 2, 2], vec!["l", "s", "r"], vec![c(1.0), ZERO, ZERO, c(1.0)]).unwrap();
        let t2 = Tensor::new(vec![2, 2, 1], vec!["l", "s", "r"], vec![c(1.0), ZERO, ZERO, c(1.0)]).unwrap();
        let f = FiniteMPS::new(vec![t1, t2]).unwrap();
        assert_eq!(f.bond_dims(), vec![2]);
        assert_eq!(f.state_vector().unwrap(), vec![c(1.0), ZERO, ZERO, c(1.0)]);
    }
}
