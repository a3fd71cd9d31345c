//! Dense complex matrices and the eigensolvers the rest of the crate leans on.
//!
//! Three solvers live here:
//! - [`hermitian_eig`]: cyclic complex Jacobi, used for density matrices.
//! - [`general_eig`]: Hessenberg reduction plus shifted QR to Schur form,
//!   the full-spectrum solver for non-normal matrices.
//! - [`dominant_eigs`]: orthogonal (block power) iteration with Rayleigh-Ritz
//!   extraction for the few largest-modulus eigenpairs of transfer matrices.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Mat::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Complex standard Gaussian entries (real and imaginary parts of variance 1/2).
    pub fn random_gaussian(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Self {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        Mat::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re * scale, im * scale)
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        matmul_into(&self.data, &other.data, &mut out.data, self.rows, self.cols, other.cols);
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Row vector times matrix: `v^T M`.
    pub fn vec_mul(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![ZERO; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == ZERO {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest |m_ij - conj(m_ji)|; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `out += a (m×k) · b (k×n)`, all row-major.
pub(crate) fn matmul_into(a: &[C64], b: &[C64], out: &mut [C64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = norm(v);
    v.iter().map(|z| z / n).collect()
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Returns Q with
/// orthonormal columns and R upper triangular with real positive diagonal,
/// so the factorization is unique for full-rank input.
pub fn qr_positive(a: &Mat) -> Result<(Mat, Mat)> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return Err(invalid(format!("QR needs rows >= cols, got {m}x{n}")));
    }
    let mut q = a.clone();
    let mut r = Mat::zeros(n, n);
    for j in 0..n {
        let mut v = q.col(j);
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let c = dot(&qi, &v);
                r[(i, j)] += c;
                for (vk, qk) in v.iter_mut().zip(&qi) {
                    *vk -= c * qk;
                }
            }
        }
        let nv = norm(&v);
        if nv == 0.0 || !nv.is_finite() {
            return Err(Error::Degenerate("rank-deficient matrix in QR".into()));
        }
        r[(j, j)] = C64::new(nv, 0.0);
        let v: Vec<C64> = v.iter().map(|z| z / nv).collect();
        q.set_col(j, &v);
    }
    Ok((q, r))
}

/// Orthonormalize columns in place; tolerant of nearly dependent columns
/// (those are replaced by deterministic fresh directions).
fn orthonormalize_columns(q: &mut Mat) {
    let (m, n) = (q.rows, q.cols);
    for j in 0..n {
        let mut v = q.col(j);
        let start = norm(&v);
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let c = dot(&qi, &v);
                for (vk, qk) in v.iter_mut().zip(&qi) {
                    *vk -= c * qk;
                }
            }
        }
        let mut nv = norm(&v);
        if nv <= 1e-14 * start.max(1e-300) {
            // Collapsed direction: restart from a unit vector orthogonal to the rest.
            for e in 0..m {
                let mut w = vec![ZERO; m];
                w[(e + j) % m] = ONE;
                for _pass in 0..2 {
                    for i in 0..j {
                        let qi = q.col(i);
                        let c = dot(&qi, &w);
                        for (wk, qk) in w.iter_mut().zip(&qi) {
                            *wk -= c * qk;
                        }
                    }
                }
                if norm(&w) > 0.5 {
                    v = w;
                    break;
                }
            }
            nv = norm(&v);
        }
        let v: Vec<C64> = v.iter().map(|z| z / nv).collect();
        q.set_col(j, &v);
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
/// Eigenvalues come back in descending order; eigenvectors are the columns
/// of the returned matrix.
pub fn hermitian_eig(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!("{}x{} is not square", m.rows, m.cols)));
    }
    let scale = m.frobenius_norm().max(1e-300);
    let dev = m.hermitian_deviation();
    if dev > 1e-10 * scale.max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows;
    let mut a = m.clone();
    // Symmetrize exactly so rounding in the input cannot bias the rotations.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let h = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = h;
            a[(j, i)] = h.conj();
        }
    }
    let mut v = Mat::identity(n);
    const MAX_SWEEPS: usize = 100;
    let mut converged = n <= 1;
    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[(p, q)];
                let h = g.norm();
                if h <= 1e-300 || h <= 1e-18 * scale {
                    continue;
                }
                let phase = g / h;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * h);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // V = [[c, s·e^{iφ}], [−s·e^{−iφ}, c]] on the (p, q) plane; A ← V† A V.
                let sp = phase * s;
                let spc = sp.conj();
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * spc;
                    a[(k, q)] = akp * sp + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * sp;
                    a[(q, k)] = apk * spc + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(app - t * h, 0.0);
                a[(q, q)] = C64::new(aqq + t * h, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * spc;
                    v[(k, q)] = vkp * sp + vkq * c;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi did not converge for n={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// Givens rotation G = [[c, s], [−s̄, c]] with G·(a, b)ᵀ = (r, 0)ᵀ.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// All eigenvalues and right eigenvectors of a general square matrix,
/// sorted by descending modulus.
pub fn general_eig(m: &Mat) -> Result<Vec<(C64, Vec<C64>)>> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!("{}x{} is not square", m.rows, m.cols)));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    if !m.is_finite() {
        return Err(invalid("matrix has non-finite entries"));
    }
    let (t, z) = schur(m)?;
    let tnorm = t.frobenius_norm().max(1e-300);
    let small = f64::EPSILON * tnorm;
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * y[j];
            }
            let mut den = t[(i, i)] - lambda;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            y[i] = -s / den;
        }
        let v = normalized(&z.mul_vec(&y));
        pairs.push((lambda, v));
    }
    pairs.sort_by(|a, b| b.0.norm().total_cmp(&a.0.norm()));
    Ok(pairs)
}

/// Complex Schur form M = Z T Z† via Householder Hessenberg reduction and
/// Wilkinson-shifted QR sweeps.
fn schur(m: &Mat) -> Result<(Mat, Mat)> {
    let n = m.rows;
    let mut h = m.clone();
    let mut z = Mat::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let nx = norm(&x);
        if nx == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut v = x.clone();
        v[0] += phase * nx;
        let nv = norm(&v);
        let v: Vec<C64> = v.iter().map(|c| c / nv).collect();
        // H ← P H P with P = I − 2 v v† acting on rows/cols k+1..n.
        for j in 0..n {
            let mut s = ZERO;
            for (idx, i) in (k + 1..n).enumerate() {
                s += v[idx].conj() * h[(i, j)];
            }
            for (idx, i) in (k + 1..n).enumerate() {
                h[(i, j)] -= v[idx] * s * 2.0;
            }
        }
        for i in 0..n {
            let mut s = ZERO;
            for (idx, j) in (k + 1..n).enumerate() {
                s += h[(i, j)] * v[idx];
            }
            for (idx, j) in (k + 1..n).enumerate() {
                h[(i, j)] -= s * v[idx].conj() * 2.0;
            }
        }
        for i in 0..n {
            let mut s = ZERO;
            for (idx, j) in (k + 1..n).enumerate() {
                s += z[(i, j)] * v[idx];
            }
            for (idx, j) in (k + 1..n).enumerate() {
                z[(i, j)] -= s * v[idx].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }

    let eps = f64::EPSILON;
    let hnorm = h.frobenius_norm().max(1e-300);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 100 * n.max(10);
    while hi > 0 {
        // Find the start of the active unreduced block.
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let thresh = if diag > 0.0 { eps * diag } else { eps * hnorm };
            if sub <= thresh {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(Error::NoConvergence(format!("Schur QR exceeded {max_total} sweeps")));
        }
        let mu = if iter % 11 == 10 {
            // Exceptional shift breaks rare cycling.
            h[(hi, hi)] + C64::new(h[(hi, hi - 1)].norm() * 0.75, 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let tr_half = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
            let e1 = tr_half + disc;
            let e2 = tr_half - disc;
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            let row_end = (k + 2).min(hi + 1);
            for i in 0..row_end {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
        }
    }
    Ok((h, z))
}

/// Result of [`dominant_eigs`].
#[derive(Clone, Debug)]
pub struct DominantEigs {
    /// Eigenpairs in descending modulus; vectors have unit norm.
    pub pairs: Vec<(C64, Vec<C64>)>,
    /// Indices i where |λ_i| and |λ_{i+1}| agree within 1e−10 (relative to |λ_1|).
    pub modulus_ties: Vec<usize>,
    pub iterations: usize,
    /// True when the iteration stalled and the full Schur solve was used.
    pub used_fallback: bool,
}

impl DominantEigs {
    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn degenerate(&self) -> bool {
        !self.modulus_ties.is_empty()
    }
}

pub const DOMINANT_TOL: f64 = 1e-12;
pub const DOMINANT_MAX_ITER: usize = 100_000;

/// The `k` largest-modulus eigenpairs of a square matrix.
///
/// Orthogonal iteration on a block a few columns wider than `k`, with
/// Rayleigh-Ritz extraction every few steps so complex-conjugate pairs and
/// equal-modulus eigenvalues converge together. A stall falls back to the
/// full Schur solve.
pub fn dominant_eigs(m: &Mat, k: usize) -> Result<DominantEigs> {
    if !m.is_square() {
        return Err(Error::DimMismatch(format!("{}x{} is not square", m.rows, m.cols)));
    }
    let n = m.rows;
    if k == 0 || k > n {
        return Err(invalid(format!("k={k} out of range for dimension {n}")));
    }
    let mnorm = m.frobenius_norm();
    if mnorm == 0.0 {
        let pairs = (0..k)
            .map(|i| {
                let mut v = vec![ZERO; n];
                v[i] = ONE;
                (ZERO, v)
            })
            .collect();
        return Ok(finish(pairs, 0, false, 0.0));
    }
    let p = (k + 4).min(n);
    if p == n {
        let pairs = general_eig(m)?.into_iter().take(k).collect();
        return Ok(finish(pairs, 0, false, mnorm));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let mut q = Mat::random_gaussian(n, p, &mut rng);
    orthonormalize_columns(&mut q);
    let mut best_res = f64::INFINITY;
    let mut last_improve = 0usize;
    let mut it = 0usize;
    while it < DOMINANT_MAX_ITER {
        it += 1;
        q = m.matmul(&q);
        orthonormalize_columns(&mut q);
        if it % 5 != 0 {
            continue;
        }
        let hsmall = q.adjoint().matmul(&m.matmul(&q));
        let ritz = general_eig(&hsmall)?;
        let mut pairs = Vec::with_capacity(k);
        let mut worst: f64 = 0.0;
        for (lambda, y) in ritz.into_iter().take(k) {
            let v = normalized(&q.mul_vec(&y));
            let mv = m.mul_vec(&v);
            let res = norm(&mv.iter().zip(&v).map(|(a, b)| a - lambda * b).collect::<Vec<_>>());
            worst = worst.max(res);
            pairs.push((lambda, v));
        }
        if worst <= DOMINANT_TOL * mnorm {
            return Ok(finish(pairs, it, false, mnorm));
        }
        if worst < 0.5 * best_res {
            best_res = worst;
            last_improve = it;
        } else if it - last_improve > 500 {
            break;
        }
    }
    let pairs = general_eig(m)?.into_iter().take(k).collect();
    Ok(finish(pairs, it, true, mnorm))
}

fn finish(pairs: Vec<(C64, Vec<C64>)>, iterations: usize, used_fallback: bool, _mnorm: f64) -> DominantEigs {
    let top = pairs.first().map(|p| p.0.norm()).unwrap_or(0.0).max(1e-300);
    let modulus_ties = pairs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0].0.norm() - w[1].0.norm()).abs() <= 1e-10 * top)
        .map(|(i, _)| i)
        .collect();
    DominantEigs { pairs, modulus_ties, iterations, used_fallback }
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// small negative eigenvalues from rounding are clipped to zero.
pub fn psd_sqrt(m: &Mat) -> Result<Mat> {
    let (vals, vecs) = hermitian_eig(m)?;
    let n = m.rows;
    let roots: Vec<f64> = vals.iter().map(|&x| x.max(0.0).sqrt()).collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| vecs[(i, k)] * roots[k] * vecs[(j, k)].conj()).sum()
    }))
}

/// Von Neumann entropy in bits of a spectrum; entries are renormalized to sum 1.
pub fn entropy_bits(probabilities: &[f64]) -> f64 {
    let total: f64 = probabilities.iter().map(|p| p.max(0.0)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let s: f64 = probabilities
        .iter()
        .map(|&p| p.max(0.0) / total)
        .filter(|&p| p > 1e-16)
        .map(|p| -p * p.log2())
        .sum();
    s.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_hermitian(n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = Mat::random_gaussian(n, n, &mut rng);
        g.add(&g.adjoint()).scale(c(0.5))
    }

    #[test]
    fn jacobi_identity_and_diagonal() {
        let (vals, _) = hermitian_eig(&Mat::identity(4)).unwrap();
        assert_eq!(vals, vec![1.0; 4]);

        let m = Mat::diag(&[c(3.0), c(1.0), c(-2.0)]);
        let (vals, vecs) = hermitian_eig(&m).unwrap();
        assert_eq!(vals, vec![3.0, 1.0, -2.0]);
        assert!(vecs.max_abs_diff(&Mat::identity(3)) < 1e-15);
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let m = random_hermitian(6, 11);
        let (vals, v) = hermitian_eig(&m).unwrap();
        let lam = Mat::diag(&vals.iter().map(|&x| c(x)).collect::<Vec<_>>());
        let rec = v.matmul(&lam).matmul(&v.adjoint());
        assert!(rec.max_abs_diff(&m) < 1e-9);
        assert!(v.adjoint().matmul(&v).max_abs_diff(&Mat::identity(6)) < 1e-10);
        let tr: f64 = vals.iter().sum();
        assert!((tr - m.trace().re).abs() < 1e-9);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_rejects_non_hermitian() {
        let m = Mat::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn qr_has_positive_diagonal_and_reconstructs() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = Mat::random_gaussian(5, 3, &mut rng);
        let (q, r) = qr_positive(&a).unwrap();
        assert!(q.adjoint().matmul(&q).max_abs_diff(&Mat::identity(3)) < 1e-13);
        assert!(q.matmul(&r).max_abs_diff(&a) < 1e-13);
        for i in 0..3 {
            assert!(r[(i, i)].re > 0.0 && r[(i, i)].im == 0.0);
        }
    }

    #[test]
    fn general_eig_triangular_and_rotation() {
        let m = Mat::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).unwrap();
        let pairs = general_eig(&m).unwrap();
        for (l, v) in &pairs {
            assert!((l.norm() - 1.0).abs() < 1e-14 && l.re.abs() < 1e-14);
            let mv = m.mul_vec(v);
            assert!(mv.iter().zip(v).all(|(a, b)| (a - l * b).norm() < 1e-13));
        }
    }

    #[test]
    fn general_eig_matches_nalgebra_schur() {
        for seed in 0..5 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let m = Mat::random_gaussian(9, 9, &mut rng);
            let mine = general_eig(&m).unwrap();
            let nm = nalgebra::DMatrix::from_fn(9, 9, |i, j| m[(i, j)]);
            let mut theirs: Vec<C64> = nm.schur().eigenvalues().unwrap().iter().copied().collect();
            for (l, v) in &mine {
                let mv = m.mul_vec(v);
                let res = norm(&mv.iter().zip(v).map(|(a, b)| a - l * b).collect::<Vec<_>>());
                assert!(res < 1e-10 * m.frobenius_norm(), "residual {res}");
                let pos = theirs
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - l).norm().total_cmp(&(b.1 - l).norm()))
                    .unwrap()
                    .0;
                assert!((theirs[pos] - l).norm() < 1e-9);
                theirs.remove(pos);
            }
        }
    }

    #[test]
    fn dominant_diag_and_stochastic() {
        let d = Mat::diag(&[c(2.0), c(0.5)]);
        let r = dominant_eigs(&d, 2).unwrap();
        assert!((r.pairs[0].0 - c(2.0)).norm() < 1e-14);
        assert!((r.pairs[1].0 - c(0.5)).norm() < 1e-14);

        // Closed form for [[a, b], [b, a]]: a ± b.
        let s = Mat::from_real(2, 2, &[0.9, 0.1, 0.1, 0.9]).unwrap();
        let r = dominant_eigs(&s, 2).unwrap();
        assert!((r.pairs[0].0 - c(1.0)).norm() < 1e-12);
        assert!((r.pairs[1].0 - c(0.8)).norm() < 1e-12);
    }

    #[test]
    fn dominant_flags_ties() {
        let d = Mat::diag(&[c(1.0), c(-1.0), c(0.3), c(0.1), c(0.05), c(0.01), c(0.0)]);
        let r = dominant_eigs(&d, 3).unwrap();
        assert_eq!(r.modulus_ties, vec![0]);
        assert!(r.degenerate());
    }

    #[test]
    fn dominant_iteration_matches_full_solve_on_large_matrix() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let a = Mat::random_gaussian(40, 40, &mut rng);
        let full = general_eig(&a).unwrap();
        let dom = dominant_eigs(&a, 3).unwrap();
        let mnorm = a.frobenius_norm();
        for (l, v) in &dom.pairs {
            let mv = a.mul_vec(v);
            let res = norm(&mv.iter().zip(v).map(|(x, y)| x - l * y).collect::<Vec<_>>());
            assert!(res < 1e-8 * mnorm);
        }
        for i in 0..3 {
            assert!((dom.pairs[i].0.norm() - full[i].0.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_of_uniform_and_pure() {
        assert!((entropy_bits(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert_eq!(entropy_bits(&[1.0, 0.0]), 0.0);
    }
}
