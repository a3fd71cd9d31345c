//! Dense complex tensors with named indices.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, matmul_into, Mat, C64, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    labels: Vec<String>,
    data: Vec<C64>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

impl Tensor {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>, data: Vec<C64>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if dims.len() != labels.len() {
            return Err(Error::DimMismatch(format!(
                "{} dims but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(invalid("tensor dims must be positive"));
        }
        let size: usize = dims.iter().product();
        if size != data.len() {
            return Err(Error::DimMismatch(format!("dims {dims:?} need {size} entries, got {}", data.len())));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("tensor entries must be finite"));
        }
        Ok(Tensor { dims, labels, data })
    }

    pub fn zeros<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let size = dims.iter().product();
        Tensor::new(dims, labels, vec![ZERO; size])
    }

    pub fn scalar(value: C64) -> Self {
        Tensor { dims: Vec::new(), labels: Vec::new(), data: vec![value] }
    }

    /// Wrap a matrix as a rank-2 tensor with the given row and column labels.
    pub fn from_matrix(m: &Mat, row: &str, col: &str) -> Result<Self> {
        Tensor::new(vec![m.rows(), m.cols()], vec![row, col], m.data().to_vec())
    }

    pub fn from_vector(v: &[C64], label: &str) -> Result<Self> {
        Tensor::new(vec![v.len()], vec![label], v.to_vec())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.axis(label)?])
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        let st = strides(&self.dims);
        self.data[index.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()]
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.data)
    }

    pub fn scale(&self, s: C64) -> Tensor {
        Tensor { dims: self.dims.clone(), labels: self.labels.clone(), data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn conj(&self) -> Tensor {
        Tensor { dims: self.dims.clone(), labels: self.labels.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn relabel(mut self, from: &str, to: &str) -> Result<Tensor> {
        let ax = self.axis(from)?;
        if from != to && self.labels.iter().any(|l| l == to) {
            return Err(Error::DuplicateLabel(to.to_string()));
        }
        self.labels[ax] = to.to_string();
        Ok(self)
    }

    pub fn with_labels<S: Into<String>>(self, labels: Vec<S>) -> Result<Tensor> {
        Tensor::new(self.dims, labels, self.data)
    }

    /// Reorder axes so the labels appear in `order`.
    pub fn permute<S: AsRef<str>>(&self, order: &[S]) -> Result<Tensor> {
        if order.len() != self.rank() {
            return Err(Error::DimMismatch(format!("permutation of length {} for rank {}", order.len(), self.rank())));
        }
        let perm: Vec<usize> = order.iter().map(|l| self.axis(l.as_ref())).collect::<Result<_>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if seen[p] {
                return Err(Error::DuplicateLabel(self.labels[p].clone()));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let old_strides = strides(&self.dims);
        let src_strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let data = gather(&self.data, &new_dims, &src_strides);
        Ok(Tensor { dims: new_dims, labels: perm.iter().map(|&p| self.labels[p].clone()).collect(), data })
    }

    /// Matrix view with the given row labels (in order) fused into rows and
    /// the remaining labels, in current order, fused into columns.
    pub fn to_matrix<S: AsRef<str>>(&self, row_labels: &[S]) -> Result<(Mat, Vec<String>)> {
        let rows: Vec<String> = row_labels.iter().map(|s| s.as_ref().to_string()).collect();
        let cols: Vec<String> = self.labels.iter().filter(|l| !rows.contains(l)).cloned().collect();
        let order: Vec<&str> = rows.iter().chain(cols.iter()).map(String::as_str).collect();
        let p = self.permute(&order)?;
        let r: usize = p.dims[..rows.len()].iter().product();
        let c: usize = p.dims[rows.len()..].iter().product();
        Ok((Mat::from_vec(r, c, p.data)?, cols))
    }
}

/// Copy `src` into a fresh buffer laid out row-major over `dims`, reading
/// element (i_0, ..., i_k) from offset Σ i_j·src_strides[j].
fn gather(src: &[C64], dims: &[usize], src_strides: &[usize]) -> Vec<C64> {
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    if dims.is_empty() {
        out.push(src[0]);
        return out;
    }
    let rank = dims.len();
    let last = rank - 1;
    let (ld, ls) = (dims[last], src_strides[last]);
    let mut idx = vec![0usize; rank];
    let mut base = 0usize;
    loop {
        if ls == 1 {
            out.extend_from_slice(&src[base..base + ld]);
        } else {
            out.extend((0..ld).map(|i| src[base + i * ls]));
        }
        // Advance the outer indices odometer-style.
        let mut ax = last;
        loop {
            if ax == 0 {
                return out;
            }
            ax -= 1;
            idx[ax] += 1;
            base += src_strides[ax];
            if idx[ax] < dims[ax] {
                break;
            }
            base -= src_strides[ax] * dims[ax];
            idx[ax] = 0;
        }
    }
}

/// Contract `a` and `b` over the listed `(label_in_a, label_in_b)` pairs.
/// The result carries a's free labels followed by b's free labels.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(&str, &str)]) -> Result<Tensor> {
    let mut ca = Vec::with_capacity(pairs.len());
    let mut cb = Vec::with_capacity(pairs.len());
    for &(la, lb) in pairs {
        let ia = a.axis(la)?;
        let ib = b.axis(lb)?;
        if a.dims[ia] != b.dims[ib] {
            return Err(Error::DimMismatch(format!(
                "{la} has dim {} but {lb} has dim {}",
                a.dims[ia], b.dims[ib]
            )));
        }
        if ca.contains(&ia) || cb.contains(&ib) {
            return Err(Error::DuplicateLabel(format!("{la}/{lb} paired twice")));
        }
        ca.push(ia);
        cb.push(ib);
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|i| !ca.contains(i)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|i| !cb.contains(i)).collect();
    let mut out_labels: Vec<String> = free_a.iter().map(|&i| a.labels[i].clone()).collect();
    out_labels.extend(free_b.iter().map(|&i| b.labels[i].clone()));
    let mut seen = HashSet::new();
    for l in &out_labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    let order_a: Vec<&str> = free_a.iter().chain(&ca).map(|&i| a.labels[i].as_str()).collect();
    let order_b: Vec<&str> = cb.iter().chain(&free_b).map(|&i| b.labels[i].as_str()).collect();
    let pa = a.permute(&order_a)?;
    let pb = b.permute(&order_b)?;
    let m: usize = free_a.iter().map(|&i| a.dims[i]).product();
    let k: usize = ca.iter().map(|&i| a.dims[i]).product();
    let n: usize = free_b.iter().map(|&i| b.dims[i]).product();
    let mut data = vec![ZERO; m * n];
    matmul_into(&pa.data, &pb.data, &mut data, m, k, n);
    let mut out_dims: Vec<usize> = free_a.iter().map(|&i| a.dims[i]).collect();
    out_dims.extend(free_b.iter().map(|&i| b.dims[i]));
    Ok(Tensor { dims: out_dims, labels: out_labels, data })
}

/// Hermitian single-site operator.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    matrix: Mat,
}

impl LocalOperator {
    pub fn new(matrix: Mat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimMismatch("local operator must be square".into()));
        }
        let dev = matrix.hermitian_deviation();
        if dev > 1e-12 * matrix.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(LocalOperator { matrix })
    }

    pub fn identity(d: usize) -> Self {
        LocalOperator { matrix: Mat::identity(d) }
    }

    /// Traceless Hermitian operator from a seeded complex Gaussian matrix,
    /// scaled to unit Frobenius norm.
    pub fn random_traceless(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let g = Mat::random_gaussian(d, d, &mut rng);
        let mut h = g.add(&g.adjoint()).scale(C64::new(0.5, 0.0));
        let shift = h.trace() / d as f64;
        for i in 0..d {
            h[(i, i)] -= shift;
            h[(i, i)].im = 0.0;
        }
        let n = h.frobenius_norm();
        let matrix = if n > 0.0 { h.scale(C64::new(1.0 / n, 0.0)) } else { h };
        LocalOperator { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }
}

/// Seeded Haar-like isometry: complex Gaussian fill from ChaCha20 followed by
/// QR with a real positive triangular diagonal, so the output depends only on
/// `(rows, cols, seed)`. Labels are `out` (rows) and `in` (cols).
pub fn random_isometry(rows: usize, cols: usize, seed: u64) -> Result<Tensor> {
    let q = random_isometry_matrix(rows, cols, seed)?;
    Tensor::from_matrix(&q, "out", "in")
}

pub fn random_isometry_matrix(rows: usize, cols: usize, seed: u64) -> Result<Mat> {
    if rows < cols {
        return Err(invalid(format!("isometry needs rows >= cols, got {rows}x{cols}")));
    }
    if cols == 0 {
        return Err(invalid("isometry needs at least one column"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = Mat::random_gaussian(rows, cols, &mut rng);
    Ok(linalg::qr_positive(&g)?.0)
}

/// Seeded unit vector with complex Gaussian direction.
pub fn random_unit_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g = Mat::random_gaussian(n, 1, &mut rng);
    linalg::normalized(g.data())
}

/// Derive an independent child seed; SplitMix64 finalizer over (seed, stream).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
