//! Brute-force state-vector utilities: the oracle for every desk-scale check.
//! States are flat amplitude vectors over n sites of dimension d, site 0 most
//! significant.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, hermitian_eig, Mat, C64, ZERO};

pub const MAX_AMPLITUDES: usize = 1 << 20;

pub fn checked_size(d: usize, n: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..n {
        size = size.checked_mul(d).filter(|&s| s <= MAX_AMPLITUDES).ok_or_else(|| {
            Error::SizeCap(format!("d^N = {d}^{n} exceeds 2^20 amplitudes"))
        })?;
    }
    Ok(size)
}

fn check_state(psi: &[C64], n: usize, d: usize) -> Result<()> {
    if d.checked_pow(n as u32) != Some(psi.len()) {
        return Err(Error::DimMismatch(format!("{} amplitudes for {n} sites of dim {d}", psi.len())));
    }
    Ok(())
}

/// Apply a single-site operator at `site`.
pub fn apply_one(psi: &[C64], n: usize, d: usize, site: usize, op: &Mat) -> Result<Vec<C64>> {
    check_state(psi, n, d)?;
    if site >= n || op.rows() != d || op.cols() != d {
        return Err(invalid(format!("operator of shape {}x{} at site {site} of {n}", op.rows(), op.cols())));
    }
    let inner = d.pow((n - 1 - site) as u32);
    let outer = psi.len() / (inner * d);
    let mut out = vec![ZERO; psi.len()];
    for o in 0..outer {
        for sp in 0..d {
            for s in 0..d {
                let c = op[(sp, s)];
                if c == ZERO {
                    continue;
                }
                let src = (o * d + s) * inner;
                let dst = (o * d + sp) * inner;
                for i in 0..inner {
                    out[dst + i] += c * psi[src + i];
                }
            }
        }
    }
    Ok(out)
}

/// ⟨ψ|O_x|ψ⟩ / ⟨ψ|ψ⟩.
pub fn expectation_one(psi: &[C64], n: usize, d: usize, site: usize, op: &Mat) -> Result<C64> {
    let phi = apply_one(psi, n, d, site, op)?;
    Ok(linalg::dot(psi, &phi) / linalg::dot(psi, psi).re)
}

/// ⟨P_{x1} Q_{x2}⟩ − ⟨P_{x1}⟩⟨Q_{x2}⟩ for x1 ≠ x2.
pub fn connected_correlator(psi: &[C64], n: usize, d: usize, p: &Mat, q: &Mat, x1: usize, x2: usize) -> Result<C64> {
    if x1 == x2 {
        return Err(invalid("correlator sites must differ"));
    }
    let norm2 = linalg::dot(psi, psi).re;
    let qpsi = apply_one(psi, n, d, x2, q)?;
    let pqpsi = apply_one(&qpsi, n, d, x1, p)?;
    let pq = linalg::dot(psi, &pqpsi) / norm2;
    let ep = expectation_one(psi, n, d, x1, p)?;
    let eq = linalg::dot(psi, &qpsi) / norm2;
    Ok(pq - ep * eq)
}

/// Spectrum of the reduced density matrix of sites [start, start+len),
/// normalized to unit trace.
pub fn block_spectrum(psi: &[C64], n: usize, d: usize, start: usize, len: usize) -> Result<Vec<f64>> {
    check_state(psi, n, d)?;
    if len == 0 || start + len > n {
        return Err(invalid(format!("block [{start}, {}) outside {n} sites", start + len)));
    }
    let mid = d.pow(len as u32);
    let right = d.pow((n - start - len) as u32);
    let left = psi.len() / (mid * right);
    let at = |l: usize, a: usize, r: usize| psi[(l * mid + a) * right + r];
    let gram = if mid <= left * right {
        let mut rho = Mat::zeros(mid, mid);
        for a in 0..mid {
            for b in a..mid {
                let mut s = ZERO;
                for l in 0..left {
                    for r in 0..right {
                        s += at(l, a, r) * at(l, b, r).conj();
                    }
                }
                rho[(a, b)] = s;
                rho[(b, a)] = s.conj();
            }
        }
        rho
    } else {
        let env = left * right;
        let mut sigma = Mat::zeros(env, env);
        for e in 0..env {
            for f in e..env {
                let mut s = ZERO;
                for a in 0..mid {
                    s += at(e / right, a, e % right) * at(f / right, a, f % right).conj();
                }
                sigma[(e, f)] = s;
                sigma[(f, e)] = s.conj();
            }
        }
        sigma
    };
    let (vals, _) = hermitian_eig(&gram)?;
    let tr: f64 = vals.iter().sum();
    Ok(vals.iter().map(|v| v / tr).collect())
}

/// Entanglement entropy in bits of a contiguous block.
pub fn block_entropy(psi: &[C64], n: usize, d: usize, start: usize, len: usize) -> Result<f64> {
    Ok(linalg::entropy_bits(&block_spectrum(psi, n, d, start, len)?))
}

/// |⟨a|b⟩| for unit-normalized copies of a and b.
pub fn fidelity(a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(format!("{} vs {} amplitudes", a.len(), b.len())));
    }
    let (na, nb) = (linalg::norm(a), linalg::norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(invalid("fidelity of a zero vector"));
    }
    Ok((linalg::dot(a, b).norm() / (na * nb)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;

    fn bell() -> Vec<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]
    }

    #[test]
    fn bell_pair_entropy_is_one_bit() {
        assert!((block_entropy(&bell(), 2, 2, 0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((block_entropy(&bell(), 2, 2, 1, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_zero_entropy_and_correlation() {
        let mut psi = vec![ZERO; 16];
        psi[5] = ONE;
        assert!(block_entropy(&psi, 4, 2, 1, 2).unwrap().abs() < 1e-12);
        let z = Mat::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(connected_correlator(&psi, 4, 2, &z, &z, 0, 3).unwrap().norm() < 1e-14);
    }

    #[test]
    fn bell_correlator() {
        let z = Mat::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
        let c = connected_correlator(&bell(), 2, 2, &z, &z, 0, 1).unwrap();
        assert!((c - ONE).norm() < 1e-14);
    }

    #[test]
    fn size_cap() {
        assert!(checked_size(2, 20).is_ok());
        assert!(matches!(checked_size(2, 21), Err(Error::SizeCap(_))));
    }
}
