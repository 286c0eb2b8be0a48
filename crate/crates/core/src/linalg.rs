//! Small dense symmetric-matrix helpers for the moment engine and the
//! kernel recursions. Matrices here are tiny (the number of distinct inputs,
//! or a quadrature node count), so plain row-major `Vec<f64>` routines are
//! enough.

use crate::error::{Error, Result};

#[inline]
pub fn idx(n: usize, r: usize, c: usize) -> usize {
    r * n + c
}

/// Lower-triangular Cholesky factor of a symmetric PSD matrix. A diagonal
/// jitter of `1e-12 * trace` is added once if the plain factorization stalls
/// on a slightly indefinite input.
pub fn cholesky(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    match cholesky_raw(n, a, 0.0) {
        Ok(l) => Ok(l),
        Err(_) => {
            let trace: f64 = (0..n).map(|i| a[idx(n, i, i)]).sum();
            cholesky_raw(n, a, 1e-12 * trace.abs())
        }
    }
}

fn cholesky_raw(n: usize, a: &[f64], jitter: f64) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[idx(n, i, j)];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[idx(n, i, k)] * l[idx(n, j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPsd(format!("pivot {s:.3e} at row {i}")));
                }
                l[idx(n, i, i)] = s.sqrt();
            } else {
                l[idx(n, i, j)] = s / l[idx(n, j, j)];
            }
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
/// Fails as singular when the plain (unjittered) factorization stalls or a
/// pivot falls below `1e-12 * trace`.
pub fn spd_inverse(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let trace: f64 = (0..n).map(|i| a[idx(n, i, i)]).sum();
    let l = cholesky_raw(n, a, 0.0).map_err(|_| Error::Singular)?;
    let tol = 1e-12 * trace.abs();
    for i in 0..n {
        if l[idx(n, i, i)] * l[idx(n, i, i)] <= tol {
            return Err(Error::Singular);
        }
    }
    // Invert L in place (lower triangular), then K^-1 = L^-T L^-1.
    let mut li = vec![0.0; n * n];
    for i in 0..n {
        li[idx(n, i, i)] = 1.0 / l[idx(n, i, i)];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s -= l[idx(n, i, k)] * li[idx(n, k, j)];
            }
            li[idx(n, i, j)] = s / l[idx(n, i, i)];
        }
    }
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i.max(j)..n {
                s += li[idx(n, k, i)] * li[idx(n, k, j)];
            }
            inv[idx(n, i, j)] = s;
            inv[idx(n, j, i)] = s;
        }
    }
    Ok(inv)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix
/// by cyclic Jacobi rotations.
pub fn symmetric_eigen(n: usize, a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[idx(n, i, i)] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[idx(n, p, q)].abs();
            }
        }
        if off / scale < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(n, p, q)];
                if apq.abs() / scale < 1e-18 {
                    continue;
                }
                let app = m[idx(n, p, p)];
                let aqq = m[idx(n, q, q)];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[idx(n, k, p)];
                    let mkq = m[idx(n, k, q)];
                    m[idx(n, k, p)] = c * mkp - s * mkq;
                    m[idx(n, k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[idx(n, p, k)];
                    let mqk = m[idx(n, q, k)];
                    m[idx(n, p, k)] = c * mpk - s * mqk;
                    m[idx(n, q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[idx(n, k, p)];
                    let vkq = v[idx(n, k, q)];
                    v[idx(n, k, p)] = c * vkp - s * vkq;
                    v[idx(n, k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[idx(n, i, i)].partial_cmp(&m[idx(n, j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[idx(n, i, i)]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vecs[idx(n, r, new_c)] = v[idx(n, r, old_c)];
        }
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(n: usize, a: &[f64]) -> f64 {
    symmetric_eigen(n, a).0[0]
}
