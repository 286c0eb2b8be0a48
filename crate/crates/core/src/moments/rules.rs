//! Gauss quadrature node tables, built once per node count via Golub-Welsch
//! on the Jacobi matrix of the weight's orthogonal polynomials.

use crate::linalg::{idx, symmetric_eigen};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

fn cache() -> &'static Mutex<HashMap<(u8, usize), (Vec<f64>, Vec<f64>)>> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, usize), (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn golub_welsch(n: usize, diag: &[f64], offdiag: &[f64], weight_mass: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jac = vec![0.0; n * n];
    for i in 0..n {
        jac[idx(n, i, i)] = diag[i];
        if i + 1 < n {
            jac[idx(n, i, i + 1)] = offdiag[i];
            jac[idx(n, i + 1, i)] = offdiag[i];
        }
    }
    let (vals, vecs) = symmetric_eigen(n, &jac);
    let weights: Vec<f64> = (0..n)
        .map(|j| {
            let v0 = vecs[idx(n, 0, j)];
            weight_mass * v0 * v0
        })
        .collect();
    (vals, weights)
}

/// Probabilists' Gauss-Hermite rule: integrates against the standard normal
/// density over the real line. Weights sum to 1.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    if let Some(hit) = cache().lock().unwrap().get(&(0, n)) {
        return hit.clone();
    }
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    let rule = golub_welsch(n, &diag, &offdiag, 1.0);
    cache().lock().unwrap().insert((0, n), rule.clone());
    rule
}

/// Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if let Some(hit) = cache().lock().unwrap().get(&(1, n)) {
        return hit.clone();
    }
    let diag = vec![0.0; n];
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let rule = golub_welsch(n, &diag, &offdiag, 2.0);
    cache().lock().unwrap().insert((1, n), rule.clone());
    rule
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_integrates_moments() {
        let (x, w) = gauss_hermite(20);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        let m6: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert_relative_eq!(m2, 1.0, epsilon = 1e-13);
        assert_relative_eq!(m4, 3.0, epsilon = 1e-12);
        assert_relative_eq!(m6, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, epsilon = 1e-13);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert_relative_eq!(m2, 2.0 / 3.0, epsilon = 1e-13);
        let c: f64 = x.iter().zip(&w).map(|(x, w)| w * x.cos()).sum();
        assert_relative_eq!(c, 2.0 * 1.0f64.sin(), epsilon = 1e-13);
    }
}
