//! Exact Gaussian orthant calculus for piecewise-linear activations.
//!
//! Every moment of a scale-invariant activation reduces, per distinct
//! variable, to `z^q * (c_plus 1{z>0} + c_minus 1{z<0})`. Expanding the sign
//! combinations leaves mean-zero Gaussian moments over positive orthants,
//! `E[prod z_s^{q_s} prod 1{z_s>0}]`, which satisfy a Stein recursion that
//! terminates on orthant probabilities. Orthant probabilities are closed
//! form up to dimension 3; dimension 4 uses Plackett's identity, which turns
//! the probability into a smooth 1-D integral.

use crate::activation::INV_SQRT_2PI;
use crate::moments::rules::gauss_legendre;

const PLACKETT_NODES: usize = 48;

/// One variable's worth of integrand: `z^q * (c_plus 1{z>=0} + c_minus 1{z<0})`.
#[derive(Debug, Clone, Copy)]
pub struct BranchFactor {
    pub q: usize,
    pub c_plus: f64,
    pub c_minus: f64,
}

/// Mean-zero Gaussian expectation of a product of branch factors over the
/// covariance `k` (row-major, d x d, d <= 4).
pub fn branch_moment(d: usize, k: &[f64], factors: &[BranchFactor]) -> f64 {
    debug_assert!(d <= 4 && factors.len() == d);
    let mut total = 0.0;
    // sign vector: bit s set => take the negative branch of variable s
    for signs in 0..(1usize << d) {
        let mut coef = 1.0;
        let mut parity = 1.0;
        for (s, f) in factors.iter().enumerate() {
            if signs & (1 << s) == 0 {
                coef *= f.c_plus;
            } else {
                coef *= f.c_minus;
                if f.q % 2 == 1 {
                    parity = -parity;
                }
            }
        }
        if coef == 0.0 {
            continue;
        }
        // reflect negative-branch variables so all indicators are z > 0
        let mut kk = k.to_vec();
        for i in 0..d {
            for j in 0..d {
                let si = if signs & (1 << i) == 0 { 1.0 } else { -1.0 };
                let sj = if signs & (1 << j) == 0 { 1.0 } else { -1.0 };
                kk[i * d + j] *= si * sj;
            }
        }
        let q: Vec<usize> = factors.iter().map(|f| f.q).collect();
        total += coef * parity * positive_orthant_moment(d, &kk, &q);
    }
    total
}

/// `E[prod_s z_s^{q_s} prod_s 1{z_s > 0}]` over N(0, k).
fn positive_orthant_moment(d: usize, k: &[f64], q: &[usize]) -> f64 {
    if let Some(s) = (0..d).find(|&s| q[s] >= 1) {
        // Stein: E[z_s h] = sum_t K_st E[d h / d z_t]
        let mut q1 = q.to_vec();
        q1[s] -= 1;
        let mut acc = 0.0;
        for t in 0..d {
            let kst = k[s * d + t];
            if kst == 0.0 {
                continue;
            }
            // power rule on z_t^{q1_t}
            if q1[t] >= 1 {
                let mut q2 = q1.clone();
                q2[t] -= 1;
                acc += kst * q1[t] as f64 * positive_orthant_moment(d, k, &q2);
            } else {
                // delta from the indicator: evaluate at z_t = 0, condition out t
                let ktt = k[t * d + t];
                let density = INV_SQRT_2PI / ktt.sqrt();
                if d == 1 {
                    acc += kst * density;
                } else {
                    let (kc, qc) = condition_out(d, k, &q1, t);
                    acc += kst * density * positive_orthant_moment(d - 1, &kc, &qc);
                }
            }
        }
        return acc;
    }
    orthant_probability(d, k)
}

/// Schur-complement covariance after conditioning variable `t` to zero.
fn condition_out(d: usize, k: &[f64], q: &[usize], t: usize) -> (Vec<f64>, Vec<usize>) {
    let keep: Vec<usize> = (0..d).filter(|&i| i != t).collect();
    let ktt = k[t * d + t];
    let mut kc = vec![0.0; (d - 1) * (d - 1)];
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            kc[a * (d - 1) + b] = k[i * d + j] - k[i * d + t] * k[t * d + j] / ktt;
        }
    }
    let qc: Vec<usize> = keep.iter().map(|&i| q[i]).collect();
    (kc, qc)
}

/// P(z_1 > 0, ..., z_d > 0) under N(0, k).
pub fn orthant_probability(d: usize, k: &[f64]) -> f64 {
    match d {
        1 => 0.5,
        2 => 0.25 + corr(k, 2, 0, 1).asin() / (2.0 * std::f64::consts::PI),
        3 => {
            let s = corr(k, 3, 0, 1).asin() + corr(k, 3, 0, 2).asin() + corr(k, 3, 1, 2).asin();
            0.125 + s / (4.0 * std::f64::consts::PI)
        }
        4 => orthant4(k),
        _ => unreachable!("orthant dimension {d} out of range"),
    }
}

#[inline]
fn corr(k: &[f64], d: usize, i: usize, j: usize) -> f64 {
    let r = k[i * d + j] / (k[i * d + i] * k[j * d + j]).sqrt();
    r.clamp(-1.0, 1.0)
}

/// Plackett's identity: differentiate the orthant probability along the
/// straight line from the identity correlation matrix and integrate back.
/// The derivative in the (i,j) correlation is the bivariate normal density
/// at the origin times the conditional 2-D orthant probability of the other
/// two variables given z_i = z_j = 0 (closed form).
fn orthant4(k: &[f64]) -> f64 {
    let mut rho = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            rho[i][j] = if i == j { 1.0 } else { corr(k, 4, i, j) };
        }
    }
    let (nodes, weights) = gauss_legendre(PLACKETT_NODES);
    let mut p = 1.0 / 16.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    for (node, weight) in nodes.iter().zip(&weights) {
        let t = 0.5 * (node + 1.0);
        let wt = 0.5 * weight;
        let mut dp = 0.0;
        // correlation matrix along the homotopy: off-diagonals scaled by t
        for i in 0..4 {
            for j in (i + 1)..4 {
                let r = rho[i][j];
                if r == 0.0 {
                    continue;
                }
                let rt = t * r;
                let others: Vec<usize> = (0..4).filter(|&x| x != i && x != j).collect();
                let (a, b) = (others[0], others[1]);
                // condition z_i = z_j = 0 under the t-scaled matrix
                let det = 1.0 - rt * rt;
                // inverse of the 2x2 block for (i, j)
                let (ai, bi) = (1.0 / det, -rt / det);
                let cov_cond = |x: usize, y: usize| -> f64 {
                    let cxi = t * rho[x][i];
                    let cxj = t * rho[x][j];
                    let cyi = t * rho[y][i];
                    let cyj = t * rho[y][j];
                    let base = if x == y { 1.0 } else { t * rho[x][y] };
                    base - (cxi * (ai * cyi + bi * cyj) + cxj * (bi * cyi + ai * cyj))
                };
                let vaa = cov_cond(a, a);
                let vbb = cov_cond(b, b);
                let vab = cov_cond(a, b);
                let rc = (vab / (vaa * vbb).sqrt()).clamp(-1.0, 1.0);
                let q2 = 0.25 + rc.asin() / two_pi;
                let density = 1.0 / (two_pi * det.sqrt());
                dp += r * density * q2;
            }
        }
        p += wt * dp;
    }
    p
}
