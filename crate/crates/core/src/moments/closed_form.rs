//! Registered analytic Gaussian moments for scale-invariant activations:
//! the one-dimensional branch integrals, the two-dimensional arc-cosine
//! family, and the pairwise-coincident four-derivative reduction. These are
//! independent expressions, not calls into the orthant recursion, so the two
//! routes can be checked against each other.
//!
//! Note the derivative pair integrates to `(a+^2 + a-^2)/2` per branch
//! weights; the printed-elsewhere `(a+^2 - a-^2)/2` does not survive direct
//! branch integration (both agree for ReLU).

use crate::activation::{ActivationModel, INV_SQRT_2PI};
use crate::moments::Grouped;
use std::f64::consts::PI;

/// `E[u^q 1{u>0}]` for a standard normal `u`.
fn half_moment(q: usize) -> f64 {
    match q {
        0 => 0.5,
        1 => INV_SQRT_2PI,
        _ => (q as f64 - 1.0) * half_moment(q - 2),
    }
}

pub fn lookup(model: &ActivationModel, grouped: &Grouped) -> Option<f64> {
    if !model.scale_invariant {
        return None;
    }
    let (ap, am) = (model.a_plus, model.a_minus);
    let c = ap - am;
    let d = grouped.dim();

    // <sigma'' sigma ...> vanishes whenever the kink variable carries a
    // sigma factor or an explicit z power: sigma(0) = 0 kills the delta.
    for v in &grouped.per_var {
        if v.orders.iter().any(|&o| o == 2)
            && (v.power > 0 || v.orders.iter().any(|&o| o == 0))
        {
            return Some(0.0);
        }
    }

    match d {
        1 => {
            let v = &grouped.per_var[0];
            if v.orders.iter().any(|&o| o >= 2) {
                return None;
            }
            let k = grouped.cov[0];
            let zeros = v.orders.iter().filter(|&&o| o == 0).count();
            let q = v.power + zeros;
            let n = v.orders.len() as i32;
            let h = half_moment(q) * k.powf(q as f64 / 2.0);
            Some(ap.powi(n) * h + am.powi(n) * if q % 2 == 0 { h } else { -h })
        }
        2 => {
            let (v1, v2) = (&grouped.per_var[0], &grouped.per_var[1]);
            if v1.power != 0 || v2.power != 0 {
                return None;
            }
            let k11 = grouped.cov[0];
            let k12 = grouped.cov[1];
            let k22 = grouped.cov[3];
            let rho = (k12 / (k11 * k22).sqrt()).clamp(-1.0, 1.0);
            match (v1.orders.as_slice(), v2.orders.as_slice()) {
                ([0], [0]) => {
                    let gamma = rho.acos();
                    Some(
                        ap * am * k12
                            + c * c * (k11 * k22).sqrt() / (2.0 * PI)
                                * (gamma.sin() + (PI - gamma) * gamma.cos()),
                    )
                }
                ([1], [1]) => Some(ap * am + c * c * (0.25 + rho.asin() / (2.0 * PI))),
                ([0], [1]) => Some(sigma_sigmaprime(ap, am, k11, k22, k12)),
                ([1], [0]) => Some(sigma_sigmaprime(ap, am, k22, k11, k12)),
                ([1, 1], [1, 1]) => {
                    let e = ap * ap - am * am;
                    Some(ap * ap * am * am + e * e * (0.25 + rho.asin() / (2.0 * PI)))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

/// `E[sigma(z1) sigma'(z2)]` with `z1 ~ N(0, k11)`, `z2 ~ N(0, k22)`,
/// covariance `k12`; decompose `sigma(z) = a- z + c max(z, 0)` and
/// `sigma'(z) = a- + c 1{z>0}`.
fn sigma_sigmaprime(ap: f64, am: f64, k11: f64, k22: f64, k12: f64) -> f64 {
    let c = ap - am;
    let rho = (k12 / (k11 * k22).sqrt()).clamp(-1.0, 1.0);
    am * c * k12 / (2.0 * PI * k22).sqrt()
        + am * c * (k11 / (2.0 * PI)).sqrt()
        + c * c * k11.sqrt() * (1.0 + rho) * 0.5 * INV_SQRT_2PI
}
