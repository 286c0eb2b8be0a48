//! Tensorized Gauss-Hermite quadrature on whitened variables, the moment
//! backend for smooth activations.

use crate::activation::ActivationModel;
use crate::error::Result;
use crate::linalg::cholesky;
use crate::moments::rules::gauss_hermite;
use crate::moments::Grouped;

/// Evaluate the grouped product by tensor quadrature with `nodes` points per
/// dimension. Pointwise derivative orders must already be validated.
pub fn gauss_hermite_moment(model: &ActivationModel, grouped: &Grouped, nodes: usize) -> Result<f64> {
    let d = grouped.dim();
    let l = cholesky(d, &grouped.cov)?;
    let (x, w) = gauss_hermite(nodes);
    let mut index = vec![0usize; d];
    let mut z = vec![0.0; d];
    let mut acc = 0.0;
    loop {
        let mut weight = 1.0;
        for s in 0..d {
            weight *= w[index[s]];
        }
        for s in 0..d {
            let mut v = 0.0;
            for j in 0..=s {
                v += l[s * d + j] * x[index[j]];
            }
            z[s] = v;
        }
        let mut val = 1.0;
        for (s, var) in grouped.per_var.iter().enumerate() {
            for &order in &var.orders {
                val *= model.eval_unchecked(order, z[s]);
            }
            if var.power > 0 {
                val *= z[s].powi(var.power as i32);
            }
        }
        acc += weight * val;

        // odometer
        let mut s = 0;
        loop {
            if s == d {
                return Ok(acc);
            }
            index[s] += 1;
            if index[s] < x.len() {
                break;
            }
            index[s] = 0;
            s += 1;
        }
    }
}
