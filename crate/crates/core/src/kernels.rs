//! Layer-wise recursion for the infinite-width NNGP kernel `K` and frozen
//! NTK `Theta` on a fixed input set, the four susceptibilities, and the
//! critical initialization variance.
//!
//! Parametrization: NTK parametrization with bias-free layers,
//! `z^(l+1)_i = sqrt(C_W^(l+1)/n_l) sum_j w_ij sigma(z^(l)_j)` with
//! `w ~ N(0,1)`, the first layer acting on `x / sqrt(n0)`. The recursion is
//!
//! `K^(l+1)_ab = C_W <sigma_a sigma_b>_K`,
//! `Theta^(l+1)_ab = K^(l+1)_ab + C_W <sigma'_a sigma'_b>_K Theta^(l)_ab`.

use crate::activation::ActivationModel;
use crate::error::{Error, Result};
use crate::input::InputSet;
use crate::linalg::idx;
use crate::moments::{Covariance, MomentEngine, MomentQuery};

/// Per-layer Gram matrices of the NNGP kernel and the frozen NTK.
#[derive(Debug, Clone)]
pub struct KernelState {
    pub layer: usize,
    pub k: Covariance,
    pub theta: Vec<f64>,
}

impl KernelState {
    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn k_entry(&self, a: usize, b: usize) -> f64 {
        self.k.entry(a, b)
    }

    pub fn theta_entry(&self, a: usize, b: usize) -> f64 {
        self.theta[idx(self.k.dim(), a, b)]
    }
}

/// First-layer kernels under NTK parametrization:
/// `K^(1)_ab = Theta^(1)_ab = C_W1 (x_a . x_b) / n0`.
pub fn init_kernels(inputs: &InputSet, cw1: f64, n0: usize) -> Result<KernelState> {
    if n0 != inputs.dim() {
        return Err(Error::DimensionMismatch(format!(
            "n0 = {n0} but inputs have dimension {}",
            inputs.dim()
        )));
    }
    if !(cw1 > 0.0) {
        return Err(Error::InvalidInput(format!("C_W must be positive, got {cw1}")));
    }
    let m = inputs.len();
    let mut k = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            k[idx(m, a, b)] = cw1 * inputs.dot(a, b) / n0 as f64;
        }
    }
    Ok(KernelState {
        layer: 1,
        k: Covariance::new(m, k.clone())?,
        theta: k,
    })
}

/// One layer of the kernel recursion.
pub fn step_kernels(state: &KernelState, model: &ActivationModel, cw: f64) -> Result<KernelState> {
    let engine = MomentEngine::new(*model);
    let m = state.dim();
    let mut k_new = vec![0.0; m * m];
    let mut theta_new = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let ss = engine.expect_product(&MomentQuery::product(&[(a, 0), (b, 0)]), &state.k)?;
            let dd = engine.expect_product(&MomentQuery::product(&[(a, 1), (b, 1)]), &state.k)?;
            let k_ab = cw * ss;
            let t_ab = k_ab + cw * dd * state.theta[idx(m, a, b)];
            k_new[idx(m, a, b)] = k_ab;
            k_new[idx(m, b, a)] = k_ab;
            theta_new[idx(m, a, b)] = t_ab;
            theta_new[idx(m, b, a)] = t_ab;
        }
    }
    Ok(KernelState {
        layer: state.layer + 1,
        k: Covariance::new(m, k_new)?,
        theta: theta_new,
    })
}

/// The four layer-to-layer growth factors of the stability analysis,
/// evaluated on the current kernel.
#[derive(Debug, Clone)]
pub struct Susceptibilities {
    /// `chi_perp_ab = C_W <sigma'_a sigma'_b>`, m x m.
    pub chi_perp: Vec<f64>,
    /// `chi_bowtie_ab = C_W <sigma''_a sigma_b>`, m x m.
    pub chi_bowtie: Vec<f64>,
    /// `chi_par_{ab,cd} = (C_W/2) <d^2(sigma_a sigma_b)/dz_c dz_d>`, m^4,
    /// indexed `((a m + b) m + c) m + d`.
    pub chi_parallel: Vec<f64>,
    /// `chi_circ_{el,g} = C_W <d(sigma_e sigma'_l)/dz_g>`, m^3, indexed
    /// `(e m + l) m + g`.
    pub chi_circ: Vec<f64>,
    pub m: usize,
}

pub fn susceptibilities(
    state: &KernelState,
    model: &ActivationModel,
    cw: f64,
) -> Result<Susceptibilities> {
    let engine = MomentEngine::new(*model);
    let m = state.dim();
    let mut chi_perp = vec![0.0; m * m];
    let mut chi_bowtie = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            chi_perp[idx(m, a, b)] =
                cw * engine.expect_product(&MomentQuery::product(&[(a, 1), (b, 1)]), &state.k)?;
            chi_bowtie[idx(m, a, b)] =
                cw * engine.expect_product(&MomentQuery::product(&[(a, 2), (b, 0)]), &state.k)?;
        }
    }
    let mut chi_parallel = vec![0.0; m * m * m * m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let q = MomentQuery::with_partials(&[(a, 0), (b, 0)], &[c, d]);
                    chi_parallel[((a * m + b) * m + c) * m + d] =
                        0.5 * cw * engine.expect_product(&q, &state.k)?;
                }
            }
        }
    }
    let mut chi_circ = vec![0.0; m * m * m];
    for e in 0..m {
        for l in 0..m {
            for g in 0..m {
                let q = MomentQuery::with_partials(&[(e, 0), (l, 1)], &[g]);
                chi_circ[(e * m + l) * m + g] =
                    cw * engine.expect_partial_product(&q, &state.k)?;
            }
        }
    }
    Ok(Susceptibilities { chi_perp, chi_bowtie, chi_parallel, chi_circ, m })
}

/// Critical initialization variance: the `C_W` for which preactivations and
/// NTK neither grow nor decay exponentially in depth.
///
/// For scale-invariant activations `<sigma' sigma'>` is kernel-independent
/// and `C_W^c = 1 / <sigma' sigma'> = 2 / (a+^2 + a-^2)`. For smooth ones the
/// two single-input criticality conditions `chi_perp(K*) = 1` and
/// `chi_bowtie(K*) = 0` are solved jointly: bisect `<sigma'' sigma>_K = 0`
/// for the fixed-point kernel `K*`, then `C_W^c = 1 / <sigma' sigma'>_{K*}`.
/// Saturating activations without an interior root take the `K* -> 0`
/// limit, `1 / sigma'(0)^2`.
pub fn critical_cw(model: &ActivationModel) -> Result<f64> {
    if model.scale_invariant {
        return Ok(2.0 / (model.a_plus * model.a_plus + model.a_minus * model.a_minus));
    }
    let engine = MomentEngine::new(*model);
    let bowtie = |k: f64| -> Result<f64> {
        engine.expect_product(
            &MomentQuery::product(&[(0, 2), (0, 0)]),
            &Covariance::scalar(k)?,
        )
    };
    let perp = |k: f64| -> Result<f64> {
        engine.expect_product(
            &MomentQuery::product(&[(0, 1), (0, 1)]),
            &Covariance::scalar(k)?,
        )
    };
    // scan for a sign change of <sigma'' sigma>_K on a log grid; entries at
    // quadrature-noise level (saturating tails) do not carry sign information
    let grid: Vec<f64> = (-30..=30).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let samples: Vec<(f64, f64)> = grid
        .iter()
        .map(|&k| bowtie(k).map(|g| (k, g)))
        .collect::<Result<_>>()?;
    let gmax = samples.iter().map(|&(_, g)| g.abs()).fold(0.0, f64::max);
    let mut bracket = None;
    let mut prev: Option<(f64, f64)> = None;
    for &(k, g) in &samples {
        if g.abs() <= 1e-10 * gmax {
            continue;
        }
        if let Some((k0, g0)) = prev {
            if g.signum() != g0.signum() {
                bracket = Some((k0, k));
                break;
            }
        }
        prev = Some((k, g));
    }
    let kstar = match bracket {
        Some((mut lo, mut hi)) => {
            let glo = bowtie(lo)?;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = bowtie(mid)?;
                if gm.signum() == glo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo) / hi < 1e-12 {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
        // no interior root: the fixed point degenerates to K* -> 0
        None => 0.0,
    };
    let cw = if kstar == 0.0 {
        let s1 = model.eval(1, 0.0)?;
        1.0 / (s1 * s1)
    } else {
        1.0 / perp(kstar)?
    };
    if !(0.1..=10.0).contains(&cw) {
        return Err(Error::numerical(
            "critical_cw",
            format!("no critical variance in [0.1, 10], got {cw}"),
        ));
    }
    Ok(cw)
}
