//! Mean-zero multivariate Gaussian expectations of products of activation
//! derivatives, the `<.>_K` primitive behind every kernel and tensor
//! recursion.
//!
//! A query is a product `prod_k sigma^(d_k)(z_{a_k})`, optionally multiplied
//! by explicit `z` factors, with outer partial derivatives `d/dz_g` applied
//! to the whole product before the expectation is taken.
//!
//! Evaluation strategy:
//!
//! - Outer partials are removed first by Gaussian integration by parts
//!   (`E[d h/d z_g] = sum_a (K^-1)_{ga} E[z_a h]`), which never raises the
//!   pointwise derivative order of a factor and stays exact for kinked
//!   activations in the distributional sense.
//! - `z` factors outside the span of the factor variables are projected onto
//!   it; the Gaussian residuals integrate out by Wick pairings.
//! - Scale-invariant activations then reduce, variable by variable, to
//!   branch monomials `z^q (c+ 1{z>0} + c- 1{z<0})`, evaluated exactly by the
//!   orthant calculus in [`orthant`]. A second derivative at a kink is a
//!   Dirac delta and collapses onto a conditioned lower-dimensional moment.
//! - Smooth activations use tensorized Gauss-Hermite quadrature on whitened
//!   variables (200/120/32 nodes per dimension for 1/2/>=3 dimensional
//!   moments).

pub mod closed_form;
pub mod orthant;
pub mod reference;
pub mod rules;
pub mod smooth;

use crate::activation::{ActivationModel, INV_SQRT_2PI};
use crate::error::{Error, Result};
use crate::linalg::{idx, min_eigenvalue, spd_inverse};
use std::sync::OnceLock;

/// Symmetric positive semi-definite covariance over `m` variables.
#[derive(Debug)]
pub struct Covariance {
    m: usize,
    k: Vec<f64>,
    inverse: OnceLock<Vec<f64>>,
}

impl Clone for Covariance {
    fn clone(&self) -> Self {
        Covariance { m: self.m, k: self.k.clone(), inverse: OnceLock::new() }
    }
}

impl Covariance {
    /// Validate symmetry (to 1e-12 relative to the largest entry) and
    /// positive semi-definiteness (smallest eigenvalue >= -1e-10 * trace),
    /// then store the symmetrized matrix.
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != m * m || m == 0 {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be {m}x{m}, got {} entries",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPsd("non-finite entry".into()));
        }
        let scale = entries.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let mut k = entries.clone();
        for i in 0..m {
            for j in (i + 1)..m {
                let a = entries[idx(m, i, j)];
                let b = entries[idx(m, j, i)];
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::NotPsd(format!(
                        "asymmetry {:.3e} at ({i},{j})",
                        (a - b).abs()
                    )));
                }
                let avg = 0.5 * (a + b);
                k[idx(m, i, j)] = avg;
                k[idx(m, j, i)] = avg;
            }
        }
        let trace: f64 = (0..m).map(|i| k[idx(m, i, i)]).sum();
        let min_eig = min_eigenvalue(m, &k);
        if min_eig < -1e-10 * trace.abs() {
            return Err(Error::NotPsd(format!(
                "smallest eigenvalue {min_eig:.3e} below tolerance"
            )));
        }
        Ok(Covariance { m, k, inverse: OnceLock::new() })
    }

    /// Convenience constructor for a 1x1 covariance.
    pub fn scalar(k: f64) -> Result<Self> {
        Covariance::new(1, vec![k])
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.k[idx(self.m, i, j)]
    }

    pub fn entries(&self) -> &[f64] {
        &self.k
    }

    fn inverse(&self) -> Result<&[f64]> {
        if self.inverse.get().is_none() {
            let inv = spd_inverse(self.m, &self.k)?;
            let _ = self.inverse.set(inv);
        }
        Ok(self.inverse.get().unwrap().as_slice())
    }
}

/// `K^{ab}` with `sum_b K^{ab} K_{bc} = delta_{ac}`; fails as singular for
/// duplicated inputs.
pub fn gram_inverse(cov: &Covariance) -> Result<Vec<f64>> {
    cov.inverse().map(|v| v.to_vec())
}

/// The product `prod_k sigma^(d_k)(z_{f_k}) * prod_j z_{m_j}` with outer
/// partials `prod_i d/dz_{p_i}` applied before the expectation.
#[derive(Debug, Clone, Default)]
pub struct MomentQuery {
    /// (variable index, derivative order 0..3) per sigma factor.
    pub factors: Vec<(usize, u8)>,
    /// Explicit z factors (variable indices, with multiplicity).
    pub monomials: Vec<usize>,
    /// Outer partial derivatives (variable indices, with multiplicity).
    pub partials: Vec<usize>,
}

impl MomentQuery {
    pub fn product(factors: &[(usize, u8)]) -> Self {
        MomentQuery { factors: factors.to_vec(), ..Default::default() }
    }

    pub fn with_partials(factors: &[(usize, u8)], partials: &[usize]) -> Self {
        MomentQuery {
            factors: factors.to_vec(),
            partials: partials.to_vec(),
            ..Default::default()
        }
    }

    pub fn with_monomials(factors: &[(usize, u8)], monomials: &[usize]) -> Self {
        MomentQuery {
            factors: factors.to_vec(),
            monomials: monomials.to_vec(),
            ..Default::default()
        }
    }
}

/// All sigma factors and z powers collected per distinct variable, with the
/// covariance restricted to those variables.
#[derive(Debug, Clone)]
pub struct Grouped {
    pub per_var: Vec<VarFactors>,
    pub cov: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct VarFactors {
    pub orders: Vec<u8>,
    pub power: usize,
}

impl Grouped {
    pub fn dim(&self) -> usize {
        self.per_var.len()
    }
}

/// Node counts for the smooth quadrature backend, by moment dimension.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureNodes {
    pub dim1: usize,
    pub dim2: usize,
    pub dim34: usize,
}

impl Default for QuadratureNodes {
    fn default() -> Self {
        // Sized so that doubling any of them moves smooth-activation
        // expectations by < 1e-9 (1-D/2-D) over the kernel ranges the
        // recursions visit. Activations carrying their own Gaussian-like
        // decay (GeLU, erf) need ~120 points at K ~ 5; tanh is analytic only
        // in a strip and converges more slowly at large K.
        QuadratureNodes { dim1: 200, dim2: 120, dim34: 32 }
    }
}

/// Evaluator for Gaussian expectations under a fixed activation model.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    model: ActivationModel,
    nodes: QuadratureNodes,
}

impl MomentEngine {
    pub fn new(model: ActivationModel) -> Self {
        MomentEngine { model, nodes: QuadratureNodes::default() }
    }

    pub fn with_nodes(model: ActivationModel, nodes: QuadratureNodes) -> Self {
        MomentEngine { model, nodes }
    }

    pub fn model(&self) -> &ActivationModel {
        &self.model
    }

    /// `E[prod sigma^(d)(z) * prod z]` under `N(0, cov)`, with outer partials
    /// applied first via integration by parts.
    pub fn expect_product(&self, query: &MomentQuery, cov: &Covariance) -> Result<f64> {
        self.evaluate(query, cov, Backend::Production, 0)
    }

    /// Alias making call sites that exercise the integration-by-parts route
    /// read like the formulas they implement.
    pub fn expect_partial_product(&self, query: &MomentQuery, cov: &Covariance) -> Result<f64> {
        self.expect_product(query, cov)
    }

    /// Registered analytic values for scale-invariant activations. Absence
    /// is a value: `None` means "not covered", not an error.
    pub fn scale_invariant_closed_form(&self, query: &MomentQuery, cov: &Covariance) -> Option<f64> {
        if !self.model.scale_invariant || !query.partials.is_empty() {
            return None;
        }
        let terms = expand_to_grouped(&query.factors, &query.monomials, cov).ok()?;
        if terms.len() != 1 || terms[0].0 != 1.0 {
            return None;
        }
        closed_form::lookup(&self.model, &terms[0].1)
    }

    /// Pure quadrature evaluation (no analytic shortcuts), for convergence
    /// and agreement checks. `nodes` is the per-dimension (and per-panel
    /// side, for kinked activations) node count.
    pub fn quadrature_reference(&self, query: &MomentQuery, cov: &Covariance, nodes: usize) -> Result<f64> {
        if self.model.is_kinked() && query.factors.iter().any(|&(_, d)| d >= 2) {
            return Err(Error::UnsupportedDerivative {
                kind: self.model.kind.name(),
                order: 2,
                max: 1,
            });
        }
        self.evaluate(query, cov, Backend::Reference, nodes)
    }

    fn evaluate(&self, query: &MomentQuery, cov: &Covariance, backend: Backend, nodes: usize) -> Result<f64> {
        self.validate(query, cov)?;
        if query.partials.is_empty() {
            return self.eval_terms(&query.factors, &query.monomials, cov, backend, nodes);
        }
        let kinv = cov.inverse()?;
        let mut terms = Vec::new();
        reduce_partials(
            &query.partials,
            &mut query.monomials.clone(),
            1.0,
            cov.dim(),
            kinv,
            &mut terms,
        );
        let mut acc = 0.0;
        for (coef, monomial) in terms {
            acc += coef * self.eval_terms(&query.factors, &monomial, cov, backend, nodes)?;
        }
        Ok(acc)
    }

    fn eval_terms(
        &self,
        factors: &[(usize, u8)],
        monomials: &[usize],
        cov: &Covariance,
        backend: Backend,
        nodes: usize,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for (coef, grouped) in expand_to_grouped(factors, monomials, cov)? {
            if coef == 0.0 {
                continue;
            }
            acc += coef * self.eval_grouped(&grouped, backend, nodes)?;
        }
        Ok(acc)
    }

    fn eval_grouped(&self, grouped: &Grouped, backend: Backend, nodes: usize) -> Result<f64> {
        match backend {
            Backend::Reference => reference::reference_moment(&self.model, grouped, nodes),
            Backend::Production => {
                if self.model.scale_invariant {
                    if let Some(v) = closed_form::lookup(&self.model, grouped) {
                        return Ok(v);
                    }
                    return self.branch_path(grouped);
                }
                let n = match grouped.dim() {
                    1 => self.nodes.dim1,
                    2 => self.nodes.dim2,
                    _ => self.nodes.dim34,
                };
                smooth::gauss_hermite_moment(&self.model, grouped, n)
            }
        }
    }

    fn validate(&self, query: &MomentQuery, cov: &Covariance) -> Result<()> {
        if query.factors.is_empty() {
            return Err(Error::InvalidInput("moment query needs at least one factor".into()));
        }
        let m = cov.dim();
        for &(v, d) in &query.factors {
            if v >= m {
                return Err(Error::DimensionMismatch(format!(
                    "factor variable {v} outside covariance of dimension {m}"
                )));
            }
            if d > 3 {
                return Err(Error::UnsupportedDerivative {
                    kind: self.model.kind.name(),
                    order: d,
                    max: 3,
                });
            }
            if !self.model.scale_invariant && d > self.model.max_smooth_derivative_order {
                return Err(Error::UnsupportedDerivative {
                    kind: self.model.kind.name(),
                    order: d,
                    max: self.model.max_smooth_derivative_order,
                });
            }
        }
        for &v in query.monomials.iter().chain(&query.partials) {
            if v >= m {
                return Err(Error::DimensionMismatch(format!(
                    "variable {v} outside covariance of dimension {m}"
                )));
            }
        }
        Ok(())
    }

    /// Exact path for scale-invariant activations, including the
    /// distributional second derivative at a kink.
    fn branch_path(&self, grouped: &Grouped) -> Result<f64> {
        let d = grouped.dim();
        // A sigma'' factor is (a+ - a-) * delta(z): condition that variable
        // to zero. A sigma factor or explicit z power at the same variable
        // makes the whole term vanish since sigma(0) = 0; any other
        // derivative there is not a distribution we represent.
        if let Some(s) = grouped
            .per_var
            .iter()
            .position(|v| v.orders.iter().any(|&o| o >= 2))
        {
            let var = &grouped.per_var[s];
            if var.orders.iter().any(|&o| o >= 3)
                || var.orders.iter().filter(|&&o| o >= 2).count() > 1
            {
                return Err(Error::UnsupportedDerivative {
                    kind: self.model.kind.name(),
                    order: 3,
                    max: 1,
                });
            }
            let jump = self.model.a_plus - self.model.a_minus;
            if jump == 0.0 {
                // identity-like: sigma'' vanishes identically
                return Ok(0.0);
            }
            if var.power > 0 || var.orders.iter().any(|&o| o == 0) {
                return Ok(0.0);
            }
            if var.orders.iter().any(|&o| o == 1) {
                // delta times a jump discontinuity at the same point
                return Err(Error::UnsupportedDerivative {
                    kind: self.model.kind.name(),
                    order: 2,
                    max: 1,
                });
            }
            let kss = grouped.cov[s * d + s];
            let density = INV_SQRT_2PI / kss.sqrt();
            if d == 1 {
                return Ok(jump * density);
            }
            // condition variable s to zero (the conditional mean stays zero)
            let keep: Vec<usize> = (0..d).filter(|&i| i != s).collect();
            let mut cov = vec![0.0; (d - 1) * (d - 1)];
            for (a, &i) in keep.iter().enumerate() {
                for (b, &j) in keep.iter().enumerate() {
                    cov[a * (d - 1) + b] =
                        grouped.cov[i * d + j] - grouped.cov[i * d + s] * grouped.cov[s * d + j] / kss;
                }
            }
            let per_var = keep.iter().map(|&i| grouped.per_var[i].clone()).collect();
            let sub = Grouped { per_var, cov };
            return Ok(jump * density * self.branch_path(&sub)?);
        }
        if d > 4 {
            return Err(Error::InvalidInput(format!(
                "moments over more than 4 distinct variables are unsupported (got {d})"
            )));
        }
        let factors: Vec<orthant::BranchFactor> = grouped
            .per_var
            .iter()
            .map(|v| {
                let zeros = v.orders.iter().filter(|&&o| o == 0).count();
                let n = v.orders.len() as i32;
                orthant::BranchFactor {
                    q: v.power + zeros,
                    c_plus: self.model.a_plus.powi(n),
                    c_minus: self.model.a_minus.powi(n),
                }
            })
            .collect();
        Ok(orthant::branch_moment(d, &grouped.cov, &factors))
    }
}

#[derive(Clone, Copy)]
enum Backend {
    Production,
    Reference,
}

/// Integration by parts on the outermost partial. With `W = d_P'(h)`,
/// `E[d_g W] = sum_a (K^-1)_{ga} E[z_a W]`, and commuting `z_a` back inside
/// the remaining partials costs one commutator per matching partial:
/// `z_a d_P'(X) = d_P'(z_a X) - sum_{g' in P', g' = a} d_{P' \ g'}(X)`.
fn reduce_partials(
    partials: &[usize],
    monomial: &mut Vec<usize>,
    coef: f64,
    m: usize,
    kinv: &[f64],
    out: &mut Vec<(f64, Vec<usize>)>,
) {
    if partials.is_empty() {
        out.push((coef, monomial.clone()));
        return;
    }
    let g = partials[partials.len() - 1];
    let rest = &partials[..partials.len() - 1];
    for a in 0..m {
        let w = kinv[idx(m, g, a)];
        if w == 0.0 {
            continue;
        }
        monomial.push(a);
        reduce_partials(rest, monomial, coef * w, m, kinv, out);
        monomial.pop();
        let count = rest.iter().filter(|&&p| p == a).count();
        if count > 0 {
            let mut shorter: Vec<usize> = rest.to_vec();
            let pos = shorter.iter().position(|&p| p == a).unwrap();
            shorter.remove(pos);
            reduce_partials(&shorter, monomial, -coef * w * count as f64, m, kinv, out);
        }
    }
}

/// Deduplicate factor variables, restrict the covariance to them, and fold
/// explicit `z` factors in. A `z_a` with `a` outside the factor span is
/// written as its regression onto the span plus an independent Gaussian
/// residual; expanding the product turns one query into a weighted sum of
/// in-span grouped terms, with residuals paired off by Isserlis' theorem.
fn expand_to_grouped(
    factors: &[(usize, u8)],
    monomials: &[usize],
    cov: &Covariance,
) -> Result<Vec<(f64, Grouped)>> {
    let mut vars: Vec<usize> = factors.iter().map(|&(v, _)| v).collect();
    vars.sort_unstable();
    vars.dedup();
    let d = vars.len();
    let m = cov.dim();

    let mut base = vec![VarFactors::default(); d];
    for &(v, o) in factors {
        let s = vars.iter().position(|&x| x == v).unwrap();
        base[s].orders.push(o);
    }
    let mut kk = vec![0.0; d * d];
    for (a, &i) in vars.iter().enumerate() {
        for (b, &j) in vars.iter().enumerate() {
            kk[a * d + b] = cov.entry(i, j);
        }
    }

    let mut inside: Vec<usize> = Vec::new();
    let mut outside: Vec<usize> = Vec::new();
    for &v in monomials {
        match vars.iter().position(|&x| x == v) {
            Some(s) => inside.push(s),
            None => outside.push(v),
        }
    }
    for &s in &inside {
        base[s].power += 1;
    }
    if outside.is_empty() {
        return Ok(vec![(1.0, Grouped { per_var: base, cov: kk })]);
    }

    // regression coefficients beta[i][s] and residual covariance of the
    // out-of-span z's
    let kss_inv = spd_inverse(d, &kk)?;
    let n_out = outside.len();
    let mut beta = vec![vec![0.0; d]; n_out];
    for (i, &a) in outside.iter().enumerate() {
        for s in 0..d {
            let mut acc = 0.0;
            for t in 0..d {
                acc += cov.entry(a, vars[t]) * kss_inv[idx(d, t, s)];
            }
            beta[i][s] = acc;
        }
        let _ = m;
    }
    let mut resid = vec![0.0; n_out * n_out];
    for (i, &a) in outside.iter().enumerate() {
        for (j, &b) in outside.iter().enumerate() {
            let mut proj = 0.0;
            for s in 0..d {
                proj += beta[i][s] * cov.entry(vars[s], b);
            }
            resid[i * n_out + j] = cov.entry(a, b) - proj;
        }
    }

    // enumerate assignments: each out-of-span z picks a span variable or its
    // residual
    let mut out = Vec::new();
    let mut powers = vec![0usize; d];
    let mut eps: Vec<usize> = Vec::new();
    fn assign(
        i: usize,
        n_out: usize,
        d: usize,
        beta: &[Vec<f64>],
        resid: &[f64],
        coef: f64,
        powers: &mut Vec<usize>,
        eps: &mut Vec<usize>,
        base: &[VarFactors],
        kk: &[f64],
        out: &mut Vec<(f64, Grouped)>,
    ) {
        if i == n_out {
            let w = isserlis(eps, resid, n_out);
            if w == 0.0 {
                return;
            }
            let mut per_var = base.to_vec();
            for s in 0..d {
                per_var[s].power += powers[s];
            }
            out.push((coef * w, Grouped { per_var, cov: kk.to_vec() }));
            return;
        }
        for s in 0..d {
            if beta[i][s] != 0.0 {
                powers[s] += 1;
                assign(i + 1, n_out, d, beta, resid, coef * beta[i][s], powers, eps, base, kk, out);
                powers[s] -= 1;
            }
        }
        eps.push(i);
        assign(i + 1, n_out, d, beta, resid, coef, powers, eps, base, kk, out);
        eps.pop();
    }
    assign(
        0, n_out, d, &beta, &resid, 1.0, &mut powers, &mut eps, &base, &kk, &mut out,
    );
    Ok(out)
}

/// `E[prod eps_i]` for jointly Gaussian mean-zero residuals: sum over pair
/// partitions of products of covariances.
fn isserlis(indices: &[usize], cov: &[f64], n: usize) -> f64 {
    if indices.is_empty() {
        return 1.0;
    }
    if indices.len() % 2 == 1 {
        return 0.0;
    }
    let first = indices[0];
    let rest = &indices[1..];
    let mut acc = 0.0;
    for (pos, &other) in rest.iter().enumerate() {
        let mut remaining: Vec<usize> = rest.to_vec();
        remaining.remove(pos);
        acc += cov[first * n + other] * isserlis(&remaining, cov, n);
    }
    acc
}

#[cfg(test)]
mod tests;
