//! Activation functions with exact pointwise derivatives up to third order
//! and scale-invariance metadata.
//!
//! Scale-invariant activations satisfy `sigma(l*z) = l*sigma(z)` for `l > 0`,
//! i.e. they are piecewise linear through the origin with slopes `a_plus` on
//! `z >= 0` and `a_minus` on `z < 0`. Their second derivative is a Dirac delta
//! at the kink, so pointwise evaluation is capped at first order and the
//! Gaussian-moment engine handles the distributional cases analytically.

use crate::error::{Error, Result};

pub(crate) const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub(crate) fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF via `erfc`.
#[inline]
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Complementary error function to ~1e-15 relative accuracy: Maclaurin
/// series of `erf` for small arguments, Lentz-evaluated continued fraction of
/// `erfc` for large ones.
pub(crate) fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 2.0 {
        1.0 - erf_series(ax)
    } else {
        erfc_cf(ax)
    };
    if x < 0.0 {
        2.0 - v
    } else {
        v
    }
}

/// `erf(x) = (2/sqrt(pi)) sum_n (-1)^n x^(2n+1) / (n! (2n+1))`, for |x| <= 1.5.
fn erf_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0f64;
    for _ in 0..200 {
        n += 1.0;
        term *= -x2 / n;
        let contrib = term / (2.0 * n + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

/// Laplace continued fraction for x >= 2:
/// `erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated by modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    if x > 27.0 {
        return 0.0;
    }
    let mut f = x; // b0
    let mut c = f;
    let mut d = 0.0f64;
    let mut n = 1.0f64;
    for _ in 0..300 {
        let a = n / 2.0;
        d = x + a * d;
        if d.abs() < 1e-300 {
            d = 1e-300;
        }
        c = x + a / c;
        if c.abs() < 1e-300 {
            c = 1e-300;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
        n += 1.0;
    }
    (-x * x).exp() / std::f64::consts::PI.sqrt() / f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationKind {
    Relu,
    LeakyRelu { alpha: f64 },
    Identity,
    Gelu,
    Erf,
    Tanh,
}

impl ActivationKind {
    pub fn name(&self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu { .. } => "leaky_relu",
            ActivationKind::Identity => "identity",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Erf => "erf",
            ActivationKind::Tanh => "tanh",
        }
    }
}

/// An activation function together with the metadata the moment engine and
/// the recursions need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationModel {
    pub kind: ActivationKind,
    pub scale_invariant: bool,
    /// Slope on `z >= 0`; meaningful only when `scale_invariant`.
    pub a_plus: f64,
    /// Slope on `z < 0`; meaningful only when `scale_invariant`.
    pub a_minus: f64,
    /// Highest derivative order valid pointwise: 1 for kinked scale-invariant
    /// functions, 3 for smooth ones.
    pub max_smooth_derivative_order: u8,
}

impl ActivationModel {
    /// Build a model from a kind. Fails when leaky-ReLU's `alpha` is outside
    /// `(0, 1)`.
    pub fn new(kind: ActivationKind) -> Result<Self> {
        let model = match kind {
            ActivationKind::Relu => ActivationModel {
                kind,
                scale_invariant: true,
                a_plus: 1.0,
                a_minus: 0.0,
                max_smooth_derivative_order: 1,
            },
            ActivationKind::LeakyRelu { alpha } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidActivation(format!(
                        "leaky_relu alpha must lie in (0, 1), got {alpha}"
                    )));
                }
                ActivationModel {
                    kind,
                    scale_invariant: true,
                    a_plus: 1.0,
                    a_minus: alpha,
                    max_smooth_derivative_order: 1,
                }
            }
            ActivationKind::Identity => ActivationModel {
                kind,
                scale_invariant: true,
                a_plus: 1.0,
                a_minus: 1.0,
                max_smooth_derivative_order: 3,
            },
            ActivationKind::Gelu | ActivationKind::Erf | ActivationKind::Tanh => ActivationModel {
                kind,
                scale_invariant: false,
                a_plus: f64::NAN,
                a_minus: f64::NAN,
                max_smooth_derivative_order: 3,
            },
        };
        Ok(model)
    }

    /// Parse explicit name/parameter pairs, the form the CLI receives.
    /// `alpha` must be supplied iff the kind is `leaky_relu`.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        let kind = match (name, alpha) {
            ("relu", None) => ActivationKind::Relu,
            ("leaky_relu", Some(alpha)) => ActivationKind::LeakyRelu { alpha },
            ("leaky_relu", None) => {
                return Err(Error::InvalidActivation("leaky_relu requires alpha".into()))
            }
            ("identity", None) => ActivationKind::Identity,
            ("gelu", None) => ActivationKind::Gelu,
            ("erf", None) => ActivationKind::Erf,
            ("tanh", None) => ActivationKind::Tanh,
            (other, Some(_)) if other != "leaky_relu" => {
                return Err(Error::InvalidActivation(format!(
                    "{other} does not take a parameter"
                )))
            }
            (other, _) => {
                return Err(Error::InvalidActivation(format!("unknown kind {other}")))
            }
        };
        ActivationModel::new(kind)
    }

    /// True for scale-invariant activations with an actual kink at zero.
    pub fn is_kinked(&self) -> bool {
        self.scale_invariant && self.a_plus != self.a_minus
    }

    /// Value of the `order`-th derivative of sigma at `z`.
    ///
    /// At `z = 0` kinked functions use the right-limit convention for orders
    /// 0-1 (the choice never affects Gaussian expectations). Orders beyond
    /// `max_smooth_derivative_order` are rejected: the caller must use a
    /// distributional identity instead.
    pub fn eval(&self, order: u8, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite preactivation {z}")));
        }
        if order > self.max_smooth_derivative_order {
            return Err(Error::UnsupportedDerivative {
                kind: self.kind.name(),
                order,
                max: self.max_smooth_derivative_order,
            });
        }
        Ok(self.eval_unchecked(order, z))
    }

    /// `eval` without the order/finiteness checks, for quadrature hot loops.
    /// Caller guarantees `order <= max_smooth_derivative_order`.
    #[inline]
    pub(crate) fn eval_unchecked(&self, order: u8, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Relu | ActivationKind::LeakyRelu { .. } => {
                let a = if z >= 0.0 { self.a_plus } else { self.a_minus };
                match order {
                    0 => a * z,
                    _ => a,
                }
            }
            ActivationKind::Identity => match order {
                0 => z,
                1 => 1.0,
                _ => 0.0,
            },
            ActivationKind::Gelu => {
                // Exact-erf form sigma(z) = z * Phi(z).
                let phi = norm_pdf(z);
                match order {
                    0 => z * norm_cdf(z),
                    1 => norm_cdf(z) + z * phi,
                    2 => (2.0 - z * z) * phi,
                    _ => (z * z - 4.0) * z * phi,
                }
            }
            ActivationKind::Erf => {
                // sigma(z) = erf(z / sqrt(2)) = 2 Phi(z) - 1.
                let phi = norm_pdf(z);
                match order {
                    0 => 2.0 * norm_cdf(z) - 1.0,
                    1 => 2.0 * phi,
                    2 => -2.0 * z * phi,
                    _ => 2.0 * (z * z - 1.0) * phi,
                }
            }
            ActivationKind::Tanh => {
                let t = z.tanh();
                let s = 1.0 - t * t;
                match order {
                    0 => t,
                    1 => s,
                    2 => -2.0 * t * s,
                    _ => s * (6.0 * t * t - 2.0),
                }
            }
        }
    }
}
