//! Fixed sets of network inputs on which Gram kernels and tensors are
//! evaluated.

use crate::error::{Error, Result};

/// `m` pairwise-distinct input vectors of a common dimension `n0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSet {
    inputs: Vec<Vec<f64>>,
    dim: usize,
}

impl InputSet {
    pub fn new(inputs: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("input set must be nonempty".into()));
        }
        let dim = inputs[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("inputs must have dimension >= 1".into()));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "input {i} has dimension {} but input 0 has {dim}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("input {i} is not finite")));
            }
        }
        for i in 0..inputs.len() {
            for j in (i + 1)..inputs.len() {
                let max_diff = inputs[i]
                    .iter()
                    .zip(&inputs[j])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if max_diff <= 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "inputs {i} and {j} coincide (max-norm difference {max_diff:.3e})"
                    )));
                }
            }
        }
        Ok(InputSet { inputs, dim })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn dot(&self, a: usize, b: usize) -> f64 {
        self.inputs[a]
            .iter()
            .zip(&self.inputs[b])
            .map(|(x, y)| x * y)
            .sum()
    }
}

/// The four planar reference inputs used throughout the stability
/// experiments (dimension 2).
pub fn reference_inputs_planar() -> InputSet {
    InputSet::new(vec![
        vec![-0.9895229339599609, -0.5992491841316223],
        vec![-0.17877478897571564, 2.253682851791382],
        vec![1.0237634181976318, -0.4618060886859894],
        vec![-0.5364212393760681, 1.9298086166381836],
    ])
    .expect("reference inputs are valid")
}

/// The four-dimensional companions used for four-point statistics.
pub fn reference_inputs_dim4() -> InputSet {
    InputSet::new(vec![
        vec![
            -0.9895229339599609,
            -0.5992491841316223,
            -0.17877478897571564,
            2.253682851791382,
        ],
        vec![
            1.0237634181976318,
            -0.4618060886859894,
            -0.5364212393760681,
            1.9298086166381836,
        ],
        vec![
            -1.95197594165802,
            -1.7220025062561035,
            0.8821542859077454,
            -1.1963286399841309,
        ],
        vec![
            -0.1944112777709961,
            -0.540934145450592,
            0.3308846354484558,
            0.0907512903213501,
        ],
    ])
    .expect("reference inputs are valid")
}
