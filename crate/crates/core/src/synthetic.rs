//! Hand-built certificates with known ground truth.
//!
//! `ValidBox` is `B(x) = margin - max_i |x_i - c_i|`, written exactly with ReLU
//! gadgets: `|t| = relu(t) + relu(-t)` in the first layer, then a tree of
//! `max(a, b) = relu(a - b) + relu(b)` layers (valid because `b >= 0`).
//! `InvalidFlipped` is the same network with the sign of one output weight
//! flipped, and `Affine` is an output-only net `B(x) = x_1 - c_1 + margin`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relu_network::{Layer, NetworkError, ReluNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    ValidBox,
    InvalidFlipped,
    Affine,
}

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::ValidBox => "valid_box",
            SyntheticKind::InvalidFlipped => "invalid_flipped",
            SyntheticKind::Affine => "affine",
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = SyntheticError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "valid_box" => Ok(SyntheticKind::ValidBox),
            "invalid_flipped" => Ok(SyntheticKind::InvalidFlipped),
            "affine" => Ok(SyntheticKind::Affine),
            other => Err(SyntheticError::Kind(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("unknown certificate kind {0:?}")]
    Kind(String),
    #[error("gadget needs at least one state dimension")]
    Dimension,
    #[error("margin must be finite and positive, got {0}")]
    Margin(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub center: Vec<f64>,
    pub margin: f64,
}

impl SyntheticParams {
    pub fn origin(dim: usize, margin: f64) -> Self {
        Self {
            center: vec![0.0; dim],
            margin,
        }
    }
}

pub fn make_synthetic_cbf(
    kind: SyntheticKind,
    params: &SyntheticParams,
) -> Result<ReluNetwork, SyntheticError> {
    let n = params.center.len();
    if n == 0 {
        return Err(SyntheticError::Dimension);
    }
    if kind == SyntheticKind::Affine {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        let layer = Layer {
            weights: vec![w],
            bias: vec![params.margin - params.center[0]],
        };
        return Ok(ReluNetwork::new(n, vec![layer])?);
    }
    if !(params.margin > 0.0) || !params.margin.is_finite() {
        return Err(SyntheticError::Margin(params.margin));
    }

    let mut layers = Vec::new();
    let mut weights = Vec::with_capacity(2 * n);
    let mut bias = Vec::with_capacity(2 * n);
    for (i, &c) in params.center.iter().enumerate() {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        weights.push(row.clone());
        bias.push(-c);
        row[i] = -1.0;
        weights.push(row);
        bias.push(c);
    }
    layers.push(Layer { weights, bias });
    // each value is a linear combination of the previous layer's outputs
    let mut values: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut v = vec![0.0; 2 * n];
            v[2 * i] = 1.0;
            v[2 * i + 1] = 1.0;
            v
        })
        .collect();
    // output coefficients on the `relu(a - b)` neuron of the root max
    let mut root_diff = None;
    while values.len() > 1 {
        let mut weights = Vec::new();
        let mut next = Vec::new();
        let mut width = 0;
        for chunk in values.chunks(2) {
            match chunk {
                [a, b] => {
                    weights.push(a.iter().zip(b).map(|(x, y)| x - y).collect());
                    weights.push(b.clone());
                    next.push((width, width + 1));
                    width += 2;
                }
                [a] => {
                    weights.push(a.clone());
                    next.push((width, width));
                    width += 1;
                }
                _ => unreachable!(),
            }
        }
        root_diff = (next.len() == 1).then_some(next[0].0);
        values = next
            .iter()
            .map(|&(p, q)| {
                let mut v = vec![0.0; width];
                v[p] = 1.0;
                v[q] = 1.0;
                v
            })
            .collect();
        layers.push(Layer {
            bias: vec![0.0; width],
            weights,
        });
    }

    let mut out: Vec<f64> = values[0].iter().map(|c| -c).collect();
    if kind == SyntheticKind::InvalidFlipped {
        // 1D has no max gadget: flip the negative half of the abs instead
        let idx = root_diff.unwrap_or(1);
        out[idx] = -out[idx];
    }
    layers.push(Layer {
        weights: vec![out],
        bias: vec![params.margin],
    });
    Ok(ReluNetwork::new(n, layers)?)
}

/// Seeded dense net with the given hidden widths and a scalar output.
///
/// Weights are uniform in `±sqrt(3 / fan_in)`, biases uniform in `±0.5`.
pub fn random_relu_network(
    input_dim: usize,
    hidden: &[usize],
    seed: u64,
) -> Result<ReluNetwork, SyntheticError> {
    if input_dim == 0 {
        return Err(SyntheticError::Dimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut fan_in = input_dim;
    for &width in hidden.iter().chain(std::iter::once(&1)) {
        let scale = (3.0 / fan_in as f64).sqrt();
        let weights = (0..width)
            .map(|_| (0..fan_in).map(|_| rng.random_range(-scale..scale)).collect())
            .collect();
        let bias = (0..width).map(|_| rng.random_range(-0.5..0.5)).collect();
        layers.push(Layer { weights, bias });
        fan_in = width;
    }
    Ok(ReluNetwork::new(input_dim, layers)?)
}
