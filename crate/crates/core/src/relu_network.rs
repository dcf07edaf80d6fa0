//! Feed-forward ReLU certificate networks.
//!
//! A network maps a state to a scalar certificate value. Hidden layers apply
//! `max(z, 0)`, the final single-neuron layer is linear. Fixing which hidden
//! neurons are active turns the network into an affine function of the input;
//! [`masked_affine`] computes that function and [`cube_polytope`] the region
//! of inputs on which it applies.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{AffineForm, Halfspace, Polytope};

/// Default tolerance below which a pre-activation counts as unstable.
pub const DEFAULT_UNSTABLE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("weight file parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("shape mismatch in layer {layer}: {message}")]
    Shape { layer: usize, message: String },
    #[error("non-finite value in layer {layer} ({field})")]
    NonFinite { layer: usize, field: &'static str },
    #[error("input has dimension {got}, network expects {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One dense layer: `weights` is row-major with one row per output neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn width(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| dot(row, input) + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl ReluNetwork {
    /// Builds a network, checking shapes and finiteness.
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        if input_dim == 0 {
            return Err(NetworkError::Shape {
                layer: 0,
                message: "input_dim must be positive".into(),
            });
        }
        if layers.is_empty() {
            return Err(NetworkError::Shape {
                layer: 0,
                message: "network has no layers".into(),
            });
        }
        let mut prev = input_dim;
        for (idx, layer) in layers.iter().enumerate() {
            let number = idx + 1;
            if layer.weights.len() != layer.bias.len() {
                return Err(NetworkError::Shape {
                    layer: number,
                    message: format!(
                        "{} weight rows but {} bias entries",
                        layer.weights.len(),
                        layer.bias.len()
                    ),
                });
            }
            if layer.weights.is_empty() {
                return Err(NetworkError::Shape {
                    layer: number,
                    message: "layer has no neurons".into(),
                });
            }
            for (row_idx, row) in layer.weights.iter().enumerate() {
                if row.len() != prev {
                    return Err(NetworkError::Shape {
                        layer: number,
                        message: format!(
                            "row {} has {} columns, expected {}",
                            row_idx,
                            row.len(),
                            prev
                        ),
                    });
                }
                if row.iter().any(|w| !w.is_finite()) {
                    return Err(NetworkError::NonFinite {
                        layer: number,
                        field: "weights",
                    });
                }
            }
            if layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(NetworkError::NonFinite {
                    layer: number,
                    field: "bias",
                });
            }
            prev = layer.width();
        }
        if prev != 1 {
            return Err(NetworkError::Shape {
                layer: layers.len(),
                message: format!("final layer has width {prev}, expected 1"),
            });
        }
        Ok(Self { input_dim, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layers with a ReLU, i.e. every layer except the output layer.
    pub fn hidden_layers(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("validated non-empty")
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.hidden_layers().iter().map(Layer::width).collect()
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden_layers().iter().map(Layer::width).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NetworkError> {
        if x.len() != self.input_dim {
            return Err(NetworkError::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Certificate value `B(x)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64, NetworkError> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for layer in self.hidden_layers() {
            h = layer.apply(&h).into_iter().map(|z| z.max(0.0)).collect();
        }
        Ok(self.output_layer().apply(&h)[0])
    }

    /// Hidden pre-activations, layer by layer, for a concrete input.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, NetworkError> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        let mut out = Vec::with_capacity(self.layers.len() - 1);
        for layer in self.hidden_layers() {
            let z = layer.apply(&h);
            h = z.iter().map(|v| v.max(0.0)).collect();
            out.push(z);
        }
        Ok(out)
    }

    /// Activation pattern of `x`: active iff `z > tol`, unstable iff `|z| <= tol`.
    ///
    /// Layer `i` sees the masked outputs of layer `i - 1`, so neurons with
    /// `0 < z <= tol` propagate zero.
    pub fn activation_pattern(
        &self,
        x: &[f64],
        tol: f64,
    ) -> Result<ActivationPattern, NetworkError> {
        self.check_input(x)?;
        let mut pattern = ActivationPattern::all_inactive(&self.hidden_widths());
        let mut h = x.to_vec();
        let mut offset = 0;
        for layer in self.hidden_layers() {
            let z = layer.apply(&h);
            h = Vec::with_capacity(z.len());
            for (j, &zj) in z.iter().enumerate() {
                let idx = offset + j;
                if zj > tol {
                    pattern.active.set(idx, true);
                    h.push(zj);
                } else {
                    h.push(0.0);
                }
                if zj.abs() <= tol {
                    pattern.unstable.set(idx, true);
                }
            }
            offset += z.len();
        }
        Ok(pattern)
    }

    /// Canonical cube key of `x`: unstable neurons resolved to active.
    pub fn canonical_pattern(&self, x: &[f64], tol: f64) -> Result<ActivationPattern, NetworkError> {
        Ok(self.activation_pattern(x, tol)?.canonical())
    }

    /// Adds `delta` to the output bias.
    pub fn shift_output(&mut self, delta: f64) {
        let last = self.layers.len() - 1;
        self.layers[last].bias[0] += delta;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}

/// Parses a weight file: `{"input_dim": n, "layers": [{"weights": [[..]], "bias": [..]}, ..]}`.
pub fn load_network<R: Read>(mut reader: R) -> Result<ReluNetwork, NetworkError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_network(&text)
}

pub fn parse_network(text: &str) -> Result<ReluNetwork, NetworkError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct RawNetwork {
        input_dim: usize,
        layers: Vec<Layer>,
    }
    let raw: RawNetwork = serde_json::from_str(text).map_err(|e| NetworkError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    ReluNetwork::new(raw.input_dim, raw.layers)
}

/// Fixed-length bitset over all hidden neurons, layer-major.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NeuronBits {
    words: Vec<u64>,
    len: usize,
}

impl NeuronBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len);
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        assert!(idx < self.len);
        let mask = 1u64 << (idx % 64);
        if value {
            self.words[idx / 64] |= mask;
        } else {
            self.words[idx / 64] &= !mask;
        }
    }

    pub fn flip(&mut self, idx: usize) {
        let v = self.get(idx);
        self.set(idx, !v);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn none(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn union(&self, other: &Self) -> Self {
        Self {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
            len: self.len,
        }
    }
}

impl fmt::Debug for NeuronBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Canonical cube key: the active bits, little-endian by global neuron index.
pub type PatternKey = NeuronBits;

/// Per-layer active and unstable neuron sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    widths: Vec<usize>,
    pub active: NeuronBits,
    pub unstable: NeuronBits,
}

impl ActivationPattern {
    pub fn all_inactive(widths: &[usize]) -> Self {
        let n = widths.iter().sum();
        Self {
            widths: widths.to_vec(),
            active: NeuronBits::zeros(n),
            unstable: NeuronBits::zeros(n),
        }
    }

    pub fn all_active(widths: &[usize]) -> Self {
        let mut p = Self::all_inactive(widths);
        for i in 0..p.active.len() {
            p.active.set(i, true);
        }
        p
    }

    /// Canonical pattern from an active set alone.
    pub fn from_active(widths: &[usize], active: NeuronBits) -> Self {
        assert_eq!(active.len(), widths.iter().sum::<usize>());
        Self {
            widths: widths.to_vec(),
            unstable: NeuronBits::zeros(active.len()),
            active,
        }
    }

    /// Pattern with the given per-layer active flags.
    pub fn from_layers(layers: &[Vec<bool>]) -> Self {
        let widths: Vec<usize> = layers.iter().map(Vec::len).collect();
        let mut p = Self::all_inactive(&widths);
        for (idx, &on) in layers.iter().flatten().enumerate() {
            p.active.set(idx, on);
        }
        p
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn num_neurons(&self) -> usize {
        self.active.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.unstable.none()
    }

    /// Resolves unstable neurons to active and clears the unstable set.
    pub fn canonical(&self) -> Self {
        Self {
            widths: self.widths.clone(),
            active: self.active.union(&self.unstable),
            unstable: NeuronBits::zeros(self.active.len()),
        }
    }

    pub fn key(&self) -> PatternKey {
        self.active.clone()
    }

    pub fn is_active(&self, layer: usize, neuron: usize) -> bool {
        self.active.get(self.global_index(layer, neuron))
    }

    /// Flat index of neuron `neuron` in hidden layer `layer` (both 0-based).
    pub fn global_index(&self, layer: usize, neuron: usize) -> usize {
        assert!(neuron < self.widths[layer]);
        self.widths[..layer].iter().sum::<usize>() + neuron
    }

    /// `(layer, neuron)` for a flat index.
    pub fn locate(&self, mut idx: usize) -> (usize, usize) {
        for (layer, &w) in self.widths.iter().enumerate() {
            if idx < w {
                return (layer, idx);
            }
            idx -= w;
        }
        panic!("neuron index out of range");
    }

    pub fn per_layer(&self) -> Vec<Vec<bool>> {
        let mut out = Vec::with_capacity(self.widths.len());
        let mut idx = 0;
        for &w in &self.widths {
            out.push((idx..idx + w).map(|i| self.active.get(i)).collect());
            idx += w;
        }
        out
    }

    fn matches(&self, net: &ReluNetwork) -> bool {
        self.widths == net.hidden_widths()
    }
}

/// The network restricted to one activation pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedAffine {
    /// Pre-activation `z_ij` of every hidden neuron, layer-major.
    pub pre: Vec<AffineForm>,
    /// Certificate value on the pattern's region.
    pub output: AffineForm,
}

/// Masked weights and biases of `net` under `pattern`.
///
/// Masked outputs of layer 1 are `W_1j x + r_1j` for active `j` and zero
/// otherwise; deeper layers compose `W_ij^T` with the previous layer's masked
/// outputs. The pre-activation of every neuron is kept so that the cube
/// polytope and face conditions can be built from the same recursion.
pub fn masked_affine(
    net: &ReluNetwork,
    pattern: &ActivationPattern,
) -> Result<MaskedAffine, NetworkError> {
    if !pattern.matches(net) {
        return Err(NetworkError::Shape {
            layer: 0,
            message: format!(
                "pattern widths {:?} do not match hidden widths {:?}",
                pattern.widths(),
                net.hidden_widths()
            ),
        });
    }
    let n = net.input_dim();
    // Masked outputs of the previous layer; the input layer is the identity.
    let mut prev: Vec<AffineForm> = (0..n).map(|k| AffineForm::unit(n, k)).collect();
    let mut pre = Vec::with_capacity(net.num_hidden());
    let mut idx = 0;
    for layer in net.hidden_layers() {
        let mut next = Vec::with_capacity(layer.width());
        for (row, &bias) in layer.weights.iter().zip(&layer.bias) {
            let z = AffineForm::combine(row, &prev, bias, n);
            next.push(if pattern.active.get(idx) {
                z.clone()
            } else {
                AffineForm::zero(n)
            });
            pre.push(z);
            idx += 1;
        }
        prev = next;
    }
    let out = net.output_layer();
    let output = AffineForm::combine(&out.weights[0], &prev, out.bias[0], n);
    Ok(MaskedAffine { pre, output })
}

/// Closed region of inputs whose activation pattern is `pattern`.
///
/// Active neurons contribute `z_ij >= 0`, inactive ones `z_ij <= 0`.
pub fn cube_polytope(
    net: &ReluNetwork,
    pattern: &ActivationPattern,
) -> Result<Polytope, NetworkError> {
    let masked = masked_affine(net, pattern)?;
    Ok(cube_polytope_from(&masked, pattern, net.input_dim()))
}

pub(crate) fn cube_polytope_from(
    masked: &MaskedAffine,
    pattern: &ActivationPattern,
    dim: usize,
) -> Polytope {
    let mut poly = Polytope::new(dim);
    for (idx, z) in masked.pre.iter().enumerate() {
        let h = if pattern.active.get(idx) {
            Halfspace::ge(z.coeffs.clone(), z.offset)
        } else {
            Halfspace::le(z.coeffs.clone(), z.offset)
        };
        poly.push(h);
    }
    poly
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
