//! Feed-forward ReLU networks: representation, JSON ingestion, pointwise
//! evaluation, and Jacobians of fully-decided activation patterns.
//!
//! A network is an ordered list of affine layers; ReLU is applied between
//! layers but not after the last one. The file format is
//!
//! ```json
//! { "layers": [ { "weights": [[...]], "bias": [...] }, ... ] }
//! ```
//!
//! where `weights[i][j]` connects neuron `j` of the previous layer to neuron
//! `i` of this layer, and the last listed layer is the linear output layer.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{Interval, NUM_TOL};
use crate::matrix::RealMatrix;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read network file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse network JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer} has empty weights")]
    EmptyLayer { layer: usize },
    #[error("layer {layer} has ragged weight rows")]
    RaggedWeights { layer: usize },
    #[error("layer {layer} expects {expected} inputs but the previous layer produces {found}")]
    DimensionMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("layer {layer} bias has length {found}, expected {expected}")]
    BiasLength {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("input has length {found}, expected {expected}")]
    InputDimension { expected: usize, found: usize },
    #[error("activation pattern leaves neuron {neuron} of hidden layer {layer} undecided")]
    UndecidedNeuron { layer: usize, neuron: usize },
}

/// One affine layer: `z = weights * x + bias`.
#[derive(Debug, Clone)]
pub struct Layer {
    weights: RealMatrix,
    bias: Vec<f64>,
}

impl Layer {
    pub fn weights(&self) -> &RealMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Number of neurons in this layer.
    pub fn size(&self) -> usize {
        self.weights.rows()
    }
}

/// A feed-forward ReLU network with at least one layer.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl Network {
    /// Builds a network from `(weights, bias)` pairs, validating the
    /// dimension chain.
    pub fn new(layers: Vec<(RealMatrix, Vec<f64>)>) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::Empty);
        }
        let input_dim = layers[0].0.cols();
        let mut prev = input_dim;
        for (l, (w, b)) in layers.iter().enumerate() {
            if w.cols() != prev {
                return Err(NetworkError::DimensionMismatch {
                    layer: l,
                    expected: w.cols(),
                    found: prev,
                });
            }
            if b.len() != w.rows() {
                return Err(NetworkError::BiasLength {
                    layer: l,
                    expected: w.rows(),
                    found: b.len(),
                });
            }
            prev = w.rows();
        }
        let output_dim = prev;
        Ok(Network {
            layers: layers
                .into_iter()
                .map(|(weights, bias)| Layer { weights, bias })
                .collect(),
            input_dim,
            output_dim,
        })
    }

    /// Parses the JSON wire format.
    pub fn from_json_str(s: &str) -> Result<Self, NetworkError> {
        let file: NetworkFile = serde_json::from_str(s)?;
        if file.layers.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for (l, layer) in file.layers.into_iter().enumerate() {
            if layer.weights.is_empty() || layer.weights[0].is_empty() {
                return Err(NetworkError::EmptyLayer { layer: l });
            }
            let cols = layer.weights[0].len();
            if layer.weights.iter().any(|r| r.len() != cols) {
                return Err(NetworkError::RaggedWeights { layer: l });
            }
            layers.push((RealMatrix::from_rows(layer.weights), layer.bias));
        }
        Network::new(layers)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, NetworkError> {
        Network::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Serializes back to the JSON wire format.
    pub fn to_json_string(&self) -> String {
        let file = NetworkFile {
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    weights: (0..l.weights.rows())
                        .map(|i| l.weights.row(i).to_vec())
                        .collect(),
                    bias: l.bias.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("network serialization cannot fail")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Number of weight layers, counting the linear output layer.
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Number of hidden (ReLU) layers.
    pub fn num_hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layer(&self, l: usize) -> &Layer {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Total neuron count over hidden layers.
    pub fn num_hidden_neurons(&self) -> usize {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::size)
            .sum()
    }

    /// Evaluates the network at `x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        if x.len() != self.input_dim {
            return Err(NetworkError::InputDimension {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let mut cur = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.weights.mul_vec(&cur);
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            if l + 1 < self.layers.len() {
                for zi in z.iter_mut() {
                    *zi = zi.max(0.0);
                }
            }
            cur = z;
        }
        Ok(cur)
    }

    /// Pre-activation vectors of every layer at `x` (hidden layers first,
    /// output layer last), before any ReLU is applied.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, NetworkError> {
        if x.len() != self.input_dim {
            return Err(NetworkError::InputDimension {
                expected: self.input_dim,
                found: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut z = layer.weights.mul_vec(&cur);
            for (zi, bi) in z.iter_mut().zip(&layer.bias) {
                *zi += bi;
            }
            out.push(z.clone());
            for zi in z.iter_mut() {
                *zi = zi.max(0.0);
            }
            cur = z;
        }
        Ok(out)
    }

    /// The activation pattern at `x`, and whether `x` is a differentiable
    /// point. A pre-activation within [`NUM_TOL`] of zero makes the point
    /// non-differentiable; that neuron is reported [`NeuronState::Star`].
    pub fn activation_at(&self, x: &[f64]) -> Result<(ActivationPattern, bool), NetworkError> {
        let pre = self.pre_activations(x)?;
        let mut states = Vec::with_capacity(self.num_hidden_layers());
        let mut differentiable = true;
        for z in &pre[..self.num_hidden_layers()] {
            let layer_states = z
                .iter()
                .map(|&zi| {
                    if zi.abs() <= NUM_TOL {
                        differentiable = false;
                        NeuronState::Star
                    } else if zi > 0.0 {
                        NeuronState::Active
                    } else {
                        NeuronState::Inactive
                    }
                })
                .collect();
            states.push(layer_states);
        }
        Ok((ActivationPattern { states }, differentiable))
    }

    /// Jacobian of the affine piece selected by a fully-decided pattern:
    /// the chain product of weight matrices with 0/1 diagonal factors.
    pub fn jacobian_of_pattern(
        &self,
        pattern: &ActivationPattern,
    ) -> Result<RealMatrix, NetworkError> {
        assert!(
            pattern.matches(self),
            "activation pattern shape does not match the network"
        );
        if let Some((layer, neuron)) = pattern.first_star() {
            return Err(NetworkError::UndecidedNeuron { layer, neuron });
        }
        let mut jac = self.layers[0].weights.clone();
        for l in 1..self.layers.len() {
            let diag: Vec<f64> = pattern.states[l - 1]
                .iter()
                .map(|s| match s {
                    NeuronState::Active => 1.0,
                    NeuronState::Inactive => 0.0,
                    NeuronState::Star => unreachable!(),
                })
                .collect();
            jac = self.layers[l].weights.matmul(&jac.scaled_rows(&diag));
        }
        Ok(jac)
    }
}

/// Ternary activation state of one hidden neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NeuronState {
    /// Pre-activation known positive over the region under consideration.
    Active,
    /// Pre-activation known negative.
    Inactive,
    /// Sign undecided; may be positive or negative depending on the input.
    Star,
}

/// Per-neuron activation states for every hidden layer of a network.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationPattern {
    states: Vec<Vec<NeuronState>>,
}

impl ActivationPattern {
    /// A pattern with every hidden neuron undecided.
    pub fn all_star(net: &Network) -> Self {
        ActivationPattern {
            states: net.layers[..net.num_hidden_layers()]
                .iter()
                .map(|l| vec![NeuronState::Star; l.size()])
                .collect(),
        }
    }

    pub fn from_states(states: Vec<Vec<NeuronState>>) -> Self {
        ActivationPattern { states }
    }

    /// Whether the pattern's shape matches the network's hidden layers.
    pub fn matches(&self, net: &Network) -> bool {
        self.states.len() == net.num_hidden_layers()
            && self
                .states
                .iter()
                .enumerate()
                .all(|(l, s)| s.len() == net.layer(l).size())
    }

    pub fn num_hidden_layers(&self) -> usize {
        self.states.len()
    }

    pub fn layer(&self, l: usize) -> &[NeuronState] {
        &self.states[l]
    }

    pub fn state(&self, layer: usize, neuron: usize) -> NeuronState {
        self.states[layer][neuron]
    }

    pub fn set_state(&mut self, layer: usize, neuron: usize, state: NeuronState) {
        self.states[layer][neuron] = state;
    }

    pub fn star_count(&self) -> usize {
        self.states
            .iter()
            .map(|l| l.iter().filter(|s| **s == NeuronState::Star).count())
            .sum()
    }

    /// First undecided neuron in layer-major order, if any.
    pub fn first_star(&self) -> Option<(usize, usize)> {
        for (l, layer) in self.states.iter().enumerate() {
            for (i, s) in layer.iter().enumerate() {
                if *s == NeuronState::Star {
                    return Some((l, i));
                }
            }
        }
        None
    }

    /// Index of the first hidden layer containing a star, or the output layer
    /// index (`num_layers - 1`) when the pattern is fully decided. Linear
    /// input-variable expressions can be propagated through weight layers
    /// `0..=frontier`.
    pub fn frontier(&self, num_layers: usize) -> usize {
        for (l, layer) in self.states.iter().enumerate() {
            if layer.contains(&NeuronState::Star) {
                return l;
            }
        }
        num_layers - 1
    }

    /// The diagonal of the interval activation matrix for hidden layer `l`:
    /// `[1,1]` for active, `[0,0]` for inactive, `[0,1]` for star neurons.
    pub fn interval_diagonal(&self, l: usize) -> Vec<Interval> {
        self.states[l]
            .iter()
            .map(|s| match s {
                NeuronState::Active => Interval::point(1.0),
                NeuronState::Inactive => Interval::point(0.0),
                NeuronState::Star => Interval::new(0.0, 1.0),
            })
            .collect()
    }
}
