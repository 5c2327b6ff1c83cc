//! Feed-forward ReLU controller `u = W^L h^L + w^L`, `h^l = max(0, W^{l-1} h^{l-1} + w^{l-1})`.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("dimension mismatch at layer {layer}: {detail}")]
    DimensionMismatch { layer: usize, detail: String },
    #[error("non-finite weight in layer {0}")]
    NonFinite(usize),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<f64>>,
    #[serde(rename = "w")]
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).fold(0.0, |acc, (w, v)| acc + w * v) + b)
            .collect()
    }
}

/// Layers `0..=L`; layers `0..L` feed ReLUs, layer `L` is the affine output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNetwork {
    pub layers: Vec<Layer>,
    pub input_dim: usize,
    pub output_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `t^1..t^L`.
    pub pre_activations: Vec<Vec<f64>>,
    /// `h^1..h^L`.
    pub activations: Vec<Vec<f64>>,
    pub output: Vec<f64>,
    /// `b^l_j = t^l_j > 0`.
    pub phase: Vec<Vec<bool>>,
}

impl ForwardTrace {
    pub fn flat_phase(&self) -> Vec<bool> {
        self.phase.iter().flatten().copied().collect()
    }
}

impl NeuralNetwork {
    /// Builds and validates.
    pub fn new(layers: Vec<Layer>, input_dim: usize, output_dim: usize) -> Result<Self, NetworkError> {
        let net = Self {
            layers,
            input_dim,
            output_dim,
        };
        net.validate()?;
        Ok(net)
    }

    /// Number of hidden ReLU layers `L`.
    pub fn hidden_layers(&self) -> usize {
        self.layers.len().saturating_sub(1)
    }

    /// Widths `M_1..M_L`.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.hidden_layers()].iter().map(Layer::rows).collect()
    }

    pub fn relu_count(&self) -> usize {
        self.hidden_widths().iter().sum()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.layers.is_empty() {
            return Err(NetworkError::DimensionMismatch {
                layer: 0,
                detail: "network has no layers".into(),
            });
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NetworkError::DimensionMismatch {
                layer: 0,
                detail: "input and output dimensions must be positive".into(),
            });
        }
        let mut cols = self.input_dim;
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let rows = layer.rows();
            if rows == 0 {
                return Err(NetworkError::DimensionMismatch {
                    layer: l,
                    detail: "layer has no rows".into(),
                });
            }
            if layer.bias.len() != rows {
                return Err(NetworkError::DimensionMismatch {
                    layer: l,
                    detail: format!("bias has {} entries, W has {rows} rows", layer.bias.len()),
                });
            }
            if let Some(r) = layer.weights.iter().position(|row| row.len() != cols) {
                return Err(NetworkError::DimensionMismatch {
                    layer: l,
                    detail: format!("row {r} has {} columns, expected {cols}", layer.weights[r].len()),
                });
            }
            if l == last && rows != self.output_dim {
                return Err(NetworkError::DimensionMismatch {
                    layer: l,
                    detail: format!("output layer has {rows} rows, output_dim is {}", self.output_dim),
                });
            }
            if layer.weights.iter().flatten().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(NetworkError::NonFinite(l));
            }
            cols = rows;
        }
        Ok(())
    }

    /// # Panics
    /// If `d.len() != input_dim`.
    pub fn forward(&self, d: &[f64]) -> ForwardTrace {
        assert_eq!(d.len(), self.input_dim, "input dimension");
        let l = self.hidden_layers();
        let mut pre = Vec::with_capacity(l);
        let mut act = Vec::with_capacity(l);
        let mut phase = Vec::with_capacity(l);
        let mut h = d.to_vec();
        for layer in &self.layers[..l] {
            let t = layer.apply(&h);
            h = t.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
            phase.push(t.iter().map(|&v| v > 0.0).collect());
            pre.push(t);
            act.push(h.clone());
        }
        let output = self.layers[l].apply(&h);
        ForwardTrace {
            pre_activations: pre,
            activations: act,
            output,
            phase,
        }
    }

    pub fn eval(&self, d: &[f64]) -> Vec<f64> {
        self.forward(d).output
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let net: Self = serde_json::from_str(text).map_err(|e| NetworkError::ParseError(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    /// Single hidden layer with zero weights; ReLU biases `hidden_bias`,
    /// output bias `output_bias`.
    pub fn constant(input_dim: usize, hidden_bias: Vec<f64>, output_bias: Vec<f64>) -> Result<Self, NetworkError> {
        let m = hidden_bias.len();
        let out = output_bias.len();
        Self::new(
            vec![
                Layer {
                    weights: vec![vec![0.0; input_dim]; m],
                    bias: hidden_bias,
                },
                Layer {
                    weights: vec![vec![0.0; m]; out],
                    bias: output_bias,
                },
            ],
            input_dim,
            out,
        )
    }
}

pub fn load_network(path: &Path) -> Result<NeuralNetwork, NetworkError> {
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    NeuralNetwork::from_json(&text)
}

pub fn save_network(net: &NeuralNetwork, path: &Path) -> Result<(), NetworkError> {
    std::fs::write(path, net.to_json()).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: Vec<Vec<f64>>, b: Vec<f64>) -> Layer {
        Layer { weights: w, bias: b }
    }

    #[test]
    fn hand_evaluation() {
        let net = NeuralNetwork::new(
            vec![
                layer(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]),
                layer(vec![vec![1.0, 1.0]], vec![0.0]),
            ],
            2,
            1,
        )
        .unwrap();
        let t = net.forward(&[1.0, -1.0]);
        assert_eq!(t.activations[0], vec![1.0, 0.0]);
        assert_eq!(t.output, vec![1.0]);
        assert_eq!(t.phase[0], vec![true, false]);
    }

    #[test]
    fn zero_preactivation_is_inactive() {
        let net = NeuralNetwork::constant(2, vec![0.0, -1.0], vec![3.0]).unwrap();
        let t = net.forward(&[5.0, 5.0]);
        assert_eq!(t.phase[0], vec![false, false]);
        assert_eq!(t.output, vec![3.0]);
    }

    #[test]
    fn validation_errors() {
        let ok = NeuralNetwork::new(
            vec![layer(vec![vec![0.0; 8]; 4], vec![0.0; 4]), layer(vec![vec![0.0; 4]; 2], vec![0.0; 2])],
            8,
            2,
        );
        assert!(ok.is_ok());
        let bad = NeuralNetwork::new(
            vec![layer(vec![vec![0.0; 8]; 4], vec![0.0; 4]), layer(vec![vec![0.0; 5]; 2], vec![0.0; 2])],
            8,
            2,
        );
        assert!(matches!(bad, Err(NetworkError::DimensionMismatch { layer: 1, .. })));
        let empty = NeuralNetwork::new(
            vec![layer(vec![], vec![]), layer(vec![vec![]; 2], vec![0.0; 2])],
            8,
            2,
        );
        assert!(matches!(empty, Err(NetworkError::DimensionMismatch { layer: 0, .. })));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let net = NeuralNetwork::constant(4, vec![0.1, -0.3], vec![1.0 / 3.0, 2.0]).unwrap();
        let back = NeuralNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
        assert!(matches!(NeuralNetwork::from_json("{\"layers\": ["), Err(NetworkError::ParseError(_))));
        let wrong = "{\"layers\":[{\"W\":[[1,2]],\"w\":[0]}],\"input_dim\":3,\"output_dim\":1}";
        assert!(matches!(NeuralNetwork::from_json(wrong), Err(NetworkError::DimensionMismatch { .. })));
    }
}
