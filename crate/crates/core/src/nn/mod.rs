//! A small from-scratch network library: LSTM, dense and 1-D convolution
//! layers with backpropagation through time, Glorot initialisation, Adam and
//! a mini-batch trainer. Everything is `f64` and processes one sequence at a
//! time.

mod layers;
mod model;
mod optim;
mod params;
mod train;

use serde::{Deserialize, Serialize};

pub use layers::{Activation, Cache, Init, LayerSpec, Seq};
pub use model::{MetricSpace, Network};
pub use optim::{adam_step, AdamState};
pub use params::{Layout, ParamVector, TensorSpec};
pub use train::{
    early_stopper, train_local, train_with_early_stopping, BatchCursor, EarlyStopOutcome,
    TrainConfig, Trainer,
};

use crate::{Error, Result};

/// Forecasting architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Architecture {
    /// LSTM layers of the given widths, the last returning only its final
    /// state, followed by a linear dense layer producing the horizon.
    StackedLstm {
        #[serde(default = "default_stacked")]
        hidden: Vec<usize>,
    },
    /// LSTM encoder to a latent vector, repeated over the horizon and decoded
    /// by another LSTM and two dense layers.
    EncoderDecoder {
        #[serde(default = "d50")]
        encoder: usize,
        #[serde(default = "d12")]
        latent: usize,
        #[serde(default = "d50")]
        decoder: usize,
        #[serde(default = "d100")]
        dense: usize,
    },
    /// Convolutional front end, LSTM encoder, repeat, LSTM decoder and a
    /// dense head.
    ConvSeq2Seq {
        #[serde(default = "d2")]
        conv_layers: usize,
        #[serde(default = "d32")]
        conv_filters: usize,
        #[serde(default = "d3")]
        kernel: usize,
        #[serde(default = "d2")]
        enc_lstm: usize,
        #[serde(default = "d2")]
        dec_lstm: usize,
        #[serde(default = "d50")]
        lstm_units: usize,
        #[serde(default = "d2")]
        dense: usize,
        #[serde(default = "d50")]
        dense_units: usize,
    },
}

fn default_stacked() -> Vec<usize> {
    vec![50, 50]
}
fn d2() -> usize {
    2
}
fn d3() -> usize {
    3
}
fn d12() -> usize {
    12
}
fn d32() -> usize {
    32
}
fn d50() -> usize {
    50
}
fn d100() -> usize {
    100
}

impl Architecture {
    pub fn stacked_lstm() -> Self {
        Architecture::StackedLstm {
            hidden: default_stacked(),
        }
    }

    pub fn encoder_decoder() -> Self {
        Architecture::EncoderDecoder {
            encoder: 50,
            latent: 12,
            decoder: 50,
            dense: 100,
        }
    }

    pub fn conv_seq2seq() -> Self {
        Architecture::ConvSeq2Seq {
            conv_layers: 2,
            conv_filters: 32,
            kernel: 3,
            enc_lstm: 2,
            dec_lstm: 2,
            lstm_units: 50,
            dense: 2,
            dense_units: 50,
        }
    }
}

/// Architecture plus input length `L` and forecast horizon `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub input_len: usize,
    pub output_len: usize,
}

impl ModelSpec {
    pub fn new(architecture: Architecture, input_len: usize, output_len: usize) -> Self {
        ModelSpec {
            architecture,
            input_len,
            output_len,
        }
    }

    /// Expand into the layer sequence.
    pub fn layers(&self) -> Result<Vec<LayerSpec>> {
        let h = self.output_len;
        let bad = |msg: &str| Err(Error::Config(format!("invalid model spec: {msg}")));
        if self.input_len == 0 || h == 0 {
            return bad("input and output lengths must be ≥ 1");
        }
        let lstm = |input, hidden, return_sequences| LayerSpec::Lstm {
            input,
            hidden,
            return_sequences,
        };
        let dense = |input, output, activation| LayerSpec::Dense {
            input,
            output,
            activation,
        };
        let mut layers = Vec::new();
        match &self.architecture {
            Architecture::StackedLstm { hidden } => {
                if hidden.is_empty() || hidden.contains(&0) {
                    return bad("LSTM widths must be ≥ 1");
                }
                let mut width = 1;
                for (i, &units) in hidden.iter().enumerate() {
                    layers.push(lstm(width, units, i + 1 < hidden.len()));
                    width = units;
                }
                layers.push(dense(width, h, Activation::Linear));
            }
            &Architecture::EncoderDecoder {
                encoder,
                latent,
                decoder,
                dense: dense_units,
            } => {
                if [encoder, latent, decoder, dense_units].contains(&0) {
                    return bad("layer sizes must be ≥ 1");
                }
                layers.push(lstm(1, encoder, true));
                layers.push(lstm(encoder, latent, false));
                layers.push(LayerSpec::RepeatVector { times: h });
                layers.push(lstm(latent, decoder, true));
                layers.push(dense(decoder, dense_units, Activation::Relu));
                layers.push(dense(dense_units, 1, Activation::Linear));
            }
            &Architecture::ConvSeq2Seq {
                conv_layers,
                conv_filters,
                kernel,
                enc_lstm,
                dec_lstm,
                lstm_units,
                dense: n_dense,
                dense_units,
            } => {
                if [conv_filters, kernel, enc_lstm, dec_lstm, lstm_units, n_dense, dense_units]
                    .contains(&0)
                {
                    return bad("layer sizes must be ≥ 1");
                }
                if self.input_len < conv_layers * (kernel - 1) + 1 {
                    return bad("input too short for the convolution stack");
                }
                let mut width = 1;
                for _ in 0..conv_layers {
                    layers.push(LayerSpec::Conv1d {
                        in_channels: width,
                        out_channels: conv_filters,
                        kernel,
                        activation: Activation::Relu,
                    });
                    width = conv_filters;
                }
                for i in 0..enc_lstm {
                    layers.push(lstm(width, lstm_units, i + 1 < enc_lstm));
                    width = lstm_units;
                }
                layers.push(LayerSpec::RepeatVector { times: h });
                for _ in 0..dec_lstm {
                    layers.push(lstm(width, lstm_units, true));
                    width = lstm_units;
                }
                for _ in 0..n_dense - 1 {
                    layers.push(dense(width, dense_units, Activation::Relu));
                    width = dense_units;
                }
                layers.push(dense(width, 1, Activation::Linear));
            }
        }
        Ok(layers)
    }
}

/// Glorot-initialised parameters for `spec`, deterministic per seed.
pub fn init(spec: &ModelSpec, seed: u64) -> Result<ParamVector> {
    Ok(Network::new(spec)?.init(seed))
}
