//! Layer primitives operating on single sequences, with hand-written
//! backward passes.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation value.
    #[inline]
    fn grad(self, pre: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }
}

/// A sequence of `steps` feature vectors of width `dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq {
    pub steps: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Seq {
    pub fn zeros(steps: usize, dim: usize) -> Self {
        Seq {
            steps,
            dim,
            data: vec![0.0; steps * dim],
        }
    }

    pub fn from_series(values: &[f64]) -> Self {
        Seq {
            steps: values.len(),
            dim: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn step(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    #[inline]
    pub fn step_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }
}

/// How a weight tensor is initialised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Glorot { fan_in: usize, fan_out: usize },
    Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Standard LSTM (input, forget, candidate, output gates; no peepholes).
    /// Emits every hidden state when `return_sequences`, else only the last.
    Lstm {
        input: usize,
        hidden: usize,
        return_sequences: bool,
    },
    /// Fully connected layer applied independently at every time step.
    Dense {
        input: usize,
        output: usize,
        activation: Activation,
    },
    /// 1-D convolution over time, valid padding, stride 1.
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        activation: Activation,
    },
    /// Repeat a single-step input `times` times.
    RepeatVector { times: usize },
}

/// Intermediate values kept by [`LayerSpec::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Lstm {
        input: Seq,
        /// Hidden states `h_0..h_T`, `h_0 = 0`.
        h: Vec<f64>,
        /// Cell states `c_0..c_T`, `c_0 = 0`.
        c: Vec<f64>,
        /// Activated gates per step: `[i | f | g | o]`.
        gates: Vec<f64>,
        tanh_c: Vec<f64>,
    },
    Dense {
        input: Seq,
        pre: Vec<f64>,
    },
    Conv {
        input: Seq,
        pre: Vec<f64>,
    },
    Repeat,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        self.tensors("").iter().map(|(_, s, _)| s.iter().product::<usize>()).sum()
    }

    /// Parameter tensors in packing order.
    pub fn tensors(&self, prefix: &str) -> Vec<(String, Vec<usize>, Init)> {
        match *self {
            LayerSpec::Lstm { input, hidden, .. } => vec![
                (
                    format!("{prefix}w_ih"),
                    vec![4 * hidden, input],
                    Init::Glorot {
                        fan_in: input,
                        fan_out: 4 * hidden,
                    },
                ),
                (
                    format!("{prefix}w_hh"),
                    vec![4 * hidden, hidden],
                    Init::Glorot {
                        fan_in: hidden,
                        fan_out: 4 * hidden,
                    },
                ),
                (format!("{prefix}b"), vec![4 * hidden], Init::Zeros),
            ],
            LayerSpec::Dense { input, output, .. } => vec![
                (
                    format!("{prefix}w"),
                    vec![output, input],
                    Init::Glorot {
                        fan_in: input,
                        fan_out: output,
                    },
                ),
                (format!("{prefix}b"), vec![output], Init::Zeros),
            ],
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![
                (
                    format!("{prefix}w"),
                    vec![out_channels, in_channels, kernel],
                    Init::Glorot {
                        fan_in: in_channels * kernel,
                        fan_out: out_channels * kernel,
                    },
                ),
                (format!("{prefix}b"), vec![out_channels], Init::Zeros),
            ],
            LayerSpec::RepeatVector { .. } => Vec::new(),
        }
    }

    /// Output `(steps, dim)` for an input of shape `(steps, dim)`.
    pub fn output_shape(&self, steps: usize, dim: usize) -> Result<(usize, usize)> {
        let mismatch = |what: &str| Err(Error::Shape(format!("{what} for {self:?}")));
        match *self {
            LayerSpec::Lstm {
                input,
                hidden,
                return_sequences,
            } => {
                if dim != input {
                    return mismatch(&format!("input width {dim}"));
                }
                if steps == 0 {
                    return mismatch("empty sequence");
                }
                Ok((if return_sequences { steps } else { 1 }, hidden))
            }
            LayerSpec::Dense { input, output, .. } => {
                if dim != input {
                    return mismatch(&format!("input width {dim}"));
                }
                Ok((steps, output))
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                if dim != in_channels {
                    return mismatch(&format!("input width {dim}"));
                }
                if kernel == 0 || steps < kernel {
                    return mismatch(&format!("sequence of {steps} steps"));
                }
                Ok((steps - kernel + 1, out_channels))
            }
            LayerSpec::RepeatVector { times } => {
                if steps != 1 {
                    return mismatch(&format!("{steps}-step input"));
                }
                Ok((times, dim))
            }
        }
    }

    /// Forward pass for one sequence. `p` is this layer's parameter slice.
    pub fn forward(&self, p: &[f64], x: Seq) -> (Seq, Cache) {
        match *self {
            LayerSpec::Lstm {
                input,
                hidden,
                return_sequences,
            } => lstm_forward(p, x, input, hidden, return_sequences),
            LayerSpec::Dense {
                input,
                output,
                activation,
            } => {
                let (w, b) = p.split_at(output * input);
                let mut pre = Vec::with_capacity(x.steps * output);
                for t in 0..x.steps {
                    let xt = x.step(t);
                    for (r, bias) in b.iter().enumerate() {
                        pre.push(bias + dot(&w[r * input..(r + 1) * input], xt));
                    }
                }
                let out = Seq {
                    steps: x.steps,
                    dim: output,
                    data: pre.iter().map(|&v| activation.apply(v)).collect(),
                };
                (out, Cache::Dense { input: x, pre })
            }
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                activation,
            } => {
                let (w, b) = p.split_at(out_channels * in_channels * kernel);
                let steps = x.steps - kernel + 1;
                let mut pre = Vec::with_capacity(steps * out_channels);
                for t in 0..steps {
                    for (o, bias) in b.iter().enumerate() {
                        let mut acc = *bias;
                        for j in 0..kernel {
                            let xs = x.step(t + j);
                            for (c, xv) in xs.iter().enumerate() {
                                acc += w[(o * in_channels + c) * kernel + j] * xv;
                            }
                        }
                        pre.push(acc);
                    }
                }
                let out = Seq {
                    steps,
                    dim: out_channels,
                    data: pre.iter().map(|&v| activation.apply(v)).collect(),
                };
                (out, Cache::Conv { input: x, pre })
            }
            LayerSpec::RepeatVector { times } => {
                let mut data = Vec::with_capacity(times * x.dim);
                for _ in 0..times {
                    data.extend_from_slice(&x.data);
                }
                (
                    Seq {
                        steps: times,
                        dim: x.dim,
                        data,
                    },
                    Cache::Repeat,
                )
            }
        }
    }

    /// Backward pass: accumulates parameter gradients into `g` (this layer's
    /// slice) and returns the gradient with respect to the input.
    pub fn backward(&self, p: &[f64], cache: &Cache, dy: &Seq, g: &mut [f64]) -> Seq {
        match (self, cache) {
            (
                LayerSpec::Lstm {
                    input,
                    hidden,
                    return_sequences,
                },
                Cache::Lstm {
                    input: x,
                    h,
                    c,
                    gates,
                    tanh_c,
                },
            ) => lstm_backward(
                p,
                x,
                h,
                c,
                gates,
                tanh_c,
                dy,
                g,
                *input,
                *hidden,
                *return_sequences,
            ),
            (
                LayerSpec::Dense {
                    input,
                    output,
                    activation,
                },
                Cache::Dense { input: x, pre },
            ) => {
                let (input, output) = (*input, *output);
                let (w, _) = p.split_at(output * input);
                let (gw, gb) = g.split_at_mut(output * input);
                let mut dx = Seq::zeros(x.steps, input);
                for t in 0..x.steps {
                    let xt = x.step(t);
                    let dyt = dy.step(t);
                    let dxt = dx.step_mut(t);
                    for r in 0..output {
                        let d = dyt[r] * activation.grad(pre[t * output + r]);
                        if d == 0.0 {
                            continue;
                        }
                        gb[r] += d;
                        axpy(d, xt, &mut gw[r * input..(r + 1) * input]);
                        axpy(d, &w[r * input..(r + 1) * input], dxt);
                    }
                }
                dx
            }
            (
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    activation,
                },
                Cache::Conv { input: x, pre },
            ) => {
                let (cin, cout, k) = (*in_channels, *out_channels, *kernel);
                let (w, _) = p.split_at(cout * cin * k);
                let (gw, gb) = g.split_at_mut(cout * cin * k);
                let mut dx = Seq::zeros(x.steps, cin);
                let steps = x.steps - k + 1;
                for t in 0..steps {
                    for o in 0..cout {
                        let d = dy.data[t * cout + o] * activation.grad(pre[t * cout + o]);
                        if d == 0.0 {
                            continue;
                        }
                        gb[o] += d;
                        for j in 0..k {
                            for ch in 0..cin {
                                let wi = (o * cin + ch) * k + j;
                                gw[wi] += d * x.data[(t + j) * cin + ch];
                                dx.data[(t + j) * cin + ch] += d * w[wi];
                            }
                        }
                    }
                }
                dx
            }
            (LayerSpec::RepeatVector { .. }, Cache::Repeat) => {
                let mut dx = Seq::zeros(1, dy.dim);
                for t in 0..dy.steps {
                    axpy(1.0, dy.step(t), &mut dx.data);
                }
                dx
            }
            _ => unreachable!("cache does not belong to this layer"),
        }
    }
}

fn lstm_forward(
    p: &[f64],
    x: Seq,
    input: usize,
    hidden: usize,
    return_sequences: bool,
) -> (Seq, Cache) {
    let gh = 4 * hidden;
    let w_ih = &p[..gh * input];
    let w_hh = &p[gh * input..gh * (input + hidden)];
    let b = &p[gh * (input + hidden)..];
    let steps = x.steps;

    let mut h = vec![0.0; (steps + 1) * hidden];
    let mut c = vec![0.0; (steps + 1) * hidden];
    let mut gates = vec![0.0; steps * gh];
    let mut tanh_c = vec![0.0; steps * hidden];

    for t in 0..steps {
        let xt = x.step(t);
        let (h_done, h_rest) = h.split_at_mut((t + 1) * hidden);
        let h_prev = &h_done[t * hidden..];
        let z = &mut gates[t * gh..(t + 1) * gh];
        for r in 0..gh {
            z[r] = b[r]
                + dot(&w_ih[r * input..(r + 1) * input], xt)
                + dot(&w_hh[r * hidden..(r + 1) * hidden], h_prev);
        }
        for v in &mut z[..2 * hidden] {
            *v = sigmoid(*v);
        }
        for v in &mut z[2 * hidden..3 * hidden] {
            *v = v.tanh();
        }
        for v in &mut z[3 * hidden..] {
            *v = sigmoid(*v);
        }
        let (c_done, c_rest) = c.split_at_mut((t + 1) * hidden);
        let c_prev = &c_done[t * hidden..];
        let c_t = &mut c_rest[..hidden];
        let h_t = &mut h_rest[..hidden];
        let tc = &mut tanh_c[t * hidden..(t + 1) * hidden];
        for j in 0..hidden {
            let (i, f, g, o) = (z[j], z[hidden + j], z[2 * hidden + j], z[3 * hidden + j]);
            c_t[j] = f * c_prev[j] + i * g;
            tc[j] = c_t[j].tanh();
            h_t[j] = o * tc[j];
        }
    }

    let out = if return_sequences {
        Seq {
            steps,
            dim: hidden,
            data: h[hidden..].to_vec(),
        }
    } else {
        Seq {
            steps: 1,
            dim: hidden,
            data: h[steps * hidden..].to_vec(),
        }
    };
    (
        out,
        Cache::Lstm {
            input: x,
            h,
            c,
            gates,
            tanh_c,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn lstm_backward(
    p: &[f64],
    x: &Seq,
    h: &[f64],
    c: &[f64],
    gates: &[f64],
    tanh_c: &[f64],
    dy: &Seq,
    g: &mut [f64],
    input: usize,
    hidden: usize,
    return_sequences: bool,
) -> Seq {
    let gh = 4 * hidden;
    let w_ih = &p[..gh * input];
    let w_hh = &p[gh * input..gh * (input + hidden)];
    let (g_ih, rest) = g.split_at_mut(gh * input);
    let (g_hh, g_b) = rest.split_at_mut(gh * hidden);
    let steps = x.steps;

    let mut dx = Seq::zeros(steps, input);
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let mut dh = vec![0.0; hidden];
    let mut dz = vec![0.0; gh];

    for t in (0..steps).rev() {
        dh.copy_from_slice(&dh_next);
        if return_sequences {
            axpy(1.0, dy.step(t), &mut dh);
        } else if t == steps - 1 {
            axpy(1.0, dy.step(0), &mut dh);
        }
        let z = &gates[t * gh..(t + 1) * gh];
        let tc = &tanh_c[t * hidden..(t + 1) * hidden];
        let c_prev = &c[t * hidden..(t + 1) * hidden];
        for j in 0..hidden {
            let (i, f, gg, o) = (z[j], z[hidden + j], z[2 * hidden + j], z[3 * hidden + j]);
            let d_o = dh[j] * tc[j];
            let dc = dc_next[j] + dh[j] * o * (1.0 - tc[j] * tc[j]);
            dz[j] = dc * gg * i * (1.0 - i);
            dz[hidden + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * hidden + j] = dc * i * (1.0 - gg * gg);
            dz[3 * hidden + j] = d_o * o * (1.0 - o);
            dc_next[j] = dc * f;
        }

        let xt = x.step(t);
        let h_prev = &h[t * hidden..(t + 1) * hidden];
        let dxt = dx.step_mut(t);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..gh {
            let d = dz[r];
            g_b[r] += d;
            axpy(d, xt, &mut g_ih[r * input..(r + 1) * input]);
            axpy(d, h_prev, &mut g_hh[r * hidden..(r + 1) * hidden]);
            axpy(d, &w_ih[r * input..(r + 1) * input], dxt);
            axpy(d, &w_hh[r * hidden..(r + 1) * hidden], &mut dh_next);
        }
    }
    dx
}
