//! A small sequential network over a flat parameter vector, with hand-written
//! backpropagation. Activations are laid out `[channel][row][col]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    /// Weights `[outputs][inputs]` followed by `outputs` biases.
    Dense { inputs: usize, outputs: usize },
    /// Stride 1, zero "same" padding. Weights `[out][in][k][k]` then `out` biases.
    Conv2d { in_channels: usize, out_channels: usize, rows: usize, cols: usize, kernel: usize },
    GlobalAvgPool { channels: usize, rows: usize, cols: usize },
    Act(Activation),
}

impl Layer {
    fn param_count(&self) -> usize {
        match *self {
            Layer::Dense { inputs, outputs } => outputs * inputs + outputs,
            Layer::Conv2d { in_channels, out_channels, kernel, .. } => {
                out_channels * in_channels * kernel * kernel + out_channels
            }
            _ => 0,
        }
    }

    fn output_len(&self, input_len: usize) -> usize {
        match *self {
            Layer::Dense { outputs, .. } => outputs,
            Layer::Conv2d { out_channels, rows, cols, .. } => out_channels * rows * cols,
            Layer::GlobalAvgPool { channels, .. } => channels,
            Layer::Act(_) => input_len,
        }
    }

    fn input_len(&self) -> Option<usize> {
        match *self {
            Layer::Dense { inputs, .. } => Some(inputs),
            Layer::Conv2d { in_channels, rows, cols, .. } => Some(in_channels * rows * cols),
            Layer::GlobalAvgPool { channels, rows, cols } => Some(channels * rows * cols),
            Layer::Act(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    offsets: Vec<usize>,
    param_count: usize,
    input_len: usize,
    output_len: usize,
}

/// Per-layer inputs from a forward pass; the last entry is the network output.
pub struct Trace(Vec<Vec<f64>>);

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.0.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Network {
    pub fn new(input_len: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut len = input_len;
        let mut offsets = Vec::with_capacity(layers.len());
        let mut params = 0;
        for (i, layer) in layers.iter().enumerate() {
            if let Some(expected) = layer.input_len() {
                if expected != len {
                    return Err(Error::invalid(format!("layer {i} expects {expected} inputs, gets {len}")));
                }
            }
            offsets.push(params);
            params += layer.param_count();
            len = layer.output_len(len);
        }
        Ok(Self { layers, offsets, param_count: params, input_len, output_len: len })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(&self, rng: &mut StreamRng) -> Vec<f64> {
        let mut theta = vec![0.0; self.param_count];
        for (layer, &off) in self.layers.iter().zip(&self.offsets) {
            let (weights, fan_in, fan_out) = match *layer {
                Layer::Dense { inputs, outputs } => (inputs * outputs, inputs, outputs),
                Layer::Conv2d { in_channels, out_channels, kernel, .. } => (
                    out_channels * in_channels * kernel * kernel,
                    in_channels * kernel * kernel,
                    out_channels * kernel * kernel,
                ),
                _ => continue,
            };
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut theta[off..off + weights] {
                *w = rng.random_range(-a..=a);
            }
        }
        theta
    }

    pub fn forward(&self, theta: &[f64], x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        for (layer, &off) in self.layers.iter().zip(&self.offsets) {
            cur = forward_layer(layer, &theta[off..off + layer.param_count()], &cur);
        }
        cur
    }

    pub fn forward_trace(&self, theta: &[f64], x: &[f64]) -> Trace {
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(x.to_vec());
        for (layer, &off) in self.layers.iter().zip(&self.offsets) {
            let next = forward_layer(layer, &theta[off..off + layer.param_count()], trace.last().unwrap());
            trace.push(next);
        }
        Trace(trace)
    }

    /// Accumulates `d(objective)/d(theta)` into `grad` given `d(objective)/d(output)`.
    pub fn backward(&self, theta: &[f64], trace: &Trace, grad_output: &[f64], grad: &mut [f64]) {
        let mut g = grad_output.to_vec();
        for (i, (layer, &off)) in self.layers.iter().zip(&self.offsets).enumerate().rev() {
            let n = layer.param_count();
            let input = &trace.0[i];
            let output = &trace.0[i + 1];
            g = backward_layer(layer, &theta[off..off + n], input, output, &g, &mut grad[off..off + n]);
        }
    }
}

fn forward_layer(layer: &Layer, p: &[f64], x: &[f64]) -> Vec<f64> {
    match *layer {
        Layer::Dense { inputs, outputs } => {
            let (w, b) = p.split_at(inputs * outputs);
            (0..outputs)
                .map(|o| b[o] + w[o * inputs..(o + 1) * inputs].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .collect()
        }
        Layer::Conv2d { in_channels, out_channels, rows, cols, kernel } => {
            let (w, b) = p.split_at(out_channels * in_channels * kernel * kernel);
            let pad = (kernel / 2) as isize;
            let mut out = vec![0.0; out_channels * rows * cols];
            for o in 0..out_channels {
                for r in 0..rows {
                    for c in 0..cols {
                        let mut acc = b[o];
                        for i in 0..in_channels {
                            for kr in 0..kernel {
                                let sr = r as isize + kr as isize - pad;
                                if sr < 0 || sr >= rows as isize {
                                    continue;
                                }
                                for kc in 0..kernel {
                                    let sc = c as isize + kc as isize - pad;
                                    if sc < 0 || sc >= cols as isize {
                                        continue;
                                    }
                                    acc += w[((o * in_channels + i) * kernel + kr) * kernel + kc]
                                        * x[(i * rows + sr as usize) * cols + sc as usize];
                                }
                            }
                        }
                        out[(o * rows + r) * cols + c] = acc;
                    }
                }
            }
            out
        }
        Layer::GlobalAvgPool { channels, rows, cols } => {
            let area = rows * cols;
            (0..channels).map(|ch| x[ch * area..(ch + 1) * area].iter().sum::<f64>() / area as f64).collect()
        }
        Layer::Act(Activation::Tanh) => x.iter().map(|v| v.tanh()).collect(),
        Layer::Act(Activation::Relu) => x.iter().map(|v| v.max(0.0)).collect(),
    }
}

fn backward_layer(layer: &Layer, p: &[f64], x: &[f64], y: &[f64], gy: &[f64], gp: &mut [f64]) -> Vec<f64> {
    match *layer {
        Layer::Dense { inputs, outputs } => {
            let (w, _) = p.split_at(inputs * outputs);
            let (gw, gb) = gp.split_at_mut(inputs * outputs);
            let mut gx = vec![0.0; inputs];
            for o in 0..outputs {
                let g = gy[o];
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                let row = o * inputs;
                for j in 0..inputs {
                    gw[row + j] += g * x[j];
                    gx[j] += g * w[row + j];
                }
            }
            gx
        }
        Layer::Conv2d { in_channels, out_channels, rows, cols, kernel } => {
            let nw = out_channels * in_channels * kernel * kernel;
            let w = &p[..nw];
            let (gw, gb) = gp.split_at_mut(nw);
            let pad = (kernel / 2) as isize;
            let mut gx = vec![0.0; in_channels * rows * cols];
            for o in 0..out_channels {
                for r in 0..rows {
                    for c in 0..cols {
                        let g = gy[(o * rows + r) * cols + c];
                        gb[o] += g;
                        for i in 0..in_channels {
                            for kr in 0..kernel {
                                let sr = r as isize + kr as isize - pad;
                                if sr < 0 || sr >= rows as isize {
                                    continue;
                                }
                                for kc in 0..kernel {
                                    let sc = c as isize + kc as isize - pad;
                                    if sc < 0 || sc >= cols as isize {
                                        continue;
                                    }
                                    let wi = ((o * in_channels + i) * kernel + kr) * kernel + kc;
                                    let xi = (i * rows + sr as usize) * cols + sc as usize;
                                    gw[wi] += g * x[xi];
                                    gx[xi] += g * w[wi];
                                }
                            }
                        }
                    }
                }
            }
            gx
        }
        Layer::GlobalAvgPool { channels, rows, cols } => {
            let area = rows * cols;
            let mut gx = vec![0.0; channels * area];
            for ch in 0..channels {
                let g = gy[ch] / area as f64;
                gx[ch * area..(ch + 1) * area].iter_mut().for_each(|v| *v = g);
            }
            gx
        }
        Layer::Act(Activation::Tanh) => gy.iter().zip(y).map(|(g, t)| g * (1.0 - t * t)).collect(),
        Layer::Act(Activation::Relu) => gy.iter().zip(x).map(|(g, v)| if *v > 0.0 { *g } else { 0.0 }).collect(),
    }
}

/// Central-difference gradient, `h` per coordinate.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = t[i];
            t[i] = orig + h;
            let up = f(&t);
            t[i] = orig - h;
            let down = f(&t);
            t[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}
