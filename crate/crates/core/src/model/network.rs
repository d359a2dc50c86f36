use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoder::EncodedBatch;
use crate::error::{DcpfError, Result};
use crate::mc::stream_rng;
use crate::scalar::{sigmoid, softplus, Scalar};

/// Upper end of the `α` range is `1 + ALPHA_SPAN`.
pub const ALPHA_SPAN: f64 = 20.0;
/// `ρ¹` lies in `[0, RHO1_MAX]`.
pub const RHO1_MAX: f64 = 12.0;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/π)
const GELU_K: f64 = 0.044_715;

/// Tanh approximation of GeLU.
#[inline]
pub fn gelu<T: Scalar>(x: T) -> T {
    let u = T::of(GELU_C) * (x + T::of(GELU_K) * x * x * x);
    T::of(0.5) * x * (T::one() + u.tanh_fast())
}

#[inline]
pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let u = T::of(GELU_C) * (x + T::of(GELU_K) * x2 * x);
    let t = u.tanh_fast();
    let du = T::of(GELU_C) * (T::one() + T::of(3.0 * GELU_K) * x2);
    T::of(0.5) * (T::one() + t) + T::of(0.5) * x * (T::one() - t * t) * du
}

/// Hidden-layer sizes of the two networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub main_width: usize,
    pub main_depth: usize,
    pub shaping_width: usize,
    pub shaping_depth: usize,
}

impl Arch {
    /// 4×256 main net, 3×128 shaping net.
    pub fn desk() -> Self {
        Arch {
            main_width: 256,
            main_depth: 4,
            shaping_width: 128,
            shaping_depth: 3,
        }
    }

    /// 6×1024 main net, 3×512 shaping net.
    pub fn full() -> Self {
        Arch {
            main_width: 1024,
            main_depth: 6,
            shaping_width: 512,
            shaping_depth: 3,
        }
    }

    /// Parses a main-net size `"WxD"`; the shaping net keeps its desk size.
    pub fn parse_main(s: &str) -> Result<Self> {
        let (w, d) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| DcpfError::invalid(format!("architecture {s:?} is not of the form WxD")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| DcpfError::invalid(format!("bad architecture size {v:?}")))
        };
        let arch = Arch {
            main_width: parse(w)?,
            main_depth: parse(d)?,
            ..Arch::desk()
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.main_width == 0 || self.main_depth == 0 || self.shaping_width == 0 || self.shaping_depth == 0 {
            return Err(DcpfError::invalid("network widths and depths must be >= 1"));
        }
        Ok(())
    }
}

impl Default for Arch {
    fn default() -> Self {
        Arch::desk()
    }
}

/// Fully connected layer `y = xW + b`, `W` stored `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    /// Fan-in uniform init `U(−1/√in, 1/√in)` for weights and bias.
    pub fn init<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let k = 1.0 / (fan_in as f64).sqrt();
        let mut draw = || T::of(rng.gen_range(-k..k));
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), &mut draw);
        let b = Array1::from_shape_simple_fn(fan_out, &mut draw);
        Dense { w, b }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            w: Array2::zeros((fan_in, fan_out)),
            b: Array1::zeros(fan_out),
        }
    }

    pub fn apply(&self, x: &Array2<T>) -> Array2<T> {
        let mut z = x.dot(&self.w);
        z += &self.b;
        z
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }
}

/// GeLU hidden layers followed by a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

/// Layer inputs and hidden pre-activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct MlpCache<T> {
    /// Input of every layer, the network input first.
    pub inputs: Vec<Array2<T>>,
    /// Pre-activations of the hidden layers.
    pub pre: Vec<Array2<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn init<R: Rng + ?Sized>(input: usize, width: usize, depth: usize, output: usize, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(depth + 1);
        let mut fan_in = input;
        for _ in 0..depth {
            layers.push(Dense::init(fan_in, width, rng));
            fan_in = width;
        }
        layers.push(Dense::init(fan_in, output, rng));
        Mlp { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Mlp {
            layers: self.layers.iter().map(|l| Dense::zeros(l.fan_in(), l.fan_out())).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.fan_out())
    }

    pub fn forward(&self, x: &Array2<T>) -> Array2<T> {
        let (last, hidden) = self.layers.split_last().expect("at least one layer");
        let mut a = None;
        for l in hidden {
            let mut z = l.apply(a.as_ref().unwrap_or(x));
            z.mapv_inplace(gelu);
            a = Some(z);
        }
        last.apply(a.as_ref().unwrap_or(x))
    }

    pub fn forward_cached(&self, x: &Array2<T>) -> (Array2<T>, MlpCache<T>) {
        let (last, hidden) = self.layers.split_last().expect("at least one layer");
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(hidden.len());
        inputs.push(x.clone());
        for l in hidden {
            let z = l.apply(inputs.last().unwrap());
            inputs.push(z.mapv(gelu));
            pre.push(z);
        }
        let out = last.apply(inputs.last().unwrap());
        (out, MlpCache { inputs, pre })
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }
}

/// Per-query network outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heads<T> {
    pub p_hat: T,
    pub f: T,
    pub alpha1: T,
    pub alpha2: T,
    pub rho1: T,
    pub rho2: T,
    pub sigma1: T,
    pub sigma2: T,
}

impl<T: Scalar> Heads<T> {
    /// Applies the head activations to the raw outputs `zf` (main net) and
    /// `z` (shaping net) and combines them at distance `dist`.
    #[inline]
    pub fn from_raw(zf: T, z: [T; 4], dist: T) -> Self {
        let f = sigmoid(zf);
        let alpha1 = T::one() + T::of(ALPHA_SPAN) * sigmoid(z[0]);
        let alpha2 = T::one() + T::of(ALPHA_SPAN) * sigmoid(z[1]);
        let rho1 = T::of(RHO1_MAX) * sigmoid(z[2]);
        let rho2 = softplus(z[3]);
        let sigma1 = sigmoid(alpha1 * (rho1 - dist));
        let sigma2 = sigmoid(-alpha2 * (rho2 - dist));
        let p_hat = (T::one() - sigma1) * (T::one() - sigma2) * f + sigma1;
        Heads {
            p_hat,
            f,
            alpha1,
            alpha2,
            rho1,
            rho2,
            sigma1,
            sigma2,
        }
    }
}

/// Raw outputs of both networks for a batch.
#[derive(Debug, Clone)]
pub struct RawOutputs<T> {
    /// `B × 1`.
    pub main: Array2<T>,
    /// `B × 4`.
    pub shaping: Array2<T>,
}

impl<T: Scalar> RawOutputs<T> {
    pub fn heads(&self, dist: &Array1<T>) -> Vec<Heads<T>> {
        (0..dist.len())
            .map(|i| {
                let s = self.shaping.row(i);
                Heads::from_raw(self.main[[i, 0]], [s[0], s[1], s[2], s[3]], dist[i])
            })
            .collect()
    }
}

/// Weights of the main probability net and the shaping net.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub main: Mlp<T>,
    pub shaping: Mlp<T>,
}

impl<T: Scalar> NetworkParams<T> {
    pub fn init(arch: &Arch, main_input: usize, shaping_input: usize, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = stream_rng(seed, 0);
        let main = Mlp::init(main_input, arch.main_width, arch.main_depth, 1, &mut rng);
        let mut rng = stream_rng(seed, 1);
        let shaping = Mlp::init(shaping_input, arch.shaping_width, arch.shaping_depth, 4, &mut rng);
        Ok(NetworkParams { main, shaping })
    }

    pub fn zeros_like(&self) -> Self {
        NetworkParams {
            main: self.main.zeros_like(),
            shaping: self.shaping.zeros_like(),
        }
    }

    pub fn arch(&self) -> Arch {
        Arch {
            main_width: self.main.layers[0].fan_out(),
            main_depth: self.main.layers.len() - 1,
            shaping_width: self.shaping.layers[0].fan_out(),
            shaping_depth: self.shaping.layers.len() - 1,
        }
    }

    pub fn n_params(&self) -> usize {
        self.main.n_params() + self.shaping.n_params()
    }

    /// Every tensor in storage order: main layers then shaping layers, each
    /// weights then bias.
    pub fn tensors(&self) -> Vec<&[T]> {
        self.main
            .layers
            .iter()
            .chain(&self.shaping.layers)
            .flat_map(|l| [l.w.as_slice().expect("standard layout"), l.b.as_slice().unwrap()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        self.main
            .layers
            .iter_mut()
            .chain(&mut self.shaping.layers)
            .flat_map(|l| [l.w.as_slice_mut().expect("standard layout"), l.b.as_slice_mut().unwrap()])
            .collect()
    }

    /// Tensor shapes in storage order, `(rows, cols)` with biases as `(1, n)`.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.main
            .layers
            .iter()
            .chain(&self.shaping.layers)
            .flat_map(|l| [l.w.dim(), (1, l.b.len())])
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> NetworkParams<U> {
        let conv = |m: &Mlp<T>| Mlp {
            layers: m
                .layers
                .iter()
                .map(|l| Dense {
                    w: l.w.mapv(|v| U::of(v.to_f64_lossless())),
                    b: l.b.mapv(|v| U::of(v.to_f64_lossless())),
                })
                .collect(),
        };
        NetworkParams {
            main: conv(&self.main),
            shaping: conv(&self.shaping),
        }
    }

    pub fn forward_raw(&self, x: &EncodedBatch<T>) -> RawOutputs<T> {
        RawOutputs {
            main: self.main.forward(&x.main),
            shaping: self.shaping.forward(&x.shaping),
        }
    }

    pub fn forward(&self, x: &EncodedBatch<T>) -> Vec<Heads<T>> {
        self.forward_raw(x).heads(&x.dist)
    }

    /// `p̂` for every row of the batch.
    pub fn predict(&self, x: &EncodedBatch<T>) -> Array1<T> {
        let raw = self.forward_raw(x);
        Array1::from_iter(raw.heads(&x.dist).into_iter().map(|h| h.p_hat))
    }

    /// Head biases of the shaping output layer, in the order `α¹, α², ρ¹, ρ²`.
    pub fn shaping_bias_mut(&mut self) -> &mut Array1<T> {
        &mut self.shaping.layers.last_mut().unwrap().b
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::encoder::{FourierConfig, FourierEncoder};

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0f64), 0.0);
        assert!((gelu(1.0f64) - 0.841_191_990).abs() < 1e-8);
        assert!(gelu(-10.0f64).abs() < 1e-12);
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn hand_set_heads_far_and_near() {
        // α = 21, ρ¹ = 5, ρ² = 6, f = 0.5
        let inv_sig = |p: f64| (p / (1.0 - p)).ln();
        let z = [1e3, 1e3, inv_sig(5.0 / 12.0), (6.0f64.exp() - 1.0).ln()];
        let far = Heads::from_raw(0.0, z, 20.0);
        assert!((far.alpha1 - 21.0).abs() < 1e-12 && (far.rho1 - 5.0).abs() < 1e-12);
        assert!((far.rho2 - 6.0).abs() < 1e-12);
        assert!(far.sigma1 < 1e-100 && far.sigma2 > 1.0 - 1e-12);
        assert!(far.p_hat <= 1e-6);
        let near = Heads::from_raw(0.0, z, 0.0);
        assert!(near.p_hat >= 1.0 - 1e-6);
        assert_eq!(near.f, 0.5);
    }

    #[test]
    fn parse_arch() {
        let a = Arch::parse_main("512x3").unwrap();
        assert_eq!((a.main_width, a.main_depth, a.shaping_width), (512, 3, 128));
        assert!(Arch::parse_main("512").is_err());
        assert!(Arch::parse_main("0x3").is_err());
    }

    #[test]
    fn shapes_and_counts() {
        let arch = Arch {
            main_width: 8,
            main_depth: 2,
            shaping_width: 4,
            shaping_depth: 1,
        };
        let p = NetworkParams::<f64>::init(&arch, 10, 6, 1).unwrap();
        assert_eq!(p.arch(), arch);
        assert_eq!(p.n_params(), (10 * 8 + 8) + (8 * 8 + 8) + (8 + 1) + (6 * 4 + 4) + (4 * 4 + 4));
        assert_eq!(p.tensors().len(), p.shapes().len());
        let total: usize = p.shapes().iter().map(|(r, c)| r * c).sum();
        assert_eq!(total, p.n_params());
        let bound = 1.0 / 10f64.sqrt();
        assert!(p.main.layers[0].w.iter().all(|v| v.abs() < bound));
    }

    #[test]
    fn cached_forward_matches_plain() {
        let enc = FourierEncoder::new(FourierConfig::default(), 3).unwrap();
        let p = NetworkParams::<f64>::init(&Arch::desk(), enc.main_dim(), enc.shaping_dim(), 2).unwrap();
        let rows = [[1.0, 2.0, 0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 0.1, 0.1]; 3];
        let x = enc.encode_batch::<f64>(&rows).unwrap();
        let (out, cache) = p.main.forward_cached(&x.main);
        assert_eq!(out, p.main.forward(&x.main));
        assert_eq!(cache.inputs.len(), 5);
        assert_eq!(cache.pre.len(), 4);
        for h in p.forward(&x) {
            assert!((0.0..=1.0).contains(&h.p_hat));
        }
    }

    #[test]
    fn cast_round_trip_is_exact() {
        let p = NetworkParams::<f32>::init(&Arch::desk(), 128, 128, 9).unwrap();
        assert_eq!(p.cast::<f64>().cast::<f32>(), p);
    }
}
