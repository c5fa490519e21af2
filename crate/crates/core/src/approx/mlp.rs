//! A small fully connected network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mdp::TAU;
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Identity,
    Cos,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Cos => z.cos(),
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative at pre-activation `z`, given the activation value `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Cos => -z.sin(),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// How a raw state becomes the network input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Featurization {
    /// The state vector as is.
    Raw { dim: usize },
    /// One-hot indicator of the nearest point of an `n`-point ring grid.
    OneHotRing { n: usize },
}

impl Featurization {
    pub fn width(&self) -> usize {
        match self {
            Featurization::Raw { dim } => *dim,
            Featurization::OneHotRing { n } => *n,
        }
    }

    fn write(&self, state: &[f64], out: &mut [f64]) {
        match self {
            Featurization::Raw { .. } => out.copy_from_slice(state),
            Featurization::OneHotRing { n } => {
                out.fill(0.0);
                let k = ((state[0] * *n as f64 / TAU).round() as i64).rem_euclid(*n as i64);
                out[k as usize] = 1.0;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub outputs: usize,
    pub activation: Activation,
    #[serde(default = "default_bias")]
    pub bias: bool,
}

fn default_bias() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input: Featurization,
    pub layers: Vec<LayerSpec>,
}

impl MlpArchitecture {
    /// Hidden layers of the given widths with one activation, then an
    /// identity output layer of width `actions`. Every layer has a bias.
    pub fn dense(
        input: Featurization,
        hidden: &[usize],
        activation: Activation,
        actions: usize,
    ) -> Self {
        let mut layers: Vec<LayerSpec> = hidden
            .iter()
            .map(|&outputs| LayerSpec {
                outputs,
                activation,
                bias: true,
            })
            .collect();
        layers.push(LayerSpec {
            outputs: actions,
            activation: Activation::Identity,
            bias: true,
        });
        Self { input, layers }
    }

    /// Scalar angle in, two 50-unit cosine layers, one output per action.
    pub fn ring(actions: usize) -> Self {
        Self::dense(
            Featurization::Raw { dim: 1 },
            &[50, 50],
            Activation::Cos,
            actions,
        )
    }

    /// Cart-pole state in, one 100-unit ReLU layer.
    pub fn cartpole() -> Self {
        Self::dense(Featurization::Raw { dim: 4 }, &[100], Activation::Relu, 2)
    }

    /// `Q(s, a) = Φ(s, a)ᵀθ` with one-hot `Φ`: a single bias-free linear
    /// layer on one-hot ring features.
    pub fn one_hot_linear(n: usize, actions: usize) -> Self {
        Self {
            input: Featurization::OneHotRing { n },
            layers: vec![LayerSpec {
                outputs: actions,
                activation: Activation::Identity,
                bias: false,
            }],
        }
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// `(fan_in, outputs, bias)` for each layer.
    fn shapes(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        let mut fan_in = self.input.width();
        self.layers.iter().map(move |l| {
            let shape = (fan_in, l.outputs, l.bias);
            fan_in = l.outputs;
            shape
        })
    }

    pub fn num_params(&self) -> usize {
        self.shapes()
            .map(|(i, o, b)| o * i + if b { o } else { 0 })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpQ {
    arch: MlpArchitecture,
    theta: Vec<f64>,
}

/// Per-layer inputs and pre-activations from one forward pass.
struct Tape {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpQ {
    pub fn from_params(arch: MlpArchitecture, theta: Vec<f64>) -> Self {
        assert_eq!(
            theta.len(),
            arch.num_params(),
            "parameter count does not match architecture"
        );
        Self { arch, theta }
    }

    pub fn zeros(arch: MlpArchitecture) -> Self {
        let n = arch.num_params();
        Self::from_params(arch, vec![0.0; n])
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn init(arch: MlpArchitecture, rng: &mut SimRng) -> Self {
        let mut theta = Vec::with_capacity(arch.num_params());
        for (fan_in, outputs, bias) in arch.shapes() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let count = outputs * fan_in + if bias { outputs } else { 0 };
            theta.extend((0..count).map(|_| rng.gen_range(-bound..bound)));
        }
        Self::from_params(arch, theta)
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn num_actions(&self) -> usize {
        self.arch.outputs()
    }

    fn forward(&self, state: &[f64], tape: Option<&mut Tape>) -> Vec<f64> {
        let mut x = vec![0.0; self.arch.input.width()];
        self.arch.input.write(state, &mut x);
        let mut offset = 0;
        let mut tape = tape;
        for ((fan_in, outputs, bias), layer) in self.arch.shapes().zip(&self.arch.layers) {
            let weights = &self.theta[offset..offset + outputs * fan_in];
            offset += outputs * fan_in;
            let mut z = vec![0.0; outputs];
            if bias {
                z.copy_from_slice(&self.theta[offset..offset + outputs]);
                offset += outputs;
            }
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                *zo += dot(row, &x);
            }
            let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            if let Some(t) = tape.as_deref_mut() {
                t.inputs.push(std::mem::replace(&mut x, a));
                t.pre.push(z);
            } else {
                x = a;
            }
        }
        if let Some(t) = tape {
            t.output = x.clone();
        }
        x
    }

    pub fn values(&self, state: &[f64]) -> Vec<f64> {
        self.forward(state, None)
    }

    /// Adds `Σ_b cot_b ∇_θ Q(s, b)` to `grad`.
    pub fn vjp(&self, state: &[f64], cot: &[f64], grad: &mut [f64]) {
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.arch.layers.len()),
            pre: Vec::with_capacity(self.arch.layers.len()),
            output: Vec::new(),
        };
        self.forward(state, Some(&mut tape));
        let shapes: Vec<_> = self.arch.shapes().collect();
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for &(fan_in, outputs, bias) in &shapes {
            offsets.push(offset);
            offset += outputs * fan_in + if bias { outputs } else { 0 };
        }

        let mut upstream = cot.to_vec();
        let mut activ = tape.output;
        for l in (0..shapes.len()).rev() {
            let (fan_in, outputs, bias) = shapes[l];
            let act = self.arch.layers[l].activation;
            let z = &tape.pre[l];
            let input = &tape.inputs[l];
            let dz: Vec<f64> = (0..outputs)
                .map(|o| upstream[o] * act.derivative(z[o], activ[o]))
                .collect();
            let w_off = offsets[l];
            for (o, &d) in dz.iter().enumerate() {
                let row = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                for (g, &xi) in row.iter_mut().zip(input) {
                    *g += d * xi;
                }
            }
            if bias {
                let b_off = w_off + outputs * fan_in;
                for (g, &d) in grad[b_off..b_off + outputs].iter_mut().zip(&dz) {
                    *g += d;
                }
            }
            if l > 0 {
                let weights = &self.theta[w_off..w_off + outputs * fan_in];
                let mut down = vec![0.0; fan_in];
                for (o, &d) in dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &weights[o * fan_in..(o + 1) * fan_in];
                    for (acc, &w) in down.iter_mut().zip(row) {
                        *acc += d * w;
                    }
                }
                upstream = down;
                activ = input.clone();
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
