//! Small dense networks with hand-written backward passes.

use crate::tensor::{Matrix, RandomSource, Vector};

/// Models whose parameters can be viewed as one flat vector.
///
/// Gradients returned by training code use the same ordering as
/// [`params`](Parameterized::params).
pub trait Parameterized {
    fn num_params(&self) -> usize;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, p: &[f64]);
}

/// Affine map `x ↦ W·x + b`, `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vector,
}

impl Dense {
    /// Weights i.i.d. N(0, 1/fan_in), zero bias.
    pub fn init(rng: &mut RandomSource, fan_in: usize, fan_out: usize) -> Self {
        let std = 1.0 / (fan_in as f64).sqrt();
        let w = Matrix::from_fn(fan_out, fan_in, |_, _| std * rng.normal());
        Self {
            w,
            b: Vector::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.w.rows()
    }

    pub fn forward(&self, x: &Vector) -> Vector {
        let mut y = self.w.mul_vec(x);
        y.axpy(1.0, &self.b);
        y
    }

    /// Adds parameter gradients to `grad` (layout `W` row-major, then `b`)
    /// and returns the gradient with respect to the input.
    pub fn backward(&self, x: &Vector, grad_out: &Vector, grad: &mut [f64]) -> Vector {
        let (gw, gb) = grad.split_at_mut(self.w.rows() * self.w.cols());
        let cols = self.w.cols();
        for (i, &go) in grad_out.iter().enumerate() {
            if go == 0.0 {
                continue;
            }
            let row = &mut gw[i * cols..(i + 1) * cols];
            for (g, xv) in row.iter_mut().zip(x) {
                *g += go * xv;
            }
            gb[i] += go;
        }
        self.w.mul_t_vec(grad_out)
    }

    pub fn num_params(&self) -> usize {
        self.w.rows() * self.w.cols() + self.b.len()
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(self.b.as_slice());
    }

    fn read_params(&mut self, p: &[f64]) -> usize {
        let nw = self.w.rows() * self.w.cols();
        self.w.as_mut_slice().copy_from_slice(&p[..nw]);
        let nb = self.b.len();
        self.b.as_mut_slice().copy_from_slice(&p[nw..nw + nb]);
        nw + nb
    }
}

/// Stack of dense layers with `tanh` between them and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer inputs recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    inputs: Vec<Vector>,
    pub output: Vector,
}

impl Mlp {
    /// `sizes = [in, hidden…, out]`.
    pub fn init(rng: &mut RandomSource, sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output sizes");
        let layers = sizes.windows(2).map(|w| Dense::init(rng, w[0], w[1])).collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn forward(&self, x: &Vector) -> Vector {
        self.trace(x).output
    }

    pub fn trace(&self, x: &Vector) -> MlpTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let out = layer.forward(&h);
            inputs.push(h);
            h = if i < last { out.map(f64::tanh) } else { out };
        }
        MlpTrace { inputs, output: h }
    }

    /// Accumulates parameter gradients into `grad` and returns the input gradient.
    pub fn backward(&self, trace: &MlpTrace, grad_out: &Vector, grad: &mut [f64]) -> Vector {
        let offsets = self.offsets();
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let slot = &mut grad[offsets[i]..offsets[i] + layer.num_params()];
            let gin = layer.backward(&trace.inputs[i], &g, slot);
            g = if i > 0 {
                // trace.inputs[i] = tanh(pre-activation of layer i − 1)
                gin.zip_with(&trace.inputs[i], |gv, h| gv * (1.0 - h * h))
            } else {
                gin
            };
        }
        g
    }

    /// Input-gradient only.
    pub fn pullback(&self, x: &Vector, grad_out: &Vector) -> Vector {
        let trace = self.trace(x);
        let mut scratch = vec![0.0; self.num_params()];
        self.backward(&trace, grad_out, &mut scratch)
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.layers
            .iter()
            .map(|l| {
                let o = acc;
                acc += l.num_params();
                o
            })
            .collect()
    }
}

impl Parameterized for Mlp {
    fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            l.write_params(&mut out);
        }
        out
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            at += l.read_params(&p[at..]);
        }
    }
}

impl Parameterized for Dense {
    fn num_params(&self) -> usize {
        Dense::num_params(self)
    }

    fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.write_params(&mut out);
        out
    }

    fn set_params(&mut self, p: &[f64]) {
        self.read_params(p);
    }
}

/// Plain gradient descent with optional heavy-ball momentum.
#[derive(Debug, Clone)]
pub struct Momentum {
    step_size: f64,
    momentum: f64,
    velocity: Vec<f64>,
}

impl Momentum {
    pub fn new(num_params: usize, step_size: f64, momentum: f64) -> Self {
        Self {
            step_size,
            momentum,
            velocity: vec![0.0; num_params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v + g;
            *p -= self.step_size * *v;
        }
    }
}
