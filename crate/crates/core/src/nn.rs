//! Forward-only network primitives over a flat parameter vector.
//!
//! Every learnable scalar of the agent lives in one `Vec<f64>`. A
//! [`ParamLayout`] assigns each named component a disjoint window of that
//! vector, and the forward functions here read weights straight out of
//! the window without any intermediate tensor objects.
//!
//! Weight storage is row-major `out x in`, followed by the bias, layer by
//! layer. A recurrent cell stores its three gates in the order update,
//! reset, candidate, each as `W` (input), `U` (hidden), `b`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

/// Shape of a feedforward network. Hidden layers use `activation`, the
/// output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_layers: usize, hidden_width: usize, output_dim: usize) -> Self {
        MlpSpec {
            input_dim,
            hidden_layers,
            hidden_width,
            output_dim,
            activation: Activation::Tanh,
        }
    }

    /// Single affine map, no hidden layers.
    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        MlpSpec::new(input_dim, 0, 1, output_dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || (self.hidden_layers > 0 && self.hidden_width == 0) {
            return Err(Error::config(format!("degenerate network shape {self:?}")));
        }
        Ok(())
    }

    /// `(in, out)` for every affine layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        let mut prev = self.input_dim;
        for _ in 0..self.hidden_layers {
            dims.push((prev, self.hidden_width));
            prev = self.hidden_width;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|&(i, o)| o * i + o).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GruSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl GruSpec {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        GruSpec { input_dim, hidden_dim }
    }

    fn gate_len(&self) -> usize {
        self.hidden_dim * self.input_dim + self.hidden_dim * self.hidden_dim + self.hidden_dim
    }

    pub fn param_count(&self) -> usize {
        3 * self.gate_len()
    }
}

/// Inner product with four independent accumulators, which lets the
/// compiler vectorize the loop. The summation order is fixed, so results
/// are reproducible across runs and machines.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out = W x + b`, overwriting `out`.
#[inline]
fn affine(weights: &[f64], bias: &[f64], x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(bias.iter().zip(weights.chunks_exact(x.len())).map(|(&b, row)| b + dot(row, x)));
}

/// Evaluates the network on `input`. `params` must hold exactly
/// `spec.param_count()` scalars.
pub fn mlp_forward(params: &[f64], spec: &MlpSpec, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != spec.input_dim {
        return Err(Error::dim("mlp input", spec.input_dim, input.len()));
    }
    if params.len() != spec.param_count() {
        return Err(Error::dim("mlp parameters", spec.param_count(), params.len()));
    }
    let dims = spec.layer_dims();
    let last = dims.len() - 1;
    let mut x = input.to_vec();
    let mut y = Vec::new();
    let mut offset = 0;
    for (layer, &(n_in, n_out)) in dims.iter().enumerate() {
        let w = &params[offset..offset + n_in * n_out];
        let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;
        affine(w, b, &x, &mut y);
        if layer != last {
            for v in &mut y {
                *v = spec.activation.apply(*v);
            }
        }
        std::mem::swap(&mut x, &mut y);
    }
    Ok(x)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One step of a gated recurrent unit:
/// `z = σ(W_z x + U_z h + b_z)`, `r = σ(W_r x + U_r h + b_r)`,
/// `h~ = tanh(W_h x + U_h (r ⊙ h) + b_h)`, `h' = (1 - z) ⊙ h + z ⊙ h~`.
pub fn gru_forward(params: &[f64], spec: &GruSpec, hidden: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    let (ni, nh) = (spec.input_dim, spec.hidden_dim);
    if hidden.len() != nh {
        return Err(Error::dim("gru hidden state", nh, hidden.len()));
    }
    if input.len() != ni {
        return Err(Error::dim("gru input", ni, input.len()));
    }
    if params.len() != spec.param_count() {
        return Err(Error::dim("gru parameters", spec.param_count(), params.len()));
    }
    let gate = spec.gate_len();
    let split = |g: usize| {
        let p = &params[g * gate..(g + 1) * gate];
        (&p[..nh * ni], &p[nh * ni..nh * ni + nh * nh], &p[nh * ni + nh * nh..])
    };
    let gate_pre = |(w, u, b): (&[f64], &[f64], &[f64]), h: &[f64], o: usize| {
        b[o] + dot(&w[o * ni..(o + 1) * ni], input) + dot(&u[o * nh..(o + 1) * nh], h)
    };

    let (upd, rst, cnd) = (split(0), split(1), split(2));
    let rh: Vec<f64> = (0..nh).map(|o| sigmoid(gate_pre(rst, hidden, o)) * hidden[o]).collect();
    Ok((0..nh)
        .map(|o| {
            let z = sigmoid(gate_pre(upd, hidden, o));
            let cand = gate_pre(cnd, &rh, o).tanh();
            (1.0 - z) * hidden[o] + z * cand
        })
        .collect())
}

/// Length-`n` indicator vector. Panics when `index >= n`.
pub fn one_hot(index: usize, n: usize) -> Vec<f64> {
    assert!(index < n, "one_hot index {index} out of range for {n} classes");
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    v
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Generator for `(seed, stream)`. ChaCha is counter based, so every
/// stream is an independent sequence that any process can regenerate.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` standard-normal variates, bit-identical for equal arguments.
pub fn seeded_gaussian(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// SplitMix64 finalizer, used to derive child seeds from structured keys.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut acc: u64 = 0x6A09_E667_F3BC_C909;
    for &p in parts {
        let mut z = acc ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        acc = z ^ (z >> 31);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentShape {
    Mlp(MlpSpec),
    Gru(GruSpec),
}

impl ComponentShape {
    pub fn param_count(&self) -> usize {
        match self {
            ComponentShape::Mlp(s) => s.param_count(),
            ComponentShape::Gru(s) => s.param_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub name: &'static str,
    pub offset: usize,
    pub shape: ComponentShape,
}

impl Component {
    pub fn len(&self) -> usize {
        self.shape.param_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Named, contiguous, non-overlapping windows over the parameter vector,
/// packed in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    components: Vec<Component>,
    total: usize,
}

impl ParamLayout {
    pub fn new(parts: impl IntoIterator<Item = (&'static str, ComponentShape)>) -> Result<Self> {
        let mut components: Vec<Component> = Vec::new();
        let mut offset = 0;
        for (name, shape) in parts {
            if components.iter().any(|c| c.name == name) {
                return Err(Error::config(format!("duplicate layout component {name}")));
            }
            if let ComponentShape::Mlp(s) = &shape {
                s.validate()?;
            }
            let len = shape.param_count();
            components.push(Component { name, offset, shape });
            offset += len;
        }
        Ok(ParamLayout {
            components,
            total: offset,
        })
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }

    /// Draws initial parameters: weights `~ N(0, 1/fan_in)`, biases zero.
    /// Component `i` draws from stream `i` of `seed`, so every process
    /// derives the same vector without communication.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut values = vec![0.0; self.total];
        for (stream, c) in self.components.iter().enumerate() {
            let noise = seeded_gaussian(seed, stream as u64, c.len());
            let window = &mut values[c.range()];
            // (offset, count, fan_in) of every weight block in the window
            let mut blocks = Vec::new();
            let mut at = 0;
            match c.shape {
                ComponentShape::Mlp(spec) => {
                    for (n_in, n_out) in spec.layer_dims() {
                        blocks.push((at, n_out * n_in, n_in));
                        at += n_out * n_in + n_out;
                    }
                }
                ComponentShape::Gru(spec) => {
                    let (ni, nh) = (spec.input_dim, spec.hidden_dim);
                    for _ in 0..3 {
                        blocks.push((at, nh * ni, ni));
                        blocks.push((at + nh * ni, nh * nh, nh));
                        at += nh * ni + nh * nh + nh;
                    }
                }
            }
            for (start, count, fan_in) in blocks {
                let scale = 1.0 / (fan_in as f64).sqrt();
                for i in start..start + count {
                    window[i] = noise[i] * scale;
                }
            }
            debug_assert_eq!(at, c.len());
        }
        values
    }
}

/// The flat vector of every learnable scalar together with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
    layout: Arc<ParamLayout>,
}

impl ParamVector {
    pub fn new(layout: Arc<ParamLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::dim("parameter vector", layout.total_len(), values.len()));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let values = vec![0.0; layout.total_len()];
        ParamVector { values, layout }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Parameters of one component. Panics on an unknown name, which
    /// only happens when layout construction and lookups disagree.
    pub fn slice(&self, name: &str) -> &[f64] {
        let c = self
            .layout
            .component(name)
            .unwrap_or_else(|| panic!("no layout component named {name}"));
        &self.values[c.range()]
    }
}
