//! Function approximators for the value, gain, and process-noise policies,
//! with exact gradients, plus the plain-GD and Adam optimizers.
//!
//! Every net stores its parameters in one flat `Vec<f64>` so optimizers and
//! checkpoints treat all families the same way.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::ApproxError;
use crate::game::saturate;
use crate::linalg::Mat;

pub const SELU_LAMBDA: f64 = 1.0507009873554805;
pub const SELU_ALPHA: f64 = 1.6732632423543772;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[inline]
pub fn selu(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA * z
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp_m1()
    }
}

#[inline]
fn selu_d(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp()
    }
}

#[inline]
fn selu_dd(z: f64) -> f64 {
    if z > 0.0 {
        0.0
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp()
    }
}

fn check_input(x: &[f64], expected: usize) -> Result<(), ApproxError> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(ApproxError::DimensionMismatch {
            expected,
            found: x.len(),
        })
    }
}

/// `V(x̃; ω) = ωᵀσ(x̃)` over all degree-2 monomials `x̃ᵢx̃ⱼ`, `i ≤ j`, in
/// row order (`[x₁², x₁x₂, x₂²]` for n = 2).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticValueNet {
    n: usize,
    omega: Vec<f64>,
}

impl QuadraticValueNet {
    pub fn feature_count(n: usize) -> usize {
        n * (n + 1) / 2
    }

    /// Zero weights except 0.1 on the squared features.
    pub fn new(n: usize) -> Self {
        let mut omega = vec![0.0; Self::feature_count(n)];
        for (k, (i, j)) in Self::pairs(n).enumerate() {
            if i == j {
                omega[k] = 0.1;
            }
        }
        Self { n, omega }
    }

    pub fn from_weights(n: usize, omega: Vec<f64>) -> Result<Self, ApproxError> {
        if omega.len() != Self::feature_count(n) {
            return Err(ApproxError::ShapeMismatch {
                params: Self::feature_count(n),
                grads: omega.len(),
            });
        }
        Ok(Self { n, omega })
    }

    /// Weights reproducing `x̃ᵀ·W·x̃` for a symmetric `W`.
    pub fn from_quadratic_form(w: &Mat) -> Self {
        let n = w.rows();
        let omega = Self::pairs(n)
            .map(|(i, j)| if i == j { w[(i, i)] } else { w[(i, j)] + w[(j, i)] })
            .collect();
        Self { n, omega }
    }

    pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..n).flat_map(move |i| (i..n).map(move |j| (i, j)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.omega
    }

    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        Self::pairs(self.n).map(|(i, j)| x[i] * x[j]).collect()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, ApproxError> {
        check_input(x, self.n)?;
        Ok(self.features(x).iter().zip(&self.omega).map(|(s, w)| s * w).sum())
    }

    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.n)?;
        let mut g = vec![0.0; self.n];
        for ((i, j), w) in Self::pairs(self.n).zip(&self.omega) {
            if i == j {
                g[i] += 2.0 * w * x[i];
            } else {
                g[i] += w * x[j];
                g[j] += w * x[i];
            }
        }
        Ok(g)
    }

    pub fn param_gradient(&self, x: &[f64], upstream: f64) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.n)?;
        Ok(self.features(x).iter().map(|s| upstream * s).collect())
    }

    /// `(∂σ/∂x̃)·c`; independent of ω.
    pub fn mixed_gradient(&self, x: &[f64], c: &[f64]) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.n)?;
        check_input(c, self.n)?;
        Ok(Self::pairs(self.n)
            .map(|(i, j)| if i == j { 2.0 * x[i] * c[i] } else { x[j] * c[i] + x[i] * c[j] })
            .collect())
    }
}

/// `w(x̃; η) = ηᵀ·x̃` with `η` stored row-major (n × n).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNoiseNet {
    eta: Mat,
}

impl LinearNoiseNet {
    pub fn zeros(n: usize) -> Self {
        Self { eta: Mat::zeros(n, n) }
    }

    pub fn from_matrix(eta: Mat) -> Result<Self, ApproxError> {
        if !eta.is_square() {
            return Err(ApproxError::InvalidNet("noise weight must be square".into()));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> &Mat {
        &self.eta
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.eta.rows())?;
        Ok(self.eta.tr_mul_vec(x))
    }

    /// Gradient of `cᵀ·ηᵀ·x̃` with respect to η: the outer product `x̃·cᵀ`.
    pub fn param_gradient(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>, ApproxError> {
        let n = self.eta.rows();
        check_input(x, n)?;
        check_input(upstream, n)?;
        Ok(x.iter().flat_map(|xi| upstream.iter().map(move |c| xi * c)).collect())
    }
}

/// `K(θ) = θ`, an n × r matrix of free parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GainNet {
    theta: Mat,
}

impl GainNet {
    pub fn new(theta: Mat) -> Result<Self, ApproxError> {
        if !theta.is_finite() {
            return Err(ApproxError::InvalidNet("gain has non-finite entries".into()));
        }
        Ok(Self { theta })
    }

    pub fn zeros(n: usize, r: usize) -> Self {
        Self {
            theta: Mat::zeros(n, r),
        }
    }

    pub fn gain(&self) -> &Mat {
        &self.theta
    }

    pub fn params(&self) -> &[f64] {
        self.theta.as_slice()
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        self.theta.as_mut_slice()
    }
}

/// Fully connected net: SELU hidden layers, `range ⊙ tanh` output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
    out_scale: Vec<f64>,
}

struct LayerView {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Forward pass intermediates: `inputs[l]` feeds layer l, `pre[l]` is its
/// pre-activation.
struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    /// Hidden weights drawn N(0, 1/fan_in), zero biases.
    pub fn new_random<R: Rng + ?Sized>(sizes: &[usize], out_scale: Vec<f64>, rng: &mut R) -> Result<Self, ApproxError> {
        let mut net = Self::zeros(sizes, out_scale)?;
        for view in net.layers() {
            let std = 1.0 / (view.fan_in as f64).sqrt();
            for p in &mut net.params[view.w..view.w + view.fan_in * view.fan_out] {
                let z: f64 = StandardNormal.sample(rng);
                *p = std * z;
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize], out_scale: Vec<f64>) -> Result<Self, ApproxError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(ApproxError::InvalidNet(format!("bad layer sizes {sizes:?}")));
        }
        if out_scale.len() != *sizes.last().unwrap() || out_scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(ApproxError::InvalidNet("output range must be positive, one per output".into()));
        }
        let count = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; count],
            out_scale,
        })
    }

    pub fn from_params(sizes: &[usize], out_scale: Vec<f64>, params: Vec<f64>) -> Result<Self, ApproxError> {
        let mut net = Self::zeros(sizes, out_scale)?;
        if params.len() != net.params.len() {
            return Err(ApproxError::ShapeMismatch {
                params: net.params.len(),
                grads: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn out_scale(&self) -> &[f64] {
        &self.out_scale
    }

    pub fn n_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_out(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layers(&self) -> Vec<LayerView> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|s| {
                let view = LayerView {
                    w: off,
                    b: off + s[0] * s[1],
                    fan_in: s[0],
                    fan_out: s[1],
                };
                off += s[0] * s[1] + s[1];
                view
            })
            .collect()
    }

    fn affine(&self, view: &LayerView, a: &[f64]) -> Vec<f64> {
        (0..view.fan_out)
            .map(|o| {
                let row = &self.params[view.w + o * view.fan_in..view.w + (o + 1) * view.fan_in];
                self.params[view.b + o] + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    /// `Wᵀ·δ` for one layer.
    fn affine_transpose(&self, view: &LayerView, delta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; view.fan_in];
        for (o, d) in delta.iter().enumerate() {
            let row = &self.params[view.w + o * view.fan_in..view.w + (o + 1) * view.fan_in];
            for (acc, w) in out.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        out
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let layers = self.layers();
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(layers.len());
        let mut a = x.to_vec();
        for (l, view) in layers.iter().enumerate() {
            let z = self.affine(view, &a);
            inputs.push(a);
            a = if l + 1 < layers.len() {
                z.iter().map(|v| selu(*v)).collect()
            } else {
                Vec::new()
            };
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.n_in())?;
        let trace = self.trace(x);
        let z = trace.pre.last().unwrap();
        Ok(z
            .iter()
            .zip(&self.out_scale)
            .map(|(z, s)| saturate(*s, z.tanh()))
            .collect())
    }

    /// `∂(upstreamᵀ·y)/∂z_L` at the output layer.
    fn output_delta(&self, trace: &Trace, upstream: &[f64]) -> Vec<f64> {
        trace
            .pre
            .last()
            .unwrap()
            .iter()
            .zip(&self.out_scale)
            .zip(upstream)
            .map(|((z, s), u)| {
                let t = z.tanh();
                u * s * (1.0 - t * t)
            })
            .collect()
    }

    /// Gradient of `upstreamᵀ·y(x)` with respect to x.
    pub fn input_vjp(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.n_in())?;
        check_input(upstream, self.n_out())?;
        let trace = self.trace(x);
        let layers = self.layers();
        let mut delta = self.output_delta(&trace, upstream);
        for l in (0..layers.len()).rev() {
            let back = self.affine_transpose(&layers[l], &delta);
            if l == 0 {
                return Ok(back);
            }
            delta = back
                .iter()
                .zip(&trace.pre[l - 1])
                .map(|(b, z)| b * selu_d(*z))
                .collect();
        }
        unreachable!("an Mlp always has at least one layer")
    }

    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>, ApproxError> {
        if self.n_out() != 1 {
            return Err(ApproxError::NotScalarOutput);
        }
        self.input_vjp(x, &[1.0])
    }

    /// Reverse-mode gradient of `upstreamᵀ·y(x)` over all parameters.
    pub fn param_gradient(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>, ApproxError> {
        check_input(x, self.n_in())?;
        check_input(upstream, self.n_out())?;
        let trace = self.trace(x);
        let layers = self.layers();
        let mut grad = vec![0.0; self.params.len()];
        let mut delta = self.output_delta(&trace, upstream);
        for l in (0..layers.len()).rev() {
            let view = &layers[l];
            let a = &trace.inputs[l];
            for (o, d) in delta.iter().enumerate() {
                grad[view.b + o] += d;
                let row = &mut grad[view.w + o * view.fan_in..view.w + (o + 1) * view.fan_in];
                for (g, ai) in row.iter_mut().zip(a) {
                    *g += d * ai;
                }
            }
            if l > 0 {
                delta = self
                    .affine_transpose(view, &delta)
                    .iter()
                    .zip(&trace.pre[l - 1])
                    .map(|(b, z)| b * selu_d(*z))
                    .collect();
            }
        }
        Ok(grad)
    }

    /// `∇_params[(∂V/∂x)ᵀ·c]` for a scalar-output net, by propagating the
    /// tangent along `c` forward and differentiating primal and tangent
    /// together in reverse.
    pub fn mixed_gradient(&self, x: &[f64], c: &[f64]) -> Result<Vec<f64>, ApproxError> {
        if self.n_out() != 1 {
            return Err(ApproxError::NotScalarOutput);
        }
        check_input(x, self.n_in())?;
        check_input(c, self.n_in())?;
        let layers = self.layers();
        let depth = layers.len();

        // Forward: primal (a, z) and tangent (ȧ, ż).
        let mut a_in = Vec::with_capacity(depth);
        let mut a_dot_in = Vec::with_capacity(depth);
        let mut zs = Vec::with_capacity(depth);
        let mut z_dots = Vec::with_capacity(depth);
        let mut a = x.to_vec();
        let mut a_dot = c.to_vec();
        for (l, view) in layers.iter().enumerate() {
            let z = self.affine(view, &a);
            let mut z_dot = self.weight_apply(view, &a_dot);
            a_in.push(std::mem::take(&mut a));
            a_dot_in.push(std::mem::take(&mut a_dot));
            if l + 1 < depth {
                a = z.iter().map(|v| selu(*v)).collect();
                a_dot = z.iter().zip(&z_dot).map(|(v, d)| selu_d(*v) * d).collect();
            }
            zs.push(z);
            z_dots.push(std::mem::take(&mut z_dot));
        }

        // Output J = s·(1 − t²)·ż_L.
        let s = self.out_scale[0];
        let t = zs[depth - 1][0].tanh();
        let sech2 = 1.0 - t * t;
        let mut z_bar = vec![s * (-2.0 * t * sech2) * z_dots[depth - 1][0]];
        let mut z_dot_bar = vec![s * sech2];

        let mut grad = vec![0.0; self.params.len()];
        for l in (0..depth).rev() {
            let view = &layers[l];
            for o in 0..view.fan_out {
                grad[view.b + o] += z_bar[o];
                let row = &mut grad[view.w + o * view.fan_in..view.w + (o + 1) * view.fan_in];
                for ((g, ai), adi) in row.iter_mut().zip(&a_in[l]).zip(&a_dot_in[l]) {
                    *g += z_bar[o] * ai + z_dot_bar[o] * adi;
                }
            }
            if l > 0 {
                let a_bar = self.affine_transpose(view, &z_bar);
                let a_dot_bar = self.affine_transpose(view, &z_dot_bar);
                let z = &zs[l - 1];
                let z_dot = &z_dots[l - 1];
                z_bar = (0..z.len())
                    .map(|i| a_bar[i] * selu_d(z[i]) + a_dot_bar[i] * selu_dd(z[i]) * z_dot[i])
                    .collect();
                z_dot_bar = (0..z.len()).map(|i| a_dot_bar[i] * selu_d(z[i])).collect();
            }
        }
        Ok(grad)
    }

    /// `W·ȧ` without the bias (tangent of the affine map).
    fn weight_apply(&self, view: &LayerView, a_dot: &[f64]) -> Vec<f64> {
        (0..view.fan_out)
            .map(|o| {
                let row = &self.params[view.w + o * view.fan_in..view.w + (o + 1) * view.fan_in];
                row.iter().zip(a_dot).map(|(w, x)| w * x).sum()
            })
            .collect()
    }

    /// Pre-activations of every hidden unit, for kink avoidance in tests.
    pub fn hidden_preactivations(&self, x: &[f64]) -> Vec<f64> {
        let trace = self.trace(x);
        trace.pre[..trace.pre.len() - 1].concat()
    }
}

/// Value approximator families.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueNet {
    Quadratic(QuadraticValueNet),
    Mlp(Mlp),
}

impl ValueNet {
    pub fn value(&self, x: &[f64]) -> Result<f64, ApproxError> {
        match self {
            ValueNet::Quadratic(q) => q.value(x),
            ValueNet::Mlp(m) => {
                if m.n_out() != 1 {
                    return Err(ApproxError::NotScalarOutput);
                }
                Ok(m.forward(x)?[0])
            }
        }
    }

    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>, ApproxError> {
        match self {
            ValueNet::Quadratic(q) => q.input_gradient(x),
            ValueNet::Mlp(m) => m.input_gradient(x),
        }
    }

    pub fn param_gradient(&self, x: &[f64], upstream: f64) -> Result<Vec<f64>, ApproxError> {
        match self {
            ValueNet::Quadratic(q) => q.param_gradient(x, upstream),
            ValueNet::Mlp(m) => {
                if m.n_out() != 1 {
                    return Err(ApproxError::NotScalarOutput);
                }
                m.param_gradient(x, &[upstream])
            }
        }
    }

    pub fn mixed_gradient(&self, x: &[f64], c: &[f64]) -> Result<Vec<f64>, ApproxError> {
        match self {
            ValueNet::Quadratic(q) => q.mixed_gradient(x, c),
            ValueNet::Mlp(m) => m.mixed_gradient(x, c),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            ValueNet::Quadratic(q) => &q.omega,
            ValueNet::Mlp(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            ValueNet::Quadratic(q) => &mut q.omega,
            ValueNet::Mlp(m) => &mut m.params,
        }
    }
}

/// Process-noise approximator families.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseNet {
    Linear(LinearNoiseNet),
    Mlp(Mlp),
}

impl NoiseNet {
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ApproxError> {
        match self {
            NoiseNet::Linear(l) => l.forward(x),
            NoiseNet::Mlp(m) => m.forward(x),
        }
    }

    pub fn param_gradient(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>, ApproxError> {
        match self {
            NoiseNet::Linear(l) => l.param_gradient(x, upstream),
            NoiseNet::Mlp(m) => m.param_gradient(x, upstream),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            NoiseNet::Linear(l) => l.eta.as_slice(),
            NoiseNet::Mlp(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            NoiseNet::Linear(l) => l.eta.as_mut_slice(),
            NoiseNet::Mlp(m) => &mut m.params,
        }
    }
}

/// First/second moment accumulators for Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn check_shapes(params: usize, grads: usize) -> Result<(), ApproxError> {
    if params == grads {
        Ok(())
    } else {
        Err(ApproxError::ShapeMismatch { params, grads })
    }
}

/// Bias-corrected Adam update with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<(), ApproxError> {
    check_shapes(params.len(), grads.len())?;
    check_shapes(params.len(), state.m.len())?;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}

pub fn gd_step(params: &mut [f64], grads: &[f64], lr: f64) -> Result<(), ApproxError> {
    check_shapes(params.len(), grads.len())?;
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

/// Optimizer attached to one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Gd,
    Adam(AdamState),
}

impl Optimizer {
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<(), ApproxError> {
        match self {
            Optimizer::Gd => gd_step(params, grads, lr),
            Optimizer::Adam(state) => adam_step(params, grads, state, lr),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_value_and_gradients() {
        let net = QuadraticValueNet::from_weights(2, vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(net.features(&[1.0, 2.0]), vec![1.0, 2.0, 4.0]);
        assert_eq!(net.value(&[1.0, 2.0]).unwrap(), 7.0);

        let net = QuadraticValueNet::from_weights(2, vec![3.0, -1.0, 2.0]).unwrap();
        let x = [0.5, -1.5];
        let g = net.input_gradient(&x).unwrap();
        assert_eq!(g, vec![2.0 * 3.0 * 0.5 + -1.0 * -1.5, -1.0 * 0.5 + 2.0 * 2.0 * -1.5]);
        assert_eq!(net.input_gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(net.param_gradient(&x, 1.0).unwrap(), net.features(&x));
        assert_eq!(net.mixed_gradient(&x, &[0.0, 0.0]).unwrap(), vec![0.0; 3]);
        assert!(net.value(&[1.0]).is_err());
    }

    #[test]
    fn quadratic_from_form_round_trip() {
        let w = Mat::new(2, 2, vec![2.0, 0.5, 0.5, 1.0]).unwrap();
        let net = QuadraticValueNet::from_quadratic_form(&w);
        assert_eq!(net.weights(), &[2.0, 1.0, 1.0]);
        let x = [0.3, -0.2];
        let direct = crate::linalg::quad_form(&w, &x);
        assert!((net.value(&x).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn quadratic_init_is_psd() {
        let net = QuadraticValueNet::new(3);
        assert_eq!(net.weights(), &[0.1, 0.0, 0.0, 0.1, 0.0, 0.1]);
    }

    #[test]
    fn linear_noise_gradient_is_outer_product() {
        let eta = Mat::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let net = LinearNoiseNet::from_matrix(eta).unwrap();
        assert_eq!(net.forward(&[1.0, 1.0]).unwrap(), vec![4.0, 6.0]);
        assert_eq!(net.forward(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let g = net.param_gradient(&[2.0, 3.0], &[5.0, 7.0]).unwrap();
        assert_eq!(g, vec![10.0, 14.0, 15.0, 21.0]);
    }

    #[test]
    fn zero_mlp_outputs_zero() {
        let net = Mlp::zeros(&[2, 64, 64, 2], vec![0.01, 0.05]).unwrap();
        assert_eq!(net.forward(&[0.3, -0.1]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(net.params().len(), 2 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
    }

    #[test]
    fn mlp_outputs_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = Mlp::new_random(&[2, 16, 16, 2], vec![0.01, 0.05], &mut rng).unwrap();
        for p in net.params_mut() {
            *p *= 50.0;
        }
        for _ in 0..10_000 {
            let x = [rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)];
            let y = net.forward(&x).unwrap();
            assert!(y[0].abs() < 0.01 && y[1].abs() < 0.05);
        }
    }

    #[test]
    fn mlp_scalar_checks() {
        let net = Mlp::zeros(&[2, 4, 2], vec![1.0, 1.0]).unwrap();
        assert_eq!(net.input_gradient(&[0.0, 0.0]), Err(ApproxError::NotScalarOutput));
        assert_eq!(net.mixed_gradient(&[0.0, 0.0], &[1.0, 0.0]), Err(ApproxError::NotScalarOutput));
        assert!(Mlp::zeros(&[2], vec![1.0]).is_err());
        assert!(Mlp::zeros(&[2, 1], vec![0.0]).is_err());
    }

    #[test]
    fn mlp_forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::new_random(&[3, 8, 1], vec![100.0], &mut rng).unwrap();
        let x = [0.1, 0.2, -0.3];
        assert_eq!(net.forward(&x).unwrap()[0].to_bits(), net.forward(&x).unwrap()[0].to_bits());
    }

    #[test]
    fn adam_zero_grad_and_first_step() {
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut st, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        assert_eq!(st.step(), 1);

        // t = 1: m̂ = g, v̂ = g², update = lr·g/(|g| + ε).
        let mut p = vec![1.0, -2.0];
        let mut st = AdamState::new(2);
        let g = [0.3, -4.0];
        adam_step(&mut p, &g, &mut st, 0.01).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let expect = [1.0, -2.0][i] - 0.01 * gi / (gi.abs() + ADAM_EPS);
            assert!((p[i] - expect).abs() < 1e-15);
        }
        assert!(adam_step(&mut p, &[1.0], &mut st, 0.01).is_err());
    }

    #[test]
    fn adam_constant_gradient_is_monotone() {
        let mut p = vec![0.0];
        let mut st = AdamState::new(1);
        let mut prev = p[0];
        for _ in 0..100 {
            adam_step(&mut p, &[2.0], &mut st, 0.01).unwrap();
            assert!(p[0] < prev);
            prev = p[0];
        }
    }

    #[test]
    fn gd_cases() {
        let mut p = vec![1.0];
        gd_step(&mut p, &[2.0], 0.05).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-15);
        let mut p = vec![1.0];
        gd_step(&mut p, &[0.0], 0.05).unwrap();
        gd_step(&mut p, &[3.0], 0.0).unwrap();
        assert_eq!(p, vec![1.0]);
        assert!(gd_step(&mut p, &[1.0, 2.0], 0.1).is_err());
    }
}
