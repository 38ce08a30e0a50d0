//! Ternary policy iteration: a value net, a gain, and a process-noise net
//! trained together on states produced by a pool of simulated agents.
//!
//! Each outer iteration
//!
//! 0. advances every agent one step of the error dynamics under the
//!    current gain, learned process noise and fixed measurement noise;
//! 1. takes one optimizer step on the value weights against `E[|H|]`,
//!    treating the measurement noise as a constant;
//! 2. takes one step on the gain against `E[H]` and one on the noise net
//!    against `E[−H]`, both evaluated at the pre-update gain and noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{AdamState, GainNet, LinearNoiseNet, Mlp, NoiseNet, Optimizer, QuadraticValueNet, ValueNet};
use crate::error::TpiError;
use crate::game::{self, AnalyticFilter, GameWeights, Mode};
use crate::linalg::{dot, quad_form, Mat};
use crate::plant::{try_rk4_step, LinearPlant};

/// Loss magnitude beyond which training is declared diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    None,
    HalveEvery(usize),
}

impl LrSchedule {
    pub fn factor(&self, iteration: usize) -> f64 {
        match *self {
            LrSchedule::None => 1.0,
            LrSchedule::HalveEvery(n) => 0.5f64.powi((iteration / n.max(1)) as i32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Gd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpiConfig {
    pub alpha_omega: f64,
    pub alpha_theta: f64,
    pub alpha_eta: f64,
    pub num_agents: usize,
    /// Integration step of the agent rollouts, seconds.
    pub dt: f64,
    /// Steps after which an agent is re-sampled.
    pub reset_horizon: usize,
    /// Half-widths of the box initial error states are drawn from.
    pub state_box: Vec<f64>,
    pub iterations: usize,
    pub lr_schedule: LrSchedule,
    pub mode: Mode,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Hidden widths of the Mlp value and noise nets (bounded mode).
    pub hidden: Vec<usize>,
    /// Output range of the Mlp value net.
    pub value_scale: f64,
    /// Quadratic mode: initial value `value_init·‖x̃‖²`. The noise net
    /// starts at its best response to that value.
    pub value_init: f64,
}

impl TpiConfig {
    /// Quadratic-mode defaults: Adam at 0.05, halving every 5000 steps,
    /// starting from a value above the expected saddle.
    pub fn quadratic(n: usize) -> Self {
        Self {
            alpha_omega: 0.05,
            alpha_theta: 0.05,
            alpha_eta: 0.05,
            num_agents: 64,
            dt: 0.005,
            reset_horizon: 400,
            state_box: vec![0.1; n],
            iterations: 25_000,
            lr_schedule: LrSchedule::HalveEvery(5000),
            mode: Mode::Quadratic,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            hidden: vec![64, 64],
            value_scale: 100.0,
            value_init: 10.0,
        }
    }

    /// Bounded-mode defaults: Adam at 1e-2 with 64-64 SELU nets.
    pub fn bounded(n: usize) -> Self {
        Self {
            alpha_omega: 1e-2,
            alpha_theta: 1e-2,
            alpha_eta: 1e-2,
            iterations: 2000,
            lr_schedule: LrSchedule::None,
            mode: Mode::Bounded,
            optimizer: OptimizerKind::Adam,
            ..Self::quadratic(n)
        }
    }

    pub fn for_mode(mode: Mode, n: usize) -> Self {
        match mode {
            Mode::Quadratic => Self::quadratic(n),
            Mode::Bounded => Self::bounded(n),
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), TpiError> {
        let bad = |msg: String| Err(TpiError::InvalidConfig(msg));
        for (name, v) in [
            ("alpha_omega", self.alpha_omega),
            ("alpha_theta", self.alpha_theta),
            ("alpha_eta", self.alpha_eta),
            ("dt", self.dt),
            ("value_scale", self.value_scale),
            ("value_init", self.value_init),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.num_agents == 0 {
            return bad("num_agents must be positive".into());
        }
        if self.reset_horizon == 0 {
            return bad("reset_horizon must be positive".into());
        }
        if self.state_box.len() != n || self.state_box.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return bad(format!("state_box needs {n} positive half-widths"));
        }
        if let LrSchedule::HalveEvery(0) = self.lr_schedule {
            return bad("halve_every period must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        Ok(())
    }
}

/// Plant, weights, and utility mode of the game being solved.
#[derive(Debug, Clone, Copy)]
pub struct GameSpec<'a> {
    pub plant: &'a LinearPlant,
    pub weights: &'a GameWeights,
    pub mode: Mode,
}

impl<'a> GameSpec<'a> {
    pub fn new(plant: &'a LinearPlant, weights: &'a GameWeights, mode: Mode) -> Result<Self, TpiError> {
        weights.check_plant(plant)?;
        weights.check_mode(mode)?;
        Ok(Self { plant, weights, mode })
    }
}

/// The three trained objects.
#[derive(Debug, Clone, PartialEq)]
pub struct TpiNets {
    pub value: ValueNet,
    pub gain: GainNet,
    pub noise: NoiseNet,
}

impl TpiNets {
    /// Mode-appropriate architectures: quadratic/linear nets in quadratic
    /// mode, SELU Mlps in bounded mode. The gain starts at zero.
    ///
    /// In quadratic mode `V₀ = c·‖x̃‖²` with `c = cfg.value_init` and the
    /// noise starts at the worst case against it, `w = (c/γ²)·Q·x̃`.
    /// Starting from a small value instead lets the gain outrun the noise:
    /// the value then collapses and the gain grows without bound.
    pub fn init<R: Rng + ?Sized>(game: &GameSpec<'_>, cfg: &TpiConfig, rng: &mut R) -> Result<Self, TpiError> {
        let n = game.plant.states();
        let r = game.plant.outputs();
        let gain = GainNet::zeros(n, r);
        Ok(match game.mode {
            Mode::Quadratic => {
                let c = cfg.value_init;
                let g2 = game.weights.gamma() * game.weights.gamma();
                Self {
                    value: ValueNet::Quadratic(QuadraticValueNet::from_quadratic_form(&Mat::identity(n).scale(c))),
                    gain,
                    noise: NoiseNet::Linear(LinearNoiseNet::from_matrix(game.weights.q().scale(c / g2))?),
                }
            }
            Mode::Bounded => {
                let mut sizes = vec![n];
                sizes.extend(&cfg.hidden);
                let value_sizes = [sizes.as_slice(), &[1]].concat();
                let noise_sizes = [sizes.as_slice(), &[n]].concat();
                Self {
                    value: ValueNet::Mlp(Mlp::new_random(&value_sizes, vec![cfg.value_scale], rng)?),
                    gain,
                    noise: NoiseNet::Mlp(Mlp::new_random(
                        &noise_sizes,
                        game.weights.bounds().w_bar.clone(),
                        rng,
                    )?),
                }
            }
        })
    }

    /// Quadratic-mode nets placed at the analytic saddle point:
    /// `ω ↔ γ²P⁻¹`, `θ = K*`, `η = P⁻¹Q` (so `w = Q·P⁻¹·x̃`).
    pub fn at_solution(solution: &AnalyticFilter, weights: &GameWeights) -> Result<Self, TpiError> {
        let p_inv = solution.p.inverse()?;
        let g2 = weights.gamma() * weights.gamma();
        Ok(Self {
            value: ValueNet::Quadratic(QuadraticValueNet::from_quadratic_form(&p_inv.scale(g2))),
            gain: GainNet::new(solution.k.clone())?,
            noise: NoiseNet::Linear(LinearNoiseNet::from_matrix(&p_inv * weights.q())?),
        })
    }

    pub fn is_finite(&self) -> bool {
        [self.value.params(), self.gain.params(), self.noise.params()]
            .iter()
            .all(|p| p.iter().all(|v| v.is_finite()))
    }
}

/// Reference weights for relative-error tracking.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub omega: Vec<f64>,
    pub theta: Mat,
}

impl Reference {
    pub fn from_solution(solution: &AnalyticFilter, weights: &GameWeights) -> Result<Self, TpiError> {
        let p_inv = solution.p.inverse()?;
        let g2 = weights.gamma() * weights.gamma();
        Ok(Self {
            omega: QuadraticValueNet::from_quadratic_form(&p_inv.scale(g2)).weights().to_vec(),
            theta: solution.k.clone(),
        })
    }
}

/// `e_ω = ‖ω − ω*‖₂/‖ω*‖₂`, `e_θ = ‖θ − θ*‖_F/‖θ*‖_F`.
pub fn relative_errors(omega: &[f64], theta: &Mat, omega_star: &[f64], theta_star: &Mat) -> Result<(f64, f64), TpiError> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    if omega.len() != omega_star.len() || theta.shape() != theta_star.shape() {
        return Err(TpiError::InvalidConfig("reference shape does not match the nets".into()));
    }
    let (wn, tn) = (norm(omega_star), norm(theta_star.as_slice()));
    if wn == 0.0 || tn == 0.0 {
        return Err(TpiError::ZeroReference);
    }
    Ok((
        dist(omega, omega_star) / wn,
        dist(theta.as_slice(), theta_star.as_slice()) / tn,
    ))
}

/// Everything the losses need at one state.
#[derive(Debug, Clone)]
pub struct StateEval {
    pub grad_v: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    /// `(A − K·C)·x̃ + w − K·v`.
    pub drift: Vec<f64>,
    pub h: f64,
    /// Sum of the magnitudes of the terms making up `h`.
    pub h_scale: f64,
}

/// `|H|` below this fraction of its term magnitudes counts as zero.
pub const H_ZERO_TOL: f64 = 1e-11;

impl StateEval {
    /// `sign(H)` with rounding-level values mapped to 0.
    pub fn h_sign(&self) -> f64 {
        if self.h.abs() <= H_ZERO_TOL * self.h_scale {
            0.0
        } else {
            sign(self.h)
        }
    }
}

pub fn evaluate_state(nets: &TpiNets, game: &GameSpec<'_>, x: &[f64]) -> Result<StateEval, TpiError> {
    let k = nets.gain.gain();
    let grad_v = nets.value.input_gradient(x)?;
    let w = nets.noise.forward(x)?;
    let v = game::fixed_measurement_noise(k, &grad_v, game.weights, game.mode);
    let drift = crate::plant::error_dynamics(game.plant, k, x, &w, &v)?;
    let g2 = game.weights.gamma() * game.weights.gamma();
    let state_cost = quad_form(game.weights.s(), &game.plant.l.mul_vec(x));
    let noise_cost = g2 * (game::process_penalty(&w, game.weights, game.mode)?
        + game::measurement_penalty(&v, game.weights, game.mode)?);
    let h = state_cost - noise_cost + dot(&grad_v, &drift);
    let h_scale = state_cost.abs()
        + noise_cost.abs()
        + grad_v.iter().zip(&drift).map(|(g, f)| (g * f).abs()).sum::<f64>();
    Ok(StateEval {
        grad_v,
        w,
        v,
        drift,
        h,
        h_scale,
    })
}

fn rollout_drift(nets: &TpiNets, game: &GameSpec<'_>, x: &[f64]) -> Result<Vec<f64>, TpiError> {
    let k = nets.gain.gain();
    let grad_v = nets.value.input_gradient(x)?;
    let w = nets.noise.forward(x)?;
    let v = game::fixed_measurement_noise(k, &grad_v, game.weights, game.mode);
    Ok(crate::plant::error_dynamics(game.plant, k, x, &w, &v)?)
}

/// Per-agent error states; the current states form the training batch.
#[derive(Debug, Clone)]
pub struct AgentPool {
    states: Vec<Vec<f64>>,
    steps: Vec<usize>,
    rng: ChaCha8Rng,
    state_box: Vec<f64>,
    reset_horizon: usize,
    resets: usize,
    nonfinite_resets: usize,
}

impl AgentPool {
    pub fn new(cfg: &TpiConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..cfg.num_agents)
            .map(|_| sample_box(&cfg.state_box, &mut rng))
            .collect();
        // Staggered counters so the pool never resets all at once.
        let steps = (0..cfg.num_agents)
            .map(|i| i * cfg.reset_horizon / cfg.num_agents)
            .collect();
        Self {
            states,
            steps,
            rng,
            state_box: cfg.state_box.clone(),
            reset_horizon: cfg.reset_horizon,
            resets: 0,
            nonfinite_resets: 0,
        }
    }

    /// Pool with explicit states (no resets until the horizon).
    pub fn from_states(states: Vec<Vec<f64>>, cfg: &TpiConfig, seed: u64) -> Self {
        let n = states.len();
        Self {
            states,
            steps: vec![0; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            state_box: cfg.state_box.clone(),
            reset_horizon: cfg.reset_horizon,
            resets: 0,
            nonfinite_resets: 0,
        }
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn nonfinite_resets(&self) -> usize {
        self.nonfinite_resets
    }

    fn needs_reset(&self, i: usize) -> bool {
        self.steps[i] > self.reset_horizon
            || self.states[i]
                .iter()
                .zip(&self.state_box)
                .any(|(x, b)| x.abs() > 2.0 * b)
    }

    fn reset(&mut self, i: usize) {
        self.states[i] = sample_box(&self.state_box, &mut self.rng);
        self.steps[i] = 0;
        self.resets += 1;
    }
}

fn sample_box<R: Rng + ?Sized>(half_widths: &[f64], rng: &mut R) -> Vec<f64> {
    half_widths.iter().map(|b| rng.random_range(-b..=*b)).collect()
}

/// Advances every agent one RK4 step of the closed-loop error dynamics and
/// returns the resulting batch. Agents past the horizon, outside twice the
/// state box, or with non-finite states are re-sampled from the box.
pub fn generate_dataset(
    pool: &mut AgentPool,
    nets: &TpiNets,
    game: &GameSpec<'_>,
    dt: f64,
) -> Result<Vec<Vec<f64>>, TpiError> {
    for i in 0..pool.len() {
        let next = try_rk4_step(&pool.states[i], dt, |x| rollout_drift(nets, game, x))?;
        pool.steps[i] += 1;
        if next.iter().all(|v| v.is_finite()) {
            pool.states[i] = next;
            if pool.needs_reset(i) {
                pool.reset(i);
            }
        } else {
            pool.nonfinite_resets += 1;
            pool.reset(i);
        }
    }
    Ok(pool.states.clone())
}

fn check_dataset(dataset: &[Vec<f64>]) -> Result<(), TpiError> {
    if dataset.is_empty() {
        Err(TpiError::EmptyDataset)
    } else {
        Ok(())
    }
}

/// `E[|H|]` over the batch.
pub fn value_loss(dataset: &[Vec<f64>], nets: &TpiNets, game: &GameSpec<'_>) -> Result<f64, TpiError> {
    check_dataset(dataset)?;
    let mut sum = 0.0;
    for x in dataset {
        sum += evaluate_state(nets, game, x)?.h.abs();
    }
    Ok(sum / dataset.len() as f64)
}

/// `E[H]` over the batch; the noise loss is its negation.
pub fn gain_loss(dataset: &[Vec<f64>], nets: &TpiNets, game: &GameSpec<'_>) -> Result<f64, TpiError> {
    check_dataset(dataset)?;
    let mut sum = 0.0;
    for x in dataset {
        sum += evaluate_state(nets, game, x)?.h;
    }
    Ok(sum / dataset.len() as f64)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn accumulate(acc: &mut [f64], g: &[f64], scale: f64) {
    for (a, gi) in acc.iter_mut().zip(g) {
        *a += scale * gi;
    }
}

/// `(E[|H|], ∂E[|H|]/∂ω)` with v held constant: per state
/// `sign(H)·∇_ω[(∂V/∂x̃)ᵀ·f]` with the drift `f` frozen.
pub fn value_loss_gradient(dataset: &[Vec<f64>], nets: &TpiNets, game: &GameSpec<'_>) -> Result<(f64, Vec<f64>), TpiError> {
    check_dataset(dataset)?;
    let scale = 1.0 / dataset.len() as f64;
    let mut grad = vec![0.0; nets.value.params().len()];
    let mut loss = 0.0;
    for x in dataset {
        let ev = evaluate_state(nets, game, x)?;
        loss += ev.h.abs() * scale;
        let s = ev.h_sign();
        if s != 0.0 {
            accumulate(&mut grad, &nets.value.mixed_gradient(x, &ev.drift)?, s * scale);
        }
    }
    Ok((loss, grad))
}

/// `∂H/∂K` at one state with ∂V/∂x̃ held constant, including the chain
/// through the fixed measurement noise `v(K)`.
pub fn hamiltonian_gain_gradient(x: &[f64], ev: &StateEval, nets: &TpiNets, game: &GameSpec<'_>) -> Result<Mat, TpiError> {
    let k = nets.gain.gain();
    let (n, r) = k.shape();
    let g = &ev.grad_v;
    let g2 = game.weights.gamma() * game.weights.gamma();
    // ∂H/∂v = −γ²·∇penalty(v) − Kᵀ·∇V
    let pen = game::measurement_penalty_grad(&ev.v, game.weights, game.mode)?;
    let ktg = k.tr_mul_vec(g);
    let dh_dv: Vec<f64> = pen.iter().zip(&ktg).map(|(p, u)| -g2 * p - u).collect();
    let jac = game::fixed_noise_jacobian(k, g, game.weights, game.mode);
    let through_v = jac.tr_mul_vec(&dh_dv);
    let cx = game.plant.c.mul_vec(x);
    let mut out = Mat::zeros(n, r);
    for i in 0..n {
        for j in 0..r {
            out[(i, j)] = g[i] * (through_v[j] - cx[j] - ev.v[j]);
        }
    }
    Ok(out)
}

/// `(E[H], ∂E[H]/∂θ)`.
pub fn gain_loss_gradient(dataset: &[Vec<f64>], nets: &TpiNets, game: &GameSpec<'_>) -> Result<(f64, Vec<f64>), TpiError> {
    check_dataset(dataset)?;
    let scale = 1.0 / dataset.len() as f64;
    let mut grad = vec![0.0; nets.gain.params().len()];
    let mut loss = 0.0;
    for x in dataset {
        let ev = evaluate_state(nets, game, x)?;
        loss += ev.h * scale;
        let gk = hamiltonian_gain_gradient(x, &ev, nets, game)?;
        accumulate(&mut grad, gk.as_slice(), scale);
    }
    Ok((loss, grad))
}

/// `(E[−H], ∂E[−H]/∂η)`; w enters H through `−γ²·penalty(w)` and the
/// drift term `(∂V/∂x̃)ᵀ·w`.
pub fn noise_loss_gradient(dataset: &[Vec<f64>], nets: &TpiNets, game: &GameSpec<'_>) -> Result<(f64, Vec<f64>), TpiError> {
    check_dataset(dataset)?;
    let scale = 1.0 / dataset.len() as f64;
    let g2 = game.weights.gamma() * game.weights.gamma();
    let mut grad = vec![0.0; nets.noise.params().len()];
    let mut loss = 0.0;
    for x in dataset {
        let ev = evaluate_state(nets, game, x)?;
        loss -= ev.h * scale;
        let pen = game::process_penalty_grad(&ev.w, game.weights, game.mode)?;
        let dh_dw: Vec<f64> = pen.iter().zip(&ev.grad_v).map(|(p, g)| g - g2 * p).collect();
        accumulate(&mut grad, &nets.noise.param_gradient(x, &dh_dw)?, -scale);
    }
    Ok((loss, grad))
}

/// One optimizer step on ω.
pub fn value_update(
    nets: &mut TpiNets,
    dataset: &[Vec<f64>],
    game: &GameSpec<'_>,
    opt: &mut Optimizer,
    lr: f64,
) -> Result<f64, TpiError> {
    let (loss, grad) = value_loss_gradient(dataset, nets, game)?;
    opt.step(nets.value.params_mut(), &grad, lr)?;
    Ok(loss)
}

/// One optimizer step on θ.
pub fn gain_update(
    nets: &mut TpiNets,
    dataset: &[Vec<f64>],
    game: &GameSpec<'_>,
    opt: &mut Optimizer,
    lr: f64,
) -> Result<f64, TpiError> {
    let (loss, grad) = gain_loss_gradient(dataset, nets, game)?;
    opt.step(nets.gain.params_mut(), &grad, lr)?;
    Ok(loss)
}

/// One optimizer step on η.
pub fn noise_update(
    nets: &mut TpiNets,
    dataset: &[Vec<f64>],
    game: &GameSpec<'_>,
    opt: &mut Optimizer,
    lr: f64,
) -> Result<f64, TpiError> {
    let (loss, grad) = noise_loss_gradient(dataset, nets, game)?;
    opt.step(nets.noise.params_mut(), &grad, lr)?;
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    pub iter: usize,
    /// `E[|H|]` before the value step.
    pub value_loss: f64,
    /// `E[H]` after the value step, before the gain step.
    pub gain_loss: f64,
    pub e_omega: Option<f64>,
    pub e_theta: Option<f64>,
}

struct Optimizers {
    value: Optimizer,
    gain: Optimizer,
    noise: Optimizer,
}

impl Optimizers {
    fn new(kind: OptimizerKind, nets: &TpiNets) -> Self {
        let make = |len: usize| match kind {
            OptimizerKind::Gd => Optimizer::Gd,
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new(len)),
        };
        Self {
            value: make(nets.value.params().len()),
            gain: make(nets.gain.params().len()),
            noise: make(nets.noise.params().len()),
        }
    }
}

/// Step-wise trainer; [`train`] runs it to completion.
pub struct Trainer<'a> {
    cfg: TpiConfig,
    game: GameSpec<'a>,
    nets: TpiNets,
    pool: AgentPool,
    opts: Optimizers,
    reference: Option<Reference>,
    iteration: usize,
    records: Vec<TrainRecord>,
}

impl<'a> Trainer<'a> {
    pub fn new(cfg: TpiConfig, game: GameSpec<'a>) -> Result<Self, TpiError> {
        cfg.validate(game.plant.states())?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        init_rng.set_stream(1);
        let nets = TpiNets::init(&game, &cfg, &mut init_rng)?;
        Self::with_nets(cfg, game, nets)
    }

    pub fn with_nets(cfg: TpiConfig, game: GameSpec<'a>, nets: TpiNets) -> Result<Self, TpiError> {
        cfg.validate(game.plant.states())?;
        if cfg.mode != game.mode {
            return Err(TpiError::InvalidConfig(format!(
                "config mode {} does not match game mode {}",
                cfg.mode, game.mode
            )));
        }
        let pool = AgentPool::new(&cfg, cfg.seed);
        let opts = Optimizers::new(cfg.optimizer, &nets);
        Ok(Self {
            cfg,
            game,
            nets,
            pool,
            opts,
            reference: None,
            iteration: 0,
            records: Vec::new(),
        })
    }

    pub fn with_reference(mut self, reference: Reference) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn nets(&self) -> &TpiNets {
        &self.nets
    }

    pub fn into_nets(self) -> TpiNets {
        self.nets
    }

    pub fn records(&self) -> &[TrainRecord] {
        &self.records
    }

    pub fn pool(&self) -> &AgentPool {
        &self.pool
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &TpiConfig {
        &self.cfg
    }

    fn diverged(&self, reason: String) -> TpiError {
        TpiError::Diverged {
            iteration: self.iteration,
            reason,
        }
    }

    /// One outer iteration: dataset, value step, then gain and noise steps.
    pub fn step(&mut self) -> Result<TrainRecord, TpiError> {
        let factor = self.cfg.lr_schedule.factor(self.iteration);
        let dataset = generate_dataset(&mut self.pool, &self.nets, &self.game, self.cfg.dt)?;

        let value_loss = value_update(
            &mut self.nets,
            &dataset,
            &self.game,
            &mut self.opts.value,
            self.cfg.alpha_omega * factor,
        )?;

        // Both gradients at (ω^{k+1}, θ^k, η^k) before either step lands.
        let (gain_loss, gain_grad) = gain_loss_gradient(&dataset, &self.nets, &self.game)?;
        let (_, noise_grad) = noise_loss_gradient(&dataset, &self.nets, &self.game)?;
        self.opts
            .gain
            .step(self.nets.gain.params_mut(), &gain_grad, self.cfg.alpha_theta * factor)?;
        self.opts
            .noise
            .step(self.nets.noise.params_mut(), &noise_grad, self.cfg.alpha_eta * factor)?;

        if !value_loss.is_finite() || !gain_loss.is_finite() {
            return Err(self.diverged("non-finite loss".into()));
        }
        if value_loss > DIVERGENCE_LOSS || gain_loss.abs() > DIVERGENCE_LOSS {
            return Err(self.diverged(format!("loss magnitude exceeded {DIVERGENCE_LOSS:e}")));
        }
        if !self.nets.is_finite() {
            return Err(self.diverged("non-finite parameters".into()));
        }

        let (e_omega, e_theta) = match &self.reference {
            Some(r) => {
                let (eo, et) = relative_errors(self.nets.value.params(), self.nets.gain.gain(), &r.omega, &r.theta)?;
                (Some(eo), Some(et))
            }
            None => (None, None),
        };
        let record = TrainRecord {
            iter: self.iteration,
            value_loss,
            gain_loss,
            e_omega,
            e_theta,
        };
        self.records.push(record);
        self.iteration += 1;
        Ok(record)
    }

    /// Runs until `cfg.iterations` outer iterations have been completed.
    pub fn run(&mut self) -> Result<(), TpiError> {
        while self.iteration < self.cfg.iterations {
            self.step()?;
        }
        Ok(())
    }
}

/// Output of a completed training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub nets: TpiNets,
    pub records: Vec<TrainRecord>,
}

/// Runs ternary policy iteration for `cfg.iterations` iterations.
pub fn train(cfg: &TpiConfig, game: GameSpec<'_>, reference: Option<Reference>) -> Result<TrainOutcome, TpiError> {
    let mut trainer = Trainer::new(cfg.clone(), game)?;
    if let Some(r) = reference {
        trainer = trainer.with_reference(r);
    }
    trainer.run()?;
    Ok(TrainOutcome {
        records: trainer.records.clone(),
        nets: trainer.into_nets(),
    })
}
