//! The zero-sum estimation game: utilities, Hamiltonian, worst-case noise,
//! the fixed measurement noise v(K), and the analytic H∞ / Kalman gains.
//!
//! Two utility modes share one Hamiltonian:
//!
//! * `Quadratic`: noise is charged `‖w‖²_{Q⁻¹} + ‖v‖²_{R⁻¹}`.
//! * `Bounded`: noise is charged the nonquadratic penalty
//!   `F(w) = 2·∫₀^w atanh(W̄⁻¹s)ᵀ·W̄·Q ds`, whose maximizer is a
//!   tanh-saturated noise that never leaves `(−w̄, w̄)`.
//!
//! Bounded mode evaluates `F` componentwise and therefore needs diagonal
//! `Q` and `R`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::linalg::{self, dot, quad_form, Mat};
use crate::plant::{LinearPlant, NoiseBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Quadratic,
    Bounded,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Quadratic => "quadratic",
            Mode::Bounded => "bounded",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quadratic" => Ok(Mode::Quadratic),
            "bounded" => Ok(Mode::Bounded),
            other => Err(format!("unknown mode '{other}' (expected quadratic or bounded)")),
        }
    }
}

/// Weights Q, R, S, attenuation level γ, and noise bounds of the game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameWeights {
    q: Mat,
    r: Mat,
    s: Mat,
    gamma: f64,
    bounds: NoiseBounds,
    q_inv: Mat,
    r_inv: Mat,
}

impl GameWeights {
    pub fn new(q: Mat, r: Mat, s: Mat, gamma: f64, bounds: NoiseBounds) -> Result<Self, GameError> {
        for (name, m) in [("Q", &q), ("R", &r), ("S", &s)] {
            if !m.is_symmetric(1e-12) || !m.is_positive_definite() {
                return Err(GameError::NotPositiveDefinite(name));
            }
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(GameError::InvalidGamma(gamma));
        }
        if bounds.w_bar.len() != q.rows() {
            return Err(GameError::DimensionMismatch {
                what: "w_bar",
                expected: q.rows(),
                found: bounds.w_bar.len(),
            });
        }
        if bounds.v_bar.len() != r.rows() {
            return Err(GameError::DimensionMismatch {
                what: "v_bar",
                expected: r.rows(),
                found: bounds.v_bar.len(),
            });
        }
        let q_inv = q.inverse()?;
        let r_inv = r.inverse().map_err(|_| GameError::SingularR)?;
        Ok(Self {
            q,
            r,
            s,
            gamma,
            bounds,
            q_inv,
            r_inv,
        })
    }

    pub fn q(&self) -> &Mat {
        &self.q
    }
    pub fn r(&self) -> &Mat {
        &self.r
    }
    pub fn s(&self) -> &Mat {
        &self.s
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn bounds(&self) -> &NoiseBounds {
        &self.bounds
    }
    pub fn r_inv(&self) -> &Mat {
        &self.r_inv
    }

    /// Fails for bounded mode unless Q and R are diagonal.
    pub fn check_mode(&self, mode: Mode) -> Result<(), GameError> {
        if mode == Mode::Bounded {
            if !self.q.is_diagonal() {
                return Err(GameError::NotDiagonal("Q"));
            }
            if !self.r.is_diagonal() {
                return Err(GameError::NotDiagonal("R"));
            }
        }
        Ok(())
    }

    pub fn check_plant(&self, plant: &LinearPlant) -> Result<(), GameError> {
        let dims = [
            ("Q", self.q.rows(), plant.states()),
            ("R", self.r.rows(), plant.outputs()),
            ("S", self.s.rows(), plant.l.rows()),
        ];
        for (what, found, expected) in dims {
            if found != expected {
                return Err(GameError::DimensionMismatch { what, expected, found });
            }
        }
        Ok(())
    }

    fn two_gamma_sq(&self) -> f64 {
        2.0 * self.gamma * self.gamma
    }
}

/// `tanh` output scaled by `bound`, kept strictly inside `(−bound, bound)`
/// even where `tanh` rounds to ±1.
pub fn saturate(bound: f64, t: f64) -> f64 {
    let w = bound * t;
    if w.abs() >= bound {
        bound.next_down().copysign(t)
    } else {
        w
    }
}

fn check_interior(noise: &[f64], bounds: &[f64]) -> Result<(), GameError> {
    for (index, (&value, &bound)) in noise.iter().zip(bounds).enumerate() {
        if !(value.abs() < bound) {
            return Err(GameError::OutOfDomain { index, value, bound });
        }
    }
    Ok(())
}

fn check_same_len(what: &'static str, a: &[f64], expected: usize) -> Result<(), GameError> {
    if a.len() == expected {
        Ok(())
    } else {
        Err(GameError::DimensionMismatch {
            what,
            expected,
            found: a.len(),
        })
    }
}

/// Nonquadratic noise penalty in closed form (diagonal weight):
/// `F = 2·Σᵢ qᵢ·w̄ᵢ·[wᵢ·atanh(wᵢ/w̄ᵢ) + (w̄ᵢ/2)·ln(1 − wᵢ²/w̄ᵢ²)]`.
pub fn nq_penalty(noise: &[f64], bounds_diag: &[f64], weight_diag: &[f64]) -> Result<f64, GameError> {
    check_same_len("penalty bounds", bounds_diag, noise.len())?;
    check_same_len("penalty weights", weight_diag, noise.len())?;
    check_interior(noise, bounds_diag)?;
    Ok(noise
        .iter()
        .zip(bounds_diag)
        .zip(weight_diag)
        .map(|((&w, &wb), &q)| {
            let w = w.abs();
            let ratio = w / wb;
            2.0 * q * wb * (w * ratio.atanh() + 0.5 * wb * (-ratio * ratio).ln_1p())
        })
        .sum())
}

/// Gradient of [`nq_penalty`]: `2·qᵢ·w̄ᵢ·atanh(wᵢ/w̄ᵢ)`.
pub fn nq_penalty_grad(noise: &[f64], bounds_diag: &[f64], weight_diag: &[f64]) -> Result<Vec<f64>, GameError> {
    check_same_len("penalty bounds", bounds_diag, noise.len())?;
    check_same_len("penalty weights", weight_diag, noise.len())?;
    check_interior(noise, bounds_diag)?;
    Ok(noise
        .iter()
        .zip(bounds_diag)
        .zip(weight_diag)
        .map(|((&w, &wb), &q)| 2.0 * q * wb * (w / wb).atanh())
        .collect())
}

/// Process-noise charge `F(w)` or `‖w‖²_{Q⁻¹}` depending on the mode.
pub fn process_penalty(w: &[f64], weights: &GameWeights, mode: Mode) -> Result<f64, GameError> {
    check_same_len("process noise", w, weights.q.rows())?;
    match mode {
        Mode::Quadratic => Ok(quad_form(&weights.q_inv, w)),
        Mode::Bounded => nq_penalty(w, &weights.bounds.w_bar, &weights.q.diag()),
    }
}

/// Measurement-noise charge `F(v)` or `‖v‖²_{R⁻¹}`.
pub fn measurement_penalty(v: &[f64], weights: &GameWeights, mode: Mode) -> Result<f64, GameError> {
    check_same_len("measurement noise", v, weights.r.rows())?;
    match mode {
        Mode::Quadratic => Ok(quad_form(&weights.r_inv, v)),
        Mode::Bounded => nq_penalty(v, &weights.bounds.v_bar, &weights.r.diag()),
    }
}

pub(crate) fn process_penalty_grad(w: &[f64], weights: &GameWeights, mode: Mode) -> Result<Vec<f64>, GameError> {
    match mode {
        Mode::Quadratic => Ok(weights.q_inv.mul_vec(w).iter().map(|x| 2.0 * x).collect()),
        Mode::Bounded => nq_penalty_grad(w, &weights.bounds.w_bar, &weights.q.diag()),
    }
}

pub(crate) fn measurement_penalty_grad(v: &[f64], weights: &GameWeights, mode: Mode) -> Result<Vec<f64>, GameError> {
    match mode {
        Mode::Quadratic => Ok(weights.r_inv.mul_vec(v).iter().map(|x| 2.0 * x).collect()),
        Mode::Bounded => nq_penalty_grad(v, &weights.bounds.v_bar, &weights.r.diag()),
    }
}

/// `l = ‖x̃‖²_{LᵀSL} − γ²·(penalty(w) + penalty(v))`.
pub fn utility(
    x_tilde: &[f64],
    w: &[f64],
    v: &[f64],
    weights: &GameWeights,
    l: &Mat,
    mode: Mode,
) -> Result<f64, GameError> {
    check_same_len("error state", x_tilde, l.cols())?;
    let z = l.mul_vec(x_tilde);
    let state_cost = quad_form(&weights.s, &z);
    let g2 = weights.gamma * weights.gamma;
    Ok(state_cost - g2 * (process_penalty(w, weights, mode)? + measurement_penalty(v, weights, mode)?))
}

/// `H = l(x̃, w, v) + ∇Vᵀ·((A − K·C)·x̃ + w − K·v)`.
#[allow(clippy::too_many_arguments)]
pub fn hamiltonian(
    x_tilde: &[f64],
    k: &Mat,
    v: &[f64],
    w: &[f64],
    grad_v: &[f64],
    plant: &LinearPlant,
    weights: &GameWeights,
    mode: Mode,
) -> Result<f64, GameError> {
    let n = plant.states();
    check_same_len("value gradient", grad_v, n)?;
    let drift = crate::plant::error_dynamics(plant, k, x_tilde, w, v)?;
    Ok(utility(x_tilde, w, v, weights, &plant.l, mode)? + dot(grad_v, &drift))
}

/// Bounded-mode saddle noise:
/// `w* = W̄·tanh((2γ²)⁻¹·(Q·W̄)⁻¹·∇V)`,
/// `v* = −V̄·tanh((2γ²)⁻¹·(R·V̄)⁻¹·Kᵀ·∇V)`.
pub fn worst_noise_bounded(grad_v: &[f64], k: &Mat, weights: &GameWeights) -> (Vec<f64>, Vec<f64>) {
    let c = weights.two_gamma_sq();
    let w = grad_v
        .iter()
        .zip(&weights.bounds.w_bar)
        .zip(weights.q.diag())
        .map(|((&g, &wb), q)| saturate(wb, (g / (c * q * wb)).tanh()))
        .collect();
    (w, bounded_measurement_noise(k, grad_v, weights))
}

fn bounded_measurement_noise(k: &Mat, grad_v: &[f64], weights: &GameWeights) -> Vec<f64> {
    let c = weights.two_gamma_sq();
    k.tr_mul_vec(grad_v)
        .iter()
        .zip(&weights.bounds.v_bar)
        .zip(weights.r.diag())
        .map(|((&u, &vb), r)| -saturate(vb, (u / (c * r * vb)).tanh()))
        .collect()
}

/// Quadratic-mode saddle noise: `w* = Q·∇V/(2γ²)`, `v* = −R·Kᵀ·∇V/(2γ²)`.
pub fn worst_noise_quadratic(grad_v: &[f64], k: &Mat, weights: &GameWeights) -> (Vec<f64>, Vec<f64>) {
    let c = weights.two_gamma_sq();
    let w = weights.q.mul_vec(grad_v).iter().map(|x| x / c).collect();
    (w, quadratic_measurement_noise(k, grad_v, weights))
}

fn quadratic_measurement_noise(k: &Mat, grad_v: &[f64], weights: &GameWeights) -> Vec<f64> {
    let c = weights.two_gamma_sq();
    weights
        .r
        .mul_vec(&k.tr_mul_vec(grad_v))
        .iter()
        .map(|x| -x / c)
        .collect()
}

pub fn worst_noise(grad_v: &[f64], k: &Mat, weights: &GameWeights, mode: Mode) -> (Vec<f64>, Vec<f64>) {
    match mode {
        Mode::Quadratic => worst_noise_quadratic(grad_v, k, weights),
        Mode::Bounded => worst_noise_bounded(grad_v, k, weights),
    }
}

/// The measurement noise v(K) that is frozen into the Hamiltonian before
/// the gain is optimized: the v-branch of the worst-case noise evaluated
/// at the supplied (not necessarily optimal) gain.
pub fn fixed_measurement_noise(k: &Mat, grad_v: &[f64], weights: &GameWeights, mode: Mode) -> Vec<f64> {
    match mode {
        Mode::Quadratic => quadratic_measurement_noise(k, grad_v, weights),
        Mode::Bounded => bounded_measurement_noise(k, grad_v, weights),
    }
}

/// Jacobian diagonal / matrix of v(K) with respect to `u = Kᵀ·∇V`.
pub(crate) fn fixed_noise_jacobian(k: &Mat, grad_v: &[f64], weights: &GameWeights, mode: Mode) -> Mat {
    let c = weights.two_gamma_sq();
    match mode {
        Mode::Quadratic => weights.r.scale(-1.0 / c),
        Mode::Bounded => {
            let u = k.tr_mul_vec(grad_v);
            let diag: Vec<f64> = u
                .iter()
                .zip(weights.r.diag())
                .zip(&weights.bounds.v_bar)
                .map(|((&ui, r), &vb)| {
                    let t = (ui / (c * r * vb)).tanh();
                    -(1.0 - t * t) / (c * r)
                })
                .collect();
            Mat::from_diag(&diag)
        }
    }
}

/// Frobenius norm of `∇V·(C·x̃ + v)ᵀ`, the gain stationarity relation.
/// Used only as a post-hoc check on converged solutions.
pub fn gain_stationarity_residual(grad_v: &[f64], c: &Mat, x_tilde: &[f64], v: &[f64]) -> f64 {
    let cx = c.mul_vec(x_tilde);
    let y: Vec<f64> = cx.iter().zip(v).map(|(a, b)| a + b).collect();
    linalg::norm2(grad_v) * linalg::norm2(&y)
}

/// `K* = P·Cᵀ·R⁻¹`.
pub fn hinf_gain(p: &Mat, c: &Mat, r: &Mat) -> Result<Mat, GameError> {
    let r_inv = r.inverse().map_err(|_| GameError::SingularR)?;
    Ok(&(p * &c.transpose()) * &r_inv)
}

/// `M = CᵀR⁻¹C − γ⁻²·LᵀSL`; with `gamma = None` the game term is dropped
/// (Kalman–Bucy case).
pub fn riccati_quadratic_term(plant: &LinearPlant, r: &Mat, s: &Mat, gamma: Option<f64>) -> Result<Mat, GameError> {
    let r_inv = r.inverse().map_err(|_| GameError::SingularR)?;
    let ct = plant.c.transpose();
    let mut m = &(&ct * &r_inv) * &plant.c;
    if let Some(g) = gamma {
        let lsl = &(&plant.l.transpose() * s) * &plant.l;
        m = &m - &lsl.scale(1.0 / (g * g));
    }
    Ok(m.symmetrize())
}

/// Stabilizing GARE solution and gain for the quadratic game.
#[derive(Debug, Clone)]
pub struct AnalyticFilter {
    pub p: Mat,
    pub k: Mat,
    pub residual: f64,
}

pub fn solve_hinf(plant: &LinearPlant, weights: &GameWeights) -> Result<AnalyticFilter, GameError> {
    weights.check_plant(plant)?;
    solve_filter_riccati(plant, weights.q(), weights.r(), weights.s(), Some(weights.gamma()))
}

pub fn solve_filter_riccati(
    plant: &LinearPlant,
    q: &Mat,
    r: &Mat,
    s: &Mat,
    gamma: Option<f64>,
) -> Result<AnalyticFilter, GameError> {
    let m = riccati_quadratic_term(plant, r, s, gamma)?;
    let report = linalg::gare_solve_report(&plant.a, &m, q)?;
    let k = hinf_gain(&report.p, &plant.c, r)?;
    Ok(AnalyticFilter {
        p: report.p,
        k,
        residual: report.residual,
    })
}

/// Quadratic value `γ²·x̃ᵀP⁻¹x̃` and its gradient `2γ²·P⁻¹x̃`.
pub fn optimal_value_gradient(p_inv: &Mat, gamma: f64, x_tilde: &[f64]) -> Vec<f64> {
    p_inv.mul_vec(x_tilde).iter().map(|v| 2.0 * gamma * gamma * v).collect()
}

/// `H(K* + αΔK, v(K* + αΔK)) − H(K*, v(K*))` in quadratic mode with the
/// optimal value `γ²x̃ᵀP⁻¹x̃` and worst-case process noise `Q·P⁻¹·x̃`.
///
/// Closed form: `α²γ²·‖ΔKᵀP⁻¹x̃‖²_R`.
#[allow(clippy::too_many_arguments)]
pub fn saddle_perturbation_gap(
    x_tilde: &[f64],
    k_star: &Mat,
    p: &Mat,
    dk: &Mat,
    alpha: f64,
    plant: &LinearPlant,
    weights: &GameWeights,
) -> Result<f64, GameError> {
    let p_inv = p.inverse()?;
    let grad = optimal_value_gradient(&p_inv, weights.gamma(), x_tilde);
    let w = weights.q().mul_vec(&p_inv.mul_vec(x_tilde));
    let h_at = |k: &Mat| -> Result<f64, GameError> {
        let v = fixed_measurement_noise(k, &grad, weights, Mode::Quadratic);
        hamiltonian(x_tilde, k, &v, &w, &grad, plant, weights, Mode::Quadratic)
    };
    let perturbed = k_star + &dk.scale(alpha);
    Ok(h_at(&perturbed)? - h_at(k_star)?)
}

/// Closed-form right-hand side `α²γ²·‖ΔKᵀP⁻¹x̃‖²_R`.
pub fn saddle_gap_closed_form(x_tilde: &[f64], p: &Mat, dk: &Mat, alpha: f64, weights: &GameWeights) -> Result<f64, GameError> {
    let p_inv = p.inverse()?;
    let u = dk.tr_mul_vec(&p_inv.mul_vec(x_tilde));
    let g = weights.gamma();
    Ok(alpha * alpha * g * g * quad_form(weights.r(), &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{bicycle_plant, BicycleParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bicycle_weights(q: f64, r: f64) -> (LinearPlant, GameWeights) {
        let plant = bicycle_plant(&BicycleParams::default()).unwrap();
        let bounds = NoiseBounds::new(vec![0.01, 0.05], vec![0.01, 0.05]).unwrap();
        let w = GameWeights::new(
            Mat::identity(2).scale(q),
            Mat::identity(2).scale(r),
            Mat::identity(2),
            1.0,
            bounds,
        )
        .unwrap();
        (plant, w)
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn mode_parses() {
        assert_eq!("bounded".parse::<Mode>().unwrap(), Mode::Bounded);
        assert_eq!(Mode::Quadratic.to_string(), "quadratic");
        assert!("cubic".parse::<Mode>().is_err());
    }

    #[test]
    fn penalty_matches_quadrature() {
        let (wb, q) = (0.05, 0.3);
        for frac in [-0.99, -0.5, -0.1, 0.0, 0.25, 0.7, 0.99] {
            let w = frac * wb;
            let closed = nq_penalty(&[w], &[wb], &[q]).unwrap();
            let quad = simpson(|s| 2.0 * q * wb * (s / wb).atanh(), 0.0, w, 20_000);
            assert!((closed - quad).abs() < 1e-10, "w={w}: {closed} vs {quad}");
        }
    }

    #[test]
    fn penalty_is_even_and_zero_at_origin() {
        assert_eq!(nq_penalty(&[0.0, 0.0], &[1.0, 2.0], &[1.0, 1.0]).unwrap(), 0.0);
        let a = nq_penalty(&[0.3, -1.1], &[1.0, 2.0], &[0.5, 2.0]).unwrap();
        let b = nq_penalty(&[-0.3, 1.1], &[1.0, 2.0], &[0.5, 2.0]).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn penalty_rejects_boundary() {
        assert!(matches!(
            nq_penalty(&[1.0], &[1.0], &[1.0]),
            Err(GameError::OutOfDomain { index: 0, .. })
        ));
        assert!(nq_penalty_grad(&[-2.0], &[1.0], &[1.0]).is_err());
        assert!(nq_penalty(&[0.1, 0.2], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn penalty_gradient_matches_differences() {
        let (wb, q) = ([0.01, 0.05], [0.2, 0.2]);
        let w = [0.004, -0.03];
        let g = nq_penalty_grad(&w, &wb, &q).unwrap();
        for i in 0..2 {
            let h = 1e-7;
            let mut p = w;
            let mut m = w;
            p[i] += h;
            m[i] -= h;
            let fd = (nq_penalty(&p, &wb, &q).unwrap() - nq_penalty(&m, &wb, &q).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0));
        }
    }

    #[test]
    fn bounded_worst_noise_examples() {
        let bounds = NoiseBounds::new(vec![0.01], vec![0.01]).unwrap();
        let one = || Mat::identity(1);
        let w = GameWeights::new(one(), one(), one(), 1.0, bounds).unwrap();
        // tanh(0.02 / (2 · 0.01)) · 0.01 = 0.01 · tanh(1)
        let (ws, vs) = worst_noise_bounded(&[0.02], &Mat::zeros(1, 1), &w);
        assert!((ws[0] - 0.01 * 1f64.tanh()).abs() < 1e-15);
        assert!((ws[0] - 0.0076159).abs() < 1e-7);
        assert_eq!(vs[0], 0.0);

        let (ws, vs) = worst_noise_bounded(&[1e6], &one(), &w);
        assert!(ws[0] < 0.01 && ws[0] > 0.0099);
        assert!(vs[0] > -0.01 && vs[0] < -0.0099);
    }

    #[test]
    fn saturate_stays_interior() {
        assert!(saturate(0.05, 1.0) < 0.05);
        assert!(saturate(0.05, -1.0) > -0.05);
        assert_eq!(saturate(2.0, 0.25), 0.5);
    }

    #[test]
    fn worst_noise_maximizes_hamiltonian() {
        let (plant, weights) = bicycle_weights(0.2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = Mat::from_rows(&[vec![0.3, -0.1], vec![0.05, 0.2]]).unwrap();
        for mode in [Mode::Quadratic, Mode::Bounded] {
            for _ in 0..20 {
                let x: Vec<f64> = (0..2).map(|_| rng.random_range(-0.1..0.1)).collect();
                let grad: Vec<f64> = (0..2).map(|_| rng.random_range(-0.02..0.02)).collect();
                let (w, v) = worst_noise(&grad, &k, &weights, mode);
                let h0 = hamiltonian(&x, &k, &v, &w, &grad, &plant, &weights, mode).unwrap();
                for i in 0..2 {
                    for s in [-1.0, 1.0] {
                        let mut wp = w.clone();
                        wp[i] += s * 1e-4 * weights.bounds().w_bar[i];
                        let mut vp = v.clone();
                        vp[i] += s * 1e-4 * weights.bounds().v_bar[i];
                        let hw = hamiltonian(&x, &k, &v, &wp, &grad, &plant, &weights, mode).unwrap();
                        let hv = hamiltonian(&x, &k, &vp, &w, &grad, &plant, &weights, mode).unwrap();
                        assert!(hw <= h0 + 1e-15 && hv <= h0 + 1e-15, "{mode}: {h0} {hw} {hv}");
                    }
                }
            }
        }
    }

    #[test]
    fn hamiltonian_vanishes_at_gare_solution() {
        let (plant, weights) = bicycle_weights(20.0, 10.0);
        let sol = solve_hinf(&plant, &weights).unwrap();
        let p_inv = sol.p.inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let grad = optimal_value_gradient(&p_inv, weights.gamma(), &x);
            let (w, v) = worst_noise_quadratic(&grad, &sol.k, &weights);
            let h = hamiltonian(&x, &sol.k, &v, &w, &grad, &plant, &weights, Mode::Quadratic).unwrap();
            let scale = quad_form(&p_inv, &x);
            assert!(h.abs() <= 1e-9 * (1.0 + scale), "H = {h}");
            assert!(gain_stationarity_residual(&grad, &plant.c, &x, &v) >= 0.0);
        }
    }

    #[test]
    fn saddle_gap_matches_closed_form() {
        let (plant, weights) = bicycle_weights(20.0, 10.0);
        let sol = solve_hinf(&plant, &weights).unwrap();
        let x = [0.03, -0.07];
        let dk = Mat::from_rows(&[vec![0.4, -1.0], vec![0.2, 0.5]]).unwrap();
        for alpha in [1e-3, 0.1, 2.0] {
            let gap = saddle_perturbation_gap(&x, &sol.k, &sol.p, &dk, alpha, &plant, &weights).unwrap();
            let closed = saddle_gap_closed_form(&x, &sol.p, &dk, alpha, &weights).unwrap();
            assert!((gap - closed).abs() <= 1e-8 * closed.abs(), "{gap} vs {closed}");
        }
    }

    #[test]
    fn hinf_gain_formula() {
        let p = Mat::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let c = Mat::identity(2);
        let r = Mat::identity(2).scale(4.0);
        assert_eq!(hinf_gain(&p, &c, &r).unwrap(), p.scale(0.25));
        assert!(matches!(hinf_gain(&p, &c, &Mat::zeros(2, 2)), Err(GameError::SingularR)));
    }

    #[test]
    fn kalman_term_drops_attenuation() {
        let (plant, weights) = bicycle_weights(20.0, 10.0);
        let with = riccati_quadratic_term(&plant, weights.r(), weights.s(), Some(1.0)).unwrap();
        let without = riccati_quadratic_term(&plant, weights.r(), weights.s(), None).unwrap();
        let diff = &without - &with;
        assert!((&diff - &Mat::identity(2)).frobenius() < 1e-14);
    }

    #[test]
    fn weights_validate() {
        let b = || NoiseBounds::new(vec![1.0], vec![1.0]).unwrap();
        let one = || Mat::identity(1);
        assert!(GameWeights::new(one().scale(-1.0), one(), one(), 1.0, b()).is_err());
        assert!(matches!(
            GameWeights::new(one(), one(), one(), 0.0, b()),
            Err(GameError::InvalidGamma(_))
        ));
        let full = Mat::from_rows(&[vec![2.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let b2 = NoiseBounds::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let w = GameWeights::new(full, Mat::identity(2), Mat::identity(2), 1.0, b2).unwrap();
        assert!(w.check_mode(Mode::Quadratic).is_ok());
        assert!(matches!(w.check_mode(Mode::Bounded), Err(GameError::NotDiagonal("Q"))));
    }
}
