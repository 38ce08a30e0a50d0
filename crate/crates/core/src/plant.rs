//! Linear plant, estimator and estimation-error dynamics, the two-state
//! bicycle model, and the bounded noise sources used in simulation.

use rand::Rng;
use rand_distr::{Beta, Distribution, Triangular};
use serde::{Deserialize, Serialize};

use crate::error::PlantError;
use crate::linalg::Mat;

/// `ẋ = A·x + B·u + w`, `y = C·x + D·u + v`, `z = L·x`.
///
/// `D` is the direct feedthrough of the known input into the measurement
/// (zero unless the plant has one, as the bicycle model does).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPlant {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub l: Mat,
    pub d: Mat,
}

impl LinearPlant {
    pub fn new(a: Mat, b: Mat, c: Mat, l: Mat) -> Result<Self, PlantError> {
        let d = Mat::zeros(c.rows(), b.cols());
        Self::with_feedthrough(a, b, c, l, d)
    }

    pub fn with_feedthrough(a: Mat, b: Mat, c: Mat, l: Mat, d: Mat) -> Result<Self, PlantError> {
        let n = a.rows();
        let check = |what: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(PlantError::DimensionMismatch { what, expected, found })
            }
        };
        check("A columns", n, a.cols())?;
        check("B rows", n, b.rows())?;
        check("C columns", n, c.cols())?;
        check("L columns", n, l.cols())?;
        check("D rows", c.rows(), d.rows())?;
        check("D columns", b.cols(), d.cols())?;
        Ok(Self { a, b, c, l, d })
    }

    /// State dimension n.
    pub fn states(&self) -> usize {
        self.a.rows()
    }

    /// Input dimension m.
    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    /// Measurement dimension r.
    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    fn check_gain(&self, k: &Mat) -> Result<(), PlantError> {
        if k.rows() != self.states() {
            return Err(PlantError::DimensionMismatch {
                what: "gain rows",
                expected: self.states(),
                found: k.rows(),
            });
        }
        if k.cols() != self.outputs() {
            return Err(PlantError::DimensionMismatch {
                what: "gain columns",
                expected: self.outputs(),
                found: k.cols(),
            });
        }
        Ok(())
    }

    /// `A − K·C`, the estimation-error system matrix.
    pub fn error_matrix(&self, k: &Mat) -> Result<Mat, PlantError> {
        self.check_gain(k)?;
        Ok(&self.a - &(k * &self.c))
    }

    /// Noise-free measurement `C·x + D·u`.
    pub fn measure(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut y = self.c.mul_vec(x);
        for (yi, di) in y.iter_mut().zip(self.d.mul_vec(u)) {
            *yi += di;
        }
        y
    }
}

fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<(), PlantError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(PlantError::DimensionMismatch {
            what,
            expected,
            found: v.len(),
        })
    }
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

/// One classical Runge–Kutta step of `ẋ = f(x)`.
pub fn rk4_step(x: &[f64], dt: f64, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Vec<f64> {
    match try_rk4_step::<std::convert::Infallible>(x, dt, |s| Ok(f(s))) {
        Ok(next) => next,
        Err(never) => match never {},
    }
}

/// [`rk4_step`] for a fallible right-hand side.
pub fn try_rk4_step<E>(x: &[f64], dt: f64, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>, E>) -> Result<Vec<f64>, E> {
    let k1 = f(x)?;
    let k2 = f(&axpy(0.5 * dt, &k1, x))?;
    let k3 = f(&axpy(0.5 * dt, &k2, x))?;
    let k4 = f(&axpy(dt, &k3, x))?;
    Ok(x.iter()
        .enumerate()
        .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// `x̃˙ = (A − K·C)·x̃ + w − K·v`.
pub fn error_dynamics(
    plant: &LinearPlant,
    k: &Mat,
    x_tilde: &[f64],
    w: &[f64],
    v: &[f64],
) -> Result<Vec<f64>, PlantError> {
    plant.check_gain(k)?;
    check_len("error state", x_tilde, plant.states())?;
    check_len("process noise", w, plant.states())?;
    check_len("measurement noise", v, plant.outputs())?;
    Ok(error_rate(plant, k, x_tilde, w, v))
}

pub(crate) fn error_rate(plant: &LinearPlant, k: &Mat, x_tilde: &[f64], w: &[f64], v: &[f64]) -> Vec<f64> {
    let innov = plant.c.mul_vec(x_tilde);
    let kcv: Vec<f64> = innov.iter().zip(v).map(|(c, vi)| c + vi).collect();
    let corr = k.mul_vec(&kcv);
    plant
        .a
        .mul_vec(x_tilde)
        .iter()
        .zip(w)
        .zip(corr)
        .map(|((ax, wi), kc)| ax + wi - kc)
        .collect()
}

/// One RK4 step of `x̂˙ = A·x̂ + B·u + K·(y − C·x̂ − D·u)` with `u`, `y` held
/// over the step.
pub fn estimator_step(
    plant: &LinearPlant,
    k: &Mat,
    x_hat: &[f64],
    u: &[f64],
    y: &[f64],
    dt: f64,
) -> Result<Vec<f64>, PlantError> {
    plant.check_gain(k)?;
    check_len("estimate", x_hat, plant.states())?;
    check_len("input", u, plant.inputs())?;
    check_len("measurement", y, plant.outputs())?;
    check_dt(dt)?;
    let bu = plant.b.mul_vec(u);
    let du = plant.d.mul_vec(u);
    Ok(rk4_step(x_hat, dt, |xh| {
        let innov: Vec<f64> = plant
            .c
            .mul_vec(xh)
            .iter()
            .zip(y)
            .zip(&du)
            .map(|((cx, yi), d)| yi - cx - d)
            .collect();
        let kin = k.mul_vec(&innov);
        plant
            .a
            .mul_vec(xh)
            .iter()
            .zip(&bu)
            .zip(kin)
            .map(|((ax, b), ki)| ax + b + ki)
            .collect()
    }))
}

/// One RK4 step of `ẋ = A·x + B·u + w` with `u`, `w` held over the step.
pub fn plant_step(
    plant: &LinearPlant,
    x: &[f64],
    u: &[f64],
    w: &[f64],
    dt: f64,
) -> Result<Vec<f64>, PlantError> {
    check_len("state", x, plant.states())?;
    check_len("input", u, plant.inputs())?;
    check_len("process noise", w, plant.states())?;
    check_dt(dt)?;
    let drive: Vec<f64> = plant.b.mul_vec(u).iter().zip(w).map(|(b, wi)| b + wi).collect();
    Ok(rk4_step(x, dt, |xs| {
        plant.a.mul_vec(xs).iter().zip(&drive).map(|(ax, d)| ax + d).collect()
    }))
}

/// One RK4 step of the plant together with a bank of observers that see
/// the continuous measurement `y = C·x + D·u + v`. `u`, `w` and `v` are held
/// over the step. Returns the next state and the next estimates.
#[allow(clippy::too_many_arguments)]
pub fn observer_bank_step(
    plant: &LinearPlant,
    gains: &[&Mat],
    x: &[f64],
    estimates: &[Vec<f64>],
    u: &[f64],
    w: &[f64],
    v: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), PlantError> {
    let n = plant.states();
    check_len("state", x, n)?;
    check_len("input", u, plant.inputs())?;
    check_len("process noise", w, n)?;
    check_len("measurement noise", v, plant.outputs())?;
    check_dt(dt)?;
    if gains.len() != estimates.len() {
        return Err(PlantError::DimensionMismatch {
            what: "estimates",
            expected: gains.len(),
            found: estimates.len(),
        });
    }
    for (k, e) in gains.iter().zip(estimates) {
        plant.check_gain(k)?;
        check_len("estimate", e, n)?;
    }
    let bu = plant.b.mul_vec(u);
    let mut joint = x.to_vec();
    for e in estimates {
        joint.extend(e);
    }
    // Only x̂ appears inside the innovation; D·u cancels.
    let next = rk4_step(&joint, dt, |s| {
        let xs = &s[..n];
        let cx = plant.c.mul_vec(xs);
        let mut out: Vec<f64> = plant
            .a
            .mul_vec(xs)
            .iter()
            .zip(&bu)
            .zip(w)
            .map(|((ax, b), wi)| ax + b + wi)
            .collect();
        for (i, k) in gains.iter().enumerate() {
            let xh = &s[n * (i + 1)..n * (i + 2)];
            let innov: Vec<f64> = cx
                .iter()
                .zip(plant.c.mul_vec(xh))
                .zip(v)
                .map(|((a, b), vi)| a - b + vi)
                .collect();
            let kin = k.mul_vec(&innov);
            out.extend(plant.a.mul_vec(xh).iter().zip(&bu).zip(kin).map(|((ax, b), ki)| ax + b + ki));
        }
        out
    });
    let x_next = next[..n].to_vec();
    let est = next[n..].chunks(n).map(<[f64]>::to_vec).collect();
    Ok((x_next, est))
}

fn check_dt(dt: f64) -> Result<(), PlantError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(PlantError::InvalidParams(format!("time step must be positive, got {dt}")))
    }
}

/// Two-degree-of-freedom lateral vehicle model parameters.
///
/// Cornering stiffnesses follow the negative-sign convention, so typical
/// values of `k_f`, `k_r` are negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BicycleParams {
    /// Vehicle mass, kg.
    pub m: f64,
    /// CG to front axle, m.
    pub a: f64,
    /// CG to rear axle, m.
    pub b: f64,
    /// Front cornering stiffness, N/rad.
    pub k_f: f64,
    /// Rear cornering stiffness, N/rad.
    pub k_r: f64,
    /// Yaw inertia, kg·m².
    pub i_zz: f64,
    /// Longitudinal speed, m/s.
    pub u_lon: f64,
}

impl Default for BicycleParams {
    /// Placeholder passenger-car values; replace with measured data.
    fn default() -> Self {
        Self {
            m: 1500.0,
            a: 1.2,
            b: 1.4,
            k_f: -88000.0,
            k_r: -94000.0,
            i_zz: 2420.0,
            u_lon: 20.0,
        }
    }
}

impl BicycleParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let positive = [
            ("m", self.m),
            ("a", self.a),
            ("b", self.b),
            ("i_zz", self.i_zz),
            ("u_lon", self.u_lon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlantError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("k_f", self.k_f), ("k_r", self.k_r)] {
            if v == 0.0 || !v.is_finite() {
                return Err(PlantError::InvalidParams(format!("{name} must be nonzero, got {v}")));
            }
        }
        Ok(())
    }
}

/// Bicycle model with state `[β, ω_r]`, input steering angle δ and
/// measurement `[a_y, ω_r]`.
pub fn bicycle_plant(p: &BicycleParams) -> Result<LinearPlant, PlantError> {
    p.validate()?;
    let BicycleParams {
        m,
        a,
        b,
        k_f,
        k_r,
        i_zz,
        u_lon: u,
    } = *p;
    let moment = a * k_f - b * k_r;
    let am = Mat::new(
        2,
        2,
        vec![
            (k_f + k_r) / (m * u),
            moment / (m * u * u) - 1.0,
            moment / i_zz,
            (a * a * k_f + b * b * k_r) / (u * i_zz),
        ],
    )?;
    let bm = Mat::new(2, 1, vec![-k_f / (m * u), -a * k_f / i_zz])?;
    let cm = Mat::new(2, 2, vec![(k_f + k_r) / m, moment / (m * u), 0.0, 1.0])?;
    let dm = Mat::new(2, 1, vec![-k_f / m, 0.0])?;
    LinearPlant::with_feedthrough(am, bm, cm, Mat::identity(2), dm)
}

/// Componentwise bounds `|w| ≤ w̄`, `|v| ≤ v̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBounds {
    pub w_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
}

impl NoiseBounds {
    pub fn new(w_bar: Vec<f64>, v_bar: Vec<f64>) -> Result<Self, PlantError> {
        for (name, vals) in [("w_bar", &w_bar), ("v_bar", &v_bar)] {
            if vals.is_empty() || vals.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(PlantError::InvalidParams(format!(
                    "{name} components must be strictly positive"
                )));
            }
        }
        Ok(Self { w_bar, v_bar })
    }

    pub fn check_plant(&self, plant: &LinearPlant) -> Result<(), PlantError> {
        check_len("w_bar", &self.w_bar, plant.states())?;
        check_len("v_bar", &self.v_bar, plant.outputs())
    }
}

/// Law of the unit random variable X ∈ [0, 1] behind `2·b·X − b` noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseDistribution {
    Uniform01,
    Beta { alpha: f64, beta: f64 },
    Triangular { lo: f64, hi: f64, mode: f64 },
}

impl NoiseDistribution {
    pub fn validate(&self) -> Result<(), PlantError> {
        match *self {
            NoiseDistribution::Uniform01 => Ok(()),
            NoiseDistribution::Beta { alpha, beta } => {
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    Err(PlantError::InvalidDistribution(format!(
                        "Beta shape parameters must be positive, got ({alpha}, {beta})"
                    )))
                }
            }
            NoiseDistribution::Triangular { lo, hi, mode } => {
                if 0.0 <= lo && lo < hi && hi <= 1.0 && lo <= mode && mode <= hi {
                    Ok(())
                } else {
                    Err(PlantError::InvalidDistribution(format!(
                        "Triangular needs 0 <= lo <= mode <= hi <= 1 and lo < hi, got ({lo}, {hi}, {mode})"
                    )))
                }
            }
        }
    }

    /// Short label used in reports, e.g. `Beta(4,2)`.
    pub fn label(&self) -> String {
        match *self {
            NoiseDistribution::Uniform01 => "U(0,1)".to_string(),
            NoiseDistribution::Beta { alpha, beta } => format!("Beta({alpha},{beta})"),
            NoiseDistribution::Triangular { lo, hi, mode } => format!("Triang({lo},{hi},{mode})"),
        }
    }

    /// Mean and variance of X.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            NoiseDistribution::Uniform01 => (0.5, 1.0 / 12.0),
            NoiseDistribution::Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha / s, alpha * beta / (s * s * (s + 1.0)))
            }
            NoiseDistribution::Triangular { lo, hi, mode } => (
                (lo + hi + mode) / 3.0,
                (lo * lo + hi * hi + mode * mode - lo * hi - lo * mode - hi * mode) / 18.0,
            ),
        }
    }

    /// Mean and variance of `2·bound·X − bound`.
    pub fn mapped_moments(&self, bound: f64) -> (f64, f64) {
        let (mean, var) = self.moments();
        (bound * (2.0 * mean - 1.0), 4.0 * bound * bound * var)
    }

    pub fn sampler(&self) -> Result<UnitSampler, PlantError> {
        self.validate()?;
        let bad = |e: String| PlantError::InvalidDistribution(e);
        Ok(match *self {
            NoiseDistribution::Uniform01 => UnitSampler::Uniform,
            NoiseDistribution::Beta { alpha, beta } => {
                UnitSampler::Beta(Beta::new(alpha, beta).map_err(|e| bad(e.to_string()))?)
            }
            NoiseDistribution::Triangular { lo, hi, mode } => {
                UnitSampler::Triangular(Triangular::new(lo, hi, mode).map_err(|e| bad(e.to_string()))?)
            }
        })
    }
}

/// Prepared sampler for X; build once per distribution and reuse.
#[derive(Debug, Clone, Copy)]
pub enum UnitSampler {
    Uniform,
    Beta(Beta<f64>),
    Triangular(Triangular<f64>),
}

impl Distribution<f64> for UnitSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match self {
            UnitSampler::Uniform => rng.random::<f64>(),
            UnitSampler::Beta(d) => d.sample(rng),
            UnitSampler::Triangular(d) => d.sample(rng),
        };
        x.clamp(0.0, 1.0)
    }
}

/// Maps a unit draw onto `[−bound, bound]`.
pub fn map_unit(x: f64, bound: f64) -> f64 {
    2.0 * bound * x - bound
}

/// Draws one bounded noise component `2·bound·X − bound`.
pub fn sample_bounded_noise<R: Rng + ?Sized>(dist: &UnitSampler, bound: f64, rng: &mut R) -> f64 {
    map_unit(dist.sample(rng), bound)
}

/// Independent draws for each component of a bound vector.
pub fn sample_noise_vector<R: Rng + ?Sized>(dist: &UnitSampler, bounds: &[f64], rng: &mut R) -> Vec<f64> {
    bounds.iter().map(|b| sample_bounded_noise(dist, *b, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_plant() -> LinearPlant {
        let one = || Mat::new(1, 1, vec![1.0]).unwrap();
        LinearPlant::new(Mat::new(1, 1, vec![-1.0]).unwrap(), one(), one(), one()).unwrap()
    }

    #[test]
    fn bicycle_entries() {
        let p = BicycleParams::default();
        let plant = bicycle_plant(&p).unwrap();
        assert_eq!(plant.a[(1, 0)], (p.a * p.k_f - p.b * p.k_r) / p.i_zz);
        assert_eq!(plant.d[(0, 0)], -p.k_f / p.m);
        assert_eq!(plant.l, Mat::identity(2));

        let sym = BicycleParams {
            k_f: -90000.0,
            k_r: -90000.0,
            a: 1.3,
            b: 1.3,
            ..p
        };
        assert_eq!(bicycle_plant(&sym).unwrap().a[(1, 0)], 0.0);
    }

    #[test]
    fn bicycle_rejects_bad_params() {
        for bad in [
            BicycleParams { m: 0.0, ..Default::default() },
            BicycleParams { u_lon: -1.0, ..Default::default() },
            BicycleParams { k_f: 0.0, ..Default::default() },
            BicycleParams { i_zz: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(bicycle_plant(&bad), Err(PlantError::InvalidParams(_))));
        }
    }

    #[test]
    fn noise_mapping_endpoints() {
        assert_eq!(map_unit(0.5, 0.3), 0.0);
        assert_eq!(map_unit(1.0, 0.3), 0.3);
        assert_eq!(map_unit(0.0, 0.3), -0.3);
    }

    #[test]
    fn distribution_validation() {
        assert!(NoiseDistribution::Beta { alpha: 0.0, beta: 1.0 }.sampler().is_err());
        assert!(NoiseDistribution::Triangular { lo: 0.0, hi: 1.2, mode: 0.5 }.sampler().is_err());
        assert!(NoiseDistribution::Triangular { lo: 0.0, hi: 1.0, mode: 0.6 }.sampler().is_ok());
    }

    #[test]
    fn beta42_mean() {
        // Mean of 2·w̄·X − w̄ with X ~ Beta(4,2) is w̄/3.
        let dist = NoiseDistribution::Beta { alpha: 4.0, beta: 2.0 };
        let s = dist.sampler().unwrap();
        let bound = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let w = sample_bounded_noise(&s, bound, &mut rng);
            assert!((-bound..=bound).contains(&w));
            sum += w;
            sq += w * w;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - bound / 3.0).abs() < 3.0 * se, "mean {mean}");
        let (m_exact, v_exact) = dist.mapped_moments(bound);
        assert!((m_exact - bound / 3.0).abs() < 1e-15);
        assert!((var - v_exact).abs() < 0.01 * v_exact);
    }

    #[test]
    fn moment_formulas() {
        let w = 0.2;
        let (_, v) = NoiseDistribution::Uniform01.mapped_moments(w);
        assert!((v - w * w / 3.0).abs() < 1e-15);
        let (_, v) = NoiseDistribution::Beta { alpha: 2.0, beta: 2.0 }.mapped_moments(w);
        assert!((v - w * w / 5.0).abs() < 1e-15);
    }

    #[test]
    fn all_samples_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dist in [
            NoiseDistribution::Uniform01,
            NoiseDistribution::Beta { alpha: 2.0, beta: 2.0 },
            NoiseDistribution::Beta { alpha: 4.0, beta: 2.0 },
            NoiseDistribution::Triangular { lo: 0.0, hi: 1.0, mode: 0.6 },
        ] {
            let s = dist.sampler().unwrap();
            for _ in 0..1_000_000 {
                let w = sample_bounded_noise(&s, 0.01, &mut rng);
                assert!((-0.01..=0.01).contains(&w));
            }
        }
    }

    #[test]
    fn error_dynamics_cases() {
        let plant = bicycle_plant(&BicycleParams::default()).unwrap();
        let k = Mat::new(2, 2, vec![0.1, -0.2, 0.3, 0.05]).unwrap();
        assert_eq!(error_dynamics(&plant, &k, &[0.0; 2], &[0.0; 2], &[0.0; 2]).unwrap(), vec![0.0; 2]);

        let x = [0.3, -0.7];
        let w = [0.01, 0.02];
        let zero_k = Mat::zeros(2, 2);
        let got = error_dynamics(&plant, &zero_k, &x, &w, &[0.4, 0.5]).unwrap();
        let ax = plant.a.mul_vec(&x);
        assert_eq!(got, vec![ax[0] + w[0], ax[1] + w[1]]);

        // Per-entry oracle.
        let v = [0.02, -0.01];
        let got = error_dynamics(&plant, &k, &x, &w, &v).unwrap();
        for i in 0..2 {
            let mut expect = w[i];
            for j in 0..2 {
                let mut akc = plant.a[(i, j)];
                for l in 0..2 {
                    akc -= k[(i, l)] * plant.c[(l, j)];
                }
                expect += akc * x[j];
            }
            for l in 0..2 {
                expect -= k[(i, l)] * v[l];
            }
            assert!((got[i] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }

        assert!(matches!(
            error_dynamics(&plant, &k, &[0.0; 3], &[0.0; 2], &[0.0; 2]),
            Err(PlantError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn estimator_fixed_point() {
        let plant = bicycle_plant(&BicycleParams::default()).unwrap();
        let k = Mat::new(2, 2, vec![0.1, -0.2, 0.3, 0.05]).unwrap();
        let x_hat = [0.0, 0.0];
        let u = [0.0];
        let y = plant.measure(&x_hat, &u);
        assert_eq!(estimator_step(&plant, &k, &x_hat, &u, &y, 0.005).unwrap(), x_hat.to_vec());
    }

    #[test]
    fn estimator_first_order_response() {
        let plant = scalar_plant();
        let k = Mat::zeros(1, 1);
        let mut xh = vec![0.0];
        for _ in 0..5000 {
            xh = estimator_step(&plant, &k, &xh, &[1.0], &[0.0], 0.005).unwrap();
        }
        assert!((xh[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn plant_decay_matches_exponential() {
        let plant = scalar_plant();
        let mut x = vec![1.0];
        for _ in 0..200 {
            x = plant_step(&plant, &x, &[0.0], &[0.0], 0.005).unwrap();
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-8);
        assert_eq!(plant_step(&plant, &[0.0], &[0.0], &[0.0], 0.005).unwrap(), vec![0.0]);
        assert!(plant_step(&plant, &[0.0], &[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn rk4_global_fourth_order() {
        // ẋ = −x + sin-free constant drive; compare errors at dt and dt/2.
        let plant = scalar_plant();
        let run = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut x = vec![1.0];
            for _ in 0..steps {
                x = plant_step(&plant, &x, &[0.5], &[0.0], dt).unwrap();
            }
            // x(t) = 0.5 + 0.5 e^{−t}
            (x[0] - (0.5 + 0.5 * (-1.0f64).exp())).abs()
        };
        let e1 = run(0.1);
        let e2 = run(0.05);
        let order = (e1 / e2).log2();
        assert!((3.7..4.3).contains(&order), "observed order {order}");
    }

    #[test]
    fn rk4_local_error_fifth_order() {
        let plant = scalar_plant();
        let local = |dt: f64| {
            let once = plant_step(&plant, &[1.0], &[0.0], &[0.0], dt).unwrap()[0];
            let half = plant_step(&plant, &[1.0], &[0.0], &[0.0], dt / 2.0).unwrap();
            let twice = plant_step(&plant, &half, &[0.0], &[0.0], dt / 2.0).unwrap()[0];
            (once - twice).abs()
        };
        let ratio = local(0.2) / local(0.1);
        assert!((ratio.log2() - 5.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn observer_bank_tracks_without_noise() {
        let plant = bicycle_plant(&BicycleParams::default()).unwrap();
        let k = Mat::from_rows(&[vec![-1.0, 0.0], vec![0.05, 0.2]]).unwrap();
        let zero = Mat::zeros(2, 2);
        let mut x = vec![0.0, 0.0];
        let mut est = vec![vec![0.0, 0.0]; 2];
        for step in 0..400 {
            let u = [0.01 * (step as f64 * 0.02).sin()];
            (x, est) = observer_bank_step(&plant, &[&k, &zero], &x, &est, &u, &[0.0; 2], &[0.0; 2], 0.005).unwrap();
        }
        assert!(x[0].abs() > 1e-4);
        for e in &est {
            for (a, b) in e.iter().zip(&x) {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-10));
            }
        }
        assert!(observer_bank_step(&plant, &[&k], &x, &est, &[0.0], &[0.0; 2], &[0.0; 2], 0.005).is_err());
    }
}
