//! Experiment drivers behind the `hinf` command-line tool: Riccati solves,
//! training runs and the Monte-Carlo filter comparison.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::game::{self, AnalyticFilter, GameWeights, Mode};
use crate::linalg::{quad_form, Mat};
use crate::plant::{
    observer_bank_step, sample_noise_vector, LinearPlant, NoiseBounds, NoiseDistribution, UnitSampler,
};
use crate::tpi::{GameSpec, Reference, TrainRecord, Trainer};

/// Scale applied to the integrated squared errors in the RMS columns.
pub const RMS_SCALE: f64 = 1e4;

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn mat_rows(name: &str, m: &Mat) -> Vec<Vec<String>> {
    let (r, c) = m.shape();
    (0..r)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| vec![name.to_string(), i.to_string(), j.to_string(), fmt_f(m[(i, j)])])
        .collect()
}

fn fmt_mat(m: &Mat) -> String {
    m.to_rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:>14.8}")).collect();
            format!("  [{}]", cells.join(","))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Stabilizing Riccati solution for the quadratic weights, or the
/// Kalman–Bucy solution when `kalman` is set.
pub fn solve_gare(cfg: &Config, kalman: bool) -> Result<AnalyticFilter> {
    let plant = cfg.plant()?;
    let w = cfg.weights(&plant, Mode::Quadratic)?;
    let gamma = if kalman { None } else { Some(w.gamma()) };
    Ok(game::solve_filter_riccati(&plant, w.q(), w.r(), w.s(), gamma)?)
}

/// Solves the Riccati equation, writes `gare.csv` under `out` and returns
/// a printable summary.
pub fn cmd_solve_gare(cfg: &Config, kalman: Option<bool>, out: Option<&Path>) -> Result<String> {
    let kalman = kalman.unwrap_or(cfg.gare.kalman);
    let sol = solve_gare(cfg, kalman)?;
    if let Some(dir) = out {
        let mut rows = mat_rows("P", &sol.p);
        rows.extend(mat_rows("K", &sol.k));
        rows.push(vec!["residual".into(), "0".into(), "0".into(), fmt_f(sol.residual)]);
        let header = ["matrix", "row", "col", "value"].map(String::from);
        write_rows(&dir.join("gare.csv"), &header, &rows)?;
    }
    Ok(format!(
        "{} Riccati solution\nP =\n{}\nK =\n{}\nresidual = {:e}",
        if kalman { "Kalman-Bucy" } else { "game" },
        fmt_mat(&sol.p),
        fmt_mat(&sol.k),
        sol.residual
    ))
}

pub const TRAIN_HEADER: [&str; 5] = ["iter", "value_loss", "gain_loss", "e_omega", "e_theta"];

fn record_row(r: &TrainRecord) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(fmt_f).unwrap_or_default();
    vec![
        r.iter.to_string(),
        fmt_f(r.value_loss),
        fmt_f(r.gain_loss),
        opt(r.e_omega),
        opt(r.e_theta),
    ]
}

pub fn write_train_csv(path: &Path, records: &[TrainRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> = records.iter().map(record_row).collect();
    write_rows(path, &TRAIN_HEADER.map(String::from), &rows)
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub csv: PathBuf,
    pub checkpoint: PathBuf,
    pub last: Option<TrainRecord>,
    pub gain: Mat,
}

/// Runs TPI and writes `train.csv` and `checkpoint.txt` under `out`. In
/// quadratic mode the Riccati solution supplies the reference weights.
/// On divergence the records up to the failure are still written.
pub fn cmd_train(cfg: &Config, opts: &TrainOptions, out: &Path) -> Result<TrainSummary> {
    let mode = opts.mode.unwrap_or_else(|| cfg.train_mode());
    let plant = cfg.plant()?;
    let weights = cfg.weights(&plant, mode)?;
    let mut tcfg = cfg.tpi_config(mode, plant.states());
    tcfg.mode = mode;
    if let Some(s) = opts.seed {
        tcfg.seed = s;
    }
    if let Some(i) = opts.iterations {
        tcfg.iterations = i;
    }
    let game = GameSpec::new(&plant, &weights, mode)?;
    let mut trainer = Trainer::new(tcfg, game)?;
    if mode == Mode::Quadratic {
        let sol = game::solve_hinf(&plant, &weights)?;
        trainer = trainer.with_reference(Reference::from_solution(&sol, &weights)?);
    }
    let result = trainer.run();

    fs::create_dir_all(out)?;
    let csv = out.join("train.csv");
    write_train_csv(&csv, trainer.records())?;
    result?;
    let ckpt = out.join("checkpoint.txt");
    checkpoint::save(trainer.nets(), &ckpt)?;
    Ok(TrainSummary {
        csv,
        checkpoint: ckpt,
        last: trainer.records().last().copied(),
        gain: trainer.nets().gain.gain().clone(),
    })
}

/// Steady-state Kalman–Bucy gain for sampled bounded noise.
///
/// Each component `2·b·X − b` held for `dt` has variance `4b²·Var(X)`
/// about its mean; the equivalent white-noise intensities are `Var·dt`.
pub fn kalman_gain_from_bounds(
    plant: &LinearPlant,
    bounds: &NoiseBounds,
    dist: &NoiseDistribution,
    dt: f64,
) -> Result<Mat> {
    dist.validate()?;
    bounds.check_plant(plant)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Invalid(format!("sampling period must be positive, got {dt}")));
    }
    let spectral = |bs: &[f64]| -> Result<Mat> {
        let d: Vec<f64> = bs.iter().map(|b| dist.mapped_moments(*b).1 * dt).collect();
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Invalid(format!("{} has zero variance", dist.label())));
        }
        Ok(Mat::from_diag(&d))
    };
    let qc = spectral(&bounds.w_bar)?;
    let rc = spectral(&bounds.v_bar)?;
    let s = Mat::identity(plant.l.rows());
    Ok(game::solve_filter_riccati(plant, &qc, &rc, &s, None)?.k)
}

/// A named constant-gain filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub name: String,
    pub gain: Mat,
}

impl FilterSpec {
    pub fn new(name: impl Into<String>, gain: Mat) -> Self {
        Self { name: name.into(), gain }
    }

    /// Rejects gains for which `A − K·C` is not Hurwitz.
    pub fn check_stable(&self, plant: &LinearPlant) -> Result<()> {
        if plant.error_matrix(&self.gain)?.is_hurwitz() {
            Ok(())
        } else {
            Err(Error::UnstableFilter(self.name.clone()))
        }
    }
}

/// Trial protocol: horizon, sampling, steering input and the penalty used
/// for the attenuation ratio.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub duration: f64,
    pub dt: f64,
    /// Steering amplitude, radians.
    pub steer_amplitude: f64,
    pub steer_omega: f64,
    pub mode: Mode,
}

impl Protocol {
    pub fn from_config(cfg: &Config) -> Self {
        let c = &cfg.compare;
        Self {
            duration: c.duration,
            dt: c.dt,
            steer_amplitude: c.steer_amplitude_deg.to_radians(),
            steer_omega: c.steer_omega,
            mode: c.mode,
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn steering(&self, t: f64) -> f64 {
        self.steer_amplitude * (self.steer_omega * t).sin()
    }
}

/// Per-filter outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub rms: [f64; 2],
    pub ratio: f64,
}

/// Noise charge for the attenuation ratio. In bounded mode, draws at
/// exactly ±bound are pulled inside so the penalty stays finite.
fn noise_charge(w: &[f64], v: &[f64], weights: &GameWeights, mode: Mode) -> Result<f64> {
    let inside = |x: &[f64], b: &[f64]| -> Vec<f64> {
        x.iter().zip(b).map(|(x, b)| game::saturate(*b, x / b)).collect()
    };
    Ok(match mode {
        Mode::Quadratic => game::process_penalty(w, weights, mode)? + game::measurement_penalty(v, weights, mode)?,
        Mode::Bounded => {
            let b = weights.bounds();
            game::process_penalty(&inside(w, &b.w_bar), weights, mode)?
                + game::measurement_penalty(&inside(v, &b.v_bar), weights, mode)?
        }
    })
}

/// One paired trial: every filter sees the same plant trajectory and the
/// same noise draws. Estimates start at the true state `x(0) = 0`. Noise
/// is drawn once per sample and held; plant and observers are integrated
/// jointly, so the measurement is continuous within a sample.
///
/// RMS columns cover the first two states; integrals use the rectangle rule
/// on the sampling grid.
#[allow(clippy::too_many_arguments)]
pub fn simulate_trial(
    plant: &LinearPlant,
    filters: &[FilterSpec],
    w_bar: &[f64],
    v_bar: &[f64],
    sampler: &UnitSampler,
    protocol: &Protocol,
    weights: &GameWeights,
    rng: &mut ChaCha8Rng,
    mut trace: Option<&mut Vec<Vec<f64>>>,
) -> Result<Vec<TrialMetrics>> {
    let n = plant.states();
    let dt = protocol.dt;
    let mut x = vec![0.0; n];
    let mut est = vec![vec![0.0; n]; filters.len()];
    let mut sq = vec![[0.0f64; 2]; filters.len()];
    let mut err_energy = vec![0.0; filters.len()];
    let mut noise_energy = 0.0;
    let gains: Vec<&Mat> = filters.iter().map(|f| &f.gain).collect();
    for step in 0..protocol.steps() {
        let t = step as f64 * dt;
        let u = [protocol.steering(t)];
        let w = sample_noise_vector(sampler, w_bar, rng);
        let v = sample_noise_vector(sampler, v_bar, rng);
        if let Some(tr) = trace.as_deref_mut() {
            let mut row = vec![t, u[0]];
            row.extend(&x);
            for e in &est {
                row.extend(e);
            }
            tr.push(row);
        }
        noise_energy += noise_charge(&w, &v, weights, protocol.mode)? * dt;
        for (i, e) in est.iter().enumerate() {
            let diff: Vec<f64> = x.iter().zip(e).map(|(a, b)| a - b).collect();
            for (s, d) in sq[i].iter_mut().zip(&diff) {
                *s += d * d * dt;
            }
            err_energy[i] += quad_form(weights.s(), &plant.l.mul_vec(&diff)) * dt;
        }
        (x, est) = observer_bank_step(plant, &gains, &x, &est, &u, &w, &v, dt)?;
    }
    Ok(sq
        .iter()
        .zip(&err_energy)
        .map(|(s, ee)| TrialMetrics {
            rms: s.map(|v| RMS_SCALE * v.sqrt()),
            ratio: if noise_energy > 0.0 { ee / noise_energy } else { 0.0 },
        })
        .collect())
}

/// Trial-averaged results for one (distribution, filter) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub distribution: String,
    pub filter: String,
    pub rms_beta: f64,
    pub rms_omega_r: f64,
    pub attenuation_ratio: f64,
    pub max_attenuation_ratio: f64,
}

pub const COMPARE_HEADER: [&str; 6] = [
    "distribution",
    "filter",
    "rms_beta",
    "rms_omega_r",
    "attenuation_ratio",
    "max_attenuation_ratio",
];

/// Generator for one trial; depends only on the seed, the distribution
/// index and the trial index.
pub fn trial_rng(seed: u64, dist_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((dist_index as u64) << 32) | trial as u64);
    rng
}

/// Gains compared for one distribution: the fixed filters plus the
/// Kalman–Bucy gain matched to that distribution's variance.
fn filters_for(
    plant: &LinearPlant,
    fixed: &[FilterSpec],
    bounds: &NoiseBounds,
    dist: &NoiseDistribution,
    dt: f64,
) -> Result<Vec<FilterSpec>> {
    let mut filters = fixed.to_vec();
    filters.push(FilterSpec::new("kalman", kalman_gain_from_bounds(plant, bounds, dist, dt)?));
    for f in &filters {
        f.check_stable(plant)?;
    }
    Ok(filters)
}

/// Runs `trials` paired trials per distribution and averages them.
#[allow(clippy::too_many_arguments)]
pub fn run_compare(
    plant: &LinearPlant,
    fixed: &[FilterSpec],
    bounds: &NoiseBounds,
    dists: &[NoiseDistribution],
    protocol: &Protocol,
    weights: &GameWeights,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialReport>> {
    if plant.states() < 2 {
        return Err(Error::Invalid("comparison reports two state columns; plant has one state".into()));
    }
    if trials == 0 {
        return Err(Error::Invalid("trials must be positive".into()));
    }
    let mut reports = Vec::new();
    for (di, dist) in dists.iter().enumerate() {
        let filters = filters_for(plant, fixed, bounds, dist, protocol.dt)?;
        let sampler = dist.sampler()?;
        let mut sum = vec![TrialMetrics { rms: [0.0; 2], ratio: 0.0 }; filters.len()];
        let mut max_ratio = vec![0.0f64; filters.len()];
        for trial in 0..trials {
            let mut rng = trial_rng(seed, di, trial);
            let m = simulate_trial(
                plant,
                &filters,
                &bounds.w_bar,
                &bounds.v_bar,
                &sampler,
                protocol,
                weights,
                &mut rng,
                None,
            )?;
            for (i, mi) in m.iter().enumerate() {
                sum[i].rms[0] += mi.rms[0];
                sum[i].rms[1] += mi.rms[1];
                sum[i].ratio += mi.ratio;
                max_ratio[i] = max_ratio[i].max(mi.ratio);
            }
        }
        let k = trials as f64;
        for (i, f) in filters.iter().enumerate() {
            reports.push(TrialReport {
                distribution: dist.label(),
                filter: f.name.clone(),
                rms_beta: sum[i].rms[0] / k,
                rms_omega_r: sum[i].rms[1] / k,
                attenuation_ratio: sum[i].ratio / k,
                max_attenuation_ratio: max_ratio[i],
            });
        }
    }
    Ok(reports)
}

pub fn write_compare_csv(path: &Path, reports: &[TrialReport]) -> Result<()> {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.distribution.clone(),
                r.filter.clone(),
                fmt_f(r.rms_beta),
                fmt_f(r.rms_omega_r),
                fmt_f(r.attenuation_ratio),
                fmt_f(r.max_attenuation_ratio),
            ]
        })
        .collect();
    write_rows(path, &COMPARE_HEADER.map(String::from), &rows)
}

#[derive(Debug, Clone, Default)]
pub struct CompareOptions {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    /// Overrides the configured checkpoint.
    pub checkpoint: Option<PathBuf>,
    pub mode: Option<Mode>,
}

/// Filters that do not depend on the noise law: the learned gain (when a
/// checkpoint is available) and the analytic H∞ gain.
pub fn fixed_filters(cfg: &Config, checkpoint_path: Option<&Path>) -> Result<Vec<FilterSpec>> {
    let plant = cfg.plant()?;
    let mut filters = Vec::new();
    if let Some(path) = checkpoint_path {
        let nets = checkpoint::load(path)?;
        let k = nets.gain.gain().clone();
        if k.shape() != (plant.states(), plant.outputs()) {
            return Err(Error::Invalid(format!(
                "checkpoint gain is {:?}, plant needs {:?}",
                k.shape(),
                (plant.states(), plant.outputs())
            )));
        }
        filters.push(FilterSpec::new("reinforcement", k));
    }
    filters.push(FilterSpec::new("hinf", solve_gare(cfg, false)?.k));
    Ok(filters)
}

/// Runs the comparison and writes `compare.csv` under `out`.
pub fn cmd_compare(cfg: &Config, opts: &CompareOptions, out: &Path) -> Result<Vec<TrialReport>> {
    let plant = cfg.plant()?;
    let mut protocol = Protocol::from_config(cfg);
    if let Some(m) = opts.mode {
        protocol.mode = m;
    }
    let weights = cfg.weights(&plant, protocol.mode)?;
    let bounds = cfg.bounds(&plant, Mode::Bounded)?;
    let ckpt = opts.checkpoint.clone().or_else(|| cfg.checkpoint_path());
    let fixed = fixed_filters(cfg, ckpt.as_deref())?;
    let reports = run_compare(
        &plant,
        &fixed,
        &bounds,
        &cfg.compare.distributions,
        &protocol,
        &weights,
        opts.trials.unwrap_or(cfg.compare.trials),
        opts.seed.unwrap_or(0),
    )?;
    write_compare_csv(&out.join("compare.csv"), &reports)?;
    Ok(reports)
}

/// Dumps one trial (first configured distribution) to `trajectory.csv`:
/// time, steering, true state, then each filter's estimate.
pub fn cmd_simulate(cfg: &Config, opts: &CompareOptions, out: &Path) -> Result<PathBuf> {
    let plant = cfg.plant()?;
    let mut protocol = Protocol::from_config(cfg);
    if let Some(m) = opts.mode {
        protocol.mode = m;
    }
    let weights = cfg.weights(&plant, protocol.mode)?;
    let bounds = cfg.bounds(&plant, Mode::Bounded)?;
    let dist = cfg
        .compare
        .distributions
        .first()
        .ok_or_else(|| Error::Config("compare.distributions is empty".into()))?;
    let ckpt = opts.checkpoint.clone().or_else(|| cfg.checkpoint_path());
    let filters = filters_for(&plant, &fixed_filters(cfg, ckpt.as_deref())?, &bounds, dist, protocol.dt)?;
    let mut rng = trial_rng(opts.seed.unwrap_or(0), 0, 0);
    let mut trace = Vec::new();
    simulate_trial(
        &plant,
        &filters,
        &bounds.w_bar,
        &bounds.v_bar,
        &dist.sampler()?,
        &protocol,
        &weights,
        &mut rng,
        Some(&mut trace),
    )?;
    let n = plant.states();
    let mut header = vec!["t".to_string(), "steer".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    for f in &filters {
        header.extend((1..=n).map(|i| format!("{}_x{i}", f.name)));
    }
    let rows: Vec<Vec<String>> = trace.iter().map(|r| r.iter().copied().map(fmt_f).collect()).collect();
    let path = out.join("trajectory.csv");
    write_rows(&path, &header, &rows)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{bicycle_plant, BicycleParams};
    use rand::RngCore;

    fn setup() -> (LinearPlant, GameWeights, NoiseBounds) {
        let plant = bicycle_plant(&BicycleParams::default()).unwrap();
        let bounds = NoiseBounds::new(vec![0.01, 0.05], vec![0.01, 0.05]).unwrap();
        let weights = GameWeights::new(
            Mat::identity(2).scale(20.0),
            Mat::identity(2).scale(10.0),
            Mat::identity(2),
            1.0,
            bounds.clone(),
        )
        .unwrap();
        (plant, weights, bounds)
    }

    fn protocol(duration: f64) -> Protocol {
        Protocol {
            duration,
            dt: 0.005,
            steer_amplitude: 0.5f64.to_radians(),
            steer_omega: 2.0 * std::f64::consts::PI / 3.0,
            mode: Mode::Quadratic,
        }
    }

    #[test]
    fn zero_noise_gives_zero_error() {
        let (plant, weights, _) = setup();
        let k = game::solve_hinf(&plant, &weights).unwrap().k;
        let filters = [FilterSpec::new("open", Mat::zeros(2, 2)), FilterSpec::new("hinf", k)];
        let sampler = NoiseDistribution::Uniform01.sampler().unwrap();
        let mut rng = trial_rng(0, 0, 0);
        let m = simulate_trial(
            &plant,
            &filters,
            &[0.0, 0.0],
            &[0.0, 0.0],
            &sampler,
            &protocol(2.0),
            &weights,
            &mut rng,
            None,
        )
        .unwrap();
        for mi in m {
            assert_eq!(mi.rms, [0.0, 0.0]);
            assert_eq!(mi.ratio, 0.0);
        }
    }

    #[test]
    fn duplicate_filters_give_identical_columns() {
        let (plant, weights, bounds) = setup();
        let k = game::solve_hinf(&plant, &weights).unwrap().k;
        let fixed = [FilterSpec::new("one", k.clone()), FilterSpec::new("two", k)];
        let reports = run_compare(
            &plant,
            &fixed,
            &bounds,
            &[NoiseDistribution::Beta { alpha: 4.0, beta: 2.0 }],
            &protocol(1.0),
            &weights,
            3,
            11,
        )
        .unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(reports[0].rms_beta, reports[1].rms_beta);
        assert_eq!(reports[0].rms_omega_r, reports[1].rms_omega_r);
        assert_eq!(reports[0].max_attenuation_ratio, reports[1].max_attenuation_ratio);
        assert!(reports[0].rms_beta > 0.0);
        assert_eq!(reports[2].filter, "kalman");
    }

    #[test]
    fn trial_streams_are_independent_of_trial_count() {
        let mut a = trial_rng(5, 1, 7);
        let mut b = trial_rng(5, 1, 7);
        assert_eq!(a.next_u64(), b.next_u64());
        assert_ne!(trial_rng(5, 1, 7).next_u64(), trial_rng(5, 1, 8).next_u64());
        assert_ne!(trial_rng(5, 0, 7).next_u64(), trial_rng(5, 1, 7).next_u64());
    }

    #[test]
    fn kalman_gain_scalar() {
        let one = || Mat::identity(1);
        let plant = LinearPlant::new(one().scale(-1.0), one(), one(), one()).unwrap();
        let bounds = NoiseBounds::new(vec![1.0], vec![1.0]).unwrap();
        // Var = 1/3 for both noises, so Qc = Rc = dt/3 and
        // P = Rc·(√2 − 1), K = √2 − 1.
        let k = kalman_gain_from_bounds(&plant, &bounds, &NoiseDistribution::Uniform01, 0.01).unwrap();
        assert!((k[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-10);
        assert!(kalman_gain_from_bounds(&plant, &bounds, &NoiseDistribution::Uniform01, 0.0).is_err());
    }

    #[test]
    fn kalman_gain_stabilizes_bicycle() {
        let (plant, _, bounds) = setup();
        for dist in [
            NoiseDistribution::Uniform01,
            NoiseDistribution::Beta { alpha: 2.0, beta: 2.0 },
            NoiseDistribution::Triangular { lo: 0.0, hi: 1.0, mode: 0.6 },
        ] {
            let k = kalman_gain_from_bounds(&plant, &bounds, &dist, 0.005).unwrap();
            assert!(FilterSpec::new("k", k).check_stable(&plant).is_ok());
        }
    }

    #[test]
    fn unstable_filter_rejected() {
        let (plant, _, _) = setup();
        let f = FilterSpec::new("bad", Mat::identity(2).scale(-100.0));
        assert!(matches!(f.check_stable(&plant), Err(Error::UnstableFilter(_))));
    }

    #[test]
    fn compare_rejects_zero_trials() {
        let (plant, weights, bounds) = setup();
        let r = run_compare(&plant, &[], &bounds, &[NoiseDistribution::Uniform01], &protocol(1.0), &weights, 0, 0);
        assert!(r.is_err());
    }

    #[test]
    fn protocol_grid() {
        let p = protocol(25.0);
        assert_eq!(p.steps(), 5000);
        assert_eq!(p.steering(0.0), 0.0);
        assert!((p.steering(0.75) - 0.5f64.to_radians()).abs() < 1e-15);
    }
}
