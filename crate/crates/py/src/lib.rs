//! Python bindings. Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hinf_core::bench::{self, TrialReport};
use hinf_core::config::Config as CoreConfig;
use hinf_core::game::{self, Mode};
use hinf_core::linalg::{self, Mat};
use hinf_core::tpi::{self, GameSpec, Reference, TrainRecord};

type Rows = Vec<Vec<f64>>;

fn err(e: hinf_core::Error) -> PyErr {
    if e.exit_code() == 1 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_mat(rows: Rows) -> PyResult<Mat> {
    Mat::from_rows(&rows).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(PyValueError::new_err)
}

/// Stabilizing solution of `A·P + P·Aᵀ + Q − P·M·P = 0`.
#[pyfunction]
fn gare_solve(a: Rows, m: Rows, q: Rows) -> PyResult<Rows> {
    let p = linalg::gare_solve(&to_mat(a)?, &to_mat(m)?, &to_mat(q)?).map_err(|e| err(e.into()))?;
    Ok(p.to_rows())
}

/// Closed-form nonquadratic penalty for diagonal weights.
#[pyfunction]
fn nq_penalty(noise: Vec<f64>, bounds: Vec<f64>, weights: Vec<f64>) -> PyResult<f64> {
    game::nq_penalty(&noise, &bounds, &weights).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// An experiment configuration loaded from TOML.
#[pyclass(module = "hinf")]
struct Config {
    inner: CoreConfig,
}

#[pymethods]
impl Config {
    #[new]
    fn new(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: CoreConfig::load(&path).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreConfig::from_toml(text).map_err(err)?,
        })
    }

    /// `(A, B, C)` of the configured plant.
    fn plant(&self) -> PyResult<(Rows, Rows, Rows)> {
        let p = self.inner.plant().map_err(err)?;
        Ok((p.a.to_rows(), p.b.to_rows(), p.c.to_rows()))
    }

    /// `(P, K)` of the game Riccati equation, or the Kalman–Bucy one.
    #[pyo3(signature = (kalman = false))]
    fn solve_gare(&self, kalman: bool) -> PyResult<(Rows, Rows)> {
        let f = bench::solve_gare(&self.inner, kalman).map_err(err)?;
        Ok((f.p.to_rows(), f.k.to_rows()))
    }

    /// Worst-case `(w, v)` for a value gradient and gain.
    #[pyo3(signature = (grad_v, k, mode = "bounded"))]
    fn worst_noise(&self, grad_v: Vec<f64>, k: Rows, mode: &str) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let mode = parse_mode(mode)?;
        let plant = self.inner.plant().map_err(err)?;
        let weights = self.inner.weights(&plant, mode).map_err(err)?;
        let k = to_mat(k)?;
        if grad_v.len() != plant.states() || k.shape() != (plant.states(), plant.outputs()) {
            return Err(PyValueError::new_err("grad_v or k does not match the plant"));
        }
        Ok(game::worst_noise(&grad_v, &k, &weights, mode))
    }

    /// Runs ternary policy iteration and returns the result.
    #[pyo3(signature = (mode = None, seed = None, iterations = None))]
    fn train(&self, py: Python<'_>, mode: Option<&str>, seed: Option<u64>, iterations: Option<usize>) -> PyResult<TrainResult> {
        let mode = match mode {
            Some(m) => parse_mode(m)?,
            None => self.inner.train_mode(),
        };
        let cfg = &self.inner;
        py.detach(|| {
            let plant = cfg.plant()?;
            let weights = cfg.weights(&plant, mode)?;
            let mut tcfg = cfg.tpi_config(mode, plant.states());
            tcfg.mode = mode;
            if let Some(s) = seed {
                tcfg.seed = s;
            }
            if let Some(i) = iterations {
                tcfg.iterations = i;
            }
            let game = GameSpec::new(&plant, &weights, mode)?;
            let reference = match mode {
                Mode::Quadratic => Some(Reference::from_solution(&game::solve_hinf(&plant, &weights)?, &weights)?),
                Mode::Bounded => None,
            };
            let out = tpi::train(&tcfg, game, reference)?;
            Ok::<_, hinf_core::Error>(TrainResult {
                gain: out.nets.gain.gain().to_rows(),
                value_params: out.nets.value.params().to_vec(),
                records: out.records.iter().map(record).collect(),
                checkpoint: hinf_core::checkpoint::to_string(&out.nets),
            })
        })
        .map_err(err)
    }

    /// Monte-Carlo comparison; returns one dict per (distribution, filter).
    #[pyo3(signature = (checkpoint = None, trials = None, seed = None, mode = None))]
    fn compare(
        &self,
        py: Python<'_>,
        checkpoint: Option<PathBuf>,
        trials: Option<usize>,
        seed: Option<u64>,
        mode: Option<&str>,
    ) -> PyResult<Vec<Report>> {
        let mode = mode.map(parse_mode).transpose()?;
        let cfg = &self.inner;
        let reports = py
            .detach(|| -> hinf_core::Result<Vec<TrialReport>> {
                let plant = cfg.plant()?;
                let mut protocol = bench::Protocol::from_config(cfg);
                if let Some(m) = mode {
                    protocol.mode = m;
                }
                let weights = cfg.weights(&plant, protocol.mode)?;
                let bounds = cfg.bounds(&plant, Mode::Bounded)?;
                let ckpt = checkpoint.or_else(|| cfg.checkpoint_path());
                let fixed = bench::fixed_filters(cfg, ckpt.as_deref())?;
                bench::run_compare(
                    &plant,
                    &fixed,
                    &bounds,
                    &cfg.compare.distributions,
                    &protocol,
                    &weights,
                    trials.unwrap_or(cfg.compare.trials),
                    seed.unwrap_or(0),
                )
            })
            .map_err(err)?;
        Ok(reports.into_iter().map(Report::from).collect())
    }
}

/// Output of [`Config::train`].
#[pyclass(module = "hinf", get_all)]
struct TrainResult {
    gain: Rows,
    value_params: Vec<f64>,
    /// `(iter, value_loss, gain_loss, e_omega, e_theta)` per iteration.
    records: Vec<Record>,
    checkpoint: String,
}

type Record = (usize, f64, f64, Option<f64>, Option<f64>);

fn record(r: &TrainRecord) -> Record {
    (r.iter, r.value_loss, r.gain_loss, r.e_omega, r.e_theta)
}

#[pymethods]
impl TrainResult {
    /// Value losses per iteration.
    fn value_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.1).collect()
    }

    /// Final `(e_omega, e_theta)`, when a reference was available.
    fn final_errors(&self) -> Option<(f64, f64)> {
        let r = self.records.last()?;
        Some((r.3?, r.4?))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(path, &self.checkpoint).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.records.len()
    }
}

/// One row of the comparison table.
#[pyclass(module = "hinf", get_all)]
struct Report {
    distribution: String,
    filter: String,
    rms_beta: f64,
    rms_omega_r: f64,
    attenuation_ratio: f64,
    max_attenuation_ratio: f64,
}

impl From<TrialReport> for Report {
    fn from(r: TrialReport) -> Self {
        Self {
            distribution: r.distribution,
            filter: r.filter,
            rms_beta: r.rms_beta,
            rms_omega_r: r.rms_omega_r,
            attenuation_ratio: r.attenuation_ratio,
            max_attenuation_ratio: r.max_attenuation_ratio,
        }
    }
}

#[pymethods]
impl Report {
    fn __repr__(&self) -> String {
        format!(
            "Report({} {} rms_beta={:.4} rms_omega_r={:.4})",
            self.distribution, self.filter, self.rms_beta, self.rms_omega_r
        )
    }
}

#[pymodule]
fn hinf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gare_solve, m)?)?;
    m.add_function(wrap_pyfunction!(nq_penalty, m)?)?;
    m.add_class::<Config>()?;
    m.add_class::<TrainResult>()?;
    m.add_class::<Report>()?;
    Ok(())
}
