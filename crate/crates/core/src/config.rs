//! TOML experiment configuration.
//!
//! Matrices may be given as a scalar (scaled identity), a vector (diagonal)
//! or nested rows. A minimal file needs a plant (either `[vehicle]` or
//! `[plant]`) and `[weights.quadratic]`; see `configs/default.toml`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::game::{GameWeights, Mode};
use crate::linalg::Mat;
use crate::plant::{bicycle_plant, BicycleParams, LinearPlant, NoiseBounds, NoiseDistribution};
use crate::tpi::{LrSchedule, OptimizerKind, TpiConfig};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Diagonal(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixSpec {
    /// Builds the matrix; scalars expand to `s·I(n)`.
    pub fn to_mat(&self, n: usize) -> Result<Mat> {
        Ok(match self {
            MatrixSpec::Scalar(s) => Mat::identity(n).scale(*s),
            MatrixSpec::Diagonal(d) => Mat::from_diag(d),
            MatrixSpec::Rows(rows) => Mat::from_rows(rows)?,
        })
    }

    /// Like [`to_mat`](Self::to_mat) but a flat vector means a single row
    /// of a matrix with `rows = 1` or a column when `cols = 1`.
    fn to_general(&self, rows: usize, cols: usize) -> Result<Mat> {
        match self {
            MatrixSpec::Diagonal(v) if rows != cols => Ok(Mat::new(rows, cols, v.clone())?),
            MatrixSpec::Scalar(s) if rows != cols => Ok(Mat::new(rows, cols, vec![*s; rows * cols])?),
            _ => self.to_mat(rows),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub a: MatrixSpec,
    pub c: MatrixSpec,
    /// Input matrix; defaults to a zero column.
    pub b: Option<MatrixSpec>,
    /// Objective output matrix; defaults to the identity.
    pub l: Option<MatrixSpec>,
    /// Input feedthrough to the measurements; defaults to zero.
    pub d: Option<MatrixSpec>,
    /// Number of measurements when `c` is a scalar.
    pub outputs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub w_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub q: MatrixSpec,
    pub r: MatrixSpec,
    pub s: MatrixSpec,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    pub quadratic: Option<WeightSpec>,
    pub bounded: Option<WeightSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GareSection {
    /// Drop the attenuation term and solve the Kalman–Bucy Riccati equation.
    #[serde(default)]
    pub kalman: bool,
}

/// Optional overrides of the mode defaults in [`TpiConfig`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub alpha_omega: Option<f64>,
    pub alpha_theta: Option<f64>,
    pub alpha_eta: Option<f64>,
    pub num_agents: Option<usize>,
    pub dt: Option<f64>,
    pub reset_horizon: Option<usize>,
    pub state_box: Option<Vec<f64>>,
    pub iterations: Option<usize>,
    pub halve_every: Option<usize>,
    pub optimizer: Option<OptimizerKind>,
    pub hidden: Option<Vec<usize>>,
    pub value_scale: Option<f64>,
    pub value_init: Option<f64>,
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    pub trials: usize,
    /// Trial length, seconds.
    pub duration: f64,
    /// Sampling period, seconds.
    pub dt: f64,
    /// Steering amplitude, degrees.
    pub steer_amplitude_deg: f64,
    /// Steering angular frequency, rad/s.
    pub steer_omega: f64,
    pub distributions: Vec<NoiseDistribution>,
    /// Checkpoint holding the learned gain, relative to the config file.
    pub checkpoint: Option<String>,
    /// Penalty used for the attenuation ratio column.
    pub mode: Mode,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            trials: 100,
            duration: 25.0,
            dt: 0.005,
            steer_amplitude_deg: 0.5,
            steer_omega: 2.0 * std::f64::consts::PI / 3.0,
            distributions: vec![
                NoiseDistribution::Uniform01,
                NoiseDistribution::Beta { alpha: 2.0, beta: 2.0 },
                NoiseDistribution::Triangular {
                    lo: 0.0,
                    hi: 1.0,
                    mode: 0.6,
                },
                NoiseDistribution::Beta { alpha: 4.0, beta: 2.0 },
            ],
            checkpoint: None,
            mode: Mode::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub vehicle: Option<BicycleParams>,
    pub plant: Option<PlantSpec>,
    pub noise: Option<NoiseSpec>,
    pub weights: WeightsSection,
    #[serde(default)]
    pub gare: GareSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub compare: CompareSection,
    /// Directory of the file this was read from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: Option<std::path::PathBuf>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        match (&self.vehicle, &self.plant) {
            (Some(_), Some(_)) => Err(Error::Config("give either [vehicle] or [plant], not both".into())),
            (None, None) => Err(Error::Config("missing plant: add a [vehicle] or [plant] section".into())),
            _ => Ok(()),
        }?;
        if self.weights.quadratic.is_none() && self.weights.bounded.is_none() {
            return Err(Error::Config("missing [weights.quadratic] or [weights.bounded]".into()));
        }
        let c = &self.compare;
        if c.trials == 0 {
            return Err(Error::Config("compare.trials must be positive".into()));
        }
        if !(c.duration > 0.0 && c.dt > 0.0 && c.dt <= c.duration) {
            return Err(Error::Config("compare needs 0 < dt <= duration".into()));
        }
        for d in &c.distributions {
            d.validate()?;
        }
        Ok(())
    }

    pub fn plant(&self) -> Result<LinearPlant> {
        if let Some(p) = &self.vehicle {
            return Ok(bicycle_plant(p)?);
        }
        let spec = self.plant.as_ref().ok_or_else(|| Error::Config("missing plant".into()))?;
        let a = spec.a.to_mat(match &spec.a {
            MatrixSpec::Scalar(_) => 1,
            MatrixSpec::Diagonal(d) => d.len(),
            MatrixSpec::Rows(r) => r.len(),
        })?;
        let n = a.rows();
        let r = match (&spec.c, spec.outputs) {
            (_, Some(r)) => r,
            (MatrixSpec::Rows(rows), None) => rows.len(),
            (MatrixSpec::Diagonal(_), None) if n == 1 => 1,
            _ => n,
        };
        let c = spec.c.to_general(r, n)?;
        let b = match &spec.b {
            Some(b) => b.to_general(n, 1)?,
            None => Mat::zeros(n, 1),
        };
        let l = match &spec.l {
            Some(l) => l.to_mat(n)?,
            None => Mat::identity(n),
        };
        let d = match &spec.d {
            Some(d) => d.to_general(r, b.cols())?,
            None => Mat::zeros(r, b.cols()),
        };
        Ok(LinearPlant::with_feedthrough(a, b, c, l, d)?)
    }

    /// Configured bounds, or unit bounds when absent (quadratic mode only
    /// reads them through the game weights).
    pub fn bounds(&self, plant: &LinearPlant, mode: Mode) -> Result<NoiseBounds> {
        match (&self.noise, mode) {
            (Some(n), _) => {
                let b = NoiseBounds::new(n.w_bar.clone(), n.v_bar.clone())?;
                b.check_plant(plant)?;
                Ok(b)
            }
            (None, Mode::Quadratic) => Ok(NoiseBounds::new(vec![1.0; plant.states()], vec![1.0; plant.outputs()])?),
            (None, Mode::Bounded) => Err(Error::Config("bounded mode needs a [noise] section".into())),
        }
    }

    pub fn weights(&self, plant: &LinearPlant, mode: Mode) -> Result<GameWeights> {
        let spec = match mode {
            Mode::Quadratic => self.weights.quadratic.as_ref(),
            Mode::Bounded => self.weights.bounded.as_ref(),
        }
        .ok_or_else(|| Error::Config(format!("missing [weights.{mode}]")))?;
        let n = plant.states();
        let r = plant.outputs();
        let z = plant.l.rows();
        let w = GameWeights::new(
            spec.q.to_mat(n)?,
            spec.r.to_mat(r)?,
            spec.s.to_mat(z)?,
            spec.gamma,
            self.bounds(plant, mode)?,
        )?;
        Ok(w)
    }

    /// Mode defaults with the `[train]` overrides applied.
    pub fn tpi_config(&self, mode: Mode, n: usize) -> TpiConfig {
        let t = &self.train;
        let mut cfg = TpiConfig::for_mode(mode, n);
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = t.$f.clone() { cfg.$f = v; } )* };
        }
        set!(alpha_omega, alpha_theta, alpha_eta, num_agents, dt, reset_horizon, state_box, iterations, optimizer, hidden, value_scale, value_init);
        if let Some(n) = t.halve_every {
            cfg.lr_schedule = if n == 0 { LrSchedule::None } else { LrSchedule::HalveEvery(n) };
        }
        cfg
    }

    /// Mode for training: `[train] mode`, else quadratic.
    pub fn train_mode(&self) -> Mode {
        self.train.mode.unwrap_or(Mode::Quadratic)
    }

    pub fn checkpoint_path(&self) -> Option<std::path::PathBuf> {
        self.compare.checkpoint.as_ref().map(|p| match &self.base_dir {
            Some(dir) => dir.join(p),
            None => p.into(),
        })
    }
}
