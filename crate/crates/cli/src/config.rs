//! JSON run configuration. Every section except the plant and controller lags has defaults.

use std::path::Path;

use mixfeed::cable::CableParams;
use mixfeed::dominance::{default_lambda, linspace, MapConfig};
use mixfeed::lti::{log_space, FreqGrid, TransferFunction};
use mixfeed::mixed_feedback::{ClosedLoopSystem, MixedFeedbackParams, Saturation};
use mixfeed::simulation::{Pulse, Reference};
use mixfeed::{Error, Result};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub plant: PlantSpec,
    pub tau_p: f64,
    pub tau_n: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Dominance rate; the geometric mean of the two fastest open-loop pole magnitudes when absent.
    pub lambda: Option<f64>,
    #[serde(default)]
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub saturation: SaturationSpec,
    #[serde(default)]
    pub map: MapSpec,
    #[serde(default)]
    pub frequency: FrequencySpec,
    #[serde(default)]
    pub design: DesignSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    pub cable: Option<CableSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    0.5
}

/// Transfer-function coefficients are listed in descending powers of `s`.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantSpec {
    Lag { gain: f64, tau: f64 },
    Tf { num: Vec<f64>, den: Vec<f64> },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    #[default]
    Zero,
    Constant(f64),
    /// Two opposite pulses; unset fields follow the slow time scale.
    Probe {
        amplitude: Option<f64>,
        start: Option<f64>,
        duration: Option<f64>,
        gap: Option<f64>,
    },
    Pulses(Vec<Pulse>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SaturationSpec {
    Tanh { bound: f64 },
    Table { x: Vec<f64>, y: Vec<f64> },
}

impl Default for SaturationSpec {
    fn default() -> Self {
        SaturationSpec::Tanh { bound: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl AxisSpec {
    fn values(&self, name: &str) -> Result<Vec<f64>> {
        if self.points < 2 || !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "{name} axis needs min < max and at least 2 points"
            )));
        }
        if self.log {
            if !(self.min > 0.0) {
                return Err(Error::InvalidInput(format!("{name} log axis needs min > 0")));
            }
            Ok(log_space(self.min, self.max, self.points))
        } else {
            Ok(linspace(self.min, self.max, self.points))
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(default = "default_beta_axis")]
    pub beta: AxisSpec,
    #[serde(default = "default_k_axis")]
    pub k: AxisSpec,
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec {
            beta: default_beta_axis(),
            k: default_k_axis(),
        }
    }
}

fn default_beta_axis() -> AxisSpec {
    AxisSpec {
        min: 0.0,
        max: 1.0,
        points: 100,
        log: false,
    }
}

fn default_k_axis() -> AxisSpec {
    AxisSpec {
        min: 0.1,
        max: 1000.0,
        points: 120,
        log: true,
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    pub w_min: f64,
    pub w_max: f64,
    pub points: usize,
}

impl Default for FrequencySpec {
    fn default() -> Self {
        let g = FreqGrid::default();
        FrequencySpec {
            w_min: g.w_min,
            w_max: g.w_max,
            points: g.points,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub epsilon: Option<f64>,
    pub nu: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    #[serde(default = "yes")]
    pub instability: bool,
    /// Relative spread of τp and τn for the parametric hull.
    #[serde(default = "default_spread")]
    pub vertex_perturbation: f64,
    /// Actuation input vector; the plant input when absent.
    pub input: Option<Vec<f64>>,
    /// Uncertainty channel of the robust design; `input` when absent.
    pub b2: Option<Vec<f64>>,
    /// Uncertainty output of the robust design; the plant output when absent.
    pub c2: Option<Vec<f64>>,
    /// Port output of the passive design; the plant output when absent.
    pub output: Option<Vec<f64>>,
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec {
            epsilon: None,
            nu: None,
            gamma: None,
            mu: None,
            instability: true,
            vertex_perturbation: default_spread(),
            input: None,
            b2: None,
            c2: None,
            output: None,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_spread() -> f64 {
    0.2
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    /// Defaults to 200 slow time constants.
    pub horizon: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub h_max: Option<f64>,
    pub output_dt: Option<f64>,
    /// Defaults to 0.1 on the first state, zero elsewhere.
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        SimulationSpec {
            horizon: None,
            tol: default_tol(),
            h_max: None,
            output_dt: None,
            x0: None,
            transient_fraction: default_transient(),
        }
    }
}

fn default_tol() -> f64 {
    1e-8
}

fn default_transient() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableSpec {
    pub n: usize,
    pub r1: f64,
    pub r2: Vec<f64>,
    pub cm: f64,
}

impl CableSpec {
    pub fn params(&self) -> Result<Vec<CableParams>> {
        if self.r2.is_empty() {
            return Err(Error::InvalidInput("cable.r2 must list at least one value".into()));
        }
        self.r2.iter().map(|&r2| CableParams::new(self.n, self.r1, r2, self.cm)).collect()
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
    }

    pub fn plant_tf(&self) -> Result<TransferFunction> {
        match &self.plant {
            PlantSpec::Lag { gain, tau } => TransferFunction::first_order_lag(*gain, *tau),
            PlantSpec::Tf { num, den } => {
                let asc = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
                TransferFunction::from_coeffs(&asc(num), &asc(den))
            }
        }
    }

    pub fn params(&self) -> Result<MixedFeedbackParams> {
        self.params_with(self.tau_p, self.tau_n)
    }

    pub fn params_with(&self, tau_p: f64, tau_n: f64) -> Result<MixedFeedbackParams> {
        MixedFeedbackParams::new(self.k, self.beta, tau_p, tau_n, self.plant_tf()?)
    }

    pub fn lambda(&self) -> Result<f64> {
        match self.lambda {
            Some(l) if l > 0.0 && l.is_finite() => Ok(l),
            Some(l) => Err(Error::InvalidInput(format!("lambda must be positive (got {l})"))),
            None => default_lambda(&self.params()?),
        }
    }

    pub fn slow_tau(&self) -> f64 {
        self.tau_p.max(self.tau_n)
    }

    pub fn saturation(&self) -> Result<Saturation> {
        match &self.saturation {
            SaturationSpec::Tanh { bound } => Saturation::tanh(*bound),
            SaturationSpec::Table { x, y } => Saturation::table(x.clone(), y.clone()),
        }
    }

    pub fn reference(&self) -> Result<Reference> {
        let tau = self.slow_tau();
        match &self.reference {
            ReferenceSpec::Zero => Ok(Reference::constant(0.0)),
            ReferenceSpec::Constant(r) => Ok(Reference::constant(*r)),
            ReferenceSpec::Probe {
                amplitude,
                start,
                duration,
                gap,
            } => Reference::bistability_probe(
                amplitude.unwrap_or(2.0),
                start.unwrap_or(20.0 * tau),
                duration.unwrap_or(5.0 * tau),
                gap.unwrap_or(20.0 * tau),
            ),
            ReferenceSpec::Pulses(p) => Reference::pulse_train(p.clone()),
        }
    }

    /// Constant reference value used for equilibrium labels in the map.
    pub fn reference_level(&self) -> Result<f64> {
        match &self.reference {
            ReferenceSpec::Zero => Ok(0.0),
            ReferenceSpec::Constant(r) => Ok(*r),
            _ => Err(Error::InvalidInput("the dominance map needs a constant reference".into())),
        }
    }

    pub fn freq_grid(&self) -> Result<FreqGrid> {
        let g = FreqGrid {
            w_min: self.frequency.w_min,
            w_max: self.frequency.w_max,
            points: self.frequency.points,
            ..FreqGrid::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn map_config(&self) -> Result<MapConfig> {
        Ok(MapConfig {
            betas: self.map.beta.values("beta")?,
            ks: self.map.k.values("k")?,
            lambda: self.lambda()?,
            r: self.reference_level()?,
            freq: self.freq_grid()?,
            sat: self.saturation()?,
        })
    }

    /// Nominal closed loop built from `k`, `β` and the plant.
    pub fn closed_loop(&self) -> Result<ClosedLoopSystem> {
        self.params()?.closed_loop(self.saturation()?)
    }

    /// State dimension: plant order plus the two controller lags.
    pub fn state_dim(&self) -> Result<usize> {
        Ok(self.params()?.plant_order() + 2)
    }
}
