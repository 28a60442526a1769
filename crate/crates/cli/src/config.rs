//! Run configuration: a JSON document whose fields can each be overridden
//! from the command line. Every physics value is in units of `ω0`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::path::Path;

use pseudomode_core::dynamics::{IntegratorConfig, DEFAULT_DT, DEFAULT_SAMPLE_EVERY, DEFAULT_T_MAX};
use pseudomode_core::model::{CouplingForm, QubitPair, ALPHA_NORM_TOL, DEFAULT_N_MAX};
use pseudomode_core::spectrum::{Disturbance, LorentzianBath};
use pseudomode_core::sweep::{SweepAxis, System};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceSwitch {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub delta: f64,
    pub g: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub intensity: f64,
    pub omega_big: f64,
    pub theta: f64,
    pub disturbance: DisturbanceSwitch,
    pub coupling_form: CouplingForm,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            g: 0.5,
            alpha1: FRAC_1_SQRT_2,
            alpha2: FRAC_1_SQRT_2,
            omega0: 1.0,
            gamma: 0.1,
            intensity: 1.5,
            omega_big: 0.8,
            theta: FRAC_PI_2,
            disturbance: DisturbanceSwitch::On,
            coupling_form: CouplingForm::FullCr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_every: usize,
    pub n_max: usize,
    /// Rerun `evolve` at twice the cutoff and fail if results move.
    pub convergence_check: bool,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_max: DEFAULT_T_MAX,
            sample_every: DEFAULT_SAMPLE_EVERY,
            n_max: DEFAULT_N_MAX,
            convergence_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            omega_min: 0.0,
            omega_max: 4.0,
            points: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Delta,
            values: vec![0.75, 1.0, 1.25, 1.5, 1.75],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub numerics: NumericsConfig,
    pub spectrum: SpectrumConfig,
    pub sweep: SweepConfig,
}

/// Command-line values that replace config-file fields when present.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Qubit transition frequency.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Qubit-bath coupling strength.
    #[arg(long, global = true)]
    pub g: Option<f64>,
    /// Relative coupling of qubit 1.
    #[arg(long, global = true)]
    pub alpha1: Option<f64>,
    /// Relative coupling of qubit 2.
    #[arg(long, global = true)]
    pub alpha2: Option<f64>,
    /// Bath peak frequency.
    #[arg(long, global = true)]
    pub omega0: Option<f64>,
    /// Bath peak half-width.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Disturbance intensity I.
    #[arg(long, global = true)]
    pub intensity: Option<f64>,
    /// Disturbance oscillator frequency.
    #[arg(long, global = true)]
    pub omega_big: Option<f64>,
    /// Initial state cos(theta/2)|10> + sin(theta/2)|01>.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Disturbance on or off.
    #[arg(long, global = true, value_enum)]
    pub disturbance: Option<DisturbanceSwitch>,
    /// full_cr or rwa.
    #[arg(long, global = true, value_parser = parse_coupling_form)]
    pub coupling_form: Option<CouplingForm>,
    /// Integrator step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    /// Steps between output samples.
    #[arg(long, global = true)]
    pub sample_every: Option<usize>,
    /// Fock cutoff per pseudo-mode.
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Also run at twice the cutoff; exit 4 if results differ.
    #[arg(long, global = true)]
    pub convergence_check: bool,
    /// Spectrum grid start.
    #[arg(long, global = true)]
    pub omega_min: Option<f64>,
    /// Spectrum grid end.
    #[arg(long, global = true)]
    pub omega_max: Option<f64>,
    /// Spectrum grid size.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Sweep axis: delta, intensity or theta.
    #[arg(long, global = true, value_parser = parse_axis)]
    pub axis: Option<SweepAxis>,
    /// Comma-separated sweep values.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
}

fn parse_coupling_form(s: &str) -> Result<CouplingForm, String> {
    match s {
        "full_cr" | "full-cr" => Ok(CouplingForm::FullCr),
        "rwa" => Ok(CouplingForm::Rwa),
        _ => Err(format!("expected full_cr or rwa, got {s:?}")),
    }
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    match s {
        "delta" => Ok(SweepAxis::Delta),
        "intensity" => Ok(SweepAxis::Intensity),
        "theta" => Ok(SweepAxis::Theta),
        _ => Err(format!("expected delta, intensity or theta, got {s:?}")),
    }
}

fn set<T: Clone>(field: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *field = v.clone();
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_json(&text)?
            }
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    fn apply(&mut self, o: &Overrides) {
        let p = &mut self.physics;
        set(&mut p.delta, &o.delta);
        set(&mut p.g, &o.g);
        set(&mut p.alpha1, &o.alpha1);
        set(&mut p.alpha2, &o.alpha2);
        set(&mut p.omega0, &o.omega0);
        set(&mut p.gamma, &o.gamma);
        set(&mut p.intensity, &o.intensity);
        set(&mut p.omega_big, &o.omega_big);
        set(&mut p.theta, &o.theta);
        set(&mut p.disturbance, &o.disturbance);
        set(&mut p.coupling_form, &o.coupling_form);
        let n = &mut self.numerics;
        set(&mut n.dt, &o.dt);
        set(&mut n.t_max, &o.t_max);
        set(&mut n.sample_every, &o.sample_every);
        set(&mut n.n_max, &o.n_max);
        n.convergence_check |= o.convergence_check;
        let s = &mut self.spectrum;
        set(&mut s.omega_min, &o.omega_min);
        set(&mut s.omega_max, &o.omega_max);
        set(&mut s.points, &o.points);
        set(&mut self.sweep.axis, &o.axis);
        set(&mut self.sweep.values, &o.values);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |path: &str, msg: String| Err(CliError::Config(format!("{path}: {msg}")));
        let p = &self.physics;
        let finite = [
            ("physics.delta", p.delta),
            ("physics.g", p.g),
            ("physics.alpha1", p.alpha1),
            ("physics.alpha2", p.alpha2),
            ("physics.omega0", p.omega0),
            ("physics.gamma", p.gamma),
            ("physics.intensity", p.intensity),
            ("physics.omega_big", p.omega_big),
            ("physics.theta", p.theta),
            ("numerics.dt", self.numerics.dt),
            ("numerics.t_max", self.numerics.t_max),
            ("spectrum.omega_min", self.spectrum.omega_min),
            ("spectrum.omega_max", self.spectrum.omega_max),
        ];
        for (path, v) in finite {
            if !v.is_finite() {
                return fail(path, format!("must be finite, got {v}"));
            }
        }
        let positive = [
            ("physics.delta", p.delta),
            ("physics.omega0", p.omega0),
            ("physics.gamma", p.gamma),
            ("physics.omega_big", p.omega_big),
            ("numerics.dt", self.numerics.dt),
            ("numerics.t_max", self.numerics.t_max),
        ];
        for (path, v) in positive {
            if v <= 0.0 {
                return fail(path, format!("must be positive, got {v}"));
            }
        }
        if p.g < 0.0 {
            return fail("physics.g", format!("must be non-negative, got {}", p.g));
        }
        if p.intensity < 0.0 {
            return fail("physics.intensity", format!("must be non-negative, got {}", p.intensity));
        }
        let norm = p.alpha1 * p.alpha1 + p.alpha2 * p.alpha2;
        if (norm - 1.0).abs() > ALPHA_NORM_TOL {
            return fail("physics.alpha1", format!("alpha1^2 + alpha2^2 = {norm}, must equal 1"));
        }
        if self.numerics.sample_every == 0 {
            return fail("numerics.sample_every", "must be at least 1".into());
        }
        if self.numerics.n_max == 0 {
            return fail("numerics.n_max", "must be at least 1".into());
        }
        let s = &self.spectrum;
        if s.omega_min < 0.0 || s.omega_max <= s.omega_min {
            return fail(
                "spectrum.omega_max",
                format!("need 0 <= omega_min < omega_max, got [{}, {}]", s.omega_min, s.omega_max),
            );
        }
        if s.points < 2 {
            return fail("spectrum.points", format!("must be at least 2, got {}", s.points));
        }
        if self.sweep.values.is_empty() {
            return fail("sweep.values", "must not be empty".into());
        }
        if let Some(v) = self.sweep.values.iter().find(|v| !v.is_finite()) {
            return fail("sweep.values", format!("must be finite, got {v}"));
        }
        Ok(())
    }

    pub fn qubits(&self) -> Result<QubitPair, CliError> {
        let p = &self.physics;
        Ok(QubitPair::new(p.delta, p.g, p.alpha1, p.alpha2)?)
    }

    pub fn bath(&self) -> Result<LorentzianBath, CliError> {
        Ok(LorentzianBath::new(self.physics.omega0, self.physics.gamma)?)
    }

    pub fn disturbance(&self) -> Result<Disturbance, CliError> {
        Ok(Disturbance::new(self.physics.intensity, self.physics.omega_big)?)
    }

    pub fn system(&self) -> Result<System, CliError> {
        Ok(System {
            qubits: self.qubits()?,
            bath: self.bath()?,
            disturbance: match self.physics.disturbance {
                DisturbanceSwitch::On => Some(self.disturbance()?),
                DisturbanceSwitch::Off => None,
            },
            coupling_form: self.physics.coupling_form,
            n_max: self.numerics.n_max,
        })
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, CliError> {
        let n = &self.numerics;
        Ok(IntegratorConfig::new(n.dt, n.t_max, n.sample_every)?)
    }
}
