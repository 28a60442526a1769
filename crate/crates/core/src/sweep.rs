//! Parameter sweeps. Every point runs its own evolution on a rayon pool and
//! results come back in input order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_pure, EvolutionResult, IntegratorConfig};
use crate::model::{make_initial_state, CouplingForm, PseudoModeModel, QubitPair};
use crate::observables::{detect_esd, ConcurrenceSeries, DEFAULT_ESD_THRESHOLD};
use crate::spectrum::{decompose_peaks, Disturbance, LorentzianBath};
use crate::{Error, Result};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PSEUDOMODE_THREADS";

/// Reads [`THREADS_ENV`]. Unset or empty means "use all cores".
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidParameter(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Maps `f` over `items` on a pool of `threads` workers (all cores when
/// `None`). Output order follows input order; the first error wins.
pub fn par_map<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Physical setup from which a pseudo-mode model is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub qubits: QubitPair,
    pub bath: LorentzianBath,
    /// `None` for the undisturbed single-mode bath.
    pub disturbance: Option<Disturbance>,
    pub coupling_form: CouplingForm,
    pub n_max: usize,
}

impl System {
    pub fn model(&self) -> Result<PseudoModeModel> {
        match &self.disturbance {
            None => PseudoModeModel::off_disturbance(self.qubits, &self.bath, self.coupling_form, self.n_max),
            Some(d) => {
                let peaks = decompose_peaks(&self.bath, d)?;
                PseudoModeModel::from_peaks(self.qubits, &peaks, self.coupling_form, self.n_max)
            }
        }
    }

    pub fn evolve(&self, theta: f64, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
        let model = self.model()?;
        let psi0 = make_initial_state(theta, &model)?;
        evolve_pure(&model, &psi0, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Delta,
    Intensity,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub esd_time: Option<f64>,
    pub final_concurrence: f64,
    pub final_survival: f64,
}

impl SweepPoint {
    fn from_result(value: f64, r: &EvolutionResult) -> Self {
        let series = ConcurrenceSeries {
            times: r.times.clone(),
            values: r.concurrence(),
        };
        let final_survival = r.survival.as_ref().and_then(|p| p.last().copied()).unwrap_or(f64::NAN);
        Self {
            value,
            esd_time: detect_esd(&series, DEFAULT_ESD_THRESHOLD),
            final_concurrence: *series.values.last().expect("at least one sample"),
            final_survival,
        }
    }
}

/// Replaces the swept parameter of `system` (and `theta`) by `value`.
fn at(system: &System, theta: f64, axis: SweepAxis, value: f64) -> Result<(System, f64)> {
    let mut s = *system;
    match axis {
        SweepAxis::Delta => {
            let q = s.qubits;
            s.qubits = QubitPair::new(value, q.g, q.alpha1, q.alpha2)?;
            Ok((s, theta))
        }
        SweepAxis::Intensity => {
            let omega_big = s
                .disturbance
                .ok_or_else(|| Error::InvalidParameter("intensity sweep needs a disturbance".into()))?
                .omega_big;
            s.disturbance = Some(Disturbance::new(value, omega_big)?);
            Ok((s, theta))
        }
        SweepAxis::Theta => Ok((s, value)),
    }
}

/// Evolves `system` at every `values` point of `axis` and summarizes each
/// run by its sudden-death time and final concurrence and survival.
pub fn sweep(
    system: &System,
    theta: f64,
    axis: SweepAxis,
    values: &[f64],
    cfg: &IntegratorConfig,
    threads: Option<usize>,
) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let points: Vec<(System, f64)> = values.iter().map(|&v| at(system, theta, axis, v)).collect::<Result<_>>()?;
    let results = par_map(&points, threads, |(s, th)| s.evolve(*th, cfg))?;
    Ok(values.iter().zip(&results).map(|(&v, r)| SweepPoint::from_result(v, r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn system(disturbance: Option<Disturbance>) -> System {
        System {
            qubits: QubitPair::new(1.0, 0.5, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap(),
            bath: LorentzianBath::new(1.0, 0.1).unwrap(),
            disturbance,
            coupling_form: CouplingForm::Rwa,
            n_max: 1,
        }
    }

    fn short() -> IntegratorConfig {
        IntegratorConfig::new(1e-2, 2.0, 10).unwrap()
    }

    #[test]
    fn par_map_keeps_order() {
        let items: Vec<usize> = (0..50).collect();
        let out = par_map(&items, Some(3), |&i| Ok(i * i)).unwrap();
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn par_map_propagates_errors() {
        let items = [1, 2, 3];
        let out: Result<Vec<i32>> = par_map(&items, Some(2), |&i| {
            if i == 2 {
                Err(Error::InvalidParameter("two".into()))
            } else {
                Ok(i)
            }
        });
        assert!(out.is_err());
    }

    #[test]
    fn sweep_matches_direct_runs() {
        let s = system(None);
        let deltas = [0.75, 1.0, 1.25];
        let points = sweep(&s, FRAC_PI_2, SweepAxis::Delta, &deltas, &short(), Some(2)).unwrap();
        for (p, &d) in points.iter().zip(&deltas) {
            let mut direct = s;
            direct.qubits.delta = d;
            let r = direct.evolve(FRAC_PI_2, &short()).unwrap();
            assert_eq!(p.value, d);
            assert_eq!(p.final_survival, *r.survival.as_ref().unwrap().last().unwrap());
            assert_eq!(p.final_concurrence, *r.concurrence().last().unwrap());
        }
    }

    #[test]
    fn sweep_is_deterministic_across_thread_counts() {
        let s = system(Some(Disturbance::new(1.5, 0.8).unwrap()));
        let thetas = [0.0, 0.5, 1.0, 2.0];
        let a = sweep(&s, 0.0, SweepAxis::Theta, &thetas, &short(), Some(1)).unwrap();
        let b = sweep(&s, 0.0, SweepAxis::Theta, &thetas, &short(), Some(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intensity_sweep_requires_disturbance() {
        let err = sweep(&system(None), FRAC_PI_2, SweepAxis::Intensity, &[1.0], &short(), None).unwrap_err();
        assert!(err.is_input());
    }
}
