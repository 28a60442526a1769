//! Data bundles for the six figure layouts. Panel-defining parameters
//! (coupling sets, detunings, disturbance switches, grids) are fixed here;
//! the remaining physics and all numerics come from the run configuration.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use pseudomode_core::dynamics::{evolve_survival, evolve_theta_family, IntegratorConfig};
use pseudomode_core::model::{subradiant_state, superradiant_state, CouplingForm, QubitPair};
use pseudomode_core::spectrum::{Disturbance, LorentzianBath};
use pseudomode_core::Result as CoreResult;
use pseudomode_core::sweep::{par_map, System};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{fmt_g12, Table};
use crate::scenarios::{linspace, peak_table, spectrum_table};
use crate::CliError;

#[allow(clippy::enum_variant_names)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FigureId {
    SpectrumFig,
    PeakparamsFig,
    ConcurrenceFig,
    ConcurOffresFig,
    ProbabilityFig,
    ProbOffresFig,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            Self::SpectrumFig => "spectrum-fig",
            Self::PeakparamsFig => "peakparams-fig",
            Self::ConcurrenceFig => "concurrence-fig",
            Self::ConcurOffresFig => "concur-offres-fig",
            Self::ProbabilityFig => "probability-fig",
            Self::ProbOffresFig => "prob-offres-fig",
        }
    }
}

pub const SPECTRUM_INTENSITIES: [f64; 2] = [0.5, 1.5];
pub const SPECTRUM_POINTS: usize = 801;
pub const SPECTRUM_RANGE: (f64, f64) = (0.0, 4.0);
pub const PEAK_INTENSITY_RANGE: (f64, f64) = (0.3, 3.0);
pub const PEAK_INTENSITY_POINTS: usize = 271;
pub const THETA_POINTS: usize = 64;
pub const OFF_RESONANCE_DELTAS: [f64; 4] = [0.75, 1.25, 1.5, 1.75];
/// Equal couplings, then qubit 2 decoupled.
pub const ALPHA_SETS: [(f64, f64); 2] = [(FRAC_1_SQRT_2, FRAC_1_SQRT_2), (1.0, 0.0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Off,
    On,
    Rwa,
}

impl Case {
    const ALL: [Case; 3] = [Case::Off, Case::On, Case::Rwa];

    fn column(self) -> &'static str {
        match self {
            Case::Off => "off",
            Case::On => "on",
            Case::Rwa => "rwa",
        }
    }
}

/// Sample times and values.
type Curve = (Vec<f64>, Vec<f64>);

pub struct Panel {
    pub file: String,
    pub description: Value,
    pub table: Table,
}

pub fn panel_file(k: usize) -> String {
    format!("panel_{}.csv", (b'a' + k as u8) as char)
}

fn system(cfg: &RunConfig, alphas: (f64, f64), delta: f64, case: Case) -> CoreResult<System> {
    let p = &cfg.physics;
    Ok(System {
        qubits: QubitPair::new(delta, p.g, alphas.0, alphas.1)?,
        bath: LorentzianBath::new(p.omega0, p.gamma)?,
        disturbance: match case {
            Case::On => Some(Disturbance::new(p.intensity, p.omega_big)?),
            Case::Off | Case::Rwa => None,
        },
        coupling_form: match case {
            Case::Rwa => CouplingForm::Rwa,
            Case::Off | Case::On => CouplingForm::FullCr,
        },
        n_max: cfg.numerics.n_max,
    })
}

pub fn thetas() -> Vec<f64> {
    (0..THETA_POINTS).map(|k| 2.0 * PI * k as f64 / THETA_POINTS as f64).collect()
}

pub fn reproduce(id: FigureId, cfg: &RunConfig, threads: Option<usize>) -> Result<Vec<Panel>, CliError> {
    let icfg = cfg.integrator()?;
    match id {
        FigureId::SpectrumFig => spectrum_fig(cfg),
        FigureId::PeakparamsFig => {
            let grid = linspace(PEAK_INTENSITY_RANGE.0, PEAK_INTENSITY_RANGE.1, PEAK_INTENSITY_POINTS);
            Ok(vec![Panel {
                file: panel_file(0),
                description: json!({ "gamma": cfg.physics.gamma, "omega_big": cfg.physics.omega_big }),
                table: peak_table(&cfg.bath()?, cfg.physics.omega_big, grid)?,
            }])
        }
        FigureId::ConcurrenceFig => concurrence_fig(cfg, &icfg, threads),
        FigureId::ConcurOffresFig => offres_fig(cfg, &icfg, threads, true),
        FigureId::ProbabilityFig => probability_fig(cfg, &icfg, threads),
        FigureId::ProbOffresFig => offres_fig(cfg, &icfg, threads, false),
    }
}

fn spectrum_fig(cfg: &RunConfig) -> Result<Vec<Panel>, CliError> {
    let dists = SPECTRUM_INTENSITIES
        .iter()
        .map(|&i| Ok((format!("_I{i}"), Disturbance::new(i, cfg.physics.omega_big)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let omegas = linspace(SPECTRUM_RANGE.0, SPECTRUM_RANGE.1, SPECTRUM_POINTS);
    Ok(vec![Panel {
        file: panel_file(0),
        description: json!({ "intensities": SPECTRUM_INTENSITIES }),
        table: spectrum_table(&cfg.bath()?, &dists, omegas)?,
    }])
}

fn concurrence_fig(cfg: &RunConfig, icfg: &IntegratorConfig, threads: Option<usize>) -> Result<Vec<Panel>, CliError> {
    let jobs: Vec<((f64, f64), Case)> = ALPHA_SETS
        .iter()
        .flat_map(|&a| Case::ALL.map(|c| (a, c)))
        .collect();
    let thetas = thetas();
    let delta = cfg.physics.delta;
    let runs = par_map(&jobs, threads, |&(alphas, case)| {
        let model = system(cfg, alphas, delta, case)?.model()?;
        evolve_theta_family(&model, &thetas, icfg)
    })?;
    Ok(jobs
        .iter()
        .zip(runs)
        .enumerate()
        .map(|(k, (&(alphas, case), family))| {
            let mut table = Table::new("time", family[0].times.clone());
            for (theta, r) in thetas.iter().zip(&family) {
                table.push(format!("theta={}", fmt_g12(*theta)), r.concurrence());
            }
            Panel {
                file: panel_file(k),
                description: json!({ "alpha1": alphas.0, "alpha2": alphas.1, "case": case, "delta": delta }),
                table,
            }
        })
        .collect())
}

/// Survival of `psi` for every case, one column each.
fn survival_columns(
    cfg: &RunConfig,
    icfg: &IntegratorConfig,
    threads: Option<usize>,
    jobs: &[((f64, f64), f64, bool, Case)],
) -> Result<Vec<Curve>, CliError> {
    Ok(par_map(jobs, threads, |&(alphas, delta, superradiant, case)| {
        let model = system(cfg, alphas, delta, case)?.model()?;
        let psi = if superradiant {
            superradiant_state(&model)
        } else {
            subradiant_state(&model)
        };
        Ok(evolve_survival(&model, &psi, icfg)?.into_iter().unzip())
    })?)
}

fn probability_fig(cfg: &RunConfig, icfg: &IntegratorConfig, threads: Option<usize>) -> Result<Vec<Panel>, CliError> {
    let delta = cfg.physics.delta;
    let panels: Vec<((f64, f64), bool)> = ALPHA_SETS.iter().flat_map(|&a| [(a, true), (a, false)]).collect();
    let jobs: Vec<_> = panels
        .iter()
        .flat_map(|&(a, sup)| Case::ALL.map(|c| (a, delta, sup, c)))
        .collect();
    let columns = survival_columns(cfg, icfg, threads, &jobs)?;
    Ok(panels
        .iter()
        .zip(columns.chunks(Case::ALL.len()))
        .enumerate()
        .map(|(k, (&(alphas, sup), cols))| {
            let mut table = Table::new("time", cols[0].0.clone());
            for (case, (_, p)) in Case::ALL.iter().zip(cols) {
                table.push(case.column(), p.clone());
            }
            Panel {
                file: panel_file(k),
                description: json!({
                    "alpha1": alphas.0,
                    "alpha2": alphas.1,
                    "initial_state": if sup { "superradiant" } else { "subradiant" },
                    "delta": delta,
                }),
                table,
            }
        })
        .collect())
}

/// Off- and on-disturbance curves for each detuning, concurrence or
/// survival of the superradiant state with equal couplings.
fn offres_fig(cfg: &RunConfig, icfg: &IntegratorConfig, threads: Option<usize>, concurrence: bool) -> Result<Vec<Panel>, CliError> {
    let cases = [Case::Off, Case::On];
    let alphas = ALPHA_SETS[0];
    let columns: Vec<Curve> = if concurrence {
        let jobs: Vec<(f64, Case)> = OFF_RESONANCE_DELTAS.iter().flat_map(|&d| cases.map(|c| (d, c))).collect();
        par_map(&jobs, threads, |&(delta, case)| {
            let r = system(cfg, alphas, delta, case)?.evolve(FRAC_PI_2, icfg)?;
            Ok((r.times.clone(), r.concurrence()))
        })?
    } else {
        let jobs: Vec<_> = OFF_RESONANCE_DELTAS
            .iter()
            .flat_map(|&d| cases.map(|c| (alphas, d, true, c)))
            .collect();
        survival_columns(cfg, icfg, threads, &jobs)?
    };
    let quantity = if concurrence { "concurrence" } else { "survival" };
    Ok(OFF_RESONANCE_DELTAS
        .iter()
        .zip(columns.chunks(cases.len()))
        .enumerate()
        .map(|(k, (&delta, cols))| {
            let mut table = Table::new("time", cols[0].0.clone());
            for (case, (_, v)) in cases.iter().zip(cols) {
                table.push(case.column(), v.clone());
            }
            Panel {
                file: panel_file(k),
                description: json!({
                    "delta": delta,
                    "alpha1": alphas.0,
                    "alpha2": alphas.1,
                    "initial_state": "superradiant",
                    "quantity": quantity,
                }),
                table,
            }
        })
        .collect())
}
