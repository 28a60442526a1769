use pseudomode_core::dynamics::{convergence_scan, evolve_survival, max_deviation, EvolutionResult};
use pseudomode_core::model::{make_initial_state, CouplingForm, IDX_01, IDX_10};
use pseudomode_core::observables::{detect_esd, ConcurrenceSeries, DEFAULT_ESD_THRESHOLD};
use pseudomode_core::operators::C64;
use pseudomode_core::oracle::{
    binned_density, discretize, quadratic_normal_modes, rwa_single_excitation_evolve, DEFAULT_BATH_HI,
    DEFAULT_BATH_LO, DEFAULT_BATH_MODES,
};
use pseudomode_core::spectrum::{
    decompose_peaks, j_b_simplified, j_b_standard, j_r_simplified, j_r_standard, spectral_weight, Disturbance,
    LorentzianBath,
};
use pseudomode_core::sweep::{sweep, SweepAxis};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::Table;
use crate::CliError;

/// Relative L² tolerance of the normal-mode spectrum check.
pub const NORMAL_MODE_TOL: f64 = 0.05;
/// Absolute tolerance of the single-excitation check.
pub const SINGLE_EXCITATION_TOL: f64 = 2e-2;
/// Normal-mode histogram bins span this many discretization steps.
pub const BIN_STEPS: f64 = 16.0;
/// Band over which the normal-mode histogram is compared.
pub const COMPARE_BAND: (f64, f64) = (0.05, 4.0);

/// Tables to write plus scenario-specific results for the metadata file.
pub struct Output {
    pub tables: Vec<(String, Table)>,
    pub results: Value,
}

impl Output {
    pub fn single(name: &str, table: Table) -> Self {
        Self {
            tables: vec![(name.to_string(), table)],
            results: Value::Null,
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

pub fn spectrum_table(bath: &LorentzianBath, intensities: &[(String, Disturbance)], omegas: Vec<f64>) -> Result<Table, CliError> {
    let mut t = Table::new("omega", omegas.clone());
    t.push("j_b_standard", omegas.iter().map(|&w| j_b_standard(w, bath)).collect());
    t.push("j_b_simplified", omegas.iter().map(|&w| j_b_simplified(w, bath)).collect());
    for (suffix, d) in intensities {
        let peaks = decompose_peaks(bath, d)?;
        t.push(format!("j_r_standard{suffix}"), omegas.iter().map(|&w| j_r_standard(w, bath, d)).collect());
        t.push(format!("j_r_simplified{suffix}"), omegas.iter().map(|&w| j_r_simplified(w, &peaks)).collect());
    }
    Ok(t)
}

pub fn spectrum(cfg: &RunConfig) -> Result<Output, CliError> {
    let s = &cfg.spectrum;
    let omegas = linspace(s.omega_min, s.omega_max, s.points);
    let table = spectrum_table(&cfg.bath()?, &[(String::new(), cfg.disturbance()?)], omegas)?;
    Ok(Output::single("spectrum.csv", table))
}

pub fn peak_table(bath: &LorentzianBath, omega_big: f64, intensities: Vec<f64>) -> Result<Table, CliError> {
    let mut cols: [Vec<f64>; 6] = Default::default();
    for &i in &intensities {
        let p = decompose_peaks(bath, &Disturbance::new(i, omega_big)?)?;
        for (k, v) in [
            p.plus().center,
            p.plus().width,
            p.plus().weight,
            p.minus().center,
            p.minus().width,
            p.minus().weight,
        ]
        .into_iter()
        .enumerate()
        {
            cols[k].push(v);
        }
    }
    let mut t = Table::new("intensity", intensities);
    let names = ["omega_plus", "gamma_plus", "eta2_plus", "omega_minus", "gamma_minus", "eta2_minus"];
    for (name, col) in names.into_iter().zip(cols) {
        t.push(name, col);
    }
    Ok(t)
}

pub fn decompose(cfg: &RunConfig) -> Result<Output, CliError> {
    let table = peak_table(&cfg.bath()?, cfg.physics.omega_big, vec![cfg.physics.intensity])?;
    Ok(Output::single("peaks.csv", table))
}

fn esd(result: &EvolutionResult) -> Option<f64> {
    let series = ConcurrenceSeries {
        times: result.times.clone(),
        values: result.concurrence(),
    };
    detect_esd(&series, DEFAULT_ESD_THRESHOLD)
}

pub fn evolve(cfg: &RunConfig) -> Result<Output, CliError> {
    let system = cfg.system()?;
    let icfg = cfg.integrator()?;
    let convergence = if cfg.numerics.convergence_check {
        let n = cfg.numerics.n_max;
        let report = convergence_scan(&system.model()?, cfg.physics.theta, &icfg, &[n, 2 * n])?;
        serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?
    } else {
        Value::Null
    };
    let result = system.evolve(cfg.physics.theta, &icfg)?;
    let mut t = Table::new("time", result.times.clone());
    t.push("concurrence", result.concurrence());
    t.push("survival", result.survival.clone().unwrap_or_default());
    let element = |i: usize, j: usize, part: fn(C64) -> f64| -> Vec<f64> {
        result.rho_reduced.iter().map(|r| part(r[(i, j)])).collect()
    };
    for k in 0..4 {
        t.push(format!("rho_{0}{0}", k + 1), element(k, k, |z| z.re));
    }
    t.push("re_rho_23", element(IDX_10, IDX_01, |z| z.re));
    t.push("im_rho_23", element(IDX_10, IDX_01, |z| z.im));
    t.push("re_rho_14", element(0, 3, |z| z.re));
    t.push("im_rho_14", element(0, 3, |z| z.im));
    let diagnostics = result.diagnostics();
    Ok(Output {
        tables: vec![("evolution.csv".into(), t)],
        results: json!({
            "esd_time": esd(&result),
            "max_trace_drift": diagnostics.max_trace_drift,
            "max_hermitian_deviation": diagnostics.max_hermitian_deviation,
            "min_eigenvalue": diagnostics.min_eigenvalue,
            "convergence": convergence,
        }),
    })
}

pub fn survival(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = cfg.system()?.model()?;
    let psi0 = make_initial_state(cfg.physics.theta, &model)?;
    let series = evolve_survival(&model, &psi0, &cfg.integrator()?)?;
    let (times, p): (Vec<f64>, Vec<f64>) = series.into_iter().unzip();
    let mut t = Table::new("time", times);
    t.push("survival", p);
    Ok(Output::single("survival.csv", t))
}

/// Relative L² distance between the histogrammed normal-mode spectrum and
/// the bin-averaged engineered density.
pub fn normal_mode_error(bath: &LorentzianBath, dist: &Disturbance) -> Result<f64, CliError> {
    let (m, lo, hi) = (DEFAULT_BATH_MODES, DEFAULT_BATH_LO, DEFAULT_BATH_HI);
    let disc = discretize(|w| j_b_standard(w, bath), m, lo, hi)?;
    let width = BIN_STEPS * (hi - lo) / m as f64;
    let binned = binned_density(&quadratic_normal_modes(&disc, dist, true)?, lo, width)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (c, v) in binned.centers().into_iter().zip(&binned.values) {
        if c < COMPARE_BAND.0 || c > COMPARE_BAND.1 {
            continue;
        }
        let exact = spectral_weight(|w| j_r_standard(w, bath, dist), c - 0.5 * width, c + 0.5 * width)? / width;
        num += (v - exact).powi(2);
        den += exact * exact;
    }
    Ok((num / den).sqrt())
}

/// Largest deviation in survival and `2|ρ23|` between the RWA pseudo-mode
/// evolution and the discretized-bath single-excitation evolution.
pub fn single_excitation_error(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    let mut system = cfg.system()?;
    system.disturbance = None;
    system.coupling_form = CouplingForm::Rwa;
    let icfg = cfg.integrator()?;
    let theta = cfg.physics.theta;
    let pm = system.evolve(theta, &icfg)?;
    let disc = discretize(|w| j_b_simplified(w, &system.bath), DEFAULT_BATH_MODES, DEFAULT_BATH_LO, DEFAULT_BATH_HI)?;
    let (s, c) = (0.5 * theta).sin_cos();
    let exact = rwa_single_excitation_evolve(&system.qubits, &disc, (C64::new(c, 0.0), C64::new(s, 0.0)), &icfg)?;
    let dp = max_deviation(pm.survival.as_deref().unwrap_or_default(), &exact.survival());
    let pm_c: Vec<f64> = pm.rho_reduced.iter().map(|r| 2.0 * r[(IDX_10, IDX_01)].norm()).collect();
    Ok((dp, max_deviation(&pm_c, &exact.concurrence())))
}

pub fn oracle_check(cfg: &RunConfig) -> Result<(Output, bool), CliError> {
    let bath = cfg.bath()?;
    let mut rows = Vec::new();
    for intensity in [0.5, 1.5] {
        let err = normal_mode_error(&bath, &Disturbance::new(intensity, cfg.physics.omega_big)?)?;
        rows.push((format!("normal_modes_I{intensity}"), err, NORMAL_MODE_TOL));
    }
    let (dp, dc) = single_excitation_error(cfg)?;
    rows.push(("single_excitation_survival".into(), dp, SINGLE_EXCITATION_TOL));
    rows.push(("single_excitation_concurrence".into(), dc, SINGLE_EXCITATION_TOL));

    let pass: Vec<bool> = rows.iter().map(|(_, v, tol)| v < tol).collect();
    for ((name, v, tol), ok) in rows.iter().zip(&pass) {
        println!("{} {name}: {v:.4e} (tolerance {tol:e})", if *ok { "PASS" } else { "FAIL" });
    }
    let mut t = Table::new("value", rows.iter().map(|r| r.1).collect()).with_labels("check", rows.iter().map(|r| r.0.clone()).collect());
    t.push("tolerance", rows.iter().map(|r| r.2).collect());
    t.push("pass", pass.iter().map(|&p| if p { 1.0 } else { 0.0 }).collect());
    let results: serde_json::Map<String, Value> = rows
        .iter()
        .zip(&pass)
        .map(|((name, v, tol), ok)| (name.clone(), json!({"value": v, "tolerance": tol, "pass": ok})))
        .collect();
    let all = pass.iter().all(|&p| p);
    Ok((
        Output {
            tables: vec![("oracle_check.csv".into(), t)],
            results: Value::Object(results),
        },
        all,
    ))
}

pub fn run_sweep(cfg: &RunConfig, threads: Option<usize>) -> Result<Output, CliError> {
    let axis = cfg.sweep.axis;
    let points = sweep(&cfg.system()?, cfg.physics.theta, axis, &cfg.sweep.values, &cfg.integrator()?, threads)?;
    let name = match axis {
        SweepAxis::Delta => "delta",
        SweepAxis::Intensity => "intensity",
        SweepAxis::Theta => "theta",
    };
    let mut t = Table::new(name, points.iter().map(|p| p.value).collect());
    t.push("esd_time", points.iter().map(|p| p.esd_time.unwrap_or(f64::NAN)).collect());
    t.push("final_concurrence", points.iter().map(|p| p.final_concurrence).collect());
    t.push("final_survival", points.iter().map(|p| p.final_survival).collect());
    Ok(Output::single("sweep.csv", t))
}
