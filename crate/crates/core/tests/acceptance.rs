//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines appear in `cargo test` output; exits non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use pseudomode_core::dynamics::{evolve_pure, max_deviation, EvolutionResult, IntegratorConfig};
use pseudomode_core::model::{make_initial_state, CouplingForm, PseudoModeModel, QubitPair, DEFAULT_N_MAX};
use pseudomode_core::observables::{
    concurrence, concurrence_wootters, concurrence_xform, detect_esd, ConcurrenceSeries, DEFAULT_ESD_THRESHOLD,
};
use pseudomode_core::operators::{partial_trace, ComplexMatrix, C64};
use pseudomode_core::oracle::{
    binned_density, discretize, quadratic_normal_modes, rwa_single_excitation_evolve, DEFAULT_BATH_HI,
    DEFAULT_BATH_LO, DEFAULT_BATH_MODES,
};
use pseudomode_core::spectrum::{
    decompose_peaks, j_b_simplified, j_b_standard, j_r_simplified, j_r_standard, peak_condition, spectral_weight,
    Disturbance, LorentzianBath,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn bath() -> LorentzianBath {
    LorentzianBath::new(1.0, 0.1).unwrap()
}

fn disturbance(intensity: f64) -> Disturbance {
    Disturbance::new(intensity, 0.8).unwrap()
}

fn equal_qubits(delta: f64) -> QubitPair {
    QubitPair::new(delta, 0.5, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap()
}

fn off_model(q: QubitPair, form: CouplingForm, n_max: usize) -> PseudoModeModel {
    PseudoModeModel::off_disturbance(q, &bath(), form, n_max).unwrap()
}

fn on_model(q: QubitPair, form: CouplingForm, n_max: usize) -> PseudoModeModel {
    let peaks = decompose_peaks(&bath(), &disturbance(1.5)).unwrap();
    PseudoModeModel::from_peaks(q, &peaks, form, n_max).unwrap()
}

fn run(model: &PseudoModeModel, theta: f64, cfg: &IntegratorConfig) -> Result<EvolutionResult, String> {
    let psi = make_initial_state(theta, model).map_err(|e| e.to_string())?;
    evolve_pure(model, &psi, cfg).map_err(|e| e.to_string())
}

fn value_at(result: &EvolutionResult, values: &[f64], t: f64) -> f64 {
    let k = result.times.iter().position(|&s| (s - t).abs() < 1e-9).expect("sample time");
    values[k]
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn peak_decomposition() -> Outcome {
    let (b, d) = (bath(), disturbance(1.5));
    let peaks = decompose_peaks(&b, &d).map_err(|e| e.to_string())?;
    let residual = peaks
        .peaks()
        .iter()
        .map(|p| peak_condition(p.center, &b, &d).abs())
        .fold(0.0, f64::max);
    let width_sum = (peaks.plus().width + peaks.minus().width - b.gamma).abs();
    let eta = peaks
        .peaks()
        .iter()
        .map(|p| (p.weight - p.width * b.omega0 / (b.gamma * p.center)).abs())
        .fold(0.0, f64::max);
    let mut shape = 0.0f64;
    for p in peaks.peaks() {
        for k in 0..=2000 {
            let w = p.center - 3.0 * p.width + 6.0 * p.width * k as f64 / 2000.0;
            let exact = j_r_standard(w, &b, &d);
            shape = shape.max((j_r_simplified(w, &peaks) - exact).abs() / exact);
        }
    }
    check(
        residual < 1e-10 && width_sum < 1e-12 && eta < 1e-12 && shape < 0.10,
        format!("residual {residual:.1e}, width sum {width_sum:.1e}, eta {eta:.1e}, shape {shape:.3}"),
    )
}

fn normal_mode_spectrum() -> Outcome {
    let b = bath();
    let (m, lo, hi) = (DEFAULT_BATH_MODES, DEFAULT_BATH_LO, DEFAULT_BATH_HI);
    let disc = discretize(|w| j_b_standard(w, &b), m, lo, hi).map_err(|e| e.to_string())?;
    let width = 16.0 * (hi - lo) / m as f64;
    let mut details = Vec::new();
    let mut ok = true;
    for intensity in [0.5, 1.5] {
        let d = disturbance(intensity);
        let modes = quadratic_normal_modes(&disc, &d, true).map_err(|e| e.to_string())?;
        let binned = binned_density(&modes, lo, width).map_err(|e| e.to_string())?;
        let (mut num, mut den) = (0.0, 0.0);
        for (center, value) in binned.centers().into_iter().zip(&binned.values) {
            if !(0.05..=4.0).contains(&center) {
                continue;
            }
            let (a, z) = (center - 0.5 * width, center + 0.5 * width);
            let exact = spectral_weight(|w| j_r_standard(w, &b, &d), a, z).map_err(|e| e.to_string())? / width;
            num += (value - exact).powi(2);
            den += exact * exact;
        }
        let err = (num / den).sqrt();
        ok &= err < 0.05;
        details.push(format!("I={intensity}: rel L2 {err:.4}"));
    }
    check(ok, details.join(", "))
}

fn single_excitation_oracle() -> Outcome {
    let b = bath();
    let q = equal_qubits(1.0);
    let cfg = IntegratorConfig::default();
    let model = off_model(q, CouplingForm::Rwa, DEFAULT_N_MAX);
    let pm = run(&model, FRAC_PI_2, &cfg)?;
    let disc = discretize(|w| j_b_simplified(w, &b), DEFAULT_BATH_MODES, DEFAULT_BATH_LO, DEFAULT_BATH_HI)
        .map_err(|e| e.to_string())?;
    let amp = C64::new(FRAC_1_SQRT_2, 0.0);
    let exact = rwa_single_excitation_evolve(&q, &disc, (amp, amp), &cfg).map_err(|e| e.to_string())?;
    let dp = max_deviation(pm.survival.as_ref().unwrap(), &exact.survival());
    let pm_c: Vec<f64> = pm.rho_reduced.iter().map(|r| 2.0 * r[(1, 2)].norm()).collect();
    let dc = max_deviation(&pm_c, &exact.concurrence());
    check(dp < 2e-2 && dc < 2e-2, format!("max |dP| {dp:.4}, max |dC| {dc:.4}"))
}

fn dark_state() -> Outcome {
    let cfg = IntegratorConfig::default();
    let q = equal_qubits(1.0);
    let mut details = Vec::new();
    let mut ok = true;
    for (label, model) in [
        ("off", off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX)),
        ("on", on_model(q, CouplingForm::FullCr, DEFAULT_N_MAX)),
    ] {
        let r = run(&model, 1.5 * PI, &cfg)?;
        let dp = r.survival.as_ref().unwrap().iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
        let dc = r.concurrence().iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
        ok &= dp < 1e-6 && dc < 1e-6;
        details.push(format!("{label}: max |P-1| {dp:.1e}, max |C-1| {dc:.1e}"));
    }
    check(ok, details.join(", "))
}

fn esd_time(model: &PseudoModeModel, cfg: &IntegratorConfig) -> Result<(Option<f64>, EvolutionResult), String> {
    let r = run(model, FRAC_PI_2, cfg)?;
    let series = ConcurrenceSeries {
        times: r.times.clone(),
        values: r.concurrence(),
    };
    Ok((detect_esd(&series, DEFAULT_ESD_THRESHOLD), r))
}

fn sudden_death() -> Outcome {
    let cfg = IntegratorConfig::default();
    let q = equal_qubits(1.0);
    let (cr, _) = esd_time(&off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX), &cfg)?;
    let (rwa, _) = esd_time(&off_model(q, CouplingForm::Rwa, DEFAULT_N_MAX), &cfg)?;
    check(
        cr.is_some_and(|t| (t - 15.0).abs() <= 3.0) && rwa.is_none(),
        format!("full CR death at {cr:?}, RWA death at {rwa:?}"),
    )
}

fn protection() -> Outcome {
    let cfg = IntegratorConfig::default();
    let q = equal_qubits(1.0);
    let p30 = |model: PseudoModeModel| -> Result<f64, String> {
        let r = run(&model, FRAC_PI_2, &cfg)?;
        Ok(value_at(&r, r.survival.as_ref().unwrap(), 30.0))
    };
    let on = p30(on_model(q, CouplingForm::FullCr, DEFAULT_N_MAX))?;
    let off = p30(off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX))?;
    let rwa = p30(off_model(q, CouplingForm::Rwa, DEFAULT_N_MAX))?;
    check(
        (on - 0.5).abs() <= 0.1 && off < 0.05 && rwa < 0.05,
        format!("P(30): on {on:.4}, off {off:.4}, RWA {rwa:.4}"),
    )
}

fn off_resonance() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut details = Vec::new();
    let mut ok = true;
    for delta in [0.75, 1.25, 1.5, 1.75] {
        let q = equal_qubits(delta);
        let (death, _) = esd_time(&off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX), &cfg)?;
        let r = run(&on_model(q, CouplingForm::FullCr, DEFAULT_N_MAX), FRAC_PI_2, &cfg)?;
        let c30 = value_at(&r, &r.concurrence(), 30.0);
        let pass = death.is_some_and(|t| (t - 15.0).abs() <= 4.0) && c30 > 0.1;
        ok &= pass;
        let death = death.map_or("none".to_string(), |t| format!("{t:.2}"));
        details.push(format!("D={delta}: off death {death}, on C(30) {c30:.3}"));
    }
    check(ok, details.join("; "))
}

fn hygiene() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut runs = Vec::new();
    for delta in [1.0, 0.75, 1.25, 1.5, 1.75] {
        let q = equal_qubits(delta);
        for model in [
            off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX),
            off_model(q, CouplingForm::Rwa, DEFAULT_N_MAX),
            on_model(q, CouplingForm::FullCr, DEFAULT_N_MAX),
        ] {
            runs.push(run(&model, FRAC_PI_2, &cfg)?);
        }
    }
    let q = equal_qubits(1.0);
    for model in [
        off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX),
        on_model(q, CouplingForm::FullCr, DEFAULT_N_MAX),
    ] {
        runs.push(run(&model, 1.5 * PI, &cfg)?);
    }
    let (mut trace, mut herm, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for r in &runs {
        let d = r.diagnostics();
        trace = trace.max(d.max_trace_drift);
        herm = herm.max(d.max_hermitian_deviation);
        min_eig = min_eig.min(d.min_eigenvalue);
    }

    let observables = |r: &EvolutionResult| (r.concurrence(), r.survival.clone().unwrap());
    let base = on_model(q, CouplingForm::FullCr, DEFAULT_N_MAX);
    let (c1, p1) = observables(&run(&base, FRAC_PI_2, &cfg)?);
    let (c2, p2) = observables(&run(&base, FRAC_PI_2, &cfg.halved())?);
    let halving = max_deviation(&c1, &c2).max(max_deviation(&p1, &p2));

    let mut fock = Vec::new();
    for (label, model) in [
        ("off", off_model(q, CouplingForm::FullCr, DEFAULT_N_MAX)),
        ("on", base.clone()),
    ] {
        let (ca, pa) = observables(&run(&model, FRAC_PI_2, &cfg)?);
        let doubled = model.with_n_max(2 * DEFAULT_N_MAX).map_err(|e| e.to_string())?;
        let (cb, pb) = observables(&run(&doubled, FRAC_PI_2, &cfg)?);
        fock.push((label, max_deviation(&ca, &cb).max(max_deviation(&pa, &pb))));
    }
    let fock_ok = fock.iter().all(|(_, d)| *d < 1e-4);
    let fock_text: Vec<String> = fock.iter().map(|(l, d)| format!("{l} {d:.1e}")).collect();
    check(
        trace < 1e-8 && herm < 1e-10 && min_eig >= -1e-8 && halving < 1e-6 && fock_ok,
        format!(
            "{} runs: trace drift {trace:.1e}, hermiticity {herm:.1e}, min eigenvalue {min_eig:.1e}; \
             step halving {halving:.1e}; cutoff {}->{}: {}",
            runs.len(),
            DEFAULT_N_MAX,
            2 * DEFAULT_N_MAX,
            fock_text.join(", ")
        ),
    )
}

fn random_x_state(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let mut block = |a: usize, b: usize, rho: &mut ComplexMatrix| {
        let g: Vec<C64> = (0..4).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let gm = ComplexMatrix::from_row_slice(2, 2, &g);
        let p = &gm * gm.adjoint();
        let idx = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                rho[(idx[i], idx[j])] = p[(i, j)];
            }
        }
    };
    let mut rho = ComplexMatrix::zeros(4, 4);
    block(0, 3, &mut rho);
    block(1, 2, &mut rho);
    let tr = rho.trace();
    rho / tr
}

fn concurrence_cross_validation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let rho = random_x_state(&mut rng);
        let a = concurrence_xform(&rho).map_err(|e| e.to_string())?;
        worst = worst.max((a - concurrence_wootters(&rho)).abs());
    }
    let model = off_model(equal_qubits(1.0), CouplingForm::FullCr, 2);
    let space = model.space();
    let mut initial = 0.0f64;
    for k in 0..64 {
        let theta = 2.0 * PI * k as f64 / 64.0;
        let psi = make_initial_state(theta, &model).map_err(|e| e.to_string())?;
        let reduced = partial_trace(&(&psi * psi.adjoint()), &[0, 1], &space).map_err(|e| e.to_string())?;
        initial = initial.max((concurrence(&reduced).0 - theta.sin().abs()).abs());
    }
    check(
        worst < 1e-10 && initial < 1e-12,
        format!("Wootters vs X-form {worst:.1e}, C(0) vs |sin theta| {initial:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("peak decomposition", peak_decomposition),
        ("normal-mode spectrum oracle", normal_mode_spectrum),
        ("single-excitation oracle", single_excitation_oracle),
        ("dark state", dark_state),
        ("sudden death", sudden_death),
        ("protection", protection),
        ("off-resonance robustness", off_resonance),
        ("numerical hygiene", hygiene),
        ("concurrence cross-validation", concurrence_cross_validation),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, criterion) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = criterion();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
