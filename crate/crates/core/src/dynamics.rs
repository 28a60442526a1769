//! Fixed-step RK4 propagation of the pseudo-mode master equation and of the
//! non-Hermitian survival amplitude.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    effective_hamiltonian, make_initial_state, qubit_superposition, with_vacuum, InitialState,
    PseudoModeModel, IDX_01, IDX_10,
};
use crate::observables::concurrence;
use crate::operators::{annihilation, embed, eigvalsh, expm, hermitian_deviation, ComplexMatrix, SparseOp, StateVector, C64, I, ZERO};

pub const DEFAULT_DT: f64 = 1e-2;
pub const DEFAULT_T_MAX: f64 = 30.0;
pub const DEFAULT_SAMPLE_EVERY: usize = 10;

pub const TRACE_DRIFT_TOL: f64 = 1e-6;
pub const POSITIVITY_TOL: f64 = 1e-6;
pub const NORM_GROWTH_TOL: f64 = 1e-6;
pub const CONVERGENCE_TOL: f64 = 1e-4;

const INPUT_HERMITIAN_TOL: f64 = 1e-10;
const INPUT_TRACE_TOL: f64 = 1e-8;
const INPUT_POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_every: usize,
    pub method: Method,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_max: DEFAULT_T_MAX,
            sample_every: DEFAULT_SAMPLE_EVERY,
            method: Method::Rk4,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_max: f64, sample_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            t_max,
            sample_every,
            method: Method::Rk4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; the last one may overshoot `t_max` by less than `dt`
    /// only through rounding.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Same sample times with half the step.
    pub fn halved(&self) -> Self {
        Self {
            dt: 0.5 * self.dt,
            sample_every: 2 * self.sample_every,
            ..*self
        }
    }

    fn is_sample(&self, step: usize) -> bool {
        step.is_multiple_of(self.sample_every) || step == self.n_steps()
    }

    fn sample_times(&self) -> Vec<f64> {
        (0..=self.n_steps())
            .filter(|&s| self.is_sample(s))
            .map(|s| s as f64 * self.dt)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub model: PseudoModeModel,
    pub config: IntegratorConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// Reduced two-qubit density matrices at `times`.
    pub rho_reduced: Vec<ComplexMatrix>,
    pub survival: Option<Vec<f64>>,
    pub metadata: RunMetadata,
}

impl EvolutionResult {
    pub fn concurrence(&self) -> Vec<f64> {
        self.rho_reduced.iter().map(|r| concurrence(r).0).collect()
    }

    /// Worst trace, Hermiticity and positivity figures over all samples.
    pub fn diagnostics(&self) -> Diagnostics {
        let mut d = Diagnostics {
            max_trace_drift: 0.0,
            max_hermitian_deviation: 0.0,
            min_eigenvalue: f64::INFINITY,
        };
        for rho in &self.rho_reduced {
            d.max_trace_drift = d.max_trace_drift.max((rho.trace().re - 1.0).abs());
            d.max_hermitian_deviation = d.max_hermitian_deviation.max(hermitian_deviation(rho));
            d.min_eigenvalue = d.min_eigenvalue.min(eigvalsh(rho)[0]);
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermitian_deviation: f64,
    pub min_eigenvalue: f64,
}

/// Real compressed-row block. The couplings and ladder operators have real
/// matrix elements, so products with complex matrices need half the
/// multiplications of a general complex kernel.
struct RealCsr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl RealCsr {
    /// Restriction of `m` to `rows × cols`, dropping entries whose global
    /// row and column coincide when `skip_diagonal` is set.
    fn from_dense_block(m: &ComplexMatrix, rows: &[usize], cols: &[usize], skip_diagonal: bool) -> Self {
        let mut row_ptr = vec![0];
        let (mut out_cols, mut vals) = (Vec::new(), Vec::new());
        for &r in rows {
            for (k, &c) in cols.iter().enumerate() {
                let v = m[(r, c)];
                if v == ZERO || (skip_diagonal && r == c) {
                    continue;
                }
                assert!(v.im == 0.0, "matrix element ({r}, {c}) = {v} is not real");
                out_cols.push(k);
                vals.push(v.re);
            }
            row_ptr.push(out_cols.len());
        }
        Self {
            nrows: rows.len(),
            ncols: cols.len(),
            row_ptr,
            cols: out_cols,
            vals,
        }
    }

    fn nnz(&self) -> usize {
        self.vals.len()
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `out = A m` for `m` with `ncols` rows.
    fn left_mul_into(&self, m: &[C64], out: &mut [C64]) {
        for (col_in, col_out) in m.chunks_exact(self.ncols).zip(out.chunks_exact_mut(self.nrows)) {
            for (r, o) in col_out.iter_mut().enumerate() {
                *o = self.row(r).map(|(c, v)| col_in[c] * v).sum();
            }
        }
    }

    /// `out += coeff · m Aᵀ` for `m` with `ncols` columns.
    fn right_mul_transpose_acc(&self, coeff: f64, m: &[C64], out: &mut [C64]) {
        let k = m.len() / self.ncols;
        for (j, col_out) in out.chunks_exact_mut(k).enumerate() {
            for (c, v) in self.row(j) {
                let w = coeff * v;
                for (o, &x) in col_out.iter_mut().zip(&m[c * k..(c + 1) * k]) {
                    *o += x * w;
                }
            }
        }
    }
}

/// Number of excitations of the two-qubit basis states `(|11>, |10>, |01>, |00>)`.
const QUBIT_EXCITATIONS: [usize; 4] = [2, 1, 1, 0];

/// Lindblad generator split into invariant diagonal blocks.
///
/// Both coupling forms conserve the parity of the total excitation number
/// and each jump flips it, so a state without coherences between the two
/// parity sectors keeps that structure and only the two diagonal blocks need
/// to be propagated.
struct BlockGenerator {
    /// Global indices of each block.
    blocks: Vec<Vec<usize>>,
    /// Complex diagonal of `H_eff†` on each block.
    diag_adj: Vec<Vec<C64>>,
    /// Real symmetric off-diagonal part of `H_eff` on each block.
    coupling: Vec<RealCsr>,
    /// `(2Γ, from, to, a restricted to rows of to and columns of from)`.
    jumps: Vec<(f64, usize, usize, RealCsr)>,
    /// Offsets of each block in the flat state.
    offsets: Vec<usize>,
    /// `(qubit row, qubit column, flat index)` summed by the partial trace.
    reduce: Vec<(usize, usize, usize)>,
}

impl BlockGenerator {
    fn new(model: &PseudoModeModel, blocks: Vec<Vec<usize>>) -> Self {
        let space = model.space();
        let h = effective_hamiltonian(model);
        let diag_adj = blocks.iter().map(|b| b.iter().map(|&i| h[(i, i)].conj()).collect()).collect();
        let coupling = blocks.iter().map(|b| RealCsr::from_dense_block(&h, b, b, true)).collect();
        let a = annihilation(model.n_max);
        let mut jumps = Vec::new();
        for (r, mode) in model.modes.iter().enumerate() {
            if mode.decay <= 0.0 {
                continue;
            }
            let op = embed(&a, 2 + r, &space).expect("mode factor");
            for (from, cols) in blocks.iter().enumerate() {
                for (to, rows) in blocks.iter().enumerate() {
                    let block = RealCsr::from_dense_block(&op, rows, cols, false);
                    if block.nnz() > 0 {
                        jumps.push((2.0 * mode.decay, from, to, block));
                    }
                }
            }
        }
        let mut offsets = vec![0];
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.len() * b.len());
        }
        let mode_dim = model.mode_dim();
        let mut reduce = Vec::new();
        for (k, b) in blocks.iter().enumerate() {
            for (j, &gj) in b.iter().enumerate() {
                for (i, &gi) in b.iter().enumerate() {
                    if gi % mode_dim == gj % mode_dim {
                        reduce.push((gi / mode_dim, gj / mode_dim, offsets[k] + i + j * b.len()));
                    }
                }
            }
        }
        Self {
            blocks,
            diag_adj,
            coupling,
            jumps,
            offsets,
            reduce,
        }
    }

    /// Two parity blocks if `rho0` has no coherence between them, otherwise
    /// one block spanning the whole space.
    fn for_state(model: &PseudoModeModel, rho0: &ComplexMatrix) -> Self {
        let parity = parity_labels(model);
        let dim = parity.len();
        let mixes = (0..dim).any(|c| (0..dim).any(|r| parity[r] != parity[c] && rho0[(r, c)] != ZERO));
        let blocks = if mixes {
            vec![(0..dim).collect()]
        } else {
            (0..2).map(|p| (0..dim).filter(|&i| parity[i] == p).collect()).collect()
        };
        Self::new(model, blocks)
    }

    fn state_len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn max_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn split(&self, rho: &ComplexMatrix) -> Vec<C64> {
        let mut flat = Vec::with_capacity(self.state_len());
        for b in &self.blocks {
            for &c in b {
                flat.extend(b.iter().map(|&r| rho[(r, c)]));
            }
        }
        flat
    }

    fn block<'a>(&self, flat: &'a [C64], k: usize) -> &'a [C64] {
        &flat[self.offsets[k]..self.offsets[k + 1]]
    }

    /// `out = L ρ` for Hermitian blocks.
    fn apply(&self, rho: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        for (k, (diag, v)) in self.diag_adj.iter().zip(&self.coupling).enumerate() {
            let n = diag.len();
            let r_blk = self.block(rho, k);
            // With ρ = ρ†, -i H ρ is the adjoint of i ρ H†, and
            // ρ H† = ρ D* + ρ V for the diagonal D and real symmetric V.
            let s = &mut scratch[..n * n];
            for ((col_s, col_r), &d) in s.chunks_exact_mut(n).zip(r_blk.chunks_exact(n)).zip(diag) {
                for (x, &y) in col_s.iter_mut().zip(col_r) {
                    *x = y * d;
                }
            }
            v.right_mul_transpose_acc(1.0, r_blk, s);
            let o = &mut out[self.offsets[k]..self.offsets[k + 1]];
            for c in 0..n {
                for r in 0..n {
                    o[r + c * n] = (s[r + c * n] - s[c + r * n].conj()) * I;
                }
            }
        }
        for (rate, from, to, op) in &self.jumps {
            let s = &mut scratch[..op.nrows * op.ncols];
            op.left_mul_into(self.block(rho, *from), s);
            let o = &mut out[self.offsets[*to]..self.offsets[*to + 1]];
            op.right_mul_transpose_acc(*rate, s, o);
        }
    }

    fn trace(&self, rho: &[C64]) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(k, b)| (0..b.len()).map(|i| self.block(rho, k)[i * (b.len() + 1)].re).sum::<f64>())
            .sum()
    }

    fn reduced(&self, rho: &[C64]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4, 4);
        for &(a, b, idx) in &self.reduce {
            out[(a, b)] += rho[idx];
        }
        out
    }

    fn hermitize(&self, rho: &mut [C64]) {
        for (k, b) in self.blocks.iter().enumerate() {
            let n = b.len();
            let blk = &mut rho[self.offsets[k]..self.offsets[k + 1]];
            for c in 0..n {
                blk[c * (n + 1)].im = 0.0;
                for r in (c + 1)..n {
                    let (lo, up) = (r + c * n, c + r * n);
                    let avg = (blk[lo] + blk[up].conj()) * 0.5;
                    blk[lo] = avg;
                    blk[up] = avg.conj();
                }
            }
        }
    }
}

/// Parity (0 or 1) of the total excitation number of every basis state.
fn parity_labels(model: &PseudoModeModel) -> Vec<usize> {
    let mode_dim = model.mode_dim();
    let base = model.n_max + 1;
    (0..model.dim())
        .map(|g| {
            let mut m = g % mode_dim;
            let mut photons = 0;
            while m > 0 {
                photons += m % base;
                m /= base;
            }
            (QUBIT_EXCITATIONS[g / mode_dim] + photons) % 2
        })
        .collect()
}

/// Preallocated RK4 stepper for `dρ/dt = L ρ` on Hermitian `ρ`.
struct MasterStepper {
    generator: BlockGenerator,
    rho: Vec<C64>,
    acc: Vec<C64>,
    stage: Vec<C64>,
    k: Vec<C64>,
    scratch: Vec<C64>,
}

impl MasterStepper {
    fn new(generator: BlockGenerator, rho0: &ComplexMatrix) -> Self {
        let len = generator.state_len();
        let rho = generator.split(rho0);
        let scratch = vec![ZERO; generator.max_block().pow(2)];
        Self {
            generator,
            rho,
            acc: vec![ZERO; len],
            stage: vec![ZERO; len],
            k: vec![ZERO; len],
            scratch,
        }
    }

    fn rhs(&mut self, from_stage: bool) {
        let input = if from_stage { &self.stage } else { &self.rho };
        self.generator.apply(input, &mut self.scratch, &mut self.k);
    }

    fn step(&mut self, dt: f64) {
        let (half, full) = (0.5 * dt, dt);
        self.rhs(false);
        for ((a, s), (&r, &k)) in self.acc.iter_mut().zip(self.stage.iter_mut()).zip(self.rho.iter().zip(&self.k)) {
            *a = k;
            *s = r + k * half;
        }
        self.rhs(true);
        for ((a, s), (&r, &k)) in self.acc.iter_mut().zip(self.stage.iter_mut()).zip(self.rho.iter().zip(&self.k)) {
            *a += k * 2.0;
            *s = r + k * half;
        }
        self.rhs(true);
        for ((a, s), (&r, &k)) in self.acc.iter_mut().zip(self.stage.iter_mut()).zip(self.rho.iter().zip(&self.k)) {
            *a += k * 2.0;
            *s = r + k * full;
        }
        self.rhs(true);
        let sixth = dt / 6.0;
        for ((r, &a), &k) in self.rho.iter_mut().zip(&self.acc).zip(&self.k) {
            *r += (a + k) * sixth;
        }
        self.generator.hermitize(&mut self.rho);
    }
}

/// Runs the stepper, returning reduced states at the sample times. The trace
/// is checked against `expected_trace` at every step.
fn run_master(
    model: &PseudoModeModel,
    rho0: &ComplexMatrix,
    cfg: &IntegratorConfig,
    expected_trace: f64,
) -> Result<Vec<ComplexMatrix>> {
    cfg.validate()?;
    let mut stepper = MasterStepper::new(BlockGenerator::for_state(model, rho0), rho0);
    let mut samples = vec![stepper.generator.reduced(&stepper.rho)];
    for step in 1..=cfg.n_steps() {
        stepper.step(cfg.dt);
        let time = step as f64 * cfg.dt;
        let drift = (stepper.generator.trace(&stepper.rho) - expected_trace).abs();
        if !(drift <= TRACE_DRIFT_TOL) {
            return Err(Error::TraceDrift { time, drift });
        }
        if cfg.is_sample(step) {
            samples.push(stepper.generator.reduced(&stepper.rho));
        }
    }
    Ok(samples)
}

fn check_positivity(times: &[f64], reduced: &[ComplexMatrix]) -> Result<()> {
    for (&time, rho) in times.iter().zip(reduced) {
        let min_eigenvalue = eigvalsh(rho)[0];
        if min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::PositivityViolation { time, min_eigenvalue });
        }
    }
    Ok(())
}

fn validate_density(rho: &ComplexMatrix, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.nrows(),
        });
    }
    let herm = hermitian_deviation(rho);
    if herm > INPUT_HERMITIAN_TOL {
        return Err(Error::InvalidParameter(format!("initial state not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > INPUT_TRACE_TOL {
        return Err(Error::InvalidParameter(format!("initial state has trace {tr}")));
    }
    let min = eigvalsh(rho)[0];
    if min < -INPUT_POSITIVITY_TOL {
        return Err(Error::InvalidParameter(format!("initial state not positive (eigenvalue {min:e})")));
    }
    Ok(())
}

/// Propagates a full density matrix with the pseudo-mode master equation.
pub fn evolve_master(model: &PseudoModeModel, rho0: &ComplexMatrix, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    validate_density(rho0, model.dim())?;
    let rho_reduced = run_master(model, rho0, cfg, 1.0)?;
    let times = cfg.sample_times();
    check_positivity(&times, &rho_reduced)?;
    Ok(EvolutionResult {
        times,
        rho_reduced,
        survival: None,
        metadata: RunMetadata {
            model: model.clone(),
            config: *cfg,
        },
    })
}

fn rk4_amplitudes(h_eff: &SparseOp, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<Vec<StateVector>> {
    cfg.validate()?;
    let n = psi0.len();
    let mut psi = psi0.as_slice().to_vec();
    let (mut k, mut stage, mut acc) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let norm0 = psi0.norm_squared();
    let mut out = vec![psi0.clone()];
    let dt = cfg.dt;
    let deriv = |x: &[C64], y: &mut [C64]| {
        h_eff.matvec_into(x, y);
        y.iter_mut().for_each(|v| *v *= -I);
    };
    for step in 1..=cfg.n_steps() {
        deriv(&psi, &mut k);
        for i in 0..n {
            acc[i] = k[i];
            stage[i] = psi[i] + k[i] * (0.5 * dt);
        }
        deriv(&stage, &mut k);
        for i in 0..n {
            acc[i] += k[i] * 2.0;
            stage[i] = psi[i] + k[i] * (0.5 * dt);
        }
        deriv(&stage, &mut k);
        for i in 0..n {
            acc[i] += k[i] * 2.0;
            stage[i] = psi[i] + k[i] * dt;
        }
        deriv(&stage, &mut k);
        for i in 0..n {
            psi[i] += (acc[i] + k[i]) * (dt / 6.0);
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm > norm0 * (1.0 + NORM_GROWTH_TOL) {
            return Err(Error::Instability {
                time: step as f64 * dt,
                norm,
            });
        }
        if cfg.is_sample(step) {
            out.push(DVector::from_vec(psi.clone()));
        }
    }
    Ok(out)
}

fn validate_pure(model: &PseudoModeModel, psi0: &StateVector) -> Result<()> {
    if psi0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: psi0.len(),
        });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > INPUT_TRACE_TOL {
        return Err(Error::InvalidParameter(format!("initial state has norm {norm}")));
    }
    Ok(())
}

/// `P(t) = |<ψ0|ψ(t)>|²` with `dψ/dt = -i H_eff ψ`, as `(time, P)` pairs.
pub fn evolve_survival(model: &PseudoModeModel, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<Vec<(f64, f64)>> {
    validate_pure(model, psi0)?;
    let h_eff = SparseOp::from_dense(&effective_hamiltonian(model));
    let states = rk4_amplitudes(&h_eff, psi0, cfg)?;
    Ok(cfg
        .sample_times()
        .into_iter()
        .zip(&states)
        .map(|(t, psi)| (t, psi0.dotc(psi).norm_sqr()))
        .collect())
}

/// Survival probability from the exact propagator `exp(-i H_eff Δt)` over
/// one sample interval, applied repeatedly.
pub fn survival_expm(model: &PseudoModeModel, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<Vec<(f64, f64)>> {
    validate_pure(model, psi0)?;
    cfg.validate()?;
    let times = cfg.sample_times();
    let h_eff = effective_hamiltonian(model);
    let mut psi = psi0.clone();
    let mut out = vec![(0.0, 1.0)];
    let mut last_t = 0.0;
    let mut cached: Option<(f64, ComplexMatrix)> = None;
    for &t in &times[1..] {
        let span = t - last_t;
        let stale = cached.as_ref().is_none_or(|(s, _)| (s - span).abs() > 1e-12);
        if stale {
            cached = Some((span, expm(&(&h_eff * (-I * span)))));
        }
        psi = &cached.as_ref().expect("propagator cached").1 * &psi;
        out.push((t, psi0.dotc(&psi).norm_sqr()));
        last_t = t;
    }
    Ok(out)
}

/// Master-equation evolution from `|ψ0><ψ0|` with the survival probability
/// attached.
pub fn evolve_pure(model: &PseudoModeModel, psi0: &StateVector, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    validate_pure(model, psi0)?;
    let rho0 = psi0 * psi0.adjoint();
    let mut result = evolve_master(model, &rho0, cfg)?;
    let survival = evolve_survival(model, psi0, cfg)?;
    result.survival = Some(survival.into_iter().map(|(_, p)| p).collect());
    Ok(result)
}

/// Evolves `(cos(Θ/2)|10> + sin(Θ/2)|01>) ⊗ vac` for every `Θ` in `thetas`.
///
/// The master equation is linear, so three evolutions (the two populations
/// and the symmetric coherence) are combined for all angles, and two
/// amplitude propagations give every survival probability.
pub fn evolve_theta_family(model: &PseudoModeModel, thetas: &[f64], cfg: &IntegratorConfig) -> Result<Vec<EvolutionResult>> {
    let states: Vec<InitialState> = thetas.iter().map(|&t| InitialState::new(t)).collect::<Result<_>>()?;
    let psi_10 = with_vacuum(&qubit_superposition(1.0, 0.0), model)?;
    let psi_01 = with_vacuum(&qubit_superposition(0.0, 1.0), model)?;
    let n = model.dim();

    let pop_10 = run_master(model, &(&psi_10 * psi_10.adjoint()), cfg, 1.0)?;
    let pop_01 = run_master(model, &(&psi_01 * psi_01.adjoint()), cfg, 1.0)?;
    let mut coherence = ComplexMatrix::zeros(n, n);
    let (i10, i01) = (IDX_10 * model.mode_dim(), IDX_01 * model.mode_dim());
    coherence[(i10, i01)] = C64::new(1.0, 0.0);
    coherence[(i01, i10)] = C64::new(1.0, 0.0);
    let coh = run_master(model, &coherence, cfg, 0.0)?;

    let h_eff = SparseOp::from_dense(&effective_hamiltonian(model));
    let amp_10 = rk4_amplitudes(&h_eff, &psi_10, cfg)?;
    let amp_01 = rk4_amplitudes(&h_eff, &psi_01, cfg)?;
    let times = cfg.sample_times();

    states
        .iter()
        .map(|state| {
            let (s, c) = (0.5 * state.theta()).sin_cos();
            let rho_reduced: Vec<ComplexMatrix> = (0..times.len())
                .map(|k| &pop_10[k] * C64::new(c * c, 0.0) + &pop_01[k] * C64::new(s * s, 0.0) + &coh[k] * C64::new(c * s, 0.0))
                .collect();
            check_positivity(&times, &rho_reduced)?;
            let survival = amp_10
                .iter()
                .zip(&amp_01)
                .map(|(a, b)| {
                    let amp = (a[i10] * c + a[i01] * s) * c + (b[i10] * c + b[i01] * s) * s;
                    amp.norm_sqr()
                })
                .collect();
            Ok(EvolutionResult {
                times: times.clone(),
                rho_reduced,
                survival: Some(survival),
                metadata: RunMetadata {
                    model: model.clone(),
                    config: *cfg,
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub cutoffs: Vec<usize>,
    /// Max deviation of concurrence and survival between cutoff `k` and
    /// `k + 1`.
    pub deviations: Vec<f64>,
    pub converged: bool,
}

/// Max absolute difference of two equally sampled series.
pub fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Evolves `Θ`-state at each cutoff in `cutoffs` (ascending) and compares
/// successive runs. Fails with `NotConverged` if the last pair still differs
/// by more than [`CONVERGENCE_TOL`].
pub fn convergence_scan(
    model: &PseudoModeModel,
    theta: f64,
    cfg: &IntegratorConfig,
    cutoffs: &[usize],
) -> Result<ConvergenceReport> {
    if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("cutoffs must be strictly ascending, at least two".into()));
    }
    let mut runs = Vec::with_capacity(cutoffs.len());
    for &n in cutoffs {
        let m = model.with_n_max(n)?;
        let psi0 = make_initial_state(theta, &m)?;
        runs.push(evolve_pure(&m, &psi0, cfg)?);
    }
    let deviations: Vec<f64> = runs
        .windows(2)
        .map(|w| {
            let dc = max_deviation(&w[0].concurrence(), &w[1].concurrence());
            let dp = max_deviation(
                w[0].survival.as_deref().unwrap_or_default(),
                w[1].survival.as_deref().unwrap_or_default(),
            );
            dc.max(dp)
        })
        .collect();
    let last = *deviations.last().expect("at least one pair");
    if last > CONVERGENCE_TOL {
        return Err(Error::NotConverged { deviation: last });
    }
    Ok(ConvergenceReport {
        cutoffs: cutoffs.to_vec(),
        deviations,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{density_of, subradiant_state, CouplingForm, PseudoMode, QubitPair};
    use crate::operators::max_abs;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn single_mode(g: f64, form: CouplingForm, n_max: usize) -> PseudoModeModel {
        let q = QubitPair::new(1.0, g, FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let mode = PseudoMode {
            center: 1.0,
            coupling: g,
            decay: 0.1,
        };
        PseudoModeModel::new(q, vec![mode], form, n_max).unwrap()
    }

    fn short() -> IntegratorConfig {
        IntegratorConfig::new(5e-3, 5.0, 20).unwrap()
    }

    #[test]
    fn config_validation_and_grid() {
        assert!(IntegratorConfig::new(0.0, 1.0, 1).is_err());
        assert!(IntegratorConfig::new(0.1, -1.0, 1).is_err());
        assert!(IntegratorConfig::new(0.1, 1.0, 0).is_err());
        let cfg = IntegratorConfig::new(0.01, 1.0, 10).unwrap();
        assert_eq!(cfg.n_steps(), 100);
        let t = cfg.sample_times();
        assert_eq!(t.len(), 11);
        assert!((t[10] - 1.0).abs() < 1e-12);
        assert_eq!(cfg.halved().sample_times().len(), 11);
    }

    #[test]
    fn decoupled_qubits_are_frozen() {
        let model = single_mode(0.0, CouplingForm::FullCr, 3);
        let psi = with_vacuum(&qubit_superposition(1.0, 0.0), &model).unwrap();
        let res = evolve_master(&model, &density_of(&psi), &short()).unwrap();
        for r in &res.rho_reduced {
            assert!((r[(IDX_10, IDX_10)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dark_state_is_frozen() {
        let model = single_mode(0.5, CouplingForm::FullCr, 4);
        let psi = subradiant_state(&model);
        let res = evolve_pure(&model, &psi, &short()).unwrap();
        for (r, p) in res.rho_reduced.iter().zip(res.survival.as_ref().unwrap()) {
            assert!(max_abs(&(r - &res.rho_reduced[0])) < 1e-10);
            assert!((p - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn single_photon_survival_is_exponential() {
        let model = single_mode(0.0, CouplingForm::FullCr, 2);
        let mut psi = StateVector::zeros(model.dim());
        psi[IDX_10 * model.mode_dim() + 1] = C64::new(1.0, 0.0);
        for (t, p) in evolve_survival(&model, &psi, &short()).unwrap() {
            assert!((p - (-0.2 * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn survival_paths_agree() {
        let model = single_mode(0.5, CouplingForm::FullCr, 4);
        let psi = make_initial_state(PI / 2.0, &model).unwrap();
        let a = evolve_survival(&model, &psi, &short()).unwrap();
        let b = survival_expm(&model, &psi, &short()).unwrap();
        for ((ta, pa), (tb, pb)) in a.iter().zip(&b) {
            assert_eq!(ta, tb);
            assert!((pa - pb).abs() < 1e-8, "{pa} vs {pb} at {ta}");
        }
    }

    #[test]
    fn rwa_stays_in_single_excitation_sector() {
        let model = single_mode(0.5, CouplingForm::Rwa, 2);
        let psi = make_initial_state(PI / 3.0, &model).unwrap();
        let res = evolve_master(&model, &density_of(&psi), &short()).unwrap();
        for r in &res.rho_reduced {
            assert!(r[(0, 0)].re.abs() < 1e-12);
        }
    }

    #[test]
    fn theta_family_matches_direct_runs() {
        let model = single_mode(0.5, CouplingForm::FullCr, 4);
        let thetas = [0.3, PI / 2.0, 4.0];
        let family = evolve_theta_family(&model, &thetas, &short()).unwrap();
        for (theta, fam) in thetas.iter().zip(&family) {
            let psi = make_initial_state(*theta, &model).unwrap();
            let direct = evolve_pure(&model, &psi, &short()).unwrap();
            for (a, b) in fam.rho_reduced.iter().zip(&direct.rho_reduced) {
                assert!(max_abs(&(a - b)) < 1e-12);
            }
            let dp = max_deviation(fam.survival.as_ref().unwrap(), direct.survival.as_ref().unwrap());
            assert!(dp < 1e-12);
        }
    }

    /// Plain RK4 on the full matrix with the unblocked generator.
    fn dense_reference(model: &PseudoModeModel, rho0: &ComplexMatrix, cfg: &IntegratorConfig) -> Vec<ComplexMatrix> {
        let gen = crate::model::LindbladGenerator::new(model);
        let space = model.space();
        let mut rho = rho0.clone();
        let mut out = vec![crate::operators::partial_trace(&rho, &[0, 1], &space).unwrap()];
        let dt = cfg.dt;
        for step in 1..=cfg.n_steps() {
            let k1 = gen.apply(&rho);
            let k2 = gen.apply(&(&rho + &k1 * C64::new(0.5 * dt, 0.0)));
            let k3 = gen.apply(&(&rho + &k2 * C64::new(0.5 * dt, 0.0)));
            let k4 = gen.apply(&(&rho + &k3 * C64::new(dt, 0.0)));
            rho += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
            if cfg.is_sample(step) {
                out.push(crate::operators::partial_trace(&rho, &[0, 1], &space).unwrap());
            }
        }
        out
    }

    #[test]
    fn blocked_and_unblocked_propagation_agree() {
        let q = QubitPair::new(0.9, 0.4, 0.6, 0.8).unwrap();
        let modes = vec![
            PseudoMode { center: 1.3, coupling: 0.3, decay: 0.05 },
            PseudoMode { center: 0.4, coupling: 0.2, decay: 0.02 },
        ];
        let cfg = IntegratorConfig::new(1e-2, 2.0, 10).unwrap();
        for form in [CouplingForm::FullCr, CouplingForm::Rwa] {
            let model = PseudoModeModel::new(q, modes.clone(), form, 3).unwrap();
            let same_parity = make_initial_state(1.1, &model).unwrap();
            let mut mixed = StateVector::zeros(model.dim());
            mixed[0] = C64::new(0.6, 0.0);
            mixed[IDX_10 * model.mode_dim()] = C64::new(0.0, 0.8);
            for psi in [same_parity, mixed] {
                let rho0 = density_of(&psi);
                let res = evolve_master(&model, &rho0, &cfg).unwrap();
                for (a, b) in res.rho_reduced.iter().zip(dense_reference(&model, &rho0, &cfg)) {
                    assert!(max_abs(&(a - &b)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn invalid_initial_states() {
        let model = single_mode(0.5, CouplingForm::FullCr, 2);
        let n = model.dim();
        assert!(matches!(
            evolve_master(&model, &ComplexMatrix::zeros(4, 4), &short()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(evolve_master(&model, &ComplexMatrix::zeros(n, n), &short()).is_err());
        assert!(evolve_survival(&model, &StateVector::zeros(n), &short()).is_err());
    }

    #[test]
    fn rwa_converges_at_one_photon() {
        let model = single_mode(0.5, CouplingForm::Rwa, 1);
        let report = convergence_scan(&model, PI / 2.0, &short(), &[1, 2, 4]).unwrap();
        assert!(report.deviations.iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn too_small_cutoffs_are_reported() {
        let model = single_mode(0.5, CouplingForm::FullCr, 1);
        assert!(matches!(
            convergence_scan(&model, PI / 2.0, &short(), &[1, 2]),
            Err(Error::NotConverged { .. })
        ));
    }
}
