//! Two qubits coupled to one or two damped pseudo-modes.
//!
//! The undisturbed bath is represented by a single pseudo-mode at the bath
//! center with coupling `g` and damping `Γ`; the disturbed bath by one mode
//! per Lorentzian peak with coupling `g·η_r` and damping `Γ_r`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    annihilation, embed, embed_product, number, pauli, sigma_minus, sigma_plus, Axis, ComplexMatrix,
    HilbertSpace, SparseOp, StateVector, C64, I, ZERO,
};
use crate::spectrum::{LorentzianBath, PeakSet};

/// Tolerance on `α1² + α2² = 1`.
pub const ALPHA_NORM_TOL: f64 = 1e-12;
/// Tolerance of the dark-state condition `α1 = ±α2`.
pub const DARK_STATE_TOL: f64 = 1e-10;
pub const DEFAULT_N_MAX: usize = 8;
pub const MAX_MODES: usize = 2;

/// Index of `|10>` and `|01>` in the two-qubit basis `(|11>, |10>, |01>, |00>)`.
pub const IDX_10: usize = 1;
pub const IDX_01: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitPair {
    pub delta: f64,
    pub g: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl QubitPair {
    pub fn new(delta: f64, g: f64, alpha1: f64, alpha2: f64) -> Result<Self> {
        if ![delta, g, alpha1, alpha2].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("qubit parameters must be finite".into()));
        }
        let norm = alpha1 * alpha1 + alpha2 * alpha2;
        if (norm - 1.0).abs() > ALPHA_NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "alpha1^2 + alpha2^2 = {norm}, must equal 1"
            )));
        }
        Ok(Self { delta, g, alpha1, alpha2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingForm {
    /// `σx (a + a†)`, counter-rotating terms included.
    FullCr,
    /// `σ+ a + σ- a†`.
    Rwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoMode {
    pub center: f64,
    /// Pre-multiplied coupling `g·η_r`.
    pub coupling: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoModeModel {
    pub qubits: QubitPair,
    pub modes: Vec<PseudoMode>,
    pub coupling_form: CouplingForm,
    pub n_max: usize,
}

impl PseudoModeModel {
    pub fn new(
        qubits: QubitPair,
        modes: Vec<PseudoMode>,
        coupling_form: CouplingForm,
        n_max: usize,
    ) -> Result<Self> {
        if modes.is_empty() || modes.len() > MAX_MODES {
            return Err(Error::InvalidParameter(format!(
                "expected 1 or 2 pseudo-modes, got {}",
                modes.len()
            )));
        }
        if let Some(m) = modes
            .iter()
            .find(|m| !(m.decay >= 0.0 && m.center.is_finite() && m.coupling.is_finite()))
        {
            return Err(Error::InvalidParameter(format!("invalid pseudo-mode {m:?}")));
        }
        if n_max == 0 {
            return Err(Error::InvalidParameter("Fock cutoff must be at least 1".into()));
        }
        Ok(Self {
            qubits,
            modes,
            coupling_form,
            n_max,
        })
    }

    /// Single pseudo-mode `(ω0, g, Γ)` for the undisturbed bath.
    pub fn off_disturbance(
        qubits: QubitPair,
        bath: &LorentzianBath,
        coupling_form: CouplingForm,
        n_max: usize,
    ) -> Result<Self> {
        Self::from_peaks(qubits, &PeakSet::single(bath), coupling_form, n_max)
    }

    /// One pseudo-mode `(ω_r, g·η_r, Γ_r)` per peak.
    pub fn from_peaks(
        qubits: QubitPair,
        peaks: &PeakSet,
        coupling_form: CouplingForm,
        n_max: usize,
    ) -> Result<Self> {
        let modes = peaks
            .peaks()
            .iter()
            .map(|p| PseudoMode {
                center: p.center,
                coupling: qubits.g * p.weight.sqrt(),
                decay: p.width,
            })
            .collect();
        Self::new(qubits, modes, coupling_form, n_max)
    }

    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        Self::new(self.qubits, self.modes.clone(), self.coupling_form, n_max)
    }

    pub fn space(&self) -> HilbertSpace {
        let mut dims = vec![2, 2];
        dims.extend(std::iter::repeat_n(self.n_max + 1, self.modes.len()));
        HilbertSpace::new(dims).expect("dimensions are positive")
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    /// Product of the mode dimensions.
    pub fn mode_dim(&self) -> usize {
        (self.n_max + 1).pow(self.modes.len() as u32)
    }

    fn mode_factor(r: usize) -> usize {
        2 + r
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Hamiltonian of qubits plus pseudo-modes on `qubit1 ⊗ qubit2 ⊗ modes`.
pub fn build_hamiltonian(model: &PseudoModeModel) -> ComplexMatrix {
    let space = model.space();
    let q = &model.qubits;
    let sz = pauli(Axis::Z);
    let embed_ok = |op: &ComplexMatrix, f: usize| embed(op, f, &space).expect("factor in range");
    let mut h = (embed_ok(&sz, 0) + embed_ok(&sz, 1)) * real(0.5 * q.delta);

    let a = annihilation(model.n_max);
    let ad = a.adjoint();
    let alphas = [q.alpha1, q.alpha2];
    for (r, mode) in model.modes.iter().enumerate() {
        let f = PseudoModeModel::mode_factor(r);
        h += embed_ok(&number(model.n_max), f) * real(mode.center);
        let pairs: Vec<(ComplexMatrix, ComplexMatrix)> = match model.coupling_form {
            CouplingForm::FullCr => vec![(pauli(Axis::X), &a + &ad)],
            CouplingForm::Rwa => vec![(sigma_plus(), a.clone()), (sigma_minus(), ad.clone())],
        };
        for (j, &alpha) in alphas.iter().enumerate() {
            if alpha == 0.0 || mode.coupling == 0.0 {
                continue;
            }
            for (qop, mop) in &pairs {
                let term = embed_product(&[(j, qop), (f, mop)], &space).expect("factors in range");
                h += term * real(mode.coupling * alpha);
            }
        }
    }
    h
}

/// `Σ_r Γ_r a_r† a_r`.
fn damping_operator(model: &PseudoModeModel) -> ComplexMatrix {
    let space = model.space();
    let dim = space.dim();
    let mut k = ComplexMatrix::zeros(dim, dim);
    for (r, mode) in model.modes.iter().enumerate() {
        let f = PseudoModeModel::mode_factor(r);
        k += embed(&number(model.n_max), f, &space).expect("factor in range") * real(mode.decay);
    }
    k
}

/// Non-Hermitian generator `H - i Σ_r Γ_r a_r† a_r`.
pub fn effective_hamiltonian(model: &PseudoModeModel) -> ComplexMatrix {
    build_hamiltonian(model) - damping_operator(model) * I
}

/// Total excitation number `Σ_j (σz_j + 1)/2 + Σ_r a_r† a_r`.
pub fn excitation_number(model: &PseudoModeModel) -> ComplexMatrix {
    let space = model.space();
    let dim = space.dim();
    let sz = pauli(Axis::Z);
    let half = real(0.5);
    let mut n = ComplexMatrix::identity(dim, dim);
    for j in 0..2 {
        n += embed(&sz, j, &space).expect("qubit factor") * half;
    }
    for r in 0..model.modes.len() {
        n += embed(&number(model.n_max), PseudoModeModel::mode_factor(r), &space).expect("mode factor");
    }
    n
}

/// Precompiled Lindblad generator
/// `L ρ = -i[H, ρ] - Σ_r Γ_r (a_r†a_r ρ + ρ a_r†a_r - 2 a_r ρ a_r†)`,
/// evaluated as `-i H_eff ρ + i ρ H_eff† + Σ_r 2Γ_r a_r ρ a_r†`.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    dim: usize,
    h_eff: SparseOp,
    jumps: Vec<(f64, SparseOp)>,
}

impl LindbladGenerator {
    pub fn new(model: &PseudoModeModel) -> Self {
        let space = model.space();
        let a = annihilation(model.n_max);
        let jumps = model
            .modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.decay > 0.0)
            .map(|(r, m)| {
                let op = embed(&a, PseudoModeModel::mode_factor(r), &space).expect("mode factor");
                (2.0 * m.decay, SparseOp::from_dense(&op))
            })
            .collect();
        Self {
            dim: space.dim(),
            h_eff: SparseOp::from_dense(&effective_hamiltonian(model)),
            jumps,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h_eff(&self) -> &SparseOp {
        &self.h_eff
    }

    /// `out = L ρ` for an arbitrary square `ρ`.
    pub fn apply_into(&self, rho: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        out.fill(ZERO);
        self.h_eff.left_mul_acc(-I, rho, out);
        self.h_eff.right_mul_adjoint_acc(I, rho, out);
        for (rate, jump) in &self.jumps {
            jump.sandwich_acc(real(*rate), rho, scratch, out);
        }
    }

    /// `out = L ρ` assuming `ρ = ρ†`: the two Hamiltonian terms are adjoints
    /// of each other, so only `i ρ H_eff†` is formed.
    pub fn apply_hermitian_into(&self, rho: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let n = self.dim;
        scratch.fill(ZERO);
        self.h_eff.right_mul_adjoint_acc(I, rho, scratch);
        for c in 0..n {
            for r in 0..n {
                out[r + c * n] = scratch[r + c * n] + scratch[c + r * n].conj();
            }
        }
        for (rate, jump) in &self.jumps {
            jump.sandwich_acc(real(*rate), rho, scratch, out);
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        let mut scratch = vec![ZERO; self.dim * self.dim];
        self.apply_into(rho.as_slice(), &mut scratch, out.as_mut_slice());
        out
    }
}

/// Right-hand side of the pseudo-mode master equation.
pub fn lindblad_rhs(model: &PseudoModeModel, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = model.dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho.nrows(),
        });
    }
    Ok(LindbladGenerator::new(model).apply(rho))
}

pub fn dark_state_exists(qubits: &QubitPair) -> bool {
    (qubits.alpha1 - qubits.alpha2).abs() < DARK_STATE_TOL
        || (qubits.alpha1 + qubits.alpha2).abs() < DARK_STATE_TOL
}

/// Mixing angle of the initial superposition `cos(Θ/2)|10> + sin(Θ/2)|01>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    theta: f64,
}

impl InitialState {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..std::f64::consts::TAU).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, 2π), got {theta}")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Two-qubit part as a 4-vector.
    pub fn qubit_state(&self) -> StateVector {
        let (s, c) = (0.5 * self.theta).sin_cos();
        qubit_superposition(c, s)
    }
}

/// `c10 |10> + c01 |01>` on two qubits.
pub fn qubit_superposition(c10: f64, c01: f64) -> StateVector {
    let mut v = DVector::zeros(4);
    v[IDX_10] = real(c10);
    v[IDX_01] = real(c01);
    v
}

/// Embeds a two-qubit state with all pseudo-modes in vacuum.
pub fn with_vacuum(qubit_state: &StateVector, model: &PseudoModeModel) -> Result<StateVector> {
    if qubit_state.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: qubit_state.len(),
        });
    }
    let m = model.mode_dim();
    let mut psi = DVector::zeros(4 * m);
    for (q, &c) in qubit_state.iter().enumerate() {
        psi[q * m] = c;
    }
    Ok(psi)
}

/// `(cos(Θ/2)|10> + sin(Θ/2)|01>) ⊗ |vac>`.
pub fn make_initial_state(theta: f64, model: &PseudoModeModel) -> Result<StateVector> {
    let init = InitialState::new(theta)?;
    with_vacuum(&init.qubit_state(), model)
}

/// `(-α2|10> + α1|01>) ⊗ |vac>`.
pub fn subradiant_state(model: &PseudoModeModel) -> StateVector {
    let q = &model.qubits;
    with_vacuum(&qubit_superposition(-q.alpha2, q.alpha1), model).expect("4-dim qubit state")
}

/// `(α1|10> + α2|01>) ⊗ |vac>`.
pub fn superradiant_state(model: &PseudoModeModel) -> StateVector {
    let q = &model.qubits;
    with_vacuum(&qubit_superposition(q.alpha1, q.alpha2), model).expect("4-dim qubit state")
}

pub fn density_of(psi: &StateVector) -> ComplexMatrix {
    psi * psi.adjoint()
}
