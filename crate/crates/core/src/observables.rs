//! Entanglement and survival observables of the two-qubit reduced state.
//!
//! Density matrices here are 4×4 in the basis `(|11>, |10>, |01>, |00>)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{kron, pauli, Axis, ComplexMatrix, StateVector, C64};

/// Largest off-X magnitude for which the X-form concurrence is used.
pub const X_FORM_TOL: f64 = 1e-8;
/// Largest `ρ11` accepted by [`concurrence_rwa`].
pub const SECTOR_TOL: f64 = 1e-8;
pub const DEFAULT_ESD_THRESHOLD: f64 = 1e-4;

const OFF_X: [(usize, usize); 8] = [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcurrenceMethod {
    XForm,
    Wootters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_two_qubit(rho: &ComplexMatrix) {
    assert_eq!(rho.shape(), (4, 4), "two-qubit density matrix must be 4x4");
}

/// Largest magnitude among the entries outside the diagonal and
/// anti-diagonal.
pub fn x_form_leak(rho: &ComplexMatrix) -> f64 {
    check_two_qubit(rho);
    OFF_X.iter().fold(0.0, |acc: f64, &ij| acc.max(rho[ij].norm()))
}

/// `C = 2 max(0, |ρ23| - √(ρ11 ρ44), |ρ14| - √(ρ22 ρ33))` for X-form states.
pub fn concurrence_xform(rho: &ComplexMatrix) -> Result<f64> {
    let leak = x_form_leak(rho);
    if leak > X_FORM_TOL {
        return Err(Error::NotXForm { leak });
    }
    let pop = |i: usize| rho[(i, i)].re.max(0.0);
    let a = rho[(1, 2)].norm() - (pop(0) * pop(3)).sqrt();
    let b = rho[(0, 3)].norm() - (pop(1) * pop(2)).sqrt();
    Ok(2.0 * a.max(b).max(0.0))
}

/// Wootters concurrence of an arbitrary two-qubit density matrix.
///
/// The decreasing λ_i are the square roots of the eigenvalues of
/// `ρ ρ̃`, with `ρ̃ = (σy⊗σy) ρ* (σy⊗σy)`. They are taken from the Hermitian
/// matrix `√ρ ρ̃ √ρ`, which has the same spectrum.
pub fn concurrence_wootters(rho: &ComplexMatrix) -> f64 {
    check_two_qubit(rho);
    let yy = kron(&pauli(Axis::Y), &pauli(Axis::Y));
    let hermitian = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = hermitian.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0));
    let sqrt_rho = &eig.eigenvectors * ComplexMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    let tilde = &yy * hermitian.conjugate() * &yy;
    let r = &sqrt_rho * tilde * &sqrt_rho;
    let r = (&r + r.adjoint()) * C64::new(0.5, 0.0);
    let mut lambdas: Vec<f64> = r.symmetric_eigenvalues().iter().map(|&m| m.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// `2|ρ23|`, valid when the state never leaves the single-excitation sector.
pub fn concurrence_rwa(rho: &ComplexMatrix) -> Result<f64> {
    check_two_qubit(rho);
    let rho11 = rho[(0, 0)].re;
    if rho11 > SECTOR_TOL {
        return Err(Error::SectorViolation { rho11 });
    }
    Ok(2.0 * rho[(1, 2)].norm())
}

/// X-form concurrence, falling back to Wootters when the state leaks out of
/// X-form.
pub fn concurrence(rho: &ComplexMatrix) -> (f64, ConcurrenceMethod) {
    match concurrence_xform(rho) {
        Ok(c) => (c, ConcurrenceMethod::XForm),
        Err(Error::NotXForm { leak }) => {
            log::warn!("density matrix not X-form (leak {leak:e}); using Wootters concurrence");
            (concurrence_wootters(rho), ConcurrenceMethod::Wootters)
        }
        Err(e) => unreachable!("unexpected concurrence error {e}"),
    }
}

/// Time after which the concurrence stays below `threshold` until the end of
/// the series, linearly interpolated between the bracketing samples. `None`
/// if the last sample is still at or above the threshold.
pub fn detect_esd(series: &ConcurrenceSeries, threshold: f64) -> Option<f64> {
    let (times, values) = (&series.times, &series.values);
    match values.iter().rposition(|&c| c >= threshold) {
        None => times.first().copied(),
        Some(last) if last + 1 == values.len() => None,
        Some(last) => {
            let (t0, t1) = (times[last], times[last + 1]);
            let (c0, c1) = (values[last], values[last + 1]);
            let frac = if c0 > c1 { (c0 - threshold) / (c0 - c1) } else { 0.0 };
            Some(t0 + frac.clamp(0.0, 1.0) * (t1 - t0))
        }
    }
}

/// `|<ψ0|ψ>|²`.
pub fn survival_probability(psi0: &StateVector, psi: &StateVector) -> f64 {
    psi0.dotc(psi).norm_sqr()
}
