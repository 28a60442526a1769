//! Brute-force references: explicit discretized baths evolved without the
//! pseudo-mode construction, and the normal modes of the bath coupled to the
//! disturbing oscillators.

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::model::QubitPair;
use crate::operators::{ComplexMatrix, SparseOp, StateVector, C64, I, ZERO};
use crate::spectrum::Disturbance;

pub const NORM_DRIFT_TOL: f64 = 1e-8;
/// Largest Hilbert-space dimension accepted by [`cr_truncated_evolve`].
pub const MAX_CR_DIM: usize = 200_000;

pub const DEFAULT_BATH_MODES: usize = 4000;
pub const DEFAULT_BATH_LO: f64 = 1e-3;
pub const DEFAULT_BATH_HI: f64 = 10.0;

const BISECTION_MAX_ITER: usize = 200;

/// Bath of discrete modes with frequencies `omegas` and couplings `mu`,
/// `J(ω) ≈ Σ μ_k² δ(ω - ω_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedBath {
    pub omegas: Vec<f64>,
    pub mu: Vec<f64>,
}

impl DiscretizedBath {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.mu.iter().map(|m| m * m).sum()
    }
}

/// Midpoint grid of `m` modes on `[lo, hi]` with `μ_k = √(J(ω_k) Δω)`.
pub fn discretize<F: Fn(f64) -> f64>(density: F, m: usize, lo: f64, hi: f64) -> Result<DiscretizedBath> {
    if m == 0 {
        return Err(Error::InvalidParameter("mode count must be at least 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty frequency range [{lo}, {hi}]")));
    }
    let dw = (hi - lo) / m as f64;
    let omegas: Vec<f64> = (0..m).map(|k| lo + (k as f64 + 0.5) * dw).collect();
    let mu = omegas
        .iter()
        .map(|&w| {
            let j = density(w);
            if j < 0.0 {
                Err(Error::InvalidParameter(format!("negative spectral density {j} at {w}")))
            } else {
                Ok((j * dw).sqrt())
            }
        })
        .collect::<Result<_>>()?;
    Ok(DiscretizedBath { omegas, mu })
}

/// Amplitudes of the single-excitation sector at the sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationTrajectory {
    pub times: Vec<f64>,
    /// Amplitude of `|10, vac>`.
    pub c1: Vec<C64>,
    /// Amplitude of `|01, vac>`.
    pub c2: Vec<C64>,
    /// Amplitudes of `|00, 1_k>`.
    pub bath: Vec<Vec<C64>>,
}

impl SingleExcitationTrajectory {
    /// `|<ψ(0)|ψ(t)>|²`.
    pub fn survival(&self) -> Vec<f64> {
        let (a, b) = (self.c1[0], self.c2[0]);
        self.c1
            .iter()
            .zip(&self.c2)
            .map(|(&x, &y)| (a.conj() * x + b.conj() * y).norm_sqr())
            .collect()
    }

    /// `2|ρ23| = 2|c1 c2|`.
    pub fn concurrence(&self) -> Vec<f64> {
        self.c1.iter().zip(&self.c2).map(|(x, y)| 2.0 * x.norm() * y.norm()).collect()
    }

    /// Reduced two-qubit density matrices in the basis `(|11>, |10>, |01>, |00>)`.
    pub fn rho_reduced(&self) -> Vec<ComplexMatrix> {
        (0..self.times.len())
            .map(|k| {
                let (x, y) = (self.c1[k], self.c2[k]);
                let mut rho = ComplexMatrix::zeros(4, 4);
                rho[(1, 1)] = C64::new(x.norm_sqr(), 0.0);
                rho[(2, 2)] = C64::new(y.norm_sqr(), 0.0);
                rho[(1, 2)] = x * y.conj();
                rho[(2, 1)] = y * x.conj();
                rho[(3, 3)] = C64::new(self.bath[k].iter().map(|b| b.norm_sqr()).sum(), 0.0);
                rho
            })
            .collect()
    }
}

/// Exact RWA dynamics of the qubits and a discretized bath, restricted to
/// the single-excitation sector `{|10,vac>, |01,vac>, |00,1_k>}`.
///
/// With the qubit pair at zero energy, `|00,1_k>` sits at `ω_k - Δ` and
/// couples to `|10,vac>` and `|01,vac>` with `g α_j μ_k`.
pub fn rwa_single_excitation_evolve(
    qubits: &QubitPair,
    bath: &DiscretizedBath,
    initial: (C64, C64),
    cfg: &IntegratorConfig,
) -> Result<SingleExcitationTrajectory> {
    cfg.validate()?;
    let norm0 = initial.0.norm_sqr() + initial.1.norm_sqr();
    if (norm0 - 1.0).abs() > NORM_DRIFT_TOL {
        return Err(Error::InvalidParameter(format!("initial amplitudes have norm {norm0}")));
    }
    let m = bath.len();
    let detuning: Vec<f64> = bath.omegas.iter().map(|w| w - qubits.delta).collect();
    let k1: Vec<f64> = bath.mu.iter().map(|mu| qubits.g * qubits.alpha1 * mu).collect();
    let k2: Vec<f64> = bath.mu.iter().map(|mu| qubits.g * qubits.alpha2 * mu).collect();

    // State layout: [c1, c2, b_1 .. b_m].
    let deriv = |x: &[C64], y: &mut [C64]| {
        let (c1, c2) = (x[0], x[1]);
        let (mut s1, mut s2) = (ZERO, ZERO);
        for k in 0..m {
            let b = x[2 + k];
            s1 += b * k1[k];
            s2 += b * k2[k];
            y[2 + k] = -I * (b * detuning[k] + c1 * k1[k] + c2 * k2[k]);
        }
        y[0] = -I * s1;
        y[1] = -I * s2;
    };

    let n = m + 2;
    let mut psi = vec![ZERO; n];
    psi[0] = initial.0;
    psi[1] = initial.1;
    let mut traj = SingleExcitationTrajectory {
        times: vec![0.0],
        c1: vec![psi[0]],
        c2: vec![psi[1]],
        bath: vec![psi[2..].to_vec()],
    };
    let (mut k, mut stage, mut acc) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let dt = cfg.dt;
    let n_steps = cfg.n_steps();
    for step in 1..=n_steps {
        rk4_step(&deriv, dt, &mut psi, &mut k, &mut stage, &mut acc);
        let time = step as f64 * dt;
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - 1.0).abs();
        if drift > NORM_DRIFT_TOL {
            return Err(Error::NormDrift { time, drift });
        }
        if step % cfg.sample_every == 0 || step == n_steps {
            traj.times.push(time);
            traj.c1.push(psi[0]);
            traj.c2.push(psi[1]);
            traj.bath.push(psi[2..].to_vec());
        }
    }
    Ok(traj)
}

fn rk4_step<F: Fn(&[C64], &mut [C64])>(
    deriv: &F,
    dt: f64,
    psi: &mut [C64],
    k: &mut [C64],
    stage: &mut [C64],
    acc: &mut [C64],
) {
    deriv(psi, k);
    for i in 0..psi.len() {
        acc[i] = k[i];
        stage[i] = psi[i] + k[i] * (0.5 * dt);
    }
    deriv(stage, k);
    for i in 0..psi.len() {
        acc[i] += k[i] * 2.0;
        stage[i] = psi[i] + k[i] * (0.5 * dt);
    }
    deriv(stage, k);
    for i in 0..psi.len() {
        acc[i] += k[i] * 2.0;
        stage[i] = psi[i] + k[i] * dt;
    }
    deriv(stage, k);
    for i in 0..psi.len() {
        psi[i] += (acc[i] + k[i]) * (dt / 6.0);
    }
}

/// Reduced qubit states and survival probability of a closed evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct CrTrajectory {
    pub times: Vec<f64>,
    pub rho_reduced: Vec<ComplexMatrix>,
    pub survival: Vec<f64>,
}

/// Hilbert-space dimension `4 (n+1)^m`, or `None` on overflow.
fn cr_dim(modes: usize, fock_cutoff: usize) -> Option<usize> {
    (0..modes).try_fold(4usize, |acc, _| acc.checked_mul(fock_cutoff + 1))
}

/// Full counter-rotating Hamiltonian of the qubits and every bath mode,
/// each mode truncated at `fock_cutoff` photons.
pub fn cr_hamiltonian(qubits: &QubitPair, bath: &DiscretizedBath, fock_cutoff: usize) -> Result<SparseOp> {
    let m = bath.len();
    let dim = cr_dim(m, fock_cutoff)
        .filter(|&d| d <= MAX_CR_DIM)
        .ok_or(Error::DimensionOverflow {
            dim: cr_dim(m, fock_cutoff).unwrap_or(usize::MAX),
            limit: MAX_CR_DIM,
        })?;
    let base = fock_cutoff + 1;
    let mode_dim = dim / 4;
    // Mode k is digit k of the mode index, most significant first.
    let stride: Vec<usize> = (0..m).map(|k| base.pow((m - 1 - k) as u32)).collect();
    let alphas = [qubits.alpha1, qubits.alpha2];
    let mut triplets = Vec::new();
    for q in 0..4 {
        // Qubit 1 is the high bit of q; bit value 0 means excited.
        let excited = [q & 2 == 0, q & 1 == 0];
        let qubit_energy: f64 = excited.iter().map(|&e| if e { 0.5 } else { -0.5 }).sum::<f64>() * qubits.delta;
        for n in 0..mode_dim {
            let row = q * mode_dim + n;
            let photons: Vec<usize> = stride.iter().map(|&s| (n / s) % base).collect();
            let energy = qubit_energy + photons.iter().zip(&bath.omegas).map(|(&p, w)| p as f64 * w).sum::<f64>();
            triplets.push((row, row, C64::new(energy, 0.0)));
            for (j, &alpha) in alphas.iter().enumerate() {
                let flipped = q ^ (2 >> j);
                for k in 0..m {
                    let c = qubits.g * alpha * bath.mu[k];
                    if c == 0.0 {
                        continue;
                    }
                    let p = photons[k];
                    if p + 1 < base {
                        let col = flipped * mode_dim + n + stride[k];
                        let v = c * ((p + 1) as f64).sqrt();
                        triplets.push((row, col, C64::new(v, 0.0)));
                        triplets.push((col, row, C64::new(v, 0.0)));
                    }
                }
            }
        }
    }
    Ok(SparseOp::from_triplets(dim, triplets))
}

/// Closed evolution of `qubit_state ⊗ vac` under [`cr_hamiltonian`].
pub fn cr_truncated_evolve(
    qubits: &QubitPair,
    bath: &DiscretizedBath,
    fock_cutoff: usize,
    qubit_state: &StateVector,
    cfg: &IntegratorConfig,
) -> Result<CrTrajectory> {
    cfg.validate()?;
    if qubit_state.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: qubit_state.len(),
        });
    }
    let h = cr_hamiltonian(qubits, bath, fock_cutoff)?;
    let dim = h.dim();
    let mode_dim = dim / 4;
    let mut psi = vec![ZERO; dim];
    for q in 0..4 {
        psi[q * mode_dim] = qubit_state[q];
    }
    let psi0 = psi.clone();
    let reduced = |psi: &[C64]| {
        ComplexMatrix::from_fn(4, 4, |a, b| {
            (0..mode_dim).map(|n| psi[a * mode_dim + n] * psi[b * mode_dim + n].conj()).sum()
        })
    };
    let overlap = |psi: &[C64]| -> f64 { psi0.iter().zip(psi).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr() };
    let mut traj = CrTrajectory {
        times: vec![0.0],
        rho_reduced: vec![reduced(&psi)],
        survival: vec![overlap(&psi)],
    };
    let deriv = |x: &[C64], y: &mut [C64]| {
        h.matvec_into(x, y);
        y.iter_mut().for_each(|v| *v *= -I);
    };
    let (mut k, mut stage, mut acc) = (vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim]);
    let n_steps = cfg.n_steps();
    for step in 1..=n_steps {
        rk4_step(&deriv, cfg.dt, &mut psi, &mut k, &mut stage, &mut acc);
        let time = step as f64 * cfg.dt;
        let drift = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - qubit_state.norm()).abs();
        if drift > NORM_DRIFT_TOL {
            return Err(Error::NormDrift { time, drift });
        }
        if step % cfg.sample_every == 0 || step == n_steps {
            traj.times.push(time);
            traj.rho_reduced.push(reduced(&psi));
            traj.survival.push(overlap(&psi));
        }
    }
    Ok(traj)
}

/// Root of an increasing secular function inside `(lower, upper)`, whose
/// ends are the poles `lower_pole`/`upper_pole` when given. `f(shifted, tau,
/// origin)` evaluates the function at `origin + tau` given
/// `shifted[j] = poles[j] - origin`. Returns `(origin, tau)`.
fn secular_root<F: Fn(&[f64], f64, f64) -> f64>(
    poles: &[f64],
    lower: f64,
    upper: f64,
    lower_pole: Option<usize>,
    upper_pole: Option<usize>,
    f: &F,
    shifted: &mut Vec<f64>,
) -> (f64, f64) {
    let shift_to = |origin: f64, shifted: &mut Vec<f64>| {
        shifted.clear();
        shifted.extend(poles.iter().map(|&p| p - origin));
    };
    // Measure from the pole nearest the root so that the small differences
    // `pole - λ` that dominate the eigenvector are computed accurately.
    let origin = match (lower_pole, upper_pole) {
        (Some(l), Some(u)) => {
            shift_to(poles[l], shifted);
            if f(shifted, 0.5 * (upper - lower), poles[l]) >= 0.0 {
                poles[l]
            } else {
                poles[u]
            }
        }
        (Some(l), None) => poles[l],
        (None, Some(u)) => poles[u],
        (None, None) => 0.5 * (lower + upper),
    };
    shift_to(origin, shifted);
    let (mut a, mut b) = (lower - origin, upper - origin);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(shifted, mid, origin) >= 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    (origin, 0.5 * (a + b))
}

/// Normal modes of the bath coupled to the collective disturbing oscillator.
///
/// In mass-weighted coordinates the potential is `½ xᵀ K x` with
/// `K = diag(ω_k², 0) + u uᵀ`, `u = (2√I μ_k √ω_k, Ω)`: the bath block
/// gains the rank-one self-energy `4I μ_k μ_l √(ω_k ω_l)` and the collective
/// oscillator couples with `2√I Ω μ_k √ω_k`. The qubits couple through
/// `Σ μ_k √(2ω_k) x_k`, so normal mode `j` (frequency `Ω_j`, eigenvector
/// `v_j`) carries `ν_j = Σ_k μ_k √ω_k v_j[k] / √Ω_j`.
///
/// Modes with exactly zero weight are dropped. With `self_energy = false`
/// the `u uᵀ` bath block is omitted, leaving an arrowhead matrix that fails
/// to be positive definite once `4I Σ μ_k²/ω_k ≥ 1`.
pub fn quadratic_normal_modes(bath: &DiscretizedBath, dist: &Disturbance, self_energy: bool) -> Result<DiscretizedBath> {
    let m = bath.len();
    if m < 2 {
        return Err(Error::InvalidParameter("need at least two bath modes".into()));
    }
    if bath.omegas.windows(2).any(|w| !(w[0] < w[1])) || bath.omegas[0] <= 0.0 {
        return Err(Error::InvalidParameter("bath frequencies must be positive and increasing".into()));
    }
    let big = dist.omega_big;
    let sqrt_i = dist.intensity.sqrt();
    let weights: Vec<f64> = bath.mu.iter().zip(&bath.omegas).map(|(mu, w)| mu * w.sqrt()).collect();

    let (freqs, proj) = if self_energy {
        rank_one_modes(bath, &weights, sqrt_i, big)
    } else {
        let coupling: Vec<f64> = weights.iter().map(|w| 2.0 * sqrt_i * big * w).collect();
        let schur = big * big - coupling.iter().zip(&bath.omegas).map(|(c, w)| c * c / (w * w)).sum::<f64>();
        if schur <= 0.0 {
            return Err(Error::NonPositiveDefinite { schur });
        }
        arrowhead_modes(bath, &weights, &coupling, big * big)
    };
    let (omegas, mu): (Vec<f64>, Vec<f64>) = freqs
        .into_iter()
        .zip(proj)
        .filter(|&(_, nu)| nu != 0.0)
        .map(|(lambda, p)| {
            let w = lambda.sqrt();
            (w, p / w.sqrt())
        })
        .unzip();
    Ok(DiscretizedBath { omegas, mu })
}

/// Eigenvalues of `diag(ω_k², 0) + u uᵀ` and the projections `Σ_k w_k v[k]`
/// of the normalized eigenvectors.
fn rank_one_modes(bath: &DiscretizedBath, weights: &[f64], sqrt_i: f64, big: f64) -> (Vec<f64>, Vec<f64>) {
    // Poles sorted ascending: the collective oscillator (0) then the bath.
    let mut poles = vec![0.0];
    poles.extend(bath.omegas.iter().map(|w| w * w));
    let mut u = vec![big];
    u.extend(weights.iter().map(|w| 2.0 * sqrt_i * w));
    let mut w_full = vec![0.0];
    w_full.extend_from_slice(weights);

    let mut eigen = Vec::with_capacity(poles.len());
    // Zero components decouple: eigenpair (pole, unit vector).
    let active: Vec<usize> = (0..poles.len()).filter(|&i| u[i] != 0.0).collect();
    for i in (0..poles.len()).filter(|&i| u[i] == 0.0) {
        eigen.push((poles[i], w_full[i]));
    }
    let act_poles: Vec<f64> = active.iter().map(|&i| poles[i]).collect();
    let act_u2: Vec<f64> = active.iter().map(|&i| u[i] * u[i]).collect();
    let norm_u2: f64 = act_u2.iter().sum();
    let secular = |shifted: &[f64], tau: f64, _origin: f64| -> f64 {
        1.0 + act_u2.iter().zip(shifted).map(|(u2, d)| u2 / (d - tau)).sum::<f64>()
    };
    let n = act_poles.len();
    let mut shifted = Vec::with_capacity(n);
    for r in 0..n {
        let (lower, upper, upper_pole) = if r + 1 < n {
            (act_poles[r], act_poles[r + 1], Some(r + 1))
        } else {
            (act_poles[r], act_poles[r] + norm_u2, None)
        };
        let (origin, tau) = secular_root(&act_poles, lower, upper, Some(r), upper_pole, &secular, &mut shifted);
        let lambda = origin + tau;
        // Eigenvector components u_i / (d_i - λ).
        let mut norm2 = 0.0;
        let mut proj = 0.0;
        for (k, &i) in active.iter().enumerate() {
            let comp = u[i] / ((act_poles[k] - origin) - tau);
            norm2 += comp * comp;
            proj += w_full[i] * comp;
        }
        eigen.push((lambda, proj / norm2.sqrt()));
    }
    eigen.sort_by(|a, b| a.0.total_cmp(&b.0));
    eigen.into_iter().unzip()
}

/// Eigenvalues of the arrowhead matrix `[[diag(ω_k²), c], [cᵀ, Ω²]]` and
/// eigenvector projections on the bath weights.
fn arrowhead_modes(bath: &DiscretizedBath, weights: &[f64], coupling: &[f64], corner: f64) -> (Vec<f64>, Vec<f64>) {
    let poles: Vec<f64> = bath.omegas.iter().map(|w| w * w).collect();
    let c2: Vec<f64> = coupling.iter().map(|c| c * c).collect();
    // Increasing in λ: λ - Ω² + Σ c_k² / (d_k - λ).
    let secular = |shifted: &[f64], tau: f64, origin: f64| -> f64 {
        origin + tau - corner + c2.iter().zip(shifted).map(|(c, d)| c / (d - tau)).sum::<f64>()
    };
    let m = poles.len();
    let radius: f64 = coupling.iter().map(|c| c.abs()).sum();
    let lowest = (corner - radius).min(poles[0] - radius).min(0.0) - 1.0;
    let highest = (corner + radius).max(poles[m - 1] + radius) + 1.0;
    let mut shifted = Vec::with_capacity(m);
    let mut out = Vec::with_capacity(m + 1);
    for r in 0..=m {
        let (lower, upper, lp, up) = match r {
            0 => (lowest, poles[0], None, Some(0)),
            _ if r == m => (poles[m - 1], highest, Some(m - 1), None),
            _ => (poles[r - 1], poles[r], Some(r - 1), Some(r)),
        };
        let (origin, tau) = secular_root(&poles, lower, upper, lp, up, &secular, &mut shifted);
        // Eigenvector (c_k / (λ - d_k), 1).
        let mut norm2 = 1.0;
        let mut proj = 0.0;
        for k in 0..m {
            let comp = coupling[k] / (tau - (poles[k] - origin));
            norm2 += comp * comp;
            proj += weights[k] * comp;
        }
        out.push((origin + tau, proj / norm2.sqrt()));
    }
    out.into_iter().unzip()
}

/// Histogram of `μ_k²` in bins of width `width` starting at `lo`, divided by
/// the width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDensity {
    pub lo: f64,
    pub width: f64,
    pub values: Vec<f64>,
}

impl BinnedDensity {
    pub fn centers(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.lo + (k as f64 + 0.5) * self.width).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.width
    }
}

/// Bins aligned to `lo`; the range extends as far as needed to hold every
/// mode, including modes below `lo`.
pub fn binned_density(bath: &DiscretizedBath, lo: f64, width: f64) -> Result<BinnedDensity> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("bin width must be positive, got {width}")));
    }
    if bath.is_empty() {
        return Ok(BinnedDensity { lo, width, values: Vec::new() });
    }
    let index = |w: f64| ((w - lo) / width).floor() as i64;
    let first = bath.omegas.iter().map(|&w| index(w)).min().unwrap().min(0);
    let last = bath.omegas.iter().map(|&w| index(w)).max().unwrap();
    let start = lo + first as f64 * width;
    let mut values = vec![0.0; (last - first + 1) as usize];
    for (&w, &mu) in bath.omegas.iter().zip(&bath.mu) {
        values[(index(w) - first) as usize] += mu * mu / width;
    }
    Ok(BinnedDensity { lo: start, width, values })
}
