//! Spectral densities of the Lorentzian bath, with and without the intense
//! oscillator disturbance, and the two-peak Lorentzian decomposition of the
//! disturbed spectrum.
//!
//! All frequencies are in units of the bath's central frequency `omega0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Peak separation must exceed this multiple of the summed peak widths for
/// the two-Lorentzian form to be accepted.
pub const PEAK_RESOLUTION_FACTOR: f64 = 5.0;

/// Absolute tolerance of [`spectral_weight`].
pub const WEIGHT_ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianBath {
    pub omega0: f64,
    pub gamma: f64,
}

impl LorentzianBath {
    pub fn new(omega0: f64, gamma: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!("omega0 must be positive, got {omega0}")));
        }
        if !(gamma > 0.0 && gamma < omega0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, omega0), got {gamma}"
            )));
        }
        Ok(Self { omega0, gamma })
    }
}

/// Intense disturbance by a bank of oscillators of frequency `omega_big`
/// with total intensity `intensity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub intensity: f64,
    pub omega_big: f64,
}

impl Disturbance {
    pub fn new(intensity: f64, omega_big: f64) -> Result<Self> {
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "intensity must be non-negative, got {intensity}"
            )));
        }
        if !(omega_big.is_finite() && omega_big > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "oscillator frequency must be positive, got {omega_big}"
            )));
        }
        Ok(Self { intensity, omega_big })
    }
}

/// One simplified Lorentzian: `weight/π · width / ((ω - center)² + width²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    pub center: f64,
    pub width: f64,
    pub weight: f64,
}

impl SpectralPeak {
    pub fn density(&self, omega: f64) -> f64 {
        self.weight / PI * self.width / ((omega - self.center).powi(2) + self.width * self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    peaks: Vec<SpectralPeak>,
}

impl PeakSet {
    /// Sorts by center; centers must be distinct, widths and weights
    /// non-negative.
    pub fn new(mut peaks: Vec<SpectralPeak>) -> Result<Self> {
        if peaks.is_empty() {
            return Err(Error::InvalidParameter("peak set is empty".into()));
        }
        if let Some(p) = peaks
            .iter()
            .find(|p| !(p.center > 0.0 && p.width >= 0.0 && p.weight >= 0.0))
        {
            return Err(Error::InvalidParameter(format!("invalid spectral peak {p:?}")));
        }
        peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
        if peaks.windows(2).any(|w| w[0].center == w[1].center) {
            return Err(Error::InvalidParameter("peak centers must be distinct".into()));
        }
        Ok(Self { peaks })
    }

    /// The undisturbed bath as a single unit-weight peak.
    pub fn single(bath: &LorentzianBath) -> Self {
        Self {
            peaks: vec![SpectralPeak {
                center: bath.omega0,
                width: bath.gamma,
                weight: 1.0,
            }],
        }
    }

    pub fn peaks(&self) -> &[SpectralPeak] {
        &self.peaks
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    /// Lower-frequency peak of an engineered pair.
    pub fn minus(&self) -> &SpectralPeak {
        &self.peaks[0]
    }

    /// Higher-frequency peak of an engineered pair.
    pub fn plus(&self) -> &SpectralPeak {
        &self.peaks[self.peaks.len() - 1]
    }

    pub fn total_weight(&self) -> f64 {
        self.peaks.iter().map(|p| p.weight).sum()
    }
}

/// Standard Lorentzian density, vanishing for `ω <= 0`.
pub fn j_b_standard(omega: f64, bath: &LorentzianBath) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let (w0, g) = (bath.omega0, bath.gamma);
    let detuning = omega * omega - w0 * w0;
    let damping = 2.0 * g * omega;
    (2.0 * w0 / PI) * damping / (detuning * detuning + damping * damping)
}

/// Simplified (Cauchy) Lorentzian of unit weight over the whole real line.
pub fn j_b_simplified(omega: f64, bath: &LorentzianBath) -> f64 {
    let g = bath.gamma;
    g / PI / ((omega - bath.omega0).powi(2) + g * g)
}

/// Left-hand side of the peak-frequency condition; it vanishes at both
/// engineered peak centers.
pub fn peak_condition(omega: f64, bath: &LorentzianBath, dist: &Disturbance) -> f64 {
    let w0 = bath.omega0;
    let w2 = omega * omega;
    if dist.intensity == 0.0 {
        return w2 - w0 * w0;
    }
    w2 - w0 * w0 - 4.0 * dist.intensity * w0 * w2 / (w2 - dist.omega_big * dist.omega_big)
}

/// Disturbed spectral density. Exactly at `ω = Ω` the inner fraction has a
/// pole while the density itself tends to zero; that point returns
/// `Err(RemovableSingularity)`.
pub fn j_r_standard_checked(omega: f64, bath: &LorentzianBath, dist: &Disturbance) -> Result<f64> {
    if omega <= 0.0 {
        return Ok(0.0);
    }
    if omega == dist.omega_big && dist.intensity > 0.0 {
        return Err(Error::RemovableSingularity { omega });
    }
    let bracket = peak_condition(omega, bath, dist);
    let damping = 2.0 * bath.gamma * omega;
    Ok((2.0 * bath.omega0 / PI) * damping / (bracket * bracket + damping * damping))
}

/// [`j_r_standard_checked`] with the removable singularity mapped to its
/// limit value 0.
pub fn j_r_standard(omega: f64, bath: &LorentzianBath, dist: &Disturbance) -> f64 {
    j_r_standard_checked(omega, bath, dist).unwrap_or(0.0)
}

/// Splits the disturbed spectrum into two simplified Lorentzians.
///
/// With `x = ω²` the peak condition is the quadratic
/// `x² - (ω0² + Ω² + 4Iω0) x + ω0²Ω² = 0`, whose roots straddle `Ω²`.
pub fn decompose_peaks(bath: &LorentzianBath, dist: &Disturbance) -> Result<PeakSet> {
    let w0 = bath.omega0;
    let big2 = dist.omega_big * dist.omega_big;
    let b = w0 * w0 + big2 + 4.0 * dist.intensity * w0;
    let c = w0 * w0 * big2;
    let disc = (b * b - 4.0 * c).max(0.0);
    let x_plus = 0.5 * (b + disc.sqrt());
    // Product of the roots is c; avoids cancellation in the smaller root.
    let x_minus = c / x_plus;
    let (w_plus, w_minus) = (x_plus.sqrt(), x_minus.sqrt());
    let separation = w_plus - w_minus;
    let split = x_plus - x_minus;

    let unresolved = |width: f64| Error::PeaksUnresolved {
        separation,
        width,
        factor: PEAK_RESOLUTION_FACTOR,
    };
    if split <= 0.0 {
        return Err(unresolved(bath.gamma));
    }
    let g_plus = bath.gamma * (x_plus - big2).abs() / split;
    let g_minus = bath.gamma * (x_minus - big2).abs() / split;
    let width = g_plus + g_minus;
    if g_plus <= 0.0 || g_minus <= 0.0 || separation <= PEAK_RESOLUTION_FACTOR * width {
        return Err(unresolved(width));
    }
    let eta2 = |g_r: f64, w_r: f64| g_r * w0 / (bath.gamma * w_r);
    PeakSet::new(vec![
        SpectralPeak {
            center: w_minus,
            width: g_minus,
            weight: eta2(g_minus, w_minus),
        },
        SpectralPeak {
            center: w_plus,
            width: g_plus,
            weight: eta2(g_plus, w_plus),
        },
    ])
}

/// Sum of the simplified Lorentzians in `peaks`.
pub fn j_r_simplified(omega: f64, peaks: &PeakSet) -> f64 {
    peaks.peaks().iter().map(|p| p.density(omega)).sum()
}

/// Integral of a spectral density over `[lo, hi]` (absolute tolerance
/// [`WEIGHT_ABS_TOL`]).
pub fn spectral_weight<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
    }
    Ok(quadrature::integrate(density, lo, hi, WEIGHT_ABS_TOL).0)
}
