//! First-order (in η = g0M/4ω) adiabatic solutions of the driven two-level
//! system, used as the closed-form reference for the numerics.
//!
//! With pulse area `A(t) = g'_0(t) t` and `Σ = (i/2) e^{-i(2ωt+2φ)}`:
//!
//! ```text
//! c0 = cos(A/2) - 2ηΣ sin(A/2)
//! c1 = i e^{-i(ωt+φ)} [sin(A/2) + 2ηΣ* cos(A/2)]
//! ```

use crate::model::g_mean;
use crate::semiclassical::{Frame, Rotation, Trajectory};
use crate::{DriveField, Error, Result, TwoLevelState, C64};

/// `η` and the time-dependent pieces of the adiabatic solution.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticTerms {
    pub eta: f64,
    field: DriveField,
}

impl AnalyticTerms {
    pub fn new(field: &DriveField) -> Self {
        Self {
            eta: field.eta(),
            field: *field,
        }
    }

    /// `Σ(t) = (i/2) e^{-i(2ωt+2φ)}`; always of modulus ½.
    pub fn sigma_term(&self, t: f64) -> C64 {
        C64::new(0.0, 0.5) * C64::from_polar(1.0, -2.0 * (self.field.omega() * t + self.field.phi()))
    }

    pub fn g_mean(&self, t: f64) -> Result<f64> {
        g_mean(&self.field, t)
    }

    /// Pulse area `g'_0(t) t`.
    pub fn area(&self, t: f64) -> Result<f64> {
        self.field.pulse_area(t)
    }
}

/// Lab-frame `(c0, c1)` of the adiabatic solution; normalized only to
/// first order in η.
pub fn amplitudes_adiabatic(field: &DriveField, t: f64) -> Result<(C64, C64)> {
    let terms = AnalyticTerms::new(field);
    let half = terms.area(t)? / 2.0;
    let two_eta_sigma = 2.0 * terms.eta * terms.sigma_term(t);
    let (s, c) = half.sin_cos();
    let c0 = c - two_eta_sigma * s;
    let c1 =
        C64::new(0.0, 1.0) * C64::from_polar(1.0, -(field.omega() * t + field.phi())) * (s + two_eta_sigma.conj() * c);
    Ok((c0, c1))
}

/// Samples [`amplitudes_adiabatic`] on `times` as a lab-frame trajectory.
pub fn adiabatic_trajectory(field: &DriveField, times: &[f64]) -> Result<Trajectory<TwoLevelState>> {
    let states = times
        .iter()
        .map(|&t| amplitudes_adiabatic(field, t).map(|(c0, c1)| TwoLevelState::new(c0, c1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        frame: Frame::Lab,
        rotation: Rotation::two_level(field),
    })
}

/// Excited population after a π/2 pulse ending at `tau`, with drive phase
/// `phi`: `½[1 + 2η sin(2ωτ + 2φ)]`.
pub fn pi_half_signal(field: &DriveField, tau: f64, phi: f64) -> f64 {
    0.5 * (1.0 + 2.0 * field.eta() * (2.0 * field.omega() * tau + 2.0 * phi).sin())
}

/// Excited amplitude and population when the system starts with population
/// `a0` in `|1⟩`.
///
/// The amplitude carries the square-root form; the population is the
/// first-order expression
/// `A0 + (1-2A0) sin²(A/2) + η (1-2A0) sin(A) sin(2ωt+2φ)`.
pub fn amplitudes_arbitrary_init(field: &DriveField, a0: f64, t: f64) -> Result<(C64, f64)> {
    if !(0.0..=1.0).contains(&a0) {
        return Err(Error::Domain(format!(
            "initial excited population must lie in [0, 1], got {a0}"
        )));
    }
    let terms = AnalyticTerms::new(field);
    let area = terms.area(t)?;
    let (s, c) = (area / 2.0).sin_cos();
    let k = 1.0 - 2.0 * a0;
    // Signed roots, so that A0 = 0 continues the pure-state solution past
    // pulse area π.
    let upper = s.signum() * (a0 + k * s * s).max(0.0).sqrt();
    let lower = c.signum() * (a0 + k * c * c).max(0.0).sqrt();
    let two_eta_sigma_conj = 2.0 * terms.eta * terms.sigma_term(t).conj();
    let c1 = C64::new(0.0, 1.0)
        * C64::from_polar(1.0, -(field.omega() * t + field.phi()))
        * (upper + two_eta_sigma_conj * lower);
    let theta2 = 2.0 * (field.omega() * t + field.phi());
    let pop1 = a0 + k * s * s + terms.eta * k * area.sin() * theta2.sin();
    Ok((c1, pop1))
}

/// The oscillating part of the arbitrary-initial-population result,
/// `η (1-2A0) sin(A(t)) sin(2ωt+2φ)`.
pub fn bso_term(field: &DriveField, a0: f64, t: f64) -> Result<f64> {
    let area = field.pulse_area(t)?;
    Ok(field.eta() * (1.0 - 2.0 * a0) * area.sin() * (2.0 * (field.omega() * t + field.phi())).sin())
}
