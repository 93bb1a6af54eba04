//! Lorentzian single-photon wave packet.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // unused only when std leaks in through dev-dependencies
use num_traits::Float;
use thiserror::Error;

use crate::C64;

/// Bandwidth-to-carrier ratio below which the packet counts as narrowband.
pub const NARROWBAND_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseError {
    #[error("pulse duration must be finite and positive, got {0}")]
    Duration(f64),
    #[error("carrier frequency must be finite, got {0}")]
    Carrier(f64),
    #[error("spectral grid needs a positive half-width and at least 3 points")]
    Grid,
}

/// Input wave packet with carrier `omega_0` [rad/µs] and duration `tau_p` [µs].
///
/// The spectral amplitude is
/// `ξ(ω) = (2π τ_p)^{-1/2} / ((ω − ω_0) + i/(2τ_p))`
/// and the drive seen by the first resonator is
/// `Ξ(t) = sqrt(2π/τ_p) exp(−t/(2τ_p) − iω_0 t) θ(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    omega_0: f64,
    tau_p: f64,
}

impl Pulse {
    pub fn new(omega_0: f64, tau_p: f64) -> Result<Self, PulseError> {
        if !(tau_p.is_finite() && tau_p > 0.0) {
            return Err(PulseError::Duration(tau_p));
        }
        if !omega_0.is_finite() {
            return Err(PulseError::Carrier(omega_0));
        }
        Ok(Self { omega_0, tau_p })
    }

    pub fn omega_0(&self) -> f64 {
        self.omega_0
    }

    pub fn tau_p(&self) -> f64 {
        self.tau_p
    }

    /// γ_0 = 1/τ_p.
    pub fn bandwidth(&self) -> f64 {
        1.0 / self.tau_p
    }

    pub fn is_narrowband(&self) -> bool {
        self.bandwidth() / self.omega_0.abs() < NARROWBAND_RATIO
    }

    /// ξ(ω).
    pub fn spectrum(&self, omega: f64) -> C64 {
        self.spectrum_at_detuning(omega - self.omega_0)
    }

    /// ξ evaluated at `ω_0 + detuning`.
    pub fn spectrum_at_detuning(&self, detuning: f64) -> C64 {
        let norm = (1.0 / (2.0 * PI * self.tau_p)).sqrt();
        C64::new(norm, 0.0) / C64::new(detuning, 0.5 / self.tau_p)
    }

    /// |ξ|² at `ω_0 + detuning`.
    pub fn power_at_detuning(&self, detuning: f64) -> f64 {
        let gamma = 0.5 / self.tau_p;
        1.0 / (2.0 * PI * self.tau_p) / (detuning * detuning + gamma * gamma)
    }

    /// Ξ(t) in the laboratory frame.
    pub fn drive(&self, t: f64) -> C64 {
        self.drive_in_frame(t, 0.0)
    }

    /// Ξ(t)·e^{iω_f t}: the drive in a frame rotating at `omega_frame`.
    pub fn drive_in_frame(&self, t: f64, omega_frame: f64) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        let amplitude = (2.0 * PI / self.tau_p).sqrt() * (-0.5 * t / self.tau_p).exp();
        C64::from_polar(amplitude, -(self.omega_0 - omega_frame) * t)
    }

    /// Probability carried into the device up to time `t`, `1 − e^{−t/τ_p}`.
    pub fn injected_probability(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-t / self.tau_p).exp_m1()
        }
    }

    /// Weight of |ξ|² outside `[ω_0 − w, ω_0 + w]`.
    pub fn tail_weight(&self, w: f64) -> f64 {
        1.0 - 2.0 / PI * (2.0 * self.tau_p * w).atan()
    }
}

/// Uniform frequency grid `ω_0 ± halfwidth/τ_p` used for every spectral
/// quadrature that is reported on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    /// Half-width W in units of 1/τ_p.
    pub halfwidth: f64,
    pub points: usize,
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self { halfwidth: 40.0, points: 4001 }
    }
}

impl SpectralGrid {
    pub fn validate(&self) -> Result<(), PulseError> {
        if self.halfwidth.is_finite() && self.halfwidth > 0.0 && self.points >= 3 {
            Ok(())
        } else {
            Err(PulseError::Grid)
        }
    }

    /// Half-width in rad/µs for the given pulse.
    pub fn span(&self, pulse: &Pulse) -> f64 {
        self.halfwidth / pulse.tau_p()
    }

    pub fn spacing(&self, pulse: &Pulse) -> f64 {
        2.0 * self.span(pulse) / (self.points - 1) as f64
    }

    /// Grid nodes as detunings from the carrier.
    pub fn detunings(&self, pulse: &Pulse) -> Vec<f64> {
        let span = self.span(pulse);
        let h = self.spacing(pulse);
        (0..self.points).map(|k| -span + k as f64 * h).collect()
    }
}
