//! Device parameters, the tuned operating point and validity diagnostics.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[allow(unused_imports)] // unused only when std leaks in through dev-dependencies
use num_traits::Float;
use thiserror::Error;

/// Dispersive regime cut on |λ|.
pub const DISPERSIVE_LAMBDA_MAX: f64 = 0.1;
/// Rotating-wave cut on max(J, g, κ) / min(ω_r, ω_c).
pub const RWA_RATIO_MAX: f64 = 0.05;
/// Cut on the photon loss probability in the array.
pub const LOSS_PROBABILITY_MAX: f64 = 0.05;
/// Required ratio τ_coh / τ_tvl.
pub const COHERENCE_MARGIN: f64 = 10.0;
/// Typical transmon window for the relative anharmonicity.
pub const ANHARMONICITY_WINDOW: (f64, f64) = (-0.06, -0.04);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error(
        "qubit detuning {detuning} rad/us is too small for g_ge = {g_ge} rad/us: no real dispersive solution"
    )]
    DetuningTooSmall { detuning: f64, g_ge: f64 },
}

/// Raw device parameters. Angular frequencies in rad/µs, times in µs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Frequency of the non-central resonators.
    pub omega_r: f64,
    /// Qubit `|g>`-`|e>` transition frequency.
    pub omega_ge: f64,
    /// Resonator coupling of the `|e>`-`|f>` transition.
    pub g_ef: f64,
    /// Resonator coupling of the `|g>`-`|e>` transition. `None` means the
    /// transmon relation `g_ge = g_ef / sqrt(2)`.
    pub g_ge: Option<f64>,
    /// Nearest-neighbour hopping J.
    pub hopping: f64,
    /// Exchange rate with the input waveguide.
    pub kappa_1: f64,
    /// Exchange rate with the output waveguide.
    pub kappa_2: f64,
    /// Number of resonators, odd.
    pub n_res: usize,
    /// Per-resonator dissipation rate (diagnostics only).
    pub gamma_res: f64,
    /// Qubit coherence time (diagnostics only).
    pub tau_coh: f64,
}

impl DeviceParams {
    /// Effective `g_ge`, honouring an explicit override.
    pub fn g_ge(&self) -> f64 {
        self.g_ge.unwrap_or(self.g_ef * FRAC_1_SQRT_2)
    }

    pub fn g_ge_overridden(&self) -> bool {
        self.g_ge.is_some()
    }

    /// Half-length N of the chain, `n_res = 2N + 1`.
    pub fn half_length(&self) -> usize {
        self.n_res / 2
    }

    /// Checks the invariants required before any simulation.
    pub fn validate(&self) -> Result<(), ModelError> {
        use ModelError::InvalidParameter as Bad;
        if self.n_res < 3 || self.n_res.is_multiple_of(2) {
            return Err(Bad { name: "n_res", reason: "must be odd and at least 3" });
        }
        for (name, v) in [("omega_r", self.omega_r), ("omega_ge", self.omega_ge)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Bad { name, reason: "must be finite and positive" });
            }
        }
        let rates = [
            ("g_ef", self.g_ef),
            ("g_ge", self.g_ge()),
            ("hopping", self.hopping),
            ("kappa_1", self.kappa_1),
            ("kappa_2", self.kappa_2),
            ("gamma_res", self.gamma_res),
            ("tau_coh", self.tau_coh),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Bad { name, reason: "must be finite and non-negative" });
            }
        }
        Ok(())
    }
}

/// Quantities derived from [`DeviceParams`] by the tuning conditions
/// `ω_c − χ = ω_r` (dressed central resonator matches the chain when the qubit
/// is in `|g>`) and `ω_c + χ = ω_a` (dressed `|e>`-`|f>` transition resonant
/// with the dressed central resonator when the qubit is in `|e>`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Bare central-resonator frequency.
    pub omega_c: f64,
    /// Bare `|e>`-`|f>` transition frequency.
    pub omega_ef: f64,
    /// Dispersive shift.
    pub chi: f64,
    /// Dispersive parameter g_ge / (ω_ge − ω_c).
    pub lambda: f64,
    /// Dressed `|e>`-`|f>` transition.
    pub omega_a: f64,
    /// (ω_ef − ω_ge) / ω_ge.
    pub alpha_rel: f64,
    /// JC detunings from ω_r: `[δ+, δ-] = λ g_ge ± g_ef`.
    pub delta_pm: [f64; 2],
    pub g_ge: f64,
    /// |λ| below [`DISPERSIVE_LAMBDA_MAX`].
    pub dispersive_valid: bool,
    /// Coupling-to-frequency ratio below [`RWA_RATIO_MAX`].
    pub rwa_valid: bool,
    pub anharmonicity_in_window: bool,
}

impl OperatingPoint {
    /// Absolute anharmonicity ω_ef − ω_ge.
    pub fn alpha(&self, p: &DeviceParams) -> f64 {
        self.omega_ef - p.omega_ge
    }
}

/// Tunes ω_c and ω_ef for the given device.
pub fn derive_operating_point(p: &DeviceParams) -> Result<OperatingPoint, ModelError> {
    let g_ge = p.g_ge();
    let detuning = p.omega_ge - p.omega_r;
    let g2 = g_ge * g_ge;

    // (ω_c − ω_r)(ω_ge − ω_c) = g_ge²; the small root is the dispersive one.
    let chi_raw = if g2 == 0.0 {
        0.0
    } else {
        let disc = detuning * detuning - 4.0 * g2;
        if !(disc > 0.0) {
            return Err(ModelError::DetuningTooSmall { detuning, g_ge });
        }
        2.0 * g2 / (detuning + detuning.signum() * disc.sqrt())
    };
    let omega_c = p.omega_r + chi_raw;
    let chi = omega_c - p.omega_r;
    let lambda = if g_ge == 0.0 { 0.0 } else { g_ge / (p.omega_ge - omega_c) };
    let omega_ef = p.omega_r + 3.0 * chi;
    let omega_a = omega_ef - chi;
    let alpha_rel = (omega_ef - p.omega_ge) / p.omega_ge;
    let shift = lambda * g_ge;

    let largest_coupling = [p.hopping, g_ge, p.g_ef, p.kappa_1, p.kappa_2]
        .into_iter()
        .fold(0.0, f64::max);
    let rwa_valid = largest_coupling / p.omega_r.min(omega_c) < RWA_RATIO_MAX;

    Ok(OperatingPoint {
        omega_c,
        omega_ef,
        chi,
        lambda,
        omega_a,
        alpha_rel,
        delta_pm: [shift + p.g_ef, shift - p.g_ef],
        g_ge,
        dispersive_valid: lambda.abs() < DISPERSIVE_LAMBDA_MAX,
        rwa_valid,
        anharmonicity_in_window: (ANHARMONICITY_WINDOW.0..=ANHARMONICITY_WINDOW.1)
            .contains(&alpha_rel),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandReport {
    pub lower_edge: f64,
    pub upper_edge: f64,
    /// `E_n − ω_r = −2J cos(nπ/(N_res+1))` for n = 1..=N_res.
    pub mode_offsets: Vec<f64>,
    /// Absolute mode frequencies `E_n`.
    pub modes: Vec<f64>,
    /// |ω_ge − ω_r| > 2J: Purcell decay of `|e>` is blocked.
    pub qubit_in_gap: bool,
    /// |ω_a − ω_r| ≤ 2J.
    pub dressed_in_band: bool,
}

impl BandReport {
    pub fn width(&self) -> f64 {
        self.upper_edge - self.lower_edge
    }
}

/// Passband of the uniform array and where the qutrit transitions sit in it.
pub fn passband_diagnostics(p: &DeviceParams, op: &OperatingPoint) -> BandReport {
    let n = p.n_res;
    let half_band = 2.0 * p.hopping;
    let mut mode_offsets = alloc::vec![0.0; n];
    // Fill from both ends so that E_n + E_{N+1-n} = 2ω_r exactly.
    for k in 1..=n.div_ceil(2) {
        let q = k as f64 * PI / (n + 1) as f64;
        let offset = -half_band * q.cos();
        mode_offsets[k - 1] = offset;
        mode_offsets[n - k] = -offset;
    }
    if n % 2 == 1 {
        mode_offsets[n / 2] = 0.0;
    }
    let modes = mode_offsets.iter().map(|d| p.omega_r + d).collect();
    BandReport {
        lower_edge: p.omega_r - half_band,
        upper_edge: p.omega_r + half_band,
        mode_offsets,
        modes,
        qubit_in_gap: (p.omega_ge - p.omega_r).abs() > half_band,
        dressed_in_band: (op.omega_a - p.omega_r).abs() <= half_band,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    /// Photon loss probability in the array, `N_res γ_res / (2J)`.
    pub loss_probability: f64,
    /// Travel time `τ_p + N_res / (2J)`.
    pub travel_time: f64,
    pub loss_negligible: bool,
    pub coherence_sufficient: bool,
}

/// Closed-form loss and decoherence estimates for a pulse of duration `tau_p`.
pub fn loss_diagnostics(p: &DeviceParams, tau_p: f64) -> LossReport {
    let n = p.n_res as f64;
    let loss_probability = n * p.gamma_res / (2.0 * p.hopping);
    let travel_time = tau_p + n / (2.0 * p.hopping);
    LossReport {
        loss_probability,
        travel_time,
        loss_negligible: loss_probability < LOSS_PROBABILITY_MAX,
        coherence_sufficient: p.tau_coh >= COHERENCE_MARGIN * travel_time,
    }
}
