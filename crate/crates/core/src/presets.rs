//! Reference device configurations.

use crate::model::DeviceParams;
use crate::units::mhz;

/// One row of the reference parameter table, with its expected results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    /// J/2π [MHz].
    pub j_mhz: f64,
    /// κ/2π [MHz], κ_1 = κ_2.
    pub kappa_mhz: f64,
    /// g_ef/2π [MHz].
    pub g_ef_mhz: f64,
    /// τ_p [µs].
    pub tau_p_us: f64,
    /// ω_c/2π as printed [GHz].
    pub omega_c_ghz: f64,
    /// ω_ef/2π as printed [GHz].
    pub omega_ef_ghz: f64,
    /// α/2π as printed [MHz].
    pub alpha_mhz: f64,
    pub contrast: f64,
    pub upsilon: f64,
}

pub const OMEGA_R_MHZ: f64 = 7000.0;
pub const OMEGA_GE_MHZ: f64 = 7360.0;
pub const N_RES: usize = 7;

pub const CONTRAST_TOLERANCE: f64 = 0.01;
pub const UPSILON_TOLERANCE: f64 = 0.002;

pub const TABLE1: [TableRow; 3] = [
    TableRow {
        j_mhz: 20.0,
        kappa_mhz: 45.0,
        g_ef_mhz: 50.0,
        tau_p_us: 0.06,
        omega_c_ghz: 7.004,
        omega_ef_ghz: 7.011,
        alpha_mhz: -349.48,
        contrast: 0.952,
        upsilon: 0.0118,
    },
    TableRow {
        j_mhz: 12.0,
        kappa_mhz: 28.0,
        g_ef_mhz: 40.0,
        tau_p_us: 0.3,
        omega_c_ghz: 7.002,
        omega_ef_ghz: 7.007,
        alpha_mhz: -353.29,
        contrast: 0.985,
        upsilon: 0.0044,
    },
    TableRow {
        j_mhz: 10.5,
        kappa_mhz: 24.0,
        g_ef_mhz: 30.0,
        tau_p_us: 0.6,
        omega_c_ghz: 7.001,
        omega_ef_ghz: 7.004,
        alpha_mhz: -356.24,
        contrast: 0.991,
        upsilon: 0.0036,
    },
];

impl TableRow {
    pub fn params(&self) -> DeviceParams {
        DeviceParams {
            omega_r: mhz(OMEGA_R_MHZ),
            omega_ge: mhz(OMEGA_GE_MHZ),
            g_ef: mhz(self.g_ef_mhz),
            g_ge: None,
            hopping: mhz(self.j_mhz),
            kappa_1: mhz(self.kappa_mhz),
            kappa_2: mhz(self.kappa_mhz),
            n_res: N_RES,
            gamma_res: 0.0,
            tau_coh: 100.0,
        }
    }
}
