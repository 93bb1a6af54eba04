//! Unit conventions.
//!
//! Frequencies are angular frequencies in rad/µs and times are in µs, so a
//! frequency f/2π = 1 MHz is stored as 2π rad/µs.

use core::f64::consts::PI;

pub const TWO_PI: f64 = 2.0 * PI;

/// Converts a frequency/2π in MHz to an angular frequency in rad/µs.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f
}

/// Converts an angular frequency in rad/µs to frequency/2π in MHz.
#[inline]
pub fn to_mhz(omega: f64) -> f64 {
    omega / TWO_PI
}

/// Converts a frequency/2π in GHz to rad/µs.
#[inline]
pub fn ghz(f: f64) -> f64 {
    mhz(1e3 * f)
}
