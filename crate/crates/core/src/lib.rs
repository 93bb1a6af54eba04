//! Simulation core for a single-photon switch built from a coupled-resonator
//! array (CRA) whose central resonator is coupled to a qutrit.
//!
//! The control qubit (the `|g>`, `|e>` pair of the qutrit) decides whether an
//! incoming single-photon wave packet is transmitted through the array or
//! reflected by the dressed Jaynes-Cummings pair formed with the `|e>`-`|f>`
//! transition. The crate covers:
//!
//! - [`model`]: device parameters, the tuned operating point and validity checks,
//! - [`pulse`]: the Lorentzian input wave packet,
//! - [`dynamics`]: the single-excitation generator and an adaptive Dormand-Prince
//!   integrator in the frame rotating at the resonator frequency,
//! - [`observables`]: transmission, reflection, switching contrast and spectral
//!   distortion,
//! - [`oracle`]: independent frequency-domain scattering used for validation.
//!
//! Units: angular frequencies in rad/µs, times in µs. [`units::mhz`] converts a
//! frequency/2π given in MHz.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod presets;
pub mod pulse;
pub mod quad;
pub mod units;

pub use num_complex::Complex64 as C64;

pub use dynamics::{
    assemble_generator, integrate, DynamicsError, Generator, IntegrationOptions, QubitState,
    StepRecord, Trajectory,
};
pub use model::{
    derive_operating_point, loss_diagnostics, passband_diagnostics, BandReport, DeviceParams,
    LossReport, ModelError, OperatingPoint,
};
pub use observables::{
    contrast_and_upsilon, BranchOutcome, ScatteringResult, SimulationError, SimulationOptions,
    Spectra, SpectraMode, Warning,
};
pub use oracle::{expected_transmission, single_cell_transmission, stationary_transmission, OracleError};
pub use pulse::{Pulse, PulseError, SpectralGrid};
