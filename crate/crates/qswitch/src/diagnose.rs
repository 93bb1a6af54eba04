//! Validity flags and derived quantities for one parameter point; no dynamics.

use qswitch_core::units::to_mhz;
use qswitch_core::{derive_operating_point, loss_diagnostics, passband_diagnostics, DeviceParams, ModelError, Pulse};

use crate::output::{Cell, Table};

pub fn diagnose(p: &DeviceParams, pulse: &Pulse) -> Result<Table, ModelError> {
    p.validate()?;
    let op = derive_operating_point(p)?;
    let band = passband_diagnostics(p, &op);
    let loss = loss_diagnostics(p, pulse.tau_p());
    let pairs: Vec<(&str, Cell)> = vec![
        ("omega_c_mhz", to_mhz(op.omega_c).into()),
        ("omega_ef_mhz", to_mhz(op.omega_ef).into()),
        ("omega_a_mhz", to_mhz(op.omega_a).into()),
        ("chi_mhz", to_mhz(op.chi).into()),
        ("alpha_mhz", to_mhz(op.alpha(p)).into()),
        ("alpha_rel", op.alpha_rel.into()),
        ("g_ge_mhz", to_mhz(op.g_ge).into()),
        ("g_ge_overridden", p.g_ge_overridden().into()),
        ("lambda", op.lambda.into()),
        ("delta_plus_mhz", to_mhz(op.delta_pm[0]).into()),
        ("delta_minus_mhz", to_mhz(op.delta_pm[1]).into()),
        ("band_lower_mhz", to_mhz(band.lower_edge).into()),
        ("band_upper_mhz", to_mhz(band.upper_edge).into()),
        ("pulse_bandwidth_mhz", to_mhz(pulse.bandwidth()).into()),
        ("dispersive_valid", op.dispersive_valid.into()),
        ("rwa_valid", op.rwa_valid.into()),
        ("anharmonicity_in_window", op.anharmonicity_in_window.into()),
        ("qubit_in_gap", band.qubit_in_gap.into()),
        ("dressed_in_band", band.dressed_in_band.into()),
        ("narrowband", pulse.is_narrowband().into()),
        ("loss_probability", loss.loss_probability.into()),
        ("loss_negligible", loss.loss_negligible.into()),
        ("travel_time_us", loss.travel_time.into()),
        ("coherence_sufficient", loss.coherence_sufficient.into()),
    ];
    Ok(Table::key_value(pairs))
}
