use qswitch_core::observables::{SimulationError, SpectraMode};
use qswitch_core::presets::TABLE1;
use qswitch_core::units::mhz;
use qswitch_core::{
    contrast_and_upsilon, derive_operating_point, expected_transmission, DeviceParams, Pulse,
    QubitState, SimulationOptions, SpectralGrid, C64,
};

fn quick() -> SimulationOptions {
    SimulationOptions { spectra: SpectraMode::Standard, convergence_guard: false, ..Default::default() }
}

#[test]
fn decoupled_qutrit_gives_no_contrast() {
    let mut p = TABLE1[1].params();
    p.g_ef = 0.0;
    let pulse = Pulse::new(p.omega_r, 0.3).unwrap();
    let r = contrast_and_upsilon(&p, &pulse, &quick()).unwrap();
    assert!(r.contrast.abs() < 1e-12, "C = {}", r.contrast);
    assert_eq!(r.t_g(), r.t_e());
}

#[test]
fn nothing_enters_without_waveguide_coupling() {
    let mut p = TABLE1[0].params();
    p.kappa_1 = 0.0;
    p.kappa_2 = 0.0;
    let pulse = Pulse::new(p.omega_r, 0.06).unwrap();
    let r = contrast_and_upsilon(&p, &pulse, &quick()).unwrap();
    let s = r.spectra.as_ref().unwrap();
    for out in [&s.reflected_g, &s.reflected_e] {
        for (a, b) in out.iter().zip(&s.input) {
            assert!((a - b).abs() <= 1e-14 * b);
        }
    }
    assert_eq!(r.t_g(), 0.0);
    assert_eq!(r.t_e(), 0.0);
}

#[test]
fn no_output_coupling_means_no_transmission() {
    let mut p = TABLE1[0].params();
    p.kappa_2 = 0.0;
    let pulse = Pulse::new(p.omega_r, 0.06).unwrap();
    let r = contrast_and_upsilon(&p, &pulse, &quick()).unwrap();
    assert_eq!(r.t_g(), 0.0);
    assert_eq!(r.t_e(), 0.0);
    assert!(r.spectra.unwrap().transmitted_g.iter().all(|v| *v == 0.0));
}

#[test]
fn global_input_phase_does_not_matter() {
    let p = TABLE1[1].params();
    let pulse = Pulse::new(p.omega_r, 0.3).unwrap();
    let a = contrast_and_upsilon(&p, &pulse, &quick()).unwrap();
    let mut opts = quick();
    opts.integration.drive_scale = C64::from_polar(1.0, 1.234);
    let b = contrast_and_upsilon(&p, &pulse, &opts).unwrap();
    assert!((a.contrast - b.contrast).abs() < 1e-10);
    assert!((a.upsilon.unwrap() - b.upsilon.unwrap()).abs() < 1e-8);
}

#[test]
fn unitarity_and_parseval() {
    let row = TABLE1[1];
    let p = row.params();
    let pulse = Pulse::new(p.omega_r, row.tau_p_us).unwrap();
    let r = contrast_and_upsilon(&p, &pulse, &SimulationOptions::default()).unwrap();
    for b in [&r.ground, &r.excited] {
        assert!((b.total() - 1.0).abs() < 2e-3, "{:?}: {}", b.qubit, b.total());
        let spectral = b.transmission_spectral.unwrap();
        assert!((spectral - b.transmission).abs() < 1e-3);
        assert!((b.reflection() - b.reflection_flux).abs() < 1e-3);
        assert!(b.max_flux_residual < 1e-6);
        assert!((0.0..=1.0).contains(&b.transmission));
        assert!((0.0..=1.0).contains(&b.reflection()));
    }
    assert!(r.upsilon.unwrap() >= 0.0);
    assert!(r.warnings.is_empty(), "{:?}", r.warnings);
}

#[test]
fn long_pulse_passes_the_uniform_chain() {
    let p = DeviceParams {
        omega_r: mhz(7000.0),
        omega_ge: mhz(7360.0),
        g_ef: mhz(30.0),
        g_ge: None,
        hopping: mhz(10.0),
        kappa_1: mhz(20.0),
        kappa_2: mhz(20.0),
        n_res: 7,
        gamma_res: 0.0,
        tau_coh: 100.0,
    };
    let pulse = Pulse::new(p.omega_r, 5.0).unwrap();
    let opts = SimulationOptions { spectra: SpectraMode::Off, convergence_guard: false, ..Default::default() };
    let r = contrast_and_upsilon(&p, &pulse, &opts).unwrap();
    assert!(r.t_g() > 0.999, "T_g = {}", r.t_g());
}

#[test]
fn time_and_frequency_domain_agree_on_row_one() {
    let row = TABLE1[0];
    let p = row.params();
    let op = derive_operating_point(&p).unwrap();
    let pulse = Pulse::new(p.omega_r, row.tau_p_us).unwrap();
    let opts = SimulationOptions { spectra: SpectraMode::Off, ..Default::default() };
    let r = contrast_and_upsilon(&p, &pulse, &opts).unwrap();
    for q in QubitState::BOTH {
        let oracle = expected_transmission(&p, &op, q, &pulse).unwrap();
        assert!((r.branch(q).transmission - oracle).abs() < 1e-3);
    }
}

#[test]
fn narrow_grid_is_reported() {
    let row = TABLE1[2];
    let p = row.params();
    let pulse = Pulse::new(p.omega_r, row.tau_p_us).unwrap();
    let opts = SimulationOptions {
        grid: SpectralGrid { halfwidth: 0.3, points: 401 },
        ..quick()
    };
    let err = contrast_and_upsilon(&p, &pulse, &opts).unwrap_err();
    assert!(matches!(err, SimulationError::GridTooNarrow { .. }), "{err}");
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut p = TABLE1[0].params();
    p.n_res = 4;
    let pulse = Pulse::new(p.omega_r, 0.1).unwrap();
    assert!(matches!(contrast_and_upsilon(&p, &pulse, &quick()), Err(SimulationError::Model(_))));
}
