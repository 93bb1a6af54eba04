use qswitch_core::dynamics::integrate_with;
use qswitch_core::observables::transmission_curve;
use qswitch_core::presets::TABLE1;
use qswitch_core::units::mhz;
use qswitch_core::{
    assemble_generator, derive_operating_point, integrate, IntegrationOptions, Pulse, QubitState,
    Trajectory, C64,
};

fn row3_trajectory(q: QubitState, opts: &IntegrationOptions) -> Trajectory {
    let row = TABLE1[2];
    let p = row.params();
    let op = derive_operating_point(&p).unwrap();
    let gen = assemble_generator(&p, &op, q).unwrap();
    let pulse = Pulse::new(p.omega_r, row.tau_p_us).unwrap();
    integrate(&gen, &pulse, 10.0 * row.tau_p_us, opts).unwrap()
}

#[test]
fn photon_has_left_after_ten_pulse_durations() {
    let traj = row3_trajectory(QubitState::Ground, &IntegrationOptions::default());
    let last = traj.sample(traj.len() - 1);
    let stored: f64 = last[..last.len() - 1].iter().map(|a| a.norm_sqr()).sum();
    assert!(stored < 1e-3, "stored {stored}");
}

#[test]
fn flux_balance_at_every_step() {
    for q in QubitState::BOTH {
        let traj = row3_trajectory(q, &IntegrationOptions::default());
        assert!(traj.steps().len() > 100);
        for rec in traj.steps() {
            assert!(rec.flux_residual().abs() < 1e-6, "t = {}: {}", rec.t, rec.flux_residual());
        }
        let last = traj.final_record();
        let expected = -(-10.0f64).exp_m1();
        assert!((last.injected - expected).abs() < 1e-15);
    }
}

#[test]
fn norm_never_exceeds_injected_probability() {
    for q in QubitState::BOTH {
        let traj = row3_trajectory(q, &IntegrationOptions::default());
        assert!(traj.max_norm() <= 1.0 + 1e-9);
    }
}

#[test]
fn transmission_curve_is_monotone() {
    let traj = row3_trajectory(QubitState::Ground, &IntegrationOptions::default());
    let curve = transmission_curve(&traj, traj.kappa_2());
    assert!(curve.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].0 > w[0].0));
    assert!(curve.last().unwrap().1 > 0.99);
}

#[test]
fn amplitudes_scale_linearly_with_the_drive() {
    let c = C64::new(0.3, -0.7);
    let base = IntegrationOptions::default();
    let scaled = IntegrationOptions { drive_scale: c, ..base };
    for q in QubitState::BOTH {
        let a = row3_trajectory(q, &base);
        let b = row3_trajectory(q, &scaled);
        let peak = a.max_norm().sqrt();
        for k in 0..a.len() {
            for (x, y) in a.sample(k).iter().zip(b.sample(k)) {
                assert!((x * c - y).norm() <= 1e-12 * peak * c.norm(), "sample {k}");
            }
        }
        let (ra, rb) = (a.final_record(), b.final_record());
        assert!((ra.transmitted * c.norm_sqr() - rb.transmitted).abs() < 1e-12);
    }
}

#[test]
fn moduli_do_not_depend_on_the_rotating_frame() {
    let row = TABLE1[1];
    let p = row.params();
    let op = derive_operating_point(&p).unwrap();
    let pulse = Pulse::new(p.omega_r + mhz(3.0), row.tau_p_us).unwrap();
    let opts = IntegrationOptions::default();
    for q in QubitState::BOTH {
        let gen = assemble_generator(&p, &op, q).unwrap();
        let moved = gen.in_frame(pulse.omega_0());
        let a = integrate(&gen, &pulse, 10.0 * row.tau_p_us, &opts).unwrap();
        let b = integrate(&moved, &pulse, 10.0 * row.tau_p_us, &opts).unwrap();
        for k in 0..a.len() {
            for (x, y) in a.sample(k).iter().zip(b.sample(k)) {
                assert!((x.norm() - y.norm()).abs() < 1e-9, "sample {k}");
            }
        }
    }
}

#[test]
fn ground_branch_ignores_the_qutrit() {
    let row = TABLE1[2];
    let mut p = row.params();
    let pulse = Pulse::new(p.omega_r, row.tau_p_us).unwrap();
    let run = |p: &qswitch_core::DeviceParams| {
        let op = derive_operating_point(p).unwrap();
        let gen = assemble_generator(p, &op, QubitState::Ground).unwrap();
        integrate(&gen, &pulse, 10.0 * row.tau_p_us, &IntegrationOptions::default()).unwrap()
    };
    let a = run(&p);
    p.g_ef *= 2.0;
    let b = run(&p);
    for k in 0..a.len() {
        for (x, y) in a.sample(k).iter().zip(b.sample(k)) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn zero_input_coupling_gives_empty_trajectory() {
    let mut p = TABLE1[0].params();
    p.kappa_1 = 0.0;
    let op = derive_operating_point(&p).unwrap();
    let pulse = Pulse::new(p.omega_r, 0.06).unwrap();
    for q in QubitState::BOTH {
        let gen = assemble_generator(&p, &op, q).unwrap();
        let traj = integrate(&gen, &pulse, 0.6, &IntegrationOptions::default()).unwrap();
        assert!((0..traj.len()).all(|k| traj.sample(k).iter().all(|a| a.norm() == 0.0)));
    }
}

#[test]
fn continuation_keeps_accumulating() {
    let row = TABLE1[0];
    let p = row.params();
    let op = derive_operating_point(&p).unwrap();
    let gen = assemble_generator(&p, &op, QubitState::Ground).unwrap();
    let pulse = Pulse::new(p.omega_r, row.tau_p_us).unwrap();
    let t_inf = 10.0 * row.tau_p_us;
    let opts = IntegrationOptions::default();
    let traj = integrate_with(&gen, &pulse, t_inf, Some(2.0 * t_inf), &opts, &|| false).unwrap();
    let ext = traj.extension().unwrap();
    assert_eq!(ext.t, 2.0 * t_inf);
    assert!(ext.transmitted >= traj.final_record().transmitted);
    assert!(ext.flux_residual().abs() < 1e-6);
    assert_eq!(traj.t_end(), t_inf);
}
