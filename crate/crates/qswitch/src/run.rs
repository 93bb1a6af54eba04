//! Single-point evaluation with both qubit branches run concurrently.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use qswitch_core::dynamics::QubitState;
use qswitch_core::observables::{combine, simulate_branch_with};
use qswitch_core::units::to_mhz;
use qswitch_core::{
    derive_operating_point, DeviceParams, Pulse, ScatteringResult, SimulationError, SimulationOptions, Spectra,
};

use crate::output::{Cell, Table};

/// Shared cancellation flag, polled by in-flight integrations.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

/// Same result as `contrast_and_upsilon`, with the `|g>` and `|e>` branches
/// on separate rayon tasks.
pub fn run_point(
    p: &DeviceParams,
    pulse: &Pulse,
    opts: &SimulationOptions,
    cancel: &CancelToken,
) -> Result<ScatteringResult, SimulationError> {
    p.validate()?;
    let op = derive_operating_point(p)?;
    let poll = || cancel.is_cancelled();
    let (ground, excited) = rayon::join(
        || simulate_branch_with(p, &op, QubitState::Ground, pulse, opts, &poll),
        || simulate_branch_with(p, &op, QubitState::Excited, pulse, opts, &poll),
    );
    Ok(combine(p, &op, pulse, ground?, excited?, opts))
}

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

/// One-row summary of a single-point result.
pub fn result_table(r: &ScatteringResult) -> Table {
    let p = &r.params;
    let warnings: Vec<String> = r.warnings.iter().map(ToString::to_string).collect();
    let pairs: Vec<(&str, Cell)> = vec![
        ("j_mhz", to_mhz(p.hopping).into()),
        ("kappa1_mhz", to_mhz(p.kappa_1).into()),
        ("kappa2_mhz", to_mhz(p.kappa_2).into()),
        ("g_ef_mhz", to_mhz(p.g_ef).into()),
        ("n_res", p.n_res.into()),
        ("tau_p_us", r.pulse.tau_p().into()),
        ("omega0_mhz", to_mhz(r.pulse.omega_0()).into()),
        ("t_inf_us", r.t_inf.into()),
        ("T_g", r.t_g().into()),
        ("T_e", r.t_e().into()),
        ("R_g", r.r_g().into()),
        ("R_e", r.r_e().into()),
        ("residual_g", r.ground.residual.into()),
        ("residual_e", r.excited.residual.into()),
        ("C", r.contrast.into()),
        ("C_extended", r.contrast_extended.into()),
        ("upsilon_g", r.upsilon_g.into()),
        ("upsilon_e", r.upsilon_e.into()),
        ("upsilon", r.upsilon.into()),
        ("T_g_spectral", r.ground.transmission_spectral.into()),
        ("T_e_spectral", r.excited.transmission_spectral.into()),
        ("max_flux_residual", r.ground.max_flux_residual.max(r.excited.max_flux_residual).into()),
        ("warnings", warnings.join("; ").into()),
    ];
    let (columns, row): (Vec<String>, Vec<Cell>) = pairs.into_iter().map(|(k, v)| (k.to_string(), v)).unzip();
    Table::new(columns, vec![row])
}

/// Input and outgoing power spectra on the standard grid (MHz detunings).
pub fn spectra_table(s: &Spectra) -> Table {
    let columns = ["detuning_mhz", "S_in", "S_trans_g", "S_refl_g", "S_trans_e", "S_refl_e"]
        .map(String::from)
        .to_vec();
    let rows = (0..s.detunings.len())
        .map(|k| {
            vec![
                Cell::Num(to_mhz(s.detunings[k])),
                s.input[k].into(),
                s.transmitted_g[k].into(),
                s.reflected_g[k].into(),
                s.transmitted_e[k].into(),
                s.reflected_e[k].into(),
            ]
        })
        .collect();
    Table::new(columns, rows).with_meta("omega0_mhz", to_mhz(s.omega_0).to_string())
}

/// Uniformly resampled amplitudes of both branches (rotating frame).
pub fn trajectory_table(r: &ScatteringResult) -> Option<Table> {
    let tg = r.ground.trajectory.as_ref()?;
    let te = r.excited.trajectory.as_ref()?;
    let dim = tg.dim().max(te.dim());
    let mut columns = vec!["qubit".to_string(), "t_us".to_string()];
    for i in 0..dim {
        columns.push(format!("re_{i}"));
        columns.push(format!("im_{i}"));
    }
    let mut rows = Vec::new();
    for (q, t) in [(QubitState::Ground, tg), (QubitState::Excited, te)] {
        for k in 0..t.len() {
            let mut row = vec![Cell::from(q.label()), Cell::Num(t.times()[k])];
            for z in t.sample(k) {
                row.push(z.re.into());
                row.push(z.im.into());
            }
            row.resize(columns.len(), Cell::Empty);
            rows.push(row);
        }
    }
    Some(Table::new(columns, rows).with_meta("frame_mhz", to_mhz(tg.frame()).to_string()))
}
