//! Time-domain transmission against the stationary scattering oracle.

use qswitch_core::dynamics::QubitState;
use qswitch_core::presets::TABLE1;
use qswitch_core::{derive_operating_point, expected_transmission, SimulationOptions};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::config::PointSpec;
use crate::output::{Cell, Table};
use crate::run::{run_point, CancelToken};

pub const ORACLE_TOLERANCE: f64 = 1e-3;
pub const UNITARITY_TOLERANCE: f64 = 2e-3;
pub const PARSEVAL_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub label: String,
    pub qubit: QubitState,
    pub time_domain: f64,
    pub oracle: f64,
    /// T + R + residual (R canonical when spectra are on).
    pub total: f64,
    /// ∫ S_out^trans dω, when full spectra were computed.
    pub parseval: Option<f64>,
}

impl OracleRow {
    pub fn difference(&self) -> f64 {
        (self.time_domain - self.oracle).abs()
    }

    pub fn pass(&self) -> bool {
        self.difference() < ORACLE_TOLERANCE
    }

    pub fn unitarity_pass(&self) -> bool {
        (self.total - 1.0).abs() <= UNITARITY_TOLERANCE
    }

    pub fn parseval_pass(&self) -> bool {
        self.parseval.is_none_or(|t| (t - self.time_domain).abs() <= PARSEVAL_TOLERANCE)
    }
}

#[derive(Debug, Clone)]
pub struct OracleFailure {
    pub label: String,
    pub error: String,
}

/// The three reference rows, labelled `table1/<k>`.
pub fn reference_points() -> Vec<(String, PointSpec)> {
    TABLE1
        .iter()
        .enumerate()
        .map(|(k, r)| (format!("table1/{}", k + 1), PointSpec::new(r.j_mhz, r.kappa_mhz, r.g_ef_mhz, r.tau_p_us)))
        .collect()
}

/// Random points from the validated region: J ∈ [8, 20] MHz,
/// κ_1/J, κ_2/J ∈ [1, 4], g_ef ∈ [25, 50] MHz, τ_p ∈ [0.1, 0.9] µs,
/// N_res ∈ {5, 7, 9}.
pub fn random_points(count: usize, seed: u64) -> Vec<(String, PointSpec)> {
    use crate::config::ParamKey;
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let j = rng.random_range(8.0..=20.0);
            let k1 = rng.random_range(1.0..=4.0);
            let k2 = rng.random_range(1.0..=4.0);
            let g = rng.random_range(25.0..=50.0);
            let tau = rng.random_range(0.1..=0.9);
            let n = [5.0, 7.0, 9.0][rng.random_range(0..3)];
            let p = PointSpec::new(j, 0.0, g, tau)
                .with(ParamKey::Kappa1OverJ, k1)
                .with(ParamKey::Kappa2OverJ, k2)
                .with(ParamKey::NRes, n);
            (format!("random/{}", k + 1), p)
        })
        .collect()
}

/// Runs every point (both branches) and compares with the oracle.
pub fn oracle_check(
    points: &[(String, PointSpec)],
    opts: &SimulationOptions,
) -> (Vec<OracleRow>, Vec<OracleFailure>) {
    let cancel = CancelToken::new();
    let results: Vec<Result<[OracleRow; 2], OracleFailure>> = points
        .par_iter()
        .map(|(label, point)| {
            let fail = |e: String| OracleFailure { label: label.clone(), error: e };
            let p = point.device().map_err(|e| fail(e.to_string()))?;
            let pulse = point.pulse().map_err(|e| fail(e.to_string()))?;
            let op = derive_operating_point(&p).map_err(|e| fail(e.to_string()))?;
            let r = run_point(&p, &pulse, opts, &cancel).map_err(|e| fail(e.to_string()))?;
            let row = |q: QubitState| -> Result<OracleRow, OracleFailure> {
                let b = r.branch(q);
                Ok(OracleRow {
                    label: label.clone(),
                    qubit: q,
                    time_domain: b.transmission,
                    oracle: expected_transmission(&p, &op, q, &pulse).map_err(|e| fail(e.to_string()))?,
                    total: b.total(),
                    parseval: b.transmission_spectral,
                })
            };
            Ok([row(QubitState::Ground)?, row(QubitState::Excited)?])
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(pair) => rows.extend(pair),
            Err(f) => failures.push(f),
        }
    }
    (rows, failures)
}

pub fn to_table(rows: &[OracleRow], failures: &[OracleFailure]) -> Table {
    let columns = [
        "label",
        "qubit",
        "T_time_domain",
        "T_oracle",
        "difference",
        "pass",
        "unitarity",
        "unitarity_pass",
        "T_spectral",
        "parseval_pass",
        "error",
    ]
    .map(String::from)
    .to_vec();
    let mut out: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone().into(),
                r.qubit.label().into(),
                r.time_domain.into(),
                r.oracle.into(),
                r.difference().into(),
                r.pass().into(),
                r.total.into(),
                r.unitarity_pass().into(),
                r.parseval.into(),
                r.parseval_pass().into(),
                Cell::Empty,
            ]
        })
        .collect();
    for f in failures {
        let mut row = vec![Cell::from(f.label.clone())];
        row.extend(std::iter::repeat_n(Cell::Empty, 9));
        row.push(f.error.clone().into());
        out.push(row);
    }
    Table::new(columns, out)
}
