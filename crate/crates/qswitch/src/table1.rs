//! End-to-end reproduction of the reference parameter table.

use qswitch_core::presets::{TableRow, CONTRAST_TOLERANCE, TABLE1, UPSILON_TOLERANCE};
use qswitch_core::units::to_mhz;
use qswitch_core::{derive_operating_point, ScatteringResult, SimulationOptions};
use rayon::prelude::*;

use crate::output::{Cell, Table};
use crate::run::{run_point, CancelToken};

#[derive(Debug, Clone)]
pub struct Table1Entry {
    pub reference: TableRow,
    /// ω_c/2π [GHz].
    pub omega_c_ghz: f64,
    /// ω_ef/2π [GHz].
    pub omega_ef_ghz: f64,
    /// (ω_ef − ω_ge)/2π [MHz].
    pub alpha_mhz: f64,
    pub result: Result<ScatteringResult, String>,
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

impl Table1Entry {
    /// ω_c agrees with the table at its 1 MHz rounding.
    pub fn omega_c_pass(&self) -> bool {
        round_to(self.omega_c_ghz, 3) == self.reference.omega_c_ghz
    }

    pub fn omega_ef_pass(&self) -> bool {
        round_to(self.omega_ef_ghz, 3) == self.reference.omega_ef_ghz
    }

    /// α agrees at its 0.01 MHz rounding.
    pub fn alpha_pass(&self) -> bool {
        round_to(self.alpha_mhz, 2) == self.reference.alpha_mhz
    }

    pub fn contrast(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.contrast)
    }

    pub fn upsilon(&self) -> Option<f64> {
        self.result.as_ref().ok().and_then(|r| r.upsilon)
    }

    pub fn contrast_pass(&self) -> bool {
        self.contrast().is_some_and(|c| (c - self.reference.contrast).abs() <= CONTRAST_TOLERANCE)
    }

    pub fn upsilon_pass(&self) -> bool {
        self.upsilon().is_some_and(|u| (u - self.reference.upsilon).abs() <= UPSILON_TOLERANCE)
    }

    pub fn pass(&self) -> bool {
        self.omega_c_pass() && self.omega_ef_pass() && self.alpha_pass() && self.contrast_pass() && self.upsilon_pass()
    }
}

#[derive(Debug, Clone)]
pub struct Table1Report {
    pub entries: Vec<Table1Entry>,
}

impl Table1Report {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(Table1Entry::pass)
    }

    pub fn to_table(&self) -> Table {
        let columns = [
            "row",
            "omega_c_ghz",
            "omega_c_ref",
            "omega_c_pass",
            "omega_ef_ghz",
            "omega_ef_ref",
            "omega_ef_pass",
            "alpha_mhz",
            "alpha_ref",
            "alpha_pass",
            "C",
            "C_ref",
            "C_pass",
            "upsilon",
            "upsilon_ref",
            "upsilon_pass",
            "pass",
            "error",
        ]
        .map(String::from)
        .to_vec();
        let rows = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                vec![
                    Cell::from(k + 1),
                    e.omega_c_ghz.into(),
                    e.reference.omega_c_ghz.into(),
                    e.omega_c_pass().into(),
                    e.omega_ef_ghz.into(),
                    e.reference.omega_ef_ghz.into(),
                    e.omega_ef_pass().into(),
                    e.alpha_mhz.into(),
                    e.reference.alpha_mhz.into(),
                    e.alpha_pass().into(),
                    e.contrast().into(),
                    e.reference.contrast.into(),
                    e.contrast_pass().into(),
                    e.upsilon().into(),
                    e.reference.upsilon.into(),
                    e.upsilon_pass().into(),
                    e.pass().into(),
                    e.result.as_ref().err().cloned().unwrap_or_default().into(),
                ]
            })
            .collect();
        Table::new(columns, rows)
    }
}

/// Runs the three reference rows with `opts` (spectra are needed for Υ).
pub fn reproduce_table1(opts: &SimulationOptions) -> Table1Report {
    let cancel = CancelToken::new();
    let entries = TABLE1
        .par_iter()
        .map(|row| {
            let p = row.params();
            let op = derive_operating_point(&p).expect("reference rows are valid");
            let result = qswitch_core::observables::default_pulse(&p, row.tau_p_us)
                .map_err(|e| e.to_string())
                .and_then(|pulse| run_point(&p, &pulse, opts, &cancel).map_err(|e| e.to_string()));
            Table1Entry {
                reference: *row,
                omega_c_ghz: to_mhz(op.omega_c) / 1e3,
                omega_ef_ghz: to_mhz(op.omega_ef) / 1e3,
                alpha_mhz: to_mhz(op.alpha(&p)),
                result,
            }
        })
        .collect();
    Table1Report { entries }
}
