//! Parameter sweeps over up to two axes, evaluated in parallel.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use qswitch_core::{ScatteringResult, SimulationOptions, SpectraMode};
use rayon::prelude::*;

use crate::config::{ParamKey, PointSpec};
use crate::output::{Cell, Table};
use crate::run::{run_point, CancelToken};

pub const MAX_GRID_POINTS: usize = 1_000_000;

/// `key: min, max, points`, uniformly spaced and inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub key: ParamKey,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(key: ParamKey, min: f64, max: f64, points: usize) -> Self {
        Self { key, min, max, points }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| if k + 1 == self.points { self.max } else { self.min + k as f64 * h })
            .collect()
    }

    fn validate(&self) -> Result<(), String> {
        let ok = self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.max >= self.min;
        if !ok {
            return Err(format!("{}: range must be positive, finite and increasing", self.key));
        }
        if self.points == 0 {
            return Err(format!("{}: at least one point required", self.key));
        }
        Ok(())
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (key, range) = s.split_once(':').ok_or("expected `key: min, max, points`")?;
        let key: ParamKey = key.trim().parse().map_err(|_| format!("`{}` cannot be swept", key.trim()))?;
        let parts: Vec<&str> = range.split(',').map(str::trim).collect();
        let [min, max, points] = parts[..] else {
            return Err("expected `key: min, max, points`".into());
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let points = points.parse::<usize>().map_err(|_| format!("`{points}` is not a point count"))?;
        let axis = Axis { key, min: num(min)?, max: num(max)?, points };
        axis.validate()?;
        Ok(axis)
    }
}

/// Quantities a sweep can report per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Contrast,
    Upsilon,
    UpsilonG,
    UpsilonE,
    TransmissionG,
    TransmissionE,
    ReflectionG,
    ReflectionE,
    ResidualG,
    ResidualE,
}

impl Output {
    pub const ALL: [Output; 10] = [
        Output::Contrast,
        Output::Upsilon,
        Output::UpsilonG,
        Output::UpsilonE,
        Output::TransmissionG,
        Output::TransmissionE,
        Output::ReflectionG,
        Output::ReflectionE,
        Output::ResidualG,
        Output::ResidualE,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Contrast => "C",
            Output::Upsilon => "upsilon",
            Output::UpsilonG => "upsilon_g",
            Output::UpsilonE => "upsilon_e",
            Output::TransmissionG => "T_g",
            Output::TransmissionE => "T_e",
            Output::ReflectionG => "R_g",
            Output::ReflectionE => "R_e",
            Output::ResidualG => "residual_g",
            Output::ResidualE => "residual_e",
        }
    }

    pub fn value(self, r: &ScatteringResult) -> Option<f64> {
        match self {
            Output::Contrast => Some(r.contrast),
            Output::Upsilon => r.upsilon,
            Output::UpsilonG => r.upsilon_g,
            Output::UpsilonE => r.upsilon_e,
            Output::TransmissionG => Some(r.t_g()),
            Output::TransmissionE => Some(r.t_e()),
            Output::ReflectionG => Some(r.r_g()),
            Output::ReflectionE => Some(r.r_e()),
            Output::ResidualG => Some(r.ground.residual),
            Output::ResidualE => Some(r.excited.residual),
        }
    }

    /// Cheapest spectra mode that provides all of `outputs`. R stays the
    /// time-domain flux value unless full spectra are asked for explicitly.
    pub fn spectra_needed(outputs: &[Output]) -> SpectraMode {
        let upsilon = outputs.iter().any(|o| matches!(o, Output::Upsilon | Output::UpsilonG | Output::UpsilonE));
        if upsilon {
            SpectraMode::Standard
        } else {
            SpectraMode::Off
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Output {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Output::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown output `{s}`"))
    }
}

/// κ_1 = κ_2 = κ search range in units of J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimize {
    pub min_over_j: f64,
    pub max_over_j: f64,
    pub points: usize,
    /// Golden-section stop, in units of J.
    pub tolerance: f64,
}

impl Default for Optimize {
    fn default() -> Self {
        Self { min_over_j: 0.5, max_over_j: 5.0, points: 46, tolerance: 1e-3 }
    }
}

impl FromStr for Optimize {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let axis: Axis = format!("kappa_over_j: {s}").parse()?;
        if axis.points < 2 {
            return Err("optimizer needs at least two grid points".into());
        }
        Ok(Self { min_over_j: axis.min, max_over_j: axis.max, points: axis.points, ..Self::default() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: PointSpec,
    pub axes: Vec<Axis>,
    pub outputs: Vec<Output>,
    pub optimize: Option<Optimize>,
    pub options: SimulationOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.axes.len() > 2 {
            return Err("at most two axes".into());
        }
        if self.axes.len() == 2 && self.axes[0].key == self.axes[1].key {
            return Err("both axes sweep the same parameter".into());
        }
        for a in &self.axes {
            a.validate()?;
        }
        if self.len() > MAX_GRID_POINTS {
            return Err(format!("{} grid points exceed the limit of {MAX_GRID_POINTS}", self.len()));
        }
        if self.outputs.is_empty() {
            return Err("no outputs requested".into());
        }
        if self.optimize.is_some() {
            let kappa_axis = self.axes.iter().any(|a| {
                matches!(
                    a.key,
                    ParamKey::Kappa
                        | ParamKey::Kappa1
                        | ParamKey::Kappa2
                        | ParamKey::KappaOverJ
                        | ParamKey::Kappa1OverJ
                        | ParamKey::Kappa2OverJ
                )
            });
            if kappa_axis {
                return Err("the kappa optimizer cannot be combined with a kappa axis".into());
            }
        }
        Ok(())
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of point `index` in axis-major order (axis 1 outermost).
    pub fn coords(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.values()[rest % a.points];
            rest /= a.points;
        }
        out
    }

    pub fn point_at(&self, index: usize) -> PointSpec {
        let mut p = self.base;
        // Absolute values first so that ratio axes see the swept J.
        let mut pairs: Vec<(ParamKey, f64)> = self.axes.iter().map(|a| a.key).zip(self.coords(index)).collect();
        pairs.sort_by_key(|(k, _)| matches!(k, ParamKey::KappaOverJ | ParamKey::Kappa1OverJ | ParamKey::Kappa2OverJ));
        for (k, v) in pairs {
            p.set(k, v);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    /// Optimal κ/2π [MHz] when the optimizer is on.
    pub kappa_opt_mhz: Option<f64>,
    pub values: Vec<Option<f64>>,
    /// Maximum of the first output along the last axis (per row of a 2-D map).
    pub row_argmax: bool,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<ParamKey>,
    pub outputs: Vec<Output>,
    pub optimized: bool,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn column(&self, o: Output) -> Option<Vec<Option<f64>>> {
        let k = self.outputs.iter().position(|&x| x == o)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// Row with the largest value of `o`.
    pub fn argmax(&self, o: Output) -> Option<&SweepRow> {
        let k = self.outputs.iter().position(|&x| x == o)?;
        self.rows
            .iter()
            .filter_map(|r| r.values[k].map(|v| (v, r)))
            .fold(None, |best: Option<(f64, &SweepRow)>, (v, r)| match best {
                Some((b, _)) if b >= v => best,
                _ => Some((v, r)),
            })
            .map(|(_, r)| r)
    }

    pub fn to_table(&self) -> Table {
        let mut columns: Vec<String> = self.axes.iter().map(|k| k.name().to_string()).collect();
        if self.optimized {
            columns.push("kappa_opt_mhz".into());
        }
        columns.extend(self.outputs.iter().map(|o| o.name().to_string()));
        columns.extend(["row_argmax", "warnings", "error"].map(String::from));
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut cells: Vec<Cell> = r.coords.iter().map(|&v| Cell::Num(v)).collect();
                if self.optimized {
                    cells.push(r.kappa_opt_mhz.into());
                }
                cells.extend(r.values.iter().map(|&v| Cell::from(v)));
                cells.push(Cell::Bool(r.row_argmax));
                cells.push(Cell::Text(r.warnings.join("; ")));
                cells.push(Cell::Text(r.error.clone().unwrap_or_default()));
                cells
            })
            .collect();
        Table::new(columns, rows)
    }
}

/// Contrast as a function of κ/J with κ_1 = κ_2 (cheap settings).
fn contrast_at(
    point: &PointSpec,
    ratio: f64,
    opts: &SimulationOptions,
    cancel: &CancelToken,
) -> Result<f64, String> {
    let p = point.with(ParamKey::KappaOverJ, ratio);
    let dev = p.device().map_err(|e| e.to_string())?;
    let pulse = p.pulse().map_err(|e| e.to_string())?;
    run_point(&dev, &pulse, opts, cancel).map(|r| r.contrast).map_err(|e| e.to_string())
}

/// Maximises C over κ = κ_1 = κ_2: grid scan, then golden-section refinement
/// around the best grid point. Returns (κ/2π [MHz], C).
pub fn optimize_kappa(
    point: &PointSpec,
    range: &Optimize,
    opts: &SimulationOptions,
    cancel: &CancelToken,
) -> Result<(f64, f64), String> {
    let opts = SimulationOptions { spectra: SpectraMode::Off, convergence_guard: false, ..*opts };
    let j = point.j_mhz().ok_or("j_mhz is required for the kappa optimizer")?;
    let grid = Axis::new(ParamKey::KappaOverJ, range.min_over_j, range.max_over_j, range.points).values();
    let mut values = Vec::with_capacity(grid.len());
    for &r in &grid {
        values.push(contrast_at(point, r, &opts, cancel)?);
    }
    let best = (0..grid.len()).fold(0, |b, k| if values[k] > values[b] { k } else { b });
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let (mut x_best, mut c_best) = (grid[best], values[best]);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = contrast_at(point, x1, &opts, cancel)?;
    let mut f2 = contrast_at(point, x2, &opts, cancel)?;
    while b - a > range.tolerance {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = contrast_at(point, x1, &opts, cancel)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = contrast_at(point, x2, &opts, cancel)?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > c_best {
            (x_best, c_best) = (x, f);
        }
    }
    Ok((x_best * j, c_best))
}

fn evaluate(spec: &SweepSpec, index: usize, cancel: &CancelToken) -> SweepRow {
    let mut row = SweepRow {
        coords: spec.coords(index),
        kappa_opt_mhz: None,
        values: vec![None; spec.outputs.len()],
        row_argmax: false,
        warnings: Vec::new(),
        error: None,
    };
    if cancel.is_cancelled() {
        row.error = Some("cancelled".into());
        return row;
    }
    let result = (|| {
        let mut point = spec.point_at(index);
        if let Some(range) = &spec.optimize {
            let (kappa, _) = optimize_kappa(&point, range, &spec.options, cancel)?;
            point.set(ParamKey::Kappa, kappa);
            row.kappa_opt_mhz = Some(kappa);
        }
        let dev = point.device().map_err(|e| e.to_string())?;
        let pulse = point.pulse().map_err(|e| e.to_string())?;
        run_point(&dev, &pulse, &spec.options, cancel).map_err(|e| e.to_string())
    })();
    match result {
        Ok(r) => {
            row.values = spec.outputs.iter().map(|o| o.value(&r)).collect();
            row.warnings = r.warnings.iter().map(ToString::to_string).collect();
        }
        Err(e) => row.error = Some(e),
    }
    row
}

/// Evaluates every grid point. Rows come back in axis-major order whatever
/// the scheduling; failed points carry an error message and the sweep goes on.
pub fn run_sweep(spec: &SweepSpec, cancel: &CancelToken) -> Result<SweepTable, String> {
    spec.validate()?;
    let n = spec.len();
    let done = AtomicUsize::new(0);
    let step = (n / 10).max(1);
    let mut rows: Vec<SweepRow> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = evaluate(spec, i, cancel);
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k.is_multiple_of(step) || k == n {
                log::info!("sweep: {k}/{n} points");
            }
            row
        })
        .collect();

    let inner = spec.axes.last().map_or(1, |a| a.points);
    for chunk in rows.chunks_mut(inner) {
        let best = chunk
            .iter()
            .enumerate()
            .filter_map(|(k, r)| r.values[0].map(|v| (k, v)))
            .fold(None, |b: Option<(usize, f64)>, (k, v)| match b {
                Some((_, bv)) if bv >= v => b,
                _ => Some((k, v)),
            });
        if let Some((k, _)) = best {
            chunk[k].row_argmax = true;
        }
    }

    Ok(SweepTable {
        axes: spec.axes.iter().map(|a| a.key).collect(),
        outputs: spec.outputs.clone(),
        optimized: spec.optimize.is_some(),
        rows,
    })
}
