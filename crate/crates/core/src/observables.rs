//! Transmission, reflection, switching contrast and spectral distortion.
//!
//! Both qubit branches are integrated to t∞ = 10τ_p. Transmission is the
//! time-domain output flux `κ_2 ∫|A_N|²`. The outgoing spectra are Fourier
//! transforms of the terminal amplitudes:
//!
//! ```text
//! B_2(ω) = −i sqrt(κ_2/2π) ∫ e^{iδτ} Ã_N(τ) dτ
//! B_1(ω) = i c ξ(ω) − i sqrt(κ_1/2π) ∫ e^{iδτ} Ã_{−N}(τ) dτ
//! ```
//!
//! with δ = ω − ω_frame and `c` the complex drive scale. The `i` in front of
//! ξ is the transform of the drive actually applied; it fixes the phase of the
//! interference between the directly reflected input and the re-emission.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::ops::Range;

#[allow(unused_imports)] // unused only when std leaks in through dev-dependencies
use num_traits::Float;
use thiserror::Error;

use crate::dynamics::{
    assemble_generator, integrate_with, DynamicsError, Generator, IntegrationOptions, QubitState,
    Trajectory,
};
use crate::model::{derive_operating_point, DeviceParams, ModelError, OperatingPoint};
use crate::pulse::{Pulse, PulseError, SpectralGrid};
use crate::quad::trapezoid;
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Largest phase advance per sample, (|δ| + ρ)·Δt, in the Fourier sums.
const PHASE_PER_SAMPLE: f64 = 0.2;
/// Re-evaluate the phasor exactly every this many samples.
const PHASOR_RESYNC: usize = 512;
/// Outer-grid spacing in units of the narrowest spectral feature.
const WIDE_GRID_RESOLUTION: f64 = 64.0;
const MAX_WIDE_POINTS: usize = 200_000;
/// Fraction of the outgoing weight allowed in the outer tenth of the grid.
const GRID_EDGE_WEIGHT_MAX: f64 = 0.05;

/// Which outgoing spectra to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectraMode {
    /// None: R falls back to the time-domain output flux, Υ is not available.
    Off,
    /// Spectra on the standard grid: Υ and the grid-width check.
    Standard,
    /// Additionally integrate |B_1|², |B_2|² on a grid wide enough to hold the
    /// whole response: spectral (canonical) R and the Parseval check on T.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    /// t∞ in units of τ_p.
    pub t_inf_factor: f64,
    pub grid: SpectralGrid,
    pub integration: IntegrationOptions,
    pub spectra: SpectraMode,
    /// Continue to 2t∞ and compare the contrast.
    pub convergence_guard: bool,
    pub guard_tolerance: f64,
    pub keep_trajectories: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            t_inf_factor: 10.0,
            grid: SpectralGrid::default(),
            integration: IntegrationOptions::default(),
            spectra: SpectraMode::Full,
            convergence_guard: true,
            guard_tolerance: 1e-4,
            keep_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("t_inf factor must be finite and positive, got {0}")]
    Horizon(f64),
    #[error(
        "spectral grid too narrow: {fraction:.3} of the q={q} output spectrum lies in the outer 10%",
        q = .qubit.label()
    )]
    GridTooNarrow { qubit: QubitState, fraction: f64 },
}

/// Non-fatal conditions attached to a result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// Doubling t∞ moved the contrast by `shift`.
    NotConverged { shift: f64 },
    /// γ_0/ω_0 is not small; f_1(ω_0) ≈ f_1(ω_r) is questionable.
    Broadband,
    /// |λ| above the dispersive cut.
    NotDispersive { lambda: f64 },
    /// Rates not small compared with the resonator frequencies.
    RwaViolated,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NotConverged { shift } => {
                write!(f, "contrast changed by {shift:.2e} when doubling t_inf")
            }
            Warning::Broadband => write!(f, "pulse is not narrowband"),
            Warning::NotDispersive { lambda } => write!(f, "|lambda| = {:.3} outside dispersive regime", lambda.abs()),
            Warning::RwaViolated => write!(f, "rotating-wave approximation questionable"),
        }
    }
}

/// Outgoing power spectra of one branch on the standard grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpectra {
    pub transmitted: Vec<f64>,
    pub reflected: Vec<f64>,
}

/// Everything computed for one qubit state.
#[derive(Debug, Clone)]
pub struct BranchOutcome {
    pub qubit: QubitState,
    /// T_q(t∞) = κ_2 ∫|A_N|².
    pub transmission: f64,
    /// Reflected probability from the time-domain output flux (includes the
    /// input/re-emission interference).
    pub reflection_flux: f64,
    /// κ_1 ∫|A_{−N}|², which ignores the interference; for reference only.
    pub reflection_naive: f64,
    /// ∫|B_1|² over the whole line.
    pub reflection_spectral: Option<f64>,
    /// ∫|B_2|² over the wide grid (Parseval partner of `transmission`).
    pub transmission_spectral: Option<f64>,
    /// Probability left in the array and qutrit at t∞.
    pub residual: f64,
    /// T_q(2t∞) when the convergence guard ran.
    pub transmission_extended: Option<f64>,
    pub max_flux_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Distortion of the canonical output (transmitted for g, reflected for e).
    pub upsilon: Option<f64>,
    pub spectra: Option<BranchSpectra>,
    pub trajectory: Option<Trajectory>,
}

impl BranchOutcome {
    /// Canonical reflection: spectral when available.
    pub fn reflection(&self) -> f64 {
        self.reflection_spectral.unwrap_or(self.reflection_flux)
    }

    /// T + R + residual.
    pub fn total(&self) -> f64 {
        self.transmission + self.reflection() + self.residual
    }
}

/// Input and output spectra of both branches on the standard grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectra {
    pub omega_0: f64,
    /// Grid nodes as detunings from ω_0.
    pub detunings: Vec<f64>,
    pub input: Vec<f64>,
    pub transmitted_g: Vec<f64>,
    pub reflected_g: Vec<f64>,
    pub transmitted_e: Vec<f64>,
    pub reflected_e: Vec<f64>,
}

impl Spectra {
    /// Output spectrum that enters Υ_q.
    pub fn output(&self, q: QubitState) -> &[f64] {
        match q {
            QubitState::Ground => &self.transmitted_g,
            QubitState::Excited => &self.reflected_e,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub params: DeviceParams,
    pub pulse: Pulse,
    pub operating_point: OperatingPoint,
    pub t_inf: f64,
    pub ground: BranchOutcome,
    pub excited: BranchOutcome,
    /// C = T_g − T_e.
    pub contrast: f64,
    /// C evaluated at 2t∞.
    pub contrast_extended: Option<f64>,
    pub upsilon_g: Option<f64>,
    pub upsilon_e: Option<f64>,
    pub upsilon: Option<f64>,
    pub spectra: Option<Spectra>,
    pub warnings: Vec<Warning>,
}

impl ScatteringResult {
    pub fn t_g(&self) -> f64 {
        self.ground.transmission
    }

    pub fn t_e(&self) -> f64 {
        self.excited.transmission
    }

    pub fn r_g(&self) -> f64 {
        self.ground.reflection()
    }

    pub fn r_e(&self) -> f64 {
        self.excited.reflection()
    }

    pub fn branch(&self, q: QubitState) -> &BranchOutcome {
        match q {
            QubitState::Ground => &self.ground,
            QubitState::Excited => &self.excited,
        }
    }
}

/// T_q(t) = κ_2 ∫_0^t |A_N|² at the end of every adaptive step, starting at (0, 0).
pub fn transmission_curve(traj: &Trajectory, kappa_2: f64) -> Vec<(f64, f64)> {
    let mut curve = Vec::with_capacity(traj.steps().len() + 1);
    curve.push((0.0, 0.0));
    curve.extend(traj.steps().iter().map(|r| (r.t, kappa_2 * r.output_power)));
    curve
}

/// Frequency nodes (detunings from ω_0) and the sample count the Fourier
/// sums need. The standard grid is the slice `core` of `nodes`.
struct SpectralPlan {
    nodes: Vec<f64>,
    core: Range<usize>,
    wide: bool,
    samples: usize,
}

impl SpectralPlan {
    fn new(gen: &Generator, pulse: &Pulse, t_inf: f64, opts: &SimulationOptions) -> Self {
        let display = opts.integration.samples;
        if opts.spectra == SpectraMode::Off {
            return Self { nodes: Vec::new(), core: 0..0, wide: false, samples: display };
        }
        let standard = opts.grid.detunings(pulse);
        let span = opts.grid.span(pulse);
        let carrier = pulse.omega_0() - gen.frame();
        let wide = opts.spectra == SpectraMode::Full;
        let (nodes, core) = if wide {
            wide_grid(gen, carrier, standard, span)
        } else {
            let n = standard.len();
            (standard, 0..n)
        };
        let reach = nodes.last().copied().unwrap_or(span).max(span);
        let rate = reach + carrier.abs() + gen.spectral_radius_bound();
        let needed = (t_inf * rate / PHASE_PER_SAMPLE).ceil() as usize + 1;
        Self { nodes, core, wide, samples: needed.max(display) }
    }
}

/// Standard grid extended by uniform outer segments that cover the passband,
/// the qutrit and a few linewidths of terminal broadening. Returns the nodes
/// and the index range of the standard grid inside them.
fn wide_grid(
    gen: &Generator,
    carrier: f64,
    standard: Vec<f64>,
    span: f64,
) -> (Vec<f64>, Range<usize>) {
    let shift = gen.diagonal().iter().map(|d| d.re.abs()).fold(0.0, f64::max);
    let reach = 2.0 * gen.hopping()
        + gen.qutrit_coupling()
        + 2.0 * shift
        + 3.0 * (gen.kappa_1() + gen.kappa_2())
        + carrier.abs();
    let n = standard.len();
    if reach <= span {
        return (standard, 0..n);
    }
    let feature = [gen.hopping(), gen.kappa_1() + gen.kappa_2(), gen.qutrit_coupling()]
        .into_iter()
        .filter(|v| *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let core_step = standard.get(1).map(|v| v - standard[0]).unwrap_or(span);
    let h = if feature.is_finite() { feature / WIDE_GRID_RESOLUTION } else { core_step };
    let count = (((reach - span) / h).ceil() as usize).clamp(1, MAX_WIDE_POINTS / 2);
    let step = (reach - span) / count as f64;
    let outer: Vec<f64> = (1..=count).map(|k| span + k as f64 * step).collect();
    let mut all: Vec<f64> = outer.iter().rev().map(|v| -v).collect();
    all.extend(standard);
    all.extend(outer);
    (all, count..count + n)
}

fn trapezoid_nodes(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
}

/// ∫_0^T e^{iδτ} f(τ) dτ for two uniformly sampled components at once:
/// trapezoid sum plus the first Euler-Maclaurin end correction.
fn fourier_pair(
    a: &[C64],
    b: &[C64],
    h: f64,
    ends_a: (C64, C64),
    ends_b: (C64, C64),
    deltas: &[f64],
) -> (Vec<C64>, Vec<C64>) {
    const BLOCK: usize = 4;
    let n = a.len();
    let t_end = h * (n - 1) as f64;
    let zero = C64::new(0.0, 0.0);
    let mut out_a = Vec::with_capacity(deltas.len());
    let mut out_b = Vec::with_capacity(deltas.len());
    for chunk in deltas.chunks(BLOCK) {
        // Independent phasor chains for several frequencies keep the FPU busy.
        let mut d = [0.0; BLOCK];
        d[..chunk.len()].copy_from_slice(chunk);
        let z = d.map(|d| C64::from_polar(1.0, d * h));
        let mut phasor = [zero; BLOCK];
        let mut sa = [zero; BLOCK];
        let mut sb = [zero; BLOCK];
        for k in 0..n {
            if k % PHASOR_RESYNC == 0 {
                for j in 0..BLOCK {
                    phasor[j] = C64::from_polar(1.0, d[j] * h * k as f64);
                }
            }
            let (ak, bk) = (a[k], b[k]);
            for j in 0..BLOCK {
                sa[j] += phasor[j] * ak;
                sb[j] += phasor[j] * bk;
                phasor[j] *= z[j];
            }
        }
        for j in 0..chunk.len() {
            let p_end = C64::from_polar(1.0, d[j] * t_end);
            let id = I * d[j];
            let corr = |f0: C64, f1: C64, (d0, d1): (C64, C64)| {
                h * h / 12.0 * (p_end * (id * f1 + d1) - (id * f0 + d0))
            };
            let ta = sa[j] - 0.5 * (a[0] + p_end * a[n - 1]);
            let tb = sb[j] - 0.5 * (b[0] + p_end * b[n - 1]);
            out_a.push(ta * h - corr(a[0], a[n - 1], ends_a));
            out_b.push(tb * h - corr(b[0], b[n - 1], ends_b));
        }
    }
    (out_a, out_b)
}

/// Outgoing amplitudes (B_1, B_2) at the given detunings from ω_0.
fn outgoing_amplitudes(traj: &Trajectory, detunings: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let pulse = traj.pulse();
    let carrier = pulse.omega_0() - traj.frame();
    let deltas: Vec<f64> = detunings.iter().map(|u| carrier + u).collect();
    let (i_in, i_out) = (traj.drive_index(), traj.output_index());
    let a_in = traj.component(i_in);
    let a_out = traj.component(i_out);
    let (d0, d1) = traj.endpoint_derivatives();
    let (f_in, f_out) =
        fourier_pair(&a_in, &a_out, traj.spacing(), (d0[i_in], d1[i_in]), (d0[i_out], d1[i_out]), &deltas);
    let c1 = (traj.kappa_1() / (2.0 * PI)).sqrt();
    let c2 = (traj.kappa_2() / (2.0 * PI)).sqrt();
    let scale = traj.drive_scale();
    let reflected = detunings
        .iter()
        .zip(&f_in)
        .map(|(&u, f)| scale * I * pulse.spectrum_at_detuning(u) - I * c1 * f)
        .collect();
    let transmitted = f_out.iter().map(|f| -I * c2 * f).collect();
    (reflected, transmitted)
}

/// Power spectra |B_1|², |B_2|² of one trajectory on the standard grid.
pub fn outgoing_spectra(traj: &Trajectory, grid: &SpectralGrid) -> BranchSpectra {
    let dets = grid.detunings(traj.pulse());
    let (b1, b2) = outgoing_amplitudes(traj, &dets);
    BranchSpectra {
        reflected: b1.iter().map(|v| v.norm_sqr()).collect(),
        transmitted: b2.iter().map(|v| v.norm_sqr()).collect(),
    }
}

/// Υ = 1 − ∫S_out S_in / ∫S_in² on a uniform grid.
pub fn distortion(input: &[f64], output: &[f64], spacing: f64) -> f64 {
    let overlap: Vec<f64> = input.iter().zip(output).map(|(a, b)| a * b).collect();
    let norm: Vec<f64> = input.iter().map(|a| a * a).collect();
    1.0 - trapezoid(&overlap, spacing) / trapezoid(&norm, spacing)
}

/// Weight of `spectrum` in the outer tenth of the grid (5% per side), as a
/// fraction of `total`.
fn edge_fraction(spectrum: &[f64], total: f64) -> f64 {
    let n = spectrum.len();
    let cut = n / 20;
    if total <= 0.0 {
        return 0.0;
    }
    let edge: f64 = spectrum[..cut].iter().sum::<f64>() + spectrum[n - cut..].iter().sum::<f64>();
    edge / total
}

fn input_spectrum(pulse: &Pulse, scale: C64, detunings: &[f64]) -> Vec<f64> {
    let s = scale.norm_sqr();
    detunings.iter().map(|&u| s * pulse.power_at_detuning(u)).collect()
}

/// Integrates one qubit branch to t∞ and evaluates its observables.
pub fn simulate_branch(
    p: &DeviceParams,
    op: &OperatingPoint,
    q: QubitState,
    pulse: &Pulse,
    opts: &SimulationOptions,
) -> Result<BranchOutcome, SimulationError> {
    simulate_branch_with(p, op, q, pulse, opts, &|| false)
}

/// [`simulate_branch`] with a cancellation poll.
pub fn simulate_branch_with(
    p: &DeviceParams,
    op: &OperatingPoint,
    q: QubitState,
    pulse: &Pulse,
    opts: &SimulationOptions,
    cancel: &dyn Fn() -> bool,
) -> Result<BranchOutcome, SimulationError> {
    p.validate()?;
    opts.grid.validate()?;
    if !(opts.t_inf_factor.is_finite() && opts.t_inf_factor > 0.0) {
        return Err(SimulationError::Horizon(opts.t_inf_factor));
    }
    let gen = assemble_generator(p, op, q)?;
    let t_inf = opts.t_inf_factor * pulse.tau_p();
    let plan = SpectralPlan::new(&gen, pulse, t_inf, opts);
    let integ = IntegrationOptions { samples: plan.samples, ..opts.integration };
    let extend = opts.convergence_guard.then_some(2.0 * t_inf);
    let traj = integrate_with(&gen, pulse, t_inf, extend, &integ, cancel)?;

    let rec = traj.final_record();
    let mut outcome = BranchOutcome {
        qubit: q,
        transmission: rec.transmitted,
        reflection_flux: rec.reflected,
        reflection_naive: p.kappa_1 * rec.input_power,
        reflection_spectral: None,
        transmission_spectral: None,
        residual: rec.stored,
        transmission_extended: traj.extension().map(|r| r.transmitted),
        max_flux_residual: traj.max_flux_residual(),
        accepted_steps: traj.steps().len(),
        rejected_steps: traj.rejected_steps(),
        upsilon: None,
        spectra: None,
        trajectory: None,
    };

    if opts.spectra != SpectraMode::Off {
        let (b1, b2) = outgoing_amplitudes(&traj, &plan.nodes);
        let r: Vec<f64> = b1.iter().map(|v| v.norm_sqr()).collect();
        let t: Vec<f64> = b2.iter().map(|v| v.norm_sqr()).collect();
        let spectra = BranchSpectra {
            reflected: r[plan.core.clone()].to_vec(),
            transmitted: t[plan.core.clone()].to_vec(),
        };
        let canonical = match q {
            QubitState::Ground => &spectra.transmitted,
            QubitState::Excited => &spectra.reflected,
        };
        // Relative to the whole outgoing photon, so a nearly empty channel
        // cannot trip the check.
        let outgoing: f64 = spectra.reflected.iter().chain(&spectra.transmitted).sum();
        let fraction = edge_fraction(canonical, outgoing);
        if fraction > GRID_EDGE_WEIGHT_MAX {
            return Err(SimulationError::GridTooNarrow { qubit: q, fraction });
        }
        let standard = &plan.nodes[plan.core.clone()];
        let input = input_spectrum(pulse, opts.integration.drive_scale, standard);
        outcome.upsilon = Some(distortion(&input, canonical, opts.grid.spacing(pulse)));
        outcome.spectra = Some(spectra);

        if plan.wide {
            let reach = plan.nodes.last().copied().unwrap_or(0.0);
            // Beyond the grid nothing enters the array: |B_1|² = |c|²|ξ|².
            let tail = opts.integration.drive_scale.norm_sqr() * pulse.tail_weight(reach);
            outcome.reflection_spectral = Some(trapezoid_nodes(&plan.nodes, &r) + tail);
            outcome.transmission_spectral = Some(trapezoid_nodes(&plan.nodes, &t));
        }
    }

    if opts.keep_trajectories {
        outcome.trajectory = Some(traj);
    }
    Ok(outcome)
}

/// Assembles the result record from the two branches.
pub fn combine(
    p: &DeviceParams,
    op: &OperatingPoint,
    pulse: &Pulse,
    ground: BranchOutcome,
    excited: BranchOutcome,
    opts: &SimulationOptions,
) -> ScatteringResult {
    let contrast = ground.transmission - excited.transmission;
    let contrast_extended = match (ground.transmission_extended, excited.transmission_extended) {
        (Some(g), Some(e)) => Some(g - e),
        _ => None,
    };
    let mut warnings = Vec::new();
    if let Some(c2) = contrast_extended {
        let shift = (c2 - contrast).abs();
        if shift >= opts.guard_tolerance {
            warnings.push(Warning::NotConverged { shift });
        }
    }
    if !pulse.is_narrowband() {
        warnings.push(Warning::Broadband);
    }
    if !op.dispersive_valid {
        warnings.push(Warning::NotDispersive { lambda: op.lambda });
    }
    if !op.rwa_valid {
        warnings.push(Warning::RwaViolated);
    }

    let upsilon_g = ground.upsilon;
    let upsilon_e = excited.upsilon;
    let upsilon = match (upsilon_g, upsilon_e) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    let spectra = match (&ground.spectra, &excited.spectra) {
        (Some(g), Some(e)) => {
            let detunings = opts.grid.detunings(pulse);
            Some(Spectra {
                omega_0: pulse.omega_0(),
                input: input_spectrum(pulse, opts.integration.drive_scale, &detunings),
                detunings,
                transmitted_g: g.transmitted.clone(),
                reflected_g: g.reflected.clone(),
                transmitted_e: e.transmitted.clone(),
                reflected_e: e.reflected.clone(),
            })
        }
        _ => None,
    };

    ScatteringResult {
        params: *p,
        pulse: *pulse,
        operating_point: *op,
        t_inf: opts.t_inf_factor * pulse.tau_p(),
        ground,
        excited,
        contrast,
        contrast_extended,
        upsilon_g,
        upsilon_e,
        upsilon,
        spectra,
        warnings,
    }
}

/// Runs both qubit branches (sequentially) and combines them.
pub fn contrast_and_upsilon(
    p: &DeviceParams,
    pulse: &Pulse,
    opts: &SimulationOptions,
) -> Result<ScatteringResult, SimulationError> {
    p.validate()?;
    let op = derive_operating_point(p)?;
    let ground = simulate_branch(p, &op, QubitState::Ground, pulse, opts)?;
    let excited = simulate_branch(p, &op, QubitState::Excited, pulse, opts)?;
    Ok(combine(p, &op, pulse, ground, excited, opts))
}

/// Default carrier: the passband centre ω_r.
pub fn default_pulse(p: &DeviceParams, tau_p: f64) -> Result<Pulse, PulseError> {
    Pulse::new(p.omega_r, tau_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;
    use alloc::vec;

    #[test]
    fn fourier_sum_of_decaying_exponential() {
        // f(τ) = e^{−aτ}: ∫_0^T e^{iδτ} f = (e^{(iδ−a)T} − 1)/(iδ − a).
        let a = 3.0;
        let t_end = 4.0;
        let n = 4001;
        let h = t_end / (n - 1) as f64;
        let f: Vec<C64> = (0..n).map(|k| C64::new((-a * h * k as f64).exp(), 0.0)).collect();
        let ends = (C64::new(-a, 0.0), C64::new(-a * (-a * t_end).exp(), 0.0));
        let deltas = [-50.0, -3.0, 0.0, 1.0, 40.0];
        let (fa, _) = fourier_pair(&f, &f, h, ends, ends, &deltas);
        for (d, v) in deltas.iter().zip(fa) {
            let s = C64::new(-a, *d);
            let exact = ((s * t_end).exp() - 1.0) / s;
            assert!((v - exact).norm() < 1e-9, "δ = {d}: {v} vs {exact}");
        }
    }

    #[test]
    fn edge_fraction_of_flat_spectrum() {
        let s = vec![1.0; 1000];
        assert!((edge_fraction(&s, 1000.0) - 0.1).abs() < 1e-12);
        assert!((edge_fraction(&s, 2000.0) - 0.05).abs() < 1e-12);
        assert_eq!(edge_fraction(&[0.0; 10], 0.0), 0.0);
    }

    #[test]
    fn wide_grid_contains_standard_grid() {
        let p = DeviceParams {
            omega_r: mhz(7000.0),
            omega_ge: mhz(7360.0),
            g_ef: mhz(30.0),
            g_ge: None,
            hopping: mhz(10.0),
            kappa_1: mhz(22.0),
            kappa_2: mhz(22.0),
            n_res: 7,
            gamma_res: 0.0,
            tau_coh: 100.0,
        };
        let op = derive_operating_point(&p).unwrap();
        let gen = assemble_generator(&p, &op, QubitState::Excited).unwrap();
        let pulse = Pulse::new(p.omega_r, 0.9).unwrap();
        let grid = SpectralGrid::default();
        let standard = grid.detunings(&pulse);
        let (wide, core) = wide_grid(&gen, 0.0, standard.clone(), grid.span(&pulse));
        assert_eq!(&wide[core], &standard[..]);
        assert!(wide.windows(2).all(|w| w[1] > w[0]));
        assert!(wide.len() > standard.len());
        assert!(*wide.last().unwrap() > 2.0 * p.hopping + p.g_ef);
        assert!((wide[0] + wide.last().unwrap()).abs() < 1e-9);
    }
}
