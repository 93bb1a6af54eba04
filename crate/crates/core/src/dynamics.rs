//! Single-excitation dynamics of the driven array.
//!
//! The state vector is `(A_{-N}, …, A_N, S_ef)`: the photon amplitudes of the
//! resonators followed by the `|e>`-`|f>` coherence of the qutrit. It obeys
//!
//! ```text
//! i dψ/dt = M_q ψ + e_{-N} f_1 Ξ(t)
//! ```
//!
//! where `M_q` depends on the control-qubit state `q`. Everything is expressed
//! in a frame rotating at ω_r unless a generator is moved with
//! [`Generator::in_frame`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // unused only when std leaks in through dev-dependencies
use num_traits::Float;
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::model::{DeviceParams, ModelError, OperatingPoint};
use crate::pulse::Pulse;
use crate::quad::{GAUSS5_NODES, GAUSS5_WEIGHTS};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// State of the control qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub const BOTH: [QubitState; 2] = [QubitState::Ground, QubitState::Excited];

    /// η_q = |<e|q>|².
    pub fn eta(self) -> f64 {
        match self {
            QubitState::Ground => 0.0,
            QubitState::Excited => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitState::Ground => "g",
            QubitState::Excited => "e",
        }
    }
}

/// Linear generator of the amplitude equations for one qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    diag: Vec<C64>,
    hopping: f64,
    n_res: usize,
    /// Coefficient of S_ef in the central-resonator equation.
    qutrit_coupling: f64,
    /// Coefficient of A_0 in the S_ef equation (η_q g_ef).
    qutrit_source: f64,
    drive_coeff: f64,
    kappa_1: f64,
    kappa_2: f64,
    qubit: QubitState,
    frame: f64,
}

/// Builds the generator for qubit state `q` in the frame rotating at ω_r.
pub fn assemble_generator(
    p: &DeviceParams,
    op: &OperatingPoint,
    q: QubitState,
) -> Result<Generator, ModelError> {
    if p.n_res == 0 || p.n_res.is_multiple_of(2) {
        return Err(ModelError::InvalidParameter { name: "n_res", reason: "must be odd" });
    }
    if !(p.kappa_1 >= 0.0 && p.kappa_2 >= 0.0) {
        return Err(ModelError::InvalidParameter {
            name: "kappa",
            reason: "exchange rates must be non-negative",
        });
    }
    let n = p.n_res;
    let center = n / 2;
    let eta = q.eta();
    let mut diag = vec![ZERO; n + 1];
    diag[center] = C64::new((op.omega_c - p.omega_r) + (2.0 * eta - 1.0) * op.chi, 0.0);
    diag[n] = C64::new(op.omega_a - p.omega_r, 0.0);
    diag[0] -= I * (0.5 * p.kappa_1);
    diag[n - 1] -= I * (0.5 * p.kappa_2);
    Ok(Generator {
        diag,
        hopping: p.hopping,
        n_res: n,
        qutrit_coupling: p.g_ef,
        qutrit_source: eta * p.g_ef,
        drive_coeff: (p.kappa_1 / (2.0 * PI)).sqrt(),
        kappa_1: p.kappa_1,
        kappa_2: p.kappa_2,
        qubit: q,
        frame: p.omega_r,
    })
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.n_res + 1
    }

    pub fn n_res(&self) -> usize {
        self.n_res
    }

    /// Index of A_{-N}, the driven amplitude.
    pub fn drive_index(&self) -> usize {
        0
    }

    /// Index of A_N, coupled to the output waveguide.
    pub fn output_index(&self) -> usize {
        self.n_res - 1
    }

    pub fn center_index(&self) -> usize {
        self.n_res / 2
    }

    pub fn qutrit_index(&self) -> usize {
        self.n_res
    }

    /// f_1 = sqrt(κ_1 / 2π).
    pub fn drive_coeff(&self) -> f64 {
        self.drive_coeff
    }

    pub fn qubit(&self) -> QubitState {
        self.qubit
    }

    pub fn kappa_1(&self) -> f64 {
        self.kappa_1
    }

    pub fn kappa_2(&self) -> f64 {
        self.kappa_2
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    /// Coefficient of S_ef in the central-resonator equation (g_ef).
    pub fn qutrit_coupling(&self) -> f64 {
        self.qutrit_coupling
    }

    /// Coefficient of A_0 in the S_ef equation (η_q g_ef).
    pub fn qutrit_source(&self) -> f64 {
        self.qutrit_source
    }

    /// Absolute frequency of the rotating frame.
    pub fn frame(&self) -> f64 {
        self.frame
    }

    pub fn diagonal(&self) -> &[C64] {
        &self.diag
    }

    /// Same dynamics expressed in a frame rotating at `omega_frame`.
    pub fn in_frame(&self, omega_frame: f64) -> Generator {
        let shift = omega_frame - self.frame;
        let mut moved = self.clone();
        for d in &mut moved.diag {
            d.re -= shift;
        }
        moved.frame = omega_frame;
        moved
    }

    /// Dense copy of the generator matrix.
    pub fn matrix(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n);
        for (i, d) in self.diag.iter().enumerate() {
            m.set(i, i, *d);
        }
        for i in 0..self.n_res - 1 {
            m.set(i, i + 1, C64::new(self.hopping, 0.0));
            m.set(i + 1, i, C64::new(self.hopping, 0.0));
        }
        let c = self.center_index();
        m.set(c, self.n_res, C64::new(self.qutrit_coupling, 0.0));
        m.set(self.n_res, c, C64::new(self.qutrit_source, 0.0));
        m
    }

    /// `out = M x`.
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n_res;
        let j = self.hopping;
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += x[i - 1] * j;
            }
            if i + 1 < n {
                acc += x[i + 1] * j;
            }
            out[i] = acc;
        }
        let c = n / 2;
        out[c] += x[n] * self.qutrit_coupling;
        out[n] = self.diag[n] * x[n] + x[c] * self.qutrit_source;
    }

    /// Gershgorin bound on the spectral radius of the part of the generator
    /// that the drive can reach (a decoupled qutrit, η_q = 0, is left out).
    pub fn spectral_radius_bound(&self) -> f64 {
        let m = self.matrix();
        let active = if self.qutrit_source == 0.0 { self.n_res } else { self.dim() };
        (0..active)
            .map(|i| (0..active).map(|k| m.get(i, k).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("step size underflow at t = {t} us")]
    NonConvergence { t: f64 },
    #[error("integration horizon must be finite and positive, got {0}")]
    InvalidHorizon(f64),
    #[error("at least two samples are required")]
    TooFewSamples,
    #[error("cancelled at t = {t} us")]
    Cancelled { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of uniformly spaced output instants on `[0, t_end]`.
    pub samples: usize,
    /// Complex factor applied to the drive (and to the input spectrum).
    pub drive_scale: C64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            samples: 2000,
            drive_scale: C64::new(1.0, 0.0),
            max_steps: 50_000_000,
        }
    }
}

/// Cumulative bookkeeping at the end of an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepRecord {
    pub t: f64,
    /// Σ|A_n|² + |S_ef|².
    pub stored: f64,
    /// ∫|A_N|² dt.
    pub output_power: f64,
    /// ∫|A_{-N}|² dt.
    pub input_power: f64,
    /// 2 Im ∫ d(t) A*_{-N} dt, with d the drive term.
    pub drive_exchange: f64,
    /// κ_2 ∫|A_N|² dt.
    pub transmitted: f64,
    /// ∫|ε(t) − i sqrt(κ_1) A_{-N}|² dt: probability carried by the field
    /// leaving through the input waveguide.
    pub reflected: f64,
    /// ∫|ε(t)|² dt = |c|² (1 − e^{−t/τ_p}).
    pub injected: f64,
}

impl StepRecord {
    /// stored + transmitted + reflected − injected.
    pub fn flux_residual(&self) -> f64 {
        self.stored + self.transmitted + self.reflected - self.injected
    }
}

/// Time-sampled amplitudes plus per-step cumulative integrals.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    amplitudes: Vec<C64>,
    dim: usize,
    steps: Vec<StepRecord>,
    start_derivative: Vec<C64>,
    end_derivative: Vec<C64>,
    extension: Option<StepRecord>,
    drive_scale: C64,
    pulse: Pulse,
    frame: f64,
    kappa_1: f64,
    kappa_2: f64,
    output_index: usize,
    qutrit_index: usize,
    rejected: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State vector at sample `k`.
    pub fn sample(&self, k: usize) -> &[C64] {
        &self.amplitudes[k * self.dim..(k + 1) * self.dim]
    }

    /// Time series of one component.
    pub fn component(&self, index: usize) -> Vec<C64> {
        (0..self.len()).map(|k| self.amplitudes[k * self.dim + index]).collect()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Uniform spacing of the samples.
    pub fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// dψ/dt at the first and last sample.
    pub fn endpoint_derivatives(&self) -> (&[C64], &[C64]) {
        (&self.start_derivative, &self.end_derivative)
    }

    /// Records of the accepted adaptive steps up to `t_end`.
    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn final_record(&self) -> StepRecord {
        self.steps.last().copied().unwrap_or_default()
    }

    /// Record at the end of the optional continuation past `t_end`.
    pub fn extension(&self) -> Option<StepRecord> {
        self.extension
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn drive_scale(&self) -> C64 {
        self.drive_scale
    }

    pub fn pulse(&self) -> &Pulse {
        &self.pulse
    }

    pub fn frame(&self) -> f64 {
        self.frame
    }

    pub fn kappa_1(&self) -> f64 {
        self.kappa_1
    }

    pub fn kappa_2(&self) -> f64 {
        self.kappa_2
    }

    pub fn drive_index(&self) -> usize {
        0
    }

    pub fn output_index(&self) -> usize {
        self.output_index
    }

    pub fn qutrit_index(&self) -> usize {
        self.qutrit_index
    }

    /// Largest total norm over the samples.
    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|k| self.sample(k).iter().map(|v| v.norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest |flux residual| over the adaptive steps.
    pub fn max_flux_residual(&self) -> f64 {
        self.steps.iter().map(|r| r.flux_residual().abs()).fold(0.0, f64::max)
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output (Hairer's continuous extension).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct System<'a> {
    gen: &'a Generator,
    pulse: Pulse,
    scale: C64,
    input_norm: f64,
    sqrt_kappa_1: f64,
}

impl System<'_> {
    /// Normalised input field ε(t) = c Ξ(t) / sqrt(2π) in the generator frame.
    fn input_field(&self, t: f64) -> C64 {
        self.scale * self.pulse.drive_in_frame(t, self.gen.frame) * self.input_norm
    }

    fn rhs(&self, t: f64, y: &[C64], out: &mut [C64]) {
        self.gen.apply(y, out);
        let drive = self.input_field(t) * self.sqrt_kappa_1;
        out[0] += drive;
        for v in out.iter_mut() {
            *v = C64::new(v.im, -v.re);
        }
    }
}

struct Dense<'a> {
    y0: &'a [C64],
    r: [&'a [C64]; 4],
}

impl Dense<'_> {
    fn eval(&self, theta: f64, out: &mut [C64]) {
        let t1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.y0[i]
                + (self.r[0][i] + (self.r[1][i] + (self.r[2][i] + self.r[3][i] * t1) * theta) * t1)
                    * theta;
        }
    }
}

/// Integrates from the photon-free state to `t_end`.
pub fn integrate(
    gen: &Generator,
    pulse: &Pulse,
    t_end: f64,
    opts: &IntegrationOptions,
) -> Result<Trajectory, DynamicsError> {
    integrate_with(gen, pulse, t_end, None, opts, &|| false)
}

/// Like [`integrate`], optionally continuing to `extend_to` (only the final
/// cumulative record of the continuation is kept) and polling `cancel`.
pub fn integrate_with(
    gen: &Generator,
    pulse: &Pulse,
    t_end: f64,
    extend_to: Option<f64>,
    opts: &IntegrationOptions,
    cancel: &dyn Fn() -> bool,
) -> Result<Trajectory, DynamicsError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(DynamicsError::InvalidHorizon(t_end));
    }
    if opts.samples < 2 {
        return Err(DynamicsError::TooFewSamples);
    }
    let dim = gen.dim();
    let sys = System {
        gen,
        pulse: *pulse,
        scale: opts.drive_scale,
        input_norm: 1.0 / (2.0 * PI).sqrt(),
        sqrt_kappa_1: gen.kappa_1.sqrt(),
    };
    let out_idx = gen.output_index();
    let abs_scale = if opts.drive_scale.norm() > 0.0 { opts.drive_scale.norm() } else { 1.0 };
    let atol = opts.atol * abs_scale;
    let injected_scale = opts.drive_scale.norm_sqr();

    let samples = opts.samples;
    let mut times = Vec::with_capacity(samples);
    let mut amplitudes = vec![ZERO; samples * dim];
    for k in 0..samples {
        times.push(t_end * k as f64 / (samples - 1) as f64);
    }
    let mut next_sample = 1;

    let mut y = vec![ZERO; dim];
    let mut y_new = vec![ZERO; dim];
    let mut stage = vec![ZERO; dim];
    let mut k = [(); 7].map(|_| vec![ZERO; dim]);
    let mut rc = [(); 4].map(|_| vec![ZERO; dim]);
    let mut probe = vec![ZERO; dim];

    let mut t = 0.0;
    sys.rhs(t, &y, &mut k[0]);
    let start_derivative = k[0].clone();
    let mut end_derivative = Vec::new();

    let rate = gen.spectral_radius_bound() + pulse.bandwidth() + (pulse.omega_0() - gen.frame).abs();
    let mut h = (0.05 / rate.max(1e-12)).min(t_end);
    let mut rec = StepRecord::default();
    let mut steps = Vec::new();
    let mut extension = None;
    let mut rejected = 0usize;
    let mut step_count = 0usize;

    let targets = [Some(t_end), extend_to.filter(|&x| x > t_end)];
    for (phase, target) in targets.iter().enumerate() {
        let Some(target) = *target else { continue };
        let mut last_rejected = false;
        while t < target {
            step_count += 1;
            if step_count > opts.max_steps {
                return Err(DynamicsError::NonConvergence { t });
            }
            if step_count.is_multiple_of(1024) && cancel() {
                return Err(DynamicsError::Cancelled { t });
            }
            let remaining = target - t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * t.max(1e-3) {
                return Err(DynamicsError::NonConvergence { t });
            }

            for i in 0..dim {
                stage[i] = y[i] + k[0][i] * (h * A21);
            }
            sys.rhs(t + C2 * h, &stage, &mut k[1]);
            for i in 0..dim {
                stage[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
            }
            sys.rhs(t + C3 * h, &stage, &mut k[2]);
            for i in 0..dim {
                stage[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
            }
            sys.rhs(t + C4 * h, &stage, &mut k[3]);
            for i in 0..dim {
                stage[i] =
                    y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
            }
            sys.rhs(t + C5 * h, &stage, &mut k[4]);
            for i in 0..dim {
                stage[i] = y[i]
                    + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65)
                        * h;
            }
            let t_new = if last { target } else { t + h };
            sys.rhs(t + h, &stage, &mut k[5]);
            for i in 0..dim {
                y_new[i] = y[i]
                    + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76)
                        * h;
            }
            sys.rhs(t_new, &y_new, &mut k[6]);

            let mut err2 = 0.0;
            for i in 0..dim {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6
                    + k[6][i] * E7)
                    * h;
                let sc = atol + opts.rtol * y[i].norm().max(y_new[i].norm());
                err2 += if sc > 0.0 { e.norm_sqr() / (sc * sc) } else { 0.0 };
            }
            let err = (err2 / dim as f64).sqrt();

            if !(err <= 1.0) {
                rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
                h *= fac.min(1.0);
                last_rejected = true;
                continue;
            }

            for i in 0..dim {
                let dy = y_new[i] - y[i];
                let b = k[0][i] * h - dy;
                rc[0][i] = dy;
                rc[1][i] = b;
                rc[2][i] = dy - k[6][i] * h - b;
                rc[3][i] = (k[0][i] * D1 + k[2][i] * D3 + k[3][i] * D4 + k[4][i] * D5
                    + k[5][i] * D6
                    + k[6][i] * D7)
                    * h;
            }
            let dense = Dense { y0: &y, r: [&rc[0], &rc[1], &rc[2], &rc[3]] };
            let step_len = t_new - t;

            for (node, w) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS) {
                dense.eval(*node, &mut probe);
                let tn = t + node * step_len;
                let a_in = probe[0];
                let a_out = probe[out_idx];
                let eps = sys.input_field(tn);
                let d = eps * sys.sqrt_kappa_1;
                let wh = w * step_len;
                rec.output_power += wh * a_out.norm_sqr();
                rec.input_power += wh * a_in.norm_sqr();
                rec.drive_exchange += wh * 2.0 * (d * a_in.conj()).im;
                rec.reflected += wh * (eps - I * a_in * sys.sqrt_kappa_1).norm_sqr();
            }
            rec.t = t_new;
            rec.transmitted = gen.kappa_2 * rec.output_power;
            rec.stored = y_new.iter().map(|v| v.norm_sqr()).sum();
            rec.injected = injected_scale * pulse.injected_probability(t_new);

            if phase == 0 {
                while next_sample < samples && times[next_sample] <= t_new {
                    let dst = &mut amplitudes[next_sample * dim..(next_sample + 1) * dim];
                    if next_sample == samples - 1 {
                        dst.copy_from_slice(&y_new);
                    } else {
                        let theta = ((times[next_sample] - t) / step_len).clamp(0.0, 1.0);
                        dense.eval(theta, dst);
                    }
                    next_sample += 1;
                }
                steps.push(rec);
            }

            t = t_new;
            core::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);

            let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            if !last {
                h *= fac;
            } else {
                h = step_len * fac;
            }
        }
        if phase == 0 {
            end_derivative = k[0].clone();
        } else {
            extension = Some(rec);
        }
    }

    Ok(Trajectory {
        times,
        amplitudes,
        dim,
        steps,
        start_derivative,
        end_derivative,
        extension,
        drive_scale: opts.drive_scale,
        pulse: *pulse,
        frame: gen.frame,
        kappa_1: gen.kappa_1,
        kappa_2: gen.kappa_2,
        output_index: out_idx,
        qutrit_index: gen.qutrit_index(),
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::derive_operating_point;
    use crate::units::mhz;

    fn params(n_res: usize, g_ef: f64) -> DeviceParams {
        DeviceParams {
            omega_r: mhz(7000.0),
            omega_ge: mhz(7360.0),
            g_ef: mhz(g_ef),
            g_ge: None,
            hopping: mhz(10.5),
            kappa_1: mhz(24.0),
            kappa_2: mhz(24.0),
            n_res,
            gamma_res: 0.0,
            tau_coh: 100.0,
        }
    }

    #[test]
    fn generator_layout() {
        let p = params(7, 30.0);
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Ground).unwrap();
        assert_eq!(g.dim(), 8);
        assert_eq!(g.diagonal()[3], ZERO);
        let e = assemble_generator(&p, &op, QubitState::Excited).unwrap();
        assert!((e.diagonal()[3].re - 2.0 * op.chi).abs() < 1e-12);
        assert!((e.diagonal()[7].re - 2.0 * op.chi).abs() < 1e-9);

        let m = e.matrix();
        let mut h = m.clone();
        h.set(0, 0, C64::new(m.get(0, 0).re, 0.0));
        h.set(6, 6, C64::new(m.get(6, 6).re, 0.0));
        for i in 0..8 {
            for j in 0..8 {
                assert!((h.get(i, j) - h.get(j, i).conj()).norm() < 1e-12, "({i},{j})");
            }
        }
        assert!((m.get(0, 0).im + 0.5 * p.kappa_1).abs() < 1e-12);
        assert!((m.get(6, 6).im + 0.5 * p.kappa_2).abs() < 1e-12);
        for i in 0..6 {
            assert_eq!(m.get(i, i + 1).re, p.hopping);
        }
        assert_eq!(m.get(3, 7).re, p.g_ef);
        assert_eq!(m.get(7, 3).re, p.g_ef);

        let mg = g.matrix();
        assert_eq!(mg.get(7, 3), ZERO);
        assert_eq!(mg.get(3, 7).re, p.g_ef);
    }

    #[test]
    fn apply_matches_dense_matrix() {
        let p = params(9, 40.0);
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Excited).unwrap();
        let x: Vec<C64> = (0..g.dim()).map(|k| C64::new(k as f64, 1.0 - k as f64 * 0.5)).collect();
        let mut y = vec![ZERO; g.dim()];
        g.apply(&x, &mut y);
        let z = g.matrix().mul_vec(&x);
        for (a, b) in y.iter().zip(z.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn single_site_matches_closed_form() {
        // One resonator, no qutrit coupling: A(t) has a closed form.
        let mut p = params(1, 0.0);
        p.kappa_2 = mhz(10.0);
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Ground).unwrap();
        let tau = 0.4;
        let pulse = Pulse::new(p.omega_r, tau).unwrap();
        let opts = IntegrationOptions { samples: 101, ..Default::default() };
        let traj = integrate(&g, &pulse, 4.0, &opts).unwrap();
        let kappa = p.kappa_1 + p.kappa_2;
        let amp = -I * (p.kappa_1 / tau).sqrt() / (0.5 * kappa - 0.5 / tau);
        for (k, &t) in traj.times().iter().enumerate() {
            let exact = amp * ((-0.5 * t / tau).exp() - (-0.5 * kappa * t).exp());
            assert!((traj.sample(k)[0] - exact).norm() < 1e-8, "t = {t}");
        }
        assert!(traj.max_flux_residual() < 1e-8);
    }

    #[test]
    fn zero_drive_stays_empty() {
        let mut p = params(7, 30.0);
        p.kappa_1 = 0.0;
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Excited).unwrap();
        let pulse = Pulse::new(p.omega_r, 0.5).unwrap();
        let traj = integrate(&g, &pulse, 5.0, &IntegrationOptions::default()).unwrap();
        assert_eq!(traj.max_norm(), 0.0);
        assert_eq!(traj.final_record().transmitted, 0.0);
    }

    #[test]
    fn ground_state_leaves_qutrit_untouched() {
        let p = params(7, 30.0);
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Ground).unwrap();
        let pulse = Pulse::new(p.omega_r, 0.3).unwrap();
        let traj = integrate(&g, &pulse, 3.0, &IntegrationOptions::default()).unwrap();
        assert!(traj.component(7).iter().all(|v| *v == ZERO));
    }

    #[test]
    fn rejects_bad_horizon() {
        let p = params(7, 30.0);
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Ground).unwrap();
        let pulse = Pulse::new(p.omega_r, 0.3).unwrap();
        let opts = IntegrationOptions::default();
        assert!(matches!(integrate(&g, &pulse, 0.0, &opts), Err(DynamicsError::InvalidHorizon(_))));
        let opts = IntegrationOptions { samples: 1, ..opts };
        assert!(matches!(integrate(&g, &pulse, 1.0, &opts), Err(DynamicsError::TooFewSamples)));
    }

    #[test]
    fn cancellation_is_reported() {
        let p = params(7, 30.0);
        let op = derive_operating_point(&p).unwrap();
        let g = assemble_generator(&p, &op, QubitState::Ground).unwrap();
        let pulse = Pulse::new(p.omega_r, 0.9).unwrap();
        let r = integrate_with(&g, &pulse, 9.0, None, &IntegrationOptions::default(), &|| true);
        assert!(matches!(r, Err(DynamicsError::Cancelled { .. })));
    }
}
