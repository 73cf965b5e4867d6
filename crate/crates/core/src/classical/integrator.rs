//! Fixed-step symplectic integration on extended phase space `(q, p; t, pi_t)`.
//!
//! The lapse enters only as a time density: step `k` of the evolution
//! parameter advances physical time by `tau_k = int N(sigma) d(sigma)` over
//! that step, and `(q, p)` by one symplectic map of length `tau_k`. `pi_t`
//! has no generator and is never touched.

use std::fmt;
use std::sync::Arc;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ClassicalSystem;

use super::actions::trajectory_actions;

/// Drift beyond which a step is rejected as too large.
pub const MAX_CONSTRAINT_DRIFT: f64 = 1e-4;
/// Tolerance on `|H + pi_t|` at the initial point, relative to `max(1, |H|)`.
pub const INITIAL_CONSTRAINT_TOL: f64 = 1e-10;
pub const MIN_STEPS: usize = 16;
pub const DEFAULT_STEPS: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
    pub pi_t: f64,
}

impl ExtendedPhasePoint {
    /// Completes `(q, p)` onto the constraint surface: `pi_t = -H(q, p)`.
    pub fn on_shell(sys: &ClassicalSystem, q: Vec<f64>, p: Vec<f64>, t: f64) -> Result<Self> {
        sys.check_dims(&q, "ExtendedPhasePoint (q)")?;
        sys.check_dims(&p, "ExtendedPhasePoint (p)")?;
        let pi_t = -sys.energy_unchecked(&q, &p);
        Ok(Self { q, p, t, pi_t })
    }

    /// `H(q, p) + pi_t`.
    pub fn constraint(&self, sys: &ClassicalSystem) -> f64 {
        sys.energy_unchecked(&self.q, &self.p) + self.pi_t
    }
}

/// Symmetric compositions of the kick-drift-kick leapfrog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Second order, one force-pair per step.
    Leapfrog,
    /// Fourth order triple jump.
    Yoshida4,
    /// Sixth order, seven leapfrog stages.
    #[default]
    Yoshida6,
}

const YOSHIDA6_W1: f64 = -1.177_679_984_178_87;
const YOSHIDA6_W2: f64 = 0.235_573_213_359_357;
const YOSHIDA6_W3: f64 = 0.784_513_610_477_560;

impl Scheme {
    /// Stage weights; each stage is a leapfrog step of `w * tau`.
    pub fn weights(self) -> Vec<f64> {
        match self {
            Scheme::Leapfrog => vec![1.0],
            Scheme::Yoshida4 => {
                let c = 2f64.powf(1.0 / 3.0);
                let w1 = 1.0 / (2.0 - c);
                vec![w1, -c * w1, w1]
            }
            Scheme::Yoshida6 => {
                let w0 = 1.0 - 2.0 * (YOSHIDA6_W1 + YOSHIDA6_W2 + YOSHIDA6_W3);
                vec![
                    YOSHIDA6_W3,
                    YOSHIDA6_W2,
                    YOSHIDA6_W1,
                    w0,
                    YOSHIDA6_W1,
                    YOSHIDA6_W2,
                    YOSHIDA6_W3,
                ]
            }
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Scheme::Leapfrog => 2,
            Scheme::Yoshida4 => 4,
            Scheme::Yoshida6 => 6,
        }
    }
}

/// Reusable integrator state: scheme weights and a gradient buffer.
pub(crate) struct Stepper<'a> {
    sys: &'a ClassicalSystem,
    weights: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(sys: &'a ClassicalSystem, scheme: Scheme) -> Self {
        Self {
            sys,
            weights: scheme.weights(),
            grad: vec![0.0; sys.dof()],
        }
    }

    /// Advances `(q, p)` by physical time `tau`.
    pub(crate) fn advance(&mut self, q: &mut [f64], p: &mut [f64], tau: f64) {
        let inv_m = 1.0 / self.sys.mass();
        for i in 0..self.weights.len() {
            let h = self.weights[i] * tau;
            self.sys.grad_potential(q, &mut self.grad);
            for (pi, g) in p.iter_mut().zip(&self.grad) {
                *pi -= 0.5 * h * g;
            }
            for (qi, pi) in q.iter_mut().zip(p.iter()) {
                *qi += h * pi * inv_m;
            }
            self.sys.grad_potential(q, &mut self.grad);
            for (pi, g) in p.iter_mut().zip(&self.grad) {
                *pi -= 0.5 * h * g;
            }
        }
    }
}

type LapseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum LapseKind {
    Constant(f64),
    Sinusoidal {
        scale: f64,
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
    Custom(LapseFn),
}

/// Positive lapse `N(sigma) = dt / d(sigma)`.
#[derive(Clone)]
pub struct LapseProfile {
    kind: LapseKind,
    description: String,
}

impl fmt::Debug for LapseProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LapseProfile")
            .field("description", &self.description)
            .finish()
    }
}

// 5-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

impl LapseProfile {
    /// `N = value`.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!("lapse must be > 0, got {value}")));
        }
        Ok(Self {
            kind: LapseKind::Constant(value),
            description: format!("constant {value}"),
        })
    }

    /// The fixed-time gauge `N = 1`.
    pub fn unit() -> Self {
        Self::constant(1.0).expect("positive")
    }

    /// `N = scale (1 + amplitude sin(frequency sigma + phase))` with `|amplitude| < 1`.
    pub fn sinusoidal(scale: f64, amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("lapse scale must be > 0, got {scale}")));
        }
        if !(amplitude.abs() < 1.0) || !frequency.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sinusoidal lapse needs |amplitude| < 1 and finite frequency/phase, got {amplitude}, {frequency}, {phase}"
            )));
        }
        Ok(Self {
            kind: LapseKind::Sinusoidal {
                scale,
                amplitude,
                frequency,
                phase,
            },
            description: format!("{scale} (1 + {amplitude} sin({frequency} s + {phase}))"),
        })
    }

    /// Sinusoidal lapse scaled so that its integral over `span` equals the span length.
    pub fn normalized_sinusoidal(amplitude: f64, frequency: f64, phase: f64, span: (f64, f64)) -> Result<Self> {
        let raw = Self::sinusoidal(1.0, amplitude, frequency, phase)?;
        let integral = raw.integral(span.0, span.1);
        Self::sinusoidal((span.1 - span.0) / integral, amplitude, frequency, phase)
    }

    /// Arbitrary lapse; step integrals use 5-point Gauss-Legendre.
    pub fn custom<F>(f: F, description: impl Into<String>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: LapseKind::Custom(Arc::new(f)),
            description: description.into(),
        }
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn value(&self, sigma: f64) -> f64 {
        match &self.kind {
            LapseKind::Constant(c) => *c,
            LapseKind::Sinusoidal {
                scale,
                amplitude,
                frequency,
                phase,
            } => scale * (1.0 + amplitude * (frequency * sigma + phase).sin()),
            LapseKind::Custom(f) => f(sigma),
        }
    }

    /// `int_a^b N(sigma) d(sigma)`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            LapseKind::Constant(c) => c * (b - a),
            LapseKind::Sinusoidal {
                scale,
                amplitude,
                frequency,
                phase,
            } => {
                if *frequency == 0.0 {
                    return scale * (1.0 + amplitude * phase.sin()) * (b - a);
                }
                let osc = ((frequency * b + phase).cos() - (frequency * a + phase).cos()) / frequency;
                scale * ((b - a) - amplitude * osc)
            }
            LapseKind::Custom(f) => {
                let panels = 256;
                let w = (b - a) / panels as f64;
                (0..panels)
                    .map(|i| gauss_legendre(f.as_ref(), a + i as f64 * w, a + (i + 1) as f64 * w))
                    .sum()
            }
        }
    }

    /// Physical time elapsed over step `k` of width `h` starting at `sigma0`.
    fn step_time(&self, sigma0: f64, h: f64, k: usize) -> f64 {
        match &self.kind {
            LapseKind::Constant(c) => c * h,
            LapseKind::Sinusoidal { .. } => {
                self.integral(sigma0 + k as f64 * h, sigma0 + (k + 1) as f64 * h)
            }
            LapseKind::Custom(f) => {
                gauss_legendre(f.as_ref(), sigma0 + k as f64 * h, sigma0 + (k + 1) as f64 * h)
            }
        }
    }
}

fn gauss_legendre(f: &(dyn Fn(f64) -> f64 + Send + Sync), a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    GL_NODES
        .iter()
        .zip(&GL_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub sigma_values: Vec<f64>,
    pub states: Vec<ExtendedPhasePoint>,
    /// `N(sigma_k)` at each stored point.
    pub lapse_values: Vec<f64>,
    /// `H(q_k, p_k)` at each stored point.
    pub h_values: Vec<f64>,
    /// `max_k |H + pi_t|`.
    pub energy_drift: f64,
    pub action_parametrized: f64,
    pub action_hamilton: Option<f64>,
    pub action_mj: Option<f64>,
}

impl Trajectory {
    pub fn initial(&self) -> &ExtendedPhasePoint {
        &self.states[0]
    }

    pub fn last(&self) -> &ExtendedPhasePoint {
        self.states.last().expect("non-empty trajectory")
    }

    pub(crate) fn from_states(
        sys: &ClassicalSystem,
        sigma_values: Vec<f64>,
        states: Vec<ExtendedPhasePoint>,
        lapse_values: Vec<f64>,
    ) -> Self {
        let h_values: Vec<f64> = states
            .iter()
            .map(|s| sys.energy_unchecked(&s.q, &s.p))
            .collect();
        let energy_drift = states
            .iter()
            .zip(&h_values)
            .map(|(s, h)| (h + s.pi_t).abs())
            .fold(0.0, f64::max);
        let mut traj = Self {
            sigma_values,
            states,
            lapse_values,
            h_values,
            energy_drift,
            action_parametrized: 0.0,
            action_hamilton: None,
            action_mj: None,
        };
        let a = trajectory_actions(&traj, sys, None);
        traj.action_parametrized = a.s_param;
        traj.action_hamilton = a.s_hamilton;
        traj
    }
}

fn check_span(span: (f64, f64), n_steps: usize) -> Result<()> {
    if !(span.0.is_finite() && span.1.is_finite() && span.1 > span.0) {
        return Err(Error::InvalidArgument(format!(
            "span must be an increasing finite interval, got [{}, {}]",
            span.0, span.1
        )));
    }
    if n_steps < MIN_STEPS {
        return Err(Error::InvalidArgument(format!(
            "n_steps must be >= {MIN_STEPS}, got {n_steps}"
        )));
    }
    Ok(())
}

/// Parametrized integration with the default scheme.
pub fn integrate_parametrized(
    sys: &ClassicalSystem,
    x0: &ExtendedPhasePoint,
    lapse: &LapseProfile,
    sigma_span: (f64, f64),
    n_steps: usize,
) -> Result<Trajectory> {
    integrate_parametrized_with(sys, x0, lapse, sigma_span, n_steps, Scheme::default())
}

pub fn integrate_parametrized_with(
    sys: &ClassicalSystem,
    x0: &ExtendedPhasePoint,
    lapse: &LapseProfile,
    sigma_span: (f64, f64),
    n_steps: usize,
    scheme: Scheme,
) -> Result<Trajectory> {
    check_span(sigma_span, n_steps)?;
    sys.check_dims(&x0.q, "integrate_parametrized (q)")?;
    sys.check_dims(&x0.p, "integrate_parametrized (p)")?;
    let h0 = sys.energy_unchecked(&x0.q, &x0.p);
    let violation = (h0 + x0.pi_t).abs();
    if !(violation <= INITIAL_CONSTRAINT_TOL * h0.abs().max(1.0)) {
        return Err(Error::ConstraintViolated { violation });
    }

    let (s0, s1) = sigma_span;
    let h = (s1 - s0) / n_steps as f64;
    let mut stepper = Stepper::new(sys, scheme);
    let mut q = x0.q.clone();
    let mut p = x0.p.clone();
    let mut t = x0.t;
    let mut sigma_values = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut lapse_values = Vec::with_capacity(n_steps + 1);
    sigma_values.push(s0);
    states.push(x0.clone());
    lapse_values.push(lapse.value(s0));
    if !(lapse_values[0] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lapse not positive at sigma = {s0}: {}",
            lapse_values[0]
        )));
    }
    for k in 0..n_steps {
        let sigma = s0 + (k + 1) as f64 * h;
        let n_val = lapse.value(sigma);
        if !(n_val > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lapse not positive at sigma = {sigma}: {n_val}"
            )));
        }
        let tau = lapse.step_time(s0, h, k);
        stepper.advance(&mut q, &mut p, tau);
        t += tau;
        sigma_values.push(sigma);
        states.push(ExtendedPhasePoint {
            q: q.clone(),
            p: p.clone(),
            t,
            pi_t: x0.pi_t,
        });
        lapse_values.push(n_val);
    }
    let traj = Trajectory::from_states(sys, sigma_values, states, lapse_values);
    if !(traj.energy_drift <= MAX_CONSTRAINT_DRIFT) {
        return Err(Error::StepSizeTooLarge {
            drift: traj.energy_drift,
        });
    }
    Ok(traj)
}

/// Fixed-time gauge `t = sigma`, `N = 1`, started on shell.
pub fn gauge_fix_hamilton(
    sys: &ClassicalSystem,
    q0: &[f64],
    p0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
) -> Result<Trajectory> {
    gauge_fix_hamilton_with(sys, q0, p0, t_span, n_steps, Scheme::default())
}

pub fn gauge_fix_hamilton_with(
    sys: &ClassicalSystem,
    q0: &[f64],
    p0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
    scheme: Scheme,
) -> Result<Trajectory> {
    let x0 = ExtendedPhasePoint::on_shell(sys, q0.to_vec(), p0.to_vec(), t_span.0)?;
    integrate_parametrized_with(sys, &x0, &LapseProfile::unit(), t_span, n_steps, scheme)
}

/// Phase-space samples of a direct Hamilton integration.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonPath {
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

/// `dq/dt = dH/dp, dp/dt = -dH/dq` with a fixed step over `t_span`.
pub fn integrate_hamilton(
    sys: &ClassicalSystem,
    q0: &[f64],
    p0: &[f64],
    t_span: (f64, f64),
    n_steps: usize,
    scheme: Scheme,
) -> Result<HamiltonPath> {
    check_span(t_span, n_steps)?;
    sys.check_dims(q0, "integrate_hamilton (q)")?;
    sys.check_dims(p0, "integrate_hamilton (p)")?;
    let h = (t_span.1 - t_span.0) / n_steps as f64;
    let mut stepper = Stepper::new(sys, scheme);
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    let mut path = HamiltonPath {
        times: vec![t_span.0],
        q: vec![q.clone()],
        p: vec![p.clone()],
    };
    // time accumulates step by step, matching the parametrized path with N = 1
    let mut t = t_span.0;
    for _ in 0..n_steps {
        stepper.advance(&mut q, &mut p, h);
        t += h;
        path.times.push(t);
        path.q.push(q.clone());
        path.p.push(p.clone());
    }
    Ok(path)
}

/// Max-norm difference of the final `(q, p, t)` between two lapse choices
/// with equal total integral.
pub fn reparametrization_invariance_check(
    sys: &ClassicalSystem,
    x0: &ExtendedPhasePoint,
    lapse1: &LapseProfile,
    lapse2: &LapseProfile,
    sigma_span: (f64, f64),
    n_steps: usize,
) -> Result<f64> {
    reparametrization_invariance_check_with(sys, x0, lapse1, lapse2, sigma_span, n_steps, Scheme::default())
}

pub fn reparametrization_invariance_check_with(
    sys: &ClassicalSystem,
    x0: &ExtendedPhasePoint,
    lapse1: &LapseProfile,
    lapse2: &LapseProfile,
    sigma_span: (f64, f64),
    n_steps: usize,
    scheme: Scheme,
) -> Result<f64> {
    let (a, b) = sigma_span;
    let (i1, i2) = (lapse1.integral(a, b), lapse2.integral(a, b));
    if !((i1 - i2).abs() <= 1e-12 * i1.abs().max(1.0)) {
        return Err(Error::InvalidArgument(format!(
            "lapse integrals differ: {i1} vs {i2}"
        )));
    }
    let t1 = integrate_parametrized_with(sys, x0, lapse1, sigma_span, n_steps, scheme)?;
    let t2 = integrate_parametrized_with(sys, x0, lapse2, sigma_span, n_steps, scheme)?;
    Ok(final_state_distance(t1.last(), t2.last()))
}

pub(crate) fn final_state_distance(a: &ExtendedPhasePoint, b: &ExtendedPhasePoint) -> f64 {
    a.q.iter()
        .zip(&b.q)
        .chain(a.p.iter().zip(&b.p))
        .map(|(x, y)| (x - y).abs())
        .fold((a.t - b.t).abs(), f64::max)
}
