//! Adaptive 5th-order Cash-Karp Runge-Kutta integration of the flow, with
//! per-step solution detection, boundary clamping, step/time/length
//! accounting, and overflow surfacing.

use crate::dynamics::{ContinuousState, CtdsSystem, Overflow};
use crate::formula::Assignment;
use serde::{Deserialize, Serialize};

/// A first-order ODE system `dy/dt = f(t, y)` that may signal overflow.
///
/// The flow itself implements this over the joint `(s, log_a)` vector;
/// tests harness scalar and linear systems through the same tableau.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), Overflow>;
}

impl OdeSystem for CtdsSystem {
    fn dim(&self) -> usize {
        self.num_vars() + self.num_clauses()
    }

    fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), Overflow> {
        let n = self.num_vars();
        let (s, log_a) = y.split_at(n);
        let (ds, dlog_a) = dy.split_at_mut(n);
        self.rhs(s, log_a, ds, dlog_a)
    }
}

/// Adaptive step-size policy and run budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Maximal relative local truncation error per step.
    pub eps: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Analog-time budget.
    pub t_max: f64,
    /// Accepted-step budget.
    pub n_step_max: u64,
    /// Step controller safety factor.
    pub safety: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            eps: 1e-3,
            h_init: 1e-2,
            h_min: 1e-12,
            h_max: 1.0,
            t_max: 1e4,
            n_step_max: 10_000_000,
            safety: 0.9,
        }
    }
}

/// How a run terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Solved,
    TimeBudgetExceeded,
    StepBudgetExceeded,
    Overflow,
}

/// One decimated trace sample along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub e: f64,
    pub v: f64,
    /// |ds/dt| at this point.
    pub speed: f64,
    /// |d²s/dt²|, finite-differenced between accepted steps.
    pub accel: f64,
    /// Selected spin coordinates (see [`TraceSpec::s_indices`]).
    pub s_sel: Vec<f64>,
    /// Selected log clause weights.
    pub log_a_sel: Vec<f64>,
}

/// What to record along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    /// Decimation cap: recording thins (stride doubling) past this count.
    pub max_points: usize,
    pub s_indices: Vec<usize>,
    pub a_indices: Vec<usize>,
}

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec {
            max_points: 100_000,
            s_indices: vec![0, 1, 2],
            a_indices: vec![0],
        }
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// Analog time at termination.
    pub t_final: f64,
    /// Accepted steps.
    pub n_step: u64,
    /// Rejected trial steps (diagnostic; not counted in `n_step`).
    pub n_rejected: u64,
    /// Sum of straight-segment s-space distances between accepted states.
    pub length_l: f64,
    pub witness: Option<Assignment>,
    pub trace: Option<Vec<TrajectoryPoint>>,
}

// Cash-Karp tableau.
const A: [f64; 6] = [0.0, 0.2, 0.3, 0.6, 1.0, 0.875];
const B21: f64 = 0.2;
const B31: f64 = 3.0 / 40.0;
const B32: f64 = 9.0 / 40.0;
const B41: f64 = 0.3;
const B42: f64 = -0.9;
const B43: f64 = 1.2;
const B51: f64 = -11.0 / 54.0;
const B52: f64 = 2.5;
const B53: f64 = -70.0 / 27.0;
const B54: f64 = 35.0 / 27.0;
const B61: f64 = 1631.0 / 55296.0;
const B62: f64 = 175.0 / 512.0;
const B63: f64 = 575.0 / 13824.0;
const B64: f64 = 44275.0 / 110592.0;
const B65: f64 = 253.0 / 4096.0;
const C1: f64 = 37.0 / 378.0;
const C3: f64 = 250.0 / 621.0;
const C4: f64 = 125.0 / 594.0;
const C6: f64 = 512.0 / 1771.0;
const DC1: f64 = C1 - 2825.0 / 27648.0;
const DC3: f64 = C3 - 18575.0 / 48384.0;
const DC4: f64 = C4 - 13525.0 / 55296.0;
const DC5: f64 = -277.0 / 14336.0;
const DC6: f64 = C6 - 0.25;
const TINY: f64 = 1e-30;

/// Reusable Cash-Karp stepper with scratch buffers for one system size.
pub struct CashKarp {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    k5: Vec<f64>,
    k6: Vec<f64>,
    ytmp: Vec<f64>,
}

impl CashKarp {
    pub fn new(dim: usize) -> Self {
        CashKarp {
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            k5: vec![0.0; dim],
            k6: vec![0.0; dim],
            ytmp: vec![0.0; dim],
        }
    }

    /// One embedded 4(5) trial step of size `h` from `(t, y)` with `dydt`
    /// already evaluated at `y`. Writes the 5th-order proposal into `yout`
    /// and returns the error estimate: the max over components of
    /// |Δ5 − Δ4| / (|y| + |h·dy/dt| + tiny).
    pub fn step<S: OdeSystem>(
        &mut self,
        sys: &S,
        t: f64,
        y: &[f64],
        dydt: &[f64],
        h: f64,
        yout: &mut [f64],
    ) -> Result<f64, Overflow> {
        let dim = y.len();
        for i in 0..dim {
            self.ytmp[i] = y[i] + h * B21 * dydt[i];
        }
        sys.eval(t + A[1] * h, &self.ytmp, &mut self.k2)?;
        for i in 0..dim {
            self.ytmp[i] = y[i] + h * (B31 * dydt[i] + B32 * self.k2[i]);
        }
        sys.eval(t + A[2] * h, &self.ytmp, &mut self.k3)?;
        for i in 0..dim {
            self.ytmp[i] = y[i] + h * (B41 * dydt[i] + B42 * self.k2[i] + B43 * self.k3[i]);
        }
        sys.eval(t + A[3] * h, &self.ytmp, &mut self.k4)?;
        for i in 0..dim {
            self.ytmp[i] = y[i]
                + h * (B51 * dydt[i] + B52 * self.k2[i] + B53 * self.k3[i] + B54 * self.k4[i]);
        }
        sys.eval(t + A[4] * h, &self.ytmp, &mut self.k5)?;
        for i in 0..dim {
            self.ytmp[i] = y[i]
                + h * (B61 * dydt[i]
                    + B62 * self.k2[i]
                    + B63 * self.k3[i]
                    + B64 * self.k4[i]
                    + B65 * self.k5[i]);
        }
        sys.eval(t + A[5] * h, &self.ytmp, &mut self.k6)?;
        let mut max_err = 0.0f64;
        for i in 0..dim {
            yout[i] =
                y[i] + h * (C1 * dydt[i] + C3 * self.k3[i] + C4 * self.k4[i] + C6 * self.k6[i]);
            let err = h
                * (DC1 * dydt[i]
                    + DC3 * self.k3[i]
                    + DC4 * self.k4[i]
                    + DC5 * self.k5[i]
                    + DC6 * self.k6[i]);
            let scale = y[i].abs() + (h * dydt[i]).abs() + TINY;
            max_err = max_err.max((err / scale).abs());
            if !yout[i].is_finite() {
                return Err(Overflow);
            }
        }
        Ok(max_err)
    }
}

/// One trial Cash-Karp step of the flow from `state`; returns the proposed
/// state and the scaled error estimate. Exposed mainly for tests; the main
/// loop lives in [`integrate`].
pub fn step_cash_karp(
    sys: &CtdsSystem,
    state: &ContinuousState,
    h: f64,
) -> Result<(ContinuousState, f64), Overflow> {
    let n = sys.num_vars();
    let dim = sys.dim();
    let mut y = Vec::with_capacity(dim);
    y.extend_from_slice(&state.s);
    y.extend_from_slice(&state.log_a);
    let mut dydt = vec![0.0; dim];
    sys.eval(state.t, &y, &mut dydt)?;
    let mut stepper = CashKarp::new(dim);
    let mut yout = vec![0.0; dim];
    let err = stepper.step(sys, state.t, &y, &dydt, h, &mut yout)?;
    Ok((
        ContinuousState {
            s: yout[..n].to_vec(),
            log_a: yout[n..].to_vec(),
            t: state.t + h,
        },
        err,
    ))
}

/// σ_i = +1 if s_i ≥ 0 else −1 (the tie at exactly 0 rounds to +1).
pub fn rounded_assignment(s: &[f64]) -> Assignment {
    Assignment(s.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect())
}

/// Everything an observer sees after one accepted step.
pub struct StepEvent<'a> {
    pub t: f64,
    /// Post-clamp spins.
    pub s: &'a [f64],
    pub log_a: &'a [f64],
    /// Max |s_i| before clamping, to bound discretization excursions.
    pub pre_clamp_max_abs: f64,
    pub h_used: f64,
    pub error_estimate: f64,
}

/// Integrates the flow from `initial` until solved or a budget runs out.
pub fn integrate(
    sys: &CtdsSystem,
    initial: ContinuousState,
    control: &StepControl,
    trace: Option<&TraceSpec>,
) -> RunOutcome {
    integrate_observed(sys, initial, control, trace, |_| {})
}

/// [`integrate`] with a per-accepted-step observer (used by invariant tests
/// and diagnostics).
pub fn integrate_observed<F>(
    sys: &CtdsSystem,
    initial: ContinuousState,
    control: &StepControl,
    trace: Option<&TraceSpec>,
    mut observer: F,
) -> RunOutcome
where
    F: FnMut(&StepEvent),
{
    let n = sys.num_vars();
    let dim = sys.dim();
    let mut y = Vec::with_capacity(dim);
    y.extend_from_slice(&initial.s);
    y.extend_from_slice(&initial.log_a);
    let mut t = initial.t;
    let mut n_step: u64 = 0;
    let mut n_rejected: u64 = 0;
    let mut length_l = 0.0f64;

    let mut points: Vec<TrajectoryPoint> = Vec::new();
    let mut stride: u64 = 1;
    let mut prev_speed_vec: Option<(f64, Vec<f64>)> = None;

    let record = |y: &[f64],
                      t: f64,
                      dydt: &[f64],
                      points: &mut Vec<TrajectoryPoint>,
                      prev: &mut Option<(f64, Vec<f64>)>| {
        if let Some(spec) = trace {
            let (s, log_a) = y.split_at(n);
            let vel = &dydt[..n];
            let speed = vel.iter().map(|v| v * v).sum::<f64>().sqrt();
            let accel = match prev {
                Some((pt, pv)) if t > *pt => {
                    let dt = t - *pt;
                    (vel.iter()
                        .zip(pv.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>())
                    .sqrt()
                        / dt
                }
                _ => 0.0,
            };
            *prev = Some((t, vel.to_vec()));
            let e = sys.energy_e(s);
            let v = sys.energy_v(s, log_a).unwrap_or(f64::INFINITY);
            points.push(TrajectoryPoint {
                t,
                e,
                v,
                speed,
                accel,
                s_sel: spec.s_indices.iter().map(|&i| s[i]).collect(),
                log_a_sel: spec.a_indices.iter().map(|&i| log_a[i]).collect(),
            });
        }
    };

    let finish = |status: RunStatus,
                  t: f64,
                  n_step: u64,
                  n_rejected: u64,
                  length_l: f64,
                  witness: Option<Assignment>,
                  points: Vec<TrajectoryPoint>| {
        RunOutcome {
            status,
            t_final: t,
            n_step,
            n_rejected,
            length_l,
            witness,
            trace: trace.map(|_| points),
        }
    };

    // the initial rounding may already satisfy the formula
    let initial_rounded = rounded_assignment(&y[..n]);
    if sys.corner_satisfied(&initial_rounded.0) {
        return finish(RunStatus::Solved, t, 0, 0, 0.0, Some(initial_rounded), points);
    }

    let mut dydt = vec![0.0; dim];
    let mut yout = vec![0.0; dim];
    let mut stepper = CashKarp::new(dim);
    let mut h = control.h_init.clamp(control.h_min, control.h_max);

    loop {
        if t >= control.t_max {
            return finish(
                RunStatus::TimeBudgetExceeded,
                t,
                n_step,
                n_rejected,
                length_l,
                None,
                points,
            );
        }
        if n_step >= control.n_step_max {
            return finish(
                RunStatus::StepBudgetExceeded,
                t,
                n_step,
                n_rejected,
                length_l,
                None,
                points,
            );
        }
        if sys.eval(t, &y, &mut dydt).is_err() {
            return finish(
                RunStatus::Overflow,
                t,
                n_step,
                n_rejected,
                length_l,
                None,
                points,
            );
        }
        if n_step % stride == 0 {
            record(&y, t, &dydt, &mut points, &mut prev_speed_vec);
            if let Some(spec) = trace {
                if points.len() >= 2 * spec.max_points.max(1) {
                    // thin by dropping every other point and doubling stride
                    let mut i = 0;
                    points.retain(|_| {
                        let keep = i % 2 == 0;
                        i += 1;
                        keep
                    });
                    stride *= 2;
                }
            }
        }

        // adaptive trial loop
        let mut h_try = h.min(control.t_max - t).max(control.h_min);
        let accepted_err;
        let h_used;
        loop {
            match stepper.step(sys, t, &y, &dydt, h_try, &mut yout) {
                Err(Overflow) => {
                    return finish(
                        RunStatus::Overflow,
                        t,
                        n_step,
                        n_rejected,
                        length_l,
                        None,
                        points,
                    );
                }
                Ok(err) => {
                    if err <= control.eps || h_try <= control.h_min {
                        accepted_err = err;
                        h_used = h_try;
                        break;
                    }
                    n_rejected += 1;
                    // 4th-order shrink on rejection, at most a factor 10
                    let factor =
                        (control.safety * (control.eps / err).powf(0.25)).max(0.1);
                    h_try = (h_try * factor).max(control.h_min);
                }
            }
        }

        // accept: clamp spins to the box and account for the step
        let mut pre_clamp_max_abs = 0.0f64;
        let mut seg = 0.0f64;
        for i in 0..n {
            pre_clamp_max_abs = pre_clamp_max_abs.max(yout[i].abs());
            let clamped = yout[i].clamp(-1.0, 1.0);
            let d = clamped - y[i];
            seg += d * d;
            y[i] = clamped;
        }
        y[n..].copy_from_slice(&yout[n..]);
        length_l += seg.sqrt();
        t += h_used;
        n_step += 1;

        observer(&StepEvent {
            t,
            s: &y[..n],
            log_a: &y[n..],
            pre_clamp_max_abs,
            h_used,
            error_estimate: accepted_err,
        });

        let rounded = rounded_assignment(&y[..n]);
        if sys.corner_satisfied(&rounded.0) {
            if trace.is_some() {
                // final point for complete traces
                if sys.eval(t, &y, &mut dydt).is_ok() {
                    record(&y, t, &dydt, &mut points, &mut prev_speed_vec);
                }
            }
            return finish(
                RunStatus::Solved,
                t,
                n_step,
                n_rejected,
                length_l,
                Some(rounded),
                points,
            );
        }

        // 5th-order growth on acceptance, at most a factor 5
        let factor = if accepted_err > 0.0 {
            (control.safety * (control.eps / accepted_err).powf(0.2)).min(5.0)
        } else {
            5.0
        };
        h = (h_used * factor).clamp(control.h_min, control.h_max);
    }
}
