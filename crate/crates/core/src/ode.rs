//! Adaptive explicit Runge–Kutta integration with event detection.
//!
//! The stepper is the Dormand–Prince 5(4) pair (FSAL) with a PI step-size
//! controller. Accepted nodes keep the state derivative so the trajectory can
//! be evaluated between nodes with cubic Hermite interpolation. Event roots are
//! bracketed between accepted nodes and polished with genuine RK steps from
//! the left node, so an event state carries the same accuracy as a node.

use crate::error::{contract, Result};

/// Right-hand side `f(s, state, out)`.
pub type Rhs<'a> = dyn Fn(f64, &[f64], &mut [f64]) + 'a;

/// Event guard `g(s, state)`; an event fires where `g` changes sign.
pub type Guard<'a> = dyn Fn(f64, &[f64]) -> f64 + 'a;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Crossing direction, measured along the direction of integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

pub struct OdeProblem<'a> {
    pub rhs: Box<Rhs<'a>>,
    pub initial_state: Vec<f64>,
    pub s0: f64,
    pub direction: Direction,
}

pub struct EventSpec<'a> {
    pub guard: Box<Guard<'a>>,
    pub direction: Crossing,
    pub terminal: bool,
}

impl<'a> EventSpec<'a> {
    pub fn new(guard: impl Fn(f64, &[f64]) -> f64 + 'a, direction: Crossing, terminal: bool) -> Self {
        Self {
            guard: Box::new(guard),
            direction,
            terminal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; `None` selects one automatically.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    /// Maximum integration span `|s − s0|`.
    pub s_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: None,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            s_max: 1e4,
            max_steps: 5_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.h_min > 0.0
            && self.h_max > self.h_min
            && self.s_max > 0.0
            && self.h_init.is_none_or(|h| h > 0.0 && h.is_finite());
        if ok {
            Ok(())
        } else {
            Err(contract(format!("invalid step control {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub s: f64,
    pub state: Vec<f64>,
    pub deriv: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventHit {
    pub s: f64,
    pub state: Vec<f64>,
    /// Index into the event list passed to [`integrate`].
    pub event: usize,
    /// `dg/ds` at the root, by central difference along the trajectory.
    pub slope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// A terminal event fired; carries the event index.
    EventStop(usize),
    /// The right-hand side became non-finite.
    BlowUp,
    /// The controller needed a step below `h_min`.
    StepUnderflow,
    /// `s_max` or the step budget was exhausted.
    ReachedBound,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub nodes: Vec<Node>,
    pub events: Vec<EventHit>,
    pub termination: Termination,
    pub direction: Direction,
}

impl Trajectory {
    pub fn first(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn last(&self) -> &Node {
        self.nodes.last().expect("trajectory always holds the initial node")
    }

    /// Cubic Hermite interpolation between accepted nodes. Returns `None`
    /// outside the integrated span.
    pub fn interpolate(&self, s: f64) -> Option<Vec<f64>> {
        let sign = self.direction.sign();
        let key = |n: &Node| sign * n.s;
        let target = sign * s;
        let (lo, hi) = (key(self.first()), key(self.last()));
        if !(lo..=hi).contains(&target) {
            return None;
        }
        let j = self.nodes.partition_point(|n| key(n) <= target);
        if j == 0 {
            return Some(self.nodes[0].state.clone());
        }
        if j >= self.nodes.len() {
            return Some(self.last().state.clone());
        }
        let (a, b) = (&self.nodes[j - 1], &self.nodes[j]);
        Some(hermite(a, b, s))
    }

    pub fn event_hits(&self, event: usize) -> impl Iterator<Item = &EventHit> {
        self.events.iter().filter(move |e| e.event == event)
    }
}

fn hermite(a: &Node, b: &Node, s: f64) -> Vec<f64> {
    let h = b.s - a.s;
    let u = (s - a.s) / h;
    let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    let h10 = u * (1.0 - u) * (1.0 - u);
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    (0..a.state.len())
        .map(|i| h00 * a.state[i] + h10 * h * a.deriv[i] + h01 * b.state[i] + h11 * h * b.deriv[i])
        .collect()
}

// Dormand–Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step of signed size `h` from `(s, y)` with `f0 = f(s, y)`.
/// Returns the 5th-order state, its derivative (the FSAL stage) and the
/// embedded error estimate.
pub(crate) struct StepOut {
    pub y: Vec<f64>,
    pub f: Vec<f64>,
    pub err: Vec<f64>,
}

pub(crate) fn dp_step(rhs: &Rhs<'_>, s: f64, y: &[f64], f0: &[f64], h: f64) -> StepOut {
    let n = y.len();
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    k[0].copy_from_slice(f0);
    let mut tmp = vec![0.0; n];
    for stage in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(stage) {
                acc += A[stage][j] * kj[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        let (done, rest) = k.split_at_mut(stage);
        let _ = done;
        rhs(s + C[stage] * h, &tmp, &mut rest[0]);
    }
    // stage 7 was evaluated at the 5th-order solution, which is `tmp`
    let err = (0..n)
        .map(|i| h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>())
        .collect();
    StepOut {
        y: tmp,
        f: k[6].clone(),
        err,
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], ctrl: &StepControl) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = ctrl.atol + ctrl.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn initial_step(rhs: &Rhs<'_>, s0: f64, y0: &[f64], f0: &[f64], sign: f64, ctrl: &StepControl) -> f64 {
    // Hairer–Nørsett–Wanner starting-step heuristic.
    let sc: Vec<f64> = y0.iter().map(|y| ctrl.atol + ctrl.rtol * y.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(ctrl.h_max).min(ctrl.s_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + sign * h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs(s0 + sign * h0, &y1, &mut f1);
    if !all_finite(&f1) {
        return (h0 * 0.01).max(ctrl.h_min);
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(ctrl.h_max).max(ctrl.h_min)
}

fn crosses(g0: f64, g1: f64, dir: Crossing) -> bool {
    let rising = g0 < 0.0 && g1 >= 0.0;
    let falling = g0 > 0.0 && g1 <= 0.0;
    match dir {
        Crossing::Rising => rising,
        Crossing::Falling => falling,
        Crossing::Any => rising || falling,
    }
}

/// Integrates `problem` until a terminal event, blow-up, step underflow or the
/// span bound, recording every accepted node and every event crossing.
pub fn integrate(problem: &OdeProblem<'_>, events: &[EventSpec<'_>], ctrl: &StepControl) -> Result<Trajectory> {
    ctrl.validate()?;
    let rhs = problem.rhs.as_ref();
    let sign = problem.direction.sign();
    let n = problem.initial_state.len();
    let s0 = problem.s0;
    let y0 = problem.initial_state.clone();
    let mut f0 = vec![0.0; n];
    rhs(s0, &y0, &mut f0);

    let mut traj = Trajectory {
        nodes: vec![Node {
            s: s0,
            state: y0.clone(),
            deriv: f0.clone(),
        }],
        events: Vec::new(),
        termination: Termination::ReachedBound,
        direction: problem.direction,
    };
    if !all_finite(&y0) || !all_finite(&f0) {
        traj.termination = Termination::BlowUp;
        return Ok(traj);
    }

    let mut guards: Vec<f64> = events.iter().map(|e| (e.guard)(s0, &y0)).collect();
    let mut h = match ctrl.h_init {
        Some(h) => h.min(ctrl.h_max),
        None => initial_step(rhs, s0, &y0, &f0, sign, ctrl),
    };
    let (mut s, mut y, mut f) = (s0, y0, f0);
    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut steps = 0usize;

    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    const BETA: f64 = 0.04;
    let expo = 0.2 - 0.75 * BETA;

    loop {
        if steps >= ctrl.max_steps {
            traj.termination = Termination::ReachedBound;
            break;
        }
        let remaining = ctrl.s_max - sign * (s - s0);
        if remaining <= 0.0 {
            traj.termination = Termination::ReachedBound;
            break;
        }
        let mut last_step = false;
        if h >= remaining {
            h = remaining;
            last_step = true;
        }
        if h < ctrl.h_min {
            traj.termination = Termination::StepUnderflow;
            break;
        }

        let out = dp_step(rhs, s, &y, &f, sign * h);
        if !all_finite(&out.y) || !all_finite(&out.f) {
            h *= 0.25;
            if h < ctrl.h_min {
                traj.termination = Termination::BlowUp;
                break;
            }
            rejected_last = true;
            continue;
        }
        let err = error_norm(&out.err, &y, &out.y, ctrl);
        if err > 1.0 {
            let fac11 = err.powf(expo);
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            rejected_last = true;
            continue;
        }

        // accepted
        steps += 1;
        let s_new = if last_step { s0 + sign * ctrl.s_max } else { s + sign * h };
        let new_guards: Vec<f64> = events.iter().map(|e| (e.guard)(s_new, &out.y)).collect();

        let mut hits: Vec<(f64, EventHit, bool)> = Vec::new();
        for (i, spec) in events.iter().enumerate() {
            if crosses(guards[i], new_guards[i], spec.direction) {
                let hit = locate_event(rhs, spec, i, s, &y, &f, s_new - s, ctrl);
                hits.push((sign * (hit.s - s), hit, spec.terminal));
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut stop: Option<(usize, EventHit)> = None;
        for (_, hit, terminal) in hits {
            if terminal {
                stop = Some((hit.event, hit));
                break;
            }
            traj.events.push(hit);
        }
        if let Some((idx, hit)) = stop {
            let mut deriv = vec![0.0; n];
            rhs(hit.s, &hit.state, &mut deriv);
            if hit.s != s {
                traj.nodes.push(Node {
                    s: hit.s,
                    state: hit.state.clone(),
                    deriv,
                });
            }
            traj.events.push(hit);
            traj.termination = Termination::EventStop(idx);
            return Ok(traj);
        }

        s = s_new;
        y = out.y;
        f = out.f;
        guards = new_guards;
        traj.nodes.push(Node {
            s,
            state: y.clone(),
            deriv: f.clone(),
        });
        if last_step {
            traj.termination = Termination::ReachedBound;
            break;
        }

        let fac11 = err.powf(expo);
        let mut fac = fac11 / err_old.powf(BETA);
        fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;
        if rejected_last {
            h_new = h_new.min(h);
        }
        err_old = err.max(1e-4);
        rejected_last = false;
        h = h_new.min(ctrl.h_max);
    }
    Ok(traj)
}

/// Finds the root of `g(s_a + τ, step(τ))` for τ in `(0, h]` with the Illinois
/// variant of regula falsi, evaluating states with direct RK steps.
#[allow(clippy::too_many_arguments)]
fn locate_event(
    rhs: &Rhs<'_>,
    spec: &EventSpec<'_>,
    index: usize,
    s_a: f64,
    y_a: &[f64],
    f_a: &[f64],
    h: f64,
    ctrl: &StepControl,
) -> EventHit {
    let state_at = |tau: f64| -> Vec<f64> {
        if tau == 0.0 {
            y_a.to_vec()
        } else {
            dp_step(rhs, s_a, y_a, f_a, tau).y
        }
    };
    let g = |tau: f64, st: &[f64]| (spec.guard)(s_a + tau, st);

    let (mut t0, mut t1) = (0.0, h);
    let mut y1 = state_at(t1);
    let mut g0 = g(t0, y_a);
    let mut g1 = g(t1, &y1);
    let mut best = (t1, y1.clone(), g1);
    let mut side = 0i8;
    for _ in 0..200 {
        if g1.abs() < ctrl.atol * 1e-2 || (t1 - t0).abs() <= 4.0 * f64::EPSILON * (s_a.abs() + h.abs()) {
            break;
        }
        let tm = if g1 != g0 { (t0 * g1 - t1 * g0) / (g1 - g0) } else { 0.5 * (t0 + t1) };
        let tm = if (tm - t0) * (tm - t1) < 0.0 { tm } else { 0.5 * (t0 + t1) };
        let ym = state_at(tm);
        let gm = g(tm, &ym);
        if gm.abs() < best.2.abs() {
            best = (tm, ym.clone(), gm);
        }
        if gm == 0.0 {
            best = (tm, ym, gm);
            break;
        }
        if (gm > 0.0) == (g1 > 0.0) {
            t1 = tm;
            g1 = gm;
            y1 = ym;
            if side == 1 {
                g0 *= 0.5;
            }
            side = 1;
        } else {
            t0 = tm;
            g0 = gm;
            if side == -1 {
                g1 *= 0.5;
            }
            side = -1;
        }
        let _ = &y1;
    }
    let (tau, state, _) = best;
    let d = 1e-6 * h.abs().max(1e-300);
    let dm = (tau - d).max(0.0f64.min(h)).min(0.0f64.max(h));
    let dp = (tau + d).max(0.0f64.min(h)).min(0.0f64.max(h));
    let slope = if dp != dm {
        (g(dp, &state_at(dp)) - g(dm, &state_at(dm))) / (dp - dm)
    } else {
        0.0
    };
    EventHit {
        s: s_a + tau,
        state,
        event: index,
        slope,
    }
}

/// Takes `count` fixed steps of signed size `h` with the 5th-order Dormand–
/// Prince solution, returning every state including the initial one. Used for
/// uniform sampling inside regions where the field is smooth.
pub fn fixed_steps(rhs: &Rhs<'_>, s0: f64, y0: &[f64], h: f64, count: usize) -> Vec<(f64, Vec<f64>)> {
    let mut out = Vec::with_capacity(count + 1);
    let mut s = s0;
    let mut y = y0.to_vec();
    let mut f = vec![0.0; y.len()];
    rhs(s, &y, &mut f);
    out.push((s, y.clone()));
    for k in 1..=count {
        let step = dp_step(rhs, s, &y, &f, h);
        s = s0 + h * k as f64;
        y = step.y;
        f = step.f;
        out.push((s, y.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn exp_problem(direction: Direction) -> OdeProblem<'static> {
        OdeProblem {
            rhs: Box::new(|_, y, dy| dy[0] = y[0]),
            initial_state: vec![1.0],
            s0: 0.0,
            direction,
        }
    }

    fn ctrl(rtol: f64, span: f64) -> StepControl {
        StepControl {
            rtol,
            atol: rtol * 1e-2,
            s_max: span,
            ..StepControl::default()
        }
    }

    #[test]
    fn exponential_growth() {
        for rtol in [1e-6, 1e-8, 1e-10] {
            let t = integrate(&exp_problem(Direction::Forward), &[], &ctrl(rtol, 1.0)).unwrap();
            assert_eq!(t.termination, Termination::ReachedBound);
            let last = t.last();
            assert_eq!(last.s, 1.0);
            let e = std::f64::consts::E;
            assert!((last.state[0] - e).abs() / e < rtol, "rtol {rtol}: {}", last.state[0]);
        }
    }

    #[test]
    fn harmonic_oscillator_period() {
        let p = OdeProblem {
            rhs: Box::new(|_, y, dy| {
                dy[0] = -y[1];
                dy[1] = y[0];
            }),
            initial_state: vec![1.0, 0.0],
            s0: 0.0,
            direction: Direction::Forward,
        };
        let rtol = 1e-9;
        let t = integrate(&p, &[], &ctrl(rtol, 2.0 * PI)).unwrap();
        let y = &t.last().state;
        assert!((y[0] - 1.0).abs() < 10.0 * rtol && y[1].abs() < 10.0 * rtol, "{y:?}");
    }

    #[test]
    fn event_at_ln2() {
        let p = OdeProblem {
            rhs: Box::new(|_, y, dy| dy[0] = -y[0]),
            initial_state: vec![1.0],
            s0: 0.0,
            direction: Direction::Forward,
        };
        let c = ctrl(1e-10, 5.0);
        let ev = [EventSpec::new(|_, y| y[0] - 0.5, Crossing::Falling, true)];
        let t = integrate(&p, &ev, &c).unwrap();
        assert_eq!(t.termination, Termination::EventStop(0));
        let hit = &t.events[0];
        assert!((hit.s - LN_2).abs() < c.atol * 10.0, "{}", hit.s - LN_2);
        assert!((hit.state[0] - 0.5).abs() < c.atol);
        assert!((hit.slope + 0.5).abs() < 1e-6);
        assert_eq!(t.last().s, hit.s);
    }

    #[test]
    fn non_terminal_events_are_recorded_in_order() {
        let p = OdeProblem {
            rhs: Box::new(|_, y, dy| {
                dy[0] = -y[1];
                dy[1] = y[0];
            }),
            initial_state: vec![1.0, 0.0],
            s0: 0.0,
            direction: Direction::Forward,
        };
        let ev = [EventSpec::new(|_, y| y[0], Crossing::Any, false)];
        let t = integrate(&p, &ev, &ctrl(1e-10, 3.0 * PI)).unwrap();
        let roots: Vec<f64> = t.events.iter().map(|e| e.s).collect();
        assert_eq!(roots.len(), 3);
        for (k, r) in roots.iter().enumerate() {
            assert!((r - (k as f64 + 0.5) * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_returns_to_start() {
        let rtol = 1e-10;
        let fwd = integrate(&exp_problem(Direction::Forward), &[], &ctrl(rtol, 2.0)).unwrap();
        let end = fwd.last().clone();
        let back = OdeProblem {
            rhs: Box::new(|_, y, dy| dy[0] = y[0]),
            initial_state: end.state.clone(),
            s0: end.s,
            direction: Direction::Backward,
        };
        let t = integrate(&back, &[], &ctrl(rtol, 2.0)).unwrap();
        let last = t.last();
        assert!(last.s.abs() < 1e-14);
        assert!((last.state[0] - 1.0).abs() < 100.0 * rtol);
        // nodes strictly decreasing in s
        assert!(t.nodes.windows(2).all(|w| w[1].s < w[0].s));
    }

    #[test]
    fn blow_up_is_a_termination() {
        let p = OdeProblem {
            rhs: Box::new(|_, y, dy| dy[0] = 1.0 / (1.0 - y[0]).sqrt()),
            initial_state: vec![0.0],
            s0: 0.0,
            direction: Direction::Forward,
        };
        let t = integrate(&p, &[], &ctrl(1e-8, 10.0)).unwrap();
        assert!(matches!(t.termination, Termination::BlowUp | Termination::StepUnderflow));
        assert!(t.last().state[0] < 1.0);
    }

    #[test]
    fn invalid_control_is_rejected() {
        let bad = StepControl {
            rtol: 0.0,
            ..StepControl::default()
        };
        assert!(integrate(&exp_problem(Direction::Forward), &[], &bad).is_err());
    }

    #[test]
    fn hermite_interpolation_is_accurate() {
        let t = integrate(&exp_problem(Direction::Forward), &[], &ctrl(1e-10, 1.0)).unwrap();
        for k in 0..=20 {
            let s = k as f64 / 20.0;
            let y = t.interpolate(s).unwrap()[0];
            assert!((y - s.exp()).abs() < 1e-6, "s = {s}");
        }
        assert!(t.interpolate(1.5).is_none());
    }

    #[test]
    fn fixed_steps_match_closed_form() {
        let rhs = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0];
        let pts = fixed_steps(&rhs, 0.0, &[1.0], 1e-3, 1000);
        let (s, y) = pts.last().unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!((y[0] - std::f64::consts::E).abs() < 1e-13);
    }
}
