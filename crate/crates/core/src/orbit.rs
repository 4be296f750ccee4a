//! Machinery shared by the soliton phase-plane integrators.
//!
//! Both soliton systems are integrated in a regularized time `σ` with state
//! `[y, θ, x, s]`, so the boundaries of the phase strip become regular points
//! of the vector field. Samples are stored in increasing `σ`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::geometry::{fmt_g17, HPoint, PolyCurve};
use crate::ode::{dp_step, integrate, Direction, EventSpec, OdeProblem, StepControl, Trajectory};

pub(crate) type RegField = dyn Fn(&[f64], &mut [f64]) + Sync;

/// One accepted node of an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub sigma: f64,
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl OrbitSample {
    pub(crate) fn from_state(sigma: f64, st: &[f64]) -> Self {
        Self {
            sigma,
            y: st[0],
            theta: st[1],
            x: st[2],
            s: st[3],
        }
    }

    pub(crate) fn state(&self) -> [f64; 4] {
        [self.y, self.theta, self.x, self.s]
    }
}

/// Integration settings for soliton orbits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitControl {
    pub rtol: f64,
    pub atol: f64,
    /// Distance from an open boundary at which the terminal guard fires.
    pub eps_boundary: f64,
    /// Bound on the regularized-time span in each direction.
    pub sigma_max: f64,
    pub max_steps: usize,
}

impl Default for OrbitControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            eps_boundary: 1e-6,
            sigma_max: 1e4,
            max_steps: 2_000_000,
        }
    }
}

impl OrbitControl {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            atol: rtol * 1e-2,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.eps_boundary > 0.0 && self.eps_boundary < 0.1 && self.rtol > 0.0 && self.atol > 0.0 {
            Ok(())
        } else {
            Err(contract(format!("invalid orbit control {self:?}")))
        }
    }

    pub(crate) fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            s_max: self.sigma_max,
            max_steps: self.max_steps,
            ..StepControl::default()
        }
    }
}

/// Limit estimate at an open end of an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndLimit {
    pub y: f64,
    pub theta: f64,
    pub x: f64,
    /// Difference between the extrapolated value and the last recorded one.
    pub error: f64,
}

pub(crate) fn integrate_half(
    field: &RegField,
    start: [f64; 4],
    direction: Direction,
    events: &[EventSpec<'_>],
    ctrl: &OrbitControl,
) -> Result<Trajectory> {
    let problem = OdeProblem {
        rhs: Box::new(move |_, st: &[f64], out: &mut [f64]| field(st, out)),
        initial_state: start.to_vec(),
        s0: 0.0,
        direction,
    };
    integrate(&problem, events, &ctrl.step_control())
}

/// Joins a backward and a forward trajectory sharing the start node.
pub(crate) fn merge(back: &Trajectory, fwd: &Trajectory) -> Vec<OrbitSample> {
    back.nodes
        .iter()
        .rev()
        .chain(fwd.nodes.iter().skip(1))
        .map(|n| OrbitSample::from_state(n.s, &n.state))
        .collect()
}

/// Quadratic Lagrange extrapolation of `value` to `coord = 0` using the last
/// sample of `tail` (the one closest to the boundary) and two earlier samples
/// at roughly geometric distances. Returns the estimate and its deviation
/// from the last value.
pub(crate) fn extrapolate_to_boundary<'a>(
    tail: impl DoubleEndedIterator<Item = &'a OrbitSample>,
    coord: impl Fn(&OrbitSample) -> f64,
    value: impl Fn(&OrbitSample) -> f64,
) -> (f64, f64) {
    let mut it = tail.rev();
    let Some(last) = it.next() else {
        return (f64::NAN, f64::INFINITY);
    };
    let (b0, v0) = (coord(last), value(last));
    let mut picked: Vec<(f64, f64)> = vec![(b0, v0)];
    for smp in it {
        let b = coord(smp);
        let prev = picked.last().unwrap().0;
        if b >= 2.0 * prev.abs().max(f64::MIN_POSITIVE) {
            picked.push((b, value(smp)));
            if picked.len() == 3 {
                break;
            }
        }
    }
    let est = match picked.as_slice() {
        [(b0, v0), (b1, v1), (b2, v2)] => {
            let l0 = b1 * b2 / ((b0 - b1) * (b0 - b2));
            let l1 = b0 * b2 / ((b1 - b0) * (b1 - b2));
            let l2 = b0 * b1 / ((b2 - b0) * (b2 - b1));
            l0 * v0 + l1 * v1 + l2 * v2
        }
        [(b0, v0), (b1, v1)] => v0 - b0 * (v1 - v0) / (b1 - b0),
        _ => return (v0, f64::INFINITY),
    };
    (est, (est - v0).abs())
}

/// Densifies an orbit into a polyline: between consecutive samples extra
/// points are produced by genuine RK steps from the left sample, keeping each
/// chord below `max_chord` and each turn below `max_turn` radians.
pub(crate) fn densify(field: &RegField, samples: &[OrbitSample], max_chord: f64, max_turn: f64) -> Vec<OrbitSample> {
    let rhs = |_: f64, st: &[f64], out: &mut [f64]| field(st, out);
    let mut out = Vec::with_capacity(samples.len());
    for w in samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        out.push(a);
        let chord = (b.x - a.x).hypot(b.y - a.y);
        let turn = (b.theta - a.theta).abs();
        let m = ((chord / max_chord).max(turn / max_turn)).ceil().max(1.0) as usize;
        if m <= 1 {
            continue;
        }
        let st = a.state();
        let mut f = [0.0; 4];
        field(&st, &mut f);
        let dsig = b.sigma - a.sigma;
        for j in 1..m {
            let tau = dsig * j as f64 / m as f64;
            let y = dp_step(&rhs, a.sigma, &st, &f, tau).y;
            out.push(OrbitSample::from_state(a.sigma + tau, &y));
        }
    }
    if let Some(&last) = samples.last() {
        out.push(last);
    }
    out
}

pub(crate) fn polyline(samples: &[OrbitSample]) -> Result<PolyCurve> {
    let mut pts: Vec<HPoint> = Vec::with_capacity(samples.len());
    for smp in samples {
        let p = HPoint::new(smp.x, smp.y)?;
        if pts.last().is_some_and(|q: &HPoint| q.x == p.x && q.y == p.y) {
            continue;
        }
        pts.push(p);
    }
    PolyCurve::new(pts, false)
}

/// Window used when sampling a soliton uniformly in arc length. Sampling
/// stops once θ comes within `theta_margin` of a boundary of the strip or `y`
/// drops below `y_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub theta_margin: f64,
    pub y_min: f64,
    /// Upper bound on arc length in each direction.
    pub s_max: f64,
}

impl Default for SampleWindow {
    fn default() -> Self {
        Self {
            theta_margin: 0.2,
            y_min: 0.2,
            s_max: 20.0,
        }
    }
}

/// Samples an arc-length system with fixed RK steps of size `mesh` in both
/// directions from `start`, while `inside` holds. Returns `(x, y)` ordered by
/// increasing arc length.
pub(crate) fn uniform_arclength(
    field: &(dyn Fn(&[f64], &mut [f64]) + Sync),
    start: [f64; 3],
    mesh: f64,
    s_max: f64,
    inside: impl Fn(&[f64]) -> bool,
) -> Result<PolyCurve> {
    if !(mesh > 0.0) {
        return Err(contract("mesh must be positive"));
    }
    let rhs = |_: f64, st: &[f64], out: &mut [f64]| field(st, out);
    let count = (s_max / mesh).ceil() as usize;
    let run = |h: f64| -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        let mut y = start.to_vec();
        let mut f = vec![0.0; 3];
        for _ in 0..count {
            rhs(0.0, &y, &mut f);
            let next = dp_step(&rhs, 0.0, &y, &f, h).y;
            if !inside(&next) || next.iter().any(|v| !v.is_finite()) {
                break;
            }
            pts.push((next[2], next[0]));
            y = next;
        }
        pts
    };
    let back = run(-mesh);
    let fwd = run(mesh);
    let mut pts: Vec<(f64, f64)> = back.into_iter().rev().collect();
    pts.push((start[2], start[0]));
    pts.extend(fwd);
    PolyCurve::from_xy(&pts, false)
}

pub(crate) fn write_samples_csv<W: Write>(
    samples: &[OrbitSample],
    kappa: impl Fn(&OrbitSample) -> f64,
    w: W,
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["s", "x", "y", "theta", "kappa_h"])?;
    for smp in samples {
        wr.write_record([
            fmt_g17(smp.s),
            fmt_g17(smp.x),
            fmt_g17(smp.y),
            fmt_g17(smp.theta),
            fmt_g17(kappa(smp)),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
