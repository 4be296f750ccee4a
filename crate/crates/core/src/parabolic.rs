//! Parabolic solitons: curves moved by the ICSF through horizontal translation.
//!
//! With `γ = (x, y)` parametrized by Euclidean arc length and tangent angle θ,
//! a parabolic soliton solves
//!
//! ```text
//! x' = cos θ,   y' = sin θ,   θ' = 1/sin θ − cos θ / y
//! ```
//!
//! on the strip `y > 0, θ ∈ (0, π)`. The orbit is integrated in the time
//! `dσ = ds / (y sin θ)`, in which the strip boundaries are crossed
//! transversally, so approaching them costs nothing special.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{PolyCurve, DEFAULT_Y_FLOOR};
use crate::ode::{Crossing, Direction, EventSpec, Termination, Trajectory};
use crate::orbit::{
    densify, extrapolate_to_boundary, integrate_half, merge, polyline, uniform_arclength, write_samples_csv,
    EndLimit, OrbitControl, OrbitSample, SampleWindow,
};

/// Right-hand side `(y', θ')` in arc length.
pub fn para_rhs(y: f64, theta: f64) -> Result<(f64, f64)> {
    if !(y > 0.0) || !(theta > 0.0 && theta < PI) {
        return Err(domain(format!("({y}, {theta}) is outside the parabolic phase strip")));
    }
    let (s, c) = theta.sin_cos();
    Ok((s, 1.0 / s - c / y))
}

/// The locus `y = ½ sin 2θ` where θ' vanishes.
pub fn gamma_curve(theta: f64) -> f64 {
    0.5 * (2.0 * theta).sin()
}

/// Regularized field on state `[y, θ, x, s]`. `strip` is `+1` on `(0, π)` and
/// `−1` on the reflected strip `(−π, 0)`.
pub(crate) fn regularized_field(strip: f64) -> impl Fn(&[f64], &mut [f64]) + Sync {
    move |st, out| {
        let (y, th) = (st[0], st[1]);
        let (s, c) = th.sin_cos();
        let g = strip * y * s;
        out[0] = g * s;
        out[1] = strip * (y - s * c);
        out[2] = g * c;
        out[3] = g;
    }
}

fn arclength_field(st: &[f64], out: &mut [f64]) {
    let (y, th) = (st[0], st[1]);
    let (s, c) = th.sin_cos();
    out[0] = s;
    out[1] = 1.0 / s - c / y;
    out[2] = c;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrbitType {
    TypeI,
    TypeII,
    OrthogonalToXAxis,
    Undetermined,
}

impl std::fmt::Display for OrbitType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// How one end of an orbit was resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrbitEnd {
    /// θ reached the far strip boundary (θ → π on the canonical strip).
    ThetaPi,
    /// y reached the ideal boundary.
    YZero,
    /// θ reached the near strip boundary (θ → 0 on the canonical strip).
    ThetaZero,
    /// Integration stopped without reaching a boundary guard.
    Unresolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaCrossing {
    pub s: f64,
    pub y: f64,
    pub theta: f64,
    /// The guard crossed with a vanishing slope (a touch rather than a cut).
    pub tangential: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub y0: f64,
    pub theta0: f64,
    /// Accepted nodes in increasing regularized time (and arc length).
    pub samples: Vec<OrbitSample>,
    /// Index of the initial condition in `samples`.
    pub start_index: usize,
    pub gamma_crossings: Vec<GammaCrossing>,
    /// Arc-length values where θ crosses π/2.
    pub vertical_crossings: Vec<f64>,
    pub label: OrbitType,
    pub backward_end: OrbitEnd,
    pub forward_end: OrbitEnd,
    pub backward_limit: EndLimit,
    pub forward_limit: EndLimit,
    pub diagnostics: Option<String>,
    strip: f64,
}

const EV_GAMMA: usize = 0;
const EV_THETA_PI: usize = 1;
const EV_Y_ZERO: usize = 2;
const EV_THETA_ZERO: usize = 3;
const EV_VERTICAL: usize = 4;
const TANGENTIAL_SLOPE: f64 = 1e-8;

fn end_of(t: &Trajectory) -> OrbitEnd {
    match t.termination {
        Termination::EventStop(EV_THETA_PI) => OrbitEnd::ThetaPi,
        Termination::EventStop(EV_Y_ZERO) => OrbitEnd::YZero,
        Termination::EventStop(EV_THETA_ZERO) => OrbitEnd::ThetaZero,
        _ => OrbitEnd::Unresolved,
    }
}

fn limit_at<'a>(tail: impl DoubleEndedIterator<Item = &'a OrbitSample> + Clone, end: OrbitEnd) -> EndLimit {
    let last = *tail.clone().next_back().expect("non-empty tail");
    let pick = |coord: &dyn Fn(&OrbitSample) -> f64, boundary: (Option<f64>, Option<f64>)| {
        let (y, ey) = match boundary.0 {
            Some(v) => (v, 0.0),
            None => extrapolate_to_boundary(tail.clone(), coord, |s| s.y),
        };
        let (th, et) = match boundary.1 {
            Some(v) => (v, 0.0),
            None => extrapolate_to_boundary(tail.clone(), coord, |s| s.theta),
        };
        let (x, ex) = extrapolate_to_boundary(tail.clone(), coord, |s| s.x);
        EndLimit {
            y,
            theta: th,
            x,
            error: ey.max(et).max(ex),
        }
    };
    match end {
        OrbitEnd::ThetaPi => pick(&|s| PI - s.theta, (None, Some(PI))),
        OrbitEnd::YZero => pick(&|s| s.y, (Some(0.0), None)),
        OrbitEnd::ThetaZero => pick(&|s| s.theta, (None, Some(0.0))),
        OrbitEnd::Unresolved => EndLimit {
            y: last.y,
            theta: last.theta,
            x: last.x,
            error: f64::INFINITY,
        },
    }
}

/// Integrates the orbit through `(y0, θ0)` in both directions, records Γ and
/// θ = π/2 crossings, estimates the limits at both ends and classifies it.
pub fn integrate_orbit(y0: f64, theta0: f64, ctrl: &OrbitControl) -> Result<OrbitTrace> {
    ctrl.validate()?;
    let eps = ctrl.eps_boundary;
    para_rhs(y0, theta0)?;
    if y0 <= eps || theta0 <= eps || theta0 >= PI - eps {
        return Err(domain(format!(
            "start ({y0}, {theta0}) lies within the boundary tolerance {eps}"
        )));
    }
    let field = regularized_field(1.0);
    let events = [
        EventSpec::new(|_, st| st[0] - gamma_curve(st[1]), Crossing::Any, false),
        EventSpec::new(move |_, st| st[1] - (PI - eps), Crossing::Rising, true),
        EventSpec::new(move |_, st| st[0] - eps, Crossing::Falling, true),
        EventSpec::new(move |_, st| st[1] - eps, Crossing::Falling, true),
        EventSpec::new(|_, st| st[1] - FRAC_PI_2, Crossing::Any, false),
    ];
    let start = [y0, theta0, 0.0, 0.0];
    let back = integrate_half(&field, start, Direction::Backward, &events, ctrl)?;
    let fwd = integrate_half(&field, start, Direction::Forward, &events, ctrl)?;

    let samples = merge(&back, &fwd);
    let start_index = back.nodes.len() - 1;
    let mut gamma_crossings = Vec::new();
    let mut vertical_crossings = Vec::new();
    for hit in back.events.iter().rev().chain(fwd.events.iter()) {
        match hit.event {
            EV_GAMMA => gamma_crossings.push(GammaCrossing {
                s: hit.state[3],
                y: hit.state[0],
                theta: hit.state[1],
                tangential: hit.slope.abs() < TANGENTIAL_SLOPE,
            }),
            EV_VERTICAL => vertical_crossings.push(hit.state[3]),
            _ => {}
        }
    }

    let backward_end = end_of(&back);
    let forward_end = end_of(&fwd);
    let backward_limit = limit_at(samples[..=start_index].iter().rev(), backward_end);
    let forward_limit = limit_at(samples[start_index..].iter(), forward_end);

    let starts_inside = y0 <= gamma_curve(theta0);
    let above_vertical = samples.iter().all(|s| s.theta > FRAC_PI_2);
    let mut diagnostics = None;
    let label = match (backward_end, forward_end) {
        (_, end) if end != OrbitEnd::ThetaPi => {
            diagnostics = Some(format!("forward end unresolved: {:?}", fwd.termination));
            OrbitType::Undetermined
        }
        (OrbitEnd::YZero, _) if !gamma_crossings.is_empty() || starts_inside => OrbitType::TypeI,
        (OrbitEnd::YZero, _) if above_vertical => OrbitType::OrthogonalToXAxis,
        (OrbitEnd::ThetaZero, _) if gamma_crossings.is_empty() => OrbitType::TypeII,
        (end, _) => {
            diagnostics = Some(format!(
                "backward end {end:?} ({:?}) with {} Γ crossings",
                back.termination,
                gamma_crossings.len()
            ));
            OrbitType::Undetermined
        }
    };

    Ok(OrbitTrace {
        y0,
        theta0,
        samples,
        start_index,
        gamma_crossings,
        vertical_crossings,
        label,
        backward_end,
        forward_end,
        backward_limit,
        forward_limit,
        diagnostics,
        strip: 1.0,
    })
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a;
    while a <= -PI {
        a += 2.0 * PI;
    }
    while a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// The symmetric solution `s ↦ (y(−s), θ(−s) − π)`, with angles kept in
/// `(−π, π]`. The same planar curve traversed in the opposite direction.
pub fn reflect_orbit(trace: &OrbitTrace) -> OrbitTrace {
    let map = |s: &OrbitSample| OrbitSample {
        sigma: -s.sigma,
        s: -s.s,
        x: s.x,
        y: s.y,
        theta: wrap_angle(s.theta - PI),
    };
    let map_limit = |l: &EndLimit| EndLimit {
        theta: wrap_angle(l.theta - PI),
        ..*l
    };
    OrbitTrace {
        y0: trace.y0,
        theta0: wrap_angle(trace.theta0 - PI),
        samples: trace.samples.iter().rev().map(map).collect(),
        start_index: trace.samples.len() - 1 - trace.start_index,
        gamma_crossings: trace
            .gamma_crossings
            .iter()
            .rev()
            .map(|g| GammaCrossing {
                s: -g.s,
                theta: wrap_angle(g.theta - PI),
                ..*g
            })
            .collect(),
        vertical_crossings: trace.vertical_crossings.iter().rev().map(|s| -s).collect(),
        label: trace.label,
        backward_end: trace.forward_end,
        forward_end: trace.backward_end,
        backward_limit: map_limit(&trace.forward_limit),
        forward_limit: map_limit(&trace.backward_limit),
        diagnostics: trace.diagnostics.clone(),
        strip: -trace.strip,
    }
}

impl OrbitTrace {
    /// `+1` for an orbit on `(0, π)`, `−1` for a reflected one.
    pub fn strip(&self) -> f64 {
        self.strip
    }

    pub fn s_span(&self) -> (f64, f64) {
        (self.samples[0].s, self.samples[self.samples.len() - 1].s)
    }

    /// The horizontal asymptote `Y` approached as θ → π.
    pub fn asymptote(&self) -> Option<f64> {
        [(self.forward_end, self.forward_limit), (self.backward_end, self.backward_limit)]
            .into_iter()
            .find(|(e, _)| *e == OrbitEnd::ThetaPi)
            .map(|(_, l)| l.y)
    }

    /// The second horizontal asymptote `Ȳ` of a Type II orbit.
    pub fn lower_asymptote(&self) -> Option<f64> {
        [(self.forward_end, self.forward_limit), (self.backward_end, self.backward_limit)]
            .into_iter()
            .find(|(e, _)| *e == OrbitEnd::ThetaZero)
            .map(|(_, l)| l.y)
    }

    /// The limit where the orbit meets `y = 0`, if it does.
    pub fn axis_limit(&self) -> Option<EndLimit> {
        [(self.forward_end, self.forward_limit), (self.backward_end, self.backward_limit)]
            .into_iter()
            .find(|(e, _)| *e == OrbitEnd::YZero)
            .map(|(_, l)| l)
    }

    pub fn record(&self) -> ClassificationRecord {
        ClassificationRecord {
            y0: self.y0,
            theta0: self.theta0,
            label: self.label,
            y_asymptote: self.asymptote(),
            y_bar: self.lower_asymptote(),
            s_span: self.s_span(),
            gamma_crossings: self.gamma_crossings.clone(),
        }
    }

    /// Writes `s,x,y,theta,kappa_h` for every node, with `κ = y / sin θ`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_samples_csv(&self.samples, |s| s.y / s.theta.sin(), w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub y0: f64,
    pub theta0: f64,
    #[serde(rename = "type")]
    pub label: OrbitType,
    #[serde(rename = "Y")]
    pub y_asymptote: Option<f64>,
    #[serde(rename = "Y_bar")]
    pub y_bar: Option<f64>,
    pub s_span: (f64, f64),
    pub gamma_crossings: Vec<GammaCrossing>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonDescriptors {
    #[serde(rename = "Y")]
    pub y_asymptote: f64,
    #[serde(rename = "Y_bar")]
    pub y_bar: Option<f64>,
    pub orthogonal_hit: bool,
    pub concave: bool,
    pub x_extent: (f64, f64),
    /// `x'(y)` at the lowest and highest sample.
    pub slope_low: f64,
    pub slope_high: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonCurve {
    pub curve: PolyCurve,
    pub samples: Vec<OrbitSample>,
    pub descriptors: SolitonDescriptors,
}

/// `x''(y) = −(y − sin θ cos θ) / (y sin⁴ θ)` along a parabolic soliton.
pub fn x_second_derivative(y: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    -(y - s * c) / (y * s.powi(4))
}

/// `x'(y) = cot θ`.
pub fn x_slope(theta: f64) -> f64 {
    theta.cos() / theta.sin()
}

pub const DEFAULT_MAX_CHORD: f64 = 1e-2;
pub const DEFAULT_MAX_TURN: f64 = 5e-4;

pub fn soliton_curve(trace: &OrbitTrace) -> Result<SolitonCurve> {
    soliton_curve_with(trace, DEFAULT_MAX_CHORD, DEFAULT_MAX_TURN)
}

/// Assembles the planar curve of an orbit, densified so that chords stay
/// below `max_chord` and turning per segment below `max_turn`.
pub fn soliton_curve_with(trace: &OrbitTrace, max_chord: f64, max_turn: f64) -> Result<SolitonCurve> {
    if trace.label == OrbitType::Undetermined {
        return Err(Error::Undetermined(
            trace.diagnostics.clone().unwrap_or_else(|| "unclassified orbit".into()),
        ));
    }
    let field = regularized_field(trace.strip);
    let samples = densify(&field, &trace.samples, max_chord, max_turn);
    let curve = polyline(&samples)?;
    let (lo, hi) = if samples[0].y <= samples[samples.len() - 1].y {
        (samples[0], samples[samples.len() - 1])
    } else {
        (samples[samples.len() - 1], samples[0])
    };
    let concave = samples.iter().all(|s| x_second_derivative(s.y, s.theta) < 0.0);
    let orthogonal_hit = trace.axis_limit().is_some_and(|l| l.theta.cos().abs() < 1e-3);
    let x_extent = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.x), b.max(s.x)));
    Ok(SolitonCurve {
        curve,
        descriptors: SolitonDescriptors {
            y_asymptote: trace.asymptote().unwrap_or(f64::NAN),
            y_bar: trace.lower_asymptote(),
            orthogonal_hit,
            concave,
            x_extent,
            slope_low: x_slope(lo.theta),
            slope_high: x_slope(hi.theta),
        },
        samples,
    })
}

impl SolitonCurve {
    /// The curve as a graph `x(y)`, by linear interpolation between vertices.
    pub fn x_at_y(&self, y: f64) -> Option<f64> {
        let v = self.curve.vertices();
        let increasing = v[0].y <= v[v.len() - 1].y;
        let key = |i: usize| if increasing { v[i].y } else { -v[i].y };
        let target = if increasing { y } else { -y };
        if target < key(0) || target > key(v.len() - 1) {
            return None;
        }
        let j = (0..v.len()).collect::<Vec<_>>().partition_point(|&i| key(i) < target);
        if j == 0 {
            return Some(v[0].x);
        }
        let (a, b) = (v[j - 1], v[j]);
        let u = (y - a.y) / (b.y - a.y);
        Some(a.x + u * (b.x - a.x))
    }

    /// Whether `y` is strictly monotone along the polyline.
    pub fn is_graph_on_y(&self) -> bool {
        let v = self.curve.vertices();
        v.windows(2).all(|w| w[1].y > w[0].y) || v.windows(2).all(|w| w[1].y < w[0].y)
    }
}

/// Samples the soliton through `(y0, θ0)` with uniform arc-length spacing
/// `mesh`, restricted to `window`. The curve is oriented by increasing arc
/// length.
pub fn uniform_soliton_curve(y0: f64, theta0: f64, mesh: f64, window: &SampleWindow) -> Result<PolyCurve> {
    para_rhs(y0, theta0)?;
    let (m, ymin) = (window.theta_margin, window.y_min.max(DEFAULT_Y_FLOOR));
    uniform_arclength(&arclength_field, [y0, theta0, 0.0], mesh, window.s_max, |st| {
        st[1] >= m && st[1] <= PI - m && st[0] >= ymin
    })
}

/// Labels for a batch of starts `(y0, θ0)`, computed in parallel and returned
/// in input order.
pub fn classify_sweep(starts: &[(f64, f64)], ctrl: &OrbitControl) -> Vec<Result<OrbitTrace>> {
    starts
        .par_iter()
        .map(|&(y0, th0)| integrate_orbit(y0, th0, ctrl))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    pub label: OrbitType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    #[serde(rename = "H")]
    pub h: f64,
    pub lo: f64,
    pub hi: f64,
    pub widenings: usize,
    pub log: Vec<BisectionStep>,
}

pub const THRESHOLD_BRACKET: (f64, f64) = (1e-3, 10.0);
pub const THRESHOLD_WIDTH: f64 = 1e-8;

fn vertical_label(y0: f64, ctrl: &OrbitControl) -> Result<OrbitType> {
    Ok(integrate_orbit(y0, FRAC_PI_2, ctrl)?.label)
}

/// Bisection for the start height separating Type I from Type II orbits with
/// θ(0) = π/2, down to a bracket of width `width`.
pub fn threshold_search(ctrl: &OrbitControl, bracket: (f64, f64), width: f64) -> Result<ThresholdSearch> {
    let (mut lo, mut hi) = bracket;
    let mut widenings = 0;
    loop {
        let (a, b) = rayon::join(|| vertical_label(lo, ctrl), || vertical_label(hi, ctrl));
        let (a, b) = (a?, b?);
        if a == OrbitType::TypeI && b == OrbitType::TypeII {
            break;
        }
        if widenings == 4 {
            return Err(Error::SearchFailure {
                lo,
                hi,
                lo_label: a.to_string(),
                hi_label: b.to_string(),
            });
        }
        widenings += 1;
        if a != OrbitType::TypeI {
            lo *= 0.1;
        }
        if b != OrbitType::TypeII {
            hi *= 10.0;
        }
    }
    let mut log = Vec::new();
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let label = vertical_label(mid, ctrl)?;
        log.push(BisectionStep { lo, hi, mid, label });
        match label {
            OrbitType::TypeI => lo = mid,
            OrbitType::TypeII => hi = mid,
            other => {
                return Err(Error::SearchFailure {
                    lo: mid,
                    hi: mid,
                    lo_label: other.to_string(),
                    hi_label: other.to_string(),
                })
            }
        }
    }
    Ok(ThresholdSearch {
        h: 0.5 * (lo + hi),
        lo,
        hi,
        widenings,
        log,
    })
}

/// The Type I / Type II threshold height for θ(0) = π/2.
#[allow(non_snake_case)]
pub fn find_threshold_H(ctrl: &OrbitControl) -> Result<f64> {
    Ok(threshold_search(ctrl, THRESHOLD_BRACKET, THRESHOLD_WIDTH)?.h)
}
