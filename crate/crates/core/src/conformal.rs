//! Conformal solitons: curves moved by the ICSF along the vertical field `∂_y`.
//!
//! In arc length with tangent angle θ the system reads
//!
//! ```text
//! x' = cos θ,   y' = sin θ,   θ' = −1/cos θ − cos θ / y
//! ```
//!
//! on `y > 0, θ ∈ (−π/2, π/2)`. Orbits are integrated in `dσ = ds / (y cos θ)`,
//! where `dθ/dσ = −y − cos²θ < 0`, so θ decreases through the whole strip.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{soliton_residual, KillingField, PolyCurve, DEFAULT_Y_FLOOR};
use crate::ode::{dp_step, Crossing, Direction, EventSpec, Termination};
use crate::orbit::{
    densify, extrapolate_to_boundary, integrate_half, merge, polyline, uniform_arclength, write_samples_csv,
    EndLimit, OrbitControl, OrbitSample, SampleWindow,
};

/// Right-hand side `(y', θ')` in arc length.
pub fn conf_rhs(y: f64, theta: f64) -> Result<(f64, f64)> {
    if !(y > 0.0) || !(theta.abs() < FRAC_PI_2) {
        return Err(domain(format!("({y}, {theta}) is outside the conformal phase strip")));
    }
    let (s, c) = theta.sin_cos();
    Ok((s, -1.0 / c - c / y))
}

pub(crate) fn regularized_field(st: &[f64], out: &mut [f64]) {
    let (y, th) = (st[0], st[1]);
    let (s, c) = th.sin_cos();
    let g = y * c;
    out[0] = g * s;
    out[1] = -y - c * c;
    out[2] = g * c;
    out[3] = g;
}

fn arclength_field(st: &[f64], out: &mut [f64]) {
    let (y, th) = (st[0], st[1]);
    let (s, c) = th.sin_cos();
    out[0] = s;
    out[1] = -1.0 / c - c / y;
    out[2] = c;
}

/// Shift applied to bring a start with θ(0) ≠ 0 to the canonical θ = 0 point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reparametrization {
    pub sigma_bar: f64,
    pub s_bar: f64,
    pub x_bar: f64,
    /// Height of the canonical point.
    pub y_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalTrace {
    pub y0: f64,
    pub theta0: f64,
    /// Nodes in increasing regularized time, shifted so that the canonical
    /// θ = 0 point sits at `σ = s = x = 0`.
    pub samples: Vec<OrbitSample>,
    pub start_index: usize,
    pub reparametrization: Option<Reparametrization>,
    pub resolved: bool,
    /// Limit as θ → π/2 (the left end).
    pub backward_limit: EndLimit,
    /// Limit as θ → −π/2 (the right end).
    pub forward_limit: EndLimit,
    pub x_span: (f64, f64),
    pub diagnostics: Option<String>,
}

const EV_TOP: usize = 0;
const EV_BOTTOM: usize = 1;
const EV_HORIZONTAL: usize = 3;

/// Integrates the conformal orbit through `(y0, θ0)`. A start with θ0 < 0 is
/// obtained from the mirrored start `(y0, −θ0)`; a start with θ0 ≠ 0 is then
/// shifted so the canonical point has θ = 0.
pub fn integrate_conformal(y0: f64, theta0: f64, ctrl: &OrbitControl) -> Result<ConformalTrace> {
    ctrl.validate()?;
    conf_rhs(y0, theta0)?;
    let eps = ctrl.eps_boundary;
    if y0 <= eps || theta0.abs() >= FRAC_PI_2 - eps {
        return Err(domain(format!(
            "start ({y0}, {theta0}) lies within the boundary tolerance {eps}"
        )));
    }
    if theta0 < 0.0 {
        let mut t = integrate_conformal(y0, -theta0, ctrl)?;
        t.theta0 = theta0;
        return Ok(mirror(t));
    }
    let events = [
        EventSpec::new(move |_, st| st[1] - (FRAC_PI_2 - eps), Crossing::Rising, true),
        EventSpec::new(move |_, st| st[1] + (FRAC_PI_2 - eps), Crossing::Falling, true),
        EventSpec::new(move |_, st| st[0] - eps, Crossing::Falling, true),
        EventSpec::new(|_, st| st[1], Crossing::Falling, false),
    ];
    let start = [y0, theta0, 0.0, 0.0];
    let back = integrate_half(&regularized_field, start, Direction::Backward, &events, ctrl)?;
    let fwd = integrate_half(&regularized_field, start, Direction::Forward, &events, ctrl)?;
    let mut samples = merge(&back, &fwd);
    let mut start_index = back.nodes.len() - 1;

    let mut reparametrization = None;
    if theta0 > 0.0 {
        let hit = fwd
            .events
            .iter()
            .find(|e| e.event == EV_HORIZONTAL)
            .ok_or_else(|| Error::Undetermined(format!("θ never reaches 0 from ({y0}, {theta0})")))?;
        let canon = OrbitSample::from_state(hit.s, &hit.state);
        let k = samples.partition_point(|s| s.sigma < canon.sigma);
        samples.insert(k, canon);
        start_index = k;
        for smp in &mut samples {
            smp.sigma -= canon.sigma;
            smp.s -= canon.s;
            smp.x -= canon.x;
        }
        samples[k].theta = 0.0;
        reparametrization = Some(Reparametrization {
            sigma_bar: canon.sigma,
            s_bar: canon.s,
            x_bar: canon.x,
            y_bar: canon.y,
        });
    }

    let mut diagnostics = Vec::new();
    let top = back.termination == Termination::EventStop(EV_TOP);
    let bottom = fwd.termination == Termination::EventStop(EV_BOTTOM);
    if !top {
        diagnostics.push(format!("backward end: {:?}", back.termination));
    }
    if !bottom {
        diagnostics.push(format!("forward end: {:?}", fwd.termination));
    }
    let backward_limit = end_limit(samples[..=start_index].iter().rev(), FRAC_PI_2, top);
    let forward_limit = end_limit(samples[start_index..].iter(), -FRAC_PI_2, bottom);
    Ok(ConformalTrace {
        y0,
        theta0,
        x_span: (backward_limit.x, forward_limit.x),
        samples,
        start_index,
        reparametrization,
        resolved: top && bottom,
        backward_limit,
        forward_limit,
        diagnostics: (!diagnostics.is_empty()).then(|| diagnostics.join("; ")),
    })
}

fn end_limit<'a>(
    tail: impl DoubleEndedIterator<Item = &'a OrbitSample> + Clone,
    boundary: f64,
    reached: bool,
) -> EndLimit {
    let last = *tail.clone().next_back().expect("non-empty tail");
    if !reached {
        return EndLimit {
            y: last.y,
            theta: last.theta,
            x: last.x,
            error: f64::INFINITY,
        };
    }
    let coord = |s: &OrbitSample| (boundary - s.theta).abs();
    let (y, ey) = extrapolate_to_boundary(tail.clone(), coord, |s| s.y);
    let (x, ex) = extrapolate_to_boundary(tail, coord, |s| s.x);
    EndLimit {
        y,
        theta: boundary,
        x,
        error: ey.max(ex),
    }
}

/// `(x, y, θ)(s) ↦ (−x(−s), y(−s), −θ(−s))`, the reflection of the curve in
/// the vertical line through the canonical point.
fn mirror(t: ConformalTrace) -> ConformalTrace {
    let n = t.samples.len();
    let flip = |l: EndLimit| EndLimit {
        x: -l.x,
        theta: -l.theta,
        ..l
    };
    ConformalTrace {
        samples: t
            .samples
            .iter()
            .rev()
            .map(|s| OrbitSample {
                sigma: -s.sigma,
                s: -s.s,
                x: -s.x,
                y: s.y,
                theta: -s.theta,
            })
            .collect(),
        start_index: n - 1 - t.start_index,
        backward_limit: flip(t.forward_limit),
        forward_limit: flip(t.backward_limit),
        x_span: (-t.x_span.1, -t.x_span.0),
        reparametrization: t.reparametrization.map(|r| Reparametrization {
            sigma_bar: -r.sigma_bar,
            s_bar: -r.s_bar,
            x_bar: -r.x_bar,
            ..r
        }),
        ..t
    }
}

impl ConformalTrace {
    /// The state `[y, θ, x, s]` at regularized time `sigma`, by a single RK
    /// step from the nearest node on the left.
    pub fn state_at(&self, sigma: f64) -> Option<[f64; 4]> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if sigma < first.sigma || sigma > last.sigma {
            return None;
        }
        let j = self.samples.partition_point(|s| s.sigma <= sigma).max(1) - 1;
        let a = self.samples[j];
        let st = a.state();
        if sigma == a.sigma {
            return Some(st);
        }
        let mut f = [0.0; 4];
        regularized_field(&st, &mut f);
        let rhs = |_: f64, s: &[f64], o: &mut [f64]| regularized_field(s, o);
        let y = dp_step(&rhs, a.sigma, &st, &f, sigma - a.sigma).y;
        Some([y[0], y[1], y[2], y[3]])
    }

    /// Common endpoint height `y*`, taken from the left end.
    pub fn y_star(&self) -> f64 {
        self.backward_limit.y
    }

    pub fn record(&self, concave: bool) -> ConformalRecord {
        ConformalRecord {
            y0: self.y0,
            theta0: self.theta0,
            y_star: self.y_star(),
            x_m: self.x_span.0,
            x_big_m: self.x_span.1,
            concave,
        }
    }

    /// Writes `s,x,y,theta,kappa_h` for every node, with `κ = −y / cos θ`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_samples_csv(&self.samples, |s| -s.y / s.theta.cos(), w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalRecord {
    pub y0: f64,
    pub theta0: f64,
    pub y_star: f64,
    pub x_m: f64,
    #[serde(rename = "x_M")]
    pub x_big_m: f64,
    pub concave: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalDescriptors {
    pub x_m: f64,
    #[serde(rename = "x_M")]
    pub x_big_m: f64,
    pub concave: bool,
    pub vertical_endpoints: bool,
    /// `y'(x) = tan θ` at the left and right ends.
    pub slope_left: f64,
    pub slope_right: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalSolitonCurve {
    /// Oriented by increasing x.
    pub curve: PolyCurve,
    pub samples: Vec<OrbitSample>,
    pub descriptors: ConformalDescriptors,
}

/// `y''(x) = −(y + cos²θ) / (y cos⁴θ)` along a conformal soliton.
pub fn y_second_derivative(y: f64, theta: f64) -> f64 {
    let c = theta.cos();
    -(y + c * c) / (y * c.powi(4))
}

pub const DEFAULT_MAX_CHORD: f64 = 5e-3;
pub const DEFAULT_MAX_TURN: f64 = 2.5e-4;
const VERTICAL_SLOPE: f64 = 1e3;

pub fn conformal_curve(trace: &ConformalTrace) -> Result<ConformalSolitonCurve> {
    conformal_curve_with(trace, DEFAULT_MAX_CHORD, DEFAULT_MAX_TURN)
}

/// Densified planar curve of a trace with its shape descriptors. Concavity
/// requires both the closed-form `y''(x)` and every discrete turn of the
/// polyline to be negative.
pub fn conformal_curve_with(trace: &ConformalTrace, max_chord: f64, max_turn: f64) -> Result<ConformalSolitonCurve> {
    if !trace.resolved {
        return Err(Error::Undetermined(
            trace.diagnostics.clone().unwrap_or_else(|| "unresolved trace".into()),
        ));
    }
    let samples = densify(&regularized_field, &trace.samples, max_chord, max_turn);
    let curve = polyline(&samples)?;
    let v = curve.vertices();
    let turns_right = v.windows(3).all(|w| {
        let (a, b, c) = (w[0], w[1], w[2]);
        (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) < 0.0
    });
    let concave = turns_right && samples.iter().all(|s| y_second_derivative(s.y, s.theta) < 0.0);
    let slope_left = samples[0].theta.tan();
    let slope_right = samples[samples.len() - 1].theta.tan();
    Ok(ConformalSolitonCurve {
        descriptors: ConformalDescriptors {
            x_m: trace.x_span.0,
            x_big_m: trace.x_span.1,
            concave,
            vertical_endpoints: slope_left > VERTICAL_SLOPE && slope_right < -VERTICAL_SLOPE,
            slope_left,
            slope_right,
        },
        curve,
        samples,
    })
}

impl ConformalSolitonCurve {
    /// The curve as a graph `y(x)`, by linear interpolation between vertices.
    pub fn y_at_x(&self, x: f64) -> Option<f64> {
        let v = self.curve.vertices();
        if x < v[0].x || x > v[v.len() - 1].x {
            return None;
        }
        let j = v.partition_point(|p| p.x < x);
        if j == 0 {
            return Some(v[0].y);
        }
        let (a, b) = (v[j - 1], v[j]);
        Some(a.y + (x - a.x) / (b.x - a.x) * (b.y - a.y))
    }

    pub fn is_graph_on_x(&self) -> bool {
        self.curve.vertices().windows(2).all(|w| w[1].x > w[0].x)
    }

    /// The reflection `x ↦ 2x₀ − x`.
    pub fn mirrored(&self, x0: f64) -> Result<PolyCurve> {
        self.curve.try_map(|p| crate::geometry::HPoint::new(2.0 * x0 - p.x, p.y))
    }

    pub fn residual(&self) -> Result<f64> {
        conformal_residual(&self.curve)
    }
}

/// Maximum over interior vertices of `|1/κ + ⟨N, ∂_y⟩|`.
pub fn conformal_residual(curve: &PolyCurve) -> Result<f64> {
    soliton_residual(curve, KillingField::ConformalVertical)
}

/// Samples the conformal soliton through `(y0, θ0)` with uniform arc-length
/// spacing `mesh`, restricted to `window`.
pub fn uniform_conformal_curve(y0: f64, theta0: f64, mesh: f64, window: &SampleWindow) -> Result<PolyCurve> {
    conf_rhs(y0, theta0)?;
    let (m, ymin) = (window.theta_margin, window.y_min.max(DEFAULT_Y_FLOOR));
    uniform_arclength(&arclength_field, [y0, theta0, 0.0], mesh, window.s_max, |st| {
        st[1].abs() <= FRAC_PI_2 - m && st[0] >= ymin
    })
}

/// Pointwise distance between the states of two traces over their common
/// regularized-time range, evaluated at the nodes of `b`.
pub fn trace_distance(a: &ConformalTrace, b: &ConformalTrace) -> f64 {
    b.samples
        .iter()
        .filter_map(|s| {
            let st = a.state_at(s.sigma)?;
            let d = [st[0] - s.y, st[1] - s.theta, st[2] - s.x, st[3] - s.s];
            Some(d.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify_constant_curvature, hausdorff_distance, CurveLabel};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn rhs_values() {
        assert_eq!(conf_rhs(1.0, 0.0).unwrap(), (0.0, -2.0));
        assert_eq!(conf_rhs(2.0, 0.0).unwrap(), (0.0, -1.5));
        let (_, dth) = conf_rhs(1.0, FRAC_PI_4).unwrap();
        assert!((dth + 1.5 * 2f64.sqrt()).abs() < 1e-15);
        assert!(conf_rhs(1.0, FRAC_PI_2).is_err());
        assert!(conf_rhs(-1.0, 0.0).is_err());
    }

    #[test]
    fn horocycle_is_not_a_conformal_soliton() {
        let c = PolyCurve::from_xy(&[(0.0, 2.0), (0.5, 2.0), (1.0, 2.0), (1.5, 2.0)], false).unwrap();
        let r = conformal_residual(&c).unwrap();
        assert!((r - 1.5).abs() < 1e-14);
    }

    #[test]
    fn ends_are_symmetric() {
        let t = integrate_conformal(1.0, 0.0, &OrbitControl::default()).unwrap();
        assert!(t.resolved);
        assert!((t.backward_limit.y - t.forward_limit.y).abs() < 1e-8);
        assert!((t.x_span.0 + t.x_span.1).abs() < 1e-8);
        assert!(t.samples.windows(2).all(|w| w[1].theta < w[0].theta));
        for s in &t.samples {
            if s.theta > 0.0 {
                assert!(s.s < 0.0);
            }
        }
    }

    #[test]
    fn positive_angle_is_reparametrized() {
        let t = integrate_conformal(1.0, FRAC_PI_4, &OrbitControl::default()).unwrap();
        let r = t.reparametrization.unwrap();
        assert!(r.s_bar > 0.0 && r.y_bar > 1.0);
        assert_eq!(t.samples[t.start_index].theta, 0.0);
        let direct = integrate_conformal(r.y_bar, 0.0, &OrbitControl::default()).unwrap();
        assert!(trace_distance(&t, &direct) < 1e-8);
    }

    #[test]
    fn negative_angle_uses_mirror() {
        let p = integrate_conformal(1.0, 0.3, &OrbitControl::default()).unwrap();
        let m = integrate_conformal(1.0, -0.3, &OrbitControl::default()).unwrap();
        assert!(m.samples.windows(2).all(|w| w[1].sigma > w[0].sigma && w[1].theta < w[0].theta));
        assert!((m.y_star() - p.forward_limit.y).abs() < 1e-12);
        assert!((m.x_span.0 + p.x_span.1).abs() < 1e-12);
        let r = m.reparametrization.unwrap();
        assert!(r.s_bar < 0.0);
    }

    #[test]
    fn curve_is_concave_symmetric_graph() {
        let t = integrate_conformal(1.0, 0.0, &OrbitControl::default()).unwrap();
        let c = conformal_curve(&t).unwrap();
        assert!(c.descriptors.concave && c.descriptors.vertical_endpoints);
        assert!(c.is_graph_on_x());
        let m = c.mirrored(0.0).unwrap();
        assert!(hausdorff_distance(&c.curve, &m) < 1e-6);
        assert!(c.y_at_x(0.0).is_some_and(|y| (y - 1.0).abs() < 1e-6));
    }

    #[test]
    fn uniform_curve_residual() {
        let c = uniform_conformal_curve(1.0, 0.0, 2e-4, &SampleWindow::default()).unwrap();
        assert!(conformal_residual(&c).unwrap() < 5e-6);
        let cls = classify_constant_curvature(&c, 1e-3).unwrap();
        assert_eq!(cls.label, CurveLabel::NonConstant);
    }
}
