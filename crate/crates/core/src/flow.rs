//! Front-tracking evolution of polygonal curves by the ICSF.
//!
//! Each step moves every vertex by `−dt·N/κ` (explicit Euler), with `κ` and `N`
//! from the discrete stencil of [`crate::geometry`]. Vertices are
//! redistributed along a smooth interpolant whenever the spacing becomes
//! uneven; since the equation prescribes only the normal velocity, this
//! tangential redistribution does not change the evolving shape.

use std::io::Write;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::geometry::{
    curvature_at, end_sample, fmt_g17, CurvatureSample, HPoint,
    KillingField, PolyCurve, DEFAULT_Y_FLOOR,
};

/// Metric in which resampling spaces vertices evenly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpacingMetric {
    Hyperbolic,
    Euclidean,
}

/// Motion of the end vertices of an open curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum EndCondition {
    /// Ends stay put.
    Fixed,
    /// Ends move by `−N/κ` with κ from the circle through the three end vertices.
    OneSided,
    /// Ends follow the flow of a vector field, which prescribes them exactly
    /// for a curve translated by that field.
    FieldFlow(KillingField),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowControl {
    pub dt: f64,
    pub t_end: f64,
    /// Target spacing in `metric`; `None` keeps the current vertex count.
    pub spacing: Option<f64>,
    pub metric: SpacingMetric,
    pub ends: EndCondition,
    pub kappa_floor: f64,
    pub y_floor: f64,
    /// Resample once the ratio of the longest to the shortest segment exceeds
    /// this value.
    pub resample_ratio: f64,
    /// Keep every `frame_every`-th frame (the last frame is always kept).
    pub frame_every: usize,
}

impl Default for FlowControl {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 0.1,
            spacing: None,
            metric: SpacingMetric::Hyperbolic,
            ends: EndCondition::OneSided,
            kappa_floor: 1e-6,
            y_floor: DEFAULT_Y_FLOOR,
            resample_ratio: 1.5,
            frame_every: 100,
        }
    }
}

impl FlowControl {
    fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.t_end >= 0.0
            && self.t_end.is_finite()
            && self.spacing.is_none_or(|h| h > 0.0)
            && self.kappa_floor > 0.0
            && self.resample_ratio > 1.0
            && self.frame_every > 0;
        if ok {
            Ok(())
        } else {
            Err(contract(format!("invalid flow control {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowFrame {
    pub t: f64,
    pub curve: PolyCurve,
    pub per_vertex: Vec<CurvatureSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowTermination {
    ReachedT,
    CurvatureSignChange,
    BoundaryContact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRun {
    pub frames: Vec<FlowFrame>,
    pub dt: f64,
    pub resample_spacing: f64,
    pub termination: FlowTermination,
    pub resamples: usize,
    /// Steps at which `dt` exceeded the stability heuristic.
    pub stability_warnings: usize,
}

impl FlowRun {
    pub fn last(&self) -> &FlowFrame {
        self.frames.last().expect("a run always holds the initial frame")
    }
}

fn samples_for(curve: &PolyCurve) -> Result<Vec<CurvatureSample>> {
    let n = curve.len();
    (0..n)
        .map(|i| {
            if curve.neighbors(i).is_some() {
                curvature_at(curve, i)
            } else {
                end_sample(curve, i == 0)
            }
        })
        .collect()
}

/// Builds a frame, evaluating curvature and normal at every vertex. End
/// vertices of open curves use the circle through the three end vertices.
pub fn frame_at(t: f64, curve: PolyCurve) -> Result<FlowFrame> {
    let per_vertex = samples_for(&curve)?;
    Ok(FlowFrame { t, curve, per_vertex })
}

/// Outcome of a single step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Advanced(FlowFrame),
    Stopped(FlowTermination),
}

/// One explicit Euler step of size `dt` without resampling.
pub fn step_icsf(frame: &FlowFrame, dt: f64, ctrl: &FlowControl) -> Result<StepOutcome> {
    if frame.per_vertex.iter().any(|s| !(s.kappa_h > ctrl.kappa_floor)) {
        return Ok(StepOutcome::Stopped(FlowTermination::CurvatureSignChange));
    }
    let closed = frame.curve.is_closed();
    let n = frame.curve.len();
    let mut pts = Vec::with_capacity(n);
    for (i, (p, smp)) in frame.curve.vertices().iter().zip(&frame.per_vertex).enumerate() {
        let is_end = !closed && (i == 0 || i == n - 1);
        let (vx, vy) = if !is_end {
            (-smp.normal.dx / smp.kappa_h, -smp.normal.dy / smp.kappa_h)
        } else {
            match ctrl.ends {
                EndCondition::Fixed => (0.0, 0.0),
                EndCondition::OneSided => (-smp.normal.dx / smp.kappa_h, -smp.normal.dy / smp.kappa_h),
                EndCondition::FieldFlow(field) => {
                    let v = field.at(*p);
                    (v.dx, v.dy)
                }
            }
        };
        let q = (p.x + dt * vx, p.y + dt * vy);
        if !(q.1 > ctrl.y_floor) {
            return Ok(StepOutcome::Stopped(FlowTermination::BoundaryContact));
        }
        pts.push(HPoint { x: q.0, y: q.1 });
    }
    let curve = PolyCurve::with_floor(pts, closed, ctrl.y_floor)?;
    Ok(StepOutcome::Advanced(frame_at(frame.t + dt, curve)?))
}

fn segment_lengths(curve: &PolyCurve, metric: SpacingMetric) -> Vec<f64> {
    (0..curve.segment_count())
        .map(|i| {
            let (a, b) = curve.segment(i);
            match metric {
                SpacingMetric::Hyperbolic => a.distance(&b),
                SpacingMetric::Euclidean => (b.x - a.x).hypot(b.y - a.y),
            }
        })
        .collect()
}

/// Ratio of the longest to the shortest segment in `metric`.
pub fn spacing_ratio(curve: &PolyCurve, metric: SpacingMetric) -> f64 {
    let l = segment_lengths(curve, metric);
    let (lo, hi) = l.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    hi / lo
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Signed curvature of the circle through three points.
fn circle_curvature(a: HPoint, b: HPoint, c: HPoint) -> f64 {
    let (d1x, d1y) = (b.x - a.x, b.y - a.y);
    let (d2x, d2y) = (c.x - b.x, c.y - b.y);
    let cross = d1x * d2y - d1y * d2x;
    let l = d1x.hypot(d1y) * d2x.hypot(d2y) * (c.x - a.x).hypot(c.y - a.y);
    if l == 0.0 {
        0.0
    } else {
        2.0 * cross / l
    }
}

/// Point at fraction `u` of the arc with signed curvature `k` over the chord
/// `a → b`.
fn arc_point(a: HPoint, b: HPoint, k: f64, u: f64) -> (f64, f64) {
    let (cx, cy) = (b.x - a.x, b.y - a.y);
    let l = cx.hypot(cy);
    let half = (0.5 * k * l).clamp(-1.0, 1.0).asin();
    let (ex, ey) = (cx / l, cy / l);
    // tangent at `a` is the chord turned back by half the arc angle
    let (sa, ca) = (-half).sin_cos();
    let (tx, ty) = (ex * ca - ey * sa, ex * sa + ey * ca);
    let (nx, ny) = (-ty, tx);
    let arc = if half.abs() < 1e-12 { l } else { 2.0 * half / k };
    let tau = u * arc;
    let along = tau * sinc(k * tau);
    let across = tau * (0.5 * k * tau).sin() * sinc(0.5 * k * tau);
    (a.x + along * tx + across * nx, a.y + along * ty + across * ny)
}

/// Interpolant on segment `i`: a blend of the arcs through its two
/// neighbouring vertex triples, exact on circles and lines.
fn blended_point(curve: &PolyCurve, i: usize, u: f64) -> (f64, f64) {
    let v = curve.vertices();
    let n = v.len();
    let closed = curve.is_closed();
    let (a, b) = curve.segment(i);
    let j = (i + 1) % n;
    let left = if closed || i > 0 {
        Some(circle_curvature(v[(i + n - 1) % n], a, b))
    } else {
        None
    };
    let right = if closed || j + 1 < n {
        Some(circle_curvature(a, b, v[(j + 1) % n]))
    } else {
        None
    };
    match (left, right) {
        (Some(k1), Some(k2)) => {
            let p = arc_point(a, b, k1, u);
            let q = arc_point(a, b, k2, u);
            ((1.0 - u) * p.0 + u * q.0, (1.0 - u) * p.1 + u * q.1)
        }
        (Some(k), None) | (None, Some(k)) => arc_point(a, b, k, u),
        (None, None) => (a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)),
    }
}

const SUBDIVISIONS: usize = 8;

/// Redistributes vertices evenly in `metric` along the blended interpolant.
/// `count` is the number of vertices of the result; open curves keep their
/// end vertices.
pub fn resample(curve: &PolyCurve, metric: SpacingMetric, count: usize) -> Result<PolyCurve> {
    let closed = curve.is_closed();
    if count < if closed { 3 } else { 2 } {
        return Err(contract("too few vertices requested"));
    }
    let mut nodes: Vec<(usize, f64, HPoint)> = Vec::new();
    for i in 0..curve.segment_count() {
        let (a, _) = curve.segment(i);
        nodes.push((i, 0.0, a));
        for k in 1..SUBDIVISIONS {
            let u = k as f64 / SUBDIVISIONS as f64;
            let (x, y) = blended_point(curve, i, u);
            nodes.push((i, u, HPoint { x, y }));
        }
    }
    let (last_seg, end) = if closed {
        (curve.segment_count() - 1, curve.vertices()[0])
    } else {
        (curve.segment_count() - 1, curve.vertices()[curve.len() - 1])
    };
    nodes.push((last_seg, 1.0, end));
    let mut cum = vec![0.0];
    for w in nodes.windows(2) {
        let d = match metric {
            SpacingMetric::Hyperbolic => w[0].2.distance(&w[1].2),
            SpacingMetric::Euclidean => w[0].2.euclid(&w[1].2),
        };
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let intervals = if closed { count } else { count - 1 };
    let mut pts = Vec::with_capacity(count);
    let mut j = 0;
    for k in 0..count {
        if !closed && k == count - 1 {
            pts.push(end);
            break;
        }
        let target = total * k as f64 / intervals as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < target {
            j += 1;
        }
        let (i0, u0, p0) = nodes[j];
        let (_, u1, _) = nodes[j + 1];
        let u1 = if nodes[j + 1].0 != i0 { 1.0 } else { u1 };
        let w = if cum[j + 1] > cum[j] {
            ((target - cum[j]) / (cum[j + 1] - cum[j])).clamp(0.0, 1.0)
        } else {
            0.0
        };
        if w == 0.0 {
            pts.push(p0);
            continue;
        }
        let (x, y) = blended_point(curve, i0, u0 + w * (u1 - u0));
        pts.push(HPoint { x, y });
    }
    PolyCurve::new(pts, closed)
}

fn curve_length(curve: &PolyCurve, metric: SpacingMetric) -> f64 {
    segment_lengths(curve, metric).iter().sum()
}

fn resample_count(curve: &PolyCurve, ctrl: &FlowControl) -> usize {
    match ctrl.spacing {
        None => curve.len(),
        Some(h) => {
            let segs = (curve_length(curve, ctrl.metric) / h).round().max(2.0) as usize;
            if curve.is_closed() {
                segs
            } else {
                segs + 1
            }
        }
    }
}

/// Smallest `h_h² κ²` over interior vertices, the quantity that bounds a
/// stable explicit step.
pub fn stability_scale(frame: &FlowFrame) -> f64 {
    let curve = &frame.curve;
    curve
        .interior_indices()
        .map(|i| {
            let (a, c) = curve.neighbors(i).expect("interior vertex");
            let v = curve.vertices();
            let h = v[i].distance(&v[a]).min(v[i].distance(&v[c]));
            let k = frame.per_vertex[i].kappa_h;
            h * h * k * k
        })
        .fold(f64::INFINITY, f64::min)
}

/// Evolves `initial` to `ctrl.t_end`.
pub fn simulate(initial: &PolyCurve, ctrl: &FlowControl) -> Result<FlowRun> {
    ctrl.validate()?;
    let steps = (ctrl.t_end / ctrl.dt).round() as usize;
    let mut curve = initial.clone();
    let mut resamples = 0;
    if ctrl.spacing.is_some() || spacing_ratio(&curve, ctrl.metric) > ctrl.resample_ratio {
        curve = resample(&curve, ctrl.metric, resample_count(&curve, ctrl))?;
        resamples += 1;
    }
    let mut frame = frame_at(0.0, curve)?;
    let resample_spacing = curve_length(&frame.curve, ctrl.metric) / frame.curve.segment_count() as f64;
    let mut frames = vec![frame.clone()];
    let mut termination = FlowTermination::ReachedT;
    let mut stability_warnings = 0;
    for k in 1..=steps {
        if ctrl.dt > 0.25 * stability_scale(&frame) {
            if stability_warnings == 0 {
                warn!(
                    "dt = {} exceeds the stability heuristic 0.25·h²κ² = {} at t = {}",
                    ctrl.dt,
                    0.25 * stability_scale(&frame),
                    frame.t
                );
            }
            stability_warnings += 1;
        }
        match step_icsf(&frame, ctrl.dt, ctrl)? {
            StepOutcome::Stopped(cause) => {
                termination = cause;
                break;
            }
            StepOutcome::Advanced(mut next) => {
                next.t = k as f64 * ctrl.dt;
                if spacing_ratio(&next.curve, ctrl.metric) > ctrl.resample_ratio {
                    let count = resample_count(&next.curve, ctrl);
                    let c = resample(&next.curve, ctrl.metric, count)?;
                    next = frame_at(next.t, c)?;
                    resamples += 1;
                }
                frame = next;
                if k % ctrl.frame_every == 0 || k == steps {
                    frames.push(frame.clone());
                }
            }
        }
    }
    if termination != FlowTermination::ReachedT && frames.last().map(|f| f.t) != Some(frame.t) {
        frames.push(frame);
    }
    Ok(FlowRun {
        frames,
        dt: ctrl.dt,
        resample_spacing,
        termination,
        resamples,
        stability_warnings,
    })
}

/// Algebraic (Kåsa) least-squares circle fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleFit {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl CircleFit {
    /// Hyperbolic radius of the fitted circle, `atanh(ρ / c_y)`.
    pub fn hyperbolic_radius(&self) -> f64 {
        (self.radius / self.cy).atanh()
    }
}

pub fn fit_circle(curve: &PolyCurve) -> Result<CircleFit> {
    let v = curve.vertices();
    if v.len() < 3 {
        return Err(contract("circle fit needs at least three points"));
    }
    let (mx, my) = v.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let (mx, my) = (mx / v.len() as f64, my / v.len() as f64);
    let a = DMatrix::from_fn(v.len(), 3, |i, j| match j {
        0 => v[i].x - mx,
        1 => v[i].y - my,
        _ => 1.0,
    });
    let b = DVector::from_fn(v.len(), |i, _| {
        let (x, y) = (v[i].x - mx, v[i].y - my);
        -(x * x + y * y)
    });
    let sol = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| contract(format!("circle fit failed: {e}")))?;
    let (cx, cy) = (-0.5 * sol[0], -0.5 * sol[1]);
    let r2 = cx * cx + cy * cy - sol[2];
    if !(r2 > 0.0) {
        return Err(contract("degenerate circle fit"));
    }
    Ok(CircleFit {
        cx: cx + mx,
        cy: cy + my,
        radius: r2.sqrt(),
    })
}

/// Distance from `p` along the line `p + λn` to the polyline `target`.
/// Returns the smallest `|λ|` over segments the line actually crosses.
fn normal_hit(p: HPoint, n: (f64, f64), target: &PolyCurve) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..target.segment_count() {
        let (a, b) = target.segment(i);
        let (ux, uy) = (b.x - a.x, b.y - a.y);
        let det = uy * n.0 - ux * n.1;
        if det == 0.0 {
            continue;
        }
        let (rx, ry) = (a.x - p.x, a.y - p.y);
        let lambda = (uy * rx - ux * ry) / det;
        let mu = (n.1 * rx - n.0 * ry) / det;
        if (0.0..=1.0).contains(&mu) && best.is_none_or(|b| lambda.abs() < b) {
            best = Some(lambda.abs());
        }
    }
    best
}

/// Largest distance, along each vertex normal of `evolved`, to `target`.
/// Vertices whose normal line misses `target` (beyond its ends) are skipped;
/// `None` if no vertex hits.
pub fn normal_deviation(evolved: &FlowFrame, target: &PolyCurve) -> Option<f64> {
    evolved
        .curve
        .vertices()
        .iter()
        .zip(&evolved.per_vertex)
        .filter_map(|(&p, s)| normal_hit(p, (-s.theta.sin(), s.theta.cos()), target))
        .reduce(f64::max)
}

/// Subdivision of the comparison curve along the arc interpolant, so that its
/// chord error stays well below the flow error.
const TARGET_REFINEMENT: usize = 16;

/// Flows a candidate soliton for `t_total` and returns the largest normal
/// distance between the result and the initial curve moved by the field
/// (`x + t` for [`KillingField::Parabolic`], `y + t` for
/// [`KillingField::ConformalVertical`]). The curve is reoriented if needed so
/// that its curvature is positive.
pub fn verify_soliton_translation(
    curve: &PolyCurve,
    field: KillingField,
    t_total: f64,
    ctrl: &FlowControl,
) -> Result<f64> {
    let (dx, dy) = match field {
        KillingField::Parabolic => (t_total, 0.0),
        KillingField::ConformalVertical => (0.0, t_total),
        other => return Err(contract(format!("{other:?} translation is not supported"))),
    };
    let probe = samples_for(curve)?;
    let curve = if probe.iter().all(|s| s.kappa_h < 0.0) {
        curve.reversed()
    } else {
        curve.clone()
    };
    let ctrl = FlowControl {
        t_end: t_total,
        ..*ctrl
    };
    let run = simulate(&curve, &ctrl)?;
    if run.termination != FlowTermination::ReachedT {
        return Err(Error::FlowTerminated {
            t: run.last().t,
            cause: format!("{:?}", run.termination),
        });
    }
    let target = curve.translated(dx, dy)?;
    let target = resample(&target, SpacingMetric::Euclidean, TARGET_REFINEMENT * target.segment_count() + 1)?;
    normal_deviation(run.last(), &target).ok_or_else(|| contract("evolved curve does not overlap its target"))
}

/// Writes one CSV per kept frame (`x,y,kappa_h`) and an `index.json` listing
/// `{t, file}` for each.
pub fn dump_frames(run: &FlowRun, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    #[derive(Serialize)]
    struct Entry {
        t: f64,
        file: String,
    }
    let mut index = Vec::with_capacity(run.frames.len());
    for (k, f) in run.frames.iter().enumerate() {
        let name = format!("frame_{k:05}.csv");
        let mut wr = csv::Writer::from_path(dir.join(&name))?;
        wr.write_record(["x", "y", "kappa_h"])?;
        for (p, s) in f.curve.vertices().iter().zip(&f.per_vertex) {
            wr.write_record([fmt_g17(p.x), fmt_g17(p.y), fmt_g17(s.kappa_h)])?;
        }
        wr.flush()?;
        index.push(Entry { t: f.t, file: name });
    }
    let mut w = std::fs::File::create(dir.join("index.json"))?;
    serde_json::to_writer_pretty(&mut w, &index)?;
    w.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{make_exact_flow, FlowKind};
    use crate::geometry::sample_circle;

    fn on_circle(c: &PolyCurve, cx: f64, cy: f64, r: f64) -> f64 {
        c.vertices()
            .iter()
            .map(|p| ((p.x - cx).hypot(p.y - cy) - r).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn arc_point_lies_on_the_circle() {
        let (a, b) = (HPoint { x: 1.0, y: 2.0 }, HPoint { x: 0.0, y: 3.0 });
        // unit circle centred at (0, 2): a → b is a counterclockwise quarter
        for u in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let p = arc_point(a, b, 1.0, u);
            assert!((p.0.hypot(p.1 - 2.0) - 1.0).abs() < 1e-14, "{u}");
        }
        let m = arc_point(a, b, 1.0, 0.5);
        let half = std::f64::consts::FRAC_PI_4;
        assert!((m.0 - half.cos()).abs() < 1e-14 && (m.1 - 2.0 - half.sin()).abs() < 1e-14);
        let line = arc_point(a, b, 0.0, 0.5);
        assert!((line.0 - 0.5).abs() < 1e-15 && (line.1 - 2.5).abs() < 1e-15);
    }

    #[test]
    fn resampling_keeps_circles_and_evens_spacing() {
        let c = sample_circle(0.3, 2.0, 1.2, 90, 0.1).unwrap();
        let r = resample(&c, SpacingMetric::Hyperbolic, 200).unwrap();
        assert_eq!(r.len(), 200);
        assert!(on_circle(&r, 0.3, 2.0, 1.2) < 1e-13);
        assert!(spacing_ratio(&r, SpacingMetric::Hyperbolic) < 1.01);
        assert!(spacing_ratio(&c, SpacingMetric::Hyperbolic) > 3.0);
        let arc = PolyCurve::from_xy(&[(0.0, 1.0), (0.3, 1.1), (1.0, 1.0), (2.0, 0.8)], false).unwrap();
        let ra = resample(&arc, SpacingMetric::Euclidean, 31).unwrap();
        assert_eq!(ra.vertices()[0], arc.vertices()[0]);
        assert_eq!(ra.vertices()[30], arc.vertices()[3]);
        assert!(spacing_ratio(&ra, SpacingMetric::Euclidean) < 1.05);
    }

    #[test]
    fn circle_fit_recovers_radius() {
        let c = sample_circle(-1.0, 3.0, 2.0, 40, 0.0).unwrap();
        let f = fit_circle(&c).unwrap();
        assert!((f.cx + 1.0).abs() < 1e-12 && (f.cy - 3.0).abs() < 1e-12 && (f.radius - 2.0).abs() < 1e-12);
        assert!((f.hyperbolic_radius() - (2.0f64 / 3.0).atanh()).abs() < 1e-12);
    }

    #[test]
    fn circle_flow_matches_closed_form() {
        let flow = make_exact_flow(FlowKind::HyperbolicCircle, 0.8, None).unwrap();
        let ctrl = FlowControl {
            dt: 1e-3,
            t_end: 0.2,
            ..FlowControl::default()
        };
        let run = simulate(&flow.curve_at(0.0, 128).unwrap(), &ctrl).unwrap();
        assert_eq!(run.termination, FlowTermination::ReachedT);
        assert!((run.last().t - 0.2).abs() < 1e-12);
        assert!(run.frames.windows(2).all(|w| w[1].t > w[0].t));
        let r = fit_circle(&run.last().curve).unwrap().hyperbolic_radius();
        assert!((r - flow.radius(0.2)).abs() < 1e-3, "{r}");
    }

    #[test]
    fn large_steps_are_flagged() {
        let flow = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None).unwrap();
        let ctrl = FlowControl {
            dt: 1e-2,
            t_end: 0.02,
            ..FlowControl::default()
        };
        let run = simulate(&flow.curve_at(0.0, 512).unwrap(), &ctrl).unwrap();
        assert!(run.stability_warnings > 0);
    }

    #[test]
    fn concave_curves_stop() {
        let c = sample_circle(0.0, 3.0, 1.0, 64, 0.0).unwrap().reversed();
        let run = simulate(&c, &FlowControl::default()).unwrap();
        assert_eq!(run.termination, FlowTermination::CurvatureSignChange);
        assert_eq!(run.frames.len(), 1);
    }

    #[test]
    fn deviation_from_itself_is_zero() {
        let c = sample_circle(0.0, 3.0, 1.0, 64, 0.0).unwrap();
        let f = frame_at(0.0, c.clone()).unwrap();
        assert!(normal_deviation(&f, &c).unwrap() < 1e-14);
        let shifted = c.translated(0.0, 0.25).unwrap();
        let d = normal_deviation(&f, &shifted).unwrap();
        assert!((d - 0.25).abs() < 1e-2, "{d}");
    }

    #[test]
    fn rejects_bad_control() {
        let c = sample_circle(0.0, 3.0, 1.0, 16, 0.0).unwrap();
        for ctrl in [
            FlowControl { dt: 0.0, ..FlowControl::default() },
            FlowControl { resample_ratio: 1.0, ..FlowControl::default() },
            FlowControl { spacing: Some(-1.0), ..FlowControl::default() },
        ] {
            assert!(simulate(&c, &ctrl).is_err());
        }
        let field = KillingField::Rotation;
        assert!(verify_soliton_translation(&c, field, 0.1, &FlowControl::default()).is_err());
    }

    #[test]
    fn frames_are_dumped_with_an_index() {
        let flow = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None).unwrap();
        let ctrl = FlowControl {
            dt: 1e-3,
            t_end: 0.01,
            frame_every: 5,
            ..FlowControl::default()
        };
        let run = simulate(&flow.curve_at(0.0, 32).unwrap(), &ctrl).unwrap();
        let dir = tempfile::tempdir().unwrap();
        dump_frames(&run, dir.path()).unwrap();
        let index: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("index.json")).unwrap()).unwrap();
        assert_eq!(index.as_array().unwrap().len(), 3);
        let first = std::fs::read_to_string(dir.path().join("frame_00000.csv")).unwrap();
        assert!(first.starts_with("x,y,kappa_h\n"));
        assert_eq!(first.lines().count(), 33);
    }
}
