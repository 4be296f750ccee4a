//! Upper half-plane model primitives.
//!
//! Points live in `{(x, y) : y > 0}` with the metric `(dx² + dy²) / y²`.
//! Curves are sampled as polylines; curvature, tangent angle and the
//! hyperbolic unit normal are recovered from vertex triples.
//!
//! Orientation convention: for a curve traversed with Euclidean unit tangent
//! `(cos θ, sin θ)`, the hyperbolic unit normal is `y · (−sin θ, cos θ)` and the
//! hyperbolic curvature is `κ = y·κ_e + cos θ`. Reversing a curve flips the
//! signs of both `κ` and `N`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Error, Result};

/// Vertices below this height are rejected unless a caller overrides it.
pub const DEFAULT_Y_FLOOR: f64 = 1e-12;

/// Default relative tolerance for constant-curvature classification.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-6;

/// Point of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
}

impl HPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(domain(format!("non-finite point ({x}, {y})")));
        }
        if y <= 0.0 {
            return Err(domain(format!("point ({x}, {y}) is not in the upper half-plane")));
        }
        Ok(Self { x, y })
    }

    /// Hyperbolic distance, evaluated in the `asinh` form which stays accurate
    /// for nearby points.
    pub fn distance(&self, other: &HPoint) -> f64 {
        let chord = (self.x - other.x).hypot(self.y - other.y);
        2.0 * (chord / (2.0 * (self.y * other.y).sqrt())).asinh()
    }

    pub fn euclid(&self, other: &HPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Tangent vector given by its Euclidean components at a base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: HPoint,
    pub dx: f64,
    pub dy: f64,
}

impl TangentVector {
    pub fn new(base: HPoint, dx: f64, dy: f64) -> Self {
        Self { base, dx, dy }
    }

    pub fn norm_sq(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy) / (self.base.y * self.base.y)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Hyperbolic inner product `(u·v) / y²`. Both vectors must share the exact
/// same base point.
pub fn hyperbolic_inner(u: &TangentVector, v: &TangentVector) -> Result<f64> {
    if u.base != v.base {
        return Err(contract(format!(
            "inner product of vectors at different base points {:?} and {:?}",
            u.base, v.base
        )));
    }
    let y = u.base.y;
    Ok((u.dx * v.dx + u.dy * v.dy) / (y * y))
}

/// Sampled curve. Closed curves store every vertex once; the closing segment
/// from the last vertex back to the first is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCurve {
    vertices: Vec<HPoint>,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
struct PolyCurveJson {
    closed: bool,
    vertices: Vec<[f64; 2]>,
}

impl PolyCurve {
    pub fn new(vertices: Vec<HPoint>, closed: bool) -> Result<Self> {
        Self::with_floor(vertices, closed, DEFAULT_Y_FLOOR)
    }

    pub fn with_floor(mut vertices: Vec<HPoint>, closed: bool, y_floor: f64) -> Result<Self> {
        if closed && vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let min_len = if closed { 3 } else { 2 };
        if vertices.len() < min_len {
            return Err(contract(format!(
                "a {} curve needs at least {min_len} vertices, got {}",
                if closed { "closed" } else { "open" },
                vertices.len()
            )));
        }
        for (i, p) in vertices.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() || p.y < y_floor {
                return Err(domain(format!(
                    "vertex {i} at ({}, {}) is below the floor y = {y_floor:e}",
                    p.x, p.y
                )));
            }
        }
        let n = vertices.len();
        let segments = if closed { n } else { n - 1 };
        for i in 0..segments {
            let j = (i + 1) % n;
            if vertices[i] == vertices[j] {
                return Err(contract(format!("zero-length segment between vertices {i} and {j}")));
            }
        }
        Ok(Self { vertices, closed })
    }

    /// Builds a curve from raw `(x, y)` pairs.
    pub fn from_xy(points: &[(f64, f64)], closed: bool) -> Result<Self> {
        let vertices = points
            .iter()
            .map(|&(x, y)| HPoint::new(x, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vertices, closed)
    }

    pub fn vertices(&self) -> &[HPoint] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self {
            vertices,
            closed: self.closed,
        }
    }

    /// Neighbour indices of vertex `i`, if it has two.
    pub fn neighbors(&self, i: usize) -> Option<(usize, usize)> {
        let n = self.vertices.len();
        if i >= n {
            return None;
        }
        if self.closed {
            Some(((i + n - 1) % n, (i + 1) % n))
        } else if i == 0 || i + 1 == n {
            None
        } else {
            Some((i - 1, i + 1))
        }
    }

    /// Indices of vertices that have two neighbours.
    pub fn interior_indices(&self) -> std::ops::Range<usize> {
        if self.closed {
            0..self.vertices.len()
        } else {
            1..self.vertices.len() - 1
        }
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    pub fn segment(&self, i: usize) -> (HPoint, HPoint) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn euclidean_length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                a.euclid(&b)
            })
            .sum()
    }

    /// Sum of hyperbolic distances between consecutive vertices.
    pub fn hyperbolic_length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                a.distance(&b)
            })
            .sum()
    }

    /// Applies a point map to every vertex (e.g. an isometry).
    pub fn try_map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(HPoint) -> Result<HPoint>,
    {
        let vertices = self.vertices.iter().map(|&p| f(p)).collect::<Result<Vec<_>>>()?;
        Self::new(vertices, self.closed)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        self.try_map(|p| HPoint::new(p.x + dx, p.y + dy))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y"])?;
        for p in &self.vertices {
            wtr.write_record([fmt_g17(p.x), fmt_g17(p.y)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the `x,y` CSV format. The closed flag is not part of that format
    /// and must be supplied by the caller.
    pub fn read_csv<R: Read>(r: R, closed: bool) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
            return Err(contract(format!("expected CSV header `x,y`, found {headers:?}")));
        }
        let mut pts = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| contract(format!("bad number {s:?}: {e}")))
            };
            pts.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        Self::from_xy(&pts, closed)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = PolyCurveJson {
            closed: self.closed,
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: PolyCurveJson = serde_json::from_str(s)?;
        let pts: Vec<(f64, f64)> = doc.vertices.iter().map(|v| (v[0], v[1])).collect();
        Self::from_xy(&pts, doc.closed)
    }
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Discrete curvature data at one vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureSample {
    pub kappa_e: f64,
    pub kappa_h: f64,
    pub normal: TangentVector,
    pub theta: f64,
}

impl CurvatureSample {
    fn from_parts(p: HPoint, kappa_e: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            kappa_e,
            kappa_h: p.y * kappa_e + c,
            normal: TangentVector::new(p, -p.y * s, p.y * c),
            theta,
        }
    }
}

/// Signed Menger curvature of the triple and the chord lengths `|b−a|`, `|c−b|`.
fn menger(a: HPoint, b: HPoint, c: HPoint) -> (f64, f64, f64) {
    let (d1x, d1y) = (b.x - a.x, b.y - a.y);
    let (d2x, d2y) = (c.x - b.x, c.y - b.y);
    let l1 = d1x.hypot(d1y);
    let l2 = d2x.hypot(d2y);
    let l3 = (c.x - a.x).hypot(c.y - a.y);
    let cross = d1x * d2y - d1y * d2x;
    let k = if cross == 0.0 { 0.0 } else { 2.0 * cross / (l1 * l2 * l3) };
    (k, l1, l2)
}

/// Curvature data at a vertex with two neighbours.
///
/// `κ_e` is the signed circumcircle curvature of the vertex triple. The tangent
/// is the non-uniform central difference `(l₂/l₁)·(b−a) + (l₁/l₂)·(c−b)`, which
/// coincides with the circumcircle tangent, so constant-curvature curves are
/// reproduced exactly.
pub fn curvature_at(curve: &PolyCurve, index: usize) -> Result<CurvatureSample> {
    let (ia, ic) = curve.neighbors(index).ok_or_else(|| {
        contract(format!("vertex {index} does not have two neighbours"))
    })?;
    let v = curve.vertices();
    triple_sample(v[ia], v[index], v[ic])
}

pub(crate) fn triple_sample(a: HPoint, b: HPoint, c: HPoint) -> Result<CurvatureSample> {
    let (k, l1, l2) = menger(a, b, c);
    if l1 == 0.0 || l2 == 0.0 {
        return Err(contract("zero-length segment in curvature stencil"));
    }
    let tx = (l2 / l1) * (b.x - a.x) + (l1 / l2) * (c.x - b.x);
    let ty = (l2 / l1) * (b.y - a.y) + (l1 / l2) * (c.y - b.y);
    if tx == 0.0 && ty == 0.0 {
        return Err(contract("curve reverses on itself; tangent undefined"));
    }
    Ok(CurvatureSample::from_parts(b, k, ty.atan2(tx)))
}

/// Curvature data at the end vertex of an open curve, taken from the circle
/// through the three end vertices. `at_start` selects the first or last vertex.
pub(crate) fn end_sample(curve: &PolyCurve, at_start: bool) -> Result<CurvatureSample> {
    let v = curve.vertices();
    let n = v.len();
    if n < 3 {
        return Err(contract("end curvature needs at least three vertices"));
    }
    let (p, q, r) = if at_start {
        (v[0], v[1], v[2])
    } else {
        (v[n - 3], v[n - 2], v[n - 1])
    };
    let (k, l1, l2) = menger(p, q, r);
    // Chord-tangent angle: the tangent at an endpoint is the chord direction
    // turned back by half the subtended arc.
    let (base, chord, l) = if at_start {
        (p, (q.x - p.x, q.y - p.y), l1)
    } else {
        (r, (r.x - q.x, r.y - q.y), l2)
    };
    let half = (0.5 * k * l).clamp(-1.0, 1.0).asin();
    let chord_angle = chord.1.atan2(chord.0);
    let theta = if at_start { chord_angle - half } else { chord_angle + half };
    Ok(CurvatureSample::from_parts(base, k, theta))
}

/// Killing fields `X₁, X₂, X₃` and the conformal field `∂_y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KillingField {
    Parabolic,
    HyperbolicTranslation,
    Rotation,
    ConformalVertical,
}

impl KillingField {
    pub fn at(&self, p: HPoint) -> TangentVector {
        let (dx, dy) = match self {
            KillingField::Parabolic => (1.0, 0.0),
            KillingField::HyperbolicTranslation => (p.x, p.y),
            KillingField::Rotation => (p.y * p.y - p.x * p.x, 2.0 * p.x * p.y),
            KillingField::ConformalVertical => (0.0, 1.0),
        };
        TangentVector::new(p, dx, dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveLabel {
    Geodesic,
    Equidistant,
    Horocycle,
    HyperbolicCircle,
    NonConstant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveClass {
    pub label: CurveLabel,
    /// Mean sampled curvature; `None` for non-constant curves.
    pub kappa: Option<f64>,
}

/// Classifies a sampled curve as one of the constant-curvature families, or
/// `NonConstant` when the sampled curvature spread exceeds `tol` (relative to
/// `max(1, |mean κ|)`).
pub fn classify_constant_curvature(curve: &PolyCurve, tol: f64) -> Result<CurveClass> {
    if curve.len() < 4 {
        return Err(contract("classification needs at least 4 vertices"));
    }
    let kappas = curve
        .interior_indices()
        .map(|i| curvature_at(curve, i).map(|s| s.kappa_h))
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = kappas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    let mean = kappas.iter().sum::<f64>() / kappas.len() as f64;
    let scale = mean.abs().max(1.0);
    if hi - lo > tol * scale {
        return Ok(CurveClass {
            label: CurveLabel::NonConstant,
            kappa: None,
        });
    }
    let k = mean.abs();
    let label = if k <= tol * scale {
        CurveLabel::Geodesic
    } else if (k - 1.0).abs() <= tol * scale {
        CurveLabel::Horocycle
    } else if k < 1.0 {
        CurveLabel::Equidistant
    } else {
        CurveLabel::HyperbolicCircle
    };
    Ok(CurveClass {
        label,
        kappa: Some(mean),
    })
}

/// One-parameter isometry subgroups: parabolic `z + t`, hyperbolic `eᵗ z`,
/// elliptic rotation `(cos t·z − sin t)/(sin t·z + cos t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryKind {
    Parabolic,
    Hyperbolic,
    Rotation,
}

pub fn apply_isometry(kind: IsometryKind, t: f64, p: HPoint) -> Result<HPoint> {
    if p.y <= 0.0 {
        return Err(domain("isometry applied to a point off the upper half-plane"));
    }
    match kind {
        IsometryKind::Parabolic => HPoint::new(p.x + t, p.y),
        IsometryKind::Hyperbolic => {
            let s = t.exp();
            HPoint::new(s * p.x, s * p.y)
        }
        IsometryKind::Rotation => {
            let z = Complex64::new(p.x, p.y);
            let (s, c) = t.sin_cos();
            let den = s * z + c;
            if den.norm() < 1e-300 {
                return Err(domain(format!("Möbius pole at t = {t}")));
            }
            let w = (c * z - s) / den;
            HPoint::new(w.re, w.im)
        }
    }
}

/// Per-vertex values of `|1/κ + ⟨N, X⟩|` over the interior vertices.
pub fn soliton_residuals(curve: &PolyCurve, field: KillingField) -> Result<Vec<f64>> {
    curve
        .interior_indices()
        .map(|i| {
            let s = curvature_at(curve, i)?;
            if s.kappa_h == 0.0 || s.kappa_h.abs() < 1e-14 {
                return Err(Error::SingularCurvature {
                    index: i,
                    kappa: s.kappa_h,
                });
            }
            let x = field.at(s.normal.base);
            Ok((1.0 / s.kappa_h + hyperbolic_inner(&s.normal, &x)?).abs())
        })
        .collect()
}

/// Maximum soliton-equation defect over interior vertices.
pub fn soliton_residual(curve: &PolyCurve, field: KillingField) -> Result<f64> {
    Ok(soliton_residuals(curve, field)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: HPoint, a: HPoint, b: HPoint) -> f64 {
    let (ux, uy) = (b.x - a.x, b.y - a.y);
    let (wx, wy) = (p.x - a.x, p.y - a.y);
    let len2 = ux * ux + uy * uy;
    let t = if len2 == 0.0 { 0.0 } else { ((wx * ux + wy * uy) / len2).clamp(0.0, 1.0) };
    (wx - t * ux).hypot(wy - t * uy)
}

/// Uniform bucket grid over the segments of a polyline.
struct SegmentGrid<'a> {
    curve: &'a PolyCurve,
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> SegmentGrid<'a> {
    fn new(curve: &'a PolyCurve) -> Self {
        let v = curve.vertices();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in v {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let m = curve.segment_count().max(1);
        let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
        let cell = (curve.euclidean_length() / m as f64 * 4.0).max(span / 1024.0);
        let nx = ((x1 - x0) / cell).floor() as usize + 1;
        let ny = ((y1 - y0) / cell).floor() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for i in 0..curve.segment_count() {
            let (a, b) = curve.segment(i);
            let (cx0, cy0) = Self::cell_of(x0, y0, cell, nx, ny, a.x.min(b.x), a.y.min(b.y));
            let (cx1, cy1) = Self::cell_of(x0, y0, cell, nx, ny, a.x.max(b.x), a.y.max(b.y));
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    buckets[cy * nx + cx].push(i);
                }
            }
        }
        Self {
            curve,
            x0,
            y0,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    fn cell_of(x0: f64, y0: f64, cell: f64, nx: usize, ny: usize, x: f64, y: f64) -> (usize, usize) {
        let cx = ((x - x0) / cell).floor().clamp(0.0, (nx - 1) as f64) as usize;
        let cy = ((y - y0) / cell).floor().clamp(0.0, (ny - 1) as f64) as usize;
        (cx, cy)
    }

    fn distance(&self, p: HPoint) -> f64 {
        let (cx, cy) = Self::cell_of(self.x0, self.y0, self.cell, self.nx, self.ny, p.x, p.y);
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny);
        for r in 0..=max_ring {
            let (lx, hx) = (cx.saturating_sub(r), (cx + r).min(self.nx - 1));
            let (ly, hy) = (cy.saturating_sub(r), (cy + r).min(self.ny - 1));
            for gy in ly..=hy {
                for gx in lx..=hx {
                    if gx.abs_diff(cx) != r && gy.abs_diff(cy) != r {
                        continue;
                    }
                    for &i in &self.buckets[gy * self.nx + gx] {
                        let (a, b) = self.curve.segment(i);
                        best = best.min(point_segment_distance(p, a, b));
                    }
                }
            }
            if best <= r as f64 * self.cell {
                break;
            }
        }
        best
    }
}

fn directed_hausdorff(from: &PolyCurve, to: &PolyCurve) -> f64 {
    let grid = SegmentGrid::new(to);
    from.vertices().iter().map(|&p| grid.distance(p)).fold(0.0, f64::max)
}

/// Symmetric Euclidean Hausdorff distance between two polylines, measured from
/// the vertices of each curve to the segments of the other.
pub fn hausdorff_distance(a: &PolyCurve, b: &PolyCurve) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Samples `n` points of the Euclidean circle with the given centre and radius,
/// counterclockwise starting at angle `phase`.
pub fn sample_circle(cx: f64, cy: f64, radius: f64, n: usize, phase: f64) -> Result<PolyCurve> {
    if n < 3 {
        return Err(contract("a sampled circle needs at least 3 vertices"));
    }
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = phase + 2.0 * PI * k as f64 / n as f64;
            (cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect();
    PolyCurve::from_xy(&pts, true)
}
