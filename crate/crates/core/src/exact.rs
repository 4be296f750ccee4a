//! Closed-form evolutions of constant-curvature curves.
//!
//! All three families are Euclidean circles or arcs in the half-plane model.
//! A flow is parametrized by `u ∈ [0, 1]`, traversed counterclockwise, so that
//! a fixed `u` gives a smooth path in time that can be differentiated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{contract, domain, Result};
use crate::geometry::{curvature_at, hyperbolic_inner, HPoint, PolyCurve, TangentVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    HyperbolicCircle,
    Horocycle,
    Equidistant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactFlow {
    kind: FlowKind,
    r0: f64,
    /// Equidistant only: `a² = R² − c²`, the invariant `r(t)² − c(t)²`.
    a: f64,
    c: f64,
    t_min: f64,
}

/// Builds a closed-form flow. `c` is required for (and only used by)
/// [`FlowKind::Equidistant`], where it must satisfy `0 < c < R`.
pub fn make_exact_flow(kind: FlowKind, r: f64, c: Option<f64>) -> Result<ExactFlow> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(contract(format!("radius must be positive, got {r}")));
    }
    match kind {
        FlowKind::HyperbolicCircle | FlowKind::Horocycle => Ok(ExactFlow {
            kind,
            r0: r,
            a: 0.0,
            c: 0.0,
            t_min: f64::NEG_INFINITY,
        }),
        FlowKind::Equidistant => {
            let c = c.ok_or_else(|| contract("equidistant flow needs the centre height c"))?;
            if !(c > 0.0 && c < r) {
                return Err(contract(format!("equidistant flow needs 0 < c < R, got c = {c}, R = {r}")));
            }
            let a = ((r - c) * (r + c)).sqrt();
            Ok(ExactFlow {
                kind,
                r0: r,
                a,
                c,
                t_min: (a / r).ln(),
            })
        }
    }
}

impl ExactFlow {
    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn initial_radius(&self) -> f64 {
        self.r0
    }

    /// Half-width of the foot of an equidistant arc; zero for the other kinds.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// First time at which the flow exists; `−∞` for ancient flows.
    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn radius(&self, t: f64) -> f64 {
        match self.kind {
            FlowKind::HyperbolicCircle => (self.r0.sinh() * t.exp()).asinh(),
            FlowKind::Horocycle | FlowKind::Equidistant => self.r0 * t.exp(),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t > self.t_min && t.is_finite() {
            Ok(())
        } else {
            Err(domain(format!("t = {t} is not after t_min = {}", self.t_min)))
        }
    }

    /// Height of the Euclidean centre of an equidistant arc, `√(r² − a²)`.
    pub fn center_height(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self.kind {
            FlowKind::HyperbolicCircle => self.radius(t).cosh(),
            FlowKind::Horocycle => self.radius(t),
            FlowKind::Equidistant => {
                let r = self.radius(t);
                ((r - self.a) * (r + self.a)).sqrt()
            }
        })
    }

    /// Closed-form hyperbolic curvature of the evolving curve.
    pub fn curvature(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let r = self.radius(t);
        Ok(match self.kind {
            FlowKind::HyperbolicCircle => 1.0 / r.tanh(),
            FlowKind::Horocycle => 1.0,
            FlowKind::Equidistant => self.center_height(t)? / r,
        })
    }

    /// Point with parameter `u ∈ [0, 1]` at time `t`. For the open families
    /// `u = 0` and `u = 1` are the feet on `y = 0` and are rejected.
    pub fn point(&self, t: f64, u: f64) -> Result<HPoint> {
        self.check_time(t)?;
        let r = self.radius(t);
        let (cx, cy, rad, angle) = match self.kind {
            FlowKind::HyperbolicCircle => (0.0, r.cosh(), r.sinh(), 2.0 * PI * u),
            FlowKind::Horocycle => (0.0, r, r, -0.5 * PI + 2.0 * PI * u),
            FlowKind::Equidistant => {
                let h = self.center_height(t)?;
                let s0 = -(h / r).asin();
                (0.0, h, r, s0 + u * (PI - 2.0 * s0))
            }
        };
        HPoint::new(cx + rad * angle.cos(), cy + rad * angle.sin())
    }

    /// Samples the curve at time `t`: `n` equally spaced parameters on the
    /// closed circle, or `n` cell-centred parameters on the open families.
    pub fn curve_at(&self, t: f64, n: usize) -> Result<PolyCurve> {
        if n < 3 {
            return Err(contract("curve_at needs at least 3 samples"));
        }
        let closed = self.kind == FlowKind::HyperbolicCircle;
        let pts = (0..n)
            .map(|k| {
                let u = if closed {
                    k as f64 / n as f64
                } else {
                    (k as f64 + 0.5) / n as f64
                };
                self.point(t, u)
            })
            .collect::<Result<Vec<_>>>()?;
        PolyCurve::new(pts, closed)
    }

    /// The part of an open curve at height `y ≥ y_cut`, sampled at `n` evenly
    /// spaced parameters including both cut points.
    pub fn arc_above(&self, t: f64, y_cut: f64, n: usize) -> Result<PolyCurve> {
        self.check_time(t)?;
        if n < 3 {
            return Err(contract("arc_above needs at least 3 samples"));
        }
        let r = self.radius(t);
        let (lo, hi) = match self.kind {
            FlowKind::HyperbolicCircle => return Err(contract("a hyperbolic circle is closed")),
            FlowKind::Horocycle => {
                let q = 1.0 - y_cut / r;
                if !(y_cut > 0.0 && q > -1.0) {
                    return Err(domain(format!("cut height {y_cut} misses the horocycle")));
                }
                let u = q.acos() / (2.0 * PI);
                (u, 1.0 - u)
            }
            FlowKind::Equidistant => {
                let h = self.center_height(t)?;
                let q = (y_cut - h) / r;
                if !(y_cut > 0.0 && q < 1.0) {
                    return Err(domain(format!("cut height {y_cut} misses the arc")));
                }
                let s0 = -(h / r).asin();
                let a = q.asin().max(s0);
                ((a - s0) / (PI - 2.0 * s0), (PI - a - s0) / (PI - 2.0 * s0))
            }
        };
        let pts = (0..n)
            .map(|k| self.point(t, lo + (hi - lo) * k as f64 / (n - 1) as f64))
            .collect::<Result<Vec<_>>>()?;
        PolyCurve::new(pts, false)
    }

    /// The geodesic half-circle of Euclidean radius `a` centred at the origin
    /// that an equidistant flow approaches as `t → t_min`.
    pub fn geodesic_limit(&self, n: usize) -> Result<PolyCurve> {
        if self.kind != FlowKind::Equidistant {
            return Err(contract("only equidistant flows have a geodesic limit"));
        }
        if n < 3 {
            return Err(contract("geodesic_limit needs at least 3 samples"));
        }
        let pts = (0..n)
            .map(|k| {
                let s = PI * (k as f64 + 0.5) / n as f64;
                HPoint::new(self.a * s.cos(), self.a * s.sin())
            })
            .collect::<Result<Vec<_>>>()?;
        PolyCurve::new(pts, false)
    }
}

/// Default finite-difference step in `t`.
pub fn default_time_step(t: f64) -> f64 {
    1e-4 * t.abs().max(1.0)
}

/// Maximum of `|⟨∂γ/∂t, N⟩ + 1/κ|` over the sampled vertices, with the time
/// derivative taken by a central difference of step [`default_time_step`].
pub fn flow_residual(flow: &ExactFlow, t: f64, n: usize) -> Result<f64> {
    flow_residual_with_step(flow, t, n, default_time_step(t))
}

pub fn flow_residual_with_step(flow: &ExactFlow, t: f64, n: usize, dt: f64) -> Result<f64> {
    if n < 16 {
        return Err(contract(format!("flow_residual needs n ≥ 16, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(contract("time step must be positive"));
    }
    flow.check_time(t)?;
    flow.check_time(t - dt)?;
    let curve = flow.curve_at(t, n)?;
    let closed = curve.is_closed();
    let mut worst: f64 = 0.0;
    for i in curve.interior_indices() {
        let u = if closed {
            i as f64 / n as f64
        } else {
            (i as f64 + 0.5) / n as f64
        };
        let s = curvature_at(&curve, i)?;
        let (p, m) = (flow.point(t + dt, u)?, flow.point(t - dt, u)?);
        let vel = TangentVector::new(s.normal.base, (p.x - m.x) / (2.0 * dt), (p.y - m.y) / (2.0 * dt));
        let r = (hyperbolic_inner(&vel, &s.normal)? + 1.0 / s.kappa_h).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hausdorff_distance;

    #[test]
    fn closed_form_radii() {
        let c = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None).unwrap();
        assert_eq!(c.radius(0.0), 1.0);
        assert!((c.radius(1.0) - 1.878_230_165_811_651_4).abs() < 1e-14);
        let h = make_exact_flow(FlowKind::Horocycle, 2.0, None).unwrap();
        assert!((h.radius(2f64.ln()) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn equidistant_parameters() {
        let e = make_exact_flow(FlowKind::Equidistant, 1.0, Some(0.5)).unwrap();
        assert!((e.a() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((e.radius(e.t_min()) - e.a()).abs() < 1e-15);
        assert!((e.center_height(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(e.point(e.t_min(), 0.5).is_err());
        assert!(make_exact_flow(FlowKind::Equidistant, 1.0, Some(1.0)).is_err());
        assert!(make_exact_flow(FlowKind::Equidistant, 1.0, None).is_err());
        assert!(make_exact_flow(FlowKind::Horocycle, -1.0, None).is_err());
    }

    #[test]
    fn radius_is_increasing() {
        for kind in [FlowKind::HyperbolicCircle, FlowKind::Horocycle, FlowKind::Equidistant] {
            let f = make_exact_flow(kind, 1.3, Some(0.4)).unwrap();
            let ts: Vec<f64> = (0..50).map(|k| f.t_min().max(-5.0) + 0.01 + 0.1 * k as f64).collect();
            assert!(ts.windows(2).all(|w| f.radius(w[1]) > f.radius(w[0])));
        }
        let c = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None).unwrap();
        assert!(c.radius(-40.0) < 1e-15);
    }

    #[test]
    fn sampled_curvature_matches_closed_form() {
        for kind in [FlowKind::HyperbolicCircle, FlowKind::Horocycle, FlowKind::Equidistant] {
            let f = make_exact_flow(kind, 1.0, Some(0.5)).unwrap();
            for t in [0.0, 0.3] {
                let curve = f.curve_at(t, 64).unwrap();
                let k = f.curvature(t).unwrap();
                for i in curve.interior_indices() {
                    let s = curvature_at(&curve, i).unwrap();
                    assert!((s.kappa_h - k).abs() < 1e-10, "{kind:?} t={t} i={i}: {} vs {k}", s.kappa_h);
                }
            }
        }
    }

    #[test]
    fn residual_is_small_and_second_order() {
        let f = make_exact_flow(FlowKind::Equidistant, 1.0, Some(0.5)).unwrap();
        let r = flow_residual_with_step(&f, 0.1, 1024, 1e-4).unwrap();
        assert!(r < 1e-4, "{r}");
        let c = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None).unwrap();
        let coarse = flow_residual_with_step(&c, 0.5, 256, 1e-2).unwrap();
        let fine = flow_residual_with_step(&c, 0.5, 512, 5e-3).unwrap();
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn residual_rejects_early_times() {
        let f = make_exact_flow(FlowKind::Equidistant, 1.0, Some(0.5)).unwrap();
        assert!(flow_residual(&f, f.t_min(), 64).is_err());
        assert!(flow_residual(&f, 0.0, 8).is_err());
    }

    #[test]
    fn equidistant_approaches_geodesic() {
        let f = make_exact_flow(FlowKind::Equidistant, 1.0, Some(0.5)).unwrap();
        let g = f.geodesic_limit(2000).unwrap();
        let d: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|dt| hausdorff_distance(&f.curve_at(f.t_min() + dt, 2000).unwrap(), &g))
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    }
}
