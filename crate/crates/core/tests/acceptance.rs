//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use hypflow::conformal::{conformal_curve, conformal_residual, integrate_conformal, trace_distance, uniform_conformal_curve};
use hypflow::exact::{flow_residual_with_step, make_exact_flow, FlowKind};
use hypflow::flow::{fit_circle, simulate, verify_soliton_translation, EndCondition, FlowControl, SpacingMetric};
use hypflow::geometry::{classify_constant_curvature, hausdorff_distance, soliton_residual, CurveLabel, KillingField};
use hypflow::orbit::{OrbitControl, SampleWindow};
use hypflow::parabolic::{
    classify_sweep, integrate_orbit, soliton_curve, threshold_search, uniform_soliton_curve, OrbitType, THRESHOLD_BRACKET,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> hypflow::Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn grid() -> Vec<f64> {
    (1..=100).map(|k| 0.05 * k as f64).collect()
}

fn exact_flow_residual() -> hypflow::Result<Outcome> {
    let start = Instant::now();
    let flow = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [0.0, 0.5, 1.0] {
        let fine = flow_residual_with_step(&flow, t, 1024, 1e-4)?;
        let coarse = flow_residual_with_step(&flow, t, 512, 2e-4)?;
        let ratio = coarse / fine;
        pass &= fine < 1e-4 && (3.0..5.0).contains(&ratio);
        parts.push(format!("t={t}: {fine:.2e} (x{ratio:.2})"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    outcome(pass, format!("{} in {elapsed:.2?}", parts.join(", ")))
}

fn simulator_vs_closed_form() -> hypflow::Result<Outcome> {
    let start = Instant::now();
    let flow = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?;
    let exact = (1f64.sinh() * 0.5f64.exp()).asinh();
    let mut errs = Vec::new();
    for dt in [1e-4, 5e-5] {
        let ctrl = FlowControl {
            dt,
            t_end: 0.5,
            ..FlowControl::default()
        };
        let run = simulate(&flow.curve_at(0.0, 512)?, &ctrl)?;
        let r = fit_circle(&run.last().curve)?.hyperbolic_radius();
        errs.push((r - exact).abs());
    }
    let ratio = errs[0] / errs[1];
    let elapsed = start.elapsed();
    outcome(
        errs[0] < 1e-3 && (1.7..2.3).contains(&ratio) && elapsed < Duration::from_secs(30),
        format!("error {:.3e} at dt=1e-4, {:.3e} at dt=5e-5 (x{ratio:.2}) in {elapsed:.2?}", errs[0], errs[1]),
    )
}

fn equidistant_backward_limit() -> hypflow::Result<Outcome> {
    let flow = make_exact_flow(FlowKind::Equidistant, 1.0, Some(0.5))?;
    let a = 3f64.sqrt() / 2.0;
    let t_min = (a / 1.0f64).ln();
    let n = 4000;
    let geodesic = flow.geodesic_limit(n)?;
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|dt| Ok(hausdorff_distance(&flow.curve_at(t_min + dt, n)?, &geodesic)))
        .collect::<hypflow::Result<_>>()?;
    let decreasing = d.windows(2).all(|w| w[1] < w[0]);
    outcome(
        (flow.a() - a).abs() < 1e-15 && (flow.t_min() - t_min).abs() < 1e-15 && decreasing && d[2] < 1e-3,
        format!(
            "distance {:.3e} / {:.3e} / {:.3e} at t_min + 1e-2 / 1e-3 / 1e-4",
            d[0], d[1], d[2]
        ),
    )
}

fn parabolic_dichotomy() -> hypflow::Result<Outcome> {
    let start = Instant::now();
    let ctrl = OrbitControl::default();
    let starts: Vec<(f64, f64)> = grid().into_iter().map(|y| (y, FRAC_PI_2)).collect();
    let labels: Vec<OrbitType> = classify_sweep(&starts, &ctrl)
        .into_iter()
        .map(|t| t.map(|t| t.label))
        .collect::<hypflow::Result<_>>()?;
    let switch = labels.iter().position(|&l| l != OrbitType::TypeI).unwrap_or(labels.len());
    let single_switch =
        switch > 0 && switch < labels.len() && labels[switch..].iter().all(|&l| l == OrbitType::TypeII);
    let search = threshold_search(&ctrl, THRESHOLD_BRACKET, 1e-8)?;
    let h = search.h;
    let below = integrate_orbit(h * (1.0 - 1e-3), FRAC_PI_2, &ctrl)?.label;
    let above = integrate_orbit(h * (1.0 + 1e-3), FRAC_PI_2, &ctrl)?.label;
    let width = search.hi - search.lo;
    let elapsed = start.elapsed();
    let switch_y = starts.get(switch).map_or(f64::NAN, |s| s.0);
    outcome(
        single_switch
            && width < 1e-8
            && below == OrbitType::TypeI
            && above == OrbitType::TypeII
            && h > switch_y - 0.05
            && h < switch_y
            && elapsed < Duration::from_secs(60),
        format!("switch before y0 = {switch_y:.2}, H = {h:.10} (width {width:.2e}), H(1∓1e-3): {below} / {above}, {elapsed:.2?}"),
    )
}

fn parabolic_limits() -> hypflow::Result<Outcome> {
    let ctrl = OrbitControl {
        eps_boundary: 1e-7,
        ..OrbitControl::default()
    };
    let fine = OrbitControl { rtol: 1e-12, atol: 1e-14, ..ctrl };
    let (mut worst_theta_star, mut worst_y_star, mut worst_theta_m, mut worst_dy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for y0 in grid() {
        let t = integrate_orbit(y0, FRAC_PI_2, &ctrl)?;
        let last = t.samples[t.samples.len() - 1];
        worst_theta_m = worst_theta_m.max((last.theta - PI).abs());
        ok &= t.forward_limit.theta == PI;
        let y = t.asymptote();
        let y_fine = integrate_orbit(y0, FRAC_PI_2, &fine)?.asymptote();
        match (y, y_fine) {
            (Some(a), Some(b)) if a.is_finite() => worst_dy = worst_dy.max((a - b).abs()),
            _ => ok = false,
        }
        if t.label == OrbitType::TypeI {
            match t.axis_limit() {
                Some(l) => {
                    worst_theta_star = worst_theta_star.max((l.theta - FRAC_PI_2).abs());
                    worst_y_star = worst_y_star.max(t.samples[0].y);
                }
                None => ok = false,
            }
        }
    }
    outcome(
        ok && worst_theta_star < 1e-3 && worst_y_star < 1e-6 && worst_theta_m < 1e-3 && worst_dy < 1e-4,
        format!(
            "max |θ*−π/2| {worst_theta_star:.2e}, max y* {worst_y_star:.2e}, max |θ_M−π| {worst_theta_m:.2e}, max ΔY {worst_dy:.2e}"
        ),
    )
}

fn type_two_geometry() -> hypflow::Result<Outcome> {
    let ctrl = OrbitControl::default();
    let mut count = 0;
    let mut ok = true;
    let mut min_slope = f64::INFINITY;
    for y0 in grid() {
        let t = integrate_orbit(y0, FRAC_PI_2, &ctrl)?;
        if t.label != OrbitType::TypeII {
            continue;
        }
        count += 1;
        let d = soliton_curve(&t)?.descriptors;
        ok &= d.concave;
        min_slope = min_slope.min(d.slope_low.abs()).min(d.slope_high.abs());
    }
    outcome(
        ok && count > 0 && min_slope > 1e3,
        format!("{count} Type II orbits, all concave: {ok}, smallest end slope |x'(y)| {min_slope:.3e}"),
    )
}

fn conformal_geometry() -> hypflow::Result<Outcome> {
    let ctrl = OrbitControl::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for y0 in [0.5, 1.0, 2.0] {
        let t = integrate_conformal(y0, 0.0, &ctrl)?;
        let c = conformal_curve(&t)?;
        let d = c.descriptors;
        let dh = (t.backward_limit.y - t.forward_limit.y).abs();
        let x0 = t.samples[t.start_index].x;
        let mirror = hausdorff_distance(&c.curve, &c.mirrored(x0)?);
        let bounded = d.x_m.is_finite() && d.x_big_m.is_finite() && d.x_m < d.x_big_m;
        let slope = d.slope_left.abs().min(d.slope_right.abs());
        ok &= c.is_graph_on_x() && bounded && d.concave && slope > 1e3 && dh < 1e-4 && mirror < 1e-6;
        parts.push(format!("y0={y0}: Δh {dh:.1e}, |tanθ| ≥ {slope:.1e}, mirror {mirror:.1e}"));
    }
    outcome(ok, parts.join("; "))
}

fn reparametrization() -> hypflow::Result<Outcome> {
    let ctrl = OrbitControl::default();
    let t = integrate_conformal(1.0, FRAC_PI_4, &ctrl)?;
    let Some(shift) = t.reparametrization else {
        return outcome(false, "no θ = 0 crossing recorded".into());
    };
    let direct = integrate_conformal(shift.y_bar, 0.0, &ctrl)?;
    let d = trace_distance(&t, &direct);
    outcome(d < 10.0 * ctrl.rtol, format!("distance {d:.2e} against 10·rtol = {:.0e}", 10.0 * ctrl.rtol))
}

fn soliton_equations() -> hypflow::Result<Outcome> {
    let w = SampleWindow::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for y0 in [0.2, 1.0, 2.0] {
        let r: Vec<f64> = [2e-4, 1e-4]
            .iter()
            .map(|&h| soliton_residual(&uniform_soliton_curve(y0, FRAC_PI_2, h, &w)?, KillingField::Parabolic))
            .collect::<hypflow::Result<_>>()?;
        let ratio = r[0] / r[1];
        ok &= r[1] < 1e-6 && (3.0..5.0).contains(&ratio);
        parts.push(format!("parabolic y0={y0}: {:.2e} (x{ratio:.2})", r[1]));
    }
    for y0 in [0.5, 1.0, 2.0] {
        let r: Vec<f64> = [2e-4, 1e-4]
            .iter()
            .map(|&h| conformal_residual(&uniform_conformal_curve(y0, 0.0, h, &w)?))
            .collect::<hypflow::Result<_>>()?;
        let ratio = r[0] / r[1];
        ok &= r[1] < 1e-6 && (3.0..5.0).contains(&ratio);
        parts.push(format!("conformal y0={y0}: {:.2e} (x{ratio:.2})", r[1]));
    }
    outcome(ok, parts.join("; "))
}

fn soliton_translation() -> hypflow::Result<Outcome> {
    let w = SampleWindow::default();
    let circle = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?.curve_at(0.0, 256)?;
    let (mut para, mut conf, mut ctl) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..3 {
        let (h, dt) = (0.02 / 2f64.powf(0.5 * k as f64), 1e-4 / 2f64.powi(k));
        let base = FlowControl {
            dt,
            spacing: Some(h),
            metric: SpacingMetric::Euclidean,
            ..FlowControl::default()
        };
        para.push(verify_soliton_translation(
            &uniform_soliton_curve(1.0, FRAC_PI_2, h, &w)?,
            KillingField::Parabolic,
            0.1,
            &FlowControl {
                ends: EndCondition::FieldFlow(KillingField::Parabolic),
                ..base
            },
        )?);
        conf.push(verify_soliton_translation(
            &uniform_conformal_curve(2.0, 0.0, h, &w)?,
            KillingField::ConformalVertical,
            0.1,
            &FlowControl {
                ends: EndCondition::FieldFlow(KillingField::ConformalVertical),
                ..base
            },
        )?);
        ctl.push(verify_soliton_translation(
            &circle,
            KillingField::Parabolic,
            0.1,
            &FlowControl {
                dt,
                ..FlowControl::default()
            },
        )?);
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" → ");
    outcome(
        para[0] < 5e-3
            && conf[0] < 5e-3
            && decreasing(&para)
            && decreasing(&conf)
            && ctl.iter().all(|&d| d >= 1e-2),
        format!("parabolic {}; conformal {}; circle {}", fmt(&para), fmt(&conf), fmt(&ctl)),
    )
}

fn no_constant_curvature() -> hypflow::Result<Outcome> {
    let ctrl = OrbitControl::default();
    let starts: Vec<(f64, f64)> = grid().into_iter().map(|y| (y, FRAC_PI_2)).collect();
    let mut checked = 0;
    let mut constant = Vec::new();
    for t in classify_sweep(&starts, &ctrl) {
        let t = t?;
        let c = soliton_curve(&t)?;
        checked += 1;
        if classify_constant_curvature(&c.curve, 1e-3)?.label != CurveLabel::NonConstant {
            constant.push(t.y0);
        }
    }
    for y0 in [0.5, 1.0, 2.0] {
        let c = conformal_curve(&integrate_conformal(y0, 0.0, &ctrl)?)?;
        checked += 1;
        if classify_constant_curvature(&c.curve, 1e-3)?.label != CurveLabel::NonConstant {
            constant.push(y0);
        }
    }
    outcome(constant.is_empty(), format!("{checked} soliton curves, constant-curvature labels at {constant:?}"))
}

type Criterion = (&'static str, fn() -> hypflow::Result<Outcome>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("exact-flow residual", exact_flow_residual),
        ("simulator vs closed form", simulator_vs_closed_form),
        ("equidistant backward limit", equidistant_backward_limit),
        ("parabolic dichotomy", parabolic_dichotomy),
        ("parabolic end limits", parabolic_limits),
        ("type II geometry", type_two_geometry),
        ("conformal soliton geometry", conformal_geometry),
        ("reparametrization", reparametrization),
        ("soliton residuals", soliton_equations),
        ("soliton translation", soliton_translation),
        ("no constant-curvature solitons", no_constant_curvature),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("{} criterion {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
