use std::f64::consts::{FRAC_PI_2, PI};

use hypflow::conformal::{conformal_curve, conformal_residual, integrate_conformal, uniform_conformal_curve};
use hypflow::geometry::{classify_constant_curvature, soliton_residual, CurveLabel, KillingField};
use hypflow::orbit::{OrbitControl, SampleWindow};
use hypflow::parabolic::{gamma_curve, integrate_orbit, soliton_curve, uniform_soliton_curve, OrbitType};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parabolic_orbit_monotonicity(y0 in 0.05f64..5.0, theta0 in 0.05f64..(PI - 0.05)) {
        let t = integrate_orbit(y0, theta0, &OrbitControl::default()).unwrap();
        for w in t.samples.windows(2) {
            // y' = sinθ, so the rise is below one ulp when a step ends at θ ≈ π
            let rise = (w[1].s - w[0].s) * w[0].theta.sin().min(w[1].theta.sin());
            prop_assert!(w[1].y >= w[0].y, "y decreasing at s = {}", w[0].s);
            if rise > 4.0 * f64::EPSILON * w[0].y {
                prop_assert!(w[1].y > w[0].y, "y not increasing at s = {}", w[0].s);
            }
            if w[0].theta > FRAC_PI_2 && w[1].theta > FRAC_PI_2 {
                prop_assert!(w[1].theta > w[0].theta);
            }
        }
    }

    #[test]
    fn parabolic_orbits_reach_theta_pi(y0 in 0.05f64..5.0, theta0 in 0.05f64..(PI - 0.05)) {
        let t = integrate_orbit(y0, theta0, &OrbitControl::default()).unwrap();
        let last = t.samples[t.samples.len() - 1];
        prop_assert!((PI - last.theta) < 1e-5);
        prop_assert!(t.asymptote().is_some_and(f64::is_finite));
    }

    /// Near (0, π/2) the orbit behaves like θ − π/2 ≈ y·ln y + C·y, so it dips
    /// below π/2 and meets Γ once before reaching the axis. With a deep enough
    /// height floor every start ends up TypeI or TypeII.
    #[test]
    fn deep_floor_leaves_only_two_types(y0 in 0.05f64..5.0, theta0 in 0.05f64..(PI - 0.05)) {
        let t = integrate_orbit(y0, theta0, &deep_floor()).unwrap();
        prop_assert!([OrbitType::TypeI, OrbitType::TypeII].contains(&t.label), "{}", t.label);
        if t.label == OrbitType::TypeI {
            prop_assert!(t.gamma_crossings.len() == 1 || y0 <= gamma_curve(theta0));
        }
    }

    #[test]
    fn type_one_crosses_gamma_once_backward(y0 in 0.05f64..5.0, theta0 in 0.3f64..(PI - 0.3)) {
        prop_assume!(y0 > gamma_curve(theta0));
        let t = integrate_orbit(y0, theta0, &OrbitControl::default()).unwrap();
        if t.label == OrbitType::TypeI {
            let behind = t.gamma_crossings.iter().filter(|c| c.s < 0.0).count();
            prop_assert_eq!(behind, 1);
        }
    }

    #[test]
    fn conformal_orbit_monotonicity(y0 in 0.1f64..5.0, theta0 in -1.4f64..1.4) {
        let t = integrate_conformal(y0, theta0, &OrbitControl::default()).unwrap();
        for w in t.samples.windows(2) {
            prop_assert!(w[1].theta < w[0].theta);
            if w[0].theta > 0.0 && w[1].theta > 0.0 {
                prop_assert!(w[1].y > w[0].y);
            }
            if w[0].theta < 0.0 && w[1].theta < 0.0 {
                prop_assert!(w[1].y < w[0].y);
            }
        }
        let (first, last) = (t.samples[0], t.samples[t.samples.len() - 1]);
        prop_assert!((first.theta - FRAC_PI_2).abs() < 1e-5 && (last.theta + FRAC_PI_2).abs() < 1e-5);
    }

    #[test]
    fn conformal_end_height_closed_form(y0 in 0.1f64..5.0) {
        // cos²θ as a function of y solves w' = 2 + 2w/y, so w = y²(1/y0² + 2/y0) − 2y
        // and both ends (w = 0) sit at y* = y0²/(y0 + 1/2).
        let t = integrate_conformal(y0, 0.0, &OrbitControl::default()).unwrap();
        let expected = y0 * y0 / (y0 + 0.5);
        prop_assert!((t.backward_limit.y - expected).abs() < 1e-8 * expected.max(1.0));
        prop_assert!((t.forward_limit.y - expected).abs() < 1e-8 * expected.max(1.0));
    }

    #[test]
    fn conformal_orbit_is_symmetric(y0 in 0.1f64..5.0) {
        let t = integrate_conformal(y0, 0.0, &OrbitControl::default()).unwrap();
        let x0 = t.samples[t.start_index].x;
        for smp in t.samples.iter().skip(t.start_index).step_by(5) {
            let m = t.state_at(-smp.sigma).unwrap();
            prop_assert!((m[0] - smp.y).abs() < 1e-8, "y {} vs {}", m[0], smp.y);
            prop_assert!((m[1] + smp.theta).abs() < 1e-8);
            prop_assert!((m[2] - (2.0 * x0 - smp.x)).abs() < 1e-8);
            prop_assert!((m[3] + smp.s).abs() < 1e-8);
        }
    }

    #[test]
    fn solitons_are_not_constant_curvature(y0 in 0.05f64..5.0) {
        let ctrl = OrbitControl::default();
        let p = soliton_curve(&integrate_orbit(y0, FRAC_PI_2, &ctrl).unwrap()).unwrap();
        prop_assert_eq!(classify_constant_curvature(&p.curve, 1e-3).unwrap().label, CurveLabel::NonConstant);
        let c = conformal_curve(&integrate_conformal(y0, 0.0, &ctrl).unwrap()).unwrap();
        prop_assert_eq!(classify_constant_curvature(&c.curve, 1e-3).unwrap().label, CurveLabel::NonConstant);
    }
}

fn deep_floor() -> OrbitControl {
    OrbitControl {
        eps_boundary: 1e-60,
        atol: 1e-300,
        ..OrbitControl::default()
    }
}

#[test]
fn orthogonal_label_is_a_floor_artefact() {
    let shallow = integrate_orbit(0.05, 2.5, &OrbitControl::default()).unwrap();
    assert_eq!(shallow.label, OrbitType::OrthogonalToXAxis);
    assert!(shallow.gamma_crossings.is_empty());
    let deep = integrate_orbit(0.05, 2.5, &deep_floor()).unwrap();
    assert_eq!(deep.label, OrbitType::TypeI);
    assert_eq!(deep.gamma_crossings.len(), 1);
    assert!(deep.gamma_crossings[0].y < 1e-6);
}

#[test]
fn refined_boundary_guard_moves_the_end_closer() {
    let coarse = OrbitControl {
        eps_boundary: 1e-4,
        ..OrbitControl::default()
    };
    let fine = OrbitControl {
        eps_boundary: 1e-7,
        ..OrbitControl::default()
    };
    for y0 in [0.3, 1.0, 3.0] {
        let gap = |c: &OrbitControl| {
            let t = integrate_orbit(y0, FRAC_PI_2, c).unwrap();
            PI - t.samples[t.samples.len() - 1].theta
        };
        assert!(gap(&fine) < gap(&coarse));
    }
}

#[test]
fn residuals_vanish_under_refinement() {
    let w = SampleWindow::default();
    for y0 in [0.5, 1.5, 3.0] {
        let r: Vec<f64> = [4e-4, 2e-4, 1e-4]
            .iter()
            .map(|&h| soliton_residual(&uniform_soliton_curve(y0, FRAC_PI_2, h, &w).unwrap(), KillingField::Parabolic).unwrap())
            .collect();
        assert!(r[1] < r[0] && r[2] < r[1], "{r:?}");
    }
}

#[test]
fn mirrored_conformal_curve_solves_the_same_equation() {
    let w = SampleWindow::default();
    for y0 in [0.5, 1.0, 2.0] {
        let c = uniform_conformal_curve(y0, 0.0, 1e-4, &w).unwrap();
        let m = c.try_map(|p| hypflow::geometry::HPoint::new(-p.x, p.y)).unwrap();
        let (a, b) = (conformal_residual(&c).unwrap(), conformal_residual(&m).unwrap());
        assert!(b < 1e-6 && (a - b).abs() < 1e-9, "{a} vs {b}");
    }
}
