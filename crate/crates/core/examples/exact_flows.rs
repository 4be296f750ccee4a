//! Closed-form flows of circles, horocycles and equidistant curves.

use hypflow::exact::{flow_residual, make_exact_flow, FlowKind};
use hypflow::geometry::hausdorff_distance;

fn main() -> hypflow::Result<()> {
    let circle = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?;
    let horo = make_exact_flow(FlowKind::Horocycle, 1.0, None)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "circle r", "kappa", "horocycle r");
    for t in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        println!("{t:>6.2} {:>14.10} {:>14.10} {:>14.10}", circle.radius(t), circle.curvature(t)?, horo.radius(t));
    }
    for t in [0.0, 0.5, 1.0] {
        println!("residual at t = {t}: {:.3e}", flow_residual(&circle, t, 1024)?);
    }

    let eq = make_exact_flow(FlowKind::Equidistant, 1.0, Some(0.5))?;
    let geodesic = eq.geodesic_limit(4000)?;
    println!("equidistant: a = {:.12}, t_min = {:.12}", eq.a(), eq.t_min());
    for dt in [1e-1, 1e-2, 1e-3, 1e-4] {
        let d = hausdorff_distance(&eq.curve_at(eq.t_min() + dt, 4000)?, &geodesic);
        println!("  t_min + {dt:e}: distance to the geodesic {d:.3e}");
    }
    Ok(())
}
