//! Conformal solitons: bounded concave graphs whose two ends sit at the same
//! height, and the shift that relates starts with θ(0) ≠ 0 to θ(0) = 0.

use std::f64::consts::FRAC_PI_4;

use hypflow::conformal::{conformal_curve, integrate_conformal, trace_distance};
use hypflow::orbit::OrbitControl;

fn main() -> hypflow::Result<()> {
    let ctrl = OrbitControl::default();
    for y0 in [0.5, 1.0, 2.0] {
        let trace = integrate_conformal(y0, 0.0, &ctrl)?;
        let c = conformal_curve(&trace)?;
        println!(
            "y0 = {y0}: y* = {:.12} (left) / {:.12} (right), x in [{:.6}, {:.6}], concave {}",
            trace.backward_limit.y, trace.forward_limit.y, c.descriptors.x_m, c.descriptors.x_big_m, c.descriptors.concave
        );
    }
    let tilted = integrate_conformal(1.0, FRAC_PI_4, &ctrl)?;
    let shift = tilted.reparametrization.expect("θ(0) ≠ 0 is reparametrized");
    let direct = integrate_conformal(shift.y_bar, 0.0, &ctrl)?;
    println!(
        "θ(0) = π/4 reaches θ = 0 at y = {:.12}; distance to the direct orbit {:.2e}",
        shift.y_bar,
        trace_distance(&tilted, &direct)
    );
    Ok(())
}
