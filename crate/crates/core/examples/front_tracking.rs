//! Front-tracking evolution of a hyperbolic circle, compared with the
//! closed-form radius at two time steps.

use hypflow::exact::{make_exact_flow, FlowKind};
use hypflow::flow::{fit_circle, simulate, FlowControl};

fn main() -> hypflow::Result<()> {
    let flow = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?;
    let exact = flow.radius(0.5);
    for dt in [1e-4, 5e-5] {
        let ctrl = FlowControl {
            dt,
            t_end: 0.5,
            ..FlowControl::default()
        };
        let run = simulate(&flow.curve_at(0.0, 512)?, &ctrl)?;
        let r = fit_circle(&run.last().curve)?.hyperbolic_radius();
        println!(
            "dt = {dt:e}: {:?}, R = {r:.10}, closed form {exact:.10}, error {:.3e}",
            run.termination,
            (r - exact).abs()
        );
    }
    Ok(())
}
