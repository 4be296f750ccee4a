//! Flows soliton curves with the front tracker and measures how far they
//! drift from the translated initial curve, with a circle as control.

use std::f64::consts::FRAC_PI_2;

use hypflow::conformal::uniform_conformal_curve;
use hypflow::exact::{make_exact_flow, FlowKind};
use hypflow::flow::{verify_soliton_translation, EndCondition, FlowControl, SpacingMetric};
use hypflow::geometry::KillingField;
use hypflow::orbit::SampleWindow;
use hypflow::parabolic::uniform_soliton_curve;

fn main() -> hypflow::Result<()> {
    let window = SampleWindow::default();
    let circle = make_exact_flow(FlowKind::HyperbolicCircle, 1.0, None)?.curve_at(0.0, 256)?;
    for k in 0..3 {
        let (h, dt) = (0.02 / 2f64.powf(0.5 * k as f64), 1e-4 / 2f64.powi(k));
        let ctrl = FlowControl {
            dt,
            spacing: Some(h),
            metric: SpacingMetric::Euclidean,
            ..FlowControl::default()
        };
        let para = verify_soliton_translation(
            &uniform_soliton_curve(1.0, FRAC_PI_2, h, &window)?,
            KillingField::Parabolic,
            0.1,
            &FlowControl {
                ends: EndCondition::FieldFlow(KillingField::Parabolic),
                ..ctrl
            },
        )?;
        let conf = verify_soliton_translation(
            &uniform_conformal_curve(2.0, 0.0, h, &window)?,
            KillingField::ConformalVertical,
            0.1,
            &FlowControl {
                ends: EndCondition::FieldFlow(KillingField::ConformalVertical),
                ..ctrl
            },
        )?;
        let control = verify_soliton_translation(
            &circle,
            KillingField::Parabolic,
            0.1,
            &FlowControl {
                dt,
                ..FlowControl::default()
            },
        )?;
        println!("dt = {dt:.2e}, h = {h:.4}: parabolic {para:.3e}  conformal {conf:.3e}  circle {control:.3e}");
    }
    Ok(())
}
