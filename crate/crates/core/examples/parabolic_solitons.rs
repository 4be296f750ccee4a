//! Classifies parabolic soliton orbits started vertically and locates the
//! switch height between the two types.

use std::f64::consts::FRAC_PI_2;

use hypflow::orbit::OrbitControl;
use hypflow::parabolic::{classify_sweep, find_threshold_H, soliton_curve};

fn main() -> hypflow::Result<()> {
    let ctrl = OrbitControl::default();
    let starts: Vec<(f64, f64)> = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0].iter().map(|&y| (y, FRAC_PI_2)).collect();
    for trace in classify_sweep(&starts, &ctrl) {
        let trace = trace?;
        let curve = soliton_curve(&trace)?;
        let d = curve.descriptors;
        println!(
            "y0 = {:4.2}: {:<7} Y = {:.9}  Y_bar = {:<14}  x in [{:.4}, {:.4}]",
            trace.y0,
            trace.label.to_string(),
            d.y_asymptote,
            d.y_bar.map_or("-".into(), |v| format!("{v:.9}")),
            d.x_extent.0,
            d.x_extent.1
        );
    }
    println!("switch height H = {:.10}", find_threshold_H(&ctrl)?);
    Ok(())
}
