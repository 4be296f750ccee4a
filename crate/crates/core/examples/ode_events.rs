//! Adaptive Dormand–Prince integration with event location: a pendulum run
//! until it first swings back through the vertical.

use hypflow::ode::{integrate, Crossing, Direction, EventSpec, OdeProblem, StepControl, Termination};

fn main() -> hypflow::Result<()> {
    let problem = OdeProblem {
        rhs: Box::new(|_, y: &[f64], f: &mut [f64]| {
            f[0] = y[1];
            f[1] = -y[0].sin();
        }),
        initial_state: vec![1.0, 0.0],
        s0: 0.0,
        direction: Direction::Forward,
    };
    let events = [
        EventSpec::new(|_, y: &[f64]| y[1], Crossing::Rising, false),
        EventSpec::new(|_, y: &[f64]| y[0], Crossing::Rising, true),
    ];
    let ctrl = StepControl {
        s_max: 100.0,
        ..StepControl::with_tolerances(1e-10, 1e-12)
    };
    let traj = integrate(&problem, &events, &ctrl)?;
    for hit in &traj.events {
        println!("event {} at s = {:.12}, state {:?}", hit.event, hit.s, hit.state);
    }
    assert_eq!(traj.termination, Termination::EventStop(1));
    println!("{} accepted steps, quarter periods at multiples of {:.12}", traj.nodes.len() - 1, traj.events[0].s / 2.0);
    let mid = 0.5 * traj.last().s;
    println!("dense output at s = {mid:.6}: {:?}", traj.interpolate(mid));
    Ok(())
}
