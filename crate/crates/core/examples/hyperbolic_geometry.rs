//! Distances, discrete curvature and curve classification in the half-plane.

use hypflow::geometry::{
    apply_isometry, classify_constant_curvature, curvature_at, sample_circle, HPoint, IsometryKind, DEFAULT_CLASSIFY_TOL,
};

fn main() -> hypflow::Result<()> {
    let p = HPoint::new(0.0, 1.0)?;
    let q = HPoint::new(1.0, 2.0)?;
    println!("d(p, q) = {:.12}", p.distance(&q));

    for kind in [IsometryKind::Parabolic, IsometryKind::Hyperbolic, IsometryKind::Rotation] {
        let (pp, qq) = (apply_isometry(kind, 0.7, p)?, apply_isometry(kind, 0.7, q)?);
        println!("{kind:?}: d = {:.12}", pp.distance(&qq));
    }

    // hyperbolic circle of radius 1 about (0, 1)
    let circle = sample_circle(0.0, 1f64.cosh(), 1f64.sinh(), 64, 0.0)?;
    let s = curvature_at(&circle, 10)?;
    println!("kappa_h = {:.12}, coth(1) = {:.12}", s.kappa_h, 1.0 / 1f64.tanh());

    for (name, c) in [
        ("inside", sample_circle(0.0, 2.0, 1.0, 64, 0.0)?),
        ("geodesic arc", hypflow::exact::make_exact_flow(hypflow::exact::FlowKind::Equidistant, 1.0, Some(0.5))?.geodesic_limit(64)?),
    ] {
        let class = classify_constant_curvature(&c, DEFAULT_CLASSIFY_TOL)?;
        println!("{name}: {:?} (kappa {:?})", class.label, class.kappa);
    }
    Ok(())
}
