//! Anisotropy g(x) of a Henyey–Greenstein medium at probe points, from
//! kernel-level data: chord reconstruction, near-ray fits, σ_g, then g.

use std::f64::consts::PI;
use std::time::Instant;

use radtrans::geometry::p2;
use radtrans::reconstruct::{anisotropy_pipeline, PipelineOptions, ReconstructionConfig};
use radtrans::{BoundaryPair, CoefficientField, DomainGeometry, OpticalMedium, Phase, SigmaField};

fn main() -> radtrans::Result<()> {
    let geom = DomainGeometry::unit_disk();
    let g_true = |x: f64, y: f64| 0.3 + 0.4 * (1.0 - x * x - y * y);
    let medium = OpticalMedium::new(
        geom,
        SigmaField::Isotropic(CoefficientField::function(|x| 1.0 + 0.2 * x.x * x.x + 0.1 * x.y)),
        Phase::HenyeyGreenstein {
            sigma_s: CoefficientField::function(|x| 0.3 + 0.1 * x.y * x.y),
            g: CoefficientField::function(move |x| g_true(x.x, x.y)),
        },
    )?;
    let probes: Vec<_> = (0..8)
        .map(|k| {
            let a = PI * k as f64 / 4.0 + 0.2;
            let r = if k % 2 == 0 { 0.45 } else { 0.2 };
            p2(r * a.cos(), r * a.sin())
        })
        .collect();
    let cfg = ReconstructionConfig::new(0.1, vec![BoundaryPair::planar(&geom, PI, 0.0)?])?.with_known(medium.clone());

    let start = Instant::now();
    let (estimates, field) = anisotropy_pipeline(&medium, &probes, &cfg, &PipelineOptions::default())?;
    println!("pipeline: {:?}", start.elapsed());
    println!("{:>16} {:>10} {:>10} {:>10}", "x", "σ_g", "g", "g true");
    for e in &estimates {
        println!(
            "({:6.3}, {:6.3}) {:10.5} {:10.5} {:10.5}",
            e.point.x,
            e.point.y,
            e.sigma_g,
            e.g.unwrap_or(f64::NAN),
            g_true(e.point.x, e.point.y)
        );
    }
    println!("excluded {:?}, saturated {:?}", field.excluded, field.saturated);
    Ok(())
}
