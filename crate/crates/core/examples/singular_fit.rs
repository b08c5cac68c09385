//! Near-ray fits of α₁: a log law in the disk and ε⁻¹ scaling in the ball,
//! compared with the predicted coefficients.

use std::f64::consts::PI;

use radtrans::geometry::{orthonormal_pair, p3, planar_perpendicular};
use radtrans::singularity::{default_eps, expected_coefficient, singular_coefficient};
use radtrans::{BoundaryPair, DomainGeometry, OpticalMedium};

fn main() -> radtrans::Result<()> {
    let disk = DomainGeometry::unit_disk();
    let m = OpticalMedium::constant_hg(disk, 1.0, 0.3, 0.6)?;
    let pair = BoundaryPair::planar(&disk, PI, 0.2)?;
    let t0 = 0.5 * pair.chord(&disk);
    let perp = planar_perpendicular(&pair.direction);
    let eps = default_eps(&m, &pair.at(t0), &perp);
    let fit = singular_coefficient(&m, &pair, t0, &eps, &perp)?;
    println!("disk: fitted {:.6}, predicted {:.6}", fit.coefficient, expected_coefficient(&m, &pair.at(t0), &pair.direction));
    for (e, f, model) in fit.rows().into_iter().step_by(2) {
        println!("  ε = {e:.2e}  f = {f:.6}  model = {model:.6}");
    }

    let ball = DomainGeometry::unit_ball();
    let m = OpticalMedium::constant_hg(ball, 1.0, 0.25, 0.5)?;
    let pair = BoundaryPair::new(&ball, p3(0.0, 0.0, -1.0), p3(0.0, 0.0, 1.0))?;
    let (e1, _) = orthonormal_pair(&pair.direction);
    let eps = default_eps(&m, &pair.at(1.0), &e1);
    let fit = singular_coefficient(&m, &pair, 1.0, &eps, &e1)?;
    println!(
        "ball: fitted {:.6}, predicted {:.6}, correction order {:?}",
        fit.coefficient,
        expected_coefficient(&m, &pair.at(1.0), &pair.direction),
        fit.correction_order
    );
    Ok(())
}
