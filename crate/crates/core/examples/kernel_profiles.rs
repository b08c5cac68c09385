//! Ballistic profile η along a chord and the single and double scattering
//! kernels approached along a perpendicular to the source ray.

use std::f64::consts::PI;

use radtrans::geometry::planar_perpendicular;
use radtrans::kernels::{alpha1, alpha2, eta_profile, midpoint_times, weight_w};
use radtrans::{BoundaryPair, DomainGeometry, OpticalMedium};

fn main() -> radtrans::Result<()> {
    let geom = DomainGeometry::unit_disk();
    let medium = OpticalMedium::constant_hg(geom, 1.0, 0.4, 0.5)?;
    let pair = BoundaryPair::planar(&geom, PI, 0.25)?;
    let tau = pair.chord(&geom);

    let eta = eta_profile(&medium, &pair, &midpoint_times(tau, 8))?;
    println!("chord length {tau:.4}");
    for (t, v) in eta.ts.iter().zip(&eta.values) {
        println!("  η({t:.3}) = {v:.6}");
    }

    let x = pair.at(0.5 * tau);
    let perp = planar_perpendicular(&pair.direction);
    println!("{:>8} {:>12} {:>12} {:>8}", "ε", "α₁", "α₂", "w₂");
    for k in 1..=5 {
        let eps = 10f64.powi(-k);
        let y = x + perp * eps;
        println!(
            "{eps:8.0e} {:12.6} {:12.6} {:8.3}",
            alpha1(&medium, &y, &pair)?,
            alpha2(&medium, &y, &pair)?,
            weight_w(&geom, &y, &pair)?
        );
    }
    Ok(())
}
