//! σ_a from the ballistic profile of a scattering-free medium.

use std::f64::consts::PI;

use radtrans::kernels::{eta_profile, midpoint_times};
use radtrans::reconstruct::recover_sigma_a_scattering_free;
use radtrans::{BoundaryPair, CoefficientField, DomainGeometry, OpticalMedium, Phase};

fn main() -> radtrans::Result<()> {
    let geom = DomainGeometry::unit_disk();
    let truth = |x: f64, y: f64| 0.6 + 0.4 * (-6.0 * ((x - 0.2).powi(2) + y * y)).exp();
    let medium = OpticalMedium::from_absorption(geom, CoefficientField::function(move |p| truth(p.x, p.y)), Phase::None)?;

    for (phi, theta) in [(PI, 0.0), (2.5, 0.2), (4.0, -0.3)] {
        let pair = BoundaryPair::planar(&geom, phi, theta)?;
        let tau = pair.chord(&geom);
        let ts = midpoint_times(tau, 1000);
        let out = recover_sigma_a_scattering_free(&eta_profile(&medium, &pair, &ts)?)?;
        let err = ts
            .iter()
            .zip(&out.sigma_a)
            .map(|(t, s)| {
                let p = pair.at(*t);
                (s - truth(p.x, p.y)).abs()
            })
            .fold(0.0, f64::max);
        println!("chord φ = {phi:.2}, θ = {theta:+.2}: max |σ_a error| = {err:.2e}");
    }
    Ok(())
}
