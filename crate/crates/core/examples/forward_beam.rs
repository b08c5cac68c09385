//! Forward solve for a narrow beam in a scattering disk, split into collision
//! orders, and the scattered column compared with α₁ + α₂ at a few points.

use std::f64::consts::PI;
use std::time::Instant;

use radtrans::geometry::p2;
use radtrans::kernels::{alpha1, alpha2};
use radtrans::transport::{energy_map, scattered_column, solve_forward, Beam, BoundarySource, SolverOptions};
use radtrans::{BoundaryPair, DomainGeometry, OpticalMedium};

fn main() -> radtrans::Result<()> {
    let geom = DomainGeometry::unit_disk();
    let medium = OpticalMedium::constant(geom, 1.0, 0.25)?;
    let pair = BoundaryPair::planar(&geom, PI, 0.2)?;
    let opts = SolverOptions {
        grid_n: 96,
        ..Default::default()
    };

    let start = Instant::now();
    let sol = solve_forward(&medium, &BoundarySource::Beam(Beam::new(pair)), &opts)?;
    let h = energy_map(&medium, &sol.field)?;
    println!("beam solve: {:?}, {} orders", start.elapsed(), sol.residuals.len());
    println!("absorbed energy ∫H = {:.6}", h.integral());
    for (m, e) in sol.order_energy.iter().enumerate().take(5) {
        let total: f64 = e.iter().sum::<f64>() * h.grid.cell_area();
        println!("  order {m}: {total:.6e}");
    }

    let start = Instant::now();
    let col = scattered_column(&medium, &pair, &opts)?;
    println!("scattered column: {:?}", start.elapsed());
    let grid = col.column.points.clone();
    let two = col.partial(2);
    println!("{:>16} {:>12} {:>12} {:>8}", "x", "orders 1+2", "α₁+α₂", "rel");
    for target in [p2(0.0, 0.4), p2(0.3, -0.3), p2(-0.5, 0.2)] {
        let (i, x) = grid
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).norm().partial_cmp(&(b.1 - target).norm()).unwrap())
            .unwrap();
        let k = alpha1(&medium, x, &pair)? + alpha2(&medium, x, &pair)?;
        println!(
            "({:6.3}, {:6.3}) {:12.6} {:12.6} {:8.2e}",
            x.x,
            x.y,
            two[i],
            k,
            (two[i] - k).abs() / k
        );
    }
    Ok(())
}
