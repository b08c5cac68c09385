//! Closed-form checks run by the `selftest` task.

use std::f64::consts::PI;

use serde::Serialize;

use crate::diffusion::{solve_intensity, BoundaryData, DiffusionProblem};
use crate::error::Result;
use crate::geometry::{p2, p3, DomainGeometry};
use crate::hgmodel::{h_of_g, invert_h};
use crate::kernels::{alpha1, weight_w};
use crate::medium::{hg_phase, OpticalMedium};
use crate::singularity::{fit_law, Law};
use crate::transport::{energy_map, AngularGrid, SpatialGrid, TransportField};
use crate::{BoundaryPair, CoefficientField, Dimension};

/// One closed-form comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn check(name: &'static str, value: f64, expected: f64, tolerance: f64) -> Check {
    Check {
        name,
        value,
        expected,
        tolerance,
        passed: (value - expected).abs() <= tolerance,
    }
}

/// Runs every check; an error means a check could not be evaluated at all.
pub fn run_checks() -> Result<Vec<Check>> {
    let disk = DomainGeometry::unit_disk();
    let ball = DomainGeometry::unit_ball();
    let x = p2(1.0, 0.0);
    let mut out = vec![
        check("exit-time-center", disk.exit_time(&p2(0.0, 0.0), &x, true)?, 1.0, 1e-14),
        check("exit-time-forward", disk.exit_time(&p2(0.5, 0.0), &x, true)?, 0.5, 1e-14),
        check("exit-time-backward", disk.exit_time(&p2(0.5, 0.0), &x, false)?, 1.5, 1e-14),
        check(
            "exit-time-ball",
            ball.exit_time(&p3(0.0, 0.0, 0.3), &p3(0.0, 0.0, 1.0), true)?,
            0.7,
            1e-14,
        ),
        check("outward-normal", disk.outward_normal(&p2(0.0, -1.0))?.y, -1.0, 1e-14),
    ];

    let m = OpticalMedium::constant(disk, 1.0, 0.25)?;
    out.push(check("absorption", m.sigma_a(&p2(0.1, 0.2), &x), 0.75, 1e-15));
    out.push(check("hg-isotropic-plane", hg_phase(1.0, 0.0, 0.5, Dimension::Two)?, 0.5 / (2.0 * PI), 1e-15));
    out.push(check("hg-isotropic-space", hg_phase(0.3, 0.0, 1.0, Dimension::Three)?, 1.0 / (4.0 * PI), 1e-15));
    out.push(check("h-at-zero-space", h_of_g(0.0, Dimension::Three)?, 0.25, 1e-15));
    out.push(check("h-inverse-identity", invert_h(1.0 / PI, Dimension::Two)?, 0.0, 1e-12));
    out.push(check("attenuation-zero-path", m.attenuation(&p2(0.2, 0.1), &p2(0.2, 0.1)), 1.0, 0.0));

    let pair = BoundaryPair::new(&ball, p3(0.0, 0.0, -1.0), p3(0.0, 0.0, 1.0))?;
    out.push(check("weight-space", weight_w(&ball, &p3(0.1, 0.0, 0.0), &pair)?, 10.0, 1e-12));

    let free = OpticalMedium::constant(disk, 1.0, 0.0)?;
    let pair = BoundaryPair::planar(&disk, PI, 0.0)?;
    out.push(check("alpha1-no-scattering", alpha1(&free, &p2(0.0, 0.3), &pair)?, 0.0, 0.0));

    let grid = SpatialGrid::new(&disk, 64)?;
    let mut field = TransportField::zeros(grid, AngularGrid::new(16)?);
    field.values.iter_mut().for_each(|u| *u = 1.0);
    let h = energy_map(&m, &field)?;
    let mask = grid.mask(&disk);
    let worst = h
        .values
        .iter()
        .zip(&mask)
        .filter(|(_, &inside)| inside)
        .map(|(v, _)| (v - 2.0 * PI * 0.75).abs())
        .fold(0.0, f64::max);
    out.push(check("energy-unit-intensity", worst, 0.0, 1e-12));

    let eps: Vec<f64> = (4..12).map(|k| 0.5f64.powi(k)).collect();
    let f: Vec<f64> = eps.iter().map(|e| 3.0 * (1.0 / e).ln() + 1.0).collect();
    out.push(check("log-fit-exact", fit_law(&eps, &f, Law::Log)?.0, 3.0, 1e-10));

    let problem = DiffusionProblem::new(
        disk,
        32,
        CoefficientField::Constant(1.0),
        BoundaryData::constant(2.0),
        vec![0.0; 32 * 32],
    )?;
    let i = solve_intensity(&problem)?;
    let worst = i
        .values
        .iter()
        .zip(&i.mask)
        .filter(|(_, &inside)| inside)
        .map(|(v, _)| (v - 2.0).abs())
        .fold(0.0, f64::max);
    out.push(check("harmonic-constant", worst, 0.0, 1e-9));
    Ok(out)
}
