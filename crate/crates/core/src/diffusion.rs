//! Diffusive-regime recovery of σ_a from one internal measurement.
//!
//! With H = σ_a I the diffusion equation −∇·D∇I + σ_a I = 0 becomes the
//! Poisson-type problem ∇·D∇I = H with Dirichlet data I = φ on ∂X. Once I is
//! known, σ_a = H/I.
//!
//! Discretization: cell-centered five-point stencil on the disk mask. Faces
//! that cross the boundary are shortened to the crossing point (fraction θ of
//! a cell) and carry the boundary value to the right-hand side, which keeps
//! the matrix symmetric positive definite. Face coefficients are harmonic
//! means of D.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Dimension, DomainGeometry, Point};
use crate::medium::CoefficientField;
use crate::transport::SpatialGrid;

/// Nodes closer than this fraction of a cell to the boundary take the boundary value.
const SNAP: f64 = 1e-6;

/// Dirichlet data on ∂X.
#[derive(Clone)]
pub struct BoundaryData(pub Arc<dyn Fn(&Point) -> f64 + Send + Sync>);

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

impl BoundaryData {
    pub fn new(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn value(&self, x: &Point) -> f64 {
        (self.0)(x)
    }
}

/// Inputs of the σ_a recovery.
#[derive(Debug, Clone)]
pub struct DiffusionProblem {
    pub geometry: DomainGeometry,
    pub grid: SpatialGrid,
    pub d: CoefficientField,
    pub boundary: BoundaryData,
    /// H at every grid cell (ignored outside the disk).
    pub measurement: Vec<f64>,
}

/// Bounds checked when a problem is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemBounds {
    pub d_min: f64,
    pub phi_min: f64,
}

impl DiffusionProblem {
    /// Validates D ≥ D_min > 0, φ ≥ φ_min > 0 and H ≥ 0.
    pub fn new(
        geometry: DomainGeometry,
        grid_n: usize,
        d: CoefficientField,
        boundary: BoundaryData,
        measurement: Vec<f64>,
    ) -> Result<Self> {
        if geometry.dimension() != Dimension::Two {
            return Err(Error::UnsupportedDimension(geometry.n()));
        }
        let grid = SpatialGrid::new(&geometry, grid_n)?;
        if measurement.len() != grid.cells() {
            return Err(Error::Argument(format!(
                "measurement has {} values, grid has {} cells",
                measurement.len(),
                grid.cells()
            )));
        }
        let problem = Self {
            geometry,
            grid,
            d,
            boundary,
            measurement,
        };
        let bounds = problem.bounds();
        if !(bounds.d_min > 0.0) {
            return Err(Error::Argument(format!("D must be positive (min {})", bounds.d_min)));
        }
        if !(bounds.phi_min > 0.0) {
            return Err(Error::Argument(format!(
                "boundary data must be bounded below by a positive constant (min {})",
                bounds.phi_min
            )));
        }
        let mask = problem.grid.mask(&problem.geometry);
        if problem
            .measurement
            .iter()
            .zip(&mask)
            .any(|(h, &m)| m && !(*h >= 0.0))
        {
            return Err(Error::Argument("measurement must be nonnegative and finite".into()));
        }
        Ok(problem)
    }

    /// Sampled minima of D over the mask and φ over the boundary.
    pub fn bounds(&self) -> ProblemBounds {
        let mask = self.grid.mask(&self.geometry);
        let d_min = (0..self.grid.cells())
            .filter(|&c| mask[c])
            .map(|c| self.d.value(&self.grid.center_of(c)))
            .fold(f64::INFINITY, f64::min);
        ProblemBounds {
            d_min,
            phi_min: boundary_min(&self.geometry, &self.boundary),
        }
    }
}

fn boundary_min(geom: &DomainGeometry, phi: &BoundaryData) -> f64 {
    let c = geom.center();
    let r = geom.radius();
    (0..1024)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 1024.0;
            phi.value(&(c + crate::geometry::planar_direction(a) * r))
        })
        .fold(f64::INFINITY, f64::min)
}

/// A solved intensity on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityField {
    #[serde(skip)]
    pub grid: SpatialGrid,
    /// I at each cell; zero outside the disk.
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
    pub iterations: usize,
    pub residual: f64,
    /// Interior cells where I ≤ 0.
    pub flagged: Vec<usize>,
}

/// Assembled symmetric system A I = b on the unknown cells.
struct System {
    /// Unknown index per cell, `None` for outside or snapped cells.
    unknown: Vec<Option<usize>>,
    cells: Vec<usize>,
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    /// Values of snapped cells.
    fixed: Vec<(usize, f64)>,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Distance fraction θ ∈ (0, 1] from x to the boundary along ±axis, if the
/// boundary is crossed within one cell.
fn crossing(geom: &DomainGeometry, x: &Point, dir: &crate::geometry::Vector, h: f64) -> f64 {
    (geom.exit_distance(x, dir) / h).min(1.0)
}

fn assemble(
    geom: &DomainGeometry,
    grid: &SpatialGrid,
    d: &CoefficientField,
    reaction: Option<&CoefficientField>,
    phi: &BoundaryData,
    source: &[f64],
) -> System {
    let n = grid.n();
    let h = grid.spacing();
    let mask = grid.mask(geom);
    let dirs = [
        (1isize, 0isize, crate::geometry::Vector::new(1.0, 0.0, 0.0)),
        (-1, 0, crate::geometry::Vector::new(-1.0, 0.0, 0.0)),
        (0, 1, crate::geometry::Vector::new(0.0, 1.0, 0.0)),
        (0, -1, crate::geometry::Vector::new(0.0, -1.0, 0.0)),
    ];
    let mut fixed = Vec::new();
    let mut snapped = vec![false; grid.cells()];
    for c in 0..grid.cells() {
        if !mask[c] {
            continue;
        }
        let x = grid.center_of(c);
        for (_, _, v) in &dirs {
            if geom.exit_distance(&x, v) < SNAP * h {
                snapped[c] = true;
            }
        }
        if snapped[c] {
            let nu = (x - geom.center()).normalize();
            fixed.push((c, phi.value(&(geom.center() + nu * geom.radius()))));
        }
    }
    let fixed_value = |c: usize| fixed.iter().find(|f| f.0 == c).map(|f| f.1).unwrap_or(0.0);
    let mut unknown = vec![None; grid.cells()];
    let mut cells = Vec::new();
    for c in 0..grid.cells() {
        if mask[c] && !snapped[c] {
            unknown[c] = Some(cells.len());
            cells.push(c);
        }
    }
    let m = cells.len();
    let mut diag = vec![0.0; m];
    let mut off = vec![Vec::with_capacity(4); m];
    let mut rhs = vec![0.0; m];
    for (k, &c) in cells.iter().enumerate() {
        let x = grid.center_of(c);
        let dp = d.value(&x);
        let (i, j) = ((c / n) as isize, (c % n) as isize);
        for (di, dj, v) in &dirs {
            let (a, b) = (i + di, j + dj);
            let inside = a >= 0 && b >= 0 && a < n as isize && b < n as isize;
            let q = if inside { Some(grid.index(a as usize, b as usize)) } else { None };
            let theta = crossing(geom, &x, v, h);
            if let Some(q) = q.filter(|&q| theta >= 1.0 && mask[q]) {
                let dq = d.value(&grid.center_of(q));
                let coef = harmonic(dp, dq) / (h * h);
                diag[k] += coef;
                match unknown[q] {
                    Some(l) => off[k].push((l, coef)),
                    None => rhs[k] += coef * fixed_value(q),
                }
            } else {
                let xb = x + v * (theta * h);
                let nu = (xb - geom.center()).normalize();
                let xb = geom.center() + nu * geom.radius();
                let coef = harmonic(dp, d.value(&xb).max(f64::MIN_POSITIVE)) / (theta * h * h);
                diag[k] += coef;
                rhs[k] += coef * phi.value(&xb);
            }
        }
        if let Some(r) = reaction {
            diag[k] += r.value(&x);
        }
        rhs[k] -= source[c];
    }
    System {
        unknown,
        cells,
        diag,
        off,
        rhs,
        fixed,
    }
}

/// Jacobi-preconditioned conjugate gradients.
fn cg(sys: &System, tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let m = sys.cells.len();
    let apply = |x: &[f64], y: &mut [f64]| {
        for k in 0..m {
            let mut s = sys.diag[k] * x[k];
            for &(l, c) in &sys.off[k] {
                s -= c * x[l];
            }
            y[k] = s;
        }
    };
    let b_norm = sys.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut x = vec![0.0; m];
    if b_norm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = sys.rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&sys.diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; m];
    let mut history = Vec::new();
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Convergence { history });
        }
        let alpha = rz / pap;
        for k in 0..m {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rel = r.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
        history.push(rel);
        if rel <= tol {
            return Ok((x, it, rel));
        }
        for k in 0..m {
            z[k] = r[k] / sys.diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..m {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::Convergence { history })
}

fn solve_system(
    geom: &DomainGeometry,
    grid: &SpatialGrid,
    d: &CoefficientField,
    reaction: Option<&CoefficientField>,
    phi: &BoundaryData,
    source: &[f64],
) -> Result<IntensityField> {
    let sys = assemble(geom, grid, d, reaction, phi, source);
    let (x, iterations, residual) = cg(&sys, 1e-10, 20 * sys.cells.len().max(100))?;
    let mut values = vec![0.0; grid.cells()];
    for (k, &c) in sys.cells.iter().enumerate() {
        values[c] = x[k];
    }
    for &(c, v) in &sys.fixed {
        values[c] = v;
    }
    let mask = grid.mask(geom);
    let flagged = (0..grid.cells()).filter(|&c| mask[c] && !(values[c] > 0.0)).collect();
    debug_assert!(sys.unknown.len() == grid.cells());
    Ok(IntensityField {
        grid: *grid,
        values,
        mask,
        iterations,
        residual,
        flagged,
    })
}

/// Solves ∇·D∇I = H with I = φ on the boundary.
pub fn solve_intensity(problem: &DiffusionProblem) -> Result<IntensityField> {
    solve_system(
        &problem.geometry,
        &problem.grid,
        &problem.d,
        None,
        &problem.boundary,
        &problem.measurement,
    )
}

/// Solves the forward diffusion model −∇·D∇I + σ_a I = 0 with I = φ on ∂X.
pub fn solve_forward_diffusion(
    geometry: &DomainGeometry,
    grid_n: usize,
    d: &CoefficientField,
    sigma_a: &CoefficientField,
    boundary: &BoundaryData,
) -> Result<IntensityField> {
    let grid = SpatialGrid::new(geometry, grid_n)?;
    let zero = vec![0.0; grid.cells()];
    solve_system(geometry, &grid, d, Some(sigma_a), boundary, &zero)
}

/// σ_a = H/I with exclusions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionMap {
    /// σ_a per cell; zero outside the disk and at excluded cells.
    pub values: Vec<f64>,
    /// Interior cells with I ≤ I_min.
    pub excluded: Vec<usize>,
    /// Interior cells where σ_a came out zero (non-physical for σ_a ≥ σ₀ > 0).
    pub vanishing: Vec<usize>,
}

/// Pointwise σ_a = H/I on the interior cells.
pub fn recover_sigma_a_diffusive(measurement: &[f64], intensity: &IntensityField, i_min: f64) -> Result<AbsorptionMap> {
    if measurement.len() != intensity.values.len() {
        return Err(Error::Argument("measurement and intensity grids differ".into()));
    }
    let mut values = vec![0.0; measurement.len()];
    let mut excluded = Vec::new();
    let mut vanishing = Vec::new();
    let mut interior = 0usize;
    for c in 0..measurement.len() {
        if !intensity.mask[c] {
            continue;
        }
        interior += 1;
        let i = intensity.values[c];
        if !(i > i_min) {
            excluded.push(c);
            continue;
        }
        values[c] = measurement[c] / i;
        if values[c] == 0.0 {
            vanishing.push(c);
        }
    }
    if excluded.len() * 10 > interior {
        return Err(Error::DataInconsistency(format!(
            "intensity below {i_min} on {} of {interior} cells",
            excluded.len()
        )));
    }
    Ok(AbsorptionMap {
        values,
        excluded,
        vanishing,
    })
}

/// Solves for I and divides, with I_min = 1e−8·max φ.
pub fn recover(problem: &DiffusionProblem) -> Result<(IntensityField, AbsorptionMap)> {
    let intensity = solve_intensity(problem)?;
    let phi_max = {
        let c = problem.geometry.center();
        let r = problem.geometry.radius();
        (0..1024)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / 1024.0;
                problem.boundary.value(&(c + crate::geometry::planar_direction(a) * r))
            })
            .fold(0.0f64, f64::max)
    };
    let map = recover_sigma_a_diffusive(&problem.measurement, &intensity, 1e-8 * phi_max)?;
    Ok((intensity, map))
}

/// Largest change in σ_a per unit relative change of H, estimated by a
/// seeded perturbation of the measurement.
pub fn stability_constant(problem: &DiffusionProblem, delta: f64, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let (_, base) = recover(problem)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut perturbed = problem.clone();
    for h in perturbed.measurement.iter_mut() {
        *h *= 1.0 + delta * (2.0 * rng.gen::<f64>() - 1.0);
    }
    let (_, other) = recover(&perturbed)?;
    let num: f64 = base.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = base.values.iter().map(|a| a.abs()).sum();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den / delta)
}
