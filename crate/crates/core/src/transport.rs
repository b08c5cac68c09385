//! Planar forward solver for the boundary-value transport problem.
//!
//! The solution is assembled as the collision series u = Σ_m K^m J φ. The
//! ballistic term J φ is traced exactly along rays; each further term is a
//! characteristic sweep of the scattering source along −v from every cell
//! center, with the source interpolated bilinearly and the angular integral
//! taken on equispaced directions.
//!
//! Beams are narrow Gaussians in boundary arclength and angle. Their ballistic
//! energy and first-collision source are deposited directly from a fan of
//! rays, since a line measure cannot be represented on the discrete ordinates.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{planar_direction, BoundaryPair, Dimension, DomainGeometry, Point, Vector};
use crate::kernels::KernelColumn;
use crate::medium::OpticalMedium;
use crate::quadrature::{gauss_legendre, graded_breakpoints};

/// Cell-centered n×n grid on the bounding square of a disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n: usize,
    center: Point,
    half: f64,
}

impl SpatialGrid {
    pub fn new(geom: &DomainGeometry, n: usize) -> Result<Self> {
        if geom.dimension() != Dimension::Two {
            return Err(Error::UnsupportedDimension(geom.n()));
        }
        if n < 2 {
            return Err(Error::Argument("grid needs at least 2 cells per side".into()));
        }
        Ok(Self {
            n,
            center: geom.center(),
            half: geom.radius(),
        })
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    /// Cell width.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Flat index of cell (i, j); `i` runs along x and varies slowest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn center_of(&self, c: usize) -> Point {
        let h = self.spacing();
        let i = c / self.n;
        let j = c % self.n;
        Point::new(
            self.center.x - self.half + (i as f64 + 0.5) * h,
            self.center.y - self.half + (j as f64 + 0.5) * h,
            0.0,
        )
    }

    /// Cell containing `p`, if any.
    pub fn cell_of(&self, p: &Point) -> Option<usize> {
        let h = self.spacing();
        let fx = (p.x - (self.center.x - self.half)) / h;
        let fy = (p.y - (self.center.y - self.half)) / h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        if i >= self.n || j >= self.n {
            return None;
        }
        Some(self.index(i, j))
    }

    /// Coordinates of the first and last cell centers along x and y.
    pub fn extent(&self) -> [f64; 4] {
        let h = self.spacing();
        let lo_x = self.center.x - self.half + 0.5 * h;
        let lo_y = self.center.y - self.half + 0.5 * h;
        let hi = (self.n as f64 - 1.0) * h;
        [lo_x, lo_x + hi, lo_y, lo_y + hi]
    }

    /// Cells whose centers lie inside the disk of the grid's bounding square.
    pub fn mask(&self, geom: &DomainGeometry) -> Vec<bool> {
        (0..self.cells()).map(|c| geom.is_interior(&self.center_of(c))).collect()
    }

    /// Bilinear interpolation of cell-centered values, zero beyond the grid.
    #[inline]
    pub fn interpolate(&self, values: &[f64], p: &Point) -> f64 {
        let h = self.spacing();
        let sx = (p.x - (self.center.x - self.half)) / h - 0.5;
        let sy = (p.y - (self.center.y - self.half)) / h - 0.5;
        let i0 = sx.floor();
        let j0 = sy.floor();
        let fx = sx - i0;
        let fy = sy - j0;
        let (i0, j0) = (i0 as isize, j0 as isize);
        let n = self.n as isize;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= n || j >= n {
                0.0
            } else {
                values[(i * n + j) as usize]
            }
        };
        (1.0 - fx) * ((1.0 - fy) * at(i0, j0) + fy * at(i0, j0 + 1))
            + fx * ((1.0 - fy) * at(i0 + 1, j0) + fy * at(i0 + 1, j0 + 1))
    }
}

/// Equispaced directions θ_j = 2πj/N on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngularGrid {
    count: usize,
}

impl AngularGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count < 4 {
            return Err(Error::Argument("angular grid needs at least 4 directions".into()));
        }
        Ok(Self { count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.count as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.count as f64
    }

    pub fn direction(&self, j: usize) -> Vector {
        planar_direction(self.angle(j))
    }

    /// Index of the angular bin centered on direction j that contains `theta`.
    pub fn bin_of(&self, theta: f64) -> usize {
        let w = self.weight();
        let k = ((theta / w) + 0.5).floor() as isize;
        k.rem_euclid(self.count as isize) as usize
    }
}

/// Angular flux on a spatial grid, stored direction-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportField {
    pub grid: SpatialGrid,
    pub angles: AngularGrid,
    /// u(x_c, v_j) at index `j * grid.cells() + c`.
    pub values: Vec<f64>,
    /// Energy deposited by line-measure components (beam ballistic term).
    pub line_energy: Option<Vec<f64>>,
}

impl TransportField {
    pub fn zeros(grid: SpatialGrid, angles: AngularGrid) -> Self {
        Self {
            grid,
            angles,
            values: vec![0.0; grid.cells() * angles.count()],
            line_energy: None,
        }
    }

    pub fn at(&self, c: usize, j: usize) -> f64 {
        self.values[j * self.grid.cells() + c]
    }

    /// ∫∫ u dv dx over the discrete part.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.angles.weight() * self.grid.cell_area()
    }
}

/// Deposited energy H on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMap {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl EnergyMap {
    /// ∫ H dx.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }
}

/// Boundary density φ(x′, v′) on Γ₋.
#[derive(Clone)]
pub struct BoundaryDensity(pub Arc<dyn Fn(&Point, &Vector) -> f64 + Send + Sync>);

impl std::fmt::Debug for BoundaryDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryDensity(..)")
    }
}

/// Gaussian beam around a boundary pair, normalized to unit dξ-mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam {
    pub pair: BoundaryPair,
    /// Standard deviation in boundary arclength.
    pub spatial_width: f64,
    /// Standard deviation in direction angle (radians).
    pub angular_width: f64,
}

impl Beam {
    pub fn new(pair: BoundaryPair) -> Self {
        Self {
            pair,
            spatial_width: 0.02,
            angular_width: 0.02,
        }
    }

    pub fn with_widths(mut self, spatial: f64, angular: f64) -> Self {
        self.spatial_width = spatial;
        self.angular_width = angular;
        self
    }

    /// Fan of incoming rays with dξ-weights summing to one.
    pub fn rays(&self, geom: &DomainGeometry) -> Vec<(BoundaryPair, f64)> {
        const M: usize = 21;
        const SPAN: f64 = 4.0;
        let c = geom.center();
        let r = geom.radius();
        let off = self.pair.point - c;
        let phi0 = off.y.atan2(off.x);
        let beta0 = self.pair.direction.y.atan2(self.pair.direction.x);
        let offsets = |width: f64| -> Vec<(f64, f64)> {
            if width <= 0.0 {
                return vec![(0.0, 1.0)];
            }
            (0..M)
                .map(|i| {
                    let u = -SPAN + 2.0 * SPAN * (i as f64 + 0.5) / M as f64;
                    (u * width, (-0.5 * u * u).exp())
                })
                .collect()
        };
        let mut rays = Vec::new();
        for (s, ws) in offsets(self.spatial_width) {
            let phi = phi0 + s / r;
            let nu = planar_direction(phi);
            for (a, wa) in offsets(self.angular_width) {
                let v = planar_direction(beta0 + a);
                let cos = -nu.dot(&v);
                if cos <= 0.0 {
                    continue;
                }
                rays.push((
                    BoundaryPair {
                        point: c + nu * r,
                        direction: v,
                    },
                    ws * wa * cos,
                ));
            }
        }
        let total: f64 = rays.iter().map(|(_, w)| w).sum();
        for ray in &mut rays {
            ray.1 /= total;
        }
        rays
    }
}

/// Incoming radiation.
#[derive(Debug, Clone)]
pub enum BoundarySource {
    Density(BoundaryDensity),
    Beam(Beam),
}

impl BoundarySource {
    pub fn density(f: impl Fn(&Point, &Vector) -> f64 + Send + Sync + 'static) -> Self {
        BoundarySource::Density(BoundaryDensity(Arc::new(f)))
    }

    /// φ ≡ c on Γ₋.
    pub fn uniform(c: f64) -> Self {
        Self::density(move |_, _| c)
    }
}

/// Discretization and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub grid_n: usize,
    pub angles: usize,
    pub tol: f64,
    pub max_orders: usize,
    /// Characteristic step as a fraction of the cell width.
    pub step_fraction: f64,
    /// Keep every collision-order field in the solution.
    pub keep_orders: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_n: 128,
            angles: 64,
            tol: 1e-8,
            max_orders: 200,
            step_fraction: 0.5,
            keep_orders: false,
        }
    }
}

/// Result of [`solve_forward`].
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    /// Accumulated u = Σ u_m.
    pub field: TransportField,
    /// u_m for each order when requested.
    pub orders: Vec<TransportField>,
    /// Energy deposited by each collision order.
    pub order_energy: Vec<Vec<f64>>,
    /// ‖u_m‖₁ for m = 0, 1, ….
    pub residuals: Vec<f64>,
}

impl ForwardSolution {
    /// Successive ratios ‖u_{m+1}‖₁/‖u_m‖₁.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.residuals
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Shared state of a solve on one grid.
struct Solver<'a> {
    medium: &'a OpticalMedium,
    grid: SpatialGrid,
    angles: AngularGrid,
    mask: Vec<bool>,
    ghosts: Vec<(usize, Vec<usize>)>,
    sigma: Vec<f64>,
    sigma_const: Option<f64>,
    sigma_a: Vec<f64>,
    /// Per-cell kernel table k(x_c, cos(2πm/N)) normalized to σ_s(x_c).
    phase: Vec<Vec<f64>>,
    isotropic: bool,
    step: f64,
}

impl<'a> Solver<'a> {
    fn new(medium: &'a OpticalMedium, opts: &SolverOptions) -> Result<Self> {
        let geom = medium.geometry();
        if geom.dimension() != Dimension::Two {
            return Err(Error::UnsupportedDimension(geom.n()));
        }
        if !medium.is_isotropic_sigma() {
            return Err(Error::Argument("the forward solver requires direction-independent σ".into()));
        }
        let grid = SpatialGrid::new(geom, opts.grid_n)?;
        let angles = AngularGrid::new(opts.angles)?;
        let mask = grid.mask(geom);
        let nc = grid.cells();
        let n = grid.n() as isize;
        let mut ghosts = Vec::new();
        for c in 0..nc {
            if mask[c] {
                continue;
            }
            let (i, j) = ((c / grid.n()) as isize, (c % grid.n()) as isize);
            let mut nb = Vec::new();
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a >= 0 && b >= 0 && a < n && b < n {
                        let k = (a * n + b) as usize;
                        if mask[k] {
                            nb.push(k);
                        }
                    }
                }
            }
            if !nb.is_empty() {
                ghosts.push((c, nb));
            }
        }
        let e = Vector::new(1.0, 0.0, 0.0);
        let centers: Vec<Point> = (0..nc).map(|c| grid.center_of(c)).collect();
        let sigma: Vec<f64> = centers
            .iter()
            .map(|x| medium.sigma(x, &e))
            .collect();
        let sigma_a: Vec<f64> = centers
            .iter()
            .zip(&mask)
            .map(|(x, &m)| if m { medium.sigma_a(x, &e) } else { 0.0 })
            .collect();
        let nd = angles.count();
        let isotropic = !matches!(medium.phase(), crate::medium::Phase::HenyeyGreenstein { .. });
        let mut phase = Vec::new();
        if !isotropic {
            phase = centers
                .iter()
                .zip(&mask)
                .map(|(x, &m)| {
                    if !m {
                        return Vec::new();
                    }
                    let mut row: Vec<f64> = (0..nd)
                        .map(|k| medium.kernel_cos(x, angles.angle(k).cos()))
                        .collect();
                    let sum: f64 = row.iter().sum::<f64>() * angles.weight();
                    let target = medium.sigma_s(x);
                    if sum > 0.0 {
                        let scale = target / sum;
                        row.iter_mut().for_each(|v| *v *= scale);
                    }
                    row
                })
                .collect();
        }
        let mut sigma_ext = sigma;
        for (c, nb) in &ghosts {
            sigma_ext[*c] = nb.iter().map(|&k| sigma_ext[k]).sum::<f64>() / nb.len() as f64;
        }
        Ok(Self {
            medium,
            grid,
            angles,
            mask,
            ghosts,
            sigma: sigma_ext,
            sigma_const: medium.constant_sigma(),
            sigma_a,
            phase,
            isotropic,
            step: opts.step_fraction * grid.spacing(),
        })
    }

    fn energy(&self, u: &[f64]) -> Vec<f64> {
        let nc = self.grid.cells();
        let w = self.angles.weight();
        (0..nc)
            .map(|c| {
                if !self.mask[c] {
                    return 0.0;
                }
                let s: f64 = (0..self.angles.count()).map(|j| u[j * nc + c]).sum();
                self.sigma_a[c] * s * w
            })
            .collect()
    }

    fn norm(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() * self.angles.weight() * self.grid.cell_area()
    }

    /// Scattering source q(x, v_j) = Σ_i k(x, v_i·v_j) u(x, v_i) w.
    fn scatter(&self, u: &[f64]) -> Vec<f64> {
        let nc = self.grid.cells();
        let nd = self.angles.count();
        let w = self.angles.weight();
        let mut q = vec![0.0; nc * nd];
        let e = Vector::new(1.0, 0.0, 0.0);
        for c in 0..nc {
            if !self.mask[c] {
                continue;
            }
            if self.isotropic {
                let x = self.grid.center_of(c);
                let k = self.medium.kernel(&x, &e, &e);
                let s: f64 = (0..nd).map(|i| u[i * nc + c]).sum::<f64>() * w * k;
                for j in 0..nd {
                    q[j * nc + c] = s;
                }
            } else {
                let row = &self.phase[c];
                for j in 0..nd {
                    let mut s = 0.0;
                    for i in 0..nd {
                        s += row[(j + nd - i) % nd] * u[i * nc + c];
                    }
                    q[j * nc + c] = s * w;
                }
            }
        }
        q
    }

    /// u(x, v_j) = ∫₀^{τ₋} E(x, x − s v_j) q(x − s v_j, v_j) ds for all cells.
    fn sweep(&self, q: &[f64]) -> Vec<f64> {
        let nc = self.grid.cells();
        let per_dir: Vec<Vec<f64>> = (0..self.angles.count())
            .into_par_iter()
            .map(|j| self.sweep_direction(j, &q[j * nc..(j + 1) * nc]))
            .collect();
        per_dir.concat()
    }

    fn sweep_direction(&self, j: usize, q: &[f64]) -> Vec<f64> {
        let geom = self.medium.geometry();
        let v = self.angles.direction(j);
        let back = -v;
        let mut src = q.to_vec();
        for (c, nb) in &self.ghosts {
            src[*c] = nb.iter().map(|&k| q[k]).sum::<f64>() / nb.len() as f64;
        }
        let nc = self.grid.cells();
        let mut out = vec![0.0; nc];
        let step = self.step;
        let h = self.grid.spacing();
        let n = self.grid.n();
        let (ox, oy) = (self.grid.center.x - self.grid.half, self.grid.center.y - self.grid.half);
        let sample = |values: &[f64], px: f64, py: f64| -> f64 {
            let sx = (px - ox) / h - 0.5;
            let sy = (py - oy) / h - 0.5;
            let fi = sx.floor();
            let fj = sy.floor();
            let (fx, fy) = (sx - fi, sy - fj);
            let (i0, j0) = (fi as isize, fj as isize);
            let at = |i: isize, j: isize| -> f64 {
                if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                    0.0
                } else {
                    values[i as usize * n + j as usize]
                }
            };
            (1.0 - fx) * ((1.0 - fy) * at(i0, j0) + fy * at(i0, j0 + 1))
                + fx * ((1.0 - fy) * at(i0 + 1, j0) + fy * at(i0 + 1, j0 + 1))
        };
        let decay = self.sigma_const.map(|s| ((-s * step).exp(), (-0.5 * s * step).exp()));
        for c in 0..nc {
            if !self.mask[c] {
                continue;
            }
            let x = self.grid.center_of(c);
            let tau = geom.exit_distance(&x, &back);
            let full = (tau / step).floor() as usize;
            let mut acc = 0.0;
            match (decay, self.sigma_const) {
                (Some((ratio, half)), Some(sig)) => {
                    let mut att = half;
                    for k in 0..full {
                        let mid = (k as f64 + 0.5) * step;
                        acc += att * sample(&src, x.x + back.x * mid, x.y + back.y * mid);
                        att *= ratio;
                    }
                    acc *= step;
                    let rest = tau - full as f64 * step;
                    if rest > 0.0 {
                        let mid = full as f64 * step + 0.5 * rest;
                        acc += (-sig * mid).exp() * sample(&src, x.x + back.x * mid, x.y + back.y * mid) * rest;
                    }
                }
                _ => {
                    let mut depth = 0.0;
                    let mut s0 = 0.0;
                    for k in 0..=full {
                        let len = if k < full { step } else { tau - s0 };
                        if len <= 0.0 {
                            break;
                        }
                        let mid = s0 + 0.5 * len;
                        let (px, py) = (x.x + back.x * mid, x.y + back.y * mid);
                        let sig = sample(&self.sigma, px, py);
                        acc += (-(depth + 0.5 * sig * len)).exp() * sample(&src, px, py) * len;
                        depth += sig * len;
                        s0 += len;
                    }
                }
            }
            out[c] = acc;
        }
        out
    }

    /// J φ at cell centers for a boundary density.
    fn ballistic_density(&self, phi: &BoundaryDensity) -> Vec<f64> {
        let geom = self.medium.geometry();
        let nc = self.grid.cells();
        let nd = self.angles.count();
        let mut u = vec![0.0; nc * nd];
        for j in 0..nd {
            let v = self.angles.direction(j);
            for c in 0..nc {
                if !self.mask[c] {
                    continue;
                }
                let x = self.grid.center_of(c);
                let tau = geom.exit_distance(&x, &(-v));
                let xb = x - v * tau;
                let nu = (xb - geom.center()).normalize();
                let xb = geom.center() + nu * geom.radius();
                if nu.dot(&v) >= 0.0 {
                    continue;
                }
                let value = (phi.0)(&xb, &v);
                if value != 0.0 {
                    u[j * nc + c] = value * (-self.medium.optical_depth(&xb, &x)).exp();
                }
            }
        }
        u
    }

    /// Ballistic energy, first-collision source and ‖u₀‖₁ for a fan of rays.
    fn ballistic_rays(&self, rays: &[(BoundaryPair, f64)]) -> (Vec<f64>, Vec<f64>, f64) {
        let geom = self.medium.geometry();
        let nc = self.grid.cells();
        let nd = self.angles.count();
        let area = self.grid.cell_area();
        let dt = self.grid.spacing() / 8.0;
        let mut energy = vec![0.0; nc];
        let mut q = vec![0.0; nc * nd];
        let mut mass = 0.0;
        let dirs: Vec<Vector> = (0..nd).map(|j| self.angles.direction(j)).collect();
        for (pair, weight) in rays {
            let tau = pair.chord(geom);
            let steps = (tau / dt).ceil().max(1.0) as usize;
            let h = tau / steps as f64;
            let mut depth = 0.0;
            let mut prev = pair.point;
            for s in 0..steps {
                let y = pair.at((s as f64 + 0.5) * h);
                depth += self.medium.optical_depth(&prev, &y);
                prev = y;
                let att = (-depth).exp();
                mass += weight * att * h;
                let Some(c) = self.grid.cell_of(&y) else { continue };
                energy[c] += weight * self.medium.sigma_a(&y, &pair.direction) * att * h / area;
                if !self.mask[c] || self.medium.is_scattering_free() {
                    continue;
                }
                for (j, v) in dirs.iter().enumerate() {
                    q[j * nc + c] += weight * att * self.medium.kernel(&y, &pair.direction, v) * h / area;
                }
            }
        }
        (energy, q, mass)
    }

    /// Runs the series from a given first discrete term and first source.
    fn iterate(
        &self,
        u0: Vec<f64>,
        line_energy: Option<Vec<f64>>,
        line_mass: f64,
        first_source: Option<Vec<f64>>,
        opts: &SolverOptions,
    ) -> Result<ForwardSolution> {
        let mut residuals = vec![self.norm(&u0) + line_mass];
        let mut e0 = self.energy(&u0);
        if let Some(le) = &line_energy {
            for (a, b) in e0.iter_mut().zip(le) {
                *a += b;
            }
        }
        let mut order_energy = vec![e0];
        let mut orders = Vec::new();
        let mut total = u0.clone();
        let mut total_norm = residuals[0];
        if opts.keep_orders {
            orders.push(self.field(u0.clone(), line_energy.clone()));
        }
        let mut q = match first_source {
            Some(q) => q,
            None => self.scatter(&u0),
        };
        let scattering = !self.medium.is_scattering_free();
        let mut converged = !scattering || total_norm == 0.0;
        let mut m = 1;
        while !converged && m <= opts.max_orders {
            let u = self.sweep(&q);
            let norm = self.norm(&u);
            residuals.push(norm);
            order_energy.push(self.energy(&u));
            for (t, v) in total.iter_mut().zip(&u) {
                *t += v;
            }
            total_norm += norm;
            if norm <= opts.tol * total_norm {
                converged = true;
            }
            q = self.scatter(&u);
            if opts.keep_orders {
                orders.push(self.field(u, None));
            }
            m += 1;
        }
        if !converged {
            return Err(Error::Convergence { history: residuals });
        }
        Ok(ForwardSolution {
            field: self.field(total, line_energy),
            orders,
            order_energy,
            residuals,
        })
    }

    fn field(&self, values: Vec<f64>, line_energy: Option<Vec<f64>>) -> TransportField {
        TransportField {
            grid: self.grid,
            angles: self.angles,
            values,
            line_energy,
        }
    }
}

/// Solves the transport problem by the collision series.
pub fn solve_forward(medium: &OpticalMedium, source: &BoundarySource, opts: &SolverOptions) -> Result<ForwardSolution> {
    let solver = Solver::new(medium, opts)?;
    match source {
        BoundarySource::Density(phi) => {
            let u0 = solver.ballistic_density(phi);
            solver.iterate(u0, None, 0.0, None, opts)
        }
        BoundarySource::Beam(beam) => {
            let rays = beam.rays(medium.geometry());
            let (energy, q, mass) = solver.ballistic_rays(&rays);
            let u0 = vec![0.0; solver.grid.cells() * solver.angles.count()];
            solver.iterate(u0, Some(energy), mass, Some(q), opts)
        }
    }
}

/// H(x) = ∫ σ_a u dv, plus any line-measure energy carried by the field.
pub fn energy_map(medium: &OpticalMedium, field: &TransportField) -> Result<EnergyMap> {
    let geom = medium.geometry();
    let grid = SpatialGrid::new(geom, field.grid.n())?;
    if grid != field.grid {
        return Err(Error::Argument("field grid does not match the medium's domain".into()));
    }
    let nc = grid.cells();
    let nd = field.angles.count();
    if field.values.len() != nc * nd {
        return Err(Error::Argument("field has the wrong number of values".into()));
    }
    let w = field.angles.weight();
    let mask = grid.mask(geom);
    let mut values = vec![0.0; nc];
    for c in 0..nc {
        if !mask[c] {
            continue;
        }
        let x = grid.center_of(c);
        let mut s = 0.0;
        for j in 0..nd {
            let u = field.values[j * nc + c];
            if u != 0.0 {
                s += medium.sigma_a(&x, &field.angles.direction(j)) * u;
            }
        }
        values[c] = s * w;
    }
    if let Some(le) = &field.line_energy {
        for (v, l) in values.iter_mut().zip(le) {
            *v += l;
        }
    }
    Ok(EnergyMap { grid, values })
}

/// Scattered energy for an idealized beam, as a kernel column.
#[derive(Debug, Clone)]
pub struct ScatteredColumn {
    /// |ν·v′|·H_scattered at masked cell centers: an approximation of Γ₁.
    pub column: KernelColumn,
    /// Contribution of each collision order m = 1, 2, … at the same points.
    pub orders: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl ScatteredColumn {
    /// Sum of the first `m` orders.
    pub fn partial(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.column.points.len()];
        for order in self.orders.iter().take(m) {
            for (o, v) in out.iter_mut().zip(order) {
                *o += v;
            }
        }
        out
    }
}

/// Once-and-more scattered energy for the delta beam at `pair`.
///
/// The first-collision flux u₁ = K u₀ is integrated exactly over each angular
/// bin: the bin's share of the chord is found from the bin edges, and the
/// chord integral of E k / |x − y| over it is evaluated by graded Gauss rules.
/// Higher orders use the regular sweeps with zero boundary data.
pub fn scattered_column(medium: &OpticalMedium, pair: &BoundaryPair, opts: &SolverOptions) -> Result<ScatteredColumn> {
    let solver = Solver::new(medium, opts)?;
    let geom = medium.geometry();
    let grid = solver.grid;
    let nc = grid.cells();
    let nd = solver.angles.count();
    let cells: Vec<usize> = (0..nc).filter(|&c| solver.mask[c]).collect();
    let points: Vec<Point> = cells.iter().map(|&c| grid.center_of(c)).collect();
    let cosine = pair.cos_incidence(geom);
    if medium.is_scattering_free() {
        return Ok(ScatteredColumn {
            column: KernelColumn {
                pair: *pair,
                points: points.clone(),
                values: vec![0.0; points.len()],
            },
            orders: Vec::new(),
            residuals: Vec::new(),
        });
    }
    let tau = pair.chord(geom);
    let bw = solver.angles.weight();
    let rule = gauss_legendre(4);
    let vp = pair.direction;
    let rows: Vec<Vec<(usize, f64)>> = cells
        .par_iter()
        .map(|&c| {
            let x = grid.center_of(c);
            let (t0, perp) = pair.split(&x);
            let d = perp.norm();
            if d < 1e-12 {
                return Vec::new();
            }
            let angle_at = |t: f64| {
                let r = x - pair.at(t);
                r.y.atan2(r.x)
            };
            let mut cuts = vec![0.0, tau];
            let (a0, a1) = (angle_at(0.0), angle_at(tau));
            let mut span = a1 - a0;
            if span > PI {
                span -= 2.0 * PI;
            } else if span < -PI {
                span += 2.0 * PI;
            }
            let (lo, hi) = if span >= 0.0 { (a0, a0 + span) } else { (a0 + span, a0) };
            let first = ((lo / bw) - 0.5).ceil() as i64;
            let last = ((hi / bw) - 0.5).floor() as i64;
            for k in first..=last {
                let edge = (k as f64 + 0.5) * bw;
                let ub = Vector::new(edge.cos(), edge.sin(), 0.0);
                let den = vp.x * ub.y - vp.y * ub.x;
                if den.abs() < 1e-15 {
                    continue;
                }
                let rel = x - pair.point;
                let t = (rel.x * ub.y - rel.y * ub.x) / den;
                if t > 0.0 && t < tau {
                    cuts.push(t);
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut row = Vec::new();
            for w in cuts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                let bin = solver.angles.bin_of(angle_at(0.5 * (w[0] + w[1])));
                let pieces = graded_breakpoints(w[0], w[1], t0, d, 40);
                let mut s = 0.0;
                for p in pieces.windows(2) {
                    for (t, wt) in rule.points(p[0], p[1]) {
                        let y = pair.at(t);
                        let r = x - y;
                        let dist = r.norm();
                        let v = r / dist;
                        let depth = medium.optical_depth(&y, &x) + medium.optical_depth(&pair.point, &y);
                        s += wt * (-depth).exp() * medium.kernel(&y, &vp, &v) / dist;
                    }
                }
                row.push((bin, s));
            }
            row
        })
        .collect();
    let mut u1 = vec![0.0; nc * nd];
    for (row, &c) in rows.iter().zip(&cells) {
        for &(bin, s) in row {
            u1[bin * nc + c] += s / bw;
        }
    }
    let opts_inner = SolverOptions {
        keep_orders: false,
        ..*opts
    };
    let sol = solver.iterate(u1, None, 0.0, None, &opts_inner)?;
    let orders: Vec<Vec<f64>> = sol
        .order_energy
        .iter()
        .map(|e| cells.iter().map(|&c| e[c] * cosine).collect())
        .collect();
    let mut values = vec![0.0; cells.len()];
    for o in &orders {
        for (v, x) in values.iter_mut().zip(o) {
            *v += x;
        }
    }
    Ok(ScatteredColumn {
        column: KernelColumn {
            pair: *pair,
            points,
            values,
        },
        orders,
        residuals: sol.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::p2;

    #[test]
    fn angular_grid_weights_sum_to_two_pi() {
        let a = AngularGrid::new(64).unwrap();
        let s: f64 = (0..64).map(|_| a.weight()).sum();
        assert!((s - 2.0 * PI).abs() < 1e-12);
        assert_eq!(a.bin_of(0.01), 0);
        assert_eq!(a.bin_of(-0.01), 0);
        assert_eq!(a.bin_of(a.weight() * 0.9), 1);
    }

    #[test]
    fn grid_geometry() {
        let g = DomainGeometry::unit_disk();
        let grid = SpatialGrid::new(&g, 4).unwrap();
        assert_eq!(grid.center_of(0), p2(-0.75, -0.75));
        assert_eq!(grid.cell_of(&p2(-0.75, -0.75)), Some(0));
        assert_eq!(grid.cell_of(&p2(0.1, 0.6)), Some(grid.index(2, 3)));
        assert_eq!(grid.extent(), [-0.75, 0.75, -0.75, 0.75]);
    }

    #[test]
    fn energy_of_unit_flux() {
        let g = DomainGeometry::unit_disk();
        let m = OpticalMedium::constant(g, 1.0, 0.25).unwrap();
        let grid = SpatialGrid::new(&g, 16).unwrap();
        let angles = AngularGrid::new(32).unwrap();
        let mut field = TransportField::zeros(grid, angles);
        assert!(energy_map(&m, &field).unwrap().values.iter().all(|&v| v == 0.0));
        field.values.iter_mut().for_each(|v| *v = 1.0);
        let h = energy_map(&m, &field).unwrap();
        let mask = grid.mask(&g);
        for c in 0..grid.cells() {
            if mask[c] {
                assert!((h.values[c] - 2.0 * PI * 0.75).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let g = DomainGeometry::unit_disk();
        let m = OpticalMedium::constant(g, 1.0, 0.25).unwrap();
        let opts = SolverOptions {
            grid_n: 16,
            angles: 16,
            ..Default::default()
        };
        let sol = solve_forward(&m, &BoundarySource::uniform(0.0), &opts).unwrap();
        assert!(sol.field.values.iter().all(|&v| v == 0.0));
        let h = energy_map(&m, &sol.field).unwrap();
        assert_eq!(h.integral(), 0.0);
    }
}
