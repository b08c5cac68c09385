//! Singular components of the albedo kernel.
//!
//! For a boundary pair (x′, v′) the ballistic part is a line measure with
//! density η(t) along the chord, the single-scattering kernel α₁ is a line
//! integral that blows up near the ray, and the double-scattering kernel α₂
//! (planar only) is a three-dimensional integral that stays bounded there.
//!
//! ```text
//!   x′ ──────────────●──────────────▶ v′        t₀ = (x − x′)·v′
//!                    ┆ d = |(x − x′)_⊥|
//!                    x
//! ```
//!
//! α₁ integrates along the chord with breakpoints graded geometrically toward
//! the foot point t₀, where the integrand behaves like ((t′−t₀)² + d²)^{−(n−1)/2}.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPair, Dimension, DomainGeometry, Point, Vector};
use crate::medium::{LineRule, OpticalMedium};
use crate::quadrature::{adaptive, gauss_legendre, graded_breakpoints, Adaptive};

/// Transverse distance below which a point counts as on the ray.
pub const ON_RAY_TOL: f64 = 1e-9;

/// Sampled ballistic density η(t; x′, v′).
#[derive(Debug, Clone, PartialEq)]
pub struct LineProfile {
    pub pair: BoundaryPair,
    pub ts: Vec<f64>,
    pub values: Vec<f64>,
}

impl LineProfile {
    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }
}

/// Kernel values at interior points for one boundary pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelColumn {
    pub pair: BoundaryPair,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

/// Quadrature cells covering the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub volumes: Vec<f64>,
}

impl PointSet {
    /// Centers of an m×m (or m×m×m) lattice on the bounding box that fall
    /// inside the domain, each with the full cell volume.
    pub fn lattice(geom: &DomainGeometry, m: usize) -> Self {
        let r = geom.radius();
        let c = geom.center();
        let h = 2.0 * r / m as f64;
        let mut points = Vec::new();
        let coord = |i: usize| -r + h * (i as f64 + 0.5);
        match geom.dimension() {
            Dimension::Two => {
                for i in 0..m {
                    for j in 0..m {
                        let p = c + Vector::new(coord(i), coord(j), 0.0);
                        if geom.is_interior(&p) {
                            points.push(p);
                        }
                    }
                }
            }
            Dimension::Three => {
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            let p = c + Vector::new(coord(i), coord(j), coord(k));
                            if geom.is_interior(&p) {
                                points.push(p);
                            }
                        }
                    }
                }
            }
        }
        let vol = h.powi(geom.n() as i32);
        let volumes = vec![vol; points.len()];
        Self { points, volumes }
    }
}

/// Evaluates η on strictly increasing times in the open chord interval.
pub fn eta_profile(medium: &OpticalMedium, pair: &BoundaryPair, ts: &[f64]) -> Result<LineProfile> {
    let tau = pair.chord(medium.geometry());
    for (i, &t) in ts.iter().enumerate() {
        if !(t > 0.0 && t < tau) {
            return Err(Error::Argument(format!(
                "sample time {t} at index {i} lies outside the chord (0, {tau})"
            )));
        }
        if i > 0 && t <= ts[i - 1] {
            return Err(Error::Argument("sample times must be strictly increasing".into()));
        }
    }
    let values = eta_at(medium, pair, ts);
    Ok(LineProfile {
        pair: *pair,
        ts: ts.to_vec(),
        values,
    })
}

/// η at nondecreasing times in [0, τ₊], accumulating optical depth.
pub(crate) fn eta_at(medium: &OpticalMedium, pair: &BoundaryPair, ts: &[f64]) -> Vec<f64> {
    let v = pair.direction;
    let mut depth = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        depth += medium.optical_depth(&pair.at(prev), &pair.at(t));
        prev = t;
        out.push(medium.sigma_a(&pair.at(t), &v) * (-depth).exp());
    }
    out
}

/// `n` uniformly spaced sample times at cell midpoints of the chord.
pub fn midpoint_times(tau: f64, n: usize) -> Vec<f64> {
    let h = tau / n as f64;
    (0..n).map(|i| (i as f64 + 0.5) * h).collect()
}

/// Options for [`alpha1_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha1Options {
    pub rel_tol: f64,
    pub max_depth: u32,
    pub grading_levels: u32,
}

impl Default for Alpha1Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            max_depth: 24,
            grading_levels: 40,
        }
    }
}

/// Single-scattering kernel α₁(x, x′, v′).
pub fn alpha1(medium: &OpticalMedium, x: &Point, pair: &BoundaryPair) -> Result<f64> {
    alpha1_with(medium, x, pair, Alpha1Options::default())
}

/// α₁ with explicit quadrature options.
pub fn alpha1_with(medium: &OpticalMedium, x: &Point, pair: &BoundaryPair, opts: Alpha1Options) -> Result<f64> {
    let geom = medium.geometry();
    if !geom.contains(x) {
        return Err(Error::Domain("α₁ requires a point in the domain".into()));
    }
    let (t0, perp) = pair.split(x);
    let d = perp.norm();
    if d <= ON_RAY_TOL {
        return Err(Error::OnRay { distance: d });
    }
    if medium.is_scattering_free() {
        return Ok(0.0);
    }
    let tau = pair.chord(geom);
    let n = geom.n();
    let vp = pair.direction;
    let f = |t: f64| {
        let y = pair.at(t);
        let r = x - y;
        let dist = r.norm();
        let v = r / dist;
        let depth = medium.optical_depth(&y, x) + medium.optical_depth(&pair.point, &y);
        let k = medium.kernel(&y, &vp, &v);
        if k == 0.0 {
            return 0.0;
        }
        medium.sigma_a(x, &v) * (-depth).exp() * k / dist.powi(n as i32 - 1)
    };
    let pts = graded_breakpoints(0.0, tau, t0, d, opts.grading_levels);
    let peak = 1.0 / d.powi(n as i32 - 1);
    let scale = medium.k_max() * medium.sigma_a_max() * peak * d;
    let aopts = Adaptive {
        abs_tol: 1e-15 * scale.max(1e-300),
        rel_tol: opts.rel_tol,
        max_depth: opts.max_depth,
    };
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += adaptive(w[0], w[1], aopts, f).value;
    }
    Ok(sum * pair.cos_incidence(geom))
}

/// Options for [`alpha2_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alpha2Options {
    /// Gauss nodes per angular sub-arc.
    pub angular_nodes: usize,
    /// Longest angular sub-arc.
    pub max_arc: f64,
    /// Gauss nodes per radial piece.
    pub radial_nodes: usize,
    /// Gauss nodes per chord piece of the inner integral.
    pub inner_nodes: usize,
    /// Smallest radial piece next to the ray crossing, relative to the radius.
    pub radial_floor: f64,
    /// Rule for the optical depths of the scattered legs.
    pub line: LineRule,
}

impl Default for Alpha2Options {
    fn default() -> Self {
        Self {
            angular_nodes: 10,
            max_arc: PI / 8.0,
            radial_nodes: 6,
            inner_nodes: 6,
            radial_floor: 1e-6,
            line: LineRule::Adaptive { tol: 1e-9 },
        }
    }
}

impl Alpha2Options {
    /// Coarser settings for column sums over many points.
    pub fn coarse() -> Self {
        Self {
            angular_nodes: 6,
            max_arc: PI / 6.0,
            radial_nodes: 4,
            inner_nodes: 4,
            radial_floor: 1e-4,
            line: LineRule::Adaptive { tol: 1e-9 },
        }
    }

    /// Cheapest settings, about 0.5% relative; for sampled sups where α₂ is a
    /// small correction to α₁.
    pub fn survey() -> Self {
        Self {
            angular_nodes: 4,
            max_arc: PI / 4.0,
            radial_nodes: 3,
            inner_nodes: 3,
            radial_floor: 1e-3,
            line: LineRule::Gauss { nodes: 4 },
        }
    }
}

/// Double-scattering kernel α₂(x, x′, v′) in the plane.
pub fn alpha2(medium: &OpticalMedium, x: &Point, pair: &BoundaryPair) -> Result<f64> {
    alpha2_with(medium, x, pair, Alpha2Options::default())
}

/// α₂ with explicit quadrature options.
///
/// The outer integral over the intermediate scattering point z runs in polar
/// coordinates about x, which absorbs the 1/|x − z| factor. The radial
/// integral is graded toward the crossing with the source ray, and the inner
/// chord integral toward the foot point of z.
pub fn alpha2_with(medium: &OpticalMedium, x: &Point, pair: &BoundaryPair, opts: Alpha2Options) -> Result<f64> {
    let geom = medium.geometry();
    if geom.dimension() != Dimension::Two {
        return Err(Error::UnsupportedDimension(geom.n()));
    }
    if !geom.contains(x) {
        return Err(Error::Domain("α₂ requires a point in the domain".into()));
    }
    if (x - pair.point).norm() == 0.0 {
        return Err(Error::Argument("α₂ is undefined at the source point".into()));
    }
    if medium.is_scattering_free() {
        return Ok(0.0);
    }
    let tau = pair.chord(geom);
    let vp = pair.direction;
    let exit = pair.exit_point(geom);
    let ray = RayDepth::new(medium, pair, tau);
    let loose = opts.line;

    let mut cuts: Vec<f64> = Vec::new();
    for w in [x - pair.point, x - exit, vp, -vp] {
        if w.norm() > 1e-14 {
            cuts.push(angle_of(&w));
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let mut arcs = Vec::new();
    for i in 0..cuts.len() {
        let a = cuts[i];
        let b = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + 2.0 * PI };
        if b - a <= 0.0 {
            continue;
        }
        let pieces = ((b - a) / opts.max_arc).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            arcs.push((a + h * p as f64, a + h * (p + 1) as f64));
        }
    }
    if arcs.is_empty() {
        arcs.push((0.0, 2.0 * PI));
    }

    let ang = gauss_legendre(opts.angular_nodes);
    let rad = gauss_legendre(opts.radial_nodes);
    let inner_rule = gauss_legendre(opts.inner_nodes);
    let r_floor = opts.radial_floor * geom.radius();
    let xp_minus = x - pair.point;

    let mut total = 0.0;
    for &(a, b) in &arcs {
        for (theta, wt) in ang.points(a, b) {
            let omega = Vector::new(theta.cos(), theta.sin(), 0.0);
            let sa = medium.sigma_a(x, &omega);
            if sa == 0.0 {
                continue;
            }
            let rmax = geom.exit_distance(x, &(-omega));
            if rmax <= 0.0 {
                continue;
            }
            let denom = cross2(&omega, &vp);
            let rstar = if denom.abs() > 1e-14 {
                cross2(&xp_minus, &vp) / denom
            } else {
                f64::NAN
            };
            let rpts = if rstar.is_finite() && rstar > 0.0 && rstar < rmax {
                graded_breakpoints(0.0, rmax, rstar, r_floor, 40)
            } else {
                (0..=4).map(|i| rmax * i as f64 / 4.0).collect()
            };
            let mut radial = 0.0;
            for w in rpts.windows(2) {
                for (r, wr) in rad.points(w[0], w[1]) {
                    let z = x - omega * r;
                    let ez = (-medium.optical_depth_with(&z, x, loose)).exp();
                    let inner = inner_alpha2(medium, &z, &omega, pair, tau, &ray, inner_rule, loose);
                    radial += wr * ez * inner;
                }
            }
            total += wt * sa * radial;
        }
    }
    Ok(total * pair.cos_incidence(geom))
}

#[allow(clippy::too_many_arguments)]
fn inner_alpha2(
    medium: &OpticalMedium,
    z: &Point,
    omega: &Vector,
    pair: &BoundaryPair,
    tau: f64,
    ray: &RayDepth,
    rule: &crate::quadrature::GaussLegendre,
    line: LineRule,
) -> f64 {
    let (tz, perp) = pair.split(z);
    let d = perp.norm();
    if d < 1e-13 {
        return 0.0;
    }
    let vp = pair.direction;
    let pts = graded_breakpoints(0.0, tau, tz, d, 40);
    let mut sum = 0.0;
    for w in pts.windows(2) {
        for (t, wt) in rule.points(w[0], w[1]) {
            let y = pair.at(t);
            let r = z - y;
            let dist = r.norm();
            let v1 = r / dist;
            let k1 = medium.kernel(&y, &vp, &v1);
            if k1 == 0.0 {
                continue;
            }
            let k2 = medium.kernel(z, &v1, omega);
            let depth = medium.optical_depth_with(&y, z, line) + ray.depth(t);
            sum += wt * (-depth).exp() * k1 * k2 / dist;
        }
    }
    sum
}

/// Cumulative optical depth along the source ray, tabulated for reuse.
struct RayDepth {
    constant: Option<f64>,
    step: f64,
    table: Vec<f64>,
}

impl RayDepth {
    fn new(medium: &OpticalMedium, pair: &BoundaryPair, tau: f64) -> Self {
        if let Some(s) = medium.constant_sigma() {
            return Self {
                constant: Some(s),
                step: 0.0,
                table: Vec::new(),
            };
        }
        let n = 4096;
        let step = tau / n as f64;
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for i in 0..n {
            acc += medium.optical_depth(&pair.at(step * i as f64), &pair.at(step * (i + 1) as f64));
            table.push(acc);
        }
        Self {
            constant: None,
            step,
            table,
        }
    }

    fn depth(&self, t: f64) -> f64 {
        if let Some(s) = self.constant {
            return s * t;
        }
        let u = (t / self.step).max(0.0);
        let i = (u.floor() as usize).min(self.table.len() - 2);
        let f = u - i as f64;
        self.table[i] * (1.0 - f) + self.table[i + 1] * f
    }
}

#[inline]
fn cross2(a: &Vector, b: &Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

fn angle_of(v: &Vector) -> f64 {
    let a = v.y.atan2(v.x);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// |(x − x′)_⊥| for a pair, rejecting on-ray points.
fn transverse(x: &Point, pair: &BoundaryPair) -> Result<(f64, f64)> {
    let (along, perp) = pair.split(x);
    let d = perp.norm();
    if d <= ON_RAY_TOL {
        return Err(Error::OnRay { distance: d });
    }
    Ok((along, d))
}

/// |a| − a·v for a = (along) v + (perp), without cancellation.
fn one_sided(along: f64, d: f64) -> f64 {
    let norm = (along * along + d * d).sqrt();
    if along > 0.0 {
        d * d / (norm + along)
    } else {
        norm - along
    }
}

/// ln((|x−x′−τ₊v′| − (x−x′−τ₊v′)·v′) / (|x−x′| − (x−x′)·v′)), the planar
/// chord integral of 1/|x − y|.
pub fn log_ratio_2d(along: f64, d: f64, chord: f64) -> f64 {
    (one_sided(along - chord, d) / one_sided(along, d)).ln()
}

/// w₂ from chord coordinates: 1 + [`log_ratio_2d`].
pub fn w2_from_coordinates(along: f64, d: f64, chord: f64) -> f64 {
    1.0 + log_ratio_2d(along, d, chord)
}

/// Singular weight w_n(x, x′, v′).
pub fn weight_w(geom: &DomainGeometry, x: &Point, pair: &BoundaryPair) -> Result<f64> {
    let (along, d) = transverse(x, pair)?;
    Ok(match geom.dimension() {
        Dimension::Two => w2_from_coordinates(along, d, pair.chord(geom)),
        Dimension::Three => 1.0 / d,
    })
}

/// Right-hand side of the explicit α₁ bound without the medium norms:
/// |ν·v′|·ln(…) in the plane, 4|ν·v′|/|(x−x′)_⊥| in space.
pub fn alpha1_bound_factor(geom: &DomainGeometry, x: &Point, pair: &BoundaryPair) -> Result<f64> {
    let (along, d) = transverse(x, pair)?;
    let c = pair.cos_incidence(geom);
    Ok(match geom.dimension() {
        Dimension::Two => c * log_ratio_2d(along, d, pair.chord(geom)),
        Dimension::Three => 4.0 * c / d,
    })
}

/// Evaluates α₁ at every point of a set.
pub fn alpha1_column(medium: &OpticalMedium, pair: &BoundaryPair, points: &[Point]) -> Result<KernelColumn> {
    let values: Result<Vec<f64>> = points.par_iter().map(|x| alpha1(medium, x, pair)).collect();
    Ok(KernelColumn {
        pair: *pair,
        points: points.to_vec(),
        values: values?,
    })
}

/// Components of a kernel column distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnDistance {
    /// ∫|η − η̃| dt along the chord.
    pub ballistic: f64,
    /// Σ |Γ₁ − Γ̃₁| vol / |ν·v′| over the point set.
    pub scattering: f64,
    /// ballistic + scattering.
    pub norm: f64,
}

/// Options for [`kernel_column_distance_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnOptions {
    /// Trapezoid intervals along the chord.
    pub chord_samples: usize,
    /// Include α₂ in Γ₁ (planar only).
    pub include_alpha2: bool,
    pub alpha2: Alpha2Options,
}

impl Default for ColumnOptions {
    fn default() -> Self {
        Self {
            chord_samples: 1000,
            include_alpha2: true,
            alpha2: Alpha2Options::coarse(),
        }
    }
}

/// Discretized kernel column distance between two media for one pair.
pub fn kernel_column_distance(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    points: &PointSet,
) -> Result<ColumnDistance> {
    kernel_column_distance_with(a, b, pair, points, ColumnOptions::default())
}

/// [`kernel_column_distance`] with explicit options.
pub fn kernel_column_distance_with(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    points: &PointSet,
    opts: ColumnOptions,
) -> Result<ColumnDistance> {
    if a.geometry() != b.geometry() {
        return Err(Error::Argument("media are defined on different domains".into()));
    }
    if points.points.len() != points.volumes.len() {
        return Err(Error::Argument("point set needs one volume per point".into()));
    }
    let geom = a.geometry();
    let ballistic = ballistic_distance(a, b, pair, opts.chord_samples);
    let cosine = pair.cos_incidence(geom);
    let with_a2 = opts.include_alpha2 && geom.dimension() == Dimension::Two;
    let gamma = |m: &OpticalMedium, x: &Point| -> Result<f64> {
        let mut v = alpha1(m, x, pair)?;
        if with_a2 {
            v += alpha2_with(m, x, pair, opts.alpha2)?;
        }
        Ok(v)
    };
    let terms: Result<Vec<f64>> = points
        .points
        .par_iter()
        .zip(points.volumes.par_iter())
        .map(|(x, vol)| {
            if pair.transverse_distance(x) <= ON_RAY_TOL {
                return Ok(0.0);
            }
            Ok((gamma(a, x)? - gamma(b, x)?).abs() * vol)
        })
        .collect();
    let scattering = terms?.iter().sum::<f64>() / cosine;
    Ok(ColumnDistance {
        ballistic,
        scattering,
        norm: ballistic + scattering,
    })
}

/// ∫₀^{τ₊} |η − η̃| dt by the trapezoid rule on `n` intervals.
pub fn ballistic_distance(a: &OpticalMedium, b: &OpticalMedium, pair: &BoundaryPair, n: usize) -> f64 {
    let tau = pair.chord(a.geometry());
    let ts: Vec<f64> = (0..=n).map(|i| tau * i as f64 / n as f64).collect();
    let ea = eta_at(a, pair, &ts);
    let eb = eta_at(b, pair, &ts);
    let diff: Vec<f64> = ea.iter().zip(&eb).map(|(p, q)| (p - q).abs()).collect();
    trapezoid(&ts, &diff)
}

pub(crate) fn trapezoid(ts: &[f64], f: &[f64]) -> f64 {
    ts.windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
