//! Numerical checks of the stability inequalities and kernel bounds.
//!
//! Each check evaluates both sides of one inequality for a pair of media and
//! returns a [`StabilityReport`]. Failures are reported, never hidden: the
//! margin is kept even when negative. Operator norms are estimated by a
//! sampled sup over kernel columns, which is a lower bound of the true norm,
//! so every right-hand side here errs on the strict side.

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{orthonormal_pair, p2, p3, planar_perpendicular, BoundaryPair, Dimension, DomainGeometry, Point, Vector};
use crate::kernels::{
    alpha1, alpha1_bound_factor, alpha2_with, ballistic_distance, eta_profile, kernel_column_distance_with,
    midpoint_times, weight_w, Alpha2Options, ColumnOptions, PointSet, ON_RAY_TOL,
};
use crate::medium::{CoefficientField, OpticalMedium, Phase, SigmaField};
use crate::singularity::expected_coefficient;

/// How the right-hand side was sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sampling {
    pub seed: u64,
    pub samples: usize,
    pub note: String,
}

/// Both sides of one inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Explicit constant multiplying the sampled norm, when the proof gives one.
    pub constant: Option<f64>,
    /// rhs − lhs.
    pub margin: f64,
    /// Relative slack allowed for quadrature and truncation error.
    pub tolerance: f64,
    /// lhs ≤ rhs·(1 + tolerance).
    pub passed: bool,
    pub sampling: Sampling,
    /// Where the tolerance goes.
    pub budget: String,
}

impl StabilityReport {
    fn new(
        id: &str,
        lhs: f64,
        rhs: f64,
        constant: Option<f64>,
        tolerance: f64,
        sampling: Sampling,
        budget: &str,
    ) -> Result<Self> {
        if !lhs.is_finite() || !rhs.is_finite() || constant.is_some_and(|c| !c.is_finite()) {
            return Err(Error::Numeric(format!("{id}: non-finite side (lhs {lhs}, rhs {rhs})")));
        }
        Ok(Self {
            id: id.to_string(),
            lhs,
            rhs,
            constant,
            margin: rhs - lhs,
            tolerance,
            passed: lhs <= rhs * (1.0 + tolerance),
            sampling,
            budget: budget.to_string(),
        })
    }
}

/// Sampling parameters shared by the checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessOptions {
    pub seed: u64,
    /// Extra incoming pairs in the column-norm sup.
    pub pairs: usize,
    /// Lattice size of the point set for column norms.
    pub lattice: usize,
    /// Random (x, pair) configurations in the weighted sup.
    pub sup_samples: usize,
    /// Short-chord pairs probed next to their end points in the weighted sup.
    pub short_pairs: usize,
    /// Transverse offsets of the near-ray sequence toward each probe.
    pub eps: Vec<f64>,
    /// Samples along a chord for line integrals.
    pub chord_samples: usize,
    /// Lower bound σ_{s,0} required by the anisotropy check.
    pub sigma_s_floor: f64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            pairs: 1,
            lattice: 16,
            sup_samples: 48,
            short_pairs: 8,
            eps: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            chord_samples: 1000,
            sigma_s_floor: 1e-3,
        }
    }
}

fn same_domain(a: &OpticalMedium, b: &OpticalMedium) -> Result<()> {
    if a.geometry() != b.geometry() {
        return Err(Error::Argument("media are defined on different domains".into()));
    }
    Ok(())
}

fn lattice_for(geom: &DomainGeometry, opts: &HarnessOptions) -> PointSet {
    let m = match geom.dimension() {
        Dimension::Two => opts.lattice,
        Dimension::Three => (opts.lattice / 2).max(4),
    };
    PointSet::lattice(geom, m)
}

fn column_options(geom: &DomainGeometry, chord_samples: usize) -> ColumnOptions {
    ColumnOptions {
        chord_samples,
        include_alpha2: geom.dimension() == Dimension::Two,
        alpha2: Alpha2Options::survey(),
    }
}

/// Largest column-norm estimate over `pairs`.
fn column_norm_sup(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pairs: &[BoundaryPair],
    points: &PointSet,
    chord_samples: usize,
) -> Result<f64> {
    let opts = column_options(a.geometry(), chord_samples);
    let mut best = 0.0f64;
    for p in pairs {
        best = best.max(kernel_column_distance_with(a, b, p, points, opts)?.norm);
    }
    Ok(best)
}

fn pair_set(geom: &DomainGeometry, first: &[BoundaryPair], opts: &HarnessOptions) -> Result<Vec<BoundaryPair>> {
    let mut pairs = first.to_vec();
    if opts.pairs > 0 {
        pairs.extend(geom.sample_incoming(opts.pairs, opts.seed)?.into_iter().map(|(p, _)| p));
    }
    Ok(pairs)
}

/// Column-norm estimate shared by the ballistic and h checks.
struct NormSample {
    value: f64,
    sampling: Sampling,
}

fn norm_sample(
    a: &OpticalMedium,
    b: &OpticalMedium,
    first: &[BoundaryPair],
    points: &PointSet,
    opts: &HarnessOptions,
) -> Result<NormSample> {
    let pairs = pair_set(a.geometry(), first, opts)?;
    let value = column_norm_sup(a, b, &pairs, points, opts.chord_samples)?;
    Ok(NormSample {
        value,
        sampling: Sampling {
            seed: opts.seed,
            samples: pairs.len(),
            note: format!(
                "column norm sup over {} pairs including the tested one, {} points",
                pairs.len(),
                points.points.len()
            ),
        },
    })
}

fn ballistic_report(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    norm: &NormSample,
    opts: &HarnessOptions,
) -> Result<StabilityReport> {
    let lhs = ballistic_distance(a, b, pair, opts.chord_samples);
    StabilityReport::new(
        "ballistic",
        lhs,
        norm.value,
        None,
        0.02,
        norm.sampling.clone(),
        "trapezoid error on both sides; the ballistic distance is a summand of the tested column",
    )
}

/// Ballistic stability: ∫|η − η̃| dt against the sampled operator norm.
pub fn check_ballistic_stability(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    points: &PointSet,
    opts: &HarnessOptions,
) -> Result<StabilityReport> {
    same_domain(a, b)?;
    let norm = norm_sample(a, b, &[*pair], points, opts)?;
    ballistic_report(a, b, pair, &norm, opts)
}

/// E(x, x′)·σ_a σ_g at a probe on the ray of `pair`: the coefficient of the
/// near-ray singularity.
fn singular_weight(m: &OpticalMedium, x: &Point, pair: &BoundaryPair) -> Result<f64> {
    let e = m.attenuation_e(&[*x, pair.point])?;
    Ok(e * expected_coefficient(m, x, &pair.direction))
}

fn gamma1(m: &OpticalMedium, x: &Point, pair: &BoundaryPair) -> Result<f64> {
    let mut v = alpha1(m, x, pair)?;
    if m.dimension() == Dimension::Two {
        v += alpha2_with(m, x, pair, Alpha2Options::survey())?;
    }
    Ok(v)
}

fn perpendiculars(pair: &BoundaryPair, dim: Dimension) -> Vec<Vector> {
    match dim {
        Dimension::Two => {
            let p = planar_perpendicular(&pair.direction);
            vec![p, -p]
        }
        Dimension::Three => {
            let (e1, e2) = orthonormal_pair(&pair.direction);
            vec![e1, -e1, e2]
        }
    }
}

fn random_point(geom: &DomainGeometry, rng: &mut ChaCha8Rng) -> Point {
    let r = geom.radius();
    loop {
        let p = match geom.dimension() {
            Dimension::Two => p2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Dimension::Three => p3(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        };
        if p.norm() < 0.98 {
            return geom.center() + p * r;
        }
    }
}

/// Pairs entering at seeded boundary points with chords of 5% to 40% of the
/// diameter.
fn short_pairs(geom: &DomainGeometry, count: usize, seed: u64) -> Result<Vec<BoundaryPair>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(count);
    for (k, (p, _)) in geom.sample_incoming(count, seed)?.into_iter().enumerate() {
        let nu = geom.outward_normal(&p.point)?;
        let tangent = match geom.dimension() {
            Dimension::Two => Vector::new(-nu.y, nu.x, 0.0),
            Dimension::Three => orthonormal_pair(&nu).0,
        };
        let c = [0.05, 0.1, 0.2, 0.4][k % 4];
        let dir = -nu * c + tangent * (1.0 - c * c).sqrt();
        out.push(BoundaryPair::new(geom, p.point, dir)?);
    }
    Ok(out)
}

/// Off-ray points at distance ε from the ray, ε past the entry and ε before
/// the exit, on the side facing the center.
fn near_ends(geom: &DomainGeometry, pair: &BoundaryPair, eps: &[f64]) -> Vec<(Point, BoundaryPair)> {
    let tau = pair.chord(geom);
    let mut perp = perpendiculars(pair, geom.dimension())[0];
    if perp.dot(&(geom.center() - pair.at(0.5 * tau))) < 0.0 {
        perp = -perp;
    }
    let mut out = Vec::new();
    for &e in eps {
        if 2.0 * e >= tau {
            continue;
        }
        for t in [e, tau - e] {
            let x = pair.at(t) + perp * e;
            if geom.is_interior(&x) {
                out.push((x, *pair));
            }
        }
    }
    out
}

/// Configurations for the weighted sup: near-ray sequences toward each probe,
/// points next to the ends of the probe chords and of short chords, and
/// seeded random (x, pair) samples.
fn sup_configurations(
    geom: &DomainGeometry,
    probes: &[(Point, BoundaryPair)],
    opts: &HarnessOptions,
) -> Result<Vec<(Point, BoundaryPair)>> {
    let mut configs = Vec::new();
    for (x, pair) in probes {
        for v in perpendiculars(pair, geom.dimension()) {
            for &e in &opts.eps {
                let y = x + v * e;
                if geom.is_interior(&y) {
                    configs.push((y, *pair));
                }
            }
        }
    }
    let mut lines: Vec<BoundaryPair> = Vec::new();
    for (_, p) in probes {
        if !lines.contains(p) {
            lines.push(*p);
        }
    }
    lines.extend(short_pairs(geom, opts.short_pairs, opts.seed ^ 0x5c)?);
    for p in &lines {
        configs.extend(near_ends(geom, p, &opts.eps));
    }
    if opts.sup_samples > 0 {
        let pairs = geom.sample_incoming(opts.sup_samples, opts.seed ^ 0x5eed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for (pair, _) in pairs {
            let x = random_point(geom, &mut rng);
            if pair.transverse_distance(&x) > 1e-3 {
                configs.push((x, pair));
            }
        }
    }
    Ok(configs)
}

/// sup |Γ₁ − Γ̃₁| / (|ν·v′| w_n) over the configurations.
fn weighted_sup(a: &OpticalMedium, b: &OpticalMedium, configs: &[(Point, BoundaryPair)]) -> Result<f64> {
    let geom = a.geometry();
    let values: Result<Vec<f64>> = configs
        .par_iter()
        .map(|(x, pair)| {
            if pair.transverse_distance(x) <= ON_RAY_TOL {
                return Ok(0.0);
            }
            let diff = (gamma1(a, x, pair)? - gamma1(b, x, pair)?).abs();
            Ok(diff / (pair.cos_incidence(geom) * weight_w(geom, x, pair)?))
        })
        .collect();
    Ok(values?.into_iter().fold(0.0, f64::max))
}

fn on_ray(geom: &DomainGeometry, x: &Point, pair: &BoundaryPair) -> Result<()> {
    if !geom.is_interior(x) {
        return Err(Error::Domain("probe must lie inside the domain".into()));
    }
    if pair.transverse_distance(x) > 1e-9 {
        return Err(Error::Argument("probe must lie on the ray of the pair".into()));
    }
    Ok(())
}

/// Single-scattering stability at a probe on the ray of `pair`.
pub fn check_single_scattering_stability(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    probe: &Point,
    opts: &HarnessOptions,
) -> Result<StabilityReport> {
    same_domain(a, b)?;
    let geom = a.geometry();
    on_ray(geom, probe, pair)?;
    let lhs = (singular_weight(a, probe, pair)? - singular_weight(b, probe, pair)?).abs();
    let configs = sup_configurations(geom, &[(*probe, *pair)], opts)?;
    let rhs = weighted_sup(a, b, &configs)?;
    let budget = match geom.dimension() {
        Dimension::Two => "Γ₁ truncated to α₁ + α₂ (coarse α₂); sampled sup",
        Dimension::Three => "Γ₁ truncated to α₁; sampled sup",
    };
    StabilityReport::new(
        "single-scattering",
        lhs,
        rhs,
        None,
        0.05,
        Sampling {
            seed: opts.seed,
            samples: configs.len(),
            note: format!(
                "{} near-ray offsets, {} short chords, {} random configurations",
                opts.eps.len(),
                opts.short_pairs,
                opts.sup_samples
            ),
        },
        budget,
    )
}

/// h(t) = ln(η(t)/η_rev(τ₊ − t)) at the midpoints of `n` intervals.
fn h_values(m: &OpticalMedium, pair: &BoundaryPair, n: usize) -> Result<(Vec<f64>, f64)> {
    let tau = pair.chord(m.geometry());
    let ts = midpoint_times(tau, n);
    let fwd = eta_profile(m, pair, &ts)?;
    let mirrored: Vec<f64> = ts.iter().rev().map(|t| tau - t).collect();
    let rev = eta_profile(m, &pair.reversed(m.geometry()), &mirrored)?;
    let n = ts.len();
    let h = (0..n).map(|i| (fwd.values[i] / rev.values[n - 1 - i]).ln()).collect();
    Ok((h, tau / n as f64))
}

/// The explicit constant of the h estimate.
pub fn h_stability_constant(a: &OpticalMedium, b: &OpticalMedium) -> f64 {
    let d = a.geometry().diameter();
    let (s, st) = (a.sigma_max(), b.sigma_max());
    (d * s.max(st)).exp() * (d * (s + st)).exp() * (a.sigma_a_max() + b.sigma_a_max()) / (a.sigma0() * b.sigma0())
}

fn symmetric(a: &OpticalMedium, b: &OpticalMedium) -> Result<()> {
    if !a.is_direction_symmetric(1e-12) || !b.is_direction_symmetric(1e-12) {
        return Err(Error::Argument("precondition: σ(x, v) must equal σ(x, −v)".into()));
    }
    Ok(())
}

fn h_report(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    norm: &NormSample,
    opts: &HarnessOptions,
) -> Result<StabilityReport> {
    let (ha, dt) = h_values(a, pair, opts.chord_samples)?;
    let (hb, _) = h_values(b, pair, opts.chord_samples)?;
    let lhs = ha.iter().zip(&hb).map(|(x, y)| (x - y).abs()).sum::<f64>() * dt;
    let c = h_stability_constant(a, b);
    StabilityReport::new(
        "h",
        lhs,
        c * norm.value,
        Some(c),
        0.05,
        norm.sampling.clone(),
        "midpoint rule for h; trapezoid for the ballistic part of the norm",
    )
}

/// Stability of h along one chord. The norm sup includes the pair and its
/// reversal.
pub fn check_h_stability(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    points: &PointSet,
    opts: &HarnessOptions,
) -> Result<StabilityReport> {
    same_domain(a, b)?;
    symmetric(a, b)?;
    let norm = norm_sample(a, b, &[*pair, pair.reversed(a.geometry())], points, opts)?;
    h_report(a, b, pair, &norm, opts)
}

/// Draws an (x, pair) configuration for the bound survey; a share of the
/// samples approach the ray geometrically.
fn bound_sample(geom: &DomainGeometry, rng: &mut ChaCha8Rng, pair: &BoundaryPair) -> Option<Point> {
    if rng.gen_bool(0.3) {
        let tau = pair.chord(geom);
        let t = rng.gen_range(0.05..0.95) * tau;
        let e = 10f64.powf(-rng.gen_range(1.0..6.0));
        let perp = perpendiculars(pair, geom.dimension())[0];
        let x = pair.at(t) + perp * e;
        geom.is_interior(&x).then_some(x)
    } else {
        let x = random_point(geom, rng);
        (pair.transverse_distance(&x) > ON_RAY_TOL * 10.0).then_some(x)
    }
}

/// Sample size and seed for [`check_kernel_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSampleSpec {
    pub samples: usize,
    pub seed: u64,
}

impl Default for KernelSampleSpec {
    fn default() -> Self {
        Self { samples: 1000, seed: 11 }
    }
}

/// Explicit α₁ bounds at seeded samples, and in the plane the separation of
/// the α₁ and α₂ singularities along near-ray sequences.
pub fn check_kernel_bounds(medium: &OpticalMedium, spec: &KernelSampleSpec) -> Result<Vec<StabilityReport>> {
    let geom = medium.geometry();
    let pairs = geom.sample_incoming(spec.samples.max(1), spec.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let configs: Vec<(Point, BoundaryPair)> = pairs
        .iter()
        .filter_map(|(p, _)| bound_sample(geom, &mut rng, p).map(|x| (x, *p)))
        .collect();
    let norms = medium.sigma_a_max() * medium.k_max();
    let sides: Result<Vec<(f64, f64)>> = configs
        .par_iter()
        .map(|(x, p)| Ok((alpha1(medium, x, p)?, norms * alpha1_bound_factor(geom, x, p)?)))
        .collect();
    let sides = sides?;
    // Worst sample: largest lhs/rhs, or largest excess when rhs vanishes.
    let worst = sides
        .iter()
        .copied()
        .max_by(|p, q| {
            let key = |(l, r): (f64, f64)| if r > 0.0 { l / r } else if l > 0.0 { f64::INFINITY } else { 0.0 };
            key(*p).total_cmp(&key(*q))
        })
        .unwrap_or((0.0, 0.0));
    let (id, budget) = match geom.dimension() {
        Dimension::Two => ("alpha1-log-bound", "explicit bound; adaptive quadrature error only"),
        Dimension::Three => ("alpha1-transverse-bound", "explicit bound; adaptive quadrature error only"),
    };
    let sampling = Sampling {
        seed: spec.seed,
        samples: configs.len(),
        note: "worst sample by ratio; 30% of samples approach the ray".into(),
    };
    let mut out = vec![StabilityReport::new(id, worst.0, worst.1, Some(norms), 0.0, sampling, budget)?];

    if geom.dimension() == Dimension::Two && !medium.is_scattering_free() {
        let eps = [1e-1, 1e-2, 1e-3, 1e-4];
        let mut growth = f64::INFINITY;
        let mut spread = 1.0f64;
        let sequences = geom.sample_incoming(3, spec.seed ^ 0xa2)?;
        for (pair, _) in &sequences {
            let x = pair.at(0.5 * pair.chord(geom));
            let perp = planar_perpendicular(&pair.direction);
            let vals: Result<Vec<(f64, f64)>> = eps
                .par_iter()
                .map(|e| {
                    let y = x + perp * *e;
                    Ok((alpha1(medium, &y, pair)?, alpha2_with(medium, &y, pair, Alpha2Options::coarse())?))
                })
                .collect();
            let vals = vals?;
            growth = growth.min(vals[3].0 / vals[0].0);
            let (lo, hi) = vals
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.1), hi.max(v.1)));
            spread = spread.max(hi / lo);
        }
        let sampling = Sampling {
            seed: spec.seed,
            samples: sequences.len(),
            note: "ε ∈ {1e-1, …, 1e-4} toward chord midpoints".into(),
        };
        out.push(StabilityReport::new(
            "alpha1-growth",
            3.0,
            growth,
            None,
            0.0,
            sampling.clone(),
            "α₁(ε=1e-4)/α₁(ε=1e-1) must reach 3",
        )?);
        out.push(StabilityReport::new(
            "alpha2-bounded",
            spread,
            2.0,
            None,
            0.0,
            sampling,
            "max/min of α₂ along the same sequences must stay below 2",
        )?);
    }
    Ok(out)
}

fn hg_precondition(m: &OpticalMedium, floor: f64) -> Result<()> {
    let sigma_s = match m.phase() {
        Phase::HenyeyGreenstein { sigma_s, .. } => sigma_s,
        _ => return Err(Error::Argument("anisotropy check requires Henyey-Greenstein media".into())),
    };
    let pts = PointSet::lattice(m.geometry(), 24);
    if let Some(x) = pts.points.iter().find(|x| sigma_s.value(x) < floor) {
        return Err(Error::Argument(format!(
            "precondition: σ_s({:.3}, {:.3}) = {} is below σ_s,0 = {floor}",
            x.x,
            x.y,
            sigma_s.value(x)
        )));
    }
    Ok(())
}

/// Pointwise anisotropy stability at probes along `lines`, plus the
/// line-integrated chain with its exponential factor.
///
/// Returns the pointwise report for the probe with the largest left side,
/// followed by one chain report per line.
pub fn check_hg_sigma_g_stability(
    a: &OpticalMedium,
    b: &OpticalMedium,
    lines: &[BoundaryPair],
    opts: &HarnessOptions,
) -> Result<Vec<StabilityReport>> {
    same_domain(a, b)?;
    hg_precondition(a, opts.sigma_s_floor)?;
    hg_precondition(b, opts.sigma_s_floor)?;
    if lines.is_empty() {
        return Err(Error::Argument("need at least one line".into()));
    }
    let geom = a.geometry();
    let mut probes = Vec::new();
    for pair in lines {
        let tau = pair.chord(geom);
        for f in [0.25, 0.5, 0.75] {
            probes.push((pair.at(f * tau), *pair));
        }
    }
    let configs = sup_configurations(geom, &probes, opts)?;
    let sup = weighted_sup(a, b, &configs)?;
    let mut lhs = 0.0f64;
    for (x, pair) in &probes {
        lhs = lhs.max((singular_weight(a, x, pair)? - singular_weight(b, x, pair)?).abs());
    }
    let sampling = Sampling {
        seed: opts.seed,
        samples: configs.len(),
        note: format!("{} probes on {} lines", probes.len(), lines.len()),
    };
    let mut out = vec![StabilityReport::new(
        "hg-sigma-g",
        lhs,
        sup,
        None,
        0.05,
        sampling.clone(),
        "as single scattering; worst probe",
    )?];

    let factor = (geom.diameter() * a.sigma_max().max(b.sigma_max())).exp();
    for pair in lines {
        let tau = pair.chord(geom);
        let ts = midpoint_times(tau, 200);
        let dt = tau / ts.len() as f64;
        let (mut l, mut r) = (0.0, 0.0);
        for t in &ts {
            let x = pair.at(*t);
            let v = pair.direction;
            let (ca, cb) = (expected_coefficient(a, &x, &v), expected_coefficient(b, &x, &v));
            let ea = a.attenuation_e(&[x, pair.point])?;
            let eb = b.attenuation_e(&[x, pair.point])?;
            l += (ca - cb).abs() * dt;
            r += (sup + (ea - eb).abs() * cb) * dt;
        }
        out.push(StabilityReport::new(
            "hg-sigma-g-line",
            l,
            factor * r,
            Some(factor),
            0.05,
            sampling.clone(),
            "midpoint rule along the line; reuses the pointwise sup",
        )?);
    }
    Ok(out)
}

/// A seeded pair of smooth Henyey-Greenstein media. The second medium adds
/// seeded affine perturbations to σ, σ_s and g across the whole domain.
pub fn seeded_pair(geom: DomainGeometry, seed: u64) -> Result<(OpticalMedium, OpticalMedium)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = geom.center();
    let r = geom.radius();
    let tilt = match geom.dimension() {
        Dimension::Two => p2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        Dimension::Three => p3(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    } * 0.5;
    let amp = [rng.gen_range(0.05..0.15), rng.gen_range(0.02..0.06), rng.gen_range(0.03..0.08)];
    let build = |scale: f64| {
        let local = move |x: &Point| (x - c) / r;
        let shape = move |x: &Point| 1.0 + tilt.dot(&local(x));
        let sigma = CoefficientField::function(move |x| {
            let y = local(x);
            1.0 + 0.2 * y.x * y.x + 0.1 * y.y + scale * amp[0] * shape(x)
        });
        let sigma_s = CoefficientField::function(move |x| {
            let y = local(x);
            0.3 + 0.05 * y.y * y.y + scale * amp[1] * shape(x)
        });
        let g = CoefficientField::function(move |x| 0.4 + 0.1 * local(x).x + scale * amp[2] * shape(x));
        OpticalMedium::new(geom, SigmaField::Isotropic(sigma), Phase::HenyeyGreenstein { sigma_s, g })
    };
    Ok((build(0.0)?, build(1.0)?))
}

/// Ballistic, single-scattering, h and (for HG media) anisotropy checks on
/// one pair of media, followed by the kernel bounds of the first medium.
pub fn run_suite(
    a: &OpticalMedium,
    b: &OpticalMedium,
    pair: &BoundaryPair,
    probe: &Point,
    opts: &HarnessOptions,
    bounds: &KernelSampleSpec,
) -> Result<Vec<StabilityReport>> {
    same_domain(a, b)?;
    symmetric(a, b)?;
    let points = lattice_for(a.geometry(), opts);
    let norm = norm_sample(a, b, &[*pair, pair.reversed(a.geometry())], &points, opts)?;
    let mut out = vec![
        ballistic_report(a, b, pair, &norm, opts)?,
        check_single_scattering_stability(a, b, pair, probe, opts)?,
        h_report(a, b, pair, &norm, opts)?,
    ];
    let hg = |m: &OpticalMedium| matches!(m.phase(), Phase::HenyeyGreenstein { .. });
    if hg(a) && hg(b) {
        out.extend(check_hg_sigma_g_stability(a, b, &[*pair], opts)?);
    }
    out.extend(check_kernel_bounds(a, bounds)?);
    Ok(out)
}

/// Default point set used by [`run_suite`].
pub fn suite_points(geom: &DomainGeometry, opts: &HarnessOptions) -> PointSet {
    lattice_for(geom, opts)
}

/// Writes reports as CSV with one row per report.
pub fn write_reports_csv<W: Write>(reports: &[StabilityReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["id", "lhs", "rhs", "constant", "margin", "tolerance", "passed", "seed", "samples", "note"])
        .map_err(io)?;
    for r in reports {
        w.write_record([
            r.id.clone(),
            format!("{:e}", r.lhs),
            format!("{:e}", r.rhs),
            r.constant.map_or(String::new(), |c| format!("{c:e}")),
            format!("{:e}", r.margin),
            r.tolerance.to_string(),
            r.passed.to_string(),
            r.sampling.seed.to_string(),
            r.sampling.samples.to_string(),
            r.sampling.note.clone(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per report.
pub fn summary(reports: &[StabilityReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(
            s,
            "{:<24} {:>4}  lhs {:.4e}  rhs {:.4e}  margin {:+.3e}  (tol {:.0}%)",
            r.id,
            if r.passed { "ok" } else { "FAIL" },
            r.lhs,
            r.rhs,
            r.margin,
            100.0 * r.tolerance
        );
    }
    s
}
