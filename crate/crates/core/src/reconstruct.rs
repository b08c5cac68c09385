//! Inverse pipelines along chords and at probe points.
//!
//! Ballistic data determine σ_a directly when there is no scattering. Under
//! direction symmetry of σ and σ_a, the log-ratio of a forward and a reversed
//! profile determines σ, and then σ_a. Near-ray fits of α₁ give σ_g, and for
//! Henyey–Greenstein media σ_g/σ_s fixes the anisotropy g.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{planar_perpendicular, BoundaryPair, Dimension, Point};
use crate::hgmodel::invert_h;
use crate::kernels::{alpha1, eta_profile, midpoint_times, LineProfile};
use crate::medium::OpticalMedium;
use crate::singularity::{fit_singular, SingularFit};

/// Settings shared by the reconstruction stages.
#[derive(Debug, Clone)]
pub struct ReconstructionConfig {
    /// Width δ₀ of the boundary collar where σ is known.
    pub collar: f64,
    /// Half-width, in samples, of the moving average applied to dh/dt.
    pub smoothing: usize,
    /// Chords to reconstruct along.
    pub lines: Vec<BoundaryPair>,
    /// Medium that is correct inside the collar, if available.
    pub known: Option<OpticalMedium>,
    /// Points with σ_s below this are excluded from the g reconstruction.
    pub sigma_s_floor: f64,
}

impl ReconstructionConfig {
    pub fn new(collar: f64, lines: Vec<BoundaryPair>) -> Result<Self> {
        if !(collar > 0.0) {
            return Err(Error::Argument("collar width must be positive".into()));
        }
        if lines.is_empty() {
            return Err(Error::Argument("line set must not be empty".into()));
        }
        Ok(Self {
            collar,
            smoothing: 5,
            lines,
            known: None,
            sigma_s_floor: 1e-3,
        })
    }

    pub fn with_known(mut self, medium: OpticalMedium) -> Self {
        self.known = Some(medium);
        self
    }

    pub fn with_smoothing(mut self, half_width: usize) -> Self {
        self.smoothing = half_width;
        self
    }
}

/// Per-chord diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// h(t) used by the symmetric stage.
    pub h: Vec<f64>,
    /// Samples where σ_a came out negative and was clamped to zero.
    pub clamped: Vec<usize>,
    /// Fraction of samples with σ < σ_a − tolerance.
    pub inconsistent_fraction: f64,
    /// Total optical length ∫₀^{τ₊} σ used to anchor the cumulative depth.
    pub total_depth: f64,
    /// Whether the collar pinned the total depth.
    pub pinned_by_collar: bool,
    pub warnings: Vec<String>,
}

/// Recovered coefficients along one chord.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineReconstruction {
    pub pair: BoundaryPair,
    pub ts: Vec<f64>,
    pub sigma: Vec<f64>,
    pub sigma_a: Vec<f64>,
    /// Cumulative optical depth ∫₀^t σ at each sample.
    pub depth: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl LineReconstruction {
    /// Linear interpolation of a sampled quantity at chord time t.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        interpolate(&self.ts, values, t)
    }
}

fn interpolate(ts: &[f64], values: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if n == 1 || t <= ts[0] {
        if n == 1 {
            return values[0];
        }
        let s = (values[1] - values[0]) / (ts[1] - ts[0]);
        return values[0] + s * (t - ts[0]);
    }
    if t >= ts[n - 1] {
        let s = (values[n - 1] - values[n - 2]) / (ts[n - 1] - ts[n - 2]);
        return values[n - 1] + s * (t - ts[n - 1]);
    }
    let i = ts.partition_point(|&x| x <= t) - 1;
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    values[i] * (1.0 - w) + values[i + 1] * w
}

/// ∫₀^{t_i} f for each sample, integrating a local cubic through the nearest
/// four samples on each gap and extrapolating it over [0, t₀].
pub fn cumulative_integral(ts: &[f64], f: &[f64]) -> Vec<f64> {
    let n = ts.len();
    match n {
        0 => Vec::new(),
        1 => vec![f[0] * ts[0]],
        2 => {
            let head = f[0] * ts[0];
            vec![head, head + 0.5 * (f[0] + f[1]) * (ts[1] - ts[0])]
        }
        _ => {
            let m = n.min(4);
            // Local cubic (quadratic for three samples) integrated exactly by two-point Gauss.
            let piece = |lo: usize, a: f64, b: f64| {
                let nodes = &ts[lo..lo + m];
                let vals = &f[lo..lo + m];
                let interp = |x: f64| {
                    (0..m)
                        .map(|i| {
                            let w: f64 = (0..m)
                                .filter(|&j| j != i)
                                .map(|j| (x - nodes[j]) / (nodes[i] - nodes[j]))
                                .product();
                            w * vals[i]
                        })
                        .sum::<f64>()
                };
                let (c, r) = (0.5 * (a + b), 0.5 * (b - a) / 3f64.sqrt());
                0.5 * (b - a) * (interp(c - r) + interp(c + r))
            };
            let mut out = Vec::with_capacity(n);
            let mut acc = piece(0, 0.0, ts[0]);
            out.push(acc);
            for i in 1..n {
                let lo = (i as isize - 2).clamp(0, (n - m) as isize) as usize;
                acc += piece(lo, ts[i - 1], ts[i]);
                out.push(acc);
            }
            out
        }
    }
}

/// Result of the scattering-free stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionProfile {
    pub ts: Vec<f64>,
    pub sigma_a: Vec<f64>,
    /// ζ(t) = 1 − ∫₀^t η, the surviving fraction.
    pub zeta: Vec<f64>,
}

/// σ_a = η/ζ along a chord of a non-scattering medium.
pub fn recover_sigma_a_scattering_free(profile: &LineProfile) -> Result<AbsorptionProfile> {
    if profile.is_empty() {
        return Err(Error::Argument("empty profile".into()));
    }
    if let Some(i) = profile.values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DataInconsistency(format!(
            "η({}) = {} is not positive; no absorption coefficient bounded below reproduces it",
            profile.ts[i], profile.values[i]
        )));
    }
    let cum = cumulative_integral(&profile.ts, &profile.values);
    let zeta: Vec<f64> = cum.iter().map(|c| 1.0 - c).collect();
    if let Some(i) = zeta.iter().position(|&z| z <= 0.0) {
        return Err(Error::DataInconsistency(format!(
            "surviving fraction ζ({}) = {} is not positive",
            profile.ts[i], zeta[i]
        )));
    }
    let sigma_a = profile.values.iter().zip(&zeta).map(|(e, z)| e / z).collect();
    Ok(AbsorptionProfile {
        ts: profile.ts.clone(),
        sigma_a,
        zeta,
    })
}

/// h(t) = ln(η(t; x′, v′) / η(τ₊ − t; x′ + τ₊v′, −v′)).
///
/// The reversed profile must be sampled at the mirrored times τ₊ − t.
pub fn recover_h_profile(forward: &LineProfile, reverse: &LineProfile) -> Result<Vec<f64>> {
    let n = forward.len();
    if reverse.len() != n {
        return Err(Error::Argument("forward and reverse profiles differ in length".into()));
    }
    if n == 0 {
        return Err(Error::Argument("empty profile".into()));
    }
    let tau = forward.ts[0] + reverse.ts[n - 1];
    for i in 0..n {
        let mirrored = tau - reverse.ts[n - 1 - i];
        if (mirrored - forward.ts[i]).abs() > 1e-9 * tau.max(1.0) {
            return Err(Error::Argument("reverse profile is not sampled at mirrored times".into()));
        }
    }
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let a = forward.values[i];
        let b = reverse.values[n - 1 - i];
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::Argument(format!("nonpositive profile sample at t = {}", forward.ts[i])));
        }
        h.push((a / b).ln());
    }
    Ok(h)
}

/// Central differences (one-sided at the ends) followed by a moving average.
pub fn smoothed_derivative(values: &[f64], step: f64, half_width: usize) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let d: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / step
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / step
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * step)
            }
        })
        .collect();
    if half_width == 0 {
        return d;
    }
    (0..n)
        .map(|i| {
            let w = half_width.min(i).min(n - 1 - i);
            let s: f64 = d[i - w..=i + w].iter().sum();
            s / (2 * w + 1) as f64
        })
        .collect()
}

fn uniform_step(ts: &[f64]) -> Result<f64> {
    if ts.len() < 3 {
        return Err(Error::Argument("at least three samples are needed".into()));
    }
    let step = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
    if ts.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-8 * step) {
        return Err(Error::Argument("sample spacing is not uniform".into()));
    }
    Ok(step)
}

/// σ = −½ dh/dt and σ_a = η·exp(∫₀^t σ) along a chord.
///
/// The cumulative depth is A(t) = (T − h(t))/2. When a known collar medium
/// is configured, the total depth T is pinned by the collar samples at both
/// ends and σ is overwritten there; otherwise A is the cumulative integral of
/// the recovered σ.
pub fn recover_sigma_symmetric(h: &[f64], profile: &LineProfile, config: &ReconstructionConfig) -> Result<LineReconstruction> {
    let n = profile.len();
    if h.len() != n {
        return Err(Error::Argument("h and profile lengths differ".into()));
    }
    let ts = &profile.ts;
    let step = uniform_step(ts)?;
    let dh = smoothed_derivative(h, step, config.smoothing);
    let mut sigma: Vec<f64> = dh.iter().map(|d| -0.5 * d).collect();
    let mut diagnostics = Diagnostics {
        h: h.to_vec(),
        ..Default::default()
    };
    let pair = profile.pair;
    let mut depth = None;
    if let Some(known) = &config.known {
        let geom = known.geometry();
        let tau = pair.chord(geom);
        let v = pair.direction;
        let collar: Vec<usize> = (0..n)
            .filter(|&i| geom.distance_to_boundary(&pair.at(ts[i])) < config.collar)
            .collect();
        if !collar.is_empty() {
            let mut estimates = Vec::new();
            for &i in &collar {
                let y = pair.at(ts[i]);
                sigma[i] = known.sigma(&y, &v);
                if ts[i] < 0.5 * tau {
                    let a = known.optical_depth(&pair.point, &y);
                    estimates.push(h[i] + 2.0 * a);
                } else {
                    let b = known.optical_depth(&y, &pair.exit_point(geom));
                    estimates.push(2.0 * b - h[i]);
                }
            }
            let total = estimates.iter().sum::<f64>() / estimates.len() as f64;
            diagnostics.total_depth = total;
            diagnostics.pinned_by_collar = true;
            depth = Some(h.iter().map(|hv| 0.5 * (total - hv)).collect::<Vec<f64>>());
        } else {
            diagnostics.warnings.push("no samples fall in the collar; using the integrated depth".into());
        }
    }
    let depth = match depth {
        Some(d) => d,
        None => {
            let d = cumulative_integral(ts, &sigma);
            diagnostics.total_depth = d[n - 1] + sigma[n - 1] * ts[0];
            d
        }
    };
    let mut sigma_a: Vec<f64> = profile
        .values
        .iter()
        .zip(&depth)
        .map(|(e, a)| e * a.exp())
        .collect();
    for (i, s) in sigma_a.iter_mut().enumerate() {
        if *s < 0.0 {
            diagnostics.clamped.push(i);
            *s = 0.0;
        }
    }
    let tol = 1e-6;
    let bad = sigma.iter().zip(&sigma_a).filter(|(s, a)| **s < **a - tol).count();
    diagnostics.inconsistent_fraction = bad as f64 / n as f64;
    if diagnostics.inconsistent_fraction > 0.05 {
        diagnostics.warnings.push(format!(
            "recovered σ lies below σ_a on {:.1}% of samples",
            100.0 * diagnostics.inconsistent_fraction
        ));
    }
    Ok(LineReconstruction {
        pair,
        ts: ts.clone(),
        sigma,
        sigma_a,
        depth,
        diagnostics,
    })
}

/// Forward and reversed profiles plus the symmetric reconstruction for one chord.
pub fn reconstruct_line(medium: &OpticalMedium, pair: &BoundaryPair, samples: usize, config: &ReconstructionConfig) -> Result<LineReconstruction> {
    let geom = medium.geometry();
    let tau = pair.chord(geom);
    let ts = midpoint_times(tau, samples);
    let forward = eta_profile(medium, pair, &ts)?;
    let reverse = eta_profile(medium, &pair.reversed(geom), &ts)?;
    let h = recover_h_profile(&forward, &reverse)?;
    recover_sigma_symmetric(&h, &forward, config)
}

/// σ_g = coefficient / σ_a at each probe point.
pub fn recover_sigma_g(fits: &[SingularFit], sigma_a: &[f64], sigma0: f64) -> Result<Vec<f64>> {
    if fits.len() != sigma_a.len() {
        return Err(Error::Argument("one σ_a value per fit is required".into()));
    }
    fits.iter()
        .zip(sigma_a)
        .map(|(fit, &sa)| {
            if !(sa >= 0.5 * sigma0) {
                return Err(Error::Numeric(format!(
                    "σ_a = {sa} at a probe point is below half the lower bound {sigma0}"
                )));
            }
            Ok(fit.coefficient / sa)
        })
        .collect()
}

/// Outcome of the pointwise anisotropy inversion.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GField {
    /// g at each point, `None` where no value is emitted.
    pub g: Vec<Option<f64>>,
    /// Points with σ_s below the floor.
    pub excluded: Vec<usize>,
    /// Points with σ_g/σ_s below h(0).
    pub out_of_range: Vec<usize>,
    /// Points with σ_g/σ_s above the inversion ceiling.
    pub saturated: Vec<usize>,
}

/// g = h⁻¹(σ_g/σ_s) pointwise with σ_s = σ − σ_a.
pub fn recover_g_field(sigma_g: &[f64], sigma: &[f64], sigma_a: &[f64], dim: Dimension, sigma_s_floor: f64) -> Result<GField> {
    if sigma_g.len() != sigma.len() || sigma.len() != sigma_a.len() {
        return Err(Error::Argument("input lengths differ".into()));
    }
    let mut out = GField::default();
    for i in 0..sigma_g.len() {
        let ss = sigma[i] - sigma_a[i];
        if !(ss >= sigma_s_floor) {
            out.excluded.push(i);
            out.g.push(None);
            continue;
        }
        match invert_h(sigma_g[i] / ss, dim) {
            Ok(g) => out.g.push(Some(g)),
            Err(Error::OutOfRange { .. }) => {
                out.out_of_range.push(i);
                out.g.push(None);
            }
            Err(Error::Saturated { .. }) => {
                out.saturated.push(i);
                out.g.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Per-probe output of [`anisotropy_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeEstimate {
    pub point: Point,
    pub sigma: f64,
    pub sigma_a: f64,
    pub sigma_g: f64,
    pub g: Option<f64>,
    pub fits: Vec<SingularFit>,
}

/// Settings for the end-to-end planar anisotropy reconstruction.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Directions per probe point (equispaced in [0, π)).
    pub directions: usize,
    /// Samples per chord for the ballistic stage.
    pub samples: usize,
    /// Probe offsets ε, decreasing.
    pub eps: Vec<f64>,
    /// Lower bound σ₀ used by the division guard.
    pub sigma0: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            directions: 2,
            samples: 1000,
            eps: (4..=14).map(|k| 0.5f64.powi(k)).collect(),
            sigma0: 1e-3,
        }
    }
}

/// Full pipeline on data generated from `medium`: symmetric chord
/// reconstruction through each probe, near-ray fits normalized by the
/// reconstructed attenuation, σ_g, then g.
pub fn anisotropy_pipeline(
    medium: &OpticalMedium,
    probes: &[Point],
    config: &ReconstructionConfig,
    opts: &PipelineOptions,
) -> Result<(Vec<ProbeEstimate>, GField)> {
    let geom = medium.geometry();
    if geom.dimension() != Dimension::Two {
        return Err(Error::UnsupportedDimension(geom.n()));
    }
    if opts.directions == 0 {
        return Err(Error::Argument("at least one direction per probe is required".into()));
    }
    let estimates: Vec<ProbeEstimate> = probes
        .par_iter()
        .map(|x| -> Result<ProbeEstimate> {
            let mut sig = 0.0;
            let mut sa = 0.0;
            let mut sg = 0.0;
            let mut fits = Vec::new();
            for k in 0..opts.directions {
                let theta = std::f64::consts::PI * k as f64 / opts.directions as f64;
                let v = crate::geometry::planar_direction(theta);
                let pair = BoundaryPair::through(geom, x, &v)?;
                let line = reconstruct_line(medium, &pair, opts.samples, config)?;
                let t0 = (x - pair.point).dot(&v);
                let s_here = line.interpolate(&line.sigma, t0);
                let a_here = line.interpolate(&line.sigma_a, t0);
                let depth = line.interpolate(&line.depth, t0);
                let norm = (-depth).exp() * pair.cos_incidence(geom);
                let perp = planar_perpendicular(&v);
                let eps: Vec<f64> = opts
                    .eps
                    .iter()
                    .copied()
                    .filter(|&e| geom.is_interior(&(x + perp * e)))
                    .collect();
                let f = eps
                    .iter()
                    .map(|&e| Ok(alpha1(medium, &(x + perp * e), &pair)? / norm))
                    .collect::<Result<Vec<f64>>>()?;
                let fit = fit_singular(&pair, t0, &eps, &f, Dimension::Two)?;
                let g = recover_sigma_g(std::slice::from_ref(&fit), &[a_here], opts.sigma0)?[0];
                sig += s_here;
                sa += a_here;
                sg += g;
                fits.push(fit);
            }
            let m = opts.directions as f64;
            Ok(ProbeEstimate {
                point: *x,
                sigma: sig / m,
                sigma_a: sa / m,
                sigma_g: sg / m,
                g: None,
                fits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sg: Vec<f64> = estimates.iter().map(|e| e.sigma_g).collect();
    let s: Vec<f64> = estimates.iter().map(|e| e.sigma).collect();
    let a: Vec<f64> = estimates.iter().map(|e| e.sigma_a).collect();
    let field = recover_g_field(&sg, &s, &a, Dimension::Two, config.sigma_s_floor)?;
    let estimates = estimates
        .into_iter()
        .zip(&field.g)
        .map(|(mut e, g)| {
            e.g = *g;
            e
        })
        .collect();
    Ok((estimates, field))
}
