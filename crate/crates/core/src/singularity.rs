//! Near-ray behavior of the single-scattering kernel.
//!
//! Off the ballistic ray α₁ is finite, but it blows up as x approaches the
//! ray: like ln(1/ε) in the plane and like ε^{2−n} in higher dimension. The
//! leading coefficient carries σ_a·k at the probe point, which is what the
//! anisotropy reconstruction consumes.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPair, Dimension, Point, Vector};
use crate::kernels::alpha1;
use crate::medium::OpticalMedium;

/// Asymptotic law fitted to probe samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Law {
    /// f ≈ a·ln(1/ε) + b.
    Log,
    /// f ≈ a·ε^{2−n} + lower order.
    Power { n: usize },
}

impl Law {
    pub fn for_dimension(dim: Dimension) -> Self {
        match dim {
            Dimension::Two => Law::Log,
            Dimension::Three => Law::Power { n: 3 },
        }
    }

    fn basis(&self, eps: f64) -> f64 {
        match self {
            Law::Log => (1.0 / eps).ln(),
            Law::Power { n } => eps.powi(2 - *n as i32),
        }
    }
}

/// Fitted near-ray expansion along one boundary pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularFit {
    pub pair: BoundaryPair,
    /// Chord position t₀′ of the ray point being approached.
    pub t0: f64,
    pub eps: Vec<f64>,
    pub f: Vec<f64>,
    pub law: Law,
    /// Leading coefficient.
    pub coefficient: f64,
    /// Offset b of the planar affine fit; zero for power laws.
    pub intercept: f64,
    /// Relative fit residual: RMS misfit over RMS data for the log law, spread
    /// of the last three extrapolants over their magnitude for power laws.
    pub residual: f64,
    /// Observed order of the first correction, when it can be estimated.
    pub correction_order: Option<f64>,
}

impl SingularFit {
    /// Value of the fitted leading model at ε.
    pub fn model(&self, eps: f64) -> f64 {
        self.coefficient * self.law.basis(eps) + self.intercept
    }

    /// (ε, f, model) rows.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        self.eps
            .iter()
            .zip(&self.f)
            .map(|(&e, &f)| (e, f, self.model(e)))
            .collect()
    }
}

/// Geometric schedule 2^{-hi}, …, 2^{-lo} (decreasing), keeping only ε whose
/// probe point x + ε v⊥ lies strictly inside the domain.
pub fn eps_schedule(medium: &OpticalMedium, x: &Point, perp: &Vector, lo: i32, hi: i32) -> Vec<f64> {
    let geom = medium.geometry();
    (lo..=hi)
        .map(|k| 0.5f64.powi(k))
        .filter(|&e| geom.is_interior(&(x + perp * e)))
        .collect()
}

/// Default schedule over [2⁻¹⁴, 2⁻⁴].
pub fn default_eps(medium: &OpticalMedium, x: &Point, perp: &Vector) -> Vec<f64> {
    eps_schedule(medium, x, perp, 4, 14)
}

/// Samples f(ε) = α₁(x + ε v⊥; x′, v′) / (E(x, x′)·|ν(x′)·v′|) with x = x′ + t₀′ v′.
pub fn probe_alpha1(medium: &OpticalMedium, pair: &BoundaryPair, t0: f64, eps: &[f64], perp: &Vector) -> Result<Vec<f64>> {
    let geom = medium.geometry();
    let x = pair.at(t0);
    if !geom.is_interior(&x) {
        return Err(Error::Argument(format!("t0 = {t0} does not give an interior ray point")));
    }
    geom.check_unit(perp)?;
    if perp.dot(&pair.direction).abs() > 1e-12 {
        return Err(Error::Argument("probe direction is not orthogonal to the ray".into()));
    }
    if geom.dimension() == Dimension::Two && perp.z != 0.0 {
        return Err(Error::Argument("probe direction leaves the plane".into()));
    }
    let bad: Vec<f64> = eps
        .iter()
        .copied()
        .filter(|&e| !(e > 0.0) || !geom.is_interior(&(x + perp * e)))
        .collect();
    if !bad.is_empty() {
        return Err(Error::Argument(format!("probe points leave the domain for eps = {bad:?}")));
    }
    let norm = medium.attenuation_e(&[x, pair.point])? * pair.cos_incidence(geom);
    eps.par_iter()
        .map(|&e| Ok(alpha1(medium, &(x + perp * e), pair)? / norm))
        .collect()
}

/// Affine least-squares fit f ≈ a·basis(ε) + b. Returns (a, b, relative RMS misfit).
pub fn fit_law(eps: &[f64], f: &[f64], law: Law) -> Result<(f64, f64, f64)> {
    check_samples(eps, f)?;
    let m = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|&e| law.basis(e)).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = f.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(f).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::Fit("degenerate sample spread".into()));
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss: f64 = xs.iter().zip(f).map(|(x, y)| (y - a * x - b).powi(2)).sum();
    let scale: f64 = f.iter().map(|y| y * y).sum::<f64>();
    let residual = if scale > 0.0 { (ss / scale).sqrt() } else { 0.0 };
    Ok((a, b, residual))
}

fn check_samples(eps: &[f64], f: &[f64]) -> Result<()> {
    if eps.len() != f.len() {
        return Err(Error::Fit("eps and f lengths differ".into()));
    }
    if eps.len() < 4 {
        return Err(Error::Fit("at least four samples are needed".into()));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Fit("eps must be positive and strictly decreasing".into()));
    }
    if eps[0] / eps[eps.len() - 1] < 8.0 * (1.0 - 1e-12) {
        return Err(Error::Fit("eps must span at least a factor of 8".into()));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    Ok(())
}

/// Fits the dimension's law to probe samples.
pub fn fit_singular(pair: &BoundaryPair, t0: f64, eps: &[f64], f: &[f64], dim: Dimension) -> Result<SingularFit> {
    let law = Law::for_dimension(dim);
    let (coefficient, intercept, residual, correction_order) = match law {
        Law::Log => {
            let (a, b, r) = fit_law(eps, f, law)?;
            (a, b, r, None)
        }
        Law::Power { n } => {
            check_samples(eps, f)?;
            let g: Vec<f64> = eps.iter().zip(f).map(|(&e, &v)| e.powi(n as i32 - 2) * v).collect();
            // Two-point Richardson assuming g(ε) = L + c·ε.
            let ext: Vec<f64> = (0..g.len() - 1)
                .map(|i| (g[i + 1] * eps[i] - g[i] * eps[i + 1]) / (eps[i] - eps[i + 1]))
                .collect();
            let last = &ext[ext.len() - 3..];
            let limit = *last.last().unwrap();
            let hi = last.iter().cloned().fold(f64::MIN, f64::max);
            let lo = last.iter().cloned().fold(f64::MAX, f64::min);
            let residual = if limit != 0.0 { (hi - lo) / limit.abs() } else { hi - lo };
            let k = g.len();
            let d1 = g[k - 2] - g[k - 3];
            let d2 = g[k - 1] - g[k - 2];
            let order = if d1 != 0.0 && d2 != 0.0 {
                Some((d1 / d2).abs().ln() / (eps[k - 3] / eps[k - 2]).ln())
            } else {
                None
            };
            (limit, 0.0, residual, order)
        }
    };
    if coefficient < 0.0 && coefficient.abs() > 1e-12 * f.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
        return Err(Error::Fit(format!("negative leading coefficient {coefficient}")));
    }
    Ok(SingularFit {
        pair: *pair,
        t0,
        eps: eps.to_vec(),
        f: f.to_vec(),
        law,
        coefficient: coefficient.max(0.0),
        intercept,
        residual,
        correction_order,
    })
}

/// Probes and fits in one step.
pub fn singular_coefficient(
    medium: &OpticalMedium,
    pair: &BoundaryPair,
    t0: f64,
    eps: &[f64],
    perp: &Vector,
) -> Result<SingularFit> {
    let f = probe_alpha1(medium, pair, t0, eps, perp)?;
    fit_singular(pair, t0, eps, &f, medium.dimension())
}

/// σ_a(x)·(k(x,1) + k(x,−1)) in the plane or σ_a(x)·∫₀^π k(x, cos θ) dθ in space:
/// the value the fitted coefficient approaches.
pub fn expected_coefficient(medium: &OpticalMedium, x: &Point, v: &Vector) -> f64 {
    let sa = medium.sigma_a(x, v);
    match medium.dimension() {
        Dimension::Two => sa * (medium.kernel_cos(x, 1.0) + medium.kernel_cos(x, -1.0)),
        Dimension::Three => {
            let pts = crate::quadrature::graded_breakpoints(0.0, std::f64::consts::PI, 0.0, 1e-6, 40);
            let opts = crate::quadrature::Adaptive {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                max_depth: 40,
            };
            let s: f64 = pts
                .windows(2)
                .map(|w| crate::quadrature::adaptive(w[0], w[1], opts, |t| medium.kernel_cos(x, t.cos())).value)
                .sum();
            sa * s
        }
    }
}
