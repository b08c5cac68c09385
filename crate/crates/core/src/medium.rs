//! Optical coefficient fields, the Henyey–Greenstein phase function and
//! attenuation along straight and broken paths.
//!
//! A medium stores the total attenuation σ and a scattering description. The
//! absorption is derived as σ_a = σ − σ_s. The scattering kernel follows the
//! convention `k(x, v_in, v_out)`: the density of scattering from direction
//! `v_in` into `v_out`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Dimension, DomainGeometry, Point, Vector};
use crate::hgmodel;
use crate::quadrature::{adaptive, gauss_legendre, Adaptive};

/// Scalar function of position used for analytic fields.
#[derive(Clone)]
pub struct ScalarFn(pub Arc<dyn Fn(&Point) -> f64 + Send + Sync>);

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarFn(..)")
    }
}

/// Function of position and direction used for direction-dependent σ.
#[derive(Clone)]
pub struct DirectionalFn(pub Arc<dyn Fn(&Point, &Vector) -> f64 + Send + Sync>);

impl fmt::Debug for DirectionalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DirectionalFn(..)")
    }
}

/// Values on a regular Cartesian lattice, interpolated multilinearly.
///
/// Samples sit at `min + i * (max - min) / (dims - 1)` along each axis. The
/// first axis varies slowest in `data`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    dims: Vec<usize>,
    extent: Vec<f64>,
    data: Vec<f64>,
}

impl GridField {
    /// `extent` lists `min, max` per axis.
    pub fn new(dims: Vec<usize>, extent: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        if !(dims.len() == 2 || dims.len() == 3) {
            return Err(Error::Argument(format!("grid must be 2-D or 3-D, got {} axes", dims.len())));
        }
        if extent.len() != 2 * dims.len() {
            return Err(Error::Argument("extent needs a (min, max) pair per axis".into()));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::Argument("each grid axis needs at least two samples".into()));
        }
        for a in 0..dims.len() {
            if !(extent[2 * a + 1] > extent[2 * a]) {
                return Err(Error::Argument(format!("empty extent on axis {a}")));
            }
        }
        let count: usize = dims.iter().product();
        if data.len() != count {
            return Err(Error::Argument(format!(
                "grid expects {count} values, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite grid value at index {i}")));
        }
        Ok(Self { dims, extent, data })
    }

    /// Samples `f` on the lattice.
    pub fn from_fn(dims: Vec<usize>, extent: Vec<f64>, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let probe = Self::new(dims.clone(), extent.clone(), vec![0.0; dims.iter().product()])?;
        let data = (0..probe.data.len()).map(|i| f(&probe.node(i))).collect();
        Self::new(dims, extent, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Smallest lattice spacing.
    pub fn spacing(&self) -> f64 {
        (0..self.dims.len())
            .map(|a| (self.extent[2 * a + 1] - self.extent[2 * a]) / (self.dims[a] - 1) as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Position of the sample with flat index `i`.
    pub fn node(&self, mut i: usize) -> Point {
        let mut idx = [0usize; 3];
        for a in (0..self.dims.len()).rev() {
            idx[a] = i % self.dims[a];
            i /= self.dims[a];
        }
        let mut p = Point::zeros();
        for a in 0..self.dims.len() {
            let h = (self.extent[2 * a + 1] - self.extent[2 * a]) / (self.dims[a] - 1) as f64;
            p[a] = self.extent[2 * a] + h * idx[a] as f64;
        }
        p
    }

    /// Multilinear interpolation; coordinates are clamped to the extent.
    pub fn value(&self, x: &Point) -> f64 {
        let nd = self.dims.len();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..nd {
            let lo = self.extent[2 * a];
            let hi = self.extent[2 * a + 1];
            let n = self.dims[a];
            let s = ((x[a].clamp(lo, hi) - lo) / (hi - lo)) * (n - 1) as f64;
            let i = (s.floor() as usize).min(n - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << nd) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for a in 0..nd {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                flat = flat * self.dims[a] + base[a] + bit;
            }
            if w != 0.0 {
                acc += w * self.data[flat];
            }
        }
        acc
    }
}

/// A scalar coefficient field over the domain.
#[derive(Debug, Clone)]
pub enum CoefficientField {
    Constant(f64),
    /// Σ cᵢ |x − center|^{2i}.
    RadialPolynomial { center: Point, coeffs: Vec<f64> },
    /// background + amplitude · exp(−|x − center|² / (2 width²)).
    GaussianBump {
        background: f64,
        amplitude: f64,
        center: Point,
        width: f64,
    },
    Grid(GridField),
    Function(ScalarFn),
    Sum(Vec<CoefficientField>),
    Scaled(f64, Box<CoefficientField>),
}

impl CoefficientField {
    pub fn function(f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientField::Function(ScalarFn(Arc::new(f)))
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            CoefficientField::Constant(c) => *c,
            CoefficientField::RadialPolynomial { center, coeffs } => {
                let r2 = (x - center).norm_squared();
                coeffs.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
            }
            CoefficientField::GaussianBump {
                background,
                amplitude,
                center,
                width,
            } => background + amplitude * (-(x - center).norm_squared() / (2.0 * width * width)).exp(),
            CoefficientField::Grid(g) => g.value(x),
            CoefficientField::Function(f) => (f.0)(x),
            CoefficientField::Sum(parts) => parts.iter().map(|p| p.value(x)).sum(),
            CoefficientField::Scaled(s, f) => s * f.value(x),
        }
    }

    /// The constant value if the field is spatially uniform.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            CoefficientField::Constant(c) => Some(*c),
            CoefficientField::Sum(parts) => parts.iter().map(|p| p.as_constant()).sum(),
            CoefficientField::Scaled(s, f) => f.as_constant().map(|c| s * c),
            _ => None,
        }
    }

    /// Smallest lattice spacing among gridded components.
    pub fn grid_spacing(&self) -> Option<f64> {
        match self {
            CoefficientField::Grid(g) => Some(g.spacing()),
            CoefficientField::Sum(parts) => parts
                .iter()
                .filter_map(|p| p.grid_spacing())
                .reduce(f64::min),
            CoefficientField::Scaled(_, f) => f.grid_spacing(),
            _ => None,
        }
    }
}

impl From<f64> for CoefficientField {
    fn from(c: f64) -> Self {
        CoefficientField::Constant(c)
    }
}

/// Total attenuation, isotropic in direction or given analytically as σ(x, v).
#[derive(Debug, Clone)]
pub enum SigmaField {
    Isotropic(CoefficientField),
    Directional(DirectionalFn),
}

/// Scattering description of a medium.
#[derive(Debug, Clone)]
pub enum Phase {
    None,
    Isotropic { sigma_s: CoefficientField },
    HenyeyGreenstein { sigma_s: CoefficientField, g: CoefficientField },
}

/// How line integrals of σ are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineRule {
    /// Exact product for uniform σ.
    Exact,
    /// Composite midpoint rule with the given step.
    Midpoint { step: f64 },
    /// Adaptive Gauss–Kronrod to the given absolute tolerance per unit length.
    Adaptive { tol: f64 },
    /// Fixed Gauss–Legendre rule with the given node count.
    Gauss { nodes: usize },
}

/// Coefficient values at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub sigma: f64,
    pub sigma_a: f64,
    pub sigma_s: f64,
    pub k: Option<f64>,
}

/// An absorbing and scattering medium on a disk or ball.
#[derive(Debug, Clone)]
pub struct OpticalMedium {
    geom: DomainGeometry,
    sigma: SigmaField,
    phase: Phase,
    line_rule: LineRule,
    sigma0: f64,
    bound_m: f64,
    sigma_max: f64,
    sigma_a_max: f64,
    k_max: f64,
}

/// Henyey–Greenstein kernel value for scattering-angle cosine `lambda`.
pub fn hg_phase(lambda: f64, g: f64, sigma_s: f64, dim: Dimension) -> Result<f64> {
    if !(-1.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!("cosine {lambda} outside [-1, 1]")));
    }
    if !(0.0..1.0).contains(&g) {
        return Err(Error::Argument(format!("anisotropy g = {g} must lie in [0, 1)")));
    }
    if sigma_s < 0.0 {
        return Err(Error::Argument("scattering coefficient must be nonnegative".into()));
    }
    Ok(hg_unchecked(lambda, g, sigma_s, dim))
}

#[inline]
pub(crate) fn hg_unchecked(lambda: f64, g: f64, sigma_s: f64, dim: Dimension) -> f64 {
    let q = 1.0 + g * g - 2.0 * g * lambda;
    match dim {
        Dimension::Two => sigma_s * (1.0 - g * g) / (2.0 * PI * q),
        Dimension::Three => sigma_s * (1.0 - g * g) / (4.0 * PI * q * q.sqrt()),
    }
}

fn hg_peak(g: f64, sigma_s: f64, dim: Dimension) -> f64 {
    hg_unchecked(1.0, g, sigma_s, dim)
}

impl OpticalMedium {
    /// Builds a medium from the total attenuation and a phase description.
    ///
    /// Coefficients are sampled on a lattice covering the domain to derive σ₀
    /// (the minimum of σ_a) and the bound M, and to validate nonnegativity and
    /// the anisotropy range.
    pub fn new(geom: DomainGeometry, sigma: SigmaField, phase: Phase) -> Result<Self> {
        let mut medium = Self {
            geom,
            sigma,
            phase,
            line_rule: LineRule::Exact,
            sigma0: 0.0,
            bound_m: 0.0,
            sigma_max: 0.0,
            sigma_a_max: 0.0,
            k_max: 0.0,
        };
        medium.line_rule = medium.default_line_rule();
        medium.survey()?;
        Ok(medium)
    }

    /// Builds a medium from the absorption σ_a; σ = σ_a + σ_s.
    pub fn from_absorption(geom: DomainGeometry, sigma_a: CoefficientField, phase: Phase) -> Result<Self> {
        let sigma = match &phase {
            Phase::None => sigma_a,
            Phase::Isotropic { sigma_s } | Phase::HenyeyGreenstein { sigma_s, .. } => {
                CoefficientField::Sum(vec![sigma_a, sigma_s.clone()])
            }
        };
        Self::new(geom, SigmaField::Isotropic(sigma), phase)
    }

    /// Uniform medium with isotropic scattering (σ_s may be zero).
    pub fn constant(geom: DomainGeometry, sigma: f64, sigma_s: f64) -> Result<Self> {
        let phase = if sigma_s == 0.0 {
            Phase::None
        } else {
            Phase::Isotropic {
                sigma_s: sigma_s.into(),
            }
        };
        Self::new(geom, SigmaField::Isotropic(sigma.into()), phase)
    }

    /// Uniform Henyey–Greenstein medium.
    pub fn constant_hg(geom: DomainGeometry, sigma: f64, sigma_s: f64, g: f64) -> Result<Self> {
        Self::new(
            geom,
            SigmaField::Isotropic(sigma.into()),
            Phase::HenyeyGreenstein {
                sigma_s: sigma_s.into(),
                g: g.into(),
            },
        )
    }

    fn default_line_rule(&self) -> LineRule {
        let mut fields: Vec<&CoefficientField> = Vec::new();
        match &self.sigma {
            SigmaField::Isotropic(f) => fields.push(f),
            SigmaField::Directional(_) => {
                return LineRule::Adaptive { tol: 1e-13 };
            }
        }
        if fields.iter().all(|f| f.as_constant().is_some()) {
            return LineRule::Exact;
        }
        match fields.iter().filter_map(|f| f.grid_spacing()).reduce(f64::min) {
            Some(h) => LineRule::Midpoint {
                step: h.min(self.geom.radius() / 256.0) / 2.0,
            },
            None => LineRule::Adaptive { tol: 1e-13 },
        }
    }

    /// Overrides the line-integral rule.
    pub fn with_line_rule(mut self, rule: LineRule) -> Self {
        self.line_rule = rule;
        self
    }

    pub fn line_rule(&self) -> LineRule {
        self.line_rule
    }

    fn survey(&mut self) -> Result<()> {
        let dim = self.geom.dimension();
        let c = self.geom.center();
        let r = self.geom.radius();
        let mut points = Vec::new();
        match dim {
            Dimension::Two => {
                let m = 64;
                for i in 0..=m {
                    for j in 0..=m {
                        let p = Point::new(
                            -1.0 + 2.0 * i as f64 / m as f64,
                            -1.0 + 2.0 * j as f64 / m as f64,
                            0.0,
                        );
                        if p.norm() <= 1.0 {
                            points.push(c + p * r);
                        }
                    }
                }
            }
            Dimension::Three => {
                let m = 24;
                for i in 0..=m {
                    for j in 0..=m {
                        for k in 0..=m {
                            let p = Point::new(
                                -1.0 + 2.0 * i as f64 / m as f64,
                                -1.0 + 2.0 * j as f64 / m as f64,
                                -1.0 + 2.0 * k as f64 / m as f64,
                            );
                            if p.norm() <= 1.0 {
                                points.push(c + p * r);
                            }
                        }
                    }
                }
            }
        }
        let dirs = survey_directions(dim);
        let mut sigma0 = f64::INFINITY;
        let (mut smax, mut samax, mut kmax) = (0.0f64, 0.0f64, 0.0f64);
        for x in &points {
            let ss = self.sigma_s_raw(x);
            if !(ss >= 0.0) {
                return Err(Error::Argument(format!("σ_s = {ss} is negative or not finite")));
            }
            if let Phase::HenyeyGreenstein { g, .. } = &self.phase {
                let gv = g.value(x);
                if !(0.0..1.0).contains(&gv) {
                    return Err(Error::Argument(format!("anisotropy g = {gv} outside [0, 1)")));
                }
            }
            kmax = kmax.max(self.kernel_peak(x));
            for v in &dirs {
                let s = self.sigma_raw(x, v);
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::Argument(format!("σ = {s} is negative or not finite")));
                }
                let sa = s - ss;
                smax = smax.max(s);
                samax = samax.max(sa);
                sigma0 = sigma0.min(sa);
            }
        }
        if !(sigma0 > 0.0) {
            return Err(Error::Argument(format!(
                "absorption must be bounded below by a positive constant (min σ_a = {sigma0})"
            )));
        }
        self.sigma0 = sigma0;
        self.sigma_max = smax;
        self.sigma_a_max = samax;
        self.k_max = kmax;
        self.bound_m = smax.max(kmax);
        Ok(())
    }

    pub fn geometry(&self) -> &DomainGeometry {
        &self.geom
    }

    pub fn dimension(&self) -> Dimension {
        self.geom.dimension()
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn sigma_field(&self) -> &SigmaField {
        &self.sigma
    }

    /// Lower bound σ₀ of σ_a (sampled minimum).
    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    /// Upper bound M of σ and k (sampled maximum).
    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    /// Sampled ‖σ‖_∞.
    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    /// Sampled ‖σ_a‖_∞.
    pub fn sigma_a_max(&self) -> f64 {
        self.sigma_a_max
    }

    /// Sampled ‖k‖_∞.
    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn is_scattering_free(&self) -> bool {
        matches!(self.phase, Phase::None)
    }

    pub fn is_isotropic_sigma(&self) -> bool {
        matches!(self.sigma, SigmaField::Isotropic(_))
    }

    /// σ_s(x) if the scattering coefficient is uniform.
    pub fn constant_sigma_s(&self) -> Option<f64> {
        match &self.phase {
            Phase::None => Some(0.0),
            Phase::Isotropic { sigma_s } | Phase::HenyeyGreenstein { sigma_s, .. } => sigma_s.as_constant(),
        }
    }

    /// Uniform σ if σ is isotropic and spatially constant.
    pub fn constant_sigma(&self) -> Option<f64> {
        match &self.sigma {
            SigmaField::Isotropic(f) => f.as_constant(),
            SigmaField::Directional(_) => None,
        }
    }

    #[inline]
    fn sigma_raw(&self, x: &Point, v: &Vector) -> f64 {
        match &self.sigma {
            SigmaField::Isotropic(f) => f.value(x),
            SigmaField::Directional(f) => (f.0)(x, v),
        }
    }

    #[inline]
    fn sigma_s_raw(&self, x: &Point) -> f64 {
        match &self.phase {
            Phase::None => 0.0,
            Phase::Isotropic { sigma_s } | Phase::HenyeyGreenstein { sigma_s, .. } => sigma_s.value(x),
        }
    }

    fn kernel_peak(&self, x: &Point) -> f64 {
        let dim = self.dimension();
        match &self.phase {
            Phase::None => 0.0,
            Phase::Isotropic { sigma_s } => sigma_s.value(x) / dim.sphere_measure(),
            Phase::HenyeyGreenstein { sigma_s, g } => hg_peak(g.value(x), sigma_s.value(x), dim),
        }
    }

    /// σ(x, v); zero outside the domain.
    #[inline]
    pub fn sigma(&self, x: &Point, v: &Vector) -> f64 {
        if self.geom.contains(x) {
            self.sigma_raw(x, v)
        } else {
            0.0
        }
    }

    /// σ_s(x); zero outside the domain.
    #[inline]
    pub fn sigma_s(&self, x: &Point) -> f64 {
        if self.geom.contains(x) {
            self.sigma_s_raw(x)
        } else {
            0.0
        }
    }

    /// σ_a(x, v) = σ(x, v) − σ_s(x); zero outside the domain.
    #[inline]
    pub fn sigma_a(&self, x: &Point, v: &Vector) -> f64 {
        if self.geom.contains(x) {
            self.sigma_raw(x, v) - self.sigma_s_raw(x)
        } else {
            0.0
        }
    }

    /// Anisotropy g(x) (zero unless Henyey–Greenstein).
    pub fn anisotropy(&self, x: &Point) -> f64 {
        match &self.phase {
            Phase::HenyeyGreenstein { g, .. } => g.value(x),
            _ => 0.0,
        }
    }

    /// Kernel as a function of the scattering cosine at `x`.
    #[inline]
    pub fn kernel_cos(&self, x: &Point, lambda: f64) -> f64 {
        if !self.geom.contains(x) {
            return 0.0;
        }
        let dim = self.dimension();
        match &self.phase {
            Phase::None => 0.0,
            Phase::Isotropic { sigma_s } => sigma_s.value(x) / dim.sphere_measure(),
            Phase::HenyeyGreenstein { sigma_s, g } => {
                hg_unchecked(lambda.clamp(-1.0, 1.0), g.value(x), sigma_s.value(x), dim)
            }
        }
    }

    /// k(x, v_in, v_out): scattering from `v_in` into `v_out`.
    #[inline]
    pub fn kernel(&self, x: &Point, v_in: &Vector, v_out: &Vector) -> f64 {
        self.kernel_cos(x, v_in.dot(v_out))
    }

    /// σ_g(x) = σ_s(x) h(g(x)), the angularly reduced scattering coefficient.
    pub fn sigma_g(&self, x: &Point) -> f64 {
        let dim = self.dimension();
        match &self.phase {
            Phase::None => 0.0,
            Phase::Isotropic { .. } => self.sigma_s(x) * hgmodel::h0(dim),
            Phase::HenyeyGreenstein { .. } => {
                self.sigma_s(x) * hgmodel::h_of_g(self.anisotropy(x), dim).unwrap_or(f64::NAN)
            }
        }
    }

    /// All coefficients at `x`; `k` is present when `v_out` is supplied.
    pub fn evaluate(&self, x: &Point, v: &Vector, v_out: Option<&Vector>) -> Result<Coefficients> {
        self.geom.check_unit(v)?;
        if let Some(w) = v_out {
            self.geom.check_unit(w)?;
        }
        if !self.geom.contains(x) {
            return Ok(Coefficients {
                sigma: 0.0,
                sigma_a: 0.0,
                sigma_s: 0.0,
                k: v_out.map(|_| 0.0),
            });
        }
        let sigma = self.sigma_raw(x, v);
        let sigma_s = self.sigma_s_raw(x);
        Ok(Coefficients {
            sigma,
            sigma_a: sigma - sigma_s,
            sigma_s,
            k: v_out.map(|w| self.kernel(x, v, w)),
        })
    }

    /// ∫ σ along the segment travelled from `from` to `to`, with σ evaluated
    /// in the direction of travel.
    pub fn optical_depth(&self, from: &Point, to: &Point) -> f64 {
        self.optical_depth_with(from, to, self.line_rule)
    }

    /// [`optical_depth`](Self::optical_depth) with an explicit rule.
    pub fn optical_depth_with(&self, from: &Point, to: &Point, rule: LineRule) -> f64 {
        let d = to - from;
        let len = d.norm();
        if len == 0.0 {
            return 0.0;
        }
        let dir = d / len;
        match rule {
            LineRule::Exact => match self.constant_sigma() {
                Some(s) => s * len,
                None => self.optical_depth_with(from, to, LineRule::Adaptive { tol: 1e-13 }),
            },
            LineRule::Midpoint { step } => {
                let n = (len / step).ceil().max(1.0) as usize;
                let h = len / n as f64;
                let mut sum = 0.0;
                for i in 0..n {
                    let p = from + dir * ((i as f64 + 0.5) * h);
                    sum += self.sigma(&p, &dir);
                }
                sum * h
            }
            LineRule::Adaptive { tol } => {
                let opts = Adaptive {
                    abs_tol: tol * len.max(1e-300),
                    rel_tol: 1e-13,
                    max_depth: 16,
                };
                adaptive(0.0, len, opts, |s| self.sigma(&(from + dir * s), &dir)).value
            }
            LineRule::Gauss { nodes } => match self.constant_sigma() {
                Some(s) => s * len,
                None => gauss_legendre(nodes).integrate(0.0, len, |s| self.sigma(&(from + dir * s), &dir)),
            },
        }
    }

    /// Attenuation E(x₀, …, x_m) along a broken path.
    ///
    /// The path is listed from the observation point back toward the source:
    /// radiation travels from `path[i+1]` to `path[i]`.
    pub fn attenuation_e(&self, path: &[Point]) -> Result<f64> {
        if path.len() < 2 {
            return Err(Error::Argument("a path needs at least two points".into()));
        }
        let mut depth = 0.0;
        for w in path.windows(2) {
            depth += self.optical_depth(&w[1], &w[0]);
        }
        Ok((-depth).exp())
    }

    /// Two-point attenuation E(x₀, x₁) without validation.
    #[inline]
    pub fn attenuation(&self, x0: &Point, x1: &Point) -> f64 {
        (-self.optical_depth(x1, x0)).exp()
    }

    /// Checks σ(x, v) = σ(x, −v) on a lattice of points and directions.
    pub fn is_direction_symmetric(&self, tol: f64) -> bool {
        match &self.sigma {
            SigmaField::Isotropic(_) => true,
            SigmaField::Directional(f) => {
                let dirs = survey_directions(self.dimension());
                let r = self.geom.radius();
                let c = self.geom.center();
                let m = 16;
                for i in 0..=m {
                    for j in 0..=m {
                        let p = Point::new(
                            -1.0 + 2.0 * i as f64 / m as f64,
                            -1.0 + 2.0 * j as f64 / m as f64,
                            0.0,
                        );
                        if p.norm() > 1.0 {
                            continue;
                        }
                        let x = c + p * r;
                        for v in &dirs {
                            if ((f.0)(&x, v) - (f.0)(&x, &(-v))).abs() > tol {
                                return false;
                            }
                        }
                    }
                }
                true
            }
        }
    }
}

fn survey_directions(dim: Dimension) -> Vec<Vector> {
    match dim {
        Dimension::Two => (0..16)
            .map(|j| crate::geometry::planar_direction(2.0 * PI * j as f64 / 16.0))
            .collect(),
        Dimension::Three => {
            let mut out = Vec::new();
            for i in -1i32..=1 {
                for j in -1i32..=1 {
                    for k in -1i32..=1 {
                        if i != 0 || j != 0 || k != 0 {
                            out.push(Vector::new(i as f64, j as f64, k as f64).normalize());
                        }
                    }
                }
            }
            out
        }
    }
}
