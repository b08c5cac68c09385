//! JSON experiment configurations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPair, Dimension, DomainGeometry, Point, Vector};
use crate::medium::{CoefficientField, OpticalMedium, Phase, SigmaField};

use super::pgrid;

/// A scalar coefficient profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant(f64),
    /// value + gradient·(x − center of the domain).
    Affine { value: f64, gradient: Vec<f64> },
    /// edge + (center − edge)(1 − |x̂|²), with x̂ scaled to the unit domain.
    Radial { center: f64, edge: f64 },
    /// base + amplitude·exp(−|x − at|²/width²).
    Gaussian {
        base: f64,
        amplitude: f64,
        at: Vec<f64>,
        width: f64,
    },
    /// Samples from a PGRID file, relative to the config file.
    Pgrid(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub dimension: usize,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

/// σ, optional σ_s, and optional HG anisotropy g (requires σ_s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub sigma: Profile,
    #[serde(default)]
    pub sigma_s: Option<Profile>,
    #[serde(default)]
    pub g: Option<Profile>,
}

/// An incoming boundary pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PairSpec {
    /// Entry at angle φ on the circle, direction tilted by θ from the inward normal.
    Planar { phi: f64, theta: f64 },
    /// Entry point on the boundary and a direction (normalized on load).
    Ray { point: Vec<f64>, direction: Vec<f64> },
}

/// Boundary source of the forward task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Uniform(f64),
    Beam { pair: PairSpec, width: f64 },
}

fn d_grid() -> usize {
    64
}
fn d_angles() -> usize {
    32
}
fn d_tol() -> f64 {
    1e-8
}
fn d_orders() -> usize {
    200
}
fn d_lattice() -> usize {
    40
}
fn d_half() -> f64 {
    0.5
}
fn d_samples() -> usize {
    1000
}
fn d_collar() -> f64 {
    0.1
}
fn d_true() -> bool {
    true
}
fn d_smoothing() -> usize {
    5
}
fn d_pairs() -> usize {
    3
}
fn d_bound_samples() -> usize {
    1000
}

/// The experiment to run and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Energy map H for a boundary source.
    Forward {
        source: SourceSpec,
        #[serde(default = "d_grid")]
        grid_n: usize,
        #[serde(default = "d_angles")]
        angles: usize,
        #[serde(default = "d_tol")]
        tol: f64,
        #[serde(default = "d_orders")]
        max_orders: usize,
    },
    /// α₁ (and α₂ in the plane) on a lattice for one pair.
    Kernel {
        pair: PairSpec,
        #[serde(default = "d_lattice")]
        lattice: usize,
        #[serde(default)]
        alpha2: bool,
    },
    /// Near-ray fit of α₁ at a point of the chord.
    Asymfit {
        pair: PairSpec,
        #[serde(default = "d_half")]
        t0_fraction: f64,
        #[serde(default)]
        eps: Option<Vec<f64>>,
    },
    /// Symmetric-σ reconstruction along chords.
    ReconSigma {
        lines: Vec<PairSpec>,
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default = "d_collar")]
        collar: f64,
        #[serde(default = "d_true")]
        known_collar: bool,
        #[serde(default = "d_smoothing")]
        smoothing: usize,
    },
    /// Anisotropy at probe points.
    ReconG {
        probes: Vec<Vec<f64>>,
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default = "d_collar")]
        collar: f64,
    },
    /// Diffusive-regime recovery of σ_a from synthetic H.
    Diffusion {
        #[serde(default = "d_grid")]
        grid_n: usize,
        diffusion: Profile,
        sigma_a: Profile,
        #[serde(default = "one")]
        boundary: f64,
    },
    /// Stability harness on seeded medium pairs.
    Stability {
        #[serde(default = "d_pairs")]
        pairs: usize,
        #[serde(default = "d_bound_samples")]
        bound_samples: usize,
    },
    /// Built-in trivial checks.
    Selftest {},
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Forward { .. } => "forward",
            Task::Kernel { .. } => "kernel",
            Task::Asymfit { .. } => "asymfit",
            Task::ReconSigma { .. } => "recon-sigma",
            Task::ReconG { .. } => "recon-g",
            Task::Diffusion { .. } => "diffusion",
            Task::Stability { .. } => "stability",
            Task::Selftest {} => "selftest",
        }
    }
}

/// A full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    pub medium: MediumSpec,
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Directory used to resolve relative paths.
    #[serde(skip)]
    pub base: PathBuf,
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn range<T: PartialOrd + std::fmt::Display + Copy>(name: &str, v: T, lo: T, hi: T) -> Result<()> {
    if v >= lo && v <= hi {
        Ok(())
    } else {
        Err(cfg(format!("{name} = {v} is outside [{lo}, {hi}]")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(cfg(format!("{name} must be finite")))
    }
}

fn vector(name: &str, v: &[f64], n: usize) -> Result<Point> {
    if v.len() != n {
        return Err(cfg(format!("{name} needs {n} components, got {}", v.len())));
    }
    for (i, x) in v.iter().enumerate() {
        finite(&format!("{name}[{i}]"), *x)?;
    }
    let mut p = Point::zeros();
    for (i, x) in v.iter().enumerate() {
        p[i] = *x;
    }
    Ok(p)
}

/// Tagged enums are buffered before they are checked, so serde reports an
/// unknown key at the end of its object. Point at the key instead.
fn unknown_key_position(text: &str, msg: &str) -> Option<(usize, usize)> {
    let key = msg.strip_prefix("unknown field `")?.split('`').next()?;
    let quoted = format!("\"{key}\"");
    let mut from = 0;
    while let Some(i) = text[from..].find(&quoted) {
        let at = from + i;
        let after = text[at + quoted.len()..].trim_start();
        if after.starts_with(':') {
            let before = &text[..at];
            let line = before.matches('\n').count() + 1;
            let column = at - before.rfind('\n').map_or(0, |n| n + 1) + 1;
            return Some((line, column));
        }
        from = at + quoted.len();
    }
    None
}

impl ExperimentConfig {
    /// Parses JSON; syntax and schema errors carry line and column.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut c: Self = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
            let (line, column) = unknown_key_position(text, msg).unwrap_or((e.line(), e.column()));
            cfg(format!("line {line}, column {column}: {msg}"))
        })?;
        c.base = base.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn dimension(&self) -> Result<Dimension> {
        Dimension::from_n(self.geometry.dimension).map_err(|_| cfg(format!("geometry.dimension must be 2 or 3")))
    }

    pub fn domain(&self) -> Result<DomainGeometry> {
        let dim = self.dimension()?;
        let center = match &self.geometry.center {
            Some(c) => vector("geometry.center", c, dim.n())?,
            None => Point::zeros(),
        };
        DomainGeometry::new(dim, center, self.geometry.radius).map_err(|e| cfg(format!("geometry: {e}")))
    }

    fn check_profile(&self, name: &str, p: &Profile, n: usize) -> Result<()> {
        match p {
            Profile::Constant(v) => finite(name, *v),
            Profile::Affine { value, gradient } => {
                finite(name, *value)?;
                vector(&format!("{name}.gradient"), gradient, n).map(|_| ())
            }
            Profile::Radial { center, edge } => {
                finite(name, *center)?;
                finite(name, *edge)
            }
            Profile::Gaussian {
                base,
                amplitude,
                at,
                width,
            } => {
                finite(name, *base)?;
                finite(name, *amplitude)?;
                vector(&format!("{name}.at"), at, n)?;
                if !(*width > 0.0) {
                    return Err(cfg(format!("{name}.width must be positive")));
                }
                Ok(())
            }
            Profile::Pgrid(path) => {
                let full = self.base.join(path);
                if !full.is_file() {
                    return Err(cfg(format!("{name}: file {} does not exist", full.display())));
                }
                Ok(())
            }
        }
    }

    fn check_pair(&self, name: &str, p: &PairSpec, n: usize) -> Result<()> {
        match p {
            PairSpec::Planar { phi, theta } => {
                if n != 2 {
                    return Err(cfg(format!("{name}: planar pairs need dimension 2")));
                }
                finite(name, *phi)?;
                range(&format!("{name}.theta"), *theta, -1.5, 1.5)
            }
            PairSpec::Ray { point, direction } => {
                vector(&format!("{name}.point"), point, n)?;
                let d = vector(&format!("{name}.direction"), direction, n)?;
                if d.norm() == 0.0 {
                    return Err(cfg(format!("{name}.direction must be nonzero")));
                }
                self.pair(p).map(|_| ()).map_err(|e| cfg(format!("{name}: {e}")))
            }
        }
    }

    /// Range and consistency checks beyond the schema.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dimension()?;
        let n = dim.n();
        range("geometry.radius", self.geometry.radius, 1e-6, 1e6)?;
        self.domain()?;
        self.check_profile("medium.sigma", &self.medium.sigma, n)?;
        if let Some(p) = &self.medium.sigma_s {
            self.check_profile("medium.sigma_s", p, n)?;
        }
        if let Some(p) = &self.medium.g {
            if self.medium.sigma_s.is_none() {
                return Err(cfg("medium.g requires medium.sigma_s"));
            }
            self.check_profile("medium.g", p, n)?;
        }
        let planar = |what: &str| -> Result<()> {
            if n != 2 {
                return Err(cfg(format!("task {what} supports dimension 2 only")));
            }
            Ok(())
        };
        match &self.task {
            Task::Forward {
                source,
                grid_n,
                angles,
                tol,
                max_orders,
            } => {
                planar("forward")?;
                range("task.grid_n", *grid_n, 8, 1024)?;
                range("task.angles", *angles, 4, 1024)?;
                range("task.tol", *tol, 1e-14, 1e-1)?;
                range("task.max_orders", *max_orders, 1, 100_000)?;
                match source {
                    SourceSpec::Uniform(v) => range("task.source.uniform", *v, 0.0, 1e6)?,
                    SourceSpec::Beam { pair, width } => {
                        self.check_pair("task.source.beam.pair", pair, n)?;
                        range("task.source.beam.width", *width, 1e-4, 0.5)?;
                    }
                }
            }
            Task::Kernel { pair, lattice, alpha2 } => {
                self.check_pair("task.pair", pair, n)?;
                range("task.lattice", *lattice, 2, 400)?;
                if *alpha2 {
                    planar("kernel with alpha2")?;
                }
            }
            Task::Asymfit { pair, t0_fraction, eps } => {
                self.check_pair("task.pair", pair, n)?;
                range("task.t0_fraction", *t0_fraction, 0.01, 0.99)?;
                if let Some(e) = eps {
                    if e.len() < 4 || e.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                        return Err(cfg("task.eps needs at least 4 values in (0, 1)"));
                    }
                }
            }
            Task::ReconSigma {
                lines,
                samples,
                collar,
                smoothing,
                ..
            } => {
                if lines.is_empty() {
                    return Err(cfg("task.lines must not be empty"));
                }
                for (i, l) in lines.iter().enumerate() {
                    self.check_pair(&format!("task.lines[{i}]"), l, n)?;
                }
                range("task.samples", *samples, 16, 1_000_000)?;
                range("task.collar", *collar, 1e-6, 0.5)?;
                range("task.smoothing", *smoothing, 1, 101)?;
            }
            Task::ReconG { probes, samples, collar } => {
                planar("recon-g")?;
                if probes.is_empty() {
                    return Err(cfg("task.probes must not be empty"));
                }
                for (i, p) in probes.iter().enumerate() {
                    vector(&format!("task.probes[{i}]"), p, n)?;
                }
                range("task.samples", *samples, 16, 1_000_000)?;
                range("task.collar", *collar, 1e-6, 0.5)?;
                if self.medium.g.is_none() {
                    return Err(cfg("task recon-g needs a Henyey-Greenstein medium (medium.g)"));
                }
            }
            Task::Diffusion {
                grid_n,
                diffusion,
                sigma_a,
                boundary,
            } => {
                planar("diffusion")?;
                range("task.grid_n", *grid_n, 8, 1024)?;
                self.check_profile("task.diffusion", diffusion, n)?;
                self.check_profile("task.sigma_a", sigma_a, n)?;
                range("task.boundary", *boundary, 1e-12, 1e12)?;
            }
            Task::Stability { pairs, bound_samples } => {
                range("task.pairs", *pairs, 1, 16)?;
                range("task.bound_samples", *bound_samples, 1, 100_000)?;
            }
            Task::Selftest {} => {}
        }
        self.medium().map(|_| ())
    }

    /// Builds a coefficient field from a profile.
    pub fn field(&self, p: &Profile) -> Result<CoefficientField> {
        let geom = self.domain()?;
        let c = geom.center();
        let r = geom.radius();
        let n = geom.n();
        Ok(match p {
            Profile::Constant(v) => CoefficientField::Constant(*v),
            Profile::Affine { value, gradient } => {
                let (v, g) = (*value, vector("gradient", gradient, n)?);
                CoefficientField::function(move |x| v + g.dot(&(x - c)))
            }
            Profile::Radial { center, edge } => {
                let (a, b) = (*center, *edge);
                CoefficientField::function(move |x| b + (a - b) * (1.0 - ((x - c) / r).norm_squared()))
            }
            Profile::Gaussian {
                base,
                amplitude,
                at,
                width,
            } => {
                let (b, a, w) = (*base, *amplitude, *width);
                let at = vector("at", at, n)?;
                CoefficientField::function(move |x| b + a * (-(x - at).norm_squared() / (w * w)).exp())
            }
            Profile::Pgrid(path) => {
                let grid = pgrid::read_pgrid(&self.base.join(path)).map_err(|e| match e {
                    Error::Io(m) => Error::Config(m),
                    other => other,
                })?;
                let lo: Vec<f64> = (0..n).map(|a| c[a] - r).collect();
                let hi: Vec<f64> = (0..n).map(|a| c[a] + r).collect();
                pgrid::check_covers(&grid, &lo, &hi)?;
                CoefficientField::Grid(grid)
            }
        })
    }

    /// The configured medium.
    pub fn medium(&self) -> Result<OpticalMedium> {
        let geom = self.domain()?;
        let sigma = SigmaField::Isotropic(self.field(&self.medium.sigma)?);
        let phase = match (&self.medium.sigma_s, &self.medium.g) {
            (None, _) => Phase::None,
            (Some(s), None) => Phase::Isotropic { sigma_s: self.field(s)? },
            (Some(s), Some(g)) => Phase::HenyeyGreenstein {
                sigma_s: self.field(s)?,
                g: self.field(g)?,
            },
        };
        OpticalMedium::new(geom, sigma, phase).map_err(|e| match e {
            Error::Argument(m) | Error::Domain(m) => cfg(format!("medium: {m}")),
            other => other,
        })
    }

    /// Resolves a pair against the domain.
    pub fn pair(&self, p: &PairSpec) -> Result<BoundaryPair> {
        let geom = self.domain()?;
        match p {
            PairSpec::Planar { phi, theta } => BoundaryPair::planar(&geom, *phi, *theta),
            PairSpec::Ray { point, direction } => {
                let x = vector("point", point, geom.n())?;
                let d: Vector = vector("direction", direction, geom.n())?;
                BoundaryPair::new(&geom, x, d.normalize())
            }
        }
    }
}
