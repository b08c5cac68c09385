//! The map h(g) = σ_g/σ_s for Henyey–Greenstein media and its inverse.
//!
//! In the plane h has the closed form (1+g²)/(π(1−g²)). In space it is the
//! integral of the kernel over the scattering angle,
//!
//! ```text
//!         π
//! h(g) =  ∫  (1−g²) / (4π (1+g²−2g cos θ)^{3/2}) dθ,
//!         0
//! ```
//!
//! evaluated by adaptive quadrature graded toward the forward peak. Both
//! versions are strictly increasing with h'(0) = 0, and (1−g)·h(g) tends to
//! 1/π (plane) or 1/(2π) (space) as g → 1.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::Dimension;
use crate::quadrature::{adaptive, graded_breakpoints, Adaptive};

/// Upper end of the inversion bracket.
pub const G_CEILING: f64 = 1.0 - 1e-9;
/// Number of bisection steps used by the spatial inversion.
pub const BISECTION_STEPS: usize = 50;

/// h(0): 1/π in the plane, 1/4 in space.
pub fn h0(dim: Dimension) -> f64 {
    match dim {
        Dimension::Two => 1.0 / PI,
        Dimension::Three => 0.25,
    }
}

/// Limit of (1−g)·h(g) as g → 1.
pub fn edge_constant(dim: Dimension) -> f64 {
    match dim {
        Dimension::Two => 1.0 / PI,
        Dimension::Three => 1.0 / (2.0 * PI),
    }
}

/// Evaluates h(g) for 0 ≤ g < 1.
pub fn h_of_g(g: f64, dim: Dimension) -> Result<f64> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::Argument(format!("anisotropy g = {g} must lie in [0, 1)")));
    }
    Ok(match dim {
        Dimension::Two => (1.0 + g * g) / (PI * (1.0 - g * g)),
        Dimension::Three => h3(g),
    })
}

fn h3(g: f64) -> f64 {
    if g == 0.0 {
        return 0.25;
    }
    let num = (1.0 - g) * (1.0 + g);
    let f = |theta: f64| {
        let sh = (0.5 * theta).sin();
        let q = (1.0 - g) * (1.0 - g) + 4.0 * g * sh * sh;
        num / (4.0 * PI * q * q.sqrt())
    };
    let floor = ((1.0 - g) * 0.25).max(1e-12);
    let pts = graded_breakpoints(0.0, PI, 0.0, floor, 60);
    let opts = Adaptive {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_depth: 40,
    };
    pts.windows(2).map(|w| adaptive(w[0], w[1], opts, f).value).sum()
}

fn ceiling(dim: Dimension) -> f64 {
    static C2: OnceLock<f64> = OnceLock::new();
    static C3: OnceLock<f64> = OnceLock::new();
    match dim {
        Dimension::Two => *C2.get_or_init(|| h_of_g(G_CEILING, dim).unwrap()),
        Dimension::Three => *C3.get_or_init(|| h_of_g(G_CEILING, dim).unwrap()),
    }
}

/// Recovers g from a measured ratio σ_g/σ_s.
///
/// Values below h(0) have no Henyey–Greenstein preimage and give
/// [`Error::OutOfRange`]; values above h(1 − 1e−9) give [`Error::Saturated`].
pub fn invert_h(value: f64, dim: Dimension) -> Result<f64> {
    let floor = h0(dim);
    if !value.is_finite() || value < floor * (1.0 - 1e-12) {
        return Err(Error::OutOfRange { value, floor });
    }
    if value <= floor {
        return Ok(0.0);
    }
    let top = ceiling(dim);
    if value > top {
        return Err(Error::Saturated {
            value,
            ceiling: top,
            lower: G_CEILING,
        });
    }
    match dim {
        Dimension::Two => {
            let ph = PI * value;
            Ok(((ph - 1.0) / (ph + 1.0)).max(0.0).sqrt())
        }
        Dimension::Three => {
            let (mut lo, mut hi) = (0.0, G_CEILING);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if h3(mid) < value {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// Dimension-bound view of h and its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HGMap {
    pub dim: Dimension,
}

impl HGMap {
    pub fn new(dim: Dimension) -> Self {
        Self { dim }
    }

    pub fn h(&self, g: f64) -> Result<f64> {
        h_of_g(g, self.dim)
    }

    pub fn invert(&self, value: f64) -> Result<f64> {
        invert_h(value, self.dim)
    }

    pub fn h0(&self) -> f64 {
        h0(self.dim)
    }

    pub fn edge_constant(&self) -> f64 {
        edge_constant(self.dim)
    }
}
