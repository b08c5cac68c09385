//! Reference computations that share no quadrature or medium code with the
//! library: coefficients are plain closures, integrals are composite Simpson
//! rules after singularity-removing substitutions.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type P = [f64; 3];

/// Coefficients of an isotropic-σ medium on a disk or ball centered at 0.
pub struct Ref<'a> {
    pub n: usize,
    pub radius: f64,
    pub sigma: &'a (dyn Fn(&P) -> f64 + Sync),
    pub sigma_a: &'a (dyn Fn(&P) -> f64 + Sync),
    /// k(x, cos) for scattering through angle arccos(cos).
    pub k: &'a (dyn Fn(&P, f64) -> f64 + Sync),
    /// σ is constant and equal to this value.
    pub constant: Option<f64>,
}

pub fn sub(a: &P, b: &P) -> P {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &P, b: &P, s: f64) -> P {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

pub fn dot(a: &P, b: &P) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &P) -> f64 {
    dot(a, a).sqrt()
}

/// Composite Simpson rule with `m` (even) intervals.
pub fn simpson(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

impl Ref<'_> {
    /// Distance from x to the sphere along v.
    pub fn exit(&self, x: &P, v: &P) -> f64 {
        let b = dot(x, v);
        let c = dot(x, x) - self.radius * self.radius;
        -b + (b * b - c).max(0.0).sqrt()
    }

    /// ∫ σ over the segment a → b.
    pub fn depth(&self, a: &P, b: &P) -> f64 {
        let d = sub(b, a);
        let len = norm(&d);
        if let Some(s) = self.constant {
            return s * len;
        }
        if len == 0.0 {
            return 0.0;
        }
        let m = ((len * 200.0).ceil() as usize).max(8);
        simpson(0.0, 1.0, m, |u| (self.sigma)(&add(a, &d, u))) * len
    }

    /// Ballistic density σ_a(x′+tv′) exp(−∫₀^t σ).
    pub fn eta(&self, xp: &P, v: &P, t: f64) -> f64 {
        let y = add(xp, v, t);
        (self.sigma_a)(&y) * (-self.depth(xp, &y)).exp()
    }

    /// Single-scattering kernel through the substitution t = t₀ + d sinh s.
    pub fn alpha1(&self, x: &P, xp: &P, v: &P) -> f64 {
        let rel = sub(x, xp);
        let t0 = dot(&rel, v);
        let perp = add(&rel, v, -t0);
        let d = norm(&perp);
        let tau = self.exit(xp, v);
        let nu = [xp[0] / self.radius, xp[1] / self.radius, xp[2] / self.radius];
        let cos = -dot(&nu, v);
        let s0 = (-t0 / d).asinh();
        let s1 = ((tau - t0) / d).asinh();
        let pw = self.n as i32 - 1;
        let f = |s: f64| {
            let t = t0 + d * s.sinh();
            let y = add(xp, v, t);
            let r = sub(x, &y);
            let dist = norm(&r);
            let om = [r[0] / dist, r[1] / dist, r[2] / dist];
            let e = (-(self.depth(&y, x) + self.depth(xp, &y))).exp();
            (self.sigma_a)(x) * e * (self.k)(&y, dot(v, &om)) / dist.powi(pw) * d * s.cosh()
        };
        simpson(s0, s1, 4000, f) * cos
    }

    /// Inner chord integral of the double-scattering kernel at z toward x.
    fn alpha2_inner(&self, z: &P, omega: &P, xp: &P, v: &P, tau: f64) -> f64 {
        let rel = sub(z, xp);
        let t0 = dot(&rel, v);
        let d = norm(&add(&rel, v, -t0));
        if d < 1e-12 {
            return 0.0;
        }
        let s0 = (-t0 / d).asinh();
        let s1 = ((tau - t0) / d).asinh();
        simpson(s0, s1, 256, |s| {
            let t = t0 + d * s.sinh();
            let y = add(xp, v, t);
            let r = sub(z, &y);
            let dist = norm(&r);
            let w = [r[0] / dist, r[1] / dist, r[2] / dist];
            let e = (-(self.depth(&y, z) + self.depth(xp, &y))).exp();
            e * (self.k)(&y, dot(v, &w)) * (self.k)(z, dot(&w, omega)) / dist * d * s.cosh()
        })
    }

    /// Monte Carlo estimate of the planar double-scattering kernel with its
    /// standard error. z is drawn uniformly in polar coordinates around x,
    /// stratified in angle.
    pub fn alpha2_mc(&self, x: &P, xp: &P, v: &P, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = self.exit(xp, v);
        let nu = [xp[0] / self.radius, xp[1] / self.radius, 0.0];
        let cos = -dot(&nu, v);
        let mut sum = 0.0;
        let mut sq = 0.0;
        for i in 0..samples {
            let theta = 2.0 * PI * (i as f64 + rng.gen::<f64>()) / samples as f64;
            let omega = [theta.cos(), theta.sin(), 0.0];
            let back = [-omega[0], -omega[1], 0.0];
            let rmax = self.exit(x, &back);
            let r = rmax * rng.gen::<f64>();
            let z = add(x, &back, r);
            let e = (-self.depth(&z, x)).exp();
            let val = 2.0 * PI * rmax * (self.sigma_a)(x) * e * self.alpha2_inner(&z, &omega, xp, v, tau);
            sum += val;
            sq += val * val;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sq / m - mean * mean).max(0.0);
        (mean * cos, (var / m).sqrt() * cos)
    }
}

/// h(g) in space by a Simpson rule in the substitution θ = 2 atan(u·(1−g)/(1+g)),
/// which flattens the forward peak.
pub fn h3_reference(g: f64) -> f64 {
    if g == 0.0 {
        return 0.25;
    }
    let c = (1.0 - g) / (1.0 + g);
    let umax = 1.0 / c * 1e6;
    let f = |w: f64| {
        let u = w.exp();
        let theta = 2.0 * (u * c).atan();
        let sh = (0.5 * theta).sin();
        let q = (1.0 - g) * (1.0 - g) + 4.0 * g * sh * sh;
        let dtheta_du = 2.0 * c / (1.0 + u * u * c * c);
        (1.0 - g) * (1.0 + g) / (4.0 * PI * q * q.sqrt()) * dtheta_du * u
    };
    let lo = (1e-8f64).ln();
    simpson(lo, umax.ln(), 20000, f)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
