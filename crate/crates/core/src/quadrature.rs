//! Fixed and adaptive one-dimensional quadrature rules shared by the kernel,
//! medium and hgmodel modules.

use std::sync::OnceLock;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre polynomial roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Mapped nodes and weights on [a, b].
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Cached Gauss–Legendre rule of a commonly used order.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=64).map(|k| GaussLegendre::new(k.max(1))).collect());
    assert!(n >= 1 && n <= 64, "cached Gauss-Legendre orders are 1..=64");
    &cache[n]
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and depth limit for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 30,
        }
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration.
///
/// The subinterval with the largest error estimate is bisected until the
/// summed estimate meets the tolerance, every remaining candidate has reached
/// `max_depth`, or [`MAX_INTERVALS`] is hit. Ties break by position, so the
/// result is bit-reproducible.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, opts: Adaptive, mut f: F) -> Estimate {
    if a == b {
        return Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e, 0u32)];
    let mut evals = 15;
    loop {
        let value: f64 = parts.iter().map(|p| p.2).sum();
        let error: f64 = parts.iter().map(|p| p.3).sum();
        let open: f64 = parts.iter().filter(|p| p.4 < opts.max_depth).map(|p| p.3).sum();
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        let pick = parts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.4 < opts.max_depth)
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal).then(y.0.cmp(&x.0)))
            .map(|(i, _)| i);
        let done = error <= tol || open <= 0.1 * tol || parts.len() >= MAX_INTERVALS;
        match pick {
            Some(i) if !done => {
                let (lo, hi, _, _, d) = parts[i];
                let m = 0.5 * (lo + hi);
                let (lv, le) = gk15(&mut f, lo, m);
                let (rv, re) = gk15(&mut f, m, hi);
                evals += 30;
                parts[i] = (lo, m, lv, le, d + 1);
                parts.insert(i + 1, (m, hi, rv, re, d + 1));
            }
            _ => {
                let value = sum_in_order(&parts);
                return Estimate {
                    value,
                    error,
                    evaluations: evals,
                };
            }
        }
    }
}

/// Cap on the number of subintervals kept by [`adaptive`].
pub const MAX_INTERVALS: usize = 2000;

fn sum_in_order(parts: &[(f64, f64, f64, f64, u32)]) -> f64 {
    parts.iter().map(|p| p.2).sum()
}

/// Breakpoints that grade geometrically toward `target` inside [a, b].
///
/// Returns an increasing list starting at `a` and ending at `b`. Pieces on each
/// side of `target` halve in length until they reach `floor` or `levels`
/// refinements have been made.
pub fn graded_breakpoints(a: f64, b: f64, target: f64, floor: f64, levels: u32) -> Vec<f64> {
    let t = target.clamp(a, b);
    let mut left = Vec::new();
    let mut len = t - a;
    let mut k = 0;
    while len > floor && k < levels && len > 0.0 {
        left.push(t - len);
        len *= 0.5;
        k += 1;
    }
    let mut pts = left;
    pts.push(if t > a { t } else { a });
    let mut len = b - t;
    let mut right = Vec::new();
    let mut k = 0;
    while len > floor && k < levels && len > 0.0 {
        right.push(t + len);
        len *= 0.5;
        k += 1;
    }
    right.reverse();
    if pts[0] != a {
        pts.insert(0, a);
    }
    pts.extend(right);
    if *pts.last().unwrap() != b {
        pts.push(b);
    }
    pts.dedup_by(|x, y| x == y);
    pts
}
