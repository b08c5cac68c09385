use std::f64::consts::PI;
use std::time::Instant;

use radtrans::geometry::{p2, p3};
use radtrans::harness::{
    check_ballistic_stability, check_h_stability, check_hg_sigma_g_stability, check_kernel_bounds,
    check_single_scattering_stability, run_suite, seeded_pair, suite_points, summary, HarnessOptions,
    KernelSampleSpec,
};
use radtrans::kernels::PointSet;
use radtrans::medium::{CoefficientField, Phase, SigmaField};
use radtrans::{BoundaryPair, DomainGeometry, OpticalMedium};

fn light() -> HarnessOptions {
    HarnessOptions {
        pairs: 1,
        lattice: 12,
        sup_samples: 16,
        ..Default::default()
    }
}

#[test]
fn identical_media_give_zero_sides() {
    let g = DomainGeometry::unit_disk();
    let m = OpticalMedium::constant_hg(g, 1.0, 0.3, 0.4).unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.1).unwrap();
    let opts = light();
    let pts = PointSet::lattice(&g, 10);
    let b = check_ballistic_stability(&m, &m, &pair, &pts, &opts).unwrap();
    assert_eq!((b.lhs, b.rhs), (0.0, 0.0));
    let s = check_single_scattering_stability(&m, &m, &pair, &pair.at(0.9), &opts).unwrap();
    assert_eq!((s.lhs, s.rhs), (0.0, 0.0));
    let h = check_h_stability(&m, &m, &pair, &pts, &opts).unwrap();
    assert_eq!((h.lhs, h.rhs), (0.0, 0.0));
    for r in check_hg_sigma_g_stability(&m, &m, &[pair], &opts).unwrap() {
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.passed);
    }
}

#[test]
fn ballistic_closed_form_and_symmetry() {
    let g = DomainGeometry::unit_disk();
    let a = OpticalMedium::constant(g, 1.0, 0.0).unwrap();
    let b = OpticalMedium::constant(g, 1.1, 0.0).unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.0).unwrap();
    let opts = HarnessOptions {
        chord_samples: 20000,
        ..light()
    };
    let pts = PointSet::lattice(&g, 10);
    let r = check_ballistic_stability(&a, &b, &pair, &pts, &opts).unwrap();
    // |e^{-t} − 1.1 e^{-1.1t}| changes sign at t* = 10 ln 1.1.
    let f = |t: f64| -(-t).exp() + (-1.1 * t).exp();
    let ts = 10.0 * 1.1f64.ln();
    let want = (f(ts) - f(0.0)).abs() + (f(2.0) - f(ts)).abs();
    assert!((r.lhs - want).abs() < 1e-6, "{} vs {want}", r.lhs);
    assert!(r.passed);
    let s = check_ballistic_stability(&b, &a, &pair, &pts, &opts).unwrap();
    assert_eq!(r, s);
}

#[test]
fn h_closed_form_and_rescaling() {
    let g = DomainGeometry::unit_disk();
    let a = OpticalMedium::constant(g, 1.0, 0.0).unwrap();
    let b = OpticalMedium::constant(g, 1.1, 0.0).unwrap();
    let pair = BoundaryPair::planar(&g, 2.0, 0.4).unwrap();
    let l = pair.chord(&g);
    let pts = PointSet::lattice(&g, 10);
    let r = check_h_stability(&a, &b, &pair, &pts, &light()).unwrap();
    assert!((r.lhs - 0.1 * l * l / 2.0).abs() < 1e-6);
    assert!(r.passed);
    let base = OpticalMedium::from_absorption(g, CoefficientField::function(|x| 1.0 + 0.3 * x.x), Phase::None).unwrap();
    for c in [0.5, 2.0] {
        let scaled = OpticalMedium::from_absorption(g, CoefficientField::function(move |x| c * (1.0 + 0.3 * x.x)), Phase::None)
            .unwrap();
        let r = check_h_stability(&base, &scaled, &pair, &pts, &light()).unwrap();
        assert!(r.passed && r.constant.unwrap() > 0.0);
    }
}

#[test]
fn h_check_rejects_directional_sigma() {
    let g = DomainGeometry::unit_disk();
    let a = OpticalMedium::constant(g, 1.0, 0.0).unwrap();
    let d = OpticalMedium::new(
        g,
        SigmaField::Directional(radtrans::medium::DirectionalFn(std::sync::Arc::new(|_, v| 1.0 + 0.2 * v.x))),
        Phase::None,
    )
    .unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.0).unwrap();
    assert!(check_h_stability(&a, &d, &pair, &PointSet::lattice(&g, 8), &light()).is_err());
}

#[test]
fn single_scattering_g_perturbation() {
    let g = DomainGeometry::unit_disk();
    let a = OpticalMedium::constant_hg(g, 1.0, 0.3, 0.4).unwrap();
    let b = OpticalMedium::constant_hg(g, 1.0, 0.3, 0.5).unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.2).unwrap();
    let x = pair.at(0.5 * pair.chord(&g));
    let start = Instant::now();
    let r = check_single_scattering_stability(&a, &b, &pair, &x, &HarnessOptions::default()).unwrap();
    eprintln!("{}({:?})", summary(std::slice::from_ref(&r)), start.elapsed());
    assert!(r.passed && r.margin > 0.0);
}

#[test]
fn single_scattering_is_local() {
    let g = DomainGeometry::unit_disk();
    let sigma = |bump: f64| {
        CoefficientField::function(move |x| 1.0 + if x.y > 0.5 { bump } else { 0.0 })
    };
    let hg = |s: CoefficientField, gg: f64| {
        OpticalMedium::new(
            g,
            SigmaField::Isotropic(s),
            Phase::HenyeyGreenstein {
                sigma_s: 0.3.into(),
                g: gg.into(),
            },
        )
        .unwrap()
    };
    let pair = BoundaryPair::planar(&g, PI, 0.0).unwrap();
    let x = pair.at(0.8);
    let opts = light();
    let base = check_single_scattering_stability(&hg(sigma(0.0), 0.4), &hg(sigma(0.0), 0.5), &pair, &x, &opts).unwrap();
    let far = check_single_scattering_stability(&hg(sigma(0.0), 0.4), &hg(sigma(0.4), 0.5), &pair, &x, &opts).unwrap();
    assert!((base.lhs - far.lhs).abs() < 1e-10);
    assert!(far.passed);
}

#[test]
fn hg_check_preconditions() {
    let g = DomainGeometry::unit_disk();
    let iso = OpticalMedium::constant(g, 1.0, 0.3).unwrap();
    let hg = OpticalMedium::constant_hg(g, 1.0, 0.3, 0.4).unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.0).unwrap();
    assert!(check_hg_sigma_g_stability(&iso, &hg, &[pair], &light()).is_err());
    let weak = OpticalMedium::constant_hg(g, 1.0, 1e-4, 0.4).unwrap();
    assert!(check_hg_sigma_g_stability(&weak, &hg, &[pair], &light()).is_err());
}

#[test]
fn kernel_bounds_scattering_free_and_constant() {
    let g = DomainGeometry::unit_disk();
    let free = OpticalMedium::constant(g, 1.0, 0.0).unwrap();
    let spec = KernelSampleSpec { samples: 200, seed: 3 };
    for r in check_kernel_bounds(&free, &spec).unwrap() {
        assert!(r.passed && r.lhs == 0.0);
    }
    let m = OpticalMedium::constant(g, 1.0, 0.5).unwrap();
    let start = Instant::now();
    let reps = check_kernel_bounds(&m, &KernelSampleSpec::default()).unwrap();
    eprintln!("{}({:?})", summary(&reps), start.elapsed());
    assert!(reps.iter().all(|r| r.passed && r.margin >= 0.0));
    assert!(reps[0].sampling.samples >= 900);
}

#[test]
fn kernel_bound_is_tight_near_the_ray() {
    let g = DomainGeometry::unit_disk();
    let m = OpticalMedium::constant(g, 0.2, 0.1).unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.0).unwrap();
    let x = p2(-0.9, 1e-6);
    let a = radtrans::kernels::alpha1(&m, &x, &pair).unwrap();
    let bound = m.sigma_a_max() * m.k_max() * radtrans::kernels::alpha1_bound_factor(&g, &x, &pair).unwrap();
    assert!(a <= bound && bound < 1.5 * a, "{a} {bound}");
}

#[test]
fn transverse_bound_in_the_ball() {
    let g = DomainGeometry::unit_ball();
    let m = OpticalMedium::constant_hg(g, 1.0, 0.4, 0.3).unwrap();
    let spec = KernelSampleSpec { samples: 1000, seed: 5 };
    let start = Instant::now();
    let reps = check_kernel_bounds(&m, &spec).unwrap();
    eprintln!("{}({:?})", summary(&reps), start.elapsed());
    assert!(reps.iter().all(|r| r.passed));
}

#[test]
fn seeded_suite_planar() {
    let g = DomainGeometry::unit_disk();
    for seed in [1, 2, 3] {
        let (a, b) = seeded_pair(g, seed).unwrap();
        let pair = BoundaryPair::planar(&g, 2.8, 0.15).unwrap();
        let x = pair.at(0.6 * pair.chord(&g));
        let opts = HarnessOptions { seed, ..Default::default() };
        let start = Instant::now();
        let reps = run_suite(&a, &b, &pair, &x, &opts, &KernelSampleSpec { samples: 1000, seed }).unwrap();
        eprintln!("seed {seed} ({:?})\n{}", start.elapsed(), summary(&reps));
        assert!(reps.iter().all(|r| r.passed), "{}", summary(&reps));
        assert!(!suite_points(&g, &opts).points.is_empty());
    }
}

#[test]
fn seeded_suite_ball() {
    let g = DomainGeometry::unit_ball();
    let (a, b) = seeded_pair(g, 4).unwrap();
    let pair = BoundaryPair::new(&g, p3(0.0, 0.0, -1.0), p3(0.0, 0.1, 1.0).normalize()).unwrap();
    let x = pair.at(0.5 * pair.chord(&g));
    let opts = HarnessOptions::default();
    let start = Instant::now();
    let reps = run_suite(&a, &b, &pair, &x, &opts, &KernelSampleSpec { samples: 1000, seed: 4 }).unwrap();
    eprintln!("ball ({:?})\n{}", start.elapsed(), summary(&reps));
    assert!(reps.iter().all(|r| r.passed), "{}", summary(&reps));
}

#[test]
fn midpoint_medium_halves_the_left_side() {
    let g = DomainGeometry::unit_disk();
    let a = OpticalMedium::constant_hg(g, 1.0, 0.3, 0.4).unwrap();
    let b = OpticalMedium::constant_hg(g, 1.02, 0.31, 0.42).unwrap();
    let mid = OpticalMedium::constant_hg(g, 1.01, 0.305, 0.41).unwrap();
    let pair = BoundaryPair::planar(&g, PI, 0.2).unwrap();
    let pts = PointSet::lattice(&g, 8);
    let opts = HarnessOptions {
        pairs: 0,
        sup_samples: 0,
        ..light()
    };
    let x = pair.at(0.7);
    let full = check_single_scattering_stability(&a, &b, &pair, &x, &opts).unwrap().lhs;
    let half = check_single_scattering_stability(&a, &mid, &pair, &x, &opts).unwrap().lhs;
    assert!((half / full - 0.5).abs() < 0.125);
    let full = check_ballistic_stability(&a, &b, &pair, &pts, &opts).unwrap().lhs;
    let half = check_ballistic_stability(&a, &mid, &pair, &pts, &opts).unwrap().lhs;
    assert!((half / full - 0.5).abs() < 0.125);
}

#[test]
fn interior_perturbation_misses_the_planar_bound_by_two() {
    // g differs only near the probe; the near-ray weighted ratio tends to half
    // the left side because w₂ grows like 2 ln(1/ε) while α₁ grows like ln(1/ε).
    let g = DomainGeometry::unit_disk();
    let hg = |amp: f64| {
        OpticalMedium::new(
            g,
            SigmaField::Isotropic(1.0.into()),
            Phase::HenyeyGreenstein {
                sigma_s: 0.3.into(),
                g: CoefficientField::function(move |x| 0.4 + amp * (-(x.x * x.x + x.y * x.y) / 0.02).exp()),
            },
        )
        .unwrap()
    };
    let pair = BoundaryPair::planar(&g, PI, 0.0).unwrap();
    let x = p2(0.0, 0.0);
    let r = check_single_scattering_stability(&hg(0.0), &hg(0.1), &pair, &x, &light()).unwrap();
    eprintln!("{}", summary(std::slice::from_ref(&r)));
    let ratio = r.rhs / r.lhs;
    assert!(!r.passed);
    assert!(ratio > 0.3 && ratio < 0.55, "{ratio}");
}
