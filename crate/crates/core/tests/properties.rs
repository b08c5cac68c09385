use std::f64::consts::PI;

use proptest::prelude::*;

use radtrans::geometry::{p2, p3, planar_direction};
use radtrans::hgmodel::{h_of_g, invert_h};
use radtrans::io::pgrid::{decode, encode};
use radtrans::kernels::{alpha1, alpha1_bound_factor, weight_w};
use radtrans::medium::{hg_phase, GridField};
use radtrans::quadrature::{adaptive, Adaptive};
use radtrans::reconstruct::cumulative_integral;
use radtrans::transport::Beam;
use radtrans::{BoundaryPair, CoefficientField, Dimension, DomainGeometry, OpticalMedium, Phase, SigmaField};

fn unit3(a: f64, z: f64) -> radtrans::Vector {
    let s = (1.0 - z * z).sqrt();
    p3(s * a.cos(), s * a.sin(), z)
}

fn tight() -> Adaptive {
    Adaptive {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_depth: 40,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chords_split_consistently_in_the_disk(r in 0.0..0.999f64, phi in 0.0..2.0 * PI, a in 0.0..2.0 * PI) {
        let g = DomainGeometry::unit_disk();
        let x = p2(r * phi.cos(), r * phi.sin());
        let v = planar_direction(a);
        let fwd = g.exit_time(&x, &v, true).unwrap();
        let back = g.exit_time(&x, &v, false).unwrap();
        prop_assert!((fwd + back - g.chord_length(&x, &v).unwrap()).abs() < 1e-10);
        prop_assert!((back - g.exit_time(&x, &(-v), true).unwrap()).abs() < 1e-12);
        prop_assert!(((x + v * fwd).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn chords_split_consistently_in_the_ball(r in 0.0..0.999f64, a in 0.0..2.0 * PI, z in -1.0..1.0f64,
                                             b in 0.0..2.0 * PI, w in -1.0..1.0f64) {
        let g = DomainGeometry::unit_ball();
        let x = unit3(a, z) * r;
        let v = unit3(b, w);
        let fwd = g.exit_time(&x, &v, true).unwrap();
        let back = g.exit_time(&x, &v, false).unwrap();
        prop_assert!((fwd + back - g.chord_length(&x, &v).unwrap()).abs() < 1e-10);
        prop_assert!(((x + v * fwd).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hg_kernel_integrates_to_sigma_s(g in 0.0..0.95f64, s in 0.01..3.0f64) {
        let plane = 2.0 * adaptive(0.0, PI, tight(), |t| hg_phase(t.cos(), g, s, Dimension::Two).unwrap()).value;
        prop_assert!((plane - s).abs() < 1e-8 * s, "{plane}");
        let space = 2.0 * PI * adaptive(-1.0, 1.0, tight(), |m| hg_phase(m, g, s, Dimension::Three).unwrap()).value;
        prop_assert!((space - s).abs() < 1e-8 * s, "{space}");
    }

    #[test]
    fn raising_sigma_scales_attenuation(c in 0.01..2.0f64, ax in -0.9..0.9f64, ay in -0.6..0.6f64,
                                        bx in -0.9..0.9f64, by in -0.6..0.6f64) {
        let geom = DomainGeometry::unit_disk();
        let base = |shift: f64| {
            let sigma = CoefficientField::function(move |x| 1.0 + 0.3 * x.x * x.y + 0.2 * x.x.powi(2) + shift);
            OpticalMedium::new(geom, SigmaField::Isotropic(sigma), Phase::None).unwrap()
        };
        let (x0, x1) = (p2(ax, ay), p2(bx, by));
        prop_assume!(geom.is_interior(&x0) && geom.is_interior(&x1));
        let e = base(0.0).attenuation(&x0, &x1);
        let shifted = base(c).attenuation(&x0, &x1);
        prop_assert!((shifted - e * (-c * (x1 - x0).norm()).exp()).abs() < 1e-9);
    }

    #[test]
    fn h_is_increasing_and_invertible(g1 in 0.0..0.99f64, dg in 1e-4..0.005f64) {
        for dim in [Dimension::Two, Dimension::Three] {
            let g2 = g1 + dg;
            let (h1, h2) = (h_of_g(g1, dim).unwrap(), h_of_g(g2, dim).unwrap());
            prop_assert!(h2 > h1);
            prop_assert!((invert_h(h1, dim).unwrap() - g1).abs() < 1e-8);
        }
    }

    #[test]
    fn pgrid_round_trips_bitwise(nx in 2usize..9, ny in 2usize..9, lo in -5.0..0.0f64, w in 0.1..10.0f64,
                                 seed in prop::collection::vec(-1e6..1e6f64, 64)) {
        let data: Vec<f64> = (0..nx * ny).map(|i| seed[i % seed.len()] * (i as f64 + 1.0)).collect();
        let g = GridField::new(vec![nx, ny], vec![lo, lo + w, lo, lo + 2.0 * w], data).unwrap();
        let bytes = encode(&g);
        prop_assert_eq!(bytes.len() - bytes.iter().position(|&b| b == b'\n').unwrap() - 1, 8 * nx * ny);
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(&back, &g);
    }

    #[test]
    fn cumulative_integral_is_exact_for_cubics(c in prop::array::uniform4(-3.0..3.0f64),
                                               steps in prop::collection::vec(0.01..0.2f64, 4..40)) {
        let mut ts = Vec::new();
        let mut t = steps[0];
        for s in &steps {
            ts.push(t);
            t += s;
        }
        let f = |t: f64| c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t;
        let prim = |t: f64| c[0] * t + c[1] * t * t / 2.0 + c[2] * t.powi(3) / 3.0 + c[3] * t.powi(4) / 4.0;
        let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        let got = cumulative_integral(&ts, &vals);
        for (t, v) in ts.iter().zip(&got) {
            prop_assert!((v - prim(*t)).abs() < 1e-9 * (1.0 + prim(*t).abs()), "{t}: {v} vs {}", prim(*t));
        }
    }

    #[test]
    fn planar_weight_is_at_least_one(phi in 0.0..2.0 * PI, theta in -1.4..1.4f64,
                                     along in 0.01..0.99f64, off in -0.5..0.5f64) {
        let g = DomainGeometry::unit_disk();
        let pair = BoundaryPair::planar(&g, phi, theta).unwrap();
        let x = pair.at(along * pair.chord(&g)) + radtrans::geometry::planar_perpendicular(&pair.direction) * off;
        prop_assume!(g.is_interior(&x) && off.abs() > 1e-9);
        prop_assert!(weight_w(&g, &x, &pair).unwrap() >= 1.0);
    }

    #[test]
    fn beam_weights_form_a_probability(phi in 0.0..2.0 * PI, theta in -1.0..1.0f64,
                                       ws in 0.0..0.1f64, wa in 0.0..0.1f64) {
        let g = DomainGeometry::unit_disk();
        let beam = Beam::new(BoundaryPair::planar(&g, phi, theta).unwrap()).with_widths(ws, wa);
        let rays = beam.rays(&g);
        prop_assert!(!rays.is_empty());
        prop_assert!(rays.iter().all(|(_, w)| *w >= 0.0));
        prop_assert!((rays.iter().map(|(_, w)| w).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alpha1_is_nonnegative_and_bounded(phi in 0.0..2.0 * PI, theta in -1.2..1.2f64, along in 0.05..0.95f64,
                                         off in 1e-4..0.4f64, g in 0.0..0.8f64) {
        let geom = DomainGeometry::unit_disk();
        let m = OpticalMedium::constant_hg(geom, 1.0, 0.4, g).unwrap();
        let pair = BoundaryPair::planar(&geom, phi, theta).unwrap();
        let x = pair.at(along * pair.chord(&geom)) + radtrans::geometry::planar_perpendicular(&pair.direction) * off;
        prop_assume!(geom.is_interior(&x));
        let a = alpha1(&m, &x, &pair).unwrap();
        let bound = m.sigma_a_max() * m.k_max() * alpha1_bound_factor(&geom, &x, &pair).unwrap();
        prop_assert!(a >= 0.0 && a <= bound, "{a} {bound}");
    }
}
