use absphere::gauge::Gauge;
use absphere::sphere::{Frame, NavigationBundle, Pole, SphereData};
use absphere::{Error, MetricParams, Sign};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec3(rng: &mut ChaCha8Rng, r: f64) -> Vec<f64> {
    (0..3).map(|_| rng.gen_range(-r..r)).collect()
}

/// Sectional curvature of a projectively flat Riemannian metric along `y`,
/// from the norm on the straight line through `x`.
fn line_curvature(norm: impl Fn(&[f64], &[f64]) -> f64, x: &[f64], y: &[f64]) -> f64 {
    let g = |e: f64| {
        let xe: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + e * b).collect();
        norm(&xe, y)
    };
    let h = 1e-3;
    let (g0, g1, gm1, g2, gm2) = (g(0.0), g(h), g(-h), g(2.0 * h), g(-2.0 * h));
    let d1 = (-g2 + 8.0 * g1 - 8.0 * gm1 + gm2) / (12.0 * h);
    let d2 = (-g2 + 16.0 * g1 - 30.0 * g0 + 16.0 * gm1 - gm2) / (12.0 * h * h);
    (3.0 * d1 * d1 - 2.0 * g0 * d2) / (4.0 * g0.powi(4))
}

#[test]
fn chart_metric_has_constant_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for mu in [0.3, 1.0, 2.5] {
        let s = SphereData::new(mu, 0.1, vec![0.2, 0.0, -0.1]).unwrap();
        for _ in 0..20 {
            let (x, y) = (vec3(&mut rng, 1.0), vec3(&mut rng, 1.0));
            let k = line_curvature(|a, b| s.h(a, b), &x, &y);
            assert!((k - mu).abs() < 1e-6 * mu, "{k} vs {mu}");
        }
    }
}

#[test]
fn delta_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let s = SphereData::new(1.7, -0.3, vec![0.4, 0.1, -0.25]).unwrap();
    let d0 = s.delta();
    for _ in 0..100 {
        let x = vec3(&mut rng, 5.0);
        assert!((s.delta_at(&x) - d0).abs() < 1e-12 * d0);
    }
}

#[test]
fn grad_c_by_differences() {
    let s = SphereData::new(1.2, 0.4, vec![0.3, -0.5, 0.2]).unwrap();
    let x = [0.3, -0.2, 0.7];
    let g = s.grad_c(&x);
    for i in 0..3 {
        let h = 1e-5;
        let mut xp = x;
        let mut xm = x;
        xp[i] += h;
        xm[i] -= h;
        let fd = (s.c(&xp) - s.c(&xm)) / (2.0 * h);
        assert!((fd - g[i]).abs() < 1e-9);
    }
}

#[test]
fn poles_are_extremes_of_c() {
    let s = SphereData::new(1.5, 0.2, vec![0.3, -0.1, 0.05]).unwrap();
    let (p1, p2) = s.find_c_poles().unwrap();
    let delta = s.delta();
    let Pole::Finite(x) = p1 else {
        panic!("expected a pole inside the chart")
    };
    assert_eq!(p2, Pole::AtInfinity);
    assert!(s.grad_c(&x).iter().all(|v| v.abs() < 1e-10));
    let c = s.c(&x);
    assert!((c * c - delta * delta / s.mu).abs() < 1e-12);
    // the chart pole is the ambient extreme of c(P) = <a, P> on the upper hemisphere
    let a = s.field_vector();
    let p = s.ambient(&x);
    assert!((p.dot(&a).abs() - a.norm()).abs() < 1e-12);
    let eq = SphereData::with_delta_equatorial(1.0, 0.1, 2).unwrap();
    let (a, b) = eq.find_c_poles().unwrap();
    assert_eq!((a, b), (Pole::AtInfinity, Pole::AtInfinity));
    let flat = SphereData::new(1.0, 0.0, vec![0.0, 0.0]).unwrap();
    assert!(matches!(flat.find_c_poles(), Err(Error::DegenerateField)));
}

#[test]
fn presets_have_requested_delta() {
    for (mu, delta) in [(1.0, 0.1), (2.5, 0.3), (0.4, 0.02)] {
        let a = SphereData::with_delta_at_origin(mu, delta, 3).unwrap();
        let b = SphereData::with_delta_equatorial(mu, delta, 3).unwrap();
        assert!((a.delta() - delta).abs() < 1e-14);
        assert!((b.delta() - delta).abs() < 1e-14);
        assert!((a.c(&[0.0; 3]) + delta / mu.sqrt()).abs() < 1e-14);
        assert_eq!(b.c(&[0.0; 3]), 0.0);
    }
}

#[test]
fn frames_preserve_the_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let s = SphereData::new(1.3, 0.2, vec![0.1, 0.25, -0.2]).unwrap();
    let base = Frame::identity(3, s.mu);
    for _ in 0..20 {
        let p = DVector::from_vec(
            vec3(&mut rng, 1.0)
                .into_iter()
                .chain([rng.gen_range(-1.0..1.0)])
                .collect(),
        )
        .normalize();
        let frame = Frame::centered_at(&p, s.mu);
        let local = frame.localize(&s);
        assert!((local.delta() - s.delta()).abs() < 1e-13);
        // the local chart origin is the ambient point p
        let (x, y) = (vec![0.0; 3], vec![0.3, -0.2, 0.5]);
        let (pa, va) = frame.to_ambient(&x, &y);
        assert!((&pa - &p).norm() < 1e-13);
        if let Some((xb, yb)) = base.from_ambient(&pa, &va) {
            assert!((local.c(&x) - s.c(&xb)).abs() < 1e-12);
            assert!((local.h(&x, &y) - s.h(&xb, &yb)).abs() < 1e-12 * s.h(&xb, &yb));
        }
    }
}

#[test]
fn beta_has_alpha_norm_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let sphere = SphereData::new(1.1, 0.05, vec![0.05, -0.08, 0.02]).unwrap();
    let gauges = [
        Gauge::square(Sign::Plus, 2.0, 1.0).unwrap(),
        Gauge::canonical_regular(MetricParams::new(0.0, 1.0, 1.0, 0.5).unwrap()).unwrap(),
    ];
    for gauge in gauges {
        let b = NavigationBundle::new(sphere.clone(), gauge).unwrap();
        for _ in 0..50 {
            let x = vec3(&mut rng, 2.0);
            let a = b.alpha_matrix(&x).unwrap();
            let beta = DVector::from_vec(b.beta_form(&x).unwrap());
            let norm = (beta.transpose() * a.try_inverse().unwrap() * &beta)[(0, 0)];
            let b_sq = b.b_sq_at(&x).unwrap();
            assert!((norm - b_sq).abs() < 1e-12, "{norm} vs {b_sq}");
        }
    }
}

#[test]
fn reconstruction_inverts_navigation() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let sphere = SphereData::with_delta_equatorial(1.0, 0.1, 3).unwrap();
    let bundle = NavigationBundle::new(
        sphere.clone(),
        Gauge::square(Sign::Minus, 0.0, 0.5).unwrap(),
    )
    .unwrap();
    for _ in 0..50 {
        let (x, y) = (vec3(&mut rng, 2.0), vec3(&mut rng, 1.0));
        let m = bundle.reconstruct(&x, &y).unwrap();
        let (h_sq, rho) = bundle
            .gauge()
            .transform(m.alpha * m.alpha, m.beta, m.b_sq)
            .unwrap();
        assert!((h_sq - sphere.h_sq(&x, &y)).abs() < 1e-13 * h_sq);
        // rho = 2 c_0 / mu
        assert!((rho - 2.0 * sphere.c0(&x, &y) / sphere.mu).abs() < 1e-13);
        assert!((m.f - m.alpha * m.phi.phi).abs() < 1e-15 * m.f);
    }
}

#[test]
fn zero_minus_rejected_for_large_delta() {
    let mu: f64 = 1.0;
    let edge = mu / 12f64.sqrt();
    let g = || Gauge::square(Sign::Minus, 0.0, 0.5).unwrap();
    let big = SphereData::with_delta_at_origin(mu, edge * 1.0001, 2).unwrap();
    let small = SphereData::with_delta_at_origin(mu, edge * 0.9999, 2).unwrap();
    assert!(matches!(
        NavigationBundle::new(big, g()),
        Err(Error::RegularityViolated(_))
    ));
    assert!(NavigationBundle::new(small, g()).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_is_positive_and_quadratic(
        x in prop::collection::vec(-3.0f64..3.0, 3),
        y in prop::collection::vec(-1.0f64..1.0, 3),
        lambda in -4.0f64..4.0,
    ) {
        let s = SphereData::new(0.8, 0.1, vec![0.0, 0.1, 0.0]).unwrap();
        let h2 = s.h_sq(&x, &y);
        let ly: Vec<f64> = y.iter().map(|v| lambda * v).collect();
        prop_assert!(h2 >= 0.0);
        prop_assert!((s.h_sq(&x, &ly) - lambda * lambda * h2).abs() < 1e-12 * h2.max(1e-12) * lambda.abs().max(1.0).powi(2));
        let hm = s.h_matrix(&x);
        let hi = s.h_inverse(&x);
        prop_assert!((hm * hi - nalgebra::DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn c_squared_bounded_by_delta(x in prop::collection::vec(-10.0f64..10.0, 3)) {
        // mu c^2 = delta^2 - |dc|^2 <= delta^2
        let s = SphereData::new(1.3, 0.2, vec![0.1, -0.3, 0.2]).unwrap();
        let d = s.delta();
        prop_assert!(s.mu * s.c(&x).powi(2) <= d * d * (1.0 + 1e-12));
    }
}
