use absphere::gauge::{gauge_rhs, Gauge, GaugeKind};
use absphere::phi::regularity_range;
use absphere::{Error, MetricParams, Sign};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fixed-step RK4 on the gauge system from `B = 0` to `b_end`.
fn rk4_gauge(p: &MetricParams, y0: [f64; 3], b_end: f64, steps: usize) -> [f64; 3] {
    let h = b_end / steps as f64;
    let f = |b: f64, y: [f64; 3]| gauge_rhs(p, b, y[0], y[1], y[2]);
    let add =
        |y: [f64; 3], k: [f64; 3], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2]];
    let mut y = y0;
    for i in 0..steps {
        let b = i as f64 * h;
        let k1 = f(b, y);
        let k2 = f(b + 0.5 * h, add(y, k1, 0.5 * h));
        let k3 = f(b + 0.5 * h, add(y, k2, 0.5 * h));
        let k4 = f(b + h, add(y, k3, h));
        for j in 0..3 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

const PARAMS: [(f64, f64, f64, f64); 4] = [
    (2.0, 0.0, -3.0, 1.0),
    (0.0, 1.0, 1.0, 0.5),
    (-1.0, 1.0, 2.0, 0.0),
    (1.0, -0.5, 0.3, 0.2),
];

#[test]
fn canonical_closed_form_matches_oracle() {
    for (k1, k2, k3, eps) in PARAMS {
        let p = MetricParams::new(k1, k2, k3, eps).unwrap();
        let t_max = 0.9 * regularity_range(&p).unwrap().min(3.0);
        let g = Gauge::canonical(p, t_max).unwrap();
        for frac in [0.1, 0.5, 1.0] {
            let b = t_max * frac;
            let y = rk4_gauge(&p, [1.0, k1 + k3, 1.0], b, 4000);
            let v = g.eval(b).unwrap();
            for (a, c) in [(v.u, y[0]), (v.v, y[1]), (v.w, y[2])] {
                assert!(
                    (a - c).abs() < 1e-9 * a.abs().max(1.0),
                    "{k1},{k2},{k3} at {b}: {a} vs {c}"
                );
            }
        }
    }
}

#[test]
fn square_closed_form_matches_oracle() {
    for (sign, eps) in [
        (Sign::Plus, 2.0),
        (Sign::Plus, 0.0),
        (Sign::Minus, 0.0),
        (Sign::Minus, 0.7),
    ] {
        let t_max = if sign == Sign::Plus { 0.9 } else { 0.45 };
        let g = Gauge::square(sign, eps, t_max).unwrap();
        let sg = sign.value();
        for b in [0.0, 0.2, t_max] {
            let v = g.eval(b).unwrap();
            assert!((v.u - (1.0 - sg * b).powi(2)).abs() < 1e-14);
            assert_eq!(v.v, 0.0);
            assert!((v.w - (1.0 - sg * b).sqrt()).abs() < 1e-14);
            if b > 0.0 {
                let y = rk4_gauge(&MetricParams::square(sign, eps), [1.0, 0.0, 1.0], b, 4000);
                assert!(
                    (v.u - y[0]).abs() < 1e-10
                        && (v.v - y[1]).abs() < 1e-10
                        && (v.w - y[2]).abs() < 1e-10
                );
            }
        }
    }
}

#[test]
fn ivp_matches_closed_forms() {
    for (k1, k2, k3, eps) in PARAMS {
        let p = MetricParams::new(k1, k2, k3, eps).unwrap();
        let t_max = 0.9 * regularity_range(&p).unwrap().min(3.0);
        let closed = Gauge::canonical(p, t_max).unwrap();
        let ivp = Gauge::solve_ivp(p, 1.0, k1 + k3, 1.0, t_max, 1e-10).unwrap();
        assert!(matches!(ivp.kind(), GaugeKind::NumericIvp { .. }));
        for i in 0..=100 {
            let b = t_max * i as f64 / 100.0;
            let (a, c) = (closed.eval(b).unwrap(), ivp.eval(b).unwrap());
            assert!(
                (a.u - c.u).abs() < 1e-9 && (a.v - c.v).abs() < 1e-9 && (a.w - c.w).abs() < 1e-9
            );
            assert!(
                (a.du - c.du).abs() < 1e-7
                    && (a.dv - c.dv).abs() < 1e-7
                    && (a.dw - c.dw).abs() < 1e-7
            );
        }
    }
}

#[test]
fn residuals_vanish() {
    for (k1, k2, k3, eps) in PARAMS {
        let p = MetricParams::new(k1, k2, k3, eps).unwrap();
        let t_max = 0.9 * regularity_range(&p).unwrap().min(3.0);
        let g = Gauge::canonical(p, t_max).unwrap();
        for i in 0..=20 {
            let r = g.residuals(t_max * i as f64 / 20.0).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-10), "{r:?}");
        }
    }
}

#[test]
fn norm_relation_derivative_by_differences() {
    let gauges = [
        Gauge::canonical(MetricParams::new(0.0, 1.0, 1.0, 0.5).unwrap(), 2.0).unwrap(),
        Gauge::square(Sign::Plus, 2.0, 0.9).unwrap(),
        Gauge::square(Sign::Minus, 0.0, 0.45).unwrap(),
        Gauge::solve_ivp(
            MetricParams::new(1.0, -0.5, 0.3, 0.2).unwrap(),
            2.0,
            0.3,
            1.5,
            1.0,
            1e-10,
        )
        .unwrap(),
    ];
    for g in gauges {
        let h = 1e-4;
        for frac in [0.2, 0.5, 0.8] {
            let b = g.t_max() * frac;
            let n = |x: f64| g.norm_relation(x).unwrap();
            let fd =
                (-n(b + 2.0 * h) + 8.0 * n(b + h) - 8.0 * n(b - h) + n(b - 2.0 * h)) / (12.0 * h);
            let d = g.norm_relation_derivative(b).unwrap();
            assert!(
                (fd - d).abs() < 1e-8 * d.abs().max(1.0),
                "{:?} at {b}: {fd} vs {d}",
                g.kind()
            );
            assert!(d > 0.0);
        }
    }
}

#[test]
fn norm_relation_closed_forms() {
    let sp = Gauge::square(Sign::Plus, 0.0, 1.0).unwrap();
    let sm = Gauge::square(Sign::Minus, 0.0, 0.5).unwrap();
    let can = Gauge::canonical(MetricParams::new(0.0, 1.0, 1.0, 0.0).unwrap(), 4.0).unwrap();
    for b in [0.0, 0.1, 0.3, 0.45] {
        assert!((sp.norm_relation(b).unwrap() - b / (1.0 - b)).abs() < 1e-14);
        assert!((sm.norm_relation(b).unwrap() - b / (1.0 + b)).abs() < 1e-14);
        assert!((can.norm_relation(b).unwrap() - b).abs() < 1e-12);
    }
    for tau in [0.0, 0.05, 0.2, 0.3] {
        assert!((sp.invert_norm_relation(tau).unwrap() - tau / (1.0 + tau)).abs() < 1e-13);
        assert!((sm.invert_norm_relation(tau).unwrap() - tau / (1.0 - tau)).abs() < 1e-13);
    }
    assert!((sm.norm_sup() - 1.0 / 3.0).abs() < 1e-14);
    assert!(matches!(
        sm.invert_norm_relation(0.34),
        Err(Error::TargetOutOfRange { .. })
    ));
}

#[test]
fn out_of_range_rejected() {
    let p = MetricParams::new(2.0, 0.0, -3.0, 0.0).unwrap();
    assert!(matches!(
        Gauge::canonical(p, 1.5),
        Err(Error::OutOfRegularRange { .. })
    ));
    assert!(Gauge::square(Sign::Minus, 0.0, 0.6).is_err());
    let g = Gauge::square(Sign::Plus, 0.0, 0.5).unwrap();
    assert!(g.eval(0.6).is_err());
    assert!(Gauge::solve_ivp(p, -1.0, 0.0, 1.0, 0.5, 1e-10).is_err());
}

#[test]
fn transform_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gauges = [
        Gauge::canonical(MetricParams::new(2.0, 0.0, -3.0, 1.0).unwrap(), 0.95).unwrap(),
        Gauge::square(Sign::Minus, 0.3, 0.45).unwrap(),
    ];
    for g in &gauges {
        for _ in 0..1000 {
            let b_sq = rng.gen_range(0.0..g.t_max());
            let alpha_sq = rng.gen_range(0.01..10.0);
            let beta = rng.gen_range(-1.0..1.0) * (b_sq * alpha_sq).sqrt();
            let (h_sq, rho) = g.transform(alpha_sq, beta, b_sq).unwrap();
            let (a2, bb) = g.inverse_transform(h_sq, rho, b_sq).unwrap();
            assert!((a2 - alpha_sq).abs() < 1e-12 * alpha_sq);
            assert!((bb - beta).abs() < 1e-12 * alpha_sq.sqrt());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_relation_inverts(frac in 0.0f64..0.95) {
        let g = Gauge::canonical(MetricParams::new(2.0, 0.0, -3.0, 1.0).unwrap(), 0.99).unwrap();
        let b = frac * g.t_max();
        let n = g.norm_relation(b).unwrap();
        prop_assert!((g.invert_norm_relation(n).unwrap() - b).abs() < 1e-10);
    }

    #[test]
    fn norm_of_beta_is_b(b_sq in 0.0f64..0.9, a2 in 0.1f64..5.0) {
        // beta with |beta|_alpha^2 = B maps to rho with |rho|_h^2 = N(B)
        let g = Gauge::square(Sign::Plus, 2.0, 0.95).unwrap();
        let beta = (b_sq * a2).sqrt();
        let (h_sq, rho) = g.transform(a2, beta, b_sq).unwrap();
        let n = g.norm_relation(b_sq).unwrap();
        prop_assert!((rho * rho / h_sq - n).abs() < 1e-12 * n.max(1.0));
    }
}
