use absphere::phi::{
    phi_gap_closed, regularity_radius_direct, regularity_range, solve_phi, taylor_phi,
};
use absphere::{Error, MetricParams, PhiSolution, Sign};
use proptest::prelude::*;

/// Classical RK4 with a fixed step on `y = (phi, phi')`.
fn rk4_phi(p: &MetricParams, s_end: f64, steps: usize) -> (f64, f64) {
    let rhs = |s: f64, y: [f64; 2]| {
        let s2 = s * s;
        [
            y[1],
            (p.k1 + p.k2 * s2) * (y[0] - s * y[1]) / p.denominator(s2),
        ]
    };
    let h = s_end / steps as f64;
    let mut y = [1.0, p.epsilon];
    for i in 0..steps {
        let s = i as f64 * h;
        let a = rhs(s, y);
        let b = rhs(s + 0.5 * h, [y[0] + 0.5 * h * a[0], y[1] + 0.5 * h * a[1]]);
        let c = rhs(s + 0.5 * h, [y[0] + 0.5 * h * b[0], y[1] + 0.5 * h * b[1]]);
        let d = rhs(s + h, [y[0] + h * c[0], y[1] + h * c[1]]);
        for k in 0..2 {
            y[k] += h / 6.0 * (a[k] + 2.0 * b[k] + 2.0 * c[k] + d[k]);
        }
    }
    (y[0], y[1])
}

const SAMPLE_PARAMS: [(f64, f64, f64, f64); 5] = [
    (1.0, 1.0, 0.0, 0.0),
    (0.0, 1.0, 1.0, 0.5),
    (-1.0, 1.0, 2.0, 0.3),
    (1.0, -0.5, 0.3, -0.2),
    (0.5, 2.0, -1.0, 1.0),
];

#[test]
fn matches_fixed_step_oracle() {
    for (k1, k2, k3, eps) in SAMPLE_PARAMS {
        let p = MetricParams::new(k1, k2, k3, eps).unwrap();
        let s_max = regularity_range(&p).unwrap().sqrt().min(2.0) * 0.9;
        let sol = solve_phi(p, s_max, 1e-9).unwrap();
        for frac in [-1.0, -0.6, -0.2, 0.3, 0.7, 1.0] {
            let s = s_max * frac;
            let (phi, dphi) = rk4_phi(&p, s, 4000);
            let v = sol.eval(s).unwrap();
            assert!((v.phi - phi).abs() < 1e-9, "{k1},{k2},{k3},{eps} at {s}");
            assert!((v.dphi - dphi).abs() < 1e-8, "{k1},{k2},{k3},{eps} at {s}");
        }
    }
}

#[test]
fn square_closed_form_solves_the_ode() {
    for (sign, eps) in [
        (Sign::Plus, 2.0),
        (Sign::Plus, 0.0),
        (Sign::Minus, 0.0),
        (Sign::Minus, -0.7),
    ] {
        let p = MetricParams::square(sign, eps);
        let sol = PhiSolution::square(sign, eps, 0.6);
        assert!(sol.is_closed_form());
        assert!(sol.max_residual() < 1e-13);
        for s in [-0.6, -0.25, 0.4, 0.6] {
            let (phi, _) = rk4_phi(&p, s, 4000);
            assert!((sol.eval(s).unwrap().phi - phi).abs() < 1e-11);
        }
    }
}

#[test]
fn taylor_coefficients_from_finite_differences() {
    for (k1, k2, k3, eps) in SAMPLE_PARAMS {
        let p = MetricParams::new(k1, k2, k3, eps).unwrap();
        let sol = solve_phi(p, 0.5, 1e-10).unwrap();
        let c = taylor_phi(&p);
        let f = |s: f64| sol.eval(s).unwrap().phi;
        let h = 0.05;
        // central differences of order four, from phi on a symmetric stencil
        let d2 = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
            / (12.0 * h * h);
        let d3 = (-f(3.0 * h) + 8.0 * f(2.0 * h) - 13.0 * f(h) + 13.0 * f(-h) - 8.0 * f(-2.0 * h)
            + f(-3.0 * h))
            / (8.0 * h.powi(3));
        let d4 = (-f(3.0 * h) + 12.0 * f(2.0 * h) - 39.0 * f(h) + 56.0 * f(0.0) - 39.0 * f(-h)
            + 12.0 * f(-2.0 * h)
            - f(-3.0 * h))
            / (6.0 * h.powi(4));
        assert!((f(0.0) - c[0]).abs() < 1e-13);
        assert!((sol.eval(0.0).unwrap().dphi - c[1]).abs() < 1e-12);
        assert!((d2 / 2.0 - c[2]).abs() < 1e-5, "c2 for {k1},{k2},{k3}");
        assert!(
            (d3 / 6.0 - c[3]).abs() < 1e-4,
            "c3 for {k1},{k2},{k3}: {}",
            d3 / 6.0
        );
        assert!(
            (d4 / 24.0 - c[4]).abs() < 1e-3,
            "c4 for {k1},{k2},{k3}: {} vs {}",
            d4 / 24.0,
            c[4]
        );
        assert_eq!(c[3], 0.0);
    }
}

#[test]
fn randers_type_rejected() {
    assert!(matches!(
        MetricParams::new(2.0, 6.0, 3.0, 0.0),
        Err(Error::RandersType { .. })
    ));
    assert!(matches!(
        MetricParams::new(f64::NAN, 1.0, 0.0, 0.0),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn regularity_matches_direct_radius() {
    for (k1, k2, k3, eps) in SAMPLE_PARAMS {
        let p = MetricParams::new(k1, k2, k3, eps).unwrap();
        let sup = regularity_range(&p).unwrap();
        if !sup.is_finite() || sup > 9.0 {
            continue;
        }
        let b = sup.sqrt();
        let sol = solve_phi(p, b * 0.999, 1e-9).unwrap();
        let profile = |s: f64| sol.eval(s.clamp(-sol.s_max(), sol.s_max())).unwrap();
        let direct = regularity_radius_direct(&profile, sol.s_max());
        assert!(
            direct >= sol.s_max() * (1.0 - 1e-9),
            "{k1},{k2},{k3}: {direct} vs {b}"
        );
    }
    // 1 + 1.5 s - s^2 vanishes at s = -1/2, inside 1 + k1 b^2 > 0
    let sup = regularity_range(&MetricParams::square(Sign::Minus, 1.5)).unwrap();
    assert!((sup - 0.25).abs() < 1e-14);
}

#[test]
fn square_regularity_sups() {
    let cases = [
        (Sign::Plus, 2.0, 1.0),
        (Sign::Plus, 0.0, 1.0),
        (Sign::Minus, 0.0, 0.5),
    ];
    for (sign, eps, want) in cases {
        let sup = regularity_range(&MetricParams::square(sign, eps)).unwrap();
        assert!((sup - want).abs() < 1e-14, "{sign:?} {eps}: {sup}");
    }
}

fn params_strategy() -> impl Strategy<Value = MetricParams> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -1.5f64..1.5)
        .prop_filter_map("regular", |(k1, k2, k3, e)| {
            MetricParams::new(k1, k2, k3, e).ok()
        })
        .prop_filter("nontrivial range", |p| {
            regularity_range(p).map(|s| s > 0.05).unwrap_or(false)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_identity(p in params_strategy(), frac in -1.0f64..1.0) {
        let b = regularity_range(&p).unwrap().min(4.0).sqrt() * 0.9;
        let sol = solve_phi(p, b, 1e-9).unwrap();
        let s = frac * b;
        let v = sol.eval(s).unwrap();
        let closed = phi_gap_closed(&p, s).unwrap();
        prop_assert!((v.gap(s) - closed).abs() < 1e-9 * closed);
    }

    #[test]
    fn third_regularity_expression(p in params_strategy(), frac in -1.0f64..1.0, bfrac in 0.1f64..1.0) {
        let b_max = regularity_range(&p).unwrap().min(4.0).sqrt() * 0.9;
        let sol = solve_phi(p, b_max, 1e-9).unwrap();
        let b = b_max * bfrac;
        let s = frac * b;
        let v = sol.eval(s).unwrap();
        let lhs = v.gap(s) + (b * b - s * s) * v.ddphi;
        let factor = 1.0 + p.k1 * b * b + (p.k3 + p.k2 * b * b) * s * s;
        let rhs = v.gap(s) * factor / p.denominator(s * s);
        prop_assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0));
        prop_assert!(lhs > 0.0);
    }

    #[test]
    fn residual_small(p in params_strategy()) {
        let b = regularity_range(&p).unwrap().min(4.0).sqrt() * 0.9;
        let sol = solve_phi(p, b, 1e-8).unwrap();
        prop_assert!(sol.max_residual() < 1e-8);
    }

    #[test]
    fn epsilon_enters_linearly(p in params_strategy(), s in -0.2f64..0.2) {
        // phi_eps = phi_0 + eps * s, since s solves the homogeneous problem
        prop_assume!(regularity_range(&p).unwrap() > 0.05);
        let b = 0.2;
        let a = solve_phi(p, b, 1e-10).unwrap().eval(s).unwrap().phi;
        let z = solve_phi(p.with_epsilon(0.0), b, 1e-10).unwrap().eval(s).unwrap().phi;
        prop_assert!((a - z - p.epsilon * s).abs() < 1e-10);
    }
}
