use absphere::gauge::Gauge;
use absphere::geodesic::{
    closed_geodesic, length_l1, length_l2, length_square, series_l, GaugedDelta, GeodesicMetric,
};
use absphere::sphere::{NavigationBundle, SphereData};
use absphere::{MetricParams, Sign};

use std::f64::consts::PI;

#[test]
fn l1_equals_l2_for_square_plus() {
    let p = MetricParams::new(2.0, 0.0, -3.0, 2.0).unwrap();
    let d = GaugedDelta::canonical(0.05);
    let l1 = length_l1(&p, 1.0, d, 1e-12).unwrap();
    let l2 = length_l2(&p, 1.0, d).unwrap();
    assert!((l1 - l2).abs() < 1e-9 * l2, "{l1} {l2}");
}

#[test]
fn square_closed_geodesic_through_poles() {
    for (sign, eps) in [
        (Sign::Plus, 2.0),
        (Sign::Minus, 0.0),
        (Sign::Plus, 0.0),
        (Sign::Minus, 0.7),
    ] {
        let sphere = SphereData::with_delta_at_origin(1.0, 0.1, 2).unwrap();
        let gauge = Gauge::square(sign, eps, if sign == Sign::Plus { 1.0 } else { 0.5 }).unwrap();
        let bundle = NavigationBundle::new(sphere, gauge).unwrap();
        let path = closed_geodesic(
            &GeodesicMetric::Finsler(bundle),
            &[0.0, 0.0],
            &[1.0, 0.3],
            20.0,
            1e-11,
        )
        .unwrap();
        let expected = length_square(sign, 1.0, GaugedDelta::square(0.1)).unwrap();
        let got = path.period.unwrap();
        println!(
            "{sign:?} {eps}: {got} vs {expected}, closure {:?}",
            path.closure_error
        );
        assert!(((got - expected) / expected).abs() < 1e-5);
    }
}

#[test]
fn series_through_fourth_order() {
    for p in [
        MetricParams::new(2.0, 0.0, -3.0, 0.0).unwrap(),
        MetricParams::new(0.0, 1.0, 1.0, 0.0).unwrap(),
    ] {
        let ratios: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d| {
                let g = GaugedDelta::canonical(d);
                (length_l2(&p, 1.0, g).unwrap() - series_l(&p, 1.0, g).unwrap()) / d.powi(6)
            })
            .collect();
        println!("{ratios:?}");
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| {
                (a.min(r), b.max(r))
            });
        assert!((hi - lo) / lo.abs() < 0.2);
    }
    let _ = PI;
}
