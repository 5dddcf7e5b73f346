"""Smoke test for the Python bindings; run after `pip install --no-build-isolation crates/python`."""

import math

import absphere


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    p = absphere.MetricParams(2.0, 0.0, -3.0, 2.0)
    assert close(p.regularity_range(), 1.0, 1e-12)
    assert p.taylor()[3] == 0.0
    phi, dphi, _ = p.solve_phi(0.5).eval(0.3)
    assert close(phi, (1.3) ** 2, 1e-9) and close(dphi, 2.6, 1e-9)

    # L1 and L2 agree for the canonical gauge
    l1 = absphere.length_l1(p, 1.0, 0.05)
    l2 = absphere.length_l2(p, 1.0, 0.05)
    assert close(l1, l2, 1e-8), (l1, l2)

    # square metric: numeric extrema, closed form and geodesic length
    gauge = absphere.Gauge.for_variant("square-plus")
    model = absphere.CurvatureModel(gauge, 1.0, 0.1)
    ext = model.extrema(grid=201, boundary_samples=501)
    lo, hi = absphere.square_extrema("square-plus", 1.0, 0.1)
    assert close(ext["min"], lo, 1e-6) and close(ext["max"], hi, 1e-6), (ext, lo, hi)

    sphere = absphere.Sphere.with_delta_at_origin(1.0, 0.1)
    bundle = absphere.Bundle(sphere, gauge)
    period, _ = bundle.closed_geodesic([0.0, 0.0], [1.0, 0.0], 20.0)
    assert close(period, absphere.length_square("+", 1.0, 0.1), 1e-8)
    k, k_fd = bundle.flag_curvature([0.2, -0.1], [0.3, 1.0])
    assert close(k, k_fd, 1e-4)

    u, v, w = absphere.Gauge.square("-", 0.0, 0.5).eval(0.2)
    assert close(u, 1.44, 1e-14) and v == 0.0 and close(w, math.sqrt(1.2), 1e-14)

    try:
        absphere.MetricParams(2.0, 6.0, 3.0)
    except absphere.ValidationError:
        pass
    else:
        raise AssertionError("Randers-type parameters accepted")
    try:
        absphere.CurvatureModel(absphere.Gauge.for_variant("zero-minus"), 1.0, 0.3)
    except ValueError:
        pass
    else:
        raise AssertionError("zero-minus accepted with mu^2 <= 12 delta^2")

    results = absphere.verify(checks=[1, 9])
    assert all(r["passed"] for r in results), results
    print("smoke test passed")


if __name__ == "__main__":
    main()
