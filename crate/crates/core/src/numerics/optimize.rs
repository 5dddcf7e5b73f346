//! Golden-section search, stationary-point refinement and a bounded
//! Nelder–Mead simplex for two variables.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimise a unimodal `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > x_tol && iter < 500 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    let (fa, fb) = (f(a), f(b));
    if fa < fx && fa <= fb {
        (a, fa)
    } else if fb < fx {
        (b, fb)
    } else {
        (x, fx)
    }
}

/// Locate a stationary point of `f` inside `[a, b]`.
///
/// The root of the central difference quotient `(f(x+h) - f(x-h)) / 2h` is
/// found by bisection for `h = eta, eta/2, eta/4`; the roots differ from the
/// true one by a series in `h^2`, which two Richardson steps remove. `eta`
/// should reflect the scale on which `f` varies rather than the bracket width.
/// A large step also keeps flat (degenerate) stationary points simple roots
/// of the quotient. Returns `None` if the quotient does not change sign over
/// the bracket.
pub fn stationary_point<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    eta: f64,
    x_tol: f64,
) -> Option<f64> {
    let r1 = quotient_root(&mut f, a, b, eta, x_tol)?;
    let r2 = quotient_root(&mut f, a, b, 0.5 * eta, x_tol)?;
    let r3 = quotient_root(&mut f, a, b, 0.25 * eta, x_tol)?;
    let (e1, e2) = ((4.0 * r2 - r1) / 3.0, (4.0 * r3 - r2) / 3.0);
    Some((16.0 * e2 - e1) / 15.0)
}

fn quotient_root<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    eta: f64,
    x_tol: f64,
) -> Option<f64> {
    let mut deriv = |x: f64| (f(x + eta) - f(x - eta)) / (2.0 * eta);
    let (mut lo, mut hi) = (a, b);
    let mut d_lo = deriv(lo);
    let d_hi = deriv(hi);
    if d_lo == 0.0 {
        return Some(lo);
    }
    if !(d_lo * d_hi < 0.0 || d_hi == 0.0) {
        return None;
    }
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = deriv(mid);
        if dm == 0.0 {
            return Some(mid);
        }
        if dm.signum() == d_lo.signum() {
            lo = mid;
            d_lo = dm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Nelder–Mead on the box `lo <= x <= hi` (coordinates clamped).
pub fn nelder_mead_box<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    step: [f64; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    x_tol: f64,
    max_iter: usize,
) -> ([f64; 2], f64) {
    let clamp = |p: [f64; 2]| [p[0].clamp(lo[0], hi[0]), p[1].clamp(lo[1], hi[1])];
    let mut simplex = [
        clamp(start),
        clamp([start[0] + step[0], start[1]]),
        clamp([start[0], start[1] + step[1]]),
    ];
    // degenerate when the start sits on the upper box edge
    if simplex[1] == simplex[0] {
        simplex[1] = clamp([start[0] - step[0], start[1]]);
    }
    if simplex[2] == simplex[0] {
        simplex[2] = clamp([start[0], start[1] - step[1]]);
    }
    let mut values = simplex.map(&mut f);
    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let spread = simplex[1..]
            .iter()
            .map(|p| {
                (p[0] - simplex[0][0])
                    .abs()
                    .max((p[1] - simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if spread <= x_tol {
            break;
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            clamp([
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ])
        };
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
        } else {
            let (xc, fc) = if fr < values[2] {
                let xc = along(-0.5);
                (xc, f(xc))
            } else {
                let xc = along(0.5);
                (xc, f(xc))
            };
            if fc < values[2].min(fr) {
                simplex[2] = xc;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = clamp([
                        0.5 * (simplex[0][0] + simplex[i][0]),
                        0.5 * (simplex[0][1] + simplex[i][1]),
                    ]);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3)
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .unwrap();
    (simplex[best], values[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_point_is_sharp() {
        let x = stationary_point(
            |x| -(x - 0.123_456_789).powi(2) * 3.0 + x.powi(4) * 0.01,
            0.0,
            1.0,
            1e-4,
            1e-15,
        )
        .unwrap();
        // f'(x) = -6(x - c) + 0.04 x^3 = 0
        let resid = -6.0 * (x - 0.123_456_789) + 0.04 * x.powi(3);
        assert!(resid.abs() < 1e-10);
    }

    #[test]
    fn flat_stationary_point() {
        // quartic contact with a small scale, off-centre bracket
        let c = 0.031_234_567;
        let f = |x: f64| {
            0.5 * (1.0 - 3e-4 * (x - c).powi(4) + 1e-6 * (x - c).powi(6))
                + 0.1 * (x - c).powi(5) * 1e-5
        };
        let x = stationary_point(f, c - 0.0173, c + 0.0291, 0.1, 1e-15).unwrap();
        assert!((x - c).abs() < 1e-8, "{}", x - c);
    }

    #[test]
    fn nelder_mead_rosenbrock_in_box() {
        let (p, v) = nelder_mead_box(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-0.5, 0.5],
            [0.1, 0.1],
            [-2.0, -2.0],
            [2.0, 2.0],
            1e-12,
            5000,
        );
        assert!(
            (p[0] - 1.0).abs() < 1e-6 && (p[1] - 1.0).abs() < 1e-6,
            "{p:?} {v}"
        );
    }

    #[test]
    fn nelder_mead_respects_box() {
        let (p, _) = nelder_mead_box(
            |p| p[0] + p[1],
            [0.5, 0.5],
            [0.1, 0.1],
            [0.0, 0.0],
            [1.0, 1.0],
            1e-12,
            2000,
        );
        assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
    }
}
