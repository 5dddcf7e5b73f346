//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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
    0.022_935_322_010_529_225,
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

/// Default cap on the number of interval bisections.
pub const MAX_SUBDIVISIONS: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-14,
            max_subdivisions: MAX_SUBDIVISIONS,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    /// Integrate `f` over `[a, b]`; `a > b` returns the negated integral.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> Result<Integral> {
        if a == b {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
            });
        }
        if b < a {
            let r = self.integrate(f, b, a)?;
            return Ok(Integral {
                value: -r.value,
                ..r
            });
        }
        let (v0, e0) = gk15(&mut f, a, b);
        let mut evaluations = 15;
        let mut heap = BinaryHeap::new();
        heap.push(Panel {
            a,
            b,
            value: v0,
            error: e0,
        });
        let mut total = v0;
        let mut err = e0;
        let mut splits = 0usize;
        loop {
            if !total.is_finite() {
                return Err(Error::NonConvergence("non-finite integrand".into()));
            }
            if err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                break;
            }
            if splits >= self.max_subdivisions {
                return Err(Error::NonConvergence(format!(
                    "quadrature on [{a}, {b}] exceeded {} subdivisions (error {err:e})",
                    self.max_subdivisions
                )));
            }
            let worst = heap.pop().expect("heap never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // interval exhausted at machine precision; accept what we have
                heap.push(worst);
                break;
            }
            let (vl, el) = gk15(&mut f, worst.a, mid);
            let (vr, er) = gk15(&mut f, mid, worst.b);
            evaluations += 30;
            splits += 1;
            total += vl + vr - worst.value;
            err += el + er - worst.error;
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: vl,
                error: el,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: vr,
                error: er,
            });
            if splits % 64 == 0 {
                // resum to shed accumulated cancellation in the running totals
                total = heap.iter().map(|p| p.value).sum();
                err = heap.iter().map(|p| p.error).sum();
            }
        }
        let value = heap.iter().map(|p| p.value).sum();
        let error = heap.iter().map(|p| p.error).sum();
        Ok(Integral {
            value,
            error,
            evaluations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = Quadrature::default();
        let r = q.integrate(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0).unwrap();
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_negate() {
        let q = Quadrature::default();
        let a = q.integrate(f64::exp, 0.0, 1.0).unwrap().value;
        let b = q.integrate(f64::exp, 1.0, 0.0).unwrap().value;
        assert!((a + b).abs() < 1e-15);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_subdivides() {
        let q = Quadrature::default();
        let r = q.integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() < 1e-9 * exact);
        assert!(r.evaluations > 15);
    }
}
