use std::f64::consts::PI;

use absphere::curvature::{
    closed_form_extrema, extrema_with, CurvatureModel, DomainKind, ExtremaOptions, SquareVariant,
};
use absphere::gauge::Gauge;
use absphere::geodesic::{
    closed_geodesic, integrate_geodesic, length_l1, length_l2, length_square, series_l,
    GaugedDelta, GeodesicMetric, GEODESIC_TOL,
};
use absphere::phi::{regularity_range, solve_phi, taylor_phi};
use absphere::sphere::{NavigationBundle, SphereData};
use absphere::verify::{run_check, VerifyOptions, CHECKS};
use absphere::{MetricParams, Sign};

use crate::args::{
    CurvatureAction, Domain, GaugeAction, GaugeTag, GeodesicAction, JobArgs, LengthAction,
    PhiAction,
};
use crate::output::{log, Cell, Failure, Report, EXIT_NUMERICAL};

/// Largest `b^2` used for default ranges when the regular range is unbounded.
const DEFAULT_RANGE_CAP: f64 = 4.0;

fn params(job: &JobArgs) -> Result<MetricParams, Failure> {
    let any_k = job.k1.is_some() || job.k2.is_some() || job.k3.is_some() || job.epsilon.is_some();
    match (job.variant, any_k) {
        (Some(_), true) => Err(Failure::invalid(
            "give either --variant or k1, k2, k3, epsilon",
        )),
        (Some(v), false) => Ok(v.params()),
        (None, _) => {
            let (Some(k1), Some(k2), Some(k3)) = (job.k1, job.k2, job.k3) else {
                return Err(Failure::invalid(
                    "k1, k2 and k3 are required without --variant",
                ));
            };
            Ok(MetricParams::new(k1, k2, k3, job.epsilon.unwrap_or(0.0))?)
        }
    }
}

fn mu(job: &JobArgs) -> Result<f64, Failure> {
    job.mu.ok_or_else(|| Failure::invalid("--mu is required"))
}

/// `delta` with its gauge; the tag defaults to the square gauge only for
/// square variants.
fn gauged_delta(job: &JobArgs) -> Result<(f64, GaugeTag), Failure> {
    let delta = job
        .delta
        .ok_or_else(|| Failure::invalid("--delta is required"))?;
    let tag = match (job.gauge, job.variant) {
        (Some(g), _) => g,
        (None, Some(_)) => GaugeTag::Square,
        (None, None) => {
            return Err(Failure::invalid(
                "--gauge is required whenever --delta is given",
            ))
        }
    };
    Ok((delta, tag))
}

fn square_sign(p: &MetricParams) -> Result<Sign, Failure> {
    p.square_sign().ok_or_else(|| {
        Failure::invalid("the square gauge needs a square-family metric (k1, k2, k3) = (±2, 0, ∓3)")
    })
}

fn gauge_for(p: MetricParams, tag: GaugeTag) -> Result<Gauge, Failure> {
    Ok(match tag {
        GaugeTag::Canonical => Gauge::canonical_regular(p)?,
        GaugeTag::Square => {
            let sign = square_sign(&p)?;
            let sup = regularity_range(&p)?;
            Gauge::square(sign, p.epsilon, sup)?
        }
    })
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::invalid(format!(
            "--{name} must be positive, got {v}"
        )))
    }
}

fn count(name: &str, v: usize, min: usize) -> Result<usize, Failure> {
    if v >= min {
        Ok(v)
    } else {
        Err(Failure::invalid(format!(
            "--{name} must be at least {min}, got {v}"
        )))
    }
}

fn tag_name(tag: GaugeTag) -> &'static str {
    match tag {
        GaugeTag::Canonical => "canonical",
        GaugeTag::Square => "square",
    }
}

pub fn phi(action: PhiAction, job: &JobArgs) -> Result<Report, Failure> {
    let p = params(job)?;
    match action {
        PhiAction::Solve => {
            let sup = regularity_range(&p)?;
            let s_max = match job.s_max {
                Some(s) => positive("s-max", s)?,
                None => 0.9 * sup.min(DEFAULT_RANGE_CAP).sqrt(),
            };
            let n = count("samples", job.samples.unwrap_or(201), 2)?;
            let sol = solve_phi(p, s_max, positive("tol", job.tol.unwrap_or(1e-10))?)?;
            let mut r = Report::new("phi solve", vec!["s", "phi", "dphi", "ddphi"]);
            r.field("params", p);
            r.field("s_max", s_max);
            r.field("max_residual", sol.max_residual());
            for i in 0..n {
                let s = -s_max + 2.0 * s_max * i as f64 / (n - 1) as f64;
                let v = sol.eval(s)?;
                r.row(vec![s.into(), v.phi.into(), v.dphi.into(), v.ddphi.into()]);
            }
            Ok(r)
        }
        PhiAction::Taylor => {
            let mut r = Report::new("phi taylor", vec!["order", "coefficient"]);
            r.field("params", p);
            for (i, c) in taylor_phi(&p).iter().enumerate() {
                r.row(vec![Cell::Int(i as i64), (*c).into()]);
            }
            Ok(r)
        }
        PhiAction::Regularity => {
            let sup = regularity_range(&p)?;
            let mut r = Report::new("phi regularity", vec!["b_sq_sup", "b_hat"]);
            r.field("params", p);
            r.field("bounded", sup.is_finite());
            r.row(vec![sup.into(), sup.sqrt().into()]);
            Ok(r)
        }
    }
}

pub fn gauge(action: GaugeAction, job: &JobArgs) -> Result<Report, Failure> {
    let p = params(job)?;
    let sup = regularity_range(&p)?;
    let t_max = match job.t_max {
        Some(t) => positive("t-max", t)?,
        None => sup.min(DEFAULT_RANGE_CAP),
    };
    let g = match action {
        GaugeAction::Canonical => Gauge::canonical(p, t_max)?,
        GaugeAction::Square => Gauge::square(square_sign(&p)?, p.epsilon, t_max)?,
        GaugeAction::Ivp => Gauge::solve_ivp(
            p,
            job.u0.unwrap_or(1.0),
            job.v0.unwrap_or(p.k1 + p.k3),
            job.w0.unwrap_or(1.0),
            t_max,
            positive("tol", job.tol.unwrap_or(1e-10))?,
        )?,
    };
    let n = count("samples", job.samples.unwrap_or(201), 2)?;
    let name = match action {
        GaugeAction::Canonical => "gauge canonical",
        GaugeAction::Square => "gauge square",
        GaugeAction::Ivp => "gauge ivp",
    };
    let mut r = Report::new(name, vec!["b_sq", "u", "v", "w", "norm_relation"]);
    r.field("params", p);
    r.field("kind", g.kind());
    r.field("t_max", g.t_max());
    r.field("norm_sup", g.norm_sup());
    // the right end is excluded when it is the regularity supremum
    let end = if g.t_max() >= sup {
        (n - 1) as f64 / n as f64
    } else {
        1.0
    };
    for i in 0..n {
        let b = g.t_max() * end * i as f64 / (n - 1) as f64;
        let v = g.eval(b)?;
        r.row(vec![
            b.into(),
            v.u.into(),
            v.v.into(),
            v.w.into(),
            g.norm_relation(b)?.into(),
        ]);
    }
    Ok(r)
}

/// Length of the closed geodesic through the poles, traced numerically.
fn geodesic_length(
    p: MetricParams,
    tag: GaugeTag,
    mu: f64,
    delta: f64,
    tol: f64,
) -> Result<f64, Failure> {
    let sphere = SphereData::with_delta_at_origin(mu, delta, 2)?;
    let bundle = NavigationBundle::new(sphere, gauge_for(p, tag)?)?;
    let cap = 4.0 * PI / mu.sqrt() * (1.0 + 4.0 * delta / mu).max(1.0);
    let path = closed_geodesic(
        &GeodesicMetric::Finsler(bundle),
        &[0.0, 0.0],
        &[1.0, 0.0],
        cap,
        tol,
    )?;
    Ok(path.period.expect("closed_geodesic returns a period"))
}

pub fn length(_: LengthAction, job: &JobArgs) -> Result<Report, Failure> {
    let p = params(job)?;
    let mu = mu(job)?;
    let (delta, tag) = gauged_delta(job)?;
    let tol = positive("tol", job.tol.unwrap_or(1e-12))?;
    let mut r = Report::new(
        "length compare",
        vec!["l1", "l2", "series", "closed_form", "geodesic"],
    );
    let (l1, l2, series, closed) = match tag {
        GaugeTag::Canonical => {
            let d = GaugedDelta::canonical(delta);
            (
                Some(length_l1(&p, mu, d, tol)?),
                Some(length_l2(&p, mu, d)?),
                Some(series_l(&p, mu, d)?),
                None,
            )
        }
        GaugeTag::Square => {
            let sign = square_sign(&p)?;
            (
                None,
                None,
                None,
                Some(length_square(sign, mu, GaugedDelta::square(delta))?),
            )
        }
    };
    let geo = geodesic_length(p, tag, mu, delta, GEODESIC_TOL.min(tol.max(1e-13)))?;
    r.field("params", p);
    r.field("mu", mu);
    r.field("delta", delta);
    r.field("gauge", tag_name(tag));
    r.field("l1", l1);
    r.field("l2", l2);
    r.field("series", series);
    r.field("closed_form", closed);
    r.field("geodesic", geo);
    if let (Some(a), Some(b)) = (l1, l2) {
        r.field("l1_l2_relative", (a - b).abs() / b);
    }
    let reference = l2.or(closed).expect("one closed form per gauge");
    r.field("geodesic_relative", (geo - reference).abs() / reference);
    r.row(vec![
        l1.into(),
        l2.into(),
        series.into(),
        closed.into(),
        geo.into(),
    ]);
    Ok(r)
}

fn model(job: &JobArgs) -> Result<(CurvatureModel, GaugeTag), Failure> {
    let p = params(job)?;
    let mu = mu(job)?;
    let (delta, tag) = gauged_delta(job)?;
    let gauge = match (tag, job.variant) {
        (GaugeTag::Square, Some(v)) => v.gauge(),
        _ => gauge_for(p, tag)?,
    };
    Ok((CurvatureModel::new(gauge, mu, delta)?, tag))
}

fn domain_kind(job: &JobArgs, default: Domain) -> DomainKind {
    match job.domain.unwrap_or(default) {
        Domain::D => DomainKind::D,
        Domain::DTilde => DomainKind::DTilde,
    }
}

fn variant_name(v: SquareVariant) -> &'static str {
    match v {
        SquareVariant::SquarePlus => "square-plus",
        SquareVariant::ZeroPlus => "zero-plus",
        SquareVariant::ZeroMinus => "zero-minus",
    }
}

pub fn curvature(action: CurvatureAction, job: &JobArgs) -> Result<Report, Failure> {
    match action {
        CurvatureAction::Grid => {
            let (m, tag) = model(job)?;
            let kind = domain_kind(job, Domain::D);
            let n = count("grid", job.grid.unwrap_or(101), 2)?;
            let t_max = m.t_max(kind);
            let mut r = Report::new("curvature grid", vec!["s", "t", "R"]);
            r.field("params", m.params());
            r.field("gauge", tag_name(tag));
            r.field("domain", kind);
            r.field("t_max", t_max);
            for i in 0..n {
                let t = t_max * i as f64 / (n - 1) as f64;
                let bound = match kind {
                    DomainKind::D => m.b_of_t(t)?.sqrt(),
                    DomainKind::DTilde => t,
                };
                for j in 0..n {
                    // adding zero turns -0 into 0
                    let s = bound * (-1.0 + 2.0 * j as f64 / (n - 1) as f64) + 0.0;
                    let v = match kind {
                        DomainKind::D => m.r_eval(s, t)?,
                        DomainKind::DTilde => m.r_tilde_eval(s, t)?,
                    };
                    r.row(vec![s.into(), t.into(), v.into()]);
                }
            }
            Ok(r)
        }
        CurvatureAction::Extrema => {
            let (m, tag) = model(job)?;
            let kind = domain_kind(job, Domain::DTilde);
            let defaults = ExtremaOptions::default();
            let opts = ExtremaOptions {
                grid: count("grid", job.grid.unwrap_or(defaults.grid), 3)?,
                boundary_samples: count(
                    "boundary-samples",
                    job.boundary_samples.unwrap_or(defaults.boundary_samples),
                    3,
                )?,
            };
            let rep = extrema_with(&m, kind, opts)?;
            let closed = match (job.variant, tag) {
                (Some(v), GaugeTag::Square) => Some(closed_form_extrema(v, m.mu(), m.delta())?),
                _ => None,
            };
            let mut r = Report::new(
                "curvature extrema",
                vec![
                    "min",
                    "max",
                    "argmin_s",
                    "argmin_t",
                    "argmax_s",
                    "argmax_t",
                    "closed_min",
                    "closed_max",
                ],
            );
            r.field("params", m.params());
            r.field("mu", m.mu());
            r.field("delta", m.delta());
            r.field("gauge", tag_name(tag));
            r.field("domain", kind);
            r.field("variant", job.variant.map(variant_name));
            r.field("report", &rep);
            if let Some((lo, hi)) = closed {
                r.field("closed_form", serde_json::json!({ "min": lo, "max": hi }));
                r.field(
                    "relative_error",
                    ((rep.min - lo) / lo).abs().max(((rep.max - hi) / hi).abs()),
                );
            }
            r.row(vec![
                rep.min.into(),
                rep.max.into(),
                rep.argmin.0.into(),
                rep.argmin.1.into(),
                rep.argmax.0.into(),
                rep.argmax.1.into(),
                closed.map(|c| c.0).into(),
                closed.map(|c| c.1).into(),
            ]);
            Ok(r)
        }
        CurvatureAction::ClosedForm => {
            let mu = mu(job)?;
            let delta = job
                .delta
                .ok_or_else(|| Failure::invalid("--delta is required"))?;
            if job.gauge == Some(GaugeTag::Canonical) {
                return Err(Failure::invalid(
                    "closed-form extrema are stated for the square gauge",
                ));
            }
            let variants = match job.variant {
                Some(v) => vec![v],
                None => vec![
                    SquareVariant::SquarePlus,
                    SquareVariant::ZeroPlus,
                    SquareVariant::ZeroMinus,
                ],
            };
            let mut r = Report::new(
                "curvature closed-form",
                vec!["variant", "mu", "delta", "min", "max", "boundary_t1"],
            );
            r.field("gauge", "square");
            for v in variants {
                match closed_form_extrema(v, mu, delta) {
                    Ok((lo, hi)) => {
                        let t1 = v.boundary_critical_t(mu, delta)?;
                        r.row(vec![
                            variant_name(v).into(),
                            mu.into(),
                            delta.into(),
                            lo.into(),
                            hi.into(),
                            t1.into(),
                        ]);
                    }
                    Err(absphere::Error::RegularityViolated(msg)) => {
                        log(
                            "WARN",
                            &[("variant", variant_name(v).into()), ("skipped", msg)],
                        );
                        r.row(vec![
                            variant_name(v).into(),
                            mu.into(),
                            delta.into(),
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                        ]);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(r)
        }
    }
}

pub fn geodesic(_: GeodesicAction, job: &JobArgs) -> Result<Report, Failure> {
    let p = params(job)?;
    let mu = mu(job)?;
    let (delta, tag) = gauged_delta(job)?;
    let x0 = job.x0.clone().unwrap_or_else(|| vec![0.0, 0.0]);
    let n = x0.len();
    let y0 = job.y0.clone().unwrap_or_else(|| {
        let mut y = vec![0.0; n];
        if n > 0 {
            y[0] = 1.0;
        }
        y
    });
    if n < 2 || y0.len() != n {
        return Err(Failure::invalid(
            "--x0 and --y0 need the same length, at least 2",
        ));
    }
    let sphere = SphereData::with_delta_at_origin(mu, delta, n)?;
    let bundle = NavigationBundle::new(sphere, gauge_for(p, tag)?)?;
    let metric = GeodesicMetric::Finsler(bundle);
    let tol = positive("tol", job.tol.unwrap_or(GEODESIC_TOL))?;
    let closed = job.closed.unwrap_or(false);
    let length = match job.length {
        Some(l) => positive("length", l)?,
        None if closed => 4.0 * PI / mu.sqrt() * (1.0 + 4.0 * delta / mu),
        None => 2.0 * PI / mu.sqrt(),
    };
    let path = if closed {
        closed_geodesic(&metric, &x0, &y0, length, tol)?
    } else {
        integrate_geodesic(&metric, &x0, &y0, length, tol)?
    };
    const P: [&str; 4] = ["p0", "p1", "p2", "p3"];
    const V: [&str; 4] = ["v0", "v1", "v2", "v3"];
    let m = n + 1;
    let mut columns = vec!["t"];
    if m <= 4 {
        columns.extend(&P[..m]);
        columns.extend(&V[..m]);
    } else {
        return Err(Failure::invalid(
            "geodesic trace supports chart dimension up to 3",
        ));
    }
    let mut r = Report::new("geodesic trace", columns);
    r.field("params", p);
    r.field("mu", mu);
    r.field("delta", delta);
    r.field("gauge", tag_name(tag));
    r.field("parameter", path.parameter);
    r.field("period", path.period);
    r.field("closure_error", path.closure_error);
    r.field("chart_switches", path.chart_switches);
    for s in &path.samples {
        let mut row: Vec<Cell> = vec![s.t.into()];
        row.extend(s.position.iter().map(|&v| Cell::Num(v)));
        row.extend(s.velocity.iter().map(|&v| Cell::Num(v)));
        r.row(row);
    }
    Ok(r)
}

pub fn verify(job: &JobArgs) -> Result<Report, Failure> {
    let mut opts = VerifyOptions::default();
    if let Some(seed) = job.seed {
        opts.seed = seed;
    }
    if let Some(g) = job.grid {
        opts.extrema.grid = count("grid", g, 3)?;
    }
    if let Some(b) = job.boundary_samples {
        opts.extrema.boundary_samples = count("boundary-samples", b, 3)?;
    }
    let ids: Vec<u32> = match &job.checks {
        Some(ids) => ids.clone(),
        None => CHECKS.iter().map(|c| c.0).collect(),
    };
    let mut r = Report::new(
        "verify",
        vec!["id", "name", "status", "worst", "tolerance", "detail"],
    );
    r.field("seed", opts.seed);
    let mut failed = 0usize;
    for id in ids {
        let c = run_check(id, &opts)?;
        let status = if c.passed { "PASS" } else { "FAIL" };
        log(
            if c.passed { "INFO" } else { "ERROR" },
            &[
                ("check", c.id.to_string()),
                ("name", c.name.into()),
                ("status", status.into()),
                ("worst", format!("{:.3e}", c.worst)),
                ("tolerance", format!("{:.1e}", c.tolerance)),
            ],
        );
        failed += usize::from(!c.passed);
        r.row(vec![
            Cell::Int(c.id.into()),
            c.name.into(),
            status.into(),
            c.worst.into(),
            c.tolerance.into(),
            Cell::Text(c.detail),
        ]);
    }
    r.field("failed", failed);
    if failed > 0 {
        r.exit_code = EXIT_NUMERICAL;
    }
    Ok(r)
}
