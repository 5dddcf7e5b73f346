use std::path::{Path, PathBuf};

use absphere::curvature::SquareVariant;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::output::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "absphere",
    version,
    about = "Projectively flat (alpha, beta)-metrics on spheres"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Profile function phi: numerical solution, Taylor coefficients, regular range.
    Phi {
        action: PhiAction,
        #[command(flatten)]
        job: JobArgs,
    },
    /// Gauge triples (u, v, w) and the norm relation.
    Gauge {
        action: GaugeAction,
        #[command(flatten)]
        job: JobArgs,
    },
    /// Closed-geodesic lengths by every available route.
    Length {
        action: LengthAction,
        #[command(flatten)]
        job: JobArgs,
    },
    /// Reduced flag curvature: grid export, extrema, closed-form table.
    Curvature {
        action: CurvatureAction,
        #[command(flatten)]
        job: JobArgs,
    },
    /// Geodesic tracing on the sphere.
    Geodesic {
        action: GeodesicAction,
        #[command(flatten)]
        job: JobArgs,
    },
    /// Run the acceptance checks.
    Verify {
        #[command(flatten)]
        job: JobArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiAction {
    Solve,
    Taylor,
    Regularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaugeAction {
    Canonical,
    Square,
    Ivp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LengthAction {
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvatureAction {
    Grid,
    Extrema,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeodesicAction {
    Trace,
}

/// Which gauge a `delta` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeTag {
    Canonical,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    D,
    DTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

fn parse_variant(s: &str) -> Result<SquareVariant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| {
        format!("unknown variant {s:?}; expected square-plus, zero-plus or zero-minus")
    })
}

/// Job parameters. A config file holds the same keys as the long flags;
/// flags given on the command line win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct JobArgs {
    /// JSON file with default values for any of the flags below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, allow_negative_numbers = true)]
    pub k1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Square-family shortcut replacing k1, k2, k3, epsilon.
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<SquareVariant>,

    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Gauge in which delta is measured; required with --delta unless --variant is set.
    #[arg(long, value_enum)]
    pub gauge: Option<GaugeTag>,

    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,

    /// Initial values of the gauge IVP.
    #[arg(long, allow_negative_numbers = true)]
    pub u0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub v0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub w0: Option<f64>,

    #[arg(long, value_enum)]
    pub domain: Option<Domain>,
    /// Points per axis of the curvature grid.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub boundary_samples: Option<usize>,

    /// Chart coordinates of the geodesic start, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    /// Parameter length to integrate (a cap when --closed is set).
    #[arg(long)]
    pub length: Option<f64>,
    /// Stop at the first return to the start point.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub closed: Option<bool>,

    #[arg(long)]
    pub seed: Option<u64>,
    /// Subset of acceptance checks to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<u32>>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident, $($f:ident),*) => {
        JobArgs { config: $a.config, $($f: $a.$f.or($b.$f)),* }
    };
}

impl JobArgs {
    /// Fill unset flags from the config file, if one was named.
    pub fn resolve(self) -> Result<JobArgs, Failure> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config(&path)?;
        Ok(merge_fields!(
            self,
            file,
            k1,
            k2,
            k3,
            epsilon,
            variant,
            mu,
            delta,
            gauge,
            tol,
            s_max,
            t_max,
            samples,
            u0,
            v0,
            w0,
            domain,
            grid,
            boundary_samples,
            x0,
            y0,
            length,
            closed,
            seed,
            checks,
            format,
            output
        ))
    }
}

fn read_config(path: &Path) -> Result<JobArgs, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("bad config {}: {e}", path.display())))
}
