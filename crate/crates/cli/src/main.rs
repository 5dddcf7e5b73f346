mod args;
mod commands;
mod output;

use clap::Parser;

use args::{Cli, Command, Format};
use output::{emit, log, Failure, Report};

fn run(command: Command) -> Result<i32, Failure> {
    let (name, job) = match &command {
        Command::Phi { job, .. } => ("phi", job),
        Command::Gauge { job, .. } => ("gauge", job),
        Command::Length { job, .. } => ("length", job),
        Command::Curvature { job, .. } => ("curvature", job),
        Command::Geodesic { job, .. } => ("geodesic", job),
        Command::Verify { job } => ("verify", job),
    };
    let job = job.clone().resolve()?;
    log(
        "INFO",
        &[("command", name.into()), ("status", "start".into())],
    );
    let report: Report = match command {
        Command::Phi { action, .. } => commands::phi(action, &job)?,
        Command::Gauge { action, .. } => commands::gauge(action, &job)?,
        Command::Length { action, .. } => commands::length(action, &job)?,
        Command::Curvature { action, .. } => commands::curvature(action, &job)?,
        Command::Geodesic { action, .. } => commands::geodesic(action, &job)?,
        Command::Verify { .. } => commands::verify(&job)?,
    };
    // tables default to CSV, scalar reports to JSON
    let tabular = matches!(
        report.command.as_str(),
        "phi solve"
            | "gauge canonical"
            | "gauge square"
            | "gauge ivp"
            | "curvature grid"
            | "geodesic trace"
    );
    let format = job
        .format
        .unwrap_or(if tabular { Format::Csv } else { Format::Json });
    emit(&report.render(format), job.output.as_deref())?;
    log(
        "INFO",
        &[
            ("command", report.command.clone()),
            ("rows", report.rows.len().to_string()),
            ("exit", report.exit_code.to_string()),
        ],
    );
    Ok(report.exit_code)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.render().to_string();
            let first = detail
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            log(
                "ERROR",
                &[
                    ("exit", "2".into()),
                    ("message", message),
                    ("detail", first.into()),
                ],
            );
            std::process::exit(output::EXIT_VALIDATION);
        }
    };
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(f) => {
            log(
                "ERROR",
                &[("exit", f.code.to_string()), ("message", f.message)],
            );
            f.code
        }
    };
    std::process::exit(code);
}
