use absphere::verify::{run_check, VerifyOptions, CHECKS};

fn main() {
    let opts = VerifyOptions::default();
    let mut failed = Vec::new();
    println!("\nrunning {} acceptance checks", CHECKS.len());
    for (id, name) in CHECKS {
        let start = std::time::Instant::now();
        let out = match run_check(id, &opts) {
            Ok(out) => out,
            Err(e) => {
                println!("FAIL {id:>2} {name:<32} error: {e}");
                failed.push(name);
                continue;
            }
        };
        let verdict = if out.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {:>2} {:<32} worst={:.3e} tol={:.0e} time={:.1}s  {}",
            out.id,
            out.name,
            out.worst,
            out.tolerance,
            start.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.passed {
            failed.push(out.name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} checks passed\n", CHECKS.len());
    } else {
        println!("acceptance: failed {failed:?}\n");
        std::process::exit(1);
    }
}
