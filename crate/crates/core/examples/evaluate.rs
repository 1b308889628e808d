//! Scores the shipped sixteen-scenario fixture set over repeated runs and
//! prints the per-category table.
//!
//! ```text
//! cargo run -p agentctl --example evaluate -- [scenarios.toml] [runs]
//! ```

use agentctl::eval::{evaluate_set, load_scenarios, render_report, EvalOptions, ReportFormat};

fn main() -> agentctl::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/fixtures.toml").into());
    let runs = args.next().and_then(|r| r.parse().ok()).unwrap_or(20);
    let set = load_scenarios(&path)?;
    let started = std::time::Instant::now();
    let (reports, records) = evaluate_set(&set, &EvalOptions { runs, ..Default::default() })?;
    print!("{}", render_report(&reports, ReportFormat::Text));
    println!("\n{} runs of {} scenarios in {:.2?}", runs, set.len(), started.elapsed());
    for r in records.iter().filter(|r| r.failure.is_some()) {
        println!("{} run {}: {:?}", r.scenario_id, r.run, r.failure.unwrap());
    }
    Ok(())
}
