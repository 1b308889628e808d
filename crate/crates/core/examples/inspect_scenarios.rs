//! Runs every scenario in a file once and prints, per scenario, the agent
//! path, the tool calls, critic scores and any indicator that came out false.
//!
//! ```text
//! cargo run --example inspect_scenarios -- crates/core/scenarios/fixtures.toml
//! ```

use agentctl::eval::{load_scenarios, run_scenarios, EvalOptions};
use agentctl::metrics::{indicators, MetricKind};
use agentctl::trace::Event;

fn main() -> agentctl::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/fixtures.toml").into());
    let set = load_scenarios(&path)?;
    let records = run_scenarios(&set, &|_| true, &EvalOptions { runs: 1, ..Default::default() })?;
    for r in &records {
        let path: Vec<&str> = r.trace.node_path().iter().map(|n| n.name()).collect();
        println!("== {} [{}]", r.scenario_id, r.category);
        println!("   path: {}", path.join(" > "));
        for e in r.trace.iter() {
            match e {
                Event::ToolCall { node, tool, ok, error_class, .. } => {
                    println!(
                        "   {node}: {tool}{}",
                        if *ok { String::new() } else { format!(" -> {}", error_class.as_deref().unwrap_or("?")) }
                    )
                }
                Event::CriticVerdict { similarity, accepted, threshold, forced, .. } => {
                    println!("   critic {similarity:.3} vs {threshold} accepted={accepted} forced={forced}")
                }
                Event::Memory { op, similarity, .. } => println!("   memory {op} {similarity:?}"),
                Event::Error { class, message } => println!("   error {class}: {message}"),
                _ => {}
            }
        }
        for k in MetricKind::ALL {
            let v = indicators(k, &r.trace, &r.truth);
            if v.iter().any(|x| *x < 1.0) {
                println!("   {k} indicators {v:?}");
            }
        }
        println!("   final: {}", r.trace.final_answer().unwrap_or("(none)").replace('\n', " | "));
        if let Some(f) = r.failure {
            println!("   failure: {f:?}");
        }
        if let Some(e) = &r.error {
            println!("   run error: {e}");
        }
    }
    Ok(())
}
