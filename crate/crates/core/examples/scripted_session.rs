//! One query through the full agent network with the scripted backend: the
//! reply script stands in for the language model, so the run is
//! deterministic and offline. Prints the agent path, the tool calls and the
//! delivered answer.
//!
//! ```text
//! cargo run -p agentctl --example scripted_session
//! ```

use std::sync::Arc;

use agentctl::aux_tools::human::HumanChannel;
use agentctl::llm::ScriptedBackend;
use agentctl::trace::Event;
use agentctl::{Config, Resources, Session};

const QUERY: &str = "Plot the step response for a system with transfer function num = [1, 3], den = [1, 4.16, 3.16].";

fn main() -> agentctl::Result<()> {
    let script = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scripts/step_response.txt"))?;
    let backend = Arc::new(ScriptedBackend::from_text(&script)?);
    let out = std::env::temp_dir().join("agentctl-example");
    let config = Config { out_dir: out.clone(), ..Config::default() };
    // the Communicator asks for an output format; answer as the user would
    let human = HumanChannel::scripted(["pdf"]);
    let mut session = Session::new("example", config, backend, Resources::default(), human);

    let outcome = session.run_turn(QUERY)?;
    let path: Vec<&str> = outcome.trace.node_path().iter().map(|n| n.name()).collect();
    println!("path: {}", path.join(" -> "));
    for e in outcome.trace.iter() {
        match e {
            Event::ToolCall { node, tool, args, ok, .. } => println!("  {node} called {tool}({args}) ok={ok}"),
            Event::CriticVerdict { similarity, accepted, .. } => {
                println!("  critic similarity {similarity:.2}, accepted {accepted}")
            }
            Event::QuestionToUser { question } => println!("  asked the user: {question}"),
            Event::Delivery { delivered, ok, .. } => {
                println!("  delivered as {delivered} ok={ok} into {}", out.display())
            }
            _ => {}
        }
    }
    let usage = outcome.trace.usage();
    println!("tokens: {} prompt + {} completion", usage.prompt_tokens, usage.completion_tokens);
    println!("\n{}", outcome.final_answer);
    Ok(())
}
