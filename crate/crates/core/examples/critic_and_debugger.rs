//! The two checking tools on their own: the critic's lexical similarity
//! verdict and the debugger's advice for failed tool calls.
//!
//! ```text
//! cargo run -p agentctl --example critic_and_debugger
//! ```

use agentctl::aux_tools::critic::critic_tool;
use agentctl::aux_tools::debug::debug_advise;

fn main() {
    let query = "Design an LQR controller for A = [[2, 3], [1, 0]], B = [[1], [0]] with Q = I and R = 1.";
    for answer in [
        "The LQR controller for A = [[2, 3], [1, 0]], B = [[1], [0]] with Q = I and R = 1 is K = [[6.16, 6.16]].",
        "K = [[6.16, 6.16]]",
        "The plant has a zero at -3.",
    ] {
        let v = critic_tool(query, answer, 0.5);
        println!("{:.2} accepted={:<5} {answer}", v.similarity, v.accepted);
    }
    println!();
    for (err, tool) in [
        ("ShapeError: B has 3 rows but A is 2x2", Some("lqr")),
        ("ArgParseError: missing argument `poles`", Some("acker")),
        ("ParseFailure: no Action or Final Answer", None),
        ("Segfault in the flux capacitor", None),
    ] {
        let a = debug_advise(err, tool);
        println!("[{}{}] {}", a.error_class, if a.known { "" } else { ", no rule" }, a.text.replace('\n', " "));
    }
}
