//! Indexes a few notes and ranks passages for a question, the way the
//! Retriever agent does before handing a model to the Planner.
//!
//! ```text
//! cargo run -p agentctl --example retrieval -- [files...]
//! ```

use agentctl::aux_tools::corpus::CorpusIndex;

fn main() -> agentctl::Result<()> {
    let files: Vec<String> = std::env::args().skip(1).collect();
    let index = if files.is_empty() {
        let mut idx = CorpusIndex::new();
        idx.add_document(
            "servo_lab.txt",
            "Lab 3 servo model.\n\nThe open-loop transfer function of the servo is G(s) = 20 / (s^2 + 6 s).\n\n\
             Design a lead compensator so the phase margin exceeds 45 degrees.",
        );
        idx.add_document(
            "thermal.txt",
            "The oven is a first-order lag with time constant 120 s and DC gain 0.8 degC per watt.",
        );
        idx.add_document("safety.txt", "Always disconnect the amplifier before rewiring the servo.");
        idx
    } else {
        CorpusIndex::ingest(&files)?
    };
    for (doc, chunks) in index.summary() {
        println!("{doc}: {chunks} chunk(s)");
    }
    let query = "transfer function of the servo";
    let hits = index.retrieve(query, 2)?;
    println!("\n{query:?}");
    for p in &hits.passages {
        let offset = index.chunks[p.chunk].offset;
        println!("  {:.3} {} @{offset}: {}", p.score, p.source, p.text.replace('\n', " "));
    }
    println!("\nobservation handed to the agent:\n{}", hits.observation());
    Ok(())
}
