//! Stores two conversations in an on-disk log, reopens it and recalls by
//! similarity. Recall only reads; the log only grows.
//!
//! ```text
//! cargo run -p agentctl --example memory_log
//! ```

use agentctl::aux_tools::memory::{MemoryRecord, MemoryStore, Recall};

fn main() -> agentctl::Result<()> {
    let dir = std::env::temp_dir().join(format!("agentctl-memory-{}", std::process::id()));
    let path = dir.join("memory.log");
    {
        let store = MemoryStore::open(&path)?;
        for (q, a) in [
            ("Design an LQR controller for A = [[0, 1], [0, 0]], B = [[0], [1]]", "K = [[1, 1.73]]"),
            ("Is num = [1, 7, 10], den = [1, 3, 4, 20] stable?", "Unstable: 2 pole(s) in the right half plane"),
        ] {
            store.store(MemoryRecord::new(q, a, &format!("User: {q}\nController: {a}")))?;
        }
    }
    let store = MemoryStore::open(&path)?;
    println!("{} records in {}", store.len(), path.display());
    for probe in [
        "Design an LQR controller for A = [[0, 1], [0, 0]], B = [[0], [1]] again",
        "Plot the Nyquist diagram of num = [1], den = [1, 1]",
    ] {
        match store.recall(probe, 0.6) {
            Recall::Hit { record, similarity } => println!("hit  {similarity:.2}: {probe:?} -> {}", record.answer),
            Recall::Miss { best } => println!("miss {best:.2}: {probe:?}"),
        }
    }
    std::fs::remove_dir_all(dir).ok();
    Ok(())
}
