//! Chain-of-thought and tree-of-thought scaffolds around backend calls.

use crate::error::Result;

pub const TOT_PATHS: usize = 3;

const COT_SYSTEM: &str = "Solve the problem step by step. Number every step and state the result on the last line.";
const TOT_SYSTEM: &str = "Propose one complete reasoning path for the problem, as numbered steps ending in a result.";
const TOT_SELECT: &str = "Compare the candidate reasoning paths below and reply with the number of the most sound one.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Cot,
    Tot,
}

impl Mode {
    pub fn key(self) -> &'static str {
        match self {
            Mode::Cot => "cot",
            Mode::Tot => "tot",
        }
    }
}

/// `complete(key, step, system, user)` performs one backend completion.
pub type Complete<'a> = dyn FnMut(&str, usize, &str, &str) -> Result<String> + 'a;

/// Runs the scaffold and returns the labeled path text.
pub fn reason_tool(mode: Mode, query: &str, complete: &mut Complete<'_>) -> Result<String> {
    match mode {
        Mode::Cot => {
            let path = complete("cot", 0, COT_SYSTEM, query)?;
            Ok(format!("Path:\n{}", path.trim()))
        }
        Mode::Tot => {
            let mut paths = Vec::new();
            for i in 0..TOT_PATHS {
                let user = format!("{query}\n\nCandidate path {} of {TOT_PATHS}.", i + 1);
                paths.push(complete("tot", i, TOT_SYSTEM, &user)?.trim().to_string());
            }
            let listing: String =
                paths.iter().enumerate().map(|(i, p)| format!("Path {}:\n{p}\n", i + 1)).collect::<Vec<_>>().join("\n");
            let verdict = complete("tot", TOT_PATHS, TOT_SELECT, &format!("{query}\n\n{listing}"))?;
            let chosen = verdict
                .chars()
                .find_map(|c| c.to_digit(10).map(|d| d as usize))
                .filter(|d| (1..=TOT_PATHS).contains(d))
                .unwrap_or(1);
            Ok(format!("{listing}\nSelected path: {chosen}\n{}", paths[chosen - 1]))
        }
    }
}
