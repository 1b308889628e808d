//! Thought / Action / Action Input / Final Answer completions.

use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReActStep {
    pub thought: String,
    pub action: String,
    pub action_input: String,
    pub observation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Parsed {
    Step(ReActStep),
    Final { thought: String, answer: String },
}

const ACTION: &str = "Action:";
const INPUT: &str = "Action Input:";
const FINAL: &str = "Final Answer:";
const OBSERVATION: &str = "Observation:";

fn label<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    line.trim_start().strip_prefix(name).map(str::trim)
}

fn thought_text(lines: &[&str]) -> String {
    let joined = lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("\n");
    joined.strip_prefix("Thought:").map(|t| t.trim().to_string()).unwrap_or(joined)
}

/// First action triple or final answer in `completion`. Labels are
/// case-sensitive and must start a line; prose before them is the thought.
pub fn parse_react(completion: &str) -> Result<Parsed> {
    let lines: Vec<&str> = completion.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if let Some(answer_head) = label(line, FINAL) {
            let mut answer = vec![answer_head.to_string()];
            answer.extend(lines[i + 1..].iter().map(|l| l.to_string()));
            let answer = answer.join("\n").trim().to_string();
            return Ok(Parsed::Final { thought: thought_text(&lines[..i]), answer });
        }
        if label(line, INPUT).is_some() {
            // an input with no action before it
            return Err(AgentError::ParseFailure);
        }
        if let Some(action) = label(line, ACTION) {
            let action = action.trim_matches(|c| c == '`' || c == '\'' || c == '"').trim().to_string();
            if action.is_empty() {
                return Err(AgentError::ParseFailure);
            }
            let rest = &lines[i + 1..];
            let j = rest.iter().position(|l| !l.trim().is_empty()).ok_or(AgentError::ParseFailure)?;
            let head = label(rest[j], INPUT).ok_or(AgentError::ParseFailure)?;
            let mut input = vec![head.to_string()];
            for l in &rest[j + 1..] {
                if label(l, OBSERVATION).is_some() || label(l, FINAL).is_some() || label(l, ACTION).is_some() {
                    break;
                }
                input.push(l.to_string());
            }
            return Ok(Parsed::Step(ReActStep {
                thought: thought_text(&lines[..i]),
                action,
                action_input: input.join("\n").trim().to_string(),
                observation: None,
            }));
        }
    }
    Err(AgentError::ParseFailure)
}

pub fn serialize(p: &Parsed) -> String {
    match p {
        Parsed::Step(s) => {
            let mut out = format!("Thought: {}\n{ACTION} {}\n{INPUT} {}", s.thought, s.action, s.action_input);
            if let Some(o) = &s.observation {
                out.push_str(&format!("\n{OBSERVATION} {o}"));
            }
            out
        }
        Parsed::Final { thought, answer } => format!("Thought: {thought}\n{FINAL} {answer}"),
    }
}

/// Scratchpad fragment after a dispatched step; ends where the next
/// completion picks up.
pub fn scratchpad_entry(step: &ReActStep) -> String {
    format!(
        "{}\n{ACTION} {}\n{INPUT} {}\n{OBSERVATION} {}\nThought: ",
        step.thought,
        step.action,
        step.action_input,
        step.observation.as_deref().unwrap_or("")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_triple() {
        let p = parse_react(
            "Thought: I should use Ackermann's formula.\nAction: acker\nAction Input: A = [[0,1],[-2,-3]], B = [[0],[1]], poles = [-3,-4]",
        )
        .unwrap();
        match p {
            Parsed::Step(s) => {
                assert_eq!(s.action, "acker");
                assert_eq!(s.thought, "I should use Ackermann's formula.");
                assert!(s.action_input.starts_with("A = [[0,1]"));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn final_answer() {
        let p = parse_react("Thought: I now know the final answer\nFinal Answer: K = [10, 4]").unwrap();
        assert_eq!(p, Parsed::Final { thought: "I now know the final answer".into(), answer: "K = [10, 4]".into() });
    }

    #[test]
    fn no_labels_is_a_parse_failure() {
        assert!(matches!(parse_react("hello"), Err(AgentError::ParseFailure)));
        assert!(matches!(parse_react("Action: tf"), Err(AgentError::ParseFailure)));
        assert!(matches!(parse_react("action: tf\naction input: x"), Err(AgentError::ParseFailure)));
    }

    #[test]
    fn leading_prose_and_trailing_observation() {
        let p = parse_react(
            "Let me think.\nSome more.\nAction: tf\nAction Input: num = [1]\nden = [1, 1]\nObservation: fake",
        )
        .unwrap();
        match p {
            Parsed::Step(s) => {
                assert_eq!(s.thought, "Let me think.\nSome more.");
                assert_eq!(s.action_input, "num = [1]\nden = [1, 1]");
            }
            _ => panic!(),
        }
    }

    #[test]
    fn first_label_wins() {
        let p = parse_react("Final Answer: done\nAction: tf\nAction Input: x").unwrap();
        assert!(matches!(p, Parsed::Final { .. }));
    }
}
