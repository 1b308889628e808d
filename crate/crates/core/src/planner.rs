//! Keyword planner: objective and representation cues to an ordered tool list.

use std::fmt;
use std::sync::LazyLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::tools::canonical_tool;

/// Objectives the planner can name, in classifier priority order.
pub const OBJECTIVES: &[&str] = &[
    "lqr",
    "acker",
    "place",
    "root_locus",
    "bode",
    "nyquist",
    "impulse_response",
    "forced_response",
    "step_response",
    "pzmap",
    "zeros",
    "poles",
    "is_stable",
    "feedback",
    "series",
    "parallel",
    "dc_gain",
    "ctrb",
    "tf2ss",
    "ss2tf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemType {
    #[serde(rename = "TF")]
    Tf,
    #[serde(rename = "SS")]
    Ss,
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemType::Tf => "TF",
            SystemType::Ss => "SS",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub system_type: SystemType,
    pub objective: String,
    pub tools: Vec<String>,
}

impl Plan {
    pub fn observation(&self) -> String {
        let tools: Vec<String> = self.tools.iter().map(|t| format!("'control.{t}'")).collect();
        format!(
            "System Type: {}, Objective: {}, Ordered Tools: [{}]",
            self.system_type,
            self.objective,
            tools.join(", ")
        )
    }
}

fn ci(pattern: &str) -> Regex {
    RegexBuilder::new(pattern).case_insensitive(true).build().unwrap()
}

static KEYWORDS: LazyLock<Vec<(Regex, &'static str)>> = LazyLock::new(|| {
    [
        (r"\blqr\b|linear[- ]quadratic", "lqr"),
        (r"\backer(mann)?\b|\backermann's\b", "acker"),
        (r"\bplace\b|\bplacement\b", "place"),
        (r"\broot[- ]locus\b|\brlocus\b", "root_locus"),
        (r"\bbode\b", "bode"),
        (r"\bnyquist\b", "nyquist"),
        (r"\bimpulse\b", "impulse_response"),
        (r"\bforced\b|\blsim\b", "forced_response"),
        (r"\bstep\b", "step_response"),
        (r"\bpzmap\b|\bpole[- ]zero\b", "pzmap"),
        (r"\bzeros?\b", "zeros"),
        (r"\bpoles?\b", "poles"),
        (r"\bstab(le|ility)\b", "is_stable"),
        (r"\bfeedback\b|\bclosed[- ]loop\b", "feedback"),
        (r"\bseries\b|\bcascade\b", "series"),
        (r"\bparallel\b", "parallel"),
        (r"\bdc gain\b|\bsteady[- ]state gain\b", "dc_gain"),
        (r"\bcontrollab|\bctrb\b", "ctrb"),
        (r"\bconver(t|sion)|\btf2ss\b|\bss2tf\b|\brealization\b", "convert"),
    ]
    .into_iter()
    .map(|(p, o)| (ci(p), o))
    .collect()
});

static TF_CUE: LazyLock<Regex> = LazyLock::new(|| ci(r"\bnum\b|\bden\b|transfer function|\bG\(s\)"));
static SS_CUE: LazyLock<Regex> = LazyLock::new(|| ci(r"\bA\s*=|state[- ]space|bmatrix|\bmatrices\b"));

/// Highest-priority objective keyword in `text`.
pub fn classify_objective(text: &str) -> Option<&'static str> {
    KEYWORDS.iter().find(|(re, _)| re.is_match(text)).map(|(_, o)| *o)
}

/// Representation named first in `text`, if any.
pub fn representation(text: &str) -> Option<SystemType> {
    let tf = TF_CUE.find(text).map(|m| m.start());
    let ss = SS_CUE.find(text).map(|m| m.start());
    match (tf, ss) {
        (Some(a), Some(b)) => Some(if a <= b { SystemType::Tf } else { SystemType::Ss }),
        (Some(_), None) => Some(SystemType::Tf),
        (None, Some(_)) => Some(SystemType::Ss),
        (None, None) => None,
    }
}

/// Fixed tool sequence for an objective on a given representation.
pub fn build_plan(system_type: SystemType, objective: &str) -> Plan {
    let objective = match (objective, system_type) {
        ("convert" | "tf2ss" | "ss2tf", SystemType::Tf) => "tf2ss",
        ("convert" | "tf2ss" | "ss2tf", SystemType::Ss) => "ss2tf",
        (o, _) => o,
    };
    let x = objective.to_string();
    let tools: Vec<String> = match system_type {
        SystemType::Tf => match objective {
            "lqr" | "acker" | "place" | "ctrb" => vec!["tf".into(), "tf2ss".into(), x.clone()],
            "tf2ss" | "ss2tf" => vec!["tf".into(), "tf2ss".into()],
            _ => vec!["tf".into(), x.clone()],
        },
        SystemType::Ss => match objective {
            "lqr" | "acker" | "place" | "ctrb" => vec![x.clone()],
            "tf2ss" | "ss2tf" => vec!["ss2tf".into()],
            "poles" | "zeros" | "pzmap" | "is_stable" | "dc_gain" => vec!["ss".into(), x.clone()],
            _ => vec!["ss2tf".into(), x.clone()],
        },
    };
    Plan { system_type, objective: x, tools }
}

/// Plans from the tool input, falling back to the user query for the
/// objective, and finally to `fallback` (one constrained completion).
pub fn planner_tool(input: &str, query: &str, fallback: impl FnOnce() -> Result<String>) -> Result<Plan> {
    let system_type = representation(input).or_else(|| representation(query)).unwrap_or(SystemType::Tf);
    if let Some(o) = classify_objective(input).or_else(|| classify_objective(query)) {
        return Ok(build_plan(system_type, o));
    }
    let reply = fallback()?;
    let word = reply
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_alphanumeric() && c != '_' && c != '.');
    let o = canonical_tool(word);
    match OBJECTIVES.iter().find(|x| **x == o) {
        Some(o) => Ok(build_plan(system_type, o)),
        None => Err(AgentError::PlanFailure(format!("no control objective in {input:?}"))),
    }
}
