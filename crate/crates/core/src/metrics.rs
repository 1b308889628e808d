//! Indicator metrics over run traces against annotated ground truth.
//!
//! Each metric is a per-run mean of indicator values, averaged over the runs
//! in which the relevant agent acted at least once.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};
use crate::node::{EdgeKind, Node};
use crate::tools::canonical_tool;
use crate::trace::{Event, RunTrace};

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?").unwrap());

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AnswerMatcher {
    /// Every value must appear in the text within `tol`.
    Numeric {
        values: Vec<f64>,
        tol: f64,
    },
    /// Case-insensitive substring.
    Substring(String),
    Regex(String),
}

impl AnswerMatcher {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            AnswerMatcher::Numeric { values, tol } => {
                if values.is_empty() || !(*tol >= 0.0) {
                    return Err("numeric matcher needs values and a nonnegative tol".into());
                }
            }
            AnswerMatcher::Substring(s) if s.is_empty() => return Err("empty substring matcher".into()),
            AnswerMatcher::Regex(r) => {
                Regex::new(r).map_err(|e| e.to_string())?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn matches(&self, text: &str) -> bool {
        match self {
            AnswerMatcher::Numeric { values, tol } => {
                let found: Vec<f64> = NUMBER.find_iter(text).filter_map(|m| m.as_str().parse().ok()).collect();
                values.iter().all(|v| found.iter().any(|f| (f - v).abs() <= *tol + 1e-12))
            }
            AnswerMatcher::Substring(s) => text.to_lowercase().contains(&s.to_lowercase()),
            AnswerMatcher::Regex(r) => Regex::new(r).map(|re| re.is_match(text)).unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureClass {
    Planner,
    ControllerDeviation,
    CriticFalseRejection,
    Parse,
    Memory,
    Routing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub answer: AnswerMatcher,
    /// Expected next node per conditional decision, `END` for the end.
    /// Derived from `sequence` when absent.
    #[serde(default)]
    pub routes: Option<Vec<String>>,
    /// Optimal top-level agent sequence.
    pub sequence: Vec<Node>,
    #[serde(default)]
    pub plan: Option<Vec<String>>,
    #[serde(default = "default_delivery")]
    pub delivery: String,
    #[serde(default)]
    pub recall_hit: Option<bool>,
    #[serde(default)]
    pub failure: Option<FailureClass>,
}

fn default_delivery() -> String {
    "text".into()
}

fn route_name(n: Option<Node>) -> String {
    n.map(|n| n.name().to_string()).unwrap_or_else(|| "END".into())
}

impl GroundTruth {
    pub fn new(answer: AnswerMatcher, sequence: Vec<Node>) -> Self {
        GroundTruth {
            answer,
            routes: None,
            sequence,
            plan: None,
            delivery: default_delivery(),
            recall_hit: None,
            failure: None,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        self.answer.validate()?;
        if self.sequence.is_empty() {
            return Err("sequence is empty".into());
        }
        Ok(())
    }

    pub fn expected_routes(&self) -> Vec<String> {
        if let Some(r) = &self.routes {
            return r.clone();
        }
        self.sequence
            .iter()
            .enumerate()
            .filter(|(_, n)| n.edge_kind() == EdgeKind::Conditional)
            .map(|(i, _)| route_name(self.sequence.get(i + 1).copied()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricKind {
    E,
    R,
    A,
    P,
    J,
    S,
    F,
    D,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::E,
        MetricKind::R,
        MetricKind::A,
        MetricKind::P,
        MetricKind::J,
        MetricKind::S,
        MetricKind::F,
        MetricKind::D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::E => "M_E",
            MetricKind::R => "M_R",
            MetricKind::A => "M_A",
            MetricKind::P => "M_P",
            MetricKind::J => "M_J",
            MetricKind::S => "M_S",
            MetricKind::F => "M_F",
            MetricKind::D => "M_D",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn positional<T: PartialEq>(actual: &[T], expected: &[T]) -> Vec<f64> {
    let n = actual.len().max(expected.len());
    (0..n).map(|i| f64::from(u8::from(actual.get(i).is_some() && actual.get(i) == expected.get(i)))).collect()
}

fn strip_control(tools: &[String]) -> Vec<String> {
    tools.iter().map(|t| canonical_tool(t)).collect()
}

/// Indicator values of one run for one metric. Empty means the relevant
/// agent never acted.
pub fn indicators(kind: MetricKind, trace: &RunTrace, truth: &GroundTruth) -> Vec<f64> {
    let b = |x: bool| f64::from(u8::from(x));
    match kind {
        MetricKind::E => trace
            .iter()
            .filter_map(|e| match e {
                Event::AgentFinished { node: Node::Controller, nested: false, output, .. } => {
                    Some(b(truth.answer.matches(output)))
                }
                _ => None,
            })
            .collect(),
        MetricKind::R => {
            let actual: Vec<String> = trace
                .iter()
                .filter_map(|e| match e {
                    Event::AgentFinished { nested: false, conditional: true, routed_next, .. } => {
                        Some(route_name(*routed_next))
                    }
                    _ => None,
                })
                .collect();
            if actual.is_empty() {
                return Vec::new();
            }
            positional(&actual, &truth.expected_routes())
        }
        MetricKind::A => {
            let path = trace.node_path();
            if path.is_empty() {
                return Vec::new();
            }
            positional(&path, &truth.sequence)
        }
        MetricKind::P => {
            let mut out = Vec::new();
            let mut current: Option<Option<Vec<String>>> = None;
            for e in trace.iter() {
                match e {
                    Event::AgentStarted { node: Node::Planner, nested: false, .. } => current = Some(None),
                    Event::Plan { tools, .. } if current.is_some() => current = Some(Some(tools.clone())),
                    Event::AgentFinished { node: Node::Planner, nested: false, .. } => {
                        let plan = current.take().flatten();
                        let ok = match (&plan, &truth.plan) {
                            (Some(p), Some(t)) => strip_control(p) == strip_control(t),
                            _ => false,
                        };
                        out.push(b(ok));
                    }
                    _ => {}
                }
            }
            out
        }
        MetricKind::J => trace
            .iter()
            .filter_map(|e| match e {
                Event::CriticVerdict { accepted, candidate, .. } => {
                    Some(b(truth.answer.matches(candidate) == *accepted))
                }
                _ => None,
            })
            .collect(),
        MetricKind::S => trace
            .iter()
            .filter_map(|e| match e {
                Event::Debug { detected, fixed, .. } => Some(0.5 * b(*detected) + 0.5 * b(*fixed)),
                _ => None,
            })
            .collect(),
        MetricKind::F => trace
            .iter()
            .filter_map(|e| match e {
                Event::Memory { op, answer, .. } => Some(b(match op.as_str() {
                    "store" => true,
                    "hit" => {
                        truth.recall_hit != Some(false) && answer.as_deref().is_some_and(|a| truth.answer.matches(a))
                    }
                    "miss" => truth.recall_hit == Some(false),
                    _ => false,
                })),
                _ => None,
            })
            .collect(),
        MetricKind::D => trace
            .iter()
            .filter_map(|e| match e {
                Event::Delivery { delivered, ok, .. } => Some(b(*ok && *delivered == truth.delivery)),
                _ => None,
            })
            .collect(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Outer mean over runs of each run's inner indicator mean.
pub fn score_metric(kind: MetricKind, traces: &[RunTrace], truths: &[GroundTruth]) -> Result<f64> {
    check_lengths(traces, truths)?;
    let per_run: Vec<f64> = traces
        .iter()
        .zip(truths)
        .map(|(t, g)| indicators(kind, t, g))
        .filter(|v| !v.is_empty())
        .map(|v| mean(&v))
        .collect();
    if per_run.is_empty() {
        return Err(AgentError::MetricUndefined(kind.name()));
    }
    Ok(mean(&per_run))
}

fn check_lengths(traces: &[RunTrace], truths: &[GroundTruth]) -> Result<()> {
    if traces.is_empty() {
        return Err(AgentError::EmptyEvaluation);
    }
    if traces.len() != truths.len() {
        return Err(AgentError::InvalidConfig(format!("{} traces but {} ground truths", traces.len(), truths.len())));
    }
    Ok(())
}

/// Fraction of runs whose final answer matches.
pub fn score_completion(traces: &[RunTrace], truths: &[GroundTruth]) -> Result<f64> {
    check_lengths(traces, truths)?;
    let hits: Vec<f64> = traces
        .iter()
        .zip(truths)
        .map(|(t, g)| f64::from(u8::from(t.final_answer().is_some_and(|a| g.answer.matches(a)))))
        .collect();
    Ok(mean(&hits))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub m_e: Option<f64>,
    pub m_r: Option<f64>,
    pub m_a: Option<f64>,
    pub m_p: Option<f64>,
    pub m_j: Option<f64>,
    pub m_s: Option<f64>,
    pub m_f: Option<f64>,
    pub m_d: Option<f64>,
    pub m_c: f64,
    pub m_t: Option<f64>,
    pub runs: usize,
}

impl MetricsReport {
    pub fn component(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::E => self.m_e,
            MetricKind::R => self.m_r,
            MetricKind::A => self.m_a,
            MetricKind::P => self.m_p,
            MetricKind::J => self.m_j,
            MetricKind::S => self.m_s,
            MetricKind::F => self.m_f,
            MetricKind::D => self.m_d,
        }
    }

    /// The ten score columns in display order.
    pub fn columns(&self) -> [Option<f64>; 10] {
        [self.m_e, self.m_r, self.m_a, self.m_p, self.m_j, self.m_s, self.m_f, self.m_d, Some(self.m_c), self.m_t]
    }
}

pub const COLUMN_NAMES: [&str; 10] = ["M_E", "M_R", "M_A", "M_P", "M_J", "M_S", "M_F", "M_D", "M_C", "M_T"];

/// Mean of the eight component scores; completion is not part of it.
pub fn total_score(components: &[Option<f64>; 8]) -> Result<f64> {
    let mut sum = 0.0;
    for (k, c) in MetricKind::ALL.iter().zip(components) {
        sum += c.ok_or(AgentError::MetricUndefined(k.name()))?;
    }
    Ok(sum / 8.0)
}

pub fn evaluate(traces: &[RunTrace], truths: &[GroundTruth]) -> Result<MetricsReport> {
    let m_c = score_completion(traces, truths)?;
    let mut c = [None; 8];
    for (i, k) in MetricKind::ALL.iter().enumerate() {
        c[i] = match score_metric(*k, traces, truths) {
            Ok(v) => Some(v),
            Err(AgentError::MetricUndefined(_)) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(MetricsReport {
        m_e: c[0],
        m_r: c[1],
        m_a: c[2],
        m_p: c[3],
        m_j: c[4],
        m_s: c[5],
        m_f: c[6],
        m_d: c[7],
        m_c,
        m_t: total_score(&c).ok(),
        runs: traces.len(),
    })
}

/// First failure mode present in a run, checked in pipeline order.
pub fn classify_failure(trace: &RunTrace, truth: &GroundTruth) -> Option<FailureClass> {
    let plans: Vec<Vec<String>> = trace
        .iter()
        .filter_map(|e| match e {
            Event::Plan { tools, .. } => Some(strip_control(tools)),
            _ => None,
        })
        .collect();
    if let Some(t) = &truth.plan {
        if plans.iter().any(|p| *p != strip_control(t)) {
            return Some(FailureClass::Planner);
        }
    }
    let plan = plans.last().cloned().or_else(|| truth.plan.as_ref().map(|t| strip_control(t)));
    if let Some(plan) = plan {
        let calls: Vec<String> = trace
            .iter()
            .filter_map(|e| match e {
                Event::ToolCall { node: Node::Controller, tool, .. } => Some(tool.clone()),
                _ => None,
            })
            .collect();
        let mut first: Vec<String> = Vec::new();
        for c in &calls {
            if !first.contains(c) {
                first.push(c.clone());
            }
        }
        let in_order: Vec<String> = plan.iter().filter(|t| first.contains(t)).cloned().collect();
        if calls.iter().any(|c| !plan.contains(c))
            || first.iter().filter(|c| plan.contains(c)).cloned().collect::<Vec<_>>() != in_order
        {
            return Some(FailureClass::ControllerDeviation);
        }
    }
    let false_reject = trace.iter().any(
        |e| matches!(e, Event::CriticVerdict { accepted: false, candidate, .. } if truth.answer.matches(candidate)),
    );
    if false_reject {
        return Some(FailureClass::CriticFalseRejection);
    }
    let parse = trace.iter().any(|e| match e {
        Event::Error { class, .. } => class == "NodeStalled",
        Event::Debug { error_class, fixed, .. } => error_class == "ParseFailure" && !fixed,
        _ => false,
    });
    if parse {
        return Some(FailureClass::Parse);
    }
    if indicators(MetricKind::F, trace, truth).contains(&0.0) {
        return Some(FailureClass::Memory);
    }
    if indicators(MetricKind::R, trace, truth).contains(&0.0) {
        return Some(FailureClass::Routing);
    }
    None
}
