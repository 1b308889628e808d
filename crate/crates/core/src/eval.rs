//! Scenario files, repeated-run evaluation and report rendering.
//!
//! A scenario file is TOML:
//!
//! ```toml
//! common_script = '''
//! >>> Critic * *
//! Final Answer: ok
//! '''
//!
//! [[scenario]]
//! id = "sr-1"
//! category = "SystemRepresentation"
//! query = "Convert num = [1], den = [1, 1] to state space."
//! replies = ["text"]
//! script = '''
//! >>> route 0 *
//! Planner
//! '''
//! [scenario.truth]
//! answer = { substring = "A = [[-1]]" }
//! sequence = ["Supervisor", "Planner", "Controller", "Critic", "Memory", "Communicator"]
//! plan = ["tf", "tf2ss"]
//! ```
//!
//! Scenarios sharing a `session` value run as consecutive turns of one
//! session, so later turns see earlier memory and registry state.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aux_tools::corpus::CorpusIndex;
use crate::aux_tools::human::HumanChannel;
use crate::aux_tools::memory::{MemoryRecord, MemoryStore};
use crate::aux_tools::search::{SearchClient, SearchFixture};
use crate::error::{AgentError, Result};
use crate::graph::{Config, Resources, Session};
use crate::llm::{Backend, Script, ScriptedBackend};
use crate::metrics::{classify_failure, evaluate, FailureClass, GroundTruth, MetricsReport, COLUMN_NAMES};
use crate::plot::{Axes, PlotPayload, Series};
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    SystemRepresentation,
    ControlAnalysis,
    ControllerDesign,
    TimeDomainSimulation,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::SystemRepresentation,
        Category::ControlAnalysis,
        Category::ControllerDesign,
        Category::TimeDomainSimulation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::SystemRepresentation => "System Representation",
            Category::ControlAnalysis => "Control Analysis",
            Category::ControllerDesign => "Controller Design",
            Category::TimeDomainSimulation => "Time Domain Simulation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentSpec {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRecord {
    pub query: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub category: Category,
    pub query: String,
    #[serde(default)]
    pub session: Option<String>,
    /// Answers handed to `human_tool`, in order.
    #[serde(default)]
    pub replies: Vec<String>,
    #[serde(default)]
    pub script: String,
    #[serde(default)]
    pub documents: Vec<DocumentSpec>,
    #[serde(default)]
    pub search: Vec<SearchFixture>,
    #[serde(default)]
    pub memory_seed: Vec<SeedRecord>,
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    common_script: String,
    #[serde(default)]
    scenario: Vec<Scenario>,
}

/// Parsed scenarios plus the script layer shared by all of them.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub common_script: String,
    common: Script,
    scripts: Vec<Script>,
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<ScenarioSet> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| AgentError::Scenario { path: label.clone(), message: e.to_string() })?;
    parse_scenarios(&text, &label)
}

pub fn parse_scenarios(text: &str, label: &str) -> Result<ScenarioSet> {
    let err = |message: String| AgentError::Scenario { path: label.to_string(), message };
    let file: ScenarioFile = toml::from_str(text).map_err(|e| err(e.to_string().trim().to_string()))?;
    if file.scenario.is_empty() {
        return Err(err("no [[scenario]] entries".into()));
    }
    let common = Script::parse(&file.common_script).map_err(|e| err(format!("common_script: {e}")))?;
    let mut seen = std::collections::BTreeSet::new();
    let mut scripts = Vec::new();
    for (i, s) in file.scenario.iter().enumerate() {
        let at = |field: &str, m: String| err(format!("scenario[{i}].{field}: {m}"));
        if !seen.insert(s.id.as_str()) {
            return Err(at("id", format!("duplicate id {:?}", s.id)));
        }
        if s.query.trim().is_empty() {
            return Err(at("query", "empty".into()));
        }
        s.truth.validate().map_err(|m| at("truth", m))?;
        if let Some(c) = &s.config {
            Config::default().with_overrides(c).map_err(|e| at("config", e.to_string()))?;
        }
        scripts.push(Script::parse(&s.script).map_err(|e| at("script", e.to_string()))?);
    }
    Ok(ScenarioSet { scenarios: file.scenario, common_script: file.common_script, common, scripts })
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Scripted backend for one scenario: its own script over the common layer.
    pub fn scripted_backend(&self, index: usize) -> ScriptedBackend {
        ScriptedBackend::new(vec![self.scripts[index].clone(), self.common.clone()])
    }

    /// Index groups run as one session each, in file order.
    fn groups(&self, filter: &dyn Fn(&Scenario) -> bool) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut named: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in self.scenarios.iter().enumerate().filter(|(_, s)| filter(s)) {
            match s.session.as_deref() {
                Some(name) => match named.get(name) {
                    Some(&g) => out[g].push(i),
                    None => {
                        named.insert(name, out.len());
                        out.push(vec![i]);
                    }
                },
                None => out.push(vec![i]),
            }
        }
        out
    }
}

/// Which completion backend drives the runs.
#[derive(Clone)]
pub enum BackendChoice {
    /// Each scenario's script layered over the common script.
    Scripted,
    /// One shared backend for every run.
    Shared(Arc<dyn Backend>),
}

impl fmt::Debug for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendChoice::Scripted => f.write_str("Scripted"),
            BackendChoice::Shared(b) => write!(f, "Shared({})", b.model()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub runs: usize,
    pub backend: BackendChoice,
    pub base_config: Config,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { runs: 20, backend: BackendChoice::Scripted, base_config: Config::default() }
    }
}

/// One execution of one scenario.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario_id: String,
    pub category: Category,
    pub run: usize,
    pub trace: RunTrace,
    pub truth: GroundTruth,
    pub error: Option<String>,
    pub wall_seconds: f64,
    pub cost: f64,
    pub failure: Option<FailureClass>,
}

/// Documents, search fixtures and memory seeds of the given scenarios.
pub fn resources_for(set: &ScenarioSet, group: &[usize]) -> Resources {
    let mut corpus = CorpusIndex::new();
    let mut fixtures = Vec::new();
    let memory = MemoryStore::in_memory();
    for &i in group {
        let s = &set.scenarios[i];
        for d in &s.documents {
            corpus.add_document(&d.name, &d.text);
        }
        fixtures.extend(s.search.iter().cloned());
        for r in &s.memory_seed {
            memory
                .store(MemoryRecord::new(&r.query, &r.answer, &format!("User: {}\nMemory: {}", r.query, r.answer)))
                .expect("nonempty transcript");
        }
    }
    Resources {
        corpus: Arc::new(corpus),
        search: Arc::new(if fixtures.is_empty() {
            SearchClient::Unconfigured
        } else {
            SearchClient::Fixtures(fixtures)
        }),
        memory: Arc::new(memory),
    }
}

fn run_group(set: &ScenarioSet, group: &[usize], run: usize, opts: &EvalOptions) -> Vec<RunRecord> {
    let first = &set.scenarios[group[0]];
    let placeholder: Arc<dyn Backend> = Arc::new(ScriptedBackend::new(Vec::new()));
    let mut session = Session::new(
        format!("{}-run{run}", first.session.as_deref().unwrap_or(&first.id)),
        opts.base_config.clone(),
        placeholder,
        resources_for(set, group),
        HumanChannel::scripted(Vec::<String>::new()),
    );
    let mut out = Vec::new();
    for &i in group {
        let s = &set.scenarios[i];
        let backend: Arc<dyn Backend> = match &opts.backend {
            BackendChoice::Scripted => Arc::new(set.scripted_backend(i)),
            BackendChoice::Shared(b) => b.clone(),
        };
        session.set_backend(backend);
        session.human = HumanChannel::scripted(s.replies.clone());
        let start = session.event_count();
        let clock = Instant::now();
        let result = match &s.config {
            Some(c) => {
                opts.base_config.with_overrides(c).map(|c| session.config = c).and_then(|_| session.run_turn(&s.query))
            }
            None => {
                session.config = opts.base_config.clone();
                session.run_turn(&s.query)
            }
        };
        let wall_seconds = clock.elapsed().as_secs_f64();
        let trace = session.trace_since(start);
        let cost = trace.usage().cost;
        let failure = classify_failure(&trace, &s.truth);
        out.push(RunRecord {
            scenario_id: s.id.clone(),
            category: s.category,
            run,
            error: result.err().map(|e| e.to_string()),
            trace,
            truth: s.truth.clone(),
            wall_seconds,
            cost,
            failure,
        });
    }
    out
}

/// Runs every selected scenario `opts.runs` times. Run errors are kept in
/// the records; they never stop the batch. Sessions run concurrently,
/// repetitions of one session sequentially.
pub fn run_scenarios(
    set: &ScenarioSet,
    filter: &dyn Fn(&Scenario) -> bool,
    opts: &EvalOptions,
) -> Result<Vec<RunRecord>> {
    if opts.runs == 0 {
        return Err(AgentError::EmptyEvaluation);
    }
    let groups = set.groups(filter);
    let mut per_group: Vec<Vec<RunRecord>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = groups
            .iter()
            .map(|g| scope.spawn(move || (0..opts.runs).flat_map(|r| run_group(set, g, r, opts)).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            per_group.push(h.join().expect("scenario thread panicked"));
        }
    });
    let mut records: Vec<RunRecord> = per_group.into_iter().flatten().collect();
    let order: BTreeMap<&str, usize> = set.scenarios.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    records.sort_by_key(|r| (order[r.scenario_id.as_str()], r.run));
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    /// Category label, or `Overall`.
    pub category: String,
    pub metrics: MetricsReport,
    pub wall_seconds: f64,
    pub cost: f64,
}

pub fn summarize(label: &str, records: &[RunRecord]) -> Result<CategoryReport> {
    let traces: Vec<RunTrace> = records.iter().map(|r| r.trace.clone()).collect();
    let truths: Vec<GroundTruth> = records.iter().map(|r| r.truth.clone()).collect();
    let metrics = evaluate(&traces, &truths)?;
    let n = records.len() as f64;
    Ok(CategoryReport {
        category: label.to_string(),
        metrics,
        wall_seconds: records.iter().map(|r| r.wall_seconds).sum::<f64>() / n,
        cost: records.iter().map(|r| r.cost).sum::<f64>() / n,
    })
}

pub fn run_category(set: &ScenarioSet, category: Category, opts: &EvalOptions) -> Result<CategoryReport> {
    let records = run_scenarios(set, &|s| s.category == category, opts)?;
    summarize(category.label(), &records)
}

/// One report per category present in the set, in table order, then
/// `Overall` over the union of all runs.
pub fn evaluate_set(set: &ScenarioSet, opts: &EvalOptions) -> Result<(Vec<CategoryReport>, Vec<RunRecord>)> {
    let records = run_scenarios(set, &|_| true, opts)?;
    let mut reports = Vec::new();
    for c in Category::ALL {
        let rs: Vec<RunRecord> = records.iter().filter(|r| r.category == c).cloned().collect();
        if !rs.is_empty() {
            reports.push(summarize(c.label(), &rs)?);
        }
    }
    reports.push(summarize("Overall", &records)?);
    Ok((reports, records))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Text,
    Csv,
    Chartdata,
}

impl std::str::FromStr for ReportFormat {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "chartdata" => Ok(ReportFormat::Chartdata),
            o => Err(AgentError::InvalidConfig(format!("unknown report format {o:?}"))),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

pub fn render_report(reports: &[CategoryReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => {
            let width = reports.iter().map(|r| r.category.len()).max().unwrap_or(0).max(8);
            let mut out = format!("{:width$}", "Category");
            for c in COLUMN_NAMES {
                out.push_str(&format!(" {c:>5}"));
            }
            out.push_str(&format!(" {:>8} {:>8}\n", "Time", "Money"));
            for r in reports {
                out.push_str(&format!("{:width$}", r.category));
                for v in r.metrics.columns() {
                    out.push_str(&format!(" {:>5}", cell(v)));
                }
                out.push_str(&format!(" {:>8.2} {:>8.4}\n", r.wall_seconds, r.cost));
            }
            out
        }
        ReportFormat::Csv => {
            let mut out = format!("category,{},time,money,runs\n", COLUMN_NAMES.join(","));
            for r in reports {
                let cols: Vec<String> =
                    r.metrics.columns().iter().map(|v| v.map(|v| v.to_string()).unwrap_or_default()).collect();
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.category,
                    cols.join(","),
                    r.wall_seconds,
                    r.cost,
                    r.metrics.runs
                ));
            }
            out
        }
        ReportFormat::Chartdata => {
            let payload = PlotPayload {
                kind: "bar".into(),
                title: "Agent metrics".into(),
                series: reports
                    .iter()
                    .map(|r| Series {
                        label: r.category.clone(),
                        x: (0..COLUMN_NAMES.len()).map(|i| i as f64).collect(),
                        y: Some(r.metrics.columns().to_vec()),
                        complex: None,
                    })
                    .collect(),
                axes: Axes { x_label: COLUMN_NAMES.join(","), y_label: "Score".into(), x_scale: "category".into() },
            };
            serde_json::to_string_pretty(&payload).expect("payload serializes")
        }
    }
}

/// Parses the csv rendering back into rows of optional numbers.
pub fn parse_csv_report(text: &str) -> Vec<(String, Vec<Option<f64>>)> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut cells = l.split(',');
            let name = cells.next().unwrap_or_default().to_string();
            (name, cells.map(|c| c.parse().ok()).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[scenario]]
id = "a"
category = "ControlAnalysis"
query = "hello"
[scenario.truth]
answer = { substring = "hello" }
sequence = ["Supervisor", "Planner", "Controller", "Critic", "Memory", "Communicator"]
"#;

    #[test]
    fn empty_and_duplicate_files_fail() {
        assert_eq!(parse_scenarios("", "x").unwrap_err().class(), "ScenarioError");
        let dup = format!("{MINIMAL}{}", MINIMAL.replacen("query = \"hello\"", "query = \"other\"", 1));
        let e = parse_scenarios(&dup, "x").unwrap_err();
        assert!(e.to_string().contains("scenario[1].id"), "{e}");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let bad = MINIMAL.replace("ControlAnalysis", "Cooking");
        let e = parse_scenarios(&bad, "f.toml").unwrap_err().to_string();
        assert!(e.contains("category") && e.contains("f.toml"), "{e}");
        let bad = MINIMAL.replace("sequence = [", "sequence = [] #");
        assert!(parse_scenarios(&bad, "f").unwrap_err().to_string().contains("truth"));
    }

    #[test]
    fn unscripted_run_completes() {
        let set = parse_scenarios(MINIMAL, "m").unwrap();
        let opts = EvalOptions { runs: 2, ..Default::default() };
        let (reports, records) = evaluate_set(&set, &opts).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[1].metrics.m_c, 1.0);
        let csv = render_report(&reports, ReportFormat::Csv);
        let rows = parse_csv_report(&csv);
        assert_eq!(rows[0].1[8], Some(reports[0].metrics.m_c));
    }

    #[test]
    fn zero_runs_is_empty() {
        let set = parse_scenarios(MINIMAL, "m").unwrap();
        let opts = EvalOptions { runs: 0, ..Default::default() };
        assert_eq!(run_category(&set, Category::ControlAnalysis, &opts).unwrap_err().class(), "EmptyEvaluation");
    }
}
