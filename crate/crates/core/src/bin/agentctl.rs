use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use agentctl::aux_tools::corpus::CorpusIndex;
use agentctl::aux_tools::human::HumanChannel;
use agentctl::aux_tools::memory::MemoryStore;
use agentctl::aux_tools::search::SearchClient;
use agentctl::eval::{evaluate_set, load_scenarios, render_report, BackendChoice, EvalOptions, ReportFormat};
use agentctl::llm::{Backend, HttpBackend, HttpConfig, ScriptedBackend};
use agentctl::plot::{render_svg, PlotPayload};
use agentctl::{AgentError, Config, Resources, Result, Session};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "agentctl", version, about = "Multi-agent assistant for linear control engineering")]
struct Cli {
    /// State directory for memory, corpus list and the last plot.
    #[arg(long, env = "AGENTCTL_HOME", default_value = ".agentctl", global = true)]
    home: PathBuf,
    #[arg(long, value_enum, default_value_t = BackendKind::Http, global = true)]
    backend: BackendKind,
    /// Reply script for the scripted backend.
    #[arg(long, global = true)]
    script: Option<PathBuf>,
    /// TOML file of configuration overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Scripted,
    Http,
}

#[derive(Subcommand)]
enum Cmd {
    /// Interactive session on the terminal.
    Chat,
    /// Runs one query and prints the final answer.
    Ask {
        query: String,
        /// Writes the turn's events as line-delimited JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Scores scenario files over repeated runs.
    Eval {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value = "text")]
        report: String,
    },
    /// Exports the last plot as JSON data or SVG.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
    Corpus {
        #[command(subcommand)]
        cmd: CorpusCmd,
    },
    /// HTTP service with streamed turns.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Indexes a file or directory for the Retriever.
    Add { path: PathBuf },
}

fn backend(cli: &Cli) -> Result<Arc<dyn Backend>> {
    match cli.backend {
        BackendKind::Scripted => {
            let text = match &cli.script {
                Some(p) => std::fs::read_to_string(p)?,
                None => String::new(),
            };
            Ok(Arc::new(ScriptedBackend::from_text(&text)?))
        }
        BackendKind::Http => Ok(Arc::new(HttpBackend::new(HttpConfig::from_env())?)),
    }
}

fn config(cli: &Cli) -> Result<Config> {
    let base = Config { out_dir: cli.home.join("out"), ..Config::default() };
    match &cli.config {
        None => Ok(base),
        Some(p) => {
            let table: toml::Table =
                toml::from_str(&std::fs::read_to_string(p)?).map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
            let v = serde_json::to_value(table).map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
            base.with_overrides(&v)
        }
    }
}

fn corpus_list(home: &Path) -> PathBuf {
    home.join("corpus.txt")
}

fn resources(home: &Path) -> Result<Resources> {
    std::fs::create_dir_all(home)?;
    let paths: Vec<PathBuf> = std::fs::read_to_string(corpus_list(home))
        .unwrap_or_default()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(PathBuf::from)
        .collect();
    Ok(Resources {
        corpus: Arc::new(CorpusIndex::ingest(&paths)?),
        search: Arc::new(SearchClient::from_env()),
        memory: Arc::new(MemoryStore::open(home.join("memory.log"))?),
    })
}

fn save_plot(home: &Path, session: &Session) -> Result<()> {
    if let Some(p) = &session.last_plot {
        std::fs::write(home.join("last_plot.json"), serde_json::to_string_pretty(p).expect("plot serializes"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Chat => {
            let cfg = config(&cli)?;
            let human = HumanChannel::Stdin { timeout: Duration::from_secs(cfg.human_timeout_secs) };
            let mut s = Session::new("chat", cfg, backend(&cli)?, resources(&cli.home)?, human);
            let stdin = std::io::stdin();
            loop {
                print!("> ");
                std::io::stdout().flush()?;
                let mut line = String::new();
                if stdin.lock().read_line(&mut line)? == 0 {
                    return Ok(());
                }
                if line.trim().is_empty() {
                    continue;
                }
                match s.run_turn(&line) {
                    Ok(o) => println!("{}", o.final_answer),
                    Err(e) => eprintln!("{e}"),
                }
                save_plot(&cli.home, &s)?;
            }
        }
        Cmd::Ask { query, trace } => {
            let cfg = config(&cli)?;
            let human = HumanChannel::Stdin { timeout: Duration::from_secs(cfg.human_timeout_secs) };
            let mut s = Session::new("ask", cfg, backend(&cli)?, resources(&cli.home)?, human);
            let result = s.run_turn(query);
            if let Some(p) = trace {
                std::fs::write(p, s.trace().to_jsonl())?;
            }
            save_plot(&cli.home, &s)?;
            println!("{}", result?.final_answer);
            Ok(())
        }
        Cmd::Eval { scenarios, runs, report } => {
            let format: ReportFormat = report.parse()?;
            let set = load_scenarios(scenarios)?;
            let backend = match cli.backend {
                BackendKind::Scripted => BackendChoice::Scripted,
                BackendKind::Http => BackendChoice::Shared(backend(&cli)?),
            };
            let opts = EvalOptions { runs: *runs, backend, base_config: config(&cli)? };
            let (reports, records) = evaluate_set(&set, &opts)?;
            for r in records.iter().filter(|r| r.error.is_some()) {
                eprintln!("{} run {}: {}", r.scenario_id, r.run, r.error.as_deref().unwrap_or_default());
            }
            print!("{}", render_report(&reports, format));
            Ok(())
        }
        Cmd::Plot { out } => {
            let text = std::fs::read_to_string(cli.home.join("last_plot.json"))
                .map_err(|_| AgentError::InvalidConfig("no plot recorded yet; run a query that plots first".into()))?;
            let payload: PlotPayload =
                serde_json::from_str(&text).map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
            let body = match out.extension().and_then(|e| e.to_str()) {
                Some("svg") => render_svg(&payload),
                Some("json") => text,
                _ => return Err(AgentError::InvalidConfig("--out must end in .json or .svg".into())),
            };
            std::fs::write(out, body)?;
            Ok(())
        }
        Cmd::Corpus { cmd: CorpusCmd::Add { path } } => {
            let path = std::fs::canonicalize(path)?;
            let idx = CorpusIndex::ingest(&[&path])?;
            std::fs::create_dir_all(&cli.home)?;
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(corpus_list(&cli.home))?;
            writeln!(f, "{}", path.display())?;
            for (doc, chunks) in idx.summary() {
                println!("{doc}: {chunks} chunk(s)");
            }
            Ok(())
        }
        Cmd::Serve { addr } => {
            let state = agentctl::service::AppState::new(backend(&cli)?, resources(&cli.home)?, config(&cli)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(agentctl::service::serve(*addr, state.clone()))?;
            drop(rt);
            drop(state);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
