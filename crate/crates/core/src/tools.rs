//! Controller tool catalog: argument binding, kernel calls, observation text.

use agentctl_control::format::{fmt_complex_vec, fmt_num};
use agentctl_control::system::fmt_matrix;
use agentctl_control::*;

use crate::args::{parse_action_input, Args, Value};
use crate::error::{AgentError, Result};
use crate::plot::PlotPayload;
use crate::registry::Registry;

pub const CONTROL_TOOLS: &[&str] = &[
    "tf",
    "ss",
    "tf2ss",
    "ss2tf",
    "poles",
    "zeros",
    "pzmap",
    "is_stable",
    "dc_gain",
    "step_response",
    "impulse_response",
    "forced_response",
    "bode",
    "nyquist",
    "root_locus",
    "ctrb",
    "acker",
    "place",
    "lqr",
    "closed_loop",
    "feedback",
    "series",
    "parallel",
];

/// Registry id for a tool name, accepting `control.`-prefixed and common
/// alternative spellings.
pub fn canonical_tool(id: &str) -> String {
    let id = id.trim();
    let id = id.strip_prefix("control.").unwrap_or(id);
    match id {
        "step" => "step_response",
        "impulse" => "impulse_response",
        "forced" | "lsim" => "forced_response",
        "rlocus" | "root_locus_plot" => "root_locus",
        "pole" => "poles",
        "zero" => "zeros",
        "stability" => "is_stable",
        "bode_plot" => "bode",
        "nyquist_plot" => "nyquist",
        "ctrb_matrix" | "controllability" => "ctrb",
        "pole_zero_map" => "pzmap",
        other => other,
    }
    .to_string()
}

pub fn describe(tool: &str) -> &'static str {
    match tool {
        "tf" => "tf(num, den): create a transfer function system from coefficient lists",
        "ss" => "ss(A, B, C, D): create a state-space system",
        "tf2ss" => "tf2ss(sys | num, den): controllable canonical state-space realization",
        "ss2tf" => "ss2tf(sys | A, B, C, D): transfer function of a SISO state-space system",
        "poles" => "poles(sys): poles of a system",
        "zeros" => "zeros(sys): zeros of a system",
        "pzmap" => "pzmap(sys): pole-zero map",
        "is_stable" => "is_stable(sys): stability verdict with right-half-plane pole count",
        "dc_gain" => "dc_gain(sys): steady-state gain G(0)",
        "step_response" => "step_response(sys, T?, n_points?): step response",
        "impulse_response" => "impulse_response(sys, T?, n_points?): impulse response",
        "forced_response" => "forced_response(sys, u, T?): response to sampled input u",
        "bode" => "bode(sys, omega?): Bode plot data",
        "nyquist" => "nyquist(sys, omega?): Nyquist plot data",
        "root_locus" => "root_locus(sys, gains?): root locus branches",
        "ctrb" => "ctrb(A, B): controllability matrix and rank",
        "acker" => "acker(A, B, poles): pole placement by Ackermann's formula",
        "place" => "place(A, B, poles): state-feedback pole placement",
        "lqr" => "lqr(A, B, Q, R | sys, Q, R): linear-quadratic regulator gain",
        "closed_loop" => "closed_loop(sys | A, B, C, D, K): state feedback A - BK",
        "feedback" => "feedback(sys, sys2?): negative feedback, unity when sys2 is omitted",
        "series" => "series(sys, sys2): series connection",
        "parallel" => "parallel(sys, sys2): parallel connection",
        "planner_tool" => "planner_tool(query): system type, objective and ordered control tools",
        "retriever_tool" => "retriever_tool(query): passages from the provided documents",
        "search_tool" => "search_tool(query): web search snippets with sources",
        "cot_tool" => "cot_tool(query): chain-of-thought reasoning path",
        "tot_tool" => "tot_tool(query): three reasoning paths and the selected one",
        "critic_tool" => "critic_tool(query, answer): similarity verdict of the answer against the query",
        "debug_tool" => "debug_tool(error): remedy for an error message",
        "storage_memory_tool" => "storage_memory_tool(conversation): store the conversation",
        "recall_memory_tool" => "recall_memory_tool(query): recall a stored conversation",
        "human_tool" => "human_tool(question): ask the user and wait for the reply",
        "text_to_pdf_tool" => "text_to_pdf_tool(conversation): render the answer as a PDF file",
        "text_to_speech_tool" => "text_to_speech_tool(text): speech delivery",
        "translate_tool" => "translate_tool(text, language): translated delivery",
        _ => "",
    }
}

pub fn tool_descriptions(tools: &[&str]) -> String {
    tools.iter().map(|t| format!("{t}: {}", describe(t))).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolOutput {
    pub observation: String,
    pub plot: Option<PlotPayload>,
    pub handle: Option<String>,
}

impl ToolOutput {
    fn text(observation: String) -> Self {
        ToolOutput { observation, plot: None, handle: None }
    }
}

fn system_header(handle: &str, sys: &LinearSystem) -> String {
    let mut s = format!("{handle}\nInputs (1): ['u [0]']\nOutputs (1): ['y [0]']");
    if let LinearSystem::Ss(ss) = sys {
        let states: Vec<String> = (0..ss.order()).map(|i| format!("'x [{i}]'")).collect();
        s.push_str(&format!("\nStates ({}): [{}]", ss.order(), states.join(", ")));
    }
    format!("{s}\n\n{sys}")
}

fn register(reg: &mut Registry, sys: LinearSystem) -> ToolOutput {
    let h = reg.insert(sys.clone());
    ToolOutput { observation: system_header(&h, &sys), plot: None, handle: Some(h) }
}

fn missing(what: &str) -> AgentError {
    AgentError::arg(format!("missing argument {what}"), 0, 0)
}

/// Resolves a plant from `sys` (handle), `num`/`den`, or `A`, `B`, `C`, `D`.
fn system_arg(args: &Args, reg: &Registry, keys: (&str, &str, &str)) -> Result<(LinearSystem, String)> {
    let (sys_key, num_key, den_key) = keys;
    if let Some(v) = args.get(sys_key) {
        return match v {
            Value::Str(h) => Ok((reg.get(h)?.clone(), h.clone())),
            _ => Err(AgentError::arg(format!("{sys_key} must name a system such as sys [0]"), 0, 0)),
        };
    }
    if args.has(num_key) || args.has(den_key) {
        let num = args.vector(num_key)?;
        let den = args.vector(den_key)?;
        return Ok((make_tf(&num, &den)?.into(), "G(s)".into()));
    }
    if args.has("A") && sys_key == "sys" {
        return Ok((state_space_arg(args)?.into(), "the state-space system".into()));
    }
    Err(AgentError::arg(format!("expected {sys_key}, {num_key}/{den_key}, or A, B, C, D"), 0, 0))
}

fn state_space_arg(args: &Args) -> Result<StateSpace> {
    for k in ["A", "B", "C", "D"] {
        if !args.has(k) {
            return Err(missing(k));
        }
    }
    Ok(make_ss(args.matrix("A")?, args.column_matrix("B")?, args.matrix("C")?, args.matrix("D")?)?)
}

/// `A`, `B` either given directly or taken from a state-space system.
fn pair_arg(args: &Args, reg: &Registry) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if args.has("A") {
        if !args.has("B") {
            return Err(missing("B"));
        }
        return Ok((args.matrix("A")?, args.column_matrix("B")?));
    }
    let (sys, _) = system_arg(args, reg, ("sys", "num", "den"))?;
    let ss = sys.to_ss()?;
    Ok((ss.a, ss.b))
}

fn gain_text(k: &DMatrix<f64>) -> String {
    format!("K = {}", fmt_matrix(k))
}

fn time_grid(args: &Args) -> Result<TimeGrid> {
    let horizon = match args.get_any(&["T", "horizon", "t_end"]) {
        Some((k, _)) => Some(args.f64(k)?),
        None => None,
    };
    let n_points = match args.get("n_points") {
        Some(_) => Some(args.f64("n_points")? as usize),
        None => None,
    };
    Ok(TimeGrid { horizon, n_points, u: None })
}

/// Runs a controller tool on a raw action input.
pub fn dispatch_control(tool: &str, raw_input: &str, reg: &mut Registry) -> Result<ToolOutput> {
    let tool = canonical_tool(tool);
    if !CONTROL_TOOLS.contains(&tool.as_str()) {
        return Err(AgentError::UnknownTool(tool));
    }
    let args = parse_action_input(raw_input)?;
    let sys_of = |reg: &Registry| system_arg(&args, reg, ("sys", "num", "den"));
    match tool.as_str() {
        "tf" => {
            if !args.has("num") {
                return Err(missing("num"));
            }
            let g = make_tf(&args.vector("num")?, &args.vector("den").map_err(|_| missing("den"))?)?;
            Ok(register(reg, g.into()))
        }
        "ss" => {
            let ss = state_space_arg(&args)?;
            Ok(register(reg, ss.into()))
        }
        "tf2ss" => {
            let (sys, _) = sys_of(reg)?;
            let ss = sys.to_ss()?;
            Ok(register(reg, ss.into()))
        }
        "ss2tf" => {
            let (sys, _) = sys_of(reg)?;
            let tf = sys.to_tf()?;
            Ok(register(reg, tf.into()))
        }
        "poles" => {
            let (sys, _) = sys_of(reg)?;
            Ok(ToolOutput::text(format!("Poles: {}", fmt_complex_vec(&poles(&sys)?))))
        }
        "zeros" => {
            let (sys, _) = sys_of(reg)?;
            Ok(ToolOutput::text(format!("Zeros: {}", fmt_complex_vec(&zeros(&sys)?))))
        }
        "pzmap" => {
            let (sys, name) = sys_of(reg)?;
            let (p, z) = (poles(&sys)?, zeros(&sys)?);
            let plot = PlotPayload::pole_zero(&p, &z, &name);
            Ok(ToolOutput {
                observation: format!(
                    "Poles: {}, Zeros: {}\n{}",
                    fmt_complex_vec(&p),
                    fmt_complex_vec(&z),
                    plot.placeholder()
                ),
                plot: Some(plot),
                handle: None,
            })
        }
        "is_stable" => {
            let (sys, _) = sys_of(reg)?;
            let r = is_stable(&sys)?;
            let verdict = if r.is_stable {
                "Stable: all poles lie in the open left half plane".to_string()
            } else if r.rhp_pole_count > 0 {
                format!("Unstable: {} pole(s) in the right half plane", r.rhp_pole_count)
            } else {
                "Not asymptotically stable: marginal pole on the imaginary axis".to_string()
            };
            let mut s = format!("{verdict}. Poles: {}", fmt_complex_vec(&r.poles));
            if let Some(n) = r.routh_rhp_count {
                s.push_str(&format!(". Routh-Hurwitz sign changes: {n}"));
            }
            Ok(ToolOutput::text(s))
        }
        "dc_gain" => {
            let (sys, _) = sys_of(reg)?;
            Ok(ToolOutput::text(match dc_gain(&sys)? {
                DcGain::Finite(v) => format!("DC gain: {}", fmt_num(v)),
                DcGain::Infinite => "DC gain: infinite (pole at the origin)".into(),
            }))
        }
        "step_response" | "impulse_response" | "forced_response" => {
            let (sys, name) = sys_of(reg)?;
            let mut grid = time_grid(&args)?;
            let kind = match tool.as_str() {
                "step_response" => TimeResponseKind::Step,
                "impulse_response" => TimeResponseKind::Impulse,
                _ => {
                    let u = args.vector("u").map_err(|_| missing("u"))?;
                    grid.n_points = Some(u.len());
                    grid.u = Some(u);
                    TimeResponseKind::Forced
                }
            };
            let r = time_response(&sys, kind, &grid)?;
            let plot = PlotPayload::time(&r, &name);
            let t_end = r.t.last().copied().unwrap_or(0.0);
            Ok(ToolOutput {
                observation: format!(
                    "{}: {} samples over t = [0, {}] s, final value {}",
                    plot.placeholder(),
                    r.t.len(),
                    fmt_num(t_end),
                    fmt_num(r.final_value())
                ),
                plot: Some(plot),
                handle: None,
            })
        }
        "bode" | "nyquist" => {
            let (sys, name) = sys_of(reg)?;
            let omega = match args.get("omega") {
                Some(_) => Some(args.vector("omega")?),
                None => None,
            };
            let kind = if tool == "bode" { FrequencyResponseKind::Bode } else { FrequencyResponseKind::Nyquist };
            let r = frequency_response(&sys, kind, omega)?;
            let plot = PlotPayload::frequency(&r, &name);
            let mut s = format!(
                "{}: {} samples over w = [{}, {}] rad/s",
                plot.placeholder(),
                r.omega.len(),
                fmt_num(r.omega[0]),
                fmt_num(*r.omega.last().unwrap())
            );
            if !r.nonfinite.is_empty() {
                s.push_str(&format!(", {} non-finite sample(s) at a pole on the axis", r.nonfinite.len()));
            }
            Ok(ToolOutput { observation: s, plot: Some(plot), handle: None })
        }
        "root_locus" => {
            let (sys, name) = sys_of(reg)?;
            let gains = match args.get("gains") {
                Some(_) => Some(args.vector("gains")?),
                None => None,
            };
            let r = root_locus_data(&sys, gains)?;
            let plot = PlotPayload::root_locus(&r, &name);
            Ok(ToolOutput {
                observation: format!(
                    "{}: {} gains, {} branches starting at {}",
                    plot.placeholder(),
                    r.gains.len(),
                    sys.order(),
                    fmt_complex_vec(&r.branches[0])
                ),
                plot: Some(plot),
                handle: None,
            })
        }
        "ctrb" => {
            let (a, b) = pair_arg(&args, reg)?;
            let (c, rank) = controllability_matrix(&a, &b)?;
            let n = a.nrows();
            let verdict = if rank == n { "controllable" } else { "uncontrollable" };
            Ok(ToolOutput::text(format!("Controllability matrix: {}, rank {rank} of {n} ({verdict})", fmt_matrix(&c))))
        }
        "acker" | "place" => {
            let (a, b) = pair_arg(&args, reg)?;
            let (key, _) = args.get_any(&["poles", "p", "desired_poles"]).ok_or_else(|| missing("poles"))?;
            let p = args.complex_vec(key)?;
            let k = if tool == "acker" { acker(&a, &b, &p)? } else { place(&a, &b, &p)? };
            Ok(ToolOutput::text(gain_text(&k)))
        }
        "lqr" => {
            let (a, b) = pair_arg(&args, reg)?;
            let q = args.matrix("Q").map_err(|_| missing("Q"))?;
            let r = args.matrix("R").map_err(|_| missing("R"))?;
            let sol = lqr(&a, &b, &q, &r)?;
            Ok(ToolOutput::text(format!(
                "{}, S = {}, E = {}",
                gain_text(&sol.k),
                fmt_matrix(&sol.s),
                fmt_complex_vec(&sol.e)
            )))
        }
        "closed_loop" => {
            let (sys, _) = sys_of(reg)?;
            let k = args.matrix("K").map_err(|_| missing("K"))?;
            let cl = closed_loop_state_feedback(&sys.to_ss()?, &k)?;
            Ok(register(reg, cl.into()))
        }
        "feedback" | "series" | "parallel" => {
            let (g1, _) = sys_of(reg)?;
            let g1 = g1.to_tf()?;
            let g2 = if args.has("sys2") || args.has("num2") {
                Some(system_arg(&args, reg, ("sys2", "num2", "den2"))?.0.to_tf()?)
            } else if tool == "feedback" {
                None
            } else {
                return Err(missing("sys2"));
            };
            let kind = match tool.as_str() {
                "feedback" => Interconnect::Feedback,
                "series" => Interconnect::Series,
                _ => Interconnect::Parallel,
            };
            let g = interconnect(kind, &g1, g2.as_ref())?;
            Ok(register(reg, g.into()))
        }
        _ => Err(AgentError::UnknownTool(tool)),
    }
}
