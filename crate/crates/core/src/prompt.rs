//! Agent prompt templates and `{placeholder}` rendering.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::{Captures, Regex};

use crate::error::{AgentError, Result};
use crate::node::Node;

pub const SUPERVISOR: &str = include_str!("../prompts/supervisor.txt");
pub const SUPERVISOR_ROUTE: &str = include_str!("../prompts/supervisor_route.txt");
pub const FORMAT_INSTRUCTION: &str = include_str!("../prompts/format.txt");
pub const CONTROLLER: &str = include_str!("../prompts/controller.txt");
pub const PLANNER: &str = include_str!("../prompts/planner.txt");
pub const RETRIEVER: &str = include_str!("../prompts/retriever.txt");
pub const REASONER: &str = include_str!("../prompts/reasoner.txt");
pub const RESEARCHER: &str = include_str!("../prompts/researcher.txt");
pub const RESEARCHER_SUFFIX: &str = include_str!("../prompts/researcher_suffix.txt");
pub const CRITIC: &str = include_str!("../prompts/critic.txt");
pub const DEBUGGER: &str = include_str!("../prompts/debugger.txt");
pub const MEMORY: &str = include_str!("../prompts/memory.txt");
pub const MEMORY_SUFFIX: &str = include_str!("../prompts/memory_suffix.txt");
pub const COMMUNICATOR: &str = include_str!("../prompts/communicator.txt");

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)(?:\[([A-Za-z_][A-Za-z0-9_]*)\])?\}").unwrap());
static FOR_LOOP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)\{%-?\s*for\s+(\w+)\s+in\s+(\w+)\s*-?%\}(.*?)\{%-?\s*endfor\s*-?%\}").unwrap());

/// Values bound into a template.
#[derive(Debug, Clone, Default)]
pub struct Slots {
    text: BTreeMap<String, String>,
    lists: BTreeMap<String, Vec<String>>,
    maps: BTreeMap<String, BTreeMap<String, String>>,
}

impl Slots {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(mut self, key: &str, value: impl Into<String>) -> Self {
        self.text.insert(key.into(), value.into());
        self
    }

    pub fn list(mut self, key: &str, items: Vec<String>) -> Self {
        self.lists.insert(key.into(), items);
        self
    }

    pub fn map(mut self, key: &str, entries: BTreeMap<String, String>) -> Self {
        self.maps.insert(key.into(), entries);
        self
    }

    fn scalar(&self, key: &str) -> Option<String> {
        if let Some(t) = self.text.get(key) {
            return Some(t.clone());
        }
        self.lists.get(key).map(|l| python_list(l))
    }
}

/// `['a', 'b']`
pub fn python_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|i| format!("'{i}'")).collect();
    format!("[{}]", quoted.join(", "))
}

fn substitute(template: &str, slots: &Slots, locals: &BTreeMap<String, String>) -> Result<String> {
    let mut missing = None;
    let out = PLACEHOLDER.replace_all(template, |c: &Captures| {
        let name = &c[1];
        let value = match c.get(2) {
            Some(idx) => {
                let key = locals.get(idx.as_str()).cloned().unwrap_or_else(|| idx.as_str().to_string());
                slots.maps.get(name).and_then(|m| m.get(&key)).cloned()
            }
            None => locals.get(name).cloned().or_else(|| slots.scalar(name)),
        };
        value.unwrap_or_else(|| {
            missing.get_or_insert_with(|| c[0].trim_matches(['{', '}']).to_string());
            String::new()
        })
    });
    match missing {
        Some(m) => Err(AgentError::Template(m)),
        None => Ok(out.into_owned()),
    }
}

/// Renders `template` with exact textual substitution. Supports the single
/// `{%- for x in xs %}...{%- endfor %}` form used by the supervisor prompt.
pub fn render_prompt(template: &str, slots: &Slots) -> Result<String> {
    let template = template.strip_suffix('\n').unwrap_or(template);
    let mut out = String::new();
    let mut last = 0;
    for c in FOR_LOOP.captures_iter(template) {
        let whole = c.get(0).unwrap();
        let before = &template[last..whole.start()];
        out.push_str(&substitute(before.trim_end(), slots, &BTreeMap::new())?);
        let var = c[1].to_string();
        let items = slots.lists.get(&c[2]).ok_or_else(|| AgentError::Template(c[2].to_string()))?;
        let body = c[3].trim_end();
        for item in items {
            let locals = BTreeMap::from([(var.clone(), item.clone())]);
            out.push_str(&substitute(body, slots, &locals)?);
        }
        last = whole.end();
    }
    out.push_str(&substitute(&template[last..], slots, &BTreeMap::new())?);
    Ok(out)
}

/// A rendered completion request body split into system and user parts.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePrompt {
    pub system: String,
    pub user: String,
}

/// Prefix template, its tool slot name, and an optional suffix.
pub fn templates(node: Node) -> (&'static str, &'static str, Option<&'static str>) {
    match node {
        Node::Supervisor => (SUPERVISOR, "tools", None),
        Node::Controller => (CONTROLLER, "tools", None),
        Node::Planner => (PLANNER, "planner_tools", None),
        Node::Retriever => (RETRIEVER, "retriever_tools", None),
        Node::Reasoner => (REASONER, "reasoning_tools", None),
        Node::Researcher => (RESEARCHER, "researcher_tools", Some(RESEARCHER_SUFFIX)),
        Node::Critic => (CRITIC, "critic_tool", None),
        Node::Debugger => (DEBUGGER, "debugger_tools", None),
        Node::Memory => (MEMORY, "memory_tools", Some(MEMORY_SUFFIX)),
        Node::Communicator => (COMMUNICATOR, "communicator_tools", None),
    }
}

/// Prompt for a ReAct node: prefix as system text, format instruction plus
/// suffix as user text.
pub fn node_prompt(node: Node, tool_descriptions: &str, input: &str, scratchpad: &str) -> Result<NodePrompt> {
    let (prefix, slot, suffix) = templates(node);
    let tool_names: Vec<String> = node.tool_ids().iter().map(|s| s.to_string()).collect();
    let mut slots = Slots::new()
        .text(slot, tool_descriptions)
        .list("agent_tools", tool_names)
        .text("input", input)
        .text("agent_scratchpad", scratchpad);
    if node == Node::Planner {
        slots = slots.list("controller_tools", crate::planner::OBJECTIVES.iter().map(|s| s.to_string()).collect());
    }
    let system = render_prompt(prefix, &slots)?;
    let mut user = render_prompt(FORMAT_INSTRUCTION, &slots)?;
    if let Some(s) = suffix {
        user.push_str("\n\n");
        user.push_str(&render_prompt(s, &slots)?);
    }
    Ok(NodePrompt { system, user })
}

/// Supervisor routing prompt over the allowed options.
pub fn supervisor_prompt(options: &[Node], conversation: &str) -> Result<NodePrompt> {
    let members: Vec<String> = Node::ROUTES.iter().map(|n| n.name().to_string()).collect();
    let tools: BTreeMap<String, String> = Node::ROUTES
        .iter()
        .map(|n| (n.name().to_string(), python_list(&n.tool_ids().iter().map(|s| s.to_string()).collect::<Vec<_>>())))
        .collect();
    let slots = Slots::new()
        .list("supervisor_members", members)
        .map("tools", tools)
        .text("conversation", conversation)
        .list("options", options.iter().map(|n| n.name().to_string()).collect());
    Ok(NodePrompt { system: render_prompt(SUPERVISOR, &slots)?, user: render_prompt(SUPERVISOR_ROUTE, &slots)? })
}
