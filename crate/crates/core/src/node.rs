use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The ten agents of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Supervisor,
    Planner,
    Retriever,
    Researcher,
    Reasoner,
    Controller,
    Critic,
    Debugger,
    Memory,
    Communicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Deterministic,
    Conditional,
}

impl Node {
    pub const ALL: [Node; 10] = [
        Node::Supervisor,
        Node::Planner,
        Node::Retriever,
        Node::Researcher,
        Node::Reasoner,
        Node::Controller,
        Node::Critic,
        Node::Debugger,
        Node::Memory,
        Node::Communicator,
    ];

    /// Conditional targets of the Supervisor.
    pub const ROUTES: [Node; 5] = [Node::Memory, Node::Planner, Node::Retriever, Node::Researcher, Node::Reasoner];

    pub fn name(self) -> &'static str {
        match self {
            Node::Supervisor => "Supervisor",
            Node::Planner => "Planner",
            Node::Retriever => "Retriever",
            Node::Researcher => "Researcher",
            Node::Reasoner => "Reasoner",
            Node::Controller => "Controller",
            Node::Critic => "Critic",
            Node::Debugger => "Debugger",
            Node::Memory => "Memory",
            Node::Communicator => "Communicator",
        }
    }

    pub fn edge_kind(self) -> EdgeKind {
        match self {
            Node::Supervisor | Node::Critic | Node::Memory => EdgeKind::Conditional,
            _ => EdgeKind::Deterministic,
        }
    }

    /// Successor set. `None` stands for END.
    pub fn successors(self) -> Vec<Option<Node>> {
        match self {
            Node::Supervisor => Node::ROUTES.iter().map(|n| Some(*n)).collect(),
            Node::Planner => vec![Some(Node::Controller)],
            Node::Retriever | Node::Researcher | Node::Reasoner => vec![Some(Node::Planner)],
            Node::Controller => vec![Some(Node::Critic)],
            Node::Critic => vec![Some(Node::Memory), Some(Node::Controller)],
            // Debugger runs nested inside another node and returns to it
            Node::Debugger => vec![Some(Node::Controller)],
            Node::Memory => vec![Some(Node::Communicator), Some(Node::Supervisor)],
            Node::Communicator => vec![None],
        }
    }

    pub fn tool_ids(self) -> &'static [&'static str] {
        match self {
            Node::Supervisor => &[],
            Node::Planner => &["planner_tool"],
            Node::Retriever => &["retriever_tool"],
            Node::Researcher => &["search_tool"],
            Node::Reasoner => &["cot_tool", "tot_tool"],
            Node::Controller => crate::tools::CONTROL_TOOLS,
            Node::Critic => &["critic_tool"],
            Node::Debugger => &["debug_tool"],
            Node::Memory => &["storage_memory_tool", "recall_memory_tool"],
            Node::Communicator => &["human_tool", "text_to_pdf_tool", "text_to_speech_tool", "translate_tool"],
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Node {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Node::ALL.into_iter().find(|n| n.name().eq_ignore_ascii_case(t)).ok_or_else(|| format!("unknown node {t:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_nodes_have_one_successor() {
        for n in Node::ALL {
            if n.edge_kind() == EdgeKind::Deterministic {
                assert_eq!(n.successors().len(), 1, "{n}");
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for n in Node::ALL {
            assert_eq!(n.name().parse::<Node>().unwrap(), n);
        }
        assert!("Nobody".parse::<Node>().is_err());
    }
}
