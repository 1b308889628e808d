//! A supervisor-routed team of LLM agents for linear control engineering.
//!
//! A [`graph::Session`] runs user queries through ten agents (Supervisor,
//! Planner, Retriever, Researcher, Reasoner, Controller, Critic, Debugger,
//! Memory, Communicator). Agents talk to a completion backend in the
//! Thought / Action / Action Input / Observation format and call tools: the
//! control kernel in `agentctl-control` for the Controller, and the
//! retrieval, search, reasoning, critique, memory and delivery tools in
//! [`aux_tools`] for the rest. Every step lands in a [`trace::RunTrace`],
//! which [`metrics`] scores and [`eval`] aggregates over scenario files.
//! [`service`] exposes sessions over HTTP with server-sent events.

pub mod args;
pub mod aux_tools;
pub mod error;
pub mod eval;
pub mod graph;
pub mod llm;
pub mod metrics;
pub mod node;
pub mod planner;
pub mod plot;
pub mod prompt;
pub mod react;
pub mod registry;
pub mod service;
pub mod tools;
pub mod trace;

pub use error::{AgentError, Result};
pub use graph::{run_conversation, Config, Resources, Session};
pub use node::Node;
