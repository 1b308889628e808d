//! Tools of the auxiliary agents.

pub mod corpus;
pub mod critic;
pub mod debug;
pub mod human;
pub mod memory;
pub mod pdf;
pub mod reason;
pub mod search;

pub(crate) use agentctl_control::format::fmt_num as two_decimals;
