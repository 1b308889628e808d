//! Session-scoped store of systems, addressed as `sys [k]`.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use agentctl_control::LinearSystem;
use regex::Regex;

use crate::error::{AgentError, Result};

static HANDLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*sys\s*\[?\s*(\d+)\s*\]?\s*$").unwrap());

#[derive(Debug, Clone, Default)]
pub struct Registry {
    next: usize,
    objects: BTreeMap<usize, LinearSystem>,
    last: Option<usize>,
}

pub fn handle_name(k: usize) -> String {
    format!("sys [{k}]")
}

/// Index in `sys7`, `sys [7]` or `sys[7]`.
pub fn parse_handle(text: &str) -> Option<usize> {
    HANDLE.captures(text).and_then(|c| c[1].parse().ok())
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `sys` under a fresh handle and returns it.
    pub fn insert(&mut self, sys: LinearSystem) -> String {
        let k = self.next;
        self.next += 1;
        self.objects.insert(k, sys);
        self.last = Some(k);
        handle_name(k)
    }

    pub fn get(&self, handle: &str) -> Result<&LinearSystem> {
        let k =
            parse_handle(handle).ok_or_else(|| AgentError::arg(format!("{handle:?} is not a system handle"), 0, 0))?;
        self.objects.get(&k).ok_or_else(|| AgentError::arg(format!("no system named {}", handle_name(k)), 0, 0))
    }

    pub fn last_handle(&self) -> Option<String> {
        self.last.map(handle_name)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use agentctl_control::make_tf;

    #[test]
    fn handles_are_monotonic_and_resolvable() {
        let mut r = Registry::new();
        let g: LinearSystem = make_tf(&[1.0], &[1.0, 1.0]).unwrap().into();
        assert_eq!(r.insert(g.clone()), "sys [0]");
        assert_eq!(r.insert(g.clone()), "sys [1]");
        for form in ["sys1", "sys [1]", "sys[1]", " sys [ 1 ] "] {
            assert_eq!(r.get(form).unwrap(), &g);
        }
        assert!(r.get("sys9").is_err());
        assert!(r.get("plant").is_err());
        assert_eq!(r.last_handle().as_deref(), Some("sys [1]"));
    }
}
