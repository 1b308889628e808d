//! Reply channels for questions put to the user mid-run.

use std::collections::VecDeque;
use std::io::BufRead;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use crate::error::{AgentError, Result};

pub const DEFAULT_TIMEOUT_SECS: u64 = 300;

#[derive(Debug, Default)]
struct Slot {
    pending: Option<String>,
    reply: Option<String>,
}

/// Rendezvous between a blocked run and a client answering over HTTP.
#[derive(Debug, Clone, Default)]
pub struct ReplySlot(Arc<(Mutex<Slot>, Condvar)>);

impl ReplySlot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pending(&self) -> Option<String> {
        self.0 .0.lock().unwrap().pending.clone()
    }

    /// Delivers `reply` to the waiting run.
    pub fn answer(&self, reply: &str) -> std::result::Result<(), ()> {
        let (lock, cv) = &*self.0;
        let mut slot = lock.lock().unwrap();
        if slot.pending.is_none() || slot.reply.is_some() {
            return Err(());
        }
        slot.reply = Some(reply.to_string());
        cv.notify_all();
        Ok(())
    }

    fn ask(&self, question: &str, timeout: Duration) -> Result<String> {
        let (lock, cv) = &*self.0;
        let mut slot = lock.lock().unwrap();
        slot.pending = Some(question.to_string());
        slot.reply = None;
        let (mut slot, res) = cv.wait_timeout_while(slot, timeout, |s| s.reply.is_none()).unwrap();
        slot.pending = None;
        if res.timed_out() && slot.reply.is_none() {
            return Err(AgentError::HumanTimeout(timeout.as_secs()));
        }
        Ok(slot.reply.take().unwrap_or_default())
    }
}

#[derive(Debug, Clone)]
pub enum HumanChannel {
    /// Harness mode: answers are consumed in order.
    Scripted(Arc<Mutex<VecDeque<String>>>),
    /// Interactive terminal.
    Stdin { timeout: Duration },
    /// Service mode: the question is published and a client answers.
    Service { slot: ReplySlot, timeout: Duration },
}

impl HumanChannel {
    pub fn scripted<I: IntoIterator<Item = S>, S: Into<String>>(replies: I) -> Self {
        HumanChannel::Scripted(Arc::new(Mutex::new(replies.into_iter().map(Into::into).collect())))
    }

    pub fn ask(&self, question: &str) -> Result<String> {
        match self {
            HumanChannel::Scripted(q) => {
                q.lock().unwrap().pop_front().ok_or_else(|| AgentError::MissingScriptedReply(question.to_string()))
            }
            HumanChannel::Stdin { timeout } => {
                eprintln!("{question}");
                let (tx, rx) = std::sync::mpsc::channel();
                std::thread::spawn(move || {
                    let mut line = String::new();
                    let _ = std::io::stdin().lock().read_line(&mut line);
                    let _ = tx.send(line);
                });
                rx.recv_timeout(*timeout)
                    .map(|l| l.trim().to_string())
                    .map_err(|_| AgentError::HumanTimeout(timeout.as_secs()))
            }
            HumanChannel::Service { slot, timeout } => slot.ask(question, *timeout),
        }
    }
}
