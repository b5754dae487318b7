//! Structured event log.
//!
//! Every observable step of the pipeline appends one event; a run's log is
//! the ordered list of them. Events render to a stable line format so logs
//! can be diffed across runs and parsed back by the auditor and by tests:
//!
//! ```text
//! tick|TAG|src_chain|dst_chain|tx_digest_hex|block_height|extra
//! ```
//!
//! Absent fields render as `-`. `extra` is a space-separated list of `k=v`
//! pairs whose keys are fixed per tag (or `-` when there are none); values
//! never contain spaces, pipes, or `=`.

use crate::types::{ChainId, Hash32};
use std::fmt;
use std::io::{self, Write};

/// The twelve observable pipeline steps.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum StepTag {
    /// Application send call executed on the source chain.
    Send,
    /// Packet assembled and size-checked.
    PktBuilt,
    /// Packet handed down to the source networking layer.
    NetworkNotify,
    /// Relayer told a message needs proving.
    RelayerNotify,
    /// Oracle told a block's header needs shipping (once per block and
    /// destination, however many messages the block carries).
    OracleNotify,
    /// Oracle sampled the header it intends to ship.
    HdrRead,
    /// Relayer fetched an inclusion proof.
    ProofRead,
    /// Destination endpoint stored (or refused) a shipped header.
    HdrStored,
    /// Destination networking layer handed the stored header hash upward.
    HashFwd,
    /// Relayer pushed proofs at a destination endpoint.
    ProofsSubmitted,
    /// Destination endpoint accepted or discarded one submission.
    Verdict,
    /// Message handed to the destination application.
    Delivered,
}

pub const ALL_TAGS: [StepTag; 12] = [
    StepTag::Send,
    StepTag::PktBuilt,
    StepTag::NetworkNotify,
    StepTag::RelayerNotify,
    StepTag::OracleNotify,
    StepTag::HdrRead,
    StepTag::ProofRead,
    StepTag::HdrStored,
    StepTag::HashFwd,
    StepTag::ProofsSubmitted,
    StepTag::Verdict,
    StepTag::Delivered,
];

impl StepTag {
    pub const fn as_str(self) -> &'static str {
        match self {
            StepTag::Send => "SEND",
            StepTag::PktBuilt => "PKT_BUILT",
            StepTag::NetworkNotify => "NETWORK_NOTIFY",
            StepTag::RelayerNotify => "RELAYER_NOTIFY",
            StepTag::OracleNotify => "ORACLE_NOTIFY",
            StepTag::HdrRead => "HDR_READ",
            StepTag::ProofRead => "PROOF_READ",
            StepTag::HdrStored => "HDR_STORED",
            StepTag::HashFwd => "HASH_FWD",
            StepTag::ProofsSubmitted => "PROOFS_SUBMITTED",
            StepTag::Verdict => "VERDICT",
            StepTag::Delivered => "DELIVERED",
        }
    }

    pub fn parse(s: &str) -> Option<StepTag> {
        ALL_TAGS.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for StepTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Event {
    pub tick: u64,
    pub tag: StepTag,
    pub src: Option<ChainId>,
    pub dst: Option<ChainId>,
    pub digest: Option<Hash32>,
    pub height: Option<u64>,
    /// Ordered `k=v` pairs; keys are fixed per tag.
    pub extra: Vec<(&'static str, String)>,
}

impl Event {
    /// Render to the one-line wire format.
    pub fn line(&self) -> String {
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            match v {
                Some(x) => x.to_string(),
                None => "-".to_string(),
            }
        }
        let digest = match &self.digest {
            Some(d) => d.to_hex(),
            None => "-".to_string(),
        };
        let extra = if self.extra.is_empty() {
            "-".to_string()
        } else {
            self.extra
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.tick,
            self.tag,
            opt(&self.src),
            opt(&self.dst),
            digest,
            opt(&self.height),
            extra,
        )
    }

    /// Parse one log line back into an event. Extra keys survive as owned
    /// strings matched back to the static key table.
    pub fn parse(line: &str) -> Option<Event> {
        let mut parts = line.split('|');
        let tick = parts.next()?.parse().ok()?;
        let tag = StepTag::parse(parts.next()?)?;
        let src = parse_opt(parts.next()?, |s| s.parse().ok().map(ChainId))?;
        let dst = parse_opt(parts.next()?, |s| s.parse().ok().map(ChainId))?;
        let digest = parse_opt(parts.next()?, Hash32::from_hex)?;
        let height = parse_opt(parts.next()?, |s| s.parse().ok())?;
        let extra_field = parts.next()?;
        if parts.next().is_some() {
            return None;
        }
        let mut extra = Vec::new();
        if extra_field != "-" {
            for pair in extra_field.split(' ') {
                let (k, v) = pair.split_once('=')?;
                let k = KNOWN_EXTRA_KEYS.iter().find(|&&known| known == k)?;
                extra.push((*k, v.to_string()));
            }
        }
        Some(Event { tick, tag, src, dst, digest, height, extra })
    }

    /// Value of an extra key, if present.
    pub fn extra_get(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }
}

/// Every extra key any tag emits; parsing interns into this table.
const KNOWN_EXTRA_KEYS: [&str; 13] = [
    "sender",
    "payload_len",
    "dst_addr",
    "payee",
    "max_fee",
    "header_hash",
    "scheme",
    "stored",
    "count",
    "digests",
    "verdict",
    "reason",
    "detail",
];

fn parse_opt<T>(s: &str, f: impl FnOnce(&str) -> Option<T>) -> Option<Option<T>> {
    if s == "-" {
        Some(None)
    } else {
        f(s).map(Some)
    }
}

/// Append-only event sink for one run.
#[derive(Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> EventLog {
        EventLog::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events with a given tag, in log order.
    pub fn with_tag(&self, tag: StepTag) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.tag == tag)
    }

    /// Render the whole log, one line per event, trailing newline included.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.line());
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(self.render().as_bytes())
    }
}
