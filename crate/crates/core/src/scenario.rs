//! Scenario files: the text format describing one simulation run.
//!
//! A scenario is an INI-flavored document. `[scenario]` names the run and
//! sets its length and default seed; one `[chain N]` section per simulated
//! chain configures depth and proof scheme; `[oracle]` / `[relayer]` pick
//! agent modes; an optional `[bridge]` wires the lock/mint demo; `[script]`
//! lists timed actions:
//!
//! ```text
//! [scenario]
//! name = two_chain_ping
//! ticks = 120
//! seed = 7
//!
//! [chain 1]
//! depth = 15
//! scheme = binary_merkle
//!
//! [chain 2]
//! depth = 15
//! scheme = merkle_patricia
//!
//! [oracle]
//! mode = honest
//!
//! [relayer]
//! mode = honest
//!
//! [script]
//! @1 send(src=1, dst=2, sender=alice, payload=deadbeef)
//! @2 mine(chain=1, count=16)
//! ```
//!
//! `#` starts a comment. Senders, recipients, and bridge users are labels;
//! their addresses derive from the run seed, so a scenario is reproducible
//! from (file, seed) alone. Payloads are either literal hex (`payload=`) or
//! seed-derived bytes of a given length (`payload_len=`).

use crate::agents::{OracleMode, RelayerMode};
use crate::chain::DEFAULT_CONFIRMATION_DEPTH;
use crate::packet::DEFAULT_MAX_PAYLOAD;
use crate::proof::ProofScheme;
use crate::types::ChainId;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub name: String,
    pub ticks: u64,
    pub seed: u64,
    pub chains: Vec<ChainConfig>,
    pub oracle_mode: OracleMode,
    pub relayer_mode: RelayerMode,
    pub bridge: Option<BridgeConfig>,
    pub script: Vec<ScriptEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainConfig {
    pub id: ChainId,
    pub depth: u64,
    pub scheme: ProofScheme,
    pub max_payload: usize,
}

impl ChainConfig {
    pub fn new(id: ChainId) -> ChainConfig {
        ChainConfig {
            id,
            depth: DEFAULT_CONFIRMATION_DEPTH,
            scheme: ProofScheme::BinaryMerkle,
            max_payload: DEFAULT_MAX_PAYLOAD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeConfig {
    pub src: ChainId,
    pub dst: ChainId,
    /// (user label, amount) pairs funded on the source chain.
    pub funds: Vec<(String, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptEntry {
    pub tick: u64,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PayloadSpec {
    /// Literal bytes.
    Hex(Vec<u8>),
    /// Seed-derived bytes of this length.
    Derived(usize),
}

impl PayloadSpec {
    pub fn len(&self) -> usize {
        match self {
            PayloadSpec::Hex(b) => b.len(),
            PayloadSpec::Derived(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// Submit one message-bearing transaction to the source chain's mempool.
    Send {
        src: ChainId,
        dst: ChainId,
        sender: String,
        /// Receiving address label on the destination chain.
        to: String,
        payload: PayloadSpec,
        max_fee: u64,
    },
    /// Mine `count` blocks from the mempool.
    Mine { chain: ChainId, count: u64 },
    /// Replace the canonical suffix from `fork_height` with a branch
    /// `extend` blocks longer than what it displaces.
    Reorg { chain: ChainId, fork_height: u64, extend: u64, keep_txs: bool },
    /// Escrow bridge funds and submit the mint-instruction message.
    BridgeLock { user: String, amount: u64, recipient: String },
    /// Fire a coordinated fabrication attempt at the configured agents.
    /// With `mint`, the forged payload is a bridge mint instruction.
    ForgeCollude { src: ChainId, dst: ChainId, height: u64, mint: Option<u64> },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ScenarioError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError { line, msg: msg.into() })
}

/// Section currently being filled while parsing.
enum Section {
    None,
    Scenario,
    Chain(usize),
    Oracle,
    Relayer,
    Bridge,
    Script,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        let mut name: Option<String> = None;
        let mut ticks: Option<u64> = None;
        let mut seed = 0u64;
        let mut chains: Vec<ChainConfig> = Vec::new();
        let mut oracle_mode = OracleMode::Honest;
        let mut relayer_mode = RelayerMode::Honest;
        let mut bridge: Option<BridgeConfig> = None;
        let mut script: Vec<ScriptEntry> = Vec::new();
        let mut section = Section::None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }

            if let Some(header) = line.strip_prefix('[') {
                let Some(header) = header.strip_suffix(']') else {
                    return err(line_no, "unterminated section header");
                };
                section = match header.trim() {
                    "scenario" => Section::Scenario,
                    "oracle" => Section::Oracle,
                    "relayer" => Section::Relayer,
                    "bridge" => {
                        if bridge.is_some() {
                            return err(line_no, "duplicate [bridge] section");
                        }
                        bridge = Some(BridgeConfig {
                            src: ChainId(0),
                            dst: ChainId(0),
                            funds: Vec::new(),
                        });
                        Section::Bridge
                    }
                    "script" => Section::Script,
                    other => match other.strip_prefix("chain ") {
                        Some(id_str) => {
                            let id = parse_chain_id(id_str.trim(), line_no)?;
                            if chains.iter().any(|c| c.id == id) {
                                return err(line_no, format!("duplicate [chain {id}] section"));
                            }
                            chains.push(ChainConfig::new(id));
                            Section::Chain(chains.len() - 1)
                        }
                        None => return err(line_no, format!("unknown section [{other}]")),
                    },
                };
                continue;
            }

            match section {
                Section::None => return err(line_no, "content before any section header"),
                Section::Script => script.push(parse_script_line(line, line_no)?),
                _ => {
                    let Some((key, value)) = line.split_once('=') else {
                        return err(line_no, "expected key = value");
                    };
                    let key = key.trim();
                    let value = value.trim();
                    match section {
                        Section::Scenario => match key {
                            "name" => {
                                if value.is_empty() || value.contains(char::is_whitespace) {
                                    return err(line_no, "name must be one non-empty word");
                                }
                                name = Some(value.to_string());
                            }
                            "ticks" => ticks = Some(parse_num(value, "ticks", line_no)?),
                            "seed" => seed = parse_num(value, "seed", line_no)?,
                            _ => return err(line_no, format!("unknown [scenario] key `{key}`")),
                        },
                        Section::Chain(i) => {
                            let chain = &mut chains[i];
                            match key {
                                "depth" => chain.depth = parse_num(value, "depth", line_no)?,
                                "scheme" => {
                                    chain.scheme = ProofScheme::parse(value).ok_or_else(|| {
                                        ScenarioError {
                                            line: line_no,
                                            msg: format!("unknown proof scheme `{value}`"),
                                        }
                                    })?
                                }
                                "max_payload" => {
                                    chain.max_payload =
                                        parse_num::<u64>(value, "max_payload", line_no)? as usize
                                }
                                _ => return err(line_no, format!("unknown [chain] key `{key}`")),
                            }
                        }
                        Section::Oracle => match key {
                            "mode" => {
                                oracle_mode = OracleMode::parse(value).ok_or_else(|| ScenarioError {
                                    line: line_no,
                                    msg: format!("unknown oracle mode `{value}`"),
                                })?
                            }
                            _ => return err(line_no, format!("unknown [oracle] key `{key}`")),
                        },
                        Section::Relayer => match key {
                            "mode" => {
                                relayer_mode =
                                    RelayerMode::parse(value).ok_or_else(|| ScenarioError {
                                        line: line_no,
                                        msg: format!("unknown relayer mode `{value}`"),
                                    })?
                            }
                            _ => return err(line_no, format!("unknown [relayer] key `{key}`")),
                        },
                        Section::Bridge => {
                            let b = bridge.as_mut().expect("section implies presence");
                            match key {
                                "src" => b.src = parse_chain_id(value, line_no)?,
                                "dst" => b.dst = parse_chain_id(value, line_no)?,
                                "fund" => {
                                    let Some((label, amount)) = value.split_once(':') else {
                                        return err(line_no, "fund takes label:amount");
                                    };
                                    let amount = parse_num(amount.trim(), "fund amount", line_no)?;
                                    b.funds.push((label.trim().to_string(), amount));
                                }
                                _ => return err(line_no, format!("unknown [bridge] key `{key}`")),
                            }
                        }
                        Section::None | Section::Script => unreachable!("handled above"),
                    }
                }
            }
        }

        let Some(name) = name else {
            return err(0, "missing [scenario] name");
        };
        let Some(ticks) = ticks else {
            return err(0, "missing [scenario] ticks");
        };
        let config = ScenarioConfig {
            name,
            ticks,
            seed,
            chains,
            oracle_mode,
            relayer_mode,
            bridge,
            script,
        };
        config.validate().map_err(|msg| ScenarioError { line: 0, msg })?;
        Ok(config)
    }

    /// Cross-reference checks shared by parsed and generated configs.
    pub fn validate(&self) -> Result<(), String> {
        if self.ticks == 0 {
            return Err("ticks must be at least 1".into());
        }
        if self.chains.is_empty() {
            return Err("at least one [chain] section is required".into());
        }
        let ids: BTreeSet<ChainId> = self.chains.iter().map(|c| c.id).collect();
        for c in &self.chains {
            if c.depth == 0 {
                return Err(format!("chain {}: depth must be at least 1", c.id));
            }
        }
        if let Some(b) = &self.bridge {
            if !ids.contains(&b.src) || !ids.contains(&b.dst) {
                return Err("bridge references an unknown chain".into());
            }
            if b.src == b.dst {
                return Err("bridge src and dst must differ".into());
            }
        }
        for entry in &self.script {
            if entry.tick >= self.ticks {
                return Err(format!(
                    "action at tick {} never runs: scenario stops after tick {}",
                    entry.tick,
                    self.ticks - 1
                ));
            }
            let check = |id: ChainId| -> Result<(), String> {
                if ids.contains(&id) {
                    Ok(())
                } else {
                    Err(format!("script references unknown chain {id}"))
                }
            };
            match &entry.action {
                Action::Send { src, dst, payload, .. } => {
                    check(*src)?;
                    check(*dst)?;
                    if src == dst {
                        return Err("send src and dst must differ".into());
                    }
                    let max = self.chains.iter().find(|c| c.id == *src).expect("checked").max_payload;
                    if payload.len() > max {
                        return Err(format!(
                            "send payload of {} bytes exceeds chain {src} limit {max}",
                            payload.len()
                        ));
                    }
                }
                Action::Mine { chain, count } => {
                    check(*chain)?;
                    if *count == 0 {
                        return Err("mine count must be at least 1".into());
                    }
                }
                Action::Reorg { chain, fork_height, extend, .. } => {
                    check(*chain)?;
                    if *fork_height == 0 {
                        return Err("reorg fork_height must be at least 1".into());
                    }
                    if *extend == 0 {
                        return Err("reorg extend must be at least 1".into());
                    }
                }
                Action::BridgeLock { .. } => {
                    if self.bridge.is_none() {
                        return Err("bridge_lock requires a [bridge] section".into());
                    }
                }
                Action::ForgeCollude { src, dst, mint, .. } => {
                    check(*src)?;
                    check(*dst)?;
                    if src == dst {
                        return Err("forge_collude src and dst must differ".into());
                    }
                    if mint.is_some() && self.bridge.is_none() {
                        return Err("forge_collude mint requires a [bridge] section".into());
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T, ScenarioError> {
    s.parse().map_err(|_| ScenarioError { line, msg: format!("invalid {what} `{s}`") })
}

fn parse_chain_id(s: &str, line: usize) -> Result<ChainId, ScenarioError> {
    Ok(ChainId(parse_num(s, "chain id", line)?))
}

/// Parse one `@tick action(k=v, ...)` line.
fn parse_script_line(line: &str, line_no: usize) -> Result<ScriptEntry, ScenarioError> {
    let Some(rest) = line.strip_prefix('@') else {
        return err(line_no, "script lines start with @tick");
    };
    let Some((tick_str, call)) = rest.split_once(char::is_whitespace) else {
        return err(line_no, "expected an action after the tick");
    };
    let tick = parse_num(tick_str, "tick", line_no)?;
    let call = call.trim();
    let Some((action_name, args_str)) = call.split_once('(') else {
        return err(line_no, "expected action(args)");
    };
    let Some(args_str) = args_str.strip_suffix(')') else {
        return err(line_no, "unterminated action arguments");
    };

    let mut args: Vec<(&str, &str)> = Vec::new();
    for piece in args_str.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let Some((k, v)) = piece.split_once('=') else {
            return err(line_no, format!("argument `{piece}` is not k=v"));
        };
        args.push((k.trim(), v.trim()));
    }
    let get = |key: &str| -> Option<&str> {
        args.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    };
    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut required = |key: &'static str| -> Result<&str, ScenarioError> {
        used.insert(key);
        match args.iter().find(|(k, _)| *k == key) {
            Some((_, v)) => Ok(v),
            None => err(line_no, format!("{action_name} requires `{key}=`")),
        }
    };

    let action = match action_name.trim() {
        "send" => {
            let src = parse_chain_id(required("src")?, line_no)?;
            let dst = parse_chain_id(required("dst")?, line_no)?;
            let sender = required("sender")?.to_string();
            used.extend(["to", "payload", "payload_len", "max_fee"]);
            let to = get("to").unwrap_or("inbox").to_string();
            let payload = match (get("payload"), get("payload_len")) {
                (Some(hexstr), None) => PayloadSpec::Hex(hex::decode(hexstr).map_err(|_| {
                    ScenarioError { line: line_no, msg: format!("invalid payload hex `{hexstr}`") }
                })?),
                (None, Some(n)) => PayloadSpec::Derived(parse_num::<u64>(n, "payload_len", line_no)? as usize),
                (None, None) => PayloadSpec::Derived(32),
                (Some(_), Some(_)) => {
                    return err(line_no, "give payload= or payload_len=, not both")
                }
            };
            let max_fee = match get("max_fee") {
                Some(v) => parse_num(v, "max_fee", line_no)?,
                None => 100,
            };
            Action::Send { src, dst, sender, to, payload, max_fee }
        }
        "mine" => {
            let chain = parse_chain_id(required("chain")?, line_no)?;
            used.insert("count");
            let count = match get("count") {
                Some(v) => parse_num(v, "count", line_no)?,
                None => 1,
            };
            Action::Mine { chain, count }
        }
        "reorg" => {
            let chain = parse_chain_id(required("chain")?, line_no)?;
            let fork_height = parse_num(required("fork_height")?, "fork_height", line_no)?;
            let extend = parse_num(required("extend")?, "extend", line_no)?;
            used.insert("keep_txs");
            let keep_txs = match get("keep_txs") {
                Some("true") | None => true,
                Some("false") => false,
                Some(v) => return err(line_no, format!("keep_txs must be true or false, got `{v}`")),
            };
            Action::Reorg { chain, fork_height, extend, keep_txs }
        }
        "bridge_lock" => {
            let user = required("user")?.to_string();
            let amount = parse_num(required("amount")?, "amount", line_no)?;
            used.insert("recipient");
            let recipient = get("recipient").unwrap_or(&user).to_string();
            Action::BridgeLock { user, amount, recipient }
        }
        "forge_collude" => {
            let src = parse_chain_id(required("src")?, line_no)?;
            let dst = parse_chain_id(required("dst")?, line_no)?;
            let height = parse_num(required("height")?, "height", line_no)?;
            used.insert("mint");
            let mint = match get("mint") {
                Some(v) => Some(parse_num(v, "mint", line_no)?),
                None => None,
            };
            Action::ForgeCollude { src, dst, height, mint }
        }
        other => return err(line_no, format!("unknown action `{other}`")),
    };

    if let Some((stray, _)) = args.iter().find(|(k, _)| !used.contains(k)) {
        return err(line_no, format!("{action_name} does not take `{stray}=`"));
    }
    Ok(ScriptEntry { tick, action })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# A complete scenario exercising every section.
[scenario]
name = full_example
ticks = 100
seed = 9

[chain 1]
depth = 3
scheme = binary_merkle

[chain 2]
depth = 4
scheme = merkle_patricia
max_payload = 1024

[oracle]
mode = collude

[relayer]
mode = collude

[bridge]
src = 1
dst = 2
fund = alice:1000
fund = bob:50

[script]
@1 bridge_lock(user=alice, amount=250, recipient=bob)
@2 send(src=1, dst=2, sender=alice, payload=deadbeef)   # trailing comment
@3 send(src=2, dst=1, sender=bob, payload_len=16, max_fee=7)
@4 mine(chain=1, count=8)
@5 mine(chain=2)
@20 reorg(chain=1, fork_height=2, extend=1, keep_txs=false)
@30 forge_collude(src=1, dst=2, height=29, mint=500)
";

    #[test]
    fn full_scenario_parses() {
        let c = ScenarioConfig::parse(FULL).unwrap();
        assert_eq!(c.name, "full_example");
        assert_eq!(c.ticks, 100);
        assert_eq!(c.seed, 9);
        assert_eq!(c.chains.len(), 2);
        assert_eq!(c.chains[0].depth, 3);
        assert_eq!(c.chains[1].scheme, ProofScheme::MerklePatricia);
        assert_eq!(c.chains[1].max_payload, 1024);
        assert_eq!(c.oracle_mode, OracleMode::Collude);
        assert_eq!(c.relayer_mode, RelayerMode::Collude);
        let b = c.bridge.as_ref().unwrap();
        assert_eq!(b.funds, vec![("alice".to_string(), 1000), ("bob".to_string(), 50)]);
        assert_eq!(c.script.len(), 7);
        assert_eq!(
            c.script[1].action,
            Action::Send {
                src: ChainId(1),
                dst: ChainId(2),
                sender: "alice".into(),
                to: "inbox".into(),
                payload: PayloadSpec::Hex(vec![0xDE, 0xAD, 0xBE, 0xEF]),
                max_fee: 100,
            }
        );
        assert_eq!(c.script[3].action, Action::Mine { chain: ChainId(1), count: 8 });
        assert_eq!(c.script[4].action, Action::Mine { chain: ChainId(2), count: 1 });
        assert_eq!(
            c.script[6].action,
            Action::ForgeCollude { src: ChainId(1), dst: ChainId(2), height: 29, mint: Some(500) }
        );
    }

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::parse(
            "[scenario]\nname = tiny\nticks = 10\n[chain 1]\n[chain 2]\n",
        )
        .unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.chains[0].depth, DEFAULT_CONFIRMATION_DEPTH);
        assert_eq!(c.chains[0].scheme, ProofScheme::BinaryMerkle);
        assert_eq!(c.chains[0].max_payload, DEFAULT_MAX_PAYLOAD);
        assert_eq!(c.oracle_mode, OracleMode::Honest);
        assert_eq!(c.relayer_mode, RelayerMode::Honest);
        assert!(c.bridge.is_none());
        assert!(c.script.is_empty());
    }

    /// Each bad input and the line it is reported on.
    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases: &[(&str, usize, &str)] = &[
            ("key = value\n", 1, "content before any section header"),
            ("[scenario\n", 1, "unterminated section header"),
            ("[what]\n", 1, "unknown section"),
            ("[scenario]\nname = has space\n", 2, "one non-empty word"),
            ("[scenario]\nticks = ten\n", 2, "invalid ticks"),
            ("[scenario]\nname = x\nticks = 1\n[chain 1]\nscheme = sha_tree\n", 5, "unknown proof scheme"),
            ("[scenario]\nname = x\nticks = 1\n[chain 1]\n[chain 1]\n", 5, "duplicate [chain 1]"),
            ("[scenario]\nname = x\nticks = 1\n[oracle]\nmode = asleep\n", 5, "unknown oracle mode"),
            ("[scenario]\nname = x\nticks = 9\n[chain 1]\n[script]\nsend(src=1)\n", 6, "start with @tick"),
            ("[scenario]\nname = x\nticks = 9\n[chain 1]\n[script]\n@1 warp(to=5)\n", 6, "unknown action"),
            ("[scenario]\nname = x\nticks = 9\n[chain 1]\n[script]\n@1 mine(chain=1, speed=9)\n", 6, "does not take `speed="),
            ("[scenario]\nname = x\nticks = 9\n[chain 1]\n[script]\n@1 mine()\n", 6, "requires `chain="),
        ];
        for (text, line, needle) in cases {
            let e = ScenarioConfig::parse(text).unwrap_err();
            assert_eq!(e.line, *line, "for input {text:?}: {e}");
            assert!(e.msg.contains(needle), "error `{e}` should mention `{needle}`");
        }
    }

    #[test]
    fn validation_rejects_cross_reference_mistakes() {
        let cases: &[(&str, &str)] = &[
            ("[scenario]\nname = x\nticks = 1\n", "at least one [chain]"),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\n[script]\n@1 send(src=1, dst=2, sender=a)\n",
                "unknown chain 2",
            ),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\n[chain 2]\n[script]\n@9 mine(chain=1)\n",
                "never runs",
            ),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\n[chain 2]\n[script]\n@1 send(src=1, dst=1, sender=a)\n",
                "must differ",
            ),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\n[bridge]\nsrc = 1\ndst = 9\n",
                "unknown chain",
            ),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\n[chain 2]\n[script]\n@1 bridge_lock(user=a, amount=1)\n",
                "requires a [bridge]",
            ),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\n[chain 2]\n[script]\n@1 reorg(chain=1, fork_height=0, extend=1)\n",
                "fork_height",
            ),
            (
                "[scenario]\nname = x\nticks = 5\n[chain 1]\nmax_payload = 4\n[chain 2]\n[script]\n@1 send(src=1, dst=2, sender=a, payload_len=5)\n",
                "exceeds chain 1 limit",
            ),
        ];
        for (text, needle) in cases {
            let e = ScenarioConfig::parse(text).unwrap_err();
            assert!(e.msg.contains(needle), "error `{e}` should mention `{needle}`");
        }
    }

    #[test]
    fn payload_forms_are_mutually_exclusive() {
        let text = "[scenario]\nname = x\nticks = 5\n[chain 1]\n[chain 2]\n[script]\n@1 send(src=1, dst=2, sender=a, payload=ff, payload_len=2)\n";
        let e = ScenarioConfig::parse(text).unwrap_err();
        assert!(e.msg.contains("not both"));
    }
}
