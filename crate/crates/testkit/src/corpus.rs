//! Seeded generator of randomized scenario configurations.
//!
//! Every scenario is a pure function of `(master_seed, index)`, so a failing
//! index can be replayed in isolation. Two families:
//!
//! * [`honest_scenario`] — honest agents, 2–4 chains, 1–50 messages in
//!   bursts, optional reorgs, and enough trailing mining to clear every
//!   confirmation gate. Such a run must deliver every message it sends.
//! * [`adversarial_scenario`] — the same skeleton with exactly one
//!   misbehaving side (withholding or forging oracle; withholding, forging,
//!   or replaying relayer). Such a run may stall but must stay sound, and
//!   its delivery count is exactly predictable per mode.
//!
//! Reorgs are generated so that honest liveness is never at risk: either
//! they rebuild the same transactions (pure chain extension), or they drop
//! only blocks above the chain's last message-bearing height, which hold
//! nothing but churn.

use omnirelay_core::agents::{OracleMode, RelayerMode};
use omnirelay_core::scenario::{
    Action, ChainConfig, PayloadSpec, ScenarioConfig, ScriptEntry,
};
use omnirelay_core::proof::ProofScheme;
use omnirelay_core::types::ChainId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SENDERS: [&str; 4] = ["alice", "bob", "carol", "dave"];

/// All-honest run: the audit must show every send delivered, no misses,
/// no violations.
pub fn honest_scenario(master_seed: u64, index: u64) -> ScenarioConfig {
    let mut rng = rng_for(master_seed, index, b"honest");
    build(&mut rng, format!("honest_{index}"), OracleMode::Honest, RelayerMode::Honest)
}

/// One-sided adversary run: same shape, but one agent misbehaves. The audit
/// must show zero soundness violations whatever happens to liveness.
pub fn adversarial_scenario(master_seed: u64, index: u64) -> ScenarioConfig {
    let mut rng = rng_for(master_seed, index, b"adversary");
    let (oracle, relayer, tag) = match rng.gen_range(0..5u8) {
        0 => (OracleMode::Withhold, RelayerMode::Honest, "silent_oracle"),
        1 => (OracleMode::ForgeHeader, RelayerMode::Honest, "lying_oracle"),
        2 => (OracleMode::Honest, RelayerMode::Withhold, "silent_relayer"),
        3 => (OracleMode::Honest, RelayerMode::ForgeProof, "lying_relayer"),
        _ => (OracleMode::Honest, RelayerMode::Replay, "echoing_relayer"),
    };
    build(&mut rng, format!("{tag}_{index}"), oracle, relayer)
}

/// How many deliveries this configuration must produce: every send when
/// both sides behave (a replaying relayer still gets each message through
/// once), none when either side withholds or forges.
pub fn expected_deliveries(config: &ScenarioConfig) -> u64 {
    let sends = config
        .script
        .iter()
        .filter(|e| matches!(e.action, Action::Send { .. }))
        .count() as u64;
    let full = matches!(
        (config.oracle_mode, config.relayer_mode),
        (OracleMode::Honest, RelayerMode::Honest | RelayerMode::Replay)
    );
    if full {
        sends
    } else {
        0
    }
}

fn rng_for(master_seed: u64, index: u64, family: &[u8]) -> ChaCha8Rng {
    // Distinct streams per family and index under one master seed.
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_be_bytes());
    key[8..16].copy_from_slice(&index.to_be_bytes());
    key[16..16 + family.len().min(16)].copy_from_slice(&family[..family.len().min(16)]);
    ChaCha8Rng::from_seed(key)
}

struct ChainState {
    config: ChainConfig,
    /// Canonical height after the actions generated so far.
    height: u64,
    /// Highest block that may hold a message; unsafe reorgs stay above it.
    last_message_height: u64,
    /// Whether any message was sent from this chain (it then needs mining).
    used_as_source: bool,
}

fn build(
    rng: &mut ChaCha8Rng,
    name: String,
    oracle_mode: OracleMode,
    relayer_mode: RelayerMode,
) -> ScenarioConfig {
    let chain_count = rng.gen_range(2..=4u16);
    let mut chains: Vec<ChainState> = (1..=chain_count)
        .map(|id| {
            let mut config = ChainConfig::new(ChainId(id));
            config.depth = rng.gen_range(2..=5);
            config.scheme = if rng.gen_bool(0.5) {
                ProofScheme::BinaryMerkle
            } else {
                ProofScheme::MerklePatricia
            };
            ChainState { config, height: 0, last_message_height: 0, used_as_source: false }
        })
        .collect();

    let mut script: Vec<ScriptEntry> = Vec::new();
    let mut tick = 1u64;
    let push = |script: &mut Vec<ScriptEntry>, tick: u64, action: Action| {
        script.push(ScriptEntry { tick, action });
    };

    // Message phase: bursts of sends, each followed by mining on the chains
    // that just accepted messages into their mempools.
    let mut remaining = rng.gen_range(1..=50u32);
    while remaining > 0 {
        let burst = rng.gen_range(1..=remaining.min(5));
        let mut sources: Vec<usize> = Vec::new();
        for _ in 0..burst {
            let src = rng.gen_range(0..chains.len());
            let dst = loop {
                let d = rng.gen_range(0..chains.len());
                if d != src {
                    break d;
                }
            };
            push(
                &mut script,
                tick,
                Action::Send {
                    src: chains[src].config.id,
                    dst: chains[dst].config.id,
                    sender: SENDERS[rng.gen_range(0..SENDERS.len())].to_string(),
                    to: "inbox".to_string(),
                    payload: PayloadSpec::Derived(rng.gen_range(1..=64)),
                    max_fee: rng.gen_range(1..=1000),
                },
            );
            if !sources.contains(&src) {
                sources.push(src);
            }
        }
        remaining -= burst;
        tick += 1;
        sources.sort_unstable();
        for src in sources {
            push(&mut script, tick, Action::Mine { chain: chains[src].config.id, count: 1 });
            chains[src].height += 1;
            chains[src].last_message_height = chains[src].height;
            chains[src].used_as_source = true;
        }
        tick += rng.gen_range(1..=3);
    }

    // Optional reorg phase: late enough that liveness cannot be harmed,
    // and never displacing more than depth − 1 blocks — deeper reorgs are
    // outside the protocol's stability assumption.
    if rng.gen_bool(0.5) {
        let idx = rng.gen_range(0..chains.len());
        let id = chains[idx].config.id;
        let depth = chains[idx].config.depth;
        if rng.gen_bool(0.5) && chains[idx].height >= 1 {
            // Content-preserving: rebuild including the same transactions,
            // extending the chain. Any fork point is benign.
            let fork_low = (chains[idx].height + 2).saturating_sub(depth).max(1);
            let fork_height = rng.gen_range(fork_low..=chains[idx].height);
            let extend = rng.gen_range(1..=2);
            push(&mut script, tick, Action::Reorg { chain: id, fork_height, extend, keep_txs: true });
            chains[idx].height += extend;
        } else {
            // Dropping: first mine spare churn blocks, then displace only
            // those, leaving every message-bearing block in place.
            let spare = rng.gen_range(1..=(depth - 1).min(3));
            push(&mut script, tick, Action::Mine { chain: id, count: spare });
            chains[idx].height += spare;
            tick += 1;
            let fork_height = rng.gen_range(chains[idx].height - spare + 1..=chains[idx].height);
            let extend = rng.gen_range(1..=2);
            push(&mut script, tick, Action::Reorg { chain: id, fork_height, extend, keep_txs: false });
            chains[idx].height += extend;
        }
        tick += 1;
    }

    // Settle phase: push every source chain past its confirmation gate.
    for chain in &mut chains {
        if chain.used_as_source {
            let count = chain.config.depth + 1;
            push(&mut script, tick, Action::Mine { chain: chain.config.id, count });
            chain.height += count;
        }
    }

    // The pipeline tail after the gate opens is four ticks; leave slack.
    let ticks = tick + 8;
    let config = ScenarioConfig {
        name,
        ticks,
        seed: rng.gen(),
        chains: chains.into_iter().map(|c| c.config).collect(),
        oracle_mode,
        relayer_mode,
        bridge: None,
        script,
    };
    config.validate().expect("generator only emits valid scenarios");
    config
}
