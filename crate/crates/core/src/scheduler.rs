//! The discrete-event world: chains, endpoints, agents, and the tick loop.
//!
//! Everything that "happens" is either a scripted action or a message
//! between components, and messages always take one tick to arrive: whatever
//! a component emits at tick T is handled at tick T+1. Within a tick the
//! phases run in a fixed order —
//!
//! 1. scripted actions (sends, mining, reorgs, bridge locks, fabrications),
//! 2. endpoints: arriving headers first, then arriving proofs, then the
//!    expiry sweep for proofs that never got a header,
//! 3. oracle: new notifications, then the confirmation-gate check,
//! 4. relayer: new notifications, then header announcements, then expiry
//!
//! — so a run is a pure function of (scenario, seed) and two runs with the
//! same inputs produce byte-identical event logs.
//!
//! For a message mined at tick T on a chain that already satisfies its
//! confirmation depth, the observable schedule is: reads at T+1, header
//! stored at T+2, proofs submitted at T+3, verdict and delivery at T+4.
//! When more mining is needed, the chain crosses the gate at some tick G
//! and the tail plays out at G+1 through G+3 instead.

use crate::agents::{
    fabricate_collusion, HeaderDelivery, Oracle, Relayer,
};
use crate::bridge::{Bridge, BridgePayload};
use crate::chain::SimChain;
use crate::endpoint::{
    DeliveredMsg, Endpoint, HeaderAnnounce, OracleNotice, ProofSubmission, RelayerNotice,
};
use crate::event::EventLog;
use crate::packet::{Dst, RelayerArgs};
use crate::scenario::{Action, PayloadSpec, ScenarioConfig};
use crate::types::{derive_bytes, Address, ChainId};
use std::collections::BTreeMap;
use thiserror::Error;

/// A scripted action failed at run time (bad reorg geometry, bridge
/// overdraft, oversized payload). Scenario validation catches everything
/// knowable before the run; these are the leftovers that depend on state.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("tick {tick}: {msg}")]
pub struct RunError {
    pub tick: u64,
    pub msg: String,
}

/// Messages in flight between components, due at the next tick.
#[derive(Default)]
struct Mailbox {
    oracle_notices: Vec<OracleNotice>,
    relayer_notices: Vec<RelayerNotice>,
    announces: Vec<HeaderAnnounce>,
    headers: Vec<HeaderDelivery>,
    proofs: Vec<(ChainId, ProofSubmission)>,
}

pub struct World {
    pub name: String,
    pub seed: u64,
    pub tick: u64,
    pub ticks_limit: u64,
    pub chains: BTreeMap<ChainId, SimChain>,
    pub endpoints: BTreeMap<ChainId, Endpoint>,
    pub oracle: Oracle,
    pub relayer: Relayer,
    pub bridge: Option<Bridge>,
    pub log: EventLog,
    /// Deliveries addressed to the bridge whose payload failed to decode.
    pub rejected_mints: u64,
    script: BTreeMap<u64, Vec<Action>>,
    /// In-flight messages; handled one tick after they are queued.
    pending: Mailbox,
    /// Source of unique transaction nonces across the whole run.
    next_nonce: u64,
}

impl World {
    /// Instantiate a runnable world from a validated configuration.
    /// `seed_override` (command line or environment) wins over the file.
    pub fn build(config: &ScenarioConfig, seed_override: Option<u64>) -> World {
        let seed = seed_override.unwrap_or(config.seed);

        let mut chains = BTreeMap::new();
        let mut endpoints = BTreeMap::new();
        for c in &config.chains {
            chains.insert(c.id, SimChain::new(c.id, c.depth, c.scheme, seed));
            endpoints.insert(c.id, Endpoint::new(c.id, c.max_payload));
        }
        // Every endpoint can validate inclusion proofs in every other
        // chain's format; a chain never needs a library for itself.
        for c in &config.chains {
            for other in &config.chains {
                if other.id != c.id {
                    endpoints
                        .get_mut(&c.id)
                        .expect("just inserted")
                        .install_library(other.id, other.scheme);
                }
            }
        }

        let bridge = config.bridge.as_ref().map(|b| {
            let escrow = Address::derive(seed, "bridge-escrow", 0);
            let mint = Address::derive(seed, "bridge-mint", 0);
            let mut bridge = Bridge::new(b.src, b.dst, escrow, mint);
            for (label, amount) in &b.funds {
                bridge.fund(Address::derive(seed, label, 0), *amount);
            }
            endpoints.get_mut(&b.src).expect("validated").register_app(escrow);
            endpoints.get_mut(&b.dst).expect("validated").register_app(mint);
            bridge
        });

        let mut script: BTreeMap<u64, Vec<Action>> = BTreeMap::new();
        for entry in &config.script {
            script.entry(entry.tick).or_default().push(entry.action.clone());
        }

        World {
            name: config.name.clone(),
            seed,
            tick: 0,
            ticks_limit: config.ticks,
            chains,
            endpoints,
            oracle: Oracle::new(config.oracle_mode, seed),
            relayer: Relayer::new(config.relayer_mode),
            bridge,
            log: EventLog::new(),
            rejected_mints: 0,
            script,
            pending: Mailbox::default(),
            next_nonce: 0,
        }
    }

    /// The address a scenario label stands for under this run's seed.
    pub fn label_address(&self, label: &str) -> Address {
        Address::derive(self.seed, label, 0)
    }

    /// Run every remaining tick. Stops at the first action failure.
    pub fn run(&mut self) -> Result<(), RunError> {
        while self.tick < self.ticks_limit {
            self.step()?;
        }
        Ok(())
    }

    /// Advance one tick through all four phases.
    pub fn step(&mut self) -> Result<(), RunError> {
        let tick = self.tick;
        let arriving = std::mem::take(&mut self.pending);

        // Phase 1: scripted actions.
        if let Some(actions) = self.script.remove(&tick) {
            for action in actions {
                self.run_action(action)?;
            }
        }

        // Phase 2: endpoints. Headers strictly before proofs, so a proof
        // arriving alongside its header validates this tick instead of
        // sitting in the pending queue.
        let mut delivered: Vec<(ChainId, DeliveredMsg)> = Vec::new();
        for delivery in arriving.headers {
            let endpoint = self
                .endpoints
                .get_mut(&delivery.dst)
                .expect("agents only target configured chains");
            let (announce, released) =
                endpoint.store_header(delivery.src, delivery.header, &mut self.log, tick);
            if let Some(a) = announce {
                self.pending.announces.push(a);
            }
            delivered.extend(released.into_iter().map(|m| (delivery.dst, m)));
        }
        for (dst, submission) in arriving.proofs {
            let endpoint =
                self.endpoints.get_mut(&dst).expect("agents only target configured chains");
            if let Some(msg) = endpoint.submit_proof(submission, &mut self.log, tick) {
                delivered.push((dst, msg));
            }
        }
        for endpoint in self.endpoints.values_mut() {
            endpoint.expire_pending(tick, &mut self.log);
        }
        for (chain, msg) in delivered {
            self.dispatch_app(chain, &msg);
        }

        // Phase 3: oracle.
        for notice in arriving.oracle_notices {
            self.oracle.notice(notice, &self.chains, &mut self.log, tick);
        }
        self.pending.headers.extend(self.oracle.tick(&self.chains));

        // Phase 4: relayer.
        for notice in arriving.relayer_notices {
            self.relayer.notice(notice, &self.chains, &mut self.log, tick);
        }
        for announce in arriving.announces {
            self.pending.proofs.extend(self.relayer.announce(announce, &mut self.log, tick));
        }
        self.relayer.expire(tick);

        self.tick += 1;
        Ok(())
    }

    fn run_action(&mut self, action: Action) -> Result<(), RunError> {
        let tick = self.tick;
        let fail = |msg: String| RunError { tick, msg };
        match action {
            Action::Send { src, dst, sender, to, payload, max_fee } => {
                let sender = self.label_address(&sender);
                let to = self.label_address(&to);
                let nonce = self.alloc_nonce();
                let payload = match payload {
                    PayloadSpec::Hex(bytes) => bytes,
                    PayloadSpec::Derived(len) => derive_bytes(self.seed, "payload", nonce, len),
                };
                let args =
                    RelayerArgs { payee: Address::derive(self.seed, "fee-collector", 0), max_fee };
                let tx = self.endpoints[&src]
                    .build_message(sender, Dst { chain: dst, address: to }, payload, args, nonce)
                    .map_err(|e| fail(format!("send rejected: {e}")))?;
                self.chains.get_mut(&src).expect("validated").submit_tx(tx);
            }
            Action::Mine { chain, count } => {
                for _ in 0..count {
                    let block =
                        self.chains.get_mut(&chain).expect("validated").mine_block().clone();
                    let endpoint = self.endpoints.get_mut(&chain).expect("validated");
                    let (relayer_notices, oracle_notices) =
                        endpoint.process_mined_block(&block, &mut self.log, tick);
                    self.pending.relayer_notices.extend(relayer_notices);
                    self.pending.oracle_notices.extend(oracle_notices);
                }
            }
            Action::Reorg { chain, fork_height, extend, keep_txs } => {
                self.chains
                    .get_mut(&chain)
                    .expect("validated")
                    .inject_reorg(fork_height, extend, keep_txs)
                    .map_err(|e| fail(format!("reorg rejected: {e}")))?;
            }
            Action::BridgeLock { user, amount, recipient } => {
                let user = self.label_address(&user);
                let recipient = self.label_address(&recipient);
                let bridge = self.bridge.as_mut().expect("validated");
                let instruction = bridge
                    .lock(user, amount, recipient)
                    .map_err(|e| fail(format!("bridge_lock rejected: {e}")))?;
                let (src, sender) = (bridge.src, bridge.src_address);
                let dst = Dst { chain: bridge.dst, address: bridge.dst_address };
                let nonce = self.alloc_nonce();
                let args =
                    RelayerArgs { payee: Address::derive(self.seed, "fee-collector", 0), max_fee: 100 };
                let tx = self.endpoints[&src]
                    .build_message(sender, dst, instruction.encode(), args, nonce)
                    .map_err(|e| fail(format!("bridge_lock rejected: {e}")))?;
                self.chains.get_mut(&src).expect("validated").submit_tx(tx);
            }
            Action::ForgeCollude { src, dst, height, mint } => {
                // Build one shared fabrication and offer each half to its
                // agent; only agents in collude mode act on it. The forged
                // header and proof agree with each other by construction,
                // so the validator's verdict depends entirely on whether
                // both components betrayed independence.
                let (payload, target) = match mint {
                    Some(amount) => {
                        let recipient = Address::derive(self.seed, "collusion-recipient", height);
                        let bridge = self.bridge.as_ref().expect("validated");
                        (BridgePayload { recipient, amount }.encode(), bridge.dst_address)
                    }
                    None => (
                        derive_bytes(self.seed, "collusion-payload", height, 24),
                        Address::derive(self.seed, "collusion-target", height),
                    ),
                };
                let scheme = self.chains[&src].scheme;
                let fab = fabricate_collusion(self.seed, src, dst, height, scheme, target, payload);
                if let Some(delivery) = self.oracle.collude_header(&fab) {
                    self.pending.headers.push(delivery);
                }
                if let Some(sub) = self.relayer.collude_submit(&fab, &mut self.log, tick) {
                    self.pending.proofs.push(sub);
                }
            }
        }
        Ok(())
    }

    /// Hand a verified delivery to the application living at its address.
    /// The bridge mints; everything else just keeps the endpoint inbox copy.
    fn dispatch_app(&mut self, chain: ChainId, msg: &DeliveredMsg) {
        let Some(bridge) = &mut self.bridge else { return };
        if chain != bridge.dst || msg.packet.dst.address != bridge.dst_address {
            return;
        }
        if bridge.mint(&msg.packet.payload).is_err() {
            self.rejected_mints += 1;
        }
    }

    fn alloc_nonce(&mut self) -> u64 {
        let n = self.next_nonce;
        self.next_nonce += 1;
        n
    }
}
