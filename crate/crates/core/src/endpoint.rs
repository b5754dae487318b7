//! Per-chain endpoint stack.
//!
//! Each chain hosts one endpoint, layered like the on-chain contracts it
//! stands in for:
//!
//! * a communicator face — applications call [`Endpoint::build_message`] to
//!   emit a packet and receive deliveries back;
//! * a validator layer — checks relayer-submitted inclusion proofs against
//!   oracle-shipped headers and enforces the replay guard;
//! * a networking layer — stores foreign headers (first write wins per
//!   source chain and height) and announces them upward;
//! * a [`Library`] per remote chain — the pluggable proof logic matching
//!   that chain's commitment scheme, swappable without touching the rest.
//!
//! The endpoint is passive: the scheduler feeds it mined blocks, header
//! deliveries, and proof submissions, and routes the notices it returns to
//! the off-chain agents.

use crate::chain::{Block, BlockHeader, Transaction, TxKind};
use crate::event::{Event, EventLog, StepTag};
use crate::packet::{Dst, Packet, PacketError, RelayerArgs};
use crate::proof::{Proof, ProofError, ProofScheme};
use crate::types::{Address, ChainId, Hash32};
use std::collections::{BTreeMap, BTreeSet};

/// Default ticks a proof submitted ahead of its header may wait before it
/// is discarded with a `NoHeader` verdict; see [`Endpoint::set_header_wait`].
pub const PENDING_PROOF_TIMEOUT: u64 = 64;

/// Proof logic for one remote chain. Implementations are stateless; an
/// endpoint holds one per source chain it accepts messages from.
pub trait Library {
    fn scheme(&self) -> ProofScheme;

    /// Commitment root over ordered transaction digests.
    fn compute_root(&self, digests: &[Hash32]) -> Hash32 {
        self.scheme().root(digests)
    }

    /// Decode and check a wire-format proof against a trusted root,
    /// returning the proven value.
    fn validate(&self, proof_wire: &[u8], tx_root: Hash32) -> Result<Vec<u8>, ProofError> {
        let proof = Proof::decode(proof_wire)?;
        if proof.scheme != self.scheme() {
            return Err(ProofError::SchemeMismatch);
        }
        proof.verify(tx_root)
    }
}

pub struct BinaryMerkleLibrary;

impl Library for BinaryMerkleLibrary {
    fn scheme(&self) -> ProofScheme {
        ProofScheme::BinaryMerkle
    }
}

pub struct MerklePatriciaLibrary;

impl Library for MerklePatriciaLibrary {
    fn scheme(&self) -> ProofScheme {
        ProofScheme::MerklePatricia
    }
}

pub fn library_for(scheme: ProofScheme) -> Box<dyn Library> {
    match scheme {
        ProofScheme::BinaryMerkle => Box::new(BinaryMerkleLibrary),
        ProofScheme::MerklePatricia => Box::new(MerklePatriciaLibrary),
    }
}

/// Per-message notice handed to the relayer when a message commits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelayerNotice {
    pub src: ChainId,
    pub dst: ChainId,
    pub height: u64,
    pub tx_index: usize,
    pub digest: Hash32,
}

/// Per-(block, destination) notice handed to the oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleNotice {
    pub src: ChainId,
    pub dst: ChainId,
    pub height: u64,
    pub header_hash: Hash32,
}

/// Told to the relayer once a destination endpoint stores a header: proofs
/// against this block can now be submitted there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeaderAnnounce {
    pub src: ChainId,
    pub dst: ChainId,
    pub height: u64,
    pub header_hash: Hash32,
}

/// A relayer's delivery attempt: the committed transaction it claims, plus a
/// wire-format inclusion proof for the block it names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofSubmission {
    pub src: ChainId,
    pub height: u64,
    pub tx: Transaction,
    pub proof_wire: Vec<u8>,
}

/// A message accepted and handed to the destination application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveredMsg {
    pub src: ChainId,
    pub digest: Hash32,
    pub packet: Packet,
    pub tick: u64,
}

/// Why a submission was discarded. The four values are the complete verdict
/// vocabulary; specifics ride in the free-form `detail` field of the event.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DiscardReason {
    /// Proof failed to decode or check out against the stored header root.
    RootMismatch,
    /// Proof checked out but did not bind the claimed transaction, or the
    /// claimed transaction is not a deliverable message here.
    DigestMismatch,
    /// No header for the named block arrived within the waiting window.
    NoHeader,
    /// The message was already delivered once.
    Replay,
}

impl DiscardReason {
    pub const fn as_str(self) -> &'static str {
        match self {
            DiscardReason::RootMismatch => "RootMismatch",
            DiscardReason::DigestMismatch => "DigestMismatch",
            DiscardReason::NoHeader => "NoHeader",
            DiscardReason::Replay => "Replay",
        }
    }
}

struct PendingProof {
    submission: ProofSubmission,
    deadline: u64,
}

pub struct Endpoint {
    pub chain: ChainId,
    pub max_payload: usize,
    libraries: BTreeMap<ChainId, Box<dyn Library>>,
    registered: BTreeSet<Address>,
    /// Stored foreign headers, first write wins per (source chain, height).
    headers: BTreeMap<(ChainId, u64), BlockHeader>,
    /// Replay guard: (source chain, digest) of everything ever delivered.
    delivered_guard: BTreeSet<(ChainId, Hash32)>,
    /// Outbound one-shot guard: messages whose send pipeline already ran.
    /// A transaction displaced by a reorg and mined again does not re-run
    /// steps of the pipeline, so its message stays lost.
    announced: BTreeSet<Hash32>,
    /// Proofs that arrived ahead of their header, waiting with a deadline.
    pending: Vec<PendingProof>,
    /// Waiting window granted to header-less proofs, in ticks.
    header_wait: u64,
    /// Everything delivered on this chain, in delivery order.
    pub inbox: Vec<DeliveredMsg>,
}

impl Endpoint {
    pub fn new(chain: ChainId, max_payload: usize) -> Endpoint {
        Endpoint {
            chain,
            max_payload,
            libraries: BTreeMap::new(),
            registered: BTreeSet::new(),
            headers: BTreeMap::new(),
            delivered_guard: BTreeSet::new(),
            announced: BTreeSet::new(),
            pending: Vec::new(),
            header_wait: PENDING_PROOF_TIMEOUT,
            inbox: Vec::new(),
        }
    }

    /// Override how long a proof may sit waiting for its header.
    pub fn set_header_wait(&mut self, ticks: u64) {
        self.header_wait = ticks;
    }

    /// Install the proof library used for messages arriving from `src`.
    pub fn install_library(&mut self, src: ChainId, scheme: ProofScheme) {
        self.libraries.insert(src, library_for(scheme));
    }

    /// Register a receiving application address.
    pub fn register_app(&mut self, address: Address) {
        self.registered.insert(address);
    }

    pub fn is_registered(&self, address: &Address) -> bool {
        self.registered.contains(address)
    }

    pub fn stored_header(&self, src: ChainId, height: u64) -> Option<&BlockHeader> {
        self.headers.get(&(src, height))
    }

    pub fn stored_header_count(&self) -> usize {
        self.headers.len()
    }

    pub fn pending_proof_count(&self) -> usize {
        self.pending.len()
    }

    /// Communicator face: size-check a payload and assemble the transaction
    /// the sender will submit to this chain.
    pub fn build_message(
        &self,
        sender: Address,
        dst: Dst,
        payload: Vec<u8>,
        relayer_args: RelayerArgs,
        nonce: u64,
    ) -> Result<Transaction, PacketError> {
        if payload.len() > self.max_payload {
            return Err(PacketError::PayloadTooLarge { got: payload.len(), limit: self.max_payload });
        }
        Ok(Transaction::app_call(self.chain, sender, Packet::new(dst, payload), relayer_args, nonce))
    }

    /// Source-side pipeline for a freshly mined block: emit the per-message
    /// steps for every new outbound message, then one oracle notice per
    /// destination chain the block touches. Messages already announced in an
    /// earlier incarnation of their transaction are skipped entirely.
    pub fn process_mined_block(
        &mut self,
        block: &Block,
        log: &mut EventLog,
        tick: u64,
    ) -> (Vec<RelayerNotice>, Vec<OracleNotice>) {
        debug_assert_eq!(block.header.chain, self.chain);
        let mut relayer = Vec::new();
        let mut dsts: BTreeSet<ChainId> = BTreeSet::new();
        let height = block.header.height;

        for (tx_index, tx) in block.txs.iter().enumerate() {
            if tx.kind != TxKind::AppCall {
                continue;
            }
            let Some(packet) = &tx.packet else { continue };
            let digest = tx.digest();
            if !self.announced.insert(digest) {
                continue;
            }
            let dst = packet.dst.chain;
            let args = tx.relayer_args.unwrap_or(RelayerArgs { payee: Address::default(), max_fee: 0 });
            let base = Event {
                tick,
                tag: StepTag::Send,
                src: Some(self.chain),
                dst: Some(dst),
                digest: Some(digest),
                height: Some(height),
                extra: vec![("sender", tx.sender.to_hex())],
            };
            log.push(base.clone());
            log.push(Event {
                tag: StepTag::PktBuilt,
                extra: vec![("payload_len", packet.payload.len().to_string())],
                ..base.clone()
            });
            log.push(Event {
                tag: StepTag::NetworkNotify,
                extra: vec![("dst_addr", packet.dst.address.to_hex())],
                ..base.clone()
            });
            log.push(Event {
                tag: StepTag::RelayerNotify,
                extra: vec![("payee", args.payee.to_hex()), ("max_fee", args.max_fee.to_string())],
                ..base
            });
            relayer.push(RelayerNotice { src: self.chain, dst, height, tx_index, digest });
            dsts.insert(dst);
        }

        // One oracle notice per destination, whatever the message count.
        let header_hash = block.header.hash();
        let oracle = dsts
            .into_iter()
            .map(|dst| {
                log.push(Event {
                    tick,
                    tag: StepTag::OracleNotify,
                    src: Some(self.chain),
                    dst: Some(dst),
                    digest: None,
                    height: Some(height),
                    extra: vec![("header_hash", header_hash.to_hex())],
                });
                OracleNotice { src: self.chain, dst, height, header_hash }
            })
            .collect();
        (relayer, oracle)
    }

    /// Networking layer: store a shipped header. The first header for a
    /// (source, height) slot wins; later arrivals — duplicate or conflicting
    /// — are refused. A successful store releases any proofs that were
    /// queued waiting for it.
    pub fn store_header(
        &mut self,
        src: ChainId,
        header: BlockHeader,
        log: &mut EventLog,
        tick: u64,
    ) -> (Option<HeaderAnnounce>, Vec<DeliveredMsg>) {
        let header_hash = header.hash();
        let slot = (src, header.height);
        let stored = header.chain == src && !self.headers.contains_key(&slot);
        log.push(Event {
            tick,
            tag: StepTag::HdrStored,
            src: Some(src),
            dst: Some(self.chain),
            digest: None,
            height: Some(header.height),
            extra: vec![("header_hash", header_hash.to_hex()), ("stored", stored.to_string())],
        });
        if !stored {
            return (None, Vec::new());
        }
        self.headers.insert(slot, header);
        log.push(Event {
            tick,
            tag: StepTag::HashFwd,
            src: Some(src),
            dst: Some(self.chain),
            digest: None,
            height: Some(header.height),
            extra: vec![("header_hash", header_hash.to_hex())],
        });

        // Release queued proofs for this slot, preserving submission order.
        let mut delivered = Vec::new();
        let waiting: Vec<PendingProof> = {
            let (hit, rest): (Vec<_>, Vec<_>) = self
                .pending
                .drain(..)
                .partition(|p| (p.submission.src, p.submission.height) == slot);
            self.pending = rest;
            hit
        };
        for p in waiting {
            if let Some(msg) = self.validate_now(p.submission, log, tick) {
                delivered.push(msg);
            }
        }
        let announce =
            HeaderAnnounce { src, dst: self.chain, height: header.height, header_hash };
        (Some(announce), delivered)
    }

    /// Validator layer: accept a proof submission. Queues it if the header
    /// has not arrived yet; otherwise validates immediately.
    pub fn submit_proof(
        &mut self,
        submission: ProofSubmission,
        log: &mut EventLog,
        tick: u64,
    ) -> Option<DeliveredMsg> {
        if !self.headers.contains_key(&(submission.src, submission.height)) {
            self.pending.push(PendingProof { submission, deadline: tick + self.header_wait });
            return None;
        }
        self.validate_now(submission, log, tick)
    }

    /// Discard queued proofs whose waiting window has closed.
    pub fn expire_pending(&mut self, now: u64, log: &mut EventLog) {
        let expired: Vec<PendingProof> = {
            let (out, keep): (Vec<_>, Vec<_>) =
                self.pending.drain(..).partition(|p| now >= p.deadline);
            self.pending = keep;
            out
        };
        for p in expired {
            self.log_verdict(
                log,
                now,
                &p.submission,
                Err((DiscardReason::NoHeader, format!("waited_{}_ticks", self.header_wait))),
            );
        }
    }

    fn validate_now(
        &mut self,
        submission: ProofSubmission,
        log: &mut EventLog,
        tick: u64,
    ) -> Option<DeliveredMsg> {
        let verdict = self.judge(&submission);
        self.log_verdict(log, tick, &submission, verdict.clone().map(|_| ()));
        match verdict {
            Ok(packet) => {
                let digest = submission.tx.digest();
                self.delivered_guard.insert((submission.src, digest));
                log.push(Event {
                    tick,
                    tag: StepTag::Delivered,
                    src: Some(submission.src),
                    dst: Some(self.chain),
                    digest: Some(digest),
                    height: Some(submission.height),
                    extra: vec![("payload_len", packet.payload.len().to_string())],
                });
                let msg = DeliveredMsg { src: submission.src, digest, packet, tick };
                self.inbox.push(msg.clone());
                Some(msg)
            }
            Err(_) => None,
        }
    }

    /// The validation rule. Order matters: proof integrity, then binding to
    /// the claimed transaction, then deliverability, then the replay guard —
    /// so a replayed message is reported as a replay, not re-judged.
    fn judge(&self, submission: &ProofSubmission) -> Result<Packet, (DiscardReason, String)> {
        use DiscardReason::*;
        let header = self
            .headers
            .get(&(submission.src, submission.height))
            .expect("judge is only called with a stored header");
        let library = self
            .libraries
            .get(&submission.src)
            .ok_or_else(|| (RootMismatch, "no_library_installed".to_string()))?;

        let proven = library
            .validate(&submission.proof_wire, header.tx_root)
            .map_err(|e| (RootMismatch, e.code()))?;

        let digest = submission.tx.digest();
        if proven != digest.0 {
            return Err((DigestMismatch, "proven_value_differs".to_string()));
        }
        let packet = match (&submission.tx.kind, &submission.tx.packet) {
            (TxKind::AppCall, Some(p)) => p.clone(),
            _ => return Err((DigestMismatch, "not_a_message".to_string())),
        };
        if packet.dst.chain != self.chain {
            return Err((DigestMismatch, "wrong_destination".to_string()));
        }
        if packet.payload.len() > self.max_payload {
            return Err((DigestMismatch, "oversized_payload".to_string()));
        }
        if self.delivered_guard.contains(&(submission.src, digest)) {
            return Err((Replay, "already_delivered".to_string()));
        }
        Ok(packet)
    }

    fn log_verdict(
        &self,
        log: &mut EventLog,
        tick: u64,
        submission: &ProofSubmission,
        verdict: Result<(), (DiscardReason, String)>,
    ) {
        let extra = match verdict {
            Ok(()) => vec![("verdict", "accepted".to_string())],
            Err((reason, detail)) => vec![
                ("verdict", "discarded".to_string()),
                ("reason", reason.as_str().to_string()),
                ("detail", detail),
            ],
        };
        log.push(Event {
            tick,
            tag: StepTag::Verdict,
            src: Some(submission.src),
            dst: Some(self.chain),
            digest: Some(submission.tx.digest()),
            height: Some(submission.height),
            extra,
        });
    }
}
