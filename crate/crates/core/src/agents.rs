//! Off-chain agents: the oracle and the relayer.
//!
//! The two agents watch every chain and never talk to each other. The oracle
//! ships block headers to destination endpoints once they are buried deep
//! enough; the relayer fetches inclusion proofs and submits them wherever the
//! matching header lands. A message is delivered only when both halves line
//! up, which is the whole security story: one dishonest agent can stall
//! traffic but cannot counterfeit it — counterfeiting takes both, fabricating
//! a header and a proof that agree.
//!
//! Each agent has adversarial modes used by attack scenarios. `Collude` modes
//! behave honestly for regular traffic and additionally take part in scripted
//! fabrication attempts built by [`fabricate_collusion`].

use crate::chain::{BlockHeader, SimChain, Transaction};
use crate::endpoint::{HeaderAnnounce, OracleNotice, ProofSubmission, RelayerNotice};
use crate::event::{Event, EventLog, StepTag};
use crate::packet::{Dst, Packet, RelayerArgs};
use crate::proof::ProofScheme;
use crate::types::{keccak256_concat, Address, ChainId, Hash32};
use std::collections::BTreeMap;

/// Ticks the relayer keeps a fetched proof around waiting for its header to
/// be announced, before giving the message up.
pub const RELAYER_RETRY_CAP: u64 = 1024;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleMode {
    Honest,
    /// Ignores notifications; no header ever ships.
    Withhold,
    /// Ships headers on honest timing but with a corrupted transaction root.
    ForgeHeader,
    /// Honest for regular traffic; also ships fabricated headers when a
    /// scripted collusion fires.
    Collude,
}

impl OracleMode {
    pub const fn as_str(self) -> &'static str {
        match self {
            OracleMode::Honest => "honest",
            OracleMode::Withhold => "withhold",
            OracleMode::ForgeHeader => "forge_header",
            OracleMode::Collude => "collude",
        }
    }

    pub fn parse(s: &str) -> Option<OracleMode> {
        [OracleMode::Honest, OracleMode::Withhold, OracleMode::ForgeHeader, OracleMode::Collude]
            .into_iter()
            .find(|m| m.as_str() == s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RelayerMode {
    Honest,
    /// Ignores notifications; no proof is ever submitted.
    Withhold,
    /// Submits proofs for transactions it has quietly altered.
    ForgeProof,
    /// Submits every proof twice.
    Replay,
    /// Honest for regular traffic; also submits fabricated proofs when a
    /// scripted collusion fires.
    Collude,
}

impl RelayerMode {
    pub const fn as_str(self) -> &'static str {
        match self {
            RelayerMode::Honest => "honest",
            RelayerMode::Withhold => "withhold",
            RelayerMode::ForgeProof => "forge_proof",
            RelayerMode::Replay => "replay",
            RelayerMode::Collude => "collude",
        }
    }

    pub fn parse(s: &str) -> Option<RelayerMode> {
        [
            RelayerMode::Honest,
            RelayerMode::Withhold,
            RelayerMode::ForgeProof,
            RelayerMode::Replay,
            RelayerMode::Collude,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
    }
}

/// A header on its way to a destination endpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeaderDelivery {
    pub src: ChainId,
    pub dst: ChainId,
    pub header: BlockHeader,
}

struct OracleJob {
    sampled: BlockHeader,
    sampled_hash: Hash32,
}

/// Watches source chains and ships headers after the confirmation gate.
pub struct Oracle {
    pub mode: OracleMode,
    seed: u64,
    /// Keyed by (source, destination, height); retired if the sampled block
    /// is displaced before the gate, delivered and removed once past it.
    jobs: BTreeMap<(ChainId, ChainId, u64), OracleJob>,
}

impl Oracle {
    pub fn new(mode: OracleMode, seed: u64) -> Oracle {
        Oracle { mode, seed, jobs: BTreeMap::new() }
    }

    pub fn job_count(&self) -> usize {
        self.jobs.len()
    }

    /// Handle a notification: sample the named block's current canonical
    /// header and start waiting for the confirmation gate.
    pub fn notice(
        &mut self,
        n: OracleNotice,
        chains: &BTreeMap<ChainId, SimChain>,
        log: &mut EventLog,
        tick: u64,
    ) {
        if self.mode == OracleMode::Withhold {
            return;
        }
        let Some(chain) = chains.get(&n.src) else { return };
        let Some(header) = chain.header_at(n.height).copied() else { return };
        let sampled_hash = header.hash();
        log.push(Event {
            tick,
            tag: StepTag::HdrRead,
            src: Some(n.src),
            dst: Some(n.dst),
            digest: None,
            height: Some(n.height),
            extra: vec![("header_hash", sampled_hash.to_hex())],
        });
        self.jobs.insert((n.src, n.dst, n.height), OracleJob { sampled: header, sampled_hash });
    }

    /// One scheduler turn: retire jobs whose block was reorged away, ship
    /// jobs whose block has enough confirmations.
    pub fn tick(&mut self, chains: &BTreeMap<ChainId, SimChain>) -> Vec<HeaderDelivery> {
        // Retire first: a displaced block must not ship even if, at this very
        // tick, its replacement is already deep enough.
        self.jobs.retain(|(src, _, height), job| match chains.get(src) {
            Some(chain) => {
                chain.header_at(*height).map(BlockHeader::hash) == Some(job.sampled_hash)
            }
            None => false,
        });

        let mut out = Vec::new();
        let ready: Vec<(ChainId, ChainId, u64)> = self
            .jobs
            .iter()
            .filter(|((src, _, height), _)| {
                let chain = &chains[src];
                chain.confirmations(*height).is_some_and(|c| c >= chain.confirmation_depth)
            })
            .map(|(k, _)| *k)
            .collect();
        for key in ready {
            let job = self.jobs.remove(&key).expect("key just listed");
            let (src, dst, _) = key;
            let header = match self.mode {
                OracleMode::ForgeHeader => BlockHeader {
                    tx_root: keccak256_concat(&[
                        job.sampled.tx_root.as_bytes(),
                        b"forged-root",
                        &self.seed.to_be_bytes(),
                    ]),
                    ..job.sampled
                },
                _ => job.sampled,
            };
            out.push(HeaderDelivery { src, dst, header });
        }
        out
    }

    /// Collusion hook: ship a fabricated header, if this oracle is in on it.
    pub fn collude_header(&self, fab: &Fabrication) -> Option<HeaderDelivery> {
        (self.mode == OracleMode::Collude).then_some(HeaderDelivery {
            src: fab.submission.src,
            dst: fab.dst,
            header: fab.header,
        })
    }
}

struct Package {
    dst: ChainId,
    submission: ProofSubmission,
    fetched_at: u64,
}

/// Watches source chains, prefetches inclusion proofs, and submits them when
/// the destination announces the matching header.
pub struct Relayer {
    pub mode: RelayerMode,
    prefetched: BTreeMap<(ChainId, u64), Vec<Package>>,
}

impl Relayer {
    pub fn new(mode: RelayerMode) -> Relayer {
        Relayer { mode, prefetched: BTreeMap::new() }
    }

    pub fn package_count(&self) -> usize {
        self.prefetched.values().map(Vec::len).sum()
    }

    /// Handle a notification: fetch the transaction and its proof from the
    /// source chain and hold them until the header lands on the destination.
    pub fn notice(
        &mut self,
        n: RelayerNotice,
        chains: &BTreeMap<ChainId, SimChain>,
        log: &mut EventLog,
        tick: u64,
    ) {
        if self.mode == RelayerMode::Withhold {
            return;
        }
        let Some(chain) = chains.get(&n.src) else { return };
        let Some(block) = chain.block_at(n.height) else { return };
        let Some(tx) = block.txs.get(n.tx_index) else { return };
        if tx.digest() != n.digest {
            // The block changed between commit and fetch; drop the job.
            return;
        }
        let proof = match chain.scheme.prove(&block.tx_digests(), n.tx_index) {
            Ok(p) => p,
            Err(_) => return,
        };
        log.push(Event {
            tick,
            tag: StepTag::ProofRead,
            src: Some(n.src),
            dst: Some(n.dst),
            digest: Some(n.digest),
            height: Some(n.height),
            extra: vec![("scheme", chain.scheme.as_str().to_string())],
        });
        self.prefetched.entry((n.src, n.height)).or_default().push(Package {
            dst: n.dst,
            submission: ProofSubmission {
                src: n.src,
                height: n.height,
                tx: tx.clone(),
                proof_wire: proof.encode(),
            },
            fetched_at: tick,
        });
    }

    /// A destination stored a header: submit every held proof for that block
    /// and destination. Returns the submissions for the scheduler to route.
    pub fn announce(
        &mut self,
        a: HeaderAnnounce,
        log: &mut EventLog,
        tick: u64,
    ) -> Vec<(ChainId, ProofSubmission)> {
        let Some(packages) = self.prefetched.get_mut(&(a.src, a.height)) else {
            return Vec::new();
        };
        let matching: Vec<Package> = {
            let (hit, rest): (Vec<_>, Vec<_>) =
                packages.drain(..).partition(|p| p.dst == a.dst);
            *packages = rest;
            hit
        };
        if matching.is_empty() {
            return Vec::new();
        }

        let mut submissions: Vec<ProofSubmission> = Vec::new();
        for p in matching {
            match self.mode {
                RelayerMode::ForgeProof => {
                    // Quietly swap in an altered transaction; the proof still
                    // matches the committed one, the claim does not.
                    let mut forged = p.submission;
                    forged.tx = Transaction { nonce: forged.tx.nonce ^ 0xDEAD, ..forged.tx };
                    submissions.push(forged);
                }
                RelayerMode::Replay => {
                    submissions.push(p.submission.clone());
                    submissions.push(p.submission);
                }
                _ => submissions.push(p.submission),
            }
        }
        self.log_submission(log, tick, a.src, a.dst, a.height, &submissions);
        submissions.into_iter().map(|s| (a.dst, s)).collect()
    }

    /// Collusion hook: submit a fabricated proof, if this relayer is in on it.
    pub fn collude_submit(
        &self,
        fab: &Fabrication,
        log: &mut EventLog,
        tick: u64,
    ) -> Option<(ChainId, ProofSubmission)> {
        if self.mode != RelayerMode::Collude {
            return None;
        }
        let subs = std::slice::from_ref(&fab.submission);
        self.log_submission(log, tick, fab.submission.src, fab.dst, fab.submission.height, subs);
        Some((fab.dst, fab.submission.clone()))
    }

    /// Drop packages that waited past the retry cap with no header announce.
    pub fn expire(&mut self, now: u64) {
        for packages in self.prefetched.values_mut() {
            packages.retain(|p| now.saturating_sub(p.fetched_at) < RELAYER_RETRY_CAP);
        }
        self.prefetched.retain(|_, v| !v.is_empty());
    }

    fn log_submission(
        &self,
        log: &mut EventLog,
        tick: u64,
        src: ChainId,
        dst: ChainId,
        height: u64,
        submissions: &[ProofSubmission],
    ) {
        let digests: Vec<String> =
            submissions.iter().map(|s| s.tx.digest().to_hex()).collect();
        log.push(Event {
            tick,
            tag: StepTag::ProofsSubmitted,
            src: Some(src),
            dst: Some(dst),
            digest: None,
            height: Some(height),
            extra: vec![
                ("count", submissions.len().to_string()),
                ("digests", digests.join(",")),
            ],
        });
    }
}

/// The coordinated forgery: one fabricated transaction, a fabricated block
/// header committing to it, and an inclusion proof that checks out against
/// that header. Both colluding agents derive it from the same inputs, so the
/// halves agree without any channel between them.
#[derive(Clone, Debug)]
pub struct Fabrication {
    pub dst: ChainId,
    pub header: BlockHeader,
    pub submission: ProofSubmission,
}

pub fn fabricate_collusion(
    seed: u64,
    src: ChainId,
    dst: ChainId,
    height: u64,
    scheme: ProofScheme,
    dst_address: Address,
    payload: Vec<u8>,
) -> Fabrication {
    let sender = Address::derive(seed, "collusion-sender", height);
    let tx = Transaction::app_call(
        src,
        sender,
        Packet::new(Dst { chain: dst, address: dst_address }, payload),
        RelayerArgs { payee: Address::derive(seed, "collusion-payee", height), max_fee: 0 },
        height,
    );
    let digest = tx.digest();
    let parent = keccak256_concat(&[b"fabricated-parent", &seed.to_be_bytes(), &height.to_be_bytes()]);
    let header = BlockHeader { chain: src, height, parent, tx_root: scheme.root(&[digest]) };
    let proof = scheme.prove(&[digest], 0).expect("single-entry proof");
    Fabrication {
        dst,
        header,
        submission: ProofSubmission { src, height, tx, proof_wire: proof.encode() },
    }
}
