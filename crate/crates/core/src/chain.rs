//! Simulated blockchains: transactions, blocks, mining, confirmation depth,
//! and reorg injection.
//!
//! Each [`SimChain`] is a self-contained longest-chain ledger. Blocks commit
//! to their transaction set through a proof-scheme root (see [`crate::proof`])
//! and to their ancestry through the parent hash, so header hashes change
//! whenever history changes — the property every other layer leans on.

use crate::packet::{Packet, RelayerArgs};
use crate::proof::ProofScheme;
use crate::types::{keccak256, keccak256_concat, Address, ChainId, Hash32};
use std::collections::VecDeque;
use thiserror::Error;

/// Default number of confirmations a header must accumulate before an oracle
/// will ship it to another chain. A transaction in block 10 with the head at
/// block 24 has 15 confirmations and is at the default threshold.
pub const DEFAULT_CONFIRMATION_DEPTH: u64 = 15;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TxKind {
    /// Ordinary value transfer; exists to give blocks non-message content.
    Plain = 0,
    /// Invokes an application that emits a cross-chain packet.
    AppCall = 1,
}

/// A transaction as committed on a simulated chain.
///
/// The canonical encoding is length-prefixed per field (4-byte big-endian
/// length, then the field bytes) in declaration order, and the transaction
/// digest is Keccak-256 of that encoding. Optional fields encode as length 0
/// when absent; an embedded packet is never zero-length (its header alone is
/// 22 bytes), so absence is unambiguous.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transaction {
    /// Chain the transaction was submitted to.
    pub chain: ChainId,
    pub sender: Address,
    pub kind: TxKind,
    /// Outbound message, present iff `kind` is `AppCall`.
    pub packet: Option<Packet>,
    /// Fee terms for whoever relays the proof; only meaningful on `AppCall`.
    pub relayer_args: Option<RelayerArgs>,
    /// Per-sender sequence number; keeps otherwise-identical sends distinct.
    pub nonce: u64,
}

impl Transaction {
    pub fn plain(chain: ChainId, sender: Address, nonce: u64) -> Transaction {
        Transaction { chain, sender, kind: TxKind::Plain, packet: None, relayer_args: None, nonce }
    }

    pub fn app_call(
        chain: ChainId,
        sender: Address,
        packet: Packet,
        relayer_args: RelayerArgs,
        nonce: u64,
    ) -> Transaction {
        Transaction {
            chain,
            sender,
            kind: TxKind::AppCall,
            packet: Some(packet),
            relayer_args: Some(relayer_args),
            nonce,
        }
    }

    /// Length-prefixed canonical encoding; see the type-level docs.
    pub fn canonical_encoding(&self) -> Vec<u8> {
        fn field(out: &mut Vec<u8>, bytes: &[u8]) {
            out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(bytes);
        }
        let mut out = Vec::new();
        field(&mut out, &self.chain.0.to_be_bytes());
        field(&mut out, self.sender.as_bytes());
        field(&mut out, &[self.kind as u8]);
        match &self.packet {
            Some(p) => field(&mut out, &p.encode()),
            None => field(&mut out, &[]),
        }
        match &self.relayer_args {
            Some(r) => {
                let mut buf = Vec::with_capacity(28);
                buf.extend_from_slice(r.payee.as_bytes());
                buf.extend_from_slice(&r.max_fee.to_be_bytes());
                field(&mut out, &buf);
            }
            None => field(&mut out, &[]),
        }
        field(&mut out, &self.nonce.to_be_bytes());
        out
    }

    /// Keccak-256 of the canonical encoding; the identity used everywhere a
    /// transaction is referenced (proofs, event logs, replay guards).
    pub fn digest(&self) -> Hash32 {
        keccak256(&self.canonical_encoding())
    }
}

/// Block header: the only part of a block that crosses chains.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BlockHeader {
    pub chain: ChainId,
    pub height: u64,
    pub parent: Hash32,
    /// Root committing to the block's transaction digests under the chain's
    /// proof scheme.
    pub tx_root: Hash32,
}

impl BlockHeader {
    /// Keccak-256 over chain id (2 bytes BE), height (8 bytes BE), parent
    /// hash, and transaction root, in that order.
    pub fn hash(&self) -> Hash32 {
        keccak256_concat(&[
            &self.chain.0.to_be_bytes(),
            &self.height.to_be_bytes(),
            self.parent.as_bytes(),
            self.tx_root.as_bytes(),
        ])
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Block {
    pub header: BlockHeader,
    pub txs: Vec<Transaction>,
}

impl Block {
    pub fn tx_digests(&self) -> Vec<Hash32> {
        self.txs.iter().map(Transaction::digest).collect()
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ChainError {
    /// Reorg fork point must be between 1 and the head height: genesis can
    /// never be displaced, and there is nothing to fork above the head.
    #[error("invalid fork height {fork} for head {head}")]
    InvalidForkHeight { fork: u64, head: u64 },
}

/// What a reorg did, for callers that log or assert on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReorgOutcome {
    /// First height whose block actually changed. Equals the requested fork
    /// height unless leading replacement blocks were byte-identical to the
    /// originals (content-preserving reorgs), in which case those are kept.
    pub first_changed_height: u64,
    /// Number of canonical blocks replaced.
    pub displaced_blocks: u64,
    /// Digests of transactions that were displaced and not re-committed by
    /// the replacement branch. They have been returned to the mempool.
    pub dropped_tx_digests: Vec<Hash32>,
    pub new_head: u64,
}

/// A single simulated longest-chain blockchain.
///
/// Height equals index into the canonical vector; genesis sits at height 0
/// with a zero parent and an empty transaction root.
pub struct SimChain {
    pub id: ChainId,
    /// Confirmations an oracle waits for before shipping this chain's headers.
    pub confirmation_depth: u64,
    pub scheme: ProofScheme,
    seed: u64,
    canonical: Vec<Block>,
    mempool: VecDeque<Transaction>,
    /// Counter for synthetic churn transactions minted during reorgs.
    churn_nonce: u64,
}

impl SimChain {
    pub fn new(id: ChainId, confirmation_depth: u64, scheme: ProofScheme, seed: u64) -> SimChain {
        let genesis = Block {
            header: BlockHeader {
                chain: id,
                height: 0,
                parent: Hash32::ZERO,
                tx_root: scheme.root(&[]),
            },
            txs: Vec::new(),
        };
        SimChain {
            id,
            confirmation_depth,
            scheme,
            seed,
            canonical: vec![genesis],
            mempool: VecDeque::new(),
            churn_nonce: 0,
        }
    }

    pub fn head_height(&self) -> u64 {
        (self.canonical.len() - 1) as u64
    }

    pub fn tip_hash(&self) -> Hash32 {
        self.canonical.last().expect("genesis always present").header.hash()
    }

    pub fn block_at(&self, height: u64) -> Option<&Block> {
        self.canonical.get(height as usize)
    }

    pub fn header_at(&self, height: u64) -> Option<&BlockHeader> {
        self.block_at(height).map(|b| &b.header)
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn submit_tx(&mut self, tx: Transaction) {
        self.mempool.push_back(tx);
    }

    /// Mine the next block from the entire current mempool (possibly empty)
    /// and return a reference to it.
    pub fn mine_block(&mut self) -> &Block {
        let txs: Vec<Transaction> = self.mempool.drain(..).collect();
        let block = self.build_block(self.head_height() + 1, self.tip_hash(), txs);
        self.canonical.push(block);
        self.canonical.last().expect("just pushed")
    }

    fn build_block(&self, height: u64, parent: Hash32, txs: Vec<Transaction>) -> Block {
        let digests: Vec<Hash32> = txs.iter().map(Transaction::digest).collect();
        Block {
            header: BlockHeader { chain: self.id, height, parent, tx_root: self.scheme.root(&digests) },
            txs,
        }
    }

    /// Confirmation count for a block: head 24 confirms block 10 fifteen
    /// times (the block's own inclusion counts as the first confirmation).
    /// `None` above the head.
    pub fn confirmations(&self, height: u64) -> Option<u64> {
        let head = self.head_height();
        if height > head {
            None
        } else {
            Some(head - height + 1)
        }
    }

    /// Locate a committed transaction by digest: `(height, index_in_block)`.
    pub fn find_tx(&self, digest: Hash32) -> Option<(u64, usize)> {
        for block in &self.canonical {
            for (i, tx) in block.txs.iter().enumerate() {
                if tx.digest() == digest {
                    return Some((block.header.height, i));
                }
            }
        }
        None
    }

    /// Digests of every transaction on the current canonical chain.
    pub fn committed_digests(&self) -> Vec<Hash32> {
        self.canonical.iter().flat_map(Block::tx_digests).collect()
    }

    /// True iff every block's parent hash matches the previous block's header
    /// hash and heights are consecutive from genesis.
    pub fn validate_links(&self) -> bool {
        self.canonical.windows(2).all(|w| {
            w[1].header.parent == w[0].header.hash()
                && w[1].header.height == w[0].header.height + 1
        }) && self.canonical[0].header.height == 0
            && self.canonical[0].header.parent == Hash32::ZERO
    }

    /// Replace the canonical suffix from `fork_height` with a competing
    /// branch that is `extend` blocks longer than what it displaces, so the
    /// longest-chain rule adopts it.
    ///
    /// With `keep_txs` the replacement re-commits the displaced transactions
    /// at their original positions; re-built blocks that come out identical
    /// (same parent, same content, hence same header hash) are recognized and
    /// left in place, so such a reorg degenerates to a pure extension.
    /// Without it, the displaced transactions return to the mempool and the
    /// first replacement block carries a synthetic churn transaction, which
    /// guarantees every replacement header differs from the one it evicts.
    pub fn inject_reorg(
        &mut self,
        fork_height: u64,
        extend: u64,
        keep_txs: bool,
    ) -> Result<ReorgOutcome, ChainError> {
        let head = self.head_height();
        if fork_height == 0 || fork_height > head {
            return Err(ChainError::InvalidForkHeight { fork: fork_height, head });
        }
        let displaced: Vec<Block> = self.canonical.split_off(fork_height as usize);

        // Assemble the transaction sets of the replacement branch.
        let mut tx_sets: Vec<Vec<Transaction>> = Vec::new();
        if keep_txs {
            for b in &displaced {
                tx_sets.push(b.txs.clone());
            }
        } else {
            let churn = Transaction::plain(
                self.id,
                Address::derive(self.seed, "reorg-churn", self.churn_nonce),
                self.churn_nonce,
            );
            self.churn_nonce += 1;
            tx_sets.push(vec![churn]);
            for _ in 1..displaced.len() {
                tx_sets.push(Vec::new());
            }
        }
        for _ in 0..extend {
            tx_sets.push(Vec::new());
        }

        // Build the branch and re-attach, keeping any leading blocks that
        // reproduce the originals exactly.
        let mut first_changed = None;
        let mut dropped: Vec<Hash32> = Vec::new();
        for (offset, txs) in tx_sets.into_iter().enumerate() {
            let height = fork_height + offset as u64;
            let block = self.build_block(height, self.tip_hash(), txs);
            if first_changed.is_none() {
                if let Some(orig) = displaced.get(offset) {
                    if orig.header.hash() == block.header.hash() {
                        self.canonical.push(orig.clone());
                        continue;
                    }
                }
                first_changed = Some(height);
            }
            self.canonical.push(block);
        }

        // Displaced transactions not re-committed anywhere on the new branch
        // go back to the mempool, preserving their original order.
        let from = first_changed.unwrap_or(fork_height + displaced.len() as u64);
        for b in displaced.iter().filter(|b| b.header.height >= from) {
            for tx in &b.txs {
                if self.find_tx(tx.digest()).is_none() {
                    dropped.push(tx.digest());
                    self.mempool.push_back(tx.clone());
                }
            }
        }

        debug_assert!(self.validate_links());
        Ok(ReorgOutcome {
            first_changed_height: from,
            displaced_blocks: (fork_height + displaced.len() as u64).saturating_sub(from),
            dropped_tx_digests: dropped,
            new_head: self.head_height(),
        })
    }
}
