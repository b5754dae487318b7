//! Property tests for the simulated chains: whatever sequence of mining and
//! reorgs happens, the structural invariants the rest of the system leans
//! on must hold — intact hash links, recomputable transaction roots,
//! monotonic confirmations for surviving blocks, and full determinism.

use omnirelay_core::chain::{SimChain, Transaction};
use omnirelay_core::packet::{Dst, Packet, RelayerArgs};
use omnirelay_core::proof::ProofScheme;
use omnirelay_core::types::{Address, ChainId};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    /// Mine one block carrying this many fresh messages.
    Mine { msgs: u8 },
    /// Reorg at a fork point selected by `fork_sel % head`, growing the
    /// chain by `extend`.
    Reorg { fork_sel: u8, extend: u8, keep_txs: bool },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => (0u8..5).prop_map(|msgs| Op::Mine { msgs }),
        1 => (any::<u8>(), 1u8..3, any::<bool>())
            .prop_map(|(fork_sel, extend, keep_txs)| Op::Reorg { fork_sel, extend, keep_txs }),
    ]
}

/// Run an op sequence against a fresh chain, checking invariants as it goes.
fn apply(ops: &[Op], scheme: ProofScheme, seed: u64) -> SimChain {
    let mut chain = SimChain::new(ChainId(1), 4, scheme, seed);
    let mut nonce = 0u64;
    for op in ops {
        match *op {
            Op::Mine { msgs } => {
                for _ in 0..msgs {
                    let tx = Transaction::app_call(
                        ChainId(1),
                        Address::derive(seed, "prop-sender", nonce),
                        Packet::new(
                            Dst { chain: ChainId(2), address: Address::derive(seed, "prop-to", 0) },
                            nonce.to_be_bytes().to_vec(),
                        ),
                        RelayerArgs { payee: Address::derive(seed, "prop-payee", 0), max_fee: 1 },
                        nonce,
                    );
                    nonce += 1;
                    chain.submit_tx(tx);
                }
                chain.mine_block();
            }
            Op::Reorg { fork_sel, extend, keep_txs } => {
                let head = chain.head_height();
                if head == 0 {
                    continue;
                }
                let fork_height = 1 + u64::from(fork_sel) % head;
                chain
                    .inject_reorg(fork_height, u64::from(extend), keep_txs)
                    .expect("fork point is within 1..=head");
            }
        }
        assert!(chain.validate_links(), "hash links broke after {op:?}");
    }
    chain
}

proptest! {
    /// Every canonical header commits to exactly the transactions below it.
    #[test]
    fn roots_recompute_from_block_bodies(ops in prop::collection::vec(op(), 1..16), mpt in any::<bool>()) {
        let scheme = if mpt { ProofScheme::MerklePatricia } else { ProofScheme::BinaryMerkle };
        let chain = apply(&ops, scheme, 17);
        for height in 0..=chain.head_height() {
            let block = chain.block_at(height).unwrap();
            prop_assert_eq!(
                scheme.root(&block.tx_digests()),
                block.header.tx_root,
                "root mismatch at height {}", height
            );
        }
    }

    /// Every committed digest is findable, and the lookup points at the
    /// transaction that actually hashes to it.
    #[test]
    fn committed_digests_resolve_to_their_transactions(ops in prop::collection::vec(op(), 1..16)) {
        let chain = apply(&ops, ProofScheme::BinaryMerkle, 23);
        for digest in chain.committed_digests() {
            let (height, index) = chain.find_tx(digest).expect("committed digest is findable");
            prop_assert_eq!(chain.block_at(height).unwrap().txs[index].digest(), digest);
        }
    }

    /// A proof built from any committed block verifies against that block's
    /// header root and yields the right digest.
    #[test]
    fn inclusion_proofs_hold_for_every_committed_transaction(
        ops in prop::collection::vec(op(), 1..12),
        mpt in any::<bool>(),
    ) {
        let scheme = if mpt { ProofScheme::MerklePatricia } else { ProofScheme::BinaryMerkle };
        let chain = apply(&ops, scheme, 29);
        for height in 1..=chain.head_height() {
            let block = chain.block_at(height).unwrap();
            let digests = block.tx_digests();
            for (i, d) in digests.iter().enumerate() {
                let proof = scheme.prove(&digests, i).unwrap();
                prop_assert_eq!(proof.verify(block.header.tx_root).unwrap(), d.as_bytes());
            }
        }
    }

    /// Both mining and reorgs only ever push surviving blocks deeper:
    /// confirmations never decrease as long as the block stays canonical.
    #[test]
    fn confirmations_grow_monotonically(ops in prop::collection::vec(op(), 1..16)) {
        let mut chain = SimChain::new(ChainId(1), 4, ProofScheme::BinaryMerkle, 31);
        chain.mine_block();
        let tracked = 1u64;
        let mut last = chain.confirmations(tracked).unwrap();
        let tracked_hash = chain.header_at(tracked).unwrap().hash();
        for op in &ops {
            match *op {
                Op::Mine { .. } => { chain.mine_block(); }
                Op::Reorg { fork_sel, extend, keep_txs } => {
                    let head = chain.head_height();
                    let fork_height = 1 + u64::from(fork_sel) % head;
                    chain.inject_reorg(fork_height, u64::from(extend), keep_txs).unwrap();
                }
            }
            if chain.header_at(tracked).unwrap().hash() == tracked_hash {
                let now = chain.confirmations(tracked).unwrap();
                prop_assert!(now >= last, "confirmations for height 1 fell {last} -> {now}");
                last = now;
            } else {
                // Displaced: the old observation chain restarts.
                last = chain.confirmations(tracked).unwrap();
            }
        }
    }

    /// Displaced transactions either come back through the mempool or are
    /// re-committed; a content-keeping reorg displaces none at all.
    #[test]
    fn reorgs_conserve_transactions(
        msgs in prop::collection::vec(0u8..5, 2..8),
        fork_sel in any::<u8>(),
        extend in 1u64..3,
        keep_txs in any::<bool>(),
    ) {
        let mut chain = SimChain::new(ChainId(1), 4, ProofScheme::BinaryMerkle, 37);
        let mut nonce = 0;
        for m in &msgs {
            for _ in 0..*m {
                chain.submit_tx(Transaction::plain(ChainId(1), Address::derive(37, "s", nonce), nonce));
                nonce += 1;
            }
            chain.mine_block();
        }
        let before = chain.committed_digests();
        let fork_height = 1 + u64::from(fork_sel) % chain.head_height();
        let outcome = chain.inject_reorg(fork_height, extend, keep_txs).unwrap();
        let after = chain.committed_digests();

        if keep_txs {
            prop_assert!(outcome.dropped_tx_digests.is_empty());
            for d in &before {
                prop_assert!(after.contains(d), "content-keeping reorg lost a transaction");
            }
        } else {
            for d in &outcome.dropped_tx_digests {
                prop_assert!(!after.contains(d), "a dropped digest is still committed");
            }
            // Dropped transactions sit in the mempool; one mine restores them.
            let dropped = outcome.dropped_tx_digests.len();
            prop_assert!(chain.mempool_len() >= dropped);
            chain.mine_block();
            let restored = chain.committed_digests();
            for d in &outcome.dropped_tx_digests {
                prop_assert!(restored.contains(d), "a dropped digest never re-committed");
            }
        }
        prop_assert_eq!(outcome.new_head, chain.head_height() - if keep_txs { 0 } else { 1 });
    }

    /// The same op sequence replays to the identical chain, tip hash and all.
    #[test]
    fn chains_are_deterministic(ops in prop::collection::vec(op(), 1..16)) {
        let a = apply(&ops, ProofScheme::MerklePatricia, 43);
        let b = apply(&ops, ProofScheme::MerklePatricia, 43);
        prop_assert_eq!(a.tip_hash(), b.tip_hash());
        prop_assert_eq!(a.head_height(), b.head_height());
        prop_assert_eq!(a.committed_digests(), b.committed_digests());
    }
}
