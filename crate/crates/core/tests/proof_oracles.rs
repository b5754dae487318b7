//! Cross-checks of the production commitment builders against the
//! independently written reference implementations in the testkit, plus
//! binding tests showing a proof cannot be bent to a different digest.

use omnirelay_core::proof::{Proof, ProofError, ProofScheme};
use omnirelay_core::types::{keccak256, Hash32};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn digests(n: usize) -> Vec<Hash32> {
    (0..n).map(|i| keccak256(format!("tx-{i}").as_bytes())).collect()
}

#[test]
fn binary_roots_match_reference_for_all_small_sizes() {
    for n in 0..=64 {
        let d = digests(n);
        assert_eq!(
            ProofScheme::BinaryMerkle.root(&d),
            omnirelay_testkit::reference::merkle_root(&d),
            "binary root diverges at {n} leaves"
        );
    }
}

#[test]
fn patricia_roots_match_reference_for_all_small_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for n in 0..=64 {
        let d = digests(n);
        let forward: Vec<usize> = (0..n).collect();
        let mut shuffled = forward.clone();
        shuffled.shuffle(&mut rng);
        let expected = omnirelay_testkit::reference::mpt_root_for_digests(&d, &forward);
        assert_eq!(
            ProofScheme::MerklePatricia.root(&d),
            expected,
            "patricia root diverges at {n} entries"
        );
        // The reference builds by insertion; order must not matter.
        assert_eq!(
            omnirelay_testkit::reference::mpt_root_for_digests(&d, &shuffled),
            expected,
            "insertion order changed the root at {n} entries"
        );
    }
}

#[test]
fn patricia_handles_prefix_key_boundaries() {
    // Index 1 encodes as 0x01 and index 256 as 0x0100: one key is a strict
    // prefix of the other. Sizes straddling 256 force that case.
    for n in [255usize, 256, 257, 300] {
        let d = digests(n);
        let order: Vec<usize> = (0..n).collect();
        assert_eq!(
            ProofScheme::MerklePatricia.root(&d),
            omnirelay_testkit::reference::mpt_root_for_digests(&d, &order),
            "prefix-key divergence at {n} entries"
        );
        // Every index must also prove, including the prefix pair.
        for i in [0, 1, n - 1] {
            let p = ProofScheme::MerklePatricia.prove(&d, i).unwrap();
            let root = ProofScheme::MerklePatricia.root(&d);
            assert_eq!(p.verify(root).unwrap(), d[i].as_bytes());
        }
    }
}

#[test]
fn every_index_proves_under_both_schemes() {
    for scheme in [ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia] {
        for n in 1..=32 {
            let d = digests(n);
            let root = scheme.root(&d);
            for i in 0..n {
                let proof = scheme.prove(&d, i).unwrap();
                let value = proof.verify(root).unwrap_or_else(|e| {
                    panic!("{scheme:?} proof for {i}/{n} failed: {e}")
                });
                assert_eq!(value, d[i].as_bytes());
            }
        }
    }
}

/// Flip any single bit of an encoded proof: the result must either fail to
/// decode, fail to verify, or still prove a digest from the committed set.
/// It must never verify to a value outside the set — that would let a
/// relayer smuggle an unsent message past the validator.
#[test]
fn single_bit_flips_never_escape_the_committed_set() {
    for scheme in [ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia] {
        let d = digests(9);
        let root = scheme.root(&d);
        let committed: Vec<&[u8]> = d.iter().map(|h| h.as_bytes().as_slice()).collect();
        for index in [0usize, 4, 8] {
            let wire = scheme.prove(&d, index).unwrap().encode();
            for byte in 0..wire.len() {
                for bit in 0..8 {
                    let mut bent = wire.clone();
                    bent[byte] ^= 1 << bit;
                    let Ok(proof) = Proof::decode(&bent) else { continue };
                    let Ok(value) = proof.verify(root) else { continue };
                    assert!(
                        committed.contains(&value.as_slice()),
                        "{scheme:?}: flipping bit {bit} of byte {byte} in the proof for \
                         index {index} verified to a value outside the committed set"
                    );
                }
            }
        }
    }
}

#[test]
fn proofs_bind_to_their_root() {
    let d = digests(12);
    for scheme in [ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia] {
        let proof = scheme.prove(&d, 3).unwrap();
        let other_root = scheme.root(&digests(13));
        assert!(matches!(proof.verify(other_root), Err(ProofError::HashMismatch { at: 0 })));
    }
}

#[test]
fn wire_format_round_trips_and_rejects_noise() {
    let d = digests(7);
    for scheme in [ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia] {
        let proof = scheme.prove(&d, 5).unwrap();
        let wire = proof.encode();
        assert_eq!(Proof::decode(&wire).unwrap(), proof);

        let mut trailing = wire.clone();
        trailing.push(0);
        assert_eq!(Proof::decode(&trailing).unwrap_err(), ProofError::TrailingBytes);
        assert_eq!(Proof::decode(&wire[..wire.len() - 1]).unwrap_err(), ProofError::Truncated);
    }
    assert_eq!(Proof::decode(&[9, 0, 1, 0, 0, 0]).unwrap_err(), ProofError::UnknownScheme(9));
}
