//! Duplicate-padded binary Merkle tree.
//!
//! Leaves are `keccak(0x00 ‖ digest)`, interior nodes `keccak(0x01 ‖ left ‖
//! right)`; a level with an odd node count pairs its last node with itself.
//! The tag bytes separate the leaf and interior domains, so an interior
//! preimage can never be re-presented as a leaf or vice versa.
//!
//! A proof is the list of node preimages from the root down to the leaf. The
//! verifier re-hashes each preimage, checks it against the reference selected
//! one level up, and picks the next child using the bits of the transaction
//! index (most significant path bit first).

use super::ProofError;
use crate::types::{keccak256, keccak256_concat, Hash32};

const LEAF_TAG: u8 = 0x00;
const INTERIOR_TAG: u8 = 0x01;

/// Byte length of a leaf preimage: tag plus a 32-byte digest.
const LEAF_LEN: usize = 33;
/// Byte length of an interior preimage: tag plus two 32-byte child hashes.
const INTERIOR_LEN: usize = 65;

fn leaf_hash(digest: &Hash32) -> Hash32 {
    keccak256_concat(&[&[LEAF_TAG], digest.as_bytes()])
}

fn interior_hash(left: &Hash32, right: &Hash32) -> Hash32 {
    keccak256_concat(&[&[INTERIOR_TAG], left.as_bytes(), right.as_bytes()])
}

/// All node-hash levels, leaves first. Never called on an empty set.
fn levels(digests: &[Hash32]) -> Vec<Vec<Hash32>> {
    let mut levels = vec![digests.iter().map(leaf_hash).collect::<Vec<_>>()];
    while levels.last().expect("at least the leaf level").len() > 1 {
        let prev = levels.last().expect("non-empty");
        let mut next = Vec::with_capacity(prev.len().div_ceil(2));
        for pair in 0..prev.len().div_ceil(2) {
            let left = prev[2 * pair];
            let right = prev.get(2 * pair + 1).copied().unwrap_or(left);
            next.push(interior_hash(&left, &right));
        }
        levels.push(next);
    }
    levels
}

/// Tree root; the empty set maps to the shared empty-root sentinel.
pub fn root(digests: &[Hash32]) -> Hash32 {
    if digests.is_empty() {
        return super::empty_root();
    }
    levels(digests).last().expect("root level")[0]
}

/// Root-to-leaf node preimages for the leaf at `index`.
pub fn prove(digests: &[Hash32], index: usize) -> Result<Vec<Vec<u8>>, ProofError> {
    if digests.is_empty() {
        return Err(ProofError::EmptyTree);
    }
    if index >= digests.len() {
        return Err(ProofError::IndexOutOfRange { index: index as u64, len: digests.len() as u64 });
    }
    let levels = levels(digests);

    let mut leaf = Vec::with_capacity(LEAF_LEN);
    leaf.push(LEAF_TAG);
    leaf.extend_from_slice(digests[index].as_bytes());
    let mut nodes = vec![leaf];

    let mut at = index;
    for level in &levels[..levels.len() - 1] {
        let left_idx = at & !1;
        let right_idx = if left_idx + 1 < level.len() { left_idx + 1 } else { left_idx };
        let mut interior = Vec::with_capacity(INTERIOR_LEN);
        interior.push(INTERIOR_TAG);
        interior.extend_from_slice(level[left_idx].as_bytes());
        interior.extend_from_slice(level[right_idx].as_bytes());
        nodes.push(interior);
        at >>= 1;
    }
    nodes.reverse();
    Ok(nodes)
}

/// Walk root-to-leaf preimages, steering by the bits of `index`. Returns the
/// proven digest bytes.
pub fn verify(root: Hash32, index: u64, nodes: &[Vec<u8>]) -> Result<Vec<u8>, ProofError> {
    if nodes.is_empty() {
        return Err(ProofError::EmptyProof);
    }
    let depth = nodes.len() - 1;
    if depth > 63 {
        return Err(ProofError::NodeMalformed { at: 0, what: "path deeper than the index space" });
    }
    if depth < 64 && index >= 1u64 << depth {
        // The index needs more path bits than the proof supplies.
        return Err(ProofError::KeyMismatch);
    }
    let mut expect = root;
    for (at, node) in nodes.iter().enumerate() {
        if keccak256(node) != expect {
            return Err(ProofError::HashMismatch { at });
        }
        if at < depth {
            if node.len() != INTERIOR_LEN || node[0] != INTERIOR_TAG {
                return Err(ProofError::NodeMalformed { at, what: "expected an interior node" });
            }
            let bit = (index >> (depth - 1 - at)) & 1;
            let child = if bit == 0 { &node[1..33] } else { &node[33..65] };
            expect = Hash32(child.try_into().expect("32-byte slice"));
        } else {
            if node.len() != LEAF_LEN || node[0] != LEAF_TAG {
                return Err(ProofError::NodeMalformed { at, what: "expected a leaf node" });
            }
            return Ok(node[1..].to_vec());
        }
    }
    unreachable!("loop returns at the leaf")
}
