//! Hex-nibble Merkle-Patricia trie keyed by transaction index.
//!
//! Keys are the minimal big-endian bytes of the index, split into 4-bit
//! nibbles (high nibble first). Because minimal encodings of different
//! lengths can prefix one another (index 1 is `0x01`, index 256 is `0x0100`),
//! branch nodes carry an optional value slot for a key that ends exactly at
//! that branch.
//!
//! Three node kinds, each serialized with a leading tag byte and referenced
//! by the Keccak-256 of its serialization:
//!
//! ```text
//! leaf       0x00 ‖ nibble count (2B BE) ‖ packed nibbles ‖ value len (4B BE) ‖ value
//! extension  0x01 ‖ nibble count (2B BE) ‖ packed nibbles ‖ child hash (32B)
//! branch     0x02 ‖ child bitmap (2B BE) ‖ child hashes ascending ‖ has-value (1B) ‖ [value len (4B BE) ‖ value]
//! ```
//!
//! Nibbles pack two per byte, high half first; an odd count leaves the final
//! low half zero, and the parser rejects nonzero padding so each node has
//! exactly one serialization.

use super::ProofError;
use crate::types::{keccak256, Hash32};
use std::collections::BTreeMap;

const LEAF_TAG: u8 = 0x00;
const EXTENSION_TAG: u8 = 0x01;
const BRANCH_TAG: u8 = 0x02;

/// Minimal big-endian byte encoding of a transaction index; index 0 encodes
/// as the single byte `0x00`.
pub fn index_key(index: u64) -> Vec<u8> {
    let bytes = index.to_be_bytes();
    let first = bytes.iter().position(|&b| b != 0).unwrap_or(7);
    bytes[first..].to_vec()
}

/// Expand key bytes to nibbles, high half of each byte first.
pub fn key_nibbles(key: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(key.len() * 2);
    for &b in key {
        out.push(b >> 4);
        out.push(b & 0x0F);
    }
    out
}

fn pack_nibbles(nibbles: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; nibbles.len().div_ceil(2)];
    for (i, &n) in nibbles.iter().enumerate() {
        debug_assert!(n <= 0x0F);
        if i % 2 == 0 {
            out[i / 2] |= n << 4;
        } else {
            out[i / 2] |= n;
        }
    }
    out
}

fn serialize_leaf(nibbles: &[u8], value: &[u8]) -> Vec<u8> {
    let mut out = vec![LEAF_TAG];
    out.extend_from_slice(&(nibbles.len() as u16).to_be_bytes());
    out.extend_from_slice(&pack_nibbles(nibbles));
    out.extend_from_slice(&(value.len() as u32).to_be_bytes());
    out.extend_from_slice(value);
    out
}

fn serialize_extension(nibbles: &[u8], child: Hash32) -> Vec<u8> {
    let mut out = vec![EXTENSION_TAG];
    out.extend_from_slice(&(nibbles.len() as u16).to_be_bytes());
    out.extend_from_slice(&pack_nibbles(nibbles));
    out.extend_from_slice(child.as_bytes());
    out
}

fn serialize_branch(children: &BTreeMap<u8, Built>, value: Option<&[u8]>) -> Vec<u8> {
    let mut out = vec![BRANCH_TAG];
    let mut bitmap = 0u16;
    for &nib in children.keys() {
        bitmap |= 1 << nib;
    }
    out.extend_from_slice(&bitmap.to_be_bytes());
    for child in children.values() {
        out.extend_from_slice(child.hash.as_bytes());
    }
    match value {
        Some(v) => {
            out.push(1);
            out.extend_from_slice(&(v.len() as u32).to_be_bytes());
            out.extend_from_slice(v);
        }
        None => out.push(0),
    }
    out
}

/// A constructed node: its one-and-only serialization, the hash referencing
/// it, and enough structure to walk proofs out of it.
struct Built {
    ser: Vec<u8>,
    hash: Hash32,
    kind: BuiltKind,
}

enum BuiltKind {
    Leaf { nibbles: Vec<u8> },
    Extension { nibbles: Vec<u8>, child: Box<Built> },
    Branch { children: BTreeMap<u8, Built>, has_value: bool },
}

impl Built {
    fn leaf(nibbles: Vec<u8>, value: Vec<u8>) -> Built {
        let ser = serialize_leaf(&nibbles, &value);
        Built { hash: keccak256(&ser), ser, kind: BuiltKind::Leaf { nibbles } }
    }

    fn extension(nibbles: Vec<u8>, child: Built) -> Built {
        let ser = serialize_extension(&nibbles, child.hash);
        Built { hash: keccak256(&ser), ser, kind: BuiltKind::Extension { nibbles, child: Box::new(child) } }
    }

    fn branch(children: BTreeMap<u8, Built>, value: Option<Vec<u8>>) -> Built {
        let ser = serialize_branch(&children, value.as_deref());
        Built {
            hash: keccak256(&ser),
            ser,
            kind: BuiltKind::Branch { children, has_value: value.is_some() },
        }
    }
}

/// Immutable trie built from a complete key/value set.
pub struct PatriciaTrie {
    root: Option<Built>,
}

impl PatriciaTrie {
    /// Trie over transaction digests, keyed by position.
    pub fn from_digests(digests: &[Hash32]) -> PatriciaTrie {
        let items: Vec<(Vec<u8>, Vec<u8>)> = digests
            .iter()
            .enumerate()
            .map(|(i, d)| (key_nibbles(&index_key(i as u64)), d.0.to_vec()))
            .collect();
        PatriciaTrie::from_entries(items)
    }

    /// Trie over arbitrary (key bytes, value) pairs. Keys must be distinct;
    /// the last value wins if they are not.
    pub fn from_items(items: &[(Vec<u8>, Vec<u8>)]) -> PatriciaTrie {
        let dedup: BTreeMap<Vec<u8>, Vec<u8>> =
            items.iter().map(|(k, v)| (key_nibbles(k), v.clone())).collect();
        PatriciaTrie::from_entries(dedup.into_iter().collect())
    }

    fn from_entries(mut items: Vec<(Vec<u8>, Vec<u8>)>) -> PatriciaTrie {
        items.sort();
        items.dedup_by(|a, b| a.0 == b.0);
        if items.is_empty() {
            return PatriciaTrie { root: None };
        }
        PatriciaTrie { root: Some(build(&items, 0)) }
    }

    /// Root reference; the empty trie shares the empty-root sentinel.
    pub fn root_hash(&self) -> Hash32 {
        match &self.root {
            Some(n) => n.hash,
            None => super::empty_root(),
        }
    }

    /// Root-to-value node serializations for `key`.
    pub fn prove(&self, key: &[u8]) -> Result<Vec<Vec<u8>>, ProofError> {
        let want = key_nibbles(key);
        let mut node = self.root.as_ref().ok_or(ProofError::EmptyTree)?;
        let mut pos = 0usize;
        let mut nodes = Vec::new();
        loop {
            nodes.push(node.ser.clone());
            match &node.kind {
                BuiltKind::Leaf { nibbles } => {
                    return if want[pos..] == nibbles[..] { Ok(nodes) } else { Err(ProofError::AbsentKey) };
                }
                BuiltKind::Extension { nibbles, child } => {
                    if want.len() >= pos + nibbles.len() && want[pos..pos + nibbles.len()] == nibbles[..] {
                        pos += nibbles.len();
                        node = child;
                    } else {
                        return Err(ProofError::AbsentKey);
                    }
                }
                BuiltKind::Branch { children, has_value } => {
                    if pos == want.len() {
                        return if *has_value { Ok(nodes) } else { Err(ProofError::AbsentKey) };
                    }
                    match children.get(&want[pos]) {
                        Some(child) => {
                            pos += 1;
                            node = child;
                        }
                        None => return Err(ProofError::AbsentKey),
                    }
                }
            }
        }
    }
}

/// Recursive batch construction over sorted, distinct nibble-key items.
fn build(items: &[(Vec<u8>, Vec<u8>)], depth: usize) -> Built {
    if items.len() == 1 {
        let (key, value) = &items[0];
        return Built::leaf(key[depth..].to_vec(), value.clone());
    }

    // Longest nibble run shared by every remaining suffix. A key that ends
    // exactly at `depth` forces zero (its suffix is empty), which lands us in
    // the branch case with a value slot.
    let first = &items[0].0[depth..];
    let mut lcp = first.len();
    for (key, _) in &items[1..] {
        let common = first
            .iter()
            .zip(key[depth..].iter())
            .take_while(|(a, b)| a == b)
            .count();
        lcp = lcp.min(common);
        if lcp == 0 {
            break;
        }
    }
    if lcp > 0 {
        let child = build(items, depth + lcp);
        return Built::extension(first[..lcp].to_vec(), child);
    }

    // Sorted order puts the ends-here key (if any) first.
    let mut rest = items;
    let mut value = None;
    if rest[0].0.len() == depth {
        value = Some(rest[0].1.clone());
        rest = &rest[1..];
    }
    let mut children = BTreeMap::new();
    let mut start = 0usize;
    while start < rest.len() {
        let nib = rest[start].0[depth];
        let mut end = start + 1;
        while end < rest.len() && rest[end].0[depth] == nib {
            end += 1;
        }
        children.insert(nib, build(&rest[start..end], depth + 1));
        start = end;
    }
    Built::branch(children, value)
}

/// One parsed node, hashes only — structure sufficient for verification.
/// Branch children are boxed so the three variants stay comparably sized.
#[cfg_attr(test, derive(Debug))]
enum Parsed {
    Leaf { nibbles: Vec<u8>, value: Vec<u8> },
    Extension { nibbles: Vec<u8>, child: Hash32 },
    Branch { children: Box<[Option<Hash32>; 16]>, value: Option<Vec<u8>> },
}

fn parse_node(bytes: &[u8]) -> Result<Parsed, &'static str> {
    let mut rest = bytes;
    fn take<'a>(rest: &mut &'a [u8], n: usize) -> Result<&'a [u8], &'static str> {
        if rest.len() < n {
            return Err("node bytes truncated");
        }
        let (head, tail) = rest.split_at(n);
        *rest = tail;
        Ok(head)
    }
    fn take_nibbles(rest: &mut &[u8]) -> Result<Vec<u8>, &'static str> {
        let count = u16::from_be_bytes(take(rest, 2)?.try_into().expect("2 bytes")) as usize;
        let packed = take(rest, count.div_ceil(2))?;
        if count % 2 == 1 && packed[packed.len() - 1] & 0x0F != 0 {
            return Err("nonzero nibble padding");
        }
        let mut nibbles = Vec::with_capacity(count);
        for i in 0..count {
            let b = packed[i / 2];
            nibbles.push(if i % 2 == 0 { b >> 4 } else { b & 0x0F });
        }
        Ok(nibbles)
    }
    fn take_value(rest: &mut &[u8]) -> Result<Vec<u8>, &'static str> {
        let len = u32::from_be_bytes(take(rest, 4)?.try_into().expect("4 bytes")) as usize;
        Ok(take(rest, len)?.to_vec())
    }

    let tag = take(&mut rest, 1)?[0];
    let parsed = match tag {
        LEAF_TAG => {
            let nibbles = take_nibbles(&mut rest)?;
            let value = take_value(&mut rest)?;
            Parsed::Leaf { nibbles, value }
        }
        EXTENSION_TAG => {
            let nibbles = take_nibbles(&mut rest)?;
            if nibbles.is_empty() {
                return Err("empty extension");
            }
            let child = Hash32(take(&mut rest, 32)?.try_into().expect("32 bytes"));
            Parsed::Extension { nibbles, child }
        }
        BRANCH_TAG => {
            let bitmap = u16::from_be_bytes(take(&mut rest, 2)?.try_into().expect("2 bytes"));
            let mut children: Box<[Option<Hash32>; 16]> = Box::new([None; 16]);
            for (nib, slot) in children.iter_mut().enumerate() {
                if bitmap & (1 << nib) != 0 {
                    *slot = Some(Hash32(take(&mut rest, 32)?.try_into().expect("32 bytes")));
                }
            }
            let value = match take(&mut rest, 1)?[0] {
                0 => None,
                1 => Some(take_value(&mut rest)?),
                _ => return Err("invalid has-value flag"),
            };
            if bitmap.count_ones() + u32::from(value.is_some()) < 2 {
                return Err("branch with fewer than two occupants");
            }
            Parsed::Branch { children, value }
        }
        _ => return Err("unknown node tag"),
    };
    if !rest.is_empty() {
        return Err("trailing bytes in node");
    }
    Ok(parsed)
}

/// Walk root-to-value serializations against a trusted root, consuming the
/// key nibble by nibble. Returns the proven value bytes.
pub fn verify(root: Hash32, key: &[u8], nodes: &[Vec<u8>]) -> Result<Vec<u8>, ProofError> {
    if nodes.is_empty() {
        return Err(ProofError::EmptyProof);
    }
    let want = key_nibbles(key);
    let mut expect = root;
    let mut pos = 0usize;
    for (at, node) in nodes.iter().enumerate() {
        if keccak256(node) != expect {
            return Err(ProofError::HashMismatch { at });
        }
        let last = at == nodes.len() - 1;
        match parse_node(node).map_err(|what| ProofError::NodeMalformed { at, what })? {
            Parsed::Leaf { nibbles, value } => {
                if !last {
                    return Err(ProofError::NodeMalformed { at, what: "leaf before end of proof" });
                }
                if want[pos..] != nibbles[..] {
                    return Err(ProofError::KeyMismatch);
                }
                return Ok(value);
            }
            Parsed::Extension { nibbles, child } => {
                if want.len() < pos + nibbles.len() || want[pos..pos + nibbles.len()] != nibbles[..] {
                    return Err(ProofError::KeyMismatch);
                }
                pos += nibbles.len();
                expect = child;
            }
            Parsed::Branch { children, value } => {
                if pos == want.len() {
                    if !last {
                        return Err(ProofError::NodeMalformed { at, what: "terminal branch before end of proof" });
                    }
                    return value.ok_or(ProofError::AbsentKey);
                }
                match children[want[pos] as usize] {
                    Some(child) => {
                        pos += 1;
                        expect = child;
                    }
                    None => return Err(ProofError::AbsentKey),
                }
            }
        }
    }
    // Every node was consumed without reaching a value.
    Err(ProofError::UnresolvedKey)
}
