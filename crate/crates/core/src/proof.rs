//! Transaction-inclusion proofs.
//!
//! A block commits to its transactions through a root hash computed under one
//! of two schemes: a duplicate-padded binary Merkle tree ([`binary`]) or a
//! hex-nibble Patricia trie keyed by transaction index ([`mpt`]). Both produce
//! proofs with the same shape — the full preimage of every node on the path
//! from the root to the proven entry — so verification is uniform: hash each
//! node, check it matches the reference the previous node (or the trusted
//! root) committed to, and walk downward until the key resolves to a value.
//!
//! Proofs serialize to a fixed wire layout:
//!
//! ```text
//! scheme tag      1 byte   (0 = binary Merkle, 1 = Merkle-Patricia)
//! key length      2 bytes  big-endian
//! key             N bytes  (minimal big-endian transaction index)
//! node count      2 bytes  big-endian
//! per node:       4-byte big-endian length, then the node bytes
//! ```
//!
//! Decoding is strict: unknown tags, short buffers, and trailing bytes are
//! all rejected before verification is even attempted.

pub mod binary;
pub mod mpt;

pub use mpt::{index_key, PatriciaTrie};

use crate::types::{keccak256, Hash32};
use thiserror::Error;

/// Root hash of an empty transaction set, shared by both schemes.
pub fn empty_root() -> Hash32 {
    keccak256(b"")
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum ProofScheme {
    BinaryMerkle,
    MerklePatricia,
}

impl ProofScheme {
    pub const fn tag(self) -> u8 {
        match self {
            ProofScheme::BinaryMerkle => 0,
            ProofScheme::MerklePatricia => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<ProofScheme> {
        match tag {
            0 => Some(ProofScheme::BinaryMerkle),
            1 => Some(ProofScheme::MerklePatricia),
            _ => None,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            ProofScheme::BinaryMerkle => "binary_merkle",
            ProofScheme::MerklePatricia => "merkle_patricia",
        }
    }

    pub fn parse(s: &str) -> Option<ProofScheme> {
        match s {
            "binary_merkle" => Some(ProofScheme::BinaryMerkle),
            "merkle_patricia" => Some(ProofScheme::MerklePatricia),
            _ => None,
        }
    }

    /// Commitment root over an ordered list of transaction digests.
    pub fn root(self, digests: &[Hash32]) -> Hash32 {
        match self {
            ProofScheme::BinaryMerkle => binary::root(digests),
            ProofScheme::MerklePatricia => PatriciaTrie::from_digests(digests).root_hash(),
        }
    }

    /// Inclusion proof for the transaction at `index`.
    pub fn prove(self, digests: &[Hash32], index: usize) -> Result<Proof, ProofError> {
        if digests.is_empty() {
            return Err(ProofError::EmptyTree);
        }
        if index >= digests.len() {
            return Err(ProofError::IndexOutOfRange {
                index: index as u64,
                len: digests.len() as u64,
            });
        }
        let key = index_key(index as u64);
        let nodes = match self {
            ProofScheme::BinaryMerkle => binary::prove(digests, index)?,
            ProofScheme::MerklePatricia => PatriciaTrie::from_digests(digests).prove(&key)?,
        };
        Ok(Proof { scheme: self, key, nodes })
    }
}

/// A decoded inclusion proof: the scheme, the key it claims to resolve, and
/// the root-to-value node preimages.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Proof {
    pub scheme: ProofScheme,
    pub key: Vec<u8>,
    pub nodes: Vec<Vec<u8>>,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ProofError {
    #[error("cannot prove inclusion in an empty block")]
    EmptyTree,
    #[error("transaction index {index} out of range for {len} entries")]
    IndexOutOfRange { index: u64, len: u64 },
    #[error("proof contains no nodes")]
    EmptyProof,
    #[error("node {at} does not hash to the reference committed above it")]
    HashMismatch { at: usize },
    #[error("node {at} malformed: {what}")]
    NodeMalformed { at: usize, what: &'static str },
    #[error("proof path disagrees with the key")]
    KeyMismatch,
    #[error("key is absent from the committed set")]
    AbsentKey,
    #[error("proof ends before the key is resolved")]
    UnresolvedKey,
    #[error("proof bytes truncated")]
    Truncated,
    #[error("unknown proof scheme tag {0}")]
    UnknownScheme(u8),
    #[error("trailing bytes after proof")]
    TrailingBytes,
    #[error("invalid index key encoding")]
    BadIndexKey,
    #[error("proof scheme does not match the validating library")]
    SchemeMismatch,
}

impl ProofError {
    /// Compact, whitespace-free code for event-log `detail` fields.
    pub fn code(&self) -> String {
        match self {
            ProofError::EmptyTree => "EmptyTree".into(),
            ProofError::IndexOutOfRange { index, len } => format!("IndexOutOfRange({index},{len})"),
            ProofError::EmptyProof => "EmptyProof".into(),
            ProofError::HashMismatch { at } => format!("HashMismatch({at})"),
            ProofError::NodeMalformed { at, .. } => format!("NodeMalformed({at})"),
            ProofError::KeyMismatch => "KeyMismatch".into(),
            ProofError::AbsentKey => "AbsentKey".into(),
            ProofError::UnresolvedKey => "UnresolvedKey".into(),
            ProofError::Truncated => "Truncated".into(),
            ProofError::UnknownScheme(tag) => format!("UnknownScheme({tag})"),
            ProofError::TrailingBytes => "TrailingBytes".into(),
            ProofError::BadIndexKey => "BadIndexKey".into(),
            ProofError::SchemeMismatch => "SchemeMismatch".into(),
        }
    }
}

impl Proof {
    /// Check this proof against a trusted root. On success returns the proven
    /// value — for transaction proofs, the 32-byte transaction digest.
    pub fn verify(&self, root: Hash32) -> Result<Vec<u8>, ProofError> {
        match self.scheme {
            ProofScheme::BinaryMerkle => {
                let index = decode_index(&self.key)?;
                binary::verify(root, index, &self.nodes)
            }
            ProofScheme::MerklePatricia => mpt::verify(root, &self.key, &self.nodes),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.key.len() + self.nodes.iter().map(|n| 4 + n.len()).sum::<usize>());
        out.push(self.scheme.tag());
        out.extend_from_slice(&(self.key.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.key);
        out.extend_from_slice(&(self.nodes.len() as u16).to_be_bytes());
        for n in &self.nodes {
            out.extend_from_slice(&(n.len() as u32).to_be_bytes());
            out.extend_from_slice(n);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Proof, ProofError> {
        let mut rest = bytes;
        fn take<'a>(rest: &mut &'a [u8], n: usize) -> Result<&'a [u8], ProofError> {
            if rest.len() < n {
                return Err(ProofError::Truncated);
            }
            let (head, tail) = rest.split_at(n);
            *rest = tail;
            Ok(head)
        }
        let tag = take(&mut rest, 1)?[0];
        let scheme = ProofScheme::from_tag(tag).ok_or(ProofError::UnknownScheme(tag))?;
        let key_len = u16::from_be_bytes(take(&mut rest, 2)?.try_into().expect("2 bytes")) as usize;
        let key = take(&mut rest, key_len)?.to_vec();
        let node_count = u16::from_be_bytes(take(&mut rest, 2)?.try_into().expect("2 bytes")) as usize;
        let mut nodes = Vec::with_capacity(node_count.min(1024));
        for _ in 0..node_count {
            let len = u32::from_be_bytes(take(&mut rest, 4)?.try_into().expect("4 bytes")) as usize;
            nodes.push(take(&mut rest, len)?.to_vec());
        }
        if !rest.is_empty() {
            return Err(ProofError::TrailingBytes);
        }
        Ok(Proof { scheme, key, nodes })
    }
}

/// Parse a minimal big-endian index key back to the integer it encodes.
fn decode_index(key: &[u8]) -> Result<u64, ProofError> {
    if key.is_empty() || key.len() > 8 || (key.len() > 1 && key[0] == 0) {
        return Err(ProofError::BadIndexKey);
    }
    Ok(key.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digests(n: u64) -> Vec<Hash32> {
        (0..n).map(|i| keccak256(&i.to_be_bytes())).collect()
    }

    #[test]
    fn schemes_share_the_empty_root_sentinel() {
        assert_eq!(ProofScheme::BinaryMerkle.root(&[]), empty_root());
        assert_eq!(ProofScheme::MerklePatricia.root(&[]), empty_root());
        assert_eq!(
            empty_root().to_hex(),
            "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
        );
    }

    #[test]
    fn end_to_end_prove_encode_decode_verify() {
        let ds = digests(13);
        for scheme in [ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia] {
            let root = scheme.root(&ds);
            for (i, d) in ds.iter().enumerate() {
                let proof = scheme.prove(&ds, i).unwrap();
                let wire = proof.encode();
                let back = Proof::decode(&wire).unwrap();
                assert_eq!(back, proof);
                assert_eq!(back.verify(root).unwrap(), d.0.to_vec());
            }
        }
    }

    #[test]
    fn prove_bounds() {
        assert_eq!(ProofScheme::BinaryMerkle.prove(&[], 0).unwrap_err(), ProofError::EmptyTree);
        let ds = digests(3);
        assert_eq!(
            ProofScheme::MerklePatricia.prove(&ds, 3).unwrap_err(),
            ProofError::IndexOutOfRange { index: 3, len: 3 }
        );
    }

    #[test]
    fn decode_rejects_every_truncation() {
        let ds = digests(5);
        let wire = ProofScheme::MerklePatricia.prove(&ds, 2).unwrap().encode();
        for len in 0..wire.len() {
            assert_eq!(
                Proof::decode(&wire[..len]).unwrap_err(),
                ProofError::Truncated,
                "prefix of {len} bytes should be truncated"
            );
        }
        assert!(Proof::decode(&wire).is_ok());
    }

    #[test]
    fn decode_rejects_trailing_and_unknown_scheme() {
        let ds = digests(4);
        let mut wire = ProofScheme::BinaryMerkle.prove(&ds, 1).unwrap().encode();
        wire.push(0x00);
        assert_eq!(Proof::decode(&wire).unwrap_err(), ProofError::TrailingBytes);
        wire.pop();
        wire[0] = 2;
        assert_eq!(Proof::decode(&wire).unwrap_err(), ProofError::UnknownScheme(2));
    }

    #[test]
    fn cross_scheme_relabeling_fails_verification() {
        let ds = digests(6);
        for (scheme, other) in [
            (ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia),
            (ProofScheme::MerklePatricia, ProofScheme::BinaryMerkle),
        ] {
            let root = scheme.root(&ds);
            let mut proof = scheme.prove(&ds, 2).unwrap();
            proof.scheme = other;
            assert!(proof.verify(root).is_err(), "{other:?} accepted a {scheme:?} proof");
        }
    }

    #[test]
    fn index_key_decode_round_trip_and_strictness() {
        for i in [0u64, 1, 255, 256, 65535, 65536, u64::MAX] {
            assert_eq!(decode_index(&index_key(i)).unwrap(), i);
        }
        assert_eq!(decode_index(&[]).unwrap_err(), ProofError::BadIndexKey);
        assert_eq!(decode_index(&[0, 1]).unwrap_err(), ProofError::BadIndexKey);
        assert_eq!(decode_index(&[1; 9]).unwrap_err(), ProofError::BadIndexKey);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [ProofScheme::BinaryMerkle, ProofScheme::MerklePatricia] {
            assert_eq!(ProofScheme::parse(s.as_str()), Some(s));
            assert_eq!(ProofScheme::from_tag(s.tag()), Some(s));
        }
        assert_eq!(ProofScheme::parse("merkle"), None);
    }
}
