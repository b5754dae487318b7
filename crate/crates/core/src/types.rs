//! Shared primitive types: hashes, chain identifiers, addresses.

use sha3::{Digest, Keccak256};
use std::fmt;

/// 32-byte Keccak-256 digest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Hash32> {
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 32] = bytes.try_into().ok()?;
        Some(Hash32(arr))
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash32({})", &self.to_hex()[..12])
    }
}

impl From<[u8; 32]> for Hash32 {
    fn from(b: [u8; 32]) -> Self {
        Hash32(b)
    }
}

/// Keccak-256 over one byte slice. All commitments in the system (headers,
/// transaction digests, trie nodes) use this single hash function.
pub fn keccak256(data: &[u8]) -> Hash32 {
    let mut out = [0u8; 32];
    out.copy_from_slice(&Keccak256::digest(data));
    Hash32(out)
}

/// Keccak-256 over the concatenation of several slices, without allocating.
pub fn keccak256_concat(parts: &[&[u8]]) -> Hash32 {
    let mut hasher = Keccak256::new();
    for p in parts {
        hasher.update(p);
    }
    let mut out = [0u8; 32];
    out.copy_from_slice(&hasher.finalize());
    Hash32(out)
}

/// Chain identifier. Fits the 16-bit packet routing field.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ChainId(pub u16);

impl fmt::Display for ChainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 20-byte account / contract address.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Address> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let bytes = hex::decode(s).ok()?;
        let arr: [u8; 20] = bytes.try_into().ok()?;
        Some(Address(arr))
    }

    /// Deterministic synthetic address derived from a seed and a label.
    /// Scenario runs use this so that identities depend only on the seed.
    pub fn derive(seed: u64, label: &str, ordinal: u64) -> Address {
        let h = keccak256_concat(&[&seed.to_be_bytes(), label.as_bytes(), &ordinal.to_be_bytes()]);
        let mut a = [0u8; 20];
        a.copy_from_slice(&h.0[..20]);
        Address(a)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address(0x{})", self.to_hex())
    }
}

/// Deterministic byte-string generator keyed by seed and label. Used for
/// synthetic payloads and fabricated content so runs are seed-reproducible.
pub fn derive_bytes(seed: u64, label: &str, ordinal: u64, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len);
    let mut counter = 0u64;
    while out.len() < len {
        let h = keccak256_concat(&[
            &seed.to_be_bytes(),
            label.as_bytes(),
            &ordinal.to_be_bytes(),
            &counter.to_be_bytes(),
        ]);
        let take = (len - out.len()).min(32);
        out.extend_from_slice(&h.0[..take]);
        counter += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keccak_empty_matches_known_vector() {
        assert_eq!(
            keccak256(b"").to_hex(),
            "c5d2460186f7233c927e7db2dcc703c0e500b653ca82273b7bfad8045d85a470"
        );
    }

    #[test]
    fn keccak_concat_equals_whole() {
        assert_eq!(keccak256_concat(&[b"ab", b"c"]), keccak256(b"abc"));
    }

    #[test]
    fn address_hex_round_trip() {
        let a = Address([0x11; 20]);
        assert_eq!(Address::from_hex(&a.to_hex()), Some(a));
        assert_eq!(Address::from_hex("0x1111111111111111111111111111111111111111"), Some(a));
        assert_eq!(Address::from_hex("11"), None);
    }

    #[test]
    fn derive_is_deterministic() {
        assert_eq!(Address::derive(7, "sender", 3), Address::derive(7, "sender", 3));
        assert_ne!(Address::derive(7, "sender", 3), Address::derive(8, "sender", 3));
        assert_eq!(derive_bytes(1, "p", 0, 40), derive_bytes(1, "p", 0, 40));
        assert_eq!(derive_bytes(1, "p", 0, 40).len(), 40);
    }
}
