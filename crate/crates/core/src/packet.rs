//! Cross-chain packet: the unit handed from a sending application to the
//! endpoint stack and ultimately delivered on the destination chain.
//!
//! Wire layout is fixed:
//!
//! ```text
//! offset  size  field
//! 0       2     destination chain id, big-endian
//! 2       20    destination address
//! 22      N     payload (opaque application bytes, may be empty)
//! ```
//!
//! A packet is therefore at least 22 bytes. Payload size is bounded by the
//! endpoint's configured maximum (`DEFAULT_MAX_PAYLOAD` unless overridden).

use crate::types::{Address, ChainId};
use thiserror::Error;

/// Default upper bound on payload size in bytes (64 KiB).
pub const DEFAULT_MAX_PAYLOAD: usize = 65_536;

/// Minimum encoded packet size: chain id + address, no payload.
pub const PACKET_HEADER_LEN: usize = 22;

/// Destination of a packet: which chain, and which registered application
/// address on that chain.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Dst {
    pub chain: ChainId,
    pub address: Address,
}

/// Fee terms a sender attaches for the relayer: who gets paid and the most
/// the sender is willing to pay for proof delivery.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RelayerArgs {
    pub payee: Address,
    pub max_fee: u64,
}

/// A routable message. `payload` is opaque to every protocol layer; only the
/// receiving application interprets it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Packet {
    pub dst: Dst,
    pub payload: Vec<u8>,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PacketError {
    /// Fewer than 22 bytes: cannot even hold the routing header.
    #[error("packet truncated: {0} bytes, need at least {PACKET_HEADER_LEN}")]
    TruncatedPacket(usize),
    /// Payload exceeds the configured maximum.
    #[error("payload too large: {got} bytes exceeds limit {limit}")]
    PayloadTooLarge { got: usize, limit: usize },
}

impl Packet {
    pub fn new(dst: Dst, payload: Vec<u8>) -> Packet {
        Packet { dst, payload }
    }

    /// Serialize to the wire layout above.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(PACKET_HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.dst.chain.0.to_be_bytes());
        out.extend_from_slice(self.dst.address.as_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parse the wire layout. `max_payload` is the receiving endpoint's
    /// configured bound; anything longer is rejected rather than delivered.
    pub fn decode(bytes: &[u8], max_payload: usize) -> Result<Packet, PacketError> {
        if bytes.len() < PACKET_HEADER_LEN {
            return Err(PacketError::TruncatedPacket(bytes.len()));
        }
        let payload_len = bytes.len() - PACKET_HEADER_LEN;
        if payload_len > max_payload {
            return Err(PacketError::PayloadTooLarge { got: payload_len, limit: max_payload });
        }
        let chain = ChainId(u16::from_be_bytes([bytes[0], bytes[1]]));
        let mut addr = [0u8; 20];
        addr.copy_from_slice(&bytes[2..22]);
        Ok(Packet {
            dst: Dst { chain, address: Address(addr) },
            payload: bytes[PACKET_HEADER_LEN..].to_vec(),
        })
    }
}
