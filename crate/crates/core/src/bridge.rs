//! Lock-and-mint token bridge, the demo application riding on the messaging
//! layer.
//!
//! Tokens live on the source chain. Locking them escrows the amount and emits
//! a mint instruction as a message payload; when the message is delivered on
//! the destination chain, the wrapped balance is minted to the named
//! recipient. With honest delivery the wrapped supply can never exceed the
//! escrowed amount — the audit checks exactly that, and a successful
//! oracle/relayer collusion is what breaks it.

use crate::types::{Address, ChainId};
use std::collections::BTreeMap;
use thiserror::Error;

/// Mint instruction carried as a packet payload: recipient then amount,
/// exactly 28 bytes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BridgePayload {
    pub recipient: Address,
    pub amount: u64,
}

/// Encoded payload length: 20-byte recipient plus 8-byte big-endian amount.
pub const BRIDGE_PAYLOAD_LEN: usize = 28;

impl BridgePayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BRIDGE_PAYLOAD_LEN);
        out.extend_from_slice(self.recipient.as_bytes());
        out.extend_from_slice(&self.amount.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<BridgePayload, BridgeError> {
        if bytes.len() != BRIDGE_PAYLOAD_LEN {
            return Err(BridgeError::MalformedPayload { len: bytes.len() });
        }
        let mut recipient = [0u8; 20];
        recipient.copy_from_slice(&bytes[..20]);
        let amount = u64::from_be_bytes(bytes[20..].try_into().expect("8 bytes"));
        Ok(BridgePayload { recipient: Address(recipient), amount })
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum BridgeError {
    #[error("insufficient funds: have {have}, need {need}")]
    InsufficientFunds { have: u64, need: u64 },
    #[error("mint payload must be {BRIDGE_PAYLOAD_LEN} bytes, got {len}")]
    MalformedPayload { len: usize },
}

/// Bridge state across both chains. The simulator owns one instance and
/// routes deliveries addressed to `dst_address` into [`Bridge::mint`].
pub struct Bridge {
    pub src: ChainId,
    pub dst: ChainId,
    /// The bridge's application address on the source chain (message sender).
    pub src_address: Address,
    /// The registered receiving address on the destination chain.
    pub dst_address: Address,
    /// Spendable balances on the source chain.
    available: BTreeMap<Address, u64>,
    /// Total escrowed by locks.
    locked: u64,
    /// Wrapped balances minted on the destination chain.
    minted: BTreeMap<Address, u64>,
    total_minted: u64,
}

impl Bridge {
    pub fn new(src: ChainId, dst: ChainId, src_address: Address, dst_address: Address) -> Bridge {
        Bridge {
            src,
            dst,
            src_address,
            dst_address,
            available: BTreeMap::new(),
            locked: 0,
            minted: BTreeMap::new(),
            total_minted: 0,
        }
    }

    pub fn fund(&mut self, who: Address, amount: u64) {
        *self.available.entry(who).or_insert(0) += amount;
    }

    pub fn available_of(&self, who: &Address) -> u64 {
        self.available.get(who).copied().unwrap_or(0)
    }

    pub fn minted_of(&self, who: &Address) -> u64 {
        self.minted.get(who).copied().unwrap_or(0)
    }

    pub fn total_locked(&self) -> u64 {
        self.locked
    }

    pub fn total_minted(&self) -> u64 {
        self.total_minted
    }

    /// Source side: escrow `amount` from `user` and return the mint
    /// instruction to send across.
    pub fn lock(
        &mut self,
        user: Address,
        amount: u64,
        recipient: Address,
    ) -> Result<BridgePayload, BridgeError> {
        let have = self.available_of(&user);
        if have < amount {
            return Err(BridgeError::InsufficientFunds { have, need: amount });
        }
        self.available.insert(user, have - amount);
        self.locked += amount;
        Ok(BridgePayload { recipient, amount })
    }

    /// Destination side: execute a delivered mint instruction.
    pub fn mint(&mut self, payload: &[u8]) -> Result<BridgePayload, BridgeError> {
        let instruction = BridgePayload::decode(payload)?;
        *self.minted.entry(instruction.recipient).or_insert(0) += instruction.amount;
        self.total_minted += instruction.amount;
        Ok(instruction)
    }

    /// Solvency: wrapped supply must never exceed escrow. Honest runs keep
    /// this true; a successful collusion mints out of thin air and breaks it.
    pub fn is_balanced(&self) -> bool {
        self.total_minted <= self.locked
    }
}
