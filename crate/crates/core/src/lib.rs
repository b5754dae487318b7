//! Cross-chain messaging over mutually distrusting ledgers.
//!
//! The crate simulates several independent blockchains and moves opaque
//! message packets between them. Delivery is gated on two independent
//! attestations — an oracle ships block headers, a relayer ships transaction
//! inclusion proofs — so no single off-chain party can forge a message unless
//! both collude.

pub mod agents;
pub mod audit;
pub mod bridge;
pub mod chain;
pub mod endpoint;
pub mod event;
pub mod packet;
pub mod proof;
pub mod scenario;
pub mod scheduler;
pub mod types;

// The vocabulary every consumer ends up importing — identifiers, hashing,
// the wire packet, events, proofs, and the run/audit entry points — is
// re-exported at the root so downstream code can say `omnirelay_core::X`.
pub use audit::{audit, AuditReport};
pub use event::{Event, EventLog, StepTag};
pub use packet::{Dst, Packet, PacketError, RelayerArgs};
pub use proof::{Proof, ProofError, ProofScheme};
pub use scenario::ScenarioConfig;
pub use scheduler::World;
pub use types::{keccak256, Address, ChainId, Hash32};
