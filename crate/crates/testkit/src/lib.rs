//! Test support for the messaging workspace. Nothing here ships.
//!
//! Two halves:
//!
//! * [`reference`] — second opinions on the commitment math. Each root
//!   computation is written from the wire format alone, using a different
//!   algorithm than the production code (level folding instead of
//!   index-driven recursion, one-key-at-a-time trie insertion instead of
//!   batch construction), so a shared bug would have to be invented twice.
//! * [`corpus`] — a seeded generator of randomized scenario configurations
//!   for soak-style tests: honest runs that must deliver everything, and
//!   single-adversary runs that must deliver nothing unsoundly.

pub mod corpus;
pub mod reference;
