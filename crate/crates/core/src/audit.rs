//! Post-run verification: replay the event log against final chain state.
//!
//! The auditor never trusts the pipeline's own bookkeeping. It re-checks
//! the two delivery guarantees from the outside:
//!
//! * **soundness** — every `DELIVERED` digest must sit in a committed
//!   transaction on the canonical source chain, addressed to the chain that
//!   delivered it, at most once. Anything else lands in
//!   [`AuditReport::soundness_violations`], the field that decides the
//!   process exit code.
//! * **liveness** — every `SEND` should eventually reach `DELIVERED`; each
//!   one that did not is classified by how far it got (reorged out, header
//!   never stored, proof never submitted, discarded, still in flight).
//!
//! Honest runs must produce an empty violation list and — given enough
//! mining to clear every confirmation gate — an empty miss list. Adversary
//! runs are expected to produce misses (a withholding agent stalls
//! delivery, which is the tolerated failure mode) but still no violations;
//! only a successful oracle+relayer collusion produces one.

use crate::bridge::Bridge;
use crate::event::{Event, StepTag};
use crate::scheduler::World;
use crate::types::Hash32;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A delivery the destination chain accepted but should not have.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// One of `delivered_uncommitted`, `delivered_wrong_destination`,
    /// `double_delivery`.
    pub kind: String,
    pub digest: String,
    pub src: u16,
    pub dst: u16,
    pub tick: u64,
}

/// A sent message that never reached delivery, with the furthest pipeline
/// stage it can be blamed on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LivenessMiss {
    pub digest: String,
    pub src: u16,
    pub dst: u16,
    /// `reorged_out`, `header_never_stored`, `proof_never_submitted`,
    /// `discarded_<reason>`, or `still_pending`.
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeAudit {
    pub total_locked: u64,
    pub total_minted: u64,
    /// Deliveries addressed to the mint handler whose payload would not
    /// decode as a mint instruction.
    pub rejected_mints: u64,
    /// Wrapped supply does not exceed escrow.
    pub balanced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub scenario: String,
    pub seed: u64,
    pub ticks: u64,
    pub messages_sent: u64,
    pub messages_delivered: u64,
    /// Proof submissions refused because the message was already delivered.
    pub replays_blocked: u64,
    /// Successful header stores at destinations.
    pub headers_stored: u64,
    /// Oracle notifications emitted at sources.
    pub oracle_notifications: u64,
    /// `headers_stored / oracle_notifications`; 1.0 when nothing was asked.
    /// Below 1.0 means withheld or refused headers; above 1.0 means headers
    /// appeared that no source-side notification asked for (fabrication).
    /// Infinite when headers were stored with zero notifications — JSON has
    /// no infinity, so that case travels as `null`.
    #[serde(with = "ratio_json")]
    pub header_storage_ratio: f64,
    /// Verdict tally: `accepted` plus one bucket per discard reason.
    pub verdicts: BTreeMap<String, u64>,
    pub soundness_violations: Vec<Violation>,
    pub liveness_misses: Vec<LivenessMiss>,
    pub bridge: Option<BridgeAudit>,
}

/// JSON cannot carry `f64::INFINITY` (serde_json would emit a bare `null`
/// that refuses to parse back into `f64`), so the storage ratio round-trips
/// through `Option<f64>` with `null` standing in for the infinite case.
mod ratio_json {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ratio: &f64, s: S) -> Result<S::Ok, S::Error> {
        if ratio.is_finite() {
            s.serialize_some(ratio)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<AuditReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The overall pass/fail line: soundness is the property that must
    /// never break, whatever the adversaries did.
    pub fn sound(&self) -> bool {
        self.soundness_violations.is_empty()
    }
}

struct SendRecord {
    src: u16,
    dst: u16,
    digest: Hash32,
    height: u64,
}

/// Check a finished run. Reads the log and the final chain state; the world
/// is not advanced or mutated.
pub fn audit(world: &World) -> AuditReport {
    let mut sends: Vec<SendRecord> = Vec::new();
    let mut deliveries: Vec<(u16, u16, Hash32, u64)> = Vec::new();
    let mut discard_reason: BTreeMap<(u16, Hash32), String> = BTreeMap::new();
    let mut submitted: BTreeSet<(u16, Hash32)> = BTreeSet::new();
    let mut stored_ok: BTreeSet<(u16, u16, u64)> = BTreeSet::new();
    let mut verdicts: BTreeMap<String, u64> = BTreeMap::new();
    let mut headers_stored = 0u64;
    let mut oracle_notifications = 0u64;
    let mut replays_blocked = 0u64;

    for e in world.log.events() {
        match e.tag {
            StepTag::Send => sends.push(SendRecord {
                src: chain_of(e, e.src),
                dst: chain_of(e, e.dst),
                digest: e.digest.expect("send events carry the digest"),
                height: e.height.expect("send events carry the height"),
            }),
            StepTag::OracleNotify => oracle_notifications += 1,
            StepTag::HdrStored => {
                if e.extra_get("stored") == Some("true") {
                    headers_stored += 1;
                    stored_ok.insert((
                        chain_of(e, e.src),
                        chain_of(e, e.dst),
                        e.height.expect("header events carry the height"),
                    ));
                }
            }
            StepTag::ProofsSubmitted => {
                let src = chain_of(e, e.src);
                let digests = e.extra_get("digests").unwrap_or("");
                for d in digests.split(',').filter(|d| !d.is_empty()) {
                    if let Some(h) = Hash32::from_hex(d) {
                        submitted.insert((src, h));
                    }
                }
            }
            StepTag::Verdict => {
                let digest = e.digest.expect("verdict events carry the digest");
                let src = chain_of(e, e.src);
                match e.extra_get("verdict") {
                    Some("accepted") => {
                        *verdicts.entry("accepted".to_string()).or_insert(0) += 1;
                    }
                    _ => {
                        let reason = e.extra_get("reason").unwrap_or("unknown").to_string();
                        *verdicts.entry(reason.clone()).or_insert(0) += 1;
                        if reason == "Replay" {
                            replays_blocked += 1;
                        } else {
                            // Remember the most recent non-replay discard;
                            // replays of an already-delivered message say
                            // nothing about why an undelivered one failed.
                            discard_reason.insert((src, digest), reason);
                        }
                    }
                }
            }
            StepTag::Delivered => deliveries.push((
                chain_of(e, e.src),
                chain_of(e, e.dst),
                e.digest.expect("delivery events carry the digest"),
                e.tick,
            )),
            _ => {}
        }
    }

    // Soundness: every delivery must trace back to exactly one committed,
    // correctly addressed transaction on the canonical source chain.
    let mut soundness_violations = Vec::new();
    let mut seen: BTreeSet<(u16, Hash32, u16)> = BTreeSet::new();
    for &(src, dst, digest, tick) in &deliveries {
        let violation = |kind: &str| Violation {
            kind: kind.to_string(),
            digest: digest.to_hex(),
            src,
            dst,
            tick,
        };
        if !seen.insert((src, digest, dst)) {
            soundness_violations.push(violation("double_delivery"));
            continue;
        }
        let committed = world
            .chains
            .get(&crate::types::ChainId(src))
            .and_then(|chain| chain.find_tx(digest).map(|(h, i)| (chain, h, i)));
        match committed {
            None => soundness_violations.push(violation("delivered_uncommitted")),
            Some((chain, height, index)) => {
                let tx = &chain.block_at(height).expect("find_tx height exists").txs[index];
                let addressed_here =
                    tx.packet.as_ref().is_some_and(|p| p.dst.chain.0 == dst);
                if !addressed_here {
                    soundness_violations.push(violation("delivered_wrong_destination"));
                }
            }
        }
    }

    // Liveness: classify every send that never produced a delivery.
    let delivered_keys: BTreeSet<(u16, Hash32)> =
        deliveries.iter().map(|&(s, _, d, _)| (s, d)).collect();
    let mut liveness_misses = Vec::new();
    for send in &sends {
        if delivered_keys.contains(&(send.src, send.digest)) {
            continue;
        }
        let chain = world.chains.get(&crate::types::ChainId(send.src));
        let committed_at = chain.and_then(|c| c.find_tx(send.digest)).map(|(h, _)| h);
        let reason = if committed_at != Some(send.height) {
            // Gone entirely, or re-mined at a different height after its
            // announced block was displaced: either way the pipeline's
            // one-shot announcement now points at a dead block.
            "reorged_out".to_string()
        } else if let Some(r) = discard_reason.get(&(send.src, send.digest)) {
            format!("discarded_{r}")
        } else if submitted.contains(&(send.src, send.digest)) {
            "still_pending".to_string()
        } else if stored_ok.contains(&(send.src, send.dst, send.height)) {
            "proof_never_submitted".to_string()
        } else {
            "header_never_stored".to_string()
        };
        liveness_misses.push(LivenessMiss {
            digest: send.digest.to_hex(),
            src: send.src,
            dst: send.dst,
            reason,
        });
    }

    let header_storage_ratio = if oracle_notifications == 0 && headers_stored == 0 {
        1.0
    } else if oracle_notifications == 0 {
        f64::INFINITY
    } else {
        headers_stored as f64 / oracle_notifications as f64
    };

    AuditReport {
        scenario: world.name.clone(),
        seed: world.seed,
        ticks: world.ticks_limit,
        messages_sent: sends.len() as u64,
        messages_delivered: deliveries.len() as u64,
        replays_blocked,
        headers_stored,
        oracle_notifications,
        header_storage_ratio,
        verdicts,
        soundness_violations,
        liveness_misses,
        bridge: world.bridge.as_ref().map(|b: &Bridge| BridgeAudit {
            total_locked: b.total_locked(),
            total_minted: b.total_minted(),
            rejected_mints: world.rejected_mints,
            balanced: b.is_balanced(),
        }),
    }
}

fn chain_of(e: &Event, id: Option<crate::types::ChainId>) -> u16 {
    id.unwrap_or_else(|| panic!("{} events carry both chains", e.tag.as_str())).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    fn run(text: &str) -> AuditReport {
        let config = ScenarioConfig::parse(text).expect("test scenario parses");
        let mut world = World::build(&config, None);
        world.run().expect("test scenario runs");
        audit(&world)
    }

    #[test]
    fn honest_run_is_clean() {
        let report = run(
            "\
[scenario]
name = clean
ticks = 14
seed = 2
[chain 1]
depth = 3
[chain 2]
depth = 3
[script]
@1 send(src=1, dst=2, sender=alice, payload=aa)
@1 send(src=1, dst=2, sender=bob, payload=bb)
@2 mine(chain=1, count=3)
",
        );
        assert_eq!(report.messages_sent, 2);
        assert_eq!(report.messages_delivered, 2);
        assert!(report.sound());
        assert!(report.liveness_misses.is_empty());
        assert_eq!(report.verdicts.get("accepted"), Some(&2));
        assert_eq!(report.header_storage_ratio, 1.0);
    }

    #[test]
    fn withholding_oracle_stalls_but_stays_sound() {
        let report = run(
            "\
[scenario]
name = stalled
ticks = 14
seed = 2
[chain 1]
depth = 3
[chain 2]
depth = 3
[oracle]
mode = withhold
[script]
@1 send(src=1, dst=2, sender=alice, payload=aa)
@2 mine(chain=1, count=3)
",
        );
        assert!(report.sound());
        assert_eq!(report.messages_delivered, 0);
        assert_eq!(report.liveness_misses.len(), 1);
        assert_eq!(report.liveness_misses[0].reason, "header_never_stored");
        assert_eq!(report.header_storage_ratio, 0.0);
    }

    #[test]
    fn collusion_shows_up_as_uncommitted_delivery() {
        let report = run(
            "\
[scenario]
name = colluding
ticks = 8
seed = 2
[chain 1]
[chain 2]
[oracle]
mode = collude
[relayer]
mode = collude
[script]
@1 forge_collude(src=1, dst=2, height=40)
",
        );
        assert!(!report.sound());
        assert_eq!(report.messages_sent, 0, "nothing was really sent");
        assert_eq!(report.messages_delivered, 1, "yet something arrived");
        assert_eq!(report.soundness_violations.len(), 1);
        assert_eq!(report.soundness_violations[0].kind, "delivered_uncommitted");
        assert!(report.header_storage_ratio.is_infinite());

        // The infinite ratio must survive JSON, where it travels as null.
        let round = AuditReport::from_json(&report.to_json()).expect("parses back");
        assert!(round.header_storage_ratio.is_infinite());
        assert_eq!(round, report);
    }

    #[test]
    fn replaying_relayer_is_counted_and_blocked() {
        let report = run(
            "\
[scenario]
name = echoes
ticks = 14
seed = 2
[chain 1]
depth = 3
[chain 2]
depth = 3
[relayer]
mode = replay
[script]
@1 send(src=1, dst=2, sender=alice, payload=aa)
@2 mine(chain=1, count=3)
",
        );
        assert!(report.sound(), "the duplicate is refused, not delivered twice");
        assert_eq!(report.messages_delivered, 1);
        assert_eq!(report.replays_blocked, 1);
        assert_eq!(report.verdicts.get("Replay"), Some(&1));
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = run(
            "\
[scenario]
name = bridge_json
ticks = 12
seed = 7
[chain 1]
depth = 2
[chain 2]
depth = 2
[bridge]
src = 1
dst = 2
fund = alice:500
[script]
@1 bridge_lock(user=alice, amount=123, recipient=bob)
@2 mine(chain=1, count=2)
",
        );
        let bridge = report.bridge.as_ref().expect("bridge section audited");
        assert_eq!(bridge.total_locked, 123);
        assert_eq!(bridge.total_minted, 123);
        assert!(bridge.balanced);
        let parsed = AuditReport::from_json(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }
}
