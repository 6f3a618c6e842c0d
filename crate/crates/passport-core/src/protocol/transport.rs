//! Fault-injectable message pipe between the two parties.
//!
//! The channel is ordered-unreliable: per the fault plan, any copy may be
//! dropped or duplicated and each delivery round may be shuffled.
//! Receivers impose their own ordering (the state machines sort each
//! round's arrivals by sender and sequence number), so the protocol's
//! final state cannot depend on arrival luck; senders retransmit until
//! acked, so dropped copies only delay delivery.

use rand_core::RngCore;

use crate::passport::Side;

use super::Message;

/// Probabilistic channel faults. Probabilities are per message copy per
/// delivery round.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FaultPlan {
    pub duplicate_probability: f64,
    pub drop_probability: f64,
    pub reorder: bool,
}

impl Default for FaultPlan {
    fn default() -> Self {
        FaultPlan {
            duplicate_probability: 0.0,
            drop_probability: 0.0,
            reorder: false,
        }
    }
}

impl FaultPlan {
    pub fn is_faultless(&self) -> bool {
        self.duplicate_probability == 0.0 && self.drop_probability == 0.0 && !self.reorder
    }
}

/// A message in flight toward `to`.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub to: Side,
    pub message: Message,
}

/// The two-party channel: everything sent and not yet delivered.
#[derive(Debug, Default)]
pub struct Pipe {
    inflight: Vec<Envelope>,
}

impl Pipe {
    pub fn send(&mut self, to: Side, message: Message) {
        self.inflight.push(Envelope { to, message });
    }

    pub fn is_idle(&self) -> bool {
        self.inflight.is_empty()
    }

    /// Take one delivery round: apply the fault plan to every in-flight
    /// copy and return what actually arrives, in arrival order.
    pub fn deliver_round(&mut self, faults: &FaultPlan, rng: &mut dyn RngCore) -> Vec<Envelope> {
        let mut arrivals = Vec::with_capacity(self.inflight.len());
        for envelope in self.inflight.drain(..) {
            if chance(rng, faults.drop_probability) {
                continue;
            }
            if chance(rng, faults.duplicate_probability) {
                arrivals.push(envelope.clone());
            }
            arrivals.push(envelope);
        }
        if faults.reorder {
            shuffle(&mut arrivals, rng);
        }
        arrivals
    }
}

fn chance(rng: &mut dyn RngCore, probability: f64) -> bool {
    if probability <= 0.0 {
        return false;
    }
    let draw = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    draw < probability
}

/// Unbiased Fisher–Yates over the raw RNG.
fn shuffle<T>(items: &mut [T], rng: &mut dyn RngCore) {
    for i in (1..items.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        items.swap(i, j);
    }
}
