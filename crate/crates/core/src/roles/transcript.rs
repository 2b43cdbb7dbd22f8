use serde::{Deserialize, Serialize};

use super::{PartyAction, PartyId};
use crate::adversary::ProbeRecord;
use crate::qsim::{BellOutcome, GhzOutcome};

/// Which of a user's two interleaved sequences an action disclosure covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Entangled,
    Decoy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    BellResult {
        position: usize,
        outcome: BellOutcome,
    },
    GhzResult {
        position: usize,
        outcome: GhzOutcome,
    },
    ActionDisclosure {
        sequence: SequenceKind,
        positions: Vec<usize>,
        actions: Vec<PartyAction>,
    },
    Ciphertext {
        to: Option<PartyId>,
        bits: Vec<u8>,
    },
    /// Integer-valued ciphertexts, decimal-encoded (values are unbounded).
    IntegerCiphertext {
        to: Option<PartyId>,
        values: Vec<String>,
    },
    HashValue {
        to: PartyId,
        subject: String,
        digest: String,
    },
    ComparisonVerdict {
        equal: bool,
    },
    IntegerResult {
        values: Vec<String>,
    },
}

/// A message on the authenticated public channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Announcement {
    pub author: PartyId,
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Forward,
    Return,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreparedKind {
    Bell,
    Ghz,
    /// Product of independent Z-basis qubits standing in for an entangled group.
    FakeGroup,
    Decoy,
}

/// The consistency checks a run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckKind {
    /// Entangled rounds where every user reflected must return `|φ⁺⟩`/`|Ψ⁺⟩`.
    ReflectGroup,
    /// Entangled rounds used for key material must give equal Z outcomes.
    KeyConsistency,
    /// TP compares reflected decoys with their prepared states.
    ReflectDecoy { user: usize },
    /// A user sacrifices measured decoys: user, TP and prepared bit must agree.
    MeasuredDecoy { user: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "quota", rename_all = "snake_case")]
pub enum QuotaKind {
    /// Rounds usable for the key shared among classical users.
    UserKey,
    /// Rounds usable for the key between an adjacent user pair.
    PairKey { first: usize, second: usize },
    /// Measured decoys (check subset plus key) for one user.
    MeasuredDecoys { user: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "abort", rename_all = "snake_case")]
pub enum AbortReason {
    CheckFailed {
        check: CheckKind,
        checked: usize,
        errors: usize,
        error_rate: f64,
    },
    QuotaUnmet {
        quota: QuotaKind,
        have: usize,
        need: usize,
    },
}

impl AbortReason {
    /// Aborts caused by a failed consistency check, as opposed to a sampling
    /// shortfall.
    pub fn is_detection(&self) -> bool {
        matches!(self, AbortReason::CheckFailed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Preparation {
        register: usize,
        kind: PreparedKind,
        qubits: usize,
    },
    Send {
        to: PartyId,
        sequence_len: usize,
    },
    AdversaryHook {
        leg: Leg,
        register: usize,
        note: String,
    },
    PartyAction {
        party: PartyId,
        position: usize,
        action: PartyAction,
    },
    Announcement(Announcement),
    CheckResult {
        check: CheckKind,
        checked: usize,
        errors: usize,
        passed: bool,
    },
    Abort {
        reason: AbortReason,
    },
    Probes {
        records: Vec<ProbeRecord>,
    },
}

/// Append-only, causally ordered event log. Nothing may follow an abort.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    events: Vec<Event>,
}

impl SessionTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        debug_assert!(
            !matches!(self.events.last(), Some(Event::Abort { .. })),
            "abort must be the terminal event"
        );
        self.events.push(event);
    }

    pub fn announce(&mut self, author: PartyId, payload: Payload) {
        self.push(Event::Announcement(Announcement { author, payload }));
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn announcements(&self) -> impl Iterator<Item = &Announcement> {
        self.events.iter().filter_map(|e| match e {
            Event::Announcement(a) => Some(a),
            _ => None,
        })
    }

    pub fn abort(&self) -> Option<&AbortReason> {
        match self.events.last() {
            Some(Event::Abort { reason }) => Some(reason),
            _ => None,
        }
    }
}
