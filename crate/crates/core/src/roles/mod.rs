//! Actors and the qubit-in-flight abstraction.
//!
//! Every entangled group (and every decoy) lives in its own
//! [`SessionRegister`]; adversaries append probe or fake qubits to that
//! register. A [`FlightQubit`] names one qubit of one register together with
//! its immutable origin tag.

mod transcript;

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

pub use transcript::{
    AbortReason, Announcement, CheckKind, Event, Leg, Payload, PreparedKind, QuotaKind, SequenceKind, SessionTranscript,
};

use crate::adversary::AttackHooks;
use crate::error::{invalid, Result};
use crate::qsim::{
    measure_bell, measure_ghz, measure_z, partial_trace, BellOutcome, DensityMatrix, GhzOutcome, StateVector, Unitary,
    ZOutcome,
};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PartyId {
    Tp,
    User(usize),
    Eve,
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Tp => f.write_str("TP"),
            PartyId::User(l) => write!(f, "C{}", l + 1),
            PartyId::Eve => f.write_str("Eve"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyAction {
    Measure,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegisterId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "origin", rename_all = "snake_case")]
pub enum OriginTag {
    /// Qubit `slot` of entangled group `group`; slot `l` travels to user `l`.
    EntangledGroup { group: usize, slot: usize },
    /// Decoy number `position` of `owner`'s decoy sequence.
    Decoy {
        owner: usize,
        position: usize,
        prepared_bit: u8,
    },
}

impl OriginTag {
    /// The classical user this qubit is addressed to.
    pub fn user(&self) -> usize {
        match *self {
            OriginTag::EntangledGroup { slot, .. } => slot,
            OriginTag::Decoy { owner, .. } => owner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlightQubit {
    pub register: RegisterId,
    pub qubit: usize,
    pub origin: OriginTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum QubitRole {
    /// A qubit TP prepared and sent out.
    Genuine,
    /// Adversary probe attached to the given qubit.
    Probe { attached_to: usize },
    /// Adversary-made substitute for the given genuine qubit.
    Fake { replaces: usize },
}

/// One entangled group or decoy, plus whatever an adversary attaches to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRegister {
    id: RegisterId,
    state: StateVector,
    roles: Vec<QubitRole>,
}

impl SessionRegister {
    pub fn new(id: RegisterId, state: StateVector) -> Self {
        let roles = vec![QubitRole::Genuine; state.num_qubits()];
        Self { id, state, roles }
    }

    pub fn id(&self) -> RegisterId {
        self.id
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn roles(&self) -> &[QubitRole] {
        &self.roles
    }

    pub fn num_qubits(&self) -> usize {
        self.state.num_qubits()
    }

    /// Appends a fresh `|bit⟩` as the new least significant qubit; existing
    /// indices are unchanged.
    pub fn append(&mut self, bit: u8, role: QubitRole) -> Result<usize> {
        let fresh = StateVector::basis(&[bit])?;
        self.state = self.state.tensor(&fresh)?;
        self.roles.push(role);
        Ok(self.roles.len() - 1)
    }

    pub fn apply_unitary(&mut self, u: &Unitary, targets: &[usize]) -> Result<()> {
        self.state = self.state.apply_unitary(u, targets)?;
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.state = self.state.apply_cnot(control, target)?;
        Ok(())
    }

    pub fn measure_z(&mut self, qubit: usize, rng: &mut SimRng) -> Result<ZOutcome> {
        let (z, post) = measure_z(&self.state, qubit, rng)?;
        self.state = post;
        Ok(z)
    }

    pub fn measure_bell(&mut self, q1: usize, q2: usize, rng: &mut SimRng) -> Result<BellOutcome> {
        let (b, post) = measure_bell(&self.state, q1, q2, rng)?;
        self.state = post;
        Ok(b)
    }

    pub fn measure_ghz(&mut self, qubits: &[usize], rng: &mut SimRng) -> Result<GhzOutcome> {
        let (g, post) = measure_ghz(&self.state, qubits, rng)?;
        self.state = post;
        Ok(g)
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityMatrix> {
        partial_trace(&self.state, keep)
    }

    pub fn probes(&self) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, QubitRole::Probe { .. }))
            .map(|(i, _)| i)
            .collect()
    }
}

/// How a classical user picks measure or reflect for each received qubit.
#[derive(Clone, Default)]
pub enum ActionPolicy {
    #[default]
    FairCoin,
    Always(PartyAction),
    Scripted(Arc<dyn Fn(&OriginTag) -> PartyAction + Send + Sync>),
}

impl ActionPolicy {
    pub fn scripted(f: impl Fn(&OriginTag) -> PartyAction + Send + Sync + 'static) -> Self {
        ActionPolicy::Scripted(Arc::new(f))
    }

    pub fn choose(&self, origin: &OriginTag, rng: &mut SimRng) -> PartyAction {
        match self {
            ActionPolicy::FairCoin => {
                if rng.random_bool(0.5) {
                    PartyAction::Measure
                } else {
                    PartyAction::Reflect
                }
            }
            ActionPolicy::Always(a) => *a,
            ActionPolicy::Scripted(f) => f(origin),
        }
    }
}

impl fmt::Debug for ActionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionPolicy::FairCoin => f.write_str("FairCoin"),
            ActionPolicy::Always(a) => write!(f, "Always({a:?})"),
            ActionPolicy::Scripted(_) => f.write_str("Scripted(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reception {
    pub action: PartyAction,
    pub outcome: Option<ZOutcome>,
    pub qubit: FlightQubit,
}

/// A classical user's turn: reflect leaves the register untouched; measure
/// reads the qubit in Z and sends back a fresh `|outcome⟩` in its place.
pub fn classical_receive(
    register: &mut SessionRegister,
    q: FlightQubit,
    policy: &ActionPolicy,
    rng: &mut SimRng,
) -> Result<Reception> {
    if q.register != register.id() || q.qubit >= register.num_qubits() {
        return Err(invalid("flight qubit does not belong to this register"));
    }
    let action = policy.choose(&q.origin, rng);
    let outcome = match action {
        PartyAction::Reflect => None,
        // The post-measurement qubit is already |z⟩ ⊗ (rest); a regenerated
        // |z⟩ in the same slot is the identical product state.
        PartyAction::Measure => Some(register.measure_z(q.qubit, rng)?),
    };
    Ok(Reception {
        action,
        outcome,
        qubit: q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedKind {
    Bell,
    Ghz(usize),
    Z,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TpMeasurement {
    /// Public: announced on the classical channel.
    Bell(BellOutcome),
    /// Public: announced on the classical channel.
    Ghz(GhzOutcome),
    /// Private to TP.
    Z(ZOutcome),
}

/// Honest TP measurement of a returned group (Bell or GHZ basis) or decoy
/// (Z basis).
pub fn tp_measure_returned(
    register: &mut SessionRegister,
    group: &[FlightQubit],
    expected: ExpectedKind,
    rng: &mut SimRng,
) -> Result<TpMeasurement> {
    if group.iter().any(|q| q.register != register.id()) {
        return Err(invalid("group members must belong to one register"));
    }
    let idx: Vec<usize> = group.iter().map(|q| q.qubit).collect();
    match expected {
        ExpectedKind::Bell if idx.len() == 2 => Ok(TpMeasurement::Bell(register.measure_bell(idx[0], idx[1], rng)?)),
        ExpectedKind::Ghz(l) if idx.len() == l && l >= 2 => Ok(TpMeasurement::Ghz(register.measure_ghz(&idx, rng)?)),
        ExpectedKind::Z if idx.len() == 1 => Ok(TpMeasurement::Z(register.measure_z(idx[0], rng)?)),
        _ => Err(invalid(format!(
            "{expected:?} measurement does not match a group of {} qubits",
            idx.len()
        ))),
    }
}

/// Everything a channel hook may touch.
pub struct HookContext<'a> {
    pub register: &'a mut SessionRegister,
    pub rng: &'a mut SimRng,
    pub transcript: &'a mut SessionTranscript,
}

/// TP→user leg. With no hooks installed the qubit passes untouched.
pub fn channel_forward(
    ctx: &mut HookContext<'_>,
    q: FlightQubit,
    hooks: Option<&mut (dyn AttackHooks + '_)>,
) -> Result<FlightQubit> {
    match hooks {
        Some(h) => h.on_forward(ctx, q),
        None => Ok(q),
    }
}

/// User→TP leg.
pub fn channel_return(
    ctx: &mut HookContext<'_>,
    q: FlightQubit,
    hooks: Option<&mut (dyn AttackHooks + '_)>,
) -> Result<FlightQubit> {
    match hooks {
        Some(h) => h.on_return(ctx, q),
        None => Ok(q),
    }
}
