//! Single-event scenarios: one entangled group or one decoy, with fixed user
//! actions. These isolate the per-event detection probabilities.

use serde::{Deserialize, Serialize};

use super::session::Session;
use crate::adversary::{Adversary, GroupOutcome, ProbeRecord};
use crate::error::{invalid, Result};
use crate::roles::{ActionPolicy, PartyAction, SessionTranscript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupProbe {
    pub actions: Vec<PartyAction>,
    pub outcomes: Vec<Option<u8>>,
    pub announced: GroupOutcome,
    /// All-reflect: announcement is not the reference state. All-measure:
    /// the users' bits disagree. Mixed rounds are discarded, never detected.
    pub detected: bool,
    pub probes: Vec<ProbeRecord>,
    pub transcript: SessionTranscript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyProbe {
    pub prepared_bit: u8,
    pub action: PartyAction,
    pub user_outcome: Option<u8>,
    pub tp_outcome: u8,
    /// Reflect: TP's reading differs from the prepared bit. Measure: user,
    /// TP and prepared bit do not all agree.
    pub detected: bool,
    pub probes: Vec<ProbeRecord>,
}

/// One entangled group of `actions.len()` users.
pub fn probe_group(actions: &[PartyAction], adversary: Adversary, seed: u64) -> Result<GroupProbe> {
    let parties = actions.len();
    if parties < 2 {
        return Err(invalid("a group needs at least two users"));
    }
    let mut s = Session::new(seed, parties, adversary);
    let group = s.new_group(0, parties)?;
    let mut returned = group.clone();
    let mut outcomes = Vec::with_capacity(parties);
    for (user, &q) in group.iter().enumerate() {
        let (rx, back) = s.round_trip(user, 0, q, &ActionPolicy::Always(actions[user]))?;
        outcomes.push(rx.outcome.map(|z| z.bit()));
        returned[user] = back;
    }
    let announced = s.measure_group(&returned)?;
    s.flush_probes();
    let detected = if actions.iter().all(|&a| a == PartyAction::Reflect) {
        !announced.is_reference()
    } else if actions.iter().all(|&a| a == PartyAction::Measure) {
        outcomes.iter().any(|o| *o != outcomes[0])
    } else {
        false
    };
    let out = s.finish::<()>(Ok(()), None);
    Ok(GroupProbe {
        actions: actions.to_vec(),
        outcomes,
        announced,
        detected,
        probes: out.probes,
        transcript: out.transcript,
    })
}

/// One decoy prepared as `|prepared_bit⟩` for user 0.
pub fn probe_decoy(prepared_bit: u8, action: PartyAction, adversary: Adversary, seed: u64) -> Result<DecoyProbe> {
    if prepared_bit > 1 {
        return Err(invalid("prepared bit must be 0 or 1"));
    }
    let mut s = Session::new(seed, 1, adversary);
    let q = s.new_decoy(0, 0, prepared_bit)?;
    let (rx, back) = s.round_trip(0, 0, q, &ActionPolicy::Always(action))?;
    let tp_outcome = s.measure_decoy(back)?;
    s.flush_probes();
    let user_outcome = rx.outcome.map(|z| z.bit());
    let detected = match action {
        PartyAction::Reflect => tp_outcome != prepared_bit,
        PartyAction::Measure => !(user_outcome == Some(tp_outcome) && tp_outcome == prepared_bit),
    };
    Ok(DecoyProbe {
        prepared_bit,
        action,
        user_outcome,
        tp_outcome,
        detected,
        probes: s.finish::<()>(Ok(()), None).probes,
    })
}
