//! One protocol session: registers, per-role random streams, the public
//! transcript, and the shared quantum phase (preparation through the decoy
//! checks) every protocol starts with.

use rand::seq::index;
use rand::Rng;

use super::ops::{decoy_check_and_key, derive_group_key, sift_rounds, CheckTally, DecoyRecord};
use super::{KeyMaterial, Outcome, ResourceLedger, RunOutput, SqpcConfig};
use crate::adversary::{Adversary, GroupOutcome, ProbeRecord};
use crate::error::Result;
use crate::qsim::StateVector;
use crate::rng::{role_stream, Role, SimRng};
use crate::roles::{
    channel_forward, channel_return, classical_receive, tp_measure_returned, AbortReason, ActionPolicy, CheckKind,
    Event, ExpectedKind, FlightQubit, HookContext, OriginTag, PartyAction, PartyId, Payload, PreparedKind, QuotaKind,
    Reception, RegisterId, SequenceKind, SessionRegister, SessionTranscript, TpMeasurement,
};

pub(crate) type Step<T> = std::result::Result<T, AbortReason>;

pub(crate) struct Session {
    pub registers: Vec<SessionRegister>,
    pub transcript: SessionTranscript,
    pub ledger: ResourceLedger,
    pub tp_rng: SimRng,
    pub eve_rng: SimRng,
    pub user_rngs: Vec<SimRng>,
    pub adversary: Adversary,
    probes: Vec<ProbeRecord>,
}

impl Session {
    pub fn new(seed: u64, users: usize, adversary: Adversary) -> Self {
        Self {
            registers: Vec::new(),
            transcript: SessionTranscript::new(),
            ledger: ResourceLedger::default(),
            tp_rng: role_stream(seed, Role::Tp),
            eve_rng: role_stream(seed, Role::Eve),
            user_rngs: (0..users).map(|l| role_stream(seed, Role::User(l))).collect(),
            adversary,
            probes: Vec::new(),
        }
    }

    fn add_register(&mut self, state: StateVector, kind: PreparedKind) -> RegisterId {
        let id = RegisterId(self.registers.len());
        self.ledger.q += state.num_qubits() as u64;
        self.transcript.push(Event::Preparation {
            register: id.0,
            kind,
            qubits: state.num_qubits(),
        });
        self.registers.push(SessionRegister::new(id, state));
        id
    }

    /// TP prepares entangled group `group`; slot `l` is addressed to user `l`.
    pub fn new_group(&mut self, group: usize, parties: usize) -> Result<Vec<FlightQubit>> {
        let (state, kind) = self.adversary.tp.prepare_group(parties, &mut self.tp_rng)?;
        let register = self.add_register(state, kind);
        Ok((0..parties)
            .map(|slot| FlightQubit {
                register,
                qubit: slot,
                origin: OriginTag::EntangledGroup { group, slot },
            })
            .collect())
    }

    pub fn new_decoy(&mut self, owner: usize, position: usize, prepared_bit: u8) -> Result<FlightQubit> {
        let register = self.add_register(StateVector::basis(&[prepared_bit])?, PreparedKind::Decoy);
        Ok(FlightQubit {
            register,
            qubit: 0,
            origin: OriginTag::Decoy {
                owner,
                position,
                prepared_bit,
            },
        })
    }

    /// TP→user leg, the user's choice, user→TP leg. Returns the user's view
    /// and the qubit that actually reaches TP.
    pub fn round_trip(
        &mut self,
        user: usize,
        position: usize,
        q: FlightQubit,
        policy: &ActionPolicy,
    ) -> Result<(Reception, FlightQubit)> {
        let Session {
            registers,
            transcript,
            eve_rng,
            user_rngs,
            adversary,
            ledger,
            ..
        } = self;
        let register = &mut registers[q.register.0];
        let mut ctx = HookContext {
            register,
            rng: eve_rng,
            transcript,
        };
        let arrived = channel_forward(&mut ctx, q, adversary.hooks.as_deref_mut())?;
        let reception = classical_receive(ctx.register, arrived, policy, &mut user_rngs[user])?;
        if reception.action == PartyAction::Measure {
            // the regenerated qubit
            ledger.q += 1;
        }
        ctx.transcript.push(Event::PartyAction {
            party: PartyId::User(user),
            position,
            action: reception.action,
        });
        let back = channel_return(&mut ctx, arrived, adversary.hooks.as_deref_mut())?;
        Ok((reception, back))
    }

    pub fn measure_group(&mut self, qubits: &[FlightQubit]) -> Result<GroupOutcome> {
        let register = &mut self.registers[qubits[0].register.0];
        self.adversary.tp.measure_group(register, qubits, &mut self.tp_rng)
    }

    /// TP's private Z reading of a returned decoy.
    pub fn measure_decoy(&mut self, q: FlightQubit) -> Result<u8> {
        let register = &mut self.registers[q.register.0];
        match tp_measure_returned(register, &[q], ExpectedKind::Z, &mut self.tp_rng)? {
            TpMeasurement::Z(z) => Ok(z.bit()),
            _ => unreachable!("Z measurement yields a Z outcome"),
        }
    }

    /// Logs Eve's probe records once the quantum phase is over.
    pub fn flush_probes(&mut self) {
        self.probes = self.adversary.probe_records();
        if !self.probes.is_empty() {
            self.transcript.push(Event::Probes {
                records: self.probes.clone(),
            });
        }
    }

    pub fn announce(&mut self, author: PartyId, payload: Payload) {
        self.transcript.announce(author, payload);
    }

    pub fn abort(&mut self, reason: AbortReason) -> AbortReason {
        self.transcript.push(Event::Abort { reason: reason.clone() });
        reason
    }

    pub fn check(&mut self, check: CheckKind, tally: CheckTally, threshold: f64) -> Step<()> {
        let passed = tally.passes(threshold);
        self.transcript.push(Event::CheckResult {
            check,
            checked: tally.checked,
            errors: tally.errors,
            passed,
        });
        if passed {
            Ok(())
        } else {
            Err(self.abort(AbortReason::CheckFailed {
                check,
                checked: tally.checked,
                errors: tally.errors,
                error_rate: tally.error_rate(),
            }))
        }
    }

    pub fn quota(&mut self, quota: QuotaKind, have: usize, need: usize) -> Step<()> {
        if have >= need {
            Ok(())
        } else {
            Err(self.abort(AbortReason::QuotaUnmet { quota, have, need }))
        }
    }

    pub fn finish<R>(self, outcome: Step<R>, keys: Option<KeyMaterial>) -> RunOutput<R> {
        RunOutput {
            outcome: match outcome {
                Ok(result) => Outcome::Completed { result },
                Err(reason) => Outcome::Aborted { reason },
            },
            transcript: self.transcript,
            ledger: self.ledger,
            probes: self.probes,
            keys,
        }
    }
}

/// Where the key from one measure/reflect pattern goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum KeySlot {
    /// All users measure.
    Users,
    /// Exactly users `l` and `l+1 mod L` measure.
    Pair(usize),
}

impl KeySlot {
    fn measuring(self, users: usize) -> Vec<bool> {
        match self {
            KeySlot::Users => vec![true; users],
            KeySlot::Pair(l) => (0..users).map(|u| u == l || u == (l + 1) % users).collect(),
        }
    }

    fn quota(self, users: usize) -> QuotaKind {
        match self {
            KeySlot::Users => QuotaKind::UserKey,
            KeySlot::Pair(l) => QuotaKind::PairKey {
                first: l,
                second: (l + 1) % users,
            },
        }
    }
}

/// What a protocol needs out of the quantum phase.
pub(crate) struct Plan {
    pub slots: Vec<KeySlot>,
    /// Users whose TP key is consumed later (quota enforced for these).
    pub keyed_users: Vec<usize>,
}

/// Preparation, transmission, user actions, TP measurement, sifting and all
/// eavesdropping checks. Quotas are enforced only after every check passed.
pub(crate) fn quantum_phase(s: &mut Session, cfg: &SqpcConfig, plan: &Plan) -> Result<Step<KeyMaterial>> {
    let users = cfg.users;
    let n = cfg.n;
    let n_groups = cfg.groups();
    let n_decoys = cfg.decoys();

    let groups: Vec<Vec<FlightQubit>> = (0..n_groups).map(|g| s.new_group(g, users)).collect::<Result<_>>()?;
    let mut decoys: Vec<Vec<FlightQubit>> = Vec::with_capacity(users);
    for owner in 0..users {
        let mut seq = Vec::with_capacity(n_decoys);
        for position in 0..n_decoys {
            let bit = s.tp_rng.random_range(0..2u8);
            seq.push(s.new_decoy(owner, position, bit)?);
        }
        decoys.push(seq);
    }

    // random insertion of the decoy sequence into the entangled one
    let total = n_groups + n_decoys;
    let mut sequences = Vec::with_capacity(users);
    for (user, user_decoys) in decoys.iter().enumerate() {
        let mut is_decoy = vec![false; total];
        for i in index::sample(&mut s.tp_rng, total, n_decoys) {
            is_decoy[i] = true;
        }
        let (mut gi, mut di) = (0, 0);
        let seq: Vec<FlightQubit> = is_decoy
            .iter()
            .map(|&d| {
                if d {
                    di += 1;
                    user_decoys[di - 1]
                } else {
                    gi += 1;
                    groups[gi - 1][user]
                }
            })
            .collect();
        s.transcript.push(Event::Send {
            to: PartyId::User(user),
            sequence_len: total,
        });
        sequences.push(seq);
    }

    let mut actions = vec![vec![PartyAction::Reflect; users]; n_groups];
    let mut outcomes = vec![vec![0u8; users]; n_groups];
    let mut returned = groups.clone();
    let mut decoy_views: Vec<Vec<(PartyAction, Option<u8>, FlightQubit)>> = vec![Vec::new(); users];
    for (user, seq) in sequences.iter().enumerate() {
        for (position, &q) in seq.iter().enumerate() {
            let (rx, back) = s.round_trip(user, position, q, &cfg.policy)?;
            match q.origin {
                OriginTag::EntangledGroup { group, slot } => {
                    actions[group][slot] = rx.action;
                    outcomes[group][slot] = rx.outcome.map_or(0, |z| z.bit());
                    returned[group][slot] = back;
                }
                OriginTag::Decoy { .. } => decoy_views[user].push((rx.action, rx.outcome.map(|z| z.bit()), back)),
            }
        }
    }

    // TP: group measurements are published, decoy readings kept private
    let mut announced = Vec::with_capacity(n_groups);
    for (position, group) in returned.iter().enumerate() {
        let outcome = s.measure_group(group)?;
        let payload = match &outcome {
            GroupOutcome::Bell(b) => Payload::BellResult { position, outcome: *b },
            GroupOutcome::Ghz(g) => Payload::GhzResult {
                position,
                outcome: g.clone(),
            },
        };
        s.announce(PartyId::Tp, payload);
        announced.push(outcome);
    }
    let mut decoy_records: Vec<Vec<DecoyRecord>> = Vec::with_capacity(users);
    for (user, views) in decoy_views.iter().enumerate() {
        let mut recs = Vec::with_capacity(views.len());
        for (i, &(action, user_outcome, back)) in views.iter().enumerate() {
            let OriginTag::Decoy { prepared_bit, .. } = decoys[user][i].origin else {
                unreachable!("decoy views hold decoys only");
            };
            recs.push(DecoyRecord {
                prepared_bit,
                action,
                user_outcome,
                tp_outcome: s.measure_decoy(back)?,
            });
        }
        decoy_records.push(recs);
    }
    s.flush_probes();

    // sifting and the entangled-round checks
    for user in 0..users {
        s.announce(
            PartyId::User(user),
            Payload::ActionDisclosure {
                sequence: SequenceKind::Entangled,
                positions: (0..n_groups).collect(),
                actions: actions.iter().map(|a| a[user]).collect(),
            },
        );
    }
    let sifted = sift_rounds(&actions);
    let reflect_tally = CheckTally {
        checked: sifted.case2.len(),
        errors: sifted.case2.iter().filter(|&&i| !announced[i].is_reference()).count(),
    };
    if let Err(a) = s.check(CheckKind::ReflectGroup, reflect_tally, cfg.error_threshold) {
        return Ok(Err(a));
    }

    let mut consistency = CheckTally::default();
    let mut slot_keys = Vec::with_capacity(plan.slots.len());
    for &slot in &plan.slots {
        let mask = slot.measuring(users);
        let rounds: Vec<Vec<u8>> = (0..n_groups)
            .filter(|&g| {
                actions[g]
                    .iter()
                    .zip(&mask)
                    .all(|(&a, &m)| (a == PartyAction::Measure) == m)
            })
            .map(|g| (0..users).filter(|&u| mask[u]).map(|u| outcomes[g][u]).collect())
            .collect();
        let (tally, key) = derive_group_key(&rounds, n);
        consistency.checked += tally.checked;
        consistency.errors += tally.errors;
        slot_keys.push((slot, tally.checked - tally.errors, key));
    }
    if let Err(a) = s.check(CheckKind::KeyConsistency, consistency, cfg.error_threshold) {
        return Ok(Err(a));
    }

    // decoy disclosure and checks
    let mut decoy_checks = Vec::with_capacity(users);
    for (user, recs) in decoy_records.iter().enumerate() {
        s.announce(
            PartyId::User(user),
            Payload::ActionDisclosure {
                sequence: SequenceKind::Decoy,
                positions: (0..recs.len()).collect(),
                actions: recs.iter().map(|r| r.action).collect(),
            },
        );
        let c = decoy_check_and_key(recs, n, &mut s.user_rngs[user]);
        if let Err(a) = s.check(CheckKind::ReflectDecoy { user }, c.reflected, cfg.error_threshold) {
            return Ok(Err(a));
        }
        if let Err(a) = s.check(CheckKind::MeasuredDecoy { user }, c.measured, cfg.error_threshold) {
            return Ok(Err(a));
        }
        decoy_checks.push(c);
    }

    // quotas
    let mut keys = KeyMaterial::default();
    for (slot, have, key) in slot_keys {
        if let Err(a) = s.quota(slot.quota(users), have, n) {
            return Ok(Err(a));
        }
        let key = key.expect("quota met implies a full key");
        match slot {
            KeySlot::Users => keys.users_key = Some(key),
            KeySlot::Pair(l) => {
                keys.pair_keys.insert(l, key);
            }
        }
    }
    for &user in &plan.keyed_users {
        let c = &decoy_checks[user];
        if let Err(a) = s.quota(QuotaKind::MeasuredDecoys { user }, c.measured_total, 2 * n) {
            return Ok(Err(a));
        }
        keys.tp_keys
            .insert(user, c.tp_key.clone().expect("quota met implies a full key"));
        keys.user_tp_keys
            .insert(user, c.user_key.clone().expect("quota met implies a full key"));
    }
    Ok(Ok(keys))
}

/// Keys held by one party, for protocols that index them that way.
pub(crate) fn tp_key(keys: &KeyMaterial, user: usize) -> &[u8] {
    &keys.tp_keys[&user]
}

pub(crate) fn user_tp_key(keys: &KeyMaterial, user: usize) -> &[u8] {
    &keys.user_tp_keys[&user]
}
