use rand::Rng;
use std::collections::{BTreeMap, HashMap};

use super::{encode_density, AttackHooks, AttackScope, ProbeRecord};
use crate::error::{invalid, Result};
use crate::qsim::Unitary;
use crate::roles::{Event, FlightQubit, HookContext, Leg, QubitRole, RegisterId};

type QubitKey = (RegisterId, usize);

fn key(q: &FlightQubit) -> QubitKey {
    (q.register, q.qubit)
}

fn note(ctx: &mut HookContext<'_>, leg: Leg, text: String) {
    let register = ctx.register.id().0;
    ctx.transcript.push(Event::AdversaryHook {
        leg,
        register,
        note: text,
    });
}

#[derive(Debug, Default)]
struct Records(BTreeMap<usize, ProbeRecord>);

impl Records {
    fn entry(&mut self, register: RegisterId) -> &mut ProbeRecord {
        self.0
            .entry(register.0)
            .or_insert_with(|| ProbeRecord::empty(register.0))
    }

    fn all(&self) -> Vec<ProbeRecord> {
        self.0.values().cloned().collect()
    }
}

/// Keeps the genuine qubit, sends the user a random Z-basis fake, reads the
/// fake when it comes back and hands the genuine qubit to TP.
#[derive(Debug)]
pub struct InterceptResend {
    scope: AttackScope,
    held: HashMap<QubitKey, FlightQubit>,
    records: Records,
}

impl InterceptResend {
    pub fn new(scope: AttackScope) -> Self {
        Self {
            scope,
            held: HashMap::new(),
            records: Records::default(),
        }
    }
}

impl AttackHooks for InterceptResend {
    fn on_forward(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        // Only the user filter applies: the genuine qubit always goes back.
        if !self.scope.covers_user(q.origin.user()) {
            return Ok(q);
        }
        let bit: u8 = ctx.rng.random_range(0..2);
        let fake = ctx.register.append(bit, QubitRole::Fake { replaces: q.qubit })?;
        self.held.insert((q.register, fake), q);
        self.records.entry(q.register).probe_qubits.push(fake);
        note(ctx, Leg::Forward, format!("withhold q{}, send fake |{bit}>", q.qubit));
        Ok(FlightQubit { qubit: fake, ..q })
    }

    fn on_return(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        let Some(genuine) = self.held.remove(&key(&q)) else {
            return Ok(q);
        };
        let z = ctx.register.measure_z(q.qubit, ctx.rng)?.bit();
        self.records.entry(q.register).outcomes.push(z);
        note(
            ctx,
            Leg::Return,
            format!("fake q{} read {z}, replay q{}", q.qubit, genuine.qubit),
        );
        Ok(genuine)
    }

    fn probe_records(&self) -> Vec<ProbeRecord> {
        self.records.all()
    }
}

/// Z-measures every qubit in transit.
#[derive(Debug)]
pub struct MeasureResend {
    scope: AttackScope,
    records: Records,
}

impl MeasureResend {
    pub fn new(scope: AttackScope) -> Self {
        Self {
            scope,
            records: Records::default(),
        }
    }

    fn measure(&mut self, ctx: &mut HookContext<'_>, leg: Leg, q: FlightQubit) -> Result<FlightQubit> {
        if self.scope.covers(leg, q.origin.user()) {
            let z = ctx.register.measure_z(q.qubit, ctx.rng)?.bit();
            self.records.entry(q.register).outcomes.push(z);
            note(ctx, leg, format!("measure q{} -> {z}", q.qubit));
        }
        Ok(q)
    }
}

impl AttackHooks for MeasureResend {
    fn on_forward(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        self.measure(ctx, Leg::Forward, q)
    }

    fn on_return(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        self.measure(ctx, Leg::Return, q)
    }

    fn probe_records(&self) -> Vec<ProbeRecord> {
        self.records.all()
    }
}

/// CNOT from the flight qubit onto a fresh `|0⟩` probe on both passes, then
/// a Z read of the probe.
#[derive(Debug)]
pub struct DoubleCnot {
    scope: AttackScope,
    probes: HashMap<QubitKey, usize>,
    records: Records,
}

impl DoubleCnot {
    pub fn new(scope: AttackScope) -> Self {
        Self {
            scope,
            probes: HashMap::new(),
            records: Records::default(),
        }
    }
}

impl AttackHooks for DoubleCnot {
    fn on_forward(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        if !self.scope.covers_user(q.origin.user()) {
            return Ok(q);
        }
        let probe = ctx.register.append(0, QubitRole::Probe { attached_to: q.qubit })?;
        ctx.register.apply_cnot(q.qubit, probe)?;
        self.probes.insert(key(&q), probe);
        self.records.entry(q.register).probe_qubits.push(probe);
        note(ctx, Leg::Forward, format!("cnot q{} -> probe q{probe}", q.qubit));
        Ok(q)
    }

    fn on_return(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        let Some(probe) = self.probes.remove(&key(&q)) else {
            return Ok(q);
        };
        ctx.register.apply_cnot(q.qubit, probe)?;
        let z = ctx.register.measure_z(probe, ctx.rng)?.bit();
        self.records.entry(q.register).outcomes.push(z);
        note(
            ctx,
            Leg::Return,
            format!("cnot q{} -> probe q{probe}, probe read {z}", q.qubit),
        );
        Ok(q)
    }

    fn probe_records(&self) -> Vec<ProbeRecord> {
        self.records.all()
    }
}

/// General two-pass attack: `u_e` on (flight, fresh probe) outbound, `u_f`
/// on the same pair inbound. Probes are left unmeasured; their joint reduced
/// state is recorded after each return.
#[derive(Debug)]
pub struct EntangleMeasure {
    u_e: Unitary,
    u_f: Unitary,
    scope: AttackScope,
    probes: HashMap<QubitKey, usize>,
    records: Records,
}

impl EntangleMeasure {
    pub fn new(u_e: Unitary, u_f: Unitary, scope: AttackScope) -> Result<Self> {
        if u_e.num_qubits() != 2 || u_f.num_qubits() != 2 {
            return Err(invalid("entangle-measure unitaries must be 4x4"));
        }
        Ok(Self {
            u_e,
            u_f,
            scope,
            probes: HashMap::new(),
            records: Records::default(),
        })
    }
}

impl AttackHooks for EntangleMeasure {
    fn on_forward(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        if !self.scope.covers(Leg::Forward, q.origin.user()) {
            return Ok(q);
        }
        let probe = ctx.register.append(0, QubitRole::Probe { attached_to: q.qubit })?;
        ctx.register.apply_unitary(&self.u_e, &[q.qubit, probe])?;
        self.probes.insert(key(&q), probe);
        self.records.entry(q.register).probe_qubits.push(probe);
        note(ctx, Leg::Forward, format!("u_e on (q{}, probe q{probe})", q.qubit));
        Ok(q)
    }

    fn on_return(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit> {
        let Some(probe) = self.probes.remove(&key(&q)) else {
            return Ok(q);
        };
        if self.scope.covers(Leg::Return, q.origin.user()) {
            ctx.register.apply_unitary(&self.u_f, &[q.qubit, probe])?;
            note(ctx, Leg::Return, format!("u_f on (q{}, probe q{probe})", q.qubit));
        }
        let rec = self.records.entry(q.register);
        let rho = ctx.register.reduced(&rec.probe_qubits)?;
        rec.density = Some(encode_density(&rho));
        Ok(q)
    }

    fn probe_records(&self) -> Vec<ProbeRecord> {
        self.records.all()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{measure_bell, BellOutcome, StateVector};
    use crate::rng::seeded;
    use crate::roles::{classical_receive, ActionPolicy, OriginTag, PartyAction, SessionRegister, SessionTranscript};

    fn pair() -> (SessionRegister, [FlightQubit; 2]) {
        let reg = SessionRegister::new(RegisterId(0), StateVector::bell_phi_plus());
        let q = |slot| FlightQubit {
            register: RegisterId(0),
            qubit: slot,
            origin: OriginTag::EntangledGroup { group: 0, slot },
        };
        (reg, [q(0), q(1)])
    }

    /// Sends both halves through `hooks` with the given user actions.
    fn run_pair(
        hooks: &mut dyn AttackHooks,
        actions: [PartyAction; 2],
        seed: u64,
    ) -> (SessionRegister, [FlightQubit; 2]) {
        let (mut reg, qs) = pair();
        let mut eve = seeded(seed);
        let mut user = seeded(seed + 1);
        let mut tr = SessionTranscript::new();
        let mut back = qs;
        for (slot, q) in qs.into_iter().enumerate() {
            let mut ctx = HookContext {
                register: &mut reg,
                rng: &mut eve,
                transcript: &mut tr,
            };
            let f = hooks.on_forward(&mut ctx, q).unwrap();
            classical_receive(ctx.register, f, &ActionPolicy::Always(actions[slot]), &mut user).unwrap();
            back[slot] = hooks.on_return(&mut ctx, f).unwrap();
        }
        (reg, back)
    }

    #[test]
    fn double_cnot_restores_reflected_pair() {
        let mut h = DoubleCnot::new(AttackScope::default());
        let (reg, back) = run_pair(&mut h, [PartyAction::Reflect; 2], 3);
        let (b, _) = measure_bell(reg.state(), back[0].qubit, back[1].qubit, &mut seeded(0)).unwrap();
        assert_eq!(b, BellOutcome::PhiPlus);
        assert_eq!(h.probe_records()[0].outcomes, vec![0, 0]);
    }

    #[test]
    fn intercept_resend_returns_genuine_pair() {
        let mut h = InterceptResend::new(AttackScope::default());
        for seed in 0..20 {
            let (reg, back) = run_pair(&mut h, [PartyAction::Measure; 2], seed);
            assert_eq!(back, pair().1);
            let (b, _) = measure_bell(reg.state(), 0, 1, &mut seeded(seed)).unwrap();
            assert_eq!(b, BellOutcome::PhiPlus);
        }
    }

    #[test]
    fn identity_entangler_leaves_probes_blank() {
        let mut h = EntangleMeasure::new(Unitary::identity(2), Unitary::identity(2), AttackScope::default()).unwrap();
        run_pair(&mut h, [PartyAction::Reflect, PartyAction::Measure], 1);
        let rec = &h.probe_records()[0];
        let rho = rec.density_matrix().unwrap().unwrap();
        assert_eq!(rec.probe_qubits, vec![2, 3]);
        assert!((rho.get(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scope_excludes_user() {
        let scope = AttackScope {
            users: Some(vec![1]),
            ..AttackScope::default()
        };
        let mut h = MeasureResend::new(scope);
        run_pair(&mut h, [PartyAction::Reflect; 2], 0);
        assert_eq!(h.probe_records()[0].outcomes.len(), 2);
    }
}
