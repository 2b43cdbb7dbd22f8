use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qsim::{BellOutcome, GhzOutcome, Sign, StateVector};
use crate::rng::SimRng;
use crate::roles::{tp_measure_returned, ExpectedKind, FlightQubit, PreparedKind, SessionRegister, TpMeasurement};

/// TP's public result for one returned entangled group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupOutcome {
    Bell(BellOutcome),
    Ghz(GhzOutcome),
}

impl GroupOutcome {
    /// The result an untouched, all-reflected group must give.
    pub fn is_reference(&self) -> bool {
        match self {
            GroupOutcome::Bell(b) => *b == BellOutcome::PhiPlus,
            GroupOutcome::Ghz(g) => g.is_ghz_plus(),
        }
    }
}

/// How TP prepares and measures the entangled groups. Decoys are always
/// handled honestly. The measurement sees only the returned qubits, never
/// the users' action choices.
pub trait TpStrategy: Send {
    fn prepare_group(&mut self, parties: usize, rng: &mut SimRng) -> Result<(StateVector, PreparedKind)>;

    fn measure_group(
        &mut self,
        register: &mut SessionRegister,
        qubits: &[FlightQubit],
        rng: &mut SimRng,
    ) -> Result<GroupOutcome>;

    /// Z outcomes a cheating TP collected, one entry per group.
    fn learned(&self) -> &[Vec<u8>] {
        &[]
    }
}

fn honest_state(parties: usize) -> Result<(StateVector, PreparedKind)> {
    if parties == 2 {
        Ok((StateVector::bell_phi_plus(), PreparedKind::Bell))
    } else {
        Ok((StateVector::ghz_plus(parties)?, PreparedKind::Ghz))
    }
}

/// A plausible-looking announcement chosen without looking at anything.
fn random_reference_like(parties: usize, rng: &mut SimRng) -> GroupOutcome {
    let flip = rng.random_bool(0.5);
    if parties == 2 {
        GroupOutcome::Bell(if flip {
            BellOutcome::PhiMinus
        } else {
            BellOutcome::PhiPlus
        })
    } else {
        GroupOutcome::Ghz(GhzOutcome {
            pattern: vec![0; parties - 1],
            sign: if flip { Sign::Minus } else { Sign::Plus },
        })
    }
}

fn measure_all_z(register: &mut SessionRegister, qubits: &[FlightQubit], rng: &mut SimRng) -> Result<Vec<u8>> {
    qubits
        .iter()
        .map(|q| Ok(register.measure_z(q.qubit, rng)?.bit()))
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct HonestTp;

impl TpStrategy for HonestTp {
    fn prepare_group(&mut self, parties: usize, _rng: &mut SimRng) -> Result<(StateVector, PreparedKind)> {
        honest_state(parties)
    }

    fn measure_group(
        &mut self,
        register: &mut SessionRegister,
        qubits: &[FlightQubit],
        rng: &mut SimRng,
    ) -> Result<GroupOutcome> {
        let kind = if qubits.len() == 2 {
            ExpectedKind::Bell
        } else {
            ExpectedKind::Ghz(qubits.len())
        };
        match tp_measure_returned(register, qubits, kind, rng)? {
            TpMeasurement::Bell(b) => Ok(GroupOutcome::Bell(b)),
            TpMeasurement::Ghz(g) => Ok(GroupOutcome::Ghz(g)),
            TpMeasurement::Z(_) => Err(invalid("group measurement returned a Z outcome")),
        }
    }
}

/// Prepares honest groups but reads them back in Z, then announces a coin
/// flip between the reference result and its sign-flipped partner.
#[derive(Debug, Default, Clone)]
pub struct ZBasisTp {
    learned: Vec<Vec<u8>>,
}

impl TpStrategy for ZBasisTp {
    fn prepare_group(&mut self, parties: usize, _rng: &mut SimRng) -> Result<(StateVector, PreparedKind)> {
        honest_state(parties)
    }

    fn measure_group(
        &mut self,
        register: &mut SessionRegister,
        qubits: &[FlightQubit],
        rng: &mut SimRng,
    ) -> Result<GroupOutcome> {
        self.learned.push(measure_all_z(register, qubits, rng)?);
        Ok(random_reference_like(qubits.len(), rng))
    }

    fn learned(&self) -> &[Vec<u8>] {
        &self.learned
    }
}

/// Sends independent random Z-basis qubits instead of entangled groups.
#[derive(Debug, Default, Clone)]
pub struct FakeParticlesTp {
    learned: Vec<Vec<u8>>,
}

impl TpStrategy for FakeParticlesTp {
    fn prepare_group(&mut self, parties: usize, rng: &mut SimRng) -> Result<(StateVector, PreparedKind)> {
        if parties < 2 {
            return Err(invalid("a group needs at least two parties"));
        }
        let bits: Vec<u8> = (0..parties).map(|_| rng.random_range(0..2)).collect();
        Ok((StateVector::basis(&bits)?, PreparedKind::FakeGroup))
    }

    fn measure_group(
        &mut self,
        register: &mut SessionRegister,
        qubits: &[FlightQubit],
        rng: &mut SimRng,
    ) -> Result<GroupOutcome> {
        self.learned.push(measure_all_z(register, qubits, rng)?);
        Ok(random_reference_like(qubits.len(), rng))
    }

    fn learned(&self) -> &[Vec<u8>] {
        &self.learned
    }
}
