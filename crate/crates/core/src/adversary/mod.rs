//! Channel attacks (hooks on the TP→user and user→TP legs) and insider
//! strategies (a cheating TP, a cheating key-agreement user).

mod hooks;
mod tp;

use serde::{Deserialize, Serialize};

pub use hooks::{DoubleCnot, EntangleMeasure, InterceptResend, MeasureResend};
pub use tp::{FakeParticlesTp, GroupOutcome, HonestTp, TpStrategy, ZBasisTp};

use crate::error::{invalid, Result};
use crate::qsim::{DensityMatrix, Unitary};
use crate::roles::{FlightQubit, HookContext, Leg};

/// Which legs and which users a channel attack touches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackScope {
    #[serde(default = "yes")]
    pub forward: bool,
    #[serde(default = "yes", rename = "return")]
    pub return_leg: bool,
    /// `None` attacks every user.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<usize>>,
}

fn yes() -> bool {
    true
}

impl Default for AttackScope {
    fn default() -> Self {
        Self {
            forward: true,
            return_leg: true,
            users: None,
        }
    }
}

impl AttackScope {
    pub fn covers_user(&self, user: usize) -> bool {
        self.users.as_ref().is_none_or(|u| u.contains(&user))
    }

    pub fn covers(&self, leg: Leg, user: usize) -> bool {
        let leg_on = match leg {
            Leg::Forward => self.forward,
            Leg::Return => self.return_leg,
        };
        leg_on && self.covers_user(user)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    Honest,
    InterceptResend,
    MeasureResend,
    DoubleCnot,
    /// `u_e` acts on (flight, probe) on the way out, `u_f` on the way back.
    EntangleMeasure {
        u_e: Unitary,
        u_f: Unitary,
    },
    TpZBasisAttack,
    TpFakeParticles,
    /// Alice (user 0) tries to force the key-agreement output.
    DishonestUserKeyForcing {
        target_key: Vec<u8>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub scope: AttackScope,
}

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            scope: AttackScope::default(),
        }
    }

    pub fn honest() -> Self {
        Self::new(AttackKind::Honest)
    }

    pub fn entangle_measure(u_e: Unitary, u_f: Unitary) -> Result<Self> {
        if u_e.num_qubits() != 2 || u_f.num_qubits() != 2 {
            return Err(invalid("entangle-measure unitaries must be 4x4"));
        }
        Ok(Self::new(AttackKind::EntangleMeasure { u_e, u_f }))
    }

    pub fn with_scope(mut self, scope: AttackScope) -> Self {
        self.scope = scope;
        self
    }

    /// Short machine name, as used in configs.
    pub fn name(&self) -> &'static str {
        match self.kind {
            AttackKind::Honest => "honest",
            AttackKind::InterceptResend => "intercept_resend",
            AttackKind::MeasureResend => "measure_resend",
            AttackKind::DoubleCnot => "double_cnot",
            AttackKind::EntangleMeasure { .. } => "entangle_measure",
            AttackKind::TpZBasisAttack => "tp_zbasis",
            AttackKind::TpFakeParticles => "tp_fake_particles",
            AttackKind::DishonestUserKeyForcing { .. } => "dishonest_user_key_forcing",
        }
    }

    /// Builds fresh per-session adversary state.
    pub fn instantiate(&self) -> Result<Adversary> {
        let scope = self.scope.clone();
        let mut adv = Adversary::none();
        match &self.kind {
            AttackKind::Honest => {}
            AttackKind::InterceptResend => adv.hooks = Some(Box::new(InterceptResend::new(scope))),
            AttackKind::MeasureResend => adv.hooks = Some(Box::new(MeasureResend::new(scope))),
            AttackKind::DoubleCnot => adv.hooks = Some(Box::new(DoubleCnot::new(scope))),
            AttackKind::EntangleMeasure { u_e, u_f } => {
                adv.hooks = Some(Box::new(EntangleMeasure::new(u_e.clone(), u_f.clone(), scope)?))
            }
            AttackKind::TpZBasisAttack => adv.tp = Box::new(ZBasisTp::default()),
            AttackKind::TpFakeParticles => adv.tp = Box::new(FakeParticlesTp::default()),
            AttackKind::DishonestUserKeyForcing { target_key } => {
                if target_key.iter().any(|&b| b > 1) {
                    return Err(invalid("target key must be a bit list"));
                }
                adv.insider = Some(KeyForcing {
                    target_key: target_key.clone(),
                })
            }
        }
        Ok(adv)
    }
}

/// Per-session adversary: optional channel hooks, the TP's strategy and an
/// optional cheating key-agreement user.
pub struct Adversary {
    pub hooks: Option<Box<dyn AttackHooks>>,
    pub tp: Box<dyn TpStrategy>,
    pub insider: Option<KeyForcing>,
}

impl Adversary {
    /// No eavesdropper, honest TP, honest users.
    pub fn none() -> Self {
        Self {
            hooks: None,
            tp: Box::new(HonestTp),
            insider: None,
        }
    }

    pub fn probe_records(&self) -> Vec<ProbeRecord> {
        self.hooks.as_ref().map(|h| h.probe_records()).unwrap_or_default()
    }
}

impl std::fmt::Debug for Adversary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Adversary")
            .field("hooks", &self.hooks.is_some())
            .field("insider", &self.insider)
            .finish_non_exhaustive()
    }
}

/// A channel attack. Each hook runs exactly once per qubit per leg and may
/// append probes to the qubit's register. The returned qubit is what travels
/// on (a fake, in the intercept-resend case).
pub trait AttackHooks: Send {
    fn on_forward(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit>;
    fn on_return(&mut self, ctx: &mut HookContext<'_>, q: FlightQubit) -> Result<FlightQubit>;
    /// One record per attacked register, ordered by register.
    fn probe_records(&self) -> Vec<ProbeRecord>;
}

/// Cheating SQKA user: commits honest hashes, then publishes ciphertexts
/// that steer everyone's final key to `target_key`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyForcing {
    pub target_key: Vec<u8>,
}

/// What Eve holds for one attacked register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub register: usize,
    /// Probe (or fake) qubit indices within the register.
    pub probe_qubits: Vec<usize>,
    /// Reduced state of all probes, row-major `[re, im]` entries.
    pub density: Option<Vec<Vec<[f64; 2]>>>,
    /// Z outcomes Eve read, in the order she read them.
    pub outcomes: Vec<u8>,
}

impl ProbeRecord {
    pub(crate) fn empty(register: usize) -> Self {
        Self {
            register,
            probe_qubits: Vec::new(),
            density: None,
            outcomes: Vec::new(),
        }
    }

    pub fn density_matrix(&self) -> Option<Result<DensityMatrix>> {
        self.density.as_ref().map(|rows| {
            let d = rows.len();
            let m = nalgebra::DMatrix::from_fn(d, d, |i, j| num_complex::Complex64::new(rows[i][j][0], rows[i][j][1]));
            DensityMatrix::new(m)
        })
    }
}

pub(crate) fn encode_density(rho: &DensityMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..rho.dim())
        .map(|i| (0..rho.dim()).map(|j| [rho.get(i, j).re, rho.get(i, j).im]).collect())
        .collect()
}
