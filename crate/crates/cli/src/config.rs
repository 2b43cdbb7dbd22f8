//! Scenario documents. Parsing is two-step: serde reads the raw shape (and
//! rejects unknown keys), then `validate` collects every semantic problem.

use num_bigint::BigInt;
use num_complex::Complex64;
use semiq::adversary::{AttackKind, AttackScope, AttackSpec};
use semiq::protocols::{SqpcConfig, MAX_USERS};
use semiq::qsim::{Unitary, UNITARITY_TOL};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    Sqpc2,
    SqpcMulti,
    Sqka,
    Sqs,
    Sqar,
}

/// Either the keyword `"random"` or one literal per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawSecrets {
    Keyword(String),
    Values(Vec<serde_json::Value>),
}

/// `[[re, im], ...]` rows.
pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAttackDetail {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_e: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_f: Option<RawMatrix>,
    /// Shorthand for `u_e` = controlled rotation by this angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope: Option<AttackScope>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawAttack {
    Name(String),
    Detail(RawAttackDetail),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawHash {
    Name(String),
    Prefix { prefix: usize },
}

/// The document as written. Absent optional keys stay absent so that
/// re-serializing reproduces the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub protocol: Option<ProtocolName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub max_value: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secrets: Option<RawSecrets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<RawAttack>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hash: Option<RawHash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oversample: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Secrets {
    Random,
    Bits(Vec<Vec<u8>>),
    Integers(Vec<BigInt>),
    Data(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashChoice {
    Sha256,
    Prefix(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    FairCoin,
    Balanced,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub raw: RawConfig,
    pub protocol: ProtocolName,
    pub n: usize,
    pub users: usize,
    pub max_value: Option<usize>,
    pub secrets: Secrets,
    pub pair: (usize, usize),
    pub attack: AttackSpec,
    pub hash: HashChoice,
    pub policy: PolicyChoice,
    pub trials: u64,
    pub seed: u64,
    pub threshold: f64,
    pub oversample: f64,
    pub output_path: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    validate(raw)
}

fn parse_bits(s: &str) -> Option<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}

fn matrix(name: &str, m: &RawMatrix, errs: &mut Vec<String>) -> Option<Unitary> {
    let dim = m.len();
    if dim != 4 || m.iter().any(|r| r.len() != 4) {
        errs.push(format!("attack.{name}: expected a 4x4 matrix of [re, im] pairs"));
        return None;
    }
    let rows: Vec<Vec<Complex64>> = m
        .iter()
        .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    match Unitary::from_rows(&rows) {
        Ok(u) => Some(u),
        Err(semiq::Error::NotUnitary { residual }) => {
            errs.push(format!(
                "attack.{name}: matrix is not unitary (residual {residual:.3e}, tolerance {UNITARITY_TOL:e})"
            ));
            None
        }
        Err(e) => {
            errs.push(format!("attack.{name}: {e}"));
            None
        }
    }
}

fn attack(raw: &RawAttack, errs: &mut Vec<String>) -> Option<AttackSpec> {
    let detail = match raw {
        RawAttack::Name(kind) => RawAttackDetail {
            kind: kind.clone(),
            u_e: None,
            u_f: None,
            theta: None,
            target_key: None,
            scope: None,
        },
        RawAttack::Detail(d) => d.clone(),
    };
    let kind = match detail.kind.as_str() {
        "honest" => AttackKind::Honest,
        "intercept_resend" => AttackKind::InterceptResend,
        "measure_resend" => AttackKind::MeasureResend,
        "double_cnot" => AttackKind::DoubleCnot,
        "tp_zbasis" => AttackKind::TpZBasisAttack,
        "tp_fake_particles" => AttackKind::TpFakeParticles,
        "entangle_measure" => {
            let u_e = match (&detail.u_e, detail.theta) {
                (Some(m), None) => matrix("u_e", m, errs),
                (None, Some(t)) if t.is_finite() => Some(Unitary::controlled_rotation(t)),
                (None, Some(_)) => {
                    errs.push("attack.theta must be finite".into());
                    None
                }
                (Some(_), Some(_)) => {
                    errs.push("attack: give either u_e or theta, not both".into());
                    None
                }
                (None, None) => {
                    errs.push("attack: entangle_measure needs u_e or theta".into());
                    None
                }
            };
            let u_f = match &detail.u_f {
                Some(m) => matrix("u_f", m, errs),
                None => Some(Unitary::identity(2)),
            };
            AttackKind::EntangleMeasure { u_e: u_e?, u_f: u_f? }
        }
        "dishonest_user_key_forcing" => match detail.target_key.as_deref().map(parse_bits) {
            Some(Some(k)) => AttackKind::DishonestUserKeyForcing { target_key: k },
            Some(None) => {
                errs.push("attack.target_key must be a string of 0/1".into());
                return None;
            }
            None => {
                errs.push("attack: dishonest_user_key_forcing needs target_key".into());
                return None;
            }
        },
        other => {
            errs.push(format!("attack: unknown attack kind `{other}`"));
            return None;
        }
    };
    Some(AttackSpec::new(kind).with_scope(detail.scope.unwrap_or_default()))
}

fn secrets(raw: &RawConfig, protocol: ProtocolName, n: usize, users: usize, errs: &mut Vec<String>) -> Secrets {
    let values = match &raw.secrets {
        None => return Secrets::Random,
        Some(RawSecrets::Keyword(k)) if k == "random" => return Secrets::Random,
        Some(RawSecrets::Keyword(k)) => {
            errs.push(format!("secrets: expected \"random\" or a list, got `{k}`"));
            return Secrets::Random;
        }
        Some(RawSecrets::Values(v)) => v,
    };
    let parties = match protocol {
        ProtocolName::Sqka => 3,
        _ => users,
    };
    if values.len() != parties {
        errs.push(format!("secrets: expected {parties} entries, got {}", values.len()));
        return Secrets::Random;
    }
    match protocol {
        ProtocolName::Sqpc2 | ProtocolName::SqpcMulti | ProtocolName::Sqka => {
            let mut out = Vec::new();
            for (i, v) in values.iter().enumerate() {
                match v.as_str().and_then(parse_bits) {
                    Some(b) if b.len() == n => out.push(b),
                    Some(b) => errs.push(format!("secrets[{i}]: length {} but n = {n}", b.len())),
                    None => errs.push(format!("secrets[{i}]: expected a string of 0/1")),
                }
            }
            Secrets::Bits(out)
        }
        ProtocolName::Sqs => {
            let mut out = Vec::new();
            for (i, v) in values.iter().enumerate() {
                let parsed = match v {
                    serde_json::Value::Number(x) => x.as_i64().map(BigInt::from),
                    serde_json::Value::String(s) => s.parse::<BigInt>().ok(),
                    _ => None,
                };
                match parsed {
                    Some(x) => out.push(x),
                    None => errs.push(format!("secrets[{i}]: expected an integer or decimal string")),
                }
            }
            Secrets::Integers(out)
        }
        ProtocolName::Sqar => {
            let mut out = Vec::new();
            for (i, v) in values.iter().enumerate() {
                match v.as_u64() {
                    Some(x) => out.push(x as usize),
                    None => errs.push(format!("secrets[{i}]: expected a positive integer")),
                }
            }
            Secrets::Data(out)
        }
    }
}

pub fn validate(raw: RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let mut errs = Vec::new();
    if let Some(v) = raw.schema_version {
        if v != SCHEMA_VERSION {
            errs.push(format!(
                "schema_version: unsupported version {v} (expected {SCHEMA_VERSION})"
            ));
        }
    }
    let Some(protocol) = raw.protocol else {
        return Err(ConfigError::Invalid(vec!["protocol: missing field".into()]));
    };
    let n = match raw.n {
        Some(0) => {
            errs.push("n: must be at least 1".into());
            1
        }
        Some(n) => n,
        None => {
            errs.push("n: missing field".into());
            1
        }
    };
    let users = match (protocol, raw.users) {
        (ProtocolName::Sqpc2 | ProtocolName::Sqka | ProtocolName::Sqs, None | Some(2)) => 2,
        (ProtocolName::Sqpc2 | ProtocolName::Sqka | ProtocolName::Sqs, Some(l)) => {
            errs.push(format!("L: this protocol has exactly 2 classical users, got {l}"));
            2
        }
        (ProtocolName::SqpcMulti | ProtocolName::Sqar, Some(l)) if (3..=MAX_USERS).contains(&l) => l,
        (ProtocolName::SqpcMulti | ProtocolName::Sqar, Some(l)) => {
            errs.push(format!("L: must lie in 3..={MAX_USERS}, got {l}"));
            3
        }
        (ProtocolName::SqpcMulti | ProtocolName::Sqar, None) => {
            errs.push("L: missing field (required for this protocol)".into());
            3
        }
    };
    let max_value = match (protocol, raw.max_value) {
        (ProtocolName::Sqar, Some(0)) => {
            errs.push("N: must be at least 1".into());
            None
        }
        (ProtocolName::Sqar, None) => {
            errs.push("N: missing field (required for sqar)".into());
            None
        }
        (ProtocolName::Sqar, m) => m,
        (_, Some(_)) => {
            errs.push("N: only meaningful for sqar".into());
            None
        }
        (_, None) => None,
    };
    let secrets = secrets(&raw, protocol, n, users, &mut errs);
    if let (Secrets::Data(d), Some(m)) = (&secrets, max_value) {
        if d.iter().any(|&x| x == 0 || x > m) {
            errs.push(format!("secrets: sqar values must lie in 1..={m}"));
        }
    }
    let pair = match (protocol, raw.pair) {
        (ProtocolName::SqpcMulti, Some([a, b])) => {
            if a == b || a >= users || b >= users {
                errs.push(format!("pair: need two distinct users below {users}"));
            }
            (a, b)
        }
        (ProtocolName::SqpcMulti, None) => (0, 1),
        (_, Some(_)) => {
            errs.push("pair: only meaningful for sqpc_multi".into());
            (0, 1)
        }
        (_, None) => (0, 1),
    };
    let attack = match &raw.attack {
        None => Some(AttackSpec::honest()),
        Some(a) => attack(a, &mut errs),
    };
    if let Some(a) = &attack {
        if matches!(a.kind, AttackKind::DishonestUserKeyForcing { .. }) && protocol != ProtocolName::Sqka {
            errs.push("attack: dishonest_user_key_forcing applies to sqka only".into());
        }
    }
    let hash = match &raw.hash {
        None => HashChoice::Sha256,
        Some(RawHash::Name(s)) if s == "sha256" => HashChoice::Sha256,
        Some(RawHash::Name(s)) => {
            errs.push(format!("hash: unknown hash `{s}`"));
            HashChoice::Sha256
        }
        Some(RawHash::Prefix { prefix }) if *prefix >= 1 && *prefix <= 32 => HashChoice::Prefix(*prefix),
        Some(RawHash::Prefix { .. }) => {
            errs.push("hash.prefix: must lie in 1..=32 bytes".into());
            HashChoice::Sha256
        }
    };
    let policy = match raw.policy.as_deref() {
        None | Some("fair_coin") => PolicyChoice::FairCoin,
        Some("balanced") if users == 2 => PolicyChoice::Balanced,
        Some("balanced") => {
            errs.push("policy: balanced is defined for two users only".into());
            PolicyChoice::FairCoin
        }
        Some(p) => {
            errs.push(format!("policy: unknown policy `{p}`"));
            PolicyChoice::FairCoin
        }
    };
    let trials = raw.trials.unwrap_or(1);
    if trials == 0 {
        errs.push("trials: must be at least 1".into());
    }
    if trials > 1 && secrets != Secrets::Random {
        errs.push("secrets: literal secrets need trials = 1 (trials draw random inputs)".into());
    }
    let threshold = raw.threshold.unwrap_or(0.0);
    if !(0.0..1.0).contains(&threshold) {
        errs.push("threshold: must lie in [0, 1)".into());
    }
    let oversample = raw.oversample.unwrap_or(1.0);
    if !oversample.is_finite() || oversample < 1.0 {
        errs.push("oversample: must be a finite number >= 1".into());
    }
    match (errs.is_empty(), attack) {
        (true, Some(attack)) => Ok(ScenarioConfig {
            protocol,
            n,
            users,
            max_value,
            secrets,
            pair,
            attack,
            hash,
            policy,
            trials,
            seed: raw.seed.unwrap_or(0),
            threshold,
            oversample,
            output_path: raw.output_path.clone(),
            raw,
        }),
        _ => Err(ConfigError::Invalid(errs)),
    }
}

impl ScenarioConfig {
    pub fn sqpc_config(&self) -> SqpcConfig {
        let cfg = SqpcConfig::new(self.n, self.users, self.seed)
            .with_threshold(self.threshold)
            .with_oversample(self.oversample);
        match self.policy {
            PolicyChoice::FairCoin => cfg,
            PolicyChoice::Balanced => cfg.with_policy(semiq::metrics::balanced_policy(self.n)),
        }
    }
}
