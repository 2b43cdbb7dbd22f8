//! The five protocols as seeded state machines over `roles` and `qsim`.

mod ops;
mod probe;
mod session;
mod sqar;
mod sqka;
mod sqpc;
mod sqs;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use ops::{
    bits_to_int, check_reflect_bell, compute_comparison, decoy_check_and_key, derive_pair_key, sift_cases, sift_rounds,
    xor_bits, CheckTally, DecoyCheck, DecoyRecord, Sifted,
};
pub use probe::{probe_decoy, probe_group, DecoyProbe, GroupProbe};
pub use sqar::{encode_sub_secrets, rank_of, run_sqar, run_sqar_with, tally_sub_secrets, SqarResult};
pub use sqka::{run_sqka, run_sqka_with, KeyHash, PartyKey, PrefixHash, Sha256Hash, SqkaResult};
pub use sqpc::{run_sqpc2, run_sqpc2_with, run_sqpc_multi, run_sqpc_multi_with, ComparisonVerdict, SqpcResult};
pub use sqs::{run_sqs, run_sqs_with, SqsResult, TpSumView};

use crate::adversary::ProbeRecord;
use crate::error::{invalid, Result};
use crate::roles::{AbortReason, ActionPolicy, SessionTranscript};

/// Largest number of classical users; a GHZ group plus one probe per
/// member must fit in a register.
pub const MAX_USERS: usize = 6;

/// Parameters shared by all protocols.
#[derive(Debug, Clone)]
pub struct SqpcConfig {
    /// Secret / key length in bits.
    pub n: usize,
    /// Number of classical users.
    pub users: usize,
    pub seed: u64,
    /// A check aborts when its error rate strictly exceeds this.
    pub error_threshold: f64,
    /// Scales the number of prepared groups and decoys.
    pub oversample: f64,
    pub policy: ActionPolicy,
}

impl SqpcConfig {
    pub fn new(n: usize, users: usize, seed: u64) -> Self {
        Self {
            n,
            users,
            seed,
            error_threshold: 0.0,
            oversample: 1.0,
            policy: ActionPolicy::FairCoin,
        }
    }

    pub fn with_oversample(mut self, oversample: f64) -> Self {
        self.oversample = oversample;
        self
    }

    pub fn with_policy(mut self, policy: ActionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.error_threshold = threshold;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(2..=MAX_USERS).contains(&self.users) {
            return Err(invalid(format!("number of users must be in 2..={MAX_USERS}")));
        }
        if !(0.0..1.0).contains(&self.error_threshold) {
            return Err(invalid("error threshold must lie in [0, 1)"));
        }
        if !self.oversample.is_finite() || self.oversample < 1.0 {
            return Err(invalid("oversample factor must be a finite number >= 1"));
        }
        Ok(())
    }

    /// `2^L · n` entangled groups, scaled.
    pub fn groups(&self) -> usize {
        ((1usize << self.users) as f64 * self.n as f64 * self.oversample).ceil() as usize
    }

    /// `4n` decoys per user, scaled.
    pub fn decoys(&self) -> usize {
        (4.0 * self.n as f64 * self.oversample).ceil() as usize
    }
}

/// Efficiency counters: shared classical bits `c`, consumed qubits `q`,
/// published classical bits `b`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub c: u64,
    pub q: u64,
    pub b: u64,
}

/// Keys established in the quantum phase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    /// Key shared by all classical users (`K_AB`, or `K_C` with more users).
    pub users_key: Option<Vec<u8>>,
    /// Keys of adjacent user pairs `(l, l+1 mod L)`, indexed by `l`.
    pub pair_keys: BTreeMap<usize, Vec<u8>>,
    /// TP's copy of the key it shares with each user.
    pub tp_keys: BTreeMap<usize, Vec<u8>>,
    /// Each user's copy of its key with TP.
    pub user_tp_keys: BTreeMap<usize, Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<R> {
    Completed { result: R },
    Aborted { reason: AbortReason },
}

impl<R> Outcome<R> {
    pub fn result(&self) -> Option<&R> {
        match self {
            Outcome::Completed { result } => Some(result),
            Outcome::Aborted { .. } => None,
        }
    }

    pub fn abort_reason(&self) -> Option<&AbortReason> {
        match self {
            Outcome::Completed { .. } => None,
            Outcome::Aborted { reason } => Some(reason),
        }
    }

    /// Aborted because a consistency check failed.
    pub fn is_detection(&self) -> bool {
        self.abort_reason().is_some_and(|r| r.is_detection())
    }

    /// Aborted for lack of usable rounds.
    pub fn is_quota_unmet(&self) -> bool {
        matches!(self.abort_reason(), Some(AbortReason::QuotaUnmet { .. }))
    }
}

/// Everything one protocol run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput<R> {
    pub outcome: Outcome<R>,
    pub transcript: SessionTranscript,
    pub ledger: ResourceLedger,
    pub probes: Vec<ProbeRecord>,
    /// Present when the quantum phase completed.
    pub keys: Option<KeyMaterial>,
}

/// Signed integer as a decimal string, for transcripts and reports.
pub(crate) fn int_string(v: &BigInt) -> String {
    v.to_str_radix(10)
}

/// Serde adapter: unbounded integers as decimal strings.
pub(crate) mod decimal {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_counts() {
        let c = SqpcConfig::new(8, 2, 0);
        assert_eq!((c.groups(), c.decoys()), (32, 32));
        let c = SqpcConfig::new(4, 3, 0).with_oversample(1.5);
        assert_eq!((c.groups(), c.decoys()), (48, 24));
    }

    #[test]
    fn config_validation() {
        assert!(SqpcConfig::new(0, 2, 0).validate().is_err());
        assert!(SqpcConfig::new(1, 1, 0).validate().is_err());
        assert!(SqpcConfig::new(1, 7, 0).validate().is_err());
        assert!(SqpcConfig::new(1, 2, 0).with_threshold(1.0).validate().is_err());
        assert!(SqpcConfig::new(1, 2, 0).with_oversample(0.5).validate().is_err());
        assert!(SqpcConfig::new(1, 2, 0).validate().is_ok());
    }
}
