use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::ops::bits_to_int;
use super::session::{quantum_phase, tp_key, user_tp_key, KeySlot, Plan, Session};
use super::{int_string, RunOutput, SqpcConfig};
use crate::adversary::{Adversary, AttackSpec};
use crate::error::{invalid, Result};
use crate::roles::{PartyId, Payload};

/// Everything TP holds at the end of a summation. There is deliberately no
/// slot for the users' shared key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TpSumView {
    #[serde(with = "super::decimal")]
    pub qa: BigInt,
    #[serde(with = "super::decimal")]
    pub qb: BigInt,
    #[serde(with = "super::decimal")]
    pub kta: BigInt,
    #[serde(with = "super::decimal")]
    pub ktb: BigInt,
    /// `QA + QB − KTA − KTB`, i.e. the sum blinded by twice the user key.
    #[serde(with = "super::decimal")]
    pub rt: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqsResult {
    /// What the users recover: `RT − 2·KAB`.
    #[serde(with = "super::decimal")]
    pub sum: BigInt,
    pub tp_view: TpSumView,
}

fn published_bits(v: &BigInt) -> u64 {
    // magnitude plus a sign bit
    v.bits() + 1
}

/// Two-party summation of arbitrary integers.
pub fn run_sqs(cfg: &SqpcConfig, ma: &BigInt, mb: &BigInt, attack: &AttackSpec) -> Result<RunOutput<SqsResult>> {
    run_sqs_with(cfg, ma, mb, attack.instantiate()?)
}

pub fn run_sqs_with(cfg: &SqpcConfig, ma: &BigInt, mb: &BigInt, adversary: Adversary) -> Result<RunOutput<SqsResult>> {
    cfg.validate()?;
    if cfg.users != 2 {
        return Err(invalid("summation runs with exactly 2 users"));
    }
    let mut s = Session::new(cfg.seed, 2, adversary);
    let plan = Plan {
        slots: vec![KeySlot::Users],
        keyed_users: vec![0, 1],
    };
    let keys = match quantum_phase(&mut s, cfg, &plan)? {
        Ok(k) => k,
        Err(reason) => return Ok(s.finish(Err(reason), None)),
    };
    let kab = bits_to_int(keys.users_key.as_deref().expect("user key present"));

    let mut q = Vec::with_capacity(2);
    for (u, m) in [ma, mb].into_iter().enumerate() {
        let c = &kab + bits_to_int(user_tp_key(&keys, u)) + m;
        s.announce(
            PartyId::User(u),
            Payload::IntegerCiphertext {
                to: Some(PartyId::Tp),
                values: vec![int_string(&c)],
            },
        );
        s.ledger.b += published_bits(&c);
        q.push(c);
    }
    let kta = bits_to_int(tp_key(&keys, 0));
    let ktb = bits_to_int(tp_key(&keys, 1));
    let rt = &q[0] + &q[1] - &kta - &ktb;
    s.announce(
        PartyId::Tp,
        Payload::IntegerResult {
            values: vec![int_string(&rt)],
        },
    );
    s.ledger.b += published_bits(&rt);
    let sum = &rt - BigInt::from(2) * &kab;
    s.ledger.c += cfg.n as u64;
    let tp_view = TpSumView {
        qa: q[0].clone(),
        qb: q[1].clone(),
        kta,
        ktb,
        rt,
    };
    Ok(s.finish(Ok(SqsResult { sum, tp_view }), Some(keys)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(ma: i64, mb: i64, seed: u64) -> SqsResult {
        let cfg = SqpcConfig::new(6, 2, seed).with_oversample(4.0);
        let out = run_sqs(&cfg, &BigInt::from(ma), &BigInt::from(mb), &AttackSpec::honest()).unwrap();
        out.outcome.result().cloned().expect("completes")
    }

    #[test]
    fn examples() {
        assert_eq!(sum(0, 0, 1).sum, BigInt::from(0));
        assert_eq!(sum(7, 35, 2).sum, BigInt::from(42));
        assert_eq!(sum(-5, 3, 3).sum, BigInt::from(-2));
    }

    #[test]
    fn tp_view_is_blinded_by_user_key() {
        let r = sum(10, 20, 4);
        assert_eq!(r.sum, BigInt::from(30));
        // the blinding term 2·KAB is what separates TP's value from the sum
        let blind = &r.tp_view.rt - &r.sum;
        assert!(blind >= BigInt::from(0) && &blind % 2 == BigInt::from(0));
        assert_eq!(
            &r.tp_view.qa + &r.tp_view.qb - &r.tp_view.kta - &r.tp_view.ktb,
            r.tp_view.rt
        );
    }
}
