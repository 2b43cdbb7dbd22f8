use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::ops::bits_to_int;
use super::session::{quantum_phase, tp_key, user_tp_key, KeySlot, Plan, Session};
use super::{int_string, RunOutput, SqpcConfig};
use crate::adversary::{Adversary, AttackSpec};
use crate::error::{invalid, Result};
use crate::roles::{PartyId, Payload};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqarResult {
    /// `histogram[t-1]` = number of users holding value `t`.
    pub histogram: Vec<i64>,
    /// 1-based rank per user; ties share a rank.
    pub ranks: BTreeMap<usize, usize>,
}

/// Anonymous ranking of `data[l] ∈ 1..=max_value` among `L ≥ 3` users.
pub fn run_sqar(
    cfg: &SqpcConfig,
    data: &[usize],
    max_value: usize,
    attack: &AttackSpec,
) -> Result<RunOutput<SqarResult>> {
    run_sqar_with(cfg, data, max_value, attack.instantiate()?)
}

pub fn run_sqar_with(
    cfg: &SqpcConfig,
    data: &[usize],
    max_value: usize,
    adversary: Adversary,
) -> Result<RunOutput<SqarResult>> {
    cfg.validate()?;
    let users = cfg.users;
    if users < 3 {
        return Err(invalid("ranking needs at least 3 users"));
    }
    if data.len() != users {
        return Err(invalid(format!("expected {users} data values, got {}", data.len())));
    }
    if max_value == 0 || data.iter().any(|&m| m == 0 || m > max_value) {
        return Err(invalid(format!("data values must lie in 1..={max_value}")));
    }

    let mut s = Session::new(cfg.seed, users, adversary);
    let plan = Plan {
        slots: (0..users).map(KeySlot::Pair).collect(),
        keyed_users: (0..users).collect(),
    };
    let keys = match quantum_phase(&mut s, cfg, &plan)? {
        Ok(k) => k,
        Err(reason) => return Ok(s.finish(Err(reason), None)),
    };
    // pair l joins users l and l+1 (mod L)
    let pair: Vec<BigInt> = (0..users).map(|l| bits_to_int(&keys.pair_keys[&l])).collect();
    let user_tc: Vec<BigInt> = (0..users).map(|l| bits_to_int(user_tp_key(&keys, l))).collect();
    let encoded = encode_sub_secrets(&user_tc, &pair, data, max_value)?;
    for (l, v) in encoded.iter().enumerate() {
        s.announce(
            PartyId::User(l),
            Payload::IntegerCiphertext {
                to: Some(PartyId::Tp),
                values: v.iter().map(int_string).collect(),
            },
        );
        s.ledger.b += v.iter().map(|x| x.bits() + 1).sum::<u64>();
    }
    let tp_tc: Vec<BigInt> = (0..users).map(|l| bits_to_int(tp_key(&keys, l))).collect();
    let r = tally_sub_secrets(&encoded, &tp_tc)?;
    s.announce(
        PartyId::Tp,
        Payload::IntegerResult {
            values: r.iter().map(int_string).collect(),
        },
    );
    s.ledger.b += r.iter().map(|x| x.bits() + 1).sum::<u64>();

    let histogram: Vec<i64> = r
        .iter()
        .map(|x| x.to_i64().ok_or_else(|| invalid("ranking count out of range")))
        .collect::<Result<_>>()?;
    let ranks = data
        .iter()
        .enumerate()
        .map(|(l, &m)| (l, rank_of(&histogram, m)))
        .collect();
    s.ledger.c += cfg.n as u64;
    Ok(s.finish(Ok(SqarResult { histogram, ranks }), Some(keys)))
}

/// Each user's `V'_l`: every entry is `K_TC_l − K_{l−1,l} + K_{l,l+1}`, plus
/// one at position `m_l`. `pair[l]` is the key of users `l` and `l+1 mod L`.
pub fn encode_sub_secrets(
    tc: &[BigInt],
    pair: &[BigInt],
    data: &[usize],
    max_value: usize,
) -> Result<Vec<Vec<BigInt>>> {
    let users = data.len();
    if tc.len() != users || pair.len() != users {
        return Err(invalid("one TP key and one pair key per user required"));
    }
    data.iter()
        .enumerate()
        .map(|(l, &m)| {
            if m == 0 || m > max_value {
                return Err(invalid(format!("data values must lie in 1..={max_value}")));
            }
            let base = &tc[l] - &pair[(l + users - 1) % users] + &pair[l];
            let mut v = vec![base; max_value];
            v[m - 1] += 1;
            Ok(v)
        })
        .collect()
}

/// `R^t = Σ_l V'^t_l − Σ_l K_TC_l`.
pub fn tally_sub_secrets(encoded: &[Vec<BigInt>], tc: &[BigInt]) -> Result<Vec<BigInt>> {
    let width = encoded.first().map_or(0, Vec::len);
    if encoded.iter().any(|v| v.len() != width) {
        return Err(invalid("sub-secret strings differ in length"));
    }
    let k: BigInt = tc.iter().sum();
    Ok((0..width)
        .map(|t| encoded.iter().map(|v| &v[t]).sum::<BigInt>() - &k)
        .collect())
}

/// `R^1 + … + R^(m−1) + 1`.
pub fn rank_of(histogram: &[i64], value: usize) -> usize {
    (histogram[..value - 1].iter().sum::<i64>() + 1) as usize
}
