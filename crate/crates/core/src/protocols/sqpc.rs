use serde::{Deserialize, Serialize};

use super::ops::{compute_comparison, xor_bits};
use super::session::{quantum_phase, tp_key, user_tp_key, KeySlot, Plan, Session};
use super::{RunOutput, SqpcConfig};
use crate::adversary::{Adversary, AttackSpec};
use crate::error::{invalid, Result};
use crate::roles::{PartyId, Payload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonVerdict {
    Equal,
    Unequal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqpcResult {
    pub verdict: ComparisonVerdict,
    /// `R^j = m_l^j ⊕ m_g^j`; all zero exactly when the secrets are equal.
    pub r_bits: Vec<u8>,
}

pub(crate) fn check_bits(name: &str, bits: &[u8], n: usize) -> Result<()> {
    if bits.len() != n {
        return Err(invalid(format!("{name} has {} bits, expected {n}", bits.len())));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(invalid(format!("{name} must contain only 0/1")));
    }
    Ok(())
}

/// Two-party private comparison over Bell pairs.
pub fn run_sqpc2(cfg: &SqpcConfig, m_a: &[u8], m_b: &[u8], attack: &AttackSpec) -> Result<RunOutput<SqpcResult>> {
    run_sqpc2_with(cfg, m_a, m_b, attack.instantiate()?)
}

pub fn run_sqpc2_with(cfg: &SqpcConfig, m_a: &[u8], m_b: &[u8], adversary: Adversary) -> Result<RunOutput<SqpcResult>> {
    if cfg.users != 2 {
        return Err(invalid("two-party comparison needs exactly 2 users"));
    }
    compare(cfg, &[m_a, m_b], (0, 1), adversary)
}

/// Multi-party private comparison over L-qubit GHZ groups; TP compares the
/// secrets of users `pair.0` and `pair.1`.
pub fn run_sqpc_multi(
    cfg: &SqpcConfig,
    secrets: &[Vec<u8>],
    pair: (usize, usize),
    attack: &AttackSpec,
) -> Result<RunOutput<SqpcResult>> {
    run_sqpc_multi_with(cfg, secrets, pair, attack.instantiate()?)
}

pub fn run_sqpc_multi_with(
    cfg: &SqpcConfig,
    secrets: &[Vec<u8>],
    pair: (usize, usize),
    adversary: Adversary,
) -> Result<RunOutput<SqpcResult>> {
    if cfg.users < 3 {
        return Err(invalid("multi-party comparison needs at least 3 users"));
    }
    let refs: Vec<&[u8]> = secrets.iter().map(Vec::as_slice).collect();
    compare(cfg, &refs, pair, adversary)
}

fn compare(
    cfg: &SqpcConfig,
    secrets: &[&[u8]],
    pair: (usize, usize),
    adversary: Adversary,
) -> Result<RunOutput<SqpcResult>> {
    cfg.validate()?;
    if secrets.len() != cfg.users {
        return Err(invalid(format!(
            "expected {} secrets, got {}",
            cfg.users,
            secrets.len()
        )));
    }
    for (l, m) in secrets.iter().enumerate() {
        check_bits(&format!("secret of user {l}"), m, cfg.n)?;
    }
    let (l, g) = pair;
    if l == g || l >= cfg.users || g >= cfg.users {
        return Err(invalid("comparison pair must name two distinct users"));
    }

    let mut s = Session::new(cfg.seed, cfg.users, adversary);
    let plan = Plan {
        slots: vec![KeySlot::Users],
        keyed_users: vec![l, g],
    };
    let keys = match quantum_phase(&mut s, cfg, &plan)? {
        Ok(k) => k,
        Err(reason) => return Ok(s.finish(Err(reason), None)),
    };
    let n = cfg.n as u64;
    let k_users = keys.users_key.as_deref().expect("user key present");

    // each user encrypts with the shared user key and its own TP key
    let mut q = Vec::with_capacity(2);
    for u in [l, g] {
        let c = xor_bits(&[k_users, user_tp_key(&keys, u), secrets[u]])?;
        s.announce(
            PartyId::User(u),
            Payload::Ciphertext {
                to: Some(PartyId::Tp),
                bits: c.clone(),
            },
        );
        s.ledger.b += n;
        q.push(c);
    }
    let r_bits = compute_comparison(&q[0], &q[1], tp_key(&keys, l), tp_key(&keys, g))?;
    let equal = r_bits.iter().all(|&r| r == 0);
    s.announce(PartyId::Tp, Payload::ComparisonVerdict { equal });
    s.ledger.b += 1;
    s.ledger.c += n;
    let verdict = if equal {
        ComparisonVerdict::Equal
    } else {
        ComparisonVerdict::Unequal
    };
    Ok(s.finish(Ok(SqpcResult { verdict, r_bits }), Some(keys)))
}
