use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ops::xor_bits;
use super::session::{quantum_phase, tp_key, user_tp_key, KeySlot, Plan, Session};
use super::sqpc::check_bits;
use super::{RunOutput, SqpcConfig};
use crate::adversary::{Adversary, AttackSpec};
use crate::error::{invalid, Result};
use crate::roles::{PartyId, Payload};

/// Commitment hash over a bit list.
pub trait KeyHash: Send + Sync {
    fn digest(&self, bits: &[u8]) -> Vec<u8>;
}

/// SHA-256 over one byte per bit.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sha256Hash;

impl KeyHash for Sha256Hash {
    fn digest(&self, bits: &[u8]) -> Vec<u8> {
        Sha256::digest(bits).to_vec()
    }
}

/// Deliberately broken hash: the first `len` bits, verbatim. Any two inputs
/// sharing that prefix collide.
#[derive(Debug, Clone, Copy)]
pub struct PrefixHash {
    pub len: usize,
}

impl KeyHash for PrefixHash {
    fn digest(&self, bits: &[u8]) -> Vec<u8> {
        bits.iter().take(self.len).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyKey {
    pub party: PartyId,
    pub accept: bool,
    pub final_key: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqkaResult {
    /// Alice, Bob, TP in that order.
    pub parties: Vec<PartyKey>,
}

impl SqkaResult {
    pub fn all_accept(&self) -> bool {
        self.parties.iter().all(|p| p.accept)
    }

    /// The common key when every party accepted the same value.
    pub fn agreed_key(&self) -> Option<&[u8]> {
        let first = self.parties.first()?.final_key.as_deref()?;
        self.parties
            .iter()
            .all(|p| p.accept && p.final_key.as_deref() == Some(first))
            .then_some(first)
    }

    pub fn party(&self, id: PartyId) -> Option<&PartyKey> {
        self.parties.iter().find(|p| p.party == id)
    }
}

const A: PartyId = PartyId::User(0);
const B: PartyId = PartyId::User(1);
const T: PartyId = PartyId::Tp;
const PARTIES: [PartyId; 3] = [A, B, T];

fn idx(p: PartyId) -> usize {
    PARTIES.iter().position(|&x| x == p).expect("SQKA party")
}

fn subject(from: PartyId, to: PartyId) -> String {
    format!("Q[{from}->{to}]")
}

/// Three-party key agreement (Alice, Bob, TP) with hash commitments before
/// the ciphertext reveal.
pub fn run_sqka(
    cfg: &SqpcConfig,
    m_a: &[u8],
    m_b: &[u8],
    m_t: &[u8],
    hash: &dyn KeyHash,
    attack: &AttackSpec,
) -> Result<RunOutput<SqkaResult>> {
    run_sqka_with(cfg, m_a, m_b, m_t, hash, attack.instantiate()?)
}

pub fn run_sqka_with(
    cfg: &SqpcConfig,
    m_a: &[u8],
    m_b: &[u8],
    m_t: &[u8],
    hash: &dyn KeyHash,
    mut adversary: Adversary,
) -> Result<RunOutput<SqkaResult>> {
    cfg.validate()?;
    if cfg.users != 2 {
        return Err(invalid("key agreement runs with exactly 2 classical users"));
    }
    let n = cfg.n;
    check_bits("m_a", m_a, n)?;
    check_bits("m_b", m_b, n)?;
    check_bits("m_t", m_t, n)?;
    let insider = adversary.insider.take();
    if let Some(k) = &insider {
        check_bits("target key", &k.target_key, n)?;
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
    let k_ab = keys.users_key.clone().expect("user key present");
    // pairwise key as held by (sender, recipient); TP uses its own copies
    let key_of = |from: PartyId, to: PartyId| -> Vec<u8> {
        match (from, to) {
            (PartyId::User(_), PartyId::User(_)) => k_ab.clone(),
            (PartyId::User(u), PartyId::Tp) => user_tp_key(&keys, u).to_vec(),
            (PartyId::Tp, PartyId::User(u)) => tp_key(&keys, u).to_vec(),
            _ => unreachable!("no TP-TP or Eve keys"),
        }
    };
    let secrets = [m_a, m_b, m_t];
    let links: Vec<(PartyId, PartyId)> = PARTIES
        .iter()
        .flat_map(|&f| PARTIES.iter().filter(move |&&t| t != f).map(move |&t| (f, t)))
        .collect();

    // honest ciphertexts and their commitments
    let mut honest = Vec::with_capacity(links.len());
    for &(from, to) in &links {
        let c = xor_bits(&[secrets[idx(from)], &key_of(from, to)])?;
        s.announce(
            from,
            Payload::HashValue {
                to,
                subject: subject(from, to),
                digest: hex::encode(hash.digest(&c)),
            },
        );
        s.ledger.b += n as u64;
        honest.push(((from, to), c));
    }
    let committed: Vec<Vec<u8>> = honest.iter().map(|(_, c)| hash.digest(c)).collect();

    // reveal; a cheating Alice waits for the others first
    let mut revealed: Vec<Option<Vec<u8>>> = vec![None; links.len()];
    let order: Vec<PartyId> = if insider.is_some() {
        vec![B, T, A]
    } else {
        PARTIES.to_vec()
    };
    for sender in order {
        for (i, ((from, to), c)) in honest.iter().enumerate() {
            if *from != sender {
                continue;
            }
            let bits = match (&insider, sender) {
                (Some(forcing), PartyId::User(0)) => {
                    // Q* = K* ⊕ m_B ⊕ m_T ⊕ K, with m_B, m_T decrypted from the reveals
                    let from_b = revealed[link_index(&links, B, A)].as_ref().expect("Bob revealed");
                    let from_t = revealed[link_index(&links, T, A)].as_ref().expect("TP revealed");
                    let mb = xor_bits(&[from_b, &key_of(A, B)])?;
                    let mt = xor_bits(&[from_t, &key_of(A, T)])?;
                    xor_bits(&[&forcing.target_key, &mb, &mt, &key_of(A, *to)])?
                }
                _ => c.clone(),
            };
            s.announce(
                *from,
                Payload::Ciphertext {
                    to: Some(*to),
                    bits: bits.clone(),
                },
            );
            s.ledger.b += n as u64;
            revealed[i] = Some(bits);
        }
    }

    // verify commitments, decrypt, combine
    let mut parties = Vec::with_capacity(3);
    for &me in &PARTIES {
        if me == A {
            if let Some(forcing) = &insider {
                parties.push(PartyKey {
                    party: me,
                    accept: true,
                    final_key: Some(forcing.target_key.clone()),
                });
                continue;
            }
        }
        let mut accept = true;
        let mut key = secrets[idx(me)].to_vec();
        for (i, &(from, to)) in links.iter().enumerate() {
            if to != me {
                continue;
            }
            let c = revealed[i].as_ref().expect("all ciphertexts revealed");
            if hash.digest(c) != committed[i] {
                accept = false;
                continue;
            }
            let m = xor_bits(&[c, &key_of(to, from)])?;
            key = xor_bits(&[&key, &m])?;
        }
        parties.push(PartyKey {
            party: me,
            accept,
            final_key: accept.then_some(key),
        });
    }
    s.ledger.c += n as u64;
    Ok(s.finish(Ok(SqkaResult { parties }), Some(keys)))
}

fn link_index(links: &[(PartyId, PartyId)], from: PartyId, to: PartyId) -> usize {
    links.iter().position(|&l| l == (from, to)).expect("link exists")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AttackKind;

    fn cfg(seed: u64) -> SqpcConfig {
        SqpcConfig::new(4, 2, seed).with_oversample(4.0)
    }

    #[test]
    fn honest_agreement() {
        let (a, b, t) = ([1, 0, 1, 0], [1, 1, 0, 0], [0, 0, 0, 1]);
        let out = run_sqka(&cfg(1), &a, &b, &t, &Sha256Hash, &AttackSpec::honest()).unwrap();
        let r = out.outcome.result().unwrap();
        assert!(r.all_accept());
        assert_eq!(r.agreed_key(), Some(&[0, 1, 1, 1][..]));
        assert_eq!(out.ledger.b, 12 * 4);
    }

    #[test]
    fn forcing_rejected_by_sha256() {
        let target = vec![1, 1, 1, 1];
        let spec = AttackSpec::new(AttackKind::DishonestUserKeyForcing { target_key: target });
        let out = run_sqka(&cfg(2), &[0; 4], &[1, 0, 0, 0], &[0; 4], &Sha256Hash, &spec).unwrap();
        let r = out.outcome.result().unwrap();
        assert!(!r.party(B).unwrap().accept);
        assert!(!r.party(T).unwrap().accept);
    }

    #[test]
    fn forcing_succeeds_against_prefix_hash() {
        let (a, b, t) = ([1, 0, 1, 0], [0, 1, 1, 0], [1, 1, 0, 0]);
        let honest = xor_bits(&[&a, &b, &t]).unwrap();
        let mut target = honest.clone();
        target[3] ^= 1;
        let spec = AttackSpec::new(AttackKind::DishonestUserKeyForcing {
            target_key: target.clone(),
        });
        let out = run_sqka(&cfg(3), &a, &b, &t, &PrefixHash { len: 3 }, &spec).unwrap();
        let r = out.outcome.result().unwrap();
        assert_eq!(r.agreed_key(), Some(&target[..]));
    }

    #[test]
    fn vacuous_forcing_is_accepted() {
        let (a, b, t) = ([1, 0, 1, 0], [0, 1, 1, 0], [1, 1, 0, 0]);
        let honest = xor_bits(&[&a, &b, &t]).unwrap();
        let spec = AttackSpec::new(AttackKind::DishonestUserKeyForcing {
            target_key: honest.clone(),
        });
        let out = run_sqka(&cfg(4), &a, &b, &t, &Sha256Hash, &spec).unwrap();
        assert_eq!(out.outcome.result().unwrap().agreed_key(), Some(&honest[..]));
    }
}
