//! The classical sub-steps shared by every protocol: sifting, consistency
//! checks, key extraction and the final combinations.

use num_bigint::{BigInt, BigUint};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qsim::{BellOutcome, ZOutcome};
use crate::rng::SimRng;
use crate::roles::PartyAction;

/// Counts for one consistency check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub checked: usize,
    pub errors: usize,
}

impl CheckTally {
    /// 0 when nothing was checked.
    pub fn error_rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.errors as f64 / self.checked as f64
        }
    }

    /// Passes unless the error rate strictly exceeds `threshold`.
    pub fn passes(&self, threshold: f64) -> bool {
        self.error_rate() <= threshold
    }
}

/// Round indices by the users' combined choice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sifted {
    /// Everyone measured (key rounds).
    pub case1: Vec<usize>,
    /// Everyone reflected (honesty check rounds).
    pub case2: Vec<usize>,
    /// Anything else, discarded.
    pub case3: Vec<usize>,
}

/// Two-user sifting.
pub fn sift_cases(actions_a: &[PartyAction], actions_b: &[PartyAction]) -> Result<Sifted> {
    if actions_a.len() != actions_b.len() {
        return Err(invalid("action lists differ in length"));
    }
    let rounds: Vec<Vec<PartyAction>> = actions_a.iter().zip(actions_b).map(|(&a, &b)| vec![a, b]).collect();
    Ok(sift_rounds(&rounds))
}

/// Sifting for any number of users; `rounds[i]` holds every user's action
/// on group `i`.
pub fn sift_rounds(rounds: &[Vec<PartyAction>]) -> Sifted {
    let mut s = Sifted::default();
    for (i, r) in rounds.iter().enumerate() {
        if r.iter().all(|&a| a == PartyAction::Measure) {
            s.case1.push(i);
        } else if r.iter().all(|&a| a == PartyAction::Reflect) {
            s.case2.push(i);
        } else {
            s.case3.push(i);
        }
    }
    s
}

/// Every all-reflect Bell announcement must be `φ⁺`.
pub fn check_reflect_bell(case2: &[BellOutcome], threshold: f64) -> (CheckTally, bool) {
    let tally = CheckTally {
        checked: case2.len(),
        errors: case2.iter().filter(|&&b| b != BellOutcome::PhiPlus).count(),
    };
    (tally, tally.passes(threshold))
}

/// Compares Case-1 outcomes position by position. Mismatches are counted;
/// the first `n` matching outcomes form the key, or `None` when fewer than
/// `n` match.
pub fn derive_pair_key(a: &[ZOutcome], b: &[ZOutcome], n: usize) -> Result<(CheckTally, Option<Vec<u8>>)> {
    if a.len() != b.len() {
        return Err(invalid("outcome lists differ in length"));
    }
    let rounds: Vec<Vec<u8>> = a.iter().zip(b).map(|(x, y)| vec![x.bit(), y.bit()]).collect();
    Ok(derive_group_key(&rounds, n))
}

pub(crate) fn derive_group_key(rounds: &[Vec<u8>], n: usize) -> (CheckTally, Option<Vec<u8>>) {
    let mut key = Vec::with_capacity(n);
    let mut errors = 0;
    for r in rounds {
        if r.iter().all(|&x| x == r[0]) {
            if key.len() < n {
                key.push(r[0]);
            }
        } else {
            errors += 1;
        }
    }
    let tally = CheckTally {
        checked: rounds.len(),
        errors,
    };
    (tally, (key.len() == n).then_some(key))
}

/// One decoy as seen at the end of the quantum phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyRecord {
    pub prepared_bit: u8,
    pub action: PartyAction,
    pub user_outcome: Option<u8>,
    pub tp_outcome: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoyCheck {
    pub reflected: CheckTally,
    pub measured: CheckTally,
    /// Number of measured decoys available before the check subset was drawn.
    pub measured_total: usize,
    /// The user's copy of the TP key.
    pub user_key: Option<Vec<u8>>,
    /// TP's copy of the same key.
    pub tp_key: Option<Vec<u8>>,
}

impl DecoyCheck {
    pub fn passes(&self, threshold: f64) -> bool {
        self.reflected.passes(threshold) && self.measured.passes(threshold)
    }
}

/// Reflected decoys: TP's reading must equal the prepared bit. Measured
/// decoys: the user draws a check subset of size `min(n, measured)`; on those
/// user, TP and prepared bit must agree. The first `n` remaining measured
/// decoys become the key.
pub fn decoy_check_and_key(records: &[DecoyRecord], n: usize, rng: &mut SimRng) -> DecoyCheck {
    let reflected: Vec<&DecoyRecord> = records.iter().filter(|r| r.action == PartyAction::Reflect).collect();
    let measured: Vec<&DecoyRecord> = records.iter().filter(|r| r.action == PartyAction::Measure).collect();
    let reflect_tally = CheckTally {
        checked: reflected.len(),
        errors: reflected.iter().filter(|r| r.tp_outcome != r.prepared_bit).count(),
    };
    let k = n.min(measured.len());
    let mut chosen = vec![false; measured.len()];
    for i in index::sample(rng, measured.len(), k) {
        chosen[i] = true;
    }
    let mut errors = 0;
    let mut user_key = Vec::with_capacity(n);
    let mut tp_key = Vec::with_capacity(n);
    for (r, &is_check) in measured.iter().zip(&chosen) {
        let u = r.user_outcome.unwrap_or(u8::MAX);
        if is_check {
            if !(u == r.tp_outcome && u == r.prepared_bit) {
                errors += 1;
            }
        } else if user_key.len() < n {
            user_key.push(u);
            tp_key.push(r.tp_outcome);
        }
    }
    let complete = user_key.len() == n;
    DecoyCheck {
        reflected: reflect_tally,
        measured: CheckTally { checked: k, errors },
        measured_total: measured.len(),
        user_key: complete.then_some(user_key),
        tp_key: complete.then_some(tp_key),
    }
}

pub(crate) fn xor_into(acc: &mut [u8], other: &[u8]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= b;
    }
}

/// Elementwise XOR of equal-length bit lists.
pub fn xor_bits(lists: &[&[u8]]) -> Result<Vec<u8>> {
    let Some(first) = lists.first() else {
        return Ok(Vec::new());
    };
    if lists.iter().any(|l| l.len() != first.len()) {
        return Err(invalid("bit lists differ in length"));
    }
    let mut out = first.to_vec();
    for l in &lists[1..] {
        xor_into(&mut out, l);
    }
    Ok(out)
}

/// `R = Q_A ⊕ Q_B ⊕ K_TA ⊕ K_TB`.
pub fn compute_comparison(q_a: &[u8], q_b: &[u8], k_ta: &[u8], k_tb: &[u8]) -> Result<Vec<u8>> {
    xor_bits(&[q_a, q_b, k_ta, k_tb])
}

/// `Σ_j k_j 2^(j−1)`: the first bit is least significant.
pub fn bits_to_int(bits: &[u8]) -> BigInt {
    let mut v = BigUint::default();
    for (j, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            v.set_bit(j as u64, true);
        }
    }
    BigInt::from(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use PartyAction::{Measure as M, Reflect as R};

    #[test]
    fn sifting() {
        let s = sift_cases(&[M, R, M, R], &[M, R, R, M]).unwrap();
        assert_eq!(s.case1, vec![0]);
        assert_eq!(s.case2, vec![1]);
        assert_eq!(s.case3, vec![2, 3]);
        assert!(sift_cases(&[M], &[]).is_err());
    }

    #[test]
    fn reflect_check() {
        let (t, ok) = check_reflect_bell(&[BellOutcome::PhiPlus; 5], 0.0);
        assert!(ok && t.error_rate() == 0.0);
        let mut v = vec![BellOutcome::PhiPlus; 99];
        v.push(BellOutcome::PhiMinus);
        let (t, ok) = check_reflect_bell(&v, 0.0);
        assert!(!ok);
        assert_eq!(t.errors, 1);
        assert!(check_reflect_bell(&v, 0.02).1);
    }

    #[test]
    fn pair_key() {
        let z = |v: &[u8]| v.iter().map(|&b| ZOutcome(b)).collect::<Vec<_>>();
        let (t, k) = derive_pair_key(&z(&[0, 1, 1, 0, 1]), &z(&[0, 1, 1, 0, 1]), 3).unwrap();
        assert_eq!(k, Some(vec![0, 1, 1]));
        assert_eq!(t.errors, 0);
        let (t, k) = derive_pair_key(&z(&[0, 1, 1]), &z(&[0, 0, 1]), 2).unwrap();
        assert_eq!((t.errors, k), (1, Some(vec![0, 1])));
        let (_, k) = derive_pair_key(&z(&[0]), &z(&[0]), 2).unwrap();
        assert_eq!(k, None);
    }

    fn rec(prepared_bit: u8, action: PartyAction, user: Option<u8>, tp: u8) -> DecoyRecord {
        DecoyRecord {
            prepared_bit,
            action,
            user_outcome: user,
            tp_outcome: tp,
        }
    }

    #[test]
    fn honest_decoys() {
        let bits = [1, 0, 1, 1, 0, 0, 1, 0];
        let recs: Vec<DecoyRecord> = bits.iter().map(|&b| rec(b, M, Some(b), b)).collect();
        let c = decoy_check_and_key(&recs, 4, &mut seeded(0));
        assert!(c.passes(0.0));
        assert_eq!(c.user_key, c.tp_key);
        assert_eq!(c.user_key.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn decoy_quota_and_errors() {
        let recs = vec![rec(0, R, None, 0); 10];
        let c = decoy_check_and_key(&recs, 2, &mut seeded(0));
        assert_eq!((c.measured_total, c.user_key), (0, None));
        let recs = vec![rec(0, R, None, 1)];
        assert!(!decoy_check_and_key(&recs, 2, &mut seeded(0)).passes(0.0));
    }

    #[test]
    fn comparison_and_ints() {
        assert_eq!(
            compute_comparison(&[0; 4], &[0; 4], &[0; 4], &[0; 4]).unwrap(),
            vec![0; 4]
        );
        assert!(compute_comparison(&[0], &[0, 1], &[0], &[0]).is_err());
        assert_eq!(bits_to_int(&[1, 0, 0]), BigInt::from(1));
        assert_eq!(bits_to_int(&[0; 5]), BigInt::from(0));
        assert_eq!(bits_to_int(&[1, 1, 1, 1]), BigInt::from(15));
        assert_eq!(bits_to_int(&[0, 1]), BigInt::from(2));
    }
}
