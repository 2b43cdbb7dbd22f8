use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackSpec;
use crate::error::{invalid, Result};
use crate::protocols::{run_sqka, run_sqpc2, ResourceLedger, RunOutput, Sha256Hash, SqpcConfig};
use crate::roles::{ActionPolicy, OriginTag, PartyAction};

/// Measured ledger of an honest run next to the closed-form efficiency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub n: usize,
    pub c: u64,
    pub q: u64,
    pub b: u64,
    #[serde(with = "ratio_string")]
    pub eta: Ratio<u64>,
    #[serde(with = "ratio_string")]
    pub formula_eta: Ratio<u64>,
}

impl EfficiencyReport {
    fn new(n: usize, ledger: ResourceLedger, formula_eta: Ratio<u64>) -> Self {
        Self {
            n,
            c: ledger.c,
            q: ledger.q,
            b: ledger.b,
            eta: Ratio::new(ledger.c, ledger.q + ledger.b),
            formula_eta,
        }
    }

    pub fn matches_formula(&self) -> bool {
        self.eta == self.formula_eta
    }
}

mod ratio_string {
    use num_rational::Ratio;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        let s = String::deserialize(d)?;
        let (a, b) = s.split_once('/').ok_or_else(|| D::Error::custom("expected n/d"))?;
        let a: u64 = a.trim().parse().map_err(D::Error::custom)?;
        let b: u64 = b.trim().parse().map_err(D::Error::custom)?;
        if b == 0 {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(Ratio::new(a, b))
    }
}

/// Deterministic two-user policy that hits the nominal counts exactly with
/// `4n` Bell pairs and `4n` decoys each: user 0 measures pairs `[0, 2n)`,
/// user 1 measures `[n, 3n)`, so `n` pairs are measured by both; each user
/// measures the first `2n` of its decoys.
pub fn balanced_policy(n: usize) -> ActionPolicy {
    ActionPolicy::scripted(move |origin| {
        let measure = match *origin {
            OriginTag::EntangledGroup { group, slot } => match slot {
                0 => group < 2 * n,
                _ => (n..3 * n).contains(&group),
            },
            OriginTag::Decoy { position, .. } => position < 2 * n,
        };
        if measure {
            PartyAction::Measure
        } else {
            PartyAction::Reflect
        }
    })
}

fn honest_ledger<R>(out: RunOutput<R>) -> Result<ResourceLedger> {
    match out.outcome.abort_reason() {
        None => Ok(out.ledger),
        Some(r) => Err(invalid(format!("honest accounting run aborted: {r:?}"))),
    }
}

fn pattern(n: usize, phase: usize) -> Vec<u8> {
    (0..n).map(|i| ((i + phase) % 3 == 0) as u8).collect()
}

/// Two-party comparison: closed form `n/(26n+1)`.
pub fn efficiency_sqpc2(n: usize) -> Result<EfficiencyReport> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let cfg = SqpcConfig::new(n, 2, 0).with_policy(balanced_policy(n));
    let ledger = honest_ledger(run_sqpc2(&cfg, &pattern(n, 0), &pattern(n, 1), &AttackSpec::honest())?)?;
    let n64 = n as u64;
    Ok(EfficiencyReport::new(n, ledger, Ratio::new(n64, 26 * n64 + 1)))
}

/// Key agreement at the reference length `n = 8`: closed form `1/36`.
pub fn efficiency_sqka() -> Result<EfficiencyReport> {
    efficiency_sqka_with(8)
}

pub fn efficiency_sqka_with(n: usize) -> Result<EfficiencyReport> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let cfg = SqpcConfig::new(n, 2, 0).with_policy(balanced_policy(n));
    let out = run_sqka(
        &cfg,
        &pattern(n, 0),
        &pattern(n, 1),
        &pattern(n, 2),
        &Sha256Hash,
        &AttackSpec::honest(),
    )?;
    Ok(EfficiencyReport::new(n, honest_ledger(out)?, Ratio::new(1, 36)))
}

/// Published comparison figures for earlier comparison schemes; static data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorSqpcScheme {
    pub label: String,
    /// `k` in `n/(k·n+1)`.
    pub qubits_per_bit: u64,
    pub pre_shared_keys: bool,
    pub multi_party: bool,
}

impl PriorSqpcScheme {
    pub fn eta(&self, n: u64) -> Ratio<u64> {
        Ratio::new(n, self.qubits_per_bit * n + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorSqkaScheme {
    pub label: String,
    #[serde(with = "ratio_string")]
    pub eta: Ratio<u64>,
    pub users: usize,
    pub multi_party: bool,
}

pub fn prior_sqpc_schemes() -> Vec<PriorSqpcScheme> {
    [
        (102, true, false),
        (60, true, false),
        (52, false, false),
        (53, true, false),
        (18, false, true),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (k, pre, multi))| PriorSqpcScheme {
        label: format!("prior-{}", i + 1),
        qubits_per_bit: k,
        pre_shared_keys: pre,
        multi_party: multi,
    })
    .collect()
}

pub fn prior_sqka_schemes() -> Vec<PriorSqkaScheme> {
    [(10, 2, false), (15, 2, false), (48, 3, false), (38, 3, true)]
        .into_iter()
        .enumerate()
        .map(|(i, (d, users, multi))| PriorSqkaScheme {
            label: format!("prior-{}", i + 1),
            eta: Ratio::new(1, d),
            users,
            multi_party: multi,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqpc_ledger_matches_closed_form() {
        for n in [1, 3, 8] {
            let r = efficiency_sqpc2(n).unwrap();
            let n = n as u64;
            assert_eq!((r.c, r.q, r.b), (n, 24 * n, 2 * n + 1));
            assert!(r.matches_formula());
        }
    }

    #[test]
    fn sqka_ledger() {
        let r = efficiency_sqka().unwrap();
        assert_eq!((r.c, r.q, r.b), (8, 192, 96));
        assert_eq!(r.eta, Ratio::new(1, 36));
    }

    #[test]
    fn ratio_serializes_as_fraction() {
        let r = efficiency_sqpc2(2).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["eta"], "2/53");
        let back: EfficiencyReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
