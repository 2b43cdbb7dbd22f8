use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;

use super::DetectionStats;
use crate::adversary::AttackSpec;
use crate::error::{invalid, Result};
use crate::protocols::{
    probe_decoy, probe_group, run_sqar, run_sqka, run_sqpc2, run_sqpc_multi, run_sqs, Outcome, Sha256Hash, SqpcConfig,
};
use crate::rng::{role_stream, trial_seed, Role, SimRng};
use crate::roles::PartyAction;

/// What one trial runs. Protocol inputs are drawn from the trial's harness
/// stream; `cfg.seed` is replaced by the trial seed.
#[derive(Debug, Clone)]
pub enum Scenario {
    /// Random secret pairs, half of them forced equal.
    Sqpc2 {
        cfg: SqpcConfig,
    },
    /// Random secrets; users 0 and 1 compared, half forced equal.
    SqpcMulti {
        cfg: SqpcConfig,
    },
    Sqka {
        cfg: SqpcConfig,
    },
    Sqs {
        cfg: SqpcConfig,
    },
    Sqar {
        cfg: SqpcConfig,
        max_value: usize,
    },
    /// One entangled group with fixed actions.
    Group {
        actions: Vec<PartyAction>,
    },
    /// One decoy with a random prepared bit and a fixed action.
    Decoy {
        action: PartyAction,
    },
}

#[derive(Debug, Clone)]
pub struct McScenario {
    pub scenario: Scenario,
    pub attack: AttackSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialClass {
    Clean,
    Detected,
    /// Quota shortfall; excluded from detection statistics.
    Voided,
}

fn classify<R>(o: &Outcome<R>) -> TrialClass {
    if o.is_detection() {
        TrialClass::Detected
    } else if o.is_quota_unmet() {
        TrialClass::Voided
    } else {
        TrialClass::Clean
    }
}

fn random_bits(rng: &mut SimRng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2)).collect()
}

fn pair_secrets(rng: &mut SimRng, n: usize) -> (Vec<u8>, Vec<u8>) {
    let a = random_bits(rng, n);
    let b = if rng.random_bool(0.5) {
        a.clone()
    } else {
        random_bits(rng, n)
    };
    (a, b)
}

/// Runs one trial with session seed `seed`.
pub fn run_trial(sc: &McScenario, seed: u64) -> Result<TrialClass> {
    let mut h = role_stream(seed, Role::Harness);
    let with_seed = |cfg: &SqpcConfig| SqpcConfig { seed, ..cfg.clone() };
    Ok(match &sc.scenario {
        Scenario::Sqpc2 { cfg } => {
            let (a, b) = pair_secrets(&mut h, cfg.n);
            classify(&run_sqpc2(&with_seed(cfg), &a, &b, &sc.attack)?.outcome)
        }
        Scenario::SqpcMulti { cfg } => {
            let (a, b) = pair_secrets(&mut h, cfg.n);
            let mut secrets = vec![a, b];
            secrets.extend((2..cfg.users).map(|_| random_bits(&mut h, cfg.n)));
            classify(&run_sqpc_multi(&with_seed(cfg), &secrets, (0, 1), &sc.attack)?.outcome)
        }
        Scenario::Sqka { cfg } => {
            let (a, b, t) = (
                random_bits(&mut h, cfg.n),
                random_bits(&mut h, cfg.n),
                random_bits(&mut h, cfg.n),
            );
            classify(&run_sqka(&with_seed(cfg), &a, &b, &t, &Sha256Hash, &sc.attack)?.outcome)
        }
        Scenario::Sqs { cfg } => {
            let ma = BigInt::from(h.random_range(-(1i64 << 31)..=(1i64 << 31)));
            let mb = BigInt::from(h.random_range(-(1i64 << 31)..=(1i64 << 31)));
            classify(&run_sqs(&with_seed(cfg), &ma, &mb, &sc.attack)?.outcome)
        }
        Scenario::Sqar { cfg, max_value } => {
            let data: Vec<usize> = (0..cfg.users).map(|_| h.random_range(1..=*max_value)).collect();
            classify(&run_sqar(&with_seed(cfg), &data, *max_value, &sc.attack)?.outcome)
        }
        Scenario::Group { actions } => {
            if probe_group(actions, sc.attack.instantiate()?, seed)?.detected {
                TrialClass::Detected
            } else {
                TrialClass::Clean
            }
        }
        Scenario::Decoy { action } => {
            let bit = h.random_range(0..2);
            if probe_decoy(bit, *action, sc.attack.instantiate()?, seed)?.detected {
                TrialClass::Detected
            } else {
                TrialClass::Clean
            }
        }
    })
}

/// Independent trials in parallel; trial `t` runs with
/// `trial_seed(master_seed, t)`, so results do not depend on scheduling.
pub fn monte_carlo(sc: &McScenario, trials: u64, master_seed: u64) -> Result<DetectionStats> {
    if trials == 0 {
        return Err(invalid("monte carlo needs at least one trial"));
    }
    let classes = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(sc, trial_seed(master_seed, t)))
        .collect::<Result<Vec<_>>>()?;
    let count = |c: TrialClass| classes.iter().filter(|&&x| x == c).count() as u64;
    let voided = count(TrialClass::Voided);
    Ok(DetectionStats::from_counts(
        trials - voided,
        count(TrialClass::Detected),
        voided,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AttackKind;

    #[test]
    fn honest_group_never_detected() {
        let sc = McScenario {
            scenario: Scenario::Group {
                actions: vec![PartyAction::Reflect; 2],
            },
            attack: AttackSpec::honest(),
        };
        let s = monte_carlo(&sc, 500, 1).unwrap();
        assert_eq!((s.trials, s.detections), (500, 0));
    }

    #[test]
    fn reproducible() {
        let sc = McScenario {
            scenario: Scenario::Sqpc2 {
                cfg: SqpcConfig::new(2, 2, 0),
            },
            attack: AttackSpec::new(AttackKind::MeasureResend),
        };
        assert_eq!(monte_carlo(&sc, 64, 9).unwrap(), monte_carlo(&sc, 64, 9).unwrap());
        assert!(monte_carlo(&sc, 0, 9).is_err());
    }
}
