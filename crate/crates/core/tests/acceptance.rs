//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;
use rayon::prelude::*;

use semiq::adversary::{AttackKind, AttackSpec, GroupOutcome};
use semiq::metrics::{efficiency_sqka, efficiency_sqpc2, monte_carlo, theorem1_check, McScenario, Scenario};
use semiq::protocols::{
    compute_comparison, probe_decoy, probe_group, run_sqar, run_sqka, run_sqpc2, run_sqs, ComparisonVerdict,
    PrefixHash, Sha256Hash, SqpcConfig,
};
use semiq::qsim::{BellOutcome, Unitary};
use semiq::rng::{role_stream, seeded, trial_seed, Role};
use semiq::roles::{AbortReason, PartyAction};

use PartyAction::{Measure as M, Reflect as R};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2)).collect()
}

fn binom_tail(trials: u64, p: f64, at_least: u64) -> f64 {
    // exact sum of the binomial pmf, via log-gamma-free running product
    let mut pmf = (1.0 - p).powi(trials as i32);
    let mut tail = 0.0;
    for k in 0..=trials {
        if k >= at_least {
            tail += pmf;
        }
        pmf *= (trials - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    tail
}

fn c1_sqpc2_correctness() -> Verdict {
    let t0 = Instant::now();
    let n = 8;
    let runs = 1000u64;
    let results: Vec<(bool, Option<AbortReason>)> = (0..runs)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(101, t);
            let mut h = role_stream(seed, Role::Harness);
            let a = bits(&mut h, n);
            let b = if h.random_bool(0.5) { a.clone() } else { bits(&mut h, n) };
            let out = run_sqpc2(&SqpcConfig::new(n, 2, seed), &a, &b, &AttackSpec::honest()).unwrap();
            let ok = match out.outcome.result() {
                Some(r) => (r.verdict == ComparisonVerdict::Equal) == (a == b),
                None => true,
            };
            (ok, out.outcome.abort_reason().cloned())
        })
        .collect();
    let elapsed = t0.elapsed();
    let wrong = results.iter().filter(|r| !r.0).count();
    let detections = results
        .iter()
        .filter(|r| r.1.as_ref().is_some_and(|a| a.is_detection()))
        .count();
    let quota = results
        .iter()
        .filter(|r| matches!(r.1, Some(AbortReason::QuotaUnmet { .. })))
        .count();
    // 4n pairs, both measure w.p. 1/4, need n; 4n decoys per user, measured w.p. 1/2, need 2n
    let keep = binom_tail(32, 0.25, 8) * binom_tail(32, 0.5, 16).powi(2);
    let p = 1.0 - keep;
    let sigma = (p * (1.0 - p) / runs as f64).sqrt();
    let observed = quota as f64 / runs as f64;
    verdict(
        wrong == 0 && detections == 0 && (observed - p).abs() <= 3.0 * sigma && elapsed < Duration::from_secs(30),
        format!(
            "{} completed, {wrong} wrong verdicts, {detections} false detections; quota-unmet {observed:.4} vs exact {p:.4} (3σ = {:.4}); {:.1?}",
            runs as usize - quota - detections,
            3.0 * sigma,
            elapsed
        ),
    )
}

fn c2_comparison_algebra() -> Verdict {
    let mut runner = TestRunner::new(Config {
        cases: 100_000,
        failure_persistence: None,
        ..Config::default()
    });
    let strat = (1usize..=32).prop_flat_map(|n| {
        let v = || proptest::collection::vec(0u8..2, n);
        (v(), v(), v(), v(), v())
    });
    let res = runner.run(&strat, |(kab, ka, kb, ma, mb)| {
        // users encrypt with the shared key and their own TP key
        let qa: Vec<u8> = (0..ma.len()).map(|i| kab[i] ^ ka[i] ^ ma[i]).collect();
        let qb: Vec<u8> = (0..mb.len()).map(|i| kab[i] ^ kb[i] ^ mb[i]).collect();
        let r = compute_comparison(&qa, &qb, &ka, &kb).unwrap();
        let expect: Vec<u8> = ma.iter().zip(&mb).map(|(x, y)| (x + y) % 2).collect();
        prop_assert_eq!(r, expect);
        Ok(())
    });
    verdict(
        res.is_ok(),
        format!(
            "100000 random tuples: {}",
            if res.is_ok() {
                "all equal m_A xor m_B".into()
            } else {
                format!("{res:?}")
            }
        ),
    )
}

fn group_mc(actions: Vec<PartyAction>, kind: AttackKind, trials: u64, seed: u64) -> f64 {
    let sc = McScenario {
        scenario: Scenario::Group { actions },
        attack: AttackSpec::new(kind),
    };
    monte_carlo(&sc, trials, seed).unwrap().rate
}

fn c3_measure_resend() -> Verdict {
    let t0 = Instant::now();
    let rate = group_mc(vec![R, R], AttackKind::MeasureResend, 10_000, 303);
    let elapsed = t0.elapsed();
    verdict(
        (0.48..=0.52).contains(&rate) && elapsed < Duration::from_secs(10),
        format!("both-reflect pair, 10000 trials: rate {rate:.4}; {elapsed:.1?}"),
    )
}

fn c4_adversarial_tp() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, kind) in [
        ("z-basis", AttackKind::TpZBasisAttack),
        ("fake-particles", AttackKind::TpFakeParticles),
    ] {
        let single = group_mc(vec![R, R], kind.clone(), 10_000, 404);
        let sc = McScenario {
            scenario: Scenario::Sqpc2 {
                cfg: SqpcConfig::new(8, 2, 0),
            },
            attack: AttackSpec::new(kind),
        };
        let full = monte_carlo(&sc, 2000, 405).unwrap();
        pass &= (0.48..=0.52).contains(&single) && full.rate > 0.99;
        parts.push(format!(
            "{name}: pair {single:.4}, full n=8 {:.4} ({} voided by quota; {:.4} counting those as misses)",
            full.rate,
            full.voided,
            full.unconditional_rate()
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c5_double_cnot() -> Verdict {
    let spec = AttackSpec::new(AttackKind::DoubleCnot);
    let mut nonzero = 0usize;
    let mut total = 0usize;
    for action in [M, R] {
        for case in 0..3 {
            for t in 0..1000u64 {
                let seed = trial_seed(500 + case, t);
                let probes = match case {
                    0 | 1 => {
                        probe_decoy(case as u8, action, spec.instantiate().unwrap(), seed)
                            .unwrap()
                            .probes
                    }
                    _ => {
                        probe_group(&[action, action], spec.instantiate().unwrap(), seed)
                            .unwrap()
                            .probes
                    }
                };
                for p in probes {
                    total += p.outcomes.len();
                    nonzero += p.outcomes.iter().filter(|&&z| z != 0).count();
                }
            }
        }
    }
    verdict(
        nonzero == 0 && total > 0,
        format!("{total} probe readings over 6x1000 trials, {nonzero} non-zero"),
    )
}

fn c6_theorem1() -> Verdict {
    let id = Unitary::identity(2);
    let base = theorem1_check(&id, &id, 10_000, 600).unwrap();
    let mut pass = base.detection_rate == 0.0 && base.max_probe_trace_distance < 1e-9;
    let mut rng = seeded(601);
    let pairs: Vec<(Unitary, Unitary)> = (0..50)
        .map(|_| (Unitary::haar_random(2, &mut rng), Unitary::haar_random(2, &mut rng)))
        .collect();
    let reports: Vec<_> = pairs
        .iter()
        .enumerate()
        .map(|(i, (ue, uf))| theorem1_check(ue, uf, 10_000, 602 + i as u64).unwrap())
        .collect();
    let mut zero_rate = 0;
    let mut far = 0;
    for r in &reports {
        if r.detection_rate == 0.0 {
            zero_rate += 1;
            pass &= r.max_probe_trace_distance < 1e-6;
        }
        if r.max_probe_trace_distance > 0.1 {
            far += 1;
            pass &= r.decoy.detections + r.bell_reflect.detections + r.bell_measure.detections >= 1;
        }
    }
    let min_rate = reports.iter().map(|r| r.detection_rate).fold(1.0, f64::min);
    verdict(
        pass,
        format!(
            "identity: rate {}, distance {:.1e}; 50 random pairs: {zero_rate} undetected, {far} with distance > 0.1, lowest rate {min_rate:.4}",
            base.detection_rate, base.max_probe_trace_distance
        ),
    )
}

fn c7_intercept_resend() -> Verdict {
    let spec = AttackSpec::new(AttackKind::InterceptResend);
    let mut not_plus = 0;
    for t in 0..1000u64 {
        let acts = if t % 2 == 0 { [M, M] } else { [R, R] };
        let p = probe_group(&acts, spec.instantiate().unwrap(), trial_seed(700, t)).unwrap();
        if p.announced != GroupOutcome::Bell(BellOutcome::PhiPlus) {
            not_plus += 1;
        }
    }
    let mut minus = 0;
    for t in 0..1000u64 {
        let p = probe_group(&[M, M], AttackSpec::honest().instantiate().unwrap(), trial_seed(701, t)).unwrap();
        if p.announced == GroupOutcome::Bell(BellOutcome::PhiMinus) {
            minus += 1;
        }
    }
    let honest_minus = minus as f64 / 1000.0;
    let sc = McScenario {
        scenario: Scenario::Decoy { action: M },
        attack: spec,
    };
    let decoy = monte_carlo(&sc, 10_000, 702).unwrap().rate;
    verdict(
        not_plus == 0 && (honest_minus - 0.5).abs() <= 0.05 && (decoy - 0.5).abs() <= 0.02,
        format!(
            "attacked: {not_plus}/1000 announcements other than phi+; honest case-1 phi- {honest_minus:.3}; measured-decoy detection {decoy:.4}"
        ),
    )
}

fn c8_sqs() -> Verdict {
    let lim = 1i64 << 31;
    let results: Vec<Option<bool>> = (0..1000u64)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(800, t);
            let mut h = role_stream(seed, Role::Harness);
            let (ma, mb) = match t {
                0 => (lim, lim),
                1 => (-lim, -lim),
                2 => (lim, -lim),
                _ => (h.random_range(-lim..=lim), h.random_range(-lim..=lim)),
            };
            let cfg = SqpcConfig::new(8, 2, seed).with_oversample(3.0);
            let out = run_sqs(&cfg, &BigInt::from(ma), &BigInt::from(mb), &AttackSpec::honest()).unwrap();
            out.outcome.result().map(|r| {
                let kab = semiq::protocols::bits_to_int(out.keys.as_ref().unwrap().users_key.as_ref().unwrap());
                let view = serde_json::to_value(&r.tp_view).unwrap();
                let mut fields: Vec<&String> = view.as_object().unwrap().keys().collect();
                fields.sort();
                r.sum == BigInt::from(ma) + BigInt::from(mb)
                    && fields == ["kta", "ktb", "qa", "qb", "rt"]
                    && &r.tp_view.rt - &r.sum == BigInt::from(2) * kab
            })
        })
        .collect();
    let done = results.iter().flatten().count();
    let good = results.iter().flatten().filter(|&&b| b).count();
    verdict(
        done > 900 && good == done,
        format!("{done}/1000 completed, {good} exact sums; TP view holds only QA, QB, KTA, KTB, RT"),
    )
}

fn competition_ranks(data: &[usize]) -> Vec<usize> {
    data.iter()
        .map(|&v| 1 + data.iter().filter(|&&w| w < v).count())
        .collect()
}

fn c9_sqar() -> Verdict {
    let cfg = SqpcConfig::new(4, 3, 900).with_oversample(4.0);
    let out = run_sqar(&cfg, &[1, 2, 3], 3, &AttackSpec::honest()).unwrap();
    let example = out
        .outcome
        .result()
        .is_some_and(|r| r.histogram == [1, 1, 1] && r.ranks.values().copied().collect::<Vec<_>>() == [1, 2, 3]);
    let results: Vec<Option<bool>> = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(901, t);
            let mut h = role_stream(seed, Role::Harness);
            let users = 3 + (t % 3) as usize;
            let data: Vec<usize> = (0..users).map(|_| h.random_range(1..=10)).collect();
            let cfg = SqpcConfig::new(4, users, seed).with_oversample(4.0);
            let out = run_sqar(&cfg, &data, 10, &AttackSpec::honest()).unwrap();
            out.outcome
                .result()
                .map(|r| r.ranks.values().copied().collect::<Vec<_>>() == competition_ranks(&data))
        })
        .collect();
    let done = results.iter().flatten().count();
    let good = results.iter().flatten().filter(|&&b| b).count();
    verdict(
        example && done > 150 && good == done,
        format!(
            "example (1,2,3): {}; random: {good}/{done} completed runs match sorted ranks",
            if example {
                "histogram (1,1,1), ranks (1,2,3)"
            } else {
                "MISMATCH"
            }
        ),
    )
}

fn c10_sqka() -> Verdict {
    let n = 8;
    let honest: Vec<Option<bool>> = (0..200u64)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(1000, t);
            let mut h = role_stream(seed, Role::Harness);
            let (a, b, c) = (bits(&mut h, n), bits(&mut h, n), bits(&mut h, n));
            let want: Vec<u8> = (0..n).map(|i| a[i] ^ b[i] ^ c[i]).collect();
            let cfg = SqpcConfig::new(n, 2, seed).with_oversample(3.0);
            let out = run_sqka(&cfg, &a, &b, &c, &Sha256Hash, &AttackSpec::honest()).unwrap();
            out.outcome
                .result()
                .map(|r| r.all_accept() && r.agreed_key() == Some(&want[..]))
        })
        .collect();
    let done = honest.iter().flatten().count();
    let agreed = honest.iter().flatten().filter(|&&b| b).count();

    let attempt = |t: u64, weak: bool| -> Option<bool> {
        let seed = trial_seed(1001, t);
        let mut h = role_stream(seed, Role::Harness);
        let (a, b, c) = (bits(&mut h, n), bits(&mut h, n), bits(&mut h, n));
        let mut target: Vec<u8> = (0..n).map(|i| a[i] ^ b[i] ^ c[i]).collect();
        // flip a bit past the weak hash's prefix, so its digest collides
        let i = if weak {
            h.random_range(4..n)
        } else {
            h.random_range(0..n)
        };
        target[i] ^= 1;
        let spec = AttackSpec::new(AttackKind::DishonestUserKeyForcing {
            target_key: target.clone(),
        });
        let cfg = SqpcConfig::new(n, 2, seed).with_oversample(3.0);
        let out = if weak {
            run_sqka(&cfg, &a, &b, &c, &PrefixHash { len: 4 }, &spec)
        } else {
            run_sqka(&cfg, &a, &b, &c, &Sha256Hash, &spec)
        }
        .unwrap();
        out.outcome
            .result()
            .map(|r| r.all_accept() && r.agreed_key() == Some(&target[..]))
    };
    let strong: Vec<Option<bool>> = (0..200u64).into_par_iter().map(|t| attempt(t, false)).collect();
    let weak: Vec<Option<bool>> = (0..200u64).into_par_iter().map(|t| attempt(t, true)).collect();
    let strong_done = strong.iter().flatten().count();
    let forced = strong.iter().flatten().filter(|&&b| b).count();
    let weak_done = weak.iter().flatten().count();
    let weak_forced = weak.iter().flatten().filter(|&&b| b).count();
    verdict(
        done > 150 && agreed == done && strong_done > 150 && forced == 0 && weak_done > 150 && weak_forced == weak_done,
        format!(
            "honest {agreed}/{done} agree; forcing vs sha-256 succeeded {forced}/{strong_done}; vs prefix hash {weak_forced}/{weak_done}"
        ),
    )
}

fn c11_efficiency() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1u64, 8, 10, 100] {
        let r = efficiency_sqpc2(n as usize).unwrap();
        // independent closed form from the ledger counts
        let expect = Ratio::new(n, 26 * n + 1);
        pass &= r.formula_eta == expect && r.eta == expect && (r.c, r.q, r.b) == (n, 24 * n, 2 * n + 1);
        parts.push(format!("n={n}: {}/{}", r.eta.numer(), r.eta.denom()));
    }
    let k = efficiency_sqka().unwrap();
    pass &= k.eta == Ratio::new(1, 36) && k.formula_eta == Ratio::new(1, 36);
    parts.push(format!(
        "key agreement {}/{} (c={}, q={}, b={})",
        k.eta.numer(),
        k.eta.denom(),
        k.c,
        k.q,
        k.b
    ));
    verdict(pass, parts.join(", "))
}

fn c12_determinism() -> Verdict {
    let run = || -> Vec<String> {
        let cfg = SqpcConfig::new(4, 2, 1200).with_oversample(3.0);
        let mr = AttackSpec::new(AttackKind::MeasureResend);
        let mut out = vec![
            serde_json::to_string(&run_sqpc2(&cfg, &[1, 0, 1, 1], &[1, 0, 1, 1], &AttackSpec::honest()).unwrap())
                .unwrap(),
            serde_json::to_string(&run_sqpc2(&cfg, &[1, 0, 1, 1], &[0, 0, 1, 1], &mr).unwrap()).unwrap(),
            serde_json::to_string(&run_sqs(&cfg, &BigInt::from(-9), &BigInt::from(4), &AttackSpec::honest()).unwrap())
                .unwrap(),
            serde_json::to_string(
                &run_sqar(
                    &SqpcConfig::new(2, 3, 1201).with_oversample(3.0),
                    &[2, 1, 2],
                    3,
                    &AttackSpec::honest(),
                )
                .unwrap(),
            )
            .unwrap(),
        ];
        let sc = McScenario {
            scenario: Scenario::Sqpc2 { cfg: cfg.clone() },
            attack: mr,
        };
        out.push(serde_json::to_string(&monte_carlo(&sc, 200, 1202).unwrap()).unwrap());
        out
    };
    let (a, b) = (run(), run());
    verdict(
        a == b,
        format!("{} reports re-run, byte-identical: {}", a.len(), a == b),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("comparison correctness and quota shortfall", c1_sqpc2_correctness),
        ("comparison algebra", c2_comparison_algebra),
        ("measure-resend detection", c3_measure_resend),
        ("adversarial TP detection", c4_adversarial_tp),
        ("double-CNOT probe nullity", c5_double_cnot),
        ("entangle-measure probe independence", c6_theorem1),
        ("intercept-resend signature", c7_intercept_resend),
        ("summation", c8_sqs),
        ("anonymous ranking", c9_sqar),
        ("key agreement", c10_sqka),
        ("qubit efficiency", c11_efficiency),
        ("determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({name}): {} [{:.1?}]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            t0.elapsed()
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
