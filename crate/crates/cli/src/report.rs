use num_bigint::BigInt;
use rand::Rng;
use semiq::metrics::{
    efficiency_sqka_with, efficiency_sqpc2, monte_carlo, DetectionStats, EfficiencyReport, McScenario, Scenario,
};
use semiq::protocols::{
    run_sqar, run_sqka, run_sqpc2, run_sqpc_multi, run_sqs, KeyHash, PrefixHash, ResourceLedger, RunOutput, Sha256Hash,
};
use semiq::rng::{role_stream, Role};
use semiq::roles::SessionTranscript;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{HashChoice, ProtocolName, RawConfig, ScenarioConfig, Secrets, SCHEMA_VERSION};

/// Transcripts longer than this many events are dropped even with
/// `--transcript`.
pub const TRANSCRIPT_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RawConfig,
    /// Effective seed (after any command-line override).
    pub seed: u64,
    pub attack: String,
    /// Single-run outcome; absent for multi-trial runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<ResourceLedger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<SessionTranscript>,
}

fn bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2)).collect()
}

/// Concrete inputs for a single run; `random` draws from the harness stream.
fn concrete_secrets(cfg: &ScenarioConfig) -> Secrets {
    if cfg.secrets != Secrets::Random {
        return cfg.secrets.clone();
    }
    let mut h = role_stream(cfg.seed, Role::Harness);
    match cfg.protocol {
        ProtocolName::Sqpc2 | ProtocolName::SqpcMulti => {
            Secrets::Bits((0..cfg.users).map(|_| bits(&mut h, cfg.n)).collect())
        }
        ProtocolName::Sqka => Secrets::Bits((0..3).map(|_| bits(&mut h, cfg.n)).collect()),
        ProtocolName::Sqs => Secrets::Integers(
            (0..2)
                .map(|_| BigInt::from(h.random_range(-(1i64 << 31)..=(1i64 << 31))))
                .collect(),
        ),
        ProtocolName::Sqar => {
            let m = cfg.max_value.expect("validated");
            Secrets::Data((0..cfg.users).map(|_| h.random_range(1..=m)).collect())
        }
    }
}

struct Single {
    outcome: Value,
    ledger: ResourceLedger,
    transcript: SessionTranscript,
}

fn single<R: Serialize>(out: RunOutput<R>) -> serde_json::Result<Single> {
    Ok(Single {
        outcome: serde_json::to_value(&out.outcome)?,
        ledger: out.ledger,
        transcript: out.transcript,
    })
}

fn run_single(cfg: &ScenarioConfig) -> Result<Single, String> {
    let sc = cfg.sqpc_config();
    let attack = &cfg.attack;
    let e = |e: semiq::Error| e.to_string();
    let j = |e: serde_json::Error| e.to_string();
    match (cfg.protocol, concrete_secrets(cfg)) {
        (ProtocolName::Sqpc2, Secrets::Bits(s)) => single(run_sqpc2(&sc, &s[0], &s[1], attack).map_err(e)?).map_err(j),
        (ProtocolName::SqpcMulti, Secrets::Bits(s)) => {
            single(run_sqpc_multi(&sc, &s, cfg.pair, attack).map_err(e)?).map_err(j)
        }
        (ProtocolName::Sqka, Secrets::Bits(s)) => {
            let hash: Box<dyn KeyHash> = match cfg.hash {
                HashChoice::Sha256 => Box::new(Sha256Hash),
                HashChoice::Prefix(len) => Box::new(PrefixHash { len }),
            };
            single(run_sqka(&sc, &s[0], &s[1], &s[2], hash.as_ref(), attack).map_err(e)?).map_err(j)
        }
        (ProtocolName::Sqs, Secrets::Integers(s)) => single(run_sqs(&sc, &s[0], &s[1], attack).map_err(e)?).map_err(j),
        (ProtocolName::Sqar, Secrets::Data(d)) => {
            single(run_sqar(&sc, &d, cfg.max_value.expect("validated"), attack).map_err(e)?).map_err(j)
        }
        _ => Err("secrets do not match the protocol".into()),
    }
}

fn detection(cfg: &ScenarioConfig) -> Result<DetectionStats, String> {
    let sc = cfg.sqpc_config();
    let scenario = match cfg.protocol {
        ProtocolName::Sqpc2 => Scenario::Sqpc2 { cfg: sc },
        ProtocolName::SqpcMulti => Scenario::SqpcMulti { cfg: sc },
        ProtocolName::Sqka => Scenario::Sqka { cfg: sc },
        ProtocolName::Sqs => Scenario::Sqs { cfg: sc },
        ProtocolName::Sqar => Scenario::Sqar {
            cfg: sc,
            max_value: cfg.max_value.expect("validated"),
        },
    };
    let mc = McScenario {
        scenario,
        attack: cfg.attack.clone(),
    };
    monte_carlo(&mc, cfg.trials, cfg.seed).map_err(|e| e.to_string())
}

/// Runs the scenario. Protocol aborts are results; only simulator errors
/// come back as `Err`.
pub fn run_scenario(cfg: &ScenarioConfig, with_transcript: bool) -> Result<RunReport, String> {
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.raw.clone(),
        seed: cfg.seed,
        attack: cfg.attack.name().to_string(),
        outcome: None,
        ledger: None,
        detection: None,
        efficiency: None,
        transcript: None,
    };
    if cfg.trials > 1 {
        report.detection = Some(detection(cfg)?);
    } else {
        let s = run_single(cfg)?;
        report.outcome = Some(s.outcome);
        report.ledger = Some(s.ledger);
        if with_transcript && s.transcript.len() <= TRANSCRIPT_LIMIT {
            report.transcript = Some(s.transcript);
        }
    }
    report.efficiency = match cfg.protocol {
        ProtocolName::Sqpc2 => Some(efficiency_sqpc2(cfg.n).map_err(|e| e.to_string())?),
        ProtocolName::Sqka => Some(efficiency_sqka_with(cfg.n).map_err(|e| e.to_string())?),
        _ => None,
    };
    Ok(report)
}
