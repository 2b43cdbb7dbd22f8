use std::f64::consts::FRAC_PI_8;

use semiq::adversary::{AttackKind, AttackSpec};
use semiq::metrics::{monte_carlo, probe_trace_distance, theorem1_check, McScenario, Scenario};
use semiq::protocols::SqpcConfig;
use semiq::qsim::Unitary;
use semiq::roles::PartyAction;

#[test]
fn honest_runs_never_detected() {
    for scenario in [
        Scenario::Group {
            actions: vec![PartyAction::Reflect; 2],
        },
        Scenario::Sqpc2 {
            cfg: SqpcConfig::new(4, 2, 0),
        },
        Scenario::SqpcMulti {
            cfg: SqpcConfig::new(2, 3, 0).with_oversample(2.0),
        },
    ] {
        let s = monte_carlo(
            &McScenario {
                scenario,
                attack: AttackSpec::honest(),
            },
            2000,
            11,
        )
        .unwrap();
        assert_eq!(s.detections, 0);
    }
}

#[test]
fn cnot_entangler_half_detected_and_fully_visible() {
    let id = Unitary::identity(2);
    let r = theorem1_check(&Unitary::cnot(), &id, 10_000, 12).unwrap();
    let rr = r.bell_reflect.rate;
    // both-reflect pair after CNOT onto each probe: TP sees phi+ or phi- evenly
    assert!((0.48..=0.52).contains(&rr), "{rr}");
    assert!((r.max_probe_trace_distance - 1.0).abs() < 1e-9);
    // measuring users see perfectly correlated bits, so no detection there
    assert_eq!(r.bell_measure.detections, 0);
}

#[test]
fn small_rotation_leaves_joint_footprint() {
    let u = Unitary::controlled_rotation(FRAC_PI_8);
    let id = Unitary::identity(2);
    let r = theorem1_check(&u, &id, 10_000, 13).unwrap();
    assert!(r.detection_rate > 0.0);
    assert!(r.max_probe_trace_distance > 0.0);
    let td = probe_trace_distance(&u, &id).unwrap();
    assert!(td > 0.1 && td < 1.0, "{td}");
}

#[test]
fn tp_attacks_caught_on_full_runs() {
    for kind in [AttackKind::TpZBasisAttack, AttackKind::TpFakeParticles] {
        let sc = McScenario {
            scenario: Scenario::Sqpc2 {
                cfg: SqpcConfig::new(8, 2, 0),
            },
            attack: AttackSpec::new(kind),
        };
        let s = monte_carlo(&sc, 1000, 14).unwrap();
        assert!(s.rate > 0.99, "{s:?}");
    }
}

#[test]
fn multi_party_channel_attack_detected() {
    let sc = McScenario {
        scenario: Scenario::SqpcMulti {
            cfg: SqpcConfig::new(4, 3, 0).with_oversample(2.0),
        },
        attack: AttackSpec::new(AttackKind::MeasureResend),
    };
    let s = monte_carlo(&sc, 300, 15).unwrap();
    // short keys, so a few runs slip through; most must not
    assert!(s.rate > 0.9, "{s:?}");
}
