use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DetectionStats;
use crate::adversary::AttackSpec;
use crate::error::{invalid, Result};
use crate::protocols::{probe_decoy, probe_group};
use crate::qsim::{partial_trace, project_z, trace_distance, DensityMatrix, StateVector, Unitary};
use crate::rng::{role_stream, trial_seed, Role};
use crate::roles::PartyAction;

/// Branches below this probability are ignored.
const BRANCH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub trials: u64,
    /// Fraction of trials in which any of the three sub-scenarios detected.
    pub detection_rate: f64,
    /// Largest trace distance between Eve's probe states across the branches
    /// (prepared state, user action, user outcome) of one target family.
    pub max_probe_trace_distance: f64,
    /// Random decoy bit, random action.
    pub decoy: DetectionStats,
    /// Bell pair, both users reflect.
    pub bell_reflect: DetectionStats,
    /// Bell pair, both users measure.
    pub bell_measure: DetectionStats,
}

/// Each trial sends one decoy (random bit and action), one both-reflect Bell
/// pair and one both-measure Bell pair through the entangle-measure attack.
pub fn theorem1_check(u_e: &Unitary, u_f: &Unitary, trials: u64, seed: u64) -> Result<Theorem1Report> {
    if trials == 0 {
        return Err(invalid("theorem check needs at least one trial"));
    }
    let spec = AttackSpec::entangle_measure(u_e.clone(), u_f.clone())?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[bool; 3]> {
            let base = trial_seed(seed, t);
            let mut h = role_stream(base, Role::Harness);
            let bit = h.random_range(0..2u8);
            let action = if h.random_bool(0.5) {
                PartyAction::Measure
            } else {
                PartyAction::Reflect
            };
            let d = probe_decoy(bit, action, spec.instantiate()?, trial_seed(base, 0))?.detected;
            let rr = probe_group(&[PartyAction::Reflect; 2], spec.instantiate()?, trial_seed(base, 1))?.detected;
            let mm = probe_group(&[PartyAction::Measure; 2], spec.instantiate()?, trial_seed(base, 2))?.detected;
            Ok([d, rr, mm])
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |i: usize| hits.iter().filter(|h| h[i]).count() as u64;
    let any = hits.iter().filter(|h| h.iter().any(|&x| x)).count() as u64;
    Ok(Theorem1Report {
        trials,
        detection_rate: any as f64 / trials as f64,
        max_probe_trace_distance: probe_trace_distance(u_e, u_f)?,
        decoy: DetectionStats::from_counts(trials, count(0), 0),
        bell_reflect: DetectionStats::from_counts(trials, count(1), 0),
        bell_measure: DetectionStats::from_counts(trials, count(2), 0),
    })
}

/// Continues each branch of `state` where the listed qubits are Z-measured.
fn measured_branches(state: StateVector, measured: &[usize]) -> Result<Vec<StateVector>> {
    let mut branches = vec![state];
    for &q in measured {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for s in &branches {
            for bit in 0..2 {
                if let Some((p, post)) = project_z(s, q, bit)? {
                    if p > BRANCH_EPS {
                        next.push(post);
                    }
                }
            }
        }
        branches = next;
    }
    Ok(branches)
}

fn max_pairwise(states: &[DensityMatrix]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            best = best.max(trace_distance(a, b)?);
        }
    }
    Ok(best)
}

/// Exact enumeration of Eve's final probe states. Decoy family: prepared bit
/// × (reflect | measure with each outcome). Bell family: both probes of a
/// `|φ⁺⟩` pair, for every action pair and every users' outcome. Returns the
/// largest pairwise trace distance within a family.
pub fn probe_trace_distance(u_e: &Unitary, u_f: &Unitary) -> Result<f64> {
    if u_e.num_qubits() != 2 || u_f.num_qubits() != 2 {
        return Err(invalid("entangle-measure unitaries must be 4x4"));
    }
    // decoy: qubit 0 flight, qubit 1 probe
    let mut decoy = Vec::new();
    for b in 0..2u8 {
        let sent = StateVector::basis(&[b, 0])?.apply_unitary(u_e, &[0, 1])?;
        for measured in [&[][..], &[0][..]] {
            for s in measured_branches(sent.clone(), measured)? {
                decoy.push(partial_trace(&s.apply_unitary(u_f, &[0, 1])?, &[1])?);
            }
        }
    }
    // Bell pair: qubits 0,1 = A,B; 2,3 = their probes
    let sent = StateVector::bell_phi_plus()
        .tensor(&StateVector::basis(&[0, 0])?)?
        .apply_unitary(u_e, &[0, 2])?
        .apply_unitary(u_e, &[1, 3])?;
    let mut bell = Vec::new();
    for measured in [&[][..], &[0][..], &[1][..], &[0, 1][..]] {
        for s in measured_branches(sent.clone(), measured)? {
            let back = s.apply_unitary(u_f, &[0, 2])?.apply_unitary(u_f, &[1, 3])?;
            bell.push(partial_trace(&back, &[2, 3])?);
        }
    }
    Ok(max_pairwise(&decoy)?.max(max_pairwise(&bell)?))
}
