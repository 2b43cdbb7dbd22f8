//! Monte Carlo detection estimates, the probe-independence check for
//! entangle-measure attacks, and qubit-efficiency accounting.

mod efficiency;
mod montecarlo;
mod theorem1;

use serde::{Deserialize, Serialize};

pub use efficiency::{
    balanced_policy, efficiency_sqka, efficiency_sqka_with, efficiency_sqpc2, prior_sqka_schemes, prior_sqpc_schemes,
    EfficiencyReport, PriorSqkaScheme, PriorSqpcScheme,
};
pub use montecarlo::{monte_carlo, run_trial, McScenario, Scenario, TrialClass};
pub use theorem1::{probe_trace_distance, theorem1_check, Theorem1Report};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Detection counts over the effective trials. Trials voided by a quota
/// shortfall are kept apart: they are a sampling artifact, not evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub trials: u64,
    pub detections: u64,
    /// Trials that ended in a quota shortfall; not part of `trials`.
    pub voided: u64,
    pub rate: f64,
    pub wilson_ci_95: (f64, f64),
}

impl DetectionStats {
    pub fn from_counts(trials: u64, detections: u64, voided: u64) -> Self {
        assert!(detections <= trials, "more detections than trials");
        let rate = if trials == 0 {
            0.0
        } else {
            detections as f64 / trials as f64
        };
        Self {
            trials,
            detections,
            voided,
            rate,
            wilson_ci_95: wilson_interval(detections, trials),
        }
    }

    /// Detections over every trial, voided ones included.
    pub fn unconditional_rate(&self) -> f64 {
        let all = self.trials + self.voided;
        if all == 0 {
            0.0
        } else {
            self.detections as f64 / all as f64
        }
    }
}

/// Wilson score interval at 95%; `(0, 1)` when there are no trials.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_rate_and_shrinks() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && 0.5 < hi);
        let (lo2, hi2) = wilson_interval(5000, 10000);
        assert!(hi2 - lo2 < (hi - lo) / 5.0);
        // known value: 0 of 10 -> upper bound ~0.2775
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-3);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn stats_rates() {
        let s = DetectionStats::from_counts(80, 40, 20);
        assert_eq!(s.rate, 0.5);
        assert_eq!(s.unconditional_rate(), 0.4);
        let z = DetectionStats::from_counts(0, 0, 3);
        assert_eq!((z.rate, z.wilson_ci_95), (0.0, (0.0, 1.0)));
    }
}
