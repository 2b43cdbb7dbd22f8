//! Projective measurements in the three bases the protocols use.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use super::state::StateVector;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZOutcome(pub u8);

impl ZOutcome {
    pub fn bit(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    /// Amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub fn vector(self) -> Vec<Complex64> {
        let h = FRAC_1_SQRT_2;
        let v = match self {
            BellOutcome::PhiPlus => [h, 0.0, 0.0, h],
            BellOutcome::PhiMinus => [h, 0.0, 0.0, -h],
            BellOutcome::PsiPlus => [0.0, h, h, 0.0],
            BellOutcome::PsiMinus => [0.0, h, -h, 0.0],
        };
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Outcome of an L-qubit GHZ-basis measurement: the basis vector
/// `(|b⟩ ± |b̄⟩)/√2` where `b` has a leading 0 and `pattern` holds its
/// remaining L−1 bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GhzOutcome {
    pub pattern: Vec<u8>,
    pub sign: Sign,
}

impl GhzOutcome {
    /// `|Ψ⁺⟩_L`, the outcome every honest all-reflect round must produce.
    pub fn ghz_plus(parties: usize) -> Self {
        Self {
            pattern: vec![0; parties - 1],
            sign: Sign::Plus,
        }
    }

    pub fn parties(&self) -> usize {
        self.pattern.len() + 1
    }

    pub fn is_ghz_plus(&self) -> bool {
        self.sign == Sign::Plus && self.pattern.iter().all(|&b| b == 0)
    }

    pub fn vector(&self) -> Vec<Complex64> {
        let l = self.parties();
        let b = self.pattern.iter().fold(0usize, |acc, &x| (acc << 1) | x as usize);
        let b_bar = b ^ ((1 << l) - 1);
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << l];
        v[b] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        v[b_bar] = Complex64::new(
            match self.sign {
                Sign::Plus => FRAC_1_SQRT_2,
                Sign::Minus => -FRAC_1_SQRT_2,
            },
            0.0,
        );
        v
    }

    /// The full orthonormal basis for `parties` qubits, ordered by pattern
    /// then sign.
    pub fn basis(parties: usize) -> Vec<GhzOutcome> {
        let k = parties - 1;
        (0..1usize << k)
            .flat_map(|p| {
                let pattern: Vec<u8> = (0..k).map(|j| ((p >> (k - 1 - j)) & 1) as u8).collect();
                [Sign::Plus, Sign::Minus].into_iter().map(move |sign| GhzOutcome {
                    pattern: pattern.clone(),
                    sign,
                })
            })
            .collect()
    }
}

impl fmt::Display for GhzOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.pattern {
            write!(f, "{b}")?;
        }
        f.write_str(match self.sign {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

fn z_basis() -> Vec<Vec<Complex64>> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    vec![vec![one, zero], vec![zero, one]]
}

pub fn measure_z<R: Rng + ?Sized>(state: &StateVector, qubit: usize, rng: &mut R) -> Result<(ZOutcome, StateVector)> {
    let (i, post) = state.measure_in_basis(&[qubit], &z_basis(), rng)?;
    Ok((ZOutcome(i as u8), post))
}

pub fn measure_bell<R: Rng + ?Sized>(
    state: &StateVector,
    q1: usize,
    q2: usize,
    rng: &mut R,
) -> Result<(BellOutcome, StateVector)> {
    if q1 == q2 {
        return Err(invalid("Bell measurement needs two distinct qubits"));
    }
    let basis: Vec<_> = BellOutcome::ALL.iter().map(|b| b.vector()).collect();
    let (i, post) = state.measure_in_basis(&[q1, q2], &basis, rng)?;
    Ok((BellOutcome::ALL[i], post))
}

pub fn measure_ghz<R: Rng + ?Sized>(
    state: &StateVector,
    qubits: &[usize],
    rng: &mut R,
) -> Result<(GhzOutcome, StateVector)> {
    if qubits.len() < 2 {
        return Err(invalid("GHZ measurement needs at least two qubits"));
    }
    let labels = GhzOutcome::basis(qubits.len());
    let basis: Vec<_> = labels.iter().map(|g| g.vector()).collect();
    let (i, post) = state.measure_in_basis(qubits, &basis, rng)?;
    Ok((labels[i].clone(), post))
}

/// Exact outcome distribution of a Bell measurement on `(q1, q2)`.
pub fn bell_probabilities(state: &StateVector, q1: usize, q2: usize) -> Result<Vec<(BellOutcome, f64)>> {
    if q1 == q2 {
        return Err(invalid("Bell measurement needs two distinct qubits"));
    }
    let basis: Vec<_> = BellOutcome::ALL.iter().map(|b| b.vector()).collect();
    let probs = state.basis_probabilities(&[q1, q2], &basis)?;
    Ok(BellOutcome::ALL.into_iter().zip(probs).collect())
}

/// Exact outcome distribution of a GHZ-basis measurement on `qubits`.
pub fn ghz_probabilities(state: &StateVector, qubits: &[usize]) -> Result<Vec<(GhzOutcome, f64)>> {
    if qubits.len() < 2 {
        return Err(invalid("GHZ measurement needs at least two qubits"));
    }
    let labels = GhzOutcome::basis(qubits.len());
    let basis: Vec<_> = labels.iter().map(|g| g.vector()).collect();
    let probs = state.basis_probabilities(qubits, &basis)?;
    Ok(labels.into_iter().zip(probs).collect())
}

/// Post-measurement state for a fixed Z outcome, with its probability.
pub fn project_z(state: &StateVector, qubit: usize, bit: u8) -> Result<Option<(f64, StateVector)>> {
    state.project(&[qubit], &z_basis()[bit as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn ghz_basis_is_orthonormal() {
        for l in 2..=5 {
            let vs: Vec<_> = GhzOutcome::basis(l).iter().map(|g| g.vector()).collect();
            assert_eq!(vs.len(), 1 << l);
            for (i, a) in vs.iter().enumerate() {
                for (j, b) in vs.iter().enumerate() {
                    let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip.re - want).abs() < 1e-12 && ip.im.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_party_ghz_basis_is_bell_basis() {
        let labels = GhzOutcome::basis(2);
        assert_eq!(labels[0].vector(), BellOutcome::PhiPlus.vector());
        assert_eq!(labels[1].vector(), BellOutcome::PhiMinus.vector());
        assert_eq!(labels[2].vector(), BellOutcome::PsiPlus.vector());
        assert_eq!(labels[3].vector(), BellOutcome::PsiMinus.vector());
    }

    #[test]
    fn z_on_basis_state_is_deterministic() {
        let mut rng = seeded(1);
        let s = StateVector::basis(&[1]).unwrap();
        for _ in 0..50 {
            let (z, post) = measure_z(&s, 0, &mut rng).unwrap();
            assert_eq!(z, ZOutcome(1));
            assert_eq!(post, s);
        }
    }

    #[test]
    fn bell_rejects_same_qubit() {
        let mut rng = seeded(1);
        assert!(measure_bell(&StateVector::bell_phi_plus(), 0, 0, &mut rng).is_err());
        assert!(measure_ghz(&StateVector::bell_phi_plus(), &[0, 0], &mut rng).is_err());
        assert!(measure_ghz(&StateVector::bell_phi_plus(), &[0], &mut rng).is_err());
    }

    #[test]
    fn display_forms() {
        assert_eq!(BellOutcome::PhiMinus.to_string(), "phi-");
        let g = GhzOutcome {
            pattern: vec![0, 1],
            sign: Sign::Minus,
        };
        assert_eq!(g.to_string(), "01-");
    }
}
