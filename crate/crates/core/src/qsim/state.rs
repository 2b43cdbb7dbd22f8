use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_1_SQRT_2;

use super::unitary::Unitary;
use crate::error::{invalid, Error, Result};

pub const NORM_TOL: f64 = 1e-9;

/// Largest register the engine accepts.
pub const MAX_QUBITS: usize = 12;

/// Dense pure state of `num_qubits` qubits. Qubit 0 is the most significant
/// bit of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl StateVector {
    /// Checks length and normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(invalid(format!("amplitude count {len} is not a power of two ≥ 2")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(invalid(format!(
                "{num_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        let s = Self { num_qubits, amplitudes };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("state is not normalized (‖ψ‖² = {norm})")));
        }
        Ok(s)
    }

    /// Computational basis state; the first bit is qubit 0.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() {
            return Err(invalid("basis state needs at least one bit"));
        }
        if bits.len() > MAX_QUBITS {
            return Err(invalid(format!(
                "{} qubits exceeds the {MAX_QUBITS}-qubit limit",
                bits.len()
            )));
        }
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(invalid(format!("bit value {b} is not 0 or 1")));
            }
            index = (index << 1) | b as usize;
        }
        let mut amplitudes = vec![zero(); 1 << bits.len()];
        amplitudes[index] = real(1.0);
        Ok(Self {
            num_qubits: bits.len(),
            amplitudes,
        })
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell_phi_plus() -> Self {
        Self::ghz_plus(2).expect("two-qubit GHZ is valid")
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on `parties` qubits.
    pub fn ghz_plus(parties: usize) -> Result<Self> {
        if parties < 2 {
            return Err(invalid(format!("GHZ state needs at least 2 qubits, got {parties}")));
        }
        if parties > MAX_QUBITS {
            return Err(invalid(format!(
                "{parties} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        let dim = 1usize << parties;
        let mut amplitudes = vec![zero(); dim];
        amplitudes[0] = real(FRAC_1_SQRT_2);
        amplitudes[dim - 1] = real(FRAC_1_SQRT_2);
        Ok(Self {
            num_qubits: parties,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(overlap.norm_sqr())
    }

    /// Kronecker product with `self` on the high-order qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(invalid(format!("{n} qubits exceeds the {MAX_QUBITS}-qubit limit")));
        }
        let mut amplitudes = Vec::with_capacity(1 << n);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(StateVector {
            num_qubits: n,
            amplitudes,
        })
    }

    /// Applies `u` to `targets` (first target = most significant bit of `u`'s
    /// index), identity elsewhere.
    pub fn apply_unitary(&self, u: &Unitary, targets: &[usize]) -> Result<StateVector> {
        let layout = SubsystemLayout::new(self.num_qubits, targets)?;
        if u.dim() != layout.sub_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.sub_dim(),
                actual: u.dim(),
            });
        }
        let mut out = vec![zero(); self.amplitudes.len()];
        let mut scratch = vec![zero(); layout.sub_dim()];
        for rest in layout.rest_indices() {
            for (s, off) in layout.offsets.iter().enumerate() {
                scratch[s] = self.amplitudes[rest | off];
            }
            for (r, off) in layout.offsets.iter().enumerate() {
                let mut acc = zero();
                for (s, x) in scratch.iter().enumerate() {
                    acc += u.get(r, s) * x;
                }
                out[rest | off] = acc;
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Flips `target` on every component whose `control` bit is 1.
    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<StateVector> {
        if control == target {
            return Err(invalid("CNOT control and target must differ"));
        }
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        let cmask = self.mask(control);
        let tmask = self.mask(target);
        let mut out = self.amplitudes.clone();
        for i in 0..out.len() {
            if i & cmask != 0 {
                out[i] = self.amplitudes[i ^ tmask];
            }
        }
        Ok(StateVector {
            num_qubits: self.num_qubits,
            amplitudes: out,
        })
    }

    /// Probability and renormalized post-state of projecting `qubits` onto
    /// `vector` (a normalized state of `qubits.len()` qubits). Returns `None`
    /// for a zero-probability branch.
    pub fn project(&self, qubits: &[usize], vector: &[Complex64]) -> Result<Option<(f64, StateVector)>> {
        let layout = SubsystemLayout::new(self.num_qubits, qubits)?;
        if vector.len() != layout.sub_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.sub_dim(),
                actual: vector.len(),
            });
        }
        let coeffs: Vec<(usize, Complex64)> = layout
            .rest_indices()
            .map(|rest| {
                let c: Complex64 = layout
                    .offsets
                    .iter()
                    .zip(vector)
                    .map(|(off, v)| v.conj() * self.amplitudes[rest | off])
                    .sum();
                (rest, c)
            })
            .collect();
        let prob: f64 = coeffs.iter().map(|(_, c)| c.norm_sqr()).sum();
        if prob <= 1e-15 {
            return Ok(None);
        }
        let scale = 1.0 / prob.sqrt();
        let mut out = vec![zero(); self.amplitudes.len()];
        for (rest, c) in coeffs {
            for (off, v) in layout.offsets.iter().zip(vector) {
                out[rest | off] = v * c * scale;
            }
        }
        Ok(Some((
            prob,
            StateVector {
                num_qubits: self.num_qubits,
                amplitudes: out,
            },
        )))
    }

    /// Born probabilities of an orthonormal `basis` on `qubits`.
    pub fn basis_probabilities(&self, qubits: &[usize], basis: &[Vec<Complex64>]) -> Result<Vec<f64>> {
        basis
            .iter()
            .map(|v| Ok(self.project(qubits, v)?.map_or(0.0, |(p, _)| p)))
            .collect()
    }

    /// Projective measurement of `qubits` in `basis`; returns the outcome
    /// index and the post-measurement state.
    pub fn measure_in_basis<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        basis: &[Vec<Complex64>],
        rng: &mut R,
    ) -> Result<(usize, StateVector)> {
        let probs = self.basis_probabilities(qubits, basis)?;
        let total: f64 = probs.iter().sum();
        let draw = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, p) in probs.iter().enumerate() {
            if *p <= 0.0 {
                continue;
            }
            chosen = Some(i);
            acc += p;
            if draw < acc {
                break;
            }
        }
        let i = chosen.ok_or_else(|| invalid("measurement has no outcome with nonzero probability"))?;
        let (_, post) = self
            .project(qubits, &basis[i])?
            .expect("chosen branch has positive probability");
        Ok((i, post))
    }

    /// Probability that `qubit` reads `bit` in the Z basis.
    pub fn z_probability(&self, qubit: usize, bit: u8) -> Result<f64> {
        self.check_qubit(qubit)?;
        let m = self.mask(qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| ((i & m != 0) as u8) == bit)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    pub(crate) fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(invalid(format!(
                "qubit {q} out of range for a {}-qubit register",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.num_qubits - 1 - q)
    }
}

/// Index bookkeeping for an ordered subset of qubits.
pub(crate) struct SubsystemLayout {
    /// `offsets[s]` is the full-register index contribution of sub-index `s`.
    pub offsets: Vec<usize>,
    target_mask: usize,
    dim: usize,
}

impl SubsystemLayout {
    pub fn new(num_qubits: usize, qubits: &[usize]) -> Result<Self> {
        if qubits.is_empty() {
            return Err(invalid("qubit list must be nonempty"));
        }
        let mut target_mask = 0usize;
        for &q in qubits {
            if q >= num_qubits {
                return Err(invalid(format!(
                    "qubit {q} out of range for a {num_qubits}-qubit register"
                )));
            }
            let m = 1 << (num_qubits - 1 - q);
            if target_mask & m != 0 {
                return Err(invalid(format!("duplicate qubit index {q}")));
            }
            target_mask |= m;
        }
        let k = qubits.len();
        let offsets = (0..1usize << k)
            .map(|s| {
                qubits.iter().enumerate().fold(0usize, |acc, (j, &q)| {
                    if (s >> (k - 1 - j)) & 1 == 1 {
                        acc | 1 << (num_qubits - 1 - q)
                    } else {
                        acc
                    }
                })
            })
            .collect();
        Ok(Self {
            offsets,
            target_mask,
            dim: 1 << num_qubits,
        })
    }

    pub fn sub_dim(&self) -> usize {
        self.offsets.len()
    }

    /// Full-register indices with every target bit cleared.
    pub fn rest_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(move |i| i & self.target_mask == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: f64) -> bool {
        (a - real(b)).norm() < 1e-12
    }

    #[test]
    fn basis_encoding() {
        let s = StateVector::basis(&[0]).unwrap();
        assert!(close(s.amplitude(0), 1.0) && close(s.amplitude(1), 0.0));
        assert!(close(StateVector::basis(&[1, 1]).unwrap().amplitude(3), 1.0));
        let s = StateVector::basis(&[0, 1, 0]).unwrap();
        assert!(close(s.amplitude(2), 1.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_rejects_empty_and_non_bits() {
        assert!(matches!(StateVector::basis(&[]), Err(Error::InvalidArgument(_))));
        assert!(StateVector::basis(&[2]).is_err());
    }

    #[test]
    fn bell_and_ghz_amplitudes() {
        let b = StateVector::bell_phi_plus();
        let h = FRAC_1_SQRT_2;
        for (i, want) in [h, 0.0, 0.0, h].into_iter().enumerate() {
            assert!(close(b.amplitude(i), want));
        }
        assert_eq!(StateVector::ghz_plus(2).unwrap(), b);
        let g = StateVector::ghz_plus(3).unwrap();
        assert!(close(g.amplitude(0), h) && close(g.amplitude(7), h));
        assert!((1..7).all(|i| close(g.amplitude(i), 0.0)));
        assert!(StateVector::ghz_plus(1).is_err());
    }

    #[test]
    fn tensor_orders_high_bits_first() {
        let s = StateVector::basis(&[0])
            .unwrap()
            .tensor(&StateVector::basis(&[1]).unwrap())
            .unwrap();
        assert_eq!(s, StateVector::basis(&[0, 1]).unwrap());
        let s = StateVector::bell_phi_plus()
            .tensor(&StateVector::basis(&[0]).unwrap())
            .unwrap();
        // (|000> + |110>)/sqrt2
        assert!(close(s.amplitude(0b000), FRAC_1_SQRT_2));
        assert!(close(s.amplitude(0b110), FRAC_1_SQRT_2));
    }

    #[test]
    fn cnot_matches_gate_definition() {
        let s = StateVector::basis(&[1, 0]).unwrap();
        assert_eq!(s.apply_cnot(0, 1).unwrap(), StateVector::basis(&[1, 1]).unwrap());
        let via_unitary = s.apply_unitary(&Unitary::cnot(), &[0, 1]).unwrap();
        assert_eq!(via_unitary, StateVector::basis(&[1, 1]).unwrap());
        assert!(s.apply_cnot(1, 1).is_err());
        assert!(s.apply_cnot(0, 2).is_err());
    }

    #[test]
    fn cnot_on_bell_plus_probe() {
        // control A (q0), target E (q2)
        let s = StateVector::bell_phi_plus()
            .tensor(&StateVector::basis(&[0]).unwrap())
            .unwrap();
        let out = s.apply_cnot(0, 2).unwrap();
        assert!(close(out.amplitude(0b000), FRAC_1_SQRT_2));
        assert!(close(out.amplitude(0b111), FRAC_1_SQRT_2));
        // second pass disentangles the probe again
        assert_eq!(out.apply_cnot(0, 2).unwrap(), s);
    }

    #[test]
    fn apply_unitary_validation() {
        let s = StateVector::basis(&[0, 0]).unwrap();
        assert!(s.apply_unitary(&Unitary::cnot(), &[0]).is_err());
        assert!(s.apply_unitary(&Unitary::cnot(), &[0, 0]).is_err());
        assert!(s.apply_unitary(&Unitary::hadamard(), &[5]).is_err());
    }

    #[test]
    fn reversed_targets_swap_roles() {
        // CNOT with targets [1, 0] uses qubit 1 as control.
        let s = StateVector::basis(&[0, 1]).unwrap();
        assert_eq!(
            s.apply_unitary(&Unitary::cnot(), &[1, 0]).unwrap(),
            StateVector::basis(&[1, 1]).unwrap()
        );
    }
}
