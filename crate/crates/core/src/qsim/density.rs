use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::state::{StateVector, SubsystemLayout};
use crate::error::{invalid, Error, Result};

pub const DENSITY_TOL: f64 = 1e-9;

/// Reduced state of a subsystem. Hermitian, unit trace, positive
/// semidefinite (all within [`DENSITY_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n != matrix.ncols() {
            return Err(invalid("density matrix must be square and nonempty"));
        }
        if (&matrix - matrix.adjoint()).norm() > DENSITY_TOL {
            return Err(invalid("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        let rho = Self { matrix };
        if rho.eigenvalues().iter().any(|&e| e < -DENSITY_TOL) {
            return Err(invalid("density matrix has a negative eigenvalue"));
        }
        Ok(rho)
    }

    pub fn pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let n = a.len();
        Self {
            matrix: DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Reduced density matrix of `keep` (first listed qubit = most significant
/// bit of the result's index).
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = SubsystemLayout::new(state.num_qubits(), keep)?;
    let amps = state.amplitudes();
    let d = layout.sub_dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for rest in layout.rest_indices() {
        for (a, off_a) in layout.offsets.iter().enumerate() {
            let x = amps[rest | off_a];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for (b, off_b) in layout.offsets.iter().enumerate() {
                m[(a, b)] += x * amps[rest | off_b].conj();
            }
        }
    }
    Ok(DensityMatrix { matrix: m })
}

/// `½ Σ |λ_i(a − b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let diff = &a.matrix - &b.matrix;
    let eig = SymmetricEigen::new(diff).eigenvalues;
    Ok((0.5 * eig.iter().map(|e| e.abs()).sum::<f64>()).clamp(0.0, 1.0))
}
