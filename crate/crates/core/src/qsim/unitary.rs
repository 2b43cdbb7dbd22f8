use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

pub const UNITARITY_TOL: f64 = 1e-9;

/// A square unitary acting on `log2(dim)` qubits. The first listed target
/// qubit is the most significant bit of the row/column index.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    matrix: DMatrix<Complex64>,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl Unitary {
    /// Validates `matrix` against `U U† = I` within [`UNITARITY_TOL`]
    /// (Frobenius norm of the residual).
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() {
            return Err(invalid(format!(
                "unitary must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if dim == 0 || !dim.is_power_of_two() {
            return Err(invalid(format!("unitary dimension {dim} is not a power of two")));
        }
        let residual = unitarity_residual(&matrix);
        if residual.is_nan() || residual > UNITARITY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { matrix })
    }

    /// Row-major construction.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(invalid("unitary rows must all have length equal to the row count"));
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// CNOT with the first qubit as control.
    pub fn cnot() -> Self {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0);
        m[(1, 1)] = c(1.0);
        m[(2, 3)] = c(1.0);
        m[(3, 2)] = c(1.0);
        Self { matrix: m }
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)]),
        }
    }

    /// Controlled rotation on (control, target): when the control is `|1⟩`
    /// the target is rotated by `theta` in the real plane,
    /// `|1,0⟩ -> |1⟩(cos θ|0⟩ + sin θ|1⟩)`. `theta = 0` is the identity and
    /// `theta = π/2` acts like CNOT on a `|0⟩` target.
    pub fn controlled_rotation(theta: f64) -> Self {
        let (s, co) = theta.sin_cos();
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0);
        m[(1, 1)] = c(1.0);
        m[(2, 2)] = c(co);
        m[(3, 2)] = c(s);
        m[(2, 3)] = c(-s);
        m[(3, 3)] = c(co);
        Self { matrix: m }
    }

    /// Haar-distributed random unitary on `num_qubits` qubits (QR of a
    /// complex Ginibre matrix with the phase of `R`'s diagonal removed).
    pub fn haar_random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << num_qubits;
        let g = DMatrix::from_fn(dim, dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        });
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        Self { matrix: q }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self` followed by `next` (i.e. the matrix `next · self`).
    pub fn then(&self, next: &Unitary) -> Result<Self> {
        if self.dim() != next.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: next.dim(),
            });
        }
        Ok(Self {
            matrix: &next.matrix * &self.matrix,
        })
    }

    /// Row-major entries.
    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.matrix[(i, j)]).collect())
            .collect()
    }
}

/// `‖U U† − I‖_F`.
pub fn unitarity_residual(matrix: &DMatrix<Complex64>) -> f64 {
    if matrix.nrows() != matrix.ncols() {
        return f64::INFINITY;
    }
    let n = matrix.nrows();
    let prod = matrix * matrix.adjoint();
    (prod - DMatrix::<Complex64>::identity(n, n)).norm()
}
