//! Dense Hermitian operators on `n`-qubit Hilbert spaces.
//!
//! Qubit 0 is the leftmost tensor factor, so the computational basis state
//! `|x_0 x_1 ... x_{n-1}>` sits at index `sum_i x_i 2^(n-1-i)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::AqcError;

/// Largest supported qubit count for dense eigensolves.
pub const MAX_QUBITS: usize = 10;

/// Hermiticity tolerance: max absolute entry of `M - M^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<Complex64>,
    qubits: usize,
}

impl HermitianOperator {
    /// Wraps a square complex matrix, checking its size is `2^qubits` and
    /// that it is Hermitian to [`HERMITIAN_TOL`].
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self, AqcError> {
        if !matrix.is_square() {
            return Err(AqcError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(AqcError::DimensionNotPowerOfTwo(dim));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(AqcError::TooManyQubits(qubits));
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL {
            return Err(AqcError::NotHermitian(deviation));
        }
        Ok(Self { matrix, qubits })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self, AqcError> {
        Self::new(matrix.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn identity(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self {
            matrix: DMatrix::identity(dim, dim),
            qubits,
        }
    }

    pub fn zeros(qubits: usize) -> Self {
        let dim = 1usize << qubits;
        Self {
            matrix: DMatrix::zeros(dim, dim),
            qubits,
        }
    }

    /// `1 - |v><v|` for a unit vector `v`.
    pub fn projector_complement(v: &[Complex64]) -> Result<Self, AqcError> {
        let dim = v.len();
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(AqcError::NotNormalized(norm));
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            Complex64::new(id, 0.0) - v[i] * v[j].conj()
        });
        Self::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kron(&self, other: &Self) -> Result<Self, AqcError> {
        let qubits = self.qubits + other.qubits;
        if qubits > MAX_QUBITS {
            return Err(AqcError::TooManyQubits(qubits));
        }
        Ok(Self {
            matrix: self.matrix.kronecker(&other.matrix),
            qubits,
        })
    }

    /// Real linear combination `a * self + b * other`; stays Hermitian.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self, AqcError> {
        if self.qubits != other.qubits {
            return Err(AqcError::DimensionMismatch(self.dim(), other.dim()));
        }
        let matrix = self.matrix.map(|c| c * a) + other.matrix.map(|c| c * b);
        Ok(Self {
            matrix,
            qubits: self.qubits,
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            matrix: self.matrix.map(|c| c * a),
            qubits: self.qubits,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<DMatrix<Complex64>, AqcError> {
        if self.qubits != other.qubits {
            return Err(AqcError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(&self.matrix * &other.matrix)
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let dim = self.dim();
        (0..dim)
            .map(|i| (0..dim).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Max absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.qubits != other.qubits {
            return f64::INFINITY;
        }
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    /// Sorted (ascending) eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Sorted eigenpairs; eigenvectors are returned as columns in order.
    pub fn eigenpairs(&self) -> (Vec<f64>, Vec<Vec<Complex64>>) {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (values, vectors)
    }
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// The Pauli X matrix.
pub fn pauli_x() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// The Pauli Z matrix.
pub fn pauli_z() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// Embeds a single-qubit operator at `site` of an `n`-qubit register.
pub fn embed(single: &DMatrix<f64>, qubits: usize, site: usize) -> Result<HermitianOperator, AqcError> {
    if site >= qubits {
        return Err(AqcError::SiteOutOfRange { site, qubits });
    }
    let id = DMatrix::<f64>::identity(2, 2);
    let mut acc = DMatrix::<f64>::identity(1, 1);
    for k in 0..qubits {
        acc = if k == site {
            acc.kronecker(single)
        } else {
            acc.kronecker(&id)
        };
    }
    HermitianOperator::from_real(acc)
}

/// `P_x^j = (1 - (-1)^j X) / 2` at `site`.
pub fn projector_x(j: u8, qubits: usize, site: usize) -> Result<HermitianOperator, AqcError> {
    if j > 1 {
        return Err(AqcError::InvalidBit(j));
    }
    let sign = if j == 0 { 1.0 } else { -1.0 };
    let single = (DMatrix::<f64>::identity(2, 2) - pauli_x() * sign) * 0.5;
    embed(&single, qubits, site)
}

/// `P_z = (1 - Z) / 2` at `site`; `P_z |x> = x |x>`.
pub fn projector_z(qubits: usize, site: usize) -> Result<HermitianOperator, AqcError> {
    let single = (DMatrix::<f64>::identity(2, 2) - pauli_z()) * 0.5;
    embed(&single, qubits, site)
}

/// Logical-OR combination `A (+) B = A x 1 + 1 x B - A x B` of two commuting
/// projectors on disjoint registers. Used for clause identities only.
pub fn or_projector(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator, AqcError> {
    let left = a.kron(&HermitianOperator::identity(b.qubits()))?;
    let right = HermitianOperator::identity(a.qubits()).kron(b)?;
    let both = a.kron(b)?;
    left.combine(1.0, &right, 1.0)?.combine(1.0, &both, -1.0)
}

/// Computational basis vector for the bit string `bits` (qubit 0 first).
pub fn basis_state(bits: &[u8]) -> Vec<Complex64> {
    let dim = 1usize << bits.len();
    let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Product state of single-qubit states (qubit 0 first).
pub fn product_state(factors: &[[Complex64; 2]]) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for f in factors {
        acc = acc
            .iter()
            .flat_map(|a| [a * f[0], a * f[1]])
            .collect();
    }
    acc
}

/// `|<u|v>|`.
pub fn overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .norm()
}
