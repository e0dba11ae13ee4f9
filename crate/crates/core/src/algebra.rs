//! Dense complex matrices, Pauli algebra, Pauli transfer matrices and
//! quantum states.
//!
//! Qubit 0 is the most significant bit of a basis index and the leftmost
//! Kronecker factor. Pauli-string characters follow the same order.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::observable::Observable;

pub type C64 = Complex64;

/// Default absolute tolerance for numerical equality.
pub const TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("Pauli index {0} out of range 0..=3")]
    PauliIndex(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite PTM entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("PTM entry ({row}, {col}) has imaginary part {imag:e}; map does not preserve Hermiticity")]
    NotHermiticityPreserving { row: usize, col: usize, imag: f64 },
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        ComplexMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "data length does not match dimensions");
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self::from_vec(r, c, data)
    }

    /// Builds a matrix from real entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, AlgebraError> {
        if self.cols != rhs.rows {
            return Err(AlgebraError::Dimension(format!(
                "cannot multiply {:?} by {:?}",
                self.dims(),
                rhs.dims()
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dimension mismatch in comparison");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &ComplexMatrix, tol: f64) -> bool {
        self.dims() == other.dims() && self.max_abs_diff(other) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && (&self.adjoint() * self).approx_eq(&Self::identity(self.rows), tol)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dims(), rhs.dims(), "dimension mismatch in sum");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dims(), rhs.dims(), "dimension mismatch in difference");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// The 2×2 matrix of σ_α, with σ₀ the identity and σ₁, σ₂, σ₃ = X, Y, Z.
pub fn pauli_matrix(alpha: usize) -> Result<ComplexMatrix, AlgebraError> {
    let m = match alpha {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => return Err(AlgebraError::PauliIndex(alpha)),
    };
    Ok(ComplexMatrix::from_vec(2, 2, m.to_vec()))
}

/// `pauli_matrix` for indices already known to be valid.
pub(crate) fn pauli(alpha: usize) -> ComplexMatrix {
    pauli_matrix(alpha).expect("Pauli index in range")
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.dims();
    let (br, bc) = b.dims();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Tensor product σ_{p₀} ⊗ σ_{p₁} ⊗ … for a list of Pauli indices.
pub fn pauli_string_matrix(indices: &[usize]) -> Result<ComplexMatrix, AlgebraError> {
    let mut out = ComplexMatrix::identity(1);
    for &p in indices {
        out = kron(&out, &pauli_matrix(p)?);
    }
    Ok(out)
}

/// Splits a basis index in 0..4ⁿ into per-qubit Pauli indices, qubit 0 first.
pub fn pauli_digits(mut index: usize, num_qubits: usize) -> Vec<usize> {
    let mut digits = vec![0; num_qubits];
    for q in (0..num_qubits).rev() {
        digits[q] = index % 4;
        index /= 4;
    }
    digits
}

/// Pauli transfer matrix, entry (j, k) = Tr[σ_j Φ(σ_k)] / 2ⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct Ptm {
    num_qubits: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Ptm {
    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1 << (2 * num_qubits);
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Ptm { num_qubits, dim, data }
    }

    pub fn zeros(num_qubits: usize) -> Self {
        let dim = 1 << (2 * num_qubits);
        Ptm { num_qubits, dim, data: vec![0.0; dim * dim] }
    }

    /// Builds a PTM from row-major entries.
    pub fn from_entries(num_qubits: usize, data: Vec<f64>) -> Result<Self, AlgebraError> {
        let dim = 1 << (2 * num_qubits);
        if data.len() != dim * dim {
            return Err(AlgebraError::Dimension(format!(
                "{} entries for a {}-qubit PTM",
                data.len(),
                num_qubits
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(AlgebraError::NonFinite(pos / dim, pos % dim));
        }
        Ok(Ptm { num_qubits, dim, data })
    }

    /// Computes the PTM of a linear map given by its action on operators.
    ///
    /// Entries with an imaginary part above [`TOL`] are rejected since every
    /// map handled here preserves Hermiticity.
    pub fn from_action<F>(num_qubits: usize, apply: F) -> Result<Self, AlgebraError>
    where
        F: Fn(&ComplexMatrix) -> ComplexMatrix,
    {
        let dim = 1 << (2 * num_qubits);
        let norm = (1u64 << num_qubits) as f64;
        let basis: Vec<ComplexMatrix> = (0..dim)
            .map(|k| pauli_string_matrix(&pauli_digits(k, num_qubits)))
            .collect::<Result<_, _>>()?;
        let mut data = vec![0.0; dim * dim];
        for (k, sigma_k) in basis.iter().enumerate() {
            let image = apply(sigma_k);
            if image.dims() != sigma_k.dims() {
                return Err(AlgebraError::Dimension(format!(
                    "map returned {:?} for a {:?} input",
                    image.dims(),
                    sigma_k.dims()
                )));
            }
            for (j, sigma_j) in basis.iter().enumerate() {
                let entry = trace_of_product(sigma_j, &image) / norm;
                if !entry.re.is_finite() || !entry.im.is_finite() {
                    return Err(AlgebraError::NonFinite(j, k));
                }
                if entry.im.abs() > TOL {
                    return Err(AlgebraError::NotHermiticityPreserving { row: j, col: k, imag: entry.im });
                }
                data[j * dim + k] = entry.re;
            }
        }
        Ok(Ptm { num_qubits, dim, data })
    }

    /// PTM of the unitary channel ρ ↦ UρU†.
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self, AlgebraError> {
        let n = u.rows().trailing_zeros() as usize;
        if !u.is_square() || 1 << n != u.rows() {
            return Err(AlgebraError::Dimension(format!("{:?} is not a qubit operator", u.dims())));
        }
        let ud = u.adjoint();
        Self::from_action(n, |rho| &(u * rho) * &ud)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// PTM of `self` applied after `first`.
    pub fn after(&self, first: &Ptm) -> Ptm {
        assert_eq!(self.num_qubits, first.num_qubits, "PTM qubit mismatch");
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * first.data[k * d + j];
                }
            }
        }
        Ptm { num_qubits: self.num_qubits, dim: d, data }
    }

    /// PTM of the product channel `self ⊗ other`.
    pub fn kron(&self, other: &Ptm) -> Ptm {
        let (da, db) = (self.dim, other.dim);
        let d = da * db;
        let mut data = vec![0.0; d * d];
        for i in 0..da {
            for j in 0..da {
                let a = self.data[i * da + j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        data[(i * db + k) * d + j * db + l] = a * other.data[k * db + l];
                    }
                }
            }
        }
        Ptm { num_qubits: self.num_qubits + other.num_qubits, dim: d, data }
    }

    pub fn scaled(&self, s: f64) -> Ptm {
        Ptm {
            num_qubits: self.num_qubits,
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Adds `s · other` in place.
    pub fn add_scaled(&mut self, other: &Ptm, s: f64) {
        assert_eq!(self.dim, other.dim, "PTM dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Ptm) -> f64 {
        assert_eq!(self.dim, other.dim, "PTM dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Applies the channel to an operator expressed as a matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let n = self.num_qubits;
        let size = 1 << n;
        assert_eq!(rho.dims(), (size, size), "operator dimension mismatch");
        let norm = size as f64;
        let basis: Vec<ComplexMatrix> = (0..self.dim)
            .map(|k| pauli_string_matrix(&pauli_digits(k, n)).expect("valid digits"))
            .collect();
        // ρ = Σ_k r_k σ_k / 2ⁿ with r_k = Tr[σ_k ρ]
        let coords: Vec<C64> = basis.iter().map(|s| trace_of_product(s, rho)).collect();
        let mut out = ComplexMatrix::zeros(size, size);
        for (j, sigma_j) in basis.iter().enumerate() {
            let mut cj = ZERO;
            for (k, rk) in coords.iter().enumerate() {
                cj += rk * self.data[j * self.dim + k];
            }
            out = &out + &sigma_j.scale(cj / norm);
        }
        out
    }
}

/// Tr[A·B] without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!(a.cols(), b.rows(), "dimension mismatch in trace");
    assert_eq!(a.rows(), b.cols(), "dimension mismatch in trace");
    let mut acc = ZERO;
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Unit-norm Bloch axis.
pub type Axis = [f64; 3];

/// Projector (σ₀ + n·σ)/2 onto the +1 eigenspace of n·σ.
pub fn projector(axis: &Axis) -> ComplexMatrix {
    let [x, y, z] = *axis;
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new((1.0 + z) / 2.0, 0.0),
            C64::new(x / 2.0, -y / 2.0),
            C64::new(x / 2.0, y / 2.0),
            C64::new((1.0 - z) / 2.0, 0.0),
        ],
    )
}

/// R(n, θ) = exp[−iθ n·σ].
pub fn rotation(axis: &Axis, theta: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    let [x, y, z] = *axis;
    // cos θ σ₀ − i sin θ (n·σ)
    ComplexMatrix::from_vec(
        2,
        2,
        vec![
            C64::new(c, -s * z),
            C64::new(-s * y, -s * x),
            C64::new(s * y, -s * x),
            C64::new(c, s * z),
        ],
    )
}

/// Operations a state must support for local channel realizations.
pub trait LocalOps {
    fn num_qubits(&self) -> usize;

    /// Applies a 2×2 operator to `qubit` without renormalizing.
    fn apply_1q(&mut self, qubit: usize, op: &ComplexMatrix);

    /// ⟨Π(n)⟩ on `qubit`, relative to the current (unit) trace.
    fn projector_probability(&self, qubit: usize, axis: &Axis) -> f64;

    /// Projects `qubit` onto the +1 eigenspace of n·σ and renormalizes.
    /// Returns false if the projected state has vanishing norm.
    fn project(&mut self, qubit: usize, axis: &Axis) -> bool;
}

/// Dense pure state with a tracked squared norm.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
    norm_sqr: f64,
}

impl StateVector {
    /// |0…0⟩.
    pub fn zero_state(num_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        StateVector { num_qubits, amps, norm_sqr: 1.0 }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, AlgebraError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(AlgebraError::Dimension(format!("{len} amplitudes is not a power of two")));
        }
        let norm_sqr = amps.iter().map(|a| a.norm_sqr()).sum();
        Ok(StateVector { num_qubits: len.trailing_zeros() as usize, amps, norm_sqr })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    fn recompute_norm(&mut self) {
        self.norm_sqr = self.amps.iter().map(|a| a.norm_sqr()).sum();
    }

    pub fn normalize(&mut self) {
        self.recompute_norm();
        let s = 1.0 / self.norm_sqr.sqrt();
        for a in &mut self.amps {
            *a *= s;
        }
        self.norm_sqr = 1.0;
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Applies a 4×4 operator to (`a`, `b`) with `a` as the left tensor factor.
    pub fn apply_2q(&mut self, a: usize, b: usize, op: &ComplexMatrix) {
        assert_eq!(op.dims(), (4, 4), "two-qubit operator must be 4x4");
        assert!(a != b, "two-qubit operator on a repeated qubit");
        let (ma, mb) = (self.bit(a), self.bit(b));
        for base in 0..self.amps.len() {
            if base & (ma | mb) != 0 {
                continue;
            }
            let idx = [base, base | mb, base | ma, base | ma | mb];
            let v = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = (0..4).map(|c| op[(r, c)] * v[c]).sum();
            }
        }
        self.recompute_norm();
    }

    /// Applies a Pauli string given as per-qubit indices.
    pub fn apply_pauli_string(&mut self, paulis: &[usize]) {
        assert_eq!(paulis.len(), self.num_qubits, "Pauli string length mismatch");
        for (q, &p) in paulis.iter().enumerate() {
            if p != 0 {
                self.apply_1q(q, &pauli(p));
            }
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> C64 {
        assert_eq!(self.num_qubits, other.num_qubits, "qubit count mismatch");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// ⟨ψ|P|ψ⟩ for a Pauli string P, normalized by the stored squared norm.
    pub fn pauli_expectation(&self, paulis: &[usize]) -> f64 {
        let mut image = self.clone();
        image.apply_pauli_string(paulis);
        self.inner(&image).re / self.norm_sqr
    }

    pub fn to_density(&self) -> DensityMatrix {
        let d = self.amps.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix { num_qubits: self.num_qubits, matrix: m }
    }
}

impl LocalOps for StateVector {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply_1q(&mut self, qubit: usize, op: &ComplexMatrix) {
        assert_eq!(op.dims(), (2, 2), "single-qubit operator must be 2x2");
        let m = self.bit(qubit);
        let (a, b, c, d) = (op[(0, 0)], op[(0, 1)], op[(1, 0)], op[(1, 1)]);
        for i in 0..self.amps.len() {
            if i & m != 0 {
                continue;
            }
            let (x0, x1) = (self.amps[i], self.amps[i | m]);
            self.amps[i] = a * x0 + b * x1;
            self.amps[i | m] = c * x0 + d * x1;
        }
        self.recompute_norm();
    }

    fn projector_probability(&self, qubit: usize, axis: &Axis) -> f64 {
        let mut image = self.clone();
        image.apply_1q(qubit, &projector(axis));
        image.norm_sqr / self.norm_sqr
    }

    fn project(&mut self, qubit: usize, axis: &Axis) -> bool {
        self.apply_1q(qubit, &projector(axis));
        if self.norm_sqr == 0.0 {
            return false;
        }
        self.normalize();
        true
    }
}

/// Dense density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self, AlgebraError> {
        let n = matrix.rows().trailing_zeros() as usize;
        if !matrix.is_square() || 1 << n != matrix.rows() {
            return Err(AlgebraError::Dimension(format!("{:?} is not a qubit operator", matrix.dims())));
        }
        Ok(DensityMatrix { num_qubits: n, matrix })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1 << num_qubits;
        DensityMatrix { num_qubits, matrix: ComplexMatrix::identity(d).scale(C64::new(1.0 / d as f64, 0.0)) }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Embeds a single-qubit operator at `qubit`.
    fn embed(&self, qubit: usize, op: &ComplexMatrix) -> ComplexMatrix {
        let mut full = ComplexMatrix::identity(1);
        for q in 0..self.num_qubits {
            if q == qubit {
                full = kron(&full, op);
            } else {
                full = kron(&full, &ComplexMatrix::identity(2));
            }
        }
        full
    }
}

impl LocalOps for DensityMatrix {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply_1q(&mut self, qubit: usize, op: &ComplexMatrix) {
        let full = self.embed(qubit, op);
        self.matrix = &(&full * &self.matrix) * &full.adjoint();
    }

    fn projector_probability(&self, qubit: usize, axis: &Axis) -> f64 {
        let full = self.embed(qubit, &projector(axis));
        trace_of_product(&full, &self.matrix).re / self.trace()
    }

    fn project(&mut self, qubit: usize, axis: &Axis) -> bool {
        self.apply_1q(qubit, &projector(axis));
        let t = self.trace();
        if t == 0.0 {
            return false;
        }
        self.matrix = self.matrix.scale(C64::new(1.0 / t, 0.0));
        true
    }
}

/// A quantum state in pure or density form, or the zero operator that marks
/// a discarded branch.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Density(DensityMatrix),
    Zero { num_qubits: usize },
}

impl QuantumState {
    pub fn num_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.num_qubits,
            QuantumState::Density(d) => d.num_qubits,
            QuantumState::Zero { num_qubits } => *num_qubits,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, QuantumState::Zero { .. })
    }

    /// Density form; the zero state maps to the zero matrix.
    pub fn to_density_matrix(&self) -> ComplexMatrix {
        match self {
            QuantumState::Pure(s) => s.to_density().matrix,
            QuantumState::Density(d) => d.matrix.clone(),
            QuantumState::Zero { num_qubits } => {
                let d = 1 << num_qubits;
                ComplexMatrix::zeros(d, d)
            }
        }
    }
}

/// Tr[Oρ] for a Pauli-sum observable.
pub fn expectation(state: &QuantumState, obs: &Observable) -> Result<f64, AlgebraError> {
    if state.num_qubits() != obs.num_qubits() {
        return Err(AlgebraError::Dimension(format!(
            "{}-qubit state against {}-qubit observable",
            state.num_qubits(),
            obs.num_qubits()
        )));
    }
    match state {
        QuantumState::Zero { .. } => Ok(0.0),
        QuantumState::Pure(s) => Ok(obs.terms().iter().map(|t| t.coeff * s.pauli_expectation(t.paulis())).sum()),
        QuantumState::Density(d) => {
            let mut acc = ZERO;
            for t in obs.terms() {
                let p = pauli_string_matrix(t.paulis())?;
                acc += trace_of_product(&p, &d.matrix) * t.coeff;
            }
            debug_assert!(acc.im.abs() < TOL, "imaginary expectation {}", acc.im);
            Ok(acc.re)
        }
    }
}
