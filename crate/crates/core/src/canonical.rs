//! Canonical (Weyl-chamber) parametrization of two-qubit gates,
//! U(θ) = exp[i Σ_α θ_α σ_α⊗σ_α] = Σ_α u_α σ_α⊗σ_α.

use std::f64::consts::FRAC_PI_4;
use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{kron, pauli, trace_of_product, ComplexMatrix, C64, ZERO};

/// Slack used by the chamber predicates.
const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanonicalError {
    #[error("Pauli coefficients are not normalized: Σ|u|² = {0}")]
    NotNormalized(f64),
    #[error("non-finite angle {0}")]
    NonFinite(f64),
}

/// Interaction angles (θ₁, θ₂, θ₃) in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThetaVector(pub [f64; 3]);

impl ThetaVector {
    pub const ORIGIN: ThetaVector = ThetaVector([0.0, 0.0, 0.0]);
    /// Controlled-Pauli class.
    pub const A1: ThetaVector = ThetaVector([FRAC_PI_4, 0.0, 0.0]);
    pub const A2: ThetaVector = ThetaVector([FRAC_PI_4, FRAC_PI_4, 0.0]);
    /// SWAP class.
    pub const A3: ThetaVector = ThetaVector([FRAC_PI_4, FRAC_PI_4, FRAC_PI_4]);

    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self, CanonicalError> {
        for t in [t1, t2, t3] {
            if !t.is_finite() {
                return Err(CanonicalError::NonFinite(t));
            }
        }
        Ok(ThetaVector([t1, t2, t3]))
    }

    pub fn negated(&self) -> ThetaVector {
        ThetaVector(self.0.map(|t| -t))
    }

    /// Number of components different from zero.
    pub fn nonzero_count(&self) -> usize {
        self.0.iter().filter(|t| **t != 0.0).count()
    }
}

impl Index<usize> for ThetaVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Coefficients u_α of U = Σ_α u_α σ_α⊗σ_α, normalized so Σ|u_α|² = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliCoeffs([C64; 4]);

impl PauliCoeffs {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(u: [C64; 4]) -> Result<Self, CanonicalError> {
        let norm: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(CanonicalError::NotNormalized(norm));
        }
        Ok(PauliCoeffs(u))
    }

    pub fn as_array(&self) -> &[C64; 4] {
        &self.0
    }

    pub fn get(&self, alpha: usize) -> C64 {
        self.0[alpha]
    }

    /// Multiplies every coefficient by a common phase.
    pub fn with_global_phase(&self, phi: f64) -> PauliCoeffs {
        let p = C64::from_polar(1.0, phi);
        PauliCoeffs(self.0.map(|z| z * p))
    }

    /// Σ_α u_α σ_α⊗σ_α.
    pub fn to_matrix(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4, 4);
        for (alpha, &u) in self.0.iter().enumerate() {
            out = &out + &kron(&pauli(alpha), &pauli(alpha)).scale(u);
        }
        out
    }
}

/// exp[i Σ_α θ_α σ_α⊗σ_α], built as Π_k (cos θ_k + i sin θ_k σ_k⊗σ_k).
pub fn canonical_unitary(theta: &ThetaVector) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(4);
    for k in 0..3 {
        let (s, c) = theta[k].sin_cos();
        let generator = kron(&pauli(k + 1), &pauli(k + 1));
        let factor = &ComplexMatrix::identity(4).scale(C64::new(c, 0.0)) + &generator.scale(C64::new(0.0, s));
        u = &u * &factor;
    }
    debug_assert!(u.is_unitary(1e-10));
    u
}

/// u_α = Tr[(σ_α⊗σ_α) U] / 4 for U = `canonical_unitary(theta)`.
pub fn pauli_coefficients(theta: &ThetaVector) -> PauliCoeffs {
    let u = canonical_unitary(theta);
    let mut out = [ZERO; 4];
    for (alpha, slot) in out.iter_mut().enumerate() {
        *slot = trace_of_product(&kron(&pauli(alpha), &pauli(alpha)), &u) / 4.0;
    }
    PauliCoeffs::new(out).expect("unitary gives normalized coefficients")
}

/// Closed-form coefficients: u₀ = c₁c₂c₃ + i s₁s₂s₃, u₁ = c₁s₂s₃ + i s₁c₂c₃ and cyclic.
pub fn pauli_coefficients_closed_form(theta: &ThetaVector) -> PauliCoeffs {
    let [(s1, c1), (s2, c2), (s3, c3)] = theta.0.map(f64::sin_cos);
    let u = [
        C64::new(c1 * c2 * c3, s1 * s2 * s3),
        C64::new(c1 * s2 * s3, s1 * c2 * c3),
        C64::new(s1 * c2 * s3, c1 * s2 * c3),
        C64::new(s1 * s2 * c3, c1 * c2 * s3),
    ];
    PauliCoeffs::new(u).expect("closed form is normalized")
}

/// True iff θ lies in the tetrahedron O A₁ A₂ A₃, i.e. π/4 ≥ θ₁ ≥ θ₂ ≥ θ₃ ≥ 0.
pub fn in_weyl_domain(theta: &ThetaVector) -> bool {
    let [t1, t2, t3] = theta.0;
    FRAC_PI_4 + DOMAIN_TOL >= t1 && t1 + DOMAIN_TOL >= t2 && t2 + DOMAIN_TOL >= t3 && t3 >= -DOMAIN_TOL
}

/// True iff θ lies in the mirrored tetrahedron O A₁′ A₂′ A₃′ (θ₁ ≤ 0).
pub fn in_mirrored_weyl_domain(theta: &ThetaVector) -> bool {
    let [t1, t2, t3] = theta.0;
    in_weyl_domain(&ThetaVector([-t1, t2, t3]))
}
