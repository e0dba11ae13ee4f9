//! The sixteen local basis channels {σ_α, A_αα′, B_αα′} and their stochastic
//! realizations with single-qubit rotations and signed projective
//! measurements.
//!
//! Every realization program carries total quasiprobability mass one: a
//! program is either deterministic with unit-modulus weights, or a fair coin
//! between two branches of sign ±1. All overhead therefore lives in the
//! coefficients of a decomposition.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::algebra::{
    pauli, projector, rotation, Axis, ComplexMatrix, LocalOps, Ptm, QuantumState, C64, ONE, ZERO,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalBasisError {
    #[error("invalid basis channel indices ({0}, {1}); need 0 <= a < b <= 3")]
    Indices(usize, usize),
    #[error("Pauli index {0} out of range")]
    PauliIndex(usize),
    #[error("unrecognized basis channel label {0:?}")]
    Label(String),
    #[error("realization expects a single-qubit state, got {0} qubits")]
    NotSingleQubit(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    Pauli,
    A,
    B,
}

/// Identifies one of the 16 basis channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisChannelId {
    /// ρ ↦ σ_α ρ σ_α
    Pauli(usize),
    /// ρ ↦ (σ_α ρ σ_α′ + σ_α′ ρ σ_α)/2, α < α′
    A(usize, usize),
    /// ρ ↦ (σ_α ρ σ_α′ − σ_α′ ρ σ_α)/(2i), α < α′
    B(usize, usize),
}

impl BasisChannelId {
    pub fn pauli(alpha: usize) -> Result<Self, LocalBasisError> {
        if alpha > 3 {
            return Err(LocalBasisError::PauliIndex(alpha));
        }
        Ok(BasisChannelId::Pauli(alpha))
    }

    pub fn a(alpha: usize, beta: usize) -> Result<Self, LocalBasisError> {
        check_pair(alpha, beta)?;
        Ok(BasisChannelId::A(alpha, beta))
    }

    pub fn b(alpha: usize, beta: usize) -> Result<Self, LocalBasisError> {
        check_pair(alpha, beta)?;
        Ok(BasisChannelId::B(alpha, beta))
    }

    /// All 16 channels: σ₀..σ₃, then A and B over pairs in lexicographic order.
    pub fn all() -> Vec<BasisChannelId> {
        let mut out: Vec<_> = (0..4).map(BasisChannelId::Pauli).collect();
        let pairs: Vec<_> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        out.extend(pairs.iter().map(|&(a, b)| BasisChannelId::A(a, b)));
        out.extend(pairs.iter().map(|&(a, b)| BasisChannelId::B(a, b)));
        out
    }

    pub fn kind(&self) -> ChannelKind {
        match self {
            BasisChannelId::Pauli(_) => ChannelKind::Pauli,
            BasisChannelId::A(..) => ChannelKind::A,
            BasisChannelId::B(..) => ChannelKind::B,
        }
    }

    /// Applies the channel's linear map to an operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match *self {
            BasisChannelId::Pauli(a) => sandwich(a, rho, a),
            BasisChannelId::A(a, b) => pair_action(ChannelKind::A, a, b, rho),
            BasisChannelId::B(a, b) => pair_action(ChannelKind::B, a, b, rho),
        }
    }
}

fn check_pair(alpha: usize, beta: usize) -> Result<(), LocalBasisError> {
    if alpha < beta && beta <= 3 {
        Ok(())
    } else {
        Err(LocalBasisError::Indices(alpha, beta))
    }
}

fn sandwich(a: usize, rho: &ComplexMatrix, b: usize) -> ComplexMatrix {
    &(&pauli(a) * rho) * &pauli(b)
}

/// A or B action for an arbitrary ordered pair (a, b), including a > b.
pub fn pair_action(kind: ChannelKind, a: usize, b: usize, rho: &ComplexMatrix) -> ComplexMatrix {
    let ab = sandwich(a, rho, b);
    let ba = sandwich(b, rho, a);
    match kind {
        ChannelKind::A => (&ab + &ba).scale(C64::new(0.5, 0.0)),
        ChannelKind::B => (&ab - &ba).scale(C64::new(0.0, -0.5)),
        ChannelKind::Pauli => panic!("pair_action called for a Pauli channel"),
    }
}

impl fmt::Display for BasisChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisChannelId::Pauli(a) => write!(f, "S{a}"),
            BasisChannelId::A(a, b) => write!(f, "A{a}{b}"),
            BasisChannelId::B(a, b) => write!(f, "B{a}{b}"),
        }
    }
}

impl FromStr for BasisChannelId {
    type Err = LocalBasisError;

    fn from_str(s: &str) -> Result<Self, LocalBasisError> {
        let bad = || LocalBasisError::Label(s.to_string());
        let mut chars = s.chars();
        let kind = chars.next().ok_or_else(bad)?;
        let digits: Vec<usize> =
            chars.map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(bad)).collect::<Result<_, _>>()?;
        match (kind, digits.as_slice()) {
            ('S', &[a]) => BasisChannelId::pauli(a),
            ('A', &[a, b]) => BasisChannelId::a(a, b),
            ('B', &[a, b]) => BasisChannelId::b(a, b),
            _ => Err(bad()),
        }
    }
}

/// One step of a stochastic realization program.
#[derive(Clone, Debug, PartialEq)]
pub enum RealizationStep {
    Unitary(ComplexMatrix),
    /// Measures along ±axis and multiplies the weight by the outcome's
    /// coefficient; a zero coefficient discards the branch.
    SignedMeasurement { axis: Axis, c_plus: C64, c_minus: C64 },
    Coin(Vec<CoinBranch>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoinBranch {
    pub probability: f64,
    pub sign: f64,
    pub steps: Vec<RealizationStep>,
}

fn unit_axis(alpha: usize) -> Axis {
    let mut n = [0.0; 3];
    n[alpha - 1] = 1.0;
    n
}

/// Levi-Civita sign ε and third index γ for σ_a σ_b = iε σ_γ, with a ≠ b in 1..=3.
fn levi_civita(a: usize, b: usize) -> (f64, usize) {
    let gamma = 6 - a - b;
    let eps = if (b + 3 - a) % 3 == 1 { 1.0 } else { -1.0 };
    (eps, gamma)
}

fn fair_coin(plus: Vec<RealizationStep>, minus: Vec<RealizationStep>) -> RealizationStep {
    RealizationStep::Coin(vec![
        CoinBranch { probability: 0.5, sign: 1.0, steps: plus },
        CoinBranch { probability: 0.5, sign: -1.0, steps: minus },
    ])
}

/// Realization program whose expected channel equals `basis_ptm(id)`.
pub fn realization_program(id: BasisChannelId) -> Vec<RealizationStep> {
    use RealizationStep::*;
    match id {
        BasisChannelId::Pauli(a) => vec![Unitary(pauli(a))],
        BasisChannelId::A(0, b) => vec![SignedMeasurement { axis: unit_axis(b), c_plus: ONE, c_minus: -ONE }],
        BasisChannelId::A(a, b) => {
            let s = C64::new(FRAC_1_SQRT_2, 0.0);
            let plus = (&pauli(a) + &pauli(b)).scale(s);
            let minus = (&pauli(a) - &pauli(b)).scale(s);
            vec![fair_coin(vec![Unitary(plus)], vec![Unitary(minus)])]
        }
        BasisChannelId::B(0, b) => {
            // exp(±iπ/4 σ_b) = R(e_b, ∓π/4)
            let axis = unit_axis(b);
            vec![fair_coin(vec![Unitary(rotation(&axis, -FRAC_PI_4))], vec![Unitary(rotation(&axis, FRAC_PI_4))])]
        }
        BasisChannelId::B(a, b) => {
            // (σ_a ± iσ_b)/2 = σ_a Π(∓ε e_γ)
            let (eps, gamma) = levi_civita(a, b);
            let axis = unit_axis(gamma).map(|x| -eps * x);
            vec![SignedMeasurement { axis, c_plus: ONE, c_minus: -ONE }, Unitary(pauli(a))]
        }
    }
}

/// Exact expected action of a program on an operator, by enumerating every
/// branch with its probability.
pub fn expected_action(steps: &[RealizationStep], rho: &ComplexMatrix) -> ComplexMatrix {
    let mut current = rho.clone();
    for step in steps {
        current = match step {
            RealizationStep::Unitary(u) => &(u * &current) * &u.adjoint(),
            RealizationStep::SignedMeasurement { axis, c_plus, c_minus } => {
                let p = projector(axis);
                let m = projector(&axis.map(|x| -x));
                &(&(&p * &current) * &p).scale(*c_plus) + &(&(&m * &current) * &m).scale(*c_minus)
            }
            RealizationStep::Coin(branches) => {
                let mut acc = ComplexMatrix::zeros(current.rows(), current.cols());
                for br in branches {
                    acc = &acc + &expected_action(&br.steps, &current).scale(C64::new(br.probability * br.sign, 0.0));
                }
                acc
            }
        };
    }
    current
}

/// Executes a program on `qubit` of `state`, returning the accumulated weight.
/// A zero weight means the branch was discarded and the state is meaningless.
pub fn run_program<S: LocalOps, R: Rng + ?Sized>(
    steps: &[RealizationStep],
    state: &mut S,
    qubit: usize,
    rng: &mut R,
) -> C64 {
    let mut weight = ONE;
    for step in steps {
        match step {
            RealizationStep::Unitary(u) => state.apply_1q(qubit, u),
            RealizationStep::SignedMeasurement { axis, c_plus, c_minus } => {
                let p_plus = state.projector_probability(qubit, axis).clamp(0.0, 1.0);
                let (branch_axis, c) =
                    if rng.gen::<f64>() < p_plus { (*axis, *c_plus) } else { (axis.map(|x| -x), *c_minus) };
                if c == ZERO || !state.project(qubit, &branch_axis) {
                    return ZERO;
                }
                weight *= c;
            }
            RealizationStep::Coin(branches) => {
                let r = rng.gen::<f64>();
                let mut acc = 0.0;
                let chosen = branches
                    .iter()
                    .find(|br| {
                        acc += br.probability;
                        r < acc
                    })
                    .unwrap_or_else(|| branches.last().expect("coin has branches"));
                weight *= chosen.sign;
                let w = run_program(&chosen.steps, state, qubit, rng);
                if w == ZERO {
                    return ZERO;
                }
                weight *= w;
            }
        }
    }
    weight
}

/// Single-qubit post-state and weight of one realization.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizationOutcome {
    pub state: QuantumState,
    pub weight: C64,
}

/// Samples one realization of a basis channel on a single-qubit state.
pub fn realize<R: Rng + ?Sized>(
    id: BasisChannelId,
    state: &QuantumState,
    rng: &mut R,
) -> Result<RealizationOutcome, LocalBasisError> {
    if state.num_qubits() != 1 {
        return Err(LocalBasisError::NotSingleQubit(state.num_qubits()));
    }
    let program = realization_program(id);
    let (state, weight) = match state {
        QuantumState::Zero { .. } => (state.clone(), ZERO),
        QuantumState::Pure(s) => {
            let mut s = s.clone();
            let w = run_program(&program, &mut s, 0, rng);
            (QuantumState::Pure(s), w)
        }
        QuantumState::Density(d) => {
            let mut d = d.clone();
            let w = run_program(&program, &mut d, 0, rng);
            (QuantumState::Density(d), w)
        }
    };
    if weight == ZERO {
        return Ok(RealizationOutcome { state: QuantumState::Zero { num_qubits: 1 }, weight });
    }
    Ok(RealizationOutcome { state, weight })
}

/// Single-qubit PTM of a basis channel.
pub fn basis_ptm(id: BasisChannelId) -> Ptm {
    Ptm::from_action(1, |rho| id.apply(rho)).expect("basis channels preserve Hermiticity")
}

/// Numerical rank of a set of PTMs flattened to vectors.
pub fn ptm_rank(ptms: &[Ptm]) -> usize {
    if ptms.is_empty() {
        return 0;
    }
    let len = ptms[0].entries().len();
    let m = DMatrix::from_fn(ptms.len(), len, |i, j| ptms[i].entries()[j]);
    m.rank(1e-10)
}

/// True iff the 16 basis PTMs are linearly independent.
pub fn check_basis_completeness() -> bool {
    let ptms: Vec<Ptm> = BasisChannelId::all().into_iter().map(basis_ptm).collect();
    ptms.len() == 16 && ptm_rank(&ptms) == 16
}
