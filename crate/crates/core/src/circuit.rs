//! Circuit model with cut markers, the exact state-vector oracle, and the
//! overlap-based ("gate-based") decomposition baseline.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{pauli, rotation, Axis, ComplexMatrix, LocalOps, StateVector, C64};
use crate::canonical::{canonical_unitary, pauli_coefficients, PauliCoeffs, ThetaVector};
use crate::observable::Observable;
use crate::FORMAT_VERSION;

pub const MAX_QUBITS: usize = 12;
const AXIS_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("{0} qubits requested; supported range is 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("gate {gate}: qubit {qubit} out of range for {num_qubits} qubits")]
    QubitRange { gate: usize, qubit: usize, num_qubits: usize },
    #[error("gate {0}: two-qubit gate acts twice on the same qubit")]
    RepeatedQubit(usize),
    #[error("gate {0}: rotation axis is not unit norm")]
    Axis(usize),
    #[error("gate {0}: non-finite parameter")]
    NonFinite(usize),
    #[error("gate {0}: matrix is not a 2x2 unitary")]
    NotUnitary(usize),
    #[error("gate {0} is not a canonical two-qubit gate")]
    NotCanonical(usize),
    #[error("gate index {0} out of range")]
    GateIndex(usize),
    #[error("observable acts on {observable} qubits but the circuit has {circuit}")]
    ObservableSize { observable: usize, circuit: usize },
    #[error("unsupported format version {0}")]
    Format(u32),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// R(n, θ) = exp[−iθ n·σ] on one qubit.
    Single { qubit: usize, axis: Axis, theta: f64 },
    /// exp[i Σ θ_α σ_α⊗σ_α] on (qubits.0, qubits.1); `cut` marks it for
    /// quasiprobability simulation.
    Canonical { qubits: (usize, usize), theta: ThetaVector, cut: bool },
    Raw1q { qubit: usize, matrix: ComplexMatrix },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(CircuitError::QubitCount(num_qubits));
        }
        let in_range = |gate: usize, qubit: usize| {
            if qubit < num_qubits {
                Ok(())
            } else {
                Err(CircuitError::QubitRange { gate, qubit, num_qubits })
            }
        };
        for (i, g) in gates.iter().enumerate() {
            match g {
                Gate::Single { qubit, axis, theta } => {
                    in_range(i, *qubit)?;
                    if !theta.is_finite() || axis.iter().any(|x| !x.is_finite()) {
                        return Err(CircuitError::NonFinite(i));
                    }
                    let norm: f64 = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > AXIS_TOL {
                        return Err(CircuitError::Axis(i));
                    }
                }
                Gate::Canonical { qubits: (a, b), theta, .. } => {
                    in_range(i, *a)?;
                    in_range(i, *b)?;
                    if a == b {
                        return Err(CircuitError::RepeatedQubit(i));
                    }
                    if theta.0.iter().any(|t| !t.is_finite()) {
                        return Err(CircuitError::NonFinite(i));
                    }
                }
                Gate::Raw1q { qubit, matrix } => {
                    in_range(i, *qubit)?;
                    if matrix.dims() != (2, 2) || !matrix.is_unitary(UNITARY_TOL) {
                        return Err(CircuitError::NotUnitary(i));
                    }
                }
            }
        }
        Ok(Circuit { num_qubits, gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Indices of gates marked as cut.
    pub fn cut_indices(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g, Gate::Canonical { cut: true, .. }))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn check_observable(&self, o: &Observable) -> Result<(), CircuitError> {
        if o.num_qubits() != self.num_qubits {
            return Err(CircuitError::ObservableSize { observable: o.num_qubits(), circuit: self.num_qubits });
        }
        Ok(())
    }

    /// Gate list with matrices precomputed.
    pub fn compile(&self) -> Vec<CompiledGate> {
        self.gates
            .iter()
            .map(|g| match g {
                Gate::Single { qubit, axis, theta } => CompiledGate::OneQubit { qubit: *qubit, matrix: rotation(axis, *theta) },
                Gate::Raw1q { qubit, matrix } => CompiledGate::OneQubit { qubit: *qubit, matrix: matrix.clone() },
                Gate::Canonical { qubits, theta, .. } => {
                    CompiledGate::TwoQubit { qubits: *qubits, matrix: canonical_unitary(theta) }
                }
            })
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let doc: CircuitDoc = serde_json::from_str(text)?;
        Ok(Circuit::try_from(doc)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CircuitDoc::from(self)).expect("circuit serializes")
    }
}

#[derive(Clone, Debug)]
pub enum CompiledGate {
    OneQubit { qubit: usize, matrix: ComplexMatrix },
    TwoQubit { qubits: (usize, usize), matrix: ComplexMatrix },
}

impl CompiledGate {
    pub fn apply(&self, state: &mut StateVector) {
        match self {
            CompiledGate::OneQubit { qubit, matrix } => state.apply_1q(*qubit, matrix),
            CompiledGate::TwoQubit { qubits: (a, b), matrix } => state.apply_2q(*a, *b, matrix),
        }
    }
}

/// Evolves |0…0⟩ through the circuit, replacing gate `replace.0` by
/// σ_α⊗σ_α with α = `replace.1`.
fn evolve(c: &Circuit, compiled: &[CompiledGate], replace: Option<(usize, usize)>) -> StateVector {
    let mut state = StateVector::zero_state(c.num_qubits);
    for (i, g) in compiled.iter().enumerate() {
        match (replace, &c.gates[i]) {
            (Some((j, alpha)), Gate::Canonical { qubits: (a, b), .. }) if j == i => {
                if alpha != 0 {
                    state.apply_1q(*a, &pauli(alpha));
                    state.apply_1q(*b, &pauli(alpha));
                }
            }
            _ => g.apply(&mut state),
        }
    }
    state
}

/// Final state of the circuit applied to |0…0⟩, cuts ignored.
pub fn simulate(c: &Circuit) -> StateVector {
    evolve(c, &c.compile(), None)
}

/// ⟨0|V†OV|0⟩ by dense state-vector evolution; cut markers are ignored.
pub fn exact_expectation(c: &Circuit, o: &Observable) -> Result<f64, CircuitError> {
    c.check_observable(o)?;
    let state = simulate(c);
    Ok(o.terms().iter().map(|t| t.coeff * state.pauli_expectation(t.paulis())).sum())
}

/// G(D) = Σ_{α,α′} |d_α′* d_α| = (Σ_α |d_α|)².
pub fn gate_based_cost(d: &PauliCoeffs) -> f64 {
    let s: f64 = d.as_array().iter().map(|z| z.norm()).sum();
    s * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateBasedEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub shots: u64,
    /// G(D) of the replaced gate.
    pub cost: f64,
}

/// Monte-Carlo estimate of Σ_{α,α′} d_α′* d_α ⟨0|V†_{α′} O V_α|0⟩, sampling
/// (α, α′) ∝ |d_α′* d_α|. The overlaps come from the dense simulator.
pub fn gate_based_estimate<R: Rng + ?Sized>(
    c: &Circuit,
    gate: usize,
    o: &Observable,
    shots: u64,
    rng: &mut R,
) -> Result<GateBasedEstimate, CircuitError> {
    c.check_observable(o)?;
    let theta = match c.gates.get(gate) {
        Some(Gate::Canonical { theta, .. }) => *theta,
        Some(_) => return Err(CircuitError::NotCanonical(gate)),
        None => return Err(CircuitError::GateIndex(gate)),
    };
    let d = pauli_coefficients(&theta);
    let compiled = c.compile();
    let branches: Vec<StateVector> = (0..4).map(|alpha| evolve(c, &compiled, Some((gate, alpha)))).collect();
    let images: Vec<StateVector> = branches
        .iter()
        .map(|psi| {
            let mut acc = vec![C64::new(0.0, 0.0); psi.amplitudes().len()];
            for t in o.terms() {
                let mut p = psi.clone();
                p.apply_pauli_string(t.paulis());
                for (a, b) in acc.iter_mut().zip(p.amplitudes()) {
                    *a += b * t.coeff;
                }
            }
            StateVector::from_amplitudes(acc).expect("power-of-two length")
        })
        .collect();

    let mut pairs = Vec::with_capacity(16);
    let mut weights = Vec::with_capacity(16);
    for ap in 0..4 {
        for a in 0..4 {
            let coeff = d.get(ap).conj() * d.get(a);
            if coeff.norm() > 0.0 {
                // ⟨ψ_α′|O|ψ_α⟩
                let overlap = branches[ap].inner(&images[a]);
                pairs.push((coeff / coeff.norm(), overlap));
                weights.push(coeff.norm());
            }
        }
    }
    let cost = gate_based_cost(&d);
    let dist = WeightedIndex::new(&weights).expect("at least one nonzero coefficient");
    let samples: Vec<f64> = (0..shots)
        .map(|_| {
            let (phase, overlap) = pairs[dist.sample(rng)];
            cost * (phase * overlap).re
        })
        .collect();
    let (mean, std_error) = crate::sampler::mean_and_std_error(&samples);
    Ok(GateBasedEstimate { mean, std_error, shots, cost })
}

/// A complex entry written as a plain real or as `[re, im]`.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexEntry> for C64 {
    fn from(e: ComplexEntry) -> C64 {
        match e {
            ComplexEntry::Real(x) => C64::new(x, 0.0),
            ComplexEntry::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GateDoc {
    Single { q: usize, axis: [f64; 3], theta: f64 },
    Canonical { qs: [usize; 2], theta: [f64; 3], #[serde(default)] cut: bool },
    Raw1q { q: usize, matrix: [[ComplexEntry; 2]; 2] },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDoc {
    #[serde(default = "crate::default_format")]
    pub format: u32,
    pub qubits: usize,
    pub gates: Vec<GateDoc>,
}

impl TryFrom<CircuitDoc> for Circuit {
    type Error = CircuitError;

    fn try_from(doc: CircuitDoc) -> Result<Self, CircuitError> {
        if doc.format != FORMAT_VERSION {
            return Err(CircuitError::Format(doc.format));
        }
        let gates = doc
            .gates
            .into_iter()
            .map(|g| match g {
                GateDoc::Single { q, axis, theta } => Gate::Single { qubit: q, axis, theta },
                GateDoc::Canonical { qs, theta, cut } => {
                    Gate::Canonical { qubits: (qs[0], qs[1]), theta: ThetaVector(theta), cut }
                }
                GateDoc::Raw1q { q, matrix } => Gate::Raw1q {
                    qubit: q,
                    matrix: ComplexMatrix::from_vec(2, 2, matrix.iter().flatten().map(|&e| e.into()).collect()),
                },
            })
            .collect();
        Circuit::new(doc.qubits, gates)
    }
}

impl From<&Circuit> for CircuitDoc {
    fn from(c: &Circuit) -> Self {
        let gates = c
            .gates
            .iter()
            .map(|g| match g {
                Gate::Single { qubit, axis, theta } => GateDoc::Single { q: *qubit, axis: *axis, theta: *theta },
                Gate::Canonical { qubits, theta, cut } => {
                    GateDoc::Canonical { qs: [qubits.0, qubits.1], theta: theta.0, cut: *cut }
                }
                Gate::Raw1q { qubit, matrix } => {
                    let e = |i, j| {
                        let z: C64 = matrix[(i, j)];
                        ComplexEntry::Pair([z.re, z.im])
                    };
                    GateDoc::Raw1q { q: *qubit, matrix: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]] }
                }
            })
            .collect();
        CircuitDoc { format: FORMAT_VERSION, qubits: c.num_qubits, gates }
    }
}
