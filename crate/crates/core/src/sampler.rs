//! Quasiprobability Monte-Carlo estimation of ⟨O⟩ for circuits with cut
//! gates.
//!
//! Each shot evolves |0…0⟩ exactly through uncut gates. At a cut gate it
//! draws a term cᵢ·(Lᵢ ⊗ Rᵢ) with probability |cᵢ|/W, multiplies the running
//! phase by cᵢ/|cᵢ| and realizes Lᵢ and Rᵢ on the two qubits with local
//! operations. The shot value is x = W_total · Re(phase · o′), whose mean is
//! ⟨O⟩ and whose modulus never exceeds W_total · o_max.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{StateVector, C64, ONE, ZERO};
use crate::canonical::pauli_coefficients;
use crate::circuit::{Circuit, CircuitError, CompiledGate, Gate};
use crate::decomposition::{decompose, QpDecomposition};
use crate::local_basis::{realization_program, run_program, BasisChannelId, RealizationStep};
use crate::observable::Observable;

/// Relative slack on the Hoeffding boundedness check.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("no decomposition available for cut gate {0}")]
    MissingDecomposition(usize),
    #[error("decomposition for gate {0} has no terms")]
    EmptyDecomposition(usize),
    #[error("invalid shot plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// How the observable is read out at the end of a shot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// o′ = Tr[O ρ_final] computed exactly.
    #[default]
    ExactTrace,
    /// o′ = ±o_max: a Pauli term drawn ∝ |cₖ| and one of its eigenvalues sampled.
    EigenvalueSample,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShotBudget {
    Fixed(u64),
    /// Shots chosen by the Hoeffding planner for accuracy ε with confidence 1 − δ.
    Target { epsilon: f64, delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub budget: ShotBudget,
    pub seed: u64,
    pub measure_mode: MeasureMode,
}

impl EstimatorConfig {
    pub fn with_shots(shots: u64, seed: u64) -> Self {
        EstimatorConfig { budget: ShotBudget::Fixed(shots), seed, measure_mode: MeasureMode::ExactTrace }
    }

    pub fn mode(mut self, mode: MeasureMode) -> Self {
        self.measure_mode = mode;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    #[serde(rename = "shots")]
    pub shots_used: u64,
    #[serde(rename = "W_total")]
    pub w_total: f64,
    pub o_max: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotRecord {
    /// Product of term phases and realization weights.
    pub phase: C64,
    /// o′_s read from the final state.
    pub sample: f64,
    /// W_total · Re(phase · o′_s)
    pub value: f64,
}

/// 2 (W·o_max/ε)² ln(2/δ), before rounding up.
pub fn hoeffding_shots(epsilon: f64, delta: f64, o_max: f64, w: f64) -> f64 {
    let ratio = w * o_max / epsilon;
    2.0 * ratio * ratio * (2.0 / delta).ln()
}

/// S = ⌈2 (W·o_max/ε)² ln(2/δ)⌉.
pub fn plan_shots(epsilon: f64, delta: f64, o_max: f64, w: f64) -> Result<u64, SamplerError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SamplerError::InvalidPlan(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(SamplerError::InvalidPlan(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(o_max > 0.0 && o_max.is_finite()) {
        return Err(SamplerError::InvalidPlan(format!("o_max must be positive, got {o_max}")));
    }
    if !(w >= 1.0 && w.is_finite()) {
        return Err(SamplerError::InvalidPlan(format!("W must be at least 1, got {w}")));
    }
    let s = hoeffding_shots(epsilon, delta, o_max, w);
    // absorb rounding on products that are integers in exact arithmetic
    let s = (s * (1.0 - BOUND_SLACK)).ceil();
    if s >= u64::MAX as f64 {
        return Err(SamplerError::InvalidPlan(format!("{s} shots does not fit in 64 bits")));
    }
    Ok((s as u64).max(1))
}

/// Realization programs for one side of a term, applied in order.
type SideProgram = Vec<Vec<RealizationStep>>;

/// Sampling tables for one cut gate.
#[derive(Clone, Debug)]
struct CutTable {
    qubits: (usize, usize),
    weight: f64,
    phases: Vec<C64>,
    programs: Vec<(SideProgram, SideProgram)>,
    dist: WeightedIndex<f64>,
}

impl CutTable {
    fn new(gate: usize, qubits: (usize, usize), d: &QpDecomposition) -> Result<Self, SamplerError> {
        if d.terms().is_empty() {
            return Err(SamplerError::EmptyDecomposition(gate));
        }
        let programs_for = |ids: &[BasisChannelId]| ids.iter().map(|&id| realization_program(id)).collect();
        let phases = d.terms().iter().map(|t| t.coefficient / t.coefficient.norm()).collect();
        let programs = d
            .terms()
            .iter()
            .map(|t| (programs_for(t.left.channels()), programs_for(t.right.channels())))
            .collect();
        let dist = WeightedIndex::new(d.terms().iter().map(|t| t.coefficient.norm()))
            .map_err(|_| SamplerError::EmptyDecomposition(gate))?;
        Ok(CutTable { qubits, weight: d.weight(), phases, programs, dist })
    }
}

/// Decompositions for the cut gates of a circuit, keyed by gate index.
#[derive(Clone, Debug, Default)]
pub struct DecompositionCache {
    entries: BTreeMap<usize, QpDecomposition>,
}

impl DecompositionCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the canonical decomposition of every cut gate.
    pub fn for_circuit(c: &Circuit) -> Self {
        let mut cache = Self::new();
        for (i, g) in c.gates().iter().enumerate() {
            if let Gate::Canonical { theta, cut: true, .. } = g {
                cache.insert(i, decompose(&pauli_coefficients(theta)).expect("canonical coefficients are normalized"));
            }
        }
        cache
    }

    pub fn insert(&mut self, gate: usize, d: QpDecomposition) {
        self.entries.insert(gate, d);
    }

    pub fn get(&self, gate: usize) -> Option<&QpDecomposition> {
        self.entries.get(&gate)
    }
}

/// Everything a shot needs, prepared once per estimate.
#[derive(Clone, Debug)]
pub struct ShotPlan {
    num_qubits: usize,
    steps: Vec<PlanStep>,
    observable: Observable,
    term_dist: WeightedIndex<f64>,
    w_total: f64,
    o_max: f64,
    mode: MeasureMode,
}

#[derive(Clone, Debug)]
enum PlanStep {
    Exact(CompiledGate),
    Cut(CutTable),
}

impl ShotPlan {
    pub fn new(
        c: &Circuit,
        o: &Observable,
        cache: &DecompositionCache,
        mode: MeasureMode,
    ) -> Result<Self, SamplerError> {
        c.check_observable(o)?;
        let compiled = c.compile();
        let mut steps = Vec::with_capacity(compiled.len());
        let mut w_total = 1.0;
        for (i, (g, cg)) in c.gates().iter().zip(compiled).enumerate() {
            match g {
                Gate::Canonical { qubits, cut: true, .. } => {
                    let d = cache.get(i).ok_or(SamplerError::MissingDecomposition(i))?;
                    let table = CutTable::new(i, *qubits, d)?;
                    w_total *= table.weight;
                    steps.push(PlanStep::Cut(table));
                }
                _ => steps.push(PlanStep::Exact(cg)),
            }
        }
        let term_dist = WeightedIndex::new(o.terms().iter().map(|t| t.coeff.abs()))
            .or_else(|_| WeightedIndex::new(vec![1.0; o.terms().len()]))
            .expect("observable has terms");
        Ok(ShotPlan {
            num_qubits: c.num_qubits(),
            steps,
            observable: o.clone(),
            term_dist,
            w_total,
            o_max: o.o_max(),
            mode,
        })
    }

    /// Product of per-cut weights.
    pub fn w_total(&self) -> f64 {
        self.w_total
    }

    pub fn o_max(&self) -> f64 {
        self.o_max
    }

    pub fn run_shot<R: Rng + ?Sized>(&self, rng: &mut R) -> ShotRecord {
        let mut state = StateVector::zero_state(self.num_qubits);
        let mut phase = ONE;
        for step in &self.steps {
            match step {
                PlanStep::Exact(g) => g.apply(&mut state),
                PlanStep::Cut(table) => {
                    let k = table.dist.sample(rng);
                    phase *= table.phases[k];
                    let (left, right) = &table.programs[k];
                    for (programs, qubit) in [(left, table.qubits.0), (right, table.qubits.1)] {
                        for program in programs {
                            phase *= run_program(program, &mut state, qubit, rng);
                            if phase == ZERO {
                                return ShotRecord { phase, sample: 0.0, value: 0.0 };
                            }
                        }
                    }
                }
            }
        }
        let sample = match self.mode {
            MeasureMode::ExactTrace => {
                self.observable.terms().iter().map(|t| t.coeff * state.pauli_expectation(t.paulis())).sum()
            }
            MeasureMode::EigenvalueSample => {
                let term = &self.observable.terms()[self.term_dist.sample(rng)];
                let p_plus = ((1.0 + state.pauli_expectation(term.paulis())) / 2.0).clamp(0.0, 1.0);
                let eigenvalue = if rng.gen::<f64>() < p_plus { 1.0 } else { -1.0 };
                self.o_max * term.coeff.signum() * eigenvalue
            }
        };
        let value = self.w_total * (phase * sample).re;
        assert!(
            value.abs() <= self.w_total * self.o_max * (1.0 + BOUND_SLACK) + BOUND_SLACK,
            "shot value {value} exceeds W·o_max"
        );
        ShotRecord { phase, sample, value }
    }
}

/// Per-shot generator derived from (seed, shot index).
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// One shot of the estimator.
pub fn run_shot<R: Rng + ?Sized>(
    c: &Circuit,
    o: &Observable,
    cache: &DecompositionCache,
    mode: MeasureMode,
    rng: &mut R,
) -> Result<ShotRecord, SamplerError> {
    Ok(ShotPlan::new(c, o, cache, mode)?.run_shot(rng))
}

/// Sample mean and standard error of the mean.
///
/// Sums are taken relative to the first sample so that a constant sequence
/// yields its value and a zero error exactly.
pub fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let shift = xs[0];
    let (mut s1, mut s2) = (0.0, 0.0);
    for &x in xs {
        let d = x - shift;
        s1 += d;
        s2 += d * d;
    }
    let nf = n as f64;
    let mean = shift + s1 / nf;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Runs the estimator with decompositions built from the circuit itself.
pub fn estimate(c: &Circuit, o: &Observable, cfg: &EstimatorConfig) -> Result<EstimatorResult, SamplerError> {
    estimate_with_cache(c, o, &DecompositionCache::for_circuit(c), cfg)
}

/// Runs the estimator. Shots execute on the current rayon pool; the result
/// depends only on the seed and configuration.
pub fn estimate_with_cache(
    c: &Circuit,
    o: &Observable,
    cache: &DecompositionCache,
    cfg: &EstimatorConfig,
) -> Result<EstimatorResult, SamplerError> {
    let plan = ShotPlan::new(c, o, cache, cfg.measure_mode)?;
    let shots = match cfg.budget {
        ShotBudget::Fixed(0) => return Err(SamplerError::InvalidPlan("shots must be positive".into())),
        ShotBudget::Fixed(s) => s,
        ShotBudget::Target { epsilon, delta } => plan_shots(epsilon, delta, plan.o_max(), plan.w_total())?,
    };
    let values: Vec<f64> =
        (0..shots).into_par_iter().map(|s| plan.run_shot(&mut shot_rng(cfg.seed, s)).value).collect();
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(EstimatorResult { mean, std_error, shots_used: shots, w_total: plan.w_total(), o_max: plan.o_max(), seed: cfg.seed })
}
