//! Projective measurements: computational, X-basis, and Bell-basis on qubit
//! pairs, with two evaluation modes. Exact mode enumerates every
//! nonzero-probability outcome combination of a [`MeasurementPlan`];
//! sampled mode draws one trajectory from a seeded stream.
//!
//! Measured qubits stay in the register (projected, not removed) so qubit
//! ids remain stable; analysis traces them out explicitly.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{PureState, QubitId, TOL_EXACT};

/// Branches with probability below this threshold are pruned; renormalizing
/// a null projection is meaningless.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// One of the four Bell states of a qubit pair:
/// `|φ±⟩ = (|00⟩ ± |11⟩)/√2`, `|ψ±⟩ = (|01⟩ ± |10⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
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

    /// Wire label. The minus sign is U+2212, matching the report format.
    pub fn label(&self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi−",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi−",
        }
    }

    /// Parses a wire label; accepts both U+2212 and the ASCII hyphen.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "phi+" => Ok(BellOutcome::PhiPlus),
            "phi−" | "phi-" => Ok(BellOutcome::PhiMinus),
            "psi+" => Ok(BellOutcome::PsiPlus),
            "psi−" | "psi-" => Ok(BellOutcome::PsiMinus),
            other => Err(Error::config(format!("unknown Bell outcome label {other:?}"))),
        }
    }
}

impl std::fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for BellOutcome {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for BellOutcome {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BellOutcome::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Outcome of an X-basis measurement: projection onto `|±⟩ = (|0⟩ ± |1⟩)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// The agent-bit identification used by the protocol: `+` reads as 0,
    /// `−` as 1.
    pub fn as_bit(&self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "−",
        })
    }
}

/// One step of a measurement plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureStep {
    Computational(QubitId),
    XBasis(QubitId),
    BellPair(QubitId, QubitId),
}

impl MeasureStep {
    pub fn targets(&self) -> Vec<QubitId> {
        match self {
            MeasureStep::Computational(q) | MeasureStep::XBasis(q) => vec![*q],
            MeasureStep::BellPair(a, b) => vec![*a, *b],
        }
    }
}

/// An ordered sequence of measurement steps; no qubit may appear twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementPlan {
    steps: Vec<MeasureStep>,
}

impl MeasurementPlan {
    pub fn new(steps: Vec<MeasureStep>) -> Result<Self> {
        let mut seen: Vec<QubitId> = Vec::new();
        for step in &steps {
            if let MeasureStep::BellPair(a, b) = step {
                if a == b {
                    return Err(Error::config(format!(
                        "Bell pair has identical targets {a}"
                    )));
                }
            }
            for q in step.targets() {
                if seen.contains(&q) {
                    return Err(Error::config(format!(
                        "qubit {q} appears in two measurement steps"
                    )));
                }
                seen.push(q);
            }
        }
        Ok(MeasurementPlan { steps })
    }

    pub fn steps(&self) -> &[MeasureStep] {
        &self.steps
    }

    /// Same steps in a different order; `order` must be a permutation of
    /// `0..steps.len()`.
    pub fn permuted(&self, order: &[usize]) -> Result<MeasurementPlan> {
        if order.len() != self.steps.len() {
            return Err(Error::config("permutation length does not match plan"));
        }
        let mut steps = Vec::with_capacity(order.len());
        for &i in order {
            let step = self
                .steps
                .get(i)
                .ok_or_else(|| Error::config(format!("permutation index {i} out of range")))?;
            steps.push(*step);
        }
        MeasurementPlan::new(steps)
    }

    fn check_against(&self, state: &PureState) -> Result<()> {
        for step in &self.steps {
            for q in step.targets() {
                state.register().position_of(q)?;
            }
        }
        Ok(())
    }
}

/// The result of one step, in the same position as the step in the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepOutcome {
    Bit(u8),
    Sign(Sign),
    Bell(BellOutcome),
}

impl std::fmt::Display for StepOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepOutcome::Bit(b) => write!(f, "{b}"),
            StepOutcome::Sign(s) => write!(f, "{s}"),
            StepOutcome::Bell(b) => write!(f, "{b}"),
        }
    }
}

/// One joint outcome of a plan: the per-step results, the Born probability,
/// and the projected (renormalized) post-measurement state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcomes: Vec<StepOutcome>,
    pub probability: f64,
    pub state: PureState,
}

/// The deterministic random stream for a scenario seed.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Per-trajectory stream: derived from `(seed, index)` so trajectory `i` is
/// the same no matter how many ran before it or on which worker.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Unnormalized projection of one outcome of one step: returns the Born
/// probability and, unless pruned, the renormalized state.
fn project(state: &PureState, step: &MeasureStep, outcome: StepOutcome) -> Result<(f64, Option<PureState>)> {
    let register = state.register();
    let amps = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    match (step, outcome) {
        (MeasureStep::Computational(q), StepOutcome::Bit(bit)) => {
            let mask = register.mask(register.position_of(*q)?);
            for (i, a) in amps.iter().enumerate() {
                let b = u8::from(i & mask != 0);
                if b == bit {
                    out[i] = *a;
                }
            }
        }
        (MeasureStep::XBasis(q), StepOutcome::Sign(sign)) => {
            let mask = register.mask(register.position_of(*q)?);
            let s = match sign {
                Sign::Plus => 1.0,
                Sign::Minus => -1.0,
            };
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let j = i | mask;
                    // |±⟩⟨±| acting on the (a0, a1) pair.
                    let overlap = 0.5 * (amps[i] + s * amps[j]);
                    out[i] = overlap;
                    out[j] = s * overlap;
                }
            }
        }
        (MeasureStep::BellPair(qa, qb), StepOutcome::Bell(kind)) => {
            let mask_a = register.mask(register.position_of(*qa)?);
            let mask_b = register.mask(register.position_of(*qb)?);
            let (lo_mask, hi_mask, sign) = match kind {
                BellOutcome::PhiPlus => (0, mask_a | mask_b, 1.0),
                BellOutcome::PhiMinus => (0, mask_a | mask_b, -1.0),
                BellOutcome::PsiPlus => (mask_b, mask_a, 1.0),
                BellOutcome::PsiMinus => (mask_b, mask_a, -1.0),
            };
            let pair = mask_a | mask_b;
            for i in 0..amps.len() {
                if i & pair == 0 {
                    let lo = i | lo_mask;
                    let hi = i | hi_mask;
                    // |B⟩⟨B| with B = (|lo⟩ + sign |hi⟩)/√2.
                    let overlap = 0.5 * (amps[lo] + sign * amps[hi]);
                    out[lo] = overlap;
                    out[hi] = sign * overlap;
                }
            }
        }
        _ => return Err(Error::config("step and outcome kinds do not match")),
    }
    let probability: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    if probability < PRUNE_THRESHOLD {
        return Ok((probability, None));
    }
    let state = PureState::from_amplitudes(register.clone(), out)?;
    Ok((probability, Some(state)))
}

fn outcomes_for(step: &MeasureStep) -> Vec<StepOutcome> {
    match step {
        MeasureStep::Computational(_) => vec![StepOutcome::Bit(0), StepOutcome::Bit(1)],
        MeasureStep::XBasis(_) => vec![StepOutcome::Sign(Sign::Plus), StepOutcome::Sign(Sign::Minus)],
        MeasureStep::BellPair(_, _) => BellOutcome::ALL.map(StepOutcome::Bell).to_vec(),
    }
}

fn sample_step(
    state: &PureState,
    step: &MeasureStep,
    rng: &mut impl Rng,
) -> Result<(StepOutcome, f64, PureState)> {
    state.validate()?;
    let mut projections = Vec::new();
    for outcome in outcomes_for(step) {
        let (p, projected) = project(state, step, outcome)?;
        if let Some(s) = projected {
            projections.push((outcome, p, s));
        }
    }
    let total: f64 = projections.iter().map(|(_, p, _)| *p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invariant(format!(
            "step outcome probabilities sum to {total}, not 1"
        )));
    }
    let mut draw = rng.gen::<f64>() * total;
    for (outcome, p, s) in &projections {
        draw -= p;
        if draw < 0.0 {
            return Ok((*outcome, *p, s.clone()));
        }
    }
    let last = projections.pop().expect("at least one nonzero outcome");
    Ok(last)
}

/// Measures `target` in the computational basis, Born-sampled from `rng`.
pub fn measure_computational(
    state: &PureState,
    target: QubitId,
    rng: &mut impl Rng,
) -> Result<(u8, PureState)> {
    let (outcome, _, s) = sample_step(state, &MeasureStep::Computational(target), rng)?;
    match outcome {
        StepOutcome::Bit(b) => Ok((b, s)),
        _ => unreachable!(),
    }
}

/// Measures `target` in the `|±⟩` basis.
pub fn measure_x_basis(
    state: &PureState,
    target: QubitId,
    rng: &mut impl Rng,
) -> Result<(Sign, PureState)> {
    let (outcome, _, s) = sample_step(state, &MeasureStep::XBasis(target), rng)?;
    match outcome {
        StepOutcome::Sign(sign) => Ok((sign, s)),
        _ => unreachable!(),
    }
}

/// Measures a qubit pair in the Bell basis.
pub fn measure_bell(
    state: &PureState,
    pair: (QubitId, QubitId),
    rng: &mut impl Rng,
) -> Result<(BellOutcome, PureState)> {
    let (outcome, _, s) = sample_step(state, &MeasureStep::BellPair(pair.0, pair.1), rng)?;
    match outcome {
        StepOutcome::Bell(b) => Ok((b, s)),
        _ => unreachable!(),
    }
}

/// Projects a pair onto one fixed Bell outcome, returning the outcome
/// probability and the conditional state (`None` when pruned).
pub fn project_bell(
    state: &PureState,
    pair: (QubitId, QubitId),
    outcome: BellOutcome,
) -> Result<(f64, Option<PureState>)> {
    project(
        state,
        &MeasureStep::BellPair(pair.0, pair.1),
        StepOutcome::Bell(outcome),
    )
}

/// Enumerates every nonzero-probability outcome combination of the plan.
/// Branches come out in lexicographic order over step outcomes and their
/// probabilities sum to 1 within `1e-12`.
pub fn enumerate_branches(state: &PureState, plan: &MeasurementPlan) -> Result<Vec<Branch>> {
    let mut branches = Vec::new();
    enumerate_branches_with(state, plan, &mut |b| {
        branches.push(b);
        Ok(())
    })?;
    Ok(branches)
}

/// Streaming form of [`enumerate_branches`]: hands each branch to `visit`
/// as it is produced instead of collecting them. Large registers with many
/// branches should prefer this; a full branch list holds one state vector
/// per branch.
pub fn enumerate_branches_with(
    state: &PureState,
    plan: &MeasurementPlan,
    visit: &mut dyn FnMut(Branch) -> Result<()>,
) -> Result<()> {
    plan.check_against(state)?;
    state.validate()?;
    let mut outcomes = Vec::with_capacity(plan.steps.len());
    let mut total = 0.0;
    descend(state, plan.steps(), 1.0, &mut outcomes, &mut total, visit)?;
    if (total - 1.0).abs() > TOL_EXACT {
        return Err(Error::invariant(format!(
            "enumerated branch probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

fn descend(
    state: &PureState,
    remaining: &[MeasureStep],
    acc_probability: f64,
    outcomes: &mut Vec<StepOutcome>,
    total: &mut f64,
    visit: &mut dyn FnMut(Branch) -> Result<()>,
) -> Result<()> {
    let Some((step, rest)) = remaining.split_first() else {
        *total += acc_probability;
        return visit(Branch {
            outcomes: outcomes.clone(),
            probability: acc_probability,
            state: state.clone(),
        });
    };
    for outcome in outcomes_for(step) {
        let (p, projected) = project(state, step, outcome)?;
        let joint = acc_probability * p;
        if joint < PRUNE_THRESHOLD {
            continue;
        }
        if let Some(next) = projected {
            outcomes.push(outcome);
            descend(&next, rest, joint, outcomes, total, visit)?;
            outcomes.pop();
        }
    }
    Ok(())
}

/// Samples one trajectory through the plan; the returned branch carries the
/// joint Born probability of the sampled path.
pub fn sample_plan(state: &PureState, plan: &MeasurementPlan, rng: &mut impl Rng) -> Result<Branch> {
    plan.check_against(state)?;
    let mut current = state.clone();
    let mut probability = 1.0;
    let mut outcomes = Vec::with_capacity(plan.steps.len());
    for step in plan.steps() {
        let (outcome, p, next) = sample_step(&current, step, rng)?;
        outcomes.push(outcome);
        probability *= p;
        current = next;
    }
    Ok(Branch {
        outcomes,
        probability,
        state: current,
    })
}
