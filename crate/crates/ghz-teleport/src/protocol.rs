//! The controlled-teleportation protocol.
//!
//! A sender (Alice) holds `m` message qubits and prepares an entangled
//! channel that couples `m` EPR pairs to an `(n+1)`-qubit GHZ state. One
//! EPR qubit per pair and the GHZ tail stay with Alice, the other EPR
//! qubits go to the receiver (Bob), and each of the `n` agents gets one
//! GHZ qubit. Alice Bell-measures each message qubit against her EPR
//! qubit; the agents and Alice measure their GHZ qubits (Hadamard then
//! computational basis, or directly in the X basis); everyone announces
//! their results. From the Bell outcomes and the joint parity of the
//! announced bits Bob picks one Pauli per receiver qubit and restores the
//! messages exactly — but only if every agent reports.
//!
//! Runs are driven by a [`ScenarioConfig`](crate::scenario::ScenarioConfig):
//! exact mode enumerates all measurement branches, sampled mode draws
//! seeded trajectories.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    sample_plan, trajectory_rng, BellOutcome, Branch, MeasureStep, MeasurementPlan, StepOutcome,
};
use crate::qstate::{PureState, QubitId, Register, SingleQubitGate, TOL_EXACT};
use crate::scenario::{Mode, ScenarioConfig};

/// Hard ceiling on the full register size `3m + n + 1` when no scenario
/// config is in play.
pub const DEFAULT_REGISTER_LIMIT: usize = 20;

/// A single-qubit message state `alpha|0⟩ + beta|1⟩`, kept normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageState {
    alpha: Complex64,
    beta: Complex64,
}

impl MessageState {
    /// Normalizes `(alpha, beta)`; a zero pair is an invariant error.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if norm < 1e-300 {
            return Err(Error::invariant("message state has zero norm"));
        }
        Ok(MessageState {
            alpha: alpha / norm,
            beta: beta / norm,
        })
    }

    /// Bloch-sphere form `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` with
    /// `θ ∈ [0, π]` and `φ ∈ [0, 2π)`.
    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::config(format!("theta {theta} outside [0, π]")));
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&phi) {
            return Err(Error::config(format!("phi {phi} outside [0, 2π)")));
        }
        let alpha = Complex64::new((theta / 2.0).cos(), 0.0);
        let beta = Complex64::from_polar((theta / 2.0).sin(), phi);
        Ok(MessageState { alpha, beta })
    }

    /// Haar-random pure state: `cos θ` uniform on `[-1, 1]`, `φ` uniform
    /// on `[0, 2π)`.
    pub fn random(rng: &mut impl Rng) -> Self {
        let cos_theta: f64 = rng.gen_range(-1.0..=1.0);
        let theta = cos_theta.acos();
        let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        MessageState::from_angles(theta, phi).expect("angles are in range")
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Bloch angles `(θ, φ)` of this state, global phase dropped:
    /// `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
    pub fn bloch_angles(&self) -> (f64, f64) {
        let theta = 2.0 * self.beta.norm().atan2(self.alpha.norm());
        let tau = 2.0 * std::f64::consts::PI;
        let mut phi = (self.beta.arg() - self.alpha.arg()).rem_euclid(tau);
        if phi >= tau {
            phi = 0.0;
        }
        (theta, phi)
    }

    /// The state as a one-qubit register on `q`.
    pub fn as_pure(&self, q: QubitId) -> PureState {
        PureState::single_qubit(q, self.alpha, self.beta).expect("message states are normalized")
    }
}

/// Which agents perform and report their measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooperationPolicy {
    n: usize,
    cooperating: BTreeSet<usize>,
}

impl CooperationPolicy {
    /// `cooperating ⊆ {1..n}`; anything else is a configuration error.
    pub fn new(n: usize, cooperating: BTreeSet<usize>) -> Result<Self> {
        for &l in &cooperating {
            if l == 0 || l > n {
                return Err(Error::config(format!(
                    "cooperating agent {l} outside 1..={n}"
                )));
            }
        }
        Ok(CooperationPolicy { n, cooperating })
    }

    pub fn full(n: usize) -> Self {
        CooperationPolicy {
            n,
            cooperating: (1..=n).collect(),
        }
    }

    /// All agents cooperate except the last `k`.
    pub fn withhold_last(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::config(format!("cannot withhold {k} of {n} agents")));
        }
        Ok(CooperationPolicy {
            n,
            cooperating: (1..=n - k).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cooperating(&self) -> &BTreeSet<usize> {
        &self.cooperating
    }

    pub fn withheld(&self) -> Vec<usize> {
        (1..=self.n)
            .filter(|l| !self.cooperating.contains(l))
            .collect()
    }

    /// Number of withheld agents `k = n − |cooperating|`.
    pub fn k(&self) -> usize {
        self.n - self.cooperating.len()
    }

    pub fn is_full(&self) -> bool {
        self.k() == 0
    }
}

/// How the GHZ-sector qubits are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Hadamard on each GHZ qubit, then a computational measurement.
    #[default]
    HadamardThenZ,
    /// Measure directly in the `|±⟩` basis; `+` reads as 0, `−` as 1.
    DirectXBasis,
}

/// Bob's correction rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Infer the branch from the full transcript; needs every agent bit.
    FullCorrection,
    /// Apply the correction as if the branch were `Psi`; Bob's default when
    /// some agent withholds.
    AssumePsi,
    /// Leave the receiver qubits untouched.
    NoCorrection,
}

/// Which of the two post-measurement families the receiver qubits are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchLabel {
    Psi,
    PsiPrime,
}

/// The classical record of one protocol branch or trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transcript {
    /// Alice's Bell outcome for each pair `(i, i')`, in message order.
    pub bell_outcomes: Vec<BellOutcome>,
    /// Announced GHZ bits, keyed by agent index; only cooperating agents
    /// appear. X-basis outcomes are recorded under `+ ↔ 0`, `− ↔ 1`.
    pub agent_bits: BTreeMap<usize, u8>,
    /// Alice's own GHZ bit.
    pub alice_ghz_bit: u8,
    pub variant: Variant,
}

/// One exact branch or sampled trajectory after corrections.
#[derive(Debug, Clone)]
pub struct ProtocolBranch {
    pub transcript: Transcript,
    pub probability: f64,
    /// Full-register state: measured qubits projected in place, receiver
    /// qubits corrected according to the strategy.
    pub state: PureState,
    /// The branch label Bob used for his correction, if any.
    pub label: Option<BranchLabel>,
}

impl ProtocolBranch {
    /// Fidelity of receiver qubit `i''` against message `i`.
    pub fn receiver_fidelity(&self, index: usize, message: &MessageState) -> Result<f64> {
        let q = QubitId::EprReceiver(index);
        self.state
            .subsystem_fidelity(&[q], &message.as_pure(q))
    }

    /// Joint fidelity of all receiver qubits against the message product.
    pub fn receiver_fidelity_all(&self, messages: &[MessageState]) -> Result<f64> {
        let target = receiver_target(messages)?;
        self.state
            .subsystem_fidelity(&receiver_qubits(messages.len()), &target)
    }
}

/// The result of one protocol run.
#[derive(Debug, Clone)]
pub enum ProtocolOutcome {
    /// All nonzero-probability branches, in deterministic order.
    Exact(Vec<ProtocolBranch>),
    /// One sampled trajectory.
    Sampled(ProtocolBranch),
}

/// The receiver's qubits `1''..m''`.
pub fn receiver_qubits(m: usize) -> Vec<QubitId> {
    (1..=m).map(QubitId::EprReceiver).collect()
}

/// The message product state relocated onto the receiver qubits.
pub fn receiver_target(messages: &[MessageState]) -> Result<PureState> {
    let parts: Vec<PureState> = messages
        .iter()
        .enumerate()
        .map(|(i, msg)| msg.as_pure(QubitId::EprReceiver(i + 1)))
        .collect();
    PureState::product(&parts)
}

/// Builds the entangled channel for `m` message qubits and `n` agents:
/// the product of `m` EPR pairs `|00⟩ + |11⟩` tensored with the GHZ state
/// `|0…0⟩|0⟩ + |1…1⟩|1⟩`, plus the product of `m` twisted pairs
/// `|01⟩ − |10⟩` tensored with `|0…0⟩|0⟩ − |1…1⟩|1⟩`, normalized globally.
/// Lives on the channel register `[1'..m' | 1''..m'' | A1..An | a]`.
pub fn prepare_channel_state(m: usize, n: usize) -> Result<PureState> {
    prepare_channel_state_with_limit(m, n, DEFAULT_REGISTER_LIMIT)
}

pub fn prepare_channel_state_with_limit(m: usize, n: usize, limit: usize) -> Result<PureState> {
    if m < 1 || n < 1 {
        return Err(Error::config("need at least one message qubit and one agent"));
    }
    if 3 * m + n + 1 > limit {
        return Err(Error::config(format!(
            "register of {} qubits exceeds the limit of {limit}",
            3 * m + n + 1
        )));
    }
    let register = Register::channel(m, n);
    let sender_mask: Vec<usize> = (0..m).map(|i| register.mask(i)).collect();
    let receiver_mask: Vec<usize> = (0..m).map(|i| register.mask(m + i)).collect();
    let mut ghz_ones = register.mask(2 * m + n); // Alice's GHZ qubit
    for l in 0..n {
        ghz_ones |= register.mask(2 * m + l);
    }

    let mut amps = vec![Complex64::new(0.0, 0.0); register.dim()];
    let one = Complex64::new(1.0, 0.0);
    for b in 0..(1usize << m) {
        // Plain pairs: i' = i'' = b_i, GHZ sector |0…0⟩ and |1…1⟩ both +.
        let mut plain = 0usize;
        // Twisted pairs: i' = b_i, i'' = 1 − b_i, sign (−1)^{#1s in b},
        // GHZ sector + on |0…0⟩ and − on |1…1⟩.
        let mut twisted = 0usize;
        for i in 0..m {
            if (b >> i) & 1 == 1 {
                plain |= sender_mask[i] | receiver_mask[i];
                twisted |= sender_mask[i];
            } else {
                twisted |= receiver_mask[i];
            }
        }
        let sign = if b.count_ones() % 2 == 0 { one } else { -one };
        amps[plain] += one;
        amps[plain | ghz_ones] += one;
        amps[twisted] += sign;
        amps[twisted | ghz_ones] -= sign;
    }
    PureState::from_amplitudes(register, amps)
}

/// Tensors the message qubits onto the channel, producing the full
/// scenario register `[1..m | 1'..m' | 1''..m'' | A1..An | a]`.
pub fn compose_with_messages(messages: &[MessageState], channel: &PureState) -> Result<PureState> {
    let m = channel
        .register()
        .qubits()
        .iter()
        .filter(|q| matches!(q, QubitId::EprSender(_)))
        .count();
    let n = channel
        .register()
        .qubits()
        .iter()
        .filter(|q| matches!(q, QubitId::AgentGhz(_)))
        .count();
    if channel.register() != &Register::channel(m, n) {
        return Err(Error::config("state is not on a channel register"));
    }
    if messages.len() != m {
        return Err(Error::config(format!(
            "got {} messages for a channel with {m} EPR pairs",
            messages.len()
        )));
    }
    let parts: Vec<PureState> = messages
        .iter()
        .enumerate()
        .map(|(i, msg)| msg.as_pure(QubitId::Message(i + 1)))
        .collect();
    PureState::product(&parts)?.tensor(channel)
}

/// Decides which family the receiver qubits are in from the announced GHZ
/// bits: `Psi` when the agent bits have even parity and Alice saw 0, or odd
/// parity and Alice saw 1; `PsiPrime` otherwise.
pub fn parity_branch(agent_bits: &[u8], alice_bit: u8) -> BranchLabel {
    let ones: u32 = agent_bits.iter().map(|&b| u32::from(b)).sum();
    if ones % 2 == u32::from(alice_bit) % 2 {
        BranchLabel::Psi
    } else {
        BranchLabel::PsiPrime
    }
}

/// The Pauli (or identity) that returns Bob's conditional state to
/// `alpha|0⟩ + beta|1⟩`, up to a global phase.
pub fn correction_for(outcome: BellOutcome, branch: BranchLabel) -> SingleQubitGate {
    match (outcome, branch) {
        (BellOutcome::PhiPlus, BranchLabel::Psi) => SingleQubitGate::identity(),
        (BellOutcome::PhiMinus, BranchLabel::Psi) => SingleQubitGate::z(),
        (BellOutcome::PsiPlus, BranchLabel::Psi) => SingleQubitGate::x(),
        (BellOutcome::PsiMinus, BranchLabel::Psi) => SingleQubitGate::y(),
        (BellOutcome::PhiPlus, BranchLabel::PsiPrime) => SingleQubitGate::y(),
        (BellOutcome::PhiMinus, BranchLabel::PsiPrime) => SingleQubitGate::x(),
        (BellOutcome::PsiPlus, BranchLabel::PsiPrime) => SingleQubitGate::z(),
        (BellOutcome::PsiMinus, BranchLabel::PsiPrime) => SingleQubitGate::identity(),
    }
}

/// GHZ qubits that get measured under `policy`: cooperating agents in
/// ascending order, withheld agents only when `withheld_measure` is set,
/// then Alice's GHZ qubit.
pub(crate) fn measured_ghz_qubits(policy: &CooperationPolicy, withheld_measure: bool) -> Vec<QubitId> {
    let mut qubits: Vec<QubitId> = (1..=policy.n())
        .filter(|l| withheld_measure || policy.cooperating().contains(l))
        .map(QubitId::AgentGhz)
        .collect();
    qubits.push(QubitId::AliceGhz);
    qubits
}

/// The canonical measurement plan: Bell pairs `(i, i')` in message order,
/// then the GHZ-sector readouts.
pub fn protocol_plan(
    m: usize,
    policy: &CooperationPolicy,
    variant: Variant,
    withheld_measure: bool,
) -> Result<MeasurementPlan> {
    let mut steps: Vec<MeasureStep> = (1..=m)
        .map(|i| MeasureStep::BellPair(QubitId::Message(i), QubitId::EprSender(i)))
        .collect();
    for q in measured_ghz_qubits(policy, withheld_measure) {
        steps.push(match variant {
            Variant::HadamardThenZ => MeasureStep::Computational(q),
            Variant::DirectXBasis => MeasureStep::XBasis(q),
        });
    }
    MeasurementPlan::new(steps)
}

/// The fully composed pre-measurement state, Hadamards included when the
/// variant asks for them.
fn prepared_state(config: &ScenarioConfig, messages: &[MessageState]) -> Result<PureState> {
    let channel = prepare_channel_state_with_limit(config.m, config.n, config.register_limit)?;
    let mut state = compose_with_messages(messages, &channel)?;
    if config.variant == Variant::HadamardThenZ {
        let policy = config.resolve_policy()?;
        for q in measured_ghz_qubits(&policy, config.withheld_measure) {
            state = state.apply_gate(&SingleQubitGate::hadamard(), q)?;
        }
    }
    Ok(state)
}

/// Turns a raw measurement branch into a protocol branch: reads the
/// transcript off the plan, then applies Bob's corrections.
fn finish_branch(
    raw: Branch,
    plan: &MeasurementPlan,
    config: &ScenarioConfig,
    policy: &CooperationPolicy,
) -> Result<ProtocolBranch> {
    let mut bell_by_index: BTreeMap<usize, BellOutcome> = BTreeMap::new();
    let mut all_agent_bits: BTreeMap<usize, u8> = BTreeMap::new();
    let mut alice_bit: Option<u8> = None;
    for (step, outcome) in plan.steps().iter().zip(&raw.outcomes) {
        let bit = match outcome {
            StepOutcome::Bit(b) => Some(*b),
            StepOutcome::Sign(s) => Some(s.as_bit()),
            StepOutcome::Bell(_) => None,
        };
        match (step, outcome) {
            (MeasureStep::BellPair(QubitId::Message(i), _), StepOutcome::Bell(b)) => {
                bell_by_index.insert(*i, *b);
            }
            (MeasureStep::Computational(QubitId::AgentGhz(l)), _)
            | (MeasureStep::XBasis(QubitId::AgentGhz(l)), _) => {
                all_agent_bits.insert(*l, bit.expect("GHZ steps yield bits"));
            }
            (MeasureStep::Computational(QubitId::AliceGhz), _)
            | (MeasureStep::XBasis(QubitId::AliceGhz), _) => {
                alice_bit = bit;
            }
            _ => {
                return Err(Error::config("unexpected step in protocol plan"));
            }
        }
    }
    let bell_outcomes: Vec<BellOutcome> = (1..=config.m)
        .map(|i| {
            bell_by_index
                .get(&i)
                .copied()
                .ok_or_else(|| Error::config(format!("no Bell outcome for pair ({i}, {i}')")))
        })
        .collect::<Result<_>>()?;
    let alice_ghz_bit =
        alice_bit.ok_or_else(|| Error::config("plan does not measure Alice's GHZ qubit"))?;

    let label = match config.resolve_strategy() {
        Strategy::FullCorrection => {
            let bits: Vec<u8> = (1..=config.n)
                .map(|l| {
                    all_agent_bits.get(&l).copied().ok_or_else(|| {
                        Error::config("full correction needs every agent's bit")
                    })
                })
                .collect::<Result<_>>()?;
            Some(parity_branch(&bits, alice_ghz_bit))
        }
        Strategy::AssumePsi => Some(BranchLabel::Psi),
        Strategy::NoCorrection => None,
    };

    let mut state = raw.state;
    if let Some(label) = label {
        for (i, outcome) in bell_outcomes.iter().enumerate() {
            let gate = correction_for(*outcome, label);
            state = state.apply_gate(&gate, QubitId::EprReceiver(i + 1))?;
        }
    }

    // Only cooperating agents report.
    let agent_bits: BTreeMap<usize, u8> = all_agent_bits
        .into_iter()
        .filter(|(l, _)| policy.cooperating().contains(l))
        .collect();

    Ok(ProtocolBranch {
        transcript: Transcript {
            bell_outcomes,
            agent_bits,
            alice_ghz_bit,
            variant: config.variant,
        },
        probability: raw.probability,
        state,
        label,
    })
}

/// Exact run: every nonzero-probability branch of the protocol for one
/// message tuple.
pub fn run_exact(config: &ScenarioConfig, messages: &[MessageState]) -> Result<Vec<ProtocolBranch>> {
    let mut branches = Vec::new();
    for_each_exact_branch(config, messages, &mut |b| {
        branches.push(b);
        Ok(())
    })?;
    Ok(branches)
}

/// Streaming exact run: hands each finished branch to `visit` without
/// collecting them. At the larger register sizes a full branch list pins
/// one state vector per branch, which adds up fast.
pub fn for_each_exact_branch(
    config: &ScenarioConfig,
    messages: &[MessageState],
    visit: &mut dyn FnMut(ProtocolBranch) -> Result<()>,
) -> Result<()> {
    let plan_order: Vec<usize> = (0..config.m + plan_ghz_steps(config)?).collect();
    for_each_exact_branch_with_order(config, messages, &plan_order, visit)
}

fn plan_ghz_steps(config: &ScenarioConfig) -> Result<usize> {
    let policy = config.resolve_policy()?;
    Ok(measured_ghz_qubits(&policy, config.withheld_measure).len())
}

/// Exact run with the measurement steps permuted; `order` indexes the
/// canonical plan (`m` Bell steps followed by the GHZ readouts). Outcome
/// statistics do not depend on the order.
pub fn run_exact_with_order(
    config: &ScenarioConfig,
    messages: &[MessageState],
    order: &[usize],
) -> Result<Vec<ProtocolBranch>> {
    let mut branches = Vec::new();
    for_each_exact_branch_with_order(config, messages, order, &mut |b| {
        branches.push(b);
        Ok(())
    })?;
    Ok(branches)
}

/// Streaming form of [`run_exact_with_order`].
pub fn for_each_exact_branch_with_order(
    config: &ScenarioConfig,
    messages: &[MessageState],
    order: &[usize],
    visit: &mut dyn FnMut(ProtocolBranch) -> Result<()>,
) -> Result<()> {
    config.validate()?;
    let policy = config.resolve_policy()?;
    let state = prepared_state(config, messages)?;
    let plan = protocol_plan(config.m, &policy, config.variant, config.withheld_measure)?
        .permuted(order)?;
    crate::measurement::enumerate_branches_with(&state, &plan, &mut |raw| {
        visit(finish_branch(raw, &plan, config, &policy)?)
    })
}

/// Samples one trajectory; the random stream is derived from
/// `(config.seed, trajectory)` so any trajectory can be reproduced alone.
pub fn run_trajectory(
    config: &ScenarioConfig,
    messages: &[MessageState],
    trajectory: u64,
) -> Result<ProtocolBranch> {
    config.validate()?;
    let policy = config.resolve_policy()?;
    let state = prepared_state(config, messages)?;
    let plan = protocol_plan(config.m, &policy, config.variant, config.withheld_measure)?;
    let mut rng = trajectory_rng(config.seed, trajectory);
    let raw = sample_plan(&state, &plan, &mut rng)?;
    finish_branch(raw, &plan, config, &policy)
}

/// Runs the scenario on its first message tuple: all branches in exact
/// mode, trajectory 0 in sampled mode. Multi-tuple and multi-trajectory
/// sweeps iterate [`run_exact`]/[`run_trajectory`] directly.
pub fn run_protocol(config: &ScenarioConfig) -> Result<ProtocolOutcome> {
    config.validate()?;
    let tuples = config.message_tuples()?;
    let messages = tuples
        .first()
        .ok_or_else(|| Error::config("scenario yields no message tuples"))?;
    match config.mode {
        Mode::Exact => Ok(ProtocolOutcome::Exact(run_exact(config, messages)?)),
        Mode::Sampled { .. } => Ok(ProtocolOutcome::Sampled(run_trajectory(config, messages, 0)?)),
    }
}

/// Checks that the two readout variants produce identical branch
/// statistics and identical receiver-side states, branch for branch, under
/// the identification `+ ↔ 0`, `− ↔ 1`.
pub fn variant_equivalence_check(config: &ScenarioConfig) -> Result<bool> {
    config.validate()?;
    let tuples = config.message_tuples()?;
    let messages = tuples
        .first()
        .ok_or_else(|| Error::config("scenario yields no message tuples"))?;
    let policy = config.resolve_policy()?;

    let mut hadamard_cfg = config.clone();
    hadamard_cfg.variant = Variant::HadamardThenZ;
    let mut xbasis_cfg = config.clone();
    xbasis_cfg.variant = Variant::DirectXBasis;

    let a = run_exact(&hadamard_cfg, messages)?;
    let b = run_exact(&xbasis_cfg, messages)?;
    if a.len() != b.len() {
        return Ok(false);
    }

    // Receiver qubits plus any unmeasured GHZ qubits carry all that is
    // left of the state; compare reduced operators there.
    let mut compare: Vec<QubitId> = receiver_qubits(config.m);
    if !config.withheld_measure {
        compare.extend(policy.withheld().into_iter().map(QubitId::AgentGhz));
    }

    for (ba, bb) in a.iter().zip(&b) {
        let key_a = (
            &ba.transcript.bell_outcomes,
            &ba.transcript.agent_bits,
            ba.transcript.alice_ghz_bit,
        );
        let key_b = (
            &bb.transcript.bell_outcomes,
            &bb.transcript.agent_bits,
            bb.transcript.alice_ghz_bit,
        );
        if key_a != key_b {
            return Ok(false);
        }
        if (ba.probability - bb.probability).abs() > TOL_EXACT {
            return Ok(false);
        }
        let rho_a = ba.state.reduced_density(&compare)?;
        let rho_b = bb.state.reduced_density(&compare)?;
        if rho_a.max_entry_delta(&rho_b)? > TOL_EXACT {
            return Ok(false);
        }
    }
    Ok(true)
}
