//! Scenario configuration: the single structured record that drives
//! protocol runs, analysis pipelines, and the command-line reports.
//!
//! Configs are JSON-compatible. Complex amplitudes are written as
//! `[re, im]` pairs, angles as plain radians. See the book's command-line
//! chapter for a worked example.

use serde::{Deserialize, Serialize};

use crate::analysis::{AngleMeasure, QuadratureSpec};
use crate::error::{Error, Result};
use crate::measurement::trajectory_rng;
use crate::protocol::{CooperationPolicy, MessageState, Strategy, Variant};

/// Trajectory streams use indices `0, 1, 2, …`; message generation draws
/// from the top stream so the two never collide.
const MESSAGE_STREAM: u64 = u64::MAX;

/// Evaluation mode: exact branch enumeration or seeded trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Exact,
    Sampled {
        trajectories: u64,
    },
}

/// One message state in a config: explicit amplitudes (as `[re, im]`
/// pairs) or Bloch angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessageSpec {
    Amplitudes { alpha: [f64; 2], beta: [f64; 2] },
    Angles { theta: f64, phi: f64 },
}

impl MessageSpec {
    pub fn from_state(state: &MessageState) -> Self {
        MessageSpec::Amplitudes {
            alpha: [state.alpha().re, state.alpha().im],
            beta: [state.beta().re, state.beta().im],
        }
    }

    pub fn resolve(&self) -> Result<MessageState> {
        match self {
            MessageSpec::Amplitudes { alpha, beta } => MessageState::new(
                num_complex::Complex64::new(alpha[0], alpha[1]),
                num_complex::Complex64::new(beta[0], beta[1]),
            ),
            MessageSpec::Angles { theta, phi } => MessageState::from_angles(*theta, *phi),
        }
    }
}

/// An inclusive θ-grid over `[0, π]` crossed with a φ-grid over `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta: usize,
    pub phi: usize,
}

/// Haar-random message tuples; `seed` defaults to the scenario seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub count: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Where the message states come from. A scenario runs once per tuple;
/// grid and random specs replicate each generated state across all `m`
/// message slots of a tuple (grids) or draw `m` independent states per
/// tuple (random).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessagesSpec {
    List(Vec<MessageSpec>),
    Grid { grid: GridSpec },
    Random { random: RandomSpec },
}

impl MessagesSpec {
    pub fn from_states(states: &[MessageState]) -> Self {
        MessagesSpec::List(states.iter().map(MessageSpec::from_state).collect())
    }

    pub fn random(count: usize) -> Self {
        MessagesSpec::Random {
            random: RandomSpec { count, seed: None },
        }
    }

    pub fn grid(theta: usize, phi: usize) -> Self {
        MessagesSpec::Grid {
            grid: GridSpec { theta, phi },
        }
    }

    pub fn angles(pairs: Vec<(f64, f64)>) -> Self {
        MessagesSpec::List(
            pairs
                .into_iter()
                .map(|(theta, phi)| MessageSpec::Angles { theta, phi })
                .collect(),
        )
    }
}

/// Which agents report, as written in a config file: an explicit
/// cooperating set or a count of withheld agents (the last `k` of `n`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicySpec {
    Cooperating { cooperating: Vec<usize> },
    Withhold { withhold: usize },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Withhold { withhold: 0 }
    }
}

impl PolicySpec {
    pub fn resolve(&self, n: usize) -> Result<CooperationPolicy> {
        match self {
            PolicySpec::Cooperating { cooperating } => {
                let set: std::collections::BTreeSet<usize> = cooperating.iter().copied().collect();
                if set.len() != cooperating.len() {
                    return Err(Error::config("duplicate agent in cooperating set"));
                }
                CooperationPolicy::new(n, set)
            }
            PolicySpec::Withhold { withhold } => CooperationPolicy::withhold_last(n, *withhold),
        }
    }
}

fn default_register_limit() -> usize {
    crate::protocol::DEFAULT_REGISTER_LIMIT
}

/// Everything one run needs: sizes, messages, cooperation, evaluation
/// mode, readout variant, Bob's strategy, seed, and quadrature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub messages: MessagesSpec,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub variant: Variant,
    /// Defaults to `full-correction` under full cooperation and
    /// `assume-psi` otherwise.
    #[serde(default)]
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub angle_measure: AngleMeasure,
    /// When set, withheld agents still measure their GHZ qubits; they just
    /// never report. Bob's reduced state is the same either way.
    #[serde(default)]
    pub withheld_measure: bool,
    /// Upper bound on the full register `3m + n + 1`; may be lowered below
    /// the default of 20, never raised.
    #[serde(default = "default_register_limit")]
    pub register_limit: usize,
}

impl ScenarioConfig {
    /// An exact-mode scenario with full cooperation and default settings.
    pub fn exact(m: usize, n: usize, messages: MessagesSpec, seed: u64) -> Self {
        ScenarioConfig {
            m,
            n,
            messages,
            policy: PolicySpec::default(),
            mode: Mode::Exact,
            variant: Variant::default(),
            strategy: None,
            seed,
            quad: QuadratureSpec::default(),
            angle_measure: AngleMeasure::default(),
            withheld_measure: false,
            register_limit: default_register_limit(),
        }
    }

    pub fn sampled(m: usize, n: usize, messages: MessagesSpec, seed: u64, trajectories: u64) -> Self {
        let mut cfg = Self::exact(m, n, messages, seed);
        cfg.mode = Mode::Sampled { trajectories };
        cfg
    }

    pub fn resolve_policy(&self) -> Result<CooperationPolicy> {
        self.policy.resolve(self.n)
    }

    /// The configured strategy, or the context default: `FullCorrection`
    /// when everyone cooperates, `AssumePsi` otherwise.
    pub fn resolve_strategy(&self) -> Strategy {
        if let Some(s) = self.strategy {
            return s;
        }
        match self.resolve_policy() {
            Ok(p) if p.is_full() => Strategy::FullCorrection,
            _ => Strategy::AssumePsi,
        }
    }

    pub fn trajectories(&self) -> u64 {
        match self.mode {
            Mode::Exact => 0,
            Mode::Sampled { trajectories } => trajectories,
        }
    }

    /// Materializes the message tuples this scenario runs over.
    pub fn message_tuples(&self) -> Result<Vec<Vec<MessageState>>> {
        match &self.messages {
            MessagesSpec::List(list) => {
                if list.len() != self.m {
                    return Err(Error::config(format!(
                        "message list has {} entries, scenario has m = {}",
                        list.len(),
                        self.m
                    )));
                }
                let tuple: Vec<MessageState> =
                    list.iter().map(MessageSpec::resolve).collect::<Result<_>>()?;
                Ok(vec![tuple])
            }
            MessagesSpec::Grid { grid } => {
                if grid.theta < 1 || grid.phi < 1 {
                    return Err(Error::config("grid needs at least one node per axis"));
                }
                let thetas: Vec<f64> = if grid.theta == 1 {
                    vec![std::f64::consts::FRAC_PI_2]
                } else {
                    (0..grid.theta)
                        .map(|j| j as f64 * std::f64::consts::PI / (grid.theta - 1) as f64)
                        .collect()
                };
                let phis: Vec<f64> = (0..grid.phi)
                    .map(|k| k as f64 * 2.0 * std::f64::consts::PI / grid.phi as f64)
                    .collect();
                let mut tuples = Vec::with_capacity(thetas.len() * phis.len());
                for &theta in &thetas {
                    for &phi in &phis {
                        let state = MessageState::from_angles(theta, phi)?;
                        tuples.push(vec![state; self.m]);
                    }
                }
                Ok(tuples)
            }
            MessagesSpec::Random { random } => {
                if random.count < 1 {
                    return Err(Error::config("random message spec needs count >= 1"));
                }
                let seed = random.seed.unwrap_or(self.seed);
                let mut rng = trajectory_rng(seed, MESSAGE_STREAM);
                let tuples = (0..random.count)
                    .map(|_| (0..self.m).map(|_| MessageState::random(&mut rng)).collect())
                    .collect();
                Ok(tuples)
            }
        }
    }

    /// Checks every scenario invariant; the CLI maps failures to exit 2.
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::config("m must be at least 1"));
        }
        if self.n < 1 {
            return Err(Error::config("n must be at least 1"));
        }
        if self.register_limit > crate::protocol::DEFAULT_REGISTER_LIMIT {
            return Err(Error::config(format!(
                "register_limit {} exceeds the hard cap of {}",
                self.register_limit,
                crate::protocol::DEFAULT_REGISTER_LIMIT
            )));
        }
        let size = 3 * self.m + self.n + 1;
        if size > self.register_limit {
            return Err(Error::config(format!(
                "register of {size} qubits exceeds the limit of {}",
                self.register_limit
            )));
        }
        if let Mode::Sampled { trajectories } = self.mode {
            if trajectories < 1 {
                return Err(Error::config("sampled mode needs trajectories >= 1"));
            }
        }
        let policy = self.resolve_policy()?;
        if self.resolve_strategy() == Strategy::FullCorrection && !policy.is_full() {
            return Err(Error::config(
                "full-correction strategy needs every agent to cooperate",
            ));
        }
        self.quad.validate()?;
        self.message_tuples()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let json = r#"{"m": 1, "n": 2, "messages": [{"theta": 0.5, "phi": 0.25}]}"#;
        let cfg: ScenarioConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mode, Mode::Exact);
        assert_eq!(cfg.variant, Variant::HadamardThenZ);
        assert_eq!(cfg.resolve_strategy(), Strategy::FullCorrection);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.register_limit, 20);
    }

    #[test]
    fn amplitude_messages_parse_as_re_im_pairs() {
        let json = r#"{
            "m": 1, "n": 1, "seed": 9,
            "messages": [{"alpha": [0.6, 0.0], "beta": [0.0, 0.8]}]
        }"#;
        let cfg: ScenarioConfig = serde_json::from_str(json).unwrap();
        let tuples = cfg.message_tuples().unwrap();
        let msg = tuples[0][0];
        assert!((msg.alpha().re - 0.6).abs() < 1e-12);
        assert!((msg.beta().im - 0.8).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{"m": 1, "n": 1, "messages": [{"theta": 0.1, "phi": 0.0}], "bogus": 3}"#;
        assert!(serde_json::from_str::<ScenarioConfig>(json).is_err());
    }

    #[test]
    fn sampled_mode_round_trips() {
        let cfg = ScenarioConfig::sampled(1, 2, MessagesSpec::random(1), 3, 1000);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"trajectories\":1000"));
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn grid_spec_covers_requested_angles() {
        let cfg = ScenarioConfig::exact(2, 1, MessagesSpec::grid(12, 1), 0);
        let tuples = cfg.message_tuples().unwrap();
        assert_eq!(tuples.len(), 12);
        // phi = 1 pins the real-amplitude family.
        for tuple in &tuples {
            assert_eq!(tuple.len(), 2);
            for msg in tuple {
                assert!(msg.beta().im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_tuples_are_seed_stable() {
        let cfg = ScenarioConfig::exact(2, 1, MessagesSpec::random(5), 77);
        let a = cfg.message_tuples().unwrap();
        let b = cfg.message_tuples().unwrap();
        assert_eq!(a.len(), 5);
        for (ta, tb) in a.iter().zip(&b) {
            for (ma, mb) in ta.iter().zip(tb) {
                assert_eq!(ma.alpha(), mb.alpha());
                assert_eq!(ma.beta(), mb.beta());
            }
        }
    }

    #[test]
    fn oversized_register_is_rejected() {
        let cfg = ScenarioConfig::exact(5, 5, MessagesSpec::random(1), 0);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn policy_forms_resolve() {
        let explicit = PolicySpec::Cooperating {
            cooperating: vec![1, 3],
        };
        let policy = explicit.resolve(3).unwrap();
        assert_eq!(policy.k(), 1);
        assert_eq!(policy.withheld(), vec![2]);

        let counted = PolicySpec::Withhold { withhold: 2 };
        let policy = counted.resolve(3).unwrap();
        assert_eq!(policy.cooperating().iter().copied().collect::<Vec<_>>(), vec![1]);

        assert!(PolicySpec::Withhold { withhold: 4 }.resolve(3).is_err());
        assert!(PolicySpec::Cooperating { cooperating: vec![0] }
            .resolve(3)
            .is_err());
    }
}
