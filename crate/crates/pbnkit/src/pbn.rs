//! Probabilistic Boolean Network data model and one-step stochastic
//! semantics: predictor selection, synchronous update, perturbation, and
//! intervention.
//!
//! State convention: value `0` (false) means a node is operational/ON and
//! `1` (true) means it has failed/is OFF. States encode to integers with
//! node 0 as the most significant bit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::expr::{BoolExpr, UnboundVariable};

/// Selection-probability sums must match 1 within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// One-step distributions must carry total mass 1 within this tolerance.
pub const DISTRIBUTION_TOL: f64 = 1e-12;
/// Default cap on the number of enumerable realizations.
pub const DEFAULT_REALIZATION_CAP: u128 = 1 << 20;

/// Ordered vector of node truth values; index j holds node j's state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Vec<bool>);

impl State {
    pub fn new(values: Vec<bool>) -> Self {
        State(values)
    }

    /// The all-operational state (every node 0).
    pub fn zeros(n: usize) -> Self {
        State(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, node: usize) -> bool {
        self.0[node]
    }

    pub fn set(&mut self, node: usize, value: bool) {
        self.0[node] = value;
    }

    /// Integer encoding with node 0 as the most significant bit.
    pub fn to_index(&self) -> usize {
        self.to_bits() as usize
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Self::from_bits(index as u64, n)
    }

    pub(crate) fn to_bits(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        let mut bits = 0u64;
        for &v in &self.0 {
            bits = (bits << 1) | v as u64;
        }
        bits
    }

    pub(crate) fn from_bits(bits: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        State((0..n).map(|j| (bits >> (n - 1 - j)) & 1 == 1).collect())
    }
}

impl From<Vec<bool>> for State {
    fn from(values: Vec<bool>) -> Self {
        State(values)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.0 {
            write!(f, "{}", v as u8)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid state string `{0}`: expected a nonempty string of 0s and 1s")]
pub struct StateParseError(pub String);

impl FromStr for State {
    type Err = StateParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(StateParseError(s.to_string()));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(StateParseError(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(State)
    }
}

/// Whether the per-node perturbation flips are applied after the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturb {
    On,
    Off,
}

impl Perturb {
    pub fn is_on(self) -> bool {
        matches!(self, Perturb::On)
    }
}

/// One candidate update function for a node, with its selection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub expr: BoolExpr,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub description: Option<String>,
    pub predictors: Vec<Predictor>,
}

impl NodeSpec {
    pub fn new(name: impl Into<String>, predictors: Vec<Predictor>) -> Self {
        NodeSpec {
            name: name.into(),
            description: None,
            predictors,
        }
    }
}

/// A guarded per-step state reward. Overlapping guards within a structure sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardEntry {
    pub guard: BoolExpr,
    pub reward: f64,
}

/// Named assignment of nonnegative per-step rewards to state predicates.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardStructure {
    pub name: String,
    pub entries: Vec<RewardEntry>,
}

impl RewardStructure {
    pub fn new(name: impl Into<String>, entries: Vec<(BoolExpr, f64)>) -> Self {
        RewardStructure {
            name: name.into(),
            entries: entries
                .into_iter()
                .map(|(guard, reward)| RewardEntry { guard, reward })
                .collect(),
        }
    }
}

/// The network: nodes with predictor lists, per-node perturbation rates,
/// named labels, and named reward structures.
#[derive(Debug, Clone, PartialEq)]
pub struct Pbn {
    pub name: String,
    pub nodes: Vec<NodeSpec>,
    /// Per-node post-update flip probability, aligned with `nodes`.
    pub perturbation: Vec<f64>,
    pub labels: BTreeMap<String, BoolExpr>,
    /// Declaration order matters: the first structure is the default one.
    pub rewards: Vec<RewardStructure>,
}

impl Pbn {
    pub fn new(name: impl Into<String>, nodes: Vec<NodeSpec>) -> Self {
        let n = nodes.len();
        Pbn {
            name: name.into(),
            nodes,
            perturbation: vec![0.0; n],
            labels: BTreeMap::new(),
            rewards: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn state_count(&self) -> usize {
        1usize << self.node_count()
    }

    pub fn node_names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn set_perturbation(&mut self, name: &str, rate: f64) -> Result<(), UnknownNode> {
        let j = self.node_index(name).ok_or_else(|| UnknownNode(name.into()))?;
        self.perturbation[j] = rate;
        Ok(())
    }

    pub fn reward_structure(&self, name: &str) -> Option<&RewardStructure> {
        self.rewards.iter().find(|r| r.name == name)
    }

    pub fn label(&self, name: &str) -> Option<&BoolExpr> {
        self.labels.get(name)
    }

    /// Checks all structural invariants; an empty list means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            out.push(Violation::EmptyNetwork);
        }
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            if !seen.insert(node.name.as_str()) {
                out.push(Violation::DuplicateNode {
                    node: node.name.clone(),
                });
            }
        }
        let names: BTreeSet<&str> = self.nodes.iter().map(|n| n.name.as_str()).collect();
        let check_bound = |out: &mut Vec<Violation>, context: String, expr: &BoolExpr| {
            for var in expr.support() {
                if !names.contains(var.as_str()) {
                    out.push(Violation::UnboundVariable {
                        context: context.clone(),
                        variable: var,
                    });
                }
            }
        };

        for node in &self.nodes {
            if node.predictors.is_empty() {
                out.push(Violation::EmptyPredictorList {
                    node: node.name.clone(),
                });
                continue;
            }
            let mut sum = 0.0;
            for (i, pred) in node.predictors.iter().enumerate() {
                let c = pred.probability;
                if !c.is_finite() || c <= 0.0 || c > 1.0 {
                    out.push(Violation::SelectionProbabilityOutOfRange {
                        node: node.name.clone(),
                        index: i,
                        value: c,
                    });
                }
                sum += c;
                check_bound(
                    &mut out,
                    format!("predictor {} of node {}", i, node.name),
                    &pred.expr,
                );
            }
            if !(sum - 1.0).abs().is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOL {
                out.push(Violation::NormalizationViolation {
                    node: node.name.clone(),
                    sum,
                });
            }
        }

        for (j, &p) in self.perturbation.iter().enumerate() {
            if !p.is_finite() || !(0.0..1.0).contains(&p) {
                let node = self
                    .nodes
                    .get(j)
                    .map(|n| n.name.clone())
                    .unwrap_or_else(|| format!("#{j}"));
                out.push(Violation::PerturbationOutOfRange { node, value: p });
            }
        }

        for (name, expr) in &self.labels {
            check_bound(&mut out, format!("label \"{name}\""), expr);
        }

        let mut reward_names = BTreeSet::new();
        for structure in &self.rewards {
            if !reward_names.insert(structure.name.as_str()) {
                out.push(Violation::DuplicateRewardStructure {
                    name: structure.name.clone(),
                });
            }
            for (i, entry) in structure.entries.iter().enumerate() {
                if !entry.reward.is_finite() || entry.reward < 0.0 {
                    out.push(Violation::NegativeReward {
                        structure: structure.name.clone(),
                        index: i,
                        value: entry.reward,
                    });
                }
                check_bound(
                    &mut out,
                    format!("rewards \"{}\" entry {}", structure.name, i),
                    &entry.guard,
                );
            }
        }
        out
    }

    /// Number of constituent-network realizations, `D = prod l(j)`.
    pub fn realization_count(&self) -> u128 {
        self.nodes
            .iter()
            .map(|n| n.predictors.len() as u128)
            .fold(1u128, |acc, l| acc.saturating_mul(l.max(1)))
    }

    /// Enumerates every realization with its selection probability, in
    /// lexicographic order of the per-node predictor choices (node 0 most
    /// significant, last node's choice cycling fastest).
    pub fn enumerate_realizations(&self) -> Result<Vec<Realization>, RealizationCapExceeded> {
        self.enumerate_realizations_capped(DEFAULT_REALIZATION_CAP)
    }

    pub fn enumerate_realizations_capped(
        &self,
        cap: u128,
    ) -> Result<Vec<Realization>, RealizationCapExceeded> {
        let count = self.realization_count();
        if count > cap {
            return Err(RealizationCapExceeded { count, cap });
        }
        let n = self.node_count();
        let mut out = Vec::with_capacity(count as usize);
        let mut choices = vec![0usize; n];
        loop {
            let probability = self
                .nodes
                .iter()
                .zip(&choices)
                .map(|(node, &i)| node.predictors[i].probability)
                .fold(1.0, |acc, c| acc * c);
            out.push(Realization {
                choices: choices.clone(),
                probability,
            });
            // odometer increment, last node fastest
            let mut j = n;
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                choices[j] += 1;
                if choices[j] < self.nodes[j].predictors.len() {
                    break;
                }
                choices[j] = 0;
            }
        }
    }

    /// Deterministic synchronous update under one realization's predictors.
    pub fn apply_realization(&self, realization: &Realization, s: &State) -> State {
        let stepper = Stepper::new(self).expect("apply_realization on an unvalidated network");
        State::from_bits(
            stepper.apply_choices(&realization.choices, s.to_bits()),
            self.node_count(),
        )
    }

    /// Exact one-step successor distribution from `s`, sorted by state index.
    ///
    /// Each node independently selects a predictor, all nodes update
    /// synchronously, then (if enabled) each node's new value flips with its
    /// perturbation probability. Panics if the network has more than 64
    /// nodes or a predictor references an undeclared node; run
    /// [`validate`](Self::validate) first.
    pub fn next_state_distribution(&self, s: &State, perturb: Perturb) -> Vec<(State, f64)> {
        let stepper = Stepper::new(self).expect("next_state_distribution on an unvalidated network");
        stepper
            .distribution(s.to_bits(), perturb.is_on())
            .into_iter()
            .map(|(bits, p)| (State::from_bits(bits, self.node_count()), p))
            .collect()
    }

    /// Samples one synchronous step. Same seed and state give the same
    /// successor; the empirical distribution over repeated calls converges
    /// to [`next_state_distribution`](Self::next_state_distribution).
    pub fn sample_step<R: Rng + ?Sized>(&self, s: &State, perturb: Perturb, rng: &mut R) -> State {
        let stepper = Stepper::new(self).expect("sample_step on an unvalidated network");
        State::from_bits(
            stepper.sample(s.to_bits(), perturb.is_on(), rng),
            self.node_count(),
        )
    }

    /// Returns `s` with the named node forced to `value`; idempotent.
    pub fn intervene(&self, s: &State, node: &str, value: bool) -> Result<State, UnknownNode> {
        let j = self.node_index(node).ok_or_else(|| UnknownNode(node.into()))?;
        let mut out = s.clone();
        out.set(j, value);
        Ok(out)
    }
}

/// One constituent Boolean network: a predictor choice for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub choices: Vec<usize>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown node `{0}`")]
pub struct UnknownNode(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("realization count {count} exceeds cap {cap}")]
pub struct RealizationCapExceeded {
    pub count: u128,
    pub cap: u128,
}

/// A structural defect reported by [`Pbn::validate`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("duplicate node `{node}`")]
    DuplicateNode { node: String },
    #[error("node `{node}` has no predictors")]
    EmptyPredictorList { node: String },
    #[error("selection probability {value} of predictor {index} on node `{node}` is outside (0, 1]")]
    SelectionProbabilityOutOfRange {
        node: String,
        index: usize,
        value: f64,
    },
    #[error("selection probabilities of node `{node}` sum to {sum}, not 1")]
    NormalizationViolation { node: String, sum: f64 },
    #[error("{context} references undeclared node `{variable}`")]
    UnboundVariable { context: String, variable: String },
    #[error("perturbation rate {value} of node `{node}` is outside [0, 1)")]
    PerturbationOutOfRange { node: String, value: f64 },
    #[error("reward {value} in structure \"{structure}\" entry {index} is negative")]
    NegativeReward {
        structure: String,
        index: usize,
        value: f64,
    },
    #[error("duplicate reward structure \"{name}\"")]
    DuplicateRewardStructure { name: String },
}

/// Expression with variables resolved to node indices, evaluated against a
/// bit-encoded state (node 0 = most significant bit).
#[derive(Debug, Clone)]
pub(crate) enum CompiledExpr {
    Const(bool),
    Var(usize),
    Not(Box<CompiledExpr>),
    And(Box<CompiledExpr>, Box<CompiledExpr>),
    Or(Box<CompiledExpr>, Box<CompiledExpr>),
    Xor(Box<CompiledExpr>, Box<CompiledExpr>),
}

impl CompiledExpr {
    pub(crate) fn compile(expr: &BoolExpr, pbn: &Pbn) -> Result<Self, UnboundVariable> {
        Ok(match expr {
            BoolExpr::Const(v) => CompiledExpr::Const(*v),
            BoolExpr::Var(name) => CompiledExpr::Var(
                pbn.node_index(name)
                    .ok_or_else(|| UnboundVariable(name.clone()))?,
            ),
            BoolExpr::Not(e) => CompiledExpr::Not(Box::new(Self::compile(e, pbn)?)),
            BoolExpr::And(a, b) => CompiledExpr::And(
                Box::new(Self::compile(a, pbn)?),
                Box::new(Self::compile(b, pbn)?),
            ),
            BoolExpr::Or(a, b) => CompiledExpr::Or(
                Box::new(Self::compile(a, pbn)?),
                Box::new(Self::compile(b, pbn)?),
            ),
            BoolExpr::Xor(a, b) => CompiledExpr::Xor(
                Box::new(Self::compile(a, pbn)?),
                Box::new(Self::compile(b, pbn)?),
            ),
        })
    }

    pub(crate) fn eval_bits(&self, bits: u64, n: usize) -> bool {
        match self {
            CompiledExpr::Const(v) => *v,
            CompiledExpr::Var(j) => (bits >> (n - 1 - j)) & 1 == 1,
            CompiledExpr::Not(e) => !e.eval_bits(bits, n),
            CompiledExpr::And(a, b) => a.eval_bits(bits, n) & b.eval_bits(bits, n),
            CompiledExpr::Or(a, b) => a.eval_bits(bits, n) | b.eval_bits(bits, n),
            CompiledExpr::Xor(a, b) => a.eval_bits(bits, n) ^ b.eval_bits(bits, n),
        }
    }
}

/// Precompiled step engine shared by the exact translators and the
/// simulator. Supports up to 64 nodes.
pub(crate) struct Stepper {
    n: usize,
    predictors: Vec<Vec<(CompiledExpr, f64)>>,
    perturbation: Vec<f64>,
}

impl Stepper {
    pub(crate) fn new(pbn: &Pbn) -> Result<Self, UnboundVariable> {
        assert!(
            pbn.node_count() >= 1 && pbn.node_count() <= 64,
            "step semantics support 1..=64 nodes, got {}",
            pbn.node_count()
        );
        let predictors = pbn
            .nodes
            .iter()
            .map(|node| {
                node.predictors
                    .iter()
                    .map(|p| Ok((CompiledExpr::compile(&p.expr, pbn)?, p.probability)))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Stepper {
            n: pbn.node_count(),
            predictors,
            perturbation: pbn.perturbation.clone(),
        })
    }

    pub(crate) fn node_count(&self) -> usize {
        self.n
    }

    /// Per-node probability that the node is 1 after one step from `bits`.
    pub(crate) fn marginals(&self, bits: u64, perturb: bool) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let mut q: f64 = self.predictors[j]
                    .iter()
                    .filter(|(e, _)| e.eval_bits(bits, self.n))
                    .map(|(_, c)| c)
                    .sum();
                q = q.clamp(0.0, 1.0);
                if perturb {
                    let p = self.perturbation[j];
                    q = (q * (1.0 - p) + (1.0 - q) * p).clamp(0.0, 1.0);
                }
                q
            })
            .collect()
    }

    /// Exact successor distribution as a product over independent node
    /// marginals, sorted by successor index.
    pub(crate) fn distribution(&self, bits: u64, perturb: bool) -> Vec<(u64, f64)> {
        let q = self.marginals(bits, perturb);
        let mut base = 0u64;
        let mut branching = Vec::new();
        for (j, &qj) in q.iter().enumerate() {
            if qj >= 1.0 {
                base |= 1 << (self.n - 1 - j);
            } else if qj > 0.0 {
                branching.push(j);
            }
        }
        let mut out = Vec::with_capacity(1 << branching.len());
        for mask in 0u64..(1 << branching.len()) {
            let mut succ = base;
            let mut prob = 1.0;
            for (k, &j) in branching.iter().enumerate() {
                // branching node order = node order, so products are
                // evaluated in a fixed deterministic order
                if (mask >> (branching.len() - 1 - k)) & 1 == 1 {
                    succ |= 1 << (self.n - 1 - j);
                    prob *= q[j];
                } else {
                    prob *= 1.0 - q[j];
                }
            }
            out.push((succ, prob));
        }
        out.sort_unstable_by_key(|&(s, _)| s);
        out
    }

    /// One sampled step. Draws, in node order: one uniform for predictor
    /// selection when a node has more than one predictor, then one uniform
    /// for the perturbation flip when enabled and the node's rate is
    /// nonzero.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, bits: u64, perturb: bool, rng: &mut R) -> u64 {
        let mut next = 0u64;
        for j in 0..self.n {
            let preds = &self.predictors[j];
            let chosen = if preds.len() == 1 {
                &preds[0].0
            } else {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = preds.len() - 1;
                for (i, (_, c)) in preds.iter().enumerate() {
                    acc += c;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                &preds[pick].0
            };
            let mut value = chosen.eval_bits(bits, self.n);
            if perturb && self.perturbation[j] > 0.0 {
                let u: f64 = rng.random();
                if u < self.perturbation[j] {
                    value = !value;
                }
            }
            if value {
                next |= 1 << (self.n - 1 - j);
            }
        }
        next
    }

    /// Deterministic update under fixed predictor choices.
    pub(crate) fn apply_choices(&self, choices: &[usize], bits: u64) -> u64 {
        let mut next = 0u64;
        for j in 0..self.n {
            if self.predictors[j][choices[j]].0.eval_bits(bits, self.n) {
                next |= 1 << (self.n - 1 - j);
            }
        }
        next
    }
}
