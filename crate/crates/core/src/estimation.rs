//! Mechanic alignment estimation.
//!
//! Each mechanic's per-playtrace trigger count is divided by that mechanic's
//! maximum count over the whole corpus, giving a frequency in `[0, 1]`. For a
//! condition `c` (winning, or a particular agent playing) the distance
//! `D = W1(PDF(m | c), PDF(m))` measures how far conditioning moves the
//! distribution, and `S = sign(mean(PDF(m | c)) - mean(PDF(m)))` says which
//! way. The signed score is `S * D`:
//!
//! * systemic reward `E_m` conditions on winning traces,
//! * agential incentive `I_m` conditions on one agent's traces.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{Condition, Corpus, MechanicId, TraceError};

/// Tolerance on the mean difference below which the direction is 0.
pub const DEFAULT_DIRECTION_TOLERANCE: f64 = 1e-12;
const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("unknown mechanic `{0}`")]
    UnknownMechanic(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no trace satisfies condition `{0}`")]
    EmptyCondition(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Discrete distribution over normalized frequencies in `[0, 1]`.
///
/// Support is strictly increasing, weights are positive and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self, EstimationError> {
        let bad = |msg: String| Err(EstimationError::InvalidDistribution(msg));
        if support.is_empty() {
            return bad("empty support".into());
        }
        if support.len() != weights.len() {
            return bad(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            ));
        }
        if let Some(x) = support.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return bad(format!("support value {x} outside [0, 1]"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return bad("support not strictly increasing".into());
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return bad(format!("non-positive weight {w}"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return bad(format!("weights sum to {total}"));
        }
        Ok(EmpiricalDistribution { support, weights })
    }

    pub fn point_mass(x: f64) -> Result<Self, EstimationError> {
        Self::new(vec![x], vec![1.0])
    }

    /// Empirical distribution of a sample; equal values are merged.
    pub fn from_samples(samples: &[f64]) -> Result<Self, EstimationError> {
        if samples.is_empty() {
            return Err(EstimationError::InvalidDistribution("no samples".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut support = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        for x in sorted {
            match support.last() {
                Some(&last) if last == x => *mult.last_mut().unwrap() += 1,
                _ => {
                    support.push(x);
                    mult.push(1);
                }
            }
        }
        let weights = mult.into_iter().map(|k| k as f64 / n).collect();
        Self::new(support, weights)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self) -> f64 {
        dist_mean(self)
    }
}

pub fn dist_mean(d: &EmpiricalDistribution) -> f64 {
    d.support
        .iter()
        .zip(&d.weights)
        .map(|(x, w)| x * w)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// First Wasserstein distance between two distributions on `[0, 1]`.
///
/// Integrates `|F_p(x) - F_q(x)|` exactly: both CDFs are step functions, so
/// the integrand is constant between consecutive merged breakpoints.
pub fn wasserstein1(p: &EmpiricalDistribution, q: &EmpiricalDistribution) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut cdf_p, mut cdf_q) = (0.0_f64, 0.0_f64);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    while i < p.support.len() || j < q.support.len() {
        let x = match (p.support.get(i), q.support.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        if let Some(px) = prev {
            total += (cdf_p - cdf_q).abs() * (x - px);
        }
        if i < p.support.len() && p.support[i] == x {
            cdf_p += p.weights[i];
            i += 1;
        }
        if j < q.support.len() && q.support[j] == x {
            cdf_q += q.weights[j];
            j += 1;
        }
        prev = Some(x);
    }
    total.clamp(0.0, 1.0)
}

/// Sign of a mean shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Negative,
    Neutral,
    Positive,
}

impl Direction {
    pub fn as_i8(self) -> i8 {
        match self {
            Direction::Negative => -1,
            Direction::Neutral => 0,
            Direction::Positive => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_i8())
    }
}

pub fn direction(
    conditional: &EmpiricalDistribution,
    pooled: &EmpiricalDistribution,
    tolerance: f64,
) -> Direction {
    let diff = dist_mean(conditional) - dist_mean(pooled);
    if diff > tolerance {
        Direction::Positive
    } else if diff < -tolerance {
        Direction::Negative
    } else {
        Direction::Neutral
    }
}

fn check_mechanic(corpus: &Corpus, mechanic: &MechanicId) -> Result<(), EstimationError> {
    if corpus.is_empty() {
        return Err(EstimationError::EmptyCorpus);
    }
    if !corpus.mechanic_universe().contains(mechanic) {
        return Err(EstimationError::UnknownMechanic(mechanic.to_string()));
    }
    Ok(())
}

fn max_count(corpus: &Corpus, mechanic: &MechanicId) -> u64 {
    corpus
        .traces()
        .iter()
        .map(|t| t.count(mechanic))
        .max()
        .unwrap_or(0)
}

#[inline]
fn normalize(count: u64, max: u64) -> f64 {
    if max == 0 {
        0.0
    } else {
        count as f64 / max as f64
    }
}

/// Per-trace counts of `mechanic` divided by the corpus-wide maximum count.
pub fn normalized_frequencies(
    corpus: &Corpus,
    mechanic: &MechanicId,
) -> Result<Vec<f64>, EstimationError> {
    check_mechanic(corpus, mechanic)?;
    let max = max_count(corpus, mechanic);
    Ok(corpus
        .traces()
        .iter()
        .map(|t| normalize(t.count(mechanic), max))
        .collect())
}

/// Distribution of normalized frequencies over the traces selected by `condition`.
///
/// The normalizing maximum always comes from the full corpus so that
/// conditional and pooled distributions live on the same scale.
pub fn build_distribution(
    corpus: &Corpus,
    mechanic: &MechanicId,
    condition: &Condition,
) -> Result<EmpiricalDistribution, EstimationError> {
    check_mechanic(corpus, mechanic)?;
    let max = max_count(corpus, mechanic);
    let selected = corpus.select(condition)?;
    distribution_from_indices(corpus, mechanic, max, &selected)
        .ok_or_else(|| EstimationError::EmptyCondition(condition.to_string()))
}

fn distribution_from_indices(
    corpus: &Corpus,
    mechanic: &MechanicId,
    max: u64,
    indices: &[usize],
) -> Option<EmpiricalDistribution> {
    if indices.is_empty() {
        return None;
    }
    // Group on the integer counts so merging is exact.
    let mut multiplicity: BTreeMap<u64, usize> = BTreeMap::new();
    for &i in indices {
        *multiplicity
            .entry(corpus.traces()[i].count(mechanic))
            .or_default() += 1;
    }
    let n = indices.len() as f64;
    let (support, weights) = multiplicity
        .into_iter()
        .map(|(c, k)| (normalize(c, max), k as f64 / n))
        .unzip();
    Some(EmpiricalDistribution { support, weights })
}

/// Full breakdown of one signed alignment score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentComponents {
    pub distance: f64,
    pub direction: Direction,
    pub mean_conditional: f64,
    pub mean_pooled: f64,
    pub n_conditional: usize,
    pub n_pooled: usize,
}

impl AlignmentComponents {
    pub fn value(&self) -> f64 {
        self.direction.as_f64() * self.distance
    }
}

pub fn alignment_components(
    corpus: &Corpus,
    mechanic: &MechanicId,
    condition: &Condition,
) -> Result<AlignmentComponents, EstimationError> {
    let pooled = build_distribution(corpus, mechanic, &Condition::All)?;
    let conditional = build_distribution(corpus, mechanic, condition)?;
    let n_conditional = corpus.select(condition)?.len();
    Ok(AlignmentComponents {
        distance: wasserstein1(&conditional, &pooled),
        direction: direction(&conditional, &pooled, DEFAULT_DIRECTION_TOLERANCE),
        mean_conditional: dist_mean(&conditional),
        mean_pooled: dist_mean(&pooled),
        n_conditional,
        n_pooled: corpus.len(),
    })
}

/// Signed alignment score `S * D` of `mechanic` under `condition`, in `[-1, 1]`.
pub fn alignment_value(
    corpus: &Corpus,
    mechanic: &MechanicId,
    condition: &Condition,
) -> Result<f64, EstimationError> {
    alignment_components(corpus, mechanic, condition).map(|c| c.value())
}

/// One (mechanic, agent) point of an alignment chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPoint {
    pub mechanic: MechanicId,
    pub agent_id: String,
    /// `E_m`, conditioned on winning over the whole corpus.
    pub systemic: f64,
    /// `I_m`, conditioned on this agent.
    pub agential: f64,
    pub d_win: f64,
    pub s_win: i8,
    pub d_agent: f64,
    pub s_agent: i8,
    pub mean_pooled: f64,
    pub mean_win: f64,
    pub mean_agent: f64,
    pub n_traces_pooled: usize,
    pub n_traces_win: usize,
    pub n_traces_agent: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentChart {
    pub game_id: String,
    pub level_id: String,
    pub points: Vec<AlignmentPoint>,
    pub mechanic_universe: Vec<MechanicId>,
    pub agents: Vec<String>,
    pub corpus_size: usize,
    /// Set when the corpus had no wins and systemic scores were zeroed.
    pub no_win_fallback: bool,
}

impl AlignmentChart {
    pub fn point(&self, mechanic: &str, agent: &str) -> Option<&AlignmentPoint> {
        self.points
            .iter()
            .find(|p| p.mechanic.as_str() == mechanic && p.agent_id == agent)
    }

    /// `E_m` per mechanic, in universe order.
    pub fn systemic_by_mechanic(&self) -> Vec<(&MechanicId, f64)> {
        let mut out: Vec<(&MechanicId, f64)> = Vec::new();
        for p in &self.points {
            if out.last().map(|(m, _)| *m) != Some(&p.mechanic) {
                out.push((&p.mechanic, p.systemic));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChartOptions {
    /// When the corpus has no winning trace, score every mechanic's
    /// systemic reward as 0 instead of failing.
    pub no_win_fallback: bool,
}

fn joined_ids<'a>(ids: impl Iterator<Item = &'a str>) -> String {
    let mut unique: Vec<&str> = ids.collect();
    unique.sort_unstable();
    unique.dedup();
    unique.join("+")
}

/// Computes `(E_m, I_m)` for every mechanic in the universe and every agent.
///
/// `agents = None` charts every agent in the corpus. Points come out ordered
/// by mechanic, then agent.
pub fn compute_chart(
    corpus: &Corpus,
    agents: Option<&[String]>,
    options: ChartOptions,
) -> Result<AlignmentChart, EstimationError> {
    if corpus.is_empty() {
        return Err(EstimationError::EmptyCorpus);
    }
    let mut agents: Vec<String> = match agents {
        Some(list) => list.to_vec(),
        None => corpus.agents().map(str::to_string).collect(),
    };
    agents.sort();
    agents.dedup();
    for a in &agents {
        if !corpus.has_agent(a) {
            return Err(TraceError::UnknownAgent(a.clone()).into());
        }
    }
    let wins = corpus.select(&Condition::Win)?;
    let fallback = wins.is_empty();
    if fallback && !options.no_win_fallback {
        return Err(EstimationError::EmptyCondition(Condition::Win.to_string()));
    }
    let universe: Vec<MechanicId> = corpus.mechanic_universe().iter().cloned().collect();
    let agent_indices: Vec<Vec<usize>> = agents
        .iter()
        .map(|a| corpus.select(&Condition::agent(a.as_str())))
        .collect::<Result<_, _>>()?;

    let rows: Vec<Vec<AlignmentPoint>> = universe
        .par_iter()
        .map(|m| {
            let max = max_count(corpus, m);
            let all: Vec<usize> = (0..corpus.len()).collect();
            let pooled = distribution_from_indices(corpus, m, max, &all).expect("non-empty");
            let mean_pooled = dist_mean(&pooled);
            let (d_win, s_win, mean_win) = match distribution_from_indices(corpus, m, max, &wins) {
                Some(win) => (
                    wasserstein1(&win, &pooled),
                    direction(&win, &pooled, DEFAULT_DIRECTION_TOLERANCE),
                    dist_mean(&win),
                ),
                None => (0.0, Direction::Neutral, 0.0),
            };
            let systemic = s_win.as_f64() * d_win;
            agents
                .iter()
                .zip(&agent_indices)
                .map(|(a, idx)| {
                    let cond =
                        distribution_from_indices(corpus, m, max, idx).expect("agent has traces");
                    let d_agent = wasserstein1(&cond, &pooled);
                    let s_agent = direction(&cond, &pooled, DEFAULT_DIRECTION_TOLERANCE);
                    AlignmentPoint {
                        mechanic: m.clone(),
                        agent_id: a.clone(),
                        systemic,
                        agential: s_agent.as_f64() * d_agent,
                        d_win,
                        s_win: s_win.as_i8(),
                        d_agent,
                        s_agent: s_agent.as_i8(),
                        mean_pooled,
                        mean_win,
                        mean_agent: dist_mean(&cond),
                        n_traces_pooled: corpus.len(),
                        n_traces_win: wins.len(),
                        n_traces_agent: idx.len(),
                    }
                })
                .collect()
        })
        .collect();

    Ok(AlignmentChart {
        game_id: joined_ids(corpus.traces().iter().map(|t| t.game.as_str())),
        level_id: joined_ids(corpus.traces().iter().map(|t| t.level.as_str())),
        points: rows.into_iter().flatten().collect(),
        mechanic_universe: universe,
        agents,
        corpus_size: corpus.len(),
        no_win_fallback: fallback,
    })
}
