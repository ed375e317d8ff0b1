//! Normalization, Pareto analysis and scalarization of grasp scores.
//!
//! Senses: TOV is maximized, torque effort and effective mass are minimized.
//! Internally every objective is turned into a minimization (TOV by negation
//! for dominance, by `1 − H̄_TOV` for scalarization).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::GraspScorecard;

pub const OBJECTIVES: [&str; 3] = ["TOV", "TME", "TEM"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

pub const SENSES: [Sense; 3] = [Sense::Maximize, Sense::Minimize, Sense::Minimize];

/// The scalar part of a scorecard; all a ranking needs.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspScores {
    pub id: String,
    /// `[H_TOV, H_TME, H_TEM]`, `None` for infeasible grasps.
    pub scalars: Option<[f64; 3]>,
}

impl From<&GraspScorecard> for GraspScores {
    fn from(c: &GraspScorecard) -> Self {
        Self {
            id: c.grasp_id.clone(),
            scalars: if c.feasible { c.scalars() } else { None },
        }
    }
}

pub fn scores_of(cards: &[GraspScorecard]) -> Vec<GraspScores> {
    cards.iter().map(GraspScores::from).collect()
}

fn feasible(scores: &[GraspScores]) -> Result<Vec<(usize, [f64; 3])>> {
    let out: Vec<_> = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.scalars.map(|v| (i, v)))
        .collect();
    if out.is_empty() {
        return Err(Error::NoFeasibleGrasps);
    }
    if let Some((i, _)) = out.iter().find(|(_, v)| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidInput(format!(
            "grasp {} has non-finite scores",
            scores[*i].id
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedScores {
    /// Aligned with the input; `None` for infeasible grasps.
    pub values: Vec<Option<[f64; 3]>>,
    /// Maxima over feasible grasps, used as divisors.
    pub maxima: [f64; 3],
}

/// Divides each objective by its maximum over the feasible grasps.
pub fn normalize(scores: &[GraspScores]) -> Result<NormalizedScores> {
    let rows = feasible(scores)?;
    let mut maxima = [f64::NEG_INFINITY; 3];
    for (_, v) in &rows {
        for k in 0..3 {
            maxima[k] = maxima[k].max(v[k]);
        }
    }
    if let Some(k) = (0..3).find(|&k| !(maxima[k] > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "cannot normalize {}: maximum is {}",
            OBJECTIVES[k], maxima[k]
        )));
    }
    let values = scores
        .iter()
        .map(|s| s.scalars.map(|v| [v[0] / maxima[0], v[1] / maxima[1], v[2] / maxima[2]]))
        .collect();
    Ok(NormalizedScores { values, maxima })
}

fn as_minimization(v: &[f64; 3], senses: &[Sense; 3]) -> [f64; 3] {
    let mut out = *v;
    for k in 0..3 {
        if senses[k] == Sense::Maximize {
            out[k] = -out[k];
        }
    }
    out
}

/// `a` is no worse everywhere and strictly better somewhere (minimization).
fn dominates(a: &[f64; 3], b: &[f64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Indices of the non-dominated points. Points are visited in lexicographic
/// order of their minimization values, so a point can only be dominated by
/// one already visited, and it suffices to test it against the front built
/// so far.
pub fn pareto_indices(points: &[[f64; 3]], senses: &[Sense; 3]) -> Vec<usize> {
    let mapped: Vec<[f64; 3]> = points.iter().map(|p| as_minimization(p, senses)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        mapped[a]
            .iter()
            .zip(&mapped[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| dominates(&mapped[f], &mapped[i])) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

/// Ids of the Pareto-optimal feasible grasps, in input order.
pub fn pareto_front(scores: &[GraspScores], senses: &[Sense; 3]) -> Result<Vec<String>> {
    let rows = feasible(scores)?;
    let points: Vec<[f64; 3]> = rows.iter().map(|(_, v)| *v).collect();
    Ok(pareto_indices(&points, senses)
        .into_iter()
        .map(|k| scores[rows[k].0].id.clone())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgBest {
    pub tov: String,
    pub tme: String,
    pub tem: String,
}

impl ArgBest {
    pub fn as_array(&self) -> [&str; 3] {
        [&self.tov, &self.tme, &self.tem]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conflict {
    pub conflict: bool,
    pub argbest: ArgBest,
}

/// Per-objective best grasp. Among grasps tied at the best value, the
/// lowest-index one on the Pareto front is chosen, which keeps every argbest
/// on the front.
fn argbest(rows: &[(usize, [f64; 3])], front: &[usize], senses: &[Sense; 3]) -> [usize; 3] {
    let mut out = [0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mapped = |v: &[f64; 3]| as_minimization(v, senses)[k];
        let best = rows
            .iter()
            .map(|(_, v)| mapped(v))
            .fold(f64::INFINITY, f64::min);
        *slot = front
            .iter()
            .copied()
            .find(|&r| mapped(&rows[r].1) == best)
            .expect("a best point is always on the front");
    }
    out
}

/// Whether the three objectives disagree on the best grasp.
pub fn detect_conflict(scores: &[GraspScores]) -> Result<Conflict> {
    let rows = feasible(scores)?;
    let points: Vec<[f64; 3]> = rows.iter().map(|(_, v)| *v).collect();
    let front = pareto_indices(&points, &SENSES);
    let best = argbest(&rows, &front, &SENSES);
    let id = |r: usize| scores[rows[r].0].id.clone();
    Ok(Conflict {
        conflict: !(best[0] == best[1] && best[1] == best[2]),
        argbest: ArgBest {
            tov: id(best[0]),
            tme: id(best[1]),
            tem: id(best[2]),
        },
    })
}

/// Non-negative weights summing to one, applied to `(1 − H̄_TOV, H̄_TME, H̄_TEM)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights(pub [f64; 3]);

impl Weights {
    pub fn new(w: [f64; 3]) -> Result<Self> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput(format!("weights must be non-negative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights must sum to 1 (sum {sum})")));
        }
        Ok(Weights(w))
    }

    pub fn equal() -> Self {
        Weights([1.0 / 3.0; 3])
    }
}

impl std::str::FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("bad weights '{s}': {e}")))?;
        let arr: [f64; 3] = parts
            .try_into()
            .map_err(|_| Error::InvalidInput(format!("expected three weights, got '{s}'")))?;
        Weights::new(arr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarizedEntry {
    pub id: String,
    pub score: f64,
}

/// Affine scalarization, best first; ties keep input order.
pub fn scalarize(scores: &[GraspScores], normalized: &NormalizedScores, weights: &Weights) -> Vec<ScalarizedEntry> {
    let w = weights.0;
    let mut entries: Vec<(usize, f64)> = normalized
        .values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, w[0] * (1.0 - v[0]) + w[1] * v[1] + w[2] * v[2])))
        .collect();
    entries.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    entries
        .into_iter()
        .map(|(i, score)| ScalarizedEntry {
            id: scores[i].id.clone(),
            score,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub argbest: ArgBest,
    pub pareto: Vec<String>,
    pub conflict: bool,
    pub normalized: NormalizedScores,
    pub scalarized: Option<(Weights, Vec<ScalarizedEntry>)>,
}

pub fn rank(scores: &[GraspScores], weights: Option<&Weights>) -> Result<RankingReport> {
    let normalized = normalize(scores)?;
    let pareto = pareto_front(scores, &SENSES)?;
    let Conflict { conflict, argbest } = detect_conflict(scores)?;
    let scalarized = weights.map(|w| (*w, scalarize(scores, &normalized, w)));
    Ok(RankingReport {
        argbest,
        pareto,
        conflict,
        normalized,
        scalarized,
    })
}
