//! Domain types shared across the crate and the elementary error-rate
//! arithmetic on prioritization vectors.
//!
//! Hypotheses are addressed by 0-based index internally. The string ids
//! carried by [`PValueVector`] are the external handle used by files and
//! reports.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{FdrError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    ids: Arc<[String]>,
    values: Vec<f64>,
}

impl PValueVector {
    /// Builds a vector after checking that every value lies in `[0, 1]`,
    /// ids are unique and `m >= 1`.
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(FdrError::invalid(format!(
                "{} ids but {} p-values",
                ids.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(FdrError::invalid(format!("duplicate hypothesis id '{id}'")));
            }
        }
        Self::with_shared_ids(ids.into(), values)
    }

    /// Builds a vector reusing an id table that has already been validated
    /// for uniqueness. Simulations reuse one table across replicates.
    pub fn with_shared_ids(ids: Arc<[String]>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FdrError::invalid("at least one p-value is required"));
        }
        if ids.len() != values.len() {
            return Err(FdrError::invalid(format!(
                "{} ids but {} p-values",
                ids.len(),
                values.len()
            )));
        }
        if let Some((j, p)) = values
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(FdrError::invalid(format!(
                "p-value {p} for '{}' is outside [0, 1]",
                ids[j]
            )));
        }
        Ok(PValueVector { ids, values })
    }

    /// Ids default to the 1-based position of each hypothesis.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let ids = default_ids(values.len());
        Self::with_shared_ids(ids, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn shared_ids(&self) -> Arc<[String]> {
        Arc::clone(&self.ids)
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }
}

pub fn default_ids(m: usize) -> Arc<[String]> {
    (1..=m).map(|i| i.to_string()).collect::<Vec<_>>().into()
}

/// A subset of `{0, .., m-1}` kept as an indicator vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RejectionSet {
    mask: Vec<bool>,
}

impl RejectionSet {
    pub fn empty(m: usize) -> Self {
        RejectionSet {
            mask: vec![false; m],
        }
    }

    pub fn full(m: usize) -> Self {
        RejectionSet {
            mask: vec![true; m],
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        RejectionSet { mask }
    }

    pub fn from_indices(m: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; m];
        for j in indices {
            if j >= m {
                return Err(FdrError::IndexOutOfRange { index: j, len: m });
            }
            mask[j] = true;
        }
        Ok(RejectionSet { mask })
    }

    /// `{j : p_j <= t}`.
    pub fn at_threshold(p: &[f64], t: f64) -> Self {
        RejectionSet {
            mask: p.iter().map(|&pj| pj <= t).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.mask.get(j).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, j: usize) {
        self.mask[j] = true;
    }

    pub fn remove(&mut self, j: usize) {
        self.mask[j] = false;
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Members in increasing index order.
    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
    }

    pub fn is_superset(&self, other: &RejectionSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| a || !b)
    }

    /// The indicator vector as a prioritization vector (the trivial filter).
    pub fn indicator(&self) -> PrioritizationVector {
        PrioritizationVector {
            scores: self
                .mask
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

/// Per-hypothesis scores in `[0, 1]`, zero outside the rejection set that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct PrioritizationVector {
    scores: Vec<f64>,
}

impl PrioritizationVector {
    pub fn zeros(m: usize) -> Self {
        PrioritizationVector {
            scores: vec![0.0; m],
        }
    }

    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(FdrError::invalid(format!("score {s} is outside [0, 1]")));
        }
        Ok(PrioritizationVector { scores })
    }

    pub(crate) fn from_scores_unchecked(scores: Vec<f64>) -> Self {
        debug_assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
        PrioritizationVector { scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn get(&self, j: usize) -> f64 {
        self.scores[j]
    }

    /// `{j : U_j > 0}`.
    pub fn support(&self) -> RejectionSet {
        RejectionSet::from_mask(self.scores.iter().map(|&s| s > 0.0).collect())
    }

    pub fn weighted_count(&self) -> f64 {
        weighted_count(self)
    }
}

/// Which hypotheses are truly null.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    null: Vec<bool>,
}

impl GroundTruth {
    pub fn from_null_mask(null: Vec<bool>) -> Self {
        GroundTruth { null }
    }

    pub fn from_nonnulls(m: usize, nonnulls: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut null = vec![true; m];
        for j in nonnulls {
            if j >= m {
                return Err(FdrError::IndexOutOfRange { index: j, len: m });
            }
            null[j] = false;
        }
        Ok(GroundTruth { null })
    }

    pub fn all_null(m: usize) -> Self {
        GroundTruth {
            null: vec![true; m],
        }
    }

    pub fn m(&self) -> usize {
        self.null.len()
    }

    pub fn is_null(&self, j: usize) -> bool {
        self.null[j]
    }

    pub fn null_mask(&self) -> &[bool] {
        &self.null
    }

    pub fn nulls(&self) -> Vec<usize> {
        (0..self.m()).filter(|&j| self.null[j]).collect()
    }

    pub fn nonnulls(&self) -> Vec<usize> {
        (0..self.m()).filter(|&j| !self.null[j]).collect()
    }

    pub fn n_nonnull(&self) -> usize {
        self.null.iter().filter(|&&b| !b).count()
    }
}

/// Output of a step-up procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureResult {
    /// The selected threshold, always `0` or one of the input p-values.
    pub threshold: f64,
    pub pre_filter: RejectionSet,
    pub post_filter: PrioritizationVector,
    /// `(t, FDP-hat(t))` for every grid point that was evaluated, ascending in `t`.
    pub fdp_hat_trace: Vec<(f64, f64)>,
}

/// `sum_j U_j`.
pub fn weighted_count(u: &PrioritizationVector) -> f64 {
    u.scores.iter().sum()
}

/// Null share of the total prioritization mass, with `0/0 = 0`.
pub fn generalized_fdp(u: &PrioritizationVector, truth: &GroundTruth) -> f64 {
    assert_eq!(u.len(), truth.m(), "prioritization and truth sizes differ");
    let total = weighted_count(u);
    if total <= 0.0 {
        return 0.0;
    }
    let null_mass: f64 = u
        .scores
        .iter()
        .zip(&truth.null)
        .filter_map(|(&s, &is_null)| is_null.then_some(s))
        .sum();
    (null_mass / total).clamp(0.0, 1.0)
}

/// Non-null share of the prioritization mass, `sum_{j in H1} U_j`.
pub fn true_discovery_mass(u: &PrioritizationVector, truth: &GroundTruth) -> f64 {
    u.scores
        .iter()
        .zip(&truth.null)
        .filter_map(|(&s, &is_null)| (!is_null).then_some(s))
        .sum()
}
