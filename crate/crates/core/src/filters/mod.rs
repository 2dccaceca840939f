//! Filters map a rejection set and the p-values to prioritization scores.
//!
//! Every filter exposes a *raw* score vector and a normalized vector in
//! `[0, 1]` that is reported. The two differ by [`Filter::count_scale`],
//! which is `ln G` for soft outer nodes and `1` otherwise.
//!
//! [`Filter::threshold_profile`] evaluates the raw count on every distinct
//! threshold of a step-up scan. Most kinds update it incrementally as
//! hypotheses enter the rejection set.

mod blocks;
mod check;
mod soft;
mod structure;

use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{FdrError, Result};
use crate::graph::HypothesisGraph;
use crate::types::{PValueVector, PrioritizationVector, RejectionSet};

pub use blocks::{BlockCollection, BlockPartition};
pub use check::{
    check_filter_property, CheckDomain, Counterexample, FilterProperty, PropertyCheck,
};
pub use soft::{soft_outer_gammas, soft_outer_weighted_count_identity};
pub use structure::{StructureClass, MAX_ENUMERATION_M};

type ScreenFn = Arc<dyn Fn(&[f64]) -> Vec<bool> + Send + Sync>;

/// A screening function `S(p)` returning a membership mask.
#[derive(Clone)]
pub struct Screen {
    label: String,
    func: ScreenFn,
    blocks: Option<BlockPartition>,
}

impl fmt::Debug for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Screen({})", self.label)
    }
}

impl Screen {
    pub fn new(
        label: impl Into<String>,
        func: impl Fn(&[f64]) -> Vec<bool> + Send + Sync + 'static,
    ) -> Self {
        Screen {
            label: label.into(),
            func: Arc::new(func),
            blocks: None,
        }
    }

    /// Keeps the minimum-p hypotheses of every block.
    pub fn block_minimum(blocks: BlockPartition) -> Self {
        let b = blocks.clone();
        Screen {
            label: "block-minimum".into(),
            func: Arc::new(move |p| b.block_minima(p)),
            blocks: Some(blocks),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<bool>> {
        let s = (self.func)(p);
        if s.len() != p.len() {
            return Err(FdrError::invalid(format!(
                "screen '{}' returned {} flags for {} p-values",
                self.label,
                s.len(),
                p.len()
            )));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub enum FilterKind {
    Trivial,
    FixedWeights(Vec<f64>),
    Screening(Screen),
    Clumping(BlockPartition),
    OuterNodes(Arc<HypothesisGraph>),
    SoftOuterNodes(Arc<HypothesisGraph>),
    StructureInduced(StructureClass),
}

/// Declared regularity of a filter over arbitrary rejection sets.
/// `None` means unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterProperties {
    /// Output depends on `R` only.
    pub fixed: bool,
    pub monotonic: Option<bool>,
    /// Monotonic when `R` ranges over threshold sets `{j: p_j <= t}`.
    pub monotonic_on_threshold_sets: Option<bool>,
    pub simple: Option<bool>,
    pub block_simple: Option<bool>,
    pub strongly_simple: Option<bool>,
    pub strongly_block_simple: Option<bool>,
}

impl FilterProperties {
    fn fixed(monotonic: bool) -> Self {
        FilterProperties {
            fixed: true,
            monotonic: Some(monotonic),
            monotonic_on_threshold_sets: Some(monotonic),
            simple: Some(true),
            block_simple: Some(true),
            strongly_simple: Some(true),
            strongly_block_simple: Some(true),
        }
    }
}

/// Raw counts of a filter along the thresholds of a step-up scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdProfile {
    /// Distinct thresholds `{0} ∪ {p_j}` in increasing order.
    pub thresholds: Vec<f64>,
    /// Raw count of `F({j: p_j <= t}, p)` at each threshold.
    pub counts: Vec<f64>,
}

impl ThresholdProfile {
    /// Step evaluation at an arbitrary `t >= 0`: the count at the largest
    /// threshold not above `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.thresholds.partition_point(|&s| s <= t);
        if k == 0 {
            0.0
        } else {
            self.counts[k - 1]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Filter {
    kind: FilterKind,
    properties: FilterProperties,
}

impl Filter {
    pub fn trivial() -> Self {
        Filter {
            kind: FilterKind::Trivial,
            properties: FilterProperties::fixed(true),
        }
    }

    pub fn fixed_weights(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(FdrError::invalid(format!(
                "fixed weight {w} outside [0, 1]"
            )));
        }
        Ok(Filter {
            kind: FilterKind::FixedWeights(weights),
            properties: FilterProperties::fixed(true),
        })
    }

    pub fn screening(screen: Screen) -> Self {
        let known = screen.blocks.is_some();
        let properties = FilterProperties {
            fixed: false,
            monotonic: known.then_some(false),
            monotonic_on_threshold_sets: known.then_some(true),
            simple: known.then_some(true),
            block_simple: known.then_some(true),
            strongly_simple: known.then_some(false),
            strongly_block_simple: known.then_some(false),
        };
        Filter {
            kind: FilterKind::Screening(screen),
            properties,
        }
    }

    /// Keeps the minimum-p rejected hypotheses of each block. Over
    /// arbitrary rejection sets the count `Σ_k 1(B_k ∩ R ∩ argmin ≠ ∅)` is
    /// not monotonic; over threshold sets it equals the number of blocks
    /// hit, which is.
    pub fn clumping(blocks: BlockPartition) -> Self {
        Filter {
            kind: FilterKind::Clumping(blocks),
            properties: FilterProperties {
                fixed: false,
                monotonic: Some(false),
                monotonic_on_threshold_sets: Some(true),
                simple: Some(true),
                block_simple: Some(true),
                strongly_simple: Some(false),
                strongly_block_simple: Some(false),
            },
        }
    }

    pub fn outer_nodes(graph: Arc<HypothesisGraph>) -> Self {
        let tree = graph.is_tree();
        Filter {
            kind: FilterKind::OuterNodes(graph),
            properties: FilterProperties::fixed(tree),
        }
    }

    pub fn soft_outer_nodes(graph: Arc<HypothesisGraph>) -> Result<Self> {
        if graph.annotations().is_none() {
            return Err(FdrError::invalid(
                "soft outer nodes filter requires gene annotations",
            ));
        }
        Ok(Filter {
            kind: FilterKind::SoftOuterNodes(graph),
            properties: FilterProperties::fixed(true),
        })
    }

    pub fn structure_induced(class: StructureClass) -> Self {
        Filter {
            kind: FilterKind::StructureInduced(class),
            properties: FilterProperties::fixed(true),
        }
    }

    pub fn kind(&self) -> &FilterKind {
        &self.kind
    }

    pub fn properties(&self) -> FilterProperties {
        self.properties
    }

    pub fn is_fixed(&self) -> bool {
        self.properties.fixed
    }

    pub fn label(&self) -> String {
        match &self.kind {
            FilterKind::Trivial => "trivial".into(),
            FilterKind::FixedWeights(_) => "fixed-weights".into(),
            FilterKind::Screening(s) => format!("screening({})", s.label),
            FilterKind::Clumping(_) => "clumping".into(),
            FilterKind::OuterNodes(_) => "outer-nodes".into(),
            FilterKind::SoftOuterNodes(_) => "soft-outer-nodes".into(),
            FilterKind::StructureInduced(c) => format!("structure({})", c.label()),
        }
    }

    /// Number of hypotheses the filter is defined over, if it is bound to one.
    pub fn m(&self) -> Option<usize> {
        match &self.kind {
            FilterKind::Trivial | FilterKind::Screening(_) => None,
            FilterKind::FixedWeights(w) => Some(w.len()),
            FilterKind::Clumping(b) => Some(b.m()),
            FilterKind::OuterNodes(g) | FilterKind::SoftOuterNodes(g) => Some(g.len()),
            FilterKind::StructureInduced(c) => Some(c.m()),
        }
    }

    /// The collection `I_j` this filter is block simple with respect to.
    pub fn block_collection(&self) -> Option<BlockCollection> {
        match &self.kind {
            FilterKind::Clumping(b) => Some(b.collection()),
            FilterKind::Screening(s) => s.blocks.as_ref().map(BlockPartition::collection),
            _ => None,
        }
    }

    /// Divisor turning raw scores into reported scores in `[0, 1]`.
    pub fn count_scale(&self) -> f64 {
        match &self.kind {
            FilterKind::SoftOuterNodes(g) => soft::scale(g),
            _ => 1.0,
        }
    }

    fn check_dims(&self, m: usize) -> Result<()> {
        if let Some(fm) = self.m() {
            if fm != m {
                return Err(FdrError::invalid(format!(
                    "filter '{}' is defined over {fm} hypotheses, got {m}",
                    self.label()
                )));
            }
        }
        Ok(())
    }

    /// Unnormalized scores; zero outside `r`.
    pub fn raw_scores(&self, r: &RejectionSet, p: &[f64]) -> Result<Vec<f64>> {
        let m = p.len();
        if r.m() != m {
            return Err(FdrError::invalid(format!(
                "rejection set over {} hypotheses, p-values over {m}",
                r.m()
            )));
        }
        self.check_dims(m)?;
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        Ok(match &self.kind {
            FilterKind::Trivial => r.mask().iter().map(|&b| ind(b)).collect(),
            FilterKind::FixedWeights(w) => r
                .mask()
                .iter()
                .zip(w)
                .map(|(&b, &w)| if b { w } else { 0.0 })
                .collect(),
            FilterKind::Screening(s) => {
                let keep = s.evaluate(p)?;
                r.mask()
                    .iter()
                    .zip(keep)
                    .map(|(&b, k)| ind(b && k))
                    .collect()
            }
            FilterKind::Clumping(blocks) => {
                let lead = blocks.lead_weights(p);
                r.mask()
                    .iter()
                    .zip(lead)
                    .map(|(&b, w)| if b { w } else { 0.0 })
                    .collect()
            }
            FilterKind::OuterNodes(g) => {
                let mut rb = FixedBitSet::with_capacity(m);
                for j in r.iter() {
                    rb.insert(j);
                }
                (0..m)
                    .map(|i| ind(r.contains(i) && g.descendants(i).is_disjoint(&rb)))
                    .collect()
            }
            FilterKind::SoftOuterNodes(g) => soft::raw_scores(g, r),
            FilterKind::StructureInduced(c) => {
                let mut u = vec![0.0; m];
                for j in c.max_subset(&r.indices())? {
                    u[j] = 1.0;
                }
                u
            }
        })
    }

    /// `‖F(R, p)‖` on the raw scale.
    pub fn raw_count(&self, r: &RejectionSet, p: &[f64]) -> Result<f64> {
        Ok(self.raw_scores(r, p)?.iter().sum())
    }

    /// The reported prioritization vector `F(R, p)`.
    pub fn apply(&self, r: &RejectionSet, p: &PValueVector) -> Result<PrioritizationVector> {
        self.apply_values(r, p.values())
    }

    pub fn apply_values(&self, r: &RejectionSet, p: &[f64]) -> Result<PrioritizationVector> {
        let scale = self.count_scale();
        let mut u = self.raw_scores(r, p)?;
        if scale != 1.0 {
            for x in &mut u {
                *x = (*x / scale).min(1.0);
            }
        }
        Ok(PrioritizationVector::from_scores_unchecked(u))
    }

    /// Raw counts at every distinct threshold of `{0} ∪ {p_j}`.
    pub fn threshold_profile(&self, p: &[f64]) -> Result<ThresholdProfile> {
        self.profile(p, None)
    }

    /// Raw score mass on hypotheses flagged in `null` at every threshold.
    pub fn null_threshold_profile(&self, p: &[f64], null: &[bool]) -> Result<ThresholdProfile> {
        if null.len() != p.len() {
            return Err(FdrError::invalid("null mask length differs from p-values"));
        }
        self.profile(p, Some(null))
    }

    fn profile(&self, p: &[f64], null: Option<&[bool]>) -> Result<ThresholdProfile> {
        let m = p.len();
        self.check_dims(m)?;
        let groups = threshold_groups(p);
        let mut thresholds = Vec::with_capacity(groups.len() + 1);
        let mut counts = Vec::with_capacity(groups.len() + 1);
        if groups.first().is_none_or(|(t, _)| *t > 0.0) {
            thresholds.push(0.0);
            counts.push(0.0);
        }
        let weight = |j: usize| null.is_none_or(|n| n[j]);

        match &self.kind {
            FilterKind::Trivial | FilterKind::FixedWeights(_) => {
                let w = |j: usize| match &self.kind {
                    FilterKind::FixedWeights(w) => w[j],
                    _ => 1.0,
                };
                let mut acc = 0.0;
                for (t, members) in &groups {
                    acc += members
                        .iter()
                        .filter(|&&j| weight(j))
                        .map(|&j| w(j))
                        .sum::<f64>();
                    thresholds.push(*t);
                    counts.push(acc);
                }
            }
            FilterKind::Screening(_) | FilterKind::Clumping(_) => {
                let keep: Vec<f64> = match &self.kind {
                    FilterKind::Screening(s) => s
                        .evaluate(p)?
                        .into_iter()
                        .map(|k| if k { 1.0 } else { 0.0 })
                        .collect(),
                    FilterKind::Clumping(b) => b.lead_weights(p),
                    _ => unreachable!(),
                };
                let mut acc = 0.0;
                for (t, members) in &groups {
                    acc += members
                        .iter()
                        .filter(|&&j| weight(j))
                        .map(|&j| keep[j])
                        .sum::<f64>();
                    thresholds.push(*t);
                    counts.push(acc);
                }
            }
            FilterKind::OuterNodes(g) => {
                let mut rejected = FixedBitSet::with_capacity(m);
                let mut outer = FixedBitSet::with_capacity(m);
                let mut acc = 0.0;
                for (t, members) in &groups {
                    for &j in members {
                        rejected.insert(j);
                        let mut lost = outer.clone();
                        lost.intersect_with(g.ancestors(j));
                        for a in lost.ones() {
                            if weight(a) {
                                acc -= 1.0;
                            }
                        }
                        outer.difference_with(g.ancestors(j));
                        if g.descendants(j).is_disjoint(&rejected) {
                            outer.insert(j);
                            if weight(j) {
                                acc += 1.0;
                            }
                        }
                    }
                    thresholds.push(*t);
                    counts.push(acc);
                }
            }
            FilterKind::SoftOuterNodes(g) if null.is_none() => {
                let mut state = soft::IncrementalCount::new(g);
                for (t, members) in &groups {
                    for &j in members {
                        state.add(j);
                    }
                    thresholds.push(*t);
                    counts.push(state.total());
                }
            }
            FilterKind::SoftOuterNodes(_) | FilterKind::StructureInduced(_) => {
                let mut r = RejectionSet::empty(m);
                for (t, members) in &groups {
                    for &j in members {
                        r.insert(j);
                    }
                    let u = self.raw_scores(&r, p)?;
                    thresholds.push(*t);
                    counts.push((0..m).filter(|&j| weight(j)).map(|j| u[j]).sum());
                }
            }
        }
        Ok(ThresholdProfile { thresholds, counts })
    }
}

/// The Definition-level operation `F(R, p)`.
pub fn apply_filter(
    f: &Filter,
    r: &RejectionSet,
    p: &PValueVector,
) -> Result<PrioritizationVector> {
    f.apply(r, p)
}

/// Hypotheses grouped by equal p-value, in increasing p order.
pub(crate) fn threshold_groups(p: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for j in order {
        match groups.last_mut() {
            Some((t, members)) if *t == p[j] => members.push(j),
            _ => groups.push((p[j], vec![j])),
        }
    }
    groups
}

#[cfg(test)]
mod tests;
