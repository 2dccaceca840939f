//! Exhaustive verification of filter regularity properties on a finite
//! p-value grid.
//!
//! Each coordinate ranges over the grid, shifted by `jitter · j` so that
//! distinct coordinates never tie. Fixed filters ignore `p`, so a single
//! grid point is used for them.

use std::collections::HashMap;
use std::fmt;

use super::{BlockCollection, Filter};
use crate::error::{FdrError, Result};
use crate::types::RejectionSet;

pub const MAX_CHECK_M: usize = 12;
pub const DEFAULT_GRID: [f64; 3] = [0.1, 0.5, 0.9];
pub const DEFAULT_JITTER: f64 = 1e-3;
pub const DEFAULT_MAX_STATES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterProperty {
    Monotonic,
    Simple,
    BlockSimple(BlockCollection),
    StronglySimple,
    StronglyBlockSimple(BlockCollection),
}

impl fmt::Display for FilterProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterProperty::Monotonic => "monotonic",
            FilterProperty::Simple => "simple",
            FilterProperty::BlockSimple(_) => "block-simple",
            FilterProperty::StronglySimple => "strongly-simple",
            FilterProperty::StronglyBlockSimple(_) => "strongly-block-simple",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckDomain {
    pub m: usize,
    /// Per-coordinate p-value levels, sorted ascending.
    pub grid: Vec<f64>,
    /// Coordinate `j` takes the values `grid[k] + jitter · j`.
    pub jitter: f64,
    /// Restrict rejection sets to threshold sets `{j: p_j <= t}`.
    pub threshold_sets_only: bool,
    /// Cap on the number of `(p, R)` states evaluated.
    pub max_states: usize,
}

impl CheckDomain {
    pub fn new(m: usize) -> Self {
        CheckDomain {
            m,
            grid: DEFAULT_GRID.to_vec(),
            jitter: DEFAULT_JITTER,
            threshold_sets_only: false,
            max_states: DEFAULT_MAX_STATES,
        }
    }

    /// Uses the grid values verbatim, allowing ties across coordinates.
    pub fn exact_grid(mut self) -> Self {
        self.jitter = 0.0;
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    pub fn threshold_sets_only(mut self) -> Self {
        self.threshold_sets_only = true;
        self
    }
}

/// A violating pair of states. For monotonicity `R¹ ⊇ R²` and `p¹ <= p²`
/// but `count1 < count2`; otherwise the two counts should have been equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub hypothesis: Option<usize>,
    pub p1: Vec<f64>,
    pub r1: Vec<usize>,
    pub count1: f64,
    pub p2: Vec<f64>,
    pub r2: Vec<usize>,
    pub count2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
    pub states: usize,
}

struct Table<'a> {
    m: usize,
    levels: usize,
    n_p: usize,
    domain: &'a CheckDomain,
    scale: f64,
    /// Raw counts indexed by `p_index << m | mask`; NaN marks states
    /// outside the domain.
    counts: Vec<f64>,
    /// Per p-point, the hypotheses with positive score for some `R`.
    reach: Vec<u32>,
    /// Threshold levels shared by all p-points, for threshold-set mode.
    thresholds: Vec<f64>,
    /// Threshold-set mode: `masks[p · |T| + t]` is `R(T[t], p)`.
    masks: Vec<u32>,
}

impl Table<'_> {
    fn digit(&self, p: usize, j: usize) -> usize {
        (p / self.levels.pow(j as u32)) % self.levels
    }

    fn pvec(&self, p: usize) -> Vec<f64> {
        (0..self.m)
            .map(|j| self.domain.grid[self.digit(p, j)] + self.domain.jitter * j as f64)
            .collect()
    }

    fn count(&self, p: usize, mask: u32) -> f64 {
        self.counts[p << self.m | mask as usize]
    }

    fn valid(&self, p: usize, mask: u32) -> bool {
        !self.count(p, mask).is_nan()
    }

    fn example(&self, j: Option<usize>, s1: (usize, u32), s2: (usize, u32)) -> Counterexample {
        Counterexample {
            hypothesis: j,
            p1: self.pvec(s1.0),
            r1: mask_indices(s1.1, self.m),
            count1: self.count(s1.0, s1.1) / self.scale,
            p2: self.pvec(s2.0),
            r2: mask_indices(s2.1, self.m),
            count2: self.count(s2.0, s2.1) / self.scale,
        }
    }
}

fn mask_indices(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|&j| mask >> j & 1 == 1).collect()
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn build_table<'a>(f: &Filter, domain: &'a CheckDomain) -> Result<Table<'a>> {
    let m = domain.m;
    if m == 0 {
        return Err(FdrError::invalid(
            "check domain needs at least one hypothesis",
        ));
    }
    if m > MAX_CHECK_M {
        return Err(FdrError::DomainTooLarge(format!(
            "property checks are limited to m <= {MAX_CHECK_M}, got {m}"
        )));
    }
    if let Some(fm) = f.m() {
        if fm != m {
            return Err(FdrError::invalid(format!(
                "filter is defined over {fm} hypotheses, domain has {m}"
            )));
        }
    }
    if domain.grid.is_empty() || domain.grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FdrError::invalid(
            "check grid must be nonempty and strictly increasing",
        ));
    }
    let levels = if f.is_fixed() { 1 } else { domain.grid.len() };
    let n_p = (levels as u128).pow(m as u32);
    let states = n_p << m;
    if states > domain.max_states as u128 {
        return Err(FdrError::DomainTooLarge(format!(
            "{states} states exceed the limit of {}",
            domain.max_states
        )));
    }
    let n_p = n_p as usize;
    let mut table = Table {
        m,
        levels,
        n_p,
        domain,
        scale: f.count_scale(),
        counts: vec![f64::NAN; n_p << m],
        reach: vec![0; n_p],
        thresholds: Vec::new(),
        masks: Vec::new(),
    };
    if domain.threshold_sets_only {
        let mut t: Vec<f64> = (0..m)
            .flat_map(|j| {
                domain
                    .grid
                    .iter()
                    .map(move |g| g + domain.jitter * j as f64)
            })
            .collect();
        t.push(0.0);
        t.sort_by(f64::total_cmp);
        t.dedup();
        table.thresholds = t;
    }
    for p in 0..n_p {
        let pv = table.pvec(p);
        let masks: Vec<u32> = if domain.threshold_sets_only {
            let ms: Vec<u32> = table
                .thresholds
                .iter()
                .map(|&t| (0..m).filter(|&j| pv[j] <= t).fold(0, |a, j| a | 1 << j))
                .collect();
            table.masks.extend_from_slice(&ms);
            ms
        } else {
            (0..1u32 << m).collect()
        };
        for mask in masks {
            let idx = p << m | mask as usize;
            if !table.counts[idx].is_nan() {
                continue;
            }
            let r = RejectionSet::from_mask((0..m).map(|j| mask >> j & 1 == 1).collect());
            let u = f.raw_scores(&r, &pv)?;
            table.counts[idx] = u.iter().sum();
            for (j, &x) in u.iter().enumerate() {
                if x > 0.0 {
                    table.reach[p] |= 1 << j;
                }
            }
        }
    }
    Ok(table)
}

/// Exhaustively tests `property` for `f` over `domain`, returning the
/// first violation in order of increasing rejection-set bitmask.
pub fn check_filter_property(
    f: &Filter,
    property: &FilterProperty,
    domain: &CheckDomain,
) -> Result<PropertyCheck> {
    if let FilterProperty::BlockSimple(c) | FilterProperty::StronglyBlockSimple(c) = property {
        if c.m() != domain.m {
            return Err(FdrError::invalid(
                "block collection size differs from the domain",
            ));
        }
    }
    let table = build_table(f, domain)?;
    let states = table.counts.iter().filter(|c| !c.is_nan()).count();
    let counterexample = match property {
        FilterProperty::Monotonic if domain.threshold_sets_only => monotonic_thresholds(&table),
        FilterProperty::Monotonic => monotonic(&table),
        FilterProperty::Simple => invariance(&table, &BlockCollection::singletons(domain.m), true),
        FilterProperty::BlockSimple(c) => invariance(&table, c, true),
        FilterProperty::StronglySimple => strongly_simple(&table),
        FilterProperty::StronglyBlockSimple(c) => invariance(&table, c, false),
    };
    Ok(PropertyCheck {
        holds: counterexample.is_none(),
        counterexample,
        states,
    })
}

/// Checks covering relations of the product order: adding one hypothesis
/// to `R`, or lowering one coordinate of `p` by one grid step.
fn monotonic(t: &Table) -> Option<Counterexample> {
    let m = t.m;
    for mask in 0..1u32 << m {
        for p in 0..t.n_p {
            let here = t.count(p, mask);
            for j in (0..m).filter(|&j| mask >> j & 1 == 0) {
                let bigger = mask | 1 << j;
                if t.count(p, bigger) < here && !approx_eq(t.count(p, bigger), here) {
                    return Some(t.example(None, (p, bigger), (p, mask)));
                }
            }
            for j in (0..m).filter(|&j| t.digit(p, j) > 0) {
                let lower = p - t.levels.pow(j as u32);
                if t.count(lower, mask) < here && !approx_eq(t.count(lower, mask), here) {
                    return Some(t.example(None, (lower, mask), (p, mask)));
                }
            }
        }
    }
    None
}

/// `h(p, t) = ‖F(R(t, p), p)‖` must rise with `t` and fall with `p`.
fn monotonic_thresholds(t: &Table) -> Option<Counterexample> {
    let nt = t.thresholds.len();
    let mask = |p: usize, k: usize| t.masks[p * nt + k];
    for p in 0..t.n_p {
        for k in 0..nt {
            let here = t.count(p, mask(p, k));
            if k + 1 < nt {
                let up = t.count(p, mask(p, k + 1));
                if up < here && !approx_eq(up, here) {
                    return Some(t.example(None, (p, mask(p, k + 1)), (p, mask(p, k))));
                }
            }
            for j in (0..t.m).filter(|&j| t.digit(p, j) > 0) {
                let lower = p - t.levels.pow(j as u32);
                let c = t.count(lower, mask(lower, k));
                if c < here && !approx_eq(c, here) {
                    return Some(t.example(None, (lower, mask(lower, k)), (p, mask(p, k))));
                }
            }
        }
    }
    None
}

fn strongly_simple(t: &Table) -> Option<Counterexample> {
    for mask in 0..1u32 << t.m {
        let mut reference: Option<usize> = None;
        for p in (0..t.n_p).filter(|&p| t.valid(p, mask)) {
            match reference {
                None => reference = Some(p),
                Some(r) if !approx_eq(t.count(r, mask), t.count(p, mask)) => {
                    return Some(t.example(None, (r, mask), (p, mask)));
                }
                _ => {}
            }
        }
    }
    None
}

/// For every `j`, states `(p, R)` with `j ∈ R` that agree outside `I_j`
/// in both `p` and `R` must share one count. With `need_reach`, only
/// p-points at which `j` can receive positive score take part.
fn invariance(t: &Table, sets: &BlockCollection, need_reach: bool) -> Option<Counterexample> {
    let m = t.m;
    for j in 0..m {
        let block: Vec<usize> = sets.set(j).to_vec();
        let block_mask: u32 = block.iter().fold(0, |a, &i| a | 1 << i);
        let mut seen: HashMap<(usize, u32), (usize, u32)> = HashMap::new();
        for p in 0..t.n_p {
            if need_reach && t.reach[p] >> j & 1 == 0 {
                continue;
            }
            let p_key = block
                .iter()
                .fold(p, |acc, &i| acc - t.digit(p, i) * t.levels.pow(i as u32));
            for mask in (0..1u32 << m).filter(|r| r >> j & 1 == 1) {
                if !t.valid(p, mask) {
                    continue;
                }
                let key = (p_key, mask & !block_mask);
                match seen.get(&key) {
                    None => {
                        seen.insert(key, (p, mask));
                    }
                    Some(&(rp, rm)) => {
                        if !approx_eq(t.count(rp, rm), t.count(p, mask)) {
                            return Some(t.example(Some(j), (rp, rm), (p, mask)));
                        }
                    }
                }
            }
        }
    }
    None
}
