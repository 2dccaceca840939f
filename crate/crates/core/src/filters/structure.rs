use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use crate::error::{FdrError, Result};
use crate::graph::HypothesisGraph;

/// Enumeration limit for classes without a closed-form maximiser.
pub const MAX_ENUMERATION_M: usize = 20;

type Predicate = Arc<dyn Fn(&[usize]) -> bool + Send + Sync>;

/// A class of acceptable rejection sets, always containing the empty set.
#[derive(Clone)]
pub enum StructureClass {
    AllSubsets {
        m: usize,
    },
    Antichains(Arc<HypothesisGraph>),
    Custom {
        m: usize,
        label: String,
        predicate: Predicate,
    },
}

impl fmt::Debug for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StructureClass({}, m={})", self.label(), self.m())
    }
}

impl StructureClass {
    /// A custom class. The predicate receives sorted index lists and is
    /// never asked about the empty set.
    pub fn custom(
        m: usize,
        label: impl Into<String>,
        predicate: impl Fn(&[usize]) -> bool + Send + Sync + 'static,
    ) -> Self {
        StructureClass::Custom {
            m,
            label: label.into(),
            predicate: Arc::new(predicate),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            StructureClass::AllSubsets { m } | StructureClass::Custom { m, .. } => *m,
            StructureClass::Antichains(g) => g.len(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            StructureClass::AllSubsets { .. } => "all-subsets",
            StructureClass::Antichains(_) => "antichains",
            StructureClass::Custom { label, .. } => label,
        }
    }

    /// Membership of a sorted index list.
    pub fn contains(&self, set: &[usize]) -> bool {
        if set.is_empty() {
            return true;
        }
        match self {
            StructureClass::AllSubsets { .. } => true,
            StructureClass::Antichains(g) => g.is_antichain(set),
            StructureClass::Custom { predicate, .. } => predicate(set),
        }
    }

    /// Every member of the class, in increasing bitmask order.
    pub fn enumerate(&self) -> Result<Vec<Vec<usize>>> {
        let m = self.m();
        if m > MAX_ENUMERATION_M {
            return Err(FdrError::DomainTooLarge(format!(
                "cannot enumerate a structure class over {m} > {MAX_ENUMERATION_M} hypotheses"
            )));
        }
        Ok((0u32..1 << m)
            .map(|mask| (0..m).filter(|&j| mask >> j & 1 == 1).collect::<Vec<_>>())
            .filter(|s| self.contains(s))
            .collect())
    }

    /// The lexicographically smallest maximum-cardinality member contained
    /// in the sorted list `r`.
    pub fn max_subset(&self, r: &[usize]) -> Result<Vec<usize>> {
        if let StructureClass::AllSubsets { .. } = self {
            return Ok(r.to_vec());
        }
        if r.len() > MAX_ENUMERATION_M {
            return Err(FdrError::DomainTooLarge(format!(
                "maximum class subset of a {}-element set exceeds the enumeration limit {MAX_ENUMERATION_M}",
                r.len()
            )));
        }
        let top = match self {
            StructureClass::Antichains(g) => g.max_antichain(r).len(),
            _ => r.len(),
        };
        for k in (1..=top).rev() {
            if let Some(c) = r.iter().copied().combinations(k).find(|c| self.contains(c)) {
                return Ok(c);
            }
        }
        Ok(Vec::new())
    }
}
