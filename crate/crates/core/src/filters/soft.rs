//! Soft outer nodes: each gene is credited to the smallest rejected nodes
//! containing it, and nodes are weighted by information content.

use crate::error::{FdrError, Result};
use crate::graph::{Annotations, HypothesisGraph};
use crate::types::RejectionSet;

fn annotations(g: &HypothesisGraph) -> &Annotations {
    g.annotations()
        .expect("soft outer nodes filter is only constructed on annotated graphs")
}

pub(super) fn scale(g: &HypothesisGraph) -> f64 {
    let universe = annotations(g).universe();
    if universe > 1 {
        (universe as f64).ln()
    } else {
        1.0
    }
}

/// `ln(G / s) / s`, the per-gene contribution when `S_g = s`.
fn gene_weight(s: usize, universe: usize) -> f64 {
    (universe as f64 / s as f64).ln() / s as f64
}

/// `S_g` and `|R^g|` for every gene; `S_g = 0` marks a gene no rejected
/// node contains.
fn smallest_containing(ann: &Annotations, r: &RejectionSet) -> (Vec<usize>, Vec<usize>) {
    let mut size = vec![0usize; ann.universe()];
    let mut ties = vec![0usize; ann.universe()];
    for j in r.iter() {
        let s = ann.genes(j).len();
        for &gene in ann.genes(j) {
            let gi = gene as usize;
            if size[gi] == 0 || s < size[gi] {
                size[gi] = s;
                ties[gi] = 1;
            } else if s == size[gi] {
                ties[gi] += 1;
            }
        }
    }
    (size, ties)
}

/// Raw scores `U_j = -ln(|G_j|/G) γ_j` with
/// `γ_j = Σ_{g ∈ G_j, j ∈ R^g} (1/|R^g|) / |G_j|`.
pub(super) fn raw_scores(g: &HypothesisGraph, r: &RejectionSet) -> Vec<f64> {
    let ann = annotations(g);
    let universe = ann.universe();
    let (size, ties) = smallest_containing(ann, r);
    let mut u = vec![0.0; g.len()];
    for j in r.iter() {
        let genes = ann.genes(j);
        let s = genes.len();
        if s == 0 {
            continue;
        }
        let credit: f64 = genes
            .iter()
            .filter(|&&gene| size[gene as usize] == s)
            .map(|&gene| 1.0 / ties[gene as usize] as f64)
            .sum();
        let gamma = credit / s as f64;
        u[j] = (universe as f64 / s as f64).ln() * gamma;
    }
    u
}

/// The per-node fractions `γ_j` of novel genes.
pub fn soft_outer_gammas(g: &HypothesisGraph, r: &RejectionSet) -> Result<Vec<f64>> {
    let ann = g
        .annotations()
        .ok_or_else(|| FdrError::invalid("graph has no gene annotations"))?;
    let (size, ties) = smallest_containing(ann, r);
    Ok((0..g.len())
        .map(|j| {
            let genes = ann.genes(j);
            if !r.contains(j) || genes.is_empty() {
                return 0.0;
            }
            let credit: f64 = genes
                .iter()
                .filter(|&&gene| size[gene as usize] == genes.len())
                .map(|&gene| 1.0 / ties[gene as usize] as f64)
                .sum();
            credit / genes.len() as f64
        })
        .collect())
}

/// `Σ_g -ln(S_g/G)/S_g` over genes contained in some rejected node. Equals
/// the raw weighted count of the soft outer nodes filter.
pub fn soft_outer_weighted_count_identity(g: &HypothesisGraph, r: &RejectionSet) -> Result<f64> {
    let ann = g
        .annotations()
        .ok_or_else(|| FdrError::invalid("graph has no gene annotations"))?;
    let (size, _) = smallest_containing(ann, r);
    Ok(size
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| gene_weight(s, ann.universe()))
        .sum())
}

/// Running `Σ_g -ln(S_g/G)/S_g` as nodes join the rejection set.
pub(super) struct IncrementalCount<'a> {
    ann: &'a Annotations,
    size: Vec<usize>,
    total: f64,
}

impl<'a> IncrementalCount<'a> {
    pub(super) fn new(g: &'a HypothesisGraph) -> Self {
        let ann = annotations(g);
        IncrementalCount {
            ann,
            size: vec![0; ann.universe()],
            total: 0.0,
        }
    }

    pub(super) fn add(&mut self, j: usize) {
        let genes = self.ann.genes(j);
        let s = genes.len();
        let universe = self.ann.universe();
        for &gene in genes {
            let cur = &mut self.size[gene as usize];
            if *cur == 0 {
                self.total += gene_weight(s, universe);
                *cur = s;
            } else if s < *cur {
                self.total += gene_weight(s, universe) - gene_weight(*cur, universe);
                *cur = s;
            }
        }
    }

    pub(super) fn total(&self) -> f64 {
        self.total
    }
}
