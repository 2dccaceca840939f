//! Rooted DAGs and trees over hypotheses.
//!
//! Each node carries a precomputed descendant and ancestor bitset, so
//! ancestry queries are O(1) once the graph has been built. Optional gene
//! annotations must respect inclusion along every edge.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::error::{FdrError, Result};
use crate::stats;
use crate::types::GroundTruth;

/// How an internal node's intersection hypothesis is tested from the
/// p-values of its base hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombinationMethod {
    Simes,
    Fisher,
}

impl CombinationMethod {
    pub fn combine(self, p: &[f64]) -> Result<f64> {
        match self {
            CombinationMethod::Simes => stats::simes(p),
            CombinationMethod::Fisher => stats::fisher(p),
        }
    }
}

/// Gene sets attached to graph nodes.
#[derive(Debug, Clone)]
pub struct Annotations {
    /// Sorted gene indices per node.
    genes: Vec<Vec<u32>>,
    gene_names: Vec<String>,
    universe: usize,
}

impl Annotations {
    pub fn genes(&self, node: usize) -> &[u32] {
        &self.genes[node]
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    /// Size `G` of the gene universe.
    pub fn universe(&self) -> usize {
        self.universe
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    descendants: Vec<FixedBitSet>,
    ancestors: Vec<FixedBitSet>,
    leaves: Vec<usize>,
    leaf_position: Vec<Option<usize>>,
    annotations: Option<Annotations>,
}

impl HypothesisGraph {
    /// Builds a graph over `ids` from `(parent, child)` index pairs.
    pub fn new(ids: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let m = ids.len();
        if m == 0 {
            return Err(FdrError::invalid("graph has no nodes"));
        }
        let mut index = HashMap::with_capacity(m);
        for (j, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), j).is_some() {
                return Err(FdrError::invalid(format!("duplicate node id '{id}'")));
            }
        }
        let mut children = vec![Vec::new(); m];
        let mut parents = vec![Vec::new(); m];
        for &(a, b) in edges {
            for x in [a, b] {
                if x >= m {
                    return Err(FdrError::IndexOutOfRange { index: x, len: m });
                }
            }
            if a == b {
                return Err(FdrError::invalid(format!("self-loop at node '{}'", ids[a])));
            }
            if !children[a].contains(&b) {
                children[a].push(b);
                parents[b].push(a);
            }
        }

        // Kahn's algorithm; leftover nodes sit on a cycle.
        let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut order: Vec<usize> = (0..m).filter(|&j| indegree[j] == 0).collect();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &c in &children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    order.push(c);
                }
            }
        }
        if order.len() != m {
            return Err(FdrError::invalid("graph contains a cycle"));
        }

        let mut descendants = vec![FixedBitSet::with_capacity(m); m];
        for &v in order.iter().rev() {
            let mut acc = FixedBitSet::with_capacity(m);
            for &c in &children[v] {
                acc.insert(c);
                acc.union_with(&descendants[c]);
            }
            descendants[v] = acc;
        }
        let mut ancestors = vec![FixedBitSet::with_capacity(m); m];
        for &v in &order {
            let mut acc = FixedBitSet::with_capacity(m);
            for &p in &parents[v] {
                acc.insert(p);
                acc.union_with(&ancestors[p]);
            }
            ancestors[v] = acc;
        }

        let leaves: Vec<usize> = (0..m).filter(|&j| children[j].is_empty()).collect();
        let mut leaf_position = vec![None; m];
        for (k, &l) in leaves.iter().enumerate() {
            leaf_position[l] = Some(k);
        }

        Ok(HypothesisGraph {
            ids,
            index,
            children,
            parents,
            descendants,
            ancestors,
            leaves,
            leaf_position,
            annotations: None,
        })
    }

    /// Builds a graph from `(parent_id, child_id)` pairs over `ids`.
    pub fn from_id_edges(ids: Vec<String>, edges: &[(String, String)]) -> Result<Self> {
        let lookup: HashMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(j, s)| (s.as_str(), j))
            .collect();
        let resolve = |s: &String| {
            lookup
                .get(s.as_str())
                .copied()
                .ok_or_else(|| FdrError::invalid(format!("edge references unknown node '{s}'")))
        };
        let pairs = edges
            .iter()
            .map(|(a, b)| Ok((resolve(a)?, resolve(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ids, &pairs)
    }

    /// Attaches gene annotations given as gene-id lists per node. The
    /// universe defaults to the number of distinct genes.
    pub fn with_annotations(
        mut self,
        per_node: Vec<Vec<String>>,
        universe: Option<usize>,
    ) -> Result<Self> {
        if per_node.len() != self.len() {
            return Err(FdrError::invalid(format!(
                "{} annotation rows for {} nodes",
                per_node.len(),
                self.len()
            )));
        }
        let mut gene_index: HashMap<String, u32> = HashMap::new();
        let mut gene_names = Vec::new();
        let mut genes = Vec::with_capacity(per_node.len());
        for list in per_node {
            let mut row = Vec::with_capacity(list.len());
            for g in list {
                let next = gene_names.len() as u32;
                let k = *gene_index.entry(g.clone()).or_insert_with(|| {
                    gene_names.push(g);
                    next
                });
                row.push(k);
            }
            row.sort_unstable();
            row.dedup();
            genes.push(row);
        }
        let universe = universe.unwrap_or(gene_names.len());
        if universe < gene_names.len() {
            return Err(FdrError::invalid(format!(
                "gene universe {universe} smaller than the {} annotated genes",
                gene_names.len()
            )));
        }
        self.set_annotations(Annotations {
            genes,
            gene_names,
            universe,
        })?;
        Ok(self)
    }

    /// Attaches annotations given as gene indices in `0..universe`.
    pub fn with_gene_indices(mut self, per_node: Vec<Vec<u32>>, universe: usize) -> Result<Self> {
        if per_node.len() != self.len() {
            return Err(FdrError::invalid("annotation rows do not match node count"));
        }
        let mut genes = Vec::with_capacity(per_node.len());
        for mut row in per_node {
            row.sort_unstable();
            row.dedup();
            if let Some(&g) = row.last() {
                if g as usize >= universe {
                    return Err(FdrError::invalid(format!(
                        "gene index {g} outside universe of {universe}"
                    )));
                }
            }
            genes.push(row);
        }
        let gene_names = (0..universe).map(|g| format!("g{g}")).collect();
        self.set_annotations(Annotations {
            genes,
            gene_names,
            universe,
        })?;
        Ok(self)
    }

    fn set_annotations(&mut self, ann: Annotations) -> Result<()> {
        for (parent, kids) in self.children.iter().enumerate() {
            for &child in kids {
                if !is_sorted_subset(&ann.genes[child], &ann.genes[parent]) {
                    return Err(FdrError::invalid(format!(
                        "annotation of '{}' is not contained in that of its parent '{}'",
                        self.ids[child], self.ids[parent]
                    )));
                }
            }
        }
        self.annotations = Some(ann);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn children(&self, j: usize) -> &[usize] {
        &self.children[j]
    }

    pub fn parents(&self, j: usize) -> &[usize] {
        &self.parents[j]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(p, kids)| kids.iter().map(move |&c| (p, c)))
    }

    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn is_leaf(&self, j: usize) -> bool {
        self.children[j].is_empty()
    }

    pub fn annotations(&self) -> Option<&Annotations> {
        self.annotations.as_ref()
    }

    /// Every node has at most one parent.
    pub fn is_tree(&self) -> bool {
        self.parents.iter().all(|p| p.len() <= 1)
    }

    pub fn descendants(&self, j: usize) -> &FixedBitSet {
        &self.descendants[j]
    }

    pub fn ancestors(&self, j: usize) -> &FixedBitSet {
        &self.ancestors[j]
    }

    /// True iff a directed path `i -> ... -> j` exists. A node is not its
    /// own ancestor.
    pub fn is_ancestor(&self, i: usize, j: usize) -> Result<bool> {
        let m = self.len();
        for x in [i, j] {
            if x >= m {
                return Err(FdrError::IndexOutOfRange { index: x, len: m });
            }
        }
        Ok(self.descendants[i].contains(j))
    }

    /// Leaves at or below `j`, in increasing index order.
    pub fn leaf_descendants(&self, j: usize) -> Vec<usize> {
        if self.is_leaf(j) {
            return vec![j];
        }
        self.descendants[j]
            .ones()
            .filter(|&d| self.is_leaf(d))
            .collect()
    }

    /// Position of a leaf in [`HypothesisGraph::leaves`].
    pub fn leaf_position(&self, j: usize) -> Option<usize> {
        self.leaf_position[j]
    }

    /// Node p-values from p-values of the leaves, given in the order of
    /// [`HypothesisGraph::leaves`]. Leaves keep their own value; internal
    /// nodes combine the values of their leaf descendants.
    pub fn combine_leaf_values(
        &self,
        leaf_p: &[f64],
        method: CombinationMethod,
    ) -> Result<Vec<f64>> {
        if leaf_p.len() != self.leaves.len() {
            return Err(FdrError::invalid(format!(
                "{} leaf p-values for {} leaves",
                leaf_p.len(),
                self.leaves.len()
            )));
        }
        let mut out = vec![0.0; self.len()];
        let mut buf = Vec::new();
        for (j, slot) in out.iter_mut().enumerate() {
            if let Some(k) = self.leaf_position[j] {
                *slot = leaf_p[k];
                continue;
            }
            buf.clear();
            buf.extend(
                self.descendants[j]
                    .ones()
                    .filter_map(|d| self.leaf_position[d].map(|k| leaf_p[k])),
            );
            *slot = method
                .combine(&buf)
                .map_err(|e| FdrError::invalid(format!("node '{}': {e}", self.ids[j])))?;
        }
        Ok(out)
    }

    /// Leaf p-values keyed by id, combined into one p-value per node.
    pub fn combine_node_pvalues(
        &self,
        leaf_p: &crate::PValueVector,
        method: CombinationMethod,
    ) -> Result<crate::PValueVector> {
        let mut ordered = vec![f64::NAN; self.leaves.len()];
        for (id, &p) in leaf_p.ids().iter().zip(leaf_p.values()) {
            let j = self
                .index_of(id)
                .ok_or_else(|| FdrError::invalid(format!("unknown node '{id}'")))?;
            let k = self.leaf_position[j]
                .ok_or_else(|| FdrError::invalid(format!("node '{id}' is not a leaf")))?;
            ordered[k] = p;
        }
        if let Some(k) = ordered.iter().position(|p| p.is_nan()) {
            return Err(FdrError::invalid(format!(
                "missing p-value for leaf '{}'",
                self.ids[self.leaves[k]]
            )));
        }
        let values = self.combine_leaf_values(&ordered, method)?;
        crate::PValueVector::new(self.ids.clone(), values)
    }

    /// Node p-values from gene-level p-values via the annotations.
    pub fn combine_gene_values(
        &self,
        gene_p: &[f64],
        method: CombinationMethod,
    ) -> Result<Vec<f64>> {
        let ann = self
            .annotations
            .as_ref()
            .ok_or_else(|| FdrError::invalid("graph has no gene annotations"))?;
        let mut buf = Vec::new();
        (0..self.len())
            .map(|j| {
                buf.clear();
                buf.extend(ann.genes[j].iter().map(|&g| gene_p[g as usize]));
                method
                    .combine(&buf)
                    .map_err(|e| FdrError::invalid(format!("node '{}': {e}", self.ids[j])))
            })
            .collect()
    }

    /// Whether every descendant of a null node is also null.
    pub fn check_logical_relationships(&self, truth: &GroundTruth) -> bool {
        assert_eq!(truth.m(), self.len());
        (0..self.len())
            .filter(|&i| truth.is_null(i))
            .all(|i| self.descendants[i].ones().all(|j| truth.is_null(j)))
    }

    /// No member is an ancestor of another.
    pub fn is_antichain(&self, members: &[usize]) -> bool {
        members
            .iter()
            .all(|&i| members.iter().all(|&j| !self.descendants[i].contains(j)))
    }

    /// A maximum-cardinality antichain among `candidates`, via Dilworth /
    /// König on the comparability bipartite graph.
    pub fn max_antichain(&self, candidates: &[usize]) -> Vec<usize> {
        let n = candidates.len();
        let adj: Vec<Vec<usize>> = candidates
            .iter()
            .map(|&u| {
                (0..n)
                    .filter(|&k| self.descendants[u].contains(candidates[k]))
                    .collect()
            })
            .collect();
        let mut match_right: Vec<Option<usize>> = vec![None; n];
        let mut match_left: Vec<Option<usize>> = vec![None; n];
        for u in 0..n {
            let mut seen = vec![false; n];
            augment(u, &adj, &mut seen, &mut match_left, &mut match_right);
        }
        // König: Z = vertices reachable from unmatched left vertices by
        // alternating paths. Cover = (L \ Z) ∪ (R ∩ Z).
        let mut z_left = vec![false; n];
        let mut z_right = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&u| match_left[u].is_none()).collect();
        for &u in &stack {
            z_left[u] = true;
        }
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !z_right[v] && match_left[u] != Some(v) {
                    z_right[v] = true;
                    if let Some(w) = match_right[v] {
                        if !z_left[w] {
                            z_left[w] = true;
                            stack.push(w);
                        }
                    }
                }
            }
        }
        (0..n)
            .filter(|&k| z_left[k] && !z_right[k])
            .map(|k| candidates[k])
            .collect()
    }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    match_left: &mut [Option<usize>],
    match_right: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if match_right[v].is_none()
            || augment(match_right[v].unwrap(), adj, seen, match_left, match_right)
        {
            match_right[v] = Some(u);
            match_left[u] = Some(v);
            return true;
        }
    }
    false
}

fn is_sorted_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|g| it.by_ref().any(|h| h == g))
}

/// Node ids `"0"`, `"1"`, ... for programmatically built graphs.
pub fn numbered_ids(m: usize) -> Vec<String> {
    (0..m).map(|j| j.to_string()).collect()
}
