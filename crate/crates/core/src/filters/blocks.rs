use std::collections::HashMap;

use crate::error::{FdrError, Result};

/// A partition of `0..m` into nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    /// `block_of[j]` is the block id of hypothesis `j`; ids must be
    /// `0..K` with every block used.
    pub fn new(block_of: Vec<usize>) -> Result<Self> {
        if block_of.is_empty() {
            return Err(FdrError::invalid("block partition over zero hypotheses"));
        }
        let k = block_of.iter().max().map_or(0, |&b| b + 1);
        let mut blocks = vec![Vec::new(); k];
        for (j, &b) in block_of.iter().enumerate() {
            blocks[b].push(j);
        }
        if let Some(b) = blocks.iter().position(Vec::is_empty) {
            return Err(FdrError::invalid(format!("block {b} is empty")));
        }
        Ok(BlockPartition { block_of, blocks })
    }

    /// Blocks numbered by first appearance of each label.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let block_of = labels
            .iter()
            .map(|s| {
                let next = ids.len();
                *ids.entry(s.as_ref()).or_insert(next)
            })
            .collect();
        Self::new(block_of)
    }

    /// Consecutive blocks of `size` hypotheses; the last may be shorter.
    pub fn contiguous(m: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(FdrError::invalid("block size must be positive"));
        }
        Self::new((0..m).map(|j| j / size).collect())
    }

    pub fn m(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, j: usize) -> usize {
        self.block_of[j]
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// The set collection `I_j = B_{k(j)}`.
    pub fn collection(&self) -> BlockCollection {
        BlockCollection {
            sets: self
                .block_of
                .iter()
                .map(|&b| self.blocks[b].clone())
                .collect(),
        }
    }

    /// Hypotheses attaining their block's minimum p-value, ties included.
    /// Lead-SNP weights: each block's unit weight split evenly among its
    /// minimum-p hypotheses, zero elsewhere.
    pub fn lead_weights(&self, p: &[f64]) -> Vec<f64> {
        let minima = self.block_minima(p);
        let mut ties = vec![0usize; self.blocks.len()];
        for (j, &b) in self.block_of.iter().enumerate() {
            ties[b] += usize::from(minima[j]);
        }
        self.block_of
            .iter()
            .zip(&minima)
            .map(|(&b, &k)| if k { 1.0 / ties[b] as f64 } else { 0.0 })
            .collect()
    }

    pub fn block_minima(&self, p: &[f64]) -> Vec<bool> {
        let mut min = vec![f64::INFINITY; self.blocks.len()];
        for (j, &b) in self.block_of.iter().enumerate() {
            if p[j] < min[b] {
                min[b] = p[j];
            }
        }
        self.block_of
            .iter()
            .enumerate()
            .map(|(j, &b)| p[j] <= min[b])
            .collect()
    }
}

/// A collection of sets `I_j` with `j ∈ I_j`, one per hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCollection {
    sets: Vec<Vec<usize>>,
}

impl BlockCollection {
    pub fn new(mut sets: Vec<Vec<usize>>) -> Result<Self> {
        let m = sets.len();
        for (j, s) in sets.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.last().is_some_and(|&i| i >= m) {
                return Err(FdrError::invalid(format!(
                    "I_{j} has an index outside 0..{m}"
                )));
            }
            if s.binary_search(&j).is_err() {
                return Err(FdrError::invalid(format!("I_{j} does not contain {j}")));
            }
        }
        Ok(BlockCollection { sets })
    }

    /// `I_j = {j}`, under which block simpleness reduces to simpleness.
    pub fn singletons(m: usize) -> Self {
        BlockCollection {
            sets: (0..m).map(|j| vec![j]).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, j: usize) -> &[usize] {
        &self.sets[j]
    }
}
