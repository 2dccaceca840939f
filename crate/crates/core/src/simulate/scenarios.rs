//! Data-generating mechanisms: a two-group design on tree or DAG
//! hypotheses and a haplotype-block GWAS.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::rng::SimRng;
use crate::error::{FdrError, Result};
use crate::graph::{numbered_ids, CombinationMethod, HypothesisGraph};
use crate::stats;
use crate::types::{default_ids, GroundTruth, PValueVector};

/// A data-generating mechanism with a fixed ground truth.
pub trait Scenario: Sync {
    type Data: Send;

    fn ids(&self) -> Arc<[String]>;
    fn truth(&self) -> &GroundTruth;
    fn draw(&self, rng: &mut SimRng) -> Self::Data;
    fn pvalues(&self, data: &Self::Data) -> Result<Vec<f64>>;
    /// p-values recomputed after permuting the data under the null.
    fn permuted_pvalues(&self, data: &Self::Data, rng: &mut SimRng) -> Result<Vec<f64>>;
    /// The hypothesis graph, when hypotheses are graph nodes.
    fn graph(&self) -> Option<&HypothesisGraph> {
        None
    }
}

/// Per-variable samples of a two-group design.
#[derive(Debug, Clone)]
pub struct TwoGroupData {
    /// One column of `n` observations per base variable.
    pub columns: Vec<Vec<f64>>,
    pub is_case: Vec<bool>,
}

fn two_group_labels(n_cases: usize, n_controls: usize) -> Vec<bool> {
    let mut labels = vec![true; n_cases];
    labels.extend(std::iter::repeat_n(false, n_controls));
    labels
}

fn draw_two_group(rng: &mut SimRng, labels: &[bool], shift: &[f64]) -> TwoGroupData {
    let columns = shift
        .iter()
        .map(|&a| {
            labels
                .iter()
                .map(|&case| {
                    let z: f64 = rng.sample(StandardNormal);
                    if case {
                        z + a
                    } else {
                        z
                    }
                })
                .collect()
        })
        .collect();
    TwoGroupData {
        columns,
        is_case: labels.to_vec(),
    }
}

fn base_pvalues(data: &TwoGroupData, labels: &[bool], method: CombinationMethod) -> Vec<f64> {
    data.columns
        .iter()
        .map(|col| {
            let p = stats::two_sample_t_test(col, labels);
            // Fisher needs strictly positive inputs.
            match method {
                CombinationMethod::Fisher => p.max(f64::MIN_POSITIVE),
                CombinationMethod::Simes => p,
            }
        })
        .collect()
}

fn check_groups(n_cases: usize, n_controls: usize) -> Result<()> {
    if n_cases < 2 || n_controls < 2 {
        return Err(FdrError::invalid("each group needs at least two subjects"));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TreeSimConfig {
    pub graph: Arc<HypothesisGraph>,
    pub n_cases: usize,
    pub n_controls: usize,
    /// Node indices of the non-null leaves.
    pub nonnull_leaves: Vec<usize>,
    pub amplitude: f64,
    pub combination: CombinationMethod,
}

/// Leaves as base variables; each node tests the intersection of its leaves.
#[derive(Debug, Clone)]
pub struct TreeScenario {
    cfg: TreeSimConfig,
    ids: Arc<[String]>,
    truth: GroundTruth,
    labels: Vec<bool>,
    shift: Vec<f64>,
}

impl TreeScenario {
    pub fn new(cfg: TreeSimConfig) -> Result<Self> {
        check_groups(cfg.n_cases, cfg.n_controls)?;
        let g = &cfg.graph;
        let mut shift = vec![0.0; g.leaves().len()];
        let mut nonnull_leaf = vec![false; g.len()];
        for &j in &cfg.nonnull_leaves {
            let k = g
                .leaf_position(j)
                .ok_or_else(|| FdrError::invalid(format!("non-null node {j} is not a leaf")))?;
            shift[k] = cfg.amplitude;
            nonnull_leaf[j] = true;
        }
        let null = (0..g.len())
            .map(|j| !g.leaf_descendants(j).iter().any(|&l| nonnull_leaf[l]))
            .collect();
        Ok(TreeScenario {
            ids: g.ids().to_vec().into(),
            truth: GroundTruth::from_null_mask(null),
            labels: two_group_labels(cfg.n_cases, cfg.n_controls),
            shift,
            cfg,
        })
    }

    pub fn config(&self) -> &TreeSimConfig {
        &self.cfg
    }

    fn node_pvalues(&self, data: &TwoGroupData, labels: &[bool]) -> Result<Vec<f64>> {
        let leaf = base_pvalues(data, labels, self.cfg.combination);
        self.cfg
            .graph
            .combine_leaf_values(&leaf, self.cfg.combination)
    }
}

impl Scenario for TreeScenario {
    type Data = TwoGroupData;

    fn ids(&self) -> Arc<[String]> {
        self.ids.clone()
    }

    fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    fn draw(&self, rng: &mut SimRng) -> TwoGroupData {
        draw_two_group(rng, &self.labels, &self.shift)
    }

    fn pvalues(&self, data: &TwoGroupData) -> Result<Vec<f64>> {
        self.node_pvalues(data, &data.is_case)
    }

    fn permuted_pvalues(&self, data: &TwoGroupData, rng: &mut SimRng) -> Result<Vec<f64>> {
        let mut labels = data.is_case.clone();
        labels.shuffle(rng);
        self.node_pvalues(data, &labels)
    }

    fn graph(&self) -> Option<&HypothesisGraph> {
        Some(&self.cfg.graph)
    }
}

#[derive(Debug, Clone)]
pub struct TreeDataset {
    pub data: TwoGroupData,
    pub pvalues: PValueVector,
}

/// One dataset from the tree design.
pub fn simulate_tree_dataset(cfg: &TreeSimConfig, rng: &mut SimRng) -> Result<TreeDataset> {
    let s = TreeScenario::new(cfg.clone())?;
    let data = s.draw(rng);
    let p = s.pvalues(&data)?;
    Ok(TreeDataset {
        pvalues: PValueVector::with_shared_ids(s.ids(), p)?,
        data,
    })
}

/// A tree with `1 + 3 + 6 + 12 + 24 = 46` nodes: three children under the
/// root, then two children per node. Node ids are breadth-first indices.
pub fn simulation_tree() -> HypothesisGraph {
    let widths = [1usize, 3, 6, 12, 24];
    let mut edges = Vec::new();
    let mut start = 0;
    for w in widths.windows(2) {
        let (parents, children) = (w[0], w[1]);
        let per = children / parents;
        for c in 0..children {
            edges.push((start + c / per, start + parents + c));
        }
        start += parents;
    }
    HypothesisGraph::new(numbered_ids(46), &edges).expect("simulation tree is valid")
}

/// Four non-null leaves of [`simulation_tree`], below distinct depth-2
/// nodes, yielding 16 non-null nodes.
pub fn simulation_tree_nonnull_leaves() -> Vec<usize> {
    // Depth-2 nodes 4..=9 each have two depth-3 children and four leaves;
    // take the first leaf below depth-2 nodes 0, 1, 2 and 4.
    [0usize, 1, 2, 4].iter().map(|&k| 22 + 4 * k).collect()
}

#[derive(Debug, Clone)]
pub struct DagSimConfig {
    /// A gene-annotated DAG.
    pub graph: Arc<HypothesisGraph>,
    pub n_cases: usize,
    pub n_controls: usize,
    pub nonnull_genes: Vec<u32>,
    pub amplitude: f64,
    pub combination: CombinationMethod,
}

/// Genes as base variables; each node tests the intersection of its genes.
#[derive(Debug, Clone)]
pub struct DagScenario {
    cfg: DagSimConfig,
    ids: Arc<[String]>,
    truth: GroundTruth,
    labels: Vec<bool>,
    shift: Vec<f64>,
}

impl DagScenario {
    pub fn new(cfg: DagSimConfig) -> Result<Self> {
        check_groups(cfg.n_cases, cfg.n_controls)?;
        let g = &cfg.graph;
        let ann = g
            .annotations()
            .ok_or_else(|| FdrError::invalid("DAG simulation needs gene annotations"))?;
        let mut shift = vec![0.0; ann.universe()];
        for &gene in &cfg.nonnull_genes {
            let slot = shift
                .get_mut(gene as usize)
                .ok_or_else(|| FdrError::invalid(format!("gene {gene} outside the universe")))?;
            *slot = cfg.amplitude;
        }
        let nonnull: std::collections::HashSet<u32> = cfg.nonnull_genes.iter().copied().collect();
        if let Some(j) = (0..g.len()).find(|&j| ann.genes(j).is_empty()) {
            return Err(FdrError::invalid(format!(
                "node '{}' has no genes to test",
                g.ids()[j]
            )));
        }
        let null = (0..g.len())
            .map(|j| !ann.genes(j).iter().any(|x| nonnull.contains(x)))
            .collect();
        Ok(DagScenario {
            ids: g.ids().to_vec().into(),
            truth: GroundTruth::from_null_mask(null),
            labels: two_group_labels(cfg.n_cases, cfg.n_controls),
            shift,
            cfg,
        })
    }

    pub fn config(&self) -> &DagSimConfig {
        &self.cfg
    }

    fn node_pvalues(&self, data: &TwoGroupData, labels: &[bool]) -> Result<Vec<f64>> {
        let genes = base_pvalues(data, labels, self.cfg.combination);
        self.cfg
            .graph
            .combine_gene_values(&genes, self.cfg.combination)
    }
}

impl Scenario for DagScenario {
    type Data = TwoGroupData;

    fn ids(&self) -> Arc<[String]> {
        self.ids.clone()
    }

    fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    fn draw(&self, rng: &mut SimRng) -> TwoGroupData {
        draw_two_group(rng, &self.labels, &self.shift)
    }

    fn pvalues(&self, data: &TwoGroupData) -> Result<Vec<f64>> {
        self.node_pvalues(data, &data.is_case)
    }

    fn permuted_pvalues(&self, data: &TwoGroupData, rng: &mut SimRng) -> Result<Vec<f64>> {
        let mut labels = data.is_case.clone();
        labels.shuffle(rng);
        self.node_pvalues(data, &labels)
    }

    fn graph(&self) -> Option<&HypothesisGraph> {
        Some(&self.cfg.graph)
    }
}

/// One dataset from the DAG design.
pub fn simulate_dag_dataset(cfg: &DagSimConfig, rng: &mut SimRng) -> Result<TreeDataset> {
    let s = DagScenario::new(cfg.clone())?;
    let data = s.draw(rng);
    let p = s.pvalues(&data)?;
    Ok(TreeDataset {
        pvalues: PValueVector::with_shared_ids(s.ids(), p)?,
        data,
    })
}

/// A layered random DAG with gene annotations closed under descent, and a
/// choice of non-null genes as the union of a few small terms.
#[derive(Debug, Clone)]
pub struct RandomDag {
    pub graph: HypothesisGraph,
    /// Nodes whose genes were made non-null.
    pub terms: Vec<usize>,
    pub nonnull_genes: Vec<u32>,
}

/// Builds a DAG with `nodes` nodes and `genes` genes. Every node owns at
/// least one gene, and a node's annotation is the set of genes owned at or
/// below it. `n_terms` nodes are then drawn until their gene union has
/// exactly `target_nonnull` genes.
pub fn random_annotated_dag(
    nodes: usize,
    genes: usize,
    n_terms: usize,
    target_nonnull: usize,
    rng: &mut SimRng,
) -> Result<RandomDag> {
    if nodes < 2 || genes < nodes {
        return Err(FdrError::invalid(
            "random DAG needs at least two nodes and one gene per node",
        ));
    }
    let depth = 6usize.min(nodes);
    let mut widths = vec![1usize];
    let rest = nodes - 1;
    let levels = depth - 1;
    // Layer widths grow linearly with depth.
    let total: usize = (1..=levels).sum();
    let mut used = 0;
    for l in 1..=levels {
        let w = if l == levels {
            rest - used
        } else {
            (rest * l / total).max(1)
        };
        used += w;
        widths.push(w);
    }
    let mut layer_start = vec![0usize];
    for w in &widths {
        layer_start.push(layer_start.last().unwrap() + w);
    }
    let mut edges = Vec::new();
    for l in 1..widths.len() {
        let (ps, pe) = (layer_start[l - 1], layer_start[l]);
        for c in layer_start[l]..layer_start[l + 1] {
            let first = rng.gen_range(ps..pe);
            edges.push((first, c));
            if l >= 2 && rng.gen_bool(0.3) {
                let second = rng.gen_range(1..pe);
                if second != first {
                    edges.push((second, c));
                }
            }
        }
    }
    let graph = HypothesisGraph::new(numbered_ids(nodes), &edges)?;

    let mut home: Vec<usize> = (0..nodes).collect();
    for _ in nodes..genes {
        home.push(rng.gen_range(1..nodes));
    }
    let mut annotation: Vec<Vec<u32>> = vec![Vec::new(); nodes];
    for (gene, &h) in home.iter().enumerate() {
        annotation[h].push(gene as u32);
        for a in graph.ancestors(h).ones() {
            annotation[a].push(gene as u32);
        }
    }
    let graph = graph.with_gene_indices(annotation.clone(), genes)?;

    let small: Vec<usize> = (1..nodes)
        .filter(|&j| (2..=target_nonnull).contains(&annotation[j].len()))
        .collect();
    if small.len() < n_terms {
        return Err(FdrError::invalid(
            "too few small terms to seed non-null genes",
        ));
    }
    for _ in 0..100_000 {
        let terms: Vec<usize> = small.choose_multiple(rng, n_terms).copied().collect();
        let mut union: Vec<u32> = terms.iter().flat_map(|&t| annotation[t].clone()).collect();
        union.sort_unstable();
        union.dedup();
        if union.len() == target_nonnull {
            let mut terms = terms;
            terms.sort_unstable();
            return Ok(RandomDag {
                graph,
                terms,
                nonnull_genes: union,
            });
        }
    }
    Err(FdrError::invalid(format!(
        "no {n_terms} terms cover exactly {target_nonnull} genes"
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwasSimConfig {
    pub n: usize,
    pub m: usize,
    pub block_size: usize,
    pub maf: f64,
    pub p11: f64,
    pub causal: Vec<usize>,
    pub amplitude: f64,
}

impl GwasSimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(FdrError::invalid("GWAS simulation needs n >= 3"));
        }
        if self.block_size == 0 || self.m == 0 || !self.m.is_multiple_of(self.block_size) {
            return Err(FdrError::invalid("block size must divide m"));
        }
        if !(self.maf > 0.0 && self.maf < 1.0) || !(self.p11 > 0.0 && self.p11 < 1.0) {
            return Err(FdrError::invalid("maf and p11 must lie in (0, 1)"));
        }
        if self.p01() > 1.0 {
            return Err(FdrError::invalid("maf and p11 imply P(0 -> 1) > 1"));
        }
        if let Some(&c) = self.causal.iter().find(|&&c| c >= self.m) {
            return Err(FdrError::invalid(format!(
                "causal SNP {c} outside 0..{}",
                self.m
            )));
        }
        Ok(())
    }

    /// `P(0 -> 1) = maf (1 - p11) / (1 - maf)`, which keeps `maf` stationary.
    pub fn p01(&self) -> f64 {
        self.maf * (1.0 - self.p11) / (1.0 - self.maf)
    }

    /// `count` SNPs spaced equally along `0..m`.
    pub fn equally_spaced_causal(m: usize, count: usize) -> Vec<usize> {
        (0..count)
            .map(|k| ((2 * k + 1) * m) / (2 * count))
            .collect()
    }

    /// SNPs sharing a block with a causal SNP.
    pub fn truth(&self) -> GroundTruth {
        let mut null = vec![true; self.m];
        for &c in &self.causal {
            let b = c / self.block_size;
            for x in &mut null[b * self.block_size..(b + 1) * self.block_size] {
                *x = false;
            }
        }
        GroundTruth::from_null_mask(null)
    }
}

/// Genotypes in `{0, 1, 2}`, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Genotypes {
    pub n: usize,
    pub m: usize,
    data: Vec<u8>,
}

impl Genotypes {
    pub fn column(&self, j: usize) -> &[u8] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[j * self.n + i]
    }
}

fn haplotype_into(cfg: &GwasSimConfig, rng: &mut SimRng, out: &mut [u8]) {
    let p01 = cfg.p01();
    let mut state = 0u8;
    for (j, x) in out.iter_mut().enumerate() {
        let p1 = if j % cfg.block_size == 0 {
            cfg.maf
        } else if state == 1 {
            cfg.p11
        } else {
            p01
        };
        state = u8::from(rng.gen::<f64>() < p1);
        *x = state;
    }
}

/// Rows are sums of two independent haplotypes; within a block each
/// haplotype is a stationary two-state Markov chain.
pub fn simulate_genotypes(cfg: &GwasSimConfig, rng: &mut SimRng) -> Result<Genotypes> {
    cfg.validate()?;
    let (n, m) = (cfg.n, cfg.m);
    let mut data = vec![0u8; n * m];
    let mut h = vec![0u8; m];
    for i in 0..n {
        for _ in 0..2 {
            haplotype_into(cfg, rng, &mut h);
            for j in 0..m {
                data[j * n + i] += h[j];
            }
        }
    }
    Ok(Genotypes { n, m, data })
}

/// Fixed genotypes with phenotypes `y = X β + ε` redrawn per dataset.
#[derive(Debug, Clone)]
pub struct GwasScenario {
    cfg: GwasSimConfig,
    genotypes: Genotypes,
    centered: Vec<Vec<f64>>,
    sxx: Vec<f64>,
    ids: Arc<[String]>,
    truth: GroundTruth,
}

impl GwasScenario {
    pub fn new(cfg: GwasSimConfig, genotypes: Genotypes) -> Result<Self> {
        cfg.validate()?;
        if genotypes.n != cfg.n || genotypes.m != cfg.m {
            return Err(FdrError::invalid(
                "genotype dimensions differ from the config",
            ));
        }
        let mut centered = Vec::with_capacity(cfg.m);
        let mut sxx = Vec::with_capacity(cfg.m);
        for j in 0..cfg.m {
            let col = genotypes.column(j);
            let mean = col.iter().map(|&x| x as f64).sum::<f64>() / cfg.n as f64;
            let c: Vec<f64> = col.iter().map(|&x| x as f64 - mean).collect();
            sxx.push(c.iter().map(|x| x * x).sum());
            centered.push(c);
        }
        Ok(GwasScenario {
            ids: default_ids(cfg.m),
            truth: cfg.truth(),
            cfg,
            genotypes,
            centered,
            sxx,
        })
    }

    pub fn config(&self) -> &GwasSimConfig {
        &self.cfg
    }

    pub fn genotypes(&self) -> &Genotypes {
        &self.genotypes
    }

    /// Marginal slope-test p-values of `y` on each SNP.
    pub fn slope_pvalues(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let ybar = y.iter().sum::<f64>() / n as f64;
        let syy: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        self.centered
            .iter()
            .zip(&self.sxx)
            .map(|(c, &sxx)| {
                if sxx <= 0.0 || syy <= 0.0 {
                    return 1.0;
                }
                let sxy: f64 = c.iter().zip(y).map(|(a, b)| a * b).sum();
                stats::slope_t_pvalue_from_r2(sxy * sxy / (sxx * syy), n)
            })
            .collect()
    }
}

impl Scenario for GwasScenario {
    type Data = Vec<f64>;

    fn ids(&self) -> Arc<[String]> {
        self.ids.clone()
    }

    fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    fn draw(&self, rng: &mut SimRng) -> Vec<f64> {
        let mut y: Vec<f64> = (0..self.cfg.n)
            .map(|_| rng.sample(StandardNormal))
            .collect();
        for &c in &self.cfg.causal {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += self.cfg.amplitude * self.genotypes.get(i, c) as f64;
            }
        }
        y
    }

    fn pvalues(&self, y: &Vec<f64>) -> Result<Vec<f64>> {
        Ok(self.slope_pvalues(y))
    }

    fn permuted_pvalues(&self, y: &Vec<f64>, rng: &mut SimRng) -> Result<Vec<f64>> {
        let mut perm = y.clone();
        perm.shuffle(rng);
        Ok(self.slope_pvalues(&perm))
    }
}

#[derive(Debug, Clone)]
pub struct GwasDataset {
    pub genotypes: Genotypes,
    pub phenotype: Vec<f64>,
    pub pvalues: PValueVector,
}

/// Genotypes, one phenotype draw and the per-SNP p-values.
pub fn simulate_gwas_dataset(cfg: &GwasSimConfig, rng: &mut SimRng) -> Result<GwasDataset> {
    let genotypes = simulate_genotypes(cfg, rng)?;
    let s = GwasScenario::new(cfg.clone(), genotypes)?;
    let y = s.draw(rng);
    let p = s.slope_pvalues(&y);
    Ok(GwasDataset {
        pvalues: PValueVector::with_shared_ids(s.ids(), p)?,
        genotypes: s.genotypes,
        phenotype: y,
    })
}
