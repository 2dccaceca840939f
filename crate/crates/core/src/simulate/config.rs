//! Declarative simulation settings, deserializable from TOML.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, Purpose};
use super::scenarios::{
    random_annotated_dag, simulate_genotypes, simulation_tree, simulation_tree_nonnull_leaves,
    DagScenario, DagSimConfig, Genotypes, GwasScenario, GwasSimConfig, Scenario, TreeScenario,
    TreeSimConfig,
};
use super::{run_replicates, ProcedureSpec, ReplicateReport, RunOptions, TmaxStrategy};
use crate::error::{FdrError, Result};
use crate::filters::{BlockPartition, Filter, Screen};
use crate::graph::{CombinationMethod, HypothesisGraph};
use crate::types::GroundTruth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Tree,
    Dag,
    Gwas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterChoice {
    Trivial,
    OuterNodes,
    SoftOuterNodes,
    Clumping,
    BlockMinimumScreen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub n_cases: usize,
    pub n_controls: usize,
    /// Edge-list file; the built-in 46-node tree when absent.
    pub edges: Option<PathBuf>,
    /// Ids of the non-null leaves.
    pub nonnull_leaves: Option<Vec<String>>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            n_cases: 100,
            n_controls: 100,
            edges: None,
            nonnull_leaves: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DagParams {
    pub nodes: usize,
    pub genes: usize,
    pub n_terms: usize,
    pub nonnull_genes: usize,
    /// Seed of the DAG and non-null gene choice, fixed across replicates.
    pub structure_seed: u64,
    pub n_cases: usize,
    pub n_controls: usize,
}

impl Default for DagParams {
    fn default() -> Self {
        DagParams {
            nodes: 170,
            genes: 728,
            n_terms: 3,
            nonnull_genes: 12,
            structure_seed: 1,
            n_cases: 100,
            n_controls: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GwasParams {
    pub n: usize,
    pub m: usize,
    pub block_size: usize,
    pub maf: f64,
    pub p11: f64,
    pub n_causal: usize,
    /// Explicit causal SNP indices; equally spaced when absent.
    pub causal: Option<Vec<usize>>,
}

impl Default for GwasParams {
    fn default() -> Self {
        GwasParams {
            n: 200,
            m: 600,
            block_size: 30,
            maf: 0.1,
            p11: 0.95,
            n_causal: 5,
            causal: None,
        }
    }
}

fn default_q() -> f64 {
    0.1
}

fn default_n_mc() -> usize {
    1000
}

fn default_n_perm() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub kind: ScenarioKind,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub procedures: Option<Vec<ProcedureSpec>>,
    #[serde(default)]
    pub filter: Option<FilterChoice>,
    #[serde(default)]
    pub combination: Option<CombinationMethod>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default = "default_n_perm")]
    pub n_perm: usize,
    #[serde(default)]
    pub tmax: Option<TmaxStrategy>,
    #[serde(default)]
    pub tree: TreeParams,
    #[serde(default)]
    pub dag: DagParams,
    #[serde(default)]
    pub gwas: GwasParams,
}

/// Default GWAS signal amplitudes for `n = 200`.
pub const GWAS_AMPLITUDES: [f64; 4] = [0.4, 0.55, 0.7, 0.85];
pub const GRAPH_AMPLITUDES: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

impl SimulationConfig {
    pub fn new(kind: ScenarioKind) -> Self {
        SimulationConfig {
            kind,
            q: default_q(),
            reps: None,
            amplitudes: None,
            procedures: None,
            filter: None,
            combination: None,
            lambda: None,
            n_mc: default_n_mc(),
            n_perm: default_n_perm(),
            tmax: None,
            tree: TreeParams::default(),
            dag: DagParams::default(),
            gwas: GwasParams::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| FdrError::invalid(format!("simulation config: {e}")))
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(500)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.amplitudes.clone().unwrap_or_else(|| match self.kind {
            ScenarioKind::Gwas => GWAS_AMPLITUDES.to_vec(),
            _ => GRAPH_AMPLITUDES.to_vec(),
        })
    }

    pub fn procedures(&self) -> Vec<ProcedureSpec> {
        use ProcedureSpec::*;
        self.procedures.clone().unwrap_or_else(|| match self.kind {
            ScenarioKind::Gwas => vec![Bh, FocusedBh, FocusedBhOracle, FocusedBhPerm],
            _ => vec![
                Bh,
                StoreyBh,
                FocusedBh,
                FocusedStoreyBh,
                FocusedBhOracle,
                FocusedBhPerm,
            ],
        })
    }

    pub fn filter_choice(&self) -> FilterChoice {
        self.filter.unwrap_or(match self.kind {
            ScenarioKind::Tree => FilterChoice::OuterNodes,
            ScenarioKind::Dag => FilterChoice::SoftOuterNodes,
            ScenarioKind::Gwas => FilterChoice::Clumping,
        })
    }

    pub fn combination(&self) -> CombinationMethod {
        self.combination.unwrap_or(CombinationMethod::Simes)
    }

    fn options(&self, setting: usize) -> Result<RunOptions> {
        let setting = u16::try_from(setting)
            .map_err(|_| FdrError::invalid("too many amplitudes in one run"))?;
        Ok(RunOptions {
            q: self.q,
            lambda: self.lambda,
            n_mc: self.n_mc,
            n_perm: self.n_perm,
            tmax: self.tmax,
            setting,
        })
    }

    fn graph_filter(&self, graph: &Arc<HypothesisGraph>) -> Result<Filter> {
        match self.filter_choice() {
            FilterChoice::Trivial => Ok(Filter::trivial()),
            FilterChoice::OuterNodes => Ok(Filter::outer_nodes(graph.clone())),
            FilterChoice::SoftOuterNodes => Filter::soft_outer_nodes(graph.clone()),
            other => Err(FdrError::invalid(format!(
                "filter {other:?} needs a block partition, not a graph"
            ))),
        }
    }

    /// The tree used by a tree run and its non-null leaves.
    pub fn tree_structure(&self) -> Result<(Arc<HypothesisGraph>, Vec<usize>)> {
        let graph = match &self.tree.edges {
            Some(path) => crate::io::load_graph(path, None)?,
            None => simulation_tree(),
        };
        let leaves = match &self.tree.nonnull_leaves {
            Some(ids) => ids
                .iter()
                .map(|id| {
                    graph
                        .index_of(id)
                        .ok_or_else(|| FdrError::invalid(format!("unknown leaf '{id}'")))
                })
                .collect::<Result<Vec<_>>>()?,
            None if self.tree.edges.is_none() => simulation_tree_nonnull_leaves(),
            None => {
                return Err(FdrError::invalid(
                    "a custom tree needs explicit non-null leaves",
                ))
            }
        };
        Ok((Arc::new(graph), leaves))
    }

    /// The DAG stand-in and its non-null genes.
    pub fn dag_structure(&self) -> Result<super::RandomDag> {
        let d = &self.dag;
        let mut rng = stream_rng(d.structure_seed, Purpose::Structure, 0, 0);
        random_annotated_dag(d.nodes, d.genes, d.n_terms, d.nonnull_genes, &mut rng)
    }

    pub fn gwas_config(&self, amplitude: f64) -> GwasSimConfig {
        let g = &self.gwas;
        GwasSimConfig {
            n: g.n,
            m: g.m,
            block_size: g.block_size,
            maf: g.maf,
            p11: g.p11,
            causal: g
                .causal
                .clone()
                .unwrap_or_else(|| GwasSimConfig::equally_spaced_causal(g.m, g.n_causal)),
            amplitude,
        }
    }

    /// The genotype matrix of amplitude setting `setting`, drawn once and
    /// held fixed across that setting's replicates.
    pub fn gwas_genotypes(&self, master_seed: u64, setting: u16) -> Result<Genotypes> {
        let mut rng = stream_rng(master_seed, Purpose::Setting, setting, 0);
        simulate_genotypes(&self.gwas_config(0.0), &mut rng)
    }

    /// The filter a run applies, built against the run's structure.
    pub fn filter(&self) -> Result<Filter> {
        match self.kind {
            ScenarioKind::Tree => self.graph_filter(&self.tree_structure()?.0),
            ScenarioKind::Dag => self.graph_filter(&Arc::new(self.dag_structure()?.graph)),
            ScenarioKind::Gwas => self.gwas_filter(),
        }
    }

    fn gwas_filter(&self) -> Result<Filter> {
        let blocks = BlockPartition::contiguous(self.gwas.m, self.gwas.block_size)?;
        match self.filter_choice() {
            FilterChoice::Trivial => Ok(Filter::trivial()),
            FilterChoice::Clumping => Ok(Filter::clumping(blocks)),
            FilterChoice::BlockMinimumScreen => {
                Ok(Filter::screening(Screen::block_minimum(blocks)))
            }
            other => Err(FdrError::invalid(format!("filter {other:?} needs a graph"))),
        }
    }

    /// The ground truth of the run's hypotheses.
    pub fn truth(&self) -> Result<GroundTruth> {
        match self.kind {
            ScenarioKind::Tree => {
                let (graph, leaves) = self.tree_structure()?;
                let s = TreeScenario::new(TreeSimConfig {
                    graph,
                    n_cases: self.tree.n_cases,
                    n_controls: self.tree.n_controls,
                    nonnull_leaves: leaves,
                    amplitude: 1.0,
                    combination: self.combination(),
                })?;
                Ok(s.truth().clone())
            }
            ScenarioKind::Dag => {
                let d = self.dag_structure()?;
                let s = DagScenario::new(DagSimConfig {
                    graph: Arc::new(d.graph),
                    n_cases: self.dag.n_cases,
                    n_controls: self.dag.n_controls,
                    nonnull_genes: d.nonnull_genes,
                    amplitude: 1.0,
                    combination: self.combination(),
                })?;
                Ok(s.truth().clone())
            }
            ScenarioKind::Gwas => {
                let cfg = self.gwas_config(0.0);
                cfg.validate()?;
                Ok(cfg.truth())
            }
        }
    }

    /// One report per amplitude.
    pub fn run(&self, master_seed: u64) -> Result<Vec<ReplicateReport>> {
        let procedures = self.procedures();
        let reps = self.reps();
        let amps = self.amplitudes();
        match self.kind {
            ScenarioKind::Tree => {
                let (graph, leaves) = self.tree_structure()?;
                let filter = self.graph_filter(&graph)?;
                self.each_amplitude(
                    &amps,
                    |a| {
                        TreeScenario::new(TreeSimConfig {
                            graph: graph.clone(),
                            n_cases: self.tree.n_cases,
                            n_controls: self.tree.n_controls,
                            nonnull_leaves: leaves.clone(),
                            amplitude: a,
                            combination: self.combination(),
                        })
                    },
                    &filter,
                    &procedures,
                    reps,
                    master_seed,
                )
            }
            ScenarioKind::Dag => {
                let dag = self.dag_structure()?;
                let graph = Arc::new(dag.graph);
                let filter = self.graph_filter(&graph)?;
                self.each_amplitude(
                    &amps,
                    |a| {
                        DagScenario::new(DagSimConfig {
                            graph: graph.clone(),
                            n_cases: self.dag.n_cases,
                            n_controls: self.dag.n_controls,
                            nonnull_genes: dag.nonnull_genes.clone(),
                            amplitude: a,
                            combination: self.combination(),
                        })
                    },
                    &filter,
                    &procedures,
                    reps,
                    master_seed,
                )
            }
            ScenarioKind::Gwas => {
                let filter = self.gwas_filter()?;
                let mut setting = 0u16;
                self.each_amplitude(
                    &amps,
                    |a| {
                        let genotypes = self.gwas_genotypes(master_seed, setting)?;
                        setting += 1;
                        GwasScenario::new(self.gwas_config(a), genotypes)
                    },
                    &filter,
                    &procedures,
                    reps,
                    master_seed,
                )
            }
        }
    }

    fn each_amplitude<S: Scenario>(
        &self,
        amps: &[f64],
        mut build: impl FnMut(f64) -> Result<S>,
        filter: &Filter,
        procedures: &[ProcedureSpec],
        reps: usize,
        master_seed: u64,
    ) -> Result<Vec<ReplicateReport>> {
        amps.iter()
            .enumerate()
            .map(|(k, &a)| {
                let scenario = build(a)?;
                run_replicates(
                    &scenario,
                    procedures,
                    filter,
                    &self.options(k)?,
                    reps,
                    master_seed,
                    a,
                )
            })
            .collect()
    }
}
