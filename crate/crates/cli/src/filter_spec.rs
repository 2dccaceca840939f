use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Result;
use clap::{Args, ValueEnum};
use focused_fdr::filters::{BlockPartition, Filter, Screen, StructureClass};
use focused_fdr::{io, HypothesisGraph};

use crate::input_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterName {
    Trivial,
    FixedWeights,
    BlockScreen,
    Clumping,
    OuterNodes,
    SoftOuterNodes,
    Antichains,
}

/// Resource files shared by every filter.
#[derive(Debug, Clone, Args)]
pub struct FilterResources {
    /// Edge list `parent<TAB>child`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Gene annotations `node<TAB>g1,g2,...`.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Size of the gene universe; defaults to the annotated genes.
    #[arg(long)]
    pub universe: Option<usize>,
    /// Block partition `snp<TAB>block`.
    #[arg(long)]
    pub blocks: Option<PathBuf>,
    /// Fixed weights `id<TAB>weight`.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str, filter: FilterName) -> Result<&'a PathBuf> {
    path.as_ref()
        .ok_or_else(|| input_error(format!("filter {filter:?} needs --{flag}")))
}

impl FilterResources {
    /// Loads the graph, ordered by `ids` when given.
    pub fn graph(&self, name: FilterName, ids: Option<&[String]>) -> Result<HypothesisGraph> {
        let g = io::load_graph(need(&self.graph, "graph", name)?, ids)?;
        match &self.annotations {
            Some(a) => Ok(io::load_annotations(a, g, self.universe)?),
            None => Ok(g),
        }
    }

    pub fn blocks(&self, name: FilterName, ids: &[String]) -> Result<BlockPartition> {
        Ok(io::load_blocks(need(&self.blocks, "blocks", name)?, ids)?)
    }

    /// Builds the filter over hypotheses `ids`.
    pub fn build(&self, name: FilterName, ids: &[String]) -> Result<Filter> {
        Ok(match name {
            FilterName::Trivial => Filter::trivial(),
            FilterName::FixedWeights => Filter::fixed_weights(io::load_weights(
                need(&self.weights, "weights", name)?,
                ids,
            )?)?,
            FilterName::BlockScreen => {
                Filter::screening(Screen::block_minimum(self.blocks(name, ids)?))
            }
            FilterName::Clumping => Filter::clumping(self.blocks(name, ids)?),
            FilterName::OuterNodes => Filter::outer_nodes(Arc::new(self.graph(name, Some(ids))?)),
            FilterName::SoftOuterNodes => {
                if self.annotations.is_none() {
                    return Err(input_error("soft-outer-nodes needs --annotations"));
                }
                Filter::soft_outer_nodes(Arc::new(self.graph(name, Some(ids))?))?
            }
            FilterName::Antichains => Filter::structure_induced(StructureClass::Antichains(
                Arc::new(self.graph(name, Some(ids))?),
            )),
        })
    }

    /// The hypothesis ids implied by the resource files alone.
    pub fn standalone_ids(&self, name: FilterName) -> Result<Vec<String>> {
        match name {
            FilterName::OuterNodes | FilterName::SoftOuterNodes | FilterName::Antichains => {
                Ok(self.graph(name, None)?.ids().to_vec())
            }
            FilterName::Clumping | FilterName::BlockScreen => {
                Ok(io::load_blocks_with_ids(need(&self.blocks, "blocks", name)?)?.0)
            }
            FilterName::FixedWeights => {
                Ok(io::load_weights_with_ids(need(&self.weights, "weights", name)?)?.0)
            }
            FilterName::Trivial => Err(input_error(
                "the trivial filter needs --m to size the domain",
            )),
        }
    }
}
