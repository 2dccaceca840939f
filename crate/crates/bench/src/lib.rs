//! Seeded inputs shared by the benchmarks.

use std::sync::Arc;

use focused_fdr::filters::{BlockPartition, Filter};
use focused_fdr::procedures::PermutationMatrix;
use focused_fdr::simulate::{random_annotated_dag, stream_rng, Purpose};
use focused_fdr::{HypothesisGraph, PValueVector};
use rand::Rng;

/// `m` p-values with roughly a tenth drawn near zero.
pub fn pvalues(m: usize, seed: u64) -> PValueVector {
    let mut rng = stream_rng(seed, Purpose::Replicate, 0, 0);
    let values = (0..m)
        .map(|_| {
            let u: f64 = rng.gen();
            if rng.gen_bool(0.1) {
                u * 1e-4
            } else {
                u
            }
        })
        .collect();
    PValueVector::from_values(values).expect("values lie in [0, 1]")
}

/// `b` null p-value rows of width `m`.
pub fn permutations(m: usize, b: usize, seed: u64) -> PermutationMatrix {
    let mut rng = stream_rng(seed, Purpose::Oracle, 0, 0);
    let rows = (0..b)
        .map(|_| (0..m).map(|_| rng.gen()).collect())
        .collect();
    PermutationMatrix::new(rows).expect("rows share one width")
}

pub fn annotated_dag(nodes: usize, genes: usize) -> Arc<HypothesisGraph> {
    let mut rng = stream_rng(1, Purpose::Structure, 0, 0);
    let dag = random_annotated_dag(nodes, genes, 3, 12, &mut rng).expect("valid DAG parameters");
    Arc::new(dag.graph)
}

pub fn clumping(m: usize, block_size: usize) -> Filter {
    Filter::clumping(BlockPartition::contiguous(m, block_size).expect("positive block size"))
}
