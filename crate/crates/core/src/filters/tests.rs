use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::fixtures;
use crate::graph::{numbered_ids, HypothesisGraph};
use crate::types::{generalized_fdp, GroundTruth};

fn set(g: &HypothesisGraph, ids: &[&str]) -> RejectionSet {
    RejectionSet::from_indices(g.len(), ids.iter().map(|s| g.index_of(s).unwrap())).unwrap()
}

fn selected(u: &PrioritizationVector) -> Vec<usize> {
    u.support().indices()
}

#[test]
fn trivial_is_identity() {
    let r = RejectionSet::from_indices(4, [0, 3]).unwrap();
    let u = Filter::trivial().apply_values(&r, &[0.3; 4]).unwrap();
    assert_eq!(u.scores(), &[1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn fixed_weights_respect_support() {
    let f = Filter::fixed_weights(vec![0.5, 0.25, 1.0]).unwrap();
    let r = RejectionSet::from_indices(3, [1, 2]).unwrap();
    assert_eq!(
        f.apply_values(&r, &[0.1; 3]).unwrap().scores(),
        &[0.0, 0.25, 1.0]
    );
    assert!(Filter::fixed_weights(vec![1.5]).is_err());
}

#[test]
fn clumping_keeps_block_minimum() {
    let f = Filter::clumping(BlockPartition::new(vec![0, 0, 1]).unwrap());
    let u = f
        .apply_values(&RejectionSet::full(3), &[0.01, 0.005, 0.2])
        .unwrap();
    assert_eq!(selected(&u), vec![1, 2]);
}

#[test]
fn clumping_splits_tied_leads() {
    let blocks = BlockPartition::new(vec![0, 0, 0, 1]).unwrap();
    let f = Filter::clumping(blocks.clone());
    let p = [0.01, 0.01, 0.3, 0.2];
    let u = f.apply_values(&RejectionSet::full(4), &p).unwrap();
    assert_eq!(u.scores(), &[0.5, 0.5, 0.0, 1.0]);
    assert_eq!(u.weighted_count(), 2.0);
    let screen = Filter::screening(Screen::block_minimum(blocks));
    let s = screen.apply_values(&RejectionSet::full(4), &p).unwrap();
    assert_eq!(s.weighted_count(), 3.0);
    let prof = f.threshold_profile(&p).unwrap();
    assert_eq!(prof.counts, vec![0.0, 1.0, 2.0, 2.0]);
}

#[test]
fn outer_nodes_on_binary_tree() {
    let g = Arc::new(fixtures::binary_tree_15());
    let truth = GroundTruth::from_nonnulls(
        g.len(),
        ["H41", "H31", "H21", "H11", "H12"].map(|s| g.index_of(s).unwrap()),
    )
    .unwrap();
    let r = set(&g, &["H41", "H31", "H21", "H11", "H12", "H32"]);
    let u = Filter::outer_nodes(g.clone())
        .apply_values(&r, &[0.5; 15])
        .unwrap();
    let out: Vec<&str> = selected(&u).iter().map(|&j| g.ids()[j].as_str()).collect();
    assert_eq!(out, vec!["H32", "H11", "H12"]);
    assert_eq!(generalized_fdp(&r.indicator(), &truth), 1.0 / 6.0);
    assert_eq!(generalized_fdp(&u, &truth), 1.0 / 3.0);
}

#[test]
fn soft_outer_gammas_on_annotated_dag() {
    let g = fixtures::annotated_dag();
    let circled = ["A", "E", "B", "C", "D", "F", "M", "P", "Z"];
    let r = set(&g, &circled);
    let gammas = soft_outer_gammas(&g, &r).unwrap();
    let expected = [0.75, 1.0 / 3.0, 0.75, 0.5, 1.0, 0.0, 1.0, 1.0, 0.125];
    for (id, want) in circled.iter().zip(expected) {
        let got = gammas[g.index_of(id).unwrap()];
        assert!((got - want).abs() < 1e-12, "{id}: {got} vs {want}");
    }
}

#[test]
fn soft_outer_identity_small() {
    let g = HypothesisGraph::new(numbered_ids(2), &[(1, 0)])
        .unwrap()
        .with_annotations(
            vec![vec!["g1".into()], vec!["g1".into(), "g2".into()]],
            Some(4),
        )
        .unwrap();
    let r = RejectionSet::full(2);
    let f = Filter::soft_outer_nodes(Arc::new(g.clone())).unwrap();
    let want = 4f64.ln() + 2f64.ln() / 2.0;
    let identity = soft_outer_weighted_count_identity(&g, &r).unwrap();
    assert!((identity - want).abs() < 1e-12);
    assert!((f.raw_count(&r, &[0.1, 0.1]).unwrap() - want).abs() < 1e-12);
    assert_eq!(
        soft_outer_weighted_count_identity(&g, &RejectionSet::empty(2)).unwrap(),
        0.0
    );
}

#[test]
fn soft_outer_scores_are_normalized() {
    let g = Arc::new(fixtures::annotated_dag());
    let f = Filter::soft_outer_nodes(g.clone()).unwrap();
    let u = f
        .apply_values(&RejectionSet::full(g.len()), &vec![0.5; g.len()])
        .unwrap();
    assert!(u.scores().iter().all(|&x| (0.0..=1.0).contains(&x)));
    let raw = f
        .raw_count(&RejectionSet::full(g.len()), &vec![0.5; g.len()])
        .unwrap();
    assert!((u.weighted_count() * 17f64.ln() - raw).abs() < 1e-12);
}

#[test]
fn soft_outer_requires_annotations() {
    assert!(Filter::soft_outer_nodes(Arc::new(fixtures::cherry())).is_err());
}

#[test]
fn screening_uses_mask() {
    let f = Filter::screening(Screen::new("first-two", |p: &[f64]| {
        (0..p.len()).map(|j| j < 2).collect()
    }));
    let u = f
        .apply_values(&RejectionSet::from_indices(3, [1, 2]).unwrap(), &[0.2; 3])
        .unwrap();
    assert_eq!(selected(&u), vec![1]);
}

#[test]
fn threshold_profile_steps() {
    let p = [0.02, 0.01, 0.02, 0.5];
    let prof = Filter::trivial().threshold_profile(&p).unwrap();
    assert_eq!(prof.thresholds, vec![0.0, 0.01, 0.02, 0.5]);
    assert_eq!(prof.counts, vec![0.0, 1.0, 3.0, 4.0]);
    assert_eq!(prof.at(0.015), 1.0);
    assert_eq!(prof.at(1.0), 4.0);
    let zero = Filter::trivial().threshold_profile(&[0.0, 0.3]).unwrap();
    assert_eq!(zero.thresholds, vec![0.0, 0.3]);
    assert_eq!(zero.counts, vec![1.0, 2.0]);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let f = Filter::outer_nodes(Arc::new(fixtures::cherry()));
    assert!(f.raw_scores(&RejectionSet::empty(2), &[0.1, 0.2]).is_err());
    assert!(f.threshold_profile(&[0.1, 0.2]).is_err());
}

#[test]
fn checker_shared_child_counterexample() {
    let g = Arc::new(fixtures::shared_child_dag());
    let f = Filter::outer_nodes(g.clone());
    let res = check_filter_property(&f, &FilterProperty::Monotonic, &CheckDomain::new(3)).unwrap();
    assert!(!res.holds);
    let ce = res.counterexample.unwrap();
    let ids = |r: &[usize]| r.iter().map(|&j| g.ids()[j].clone()).collect::<Vec<_>>();
    assert_eq!(ids(&ce.r1), ["1", "2", "3"]);
    assert_eq!(ids(&ce.r2), ["1", "2"]);
    assert_eq!((ce.count1, ce.count2), (1.0, 2.0));
}

#[test]
fn checker_trivial_strongly_simple() {
    let res = check_filter_property(
        &Filter::trivial(),
        &FilterProperty::StronglySimple,
        &CheckDomain::new(4),
    )
    .unwrap();
    assert!(res.holds);
}

#[test]
fn checker_clumping() {
    let blocks = BlockPartition::new(vec![0, 0, 1, 1, 1]).unwrap();
    let f = Filter::clumping(blocks.clone());
    let domain = CheckDomain::new(5);
    let bs = FilterProperty::BlockSimple(blocks.collection());
    assert!(check_filter_property(&f, &bs, &domain).unwrap().holds);
    assert!(
        check_filter_property(&f, &FilterProperty::Simple, &domain)
            .unwrap()
            .holds
    );
    assert!(
        !check_filter_property(&f, &FilterProperty::Monotonic, &domain)
            .unwrap()
            .holds
    );
    let sbs = FilterProperty::StronglyBlockSimple(blocks.collection());
    assert!(!check_filter_property(&f, &sbs, &domain).unwrap().holds);

    let thresholds = CheckDomain::new(5).threshold_sets_only();
    assert!(
        check_filter_property(&f, &FilterProperty::Monotonic, &thresholds)
            .unwrap()
            .holds
    );
    assert!(check_filter_property(&f, &sbs, &thresholds).unwrap().holds);

    // Tied coordinates let two minimisers share a block.
    let tied = CheckDomain::new(5).exact_grid();
    assert!(!check_filter_property(&f, &bs, &tied).unwrap().holds);
}

#[test]
fn checker_guards_domain_size() {
    let f = Filter::clumping(BlockPartition::contiguous(13, 2).unwrap());
    assert!(matches!(
        check_filter_property(&f, &FilterProperty::Monotonic, &CheckDomain::new(13)),
        Err(FdrError::DomainTooLarge(_))
    ));
    let f = Filter::clumping(BlockPartition::contiguous(12, 2).unwrap());
    assert!(matches!(
        check_filter_property(&f, &FilterProperty::Monotonic, &CheckDomain::new(12)),
        Err(FdrError::DomainTooLarge(_))
    ));
}

#[test]
fn outer_nodes_is_fixed_under_perturbation() {
    let g = Arc::new(fixtures::binary_tree_15());
    let f = Filter::outer_nodes(g.clone());
    let r = set(&g, &["H41", "H31", "H22", "H13", "H17"]);
    let a = f.raw_scores(&r, &[0.5; 15]).unwrap();
    let p: Vec<f64> = (0..15).map(|j| (j as f64 + 0.5) / 15.0).collect();
    assert_eq!(a, f.raw_scores(&r, &p).unwrap());
}

/// Random DAG over `m` nodes with edges from lower to higher index.
pub(crate) fn random_dag(m: usize, edges: &[bool]) -> HypothesisGraph {
    let mut e = Vec::new();
    let mut k = 0;
    for a in 0..m {
        for b in a + 1..m {
            if edges[k % edges.len()] {
                e.push((a, b));
            }
            k += 1;
        }
    }
    HypothesisGraph::new(numbered_ids(m), &e).unwrap()
}

/// Annotates a DAG bottom-up: each node owns `own[j]` fresh genes plus the
/// genes of its children.
pub(crate) fn annotate(g: HypothesisGraph, own: &[usize]) -> HypothesisGraph {
    let m = g.len();
    let mut genes: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut next = 0u32;
    for j in (0..m).rev() {
        for _ in 0..own[j] {
            genes[j].push(next);
            next += 1;
        }
        let kids = g.children(j).to_vec();
        for c in kids {
            let cg = genes[c].clone();
            genes[j].extend(cg);
        }
    }
    let universe = next.max(1) as usize;
    g.with_gene_indices(genes, universe).unwrap()
}

fn random_tree(parents: &[usize]) -> HypothesisGraph {
    let m = parents.len() + 1;
    let edges: Vec<(usize, usize)> = parents
        .iter()
        .enumerate()
        .map(|(k, &p)| (p % (k + 1), k + 1))
        .collect();
    HypothesisGraph::new(numbered_ids(m), &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn support_condition_holds(
        mask in prop::collection::vec(any::<bool>(), 8),
        p in prop::collection::vec(0.0..=1.0f64, 8),
        edges in prop::collection::vec(any::<bool>(), 28),
        own in prop::collection::vec(0usize..3, 8),
    ) {
        let g = Arc::new(annotate(random_dag(8, &edges), &own));
        let r = RejectionSet::from_mask(mask);
        let filters = [
            Filter::trivial(),
            Filter::fixed_weights(p.clone()).unwrap(),
            Filter::clumping(BlockPartition::contiguous(8, 3).unwrap()),
            Filter::screening(Screen::block_minimum(BlockPartition::contiguous(8, 2).unwrap())),
            Filter::outer_nodes(g.clone()),
            Filter::soft_outer_nodes(g.clone()).unwrap(),
            Filter::structure_induced(StructureClass::Antichains(g.clone())),
        ];
        for f in &filters {
            let u = f.apply_values(&r, &p).unwrap();
            for j in 0..8 {
                prop_assert!((0.0..=1.0).contains(&u.get(j)));
                if !r.contains(j) {
                    prop_assert_eq!(u.get(j), 0.0);
                }
            }
        }
    }

    #[test]
    fn incremental_profile_matches_recompute(
        p in prop::collection::vec(prop_oneof![Just(0.0), Just(0.25), 0.0..=1.0f64], 9),
        edges in prop::collection::vec(any::<bool>(), 36),
        own in prop::collection::vec(0usize..3, 9),
        weights in prop::collection::vec(0.0..=1.0f64, 9),
        null in prop::collection::vec(any::<bool>(), 9),
    ) {
        let g = Arc::new(annotate(random_dag(9, &edges), &own));
        let filters = [
            Filter::trivial(),
            Filter::fixed_weights(weights).unwrap(),
            Filter::clumping(BlockPartition::contiguous(9, 4).unwrap()),
            Filter::screening(Screen::block_minimum(BlockPartition::contiguous(9, 3).unwrap())),
            Filter::outer_nodes(g.clone()),
            Filter::soft_outer_nodes(g.clone()).unwrap(),
        ];
        for f in &filters {
            let prof = f.threshold_profile(&p).unwrap();
            let nprof = f.null_threshold_profile(&p, &null).unwrap();
            prop_assert_eq!(&prof.thresholds, &nprof.thresholds);
            for (k, &t) in prof.thresholds.iter().enumerate() {
                let r = RejectionSet::at_threshold(&p, t);
                let u = f.raw_scores(&r, &p).unwrap();
                let full: f64 = u.iter().sum();
                let nulls: f64 = (0..9).filter(|&j| null[j]).map(|j| u[j]).sum();
                prop_assert!((prof.counts[k] - full).abs() < 1e-9, "{} at {}", f.label(), t);
                prop_assert!((nprof.counts[k] - nulls).abs() < 1e-9, "{} null at {}", f.label(), t);
            }
        }
    }

    #[test]
    fn clumping_count_is_blocks_hit_on_threshold_sets(
        p in prop::collection::vec(0.0..=1.0f64, 12),
        t in 0.0..=1.0f64,
        size in 1usize..5,
    ) {
        let blocks = BlockPartition::contiguous(12, size).unwrap();
        let r = RejectionSet::at_threshold(&p, t);
        let count = Filter::clumping(blocks.clone()).raw_count(&r, &p).unwrap();
        let hit = blocks.blocks().iter().filter(|b| b.iter().any(|&j| r.contains(j))).count();
        prop_assert_eq!(count, hit as f64);
    }

    #[test]
    fn soft_outer_identity_holds(
        mask in prop::collection::vec(any::<bool>(), 10),
        edges in prop::collection::vec(any::<bool>(), 45),
        own in prop::collection::vec(0usize..4, 10),
    ) {
        let g = annotate(random_dag(10, &edges), &own);
        let r = RejectionSet::from_mask(mask);
        let f = Filter::soft_outer_nodes(Arc::new(g.clone())).unwrap();
        let raw = f.raw_count(&r, &[0.5; 10]).unwrap();
        let id = soft_outer_weighted_count_identity(&g, &r).unwrap();
        prop_assert!((raw - id).abs() <= 1e-12 * raw.abs().max(1.0));
    }

    #[test]
    fn outer_nodes_monotonic_on_trees(parents in prop::collection::vec(0usize..100, 1..8)) {
        let g = Arc::new(random_tree(&parents));
        let res = check_filter_property(
            &Filter::outer_nodes(g.clone()),
            &FilterProperty::Monotonic,
            &CheckDomain::new(g.len()),
        ).unwrap();
        prop_assert!(res.holds);
    }
}
