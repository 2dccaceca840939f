//! Small hand-built graphs used by tests, examples and the CLI.

use crate::graph::HypothesisGraph;

fn build(ids: &[&str], edges: &[(&str, &str)]) -> HypothesisGraph {
    let ids: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    let edges: Vec<(String, String)> = edges
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    HypothesisGraph::from_id_edges(ids, &edges).expect("fixture graph is valid")
}

/// A complete binary tree of depth 3 with ids `H41` (root), `H31..H32`,
/// `H21..H24` and leaves `H11..H18`.
pub fn binary_tree_15() -> HypothesisGraph {
    let ids = [
        "H41", "H31", "H32", "H21", "H22", "H23", "H24", "H11", "H12", "H13", "H14", "H15", "H16",
        "H17", "H18",
    ];
    let edges = [
        ("H41", "H31"),
        ("H41", "H32"),
        ("H31", "H21"),
        ("H31", "H22"),
        ("H32", "H23"),
        ("H32", "H24"),
        ("H21", "H11"),
        ("H21", "H12"),
        ("H22", "H13"),
        ("H22", "H14"),
        ("H23", "H15"),
        ("H23", "H16"),
        ("H24", "H17"),
        ("H24", "H18"),
    ];
    build(&ids, &edges)
}

/// Two parents `1` and `2` sharing the child `3`.
pub fn shared_child_dag() -> HypothesisGraph {
    build(&["1", "2", "3"], &[("1", "3"), ("2", "3")])
}

/// Root `0` with leaves `1` and `2`.
pub fn cherry() -> HypothesisGraph {
    build(&["0", "1", "2"], &[("0", "1"), ("0", "2")])
}

/// `0 -> 1, 0 -> 2, 1 -> 3, 2 -> 3`.
pub fn diamond() -> HypothesisGraph {
    build(
        &["0", "1", "2", "3"],
        &[("0", "1"), ("0", "2"), ("1", "3"), ("2", "3")],
    )
}

/// A gene-annotated DAG over 17 genes with 15 nodes.
pub fn annotated_dag() -> HypothesisGraph {
    let nodes: [(&str, &str); 15] = [
        ("H1", "a"),
        ("H2", "b"),
        ("H3", "g"),
        ("A", "a,b"),
        ("B", "b,e"),
        ("C", "f,g"),
        ("D", "g"),
        ("E", "a,b,c"),
        ("F", "b,e,f,g"),
        ("I", "i"),
        ("L", "l"),
        ("M", "m,n,o"),
        ("P", "p,q,r,s,t"),
        ("Y", "a,b,c,d"),
        ("Z", "a,b,c,e,f,g,i,l,m,n,o,p,q,r,s,t"),
    ];
    let edges = [
        ("A", "H1"),
        ("A", "H2"),
        ("B", "H2"),
        ("C", "H3"),
        ("D", "H3"),
        ("E", "A"),
        ("F", "B"),
        ("F", "C"),
        ("Y", "E"),
        ("Z", "E"),
        ("Z", "F"),
        ("Z", "I"),
        ("Z", "L"),
        ("Z", "M"),
        ("Z", "P"),
    ];
    let ids: Vec<&str> = nodes.iter().map(|(id, _)| *id).collect();
    let genes = nodes
        .iter()
        .map(|(_, g)| g.split(',').map(str::to_string).collect())
        .collect();
    build(&ids, &edges)
        .with_annotations(genes, None)
        .expect("fixture annotations respect inclusion")
}
