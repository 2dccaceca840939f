//! Loaders and writers for the tab-separated input formats.
//!
//! All formats are UTF-8 with one record per line. Blank lines and lines
//! starting with `#` are skipped. Errors name the file and 1-based line.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{FdrError, Result};
use crate::filters::BlockPartition;
use crate::graph::HypothesisGraph;
use crate::procedures::PermutationMatrix;
use crate::types::PValueVector;

struct Lines<'a> {
    path: String,
    text: &'a str,
}

impl<'a> Lines<'a> {
    fn new(path: &Path, text: &'a str) -> Self {
        Lines {
            path: path.display().to_string(),
            text,
        }
    }

    fn records(&self) -> impl Iterator<Item = (usize, Vec<&'a str>)> + '_ {
        self.text.lines().enumerate().filter_map(|(k, line)| {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                None
            } else {
                Some((k + 1, line.split('\t').map(str::trim).collect()))
            }
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> FdrError {
        FdrError::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn fields<const N: usize>(&self, line: usize, f: &[&'a str]) -> Result<[&'a str; N]> {
        <[&str; N]>::try_from(f).map_err(|_| {
            self.err(
                line,
                format!("expected {N} tab-separated fields, found {}", f.len()),
            )
        })
    }

    fn number(&self, line: usize, s: &str, what: &str) -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| self.err(line, format!("{what} '{s}' is not a number")))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| FdrError::Parse {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })
}

fn index_table(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter()
        .enumerate()
        .map(|(j, s)| (s.as_str(), j))
        .collect()
}

/// Reads `id<TAB>pvalue` rows after a header line.
pub fn load_pvalues(path: &Path) -> Result<PValueVector> {
    parse_pvalues(path, &read(path)?)
}

pub fn parse_pvalues(path: &Path, text: &str) -> Result<PValueVector> {
    let lines = Lines::new(path, text);
    let mut records = lines.records();
    match records.next() {
        Some((line, f)) => {
            let [a, b] = lines.fields::<2>(line, &f)?;
            if a != "id" || b != "pvalue" {
                return Err(lines.err(line, "expected header 'id<TAB>pvalue'"));
            }
        }
        None => return Err(lines.err(1, "missing header 'id<TAB>pvalue'")),
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for (line, f) in records {
        let [id, p] = lines.fields::<2>(line, &f)?;
        if id.is_empty() {
            return Err(lines.err(line, "empty id"));
        }
        let p = lines.number(line, p, "p-value")?;
        if !(0.0..=1.0).contains(&p) {
            return Err(lines.err(line, format!("p-value {p} is outside [0, 1]")));
        }
        if !seen.insert(id) {
            return Err(lines.err(line, format!("duplicate id '{id}'")));
        }
        ids.push(id.to_string());
        values.push(p);
    }
    if ids.is_empty() {
        return Err(lines.err(1, "no p-values"));
    }
    PValueVector::new(ids, values)
}

/// Writes the format read by [`load_pvalues`]. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_pvalues(p: &PValueVector, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "id\tpvalue")?;
    for (id, v) in p.ids().iter().zip(p.values()) {
        writeln!(w, "{id}\t{v}")?;
    }
    Ok(())
}

/// Reads a `parent<TAB>child` edge list. A line with a single field
/// declares an isolated node. When `order` is given the graph's nodes are
/// exactly those ids in that order; otherwise nodes appear in order of
/// first mention.
pub fn load_graph(path: &Path, order: Option<&[String]>) -> Result<HypothesisGraph> {
    parse_graph(path, &read(path)?, order)
}

pub fn parse_graph(path: &Path, text: &str, order: Option<&[String]>) -> Result<HypothesisGraph> {
    let lines = Lines::new(path, text);
    let mut ids: Vec<String> = order.map(<[String]>::to_vec).unwrap_or_default();
    let mut lookup: HashMap<String, usize> = ids
        .iter()
        .enumerate()
        .map(|(j, s)| (s.clone(), j))
        .collect();
    let mut edges = Vec::new();
    for (line, f) in lines.records() {
        let names: Vec<&str> = match f.len() {
            1 => vec![f[0]],
            2 => vec![f[0], f[1]],
            n => return Err(lines.err(line, format!("expected 1 or 2 fields, found {n}"))),
        };
        let mut idx = Vec::with_capacity(2);
        for name in names {
            if name.is_empty() {
                return Err(lines.err(line, "empty node id"));
            }
            let j = match lookup.get(name) {
                Some(&j) => j,
                None if order.is_some() => {
                    return Err(lines.err(line, format!("node '{name}' has no p-value")))
                }
                None => {
                    ids.push(name.to_string());
                    lookup.insert(name.to_string(), ids.len() - 1);
                    ids.len() - 1
                }
            };
            idx.push(j);
        }
        if let [a, b] = idx[..] {
            if a == b {
                return Err(lines.err(line, format!("self loop on '{}'", ids[a])));
            }
            edges.push((a, b));
        }
    }
    HypothesisGraph::new(ids, &edges)
}

/// Reads `node<TAB>gene1,gene2,...` rows and attaches them to `graph`.
/// Nodes without a row get an empty annotation.
pub fn load_annotations(
    path: &Path,
    graph: HypothesisGraph,
    universe: Option<usize>,
) -> Result<HypothesisGraph> {
    parse_annotations(path, &read(path)?, graph, universe)
}

pub fn parse_annotations(
    path: &Path,
    text: &str,
    graph: HypothesisGraph,
    universe: Option<usize>,
) -> Result<HypothesisGraph> {
    let lines = Lines::new(path, text);
    let mut per_node: Vec<Option<Vec<String>>> = vec![None; graph.len()];
    for (line, f) in lines.records() {
        let (node, genes) = match f[..] {
            [node] => (node, ""),
            [node, genes] => (node, genes),
            _ => return Err(lines.err(line, format!("expected 2 fields, found {}", f.len()))),
        };
        let j = graph
            .index_of(node)
            .ok_or_else(|| lines.err(line, format!("unknown node '{node}'")))?;
        if per_node[j].is_some() {
            return Err(lines.err(line, format!("node '{node}' annotated twice")));
        }
        per_node[j] = Some(
            genes
                .split(',')
                .map(str::trim)
                .filter(|g| !g.is_empty())
                .map(String::from)
                .collect(),
        );
    }
    let rows = per_node
        .into_iter()
        .map(Option::unwrap_or_default)
        .collect();
    graph.with_annotations(rows, universe)
}

/// Reads `snp<TAB>block` rows covering every id exactly once.
pub fn load_blocks(path: &Path, ids: &[String]) -> Result<BlockPartition> {
    parse_blocks(path, &read(path)?, ids)
}

pub fn parse_blocks(path: &Path, text: &str, ids: &[String]) -> Result<BlockPartition> {
    let lines = Lines::new(path, text);
    let labels = parse_keyed(&lines, ids, |_, s| Ok(s.to_string()))?;
    BlockPartition::from_labels(&labels)
}

/// Reads `id<TAB>weight` rows covering every id exactly once.
pub fn load_weights(path: &Path, ids: &[String]) -> Result<Vec<f64>> {
    parse_weights(path, &read(path)?, ids)
}

pub fn parse_weights(path: &Path, text: &str, ids: &[String]) -> Result<Vec<f64>> {
    let lines = Lines::new(path, text);
    parse_keyed(&lines, ids, |line, s| {
        let w = lines.number(line, s, "weight")?;
        if !(0.0..=1.0).contains(&w) {
            return Err(lines.err(line, format!("weight {w} is outside [0, 1]")));
        }
        Ok(w)
    })
}

/// Reads a block file on its own; ids are taken in order of appearance.
pub fn load_blocks_with_ids(path: &Path) -> Result<(Vec<String>, BlockPartition)> {
    let text = read(path)?;
    let lines = Lines::new(path, &text);
    let (ids, labels) = parse_unkeyed(&lines, |_, s| Ok(s.to_string()))?;
    Ok((ids, BlockPartition::from_labels(&labels)?))
}

/// Reads a weights file on its own; ids are taken in order of appearance.
pub fn load_weights_with_ids(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let text = read(path)?;
    let lines = Lines::new(path, &text);
    let (ids, _) = parse_unkeyed(&lines, |_, _| Ok(()))?;
    Ok((ids.clone(), parse_weights(path, &text, &ids)?))
}

fn parse_unkeyed<T>(
    lines: &Lines<'_>,
    value: impl Fn(usize, &str) -> Result<T>,
) -> Result<(Vec<String>, Vec<T>)> {
    let mut seen = HashSet::new();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (line, f) in lines.records() {
        let [id, v] = lines.fields::<2>(line, &f)?;
        if !seen.insert(id) {
            return Err(lines.err(line, format!("duplicate id '{id}'")));
        }
        ids.push(id.to_string());
        values.push(value(line, v)?);
    }
    if ids.is_empty() {
        return Err(lines.err(1, "no entries"));
    }
    Ok((ids, values))
}

fn parse_keyed<T>(
    lines: &Lines<'_>,
    ids: &[String],
    value: impl Fn(usize, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let table = index_table(ids);
    let mut out: Vec<Option<T>> = (0..ids.len()).map(|_| None).collect();
    for (line, f) in lines.records() {
        let [id, v] = lines.fields::<2>(line, &f)?;
        let j = *table
            .get(id)
            .ok_or_else(|| lines.err(line, format!("unknown id '{id}'")))?;
        if out[j].is_some() {
            return Err(lines.err(line, format!("duplicate id '{id}'")));
        }
        out[j] = Some(value(line, v)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or_else(|| lines.err(0, format!("no entry for id '{}'", ids[j]))))
        .collect()
}

/// Reads a permutation matrix: a header of hypothesis ids followed by one
/// row of permuted p-values per permutation. Columns are reordered to
/// match `ids`.
pub fn load_permutation_matrix(path: &Path, ids: &[String]) -> Result<PermutationMatrix> {
    parse_permutation_matrix(path, &read(path)?, ids)
}

pub fn parse_permutation_matrix(
    path: &Path,
    text: &str,
    ids: &[String],
) -> Result<PermutationMatrix> {
    let lines = Lines::new(path, text);
    let mut records = lines.records();
    let (hline, header) = records
        .next()
        .ok_or_else(|| lines.err(1, "missing header of hypothesis ids"))?;
    if header.len() != ids.len() {
        return Err(lines.err(
            hline,
            format!(
                "header has {} columns but there are {} hypotheses",
                header.len(),
                ids.len()
            ),
        ));
    }
    let table = index_table(ids);
    let mut column_to_index = Vec::with_capacity(header.len());
    let mut seen = HashSet::new();
    for id in &header {
        let j = *table
            .get(id)
            .ok_or_else(|| lines.err(hline, format!("unknown id '{id}'")))?;
        if !seen.insert(j) {
            return Err(lines.err(hline, format!("duplicate id '{id}'")));
        }
        column_to_index.push(j);
    }
    let mut rows = Vec::new();
    for (line, f) in records {
        if f.len() != ids.len() {
            return Err(lines.err(
                line,
                format!("expected {} columns, found {}", ids.len(), f.len()),
            ));
        }
        let mut row = vec![0.0; ids.len()];
        for (c, s) in f.iter().enumerate() {
            let p = lines.number(line, s, "p-value")?;
            if !(0.0..=1.0).contains(&p) {
                return Err(lines.err(line, format!("p-value {p} is outside [0, 1]")));
            }
            row[column_to_index[c]] = p;
        }
        rows.push(row);
    }
    PermutationMatrix::new(rows)
}

/// Writes a permutation matrix in the format read by
/// [`load_permutation_matrix`].
pub fn write_permutation_matrix(
    ids: &[String],
    perm: &PermutationMatrix,
    mut w: impl Write,
) -> std::io::Result<()> {
    writeln!(w, "{}", ids.join("\t"))?;
    for row in perm.rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{}", cells.join("\t"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path() -> &'static Path {
        Path::new("in.tsv")
    }

    #[test]
    fn two_row_pvalue_file() {
        let p = parse_pvalues(path(), "id\tpvalue\na\t0.01\nb\t0.2\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.values(), &[0.01, 0.2]);
        assert_eq!(p.ids(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn out_of_range_pvalue_names_line() {
        let err = parse_pvalues(path(), "id\tpvalue\na\t1.5\n").unwrap_err();
        match err {
            FdrError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("1.5"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_duplicate_rows() {
        let e = parse_pvalues(path(), "id\tpvalue\na\t0.1\nb 0.2\n").unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 3, .. }));
        let e = parse_pvalues(path(), "id\tpvalue\na\t0.1\n# note\na\t0.2\n").unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 4, .. }));
        let e = parse_pvalues(path(), "a\t0.1\n").unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 1, .. }));
        let e = parse_pvalues(path(), "id\tpvalue\na\tx\n").unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 2, .. }));
    }

    #[test]
    fn graph_from_edges_and_declared_nodes() {
        let g = parse_graph(path(), "# dag\n1\t3\n2\t3\n4\n", None).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(
            g.children(g.index_of("1").unwrap()),
            &[g.index_of("3").unwrap()]
        );
        assert!(g.parents(g.index_of("4").unwrap()).is_empty());
    }

    #[test]
    fn graph_in_pvalue_order() {
        let ids: Vec<String> = ["c", "b", "a"].iter().map(|s| s.to_string()).collect();
        let g = parse_graph(path(), "a\tb\na\tc\n", Some(&ids)).unwrap();
        assert_eq!(g.ids(), &ids[..]);
        assert_eq!(g.leaves(), &[0, 1]);
        let e = parse_graph(path(), "a\tz\n", Some(&ids)).unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 1, .. }));
    }

    #[test]
    fn cyclic_graph_rejected() {
        assert!(parse_graph(path(), "a\tb\nb\ta\n", None).is_err());
        assert!(parse_graph(path(), "a\ta\n", None).is_err());
    }

    #[test]
    fn annotations_attach() {
        let g = parse_graph(path(), "r\tx\nr\ty\n", None).unwrap();
        let g = parse_annotations(path(), "x\tg1,g2\ny\tg2,g3\nr\tg1,g2,g3\n", g, None).unwrap();
        let a = g.annotations().unwrap();
        assert_eq!(a.universe(), 3);
        assert_eq!(a.genes(g.index_of("r").unwrap()).len(), 3);
        let g2 = parse_graph(path(), "r\tx\n", None).unwrap();
        assert!(parse_annotations(path(), "q\tg1\n", g2, None).is_err());
    }

    #[test]
    fn blocks_and_weights() {
        let ids: Vec<String> = ["s1", "s2", "s3"].iter().map(|s| s.to_string()).collect();
        let b = parse_blocks(path(), "s1\tA\ns3\tB\ns2\tA\n", &ids).unwrap();
        assert_eq!(b.n_blocks(), 2);
        assert_eq!(b.block_of(0), b.block_of(1));
        assert_ne!(b.block_of(0), b.block_of(2));
        assert!(parse_blocks(path(), "s1\tA\ns2\tA\n", &ids).is_err());
        let w = parse_weights(path(), "s2\t0.5\ns1\t1\ns3\t0\n", &ids).unwrap();
        assert_eq!(w, vec![1.0, 0.5, 0.0]);
        let e = parse_weights(path(), "s1\t2\n", &ids).unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 1, .. }));
    }

    #[test]
    fn standalone_block_and_weight_files() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("b.tsv");
        fs::write(&f, "x\tB\ny\tA\nz\tB\n").unwrap();
        let (ids, b) = load_blocks_with_ids(&f).unwrap();
        assert_eq!(ids, vec!["x", "y", "z"]);
        assert_eq!(b.block_of(0), b.block_of(2));
        let w = dir.path().join("w.tsv");
        fs::write(&w, "b\t0.25\na\t1\n").unwrap();
        let (ids, v) = load_weights_with_ids(&w).unwrap();
        assert_eq!(ids, vec!["b", "a"]);
        assert_eq!(v, vec![0.25, 1.0]);
    }

    #[test]
    fn permutation_matrix_reorders_columns() {
        let ids: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let perm = parse_permutation_matrix(path(), "b\ta\n0.5\t0.1\n0.2\t0.9\n", &ids).unwrap();
        assert_eq!(perm.rows(), &[vec![0.1, 0.5], vec![0.9, 0.2]]);
        let e = parse_permutation_matrix(path(), "a\n0.1\n", &ids).unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 1, .. }));
        let e = parse_permutation_matrix(path(), "a\tb\n0.1\n", &ids).unwrap_err();
        assert!(matches!(e, FdrError::Parse { line: 2, .. }));
        let mut buf = Vec::new();
        write_permutation_matrix(&ids, &perm, &mut buf).unwrap();
        let back =
            parse_permutation_matrix(path(), std::str::from_utf8(&buf).unwrap(), &ids).unwrap();
        assert_eq!(back.rows(), perm.rows());
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.tsv");
        fs::write(&f, "id\tpvalue\nx\t0.3\n").unwrap();
        assert_eq!(load_pvalues(&f).unwrap().values(), &[0.3]);
        let missing = load_pvalues(&dir.path().join("none.tsv")).unwrap_err();
        assert!(matches!(missing, FdrError::Parse { line: 0, .. }));
    }

    proptest! {
        #[test]
        fn pvalue_round_trip(values in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let ids: Vec<String> = (0..values.len()).map(|j| format!("h{j}")).collect();
            let p = PValueVector::new(ids, values).unwrap();
            let mut buf = Vec::new();
            write_pvalues(&p, &mut buf).unwrap();
            let back = parse_pvalues(path(), std::str::from_utf8(&buf).unwrap()).unwrap();
            prop_assert_eq!(back.values(), p.values());
            prop_assert_eq!(back.ids(), p.ids());
        }
    }
}
