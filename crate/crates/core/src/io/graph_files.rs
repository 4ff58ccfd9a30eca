//! Plain-text graph exchange format.
//!
//! Edge file: one directed edge per line, `src<TAB>dst[<TAB>weight]`,
//! weight defaulting to 1. A reciprocal pair is two lines. Attribute
//! file: `node<TAB>name=value[,name=value...]`, one line per node; a bare
//! node id declares a node without attributes. Node ids must be dense
//! `0..N-1`. Lines starting with `#` and blank lines are ignored in both
//! files. Any whitespace separates columns.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, GraphBuilder};

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Load a graph from an edge file and an attribute file. The attribute
/// file defines the node set; edges may only reference those nodes.
pub fn load_graph(edge_path: &Path, attr_path: &Path) -> Result<AttributedGraph> {
    let attrs = File::open(attr_path).map_err(|e| {
        parse_error(attr_path, 0, format!("cannot open attribute file: {e}"))
    })?;
    let edges = File::open(edge_path)
        .map_err(|e| parse_error(edge_path, 0, format!("cannot open edge file: {e}")))?;
    load_graph_from(BufReader::new(edges), BufReader::new(attrs), edge_path, attr_path)
}

/// Parsed attribute line: node id, its name=value pairs, source line.
type NodeLine = (usize, Vec<(String, String)>, usize);

pub fn load_graph_from<E: Read, A: Read>(
    edge_reader: E,
    attr_reader: A,
    edge_path: &Path,
    attr_path: &Path,
) -> Result<AttributedGraph> {
    // Attribute file first: it declares the node set.
    let mut node_lines: Vec<NodeLine> = Vec::new();
    for (lineno, line) in BufReader::new(attr_reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut fields = content.split_whitespace();
        let node: usize = fields
            .next()
            .expect("non-empty line has a first field")
            .parse()
            .map_err(|_| parse_error(attr_path, lineno, "node id must be an integer"))?;
        let mut pairs = Vec::new();
        if let Some(rest) = fields.next() {
            for pair in rest.split(',') {
                let (name, value) = pair.split_once('=').ok_or_else(|| {
                    parse_error(attr_path, lineno, format!("expected name=value, got {pair:?}"))
                })?;
                if name.is_empty() || value.is_empty() {
                    return Err(parse_error(attr_path, lineno, "empty attribute name or value"));
                }
                pairs.push((name.to_string(), value.to_string()));
            }
        }
        if fields.next().is_some() {
            return Err(parse_error(attr_path, lineno, "too many columns"));
        }
        node_lines.push((node, pairs, lineno));
    }

    let n = node_lines.len();
    let mut seen = vec![false; n];
    for (node, _, lineno) in &node_lines {
        if *node >= n {
            return Err(parse_error(
                attr_path,
                *lineno,
                format!("node id {node} leaves a gap; ids must be dense 0..{n}"),
            ));
        }
        if seen[*node] {
            return Err(parse_error(attr_path, *lineno, format!("duplicate node {node}")));
        }
        seen[*node] = true;
    }

    // Attribute columns in first-seen order; every node must carry every
    // attribute so partitions stay total.
    let mut names: Vec<String> = Vec::new();
    for (_, pairs, _) in &node_lines {
        for (name, _) in pairs {
            if !names.contains(name) {
                names.push(name.clone());
            }
        }
    }
    let mut columns: Vec<Vec<Option<String>>> = vec![vec![None; n]; names.len()];
    for (node, pairs, lineno) in &node_lines {
        for (name, value) in pairs {
            let col = names.iter().position(|x| x == name).expect("name collected");
            if columns[col][*node].is_some() {
                return Err(parse_error(
                    attr_path,
                    *lineno,
                    format!("node {node} repeats attribute {name:?}"),
                ));
            }
            columns[col][*node] = Some(value.clone());
        }
    }

    let mut builder = GraphBuilder::new(n);
    for (col, name) in names.iter().enumerate() {
        let mut values = Vec::with_capacity(n);
        for (node, value) in columns[col].iter().enumerate() {
            match value {
                Some(v) => values.push(v.clone()),
                None => {
                    return Err(Error::MissingAttributeValue {
                        node,
                        attribute: name.clone(),
                    })
                }
            }
        }
        builder.add_attribute(name, &values);
    }

    let mut present = std::collections::HashSet::new();
    for (lineno, line) in BufReader::new(edge_reader).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_error(edge_path, lineno, "expected src dst [weight]"));
        }
        let src: usize = fields[0]
            .parse()
            .map_err(|_| parse_error(edge_path, lineno, "src must be an integer"))?;
        let dst: usize = fields[1]
            .parse()
            .map_err(|_| parse_error(edge_path, lineno, "dst must be an integer"))?;
        let weight: f64 = match fields.get(2) {
            Some(w) => w
                .parse()
                .map_err(|_| parse_error(edge_path, lineno, "weight must be a number"))?,
            None => 1.0,
        };
        if src >= n || dst >= n {
            return Err(parse_error(
                edge_path,
                lineno,
                format!("edge references unknown node (graph has {n} nodes)"),
            ));
        }
        if src == dst {
            return Err(parse_error(edge_path, lineno, format!("self-loop on node {src}")));
        }
        if !weight.is_finite() || weight <= 0.0 {
            return Err(parse_error(edge_path, lineno, format!("weight {weight} not positive")));
        }
        if !present.insert((src, dst)) {
            return Err(parse_error(edge_path, lineno, format!("duplicate edge {src} -> {dst}")));
        }
        builder.add_edge(src, dst, weight);
    }

    builder.build()
}

/// Export to the same format `load_graph` reads; output is byte-stable
/// for a given graph.
pub fn write_graph(graph: &AttributedGraph, edge_path: &Path, attr_path: &Path) -> Result<()> {
    let mut edges = BufWriter::new(File::create(edge_path)?);
    let mut attrs = BufWriter::new(File::create(attr_path)?);
    write_graph_to(graph, &mut edges, &mut attrs)?;
    edges.flush()?;
    attrs.flush()?;
    Ok(())
}

pub fn write_graph_to<E: Write, A: Write>(
    graph: &AttributedGraph,
    edge_writer: &mut E,
    attr_writer: &mut A,
) -> Result<()> {
    for (src, dst, weight) in graph.edges() {
        writeln!(edge_writer, "{src}\t{dst}\t{weight}")?;
    }
    for node in 0..graph.node_count() {
        if graph.attributes().is_empty() {
            writeln!(attr_writer, "{node}")?;
        } else {
            let pairs: Vec<String> = graph
                .attributes()
                .iter()
                .map(|c| format!("{}={}", c.name(), c.value_name(node)))
                .collect();
            writeln!(attr_writer, "{node}\t{}", pairs.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn load_str(edges: &str, attrs: &str) -> Result<AttributedGraph> {
        load_graph_from(
            edges.as_bytes(),
            attrs.as_bytes(),
            &PathBuf::from("edges.tsv"),
            &PathBuf::from("attrs.tsv"),
        )
    }

    #[test]
    fn two_line_reciprocal_pair() {
        let g = load_str("0\t1\t1\n1\t0\t1\n", "0\tgrp=a\n1\tgrp=b\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert!(g.all_reciprocal());
        assert_eq!(g.attribute("grp").unwrap().value_name(0), "a");
    }

    #[test]
    fn missing_weight_defaults_to_one() {
        let g = load_str("0\t1\n", "0\n1\n").unwrap();
        assert_eq!(g.weight(0, 1), Some(1.0));
    }

    #[test]
    fn self_loop_is_rejected_with_line() {
        let err = load_str("0\t0\n", "0\n1\n").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("self-loop"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_node_is_rejected() {
        let err = load_str("0\t7\n", "0\n1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn gap_in_node_ids_is_rejected() {
        let err = load_str("", "0\n2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn missing_attribute_value_is_rejected() {
        let err = load_str("", "0\tgrp=a\n1\n").unwrap_err();
        assert!(matches!(err, Error::MissingAttributeValue { node: 1, .. }));
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let g = load_str(
            "# edge file\n\n0\t1\t2.5\n1\t0\t2.5\n",
            "# attrs\n\n0\tgrp=a\n1\tgrp=a\n",
        )
        .unwrap();
        assert_eq!(g.weight(0, 1), Some(2.5));
    }

    #[test]
    fn export_round_trips() {
        let g = load_str(
            "0\t1\t2.5\n1\t0\t1.25\n2\t0\t1\n",
            "0\tgrp=a,age=x\n1\tgrp=b,age=x\n2\tgrp=a,age=y\n",
        )
        .unwrap();
        let mut edges = Vec::new();
        let mut attrs = Vec::new();
        write_graph_to(&g, &mut edges, &mut attrs).unwrap();
        let reloaded = load_str(
            std::str::from_utf8(&edges).unwrap(),
            std::str::from_utf8(&attrs).unwrap(),
        )
        .unwrap();
        assert_eq!(g, reloaded);
    }
}
