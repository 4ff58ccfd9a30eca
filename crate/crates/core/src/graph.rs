//! Attributed graphs with reciprocal/directed edge semantics.
//!
//! Nodes are dense integers `0..N-1` so that per-node arrays back all hot
//! paths. Edges are directed pairs; an edge `(u, v)` is *reciprocal* when
//! `(v, u)` is also present. A graph where every edge is reciprocal plays
//! the role of an undirected network.

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Which notion of degree to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeMode {
    /// Number of reciprocal partners (the undirected degree).
    UndirectedReciprocal,
    Out,
    In,
}

/// One categorical attribute over all nodes, interned to small integers.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeColumn {
    name: String,
    categories: Vec<String>,
    values: Vec<u16>,
}

impl AttributeColumn {
    pub fn new(name: impl Into<String>, categories: Vec<String>, values: Vec<u16>) -> Self {
        let column = Self {
            name: name.into(),
            categories,
            values,
        };
        debug_assert!(column
            .values
            .iter()
            .all(|&v| (v as usize) < column.categories.len()));
        column
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn category_index(&self, category: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == category)
    }

    /// Interned category of `node`.
    pub fn value(&self, node: NodeId) -> u16 {
        self.values[node]
    }

    pub fn value_name(&self, node: NodeId) -> &str {
        &self.categories[self.values[node] as usize]
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }
}

/// Immutable attributed graph. Construct through [`GraphBuilder`].
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    /// Out-neighbors per node, sorted by destination.
    out: Vec<Vec<NodeId>>,
    /// Edge weights, parallel to `out`.
    weights: Vec<Vec<f64>>,
    /// Per out-edge: does the reverse edge exist?
    reciprocal: Vec<Vec<bool>>,
    in_degrees: Vec<usize>,
    reciprocal_degrees: Vec<usize>,
    attributes: Vec<AttributeColumn>,
    edge_count: usize,
    all_reciprocal: bool,
    max_out_degree: usize,
}

impl AttributedGraph {
    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    /// Number of directed edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of unordered reciprocal pairs.
    pub fn reciprocal_pair_count(&self) -> usize {
        self.reciprocal_degrees.iter().sum::<usize>() / 2
    }

    pub fn all_reciprocal(&self) -> bool {
        self.all_reciprocal
    }

    pub fn max_out_degree(&self) -> usize {
        self.max_out_degree
    }

    pub fn degree(&self, node: NodeId, mode: DegreeMode) -> Result<usize> {
        if node >= self.node_count() {
            return Err(Error::UnknownNode(node));
        }
        Ok(match mode {
            DegreeMode::UndirectedReciprocal => self.reciprocal_degrees[node],
            DegreeMode::Out => self.out[node].len(),
            DegreeMode::In => self.in_degrees[node],
        })
    }

    pub fn out_neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.out[node]
    }

    pub fn out_weights(&self, node: NodeId) -> &[f64] {
        &self.weights[node]
    }

    /// Reciprocity flag per out-edge of `node`, parallel to `out_neighbors`.
    pub fn reciprocal_flags(&self, node: NodeId) -> &[bool] {
        &self.reciprocal[node]
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.out[src].binary_search(&dst).is_ok()
    }

    pub fn weight(&self, src: NodeId, dst: NodeId) -> Option<f64> {
        self.out[src]
            .binary_search(&dst)
            .ok()
            .map(|i| self.weights[src][i])
    }

    /// All directed edges as `(src, dst, weight)`, ordered by `(src, dst)`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.out.iter().enumerate().flat_map(move |(src, nbrs)| {
            nbrs.iter()
                .enumerate()
                .map(move |(i, &dst)| (src, dst, self.weights[src][i]))
        })
    }

    pub fn attributes(&self) -> &[AttributeColumn] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Result<&AttributeColumn> {
        self.attributes
            .iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Subgraph keeping exactly the reciprocal edges; nodes and attributes
    /// are preserved unchanged.
    pub fn reciprocal_subgraph(&self) -> AttributedGraph {
        let mut builder = GraphBuilder::new(self.node_count());
        for (src, dst, w) in self.edges() {
            if self.has_edge(dst, src) {
                builder.add_edge(src, dst, w);
            }
        }
        for column in &self.attributes {
            builder.add_attribute_column(column.clone());
        }
        builder
            .build()
            .expect("reciprocal subgraph of a valid graph is valid")
    }

    /// Node set of the largest connected component of the reciprocal
    /// subgraph. Ties go to the component containing the smallest node id.
    pub fn giant_reciprocal_component(&self) -> Vec<NodeId> {
        let n = self.node_count();
        let mut component = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            if component[start] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0usize;
            component[start] = id;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                size += 1;
                for (i, &v) in self.out[u].iter().enumerate() {
                    if self.reciprocal[u][i] && component[v] == usize::MAX {
                        component[v] = id;
                        queue.push_back(v);
                    }
                }
            }
            sizes.push(size);
        }
        pick_giant(&component, &sizes)
    }

    /// Node set of the largest strongly connected component under directed
    /// reachability. Same tie-break as `giant_reciprocal_component`.
    pub fn giant_strongly_connected_component(&self) -> Vec<NodeId> {
        let (component, sizes) = self.tarjan_scc();
        pick_giant(&component, &sizes)
    }

    /// Iterative Tarjan; returns per-node component id and component sizes.
    fn tarjan_scc(&self) -> (Vec<usize>, Vec<usize>) {
        const UNVISITED: usize = usize::MAX;
        let n = self.node_count();
        let mut index = vec![UNVISITED; n];
        let mut lowlink = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut component = vec![UNVISITED; n];
        let mut sizes = Vec::new();
        let mut stack: Vec<NodeId> = Vec::new();
        let mut next_index = 0usize;
        // call stack of (node, position in its adjacency list)
        let mut call: Vec<(NodeId, usize)> = Vec::new();

        for root in 0..n {
            if index[root] != UNVISITED {
                continue;
            }
            call.push((root, 0));
            index[root] = next_index;
            lowlink[root] = next_index;
            next_index += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (v, ref mut pos)) = call.last_mut() {
                if *pos < self.out[v].len() {
                    let w = self.out[v][*pos];
                    *pos += 1;
                    if index[w] == UNVISITED {
                        index[w] = next_index;
                        lowlink[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(index[w]);
                    }
                } else {
                    call.pop();
                    if let Some(&(parent, _)) = call.last() {
                        lowlink[parent] = lowlink[parent].min(lowlink[v]);
                    }
                    if lowlink[v] == index[v] {
                        let id = sizes.len();
                        let mut size = 0usize;
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            on_stack[w] = false;
                            component[w] = id;
                            size += 1;
                            if w == v {
                                break;
                            }
                        }
                        sizes.push(size);
                    }
                }
            }
        }
        (component, sizes)
    }

    /// Induced subgraph on `nodes` (must be sorted and distinct). Node ids
    /// are remapped densely in the given order; attributes follow.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> AttributedGraph {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let mut remap = vec![usize::MAX; self.node_count()];
        for (new, &old) in nodes.iter().enumerate() {
            remap[old] = new;
        }
        let mut builder = GraphBuilder::new(nodes.len());
        for &old in nodes {
            for (i, &dst) in self.out[old].iter().enumerate() {
                if remap[dst] != usize::MAX {
                    builder.add_edge(remap[old], remap[dst], self.weights[old][i]);
                }
            }
        }
        for column in &self.attributes {
            let values = nodes.iter().map(|&old| column.value(old)).collect();
            builder.add_attribute_column(AttributeColumn::new(
                column.name(),
                column.categories().to_vec(),
                values,
            ));
        }
        builder
            .build()
            .expect("induced subgraph of a valid graph is valid")
    }
}

fn pick_giant(component: &[usize], sizes: &[usize]) -> Vec<NodeId> {
    if sizes.is_empty() {
        return Vec::new();
    }
    // Scanning nodes in id order and switching only on a strictly larger
    // size selects the maximal component with the smallest minimum node id.
    let mut best = usize::MAX;
    for &c in component.iter() {
        if best == usize::MAX || sizes[c] > sizes[best] {
            best = c;
        }
    }
    component
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == best)
        .map(|(node, _)| node)
        .collect()
}

/// A binary, total partition of the nodes: group A (`attribute == value`)
/// versus the rest.
#[derive(Clone, Debug)]
pub struct NodePartition {
    attribute: String,
    value: String,
    members: Vec<bool>,
    member_count: usize,
}

impl NodePartition {
    pub fn new(graph: &AttributedGraph, attribute: &str, value: &str) -> Result<Self> {
        let column = graph.attribute(attribute)?;
        let idx = column
            .category_index(value)
            .ok_or_else(|| Error::UnknownCategory {
                attribute: attribute.to_string(),
                value: value.to_string(),
            })? as u16;
        let members: Vec<bool> = column.values().iter().map(|&v| v == idx).collect();
        let member_count = members.iter().filter(|&&m| m).count();
        Ok(Self {
            attribute: attribute.to_string(),
            value: value.to_string(),
            members,
            member_count,
        })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn value(&self) -> &str {
        &self.value
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.members[node]
    }

    pub fn member_count(&self) -> usize {
        self.member_count
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The same partition with group and complement swapped.
    pub fn complement(&self) -> NodePartition {
        NodePartition {
            attribute: self.attribute.clone(),
            value: format!("not:{}", self.value),
            members: self.members.iter().map(|&m| !m).collect(),
            member_count: self.members.len() - self.member_count,
        }
    }
}

/// Fraction of nodes in the partition's group.
pub fn true_proportion(graph: &AttributedGraph, partition: &NodePartition) -> Result<f64> {
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if partition.len() != graph.node_count() {
        return Err(Error::PartitionMismatch {
            partition_len: partition.len(),
            graph_len: graph.node_count(),
        });
    }
    Ok(partition.member_count() as f64 / graph.node_count() as f64)
}

/// Accumulates edges and attributes, then validates the graph invariants.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    node_count: usize,
    edges: Vec<(NodeId, NodeId, f64)>,
    attributes: Vec<AttributeColumn>,
}

impl GraphBuilder {
    pub fn new(node_count: usize) -> Self {
        Self {
            node_count,
            edges: Vec::new(),
            attributes: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, src: NodeId, dst: NodeId, weight: f64) {
        self.edges.push((src, dst, weight));
    }

    /// Adds `(u, v)` and `(v, u)` with the same weight.
    pub fn add_reciprocal_edge(&mut self, u: NodeId, v: NodeId, weight: f64) {
        self.edges.push((u, v, weight));
        self.edges.push((v, u, weight));
    }

    pub fn add_attribute_column(&mut self, column: AttributeColumn) {
        self.attributes.push(column);
    }

    /// Intern string values for one attribute; `values[i]` belongs to node `i`.
    pub fn add_attribute<S: AsRef<str>>(&mut self, name: &str, values: &[S]) {
        let mut categories: Vec<String> = Vec::new();
        let interned = values
            .iter()
            .map(|v| {
                let v = v.as_ref();
                match categories.iter().position(|c| c == v) {
                    Some(i) => i as u16,
                    None => {
                        categories.push(v.to_string());
                        (categories.len() - 1) as u16
                    }
                }
            })
            .collect();
        self.attributes
            .push(AttributeColumn::new(name, categories, interned));
    }

    pub fn build(self) -> Result<AttributedGraph> {
        let n = self.node_count;
        for column in &self.attributes {
            if column.values().len() != n {
                return Err(Error::MissingAttributeValue {
                    node: column.values().len().min(n),
                    attribute: column.name().to_string(),
                });
            }
        }

        let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut weights: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut in_degrees = vec![0usize; n];

        let mut edges = self.edges;
        edges.sort_unstable_by_key(|e| (e.0, e.1));
        let mut edge_count = 0usize;
        for window in 0..edges.len() {
            let (src, dst, w) = edges[window];
            if src >= n {
                return Err(Error::UnknownNode(src));
            }
            if dst >= n {
                return Err(Error::UnknownNode(dst));
            }
            if src == dst {
                return Err(Error::SelfLoop(src));
            }
            if window > 0 && (edges[window - 1].0, edges[window - 1].1) == (src, dst) {
                return Err(Error::DuplicateEdge(src, dst));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::NonPositiveWeight {
                    src,
                    dst,
                    weight: w,
                });
            }
            out[src].push(dst);
            weights[src].push(w);
            in_degrees[dst] += 1;
            edge_count += 1;
        }

        let mut reciprocal: Vec<Vec<bool>> = Vec::with_capacity(n);
        let mut reciprocal_degrees = vec![0usize; n];
        let mut all_reciprocal = true;
        for u in 0..n {
            let flags: Vec<bool> = out[u]
                .iter()
                .map(|&v| out[v].binary_search(&u).is_ok())
                .collect();
            let recip = flags.iter().filter(|&&f| f).count();
            reciprocal_degrees[u] = recip;
            if recip != flags.len() {
                all_reciprocal = false;
            }
            reciprocal.push(flags);
        }
        let max_out_degree = out.iter().map(Vec::len).max().unwrap_or(0);

        Ok(AttributedGraph {
            out,
            weights,
            reciprocal,
            in_degrees,
            reciprocal_degrees,
            attributes: self.attributes,
            edge_count,
            all_reciprocal,
            max_out_degree,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_abc() -> AttributedGraph {
        // a=0, b=1, c=2, reciprocal path a-b-c
        let mut b = GraphBuilder::new(3);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_reciprocal_edge(1, 2, 1.0);
        b.build().unwrap()
    }

    fn directed_cycle(n: usize) -> AttributedGraph {
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            b.add_edge(i, (i + 1) % n, 1.0);
        }
        b.build().unwrap()
    }

    #[test]
    fn degree_modes() {
        let g = path_abc();
        assert_eq!(g.degree(1, DegreeMode::UndirectedReciprocal).unwrap(), 2);
        let c = directed_cycle(3);
        assert_eq!(c.degree(0, DegreeMode::Out).unwrap(), 1);
        assert_eq!(c.degree(0, DegreeMode::In).unwrap(), 1);
        assert_eq!(c.degree(0, DegreeMode::UndirectedReciprocal).unwrap(), 0);
    }

    #[test]
    fn degree_of_isolated_node_is_zero() {
        let g = GraphBuilder::new(1).build().unwrap();
        assert_eq!(g.degree(0, DegreeMode::UndirectedReciprocal).unwrap(), 0);
        assert_eq!(g.degree(0, DegreeMode::Out).unwrap(), 0);
    }

    #[test]
    fn degree_unknown_node_errors() {
        let g = path_abc();
        assert!(matches!(
            g.degree(9, DegreeMode::Out),
            Err(Error::UnknownNode(9))
        ));
    }

    #[test]
    fn reciprocal_subgraph_keeps_exactly_paired_edges() {
        let mut b = GraphBuilder::new(3);
        b.add_edge(0, 1, 1.0);
        b.add_edge(1, 0, 1.0);
        b.add_edge(0, 2, 1.0);
        let g = b.build().unwrap();
        let r = g.reciprocal_subgraph();
        assert_eq!(r.edge_count(), 2);
        assert!(r.has_edge(0, 1) && r.has_edge(1, 0));
        assert!(!r.has_edge(0, 2));
        assert_eq!(r.node_count(), 3);
    }

    #[test]
    fn reciprocal_subgraph_identity_on_reciprocal_graph() {
        let g = path_abc();
        assert_eq!(g.reciprocal_subgraph(), g);
    }

    #[test]
    fn reciprocal_subgraph_of_oneway_graph_is_edgeless() {
        let mut b = GraphBuilder::new(3);
        b.add_edge(0, 1, 1.0);
        b.add_edge(1, 2, 1.0);
        let g = b.build().unwrap();
        let r = g.reciprocal_subgraph();
        assert_eq!(r.edge_count(), 0);
        assert_eq!(r.node_count(), 3);
    }

    #[test]
    fn giant_reciprocal_component_picks_largest() {
        let mut b = GraphBuilder::new(5);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_reciprocal_edge(1, 2, 1.0);
        b.add_reciprocal_edge(3, 4, 1.0);
        let g = b.build().unwrap();
        assert_eq!(g.giant_reciprocal_component(), vec![0, 1, 2]);
    }

    #[test]
    fn giant_component_tie_breaks_on_smallest_id() {
        let mut b = GraphBuilder::new(4);
        b.add_reciprocal_edge(2, 3, 1.0);
        b.add_reciprocal_edge(0, 1, 1.0);
        let g = b.build().unwrap();
        assert_eq!(g.giant_reciprocal_component(), vec![0, 1]);
    }

    #[test]
    fn giant_component_of_connected_graph_is_everything() {
        let g = path_abc();
        assert_eq!(g.giant_reciprocal_component(), vec![0, 1, 2]);
    }

    #[test]
    fn giant_component_of_empty_graph_is_empty() {
        let g = GraphBuilder::new(0).build().unwrap();
        assert!(g.giant_reciprocal_component().is_empty());
        assert!(g.giant_strongly_connected_component().is_empty());
    }

    #[test]
    fn gscc_of_cycle_with_dangling_edge() {
        let mut b = GraphBuilder::new(4);
        b.add_edge(0, 1, 1.0);
        b.add_edge(1, 2, 1.0);
        b.add_edge(2, 0, 1.0);
        b.add_edge(2, 3, 1.0);
        let g = b.build().unwrap();
        assert_eq!(g.giant_strongly_connected_component(), vec![0, 1, 2]);
    }

    #[test]
    fn gscc_of_undirected_connected_graph_is_everything() {
        let g = path_abc();
        assert_eq!(g.giant_strongly_connected_component(), vec![0, 1, 2]);
    }

    #[test]
    fn gscc_of_dag_is_singleton_with_smallest_id() {
        let mut b = GraphBuilder::new(3);
        b.add_edge(0, 1, 1.0);
        b.add_edge(1, 2, 1.0);
        b.add_edge(0, 2, 1.0);
        let g = b.build().unwrap();
        assert_eq!(g.giant_strongly_connected_component(), vec![0]);
    }

    #[test]
    fn true_proportion_basics() {
        let mut b = GraphBuilder::new(4);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_reciprocal_edge(2, 3, 1.0);
        b.add_attribute("grp", &["a", "b", "b", "b"]);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "grp", "a").unwrap();
        assert_eq!(true_proportion(&g, &p).unwrap(), 0.25);
        assert_eq!(true_proportion(&g, &p.complement()).unwrap(), 0.75);

        let mut b = GraphBuilder::new(2);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_attribute("grp", &["a", "a"]);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "grp", "a").unwrap();
        assert_eq!(true_proportion(&g, &p).unwrap(), 1.0);
        assert_eq!(true_proportion(&g, &p.complement()).unwrap(), 0.0);
    }

    #[test]
    fn true_proportion_empty_graph_errors() {
        let g = GraphBuilder::new(0).build().unwrap();
        let p = NodePartition {
            attribute: "x".into(),
            value: "y".into(),
            members: vec![],
            member_count: 0,
        };
        assert!(matches!(true_proportion(&g, &p), Err(Error::EmptyGraph)));
    }

    #[test]
    fn builder_rejects_invalid_edges() {
        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 0, 1.0);
        assert!(matches!(b.build(), Err(Error::SelfLoop(0))));

        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 1, 1.0);
        b.add_edge(0, 1, 2.0);
        assert!(matches!(b.build(), Err(Error::DuplicateEdge(0, 1))));

        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 1, 0.0);
        assert!(matches!(b.build(), Err(Error::NonPositiveWeight { .. })));

        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 5, 1.0);
        assert!(matches!(b.build(), Err(Error::UnknownNode(5))));
    }

    #[test]
    fn sum_of_out_degrees_equals_edge_count() {
        let g = directed_cycle(5);
        let total: usize = (0..5).map(|i| g.degree(i, DegreeMode::Out).unwrap()).sum();
        assert_eq!(total, g.edge_count());
    }

    #[test]
    fn induced_subgraph_remaps_and_keeps_attributes() {
        let mut b = GraphBuilder::new(4);
        b.add_reciprocal_edge(1, 2, 2.5);
        b.add_reciprocal_edge(2, 3, 1.0);
        b.add_attribute("grp", &["a", "b", "a", "b"]);
        let g = b.build().unwrap();
        let s = g.induced_subgraph(&[1, 2]);
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.edge_count(), 2);
        assert_eq!(s.weight(0, 1), Some(2.5));
        assert_eq!(s.attribute("grp").unwrap().value_name(0), "b");
        assert_eq!(s.attribute("grp").unwrap().value_name(1), "a");
    }
}
