//! Population-proportion estimators and the Markov-chain machinery behind
//! them: inverse-degree weighting, stationary distributions of the
//! recruitment walk, and homophily indices.

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, NodeId, NodePartition};
use crate::numeric::CompensatedSum;
use crate::sampler::{RecruitmentMode, RecruitmentSample};

/// Running inverse-weighted share: `sum over group / sum over all`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ShareAccumulator {
    group: CompensatedSum,
    total: CompensatedSum,
    count: usize,
}

impl ShareAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, in_group: bool, inverse_weight: f64) {
        if in_group {
            self.group.add(inverse_weight);
        }
        self.total.add(inverse_weight);
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn estimate(&self) -> f64 {
        self.group.value() / self.total.value()
    }
}

/// Inverse-degree-weighted proportion of the partition's group in the
/// sample. Multiset semantics: a node sampled twice contributes twice.
pub fn rds2_estimate(sample: &RecruitmentSample, partition: &NodePartition) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut acc = ShareAccumulator::new();
    for p in &sample.participants {
        acc.push(partition.contains(p.node), 1.0 / p.reported_degree as f64);
    }
    Ok(acc.estimate())
}

/// Row-stochastic transition operator of the recruitment walk, kept in
/// implicit form over the graph's adjacency.
pub struct TransitionMatrix<'g> {
    graph: &'g AttributedGraph,
    mode: RecruitmentMode,
    /// Row normalizers: out-degree or total outgoing weight.
    row_totals: Vec<f64>,
}

impl<'g> TransitionMatrix<'g> {
    pub fn new(graph: &'g AttributedGraph, mode: RecruitmentMode) -> Result<Self> {
        let mut row_totals = Vec::with_capacity(graph.node_count());
        for node in 0..graph.node_count() {
            let total = match mode {
                RecruitmentMode::Uniform => graph.out_neighbors(node).len() as f64,
                RecruitmentMode::WeightProportional => {
                    graph.out_weights(node).iter().copied().collect::<CompensatedSum>().value()
                }
            };
            if total <= 0.0 {
                return Err(Error::DanglingNode(node));
            }
            row_totals.push(total);
        }
        Ok(Self {
            graph,
            mode,
            row_totals,
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Nonzero entries of row `node` as `(column, probability)`.
    pub fn row(&self, node: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        let total = self.row_totals[node];
        let weights = self.graph.out_weights(node);
        self.graph
            .out_neighbors(node)
            .iter()
            .enumerate()
            .map(move |(i, &dst)| {
                let p = match self.mode {
                    RecruitmentMode::Uniform => 1.0 / total,
                    RecruitmentMode::WeightProportional => weights[i] / total,
                };
                (dst, p)
            })
    }

    /// `out = transpose(P) * x`, the one-step push of probability mass.
    pub fn apply_transpose(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (src, &x_src) in x.iter().enumerate() {
            let mass = x_src / self.row_totals[src];
            match self.mode {
                RecruitmentMode::Uniform => {
                    for &dst in self.graph.out_neighbors(src) {
                        out[dst] += mass;
                    }
                }
                RecruitmentMode::WeightProportional => {
                    let weights = self.graph.out_weights(src);
                    for (i, &dst) in self.graph.out_neighbors(src).iter().enumerate() {
                        out[dst] += mass * weights[i];
                    }
                }
            }
        }
    }
}

/// Equilibrium of the recruitment walk with a convergence diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryVector {
    probabilities: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl StationaryVector {
    /// Wrap an externally known equilibrium (e.g. degree / total degree).
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        Self {
            probabilities,
            residual: 0.0,
            iterations: 0,
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn prob(&self, node: NodeId) -> Option<f64> {
        self.probabilities.get(node).copied()
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Power iteration on the transposed transition operator, started from the
/// uniform vector. Each step averages the current iterate with its image
/// (a lazy walk), which kills the oscillation of periodic chains without
/// moving the fixed point. Stops when the successive-iterate L1 distance
/// drops to `tolerance`.
pub fn stationary_distribution(
    graph: &AttributedGraph,
    mode: RecruitmentMode,
    tolerance: f64,
    max_iters: usize,
) -> Result<StationaryVector> {
    let matrix = TransitionMatrix::new(graph, mode)?;
    let n = matrix.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut image = vec![0.0; n];
    let mut last_distance = f64::INFINITY;
    for iteration in 1..=max_iters {
        matrix.apply_transpose(&x, &mut image);
        let mut distance = 0.0;
        let mut sum = 0.0;
        for j in 0..n {
            let lazy = 0.5 * (x[j] + image[j]);
            distance += (lazy - x[j]).abs();
            x[j] = lazy;
            sum += lazy;
        }
        // Guard against float drift in the total mass.
        if sum != 1.0 {
            for v in x.iter_mut() {
                *v /= sum;
            }
        }
        last_distance = distance;
        if distance <= tolerance {
            matrix.apply_transpose(&x, &mut image);
            let residual = x
                .iter()
                .zip(image.iter())
                .map(|(a, b)| (a - b).abs())
                .sum();
            return Ok(StationaryVector {
                probabilities: x,
                residual,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual: last_distance,
    })
}

/// Proportion estimate weighted by inverse stationary mass instead of
/// inverse degree. Multiset semantics over the sample.
pub fn eig_estimate(
    sample: &RecruitmentSample,
    stationary: &StationaryVector,
    partition: &NodePartition,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut acc = ShareAccumulator::new();
    for p in &sample.participants {
        let mass = stationary
            .prob(p.node)
            .filter(|&v| v > 0.0)
            .ok_or(Error::ZeroStationaryMass(p.node))?;
        acc.push(partition.contains(p.node), 1.0 / mass);
    }
    Ok(acc.estimate())
}

/// Homophily of one group and of its complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupHomophily {
    pub group: f64,
    pub complement: f64,
}

/// Share-to-index step: the group forms a fraction `share` of its ties
/// in-group while random mixing would give `proportion`.
pub(crate) fn homophily_from_share(share: f64, proportion: f64) -> f64 {
    (share - proportion) / (1.0 - proportion)
}

/// Homophily index for the partition's group and its complement.
///
/// For each side, `S` is the fraction of the side's out-edge endpoints
/// landing back in the side, and `H = (S - P) / (1 - P)` with `P` the
/// side's node proportion. Directed graphs use out-edges; all-reciprocal
/// graphs reduce to the undirected reading.
pub fn homophily_index(
    graph: &AttributedGraph,
    partition: &NodePartition,
) -> Result<GroupHomophily> {
    let group = side_homophily(graph, partition, true)?;
    let complement = side_homophily(graph, partition, false)?;
    Ok(GroupHomophily { group, complement })
}

fn side_homophily(graph: &AttributedGraph, partition: &NodePartition, side: bool) -> Result<f64> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let label = if side {
        partition.value().to_string()
    } else {
        format!("not:{}", partition.value())
    };
    let members = if side {
        partition.member_count()
    } else {
        n - partition.member_count()
    };
    if members == 0 {
        return Err(Error::HomophilyUndefined {
            group: label,
            reason: "group has no members".into(),
        });
    }
    if members == n {
        return Err(Error::HomophilyUndefined {
            group: label,
            reason: "group covers the whole population".into(),
        });
    }
    let mut endpoints = 0usize;
    let mut in_group = 0usize;
    for node in 0..n {
        if partition.contains(node) != side {
            continue;
        }
        for &peer in graph.out_neighbors(node) {
            endpoints += 1;
            if partition.contains(peer) == side {
                in_group += 1;
            }
        }
    }
    if endpoints == 0 {
        return Err(Error::HomophilyUndefined {
            group: label,
            reason: "group has no edges".into(),
        });
    }
    let share = in_group as f64 / endpoints as f64;
    let proportion = members as f64 / n as f64;
    Ok(homophily_from_share(share, proportion))
}

/// Homophily per category of `attribute`; `None` marks categories for
/// which the index is undefined (empty, edgeless, or the whole graph).
pub fn attribute_homophily(graph: &AttributedGraph, attribute: &str) -> Result<Vec<Option<f64>>> {
    let column = graph.attribute(attribute)?;
    let k = column.categories().len();
    let n = graph.node_count();
    let mut members = vec![0usize; k];
    let mut endpoints = vec![0usize; k];
    let mut in_group = vec![0usize; k];
    for node in 0..n {
        let c = column.value(node) as usize;
        members[c] += 1;
        for &peer in graph.out_neighbors(node) {
            endpoints[c] += 1;
            if column.value(peer) as usize == c {
                in_group[c] += 1;
            }
        }
    }
    Ok((0..k)
        .map(|c| {
            if members[c] == 0 || members[c] == n || endpoints[c] == 0 {
                None
            } else {
                let share = in_group[c] as f64 / endpoints[c] as f64;
                let proportion = members[c] as f64 / n as f64;
                Some(homophily_from_share(share, proportion))
            }
        })
        .collect())
}
