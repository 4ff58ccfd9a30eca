//! Simulation of one chain-referral recruitment process.
//!
//! A chain starts from a set of seeds; every participant receives a fixed
//! number of coupons and hands them to peers drawn from their personal
//! network. Recruitment follows out-edges, which on an all-reciprocal
//! graph coincide with the undirected neighborhood. All deviations from
//! the idealized process (rejection, ignored ties, replacement rules,
//! weighted peer choice) are switches in [`SamplingConfig`].

use std::collections::VecDeque;

use rand::{Rng, RngExt};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, NodeId, NodePartition};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedSelection {
    Uniform,
    /// Probability proportional to (out-)degree, drawn without replacement.
    DegreeProportional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    With,
    Without,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecruitmentMode {
    /// Peers drawn uniformly from the eligible neighborhood.
    Uniform,
    /// Peers drawn with probability proportional to edge weight.
    WeightProportional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainDeathPolicy {
    /// Abort the simulation with an error.
    Fail,
    /// Draw a fresh seed and keep recruiting, counting the event.
    Reseed,
}

/// A probability that depends on which side of the partition a node is on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupProbability {
    /// Applied to nodes in the partition's group.
    pub group: f64,
    /// Applied to everyone else.
    pub complement: f64,
}

impl GroupProbability {
    pub fn zero() -> Self {
        Self {
            group: 0.0,
            complement: 0.0,
        }
    }

    pub fn uniform(p: f64) -> Self {
        Self {
            group: p,
            complement: p,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.group == 0.0 && self.complement == 0.0
    }

    fn for_node(&self, partition: &NodePartition, node: NodeId) -> f64 {
        if partition.contains(node) {
            self.group
        } else {
            self.complement
        }
    }
}

/// Every knob of one recruitment process.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    pub seed_count: usize,
    pub seed_selection: SeedSelection,
    pub coupons_per_participant: usize,
    pub replacement: Replacement,
    pub target_sample_size: usize,
    /// Sample sizes at which experiments snapshot estimates; ascending.
    pub checkpoint_sizes: Vec<usize>,
    /// Probability that a recruiter ignores an edge, by peer group.
    pub ignore_prob: GroupProbability,
    /// Probability that an invited peer rejects, by peer group.
    pub reject_prob: GroupProbability,
    pub recruitment_mode: RecruitmentMode,
    pub on_chain_death: ChainDeathPolicy,
    /// Master seed; replication streams are derived from it.
    pub rng_seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            seed_count: 1,
            seed_selection: SeedSelection::Uniform,
            coupons_per_participant: 1,
            replacement: Replacement::With,
            target_sample_size: 500,
            checkpoint_sizes: vec![500],
            ignore_prob: GroupProbability::zero(),
            reject_prob: GroupProbability::zero(),
            recruitment_mode: RecruitmentMode::Uniform,
            on_chain_death: ChainDeathPolicy::Reseed,
            rng_seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self, graph: &AttributedGraph) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSamplingConfig(msg));
        if self.seed_count == 0 {
            return fail("seed_count must be positive".into());
        }
        if self.seed_count > graph.node_count() {
            return Err(Error::NotEnoughSeeds {
                requested: self.seed_count,
                available: graph.node_count(),
            });
        }
        if self.coupons_per_participant == 0 {
            return fail("coupons_per_participant must be positive".into());
        }
        if self.target_sample_size == 0 {
            return fail("target_sample_size must be positive".into());
        }
        for (name, p) in [
            ("ignore_prob.group", self.ignore_prob.group),
            ("ignore_prob.complement", self.ignore_prob.complement),
            ("reject_prob.group", self.reject_prob.group),
            ("reject_prob.complement", self.reject_prob.complement),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} = {p} outside [0, 1]"));
            }
        }
        if !self.checkpoint_sizes.windows(2).all(|w| w[0] < w[1]) {
            return fail("checkpoint_sizes must be strictly ascending".into());
        }
        if self
            .checkpoint_sizes
            .last()
            .is_some_and(|&last| last > self.target_sample_size)
        {
            return fail("checkpoints must not exceed target_sample_size".into());
        }
        if self.checkpoint_sizes.first().is_some_and(|&c| c == 0) {
            return fail("checkpoints must be positive".into());
        }
        Ok(())
    }
}

/// One row of the recruitment record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Participant {
    pub node: NodeId,
    /// Recruiting node, or `None` for a seed.
    pub recruiter: Option<NodeId>,
    pub wave: u32,
    /// Degree after ignored edges are removed, clamped below at 1.
    pub reported_degree: usize,
}

/// Ordered record of one simulated recruitment chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecruitmentSample {
    pub participants: Vec<Participant>,
    /// Times the coupon queue ran dry.
    pub chain_death_count: usize,
    /// Fresh seeds drawn to recover from chain deaths.
    pub reseed_count: usize,
}

impl RecruitmentSample {
    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }
}

/// Select `count` distinct seed nodes.
pub fn select_seeds<R: Rng>(
    graph: &AttributedGraph,
    count: usize,
    mode: SeedSelection,
    rng: &mut R,
) -> Result<Vec<NodeId>> {
    let n = graph.node_count();
    if count > n {
        return Err(Error::NotEnoughSeeds {
            requested: count,
            available: n,
        });
    }
    if count == n {
        return Ok((0..n).collect());
    }
    match mode {
        SeedSelection::Uniform => {
            // Partial Fisher-Yates: the first `count` entries are a uniform
            // ordered sample without replacement.
            let mut pool: Vec<NodeId> = (0..n).collect();
            for i in 0..count {
                let j = rng.random_range(i..n);
                pool.swap(i, j);
            }
            pool.truncate(count);
            Ok(pool)
        }
        SeedSelection::DegreeProportional => {
            let mut chosen = vec![false; n];
            let mut seeds = Vec::with_capacity(count);
            for _ in 0..count {
                let node = draw_degree_proportional(graph, &chosen, rng)?;
                chosen[node] = true;
                seeds.push(node);
            }
            Ok(seeds)
        }
    }
}

/// One degree-proportional draw among nodes not yet excluded.
fn draw_degree_proportional<R: Rng>(
    graph: &AttributedGraph,
    excluded: &[bool],
    rng: &mut R,
) -> Result<NodeId> {
    let n = graph.node_count();
    let max_degree = graph.max_out_degree();
    if max_degree > 0 {
        // Rejection sampling; expected iterations ~ max/mean degree.
        let cap = 64 * (n + 16);
        for _ in 0..cap {
            let node = rng.random_range(0..n);
            if excluded[node] {
                continue;
            }
            let degree = graph.out_neighbors(node).len();
            if degree > 0 && rng.random_range(0..max_degree) < degree {
                return Ok(node);
            }
        }
    }
    // Exact fallback for degenerate degree profiles.
    let total: usize = (0..n)
        .filter(|&i| !excluded[i])
        .map(|i| graph.out_neighbors(i).len())
        .sum();
    if total == 0 {
        return Err(Error::NoEligibleSeed);
    }
    let mut target = rng.random_range(0..total);
    for (node, &skip) in excluded.iter().enumerate() {
        if skip {
            continue;
        }
        let degree = graph.out_neighbors(node).len();
        if target < degree {
            return Ok(node);
        }
        target -= degree;
    }
    unreachable!("degree mass exhausted before draw")
}

/// Decide independently for each of `node`'s out-edges whether the
/// recruiter ignores it. The flag vector is parallel to the adjacency list
/// and is drawn once per participation.
pub fn draw_ignore_set<R: Rng>(
    graph: &AttributedGraph,
    node: NodeId,
    partition: &NodePartition,
    ignore_prob: &GroupProbability,
    rng: &mut R,
) -> Vec<bool> {
    graph
        .out_neighbors(node)
        .iter()
        .map(|&peer| {
            let p = ignore_prob.for_node(partition, peer);
            p > 0.0 && (p >= 1.0 || rng.random_bool(p))
        })
        .collect()
}

/// Network size the participant reports: degree minus ignored edges,
/// clamped below at 1 so inverse-degree weights stay finite.
pub fn reported_degree(graph: &AttributedGraph, node: NodeId, ignore_set: &[bool]) -> usize {
    let degree = graph.out_neighbors(node).len();
    let ignored = ignore_set.iter().filter(|&&f| f).count();
    degree.saturating_sub(ignored).max(1)
}

/// Eligible neighborhood of an active recruiter after ignores.
#[derive(Clone, Debug)]
enum Eligible {
    /// No edge ignored: read adjacency straight from the graph.
    Full,
    Filtered { peers: Vec<NodeId>, weights: Vec<f64> },
}

#[derive(Clone, Debug)]
struct PendingCoupons {
    node: NodeId,
    wave: u32,
    remaining: usize,
    eligible: Eligible,
}

struct ChainRun<'a, R: Rng> {
    graph: &'a AttributedGraph,
    partition: &'a NodePartition,
    config: &'a SamplingConfig,
    rng: &'a mut R,
    participants: Vec<Participant>,
    /// Only maintained under sampling without replacement.
    sampled: Vec<bool>,
    queue: VecDeque<PendingCoupons>,
    chain_deaths: usize,
    reseeds: usize,
}

impl<'a, R: Rng> ChainRun<'a, R> {
    fn new(
        graph: &'a AttributedGraph,
        partition: &'a NodePartition,
        config: &'a SamplingConfig,
        rng: &'a mut R,
    ) -> Self {
        let track_sampled = config.replacement == Replacement::Without;
        Self {
            graph,
            partition,
            config,
            rng,
            participants: Vec::with_capacity(config.target_sample_size),
            sampled: if track_sampled {
                vec![false; graph.node_count()]
            } else {
                Vec::new()
            },
            queue: VecDeque::new(),
            chain_deaths: 0,
            reseeds: 0,
        }
    }

    fn done(&self) -> bool {
        self.participants.len() >= self.config.target_sample_size
    }

    fn admit(&mut self, node: NodeId, recruiter: Option<NodeId>, wave: u32) {
        let (eligible, ignored) = if self.config.ignore_prob.is_zero() {
            (Eligible::Full, 0)
        } else {
            let flags = draw_ignore_set(
                self.graph,
                node,
                self.partition,
                &self.config.ignore_prob,
                self.rng,
            );
            let ignored = flags.iter().filter(|&&f| f).count();
            let mut peers = Vec::with_capacity(self.graph.out_neighbors(node).len() - ignored);
            let mut weights = Vec::new();
            let need_weights = self.config.recruitment_mode == RecruitmentMode::WeightProportional;
            if need_weights {
                weights.reserve(peers.capacity());
            }
            for (i, &peer) in self.graph.out_neighbors(node).iter().enumerate() {
                if !flags[i] {
                    peers.push(peer);
                    if need_weights {
                        weights.push(self.graph.out_weights(node)[i]);
                    }
                }
            }
            (Eligible::Filtered { peers, weights }, ignored)
        };
        let degree = self.graph.out_neighbors(node).len();
        self.participants.push(Participant {
            node,
            recruiter,
            wave,
            reported_degree: degree.saturating_sub(ignored).max(1),
        });
        if !self.sampled.is_empty() {
            self.sampled[node] = true;
        }
        if !self.done() && self.config.coupons_per_participant > 0 {
            self.queue.push_back(PendingCoupons {
                node,
                wave,
                remaining: self.config.coupons_per_participant,
                eligible,
            });
        }
    }

    /// Draw a peer for `holder`, or `None` when no eligible neighbor remains.
    fn draw_peer(&mut self, holder: &PendingCoupons) -> Option<NodeId> {
        let (peers, weights): (&[NodeId], &[f64]) = match &holder.eligible {
            Eligible::Full => (
                self.graph.out_neighbors(holder.node),
                self.graph.out_weights(holder.node),
            ),
            Eligible::Filtered { peers, weights } => (peers, weights),
        };
        let available = |node: NodeId, sampled: &[bool]| sampled.is_empty() || !sampled[node];
        match self.config.recruitment_mode {
            RecruitmentMode::Uniform => {
                let count = peers
                    .iter()
                    .filter(|&&p| available(p, &self.sampled))
                    .count();
                if count == 0 {
                    return None;
                }
                let pick = self.rng.random_range(0..count);
                peers
                    .iter()
                    .filter(|&&p| available(p, &self.sampled))
                    .nth(pick)
                    .copied()
            }
            RecruitmentMode::WeightProportional => {
                let mut total = 0.0;
                for (i, &p) in peers.iter().enumerate() {
                    if available(p, &self.sampled) {
                        total += weights[i];
                    }
                }
                if total <= 0.0 {
                    return None;
                }
                let draw = self.rng.random_range(0.0..total);
                let mut acc = 0.0;
                for (i, &p) in peers.iter().enumerate() {
                    if available(p, &self.sampled) {
                        acc += weights[i];
                        if draw < acc {
                            return Some(p);
                        }
                    }
                }
                // Float round-off on the last cumulative step.
                peers
                    .iter()
                    .rev()
                    .find(|&&p| available(p, &self.sampled))
                    .copied()
            }
        }
    }

    /// A fresh wave-0 participant after the queue ran dry.
    fn reseed(&mut self) -> Result<()> {
        let node = match self.config.seed_selection {
            SeedSelection::Uniform => {
                if self.sampled.is_empty() {
                    self.rng.random_range(0..self.graph.node_count())
                } else {
                    self.draw_unsampled_uniform()?
                }
            }
            SeedSelection::DegreeProportional => {
                let excluded: &[bool] = if self.sampled.is_empty() {
                    &vec![false; self.graph.node_count()]
                } else {
                    &self.sampled
                };
                draw_degree_proportional(self.graph, excluded, self.rng).map_err(|_| {
                    Error::ChainDeath {
                        sampled: self.participants.len(),
                        target: self.config.target_sample_size,
                    }
                })?
            }
        };
        self.reseeds += 1;
        self.admit(node, None, 0);
        Ok(())
    }

    fn draw_unsampled_uniform(&mut self) -> Result<NodeId> {
        let remaining: Vec<NodeId> = (0..self.graph.node_count())
            .filter(|&i| !self.sampled[i])
            .collect();
        if remaining.is_empty() {
            return Err(Error::ChainDeath {
                sampled: self.participants.len(),
                target: self.config.target_sample_size,
            });
        }
        Ok(remaining[self.rng.random_range(0..remaining.len())])
    }

    fn run(mut self) -> Result<RecruitmentSample> {
        let seeds = select_seeds(
            self.graph,
            self.config.seed_count,
            self.config.seed_selection,
            self.rng,
        )?;
        for seed in seeds {
            if self.done() {
                break;
            }
            self.admit(seed, None, 0);
        }

        while !self.done() {
            let Some(mut holder) = self.queue.pop_front() else {
                self.chain_deaths += 1;
                match self.config.on_chain_death {
                    ChainDeathPolicy::Fail => {
                        return Err(Error::ChainDeath {
                            sampled: self.participants.len(),
                            target: self.config.target_sample_size,
                        });
                    }
                    ChainDeathPolicy::Reseed => {
                        self.reseed()?;
                        continue;
                    }
                }
            };
            holder.remaining -= 1;
            let peer = self.draw_peer(&holder);
            let (node, wave) = (holder.node, holder.wave);
            if holder.remaining > 0 {
                // Unredeemed coupons of the same holder stay next in line.
                self.queue.push_front(holder);
            }
            let Some(peer) = peer else { continue };
            let reject = self.config.reject_prob.for_node(self.partition, peer);
            if reject > 0.0 && (reject >= 1.0 || self.rng.random_bool(reject)) {
                // A rejected coupon is discarded, not reused.
                continue;
            }
            self.admit(peer, Some(node), wave + 1);
        }

        Ok(RecruitmentSample {
            participants: self.participants,
            chain_death_count: self.chain_deaths,
            reseed_count: self.reseeds,
        })
    }
}

/// Simulate one full recruitment chain under `config`.
///
/// The result is a pure function of `(graph, partition, config, rng)`;
/// identical inputs give identical samples.
pub fn run_chain<R: Rng>(
    graph: &AttributedGraph,
    partition: &NodePartition,
    config: &SamplingConfig,
    rng: &mut R,
) -> Result<RecruitmentSample> {
    config.validate(graph)?;
    ChainRun::new(graph, partition, config, rng).run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn two_node_graph() -> (AttributedGraph, NodePartition) {
        let mut b = GraphBuilder::new(2);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_attribute("grp", &["a", "b"]);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "grp", "a").unwrap();
        (g, p)
    }

    fn star_graph(leaves: usize) -> (AttributedGraph, NodePartition) {
        let mut b = GraphBuilder::new(leaves + 1);
        for leaf in 1..=leaves {
            b.add_reciprocal_edge(0, leaf, 1.0);
        }
        let values: Vec<&str> = (0..=leaves).map(|i| if i == 0 { "hub" } else { "leaf" }).collect();
        b.add_attribute("role", &values);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "role", "hub").unwrap();
        (g, p)
    }

    #[test]
    fn select_all_nodes_any_mode() {
        let (g, _) = star_graph(4);
        let mut r = rng(1);
        assert_eq!(
            select_seeds(&g, 5, SeedSelection::Uniform, &mut r).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
        assert_eq!(
            select_seeds(&g, 5, SeedSelection::DegreeProportional, &mut r).unwrap(),
            vec![0, 1, 2, 3, 4]
        );
    }

    #[test]
    fn select_more_seeds_than_nodes_errors() {
        let (g, _) = two_node_graph();
        assert!(matches!(
            select_seeds(&g, 3, SeedSelection::Uniform, &mut rng(0)),
            Err(Error::NotEnoughSeeds { .. })
        ));
    }

    #[test]
    fn degree_proportional_matches_star_enumeration() {
        // Hub degree is (N-1), each leaf 1; the hub must come up with
        // frequency hubdeg / sum(deg) = 4/8 = 1/2.
        let (g, _) = star_graph(4);
        let mut r = rng(7);
        let draws = 100_000;
        let mut hub = 0usize;
        for _ in 0..draws {
            let s = select_seeds(&g, 1, SeedSelection::DegreeProportional, &mut r).unwrap();
            if s[0] == 0 {
                hub += 1;
            }
        }
        let freq = hub as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.01, "hub frequency {freq}");
    }

    #[test]
    fn uniform_selection_is_uniform() {
        let mut b = GraphBuilder::new(4);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_reciprocal_edge(2, 3, 1.0);
        let g = b.build().unwrap();
        let mut r = rng(3);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let s = select_seeds(&g, 1, SeedSelection::Uniform, &mut r).unwrap();
            counts[s[0]] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn ignore_set_boundaries() {
        let (g, p) = star_graph(3);
        let mut r = rng(5);
        let none = draw_ignore_set(&g, 0, &p, &GroupProbability::zero(), &mut r);
        assert!(none.iter().all(|&f| !f));
        let all = draw_ignore_set(&g, 0, &p, &GroupProbability::uniform(1.0), &mut r);
        assert!(all.iter().all(|&f| f));
        assert_eq!(reported_degree(&g, 0, &all), 1);
    }

    #[test]
    fn ignore_set_targets_group_edges_only() {
        // Node 0 adjacent to group-a node 1 and group-b node 2.
        let mut b = GraphBuilder::new(3);
        b.add_reciprocal_edge(0, 1, 1.0);
        b.add_reciprocal_edge(0, 2, 1.0);
        b.add_attribute("grp", &["b", "a", "b"]);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "grp", "a").unwrap();
        let probs = GroupProbability {
            group: 1.0,
            complement: 0.0,
        };
        let mut r = rng(11);
        let flags = draw_ignore_set(&g, 0, &p, &probs, &mut r);
        let nbrs = g.out_neighbors(0);
        for (i, &peer) in nbrs.iter().enumerate() {
            assert_eq!(flags[i], peer == 1);
        }
        assert_eq!(reported_degree(&g, 0, &flags), 1);
    }

    #[test]
    fn reported_degree_subtracts_ignored() {
        let (g, p) = star_graph(6);
        let mut r = rng(2);
        // Degree 6 with exactly two ignored edges.
        let mut flags = draw_ignore_set(&g, 0, &p, &GroupProbability::zero(), &mut r);
        flags[0] = true;
        flags[3] = true;
        assert_eq!(reported_degree(&g, 0, &flags), 4);
        let none = vec![false; 6];
        assert_eq!(reported_degree(&g, 0, &none), 6);
    }

    #[test]
    fn two_node_walk_alternates() {
        let (g, p) = two_node_graph();
        let config = SamplingConfig {
            target_sample_size: 3,
            checkpoint_sizes: vec![3],
            ..SamplingConfig::default()
        };
        let sample = run_chain(&g, &p, &config, &mut rng(9)).unwrap();
        let nodes: Vec<NodeId> = sample.participants.iter().map(|p| p.node).collect();
        let waves: Vec<u32> = sample.participants.iter().map(|p| p.wave).collect();
        assert!(nodes == vec![0, 1, 0] || nodes == vec![1, 0, 1]);
        assert_eq!(waves, vec![0, 1, 2]);
        assert_eq!(sample.participants[0].recruiter, None);
        assert_eq!(sample.participants[1].recruiter, Some(nodes[0]));
        assert_eq!(sample.participants[2].recruiter, Some(nodes[1]));
    }

    #[test]
    fn all_rejections_kill_chain_in_fail_mode() {
        let (g, p) = two_node_graph();
        let config = SamplingConfig {
            target_sample_size: 2,
            checkpoint_sizes: vec![2],
            reject_prob: GroupProbability::uniform(1.0),
            on_chain_death: ChainDeathPolicy::Fail,
            ..SamplingConfig::default()
        };
        let err = run_chain(&g, &p, &config, &mut rng(4)).unwrap_err();
        assert!(matches!(
            err,
            Error::ChainDeath {
                sampled: 1,
                target: 2
            }
        ));
    }

    #[test]
    fn all_rejections_reseed_to_target() {
        let (g, p) = two_node_graph();
        let config = SamplingConfig {
            target_sample_size: 4,
            checkpoint_sizes: vec![4],
            reject_prob: GroupProbability::uniform(1.0),
            on_chain_death: ChainDeathPolicy::Reseed,
            ..SamplingConfig::default()
        };
        let sample = run_chain(&g, &p, &config, &mut rng(4)).unwrap();
        assert_eq!(sample.len(), 4);
        assert!(sample.participants.iter().all(|p| p.wave == 0));
        assert_eq!(sample.reseed_count, 3);
        assert_eq!(sample.chain_death_count, 3);
    }

    #[test]
    fn weight_proportional_draw_matches_ratio() {
        // Node 0 has neighbors 1 (weight 10) and 2 (weight 5); conditional on
        // the seed being 0, the first recruit is 1 with probability 2/3.
        let mut b = GraphBuilder::new(3);
        b.add_reciprocal_edge(0, 1, 10.0);
        b.add_reciprocal_edge(0, 2, 5.0);
        b.add_attribute("grp", &["a", "a", "a"]);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "grp", "a").unwrap();
        let config = SamplingConfig {
            target_sample_size: 2,
            checkpoint_sizes: vec![2],
            recruitment_mode: RecruitmentMode::WeightProportional,
            ..SamplingConfig::default()
        };
        let mut r = rng(12);
        let mut seed_zero = 0usize;
        let mut first_is_one = 0usize;
        for _ in 0..300_000 {
            let sample = run_chain(&g, &p, &config, &mut r).unwrap();
            if sample.participants[0].node == 0 {
                seed_zero += 1;
                if sample.participants[1].node == 1 {
                    first_is_one += 1;
                }
            }
        }
        assert!(seed_zero > 90_000, "conditioning set too small: {seed_zero}");
        let freq = first_is_one as f64 / seed_zero as f64;
        assert!((freq - 2.0 / 3.0).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn without_replacement_yields_distinct_nodes() {
        let (g, p) = star_graph(6);
        let config = SamplingConfig {
            target_sample_size: 7,
            checkpoint_sizes: vec![7],
            replacement: Replacement::Without,
            coupons_per_participant: 3,
            on_chain_death: ChainDeathPolicy::Reseed,
            ..SamplingConfig::default()
        };
        let sample = run_chain(&g, &p, &config, &mut rng(21)).unwrap();
        let mut nodes: Vec<NodeId> = sample.participants.iter().map(|p| p.node).collect();
        nodes.sort_unstable();
        nodes.dedup();
        assert_eq!(nodes.len(), 7);
    }

    #[test]
    fn swor_exhaustion_is_chain_death() {
        let (g, p) = two_node_graph();
        let config = SamplingConfig {
            target_sample_size: 3,
            checkpoint_sizes: vec![3],
            replacement: Replacement::Without,
            on_chain_death: ChainDeathPolicy::Reseed,
            ..SamplingConfig::default()
        };
        let err = run_chain(&g, &p, &config, &mut rng(8)).unwrap_err();
        assert!(matches!(err, Error::ChainDeath { sampled: 2, target: 3 }));
    }

    #[test]
    fn identical_inputs_give_identical_samples() {
        let (g, p) = star_graph(9);
        let config = SamplingConfig {
            target_sample_size: 50,
            checkpoint_sizes: vec![50],
            coupons_per_participant: 3,
            ignore_prob: GroupProbability::uniform(0.2),
            reject_prob: GroupProbability::uniform(0.1),
            ..SamplingConfig::default()
        };
        let a = run_chain(&g, &p, &config, &mut rng(33)).unwrap();
        let b = run_chain(&g, &p, &config, &mut rng(33)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recruiters_appear_earlier_in_the_record() {
        let (g, p) = star_graph(9);
        let config = SamplingConfig {
            target_sample_size: 40,
            checkpoint_sizes: vec![40],
            coupons_per_participant: 2,
            seed_count: 3,
            ..SamplingConfig::default()
        };
        let sample = run_chain(&g, &p, &config, &mut rng(17)).unwrap();
        for (i, part) in sample.participants.iter().enumerate() {
            match part.recruiter {
                None => assert_eq!(part.wave, 0),
                Some(r) => {
                    // Under replacement the recruiter node may participate
                    // several times; the recruiting participation is the
                    // one whose wave precedes ours.
                    assert!(
                        sample.participants[..i]
                            .iter()
                            .any(|q| q.node == r && q.wave + 1 == part.wave),
                        "participant {i} has no matching earlier recruiter"
                    );
                }
            }
        }
    }
}
