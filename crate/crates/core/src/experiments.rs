//! Replicated simulations, estimate snapshots at sample-size checkpoints,
//! and aggregation into the four error metrics (AE, Bias, SD, MAE).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{ShareAccumulator, StationaryVector};
use crate::graph::{AttributedGraph, NodePartition};
use crate::numeric::CompensatedSum;
use crate::sampler::{run_chain, Replacement, SamplingConfig, SeedSelection};

/// Estimates of one replication at every checkpoint, prefix semantics:
/// the estimate at checkpoint `j` uses the first `j` participants.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSeries {
    pub replication: usize,
    pub checkpoints: Vec<usize>,
    pub rds2: Vec<f64>,
    pub eig: Option<Vec<f64>>,
    pub chain_death_count: usize,
    pub reseed_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Rds2,
    Eig,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::Rds2 => write!(f, "rds2"),
            EstimatorKind::Eig => write!(f, "eig"),
        }
    }
}

/// One aggregated row: a checkpoint (or grid cell) for one estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub checkpoint: usize,
    pub estimator: EstimatorKind,
    pub average_estimate: f64,
    pub bias: f64,
    pub sd: f64,
    pub mae: f64,
    pub replications: usize,
    pub true_proportion: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

/// Run `replications` independent chains; replication `i` draws from the
/// ChaCha stream `(config.rng_seed, i)`, so results do not depend on the
/// execution schedule. Estimates are snapshotted at every checkpoint, for
/// the inverse-degree estimator always and for the stationary-weighted
/// estimator when a stationary vector is supplied.
pub fn run_replications(
    graph: &AttributedGraph,
    partition: &NodePartition,
    config: &SamplingConfig,
    replications: usize,
    stationary: Option<&StationaryVector>,
) -> Result<Vec<EstimateSeries>> {
    run_replications_streamed(graph, partition, config, replications, stationary, 0)
}

/// Stream ids are `stream_base + i`; grid cells pass distinct bases.
pub(crate) fn run_replications_streamed(
    graph: &AttributedGraph,
    partition: &NodePartition,
    config: &SamplingConfig,
    replications: usize,
    stationary: Option<&StationaryVector>,
    stream_base: u64,
) -> Result<Vec<EstimateSeries>> {
    if replications == 0 {
        return Err(Error::NoReplications);
    }
    config.validate(graph)?;
    let results: Vec<Result<EstimateSeries>> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(stream_base + i as u64);
            let sample = run_chain(graph, partition, config, &mut rng)?;
            series_from_sample(&sample, partition, config, stationary, i)
        })
        .collect();
    results.into_iter().collect()
}

fn series_from_sample(
    sample: &crate::sampler::RecruitmentSample,
    partition: &NodePartition,
    config: &SamplingConfig,
    stationary: Option<&StationaryVector>,
    replication: usize,
) -> Result<EstimateSeries> {
    let checkpoints = &config.checkpoint_sizes;
    let mut rds2_acc = ShareAccumulator::new();
    let mut eig_acc = stationary.map(|_| ShareAccumulator::new());
    let mut rds2 = Vec::with_capacity(checkpoints.len());
    let mut eig = stationary.map(|_| Vec::with_capacity(checkpoints.len()));
    let mut next = 0usize;
    for (pos, part) in sample.participants.iter().enumerate() {
        if next >= checkpoints.len() {
            break;
        }
        let in_group = partition.contains(part.node);
        rds2_acc.push(in_group, 1.0 / part.reported_degree as f64);
        if let (Some(acc), Some(v)) = (eig_acc.as_mut(), stationary) {
            let mass = v
                .prob(part.node)
                .filter(|&m| m > 0.0)
                .ok_or(Error::ZeroStationaryMass(part.node))?;
            acc.push(in_group, 1.0 / mass);
        }
        if pos + 1 == checkpoints[next] {
            rds2.push(rds2_acc.estimate());
            if let (Some(series), Some(acc)) = (eig.as_mut(), eig_acc.as_ref()) {
                series.push(acc.estimate());
            }
            next += 1;
        }
    }
    if next < checkpoints.len() {
        return Err(Error::MismatchedCheckpoints);
    }
    Ok(EstimateSeries {
        replication,
        checkpoints: checkpoints.clone(),
        rds2,
        eig,
        chain_death_count: sample.chain_death_count,
        reseed_count: sample.reseed_count,
    })
}

/// Aggregate per-replication series into AE, Bias, SD (population
/// convention) and MAE per checkpoint and estimator.
pub fn compute_metrics(series: &[EstimateSeries], true_proportion: f64) -> Result<MetricsTable> {
    let Some(first) = series.first() else {
        return Err(Error::NoReplications);
    };
    let checkpoints = &first.checkpoints;
    let with_eig = series.iter().all(|s| s.eig.is_some());
    for s in series {
        if &s.checkpoints != checkpoints || s.eig.is_some() != with_eig {
            return Err(Error::MismatchedCheckpoints);
        }
    }
    let m = series.len();
    let mut rows = Vec::new();
    type Pick = Box<dyn Fn(&EstimateSeries) -> f64>;
    for (j, &checkpoint) in checkpoints.iter().enumerate() {
        let mut kinds: Vec<(EstimatorKind, Pick)> = vec![(
            EstimatorKind::Rds2,
            Box::new(move |s: &EstimateSeries| s.rds2[j]),
        )];
        if with_eig {
            kinds.push((
                EstimatorKind::Eig,
                Box::new(move |s: &EstimateSeries| s.eig.as_ref().expect("eig present")[j]),
            ));
        }
        for (kind, pick) in kinds {
            let mean = {
                let mut acc = CompensatedSum::new();
                for s in series {
                    acc.add(pick(s));
                }
                acc.value() / m as f64
            };
            let mut spread = CompensatedSum::new();
            let mut abs_error = CompensatedSum::new();
            for s in series {
                let est = pick(s);
                spread.add((est - mean) * (est - mean));
                abs_error.add((est - true_proportion).abs());
            }
            rows.push(MetricsRow {
                checkpoint,
                estimator: kind,
                average_estimate: mean,
                bias: (mean - true_proportion).abs(),
                sd: (spread.value() / m as f64).sqrt(),
                mae: abs_error.value() / m as f64,
                replications: m,
                true_proportion,
            });
        }
    }
    Ok(MetricsTable { rows })
}

/// Config fields a grid may sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisField {
    IgnoreGroup,
    IgnoreComplement,
    RejectGroup,
    RejectComplement,
    SeedCount,
    CouponsPerParticipant,
    SeedSelection,
    Replacement,
}

impl AxisField {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "p_i" => AxisField::IgnoreGroup,
            "p_i_prime" | "p'_i" => AxisField::IgnoreComplement,
            "p_r" => AxisField::RejectGroup,
            "p_r_prime" | "p'_r" => AxisField::RejectComplement,
            "seed_count" | "seeds" => AxisField::SeedCount,
            "coupons" | "coupons_per_participant" => AxisField::CouponsPerParticipant,
            "seed_selection" => AxisField::SeedSelection,
            "replacement" => AxisField::Replacement,
            other => return Err(Error::UnknownAxis(other.to_string())),
        })
    }

    pub fn parse_value(&self, raw: &str) -> Result<AxisValue> {
        let raw = raw.trim();
        let bad = || Error::BadAxisValue {
            axis: self.to_string(),
            value: raw.to_string(),
        };
        Ok(match self {
            AxisField::IgnoreGroup
            | AxisField::IgnoreComplement
            | AxisField::RejectGroup
            | AxisField::RejectComplement => AxisValue::Real(raw.parse().map_err(|_| bad())?),
            AxisField::SeedCount | AxisField::CouponsPerParticipant => {
                AxisValue::Count(raw.parse().map_err(|_| bad())?)
            }
            AxisField::SeedSelection => match raw {
                "uniform" => AxisValue::Selection(SeedSelection::Uniform),
                "degree" | "degree_proportional" => {
                    AxisValue::Selection(SeedSelection::DegreeProportional)
                }
                _ => return Err(bad()),
            },
            AxisField::Replacement => match raw {
                "with" => AxisValue::Replacement(Replacement::With),
                "without" => AxisValue::Replacement(Replacement::Without),
                _ => return Err(bad()),
            },
        })
    }
}

impl std::fmt::Display for AxisField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AxisField::IgnoreGroup => "p_i",
            AxisField::IgnoreComplement => "p_i_prime",
            AxisField::RejectGroup => "p_r",
            AxisField::RejectComplement => "p_r_prime",
            AxisField::SeedCount => "seed_count",
            AxisField::CouponsPerParticipant => "coupons_per_participant",
            AxisField::SeedSelection => "seed_selection",
            AxisField::Replacement => "replacement",
        };
        write!(f, "{name}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AxisValue {
    Real(f64),
    Count(usize),
    Selection(SeedSelection),
    Replacement(Replacement),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Real(v) => write!(f, "{v}"),
            AxisValue::Count(v) => write!(f, "{v}"),
            AxisValue::Selection(SeedSelection::Uniform) => write!(f, "uniform"),
            AxisValue::Selection(SeedSelection::DegreeProportional) => write!(f, "degree"),
            AxisValue::Replacement(Replacement::With) => write!(f, "with"),
            AxisValue::Replacement(Replacement::Without) => write!(f, "without"),
        }
    }
}

/// One swept config field with its value list.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub field: AxisField,
    pub values: Vec<AxisValue>,
}

impl GridAxis {
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::UnknownAxis(spec.to_string()))?;
        let field = AxisField::parse(name)?;
        let values = rest
            .split(',')
            .map(|v| field.parse_value(v))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::BadAxisValue {
                axis: field.to_string(),
                value: rest.to_string(),
            });
        }
        Ok(Self { field, values })
    }
}

fn apply_axis(config: &mut SamplingConfig, field: AxisField, value: &AxisValue) -> Result<()> {
    let bad = || Error::BadAxisValue {
        axis: field.to_string(),
        value: value.to_string(),
    };
    match (field, value) {
        (AxisField::IgnoreGroup, AxisValue::Real(v)) => config.ignore_prob.group = *v,
        (AxisField::IgnoreComplement, AxisValue::Real(v)) => config.ignore_prob.complement = *v,
        (AxisField::RejectGroup, AxisValue::Real(v)) => config.reject_prob.group = *v,
        (AxisField::RejectComplement, AxisValue::Real(v)) => config.reject_prob.complement = *v,
        (AxisField::SeedCount, AxisValue::Count(v)) => config.seed_count = *v,
        (AxisField::CouponsPerParticipant, AxisValue::Count(v)) => {
            config.coupons_per_participant = *v
        }
        (AxisField::SeedSelection, AxisValue::Selection(v)) => config.seed_selection = *v,
        (AxisField::Replacement, AxisValue::Replacement(v)) => config.replacement = *v,
        _ => return Err(bad()),
    }
    Ok(())
}

/// Metrics of one grid cell at the fixed checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub axis1: AxisValue,
    pub axis2: AxisValue,
    pub rows: Vec<MetricsRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridTable {
    pub axis1: AxisField,
    pub axis2: AxisField,
    pub cells: Vec<GridCell>,
}

/// Cartesian product of the two axes over one shared graph. Every cell
/// runs `replications` chains at the cell's config, snapshotting at the
/// target sample size only; cell `k` uses streams `k * 2^32 + i`.
pub fn grid_experiment(
    graph: &AttributedGraph,
    partition: &NodePartition,
    base: &SamplingConfig,
    axis1: &GridAxis,
    axis2: &GridAxis,
    replications: usize,
    stationary: Option<&StationaryVector>,
) -> Result<GridTable> {
    let true_proportion = crate::graph::true_proportion(graph, partition)?;
    let mut cells = Vec::with_capacity(axis1.values.len() * axis2.values.len());
    for (i1, v1) in axis1.values.iter().enumerate() {
        for (i2, v2) in axis2.values.iter().enumerate() {
            let mut config = base.clone();
            apply_axis(&mut config, axis1.field, v1)?;
            apply_axis(&mut config, axis2.field, v2)?;
            config.checkpoint_sizes = vec![config.target_sample_size];
            let cell_index = (i1 * axis2.values.len() + i2) as u64;
            let series = run_replications_streamed(
                graph,
                partition,
                &config,
                replications,
                stationary,
                cell_index << 32,
            )?;
            let metrics = compute_metrics(&series, true_proportion)?;
            cells.push(GridCell {
                axis1: v1.clone(),
                axis2: v2.clone(),
                rows: metrics.rows,
            });
        }
    }
    Ok(GridTable {
        axis1: axis1.field,
        axis2: axis2.field,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, NodePartition};
    use crate::sampler::GroupProbability;

    fn ring_graph(n: usize) -> (AttributedGraph, NodePartition) {
        let mut b = GraphBuilder::new(n);
        for i in 0..n {
            b.add_reciprocal_edge(i, (i + 1) % n, 1.0);
        }
        let values: Vec<String> = (0..n)
            .map(|i| if i % 2 == 0 { "a".into() } else { "b".into() })
            .collect();
        b.add_attribute("grp", &values);
        let g = b.build().unwrap();
        let p = NodePartition::new(&g, "grp", "a").unwrap();
        (g, p)
    }

    fn base_config(target: usize) -> SamplingConfig {
        SamplingConfig {
            target_sample_size: target,
            checkpoint_sizes: vec![target],
            rng_seed: 99,
            ..SamplingConfig::default()
        }
    }

    fn series_with(estimates: &[f64]) -> Vec<EstimateSeries> {
        estimates
            .iter()
            .enumerate()
            .map(|(i, &e)| EstimateSeries {
                replication: i,
                checkpoints: vec![10],
                rds2: vec![e],
                eig: None,
                chain_death_count: 0,
                reseed_count: 0,
            })
            .collect()
    }

    #[test]
    fn single_replication_single_checkpoint() {
        let (g, p) = ring_graph(12);
        let series = run_replications(&g, &p, &base_config(20), 1, None).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].rds2.len(), 1);
        assert!(series[0].eig.is_none());
    }

    #[test]
    fn replications_are_deterministic() {
        let (g, p) = ring_graph(12);
        let a = run_replications(&g, &p, &base_config(30), 4, None).unwrap();
        let b = run_replications(&g, &p, &base_config(30), 4, None).unwrap();
        assert_eq!(a, b);
        // Distinct streams give distinct chains (estimates may still
        // coincide on a regular graph, so compare the walks themselves).
        let config = base_config(30);
        let mut rng0 = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng0.set_stream(0);
        let mut rng1 = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng1.set_stream(1);
        let walk0 = run_chain(&g, &p, &config, &mut rng0).unwrap();
        let walk1 = run_chain(&g, &p, &config, &mut rng1).unwrap();
        assert_ne!(walk0, walk1);
    }

    #[test]
    fn prefix_checkpoints_snapshot_growing_sample() {
        let (g, p) = ring_graph(12);
        let config = SamplingConfig {
            target_sample_size: 30,
            checkpoint_sizes: vec![5, 10, 30],
            rng_seed: 7,
            ..SamplingConfig::default()
        };
        let series = run_replications(&g, &p, &config, 2, None).unwrap();
        for s in &series {
            assert_eq!(s.rds2.len(), 3);
            for est in &s.rds2 {
                assert!((0.0..=1.0).contains(est));
            }
        }
    }

    #[test]
    fn metrics_from_two_estimates() {
        let table = compute_metrics(&series_with(&[0.4, 0.6]), 0.5).unwrap();
        assert_eq!(table.rows.len(), 1);
        let row = &table.rows[0];
        assert!((row.average_estimate - 0.5).abs() < 1e-15);
        assert!(row.bias < 1e-15);
        assert!((row.sd - 0.1).abs() < 1e-12);
        assert!((row.mae - 0.1).abs() < 1e-12);
        assert_eq!(row.replications, 2);
    }

    #[test]
    fn metrics_all_equal_to_truth() {
        let table = compute_metrics(&series_with(&[0.5, 0.5, 0.5]), 0.5).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.bias, 0.0);
        assert_eq!(row.sd, 0.0);
        assert_eq!(row.mae, 0.0);
    }

    #[test]
    fn metrics_single_estimate() {
        let table = compute_metrics(&series_with(&[0.7]), 0.5).unwrap();
        let row = &table.rows[0];
        assert!((row.average_estimate - 0.7).abs() < 1e-15);
        assert!((row.bias - 0.2).abs() < 1e-15);
        assert_eq!(row.sd, 0.0);
        assert!((row.mae - 0.2).abs() < 1e-15);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let mut series = series_with(&[0.3, 0.7, 0.5, 0.9]);
        let table = compute_metrics(&series, 0.5).unwrap();
        series.reverse();
        let reversed = compute_metrics(&series, 0.5).unwrap();
        assert_eq!(table.rows[0].average_estimate, reversed.rows[0].average_estimate);
        assert_eq!(table.rows[0].sd, reversed.rows[0].sd);
        assert_eq!(table.rows[0].mae, reversed.rows[0].mae);
    }

    #[test]
    fn mae_dominates_bias() {
        let table = compute_metrics(&series_with(&[0.2, 0.9, 0.55, 0.4]), 0.5).unwrap();
        let row = &table.rows[0];
        assert!(row.mae >= row.bias - 1e-12);
    }

    #[test]
    fn mismatched_checkpoints_error() {
        let mut series = series_with(&[0.4, 0.6]);
        series[1].checkpoints = vec![20];
        assert!(matches!(
            compute_metrics(&series, 0.5),
            Err(Error::MismatchedCheckpoints)
        ));
    }

    #[test]
    fn degenerate_grid_equals_plain_replications() {
        let (g, p) = ring_graph(12);
        let config = base_config(25);
        let axis1 = GridAxis::parse("p_i: 0").unwrap();
        let axis2 = GridAxis::parse("p_r: 0").unwrap();
        let grid = grid_experiment(&g, &p, &config, &axis1, &axis2, 3, None).unwrap();
        assert_eq!(grid.cells.len(), 1);
        let series = run_replications(&g, &p, &config, 3, None).unwrap();
        let p_star = crate::graph::true_proportion(&g, &p).unwrap();
        let plain = compute_metrics(&series, p_star).unwrap();
        assert_eq!(grid.cells[0].rows, plain.rows);
    }

    #[test]
    fn grid_covers_cartesian_product() {
        let (g, p) = ring_graph(12);
        let config = base_config(15);
        let axis1 = GridAxis::parse("p_i: 0, 0.25, 0.5").unwrap();
        let axis2 = GridAxis::parse("p_r: 0, 0.25, 0.5").unwrap();
        let grid = grid_experiment(&g, &p, &config, &axis1, &axis2, 2, None).unwrap();
        assert_eq!(grid.cells.len(), 9);
        for cell in &grid.cells {
            assert_eq!(cell.rows.len(), 1);
            assert_eq!(cell.rows[0].checkpoint, 15);
        }
    }

    #[test]
    fn grid_sweeps_categorical_axes() {
        // Target below node count so the without-replacement cells finish.
        let (g, p) = ring_graph(12);
        let config = base_config(8);
        let axis1 = GridAxis::parse("seed_selection: uniform, degree").unwrap();
        let axis2 = GridAxis::parse("replacement: with, without").unwrap();
        let grid = grid_experiment(&g, &p, &config, &axis1, &axis2, 2, None).unwrap();
        assert_eq!(grid.cells.len(), 4);
    }

    #[test]
    fn unknown_axis_name_errors() {
        assert!(matches!(
            GridAxis::parse("p_x: 0, 1"),
            Err(Error::UnknownAxis(_))
        ));
        assert!(matches!(
            GridAxis::parse("seed_count: 1.5"),
            Err(Error::BadAxisValue { .. })
        ));
    }

    #[test]
    fn chain_death_propagates_from_cells() {
        let (g, p) = ring_graph(4);
        let config = SamplingConfig {
            target_sample_size: 5,
            checkpoint_sizes: vec![5],
            replacement: Replacement::Without,
            on_chain_death: crate::sampler::ChainDeathPolicy::Fail,
            reject_prob: GroupProbability::uniform(0.0),
            rng_seed: 5,
            ..SamplingConfig::default()
        };
        assert!(matches!(
            run_replications(&g, &p, &config, 2, None),
            Err(Error::ChainDeath { .. })
        ));
    }
}
