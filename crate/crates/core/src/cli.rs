//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::estimators::{attribute_homophily, stationary_distribution};
use crate::experiments::{compute_metrics, grid_experiment, run_replications};
use crate::graph::{true_proportion, AttributedGraph, DegreeMode, NodePartition};
use crate::io::{
    load_graph, write_graph, write_grid_metrics, write_metrics, write_sample, write_stationary,
    ExperimentConfig, GraphSource, RunMetadata,
};
use crate::netgen::{
    add_edges_preserving_homophily, assign_edge_weights, make_directed_variant,
    rewire_preserving_attributes, AttachmentBias, WeightScheme,
};
use crate::numeric::format_significant;
use crate::sampler::{run_chain, RecruitmentMode};

#[derive(Parser)]
#[command(name = "rds-lab", version, about = "Respondent-driven sampling simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph from a config and write graph files
    Generate {
        /// Experiment config with a generate-source [graph] section
        #[arg(long)]
        config: PathBuf,
        /// Output prefix; writes <out>.edges.tsv and <out>.attrs.tsv
        #[arg(long)]
        out: PathBuf,
        /// Override the generator seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Apply a structural transformation to a graph
    Transform {
        #[command(subcommand)]
        kind: TransformKind,
    },
    /// Print proportions, homophily, degree and component summaries
    Analyze {
        #[command(flatten)]
        graph: GraphFiles,
    },
    /// Compute the stationary distribution of the recruitment walk
    Stationary {
        #[command(flatten)]
        graph: GraphFiles,
        #[arg(long, value_enum, default_value_t = WalkMode::Uniform)]
        mode: WalkMode,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iters: usize,
        /// Output TSV (node <TAB> probability)
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one recruitment chain and dump the record
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output TSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run replicated simulations or grids and write metrics CSV
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct GraphFiles {
    /// Edge list TSV (src <TAB> dst [<TAB> weight])
    #[arg(long)]
    edges: PathBuf,
    /// Attribute TSV (node <TAB> name=value,...)
    #[arg(long)]
    attrs: PathBuf,
}

impl GraphFiles {
    fn load(&self) -> Result<AttributedGraph> {
        load_graph(&self.edges, &self.attrs)
    }
}

#[derive(Subcommand)]
enum TransformKind {
    /// Add reciprocal edges, preserving per-attribute mixing
    AddEdges {
        #[command(flatten)]
        graph: GraphFiles,
        /// Average-degree increase
        #[arg(long)]
        increase: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output prefix
        #[arg(long)]
        out: PathBuf,
    },
    /// Rewire edges within classes of one attribute
    Rewire {
        #[command(flatten)]
        graph: GraphFiles,
        /// Attribute whose values constrain the rewiring
        #[arg(long)]
        attribute: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attach symmetric weights to reciprocal pairs
    Weight {
        #[command(flatten)]
        graph: GraphFiles,
        #[arg(long, value_enum)]
        scheme: WeightKind,
        /// Lognormal location parameter
        #[arg(long, default_value_t = 0.0)]
        location: f64,
        /// Lognormal scale parameter
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add one-way edges until a fraction of edges is irreciprocal
    Directed {
        #[command(flatten)]
        graph: GraphFiles,
        #[arg(long)]
        fraction: f64,
        /// Attribute carrying the in-edge bias
        #[arg(long, requires = "bias_value")]
        bias_attribute: Option<String>,
        /// Category receiving extra in-edges
        #[arg(long, requires = "bias_attribute")]
        bias_value: Option<String>,
        /// Probability that an added edge's head is forced into the category
        #[arg(long, default_value_t = 0.5)]
        bias: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WalkMode {
    Uniform,
    Weighted,
}

impl From<WalkMode> for RecruitmentMode {
    fn from(mode: WalkMode) -> Self {
        match mode {
            WalkMode::Uniform => RecruitmentMode::Uniform,
            WalkMode::Weighted => RecruitmentMode::WeightProportional,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKind {
    Lognormal,
    Max,
    Min,
}

/// Parse `argv` and run; returns the process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Transform { kind } => cmd_transform(kind),
        Command::Analyze { graph } => cmd_analyze(&graph.load()?, &mut std::io::stdout().lock()),
        Command::Stationary {
            graph,
            mode,
            tolerance,
            max_iters,
            out,
        } => {
            let g = graph.load()?;
            let vector = stationary_distribution(&g, mode.into(), tolerance, max_iters)?;
            write_stationary(&vector, &out)?;
            println!(
                "stationary vector for {} nodes written to {} (residual {:.3e})",
                g.node_count(),
                out.display(),
                vector.residual()
            );
            Ok(())
        }
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, out.as_deref()),
        Command::Experiment { config, seed } => cmd_experiment(&config, seed),
    }
}

fn graph_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let base = prefix.as_os_str().to_os_string();
    let mut edges = base.clone();
    edges.push(".edges.tsv");
    let mut attrs = base;
    attrs.push(".attrs.tsv");
    (edges.into(), attrs.into())
}

fn write_graph_prefixed(graph: &AttributedGraph, prefix: &Path) -> Result<()> {
    if let Some(dir) = prefix.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let (edges, attrs) = graph_paths(prefix);
    write_graph(graph, &edges, &attrs)?;
    println!("wrote {} and {}", edges.display(), attrs.display());
    Ok(())
}

fn cmd_generate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let GraphSource::Generate(mut spec) = config.graph else {
        return Err(Error::Config(
            "generate needs a config with source = generate".into(),
        ));
    };
    if let Some(seed) = seed {
        spec.rng_seed = seed;
    }
    let graph = crate::netgen::generate(&spec)?;
    write_graph_prefixed(&graph, out)
}

fn cmd_transform(kind: TransformKind) -> Result<()> {
    match kind {
        TransformKind::AddEdges {
            graph,
            increase,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let result = add_edges_preserving_homophily(&g, increase, seed)?;
            write_graph_prefixed(&result, &out)
        }
        TransformKind::Rewire {
            graph,
            attribute,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let outcome = rewire_preserving_attributes(&g, &attribute, seed)?;
            if outcome.skipped_edges > 0 {
                eprintln!("note: {} edges had no replacement candidate", outcome.skipped_edges);
            }
            write_graph_prefixed(&outcome.graph, &out)
        }
        TransformKind::Weight {
            graph,
            scheme,
            location,
            scale,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let scheme = match scheme {
                WeightKind::Lognormal => WeightScheme::SyntheticLognormal {
                    location,
                    scale,
                    rng_seed: seed,
                },
                WeightKind::Max => WeightScheme::MaxCombine,
                WeightKind::Min => WeightScheme::MinCombine,
            };
            let outcome = assign_edge_weights(&g, &scheme)?;
            if outcome.clamped_weights > 0 {
                eprintln!("note: {} weights clamped to 1", outcome.clamped_weights);
            }
            write_graph_prefixed(&outcome.graph, &out)
        }
        TransformKind::Directed {
            graph,
            fraction,
            bias_attribute,
            bias_value,
            bias,
            seed,
            out,
        } => {
            let g = graph.load()?;
            let attachment = match (bias_attribute, bias_value) {
                (Some(attribute), Some(value)) => Some(AttachmentBias {
                    attribute,
                    value,
                    strength: bias,
                }),
                _ => None,
            };
            let result = make_directed_variant(&g, fraction, attachment.as_ref(), seed)?;
            write_graph_prefixed(&result, &out)
        }
    }
}

/// Table-1-shaped summary: per attribute category, proportion and
/// homophily, plus degree and component statistics.
fn cmd_analyze<W: Write>(graph: &AttributedGraph, out: &mut W) -> Result<()> {
    writeln!(out, "nodes\t{}", graph.node_count())?;
    writeln!(out, "directed_edges\t{}", graph.edge_count())?;
    writeln!(out, "reciprocal_pairs\t{}", graph.reciprocal_pair_count())?;
    writeln!(out, "all_reciprocal\t{}", graph.all_reciprocal())?;
    let n = graph.node_count();
    if n > 0 {
        let mut out_degrees: Vec<usize> = (0..n)
            .map(|i| graph.degree(i, DegreeMode::Out).expect("node exists"))
            .collect();
        out_degrees.sort_unstable();
        let mean = out_degrees.iter().sum::<usize>() as f64 / n as f64;
        writeln!(out, "mean_out_degree\t{}", format_significant(mean, 6))?;
        writeln!(out, "median_out_degree\t{}", out_degrees[n / 2])?;
        writeln!(out, "max_out_degree\t{}", out_degrees[n - 1])?;
    }
    writeln!(
        out,
        "giant_reciprocal_component\t{}",
        graph.giant_reciprocal_component().len()
    )?;
    writeln!(
        out,
        "giant_strongly_connected_component\t{}",
        graph.giant_strongly_connected_component().len()
    )?;
    if !graph.attributes().is_empty() {
        writeln!(out, "attribute\tcategory\tproportion\thomophily")?;
        let names: Vec<String> = graph
            .attributes()
            .iter()
            .map(|c| c.name().to_string())
            .collect();
        for name in names {
            let column = graph.attribute(&name)?;
            let homophily = attribute_homophily(graph, &name)?;
            for (cat, category) in column.categories().iter().enumerate() {
                let members = column.values().iter().filter(|&&v| v as usize == cat).count();
                let proportion = members as f64 / n.max(1) as f64;
                let h = match homophily[cat] {
                    Some(v) => format_significant(v, 6),
                    None => "undefined".to_string(),
                };
                writeln!(
                    out,
                    "{name}\t{category}\t{}\t{h}",
                    format_significant(proportion, 6)
                )?;
            }
        }
    }
    Ok(())
}

fn load_experiment(config_path: &Path, seed: Option<u64>) -> Result<(ExperimentConfig, AttributedGraph, NodePartition)> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.set_master_seed(seed);
    }
    let graph = config.realize_graph()?;
    let partition = NodePartition::new(&graph, &config.partition.attribute, &config.partition.value)?;
    Ok((config, graph, partition))
}

fn cmd_simulate(config_path: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    use rand::SeedableRng;
    let (config, graph, partition) = load_experiment(config_path, seed)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.master_seed());
    rng.set_stream(0);
    let sample = run_chain(&graph, &partition, &config.sampling, &mut rng)?;
    match out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            write_sample(&sample, &mut file)?;
            file.flush()?;
            println!("wrote {} participants to {}", sample.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            write_sample(&sample, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn cmd_experiment(config_path: &Path, seed: Option<u64>) -> Result<()> {
    let (config, graph, partition) = load_experiment(config_path, seed)?;
    let p_star = true_proportion(&graph, &partition)?;
    let stationary = if config.use_eig {
        Some(stationary_distribution(
            &graph,
            config.sampling.recruitment_mode,
            1e-12,
            1_000_000,
        )?)
    } else {
        None
    };
    std::fs::create_dir_all(&config.output_dir)?;
    let csv_path = config.output_dir.join("metrics.csv");
    let meta = RunMetadata {
        config_hash: config.config_hash(),
        master_seed: config.master_seed(),
        axes: config
            .axes
            .as_ref()
            .map(|(a1, a2)| (render(a1), render(a2))),
    };
    match &config.axes {
        Some((axis1, axis2)) => {
            let grid = grid_experiment(
                &graph,
                &partition,
                &config.sampling,
                axis1,
                axis2,
                config.replications,
                stationary.as_ref(),
            )?;
            write_grid_metrics(&grid, &csv_path, &meta)?;
            println!(
                "wrote {} cells ({} rows) to {}",
                grid.cells.len(),
                grid.cells.iter().map(|c| c.rows.len()).sum::<usize>(),
                csv_path.display()
            );
        }
        None => {
            let series = run_replications(
                &graph,
                &partition,
                &config.sampling,
                config.replications,
                stationary.as_ref(),
            )?;
            let table = compute_metrics(&series, p_star)?;
            write_metrics(&table, &csv_path, &meta)?;
            println!(
                "wrote {} rows ({} replications) to {}",
                table.rows.len(),
                config.replications,
                csv_path.display()
            );
        }
    }
    Ok(())
}

fn render(axis: &crate::experiments::GridAxis) -> String {
    let values: Vec<String> = axis.values.iter().map(|v| v.to_string()).collect();
    format!("{}: {}", axis.field, values.join(", "))
}
