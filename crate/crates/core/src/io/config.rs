//! Line-oriented experiment configuration.
//!
//! The format is `key = value` lines under `[section]` headers; `#` starts
//! a comment line and blank lines are ignored. Sections:
//!
//! ```text
//! [graph]                # exactly one source
//! source = generate      # or: load
//! edges = g.edges.tsv    # load only
//! attrs = g.attrs.tsv    # load only
//! nodes = 5000           # generate only
//! degree = powerlaw      # powerlaw | geometric | explicit
//! exponent = 2.0         # powerlaw
//! min_degree = 2         # powerlaw
//! max_degree = 150       # powerlaw
//! mean_degree = 7.0      # geometric
//! sequence = 3,3,2       # explicit
//! generator_seed = 1
//!
//! [attribute group]      # one section per generated attribute
//! categories = a, b
//! proportions = 0.4, 0.6
//! homophily = 0.4, 0.4
//!
//! [partition]
//! attribute = group
//! value = a
//!
//! [sampling]
//! seeds = 1
//! seed_selection = uniform   # uniform | degree
//! coupons = 1
//! replacement = with         # with | without
//! sample_size = 500
//! checkpoints = 100, 500
//! p_i = 0.0
//! p_i_prime = 0.0
//! p_r = 0.0
//! p_r_prime = 0.0
//! recruitment = uniform      # uniform | weighted
//! on_chain_death = reseed    # reseed | fail
//!
//! [experiment]
//! replications = 10000
//! estimators = rds2, eig     # rds2 always; eig optional
//! axis1 = p_i: 0, 0.1, 0.3   # optional grid, axis1 and axis2 together
//! axis2 = p_r: 0, 0.1, 0.3
//! output = results/baseline
//! seed = 42
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::GridAxis;
use crate::graph::AttributedGraph;
use crate::netgen::{AttributeSpec, DegreeDistribution, GeneratorSpec};
use crate::sampler::{
    ChainDeathPolicy, GroupProbability, RecruitmentMode, Replacement, SamplingConfig,
    SeedSelection,
};

/// Where the experiment's graph comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    Generate(GeneratorSpec),
    Load { edges: PathBuf, attrs: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionSpec {
    pub attribute: String,
    pub value: String,
}

/// A fully parsed experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub partition: PartitionSpec,
    /// Sampling knobs; `rng_seed` is the master seed.
    pub sampling: SamplingConfig,
    pub use_eig: bool,
    pub replications: usize,
    pub axes: Option<(GridAxis, GridAxis)>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        Parser::new(origin).parse(text)
    }

    pub fn master_seed(&self) -> u64 {
        self.sampling.rng_seed
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        self.sampling.rng_seed = seed;
    }

    /// Build or load the graph this config describes.
    pub fn realize_graph(&self) -> Result<AttributedGraph> {
        match &self.graph {
            GraphSource::Generate(spec) => crate::netgen::generate(spec),
            GraphSource::Load { edges, attrs } => super::graph_files::load_graph(edges, attrs),
        }
    }

    /// Canonical rendering of every effective field; formatting-invariant
    /// input that parses to the same config hashes identically.
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        match &self.graph {
            GraphSource::Generate(spec) => {
                out.push_str("graph.source = generate\n");
                out.push_str(&format!("graph.nodes = {}\n", spec.node_count));
                match &spec.degree_distribution {
                    DegreeDistribution::PowerLawLike {
                        exponent,
                        min_degree,
                        max_degree,
                    } => out.push_str(&format!(
                        "graph.degree = powerlaw({exponent}, {min_degree}, {max_degree})\n"
                    )),
                    DegreeDistribution::GeometricMean { mean } => {
                        out.push_str(&format!("graph.degree = geometric({mean})\n"))
                    }
                    DegreeDistribution::Explicit(seq) => {
                        let rendered: Vec<String> = seq.iter().map(|d| d.to_string()).collect();
                        out.push_str(&format!("graph.degree = explicit({})\n", rendered.join(",")))
                    }
                }
                for attr in &spec.attributes {
                    out.push_str(&format!(
                        "graph.attribute.{} = categories({}) proportions({}) homophily({})\n",
                        attr.name,
                        attr.categories.join(","),
                        join_reals(&attr.proportions),
                        join_reals(&attr.homophily),
                    ));
                }
                out.push_str(&format!("graph.generator_seed = {}\n", spec.rng_seed));
            }
            GraphSource::Load { edges, attrs } => {
                out.push_str("graph.source = load\n");
                out.push_str(&format!("graph.edges = {}\n", edges.display()));
                out.push_str(&format!("graph.attrs = {}\n", attrs.display()));
            }
        }
        out.push_str(&format!(
            "partition = {}:{}\n",
            self.partition.attribute, self.partition.value
        ));
        let s = &self.sampling;
        out.push_str(&format!("sampling.seeds = {}\n", s.seed_count));
        out.push_str(&format!(
            "sampling.seed_selection = {}\n",
            match s.seed_selection {
                SeedSelection::Uniform => "uniform",
                SeedSelection::DegreeProportional => "degree",
            }
        ));
        out.push_str(&format!("sampling.coupons = {}\n", s.coupons_per_participant));
        out.push_str(&format!(
            "sampling.replacement = {}\n",
            match s.replacement {
                Replacement::With => "with",
                Replacement::Without => "without",
            }
        ));
        out.push_str(&format!("sampling.sample_size = {}\n", s.target_sample_size));
        let checkpoints: Vec<String> =
            s.checkpoint_sizes.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("sampling.checkpoints = {}\n", checkpoints.join(",")));
        out.push_str(&format!("sampling.p_i = {}\n", s.ignore_prob.group));
        out.push_str(&format!("sampling.p_i_prime = {}\n", s.ignore_prob.complement));
        out.push_str(&format!("sampling.p_r = {}\n", s.reject_prob.group));
        out.push_str(&format!("sampling.p_r_prime = {}\n", s.reject_prob.complement));
        out.push_str(&format!(
            "sampling.recruitment = {}\n",
            match s.recruitment_mode {
                RecruitmentMode::Uniform => "uniform",
                RecruitmentMode::WeightProportional => "weighted",
            }
        ));
        out.push_str(&format!(
            "sampling.on_chain_death = {}\n",
            match s.on_chain_death {
                ChainDeathPolicy::Reseed => "reseed",
                ChainDeathPolicy::Fail => "fail",
            }
        ));
        out.push_str(&format!("experiment.replications = {}\n", self.replications));
        out.push_str(&format!(
            "experiment.estimators = {}\n",
            if self.use_eig { "rds2,eig" } else { "rds2" }
        ));
        if let Some((a1, a2)) = &self.axes {
            out.push_str(&format!("experiment.axis1 = {}\n", render_axis(a1)));
            out.push_str(&format!("experiment.axis2 = {}\n", render_axis(a2)));
        }
        out.push_str(&format!("experiment.output = {}\n", self.output_dir.display()));
        out.push_str(&format!("experiment.seed = {}\n", self.master_seed()));
        out
    }

    /// `sha256:<hex>` of the canonical rendering.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }
}

fn join_reals(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn render_axis(axis: &GridAxis) -> String {
    let values: Vec<String> = axis.values.iter().map(|v| v.to_string()).collect();
    format!("{}: {}", axis.field, values.join(", "))
}

struct Parser {
    origin: String,
}

#[derive(Default)]
struct RawSections {
    /// section name -> (key -> (value, line))
    tables: HashMap<String, HashMap<String, (String, usize)>>,
    /// attribute sections in declaration order
    attribute_order: Vec<String>,
}

impl Parser {
    fn new(origin: &str) -> Self {
        Self {
            origin: origin.to_string(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.clone(),
            line,
            message: message.into(),
        }
    }

    fn parse(&self, text: &str) -> Result<ExperimentConfig> {
        let raw = self.split_sections(text)?;
        let graph = self.parse_graph(&raw)?;
        let partition = self.parse_partition(&raw)?;
        let sampling = self.parse_sampling(&raw)?;
        let (use_eig, replications, axes, output_dir, seed) = self.parse_experiment(&raw)?;
        let mut config = ExperimentConfig {
            graph,
            partition,
            sampling,
            use_eig,
            replications,
            axes,
            output_dir,
        };
        config.sampling.rng_seed = seed;
        Ok(config)
    }

    fn split_sections(&self, text: &str) -> Result<RawSections> {
        let known = ["graph", "partition", "sampling", "experiment"];
        let mut raw = RawSections::default();
        let mut current: Option<String> = None;
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let content = line.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(header) = content.strip_prefix('[') {
                let header = header
                    .strip_suffix(']')
                    .ok_or_else(|| self.err(lineno, "unterminated section header"))?
                    .trim();
                let section = if let Some(name) = header.strip_prefix("attribute ") {
                    let name = name.trim();
                    if name.is_empty() {
                        return Err(self.err(lineno, "attribute section needs a name"));
                    }
                    let key = format!("attribute {name}");
                    raw.attribute_order.push(name.to_string());
                    key
                } else if known.contains(&header) {
                    header.to_string()
                } else {
                    return Err(self.err(lineno, format!("unknown section [{header}]")));
                };
                if raw.tables.contains_key(&section) {
                    return Err(self.err(lineno, format!("duplicate section [{section}]")));
                }
                raw.tables.insert(section.clone(), HashMap::new());
                current = Some(section);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(self.err(lineno, "expected key = value"));
            };
            let Some(section) = &current else {
                return Err(self.err(lineno, "key outside any [section]"));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let table = raw.tables.get_mut(section).expect("section registered");
            if table.insert(key.clone(), (value, lineno)).is_some() {
                return Err(self.err(lineno, format!("duplicate key {key:?}")));
            }
        }
        Ok(raw)
    }

    fn take<'a>(
        &self,
        raw: &'a RawSections,
        section: &str,
        key: &str,
    ) -> Option<&'a (String, usize)> {
        raw.tables.get(section).and_then(|t| t.get(key))
    }

    fn require<'a>(
        &self,
        raw: &'a RawSections,
        section: &str,
        key: &str,
    ) -> Result<&'a (String, usize)> {
        self.take(raw, section, key)
            .ok_or_else(|| Error::Config(format!("{}: [{}] needs {key}", self.origin, section)))
    }

    fn check_keys(&self, raw: &RawSections, section: &str, allowed: &[&str]) -> Result<()> {
        if let Some(table) = raw.tables.get(section) {
            for (key, (_, lineno)) in table {
                if !allowed.contains(&key.as_str()) {
                    return Err(self.err(*lineno, format!("unknown key {key:?} in [{section}]")));
                }
            }
        }
        Ok(())
    }

    fn parse_num<T: std::str::FromStr>(&self, pair: &(String, usize), what: &str) -> Result<T> {
        pair.0
            .parse()
            .map_err(|_| self.err(pair.1, format!("{what} must parse, got {:?}", pair.0)))
    }

    fn parse_list<T: std::str::FromStr>(&self, pair: &(String, usize), what: &str) -> Result<Vec<T>> {
        pair.0
            .split(',')
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| self.err(pair.1, format!("{what} has a bad entry {v:?}")))
            })
            .collect()
    }

    fn parse_graph(&self, raw: &RawSections) -> Result<GraphSource> {
        if !raw.tables.contains_key("graph") {
            return Err(Error::Config(format!("{}: missing [graph]", self.origin)));
        }
        self.check_keys(
            raw,
            "graph",
            &[
                "source",
                "edges",
                "attrs",
                "nodes",
                "degree",
                "exponent",
                "min_degree",
                "max_degree",
                "mean_degree",
                "sequence",
                "generator_seed",
            ],
        )?;
        let source = self.require(raw, "graph", "source")?;
        match source.0.as_str() {
            "load" => {
                for key in ["nodes", "degree", "generator_seed"] {
                    if self.take(raw, "graph", key).is_some() {
                        return Err(self.err(
                            source.1,
                            format!("source = load does not take {key}"),
                        ));
                    }
                }
                let edges = self.require(raw, "graph", "edges")?;
                let attrs = self.require(raw, "graph", "attrs")?;
                Ok(GraphSource::Load {
                    edges: PathBuf::from(&edges.0),
                    attrs: PathBuf::from(&attrs.0),
                })
            }
            "generate" => {
                for key in ["edges", "attrs"] {
                    if self.take(raw, "graph", key).is_some() {
                        return Err(self.err(
                            source.1,
                            format!("source = generate does not take {key}"),
                        ));
                    }
                }
                let node_count = self.parse_num(self.require(raw, "graph", "nodes")?, "nodes")?;
                let kind = self.require(raw, "graph", "degree")?;
                let degree_distribution = match kind.0.as_str() {
                    "powerlaw" => DegreeDistribution::PowerLawLike {
                        exponent: self
                            .parse_num(self.require(raw, "graph", "exponent")?, "exponent")?,
                        min_degree: self
                            .parse_num(self.require(raw, "graph", "min_degree")?, "min_degree")?,
                        max_degree: self
                            .parse_num(self.require(raw, "graph", "max_degree")?, "max_degree")?,
                    },
                    "geometric" => DegreeDistribution::GeometricMean {
                        mean: self
                            .parse_num(self.require(raw, "graph", "mean_degree")?, "mean_degree")?,
                    },
                    "explicit" => DegreeDistribution::Explicit(
                        self.parse_list(self.require(raw, "graph", "sequence")?, "sequence")?,
                    ),
                    other => {
                        return Err(self.err(kind.1, format!("unknown degree model {other:?}")))
                    }
                };
                let rng_seed =
                    self.parse_num(self.require(raw, "graph", "generator_seed")?, "generator_seed")?;
                let mut attributes = Vec::new();
                for name in &raw.attribute_order {
                    attributes.push(self.parse_attribute(raw, name)?);
                }
                Ok(GraphSource::Generate(GeneratorSpec {
                    node_count,
                    degree_distribution,
                    attributes,
                    rng_seed,
                }))
            }
            other => Err(self.err(source.1, format!("source must be generate or load, got {other:?}"))),
        }
    }

    fn parse_attribute(&self, raw: &RawSections, name: &str) -> Result<AttributeSpec> {
        let section = format!("attribute {name}");
        self.check_keys(raw, &section, &["categories", "proportions", "homophily"])?;
        let categories: Vec<String> =
            self.parse_list(self.require(raw, &section, "categories")?, "categories")?;
        let proportions =
            self.parse_list(self.require(raw, &section, "proportions")?, "proportions")?;
        let homophily = self.parse_list(self.require(raw, &section, "homophily")?, "homophily")?;
        Ok(AttributeSpec {
            name: name.to_string(),
            categories,
            proportions,
            homophily,
        })
    }

    fn parse_partition(&self, raw: &RawSections) -> Result<PartitionSpec> {
        self.check_keys(raw, "partition", &["attribute", "value"])?;
        if !raw.tables.contains_key("partition") {
            return Err(Error::Config(format!("{}: missing [partition]", self.origin)));
        }
        Ok(PartitionSpec {
            attribute: self.require(raw, "partition", "attribute")?.0.clone(),
            value: self.require(raw, "partition", "value")?.0.clone(),
        })
    }

    fn parse_sampling(&self, raw: &RawSections) -> Result<SamplingConfig> {
        self.check_keys(
            raw,
            "sampling",
            &[
                "seeds",
                "seed_selection",
                "coupons",
                "replacement",
                "sample_size",
                "checkpoints",
                "p_i",
                "p_i_prime",
                "p_r",
                "p_r_prime",
                "recruitment",
                "on_chain_death",
            ],
        )?;
        let mut config = SamplingConfig::default();
        if let Some(pair) = self.take(raw, "sampling", "seeds") {
            config.seed_count = self.parse_num(pair, "seeds")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "seed_selection") {
            config.seed_selection = match pair.0.as_str() {
                "uniform" => SeedSelection::Uniform,
                "degree" | "degree_proportional" => SeedSelection::DegreeProportional,
                other => return Err(self.err(pair.1, format!("unknown seed_selection {other:?}"))),
            };
        }
        if let Some(pair) = self.take(raw, "sampling", "coupons") {
            config.coupons_per_participant = self.parse_num(pair, "coupons")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "replacement") {
            config.replacement = match pair.0.as_str() {
                "with" => Replacement::With,
                "without" => Replacement::Without,
                other => return Err(self.err(pair.1, format!("unknown replacement {other:?}"))),
            };
        }
        if let Some(pair) = self.take(raw, "sampling", "sample_size") {
            config.target_sample_size = self.parse_num(pair, "sample_size")?;
            config.checkpoint_sizes = vec![config.target_sample_size];
        }
        if let Some(pair) = self.take(raw, "sampling", "checkpoints") {
            config.checkpoint_sizes = self.parse_list(pair, "checkpoints")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "p_i") {
            config.ignore_prob.group = self.parse_num(pair, "p_i")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "p_i_prime") {
            config.ignore_prob.complement = self.parse_num(pair, "p_i_prime")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "p_r") {
            config.reject_prob.group = self.parse_num(pair, "p_r")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "p_r_prime") {
            config.reject_prob.complement = self.parse_num(pair, "p_r_prime")?;
        }
        if let Some(pair) = self.take(raw, "sampling", "recruitment") {
            config.recruitment_mode = match pair.0.as_str() {
                "uniform" => RecruitmentMode::Uniform,
                "weighted" | "weight_proportional" => RecruitmentMode::WeightProportional,
                other => return Err(self.err(pair.1, format!("unknown recruitment {other:?}"))),
            };
        }
        if let Some(pair) = self.take(raw, "sampling", "on_chain_death") {
            config.on_chain_death = match pair.0.as_str() {
                "reseed" => ChainDeathPolicy::Reseed,
                "fail" => ChainDeathPolicy::Fail,
                other => return Err(self.err(pair.1, format!("unknown on_chain_death {other:?}"))),
            };
        }
        Ok(config)
    }

    #[allow(clippy::type_complexity)]
    fn parse_experiment(
        &self,
        raw: &RawSections,
    ) -> Result<(bool, usize, Option<(GridAxis, GridAxis)>, PathBuf, u64)> {
        self.check_keys(
            raw,
            "experiment",
            &["replications", "estimators", "axis1", "axis2", "output", "seed"],
        )?;
        if !raw.tables.contains_key("experiment") {
            return Err(Error::Config(format!("{}: missing [experiment]", self.origin)));
        }
        let replications =
            self.parse_num(self.require(raw, "experiment", "replications")?, "replications")?;
        let output = PathBuf::from(&self.require(raw, "experiment", "output")?.0);
        let seed = self.parse_num(self.require(raw, "experiment", "seed")?, "seed")?;
        let use_eig = match self.take(raw, "experiment", "estimators") {
            None => false,
            Some(pair) => {
                let names: Vec<&str> = pair.0.split(',').map(str::trim).collect();
                for name in &names {
                    if !["rds2", "eig"].contains(name) {
                        return Err(self.err(pair.1, format!("unknown estimator {name:?}")));
                    }
                }
                if !names.contains(&"rds2") {
                    return Err(self.err(pair.1, "estimators must include rds2".to_string()));
                }
                names.contains(&"eig")
            }
        };
        let axis1 = self.take(raw, "experiment", "axis1");
        let axis2 = self.take(raw, "experiment", "axis2");
        let axes = match (axis1, axis2) {
            (Some(a1), Some(a2)) => Some((
                GridAxis::parse(&a1.0).map_err(|e| self.err(a1.1, e.to_string()))?,
                GridAxis::parse(&a2.0).map_err(|e| self.err(a2.1, e.to_string()))?,
            )),
            (None, None) => None,
            (Some(pair), None) | (None, Some(pair)) => {
                return Err(self.err(pair.1, "grid needs both axis1 and axis2"))
            }
        };
        Ok((use_eig, replications, axes, output, seed))
    }
}
