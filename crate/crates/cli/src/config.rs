//! Run configuration: a sectioned TOML file (or a JSON echo of one) plus
//! `key=value` overrides.
//!
//! ```toml
//! seed = 7
//!
//! [chain]
//! distance_km = 200
//! repeaters = 0
//! link = "sc"
//! alpha = 0.16
//! strategy = "swap-asap"
//!
//! [hardware]
//! p_emd = 0.3955
//! T2_s = 1
//!
//! [targets]
//! F_t = 0.8
//! R_t = 1
//! ```
//!
//! Overrides name a key either as `section.key` or bare (`T2=10`). A bare
//! key is looked up in chain, hardware, targets, optimizer, bounds order;
//! time keys accept the name without `_s`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use repchain::analytics::Targets;
use repchain::hardware::{Bounds, HardwareParams, LinkProtocol, Scheme, Strategy};
use repchain::optimizer::OptimizerConfig;
use repchain::sim::{default_realizations, ChainConfig, SimOptions};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("override `{0}`: {1}")]
    Override(String, String),
    #[error("invalid configuration")]
    Invalid(#[from] repchain::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Sc,
    Dc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub distance_km: f64,
    pub repeaters: usize,
    pub link: LinkKind,
    /// Bright-state parameter, single-click only.
    pub alpha: f64,
    /// swap-asap, bdcz, epl or dejmps-N.
    pub strategy: String,
    /// Chain-size default when absent.
    pub realizations: Option<usize>,
    pub decoherence: bool,
    pub attempt_includes_cycle: bool,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self {
            distance_km: 200.0,
            repeaters: 0,
            link: LinkKind::Sc,
            alpha: 0.1,
            strategy: Scheme::SWAP_ASAP.to_string(),
            realizations: None,
            decoherence: true,
            attempt_includes_cycle: true,
        }
    }
}

/// Genetic algorithm and hill-climb settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub population: usize,
    pub generations: usize,
    /// Derived from the population (1/5, 3/5, 1/5) when absent.
    pub elites: Option<usize>,
    pub crossover_count: Option<usize>,
    pub mutant_count: Option<usize>,
    pub realizations: Option<usize>,
    pub penalty_weight: Option<f64>,
    pub hill_climb_budget: usize,
    /// Run the hill climb on the best genome after the GA.
    pub refine: bool,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            population: d.population,
            generations: d.generations,
            elites: None,
            crossover_count: None,
            mutant_count: None,
            realizations: None,
            penalty_weight: None,
            hill_climb_budget: d.hill_climb_budget,
            refine: true,
        }
    }
}

/// The file as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: u64,
    pub chain: ChainSection,
    pub hardware: HardwareParams,
    pub targets: Targets,
    pub optimizer: OptimizerSection,
    pub bounds: Bounds,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            chain: ChainSection::default(),
            hardware: HardwareParams::baseline(),
            targets: Targets::A,
            optimizer: OptimizerSection::default(),
            bounds: Bounds::default(),
        }
    }
}

/// Validated configuration ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub file: FileConfig,
    pub chain: ChainConfig,
    pub optimizer: OptimizerConfig,
    pub targets: Targets,
    pub refine: bool,
}

impl FileConfig {
    pub fn strategy(&self) -> Result<Strategy, ConfigError> {
        let link = match self.chain.link {
            LinkKind::Sc => LinkProtocol::SingleClick {
                alpha: self.chain.alpha,
            },
            LinkKind::Dc => LinkProtocol::DoubleClick,
        };
        let scheme: Scheme = self.chain.strategy.parse()?;
        let s = Strategy { link, scheme };
        s.validate_for_simulation()?;
        Ok(s)
    }

    /// Checks every invariant and builds the run configuration.
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        self.hardware.validate()?;
        self.targets.validate()?;
        self.bounds.validate()?;
        let strategy = self.strategy()?;
        let mut chain = ChainConfig::new(self.chain.distance_km, self.chain.repeaters, strategy, self.hardware.clone());
        chain.realizations = self
            .chain
            .realizations
            .unwrap_or_else(|| default_realizations(chain.nodes()));
        chain.seed = self.seed;
        chain.options = SimOptions {
            decoherence: self.chain.decoherence,
            attempt_includes_cycle: self.chain.attempt_includes_cycle,
            ..SimOptions::default()
        };
        chain.validate()?;

        let o = &self.optimizer;
        let mut optimizer = OptimizerConfig::default().with_population(o.population);
        optimizer.generations = o.generations;
        if let Some(e) = o.elites {
            optimizer.elites = e;
        }
        if let Some(m) = o.mutant_count {
            optimizer.mutant_count = m;
        }
        optimizer.crossover_count = o
            .crossover_count
            .unwrap_or_else(|| o.population.saturating_sub(optimizer.elites + optimizer.mutant_count));
        optimizer.realizations = o.realizations;
        optimizer.penalty_weight = o.penalty_weight;
        optimizer.hill_climb_budget = o.hill_climb_budget;
        optimizer.seed = self.seed;
        optimizer.targets = self.targets;
        optimizer.bounds = self.bounds;
        optimizer.validate()?;

        Ok(RunConfig {
            targets: self.targets,
            refine: o.refine,
            chain,
            optimizer,
            file: self,
        })
    }
}

fn default_table() -> Table {
    let mut t = Table::try_from(FileConfig::default()).expect("defaults serialize");
    // Optional keys are absent from the serialized defaults.
    for (section, key) in [
        ("chain", "realizations"),
        ("optimizer", "elites"),
        ("optimizer", "crossover_count"),
        ("optimizer", "mutant_count"),
        ("optimizer", "realizations"),
        ("optimizer", "penalty_weight"),
    ] {
        if let Some(Value::Table(sub)) = t.get_mut(section) {
            sub.insert(key.into(), Value::Boolean(false));
        }
    }
    t
}

/// Sections searched for a bare key, first match wins.
const SECTION_ORDER: [&str; 5] = ["chain", "hardware", "targets", "optimizer", "bounds"];

/// Location of a bare key; accepts time keys without `_s`.
fn locate(defaults: &Table, key: &str) -> Option<(Option<String>, String)> {
    [key.to_string(), format!("{key}_s")].into_iter().find_map(|name| {
        if defaults.get(&name).is_some_and(|v| !v.is_table()) {
            return Some((None, name));
        }
        SECTION_ORDER
            .iter()
            .find(|s| defaults[**s].as_table().is_some_and(|t| t.contains_key(&name)))
            .map(|s| (Some(s.to_string()), name))
    })
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies `key=value` overrides to a parsed configuration table.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<(), ConfigError> {
    let defaults = default_table();
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::Override(item.clone(), "expected key=value".into()))?;
        let key = key.trim();
        let (section, name) = match key.split_once('.') {
            Some((s, k)) => (Some(s.to_string()), k.to_string()),
            None => locate(&defaults, key)
                .ok_or_else(|| ConfigError::Override(item.clone(), format!("unknown key `{key}`")))?,
        };
        let value = parse_value(raw);
        match section {
            None => {
                table.insert(name, value);
            }
            Some(s) => {
                let entry = table.entry(s.clone()).or_insert_with(|| Value::Table(Table::new()));
                let sub = entry
                    .as_table_mut()
                    .ok_or_else(|| ConfigError::Override(item.clone(), format!("`{s}` is not a section")))?;
                sub.insert(name, value);
            }
        }
    }
    Ok(())
}

/// Parses TOML text, or JSON if it starts with `{`. A JSON result record
/// is accepted too: its `config` member is used.
pub fn parse_table(text: &str) -> Result<Table, ConfigError> {
    if text.trim_start().starts_with('{') {
        let mut json: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(inner) = json.get_mut("config") {
            json = inner.take();
        }
        strip_nulls(&mut json);
        return Table::try_from(json).map_err(|e| ConfigError::Parse(e.to_string()));
    }
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

fn strip_nulls(v: &mut serde_json::Value) {
    if let serde_json::Value::Object(map) = v {
        map.retain(|_, x| !x.is_null());
        map.values_mut().for_each(strip_nulls);
    }
}

pub fn from_table(table: Table) -> Result<FileConfig, ConfigError> {
    FileConfig::deserialize(table).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Reads, overrides and validates a configuration. `None` means defaults.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?;
            parse_table(&text).map_err(|e| ConfigError::Parse(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    apply_overrides(&mut table, overrides)?;
    from_table(table)?.resolve()
}
