//! Hardware-cost objective, genetic algorithm and hill-climbing refinement.
//!
//! A genome is scored by simulating the chain it describes, averaging
//! fidelity and duration over the realizations, and only then evaluating
//! `hardware_cost + A * penalty` on the means.

mod ga;
mod hill;

pub use ga::{crossover, ga_run, ga_run_from, mutate, random_genome, repair, GaResult, GenerationRecord};
pub use hill::{hill_climb, HillClimbResult};

use serde::{Deserialize, Serialize};

use crate::analytics::Targets;
use crate::error::{Error, Result};
use crate::hardware::{genome_to_params, Bounds, Genome, HardwareParams, LinkProtocol};
use crate::seed;
use crate::sim::{default_realizations, estimate_metrics, ChainConfig, Metrics};

/// Cost of moving a no-imperfection probability from `q_base` to `q`:
/// ln(q_base) / ln(q).
pub fn improvement_cost(q_base: f64, q: f64) -> Result<f64> {
    for (name, x) in [("q_base", q_base), ("q", q)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::OutOfBounds(format!(
                "{name} = {x} must lie strictly between 0 and 1"
            )));
        }
    }
    Ok(q_base.ln() / q.ln())
}

/// Cost of a coherence time under q = exp(-T_base / T), i.e. T / T_base.
pub fn coherence_cost(t_base: f64, t: f64) -> Result<f64> {
    if !(t_base > 0.0 && t > 0.0 && t.is_finite()) {
        return Err(Error::OutOfBounds(format!(
            "coherence times {t_base} -> {t} must be positive"
        )));
    }
    improvement_cost((-1.0f64).exp(), (-t_base / t).exp())
}

/// Per-knob cost terms. Every term is 1 at the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    /// eta_f for single-click, f_elem for double-click.
    pub link_fidelity: f64,
    pub p_emd: f64,
    /// The five gate-based errors, charged once through p2.
    pub gates: f64,
    pub t1: f64,
    pub t2: f64,
}

impl CostTerms {
    pub fn sum(&self) -> f64 {
        self.link_fidelity + self.p_emd + self.gates + self.t1 + self.t2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub terms: CostTerms,
    pub hardware_cost: f64,
    pub penalty: f64,
    pub penalty_weight: f64,
    pub total: f64,
    pub mean_fidelity: f64,
    pub rate_hz: f64,
}

impl CostBreakdown {
    pub fn feasible(&self) -> bool {
        self.penalty == 0.0
    }
}

fn link_fidelity_base(base: &HardwareParams, link: &LinkProtocol) -> f64 {
    match link {
        LinkProtocol::SingleClick { .. } => base.eta_f,
        LinkProtocol::DoubleClick => base.f_elem,
    }
}

pub fn hardware_cost(g: &Genome, base: &HardwareParams) -> Result<CostTerms> {
    Ok(CostTerms {
        link_fidelity: improvement_cost(link_fidelity_base(base, &g.strategy.link), g.link_fidelity)?,
        p_emd: improvement_cost(base.p_emd, g.p_emd)?,
        gates: improvement_cost(1.0 - base.p2, 1.0 - base.p2 / g.k_gates)?,
        t1: coherence_cost(base.t1, g.t1)?,
        t2: coherence_cost(base.t2, g.t2)?,
    })
}

/// Sum over the targets of [1 + (target - achieved)^2] for every target
/// missed; meeting a target exactly costs nothing.
pub fn penalty(fidelity: f64, rate: f64, targets: &Targets) -> f64 {
    [(targets.fidelity, fidelity), (targets.rate, rate)]
        .into_iter()
        .filter(|(t, y)| t - y > 0.0 || y.is_nan())
        .map(|(t, y)| {
            let d = if y.is_nan() { t } else { t - y };
            1.0 + d * d
        })
        .fold(0.0, |acc, x| acc + x)
}

/// Largest hardware cost reachable inside `bounds` for the given link type.
pub fn max_hardware_cost(base: &HardwareParams, bounds: &Bounds, link: &LinkProtocol) -> Result<f64> {
    let top = Genome {
        link_fidelity: bounds.link_fidelity(link).1,
        p_emd: bounds.p_emd.1,
        k_gates: bounds.k_gates.1,
        t1: bounds.t1.1,
        t2: bounds.t2.1,
        strategy: crate::hardware::Strategy::swap_asap(*link),
    };
    Ok(hardware_cost(&top, base)?.sum())
}

/// Penalty weight: ten times the largest reachable hardware cost.
pub fn default_penalty_weight(base: &HardwareParams, bounds: &Bounds, link: &LinkProtocol) -> Result<f64> {
    Ok(10.0 * max_hardware_cost(base, bounds, link)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub population: usize,
    pub generations: usize,
    pub elites: usize,
    pub crossover_count: usize,
    pub mutant_count: usize,
    /// Realizations per evaluation; chain-size default when absent.
    pub realizations: Option<usize>,
    /// Penalty weight A; ten times the maximum hardware cost when absent.
    pub penalty_weight: Option<f64>,
    pub hill_climb_budget: usize,
    pub seed: u64,
    pub targets: Targets,
    pub bounds: Bounds,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 120,
            generations: 500,
            elites: 24,
            crossover_count: 72,
            mutant_count: 24,
            realizations: None,
            penalty_weight: None,
            hill_climb_budget: 500,
            seed: 0,
            targets: Targets::A,
            bounds: Bounds::default(),
        }
    }
}

impl OptimizerConfig {
    /// Population `pop` split 1/5 elites, 1/5 mutants, rest crossover.
    pub fn with_population(mut self, pop: usize) -> Self {
        let fifth = ((pop as f64) / 5.0).round() as usize;
        self.population = pop;
        self.elites = fifth.max(1).min(pop);
        self.mutant_count = fifth.min(pop - self.elites);
        self.crossover_count = pop - self.elites - self.mutant_count;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Err(Error::InvalidParameter { name: "optimizer", reason });
        if self.population == 0 || self.elites == 0 {
            return invalid("population and elites must be positive".into());
        }
        if self.elites + self.crossover_count + self.mutant_count != self.population {
            return invalid(format!(
                "elites {} + crossover {} + mutants {} != population {}",
                self.elites, self.crossover_count, self.mutant_count, self.population
            ));
        }
        if self.realizations == Some(0) {
            return invalid("realizations must be positive".into());
        }
        if let Some(a) = self.penalty_weight {
            if !(a > 0.0 && a.is_finite()) {
                return invalid(format!("penalty weight {a} must be positive"));
            }
        }
        self.targets.validate()?;
        self.bounds.validate()
    }

    pub fn realizations_for(&self, nodes: usize) -> usize {
        self.realizations.unwrap_or_else(|| default_realizations(nodes))
    }

    pub fn resolved_penalty_weight(&self, base: &HardwareParams, link: &LinkProtocol) -> Result<f64> {
        match self.penalty_weight {
            Some(a) => Ok(a),
            None => default_penalty_weight(base, &self.bounds, link),
        }
    }
}

/// Cost of `g` on the chain `cfg` (distance, repeaters, base hardware,
/// seed); the strategy in `cfg` is replaced by the genome's.
pub fn total_cost(g: &Genome, cfg: &ChainConfig, ocfg: &OptimizerConfig) -> Result<CostBreakdown> {
    let weight = ocfg.resolved_penalty_weight(&cfg.hw, &g.strategy.link)?;
    evaluate(g, cfg, ocfg, weight, cfg.seed)
}

/// Simulation errors (a chain that never completes) score as zero
/// fidelity and zero rate.
pub(crate) fn evaluate(
    g: &Genome,
    cfg: &ChainConfig,
    ocfg: &OptimizerConfig,
    weight: f64,
    eval_seed: u64,
) -> Result<CostBreakdown> {
    let terms = hardware_cost(g, &cfg.hw)?;
    let mut sim = cfg.clone();
    sim.hw = genome_to_params(g, &cfg.hw, &ocfg.bounds)?;
    sim.strategy = g.strategy;
    sim.realizations = ocfg.realizations_for(cfg.nodes());
    sim.seed = eval_seed;
    let (f, r) = match estimate_metrics(&sim) {
        Ok(Metrics {
            mean_fidelity, rate_hz, ..
        }) => (mean_fidelity, rate_hz),
        Err(Error::Stalled { .. } | Error::NeverSucceeds | Error::MemoryOverflow { .. }) => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    let hardware = terms.sum();
    let pen = penalty(f, r, &ocfg.targets);
    Ok(CostBreakdown {
        terms,
        hardware_cost: hardware,
        penalty: pen,
        penalty_weight: weight,
        total: hardware + weight * pen,
        mean_fidelity: f,
        rate_hz: r,
    })
}

pub(crate) fn eval_seed(master: u64, generation: u64, individual: u64) -> u64 {
    seed::derive_seed(master, &[seed::phase::GA_EVAL, generation, individual])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_costs_match_table_annotations() {
        let c = |p2: f64| improvement_cost(0.98, 1.0 - p2).unwrap();
        assert!((c(0.0004) - 50.50).abs() < 0.01);
        assert!((c(0.0012) / 16.86 - 1.0).abs() < 0.02);
        assert!((coherence_cost(1.0, 112.0).unwrap() - 112.0).abs() < 1e-9);
    }

    #[test]
    fn certain_success_is_out_of_bounds() {
        assert!(matches!(improvement_cost(0.98, 1.0), Err(Error::OutOfBounds(_))));
    }

    #[test]
    fn penalty_examples() {
        let t = Targets::A;
        assert_eq!(penalty(0.85, 1.2, &t), 0.0);
        assert!((penalty(0.75, 1.2, &t) - 1.0025).abs() < 1e-12);
        assert!((penalty(0.75, 0.5, &t) - 2.2525).abs() < 1e-12);
        assert_eq!(penalty(0.8, 1.0, &t), 0.0);
        assert!(penalty(0.9, 2.0, &t).is_sign_positive());
    }

    #[test]
    fn baseline_costs_one_per_knob() {
        let base = HardwareParams::baseline();
        for link in [LinkProtocol::SingleClick { alpha: 0.1 }, LinkProtocol::DoubleClick] {
            let g = Genome::baseline(&base, crate::hardware::Strategy::swap_asap(link));
            let terms = hardware_cost(&g, &base).unwrap();
            assert!((terms.sum() - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn population_split() {
        let c = OptimizerConfig::default().with_population(24);
        assert_eq!((c.elites, c.crossover_count, c.mutant_count), (5, 14, 5));
        let c = OptimizerConfig::default().with_population(120);
        assert_eq!((c.elites, c.crossover_count, c.mutant_count), (24, 72, 24));
        c.validate().unwrap();
    }

    #[test]
    fn penalty_weight_dominates_costs() {
        let base = HardwareParams::baseline();
        let b = Bounds::default();
        let link = LinkProtocol::DoubleClick;
        let a = default_penalty_weight(&base, &b, &link).unwrap();
        assert!((a / max_hardware_cost(&base, &b, &link).unwrap() - 10.0).abs() < 1e-12);
        assert!(a > 1e6);
    }
}
