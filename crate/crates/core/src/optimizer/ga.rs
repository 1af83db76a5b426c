use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eval_seed, evaluate, CostBreakdown, OptimizerConfig};
use crate::error::Result;
use crate::hardware::{Bounds, Genome, LinkProtocol, Scheme, Strategy};
use crate::seed;
use crate::sim::ChainConfig;

/// Summary of one generation after evaluation and ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_cost: f64,
    pub mean_cost: f64,
    pub feasible_fraction: f64,
    pub best: Genome,
    pub best_breakdown: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best: Genome,
    pub best_cost: CostBreakdown,
    /// One record per generation, the initial population included.
    pub log: Vec<GenerationRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gene {
    Alpha,
    LinkFidelity,
    PEmd,
    KGates,
    T1,
    T2,
    Scheme,
}

const NUMERIC: [Gene; 6] = [Gene::Alpha, Gene::LinkFidelity, Gene::PEmd, Gene::KGates, Gene::T1, Gene::T2];

fn genes(link: &LinkProtocol) -> Vec<Gene> {
    let mut all = NUMERIC.to_vec();
    all.push(Gene::Scheme);
    if link.alpha().is_none() {
        all.retain(|&g| g != Gene::Alpha);
    }
    all
}

fn copy_gene(dst: &mut Genome, src: &Genome, gene: Gene) {
    match gene {
        Gene::Alpha => dst.strategy.link = src.strategy.link,
        Gene::LinkFidelity => dst.link_fidelity = src.link_fidelity,
        Gene::PEmd => dst.p_emd = src.p_emd,
        Gene::KGates => dst.k_gates = src.k_gates,
        Gene::T1 => dst.t1 = src.t1,
        Gene::T2 => dst.t2 = src.t2,
        Gene::Scheme => dst.strategy.scheme = src.strategy.scheme,
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    uniform(rng, (lo.ln(), hi.ln())).exp().clamp(lo, hi)
}

/// Clamps T2 to 2 T1.
pub fn repair(g: &mut Genome) {
    g.t2 = g.t2.min(2.0 * g.t1);
}

/// Uniform draw of alpha and the link fidelity, log-uniform draw of the
/// remaining knobs, uniform choice of scheme.
pub fn random_genome<R: Rng + ?Sized>(link: &LinkProtocol, bounds: &Bounds, rng: &mut R) -> Genome {
    let link = match link {
        LinkProtocol::SingleClick { .. } => LinkProtocol::SingleClick {
            alpha: uniform(rng, bounds.alpha),
        },
        LinkProtocol::DoubleClick => LinkProtocol::DoubleClick,
    };
    let mut g = Genome {
        link_fidelity: uniform(rng, bounds.link_fidelity(&link)),
        p_emd: log_uniform(rng, bounds.p_emd),
        k_gates: log_uniform(rng, bounds.k_gates),
        t1: log_uniform(rng, bounds.t1),
        t2: log_uniform(rng, bounds.t2),
        strategy: Strategy {
            link,
            scheme: *Scheme::SEARCHABLE.choose(rng).expect("non-empty"),
        },
    };
    repair(&mut g);
    g
}

/// Single split point: genes before it come from `a`, the rest from `b`.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Genome {
    let order = genes(&a.strategy.link);
    let split = rng.random_range(1..order.len());
    let mut child = *a;
    for &gene in &order[split..] {
        copy_gene(&mut child, b, gene);
    }
    repair(&mut child);
    child
}

const MUTATION_SPAN: f64 = 1.2;
const SCHEME_REDRAW: f64 = 0.2;

/// Scales one random numeric gene by a log-uniform factor within +-20%
/// (fidelity-like genes on their error 1 - value) and redraws the scheme
/// with probability 0.2.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, bounds: &Bounds, rng: &mut R) -> Genome {
    let mut m = *g;
    let numeric: Vec<Gene> = genes(&g.strategy.link)
        .into_iter()
        .filter(|&x| x != Gene::Scheme)
        .collect();
    let gene = *numeric.choose(rng).expect("non-empty");
    let f = log_uniform(rng, (1.0 / MUTATION_SPAN, MUTATION_SPAN));
    let clamp = |x: f64, (lo, hi): (f64, f64)| x.clamp(lo, hi);
    match gene {
        Gene::Alpha => {
            if let LinkProtocol::SingleClick { alpha } = &mut m.strategy.link {
                *alpha = clamp(*alpha * f, bounds.alpha);
            }
        }
        Gene::LinkFidelity => {
            let b = bounds.link_fidelity(&m.strategy.link);
            m.link_fidelity = clamp(1.0 - (1.0 - m.link_fidelity) * f, b);
        }
        Gene::PEmd => m.p_emd = clamp(m.p_emd * f, bounds.p_emd),
        Gene::KGates => m.k_gates = clamp(m.k_gates * f, bounds.k_gates),
        Gene::T1 => m.t1 = clamp(m.t1 * f, bounds.t1),
        Gene::T2 => m.t2 = clamp(m.t2 * f, bounds.t2),
        Gene::Scheme => unreachable!(),
    }
    if rng.random::<f64>() < SCHEME_REDRAW {
        m.strategy.scheme = *Scheme::SEARCHABLE.choose(rng).expect("non-empty");
    }
    repair(&mut m);
    m
}

struct Scored {
    genome: Genome,
    cost: CostBreakdown,
}

fn rank(pop: &mut [Scored]) {
    // Stable sort keeps earlier (elite) individuals first on ties.
    pop.sort_by(|a, b| a.cost.total.total_cmp(&b.cost.total));
}

fn record(generation: usize, pop: &[Scored]) -> GenerationRecord {
    let n = pop.len() as f64;
    GenerationRecord {
        generation,
        best_cost: pop[0].cost.total,
        mean_cost: pop.iter().map(|s| s.cost.total).sum::<f64>() / n,
        feasible_fraction: pop.iter().filter(|s| s.cost.feasible()).count() as f64 / n,
        best: pop[0].genome,
        best_breakdown: pop[0].cost,
    }
}

/// Runs the GA from a seeded random initial population. The link protocol
/// family (and thus which fidelity knob is searched) is taken from
/// `cfg.strategy`.
pub fn ga_run(cfg: &ChainConfig, ocfg: &OptimizerConfig) -> Result<GaResult> {
    ocfg.validate()?;
    let mut rng = seed::stream(ocfg.seed, &[seed::phase::GA_INIT]);
    let initial = (0..ocfg.population)
        .map(|_| random_genome(&cfg.strategy.link, &ocfg.bounds, &mut rng))
        .collect();
    ga_run_from(initial, cfg, ocfg)
}

/// Runs the GA from the given initial population.
pub fn ga_run_from(initial: Vec<Genome>, cfg: &ChainConfig, ocfg: &OptimizerConfig) -> Result<GaResult> {
    ocfg.validate()?;
    for g in &initial {
        g.check_bounds(&ocfg.bounds)?;
    }
    let weight = ocfg.resolved_penalty_weight(&cfg.hw, &cfg.strategy.link)?;
    let score = |generation: usize, genomes: Vec<Genome>| -> Result<Vec<Scored>> {
        genomes
            .into_par_iter()
            .enumerate()
            .map(|(i, genome)| {
                let s = eval_seed(ocfg.seed, generation as u64, i as u64);
                let cost = evaluate(&genome, cfg, ocfg, weight, s)?;
                Ok(Scored { genome, cost })
            })
            .collect()
    };

    let mut pop = score(0, initial)?;
    rank(&mut pop);
    let mut log = vec![record(0, &pop)];
    for generation in 1..=ocfg.generations {
        pop.truncate(ocfg.elites.min(pop.len()));
        let mut rng = seed::stream(ocfg.seed, &[seed::phase::GA_VARIATION, generation as u64]);
        let mut children = Vec::with_capacity(ocfg.crossover_count + ocfg.mutant_count);
        for _ in 0..ocfg.crossover_count {
            let pair: Vec<&Scored> = if pop.len() >= 2 {
                pop.choose_multiple(&mut rng, 2).collect()
            } else {
                vec![&pop[0], &pop[0]]
            };
            children.push(crossover(&pair[0].genome, &pair[1].genome, &mut rng));
        }
        for _ in 0..ocfg.mutant_count {
            let parent = pop.choose(&mut rng).expect("elites");
            children.push(mutate(&parent.genome, &ocfg.bounds, &mut rng));
        }
        pop.extend(score(generation, children)?);
        rank(&mut pop);
        log.push(record(generation, &pop));
    }
    Ok(GaResult {
        best: pop[0].genome,
        best_cost: pop[0].cost,
        log,
    })
}
