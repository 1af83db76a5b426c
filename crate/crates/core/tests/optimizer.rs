use repchain::analytics::Targets;
use repchain::hardware::{HardwareParams, LinkProtocol, Strategy};
use repchain::optimizer::{ga_run, ga_run_from, hill_climb, total_cost, OptimizerConfig};
use repchain::hardware::Genome;
use repchain::sim::ChainConfig;

fn sc_chain() -> ChainConfig {
    ChainConfig::new(
        200.0,
        0,
        Strategy::swap_asap(LinkProtocol::SingleClick { alpha: 0.16 }),
        HardwareParams::baseline(),
    )
}

fn small_config() -> OptimizerConfig {
    let mut o = OptimizerConfig::default().with_population(10);
    o.generations = 5;
    o.realizations = Some(20);
    o.seed = 17;
    o
}

/// The 200 km single-click record as a genome.
fn record_genome(t2: f64) -> Genome {
    let base = HardwareParams::baseline();
    let mut g = Genome::baseline(&base, Strategy::swap_asap(LinkProtocol::SingleClick { alpha: 0.16 }));
    g.link_fidelity = 0.8022 / 0.84;
    g.p_emd = 0.3955;
    g.t2 = t2;
    g
}

#[test]
fn baseline_genome_meeting_targets_costs_one_per_knob() {
    let cfg = ChainConfig::new(20.0, 0, Strategy::swap_asap(LinkProtocol::DoubleClick), HardwareParams::baseline());
    let mut o = small_config();
    o.targets = Targets::new(0.5, 1e-3).unwrap();
    let g = Genome::baseline(&cfg.hw, cfg.strategy);
    let c = total_cost(&g, &cfg, &o).unwrap();
    assert!((c.hardware_cost - 5.0).abs() < 1e-12);
    assert_eq!(c.penalty, 0.0);
    assert_eq!(c.total, c.hardware_cost);
}

#[test]
fn missed_targets_dominate_cost() {
    let cfg = sc_chain();
    let o = small_config();
    let g = Genome::baseline(&cfg.hw, Strategy::swap_asap(LinkProtocol::SingleClick { alpha: 0.4 }));
    let c = total_cost(&g, &cfg, &o).unwrap();
    assert!(c.penalty > 2.0);
    assert!(c.penalty_weight * c.penalty > 1e3 * c.hardware_cost);
    assert_eq!(c.total, c.hardware_cost + c.penalty_weight * c.penalty);
}

#[test]
fn closed_population_keeps_its_cost() {
    let cfg = sc_chain();
    let o = small_config();
    let g = record_genome(1.0);
    let r = ga_run_from(vec![g; o.population], &cfg, &o).unwrap();
    assert_eq!(r.log.len(), o.generations + 1);
    // Crossover of clones is a clone; mutants may only displace the elite
    // by being cheaper.
    for w in r.log.windows(2) {
        assert!(w[1].best_cost <= w[0].best_cost);
    }
}

#[test]
fn identical_genomes_without_mutation_stay_constant() {
    let cfg = sc_chain();
    let mut o = small_config();
    o.crossover_count += o.mutant_count;
    o.mutant_count = 0;
    let g = record_genome(1.0);
    let r = ga_run_from(vec![g; o.population], &cfg, &o).unwrap();
    let first = r.log[0].best_cost;
    assert!(r.log.iter().all(|rec| rec.best_cost == first && rec.best == g));
}

#[test]
fn ga_log_is_monotone_in_bounds_and_reproducible() {
    let cfg = sc_chain();
    let o = small_config();
    let a = ga_run(&cfg, &o).unwrap();
    let b = ga_run(&cfg, &o).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.log.len(), o.generations + 1);
    for w in a.log.windows(2) {
        assert!(w[1].best_cost <= w[0].best_cost);
    }
    for rec in &a.log {
        rec.best.check_bounds(&o.bounds).unwrap();
        assert!((0.0..=1.0).contains(&rec.feasible_fraction));
        assert!(rec.mean_cost >= rec.best_cost);
    }
    let mut other = o.clone();
    other.seed += 1;
    assert_ne!(ga_run(&cfg, &other).unwrap().log, a.log);
}

#[test]
fn hill_climb_drops_needless_coherence_time() {
    let cfg = sc_chain();
    let mut o = small_config();
    o.realizations = Some(50);
    let start = record_genome(8.0);
    let mut halved = cfg.clone();
    halved.seed = 3;
    assert!(total_cost(&record_genome(4.0), &halved, &o).unwrap().feasible());
    let r = hill_climb(&start, &cfg, &o).unwrap();
    assert!(r.start_cost.feasible());
    assert!(r.genome.t2 < start.t2, "{r:?}");
    assert!(r.cost.total < r.start_cost.total);
    assert!(r.cost.feasible());
    assert_eq!(r.genome.strategy, start.strategy);
    assert!(r.evaluations <= o.hill_climb_budget);
}

#[test]
fn hill_climb_keeps_a_local_optimum() {
    let cfg = ChainConfig::new(20.0, 0, Strategy::swap_asap(LinkProtocol::DoubleClick), HardwareParams::baseline());
    let mut o = small_config();
    o.targets = Targets::new(0.5, 1e-3).unwrap();
    let start = Genome::baseline(&cfg.hw, cfg.strategy);
    let r = hill_climb(&start, &cfg, &o).unwrap();
    assert_eq!(r.genome, start);
    assert_eq!(r.cost.total, r.start_cost.total);
}
