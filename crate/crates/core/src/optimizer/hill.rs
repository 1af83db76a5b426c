use serde::{Deserialize, Serialize};

use super::{evaluate, CostBreakdown, OptimizerConfig};
use crate::error::Result;
use crate::hardware::{Bounds, Genome};
use crate::seed;
use crate::sim::ChainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillClimbResult {
    pub genome: Genome,
    pub cost: CostBreakdown,
    pub start_cost: CostBreakdown,
    pub evaluations: usize,
}

const INITIAL_STEP: f64 = 0.05;
const STEP_FLOOR: f64 = 0.001;

#[derive(Debug, Clone, Copy)]
enum Knob {
    LinkFidelity,
    PEmd,
    KGates,
    T1,
    T2,
}

const KNOBS: [Knob; 5] = [Knob::LinkFidelity, Knob::PEmd, Knob::KGates, Knob::T1, Knob::T2];

/// `g` with one knob scaled by `factor`; the link fidelity is scaled on its
/// error 1 - value. `None` if the move leaves the bounds or changes nothing.
fn moved(g: &Genome, knob: Knob, factor: f64, b: &Bounds) -> Option<Genome> {
    let mut m = *g;
    let clamp = |x: f64, (lo, hi): (f64, f64)| x.clamp(lo, hi);
    match knob {
        Knob::LinkFidelity => {
            m.link_fidelity = clamp(1.0 - (1.0 - g.link_fidelity) * factor, b.link_fidelity(&g.strategy.link))
        }
        Knob::PEmd => m.p_emd = clamp(g.p_emd * factor, b.p_emd),
        Knob::KGates => m.k_gates = clamp(g.k_gates * factor, b.k_gates),
        Knob::T1 => m.t1 = clamp(g.t1 * factor, b.t1),
        Knob::T2 => m.t2 = clamp(g.t2 * factor, b.t2),
    }
    (m != *g && m.t2 <= 2.0 * m.t1).then_some(m)
}

/// Factors that first make the knob cheaper, then better.
fn directions(knob: Knob, step: f64) -> [f64; 2] {
    match knob {
        Knob::LinkFidelity => [1.0 + step, 1.0 - step],
        _ => [1.0 - step, 1.0 + step],
    }
}

/// Coordinate descent over the hardware knobs with per-knob multiplicative
/// steps. Protocol fields, alpha included, are never changed. All
/// evaluations share one seed so that costs are compared on the same
/// random draws.
pub fn hill_climb(start: &Genome, cfg: &ChainConfig, ocfg: &OptimizerConfig) -> Result<HillClimbResult> {
    ocfg.validate()?;
    start.check_bounds(&ocfg.bounds)?;
    let weight = ocfg.resolved_penalty_weight(&cfg.hw, &start.strategy.link)?;
    let s = seed::derive_seed(ocfg.seed, &[seed::phase::HILL_CLIMB]);
    let eval = |g: &Genome| evaluate(g, cfg, ocfg, weight, s);

    let start_cost = eval(start)?;
    let mut evaluations = 1;
    let mut best = (*start, start_cost);
    let mut steps = [INITIAL_STEP; KNOBS.len()];
    'outer: loop {
        let mut accepted = false;
        for (k, &knob) in KNOBS.iter().enumerate() {
            let mut improved = false;
            for factor in directions(knob, steps[k]) {
                let Some(candidate) = moved(&best.0, knob, factor, &ocfg.bounds) else {
                    continue;
                };
                if evaluations >= ocfg.hill_climb_budget {
                    break 'outer;
                }
                let cost = eval(&candidate)?;
                evaluations += 1;
                if cost.total < best.1.total {
                    best = (candidate, cost);
                    improved = true;
                    break;
                }
            }
            if improved {
                accepted = true;
            } else {
                steps[k] = (steps[k] / 2.0).max(STEP_FLOOR);
            }
        }
        if !accepted && steps.iter().all(|&x| x <= STEP_FLOOR) {
            break;
        }
    }
    Ok(HillClimbResult {
        genome: best.0,
        cost: best.1,
        start_cost,
        evaluations,
    })
}
