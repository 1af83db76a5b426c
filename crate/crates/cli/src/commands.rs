//! The simulate, optimize and analyze commands, producing serializable
//! records and their CSV renderings.

use std::time::Instant;

use serde::Serialize;

use repchain::analytics::{
    expected_link_time, max_distance_rate_only, max_distance_swap_asap, purification_waiting_time, qber_from_fidelity,
    qber_threshold, secret_key_rate, Targets,
};
use repchain::hardware::{Genome, Purification};
use repchain::link::LinkAttemptModel;
use repchain::optimizer::{ga_run, hill_climb, CostBreakdown, GenerationRecord, HillClimbResult};
use repchain::protocols::{dejmps_branch, epl_branch};
use repchain::quantum::{BellKind, Pauli, TwoQubitState};
use repchain::sim::estimate_metrics;

use crate::config::{FileConfig, RunConfig};
use crate::output::csv_number;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateResult {
    pub mean_fidelity: f64,
    pub fidelity_std_error: f64,
    pub rate_hz: f64,
    pub rate_std_error: f64,
    pub mean_duration_s: f64,
    pub duration_std_error_s: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: FileConfig,
    pub result: SimulateResult,
    pub wall_time_s: f64,
}

pub fn simulate(rc: &RunConfig) -> repchain::Result<SimulateRecord> {
    let start = Instant::now();
    let m = estimate_metrics(&rc.chain)?;
    Ok(SimulateRecord {
        command: "simulate",
        version: VERSION,
        seed: rc.chain.seed,
        config: rc.file.clone(),
        result: SimulateResult {
            mean_fidelity: m.mean_fidelity,
            fidelity_std_error: m.fidelity_std_error,
            rate_hz: m.rate_hz,
            rate_std_error: m.rate_std_error,
            mean_duration_s: m.mean_duration,
            duration_std_error_s: m.duration_std_error,
            realizations: m.realizations,
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

impl SimulateRecord {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let r = &self.result;
        let row = vec![
            csv_number(r.mean_fidelity),
            csv_number(r.fidelity_std_error),
            csv_number(r.rate_hz),
            csv_number(r.rate_std_error),
            csv_number(r.mean_duration_s),
            csv_number(r.duration_std_error_s),
            r.realizations.to_string(),
            self.seed.to_string(),
        ];
        crate::output::csv_table(
            &[
                "mean_fidelity",
                "fidelity_std_error",
                "rate_hz",
                "rate_std_error",
                "mean_duration_s",
                "duration_std_error_s",
                "realizations",
                "seed",
            ],
            &[row],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: FileConfig,
    pub best: Genome,
    pub best_cost: CostBreakdown,
    pub refined: Option<HillClimbResult>,
    pub log: Vec<GenerationRecord>,
    pub wall_time_s: f64,
}

pub fn optimize(rc: &RunConfig) -> repchain::Result<OptimizeRecord> {
    let start = Instant::now();
    let ga = ga_run(&rc.chain, &rc.optimizer)?;
    let refined = if rc.refine {
        Some(hill_climb(&ga.best, &rc.chain, &rc.optimizer)?)
    } else {
        None
    };
    Ok(OptimizeRecord {
        command: "optimize",
        version: VERSION,
        seed: rc.optimizer.seed,
        config: rc.file.clone(),
        best: ga.best,
        best_cost: ga.best_cost,
        refined,
        log: ga.log,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub const LOG_COLUMNS: [&str; 11] = [
    "generation",
    "best_cost",
    "mean_cost",
    "feasible_fraction",
    "alpha",
    "link_fidelity",
    "p_emd",
    "k_gates",
    "T1_s",
    "T2_s",
    "strategy",
];

impl OptimizeRecord {
    /// Generation log, one row per generation.
    pub fn log_csv(&self) -> anyhow::Result<String> {
        let rows: Vec<Vec<String>> = self
            .log
            .iter()
            .map(|r| {
                let g = &r.best;
                vec![
                    r.generation.to_string(),
                    csv_number(r.best_cost),
                    csv_number(r.mean_cost),
                    csv_number(r.feasible_fraction),
                    g.alpha().map(csv_number).unwrap_or_default(),
                    csv_number(g.link_fidelity),
                    csv_number(g.p_emd),
                    csv_number(g.k_gates),
                    csv_number(g.t1),
                    csv_number(g.t2),
                    g.strategy.scheme.to_string(),
                ]
            })
            .collect();
        crate::output::csv_table(&LOG_COLUMNS, &rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxDistanceRow {
    pub repeaters: u32,
    pub rate_only_km: f64,
    pub swap_asap_km: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxDistanceRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub targets: Targets,
    pub c_fiber: f64,
    pub alpha_att: f64,
    pub rows: Vec<MaxDistanceRow>,
}

pub fn max_distance(rc: &RunConfig, repeaters: &[u32]) -> repchain::Result<MaxDistanceRecord> {
    let hw = &rc.chain.hw;
    let rows = repeaters
        .iter()
        .map(|&n| {
            let (swap_asap_km, alpha) = max_distance_swap_asap(&rc.targets, n, hw)?;
            Ok(MaxDistanceRow {
                repeaters: n,
                rate_only_km: max_distance_rate_only(&rc.targets, n, hw)?,
                swap_asap_km,
                alpha,
            })
        })
        .collect::<repchain::Result<Vec<_>>>()?;
    Ok(MaxDistanceRecord {
        command: "analyze max-distance",
        version: VERSION,
        targets: rc.targets,
        c_fiber: hw.c_fiber,
        alpha_att: hw.alpha_att,
        rows,
    })
}

impl MaxDistanceRecord {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.repeaters.to_string(),
                    csv_number(r.rate_only_km),
                    csv_number(r.swap_asap_km),
                    csv_number(r.alpha),
                ]
            })
            .collect();
        crate::output::csv_table(&["repeaters", "rate_only_km", "swap_asap_km", "alpha"], &rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub fidelity: f64,
    pub rate_hz: f64,
    pub qber: f64,
    pub key_fraction: f64,
    pub secret_key_rate_hz: f64,
    pub qber_threshold: f64,
}

pub fn skr(fidelity: f64, rate_hz: f64) -> repchain::Result<SkrRecord> {
    if !(rate_hz >= 0.0 && rate_hz.is_finite()) {
        return Err(repchain::Error::InvalidParameter {
            name: "rate",
            reason: format!("{rate_hz} Hz must be non-negative"),
        });
    }
    let qber = qber_from_fidelity(fidelity)?;
    Ok(SkrRecord {
        command: "analyze skr",
        version: VERSION,
        fidelity,
        rate_hz,
        qber,
        key_fraction: secret_key_rate(1.0, qber)?,
        secret_key_rate_hz: secret_key_rate(rate_hz, qber)?,
        qber_threshold: qber_threshold(),
    })
}

impl SkrRecord {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        crate::output::csv_table(
            &["fidelity", "rate_hz", "qber", "key_fraction", "secret_key_rate_hz", "qber_threshold"],
            &[vec![
                csv_number(self.fidelity),
                csv_number(self.rate_hz),
                csv_number(self.qber),
                csv_number(self.key_fraction),
                csv_number(self.secret_key_rate_hz),
                csv_number(self.qber_threshold),
            ]],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurificationLevel {
    pub round: usize,
    /// Success probability of the round that produced this level.
    pub p_success: Option<f64>,
    pub fidelity: f64,
    pub waiting_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaitingTimeRecord {
    pub command: &'static str,
    pub version: &'static str,
    pub node_distance_km: f64,
    pub p_link: f64,
    pub link_time_s: f64,
    pub levels: Vec<PurificationLevel>,
}

/// Mean link time for the configured chain and, for purifying strategies,
/// the waiting time after each round with fresh elementary pairs. Round
/// success probabilities come from the circuit with the configured gates.
pub fn waiting_time(rc: &RunConfig) -> repchain::Result<WaitingTimeRecord> {
    let cfg = &rc.chain;
    let hw = &cfg.hw;
    let l = cfg.node_distance();
    let model = LinkAttemptModel::for_hardware(cfg.strategy.link, hw, l, false)?;
    let t0 = expected_link_time(model.p_succ, l, hw.t_cycle, hw.c_fiber)?;
    let fresh = model.output_state.clone();
    let purification = cfg.strategy.purification();
    let mut kept = fresh.clone();
    let mut probs = Vec::new();
    let mut levels = vec![PurificationLevel {
        round: 0,
        p_success: None,
        fidelity: kept.fidelity(BellKind::PsiPlus),
        waiting_time_s: t0,
    }];
    for round in 1..=usize::from(purification.rounds()) {
        let branch = match purification {
            Purification::Epl => epl_branch(&kept, &fresh, hw),
            _ => {
                let phi = |s: &TwoQubitState| s.pauli(1, Pauli::X);
                let mut b = dejmps_branch(&phi(&kept), &phi(&fresh), hw);
                b.state_on_success = b.state_on_success.map(|s| s.pauli(1, Pauli::X));
                b
            }
        };
        let out = branch.state_on_success.ok_or(repchain::Error::NeverSucceeds)?;
        probs.push(branch.p_success);
        kept = out;
        levels.push(PurificationLevel {
            round,
            p_success: Some(branch.p_success),
            fidelity: kept.fidelity(BellKind::PsiPlus),
            waiting_time_s: purification_waiting_time(t0, round, &probs)?,
        });
    }
    Ok(WaitingTimeRecord {
        command: "analyze waiting-time",
        version: VERSION,
        node_distance_km: l,
        p_link: model.p_succ,
        link_time_s: t0,
        levels,
    })
}

impl WaitingTimeRecord {
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let rows: Vec<Vec<String>> = self
            .levels
            .iter()
            .map(|v| {
                vec![
                    v.round.to_string(),
                    v.p_success.map(csv_number).unwrap_or_default(),
                    csv_number(v.fidelity),
                    csv_number(v.waiting_time_s),
                ]
            })
            .collect();
        crate::output::csv_table(&["round", "p_success", "fidelity", "waiting_time_s"], &rows)
    }
}
