//! Discrete-event simulation of an equally spaced repeater chain.
//!
//! Nodes `0..N` sit on a line with `N = 2^n + 1`; segment `s` is the fiber
//! between nodes `s` and `s + 1`. Every link is tracked as a two-qubit state
//! in the Psi+ frame, qubit 0 at its lower-index end. Memory decoherence is
//! applied lazily: each stored qubit carries the time up to which noise has
//! been applied, and is brought up to date right before it is used.
//!
//! Scheduling rules:
//! - A node generates with at most one neighbor at a time, never while it is
//!   busy with local operations, and only with a free memory slot at both ends.
//!   A free node prefers the neighboring segment holding fewer links, ties
//!   going to the left.
//! - SWAP-ASAP: every segment is generated once; a repeater swaps as soon as
//!   it holds links on both sides.
//! - BDCZ: node `i` swaps only links reaching `i -+ 2^h`, `h` the number of
//!   trailing zero bits of `i`. Elementary links are purified first, one
//!   fresh pair per round; a failed round discards both pairs and restarts.
//! - A swap outcome reaches the farther chain end after
//!   `max(i, N-1-i) L_node / c`; a purification outcome is known to both ends
//!   of its segment after `L_node / c`. The realization ends when the end
//!   nodes share a pair and know every outcome.

mod queue;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hardware::{ChainProtocol, HardwareParams, Purification, Strategy};
use crate::link::{sample_attempts, LinkAttemptModel};
use crate::protocols::{
    dejmps_branch, dejmps_ops_time, epl_branch, epl_ops_time, swap_ops_time, swap_output,
};
use crate::quantum::{decohere_in_place, BellKind, Pauli, TwoQubitState};
use crate::seed::{self, StreamRng};
use queue::EventQueue;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// Add the emission delay T_cycle to every generation attempt.
    pub attempt_includes_cycle: bool,
    /// Apply T1/T2 memory noise to stored qubits.
    pub decoherence: bool,
    /// Replace the protocol's heralded state (success probability unchanged).
    pub link_state: Option<TwoQubitState>,
    /// Record per-qubit decoherence bookkeeping in the outcome.
    pub audit: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            attempt_includes_cycle: true,
            decoherence: true,
            link_state: None,
            audit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub total_distance_km: f64,
    pub num_repeaters: usize,
    pub strategy: Strategy,
    pub hw: HardwareParams,
    pub realizations: usize,
    pub seed: u64,
    pub options: SimOptions,
}

impl ChainConfig {
    pub fn new(total_distance_km: f64, num_repeaters: usize, strategy: Strategy, hw: HardwareParams) -> Self {
        Self {
            total_distance_km,
            num_repeaters,
            strategy,
            hw,
            realizations: default_realizations(num_repeaters + 2),
            seed: 0,
            options: SimOptions::default(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.num_repeaters + 2
    }

    pub fn node_distance(&self) -> f64 {
        self.total_distance_km / (self.nodes() - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let segments = self.nodes() - 1;
        if !segments.is_power_of_two() {
            return Err(Error::InvalidChain(format!(
                "{} nodes is not 2^n + 1",
                self.nodes()
            )));
        }
        if !(self.total_distance_km > 0.0 && self.total_distance_km.is_finite()) {
            return Err(Error::InvalidChain(format!(
                "total distance {} km must be positive",
                self.total_distance_km
            )));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidChain("at least one realization is required".into()));
        }
        self.strategy.validate_for_simulation()?;
        self.hw.validate()?;
        if let Some(s) = &self.options.link_state {
            s.check_invariants().map_err(|reason| Error::InvalidParameter {
                name: "link_state",
                reason,
            })?;
        }
        Ok(())
    }
}

/// Realizations per estimate: 200 for chains of at most 3 nodes, else 100.
pub fn default_realizations(nodes: usize) -> usize {
    if nodes <= 3 {
        200
    } else {
        100
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub attempts: u64,
    pub links: u64,
    pub purification_successes: u64,
    pub purification_failures: u64,
    pub swaps: u64,
}

/// Decoherence bookkeeping of one qubit from creation to consumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAudit {
    pub node: usize,
    pub created: f64,
    pub consumed: f64,
    /// Sum of all storage intervals for which noise was applied.
    pub applied: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub end_state: TwoQubitState,
    pub duration: f64,
    pub counts: EventCounts,
    pub audit: Vec<QubitAudit>,
}

impl SimulationOutcome {
    pub fn fidelity(&self) -> f64 {
        self.end_state.fidelity(BellKind::PsiPlus)
    }
}

#[derive(Debug, Clone, Copy)]
struct Qubit {
    node: usize,
    created: f64,
    clock: f64,
    applied: f64,
}

#[derive(Debug, Clone)]
struct Link {
    ends: [Qubit; 2],
    state: TwoQubitState,
}

impl Link {
    fn left(&self) -> usize {
        self.ends[0].node
    }

    fn right(&self) -> usize {
        self.ends[1].node
    }
}

type LinkId = usize;

#[derive(Debug, Clone, Default)]
struct Node {
    busy_until: f64,
    generating: bool,
    slots: usize,
    /// Ready link whose other end is at a lower index.
    left: Option<LinkId>,
    /// Ready link whose other end is at a higher index.
    right: Option<LinkId>,
}

#[derive(Debug, Clone, Default)]
struct Segment {
    generating: bool,
    generated: bool,
    held: Option<LinkId>,
    fresh: Option<LinkId>,
    rounds: u8,
    purifying: bool,
    done: bool,
}

enum Event {
    Herald { segment: usize, link: Link },
    Purified { segment: usize, out: Option<Link> },
    Swapped { link: Link, known_at: f64 },
    Wake,
}

/// Precomputed per-configuration quantities shared by all realizations.
#[derive(Debug, Clone)]
pub struct Chain {
    cfg: ChainConfig,
    model: LinkAttemptModel,
    link_state: TwoQubitState,
    l_node: f64,
}

impl Chain {
    pub fn new(cfg: &ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let l_node = cfg.node_distance();
        let model = LinkAttemptModel::for_hardware(
            cfg.strategy.link,
            &cfg.hw,
            l_node,
            cfg.options.attempt_includes_cycle,
        )?;
        if !(model.p_succ > 0.0) {
            return Err(Error::NeverSucceeds);
        }
        let link_state = cfg
            .options
            .link_state
            .clone()
            .unwrap_or_else(|| model.output_state.clone());
        Ok(Self {
            cfg: cfg.clone(),
            model,
            link_state,
            l_node,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn link_model(&self) -> &LinkAttemptModel {
        &self.model
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SimulationOutcome> {
        Run::new(self).execute(rng)
    }
}

pub fn run_realization<R: Rng + ?Sized>(cfg: &ChainConfig, rng: &mut R) -> Result<SimulationOutcome> {
    Chain::new(cfg)?.run(rng)
}

/// Random stream of realization `index` under master seed `seed`.
pub fn realization_rng(seed: u64, index: u64) -> StreamRng {
    seed::stream(seed, &[seed::phase::SIMULATION, index])
}

struct Run<'a> {
    chain: &'a Chain,
    hw: &'a HardwareParams,
    n: usize,
    rounds_needed: u8,
    nested: bool,
    nodes: Vec<Node>,
    segments: Vec<Segment>,
    links: Vec<Option<Link>>,
    queue: EventQueue<Event>,
    counts: EventCounts,
    audit: Vec<QubitAudit>,
    latest_notice: f64,
}

impl<'a> Run<'a> {
    fn new(chain: &'a Chain) -> Self {
        let n = chain.cfg.nodes();
        let nested = chain.cfg.strategy.chain() == ChainProtocol::Bdcz;
        Self {
            chain,
            hw: &chain.cfg.hw,
            n,
            rounds_needed: if nested { chain.cfg.strategy.purification().rounds() } else { 0 },
            nested,
            nodes: vec![Node::default(); n],
            segments: vec![Segment::default(); n - 1],
            links: Vec::new(),
            queue: EventQueue::new(),
            counts: EventCounts::default(),
            audit: Vec::new(),
            latest_notice: 0.0,
        }
    }

    fn execute<R: Rng + ?Sized>(mut self, rng: &mut R) -> Result<SimulationOutcome> {
        self.progress(0.0, rng)?;
        while let Some((now, event)) = self.queue.pop() {
            if let Some(id) = self.handle(now, event) {
                return self.finish(now, id);
            }
            self.progress(now, rng)?;
        }
        Err(Error::Stalled { time: f64::NAN })
    }

    fn insert(&mut self, link: Link) -> LinkId {
        self.links.push(Some(link));
        self.links.len() - 1
    }

    fn take(&mut self, id: LinkId) -> Link {
        self.links[id].take().expect("live link")
    }

    fn link(&self, id: LinkId) -> &Link {
        self.links[id].as_ref().expect("live link")
    }

    /// Brings one end of a link up to time `t`.
    fn age(&self, link: &mut Link, side: usize, t: f64) {
        let q = &mut link.ends[side];
        let dt = t - q.clock;
        debug_assert!(dt >= -1e-15, "time runs backwards: {dt}");
        let dt = dt.max(0.0);
        if dt > 0.0 && self.chain.cfg.options.decoherence {
            let mut rho = link.state.clone().into_matrix();
            decohere_in_place(&mut rho, side, dt, self.hw.t1, self.hw.t2).expect("validated coherence times");
            link.state = TwoQubitState::from_matrix_unchecked(rho);
        }
        q.clock = t;
        q.applied += dt;
    }

    fn consume(&mut self, q: &Qubit, t: f64) {
        if self.chain.cfg.options.audit {
            self.audit.push(QubitAudit {
                node: q.node,
                created: q.created,
                consumed: t,
                applied: q.applied,
            });
        }
    }

    fn is_final(&self, link: &Link) -> bool {
        link.left() == 0 && link.right() == self.n - 1
    }

    /// Installs a ready link at its end nodes; returns its id if it spans the chain.
    fn install(&mut self, link: Link) -> Option<LinkId> {
        let (a, c) = (link.left(), link.right());
        let done = self.is_final(&link);
        let id = self.insert(link);
        self.nodes[a].right = Some(id);
        self.nodes[c].left = Some(id);
        done.then_some(id)
    }

    fn handle(&mut self, now: f64, event: Event) -> Option<LinkId> {
        match event {
            Event::Herald { segment, link } => {
                self.counts.links += 1;
                self.nodes[segment].generating = false;
                self.nodes[segment + 1].generating = false;
                let seg = &mut self.segments[segment];
                seg.generating = false;
                if !self.nested {
                    return self.install(link);
                }
                if seg.held.is_none() {
                    if self.rounds_needed == 0 {
                        seg.done = true;
                        return self.install(link);
                    }
                    let id = self.insert(link);
                    self.segments[segment].held = Some(id);
                } else {
                    let id = self.insert(link);
                    self.segments[segment].fresh = Some(id);
                }
                None
            }
            Event::Purified { segment, out } => {
                self.segments[segment].purifying = false;
                match out {
                    Some(link) => {
                        self.counts.purification_successes += 1;
                        self.segments[segment].rounds += 1;
                        if self.segments[segment].rounds >= self.rounds_needed {
                            self.segments[segment].done = true;
                            return self.install(link);
                        }
                        let id = self.insert(link);
                        self.segments[segment].held = Some(id);
                    }
                    None => {
                        self.counts.purification_failures += 1;
                        self.segments[segment].rounds = 0;
                        self.nodes[segment].slots -= 1;
                        self.nodes[segment + 1].slots -= 1;
                    }
                }
                None
            }
            Event::Swapped { link, known_at } => {
                self.latest_notice = self.latest_notice.max(known_at);
                let _ = now;
                self.install(link)
            }
            Event::Wake => None,
        }
    }

    fn finish(mut self, now: f64, id: LinkId) -> Result<SimulationOutcome> {
        let t_end = now.max(self.latest_notice);
        let mut link = self.take(id);
        self.age(&mut link, 0, t_end);
        self.age(&mut link, 1, t_end);
        for q in link.ends {
            self.consume(&q, t_end);
        }
        Ok(SimulationOutcome {
            end_state: link.state,
            duration: t_end,
            counts: self.counts,
            audit: self.audit,
        })
    }

    fn free(&self, node: usize, now: f64) -> bool {
        let nd = &self.nodes[node];
        !nd.generating && nd.busy_until <= now
    }

    fn progress<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R) -> Result<()> {
        self.try_swaps(now);
        if self.nested && self.rounds_needed > 0 {
            self.try_purifications(now, rng);
        }
        self.try_generation(now, rng)
    }

    fn swap_allowed(&self, i: usize, left: &Link, right: &Link) -> bool {
        if !self.nested {
            return true;
        }
        let reach = 1usize << i.trailing_zeros();
        left.left() + reach == i && right.right() == i + reach
    }

    fn try_swaps(&mut self, now: f64) {
        for i in 1..self.n - 1 {
            let (Some(lid), Some(rid)) = (self.nodes[i].left, self.nodes[i].right) else {
                continue;
            };
            if !self.free(i, now) || !self.swap_allowed(i, self.link(lid), self.link(rid)) {
                continue;
            }
            let mut l = self.take(lid);
            let mut r = self.take(rid);
            let (a, c) = (l.left(), r.right());
            self.nodes[a].right = None;
            self.nodes[c].left = None;
            self.nodes[i].left = None;
            self.nodes[i].right = None;
            let t_end = now + swap_ops_time(self.hw);
            self.age(&mut l, 1, t_end);
            self.age(&mut r, 0, t_end);
            self.consume(&l.ends[1].clone(), t_end);
            self.consume(&r.ends[0].clone(), t_end);
            let state = swap_output(&l.state, &r.state, self.hw, BellKind::PsiPlus);
            let link = Link {
                ends: [l.ends[0], r.ends[1]],
                state,
            };
            self.nodes[i].busy_until = t_end;
            self.nodes[i].slots -= 2;
            self.counts.swaps += 1;
            let reach = i.max(self.n - 1 - i) as f64 * self.chain.l_node / self.hw.c_fiber;
            self.queue.push(
                t_end,
                Event::Swapped {
                    link,
                    known_at: t_end + reach,
                },
            );
        }
    }

    fn try_purifications<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R) {
        for s in 0..self.n - 1 {
            let seg = &self.segments[s];
            if seg.done || seg.purifying || !self.free(s, now) || !self.free(s + 1, now) {
                continue;
            }
            let (Some(hid), Some(fid)) = (seg.held, seg.fresh) else {
                continue;
            };
            let mut kept = self.take(hid);
            let mut fresh = self.take(fid);
            self.segments[s].held = None;
            self.segments[s].fresh = None;
            let purification = self.chain.cfg.strategy.purification();
            let ops = match purification {
                Purification::Epl => epl_ops_time(self.hw),
                _ => dejmps_ops_time(self.hw),
            };
            let t_end = now + ops;
            for side in 0..2 {
                self.age(&mut kept, side, t_end);
                self.age(&mut fresh, side, t_end);
            }
            for q in fresh.ends {
                self.consume(&q, t_end);
            }
            let branch = match purification {
                Purification::Epl => epl_branch(&kept.state, &fresh.state, self.hw),
                _ => {
                    // DEJMPS is written for the Phi+ frame.
                    let to_phi = |s: &TwoQubitState| s.pauli(1, Pauli::X);
                    let mut b = dejmps_branch(&to_phi(&kept.state), &to_phi(&fresh.state), self.hw);
                    b.state_on_success = b.state_on_success.map(|s| s.pauli(1, Pauli::X));
                    b
                }
            };
            let success = branch.p_success > 0.0 && rng.random::<f64>() < branch.p_success;
            let out = if success {
                kept.state = branch.state_on_success.expect("state on success");
                Some(kept)
            } else {
                for q in kept.ends {
                    self.consume(&q, t_end);
                }
                None
            };
            self.nodes[s].slots -= 1;
            self.nodes[s + 1].slots -= 1;
            self.nodes[s].busy_until = t_end;
            self.nodes[s + 1].busy_until = t_end;
            self.segments[s].purifying = true;
            self.queue.push(t_end, Event::Wake);
            self.queue.push(
                t_end + self.chain.l_node / self.hw.c_fiber,
                Event::Purified { segment: s, out },
            );
        }
    }

    fn link_count(&self, s: usize) -> usize {
        let seg = &self.segments[s];
        usize::from(seg.held.is_some()) + usize::from(seg.fresh.is_some())
    }

    fn needs_link(&self, s: usize) -> bool {
        let seg = &self.segments[s];
        if seg.generating {
            return false;
        }
        if !self.nested {
            return !seg.generated;
        }
        if seg.done || seg.purifying {
            return false;
        }
        seg.held.is_none() || (self.rounds_needed > 0 && seg.fresh.is_none())
    }

    fn try_generation<R: Rng + ?Sized>(&mut self, now: f64, rng: &mut R) -> Result<()> {
        let capacity = self.hw.n_qubits;
        for i in 0..self.n {
            if !self.free(i, now) {
                continue;
            }
            let candidates = [i.checked_sub(1), (i + 1 < self.n).then_some(i)];
            let choice = candidates
                .into_iter()
                .flatten()
                .filter(|&s| {
                    let other = if s == i { i + 1 } else { s };
                    self.needs_link(s)
                        && self.free(other, now)
                        && self.nodes[i].slots < capacity
                        && self.nodes[other].slots < capacity
                })
                .min_by_key(|&s| (self.link_count(s), s));
            let Some(s) = choice else {
                continue;
            };
            let attempts = sample_attempts(self.chain.model.p_succ, rng)?;
            let herald = now + attempts as f64 * self.chain.model.attempt_time;
            let created = herald - self.chain.l_node / self.hw.c_fiber;
            let qubit = |node| Qubit {
                node,
                created,
                clock: created,
                applied: 0.0,
            };
            let link = Link {
                ends: [qubit(s), qubit(s + 1)],
                state: self.chain.link_state.clone(),
            };
            for node in [s, s + 1] {
                let nd = &mut self.nodes[node];
                nd.generating = true;
                nd.slots += 1;
                if nd.slots > capacity {
                    return Err(Error::MemoryOverflow {
                        node,
                        used: nd.slots,
                        capacity,
                    });
                }
            }
            let seg = &mut self.segments[s];
            seg.generating = true;
            seg.generated = true;
            self.counts.attempts += attempts;
            self.queue.push(herald, Event::Herald { segment: s, link });
        }
        Ok(())
    }
}

/// Aggregate of many realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mean_fidelity: f64,
    pub fidelity_std_error: f64,
    pub mean_duration: f64,
    pub duration_std_error: f64,
    /// Inverse of the mean duration, Hz.
    pub rate_hz: f64,
    /// Delta-method standard error of the rate.
    pub rate_std_error: f64,
    pub realizations: usize,
}

fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl Metrics {
    /// Aggregates (fidelity, duration) samples in the given order.
    pub fn from_samples(samples: &[(f64, f64)]) -> Self {
        let f: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let t: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let (mean_fidelity, fidelity_std_error) = mean_and_std_error(&f);
        let (mean_duration, duration_std_error) = mean_and_std_error(&t);
        Self {
            mean_fidelity,
            fidelity_std_error,
            mean_duration,
            duration_std_error,
            rate_hz: 1.0 / mean_duration,
            rate_std_error: duration_std_error / (mean_duration * mean_duration),
            realizations: samples.len(),
        }
    }
}

/// Runs `cfg.realizations` independent realizations in parallel, each on
/// its own derived stream, and aggregates them in index order.
pub fn estimate_metrics(cfg: &ChainConfig) -> Result<Metrics> {
    let chain = Chain::new(cfg)?;
    let samples = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|i| {
            let out = chain.run(&mut realization_rng(cfg.seed, i))?;
            Ok((out.fidelity(), out.duration))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics::from_samples(&samples))
}
