//! Closed-form oracles: waiting times, swap-chain fidelity, maximum
//! distances and QBER / secret-key-rate conversions.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::hardware::HardwareParams;
use crate::link::detection_probability;

/// Performance targets: end-to-end fidelity and rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Targets {
    #[serde(rename = "F_t")]
    pub fidelity: f64,
    /// Hz.
    #[serde(rename = "R_t")]
    pub rate: f64,
}

impl Targets {
    pub const A: Targets = Targets {
        fidelity: 0.8,
        rate: 1.0,
    };
    pub const B: Targets = Targets {
        fidelity: 0.9,
        rate: 0.1,
    };

    pub fn new(fidelity: f64, rate: f64) -> Result<Self> {
        let t = Self { fidelity, rate };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fidelity > 0.25 && self.fidelity <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "F_t",
                reason: format!("{} is outside (0.25, 1]", self.fidelity),
            });
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "R_t",
                reason: format!("{} Hz must be positive", self.rate),
            });
        }
        Ok(())
    }
}

impl Default for Targets {
    fn default() -> Self {
        Targets::A
    }
}

/// Mean time to herald one link: (T_cycle + L/c) / p_gen.
pub fn expected_link_time(p_gen: f64, l_km: f64, t_cycle: f64, c_fiber: f64) -> Result<f64> {
    check_probability("p_gen", p_gen)?;
    if p_gen == 0.0 {
        return Err(Error::NeverSucceeds);
    }
    Ok((t_cycle + 2.0 * (l_km / 2.0) / c_fiber) / p_gen)
}

/// Waiting time for a pair purified `d` times with fresh pairs, by the
/// recursion T_{k+1} = (T_k + T0) / p_k.
pub fn purification_waiting_time(t0: f64, d: usize, p_succ_seq: &[f64]) -> Result<f64> {
    if p_succ_seq.len() < d {
        return Err(Error::InvalidParameter {
            name: "p_succ_seq",
            reason: format!("{} probabilities for {d} rounds", p_succ_seq.len()),
        });
    }
    let mut t = t0;
    for &p in &p_succ_seq[..d] {
        check_probability("p_succ", p)?;
        if p == 0.0 {
            return Err(Error::NeverSucceeds);
        }
        t = (t + t0) / p;
    }
    Ok(t)
}

/// Solution of the purification recursion for a constant success
/// probability: T0 (p^-d + sum_{j=1..d} p^-j).
pub fn purification_waiting_time_constant(t0: f64, d: usize, p: f64) -> Result<f64> {
    check_probability("p_succ", p)?;
    if p == 0.0 {
        return Err(Error::NeverSucceeds);
    }
    let inv = 1.0 / p;
    let geometric: f64 = (1..=d).map(|j| inv.powi(j as i32)).sum();
    Ok(t0 * (inv.powi(d as i32) + geometric))
}

fn werner_parameter(f: f64) -> f64 {
    (4.0 * f - 1.0) / 3.0
}

/// Fidelity after chaining `links` elementary links of fidelity `f_elem`
/// with `links - 1` swaps, as the textbook Werner bound with a per-swap
/// noise bracket (1-p1)^2 (1-p2) (3 + 4(xi0 xi1 - xi0 - xi1)) / 3.
pub fn swap_chain_fidelity(f_elem: f64, links: u32, hw: &HardwareParams) -> Result<f64> {
    check_fidelity(f_elem)?;
    let bracket = (1.0 - hw.p1).powi(2)
        * (1.0 - hw.p2)
        * (3.0 + 4.0 * (hw.xi0 * hw.xi1 - hw.xi0 - hw.xi1))
        / 3.0;
    Ok(chain(bracket, f_elem, links))
}

/// Exact end-to-end fidelity of a chain of Werner links under this crate's
/// swap circuit (depolarizing gate noise, readout flips choosing the
/// correction).
///
/// Bell-measurement outcomes on Bell-diagonal inputs are uniform, so each
/// reported bit is right with probability 1 - xi_bar, xi_bar = (xi0 + xi1)/2.
/// Depolarizing the Hadamard qubit right before readout leaves its bit right
/// only half the time. The two-qubit depolarization before the Hadamard
/// scrambles the output completely.
pub fn werner_chain_fidelity(f_elem: f64, links: u32, hw: &HardwareParams) -> Result<f64> {
    check_fidelity(f_elem)?;
    let ok = 1.0 - (hw.xi0 + hw.xi1) / 2.0;
    let q = (1.0 - hw.p1) * ok * ok + hw.p1 * ok / 2.0;
    let bracket = (1.0 - hw.p2) * (4.0 * q - 1.0) / 3.0;
    Ok(chain(bracket, f_elem, links))
}

fn chain(bracket: f64, f_elem: f64, links: u32) -> f64 {
    let swaps = links.saturating_sub(1) as i32;
    0.25 + 0.75 * bracket.powi(swaps) * werner_parameter(f_elem).powi(links as i32)
}

fn check_fidelity(f: f64) -> Result<()> {
    if (0.25..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "F",
            reason: format!("{f} is outside [0.25, 1]"),
        })
    }
}

/// Search bracket for total distances, km.
pub const DISTANCE_BRACKET: (f64, f64) = (1.0, 5000.0);

/// Brent's method on [a, b]; requires a sign change.
pub fn brent<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoRoot { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

/// Rate of single-click link generation with bright-state parameter
/// `alpha` at node separation `l_node`, with perfect detectors. With at
/// least one repeater the nodes alternate between neighbors, halving it.
fn link_rate(alpha: f64, l_node: f64, repeaters: u32, hw: &HardwareParams) -> f64 {
    let eta = detection_probability(1.0, l_node, hw.alpha_att).unwrap_or(0.0);
    let share = if repeaters == 0 { 1.0 } else { 0.5 };
    share * 2.0 * alpha * eta / (hw.t_cycle + l_node / hw.c_fiber)
}

/// Largest total distance at which the rate target can be met at all
/// (alpha = 0.5, perfect memories and detectors).
pub fn max_distance_rate_only(targets: &Targets, repeaters: u32, hw: &HardwareParams) -> Result<f64> {
    targets.validate()?;
    let segments = f64::from(repeaters + 1);
    let g = |d: f64| link_rate(0.5, d / segments, repeaters, hw) - targets.rate;
    brent(g, DISTANCE_BRACKET.0, DISTANCE_BRACKET.1, 1e-6)
}

/// Bright-state parameter at which noiseless SWAP-ASAP over `repeaters + 1`
/// single-click links reaches the fidelity target with unit state efficiency.
pub fn swap_asap_alpha(targets: &Targets, repeaters: u32) -> Result<f64> {
    targets.validate()?;
    let links = f64::from(repeaters + 1);
    let w = ((targets.fidelity - 0.25) * 4.0 / 3.0).powf(1.0 / links);
    Ok((3.0 - 3.0 * w) / 4.0)
}

/// Largest total distance for SWAP-ASAP with single-click links, trading
/// fidelity against rate through alpha. Returns (distance km, alpha).
pub fn max_distance_swap_asap(targets: &Targets, repeaters: u32, hw: &HardwareParams) -> Result<(f64, f64)> {
    let alpha = swap_asap_alpha(targets, repeaters)?;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "F_t",
            reason: format!("fidelity target needs alpha = {alpha}"),
        });
    }
    let segments = f64::from(repeaters + 1);
    let g = |d: f64| link_rate(alpha, d / segments, repeaters, hw) - targets.rate;
    Ok((brent(g, DISTANCE_BRACKET.0, DISTANCE_BRACKET.1, 1e-6)?, alpha))
}

pub fn qber_from_fidelity(f: f64) -> Result<f64> {
    check_fidelity(f)?;
    Ok(2.0 * (1.0 - f) / 3.0)
}

pub fn fidelity_from_qber(q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidParameter {
            name: "Q",
            reason: format!("{q} is outside [0, 0.5]"),
        });
    }
    Ok(1.0 - 1.5 * q)
}

/// Binary entropy in bits, with H(0) = H(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// BB84 secret-key rate R max(0, 1 - 2 H(Q)).
pub fn secret_key_rate(rate: f64, q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidParameter {
            name: "Q",
            reason: format!("{q} is outside [0, 0.5]"),
        });
    }
    Ok(rate * (1.0 - 2.0 * binary_entropy(q)).max(0.0))
}

/// QBER at which the BB84 key fraction 1 - 2 H(Q) vanishes, by bisection.
pub fn qber_threshold() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - 2.0 * binary_entropy(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_time_examples() {
        let t = expected_link_time(1.0, 100.0, 3.8e-6, 2e5).unwrap();
        assert!((t - (3.8e-6 + 5e-4)).abs() < 1e-18);
        let t = expected_link_time(4.6e-4, 100.0, 3.8e-6, 2e5).unwrap();
        assert!((t - 1.095_217_391_304_347_8).abs() < 1e-12);
        assert_eq!(expected_link_time(1.0, 0.0, 3.8e-6, 2e5).unwrap(), 3.8e-6);
        assert!(expected_link_time(0.0, 1.0, 0.0, 2e5).is_err());
    }

    #[test]
    fn purification_recursion() {
        assert_eq!(purification_waiting_time(2.5, 0, &[]).unwrap(), 2.5);
        assert_eq!(purification_waiting_time(1.0, 1, &[0.5]).unwrap(), 4.0);
        assert!(purification_waiting_time(1.0, 1, &[0.0]).is_err());
        for d in 0..=3 {
            for p in [0.3, 0.5, 0.9] {
                let rec = purification_waiting_time(1.7, d, &vec![p; d]).unwrap();
                let closed = purification_waiting_time_constant(1.7, d, p).unwrap();
                assert!((rec - closed).abs() < 1e-12 * rec, "d={d} p={p}");
            }
        }
    }

    #[test]
    fn swap_chain_examples() {
        let clean = HardwareParams::baseline().noiseless_gates();
        for l in 1..6 {
            assert!((swap_chain_fidelity(1.0, l, &clean).unwrap() - 1.0).abs() < 1e-15);
        }
        let f = swap_chain_fidelity(0.95, 2, &clean).unwrap();
        assert!((f - (0.25 + 0.75 * (2.8f64 / 3.0).powi(2))).abs() < 1e-15);
        assert!((swap_chain_fidelity(0.8, 1, &clean).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(
            werner_chain_fidelity(0.9, 3, &clean).unwrap(),
            swap_chain_fidelity(0.9, 3, &clean).unwrap()
        );
    }

    #[test]
    fn brent_finds_simple_roots() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-10);
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-9), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn swap_asap_alpha_closed_form() {
        assert!((swap_asap_alpha(&Targets::A, 0).unwrap() - 0.2).abs() < 1e-12);
        assert!((swap_asap_alpha(&Targets::B, 0).unwrap() - 0.1).abs() < 1e-12);
        assert!((swap_asap_alpha(&Targets::A, 1).unwrap() - 0.10774).abs() < 1e-5);
        assert!((swap_asap_alpha(&Targets::B, 7).unwrap() - 0.01330).abs() < 1e-5);
    }

    #[test]
    fn rate_only_exceeds_swap_asap() {
        let hw = HardwareParams::baseline();
        for t in [Targets::A, Targets::B] {
            for n in [0, 1, 3, 7] {
                let r = max_distance_rate_only(&t, n, &hw).unwrap();
                let (s, _) = max_distance_swap_asap(&t, n, &hw).unwrap();
                assert!(r >= s);
            }
        }
    }

    #[test]
    fn rate_only_internode_distance_is_constant_with_repeaters() {
        let hw = HardwareParams::baseline();
        for t in [Targets::A, Targets::B] {
            let per: Vec<f64> = [1u32, 3, 7]
                .iter()
                .map(|&n| max_distance_rate_only(&t, n, &hw).unwrap() / f64::from(n + 1))
                .collect();
            assert!(per.iter().all(|x| (x - per[0]).abs() < 1.0), "{per:?}");
        }
    }

    #[test]
    fn qber_relations() {
        assert_eq!(qber_from_fidelity(1.0).unwrap(), 0.0);
        assert!((fidelity_from_qber(0.2).unwrap() - 0.7).abs() < 1e-15);
        assert!(qber_from_fidelity(0.2).is_err());
        assert!(fidelity_from_qber(0.6).is_err());
        let q = qber_threshold();
        assert!((q - 0.110_028).abs() < 1e-6);
        assert!((fidelity_from_qber(q).unwrap() - 0.834_958).abs() < 1e-5);
    }

    #[test]
    fn key_rate_examples() {
        assert_eq!(secret_key_rate(3.0, 0.0).unwrap(), 3.0);
        assert_eq!(secret_key_rate(3.0, 0.25).unwrap(), 0.0);
        assert!((binary_entropy(0.25) - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(secret_key_rate(1.0, 0.11).unwrap() < 1e-3);
        assert!(secret_key_rate(1.0, 0.7).is_err());
    }
}
