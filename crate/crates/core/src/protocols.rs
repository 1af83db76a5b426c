//! Entanglement swapping and two-to-one purification (EPL, DEJMPS) at
//! circuit level, plus the closed-form DEJMPS map.
//!
//! The circuits run on an explicit four-qubit density matrix. Readout errors
//! are averaged over analytically: each true measurement outcome is weighted
//! by the probability of every reported outcome, so the returned states are
//! exact and only the purification accept/reject decision is sampled.

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hardware::HardwareParams;
use crate::quantum::{apply_gate, BellDiagonal, BellKind, DensityMatrix, GateKind, Pauli, TwoQubitState};

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub success: bool,
    pub state: Option<TwoQubitState>,
    /// Input pairs used up (1 for a swap result per output, 2 for purification).
    pub consumed: u8,
    pub ops_time: f64,
}

/// Success probability and conditional output of a purification round.
#[derive(Debug, Clone, PartialEq)]
pub struct PurificationBranch {
    pub p_success: f64,
    pub state_on_success: Option<TwoQubitState>,
}

/// P(reported | actual) for one readout.
fn readout_prob(actual: u8, reported: u8, xi0: f64, xi1: f64) -> f64 {
    let flip = if actual == 0 { xi0 } else { xi1 };
    if actual == reported {
        1.0 - flip
    } else {
        flip
    }
}

const OUTCOMES: [(u8, u8); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Projects qubits `q` and `q + 1` of `rho` onto `m` and traces them out.
fn project_pair(rho: &DensityMatrix, q: usize, m: (u8, u8)) -> DensityMatrix {
    rho.project_out(q, m.0).project_out(q, m.1)
}

fn kind_index(k: BellKind) -> usize {
    BellKind::ALL.iter().position(|&x| x == k).unwrap()
}

fn swap_circuit(left: &TwoQubitState, right: &TwoQubitState, p1: f64, p2: f64) -> DensityMatrix {
    // Qubits: 0 = left end, 1 and 2 = swapping node, 3 = right end.
    let mut rho = left.matrix().kron(right.matrix());
    apply_gate(&mut rho, GateKind::Cnot, &[1, 2], p1, p2).expect("valid CNOT");
    apply_gate(&mut rho, GateKind::Hadamard, &[1], p1, p2).expect("valid H");
    rho
}

/// Pauli on the right end that restores `reference` after the Bell
/// measurement reports `(m1, m2)`, found from the noiseless circuit.
pub fn swap_correction(reference: BellKind, m: (u8, u8)) -> Pauli {
    static TABLES: [OnceLock<[Pauli; 4]>; 4] = [const { OnceLock::new() }; 4];
    let table = TABLES[kind_index(reference)].get_or_init(|| {
        let ideal = TwoQubitState::bell(reference);
        let rho = swap_circuit(&ideal, &ideal, 0.0, 0.0);
        OUTCOMES.map(|m| {
            let mut out = project_pair(&rho, 1, m);
            let norm = out.trace().re;
            out.scale(1.0 / norm);
            let out = TwoQubitState::from_matrix_unchecked(out);
            [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .find(|&p| out.pauli(1, p).fidelity(reference) > 1.0 - 1e-9)
                .expect("some Pauli restores the reference Bell state")
        })
    });
    table[(m.0 as usize) << 1 | m.1 as usize]
}

pub fn swap_ops_time(hw: &HardwareParams) -> f64 {
    hw.t_gate2 + hw.t_gate1 + 2.0 * hw.t_meas
}

/// Output of a swap, averaged over measurement outcomes and readout errors,
/// corrected towards `reference`.
pub fn swap_output(
    left: &TwoQubitState,
    right: &TwoQubitState,
    hw: &HardwareParams,
    reference: BellKind,
) -> TwoQubitState {
    let rho = swap_circuit(left, right, hw.p1, hw.p2);
    let mut out = DensityMatrix::zeros(2);
    for m in OUTCOMES {
        let branch = project_pair(&rho, 1, m);
        if branch.trace().re <= 0.0 {
            continue;
        }
        for r in OUTCOMES {
            let w = readout_prob(m.0, r.0, hw.xi0, hw.xi1) * readout_prob(m.1, r.1, hw.xi0, hw.xi1);
            if w == 0.0 {
                continue;
            }
            let corrected = TwoQubitState::from_matrix_unchecked(branch.clone())
                .pauli(1, swap_correction(reference, r));
            out.add_scaled(corrected.matrix(), w);
        }
    }
    let norm = out.trace().re;
    out.scale(1.0 / norm);
    TwoQubitState::from_matrix_unchecked(out)
}

/// Swap with Phi+ as the reference frame.
pub fn entanglement_swap(left: &TwoQubitState, right: &TwoQubitState, hw: &HardwareParams) -> ProtocolResult {
    entanglement_swap_with_reference(left, right, hw, BellKind::PhiPlus)
}

pub fn entanglement_swap_with_reference(
    left: &TwoQubitState,
    right: &TwoQubitState,
    hw: &HardwareParams,
    reference: BellKind,
) -> ProtocolResult {
    ProtocolResult {
        success: true,
        state: Some(swap_output(left, right, hw, reference)),
        consumed: 2,
        ops_time: swap_ops_time(hw),
    }
}

pub fn epl_ops_time(hw: &HardwareParams) -> f64 {
    hw.t_gate2 + hw.t_meas
}

pub fn dejmps_ops_time(hw: &HardwareParams) -> f64 {
    hw.t_gate1 + hw.t_gate2 + hw.t_meas
}

/// Pair 1 occupies qubits (0, 1), pair 2 qubits (2, 3); qubits 0 and 2 sit
/// at the first node. After the circuit, qubits 2 and 3 are measured.
fn post_select(rho: &DensityMatrix, hw: &HardwareParams, accept: impl Fn((u8, u8)) -> bool) -> PurificationBranch {
    let mut kept = DensityMatrix::zeros(2);
    for m in OUTCOMES {
        let w: f64 = OUTCOMES
            .iter()
            .filter(|&&r| accept(r))
            .map(|&r| readout_prob(m.0, r.0, hw.xi0, hw.xi1) * readout_prob(m.1, r.1, hw.xi0, hw.xi1))
            .sum();
        if w > 0.0 {
            kept.add_scaled(&project_pair(rho, 2, m), w);
        }
    }
    let p = kept.trace().re.clamp(0.0, 1.0);
    if p <= 1e-300 {
        return PurificationBranch {
            p_success: 0.0,
            state_on_success: None,
        };
    }
    kept.scale(1.0 / kept.trace().re);
    PurificationBranch {
        p_success: p,
        state_on_success: Some(TwoQubitState::from_matrix_unchecked(kept)),
    }
}

/// EPL: bilateral CNOT, keep the control pair if both targets read 1.
pub fn epl_branch(pair1: &TwoQubitState, pair2: &TwoQubitState, hw: &HardwareParams) -> PurificationBranch {
    let mut rho = pair1.matrix().kron(pair2.matrix());
    apply_gate(&mut rho, GateKind::Cnot, &[0, 2], hw.p1, hw.p2).expect("valid CNOT");
    apply_gate(&mut rho, GateKind::Cnot, &[1, 3], hw.p1, hw.p2).expect("valid CNOT");
    post_select(&rho, hw, |r| r == (1, 1))
}

/// DEJMPS: U_A at the first node, U_B at the second, bilateral CNOT, keep
/// the control pair if the two target readouts agree.
pub fn dejmps_branch(pair1: &TwoQubitState, pair2: &TwoQubitState, hw: &HardwareParams) -> PurificationBranch {
    let mut rho = pair1.matrix().kron(pair2.matrix());
    for (gate, q) in [(GateKind::UA, 0), (GateKind::UA, 2), (GateKind::UB, 1), (GateKind::UB, 3)] {
        apply_gate(&mut rho, gate, &[q], hw.p1, hw.p2).expect("valid rotation");
    }
    apply_gate(&mut rho, GateKind::Cnot, &[0, 2], hw.p1, hw.p2).expect("valid CNOT");
    apply_gate(&mut rho, GateKind::Cnot, &[1, 3], hw.p1, hw.p2).expect("valid CNOT");
    post_select(&rho, hw, |r| r.0 == r.1)
}

fn sample_branch<R: Rng + ?Sized>(branch: PurificationBranch, ops_time: f64, rng: &mut R) -> ProtocolResult {
    let success = branch.p_success > 0.0 && rng.random::<f64>() < branch.p_success;
    ProtocolResult {
        success,
        state: if success { branch.state_on_success } else { None },
        consumed: 2,
        ops_time,
    }
}

pub fn epl_round<R: Rng + ?Sized>(
    pair1: &TwoQubitState,
    pair2: &TwoQubitState,
    hw: &HardwareParams,
    rng: &mut R,
) -> ProtocolResult {
    sample_branch(epl_branch(pair1, pair2, hw), epl_ops_time(hw), rng)
}

pub fn dejmps_round<R: Rng + ?Sized>(
    pair1: &TwoQubitState,
    pair2: &TwoQubitState,
    hw: &HardwareParams,
    rng: &mut R,
) -> ProtocolResult {
    sample_branch(dejmps_branch(pair1, pair2, hw), dejmps_ops_time(hw), rng)
}

/// Closed-form DEJMPS on two copies of a Bell-diagonal state, returning the
/// full output coefficients and the success probability.
///
/// With (a, b, c, d) the overlaps with (Phi+, Phi-, Psi+, Psi-), the
/// rotations pair Phi+ with Psi- and Phi- with Psi+.
pub fn dejmps_analytic_map(bd: BellDiagonal) -> Result<(BellDiagonal, f64)> {
    let BellDiagonal { a, b, c, d } = bd;
    let p = (a + d).powi(2) + (b + c).powi(2);
    if p <= 0.0 {
        return Err(Error::UndefinedFidelity);
    }
    let out = BellDiagonal {
        a: (a * a + d * d) / p,
        b: 2.0 * a * d / p,
        c: (b * b + c * c) / p,
        d: 2.0 * b * c / p,
    };
    Ok((out, p))
}

/// Output fidelity to Phi+ and success probability.
pub fn dejmps_analytic(bd: BellDiagonal) -> Result<(f64, f64)> {
    dejmps_analytic_map(bd).map(|(out, p)| (out.a, p))
}
