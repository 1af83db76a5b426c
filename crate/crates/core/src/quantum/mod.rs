//! Two-qubit density-matrix algebra: Bell states, memory decoherence,
//! depolarizing gate noise and noisy Z-basis readout.

mod dense;

pub use dense::{DensityMatrix, Mat2, C64};

use dense::{ONE, ZERO};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The four Bell states. `Psi+` and `Psi-` are the states written as
/// `Phi_01` and `Phi_11` in the double-click output state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    pub fn amplitudes(self) -> [C64; 4] {
        let s = C64::new(S, 0.0);
        match self {
            BellKind::PhiPlus => [s, ZERO, ZERO, s],
            BellKind::PhiMinus => [s, ZERO, ZERO, -s],
            BellKind::PsiPlus => [ZERO, s, s, ZERO],
            BellKind::PsiMinus => [ZERO, s, -s, ZERO],
        }
    }
}

/// Overlaps with (Phi+, Phi-, Psi+, Psi-).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonal {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BellDiagonal {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            check_probability(name, v)?;
        }
        if a + b + c + d > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter {
                name: "bell_diagonal",
                reason: format!("coefficients sum to {} > 1", a + b + c + d),
            });
        }
        Ok(Self { a, b, c, d })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -i], [i, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Hadamard,
    Cnot,
    /// (1/sqrt 2) [[1, -i], [-i, 1]], applied at the first end before DEJMPS.
    UA,
    /// (1/sqrt 2) [[1, i], [i, 1]], applied at the second end before DEJMPS.
    UB,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }

    fn single_qubit_matrix(self) -> Option<Mat2> {
        let s = C64::new(S, 0.0);
        let is = C64::new(0.0, S);
        match self {
            GateKind::Hadamard => Some([[s, s], [s, -s]]),
            GateKind::UA => Some([[s, -is], [-is, s]]),
            GateKind::UB => Some([[s, is], [is, s]]),
            GateKind::Cnot => None,
        }
    }
}

/// Applies `gate` perfectly and then depolarizes the acted qubits with
/// `p1` (single-qubit gates) or `p2` (two-qubit gates).
pub fn apply_gate(
    rho: &mut DensityMatrix,
    gate: GateKind,
    qubits: &[usize],
    p1: f64,
    p2: f64,
) -> Result<()> {
    if qubits.len() != gate.arity() {
        return Err(Error::ArityMismatch {
            gate,
            expected: gate.arity(),
            got: qubits.len(),
        });
    }
    check_probability("p1", p1)?;
    check_probability("p2", p2)?;
    let n = rho.num_qubits();
    for &q in qubits {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, n });
        }
    }
    match gate.single_qubit_matrix() {
        Some(u) => {
            rho.apply_1q(qubits[0], &u);
            rho.depolarize(qubits, p1);
        }
        None => {
            if qubits[0] == qubits[1] {
                return Err(Error::InvalidParameter {
                    name: "qubits",
                    reason: "control and target coincide".into(),
                });
            }
            rho.cnot(qubits[0], qubits[1]);
            rho.depolarize(qubits, p2);
        }
    }
    Ok(())
}

/// Amplitude-damping probability after storage time `t`.
pub fn amplitude_damping_probability(t: f64, t1: f64) -> f64 {
    1.0 - (-t / t1).exp()
}

/// Pure-dephasing probability after storage time `t`, on top of the
/// dephasing already implied by amplitude damping.
pub fn dephasing_probability(t: f64, t1: f64, t2: f64) -> f64 {
    0.5 * (1.0 - (-t / t2 + t / (2.0 * t1)).exp())
}

pub(crate) fn check_coherence(t1: f64, t2: f64) -> Result<()> {
    check_positive("T1", t1)?;
    check_positive("T2", t2)?;
    if t2 > 2.0 * t1 {
        return Err(Error::InvalidParameter {
            name: "T2",
            reason: format!("T2 = {t2} s exceeds 2*T1 = {} s", 2.0 * t1),
        });
    }
    Ok(())
}

/// Memory decoherence of qubit `q` for storage time `t`, in place.
pub fn decohere_in_place(
    rho: &mut DensityMatrix,
    q: usize,
    t: f64,
    t1: f64,
    t2: f64,
) -> Result<()> {
    check_coherence(t1, t2)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("storage time {t} is negative"),
        });
    }
    if t == 0.0 {
        return Ok(());
    }
    rho.amplitude_damp(q, amplitude_damping_probability(t, t1));
    rho.dephase(q, dephasing_probability(t, t1, t2));
    Ok(())
}

/// A two-qubit density matrix. Qubit 0 sits at the first (left) node and
/// qubit 1 at the second (right) node.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: DensityMatrix,
}

impl TwoQubitState {
    /// Wraps a 4x4 matrix after checking the state invariants.
    pub fn new(rho: DensityMatrix) -> Result<Self> {
        if rho.num_qubits() != 2 {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("expected 2 qubits, got {}", rho.num_qubits()),
            });
        }
        let s = Self { rho };
        s.check_invariants().map_err(|reason| Error::InvalidParameter {
            name: "rho",
            reason,
        })?;
        Ok(s)
    }

    pub(crate) fn from_matrix_unchecked(rho: DensityMatrix) -> Self {
        debug_assert_eq!(rho.num_qubits(), 2);
        Self { rho }
    }

    pub fn bell(kind: BellKind) -> Self {
        Self::from_matrix_unchecked(DensityMatrix::from_pure(&kind.amplitudes()))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_matrix_unchecked(DensityMatrix::maximally_mixed(2))
    }

    /// Fidelity `f` with `kind`, remaining weight spread evenly over the
    /// other three Bell states.
    pub fn werner(kind: BellKind, f: f64) -> Result<Self> {
        check_probability("F", f)?;
        let mut w = [(1.0 - f) / 3.0; 4];
        let idx = BellKind::ALL.iter().position(|&k| k == kind).unwrap();
        w[idx] = f;
        Ok(Self::bell_mixture(w))
    }

    pub fn from_bell_diagonal(bd: BellDiagonal) -> Self {
        Self::bell_mixture(bd.as_array())
    }

    /// Convex combination of the Bell projectors in `BellKind::ALL` order.
    pub fn bell_mixture(weights: [f64; 4]) -> Self {
        let mut rho = DensityMatrix::zeros(2);
        for (k, w) in BellKind::ALL.iter().zip(weights) {
            if w != 0.0 {
                rho.add_scaled(&DensityMatrix::from_pure(&k.amplitudes()), w);
            }
        }
        Self::from_matrix_unchecked(rho)
    }

    pub fn matrix(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> DensityMatrix {
        self.rho
    }

    pub fn fidelity(&self, kind: BellKind) -> f64 {
        self.rho
            .expectation(&kind.amplitudes())
            .clamp(0.0, 1.0)
    }

    pub fn bell_coefficients(&self) -> BellDiagonal {
        let [a, b, c, d] = BellKind::ALL.map(|k| self.fidelity(k));
        BellDiagonal { a, b, c, d }
    }

    pub fn decohere(&self, qubit: usize, t: f64, t1: f64, t2: f64) -> Result<Self> {
        check_qubit(qubit)?;
        let mut rho = self.rho.clone();
        decohere_in_place(&mut rho, qubit, t, t1, t2)?;
        Ok(Self { rho })
    }

    /// Depolarizes the listed qubits (one or both) with error probability `p_err`.
    pub fn depolarize(&self, qubits: &[usize], p_err: f64) -> Result<Self> {
        check_probability("p_err", p_err)?;
        if qubits.is_empty() || qubits.len() > 2 {
            return Err(Error::InvalidParameter {
                name: "qubits",
                reason: "depolarize acts on one or both qubits".into(),
            });
        }
        for &q in qubits {
            check_qubit(q)?;
        }
        let mut rho = self.rho.clone();
        rho.depolarize(qubits, p_err);
        Ok(Self { rho })
    }

    pub fn apply_gate(&self, gate: GateKind, qubits: &[usize], p1: f64, p2: f64) -> Result<Self> {
        let mut rho = self.rho.clone();
        apply_gate(&mut rho, gate, qubits, p1, p2)?;
        Ok(Self { rho })
    }

    /// Noiseless Pauli on one qubit (a Pauli-frame correction).
    pub fn pauli(&self, qubit: usize, p: Pauli) -> Self {
        let mut rho = self.rho.clone();
        if p != Pauli::I {
            rho.apply_1q(qubit, &p.matrix());
        }
        Self { rho }
    }

    /// Describes how far the matrix is from a valid state, if at all.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let herm = self.rho.hermiticity_error();
        if herm > 1e-12 {
            return Err(format!("not Hermitian (deviation {herm:e})"));
        }
        let tr = self.rho.trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(format!("trace {tr} differs from 1"));
        }
        let ev = self.rho.min_eigenvalue();
        if ev < -1e-10 {
            return Err(format!("negative eigenvalue {ev:e}"));
        }
        Ok(())
    }
}

fn check_qubit(q: usize) -> Result<()> {
    if q < 2 {
        Ok(())
    } else {
        Err(Error::QubitOutOfRange { index: q, n: 2 })
    }
}

/// A register that may have lost qubits to measurement.
#[derive(Debug, Clone, PartialEq)]
pub enum Register {
    Pair(TwoQubitState),
    /// One qubit left; `qubit` is its index in the original pair.
    Single { qubit: usize, state: DensityMatrix },
    Empty,
}

impl From<TwoQubitState> for Register {
    fn from(s: TwoQubitState) -> Self {
        Register::Pair(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Outcome as read out, after the readout bit flip.
    pub reported: u8,
    /// Outcome the state collapsed onto.
    pub actual: u8,
    pub remaining: Register,
}

/// Z-basis measurement of `qubit` with readout flips `xi0` (true 0 read as 1)
/// and `xi1` (true 1 read as 0).
pub fn measure_z<R: Rng + ?Sized>(
    reg: &Register,
    qubit: usize,
    xi0: f64,
    xi1: f64,
    rng: &mut R,
) -> Result<Measurement> {
    check_probability("xi0", xi0)?;
    check_probability("xi1", xi1)?;
    let (rho, local, original_other) = match reg {
        Register::Pair(s) => {
            check_qubit(qubit)?;
            (s.matrix(), qubit, Some(1 - qubit))
        }
        Register::Single { qubit: q, state } if *q == qubit => (state, 0, None),
        Register::Single { .. } | Register::Empty => {
            return Err(Error::QubitUnavailable(qubit))
        }
    };
    let p1 = rho.prob_one(local).clamp(0.0, 1.0);
    let actual: u8 = u8::from(rng.random::<f64>() < p1);
    let flip = if actual == 0 { xi0 } else { xi1 };
    let reported = if rng.random::<f64>() < flip { 1 - actual } else { actual };
    let remaining = match original_other {
        Some(other) => {
            let mut post = rho.project_out(local, actual);
            let norm = post.trace().re;
            post.scale(1.0 / norm);
            Register::Single {
                qubit: other,
                state: post,
            }
        }
        None => Register::Empty,
    };
    Ok(Measurement {
        reported,
        actual,
        remaining,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_state_phi_plus_entries() {
        let m = TwoQubitState::bell(BellKind::PhiPlus);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((m.matrix().get(i, j) - C64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((m.matrix().get(1, 1)).norm() < 1e-15);
    }

    #[test]
    fn bell_states_are_orthonormal() {
        for k in BellKind::ALL {
            let s = TwoQubitState::bell(k);
            assert!((s.matrix().trace().re - 1.0).abs() < 1e-15);
            for l in BellKind::ALL {
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((s.fidelity(l) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maximally_mixed_overlap_is_quarter() {
        let m = TwoQubitState::maximally_mixed();
        for k in BellKind::ALL {
            assert!((m.fidelity(k) - 0.25).abs() < 1e-15);
        }
        let bd = m.bell_coefficients();
        assert_eq!(bd.as_array().map(|x| (x * 1e12).round() / 1e12), [0.25; 4]);
    }

    #[test]
    fn single_click_state_overlaps() {
        // (1 - alpha) Psi+ + alpha |11><11| with alpha = 0.5.
        let mut rho = DensityMatrix::from_pure(&BellKind::PsiPlus.amplitudes());
        rho.scale(0.5);
        rho.add_scaled(&DensityMatrix::basis_projector(2, 3), 0.5);
        let s = TwoQubitState::new(rho).unwrap();
        let bd = s.bell_coefficients();
        assert!((bd.a - 0.25).abs() < 1e-12);
        assert!((bd.b - 0.25).abs() < 1e-12);
        assert!((bd.c - 0.5).abs() < 1e-12);
        assert!(bd.d.abs() < 1e-12);
    }

    #[test]
    fn depolarize_both_matches_hand_value() {
        let s = TwoQubitState::bell(BellKind::PhiPlus)
            .depolarize(&[0, 1], 0.1)
            .unwrap();
        assert!((s.fidelity(BellKind::PhiPlus) - 0.925).abs() < 1e-12);
        let full = TwoQubitState::bell(BellKind::PhiPlus)
            .depolarize(&[0, 1], 1.0)
            .unwrap();
        assert_eq!(full.bell_coefficients().as_array().map(|x| (x * 1e12).round()), [0.25e12; 4]);
    }

    #[test]
    fn depolarize_rejects_bad_probability() {
        let s = TwoQubitState::bell(BellKind::PhiPlus);
        assert!(s.depolarize(&[0], 1.5).is_err());
        assert!(s.depolarize(&[0], -0.1).is_err());
    }

    #[test]
    fn decoherence_probabilities() {
        assert!((amplitude_damping_probability(3600.0, 3600.0) - 0.632_120_558_828_557_7).abs() < 1e-12);
        // 0.5 (1 - exp(-1 + 1/7200)) evaluated directly.
        let want = 0.5 * (1.0 - (-1.0f64 + 1.0 / 7200.0).exp());
        assert!((dephasing_probability(1.0, 3600.0, 1.0) - want).abs() < 1e-15);
        assert!((want - 0.316_034_7).abs() < 1e-7);
    }

    #[test]
    fn decohere_zero_time_is_identity_and_validates() {
        let s = TwoQubitState::werner(BellKind::PsiPlus, 0.9).unwrap();
        assert_eq!(s.decohere(0, 0.0, 3600.0, 1.0).unwrap(), s);
        assert!(s.decohere(0, 1.0, 1.0, 3.0).is_err());
        assert!(s.decohere(0, -1.0, 3600.0, 1.0).is_err());
        assert!(s.decohere(2, 1.0, 3600.0, 1.0).is_err());
    }

    #[test]
    fn ua_then_its_inverse_is_identity() {
        // UB is the complex conjugate of UA, and UA^dagger = UA^3; UA UB = I
        // does not hold, so undo UA with three more applications.
        let s = TwoQubitState::werner(BellKind::PhiMinus, 0.7).unwrap();
        let mut t = s.clone();
        for _ in 0..4 {
            t = t.apply_gate(GateKind::UA, &[0], 0.0, 0.0).unwrap();
        }
        // UA^4 = -I, which is the identity on density matrices.
        for (x, y) in t.matrix().as_slice().iter().zip(s.matrix().as_slice()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn cnot_on_plus_zero_makes_phi_plus() {
        let plus = [C64::new(S, 0.0), ZERO, C64::new(S, 0.0), ZERO];
        let s = TwoQubitState::new(DensityMatrix::from_pure(&plus)).unwrap();
        let out = s.apply_gate(GateKind::Cnot, &[0, 1], 0.0, 0.0).unwrap();
        assert!((out.fidelity(BellKind::PhiPlus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_cnot_fidelity_to_ideal_output() {
        let plus = [C64::new(S, 0.0), ZERO, C64::new(S, 0.0), ZERO];
        let s = TwoQubitState::new(DensityMatrix::from_pure(&plus)).unwrap();
        let out = s.apply_gate(GateKind::Cnot, &[0, 1], 0.0, 0.02).unwrap();
        assert!((out.fidelity(BellKind::PhiPlus) - (0.98 + 0.02 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn gate_arity_is_checked() {
        let s = TwoQubitState::maximally_mixed();
        assert!(matches!(
            s.apply_gate(GateKind::Cnot, &[0], 0.0, 0.0),
            Err(Error::ArityMismatch { expected: 2, got: 1, .. })
        ));
        assert!(s.apply_gate(GateKind::Hadamard, &[0, 1], 0.0, 0.0).is_err());
        assert!(s.apply_gate(GateKind::Cnot, &[1, 1], 0.0, 0.0).is_err());
    }

    #[test]
    fn measuring_ground_state_without_noise_reports_zero() {
        let s = TwoQubitState::new(DensityMatrix::basis_projector(2, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = measure_z(&s.clone().into(), 0, 0.0, 0.0, &mut rng).unwrap();
            assert_eq!((m.reported, m.actual), (0, 0));
        }
    }

    #[test]
    fn readout_flip_rate_matches_xi0() {
        let s: Register = TwoQubitState::new(DensityMatrix::basis_projector(2, 0))
            .unwrap()
            .into();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| measure_z(&s, 1, 0.05, 0.0, &mut rng).unwrap().reported == 1)
            .count() as f64;
        let sigma = (0.05 * 0.95 / n as f64).sqrt();
        assert!((ones / n as f64 - 0.05).abs() < 3.0 * sigma);
    }

    #[test]
    fn phi_plus_measurement_collapses_partner() {
        let s: Register = TwoQubitState::bell(BellKind::PhiPlus).into();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut ones = 0usize;
        for _ in 0..n {
            let m = measure_z(&s, 0, 0.0, 0.0, &mut rng).unwrap();
            ones += m.actual as usize;
            let Register::Single { qubit, state } = &m.remaining else {
                panic!("expected one qubit left")
            };
            assert_eq!(*qubit, 1);
            assert!((state.prob_one(0) - m.actual as f64).abs() < 1e-12);
        }
        let sigma = (0.25 / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn measuring_a_consumed_qubit_fails() {
        let s: Register = TwoQubitState::bell(BellKind::PhiPlus).into();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = measure_z(&s, 0, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(
            measure_z(&m.remaining, 0, 0.0, 0.0, &mut rng),
            Err(Error::QubitUnavailable(0))
        );
        let last = measure_z(&m.remaining, 1, 0.0, 0.0, &mut rng).unwrap();
        assert_eq!(last.actual, m.actual);
        assert!(measure_z(&last.remaining, 1, 0.0, 0.0, &mut rng).is_err());
    }
}
