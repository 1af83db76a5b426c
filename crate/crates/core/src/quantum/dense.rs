//! Dense density matrices on up to a handful of qubits.
//!
//! Storage is a flat row-major buffer. Qubit `q` of an `n`-qubit register
//! corresponds to bit `n - 1 - q` of a basis index, so qubit 0 is the most
//! significant bit and `|01>` means qubit 0 in `|0>`, qubit 1 in `|1>`.

use num_complex::Complex64;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A 2x2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(n: usize) -> Self {
        let dim = 1usize << n;
        Self {
            n,
            data: vec![ZERO; dim * dim],
        }
    }

    /// The maximally mixed state I/2^n.
    pub fn maximally_mixed(n: usize) -> Self {
        let mut m = Self::zeros(n);
        let dim = m.dim();
        let w = C64::new(1.0 / dim as f64, 0.0);
        for i in 0..dim {
            m.set(i, i, w);
        }
        m
    }

    /// Projector onto a pure state given by its amplitudes.
    pub fn from_pure(amps: &[C64]) -> Self {
        let dim = amps.len();
        assert!(dim.is_power_of_two(), "amplitude vector length must be 2^n");
        let n = dim.trailing_zeros() as usize;
        let mut m = Self::zeros(n);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, amps[i] * amps[j].conj());
            }
        }
        m
    }

    /// Diagonal state on computational basis vectors.
    pub fn basis_projector(n: usize, index: usize) -> Self {
        let mut m = Self::zeros(n);
        m.set(index, index, ONE);
        m
    }

    pub fn from_raw(n: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), 1 << (2 * n));
        Self { n, data }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        let dim = self.dim();
        self.data[i * dim + j] = v;
    }

    #[inline]
    fn bit(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self + w * other`, in place.
    pub fn add_scaled(&mut self, other: &Self, w: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * w;
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim(), other.dim());
        let mut out = Self::zeros(self.n + other.n);
        let d = da * db;
        for i1 in 0..da {
            for j1 in 0..da {
                let a = self.get(i1, j1);
                if a == ZERO {
                    continue;
                }
                for i2 in 0..db {
                    for j2 in 0..db {
                        out.data[(i1 * db + i2) * d + j1 * db + j2] = a * other.get(i2, j2);
                    }
                }
            }
        }
        out
    }

    /// Real part of `<psi| rho |psi>`.
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let dim = self.dim();
        let mut acc = ZERO;
        for i in 0..dim {
            if psi[i] == ZERO {
                continue;
            }
            for j in 0..dim {
                acc += psi[i].conj() * self.get(i, j) * psi[j];
            }
        }
        acc.re
    }

    /// Largest elementwise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue, via Jacobi rotations on the real embedding.
    pub fn min_eigenvalue(&self) -> f64 {
        symmetric_eigenvalues(&self.real_embedding(), 2 * self.dim())
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    fn real_embedding(&self) -> Vec<f64> {
        // [[Re, -Im], [Im, Re]] has each eigenvalue of the Hermitian matrix twice.
        let d = self.dim();
        let m = 2 * d;
        let mut a = vec![0.0; m * m];
        for i in 0..d {
            for j in 0..d {
                let z = self.get(i, j);
                a[i * m + j] = z.re;
                a[(i + d) * m + j + d] = z.re;
                a[i * m + j + d] = -z.im;
                a[(i + d) * m + j] = z.im;
            }
        }
        a
    }

    /// rho -> U rho U^dagger for a single-qubit unitary on qubit `q`.
    pub fn apply_1q(&mut self, q: usize, u: &Mat2) {
        let b = self.bit(q);
        let dim = self.dim();
        // Left multiplication on rows.
        for i in 0..dim {
            if i & b != 0 {
                continue;
            }
            let i1 = i | b;
            for j in 0..dim {
                let r0 = self.get(i, j);
                let r1 = self.get(i1, j);
                self.set(i, j, u[0][0] * r0 + u[0][1] * r1);
                self.set(i1, j, u[1][0] * r0 + u[1][1] * r1);
            }
        }
        // Right multiplication by U^dagger on columns.
        for j in 0..dim {
            if j & b != 0 {
                continue;
            }
            let j1 = j | b;
            for i in 0..dim {
                let c0 = self.get(i, j);
                let c1 = self.get(i, j1);
                self.set(i, j, c0 * u[0][0].conj() + c1 * u[0][1].conj());
                self.set(i, j1, c0 * u[1][0].conj() + c1 * u[1][1].conj());
            }
        }
    }

    /// Controlled-NOT, a basis permutation.
    pub fn cnot(&mut self, control: usize, target: usize) {
        let (cb, tb) = (self.bit(control), self.bit(target));
        let perm = |i: usize| if i & cb != 0 { i ^ tb } else { i };
        let dim = self.dim();
        let old = self.data.clone();
        for i in 0..dim {
            let pi = perm(i);
            for j in 0..dim {
                self.data[pi * dim + perm(j)] = old[i * dim + j];
            }
        }
    }

    /// Partial trace over `qubits`, returning the reduced state on the rest
    /// (remaining qubits keep their relative order).
    pub fn partial_trace(&self, qubits: &[usize]) -> Self {
        let mask: usize = qubits.iter().map(|&q| self.bit(q)).sum();
        let keep: Vec<usize> = (0..self.n).filter(|q| !qubits.contains(q)).collect();
        let mut out = Self::zeros(keep.len());
        let dim = self.dim();
        let compress = |i: usize| {
            keep.iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((i >> (self.n - 1 - q)) & 1))
        };
        for i in 0..dim {
            for j in 0..dim {
                if (i & mask) != (j & mask) {
                    continue;
                }
                let (ri, rj) = (compress(i), compress(j));
                let v = out.get(ri, rj) + self.get(i, j);
                out.set(ri, rj, v);
            }
        }
        out
    }

    /// (1 - p) rho + p (I_S / d_S) (x) tr_S(rho) for the subsystem S = `qubits`.
    pub fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let mask: usize = qubits.iter().map(|&q| self.bit(q)).sum();
        let ds = 1usize << qubits.len();
        let sub_values: Vec<usize> = (0..self.dim()).filter(|k| k & !mask == 0).collect();
        let dim = self.dim();
        let old = self.data.clone();
        for i in 0..dim {
            for j in 0..dim {
                let mut v = old[i * dim + j] * (1.0 - p);
                if (i & mask) == (j & mask) {
                    let (ri, rj) = (i & !mask, j & !mask);
                    let s: C64 = sub_values.iter().map(|&k| old[(ri | k) * dim + (rj | k)]).sum();
                    v += s * (p / ds as f64);
                }
                self.data[i * dim + j] = v;
            }
        }
    }

    /// Amplitude damping with decay probability `gamma` on qubit `q`.
    pub fn amplitude_damp(&mut self, q: usize, gamma: f64) {
        if gamma == 0.0 {
            return;
        }
        let b = self.bit(q);
        let dim = self.dim();
        let s = (1.0 - gamma).sqrt();
        let old = self.data.clone();
        for i in 0..dim {
            for j in 0..dim {
                let v = old[i * dim + j];
                let nv = match (i & b != 0, j & b != 0) {
                    (false, false) => v + old[(i | b) * dim + (j | b)] * gamma,
                    (true, true) => v * (1.0 - gamma),
                    _ => v * s,
                };
                self.data[i * dim + j] = nv;
            }
        }
    }

    /// Phase flip with probability `p` on qubit `q`.
    pub fn dephase(&mut self, q: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let b = self.bit(q);
        let dim = self.dim();
        let f = 1.0 - 2.0 * p;
        for i in 0..dim {
            for j in 0..dim {
                if (i ^ j) & b != 0 {
                    self.data[i * dim + j] *= f;
                }
            }
        }
    }

    /// Probability of finding qubit `q` in `|1>`.
    pub fn prob_one(&self, q: usize) -> f64 {
        let b = self.bit(q);
        (0..self.dim())
            .filter(|i| i & b != 0)
            .map(|i| self.get(i, i).re)
            .sum()
    }

    /// Unnormalized post-measurement state with qubit `q` projected on `bit`
    /// and then traced out.
    pub fn project_out(&self, q: usize, bit: u8) -> Self {
        let b = self.bit(q);
        let want = if bit == 0 { 0 } else { b };
        let mut p = self.clone();
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if (i & b) != want || (j & b) != want {
                    p.data[i * dim + j] = ZERO;
                }
            }
        }
        p.partial_trace(&[q])
    }
}

/// Eigenvalues of a real symmetric `m x m` matrix by cyclic Jacobi sweeps.
pub(crate) fn symmetric_eigenvalues(a: &[f64], m: usize) -> Vec<f64> {
    let mut a = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..m).map(|i| a[i * m + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let a = DensityMatrix::basis_projector(1, 1);
        let b = DensityMatrix::maximally_mixed(1);
        let ab = a.kron(&b);
        let ra = ab.partial_trace(&[1]);
        assert!(close(ra.get(1, 1), ONE));
        let rb = ab.partial_trace(&[0]);
        assert!(close(rb.get(0, 0), C64::new(0.5, 0.0)));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let mut m = DensityMatrix::basis_projector(2, 0b10);
        m.cnot(0, 1);
        assert!(close(m.get(0b11, 0b11), ONE));
        let mut m = DensityMatrix::basis_projector(2, 0b01);
        m.cnot(1, 0);
        assert!(close(m.get(0b11, 0b11), ONE));
    }

    #[test]
    fn eigenvalues_of_diagonal_and_pure_states() {
        let m = DensityMatrix::maximally_mixed(2);
        assert!((m.min_eigenvalue() - 0.25).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = DensityMatrix::from_pure(&[C64::new(s, 0.0), ZERO, ZERO, C64::new(0.0, s)]);
        assert!(p.min_eigenvalue().abs() < 1e-12);
    }

    #[test]
    fn amplitude_damping_full_decay_goes_to_ground() {
        let mut m = DensityMatrix::basis_projector(1, 1);
        m.amplitude_damp(0, 1.0);
        assert!(close(m.get(0, 0), ONE));
        assert!(close(m.get(1, 1), ZERO));
    }
}
