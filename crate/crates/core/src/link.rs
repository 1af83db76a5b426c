//! Heralded entanglement generation between neighboring nodes.

use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{check_probability, Error, Result};
use crate::hardware::{HardwareParams, LinkProtocol};
use crate::quantum::{BellKind, DensityMatrix, TwoQubitState};

/// Probability that an emitted photon reaches the midpoint station and is
/// detected, over a node separation of `l_km`.
pub fn detection_probability(p_emd: f64, l_km: f64, alpha_att: f64) -> Result<f64> {
    check_probability("p_emd", p_emd)?;
    if !(l_km >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: format!("distance {l_km} km is negative"),
        });
    }
    Ok(p_emd * 10f64.powf(-(alpha_att / 10.0) * (l_km / 2.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkAttemptModel {
    pub protocol: LinkProtocol,
    pub p_det: f64,
    pub p_succ: f64,
    /// Duration of one attempt: photon travel to the station plus the herald
    /// back, optionally preceded by the emission delay.
    pub attempt_time: f64,
    pub output_state: TwoQubitState,
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{x} is outside (0, 1]"),
        })
    }
}

fn psi_mixture(plus: f64, minus: f64) -> DensityMatrix {
    let mut rho = DensityMatrix::from_pure(&BellKind::PsiPlus.amplitudes());
    rho.scale(plus);
    rho.add_scaled(&DensityMatrix::from_pure(&BellKind::PsiMinus.amplitudes()), minus);
    rho
}

/// (1-alpha)[eta_f Psi+ + (1-eta_f) Psi-] + alpha |11><11|.
pub fn single_click_state(alpha: f64, eta_f: f64) -> Result<TwoQubitState> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("{alpha} is outside (0, 0.5]"),
        });
    }
    check_unit("eta_f", eta_f)?;
    let mut rho = psi_mixture((1.0 - alpha) * eta_f, (1.0 - alpha) * (1.0 - eta_f));
    rho.add_scaled(&DensityMatrix::basis_projector(2, 0b11), alpha);
    Ok(TwoQubitState::from_matrix_unchecked(rho))
}

/// (f/2)[(1+V) Psi+ + (1-V) Psi-] + ((1-f)/2)(|00><00| + |11><11|).
pub fn double_click_state(f_lm: f64, visibility: f64) -> Result<TwoQubitState> {
    check_unit("f_lm", f_lm)?;
    check_probability("V", visibility)?;
    let mut rho = psi_mixture(f_lm * (1.0 + visibility) / 2.0, f_lm * (1.0 - visibility) / 2.0);
    rho.add_scaled(&DensityMatrix::basis_projector(2, 0b00), (1.0 - f_lm) / 2.0);
    rho.add_scaled(&DensityMatrix::basis_projector(2, 0b11), (1.0 - f_lm) / 2.0);
    Ok(TwoQubitState::from_matrix_unchecked(rho))
}

fn attempt_time(l_km: f64, c_fiber: f64) -> f64 {
    l_km / c_fiber
}

pub fn single_click_model(
    alpha: f64,
    eta_f: f64,
    p_det: f64,
    l_km: f64,
    c_fiber: f64,
) -> Result<LinkAttemptModel> {
    check_probability("p_det", p_det)?;
    Ok(LinkAttemptModel {
        protocol: LinkProtocol::SingleClick { alpha },
        p_det,
        p_succ: 2.0 * p_det * alpha,
        attempt_time: attempt_time(l_km, c_fiber),
        output_state: single_click_state(alpha, eta_f)?,
    })
}

pub fn double_click_model(
    f_lm: f64,
    visibility: f64,
    p_det: f64,
    l_km: f64,
    c_fiber: f64,
) -> Result<LinkAttemptModel> {
    check_probability("p_det", p_det)?;
    Ok(LinkAttemptModel {
        protocol: LinkProtocol::DoubleClick,
        p_det,
        p_succ: p_det * p_det / 2.0,
        attempt_time: attempt_time(l_km, c_fiber),
        output_state: double_click_state(f_lm, visibility)?,
    })
}

impl LinkAttemptModel {
    /// Model for a node separation `l_km` under `protocol` and `hw`. The
    /// double-click fidelity knob f_elem is converted to f_lm with the
    /// configured visibility. With `include_cycle` the emission delay is
    /// added to every attempt.
    pub fn for_hardware(
        protocol: LinkProtocol,
        hw: &HardwareParams,
        l_km: f64,
        include_cycle: bool,
    ) -> Result<Self> {
        let p_det = detection_probability(hw.p_emd, l_km, hw.alpha_att)?;
        let mut model = match protocol {
            LinkProtocol::SingleClick { alpha } => {
                single_click_model(alpha, hw.eta_f, p_det, l_km, hw.c_fiber)?
            }
            LinkProtocol::DoubleClick => {
                let f_lm = (2.0 * hw.f_elem / (1.0 + hw.visibility)).min(1.0);
                double_click_model(f_lm, hw.visibility, p_det, l_km, hw.c_fiber)?
            }
        };
        if include_cycle {
            model.attempt_time += hw.t_cycle;
        }
        Ok(model)
    }
}

/// Number of attempts up to and including the first success.
pub fn sample_attempts<R: Rng + ?Sized>(p_succ: f64, rng: &mut R) -> Result<u64> {
    if !(p_succ > 0.0) {
        return Err(Error::NeverSucceeds);
    }
    check_probability("p_succ", p_succ)?;
    let geo = Geometric::new(p_succ).map_err(|e| Error::InvalidParameter {
        name: "p_succ",
        reason: e.to_string(),
    })?;
    Ok(geo.sample(rng).saturating_add(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn detection_probability_examples() {
        assert_eq!(detection_probability(0.3, 0.0, 0.2).unwrap(), 0.3);
        assert!((detection_probability(1.0, 50.0, 0.2).unwrap() - 0.316_227_766_016_837_9).abs() < 1e-15);
        assert!((detection_probability(0.0046, 100.0, 0.2).unwrap() - 4.6e-4).abs() < 1e-18);
        assert!(detection_probability(0.5, -1.0, 0.2).is_err());
    }

    #[test]
    fn single_click_fidelity_and_success() {
        let eta = 0.8022 / 0.84;
        let m = single_click_model(0.16, eta, 0.1, 10.0, 2e5).unwrap();
        assert!((m.output_state.fidelity(BellKind::PsiPlus) - 0.8022).abs() < 1e-12);
        let m = single_click_model(0.5, 1.0, 0.1, 10.0, 2e5).unwrap();
        assert!((m.p_succ - 0.1).abs() < 1e-15);
        assert!((m.attempt_time - 5e-5).abs() < 1e-18);
        let tiny = single_click_model(1e-9, 1.0, 0.1, 10.0, 2e5).unwrap();
        assert!(tiny.output_state.fidelity(BellKind::PsiPlus) > 1.0 - 1e-8);
        assert!(tiny.p_succ < 1e-9);
        assert!(single_click_model(0.0, 1.0, 0.1, 1.0, 2e5).is_err());
        assert!(single_click_model(0.51, 1.0, 0.1, 1.0, 2e5).is_err());
    }

    #[test]
    fn double_click_fidelity_and_success() {
        let m = double_click_model(1.0, 1.0, 0.1, 10.0, 2e5).unwrap();
        assert!((m.output_state.fidelity(BellKind::PsiPlus) - 1.0).abs() < 1e-12);
        assert!((m.p_succ - 0.005).abs() < 1e-15);
        let m = double_click_model(0.92, 1.0, 0.1, 10.0, 2e5).unwrap();
        assert!((m.output_state.fidelity(BellKind::PsiPlus) - 0.92).abs() < 1e-12);
        let m = double_click_model(0.9, 0.8, 0.1, 10.0, 2e5).unwrap();
        assert!((m.output_state.fidelity(BellKind::PsiPlus) - 0.9 * 1.8 / 2.0).abs() < 1e-12);
        m.output_state.check_invariants().unwrap();
    }

    #[test]
    fn geometric_attempts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!((0..100).all(|_| sample_attempts(1.0, &mut rng).unwrap() == 1));
        assert_eq!(sample_attempts(0.0, &mut rng), Err(Error::NeverSucceeds));
        let n = 100_000;
        let p = 0.25;
        let mean = (0..n).map(|_| sample_attempts(p, &mut rng).unwrap() as f64).sum::<f64>() / n as f64;
        let sigma = ((1.0 - p) / (p * p) / n as f64).sqrt();
        assert!((mean - 4.0).abs() < 3.0 * sigma, "mean {mean}");
        assert!((0..1000).all(|_| sample_attempts(p, &mut rng).unwrap() >= 1));
    }
}
