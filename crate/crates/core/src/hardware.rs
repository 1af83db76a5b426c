//! Hardware parameters, the baseline table, protocol strategies and the
//! optimizer's search-space point (`Genome`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Error, Result};
use crate::quantum::check_coherence;

/// Node and link hardware. Probabilities are error probabilities unless
/// named otherwise; times are in seconds, distances in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareParams {
    pub p1: f64,
    pub p2: f64,
    pub xi0: f64,
    pub xi1: f64,
    pub p_init: f64,
    #[serde(rename = "T1_s")]
    pub t1: f64,
    #[serde(rename = "T2_s")]
    pub t2: f64,
    pub p_emd: f64,
    pub eta_f: f64,
    pub f_elem: f64,
    #[serde(rename = "V")]
    pub visibility: f64,
    pub p_double: f64,
    pub sigma_phi: f64,
    /// Fiber attenuation in dB/km.
    pub alpha_att: f64,
    /// Speed of light in fiber, km/s.
    pub c_fiber: f64,
    #[serde(rename = "T_cycle_s")]
    pub t_cycle: f64,
    #[serde(rename = "t_gate1_s")]
    pub t_gate1: f64,
    #[serde(rename = "t_gate2_s")]
    pub t_gate2: f64,
    #[serde(rename = "t_init_s")]
    pub t_init: f64,
    #[serde(rename = "t_meas_s")]
    pub t_meas: f64,
    #[serde(rename = "N_qb")]
    pub n_qubits: usize,
}

pub const C_FIBER_DEFAULT: f64 = 2.0e5;
pub const C_FIBER_VALIDATION: f64 = 208_189.207;

impl HardwareParams {
    /// State-of-the-art color-center hardware.
    pub fn baseline() -> Self {
        Self {
            p1: 4.0 / 3.0 * 0.001,
            p2: 0.02,
            xi0: 0.05,
            xi1: 0.005,
            p_init: 0.02,
            t1: 3600.0,
            t2: 1.0,
            p_emd: 0.0046,
            eta_f: 0.9196,
            f_elem: 0.92,
            visibility: 0.9,
            p_double: 0.06,
            sigma_phi: 0.35,
            alpha_att: 0.2,
            c_fiber: C_FIBER_DEFAULT,
            t_cycle: 3.8e-6,
            t_gate1: 20e-6,
            t_gate2: 500e-6,
            t_init: 310e-6,
            t_meas: 3.7e-6,
            n_qubits: 4,
        }
    }

    /// Baseline with every gate and readout error set to zero.
    pub fn noiseless_gates(mut self) -> Self {
        self.p1 = 0.0;
        self.p2 = 0.0;
        self.xi0 = 0.0;
        self.xi1 = 0.0;
        self.p_init = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("xi0", self.xi0),
            ("xi1", self.xi1),
            ("p_init", self.p_init),
            ("p_emd", self.p_emd),
            ("V", self.visibility),
            ("p_double", self.p_double),
        ] {
            check_probability(name, p)?;
        }
        check_coherence(self.t1, self.t2)?;
        for (name, x) in [("eta_f", self.eta_f), ("f_elem", self.f_elem)] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{x} is outside (0, 1]"),
                });
            }
        }
        check_positive("c_fiber", self.c_fiber)?;
        for (name, x) in [
            ("alpha_att", self.alpha_att),
            ("sigma_phi", self.sigma_phi),
            ("T_cycle_s", self.t_cycle),
            ("t_gate1_s", self.t_gate1),
            ("t_gate2_s", self.t_gate2),
            ("t_init_s", self.t_init),
            ("t_meas_s", self.t_meas),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("{x} must be finite and non-negative"),
                });
            }
        }
        if self.n_qubits < 2 {
            return Err(Error::InvalidParameter {
                name: "N_qb",
                reason: format!("{} memory qubits, need at least 2", self.n_qubits),
            });
        }
        Ok(())
    }
}

impl Default for HardwareParams {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Single-click state efficiency from visibility, double-excitation
/// probability and interferometric phase uncertainty.
pub fn derived_state_efficiency(visibility: f64, p_double: f64, sigma_phi: f64) -> f64 {
    let p_phi = (1.0 - (-sigma_phi * sigma_phi / 2.0).exp()) / 2.0;
    let pd = p_double;
    let p_ph = (1.0 - p_phi) * pd * (1.0 - pd) + p_phi * (pd * pd * (1.0 - pd) * (1.0 - pd));
    (1.0 + visibility.sqrt()) / 2.0 * (1.0 - p_ph)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinkProtocol {
    SingleClick { alpha: f64 },
    DoubleClick,
}

impl LinkProtocol {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            LinkProtocol::SingleClick { alpha } => Some(*alpha),
            LinkProtocol::DoubleClick => None,
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            LinkProtocol::SingleClick { .. } => "SC",
            LinkProtocol::DoubleClick => "DC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainProtocol {
    SwapAsap,
    Bdcz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Purification {
    None,
    Epl,
    /// DEJMPS repeated with this many freshly generated pairs (1..=3).
    Dejmps(u8),
}

impl Purification {
    pub fn rounds(&self) -> u8 {
        match self {
            Purification::None => 0,
            Purification::Epl => 1,
            Purification::Dejmps(n) => *n,
        }
    }
}

/// Chain protocol plus purification, without the link layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    pub chain: ChainProtocol,
    pub purification: Purification,
}

impl Scheme {
    pub const SWAP_ASAP: Scheme = Scheme {
        chain: ChainProtocol::SwapAsap,
        purification: Purification::None,
    };

    /// The schemes an optimizer may choose from.
    pub const SEARCHABLE: [Scheme; 5] = [
        Scheme::SWAP_ASAP,
        Scheme::bdcz(Purification::Epl),
        Scheme::bdcz(Purification::Dejmps(1)),
        Scheme::bdcz(Purification::Dejmps(2)),
        Scheme::bdcz(Purification::Dejmps(3)),
    ];

    pub const fn bdcz(purification: Purification) -> Scheme {
        Scheme {
            chain: ChainProtocol::Bdcz,
            purification,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.chain, self.purification) {
            (ChainProtocol::SwapAsap, Purification::None) => write!(f, "swap-asap"),
            (ChainProtocol::SwapAsap, p) => write!(f, "swap-asap-{p:?}"),
            (ChainProtocol::Bdcz, Purification::None) => write!(f, "bdcz"),
            (ChainProtocol::Bdcz, Purification::Epl) => write!(f, "epl"),
            (ChainProtocol::Bdcz, Purification::Dejmps(n)) => write!(f, "dejmps-{n}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('_', "-");
        let scheme = match t.as_str() {
            "swap-asap" => Scheme::SWAP_ASAP,
            "bdcz" => Scheme::bdcz(Purification::None),
            "epl" | "bdcz-epl" => Scheme::bdcz(Purification::Epl),
            other => {
                let n = other
                    .strip_prefix("bdcz-")
                    .unwrap_or(other)
                    .strip_prefix("dejmps")
                    .map(|r| r.trim_start_matches('-'))
                    .and_then(|r| if r.is_empty() { Some(1) } else { r.parse::<u8>().ok() })
                    .ok_or_else(|| Error::InvalidStrategy(format!("unknown strategy `{s}`")))?;
                Scheme::bdcz(Purification::Dejmps(n))
            }
        };
        Ok(scheme)
    }
}

/// The full protocol stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub link: LinkProtocol,
    pub scheme: Scheme,
}

impl Strategy {
    pub fn new(link: LinkProtocol, scheme: Scheme) -> Result<Self> {
        let s = Self { link, scheme };
        s.validate()?;
        Ok(s)
    }

    pub fn swap_asap(link: LinkProtocol) -> Self {
        Self {
            link,
            scheme: Scheme::SWAP_ASAP,
        }
    }

    pub fn chain(&self) -> ChainProtocol {
        self.scheme.chain
    }

    pub fn purification(&self) -> Purification {
        self.scheme.purification
    }

    /// Checks alpha and the round count, and that SWAP-ASAP carries no
    /// purification. BDCZ without purification is accepted here; the
    /// optimizer's search space excludes it.
    pub fn validate_for_simulation(&self) -> Result<()> {
        if let LinkProtocol::SingleClick { alpha } = self.link {
            if !(alpha > 0.0 && alpha <= 0.5) {
                return Err(Error::InvalidStrategy(format!(
                    "alpha = {alpha} is outside (0, 0.5]"
                )));
            }
        }
        match (self.scheme.chain, self.scheme.purification) {
            (ChainProtocol::SwapAsap, Purification::None) => Ok(()),
            (ChainProtocol::SwapAsap, p) => Err(Error::InvalidStrategy(format!(
                "SWAP-ASAP does not purify, got {p:?}"
            ))),
            (ChainProtocol::Bdcz, Purification::Dejmps(n)) if !(1..=3).contains(&n) => Err(
                Error::InvalidStrategy(format!("DEJMPS rounds must be 1..=3, got {n}")),
            ),
            (ChainProtocol::Bdcz, _) => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_for_simulation()?;
        if self.scheme == Scheme::bdcz(Purification::None) {
            return Err(Error::InvalidStrategy(
                "BDCZ requires a purification protocol".into(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.scheme, self.link.short_name())?;
        if let Some(a) = self.link.alpha() {
            write!(f, "(alpha={a})")?;
        }
        Ok(())
    }
}

/// Closed interval bounds of the optimizer search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bounds {
    pub alpha: (f64, f64),
    pub eta_f: (f64, f64),
    pub f_elem: (f64, f64),
    pub p_emd: (f64, f64),
    pub k_gates: (f64, f64),
    #[serde(rename = "T1_s")]
    pub t1: (f64, f64),
    #[serde(rename = "T2_s")]
    pub t2: (f64, f64),
}

/// Stand-in for the open upper end "< 1" of probability-like ranges.
pub const OPEN_UPPER: f64 = 1.0 - 1e-4;

/// Smallest allowed bright-state parameter.
pub const ALPHA_MIN: f64 = 1e-4;

impl Default for Bounds {
    fn default() -> Self {
        Self {
            alpha: (ALPHA_MIN, 0.5),
            eta_f: (0.9196, OPEN_UPPER),
            f_elem: (0.92, OPEN_UPPER),
            p_emd: (0.0046, OPEN_UPPER),
            k_gates: (1.0, 1e4),
            t1: (3600.0, 3.6e6),
            t2: (1.0, 1e5),
        }
    }
}

impl Bounds {
    /// Bounds of the link fidelity knob for the given link protocol.
    pub fn link_fidelity(&self, link: &LinkProtocol) -> (f64, f64) {
        match link {
            LinkProtocol::SingleClick { .. } => self.eta_f,
            LinkProtocol::DoubleClick => self.f_elem,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("alpha", self.alpha),
            ("eta_f", self.eta_f),
            ("f_elem", self.f_elem),
            ("p_emd", self.p_emd),
            ("k_gates", self.k_gates),
            ("T1_s", self.t1),
            ("T2_s", self.t2),
        ];
        for (name, (lo, hi)) in all {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("bounds [{lo}, {hi}] are not a finite positive interval"),
                });
            }
        }
        for (name, (_, hi)) in [
            ("alpha", self.alpha),
            ("eta_f", self.eta_f),
            ("f_elem", self.f_elem),
            ("p_emd", self.p_emd),
        ] {
            let limit = if name == "alpha" { 0.5 } else { OPEN_UPPER };
            if hi > limit {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("upper bound {hi} exceeds {limit}"),
                });
            }
        }
        if self.k_gates.0 < 1.0 {
            return Err(Error::InvalidParameter {
                name: "k_gates",
                reason: "improvement factor below 1 would worsen the baseline".into(),
            });
        }
        Ok(())
    }
}

/// One optimizer individual. For single-click links `link_fidelity` is the
/// state efficiency eta_f; for double-click it is f_elem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub link_fidelity: f64,
    pub p_emd: f64,
    pub k_gates: f64,
    #[serde(rename = "T1_s")]
    pub t1: f64,
    #[serde(rename = "T2_s")]
    pub t2: f64,
    pub strategy: Strategy,
}

impl Genome {
    /// The genome sitting exactly on the baseline hardware.
    pub fn baseline(base: &HardwareParams, strategy: Strategy) -> Self {
        let link_fidelity = match strategy.link {
            LinkProtocol::SingleClick { .. } => base.eta_f,
            LinkProtocol::DoubleClick => base.f_elem,
        };
        Self {
            link_fidelity,
            p_emd: base.p_emd,
            k_gates: 1.0,
            t1: base.t1,
            t2: base.t2,
            strategy,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        self.strategy.link.alpha()
    }

    pub fn check_bounds(&self, b: &Bounds) -> Result<()> {
        self.strategy.validate()?;
        let inside = |(lo, hi): (f64, f64), x: f64| x >= lo && x <= hi;
        let mut checks = vec![
            ("link_fidelity", b.link_fidelity(&self.strategy.link), self.link_fidelity),
            ("p_emd", b.p_emd, self.p_emd),
            ("k_gates", b.k_gates, self.k_gates),
            ("T1_s", b.t1, self.t1),
            ("T2_s", b.t2, self.t2),
        ];
        if let Some(a) = self.alpha() {
            checks.push(("alpha", b.alpha, a));
        }
        for (name, range, x) in checks {
            if !inside(range, x) {
                return Err(Error::OutOfBounds(format!(
                    "{name} = {x} outside [{}, {}]",
                    range.0, range.1
                )));
            }
        }
        if self.t2 > 2.0 * self.t1 {
            return Err(Error::OutOfBounds(format!(
                "T2 = {} exceeds 2*T1 = {}",
                self.t2,
                2.0 * self.t1
            )));
        }
        Ok(())
    }
}

/// Hardware described by a genome. All five gate-based errors are divided
/// by `k_gates`; double-click runs use unit visibility so f_lm = f_elem.
pub fn genome_to_params(g: &Genome, base: &HardwareParams, bounds: &Bounds) -> Result<HardwareParams> {
    g.check_bounds(bounds)?;
    let mut hw = base.clone();
    let k = g.k_gates;
    hw.p1 = base.p1 / k;
    hw.p2 = base.p2 / k;
    hw.xi0 = base.xi0 / k;
    hw.xi1 = base.xi1 / k;
    hw.p_init = base.p_init / k;
    hw.p_emd = g.p_emd;
    hw.t1 = g.t1;
    hw.t2 = g.t2;
    match g.strategy.link {
        LinkProtocol::SingleClick { .. } => hw.eta_f = g.link_fidelity,
        LinkProtocol::DoubleClick => {
            hw.f_elem = g.link_fidelity;
            hw.visibility = 1.0;
        }
    }
    hw.validate()?;
    Ok(hw)
}
