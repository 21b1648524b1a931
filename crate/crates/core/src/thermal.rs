//! Resonant-mode channel for a field prepared in a thermal state.
//!
//! The thermal state factorizes over modes, each mode `n` carrying the four
//! occupations `(j_n, j̄_n)` with weight `e^{-β(j_n + j̄_n)ω_n} / Z_n`,
//! `Z_n = (1 + e^{-βω_n})²`. When the detector rests in resonance with mode
//! `B` and `T` is long, `V_B` grows like `T` while every other amplitude stays
//! bounded, so only mode `B` is kept:
//!
//! ```text
//! X  = p P0 + (2p-1) P1 - (1-p) P2
//! δp = -λ² |V_B|² X
//! ΔQ =  λ² ω_B |V_B|² X
//! ΔS =  λ² ln((1-p)/p) |V_B|² X
//! ```
//!
//! Because `P0 + 2P1 + P2 = 1`, `X` reduces to `p - n̄_B` with
//! `n̄_B = e^{-βω_B}/(1 + e^{-βω_B})` the Fermi occupation of the mode.

use num_complex::Complex64;

use crate::coupling::{DetectorConfig, WorldlineKind};
use crate::entropy::{binary_entropy, log_odds_ratio};
use crate::error::{Error, Result};
use crate::spectrum::Mode;
use crate::vacuum::{check_perturbative, ChannelResult, ModeContribution};

/// Largest `|Ω - ω_B|·T` for which the resonance approximation is applied.
pub const RESONANCE_GATE: f64 = 1e-6;

/// Single-mode marginals of the thermal field state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOccupancy {
    /// `1/T_R`; infinite for the vacuum.
    pub beta: f64,
    pub omega_b: f64,
    pub partition: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// Mean occupation of either slot, `P1 + P2`.
    pub occupation: f64,
}

/// `e^{-ω/T}/(1 + e^{-ω/T})`, with the limits `T → 0` and `T → ∞` built in.
pub(crate) fn fermi_occupation(omega: f64, temperature: f64) -> f64 {
    let q = (-omega / temperature).exp();
    q / (1.0 + q)
}

/// Marginal probabilities of the resonant mode at field temperature `T_R`.
///
/// `T_R = 0` gives the vacuum and `T_R = ∞` equipartition.
pub fn occupation_marginals(field_temperature: f64, omega_b: f64) -> Result<ThermalOccupancy> {
    if !(field_temperature >= 0.0) {
        return Err(Error::domain("T_R", field_temperature, "[0, inf]"));
    }
    if !(omega_b > 0.0 && omega_b.is_finite()) {
        return Err(Error::domain("omega_B", omega_b, "(0, inf)"));
    }
    let q = (-omega_b / field_temperature).exp();
    let partition = (1.0 + q) * (1.0 + q);
    Ok(ThermalOccupancy {
        beta: 1.0 / field_temperature,
        omega_b,
        partition,
        p0: 1.0 / partition,
        p1: q / partition,
        p2: q * q / partition,
        occupation: fermi_occupation(omega_b, field_temperature),
    })
}

/// How a detector temperature maps to its excited-state population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemperatureConvention {
    /// Boltzmann weight of the excited level, `p ≤ 1/2`.
    #[default]
    Gibbs,
    /// `p = e^{ω/T_D}/(e^{ω/T_D} + 1)`, i.e. `p ≥ 1/2`.
    Paper,
}

/// Excited-state population of a detector at temperature `T_D`.
pub fn p_from_temperature(
    detector_temperature: f64,
    omega: f64,
    convention: TemperatureConvention,
) -> Result<f64> {
    if !(detector_temperature > 0.0) {
        return Err(Error::domain("T_D", detector_temperature, "(0, inf]"));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::domain("omega", omega, "(0, inf)"));
    }
    Ok(match convention {
        TemperatureConvention::Gibbs => fermi_occupation(omega, detector_temperature),
        TemperatureConvention::Paper => 1.0 / (1.0 + (-omega / detector_temperature).exp()),
    })
}

/// The mode singled out by the resonance approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceSpec {
    /// 1-based mode index `B`.
    pub mode_index: usize,
    pub omega_b: f64,
    /// `|Ω - ω_B|·T`.
    pub detuning: f64,
}

impl ResonanceSpec {
    /// Pick the mode closest in frequency to the detector gap.
    pub fn nearest(modes: &[Mode], detector: &DetectorConfig) -> Result<Self> {
        let mode = modes
            .iter()
            .min_by(|a, b| {
                (a.omega - detector.gap)
                    .abs()
                    .total_cmp(&(b.omega - detector.gap).abs())
            })
            .ok_or_else(|| Error::invalid("modes", "no modes to resonate with"))?;
        Ok(Self::for_mode(mode, detector))
    }

    pub fn for_mode(mode: &Mode, detector: &DetectorConfig) -> Self {
        ResonanceSpec {
            mode_index: mode.n,
            omega_b: mode.omega,
            detuning: (detector.gap - mode.omega).abs() * detector.duration,
        }
    }

    pub fn is_resonant(&self) -> bool {
        self.detuning < RESONANCE_GATE
    }
}

/// `ΔQ - T_R ΔS`.
pub fn landauer_margin(heat: f64, entropy: f64, field_temperature: f64) -> f64 {
    if field_temperature == 0.0 {
        return heat;
    }
    heat - field_temperature * entropy
}

/// Apply the resonant thermal channel.
///
/// Refuses detuned configurations (`|Ω - ω_B|·T ≥ 1e-6`) and moving detectors
/// unless `allow_detuned` is set.
pub fn apply_thermal_channel(
    occupancy: &ThermalOccupancy,
    v_b: Complex64,
    detector: &DetectorConfig,
    resonance: &ResonanceSpec,
    allow_detuned: bool,
) -> Result<ChannelResult> {
    if !allow_detuned {
        if !resonance.is_resonant() {
            return Err(Error::invalid(
                "omega",
                format!(
                    "detector is detuned from mode {} by |Ω-ω_B|·T = {:e} (gate {RESONANCE_GATE:e})",
                    resonance.mode_index, resonance.detuning
                ),
            ));
        }
        if detector.worldline.kind() != WorldlineKind::Static {
            return Err(Error::invalid(
                "velocity",
                "the resonance approximation assumes a static detector",
            ));
        }
    }
    if occupancy.omega_b != resonance.omega_b {
        return Err(Error::invalid(
            "occupancy",
            "marginals were computed for a different mode frequency",
        ));
    }
    let p = detector.excited_population;
    let l2 = detector.coupling * detector.coupling;
    let v2 = v_b.norm_sqr();

    // p P0 + (2p-1) P1 - (1-p) P2, folded with P0 + 2P1 + P2 = 1.
    let x = p - occupancy.occupation;
    let delta_p = -l2 * v2 * x;
    check_perturbative(p, delta_p, l2 * v2)?;

    let heat = l2 * occupancy.omega_b * v2 * x;
    let entropy_linear = log_odds_ratio(p).map(|lo| l2 * lo * v2 * x);
    let entropy_exact = binary_entropy(p)? - binary_entropy(p + delta_p)?;
    let temperature = 1.0 / occupancy.beta;
    let landauer = landauer_margin(heat, entropy_linear.unwrap_or(entropy_exact), temperature);
    Ok(ChannelResult {
        delta_p,
        heat,
        entropy_linear,
        entropy_exact,
        landauer_margin: landauer,
        per_mode: vec![ModeContribution {
            n: resonance.mode_index,
            heat,
            entropy: entropy_linear,
        }],
        field_diag: None,
    })
}

/// `X = p P0 + (2p-1) P1 - (1-p) P2` term by term.
pub fn population_imbalance(occupancy: &ThermalOccupancy, p: f64) -> f64 {
    p * occupancy.p0 + (2.0 * p - 1.0) * occupancy.p1 - (1.0 - p) * occupancy.p2
}
