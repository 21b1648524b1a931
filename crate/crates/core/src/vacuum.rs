//! Second-order channel for a detector coupled to the field vacuum.
//!
//! Only the diagonal of the reduced detector and field states matters for
//! heat and entropy. To order `λ²`:
//!
//! ```text
//! δp = λ² Σ_n [(1-p)|W_n|² - p|V_n|²]
//! ΔQ = λ² Σ_n [(1-p)|W_n|² + p|V_n|²] ω_n
//! ΔS = λ² ln((1-p)/p) Σ_n [p|V_n|² - (1-p)|W_n|²]
//! ```
//!
//! `ΔS = S(ρ_D(0)) - S(ρ_D(T))` is the linearization of the binary entropy
//! difference; the exact difference of the order-`λ²` detector state is
//! reported next to it.

use crate::coupling::{compute_coupling_set, CouplingSet, DetectorConfig, SwitchingProfile};
use crate::entropy::{binary_entropy, log_odds_ratio};
use crate::error::{Error, Result};
use crate::spectrum::CavityConfig;

/// Largest total second-order transition weight accepted before the
/// expansion is declared broken.
pub const MAX_TRANSITION_WEIGHT: f64 = 0.1;

/// Heat and entropy carried by one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeContribution {
    pub n: usize,
    pub heat: f64,
    /// `None` where the linearized entropy is undefined (`p ∈ {0, 1}`).
    pub entropy: Option<f64>,
}

/// Diagonal of the final field state in the vacuum / one-particle sector.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDiagonal {
    pub vacuum: f64,
    pub fermion: Vec<f64>,
    pub antifermion: Vec<f64>,
}

impl FieldDiagonal {
    pub fn trace(&self) -> f64 {
        self.vacuum + self.fermion.iter().sum::<f64>() + self.antifermion.iter().sum::<f64>()
    }
}

/// Outcome of a perturbative channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResult {
    pub delta_p: f64,
    /// Heat `ΔQ` delivered to the field.
    pub heat: f64,
    /// Linearized `ΔS`; undefined at `p ∈ {0, 1}`.
    pub entropy_linear: Option<f64>,
    /// `S₂(p) - S₂(p + δp)`.
    pub entropy_exact: f64,
    /// `ΔQ - T_R ΔS`.
    pub landauer_margin: f64,
    pub per_mode: Vec<ModeContribution>,
    pub field_diag: Option<FieldDiagonal>,
}

impl ChannelResult {
    /// The entropy change used for bounds: linearized when defined, else exact.
    pub fn entropy(&self) -> f64 {
        self.entropy_linear.unwrap_or(self.entropy_exact)
    }
}

pub(crate) fn check_perturbative(p: f64, delta_p: f64, weight: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&(p + delta_p)) {
        return Err(Error::PerturbationBreakdown(format!(
            "p + δp = {} is not a probability; reduce lambda",
            p + delta_p
        )));
    }
    if weight > MAX_TRANSITION_WEIGHT {
        return Err(Error::PerturbationBreakdown(format!(
            "second-order transition weight {weight:.4} exceeds {MAX_TRANSITION_WEIGHT}; reduce lambda or T"
        )));
    }
    Ok(())
}

/// Apply the vacuum channel to a precomputed coupling set.
pub fn apply_vacuum_channel(
    couplings: &CouplingSet,
    detector: &DetectorConfig,
) -> Result<ChannelResult> {
    let p = detector.excited_population;
    let l2 = detector.coupling * detector.coupling;
    let log_odds = log_odds_ratio(p);

    let mut delta_p = 0.0;
    let mut heat = 0.0;
    let mut weight = 0.0;
    let mut per_mode = Vec::with_capacity(couplings.n_max);
    let mut fermion = Vec::with_capacity(couplings.n_max);
    let mut antifermion = Vec::with_capacity(couplings.n_max);
    for ((mode, w2), v2) in couplings
        .modes
        .iter()
        .zip(couplings.abs_w2())
        .zip(couplings.abs_v2())
    {
        let up = l2 * (1.0 - p) * w2;
        let down = l2 * p * v2;
        let dq = (up + down) * mode.omega;
        delta_p += up - down;
        heat += dq;
        weight += l2 * (w2 + v2);
        fermion.push(up);
        antifermion.push(down);
        per_mode.push(ModeContribution {
            n: mode.n,
            heat: dq,
            entropy: log_odds.map(|lo| lo * (down - up)),
        });
    }
    check_perturbative(p, delta_p, weight)?;

    let vacuum = 1.0 - fermion.iter().sum::<f64>() - antifermion.iter().sum::<f64>();
    let entropy_linear = log_odds.map(|lo| -lo * delta_p);
    let entropy_exact = binary_entropy(p)? - binary_entropy(p + delta_p)?;
    Ok(ChannelResult {
        delta_p,
        heat,
        entropy_linear,
        entropy_exact,
        // T_R = 0: the bound reduces to ΔQ ≥ 0.
        landauer_margin: heat,
        per_mode,
        field_diag: Some(FieldDiagonal {
            vacuum,
            fermion,
            antifermion,
        }),
    })
}

/// One row of a truncation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_max: usize,
    pub heat: f64,
    pub delta_p: f64,
    pub tail_estimate: f64,
}

/// Evaluate the vacuum channel at each truncation in `n_max_list`.
pub fn convergence_report(
    cavity: &CavityConfig,
    detector: &DetectorConfig,
    n_max_list: &[usize],
    switching: SwitchingProfile,
) -> Result<Vec<ConvergenceRow>> {
    let Some(&largest) = n_max_list.last() else {
        return Err(Error::invalid(
            "n_max_list",
            "at least one truncation is required",
        ));
    };
    if n_max_list[0] == 0 || n_max_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "n_max_list",
            "truncations must be positive and strictly increasing",
        ));
    }
    let full = compute_coupling_set(cavity, detector, largest, switching)?;
    n_max_list
        .iter()
        .map(|&n| {
            let set = full.truncated(n)?;
            let result = apply_vacuum_channel(&set, detector)?;
            Ok(ConvergenceRow {
                n_max: n,
                heat: result.heat,
                delta_p: result.delta_p,
                tail_estimate: set.tail_estimate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{ReferenceSpinor, Worldline};
    use crate::spectrum::solve_mode;

    fn setup(p: f64, lambda: f64) -> (CavityConfig, DetectorConfig) {
        let cavity = CavityConfig::new(1.0, 1.0).unwrap();
        let gap = solve_mode(&cavity, 1).unwrap().omega;
        let det = DetectorConfig::new(
            gap,
            lambda,
            5.0,
            Worldline::fixed(0.3, &cavity).unwrap(),
            ReferenceSpinor::default(),
            p,
        )
        .unwrap();
        (cavity, det)
    }

    fn run(p: f64, lambda: f64, n_max: usize) -> ChannelResult {
        let (cavity, det) = setup(p, lambda);
        let set = compute_coupling_set(&cavity, &det, n_max, SwitchingProfile::Sharp).unwrap();
        apply_vacuum_channel(&set, &det).unwrap()
    }

    #[test]
    fn half_population_has_no_linear_entropy() {
        let r = run(0.5, 0.01, 20);
        assert_eq!(r.entropy_linear, Some(0.0));
        assert!(r.per_mode.iter().all(|m| m.entropy == Some(0.0)));
    }

    #[test]
    fn ground_state_detector() {
        let (cavity, det) = setup(0.0, 0.01);
        let set = compute_coupling_set(&cavity, &det, 20, SwitchingProfile::Sharp).unwrap();
        let r = apply_vacuum_channel(&set, &det).unwrap();
        let w2: f64 = set.abs_w2().sum();
        let heat: f64 = set
            .abs_w2()
            .zip(&set.modes)
            .map(|(w2, m)| w2 * m.omega)
            .sum();
        assert!((r.delta_p - 1e-4 * w2).abs() < 1e-18);
        assert!((r.heat - 1e-4 * heat).abs() < 1e-16);
        assert!(r.delta_p > 0.0 && r.heat > 0.0);
        assert_eq!(r.entropy_linear, None);
        let expected = -binary_entropy(r.delta_p).unwrap();
        assert!((r.entropy_exact - expected).abs() < 1e-16);
        assert!(r.entropy_exact < 0.0);
        assert_eq!(r.landauer_margin, r.heat);
    }

    #[test]
    fn field_trace_is_preserved() {
        for p in [0.0, 0.2, 0.9, 1.0] {
            let r = run(p, 0.01, 30);
            let diag = r.field_diag.as_ref().unwrap();
            assert!((diag.trace() - 1.0).abs() < 1e-12);
            assert!(diag
                .fermion
                .iter()
                .chain(&diag.antifermion)
                .all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn per_mode_sums_match_totals() {
        let r = run(0.3, 0.01, 15);
        let heat: f64 = r.per_mode.iter().map(|m| m.heat).sum();
        let ds: f64 = r.per_mode.iter().map(|m| m.entropy.unwrap()).sum();
        assert!((heat - r.heat).abs() <= 1e-15 * r.heat.abs());
        assert!((ds - r.entropy_linear.unwrap()).abs() < 1e-15);
    }

    #[test]
    fn linearization_error_is_second_order() {
        let ratio = |lambda: f64| {
            let r = run(0.3, lambda, 20);
            (r.entropy_exact - r.entropy_linear.unwrap()).abs() / (lambda * lambda)
        };
        assert!(ratio(0.02) / ratio(0.01) >= 3.0);
    }

    #[test]
    fn breakdown_is_reported() {
        let (cavity, det) = setup(0.3, 0.2);
        let set = compute_coupling_set(&cavity, &det, 10, SwitchingProfile::Sharp).unwrap();
        let err = apply_vacuum_channel(&set, &det).unwrap_err();
        assert!(matches!(err, Error::PerturbationBreakdown(_)));
    }

    #[test]
    fn convergence_is_monotone() {
        let (cavity, det) = setup(0.4, 0.01);
        let rows =
            convergence_report(&cavity, &det, &[10, 20, 40], SwitchingProfile::Sharp).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.windows(2).all(|w| w[1].heat >= w[0].heat));
        assert!(convergence_report(&cavity, &det, &[20, 10], SwitchingProfile::Sharp).is_err());
        assert!(convergence_report(&cavity, &det, &[], SwitchingProfile::Sharp).is_err());
    }
}
