//! Second-order reference for the truncated system and oracle comparisons.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use super::{CMatrix, FieldState, OracleState, OracleSystem};
use crate::coupling::compute_coupling_set;
use crate::entropy::binary_entropy;
use crate::error::Result;
use crate::thermal::fermi_occupation;

/// Leading-order prediction for every mode of the truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrder {
    pub delta_p: f64,
    pub heat: f64,
    /// `S₂(p) - S₂(p + δp)`.
    pub entropy_change: f64,
}

/// All second-order processes of the truncated modes, each mode thermally
/// occupied at `T_R` (zero for the vacuum).
pub fn second_order_reference(system: &OracleSystem, field: FieldState) -> Result<SecondOrder> {
    let detector = system.detector();
    let switching = system.switching();
    let temperature = match field {
        FieldState::Vacuum => 0.0,
        FieldState::Thermal { temperature } => temperature,
    };
    let p = detector.excited_population;
    let l2 = detector.coupling * detector.coupling;
    let mut delta_p = 0.0;
    let mut heat = 0.0;
    let modes = system.modes();
    let set = compute_coupling_set(modes[0].cavity(), detector, modes.len(), switching)?;
    for ((mode, w2), v2) in set.modes.iter().zip(set.abs_w2()).zip(set.abs_v2()) {
        let nu = fermi_occupation(mode.omega, temperature);
        delta_p += l2 * ((1.0 - p) * (w2 * (1.0 - nu) + v2 * nu) - p * (w2 * nu + v2 * (1.0 - nu)));
        heat += l2
            * mode.omega
            * ((1.0 - p) * (w2 * (1.0 - nu) - v2 * nu) + p * (v2 * (1.0 - nu) - w2 * nu));
    }
    Ok(SecondOrder {
        delta_p,
        heat,
        entropy_change: binary_entropy(p)? - binary_entropy((p + delta_p).clamp(0.0, 1.0))?,
    })
}

/// Exact against perturbative observables at one coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub dt: f64,
    pub delta_p_exact: f64,
    pub delta_p_pert: f64,
    pub heat_exact: f64,
    pub heat_pert: f64,
    pub entropy_exact: f64,
    pub entropy_pert: f64,
}

impl ComparisonRow {
    pub fn rel_err_delta_p(&self) -> f64 {
        relative(self.delta_p_exact, self.delta_p_pert)
    }

    pub fn rel_err_heat(&self) -> f64 {
        relative(self.heat_exact, self.heat_pert)
    }
}

fn relative(exact: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        (exact - reference).abs()
    } else {
        ((exact - reference) / reference).abs()
    }
}

/// Run the oracle and the second-order reference for each coupling.
pub fn compare_with_perturbation(
    system: &OracleSystem,
    field: FieldState,
    lambdas: &[f64],
    dt: f64,
) -> Result<Vec<ComparisonRow>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let sys = system.with_coupling(lambda)?;
            let initial = sys.initial_state(field)?;
            let evolved = sys.evolve(&initial, dt)?;
            let exact = sys.measure_channel(&initial, &evolved);
            let pert = second_order_reference(&sys, field)?;
            Ok(ComparisonRow {
                lambda,
                dt,
                delta_p_exact: exact.delta_p,
                delta_p_pert: pert.delta_p,
                heat_exact: exact.heat,
                heat_pert: pert.heat,
                entropy_exact: exact.entropy_change,
                entropy_pert: pert.entropy_change,
            })
        })
        .collect()
}

/// Step-size study: trace distances between successive halvings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtHalving {
    pub dt: f64,
    /// `‖ρ(dt) - ρ(dt/2)‖₁`.
    pub coarse: f64,
    /// `‖ρ(dt/2) - ρ(dt/4)‖₁`.
    pub fine: f64,
}

impl DtHalving {
    /// Ratio of successive differences; 4 for a second-order integrator.
    pub fn contraction(&self) -> f64 {
        self.coarse / self.fine
    }
}

pub fn dt_halving(system: &OracleSystem, field: FieldState, dt: f64) -> Result<DtHalving> {
    let initial = system.initial_state(field)?;
    let states = [dt, dt / 2.0, dt / 4.0]
        .iter()
        .map(|&h| system.evolve(&initial, h))
        .collect::<Result<Vec<OracleState>>>()?;
    Ok(DtHalving {
        dt,
        coarse: trace_distance(&states[0].rho, &states[1].rho),
        fine: trace_distance(&states[1].rho, &states[2].rho),
    })
}

/// Trace norm of `a - b` for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b + (a - b).adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(diff)
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum()
}
