//! Exact time-ordered evolution of the detector and a truncated field.
//!
//! The interaction-picture Hamiltonian
//!
//! ```text
//! H(t) = λ χ(t) [σ₊ ⊗ A(t) + σ₋ ⊗ A(t)†]
//! A(t) = e^{iΩt} Σ_n [ (η̄f_n)* e^{iω_n t} b_n† + (h̄_n η) e^{-iω_n t} d_n ]
//! ```
//!
//! is integrated with the midpoint exponential product
//! `U ≈ Π_k exp(-i H(t_k + dt/2) dt)`, each factor from a Hermitian
//! eigendecomposition. Every step is exactly unitary; the product is second
//! order in `dt`.
//!
//! `σ₊` always comes with `b†` or `d`, so `N_b - N_d - (detector level)` is
//! conserved and the propagators are block diagonal in that charge. Steps are
//! taken sector by sector, which keeps the largest eigenproblem at 10 of 32
//! dimensions for two modes.

mod compare;
mod fock;

pub use compare::{
    compare_with_perturbation, dt_halving, second_order_reference, trace_distance, ComparisonRow,
    DtHalving, SecondOrder,
};
pub use fock::{build_operators, CMatrix, ModeOperators, TruncatedSpace, MAX_MODES};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::coupling::{smear, DetectorConfig, SwitchingProfile};
use crate::error::{Error, Result};
use crate::spectrum::{solve_modes, CavityConfig, Mode, Species};

/// Largest number of integration steps accepted.
pub const MAX_STEPS: f64 = 1e7;
/// Drift beyond which trace and Hermiticity are restored.
pub const RESTORE_THRESHOLD: f64 = 1e-12;
/// Drift beyond which the evolution is rejected.
pub const FAILURE_THRESHOLD: f64 = 1e-8;

/// Initial state of the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldState {
    Vacuum,
    /// Gibbs state of the truncated modes at temperature `T_R`.
    Thermal {
        temperature: f64,
    },
}

/// A density matrix on the truncated space with its evolution record.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    pub rho: CMatrix,
    pub time: f64,
    pub steps: usize,
    /// `|tr ρ - 1|` before any restoration.
    pub trace_drift: f64,
    /// `max |ρ - ρ†|` before any restoration.
    pub hermiticity_drift: f64,
}

impl OracleState {
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }
}

/// Observables of one channel run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMeasurement {
    pub delta_p: f64,
    /// `tr[H_f (ρ_f(T) - ρ_f(0))]`.
    pub heat: f64,
    /// `S(ρ_D(0)) - S(ρ_D(T))`.
    pub entropy_change: f64,
}

/// Detector, truncated field and the operators acting on them.
#[derive(Debug, Clone)]
pub struct OracleSystem {
    space: TruncatedSpace,
    ops: ModeOperators,
    modes: Vec<Mode>,
    detector: DetectorConfig,
    switching: SwitchingProfile,
    /// `b_n†` and `d_n` per mode, on the field factor.
    creators: Vec<CMatrix>,
    /// Diagonal of `H_f` on the field basis.
    field_energies: Vec<f64>,
    /// Full-space indices grouped by the conserved charge
    /// `N_b - N_d - (detector level)`; `H_int` never connects two groups.
    sectors: Vec<Vec<usize>>,
}

impl OracleSystem {
    pub fn new(
        cavity: &CavityConfig,
        detector: &DetectorConfig,
        switching: SwitchingProfile,
        n_modes: usize,
    ) -> Result<Self> {
        let space = TruncatedSpace::new(n_modes)?;
        let ops = build_operators(&space);
        let modes = solve_modes(cavity, n_modes)?;
        let creators = (1..=n_modes).map(|n| ops.fermion(n).adjoint()).collect();
        let field_energies = (0..space.field_dim())
            .map(|state| {
                (0..space.slots())
                    .filter(|&slot| space.occupied(state, slot))
                    .map(|slot| modes[slot / 2].omega)
                    .sum()
            })
            .collect();
        let sectors = charge_sectors(&space);
        Ok(OracleSystem {
            space,
            ops,
            modes,
            detector: *detector,
            switching,
            creators,
            field_energies,
            sectors,
        })
    }

    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    pub fn operators(&self) -> &ModeOperators {
        &self.ops
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn detector(&self) -> &DetectorConfig {
        &self.detector
    }

    pub fn switching(&self) -> SwitchingProfile {
        self.switching
    }

    /// Same system with a different coupling strength.
    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        let mut next = self.clone();
        next.detector = self.detector.with_coupling(coupling)?;
        Ok(next)
    }

    /// Same system with a different initial detector population.
    pub fn with_population(&self, p: f64) -> Result<Self> {
        let mut next = self.clone();
        next.detector = self.detector.with_population(p)?;
        Ok(next)
    }

    /// `H_f = Σ ω_n (b_n†b_n + d_n†d_n)` on the field factor.
    pub fn field_hamiltonian(&self) -> CMatrix {
        let dim = self.space.field_dim();
        DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(self.field_energies[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Product state `ρ_D ⊗ ρ_f` with `ρ_D = diag(1-p, p)`.
    pub fn initial_state(&self, field: FieldState) -> Result<OracleState> {
        let p = self.detector.excited_population;
        let weights: Vec<f64> = match field {
            FieldState::Vacuum => {
                let mut w = vec![0.0; self.space.field_dim()];
                w[0] = 1.0;
                w
            }
            FieldState::Thermal { temperature } => {
                if !(temperature >= 0.0) {
                    return Err(Error::domain("T_R", temperature, "[0, inf]"));
                }
                let raw: Vec<f64> = self
                    .field_energies
                    .iter()
                    .map(|&e| {
                        if e == 0.0 {
                            1.0
                        } else {
                            (-e / temperature).exp()
                        }
                    })
                    .collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / z).collect()
            }
        };
        let f = self.space.field_dim();
        let mut rho = CMatrix::zeros(2 * f, 2 * f);
        for (a, w) in weights.iter().enumerate() {
            rho[(a, a)] = Complex64::new((1.0 - p) * w, 0.0);
            rho[(f + a, f + a)] = Complex64::new(p * w, 0.0);
        }
        Ok(OracleState {
            rho,
            time: 0.0,
            steps: 0,
            trace_drift: 0.0,
            hermiticity_drift: 0.0,
        })
    }

    /// The field operator `A(t)` multiplying `σ₊`, without `λχ(t)`.
    fn raising_block(&self, t: f64) -> CMatrix {
        let f = self.space.field_dim();
        let x = self.detector.worldline.position(t);
        let eta = &self.detector.eta;
        let mut block = CMatrix::zeros(f, f);
        for (i, mode) in self.modes.iter().enumerate() {
            let a_f = smear(
                &mode.spinor_unchecked(Species::Particle, x),
                Species::Particle,
                eta,
            );
            let a_h = smear(
                &mode.spinor_unchecked(Species::Antiparticle, x),
                Species::Antiparticle,
                eta,
            );
            let c_b = a_f.conj() * Complex64::from_polar(1.0, (self.detector.gap + mode.omega) * t);
            let c_d = a_h * Complex64::from_polar(1.0, (self.detector.gap - mode.omega) * t);
            block += &self.creators[i] * c_b;
            block += self.ops.antifermion(i + 1) * c_d;
        }
        block
    }

    /// `λχ(t) A(t)`, the lower-left block of `H_int(t)`; `None` while switched off.
    fn coupling_block(&self, t: f64) -> Option<CMatrix> {
        let strength = self.detector.coupling * self.switching.value(t, self.detector.duration);
        (strength != 0.0).then(|| self.raising_block(t) * Complex64::new(strength, 0.0))
    }

    /// `H_int(t)` on the full space.
    pub fn interaction_hamiltonian(&self, t: f64) -> CMatrix {
        let f = self.space.field_dim();
        let mut h = CMatrix::zeros(2 * f, 2 * f);
        if let Some(block) = self.coupling_block(t) {
            // Detector index 0 is |->, 1 is |+>; σ₊ ⊗ A fills the lower-left block.
            h.view_mut((f, 0), (f, f)).copy_from(&block);
            h.view_mut((0, f), (f, f)).copy_from(&block.adjoint());
        }
        h
    }

    /// `H_int` restricted to one charge sector, given its lower-left block.
    fn sector_hamiltonian(&self, block: &CMatrix, sector: &[usize]) -> CMatrix {
        let f = self.space.field_dim();
        CMatrix::from_fn(sector.len(), sector.len(), |i, j| {
            let (a, b) = (sector[i], sector[j]);
            match (a >= f, b >= f) {
                (true, false) => block[(a - f, b)],
                (false, true) => block[(b - f, a)].conj(),
                _ => Complex64::new(0.0, 0.0),
            }
        })
    }

    /// Evolve `initial` over `[0, T]` with step close to `dt`.
    pub fn evolve(&self, initial: &OracleState, dt: f64) -> Result<OracleState> {
        let duration = self.detector.duration;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", dt, "(0, inf)"));
        }
        let ratio = duration / dt;
        if ratio > MAX_STEPS {
            return Err(Error::invalid(
                "dt",
                format!("T/dt = {ratio:.3e} exceeds the step cap {MAX_STEPS:e}"),
            ));
        }
        let steps = (ratio - 1e-9).ceil().max(1.0) as usize;
        let h = duration / steps as f64;

        // Work in the charge-sector basis, where every propagator is block diagonal.
        let order: Vec<usize> = self.sectors.iter().flatten().copied().collect();
        let dim = order.len();
        let mut offsets = Vec::with_capacity(self.sectors.len());
        let mut start = 0;
        for sector in &self.sectors {
            offsets.push((start, sector.len()));
            start += sector.len();
        }
        let mut rho = CMatrix::from_fn(dim, dim, |i, j| initial.rho[(order[i], order[j])]);
        let mut propagators: Vec<CMatrix> = Vec::with_capacity(self.sectors.len());
        for k in 0..steps {
            let t_mid = (k as f64 + 0.5) * h;
            let Some(block) = self.coupling_block(t_mid) else {
                continue;
            };
            propagators.clear();
            propagators.extend(
                self.sectors
                    .iter()
                    .map(|sector| step_propagator(self.sector_hamiltonian(&block, sector), h)),
            );
            // Left factor U_s on each block row, then U_t† on each block column.
            for (s, &(r0, rn)) in offsets.iter().enumerate() {
                let rows = rho.rows(r0, rn).into_owned();
                rho.rows_mut(r0, rn).copy_from(&(&propagators[s] * rows));
            }
            for (t, &(c0, cn)) in offsets.iter().enumerate() {
                let cols = rho.columns(c0, cn).into_owned();
                rho.columns_mut(c0, cn)
                    .copy_from(&(cols * propagators[t].adjoint()));
            }
        }
        let mut restored = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                restored[(order[i], order[j])] = rho[(i, j)];
            }
        }
        let mut rho = restored;

        let trace_drift = (rho.trace().re - 1.0).abs().max(rho.trace().im.abs());
        let hermiticity_drift = (&rho - rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if trace_drift > FAILURE_THRESHOLD || hermiticity_drift > FAILURE_THRESHOLD {
            return Err(Error::NumericalFailure(format!(
                "density matrix drifted: trace {trace_drift:e}, hermiticity {hermiticity_drift:e}"
            )));
        }
        if trace_drift > RESTORE_THRESHOLD || hermiticity_drift > RESTORE_THRESHOLD {
            rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
            let tr = rho.trace().re;
            rho /= Complex64::new(tr, 0.0);
        }
        let min_eigenvalue = SymmetricEigen::new(rho.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -1e-10 {
            return Err(Error::NumericalFailure(format!(
                "density matrix lost positivity: eigenvalue {min_eigenvalue:e}"
            )));
        }
        Ok(OracleState {
            rho,
            time: initial.time + duration,
            steps: initial.steps + steps,
            trace_drift,
            hermiticity_drift,
        })
    }

    /// Reduced detector state `tr_f ρ`.
    pub fn detector_state(&self, state: &OracleState) -> CMatrix {
        let f = self.space.field_dim();
        CMatrix::from_fn(2, 2, |i, j| {
            (0..f).map(|a| state.rho[(i * f + a, j * f + a)]).sum()
        })
    }

    /// Reduced field state `tr_D ρ`.
    pub fn field_state(&self, state: &OracleState) -> CMatrix {
        let f = self.space.field_dim();
        CMatrix::from_fn(f, f, |a, b| state.rho[(a, b)] + state.rho[(f + a, f + b)])
    }

    /// Compare two states: `δp`, `ΔQ` and the detector entropy change.
    pub fn measure_channel(
        &self,
        initial: &OracleState,
        final_state: &OracleState,
    ) -> ChannelMeasurement {
        let d0 = self.detector_state(initial);
        let d1 = self.detector_state(final_state);
        let f = self.space.field_dim();
        let heat = (0..f)
            .map(|a| {
                let before = initial.rho[(a, a)].re + initial.rho[(f + a, f + a)].re;
                let after = final_state.rho[(a, a)].re + final_state.rho[(f + a, f + a)].re;
                self.field_energies[a] * (after - before)
            })
            .sum();
        ChannelMeasurement {
            delta_p: d1[(1, 1)].re - d0[(1, 1)].re,
            heat,
            entropy_change: qubit_entropy(&d0) - qubit_entropy(&d1),
        }
    }
}

/// `exp(-i H dt)` for Hermitian `H`.
fn step_propagator(ham: CMatrix, dt: f64) -> CMatrix {
    let eig = SymmetricEigen::new(ham);
    let mut scaled = eig.eigenvectors.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -e * dt);
        scaled.column_mut(j).apply(|z| *z *= phase);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Group full-space indices `det·F + field` by `N_b - N_d - det`.
fn charge_sectors(space: &TruncatedSpace) -> Vec<Vec<usize>> {
    let f = space.field_dim();
    let charge = |state: usize| -> i64 {
        (0..space.slots())
            .filter(|&slot| space.occupied(state, slot))
            .map(|slot| if slot % 2 == 0 { 1 } else { -1 })
            .sum()
    };
    let mut groups: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for det in 0..2 {
        for state in 0..f {
            groups
                .entry(charge(state) - det as i64)
                .or_default()
                .push(det * f + state);
        }
    }
    groups.into_values().collect()
}

/// Von Neumann entropy of a 2x2 density matrix, in nats.
pub fn qubit_entropy(rho: &CMatrix) -> f64 {
    let a = rho[(0, 0)].re;
    let d = rho[(1, 1)].re;
    let b = rho[(0, 1)];
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean + radius, mean - radius]
        .into_iter()
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}
