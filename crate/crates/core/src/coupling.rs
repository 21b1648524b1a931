//! First-order coupling amplitudes of the detector to each cavity mode.
//!
//! ```text
//! W_n = ∫₀ᵀ χ(t) e^{-i(Ω+ω_n)t} η̄ f_n[x(t)] dt
//! V_n = ∫₀ᵀ χ(t) e^{+i(Ω-ω_n)t} h̄_n[x(t)] η dt
//! ```
//!
//! `η` is modelled as a normalized c-number reference spinor, so both
//! amplitudes are ordinary complex numbers and only their moduli feed the
//! channels downstream.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveSimpson;
use crate::spectrum::{solve_modes, CavityConfig, Mode, Species, Spinor};

/// Below this value of `|Ω - ω_n|·T` the resonant limit `amplitude·T` is used.
pub const RESONANCE_THRESHOLD: f64 = 1e-8;

/// Normalized reference spinor `η` used for smearing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSpinor(Spinor);

impl ReferenceSpinor {
    /// Build from two complex components; the result is normalized to `η†η = 1`.
    pub fn new(upper: Complex64, lower: Complex64) -> Result<Self> {
        let norm = (upper.norm_sqr() + lower.norm_sqr()).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(
                "eta",
                "reference spinor must be finite and nonzero",
            ));
        }
        Ok(ReferenceSpinor(Spinor::new(upper / norm, lower / norm)))
    }

    pub fn spinor(&self) -> &Spinor {
        &self.0
    }

    /// Multiply by a global phase `e^{iφ}`.
    pub fn with_phase(&self, phi: f64) -> Self {
        let phase = Complex64::from_polar(1.0, phi);
        ReferenceSpinor(Spinor::new(self.0.upper * phase, self.0.lower * phase))
    }
}

impl Default for ReferenceSpinor {
    fn default() -> Self {
        ReferenceSpinor(Spinor::real(1.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WorldlineKind {
    Static,
    Uniform,
}

/// Inertial detector trajectory `x(t) = x0 + v t`, validated to stay inside
/// the cavity for the whole horizon it was built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worldline {
    kind: WorldlineKind,
    x0: f64,
    velocity: f64,
    horizon: f64,
    length: f64,
}

impl Worldline {
    /// Detector at rest at `x0`.
    pub fn fixed(x0: f64, cavity: &CavityConfig) -> Result<Self> {
        if !(x0.is_finite() && (0.0..=cavity.length()).contains(&x0)) {
            return Err(Error::domain("x0", x0, "[0, L]"));
        }
        Ok(Worldline {
            kind: WorldlineKind::Static,
            x0,
            velocity: 0.0,
            horizon: f64::INFINITY,
            length: cavity.length(),
        })
    }

    /// Detector moving with constant velocity `v` for `duration`.
    pub fn uniform(x0: f64, velocity: f64, cavity: &CavityConfig, duration: f64) -> Result<Self> {
        if !(velocity.abs() < 1.0) {
            return Err(Error::domain("velocity", velocity, "(-1, 1)"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::domain("T", duration, "(0, inf)"));
        }
        let mut line = Worldline::fixed(x0, cavity)?;
        let end = x0 + velocity * duration;
        if !(0.0..=cavity.length()).contains(&end) {
            return Err(Error::invalid(
                "worldline",
                format!(
                    "detector leaves the cavity: x(T) = {end} for x0 = {x0}, v = {velocity}, T = {duration}"
                ),
            ));
        }
        line.kind = WorldlineKind::Uniform;
        line.velocity = velocity;
        line.horizon = duration;
        Ok(line)
    }

    pub fn kind(&self) -> WorldlineKind {
        self.kind
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    /// Latest time for which containment was checked.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn position(&self, t: f64) -> f64 {
        (self.x0 + self.velocity * t).clamp(0.0, self.length)
    }
}

/// Time profile `χ(t)` of the interaction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SwitchingProfile {
    /// `χ = 1` on `[0, T]`.
    #[default]
    Sharp,
    /// `sin²` ramps of length `fraction·T` at both ends.
    CosineRamp { fraction: f64 },
}

impl SwitchingProfile {
    pub fn cosine_ramp(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 0.5) {
            return Err(Error::domain("ramp fraction", fraction, "(0, 0.5)"));
        }
        Ok(SwitchingProfile::CosineRamp { fraction })
    }

    pub fn value(&self, t: f64, duration: f64) -> f64 {
        if !(0.0..=duration).contains(&t) {
            return 0.0;
        }
        match *self {
            SwitchingProfile::Sharp => 1.0,
            SwitchingProfile::CosineRamp { fraction } => {
                let ramp = fraction * duration;
                if t < ramp {
                    (0.5 * PI * t / ramp).sin().powi(2)
                } else if t > duration - ramp {
                    (0.5 * PI * (duration - t) / ramp).sin().powi(2)
                } else {
                    1.0
                }
            }
        }
    }

    /// Points where `χ` is not smooth.
    fn breakpoints(&self, duration: f64) -> Vec<f64> {
        match *self {
            SwitchingProfile::Sharp => vec![0.0, duration],
            SwitchingProfile::CosineRamp { fraction } => {
                let ramp = fraction * duration;
                vec![0.0, ramp, duration - ramp, duration]
            }
        }
    }

    fn max_frequency(&self, duration: f64) -> f64 {
        match *self {
            SwitchingProfile::Sharp => 0.0,
            SwitchingProfile::CosineRamp { fraction } => PI / (fraction * duration),
        }
    }
}

/// Unruh-DeWitt detector parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Energy gap `Ω`.
    pub gap: f64,
    /// Coupling strength `λ`.
    pub coupling: f64,
    /// Interaction duration `T`.
    pub duration: f64,
    pub worldline: Worldline,
    pub eta: ReferenceSpinor,
    /// Initial excited-state population `p`.
    pub excited_population: f64,
}

impl DetectorConfig {
    pub fn new(
        gap: f64,
        coupling: f64,
        duration: f64,
        worldline: Worldline,
        eta: ReferenceSpinor,
        excited_population: f64,
    ) -> Result<Self> {
        if !(gap > 0.0 && gap.is_finite()) {
            return Err(Error::domain("omega", gap, "(0, inf)"));
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::domain("lambda", coupling, "[0, inf)"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::domain("T", duration, "(0, inf)"));
        }
        if !(0.0..=1.0).contains(&excited_population) {
            return Err(Error::domain("p", excited_population, "[0, 1]"));
        }
        if duration > worldline.horizon() {
            return Err(Error::invalid(
                "worldline",
                format!(
                    "containment was checked up to t = {}, not T = {duration}",
                    worldline.horizon()
                ),
            ));
        }
        Ok(DetectorConfig {
            gap,
            coupling,
            duration,
            worldline,
            eta,
            excited_population,
        })
    }

    pub fn with_coupling(mut self, coupling: f64) -> Result<Self> {
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::domain("lambda", coupling, "[0, inf)"));
        }
        self.coupling = coupling;
        Ok(self)
    }

    pub fn with_population(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("p", p, "[0, 1]"));
        }
        self.excited_population = p;
        Ok(self)
    }
}

/// Which amplitude: `W` (detector excitation with fermion creation) or `V`
/// (detector excitation with antifermion absorption).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Amplitude {
    W,
    V,
}

/// `η̄ f_n(x)` for particles, `h̄_n(x) η` for antiparticles.
pub fn smear_amplitude(
    mode: &Mode,
    species: Species,
    x: f64,
    eta: &ReferenceSpinor,
) -> Result<Complex64> {
    let psi = mode.spinor(species, x)?;
    Ok(smear(&psi, species, eta))
}

pub(crate) fn smear(psi: &Spinor, species: Species, eta: &ReferenceSpinor) -> Complex64 {
    match species {
        Species::Particle => eta.spinor().bar_inner(psi),
        Species::Antiparticle => psi.bar_inner(eta.spinor()),
    }
}

fn species_of(kind: Amplitude) -> Species {
    match kind {
        Amplitude::W => Species::Particle,
        Amplitude::V => Species::Antiparticle,
    }
}

/// Phase rate of the integrand: `-(Ω+ω)` for `W`, `Ω-ω` for `V`.
fn phase_rate(mode: &Mode, gap: f64, kind: Amplitude) -> f64 {
    match kind {
        Amplitude::W => -(gap + mode.omega),
        Amplitude::V => gap - mode.omega,
    }
}

/// Time integral of the amplitude by adaptive quadrature.
pub fn compute_coupling(
    mode: &Mode,
    detector: &DetectorConfig,
    kind: Amplitude,
    switching: SwitchingProfile,
) -> Result<Complex64> {
    let species = species_of(kind);
    let rate = phase_rate(mode, detector.gap, kind);
    let duration = detector.duration;
    let line = detector.worldline;
    let eta = detector.eta;

    let max_freq = rate.abs() + mode.k * line.velocity().abs() + switching.max_frequency(duration);
    let max_panel = if max_freq > 0.0 {
        (2.0 * PI / max_freq / 8.0).min(duration)
    } else {
        duration
    };
    let quad = AdaptiveSimpson::new(mode.cavity().quad_tol()).with_max_panel(max_panel);
    quad.integrate_pieces(
        |t| {
            let chi = switching.value(t, duration);
            if chi == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let psi = mode.spinor_unchecked(species, line.position(t));
            Complex64::from_polar(chi, rate * t) * smear(&psi, species, &eta)
        },
        &switching.breakpoints(duration),
    )
}

/// Analytic amplitude for a static detector with sharp switching.
pub fn closed_form_static(
    mode: &Mode,
    detector: &DetectorConfig,
    kind: Amplitude,
) -> Result<Complex64> {
    if detector.worldline.kind() != WorldlineKind::Static {
        return Err(Error::invalid(
            "worldline",
            "closed form requires a static detector",
        ));
    }
    let amp = smear_amplitude(
        mode,
        species_of(kind),
        detector.worldline.x0(),
        &detector.eta,
    )?;
    let t = detector.duration;
    let rate = phase_rate(mode, detector.gap, kind);
    if kind == Amplitude::V && rate.abs() * t < RESONANCE_THRESHOLD {
        return Ok(amp * t);
    }
    // ∫₀ᵀ e^{iνt} dt = T e^{iνT/2} sinc(νT/2), free of cancellation for small ν.
    let half = 0.5 * rate * t;
    Ok(amp * Complex64::from_polar(t * sinc(half), half))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Amplitudes `W_n`, `V_n` for modes `1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    pub modes: Vec<Mode>,
    pub w: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub n_max: usize,
    /// Share of `Σ (|W_n|² + |V_n|²) ω_n` carried by the last `⌈n_max/5⌉`
    /// modes.
    pub tail_estimate: f64,
}

impl CouplingSet {
    pub fn from_parts(modes: Vec<Mode>, w: Vec<Complex64>, v: Vec<Complex64>) -> Result<Self> {
        let n_max = modes.len();
        if n_max == 0 || w.len() != n_max || v.len() != n_max {
            return Err(Error::invalid(
                "couplings",
                "modes, W and V must be nonempty and of equal length",
            ));
        }
        if w.iter().chain(v.iter()).any(|z| !z.is_finite()) {
            return Err(Error::NumericalFailure(
                "non-finite coupling amplitude".into(),
            ));
        }
        let tail_estimate = tail_share(&modes, &w, &v);
        Ok(CouplingSet {
            modes,
            w,
            v,
            n_max,
            tail_estimate,
        })
    }

    /// The first `n` modes, with the tail diagnostic recomputed.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_max {
            return Err(Error::invalid(
                "n_max",
                format!("truncation {n} outside 1..={}", self.n_max),
            ));
        }
        CouplingSet::from_parts(
            self.modes[..n].to_vec(),
            self.w[..n].to_vec(),
            self.v[..n].to_vec(),
        )
    }

    pub fn abs_w2(&self) -> impl Iterator<Item = f64> + '_ {
        self.w.iter().map(|z| z.norm_sqr())
    }

    pub fn abs_v2(&self) -> impl Iterator<Item = f64> + '_ {
        self.v.iter().map(|z| z.norm_sqr())
    }
}

fn tail_share(modes: &[Mode], w: &[Complex64], v: &[Complex64]) -> f64 {
    let n = modes.len();
    let block = n.div_ceil(5);
    let weights: Vec<f64> = modes
        .iter()
        .zip(w.iter().zip(v))
        .map(|(m, (w, v))| (w.norm_sqr() + v.norm_sqr()) * m.omega)
        .collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    weights[n - block..].iter().sum::<f64>() / total
}

/// Solve modes `1..=n_max` and compute both amplitudes for each.
///
/// Static detectors with sharp switching use the exact closed form; every
/// other configuration goes through [`compute_coupling`].
pub fn compute_coupling_set(
    cavity: &CavityConfig,
    detector: &DetectorConfig,
    n_max: usize,
    switching: SwitchingProfile,
) -> Result<CouplingSet> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "at least one mode is required"));
    }
    if (detector.worldline.length - cavity.length()).abs() > 0.0 {
        return Err(Error::invalid(
            "worldline",
            "worldline was validated for a different cavity length",
        ));
    }
    let modes = solve_modes(cavity, n_max)?;
    let analytic =
        detector.worldline.kind() == WorldlineKind::Static && switching == SwitchingProfile::Sharp;
    let pairs: Vec<(Complex64, Complex64)> = modes
        .par_iter()
        .map(|mode| {
            if analytic {
                Ok((
                    closed_form_static(mode, detector, Amplitude::W)?,
                    closed_form_static(mode, detector, Amplitude::V)?,
                ))
            } else {
                Ok((
                    compute_coupling(mode, detector, Amplitude::W, switching)?,
                    compute_coupling(mode, detector, Amplitude::V, switching)?,
                ))
            }
        })
        .collect::<Result<_>>()?;
    let (w, v) = pairs.into_iter().unzip();
    CouplingSet::from_parts(modes, w, v)
}
