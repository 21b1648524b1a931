//! Mode spectrum of a Dirac field confined to `[0, L]` by bag boundary
//! conditions.
//!
//! With `γ⁰ = σ₁`, `γ¹ = σ₃` the positive-frequency modes are
//!
//! ```text
//! f_n(x) = N_n ( (ω_n/k_n) sin(k_n x),  cos(k_n x) + (m/k_n) sin(k_n x) )
//! h_n(x) = N_n (-(ω_n/k_n) sin(k_n x),  cos(k_n x) + (m/k_n) sin(k_n x) )
//! ```
//!
//! with `ω_n = sqrt(k_n² + m²)` and `k_n` the n-th positive root of
//! `(m/k) sin(kL) + cos(kL) = 0`. The n-th root lies in
//! `((n - 1/2)π/L, nπ/L)`; at the left end the residual is `±m/k` and at the
//! right end `∓1`, so bisection always has a sign change to work with.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveSimpson;

const DEFAULT_ROOT_TOL: f64 = 1e-12;
const DEFAULT_QUAD_TOL: f64 = 1e-10;
const BISECTION_CAP: usize = 400;

/// Cavity geometry, particle mass and numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    length: f64,
    mass: f64,
    root_tol: f64,
    quad_tol: f64,
}

impl CavityConfig {
    pub fn new(length: f64, mass: f64) -> Result<Self> {
        Self::with_tolerances(length, mass, DEFAULT_ROOT_TOL, DEFAULT_QUAD_TOL)
    }

    pub fn with_tolerances(length: f64, mass: f64, root_tol: f64, quad_tol: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::domain("L", length, "(0, inf)"));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::domain("mass", mass, "[0, inf)"));
        }
        if !(root_tol > 0.0) {
            return Err(Error::domain("root_tol", root_tol, "(0, inf)"));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::domain("quad_tol", quad_tol, "(0, inf)"));
        }
        Ok(CavityConfig {
            length,
            mass,
            root_tol,
            quad_tol,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// True when `x` lies in `[0, L]` up to rounding of the endpoints.
    pub fn contains(&self, x: f64) -> bool {
        let slack = 1e-12 * self.length;
        x >= -slack && x <= self.length + slack
    }
}

/// Particle (`f_n`) or antiparticle (`h_n`) mode function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Particle,
    Antiparticle,
}

/// A two-component spinor value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor {
    pub upper: Complex64,
    pub lower: Complex64,
}

impl Spinor {
    pub fn new(upper: Complex64, lower: Complex64) -> Self {
        Spinor { upper, lower }
    }

    pub fn real(upper: f64, lower: f64) -> Self {
        Spinor::new(Complex64::new(upper, 0.0), Complex64::new(lower, 0.0))
    }

    /// `self† other`.
    pub fn inner(&self, other: &Spinor) -> Complex64 {
        self.upper.conj() * other.upper + self.lower.conj() * other.lower
    }

    /// `self† γ⁰ other` with `γ⁰ = σ₁`.
    pub fn bar_inner(&self, other: &Spinor) -> Complex64 {
        self.upper.conj() * other.lower + self.lower.conj() * other.upper
    }

    pub fn is_finite(&self) -> bool {
        self.upper.is_finite() && self.lower.is_finite()
    }
}

/// One solved cavity mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// 1-based mode index.
    pub n: usize,
    pub k: f64,
    pub omega: f64,
    pub norm: f64,
    cavity: CavityConfig,
}

impl Mode {
    /// The cavity this mode was solved for.
    pub fn cavity(&self) -> &CavityConfig {
        &self.cavity
    }

    pub fn mass(&self) -> f64 {
        self.cavity.mass
    }

    pub fn length(&self) -> f64 {
        self.cavity.length
    }

    /// Evaluate `f_n(x)` or `h_n(x)`.
    pub fn spinor(&self, species: Species, x: f64) -> Result<Spinor> {
        if !self.cavity.contains(x) {
            return Err(Error::domain("x", x, "[0, L]"));
        }
        Ok(self.spinor_unchecked(species, x.clamp(0.0, self.cavity.length)))
    }

    pub(crate) fn spinor_unchecked(&self, species: Species, x: f64) -> Spinor {
        let (s, c) = (self.k * x).sin_cos();
        let upper = self.norm * self.omega / self.k * s;
        let lower = self.norm * (c + self.cavity.mass / self.k * s);
        match species {
            Species::Particle => Spinor::real(upper, lower),
            Species::Antiparticle => Spinor::real(-upper, lower),
        }
    }
}

/// `(m/k) sin(kL) + cos(kL)`.
pub fn boundary_residual(k: f64, cavity: &CavityConfig) -> f64 {
    let (s, c) = (k * cavity.length).sin_cos();
    cavity.mass / k * s + c
}

/// Normalization constant of the bag modes:
/// `N = √2 k² [k²(m + 2Lω²) + m ω² sin²(kL)]^(-1/2)`.
fn normalization(k: f64, omega: f64, cavity: &CavityConfig) -> f64 {
    let (m, l) = (cavity.mass, cavity.length);
    let s = (k * l).sin();
    let k2 = k * k;
    let w2 = omega * omega;
    std::f64::consts::SQRT_2 * k2 / (k2 * (m + 2.0 * l * w2) + m * w2 * s * s).sqrt()
}

fn make_mode(n: usize, k: f64, cavity: &CavityConfig) -> Mode {
    let omega = k.hypot(cavity.mass);
    Mode {
        n,
        k,
        omega,
        norm: normalization(k, omega, cavity),
        cavity: *cavity,
    }
}

/// Solve the n-th mode (1-based).
pub fn solve_mode(cavity: &CavityConfig, n: usize) -> Result<Mode> {
    if n == 0 {
        return Err(Error::invalid("n", "mode indices start at 1"));
    }
    let l = cavity.length;
    let left = (n as f64 - 0.5) * PI / l;
    if cavity.mass == 0.0 {
        return Ok(make_mode(n, left, cavity));
    }
    let right = n as f64 * PI / l;
    let k = bisect(
        |k| boundary_residual(k, cavity),
        left,
        right,
        cavity.root_tol,
    )
    .map_err(|e| match e {
        Error::NumericalFailure(msg) => Error::NumericalFailure(format!("mode {n}: {msg}")),
        other => other,
    })?;
    Ok(make_mode(n, k, cavity))
}

/// Solve modes `1..=count`.
pub fn solve_modes(cavity: &CavityConfig, count: usize) -> Result<Vec<Mode>> {
    if count == 0 {
        return Err(Error::invalid("count", "at least one mode is required"));
    }
    (1..=count).map(|n| solve_mode(cavity, n)).collect()
}

/// Bisection refined until the bracket cannot shrink any further, then
/// checked against `tol`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NumericalFailure(format!(
            "no sign change on [{lo}, {hi}] (residuals {f_lo:e}, {f_hi:e})"
        )));
    }
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let (best, residual) = [lo, hi]
        .into_iter()
        .map(|x| (x, f(x).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    if residual <= tol {
        Ok(best)
    } else {
        Err(Error::NumericalFailure(format!(
            "bisection stalled at k = {best} with residual {residual:e} > {tol:e}"
        )))
    }
}

/// Overlap matrix `G[a][b] = ∫₀ᴸ ψ_a† ψ_b dx` over `{f_1..f_N, h_1..h_N}`.
pub fn gram_matrix(modes: &[Mode], cavity: &CavityConfig) -> Result<DMatrix<f64>> {
    for mode in modes {
        if mode.cavity.length != cavity.length || mode.cavity.mass != cavity.mass {
            return Err(Error::invalid(
                "modes",
                format!("mode {} was solved for a different cavity", mode.n),
            ));
        }
    }
    let basis: Vec<(Mode, Species)> = [Species::Particle, Species::Antiparticle]
        .into_iter()
        .flat_map(|s| modes.iter().map(move |m| (*m, s)))
        .collect();
    let dim = basis.len();
    let k_max = modes.iter().map(|m| m.k).fold(0.0, f64::max);
    // Products carry frequencies up to 2·k_max.
    let quad = AdaptiveSimpson::new(cavity.quad_tol)
        .with_max_panel((PI / k_max.max(1e-300) / 8.0).min(cavity.length));

    let mut gram = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let (ma, sa) = basis[a];
            let (mb, sb) = basis[b];
            let value: f64 = quad.integrate(
                |x| {
                    ma.spinor_unchecked(sa, x)
                        .inner(&mb.spinor_unchecked(sb, x))
                        .re
                },
                0.0,
                cavity.length,
            )?;
            gram[(a, b)] = value;
            gram[(b, a)] = value;
        }
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cavity(l: f64, m: f64) -> CavityConfig {
        CavityConfig::new(l, m).unwrap()
    }

    #[test]
    fn massless_modes_are_analytic() {
        let c = cavity(1.0, 0.0);
        let modes = solve_modes(&c, 2).unwrap();
        assert_eq!(modes[0].k, PI / 2.0);
        assert_eq!(modes[1].k, 1.5 * PI);
        for m in &modes {
            assert_eq!(m.omega, m.k);
            assert_relative_eq!(m.norm, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn massless_norm_scales_with_length() {
        let modes = solve_modes(&cavity(4.0, 0.0), 3).unwrap();
        for m in &modes {
            assert_relative_eq!(m.norm, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn first_massive_root() {
        // Independent route: tan(k) = -k on (π/2, π) by plain bisection.
        let (mut lo, mut hi) = (PI / 2.0 + 1e-9, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.tan() + mid < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mode = solve_mode(&cavity(1.0, 1.0), 1).unwrap();
        assert!((mode.k - lo).abs() < 1e-12);
        assert!((mode.k - 2.028757838110434).abs() < 1e-12);
        assert_relative_eq!(mode.omega, (1.0 + mode.k * mode.k).sqrt(), epsilon = 1e-15);
        assert!((mode.omega - 2.261826334114651).abs() < 1e-12);
    }

    #[test]
    fn tiny_mass_approaches_massless_spectrum() {
        let modes = solve_modes(&cavity(1.0, 1e-8), 5).unwrap();
        for m in &modes {
            let massless = (m.n as f64 - 0.5) * PI;
            assert!(m.k > massless);
            assert!(m.k - massless < 1e-6);
        }
    }

    #[test]
    fn residual_examples() {
        assert!(boundary_residual(PI / 2.0, &cavity(1.0, 0.0)).abs() < 1e-16);
        assert_relative_eq!(
            boundary_residual(PI, &cavity(1.0, 1.0)),
            -1.0,
            epsilon = 1e-15
        );
        let c = cavity(1.0, 1.0);
        let k1 = solve_mode(&c, 1).unwrap().k;
        assert!(boundary_residual(k1, &c).abs() < 1e-12);
    }

    #[test]
    fn spinor_values() {
        let c = cavity(1.0, 0.0);
        let m = solve_mode(&c, 1).unwrap();
        let at_wall = m.spinor(Species::Particle, 1.0).unwrap();
        assert_relative_eq!(at_wall.upper.re, 1.0, epsilon = 1e-15);
        assert!(at_wall.lower.re.abs() < 1e-15);

        let massive = solve_mode(&cavity(1.0, 2.0), 3).unwrap();
        let origin = massive.spinor(Species::Particle, 0.0).unwrap();
        assert_eq!(origin.upper.re, 0.0);
        assert_eq!(origin.lower.re, massive.norm);

        let f = massive.spinor(Species::Particle, 0.37).unwrap();
        let h = massive.spinor(Species::Antiparticle, 0.37).unwrap();
        assert_eq!(h.upper, -f.upper);
        assert_eq!(h.lower, f.lower);
    }

    #[test]
    fn spinor_outside_cavity_is_domain_error() {
        let m = solve_mode(&cavity(1.0, 1.0), 1).unwrap();
        assert!(matches!(
            m.spinor(Species::Particle, 1.5),
            Err(Error::Domain { .. })
        ));
        assert!(m.spinor(Species::Antiparticle, -0.1).is_err());
    }

    #[test]
    fn invalid_cavities_rejected() {
        assert!(CavityConfig::new(0.0, 1.0).is_err());
        assert!(CavityConfig::new(1.0, -1.0).is_err());
        assert!(CavityConfig::with_tolerances(1.0, 1.0, 0.0, 1e-10).is_err());
        assert!(solve_modes(&cavity(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn norm_identity_holds() {
        for &(l, m) in &[(0.5, 0.1), (1.0, 1.0), (2.0, 10.0)] {
            let c = cavity(l, m);
            for mode in solve_modes(&c, 30).unwrap() {
                let lhs = mode.omega * (mode.k * l).sin().abs();
                assert!((lhs - mode.k).abs() <= 10.0 * c.root_tol());
            }
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        let c = cavity(1.0, 1.0);
        let modes = solve_modes(&c, 4).unwrap();
        let g = gram_matrix(&modes, &c).unwrap();
        let err = (g - DMatrix::<f64>::identity(8, 8)).abs().max();
        assert!(err < 1e-8, "max deviation {err:e}");
    }

    #[test]
    fn gram_rejects_foreign_modes() {
        let modes = solve_modes(&cavity(1.0, 1.0), 2).unwrap();
        assert!(gram_matrix(&modes, &cavity(2.0, 1.0)).is_err());
    }
}
