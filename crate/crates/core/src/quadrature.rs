//! Adaptive Simpson quadrature with a cap on the panel width.
//!
//! The integrands in this crate are smooth trigonometric products whose
//! oscillation frequency is known in advance. The interval is first cut into
//! panels no wider than `max_panel` (callers pass a fraction of the shortest
//! oscillation period) so that an oscillation can never hide between three
//! sample points, then each panel is refined by bisection with Richardson
//! extrapolation until the local error estimate meets its share of the
//! tolerance.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: real or complex scalars.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSimpson {
    /// Absolute tolerance for the whole integral.
    pub tol: f64,
    /// Largest panel width before any adaptive refinement.
    pub max_panel: f64,
    /// Bisection depth cap per panel.
    pub max_depth: u32,
}

impl AdaptiveSimpson {
    pub fn new(tol: f64) -> Self {
        AdaptiveSimpson {
            tol,
            max_panel: f64::INFINITY,
            max_depth: 48,
        }
    }

    pub fn with_max_panel(mut self, max_panel: f64) -> Self {
        self.max_panel = max_panel;
        self
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<T, F>(&self, f: F, a: f64, b: f64) -> Result<T>
    where
        T: QuadValue,
        F: Fn(f64) -> T,
    {
        self.integrate_pieces(f, &[a, b])
    }

    /// Integrate over consecutive pieces `[x0, x1], [x1, x2], ...`, each
    /// refined independently. Kinks of the integrand belong at breakpoints.
    pub fn integrate_pieces<T, F>(&self, f: F, breakpoints: &[f64]) -> Result<T>
    where
        T: QuadValue,
        F: Fn(f64) -> T,
    {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("quad_tol", "tolerance must be positive"));
        }
        if breakpoints.len() < 2 {
            return Ok(T::zero());
        }
        let (a, b) = (breakpoints[0], breakpoints[breakpoints.len() - 1]);
        let span = b - a;
        if span == 0.0 {
            return Ok(T::zero());
        }
        if !span.is_finite() || span < 0.0 {
            return Err(Error::invalid(
                "interval",
                format!("[{a}, {b}] is not a finite increasing interval"),
            ));
        }

        let mut total = T::zero();
        for piece in breakpoints.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            let width = hi - lo;
            if width <= 0.0 {
                continue;
            }
            let panels = if self.max_panel.is_finite() {
                ((width / self.max_panel).ceil() as usize).max(1)
            } else {
                1
            };
            let h = width / panels as f64;
            let panel_tol = self.tol * h / span;
            let mut fa = f(lo);
            for i in 0..panels {
                let x0 = lo + i as f64 * h;
                let x1 = if i + 1 == panels { hi } else { x0 + h };
                let xm = 0.5 * (x0 + x1);
                let fm = f(xm);
                let fb = f(x1);
                let whole = simpson(x0, x1, fa, fm, fb);
                total = total + self.refine(&f, x0, x1, fa, fm, fb, whole, panel_tol, 0)?;
                fa = fb;
            }
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine<T, F>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        fa: T,
        fm: T,
        fb: T,
        whole: T,
        tol: f64,
        depth: u32,
    ) -> Result<T>
    where
        T: QuadValue,
        F: Fn(f64) -> T,
    {
        let m = 0.5 * (a + b);
        let flm = f(0.5 * (a + m));
        let frm = f(0.5 * (m + b));
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        // Two levels minimum: a single Simpson comparison can agree by accident.
        if depth >= 1 && delta.magnitude() <= 15.0 * tol {
            return Ok(left + right + delta * (1.0 / 15.0));
        }
        if depth >= self.max_depth {
            return Err(Error::NumericalFailure(format!(
                "adaptive Simpson did not converge on [{a}, {b}]: error estimate {:.3e} > {:.3e}",
                delta.magnitude() / 15.0,
                tol
            )));
        }
        let l = self.refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

fn simpson<T: QuadValue>(a: f64, b: f64, fa: T, fm: T, fb: T) -> T {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}
