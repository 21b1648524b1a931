//! Fermionic ladder operators on a truncated Fock space.
//!
//! Slots are ordered `(b_1, d_1, b_2, d_2, ...)` and each is dressed with a
//! parity string over the slots before it, so every pair of ladder operators
//! anticommutes exactly. Field basis index bit `S-1-j` holds the occupation
//! of slot `j` (slot 0 is the most significant bit).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Largest number of modes the oracle accepts (Hilbert dimension 128).
pub const MAX_MODES: usize = 3;

/// Detector ⊗ fermion/antifermion occupations of the first `n_modes` modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedSpace {
    n_modes: usize,
}

impl TruncatedSpace {
    pub fn new(n_modes: usize) -> Result<Self> {
        if !(1..=MAX_MODES).contains(&n_modes) {
            return Err(Error::invalid(
                "n_modes",
                format!("oracle supports 1..={MAX_MODES} modes, got {n_modes}"),
            ));
        }
        Ok(TruncatedSpace { n_modes })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn slots(&self) -> usize {
        2 * self.n_modes
    }

    pub fn field_dim(&self) -> usize {
        1 << self.slots()
    }

    /// `2 · 4^n_modes`; the detector is the leading tensor factor.
    pub fn dim(&self) -> usize {
        2 * self.field_dim()
    }

    /// Occupation of `slot` in field basis state `state`.
    pub fn occupied(&self, state: usize, slot: usize) -> bool {
        state >> (self.slots() - 1 - slot) & 1 == 1
    }
}

/// Matrix representations of the mode operators.
#[derive(Debug, Clone)]
pub struct ModeOperators {
    space: TruncatedSpace,
    /// Annihilators in slot order, acting on the field factor only.
    slots: Vec<CMatrix>,
}

impl ModeOperators {
    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    /// `b_n` on the field factor (`n` is 1-based).
    pub fn fermion(&self, n: usize) -> &CMatrix {
        &self.slots[2 * (n - 1)]
    }

    /// `d_n` on the field factor (`n` is 1-based).
    pub fn antifermion(&self, n: usize) -> &CMatrix {
        &self.slots[2 * (n - 1) + 1]
    }

    /// All annihilators in slot order.
    pub fn annihilators(&self) -> &[CMatrix] {
        &self.slots
    }

    /// Embed a field operator into the full space as `1_D ⊗ op`.
    pub fn lift(&self, op: &CMatrix) -> CMatrix {
        CMatrix::identity(2, 2).kronecker(op)
    }

    /// Embed a detector operator into the full space as `op ⊗ 1_F`.
    pub fn lift_detector(&self, op: &CMatrix) -> CMatrix {
        op.kronecker(&CMatrix::identity(
            self.space.field_dim(),
            self.space.field_dim(),
        ))
    }

    /// `σ₊ = |+⟩⟨-|` on the detector (index 1 is the excited level).
    pub fn sigma_plus(&self) -> CMatrix {
        let mut s = CMatrix::zeros(2, 2);
        s[(1, 0)] = Complex64::new(1.0, 0.0);
        self.lift_detector(&s)
    }

    pub fn sigma_minus(&self) -> CMatrix {
        self.sigma_plus().adjoint()
    }

    pub fn sigma_z(&self) -> CMatrix {
        let mut s = CMatrix::zeros(2, 2);
        s[(0, 0)] = Complex64::new(-1.0, 0.0);
        s[(1, 1)] = Complex64::new(1.0, 0.0);
        self.lift_detector(&s)
    }

    /// Total particle number `Σ (b†b + d†d)` on the field factor.
    pub fn number(&self) -> CMatrix {
        let dim = self.space.field_dim();
        self.slots
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, c| acc + c.adjoint() * c)
    }
}

/// Build `b_n`, `d_n` for every mode of `space`.
pub fn build_operators(space: &TruncatedSpace) -> ModeOperators {
    let dim = space.field_dim();
    let slots = (0..space.slots())
        .map(|slot| {
            let mut op = CMatrix::zeros(dim, dim);
            for src in 0..dim {
                if !space.occupied(src, slot) {
                    continue;
                }
                let before = (0..slot).filter(|&s| space.occupied(src, s)).count();
                let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
                let dst = src & !(1 << (space.slots() - 1 - slot));
                op[(dst, src)] = Complex64::new(sign, 0.0);
            }
            op
        })
        .collect();
    ModeOperators {
        space: *space,
        slots,
    }
}
