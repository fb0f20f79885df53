//! Nulling engine shared by the triangular and rectangular sMZI decompositions.
//!
//! The working matrix starts as `U*`. Each sMZI step picks δ to null one entry
//! and then Σ to equalize the phases of the pair the next step will null; an
//! sMZI cannot fix a phase mismatch inside the pair it acts on, so that has to
//! be prepared one step ahead.

use num_complex::Complex64;
use thiserror::Error;

use crate::mesh::SmziSetting;
use crate::numeric::{arg0, wrap_phase, ComplexMat, NumericError, UnitaryMatrix};

/// A nulled entry larger than this aborts the decomposition.
pub(crate) const ZERO_CHECK: f64 = 1e-8;
/// Loosest unitarity certificate a decomposition accepts.
pub(crate) const MAX_INPUT_DEVIATION: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("input is not unitary enough to decompose: deviation {deviation:e}")]
    NotUnitary { deviation: f64 },
    #[error("numerical failure at diagonal {j}, step {k}: entry ({x}, {y}) left at {residual:e}")]
    NumericalFailure {
        j: usize,
        k: usize,
        x: usize,
        y: usize,
        residual: f64,
    },
    #[error("working matrix not diagonal after elimination: entry ({x}, {y}) is {residual:e}")]
    NotDiagonal { x: usize, y: usize, residual: f64 },
    #[error("invalid phase table: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Which side of the working matrix a step multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `V ← V·M`, mixing columns `y` and `y+1`.
    Right,
    /// `V ← M·V`, mixing rows `x−1` and `x`.
    Left,
}

/// Snapshot of one nulling step, for inspection in tests and diagnostics.
/// Indices are 1-based.
#[derive(Clone, Debug)]
pub struct EliminationStep {
    pub j: usize,
    pub k: usize,
    pub x: usize,
    pub y: usize,
    pub side: Side,
    /// Entry being nulled, just before the sMZI is applied.
    pub target_before: Complex64,
    /// The entry it is mixed with, just before the sMZI is applied.
    pub partner_before: Complex64,
    pub setting: SmziSetting,
    /// Working matrix after the step.
    pub working: ComplexMat,
}

pub(crate) struct Eliminator {
    v: ComplexMat,
    trace: Option<Vec<EliminationStep>>,
}

pub(crate) struct Residuals {
    /// ζ_j for j = 2..=m.
    pub zeta: Vec<f64>,
    pub global_phase: f64,
    pub trace: Vec<EliminationStep>,
}

impl Eliminator {
    pub fn new(u: &UnitaryMatrix, record: bool) -> Result<Self, DecompositionError> {
        if u.certified_tol() > MAX_INPUT_DEVIATION {
            return Err(DecompositionError::NotUnitary {
                deviation: u.certified_tol(),
            });
        }
        Ok(Self {
            v: u.matrix().conj(),
            trace: record.then(Vec::new),
        })
    }

    fn at(&self, x: usize, y: usize) -> Complex64 {
        self.v[(x - 1, y - 1)]
    }

    /// `V ← V·P` with the phase on column `y+1`, matching `arg V[x,y+1]` to `arg V[x,y]`.
    pub fn right_phase(&mut self, x: usize, y: usize) -> f64 {
        let phi = wrap_phase(arg0(self.at(x, y)) - arg0(self.at(x, y + 1)));
        self.v.scale_column(y, Complex64::from_polar(1.0, phi));
        phi
    }

    /// `V ← P·V` with the phase on row `x−1`, matching `arg V[x−1,y]` to `arg V[x,y]`.
    pub fn left_phase(&mut self, x: usize, y: usize) -> f64 {
        let phi = wrap_phase(arg0(self.at(x, y)) - arg0(self.at(x - 1, y)));
        self.v.scale_row(x - 2, Complex64::from_polar(1.0, phi));
        phi
    }

    /// Nulls `V[x,y]` by mixing columns `y, y+1`. With `feed_forward`, Σ
    /// equalizes the phases of `V[x−1,y−1]` and `V[x−1,y]`; otherwise Σ = 0.
    pub fn null_right(
        &mut self,
        j: usize,
        k: usize,
        x: usize,
        y: usize,
        feed_forward: bool,
    ) -> Result<SmziSetting, DecompositionError> {
        let target = self.at(x, y);
        let partner = self.at(x, y + 1);
        let delta = nulling_delta(target, partner, Side::Right);
        let sigma = if feed_forward {
            let mut probe = self.v.clone();
            probe.mix_columns(&SmziSetting::from_sigma_delta(0.0, delta).block(), y - 1);
            arg0(probe[(x - 2, y - 2)]) - arg0(probe[(x - 2, y - 1)])
        } else {
            0.0
        };
        let setting = SmziSetting::from_sigma_delta(wrap_phase(sigma), delta);
        self.v.mix_columns(&setting.block(), y - 1);
        self.finish_step(j, k, x, y, Side::Right, target, partner, setting)
    }

    /// Nulls `V[x,y]` by mixing rows `x−1, x`. With `feed_forward`, Σ
    /// equalizes the phases of `V[x+1,y+1]` and `V[x,y+1]`; otherwise Σ = 0.
    pub fn null_left(
        &mut self,
        j: usize,
        k: usize,
        x: usize,
        y: usize,
        feed_forward: bool,
    ) -> Result<SmziSetting, DecompositionError> {
        let target = self.at(x, y);
        let partner = self.at(x - 1, y);
        let delta = nulling_delta(target, partner, Side::Left);
        let sigma = if feed_forward {
            let mut probe = self.v.clone();
            probe.mix_rows(&SmziSetting::from_sigma_delta(0.0, delta).block(), x - 2);
            arg0(probe[(x, y)]) - arg0(probe[(x - 1, y)])
        } else {
            0.0
        };
        let setting = SmziSetting::from_sigma_delta(wrap_phase(sigma), delta);
        self.v.mix_rows(&setting.block(), x - 2);
        self.finish_step(j, k, x, y, Side::Left, target, partner, setting)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_step(
        &mut self,
        j: usize,
        k: usize,
        x: usize,
        y: usize,
        side: Side,
        target_before: Complex64,
        partner_before: Complex64,
        setting: SmziSetting,
    ) -> Result<SmziSetting, DecompositionError> {
        let residual = self.at(x, y).norm();
        if !(residual < ZERO_CHECK) {
            return Err(DecompositionError::NumericalFailure { j, k, x, y, residual });
        }
        if let Some(trace) = &mut self.trace {
            trace.push(EliminationStep {
                j,
                k,
                x,
                y,
                side,
                target_before,
                partner_before,
                setting,
                working: self.v.clone(),
            });
        }
        Ok(setting)
    }

    /// Applies the residual phases `Q^{(j)}` on columns `j = 2..=m` so the
    /// working matrix becomes `e^{iα}·I`, and returns them with α.
    pub fn finish(mut self) -> Result<Residuals, DecompositionError> {
        let m = self.v.rows();
        for x in 1..=m {
            for y in 1..=m {
                if x != y && !(self.at(x, y).norm() < ZERO_CHECK) {
                    return Err(DecompositionError::NotDiagonal {
                        x,
                        y,
                        residual: self.at(x, y).norm(),
                    });
                }
            }
        }
        let reference = arg0(self.at(1, 1));
        let zeta: Vec<f64> = (2..=m)
            .map(|j| {
                let zeta = wrap_phase(reference - arg0(self.at(j, j)));
                self.v.scale_column(j - 1, Complex64::from_polar(1.0, zeta));
                zeta
            })
            .collect();
        Ok(Residuals {
            zeta,
            global_phase: arg0(self.at(1, 1)),
            trace: self.trace.unwrap_or_default(),
        })
    }
}

/// δ ∈ (−π/2, π/2] nulling `target` given a phase-matched `partner`.
///
/// Right steps need `target·sin δ + partner·cos δ = 0`, left steps
/// `partner·cos δ − target·sin δ = 0`. Both entries are projected onto the
/// phase of the larger one; both zero gives δ = 0.
fn nulling_delta(target: Complex64, partner: Complex64, side: Side) -> f64 {
    let (nt, np) = (target.norm(), partner.norm());
    if nt == 0.0 && np == 0.0 {
        return 0.0;
    }
    let reference = if nt >= np { arg0(target) } else { arg0(partner) };
    let rot = Complex64::from_polar(1.0, -reference);
    let a = (target * rot).re;
    let b = (partner * rot).re;
    let raw = match side {
        Side::Right => (-b).atan2(a),
        Side::Left => b.atan2(a),
    };
    fold_half_turn(raw)
}

/// Folds an angle into (−π/2, π/2] by steps of π.
fn fold_half_turn(delta: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut d = delta;
    while d > FRAC_PI_2 {
        d -= PI;
    }
    while d <= -FRAC_PI_2 {
        d += PI;
    }
    if d == 0.0 {
        0.0
    } else {
        d
    }
}
