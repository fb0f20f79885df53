//! Circuit elements and mesh layouts.
//!
//! A [`MeshCircuit`] is an ordered list of columns, input side first. Each
//! column holds elements on disjoint modes: symmetric MZIs spanning two
//! adjacent modes, single-mode phase shifters, or bare waveguides.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{wrap_phase, Block2, ComplexMat, NumericError, UnitaryMatrix};

/// Unitarity bound certified by [`MeshCircuit::evaluate`].
pub const EVALUATE_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh needs at least {min} modes, got {m}")]
    TooFewModes { m: usize, min: usize },
    #[error("column {column}: mode {mode} outside 1..={m}")]
    ModeOutOfRange { column: usize, mode: usize, m: usize },
    #[error("column {column}: mode {mode} is occupied by more than one element")]
    Overlap { column: usize, mode: usize },
    #[error("column {column}: uncovered mode {mode} has no phase or bare element")]
    UncoveredEdge { column: usize, mode: usize },
    #[error("column {column}: non-finite phase")]
    NonFinite { column: usize },
    #[error("column index {column} out of range ({len} columns)")]
    ColumnOutOfRange { column: usize, len: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Phase pair of one symmetric MZI. `sigma = (θ₁+θ₂)/2` sets the common output
/// phase, `delta = (θ₁−θ₂)/2` the splitting ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmziSetting {
    pub theta1: f64,
    pub theta2: f64,
}

impl SmziSetting {
    /// Canonical setting with both phases wrapped to (−π, π].
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1: wrap_phase(theta1),
            theta2: wrap_phase(theta2),
        }
    }

    pub fn from_sigma_delta(sigma: f64, delta: f64) -> Self {
        Self::new(sigma + delta, sigma - delta)
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn sigma(&self) -> f64 {
        0.5 * (self.theta1 + self.theta2)
    }

    pub fn delta(&self) -> f64 {
        0.5 * (self.theta1 - self.theta2)
    }

    /// Both internal phases advanced by `phi`: the same as a common phase `phi`
    /// on both ports, on either side of the MZI.
    pub fn shifted(&self, phi: f64) -> Self {
        Self::new(self.theta1 + phi, self.theta2 + phi)
    }

    pub fn block(&self) -> Block2 {
        smzi_block(self)
    }

    fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite()
    }
}

/// A single-mode phase shifter `e^{iφ}` on `mode` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSetting {
    pub mode: usize,
    pub phi: f64,
}

impl PhaseSetting {
    pub fn new(mode: usize, phi: f64) -> Self {
        Self {
            mode,
            phi: wrap_phase(phi),
        }
    }
}

/// Transfer block of a symmetric MZI:
/// `e^{iΣ} [[sin δ, cos δ], [cos δ, −sin δ]]`.
pub fn smzi_block(s: &SmziSetting) -> Block2 {
    let phase = Complex64::from_polar(1.0, s.sigma());
    let (sin, cos) = s.delta().sin_cos();
    [[phase * sin, phase * cos], [phase * cos, -phase * sin]]
}

/// Identity on `m` modes except `e^{iφ}` at `(mode, mode)`.
pub fn phase_matrix(p: &PhaseSetting, m: usize) -> Result<UnitaryMatrix, MeshError> {
    if p.mode == 0 || p.mode > m {
        return Err(MeshError::ModeOutOfRange {
            column: 0,
            mode: p.mode,
            m,
        });
    }
    let mut mat = ComplexMat::identity(m);
    mat[(p.mode - 1, p.mode - 1)] = Complex64::from_polar(1.0, p.phi);
    Ok(UnitaryMatrix::new(mat)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeshElement {
    Smzi {
        top_mode: usize,
        #[serde(flatten)]
        setting: SmziSetting,
    },
    Phase(PhaseSetting),
    Bare {
        mode: usize,
    },
}

impl MeshElement {
    pub fn smzi(top_mode: usize, setting: SmziSetting) -> Self {
        MeshElement::Smzi { top_mode, setting }
    }

    pub fn phase(mode: usize, phi: f64) -> Self {
        MeshElement::Phase(PhaseSetting::new(mode, phi))
    }

    /// Inclusive range of modes the element occupies.
    pub fn modes(&self) -> (usize, usize) {
        match *self {
            MeshElement::Smzi { top_mode, .. } => (top_mode, top_mode + 1),
            MeshElement::Phase(p) => (p.mode, p.mode),
            MeshElement::Bare { mode } => (mode, mode),
        }
    }

    pub fn covers(&self, mode: usize) -> bool {
        let (lo, hi) = self.modes();
        (lo..=hi).contains(&mode)
    }

    pub fn is_smzi(&self) -> bool {
        matches!(self, MeshElement::Smzi { .. })
    }

    fn canonical(self) -> Self {
        match self {
            MeshElement::Smzi { top_mode, setting } => MeshElement::Smzi {
                top_mode,
                setting: SmziSetting::new(setting.theta1, setting.theta2),
            },
            MeshElement::Phase(p) => MeshElement::Phase(PhaseSetting::new(p.mode, p.phi)),
            bare => bare,
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            MeshElement::Smzi { setting, .. } => setting.is_finite(),
            MeshElement::Phase(p) => p.phi.is_finite(),
            MeshElement::Bare { .. } => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshLayout {
    Reck,
    Clements,
    ClementsEdge,
    Custom,
}

pub type Column = Vec<MeshElement>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMesh")]
pub struct MeshCircuit {
    m: usize,
    layout: MeshLayout,
    columns: Vec<Column>,
}

#[derive(Deserialize)]
struct RawMesh {
    m: usize,
    layout: MeshLayout,
    columns: Vec<Column>,
}

impl TryFrom<RawMesh> for MeshCircuit {
    type Error = MeshError;

    fn try_from(raw: RawMesh) -> Result<Self, MeshError> {
        MeshCircuit::new(raw.m, raw.layout, raw.columns)
    }
}

impl MeshCircuit {
    /// Validates the layout and canonicalizes every phase to (−π, π].
    pub fn new(m: usize, layout: MeshLayout, columns: Vec<Column>) -> Result<Self, MeshError> {
        if m == 0 {
            return Err(MeshError::TooFewModes { m, min: 1 });
        }
        let columns: Vec<Column> = columns
            .into_iter()
            .map(|col| col.into_iter().map(MeshElement::canonical).collect())
            .collect();
        for (ci, col) in columns.iter().enumerate() {
            let mut occupied = vec![false; m + 1];
            for el in col {
                if !el.is_finite() {
                    return Err(MeshError::NonFinite { column: ci });
                }
                let (lo, hi) = el.modes();
                for mode in lo..=hi {
                    if mode == 0 || mode > m {
                        return Err(MeshError::ModeOutOfRange { column: ci, mode, m });
                    }
                    if occupied[mode] {
                        return Err(MeshError::Overlap { column: ci, mode });
                    }
                    occupied[mode] = true;
                }
            }
            if layout == MeshLayout::ClementsEdge {
                if let Some(mode) = (1..=m).find(|&mode| !occupied[mode]) {
                    return Err(MeshError::UncoveredEdge { column: ci, mode });
                }
            }
        }
        Ok(Self { m, layout, columns })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn layout(&self) -> MeshLayout {
        self.layout
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn element_at(&self, column: usize, mode: usize) -> Option<&MeshElement> {
        self.columns.get(column)?.iter().find(|el| el.covers(mode))
    }

    pub(crate) fn element_at_mut(&mut self, column: usize, mode: usize) -> Option<&mut MeshElement> {
        self.columns.get_mut(column)?.iter_mut().find(|el| el.covers(mode))
    }

    pub fn smzi_count(&self) -> usize {
        self.elements().filter(|el| el.is_smzi()).count()
    }

    pub fn phase_count(&self) -> usize {
        self.elements()
            .filter(|el| matches!(el, MeshElement::Phase(_)))
            .count()
    }

    pub fn elements(&self) -> impl Iterator<Item = &MeshElement> {
        self.columns.iter().flatten()
    }

    /// Whether `column` holds at least one sMZI.
    pub fn column_has_smzi(&self, column: usize) -> bool {
        self.columns
            .get(column)
            .is_some_and(|col| col.iter().any(MeshElement::is_smzi))
    }

    /// Evaluates the circuit to its transfer matrix. The first column acts
    /// first on the input, so it is the rightmost operator factor.
    pub fn evaluate(&self) -> Result<UnitaryMatrix, MeshError> {
        Ok(UnitaryMatrix::with_tolerance(self.transfer_matrix(), EVALUATE_TOL)?)
    }

    pub(crate) fn transfer_matrix(&self) -> ComplexMat {
        let mut acc = ComplexMat::identity(self.m);
        for col in &self.columns {
            for el in col {
                match *el {
                    MeshElement::Smzi { top_mode, setting } => {
                        acc.mix_rows(&smzi_block(&setting), top_mode - 1);
                    }
                    MeshElement::Phase(p) => {
                        acc.scale_row(p.mode - 1, Complex64::from_polar(1.0, p.phi));
                    }
                    MeshElement::Bare { .. } => {}
                }
            }
        }
        acc
    }

    /// Copy of the circuit with `phi` added to every phase shifter in
    /// `column`: both internal phases of each sMZI and every single-mode phase.
    pub fn shift_column(&self, column: usize, phi: f64) -> Result<MeshCircuit, MeshError> {
        if column >= self.columns.len() {
            return Err(MeshError::ColumnOutOfRange {
                column,
                len: self.columns.len(),
            });
        }
        let mut out = self.clone();
        for el in &mut out.columns[column] {
            match el {
                MeshElement::Smzi { setting, .. } => *setting = setting.shifted(phi),
                MeshElement::Phase(p) => p.phi = wrap_phase(p.phi + phi),
                MeshElement::Bare { .. } => {}
            }
        }
        Ok(out)
    }

    /// True when the first column carries no sMZI, i.e. it is a dedicated
    /// input phase column. Used by edge layouts to mark boundary columns.
    pub fn has_boundary_columns(&self) -> bool {
        self.columns.len() >= 2 && !self.column_has_smzi(0)
    }

    /// Edge layouts only: adds an all-phase input column and output column
    /// (zero phases) unless they are already present.
    pub fn with_boundary_columns(&self) -> MeshCircuit {
        if self.has_boundary_columns() {
            return self.clone();
        }
        let phase_column = || (1..=self.m).map(|mode| MeshElement::phase(mode, 0.0)).collect();
        let mut columns = Vec::with_capacity(self.columns.len() + 2);
        columns.push(phase_column());
        columns.extend(self.columns.iter().cloned());
        columns.push(phase_column());
        MeshCircuit {
            m: self.m,
            layout: self.layout,
            columns,
        }
    }
}

/// Free-function form of [`MeshCircuit::evaluate`].
pub fn evaluate(c: &MeshCircuit) -> Result<UnitaryMatrix, MeshError> {
    c.evaluate()
}

/// 1-based top modes of the sMZIs in column `column` (1-based) of an
/// `m`-mode rectangular mesh: odd columns start at mode 1, even at mode 2.
pub fn clements_column_tops(m: usize, column: usize) -> impl Iterator<Item = usize> {
    let first = if column % 2 == 1 { 1 } else { 2 };
    (first..m).step_by(2)
}

/// Rectangular sMZI mesh with tunable phases on every waveguide left
/// uncovered in a column. `m` columns; all phases start at zero.
pub fn clements_edge_layout(m: usize) -> Result<MeshCircuit, MeshError> {
    if m < 2 {
        return Err(MeshError::TooFewModes { m, min: 2 });
    }
    let columns = (1..=m)
        .map(|c| {
            let mut col: Column = Vec::new();
            let tops: Vec<usize> = clements_column_tops(m, c).collect();
            let mut mode = 1;
            while mode <= m {
                if tops.contains(&mode) {
                    col.push(MeshElement::smzi(mode, SmziSetting::zero()));
                    mode += 2;
                } else {
                    col.push(MeshElement::phase(mode, 0.0));
                    mode += 1;
                }
            }
            col
        })
        .collect();
    MeshCircuit::new(m, MeshLayout::ClementsEdge, columns)
}

/// 1-based column (among the `m` sMZI columns) and top mode of element
/// `(j, k)` of the rectangular decomposition. Odd diagonals fill from the
/// input side, even diagonals from the output side.
pub fn clements_position(m: usize, j: usize, k: usize) -> (usize, usize) {
    if j % 2 == 1 {
        (k, j - k + 1)
    } else {
        (m - k + 1, m - j + k - 1)
    }
}

/// Physical column index and top mode of element `(j, k)` in [`reck_layout`].
pub fn reck_position(j: usize, k: usize) -> (usize, usize) {
    (j + k - 1, j - k + 1)
}

/// Triangular sMZI mesh: an input phase column, `2m−3` sMZI columns and an
/// output phase column. External phases sit on every mode except the first.
pub fn reck_layout(m: usize) -> Result<MeshCircuit, MeshError> {
    if m < 2 {
        return Err(MeshError::TooFewModes { m, min: 2 });
    }
    let n_smzi_columns = 2 * m - 3;
    let external = || {
        std::iter::once(MeshElement::Bare { mode: 1 })
            .chain((2..=m).map(|mode| MeshElement::phase(mode, 0.0)))
            .collect::<Column>()
    };
    let mut columns: Vec<Column> = Vec::with_capacity(n_smzi_columns + 2);
    columns.push(external());
    columns.extend((0..n_smzi_columns).map(|_| Vec::new()));
    columns.push(external());
    for j in 1..m {
        for k in 1..=j {
            let (col, top) = reck_position(j, k);
            columns[col].push(MeshElement::smzi(top, SmziSetting::zero()));
        }
    }
    for col in &mut columns[1..=n_smzi_columns] {
        col.sort_by_key(|el| el.modes().0);
    }
    MeshCircuit::new(m, MeshLayout::Reck, columns)
}
