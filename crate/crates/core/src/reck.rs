//! Triangular (Reck) decomposition onto symmetric MZIs.
//!
//! Diagonal `j` starts with an input phase on mode `j+1` that aligns the
//! phases of the first pair to null; every sMZI after that sets its own Σ to
//! align the next pair. The last sMZI of a diagonal has nothing left to align,
//! so its Σ is fixed at zero.

use num_complex::Complex64;

use crate::elimination::{DecompositionError, EliminationStep, Eliminator};
use crate::mesh::{reck_layout, reck_position, MeshCircuit, MeshElement, SmziSetting};
use crate::numeric::{wrap_phase, UnitaryMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ReckDecomposition {
    m: usize,
    smzi: Vec<SmziSetting>,
    phi_in: Vec<f64>,
    zeta_out: Vec<f64>,
    global_phase: f64,
}

/// Position of `(j, k)` in a diagonal-major table, `1 ≤ k ≤ j`.
pub(crate) fn triangle_index(j: usize, k: usize) -> usize {
    (j - 1) * j / 2 + (k - 1)
}

pub(crate) fn check_tables(
    m: usize,
    smzi: usize,
    phi: usize,
    zeta: usize,
) -> Result<(), DecompositionError> {
    if m < 2 {
        return Err(DecompositionError::InvalidTable(format!("need m ≥ 2, got {m}")));
    }
    let expected = m * (m - 1) / 2;
    if smzi != expected {
        return Err(DecompositionError::InvalidTable(format!(
            "expected {expected} sMZI settings, got {smzi}"
        )));
    }
    if phi != m - 1 || zeta != m - 1 {
        return Err(DecompositionError::InvalidTable(format!(
            "expected {} side and residual phases, got {phi} and {zeta}",
            m - 1
        )));
    }
    Ok(())
}

impl ReckDecomposition {
    /// `smzi` is diagonal-major (`j = 1..m−1`, `k = 1..=j`), `phi_in[j−1]` is
    /// φ_j and `zeta_out[j−2]` is ζ_j.
    pub fn new(
        m: usize,
        smzi: Vec<SmziSetting>,
        phi_in: Vec<f64>,
        zeta_out: Vec<f64>,
        global_phase: f64,
    ) -> Result<Self, DecompositionError> {
        check_tables(m, smzi.len(), phi_in.len(), zeta_out.len())?;
        let finite = smzi.iter().all(|s| s.theta1.is_finite() && s.theta2.is_finite())
            && phi_in.iter().chain(&zeta_out).all(|p| p.is_finite())
            && global_phase.is_finite();
        if !finite {
            return Err(DecompositionError::InvalidTable("non-finite phase".into()));
        }
        Ok(Self {
            m,
            smzi: smzi.into_iter().map(|s| SmziSetting::new(s.theta1, s.theta2)).collect(),
            phi_in: phi_in.into_iter().map(wrap_phase).collect(),
            zeta_out: zeta_out.into_iter().map(wrap_phase).collect(),
            global_phase: wrap_phase(global_phase),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn smzi(&self, j: usize, k: usize) -> SmziSetting {
        self.smzi[triangle_index(j, k)]
    }

    pub fn smzi_settings(&self) -> &[SmziSetting] {
        &self.smzi
    }

    /// Input phase φ_j on mode `j+1`.
    pub fn phi(&self, j: usize) -> f64 {
        self.phi_in[j - 1]
    }

    pub fn phi_in(&self) -> &[f64] {
        &self.phi_in
    }

    /// Output phase ζ_j on mode `j`, for `j = 2..=m`.
    pub fn zeta(&self, j: usize) -> f64 {
        self.zeta_out[j - 2]
    }

    pub fn zeta_out(&self) -> &[f64] {
        &self.zeta_out
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    /// The triangular mesh carrying these phases. It realizes the target
    /// times `e^{i·global_phase}`.
    pub fn to_mesh(&self) -> MeshCircuit {
        let m = self.m;
        let layout = reck_layout(m).expect("m ≥ 2 is checked at construction");
        let last = layout.columns().len() - 1;
        let mut columns = layout.columns().to_vec();
        for j in 1..m {
            set_phase(&mut columns[0], j + 1, self.phi(j));
            set_phase(&mut columns[last], j + 1, self.zeta(j + 1));
            for k in 1..=j {
                let (col, top) = reck_position(j, k);
                for el in &mut columns[col] {
                    if let MeshElement::Smzi { top_mode, setting } = el {
                        if *top_mode == top {
                            *setting = self.smzi(j, k);
                        }
                    }
                }
            }
        }
        MeshCircuit::new(m, layout.layout(), columns).expect("layout is valid by construction")
    }
}

fn set_phase(column: &mut [MeshElement], mode: usize, phi: f64) {
    for el in column {
        if let MeshElement::Phase(p) = el {
            if p.mode == mode {
                p.phi = wrap_phase(phi);
            }
        }
    }
}

pub fn decompose_reck(u: &UnitaryMatrix) -> Result<ReckDecomposition, DecompositionError> {
    run(u, false).map(|(d, _)| d)
}

/// As [`decompose_reck`], also returning every nulling step.
pub fn decompose_reck_traced(
    u: &UnitaryMatrix,
) -> Result<(ReckDecomposition, Vec<EliminationStep>), DecompositionError> {
    run(u, true)
}

fn run(u: &UnitaryMatrix, record: bool) -> Result<(ReckDecomposition, Vec<EliminationStep>), DecompositionError> {
    let m = u.dim();
    if m < 2 {
        return Err(DecompositionError::InvalidTable(format!("need m ≥ 2, got {m}")));
    }
    let mut elim = Eliminator::new(u, record)?;
    let mut smzi = Vec::with_capacity(m * (m - 1) / 2);
    let mut phi_in = Vec::with_capacity(m - 1);
    for j in 1..m {
        let (mut x, mut y) = (m, j);
        phi_in.push(elim.right_phase(x, y));
        for k in 1..=j {
            smzi.push(elim.null_right(j, k, x, y, k < j)?);
            x -= 1;
            y -= 1;
        }
    }
    let residuals = elim.finish()?;
    let d = ReckDecomposition::new(m, smzi, phi_in, residuals.zeta, residuals.global_phase)?;
    Ok((d, residuals.trace))
}

/// Evaluates the triangular mesh and removes the recorded global phase.
pub fn reconstruct_reck(d: &ReckDecomposition) -> Result<UnitaryMatrix, DecompositionError> {
    let mesh = d.to_mesh();
    let mat = mesh
        .transfer_matrix()
        .scale(Complex64::from_polar(1.0, -d.global_phase()));
    Ok(UnitaryMatrix::with_tolerance(mat, crate::mesh::EVALUATE_TOL)?)
}

/// `(m−1)²` internal plus `2(m−1)` external shifters: `m² − 1`.
pub fn free_parameter_count(m: usize) -> Result<usize, DecompositionError> {
    if m < 2 {
        return Err(DecompositionError::InvalidTable(format!("need m ≥ 2, got {m}")));
    }
    Ok((m - 1) * (m - 1) + 2 * (m - 1))
}
