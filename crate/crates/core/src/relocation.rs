//! Moving single-mode phases out of the mesh interior.
//!
//! A phase `e^{iφ}` on both ports of an sMZI commutes through it, so a phase
//! on one port can be traded for `+φ` on both internal shifters and `−φ` on the
//! partner port. Repeating this on alternate sides of a column boundary walks
//! the residue down (or up) the mesh until it reaches a waveguide that carries
//! an edge phase shifter, or the circuit input/output.

use thiserror::Error;

use crate::clements::{residual_boundary, smzi_top_mode, AmziDecomposition, ClementsDecomposition};
use crate::mesh::{clements_edge_layout, clements_position, MeshCircuit, MeshElement, MeshError, MeshLayout};
use crate::numeric::{phase_distance, wrap_phase, NumericError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelocationError {
    #[error("relocation needs a clements_edge mesh, got {0:?}")]
    WrongLayout(MeshLayout),
    #[error("pending phase at boundary {boundary}, mode {mode} is outside an {m}-mode mesh")]
    OutOfRange { boundary: usize, mode: usize, m: usize },
    #[error("no sMZI or edge phase next to mode {mode} at boundary {boundary}")]
    Stuck { boundary: usize, mode: usize },
    #[error("relocation did not terminate after {hops} hops")]
    NoProgress { hops: usize },
    #[error("column {0} has no tunable phase")]
    EmptyColumn(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// A phase waiting to be placed. `column_boundary` counts sMZI columns:
/// 0 is the circuit input, `m` the output, `b` sits between sMZI columns `b`
/// and `b+1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PendingPhase {
    pub column_boundary: usize,
    pub mode: usize,
    pub phi: f64,
}

impl PendingPhase {
    pub fn new(column_boundary: usize, mode: usize, phi: f64) -> Self {
        Self {
            column_boundary,
            mode,
            phi,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Neighbor {
    Left,
    Right,
}

/// Absorbs `p` into `c` so that the result evaluates to `c` with `p` inserted
/// at its boundary. Boundary input/output phase columns are added if the
/// residue has to leave through them.
pub fn relocate_one(c: &MeshCircuit, p: PendingPhase) -> Result<MeshCircuit, RelocationError> {
    relocate_counted(c, p).map(|(out, _)| out)
}

/// As [`relocate_one`], also returning how many sMZIs were modified.
pub fn relocate_counted(c: &MeshCircuit, p: PendingPhase) -> Result<(MeshCircuit, usize), RelocationError> {
    if c.layout() != MeshLayout::ClementsEdge {
        return Err(RelocationError::WrongLayout(c.layout()));
    }
    let m = c.m();
    let n_smzi_columns = if c.has_boundary_columns() {
        c.columns().len() - 2
    } else {
        c.columns().len()
    };
    if p.column_boundary > n_smzi_columns || p.mode == 0 || p.mode > m {
        return Err(RelocationError::OutOfRange {
            boundary: p.column_boundary,
            mode: p.mode,
            m,
        });
    }
    if p.phi == 0.0 {
        return Ok((c.clone(), 0));
    }
    let at_edge = p.column_boundary == 0 || p.column_boundary == n_smzi_columns;
    let mut out = if at_edge { c.with_boundary_columns() } else { c.clone() };
    // with boundary columns present, sMZI column b is at index b
    let offset = usize::from(!out.has_boundary_columns());
    let left = p.column_boundary - offset;
    let right = left + 1;

    let (mut mode, mut phi) = (p.mode, p.phi);
    let mut last: Option<Neighbor> = None;
    let mut hops = 0;
    loop {
        for column in [left, right] {
            if let Some(MeshElement::Phase(slot)) = out.element_at_mut(column, mode) {
                slot.phi = wrap_phase(slot.phi + phi);
                return Ok((MeshCircuit::new(m, out.layout(), out.columns().to_vec())?, hops));
            }
        }
        if hops > 2 * m {
            return Err(RelocationError::NoProgress { hops });
        }
        let side = match last {
            None if is_smzi(&out, left, mode) => Neighbor::Left,
            None => Neighbor::Right,
            Some(Neighbor::Left) => Neighbor::Right,
            Some(Neighbor::Right) => Neighbor::Left,
        };
        let column = if side == Neighbor::Left { left } else { right };
        match out.element_at_mut(column, mode) {
            Some(MeshElement::Smzi { top_mode, setting }) => {
                *setting = setting.shifted(phi);
                mode = if mode == *top_mode { mode + 1 } else { mode - 1 };
                phi = -phi;
            }
            _ => {
                return Err(RelocationError::Stuck {
                    boundary: p.column_boundary,
                    mode,
                })
            }
        }
        last = Some(side);
        hops += 1;
    }
}

fn is_smzi(c: &MeshCircuit, column: usize, mode: usize) -> bool {
    c.element_at(column, mode).is_some_and(MeshElement::is_smzi)
}

fn edge_mesh_with_boundaries(m: usize) -> Result<MeshCircuit, RelocationError> {
    Ok(clements_edge_layout(m)?.with_boundary_columns())
}

fn set_element(columns: &mut [Vec<MeshElement>], column: usize, el: MeshElement) {
    let mode = el.modes().0;
    let slot = columns[column]
        .iter_mut()
        .find(|e| e.covers(mode))
        .expect("layout has an element on every mode");
    *slot = el;
}

fn add_phase(columns: &mut [Vec<MeshElement>], column: usize, mode: usize, phi: f64) {
    for el in &mut columns[column] {
        if let MeshElement::Phase(p) = el {
            if p.mode == mode {
                p.phi = wrap_phase(p.phi + phi);
                return;
            }
        }
    }
    panic!("no phase slot on mode {mode} in column {column}");
}

/// Builds the edge-phase mesh for a rectangular sMZI decomposition: sMZIs in
/// place, φ_j in the input or output column, the global phase folded into the
/// input column, and each residual ζ_j relocated from the middle of the mesh.
pub fn relocate_all(d: &ClementsDecomposition) -> Result<MeshCircuit, RelocationError> {
    let m = d.m();
    let mesh = edge_mesh_with_boundaries(m)?;
    let mut columns = mesh.columns().to_vec();
    let output = m + 1;
    for j in 1..m {
        for k in 1..=j {
            let (col, top) = clements_position(m, j, k);
            set_element(&mut columns, col, MeshElement::smzi(top, d.smzi(j, k)));
        }
        let column = if j % 2 == 1 { 0 } else { output };
        add_phase(&mut columns, column, d.phi_mode(j), d.phi(j));
    }
    for mode in 1..=m {
        add_phase(&mut columns, 0, mode, -d.global_phase());
    }
    let mut mesh = MeshCircuit::new(m, MeshLayout::ClementsEdge, columns)?;
    for j in 2..=m {
        mesh = relocate_one(&mesh, PendingPhase::new(residual_boundary(m, j), j, d.zeta(j)))?;
    }
    Ok(mesh)
}

/// Rebuilds an aMZI decomposition as an sMZI mesh. Each aMZI is an sMZI
/// preceded by φ on its top port and π on its bottom port; those phases and
/// the output screen are relocated to the edges.
pub fn absorb_amzi_externals(d: &AmziDecomposition) -> Result<MeshCircuit, RelocationError> {
    let m = d.m();
    let mesh = edge_mesh_with_boundaries(m)?;
    let mut columns = mesh.columns().to_vec();
    let mut pending = Vec::new();
    for j in 1..m {
        for k in 1..=j {
            let (col, top) = clements_position(m, j, k);
            debug_assert_eq!(top, smzi_top_mode(m, j, k));
            let cell = d.cell(j, k);
            set_element(&mut columns, col, MeshElement::smzi(top, cell.as_smzi()));
            pending.push(PendingPhase::new(col - 1, top, cell.phi));
            pending.push(PendingPhase::new(col - 1, top + 1, std::f64::consts::PI));
        }
    }
    for (i, &phi) in d.output_phases().iter().enumerate() {
        add_phase(&mut columns, m + 1, i + 1, phi);
    }
    let mut mesh = MeshCircuit::new(m, MeshLayout::ClementsEdge, columns)?;
    for p in pending {
        mesh = relocate_one(&mesh, p)?;
    }
    Ok(mesh)
}

/// Removes one shifter from `column` by subtracting its value from every
/// phase in the column, and returns the global-phase distance between the
/// circuits before and after. Should be zero up to rounding.
pub fn layer_redundancy_check(c: &MeshCircuit, column: usize) -> Result<f64, RelocationError> {
    if c.layout() != MeshLayout::ClementsEdge {
        return Err(RelocationError::WrongLayout(c.layout()));
    }
    let col = c.columns().get(column).ok_or(MeshError::ColumnOutOfRange {
        column,
        len: c.columns().len(),
    })?;
    let phi0 = match col.first() {
        Some(MeshElement::Smzi { setting, .. }) => setting.theta1,
        Some(MeshElement::Phase(p)) => p.phi,
        _ => return Err(RelocationError::EmptyColumn(column)),
    };
    if col.iter().any(|el| matches!(el, MeshElement::Bare { .. })) {
        return Err(RelocationError::EmptyColumn(column));
    }
    let reduced = c.shift_column(column, -phi0)?;
    Ok(phase_distance(c.evaluate()?.matrix(), reduced.evaluate()?.matrix())?)
}
