//! On-disk formats: matrices, phase tables, optimizer reports.

use std::collections::BTreeSet;

use num_complex::Complex64;
use photomesh::alternating::{AlternatingCircuit, PhaseForm};
use photomesh::clements::{AmziDecomposition, AmziSetting, ClementsDecomposition};
use photomesh::mesh::{clements_edge_layout, Column, MeshCircuit, MeshElement, MeshLayout, SmziSetting};
use photomesh::optimize::{OptimizeResult, RestartOutcome};
use photomesh::reck::ReckDecomposition;
use photomesh::{ComplexMat, UnitaryMatrix};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Dense complex matrix as separate real and imaginary row arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub m: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(mat: &ComplexMat) -> Self {
        let rows = |f: fn(&Complex64) -> f64| (0..mat.rows()).map(|r| mat.row(r).iter().map(f).collect()).collect();
        Self {
            m: mat.rows(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMat, CliError> {
        let m = self.m;
        if m == 0 {
            return Err(CliError::Input("matrix file: m must be at least 1".into()));
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != m || part.iter().any(|row| row.len() != m) {
                return Err(CliError::Input(format!("matrix file: {name} is not {m}x{m}")));
            }
        }
        let data = self
            .re
            .iter()
            .flatten()
            .zip(self.im.iter().flatten())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexMat::new(m, m, data).map_err(|e| CliError::Input(format!("matrix file: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmziEntry {
    pub j: usize,
    pub k: usize,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiEntry {
    pub j: usize,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaEntry {
    pub j: usize,
    pub zeta: f64,
}

/// Phase table shared by the triangular and rectangular sMZI schemes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmziTable {
    pub m: usize,
    pub smzi: Vec<SmziEntry>,
    pub phi: Vec<PhiEntry>,
    pub zeta: Vec<ZetaEntry>,
    pub global_phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmziEntry {
    pub j: usize,
    pub k: usize,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmziTable {
    pub m: usize,
    pub amzi: Vec<AmziEntry>,
    pub output_phases: Vec<f64>,
    pub global_phase: f64,
}

/// Relocated rectangular mesh: input phase column, `m` sMZI columns with edge
/// phases, output phase column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeTable {
    pub m: usize,
    pub global_phase: f64,
    pub columns: Vec<Column>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlternatingTable {
    pub m: usize,
    pub depth: usize,
    pub splitter_angles: Vec<Vec<f64>>,
    pub phase_layers: Vec<Vec<f64>>,
    pub global_phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme")]
pub enum PhaseTableFile {
    #[serde(rename = "reck-smzi")]
    ReckSmzi(SmziTable),
    #[serde(rename = "clements-smzi")]
    ClementsSmzi(SmziTable),
    #[serde(rename = "clements-amzi")]
    ClementsAmzi(AmziTable),
    #[serde(rename = "clements-edge")]
    ClementsEdge(EdgeTable),
    #[serde(rename = "fldzhyan-full")]
    FldzhyanFull(AlternatingTable),
    #[serde(rename = "fldzhyan-compact")]
    FldzhyanCompact(AlternatingTable),
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Input(format!("phase table: {}", msg.into()))
}

fn check_m(m: usize) -> Result<(), CliError> {
    if m < 2 {
        Err(schema(format!("m must be at least 2, got {m}")))
    } else {
        Ok(())
    }
}

/// Checks that `keys` is exactly `expected`, with no repeats.
fn exact_keys<K: Ord + Copy + std::fmt::Debug>(
    what: &str,
    keys: impl IntoIterator<Item = K>,
    expected: impl IntoIterator<Item = K>,
) -> Result<(), CliError> {
    let expected: BTreeSet<K> = expected.into_iter().collect();
    let mut seen = BTreeSet::new();
    for key in keys {
        if !expected.contains(&key) {
            return Err(schema(format!("{what} entry {key:?} is out of range")));
        }
        if !seen.insert(key) {
            return Err(schema(format!("{what} entry {key:?} appears twice")));
        }
    }
    if let Some(missing) = expected.difference(&seen).next() {
        return Err(schema(format!("{what} entry {missing:?} is missing")));
    }
    Ok(())
}

fn triangle(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..m).flat_map(|j| (1..=j).map(move |k| (j, k)))
}

fn sorted_by_jk<T>(mut v: Vec<T>, key: impl Fn(&T) -> (usize, usize)) -> Vec<T> {
    v.sort_by_key(|e| key(e));
    v
}

impl SmziTable {
    fn build(m: usize, smzi: impl Fn(usize, usize) -> SmziSetting, phi: &[f64], zeta: &[f64], global_phase: f64) -> Self {
        Self {
            m,
            smzi: triangle(m)
                .map(|(j, k)| {
                    let s = smzi(j, k);
                    SmziEntry {
                        j,
                        k,
                        theta1: s.theta1,
                        theta2: s.theta2,
                    }
                })
                .collect(),
            phi: phi.iter().enumerate().map(|(i, &phi)| PhiEntry { j: i + 1, phi }).collect(),
            zeta: zeta.iter().enumerate().map(|(i, &zeta)| ZetaEntry { j: i + 2, zeta }).collect(),
            global_phase,
        }
    }

    pub fn from_reck(d: &ReckDecomposition) -> Self {
        Self::build(d.m(), |j, k| d.smzi(j, k), d.phi_in(), d.zeta_out(), d.global_phase())
    }

    pub fn from_clements(d: &ClementsDecomposition) -> Self {
        Self::build(d.m(), |j, k| d.smzi(j, k), d.phi_side(), d.zeta_mid(), d.global_phase())
    }

    /// Validated settings in diagonal-major order, φ, ζ and the global phase.
    fn parts(&self) -> Result<(Vec<SmziSetting>, Vec<f64>, Vec<f64>), CliError> {
        let m = self.m;
        check_m(m)?;
        exact_keys("smzi", self.smzi.iter().map(|e| (e.j, e.k)), triangle(m))?;
        exact_keys("phi", self.phi.iter().map(|e| e.j), 1..m)?;
        exact_keys("zeta", self.zeta.iter().map(|e| e.j), 2..=m)?;
        let smzi = sorted_by_jk(self.smzi.clone(), |e| (e.j, e.k))
            .into_iter()
            .map(|e| SmziSetting {
                theta1: e.theta1,
                theta2: e.theta2,
            })
            .collect();
        let phi = sorted_by_jk(self.phi.clone(), |e| (e.j, 0)).into_iter().map(|e| e.phi).collect();
        let zeta = sorted_by_jk(self.zeta.clone(), |e| (e.j, 0)).into_iter().map(|e| e.zeta).collect();
        Ok((smzi, phi, zeta))
    }

    pub fn to_reck(&self) -> Result<ReckDecomposition, CliError> {
        let (smzi, phi, zeta) = self.parts()?;
        ReckDecomposition::new(self.m, smzi, phi, zeta, self.global_phase).map_err(|e| schema(e.to_string()))
    }

    pub fn to_clements(&self) -> Result<ClementsDecomposition, CliError> {
        let (smzi, phi, zeta) = self.parts()?;
        ClementsDecomposition::new(self.m, smzi, phi, zeta, self.global_phase).map_err(|e| schema(e.to_string()))
    }
}

impl AmziTable {
    pub fn from_decomposition(d: &AmziDecomposition) -> Self {
        Self {
            m: d.m(),
            amzi: triangle(d.m())
                .map(|(j, k)| {
                    let c = d.cell(j, k);
                    AmziEntry {
                        j,
                        k,
                        theta: c.theta,
                        phi: c.phi,
                    }
                })
                .collect(),
            output_phases: d.output_phases().to_vec(),
            global_phase: 0.0,
        }
    }

    pub fn to_decomposition(&self) -> Result<AmziDecomposition, CliError> {
        check_m(self.m)?;
        exact_keys("amzi", self.amzi.iter().map(|e| (e.j, e.k)), triangle(self.m))?;
        if self.output_phases.len() != self.m {
            return Err(schema(format!("expected {} output phases", self.m)));
        }
        let cells = sorted_by_jk(self.amzi.clone(), |e| (e.j, e.k))
            .into_iter()
            .map(|e| AmziSetting { theta: e.theta, phi: e.phi })
            .collect();
        AmziDecomposition::new(self.m, cells, self.output_phases.clone()).map_err(|e| schema(e.to_string()))
    }
}

impl EdgeTable {
    pub fn from_mesh(mesh: &MeshCircuit) -> Self {
        Self {
            m: mesh.m(),
            global_phase: 0.0,
            columns: mesh.columns().to_vec(),
        }
    }

    /// The mesh, after checking it has exactly the relocated edge layout.
    pub fn to_mesh(&self) -> Result<MeshCircuit, CliError> {
        let m = self.m;
        check_m(m)?;
        let mesh = MeshCircuit::new(m, MeshLayout::ClementsEdge, self.columns.clone()).map_err(|e| schema(e.to_string()))?;
        let reference = clements_edge_layout(m)
            .map_err(|e| schema(e.to_string()))?
            .with_boundary_columns();
        let shape = |col: &Column| {
            let mut s: Vec<(bool, (usize, usize))> = col.iter().map(|el| (el.is_smzi(), el.modes())).collect();
            s.sort_by_key(|&(_, modes)| modes);
            s
        };
        let same = mesh.columns().len() == reference.columns().len()
            && mesh
                .columns()
                .iter()
                .zip(reference.columns())
                .all(|(a, b)| shape(a) == shape(b) && a.iter().all(|el| !matches!(el, MeshElement::Bare { .. })));
        if !same {
            return Err(schema(format!(
                "columns do not match the {m}-mode edge layout with input and output phase columns"
            )));
        }
        Ok(mesh)
    }
}

impl AlternatingTable {
    pub fn from_circuit(c: &AlternatingCircuit) -> Self {
        Self {
            m: c.m(),
            depth: c.depth(),
            splitter_angles: c.splitter_angles().to_vec(),
            phase_layers: c.phase_layers().to_vec(),
            global_phase: 0.0,
        }
    }

    pub fn to_circuit(&self, form: PhaseForm) -> Result<AlternatingCircuit, CliError> {
        AlternatingCircuit::new(
            self.m,
            self.depth,
            form,
            self.splitter_angles.clone(),
            self.phase_layers.clone(),
        )
        .map_err(|e| schema(e.to_string()))
    }
}

impl PhaseTableFile {
    pub fn scheme(&self) -> &'static str {
        match self {
            PhaseTableFile::ReckSmzi(_) => "reck-smzi",
            PhaseTableFile::ClementsSmzi(_) => "clements-smzi",
            PhaseTableFile::ClementsAmzi(_) => "clements-amzi",
            PhaseTableFile::ClementsEdge(_) => "clements-edge",
            PhaseTableFile::FldzhyanFull(_) => "fldzhyan-full",
            PhaseTableFile::FldzhyanCompact(_) => "fldzhyan-compact",
        }
    }

    /// Unitary described by the table, global phase included.
    pub fn evaluate(&self) -> Result<UnitaryMatrix, CliError> {
        let numerical = |e: &dyn std::fmt::Display| CliError::Numerical(e.to_string());
        let (u, global_phase) = match self {
            PhaseTableFile::ReckSmzi(t) => {
                return photomesh::reck::reconstruct_reck(&t.to_reck()?).map_err(|e| numerical(&e));
            }
            PhaseTableFile::ClementsSmzi(t) => {
                return photomesh::clements::reconstruct_clements(&t.to_clements()?).map_err(|e| numerical(&e));
            }
            PhaseTableFile::ClementsAmzi(t) => (
                photomesh::clements::reconstruct_clements_amzi(&t.to_decomposition()?).map_err(|e| numerical(&e))?,
                t.global_phase,
            ),
            PhaseTableFile::ClementsEdge(t) => (t.to_mesh()?.evaluate().map_err(|e| numerical(&e))?, t.global_phase),
            PhaseTableFile::FldzhyanFull(t) => (
                t.to_circuit(PhaseForm::Full)?.evaluate().map_err(|e| numerical(&e))?,
                t.global_phase,
            ),
            PhaseTableFile::FldzhyanCompact(t) => (
                t.to_circuit(PhaseForm::Compact)?.evaluate().map_err(|e| numerical(&e))?,
                t.global_phase,
            ),
        };
        if !global_phase.is_finite() {
            return Err(schema("global_phase is not finite"));
        }
        Ok(u.with_global_phase(-global_phase))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub m: usize,
    pub depth: usize,
    pub sigma: f64,
    pub seed: u64,
    pub achieved_infidelity: f64,
    pub iterations: usize,
    pub best_restart: usize,
    pub restarts: Vec<RestartOutcome>,
    pub circuit: PhaseTableFile,
}

impl OptimizeReport {
    pub fn new(sigma: f64, seed: u64, circuit: &AlternatingCircuit, result: &OptimizeResult) -> Self {
        Self {
            m: circuit.m(),
            depth: circuit.depth(),
            sigma,
            seed,
            achieved_infidelity: result.achieved_infidelity,
            iterations: result.iterations,
            best_restart: result.best_restart,
            restarts: result.restarts.clone(),
            circuit: PhaseTableFile::FldzhyanFull(AlternatingTable::from_circuit(circuit)),
        }
    }
}
