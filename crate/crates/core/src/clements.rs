//! Rectangular (Clements) decompositions.
//!
//! [`decompose_clements_smzi`] nulls odd diagonals by right multiplication and
//! even diagonals by left multiplication of the working matrix. The even
//! diagonals' operations end up on the output side of the circuit, which
//! leaves the residual phases ζ_j in a diagonal line through the middle of
//! the mesh rather than at its output.
//!
//! [`decompose_clements_amzi`] is the classic decomposition onto MZIs with one
//! internal and one external phase each; it is kept as an independent
//! reference for the sMZI route.

use num_complex::Complex64;

use crate::elimination::{DecompositionError, EliminationStep, Eliminator, MAX_INPUT_DEVIATION, ZERO_CHECK};
use crate::mesh::{clements_position, smzi_block, SmziSetting, EVALUATE_TOL};
use crate::numeric::{arg0, wrap_phase, Block2, ComplexMat, UnitaryMatrix};
use crate::reck::{check_tables, triangle_index};

#[derive(Clone, Debug, PartialEq)]
pub struct ClementsDecomposition {
    m: usize,
    smzi: Vec<SmziSetting>,
    phi_side: Vec<f64>,
    zeta_mid: Vec<f64>,
    global_phase: f64,
}

impl ClementsDecomposition {
    /// `smzi` is diagonal-major (`j = 1..m−1`, `k = 1..=j`), `phi_side[j−1]`
    /// is φ_j and `zeta_mid[j−2]` is ζ_j.
    pub fn new(
        m: usize,
        smzi: Vec<SmziSetting>,
        phi_side: Vec<f64>,
        zeta_mid: Vec<f64>,
        global_phase: f64,
    ) -> Result<Self, DecompositionError> {
        check_tables(m, smzi.len(), phi_side.len(), zeta_mid.len())?;
        let finite = smzi.iter().all(|s| s.theta1.is_finite() && s.theta2.is_finite())
            && phi_side.iter().chain(&zeta_mid).all(|p| p.is_finite())
            && global_phase.is_finite();
        if !finite {
            return Err(DecompositionError::InvalidTable("non-finite phase".into()));
        }
        Ok(Self {
            m,
            smzi: smzi.into_iter().map(|s| SmziSetting::new(s.theta1, s.theta2)).collect(),
            phi_side: phi_side.into_iter().map(wrap_phase).collect(),
            zeta_mid: zeta_mid.into_iter().map(wrap_phase).collect(),
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

    /// φ_j: on input mode `j+1` for odd `j`, on output mode `m−j` for even `j`.
    pub fn phi(&self, j: usize) -> f64 {
        self.phi_side[j - 1]
    }

    pub fn phi_side(&self) -> &[f64] {
        &self.phi_side
    }

    /// Mode carrying φ_j.
    pub fn phi_mode(&self, j: usize) -> usize {
        side_phase_mode(self.m, j)
    }

    /// Mid-circuit residual ζ_j on mode `j`, `j = 2..=m`.
    pub fn zeta(&self, j: usize) -> f64 {
        self.zeta_mid[j - 2]
    }

    pub fn zeta_mid(&self) -> &[f64] {
        &self.zeta_mid
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }
}

pub(crate) fn side_phase_mode(m: usize, j: usize) -> usize {
    if j % 2 == 1 {
        j + 1
    } else {
        m - j
    }
}

/// Top mode of sMZI `(j, k)`.
pub fn smzi_top_mode(m: usize, j: usize, k: usize) -> usize {
    clements_position(m, j, k).1
}

/// Boundary (0..=m, counted in sMZI columns) at which the residual ζ_j sits:
/// after the last odd-diagonal sMZI touching mode `j`, before every
/// even-diagonal one. A value of 0 means the circuit input.
pub fn residual_boundary(m: usize, mode: usize) -> usize {
    let mut boundary = 0;
    for j in (1..m).step_by(2) {
        for k in 1..=j {
            let (col, top) = clements_position(m, j, k);
            if top == mode || top + 1 == mode {
                boundary = boundary.max(col);
            }
        }
    }
    boundary
}

pub fn decompose_clements_smzi(u: &UnitaryMatrix) -> Result<ClementsDecomposition, DecompositionError> {
    run_smzi(u, false).map(|(d, _)| d)
}

/// As [`decompose_clements_smzi`], also returning every nulling step.
pub fn decompose_clements_smzi_traced(
    u: &UnitaryMatrix,
) -> Result<(ClementsDecomposition, Vec<EliminationStep>), DecompositionError> {
    run_smzi(u, true)
}

fn run_smzi(
    u: &UnitaryMatrix,
    record: bool,
) -> Result<(ClementsDecomposition, Vec<EliminationStep>), DecompositionError> {
    let m = u.dim();
    if m < 2 {
        return Err(DecompositionError::InvalidTable(format!("need m ≥ 2, got {m}")));
    }
    let mut elim = Eliminator::new(u, record)?;
    let mut smzi = vec![SmziSetting::zero(); m * (m - 1) / 2];
    let mut phi_side = Vec::with_capacity(m - 1);
    for j in 1..m {
        if j % 2 == 1 {
            let (mut x, mut y) = (m, j);
            phi_side.push(elim.right_phase(x, y));
            for k in 1..=j {
                smzi[triangle_index(j, k)] = elim.null_right(j, k, x, y, k < j)?;
                x -= 1;
                y -= 1;
            }
        } else {
            let (mut x, mut y) = (m - j + 1, 1);
            phi_side.push(elim.left_phase(x, y));
            for k in 1..=j {
                smzi[triangle_index(j, k)] = elim.null_left(j, k, x, y, k < j)?;
                x += 1;
                y += 1;
            }
        }
    }
    let residuals = elim.finish()?;
    let d = ClementsDecomposition::new(m, smzi, phi_side, residuals.zeta, residuals.global_phase)?;
    Ok((d, residuals.trace))
}

/// Operator product of the rectangular sMZI scheme: even-diagonal factors on
/// the output side, the residual phases in the middle, odd-diagonal factors on
/// the input side; global phase removed.
pub fn reconstruct_clements(d: &ClementsDecomposition) -> Result<UnitaryMatrix, DecompositionError> {
    let m = d.m();
    let mut acc = ComplexMat::identity(m);
    for j in (1..m).step_by(2) {
        acc.scale_row(d.phi_mode(j) - 1, Complex64::from_polar(1.0, d.phi(j)));
        for k in 1..=j {
            acc.mix_rows(&smzi_block(&d.smzi(j, k)), smzi_top_mode(m, j, k) - 1);
        }
    }
    for j in 2..=m {
        acc.scale_row(j - 1, Complex64::from_polar(1.0, d.zeta(j)));
    }
    for j in (2..m).step_by(2).rev() {
        for k in (1..=j).rev() {
            acc.mix_rows(&smzi_block(&d.smzi(j, k)), smzi_top_mode(m, j, k) - 1);
        }
        acc.scale_row(d.phi_mode(j) - 1, Complex64::from_polar(1.0, d.phi(j)));
    }
    let acc = acc.scale(Complex64::from_polar(1.0, -d.global_phase()));
    Ok(UnitaryMatrix::with_tolerance(acc, EVALUATE_TOL)?)
}

/// Asymmetric MZI: internal phase θ sets the split, external φ sits on the
/// top input. Transfer block `[[e^{iφ}cos θ, −sin θ], [e^{iφ}sin θ, cos θ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmziSetting {
    pub theta: f64,
    pub phi: f64,
}

impl AmziSetting {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self {
            theta: wrap_phase(theta),
            phi: wrap_phase(phi),
        }
    }

    pub fn block(&self) -> Block2 {
        let e = Complex64::from_polar(1.0, self.phi);
        let (s, c) = self.theta.sin_cos();
        [[e * c, Complex64::new(-s, 0.0)], [e * s, Complex64::new(c, 0.0)]]
    }

    /// The same element as an sMZI with Σ = 0 preceded by phases φ on the top
    /// input and π on the bottom input.
    pub fn as_smzi(&self) -> SmziSetting {
        SmziSetting::from_sigma_delta(0.0, std::f64::consts::FRAC_PI_2 - self.theta)
    }
}

/// aMZI settings per `(j, k)` (same indexing and placement as the sMZI
/// scheme) plus the output phase screen.
#[derive(Clone, Debug, PartialEq)]
pub struct AmziDecomposition {
    m: usize,
    cells: Vec<AmziSetting>,
    output_phases: Vec<f64>,
}

impl AmziDecomposition {
    pub fn new(m: usize, cells: Vec<AmziSetting>, output_phases: Vec<f64>) -> Result<Self, DecompositionError> {
        if m < 2 {
            return Err(DecompositionError::InvalidTable(format!("need m ≥ 2, got {m}")));
        }
        if cells.len() != m * (m - 1) / 2 || output_phases.len() != m {
            return Err(DecompositionError::InvalidTable(format!(
                "expected {} cells and {m} output phases, got {} and {}",
                m * (m - 1) / 2,
                cells.len(),
                output_phases.len()
            )));
        }
        let finite = cells.iter().all(|c| c.theta.is_finite() && c.phi.is_finite())
            && output_phases.iter().all(|p| p.is_finite());
        if !finite {
            return Err(DecompositionError::InvalidTable("non-finite phase".into()));
        }
        Ok(Self {
            m,
            cells: cells.into_iter().map(|c| AmziSetting::new(c.theta, c.phi)).collect(),
            output_phases: output_phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cell(&self, j: usize, k: usize) -> AmziSetting {
        self.cells[triangle_index(j, k)]
    }

    pub fn cells(&self) -> &[AmziSetting] {
        &self.cells
    }

    /// Output phase on each mode, 1-based mode `i` at index `i−1`.
    pub fn output_phases(&self) -> &[f64] {
        &self.output_phases
    }

    /// Element `(j, k)` pairs in physical order: odd diagonals in nulling
    /// order, then even diagonals in reverse.
    pub fn physical_order(&self) -> Vec<(usize, usize)> {
        physical_order(self.m)
    }
}

pub(crate) fn physical_order(m: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(m * (m - 1) / 2);
    for j in (1..m).step_by(2) {
        order.extend((1..=j).map(|k| (j, k)));
    }
    for j in (2..m).step_by(2).rev() {
        order.extend((1..=j).rev().map(|k| (j, k)));
    }
    order
}

pub fn decompose_clements_amzi(u: &UnitaryMatrix) -> Result<AmziDecomposition, DecompositionError> {
    let m = u.dim();
    if m < 2 {
        return Err(DecompositionError::InvalidTable(format!("need m ≥ 2, got {m}")));
    }
    if u.certified_tol() > MAX_INPUT_DEVIATION {
        return Err(DecompositionError::NotUnitary {
            deviation: u.certified_tol(),
        });
    }
    let mut w = u.matrix().clone();
    let mut cells = vec![AmziSetting::new(0.0, 0.0); m * (m - 1) / 2];
    let mut left_ops: Vec<(usize, usize)> = Vec::new();
    for j in 1..m {
        for k in 1..=j {
            if j % 2 == 1 {
                let (x, y) = (m - k + 1, j - k + 1);
                let (a, b) = (w[(x - 1, y - 1)], w[(x - 1, y)]);
                let cell = AmziSetting::new(a.norm().atan2(b.norm()), arg0(a) - arg0(b));
                w.mix_columns(&adjoint_block(&cell.block()), y - 1);
                check_nulled(&w, j, k, x, y)?;
                cells[triangle_index(j, k)] = cell;
            } else {
                let (x, y) = (m - j + k, k);
                let (a, b) = (w[(x - 1, y - 1)], w[(x - 2, y - 1)]);
                let cell = AmziSetting::new(a.norm().atan2(b.norm()), arg0(a) - arg0(b) + std::f64::consts::PI);
                w.mix_rows(&cell.block(), x - 2);
                check_nulled(&w, j, k, x, y)?;
                cells[triangle_index(j, k)] = cell;
                left_ops.push((j, k));
            }
        }
    }
    let mut diag: Vec<Complex64> = (0..m).map(|i| w[(i, i)]).collect();
    // T⁻¹(θ, φ)·D = D'·T(θ, φ'): push the diagonal through the left factors
    for &(j, k) in left_ops.iter().rev() {
        let top = smzi_top_mode(m, j, k) - 1;
        let cell = cells[triangle_index(j, k)];
        let (d1, d2) = (diag[top], diag[top + 1]);
        let phi_new = arg0(-d1 / d2);
        diag[top] = -Complex64::from_polar(1.0, -cell.phi) * d2;
        cells[triangle_index(j, k)] = AmziSetting::new(cell.theta, phi_new);
    }
    let output_phases = diag.iter().map(|&d| arg0(d)).collect();
    AmziDecomposition::new(m, cells, output_phases)
}

fn check_nulled(w: &ComplexMat, j: usize, k: usize, x: usize, y: usize) -> Result<(), DecompositionError> {
    let residual = w[(x - 1, y - 1)].norm();
    if residual < ZERO_CHECK {
        Ok(())
    } else {
        Err(DecompositionError::NumericalFailure { j, k, x, y, residual })
    }
}

fn adjoint_block(b: &Block2) -> Block2 {
    [[b[0][0].conj(), b[1][0].conj()], [b[0][1].conj(), b[1][1].conj()]]
}

/// Product of the aMZI mesh in physical order followed by the output screen.
pub fn reconstruct_clements_amzi(d: &AmziDecomposition) -> Result<UnitaryMatrix, DecompositionError> {
    let m = d.m();
    let mut acc = ComplexMat::identity(m);
    for (j, k) in d.physical_order() {
        acc.mix_rows(&d.cell(j, k).block(), smzi_top_mode(m, j, k) - 1);
    }
    for (i, &phi) in d.output_phases().iter().enumerate() {
        acc.scale_row(i, Complex64::from_polar(1.0, phi));
    }
    Ok(UnitaryMatrix::with_tolerance(acc, EVALUATE_TOL)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{phase_matrix, PhaseSetting};
    use crate::numeric::{embed_pair, global_phase_distance, haar_random_unitary};
    use crate::reck::decompose_reck;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn two_modes_match_reck() {
        for u in [UnitaryMatrix::identity(2).unwrap(), haar_random_unitary(2, 4).unwrap()] {
            let c = decompose_clements_smzi(&u).unwrap();
            let r = decompose_reck(&u).unwrap();
            assert_eq!(c.smzi_settings(), r.smzi_settings());
            assert_eq!(c.phi_side(), r.phi_in());
            assert_eq!(c.zeta_mid(), r.zeta_out());
            assert_eq!(c.global_phase(), r.global_phase());
        }
    }

    #[test]
    fn nulling_order_three_modes() {
        let u = haar_random_unitary(3, 11).unwrap();
        let (_, trace) = decompose_clements_smzi_traced(&u).unwrap();
        let order: Vec<(usize, usize)> = trace.iter().map(|s| (s.x, s.y)).collect();
        assert_eq!(order, vec![(3, 1), (2, 1), (3, 2)]);
    }

    #[test]
    fn haar_round_trip_six_modes() {
        let u = haar_random_unitary(6, 3).unwrap();
        let back = reconstruct_clements(&decompose_clements_smzi(&u).unwrap()).unwrap();
        assert!(global_phase_distance(&back, &u).unwrap() < 1e-10);
    }

    #[test]
    fn zero_table_is_swap_and_identity_round_trips() {
        let d = ClementsDecomposition::new(2, vec![SmziSetting::zero()], vec![0.0], vec![0.0], 0.0).unwrap();
        let u = reconstruct_clements(&d).unwrap();
        assert!((u.matrix()[(1, 0)].re - 1.0).abs() < 1e-16);
        let i5 = UnitaryMatrix::identity(5).unwrap();
        let back = reconstruct_clements(&decompose_clements_smzi(&i5).unwrap()).unwrap();
        assert!(global_phase_distance(&back, &i5).unwrap() < 1e-10);
    }

    #[test]
    fn reconstruction_matches_operator_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = 4;
        let smzi = (0..6)
            .map(|_| SmziSetting::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI)))
            .collect();
        let phi = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
        let zeta = (0..3).map(|_| rng.random_range(-PI..PI)).collect();
        let d = ClementsDecomposition::new(m, smzi, phi, zeta, -1.2).unwrap();

        let embed = |j: usize, k: usize, top: usize| embed_pair(&smzi_block(&d.smzi(j, k)), top, m).unwrap();
        let phase = |mode: usize, phi: f64| phase_matrix(&PhaseSetting::new(mode, phi), m).unwrap().into_matrix();
        // P2 M21 M22 · Q4 Q3 Q2 · M33 M32 M31 P3 M11 P1, written out for m = 4
        let factors = [
            phase(2, d.phi(2)),
            embed(2, 1, 2),
            embed(2, 2, 3),
            phase(4, d.zeta(4)),
            phase(3, d.zeta(3)),
            phase(2, d.zeta(2)),
            embed(3, 3, 1),
            embed(3, 2, 2),
            embed(3, 1, 3),
            phase(4, d.phi(3)),
            embed(1, 1, 1),
            phase(2, d.phi(1)),
        ];
        let mut oracle = ComplexMat::identity(m);
        for f in &factors {
            oracle = oracle.mat_mul(f).unwrap();
        }
        let oracle = oracle.scale(Complex64::from_polar(1.0, 1.2));
        let diff = reconstruct_clements(&d).unwrap().matrix().max_abs_diff(&oracle).unwrap();
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn trace_invariants() {
        let m = 8;
        let (_, trace) = decompose_clements_smzi_traced(&haar_random_unitary(m, 21).unwrap()).unwrap();
        let mut nulled = Vec::new();
        for step in &trace {
            let (t, p) = (step.target_before, step.partner_before);
            assert!(wrap_phase(arg0(t) - arg0(p)).abs() < 1e-9 || t.norm() < 1e-12 || p.norm() < 1e-12);
            nulled.push((step.x, step.y));
            for &(x, y) in &nulled {
                assert!(step.working[(x - 1, y - 1)].norm() < 1e-10);
            }
            assert!(step.working.unitarity_deviation() < 1e-10);
        }
    }

    #[test]
    fn residual_boundaries_form_a_diagonal() {
        assert_eq!(
            (2..=4).map(|mode| residual_boundary(4, mode)).collect::<Vec<_>>(),
            vec![3, 2, 1]
        );
        assert_eq!(residual_boundary(2, 2), 1);
    }

    #[test]
    fn amzi_identity_and_round_trip() {
        let d = decompose_clements_amzi(&UnitaryMatrix::identity(2).unwrap()).unwrap();
        let back = reconstruct_clements_amzi(&d).unwrap();
        assert!(global_phase_distance(&back, &UnitaryMatrix::identity(2).unwrap()).unwrap() < 1e-15);

        let u = haar_random_unitary(4, 5).unwrap();
        let back = reconstruct_clements_amzi(&decompose_clements_amzi(&u).unwrap()).unwrap();
        assert!(global_phase_distance(&back, &u).unwrap() < 1e-10);
    }

    #[test]
    fn amzi_agrees_with_smzi_route() {
        let u = haar_random_unitary(6, 9).unwrap();
        let via_amzi = reconstruct_clements_amzi(&decompose_clements_amzi(&u).unwrap()).unwrap();
        let via_smzi = reconstruct_clements(&decompose_clements_smzi(&u).unwrap()).unwrap();
        assert!(global_phase_distance(&via_amzi, &via_smzi).unwrap() < 1e-9);
    }

    #[test]
    fn amzi_as_smzi_identity() {
        let cell = AmziSetting::new(0.37, -2.1);
        let s = smzi_block(&cell.as_smzi());
        let pre = [
            Complex64::from_polar(1.0, cell.phi),
            Complex64::from_polar(1.0, PI),
        ];
        let b = cell.block();
        for r in 0..2 {
            for c in 0..2 {
                assert!((s[r][c] * pre[c] - b[r][c]).norm() < 1e-15);
            }
        }
    }
}
