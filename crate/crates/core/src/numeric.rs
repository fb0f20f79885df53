//! Dense complex matrices, Haar sampling and phase-insensitive distances.
//!
//! Everything here is small and dense: meshes of a few hundred modes at most,
//! so plain row-major `Vec<Complex64>` storage is enough.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Default bound on `max |U†U - I|` accepted when certifying a unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

/// A 2×2 complex block acting on a pair of adjacent modes, `[row][col]`.
pub type Block2 = [[Complex64; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("incompatible shapes: {lhs_rows}x{lhs_cols} and {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("mode index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not unitary: max |U^H U - I| = {deviation:e} exceeds {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMat {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, NumericError> {
        if rows == 0 {
            return Err(NumericError::InvalidDimension(rows));
        }
        if cols == 0 {
            return Err(NumericError::InvalidDimension(cols));
        }
        if data.len() != rows * cols {
            return Err(NumericError::ShapeMismatch {
                lhs_rows: rows,
                lhs_cols: cols,
                rhs_rows: data.len(),
                rhs_cols: 1,
            });
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(NumericError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, NumericError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(NumericError::NotSquare {
                rows: n_rows,
                cols: n_cols,
            });
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// # Panics
    /// If `n` is zero.
    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut out = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            out[(i, i)] = z;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mat_mul(&self, rhs: &ComplexMat) -> Result<ComplexMat, NumericError> {
        if self.cols != rhs.rows {
            return Err(NumericError::ShapeMismatch {
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let mut out = ComplexMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMat {
        let mut out = ComplexMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> ComplexMat {
        let mut out = ComplexMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Entry-wise complex conjugate.
    pub fn conj(&self) -> ComplexMat {
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Complex64::conj).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMat {
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus of `self - other`, or `None` on a shape mismatch.
    pub fn max_abs_diff(&self, other: &ComplexMat) -> Option<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }

    /// `max |A†A - I|` over entries. Only meaningful for square matrices.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.cols;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..self.rows {
                    acc += self[(r, i)].conj() * self[(r, j)];
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// In-place `V ← V·B` where `B` is `block` embedded on columns `(c, c+1)` (0-based).
    pub(crate) fn mix_columns(&mut self, block: &Block2, c: usize) {
        for r in 0..self.rows {
            let a = self[(r, c)];
            let b = self[(r, c + 1)];
            self[(r, c)] = a * block[0][0] + b * block[1][0];
            self[(r, c + 1)] = a * block[0][1] + b * block[1][1];
        }
    }

    /// In-place `V ← B·V` where `B` is `block` embedded on rows `(r, r+1)` (0-based).
    pub(crate) fn mix_rows(&mut self, block: &Block2, r: usize) {
        for c in 0..self.cols {
            let a = self[(r, c)];
            let b = self[(r + 1, c)];
            self[(r, c)] = block[0][0] * a + block[0][1] * b;
            self[(r + 1, c)] = block[1][0] * a + block[1][1] * b;
        }
    }

    pub(crate) fn scale_column(&mut self, c: usize, factor: Complex64) {
        for r in 0..self.rows {
            self[(r, c)] *= factor;
        }
    }

    pub(crate) fn scale_row(&mut self, r: usize, factor: Complex64) {
        let cols = self.cols;
        for z in &mut self.data[r * cols..(r + 1) * cols] {
            *z *= factor;
        }
    }
}

impl Index<(usize, usize)> for ComplexMat {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for ComplexMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(r) {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Right-multiplies `v` by `block` embedded at columns `(y, y+1)`, 1-based `y`.
pub fn apply_pair_right(v: &ComplexMat, block: &Block2, y: usize) -> Result<ComplexMat, NumericError> {
    check_pair(y, v.cols())?;
    check_block(block)?;
    let mut out = v.clone();
    out.mix_columns(block, y - 1);
    Ok(out)
}

/// Left-multiplies `v` by `block` embedded at rows `(x, x+1)`, 1-based `x`.
pub fn apply_pair_left(v: &ComplexMat, block: &Block2, x: usize) -> Result<ComplexMat, NumericError> {
    check_pair(x, v.rows())?;
    check_block(block)?;
    let mut out = v.clone();
    out.mix_rows(block, x - 1);
    Ok(out)
}

fn check_pair(index: usize, dim: usize) -> Result<(), NumericError> {
    if index == 0 || index + 1 > dim {
        return Err(NumericError::IndexOutOfRange {
            index,
            max: dim.saturating_sub(1),
        });
    }
    Ok(())
}

fn check_block(block: &Block2) -> Result<(), NumericError> {
    for (r, row) in block.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(NumericError::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Embeds a 2×2 block into an `m×m` identity at modes `(top, top+1)`, 1-based.
pub fn embed_pair(block: &Block2, top: usize, m: usize) -> Result<ComplexMat, NumericError> {
    if m < 2 {
        return Err(NumericError::InvalidDimension(m));
    }
    apply_pair_left(&ComplexMat::identity(m), block, top)
}

/// A square matrix certified unitary to `certified_tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    mat: ComplexMat,
    certified_tol: f64,
}

impl UnitaryMatrix {
    /// Certifies `mat` at the default tolerance [`UNITARITY_TOL`].
    pub fn new(mat: ComplexMat) -> Result<Self, NumericError> {
        Self::with_tolerance(mat, UNITARITY_TOL)
    }

    /// Certifies `mat` at a caller-chosen tolerance. The stored certificate is
    /// the measured deviation, not `tol`.
    pub fn with_tolerance(mat: ComplexMat, tol: f64) -> Result<Self, NumericError> {
        if !mat.is_square() {
            return Err(NumericError::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let deviation = mat.unitarity_deviation();
        if !(deviation <= tol) {
            return Err(NumericError::NotUnitary { deviation, tol });
        }
        Ok(Self {
            mat,
            certified_tol: deviation,
        })
    }

    pub fn identity(m: usize) -> Result<Self, NumericError> {
        if m == 0 {
            return Err(NumericError::InvalidDimension(0));
        }
        Ok(Self {
            mat: ComplexMat::identity(m),
            certified_tol: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMat {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMat {
        self.mat
    }

    pub fn certified_tol(&self) -> f64 {
        self.certified_tol
    }

    /// Multiplies by a unit-modulus scalar; the certificate carries over.
    pub fn with_global_phase(&self, gamma: f64) -> UnitaryMatrix {
        UnitaryMatrix {
            mat: self.mat.scale(Complex64::from_polar(1.0, gamma)),
            certified_tol: self.certified_tol,
        }
    }
}

/// Samples a Haar-distributed `m×m` unitary, deterministic in `(m, seed)`.
///
/// Orthonormalizes the columns of a complex Ginibre matrix with a
/// reorthogonalized Gram-Schmidt pass; normalizing each column to a positive
/// projection is the same as fixing the triangular factor's diagonal phases,
/// which is what makes the output Haar rather than merely unitary.
pub fn haar_random_unitary(m: usize, seed: u64) -> Result<UnitaryMatrix, NumericError> {
    if m == 0 {
        return Err(NumericError::InvalidDimension(0));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<Complex64>> = (0..m)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();

    for j in 0..m {
        // two passes of classical Gram-Schmidt keep orthogonality at machine precision
        for _ in 0..2 {
            for i in 0..j {
                let proj: Complex64 = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(q, v)| q.conj() * v)
                    .sum();
                let (done, rest) = cols.split_at_mut(j);
                for (v, q) in rest[0].iter_mut().zip(&done[i]) {
                    *v -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }

    let mut mat = ComplexMat::zeros(m, m);
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            mat[(r, c)] = z;
        }
    }
    UnitaryMatrix::with_tolerance(mat, 1e-12)
}

/// Principal argument in (−π, π], with `arg0(0) = 0`.
pub fn arg0(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        return 0.0;
    }
    wrap_phase(z.im.atan2(z.re))
}

/// Wraps an angle into (−π, π]. Values already in range are returned untouched.
pub fn wrap_phase(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Signed difference `a - b` reduced to (−π, π].
pub fn phase_difference(a: f64, b: f64) -> f64 {
    wrap_phase(a - b)
}

/// `min_γ max_ij |a_ij − e^{iγ} b_ij|` for two unitaries of equal size.
pub fn global_phase_distance(a: &UnitaryMatrix, b: &UnitaryMatrix) -> Result<f64, NumericError> {
    phase_distance(a.matrix(), b.matrix())
}

const GAMMA_GRID: usize = 720;
const REFINE_CANDIDATES: usize = 4;

/// Phase-insensitive max-entry distance between two equally shaped matrices.
///
/// The objective is a maximum of `m²` sinusoid-like terms in γ, so it can have
/// several local minima: the trace-optimal angle and a uniform grid seed a few
/// golden-section refinements and the best result is kept.
pub fn phase_distance(a: &ComplexMat, b: &ComplexMat) -> Result<f64, NumericError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(NumericError::ShapeMismatch {
            lhs_rows: a.rows(),
            lhs_cols: a.cols(),
            rhs_rows: b.rows(),
            rhs_cols: b.cols(),
        });
    }
    let objective = |gamma: f64| -> f64 {
        let rot = Complex64::from_polar(1.0, gamma);
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (x - rot * y).norm())
            .fold(0.0, f64::max)
    };

    let overlap: Complex64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| y.conj() * x)
        .sum();
    let step = 2.0 * PI / GAMMA_GRID as f64;
    let mut seeds: Vec<(f64, f64)> = (0..GAMMA_GRID)
        .map(|k| {
            let g = -PI + step * k as f64;
            (objective(g), g)
        })
        .collect();
    seeds.sort_by(|l, r| l.0.total_cmp(&r.0));
    seeds.truncate(REFINE_CANDIDATES);
    let trace_angle = arg0(overlap);
    seeds.push((objective(trace_angle), trace_angle));

    let best = seeds
        .iter()
        .map(|&(_, g)| golden_min(&objective, g - step, g + step))
        .chain(seeds.iter().map(|&(f, _)| f))
        .fold(objective(0.0), f64::min);
    Ok(best.min(2.0))
}

fn golden_min(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..90 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    f1.min(f2).min(f(0.5 * (lo + hi)))
}
