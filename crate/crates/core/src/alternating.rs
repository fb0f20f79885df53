//! Alternating splitter/phase-layer circuits.
//!
//! Splitter layer `ℓ` (1-based) couples modes `(1,2), (3,4), …` when `ℓ` is
//! odd and `(2,3), (4,5), …` when it is even, like the columns of a
//! rectangular mesh. Each splitter is `[[cos α, i sin α], [i sin α, cos α]]`,
//! balanced at `α = π/4`.
//!
//! In the full form a phase layer sits before, between and after the splitter
//! layers: slots `0..=depth`, so `U = P_depth S_depth ⋯ S_1 P_0`. The compact
//! form keeps only the even slots plus the final one; every odd-slot phase can
//! be pushed into its neighbours because equal phases on both ports of a
//! splitter commute through it whatever its angle.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{wrap_phase, Block2, ComplexMat, NumericError, UnitaryMatrix};

pub const BALANCED: f64 = FRAC_PI_4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlternatingError {
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("expected a {expected:?} circuit")]
    WrongForm { expected: PhaseForm },
    #[error("sigma must be finite and non-negative, got {0}")]
    BadSigma(f64),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PhaseForm {
    Full,
    Compact,
}

/// 0-based top modes of the splitters in layer `layer` (1-based).
pub fn splitter_tops(m: usize, layer: usize) -> impl Iterator<Item = usize> {
    let first = if layer % 2 == 1 { 0 } else { 1 };
    (first..m.saturating_sub(1)).step_by(2)
}

pub fn splitter_block(alpha: f64) -> Block2 {
    let (s, c) = alpha.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::new(0.0, s)],
        [Complex64::new(0.0, s), Complex64::new(c, 0.0)],
    ]
}

/// Full-form slot index of every phase layer kept by `form`.
pub fn phase_slots(form: PhaseForm, depth: usize) -> Vec<usize> {
    match form {
        PhaseForm::Full => (0..=depth).collect(),
        PhaseForm::Compact => {
            let mut slots: Vec<usize> = (0..=depth).step_by(2).collect();
            if depth % 2 == 1 {
                slots.push(depth);
            }
            slots
        }
    }
}

/// Balanced splitter angles for every layer.
pub fn balanced_angles(m: usize, depth: usize) -> Vec<Vec<f64>> {
    (1..=depth)
        .map(|layer| vec![BALANCED; splitter_tops(m, layer).count()])
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAlternating")]
pub struct AlternatingCircuit {
    m: usize,
    depth: usize,
    form: PhaseForm,
    splitter_angles: Vec<Vec<f64>>,
    phase_layers: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawAlternating {
    m: usize,
    depth: usize,
    form: PhaseForm,
    splitter_angles: Vec<Vec<f64>>,
    phase_layers: Vec<Vec<f64>>,
}

impl TryFrom<RawAlternating> for AlternatingCircuit {
    type Error = AlternatingError;

    fn try_from(raw: RawAlternating) -> Result<Self, AlternatingError> {
        AlternatingCircuit::new(raw.m, raw.depth, raw.form, raw.splitter_angles, raw.phase_layers)
    }
}

impl AlternatingCircuit {
    pub fn new(
        m: usize,
        depth: usize,
        form: PhaseForm,
        splitter_angles: Vec<Vec<f64>>,
        phase_layers: Vec<Vec<f64>>,
    ) -> Result<Self, AlternatingError> {
        if m == 0 {
            return Err(AlternatingError::Layout("m must be at least 1".into()));
        }
        if splitter_angles.len() != depth {
            return Err(AlternatingError::Layout(format!(
                "{} splitter layers for depth {depth}",
                splitter_angles.len()
            )));
        }
        for (i, layer) in splitter_angles.iter().enumerate() {
            let want = splitter_tops(m, i + 1).count();
            if layer.len() != want {
                return Err(AlternatingError::Layout(format!(
                    "splitter layer {} has {} angles, expected {want}",
                    i + 1,
                    layer.len()
                )));
            }
            if layer.iter().any(|a| !a.is_finite()) {
                return Err(AlternatingError::Layout(format!("splitter layer {} is not finite", i + 1)));
            }
        }
        let n_layers = phase_slots(form, depth).len();
        if phase_layers.len() != n_layers {
            return Err(AlternatingError::Layout(format!(
                "{} phase layers, expected {n_layers}",
                phase_layers.len()
            )));
        }
        for (i, layer) in phase_layers.iter().enumerate() {
            if layer.len() != m {
                return Err(AlternatingError::Layout(format!(
                    "phase layer {i} has {} entries, expected {m}",
                    layer.len()
                )));
            }
            if layer.iter().any(|p| !p.is_finite()) {
                return Err(AlternatingError::Layout(format!("phase layer {i} is not finite")));
            }
        }
        Ok(Self {
            m,
            depth,
            form,
            splitter_angles,
            phase_layers,
        })
    }

    /// All phases zero.
    pub fn zeros(m: usize, depth: usize, form: PhaseForm, splitter_angles: Vec<Vec<f64>>) -> Result<Self, AlternatingError> {
        let n = phase_slots(form, depth).len();
        Self::new(m, depth, form, splitter_angles, vec![vec![0.0; m]; n])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn form(&self) -> PhaseForm {
        self.form
    }

    pub fn splitter_angles(&self) -> &[Vec<f64>] {
        &self.splitter_angles
    }

    pub fn phase_layers(&self) -> &[Vec<f64>] {
        &self.phase_layers
    }

    pub fn phase_count(&self) -> usize {
        self.phase_layers.len() * self.m
    }

    /// Phases flattened layer by layer.
    pub fn phase_vector(&self) -> Vec<f64> {
        self.phase_layers.iter().flatten().copied().collect()
    }

    /// Same layout with new phases, flattened as in [`Self::phase_vector`].
    pub fn with_phase_vector(&self, phases: &[f64]) -> Result<Self, AlternatingError> {
        if phases.len() != self.phase_count() {
            return Err(AlternatingError::Layout(format!(
                "{} phases for a layout with {}",
                phases.len(),
                self.phase_count()
            )));
        }
        let layers = phases.chunks(self.m).map(|c| c.iter().map(|&p| wrap_phase(p)).collect()).collect();
        Self::new(self.m, self.depth, self.form, self.splitter_angles.clone(), layers)
    }

    pub(crate) fn transfer_matrix(&self) -> ComplexMat {
        let slots = phase_slots(self.form, self.depth);
        let mut acc = ComplexMat::identity(self.m);
        let mut layers = slots.iter().zip(&self.phase_layers).peekable();
        for slot in 0..=self.depth {
            if slot > 0 {
                for (top, &alpha) in splitter_tops(self.m, slot).zip(&self.splitter_angles[slot - 1]) {
                    acc.mix_rows(&splitter_block(alpha), top);
                }
            }
            if let Some((_, phases)) = layers.next_if(|(&s, _)| s == slot) {
                for (r, &phi) in phases.iter().enumerate() {
                    acc.scale_row(r, Complex64::from_polar(1.0, phi));
                }
            }
        }
        acc
    }

    pub fn evaluate(&self) -> Result<UnitaryMatrix, AlternatingError> {
        Ok(UnitaryMatrix::with_tolerance(self.transfer_matrix(), 1e-11)?)
    }
}

pub fn evaluate_alternating(c: &AlternatingCircuit) -> Result<UnitaryMatrix, AlternatingError> {
    c.evaluate()
}

/// Moves every odd-slot phase layer into the even slots around it.
pub fn compactify(c: &AlternatingCircuit) -> Result<AlternatingCircuit, AlternatingError> {
    if c.form != PhaseForm::Full {
        return Err(AlternatingError::WrongForm {
            expected: PhaseForm::Full,
        });
    }
    let (m, depth) = (c.m, c.depth);
    let mut slots = c.phase_layers.clone();
    for s in (1..depth).step_by(2) {
        for t in 0..m {
            let phi = std::mem::replace(&mut slots[s][t], 0.0);
            if phi != 0.0 {
                push_out(&mut slots, m, s, t, phi);
            }
        }
    }
    let kept = phase_slots(PhaseForm::Compact, depth)
        .into_iter()
        .map(|s| slots[s].iter().map(|&p| wrap_phase(p)).collect())
        .collect();
    AlternatingCircuit::new(m, depth, PhaseForm::Compact, c.splitter_angles.clone(), kept)
}

/// Pushes phase `phi` on mode `t` out of slot `s`, alternating between
/// splitter layer `s` (on its left) and `s+1` (on its right).
fn push_out(slots: &mut [Vec<f64>], m: usize, s: usize, mut t: usize, mut phi: f64) {
    let partner = |layer: usize, t: usize| -> Option<usize> {
        splitter_tops(m, layer).find_map(|top| {
            if top == t {
                Some(t + 1)
            } else if top + 1 == t {
                Some(top)
            } else {
                None
            }
        })
    };
    let mut left = true;
    loop {
        let (layer, neighbor) = if left { (s, s - 1) } else { (s + 1, s + 1) };
        match partner(layer, t) {
            Some(p) => {
                slots[neighbor][t] += phi;
                slots[neighbor][p] += phi;
                t = p;
                phi = -phi;
                left = !left;
            }
            None => {
                slots[neighbor][t] += phi;
                return;
            }
        }
    }
}

/// Inverse of [`compactify`]: reinserts the dropped slots as zero layers.
pub fn expand_compact(c: &AlternatingCircuit) -> Result<AlternatingCircuit, AlternatingError> {
    if c.form != PhaseForm::Compact {
        return Err(AlternatingError::WrongForm {
            expected: PhaseForm::Compact,
        });
    }
    let kept = phase_slots(PhaseForm::Compact, c.depth);
    let mut layers = vec![vec![0.0; c.m]; c.depth + 1];
    for (&s, phases) in kept.iter().zip(&c.phase_layers) {
        layers[s] = phases.clone();
    }
    AlternatingCircuit::new(c.m, c.depth, PhaseForm::Full, c.splitter_angles.clone(), layers)
}

/// `1 − |tr(T†·C)|²/m²`.
pub fn infidelity(c: &AlternatingCircuit, target: &UnitaryMatrix) -> Result<f64, AlternatingError> {
    Ok(matrix_infidelity(&c.transfer_matrix(), target.matrix())?)
}

/// [`infidelity`] for two plain matrices of the same size.
pub fn matrix_infidelity(c: &ComplexMat, target: &ComplexMat) -> Result<f64, NumericError> {
    if c.rows() != target.rows() || c.cols() != target.cols() {
        return Err(NumericError::ShapeMismatch {
            lhs_rows: target.rows(),
            lhs_cols: target.cols(),
            rhs_rows: c.rows(),
            rhs_cols: c.cols(),
        });
    }
    let m = c.rows() as f64;
    let overlap: Complex64 = target.as_slice().iter().zip(c.as_slice()).map(|(t, u)| t.conj() * u).sum();
    Ok((1.0 - overlap.norm_sqr() / (m * m)).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImbalanceDistribution {
    #[default]
    Gaussian,
    /// Uniform on `[−√3σ, √3σ]`, which has standard deviation σ.
    Uniform,
}

/// Random deviation of splitter angles from π/4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceModel {
    pub sigma: f64,
    pub seed: u64,
    pub distribution: ImbalanceDistribution,
}

impl ImbalanceModel {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            sigma,
            seed,
            distribution: ImbalanceDistribution::Gaussian,
        }
    }

    /// `n` angles, deterministic in the model.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>, AlternatingError> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(AlternatingError::BadSigma(self.sigma));
        }
        if self.sigma == 0.0 {
            return Ok(vec![BALANCED; n]);
        }
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let angles = match self.distribution {
            ImbalanceDistribution::Gaussian => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    BALANCED + self.sigma * z
                })
                .collect(),
            ImbalanceDistribution::Uniform => {
                let half = 3f64.sqrt() * self.sigma;
                let dist = Uniform::new_inclusive(-half, half).expect("finite positive width");
                (0..n).map(|_| BALANCED + dist.sample(&mut rng)).collect()
            }
        };
        Ok(angles)
    }

    /// Splitter angles for every layer of an `m`-mode, `depth`-layer circuit.
    pub fn sample_layers(&self, m: usize, depth: usize) -> Result<Vec<Vec<f64>>, AlternatingError> {
        let shape = balanced_angles(m, depth);
        let flat = self.sample(shape.iter().map(Vec::len).sum())?;
        let mut it = flat.into_iter();
        Ok(shape
            .iter()
            .map(|layer| it.by_ref().take(layer.len()).collect())
            .collect())
    }
}

pub fn sample_imbalance(model: &ImbalanceModel, m: usize, depth: usize) -> Result<Vec<Vec<f64>>, AlternatingError> {
    model.sample_layers(m, depth)
}
