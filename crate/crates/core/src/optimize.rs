//! Numerical phase programming.
//!
//! A [`PhaseProgram`] is a fixed sequence of splitter layers and tunable phase
//! layers. [`optimize_program`] minimizes `1 − |tr(T†U)|²/m²` over the phases
//! with L-BFGS and an analytic gradient, from several starting points.
//!
//! For a phase `φ` on mode `t` with `U = A·P(φ)·B`,
//! `∂ tr(T†U)/∂φ = i e^{iφ} (B·T†·A)_{tt}`, so one forward sweep storing the
//! prefixes `B` and one backward sweep accumulating `T†·A` give every
//! derivative at the cost of about two evaluations.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alternating::{splitter_block, splitter_tops, AlternatingCircuit, AlternatingError};
use crate::numeric::{wrap_phase, ComplexMat, UnitaryMatrix};
use crate::par::{map_indexed, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("target is {target}x{target}, program has {m} modes")]
    DimensionMismatch { target: usize, m: usize },
    #[error("initial guess has {got} phases, program has {want}")]
    BadInitialGuess { got: usize, want: usize },
    #[error(transparent)]
    Alternating(#[from] AlternatingError),
}

#[derive(Clone, Debug, PartialEq)]
enum Layer {
    /// `(top mode, 0-based; splitter angle)`
    Splitters(Vec<(usize, f64)>),
    /// Parameter index per mode, `None` for a fixed zero phase.
    Phases(Vec<Option<usize>>),
}

/// Splitter and phase layers, first layer acting first.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseProgram {
    m: usize,
    layers: Vec<Layer>,
    n_params: usize,
}

impl PhaseProgram {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            layers: Vec::new(),
            n_params: 0,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn param_count(&self) -> usize {
        self.n_params
    }

    /// Appends splitters given as `(top mode, 0-based; angle)`.
    pub fn push_splitters(&mut self, splitters: Vec<(usize, f64)>) -> Result<(), OptimizeError> {
        let mut used = vec![false; self.m];
        for &(top, alpha) in &splitters {
            if top + 1 >= self.m || used[top] || used[top + 1] || !alpha.is_finite() {
                return Err(OptimizeError::InvalidProgram(format!("bad splitter at mode {top}")));
            }
            used[top] = true;
            used[top + 1] = true;
        }
        self.layers.push(Layer::Splitters(splitters));
        Ok(())
    }

    /// Appends a phase layer with a fresh parameter on each mode in `modes`
    /// (0-based) and returns the first new parameter index.
    pub fn push_phases(&mut self, modes: impl IntoIterator<Item = usize>) -> Result<usize, OptimizeError> {
        let first = self.n_params;
        let mut slots = vec![None; self.m];
        for mode in modes {
            if mode >= self.m || slots[mode].is_some() {
                return Err(OptimizeError::InvalidProgram(format!("bad phase mode {mode}")));
            }
            slots[mode] = Some(self.n_params);
            self.n_params += 1;
        }
        self.layers.push(Layer::Phases(slots));
        Ok(first)
    }

    /// Program for an alternating circuit; parameters follow
    /// [`AlternatingCircuit::phase_vector`].
    pub fn from_alternating(c: &AlternatingCircuit) -> Self {
        let m = c.m();
        let slots = crate::alternating::phase_slots(c.form(), c.depth());
        let mut p = PhaseProgram::new(m);
        let mut next = slots.iter().peekable();
        for slot in 0..=c.depth() {
            if slot > 0 {
                let splitters = splitter_tops(m, slot).zip(c.splitter_angles()[slot - 1].iter().copied()).collect();
                p.push_splitters(splitters).expect("alternating layout is valid");
            }
            if next.next_if(|&&s| s == slot).is_some() {
                p.push_phases(0..m).expect("alternating layout is valid");
            }
        }
        p
    }

    pub fn transfer_matrix(&self, params: &[f64]) -> ComplexMat {
        let mut acc = ComplexMat::identity(self.m);
        for layer in &self.layers {
            apply_layer(&mut acc, layer, params);
        }
        acc
    }

    /// Infidelity against `target` and its gradient.
    pub fn infidelity_and_gradient(&self, target_adj: &ComplexMat, params: &[f64]) -> (f64, Vec<f64>) {
        let m = self.m;
        let mut prefixes = Vec::new();
        let mut acc = ComplexMat::identity(m);
        for layer in &self.layers {
            if matches!(layer, Layer::Phases(_)) {
                prefixes.push(acc.clone());
            }
            apply_layer(&mut acc, layer, params);
        }
        let tau = trace_product(target_adj, &acc);
        let mm = (m * m) as f64;
        let f = 1.0 - tau.norm_sqr() / mm;

        let mut grad = vec![0.0; self.n_params];
        let mut back = target_adj.clone();
        for layer in self.layers.iter().rev() {
            match layer {
                Layer::Splitters(s) => {
                    for &(top, alpha) in s {
                        back.mix_columns(&splitter_block(alpha), top);
                    }
                }
                Layer::Phases(slots) => {
                    let before = prefixes.pop().expect("one prefix per phase layer");
                    for (t, slot) in slots.iter().enumerate() {
                        let Some(p) = *slot else { continue };
                        let e = Complex64::from_polar(1.0, params[p]);
                        // (B·T†A)_tt
                        let mut diag = Complex64::new(0.0, 0.0);
                        for k in 0..m {
                            diag += before[(t, k)] * back[(k, t)];
                        }
                        let dtau = Complex64::i() * e * diag;
                        grad[p] += -2.0 * (tau.conj() * dtau).re / mm;
                        back.scale_column(t, e);
                    }
                }
            }
        }
        (f.clamp(0.0, 1.0), grad)
    }
}

fn apply_layer(acc: &mut ComplexMat, layer: &Layer, params: &[f64]) {
    match layer {
        Layer::Splitters(s) => {
            for &(top, alpha) in s {
                acc.mix_rows(&splitter_block(alpha), top);
            }
        }
        Layer::Phases(slots) => {
            for (t, slot) in slots.iter().enumerate() {
                if let Some(p) = *slot {
                    acc.scale_row(t, Complex64::from_polar(1.0, params[p]));
                }
            }
        }
    }
}

fn trace_product(a: &ComplexMat, b: &ComplexMat) -> Complex64 {
    let m = a.rows();
    let mut tau = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for k in 0..m {
            tau += a[(i, k)] * b[(k, i)];
        }
    }
    tau
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Keep the best-so-far infidelity after every iteration of the winning restart.
    pub record_history: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: 1e-10,
            restarts: 10,
            seed: 0,
            record_history: false,
            execution: Execution::Parallel,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub seed: u64,
    pub infidelity: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub phases: Vec<f64>,
    pub achieved_infidelity: f64,
    pub iterations: usize,
    pub best_restart: usize,
    pub restarts: Vec<RestartOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<f64>>,
}

/// Seed of restart `r`; independent of the order restarts run in.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Best of `opts.restarts` L-BFGS runs. Restart 0 starts from `initial` when
/// given; the others from phases uniform in (−π, π].
pub fn optimize_program(
    program: &PhaseProgram,
    target: &UnitaryMatrix,
    opts: &OptimizeOptions,
    initial: Option<&[f64]>,
) -> Result<OptimizeResult, OptimizeError> {
    if target.dim() != program.m() {
        return Err(OptimizeError::DimensionMismatch {
            target: target.dim(),
            m: program.m(),
        });
    }
    if let Some(x0) = initial {
        if x0.len() != program.param_count() {
            return Err(OptimizeError::BadInitialGuess {
                got: x0.len(),
                want: program.param_count(),
            });
        }
    }
    if opts.restarts == 0 || !(opts.tol >= 0.0) {
        return Err(OptimizeError::InvalidProgram("need at least one restart and tol ≥ 0".into()));
    }
    let target_adj = target.matrix().adjoint();
    let runs = map_indexed(opts.restarts, opts.execution, |r| {
        let seed = restart_seed(opts.seed, r);
        let x0 = match (r, initial) {
            (0, Some(x0)) => x0.to_vec(),
            _ => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                (0..program.param_count())
                    .map(|_| PI - rng.random::<f64>() * 2.0 * PI)
                    .collect()
            }
        };
        (seed, lbfgs(program, &target_adj, x0, opts))
    });
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.f.total_cmp(&b.1 .1.f))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let restarts = runs
        .iter()
        .map(|(seed, run)| RestartOutcome {
            seed: *seed,
            infidelity: run.f,
            iterations: run.iterations,
        })
        .collect();
    let (_, winner) = runs.into_iter().nth(best).expect("index in range");
    Ok(OptimizeResult {
        phases: winner.x.iter().map(|&p| wrap_phase(p)).collect(),
        achieved_infidelity: winner.f,
        iterations: winner.iterations,
        best_restart: best,
        restarts,
        history: winner.history,
    })
}

/// Optimizes the phases of `skeleton` toward `target`. With `warm_start`,
/// restart 0 begins at the skeleton's current phases.
pub fn optimize_phases(
    target: &UnitaryMatrix,
    skeleton: &AlternatingCircuit,
    opts: &OptimizeOptions,
    warm_start: bool,
) -> Result<(AlternatingCircuit, OptimizeResult), OptimizeError> {
    if skeleton.depth() == 0 {
        return Err(OptimizeError::InvalidProgram("depth must be at least 1".into()));
    }
    let program = PhaseProgram::from_alternating(skeleton);
    let x0 = warm_start.then(|| skeleton.phase_vector());
    let result = optimize_program(&program, target, opts, x0.as_deref())?;
    let circuit = skeleton.with_phase_vector(&result.phases)?;
    Ok((circuit, result))
}

struct Run {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    history: Option<Vec<f64>>,
}

const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;
/// A run stops once `STALL_WINDOW` iterations improve it by less than this
/// fraction; restarts caught in a local minimum otherwise burn the whole
/// iteration budget.
const STALL_RATIO: f64 = 1e-9;
const STALL_WINDOW: usize = 50;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lbfgs(program: &PhaseProgram, target_adj: &ComplexMat, mut x: Vec<f64>, opts: &OptimizeOptions) -> Run {
    let (mut f, mut g) = program.infidelity_and_gradient(target_adj, &x);
    let mut history = opts.record_history.then(|| vec![f]);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut iterations = 0;
    let mut window_start = f;
    while iterations < opts.max_iters && f > opts.tol {
        if iterations > 0 && iterations % STALL_WINDOW == 0 {
            if window_start - f <= STALL_RATIO * f {
                break;
            }
            window_start = f;
        }
        let mut d = two_loop(&g, &pairs);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        if slope == 0.0 {
            break;
        }
        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = program.infidelity_and_gradient(target_adj, &trial);
            if ft <= f + ARMIJO * step * slope {
                break Some((trial, ft, gt));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        iterations += 1;
        let Some((xn, fn_, gn)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if pairs.len() == MEMORY {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        f = fn_;
        g = gn;
        if let Some(h) = &mut history {
            h.push(f);
        }
    }
    Run {
        x,
        f,
        iterations,
        history,
    }
}

fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}
