//! Imbalance-robustness experiment.
//!
//! For each scheme, imbalance level and trial: draw a Haar target and a set of
//! imbalanced splitter angles, reoptimize the scheme's tunable phases, and
//! record the best infidelity reached.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alternating::{AlternatingCircuit, ImbalanceDistribution, ImbalanceModel, PhaseForm};
use crate::clements::decompose_clements_smzi;
use crate::mesh::{clements_column_tops, MeshElement};
use crate::numeric::haar_random_unitary;
use crate::optimize::{optimize_phases, optimize_program, OptimizeError, OptimizeOptions, PhaseProgram};
use crate::par::{map_indexed, Execution};
use crate::relocation::relocate_all;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("trial {trial_seed}: {message}")]
    Trial { trial_seed: u64, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SweepScheme {
    #[serde(rename = "clements-smzi")]
    ClementsSmzi,
    #[serde(rename = "fldzhyan")]
    Fldzhyan,
}

impl SweepScheme {
    pub fn name(self) -> &'static str {
        match self {
            SweepScheme::ClementsSmzi => "clements-smzi",
            SweepScheme::Fldzhyan => "fldzhyan",
        }
    }
}

impl fmt::Display for SweepScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "clements-smzi" => Ok(SweepScheme::ClementsSmzi),
            "fldzhyan" | "fldzhyan-full" => Ok(SweepScheme::Fldzhyan),
            other => Err(format!("unknown sweep scheme {other:?}")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub m: usize,
    pub sigmas: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<SweepScheme>,
    pub seed: u64,
    pub distribution: ImbalanceDistribution,
    /// Restarts, iteration cap and tolerance for every trial. The seed is
    /// replaced by the trial seed.
    pub optimize: OptimizeOptions,
    pub execution: Execution,
}

impl SweepConfig {
    pub fn new(m: usize, sigmas: Vec<f64>, trials: usize, schemes: Vec<SweepScheme>, seed: u64) -> Self {
        Self {
            m,
            sigmas,
            trials,
            schemes,
            seed,
            distribution: ImbalanceDistribution::Gaussian,
            optimize: OptimizeOptions::default(),
            execution: Execution::Parallel,
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.m < 2 {
            return Err(SweepError::Config(format!("m must be at least 2, got {}", self.m)));
        }
        if self.trials == 0 {
            return Err(SweepError::Config("trials must be at least 1".into()));
        }
        if self.sigmas.is_empty() || self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(SweepError::Config("sigma grid must be non-empty, finite and non-negative".into()));
        }
        if self.schemes.is_empty() {
            return Err(SweepError::Config("no schemes selected".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: SweepScheme,
    pub m: usize,
    pub sigma: f64,
    pub trial: usize,
    pub trial_seed: u64,
    pub infidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub scheme: SweepScheme,
    pub m: usize,
    pub sigma: f64,
    pub median: f64,
    pub p90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "scheme,m,sigma,trial_seed,infidelity";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.16e},{},{:.16e}\n",
                r.scheme, r.m, r.sigma, r.trial_seed, r.infidelity
            ));
        }
        out
    }

    pub fn aggregate(&self, scheme: SweepScheme, sigma: f64) -> Option<&SweepAggregate> {
        self.aggregates.iter().find(|a| a.scheme == scheme && a.sigma == sigma)
    }
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ trial as u64
}

/// Seed of the imbalance draw for a trial, kept apart from the target's stream.
fn imbalance_seed(trial_seed: u64) -> u64 {
    trial_seed.wrapping_add(0x5851_F42D_4C95_7F2D)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, SweepError> {
    cfg.validate()?;
    let mut schemes = cfg.schemes.clone();
    schemes.sort();
    schemes.dedup();
    let mut sigmas = cfg.sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();

    let mut jobs = Vec::new();
    for &scheme in &schemes {
        for &sigma in &sigmas {
            for trial in 0..cfg.trials {
                jobs.push((scheme, sigma, trial));
            }
        }
    }
    let results = map_indexed(jobs.len(), cfg.execution, |i| {
        let (scheme, sigma, trial) = jobs[i];
        let seed = trial_seed(cfg.seed, trial);
        run_trial(cfg, scheme, sigma, seed).map(|infidelity| SweepRow {
            scheme,
            m: cfg.m,
            sigma,
            trial,
            trial_seed: seed,
            infidelity,
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let aggregates = schemes
        .iter()
        .flat_map(|&scheme| sigmas.iter().map(move |&sigma| (scheme, sigma)))
        .map(|(scheme, sigma)| {
            let mut values: Vec<f64> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.sigma == sigma)
                .map(|r| r.infidelity)
                .collect();
            values.sort_by(f64::total_cmp);
            SweepAggregate {
                scheme,
                m: cfg.m,
                sigma,
                median: median(&values),
                p90: nearest_rank(&values, 0.9),
            }
        })
        .collect();
    Ok(SweepReport { rows, aggregates })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn run_trial(cfg: &SweepConfig, scheme: SweepScheme, sigma: f64, seed: u64) -> Result<f64, SweepError> {
    let fail = |message: String| SweepError::Trial {
        trial_seed: seed,
        message,
    };
    let m = cfg.m;
    let target = haar_random_unitary(m, seed).map_err(|e| fail(e.to_string()))?;
    let model = ImbalanceModel {
        sigma,
        seed: imbalance_seed(seed),
        distribution: cfg.distribution,
    };
    let opts = OptimizeOptions {
        seed,
        execution: Execution::Sequential,
        ..cfg.optimize
    };
    let result = match scheme {
        SweepScheme::Fldzhyan => {
            let depth = 2 * m;
            let angles = model.sample_layers(m, depth).map_err(|e| fail(e.to_string()))?;
            let skeleton = AlternatingCircuit::zeros(m, depth, PhaseForm::Full, angles).map_err(|e| fail(e.to_string()))?;
            optimize_phases(&target, &skeleton, &opts, false).map(|(_, r)| r)
        }
        SweepScheme::ClementsSmzi => {
            let angles = model.sample(m * (m - 1)).map_err(|e| fail(e.to_string()))?;
            let (program, warm) = clements_program(&target, &angles).map_err(|e| fail(e.to_string()))?;
            optimize_program(&program, &target, &opts, Some(&warm))
        }
    };
    result.map(|r| r.achieved_infidelity).map_err(|e| fail(e.to_string()))
}

/// Rectangular sMZI mesh with every MZI built from two splitters of the given
/// angles (two per MZI, column by column, top to bottom). Parameters are the
/// input phases, the internal and edge phases of each column, and the output
/// phases. The second value is the ideal-mesh solution for `target`, exact
/// when all angles are π/4.
pub fn clements_program(
    target: &crate::numeric::UnitaryMatrix,
    angles: &[f64],
) -> Result<(PhaseProgram, Vec<f64>), OptimizeError> {
    let m = target.dim();
    if angles.len() != m * (m - 1) {
        return Err(OptimizeError::InvalidProgram(format!(
            "{} splitter angles for {} MZIs",
            angles.len(),
            m * (m - 1) / 2
        )));
    }
    let mesh = decompose_clements_smzi(target)
        .map_err(|e| OptimizeError::InvalidProgram(e.to_string()))
        .and_then(|d| relocate_all(&d).map_err(|e| OptimizeError::InvalidProgram(e.to_string())))?;
    let phase_of = |column: usize, mode: usize| -> f64 {
        match mesh.element_at(column, mode) {
            Some(MeshElement::Phase(p)) => p.phi,
            _ => 0.0,
        }
    };

    let mut program = PhaseProgram::new(m);
    let mut warm = Vec::new();
    program.push_phases(0..m)?;
    warm.extend((1..=m).map(|mode| phase_of(0, mode)));
    let mut angle = angles.iter().copied();
    for c in 1..=m {
        let tops: Vec<usize> = clements_column_tops(m, c).collect();
        let first: Vec<(usize, f64)> = tops.iter().map(|&t| (t - 1, angle.next().expect("length checked"))).collect();
        let second: Vec<(usize, f64)> = tops.iter().map(|&t| (t - 1, angle.next().expect("length checked"))).collect();
        program.push_splitters(first)?;
        program.push_phases(0..m)?;
        for mode in 1..=m {
            // a balanced splitter pair around phases θ − π/2 is exactly the sMZI block
            let phi = match mesh.element_at(c, mode) {
                Some(MeshElement::Smzi { top_mode, setting }) => {
                    let theta = if *top_mode == mode { setting.theta1 } else { setting.theta2 };
                    theta - std::f64::consts::FRAC_PI_2
                }
                Some(MeshElement::Phase(p)) => p.phi,
                _ => 0.0,
            };
            warm.push(phi);
        }
        program.push_splitters(second)?;
    }
    program.push_phases(0..m)?;
    warm.extend((1..=m).map(|mode| phase_of(m + 1, mode)));
    Ok((program, warm))
}
