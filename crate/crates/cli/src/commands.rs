use std::fs;
use std::io::Write;
use std::path::Path;

use photomesh::alternating::{AlternatingCircuit, ImbalanceDistribution, ImbalanceModel, PhaseForm};
use photomesh::clements::{decompose_clements_amzi, decompose_clements_smzi, reconstruct_clements};
use photomesh::optimize::{optimize_phases, OptimizeOptions};
use photomesh::reck::decompose_reck;
use photomesh::relocation::{absorb_amzi_externals, relocate_all};
use photomesh::sweep::{run_sweep, SweepConfig, SweepError};
use photomesh::{global_phase_distance, haar_random_unitary, DecompositionError, Execution, UnitaryMatrix};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::formats::{AmziTable, EdgeTable, MatrixFile, OptimizeReport, PhaseTableFile, SmziTable};
use crate::{CliError, DecomposeArgs, HaarArgs, IoArgs, OptimizeArgs, OptimizerFlags, Scheme, SweepArgs};

/// Unitarity accepted from files: text round trips lose a few ulps per entry.
const FILE_UNITARITY_TOL: f64 = 1e-8;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes the whole file next to its destination, then renames it into place,
/// so a failed run never leaves a partial output behind.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let output = |e: &dyn std::fmt::Display| CliError::Output(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| output(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| output(&e))?;
    tmp.as_file().sync_all().map_err(|e| output(&e))?;
    tmp.persist(path).map_err(|e| output(&e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    write_atomic(path, &text)
}

fn read_unitary(path: &Path) -> Result<UnitaryMatrix, CliError> {
    let mat = read_json::<MatrixFile>(path)?.to_matrix()?;
    UnitaryMatrix::with_tolerance(mat, FILE_UNITARITY_TOL).map_err(|e| match e {
        photomesh::NumericError::NotUnitary { .. } => CliError::NotUnitary(format!("{}: {e}", path.display())),
        other => CliError::Input(format!("{}: {other}", path.display())),
    })
}

fn decomposition_error(e: DecompositionError) -> CliError {
    match e {
        DecompositionError::NotUnitary { .. } => CliError::NotUnitary(e.to_string()),
        DecompositionError::InvalidTable(_) => CliError::Input(e.to_string()),
        _ => CliError::Numerical(e.to_string()),
    }
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

fn distance(a: &UnitaryMatrix, b: &UnitaryMatrix) -> Result<f64, CliError> {
    global_phase_distance(a, b).map_err(numerical)
}

pub fn decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    let u = read_unitary(&args.io.input)?;
    let table = match args.scheme {
        Scheme::ReckSmzi => PhaseTableFile::ReckSmzi(SmziTable::from_reck(&decompose_reck(&u).map_err(decomposition_error)?)),
        Scheme::ClementsSmzi => PhaseTableFile::ClementsSmzi(SmziTable::from_clements(
            &decompose_clements_smzi(&u).map_err(decomposition_error)?,
        )),
        Scheme::ClementsAmzi => PhaseTableFile::ClementsAmzi(AmziTable::from_decomposition(
            &decompose_clements_amzi(&u).map_err(decomposition_error)?,
        )),
        Scheme::ClementsEdge => {
            let d = decompose_clements_smzi(&u).map_err(decomposition_error)?;
            PhaseTableFile::ClementsEdge(EdgeTable::from_mesh(&relocate_all(&d).map_err(numerical)?))
        }
    };
    let residual = distance(&table.evaluate()?, &u)?;
    write_json(&args.io.out, &table)?;
    println!("residual {residual}");
    Ok(())
}

pub fn reconstruct(args: &IoArgs) -> Result<(), CliError> {
    let table: PhaseTableFile = read_json(&args.input)?;
    let u = table.evaluate()?;
    write_json(&args.out, &MatrixFile::from_matrix(u.matrix()))
}

pub fn relocate(args: &IoArgs) -> Result<(), CliError> {
    let table: PhaseTableFile = read_json(&args.input)?;
    let (mesh, reference) = match &table {
        PhaseTableFile::ClementsSmzi(t) => {
            let d = t.to_clements()?;
            (relocate_all(&d).map_err(numerical)?, reconstruct_clements(&d).map_err(decomposition_error)?)
        }
        PhaseTableFile::ClementsAmzi(t) => {
            let d = t.to_decomposition()?;
            (absorb_amzi_externals(&d).map_err(numerical)?, table.evaluate()?)
        }
        other => {
            return Err(CliError::Input(format!(
                "relocate expects a clements-smzi or clements-amzi table, got {}",
                other.scheme()
            )))
        }
    };
    let relocated = PhaseTableFile::ClementsEdge(EdgeTable::from_mesh(&mesh));
    let discrepancy = relocated
        .evaluate()?
        .matrix()
        .max_abs_diff(reference.matrix())
        .ok_or_else(|| numerical("shape mismatch"))?;
    let discrepancy = if matches!(table, PhaseTableFile::ClementsAmzi(_)) {
        // the aMZI route is only defined up to a global phase
        distance(&relocated.evaluate()?, &reference)?
    } else {
        discrepancy
    };
    write_json(&args.out, &relocated)?;
    println!("discrepancy {discrepancy}");
    Ok(())
}

pub fn haar(args: &HaarArgs) -> Result<(), CliError> {
    if args.m == 0 {
        return Err(CliError::Input("--m must be at least 1".into()));
    }
    let u = haar_random_unitary(args.m, args.seed).map_err(numerical)?;
    write_json(&args.out, &MatrixFile::from_matrix(u.matrix()))
}

fn optimizer_options(flags: &OptimizerFlags, seed: u64) -> Result<OptimizeOptions, CliError> {
    if flags.restarts == 0 {
        return Err(CliError::Input("--restarts must be at least 1".into()));
    }
    if !(flags.tol >= 0.0) {
        return Err(CliError::Input("--tol must be non-negative".into()));
    }
    Ok(OptimizeOptions {
        max_iters: flags.max_iters,
        tol: flags.tol,
        restarts: flags.restarts,
        seed,
        record_history: false,
        execution: if flags.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    })
}

pub fn optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    if args.depth == 0 {
        return Err(CliError::Input("--depth must be at least 1".into()));
    }
    if !(args.sigma >= 0.0) || !args.sigma.is_finite() {
        return Err(CliError::Input("--sigma must be finite and non-negative".into()));
    }
    let opts = optimizer_options(&args.optimizer, args.seed)?;
    let target = read_unitary(&args.input)?;
    let m = target.dim();
    if let Some(expected) = args.m {
        if expected != m {
            return Err(CliError::Input(format!("--m {expected} but the target is {m}x{m}")));
        }
    }
    let angles = ImbalanceModel::gaussian(args.sigma, args.seed)
        .sample_layers(m, args.depth)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let skeleton = AlternatingCircuit::zeros(m, args.depth, PhaseForm::Full, angles).map_err(|e| CliError::Input(e.to_string()))?;
    let (circuit, result) = optimize_phases(&target, &skeleton, &opts, false).map_err(|e| CliError::Input(e.to_string()))?;
    let report = OptimizeReport::new(args.sigma, args.seed, &circuit, &result);
    write_json(&args.out, &report)?;
    println!("infidelity {}", result.achieved_infidelity);
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = SweepConfig::new(args.m, args.sigma.clone(), args.trials, args.scheme.clone(), args.seed);
    cfg.optimize = optimizer_options(&args.optimizer, args.seed)?;
    cfg.execution = cfg.optimize.execution;
    if args.uniform {
        cfg.distribution = ImbalanceDistribution::Uniform;
    }
    let report = run_sweep(&cfg).map_err(|e| match e {
        SweepError::Config(_) => CliError::Input(e.to_string()),
        SweepError::Trial { .. } => CliError::Numerical(e.to_string()),
    })?;
    write_atomic(&args.out, &report.to_csv())?;
    for a in &report.aggregates {
        println!(
            "{} m={} sigma={} median={:e} p90={:e}",
            a.scheme, a.m, a.sigma, a.median, a.p90
        );
    }
    Ok(())
}
