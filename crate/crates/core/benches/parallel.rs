use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use photomesh::alternating::{balanced_angles, AlternatingCircuit, PhaseForm};
use photomesh::clements::{decompose_clements_smzi, reconstruct_clements};
use photomesh::optimize::{optimize_phases, OptimizeOptions};
use photomesh::par::map_indexed;
use photomesh::sweep::{run_sweep, SweepConfig, SweepScheme};
use photomesh::{haar_random_unitary, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn restarts(c: &mut Criterion) {
    let skeleton = AlternatingCircuit::zeros(4, 8, PhaseForm::Full, balanced_angles(4, 8)).unwrap();
    let target = haar_random_unitary(4, 1).unwrap();
    let mut group = c.benchmark_group("optimize_restarts");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = OptimizeOptions {
            restarts: 8,
            max_iters: 300,
            tol: 0.0,
            execution,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| optimize_phases(black_box(&target), &skeleton, &opts, false).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, execution) in MODES {
        let mut cfg = SweepConfig::new(4, vec![0.05], 8, vec![SweepScheme::ClementsSmzi, SweepScheme::Fldzhyan], 3);
        cfg.optimize.restarts = 2;
        cfg.optimize.max_iters = 200;
        cfg.execution = execution;
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_sweep(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

fn batch_round_trip(c: &mut Criterion) {
    let targets: Vec<_> = (0..64).map(|s| haar_random_unitary(10, s).unwrap()).collect();
    let mut group = c.benchmark_group("clements_round_trip_x64");
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                map_indexed(targets.len(), execution, |i| {
                    reconstruct_clements(&decompose_clements_smzi(&targets[i]).unwrap()).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, restarts, sweep, batch_round_trip);
criterion_main!(benches);
