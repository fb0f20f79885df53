//! Acceptance suite. Prints one line per criterion and fails the run if any
//! hard criterion fails. Criterion 9 is reported but never fails the run.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use photomesh::alternating::{balanced_angles, compactify, expand_compact, AlternatingCircuit, ImbalanceModel, PhaseForm};
use photomesh::clements::{decompose_clements_smzi, reconstruct_clements};
use photomesh::mesh::{clements_edge_layout, smzi_block, MeshCircuit, MeshElement, MeshLayout, SmziSetting};
use photomesh::optimize::{optimize_phases, OptimizeOptions};
use photomesh::reck::{decompose_reck, reconstruct_reck};
use photomesh::relocation::{layer_redundancy_check, relocate_all};
use photomesh::sweep::{run_sweep, SweepConfig, SweepScheme};
use photomesh::{global_phase_distance, haar_random_unitary, Block2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const ROUND_TRIP_TOL: f64 = 1e-9;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(30);
const RELOCATION_TOL: f64 = 1e-10;
const COMMUTATION_TOL: f64 = 1e-15;
const COMMUTATION_PAIRS: usize = 100_000;
const REDUNDANCY_TOL: f64 = 1e-12;
const COMPACT_TOL: f64 = 1e-13;
const PROGRAMMABLE_TOL: f64 = 1e-6;
const PROGRAMMABLE_RATE: f64 = 0.95;
const PROGRAMMABLE_BUDGET: Duration = Duration::from_secs(300);

struct Outcome {
    pass: bool,
    soft: bool,
    detail: String,
}

impl Outcome {
    fn hard(pass: bool, detail: String) -> Self {
        Self { pass, soft: false, detail }
    }
}

fn max_haar_round_trip(decompose_and_back: impl Fn(u64, usize) -> f64) -> (f64, Duration) {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for m in 2..=12 {
        for t in 0..100 {
            worst = worst.max(decompose_and_back(t, m));
        }
    }
    (worst, start.elapsed())
}

fn ac1_reck_round_trip() -> Outcome {
    let (worst, took) = max_haar_round_trip(|t, m| {
        let u = haar_random_unitary(m, 10_000 * m as u64 + t).unwrap();
        let back = reconstruct_reck(&decompose_reck(&u).unwrap()).unwrap();
        global_phase_distance(&back, &u).unwrap()
    });
    Outcome::hard(
        worst < ROUND_TRIP_TOL && took < ROUND_TRIP_BUDGET,
        format!("m=2..12 x100, max distance {worst:.3e} (< {ROUND_TRIP_TOL:e}), {took:.2?} (< 30s)"),
    )
}

fn ac2_clements_round_trip() -> Outcome {
    let (worst, took) = max_haar_round_trip(|t, m| {
        let u = haar_random_unitary(m, 10_000 * m as u64 + t).unwrap();
        let back = reconstruct_clements(&decompose_clements_smzi(&u).unwrap()).unwrap();
        global_phase_distance(&back, &u).unwrap()
    });
    Outcome::hard(
        worst < ROUND_TRIP_TOL && took < ROUND_TRIP_BUDGET,
        format!("m=2..12 x100, max distance {worst:.3e} (< {ROUND_TRIP_TOL:e}), {took:.2?} (< 30s)"),
    )
}

/// Phase elements strictly inside the mesh: not in the input or output phase
/// column and not on the top or bottom waveguide.
fn interior_phases(mesh: &MeshCircuit) -> usize {
    let m = mesh.m();
    let last = mesh.columns().len() - 1;
    mesh.columns()
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != 0 && c != last)
        .flat_map(|(_, col)| col.iter())
        .filter(|el| matches!(el, MeshElement::Phase(p) if p.mode != 1 && p.mode != m))
        .count()
}

fn ac3_relocation() -> Outcome {
    let mut worst = 0.0f64;
    let mut interior = 0;
    let mut wrong_shape = 0;
    for m in 3..=10 {
        for t in 0..50 {
            let u = haar_random_unitary(m, 20_000 * m as u64 + t).unwrap();
            let mesh = relocate_all(&decompose_clements_smzi(&u).unwrap()).unwrap();
            worst = worst.max(global_phase_distance(&mesh.evaluate().unwrap(), &u).unwrap());
            interior += interior_phases(&mesh);
            if mesh.layout() != MeshLayout::ClementsEdge || mesh.columns().len() != m + 2 {
                wrong_shape += 1;
            }
        }
    }
    Outcome::hard(
        worst < RELOCATION_TOL && interior == 0 && wrong_shape == 0,
        format!(
            "m=3..10 x50, max distance {worst:.3e} (< {RELOCATION_TOL:e}), interior phases {interior}, off-layout meshes {wrong_shape}"
        ),
    )
}

fn ac4_parameter_counts(bin: &Bin) -> Outcome {
    let mut failures = Vec::new();
    for m in 2..=12usize {
        let u = bin.path(&format!("u{m}.json"));
        let t = bin.path(&format!("t{m}.json"));
        bin.run(&["haar", "--m", &m.to_string(), "--seed", "4", "--out", &u]);
        bin.run(&["decompose", "--scheme", "reck-smzi", "--in", &u, "--out", &t]);
        let table: Value = serde_json::from_str(&fs::read_to_string(&t).unwrap()).unwrap();
        let len = |k: &str| table[k].as_array().map_or(0, Vec::len);
        let smzi = len("smzi");
        let external = len("phi") + len("zeta");

        // Σ of the last sMZI on each diagonal is fixed, so it is not a free internal phase
        let d = decompose_reck(&haar_random_unitary(m, 4).unwrap()).unwrap();
        let fixed = (1..m).filter(|&j| d.smzi(j, j).sigma() == 0.0).count();
        let internal = 2 * smzi - fixed;
        if smzi != m * (m - 1) / 2 || external != 2 * (m - 1) || internal != (m - 1) * (m - 1) {
            failures.push(format!("m={m}: smzi {smzi}, external {external}, internal {internal}"));
        }
    }
    Outcome::hard(
        failures.is_empty(),
        if failures.is_empty() {
            "m=2..12: m(m-1)/2 sMZIs, 2(m-1) external, (m-1)^2 free internal phases".into()
        } else {
            failures.join("; ")
        },
    )
}

/// Symmetric MZI from its parts: 50:50 coupler, arm phases, 50:50 coupler,
/// with the −i that makes the result real for θ₁ = θ₂ = 0.
fn physical_smzi(theta1: f64, theta2: f64) -> Block2 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = [[Complex64::new(r, 0.0), Complex64::new(0.0, r)], [Complex64::new(0.0, r), Complex64::new(r, 0.0)]];
    let arms = [Complex64::from_polar(1.0, theta1), Complex64::from_polar(1.0, theta2)];
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = -Complex64::i() * (c[i][0] * arms[0] * c[0][j] + c[i][1] * arms[1] * c[1][j]);
        }
    }
    out
}

fn block_diff(a: &Block2, b: &Block2) -> f64 {
    (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - b[i][j]).norm())
        .fold(0.0, f64::max)
}

fn ac5_commutation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut identity, mut model) = (0.0f64, 0.0f64);
    for _ in 0..COMMUTATION_PAIRS {
        let s = SmziSetting::new(rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        let phi = rng.random_range(-PI..PI);
        let e = Complex64::from_polar(1.0, phi);
        let b = smzi_block(&s);
        let shifted = smzi_block(&s.shifted(phi));
        let scaled = [[e * b[0][0], e * b[0][1]], [e * b[1][0], e * b[1][1]]];
        identity = identity.max(block_diff(&scaled, &shifted));
        model = model.max(block_diff(&b, &physical_smzi(s.theta1, s.theta2)));
    }
    Outcome::hard(
        identity < COMMUTATION_TOL && model < COMMUTATION_TOL,
        format!(
            "{COMMUTATION_PAIRS} pairs, max |e^(i phi) B - B(theta+phi)| {identity:.3e}, max deviation from coupler model {model:.3e} (< {COMMUTATION_TOL:e})"
        ),
    )
}

fn random_edge_mesh(m: usize, rng: &mut ChaCha8Rng) -> MeshCircuit {
    let mut angle = || rng.random_range(-PI..PI);
    let columns = clements_edge_layout(m)
        .unwrap()
        .columns()
        .iter()
        .map(|col| {
            col.iter()
                .map(|el| match *el {
                    MeshElement::Smzi { top_mode, .. } => MeshElement::smzi(top_mode, SmziSetting::new(angle(), angle())),
                    MeshElement::Phase(p) => MeshElement::phase(p.mode, angle()),
                    bare => bare,
                })
                .collect()
        })
        .collect();
    MeshCircuit::new(m, MeshLayout::ClementsEdge, columns).unwrap()
}

fn ac6_layer_redundancy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut columns = 0;
    for _ in 0..20 {
        let m = rng.random_range(4..=8);
        let mesh = random_edge_mesh(m, &mut rng);
        for c in 0..mesh.columns().len() {
            worst = worst.max(layer_redundancy_check(&mesh, c).unwrap());
            columns += 1;
        }
    }
    Outcome::hard(
        worst < REDUNDANCY_TOL,
        format!("20 circuits, {columns} columns, max distance {worst:.3e} (< {REDUNDANCY_TOL:e})"),
    )
}

fn ac7_compactification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sigmas = [0.0, 0.05, 0.1];
    let mut worst = 0.0f64;
    for i in 0..100 {
        let m = rng.random_range(3..=6);
        let depth = rng.random_range(1..=2 * m);
        let sigma = sigmas[i % sigmas.len()];
        let angles = ImbalanceModel::gaussian(sigma, i as u64).sample_layers(m, depth).unwrap();
        let layers = (0..=depth).map(|_| (0..m).map(|_| rng.random_range(-PI..PI)).collect()).collect();
        let full = AlternatingCircuit::new(m, depth, PhaseForm::Full, angles, layers).unwrap();
        let compact = compactify(&full).unwrap();
        let u = full.evaluate().unwrap();
        for other in [compact.evaluate().unwrap(), expand_compact(&compact).unwrap().evaluate().unwrap()] {
            worst = worst.max(u.matrix().max_abs_diff(other.matrix()).unwrap());
        }
    }
    Outcome::hard(
        worst < COMPACT_TOL,
        format!("100 circuits, m=3..6, sigma in {{0, 0.05, 0.1}}, max |U_full - U_compact| {worst:.3e} (< {COMPACT_TOL:e})"),
    )
}

fn ac8_programmability() -> Outcome {
    let start = Instant::now();
    let (m, depth, targets) = (4, 8, 20);
    let skeleton = AlternatingCircuit::zeros(m, depth, PhaseForm::Full, balanced_angles(m, depth)).unwrap();
    let mut solved = 0;
    let mut worst = 0.0f64;
    for t in 0..targets {
        let target = haar_random_unitary(m, 80_000 + t).unwrap();
        let opts = OptimizeOptions {
            seed: t,
            ..OptimizeOptions::default()
        };
        let (_, result) = optimize_phases(&target, &skeleton, &opts, false).unwrap();
        if result.achieved_infidelity < PROGRAMMABLE_TOL {
            solved += 1;
        }
        worst = worst.max(result.achieved_infidelity);
    }
    let took = start.elapsed();
    let rate = solved as f64 / targets as f64;
    Outcome::hard(
        rate >= PROGRAMMABLE_RATE && took < PROGRAMMABLE_BUDGET,
        format!(
            "m=4 depth=8, {solved}/{targets} below {PROGRAMMABLE_TOL:e} (need >= 95%), worst {worst:.3e}, {took:.2?} (< 5 min)"
        ),
    )
}

fn ac9_robustness() -> Outcome {
    let sigmas = vec![0.02, 0.05, 0.1];
    let cfg = SweepConfig::new(4, sigmas.clone(), 50, vec![SweepScheme::ClementsSmzi, SweepScheme::Fldzhyan], 0);
    let report = run_sweep(&cfg).unwrap();
    let median = |scheme, sigma| report.aggregate(scheme, sigma).unwrap().median;
    let p90 = |scheme, sigma| report.aggregate(scheme, sigma).unwrap().p90;
    let (f, c) = (median(SweepScheme::Fldzhyan, 0.05), median(SweepScheme::ClementsSmzi, 0.05));
    let monotone = |scheme| sigmas.windows(2).all(|w| median(scheme, w[0]) <= median(scheme, w[1]));
    Outcome {
        pass: f <= c,
        soft: true,
        detail: format!(
            "m=4 sigma=0.05 x50 medians fldzhyan {f:.3e} vs clements-smzi {c:.3e}; \
             p90 at sigma=0.1 fldzhyan {:.3e} vs clements-smzi {:.3e}; \
             medians nondecreasing in sigma: fldzhyan {}, clements-smzi {}",
            p90(SweepScheme::Fldzhyan, 0.1),
            p90(SweepScheme::ClementsSmzi, 0.1),
            monotone(SweepScheme::Fldzhyan),
            monotone(SweepScheme::ClementsSmzi),
        ),
    }
}

struct Bin {
    dir: tempfile::TempDir,
}

impl Bin {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_owned()
    }

    fn code(&self, args: &[&str]) -> i32 {
        Command::new(env!("CARGO_BIN_EXE_photomesh"))
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap_or(-1)
    }

    fn run(&self, args: &[&str]) {
        assert_eq!(self.code(args), 0, "{args:?}");
    }

    fn write(&self, name: &str, contents: &str) -> String {
        let p = self.path(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn files(&self) -> usize {
        fs::read_dir(self.dir.path()).unwrap().count()
    }
}

fn ac10_fault_injection() -> Outcome {
    let bin = Bin::new();
    let u = bin.path("u.json");
    bin.run(&["haar", "--m", "4", "--seed", "10", "--out", &u]);
    let good: Value = serde_json::from_str(&fs::read_to_string(&u).unwrap()).unwrap();
    let table = bin.path("t.json");
    bin.run(&["decompose", "--scheme", "clements-smzi", "--in", &u, "--out", &table]);
    let good_table: Value = serde_json::from_str(&fs::read_to_string(&table).unwrap()).unwrap();

    let mut scaled = good.clone();
    scaled["re"][0][0] = json!(good["re"][0][0].as_f64().unwrap() * 1.01);
    let mut near = good.clone();
    near["re"][1][2] = json!(good["re"][1][2].as_f64().unwrap() + 1e-11);
    let text = fs::read_to_string(&u).unwrap();
    let mut oor = good_table.clone();
    oor["smzi"][0]["j"] = json!(9);
    let mut oor_zeta = good_table.clone();
    oor_zeta["zeta"][0]["j"] = json!(1);
    let mut dup = good_table.clone();
    dup["phi"][1]["j"] = dup["phi"][0]["j"].clone();
    let mut extra = good_table.clone();
    extra["bogus"] = json!(0);

    let inputs = [
        ("non-unitary", bin.write("scaled.json", &scaled.to_string())),
        ("zero matrix", bin.write("zero.json", &json!({"m": 2, "re": [[0.0, 0.0], [0.0, 0.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}).to_string())),
        ("truncated", bin.write("trunc.json", &text[..text.len() / 2])),
        ("nan entry", bin.write("nan.json", &text.replacen(&good["re"][0][0].to_string(), "NaN", 1))),
        ("not json", bin.write("junk.json", "matrix")),
        ("smzi index out of range", bin.write("oor.json", &oor.to_string())),
        ("zeta index out of range", bin.write("oorz.json", &oor_zeta.to_string())),
        ("duplicate phi", bin.write("dup.json", &dup.to_string())),
        ("unknown field", bin.write("extra.json", &extra.to_string())),
        ("near-unitary", bin.write("near.json", &near.to_string())),
    ];
    let get = |name: &str| inputs.iter().find(|(n, _)| *n == name).unwrap().1.as_str();
    let out = bin.path("out.json");
    let cases: Vec<(&str, Vec<&str>, i32)> = vec![
        ("non-unitary", vec!["decompose", "--scheme", "reck-smzi", "--in", get("non-unitary")], 3),
        ("non-unitary", vec!["decompose", "--scheme", "clements-amzi", "--in", get("non-unitary")], 3),
        ("zero matrix", vec!["decompose", "--scheme", "clements-smzi", "--in", get("zero matrix")], 3),
        ("non-unitary", vec!["optimize", "--depth", "8", "--in", get("non-unitary")], 3),
        ("truncated", vec!["decompose", "--scheme", "clements-smzi", "--in", get("truncated")], 2),
        ("nan entry", vec!["decompose", "--scheme", "clements-smzi", "--in", get("nan entry")], 2),
        ("not json", vec!["reconstruct", "--in", get("not json")], 2),
        ("smzi index out of range", vec!["reconstruct", "--in", get("smzi index out of range")], 2),
        ("smzi index out of range", vec!["relocate", "--in", get("smzi index out of range")], 2),
        ("zeta index out of range", vec!["relocate", "--in", get("zeta index out of range")], 2),
        ("duplicate phi", vec!["reconstruct", "--in", get("duplicate phi")], 2),
        ("unknown field", vec!["reconstruct", "--in", get("unknown field")], 2),
    ];
    let before = bin.files();
    let mut wrong = Vec::new();
    for (name, mut args, expected) in cases.clone() {
        args.extend_from_slice(&["--out", &out]);
        let got = bin.code(&args);
        if got != expected || Path::new(&out).exists() || bin.files() != before {
            wrong.push(format!("{name} ({}) exit {got}, expected {expected}", args[0]));
        }
    }
    let accepted = bin.code(&["decompose", "--scheme", "clements-smzi", "--in", get("near-unitary"), "--out", &out]);
    if accepted != 0 {
        wrong.push(format!("near-unitary input exit {accepted}, expected 0"));
    }
    Outcome::hard(
        wrong.is_empty(),
        if wrong.is_empty() {
            format!("{} faults give the documented exit code and leave no file; 1e-11 perturbation accepted", cases.len())
        } else {
            wrong.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let bin = Bin::new();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("reck round trip", Box::new(ac1_reck_round_trip)),
        ("clements round trip", Box::new(ac2_clements_round_trip)),
        ("relocation exactness", Box::new(ac3_relocation)),
        ("parameter counts", Box::new(move || ac4_parameter_counts(&bin))),
        ("commutation primitive", Box::new(ac5_commutation)),
        ("layer redundancy", Box::new(ac6_layer_redundancy)),
        ("compactification exactness", Box::new(ac7_compactification)),
        ("alternating-layer programmability", Box::new(ac8_programmability)),
        ("robustness ordering (soft)", Box::new(ac9_robustness)),
        ("fault injection", Box::new(ac10_fault_injection)),
    ];
    let mut hard_failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let status = match (outcome.pass, outcome.soft) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (reported, not gated)",
        };
        println!("AC{:<2} {status} {name}: {}", i + 1, outcome.detail);
        if !outcome.pass && !outcome.soft {
            hard_failures += 1;
        }
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{hard_failures} hard criteria failed");
        ExitCode::FAILURE
    }
}
