use std::f64::consts::PI;

use num_complex::Complex64;
use photomesh::alternating::{compactify, expand_compact, AlternatingCircuit, ImbalanceModel, PhaseForm};
use photomesh::clements::{decompose_clements_smzi, reconstruct_clements};
use photomesh::mesh::{clements_edge_layout, smzi_block, MeshCircuit, MeshElement, MeshLayout, SmziSetting};
use photomesh::reck::{decompose_reck, reconstruct_reck};
use photomesh::relocation::{relocate_all, relocate_one, PendingPhase};
use photomesh::{global_phase_distance, haar_random_unitary};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn edge_mesh(m: usize, phases: &[f64]) -> MeshCircuit {
    let mut it = phases.iter().copied().cycle();
    let columns = clements_edge_layout(m)
        .unwrap()
        .columns()
        .iter()
        .map(|col| {
            col.iter()
                .map(|el| match *el {
                    MeshElement::Smzi { top_mode, .. } => {
                        MeshElement::smzi(top_mode, SmziSetting::new(it.next().unwrap(), it.next().unwrap()))
                    }
                    MeshElement::Phase(p) => MeshElement::phase(p.mode, it.next().unwrap()),
                    bare => bare,
                })
                .collect()
        })
        .collect();
    MeshCircuit::new(m, MeshLayout::ClementsEdge, columns).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reck_round_trip(m in 2usize..10, seed in any::<u64>()) {
        let u = haar_random_unitary(m, seed).unwrap();
        let back = reconstruct_reck(&decompose_reck(&u).unwrap()).unwrap();
        prop_assert!(global_phase_distance(&back, &u).unwrap() < 1e-9);
    }

    #[test]
    fn clements_round_trip_and_relocation(m in 2usize..10, seed in any::<u64>()) {
        let u = haar_random_unitary(m, seed).unwrap();
        let d = decompose_clements_smzi(&u).unwrap();
        let back = reconstruct_clements(&d).unwrap();
        prop_assert!(global_phase_distance(&back, &u).unwrap() < 1e-9);
        let mesh = relocate_all(&d).unwrap();
        prop_assert!(global_phase_distance(&mesh.evaluate().unwrap(), &u).unwrap() < 1e-10);
    }

    #[test]
    fn equal_phases_commute_with_an_smzi(t1 in angle(), t2 in angle(), phi in angle()) {
        let s = SmziSetting::new(t1, t2);
        let b = smzi_block(&s);
        let shifted = smzi_block(&s.shifted(phi));
        let e = Complex64::from_polar(1.0, phi);
        for r in 0..2 {
            for c in 0..2 {
                prop_assert!((e * b[r][c] - shifted[r][c]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn relocation_is_exact(
        m in 2usize..8,
        phases in prop::collection::vec(angle(), 16),
        boundary in 0usize..8,
        mode in 1usize..8,
        phi in angle(),
    ) {
        let c = edge_mesh(m, &phases);
        let p = PendingPhase::new(boundary.min(m), mode.min(m), phi);
        let out = relocate_one(&c, p).unwrap();
        let mut columns = c.columns().to_vec();
        columns.insert(p.column_boundary, vec![MeshElement::phase(p.mode, p.phi)]);
        let oracle = MeshCircuit::new(m, MeshLayout::Custom, columns).unwrap().evaluate().unwrap();
        let diff = out.evaluate().unwrap().matrix().max_abs_diff(oracle.matrix()).unwrap();
        prop_assert!(diff < 1e-12, "{}", diff);
    }

    #[test]
    fn compactification_is_exact(
        m in 2usize..7,
        depth in 1usize..12,
        sigma in 0.0f64..0.2,
        seed in any::<u64>(),
        phases in prop::collection::vec(angle(), 8),
    ) {
        let angles = ImbalanceModel::gaussian(sigma, seed).sample_layers(m, depth).unwrap();
        let mut it = phases.iter().copied().cycle();
        let layers = (0..=depth).map(|_| (0..m).map(|_| it.next().unwrap()).collect()).collect();
        let full = AlternatingCircuit::new(m, depth, PhaseForm::Full, angles, layers).unwrap();
        let compact = compactify(&full).unwrap();
        let back = expand_compact(&compact).unwrap();
        let u = full.evaluate().unwrap();
        for other in [compact.evaluate().unwrap(), back.evaluate().unwrap()] {
            prop_assert!(u.matrix().max_abs_diff(other.matrix()).unwrap() < 1e-13);
        }
    }
}
