use std::path::PathBuf;

use hoferlab::certificates::{hofer_norms, HoferOptions};
use hoferlab::dynamics::constructions::{reparameterize, reverse, TimeMap};
use hoferlab::dynamics::{HamiltonianSystem, DEFAULT_STEPS};
use hoferlab::linalg::symplectic_defect;
use proptest::prelude::*;

fn shipped() -> Vec<(String, HamiltonianSystem)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/systems");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    assert!(!paths.is_empty());
    paths
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), HamiltonianSystem::load(&p).unwrap()))
        .collect()
}

fn probe_points(sys: &HamiltonianSystem) -> Vec<Vec<f64>> {
    let base = [[0.1, 0.2], [0.37, 0.81], [0.5, 0.05], [0.9, 0.6]];
    let scale = if sys.domain().is_torus() { 1.0 } else { 0.4 };
    base.iter().map(|p| p.iter().map(|v| v * scale).collect()).collect()
}

#[test]
fn monodromy_is_symplectic_on_shipped_systems() {
    for (name, sys) in shipped() {
        for x in probe_points(&sys) {
            let (_, m) = sys.time_map(&x, 1.0, DEFAULT_STEPS).unwrap();
            let d = symplectic_defect(&m);
            assert!(d < 1e-8, "{name} at {x:?}: defect {d:e}");
        }
    }
}

#[test]
fn energy_is_conserved_for_autonomous_shipped_systems() {
    for (name, sys) in shipped().into_iter().filter(|(_, s)| s.is_autonomous()) {
        for x in probe_points(&sys) {
            let r = sys.flow_with(&x, 0.0, 1.0, &hoferlab::dynamics::FlowOptions::full(DEFAULT_STEPS)).unwrap();
            let e0 = sys.value(0.0, &x);
            let drift = r.samples.iter().map(|y| (sys.value(0.0, y) - e0).abs()).fold(0.0, f64::max);
            assert!(drift < 1e-8, "{name} at {x:?}: drift {drift:e}");
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let h = 1e-6;
    for (name, sys) in shipped() {
        for x in probe_points(&sys) {
            for t in [0.0, 0.3, 0.75] {
                let g = sys.gradient(t, &x);
                let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                for i in 0..x.len() {
                    let mut a = x.clone();
                    let mut b = x.clone();
                    a[i] += h;
                    b[i] -= h;
                    let fd = (sys.value(t, &a) - sys.value(t, &b)) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-6 * scale, "{name} ∂{i} at t={t}, x={x:?}: {fd} vs {}", g[i]);
                }
            }
        }
    }
}

#[test]
fn reverse_inverts_the_time_one_map() {
    for (name, sys) in shipped().into_iter().filter(|(_, s)| s.domain().is_torus()) {
        let rev = reverse(&sys);
        for x in probe_points(&sys) {
            let y = sys.flow(&x, 0.0, 1.0, DEFAULT_STEPS).unwrap().endpoint;
            let back = rev.flow(&y, 0.0, 1.0, DEFAULT_STEPS).unwrap().endpoint;
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{name}: {err:e}");
        }
    }
}

#[test]
fn reversal_swaps_the_hofer_norms() {
    let opts = HoferOptions { space: 24, time_intervals: 40, refine: true };
    for (name, sys) in shipped().into_iter().filter(|(_, s)| s.domain().is_torus()) {
        let a = hofer_norms(&sys, &opts).unwrap();
        let b = hofer_norms(&reverse(&sys), &opts).unwrap();
        assert!((a.negative - b.positive).abs() < 1e-6, "{name}: {} vs {}", a.negative, b.positive);
        assert!((a.positive - b.negative).abs() < 1e-6, "{name}: {} vs {}", a.positive, b.negative);
    }
}

#[test]
fn reparameterization_keeps_the_time_one_map() {
    for (name, sys) in shipped() {
        let sa = reparameterize(&sys, TimeMap::default()).unwrap();
        // the fast rotations need finer steps for both sides to agree to 1e-6
        for x in probe_points(&sys) {
            let a = sys.flow(&x, 0.0, 1.0, 4 * DEFAULT_STEPS).unwrap().endpoint;
            let b = sa.flow(&x, 0.0, 1.0, 8 * DEFAULT_STEPS).unwrap().endpoint;
            let err = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            assert!(err < 1e-6, "{name}: {err:e}");
        }
    }
}

#[test]
fn normalized_hofer_split_matches_the_oscillation() {
    for (name, sys) in shipped().into_iter().filter(|(_, s)| s.domain().is_torus()) {
        let r = hofer_norms(&sys, &HoferOptions::default()).unwrap();
        assert!(r.mean_defect < 1e-12, "{name} is not normalized");
        assert!((r.length - r.oscillation).abs() < 1e-9, "{name}: {} vs {}", r.length, r.oscillation);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_flows_stay_symplectic(q in 0.0f64..1.0, p in 0.0f64..1.0, t in 0.05f64..1.0) {
        let sys = HamiltonianSystem::load(
            &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/systems/pulsed.json"),
        )
        .unwrap();
        let (_, m) = sys.time_map(&[q, p], t, 400).unwrap();
        prop_assert!(symplectic_defect(&m) < 1e-8);
    }

    #[test]
    fn flows_compose(q in 0.0f64..1.0, p in 0.0f64..1.0, s in 0.1f64..0.9) {
        let sys = HamiltonianSystem::load(
            &PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/systems/pulsed.json"),
        )
        .unwrap();
        let whole = sys.flow(&[q, p], 0.0, 1.0, 4000).unwrap().endpoint;
        let mid = sys.flow(&[q, p], 0.0, s, 4000).unwrap().endpoint;
        let end = sys.flow(&mid, s, 1.0, 4000).unwrap().endpoint;
        for (a, b) in whole.iter().zip(&end) {
            prop_assert!((a - b).abs() < 1e-7);
        }
    }
}
