use std::path::PathBuf;

use hoferlab::certificates::{
    certify_negside, certify_thm15, certify_thm16, fixed_point_action, hofer_norms, locate_extrema, short_time_search,
    Certificate, CertifyOptions, HoferOptions, ItemKind, Verdict,
};
use hoferlab::dynamics::constructions::{reparameterize, rescale, TimeMap};
use hoferlab::dynamics::{HamiltonianSystem, DEFAULT_STEPS};

fn load(name: &str) -> HamiltonianSystem {
    HamiltonianSystem::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/systems").join(name)).unwrap()
}

fn quick() -> CertifyOptions {
    let mut o = CertifyOptions::default();
    o.scan.resolution = 16;
    o
}

fn torus_systems() -> Vec<(&'static str, HamiltonianSystem)> {
    vec![("eps-cos.json", load("eps-cos.json")), ("pulsed.json", load("pulsed.json"))]
}

#[test]
fn thm15_implies_thm16_with_k_equal_to_h() {
    for (name, h) in torus_systems() {
        let (p, q) = locate_extrema(&h, 64).unwrap();
        let c15 = certify_thm15(&h, &p, &q, &quick()).unwrap();
        assert_eq!(c15.verdict, Verdict::Certified, "{name}: {}", c15.summary());
        let c16 = certify_thm16(&h, &h, &p, &quick()).unwrap();
        assert_eq!(c16.verdict, Verdict::Certified, "{name}: {}", c16.summary());
    }
}

#[test]
fn checklist_has_all_three_kinds_and_a_caveat() {
    let h = load("eps-cos.json");
    let c = certify_thm15(&h, &[0.0, 0.0], &[0.5, 0.5], &quick()).unwrap();
    for kind in [ItemKind::Hypothesis, ItemKind::Isolation, ItemKind::Coverage] {
        assert!(c.checklist.iter().any(|i| i.kind == kind), "{kind:?} missing");
    }
    assert!(!c.caveat.is_empty());
    for item in &c.checklist {
        for id in &item.evidence {
            assert!(c.evidence.contains_key(id), "dangling evidence id {id}");
        }
    }
}

#[test]
fn certificates_are_deterministic_and_round_trip() {
    let h = load("pulsed.json");
    let (p, q) = locate_extrema(&h, 64).unwrap();
    let a = certify_thm15(&h, &p, &q, &quick()).unwrap();
    let b = certify_thm15(&h, &p, &q, &quick()).unwrap();
    let text = serde_json::to_string_pretty(&a).unwrap();
    assert_eq!(text, serde_json::to_string_pretty(&b).unwrap());
    let back: Certificate = serde_json::from_str(&text).unwrap();
    assert_eq!(back, a);
}

#[test]
fn critical_epsilon_refutes_the_hypothesis() {
    let h = load("eps-cos-critical.json");
    let c = certify_thm15(&h, &[0.0, 0.0], &[0.5, 0.5], &quick()).unwrap();
    assert_eq!(c.verdict, Verdict::RefutedHypothesis, "{}", c.summary());
}

#[test]
fn negative_side_on_shipped_systems() {
    for (name, h) in torus_systems() {
        let (_, q) = locate_extrema(&h, 64).unwrap();
        let c = certify_negside(&h, &q, &quick()).unwrap();
        assert_eq!(c.verdict, Verdict::Certified, "{name}: {}", c.summary());
    }
}

#[test]
fn short_time_search_certifies_a_rescaled_path() {
    for (name, h) in torus_systems() {
        let (p, _) = locate_extrema(&h, 64).unwrap();
        let r = short_time_search(&h, &p, 0.05, 1e-3, &quick()).unwrap();
        let eps = r.epsilon.unwrap_or_else(|| panic!("{name}: {:?}", r.attempts));
        assert!(eps <= 0.05 && eps >= 1e-3);
        assert_eq!(r.certificate.as_ref().unwrap().verdict, Verdict::Certified);
        // attempts halve from the start until the first success
        assert_eq!(r.attempts.last().unwrap().epsilon, eps);
        assert!(r.attempts[..r.attempts.len() - 1].iter().all(|a| a.verdict != Verdict::Certified));
    }
}

#[test]
fn rescaling_scales_the_fixed_point_action() {
    let h = load("pulsed.json");
    let (p, _) = locate_extrema(&h, 64).unwrap();
    let a = fixed_point_action(&h, &p, DEFAULT_STEPS);
    for eps in [0.5, 0.1] {
        let he = rescale(&h, eps).unwrap();
        // ∫₀¹ εH(εt, P) dt = ∫₀^ε H(s, P) ds
        let n = 4000;
        let direct: f64 = (0..n)
            .map(|k| {
                let s = eps * (k as f64 + 0.5) / n as f64;
                h.value(s, &p) * eps / n as f64
            })
            .sum();
        assert!((fixed_point_action(&he, &p, DEFAULT_STEPS) - direct).abs() < 1e-8);
    }
    assert!(a > 0.0);
}

#[test]
fn hofer_report_is_invariant_under_reparameterization() {
    let opts = HoferOptions { space: 32, time_intervals: 400, refine: true };
    for (name, h) in torus_systems() {
        let a = hofer_norms(&h, &opts).unwrap();
        let b = hofer_norms(&reparameterize(&h, TimeMap::default()).unwrap(), &opts).unwrap();
        assert!((a.positive - b.positive).abs() < 1e-6, "{name}: {} vs {}", a.positive, b.positive);
        assert!((a.negative - b.negative).abs() < 1e-6, "{name}: {} vs {}", a.negative, b.negative);
    }
}
