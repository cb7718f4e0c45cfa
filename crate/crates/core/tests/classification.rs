use std::sync::Arc;

use eightvertex::classify::{
    classify, coeffs_at, curve_residuals, derived_identity_suite, hamiltonian_coeffs, lookup,
    pick, pick_m, reduced_system, select_branch, Branch, ClassifyPlan, CoeffOptions,
    NamedResidual, SuiteOptions, Verdict,
};
use eightvertex::families::{
    bazhanov_stroganov, Family, FamilyId, FamilySpec, FnFamily, SharedFamily, WeightFamily,
};
use eightvertex::numkernel::{re, EllipticModulus};
use eightvertex::profiles::ProfileSpec;
use eightvertex::sampling::{random_pipeline, random_spec, rng, SampleDomain, SamplePoint};
use eightvertex::spinchain::{couplings, ff_relation_check};
use eightvertex::weights::free_fermion_residual;

fn grid() -> Vec<f64> {
    (0..20).map(|i| 0.1 + 0.5 * i as f64 / 19.0).collect()
}

fn points(n: usize) -> Vec<SamplePoint> {
    let mut r = rng(77);
    let d = SampleDomain::default();
    (0..n).map(|_| d.draw(&mut r)).collect()
}

fn value(rs: &[NamedResidual], name: &str) -> f64 {
    lookup(rs, name)
        .and_then(|r| r.value)
        .unwrap_or_else(|| panic!("{name} missing from {rs:?}"))
}

fn suites(spec: FamilySpec) -> (Vec<NamedResidual>, Vec<NamedResidual>, Branch) {
    let fam = Family::new(spec).unwrap();
    let c = hamiltonian_coeffs(&fam, &grid(), &CoeffOptions::default()).unwrap();
    let opts = SuiteOptions::default();
    let pts = points(16);
    (
        curve_residuals(&fam, &c, &pts, &opts).unwrap(),
        derived_identity_suite(&fam, &c, &pts, &opts).unwrap(),
        select_branch(&c),
    )
}

fn baxter31() -> FamilySpec {
    FamilySpec::new(FamilyId::BaxterElliptic)
        .with_k(0.45)
        .with_lambda(0.9)
        .with_mu(0.8)
        .with_f(ProfileSpec::linear(0.3, 0.0))
}

#[test]
fn baxter_elliptic_curve_and_cubics() {
    let (curve, ids, branch) = suites(baxter31());
    assert_eq!(branch, Branch::Baxter);
    for n in ["a5_ode", "a1_ode", "baxter_curve"] {
        assert!(value(&curve, n) <= 1e-7, "{n}: {}", value(&curve, n));
    }
    for n in ["shape_a1_a4", "shape_a5_a6"] {
        assert_eq!(value(&curve, n), 0.0);
    }
    for i in 1..=3 {
        assert!(value(&ids, &format!("baxter_cubic.{i}")) <= 1e-8);
    }
    for i in 1..=7 {
        assert!(value(&ids, &format!("reduced_system.{i}")) <= 1e-7);
    }
    let fam = Family::new(baxter31()).unwrap();
    let ff = points(16)
        .iter()
        .map(|p| {
            let [u, _, x, y, _] = p.complex();
            free_fermion_residual(&fam.weights(u, x, y).unwrap()).norm()
        })
        .fold(0.0, f64::max);
    assert!(ff > 1e-3);
}

#[test]
fn elliptic_free_fermion_identities() {
    let spec = FamilySpec::new(FamilyId::FfElliptic)
        .with_k(0.55)
        .with_lambda(0.8)
        .with_f(ProfileSpec::quadratic(0.4, 0.1, 0.0));
    let (curve, ids, branch) = suites(spec);
    assert_eq!(branch, Branch::FreeFermion);
    for n in ["ff_condition", "ff_companion_b", "ff_companion_c", "ff_companion_c_xi"] {
        assert!(value(&curve, n) <= 1e-9, "{n}: {}", value(&curve, n));
    }
    assert!(value(&curve, "a7_quartic_ode") <= 1e-7);
    for l in ["a", "b", "c", "d", "e"] {
        let n = format!("elliptic.{l}");
        assert!(value(&ids, &n) <= 1e-9, "{n}: {}", value(&ids, &n));
    }
    assert!(value(&ids, "reflection_a4") <= 1e-10);
    assert!(value(&ids, "reflection_a7") <= 1e-10);
}

#[test]
fn hyperbolic_family_without_m7_obeys_second_order_ode() {
    let spec = FamilySpec::new(FamilyId::FfHyperbolic)
        .with_lambda(0.7)
        .with_mu(0.0)
        .with_f(ProfileSpec::linear(0.5, 0.0))
        .with_g(ProfileSpec::quadratic(0.3, 0.0, 0.0));
    let (curve, _, _) = suites(spec);
    assert!(value(&curve, "second_order_ode") <= 1e-6);
}

#[test]
fn reduced_system_outside_the_initial_condition() {
    // Both trivial families are in gauge form but R(0, ξ, ξ) is not the
    // identity. The first-order identities hold on the TRIVIAL_A shape
    // regardless; on the TRIVIAL_B shape they do not.
    let a = Family::new(
        FamilySpec::new(FamilyId::TrivialA).with_h(ProfileSpec::sin_u_xi_eta(1.3)),
    )
    .unwrap();
    let b = Family::new(FamilySpec::new(FamilyId::TrivialB).with_f(ProfileSpec::exp(0.7, 1.0)))
        .unwrap();
    let worst = |f: &Family| {
        points(12)
            .iter()
            .flat_map(|p| {
                let [u, _, x, y, _] = p.complex();
                let uu = pick(&f.weights(u, x, y).unwrap());
                let m = pick_m(&coeffs_at(f, p.eta, &CoeffOptions::default()).unwrap());
                reduced_system(uu, m)
            })
            .fold(0.0f64, |m, z| m.max(z.norm()))
    };
    assert!(worst(&a) < 1e-12);
    assert!(worst(&b) > 1.0);
}

#[test]
fn verdicts_for_random_parameterisations() {
    let mut r = rng(2024);
    let plan = ClassifyPlan {
        suites: false,
        samples: 12,
        ..ClassifyPlan::default()
    };
    for id in FamilyId::SOLUTIONS {
        for _ in 0..50 {
            let spec = random_spec(id, &mut r);
            let label = spec.to_json();
            let v = classify(Family::shared(spec).unwrap(), &plan);
            assert_eq!(v.verdict, Verdict::expected_for(id), "{label}: {:?}", v.notes);
        }
    }
}

#[test]
fn transformed_solutions_keep_their_type() {
    let mut r = rng(99);
    let plan = ClassifyPlan {
        suites: false,
        samples: 12,
        ..ClassifyPlan::default()
    };
    for id in FamilyId::SOLUTIONS {
        for _ in 0..3 {
            let base = Family::shared(random_spec(id, &mut r)).unwrap();
            let p = random_pipeline(&mut r, 3);
            let f = p.apply(base).unwrap();
            let rep = classify(f, &plan);
            assert_eq!(
                rep.verdict,
                Verdict::expected_for(id),
                "{id} after {}: {:?}",
                serde_json::to_string(&p).unwrap(),
                rep.notes
            );
        }
    }
}

#[test]
fn literature_solutions_are_free_fermion() {
    let k = EllipticModulus::real(0.5).unwrap();
    let bs: SharedFamily = Arc::new(FnFamily::new("bs", move |u, x, y| {
        bazhanov_stroganov(u, x, y, k)
    }));
    let rep = classify(bs, &ClassifyPlan::default());
    assert_eq!(rep.verdict, Verdict::FreeFermion, "{:?}", rep.notes);
    assert!(!rep.is_gauge);
    let m = Family::shared(FamilySpec::new(FamilyId::Murakami).with_k(0.5)).unwrap();
    assert_eq!(classify(m, &ClassifyPlan::default()).verdict, Verdict::FreeFermion);
}

#[test]
fn non_solution_is_rejected() {
    let inner = Family::shared(baxter31()).unwrap();
    let f: SharedFamily = Arc::new(FnFamily::new("bent", move |u, x, y| {
        let mut w = inner.weights(u, x, y)?;
        w.set(1, w.a(1) * (re(1.0) + u * 0.2));
        Ok(w)
    }));
    let rep = classify(f, &ClassifyPlan::default());
    assert_eq!(rep.verdict, Verdict::NotASolution);
    assert!(rep.ybe.median > 1e-8);
}

#[test]
fn report_serialises_with_stable_keys() {
    let rep = classify(Family::shared(baxter31()).unwrap(), &ClassifyPlan::default());
    let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
    for key in [
        "family",
        "verdict",
        "is_gauge",
        "initial_condition_ok",
        "ybe",
        "gauge_certificate",
        "branch",
        "branch_tests",
        "coefficient_invariants",
        "curve_residuals",
        "derived_identities",
        "notes",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["verdict"], "BAXTER");
    assert_eq!(v["branch"], "BAXTER");
    let names: Vec<&str> = v["coefficient_invariants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"m1^2-m4^2") && names.contains(&"m7_spread"));
}

#[test]
fn special_free_fermion_relations_on_the_trigonometric_family() {
    // For the trigonometric family at ξ: m = (λG, 0, 0, −λG, λG, λG, λ, λ)
    // with sy = s7 = 1. The coefficient relations m5 = m1 − m3 = m2 − m4 hold
    // and Jz = 0, but Jx + Jy = m5 while h = m5 / 2.
    let g = ProfileSpec::linear(0.5, 1.0);
    let fam = Family::new(
        FamilySpec::new(FamilyId::FfTrig)
            .with_lambda(0.8)
            .with_g(g.clone()),
    )
    .unwrap();
    let s = coeffs_at(&fam, 0.3, &CoeffOptions::default()).unwrap();
    let lg = 0.8 * (1.0 + 0.5 * 0.3);
    let want = [lg, 0.0, 0.0, -lg, lg, lg, 0.8, 0.8];
    for i in 0..8 {
        assert!((s.m[i] - re(want[i])).norm() < 1e-12, "m{}", i + 1);
    }
    let c = couplings(&s.m);
    let rep = ff_relation_check(&c, &s.m);
    assert!(rep.coefficients_hold);
    assert!(rep.jz < 1e-12);
    assert!((rep.jx_plus_jy_minus_h - lg / 2.0).abs() < 1e-12);
    assert!(!rep.couplings_hold);
}
