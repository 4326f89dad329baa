use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

use slantwarp::report::{CheckReport, Status};
use slantwarp::runner::{check_paper, run, RunOptions};
use slantwarp::scenario::{builtin, Scenario};
use slantwarp::Error;

fn scenario_file(name: &str) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/");
    std::fs::read_to_string(format!("{path}{name}")).unwrap()
}

fn status(r: &CheckReport, id: &str) -> Status {
    r.checks.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("no check {id}")).status
}

fn max(r: &CheckReport, id: &str) -> f64 {
    r.checks.iter().find(|c| c.id == id).unwrap().max
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let opts = RunOptions::default();
    let a = check_paper(&opts).unwrap().to_json();
    let b = check_paper(&opts).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn seed_override_moves_the_sample() {
    let s = builtin("example2", None).unwrap();
    let a = run(&s, &RunOptions { seed: Some(1), ..Default::default() }).unwrap();
    let b = run(&s, &RunOptions { seed: Some(2), ..Default::default() }).unwrap();
    assert_ne!(a.to_json(), b.to_json());
    assert!(a.as_expected && b.as_expected);
}

#[test]
fn slant_constant_is_recovered_at_every_angle() {
    for theta in [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3, 0.2, 1.4] {
        let r = run(&builtin("example2", Some(theta)).unwrap(), &RunOptions::default()).unwrap();
        let c = r.classification.as_ref().unwrap();
        assert_eq!(c.kind, "proper-semi-slant");
        assert!((c.slant_angle.unwrap() - theta).abs() < 1e-10, "{theta}");
        assert!(r.as_expected, "{r}");
    }
}

#[test]
fn example1_slant_cosine_is_three_seventeenths() {
    let r = run(&builtin("example1", None).unwrap(), &RunOptions::default()).unwrap();
    let c = r.classification.unwrap();
    // Independent: on span{∂u, ∂v} the structure gives |Pw|²/|w|² = (3/17)².
    assert!((c.cos_slant_angle.unwrap() - 3.0 / 17.0).abs() < 1e-12);
    assert!((c.slant_angle.unwrap() - (3.0f64 / 17.0).acos()).abs() < 1e-12);
}

#[test]
fn negative_controls_fail_where_declared() {
    let perturbed = run(&builtin("example2_perturbed", None).unwrap(), &RunOptions::default()).unwrap();
    assert!(perturbed.as_expected);
    assert_eq!(status(&perturbed, "characterization"), Status::Fail);
    assert!(max(&perturbed, "characterization") > 1e-3);
    assert_eq!(status(&perturbed, "block_cross"), Status::Pass);

    let literal = run(&builtin("example2_paper_literal", None).unwrap(), &RunOptions::default()).unwrap();
    assert!(literal.as_expected);
    assert_eq!(status(&literal, "almost_contact"), Status::Fail);
    assert_eq!(status(&literal, "kenmotsu_phi"), Status::Fail);
}

#[test]
fn xi_in_second_factor_is_reported_as_trivial() {
    let s = Scenario::load(&scenario_file("xi_in_second_factor.json")).unwrap();
    let r = run(&s, &RunOptions::default()).unwrap();
    assert_eq!(status(&r, "xi_second_factor"), Status::Fail);
    assert!(r.checks.iter().find(|c| c.id == "xi_second_factor").unwrap().note.as_deref().unwrap().contains("trivial"));
    assert_eq!(status(&r, "xi_log_derivative"), Status::Skipped);
    assert_eq!(status(&r, "characterization"), Status::Skipped);
    assert!(r.as_expected);
}

#[test]
fn inline_ambient_scenario_runs() {
    let s = Scenario::load(&scenario_file("kenmotsu_c2_leaf.json")).unwrap();
    assert_eq!(s.ambient_builtin, None);
    let r = run(&s, &RunOptions::default()).unwrap();
    assert_eq!(r.classification.as_ref().unwrap().kind, "invariant");
    assert!(r.as_expected, "{r}");
}

#[test]
fn scenario_round_trips_through_json() {
    for name in slantwarp::scenario::BUILTIN_NAMES {
        let s = builtin(name, None).unwrap();
        assert_eq!(Scenario::load(&s.to_json()).unwrap(), s, "{name}");
    }
}

#[test]
fn malformed_json_reports_its_location() {
    let err = Scenario::load("{\"name\": \"x\",\n \"ambient\": }").unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn every_problem_in_a_scenario_is_reported_at_once() {
    let mut doc = builtin("example2", None).unwrap().to_doc();
    doc.immersion.target.pop();
    doc.split.xi = "w".into();
    doc.expect.insert("no_such_check".into(), slantwarp::report::Expect::Pass);
    let err = Scenario::from_doc(&doc).unwrap_err();
    let Error::Invalid(problems) = &err else { panic!("{err:?}") };
    assert!(problems.len() >= 3, "{problems:?}");
    let text = err.to_string();
    assert!(text.contains("no_such_check"), "{text}");
    assert!(text.contains('8') && text.contains('9'), "{text}");
}

#[test]
fn warping_on_the_second_factor_is_rejected() {
    let mut doc = builtin("example2", None).unwrap().to_doc();
    doc.warp.as_mut().unwrap().warping = "exp(z + u3)".into();
    let text = Scenario::from_doc(&doc).unwrap_err().to_string();
    assert!(text.contains("u3"), "{text}");
}

#[test]
fn out_of_range_slant_constant_is_rejected() {
    for bad in [0.0, std::f64::consts::FRAC_PI_2, -0.3, 2.0, f64::NAN] {
        assert!(builtin("example2", Some(bad)).is_err(), "{bad}");
    }
}

#[test]
fn sample_count_override_applies() {
    let s = builtin("example2_cr", None).unwrap();
    let r = run(&s, &RunOptions { samples: Some(12), ..Default::default() }).unwrap();
    assert_eq!(r.points, 12);
    assert!(r.as_expected);
}

#[test]
fn declared_angle_mismatch_is_caught() {
    let mut doc = builtin("example2", Some(FRAC_PI_3)).unwrap().to_doc();
    doc.warp.as_mut().unwrap().slant_theta = Some("pi/4".into());
    let r = run(&Scenario::from_doc(&doc).unwrap(), &RunOptions { samples: Some(10), ..Default::default() }).unwrap();
    assert_eq!(status(&r, "declared_angle"), Status::Fail);
    assert!((max(&r, "declared_angle") - (FRAC_PI_3 - FRAC_PI_4)).abs() < 1e-9);
}
