//! Algebraic laws on randomized small instances, plus the exhaustive cases.

mod common;

use proptest::prelude::*;

use motic::ck;
use motic::correspondence as corr;
use motic::profile;
use motic::text::{class_text, parse_class};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn ok(r: common::Check) -> Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn partition_of_unity(seed in any::<u64>()) { ok(common::partition_of_unity(seed))?; }

    #[test]
    fn chow_grading_sums_to_input(seed in any::<u64>()) { ok(common::chow_grading_sums(seed))?; }

    #[test]
    fn three_way_equivalence(seed in any::<u64>()) { ok(common::three_way_equivalence(seed))?; }

    #[test]
    fn projection_formula(seed in any::<u64>()) { ok(common::projection_formula(seed))?; }

    #[test]
    fn pushforward_drop_order(seed in any::<u64>()) { ok(common::drop_order(seed))?; }

    #[test]
    fn rewrite_confluence(seed in any::<u64>()) { ok(common::confluence(seed))?; }

    #[test]
    fn codimension_is_additive(seed in any::<u64>()) { ok(common::codimension_additive(seed))?; }

    #[test]
    fn integrate_is_permutation_invariant(seed in any::<u64>()) { ok(common::integrate_permutation_invariant(seed))?; }

    #[test]
    fn compose_associativity(seed in any::<u64>()) { ok(common::compose_associative(seed))?; }

    #[test]
    fn transpose_reverses_composition(seed in any::<u64>()) { ok(common::transpose_anti(seed))?; }

    #[test]
    fn act_respects_composition(seed in any::<u64>()) { ok(common::act_composes(seed))?; }

    #[test]
    fn tensor_distributes_over_compose(seed in any::<u64>()) { ok(common::tensor_distributes(seed))?; }

    #[test]
    fn fold_descent(seed in any::<u64>()) { ok(common::fold_descent(seed))?; }

    #[test]
    fn defect_monotone_and_subadditive(seed in any::<u64>()) { ok(common::monotone_subadditive(seed))?; }

    #[test]
    fn report_round_trip(seed in any::<u64>()) { ok(common::report_round_trip(seed))?; }

    #[test]
    fn random_text_round_trip(seed in any::<u64>()) { ok(common::text_round_trip(seed))?; }
}

#[test]
fn drop_order_exhaustive() {
    common::drop_order_exhaustive().unwrap();
}

#[test]
fn confluence_exhaustive() {
    common::confluence_exhaustive().unwrap();
}

#[test]
fn rewrite_soundness() {
    common::rewrite_soundness().unwrap();
}

#[test]
fn fold_descent_exhaustive() {
    common::fold_descent_exhaustive().unwrap();
}

#[test]
fn self_dual_sets_fix_point_and_unit() {
    for (p, ck) in common::pool() {
        assert!(ck.self_dual);
        assert!(ck::verify_ck(p, ck).unwrap().passed(), "{}", p.name);
        let a = p.base();
        let o = p.exterior(&[a.class(a.zero_cycle().clone())]).unwrap();
        let one = p.exterior(&[a.unit_class()]).unwrap();
        let top = ck.projectors.len() - 1;
        assert!(p.equal(&corr::act(p, &ck.projectors[top], &o).unwrap(), &o).unwrap(), "{}", p.name);
        assert!(p.equal(&corr::act(p, &ck.projectors[0], &one).unwrap(), &one).unwrap(), "{}", p.name);
    }
}

#[test]
fn cli_reports_are_deterministic() {
    use clap::Parser;
    let src = std::fs::read(format!("{}/../../profiles/curve_g3.json", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let cli = motic::cli::Cli::parse_from(["motic", "run", "x.json", "--task", "defect:2", "--task", "sweep:3", "--json"]);
    let motic::cli::Command::Run(args) = cli.command else { unreachable!() };
    let a = motic::cli::run_bytes(&src, &args, None);
    let b = motic::cli::run_bytes(&src, &args, None);
    assert_eq!(a.code, b.code);
    assert_eq!(a.text, b.text);
    let rep = motic::cli::Report::parse(a.text.as_bytes()).unwrap();
    let p = profile::curve(3, &["o"], true).unwrap();
    assert!(!rep.pieces().is_empty());
    for (_, _, c) in rep.pieces() {
        let cls = parse_class(&p, c.as_bytes(), None).unwrap();
        assert_eq!(class_text(&p, &cls), c);
    }
}
