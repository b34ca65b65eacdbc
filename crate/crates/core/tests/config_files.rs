//! Shipped configuration files parse into valid plans.

use geolimit::harness::ExperimentPlan;

#[test]
fn sweep_config_is_valid() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/configs/sweep.cfg")).unwrap();
    let plan = ExperimentPlan::parse(&text).unwrap();
    plan.validate().unwrap();
    assert_eq!(plan.regimes, vec![(2.0, 1.25), (1.0, 0.75)]);
    assert_eq!(plan.eps, vec![0.2, 0.1, 0.05]);
    assert_eq!(plan.cutoffs, vec![3]);
}
