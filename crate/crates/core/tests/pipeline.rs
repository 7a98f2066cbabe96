use std::sync::OnceLock;

use zotnet::allocator::PolicyKind;
use zotnet::config::Config;
use zotnet::error::Error;
use zotnet::pipeline::*;
use zotnet::predictor::{to_text, TwoPhaseModel};
use zotnet::synth::{find_persona, ground_truth_profile};
use zotnet::zot::satisfaction_of;

fn config() -> Config {
    let mut c = Config::default();
    c.simulation.duration_s = 1800.0;
    c.simulation.warmup_s = 300.0;
    c.development.duration_s = 6.0 * 3600.0;
    c.development.users_per_persona = 5;
    c
}

fn model() -> &'static TwoPhaseModel {
    static CELL: OnceLock<TwoPhaseModel> = OnceLock::new();
    CELL.get_or_init(|| run_development(&config(), 3).unwrap().model)
}

fn runs() -> &'static (ProductionRun, ProductionRun) {
    static CELL: OnceLock<(ProductionRun, ProductionRun)> = OnceLock::new();
    CELL.get_or_init(|| {
        let c = config();
        (
            run_production(&c, c.policy(), Some(model()), 11).unwrap(),
            run_production(&c, PolicyKind::NonPersonalized, None, 11).unwrap(),
        )
    })
}

#[test]
fn one_record_per_user_and_slot() {
    let (p, b) = runs();
    assert_eq!(p.records.len(), 1800 * 3);
    assert_eq!(b.records.len(), 1800 * 3);
    assert_eq!(p.summary.slots, 1800);
    assert_eq!(p.summary.users, 3);
}

#[test]
fn baseline_targets_the_demand() {
    let (_, b) = runs();
    assert!(b.model.is_none());
    for r in &b.records {
        assert_eq!(r.target_rate, r.demand);
        assert_eq!(r.delta_opt, 0.0);
        assert!(r.sat_pred.is_none() && r.correct.is_none());
        if r.feasible {
            assert_eq!(r.qos_p, r.demand);
        }
    }
}

#[test]
fn feedback_matches_the_oracle() {
    let c = config();
    let (p, b) = runs();
    for r in p.records.iter().chain(&b.records) {
        let persona = find_persona(&c.personas, r.persona_id).unwrap();
        let truth = ground_truth_profile(persona, &r.context, &c.demands, &c.generator, production_seed(11, r.user_id)).unwrap();
        assert_eq!(r.sat_meas, satisfaction_of(&truth, r.qos_p));
        assert!(r.qos_p <= r.demand && r.qos_p == r.achieved_rate.min(r.demand));
    }
}

#[test]
fn provided_total_is_conserved() {
    let (p, _) = runs();
    let sum: f64 = p.records.iter().map(|r| r.qos_p * 1.0).sum();
    assert!((sum - p.summary.total_provided_mbits).abs() <= 1e-6 * sum);
}

#[test]
fn policies_see_the_same_world() {
    let (p, b) = runs();
    for (x, y) in p.records.iter().zip(&b.records) {
        assert_eq!(x.context, y.context);
        assert_eq!(x.demand, y.demand);
    }
}

#[test]
fn personalized_targets_never_exceed_demand() {
    let (p, b) = runs();
    for r in &p.records {
        assert!(r.target_rate <= r.demand + 1e-12);
        assert!(r.probs.is_some() && r.predicted.is_some());
    }
    assert!(p.summary.total_rbs_used <= b.summary.total_rbs_used);
}

#[test]
fn runs_are_reproducible() {
    let c = config();
    let again = run_production(&c, c.policy(), Some(model()), 11).unwrap();
    assert_eq!(again.summary, runs().0.summary);
    assert_eq!(again.rows(), runs().0.rows());
}

#[test]
fn personalized_needs_a_model() {
    let c = config();
    assert!(matches!(run_production(&c, c.policy(), None, 1), Err(Error::Untrained)));
    assert!(matches!(
        run_production(&c, c.policy(), Some(&TwoPhaseModel::default()), 1),
        Err(Error::Untrained)
    ));
}

#[test]
fn self_comparison_saves_nothing() {
    let rows = runs().0.rows();
    let report = compare(&rows, &rows, 1.0, 300.0).unwrap();
    assert_eq!(report.total_saved_mbits, 0.0);
    assert!(report.per_slot_saved_mbps.iter().all(|&s| s == 0.0));
    assert!(report.hourly.iter().all(|h| h.saved_mbits == 0.0));
}

#[test]
fn comparison_re_aggregates() {
    let (p, b) = runs();
    let report = compare(&p.rows(), &b.rows(), 1.0, 300.0).unwrap();
    let mut per_slot = vec![0.0; 1800];
    for (x, y) in p.records.iter().zip(&b.records) {
        per_slot[x.ts_index as usize] += y.qos_p - x.qos_p;
    }
    for (a, e) in report.per_slot_saved_mbps.iter().zip(&per_slot) {
        assert!((a - e).abs() < 1e-9);
    }
    let total: f64 = per_slot.iter().sum();
    assert!((report.total_saved_mbits - total).abs() < 1e-6);
    let hourly: f64 = report.hourly.iter().map(|h| h.saved_mbits).sum();
    assert!((hourly - total).abs() < 1e-6);
    assert_eq!(report.hourly.len(), 1);
    assert!(report.total_saved_mbits > 0.0);
}

#[test]
fn mismatched_runs_are_rejected() {
    let (p, b) = runs();
    let pr = p.rows();
    let br = b.rows();
    assert!(matches!(compare(&pr[1..], &br, 1.0, 0.0), Err(Error::Mismatch(_))));
    let mut shuffled = br.clone();
    shuffled.swap(0, 1);
    assert!(matches!(compare(&pr, &shuffled, 1.0, 0.0), Err(Error::Mismatch(_))));
    assert!(compare(&[], &[], 1.0, 0.0).is_err());
}

#[test]
fn summary_is_recomputable_from_csv() {
    let (p, _) = runs();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    write_results_csv(&path, &p.rows()).unwrap();
    let rows = read_results_csv(&path).unwrap();
    assert_eq!(rows, p.rows());
    let mut again = summarize(&rows, 1.0, 300.0).unwrap();
    again.model_resets = p.summary.model_resets;
    assert_eq!(again, p.summary);
    let header = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "ts_index,user_id,policy,application,location_category,delta_opt_mbps,target_mbps,rbs_used,qos_p_mbps,sat_pred,sat_meas,correct"
    );
    let s = dir.path().join("summary.json");
    write_summary(&s, &p.summary).unwrap();
    assert_eq!(read_summary(&s).unwrap(), p.summary);
}

#[test]
fn development_is_deterministic() {
    let mut c = config();
    c.development.duration_s = 3600.0;
    let a = run_development(&c, 5).unwrap();
    let b = run_development(&c, 5).unwrap();
    assert_eq!(to_text(&a.model), to_text(&b.model));
    assert_eq!(a.report, b.report);
}

#[test]
fn clustered_labels_train_as_well_as_true_ones() {
    let mut c = config();
    for p in &mut c.personas {
        p.tolerance_noise_std = 0.0;
    }
    let labelled = run_development(&c, 8).unwrap();
    c.development.withhold_personas = true;
    let clustered = run_development(&c, 8).unwrap();
    assert!(clustered.clustering.is_some());
    assert!(labelled.report.phase1_accuracy >= 0.99);
    assert!((labelled.report.phase1_accuracy - clustered.report.phase1_accuracy).abs() <= 0.02);
}
