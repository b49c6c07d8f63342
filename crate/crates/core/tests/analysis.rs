mod common;

use conformity_core::analysis::{
    analyze, figure_files, ratio_sweep, render_text, table2, table2_from_summary, topic_histogram, wilson_interval,
    AnalysisSpec, Section,
};
use conformity_core::backends::{ModeratorRule, ScriptedBackend};
use conformity_core::domain::{Framing, Outcome, Side};
use conformity_core::runner::{
    build_experiment_a_grid, build_experiment_b_grid, run_grid, RunOptions, Store, StoredDebate,
};

use common::{majority_script, router, scripted_config, simulate, template_script};

fn rule(
    scenario: Option<&str>,
    topic: Option<&str>,
    p_proponent: Option<f64>,
    p_majority: Option<f64>,
) -> ModeratorRule {
    ModeratorRule {
        scenario: scenario.map(str::to_string),
        topic: topic.map(str::to_string),
        pairing: None,
        p_proponent,
        p_majority,
    }
}

fn refs(ds: &[StoredDebate]) -> Vec<&StoredDebate> {
    ds.iter().collect()
}

#[test]
fn table2_recomputes_from_summary_alone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scripted_config(2, 17);
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    // two-opponent scenarios concede in the last turn
    let script = majority_script(0.7).with_line("opp_2", 3, 2, "Complete agreement.");
    run_grid(&grid, &router(script), dir.path(), &RunOptions::default()).unwrap();
    let store = Store::new(dir.path());
    let debates = store.load_transcripts().unwrap();
    let from_transcripts = table2(&refs(&debates));
    let from_summary = table2_from_summary(&store.load_summary().unwrap());
    assert_eq!(from_transcripts.len(), 10);
    assert_eq!(from_transcripts, from_summary);
    assert!(from_transcripts.iter().any(|r| r.summary.early_terminated > 0));
}

#[test]
fn analysis_is_a_pure_function_of_the_store() {
    let cfg = scripted_config(2, 23);
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let mut debates = simulate(&grid, &ScriptedBackend::new(majority_script(0.65)));
    let spec = AnalysisSpec::default();
    let a = analyze(&debates, 0, &spec).unwrap();
    debates.reverse();
    let b = analyze(&debates, 0, &spec).unwrap();
    assert_eq!(render_text(&a), render_text(&b));
    assert_eq!(figure_files(&a), figure_files(&b));
    let text = render_text(&a);
    assert!(text.contains("headline path:"));
    assert!(text.contains("H1 pool: a+c vs b+d"));
}

#[test]
fn all_proponent_store_is_degenerate() {
    let cfg = scripted_config(2, 29);
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let backend = ScriptedBackend::new(template_script().with_rule(rule(None, None, Some(1.0), None)));
    let debates = simulate(&grid, &backend);
    let bundle = analyze(&debates, 0, &AnalysisSpec::default()).unwrap();
    let f = &bundle.sections[0];
    for row in &f.table2 {
        assert_eq!(row.summary.cr_micro, 1.0);
        assert_eq!(row.summary.fcr, 1.0);
    }
    match f.two_way.as_ref().unwrap() {
        Section::Done(t) => assert!(t.table.degenerate),
        Section::Skipped(why) => panic!("two-way skipped: {why}"),
    }
    // no variance: the chi-square has a zero margin and Welch is undefined
    assert!(f.chi_square.iter().all(|c| matches!(c.test, Section::Skipped(_))));
    let text = render_text(&bundle);
    assert!(text.contains("100.00"));
    assert!(text.contains("degenerate"));
}

#[test]
fn missing_groups_are_skipped_with_a_reason() {
    let mut cfg = scripted_config(3, 31);
    cfg.scenarios.retain(|s| s.id == "a");
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let debates = simulate(&grid, &ScriptedBackend::new(majority_script(0.6)));
    let bundle = analyze(&debates, 0, &AnalysisSpec::default()).unwrap();
    let f = &bundle.sections[0];
    assert!(f.chi_square_skipped.iter().any(|s| s.starts_with("H1 pool: skipped")));
    assert!(matches!(f.two_way, Some(Section::Skipped(_))));
    assert!(f.factors.iter().all(|x| matches!(x, Section::Skipped(_))));
}

fn with_verdicts(mut d: StoredDebate, sides: &[Side]) -> StoredDebate {
    for (turn, side) in d.transcript.turns.iter_mut().zip(sides) {
        turn.verdict.selected_side = *side;
        turn.verdict.selected_agent_id = format!("{}_1", side.id_prefix());
    }
    d.transcript.outcome = Outcome::recount(&d.transcript.turns);
    d
}

#[test]
fn histogram_counts_debates_per_bucket() {
    use Side::{Opponent as O, Proponent as P};
    let mut cfg = scripted_config(10, 37);
    cfg.topics.truncate(1);
    cfg.scenarios.retain(|s| s.id == "a");
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let base = simulate(&grid, &ScriptedBackend::new(template_script()));
    let patterns =
        [[P, P, P], [P, P, P], [P, P, P], [P, P, P], [P, P, O], [P, P, O], [P, P, O], [O, O, O], [O, O, O], [O, O, O]];
    let debates: Vec<StoredDebate> = base.into_iter().zip(patterns).map(|(d, p)| with_verdicts(d, &p)).collect();
    let cells = topic_histogram(&refs(&debates));
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].counts, vec![3, 0, 3, 4]);
    assert_eq!(cells[0].total(), 10);
}

#[test]
fn topic_bias_shifts_histogram_mass() {
    let cfg = scripted_config(4, 41);
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let script = template_script().with_rule(rule(None, Some("death_penalty"), Some(0.2), None)).with_rule(rule(
        None,
        None,
        Some(0.5),
        None,
    ));
    let debates = simulate(&grid, &ScriptedBackend::new(script));
    let cells = topic_histogram(&refs(&debates));
    let mut mean_bucket = std::collections::BTreeMap::<String, (f64, u64)>::new();
    for c in &cells {
        assert_eq!(c.total(), 4, "every cell holds its debates");
        let e = mean_bucket.entry(c.topic_id.clone()).or_default();
        e.0 += c.counts.iter().enumerate().map(|(k, n)| k as f64 * *n as f64).sum::<f64>();
        e.1 += c.total();
    }
    let mean = |t: &str| mean_bucket[t].0 / mean_bucket[t].1 as f64;
    for topic in ["ubi", "immigration", "education", "wage_gap"] {
        assert!(mean("death_penalty") < mean(topic), "{topic}");
    }
}

fn sweep_script(ps: [(u32, f64); 3]) -> conformity_core::backends::Script {
    let mut s = template_script();
    for (r, p) in ps {
        for id in [format!("{r}:1"), format!("1:{r}")] {
            s = s.with_rule(rule(Some(&id), None, None, Some(p)));
        }
    }
    s
}

#[test]
fn ratio_sweep_recovers_monotone_series() {
    let cfg = scripted_config(20, 43);
    let grid = build_experiment_b_grid(&cfg, Framing::Original).unwrap();
    let truth = [(2, 0.55), (4, 0.65), (8, 0.75)];
    let debates = simulate(&grid, &ScriptedBackend::new(sweep_script(truth)));
    let Section::Done(sweep) = ratio_sweep(&refs(&debates), &[2, 4, 8]) else { panic!("sweep skipped") };
    assert!(sweep.gaps.is_empty());
    assert_eq!(sweep.points.len(), 6);
    for model in ["big", "small"] {
        let pts: Vec<_> = sweep.points.iter().filter(|p| p.pairing == model).collect();
        assert_eq!(pts.iter().map(|p| p.ratio).collect::<Vec<_>>(), vec![2, 4, 8]);
        for (p, (_, t)) in pts.iter().zip(truth) {
            assert_eq!(p.total_turns, 600);
            assert!(p.ci99.low <= t && t <= p.ci99.high, "{model} ratio {}: {} not in {:?}", p.ratio, t, p.ci99);
        }
        assert!(pts[0].cr_majority < pts[1].cr_majority && pts[1].cr_majority < pts[2].cr_majority);
    }
}

#[test]
fn balanced_sweep_is_flat_and_gaps_are_flagged() {
    let mut cfg = scripted_config(10, 47);
    cfg.experiment_b.ratios = vec![2, 4];
    let grid = build_experiment_b_grid(&cfg, Framing::Original).unwrap();
    let debates = simulate(&grid, &ScriptedBackend::new(majority_script(0.5)));
    let Section::Done(sweep) = ratio_sweep(&refs(&debates), &[2, 4, 8]) else { panic!("sweep skipped") };
    for p in &sweep.points {
        assert!(p.ci99.low <= 0.5 && 0.5 <= p.ci99.high, "{p:?}");
    }
    assert_eq!(sweep.gaps, vec!["big: ratio 8 missing".to_string(), "small: ratio 8 missing".to_string()]);
}

#[test]
fn wilson_interval_matches_reference() {
    // 50 of 100 at 95%: 0.40383, 0.59617
    let ci = wilson_interval(50, 100, 0.95).unwrap();
    assert!((ci.low - 0.403_832).abs() < 1e-5 && (ci.high - 0.596_168).abs() < 1e-5, "{ci:?}");
    let edge = wilson_interval(0, 10, 0.99).unwrap();
    assert_eq!(edge.low, 0.0);
    assert!(edge.high > 0.0 && edge.high < 1.0);
    assert!(wilson_interval(0, 0, 0.99).is_err());
}

#[test]
fn contingency_margins_equal_evaluated_turns() {
    let cfg = scripted_config(3, 53);
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let debates = simulate(&grid, &ScriptedBackend::new(majority_script(0.7)));
    let bundle = analyze(&debates, 0, &AnalysisSpec::default()).unwrap();
    let h1 = bundle.sections[0].chi_square.iter().find(|c| c.name == "H1 pool").unwrap();
    let turns = |ids: [&str; 2]| -> u64 {
        debates
            .iter()
            .filter(|d| ids.contains(&d.scenario_id.as_str()))
            .map(|d| d.transcript.outcome.total_evaluated_turns as u64)
            .sum()
    };
    assert_eq!(h1.table.row_totals(), [turns(["a", "c"]), turns(["b", "d"])]);
}

#[test]
fn duplicate_runs_fail_the_integrity_check() {
    let mut cfg = scripted_config(1, 59);
    cfg.topics.truncate(1);
    let grid = build_experiment_a_grid(&cfg, Framing::Original).unwrap();
    let mut debates = simulate(&grid, &ScriptedBackend::new(template_script()));
    debates.push(debates[0].clone());
    assert!(analyze(&debates, 0, &AnalysisSpec::default()).is_err());
    assert!(analyze(&[], 0, &AnalysisSpec::default()).is_err());
}
