//! Plain-text report and comma-separated figure data.

use std::fmt::Write as _;

use conformity_stats::{DegreesOfFreedom, Source, TestReport};

use super::{FramingReport, Headline, ReportBundle, Section};

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.4}")
    } else {
        "n/a".to_string()
    }
}

fn pval(p: f64) -> String {
    if p < 0.001 {
        "< 0.001".to_string()
    } else {
        format!("= {p:.4}")
    }
}

fn df(d: &DegreesOfFreedom) -> String {
    match d {
        DegreesOfFreedom::One(a) => trim(*a),
        DegreesOfFreedom::Two(a, b) => format!("{}, {}", trim(*a), trim(*b)),
    }
}

fn trim(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

fn test_line(r: &TestReport) -> String {
    let verdict = if r.reject_null { "reject H0" } else { "fail to reject H0" };
    let mut s = format!(
        "{}: stat({}) = {}, p {}, {verdict} at alpha = {}",
        r.test_name,
        df(&r.df),
        num(r.statistic),
        pval(r.p_value),
        r.alpha
    );
    for n in &r.notes {
        let _ = write!(s, " [note: {n}]");
    }
    s
}

fn section_line(s: &Section<TestReport>, label: &str) -> String {
    match s {
        Section::Done(r) => test_line(r),
        Section::Skipped(why) => format!("{label}: skipped ({why})"),
    }
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::A => "majority",
        Source::B => "intelligence",
        Source::AB => "majority x intelligence",
        Source::Error => "error",
        Source::Total => "total",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), num)
}

fn render_framing(out: &mut String, f: &FramingReport) {
    let _ = writeln!(out, "== Framing: {} ({} debates) ==\n", f.framing.as_str(), f.debates);

    if !f.table2.is_empty() {
        let _ = writeln!(out, "-- Conformity by scenario --");
        let _ = writeln!(
            out,
            "{:<4}{:<9}{:<12}{:<12}{:>8}{:>8}{:>12}{:>12}{:>9}{:>7}",
            "exp",
            "scenario",
            "proponents",
            "opponents",
            "debates",
            "turns",
            "CR micro %",
            "CR macro %",
            "FCR %",
            "early"
        );
        for row in &f.table2 {
            let key = format!("{}/{}", row.experiment.as_str(), row.scenario_id);
            let (pro, opp) = f.scenarios.get(&key).map_or_else(
                || ("?".to_string(), "?".to_string()),
                |s| {
                    (
                        format!("{} {:?}", s.proponent_count, s.proponent_size),
                        format!("{} {:?}", s.opponent_count, s.opponent_size),
                    )
                },
            );
            let s = &row.summary;
            let _ = writeln!(
                out,
                "{:<4}{:<9}{:<12}{:<12}{:>8}{:>8}{:>12.2}{:>12.2}{:>9.2}{:>7}",
                row.experiment.as_str(),
                row.scenario_id,
                pro,
                opp,
                s.total_discussions,
                s.total_evaluated_turns,
                100.0 * s.cr_micro,
                100.0 * s.cr_macro,
                100.0 * s.fcr,
                s.early_terminated
            );
        }
        let _ =
            writeln!(out, "CR micro pools evaluated turns and is the headline; CR macro averages per-debate rates.\n");
    }

    if !f.chi_square.is_empty() || !f.chi_square_skipped.is_empty() {
        let _ = writeln!(out, "-- Chi-square tests of independence (turn level) --");
        for c in &f.chi_square {
            let t = &c.table;
            let _ = writeln!(out, "{}: {} vs {}", c.name, t.row_labels[0], t.row_labels[1]);
            let _ = writeln!(out, "  {:<12}{:>11}{:>11}", "", t.col_labels[0], t.col_labels[1]);
            for i in 0..2 {
                let _ = writeln!(out, "  {:<12}{:>11}{:>11}", t.row_labels[i], t.observed[i][0], t.observed[i][1]);
            }
            match &c.test {
                Section::Done(r) => {
                    let _ = writeln!(
                        out,
                        "  chi2(1, N = {}) = {}, p {}, {} at alpha = {}",
                        t.total(),
                        num(r.statistic),
                        pval(r.p_value),
                        if r.reject_null { "reject H0" } else { "fail to reject H0" },
                        r.alpha
                    );
                    for n in &r.notes {
                        let _ = writeln!(out, "  note: {n}");
                    }
                }
                Section::Skipped(why) => {
                    let _ = writeln!(out, "  skipped: {why}");
                }
            }
        }
        for s in &f.chi_square_skipped {
            let _ = writeln!(out, "{s}");
        }
        let _ = writeln!(out);
    }

    if let Some(tw) = &f.two_way {
        let _ = writeln!(out, "-- Two-way ANOVA on per-debate CR: majority x intelligence --");
        match tw {
            Section::Done(r) => {
                let t = &r.table;
                let _ = writeln!(
                    out,
                    "levels: majority {{{}}}, intelligence {{{}}}, {} debates per cell",
                    t.a_levels.join(", "),
                    t.b_levels.join(", "),
                    t.reps_per_cell
                );
                let _ = writeln!(
                    out,
                    "{:<26}{:>12}{:>8}{:>12}{:>10}{:>10}{:>10}{:>10}",
                    "source", "SS", "df", "MS", "F", "p", "eta_p2", "power"
                );
                for row in &t.rows {
                    let effect = r.effects.iter().find(|e| e.source == row.source);
                    let eta = effect.and_then(|e| e.effect.done()).map(|e| e.eta_p_squared);
                    let power = effect.and_then(|e| e.power.done()).copied();
                    let _ = writeln!(
                        out,
                        "{:<26}{:>12}{:>8}{:>12}{:>10}{:>10}{:>10}{:>10}",
                        source_name(row.source),
                        num(row.ss),
                        trim(row.df),
                        opt(row.ms),
                        opt(row.f),
                        opt(row.p_value),
                        opt(eta),
                        opt(power)
                    );
                }
                if t.degenerate {
                    let _ = writeln!(out, "degenerate: zero error variance, F undefined");
                }
            }
            Section::Skipped(why) => {
                let _ = writeln!(out, "skipped: {why}");
            }
        }
        let _ = writeln!(out);
    }

    for factor in &f.factors {
        match factor {
            Section::Done(r) => {
                let _ = writeln!(out, "-- One-way analysis of per-debate CR by {} (N = {}) --", r.factor, r.n_total);
                let _ = writeln!(out, "{:<14}{:>8}{:>10}{:>10}", "level", "n", "mean", "sd");
                for l in &r.levels {
                    let _ = writeln!(out, "{:<14}{:>8}{:>10}{:>10}", l.level, l.n, num(l.mean), num(l.sd));
                }
                let _ = writeln!(out, "{}", section_line(&r.shapiro_wilk, "Shapiro-Wilk"));
                let _ = writeln!(out, "{}", section_line(&r.levene, "Levene"));
                let _ = writeln!(out, "{}", section_line(&r.classic, "one-way ANOVA"));
                let _ = writeln!(out, "{}", section_line(&r.welch, "Welch ANOVA"));
                let path = match r.headline {
                    Headline::Classic => "classic",
                    Headline::Welch => "welch",
                };
                let _ = writeln!(out, "headline path: {path}. {}", r.headline_reason);
                match &r.effect {
                    Section::Done(e) => {
                        let _ = writeln!(
                            out,
                            "eta_p2 = {} ({}), from the classic sum-of-squares split; when Welch is headline this is descriptive only",
                            num(e.eta_p_squared),
                            e.band.as_str()
                        );
                    }
                    Section::Skipped(why) => {
                        let _ = writeln!(out, "eta_p2: skipped ({why})");
                    }
                }
                match &r.power {
                    Section::Done(p) => {
                        let _ = writeln!(out, "post hoc power = {}", num(*p));
                    }
                    Section::Skipped(why) => {
                        let _ = writeln!(out, "post hoc power: skipped ({why})");
                    }
                }
                match &r.games_howell {
                    Section::Done(pairs) => {
                        let _ = writeln!(out, "Games-Howell:");
                        for c in pairs {
                            let _ = writeln!(
                                out,
                                "  {} vs {}: diff = {}, se = {}, q = {}, df = {}, p {}",
                                r.levels[c.first].level,
                                r.levels[c.second].level,
                                num(c.mean_difference),
                                num(c.standard_error),
                                num(c.report.statistic),
                                df(&c.report.df),
                                pval(c.report.p_value)
                            );
                        }
                    }
                    Section::Skipped(why) => {
                        let _ = writeln!(out, "Games-Howell: skipped ({why})");
                    }
                }
            }
            Section::Skipped(why) => {
                let _ = writeln!(out, "-- One-way analysis --\nskipped: {why}");
            }
        }
        let _ = writeln!(out);
    }

    if !f.histogram.is_empty() {
        let _ = writeln!(out, "-- Per-debate CR distribution by topic and scenario --");
        let _ = writeln!(out, "counts per bucket k/turns, k = 0..turns; (early-terminated in parentheses)");
        for c in &f.histogram {
            let cells: Vec<String> = c
                .counts
                .iter()
                .zip(&c.early_terminated)
                .enumerate()
                .map(|(k, (n, e))| format!("{k}/{}: {n} ({e})", c.turns))
                .collect();
            let _ =
                writeln!(out, "{} {:<14}{:<8}{}", c.experiment.as_str(), c.topic_id, c.scenario_id, cells.join("  "));
        }
        let _ = writeln!(out);
    }

    if let Some(sweep) = &f.ratio_sweep {
        let _ = writeln!(out, "-- CR toward the majority by majority ratio (99% Wilson interval) --");
        match sweep {
            Section::Done(s) => {
                let _ = writeln!(
                    out,
                    "{:<16}{:>6}{:>9}{:>10}{:>10}{:>10}{:>10}",
                    "pairing", "ratio", "debates", "turns", "CR", "low", "high"
                );
                for p in &s.points {
                    let _ = writeln!(
                        out,
                        "{:<16}{:>6}{:>9}{:>10}{:>10}{:>10}{:>10}",
                        p.pairing,
                        p.ratio,
                        p.debates,
                        p.total_turns,
                        num(p.cr_majority),
                        num(p.ci99.low),
                        num(p.ci99.high)
                    );
                }
                for g in &s.gaps {
                    let _ = writeln!(out, "gap: {g}");
                }
            }
            Section::Skipped(why) => {
                let _ = writeln!(out, "skipped: {why}");
            }
        }
        let _ = writeln!(out);
    }
}

pub fn render_text(bundle: &ReportBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Conformity analysis");
    let _ = writeln!(
        out,
        "debates analyzed: {}, failed runs excluded: {}, alpha = {}, chi-square correction: {:?}\n",
        bundle.debates, bundle.failed_runs, bundle.spec.alpha, bundle.spec.correction
    );
    for f in &bundle.sections {
        render_framing(&mut out, f);
    }
    out
}

fn to_csv(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Figure data as (file name, contents).
pub fn figure_files(bundle: &ReportBundle) -> Vec<(String, String)> {
    let mut table2 = Vec::new();
    let mut hist = Vec::new();
    let mut sweep = Vec::new();
    let mut chi = Vec::new();
    for f in &bundle.sections {
        let framing = f.framing.as_str().to_string();
        for r in &f.table2 {
            let s = &r.summary;
            table2.push(vec![
                framing.clone(),
                r.experiment.as_str().to_string(),
                r.scenario_id.clone(),
                s.total_discussions.to_string(),
                s.total_evaluated_turns.to_string(),
                s.proponent_supported_turns.to_string(),
                format!("{:.2}", 100.0 * s.cr_micro),
                format!("{:.2}", 100.0 * s.cr_macro),
                format!("{:.2}", 100.0 * s.fcr),
                s.early_terminated.to_string(),
            ]);
        }
        for c in &f.histogram {
            for (k, (n, e)) in c.counts.iter().zip(&c.early_terminated).enumerate() {
                hist.push(vec![
                    framing.clone(),
                    c.experiment.as_str().to_string(),
                    c.topic_id.clone(),
                    c.scenario_id.clone(),
                    format!("{k}/{}", c.turns),
                    n.to_string(),
                    e.to_string(),
                ]);
            }
        }
        if let Some(Section::Done(s)) = &f.ratio_sweep {
            for p in &s.points {
                sweep.push(vec![
                    framing.clone(),
                    p.pairing.clone(),
                    p.ratio.to_string(),
                    p.debates.to_string(),
                    p.majority_turns.to_string(),
                    p.total_turns.to_string(),
                    format!("{:.6}", p.cr_majority),
                    format!("{:.6}", p.ci99.low),
                    format!("{:.6}", p.ci99.high),
                ]);
            }
        }
        for c in &f.chi_square {
            let (stat, p, reject) = match &c.test {
                Section::Done(r) => {
                    (format!("{:.6}", r.statistic), format!("{:.6e}", r.p_value), r.reject_null.to_string())
                }
                Section::Skipped(_) => (String::new(), String::new(), String::new()),
            };
            let t = &c.table;
            chi.push(vec![
                framing.clone(),
                c.name.clone(),
                t.row_labels[0].clone(),
                t.observed[0][0].to_string(),
                t.observed[0][1].to_string(),
                t.row_labels[1].clone(),
                t.observed[1][0].to_string(),
                t.observed[1][1].to_string(),
                stat,
                p,
                reject,
            ]);
        }
    }
    vec![
        (
            "table2.csv".into(),
            to_csv(
                &[
                    "framing",
                    "experiment",
                    "scenario",
                    "debates",
                    "turns",
                    "pro_turns",
                    "cr_micro_pct",
                    "cr_macro_pct",
                    "fcr_pct",
                    "early_terminated",
                ],
                table2,
            ),
        ),
        (
            "topic_histogram.csv".into(),
            to_csv(&["framing", "experiment", "topic", "scenario", "bucket", "count", "early_terminated"], hist),
        ),
        (
            "ratio_sweep.csv".into(),
            to_csv(
                &[
                    "framing",
                    "pairing",
                    "ratio",
                    "debates",
                    "majority_turns",
                    "turns",
                    "cr_majority",
                    "ci99_low",
                    "ci99_high",
                ],
                sweep,
            ),
        ),
        (
            "chi_square.csv".into(),
            to_csv(
                &[
                    "framing",
                    "test",
                    "row1",
                    "row1_pro",
                    "row1_opp",
                    "row2",
                    "row2_pro",
                    "row2_opp",
                    "chi2",
                    "p_value",
                    "reject_h0",
                ],
                chi,
            ),
        ),
    ]
}
