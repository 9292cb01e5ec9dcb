use std::fmt::Write as _;
use std::io::Write;

use super::aggregate::EvalReport;

fn table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let cols = header.len();
    let mut width = vec![0; cols];
    for r in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (i, c) in r.iter().enumerate() {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let line = |out: &mut String, r: &[String]| {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = width[i]) } else { format!("{c:>w$}", w = width[i]) })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    };
    line(out, header);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    line(out, &rule);
    for r in rows {
        line(out, r);
    }
}

pub fn format_plr(plr: Option<f64>) -> String {
    match plr {
        Some(p) => format!("{:.1}", p * 100.0),
        None => "n/a".into(),
    }
}

/// Aligned-text rendering: mean PAES per scenario, then PLR and
/// hallucination counts per backend.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let mut header = vec!["Scenario".to_string()];
    header.extend(report.backends.iter().cloned());
    let rows: Vec<Vec<String>> = report
        .scenarios
        .iter()
        .map(|s| {
            let mut r = vec![s.clone()];
            for b in &report.backends {
                r.push(match report.mean_paes(s, b) {
                    Some(p) => format!("{p:.2}/5"),
                    None => "-".into(),
                });
            }
            r
        })
        .collect();
    out.push_str("Mean PAES per scenario\n\n");
    table(&mut out, &header, &rows);

    let mut header = vec!["Metric".to_string()];
    header.extend(report.backends.iter().cloned());
    let metric = |name: &str, f: &dyn Fn(&super::aggregate::BackendMetrics) -> String| {
        let mut r = vec![name.to_string()];
        r.extend(report.metrics.iter().map(f));
        r
    };
    let rows = vec![
        metric("PLR (%)", &|m| format_plr(m.plr)),
        metric("Bandwidth estimates", &|m| (m.leaked + m.grounded).to_string()),
        metric("False-negative halluc.", &|m| m.false_negative_count.to_string()),
        metric("Tech.-label halluc.", &|m| m.tech_label_count.to_string()),
        metric("Total halluc. count", &|m| m.total_hallucinations.to_string()),
        metric("Failed trials", &|m| m.failed.to_string()),
    ];
    out.push_str("\nPrompt leakage and hallucinations\n\n");
    table(&mut out, &header, &rows);
    out
}

pub fn write_paes_csv<W: Write>(w: W, report: &EvalReport) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["scenario", "backend", "trials", "mean_paes"])?;
    for s in &report.paes {
        wr.write_record([
            s.scenario.clone(),
            s.backend.clone(),
            s.trials.to_string(),
            format!("{:.4}", s.mean_paes),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_metrics_csv<W: Write>(w: W, report: &EvalReport) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "backend",
        "responses",
        "failed",
        "leaked",
        "grounded",
        "no_bandwidth_estimate",
        "plr_percent",
        "false_negative",
        "tech_label",
        "total_hallucinations",
    ])?;
    for m in &report.metrics {
        wr.write_record([
            m.backend.clone(),
            m.responses.to_string(),
            m.failed.to_string(),
            m.leaked.to_string(),
            m.grounded.to_string(),
            m.no_bandwidth_estimate.to_string(),
            format_plr(m.plr),
            m.false_negative_count.to_string(),
            m.tech_label_count.to_string(),
            m.total_hallucinations.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}
