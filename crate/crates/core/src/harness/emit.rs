use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::Format;
use super::run::ExperimentResult;
use super::svg::{Band, LinePlot, Series};
use crate::error::{Error, Result};
use crate::learner::csv_err;

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Serde(format!("{other:?}")),
    })?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn average_loss_plot(r: &ExperimentResult) -> LinePlot {
    let x: Vec<f64> = r.curve.iter().map(|c| c.t as f64).collect();
    LinePlot {
        title: format!("{}: average loss", r.name),
        x_label: "T".into(),
        y_label: "average loss".into(),
        log_x: true,
        log_y: true,
        series: vec![Series {
            name: format!("mean over {} trials", r.trials),
            points: r
                .curve
                .iter()
                .map(|c| (c.t as f64, c.average_loss.mean))
                .collect(),
            color: "#1f4e9c",
            dashed: false,
        }],
        bands: vec![Band {
            x,
            lo: r.curve.iter().map(|c| c.average_loss.lo).collect(),
            hi: r.curve.iter().map(|c| c.average_loss.hi).collect(),
            color: "#1f4e9c",
        }],
    }
}

fn mistakes_plot(r: &ExperimentResult) -> LinePlot {
    let mut series = vec![Series {
        name: "mean cumulative mistakes".into(),
        points: r
            .curve
            .iter()
            .map(|c| (c.t as f64, c.mistakes.mean))
            .collect(),
        color: "#1f4e9c",
        dashed: false,
    }];
    if let Some(b) = &r.bound {
        if let Some(e) = &b.curve.empirical {
            series.push(Series {
                name: "mistake bound (cover grid)".into(),
                points: e.iter().map(|p| (p.t as f64, p.bound)).collect(),
                color: "#b22222",
                dashed: true,
            });
        }
        if let Some(c) = &b.curve.closed_form {
            series.push(Series {
                name: "closed form at r*".into(),
                points: c.iter().map(|p| (p.t as f64, p.optimized)).collect(),
                color: "#2e8b57",
                dashed: true,
            });
        }
    }
    LinePlot {
        title: format!("{}: cumulative mistakes", r.name),
        x_label: "T".into(),
        y_label: "mistakes".into(),
        log_x: true,
        log_y: true,
        series,
        bands: vec![Band {
            x: r.curve.iter().map(|c| c.t as f64).collect(),
            lo: r.curve.iter().map(|c| c.mistakes.lo).collect(),
            hi: r.curve.iter().map(|c| c.mistakes.hi).collect(),
            color: "#1f4e9c",
        }],
    }
}

/// Writes the requested formats into `dir` and returns the paths written:
/// one CSV per curve, SVG plots of average loss and of mistakes (with the
/// bound overlaid when computed), and `result.json`.
pub fn emit_outputs(
    result: &ExperimentResult,
    dir: &Path,
    formats: &[Format],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    if formats.contains(&Format::Csv) {
        let p = dir.join("average_loss.csv");
        write_csv(
            &p,
            &["t", "mean", "sd", "ci_lo", "ci_hi"],
            result.curve.iter().map(|c| {
                let a = c.average_loss;
                vec![
                    c.t.to_string(),
                    num(a.mean),
                    num(a.sd),
                    num(a.lo),
                    num(a.hi),
                ]
            }),
        )?;
        out.push(p);
        let p = dir.join("mistakes.csv");
        write_csv(
            &p,
            &["t", "mean", "sd", "ci_lo", "ci_hi", "median"],
            result.curve.iter().map(|c| {
                let m = c.mistakes;
                vec![
                    c.t.to_string(),
                    num(m.mean),
                    num(m.sd),
                    num(m.lo),
                    num(m.hi),
                    num(c.median_mistakes),
                ]
            }),
        )?;
        out.push(p);
        let p = dir.join("trials.csv");
        write_csv(
            &p,
            &["trial", "mistakes", "average_loss"],
            result.trial_summaries.iter().map(|s| {
                vec![
                    s.trial.to_string(),
                    s.mistakes.to_string(),
                    num(s.average_loss),
                ]
            }),
        )?;
        out.push(p);
        if let Some(b) = &result.bound {
            let p = dir.join("bound.csv");
            let rows = result.checkpoints.iter().enumerate().map(|(j, t)| {
                let e = b.curve.empirical.as_ref().map(|v| &v[j]);
                let c = b.curve.closed_form.as_ref().map(|v| &v[j]);
                vec![
                    t.to_string(),
                    e.map_or(String::new(), |e| num(e.bound)),
                    e.map_or(String::new(), |e| num(e.best_r)),
                    c.map_or(String::new(), |c| num(c.optimized)),
                    c.map_or(String::new(), |c| num(c.rate_form)),
                ]
            });
            write_csv(
                &p,
                &[
                    "t",
                    "cover_bound",
                    "best_r",
                    "closed_form",
                    "closed_form_rate",
                ],
                rows,
            )?;
            out.push(p);
        }
    }
    if formats.contains(&Format::Svg) {
        let p = dir.join("average_loss.svg");
        write_file(&p, &average_loss_plot(result).render())?;
        out.push(p);
        let p = dir.join("mistakes.svg");
        write_file(&p, &mistakes_plot(result).render())?;
        out.push(p);
    }
    if formats.contains(&Format::Json) {
        let p = dir.join("result.json");
        let body = serde_json::to_string_pretty(result).map_err(|e| Error::Serde(e.to_string()))?;
        write_file(&p, &body)?;
        out.push(p);
    }
    Ok(out)
}

pub fn load_result(dir: &Path) -> Result<ExperimentResult> {
    let p = dir.join("result.json");
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Serde(format!("{}: {e}", p.display())))
}

/// Human-readable digest of a result.
pub fn report_text(r: &ExperimentResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "experiment: {}",
        if r.name.is_empty() {
            "(unnamed)"
        } else {
            &r.name
        }
    );
    let _ = writeln!(
        s,
        "seed {}  T {}  trials {}  config {}",
        r.seed,
        r.rounds,
        r.trials,
        &r.config_hash[..r.config_hash.len().min(12)]
    );
    let _ = writeln!(
        s,
        "{:>10} {:>12} {:>24} {:>12}",
        "t", "avg loss", "CI", "mistakes"
    );
    for c in &r.curve {
        let _ = writeln!(
            s,
            "{:>10} {:>12.6} [{:>10.6}, {:>10.6}] {:>12.2}",
            c.t, c.average_loss.mean, c.average_loss.lo, c.average_loss.hi, c.mistakes.mean
        );
    }
    if let Some(f) = &r.exponent {
        if f.undefined {
            let _ = writeln!(s, "exponent: undefined (no mistakes in window)");
        } else {
            let _ = writeln!(
                s,
                "exponent: {:.3}  [{:.3}, {:.3}] over T in [{}, {}]",
                f.alpha, f.ci_lo, f.ci_hi, f.window[0], f.window[1]
            );
        }
    }
    if let Some(a) = &r.azuma {
        let _ = writeln!(
            s,
            "azuma: {}/{} trials deviate (fraction {:.4}, tolerance {:.4})",
            a.violations, a.trials, a.fraction, a.tolerance
        );
    }
    if let Some(b) = &r.bound {
        if let Some(f) = b.fraction_within {
            let _ = writeln!(
                s,
                "bound: {:.1}% of trials within the cover bound",
                100.0 * f
            );
        }
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}
