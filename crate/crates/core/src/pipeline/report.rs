//! Plain-text tables of fitted models and comparisons.

use std::fmt::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tables::ComparisonRow;
use crate::demand::{ci_containment, Containment, ElasticityReport, ModelFit, ModelSpec, Z95};
use crate::error::{Error, Result};

const W: usize = 12;

fn star(est: f64, se: f64) -> &'static str {
    if se > 0.0 && (est / se).abs() > Z95 {
        "*"
    } else {
        " "
    }
}

fn mark(inside: Option<bool>) -> &'static str {
    match inside {
        Some(true) => " ✓",
        Some(false) => " X",
        None => "",
    }
}

fn header(out: &mut String, types: &[String]) {
    let _ = write!(out, "{:<W$}", "");
    for t in types {
        let _ = write!(out, "{t:>W$}");
    }
    out.push('\n');
}

fn matrix_block(
    out: &mut String,
    title: &str,
    types: &[String],
    est: &[Vec<f64>],
    se: &[Vec<f64>],
    marks: Option<&[Vec<bool>]>,
) {
    let _ = writeln!(out, "{title}");
    header(out, types);
    for (i, ti) in types.iter().enumerate() {
        let _ = write!(out, "{ti:<W$}");
        for j in 0..types.len() {
            let cell = format!(
                "{:.4}{}{}",
                est[i][j],
                star(est[i][j], se[i][j]),
                mark(marks.map(|m| m[i][j]))
            );
            let _ = write!(out, "{cell:>W$}");
        }
        out.push('\n');
        let _ = write!(out, "{:<W$}", "");
        for j in 0..types.len() {
            let cell = format!("({:.4})", se[i][j]);
            let _ = write!(out, "{cell:>W$}");
        }
        out.push('\n');
    }
    out.push('\n');
}

fn vector_block(out: &mut String, title: &str, types: &[String], est: &[f64], se: &[f64], marks: Option<&[bool]>) {
    let _ = writeln!(out, "{title}");
    header(out, types);
    let _ = write!(out, "{:<W$}", "Estimate");
    for i in 0..types.len() {
        let cell = format!("{:.4}{}{}", est[i], star(est[i], se[i]), mark(marks.map(|m| m[i])));
        let _ = write!(out, "{cell:>W$}");
    }
    out.push('\n');
    let _ = write!(out, "{:<W$}", "S.E.");
    for s in se {
        let cell = format!("({s:.4})");
        let _ = write!(out, "{cell:>W$}");
    }
    out.push_str("\n\n");
}

fn statistics(out: &mut String, fit: &ModelFit) {
    let f = &fit.fit;
    let _ = writeln!(out, "Statistics");
    match &f.criteria {
        Some(c) => {
            let _ = writeln!(out, "{:<24}{:>14.3}", "LogL", c.log_likelihood);
            let _ = writeln!(out, "{:<24}{:>14}", "Parameters Estimated", f.k);
            let _ = writeln!(out, "{:<24}{:>14}", "N", f.n_obs);
            let _ = writeln!(out, "{:<24}{:>14.3}", "AIC", c.aic);
            let _ = writeln!(out, "{:<24}{:>14.3}", "BIC", c.bic);
        }
        None => {
            let _ = writeln!(out, "{:<24}{:>14}", "LogL", "exact fit");
            let _ = writeln!(out, "{:<24}{:>14}", "Parameters Estimated", f.k);
            let _ = writeln!(out, "{:<24}{:>14}", "N", f.n_obs);
        }
    }
    let _ = writeln!(out, "{:<24}{:>14}", "FGLS iterations", f.iterations);
    out.push('\n');
}

fn title(spec: &ModelSpec) -> &'static str {
    match spec {
        ModelSpec::Original => "Rotterdam model",
        ModelSpec::Dm { .. } => "Distance-metric Rotterdam model",
        ModelSpec::Hm { .. } => "Hedonic-metric Rotterdam model",
    }
}

/// Elasticity tables and statistics of one model. Marks show interval
/// containment against a baseline when `containment` is given.
pub fn render_model(name: &str, fit: &ModelFit, rep: &ElasticityReport, containment: Option<&Containment>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "== {name}: {} ({}), elasticities at sample means, N={} ==\n",
        title(&fit.spec),
        fit.spec,
        fit.fit.n_obs
    );
    if !matches!(fit.spec, ModelSpec::Original) {
        let _ = writeln!(out, "Shared parameters");
        let _ = writeln!(out, "{:<28}{:>14}{:>14}", "", "Estimate", "S.E.");
        for name in fit.spec.shared_names() {
            let est = fit.coef(&name).unwrap_or(f64::NAN);
            let se = fit.std_error(&name).unwrap_or(f64::NAN);
            let cell = format!("{est:.4}{}", star(est, se));
            let _ = writeln!(out, "{name:<28}{cell:>14}{se:>14.4}");
        }
        out.push('\n');
    }
    let types = &rep.types;
    if containment.is_none() {
        matrix_block(
            &mut out,
            "Hicksian (compensated) elasticities",
            types,
            &rep.hicksian,
            &rep.hicksian_se,
            None,
        );
    }
    matrix_block(
        &mut out,
        "Marshallian (uncompensated) elasticities",
        types,
        &rep.marshallian,
        &rep.marshallian_se,
        containment.map(|c| c.marshallian.as_slice()),
    );
    vector_block(
        &mut out,
        "Expenditure elasticities",
        types,
        &rep.expenditure,
        &rep.expenditure_se,
        containment.map(|c| c.expenditure.as_slice()),
    );
    statistics(&mut out, fit);
    out.push_str("* |estimate / s.e.| > 1.96");
    if containment.is_some() {
        out.push_str("; ✓ inside, X outside the baseline's 95% interval");
    }
    out.push_str("\n\n");
    out
}

/// A candidate fit checked against a baseline fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub candidate: String,
    pub baseline: String,
    pub containment: Containment,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "== {} against {} ==\n", self.candidate, self.baseline);
        let c = &self.containment;
        let _ = writeln!(out, "Marshallian elasticities inside the baseline 95% interval");
        header(&mut out, &c.types);
        for (i, t) in c.types.iter().enumerate() {
            let _ = write!(out, "{t:<W$}");
            for inside in &c.marshallian[i] {
                let _ = write!(out, "{:>W$}", if *inside { "✓" } else { "X" });
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<W$}", "Expenditure");
        for inside in &c.expenditure {
            let _ = write!(out, "{:>W$}", if *inside { "✓" } else { "X" });
        }
        out.push_str("\n\n");
        let _ = writeln!(out, "{:<24}{:>16}{:>16}", "", self.candidate, self.baseline);
        let num = |v: Option<f64>| v.map_or_else(|| "exact fit".to_string(), |x| format!("{x:.3}"));
        let (a, b) = (&self.rows[0], &self.rows[1]);
        let _ = writeln!(
            out,
            "{:<24}{:>16}{:>16}",
            "LogL",
            num(a.log_likelihood),
            num(b.log_likelihood)
        );
        let _ = writeln!(
            out,
            "{:<24}{:>16}{:>16}",
            "Parameters Estimated", a.parameters, b.parameters
        );
        let _ = writeln!(out, "{:<24}{:>16}{:>16}", "N", a.observations, b.observations);
        let _ = writeln!(out, "{:<24}{:>16}{:>16}", "AIC", num(a.aic), num(b.aic));
        let _ = writeln!(out, "{:<24}{:>16}{:>16}", "BIC", num(a.bic), num(b.bic));
        let _ = writeln!(out, "{:<24}{:>16}", "Cells outside", c.outside_count());
        out
    }
}

/// Interval containment of `candidate`'s elasticities in `baseline`'s, plus
/// both fits' statistics.
pub fn compare(candidate: (&str, &ModelFit), baseline: (&str, &ModelFit)) -> Result<Comparison> {
    if candidate.1.types != baseline.1.types {
        return Err(Error::invalid(format!(
            "fits cover different product types: [{}] and [{}]",
            candidate.1.types.join(", "),
            baseline.1.types.join(", ")
        )));
    }
    let containment = ci_containment(&candidate.1.elasticities()?, &baseline.1.elasticities()?)?;
    let outside = containment.outside_count();
    Ok(Comparison {
        candidate: candidate.0.to_string(),
        baseline: baseline.0.to_string(),
        rows: vec![
            ComparisonRow::new(candidate.0, candidate.1, Some(outside)),
            ComparisonRow::new(baseline.0, baseline.1, None),
        ],
        containment,
    })
}

/// [`compare`] on two serialized fits, labelled by file stem.
pub fn compare_files(candidate: impl AsRef<Path>, baseline: impl AsRef<Path>) -> Result<Comparison> {
    let label = |p: &Path| {
        p.file_stem()
            .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
    };
    let (pa, pb) = (candidate.as_ref(), baseline.as_ref());
    let a = ModelFit::load(pa)?;
    let b = ModelFit::load(pb)?;
    compare((&label(pa), &a), (&label(pb), &b))
}
