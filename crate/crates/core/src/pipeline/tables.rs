//! CSV tables written by the pipeline, each with a matching loader.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::demand::{Containment, ElasticityReport, ModelFit};
use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64, CsvTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub parameter: String,
    /// `free` for estimated parameters, `full` for the expanded system.
    pub kind: String,
    pub estimate: f64,
    pub std_error: f64,
}

/// Free parameters followed by the full expanded coefficient vector.
pub fn coefficient_rows(fit: &ModelFit) -> Vec<CoefficientRow> {
    let f = &fit.fit;
    let free = f.free_names.iter().enumerate().map(|(k, name)| CoefficientRow {
        parameter: name.clone(),
        kind: "free".into(),
        estimate: f.free[k],
        std_error: f.free_cov[k][k].max(0.0).sqrt(),
    });
    let full = f.full_names.iter().enumerate().map(|(k, name)| CoefficientRow {
        parameter: name.clone(),
        kind: "full".into(),
        estimate: f.full[k],
        std_error: f.full_cov[k][k].max(0.0).sqrt(),
    });
    free.chain(full).collect()
}

pub fn write_coefficients(path: impl AsRef<Path>, rows: &[CoefficientRow]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["parameter", "kind", "estimate", "std_error"])?;
    for r in rows {
        w.write_record([
            r.parameter.as_str(),
            &r.kind,
            &fmt_f64(r.estimate),
            &fmt_f64(r.std_error),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_coefficients(path: impl AsRef<Path>) -> Result<Vec<CoefficientRow>> {
    let t = CsvTable::load(path.as_ref())?;
    let (p, k, e, s) = (
        t.column("parameter")?,
        t.column("kind")?,
        t.column("estimate")?,
        t.column("std_error")?,
    );
    (0..t.len())
        .map(|r| {
            Ok(CoefficientRow {
                parameter: t.text(r, p).to_string(),
                kind: t.text(r, k).to_string(),
                estimate: t.number(r, e)?,
                std_error: t.number(r, s)?,
            })
        })
        .collect()
}

/// Long format `block,row,col,estimate,std_error` with blocks `share`,
/// `hicksian`, `marshallian` and `expenditure`. Vector blocks leave `col`
/// empty.
pub fn write_elasticities(path: impl AsRef<Path>, rep: &ElasticityReport) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["block", "row", "col", "estimate", "std_error"])?;
    for (t, s) in rep.types.iter().zip(&rep.shares) {
        w.write_record(["share", t, "", &fmt_f64(*s), &fmt_f64(0.0)])?;
    }
    for (block, est, se) in [
        ("hicksian", &rep.hicksian, &rep.hicksian_se),
        ("marshallian", &rep.marshallian, &rep.marshallian_se),
    ] {
        for (i, ti) in rep.types.iter().enumerate() {
            for (j, tj) in rep.types.iter().enumerate() {
                w.write_record([block, ti, tj, &fmt_f64(est[i][j]), &fmt_f64(se[i][j])])?;
            }
        }
    }
    for (i, t) in rep.types.iter().enumerate() {
        w.write_record([
            "expenditure",
            t,
            "",
            &fmt_f64(rep.expenditure[i]),
            &fmt_f64(rep.expenditure_se[i]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_elasticities(path: impl AsRef<Path>) -> Result<ElasticityReport> {
    let t = CsvTable::load(path.as_ref())?;
    let (b, r, c, e, s) = (
        t.column("block")?,
        t.column("row")?,
        t.column("col")?,
        t.column("estimate")?,
        t.column("std_error")?,
    );
    let mut types = Vec::new();
    let mut shares = Vec::new();
    for k in 0..t.len() {
        if t.text(k, b) == "share" {
            types.push(t.text(k, r).to_string());
            shares.push(t.number(k, e)?);
        }
    }
    let n = types.len();
    let pos = |k: usize, col: usize| -> Result<usize> {
        types
            .iter()
            .position(|x| x == t.text(k, col))
            .ok_or_else(|| t.error(k, col, format!("unknown type `{}`", t.text(k, col))))
    };
    let mut rep = ElasticityReport {
        types: types.clone(),
        shares,
        hicksian: vec![vec![0.0; n]; n],
        hicksian_se: vec![vec![0.0; n]; n],
        marshallian: vec![vec![0.0; n]; n],
        marshallian_se: vec![vec![0.0; n]; n],
        expenditure: vec![0.0; n],
        expenditure_se: vec![0.0; n],
    };
    for k in 0..t.len() {
        match t.text(k, b) {
            "share" => {}
            "hicksian" => {
                let (i, j) = (pos(k, r)?, pos(k, c)?);
                rep.hicksian[i][j] = t.number(k, e)?;
                rep.hicksian_se[i][j] = t.number(k, s)?;
            }
            "marshallian" => {
                let (i, j) = (pos(k, r)?, pos(k, c)?);
                rep.marshallian[i][j] = t.number(k, e)?;
                rep.marshallian_se[i][j] = t.number(k, s)?;
            }
            "expenditure" => {
                let i = pos(k, r)?;
                rep.expenditure[i] = t.number(k, e)?;
                rep.expenditure_se[i] = t.number(k, s)?;
            }
            other => return Err(t.error(k, b, format!("unknown block `{other}`"))),
        }
    }
    Ok(rep)
}

/// Named scalar diagnostics of one fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub entries: Vec<(String, f64)>,
}

impl Diagnostics {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    fn push(&mut self, name: impl Into<String>, value: f64) {
        self.entries.push((name.into(), value));
    }

    pub fn from_fit(fit: &ModelFit, rep: &ElasticityReport) -> Self {
        let f = &fit.fit;
        let mut d = Diagnostics::default();
        if let Some(c) = &f.criteria {
            d.push("log_likelihood", c.log_likelihood);
            d.push("aic", c.aic);
            d.push("bic", c.bic);
        }
        d.push("parameters", f.k as f64);
        d.push("observations", f.n_obs as f64);
        d.push("iterations", f.iterations as f64);
        d.push("perfect_fit", if f.perfect_fit { 1.0 } else { 0.0 });
        for (i, dw) in f.retained().into_iter().zip(&f.durbin_watson) {
            if let Some(v) = dw {
                d.push(format!("durbin_watson[{}]", fit.types[i]), *v);
            }
        }
        d.push("engel_aggregation", rep.engel_aggregation());
        d.push("symmetry_gap", rep.symmetry_gap());
        d.push("slutsky_gap", rep.slutsky_gap());
        for (t, s) in fit.types.iter().zip(rep.hicksian_row_sums()) {
            d.push(format!("hicksian_row_sum[{t}]"), s);
        }
        d
    }
}

pub fn write_diagnostics(path: impl AsRef<Path>, d: &Diagnostics) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    w.write_record(["statistic", "value"])?;
    for (n, v) in &d.entries {
        w.write_record([n.as_str(), &fmt_f64(*v)])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_diagnostics(path: impl AsRef<Path>) -> Result<Diagnostics> {
    let t = CsvTable::load(path.as_ref())?;
    let (s, v) = (t.column("statistic")?, t.column("value")?);
    Ok(Diagnostics {
        entries: (0..t.len())
            .map(|r| Ok((t.text(r, s).to_string(), t.number(r, v)?)))
            .collect::<Result<_>>()?,
    })
}

/// `block,row,col,inside` with `inside` as `1` or `0`.
pub fn write_containment(path: impl AsRef<Path>, c: &Containment) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let flag = |b: bool| if b { "1" } else { "0" };
    w.write_record(["block", "row", "col", "inside"])?;
    for (i, ti) in c.types.iter().enumerate() {
        for (j, tj) in c.types.iter().enumerate() {
            w.write_record(["marshallian", ti, tj, flag(c.marshallian[i][j])])?;
        }
    }
    for (i, t) in c.types.iter().enumerate() {
        w.write_record(["expenditure", t, "", flag(c.expenditure[i])])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_containment(path: impl AsRef<Path>) -> Result<Containment> {
    let t = CsvTable::load(path.as_ref())?;
    let (b, r, c, f) = (
        t.column("block")?,
        t.column("row")?,
        t.column("col")?,
        t.column("inside")?,
    );
    let mut types: Vec<String> = Vec::new();
    for k in 0..t.len() {
        if t.text(k, b) == "expenditure" {
            types.push(t.text(k, r).to_string());
        }
    }
    let n = types.len();
    let pos = |k: usize, col: usize| -> Result<usize> {
        types
            .iter()
            .position(|x| x == t.text(k, col))
            .ok_or_else(|| t.error(k, col, format!("unknown type `{}`", t.text(k, col))))
    };
    let mut out = Containment {
        types: types.clone(),
        marshallian: vec![vec![false; n]; n],
        expenditure: vec![false; n],
    };
    for k in 0..t.len() {
        let inside = match t.index(k, f)? {
            0 => false,
            1 => true,
            v => return Err(t.error(k, f, format!("expected 0 or 1, got {v}"))),
        };
        match t.text(k, b) {
            "marshallian" => out.marshallian[pos(k, r)?][pos(k, c)?] = inside,
            "expenditure" => out.expenditure[pos(k, r)?] = inside,
            other => return Err(t.error(k, b, format!("unknown block `{other}`"))),
        }
    }
    Ok(out)
}

/// One line of the model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub parameters: usize,
    pub observations: usize,
    /// Missing for exact fits.
    pub log_likelihood: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    /// Cells outside the baseline's intervals; missing for the baseline.
    pub outside: Option<usize>,
}

impl ComparisonRow {
    pub fn new(model: &str, fit: &ModelFit, outside: Option<usize>) -> Self {
        let c = fit.fit.criteria.as_ref();
        Self {
            model: model.to_string(),
            parameters: fit.fit.k,
            observations: fit.fit.n_obs,
            log_likelihood: c.map(|c| c.log_likelihood),
            aic: c.map(|c| c.aic),
            bic: c.map(|c| c.bic),
            outside,
        }
    }
}

pub fn write_comparison(path: impl AsRef<Path>, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    w.write_record([
        "model",
        "parameters",
        "observations",
        "log_likelihood",
        "aic",
        "bic",
        "outside",
    ])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.parameters.to_string(),
            r.observations.to_string(),
            opt(r.log_likelihood),
            opt(r.aic),
            opt(r.bic),
            r.outside.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_comparison(path: impl AsRef<Path>) -> Result<Vec<ComparisonRow>> {
    let t = CsvTable::load(path.as_ref())?;
    let cols = [
        "model",
        "parameters",
        "observations",
        "log_likelihood",
        "aic",
        "bic",
        "outside",
    ]
    .iter()
    .map(|c| t.column(c))
    .collect::<Result<Vec<_>>>()?;
    let opt = |r: usize, c: usize| -> Result<Option<f64>> {
        if t.text(r, c).is_empty() {
            Ok(None)
        } else {
            t.number(r, c).map(Some)
        }
    };
    (0..t.len())
        .map(|r| {
            Ok(ComparisonRow {
                model: t.text(r, cols[0]).to_string(),
                parameters: t.index(r, cols[1])?,
                observations: t.index(r, cols[2])?,
                log_likelihood: opt(r, cols[3])?,
                aic: opt(r, cols[4])?,
                bic: opt(r, cols[5])?,
                outside: if t.text(r, cols[6]).is_empty() {
                    None
                } else {
                    Some(t.index(r, cols[6])?)
                },
            })
        })
        .collect()
}
