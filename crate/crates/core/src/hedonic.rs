//! Hedonic price regressions and the value-added coordinates they induce.
//!
//! Linear form: `price = E + Σ_j x_j β_j + ε`, implicit price `β_j`.
//! Semi-log form: `ln price = E + Σ_j x_j β_j + ε`, implicit price `β_j · P`.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{csv_writer, fmt_f64, open, parse_f64};
use crate::linalg::least_squares;
use crate::panel::{AttributeVector, PurchaseTable, TypeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedonicForm {
    Linear,
    #[default]
    Semilog,
}

impl fmt::Display for HedonicForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HedonicForm::Linear => "linear",
            HedonicForm::Semilog => "semilog",
        })
    }
}

impl FromStr for HedonicForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(HedonicForm::Linear),
            "semilog" | "semi-log" => Ok(HedonicForm::Semilog),
            other => Err(Error::invalid(format!("unknown hedonic form `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedonicFit {
    pub form: HedonicForm,
    pub attributes: Vec<String>,
    pub intercept: f64,
    pub intercept_se: f64,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub residual_variance: f64,
    pub n_obs: usize,
}

impl HedonicFit {
    pub fn coefficient(&self, attribute: &str) -> Option<f64> {
        let k = self.attributes.iter().position(|a| a == attribute)?;
        Some(self.coefficients[k])
    }
}

/// Fits the hedonic regression on every purchase record over all attributes.
pub fn fit_hedonic(purchases: &PurchaseTable, form: HedonicForm) -> Result<HedonicFit> {
    fit_hedonic_on(purchases, form, &AttributeVector::NAMES)
}

/// Fits the hedonic regression on a chosen subset of attributes. An intercept
/// is always included.
pub fn fit_hedonic_on(purchases: &PurchaseTable, form: HedonicForm, attributes: &[&str]) -> Result<HedonicFit> {
    let idx: Vec<usize> = attributes
        .iter()
        .map(|a| {
            AttributeVector::NAMES
                .iter()
                .position(|n| n == a)
                .ok_or_else(|| Error::AttributeMismatch(vec![a.to_string()]))
        })
        .collect::<Result<_>>()?;
    let n = purchases.len();
    let k = attributes.len();
    if n < k + 2 {
        return Err(Error::invalid(format!(
            "hedonic fit needs at least {} observations, got {n}",
            k + 2
        )));
    }
    let mut x = DMatrix::zeros(n, k + 1);
    let mut y = DVector::zeros(n);
    for (row, r) in purchases.records.iter().enumerate() {
        let a = r.attributes.to_array();
        x[(row, 0)] = 1.0;
        for (col, &j) in idx.iter().enumerate() {
            x[(row, col + 1)] = a[j];
        }
        y[row] = match form {
            HedonicForm::Linear => r.price_per_serving,
            HedonicForm::Semilog => {
                if !(r.price_per_serving > 0.0) {
                    return Err(Error::invalid(format!(
                        "record {row}: semi-log fit needs a positive price"
                    )));
                }
                r.price_per_serving.ln()
            }
        };
    }
    let mut names = vec!["intercept".to_string()];
    names.extend(attributes.iter().map(|s| s.to_string()));
    let ls = least_squares(&x, &y, &names)?;

    let ssr = ls.residuals.norm_squared();
    let mean_y = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let dof = (n - k - 1) as f64;
    let residual_variance = ssr / dof;
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / dof;
    let se: Vec<f64> = (0..=k)
        .map(|j| (residual_variance * ls.xtx_inv[(j, j)]).max(0.0).sqrt())
        .collect();

    Ok(HedonicFit {
        form,
        attributes: names[1..].to_vec(),
        intercept: ls.beta[0],
        intercept_se: se[0],
        coefficients: ls.beta.iter().skip(1).copied().collect(),
        std_errors: se[1..].to_vec(),
        r_squared,
        adj_r_squared,
        residual_variance,
        n_obs: n,
    })
}

/// Implicit attribute prices at a given product price (cents/serving).
pub fn implicit_prices(fit: &HedonicFit, product_price: f64) -> Result<Vec<f64>> {
    if !(product_price >= 0.0) {
        return Err(Error::invalid(format!(
            "product price must be non-negative, got {product_price}"
        )));
    }
    Ok(match fit.form {
        HedonicForm::Linear => fit.coefficients.clone(),
        HedonicForm::Semilog => fit.coefficients.iter().map(|b| b * product_price).collect(),
    })
}

/// Value of each attribute in each product type, cents/serving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueAddedMatrix {
    pub types: Vec<String>,
    pub attributes: Vec<String>,
    /// `[type][attribute]`.
    pub values: Vec<Vec<f64>>,
}

/// `v[i][j] = x_ji · implicit_price_j(P_i)`; the intercept is excluded.
pub fn value_added(fit: &HedonicFit, profiles: &[TypeProfile], mean_prices: &[f64]) -> Result<ValueAddedMatrix> {
    let fitted: BTreeSet<&str> = fit.attributes.iter().map(String::as_str).collect();
    let profiled: BTreeSet<&str> = AttributeVector::NAMES.iter().copied().collect();
    if fitted != profiled {
        let diff: Vec<String> = fitted.symmetric_difference(&profiled).map(|s| s.to_string()).collect();
        return Err(Error::AttributeMismatch(diff));
    }
    if profiles.len() != mean_prices.len() {
        return Err(Error::dims("mean prices", profiles.len(), mean_prices.len()));
    }
    let values = profiles
        .iter()
        .zip(mean_prices)
        .map(|(p, &price)| {
            let implicit = implicit_prices(fit, price)?;
            Ok(fit
                .attributes
                .iter()
                .zip(implicit)
                .map(|(a, ip)| p.mean.get(a).unwrap_or(0.0) * ip)
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(ValueAddedMatrix {
        types: profiles.iter().map(|p| p.product_type.clone()).collect(),
        attributes: fit.attributes.clone(),
        values,
    })
}

const STAT_ROWS: [&str; 4] = ["r_squared", "adjusted_r_squared", "residual_variance", "observations"];

/// Coefficient table: `form,variable,estimate,std_error`, intercept first,
/// followed by fit statistics with an empty standard error.
pub fn write_hedonic_table(path: impl AsRef<Path>, fit: &HedonicFit) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let form = fit.form.to_string();
    w.write_record(["form", "variable", "estimate", "std_error"])?;
    w.write_record([
        form.as_str(),
        "intercept",
        &fmt_f64(fit.intercept),
        &fmt_f64(fit.intercept_se),
    ])?;
    for ((a, b), se) in fit.attributes.iter().zip(&fit.coefficients).zip(&fit.std_errors) {
        w.write_record([form.as_str(), a, &fmt_f64(*b), &fmt_f64(*se)])?;
    }
    let stats = [
        fmt_f64(fit.r_squared),
        fmt_f64(fit.adj_r_squared),
        fmt_f64(fit.residual_variance),
        fit.n_obs.to_string(),
    ];
    for (name, v) in STAT_ROWS.iter().zip(stats) {
        w.write_record([form.as_str(), name, &v, ""])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_hedonic_table(path: impl AsRef<Path>) -> Result<HedonicFit> {
    let path = path.as_ref();
    read_hedonic_table(open(path)?, &path.display().to_string())
}

pub fn read_hedonic_table<R: Read>(reader: R, source: &str) -> Result<HedonicFit> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut fit = HedonicFit {
        form: HedonicForm::Linear,
        attributes: Vec::new(),
        intercept: 0.0,
        intercept_se: 0.0,
        coefficients: Vec::new(),
        std_errors: Vec::new(),
        r_squared: 0.0,
        adj_r_squared: 0.0,
        residual_variance: 0.0,
        n_obs: 0,
    };
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |column: &str| Error::Load {
            path: source.to_string(),
            row: k + 2,
            column: column.to_string(),
            message: "malformed hedonic table entry".into(),
        };
        fit.form = row.get(0).ok_or_else(|| bad("form"))?.parse()?;
        let var = row.get(1).ok_or_else(|| bad("variable"))?;
        let est = row.get(2).and_then(parse_f64).ok_or_else(|| bad("estimate"))?;
        let se = row.get(3).and_then(parse_f64);
        match var {
            "intercept" => {
                fit.intercept = est;
                fit.intercept_se = se.ok_or_else(|| bad("std_error"))?;
            }
            "r_squared" => fit.r_squared = est,
            "adjusted_r_squared" => fit.adj_r_squared = est,
            "residual_variance" => fit.residual_variance = est,
            "observations" => fit.n_obs = est as usize,
            name => {
                fit.attributes.push(name.to_string());
                fit.coefficients.push(est);
                fit.std_errors.push(se.ok_or_else(|| bad("std_error"))?);
            }
        }
    }
    Ok(fit)
}
