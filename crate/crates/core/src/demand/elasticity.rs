use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SystemFit;

/// Two-sided 95% normal critical value.
pub const Z95: f64 = 1.96;

/// Elasticities at fixed mean shares with delta-method standard errors.
/// Matrices are indexed `[i][j]`: response of good `i` to price `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityReport {
    pub types: Vec<String>,
    pub shares: Vec<f64>,
    pub hicksian: Vec<Vec<f64>>,
    pub hicksian_se: Vec<Vec<f64>>,
    pub marshallian: Vec<Vec<f64>>,
    pub marshallian_se: Vec<Vec<f64>>,
    pub expenditure: Vec<f64>,
    pub expenditure_se: Vec<f64>,
}

impl ElasticityReport {
    pub fn n(&self) -> usize {
        self.types.len()
    }

    /// Row sums of the Hicksian matrix; zero when homogeneity holds.
    pub fn hicksian_row_sums(&self) -> Vec<f64> {
        self.hicksian.iter().map(|r| r.iter().sum()).collect()
    }

    /// `Σ_i w_i e_i`; one when the expenditure coefficients add up.
    pub fn engel_aggregation(&self) -> f64 {
        self.shares.iter().zip(&self.expenditure).map(|(w, e)| w * e).sum()
    }

    /// Largest `|w_i e_ij − w_j e_ji|` over the Hicksian matrix.
    pub fn symmetry_gap(&self) -> f64 {
        let n = self.n();
        let mut gap: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                gap = gap.max((self.shares[i] * self.hicksian[i][j] - self.shares[j] * self.hicksian[j][i]).abs());
            }
        }
        gap
    }

    /// Largest deviation of the Marshallian matrix from `e_ij − e_i w_j`.
    pub fn slutsky_gap(&self) -> f64 {
        let implied = marshallian_from(&self.hicksian, &self.expenditure, &self.shares);
        implied
            .iter()
            .zip(&self.marshallian)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Slutsky decomposition `e^m_ij = e_ij − e_i w_j`.
pub fn marshallian_from(hicksian: &[Vec<f64>], expenditure: &[f64], shares: &[f64]) -> Vec<Vec<f64>> {
    hicksian
        .iter()
        .zip(expenditure)
        .map(|(row, e)| row.iter().zip(shares).map(|(h, w)| h - e * w).collect())
        .collect()
}

/// Converts fitted `b` and `c` coefficients to elasticities at `shares`.
pub fn elasticities(fit: &SystemFit, types: &[String], shares: &[f64]) -> Result<ElasticityReport> {
    let n = types.len();
    if shares.len() != n {
        return Err(Error::dims("mean shares", n, shares.len()));
    }
    if let Some(i) = shares.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::invalid(format!("mean share of `{}` is not positive", types[i])));
    }
    let lookup = |name: String| -> Result<usize> {
        fit.full_names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::invalid(format!("fit has no coefficient `{name}`")))
    };
    let cov = &fit.full_cov;
    let mut b = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    for ti in types {
        b.push(lookup(format!("b[{ti}]"))?);
        c.push(
            types
                .iter()
                .map(|tj| lookup(format!("c[{ti},{tj}]")))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let var = |k: usize| cov[k][k].max(0.0);

    let expenditure: Vec<f64> = (0..n).map(|i| fit.full[b[i]] / shares[i]).collect();
    let expenditure_se = (0..n).map(|i| var(b[i]).sqrt() / shares[i]).collect();
    let hicksian: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| fit.full[c[i][j]] / shares[i]).collect())
        .collect();
    let hicksian_se = (0..n)
        .map(|i| (0..n).map(|j| var(c[i][j]).sqrt() / shares[i]).collect())
        .collect();
    let marshallian = marshallian_from(&hicksian, &expenditure, shares);
    let marshallian_se = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let w = shares[j];
                    let v = var(c[i][j]) + w * w * var(b[i]) - 2.0 * w * cov[c[i][j]][b[i]];
                    v.max(0.0).sqrt() / shares[i]
                })
                .collect()
        })
        .collect();
    Ok(ElasticityReport {
        types: types.to_vec(),
        shares: shares.to_vec(),
        hicksian,
        hicksian_se,
        marshallian,
        marshallian_se,
        expenditure,
        expenditure_se,
    })
}

/// Whether `candidate` lies in the closed interval `estimate ± 1.96·se`.
pub fn within_interval(candidate: f64, estimate: f64, se: f64) -> bool {
    let lo = estimate - Z95 * se;
    let hi = estimate + Z95 * se;
    lo <= candidate && candidate <= hi
}

/// Cellwise interval containment of one report's estimates in another's
/// confidence intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub types: Vec<String>,
    pub marshallian: Vec<Vec<bool>>,
    pub expenditure: Vec<bool>,
}

impl Containment {
    pub fn all_inside(&self) -> bool {
        self.outside_count() == 0
    }

    pub fn outside_count(&self) -> usize {
        self.marshallian.iter().flatten().filter(|x| !**x).count() + self.expenditure.iter().filter(|x| !**x).count()
    }
}

/// Marks each Marshallian and expenditure estimate of `candidate` by whether
/// it falls inside the baseline's 95% interval.
pub fn ci_containment(candidate: &ElasticityReport, baseline: &ElasticityReport) -> Result<Containment> {
    if candidate.types != baseline.types {
        return Err(Error::invalid(format!(
            "type lists differ: [{}] vs [{}]",
            candidate.types.join(", "),
            baseline.types.join(", ")
        )));
    }
    let n = baseline.n();
    Ok(Containment {
        types: baseline.types.clone(),
        marshallian: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        within_interval(
                            candidate.marshallian[i][j],
                            baseline.marshallian[i][j],
                            baseline.marshallian_se[i][j],
                        )
                    })
                    .collect()
            })
            .collect(),
        expenditure: (0..n)
            .map(|i| {
                within_interval(
                    candidate.expenditure[i],
                    baseline.expenditure[i],
                    baseline.expenditure_se[i],
                )
            })
            .collect(),
    })
}
