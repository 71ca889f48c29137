use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine map from free parameters to the full stacked coefficient vector:
/// `θ = matrix · φ + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterMap {
    pub free_names: Vec<String>,
    pub full_names: Vec<String>,
    pub matrix: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl ParameterMap {
    pub fn new(
        free_names: Vec<String>,
        full_names: Vec<String>,
        matrix: DMatrix<f64>,
        offset: DVector<f64>,
    ) -> Result<Self> {
        if matrix.nrows() != full_names.len() || offset.len() != full_names.len() {
            return Err(Error::dims("parameter map rows", full_names.len(), matrix.nrows()));
        }
        if matrix.ncols() != free_names.len() {
            return Err(Error::dims("parameter map columns", free_names.len(), matrix.ncols()));
        }
        Ok(Self {
            free_names,
            full_names,
            matrix,
            offset,
        })
    }

    /// Every full parameter is free.
    pub fn identity(names: Vec<String>) -> Self {
        let p = names.len();
        Self {
            free_names: names.clone(),
            full_names: names,
            matrix: DMatrix::identity(p, p),
            offset: DVector::zeros(p),
        }
    }

    pub fn n_free(&self) -> usize {
        self.free_names.len()
    }

    pub fn n_full(&self) -> usize {
        self.full_names.len()
    }

    pub fn expand(&self, free: &DVector<f64>) -> DVector<f64> {
        &self.matrix * free + &self.offset
    }
}

/// One equality `Σ coef_k θ_k = rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRestriction {
    pub label: String,
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Linear equality restrictions `R θ = r` over the full stacked vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RestrictionSet {
    pub names: Vec<String>,
    pub rows: Vec<LinearRestriction>,
}

const PIVOT_TOL: f64 = 1e-10;

impl RestrictionSet {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(LinearRestriction {
            label: label.into(),
            terms,
            rhs,
        });
    }

    pub fn dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut r = DMatrix::zeros(self.rows.len(), self.names.len());
        let mut rhs = DVector::zeros(self.rows.len());
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, v) in &row.terms {
                r[(k, j)] += v;
            }
            rhs[k] = row.rhs;
        }
        (r, rhs)
    }

    /// Largest `|R θ − r|` entry.
    pub fn max_violation(&self, theta: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| (row.terms.iter().map(|&(j, v)| v * theta[j]).sum::<f64>() - row.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Eliminates one dependent parameter per restriction and returns the map
    /// from the remaining free parameters. Among eligible columns of a row,
    /// the one with the highest `priority` is eliminated.
    pub fn to_map(&self, priority: &[usize]) -> Result<ParameterMap> {
        let p = self.names.len();
        if priority.len() != p {
            return Err(Error::dims("elimination priority", p, priority.len()));
        }
        let (r, rhs) = self.dense();
        let m = r.nrows();
        let mut a = DMatrix::zeros(m, p + 1);
        a.view_mut((0, 0), (m, p)).copy_from(&r);
        a.set_column(p, &rhs);

        let mut pivots: Vec<usize> = Vec::with_capacity(m);
        for k in 0..m {
            let scale = (0..p).map(|j| a[(k, j)].abs()).fold(0.0, f64::max);
            let pivot = (0..p)
                .filter(|&j| scale > 0.0 && a[(k, j)].abs() > PIVOT_TOL * scale)
                .max_by_key(|&j| (priority[j], j));
            let Some(col) = pivot else {
                let label = &self.rows[k].label;
                return Err(if a[(k, p)].abs() > PIVOT_TOL {
                    Error::invalid(format!("restriction `{label}` is inconsistent with earlier ones"))
                } else {
                    Error::invalid(format!("restriction `{label}` is redundant"))
                });
            };
            let pv = a[(k, col)];
            for j in 0..=p {
                a[(k, j)] /= pv;
            }
            for i in 0..m {
                if i != k {
                    let f = a[(i, col)];
                    if f != 0.0 {
                        for j in 0..=p {
                            a[(i, j)] -= f * a[(k, j)];
                        }
                    }
                }
            }
            pivots.push(col);
        }

        let free: Vec<usize> = (0..p).filter(|j| !pivots.contains(j)).collect();
        let mut matrix = DMatrix::zeros(p, free.len());
        let mut offset = DVector::zeros(p);
        for (q, &f) in free.iter().enumerate() {
            matrix[(f, q)] = 1.0;
        }
        for (k, &col) in pivots.iter().enumerate() {
            offset[col] = a[(k, p)];
            for (q, &f) in free.iter().enumerate() {
                matrix[(col, q)] = -a[(k, f)];
            }
        }
        ParameterMap::new(
            free.iter().map(|&j| self.names[j].clone()).collect(),
            self.names.clone(),
            matrix,
            offset,
        )
    }
}
