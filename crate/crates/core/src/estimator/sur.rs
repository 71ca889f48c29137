use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::restrictions::ParameterMap;
use super::{durbin_watson, InformationCriteria};
use crate::error::{Error, Result};
use crate::linalg::{dependent_columns, from_rows, spd_inverse, symmetrize, to_rows};

/// One equation `y = X θ_block + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub name: String,
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
}

/// A system of equations whose coefficient blocks are stacked in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemData {
    pub equations: Vec<Equation>,
}

impl SystemData {
    pub fn n_obs(&self) -> usize {
        self.equations.first().map_or(0, |e| e.y.len())
    }

    pub fn n_full(&self) -> usize {
        self.equations.iter().map(|e| e.x.ncols()).sum()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.equations.len());
        let mut at = 0;
        for e in &self.equations {
            out.push(at);
            at += e.x.ncols();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Stop when `max|ΔΣ̂| / max|Σ̂|` falls to this level.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

/// Result of an iterated FGLS fit. Matrices are stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemFit {
    pub equation_names: Vec<String>,
    pub dropped: Option<usize>,
    pub free_names: Vec<String>,
    pub free: Vec<f64>,
    pub free_cov: Vec<Vec<f64>>,
    pub full_names: Vec<String>,
    pub full: Vec<f64>,
    pub full_cov: Vec<Vec<f64>>,
    /// Residual covariance over the estimated equations.
    pub sigma: Vec<Vec<f64>>,
    /// Residuals of the estimated equations, `[equation][row]`.
    pub residuals: Vec<Vec<f64>>,
    /// `None` for an equation whose residuals are all zero.
    pub durbin_watson: Vec<Option<f64>>,
    pub n_obs: usize,
    pub k: usize,
    pub iterations: usize,
    /// Set when the data are fitted exactly and `Σ̂` is zero.
    pub perfect_fit: bool,
    /// `None` when `Σ̂` is singular (perfect fit).
    pub criteria: Option<InformationCriteria>,
}

impl SystemFit {
    fn index(&self, name: &str) -> Option<usize> {
        self.full_names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.full[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.full_cov[i][i].max(0.0).sqrt())
    }

    pub fn covariance(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.full_cov[self.index(a)?][self.index(b)?])
    }

    pub fn full_cov_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.full_cov)
    }

    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        from_rows(&self.sigma)
    }

    /// Indices of the estimated equations.
    pub fn retained(&self) -> Vec<usize> {
        (0..self.equation_names.len())
            .filter(|&i| Some(i) != self.dropped)
            .collect()
    }
}

/// Cross products of the substituted regressors used by every GLS step.
struct Moments {
    /// `Z_m' Z_l`.
    zz: Vec<Vec<DMatrix<f64>>>,
    /// `Z_m' ỹ_l`.
    zy: Vec<Vec<DVector<f64>>>,
    z: Vec<DMatrix<f64>>,
    y: Vec<DVector<f64>>,
}

impl Moments {
    fn gls(&self, sinv: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.z[0].ncols();
        let m = self.z.len();
        let mut a = DMatrix::zeros(k, k);
        let mut c = DVector::zeros(k);
        for i in 0..m {
            for j in 0..m {
                let s = sinv[(i, j)];
                a += &self.zz[i][j] * s;
                c += &self.zy[i][j] * s;
            }
        }
        (symmetrize(&a), c)
    }

    fn residuals(&self, phi: &DVector<f64>) -> Vec<DVector<f64>> {
        self.z.iter().zip(&self.y).map(|(z, y)| y - z * phi).collect()
    }
}

fn covariance(resid: &[DVector<f64>]) -> DMatrix<f64> {
    let m = resid.len();
    let n = resid[0].len() as f64;
    DMatrix::from_fn(m, m, |i, j| resid[i].dot(&resid[j]) / n)
}

fn solve(a: &DMatrix<f64>, c: &DVector<f64>, names: &[String]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = nalgebra::Cholesky::new(a.clone()).ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    Ok((chol.solve(c), chol.inverse()))
}

fn rms(v: &[DVector<f64>]) -> f64 {
    let (s, n) = v
        .iter()
        .fold((0.0, 0usize), |(s, n), e| (s + e.norm_squared(), n + e.len()));
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Iterated feasible GLS on the system with the parameter restrictions
/// imposed through `map`. Equation `drop`, if any, is left out of the
/// likelihood and its coefficients come from the map.
pub fn sur_fit(data: &SystemData, map: &ParameterMap, drop: Option<usize>, opts: &FitOptions) -> Result<SystemFit> {
    let n_eq = data.equations.len();
    if n_eq == 0 {
        return Err(Error::invalid("system has no equations"));
    }
    if data.n_full() != map.n_full() {
        return Err(Error::dims("full parameter vector", data.n_full(), map.n_full()));
    }
    if let Some(d) = drop {
        if d >= n_eq {
            return Err(Error::invalid(format!("dropped equation {d} out of range")));
        }
    }
    let n_obs = data.n_obs();
    for e in &data.equations {
        if e.y.len() != n_obs || e.x.nrows() != n_obs {
            return Err(Error::dims(
                format!("rows of equation `{}`", e.name),
                n_obs,
                e.x.nrows(),
            ));
        }
    }
    let retained: Vec<usize> = (0..n_eq).filter(|&i| Some(i) != drop).collect();
    let k = map.n_free();
    if n_obs * retained.len() < k {
        return Err(Error::invalid(format!(
            "{} stacked observations for {k} free parameters",
            n_obs * retained.len()
        )));
    }

    let offsets = data.offsets();
    let mut z = Vec::with_capacity(retained.len());
    let mut y = Vec::with_capacity(retained.len());
    for &i in &retained {
        let e = &data.equations[i];
        let width = e.x.ncols();
        let h = map.matrix.rows(offsets[i], width);
        let h0 = map.offset.rows(offsets[i], width);
        z.push(&e.x * h);
        y.push(&e.y - &e.x * h0);
    }

    let stacked = DMatrix::from_fn(n_obs * retained.len(), k, |r, c| z[r / n_obs][(r % n_obs, c)]);
    if let Some((col, span)) = dependent_columns(&stacked).first() {
        let mut set: Vec<String> = span.iter().map(|&j| map.free_names[j].clone()).collect();
        set.push(map.free_names[*col].clone());
        return Err(Error::RankDeficient(set));
    }

    let m = retained.len();
    let zz = (0..m)
        .map(|i| (0..m).map(|j| z[i].transpose() * &z[j]).collect())
        .collect();
    let zy = (0..m)
        .map(|i| (0..m).map(|j| z[i].transpose() * &y[j]).collect())
        .collect();
    let moments = Moments { zz, zy, z, y };

    let identity = DMatrix::identity(m, m);
    let (a, c) = moments.gls(&identity);
    let (mut phi, mut cov) = solve(&a, &c, &map.free_names)?;
    let mut resid = moments.residuals(&phi);
    let mut sigma = covariance(&resid);
    let mut iterations = 0;
    let perfect_fit = rms(&resid) <= 1e-12 * rms(&moments.y);

    if !perfect_fit {
        let mut trace = Vec::new();
        let mut converged = false;
        while iterations < opts.max_iterations {
            iterations += 1;
            let sinv = spd_inverse(&sigma).ok_or(Error::SingularCovariance)?;
            let (a, c) = moments.gls(&sinv);
            (phi, _) = solve(&a, &c, &map.free_names)?;
            resid = moments.residuals(&phi);
            let next = covariance(&resid);
            let change = (&next - &sigma).amax() / sigma.amax();
            trace.push(change);
            sigma = next;
            if change <= opts.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            let tail: Vec<String> = trace.iter().rev().take(5).rev().map(|c| format!("{c:.3e}")).collect();
            return Err(Error::NonConvergence {
                iterations,
                trace: tail.join(", "),
            });
        }
        // Report the GLS solution at the converged covariance so the
        // coefficients and their covariance refer to the same weights.
        let sinv = spd_inverse(&sigma).ok_or(Error::SingularCovariance)?;
        let (a, c) = moments.gls(&sinv);
        (phi, cov) = solve(&a, &c, &map.free_names)?;
        resid = moments.residuals(&phi);
    } else {
        // With identity weights the coefficient covariance is scaled by the
        // (zero) residual variance.
        cov *= 0.0;
    }

    let full = map.expand(&phi);
    let full_cov = &map.matrix * &cov * map.matrix.transpose();
    let criteria = if perfect_fit {
        None
    } else {
        InformationCriteria::from_sigma(&sigma, n_obs, k)
    };
    let durbin_watson = resid.iter().map(|e| durbin_watson(e.as_slice()).ok()).collect();

    Ok(SystemFit {
        equation_names: data.equations.iter().map(|e| e.name.clone()).collect(),
        dropped: drop,
        free_names: map.free_names.clone(),
        free: phi.iter().copied().collect(),
        free_cov: to_rows(&cov),
        full_names: map.full_names.clone(),
        full: full.iter().copied().collect(),
        full_cov: to_rows(&symmetrize(&full_cov)),
        sigma: to_rows(&sigma),
        residuals: resid.iter().map(|e| e.iter().copied().collect()).collect(),
        durbin_watson,
        n_obs,
        k,
        iterations,
        perfect_fit,
        criteria,
    })
}

/// One GLS step at a given residual covariance. Used to check that a fit is
/// a fixed point of the iteration.
pub fn gls_at(data: &SystemData, map: &ParameterMap, drop: Option<usize>, sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let offsets = data.offsets();
    let retained: Vec<usize> = (0..data.equations.len()).filter(|&i| Some(i) != drop).collect();
    let m = retained.len();
    if sigma.nrows() != m || sigma.ncols() != m {
        return Err(Error::dims("residual covariance", m, sigma.nrows()));
    }
    let sinv = spd_inverse(sigma).ok_or(Error::SingularCovariance)?;
    let k = map.n_free();
    let mut a = DMatrix::zeros(k, k);
    let mut c = DVector::zeros(k);
    let parts: Vec<(DMatrix<f64>, DVector<f64>)> = retained
        .iter()
        .map(|&i| {
            let e = &data.equations[i];
            let w = e.x.ncols();
            let z = &e.x * map.matrix.rows(offsets[i], w);
            let y = &e.y - &e.x * map.offset.rows(offsets[i], w);
            (z, y)
        })
        .collect();
    for i in 0..m {
        for j in 0..m {
            let s = sinv[(i, j)];
            a += parts[i].0.transpose() * &parts[j].0 * s;
            c += parts[i].0.transpose() * &parts[j].1 * s;
        }
    }
    let (phi, _) = solve(&symmetrize(&a), &c, &map.free_names)?;
    Ok(phi.iter().copied().collect())
}
