use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Calibration, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::from_rows;
use crate::panel::MarketPanel;

/// One week's inputs to the share solve.
struct Week<'a> {
    truth: &'a GroundTruth,
    prev_w: &'a [f64],
    prev_logq: &'a [f64],
    logp: &'a [f64],
    dlogp: &'a [f64],
    logx: f64,
    dlogx: f64,
    eps: &'a [f64],
}

impl Week<'_> {
    fn shares(&self, u: &[f64]) -> Vec<f64> {
        let mut w = u.to_vec();
        w.push(1.0 - u.iter().sum::<f64>());
        w
    }

    /// Residuals of the estimated equations at retained shares `u`, and
    /// their Jacobian.
    fn residuals(&self, u: &[f64], with_jacobian: bool) -> (DVector<f64>, Option<DMatrix<f64>>) {
        let t = self.truth;
        let n = t.n();
        let m = n - 1;
        let w = self.shares(u);
        let wbar: Vec<f64> = (0..n).map(|j| 0.5 * (w[j] + self.prev_w[j])).collect();
        let dx = self.dlogx - wbar.iter().zip(self.dlogp).map(|(a, b)| a * b).sum::<f64>();
        let level: Vec<f64> = (0..m)
            .map(|i| w[i].ln() + self.logx - self.logp[i] - self.prev_logq[i])
            .collect();
        let f = DVector::from_fn(m, |i, _| {
            let price: f64 = (0..n).map(|j| t.c[i][j] * self.dlogp[j]).sum();
            wbar[i] * level[i] - t.intercepts[i] - t.b[i] * dx - price - self.eps[i]
        });
        let jac = with_jacobian.then(|| {
            DMatrix::from_fn(m, m, |i, k| {
                let own = if i == k { 0.5 * level[i] + wbar[i] / w[i] } else { 0.0 };
                own + 0.5 * t.b[i] * (self.dlogp[k] - self.dlogp[m])
            })
        });
        (f, jac)
    }

    /// Damped Newton on the retained shares, starting from last week's.
    fn solve(&self) -> Option<Vec<f64>> {
        let m = self.truth.n() - 1;
        let mut u = self.prev_w[..m].to_vec();
        let feasible = |u: &[f64]| {
            let s: f64 = u.iter().sum();
            u.iter().all(|x| *x > 0.0 && *x < 1.0) && s > 0.0 && s < 1.0
        };
        for _ in 0..100 {
            let (f, jac) = self.residuals(&u, true);
            let norm = f.amax();
            if norm <= 1e-15 {
                return Some(self.shares(&u));
            }
            let step = jac?.lu().solve(&(-&f))?;
            let mut scale = 1.0;
            let mut next = None;
            for _ in 0..60 {
                let cand: Vec<f64> = u.iter().zip(step.iter()).map(|(a, d)| a + scale * d).collect();
                if feasible(&cand) && self.residuals(&cand, false).0.amax() < norm {
                    next = Some(cand);
                    break;
                }
                scale *= 0.5;
            }
            match next {
                Some(c) => u = c,
                // No step reduces the residual: accept if already at rounding level.
                None => return (norm <= 1e-13).then(|| self.shares(&u)),
            }
        }
        let (f, _) = self.residuals(&u, false);
        (f.amax() <= 1e-13).then(|| self.shares(&u))
    }
}

/// Observed shares and logs of the previous week.
struct Previous {
    w: Vec<f64>,
    logq: Vec<f64>,
    logp: Vec<f64>,
    logx: f64,
}

/// Simulates `weeks` of prices, expenditure and quantities. Log prices and log
/// expenditure scatter independently around the calibrated means; each week
/// the shares solve the estimated equations exactly given the disturbances,
/// the last type takes the remaining share, and `q = w X / p`.
pub fn gen_panel(truth: &GroundTruth, weeks: usize, calibration: &Calibration) -> Result<MarketPanel> {
    truth.validate()?;
    calibration.validate()?;
    if weeks < 10 {
        return Err(Error::invalid(format!("need at least 10 weeks, got {weeks}")));
    }
    if calibration.types != truth.types {
        return Err(Error::invalid("calibration and truth cover different types"));
    }
    let n = truth.n();
    let m = n - 1;
    let noise = from_rows(&truth.noise_cov);
    let chol = if noise.amax() == 0.0 {
        None
    } else {
        Some(
            nalgebra::Cholesky::new(noise)
                .ok_or_else(|| Error::invalid("noise covariance is not positive definite"))?
                .l(),
        )
    };

    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let log_pbar: Vec<f64> = calibration.mean_prices.iter().map(|p| p.ln()).collect();
    let log_xbar = calibration.mean_expenditure.ln();

    let mut price = Vec::with_capacity(weeks);
    let mut quantity = Vec::with_capacity(weeks);
    let mut prev: Option<Previous> = None;
    for t in 0..weeks {
        let logp: Vec<f64> = log_pbar
            .iter()
            .map(|lp| lp + calibration.log_price_sd * draw(&mut rng))
            .collect();
        let logx = log_xbar + calibration.log_expenditure_sd * draw(&mut rng);
        let z = DVector::from_fn(m, |_, _| draw(&mut rng));
        let eps = chol.as_ref().map_or_else(|| DVector::zeros(m), |l| l * z);

        let w = match &prev {
            None => calibration.mean_shares.clone(),
            Some(last) => {
                let dlogp: Vec<f64> = logp.iter().zip(&last.logp).map(|(a, b)| a - b).collect();
                let week = Week {
                    truth,
                    prev_w: &last.w,
                    prev_logq: &last.logq,
                    logp: &logp,
                    dlogp: &dlogp,
                    logx,
                    dlogx: logx - last.logx,
                    eps: eps.as_slice(),
                };
                week.solve().ok_or_else(|| {
                    Error::invalid(format!(
                        "no feasible budget shares in week {t}; reduce the noise or price spread"
                    ))
                })?
            }
        };
        let p: Vec<f64> = logp.iter().map(|x| x.exp()).collect();
        let x = logx.exp();
        let q: Vec<f64> = w.iter().zip(&p).map(|(wi, pi)| wi * x / pi).collect();
        let logq = q.iter().map(|v| v.ln()).collect();
        // Shares as the panel will recompute them from p and q.
        let spent: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        let w_obs = p.iter().zip(&q).map(|(a, b)| a * b / spent).collect();
        prev = Some(Previous {
            w: w_obs,
            logq,
            logp,
            logx: spent.ln(),
        });
        price.push(p);
        quantity.push(q);
    }
    MarketPanel::from_prices_quantities(truth.types.clone(), (0..weeks as u32).collect(), price, quantity)
}
