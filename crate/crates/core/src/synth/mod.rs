//! Synthetic market panels and purchase tables generated from known
//! parameters, plus a Monte-Carlo harness that refits them.

mod montecarlo;
mod panel;
mod purchases;

use serde::{Deserialize, Serialize};

pub use montecarlo::{replication_seed, run_recovery, RecoveryReport};
pub use panel::gen_panel;
pub use purchases::{gen_purchases, AttributeCalibration};

use crate::calibration::{milk_structure_inputs, reference_hedonic, MILK_EXPENDITURE, MILK_HICKSIAN, MILK_SHARES};
use crate::demand::{ModelSpec, Structure, StructureInputs};
use crate::error::{Error, Result};
use crate::hedonic::HedonicForm;
use crate::panel::{milk_sample, milk_types};

/// Parameters of a structured variant that generated `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredTruth {
    pub spec: ModelSpec,
    /// Shared parameters in the spec's order: `[λ..., β0, β...]`.
    pub shared: Vec<f64>,
}

/// Hedonic price equation used to generate purchase records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedonicTruth {
    pub form: HedonicForm,
    pub intercept: f64,
    /// One coefficient per attribute, in `AttributeVector::NAMES` order.
    pub coefficients: Vec<f64>,
    /// Standard deviation of the price (or log-price) disturbance.
    pub noise_sd: f64,
}

/// Known parameters of a synthetic market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub types: Vec<String>,
    pub intercepts: Vec<f64>,
    pub b: Vec<f64>,
    /// Price coefficients `[i][j]`.
    pub c: Vec<Vec<f64>>,
    /// Disturbance covariance of every equation except the last.
    pub noise_cov: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructuredTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hedonic: Option<HedonicTruth>,
    pub seed: u64,
}

const IDENTITY_TOL: f64 = 1e-12;

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.types.len()
    }

    /// Checks dimensions and the identities every generating model satisfies:
    /// intercepts sum to zero, `b` sums to one, `c` is symmetric. Unstructured
    /// truths must also have zero row sums.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(Error::invalid("ground truth needs at least 2 types"));
        }
        if self.intercepts.len() != n {
            return Err(Error::dims("intercepts", n, self.intercepts.len()));
        }
        if self.b.len() != n {
            return Err(Error::dims("b", n, self.b.len()));
        }
        if self.c.len() != n || self.c.iter().any(|r| r.len() != n) {
            return Err(Error::dims("c rows", n, self.c.len()));
        }
        if self.noise_cov.len() != n - 1 || self.noise_cov.iter().any(|r| r.len() != n - 1) {
            return Err(Error::dims("noise covariance", n - 1, self.noise_cov.len()));
        }
        if self.intercepts.iter().sum::<f64>().abs() > IDENTITY_TOL {
            return Err(Error::invalid("intercepts must sum to zero"));
        }
        if (self.b.iter().sum::<f64>() - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::invalid("b must sum to one"));
        }
        for i in 0..n {
            for j in 0..n {
                if (self.c[i][j] - self.c[j][i]).abs() > IDENTITY_TOL {
                    return Err(Error::invalid(format!("c is not symmetric at ({i}, {j})")));
                }
            }
            if self.structure.is_none() && self.c[i].iter().sum::<f64>().abs() > IDENTITY_TOL {
                return Err(Error::invalid(format!("row {i} of c does not sum to zero")));
            }
        }
        Ok(())
    }

    /// True value of a named coefficient: `a[t]`, `b[t]`, `c[t,u]` or a shared
    /// structured parameter.
    pub fn value(&self, name: &str) -> Option<f64> {
        let idx = |t: &str| self.types.iter().position(|x| x == t);
        if let Some(t) = name.strip_prefix("a[").and_then(|s| s.strip_suffix(']')) {
            return idx(t).map(|i| self.intercepts[i]);
        }
        if let Some(t) = name.strip_prefix("b[").and_then(|s| s.strip_suffix(']')) {
            return idx(t).map(|i| self.b[i]);
        }
        if let Some(pair) = name.strip_prefix("c[").and_then(|s| s.strip_suffix(']')) {
            // Type labels may not contain commas, so the split is unambiguous.
            let (ti, tj) = pair.split_once(',')?;
            return Some(self.c[idx(ti)?][idx(tj)?]);
        }
        let s = self.structure.as_ref()?;
        let k = s.spec.shared_names().iter().position(|n| n == name)?;
        Some(s.shared[k])
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn without_noise(&self) -> Self {
        let m = self.n() - 1;
        Self {
            noise_cov: vec![vec![0.0; m]; m],
            hedonic: self.hedonic.clone().map(|h| HedonicTruth { noise_sd: 0.0, ..h }),
            ..self.clone()
        }
    }

    /// Truth whose `c` comes from a structured variant's shared parameters.
    pub fn structured(
        spec: &ModelSpec,
        inputs: &StructureInputs,
        shared: Vec<f64>,
        b: Vec<f64>,
        noise_cov: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let types = inputs.chars.types.clone();
        let c = Structure::resolve(spec, &types, inputs)?.c_matrix(&shared)?;
        let truth = Self {
            intercepts: vec![0.0; types.len()],
            types,
            b,
            c,
            noise_cov,
            structure: Some(StructuredTruth {
                spec: spec.clone(),
                shared,
            }),
            hedonic: None,
            seed,
        };
        truth.validate()?;
        Ok(truth)
    }
}

/// Targets that a generated panel is centred on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub types: Vec<String>,
    pub mean_prices: Vec<f64>,
    pub mean_shares: Vec<f64>,
    pub mean_expenditure: f64,
    /// Standard deviation of log prices around their means.
    #[serde(default = "default_price_sd")]
    pub log_price_sd: f64,
    /// Standard deviation of log expenditure around its mean.
    #[serde(default = "default_expenditure_sd")]
    pub log_expenditure_sd: f64,
}

fn default_price_sd() -> f64 {
    0.02
}

fn default_expenditure_sd() -> f64 {
    0.01
}

impl Calibration {
    /// Mean prices and quantities of the bundled milk sample.
    pub fn milk() -> Result<Self> {
        let sample = milk_sample()?;
        let mean_expenditure = sample.records.iter().map(|r| r.price_per_serving * r.servings).sum();
        Ok(Self {
            types: sample.types.clone(),
            mean_prices: sample.records.iter().map(|r| r.price_per_serving).collect(),
            mean_shares: MILK_SHARES.to_vec(),
            mean_expenditure,
            log_price_sd: default_price_sd(),
            log_expenditure_sd: default_expenditure_sd(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.types.len();
        if self.mean_prices.len() != n {
            return Err(Error::dims("calibration prices", n, self.mean_prices.len()));
        }
        if self.mean_shares.len() != n {
            return Err(Error::dims("calibration shares", n, self.mean_shares.len()));
        }
        if self.mean_shares.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("calibration shares must be positive"));
        }
        if (self.mean_shares.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid("calibration shares must sum to one"));
        }
        if self.mean_prices.iter().any(|p| !(*p > 0.0)) || !(self.mean_expenditure > 0.0) {
            return Err(Error::invalid("calibration prices and expenditure must be positive"));
        }
        if !(self.log_price_sd >= 0.0) || !(self.log_expenditure_sd >= 0.0) {
            return Err(Error::invalid("calibration standard deviations must be non-negative"));
        }
        Ok(())
    }
}

/// Disturbance covariance `s²(diag(w) − w w')` restricted to the first
/// `n − 1` equations. The disturbance implied for the last equation by
/// adding-up then has variance `s² w_n (1 − w_n)`, so no single share soaks
/// up the others' noise.
pub fn multinomial_noise(shares: &[f64], scale: f64) -> Vec<Vec<f64>> {
    let m = shares.len() - 1;
    let s2 = scale * scale;
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let d = if i == j { shares[i] } else { 0.0 };
                    s2 * (d - shares[i] * shares[j])
                })
                .collect()
        })
        .collect()
}

/// `b_i = e_i·w_i`, with the last entry absorbing rounding so `Σb = 1`.
fn b_from_expenditure(expenditure: &[f64], shares: &[f64]) -> Vec<f64> {
    let n = shares.len();
    let mut b: Vec<f64> = expenditure.iter().zip(shares).map(|(e, w)| e * w).collect();
    b[n - 1] = 1.0 - b[..n - 1].iter().sum::<f64>();
    b
}

/// Unstructured truth from Hicksian and expenditure elasticities. Off-diagonal
/// `c` averages `w_i e_ij` and `w_j e_ji`; the diagonal restores zero row sums.
pub fn truth_from_elasticities(
    types: Vec<String>,
    hicksian: &[Vec<f64>],
    expenditure: &[f64],
    shares: &[f64],
    noise_cov: Vec<Vec<f64>>,
    seed: u64,
) -> Result<GroundTruth> {
    let n = types.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                c[i][j] = 0.5 * (shares[i] * hicksian[i][j] + shares[j] * hicksian[j][i]);
            }
        }
        c[i][i] = -c[i].iter().sum::<f64>();
    }
    let truth = GroundTruth {
        intercepts: vec![0.0; n],
        b: b_from_expenditure(expenditure, shares),
        types,
        c,
        noise_cov,
        structure: None,
        hedonic: None,
        seed,
    };
    truth.validate()?;
    Ok(truth)
}

/// Scale of the default disturbance covariance.
pub const MILK_NOISE_SCALE: f64 = 0.002;

fn milk_noise() -> Vec<Vec<f64>> {
    multinomial_noise(&MILK_SHARES, MILK_NOISE_SCALE)
}

fn milk_b() -> Vec<f64> {
    b_from_expenditure(&MILK_EXPENDITURE, &MILK_SHARES)
}

/// Reference hedonic equation as a purchase-generating truth.
pub fn milk_hedonic_truth(form: HedonicForm, noise_sd: f64) -> HedonicTruth {
    let fit = reference_hedonic(form);
    HedonicTruth {
        form,
        intercept: fit.intercept,
        coefficients: fit.coefficients,
        noise_sd,
    }
}

/// Unstructured milk truth from the reference elasticities.
pub fn milk_original_truth(seed: u64) -> Result<GroundTruth> {
    let hicksian: Vec<Vec<f64>> = MILK_HICKSIAN.iter().map(|r| r.to_vec()).collect();
    let mut truth = truth_from_elasticities(
        milk_types(),
        &hicksian,
        &MILK_EXPENDITURE,
        &MILK_SHARES,
        milk_noise(),
        seed,
    )?;
    truth.hedonic = Some(milk_hedonic_truth(HedonicForm::Semilog, 0.05));
    Ok(truth)
}

/// Shared parameters of the default fat/organic distance-metric truth.
pub const MILK_DM_SHARED: [f64; 7] = [0.004, 0.012, -0.006, -0.01, -0.45, 0.001, 0.005];

/// Shared parameters of the default hedonic-metric truth.
pub const MILK_HM_SHARED: [f64; 5] = [0.0453, -0.0281, -0.016, -0.45, -0.002];

/// Distance-metric milk truth over fat, organic and their nearest neighbour.
pub fn milk_dm_truth(seed: u64) -> Result<(GroundTruth, StructureInputs)> {
    let inputs = milk_structure_inputs(&reference_hedonic(HedonicForm::Semilog))?;
    let truth = GroundTruth::structured(
        &ModelSpec::dm_fat_organic(),
        &inputs,
        MILK_DM_SHARED.to_vec(),
        milk_b(),
        milk_noise(),
        seed,
    )?;
    Ok((truth, inputs))
}

/// Hedonic-metric milk truth built on the reference semi-log hedonic matrix.
pub fn milk_hm_truth(seed: u64) -> Result<(GroundTruth, StructureInputs)> {
    let inputs = milk_structure_inputs(&reference_hedonic(HedonicForm::Semilog))?;
    let truth = GroundTruth::structured(
        &ModelSpec::hm(),
        &inputs,
        MILK_HM_SHARED.to_vec(),
        milk_b(),
        milk_noise(),
        seed,
    )?;
    Ok((truth, inputs))
}
