use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::calibration::{milk_profiles, MILK_ATTRIBUTE_SD};
use crate::error::{Error, Result};
use crate::hedonic::HedonicForm;
use crate::linalg::dependent_columns;
use crate::panel::{AttributeVector, PurchaseRecord, PurchaseTable};

const CONTINUOUS: usize = AttributeVector::LEN - AttributeVector::BINARY;

/// Per-type attribute distributions: indicator attributes are Bernoulli with
/// the profile mean as probability, the rest are normal and kept positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeCalibration {
    pub types: Vec<String>,
    pub means: Vec<AttributeVector>,
    /// Standard deviations of the non-indicator attributes.
    pub sd: Vec<[f64; CONTINUOUS]>,
}

impl AttributeCalibration {
    pub fn milk() -> Result<Self> {
        let profiles = milk_profiles()?;
        Ok(Self {
            types: profiles.iter().map(|p| p.product_type.clone()).collect(),
            means: profiles.iter().map(|p| p.mean).collect(),
            sd: MILK_ATTRIBUTE_SD.to_vec(),
        })
    }
}

fn draw_attributes(rng: &mut ChaCha8Rng, mean: &AttributeVector, sd: &[f64; CONTINUOUS]) -> AttributeVector {
    let mean = mean.to_array();
    let mut out = [0.0; AttributeVector::LEN];
    for k in 0..AttributeVector::BINARY {
        out[k] = if rng.random::<f64>() < mean[k] { 1.0 } else { 0.0 };
    }
    for k in 0..CONTINUOUS {
        let (mu, s) = (mean[AttributeVector::BINARY + k], sd[k]);
        let mut v = mu;
        for _ in 0..100 {
            let z: f64 = StandardNormal.sample(rng);
            v = mu + s * z;
            if v > 0.0 {
                break;
            }
        }
        out[AttributeVector::BINARY + k] = v.max(f64::MIN_POSITIVE);
    }
    AttributeVector::from_array(out)
}

/// Simulates `records` purchases, cycling through the product types. Prices
/// follow the truth's hedonic equation plus a normal disturbance; a draw is
/// repeated until the price is positive, and the whole table is redrawn until
/// the regressor matrix has full column rank.
pub fn gen_purchases(truth: &GroundTruth, records: usize, calibration: &AttributeCalibration) -> Result<PurchaseTable> {
    let hedonic = truth
        .hedonic
        .as_ref()
        .ok_or_else(|| Error::invalid("ground truth has no hedonic equation"))?;
    if hedonic.coefficients.len() != AttributeVector::LEN {
        return Err(Error::dims(
            "hedonic coefficients",
            AttributeVector::LEN,
            hedonic.coefficients.len(),
        ));
    }
    if calibration.types != truth.types {
        return Err(Error::invalid("attribute calibration and truth cover different types"));
    }
    let min = AttributeVector::LEN + 2;
    if records < min {
        return Err(Error::invalid(format!("need at least {min} records, got {records}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
    // Keep purchase draws independent of the panel draws for the same seed.
    rng.set_stream(1);
    let n = truth.n();
    for _ in 0..1000 {
        let mut out = Vec::with_capacity(records);
        for k in 0..records {
            let i = k % n;
            let attributes = draw_attributes(&mut rng, &calibration.means[i], &calibration.sd[i]);
            let index = hedonic.intercept
                + attributes
                    .to_array()
                    .iter()
                    .zip(&hedonic.coefficients)
                    .map(|(x, b)| x * b)
                    .sum::<f64>();
            let mut price = f64::NAN;
            for _ in 0..100 {
                let z: f64 = StandardNormal.sample(&mut rng);
                let e = hedonic.noise_sd * z;
                price = match hedonic.form {
                    HedonicForm::Linear => index + e,
                    HedonicForm::Semilog => (index + e).exp(),
                };
                if price > 0.0 {
                    break;
                }
            }
            if !(price > 0.0) {
                return Err(Error::invalid(format!(
                    "hedonic equation gives non-positive prices for `{}`",
                    truth.types[i]
                )));
            }
            let units = rng.random_range(1..=3) as f64;
            out.push(PurchaseRecord {
                week: (k % 52) as u32,
                product_type: truth.types[i].clone(),
                upc: format!("syn-{}-{:02}", truth.types[i], (k / n) % 25),
                price_per_serving: price,
                servings: units * attributes.servings_per_package.max(1.0),
                attributes,
            });
        }
        let design = DMatrix::from_fn(records, AttributeVector::LEN + 1, |r, c| {
            if c == 0 {
                1.0
            } else {
                out[r].attributes.to_array()[c - 1]
            }
        });
        if dependent_columns(&design).is_empty() {
            return PurchaseTable::new(truth.types.clone(), out);
        }
    }
    Err(Error::invalid(
        "could not draw purchases with varying attributes; increase the record count",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hedonic::fit_hedonic;
    use crate::synth::{milk_hedonic_truth, milk_original_truth};

    fn truth(form: HedonicForm, sd: f64) -> GroundTruth {
        let mut t = milk_original_truth(17).unwrap();
        t.hedonic = Some(milk_hedonic_truth(form, sd));
        t
    }

    #[test]
    fn noiseless_prices_are_recovered() {
        let cal = AttributeCalibration::milk().unwrap();
        for form in [HedonicForm::Linear, HedonicForm::Semilog] {
            let t = truth(form, 0.0);
            let table = gen_purchases(&t, 400, &cal).unwrap();
            let fit = fit_hedonic(&table, form).unwrap();
            let h = t.hedonic.unwrap();
            assert!((fit.intercept - h.intercept).abs() < 1e-9);
            for (a, b) in fit.coefficients.iter().zip(&h.coefficients) {
                assert!((a - b).abs() < 1e-9, "{form}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn soy_is_nearly_always_lactose_and_cholesterol_free() {
        let cal = AttributeCalibration::milk().unwrap();
        let table = gen_purchases(&truth(HedonicForm::Semilog, 0.05), 5000, &cal).unwrap();
        let soy: Vec<_> = table.records.iter().filter(|r| r.product_type == "soy").collect();
        let rate = soy.iter().filter(|r| r.attributes.lfcf == 1.0).count() as f64 / soy.len() as f64;
        assert!((rate - 0.99).abs() < 0.02, "{rate}");
    }

    #[test]
    fn minimum_record_count_fits() {
        let cal = AttributeCalibration::milk().unwrap();
        let table = gen_purchases(&truth(HedonicForm::Linear, 0.5), 14, &cal).unwrap();
        fit_hedonic(&table, HedonicForm::Linear).unwrap();
        assert!(gen_purchases(&truth(HedonicForm::Linear, 0.5), 13, &cal).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let cal = AttributeCalibration::milk().unwrap();
        let t = truth(HedonicForm::Semilog, 0.05);
        assert_eq!(
            gen_purchases(&t, 50, &cal).unwrap(),
            gen_purchases(&t, 50, &cal).unwrap()
        );
    }
}
