//! Reference values for the bundled five-type milk market, used to calibrate
//! synthetic data, default ground truths and the demo pipeline. Type order
//! everywhere is `2%, skim, full, 1%, soy`.

use crate::demand::StructureInputs;
use crate::error::Result;
use crate::hedonic::{value_added, HedonicFit, HedonicForm};
use crate::metrics::{add_hedonic, standard_distance_set, OwnPriceCharacteristics};
use crate::panel::{attribute_profile, milk_sample, AttributeVector, TypeProfile};

/// Mean budget shares.
pub const MILK_SHARES: [f64; 5] = [0.3400, 0.2713, 0.1807, 0.1766, 0.0314];

/// Hicksian price elasticities at mean shares, `[i][j]`.
pub const MILK_HICKSIAN: [[f64; 5]; 5] = [
    [-0.4781, 0.2708, 0.1196, 0.1704, -0.0052],
    [0.33953, -0.575, 0.0912, 0.0877, 0.0757],
    [0.22503, 0.1369, -0.5249, 0.0741, 0.1523],
    [0.32803, 0.1347, 0.0759, -0.6361, -0.0825],
    [-0.0562, 0.6558, 0.8793, -0.4653, -1.0135],
];

/// Expenditure elasticities at mean shares.
pub const MILK_EXPENDITURE: [f64; 5] = [0.9993, 1.1366, 0.8210, 0.9467, 1.1571];

/// Marshallian price elasticities at mean shares, `[i][j]`.
pub const MILK_MARSHALLIAN: [[f64; 5]; 5] = [
    [-0.8179, -0.0002, -0.061, -0.0061, -0.0365],
    [-0.047, -0.8832, -0.1149, -0.1130, 0.0401],
    [-0.054, -0.0857, -0.6733, -0.0708, 0.1266],
    [0.0061, -0.1221, -0.0952, -0.8031, -0.1121],
    [-0.4497, 0.3419, 0.6701, -0.6697, -1.049],
];

/// Within-type standard deviations of the continuous attributes
/// (protein through servings per package, in [`AttributeVector::NAMES`]
/// order), one row per type.
pub const MILK_ATTRIBUTE_SD: [[f64; 7]; 5] = [
    [0.38, 3.71, 0.36, 0.74, 0.57, 1.25, 10.48],
    [0.22, 1.54, 0.17, 0.09, 0.48, 0.16, 10.25],
    [0.03, 3.56, 0.08, 0.41, 0.51, 0.06, 9.68],
    [0.11, 3.67, 0.64, 0.49, 0.49, 0.11, 9.02],
    [1.56, 4.01, 1.29, 0.98, 0.95, 1.63, 5.73],
];

/// Reference hedonic coefficients, intercept first, then attributes in
/// [`AttributeVector::NAMES`] order, with standard errors.
fn hedonic_table(form: HedonicForm) -> ([f64; 13], [f64; 13], f64) {
    match form {
        HedonicForm::Linear => (
            [
                -20.627, 10.962, -9.351, -1.583, 23.537, 4.497, 2.734, 0.991, 0.861, -0.358, -2.010, 0.789, -0.106,
            ],
            [
                0.367, 0.090, 0.155, 0.026, 0.069, 0.077, 0.042, 0.007, 0.014, 0.014, 0.027, 0.016, 0.001,
            ],
            0.3666,
        ),
        HedonicForm::Semilog => (
            [
                1.667, 0.428, -0.367, -0.100, 0.857, 0.140, 0.085, 0.033, 0.032, -0.011, -0.060, 0.020, -0.005,
            ],
            [
                0.018, 0.004, 0.008, 0.001, 0.003, 0.004, 0.002, 0.000, 0.001, 0.001, 0.001, 0.001, 0.001,
            ],
            0.2872,
        ),
    }
}

/// The reference hedonic regression as a fit object. Only the coefficients,
/// standard errors and adjusted R² are meaningful.
pub fn reference_hedonic(form: HedonicForm) -> HedonicFit {
    let (coef, se, adj) = hedonic_table(form);
    HedonicFit {
        form,
        attributes: AttributeVector::NAMES.iter().map(|s| s.to_string()).collect(),
        intercept: coef[0],
        intercept_se: se[0],
        coefficients: coef[1..].to_vec(),
        std_errors: se[1..].to_vec(),
        r_squared: adj,
        adj_r_squared: adj,
        residual_variance: 0.0,
        n_obs: 0,
    }
}

/// Per-type attribute means of the bundled sample.
pub fn milk_profiles() -> Result<Vec<TypeProfile>> {
    attribute_profile(&milk_sample()?)
}

/// Characteristics and the full distance set (standard plus hedonic) for the
/// bundled market, with hedonic coordinates taken from `hedonic`.
pub fn milk_structure_inputs(hedonic: &HedonicFit) -> Result<StructureInputs> {
    let profiles = milk_profiles()?;
    let chars = OwnPriceCharacteristics::from_profiles(&profiles, &MILK_SHARES)?;
    let prices: Vec<f64> = profiles.iter().map(|p| p.mean_price).collect();
    let mut distances = standard_distance_set(&chars)?;
    add_hedonic(&mut distances, &value_added(hedonic, &profiles, &prices)?)?;
    Ok(StructureInputs { distances, chars })
}
