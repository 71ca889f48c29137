use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SODIUM: &str = "sodium";

/// Reference daily intakes keyed by nutrient name, in the same unit as the
/// per-serving amounts they are compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceIntakes(pub BTreeMap<String, f64>);

impl Default for ReferenceIntakes {
    /// FDA label reference values (2008 labeling guide units: mg, µg or IU).
    fn default() -> Self {
        let table = [
            ("vitamin_a_iu", 5000.0),
            ("vitamin_c_mg", 60.0),
            ("vitamin_d_iu", 400.0),
            ("vitamin_e_iu", 30.0),
            ("riboflavin_mg", 1.7),
            ("vitamin_b12_ug", 6.0),
            ("calcium_mg", 1000.0),
            ("iron_mg", 18.0),
            ("phosphorus_mg", 1000.0),
            ("magnesium_mg", 400.0),
            ("zinc_mg", 15.0),
            ("potassium_mg", 3500.0),
            ("cholesterol_mg", 300.0),
            (SODIUM, 2400.0),
        ];
        Self(table.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriSummary {
    /// Unweighted mean DRI percentage over every non-sodium nutrient.
    pub vitmin_dri: f64,
    /// Sodium DRI percentage; zero when sodium is not listed.
    pub sodium_dri: f64,
}

/// `100 · amount / reference`.
pub fn percent_of_reference(amount: f64, reference: f64) -> f64 {
    100.0 * amount / reference
}

/// Converts per-serving nutrient amounts to DRI percentages, averaging every
/// nutrient except sodium into one vitamin-mineral index.
pub fn dri_transform(amounts: &[(&str, f64)], refs: &ReferenceIntakes) -> Result<DriSummary> {
    let mut sodium = 0.0;
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(name, amount) in amounts {
        let reference = *refs
            .0
            .get(name)
            .ok_or_else(|| Error::UnknownNutrient(name.to_string()))?;
        if !(reference > 0.0) {
            return Err(Error::invalid(format!(
                "reference intake for `{name}` must be positive"
            )));
        }
        let pct = percent_of_reference(amount, reference);
        if name == SODIUM {
            sodium = pct;
        } else {
            sum += pct;
            count += 1;
        }
    }
    let vitmin_dri = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(DriSummary {
        vitmin_dri,
        sodium_dri: sodium,
    })
}
