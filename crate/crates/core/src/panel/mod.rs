//! Item-level purchase records and the weekly product-type panel built from them.
//!
//! Prices are in cents per serving throughout; quantities are servings.

mod dri;
mod load;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dri::{dri_transform, percent_of_reference, DriSummary, ReferenceIntakes, SODIUM};
pub use load::{
    load_panel, load_purchases, read_panel, read_purchases, write_panel, write_purchases, ColumnMap, Schema,
};

/// Product attributes of one purchase (or, for type profiles, their means).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeVector {
    pub organic: f64,
    pub soy: f64,
    pub promotion: f64,
    /// Lactose- or cholesterol-free claim.
    pub lfcf: f64,
    pub vitmin_label: f64,
    pub protein_g: f64,
    pub carb_g: f64,
    pub fat_g: f64,
    pub cholesterol_dri: f64,
    pub sodium_dri: f64,
    /// Vitamin-mineral DRI index, sodium excluded.
    pub vitmin_dri: f64,
    pub servings_per_package: f64,
}

impl AttributeVector {
    pub const LEN: usize = 12;

    /// Attribute names in canonical order; also the default CSV headers.
    pub const NAMES: [&'static str; Self::LEN] = [
        "organic",
        "soy",
        "promotion",
        "lfcf",
        "vitmin_label",
        "protein_g",
        "carb_g",
        "fat_g",
        "cholesterol_dri",
        "sodium_dri",
        "vitmin_dri",
        "servings_per_package",
    ];

    /// The first five attributes are 0/1 indicators.
    pub const BINARY: usize = 5;

    pub fn to_array(&self) -> [f64; Self::LEN] {
        [
            self.organic,
            self.soy,
            self.promotion,
            self.lfcf,
            self.vitmin_label,
            self.protein_g,
            self.carb_g,
            self.fat_g,
            self.cholesterol_dri,
            self.sodium_dri,
            self.vitmin_dri,
            self.servings_per_package,
        ]
    }

    pub fn from_array(a: [f64; Self::LEN]) -> Self {
        Self {
            organic: a[0],
            soy: a[1],
            promotion: a[2],
            lfcf: a[3],
            vitmin_label: a[4],
            protein_g: a[5],
            carb_g: a[6],
            fat_g: a[7],
            cholesterol_dri: a[8],
            sodium_dri: a[9],
            vitmin_dri: a[10],
            servings_per_package: a[11],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = Self::NAMES.iter().position(|n| *n == name)?;
        Some(self.to_array()[idx])
    }

    /// Checks the attribute invariants, returning the first offending field.
    ///
    /// Indicator fields accept any value in `[0, 1]` so that type-mean profiles
    /// (organic share, promotion share, ...) can be stored in the same shape.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        for (k, (name, v)) in Self::NAMES.iter().zip(self.to_array()).enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err((name, format!("must be a finite value >= 0, got {v}")));
            }
            if k < Self::BINARY && v > 1.0 {
                return Err((name, format!("indicator must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurchaseRecord {
    pub week: u32,
    pub product_type: String,
    pub upc: String,
    pub price_per_serving: f64,
    pub servings: f64,
    pub attributes: AttributeVector,
}

/// Purchase records plus the configured, ordered list of product types.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PurchaseTable {
    pub types: Vec<String>,
    pub records: Vec<PurchaseRecord>,
}

impl PurchaseTable {
    pub fn new(types: Vec<String>, records: Vec<PurchaseRecord>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::invalid("product type list is empty"));
        }
        for (i, r) in records.iter().enumerate() {
            if !types.contains(&r.product_type) {
                return Err(Error::invalid(format!(
                    "record {i}: unknown product type `{}`",
                    r.product_type
                )));
            }
            if !(r.price_per_serving > 0.0) || !(r.servings > 0.0) {
                return Err(Error::invalid(format!(
                    "record {i}: price and servings must be positive"
                )));
            }
            if let Err((field, msg)) = r.attributes.validate() {
                return Err(Error::invalid(format!("record {i}: {field} {msg}")));
            }
        }
        Ok(Self { types, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn type_index(&self, label: &str) -> Option<usize> {
        self.types.iter().position(|t| t == label)
    }
}

/// Weekly prices, quantities and expenditure shares by product type.
///
/// Indexing is `[week][type]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPanel {
    pub types: Vec<String>,
    pub weeks: Vec<u32>,
    pub price: Vec<Vec<f64>>,
    pub quantity: Vec<Vec<f64>>,
    pub share: Vec<Vec<f64>>,
    pub expenditure: Vec<f64>,
}

impl MarketPanel {
    /// Builds a panel from prices and quantities, deriving expenditure and shares.
    pub fn from_prices_quantities(
        types: Vec<String>,
        weeks: Vec<u32>,
        price: Vec<Vec<f64>>,
        quantity: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = types.len();
        if n == 0 {
            return Err(Error::invalid("product type list is empty"));
        }
        if price.len() != weeks.len() || quantity.len() != weeks.len() {
            return Err(Error::dims("panel weeks", weeks.len(), price.len().min(quantity.len())));
        }
        let mut share = Vec::with_capacity(weeks.len());
        let mut expenditure = Vec::with_capacity(weeks.len());
        for (t, (p, q)) in price.iter().zip(&quantity).enumerate() {
            if p.len() != n || q.len() != n {
                return Err(Error::dims(format!("panel week {t} width"), n, p.len().min(q.len())));
            }
            if let Some(i) = p.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "week {}: price of `{}` must be positive",
                    weeks[t], types[i]
                )));
            }
            if let Some(i) = q.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "week {}: quantity of `{}` must be non-negative",
                    weeks[t], types[i]
                )));
            }
            let x: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
            if !(x > 0.0) {
                return Err(Error::invalid(format!("week {}: zero expenditure", weeks[t])));
            }
            share.push(p.iter().zip(q).map(|(a, b)| a * b / x).collect());
            expenditure.push(x);
        }
        Ok(Self {
            types,
            weeks,
            price,
            quantity,
            share,
            expenditure,
        })
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn n_weeks(&self) -> usize {
        self.weeks.len()
    }

    /// Sample-mean expenditure shares by type.
    pub fn mean_shares(&self) -> Vec<f64> {
        column_means(&self.share, self.n_types())
    }

    pub fn mean_prices(&self) -> Vec<f64> {
        column_means(&self.price, self.n_types())
    }

    pub fn mean_quantities(&self) -> Vec<f64> {
        column_means(&self.quantity, self.n_types())
    }
}

fn column_means(rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    let t = rows.len().max(1) as f64;
    (0..n).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / t).collect()
}

/// How weekly prices combine the contributing records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceWeighting {
    /// Σ(price·servings) / Σ servings.
    #[default]
    Quantity,
    /// Unweighted mean over records.
    Simple,
}

/// Policy for (week, type) cells with no purchases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapFill {
    #[default]
    Error,
    /// Carry the previous week's price forward with zero quantity.
    Carry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AggregateOptions {
    #[serde(default)]
    pub weighting: PriceWeighting,
    #[serde(default)]
    pub fill: GapFill,
}

/// Aggregates purchases into one panel row per week in `min..=max` week.
pub fn aggregate_weekly(purchases: &PurchaseTable, opts: AggregateOptions) -> Result<MarketPanel> {
    if purchases.is_empty() {
        return Err(Error::invalid("no purchase records to aggregate"));
    }
    let n = purchases.types.len();
    // (week, type) -> (Σ p·s, Σ s, Σ p, count)
    let mut cells: BTreeMap<(u32, usize), (f64, f64, f64, usize)> = BTreeMap::new();
    for r in &purchases.records {
        let i = purchases
            .type_index(&r.product_type)
            .ok_or_else(|| Error::invalid(format!("unknown product type `{}`", r.product_type)))?;
        let cell = cells.entry((r.week, i)).or_default();
        cell.0 += r.price_per_serving * r.servings;
        cell.1 += r.servings;
        cell.2 += r.price_per_serving;
        cell.3 += 1;
    }
    let first = purchases.records.iter().map(|r| r.week).min().unwrap_or(0);
    let last = purchases.records.iter().map(|r| r.week).max().unwrap_or(0);
    let weeks: Vec<u32> = (first..=last).collect();

    let mut gaps = Vec::new();
    let mut price = Vec::with_capacity(weeks.len());
    let mut quantity = Vec::with_capacity(weeks.len());
    for (t, &w) in weeks.iter().enumerate() {
        let mut p_row = vec![0.0; n];
        let mut q_row = vec![0.0; n];
        for i in 0..n {
            match cells.get(&(w, i)) {
                Some(&(ps, s, p_sum, count)) => {
                    q_row[i] = s;
                    p_row[i] = match opts.weighting {
                        PriceWeighting::Quantity => ps / s,
                        PriceWeighting::Simple => p_sum / count as f64,
                    };
                }
                None => match opts.fill {
                    GapFill::Carry if t > 0 => {
                        let prev: &Vec<f64> = &price[t - 1];
                        p_row[i] = prev[i];
                    }
                    _ => gaps.push((w, purchases.types[i].clone())),
                },
            }
        }
        price.push(p_row);
        quantity.push(q_row);
    }
    if !gaps.is_empty() {
        return Err(Error::MissingCells(gaps));
    }
    MarketPanel::from_prices_quantities(purchases.types.clone(), weeks, price, quantity)
}

/// Per-type attribute means and dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile {
    pub product_type: String,
    pub mean: AttributeVector,
    /// Population standard deviation (divisor n).
    pub sd: AttributeVector,
    pub records: usize,
    pub unique_upcs: usize,
    /// Quantity-weighted mean price, cents/serving.
    pub mean_price: f64,
}

/// Attribute means, population standard deviations and UPC counts by type,
/// in the table's type order.
pub fn attribute_profile(purchases: &PurchaseTable) -> Result<Vec<TypeProfile>> {
    if purchases.is_empty() {
        return Err(Error::invalid("no purchase records to profile"));
    }
    purchases
        .types
        .iter()
        .map(|ty| {
            let recs: Vec<&PurchaseRecord> = purchases.records.iter().filter(|r| &r.product_type == ty).collect();
            if recs.is_empty() {
                return Err(Error::invalid(format!("no records for product type `{ty}`")));
            }
            let m = recs.len() as f64;
            let mut mean = [0.0; AttributeVector::LEN];
            for r in &recs {
                for (acc, v) in mean.iter_mut().zip(r.attributes.to_array()) {
                    *acc += v / m;
                }
            }
            let mut var = [0.0; AttributeVector::LEN];
            for r in &recs {
                for ((acc, v), mu) in var.iter_mut().zip(r.attributes.to_array()).zip(mean) {
                    *acc += (v - mu) * (v - mu) / m;
                }
            }
            let upcs: BTreeSet<&str> = recs.iter().map(|r| r.upc.as_str()).collect();
            let spend: f64 = recs.iter().map(|r| r.price_per_serving * r.servings).sum();
            let servings: f64 = recs.iter().map(|r| r.servings).sum();
            Ok(TypeProfile {
                product_type: ty.clone(),
                mean: AttributeVector::from_array(mean),
                sd: AttributeVector::from_array(var.map(f64::sqrt)),
                records: recs.len(),
                unique_upcs: upcs.len(),
                mean_price: spend / servings,
            })
        })
        .collect()
}

/// The bundled type-profile sample: one record per milk type carrying the
/// reference mean attributes, mean price and mean weekly servings.
pub const MILK_SAMPLE_CSV: &str = include_str!("../../data/milk_profiles.csv");

/// Milk types in estimation order; the last one is dropped before estimation.
pub fn milk_types() -> Vec<String> {
    ["2%", "skim", "full", "1%", "soy"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Loads [`MILK_SAMPLE_CSV`].
pub fn milk_sample() -> Result<PurchaseTable> {
    read_purchases(
        MILK_SAMPLE_CSV.as_bytes(),
        "milk_profiles.csv",
        &Schema::with_types(milk_types()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rec(week: u32, ty: &str, price: f64, servings: f64, fat: f64) -> PurchaseRecord {
        PurchaseRecord {
            week,
            product_type: ty.to_string(),
            upc: format!("{ty}-{week}-{price}"),
            price_per_serving: price,
            servings,
            attributes: AttributeVector {
                fat_g: fat,
                ..Default::default()
            },
        }
    }

    fn types(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn weighted_price_within_cell() {
        let table = PurchaseTable::new(
            types(&["a"]),
            vec![rec(0, "a", 20.0, 10.0, 1.0), rec(0, "a", 10.0, 30.0, 1.0)],
        )
        .unwrap();
        let panel = aggregate_weekly(&table, AggregateOptions::default()).unwrap();
        assert_relative_eq!(panel.price[0][0], 12.5, epsilon = 1e-12);
        assert_relative_eq!(panel.quantity[0][0], 40.0, epsilon = 1e-12);

        let simple = AggregateOptions {
            weighting: PriceWeighting::Simple,
            ..Default::default()
        };
        let panel = aggregate_weekly(&table, simple).unwrap();
        assert_relative_eq!(panel.price[0][0], 15.0, epsilon = 1e-12);
    }

    #[test]
    fn single_record_cells_pass_through() {
        let table = PurchaseTable::new(
            types(&["a", "b"]),
            vec![
                rec(3, "a", 20.0, 10.0, 1.0),
                rec(3, "b", 30.0, 5.0, 1.0),
                rec(4, "b", 31.0, 6.0, 1.0),
                rec(4, "a", 21.0, 11.0, 1.0),
            ],
        )
        .unwrap();
        let panel = aggregate_weekly(&table, AggregateOptions::default()).unwrap();
        assert_eq!(panel.weeks, vec![3, 4]);
        assert_eq!(panel.price, vec![vec![20.0, 30.0], vec![21.0, 31.0]]);
        assert_eq!(panel.quantity, vec![vec![10.0, 5.0], vec![11.0, 6.0]]);
        assert_relative_eq!(panel.share[0][0], 200.0 / 350.0, epsilon = 1e-15);
        assert_relative_eq!(panel.expenditure[1], 21.0 * 11.0 + 31.0 * 6.0, epsilon = 1e-12);
    }

    #[test]
    fn gaps_are_reported_or_carried() {
        let table = PurchaseTable::new(
            types(&["a", "b"]),
            vec![
                rec(0, "a", 20.0, 10.0, 1.0),
                rec(0, "b", 30.0, 5.0, 1.0),
                rec(1, "a", 21.0, 11.0, 1.0),
                rec(2, "a", 22.0, 11.0, 1.0),
                rec(2, "b", 32.0, 5.0, 1.0),
            ],
        )
        .unwrap();
        match aggregate_weekly(&table, AggregateOptions::default()) {
            Err(Error::MissingCells(g)) => assert_eq!(g, vec![(1, "b".to_string())]),
            other => panic!("expected gap error, got {other:?}"),
        }
        let carry = AggregateOptions {
            fill: GapFill::Carry,
            ..Default::default()
        };
        let panel = aggregate_weekly(&table, carry).unwrap();
        assert_eq!(panel.price[1][1], 30.0);
        assert_eq!(panel.quantity[1][1], 0.0);
        assert_eq!(panel.share[1][1], 0.0);
    }

    #[test]
    fn profile_means_and_population_sd() {
        let table = PurchaseTable::new(
            types(&["a", "b"]),
            vec![
                rec(0, "a", 20.0, 10.0, 2.0),
                rec(1, "a", 20.0, 10.0, 4.0),
                rec(0, "b", 10.0, 1.0, 7.0),
            ],
        )
        .unwrap();
        let prof = attribute_profile(&table).unwrap();
        assert_relative_eq!(prof[0].mean.fat_g, 3.0);
        assert_relative_eq!(prof[0].sd.fat_g, 1.0);
        assert_eq!(prof[0].unique_upcs, 2);
        assert_relative_eq!(prof[1].mean.fat_g, 7.0);
        assert_eq!(prof[1].sd.fat_g, 0.0);
    }

    #[test]
    fn profile_requires_every_type() {
        let table = PurchaseTable::new(types(&["a", "b"]), vec![rec(0, "a", 20.0, 10.0, 2.0)]).unwrap();
        assert!(attribute_profile(&table).is_err());
        assert!(attribute_profile(&PurchaseTable::new(types(&["a"]), vec![]).unwrap()).is_err());
    }

    #[test]
    fn bundled_sample_reproduces_fat_means() {
        let table = milk_sample().unwrap();
        assert_eq!(table.len(), 5);
        let prof = attribute_profile(&table).unwrap();
        let fat: BTreeMap<&str, f64> = prof.iter().map(|p| (p.product_type.as_str(), p.mean.fat_g)).collect();
        assert_eq!(fat["skim"], 0.53);
        assert_eq!(fat["1%"], 2.26);
        assert_eq!(fat["2%"], 4.77);
        assert_eq!(fat["full"], 8.15);
        assert_eq!(fat["soy"], 2.41);
        let upcs: Vec<usize> = prof.iter().map(|p| p.unique_upcs).collect();
        assert_eq!(upcs, vec![1; 5]);
    }

    #[test]
    fn bundled_sample_shares_match_calibration() {
        let table = milk_sample().unwrap();
        let panel = aggregate_weekly(&table, AggregateOptions::default()).unwrap();
        let expected = [0.3400, 0.2713, 0.1807, 0.1766, 0.0314];
        for (s, e) in panel.share[0].iter().zip(expected) {
            assert!((s - e).abs() < 5e-4, "{s} vs {e}");
        }
    }

    fn arb_records() -> impl Strategy<Value = Vec<PurchaseRecord>> {
        prop::collection::vec((0u32..4, 0usize..3, 1.0f64..50.0, 0.5f64..20.0), 12..40).prop_map(|v| {
            let mut recs: Vec<PurchaseRecord> = v
                .into_iter()
                .map(|(w, i, p, s)| rec(w, ["a", "b", "c"][i], p, s, 1.0))
                .collect();
            // guarantee every cell is populated
            for w in 0..4 {
                for ty in ["a", "b", "c"] {
                    recs.push(rec(w, ty, 10.0 + w as f64, 1.0, 1.0));
                }
            }
            recs
        })
    }

    proptest! {
        #[test]
        fn aggregation_invariants(recs in arb_records(), rot in 0usize..100) {
            let tys = types(&["a", "b", "c"]);
            let table = PurchaseTable::new(tys.clone(), recs.clone()).unwrap();
            let panel = aggregate_weekly(&table, AggregateOptions::default()).unwrap();
            for row in &panel.share {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            for (t, &w) in panel.weeks.iter().enumerate() {
                for (i, ty) in tys.iter().enumerate() {
                    let prices: Vec<f64> = recs.iter()
                        .filter(|r| r.week == w && &r.product_type == ty)
                        .map(|r| r.price_per_serving)
                        .collect();
                    let lo = prices.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = prices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(panel.price[t][i] >= lo * (1.0 - 1e-12));
                    prop_assert!(panel.price[t][i] <= hi * (1.0 + 1e-12));
                }
            }
            let mut rotated = recs.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            rotated.reverse();
            let panel2 = aggregate_weekly(&PurchaseTable::new(tys, rotated).unwrap(), AggregateOptions::default()).unwrap();
            for (a, b) in panel.price.iter().flatten().zip(panel2.price.iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
            for (a, b) in panel.quantity.iter().flatten().zip(panel2.quantity.iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            }
        }
    }
}
