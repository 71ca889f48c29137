//! Closeness matrices between product types.
//!
//! All matrices hold closeness (inverse distance) in `(0, 1]` off the
//! diagonal; the diagonal is zero because no model reads it.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hedonic::ValueAddedMatrix;
use crate::io::{csv_writer, fmt_f64, open, parse_f64};
use crate::panel::TypeProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosenessKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessMatrix {
    pub name: String,
    pub kind: ClosenessKind,
    pub types: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ClosenessMatrix {
    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| (self.values[i][j] - self.values[j][i]).abs() <= tol))
    }
}

/// Attribute dimensions available for continuous distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Share,
    Fat,
    Organic,
    Size,
}

impl Dimension {
    pub fn label(self) -> &'static str {
        match self {
            Dimension::Share => "SHARE",
            Dimension::Fat => "FAT",
            Dimension::Organic => "ORGANIC",
            Dimension::Size => "SIZE",
        }
    }

    fn initial(self) -> char {
        match self {
            Dimension::Share => 'W',
            Dimension::Fat => 'F',
            Dimension::Organic => 'O',
            Dimension::Size => 'S',
        }
    }
}

/// Name of the continuous matrix over `dims`, e.g. `FAT-ORGANIC`.
pub fn continuous_name(dims: &[Dimension]) -> String {
    dims.iter().map(|d| d.label()).collect::<Vec<_>>().join("-")
}

/// Name of the nearest-neighbour matrix over `dims`, e.g. `NN_FO`.
pub fn nn_name(dims: &[Dimension]) -> String {
    format!("NN_{}", dims.iter().map(|d| d.initial()).collect::<String>())
}

pub const HEDONIC: &str = "HEDONIC";
pub const NN_HEDONIC: &str = "NN_HEDONIC";

/// The eight continuous subsets: four one-dimensional, three two-dimensional
/// and the fat-organic-size space.
pub fn standard_subsets() -> Vec<Vec<Dimension>> {
    use Dimension::*;
    vec![
        vec![Share],
        vec![Fat],
        vec![Organic],
        vec![Size],
        vec![Fat, Organic],
        vec![Fat, Size],
        vec![Organic, Size],
        vec![Fat, Organic, Size],
    ]
}

/// Subsets that get a nearest-neighbour matrix in the standard set.
pub fn standard_nn_subsets() -> Vec<Vec<Dimension>> {
    use Dimension::*;
    vec![vec![Fat, Organic], vec![Fat, Size], vec![Fat, Organic, Size]]
}

/// Per-type characteristics used by distances and own-price terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnPriceCharacteristics {
    pub types: Vec<String>,
    /// Mean market share.
    pub share: Vec<f64>,
    /// Fat grams per serving.
    pub fat: Vec<f64>,
    /// Organic share of purchases, in `[0, 1]`.
    pub organic: Vec<f64>,
    /// Servings per package.
    pub size: Vec<f64>,
    /// Hedonic closeness index, when a hedonic matrix has been built.
    pub closeness: Option<Vec<f64>>,
}

impl OwnPriceCharacteristics {
    pub fn from_profiles(profiles: &[TypeProfile], mean_shares: &[f64]) -> Result<Self> {
        if profiles.len() != mean_shares.len() {
            return Err(Error::dims("mean shares", profiles.len(), mean_shares.len()));
        }
        if let Some(s) = mean_shares.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(Error::invalid(format!("mean share {s} outside (0, 1)")));
        }
        Ok(Self {
            types: profiles.iter().map(|p| p.product_type.clone()).collect(),
            share: mean_shares.to_vec(),
            fat: profiles.iter().map(|p| p.mean.fat_g).collect(),
            organic: profiles.iter().map(|p| p.mean.organic).collect(),
            size: profiles.iter().map(|p| p.mean.servings_per_package).collect(),
            closeness: None,
        })
    }

    pub fn with_closeness(mut self, index: Vec<f64>) -> Result<Self> {
        if index.len() != self.types.len() {
            return Err(Error::dims("closeness index", self.types.len(), index.len()));
        }
        if let Some(c) = index.iter().find(|c| !(**c > 0.0)) {
            return Err(Error::invalid(format!("closeness index {c} must be positive")));
        }
        self.closeness = Some(index);
        Ok(self)
    }

    pub fn dimension(&self, d: Dimension) -> &[f64] {
        match d {
            Dimension::Share => &self.share,
            Dimension::Fat => &self.fat,
            Dimension::Organic => &self.organic,
            Dimension::Size => &self.size,
        }
    }

    /// Looks up a characteristic by name: `share`, `fat`, `organic`, `size`
    /// or `closeness`.
    pub fn by_name(&self, name: &str) -> Option<&[f64]> {
        match name {
            "share" => Some(&self.share),
            "fat" => Some(&self.fat),
            "organic" => Some(&self.organic),
            "size" => Some(&self.size),
            "closeness" => self.closeness.as_deref(),
            _ => None,
        }
    }
}

/// Scaled content difference `(x_i − x_j) / x_max`.
pub fn content_delta(x_i: f64, x_j: f64, x_max: f64) -> Result<f64> {
    if !(x_max > 0.0) {
        return Err(Error::invalid(format!("scaling maximum must be positive, got {x_max}")));
    }
    Ok((x_i - x_j) / x_max)
}

/// Inverse Euclidean closeness `1 / (1 + ‖δ‖)`.
pub fn closeness(deltas: &[f64]) -> f64 {
    1.0 / (1.0 + deltas.iter().map(|d| d * d).sum::<f64>().sqrt())
}

/// Continuous closeness over one subset of dimensions.
pub fn build_continuous(chars: &OwnPriceCharacteristics, dims: &[Dimension]) -> Result<ClosenessMatrix> {
    if dims.is_empty() {
        return Err(Error::invalid("distance subset is empty"));
    }
    let n = chars.types.len();
    let maxima = dims
        .iter()
        .map(|&d| {
            let m = chars.dimension(d).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if m > 0.0 {
                Ok(m)
            } else {
                Err(Error::invalid(format!("{} has no positive content", d.label())))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let deltas = dims
                .iter()
                .zip(&maxima)
                .map(|(&d, &m)| {
                    let x = chars.dimension(d);
                    content_delta(x[i], x[j], m)
                })
                .collect::<Result<Vec<f64>>>()?;
            values[i][j] = closeness(&deltas);
        }
    }
    Ok(ClosenessMatrix {
        name: continuous_name(dims),
        kind: ClosenessKind::Continuous,
        types: chars.types.clone(),
        values,
    })
}

pub fn build_continuous_set(
    chars: &OwnPriceCharacteristics,
    subsets: &[Vec<Dimension>],
) -> Result<Vec<ClosenessMatrix>> {
    subsets.iter().map(|s| build_continuous(chars, s)).collect()
}

/// Row-normalised nearest-neighbour indicators: `raw[i][j] = 1` for the
/// `j ≠ i` with the highest closeness, ties going to the lowest index.
pub fn nearest_neighbor_raw(m: &ClosenessMatrix) -> Result<Vec<Vec<f64>>> {
    let n = m.n();
    if n < 2 {
        return Err(Error::invalid("nearest neighbours need at least two types"));
    }
    Ok((0..n)
        .map(|i| {
            let mut best = if i == 0 { 1 } else { 0 };
            for k in 0..n {
                if k != i && m.values[i][k] > m.values[i][best] {
                    best = k;
                }
            }
            let mut row = vec![0.0; n];
            row[best] = 1.0;
            row
        })
        .collect())
}

/// Symmetrised nearest-neighbour matrix, `max(raw[i][j], raw[j][i])`.
pub fn nearest_neighbor(m: &ClosenessMatrix, name: impl Into<String>) -> Result<ClosenessMatrix> {
    let raw = nearest_neighbor_raw(m)?;
    let n = m.n();
    let values = (0..n)
        .map(|i| (0..n).map(|j| raw[i][j].max(raw[j][i])).collect())
        .collect();
    Ok(ClosenessMatrix {
        name: name.into(),
        kind: ClosenessKind::Discrete,
        types: m.types.clone(),
        values,
    })
}

/// Closeness in hedonic space: Euclidean distances between value-added rows,
/// divided by the largest pairwise distance, then inverted as `1 / (1 + D̂)`.
pub fn hedonic_distance(values: &ValueAddedMatrix) -> Result<ClosenessMatrix> {
    let n = values.types.len();
    if n < 2 {
        return Err(Error::invalid("hedonic distance needs at least two types"));
    }
    let raw: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    values.values[i]
                        .iter()
                        .zip(&values.values[k])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let max = raw.iter().flatten().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::invalid(
            "degenerate hedonic space: all value-added rows coincide",
        ));
    }
    let values_out = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| if i == k { 0.0 } else { 1.0 / (1.0 + raw[i][k] / max) })
                .collect()
        })
        .collect();
    Ok(ClosenessMatrix {
        name: HEDONIC.into(),
        kind: ClosenessKind::Continuous,
        types: values.types.clone(),
        values: values_out,
    })
}

/// Total closeness `Σ_{j≠i} d[i][j]` per type.
pub fn closeness_index(m: &ClosenessMatrix) -> Vec<f64> {
    (0..m.n())
        .map(|i| (0..m.n()).filter(|&j| j != i).map(|j| m.values[i][j]).sum())
        .collect()
}

/// Named closeness matrices over one ordered type list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceSet {
    pub matrices: Vec<ClosenessMatrix>,
}

impl DistanceSet {
    pub fn get(&self, name: &str) -> Result<&ClosenessMatrix> {
        self.matrices
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::UnknownDistance(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.matrices.iter().map(|m| m.name.as_str()).collect()
    }

    pub fn push(&mut self, m: ClosenessMatrix) {
        self.matrices.retain(|x| x.name != m.name);
        self.matrices.push(m);
    }
}

/// The eight continuous matrices plus `NN_FO`, `NN_FS` and `NN_FOS`.
pub fn standard_distance_set(chars: &OwnPriceCharacteristics) -> Result<DistanceSet> {
    let mut set = DistanceSet {
        matrices: build_continuous_set(chars, &standard_subsets())?,
    };
    for dims in standard_nn_subsets() {
        let cont = build_continuous(chars, &dims)?;
        set.push(nearest_neighbor(&cont, nn_name(&dims))?);
    }
    Ok(set)
}

/// Adds `HEDONIC` and `NN_HEDONIC` built from a value-added matrix.
pub fn add_hedonic(set: &mut DistanceSet, values: &ValueAddedMatrix) -> Result<()> {
    let h = hedonic_distance(values)?;
    let nn = nearest_neighbor(&h, NN_HEDONIC)?;
    set.push(h);
    set.push(nn);
    Ok(())
}

/// Long-format CSV: `matrix,kind,row,col,closeness`.
pub fn write_distances(path: impl AsRef<Path>, set: &DistanceSet) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["matrix", "kind", "row", "col", "closeness"])?;
    for m in &set.matrices {
        let kind = match m.kind {
            ClosenessKind::Continuous => "continuous",
            ClosenessKind::Discrete => "discrete",
        };
        for (i, ti) in m.types.iter().enumerate() {
            for (j, tj) in m.types.iter().enumerate() {
                w.write_record([m.name.as_str(), kind, ti, tj, &fmt_f64(m.values[i][j])])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_distances(path: impl AsRef<Path>) -> Result<DistanceSet> {
    let path = path.as_ref();
    read_distances(open(path)?, &path.display().to_string())
}

/// A matrix as read: name, kind and `(row, col, closeness)` entries in file order.
type RawMatrix = (String, ClosenessKind, Vec<(String, String, f64)>);

pub fn read_distances<R: Read>(reader: R, source: &str) -> Result<DistanceSet> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut raw: Vec<RawMatrix> = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |column: &str, message: &str| Error::Load {
            path: source.to_string(),
            row: k + 2,
            column: column.to_string(),
            message: message.to_string(),
        };
        let name = row.get(0).ok_or_else(|| bad("matrix", "missing"))?.to_string();
        let kind = match row.get(1) {
            Some("continuous") => ClosenessKind::Continuous,
            Some("discrete") => ClosenessKind::Discrete,
            _ => return Err(bad("kind", "expected continuous or discrete")),
        };
        let r = row.get(2).ok_or_else(|| bad("row", "missing"))?.to_string();
        let c = row.get(3).ok_or_else(|| bad("col", "missing"))?.to_string();
        let v = row
            .get(4)
            .and_then(parse_f64)
            .ok_or_else(|| bad("closeness", "not a number"))?;
        match raw.iter_mut().find(|(n, _, _)| *n == name) {
            Some(entry) => entry.2.push((r, c, v)),
            None => raw.push((name, kind, vec![(r, c, v)])),
        }
    }
    let matrices = raw
        .into_iter()
        .map(|(name, kind, entries)| {
            let mut types: Vec<String> = Vec::new();
            for (r, _, _) in &entries {
                if !types.contains(r) {
                    types.push(r.clone());
                }
            }
            let n = types.len();
            if entries.len() != n * n {
                return Err(Error::dims(format!("entries of matrix {name}"), n * n, entries.len()));
            }
            let mut values = vec![vec![0.0; n]; n];
            for (r, c, v) in entries {
                let i = types.iter().position(|t| *t == r);
                let j = types.iter().position(|t| *t == c);
                match (i, j) {
                    (Some(i), Some(j)) => values[i][j] = v,
                    _ => return Err(Error::invalid(format!("matrix {name}: unknown type {r}/{c}"))),
                }
            }
            Ok(ClosenessMatrix {
                name,
                kind,
                types,
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceSet { matrices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{attribute_profile, milk_sample};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Types in milk order with reference mean shares.
    fn milk_chars() -> OwnPriceCharacteristics {
        let profiles = attribute_profile(&milk_sample().unwrap()).unwrap();
        OwnPriceCharacteristics::from_profiles(&profiles, &[0.34, 0.2713, 0.1807, 0.1766, 0.0314]).unwrap()
    }

    fn toy(name: &str, values: Vec<Vec<f64>>) -> ClosenessMatrix {
        let n = values.len();
        ClosenessMatrix {
            name: name.into(),
            kind: ClosenessKind::Continuous,
            types: (0..n).map(|i| format!("t{i}")).collect(),
            values,
        }
    }

    #[test]
    fn fat_delta_examples() {
        assert_relative_eq!(content_delta(4.77, 2.26, 8.15).unwrap(), 0.3080, epsilon = 5e-5);
        assert_eq!(content_delta(3.0, 3.0, 8.15).unwrap(), 0.0);
        assert_relative_eq!(content_delta(8.15, 0.53, 8.15).unwrap(), 0.9350, epsilon = 5e-5);
        assert!(content_delta(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn closeness_examples() {
        assert_eq!(closeness(&[0.0, 0.0, 0.0]), 1.0);
        assert_relative_eq!(closeness(&[0.3080]), 1.0 / 1.3080, epsilon = 1e-15);
        assert_relative_eq!(closeness(&[0.3080]), 0.7645, epsilon = 5e-5);
        assert_eq!(closeness(&[1.0, 0.0, 0.0]), 0.5);
    }

    #[test]
    fn fat_matrix_entry_for_two_and_one_percent() {
        let m = build_continuous(&milk_chars(), &[Dimension::Fat]).unwrap();
        assert_eq!(m.name, "FAT");
        // types: 2%, skim, full, 1%, soy
        assert_relative_eq!(m.get(0, 3), 0.7645, epsilon = 5e-4);
        assert!(m.is_symmetric(0.0));
    }

    #[test]
    fn empty_subset_is_rejected() {
        assert!(build_continuous(&milk_chars(), &[]).is_err());
    }

    #[test]
    fn standard_set_structure() {
        let chars = milk_chars();
        let set = standard_distance_set(&chars).unwrap();
        let continuous: Vec<&ClosenessMatrix> = set
            .matrices
            .iter()
            .filter(|m| m.kind == ClosenessKind::Continuous)
            .collect();
        assert_eq!(continuous.len(), 8);
        let by_dim: Vec<usize> = continuous.iter().map(|m| m.name.split('-').count()).collect();
        assert_eq!(by_dim, vec![1, 1, 1, 1, 2, 2, 2, 3]);
        assert_eq!(set.names()[8..], ["NN_FO", "NN_FS", "NN_FOS"]);
        for m in continuous {
            assert!(m.is_symmetric(0.0));
            for i in 0..m.n() {
                for j in 0..m.n() {
                    if i != j {
                        assert!(m.values[i][j] > 0.0 && m.values[i][j] <= 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn nn_picks_row_argmax() {
        let m = toy(
            "x",
            vec![
                vec![0.0, 0.9, 0.7, 0.5],
                vec![0.9, 0.0, 0.2, 0.1],
                vec![0.7, 0.2, 0.0, 0.3],
                vec![0.5, 0.1, 0.3, 0.0],
            ],
        );
        let raw = nearest_neighbor_raw(&m).unwrap();
        assert_eq!(raw[0], vec![0.0, 1.0, 0.0, 0.0]);
        for row in &raw {
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn nn_two_types_all_ones() {
        let m = toy("x", vec![vec![0.0, 0.3], vec![0.3, 0.0]]);
        let nn = nearest_neighbor(&m, "NN").unwrap();
        assert_eq!(nn.values, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(nearest_neighbor(&toy("x", vec![vec![0.0]]), "NN").is_err());
    }

    #[test]
    fn nn_symmetrizes_asymmetric_neighbours() {
        // t0 → t1 (0.9), t1 → t2 (0.95), t2 → t1 (0.95)
        let m = toy(
            "x",
            vec![vec![0.0, 0.9, 0.5], vec![0.9, 0.0, 0.95], vec![0.5, 0.95, 0.0]],
        );
        let raw = nearest_neighbor_raw(&m).unwrap();
        assert_eq!(raw, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
        let nn = nearest_neighbor(&m, "NN").unwrap();
        assert_eq!(
            nn.values,
            vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]
        );
        assert_eq!(nn.kind, ClosenessKind::Discrete);
    }

    #[test]
    fn nn_ties_go_to_lowest_index() {
        let m = toy("x", vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]);
        let raw = nearest_neighbor_raw(&m).unwrap();
        assert_eq!(raw[0][1], 1.0);
        assert_eq!(raw[1][0], 1.0);
        assert_eq!(raw[2][0], 1.0);
    }

    fn value_matrix(values: Vec<Vec<f64>>) -> ValueAddedMatrix {
        let n = values.len();
        let k = values[0].len();
        ValueAddedMatrix {
            types: (0..n).map(|i| format!("t{i}")).collect(),
            attributes: (0..k).map(|j| format!("a{j}")).collect(),
            values,
        }
    }

    #[test]
    fn hedonic_toy_against_hand_norms() {
        // rows: (0,0), (3,4), (6,8): distances 5, 10, 5; max 10
        let v = value_matrix(vec![vec![0.0, 0.0], vec![3.0, 4.0], vec![6.0, 8.0]]);
        let h = hedonic_distance(&v).unwrap();
        assert_relative_eq!(h.get(0, 1), 1.0 / 1.5, epsilon = 1e-15);
        assert_relative_eq!(h.get(0, 2), 0.5, epsilon = 1e-15);
        assert_relative_eq!(h.get(1, 2), 1.0 / 1.5, epsilon = 1e-15);
        assert!(h.is_symmetric(0.0));
        let idx = closeness_index(&h);
        assert_relative_eq!(idx[0], 1.0 / 1.5 + 0.5, epsilon = 1e-15);
        assert_relative_eq!(idx[1], 2.0 / 1.5, epsilon = 1e-15);
        assert_relative_eq!(idx[2], 1.0 / 1.5 + 0.5, epsilon = 1e-15);
    }

    #[test]
    fn hedonic_identical_rows_and_degenerate_space() {
        let v = value_matrix(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![4.0, 6.0]]);
        let h = hedonic_distance(&v).unwrap();
        assert_eq!(h.get(0, 1), 1.0);
        assert_eq!(h.get(0, 2), 0.5);
        let flat = value_matrix(vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert!(hedonic_distance(&flat).is_err());
    }

    #[test]
    fn closeness_index_uniform() {
        let n = 5;
        let m = toy(
            "x",
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 0.5 }).collect())
                .collect(),
        );
        assert_eq!(closeness_index(&m), vec![2.0; 5]);
    }

    #[test]
    fn soy_is_least_close_in_hedonic_space() {
        let profiles = attribute_profile(&milk_sample().unwrap()).unwrap();
        let fit = crate::hedonic::HedonicFit {
            form: crate::hedonic::HedonicForm::Semilog,
            attributes: crate::panel::AttributeVector::NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            intercept: 1.667,
            intercept_se: 0.018,
            coefficients: vec![
                0.428, -0.367, -0.100, 0.857, 0.140, 0.085, 0.033, 0.032, -0.011, -0.060, 0.020, -0.005,
            ],
            std_errors: vec![0.0; 12],
            r_squared: 0.29,
            adj_r_squared: 0.2872,
            residual_variance: 1.0,
            n_obs: 860,
        };
        let prices: Vec<f64> = profiles.iter().map(|p| p.mean_price).collect();
        let va = crate::hedonic::value_added(&fit, &profiles, &prices).unwrap();
        let h = hedonic_distance(&va).unwrap();
        let idx = closeness_index(&h);
        let soy = 4;
        for (i, v) in idx.iter().enumerate() {
            if i != soy {
                assert!(idx[soy] < *v);
            }
        }
    }

    #[test]
    fn distance_file_round_trip() {
        let chars = milk_chars();
        let mut set = standard_distance_set(&chars).unwrap();
        let mut v = value_matrix(vec![
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            vec![0.5, 3.0],
            vec![1.0, 1.0],
            vec![9.0, 9.0],
        ]);
        v.types = chars.types.clone();
        add_hedonic(&mut set, &v).unwrap();
        assert_eq!(set.matrices.len(), 13);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_distances(&p, &set).unwrap();
        assert_eq!(load_distances(&p).unwrap(), set);
        assert!(matches!(set.get("NOPE"), Err(Error::UnknownDistance(_))));
    }

    proptest! {
        #[test]
        fn continuous_properties(
            fat in prop::collection::vec(0.1f64..10.0, 4),
            org in prop::collection::vec(0.0f64..1.0, 4),
        ) {
            let types: Vec<String> = (0..4).map(|i| format!("t{i}")).collect();
            let chars = OwnPriceCharacteristics {
                types,
                share: vec![0.25; 4],
                fat: fat.clone(),
                organic: org.iter().map(|o| o.max(0.01)).collect(),
                size: vec![10.0; 4],
                closeness: None,
            };
            let fo = build_continuous(&chars, &[Dimension::Fat, Dimension::Organic]).unwrap();
            prop_assert!(fo.is_symmetric(0.0));
            for i in 0..4 { for j in 0..4 { if i != j {
                prop_assert!(fo.values[i][j] > 0.0 && fo.values[i][j] <= 1.0);
            }}}
            // a zero-delta dimension (constant size) leaves closeness unchanged
            let fos = build_continuous(&chars, &[Dimension::Fat, Dimension::Organic, Dimension::Size]).unwrap();
            for i in 0..4 { for j in 0..4 {
                prop_assert!((fo.values[i][j] - fos.values[i][j]).abs() < 1e-15);
            }}
        }

        #[test]
        fn closeness_strictly_decreasing(deltas in prop::collection::vec(-2.0f64..2.0, 1..5), k in 0usize..5, bump in 1e-3f64..1.0) {
            let k = k % deltas.len();
            let mut wider = deltas.clone();
            wider[k] = (deltas[k].abs() + bump).copysign(deltas[k]);
            prop_assert!(closeness(&wider) < closeness(&deltas));
        }

        #[test]
        fn nn_rows_normalised_and_symmetric(vals in prop::collection::vec(0.01f64..1.0, 15)) {
            // fill the strict upper triangle of a 6×6 matrix
            let n = 6;
            let mut v = vec![vec![0.0; n]; n];
            let mut k = 0;
            for i in 0..n { for j in (i + 1)..n { v[i][j] = vals[k]; v[j][i] = vals[k]; k += 1; } }
            let m = toy("x", v);
            let raw = nearest_neighbor_raw(&m).unwrap();
            for row in &raw { prop_assert_eq!(row.iter().sum::<f64>(), 1.0); }
            let nn = nearest_neighbor(&m, "NN").unwrap();
            prop_assert!(nn.is_symmetric(0.0));
            for row in &nn.values { for x in row { prop_assert!(*x == 0.0 || *x == 1.0); } }
        }

        #[test]
        fn hedonic_scale_invariant(vals in prop::collection::vec(-50.0f64..50.0, 12), c in 0.01f64..100.0) {
            let rows: Vec<Vec<f64>> = vals.chunks(3).map(|r| r.to_vec()).collect();
            let v = value_matrix(rows.clone());
            let Ok(h) = hedonic_distance(&v) else { return Ok(()); };
            let scaled = value_matrix(rows.iter().map(|r| r.iter().map(|x| x * c).collect()).collect());
            let hs = hedonic_distance(&scaled).unwrap();
            for i in 0..4 { for j in 0..4 {
                prop_assert!((h.values[i][j] - hs.values[i][j]).abs() < 1e-12);
            }}
        }
    }
}
