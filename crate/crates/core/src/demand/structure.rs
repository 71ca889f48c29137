use nalgebra::{DMatrix, DVector};

use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::estimator::{block_width, rotterdam_names, ParameterMap, RestrictionSet};
use crate::metrics::{closeness_index, DistanceSet, OwnPriceCharacteristics};

/// Distance matrices and per-type characteristics needed by the structured
/// variants. Type order must match the panel.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureInputs {
    pub distances: DistanceSet,
    pub chars: OwnPriceCharacteristics,
}

fn a_index(n: usize, i: usize) -> usize {
    i * block_width(n)
}

fn b_index(n: usize, i: usize) -> usize {
    i * block_width(n) + 1
}

fn c_index(n: usize, i: usize, j: usize) -> usize {
    i * block_width(n) + 2 + j
}

/// Adding-up over all equations, homogeneity for the estimated equations and
/// symmetry among the estimated equations. Together these make the full
/// price-coefficient matrix symmetric with zero row and column sums.
pub fn original_restrictions(types: &[String], drop: usize) -> RestrictionSet {
    let n = types.len();
    let mut rs = RestrictionSet::new(rotterdam_names(types));
    rs.push("sum of intercepts", (0..n).map(|i| (a_index(n, i), 1.0)).collect(), 0.0);
    rs.push("sum of b", (0..n).map(|i| (b_index(n, i), 1.0)).collect(), 1.0);
    for j in 0..n {
        rs.push(
            format!("column sum of c[.,{}]", types[j]),
            (0..n).map(|i| (c_index(n, i, j), 1.0)).collect(),
            0.0,
        );
    }
    let retained: Vec<usize> = (0..n).filter(|&i| i != drop).collect();
    for &i in &retained {
        rs.push(
            format!("homogeneity of {}", types[i]),
            (0..n).map(|j| (c_index(n, i, j), 1.0)).collect(),
            0.0,
        );
    }
    for (p, &i) in retained.iter().enumerate() {
        for &j in &retained[p + 1..] {
            rs.push(
                format!("symmetry of {} and {}", types[i], types[j]),
                vec![(c_index(n, i, j), 1.0), (c_index(n, j, i), -1.0)],
                0.0,
            );
        }
    }
    rs
}

/// Elimination order: the dropped equation's parameters first, then later
/// columns before earlier ones. The free set is the intercepts and `b` of the
/// estimated equations plus their upper-triangular price block.
fn elimination_priority(n: usize, drop: usize) -> Vec<usize> {
    let w = block_width(n);
    let p = n * w;
    (0..p).map(|k| if k / w == drop { p + k } else { k }).collect()
}

pub fn original_map(types: &[String], drop: usize) -> Result<ParameterMap> {
    check_drop(types.len(), drop)?;
    original_restrictions(types, drop).to_map(&elimination_priority(types.len(), drop))
}

fn check_drop(n: usize, drop: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 product types, got {n}")));
    }
    if drop >= n {
        return Err(Error::invalid(format!("dropped equation {drop} out of range")));
    }
    Ok(())
}

/// Resolved distance matrices and own-price characteristics of a structured
/// variant.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub distance_names: Vec<String>,
    pub distances: Vec<Vec<Vec<f64>>>,
    pub own_price_names: Vec<String>,
    pub own_price: Vec<Vec<f64>>,
}

impl Structure {
    pub fn resolve(spec: &ModelSpec, types: &[String], inputs: &StructureInputs) -> Result<Self> {
        if matches!(spec, ModelSpec::Original) {
            return Err(Error::invalid("the original model has no distance structure"));
        }
        if inputs.chars.types != types {
            return Err(Error::invalid(format!(
                "characteristic types [{}] differ from panel types [{}]",
                inputs.chars.types.join(", "),
                types.join(", ")
            )));
        }
        let mut distances = Vec::new();
        for name in spec.distance_names() {
            let m = inputs.distances.get(&name)?;
            if m.types != types {
                return Err(Error::invalid(format!(
                    "distance `{name}` covers different product types"
                )));
            }
            if !m.is_symmetric(1e-12) {
                return Err(Error::invalid(format!("distance `{name}` is not symmetric")));
            }
            distances.push(m.values.clone());
        }
        let mut own_price = Vec::new();
        for name in spec.own_price_names() {
            let values = match spec {
                // The closeness index is always taken from the hedonic matrix
                // the cross-price terms use.
                ModelSpec::Hm { hedonic, .. } if name == "closeness" => closeness_index(inputs.distances.get(hedonic)?),
                _ => inputs
                    .chars
                    .by_name(&name)
                    .ok_or_else(|| Error::invalid(format!("unknown own-price characteristic `{name}`")))?
                    .to_vec(),
            };
            own_price.push(values);
        }
        Ok(Self {
            distance_names: spec.distance_names(),
            distances,
            own_price_names: spec.own_price_names(),
            own_price,
        })
    }

    pub fn n_shared(&self) -> usize {
        self.distances.len() + 1 + self.own_price.len()
    }

    /// Weights of the shared parameters in `c[i,j]`.
    fn c_row(&self, i: usize, j: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_shared()];
        if i == j {
            let off = self.distances.len();
            row[off] = 1.0;
            for (k, chi) in self.own_price.iter().enumerate() {
                row[off + 1 + k] = chi[i];
            }
        } else {
            for (l, d) in self.distances.iter().enumerate() {
                row[l] = d[i][j];
            }
        }
        row
    }

    /// Price-coefficient matrix implied by shared parameters ordered as
    /// `[λ..., β0, β...]`.
    pub fn c_matrix(&self, shared: &[f64]) -> Result<Vec<Vec<f64>>> {
        if shared.len() != self.n_shared() {
            return Err(Error::dims("shared parameters", self.n_shared(), shared.len()));
        }
        let n = self
            .own_price
            .first()
            .map_or_else(|| self.distances.first().map_or(0, Vec::len), Vec::len);
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.c_row(i, j).iter().zip(shared).map(|(w, s)| w * s).sum())
                    .collect()
            })
            .collect())
    }

    /// Map from `[a_r..., b_r..., λ..., β0, β...]` over the estimated
    /// equations `r` to the full coefficient vector. Adding-up fixes the
    /// dropped equation's intercept and `b`.
    pub fn map(&self, spec: &ModelSpec, types: &[String], drop: usize) -> Result<ParameterMap> {
        let n = types.len();
        check_drop(n, drop)?;
        let retained: Vec<usize> = (0..n).filter(|&i| i != drop).collect();
        let m = retained.len();
        let k = 2 * m + self.n_shared();
        let p = n * block_width(n);
        let mut h = DMatrix::zeros(p, k);
        let mut h0 = DVector::zeros(p);
        let mut free_names = Vec::with_capacity(k);
        for (r, &i) in retained.iter().enumerate() {
            free_names.push(format!("a[{}]", types[i]));
            h[(a_index(n, i), r)] = 1.0;
            h[(a_index(n, drop), r)] = -1.0;
        }
        for (r, &i) in retained.iter().enumerate() {
            free_names.push(format!("b[{}]", types[i]));
            h[(b_index(n, i), m + r)] = 1.0;
            h[(b_index(n, drop), m + r)] = -1.0;
        }
        h0[b_index(n, drop)] = 1.0;
        free_names.extend(spec.shared_names());
        for i in 0..n {
            for j in 0..n {
                for (s, w) in self.c_row(i, j).into_iter().enumerate() {
                    h[(c_index(n, i, j), 2 * m + s)] = w;
                }
            }
        }
        ParameterMap::new(free_names, rotterdam_names(types), h, h0)
    }
}

/// Parameter map for any variant. Structured variants need `inputs`.
pub fn model_map(
    spec: &ModelSpec,
    types: &[String],
    drop: usize,
    inputs: Option<&StructureInputs>,
) -> Result<ParameterMap> {
    match spec {
        ModelSpec::Original => original_map(types, drop),
        _ => {
            let inputs = inputs
                .ok_or_else(|| Error::invalid(format!("model `{spec}` needs distance matrices and characteristics")))?;
            Structure::resolve(spec, types, inputs)?.map(spec, types, drop)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{add_hedonic, standard_distance_set, ClosenessKind, ClosenessMatrix};
    use crate::panel::{attribute_profile, milk_sample, milk_types};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    fn milk_inputs() -> StructureInputs {
        let sample = milk_sample().unwrap();
        let profiles = attribute_profile(&sample).unwrap();
        let shares = [0.34, 0.2713, 0.1807, 0.1766, 0.0314];
        let chars = OwnPriceCharacteristics::from_profiles(&profiles, &shares).unwrap();
        let mut distances = standard_distance_set(&chars).unwrap();
        // A hedonic matrix from a fixed value-added table keeps this test
        // independent of any regression.
        let va = crate::hedonic::ValueAddedMatrix {
            types: milk_types(),
            attributes: vec!["x".into(), "y".into()],
            values: vec![
                vec![1.0, 2.0],
                vec![0.5, 1.0],
                vec![1.5, 2.5],
                vec![0.8, 1.5],
                vec![4.0, 1.0],
            ],
        };
        add_hedonic(&mut distances, &va).unwrap();
        StructureInputs { distances, chars }
    }

    #[test]
    fn original_free_set_and_count() {
        let types = milk_types();
        let map = original_map(&types, 4).unwrap();
        assert_eq!(map.n_free(), 18);
        assert_eq!(map.n_free(), ModelSpec::Original.parameter_count(5));
        assert!(map.free_names.contains(&"c[2%,skim]".to_string()));
        assert!(!map.free_names.iter().any(|f| f.contains("soy")));
    }

    #[test]
    fn two_goods_leave_one_price_parameter() {
        let map = original_map(&names(2), 1).unwrap();
        let c: Vec<_> = map.free_names.iter().filter(|f| f.starts_with("c[")).collect();
        assert_eq!(c, vec!["c[g0,g0]"]);
        assert_eq!(map.n_free(), 3);
    }

    #[test]
    fn original_map_satisfies_all_identities() {
        let types = names(4);
        for drop in 0..4 {
            let map = original_map(&types, drop).unwrap();
            let phi = DVector::from_fn(map.n_free(), |i, _| 0.1 * (i as f64 + 1.0).sin());
            let theta = map.expand(&phi);
            let c = |i: usize, j: usize| theta[c_index(4, i, j)];
            for i in 0..4 {
                let row: f64 = (0..4).map(|j| c(i, j)).sum();
                let col: f64 = (0..4).map(|j| c(j, i)).sum();
                assert!(row.abs() < 1e-14 && col.abs() < 1e-14);
                for j in 0..4 {
                    assert!((c(i, j) - c(j, i)).abs() < 1e-14);
                }
            }
            let bsum: f64 = (0..4).map(|i| theta[b_index(4, i)]).sum();
            assert!((bsum - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn structured_counts_match_spec() {
        let inputs = milk_inputs();
        let types = milk_types();
        for (spec, k) in [
            (ModelSpec::dm_full(), 23),
            (ModelSpec::dm_fat_organic(), 15),
            (ModelSpec::hm(), 13),
        ] {
            let map = model_map(&spec, &types, 4, Some(&inputs)).unwrap();
            assert_eq!(map.n_free(), k, "{spec}");
        }
    }

    #[test]
    fn structured_c_is_symmetric_and_adds_up_intercepts() {
        let inputs = milk_inputs();
        let types = milk_types();
        let spec = ModelSpec::hm();
        let map = model_map(&spec, &types, 4, Some(&inputs)).unwrap();
        let phi = DVector::from_fn(map.n_free(), |i, _| 0.05 * (i as f64 + 0.5).cos());
        let theta = map.expand(&phi);
        for i in 0..5 {
            for j in 0..5 {
                assert!((theta[c_index(5, i, j)] - theta[c_index(5, j, i)]).abs() < 1e-15);
            }
        }
        let asum: f64 = (0..5).map(|i| theta[a_index(5, i)]).sum();
        let bsum: f64 = (0..5).map(|i| theta[b_index(5, i)]).sum();
        assert!(asum.abs() < 1e-15 && (bsum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_distances_leave_only_own_price_terms() {
        let mut inputs = milk_inputs();
        let zero = ClosenessMatrix {
            name: "ZERO".into(),
            kind: ClosenessKind::Continuous,
            types: milk_types(),
            values: vec![vec![0.0; 5]; 5],
        };
        inputs.distances.push(zero);
        let spec = ModelSpec::Dm {
            distances: vec!["ZERO".into()],
            own_price: vec!["share".into()],
        };
        let s = Structure::resolve(&spec, &milk_types(), &inputs).unwrap();
        let c = s.c_matrix(&[0.7, -0.3, 0.2]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    assert!((c[i][i] - (-0.3 + 0.2 * inputs.chars.share[i])).abs() < 1e-15);
                } else {
                    assert_eq!(c[i][j], 0.0);
                }
            }
        }
    }

    #[test]
    fn unknown_distance_is_named() {
        let inputs = milk_inputs();
        let spec = ModelSpec::Dm {
            distances: vec!["FAT".into(), "COLOUR".into()],
            own_price: vec![],
        };
        match model_map(&spec, &milk_types(), 4, Some(&inputs)) {
            Err(Error::UnknownDistance(d)) => assert_eq!(d, "COLOUR"),
            other => panic!("expected unknown distance, got {other:?}"),
        }
    }
}
