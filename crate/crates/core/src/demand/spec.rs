use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::{continuous_name, nn_name, standard_nn_subsets, standard_subsets, Dimension, HEDONIC, NN_HEDONIC};

/// Which demand system to fit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ModelSpec {
    /// Unstructured Rotterdam model with adding-up, homogeneity and symmetry.
    Original,
    /// Cross-price terms as a linear combination of distance matrices, own-price
    /// terms linear in the listed characteristics.
    Dm {
        distances: Vec<String>,
        #[serde(default = "dm_own_price")]
        own_price: Vec<String>,
    },
    /// Cross-price terms from a hedonic closeness matrix and its nearest
    /// neighbour matrix; own-price terms linear in share and closeness index.
    Hm {
        #[serde(default = "hedonic_name")]
        hedonic: String,
        #[serde(default = "nn_hedonic_name")]
        nn: String,
    },
}

fn dm_own_price() -> Vec<String> {
    ["share", "fat", "organic"].map(String::from).to_vec()
}

fn hedonic_name() -> String {
    HEDONIC.to_string()
}

fn nn_hedonic_name() -> String {
    NN_HEDONIC.to_string()
}

/// Own-price characteristics of the hedonic variant.
pub const HM_OWN_PRICE: [&str; 2] = ["share", "closeness"];

impl ModelSpec {
    /// All eight continuous distances and the three nearest-neighbour ones.
    pub fn dm_full() -> Self {
        let mut distances: Vec<String> = standard_subsets().iter().map(|d| continuous_name(d)).collect();
        distances.extend(standard_nn_subsets().iter().map(|d| nn_name(d)));
        ModelSpec::Dm {
            distances,
            own_price: dm_own_price(),
        }
    }

    /// Fat, organic and the fat-organic nearest neighbour.
    pub fn dm_fat_organic() -> Self {
        ModelSpec::Dm {
            distances: vec![
                continuous_name(&[Dimension::Fat]),
                continuous_name(&[Dimension::Organic]),
                nn_name(&[Dimension::Fat, Dimension::Organic]),
            ],
            own_price: dm_own_price(),
        }
    }

    pub fn hm() -> Self {
        ModelSpec::Hm {
            hedonic: hedonic_name(),
            nn: nn_hedonic_name(),
        }
    }

    /// Short variant label: `original`, `dm` or `hm`.
    pub fn variant(&self) -> &'static str {
        match self {
            ModelSpec::Original => "original",
            ModelSpec::Dm { .. } => "dm",
            ModelSpec::Hm { .. } => "hm",
        }
    }

    /// Distance matrix names, in parameter order.
    pub fn distance_names(&self) -> Vec<String> {
        match self {
            ModelSpec::Original => Vec::new(),
            ModelSpec::Dm { distances, .. } => distances.clone(),
            ModelSpec::Hm { hedonic, nn } => vec![hedonic.clone(), nn.clone()],
        }
    }

    /// Own-price characteristic names, in parameter order after the constant.
    pub fn own_price_names(&self) -> Vec<String> {
        match self {
            ModelSpec::Original => Vec::new(),
            ModelSpec::Dm { own_price, .. } => own_price.clone(),
            ModelSpec::Hm { .. } => HM_OWN_PRICE.map(String::from).to_vec(),
        }
    }

    /// Names of the parameters shared across equations.
    pub fn shared_names(&self) -> Vec<String> {
        if matches!(self, ModelSpec::Original) {
            return Vec::new();
        }
        let mut out: Vec<String> = self.distance_names().iter().map(|d| lambda_name(d)).collect();
        out.push(BETA0.to_string());
        out.extend(self.own_price_names().iter().map(|c| beta_name(c)));
        out
    }

    /// Number of freely estimated parameters for an `n`-good system with one
    /// equation dropped.
    pub fn parameter_count(&self, n: usize) -> usize {
        let per_equation = 2 * n.saturating_sub(1);
        match self {
            ModelSpec::Original => {
                let m = n.saturating_sub(1);
                per_equation + m * (m + 1) / 2
            }
            _ => per_equation + self.shared_names().len(),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Original => f.write_str("original"),
            ModelSpec::Dm { distances, .. } => write!(f, "dm[{}]", distances.join("/")),
            ModelSpec::Hm { hedonic, nn } => write!(f, "hm[{hedonic}/{nn}]"),
        }
    }
}

pub const BETA0: &str = "beta0";

pub fn lambda_name(distance: &str) -> String {
    format!("lambda[{distance}]")
}

pub fn beta_name(characteristic: &str) -> String {
    format!("beta[{characteristic}]")
}
