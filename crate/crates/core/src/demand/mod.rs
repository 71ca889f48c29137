//! The three demand-system variants, their elasticities and the
//! interval-containment comparison between fits.

mod elasticity;
mod spec;
mod structure;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use elasticity::{
    ci_containment, elasticities, marshallian_from, within_interval, Containment, ElasticityReport, Z95,
};
pub use spec::{beta_name, lambda_name, ModelSpec, BETA0, HM_OWN_PRICE};
pub use structure::{model_map, original_map, original_restrictions, Structure, StructureInputs};

use crate::error::{Error, Result};
use crate::estimator::{build_rows, rotterdam_system, sur_fit, FitOptions, SystemFit};
use crate::io::{open, write_text};
use crate::panel::MarketPanel;

/// A fitted variant together with the shares its elasticities are taken at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub spec: ModelSpec,
    pub types: Vec<String>,
    /// Sample-mean budget shares.
    pub mean_shares: Vec<f64>,
    pub fit: SystemFit,
}

impl ModelFit {
    pub fn elasticities(&self) -> Result<ElasticityReport> {
        elasticities(&self.fit, &self.types, &self.mean_shares)
    }

    /// Shared parameter value, e.g. `lambda[HEDONIC]`.
    pub fn coef(&self, name: &str) -> Option<f64> {
        self.fit
            .free_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.fit.free[i])
            .or_else(|| self.fit.coef(name))
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.fit
            .free_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.fit.free_cov[i][i].max(0.0).sqrt())
            .or_else(|| self.fit.std_error(name))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_text(path.as_ref(), &text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(open(path.as_ref())?)?)
    }
}

/// Fits `spec` to the panel, dropping the last product type's equation.
pub fn fit_model(
    panel: &MarketPanel,
    spec: &ModelSpec,
    inputs: Option<&StructureInputs>,
    opts: &FitOptions,
) -> Result<ModelFit> {
    let rows = build_rows(panel)?;
    let data = rotterdam_system(&rows);
    let drop = panel.n_types() - 1;
    let map = model_map(spec, &panel.types, drop, inputs)?;
    let fit = sur_fit(&data, &map, Some(drop), opts)?;
    Ok(ModelFit {
        spec: spec.clone(),
        types: panel.types.clone(),
        mean_shares: panel.mean_shares(),
        fit,
    })
}

pub fn fit_original(panel: &MarketPanel, opts: &FitOptions) -> Result<ModelFit> {
    fit_model(panel, &ModelSpec::Original, None, opts)
}

pub fn fit_dm(panel: &MarketPanel, spec: &ModelSpec, inputs: &StructureInputs, opts: &FitOptions) -> Result<ModelFit> {
    if !matches!(spec, ModelSpec::Dm { .. }) {
        return Err(Error::invalid(format!("expected a distance-metric spec, got `{spec}`")));
    }
    fit_model(panel, spec, Some(inputs), opts)
}

pub fn fit_hm(panel: &MarketPanel, inputs: &StructureInputs, opts: &FitOptions) -> Result<ModelFit> {
    fit_model(panel, &ModelSpec::hm(), Some(inputs), opts)
}
