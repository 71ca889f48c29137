//! End-to-end runs: load or simulate data, build distances, fit every model,
//! and write all tables and a text summary to one directory.

mod report;
mod tables;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use report::{compare, compare_files, render_model, Comparison};
pub use tables::{
    coefficient_rows, load_coefficients, load_comparison, load_containment, load_diagnostics, load_elasticities,
    write_coefficients, write_comparison, write_containment, write_diagnostics, write_elasticities, CoefficientRow,
    ComparisonRow, Diagnostics,
};

use crate::demand::{ci_containment, fit_model, ModelFit, ModelSpec, StructureInputs};
use crate::error::{Error, Result};
use crate::estimator::FitOptions;
use crate::hedonic::{fit_hedonic, value_added, write_hedonic_table, HedonicFit, HedonicForm};
use crate::io::{open, write_text};
use crate::metrics::{add_hedonic, standard_distance_set, write_distances, OwnPriceCharacteristics};
use crate::panel::{
    aggregate_weekly, attribute_profile, load_panel, load_purchases, milk_types, write_panel, write_purchases,
    AggregateOptions, MarketPanel, PurchaseTable, Schema,
};
use crate::synth::{
    gen_panel, gen_purchases, milk_dm_truth, milk_hedonic_truth, milk_hm_truth, milk_original_truth,
    AttributeCalibration, Calibration, GroundTruth,
};

/// Purchase-price disturbance used when a simulated truth has no hedonic
/// equation of its own.
const DEFAULT_HEDONIC_NOISE: f64 = 0.05;

/// Bundled configuration that simulates the milk market and fits the three
/// model variants.
pub const DEMO_CONFIG: &str = include_str!("../../data/demo_config.json");

/// Synthetic data source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    /// `original`, `dm`, `hm`, or a path to a ground-truth JSON file.
    pub truth: String,
    #[serde(default = "default_weeks")]
    pub weeks: usize,
    #[serde(default = "default_records")]
    pub records: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_weeks() -> usize {
    209
}

fn default_records() -> usize {
    2000
}

/// One model to fit, labelled for file names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

/// Everything a run needs. Relative paths are resolved against the
/// directory of the config file by [`RunConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Product types in panel order. Defaults to the bundled milk types.
    #[serde(default)]
    pub types: Option<Vec<String>>,
    #[serde(default)]
    pub purchases: Option<PathBuf>,
    /// Weekly panel. When absent it is aggregated from the purchases or
    /// simulated.
    #[serde(default)]
    pub panel: Option<PathBuf>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub hedonic_form: HedonicForm,
    #[serde(default)]
    pub aggregate: AggregateOptions,
    pub models: Vec<ModelConfig>,
    /// Model name from `models`, or a path to a saved fit, whose intervals
    /// the other models are checked against.
    #[serde(default)]
    pub baseline: Option<String>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub fit: FitOptions,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let config: RunConfig = serde_json::from_reader(open(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        Ok(config.resolve_against(base))
    }

    /// Parses a config held in memory, resolving paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        Ok(config.resolve_against(base))
    }

    /// The bundled demo, writing into `output_dir`.
    pub fn demo(output_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config = Self::parse(DEMO_CONFIG, Path::new(""))?;
        config.output_dir = output_dir.into();
        Ok(config)
    }

    fn resolve_against(mut self, base: &Path) -> Self {
        let join = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        self.purchases = self.purchases.map(join);
        self.panel = self.panel.map(join);
        self.output_dir = join(self.output_dir);
        if let Some(sim) = &mut self.simulate {
            if !is_builtin_truth(&sim.truth) {
                sim.truth = join(PathBuf::from(&sim.truth)).display().to_string();
            }
        }
        if let Some(b) = &self.baseline {
            if !self.models.iter().any(|m| &m.name == b) {
                self.baseline = Some(join(PathBuf::from(b)).display().to_string());
            }
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::invalid("config lists no models"));
        }
        for (k, m) in self.models.iter().enumerate() {
            if m.name.is_empty()
                || !m
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::invalid(format!(
                    "model name `{}` must be non-empty ASCII letters, digits, `_` or `-`",
                    m.name
                )));
            }
            if self.models[..k].iter().any(|o| o.name == m.name) {
                return Err(Error::invalid(format!("model name `{}` is repeated", m.name)));
            }
        }
        if self.simulate.is_none() && self.purchases.is_none() {
            return Err(Error::invalid("config needs `purchases` or `simulate`"));
        }
        if self.simulate.is_some() && (self.purchases.is_some() || self.panel.is_some()) {
            return Err(Error::invalid(
                "`simulate` cannot be combined with `purchases` or `panel`",
            ));
        }
        Ok(())
    }
}

fn is_builtin_truth(name: &str) -> bool {
    matches!(name, "original" | "dm" | "hm")
}

/// Ground truth by built-in name or from a JSON file.
pub fn load_truth(name_or_path: &str, seed: u64) -> Result<GroundTruth> {
    let truth = match name_or_path {
        "original" => milk_original_truth(seed)?,
        "dm" => milk_dm_truth(seed)?.0,
        "hm" => milk_hm_truth(seed)?.0,
        path => {
            let t: GroundTruth = serde_json::from_reader(open(Path::new(path))?)?;
            t.with_seed(seed)
        }
    };
    truth.validate()?;
    Ok(truth)
}

/// Simulated purchases and weekly panel for a truth calibrated to the
/// bundled market. A truth without a hedonic equation gets the reference one
/// in `form`.
pub fn simulate(
    truth: &GroundTruth,
    weeks: usize,
    records: usize,
    form: HedonicForm,
) -> Result<(PurchaseTable, MarketPanel)> {
    let mut truth = truth.clone();
    if truth.hedonic.is_none() {
        truth.hedonic = Some(milk_hedonic_truth(form, DEFAULT_HEDONIC_NOISE));
    }
    let purchases = gen_purchases(&truth, records, &AttributeCalibration::milk()?)?;
    let panel = gen_panel(&truth, weeks, &Calibration::milk()?)?;
    Ok((purchases, panel))
}

/// Hedonic regression plus the distance matrices and own-price
/// characteristics derived from the purchases. Shares come from the panel.
pub fn build_inputs(
    purchases: &PurchaseTable,
    panel: &MarketPanel,
    form: HedonicForm,
) -> Result<(HedonicFit, StructureInputs)> {
    if purchases.types != panel.types {
        return Err(Error::invalid("purchases and panel list different product types"));
    }
    let hedonic = fit_hedonic(purchases, form)?;
    let profiles = attribute_profile(purchases)?;
    let chars = OwnPriceCharacteristics::from_profiles(&profiles, &panel.mean_shares())?;
    let mut distances = standard_distance_set(&chars)?;
    let prices: Vec<f64> = profiles.iter().map(|p| p.mean_price).collect();
    add_hedonic(&mut distances, &value_added(&hedonic, &profiles, &prices)?)?;
    Ok((hedonic, StructureInputs { distances, chars }))
}

/// A fitted model from a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedFit {
    pub name: String,
    pub fit: ModelFit,
}

/// What [`run`] produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub fits: Vec<NamedFit>,
    pub hedonic: HedonicFit,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Sink {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }
}

/// Runs the configured analysis and writes its artifacts:
/// `purchases.csv`, `panel.csv`, `hedonic.csv`, `distances.csv`, then per
/// model `fit_*.json`, `coefficients_*.csv`, `elasticities_*.csv`,
/// `diagnostics_*.csv` and (with a baseline) `containment_*.csv`, and finally
/// `comparison.csv` and `summary.txt`. Simulated runs also write `truth.json`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let types = config.types.clone().unwrap_or_else(milk_types);
    let mut sink = Sink {
        dir: config.output_dir.clone(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(&sink.dir).map_err(|e| Error::io(&sink.dir, e))?;

    let (purchases, panel) = match &config.simulate {
        Some(sim) => {
            let truth = load_truth(&sim.truth, sim.seed)?;
            if truth.types != types {
                return Err(Error::invalid(
                    "simulated truth and config list different product types",
                ));
            }
            let text = serde_json::to_string_pretty(&truth)? + "\n";
            write_text(&sink.path("truth.json"), &text)?;
            simulate(&truth, sim.weeks, sim.records, config.hedonic_form)?
        }
        None => {
            let path = config.purchases.as_ref().expect("validated");
            let purchases = load_purchases(path, &Schema::with_types(types.clone()))?;
            let panel = match &config.panel {
                Some(p) => load_panel(p)?,
                None => aggregate_weekly(&purchases, config.aggregate)?,
            };
            (purchases, panel)
        }
    };
    if panel.types != types {
        return Err(Error::invalid("panel and config list different product types"));
    }
    write_purchases(sink.path("purchases.csv"), &purchases)?;
    write_panel(sink.path("panel.csv"), &panel)?;

    let (hedonic, inputs) = build_inputs(&purchases, &panel, config.hedonic_form)?;
    write_hedonic_table(sink.path("hedonic.csv"), &hedonic)?;
    write_distances(sink.path("distances.csv"), &inputs.distances)?;

    let mut fits = Vec::with_capacity(config.models.len());
    for m in &config.models {
        let inputs = (!matches!(m.spec, ModelSpec::Original)).then_some(&inputs);
        let fit = fit_model(&panel, &m.spec, inputs, &config.fit)?;
        fits.push(NamedFit {
            name: m.name.clone(),
            fit,
        });
    }

    let baseline: Option<NamedFit> = match &config.baseline {
        None => None,
        Some(b) => match fits.iter().find(|f| &f.name == b) {
            Some(f) => Some(f.clone()),
            None => Some(NamedFit {
                name: Path::new(b)
                    .file_stem()
                    .map_or_else(|| b.clone(), |s| s.to_string_lossy().into_owned()),
                fit: ModelFit::load(b)?,
            }),
        },
    };

    let mut summary = String::new();
    let mut comparison = Vec::with_capacity(fits.len());
    for f in &fits {
        let rep = f.fit.elasticities()?;
        f.fit.save(sink.path(&format!("fit_{}.json", f.name)))?;
        write_coefficients(
            sink.path(&format!("coefficients_{}.csv", f.name)),
            &coefficient_rows(&f.fit),
        )?;
        write_elasticities(sink.path(&format!("elasticities_{}.csv", f.name)), &rep)?;
        write_diagnostics(
            sink.path(&format!("diagnostics_{}.csv", f.name)),
            &Diagnostics::from_fit(&f.fit, &rep),
        )?;
        let containment = match &baseline {
            Some(b) if b.name != f.name => {
                let c = ci_containment(&rep, &b.fit.elasticities()?)?;
                write_containment(sink.path(&format!("containment_{}.csv", f.name)), &c)?;
                Some(c)
            }
            _ => None,
        };
        summary.push_str(&render_model(&f.name, &f.fit, &rep, containment.as_ref()));
        comparison.push(ComparisonRow::new(
            &f.name,
            &f.fit,
            containment.map(|c| c.outside_count()),
        ));
    }
    if let Some(b) = &baseline {
        if !fits.iter().any(|f| f.name == b.name) {
            comparison.push(ComparisonRow::new(&b.name, &b.fit, None));
        }
    }
    write_comparison(sink.path("comparison.csv"), &comparison)?;
    write_text(&sink.path("summary.txt"), &summary)?;

    Ok(RunOutput {
        output_dir: sink.dir,
        fits,
        hedonic,
        files: sink.files,
    })
}
