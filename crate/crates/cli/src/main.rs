//! Command-line front end: simulate or load purchase data, fit hedonic price
//! equations and distance matrices, estimate demand systems, and compare fits.
//!
//! Failures print one JSON object on stderr, `{"error": <kind>, "message": ...}`,
//! and exit with status 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedmetric::demand::ModelSpec;
use hedmetric::estimator::FitOptions;
use hedmetric::hedonic::{fit_hedonic, write_hedonic_table, HedonicForm};
use hedmetric::metrics::write_distances;
use hedmetric::panel::{
    aggregate_weekly, load_panel, load_purchases, milk_types, write_panel, write_purchases, AggregateOptions,
    MarketPanel, PurchaseTable, Schema,
};
use hedmetric::pipeline::{
    build_inputs, compare_files, load_truth, run, simulate, write_comparison, write_containment, ModelConfig, RunConfig,
};
use hedmetric::Result;

/// Directory used when neither `--out-dir` nor `HEDMETRIC_OUT` is set.
const DEFAULT_OUT: &str = "hedmetric_out";

#[derive(Parser)]
#[command(
    name = "hedmetric",
    version,
    about = "Rotterdam demand systems with distance-metric and hedonic-metric approximations"
)]
struct Cli {
    /// Output directory. Overrides the `output_dir` of a run config.
    #[arg(long, global = true, env = "HEDMETRIC_OUT")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the hedonic price equation and write its coefficient table.
    Hedonic {
        #[command(flatten)]
        data: DataArgs,
        /// Functional form of the price equation.
        #[arg(long, default_value = "semilog")]
        form: FormArg,
    },
    /// Build every distance matrix (standard and hedonic) and write them as CSV.
    Distances {
        #[command(flatten)]
        data: DataArgs,
        /// Hedonic form used for the hedonic distance.
        #[arg(long, default_value = "semilog")]
        hedonic_form: FormArg,
    },
    /// Fit one demand system and write coefficients, elasticities,
    /// diagnostics, a text summary and the fit as JSON.
    Estimate {
        #[command(flatten)]
        data: DataArgs,
        /// Demand system to fit.
        #[arg(long, default_value = "original")]
        model: ModelArg,
        /// Comma-separated distance matrices for `--model dm`.
        #[arg(long, value_delimiter = ',', default_value = "FAT,ORGANIC,NN_FO")]
        distances: Vec<String>,
        /// Comma-separated own-price characteristics for `--model dm`.
        #[arg(long, value_delimiter = ',', default_value = "share,fat,organic")]
        own_price: Vec<String>,
        /// Hedonic form used for the hedonic distance.
        #[arg(long, default_value = "semilog")]
        hedonic_form: FormArg,
        /// Saved fit whose 95% intervals the new elasticities are checked against.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Label used in output file names. Defaults to the model variant.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Generate synthetic purchases, a weekly panel and the truth used.
    Simulate {
        /// `original`, `dm`, `hm`, or a ground-truth JSON file.
        #[arg(long, default_value = "original")]
        truth: String,
        /// Number of weeks in the panel.
        #[arg(long, default_value_t = 209)]
        weeks: usize,
        /// Number of purchase records.
        #[arg(long, default_value_t = 2000)]
        records: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hedonic form used when the truth has no price equation of its own.
        #[arg(long, default_value = "semilog")]
        hedonic_form: FormArg,
    },
    /// Check a fit's elasticities against a baseline fit's 95% intervals.
    Compare {
        /// Fit JSON to check.
        candidate: PathBuf,
        /// Fit JSON supplying the intervals.
        baseline: PathBuf,
        /// Also write `containment.csv` and `comparison.csv` to the output directory.
        #[arg(long)]
        write: bool,
    },
    /// Run a JSON config end to end.
    Run {
        /// Config file. Omit with `--demo`.
        #[arg(required_unless_present = "demo")]
        config: Option<PathBuf>,
        /// Run the bundled demo config on simulated data.
        #[arg(long, conflicts_with = "config")]
        demo: bool,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Purchase records CSV.
    #[arg(long)]
    purchases: PathBuf,
    /// Weekly panel CSV. Aggregated from the purchases when omitted.
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Comma-separated product types in panel order. Defaults to the milk types.
    #[arg(long, value_delimiter = ',')]
    types: Option<Vec<String>>,
}

#[derive(Args)]
struct FitArgs {
    /// Relative change in the residual covariance at which FGLS stops.
    #[arg(long, default_value_t = FitOptions::default().tolerance)]
    tolerance: f64,
    /// Iteration cap for FGLS.
    #[arg(long, default_value_t = FitOptions::default().max_iterations)]
    max_iterations: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Linear,
    Semilog,
}

impl From<FormArg> for HedonicForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Linear => HedonicForm::Linear,
            FormArg::Semilog => HedonicForm::Semilog,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Original,
    Dm,
    Hm,
}

impl DataArgs {
    fn types(&self) -> Vec<String> {
        self.types.clone().unwrap_or_else(milk_types)
    }

    fn load(&self) -> Result<(PurchaseTable, MarketPanel)> {
        let purchases = load_purchases(&self.purchases, &Schema::with_types(self.types()))?;
        let panel = match &self.panel {
            Some(p) => load_panel(p)?,
            None => aggregate_weekly(&purchases, AggregateOptions::default())?,
        };
        Ok((purchases, panel))
    }
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn execute(cli: Cli) -> Result<()> {
    let out = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    match cli.command {
        Command::Hedonic { data, form } => {
            let purchases = load_purchases(&data.purchases, &Schema::with_types(data.types()))?;
            let fit = fit_hedonic(&purchases, form.into())?;
            let path = out.join(format!("hedonic_{}.csv", HedonicForm::from(form)));
            write_hedonic_table(&path, &fit)?;
            report(&[path]);
        }
        Command::Distances { data, hedonic_form } => {
            let (purchases, panel) = data.load()?;
            let (_, inputs) = build_inputs(&purchases, &panel, hedonic_form.into())?;
            let path = out.join("distances.csv");
            write_distances(&path, &inputs.distances)?;
            report(&[path]);
        }
        Command::Estimate {
            data,
            model,
            distances,
            own_price,
            hedonic_form,
            baseline,
            name,
            fit,
        } => {
            let spec = match model {
                ModelArg::Original => ModelSpec::Original,
                ModelArg::Dm => ModelSpec::Dm { distances, own_price },
                ModelArg::Hm => ModelSpec::hm(),
            };
            let config = RunConfig {
                types: Some(data.types()),
                purchases: Some(data.purchases),
                panel: data.panel,
                simulate: None,
                hedonic_form: hedonic_form.into(),
                aggregate: AggregateOptions::default(),
                models: vec![ModelConfig {
                    name: name.unwrap_or_else(|| spec.variant().to_string()),
                    spec,
                }],
                baseline: baseline.map(|b| b.display().to_string()),
                output_dir: out,
                fit: FitOptions {
                    tolerance: fit.tolerance,
                    max_iterations: fit.max_iterations,
                },
            };
            report(&run(&config)?.files);
        }
        Command::Simulate {
            truth,
            weeks,
            records,
            seed,
            hedonic_form,
        } => {
            let truth = load_truth(&truth, seed)?;
            let (purchases, panel) = simulate(&truth, weeks, records, hedonic_form.into())?;
            let files = [out.join("purchases.csv"), out.join("panel.csv"), out.join("truth.json")];
            write_purchases(&files[0], &purchases)?;
            write_panel(&files[1], &panel)?;
            let text = serde_json::to_string_pretty(&truth).map_err(hedmetric::Error::from)? + "\n";
            std::fs::write(&files[2], text).map_err(|e| hedmetric::Error::Io {
                path: files[2].clone(),
                source: e,
            })?;
            report(&files);
        }
        Command::Compare {
            candidate,
            baseline,
            write,
        } => {
            let cmp = compare_files(&candidate, &baseline)?;
            print!("{}", cmp.render());
            if write {
                write_containment(out.join("containment.csv"), &cmp.containment)?;
                write_comparison(out.join("comparison.csv"), &cmp.rows)?;
            }
        }
        Command::Run { config, demo } => {
            let mut config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => {
                    debug_assert!(demo);
                    RunConfig::demo(Path::new(DEFAULT_OUT))?
                }
            };
            if let Some(dir) = cli.out_dir {
                config.output_dir = dir;
            }
            report(&run(&config)?.files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
