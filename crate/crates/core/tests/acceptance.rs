//! Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
//! exits nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hedmetric::calibration::{
    milk_profiles, milk_structure_inputs, reference_hedonic, MILK_EXPENDITURE, MILK_HICKSIAN, MILK_SHARES,
};
use hedmetric::demand::{fit_model, marshallian_from, model_map, ModelFit, ModelSpec, StructureInputs};
use hedmetric::estimator::{aic, FitOptions};
use hedmetric::hedonic::{fit_hedonic, implicit_prices, value_added, HedonicForm};
use hedmetric::metrics::{
    build_continuous, hedonic_distance, standard_distance_set, ClosenessKind, Dimension, OwnPriceCharacteristics,
};
use hedmetric::panel::milk_types;
use hedmetric::pipeline::{run, RunConfig};
use hedmetric::synth::{
    gen_panel, gen_purchases, milk_dm_truth, milk_hedonic_truth, milk_hm_truth, milk_original_truth, run_recovery,
    AttributeCalibration, Calibration, GroundTruth,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table<const N: usize>(rows: &[[f64; N]]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

/// Noisy panels use 209 weeks, giving 208 differenced observations.
const WEEKS: usize = 209;
const SEEDS: usize = 200;

fn slutsky() -> Outcome {
    let m = marshallian_from(&table(&MILK_HICKSIAN), &MILK_EXPENDITURE, &MILK_SHARES);
    let (two, skim) = (m[0][0], m[1][1]);
    check(
        (two + 0.8179).abs() <= 5e-4 && (skim + 0.8832).abs() <= 5e-4,
        format!("2% own = {two:.5}, skim own = {skim:.5}"),
    )
}

fn noisy_original_fit() -> ModelFit {
    let truth = milk_original_truth(11).unwrap();
    let panel = gen_panel(&truth, WEEKS, &Calibration::milk().unwrap()).unwrap();
    fit_model(&panel, &ModelSpec::Original, None, &FitOptions::default()).unwrap()
}

fn engel() -> Outcome {
    let reference: f64 = MILK_SHARES.iter().zip(&MILK_EXPENDITURE).map(|(w, e)| w * e).sum();
    let fitted = noisy_original_fit().elasticities().unwrap().engel_aggregation();
    check(
        (reference - 1.0).abs() <= 5e-4 && (fitted - 1.0).abs() <= 1e-10,
        format!("table sum = {reference:.5}, fit sum - 1 = {:.2e}", fitted - 1.0),
    )
}

fn symmetry() -> Outcome {
    let lhs: f64 = 0.3400 * 0.2708;
    let rhs = 0.2713 * 0.33953;
    let gap = noisy_original_fit().elasticities().unwrap().symmetry_gap();
    check(
        (lhs - rhs).abs() <= 1e-3 && gap <= 1e-12,
        format!(
            "table gap = {:.2e}, fit max |w_i e_ij - w_j e_ji| = {gap:.2e}",
            (lhs - rhs).abs()
        ),
    )
}

fn reference_inputs() -> StructureInputs {
    milk_structure_inputs(&reference_hedonic(HedonicForm::Semilog)).unwrap()
}

fn parameter_counts() -> Outcome {
    let inputs = reference_inputs();
    let types = milk_types();
    let k: Vec<usize> = [ModelSpec::dm_full(), ModelSpec::dm_fat_organic(), ModelSpec::hm()]
        .iter()
        .map(|s| model_map(s, &types, types.len() - 1, Some(&inputs)).unwrap().n_free())
        .collect();
    check(k == [23, 15, 13], format!("k = {k:?}"))
}

fn aic_identity() -> Outcome {
    let cases = [
        (2740.689, 23, "-5435.378"),
        (2734.468, 15, "-5438.936"),
        (2733.933, 13, "-5441.866"),
    ];
    let got: Vec<String> = cases.iter().map(|&(ll, k, _)| format!("{:.3}", aic(ll, k))).collect();
    let ok = cases.iter().zip(&got).all(|(c, g)| c.2 == g);
    check(ok, format!("AIC = {}", got.join(", ")))
}

fn distances() -> Outcome {
    let profiles = milk_profiles().unwrap();
    let chars = OwnPriceCharacteristics::from_profiles(&profiles, &MILK_SHARES).unwrap();
    let fat = build_continuous(&chars, &[Dimension::Fat]).unwrap();
    let types = milk_types();
    let (i, j) = (
        types.iter().position(|t| t == "2%").unwrap(),
        types.iter().position(|t| t == "1%").unwrap(),
    );
    let value = fat.get(i, j);
    let mut matrices = standard_distance_set(&chars).unwrap().matrices;
    for form in [HedonicForm::Linear, HedonicForm::Semilog] {
        let prices: Vec<f64> = profiles.iter().map(|p| p.mean_price).collect();
        let values = value_added(&reference_hedonic(form), &profiles, &prices).unwrap();
        matrices.push(hedonic_distance(&values).unwrap());
    }
    let continuous: Vec<_> = matrices
        .iter()
        .filter(|m| m.kind == ClosenessKind::Continuous)
        .collect();
    // The diagonal is zero by convention; every other entry must lie in (0, 1].
    let in_range = continuous.iter().all(|m| {
        m.is_symmetric(0.0)
            && (0..m.n()).all(|i| {
                (0..m.n()).all(|j| {
                    if i == j {
                        m.get(i, j) == 0.0
                    } else {
                        m.get(i, j) > 0.0 && m.get(i, j) <= 1.0
                    }
                })
            })
    });
    check(
        (value - 0.7645).abs() <= 5e-4 && in_range,
        format!(
            "fat closeness(2%,1%) = {value:.5}; {} continuous matrices symmetric with off-diagonal entries in (0,1]: {in_range}",
            continuous.len()
        ),
    )
}

/// Largest deviation of a zero-noise fit's coefficients from the truth.
fn noiseless_error(truth: &GroundTruth, spec: &ModelSpec, inputs: Option<&StructureInputs>) -> f64 {
    let panel = gen_panel(&truth.without_noise(), WEEKS, &Calibration::milk().unwrap()).unwrap();
    let fit = fit_model(&panel, spec, inputs, &FitOptions::default()).unwrap();
    let f = &fit.fit;
    f.free_names
        .iter()
        .zip(&f.free)
        .chain(f.full_names.iter().zip(&f.full))
        .map(|(name, est)| (est - truth.value(name).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn original_recovery() -> Outcome {
    let truth = milk_original_truth(1).unwrap();
    let exact = noiseless_error(&truth, &ModelSpec::Original, None);
    let report = run_recovery(
        &truth,
        &Calibration::milk().unwrap(),
        WEEKS,
        SEEDS,
        7,
        &ModelSpec::Original,
        None,
        &FitOptions::default(),
    )
    .unwrap();
    let coverage = report.coverage(3.0);
    check(
        exact <= 1e-8 && coverage >= 0.95,
        format!(
            "zero-noise max error = {exact:.2e}; within 3 SE = {:.1}% over {SEEDS} seeds",
            100.0 * coverage
        ),
    )
}

fn structured_recovery() -> Outcome {
    let cal = Calibration::milk().unwrap();
    let (dm, dm_inputs) = milk_dm_truth(1).unwrap();
    let (hm, hm_inputs) = milk_hm_truth(1).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for (name, truth, spec, inputs) in [
        ("dm", &dm, ModelSpec::dm_fat_organic(), &dm_inputs),
        ("hm", &hm, ModelSpec::hm(), &hm_inputs),
    ] {
        let exact = noiseless_error(truth, &spec, Some(inputs));
        let report = run_recovery(
            truth,
            &cal,
            WEEKS,
            SEEDS,
            7,
            &spec,
            Some(inputs),
            &FitOptions::default(),
        )
        .unwrap();
        let coverage = report.coverage(3.0);
        ok &= exact <= 1e-8 && coverage >= 0.95;
        details.push(format!(
            "{name}: zero-noise {exact:.1e}, within 3 SE {:.1}%",
            100.0 * coverage
        ));
        if name == "hm" {
            let lambda = spec.shared_names()[0].clone();
            assert!(truth.value(&lambda).unwrap() > 0.0);
            let positive = report.positive_fraction(&lambda).unwrap();
            ok &= positive >= 0.95;
            details.push(format!("{lambda} > 0 in {:.1}%", 100.0 * positive));
        }
    }
    check(ok, details.join("; "))
}

fn hedonic_oracle() -> Outcome {
    let cal = AttributeCalibration::milk().unwrap();
    let mut worst: f64 = 0.0;
    for form in [HedonicForm::Linear, HedonicForm::Semilog] {
        let mut truth = milk_original_truth(3).unwrap();
        let h = milk_hedonic_truth(form, 0.0);
        truth.hedonic = Some(h.clone());
        let fit = fit_hedonic(&gen_purchases(&truth, 500, &cal).unwrap(), form).unwrap();
        worst = fit
            .coefficients
            .iter()
            .zip(&h.coefficients)
            .map(|(a, b)| (a - b).abs())
            .fold(worst.max((fit.intercept - h.intercept).abs()), f64::max);
    }
    let semilog = reference_hedonic(HedonicForm::Semilog);
    let k = semilog.attributes.iter().position(|a| a == "organic").unwrap();
    let implicit = implicit_prices(&semilog, 17.82).unwrap()[k];
    check(
        worst <= 1e-9 && format!("{implicit:.3}") == "7.627",
        format!("max |beta error| = {worst:.2e}; organic implicit price at 17.82 = {implicit:.4}"),
    )
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(&RunConfig::demo(a.path()).unwrap()).unwrap();
    run(&RunConfig::demo(b.path()).unwrap()).unwrap();
    let mut differing = Vec::new();
    for f in &first.files {
        let name = f.file_name().unwrap();
        if std::fs::read(f).unwrap() != std::fs::read(b.path().join(name)).unwrap() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    check(
        differing.is_empty(),
        format!("{} files compared, differing: {differing:?}", first.files.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 Slutsky conversion", slutsky, Some(Duration::from_secs(1))),
        ("2 Engel aggregation", engel, None),
        ("3 Hicksian symmetry", symmetry, None),
        ("4 parameter counts", parameter_counts, None),
        ("5 AIC identity", aic_identity, None),
        ("6 distance arithmetic", distances, None),
        (
            "7 original-model recovery",
            original_recovery,
            Some(Duration::from_secs(300)),
        ),
        ("8 DM and HM recovery", structured_recovery, None),
        ("9 hedonic recovery", hedonic_oracle, None),
        ("10 pipeline determinism", determinism, None),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(d), Some(limit)) if elapsed > limit => Err(format!("{d}; took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{elapsed:.2?}]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{elapsed:.2?}]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
