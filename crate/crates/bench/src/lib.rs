//! Fixtures shared by the criterion benchmarks in `benches/`.

use hedmetric::demand::StructureInputs;
use hedmetric::hedonic::HedonicForm;
use hedmetric::panel::{MarketPanel, PurchaseTable};
use hedmetric::pipeline::{build_inputs, simulate};
use hedmetric::synth::milk_original_truth;

/// Simulated milk purchases and panel of the given sizes.
pub fn milk_data(weeks: usize, records: usize, seed: u64) -> (PurchaseTable, MarketPanel) {
    let truth = milk_original_truth(seed).expect("bundled truth is valid");
    simulate(&truth, weeks, records, HedonicForm::Semilog).expect("bundled calibration simulates")
}

/// Distance matrices and characteristics built from simulated data.
pub fn milk_inputs(weeks: usize, records: usize, seed: u64) -> (MarketPanel, StructureInputs) {
    let (purchases, panel) = milk_data(weeks, records, seed);
    let (_, inputs) = build_inputs(&purchases, &panel, HedonicForm::Semilog).expect("inputs build");
    (panel, inputs)
}
