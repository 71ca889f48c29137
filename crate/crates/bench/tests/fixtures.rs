use hedmetric_bench::{milk_data, milk_inputs};

#[test]
fn fixtures_have_requested_sizes() {
    let (purchases, panel) = milk_data(60, 300, 1);
    assert_eq!(purchases.len(), 300);
    assert_eq!(panel.n_weeks(), 60);
    let (_, inputs) = milk_inputs(60, 300, 1);
    assert!(inputs.distances.get("HEDONIC").is_ok());
}
