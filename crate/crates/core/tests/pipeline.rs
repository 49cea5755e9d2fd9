//! Circuit to chain to observables, through the library API.

use sawtooth_xx::circuit::CircuitParams;
use sawtooth_xx::observables::ObservableSet;
use sawtooth_xx::spinchain::{dense_oracle, lowest_two, ChainSpec, Coupling};
use sawtooth_xx::sweep::{derive_chain_from_circuit, KernelMode};
use sawtooth_xx::variational::{map_circuit, ModelFlag, PrefactorPolicy};
use sawtooth_xx::Error;

#[test]
fn derived_table_chain_matches_dense() {
    let params = CircuitParams::new(-0.8, 1.0, 80.0, 8).unwrap();
    let chain =
        derive_chain_from_circuit(&params, KernelMode::Table, &PrefactorPolicy::default()).unwrap();
    let Coupling::Table(table) = &chain.spec.coupling else {
        panic!("table mode gives a table coupling");
    };
    assert_eq!(table.len(), 7);
    assert_eq!(table[0], 1.0);
    assert!(table.windows(2).all(|w| w[1] < w[0]));

    let eig = lowest_two(&chain.spec, 0).unwrap();
    let dense = dense_oracle(&chain.spec).unwrap();
    // Δ̃ is large here (Δ ≫ J(1) for short chains), so compare relative to |e0|
    assert!(chain.spec.delta_tilde > 1.0);
    assert!((eig.e0 - dense.eigenvalues[0]).abs() < 1e-10 * dense.eigenvalues[0].abs());
    let obs = ObservableSet::from_eigen(&chain.spec, &eig, 1e-9).unwrap();
    assert_eq!(obs.cy.len(), 8);
    assert!(obs.gap >= 0.0);
}

#[test]
fn power_law_mode_uses_the_analytic_exponent_for_short_chains() {
    let params = CircuitParams::new(-0.8, 1.0, 80.0, 10).unwrap();
    let policy = PrefactorPolicy::default();
    let model = map_circuit(&params, &policy).unwrap();
    assert!(model.beta_fit.is_none());
    let chain = derive_chain_from_circuit(&params, KernelMode::PowerLaw, &policy).unwrap();
    assert_eq!(chain.spec.coupling.beta(), Some(model.beta_analytic));
    assert_eq!(chain.spec.delta_tilde, model.delta_tilde.unwrap());
}

#[test]
fn no_interaction_stops_the_pipeline() {
    let params = CircuitParams::new(-0.8, 0.0, 80.0, 8).unwrap();
    let model = map_circuit(&params, &PrefactorPolicy::default()).unwrap();
    assert!(model.has_flag(ModelFlag::NoInteraction));
    let err = derive_chain_from_circuit(&params, KernelMode::Table, &PrefactorPolicy::default())
        .unwrap_err();
    assert!(matches!(err, Error::NoInteraction));
}

#[test]
fn weaker_field_from_longer_chains_increases_correlations() {
    // Δ̃ falls with N, so at fixed β the chain moves towards the ordered side
    let policy = PrefactorPolicy::default();
    let dt: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&n| {
            let p = CircuitParams::new(-0.8, 1.0, 80.0, n).unwrap();
            map_circuit(&p, &policy).unwrap().delta_tilde.unwrap()
        })
        .collect();
    assert!(dt.windows(2).all(|w| w[1] < w[0]), "{dt:?}");

    let cy_half = |delta_tilde: f64| {
        let spec = ChainSpec::power_law(10, delta_tilde, 1.5).unwrap();
        let eig = lowest_two(&spec, 0).unwrap();
        ObservableSet::from_eigen(&spec, &eig, 1e-9)
            .unwrap()
            .cy_half
            .unwrap()
            .abs()
    };
    assert!(cy_half(0.1) > cy_half(10.0));
}

#[test]
fn spin_model_json_round_trip() {
    let params = CircuitParams::new(-0.7, 0.5, 60.0, 200).unwrap();
    let model = map_circuit(
        &params,
        &PrefactorPolicy {
            delta0: 0.5,
            j0: 2.0,
        },
    )
    .unwrap();
    let text = serde_json::to_string(&model).unwrap();
    let back = serde_json::from_str(&text).unwrap();
    assert_eq!(model, back);
}
