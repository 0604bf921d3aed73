//! Fixtures shared by the benches.

use std::f64::consts::PI;

use condensate_core::{Grid, Model, Params, RawParams};

/// Physical exponents on `[0, 1]` with a uniform grid.
pub fn physical_model(cells: usize, eps: f64) -> Model {
    let params = Params::validate(&RawParams::physical(1.0, eps)).expect("physical params are valid");
    Model::new(params, Grid::build(cells, 1.0, 1.0).expect("valid grid")).expect("model builds")
}

/// `1 + amp cos(πx)` on the model's nodes.
pub fn cosine_state(model: &Model, amp: f64) -> Vec<f64> {
    model
        .grid()
        .nodes()
        .iter()
        .map(|x| 1.0 + amp * (PI * x).cos())
        .collect()
}
