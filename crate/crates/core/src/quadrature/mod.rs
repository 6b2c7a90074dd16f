//! Rectangle schemes built from cluster weights, closed-form trigonometric
//! integrals and linear-time bounds on the discrepancy between them.

pub mod bounds;
pub mod boxes;
pub mod integrand;

pub use bounds::{
    angle_error, baseline, bound_report, error_bound_full, error_bound_half, relu_window_bound, BoundComponents,
    Period, LIPSCHITZ,
};
pub use boxes::{build_boxes, BoxScheme};
pub use integrand::{closed_form, numeric_integral, IntegrandSpec, Variant};

use serde::{Deserialize, Serialize};

/// `Σ_i w'_i h(φ_i)`.
pub fn quadrature_sum(boxes: &BoxScheme, spec: &IntegrandSpec) -> f64 {
    boxes.phases.iter().zip(&boxes.widths).map(|(&phi, w)| w * spec.eval(phi)).sum()
}

/// `Σ_i w'_i h(φ_i)` with each output phase `2φ_i` replaced by the measured `ψ_i`.
pub fn quadrature_sum_with_psi(boxes: &BoxScheme, spec: &IntegrandSpec) -> f64 {
    boxes
        .phases
        .iter()
        .zip(&boxes.psi)
        .zip(&boxes.widths)
        .map(|((&phi, &psi), w)| w * spec.eval_with_output_phase(phi, psi))
        .sum()
}

/// One drawn rectangle: its extent, sample point and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub lo: f64,
    pub hi: f64,
    pub phi: f64,
    pub height: f64,
}

pub fn rectangles(boxes: &BoxScheme, spec: &IntegrandSpec) -> Vec<Rectangle> {
    (0..boxes.len())
        .map(|i| Rectangle {
            lo: boxes.boundaries[i],
            hi: boxes.boundaries[i + 1],
            phi: boxes.phases[i],
            height: spec.eval(boxes.phases[i]),
        })
        .collect()
}
