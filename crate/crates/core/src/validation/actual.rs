use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::bounds::{baseline, integral_amplitude};
use crate::quadrature::{BoxScheme, IntegrandSpec, Variant};

/// Brute-force discrepancy between a scheme's rectangle sum and the integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActualError {
    pub k: usize,
    pub variant: Variant,
    pub eps_0: f64,
    /// Largest relative error using the measured output phases ψ.
    pub max_rel: f64,
    pub mean_rel: f64,
    /// Largest relative error with ψ replaced by 2φ.
    pub max_rel_ideal: f64,
    /// For each value of `(a + b) mod p`, the worst relative error over c and σ.
    pub per_sum: Vec<f64>,
}

/// Enumerates every `(a + b) mod p`, every c and both signs σ.
///
/// The integrand is scaled so that its integral has amplitude
/// [`integral_amplitude`]: `|cos(s+φ)|cos(t+2φ)` for abs,
/// `ReLU(σcos(s+φ))cos(t+2φ)` for relu.
pub fn actual_quadrature_error(boxes: &BoxScheme, variant: Variant, p: usize) -> Result<ActualError> {
    let amp = integral_amplitude(variant)?;
    let eps_0 = baseline(variant, boxes.k, p)?;
    let scale = amp / (2.0 / 3.0);
    let w = 2.0 * PI * boxes.k as f64 / p as f64;
    let signs: &[f64] = if variant == Variant::Relu { &[1.0, -1.0] } else { &[1.0] };
    let mut per_sum = vec![0.0f64; p];
    let (mut max_rel, mut max_rel_ideal, mut sum_rel, mut count) = (0.0f64, 0.0f64, 0.0, 0usize);
    for (m, worst) in per_sum.iter_mut().enumerate() {
        for c in 0..p {
            for &sigma in signs {
                let spec = IntegrandSpec {
                    variant,
                    s: w * m as f64 / 2.0,
                    t: w * c as f64,
                    u: 0.0,
                    sigma,
                };
                let exact = scale * spec.closed_form();
                let (mut with_psi, mut ideal) = (0.0, 0.0);
                for i in 0..boxes.len() {
                    let phi = boxes.phases[i];
                    with_psi += boxes.widths[i] * spec.eval_with_output_phase(phi, boxes.psi[i]);
                    ideal += boxes.widths[i] * spec.eval(phi);
                }
                let rel = (scale * with_psi - exact).abs() / eps_0;
                let rel_ideal = (scale * ideal - exact).abs() / eps_0;
                *worst = worst.max(rel);
                max_rel = max_rel.max(rel);
                max_rel_ideal = max_rel_ideal.max(rel_ideal);
                sum_rel += rel;
                count += 1;
            }
        }
    }
    Ok(ActualError {
        k: boxes.k,
        variant,
        eps_0,
        max_rel,
        mean_rel: sum_rel / count as f64,
        max_rel_ideal,
        per_sum,
    })
}

/// Worst-case errors of the scheme on the four integrals
/// `∫|cos(s+φ)|cos 2φ`, `∫|cos(s+φ)|sin 2φ`, `∫cos(s+φ)cos 2φ`, `∫cos(s+φ)sin 2φ`
/// over `s = k(a+b)/2`, with ψ standing in for 2φ, normalized by the abs baseline.
pub fn component_errors(boxes: &BoxScheme, p: usize) -> Result<[f64; 4]> {
    let eps_0 = baseline(Variant::Abs, boxes.k, p)?;
    let w = 2.0 * PI * boxes.k as f64 / p as f64;
    let mut worst = [0.0f64; 4];
    for m in 0..p {
        let s = w * m as f64 / 2.0;
        let exact = [4.0 / 3.0 * (2.0 * s).cos(), -4.0 / 3.0 * (2.0 * s).sin(), 0.0, 0.0];
        let mut sums = [0.0; 4];
        for i in 0..boxes.len() {
            let x = (s + boxes.phases[i]).cos();
            let (sn, cs) = boxes.psi[i].sin_cos();
            let wi = boxes.widths[i];
            sums[0] += wi * x.abs() * cs;
            sums[1] += wi * x.abs() * sn;
            sums[2] += wi * x * cs;
            sums[3] += wi * x * sn;
        }
        for j in 0..4 {
            worst[j] = worst[j].max((sums[j] - exact[j]).abs() / eps_0);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::bound_report;
    use crate::quadrature::Period;

    #[test]
    fn error_shrinks_with_box_count() {
        let errs: Vec<f64> = [64, 128, 256, 512]
            .iter()
            .map(|&n| actual_quadrature_error(&BoxScheme::uniform(1, n), Variant::Abs, 59).unwrap().max_rel)
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 0.01);
    }

    #[test]
    fn perfect_scheme_is_within_bounds() {
        let b = BoxScheme::uniform(5, 40);
        for variant in [Variant::Abs, Variant::Relu] {
            let actual = actual_quadrature_error(&b, variant, 59).unwrap();
            for period in [Period::Full, Period::Half] {
                let bound = bound_report(&b, variant, period, 59).unwrap();
                assert!(actual.max_rel <= bound.relative_total.unwrap(), "{variant} {period}");
            }
        }
        let comps = component_errors(&b, 59).unwrap();
        assert!(comps.iter().all(|&e| e < 0.05), "{comps:?}");
    }
}
