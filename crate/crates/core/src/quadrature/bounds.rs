use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::boxes::{nearest_mod, BoxScheme};
use super::integrand::Variant;
use crate::error::{Error, Result};
use crate::fourier::nearest_representative;

/// Lipschitz constant in φ of `|cos(s+φ)|·cos(t+2φ)` and of the ReLU variant.
pub const LIPSCHITZ: f64 = 2.0;
/// Number of box shifts tried when minimizing a bound.
pub const THETA_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Full,
    Half,
}

impl Period {
    pub const ALL: [Period; 2] = [Period::Full, Period::Half];

    pub fn name(self) -> &'static str {
        match self {
            Period::Full => "full",
            Period::Half => "half",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Period::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// `∫_lo^hi |x − φ| dx`.
pub fn box_term(lo: f64, hi: f64, phi: f64) -> f64 {
    let (a, b) = (lo - phi, hi - phi);
    if a <= 0.0 && b >= 0.0 {
        0.5 * (a * a + b * b)
    } else {
        0.5 * (b * b - a * a).abs()
    }
}

/// Shifts tried by the θ-minimization: symmetric around zero, spanning one mean box width.
pub fn theta_grid(boxes: &BoxScheme) -> impl Iterator<Item = f64> {
    let delta = boxes.period / boxes.len().max(1) as f64;
    (0..THETA_STEPS).map(move |j| (j as f64 - (THETA_STEPS / 2) as f64) / THETA_STEPS as f64 * delta)
}

/// Per-box `∫|φ − φ_i|` with every boundary moved by θ.
fn shifted_terms(boxes: &BoxScheme, theta: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    (0..boxes.len()).map(move |i| {
        let lo = boxes.boundaries[i] + theta;
        let hi = boxes.boundaries[i + 1] + theta;
        let phi = nearest_mod(boxes.phases[i], (lo + hi) / 2.0, boxes.period);
        (lo.min(phi), hi.max(phi), box_term(lo, hi, phi))
    })
}

/// The bound at one fixed shift; valid for every θ.
pub fn error_bound_at(boxes: &BoxScheme, lipschitz: f64, theta: f64) -> f64 {
    lipschitz * shifted_terms(boxes, theta).map(|(_, _, t)| t).sum::<f64>()
}

/// `min_θ L·Σ_i ∫_{box i} |φ − φ_i| dφ` over the θ-grid.
pub fn error_bound_full(boxes: &BoxScheme, lipschitz: f64) -> f64 {
    theta_grid(boxes)
        .map(|theta| error_bound_at(boxes, lipschitz, theta))
        .fold(f64::INFINITY, f64::min)
}

/// Same sum over the scheme folded onto [0, π). Multiply by two to bound the
/// full-period integral.
pub fn error_bound_half(boxes: &BoxScheme, lipschitz: f64, variant: Variant) -> Result<f64> {
    if !variant.is_pi_periodic() {
        return Err(Error::NotPiPeriodic(variant.to_string()));
    }
    let folded = if boxes.period == PI { boxes.clone() } else { boxes.fold()? };
    Ok(error_bound_full(&folded, lipschitz))
}

/// Bound for the ReLU variant using that `h` vanishes on a closed half-period.
///
/// Only boxes whose hull (box plus its phase) meets the open support window
/// can contribute; the window position is unknown, so take the worst one.
pub fn relu_window_bound(boxes: &BoxScheme, lipschitz: f64) -> f64 {
    theta_grid(boxes)
        .map(|theta| lipschitz * worst_window(boxes, theta))
        .fold(f64::INFINITY, f64::min)
}

fn worst_window(boxes: &BoxScheme, theta: f64) -> f64 {
    // Window (x, x + π) meets hull [α, β] iff α − π < x < β.
    let n = boxes.len();
    let hulls: Vec<(f64, f64, f64)> = shifted_terms(boxes, theta).collect();
    let mut enter: Vec<(f64, f64)> = Vec::with_capacity(5 * n);
    let mut leave: Vec<(f64, f64)> = Vec::with_capacity(5 * n);
    for j in -2..=2 {
        let shift = 2.0 * PI * j as f64;
        for &(alpha, beta, term) in &hulls {
            enter.push((alpha + shift - PI, term));
            leave.push((beta + shift, term));
        }
    }
    // Boxes come in phase order, so both lists are nearly sorted already and
    // the adaptive sort runs in close to linear time.
    enter.sort_by(|x, y| x.0.total_cmp(&y.0));
    leave.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut sum, mut worst) = (0.0f64, 0.0f64);
    let (mut i, mut j) = (0, 0);
    while i < enter.len() || j < leave.len() {
        // Leaving before entering at equal positions keeps the window open.
        let x = if j < leave.len() && (i == enter.len() || leave[j].0 <= enter[i].0) {
            sum -= leave[j].1;
            j += 1;
            leave[j - 1].0
        } else {
            sum += enter[i].1;
            i += 1;
            enter[i - 1].0
        };
        if (-PI..=PI).contains(&x) {
            worst = worst.max(sum);
        }
    }
    worst
}

/// `Σ w'_i |ψ_i − 2φ_i|`, ψ taken at its representative nearest 2φ.
pub fn angle_error(boxes: &BoxScheme) -> f64 {
    boxes
        .phases
        .iter()
        .zip(&boxes.psi)
        .zip(&boxes.widths)
        .map(|((phi, psi), w)| {
            let target = 2.0 * phi;
            w * (nearest_representative(*psi, target) - target).abs()
        })
        .sum::<f64>()
        * (2.0 * PI / boxes.period)
}

/// Amplitude of the integral the variant's bounds are measured against.
pub fn integral_amplitude(variant: Variant) -> Result<f64> {
    match variant {
        Variant::Abs => Ok(4.0 / 3.0),
        Variant::Relu => Ok(2.0 / 3.0),
        other => Err(Error::UnknownVariant(format!("{other} has no quadrature bound"))),
    }
}

/// Mean over `a + b = 1..=p` of `|A·cos(2πk(a+b)/p)|`.
pub fn baseline(variant: Variant, k: usize, p: usize) -> Result<f64> {
    let amp = integral_amplitude(variant)?;
    let w = 2.0 * PI * k as f64 / p as f64;
    Ok((1..=p).map(|m| (amp * (w * m as f64).cos()).abs()).sum::<f64>() / p as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComponents {
    pub k: usize,
    pub variant: Variant,
    pub period: Period,
    pub n_boxes: usize,
    pub lipschitz: f64,
    /// Quadrature discrepancy bound, already recombined to the full period.
    pub eps_approx_int: f64,
    pub eps_phi: f64,
    pub eps_0: f64,
    /// `(ε_≈∫ + ε_φ)/ε_0`; None when the baseline vanishes.
    pub relative_total: Option<f64>,
}

impl BoundComponents {
    pub fn relative_quadrature(&self) -> Option<f64> {
        (self.eps_0 > 0.0).then(|| self.eps_approx_int / self.eps_0)
    }

    pub fn relative_angle(&self) -> Option<f64> {
        (self.eps_0 > 0.0).then(|| self.eps_phi / self.eps_0)
    }
}

/// Assembles every bound component for one scheme.
///
/// Both variants are measured on the integrand whose integral has amplitude
/// [`integral_amplitude`]: `|cos(s+φ)|cos(t+2φ)` for abs and
/// `ReLU(σcos(s+φ))cos(t+2φ)` for relu.
pub fn bound_report(boxes: &BoxScheme, variant: Variant, period: Period, p: usize) -> Result<BoundComponents> {
    let eps_0 = baseline(variant, boxes.k, p)?;
    let eps_approx_int = match (variant, period) {
        (_, Period::Full) => error_bound_full(boxes, LIPSCHITZ),
        (Variant::Abs, Period::Half) => 2.0 * error_bound_half(boxes, LIPSCHITZ, variant)?,
        (Variant::Relu, Period::Half) => relu_window_bound(boxes, LIPSCHITZ),
        (other, _) => return Err(Error::UnknownVariant(other.to_string())),
    };
    let eps_phi = angle_error(boxes);
    let relative_total = (eps_0 > 0.0).then(|| (eps_approx_int + eps_phi) / eps_0);
    Ok(BoundComponents {
        k: boxes.k,
        variant,
        period,
        n_boxes: boxes.len(),
        lipschitz: LIPSCHITZ,
        eps_approx_int,
        eps_phi,
        eps_0,
        relative_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_full_bound_matches_closed_form() {
        for n in [64, 128, 256, 512] {
            let b = BoxScheme::uniform(1, n);
            let want = 2.0 * PI * PI / n as f64;
            assert!((error_bound_full(&b, 2.0) - want).abs() < 1e-9, "n={n}");
        }
        assert!((error_bound_full(&BoxScheme::uniform(1, 512), 2.0) - 0.0386).abs() < 1e-4);
    }

    #[test]
    fn uniform_half_bound_is_half() {
        for n in [8, 64, 512] {
            let b = BoxScheme::uniform(1, n);
            let full = error_bound_full(&b, 2.0);
            let half = error_bound_half(&b, 2.0, Variant::Abs).unwrap();
            assert!((half - full / 2.0).abs() < 1e-9 * full, "n={n}");
        }
        assert!(matches!(
            error_bound_half(&BoxScheme::uniform(1, 8), 2.0, Variant::Relu),
            Err(Error::NotPiPeriodic(_))
        ));
    }

    #[test]
    fn box_term_cases() {
        assert!((box_term(-1.0, 2.0, 0.0) - 2.5).abs() < 1e-15);
        assert!((box_term(1.0, 2.0, 0.0) - 1.5).abs() < 1e-15);
        assert!((box_term(-2.0, -1.0, 0.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn baselines() {
        let abs = baseline(Variant::Abs, 12, 59).unwrap();
        let relu = baseline(Variant::Relu, 12, 59).unwrap();
        assert!((abs - 0.85).abs() < 0.01, "{abs}");
        assert!((relu - 0.42).abs() < 0.01, "{relu}");
        assert!((abs / (8.0 / (3.0 * PI)) - 1.0).abs() < 0.02);
    }

    #[test]
    fn angle_error_is_linear_in_one_perturbation() {
        let mut b = BoxScheme::uniform(1, 32);
        assert!(angle_error(&b) < 1e-12);
        b.psi[5] += 0.01;
        assert!((angle_error(&b) - b.widths[5] * 0.01).abs() < 1e-12);
    }

    #[test]
    fn relu_window_bound_is_below_full_bound() {
        let b = BoxScheme::uniform(1, 64);
        let window = relu_window_bound(&b, 2.0);
        let full = error_bound_full(&b, 2.0);
        assert!(window < full && window > 0.4 * full, "{window} vs {full}");
    }

    #[test]
    fn perfect_scheme_total_is_quadrature_only() {
        let b = BoxScheme::uniform(3, 128);
        let r = bound_report(&b, Variant::Abs, Period::Full, 59).unwrap();
        assert!(r.eps_phi < 1e-12);
        assert!((r.relative_total.unwrap() - r.eps_approx_int / r.eps_0).abs() < 1e-12);
    }
}
