use std::io::Write;

use ndarray::{s, Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::basis::{Component, FourierBasis};
use crate::model::ModelWeights;

/// What each token contributes to every neuron's pre-activation.
///
/// For input `(a, b)` the pre-activation of neuron i is exactly
/// `constant[i] + ½·table[[a, i]] + ½·table[[b, i]]`. The positional
/// embeddings of the operand slots, the `=` token and `b_in` all live in
/// `constant`, so `table` depends on the token alone.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenTable {
    /// p × d_mlp.
    pub table: Array2<f64>,
    pub constant: Array1<f64>,
}

impl TokenTable {
    pub fn pre_activation(&self, a: usize, b: usize) -> Array1<f64> {
        &self.constant + &((&self.table.row(a) + &self.table.row(b)) * 0.5)
    }
}

pub fn ov_token_table(weights: &ModelWeights) -> TokenTable {
    let p = weights.config.p;
    let ov = weights.ov_circuit();
    let w_in_ov = weights.w_in.dot(&ov);
    let table = w_in_ov.dot(&weights.w_e.slice(s![.., ..p])).reversed_axes();
    let x_eq = &weights.w_e.column(p) + &weights.pos.column(2);
    let pos_ab = (&weights.pos.column(0) + &weights.pos.column(1)) * 0.5;
    let constant = weights.w_in.dot(&x_eq) + w_in_ov.dot(&pos_ab) + &weights.b_in;
    TokenTable { table, constant }
}

/// Fourier description of one neuron on both sides of the MLP.
///
/// Component vectors are indexed by frequency; index 0 is a placeholder and
/// the means are stored separately. Phases follow `amp·cos(2πkt/p + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSpectrum {
    pub neuron: usize,
    pub input_mean: f64,
    pub input: Vec<Component>,
    pub input_variance: Vec<f64>,
    pub output_mean: f64,
    pub output: Vec<Component>,
    pub output_variance: Vec<f64>,
    /// None when the token function is constant.
    pub primary_freq: Option<usize>,
    pub secondary_freq: Option<usize>,
    pub output_primary_freq: Option<usize>,
    /// Set when two frequencies tie for primary; the smaller one wins.
    pub primary_tied: bool,
}

impl NeuronSpectrum {
    pub fn primary_variance(&self) -> f64 {
        self.primary_freq.map_or(0.0, |k| self.input_variance[k])
    }
}

const NEGLIGIBLE_ENERGY: f64 = 1e-18;
const TIE_TOL: f64 = 1e-12;

/// Per-frequency fractions of centered energy, plus the top two frequencies.
fn variance_profile(
    basis: &FourierBasis,
    f: ArrayView1<f64>,
    comps: &[Component],
) -> (Vec<f64>, Option<usize>, Option<usize>, bool) {
    let mean = f.mean().unwrap_or(0.0);
    let total: f64 = f.iter().map(|x| (x - mean).powi(2)).sum();
    let raw: f64 = f.iter().map(|x| x * x).sum();
    let mut frac = vec![0.0; comps.len()];
    if total <= NEGLIGIBLE_ENERGY * raw || total == 0.0 {
        return (frac, None, None, false);
    }
    for k in 1..comps.len() {
        frac[k] = (basis.component_energy(&comps[k]) / total).clamp(0.0, 1.0);
    }
    let mut order: Vec<usize> = (1..comps.len()).collect();
    order.sort_by(|&x, &y| frac[y].total_cmp(&frac[x]));
    let Some(&top) = order.first() else {
        return (frac, None, None, false);
    };
    let tied_with_top: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| frac[top] - frac[k] <= TIE_TOL)
        .collect();
    let primary = tied_with_top.iter().copied().min().unwrap_or(top);
    let secondary = order.iter().copied().find(|&k| k != primary);
    (frac, Some(primary), secondary, tied_with_top.len() > 1)
}

pub fn neuron_spectra(table: &TokenTable, weights: &ModelWeights) -> Vec<NeuronSpectrum> {
    let basis = FourierBasis::new(weights.config.p);
    let w_l = weights.neuron_logit_map();
    spectra_from_functions(&basis, &table.table, &w_l)
}

/// Spectra from explicit input (token × neuron) and output (class × neuron)
/// functions. Exposed so synthetic neurons can be analysed directly.
pub fn spectra_from_functions(
    basis: &FourierBasis,
    inputs: &Array2<f64>,
    outputs: &Array2<f64>,
) -> Vec<NeuronSpectrum> {
    (0..inputs.ncols())
        .map(|i| {
            let f = inputs.column(i);
            let g = outputs.column(i);
            let (input_mean, input) = basis.components(f);
            let (output_mean, output) = basis.components(g);
            let (input_variance, primary_freq, secondary_freq, primary_tied) =
                variance_profile(basis, f, &input);
            let (output_variance, output_primary_freq, _, _) = variance_profile(basis, g, &output);
            NeuronSpectrum {
                neuron: i,
                input_mean,
                input,
                input_variance,
                output_mean,
                output,
                output_variance,
                primary_freq,
                secondary_freq,
                output_primary_freq,
                primary_tied,
            }
        })
        .collect()
}

/// Tab-separated spectrum dump, one row per neuron.
pub fn write_spectrum_table(spectra: &[NeuronSpectrum], mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "neuron\tprimary_freq\tsecondary_freq\toutput_freq\tr\tphi\tr_out\tpsi\tvar_primary\tvar_secondary\tinput_mean"
    )?;
    for s in spectra {
        let fmt = |k: Option<usize>| k.map_or("-".to_string(), |k| k.to_string());
        let (r, phi, r_out, psi) = match s.primary_freq {
            Some(k) => (s.input[k].amp, s.input[k].phase, s.output[k].amp, s.output[k].phase),
            None => (0.0, 0.0, 0.0, 0.0),
        };
        let var2 = s.secondary_freq.map_or(0.0, |k| s.input_variance[k]);
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{r:.9e}\t{phi:.9}\t{r_out:.9e}\t{psi:.9}\t{:.6}\t{var2:.6}\t{:.9e}",
            s.neuron,
            fmt(s.primary_freq),
            fmt(s.secondary_freq),
            fmt(s.output_primary_freq),
            s.primary_variance(),
            s.input_mean,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{forward, ModelConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn small() -> ModelConfig {
        ModelConfig {
            p: 11,
            d_model: 16,
            d_mlp: 8,
            d_head: 4,
            n_heads: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn table_reconstructs_pre_activations() {
        let w = ModelWeights::init(&small().with_seed(3));
        let t = ov_token_table(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (a, b) = (rng.random_range(0..11), rng.random_range(0..11));
            let (_, acts) = forward(&w, a, b, true).unwrap();
            let got = t.pre_activation(a, b);
            let want = acts.unwrap().pre;
            let dev = (&got - &want).mapv(f64::abs).fold(0.0f64, |m, &x| m.max(x));
            assert!(dev < 1e-9, "({a},{b}) deviates by {dev}");
        }
    }

    #[test]
    fn zero_w_in_gives_zero_table() {
        let mut w = ModelWeights::init(&small());
        w.w_in.fill(0.0);
        assert!(ov_token_table(&w).table.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_neuron_has_no_primary() {
        let basis = FourierBasis::new(11);
        let inputs = Array2::from_elem((11, 1), 2.5);
        let s = &spectra_from_functions(&basis, &inputs, &inputs)[0];
        assert_eq!(s.primary_freq, None);
        assert!((s.input_mean - 2.5).abs() < 1e-12);
        assert!(s.input_variance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_fractions_and_parseval() {
        let p = 59;
        let basis = FourierBasis::new(p);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inputs = Array2::from_shape_fn((p, 4), |_| rng.random_range(-1.0..1.0));
        for s in spectra_from_functions(&basis, &inputs, &inputs) {
            let f = inputs.column(s.neuron);
            let norm2: f64 = f.iter().map(|x| x * x).sum();
            let parts: f64 = p as f64 * s.input_mean.powi(2)
                + s.input.iter().skip(1).map(|c| basis.component_energy(c)).sum::<f64>();
            assert!((parts - norm2).abs() < 1e-9 * norm2);
            let total: f64 = s.input_variance.iter().sum();
            assert!(total <= 1.0 + 1e-9 && (total - 1.0).abs() < 1e-9);
            assert!(s.input.iter().all(|c| c.amp >= 0.0 && c.phase > -PI && c.phase <= PI));
        }
    }

    #[test]
    fn primary_and_secondary_follow_energy() {
        let p = 59;
        let basis = FourierBasis::new(p);
        let inputs = Array2::from_shape_fn((p, 1), |(t, _)| {
            let x = 2.0 * PI * t as f64 / p as f64;
            (12.0 * x + 0.3).cos() + 0.4 * (24.0 * x - 1.0).cos()
        });
        let s = &spectra_from_functions(&basis, &inputs, &inputs)[0];
        assert_eq!(s.primary_freq, Some(12));
        assert_eq!(s.secondary_freq, Some(24));
        assert_eq!(s.output_primary_freq, Some(12));
        assert!(!s.primary_tied);
    }

    #[test]
    fn exact_tie_picks_smaller_frequency() {
        let p = 31;
        let basis = FourierBasis::new(p);
        let inputs = Array2::from_shape_fn((p, 1), |(t, _)| {
            let x = 2.0 * PI * t as f64 / p as f64;
            (3.0 * x).cos() + (7.0 * x).cos()
        });
        let s = &spectra_from_functions(&basis, &inputs, &inputs)[0];
        assert_eq!(s.primary_freq, Some(3));
        assert!(s.primary_tied);
    }

    #[test]
    fn dump_has_one_row_per_neuron() {
        let w = ModelWeights::init(&small());
        let spectra = neuron_spectra(&ov_token_table(&w), &w);
        let mut buf = Vec::new();
        write_spectrum_table(&spectra, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 8);
    }
}
