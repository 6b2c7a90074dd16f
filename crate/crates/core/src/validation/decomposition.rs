use ndarray::{Array2, Axis};

use crate::model::forward::TokenTables;
use crate::model::{ModelWeights, Pair};

/// Logits split along `ReLU(x) = x/2 + |x|/2`.
///
/// `skip + identity + abs` equals the model's logits exactly: `skip` is the
/// unembedded residual stream plus `b_out`, `identity` is `W_L·pre/2` and
/// `abs` is `W_L·|pre|/2`. Every array is n × p, one row per input pair.
#[derive(Debug, Clone)]
pub struct LogitParts {
    pub skip: Array2<f64>,
    pub identity: Array2<f64>,
    pub abs: Array2<f64>,
}

impl LogitParts {
    pub fn total(&self) -> Array2<f64> {
        &self.skip + &self.identity + &self.abs
    }

    /// Output of the MLP alone, `W_L·ReLU(pre)`.
    pub fn mlp(&self) -> Array2<f64> {
        &self.identity + &self.abs
    }
}

pub fn logit_parts(weights: &ModelWeights, batch: &[Pair]) -> LogitParts {
    let tables = TokenTables::new(weights);
    let pre = tables.pre_activations(batch);
    let w_l_t = tables.neuron_logit.t();
    LogitParts {
        skip: tables.skip_logits(batch),
        identity: (&pre * 0.5).dot(&w_l_t),
        abs: pre.mapv(|x| 0.5 * x.abs()).dot(&w_l_t),
    }
}

/// Subtracts each row's mean over output classes.
pub fn center_rows(mut x: Array2<f64>) -> Array2<f64> {
    let means = x.mean_axis(Axis(1)).expect("non-empty rows");
    for (mut row, m) in x.rows_mut().into_iter().zip(means) {
        row -= m;
    }
    x
}
