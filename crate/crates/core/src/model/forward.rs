//! Exact forward pass and hand-derived backward pass.
//!
//! Attention is the constant 1/2 over the two operand positions, so the
//! residual stream at `=` is affine in the one-hot inputs. Batched evaluation
//! exploits this: every per-token quantity up to the MLP is a small `p`-column
//! table, and only the MLP activations are materialized per example.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use super::dataset::Pair;
use super::weights::ModelWeights;
use crate::error::{Error, Result};

/// Intermediates recorded by [`forward`] when capture is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    /// Residual stream at `=` after attention (`x^(1)`).
    pub resid_post_attn: Array1<f64>,
    /// `W_in x^(1) + b_in`.
    pub pre: Array1<f64>,
    /// `ReLU(pre)`.
    pub post: Array1<f64>,
}

/// Logits over the `p` residue classes for input `a b =`.
pub fn forward(
    weights: &ModelWeights,
    a: usize,
    b: usize,
    capture: bool,
) -> Result<(Array1<f64>, Option<Activations>)> {
    let c = &weights.config;
    let p = c.p;
    for token in [a, b] {
        if token >= p {
            return Err(Error::TokenOutOfRange { token, p });
        }
    }
    let embed = |t: usize, pos: usize| &weights.w_e.column(t) + &weights.pos.column(pos);
    let x_a = embed(a, 0);
    let x_b = embed(b, 1);
    let x_eq = embed(c.eq_token(), 2);
    let mixed = &x_a + &x_b;

    let mut x1 = x_eq;
    for (o, v) in weights.w_o.iter().zip(&weights.w_v) {
        x1 = x1 + 0.5 * o.dot(&v.dot(&mixed));
    }
    let pre = weights.w_in.dot(&x1) + &weights.b_in;
    let post = pre.mapv(|x| x.max(0.0));
    let x2 = &x1 + &weights.w_out.dot(&post) + &weights.b_out;
    let logits = weights.w_u.slice(s![..p, ..]).dot(&x2);

    let acts = capture.then(|| Activations {
        resid_post_attn: x1,
        pre,
        post,
    });
    Ok((logits, acts))
}

/// Per-token tables of the affine part of the network.
///
/// For input `(a, b)`:
/// `pre = pre_const + ½·pre_a[:, a] + ½·pre_b[:, b]` and
/// `skip_logits = skip_const + ½·skip_a[:, a] + ½·skip_b[:, b]`,
/// where the skip logits are `W_U (x^(1) + b_out)`.
#[derive(Debug, Clone)]
pub(crate) struct TokenTables {
    /// Embeddings `W_E[:, t] + pos[:, 0]`, d_model × p.
    pub emb_a: Array2<f64>,
    pub x_eq: Array1<f64>,
    /// Sum over heads of `W_O W_V`.
    pub ov: Array2<f64>,
    /// `ov · emb_a`, d_model × p.
    pub ov_a: Array2<f64>,
    /// `pos[:, 1] − pos[:, 0]` and its image under `ov`; the b tables are
    /// the a tables shifted by these.
    pub pos_shift: Array1<f64>,
    pub ov_shift: Array1<f64>,
    pub pre_a: Array2<f64>,
    pub pre_b: Array2<f64>,
    pub pre_const: Array1<f64>,
    pub skip_a: Array2<f64>,
    pub skip_b: Array2<f64>,
    pub skip_const: Array1<f64>,
    /// `W_U[..p] W_out`, p × d_mlp.
    pub neuron_logit: Array2<f64>,
    /// `W_U[..p]`, p × d_model.
    pub unembed: Array2<f64>,
}

impl TokenTables {
    pub fn new(w: &ModelWeights) -> Self {
        let p = w.config.p;
        let tok = w.w_e.slice(s![.., ..p]);
        let emb_a = &tok + &w.pos.slice(s![.., 0..1]);
        let x_eq = &w.w_e.column(p) + &w.pos.column(2);
        let pos_shift = &w.pos.column(1) - &w.pos.column(0);
        let ov = w.ov_circuit();
        let ov_shift = ov.dot(&pos_shift);
        let ov_a = ov.dot(&emb_a);
        let pre_a = w.w_in.dot(&ov_a);
        let pre_b = &pre_a + &w.w_in.dot(&ov_shift).insert_axis(Axis(1));
        let pre_const = w.w_in.dot(&x_eq) + &w.b_in;
        let unembed = w.w_u.slice(s![..p, ..]).to_owned();
        let skip_a = unembed.dot(&ov_a);
        let skip_b = &skip_a + &unembed.dot(&ov_shift).insert_axis(Axis(1));
        let skip_const = unembed.dot(&(&x_eq + &w.b_out));
        let neuron_logit = unembed.dot(&w.w_out);
        TokenTables {
            emb_a,
            x_eq,
            ov,
            ov_a,
            pos_shift,
            ov_shift,
            pre_a,
            pre_b,
            pre_const,
            skip_a,
            skip_b,
            skip_const,
            neuron_logit,
            unembed,
        }
    }

    /// Pre-activations for a batch, n × d_mlp.
    pub fn pre_activations(&self, batch: &[Pair]) -> Array2<f64> {
        let d_mlp = self.pre_const.len();
        let mut pre = Array2::zeros((batch.len(), d_mlp));
        for (mut row, &(a, b)) in pre.rows_mut().into_iter().zip(batch) {
            let (ca, cb) = (self.pre_a.column(a), self.pre_b.column(b));
            for j in 0..d_mlp {
                row[j] = self.pre_const[j] + 0.5 * ca[j] + 0.5 * cb[j];
            }
        }
        pre
    }

    /// Skip-connection logits for a batch, n × p.
    pub fn skip_logits(&self, batch: &[Pair]) -> Array2<f64> {
        let p = self.skip_const.len();
        let mut out = Array2::zeros((batch.len(), p));
        for (mut row, &(a, b)) in out.rows_mut().into_iter().zip(batch) {
            let (ca, cb) = (self.skip_a.column(a), self.skip_b.column(b));
            for c in 0..p {
                row[c] = self.skip_const[c] + 0.5 * ca[c] + 0.5 * cb[c];
            }
        }
        out
    }
}

/// Logits for a batch, n × p, plus the pre-activations that produced them.
pub(crate) fn batch_logits(tables: &TokenTables, batch: &[Pair]) -> (Array2<f64>, Array2<f64>) {
    let pre = tables.pre_activations(batch);
    let post = pre.mapv(|x| x.max(0.0));
    let mut logits = tables.skip_logits(batch);
    logits += &post.dot(&tables.neuron_logit.t());
    (logits, pre)
}

/// Logits for every pair in `batch` (n × p).
pub fn forward_batch(weights: &ModelWeights, batch: &[Pair]) -> Result<Array2<f64>> {
    check_tokens(weights.config.p, batch)?;
    Ok(batch_logits(&TokenTables::new(weights), batch).0)
}

/// Fraction of pairs whose argmax logit is `(a + b) mod p`.
pub fn accuracy(weights: &ModelWeights, batch: &[Pair]) -> Result<f64> {
    let logits = forward_batch(weights, batch)?;
    Ok(accuracy_of(&logits, batch, weights.config.p))
}

pub(crate) fn accuracy_of(logits: &Array2<f64>, batch: &[Pair], p: usize) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let correct = logits
        .rows()
        .into_iter()
        .zip(batch)
        .filter(|(row, &(a, b))| argmax(*row) == (a + b) % p)
        .count();
    correct as f64 / batch.len() as f64
}

pub(crate) fn argmax(row: ArrayView1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

fn check_tokens(p: usize, batch: &[Pair]) -> Result<()> {
    for &(a, b) in batch {
        for token in [a, b] {
            if token >= p {
                return Err(Error::TokenOutOfRange { token, p });
            }
        }
    }
    Ok(())
}

/// Row-wise `softmax(logits) - onehot(label)` divided by `n`, plus the mean loss.
fn softmax_xent(logits: &Array2<f64>, batch: &[Pair], p: usize) -> (f64, Array2<f64>) {
    let n = batch.len() as f64;
    let mut grad = logits.clone();
    let mut loss = 0.0;
    for (mut row, &(a, b)) in grad.rows_mut().into_iter().zip(batch) {
        let label = (a + b) % p;
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let target = row[label] - max;
        row.mapv_inplace(|x| (x - max).exp());
        let z: f64 = row.sum();
        loss += z.ln() - target;
        row.mapv_inplace(|x| x / z);
        row[label] -= 1.0;
        row.mapv_inplace(|x| x / n);
    }
    (loss / n, grad)
}

/// Mean cross-entropy of the correct class, and its exact gradient.
pub fn loss_and_grad(weights: &ModelWeights, batch: &[Pair]) -> Result<(f64, ModelWeights)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    check_tokens(weights.config.p, batch)?;
    let tables = TokenTables::new(weights);
    let (logits, pre) = batch_logits(&tables, batch);
    let (loss, dlogits) = softmax_xent(&logits, batch, weights.config.p);
    Ok((loss, backward(weights, &tables, batch, &pre, &dlogits)))
}

/// Loss, gradient and training accuracy from a single forward pass.
pub(crate) fn loss_grad_accuracy(
    weights: &ModelWeights,
    batch: &[Pair],
) -> (f64, ModelWeights, f64) {
    let tables = TokenTables::new(weights);
    let (logits, pre) = batch_logits(&tables, batch);
    let p = weights.config.p;
    let acc = accuracy_of(&logits, batch, p);
    let (loss, dlogits) = softmax_xent(&logits, batch, p);
    (loss, backward(weights, &tables, batch, &pre, &dlogits), acc)
}

fn backward(
    w: &ModelWeights,
    t: &TokenTables,
    batch: &[Pair],
    pre: &Array2<f64>,
    dlogits: &Array2<f64>,
) -> ModelWeights {
    let cfg = &w.config;
    let p = cfg.p;
    let mut g = ModelWeights::zeros(cfg);

    // logits = skip(a, b) + ReLU(pre) · W_L^T
    let post = pre.mapv(|x| x.max(0.0));
    let d_neuron_logit = dlogits.t().dot(&post);
    let mut dpre = dlogits.dot(&t.neuron_logit);
    dpre.zip_mut_with(pre, |d, &x| {
        if x <= 0.0 {
            *d = 0.0;
        }
    });

    // Scatter per-example gradients onto the token tables. The b tables are
    // the a tables plus a column-constant shift, so only their sum is needed
    // per column; the b-slot column sums are half the constant-term gradients.
    let mut d_skip = Array2::<f64>::zeros((p, p));
    let mut d_pre = Array2::<f64>::zeros((cfg.d_mlp, p));
    for ((&(a, b), dl), dp) in batch.iter().zip(dlogits.rows()).zip(dpre.rows()) {
        d_skip.column_mut(a).scaled_add(0.5, &dl);
        d_skip.column_mut(b).scaled_add(0.5, &dl);
        d_pre.column_mut(a).scaled_add(0.5, &dp);
        d_pre.column_mut(b).scaled_add(0.5, &dp);
    }
    let d_skip_const = dlogits.sum_axis(Axis(0));
    let d_pre_const = dpre.sum_axis(Axis(0));
    let d_skip_b_sum = 0.5 * &d_skip_const;
    let d_pre_b_sum = 0.5 * &d_pre_const;

    // neuron_logit = U W_out, skip_* = U ov_*, skip_const = U (x_eq + b_out)
    let u = &t.unembed;
    let resid_const = &t.x_eq + &w.b_out;
    let mut du = d_neuron_logit.dot(&w.w_out.t());
    du += &d_skip.dot(&t.ov_a.t());
    du += &outer(&d_skip_b_sum, &t.ov_shift);
    du += &outer(&d_skip_const, &resid_const);
    g.w_out = u.t().dot(&d_neuron_logit);
    let ut_dconst = u.t().dot(&d_skip_const);
    g.b_out = ut_dconst.clone();
    let mut dx_eq = ut_dconst;

    // pre_* = W_in ov_*, pre_const = W_in x_eq + b_in
    let d_ov = u.t().dot(&d_skip) + w.w_in.t().dot(&d_pre);
    let d_ov_b_sum = u.t().dot(&d_skip_b_sum) + w.w_in.t().dot(&d_pre_b_sum);
    g.w_in = d_pre.dot(&t.ov_a.t()) + outer(&d_pre_b_sum, &t.ov_shift) + outer(&d_pre_const, &t.x_eq);
    dx_eq += &w.w_in.t().dot(&d_pre_const);
    g.b_in = d_pre_const;

    // ov_a = OV emb_a, ov_b = ov_a + OV·pos_shift
    let d_ov_circuit = d_ov.dot(&t.emb_a.t()) + outer(&d_ov_b_sum, &t.pos_shift);
    let d_emb = t.ov.t().dot(&d_ov);
    let d_pos_b = t.ov.t().dot(&d_ov_b_sum);
    for j in 0..cfg.n_heads {
        g.w_o[j] = d_ov_circuit.dot(&w.w_v[j].t());
        g.w_v[j] = w.w_o[j].t().dot(&d_ov_circuit);
    }

    // emb_a = W_E[:, :p] + pos[:, 0], x_eq = W_E[:, p] + pos[:, 2]
    g.w_e.slice_mut(s![.., ..p]).assign(&d_emb);
    g.w_e.column_mut(p).assign(&dx_eq);
    g.pos.column_mut(0).assign(&(d_emb.sum_axis(Axis(1)) - &d_pos_b));
    g.pos.column_mut(1).assign(&d_pos_b);
    g.pos.column_mut(2).assign(&dx_eq);
    g.w_u.slice_mut(s![..p, ..]).assign(&du);
    g
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut m = Array2::zeros((a.len(), b.len()));
    for (i, &x) in a.iter().enumerate() {
        m.row_mut(i).scaled_add(x, b);
    }
    m
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::config::ModelConfig;

    fn small() -> ModelConfig {
        ModelConfig {
            p: 11,
            d_model: 16,
            d_mlp: 24,
            d_head: 4,
            n_heads: 4,
            ..ModelConfig::default()
        }
    }

    fn scaled_init(cfg: &ModelConfig, scale: f64) -> ModelWeights {
        let mut w = ModelWeights::init(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 99);
        for slot in w.flat_mut() {
            slot.iter_mut().for_each(|x| *x *= scale);
        }
        w.b_in.iter_mut().for_each(|x| *x = rng.random_range(-0.1..0.1));
        w.b_out.iter_mut().for_each(|x| *x = rng.random_range(-0.1..0.1));
        w
    }

    #[test]
    fn zero_weights_give_zero_logits_and_log_p_loss() {
        let cfg = ModelConfig::default();
        let w = ModelWeights::zeros(&cfg);
        let (logits, _) = forward(&w, 3, 40, false).unwrap();
        assert!(logits.iter().all(|&x| x == 0.0));
        let (loss, _) = loss_and_grad(&w, &[(1, 2), (58, 58)]).unwrap();
        assert!((loss - 59f64.ln()).abs() < 1e-12, "{loss}");
        assert!((59f64.ln() - 4.0775).abs() < 1e-4);
    }

    #[test]
    fn rejects_out_of_range_tokens() {
        let w = ModelWeights::zeros(&small());
        assert!(matches!(
            forward(&w, 11, 0, false),
            Err(Error::TokenOutOfRange { token: 11, p: 11 })
        ));
        assert!(loss_and_grad(&w, &[(0, 12)]).is_err());
        assert!(matches!(loss_and_grad(&w, &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn capture_is_observational_and_batch_matches_single() {
        let cfg = small().with_seed(5);
        let w = scaled_init(&cfg, 1.0);
        let pairs: Vec<Pair> = (0..cfg.p).map(|a| (a, (3 * a + 1) % cfg.p)).collect();
        let batch = forward_batch(&w, &pairs).unwrap();
        for (row, &(a, b)) in batch.rows().into_iter().zip(&pairs) {
            let (plain, none) = forward(&w, a, b, false).unwrap();
            let (captured, acts) = forward(&w, a, b, true).unwrap();
            assert!(none.is_none());
            assert_eq!(plain, captured);
            let acts = acts.unwrap();
            assert_eq!(acts.post, acts.pre.mapv(|x| x.max(0.0)));
            for (x, y) in row.iter().zip(plain.iter()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn forward_symmetric_in_operands() {
        // x^(1) depends on (W_E a + pos_0) + (W_E b + pos_1), which is the same
        // vector after swapping a and b.
        let cfg = small().with_seed(8);
        let w = scaled_init(&cfg, 1.0);
        for (a, b) in [(1, 7), (0, 10), (4, 4), (9, 2)] {
            let (lab, aab) = forward(&w, a, b, true).unwrap();
            let (lba, aba) = forward(&w, b, a, true).unwrap();
            let (pab, pba) = (aab.unwrap().pre, aba.unwrap().pre);
            assert!(pab.iter().zip(pba.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
            assert!(lab.iter().zip(lba.iter()).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let cfg = small().with_seed(11);
        let w = scaled_init(&cfg, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let batch: Vec<Pair> = (0..40)
            .map(|_| (rng.random_range(0..cfg.p), rng.random_range(0..cfg.p)))
            .collect();
        let (_, grad) = loss_and_grad(&w, &batch).unwrap();
        let grads: Vec<Vec<f64>> = grad.flat().iter().map(|s| s.to_vec()).collect();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let mut checked = 0;
        while checked < 20 {
            let t = rng.random_range(0..grads.len());
            let i = rng.random_range(0..grads[t].len());
            let analytic = grads[t][i];
            let mut plus = w.clone();
            plus.flat_mut()[t][i] += h;
            let mut minus = w.clone();
            minus.flat_mut()[t][i] -= h;
            let fp = loss_and_grad(&plus, &batch).unwrap().0;
            let fm = loss_and_grad(&minus, &batch).unwrap().0;
            let numeric = (fp - fm) / (2.0 * h);
            if analytic.abs() < 1e-7 && numeric.abs() < 1e-7 {
                continue;
            }
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
            worst = worst.max(rel);
            checked += 1;
        }
        assert!(worst < 1e-4, "max relative deviation {worst}");
    }

    #[test]
    fn duplicated_batch_is_mean_invariant() {
        let cfg = small().with_seed(2);
        let w = scaled_init(&cfg, 1.0);
        let batch = vec![(1, 2), (3, 4), (10, 0)];
        let doubled: Vec<Pair> = batch.iter().chain(batch.iter()).copied().collect();
        let (l1, g1) = loss_and_grad(&w, &batch).unwrap();
        let (l2, g2) = loss_and_grad(&w, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (x, y) in g1.flat().iter().zip(g2.flat()) {
            for (a, b) in x.iter().zip(y) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
