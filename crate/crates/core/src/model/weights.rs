use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{Error, Result};

/// Every trainable tensor of the constant-attention transformer.
///
/// Column-vector convention throughout: `W_E` maps a one-hot token (length
/// `d_vocab`) to the residual stream, `W_U` maps the residual stream to
/// `d_vocab` logits of which the first `p` are read.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub config: ModelConfig,
    /// d_model × d_vocab
    pub w_e: Array2<f64>,
    /// d_model × n_ctx
    pub pos: Array2<f64>,
    /// per head, d_head × d_model
    pub w_v: Vec<Array2<f64>>,
    /// per head, d_model × d_head
    pub w_o: Vec<Array2<f64>>,
    /// d_mlp × d_model
    pub w_in: Array2<f64>,
    pub b_in: Array1<f64>,
    /// d_model × d_mlp
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
    /// d_vocab × d_model
    pub w_u: Array2<f64>,
}

impl ModelWeights {
    pub fn zeros(config: &ModelConfig) -> Self {
        let (dm, dh, dmlp, dv) = (config.d_model, config.d_head, config.d_mlp, config.d_vocab());
        ModelWeights {
            config: config.clone(),
            w_e: Array2::zeros((dm, dv)),
            pos: Array2::zeros((dm, config.n_ctx())),
            w_v: (0..config.n_heads).map(|_| Array2::zeros((dh, dm))).collect(),
            w_o: (0..config.n_heads).map(|_| Array2::zeros((dm, dh))).collect(),
            w_in: Array2::zeros((dmlp, dm)),
            b_in: Array1::zeros(dmlp),
            w_out: Array2::zeros((dm, dmlp)),
            b_out: Array1::zeros(dm),
            w_u: Array2::zeros((dv, dm)),
        }
    }

    /// Gaussian init with std `1/sqrt(fan_in)`, biases zero. The positional
    /// table shares the token embedding's scale.
    pub fn init(config: &ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut w = ModelWeights::zeros(config);
        let dv = config.d_vocab() as f64;
        let dm = config.d_model as f64;
        let mut fill = |a: &mut Array2<f64>, fan_in: f64| {
            let normal = Normal::new(0.0, 1.0 / fan_in.sqrt()).expect("positive std");
            a.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
        };
        fill(&mut w.w_e, dv);
        fill(&mut w.pos, dv);
        for (v, o) in w.w_v.iter_mut().zip(w.w_o.iter_mut()) {
            fill(v, dm);
            fill(o, config.d_head as f64);
        }
        fill(&mut w.w_in, dm);
        fill(&mut w.w_out, config.d_mlp as f64);
        fill(&mut w.w_u, dm);
        w
    }

    /// Tensors in canonical file order, with their file names.
    pub fn named_tensors(&self) -> Vec<(String, TensorView<'_>)> {
        let mut out = vec![
            ("W_E".to_string(), TensorView::Matrix(&self.w_e)),
            ("pos".to_string(), TensorView::Matrix(&self.pos)),
        ];
        for (j, v) in self.w_v.iter().enumerate() {
            out.push((format!("W_V.{j}"), TensorView::Matrix(v)));
        }
        for (j, o) in self.w_o.iter().enumerate() {
            out.push((format!("W_O.{j}"), TensorView::Matrix(o)));
        }
        out.push(("W_in".to_string(), TensorView::Matrix(&self.w_in)));
        out.push(("b_in".to_string(), TensorView::Vector(&self.b_in)));
        out.push(("W_out".to_string(), TensorView::Matrix(&self.w_out)));
        out.push(("b_out".to_string(), TensorView::Vector(&self.b_out)));
        out.push(("W_U".to_string(), TensorView::Matrix(&self.w_u)));
        out
    }

    /// Mutable flat views in the same order as [`named_tensors`](Self::named_tensors).
    pub fn flat_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.push(self.w_e.as_slice_mut().expect("standard layout"));
        out.push(self.pos.as_slice_mut().expect("standard layout"));
        for v in self.w_v.iter_mut() {
            out.push(v.as_slice_mut().expect("standard layout"));
        }
        for o in self.w_o.iter_mut() {
            out.push(o.as_slice_mut().expect("standard layout"));
        }
        out.push(self.w_in.as_slice_mut().expect("standard layout"));
        out.push(self.b_in.as_slice_mut().expect("standard layout"));
        out.push(self.w_out.as_slice_mut().expect("standard layout"));
        out.push(self.b_out.as_slice_mut().expect("standard layout"));
        out.push(self.w_u.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn flat(&self) -> Vec<&[f64]> {
        self.named_tensors()
            .into_iter()
            .map(|(_, t)| t.as_slice())
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.flat().iter().map(|s| s.len()).sum()
    }

    /// Sum over heads of `W_O^j W_V^j` (d_model × d_model).
    pub fn ov_circuit(&self) -> Array2<f64> {
        let dm = self.config.d_model;
        let mut m = Array2::zeros((dm, dm));
        for (o, v) in self.w_o.iter().zip(&self.w_v) {
            m += &o.dot(v);
        }
        m
    }

    /// Neuron-logit map `W_U W_out` restricted to the `p` answer rows (p × d_mlp).
    pub fn neuron_logit_map(&self) -> Array2<f64> {
        let p = self.config.p;
        self.w_u.slice(ndarray::s![..p, ..]).dot(&self.w_out)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (name, t) in self.named_tensors() {
            if let Some(index) = t.as_slice().iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { name, index });
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.check_finite()?;
        let file = WeightsFile::from_weights(self);
        let text = serde_json::to_string(&file)?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightsFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        file.into_weights()
    }

    pub fn to_json(&self) -> Result<String> {
        self.check_finite()?;
        Ok(serde_json::to_string(&WeightsFile::from_weights(self))?)
    }
}

pub enum TensorView<'a> {
    Matrix(&'a Array2<f64>),
    Vector(&'a Array1<f64>),
}

impl<'a> TensorView<'a> {
    pub fn shape(&self) -> Vec<usize> {
        match self {
            TensorView::Matrix(m) => m.shape().to_vec(),
            TensorView::Vector(v) => v.shape().to_vec(),
        }
    }

    pub fn as_slice(&self) -> &'a [f64] {
        match self {
            TensorView::Matrix(m) => m.as_slice().expect("standard layout"),
            TensorView::Vector(v) => v.as_slice().expect("standard layout"),
        }
    }
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsHeader {
    format_version: u32,
    p: usize,
    d_vocab: usize,
    n_ctx: usize,
    d_model: usize,
    d_mlp: usize,
    d_head: usize,
    n_heads: usize,
    epochs: usize,
    weight_decay: f64,
    learning_rate: f64,
    train_frac: f64,
    batch_size: usize,
    seed: u64,
}

/// A data entry as it may appear on disk. Anything other than a finite
/// number is carried through so validation can name the offending tensor.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Number(f64),
    Other(serde_json::Value),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    data: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    header: WeightsHeader,
    tensors: Vec<TensorEntry>,
}

impl WeightsFile {
    fn from_weights(w: &ModelWeights) -> Self {
        let c = &w.config;
        let header = WeightsHeader {
            format_version: FORMAT_VERSION,
            p: c.p,
            d_vocab: c.d_vocab(),
            n_ctx: c.n_ctx(),
            d_model: c.d_model,
            d_mlp: c.d_mlp,
            d_head: c.d_head,
            n_heads: c.n_heads,
            epochs: c.epochs,
            weight_decay: c.weight_decay,
            learning_rate: c.learning_rate,
            train_frac: c.train_frac,
            batch_size: c.batch_size,
            seed: c.seed,
        };
        let tensors = w
            .named_tensors()
            .into_iter()
            .map(|(name, t)| TensorEntry {
                name,
                shape: t.shape(),
                data: t.as_slice().iter().map(|&x| Entry::Number(x)).collect(),
            })
            .collect();
        WeightsFile { header, tensors }
    }

    fn into_weights(self) -> Result<ModelWeights> {
        let h = self.header;
        if h.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported format_version {}",
                h.format_version
            )));
        }
        let config = ModelConfig {
            p: h.p,
            d_model: h.d_model,
            d_mlp: h.d_mlp,
            d_head: h.d_head,
            n_heads: h.n_heads,
            epochs: h.epochs,
            weight_decay: h.weight_decay,
            learning_rate: h.learning_rate,
            train_frac: h.train_frac,
            batch_size: h.batch_size,
            seed: h.seed,
        };
        config
            .validate()
            .map_err(|e| Error::Schema(format!("header: {e}")))?;
        if h.d_vocab != config.d_vocab() || h.n_ctx != config.n_ctx() {
            return Err(Error::Schema(format!(
                "header d_vocab/n_ctx = {}/{} inconsistent with p = {}",
                h.d_vocab, h.n_ctx, h.p
            )));
        }

        let mut weights = ModelWeights::zeros(&config);
        let expected: Vec<(String, Vec<usize>)> = weights
            .named_tensors()
            .into_iter()
            .map(|(n, t)| (n, t.shape()))
            .collect();
        if self.tensors.len() != expected.len() {
            return Err(Error::Schema(format!(
                "expected {} tensors, found {}",
                expected.len(),
                self.tensors.len()
            )));
        }
        let mut slots = weights.flat_mut();
        let mut seen = vec![false; expected.len()];
        for entry in self.tensors {
            let idx = expected
                .iter()
                .position(|(n, _)| *n == entry.name)
                .ok_or_else(|| Error::Schema(format!("unexpected tensor `{}`", entry.name)))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Schema(format!("duplicate tensor `{}`", entry.name)));
            }
            let shape = &expected[idx].1;
            if &entry.shape != shape {
                return Err(Error::ShapeMismatch {
                    name: entry.name,
                    expected: shape.clone(),
                    found: entry.shape,
                });
            }
            let numel: usize = shape.iter().product();
            if entry.data.len() != numel {
                return Err(Error::Schema(format!(
                    "tensor `{}` declares {} elements but carries {}",
                    entry.name,
                    numel,
                    entry.data.len()
                )));
            }
            for (index, (slot, value)) in slots[idx].iter_mut().zip(&entry.data).enumerate() {
                match value {
                    Entry::Number(x) if x.is_finite() => *slot = *x,
                    _ => {
                        return Err(Error::NonFinite {
                            name: entry.name.clone(),
                            index,
                        })
                    }
                }
            }
        }
        drop(slots);
        Ok(weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ModelConfig {
        ModelConfig {
            p: 7,
            d_model: 8,
            d_mlp: 12,
            d_head: 2,
            n_heads: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let w = ModelWeights::init(&small_config().with_seed(3));
        let text = w.to_json().unwrap();
        let back = ModelWeights::from_json(&text).unwrap();
        for (a, b) in w.flat().iter().zip(back.flat()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(w, back);
    }

    #[test]
    fn header_shape_mismatch_is_reported() {
        let w = ModelWeights::init(&small_config());
        let mut v: serde_json::Value = serde_json::from_str(&w.to_json().unwrap()).unwrap();
        v["header"]["d_mlp"] = serde_json::json!(13);
        let err = ModelWeights::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { ref name, .. } if name == "W_in"), "{err}");
    }

    #[test]
    fn nan_and_null_are_rejected() {
        let w = ModelWeights::init(&small_config());
        let mut v: serde_json::Value = serde_json::from_str(&w.to_json().unwrap()).unwrap();
        v["tensors"][4]["data"][3] = serde_json::json!("NaN");
        let err = ModelWeights::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 3, .. }), "{err}");

        v["tensors"][4]["data"][3] = serde_json::Value::Null;
        assert!(matches!(
            ModelWeights::from_json(&v.to_string()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn missing_and_renamed_tensors() {
        let w = ModelWeights::init(&small_config());
        let mut v: serde_json::Value = serde_json::from_str(&w.to_json().unwrap()).unwrap();
        v["tensors"][0]["name"] = serde_json::json!("W_emb");
        assert!(matches!(
            ModelWeights::from_json(&v.to_string()),
            Err(Error::Schema(_))
        ));
        v["tensors"].as_array_mut().unwrap().pop();
        assert!(matches!(
            ModelWeights::from_json(&v.to_string()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn canonical_names() {
        let w = ModelWeights::zeros(&ModelConfig::default());
        let names: Vec<_> = w.named_tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(
            names,
            [
                "W_E", "pos", "W_V.0", "W_V.1", "W_V.2", "W_V.3", "W_O.0", "W_O.1", "W_O.2",
                "W_O.3", "W_in", "b_in", "W_out", "b_out", "W_U"
            ]
        );
    }

    #[test]
    fn save_refuses_non_finite() {
        let mut w = ModelWeights::zeros(&small_config());
        w.b_out[1] = f64::INFINITY;
        assert!(matches!(w.to_json(), Err(Error::NonFinite { ref name, index: 1 }) if name == "b_out"));
    }
}
