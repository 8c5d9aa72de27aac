//! Layer-shape catalog (VGG16, ResNet50, a BERT-large style encoder) and
//! its lowering to matrix-product workloads.
//!
//! Model files are JSON. A file holds either an explicit layer list:
//!
//! ```json
//! { "name": "tiny", "layers": [
//!     { "name": "c1", "kind": "conv", "w": 8, "h": 8, "i": 3, "o": 4, "fk": 3, "p": 1, "st": 1 },
//!     { "name": "f1", "kind": "fc", "t1": 1, "t2": 256, "t3": 10, "batch": 2 } ] }
//! ```
//!
//! or a `"transformer"` record with `hidden`, `heads`, `ffn`, `seq_len` and
//! `blocks`, which expands to one encoder block's products (repeated blocks
//! and attention heads become the batch count).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{conv_dims, ConvParams};

const VGG16_JSON: &str = include_str!("../models/vgg16.json");
const RESNET50_JSON: &str = include_str!("../models/resnet50.json");
const TRANSFORMER_JSON: &str = include_str!("../models/transformer.json");

pub const BUILTIN_MODELS: [&str; 3] = ["vgg16", "resnet50", "transformer"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    Fc { t1: usize, t2: usize, t3: usize },
    Conv(ConvParams),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: LayerKind,
    #[serde(default = "one")]
    pub batch: usize,
}

fn one() -> usize {
    1
}

impl LayerSpec {
    pub fn fc(name: &str, t1: usize, t2: usize, t3: usize) -> Self {
        LayerSpec { name: name.to_string(), kind: LayerKind::Fc { t1, t2, t3 }, batch: 1 }
    }

    pub fn conv(name: &str, c: ConvParams) -> Self {
        LayerSpec { name: name.to_string(), kind: LayerKind::Conv(c), batch: 1 }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    /// (T1, T2, T3) of the product this layer runs.
    pub fn dims(&self) -> (usize, usize, usize) {
        match &self.kind {
            LayerKind::Fc { t1, t2, t3 } => (*t1, *t2, *t3),
            LayerKind::Conv(c) => conv_dims(c),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::InvalidLayer(format!("{}: batch must be positive", self.name)));
        }
        match &self.kind {
            LayerKind::Fc { t1, t2, t3 } => {
                if *t1 == 0 || *t2 == 0 || *t3 == 0 {
                    return Err(Error::InvalidLayer(format!("{}: zero dimension", self.name)));
                }
                Ok(())
            }
            LayerKind::Conv(c) => c.validate().map_err(|e| Error::InvalidLayer(format!("{}: {e}", self.name))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    /// Whether backward-pass products have been appended.
    #[serde(default)]
    pub training: bool,
    pub layers: Vec<LayerSpec>,
}

/// Encoder configuration. The defaults reproduce a (2048, 1024, 1024)
/// projection layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub seq_len: usize,
    pub blocks: usize,
}

impl TransformerConfig {
    pub fn model(&self, name: &str) -> Result<ModelSpec> {
        let TransformerConfig { hidden: h, heads: a, ffn, seq_len: n, blocks } = *self;
        if h == 0 || a == 0 || ffn == 0 || n == 0 || blocks == 0 || h % a != 0 {
            return Err(Error::InvalidLayer(format!("bad transformer config {self:?}")));
        }
        let d = h / a;
        let layers = vec![
            LayerSpec::fc("q_proj", n, h, h).with_batch(blocks),
            LayerSpec::fc("k_proj", n, h, h).with_batch(blocks),
            LayerSpec::fc("v_proj", n, h, h).with_batch(blocks),
            LayerSpec::fc("attn_scores", n, d, n).with_batch(blocks * a),
            LayerSpec::fc("attn_context", n, n, d).with_batch(blocks * a),
            LayerSpec::fc("out_proj", n, h, h).with_batch(blocks),
            LayerSpec::fc("ffn_up", n, h, ffn).with_batch(blocks),
            LayerSpec::fc("ffn_down", n, ffn, h).with_batch(blocks),
        ];
        Ok(ModelSpec { name: name.to_string(), training: false, layers })
    }
}

#[derive(Deserialize)]
struct ModelFile {
    name: String,
    #[serde(default)]
    transformer: Option<TransformerConfig>,
    #[serde(default)]
    layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn from_json(s: &str) -> Result<ModelSpec> {
        let f: ModelFile = serde_json::from_str(s).map_err(|e| Error::Format(format!("model file: {e}")))?;
        let m = match f.transformer {
            Some(t) if f.layers.is_empty() => t.model(&f.name)?,
            Some(_) => return Err(Error::Format("model file has both `transformer` and `layers`".into())),
            None => ModelSpec { name: f.name, training: false, layers: f.layers },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_file(path: &Path) -> Result<ModelSpec> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidLayer(format!("model `{}` has no layers", self.name)));
        }
        self.layers.iter().try_for_each(LayerSpec::validate)
    }
}

/// The built-in transformer config as shipped.
pub fn transformer_config() -> TransformerConfig {
    #[derive(Deserialize)]
    struct F {
        transformer: TransformerConfig,
    }
    serde_json::from_str::<F>(TRANSFORMER_JSON).expect("embedded transformer config parses").transformer
}

/// Looks up a catalog model. `seq_len` overrides the transformer's sequence
/// length and is ignored for the CNNs.
pub fn builtin_model_with(name: &str, seq_len: Option<usize>) -> Result<ModelSpec> {
    match name {
        "vgg16" => ModelSpec::from_json(VGG16_JSON),
        "resnet50" => ModelSpec::from_json(RESNET50_JSON),
        "transformer" => {
            let mut cfg = transformer_config();
            if let Some(n) = seq_len {
                cfg.seq_len = n;
            }
            cfg.model("transformer")
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

pub fn builtin_model(name: &str) -> Result<ModelSpec> {
    builtin_model_with(name, None)
}

/// Appends, for every layer of shape (T1, T2, T3), the input-gradient
/// product (T1, T3, T2) and the weight-gradient product (T2, T1, T3).
/// Convolutions contribute through their lowered product.
pub fn training_expansion(m: &ModelSpec) -> ModelSpec {
    if m.training {
        return m.clone();
    }
    let mut layers = m.layers.clone();
    for l in &m.layers {
        let (t1, t2, t3) = l.dims();
        layers.push(LayerSpec::fc(&format!("{}.grad_input", l.name), t1, t3, t2).with_batch(l.batch));
        layers.push(LayerSpec::fc(&format!("{}.grad_weight", l.name), t2, t1, t3).with_batch(l.batch));
    }
    ModelSpec { name: m.name.clone(), training: true, layers }
}
