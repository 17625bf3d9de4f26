use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::argmax;
use crate::rng::stream;

pub const SCORER_VERSION: u32 = 1;

/// Dense affine map `x ↦ W x + b` with row-major `W` of shape `out × inp`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inp: usize,
    pub out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inp: usize, out: usize) -> Self {
        Self { inp, out, weights: vec![0.0; inp * out], bias: vec![0.0; out] }
    }

    fn uniform(inp: usize, out: usize, seed: u64, index: u64) -> Self {
        let bound = 1.0 / (inp as f64).sqrt();
        let mut rng = stream(seed, "init", index);
        let weights = (0..inp * out).map(|_| rng.gen_range(-bound..bound)).collect();
        Self { inp, out, weights, bias: vec![0.0; out] }
    }

    fn from_rows(rows: &[Vec<f64>], bias: &[f64]) -> Result<Self> {
        let out = rows.len();
        let inp = rows.first().map_or(0, Vec::len);
        if out == 0 || inp == 0 || rows.iter().any(|r| r.len() != inp) || bias.len() != out {
            return Err(Error::InvalidShape("ragged or empty weight matrix".into()));
        }
        let layer = Self { inp, out, weights: rows.concat(), bias: bias.to_vec() };
        if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("non-finite parameter".into()));
        }
        Ok(layer)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.weights.chunks(self.inp).map(<[f64]>::to_vec).collect()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &self.weights[o * self.inp..(o + 1) * self.inp];
            *yo = self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn accumulate(&self, x: &[f64], dy: &[f64], grad: &mut [f64]) {
        let (gw, gb) = grad.split_at_mut(self.weights.len());
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (g, v) in gw[o * self.inp..(o + 1) * self.inp].iter_mut().zip(x) {
                *g += d * v;
            }
            gb[o] += d;
        }
    }

    fn add(&mut self, delta: &[f64], alpha: f64) {
        let (dw, db) = delta.split_at(self.weights.len());
        for (w, d) in self.weights.iter_mut().zip(dw) {
            *w += alpha * d;
        }
        for (b, d) in self.bias.iter_mut().zip(db) {
            *b += alpha * d;
        }
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weights);
        out.extend_from_slice(&self.bias);
    }

    fn scale(&mut self, alpha: f64) {
        self.weights.iter_mut().chain(self.bias.iter_mut()).for_each(|v| *v *= alpha);
    }

    /// Rewrites the layer to act on `(x − mean)/std` coordinates.
    fn unfold(&mut self, mean: &[f64], std: &[f64]) {
        for o in 0..self.out {
            let row = &mut self.weights[o * self.inp..(o + 1) * self.inp];
            let mut shift = 0.0;
            for ((w, m), s) in row.iter_mut().zip(mean).zip(std) {
                shift += *w * m;
                *w *= s;
            }
            self.bias[o] += shift;
        }
    }

    /// Maps a parameter change expressed in standardized coordinates back to
    /// raw feature coordinates.
    fn fold_delta(&self, delta: &mut [f64], mean: &[f64], std: &[f64]) {
        let (dw, db) = delta.split_at_mut(self.weights.len());
        for o in 0..self.out {
            let row = &mut dw[o * self.inp..(o + 1) * self.inp];
            let mut shift = 0.0;
            for ((w, m), s) in row.iter_mut().zip(mean).zip(std) {
                *w /= s;
                shift += *w * m;
            }
            db[o] -= shift;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearScorer {
    pub layer: Layer,
    pub seed: u64,
}

impl LinearScorer {
    /// Uniform(±1/√input_dim) weights and zero bias drawn from `seed`.
    pub fn init(input_dim: usize, output_width: usize, seed: u64) -> Self {
        Self { layer: Layer::uniform(input_dim, output_width, seed, 0), seed }
    }

    pub fn zeros(input_dim: usize, output_width: usize) -> Self {
        Self { layer: Layer::zeros(input_dim, output_width), seed: 0 }
    }

    pub fn from_parts(weights: &[Vec<f64>], bias: &[f64], seed: u64) -> Result<Self> {
        Ok(Self { layer: Layer::from_rows(weights, bias)?, seed })
    }
}

/// One hidden rectifier layer between two affine maps.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpScorer {
    pub hidden: Layer,
    pub output: Layer,
    pub seed: u64,
}

impl MlpScorer {
    pub fn init(input_dim: usize, hidden_dim: usize, output_width: usize, seed: u64) -> Result<Self> {
        if hidden_dim == 0 {
            return Err(Error::InvalidShape("hidden_dim must be at least 1".into()));
        }
        Ok(Self {
            hidden: Layer::uniform(input_dim, hidden_dim, seed, 0),
            output: Layer::uniform(hidden_dim, output_width, seed, 1),
            seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scorer {
    Linear(LinearScorer),
    Mlp(MlpScorer),
}

impl From<LinearScorer> for Scorer {
    fn from(s: LinearScorer) -> Self {
        Scorer::Linear(s)
    }
}

impl From<MlpScorer> for Scorer {
    fn from(s: MlpScorer) -> Self {
        Scorer::Mlp(s)
    }
}

impl Scorer {
    pub fn input_dim(&self) -> usize {
        match self {
            Scorer::Linear(s) => s.layer.inp,
            Scorer::Mlp(s) => s.hidden.inp,
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Scorer::Linear(s) => s.layer.out,
            Scorer::Mlp(s) => s.output.out,
        }
    }

    /// Scratch length needed by [`Scorer::forward_into`].
    pub(crate) fn cache_len(&self) -> usize {
        match self {
            Scorer::Linear(_) => 0,
            Scorer::Mlp(s) => s.hidden.out,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::WidthMismatch { expected: self.input_dim(), got: x.len() });
        }
        let mut out = vec![0.0; self.output_width()];
        let mut cache = vec![0.0; self.cache_len()];
        self.forward_into(x, &mut out, &mut cache);
        Ok(out)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Forward pass without dimension checks; `cache` keeps the rectified
    /// hidden activations for the backward pass.
    pub(crate) fn forward_into(&self, x: &[f64], out: &mut [f64], cache: &mut [f64]) {
        match self {
            Scorer::Linear(s) => s.layer.apply(x, out),
            Scorer::Mlp(s) => {
                s.hidden.apply(x, cache);
                cache.iter_mut().for_each(|h| *h = h.max(0.0));
                s.output.apply(cache, out);
            }
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Scorer::Linear(s) => s.layer.param_count(),
            Scorer::Mlp(s) => s.hidden.param_count() + s.output.param_count(),
        }
    }

    /// Flat parameter vector: for each layer, row-major weights then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        match self {
            Scorer::Linear(s) => s.layer.write_params(&mut out),
            Scorer::Mlp(s) => {
                s.hidden.write_params(&mut out);
                s.output.write_params(&mut out);
            }
        }
        out
    }

    /// Adds `∂(dout · scores)/∂θ` at input `x` into `grad`, using the cache
    /// filled by the matching forward pass.
    pub(crate) fn backward(&self, x: &[f64], cache: &[f64], dout: &[f64], grad: &mut [f64]) {
        match self {
            Scorer::Linear(s) => s.layer.accumulate(x, dout, grad),
            Scorer::Mlp(s) => {
                let (g1, g2) = grad.split_at_mut(s.hidden.param_count());
                s.output.accumulate(cache, dout, g2);
                let mut dh = vec![0.0; s.hidden.out];
                for (o, &d) in dout.iter().enumerate() {
                    let row = &s.output.weights[o * s.output.inp..(o + 1) * s.output.inp];
                    for (h, w) in dh.iter_mut().zip(row) {
                        *h += d * w;
                    }
                }
                for (h, &a) in dh.iter_mut().zip(cache) {
                    if a <= 0.0 {
                        *h = 0.0;
                    }
                }
                s.hidden.accumulate(x, &dh, g1);
            }
        }
    }

    /// `θ ← θ + alpha·delta` in the flat layout of [`Scorer::params`].
    pub fn add_scaled(&mut self, delta: &[f64], alpha: f64) {
        match self {
            Scorer::Linear(s) => s.layer.add(delta, alpha),
            Scorer::Mlp(s) => {
                let (d1, d2) = delta.split_at(s.hidden.param_count());
                s.hidden.add(d1, alpha);
                s.output.add(d2, alpha);
            }
        }
    }

    /// Multiplies every parameter, biases included, by `alpha`.
    pub fn scale(&mut self, alpha: f64) {
        match self {
            Scorer::Linear(s) => s.layer.scale(alpha),
            Scorer::Mlp(s) => {
                s.hidden.scale(alpha);
                s.output.scale(alpha);
            }
        }
    }

    pub(crate) fn unfold(&mut self, mean: &[f64], std: &[f64]) {
        match self {
            Scorer::Linear(s) => s.layer.unfold(mean, std),
            Scorer::Mlp(s) => s.hidden.unfold(mean, std),
        }
    }

    pub(crate) fn fold_delta(&self, delta: &mut [f64], mean: &[f64], std: &[f64]) {
        match self {
            Scorer::Linear(s) => s.layer.fold_delta(delta, mean, std),
            Scorer::Mlp(s) => {
                let n1 = s.hidden.param_count();
                s.hidden.fold_delta(&mut delta[..n1], mean, std);
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&ScorerDoc::from(self))
            .map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScorerDoc =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Scorer::try_from(doc)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScorerKind {
    Linear,
    Mlp,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dims {
    input: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hidden: Option<usize>,
    output: usize,
}

/// On-disk scorer: one weight matrix (row-major rows) and bias per layer.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScorerDoc {
    version: u32,
    kind: ScorerKind,
    dims: Dims,
    weights: Vec<Vec<Vec<f64>>>,
    bias: Vec<Vec<f64>>,
    seed: u64,
}

impl From<&Scorer> for ScorerDoc {
    fn from(s: &Scorer) -> Self {
        match s {
            Scorer::Linear(l) => ScorerDoc {
                version: SCORER_VERSION,
                kind: ScorerKind::Linear,
                dims: Dims { input: l.layer.inp, hidden: None, output: l.layer.out },
                weights: vec![l.layer.rows()],
                bias: vec![l.layer.bias.clone()],
                seed: l.seed,
            },
            Scorer::Mlp(m) => ScorerDoc {
                version: SCORER_VERSION,
                kind: ScorerKind::Mlp,
                dims: Dims { input: m.hidden.inp, hidden: Some(m.hidden.out), output: m.output.out },
                weights: vec![m.hidden.rows(), m.output.rows()],
                bias: vec![m.hidden.bias.clone(), m.output.bias.clone()],
                seed: m.seed,
            },
        }
    }
}

impl TryFrom<ScorerDoc> for Scorer {
    type Error = Error;

    fn try_from(doc: ScorerDoc) -> Result<Self> {
        if doc.version != SCORER_VERSION {
            return Err(Error::Serialization(format!("unsupported scorer version {}", doc.version)));
        }
        let layers: Vec<Layer> = doc
            .weights
            .iter()
            .zip(&doc.bias)
            .map(|(w, b)| Layer::from_rows(w, b))
            .collect::<Result<_>>()?;
        let scorer = match (doc.kind, layers.len()) {
            (ScorerKind::Linear, 1) => {
                Scorer::Linear(LinearScorer { layer: layers[0].clone(), seed: doc.seed })
            }
            (ScorerKind::Mlp, 2) if layers[0].out == layers[1].inp => Scorer::Mlp(MlpScorer {
                hidden: layers[0].clone(),
                output: layers[1].clone(),
                seed: doc.seed,
            }),
            _ => return Err(Error::Serialization("layer count does not match kind".into())),
        };
        let hidden_ok = match &scorer {
            Scorer::Mlp(m) => doc.dims.hidden == Some(m.hidden.out),
            Scorer::Linear(_) => doc.dims.hidden.is_none(),
        };
        if scorer.input_dim() != doc.dims.input || scorer.output_width() != doc.dims.output || !hidden_ok
        {
            return Err(Error::Serialization("dims disagree with weight arrays".into()));
        }
        Ok(scorer)
    }
}
