//! Binarized network data model, the `bnnf v1` file format, and the exact
//! reference evaluator every encoding is checked against.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use serde_json::Number;
use thiserror::Error;

use crate::exact;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0}: weights must be the integers -1 or 1")]
    Weight(String),
    #[error("{0}: sigma must be positive")]
    Sigma(String),
    #[error("{0}: parameters must be finite")]
    NotFinite(String),
    #[error("input domain is empty: lb {lb} > ub {ub}")]
    EmptyDomain { lb: i64, ub: i64 },
    #[error("a model without binarizer needs the binary input domain [-1, 1], got [{lb}, {ub}]")]
    NonBinaryDomain { lb: i64, ub: i64 },
    #[error("input value {value} at position {index} is outside the input domain")]
    OutOfDomain { index: usize, value: i64 },
}

/// Elementwise batch normalization followed by `sign`.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl BatchNorm {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `sign(alpha_i * (s + bias - mu_i) / sigma_i + gamma_i)` with `sign(0) = +1`.
    pub fn bit(&self, i: usize, s: i64, bias: f64) -> bool {
        exact::batch_norm_nonneg(s, bias, self.alpha[i], self.gamma[i], self.mu[i], self.sigma[i])
    }

    fn validate(&self, what: &str, len: usize) -> Result<(), ModelError> {
        for (name, v) in [
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("mu", &self.mu),
            ("sigma", &self.sigma),
        ] {
            if v.len() != len {
                return Err(ModelError::Dimension(format!(
                    "{what}: {name} has length {}, expected {len}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NotFinite(format!("{what}.{name}")));
            }
        }
        if let Some(i) = self.sigma.iter().position(|&s| s <= 0.0) {
            return Err(ModelError::Sigma(format!("{what}.sigma[{i}]")));
        }
        Ok(())
    }
}

/// The input layer mapping integer pixels to bits (batch norm + sign).
pub type InputBinarizer = BatchNorm;

/// `Lin -> Bn -> Bin`: a ±1 vector to a ±1 vector.
#[derive(Clone, Debug, PartialEq)]
pub struct InternalBlock {
    /// Row-major `out_dim x in_dim` matrix with entries in {-1, +1}.
    pub weights: Vec<Vec<i8>>,
    pub bias: Vec<f64>,
    pub bn: BatchNorm,
}

impl InternalBlock {
    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }
}

/// `Lin -> argmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputBlock {
    pub weights: Vec<Vec<i8>>,
    pub bias: Vec<f64>,
}

impl OutputBlock {
    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn num_labels(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnnModel {
    pub input_dim: usize,
    pub input_lb: i64,
    pub input_ub: i64,
    pub binarizer: Option<InputBinarizer>,
    pub blocks: Vec<InternalBlock>,
    pub output: OutputBlock,
}

/// Everything computed by one forward pass. Bits are `true` for +1.
#[derive(Clone, Debug, PartialEq)]
pub struct Activations {
    /// Input to the first block (the binarized pixels, or the input itself).
    pub input_bits: Vec<bool>,
    /// Output of each internal block.
    pub layers: Vec<Vec<bool>>,
    pub scores: Vec<f64>,
    pub label: usize,
}

impl Activations {
    /// Input bits of internal block `k`.
    pub fn block_input(&self, k: usize) -> &[bool] {
        if k == 0 {
            &self.input_bits
        } else {
            &self.layers[k - 1]
        }
    }

    /// Input bits of the output block.
    pub fn last_layer(&self) -> &[bool] {
        self.layers.last().unwrap_or(&self.input_bits)
    }
}

/// `<row, x>` over ±1 values, with `x` given as bits.
pub fn signed_dot(row: &[i8], x: &[bool]) -> i64 {
    row.iter()
        .zip(x)
        .map(|(&a, &b)| if b { a as i64 } else { -(a as i64) })
        .sum()
}

impl BnnModel {
    pub fn num_labels(&self) -> usize {
        self.output.num_labels()
    }

    /// All values a single input coordinate may take.
    pub fn input_values(&self) -> Vec<i64> {
        if self.binarizer.is_some() {
            (self.input_lb..=self.input_ub).collect()
        } else {
            vec![-1, 1]
        }
    }

    pub fn check_input(&self, x: &[i64]) -> Result<(), ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::Dimension(format!(
                "input has length {}, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        for (index, &value) in x.iter().enumerate() {
            let ok = if self.binarizer.is_some() {
                (self.input_lb..=self.input_ub).contains(&value)
            } else {
                value == -1 || value == 1
            };
            if !ok {
                return Err(ModelError::OutOfDomain { index, value });
            }
        }
        Ok(())
    }

    /// Binarized input as seen by the first block.
    pub fn binarize(&self, x: &[i64]) -> Vec<bool> {
        match &self.binarizer {
            Some(bn) => x.iter().enumerate().map(|(i, &v)| bn.bit(i, v, 0.0)).collect(),
            None => x.iter().map(|&v| v > 0).collect(),
        }
    }

    pub fn forward(&self, x: &[i64]) -> Result<Activations, ModelError> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[i64]) -> Activations {
        let input_bits = self.binarize(x);
        let mut layers: Vec<Vec<bool>> = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let prev = layers.last().unwrap_or(&input_bits);
            let out = block
                .weights
                .iter()
                .enumerate()
                .map(|(i, row)| block.bn.bit(i, signed_dot(row, prev), block.bias[i]))
                .collect();
            layers.push(out);
        }
        let last = layers.last().unwrap_or(&input_bits);
        let sums: Vec<i64> = self.output.weights.iter().map(|row| signed_dot(row, last)).collect();
        let scores = sums
            .iter()
            .zip(&self.output.bias)
            .map(|(&s, &b)| s as f64 + b)
            .collect();
        let label = argmax_first(&sums, &self.output.bias);
        Activations {
            input_bits,
            layers,
            scores,
            label,
        }
    }

    /// Predicted label only.
    pub fn classify(&self, x: &[i64]) -> Result<usize, ModelError> {
        Ok(self.forward(x)?.label)
    }

    /// Orders pixels by decreasing occlusion saliency.
    ///
    /// A pixel's saliency is the largest drop of the predicted label's margin
    /// `w_l - max_{j != l} w_j` when that pixel alone is set to the domain's
    /// lower or upper bound. Ties keep index order.
    pub fn saliency_rank(&self, x: &[i64]) -> Result<Vec<usize>, ModelError> {
        let base = self.forward(x)?;
        let label = base.label;
        let margin = |scores: &[f64]| {
            let best_other = scores
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != label)
                .map(|(_, &w)| w)
                .fold(f64::NEG_INFINITY, f64::max);
            scores[label] - best_other
        };
        let base_margin = margin(&base.scores);
        let extremes = [self.input_values()[0], *self.input_values().last().expect("nonempty")];
        let mut saliency: Vec<(usize, f64)> = (0..self.input_dim)
            .map(|i| {
                let mut y = x.to_vec();
                let drop = extremes
                    .iter()
                    .map(|&v| {
                        y[i] = v;
                        base_margin - margin(&self.forward_unchecked(&y).scores)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                (i, drop)
            })
            .collect();
        saliency.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(saliency.into_iter().map(|(i, _)| i).collect())
    }
}

/// Index of the first maximum of `sums[i] + bias[i]`, compared exactly.
fn argmax_first(sums: &[i64], bias: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..sums.len() {
        if exact::compare_scores(sums[i], bias[i], sums[best], bias[best]) == Ordering::Greater {
            best = i;
        }
    }
    best
}

// ---- bnnf v1 document --------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u32,
    input: InputDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    binarizer: Option<BatchNormDoc>,
    blocks: Vec<BlockDoc>,
    output: OutputDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputDoc {
    dim: usize,
    lb: i64,
    ub: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchNormDoc {
    alpha: Vec<f64>,
    gamma: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    #[serde(rename = "A")]
    weights: Vec<Vec<Number>>,
    b: Vec<f64>,
    alpha: Vec<f64>,
    gamma: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputDoc {
    #[serde(rename = "A")]
    weights: Vec<Vec<Number>>,
    b: Vec<f64>,
}

fn sign_matrix(raw: Vec<Vec<Number>>, what: &str) -> Result<Vec<Vec<i8>>, ModelError> {
    raw.into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, n)| match n.as_i64() {
                    Some(1) => Ok(1i8),
                    Some(-1) => Ok(-1i8),
                    _ => Err(ModelError::Weight(format!("{what}.A[{i}][{j}] = {n}"))),
                })
                .collect()
        })
        .collect()
}

fn check_matrix(w: &[Vec<i8>], rows: usize, cols: usize, what: &str) -> Result<(), ModelError> {
    if w.len() != rows || w.iter().any(|r| r.len() != cols) {
        return Err(ModelError::Dimension(format!(
            "{what}.A must be {rows} x {cols}"
        )));
    }
    Ok(())
}

fn matrix_doc(w: &[Vec<i8>]) -> Vec<Vec<Number>> {
    w.iter()
        .map(|r| r.iter().map(|&a| Number::from(a as i64)).collect())
        .collect()
}

impl BnnModel {
    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_lb > self.input_ub {
            return Err(ModelError::EmptyDomain {
                lb: self.input_lb,
                ub: self.input_ub,
            });
        }
        if self.input_dim == 0 {
            return Err(ModelError::Dimension("input.dim must be positive".into()));
        }
        match &self.binarizer {
            Some(bn) => bn.validate("binarizer", self.input_dim)?,
            None => {
                if self.input_lb != -1 || self.input_ub != 1 {
                    return Err(ModelError::NonBinaryDomain {
                        lb: self.input_lb,
                        ub: self.input_ub,
                    });
                }
            }
        }
        if self.blocks.is_empty() {
            return Err(ModelError::Dimension("at least one internal block is required".into()));
        }
        let mut width = self.input_dim;
        for (k, block) in self.blocks.iter().enumerate() {
            let what = format!("blocks[{k}]");
            let out = block.weights.len();
            if out == 0 {
                return Err(ModelError::Dimension(format!("{what} has no neurons")));
            }
            check_matrix(&block.weights, out, width, &what)?;
            if block.weights.iter().flatten().any(|&a| a != 1 && a != -1) {
                return Err(ModelError::Weight(what));
            }
            if block.bias.len() != out {
                return Err(ModelError::Dimension(format!("{what}.b must have length {out}")));
            }
            if block.bias.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NotFinite(format!("{what}.b")));
            }
            block.bn.validate(&what, out)?;
            width = out;
        }
        let s = self.output.weights.len();
        if s < 2 {
            return Err(ModelError::Dimension("output needs at least two labels".into()));
        }
        check_matrix(&self.output.weights, s, width, "output")?;
        if self.output.weights.iter().flatten().any(|&a| a != 1 && a != -1) {
            return Err(ModelError::Weight("output".into()));
        }
        if self.output.bias.len() != s {
            return Err(ModelError::Dimension(format!("output.b must have length {s}")));
        }
        if self.output.bias.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NotFinite("output.b".into()));
        }
        Ok(())
    }
}

fn bn_from_doc(d: BatchNormDoc) -> BatchNorm {
    BatchNorm {
        alpha: d.alpha,
        gamma: d.gamma,
        mu: d.mu,
        sigma: d.sigma,
    }
}

pub fn parse_model(text: &str) -> Result<BnnModel, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(ModelError::Version(doc.version));
    }
    let blocks = doc
        .blocks
        .into_iter()
        .enumerate()
        .map(|(k, b)| {
            Ok(InternalBlock {
                weights: sign_matrix(b.weights, &format!("blocks[{k}]"))?,
                bias: b.b,
                bn: BatchNorm {
                    alpha: b.alpha,
                    gamma: b.gamma,
                    mu: b.mu,
                    sigma: b.sigma,
                },
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let model = BnnModel {
        input_dim: doc.input.dim,
        input_lb: doc.input.lb,
        input_ub: doc.input.ub,
        binarizer: doc.binarizer.map(bn_from_doc),
        blocks,
        output: OutputBlock {
            weights: sign_matrix(doc.output.weights, "output")?,
            bias: doc.output.b,
        },
    };
    model.validate()?;
    Ok(model)
}

pub fn serialize_model(model: &BnnModel) -> String {
    let bn_doc = |bn: &BatchNorm| BatchNormDoc {
        alpha: bn.alpha.clone(),
        gamma: bn.gamma.clone(),
        mu: bn.mu.clone(),
        sigma: bn.sigma.clone(),
    };
    let doc = ModelDoc {
        version: FORMAT_VERSION,
        input: InputDoc {
            dim: model.input_dim,
            lb: model.input_lb,
            ub: model.input_ub,
        },
        binarizer: model.binarizer.as_ref().map(bn_doc),
        blocks: model
            .blocks
            .iter()
            .map(|b| BlockDoc {
                weights: matrix_doc(&b.weights),
                b: b.bias.clone(),
                alpha: b.bn.alpha.clone(),
                gamma: b.bn.gamma.clone(),
                mu: b.bn.mu.clone(),
                sigma: b.bn.sigma.clone(),
            })
            .collect(),
        output: OutputDoc {
            weights: matrix_doc(&model.output.weights),
            b: model.output.bias.clone(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model documents always serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE_1: &str = r#"{
        "version": 1,
        "input": {"dim": 2, "lb": -1, "ub": 1},
        "blocks": [{"A": [[1, -1]], "b": [-0.5], "alpha": [0.12], "gamma": [0.1], "mu": [-0.1], "sigma": [2]}],
        "output": {"A": [[1], [-1]], "b": [0, 0]}
    }"#;

    #[test]
    fn parses_running_example_block() {
        let m = parse_model(EXAMPLE_1).unwrap();
        let b = &m.blocks[0];
        assert_eq!(b.weights, vec![vec![1, -1]]);
        assert_eq!(b.bias, vec![-0.5]);
        assert_eq!(b.bn.alpha, vec![0.12]);
        assert_eq!(b.bn.mu, vec![-0.1]);
        assert_eq!(b.bn.sigma, vec![2.0]);
        assert_eq!(b.bn.gamma, vec![0.1]);
    }

    #[test]
    fn example_block_forward() {
        let m = parse_model(EXAMPLE_1).unwrap();
        // y = 1 - (-1) - 0.5 = 1.5, z = 0.12 * 1.6 / 2 + 0.1 = 0.196
        let a = m.forward(&[1, -1]).unwrap();
        assert_eq!(a.layers[0], vec![true]);
        // y = -1 - 1 - 0.5 = -2.5, z = 0.12 * -2.4 / 2 + 0.1 = -0.044
        let a = m.forward(&[-1, 1]).unwrap();
        assert_eq!(a.layers[0], vec![false]);
    }

    #[test]
    fn zero_sigma_is_rejected() {
        let text = EXAMPLE_1.replace("\"sigma\": [2]", "\"sigma\": [0]");
        let err = parse_model(&text).unwrap_err();
        assert!(err.to_string().contains("sigma must be positive"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let bad_weight = EXAMPLE_1.replace("[[1, -1]]", "[[1, 0]]");
        assert!(matches!(parse_model(&bad_weight), Err(ModelError::Weight(_))));
        let float_weight = EXAMPLE_1.replace("[[1, -1]]", "[[1.0, -1]]");
        assert!(matches!(parse_model(&float_weight), Err(ModelError::Weight(_))));
        let chain = EXAMPLE_1.replace("[[1, -1]]", "[[1, -1, 1]]");
        assert!(matches!(parse_model(&chain), Err(ModelError::Dimension(_))));
        let domain = EXAMPLE_1.replace("\"lb\": -1", "\"lb\": 0");
        assert!(matches!(parse_model(&domain), Err(ModelError::NonBinaryDomain { .. })));
        let empty = EXAMPLE_1.replace("\"lb\": -1, \"ub\": 1", "\"lb\": 3, \"ub\": 1");
        assert!(matches!(parse_model(&empty), Err(ModelError::EmptyDomain { .. })));
        let version = EXAMPLE_1.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(parse_model(&version), Err(ModelError::Version(2))));
        assert!(matches!(parse_model("{"), Err(ModelError::Json(_))));
        let unknown = EXAMPLE_1.replace("\"version\": 1,", "\"version\": 1, \"extra\": 0,");
        assert!(matches!(parse_model(&unknown), Err(ModelError::Json(_))));
    }

    #[test]
    fn serialized_example_keeps_parameters() {
        let m = parse_model(EXAMPLE_1).unwrap();
        let text = serialize_model(&m);
        assert!(text.contains("\"alpha\": [\n        0.12\n      ]"), "{text}");
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn running_example_output_block() {
        // A_d = [1, -1; -1, 1], b = [-0.5, 0.2], fed by an identity-like block
        let text = r#"{
            "version": 1,
            "input": {"dim": 2, "lb": -1, "ub": 1},
            "blocks": [{"A": [[1, 1], [1, -1]], "b": [0, 0], "alpha": [1, 1], "gamma": [0, 0], "mu": [0, 0], "sigma": [1, 1]}],
            "output": {"A": [[1, -1], [-1, 1]], "b": [-0.5, 0.2]}
        }"#;
        let m = parse_model(text).unwrap();
        let a = m.forward(&[1, -1]).unwrap();
        // block output (1, 1): w1 = 1 - 1 - 0.5, w2 = -1 + 1 + 0.2
        assert_eq!(a.layers[0], vec![true, true]);
        assert!((a.scores[0] + 0.5).abs() < 1e-12);
        assert!((a.scores[1] - 0.2).abs() < 1e-12);
        assert_eq!(a.label, 1);
    }

    #[test]
    fn ties_pick_first_label() {
        let text = r#"{
            "version": 1,
            "input": {"dim": 1, "lb": -1, "ub": 1},
            "blocks": [{"A": [[1]], "b": [0], "alpha": [1], "gamma": [0], "mu": [0], "sigma": [1]}],
            "output": {"A": [[1], [1], [1]], "b": [0.25, 0.5, 0.5]}
        }"#;
        let m = parse_model(text).unwrap();
        assert_eq!(m.classify(&[1]).unwrap(), 1);
        assert_eq!(m.classify(&[-1]).unwrap(), 1);
    }

    #[test]
    fn domain_is_checked() {
        let m = parse_model(EXAMPLE_1).unwrap();
        assert!(matches!(m.forward(&[0, 1]), Err(ModelError::OutOfDomain { index: 0, .. })));
        assert!(matches!(m.forward(&[1]), Err(ModelError::Dimension(_))));
    }
}
