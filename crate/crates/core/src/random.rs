//! Seeded random models and images for fixtures and tests.

use rand::Rng;

use crate::model::{BatchNorm, BnnModel, InternalBlock, OutputBlock};

/// Dimensions of a random model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelShape {
    pub input_dim: usize,
    /// Output width of each internal block.
    pub widths: Vec<usize>,
    pub labels: usize,
    pub input_lb: i64,
    pub input_ub: i64,
    pub binarizer: bool,
}

impl ModelShape {
    pub fn new(input_dim: usize, widths: &[usize], labels: usize, lb: i64, ub: i64) -> Self {
        ModelShape {
            input_dim,
            widths: widths.to_vec(),
            labels,
            input_lb: lb,
            input_ub: ub,
            binarizer: true,
        }
    }

    /// A model over inputs already in {-1, 1}.
    pub fn binary(input_dim: usize, widths: &[usize], labels: usize) -> Self {
        ModelShape {
            input_lb: -1,
            input_ub: 1,
            binarizer: false,
            ..Self::new(input_dim, widths, labels, -1, 1)
        }
    }
}

/// Uniform value on a grid of hundredths.
fn hundredths<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let a = (lo * 100.0).round() as i64;
    let b = (hi * 100.0).round() as i64;
    rng.gen_range(a..=b) as f64 / 100.0
}

fn signs<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<i8>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect())
        .collect()
}

/// Batch norm whose cut points fall inside `[-spread, spread]` around
/// `center`, with a few zero-alpha units.
fn batch_norm<R: Rng + ?Sized>(rng: &mut R, n: usize, center: f64, spread: f64) -> BatchNorm {
    let mut bn = BatchNorm {
        alpha: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let alpha = match rng.gen_range(0..20) {
            0 => 0.0,
            1..=12 => hundredths(rng, 0.05, 2.0),
            _ => -hundredths(rng, 0.05, 2.0),
        };
        bn.alpha.push(alpha);
        bn.gamma.push(hundredths(rng, -0.5, 0.5));
        bn.mu.push(center + hundredths(rng, -spread, spread));
        bn.sigma.push(hundredths(rng, 0.25, 2.0));
    }
    bn
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &ModelShape) -> BnnModel {
    let binarizer = shape.binarizer.then(|| {
        let center = (shape.input_lb + shape.input_ub) as f64 / 2.0;
        let spread = ((shape.input_ub - shape.input_lb) as f64 / 2.0).max(0.5);
        batch_norm(rng, shape.input_dim, center, spread)
    });
    let mut width = shape.input_dim;
    let mut blocks = Vec::with_capacity(shape.widths.len());
    for &out in &shape.widths {
        let spread = (width as f64).sqrt().max(1.0);
        blocks.push(InternalBlock {
            weights: signs(rng, out, width),
            bias: (0..out).map(|_| hundredths(rng, -1.0, 1.0)).collect(),
            bn: batch_norm(rng, out, 0.0, spread),
        });
        width = out;
    }
    let output = OutputBlock {
        weights: signs(rng, shape.labels, width),
        bias: (0..shape.labels)
            .map(|_| {
                // whole-number biases make exact score ties reachable
                if rng.gen_bool(0.3) {
                    rng.gen_range(-1..=1) as f64
                } else {
                    hundredths(rng, -1.5, 1.5)
                }
            })
            .collect(),
    };
    BnnModel {
        input_dim: shape.input_dim,
        input_lb: shape.input_lb,
        input_ub: shape.input_ub,
        binarizer,
        blocks,
        output,
    }
}

pub fn random_image<R: Rng + ?Sized>(rng: &mut R, model: &BnnModel) -> Vec<i64> {
    let values = model.input_values();
    (0..model.input_dim)
        .map(|_| values[rng.gen_range(0..values.len())])
        .collect()
}
