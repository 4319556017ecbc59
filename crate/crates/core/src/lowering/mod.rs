//! Integer thresholds for the ILP and cardinality forms of each neuron and
//! each pair of output scores.

mod lp;

use num::BigRational;

use crate::exact::{self, ceil_clamped, floor_clamped, rational};
use crate::model::{InternalBlock, OutputBlock};

pub use lp::export_ilp;

/// How one internal neuron's output bit depends on `s = <a, x>` over ±1 inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeuronThreshold {
    /// Bit is +1 iff `s >= c` (alpha > 0).
    Geq(i64),
    /// Bit is +1 iff `s <= c` (alpha < 0), i.e. `<-a, x> >= -c`.
    Leq(i64),
    /// Alpha is zero: the bit is `sign(gamma)`.
    Const(bool),
}

impl NeuronThreshold {
    /// The threshold as a `>=` constraint on a possibly negated row.
    /// Returns `(negate_row, c)`, or `None` for constant neurons.
    pub fn folded(self) -> Option<(bool, i64)> {
        match self {
            NeuronThreshold::Geq(c) => Some((false, c)),
            NeuronThreshold::Leq(c) => Some((true, -c)),
            NeuronThreshold::Const(_) => None,
        }
    }

    pub fn holds(self, s: i64) -> bool {
        match self {
            NeuronThreshold::Geq(c) => s >= c,
            NeuronThreshold::Leq(c) => s <= c,
            NeuronThreshold::Const(b) => b,
        }
    }
}

/// `sum_{j in pos} x_j + sum_{j in neg} (1 - x_j) >= d` over 0/1 values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdRow {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
    pub d: i64,
}

impl ThresholdRow {
    pub fn len(&self) -> usize {
        self.pos.len() + self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Evaluates the row on bits (`true` is 1).
    pub fn holds(&self, bits: &[bool]) -> bool {
        let count = self.pos.iter().filter(|&&j| bits[j]).count()
            + self.neg.iter().filter(|&&j| !bits[j]).count();
        count as i64 >= self.d
    }
}

/// `mu - b - sigma * gamma / alpha`, the real cut point of `s`.
fn cut_point(alpha: f64, gamma: f64, mu: f64, sigma: f64, bias: f64) -> BigRational {
    rational(mu) - rational(bias) - rational(sigma) * rational(gamma) / rational(alpha)
}

/// Threshold of a batch-normalized sign unit over an integer quantity `s`
/// ranging in `[-bound, bound]`, with `bias` added before normalization.
pub(crate) fn sign_threshold(alpha: f64, gamma: f64, mu: f64, sigma: f64, bias: f64, bound: i64) -> NeuronThreshold {
    if alpha == 0.0 {
        return NeuronThreshold::Const(gamma >= 0.0);
    }
    let t = cut_point(alpha, gamma, mu, sigma, bias);
    // clamping beyond the reachable range keeps the constraint's truth value
    let bound = bound.saturating_add(1);
    if alpha > 0.0 {
        NeuronThreshold::Geq(ceil_clamped(&t, bound))
    } else {
        NeuronThreshold::Leq(floor_clamped(&t, bound))
    }
}

pub fn neuron_threshold(block: &InternalBlock, i: usize) -> NeuronThreshold {
    let bn = &block.bn;
    sign_threshold(bn.alpha[i], bn.gamma[i], bn.mu[i], bn.sigma[i], block.bias[i], block.in_dim() as i64)
}

/// Rewrites `sum_j c_j * v_j >= k` over ±1 values `v`, with `c_j` in
/// {-1, 0, 1}, as a cardinality row over the 0/1 bits.
fn signed_to_row(coeffs: impl Iterator<Item = (usize, i8)>, k: i64) -> ThresholdRow {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (j, c) in coeffs {
        match c {
            1 => pos.push(j),
            -1 => neg.push(j),
            _ => {}
        }
    }
    // <c, 2x - 1> >= k  <=>  <c, x> >= (k + sum c) / 2
    let sum = pos.len() as i64 - neg.len() as i64;
    let d = ceil_div(k + sum, 2) + neg.len() as i64;
    ThresholdRow { pos, neg, d }
}

pub fn row_to_cardinality(a_row: &[i8], c: i64) -> ThresholdRow {
    signed_to_row(a_row.iter().copied().enumerate(), c)
}

/// Cardinality row equivalent to a non-constant neuron being +1.
pub fn neuron_row(block: &InternalBlock, i: usize) -> Option<ThresholdRow> {
    let (negate, c) = neuron_threshold(block, i).folded()?;
    let sign = if negate { -1 } else { 1 };
    Some(signed_to_row(
        block.weights[i].iter().enumerate().map(|(j, &a)| (j, a * sign)),
        c,
    ))
}

pub fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

/// `b_j - b_i` as an exact rational.
fn bias_gap(out: &OutputBlock, i: usize, j: usize) -> BigRational {
    rational(out.bias[j]) - rational(out.bias[i])
}

fn pair_bound(out: &OutputBlock) -> i64 {
    2 * out.in_dim() as i64 + 2
}

/// Integer `k` with `w_i >= w_j  <=>  <a_i - a_j, x> >= k`.
pub fn pair_threshold(out: &OutputBlock, i: usize, j: usize) -> i64 {
    ceil_clamped(&bias_gap(out, i, j), pair_bound(out))
}

/// Integer `k` with `w_i > w_j  <=>  <a_i - a_j, x> >= k`.
pub fn strict_pair_threshold(out: &OutputBlock, i: usize, j: usize) -> i64 {
    floor_clamped(&bias_gap(out, i, j), pair_bound(out)) + 1
}

/// Right-hand side of the halved ILP comparison
/// `<(a_i - a_j) / 2, x> >= ceil((b_j - b_i) / 2)`.
pub fn ilp_pair_threshold(out: &OutputBlock, i: usize, j: usize) -> i64 {
    let half = bias_gap(out, i, j) / exact::int(2);
    ceil_clamped(&half, pair_bound(out))
}

fn pair_row(out: &OutputBlock, i: usize, j: usize, k: i64) -> ThresholdRow {
    assert_ne!(i, j, "a label is not compared with itself");
    // a_i - a_j is 2 * c with c in {-1, 0, 1}
    let coeffs = out.weights[i]
        .iter()
        .zip(&out.weights[j])
        .enumerate()
        .map(|(p, (&ai, &aj))| (p, (ai - aj) / 2));
    signed_to_row(coeffs, ceil_div(k, 2))
}

/// Row that holds iff `w_i >= w_j`.
pub fn output_pair_row(out: &OutputBlock, i: usize, j: usize) -> ThresholdRow {
    pair_row(out, i, j, pair_threshold(out, i, j))
}

/// Row that holds iff `w_i > w_j`.
pub fn output_pair_strict_row(out: &OutputBlock, i: usize, j: usize) -> ThresholdRow {
    pair_row(out, i, j, strict_pair_threshold(out, i, j))
}
