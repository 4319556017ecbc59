//! Exact rational arithmetic over the binary values of `f64` parameters.
//!
//! Model parameters are IEEE doubles; every threshold derived from them is
//! computed on their exact rational values so that integer rounding never
//! disagrees with the reference evaluator.

use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};

pub(crate) fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("model parameters are finite")
}

pub(crate) fn int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// `ceil(r)` clamped into `[-bound, bound]`.
pub(crate) fn ceil_clamped(r: &BigRational, bound: i64) -> i64 {
    clamp(&r.ceil().to_integer(), bound)
}

/// `floor(r)` clamped into `[-bound, bound]`.
pub(crate) fn floor_clamped(r: &BigRational, bound: i64) -> i64 {
    clamp(&r.floor().to_integer(), bound)
}

fn clamp(v: &BigInt, bound: i64) -> i64 {
    if v > &BigInt::from(bound) {
        bound
    } else if v < &BigInt::from(-bound) {
        -bound
    } else {
        v.to_i64().expect("within bound")
    }
}

/// Exact sign test `alpha * (s + bias - mu) + gamma * sigma >= 0`.
///
/// Since `sigma > 0` this is the sign of the batch-normalized value
/// `alpha * (s + bias - mu) / sigma + gamma`. A floating-point evaluation
/// decides every case that is not within rounding distance of zero; the rest
/// fall back to rationals.
pub(crate) fn batch_norm_nonneg(s: i64, bias: f64, alpha: f64, gamma: f64, mu: f64, sigma: f64) -> bool {
    let sf = s as f64;
    let v = alpha * (sf + bias - mu) + gamma * sigma;
    let magnitude = alpha.abs() * (sf.abs() + bias.abs() + mu.abs()) + (gamma * sigma).abs();
    if v.abs() > magnitude * 1e-12 {
        return v > 0.0;
    }
    let exact = rational(alpha) * (int(s) + rational(bias) - rational(mu)) + rational(gamma) * rational(sigma);
    !exact.is_negative()
}

/// Exact comparison of `s_i + b_i` against `s_j + b_j`.
pub(crate) fn compare_scores(s_i: i64, b_i: f64, s_j: i64, b_j: f64) -> std::cmp::Ordering {
    let ds = (s_i - s_j) as f64;
    let d = ds + (b_i - b_j);
    let magnitude = ds.abs() + b_i.abs() + b_j.abs();
    if d.abs() > magnitude * 1e-12 {
        return d.partial_cmp(&0.0).expect("finite");
    }
    let exact = int(s_i - s_j) + rational(b_i) - rational(b_j);
    exact.cmp(&BigRational::zero())
}
