//! Sequential-counter cardinality constraints with a reified output.

use crate::cnf::{Bit, CnfFormula, VarPool};
use crate::lowering::ThresholdRow;

/// Returns a bit equivalent to "at least `c` of `inputs` are true".
///
/// Register `r(i, j)` is "at least `j` of the first `i` literal inputs",
/// defined by `r(i, j) <=> (l_i & r(i-1, j-1)) | r(i-1, j)` in both
/// directions. Constant inputs are folded into `c`, and only registers that
/// can still reach `r(m, c)` are built.
pub fn seq_counter_geq(pool: &mut VarPool, f: &mut CnfFormula, inputs: &[Bit], c: i64) -> Bit {
    let mut c = c;
    let mut lits = Vec::with_capacity(inputs.len());
    for &b in inputs {
        match b {
            Bit::Const(true) => c -= 1,
            Bit::Const(false) => {}
            Bit::Lit(l) => lits.push(l),
        }
    }
    let m = lits.len() as i64;
    if c <= 0 {
        return Bit::Const(true);
    }
    if c > m {
        return Bit::Const(false);
    }
    let c = c as usize;
    let m = m as usize;
    // prev[j] holds r(i-1, j) for j in 0..=c, with r(., 0) = true
    let mut prev: Vec<Bit> = vec![Bit::Const(false); c + 1];
    prev[0] = Bit::Const(true);
    let mut cur = prev.clone();
    for (idx, &l) in lits.iter().enumerate() {
        let i = idx + 1;
        let lo = (c + i).saturating_sub(m).max(1);
        let hi = i.min(c);
        for j in lo..=hi {
            cur[j] = step(pool, f, Bit::Lit(l), prev[j - 1], prev[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[c]
}

/// `r <=> (l & a) | b`, where `b` implies `a` whenever both are registers.
fn step(pool: &mut VarPool, f: &mut CnfFormula, l: Bit, a: Bit, b: Bit) -> Bit {
    match (a, b) {
        (Bit::Const(false), _) => b,
        (_, Bit::Const(true)) => Bit::Const(true),
        (Bit::Const(true), Bit::Const(false)) => l,
        (Bit::Const(true), Bit::Lit(b)) => {
            let l = l.lit().expect("counter inputs are literals");
            let r = f.new_var(pool, "counter").pos();
            f.push(&[!l, r]);
            f.push(&[!b, r]);
            f.push(&[!r, l, b]);
            Bit::Lit(r)
        }
        (Bit::Lit(a), Bit::Const(false)) => {
            let l = l.lit().expect("counter inputs are literals");
            let r = f.new_var(pool, "counter").pos();
            f.push(&[!l, !a, r]);
            f.push(&[!r, l]);
            f.push(&[!r, a]);
            Bit::Lit(r)
        }
        (Bit::Lit(a), Bit::Lit(b)) => {
            let l = l.lit().expect("counter inputs are literals");
            let r = f.new_var(pool, "counter").pos();
            f.push(&[!l, !a, r]);
            f.push(&[!b, r]);
            f.push(&[!r, l, b]);
            f.push(&[!r, a]);
            Bit::Lit(r)
        }
    }
}

/// Reifies a threshold row over the given input bits.
pub fn reify_threshold_row(pool: &mut VarPool, f: &mut CnfFormula, row: &ThresholdRow, input_bits: &[Bit]) -> Bit {
    let literals: Vec<Bit> = row
        .pos
        .iter()
        .map(|&j| input_bits[j])
        .chain(row.neg.iter().map(|&j| !input_bits[j]))
        .collect();
    seq_counter_geq(pool, f, &literals, row.d)
}
