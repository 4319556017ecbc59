#![allow(dead_code)]

use bnnv_core::cnf::{CnfFormula, Lit};
use bnnv_core::model::BnnModel;
use bnnv_core::random::{random_image, random_model, ModelShape};
use bnnv_core::solver::{open_session, Backend, Budget, SolveOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `f` under assumptions with the embedded solver.
pub fn solve(f: &CnfFormula, assumptions: &[Lit]) -> SolveOutcome {
    open_session(&Backend::Embedded, f, 0)
        .solve(assumptions, &Budget::unlimited())
        .unwrap()
}

/// A small random model with an input binarizer.
pub fn small_model<R: Rng>(rng: &mut R, max_inputs: usize, max_width: usize, max_blocks: usize, max_labels: usize) -> BnnModel {
    let n = rng.gen_range(1..=max_inputs);
    let blocks = rng.gen_range(1..=max_blocks);
    let widths: Vec<usize> = (0..blocks).map(|_| rng.gen_range(1..=max_width)).collect();
    let labels = rng.gen_range(2..=max_labels);
    let lb = rng.gen_range(-3..=0);
    let ub = lb + rng.gen_range(1..=4);
    random_model(rng, &ModelShape::new(n, &widths, labels, lb, ub))
}

/// Image together with the label the model assigns to it.
pub fn labelled_image<R: Rng>(rng: &mut R, model: &BnnModel) -> (Vec<i64>, usize) {
    let x = random_image(rng, model);
    let l = model.classify(&x).unwrap();
    (x, l)
}

/// Every point of `values^n` in lexicographic order.
pub fn all_inputs(values: &[i64], n: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}
