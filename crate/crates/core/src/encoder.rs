//! CNF encoding of whole networks: perturbed inputs, internal blocks and the
//! output comparison.

use std::collections::BTreeMap;

use crate::cardinality::reify_threshold_row;
use crate::cnf::{encode_order_int, Bit, CnfFormula, OrderInt, VarPool};
use crate::lowering::{self, sign_threshold, NeuronThreshold};
use crate::model::{BatchNorm, BnnModel, InternalBlock, OutputBlock};
use crate::Error;

/// An integer pixel `offset + value` whose variable part is order encoded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelVars {
    pub value: OrderInt,
    pub offset: i64,
}

impl PixelVars {
    /// The bit `offset + value >= v`.
    pub fn geq(&self, v: i64) -> Bit {
        self.value.geq(v.saturating_sub(self.offset))
    }

    pub fn decode(&self, model: &[bool]) -> i64 {
        self.offset + self.value.decode(model)
    }
}

/// Which output relation to encode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputMode {
    /// One-hot predicted label, first maximum wins.
    Full,
    /// A single bit that is true iff the predicted label differs from this one.
    NotTop(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutputVars {
    /// `(i, j) -> w_i >= w_j`.
    pub dvars: BTreeMap<(usize, usize), Bit>,
    /// `(i, j) -> w_i > w_j`.
    pub strict: BTreeMap<(usize, usize), Bit>,
    pub onehot: Option<Vec<Bit>>,
    pub adversarial: Option<Bit>,
}

/// Variables of one encoded network copy.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarMap {
    /// Integer input pixels, when the input is not fixed.
    pub pixels: Vec<PixelVars>,
    /// Bits fed to the first internal block.
    pub input_bits: Vec<Bit>,
    /// Output bits of each internal block.
    pub layers: Vec<Vec<Bit>>,
    pub output: OutputVars,
}

impl VarMap {
    /// The label selected by a model of the one-hot output.
    pub fn decode_label(&self, model: &[bool]) -> Option<usize> {
        self.output.onehot.as_ref()?.iter().position(|b| b.eval(model))
    }
}

/// Per-pixel `[lo, hi]` ranges of perturbations keeping every image of
/// `images` inside the input domain; pixels outside `subset` get `[0, 0]`.
pub fn perturbation_domains(
    model: &BnnModel,
    images: &[&[i64]],
    epsilon: i64,
    subset: Option<&[usize]>,
) -> Vec<(i64, i64)> {
    let mut domains = vec![(0, 0); model.input_dim];
    let free: Vec<usize> = match subset {
        Some(s) => s.to_vec(),
        None => (0..model.input_dim).collect(),
    };
    for i in free {
        let lo = images.iter().map(|x| model.input_lb - x[i]).fold(-epsilon, i64::max);
        let hi = images.iter().map(|x| model.input_ub - x[i]).fold(epsilon, i64::min);
        domains[i] = if lo <= hi { (lo, hi) } else { (0, 0) };
    }
    domains
}

/// Order-encodes one integer per `(lo, hi)` range.
pub fn encode_ranges(
    pool: &mut VarPool,
    f: &mut CnfFormula,
    ranges: &[(i64, i64)],
    region: &str,
) -> Result<Vec<OrderInt>, Error> {
    ranges
        .iter()
        .map(|&(lo, hi)| Ok(encode_order_int(pool, f, lo, hi, region)?))
        .collect()
}

/// Threshold of the input binarizer on pixel `i` over the pixel value.
pub fn pixel_threshold(bn: &BatchNorm, i: usize, lb: i64, ub: i64) -> NeuronThreshold {
    let bound = lb.abs().max(ub.abs());
    sign_threshold(bn.alpha[i], bn.gamma[i], bn.mu[i], bn.sigma[i], 0.0, bound)
}

/// Binarizer output bit of each pixel, as a ladder literal or a constant.
pub fn binarize_pixels(model: &BnnModel, pixels: &[PixelVars]) -> Result<Vec<Bit>, Error> {
    let bn = model.binarizer.as_ref().ok_or(Error::MissingBinarizer)?;
    Ok(pixels
        .iter()
        .enumerate()
        .map(|(i, p)| match pixel_threshold(bn, i, model.input_lb, model.input_ub) {
            NeuronThreshold::Geq(t) => p.geq(t),
            NeuronThreshold::Leq(t) => !p.geq(t + 1),
            NeuronThreshold::Const(b) => Bit::Const(b),
        })
        .collect())
}

/// Encodes `x + tau` with `|tau_i| <= epsilon`, clipped to the input domain,
/// and returns the pixel variables and the binarized input bits.
pub fn encode_input_perturbation(
    pool: &mut VarPool,
    f: &mut CnfFormula,
    model: &BnnModel,
    image: &[i64],
    epsilon: i64,
    pixel_subset: Option<&[usize]>,
) -> Result<(Vec<PixelVars>, Vec<Bit>), Error> {
    if model.binarizer.is_none() {
        return Err(Error::MissingBinarizer);
    }
    model.check_input(image)?;
    let domains = perturbation_domains(model, &[image], epsilon, pixel_subset);
    let tau = encode_ranges(pool, f, &domains, "tau")?;
    let pixels: Vec<PixelVars> = tau
        .into_iter()
        .zip(image)
        .map(|(value, &offset)| PixelVars { value, offset })
        .collect();
    let bits = binarize_pixels(model, &pixels)?;
    Ok((pixels, bits))
}

pub fn encode_block(pool: &mut VarPool, f: &mut CnfFormula, block: &InternalBlock, in_bits: &[Bit]) -> Vec<Bit> {
    assert_eq!(in_bits.len(), block.in_dim(), "block input width");
    (0..block.out_dim())
        .map(|i| match lowering::neuron_row(block, i) {
            Some(row) => reify_threshold_row(pool, f, &row, in_bits),
            None => match lowering::neuron_threshold(block, i) {
                NeuronThreshold::Const(b) => Bit::Const(b),
                _ => unreachable!("only constant neurons lack a row"),
            },
        })
        .collect()
}

/// Encodes consecutive blocks; returns every block's output bits.
pub fn encode_blocks(
    pool: &mut VarPool,
    f: &mut CnfFormula,
    blocks: &[InternalBlock],
    in_bits: &[Bit],
) -> Vec<Vec<Bit>> {
    let mut layers: Vec<Vec<Bit>> = Vec::with_capacity(blocks.len());
    for block in blocks {
        let input = layers.last().map_or(in_bits, Vec::as_slice);
        let out = encode_block(pool, f, block, input);
        layers.push(out);
    }
    layers
}

pub fn encode_output(
    pool: &mut VarPool,
    f: &mut CnfFormula,
    out: &OutputBlock,
    in_bits: &[Bit],
    mode: OutputMode,
) -> Result<OutputVars, Error> {
    assert_eq!(in_bits.len(), out.in_dim(), "output input width");
    let s = out.num_labels();
    let mut vars = OutputVars::default();
    let geq = |pool: &mut VarPool, f: &mut CnfFormula, i: usize, j: usize| {
        reify_threshold_row(pool, f, &lowering::output_pair_row(out, i, j), in_bits)
    };
    match mode {
        OutputMode::Full => {
            let mut onehot = Vec::with_capacity(s);
            for i in 0..s {
                let mut conj = Vec::with_capacity(2 * s);
                for j in (0..s).filter(|&j| j != i) {
                    let d = geq(pool, f, i, j);
                    vars.dvars.insert((i, j), d);
                    conj.push(d);
                    if j < i {
                        let row = lowering::output_pair_strict_row(out, i, j);
                        let st = reify_threshold_row(pool, f, &row, in_bits);
                        vars.strict.insert((i, j), st);
                        conj.push(st);
                    }
                }
                onehot.push(f.and(pool, &conj, "onehot"));
            }
            vars.onehot = Some(onehot);
        }
        OutputMode::NotTop(label) => {
            if label >= s {
                return Err(Error::LabelOutOfRange { label, labels: s });
            }
            let mut disj = Vec::with_capacity(s);
            for j in (0..s).filter(|&j| j != label) {
                let d = if j < label {
                    let d = geq(pool, f, j, label);
                    vars.dvars.insert((j, label), d);
                    d
                } else {
                    let row = lowering::output_pair_strict_row(out, j, label);
                    let d = reify_threshold_row(pool, f, &row, in_bits);
                    vars.strict.insert((j, label), d);
                    d
                };
                disj.push(d);
            }
            vars.adversarial = Some(f.or(pool, &disj, "adversarial"));
        }
    }
    Ok(vars)
}

/// Encodes all blocks and the output over the given input bits.
pub fn encode_network(
    pool: &mut VarPool,
    f: &mut CnfFormula,
    model: &BnnModel,
    input_bits: &[Bit],
    mode: OutputMode,
) -> Result<VarMap, Error> {
    if input_bits.len() != model.input_dim {
        return Err(Error::Dimension(format!(
            "{} input bits for a model with {} inputs",
            input_bits.len(),
            model.input_dim
        )));
    }
    let layers = encode_blocks(pool, f, &model.blocks, input_bits);
    let last = layers.last().map_or(input_bits, Vec::as_slice);
    let output = encode_output(pool, f, &model.output, last, mode)?;
    Ok(VarMap {
        pixels: Vec::new(),
        input_bits: input_bits.to_vec(),
        layers,
        output,
    })
}

/// Fresh free input bits, one per input coordinate.
pub fn free_input_bits(pool: &mut VarPool, f: &mut CnfFormula, n: usize) -> Vec<Bit> {
    (0..n).map(|_| Bit::Lit(f.new_var(pool, "input").pos())).collect()
}

/// Activations read back from the network formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfActivations {
    pub input_bits: Vec<bool>,
    pub layers: Vec<Vec<bool>>,
    pub label: usize,
    /// No assignment with the same input selects another label.
    pub unique: bool,
}

/// The network encoded once over free inputs, evaluated by fixing the
/// inputs with assumptions.
pub struct CnfEvaluator {
    pool: VarPool,
    formula: CnfFormula,
    pixels: Vec<PixelVars>,
    vars: VarMap,
    session: crate::solver::EmbeddedSession,
}

impl CnfEvaluator {
    pub fn new(model: &BnnModel) -> Result<Self, Error> {
        let mut pool = VarPool::new();
        let mut f = CnfFormula::new();
        let (pixels, bits) = if model.binarizer.is_some() {
            let ranges = vec![(model.input_lb, model.input_ub); model.input_dim];
            let pixels: Vec<PixelVars> = encode_ranges(&mut pool, &mut f, &ranges, "input")?
                .into_iter()
                .map(|value| PixelVars { value, offset: 0 })
                .collect();
            let bits = binarize_pixels(model, &pixels)?;
            (pixels, bits)
        } else {
            (Vec::new(), free_input_bits(&mut pool, &mut f, model.input_dim))
        };
        let mut vars = encode_network(&mut pool, &mut f, model, &bits, OutputMode::Full)?;
        vars.pixels = pixels.clone();
        let session = crate::solver::EmbeddedSession::new(&f, 0);
        Ok(CnfEvaluator {
            pool,
            formula: f,
            pixels,
            vars,
            session,
        })
    }

    pub fn formula(&self) -> &CnfFormula {
        &self.formula
    }

    pub fn pool(&self) -> &VarPool {
        &self.pool
    }

    pub fn vars(&self) -> &VarMap {
        &self.vars
    }

    fn input_assumptions(&self, x: &[i64]) -> Vec<crate::cnf::Lit> {
        if self.pixels.is_empty() {
            self.vars
                .input_bits
                .iter()
                .zip(x)
                .filter_map(|(b, &v)| b.lit().map(|l| if v > 0 { l } else { !l }))
                .collect()
        } else {
            crate::properties::pixel_assumptions(&self.pixels, x)
        }
    }

    /// Solves with the input fixed to `x` and decodes every layer.
    pub fn forward(&mut self, x: &[i64]) -> Result<CnfActivations, Error> {
        use crate::solver::{Budget, Session, SolveOutcome};
        let assumptions = self.input_assumptions(x);
        let model = match self.session.solve(&assumptions, &Budget::unlimited())? {
            SolveOutcome::Sat(m) => m,
            other => return Err(Error::Internal(format!("network formula with fixed input gave {other:?}"))),
        };
        let eval = |bits: &[Bit]| bits.iter().map(|b| b.eval(&model)).collect::<Vec<bool>>();
        let onehot = self.vars.output.onehot.as_ref().expect("full output");
        let chosen: Vec<usize> = (0..onehot.len()).filter(|&i| onehot[i].eval(&model)).collect();
        let [label] = chosen[..] else {
            return Err(Error::Internal(format!("one-hot output selects {chosen:?}")));
        };
        let unique = match onehot[label] {
            Bit::Const(true) => true,
            Bit::Const(false) => false,
            Bit::Lit(l) => {
                let mut with_other = assumptions.clone();
                with_other.push(!l);
                matches!(self.session.solve(&with_other, &Budget::unlimited())?, SolveOutcome::Unsat(_))
            }
        };
        Ok(CnfActivations {
            input_bits: eval(&self.vars.input_bits),
            layers: self.vars.layers.iter().map(|l| eval(l)).collect(),
            label,
            unique,
        })
    }
}
