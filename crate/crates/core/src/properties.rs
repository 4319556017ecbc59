//! Robustness, universal robustness and equivalence as CNF formulas, with
//! witness decoding checked against the reference evaluator.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cardinality::seq_counter_geq;
use crate::cnf::{Bit, CnfFormula, Lit, OrderInt, VarPool};
use crate::encoder::{
    binarize_pixels, encode_input_perturbation, encode_network, encode_ranges, free_input_bits,
    perturbation_domains, OutputMode, PixelVars, VarMap,
};
use crate::model::BnnModel;
use crate::solver::{open_session, Backend, Budget, SolveOutcome, SolverStats};
use crate::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum PropertyInstance {
    Robustness {
        image: Vec<i64>,
        label: usize,
        epsilon: i64,
        pixel_subset: Option<Vec<usize>>,
    },
    Universal {
        images: Vec<Vec<i64>>,
        labels: Vec<usize>,
        epsilon: i64,
        rho: f64,
    },
    Equivalence {
        model_b: Box<BnnModel>,
    },
}

impl PropertyInstance {
    pub fn kind(&self) -> &'static str {
        match self {
            PropertyInstance::Robustness { .. } => "robustness",
            PropertyInstance::Universal { .. } => "universal",
            PropertyInstance::Equivalence { .. } => "equivalence",
        }
    }
}

/// Variables needed to read a witness back from a model.
#[derive(Clone, Debug)]
pub enum PropertyVars {
    Robustness {
        image: Vec<i64>,
        label: usize,
        epsilon: i64,
        pixel_subset: Option<Vec<usize>>,
        net: VarMap,
    },
    Universal {
        images: Vec<Vec<i64>>,
        labels: Vec<usize>,
        epsilon: i64,
        tau: Vec<OrderInt>,
        copies: Vec<VarMap>,
        q: Vec<Bit>,
        required: usize,
    },
    Equivalence {
        model_b: Box<BnnModel>,
        inputs: Vec<Bit>,
        pixels: Vec<PixelVars>,
        a: VarMap,
        b: VarMap,
        diff: Vec<Bit>,
    },
}

#[derive(Clone, Debug)]
pub struct PropertyFormula {
    pub model: BnnModel,
    pub pool: VarPool,
    pub formula: CnfFormula,
    pub vars: PropertyVars,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "snake_case")]
pub enum Witness {
    Robustness {
        tau: Vec<i64>,
        input: Vec<i64>,
        label: usize,
        degenerate: bool,
    },
    Universal {
        tau: Vec<i64>,
        labels: Vec<usize>,
        misclassified: usize,
        required: usize,
    },
    Equivalence {
        input: Vec<i64>,
        label_a: usize,
        label_b: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownReason {
    Timeout,
    ConflictLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Counterexample { witness: Witness },
    Unknown { reason: UnknownReason },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn is_counterexample(&self) -> bool {
        matches!(self, Verdict::Counterexample { .. })
    }

    pub(crate) fn unknown(budget: &Budget) -> Self {
        let reason = if budget.expired() {
            UnknownReason::Timeout
        } else {
            UnknownReason::ConflictLimit
        };
        Verdict::Unknown { reason }
    }
}

/// Size of an encoded formula.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaStats {
    pub vars: usize,
    pub clauses: usize,
    pub literals: usize,
    pub regions: BTreeMap<String, usize>,
}

impl FormulaStats {
    pub fn of(pool: &VarPool, f: &CnfFormula) -> Self {
        FormulaStats {
            vars: f.num_vars(),
            clauses: f.num_clauses(),
            literals: f.num_literals(),
            regions: pool.region_sizes(),
        }
    }
}

/// Smallest count reaching a `rho` fraction of `n`, treating products
/// within 1e-9 of an integer as that integer.
pub fn required_count(rho: f64, n: usize) -> usize {
    let r = rho * n as f64;
    let nearest = r.round();
    let v = if (r - nearest).abs() < 1e-9 { nearest } else { r.ceil() };
    v.max(0.0) as usize
}

fn check_label(model: &BnnModel, label: usize) -> Result<(), Error> {
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            labels: model.num_labels(),
        });
    }
    Ok(())
}

fn check_epsilon(epsilon: i64) -> Result<(), Error> {
    if epsilon < 0 {
        return Err(Error::InvalidProperty(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    Ok(())
}

fn check_subset(model: &BnnModel, subset: Option<&[usize]>) -> Result<(), Error> {
    if let Some(&i) = subset.into_iter().flatten().find(|&&i| i >= model.input_dim) {
        return Err(Error::InvalidProperty(format!("pixel {i} outside the {} inputs", model.input_dim)));
    }
    Ok(())
}

/// Pixel perturbation + network + "label is not the top score".
pub fn build_robustness(
    model: &BnnModel,
    image: &[i64],
    label: usize,
    epsilon: i64,
    pixel_subset: Option<&[usize]>,
) -> Result<PropertyFormula, Error> {
    check_label(model, label)?;
    check_epsilon(epsilon)?;
    check_subset(model, pixel_subset)?;
    let mut pool = VarPool::new();
    let mut f = CnfFormula::new();
    let (pixels, bits) = encode_input_perturbation(&mut pool, &mut f, model, image, epsilon, pixel_subset)?;
    let mut net = encode_network(&mut pool, &mut f, model, &bits, OutputMode::NotTop(label))?;
    f.assert_bit(net.output.adversarial.expect("NotTop output"));
    net.pixels = pixels;
    Ok(PropertyFormula {
        model: model.clone(),
        pool,
        formula: f,
        vars: PropertyVars::Robustness {
            image: image.to_vec(),
            label,
            epsilon,
            pixel_subset: pixel_subset.map(<[usize]>::to_vec),
            net,
        },
    })
}

/// One perturbation shared by all images; at least `ceil(rho |S|)` of them
/// must be misclassified.
pub fn build_universal(
    model: &BnnModel,
    images: &[Vec<i64>],
    labels: &[usize],
    epsilon: i64,
    rho: f64,
) -> Result<PropertyFormula, Error> {
    if images.is_empty() || images.len() != labels.len() {
        return Err(Error::InvalidProperty("universal robustness needs one label per image and at least one image".into()));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidProperty(format!("rho must be positive, got {rho}")));
    }
    check_epsilon(epsilon)?;
    if model.binarizer.is_none() {
        return Err(Error::MissingBinarizer);
    }
    for (x, &l) in images.iter().zip(labels) {
        model.check_input(x)?;
        check_label(model, l)?;
    }
    let mut pool = VarPool::new();
    let mut f = CnfFormula::new();
    let refs: Vec<&[i64]> = images.iter().map(Vec::as_slice).collect();
    let domains = perturbation_domains(model, &refs, epsilon, None);
    let tau = encode_ranges(&mut pool, &mut f, &domains, "tau")?;
    let mut copies = Vec::with_capacity(images.len());
    let mut q = Vec::with_capacity(images.len());
    for (x, &l) in images.iter().zip(labels) {
        let pixels: Vec<PixelVars> = tau
            .iter()
            .zip(x)
            .map(|(t, &offset)| PixelVars {
                value: t.clone(),
                offset,
            })
            .collect();
        let bits = binarize_pixels(model, &pixels)?;
        let mut net = encode_network(&mut pool, &mut f, model, &bits, OutputMode::NotTop(l))?;
        q.push(net.output.adversarial.expect("NotTop output"));
        net.pixels = pixels;
        copies.push(net);
    }
    let required = required_count(rho, images.len());
    let enough = seq_counter_geq(&mut pool, &mut f, &q, required as i64);
    f.assert_bit(enough);
    Ok(PropertyFormula {
        model: model.clone(),
        pool,
        formula: f,
        vars: PropertyVars::Universal {
            images: images.to_vec(),
            labels: labels.to_vec(),
            epsilon,
            tau,
            copies,
            q,
            required,
        },
    })
}

/// Checks that two models can be compared on the same inputs.
pub fn check_compatible(a: &BnnModel, b: &BnnModel) -> Result<(), Error> {
    let same = a.input_dim == b.input_dim
        && a.input_lb == b.input_lb
        && a.input_ub == b.input_ub
        && a.binarizer.is_some() == b.binarizer.is_some()
        && a.num_labels() == b.num_labels();
    if same {
        Ok(())
    } else {
        Err(Error::Incompatible(format!(
            "models differ in input dimension, domain, binarizer presence or label count \
             ({} in [{}, {}], {} labels vs {} in [{}, {}], {} labels)",
            a.input_dim,
            a.input_lb,
            a.input_ub,
            a.num_labels(),
            b.input_dim,
            b.input_lb,
            b.input_ub,
            b.num_labels()
        )))
    }
}

/// Shared inputs, both networks with one-hot outputs, and "some label differs".
pub fn build_equivalence(model_a: &BnnModel, model_b: &BnnModel) -> Result<PropertyFormula, Error> {
    check_compatible(model_a, model_b)?;
    let mut pool = VarPool::new();
    let mut f = CnfFormula::new();
    let (pixels, bits_a, bits_b) = if model_a.binarizer.is_some() {
        let domains = vec![(model_a.input_lb, model_a.input_ub); model_a.input_dim];
        let pixels: Vec<PixelVars> = encode_ranges(&mut pool, &mut f, &domains, "input")?
            .into_iter()
            .map(|value| PixelVars { value, offset: 0 })
            .collect();
        let a = binarize_pixels(model_a, &pixels)?;
        let b = binarize_pixels(model_b, &pixels)?;
        (pixels, a, b)
    } else {
        let bits = free_input_bits(&mut pool, &mut f, model_a.input_dim);
        (Vec::new(), bits.clone(), bits)
    };
    let inputs = if pixels.is_empty() { bits_a.clone() } else { Vec::new() };
    let a = encode_network(&mut pool, &mut f, model_a, &bits_a, OutputMode::Full)?;
    let b = encode_network(&mut pool, &mut f, model_b, &bits_b, OutputMode::Full)?;
    let oa = a.output.onehot.as_ref().expect("full output");
    let ob = b.output.onehot.as_ref().expect("full output");
    let diff: Vec<Bit> = oa
        .iter()
        .zip(ob)
        .map(|(&x, &y)| f.xor(&mut pool, x, y, "diff"))
        .collect();
    f.add_bits(&diff);
    Ok(PropertyFormula {
        model: model_a.clone(),
        pool,
        formula: f,
        vars: PropertyVars::Equivalence {
            model_b: Box::new(model_b.clone()),
            inputs,
            pixels,
            a,
            b,
            diff,
        },
    })
}

pub fn build_property(model: &BnnModel, prop: &PropertyInstance) -> Result<PropertyFormula, Error> {
    match prop {
        PropertyInstance::Robustness {
            image,
            label,
            epsilon,
            pixel_subset,
        } => build_robustness(model, image, *label, *epsilon, pixel_subset.as_deref()),
        PropertyInstance::Universal {
            images,
            labels,
            epsilon,
            rho,
        } => build_universal(model, images, labels, *epsilon, *rho),
        PropertyInstance::Equivalence { model_b } => build_equivalence(model, model_b),
    }
}

fn internal(msg: String) -> Error {
    Error::Internal(msg)
}

/// Reads the witness from a satisfying assignment and confirms it with the
/// reference evaluator. A mismatch is an encoding bug and is reported as
/// [`Error::Internal`].
pub fn decode_witness(prop: &PropertyFormula, model: &[bool]) -> Result<Witness, Error> {
    if !prop.formula.is_satisfied_by(model) {
        return Err(internal("assignment does not satisfy the property formula".into()));
    }
    let net = &prop.model;
    match &prop.vars {
        PropertyVars::Robustness {
            image,
            label,
            epsilon,
            pixel_subset,
            net: vars,
        } => {
            let input: Vec<i64> = vars.pixels.iter().map(|p| p.decode(model)).collect();
            let tau: Vec<i64> = input.iter().zip(image).map(|(a, b)| a - b).collect();
            validate_robustness(net, image, *label, *epsilon, pixel_subset.as_deref(), &tau)
        }
        PropertyVars::Universal {
            images,
            labels,
            epsilon,
            tau,
            required,
            ..
        } => {
            let t: Vec<i64> = tau.iter().map(|v| v.decode(model)).collect();
            validate_universal(net, images, labels, *epsilon, *required, &t)
        }
        PropertyVars::Equivalence {
            model_b,
            inputs,
            pixels,
            a,
            b,
            ..
        } => {
            let input: Vec<i64> = if pixels.is_empty() {
                inputs.iter().map(|b| if b.eval(model) { 1 } else { -1 }).collect()
            } else {
                pixels.iter().map(|p| p.decode(model)).collect()
            };
            let w = validate_equivalence(net, model_b, &input)?;
            if let Witness::Equivalence { label_a, label_b, .. } = &w {
                if a.decode_label(model) != Some(*label_a) || b.decode_label(model) != Some(*label_b) {
                    return Err(internal(format!(
                        "one-hot outputs {:?}/{:?} disagree with evaluator labels {label_a}/{label_b}",
                        a.decode_label(model),
                        b.decode_label(model)
                    )));
                }
            }
            Ok(w)
        }
    }
}

/// Confirms that `tau` is an admissible perturbation changing the label.
pub fn validate_robustness(
    model: &BnnModel,
    image: &[i64],
    label: usize,
    epsilon: i64,
    subset: Option<&[usize]>,
    tau: &[i64],
) -> Result<Witness, Error> {
    if tau.len() != image.len() {
        return Err(internal("perturbation has the wrong length".into()));
    }
    for (i, &t) in tau.iter().enumerate() {
        let free = subset.is_none_or(|s| s.contains(&i));
        if t.abs() > epsilon || (!free && t != 0) {
            return Err(internal(format!("perturbation {t} at pixel {i} exceeds the budget")));
        }
    }
    let input: Vec<i64> = image.iter().zip(tau).map(|(x, t)| x + t).collect();
    let act = model
        .forward(&input)
        .map_err(|e| internal(format!("perturbed input rejected by the evaluator: {e}")))?;
    if act.label == label {
        return Err(internal(format!("perturbed input still classified as {label}")));
    }
    Ok(Witness::Robustness {
        degenerate: tau.iter().all(|&t| t == 0),
        tau: tau.to_vec(),
        input,
        label: act.label,
    })
}

pub fn validate_universal(
    model: &BnnModel,
    images: &[Vec<i64>],
    labels: &[usize],
    epsilon: i64,
    required: usize,
    tau: &[i64],
) -> Result<Witness, Error> {
    if tau.iter().any(|t| t.abs() > epsilon) {
        return Err(internal("shared perturbation exceeds the budget".into()));
    }
    let mut predicted = Vec::with_capacity(images.len());
    for x in images {
        let input: Vec<i64> = x.iter().zip(tau).map(|(a, t)| a + t).collect();
        let act = model
            .forward(&input)
            .map_err(|e| internal(format!("perturbed image rejected by the evaluator: {e}")))?;
        predicted.push(act.label);
    }
    let misclassified = predicted.iter().zip(labels).filter(|(p, l)| p != l).count();
    if misclassified < required {
        return Err(internal(format!("only {misclassified} of {required} required images misclassified")));
    }
    Ok(Witness::Universal {
        tau: tau.to_vec(),
        labels: predicted,
        misclassified,
        required,
    })
}

pub fn validate_equivalence(a: &BnnModel, b: &BnnModel, input: &[i64]) -> Result<Witness, Error> {
    let la = a.classify(input).map_err(|e| internal(e.to_string()))?;
    let lb = b.classify(input).map_err(|e| internal(e.to_string()))?;
    if la == lb {
        return Err(internal(format!("both models classify the witness as {la}")));
    }
    Ok(Witness::Equivalence {
        input: input.to_vec(),
        label_a: la,
        label_b: lb,
    })
}

/// How to run the solver on a property.
#[derive(Clone, Debug, Default)]
pub struct CheckConfig {
    pub backend: Backend,
    pub budget: Budget,
    pub seed: u64,
}

impl CheckConfig {
    pub fn with_timeout(timeout: Duration) -> Self {
        CheckConfig {
            budget: Budget::with_timeout(timeout),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub formula: FormulaStats,
    pub solver: SolverReport,
    pub encode_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverReport {
    pub backend: String,
    pub calls: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

impl SolverReport {
    pub fn new(backend: &Backend, s: SolverStats) -> Self {
        SolverReport {
            backend: backend.name(),
            calls: s.calls,
            conflicts: s.conflicts,
            decisions: s.decisions,
            propagations: s.propagations,
        }
    }
}

/// Solves a built property formula.
pub fn solve_property(prop: &PropertyFormula, cfg: &CheckConfig) -> Result<(Verdict, SolverStats), Error> {
    let mut session = open_session(&cfg.backend, &prop.formula, cfg.seed);
    let outcome = session.solve(&[], &cfg.budget)?;
    let verdict = match outcome {
        SolveOutcome::Sat(model) => Verdict::Counterexample {
            witness: decode_witness(prop, &model)?,
        },
        SolveOutcome::Unsat(_) => Verdict::Holds,
        SolveOutcome::Unknown => Verdict::unknown(&cfg.budget),
    };
    Ok((verdict, session.stats()))
}

/// Builds and solves; an image the model already misclassifies is reported
/// as a degenerate counterexample without calling the solver.
pub fn check_property(model: &BnnModel, prop: &PropertyInstance, cfg: &CheckConfig) -> Result<CheckReport, Error> {
    if let PropertyInstance::Robustness {
        image,
        label,
        epsilon,
        pixel_subset,
    } = prop
    {
        check_label(model, *label)?;
        check_subset(model, pixel_subset.as_deref())?;
        if model.binarizer.is_none() {
            return Err(Error::MissingBinarizer);
        }
        let act = model.forward(image)?;
        if act.label != *label {
            let tau = vec![0; image.len()];
            let witness = validate_robustness(model, image, *label, *epsilon, None, &tau)?;
            return Ok(CheckReport {
                verdict: Verdict::Counterexample { witness },
                formula: FormulaStats::default(),
                solver: SolverReport::new(&cfg.backend, SolverStats::default()),
                encode_seconds: 0.0,
                solve_seconds: 0.0,
            });
        }
    }
    let start = Instant::now();
    let built = build_property(model, prop)?;
    let encode_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let (verdict, stats) = solve_property(&built, cfg)?;
    Ok(CheckReport {
        verdict,
        formula: FormulaStats::of(&built.pool, &built.formula),
        solver: SolverReport::new(&cfg.backend, stats),
        encode_seconds,
        solve_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Assumption literals fixing the pixels of a property formula to `values`.
pub fn pixel_assumptions(pixels: &[PixelVars], values: &[i64]) -> Vec<Lit> {
    pixels
        .iter()
        .zip(values)
        .flat_map(|(p, &v)| p.value.assign(v - p.offset))
        .collect()
}
