//! Counterexample-guided robustness search over a split at a block boundary.
//!
//! The generator holds the perturbation and blocks `1..=k`; the verifier
//! holds the remaining blocks, the output and the misclassification bit.
//! The two formulas share only the block-`k` output bits. Each verifier
//! failure yields a core over those bits whose negation is added to the
//! generator.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cnf::{Bit, CnfFormula, Lit, VarPool};
use crate::encoder::{encode_blocks, encode_input_perturbation, encode_output, OutputMode, PixelVars};
use crate::model::BnnModel;
use crate::properties::{validate_robustness, CheckConfig, FormulaStats, SolverReport, Verdict};
use crate::solver::{minimize_core, open_session, SolveOutcome, SolverStats};
use crate::Error;

#[derive(Clone, Debug)]
pub struct CegState {
    pub model: BnnModel,
    pub image: Vec<i64>,
    pub label: usize,
    pub epsilon: i64,
    pub pixel_subset: Option<Vec<usize>>,
    pub k: usize,
    pub pool: VarPool,
    pub gen: CnfFormula,
    pub ver: CnfFormula,
    /// Non-constant output bits of block `k`.
    pub shared: Vec<Lit>,
    pub pixels: Vec<PixelVars>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CegOptions {
    pub minimize_cores: bool,
    pub trace: bool,
}

impl Default for CegOptions {
    fn default() -> Self {
        CegOptions {
            minimize_cores: true,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iter: u64,
    pub gen_result: String,
    pub core_size: Option<usize>,
    pub cumulative_blocked: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CegStats {
    pub iterations: u64,
    pub blocking_clauses: u64,
    pub shared_vars: usize,
    pub core_literals: u64,
    pub gen_clauses: usize,
    pub ver_clauses: usize,
}

#[derive(Clone, Debug)]
pub struct CegOutcome {
    pub verdict: Verdict,
    pub stats: CegStats,
    pub blocking: Vec<Vec<Lit>>,
    pub trace: Vec<IterationTrace>,
    pub solver: SolverStats,
}

/// Builds generator and verifier formulas over one variable pool, so the
/// shared bits carry the same ids in both.
pub fn split(
    model: &BnnModel,
    image: &[i64],
    label: usize,
    epsilon: i64,
    pixel_subset: Option<&[usize]>,
    k: usize,
) -> Result<CegState, Error> {
    let blocks = model.blocks.len();
    if k < 1 || k >= blocks {
        return Err(Error::SplitOutOfRange { k, blocks });
    }
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            labels: model.num_labels(),
        });
    }
    if epsilon < 0 {
        return Err(Error::InvalidProperty(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let mut pool = VarPool::new();
    let mut gen = CnfFormula::new();
    let (pixels, bits) = encode_input_perturbation(&mut pool, &mut gen, model, image, epsilon, pixel_subset)?;
    let y = encode_blocks(&mut pool, &mut gen, &model.blocks[..k], &bits)
        .pop()
        .expect("k >= 1 blocks");
    let mut ver = CnfFormula::new();
    ver.set_num_vars(pool.num_vars());
    let layers = encode_blocks(&mut pool, &mut ver, &model.blocks[k..], &y);
    let last = layers.last().expect("at least one verifier block");
    let out = encode_output(&mut pool, &mut ver, &model.output, last, OutputMode::NotTop(label))?;
    ver.assert_bit(out.adversarial.expect("NotTop output"));
    gen.set_num_vars(pool.num_vars());
    let mut seen = HashSet::new();
    let shared: Vec<Lit> = y
        .iter()
        .filter_map(|b| b.lit())
        .map(|l| l.var().pos())
        .filter(|l| seen.insert(*l))
        .collect();
    Ok(CegState {
        model: model.clone(),
        image: image.to_vec(),
        label,
        epsilon,
        pixel_subset: pixel_subset.map(<[usize]>::to_vec),
        k,
        pool,
        gen,
        ver,
        shared,
        pixels,
    })
}

fn assignment_of(shared: &[Lit], model: &[bool]) -> Vec<Lit> {
    shared
        .iter()
        .map(|&l| if Bit::Lit(l).eval(model) { l } else { !l })
        .collect()
}

/// Runs the generator/verifier loop until a verdict or the budget runs out.
pub fn ceg_solve(state: &CegState, cfg: &CheckConfig, opts: &CegOptions) -> Result<CegOutcome, Error> {
    let shared_set: HashSet<_> = state.shared.iter().map(|l| l.var()).collect();
    let mut gen = open_session(&cfg.backend, &state.gen, cfg.seed);
    let mut ver = open_session(&cfg.backend, &state.ver, cfg.seed);
    let mut stats = CegStats {
        shared_vars: state.shared.len(),
        gen_clauses: state.gen.num_clauses(),
        ver_clauses: state.ver.num_clauses(),
        ..Default::default()
    };
    let mut blocking = Vec::new();
    let mut trace = Vec::new();
    let total = |gen: &dyn crate::solver::Session, ver: &dyn crate::solver::Session| {
        let (a, b) = (gen.stats(), ver.stats());
        SolverStats {
            calls: a.calls + b.calls,
            conflicts: a.conflicts + b.conflicts,
            decisions: a.decisions + b.decisions,
            propagations: a.propagations + b.propagations,
        }
    };
    let verdict = loop {
        stats.iterations += 1;
        let iter = stats.iterations;
        let record = |trace: &mut Vec<IterationTrace>, result: &str, core: Option<usize>, blocked: u64| {
            if opts.trace {
                trace.push(IterationTrace {
                    iter,
                    gen_result: result.to_string(),
                    core_size: core,
                    cumulative_blocked: blocked,
                });
            }
        };
        let gen_model = match gen.solve(&[], &cfg.budget)? {
            SolveOutcome::Unsat(_) => {
                record(&mut trace, "unsat", None, stats.blocking_clauses);
                break Verdict::Holds;
            }
            SolveOutcome::Unknown => {
                record(&mut trace, "unknown", None, stats.blocking_clauses);
                break Verdict::unknown(&cfg.budget);
            }
            SolveOutcome::Sat(m) => m,
        };
        let y_hat = assignment_of(&state.shared, &gen_model);
        match ver.solve(&y_hat, &cfg.budget)? {
            SolveOutcome::Sat(_) => {
                record(&mut trace, "sat", None, stats.blocking_clauses);
                let tau: Vec<i64> = state
                    .pixels
                    .iter()
                    .zip(&state.image)
                    .map(|(p, &x)| p.decode(&gen_model) - x)
                    .collect();
                let witness = validate_robustness(
                    &state.model,
                    &state.image,
                    state.label,
                    state.epsilon,
                    state.pixel_subset.as_deref(),
                    &tau,
                )?;
                break Verdict::Counterexample { witness };
            }
            SolveOutcome::Unknown => {
                record(&mut trace, "sat", None, stats.blocking_clauses);
                break Verdict::unknown(&cfg.budget);
            }
            SolveOutcome::Unsat(core) => {
                let core = if opts.minimize_cores && !core.is_empty() {
                    minimize_core(ver.as_mut(), &core, &cfg.budget)?
                } else {
                    core
                };
                if core.is_empty() {
                    // the verifier is unsatisfiable on its own
                    record(&mut trace, "sat", Some(0), stats.blocking_clauses);
                    break Verdict::Holds;
                }
                let clause: Vec<Lit> = core.iter().map(|&l| !l).collect();
                if let Some(l) = clause.iter().find(|l| !shared_set.contains(&l.var())) {
                    return Err(Error::Internal(format!(
                        "blocking clause mentions non-shared variable {}",
                        l.to_dimacs()
                    )));
                }
                if clause.iter().any(|l| y_hat.contains(l)) {
                    return Err(Error::Internal("blocking clause satisfied by the current candidate".into()));
                }
                stats.core_literals += clause.len() as u64;
                stats.blocking_clauses += 1;
                record(&mut trace, "sat", Some(clause.len()), stats.blocking_clauses);
                gen.add_clause(&clause);
                blocking.push(clause);
            }
        }
    };
    let solver = total(gen.as_ref(), ver.as_ref());
    Ok(CegOutcome {
        verdict,
        stats,
        blocking,
        trace,
        solver,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CegReport {
    pub verdict: Verdict,
    pub ceg: CegStats,
    pub gen: FormulaStats,
    pub solver: SolverReport,
    pub trace: Vec<IterationTrace>,
}

/// Robustness through the generator/verifier loop, with the same
/// degenerate-image handling as the monolithic check.
pub fn check_robustness_ceg(
    model: &BnnModel,
    image: &[i64],
    label: usize,
    epsilon: i64,
    pixel_subset: Option<&[usize]>,
    k: usize,
    cfg: &CheckConfig,
    opts: &CegOptions,
) -> Result<CegReport, Error> {
    if label >= model.num_labels() {
        return Err(Error::LabelOutOfRange {
            label,
            labels: model.num_labels(),
        });
    }
    if model.binarizer.is_none() {
        return Err(Error::MissingBinarizer);
    }
    if model.forward(image)?.label != label {
        let tau = vec![0; image.len()];
        let witness = validate_robustness(model, image, label, epsilon, None, &tau)?;
        return Ok(CegReport {
            verdict: Verdict::Counterexample { witness },
            ceg: CegStats::default(),
            gen: FormulaStats::default(),
            solver: SolverReport::new(&cfg.backend, SolverStats::default()),
            trace: Vec::new(),
        });
    }
    let state = split(model, image, label, epsilon, pixel_subset, k)?;
    let out = ceg_solve(&state, cfg, opts)?;
    Ok(CegReport {
        verdict: out.verdict,
        ceg: out.stats,
        gen: FormulaStats::of(&state.pool, &state.gen),
        solver: SolverReport::new(&cfg.backend, out.solver),
        trace: out.trace,
    })
}
