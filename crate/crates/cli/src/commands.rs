use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bnnv_core::ceg::{check_robustness_ceg, CegOptions};
use bnnv_core::cnf::{emit_dimacs, parse_dimacs};
use bnnv_core::lowering::export_ilp;
use bnnv_core::oracle::{brute_force_equivalence, brute_force_robustness, brute_force_universal};
use bnnv_core::properties::{build_property, check_property, CheckConfig};
use bnnv_core::solver::{solve, Backend, Budget, SolveOutcome, SolveRequest};
use bnnv_core::{BnnModel, PropertyInstance, Verdict};

use crate::args::{
    Engine, EquivArgs, ExportArgs, Format, OracleArgs, OracleCommand, PropertyKind, Saliency, SatArgs, SolverArgs,
    UniversalArgs, VerifyArgs,
};
use crate::report::{exit_code, status, to_json, CheckSummary, PhaseReport, VerifyReport, SCHEMA_VERSION};
use crate::{load_image, load_model, read_text, write_text, CliError, Image, Outcome};

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub(crate) fn budget(timeout: f64) -> Result<Budget, CliError> {
    if !(timeout >= 0.0 && timeout.is_finite()) {
        return Err(CliError::Usage(format!("--timeout must be a nonnegative number of seconds, got {timeout}")));
    }
    Ok(if timeout == 0.0 {
        Budget::unlimited()
    } else {
        Budget::with_timeout(Duration::from_secs_f64(timeout))
    })
}

fn config(a: &SolverArgs) -> Result<CheckConfig, CliError> {
    Ok(CheckConfig {
        backend: Backend::from_cmd_or_env(a.solver_cmd.as_deref())?,
        budget: budget(a.timeout)?,
        seed: a.seed,
    })
}

/// The label to check: the flag, then the image file, then the prediction.
pub(crate) fn resolve_label(flag: Option<usize>, image: &Image, model: &BnnModel) -> Result<(usize, &'static str), CliError> {
    if let Some(l) = flag {
        return Ok((l, "flag"));
    }
    if let Some(l) = image.label {
        return Ok((l, "image"));
    }
    Ok((model.classify(&image.pixels)?, "predicted"))
}

/// Robustness check of one phase with either engine.
#[allow(clippy::too_many_arguments)]
pub(crate) fn robustness_phase(
    model: &BnnModel,
    image: &[i64],
    label: usize,
    epsilon: i64,
    pixels: Option<Vec<usize>>,
    engine: Engine,
    split_k: usize,
    opts: &CegOptions,
    cfg: &CheckConfig,
    phase: u8,
) -> Result<PhaseReport, CliError> {
    let start = Instant::now();
    let report = match engine {
        Engine::Sat => {
            let prop = PropertyInstance::Robustness {
                image: image.to_vec(),
                label,
                epsilon,
                pixel_subset: pixels.clone(),
            };
            let r = check_property(model, &prop, cfg)?;
            PhaseReport {
                phase,
                pixels,
                verdict: r.verdict,
                formula: r.formula,
                solver: r.solver,
                ceg: None,
                trace: Vec::new(),
                seconds: 0.0,
            }
        }
        Engine::Ceg => {
            let r = check_robustness_ceg(model, image, label, epsilon, pixels.as_deref(), split_k, cfg, opts)?;
            PhaseReport {
                phase,
                pixels,
                verdict: r.verdict,
                formula: r.gen,
                solver: r.solver,
                ceg: Some(r.ceg),
                trace: r.trace,
                seconds: 0.0,
            }
        }
    };
    Ok(PhaseReport {
        seconds: start.elapsed().as_secs_f64(),
        ..report
    })
}

/// Robustness of one image. With two-phase saliency the first phase only
/// lets the most salient half of the pixels move; a phase-1 counterexample
/// is final, anything else falls through to the unrestricted phase 2.
pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let model = load_model(&a.model)?;
    let image = load_image(&a.image)?;
    model.check_input(&image.pixels)?;
    let (label, label_source) = resolve_label(a.label, &image, &model)?;
    let cfg = config(&a.solver)?;
    let opts = CegOptions {
        minimize_cores: !a.no_minimize_cores,
        trace: a.trace,
    };
    let phase = |pixels: Option<Vec<usize>>, n: u8| {
        robustness_phase(&model, &image.pixels, label, a.epsilon, pixels, a.engine, a.split_k, &opts, &cfg, n)
    };
    let mut phases = Vec::new();
    if a.saliency == Saliency::TwoPhase {
        let rank = model.saliency_rank(&image.pixels)?;
        let mut top = rank[..model.input_dim.div_ceil(2)].to_vec();
        top.sort_unstable();
        let first = phase(Some(top), 1)?;
        let done = first.verdict.is_counterexample();
        phases.push(first);
        if !done {
            phases.push(phase(None, 2)?);
        }
    } else {
        phases.push(phase(None, 1)?);
    }
    let last = phases.last().expect("at least one phase");
    let verdict = last.verdict.clone();
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        property: "robustness",
        engine: match a.engine {
            Engine::Sat => "sat",
            Engine::Ceg => "ceg",
        },
        saliency: match a.saliency {
            Saliency::Off => "off",
            Saliency::TwoPhase => "two-phase",
        },
        model: display(&a.model),
        image: display(&a.image),
        label,
        label_source,
        epsilon: a.epsilon,
        status: status("robustness", &verdict),
        decided_in_phase: last.phase,
        verdict,
        phases,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Outcome {
        code: exit_code(&report.verdict),
        stdout: to_json(&report),
    })
}

fn summary(property: &'static str, inputs: Vec<String>, verdict: Verdict, start: Instant) -> CheckSummary {
    CheckSummary {
        schema_version: SCHEMA_VERSION,
        command: "",
        property,
        inputs,
        labels: None,
        epsilon: None,
        rho: None,
        status: status(property, &verdict),
        verdict,
        formula: None,
        solver: None,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn finish(s: CheckSummary) -> Outcome {
    Outcome {
        code: exit_code(&s.verdict),
        stdout: to_json(&s),
    }
}

pub fn cmd_equiv(a: &EquivArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let model_a = load_model(&a.model_a)?;
    let model_b = load_model(&a.model_b)?;
    let cfg = config(&a.solver)?;
    let prop = PropertyInstance::Equivalence {
        model_b: Box::new(model_b),
    };
    let r = check_property(&model_a, &prop, &cfg)?;
    let mut s = summary("equivalence", vec![display(&a.model_a), display(&a.model_b)], r.verdict, start);
    s.command = "equiv";
    s.formula = Some(r.formula);
    s.solver = Some(r.solver);
    Ok(finish(s))
}

fn load_images(model: &BnnModel, paths: &[PathBuf]) -> Result<(Vec<Vec<i64>>, Vec<usize>), CliError> {
    let mut images = Vec::with_capacity(paths.len());
    let mut labels = Vec::with_capacity(paths.len());
    for p in paths {
        let img = load_image(p)?;
        model.check_input(&img.pixels)?;
        labels.push(resolve_label(None, &img, model)?.0);
        images.push(img.pixels);
    }
    Ok((images, labels))
}

pub fn cmd_universal(a: &UniversalArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let model = load_model(&a.model)?;
    let (images, labels) = load_images(&model, &a.images)?;
    let cfg = config(&a.solver)?;
    let prop = PropertyInstance::Universal {
        images,
        labels: labels.clone(),
        epsilon: a.epsilon,
        rho: a.rho,
    };
    let r = check_property(&model, &prop, &cfg)?;
    let mut s = summary("universal", a.images.iter().map(|p| display(p)).collect(), r.verdict, start);
    s.command = "universal";
    s.labels = Some(labels);
    s.epsilon = Some(a.epsilon);
    s.rho = Some(a.rho);
    s.formula = Some(r.formula);
    s.solver = Some(r.solver);
    Ok(finish(s))
}

pub fn cmd_oracle(a: &OracleArgs) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut s = match &a.property {
        OracleCommand::Robustness {
            model,
            image,
            label,
            epsilon,
            cap,
        } => {
            let m = load_model(model)?;
            let img = load_image(image)?;
            m.check_input(&img.pixels)?;
            let (l, _) = resolve_label(*label, &img, &m)?;
            let v = brute_force_robustness(&m, &img.pixels, l, *epsilon, *cap)?;
            let mut s = summary("robustness", vec![display(model), display(image)], v, start);
            s.labels = Some(vec![l]);
            s.epsilon = Some(*epsilon);
            s
        }
        OracleCommand::Equiv { model_a, model_b, cap } => {
            let (ma, mb) = (load_model(model_a)?, load_model(model_b)?);
            let v = brute_force_equivalence(&ma, &mb, *cap)?;
            summary("equivalence", vec![display(model_a), display(model_b)], v, start)
        }
        OracleCommand::Universal {
            model,
            images,
            epsilon,
            rho,
            cap,
        } => {
            let m = load_model(model)?;
            let (imgs, labels) = load_images(&m, images)?;
            let v = brute_force_universal(&m, &imgs, &labels, *epsilon, *rho, *cap)?;
            let mut s = summary("universal", images.iter().map(|p| display(p)).collect(), v, start);
            s.labels = Some(labels);
            s.epsilon = Some(*epsilon);
            s.rho = Some(*rho);
            s
        }
    };
    s.command = "oracle";
    s.seconds = start.elapsed().as_secs_f64();
    Ok(finish(s))
}

fn export_property(a: &ExportArgs, model: &BnnModel) -> Result<PropertyInstance, CliError> {
    Ok(match a.property {
        PropertyKind::Robustness => {
            let [path] = a.images.as_slice() else {
                return Err(CliError::Usage("robustness export needs exactly one --image".into()));
            };
            let img = load_image(path)?;
            model.check_input(&img.pixels)?;
            let (label, _) = resolve_label(a.label, &img, model)?;
            PropertyInstance::Robustness {
                image: img.pixels,
                label,
                epsilon: a.epsilon,
                pixel_subset: None,
            }
        }
        PropertyKind::Universal => {
            if a.images.is_empty() {
                return Err(CliError::Usage("universal export needs at least one --image".into()));
            }
            let (images, labels) = load_images(model, &a.images)?;
            PropertyInstance::Universal {
                images,
                labels,
                epsilon: a.epsilon,
                rho: a.rho,
            }
        }
        PropertyKind::Equivalence => {
            let path = a
                .model_b
                .as_ref()
                .ok_or_else(|| CliError::Usage("equivalence export needs --model-b".into()))?;
            PropertyInstance::Equivalence {
                model_b: Box::new(load_model(path)?),
            }
        }
    })
}

/// DIMACS or LP text of a property; satisfying assignments are violations.
pub fn cmd_export(a: &ExportArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let prop = export_property(a, &model)?;
    let text = match a.format {
        Format::Ilp => export_ilp(&model, &prop)?,
        Format::Dimacs => {
            let built = build_property(&model, &prop)?;
            let mut text = String::new();
            writeln!(text, "c bnnv {} property; satisfying assignments are violations", prop.kind()).unwrap();
            for (name, range) in built.pool.regions() {
                writeln!(text, "c region {name} {}..{}", range.start + 1, range.end).unwrap();
            }
            text.push_str(&emit_dimacs(&built.formula));
            text
        }
    };
    match &a.output {
        Some(path) => {
            write_text(path, &text)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(text)),
    }
}

/// Competition-style front end: exit 10 on SAT, 20 on UNSAT, 0 otherwise.
pub fn cmd_sat(a: &SatArgs) -> Result<Outcome, CliError> {
    let text = read_text(&a.file)?;
    let f = parse_dimacs(&text).map_err(|e| CliError::Core(e.into()))?;
    let req = SolveRequest {
        formula: &f,
        assumptions: &[],
        budget: budget(a.timeout)?,
        seed: a.seed,
    };
    let mut out = String::new();
    let code = match solve(&Backend::Embedded, &req)? {
        SolveOutcome::Sat(model) => {
            out.push_str("s SATISFIABLE\n");
            let lits: Vec<String> = model
                .iter()
                .enumerate()
                .map(|(i, &v)| if v { format!("{}", i + 1) } else { format!("-{}", i + 1) })
                .chain(std::iter::once("0".to_string()))
                .collect();
            for chunk in lits.chunks(16) {
                writeln!(out, "v {}", chunk.join(" ")).unwrap();
            }
            10
        }
        SolveOutcome::Unsat(_) => {
            out.push_str("s UNSATISFIABLE\n");
            20
        }
        SolveOutcome::Unknown => {
            out.push_str("s UNKNOWN\n");
            0
        }
    };
    Ok(Outcome { code, stdout: out })
}
