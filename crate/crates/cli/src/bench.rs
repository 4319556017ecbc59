use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use bnnv_core::ceg::CegOptions;
use bnnv_core::oracle::brute_force_robustness;
use bnnv_core::properties::CheckConfig;
use bnnv_core::Verdict;

use crate::args::{BenchArgs, BenchEngine, Engine};
use crate::commands::{budget, resolve_label, robustness_phase};
use crate::report::{to_json, SCHEMA_VERSION};
use crate::{load_image, load_model, CliError, Outcome};

#[derive(Clone, Debug, Serialize)]
struct Cell {
    engine: BenchEngine,
    result: &'static str,
    seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
struct Row {
    instance: String,
    label: usize,
    cells: Vec<Cell>,
}

#[derive(Clone, Debug, Serialize)]
struct EngineSummary {
    engine: BenchEngine,
    solved: usize,
    holds: usize,
    counterexamples: usize,
    unknown: usize,
    errors: usize,
    /// Mean time over solved instances.
    mean_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
struct Agreement {
    engines: [BenchEngine; 2],
    compared: usize,
    agree: usize,
}

#[derive(Clone, Debug, Serialize)]
struct BenchReport {
    schema_version: u32,
    command: &'static str,
    epsilon: i64,
    instances: usize,
    rows: Vec<Row>,
    summary: Vec<EngineSummary>,
    agreement: Vec<Agreement>,
}

fn result_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Counterexample { .. } => "counterexample",
        Verdict::Unknown { .. } => "unknown",
    }
}

fn solved(c: &Cell) -> bool {
    matches!(c.result, "holds" | "counterexample")
}

/// Model files with a sibling `.img`, sorted by name.
fn instances(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let io = |source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let img = path.with_extension("img");
            if !img.exists() {
                return Err(CliError::Usage(format!("{} has no matching .img file", path.display())));
            }
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            found.push((stem, path, img));
        }
    }
    found.sort();
    if found.is_empty() {
        return Err(CliError::Usage(format!("no instances in {}", dir.display())));
    }
    Ok(found)
}

fn run_instance(a: &BenchArgs, name: &str, model_path: &Path, image_path: &Path) -> Result<Row, CliError> {
    let model = load_model(model_path)?;
    let image = load_image(image_path)?;
    model.check_input(&image.pixels)?;
    let (label, _) = resolve_label(None, &image, &model)?;
    let mut cells = Vec::new();
    for &engine in &a.engines {
        let start = Instant::now();
        let verdict = match engine {
            BenchEngine::Oracle => brute_force_robustness(&model, &image.pixels, label, a.epsilon, a.oracle_cap).map_err(CliError::from),
            BenchEngine::Sat | BenchEngine::Ceg => {
                let cfg = CheckConfig {
                    budget: budget(a.timeout)?,
                    ..Default::default()
                };
                let e = if engine == BenchEngine::Sat { Engine::Sat } else { Engine::Ceg };
                robustness_phase(&model, &image.pixels, label, a.epsilon, None, e, a.split_k, &CegOptions::default(), &cfg, 1)
                    .map(|p| p.verdict)
            }
        };
        let seconds = start.elapsed().as_secs_f64();
        cells.push(match verdict {
            Ok(v) => Cell {
                engine,
                result: result_name(&v),
                seconds,
                error: None,
            },
            Err(e) => Cell {
                engine,
                result: "error",
                seconds,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(Row {
        instance: name.to_string(),
        label,
        cells,
    })
}

fn summarize(engines: &[BenchEngine], rows: &[Row]) -> (Vec<EngineSummary>, Vec<Agreement>) {
    let summary = engines
        .iter()
        .enumerate()
        .map(|(k, &engine)| {
            let cells: Vec<&Cell> = rows.iter().map(|r| &r.cells[k]).collect();
            let count = |name: &str| cells.iter().filter(|c| c.result == name).count();
            let solved_times: Vec<f64> = cells.iter().filter(|c| solved(c)).map(|c| c.seconds).collect();
            EngineSummary {
                engine,
                solved: solved_times.len(),
                holds: count("holds"),
                counterexamples: count("counterexample"),
                unknown: count("unknown"),
                errors: count("error"),
                mean_seconds: if solved_times.is_empty() {
                    0.0
                } else {
                    solved_times.iter().sum::<f64>() / solved_times.len() as f64
                },
            }
        })
        .collect();
    let mut agreement = Vec::new();
    for i in 0..engines.len() {
        for j in i + 1..engines.len() {
            let both: Vec<(&Cell, &Cell)> = rows
                .iter()
                .map(|r| (&r.cells[i], &r.cells[j]))
                .filter(|(a, b)| solved(a) && solved(b))
                .collect();
            agreement.push(Agreement {
                engines: [engines[i], engines[j]],
                compared: both.len(),
                agree: both.iter().filter(|(a, b)| a.result == b.result).count(),
            });
        }
    }
    (summary, agreement)
}

fn engine_name(e: BenchEngine) -> &'static str {
    match e {
        BenchEngine::Sat => "sat",
        BenchEngine::Ceg => "ceg",
        BenchEngine::Oracle => "oracle",
    }
}

fn table(r: &BenchReport) -> String {
    let mut out = String::new();
    write!(out, "{:<16} {:>5}", "instance", "label").unwrap();
    for s in &r.summary {
        write!(out, "  {:<24}", engine_name(s.engine)).unwrap();
    }
    out.push('\n');
    for row in &r.rows {
        write!(out, "{:<16} {:>5}", row.instance, row.label).unwrap();
        for c in &row.cells {
            write!(out, "  {:<14} {:>9.3}", c.result, c.seconds).unwrap();
        }
        out.push('\n');
    }
    writeln!(out).unwrap();
    writeln!(
        out,
        "{:<8} {:>8} {:>6} {:>15} {:>8} {:>6} {:>10}",
        "engine", "solved", "holds", "counterexamples", "unknown", "errors", "mean_s"
    )
    .unwrap();
    for s in &r.summary {
        writeln!(
            out,
            "{:<8} {:>8} {:>6} {:>15} {:>8} {:>6} {:>10.3}",
            engine_name(s.engine),
            format!("{}/{}", s.solved, r.instances),
            s.holds,
            s.counterexamples,
            s.unknown,
            s.errors,
            s.mean_seconds
        )
        .unwrap();
    }
    if !r.agreement.is_empty() {
        writeln!(out).unwrap();
        for a in &r.agreement {
            writeln!(
                out,
                "agreement {}/{}: {}/{}",
                engine_name(a.engines[0]),
                engine_name(a.engines[1]),
                a.agree,
                a.compared
            )
            .unwrap();
        }
    }
    out
}

/// Robustness of every instance under each engine. Exits 1 if two engines
/// solve an instance with different verdicts.
pub fn cmd_bench(a: &BenchArgs) -> Result<Outcome, CliError> {
    if a.engines.is_empty() {
        return Err(CliError::Usage("--engines is empty".into()));
    }
    budget(a.timeout)?;
    let list = instances(&a.dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", a.jobs)))?;
    let rows = pool.install(|| {
        list.par_iter()
            .map(|(name, model, image)| run_instance(a, name, model, image))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let (summary, agreement) = summarize(&a.engines, &rows);
    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        command: "bench",
        epsilon: a.epsilon,
        instances: rows.len(),
        rows,
        summary,
        agreement,
    };
    let code = if report.agreement.iter().all(|g| g.agree == g.compared) { 0 } else { 1 };
    let stdout = if a.json { to_json(&report) } else { table(&report) };
    Ok(Outcome { code, stdout })
}
