//! One interface over the embedded CDCL solver and external DIMACS solvers.

use std::io::{self, Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use bnnv_sat::{Limits, SolveResult, Solver};
use thiserror::Error;

use crate::cnf::{emit_dimacs, CnfFormula, Lit};

pub const SAT_CMD_ENV: &str = "BNNV_SAT_CMD";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot start solver `{cmd}`: {source}")]
    Spawn { cmd: String, source: io::Error },
    #[error("solver I/O: {0}")]
    Io(#[from] io::Error),
    #[error("malformed solver output: {0}")]
    Malformed(String),
    #[error("solver model falsifies clause {clause}")]
    InvalidModel { clause: usize },
    #[error("solver model falsifies assumption {lit}")]
    InvalidAssumption { lit: i32 },
    #[error("empty solver command")]
    EmptyCommand,
}

/// A solver executable invoked as `<program> <args...> <file.cnf>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalSolver {
    /// Splits a command line on whitespace.
    pub fn parse(cmd: &str) -> Result<Self, SolverError> {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or(SolverError::EmptyCommand)?;
        Ok(ExternalSolver {
            program,
            args: parts.collect(),
        })
    }

    fn display(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    #[default]
    Embedded,
    External(ExternalSolver),
}

impl Backend {
    /// External if `cmd` is given, else external from `BNNV_SAT_CMD` if set,
    /// else embedded.
    pub fn from_cmd_or_env(cmd: Option<&str>) -> Result<Self, SolverError> {
        let env = std::env::var(SAT_CMD_ENV).ok();
        match cmd.or(env.as_deref()).filter(|c| !c.trim().is_empty()) {
            Some(c) => Ok(Backend::External(ExternalSolver::parse(c)?)),
            None => Ok(Backend::Embedded),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Backend::Embedded => "embedded".into(),
            Backend::External(e) => format!("external:{}", e.display()),
        }
    }
}

/// Resource limits shared by every call of one verification run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub conflicts: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn with_timeout(timeout: Duration) -> Self {
        Budget {
            deadline: Instant::now().checked_add(timeout),
            conflicts: None,
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn remaining(&self) -> Option<Duration> {
        self.deadline.map(|d| d.saturating_duration_since(Instant::now()))
    }
}

pub struct SolveRequest<'a> {
    pub formula: &'a CnfFormula,
    pub assumptions: &'a [Lit],
    pub budget: Budget,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Value of every variable, indexed by 0-based variable.
    Sat(Vec<bool>),
    /// A subset of the assumptions that is unsatisfiable with the formula.
    Unsat(Vec<Lit>),
    Unknown,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub calls: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

/// A solver holding a growing clause set, queried under assumptions.
pub trait Session {
    fn add_clause(&mut self, lits: &[Lit]);
    fn solve(&mut self, assumptions: &[Lit], budget: &Budget) -> Result<SolveOutcome, SolverError>;
    fn stats(&self) -> SolverStats;
}

pub fn open_session(backend: &Backend, formula: &CnfFormula, seed: u64) -> Box<dyn Session> {
    match backend {
        Backend::Embedded => Box::new(EmbeddedSession::new(formula, seed)),
        Backend::External(ext) => Box::new(ExternalSession {
            solver: ext.clone(),
            formula: formula.clone(),
            stats: SolverStats::default(),
        }),
    }
}

/// Solves one request from scratch.
pub fn solve(backend: &Backend, req: &SolveRequest<'_>) -> Result<SolveOutcome, SolverError> {
    open_session(backend, req.formula, req.seed).solve(req.assumptions, &req.budget)
}

/// One deletion pass: drops each literal whose removal keeps the core
/// unsatisfiable. Returns the input core if the budget runs out.
pub fn minimize_core(session: &mut dyn Session, core: &[Lit], budget: &Budget) -> Result<Vec<Lit>, SolverError> {
    let mut kept: Vec<Lit> = core.to_vec();
    let mut i = 0;
    while i < kept.len() {
        let mut trial = kept.clone();
        trial.remove(i);
        match session.solve(&trial, budget)? {
            SolveOutcome::Unsat(smaller) => {
                // the solver's own core may drop further literals
                kept.retain(|l| smaller.contains(l));
            }
            SolveOutcome::Sat(_) => i += 1,
            SolveOutcome::Unknown => return Ok(core.to_vec()),
        }
    }
    Ok(kept)
}

fn check_model(formula: &CnfFormula, assumptions: &[Lit], model: &[bool]) -> Result<(), SolverError> {
    if let Some(clause) = formula.first_falsified(model) {
        return Err(SolverError::InvalidModel { clause });
    }
    for &l in assumptions {
        if model.get(l.var().index()).copied() != Some(l.is_positive()) {
            return Err(SolverError::InvalidAssumption { lit: l.to_dimacs() });
        }
    }
    Ok(())
}

/// Debug-build check that `core` alone is unsatisfiable with `formula`.
fn debug_check_core(formula: &CnfFormula, core: &[Lit]) {
    const RECHECK_LIMIT: usize = 200_000;
    if cfg!(debug_assertions) && !core.is_empty() && formula.num_clauses() <= RECHECK_LIMIT {
        let mut s = EmbeddedSession::new(formula, 0);
        let res = s.solver.solve_with(core, &Limits::default());
        assert_eq!(res, SolveResult::Unsat, "core {core:?} is satisfiable");
    }
}

pub struct EmbeddedSession {
    solver: Solver,
    formula: CnfFormula,
}

impl EmbeddedSession {
    pub fn new(formula: &CnfFormula, seed: u64) -> Self {
        let mut solver = Solver::new();
        solver.set_seed(seed);
        solver.ensure_vars(formula.num_vars());
        for c in formula.clauses() {
            solver.add_clause(c);
        }
        EmbeddedSession {
            solver,
            formula: formula.clone(),
        }
    }
}

impl Session for EmbeddedSession {
    fn add_clause(&mut self, lits: &[Lit]) {
        let top = lits.iter().map(|l| l.var().index() + 1).max().unwrap_or(0);
        self.formula.set_num_vars(top);
        self.solver.ensure_vars(top);
        if lits.is_empty() {
            self.formula.add_false();
        } else {
            self.formula.push(lits);
        }
        self.solver.add_clause(lits);
    }

    fn solve(&mut self, assumptions: &[Lit], budget: &Budget) -> Result<SolveOutcome, SolverError> {
        let top = assumptions.iter().map(|l| l.var().index() + 1).max().unwrap_or(0);
        self.solver.ensure_vars(top.max(self.formula.num_vars()));
        let limits = Limits {
            conflicts: budget.conflicts,
            deadline: budget.deadline,
        };
        Ok(match self.solver.solve_with(assumptions, &limits) {
            SolveResult::Sat => {
                let model = self.solver.model().to_vec();
                check_model(&self.formula, assumptions, &model)?;
                SolveOutcome::Sat(model)
            }
            SolveResult::Unsat => {
                let core = self.solver.core().to_vec();
                debug_assert!(core.iter().all(|l| assumptions.contains(l)));
                debug_check_core(&self.formula, &core);
                SolveOutcome::Unsat(core)
            }
            SolveResult::Unknown => SolveOutcome::Unknown,
        })
    }

    fn stats(&self) -> SolverStats {
        let s = self.solver.stats();
        SolverStats {
            calls: s.solves,
            conflicts: s.conflicts,
            decisions: s.decisions,
            propagations: s.propagations,
        }
    }
}

/// Re-runs the external program from scratch on every query; assumptions
/// become unit clauses and the core is the whole assumption set.
struct ExternalSession {
    solver: ExternalSolver,
    formula: CnfFormula,
    stats: SolverStats,
}

impl Session for ExternalSession {
    fn add_clause(&mut self, lits: &[Lit]) {
        let top = lits.iter().map(|l| l.var().index() + 1).max().unwrap_or(0);
        self.formula.set_num_vars(top);
        if lits.is_empty() {
            self.formula.add_false();
        } else {
            self.formula.push(lits);
        }
    }

    fn solve(&mut self, assumptions: &[Lit], budget: &Budget) -> Result<SolveOutcome, SolverError> {
        self.stats.calls += 1;
        let mut f = self.formula.clone();
        let top = assumptions.iter().map(|l| l.var().index() + 1).max().unwrap_or(0);
        f.set_num_vars(top);
        for &l in assumptions {
            f.push(&[l]);
        }
        let outcome = run_external(&self.solver, &f, budget)?;
        Ok(match outcome {
            SolveOutcome::Sat(model) => {
                check_model(&self.formula, assumptions, &model)?;
                SolveOutcome::Sat(model)
            }
            SolveOutcome::Unsat(_) => SolveOutcome::Unsat(assumptions.to_vec()),
            SolveOutcome::Unknown => SolveOutcome::Unknown,
        })
    }

    fn stats(&self) -> SolverStats {
        self.stats
    }
}

fn run_external(ext: &ExternalSolver, f: &CnfFormula, budget: &Budget) -> Result<SolveOutcome, SolverError> {
    if budget.expired() {
        return Ok(SolveOutcome::Unknown);
    }
    let mut file = tempfile::Builder::new().suffix(".cnf").tempfile()?;
    file.write_all(emit_dimacs(f).as_bytes())?;
    file.flush()?;
    let mut child = Command::new(&ext.program)
        .args(&ext.args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| SolverError::Spawn {
            cmd: ext.display(),
            source,
        })?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut text = String::new();
        stdout.read_to_string(&mut text).map(|_| text)
    });
    let start = Instant::now();
    let remaining = budget.remaining();
    loop {
        if child.try_wait()?.is_some() {
            break;
        }
        if remaining.is_some_and(|r| start.elapsed() >= r) {
            let _ = child.kill();
            let _ = child.wait();
            let _ = reader.join();
            return Ok(SolveOutcome::Unknown);
        }
        thread::sleep(Duration::from_millis(2));
    }
    let text = reader
        .join()
        .map_err(|_| SolverError::Malformed("output reader panicked".into()))??;
    parse_solver_output(&text, f.num_vars())
}

/// Parses `s ...` and `v ...` lines of a competition-format solver.
pub fn parse_solver_output(text: &str, num_vars: usize) -> Result<SolveOutcome, SolverError> {
    let mut status = None;
    let mut model = vec![false; num_vars];
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(rest.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("v ").or_else(|| (line == "v").then_some("")) {
            for tok in rest.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| SolverError::Malformed(format!("bad value `{tok}`")))?;
                if v == 0 {
                    continue;
                }
                let idx = v.unsigned_abs() as usize - 1;
                if idx >= num_vars {
                    return Err(SolverError::Malformed(format!("value {v} beyond {num_vars} variables")));
                }
                model[idx] = v > 0;
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => Ok(SolveOutcome::Sat(model)),
        Some("UNSATISFIABLE") => Ok(SolveOutcome::Unsat(Vec::new())),
        Some("UNKNOWN") => Ok(SolveOutcome::Unknown),
        Some(other) => Err(SolverError::Malformed(format!("unknown status `{other}`"))),
        None => Err(SolverError::Malformed("no status line".into())),
    }
}
