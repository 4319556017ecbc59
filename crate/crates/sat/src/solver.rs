use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use crate::heap::VarHeap;
use crate::types::{Lit, Var};

const TRUE: i8 = 1;
const FALSE: i8 = -1;
const UNDEF: i8 = 0;

const NO_REASON: u32 = u32::MAX;

// Clause arena layout: [len, flags, activity bits, lits...]
const HEADER: usize = 3;
const LEARNT: u32 = 1;
const DELETED: u32 = 2;
const LBD_SHIFT: u32 = 2;

const VAR_DECAY: f64 = 0.95;
const CLAUSE_DECAY: f32 = 0.999;
const RESTART_UNIT: u64 = 100;

/// Outcome of a single `solve` call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// A conflict limit, deadline, or interrupt stopped the search.
    Unknown,
}

/// Resource limits for one `solve` call.
#[derive(Clone, Debug, Default)]
pub struct Limits {
    pub conflicts: Option<u64>,
    pub deadline: Option<Instant>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learnt_literals: u64,
}

#[derive(Clone, Copy, Debug)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

enum SearchStatus {
    Sat,
    Unsat,
    Restart,
    Budget,
}

/// Incremental CDCL solver in the MiniSat tradition.
///
/// Clauses can be added between calls to [`Solver::solve_with`]; assumptions
/// hold for one call only. After an `Unsat` answer under assumptions,
/// [`Solver::core`] returns the subset of assumptions used in the refutation.
pub struct Solver {
    ok: bool,
    db: Vec<u32>,
    wasted: usize,
    clauses: Vec<u32>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,

    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,

    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,

    seen: Vec<u8>,
    learnt_buf: Vec<Lit>,
    toclear: Vec<Lit>,
    stack: Vec<Lit>,
    level_stamp: Vec<u32>,
    stamp: u32,

    assumptions: Vec<Lit>,
    model: Vec<bool>,
    core: Vec<Lit>,

    max_learnts: f64,
    learnt_floor: f64,
    simp_trail: usize,
    rng: u64,
    random_freq: f64,
    interrupt: Option<Arc<AtomicBool>>,
    stats: Stats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            ok: true,
            db: Vec::new(),
            wasted: 0,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            learnt_buf: Vec::new(),
            toclear: Vec::new(),
            stack: Vec::new(),
            level_stamp: vec![0],
            stamp: 0,
            assumptions: Vec::new(),
            model: Vec::new(),
            core: Vec::new(),
            max_learnts: 0.0,
            learnt_floor: 10_000.0,
            simp_trail: 0,
            rng: 0x9E37_79B9_7F4A_7C15,
            random_freq: 0.0,
            interrupt: None,
            stats: Stats::default(),
        }
    }

    /// Seeds the random decision heuristic; a nonzero seed also enables a
    /// small fraction of random branching.
    pub fn set_seed(&mut self, seed: u64) {
        if seed == 0 {
            self.random_freq = 0.0;
        } else {
            self.rng = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
            self.random_freq = 0.01;
        }
    }

    /// Registers a flag that aborts the search (with `Unknown`) once set.
    pub fn set_interrupt(&mut self, flag: Arc<AtomicBool>) {
        self.interrupt = Some(flag);
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn new_var(&mut self) -> Var {
        let v = self.assigns.len();
        self.ensure_vars(v + 1);
        Var::new(v as u32)
    }

    /// Makes sure variables with indices `0..n` exist.
    pub fn ensure_vars(&mut self, n: usize) {
        let old = self.assigns.len();
        if n <= old {
            return;
        }
        self.assigns.resize(n, UNDEF);
        self.level.resize(n, 0);
        self.reason.resize(n, NO_REASON);
        self.polarity.resize(n, false);
        self.activity.resize(n, 0.0);
        self.seen.resize(n, 0);
        self.watches.resize_with(2 * n, Vec::new);
        self.heap.grow(n);
        for v in old..n {
            self.heap.insert(v as u32, &self.activity);
        }
    }

    /// Adds a clause at the top level. Returns `false` once the clause set is
    /// known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        self.cancel_until(0);
        if !self.ok {
            return false;
        }
        let max_var = lits.iter().map(|l| l.var().index() + 1).max().unwrap_or(0);
        self.ensure_vars(max_var);

        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut j = 0;
        for i in 0..c.len() {
            let l = c[i];
            let val = self.lit_value(l);
            if val == TRUE || (i + 1 < c.len() && c[i + 1] == !l) {
                return true;
            }
            if val != FALSE {
                c[j] = l;
                j += 1;
            }
        }
        c.truncate(j);

        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                let cr = self.alloc_clause(&c, false, 0);
                self.clauses.push(cr);
                self.attach(cr);
                true
            }
        }
    }

    pub fn solve(&mut self) -> SolveResult {
        self.solve_with(&[], &Limits::default())
    }

    /// Solves under `assumptions` within `limits`.
    pub fn solve_with(&mut self, assumptions: &[Lit], limits: &Limits) -> SolveResult {
        self.stats.solves += 1;
        self.model.clear();
        self.core.clear();
        self.cancel_until(0);
        if !self.ok {
            return SolveResult::Unsat;
        }
        let max_var = assumptions
            .iter()
            .map(|l| l.var().index() + 1)
            .max()
            .unwrap_or(0);
        self.ensure_vars(max_var);
        self.assumptions = assumptions.to_vec();

        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        self.simplify();

        self.max_learnts = (self.clauses.len() as f64 / 3.0).max(self.learnt_floor);
        let start_conflicts = self.stats.conflicts;
        let mut restarts = 0u32;
        let result = loop {
            if self.budget_exhausted(limits, start_conflicts) {
                break SolveResult::Unknown;
            }
            let budget = luby(2.0, restarts) as u64 * RESTART_UNIT;
            match self.search(budget, limits, start_conflicts) {
                SearchStatus::Sat => {
                    self.model = self.assigns.iter().map(|&a| a == TRUE).collect();
                    break SolveResult::Sat;
                }
                SearchStatus::Unsat => break SolveResult::Unsat,
                SearchStatus::Budget => break SolveResult::Unknown,
                SearchStatus::Restart => {
                    restarts += 1;
                    self.stats.restarts += 1;
                    self.max_learnts *= 1.05;
                }
            }
        };
        self.cancel_until(0);
        result
    }

    /// Truth values of all variables after a `Sat` answer, indexed by variable.
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.model.get(v.index()).copied()
    }

    /// Assumption literals responsible for the last `Unsat` answer. Empty
    /// when the clauses alone are unsatisfiable.
    pub fn core(&self) -> &[Lit] {
        &self.core
    }

    fn budget_exhausted(&self, limits: &Limits, start_conflicts: u64) -> bool {
        if let Some(max) = limits.conflicts {
            if self.stats.conflicts - start_conflicts >= max {
                return true;
            }
        }
        if let Some(deadline) = limits.deadline {
            if Instant::now() >= deadline {
                return true;
            }
        }
        if let Some(flag) = &self.interrupt {
            if flag.load(Ordering::Relaxed) {
                return true;
            }
        }
        false
    }

    fn search(&mut self, nof_conflicts: u64, limits: &Limits, start_conflicts: u64) -> SearchStatus {
        let mut conflicts_here = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts_here += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SearchStatus::Unsat;
                }
                let (bt_level, lbd) = self.analyze(confl);
                self.cancel_until(bt_level);
                let learnt = std::mem::take(&mut self.learnt_buf);
                self.stats.learnt_literals += learnt.len() as u64;
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let cr = self.alloc_clause(&learnt, true, lbd);
                    self.learnts.push(cr);
                    self.attach(cr);
                    self.bump_clause(cr);
                    self.enqueue(learnt[0], cr);
                }
                self.learnt_buf = learnt;
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLAUSE_DECAY;

                let check = limits.conflicts.is_some() || conflicts_here % 64 == 0;
                if check && self.budget_exhausted(limits, start_conflicts) {
                    return SearchStatus::Budget;
                }
            } else {
                if conflicts_here >= nof_conflicts {
                    self.cancel_until(0);
                    return SearchStatus::Restart;
                }
                if self.decision_level() == 0 && self.trail.len() > self.simp_trail {
                    self.simplify();
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }

                let mut next = None;
                while self.decision_level() < self.assumptions.len() {
                    let p = self.assumptions[self.decision_level()];
                    match self.lit_value(p) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => {
                            self.analyze_final(p);
                            return SearchStatus::Unsat;
                        }
                        _ => {
                            next = Some(p);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(p) => p,
                    None => {
                        self.stats.decisions += 1;
                        if self.stats.decisions % 4096 == 0
                            && self.budget_exhausted(limits, start_conflicts)
                        {
                            return SearchStatus::Budget;
                        }
                        match self.pick_branch_lit() {
                            Some(l) => l,
                            None => return SearchStatus::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var().index()];
        if l.is_positive() {
            a
        } else {
            -a
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], UNDEF);
        self.assigns[v] = if l.is_positive() { TRUE } else { FALSE };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn cancel_until(&mut self, lvl: usize) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.polarity[v] = l.is_positive();
            self.heap.insert(v as u32, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl);
        self.qhead = lim;
    }

    fn pick_branch_lit(&mut self) -> Option<Lit> {
        if self.random_freq > 0.0 && self.next_random() < self.random_freq && !self.heap.is_empty() {
            let v = (self.next_random() * self.num_vars() as f64) as usize % self.num_vars();
            if self.assigns[v] == UNDEF {
                return Some(Var::new(v as u32).lit(self.polarity[v]));
            }
        }
        while let Some(v) = self.heap.pop_max(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Var::new(v).lit(self.polarity[v as usize]));
            }
        }
        None
    }

    fn next_random(&mut self) -> f64 {
        // xorshift64*
        self.rng ^= self.rng >> 12;
        self.rng ^= self.rng << 25;
        self.rng ^= self.rng >> 27;
        let x = self.rng.wrapping_mul(0x2545_F491_4F6C_DD1D);
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    fn alloc_clause(&mut self, lits: &[Lit], learnt: bool, lbd: u32) -> u32 {
        let cr = self.db.len();
        assert!(cr + HEADER + lits.len() < u32::MAX as usize, "clause arena overflow");
        let flags = if learnt { LEARNT } else { 0 } | (lbd.min(1 << 20) << LBD_SHIFT);
        self.db.push(lits.len() as u32);
        self.db.push(flags);
        self.db.push(0f32.to_bits());
        self.db.extend(lits.iter().map(|l| l.0));
        cr as u32
    }

    fn attach(&mut self, cr: u32) {
        let base = cr as usize + HEADER;
        let l0 = Lit(self.db[base]);
        let l1 = Lit(self.db[base + 1]);
        self.watches[l0.code()].push(Watcher { cref: cr, blocker: l1 });
        self.watches[l1.code()].push(Watcher { cref: cr, blocker: l0 });
    }

    fn clause_len(&self, cr: u32) -> usize {
        self.db[cr as usize] as usize
    }

    fn clause_lit(&self, cr: u32, k: usize) -> Lit {
        Lit(self.db[cr as usize + HEADER + k])
    }

    fn is_learnt(&self, cr: u32) -> bool {
        self.db[cr as usize + 1] & LEARNT != 0
    }

    fn lbd(&self, cr: u32) -> u32 {
        self.db[cr as usize + 1] >> LBD_SHIFT
    }

    fn clause_activity(&self, cr: u32) -> f32 {
        f32::from_bits(self.db[cr as usize + 2])
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let n = ws.len();
            let mut i = 0;
            let mut j = 0;
            'next_watch: while i < n {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cr = w.cref as usize;
                if self.db[cr + 1] & DELETED != 0 {
                    continue;
                }
                let len = self.db[cr] as usize;
                let base = cr + HEADER;
                if self.db[base] == false_lit.0 {
                    self.db.swap(base, base + 1);
                }
                let first = Lit(self.db[base]);
                let watcher = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.lit_value(first) == TRUE {
                    ws[j] = watcher;
                    j += 1;
                    continue;
                }
                for k in 2..len {
                    let lk = Lit(self.db[base + k]);
                    if self.lit_value(lk) != FALSE {
                        self.db[base + 1] = lk.0;
                        self.db[base + k] = false_lit.0;
                        self.watches[lk.code()].push(watcher);
                        continue 'next_watch;
                    }
                }
                ws[j] = watcher;
                j += 1;
                if self.lit_value(first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < n {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v as u32, &self.activity);
    }

    fn bump_clause(&mut self, cr: u32) {
        let slot = cr as usize + 2;
        let act = f32::from_bits(self.db[slot]) + self.cla_inc;
        self.db[slot] = act.to_bits();
        if act > 1e20 {
            for &c in &self.learnts {
                let s = c as usize + 2;
                self.db[s] = (f32::from_bits(self.db[s]) * 1e-20).to_bits();
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis; leaves the learnt clause in `learnt_buf`
    /// with the asserting literal first and a literal of the backjump level second.
    fn analyze(&mut self, mut confl: u32) -> (usize, u32) {
        let mut learnt = std::mem::take(&mut self.learnt_buf);
        learnt.clear();
        learnt.push(Lit(0));
        let mut path_c = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;

        loop {
            debug_assert_ne!(confl, NO_REASON);
            if self.is_learnt(confl) {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clause_len(confl) {
                let q = self.clause_lit(confl, k);
                let v = q.var().index();
                if self.seen[v] == 0 && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = 1;
                    if self.level[v] >= current {
                        path_c += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] != 0 {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            confl = self.reason[pl.var().index()];
            self.seen[pl.var().index()] = 0;
            path_c -= 1;
            if path_c == 0 {
                break;
            }
        }
        learnt[0] = !p.expect("uip");

        // recursive minimization
        self.toclear.clear();
        self.toclear.extend_from_slice(&learnt);
        let mut abstract_levels = 0u32;
        for l in &learnt[1..] {
            abstract_levels |= self.abstract_level(l.var().index());
        }
        let mut j = 1;
        for i in 1..learnt.len() {
            let l = learnt[i];
            let v = l.var().index();
            if self.reason[v] == NO_REASON || !self.lit_redundant(l, abstract_levels) {
                learnt[j] = l;
                j += 1;
            }
        }
        learnt.truncate(j);
        for idx in 0..self.toclear.len() {
            let v = self.toclear[idx].var().index();
            self.seen[v] = 0;
        }

        let bt_level = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[learnt[1].var().index()] as usize
        };

        let lbd = self.compute_lbd(&learnt);
        self.learnt_buf = learnt;
        (bt_level, lbd)
    }

    fn abstract_level(&self, v: usize) -> u32 {
        1 << (self.level[v] & 31)
    }

    fn lit_redundant(&mut self, p: Lit, abstract_levels: u32) -> bool {
        self.stack.clear();
        self.stack.push(p);
        let top = self.toclear.len();
        while let Some(q) = self.stack.pop() {
            let cr = self.reason[q.var().index()];
            debug_assert_ne!(cr, NO_REASON);
            for k in 1..self.clause_len(cr) {
                let l = self.clause_lit(cr, k);
                let v = l.var().index();
                if self.seen[v] == 0 && self.level[v] > 0 {
                    if self.reason[v] != NO_REASON
                        && (self.abstract_level(v) & abstract_levels) != 0
                    {
                        self.seen[v] = 1;
                        self.stack.push(l);
                        self.toclear.push(l);
                    } else {
                        for idx in top..self.toclear.len() {
                            let u = self.toclear[idx].var().index();
                            self.seen[u] = 0;
                        }
                        self.toclear.truncate(top);
                        return false;
                    }
                }
            }
        }
        true
    }

    fn compute_lbd(&mut self, lits: &[Lit]) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.level_stamp.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        let needed = self.decision_level() + 1;
        if self.level_stamp.len() < needed {
            self.level_stamp.resize(needed, 0);
        }
        let mut lbd = 0;
        for l in lits {
            let lv = self.level[l.var().index()] as usize;
            if self.level_stamp[lv] != self.stamp {
                self.level_stamp[lv] = self.stamp;
                lbd += 1;
            }
        }
        lbd
    }

    /// Collects the assumptions implying `!p`, where `p` is a falsified assumption.
    fn analyze_final(&mut self, p: Lit) {
        self.core.clear();
        self.core.push(p);
        if self.decision_level() == 0 {
            return;
        }
        let np = !p;
        self.seen[np.var().index()] = 1;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            if self.seen[v] == 0 {
                continue;
            }
            let r = self.reason[v];
            if r == NO_REASON {
                debug_assert!(self.level[v] > 0);
                if l != p {
                    self.core.push(l);
                }
            } else {
                for k in 1..self.clause_len(r) {
                    let q = self.clause_lit(r, k);
                    if self.level[q.var().index()] > 0 {
                        self.seen[q.var().index()] = 1;
                    }
                }
            }
            self.seen[v] = 0;
        }
        self.seen[np.var().index()] = 0;
        self.core.sort_unstable();
        self.core.dedup();
    }

    fn locked(&self, cr: u32) -> bool {
        let l0 = self.clause_lit(cr, 0);
        self.reason[l0.var().index()] == cr && self.lit_value(l0) == TRUE
    }

    fn remove_clause(&mut self, cr: u32) {
        let flags = cr as usize + 1;
        self.db[flags] |= DELETED;
        self.wasted += HEADER + self.clause_len(cr);
    }

    fn reduce_db(&mut self) {
        let mut cands = std::mem::take(&mut self.learnts);
        cands.sort_by(|&a, &b| {
            let ka = (self.lbd(a) <= 2, self.clause_len(a) <= 2);
            let kb = (self.lbd(b) <= 2, self.clause_len(b) <= 2);
            ka.cmp(&kb)
                .then(self.lbd(b).cmp(&self.lbd(a)))
                .then(self.clause_activity(a).total_cmp(&self.clause_activity(b)))
        });
        let half = cands.len() / 2;
        let mut kept = Vec::with_capacity(cands.len());
        for (i, &cr) in cands.iter().enumerate() {
            let protected = self.lbd(cr) <= 2 || self.clause_len(cr) <= 2 || self.locked(cr);
            if i < half && !protected {
                self.remove_clause(cr);
            } else {
                kept.push(cr);
            }
        }
        self.learnts = kept;
        self.maybe_collect();
    }

    /// Removes clauses satisfied at the top level.
    fn simplify(&mut self) {
        debug_assert_eq!(self.decision_level(), 0);
        if self.trail.len() == self.simp_trail {
            return;
        }
        for i in 0..self.trail.len() {
            let v = self.trail[i].var().index();
            self.reason[v] = NO_REASON;
        }
        for list in [std::mem::take(&mut self.clauses), std::mem::take(&mut self.learnts)]
            .into_iter()
            .enumerate()
        {
            let (which, crs) = list;
            let mut kept = Vec::with_capacity(crs.len());
            for cr in crs {
                let satisfied =
                    (0..self.clause_len(cr)).any(|k| self.lit_value(self.clause_lit(cr, k)) == TRUE);
                if satisfied {
                    self.remove_clause(cr);
                } else {
                    kept.push(cr);
                }
            }
            if which == 0 {
                self.clauses = kept;
            } else {
                self.learnts = kept;
            }
        }
        self.simp_trail = self.trail.len();
        self.maybe_collect();
    }

    fn maybe_collect(&mut self) {
        if self.wasted * 2 <= self.db.len() {
            return;
        }
        let mut db = Vec::with_capacity(self.db.len() - self.wasted);
        let mut relocate = |old: &mut Vec<u32>, list: &mut Vec<u32>| {
            for cr in list.iter_mut() {
                let c = *cr as usize;
                let len = old[c] as usize;
                let new_cr = db.len() as u32;
                db.extend_from_slice(&old[c..c + HEADER + len]);
                // forwarding pointer in the dead copy's activity slot
                old[c + 2] = new_cr;
                *cr = new_cr;
            }
        };
        let mut old = std::mem::take(&mut self.db);
        relocate(&mut old, &mut self.clauses);
        relocate(&mut old, &mut self.learnts);
        for i in 0..self.trail.len() {
            let v = self.trail[i].var().index();
            let r = self.reason[v];
            if r != NO_REASON {
                debug_assert!(old[r as usize + 1] & DELETED == 0);
                self.reason[v] = old[r as usize + 2];
            }
        }
        self.db = db;
        self.wasted = 0;
        for w in self.watches.iter_mut() {
            w.clear();
        }
        let all: Vec<u32> = self.clauses.iter().chain(self.learnts.iter()).copied().collect();
        for cr in all {
            self.attach(cr);
        }
    }
}

fn luby(y: f64, mut x: u32) -> f64 {
    let mut size = 1u32;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq as i32)
}
