//! Variable pools, clause storage, DIMACS text, and order-encoded integers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Not, Range};

pub use bnnv_sat::{Lit, Var};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("empty clause (use `add_false` for an unsatisfiable formula)")]
    EmptyClause,
    #[error("literal {lit} refers to a variable beyond num_vars = {num_vars}")]
    OutOfRange { lit: i32, num_vars: usize },
    #[error("literal 0 inside a clause")]
    ZeroLiteral,
    #[error("empty order-encoded domain [{lo}, {hi}]")]
    EmptyDomain { lo: i64, hi: i64 },
    #[error("DIMACS line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
}

/// Allocates dense variables and remembers which region each one belongs to.
#[derive(Clone, Debug, Default)]
pub struct VarPool {
    next: u32,
    regions: Vec<(String, Range<u32>)>,
}

impl VarPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.next as usize
    }

    pub fn new_var(&mut self, region: &str) -> Var {
        let v = self.next;
        self.next += 1;
        match self.regions.last_mut() {
            Some((name, range)) if name == region && range.end == v => range.end += 1,
            _ => self.regions.push((region.to_string(), v..v + 1)),
        }
        Var::new(v)
    }

    /// Contiguous variable ranges (0-based indices) in allocation order.
    pub fn regions(&self) -> &[(String, Range<u32>)] {
        &self.regions
    }

    /// Number of variables per region name.
    pub fn region_sizes(&self) -> BTreeMap<String, usize> {
        let mut sizes = BTreeMap::new();
        for (name, r) in &self.regions {
            *sizes.entry(name.clone()).or_insert(0) += r.len();
        }
        sizes
    }

    pub fn region_of(&self, v: Var) -> Option<&str> {
        let i = v.index() as u32;
        let k = self.regions.partition_point(|(_, r)| r.end <= i);
        self.regions
            .get(k)
            .filter(|(_, r)| r.contains(&i))
            .map(|(name, _)| name.as_str())
    }
}

/// A literal that may have been decided at encoding time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Const(bool),
    Lit(Lit),
}

impl Bit {
    pub fn constant(self) -> Option<bool> {
        match self {
            Bit::Const(b) => Some(b),
            Bit::Lit(_) => None,
        }
    }

    pub fn lit(self) -> Option<Lit> {
        match self {
            Bit::Lit(l) => Some(l),
            Bit::Const(_) => None,
        }
    }

    /// Truth value under a total assignment indexed by variable.
    pub fn eval(self, model: &[bool]) -> bool {
        match self {
            Bit::Const(b) => b,
            Bit::Lit(l) => model[l.var().index()] == l.is_positive(),
        }
    }
}

impl Not for Bit {
    type Output = Bit;

    fn not(self) -> Bit {
        match self {
            Bit::Const(b) => Bit::Const(!b),
            Bit::Lit(l) => Bit::Lit(!l),
        }
    }
}

impl From<Lit> for Bit {
    fn from(l: Lit) -> Self {
        Bit::Lit(l)
    }
}

/// A clause database stored as one flat literal array.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    lits: Vec<Lit>,
    // clause k spans lits[starts[k]..starts[k + 1]]
    starts: Vec<usize>,
    true_var: Option<Var>,
}

impl CnfFormula {
    pub fn new() -> Self {
        CnfFormula {
            starts: vec![0],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn num_literals(&self) -> usize {
        self.lits.len()
    }

    /// Raises the variable count; never lowers it.
    pub fn set_num_vars(&mut self, n: usize) {
        self.num_vars = self.num_vars.max(n);
    }

    pub fn clause(&self, k: usize) -> &[Lit] {
        &self.lits[self.starts[k]..self.starts[k + 1]]
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[Lit]> + '_ {
        self.starts.windows(2).map(|w| &self.lits[w[0]..w[1]])
    }

    pub fn add_clause(&mut self, lits: &[Lit]) -> Result<(), CnfError> {
        if lits.is_empty() {
            return Err(CnfError::EmptyClause);
        }
        if let Some(&l) = lits.iter().find(|l| l.var().index() >= self.num_vars) {
            return Err(CnfError::OutOfRange {
                lit: l.to_dimacs(),
                num_vars: self.num_vars,
            });
        }
        self.push(lits);
        Ok(())
    }

    /// Adds a clause given as DIMACS integers.
    pub fn add_dimacs_clause(&mut self, lits: &[i32]) -> Result<(), CnfError> {
        if lits.contains(&0) {
            return Err(CnfError::ZeroLiteral);
        }
        let lits: Vec<Lit> = lits.iter().map(|&l| Lit::from_dimacs(l)).collect();
        self.add_clause(&lits)
    }

    /// Makes the formula unsatisfiable by adding the empty clause.
    pub fn add_false(&mut self) {
        if !self.is_trivially_false() {
            self.starts.push(self.lits.len());
        }
    }

    pub fn is_trivially_false(&self) -> bool {
        self.starts.windows(2).any(|w| w[0] == w[1])
    }

    pub(crate) fn push(&mut self, lits: &[Lit]) {
        debug_assert!(!lits.is_empty());
        debug_assert!(lits.iter().all(|l| l.var().index() < self.num_vars));
        self.lits.extend_from_slice(lits);
        self.starts.push(self.lits.len());
    }

    /// Adds the clause `bits[0] | bits[1] | ...`, folding constants.
    pub fn add_bits(&mut self, bits: &[Bit]) {
        let mut lits = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                Bit::Const(true) => return,
                Bit::Const(false) => {}
                Bit::Lit(l) => lits.push(l),
            }
        }
        if lits.is_empty() {
            self.add_false();
        } else {
            self.push(&lits);
        }
    }

    pub fn assert_bit(&mut self, b: Bit) {
        self.add_bits(&[b]);
    }

    /// Allocates a variable from `pool` that this formula knows about.
    pub fn new_var(&mut self, pool: &mut VarPool, region: &str) -> Var {
        let v = pool.new_var(region);
        self.set_num_vars(pool.num_vars());
        v
    }

    /// A literal fixed to true in this formula (one shared variable; false
    /// is its negation).
    pub fn true_lit(&mut self, pool: &mut VarPool) -> Lit {
        if let Some(v) = self.true_var {
            return v.pos();
        }
        let v = self.new_var(pool, "const");
        self.push(&[v.pos()]);
        self.true_var = Some(v);
        v.pos()
    }

    /// A literal with the value of `b`, materializing constants.
    pub fn materialize(&mut self, pool: &mut VarPool, b: Bit) -> Lit {
        match b {
            Bit::Lit(l) => l,
            Bit::Const(c) => {
                let t = self.true_lit(pool);
                if c {
                    t
                } else {
                    !t
                }
            }
        }
    }

    /// Returns a bit equivalent to the conjunction of `bits`.
    pub fn and(&mut self, pool: &mut VarPool, bits: &[Bit], region: &str) -> Bit {
        let mut lits = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                Bit::Const(false) => return Bit::Const(false),
                Bit::Const(true) => {}
                Bit::Lit(l) => lits.push(l),
            }
        }
        lits.sort_unstable();
        lits.dedup();
        match lits.as_slice() {
            [] => return Bit::Const(true),
            [l] => return Bit::Lit(*l),
            _ => {}
        }
        let out = self.new_var(pool, region).pos();
        let mut long = Vec::with_capacity(lits.len() + 1);
        for &l in &lits {
            self.push(&[!out, l]);
            long.push(!l);
        }
        long.push(out);
        self.push(&long);
        Bit::Lit(out)
    }

    /// Returns a bit equivalent to the disjunction of `bits`.
    pub fn or(&mut self, pool: &mut VarPool, bits: &[Bit], region: &str) -> Bit {
        let negated: Vec<Bit> = bits.iter().map(|&b| !b).collect();
        !self.and(pool, &negated, region)
    }

    /// Returns a bit equivalent to `a xor b`.
    pub fn xor(&mut self, pool: &mut VarPool, a: Bit, b: Bit, region: &str) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x ^ y),
            (Bit::Const(x), l) | (l, Bit::Const(x)) => {
                if x {
                    !l
                } else {
                    l
                }
            }
            (Bit::Lit(x), Bit::Lit(y)) => {
                if x == y {
                    return Bit::Const(false);
                }
                if x == !y {
                    return Bit::Const(true);
                }
                let out = self.new_var(pool, region).pos();
                self.push(&[!out, x, y]);
                self.push(&[!out, !x, !y]);
                self.push(&[out, !x, y]);
                self.push(&[out, x, !y]);
                Bit::Lit(out)
            }
        }
    }

    /// Evaluates every clause under a total assignment.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.first_falsified(model).is_none()
    }

    /// Index of the first clause falsified by `model`, if any.
    pub fn first_falsified(&self, model: &[bool]) -> Option<usize> {
        self.clauses().position(|c| {
            !c.iter()
                .any(|l| model.get(l.var().index()).is_some_and(|&v| v == l.is_positive()))
        })
    }

    /// Appends every clause of `other`.
    pub fn extend_from(&mut self, other: &CnfFormula) {
        self.set_num_vars(other.num_vars);
        for c in other.clauses() {
            if c.is_empty() {
                self.add_false();
            } else {
                self.push(c);
            }
        }
    }
}

pub fn emit_dimacs(f: &CnfFormula) -> String {
    let mut out = String::with_capacity(16 + f.num_literals() * 7);
    writeln!(out, "p cnf {} {}", f.num_vars(), f.num_clauses()).unwrap();
    for c in f.clauses() {
        for l in c {
            write!(out, "{} ", l.to_dimacs()).unwrap();
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS CNF. Comment lines and clauses spanning lines are accepted.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, CnfError> {
    let mut f = CnfFormula::new();
    let mut header: Option<(usize, usize)> = None;
    let mut current: Vec<Lit> = Vec::new();
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        let err = |msg: String| CnfError::Dimacs { line: line_no, msg };
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if header.is_some() {
                return Err(err("duplicate header".into()));
            }
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(err(format!("bad header `{line}`")));
            }
            let vars = parts[2].parse().map_err(|_| err("bad variable count".into()))?;
            let clauses = parts[3].parse().map_err(|_| err("bad clause count".into()))?;
            f.set_num_vars(vars);
            header = Some((vars, clauses));
            continue;
        }
        let (vars, _) = header.ok_or_else(|| err("clause before header".into()))?;
        for tok in line.split_whitespace() {
            let v: i32 = tok.parse().map_err(|_| err(format!("bad literal `{tok}`")))?;
            if v == 0 {
                if current.is_empty() {
                    f.add_false();
                } else {
                    f.push(&current);
                    current.clear();
                }
            } else {
                if v.unsigned_abs() as usize > vars {
                    return Err(err(format!("literal {v} exceeds {vars} variables")));
                }
                current.push(Lit::from_dimacs(v));
            }
        }
    }
    let (_, clauses) = header.ok_or(CnfError::Dimacs {
        line: last_line,
        msg: "missing header".into(),
    })?;
    if !current.is_empty() {
        f.push(&current);
    }
    if f.num_clauses() != clauses {
        return Err(CnfError::Dimacs {
            line: last_line,
            msg: format!("header announces {clauses} clauses, found {}", f.num_clauses()),
        });
    }
    Ok(f)
}

/// An integer `t` in `[lo, hi]` in order encoding: `ladder[k]` is `t >= lo + 1 + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderInt {
    pub lo: i64,
    pub hi: i64,
    pub ladder: Vec<Lit>,
}

impl OrderInt {
    /// The bit `t >= v`.
    pub fn geq(&self, v: i64) -> Bit {
        if v <= self.lo {
            Bit::Const(true)
        } else if v > self.hi {
            Bit::Const(false)
        } else {
            Bit::Lit(self.ladder[(v - self.lo - 1) as usize])
        }
    }

    pub fn decode(&self, model: &[bool]) -> i64 {
        let eval = |l: &Lit| model[l.var().index()] == l.is_positive();
        let count = self.ladder.iter().take_while(|l| eval(l)).count();
        debug_assert!(
            self.ladder[count..].iter().all(|l| !eval(l)),
            "ladder assignment is not monotone"
        );
        self.lo + count as i64
    }

    /// Literals fixing `t = v`, for use as assumptions.
    pub fn assign(&self, v: i64) -> Vec<Lit> {
        assert!((self.lo..=self.hi).contains(&v));
        self.ladder
            .iter()
            .enumerate()
            .map(|(k, &l)| if self.lo + 1 + k as i64 <= v { l } else { !l })
            .collect()
    }

    /// A constant integer needing no variables.
    pub fn constant(v: i64) -> Self {
        OrderInt {
            lo: v,
            hi: v,
            ladder: Vec::new(),
        }
    }
}

pub fn encode_order_int(
    pool: &mut VarPool,
    f: &mut CnfFormula,
    lo: i64,
    hi: i64,
    region: &str,
) -> Result<OrderInt, CnfError> {
    if lo > hi {
        return Err(CnfError::EmptyDomain { lo, hi });
    }
    let ladder: Vec<Lit> = (lo..hi).map(|_| f.new_var(pool, region).pos()).collect();
    for w in ladder.windows(2) {
        f.push(&[!w[1], w[0]]);
    }
    Ok(OrderInt { lo, hi, ladder })
}
