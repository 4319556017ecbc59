use std::fmt;
use std::ops::Not;

/// A propositional variable, numbered from zero.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    pub const fn new(index: u32) -> Self {
        Var(index)
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    /// The positive literal of this variable.
    pub const fn pos(self) -> Lit {
        Lit(self.0 << 1)
    }

    pub const fn neg(self) -> Lit {
        Lit((self.0 << 1) | 1)
    }

    pub const fn lit(self, positive: bool) -> Lit {
        if positive {
            self.pos()
        } else {
            self.neg()
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0 + 1)
    }
}

/// A literal: a variable together with a polarity.
///
/// Encoded as `2 * var + negated`, so literals of one variable are adjacent
/// and can index watch lists directly.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(pub(crate) u32);

impl Lit {
    pub const fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub const fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub const fn code(self) -> usize {
        self.0 as usize
    }

    /// Builds a literal from a nonzero DIMACS integer (`3` is var index 2, `-3` its negation).
    pub fn from_dimacs(value: i32) -> Self {
        assert!(value != 0, "DIMACS literal must be nonzero");
        let var = Var(value.unsigned_abs() - 1);
        var.lit(value > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = (self.var().0 + 1) as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}
