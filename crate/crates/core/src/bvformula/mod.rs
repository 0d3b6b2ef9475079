//! Fixed-width bit-vector formulas.
//!
//! A [`Formula`] is a list of declared variables (its support) plus a list of
//! asserted boolean expressions, read as a conjunction. Terms carry their
//! result width, computed and checked at construction, so a value of type
//! [`Term`] is always well-typed.

mod eval;
mod normalize;
mod parse;
mod print;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub use eval::{evaluate, EvalError};
pub use normalize::normalize_widths;
pub use parse::{parse_constant, parse_smt2, ParseError};
pub use print::{binary_literal, print_bool, print_smt2, quote_symbol};

/// Widest term the evaluator supports.
pub const MAX_TERM_WIDTH: u32 = 128;
/// Widest declared variable.
pub const MAX_VAR_WIDTH: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("width {0} out of range (1..={MAX_TERM_WIDTH})")]
    WidthOutOfRange(u32),
    #[error("variable width {0} out of range (1..={MAX_VAR_WIDTH})")]
    VariableTooWide(u32),
    #[error("constant {value} does not fit in {width} bits")]
    ConstantTooWide { value: u128, width: u32 },
    #[error("operand widths differ: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("extract [{lo}:{hi}] out of range for width {width}")]
    BadExtract { lo: u32, hi: u32, width: u32 },
    #[error("reference to undeclared variable #{0}")]
    UnknownVariable(usize),
    #[error("variable #{index} used at width {used} but declared with {declared}")]
    VariableWidth {
        index: usize,
        used: u32,
        declared: u32,
    },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
}

/// Bit count of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Width(u32);

impl Width {
    pub fn new(bits: u32) -> Result<Self, FormulaError> {
        if bits == 0 || bits > MAX_TERM_WIDTH {
            return Err(FormulaError::WidthOutOfRange(bits));
        }
        Ok(Width(bits))
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    /// All-ones value of this width.
    pub const fn mask(self) -> u128 {
        if self.0 >= 128 {
            u128::MAX
        } else {
            (1u128 << self.0) - 1
        }
    }

    pub const fn fits(self, value: u128) -> bool {
        value & !self.mask() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub width: Width,
}

impl Variable {
    pub fn new(name: impl Into<String>, width: Width) -> Result<Self, FormulaError> {
        if width.bits() > MAX_VAR_WIDTH {
            return Err(FormulaError::VariableTooWide(width.bits()));
        }
        Ok(Variable {
            name: name.into(),
            width,
        })
    }
}

/// Width-preserving binary operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Mul,
    URem,
    And,
    Or,
    Xor,
}

impl BinOp {
    pub fn smt_name(self) -> &'static str {
        match self {
            BinOp::Add => "bvadd",
            BinOp::Mul => "bvmul",
            BinOp::URem => "bvurem",
            BinOp::And => "bvand",
            BinOp::Or => "bvor",
            BinOp::Xor => "bvxor",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    Const(u128),
    /// Index into the support of the enclosing formula.
    Var(usize),
    Binary(BinOp, Box<Term>, Box<Term>),
    Not(Box<Term>),
    /// `hi` occupies the most significant bits.
    Concat(Box<Term>, Box<Term>),
    /// Bits `lo..=hi` of the argument.
    Extract {
        lo: u32,
        hi: u32,
        arg: Box<Term>,
    },
    Ite(Box<BoolExpr>, Box<Term>, Box<Term>),
    ZeroExtend {
        extra: u32,
        arg: Box<Term>,
    },
}

/// A bit-vector term together with its result width.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    kind: TermKind,
    width: Width,
}

impl Term {
    pub fn kind(&self) -> &TermKind {
        &self.kind
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn constant(value: u128, width: Width) -> Result<Term, FormulaError> {
        if !width.fits(value) {
            return Err(FormulaError::ConstantTooWide {
                value,
                width: width.bits(),
            });
        }
        Ok(Term {
            kind: TermKind::Const(value),
            width,
        })
    }

    /// A reference to support variable `index`. The width is checked against
    /// the declaration when the term is placed into a [`Formula`].
    pub fn var(index: usize, width: Width) -> Term {
        Term {
            kind: TermKind::Var(index),
            width,
        }
    }

    pub fn binary(op: BinOp, lhs: Term, rhs: Term) -> Result<Term, FormulaError> {
        same_width(&lhs, &rhs)?;
        let width = lhs.width;
        Ok(Term {
            kind: TermKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            width,
        })
    }

    pub fn bvadd(lhs: Term, rhs: Term) -> Result<Term, FormulaError> {
        Term::binary(BinOp::Add, lhs, rhs)
    }

    pub fn bvmul(lhs: Term, rhs: Term) -> Result<Term, FormulaError> {
        Term::binary(BinOp::Mul, lhs, rhs)
    }

    pub fn bvurem(lhs: Term, rhs: Term) -> Result<Term, FormulaError> {
        Term::binary(BinOp::URem, lhs, rhs)
    }

    pub fn bvnot(arg: Term) -> Term {
        let width = arg.width;
        Term {
            kind: TermKind::Not(Box::new(arg)),
            width,
        }
    }

    pub fn concat(hi: Term, lo: Term) -> Result<Term, FormulaError> {
        let width = Width::new(hi.width.bits() + lo.width.bits())?;
        Ok(Term {
            kind: TermKind::Concat(Box::new(hi), Box::new(lo)),
            width,
        })
    }

    /// Bits `lo..=hi` of `arg`, giving a term of width `hi - lo + 1`.
    pub fn extract(arg: Term, lo: u32, hi: u32) -> Result<Term, FormulaError> {
        if lo > hi || hi >= arg.width.bits() {
            return Err(FormulaError::BadExtract {
                lo,
                hi,
                width: arg.width.bits(),
            });
        }
        let width = Width::new(hi - lo + 1)?;
        Ok(Term {
            kind: TermKind::Extract {
                lo,
                hi,
                arg: Box::new(arg),
            },
            width,
        })
    }

    pub fn ite(cond: BoolExpr, then: Term, els: Term) -> Result<Term, FormulaError> {
        same_width(&then, &els)?;
        let width = then.width;
        Ok(Term {
            kind: TermKind::Ite(Box::new(cond), Box::new(then), Box::new(els)),
            width,
        })
    }

    pub fn zero_extend(arg: Term, extra: u32) -> Result<Term, FormulaError> {
        let width = Width::new(arg.width.bits() + extra)?;
        Ok(Term {
            kind: TermKind::ZeroExtend {
                extra,
                arg: Box::new(arg),
            },
            width,
        })
    }

    /// Rewrites every variable occurrence with `f(index, width)`.
    pub(crate) fn map_vars(&self, f: &mut impl FnMut(usize, Width) -> Term) -> Term {
        let kind = match &self.kind {
            TermKind::Var(i) => return f(*i, self.width),
            TermKind::Const(v) => TermKind::Const(*v),
            TermKind::Binary(op, a, b) => {
                TermKind::Binary(*op, Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            TermKind::Not(a) => TermKind::Not(Box::new(a.map_vars(f))),
            TermKind::Concat(a, b) => {
                TermKind::Concat(Box::new(a.map_vars(f)), Box::new(b.map_vars(f)))
            }
            TermKind::Extract { lo, hi, arg } => TermKind::Extract {
                lo: *lo,
                hi: *hi,
                arg: Box::new(arg.map_vars(f)),
            },
            TermKind::Ite(c, a, b) => TermKind::Ite(
                Box::new(c.map_vars(f)),
                Box::new(a.map_vars(f)),
                Box::new(b.map_vars(f)),
            ),
            TermKind::ZeroExtend { extra, arg } => TermKind::ZeroExtend {
                extra: *extra,
                arg: Box::new(arg.map_vars(f)),
            },
        };
        Term {
            kind,
            width: self.width,
        }
    }

    fn check_vars(&self, support: &[Variable]) -> Result<(), FormulaError> {
        match &self.kind {
            TermKind::Const(_) => Ok(()),
            TermKind::Var(i) => {
                let decl = support.get(*i).ok_or(FormulaError::UnknownVariable(*i))?;
                if decl.width != self.width {
                    return Err(FormulaError::VariableWidth {
                        index: *i,
                        used: self.width.bits(),
                        declared: decl.width.bits(),
                    });
                }
                Ok(())
            }
            TermKind::Binary(_, a, b) | TermKind::Concat(a, b) => {
                a.check_vars(support)?;
                b.check_vars(support)
            }
            TermKind::Not(a)
            | TermKind::Extract { arg: a, .. }
            | TermKind::ZeroExtend { arg: a, .. } => a.check_vars(support),
            TermKind::Ite(c, a, b) => {
                c.check_vars(support)?;
                a.check_vars(support)?;
                b.check_vars(support)
            }
        }
    }
}

fn same_width(a: &Term, b: &Term) -> Result<(), FormulaError> {
    if a.width != b.width {
        return Err(FormulaError::WidthMismatch(a.width.bits(), b.width.bits()));
    }
    Ok(())
}

/// Unsigned comparison predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp {
    Eq,
    Ult,
    Ule,
    Ugt,
    Uge,
}

impl Cmp {
    pub fn smt_name(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ult => "bvult",
            Cmp::Ule => "bvule",
            Cmp::Ugt => "bvugt",
            Cmp::Uge => "bvuge",
        }
    }

    pub fn holds(self, a: u128, b: u128) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ult => a < b,
            Cmp::Ule => a <= b,
            Cmp::Ugt => a > b,
            Cmp::Uge => a >= b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Const(bool),
    /// Use [`BoolExpr::atom`] to build; operands must have equal width.
    Atom(Cmp, Term, Term),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Ite(Box<BoolExpr>, Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn atom(cmp: Cmp, lhs: Term, rhs: Term) -> Result<BoolExpr, FormulaError> {
        same_width(&lhs, &rhs)?;
        Ok(BoolExpr::Atom(cmp, lhs, rhs))
    }

    pub fn eq(lhs: Term, rhs: Term) -> Result<BoolExpr, FormulaError> {
        BoolExpr::atom(Cmp::Eq, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(arg))
    }

    pub(crate) fn map_vars(&self, f: &mut impl FnMut(usize, Width) -> Term) -> BoolExpr {
        match self {
            BoolExpr::Const(b) => BoolExpr::Const(*b),
            BoolExpr::Atom(c, a, b) => BoolExpr::Atom(*c, a.map_vars(f), b.map_vars(f)),
            BoolExpr::Not(a) => BoolExpr::Not(Box::new(a.map_vars(f))),
            BoolExpr::And(xs) => BoolExpr::And(xs.iter().map(|x| x.map_vars(f)).collect()),
            BoolExpr::Or(xs) => BoolExpr::Or(xs.iter().map(|x| x.map_vars(f)).collect()),
            BoolExpr::Ite(c, a, b) => BoolExpr::Ite(
                Box::new(c.map_vars(f)),
                Box::new(a.map_vars(f)),
                Box::new(b.map_vars(f)),
            ),
        }
    }

    fn check_vars(&self, support: &[Variable]) -> Result<(), FormulaError> {
        match self {
            BoolExpr::Const(_) => Ok(()),
            BoolExpr::Atom(_, a, b) => {
                same_width(a, b)?;
                a.check_vars(support)?;
                b.check_vars(support)
            }
            BoolExpr::Not(a) => a.check_vars(support),
            BoolExpr::And(xs) | BoolExpr::Or(xs) => {
                xs.iter().try_for_each(|x| x.check_vars(support))
            }
            BoolExpr::Ite(c, a, b) => {
                c.check_vars(support)?;
                a.check_vars(support)?;
                b.check_vars(support)
            }
        }
    }
}

/// Declared variables plus a conjunction of assertions.
///
/// Top-level `true` assertions are dropped at construction, so the empty
/// assertion list is the canonical form of a trivially true body.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    support: Vec<Variable>,
    assertions: Vec<BoolExpr>,
}

impl Formula {
    pub fn new(support: Vec<Variable>, assertions: Vec<BoolExpr>) -> Result<Self, FormulaError> {
        for (i, v) in support.iter().enumerate() {
            if v.width.bits() > MAX_VAR_WIDTH {
                return Err(FormulaError::VariableTooWide(v.width.bits()));
            }
            if support[..i].iter().any(|w| w.name == v.name) {
                return Err(FormulaError::DuplicateVariable(v.name.clone()));
            }
        }
        for a in &assertions {
            a.check_vars(&support)?;
        }
        let assertions = assertions
            .into_iter()
            .filter(|a| *a != BoolExpr::Const(true))
            .collect();
        Ok(Formula {
            support,
            assertions,
        })
    }

    pub fn support(&self) -> &[Variable] {
        &self.support
    }

    pub fn assertions(&self) -> &[BoolExpr] {
        &self.assertions
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.support.iter().position(|v| v.name == name)
    }

    /// Term referring to the named support variable.
    pub fn var_term(&self, name: &str) -> Option<Term> {
        let i = self.var_index(name)?;
        Some(Term::var(i, self.support[i].width))
    }

    /// Largest variable width in the support, if any.
    pub fn max_width(&self) -> Option<Width> {
        self.support.iter().map(|v| v.width).max()
    }

    /// Total number of bits over the support.
    pub fn total_bits(&self) -> u32 {
        self.support.iter().map(|v| v.width.bits()).sum()
    }

    /// This formula with `extra` added as one more conjunct.
    pub fn conjoin(&self, extra: BoolExpr) -> Result<Formula, FormulaError> {
        extra.check_vars(&self.support)?;
        let mut f = self.clone();
        if extra != BoolExpr::Const(true) {
            f.assertions.push(extra);
        }
        Ok(f)
    }
}

/// Values for every support variable, in support order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<u64>,
}

impl Assignment {
    pub fn new(values: Vec<u64>) -> Self {
        Assignment { values }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<u64> {
        self.values.get(index).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks totality and that each value fits its variable's width.
    pub fn check_against(&self, support: &[Variable]) -> Result<(), EvalError> {
        if self.values.len() != support.len() {
            return Err(EvalError::MissingVariable {
                expected: support.len(),
                got: self.values.len(),
            });
        }
        for (v, &x) in support.iter().zip(&self.values) {
            if !v.width.fits(x as u128) {
                return Err(EvalError::ValueTooWide {
                    name: v.name.clone(),
                    width: v.width.bits(),
                });
            }
        }
        Ok(())
    }
}
