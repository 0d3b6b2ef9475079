use super::{Assignment, BinOp, BoolExpr, Formula, Term, TermKind};
use alloc::string::String;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("assignment has {got} values but the support has {expected} variables")]
    MissingVariable { expected: usize, got: usize },
    #[error("value for `{name}` does not fit in {width} bits")]
    ValueTooWide { name: String, width: u32 },
}

/// Whether `a` is a model of `f`, under unsigned wrap-around semantics.
pub fn evaluate(f: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    a.check_against(f.support())?;
    Ok(f.holds(a.values()))
}

impl Formula {
    /// Evaluation without the totality/width check on `values`.
    ///
    /// Callers must pass one in-range value per support variable.
    pub fn holds(&self, values: &[u64]) -> bool {
        self.assertions().iter().all(|b| b.eval(values))
    }
}

impl BoolExpr {
    pub fn eval(&self, values: &[u64]) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Atom(cmp, a, b) => cmp.holds(a.eval(values), b.eval(values)),
            BoolExpr::Not(a) => !a.eval(values),
            BoolExpr::And(xs) => xs.iter().all(|x| x.eval(values)),
            BoolExpr::Or(xs) => xs.iter().any(|x| x.eval(values)),
            BoolExpr::Ite(c, a, b) => {
                if c.eval(values) {
                    a.eval(values)
                } else {
                    b.eval(values)
                }
            }
        }
    }
}

impl Term {
    pub fn eval(&self, values: &[u64]) -> u128 {
        let mask = self.width().mask();
        match self.kind() {
            TermKind::Const(v) => *v,
            TermKind::Var(i) => values[*i] as u128,
            TermKind::Binary(op, a, b) => {
                let (x, y) = (a.eval(values), b.eval(values));
                match op {
                    BinOp::Add => x.wrapping_add(y) & mask,
                    BinOp::Mul => x.wrapping_mul(y) & mask,
                    // SMT-LIB: x urem 0 = x
                    BinOp::URem => {
                        if y == 0 {
                            x
                        } else {
                            x % y
                        }
                    }
                    BinOp::And => x & y,
                    BinOp::Or => x | y,
                    BinOp::Xor => x ^ y,
                }
            }
            TermKind::Not(a) => !a.eval(values) & mask,
            TermKind::Concat(hi, lo) => (hi.eval(values) << lo.width().bits()) | lo.eval(values),
            TermKind::Extract { lo, arg, .. } => (arg.eval(values) >> lo) & mask,
            TermKind::Ite(c, a, b) => {
                if c.eval(values) {
                    a.eval(values)
                } else {
                    b.eval(values)
                }
            }
            TermKind::ZeroExtend { arg, .. } => arg.eval(values),
        }
    }
}
