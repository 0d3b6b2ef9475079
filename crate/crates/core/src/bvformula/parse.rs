use super::{BinOp, BoolExpr, Cmp, Formula, FormulaError, Term, Variable, Width};
use crate::sexpr::{Pos, ReadError, Reader, SExpr};
use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unsupported construct `{name}`")]
    Unsupported { pos: Pos, name: String },
    #[error("{pos}: width mismatch: {source}")]
    Width { pos: Pos, source: FormulaError },
    #[error("{pos}: duplicate declaration of `{name}`")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { pos: Pos, name: String },
}

impl From<ReadError> for ParseError {
    fn from(e: ReadError) -> Self {
        ParseError::Syntax {
            pos: e.pos,
            msg: e.msg.to_string(),
        }
    }
}

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn unsupported(pos: Pos, name: impl Into<String>) -> ParseError {
    ParseError::Unsupported {
        pos,
        name: name.into(),
    }
}

/// Parses the supported QF_BV subset of SMT-LIB2 into a [`Formula`].
///
/// `set-logic`, `set-info`, `set-option`, `check-sat` and `exit` are accepted
/// and ignored. Signed operators and everything outside the supported
/// operator set are rejected with the operator name and its position.
pub fn parse_smt2(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::default();
    let mut reader = Reader::new(text);
    while let Some(cmd) = reader.next_expr()? {
        p.command(&cmd)?;
    }
    Formula::new(p.support, p.assertions).map_err(|source| ParseError::Width {
        pos: Pos::default(),
        source,
    })
}

/// Parses one constant literal: `#b...`, `#x...` or `(_ bvN k)`.
pub fn parse_constant(e: &SExpr) -> Result<(u128, Width), ParseError> {
    let pos = e.pos();
    match e {
        SExpr::Atom(s, _) => {
            let (digits, radix_bits) = if let Some(d) = s.strip_prefix("#b") {
                (d, 1)
            } else if let Some(d) = s.strip_prefix("#x") {
                (d, 4)
            } else {
                return Err(syntax(pos, "expected a bit-vector literal"));
            };
            let width = digits.len() as u32 * radix_bits;
            let width = Width::new(width).map_err(|source| ParseError::Width { pos, source })?;
            let value = u128::from_str_radix(digits, 1 << radix_bits)
                .map_err(|_| syntax(pos, "malformed bit-vector literal"))?;
            Ok((value, width))
        }
        SExpr::List(items, _) => match items.as_slice() {
            [SExpr::Atom(u, _), SExpr::Atom(bv, _), SExpr::Atom(k, kpos)] if u == "_" => {
                let digits = bv
                    .strip_prefix("bv")
                    .ok_or_else(|| syntax(pos, "expected (_ bvN k)"))?;
                let value: u128 = digits
                    .parse()
                    .map_err(|_| syntax(pos, "malformed (_ bvN k) literal"))?;
                let width = parse_numeral(k, *kpos)?;
                let width =
                    Width::new(width).map_err(|source| ParseError::Width { pos, source })?;
                if !width.fits(value) {
                    return Err(ParseError::Width {
                        pos,
                        source: FormulaError::ConstantTooWide {
                            value,
                            width: width.bits(),
                        },
                    });
                }
                Ok((value, width))
            }
            _ => Err(syntax(pos, "expected a bit-vector literal")),
        },
    }
}

fn parse_numeral(s: &str, pos: Pos) -> Result<u32, ParseError> {
    s.parse().map_err(|_| syntax(pos, "expected a numeral"))
}

fn is_literal(e: &SExpr) -> bool {
    match e {
        SExpr::Atom(s, _) => s.starts_with("#b") || s.starts_with("#x"),
        SExpr::List(items, _) => {
            matches!(items.as_slice(), [SExpr::Atom(u, _), SExpr::Atom(bv, _), _]
                if u == "_" && bv.starts_with("bv"))
        }
    }
}

#[derive(Default)]
struct Parser {
    support: Vec<Variable>,
    assertions: Vec<BoolExpr>,
}

impl Parser {
    fn command(&mut self, cmd: &SExpr) -> Result<(), ParseError> {
        let pos = cmd.pos();
        let items = cmd
            .as_list()
            .ok_or_else(|| syntax(pos, "expected a command"))?;
        let (head, args) = items
            .split_first()
            .ok_or_else(|| syntax(pos, "empty command"))?;
        let head_name = head
            .as_atom()
            .ok_or_else(|| syntax(head.pos(), "expected a command name"))?;
        match head_name {
            "set-logic" => match args {
                [SExpr::Atom(l, _)] if l == "QF_BV" => Ok(()),
                [SExpr::Atom(l, lpos)] => Err(unsupported(*lpos, l.as_str())),
                _ => Err(syntax(pos, "malformed set-logic")),
            },
            "set-info" | "set-option" | "check-sat" | "exit" => Ok(()),
            "declare-fun" => match args {
                [SExpr::Atom(name, npos), SExpr::List(params, _), sort] if params.is_empty() => {
                    self.declare(name, *npos, sort)
                }
                [SExpr::Atom(_, _), SExpr::List(_, ppos), _] => {
                    Err(unsupported(*ppos, "declare-fun with parameters"))
                }
                _ => Err(syntax(pos, "malformed declare-fun")),
            },
            "declare-const" => match args {
                [SExpr::Atom(name, npos), sort] => self.declare(name, *npos, sort),
                _ => Err(syntax(pos, "malformed declare-const")),
            },
            "assert" => match args {
                [body] => {
                    let b = self.bool_expr(body)?;
                    self.assertions.push(b);
                    Ok(())
                }
                _ => Err(syntax(pos, "assert takes exactly one argument")),
            },
            other => Err(unsupported(head.pos(), other)),
        }
    }

    fn declare(&mut self, name: &str, pos: Pos, sort: &SExpr) -> Result<(), ParseError> {
        if self.support.iter().any(|v| v.name == name) {
            return Err(ParseError::Duplicate {
                pos,
                name: name.to_string(),
            });
        }
        let width = match sort.as_list() {
            Some([SExpr::Atom(u, _), SExpr::Atom(bv, _), SExpr::Atom(k, kpos)])
                if u == "_" && bv == "BitVec" =>
            {
                parse_numeral(k, *kpos)?
            }
            _ => {
                let name = sort.as_atom().unwrap_or("non-bit-vector sort");
                return Err(unsupported(sort.pos(), name));
            }
        };
        let var = Width::new(width)
            .and_then(|w| Variable::new(name, w))
            .map_err(|source| ParseError::Width { pos, source })?;
        self.support.push(var);
        Ok(())
    }

    fn lookup(&self, name: &str, pos: Pos) -> Result<Term, ParseError> {
        let i = self
            .support
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| ParseError::UnknownIdentifier {
                pos,
                name: name.to_string(),
            })?;
        Ok(Term::var(i, self.support[i].width))
    }

    fn bool_expr(&self, e: &SExpr) -> Result<BoolExpr, ParseError> {
        let pos = e.pos();
        match e {
            SExpr::Atom(s, _) => match s.as_str() {
                "true" => Ok(BoolExpr::Const(true)),
                "false" => Ok(BoolExpr::Const(false)),
                _ => Err(syntax(pos, "expected a boolean expression")),
            },
            SExpr::List(items, _) => {
                let (head, args) = items
                    .split_first()
                    .ok_or_else(|| syntax(pos, "empty expression"))?;
                let op = head
                    .as_atom()
                    .ok_or_else(|| syntax(head.pos(), "expected an operator"))?;
                let cmp = match op {
                    "=" => Some(Cmp::Eq),
                    "bvult" => Some(Cmp::Ult),
                    "bvule" => Some(Cmp::Ule),
                    "bvugt" => Some(Cmp::Ugt),
                    "bvuge" => Some(Cmp::Uge),
                    _ => None,
                };
                if let Some(cmp) = cmp {
                    let [a, b] = args else {
                        return Err(syntax(pos, "comparison takes two arguments"));
                    };
                    if cmp == Cmp::Eq && self.looks_boolean(a) {
                        return Err(unsupported(head.pos(), "= over Bool"));
                    }
                    let (a, b) = (self.term(a)?, self.term(b)?);
                    return BoolExpr::atom(cmp, a, b)
                        .map_err(|source| ParseError::Width { pos, source });
                }
                match op {
                    "and" => Ok(BoolExpr::And(
                        args.iter()
                            .map(|a| self.bool_expr(a))
                            .collect::<Result<_, _>>()?,
                    )),
                    "or" => Ok(BoolExpr::Or(
                        args.iter()
                            .map(|a| self.bool_expr(a))
                            .collect::<Result<_, _>>()?,
                    )),
                    "not" => match args {
                        [a] => Ok(BoolExpr::not(self.bool_expr(a)?)),
                        _ => Err(syntax(pos, "not takes one argument")),
                    },
                    "ite" => match args {
                        [c, a, b] => Ok(BoolExpr::Ite(
                            Box::new(self.bool_expr(c)?),
                            Box::new(self.bool_expr(a)?),
                            Box::new(self.bool_expr(b)?),
                        )),
                        _ => Err(syntax(pos, "ite takes three arguments")),
                    },
                    _ if is_bv_operator(op) => {
                        Err(syntax(pos, "expected a boolean expression, found a term"))
                    }
                    other => Err(unsupported(head.pos(), other)),
                }
            }
        }
    }

    fn looks_boolean(&self, e: &SExpr) -> bool {
        match e {
            SExpr::Atom(s, _) => s == "true" || s == "false",
            SExpr::List(items, _) => matches!(
                items.first().and_then(SExpr::as_atom),
                Some("and" | "or" | "not" | "=" | "bvult" | "bvule" | "bvugt" | "bvuge")
            ),
        }
    }

    fn term(&self, e: &SExpr) -> Result<Term, ParseError> {
        let pos = e.pos();
        let width_err = |source| ParseError::Width { pos, source };
        if is_literal(e) {
            let (v, w) = parse_constant(e)?;
            return Term::constant(v, w).map_err(width_err);
        }
        match e {
            SExpr::Atom(s, _) => self.lookup(s, pos),
            SExpr::List(items, _) => {
                let (head, args) = items
                    .split_first()
                    .ok_or_else(|| syntax(pos, "empty expression"))?;
                match head {
                    SExpr::List(indexed, hpos) => self.indexed(indexed, *hpos, args, pos),
                    SExpr::Atom(op, hpos) => {
                        let bin = match op.as_str() {
                            "bvadd" => Some(BinOp::Add),
                            "bvmul" => Some(BinOp::Mul),
                            "bvurem" => Some(BinOp::URem),
                            "bvand" => Some(BinOp::And),
                            "bvor" => Some(BinOp::Or),
                            "bvxor" => Some(BinOp::Xor),
                            _ => None,
                        };
                        if let Some(bin) = bin {
                            // bvurem is binary; the others associate to the left
                            if args.len() < 2 || (bin == BinOp::URem && args.len() != 2) {
                                return Err(syntax(pos, "wrong number of arguments"));
                            }
                            let mut acc = self.term(&args[0])?;
                            for a in &args[1..] {
                                acc = Term::binary(bin, acc, self.term(a)?).map_err(width_err)?;
                            }
                            return Ok(acc);
                        }
                        match op.as_str() {
                            "bvnot" => match args {
                                [a] => Ok(Term::bvnot(self.term(a)?)),
                                _ => Err(syntax(pos, "bvnot takes one argument")),
                            },
                            "concat" => {
                                if args.len() < 2 {
                                    return Err(syntax(pos, "concat takes two or more arguments"));
                                }
                                let mut acc = self.term(&args[0])?;
                                for a in &args[1..] {
                                    acc = Term::concat(acc, self.term(a)?).map_err(width_err)?;
                                }
                                Ok(acc)
                            }
                            "ite" => match args {
                                [c, a, b] => {
                                    Term::ite(self.bool_expr(c)?, self.term(a)?, self.term(b)?)
                                        .map_err(width_err)
                                }
                                _ => Err(syntax(pos, "ite takes three arguments")),
                            },
                            other => Err(unsupported(*hpos, other)),
                        }
                    }
                }
            }
        }
    }

    fn indexed(
        &self,
        indexed: &[SExpr],
        hpos: Pos,
        args: &[SExpr],
        pos: Pos,
    ) -> Result<Term, ParseError> {
        let width_err = |source| ParseError::Width { pos, source };
        match indexed {
            [SExpr::Atom(u, _), SExpr::Atom(name, npos), idx @ ..] if u == "_" => {
                let nums = idx
                    .iter()
                    .map(|i| match i {
                        SExpr::Atom(s, p) => parse_numeral(s, *p),
                        other => Err(syntax(other.pos(), "expected a numeral")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let [arg] = args else {
                    return Err(syntax(pos, "indexed operator takes one argument"));
                };
                match (name.as_str(), nums.as_slice()) {
                    ("extract", [hi, lo]) => {
                        Term::extract(self.term(arg)?, *lo, *hi).map_err(width_err)
                    }
                    ("zero_extend", [extra]) => {
                        Term::zero_extend(self.term(arg)?, *extra).map_err(width_err)
                    }
                    ("extract" | "zero_extend", _) => Err(syntax(*npos, "wrong number of indices")),
                    (other, _) => Err(unsupported(*npos, other)),
                }
            }
            _ => Err(syntax(hpos, "expected an indexed operator")),
        }
    }
}

fn is_bv_operator(op: &str) -> bool {
    matches!(
        op,
        "bvadd" | "bvmul" | "bvurem" | "bvand" | "bvor" | "bvxor" | "bvnot" | "concat"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvformula::TermKind;

    #[test]
    fn declare_and_assert() {
        let f = parse_smt2(
            "(set-logic QF_BV)\n(declare-fun x () (_ BitVec 4))\n(assert (bvult x #x5))\n(check-sat)\n(exit)",
        )
        .unwrap();
        assert_eq!(f.support().len(), 1);
        assert_eq!(f.support()[0].name, "x");
        assert_eq!(f.support()[0].width.bits(), 4);
        let expected = BoolExpr::atom(
            Cmp::Ult,
            Term::var(0, Width::new(4).unwrap()),
            Term::constant(5, Width::new(4).unwrap()).unwrap(),
        )
        .unwrap();
        assert_eq!(f.assertions(), &[expected]);
    }

    #[test]
    fn extract_atom() {
        let f = parse_smt2("(declare-fun y () (_ BitVec 8)) (assert (= ((_ extract 3 0) y) #x0))")
            .unwrap();
        let BoolExpr::Atom(Cmp::Eq, lhs, rhs) = &f.assertions()[0] else {
            panic!("expected an equality atom");
        };
        match lhs.kind() {
            TermKind::Extract { lo, hi, .. } => assert_eq!((*lo, *hi), (0, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(rhs.kind(), &TermKind::Const(0));
    }

    #[test]
    fn signed_division_rejected_with_name_and_position() {
        let err = parse_smt2(
            "(declare-fun x () (_ BitVec 4)) (declare-fun y () (_ BitVec 4))\n(assert (bvsdiv x y))",
        )
        .unwrap_err();
        match &err {
            ParseError::Unsupported { name, pos } => {
                assert_eq!(name, "bvsdiv");
                assert_eq!(*pos, Pos { line: 2, col: 10 });
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("bvsdiv"));
    }

    #[test]
    fn signed_predicate_rejected() {
        let err = parse_smt2("(declare-fun x () (_ BitVec 4)) (assert (bvslt x #x1))").unwrap_err();
        assert!(matches!(err, ParseError::Unsupported { ref name, .. } if name == "bvslt"));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(
            parse_smt2("(declare-fun x () (_ BitVec 4)) (declare-fun x () (_ BitVec 4))"),
            Err(ParseError::Duplicate { .. })
        ));
        assert!(matches!(
            parse_smt2("(declare-fun x () (_ BitVec 4)) (assert (= x #b101))"),
            Err(ParseError::Width { .. })
        ));
        assert!(matches!(
            parse_smt2("(assert (= z #b101))"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_smt2("(declare-fun x () (_ BitVec 4)) (assert (= x #b0101)"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_smt2("(declare-fun b () Bool)"),
            Err(ParseError::Unsupported { .. })
        ));
        assert!(matches!(
            parse_smt2("(set-logic QF_LIA)"),
            Err(ParseError::Unsupported { .. })
        ));
    }

    #[test]
    fn constant_notations_agree() {
        let e = crate::sexpr::read_all("#b0101 #x5 (_ bv5 4)").unwrap();
        let vals: Vec<_> = e.iter().map(|x| parse_constant(x).unwrap()).collect();
        assert_eq!(vals[0], (5, Width::new(4).unwrap()));
        assert_eq!(vals[1], vals[0]);
        assert_eq!(vals[2], vals[0]);
        let bad = crate::sexpr::read_all("(_ bv16 4)").unwrap();
        assert!(parse_constant(&bad[0]).is_err());
    }

    #[test]
    fn nary_ops_associate_left() {
        let f = parse_smt2(
            "(declare-fun x () (_ BitVec 4)) (assert (= (bvadd x x x) (concat #b01 #b1 #b0)))",
        )
        .unwrap();
        let BoolExpr::Atom(_, lhs, rhs) = &f.assertions()[0] else {
            panic!()
        };
        assert_eq!(lhs.eval(&[3]), 9);
        assert_eq!(rhs.eval(&[0]), 0b0110);
    }
}
