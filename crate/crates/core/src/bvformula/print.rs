use super::{BoolExpr, Formula, Term, TermKind, Variable};
use alloc::string::String;
use core::fmt::Write;

/// Renders `f` as SMT-LIB2: the logic, one declaration per variable and one
/// `assert` per conjunct. Constants are written in `#b` notation.
pub fn print_smt2(f: &Formula) -> String {
    let mut out = String::from("(set-logic QF_BV)\n");
    for v in f.support() {
        let _ = writeln!(
            out,
            "(declare-fun {} () (_ BitVec {}))",
            quote_symbol(&v.name),
            v.width.bits()
        );
    }
    if f.assertions().is_empty() {
        out.push_str("(assert true)\n");
    }
    for a in f.assertions() {
        out.push_str("(assert ");
        write_bool(&mut out, a, f.support());
        out.push_str(")\n");
    }
    out
}

/// Renders a single boolean expression over `support`.
pub fn print_bool(b: &BoolExpr, support: &[Variable]) -> String {
    let mut out = String::new();
    write_bool(&mut out, b, support);
    out
}

/// Quotes symbols that are not simple SMT-LIB identifiers.
pub fn quote_symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        String::from(name)
    } else {
        let mut s = String::from("|");
        s.push_str(name);
        s.push('|');
        s
    }
}

pub fn binary_literal(value: u128, bits: u32) -> String {
    let mut s = String::with_capacity(bits as usize + 2);
    s.push_str("#b");
    for i in (0..bits).rev() {
        s.push(if (value >> i) & 1 == 1 { '1' } else { '0' });
    }
    s
}

fn write_bool(out: &mut String, b: &BoolExpr, support: &[Variable]) {
    match b {
        BoolExpr::Const(true) => out.push_str("true"),
        BoolExpr::Const(false) => out.push_str("false"),
        BoolExpr::Atom(cmp, x, y) => {
            out.push('(');
            out.push_str(cmp.smt_name());
            out.push(' ');
            write_term(out, x, support);
            out.push(' ');
            write_term(out, y, support);
            out.push(')');
        }
        BoolExpr::Not(a) => {
            out.push_str("(not ");
            write_bool(out, a, support);
            out.push(')');
        }
        BoolExpr::And(xs) | BoolExpr::Or(xs) => {
            out.push_str(if matches!(b, BoolExpr::And(_)) {
                "(and"
            } else {
                "(or"
            });
            for x in xs {
                out.push(' ');
                write_bool(out, x, support);
            }
            out.push(')');
        }
        BoolExpr::Ite(c, x, y) => {
            out.push_str("(ite ");
            write_bool(out, c, support);
            out.push(' ');
            write_bool(out, x, support);
            out.push(' ');
            write_bool(out, y, support);
            out.push(')');
        }
    }
}

fn write_term(out: &mut String, t: &Term, support: &[Variable]) {
    match t.kind() {
        TermKind::Const(v) => out.push_str(&binary_literal(*v, t.width().bits())),
        TermKind::Var(i) => out.push_str(&quote_symbol(&support[*i].name)),
        TermKind::Binary(op, a, b) => {
            out.push('(');
            out.push_str(op.smt_name());
            out.push(' ');
            write_term(out, a, support);
            out.push(' ');
            write_term(out, b, support);
            out.push(')');
        }
        TermKind::Not(a) => {
            out.push_str("(bvnot ");
            write_term(out, a, support);
            out.push(')');
        }
        TermKind::Concat(a, b) => {
            out.push_str("(concat ");
            write_term(out, a, support);
            out.push(' ');
            write_term(out, b, support);
            out.push(')');
        }
        TermKind::Extract { lo, hi, arg } => {
            let _ = write!(out, "((_ extract {hi} {lo}) ");
            write_term(out, arg, support);
            out.push(')');
        }
        TermKind::Ite(c, a, b) => {
            out.push_str("(ite ");
            write_bool(out, c, support);
            out.push(' ');
            write_term(out, a, support);
            out.push(' ');
            write_term(out, b, support);
            out.push(')');
        }
        TermKind::ZeroExtend { extra, arg } => {
            let _ = write!(out, "((_ zero_extend {extra}) ");
            write_term(out, arg, support);
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvformula::parse_smt2;

    #[test]
    fn declarations_and_binary_constants() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 4)) (assert (bvult x #x5))").unwrap();
        let text = print_smt2(&f);
        assert!(text.contains("(declare-fun x () (_ BitVec 4))"));
        assert!(text.contains("(bvult x #b0101)"));
        assert_eq!(parse_smt2(&text).unwrap(), f);
    }

    #[test]
    fn empty_body_prints_true() {
        let f = parse_smt2("(declare-fun x () (_ BitVec 4))").unwrap();
        let text = print_smt2(&f);
        assert!(text.contains("(assert true)"));
        assert_eq!(parse_smt2(&text).unwrap(), f);
    }

    #[test]
    fn odd_names_are_quoted() {
        let f = parse_smt2("(declare-fun |a b| () (_ BitVec 2)) (assert (= |a b| #b01))").unwrap();
        let text = print_smt2(&f);
        assert!(text.contains("|a b|"));
        assert_eq!(parse_smt2(&text).unwrap(), f);
    }

    #[test]
    fn every_construct_round_trips() {
        let src = "(declare-fun x () (_ BitVec 4)) (declare-fun y () (_ BitVec 8))
            (assert (or (bvule (bvmul x x) (bvurem x #x3)) (not (bvuge x #x2))))
            (assert (ite (bvugt ((_ extract 7 4) y) x) true false))
            (assert (= (concat x (bvnot x)) (bvxor y (bvor y (bvand y ((_ zero_extend 4) x))))))
            (assert (= (ite (= x #x1) x (bvadd x #x1)) #x2))
            (assert (and))";
        let f = parse_smt2(src).unwrap();
        assert_eq!(parse_smt2(&print_smt2(&f)).unwrap(), f);
    }
}
