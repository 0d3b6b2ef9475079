use super::{BoolExpr, Formula, Term, Variable, Width};
use alloc::vec::Vec;

/// Widens every variable to the largest width `k` in the support.
///
/// A variable `x` of width `m < k` becomes a width-`k` variable of the same
/// name; its occurrences are replaced by `extract(x, 0, m-1)` and the
/// conjunct `extract(x, m, k-1) = 0` is added, so the model count and the
/// support size are both preserved.
pub fn normalize_widths(f: &Formula) -> Formula {
    let Some(k) = f.max_width() else {
        return f.clone();
    };
    if f.support().iter().all(|v| v.width == k) {
        return f.clone();
    }
    let support: Vec<Variable> = f
        .support()
        .iter()
        .map(|v| Variable {
            name: v.name.clone(),
            width: k,
        })
        .collect();
    let mut widen = |i: usize, w: Width| {
        let wide = Term::var(i, k);
        if w == k {
            wide
        } else {
            // w < k, so the slice is in range
            Term::extract(wide, 0, w.bits() - 1).expect("slice within widened variable")
        }
    };
    let mut assertions: Vec<BoolExpr> = f
        .assertions()
        .iter()
        .map(|a| a.map_vars(&mut widen))
        .collect();
    for (i, v) in f.support().iter().enumerate() {
        let m = v.width.bits();
        if m < k.bits() {
            let high = Term::extract(Term::var(i, k), m, k.bits() - 1).expect("high bits in range");
            let zero = Term::constant(0, high.width()).expect("zero fits");
            assertions.push(BoolExpr::eq(high, zero).expect("equal widths"));
        }
    }
    Formula::new(support, assertions).expect("normalization preserves well-typedness")
}
