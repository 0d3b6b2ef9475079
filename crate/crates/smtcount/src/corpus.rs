//! Desk corpus, a random formula generator, and `.smt2` directory loading.

use rand_chacha::rand_core::RngCore;
use smtcount_core::bvformula::{
    parse_smt2, BinOp, BoolExpr, Cmp, Formula, ParseError, Term, Variable, Width,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// A handwritten benchmark with its model count, established independently
/// by blocking-clause enumeration in an external solver.
#[derive(Clone, Copy, Debug)]
pub struct CorpusEntry {
    pub id: &'static str,
    pub vars: &'static [(&'static str, u32)],
    pub body: &'static str,
    pub count: u64,
}

impl CorpusEntry {
    pub fn text(&self) -> String {
        let mut s = String::from("(set-logic QF_BV)\n");
        for (name, w) in self.vars {
            let _ = writeln!(s, "(declare-fun {name} () (_ BitVec {w}))");
        }
        let _ = writeln!(s, "(assert {})", self.body);
        s.push_str("(check-sat)\n");
        s
    }

    pub fn formula(&self) -> Formula {
        parse_smt2(&self.text()).unwrap_or_else(|e| panic!("corpus entry {}: {e}", self.id))
    }

    pub fn space_bits(&self) -> u32 {
        self.vars.iter().map(|(_, w)| w).sum()
    }
}

macro_rules! entry {
    ($id:literal, [$(($n:literal, $w:literal)),*], $body:literal, $count:literal) => {
        CorpusEntry { id: $id, vars: &[$(($n, $w)),*], body: $body, count: $count }
    };
}

/// Thirty formulas over at most 20 bits of assignment space. Five have at
/// most four models and stay on the exact path at `eps = 0.8`. The others
/// have at least two variables and at most a quarter of the width-normalized
/// space as models, which leaves the counter room to refine its cells.
pub const DESK: &[CorpusEntry] = &[
    entry!(
        "mask-eq",
        [("x", 8), ("y", 4)],
        "(= ((_ extract 3 0) x) y)",
        256
    ),
    entry!(
        "add-target",
        [("x", 6), ("y", 6)],
        "(= (bvadd x y) #b000111)",
        64
    ),
    entry!(
        "box",
        [("x", 8), ("y", 8)],
        "(and (bvult x #x20) (bvuge y #xf0))",
        512
    ),
    entry!(
        "mul-inverse",
        [("x", 8), ("y", 8)],
        "(= (bvmul x y) #x01)",
        128
    ),
    entry!(
        "xor-triple",
        [("x", 4), ("y", 4), ("z", 4)],
        "(= (bvxor x y) z)",
        256
    ),
    entry!(
        "urem-eq",
        [("x", 6), ("y", 6)],
        "(= (bvurem x #b000111) (bvurem y #b000111))",
        586
    ),
    entry!(
        "concat-fix",
        [("x", 8), ("y", 8)],
        "(= (concat ((_ extract 3 0) x) ((_ extract 3 0) y)) #x5a)",
        256
    ),
    entry!(
        "wrap-sum",
        [("x", 8), ("y", 8)],
        "(bvult (bvadd x y) #x10)",
        4096
    ),
    entry!(
        "zext-gt",
        [("x", 8), ("y", 4)],
        "(bvugt ((_ zero_extend 4) y) x)",
        120
    ),
    entry!(
        "ite-map",
        [("x", 8), ("y", 8)],
        "(and (= y (ite (bvult x #x80) (bvadd x #x01) (bvnot x))) (bvult y #x40))",
        127
    ),
    entry!(
        "chain",
        [("x", 5), ("y", 5), ("z", 5)],
        "(and (bvult x y) (bvult y z))",
        4960
    ),
    entry!(
        "scaled",
        [("x", 8), ("y", 8)],
        "(and (= (bvmul x #x03) y) (bvult x #x50))",
        80
    ),
    entry!(
        "sum-eq",
        [("x", 3), ("y", 3), ("z", 3), ("w", 3)],
        "(= (bvadd x y) (bvadd z w))",
        512
    ),
    entry!(
        "mixed-width",
        [("x", 2), ("y", 8)],
        "(= ((_ zero_extend 6) x) (bvurem y #x04))",
        256
    ),
    entry!(
        "split-12",
        [("x", 12), ("y", 4)],
        "(and (= ((_ extract 11 8) x) y) (bvult ((_ extract 7 0) x) #x20))",
        512
    ),
    entry!("or-ff", [("x", 8), ("y", 8)], "(= (bvor x y) #xff)", 6561),
    entry!(
        "disjoint",
        [("x", 6), ("y", 6)],
        "(= (bvand x y) #b000000)",
        729
    ),
    entry!(
        "affine",
        [("x", 9), ("y", 9)],
        "(and (= (bvmul x #b000000101) (bvadd y #b000000011)) (bvult y #b100101100))",
        300
    ),
    entry!(
        "residue-pair",
        [("x", 10), ("y", 10)],
        "(and (= (bvurem (bvadd x y) #b0000001111) #b0000000111) (bvult x #b0001000000))",
        4352
    ),
    entry!(
        "ule-pair",
        [("x", 8), ("y", 8)],
        "(and (bvule x #x64) (= (bvand y #x0f) #x05))",
        1616
    ),
    entry!(
        "band-mid",
        [("x", 10), ("y", 10)],
        "(and (bvuge x #b0100000000) (bvult x #b0101000000) (= ((_ extract 9 6) y) #b0011))",
        4096
    ),
    entry!(
        "mul-lt",
        [("x", 6), ("y", 6)],
        "(bvult (bvmul x y) #b000100)",
        384
    ),
    entry!(
        "ite-sel",
        [("x", 6), ("y", 6), ("z", 6)],
        "(= z (ite (bvugt x y) (bvadd x y) (bvxor x y)))",
        4096
    ),
    entry!(
        "overflow-6",
        [("x", 6), ("y", 6)],
        "(and (bvule (bvadd x y) x) (bvult y #b001000))",
        92
    ),
    entry!(
        "concat-lt",
        [("x", 5), ("y", 5)],
        "(bvult (concat x y) #b0001100100)",
        100
    ),
    entry!("point", [("x", 8)], "(= x #x03)", 1),
    entry!("square-one", [("x", 8)], "(= (bvmul x x) #x01)", 4),
    entry!(
        "diag-3",
        [("x", 4), ("y", 4)],
        "(and (= x y) (bvult x #x3))",
        3
    ),
    entry!("unsat", [("x", 8)], "(bvult x #x00)", 0),
    entry!(
        "top-two",
        [("x", 6), ("y", 2)],
        "(and (= ((_ extract 1 0) x) y) (bvuge x #b111110))",
        2
    ),
];

/// Further formulas, used where the corpus size is not fixed. The first
/// seven hash a single variable or are dense. With one variable the level-1
/// prime is about `2^(k/2)`, so a second level-1 component already makes more
/// cells than assignments and most invocations end without an estimate.
pub const EXTRA: &[CorpusEntry] = &[
    entry!("bvult-const", [("x", 8)], "(bvult x #x64)", 100),
    entry!("ule-1000", [("x", 12)], "(bvule x #x3e8)", 1001),
    entry!(
        "nibble-echo",
        [("x", 16)],
        "(= ((_ extract 15 12) x) ((_ extract 3 0) x))",
        4096
    ),
    entry!("ult-3000", [("x", 16)], "(bvult x #x0bb8)", 3000),
    entry!(
        "overflow",
        [("x", 5), ("y", 5)],
        "(bvule (bvadd x y) x)",
        528
    ),
    entry!(
        "nonzero-low",
        [("x", 14)],
        "(and (not (= ((_ extract 6 0) x) #b0000000)) (bvult x #b00010000000000))",
        1016
    ),
    entry!(
        "residue-20",
        [("x", 20)],
        "(= (bvurem x #x003e8) #x0007b)",
        1049
    ),
    entry!("low-bits", [("x", 10)], "(= ((_ extract 1 0) x) #b01)", 256),
    entry!("masked-16", [("x", 16)], "(= (bvand x #x00ff) #x0012)", 256),
    entry!(
        "eq-or-not",
        [("x", 8), ("y", 8)],
        "(or (= x y) (= x (bvnot y)))",
        512
    ),
    entry!(
        "two-eqs",
        [("x", 4), ("y", 4), ("z", 4), ("w", 4), ("v", 4)],
        "(and (= (bvadd x y) z) (= (bvadd w v) #x3))",
        4096
    ),
    entry!(
        "slice-lt",
        [("x", 10), ("y", 10)],
        "(and (= ((_ extract 9 5) x) ((_ extract 4 0) y)) (bvult x y))",
        16368
    ),
];

pub fn find(id: &str) -> Option<&'static CorpusEntry> {
    DESK.iter().chain(EXTRA).find(|e| e.id == id)
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
}

/// Every `*.smt2` file in `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, Formula)>, LoadError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| LoadError::Io { path, source }
    };
    let mut paths = Vec::new();
    for item in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = item.map_err(io(dir))?.path();
        if path.extension().is_some_and(|e| e == "smt2") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path).map_err(io(&path))?;
            let f = parse_smt2(&text).map_err(|source| LoadError::Parse {
                path: path.clone(),
                source,
            })?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, f))
        })
        .collect()
}

/// Random formulas over 1 to 3 variables of widths 2 to 8.
pub struct Generator<R> {
    rng: R,
    support: Vec<Variable>,
}

impl<R: RngCore> Generator<R> {
    pub fn new(rng: R) -> Self {
        Generator {
            rng,
            support: Vec::new(),
        }
    }

    fn below(&mut self, n: u32) -> u32 {
        (self.rng.next_u64() % u64::from(n)) as u32
    }

    fn width(&mut self) -> u32 {
        2 + self.below(7)
    }

    pub fn formula(&mut self) -> Formula {
        let n = 1 + self.below(3) as usize;
        self.support = (0..n)
            .map(|i| {
                let w = Width::new(self.width()).unwrap();
                Variable::new(["x", "y", "z"][i], w).unwrap()
            })
            .collect();
        let conjuncts = 1 + self.below(2);
        let assertions = (0..conjuncts).map(|_| self.boolean(2)).collect();
        Formula::new(self.support.clone(), assertions).expect("generated formulas are well-typed")
    }

    fn boolean(&mut self, depth: u32) -> BoolExpr {
        let pick = if depth == 0 { 0 } else { self.below(5) };
        match pick {
            0..=2 => {
                let w = self.width();
                let cmp = [Cmp::Eq, Cmp::Ult, Cmp::Ule, Cmp::Ugt, Cmp::Uge][self.below(5) as usize];
                let (a, b) = (self.term(w, 2), self.term(w, 2));
                BoolExpr::atom(cmp, a, b).unwrap()
            }
            3 => BoolExpr::not(self.boolean(depth - 1)),
            _ => {
                let parts = vec![self.boolean(depth - 1), self.boolean(depth - 1)];
                if self.below(2) == 0 {
                    BoolExpr::And(parts)
                } else {
                    BoolExpr::Or(parts)
                }
            }
        }
    }

    fn leaf(&mut self, w: u32) -> Term {
        let width = Width::new(w).unwrap();
        if self.below(3) == 0 {
            return Term::constant(u128::from(self.rng.next_u64()) & width.mask(), width).unwrap();
        }
        let i = self.below(self.support.len() as u32) as usize;
        let m = self.support[i].width;
        let v = Term::var(i, m);
        match m.bits().cmp(&w) {
            std::cmp::Ordering::Equal => v,
            std::cmp::Ordering::Less => Term::zero_extend(v, w - m.bits()).unwrap(),
            std::cmp::Ordering::Greater => {
                let lo = self.below(m.bits() - w + 1);
                Term::extract(v, lo, lo + w - 1).unwrap()
            }
        }
    }

    fn term(&mut self, w: u32, depth: u32) -> Term {
        if depth == 0 {
            return self.leaf(w);
        }
        match self.below(9) {
            0 | 1 => self.leaf(w),
            2..=4 => {
                let op = [
                    BinOp::Add,
                    BinOp::Mul,
                    BinOp::URem,
                    BinOp::And,
                    BinOp::Or,
                    BinOp::Xor,
                ][self.below(6) as usize];
                let (a, b) = (self.term(w, depth - 1), self.term(w, depth - 1));
                Term::binary(op, a, b).unwrap()
            }
            5 => Term::bvnot(self.term(w, depth - 1)),
            6 => {
                let c = self.boolean(0);
                let (a, b) = (self.term(w, depth - 1), self.term(w, depth - 1));
                Term::ite(c, a, b).unwrap()
            }
            7 if w >= 2 => {
                let hi = 1 + self.below(w - 1);
                let (a, b) = (self.term(hi, depth - 1), self.term(w - hi, depth - 1));
                Term::concat(a, b).unwrap()
            }
            _ => {
                let wide = w + self.below(4);
                let lo = self.below(wide - w + 1);
                Term::extract(self.term(wide, depth - 1), lo, lo + w - 1).unwrap()
            }
        }
    }
}
