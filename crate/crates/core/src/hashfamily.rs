//! The sliced word-level hash family over `n` variables of width `k`.
//!
//! At slice level `j` every variable is cut into slices of width
//! `ceil(k / 2^j)` (the last slice of a variable keeps whatever bits remain)
//! and a component hash is `(sum a_m * X_m + b) mod p_j`, where `p_j` is the
//! least prime at least `2^(slice width)`. A hash function is a tuple holding
//! `C[j]` independent components at each level `j`; it partitions the
//! assignment space into `prod_j p_j^C[j]` cells.
//!
//! Level widths run `k, ceil(k/2), ceil(k/4), ...` down to 1, so there are
//! `ceil(log2 k) + 1` levels; the last one (width 1, `p = 2`) gives plain
//! parity constraints.

use crate::bvformula::{BoolExpr, Term, Width, MAX_TERM_WIDTH};
use crate::modmath::{ceil_log2, mod_linear_eval_unchecked, smallest_prime_geq, Prime};
use alloc::sync::Arc;
use alloc::vec::Vec;
use num_bigint::BigUint;
use rand_core::RngCore;

/// Largest common width the family supports; level-0 primes must fit in 64 bits.
pub const MAX_HASH_WIDTH: u32 = 63;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HashError {
    #[error("variable count must be at least 1")]
    NoVariables,
    #[error("width {0} unsupported (1..={MAX_HASH_WIDTH})")]
    BadWidth(u32),
    #[error("C vector is empty")]
    EmptyC,
    #[error("C has {given} levels but width {k} only has {levels}")]
    TooManyLevels { given: usize, levels: usize, k: u32 },
    #[error("assignment has {got} values, expected {expected}")]
    Arity { expected: usize, got: usize },
    #[error("value {value} does not fit in {k} bits")]
    ValueTooWide { value: u64, k: u32 },
    #[error("cell has {got} targets but the hash has {expected} components")]
    CellMismatch { expected: usize, got: usize },
    #[error("constraint at level {level} needs a {width}-bit accumulator")]
    AccumulatorTooWide { level: usize, width: u32 },
}

/// One slice `extract(x_var, lo, hi)` of a support variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SliceRef {
    pub var_index: usize,
    pub lo: u32,
    pub hi: u32,
}

impl SliceRef {
    pub fn width(&self) -> u32 {
        self.hi - self.lo + 1
    }

    #[inline]
    fn value(&self, values: &[u64]) -> u64 {
        let w = self.width();
        let v = values[self.var_index] >> self.lo;
        if w >= 64 {
            v
        } else {
            v & ((1u64 << w) - 1)
        }
    }
}

/// Slice width and modulus of one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Level {
    pub slice_width: u32,
    pub prime: Prime,
}

/// Parameters `(n, k, C)` identifying a member of the family, plus the
/// derived per-level slice widths and primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashConfig {
    n: usize,
    k: u32,
    counts: Vec<u32>,
    levels: Arc<[Level]>,
    layouts: Arc<[Arc<[SliceRef]>]>,
}

/// Levels available for width `k`: slice widths `ceil(k/2^j)` down to 1.
pub fn level_count(k: u32) -> usize {
    ceil_log2(k as u64) as usize + 1
}

/// Width and prime of every level for word width `k`.
pub fn levels_for_width(k: u32) -> Result<Vec<Level>, HashError> {
    if k == 0 || k > MAX_HASH_WIDTH {
        return Err(HashError::BadWidth(k));
    }
    (0..level_count(k))
        .map(|j| {
            let slice_width = k.div_ceil(1 << j);
            let prime =
                smallest_prime_geq(1u64 << slice_width).map_err(|_| HashError::BadWidth(k))?;
            Ok(Level { slice_width, prime })
        })
        .collect()
}

/// The `ceil(k / w)` slices per variable at level `j`, variable-major.
pub fn slice_layout_for(n: usize, k: u32, slice_width: u32) -> Vec<SliceRef> {
    let per_var = k.div_ceil(slice_width);
    (0..n)
        .flat_map(|var_index| {
            (0..per_var).map(move |s| {
                let lo = s * slice_width;
                SliceRef {
                    var_index,
                    lo,
                    hi: (lo + slice_width - 1).min(k - 1),
                }
            })
        })
        .collect()
}

impl HashConfig {
    pub fn new(n: usize, k: u32, counts: &[u32]) -> Result<Self, HashError> {
        if n == 0 {
            return Err(HashError::NoVariables);
        }
        let levels = levels_for_width(k)?;
        if counts.is_empty() {
            return Err(HashError::EmptyC);
        }
        if counts.len() > levels.len() {
            return Err(HashError::TooManyLevels {
                given: counts.len(),
                levels: levels.len(),
                k,
            });
        }
        let layouts = levels
            .iter()
            .map(|l| Arc::from(slice_layout_for(n, k, l.slice_width)))
            .collect::<Vec<Arc<[SliceRef]>>>();
        Ok(HashConfig {
            n,
            k,
            counts: counts.to_vec(),
            levels: levels.into(),
            layouts: layouts.into(),
        })
    }

    /// Same `n` and `k` with a different `C` vector; reuses the level tables.
    pub fn with_counts(&self, counts: &[u32]) -> Result<Self, HashError> {
        if counts.is_empty() {
            return Err(HashError::EmptyC);
        }
        if counts.len() > self.levels.len() {
            return Err(HashError::TooManyLevels {
                given: counts.len(),
                levels: self.levels.len(),
                k: self.k,
            });
        }
        Ok(HashConfig {
            counts: counts.to_vec(),
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// The `C` vector.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Every level available at this width, including those beyond `C`.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn prime(&self, level: usize) -> Prime {
        self.levels[level].prime
    }

    pub fn slice_layout(&self, level: usize) -> &[SliceRef] {
        &self.layouts[level]
    }

    pub fn component_count(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Number of cells `prod_j p_j^C[j]`.
    pub fn num_cells(&self) -> BigUint {
        num_cells(&self.levels, &self.counts)
    }
}

/// `prod_j p_j^counts[j]` over the given levels.
pub fn num_cells(levels: &[Level], counts: &[u32]) -> BigUint {
    counts
        .iter()
        .zip(levels)
        .fold(BigUint::from(1u32), |acc, (&c, l)| {
            acc * BigUint::from(l.prime.value()).pow(c)
        })
}

/// Builds the configuration for `H(n, k, C)`.
pub fn make_config(n: usize, k: u32, counts: &[u32]) -> Result<HashConfig, HashError> {
    HashConfig::new(n, k, counts)
}

/// One linear component `(sum a_m * X_m + b) mod p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashComponent {
    pub level: usize,
    pub modulus: Prime,
    pub slices: Arc<[SliceRef]>,
    pub coeffs: Vec<u64>,
    pub offset: u64,
}

impl HashComponent {
    #[inline]
    fn eval(&self, values: &[u64], scratch: &mut Vec<u64>) -> u64 {
        scratch.clear();
        scratch.extend(self.slices.iter().map(|s| s.value(values)));
        mod_linear_eval_unchecked(&self.coeffs, scratch, self.offset, self.modulus.value())
    }

    /// Width of the overflow-free accumulator:
    /// `2 * ceil(log2 p) + ceil(log2(slices + 1))`.
    pub fn accumulator_width(&self) -> u32 {
        2 * self.modulus.width_hint() + ceil_log2(self.slices.len() as u64 + 1)
    }
}

/// A sampled member of the family: `C[j]` components at each level `j`,
/// ordered by level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HashFunction {
    config: HashConfig,
    components: Vec<HashComponent>,
}

/// Target value for each component of a hash function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub target: Vec<u64>,
}

/// Uniform draw from `[0, m)` by rejection, free of modulo bias.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, m: u64) -> u64 {
    debug_assert!(m > 0);
    // 2^64 mod m
    let rem = (u64::MAX % m + 1) % m;
    loop {
        let x = rng.next_u64();
        if rem == 0 || x <= u64::MAX - rem {
            return x % m;
        }
    }
}

/// Draws every coefficient and offset independently and uniformly.
pub fn sample_hash<R: RngCore + ?Sized>(config: &HashConfig, rng: &mut R) -> HashFunction {
    let mut components = Vec::with_capacity(config.component_count());
    for (level, &count) in config.counts.iter().enumerate() {
        let prime = config.prime(level);
        let slices = config.layouts[level].clone();
        for _ in 0..count {
            let coeffs = (0..slices.len())
                .map(|_| uniform_below(rng, prime.value()))
                .collect();
            let offset = uniform_below(rng, prime.value());
            components.push(HashComponent {
                level,
                modulus: prime,
                slices: slices.clone(),
                coeffs,
                offset,
            });
        }
    }
    HashFunction {
        config: config.clone(),
        components,
    }
}

/// Draws a uniformly random cell of `h`.
pub fn sample_cell<R: RngCore + ?Sized>(h: &HashFunction, rng: &mut R) -> Cell {
    Cell {
        target: h
            .components
            .iter()
            .map(|c| uniform_below(rng, c.modulus.value()))
            .collect(),
    }
}

impl HashFunction {
    /// Assembles a hash function from explicit components. Each component's
    /// level, modulus and slices must match `config`.
    pub fn from_components(
        config: HashConfig,
        components: Vec<HashComponent>,
    ) -> Result<Self, HashError> {
        let mut expected = Vec::new();
        for (level, &c) in config.counts.iter().enumerate() {
            expected.extend(core::iter::repeat_n(level, c as usize));
        }
        let ok = expected.len() == components.len()
            && components.iter().zip(&expected).all(|(comp, &level)| {
                comp.level == level
                    && comp.modulus == config.prime(level)
                    && *comp.slices == *config.slice_layout(level)
                    && comp.coeffs.len() == comp.slices.len()
                    && comp
                        .coeffs
                        .iter()
                        .chain(core::iter::once(&comp.offset))
                        .all(|&a| a < comp.modulus.value())
            });
        if !ok {
            return Err(HashError::CellMismatch {
                expected: expected.len(),
                got: components.len(),
            });
        }
        Ok(HashFunction { config, components })
    }

    pub fn config(&self) -> &HashConfig {
        &self.config
    }

    pub fn components(&self) -> &[HashComponent] {
        &self.components
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    fn check_values(&self, values: &[u64]) -> Result<(), HashError> {
        if values.len() != self.config.n {
            return Err(HashError::Arity {
                expected: self.config.n,
                got: values.len(),
            });
        }
        let k = self.config.k;
        if let Some(&value) = values.iter().find(|&&v| k < 64 && v >> k != 0) {
            return Err(HashError::ValueTooWide { value, k });
        }
        Ok(())
    }

    /// Value of every component on the assignment `values`.
    pub fn eval(&self, values: &[u64]) -> Result<Vec<u64>, HashError> {
        self.check_values(values)?;
        let mut scratch = Vec::new();
        Ok(self
            .components
            .iter()
            .map(|c| c.eval(values, &mut scratch))
            .collect())
    }

    /// Whether `values` hashes to `cell`. Inputs are trusted to be in range.
    #[inline]
    pub fn maps_to(&self, values: &[u64], cell: &Cell, scratch: &mut Vec<u64>) -> bool {
        self.components
            .iter()
            .zip(&cell.target)
            .all(|(c, &t)| c.eval(values, scratch) == t)
    }
}

/// `h(a)` for an assignment over the `n` width-`k` variables.
pub fn eval_hash(
    h: &HashFunction,
    a: &crate::bvformula::Assignment,
) -> Result<Vec<u64>, HashError> {
    h.eval(a.values())
}

/// The constraint `h(X) = cell` as a bit-vector formula fragment over
/// support variables `0..n` of width `k`.
///
/// Each component becomes
/// `(bvurem (sum zext(a_m) * zext(X_m) + zext(b)) p) = alpha`
/// evaluated at the accumulator width of [`HashComponent::accumulator_width`],
/// which is wide enough that the sum never wraps.
pub fn encode_constraint(h: &HashFunction, cell: &Cell) -> Result<BoolExpr, HashError> {
    if cell.target.len() != h.components.len() {
        return Err(HashError::CellMismatch {
            expected: h.components.len(),
            got: cell.target.len(),
        });
    }
    if h.components.is_empty() {
        return Ok(BoolExpr::Const(true));
    }
    let k = Width::new(h.config.k).expect("config width is valid");
    let mut conjuncts = Vec::with_capacity(h.components.len());
    for (comp, &alpha) in h.components.iter().zip(&cell.target) {
        conjuncts.push(encode_component(comp, alpha, k)?);
    }
    Ok(BoolExpr::And(conjuncts))
}

fn encode_component(comp: &HashComponent, alpha: u64, k: Width) -> Result<BoolExpr, HashError> {
    let acc_bits = comp.accumulator_width();
    let too_wide = HashError::AccumulatorTooWide {
        level: comp.level,
        width: acc_bits,
    };
    if acc_bits > MAX_TERM_WIDTH {
        return Err(too_wide);
    }
    let acc = Width::new(acc_bits).expect("checked above");
    let coeff_bits = comp.modulus.width_hint();
    let coeff_width = Width::new(coeff_bits).expect("p >= 2");
    let widen = |t: Term| {
        let extra = acc_bits - t.width().bits();
        Term::zero_extend(t, extra).expect("within accumulator width")
    };
    let mut sum: Option<Term> = None;
    for (slice, &a) in comp.slices.iter().zip(&comp.coeffs) {
        let coeff = widen(Term::constant(a as u128, coeff_width).expect("a < p"));
        let x = Term::extract(Term::var(slice.var_index, k), slice.lo, slice.hi)
            .expect("slice in range");
        let product = Term::bvmul(coeff, widen(x)).expect("same width");
        sum = Some(match sum {
            None => product,
            Some(s) => Term::bvadd(s, product).expect("same width"),
        });
    }
    let b = widen(Term::constant(comp.offset as u128, coeff_width).expect("b < p"));
    let sum = match sum {
        None => b,
        Some(s) => Term::bvadd(s, b).expect("same width"),
    };
    let p = Term::constant(comp.modulus.value() as u128, acc).map_err(|_| too_wide.clone())?;
    let lhs = Term::bvurem(sum, p).expect("same width");
    let rhs = Term::constant(alpha as u128, acc).map_err(|_| too_wide)?;
    Ok(BoolExpr::eq(lhs, rhs).expect("same width"))
}
