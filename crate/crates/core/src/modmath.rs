//! Primes and exact arithmetic modulo a prime.

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ModMathError {
    #[error("no prime >= {0} representable in 64 bits")]
    OutOfRange(u64),
    #[error("{0} is below 2")]
    TooSmall(u64),
    #[error("{coeffs} coefficients but {values} values")]
    LengthMismatch { coeffs: usize, values: usize },
    #[error("coefficient {value} not in Z_{modulus}")]
    CoefficientOutOfRange { value: u64, modulus: u64 },
}

/// A prime modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(value: u64) -> Option<Prime> {
        is_prime(value).then_some(Prime(value))
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    /// Bits needed to write any element of Z_p, i.e. `ceil(log2 p)`.
    pub const fn width_hint(self) -> u32 {
        ceil_log2(self.0)
    }
}

/// `ceil(log2 n)` for `n >= 1`.
pub const fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality test for all 64-bit integers.
///
/// Miller-Rabin with the first twelve primes as witnesses, which has no
/// strong pseudoprimes below 3.3 * 10^24.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Least prime `p >= n`.
pub fn smallest_prime_geq(n: u64) -> Result<Prime, ModMathError> {
    if n < 2 {
        return Err(ModMathError::TooSmall(n));
    }
    let mut c = n;
    loop {
        if is_prime(c) {
            return Ok(Prime(c));
        }
        c = c.checked_add(1).ok_or(ModMathError::OutOfRange(n))?;
    }
}

/// `(sum coeffs[i] * values[i] + offset) mod p`, computed exactly.
pub fn mod_linear_eval(
    coeffs: &[u64],
    values: &[u64],
    offset: u64,
    p: Prime,
) -> Result<u64, ModMathError> {
    if coeffs.len() != values.len() {
        return Err(ModMathError::LengthMismatch {
            coeffs: coeffs.len(),
            values: values.len(),
        });
    }
    let m = p.value();
    if let Some(&bad) = coeffs
        .iter()
        .chain(core::iter::once(&offset))
        .find(|&&c| c >= m)
    {
        return Err(ModMathError::CoefficientOutOfRange {
            value: bad,
            modulus: m,
        });
    }
    Ok(mod_linear_eval_unchecked(coeffs, values, offset, m))
}

/// As [`mod_linear_eval`] without validation; `coeffs` and `offset` must be
/// below `m` and the slices of equal length.
#[inline]
pub(crate) fn mod_linear_eval_unchecked(
    coeffs: &[u64],
    values: &[u64],
    offset: u64,
    m: u64,
) -> u64 {
    let m = m as u128;
    let mut acc = offset as u128;
    for (&a, &x) in coeffs.iter().zip(values) {
        // a < m <= 2^64 and x < 2^64: one product plus a residue fits in u128
        acc = (acc + a as u128 * (x as u128 % m)) % m;
    }
    acc as u64
}
