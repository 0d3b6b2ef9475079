//! Corpus quality runs and statistical checks of the hash family.

use crate::backend::{AnyOracle, OracleConfig};
use num_bigint::BigUint;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use smtcount_core::bvformula::normalize_widths;
use smtcount_core::counter::{approx_mc_normalized, find_median, Params};
use smtcount_core::hashfamily::{sample_hash, HashConfig, HashError, HashFunction};
use smtcount_core::validate::{eps_obs, exact_count, within_tolerance};
use smtcount_core::Formula;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// How the corpus report aggregates observed tolerances.
pub const GEOMETRIC_MEAN_RULE: &str =
    "geometric mean of (1 + eps_obs) over runs where eps_obs is defined, minus 1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityRecord {
    pub id: String,
    pub seed: u64,
    #[serde(serialize_with = "crate::report::big")]
    pub exact: BigUint,
    #[serde(serialize_with = "crate::report::opt_big")]
    pub estimate: Option<BigUint>,
    /// `None` when exactly one of the counts is zero, or on error.
    pub eps_obs: Option<f64>,
    pub within: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormulaSummary {
    pub id: String,
    #[serde(serialize_with = "crate::report::big")]
    pub exact: BigUint,
    /// Lower median of the per-seed estimates.
    #[serde(serialize_with = "crate::report::opt_big")]
    pub estimate: Option<BigUint>,
    pub runs: usize,
    pub within: usize,
}

impl FormulaSummary {
    pub fn fraction(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.within as f64 / self.runs as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorpusReport {
    pub epsilon: f64,
    pub delta: f64,
    pub aggregation: &'static str,
    pub records: Vec<QualityRecord>,
    pub formulas: Vec<FormulaSummary>,
    pub geometric_mean_eps_obs: Option<f64>,
    pub within_fraction: f64,
}

/// Observed tolerance with the zero cases resolved: two zeros agree exactly,
/// a single zero is undefined.
pub fn eps_obs_or_zero(exact: &BigUint, estimate: &BigUint) -> Option<f64> {
    let zero = BigUint::default();
    if *exact == zero && *estimate == zero {
        Some(0.0)
    } else {
        eps_obs(exact, estimate).ok()
    }
}

pub fn geometric_mean_eps(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for e in values {
        sum += e.ln_1p();
        n += 1;
    }
    (n > 0).then(|| (sum / n as f64).exp() - 1.0)
}

/// Runs the counter on every formula once per seed and compares against
/// brute-force counts. Errors are recorded per run; the suite continues.
pub fn run_quality_suite(
    corpus: &[(String, Formula)],
    epsilon: f64,
    delta: f64,
    seeds: &[u64],
    cfg: &OracleConfig,
) -> CorpusReport {
    let mut records = Vec::new();
    let mut formulas = Vec::new();
    for (id, f) in corpus {
        let start = records.len();
        run_formula(id, f, epsilon, delta, seeds, cfg, &mut records);
        let mine = &records[start..];
        let estimates: Vec<BigUint> = mine.iter().filter_map(|r| r.estimate.clone()).collect();
        formulas.push(FormulaSummary {
            id: id.clone(),
            exact: mine.first().map(|r| r.exact.clone()).unwrap_or_default(),
            estimate: find_median(&estimates).ok(),
            runs: mine.len(),
            within: mine.iter().filter(|r| r.within).count(),
        });
    }
    let within = records.iter().filter(|r| r.within).count();
    CorpusReport {
        epsilon,
        delta,
        aggregation: GEOMETRIC_MEAN_RULE,
        geometric_mean_eps_obs: geometric_mean_eps(records.iter().filter_map(|r| r.eps_obs)),
        within_fraction: if records.is_empty() {
            0.0
        } else {
            within as f64 / records.len() as f64
        },
        records,
        formulas,
    }
}

fn run_formula(
    id: &str,
    f: &Formula,
    epsilon: f64,
    delta: f64,
    seeds: &[u64],
    cfg: &OracleConfig,
    out: &mut Vec<QualityRecord>,
) {
    let failed = |seed, exact: BigUint, msg: String| QualityRecord {
        id: id.to_owned(),
        seed,
        exact,
        estimate: None,
        eps_obs: None,
        within: false,
        error: Some(msg),
    };
    let exact = match exact_count(f) {
        Ok(x) => x,
        Err(e) => {
            out.extend(
                seeds
                    .iter()
                    .map(|&s| failed(s, BigUint::default(), e.to_string())),
            );
            return;
        }
    };
    let g = normalize_widths(f);
    let mut oracle = match AnyOracle::for_formula(&g, cfg) {
        Ok(o) => o,
        Err(e) => {
            out.extend(
                seeds
                    .iter()
                    .map(|&s| failed(s, exact.clone(), e.to_string())),
            );
            return;
        }
    };
    for &seed in seeds {
        let result = Params::new(epsilon, delta, seed)
            .and_then(|p| approx_mc_normalized(&g, &p, &mut oracle));
        let record = match result {
            Ok(est) => {
                let estimate = est.final_count;
                let within = estimate
                    .as_ref()
                    .is_some_and(|c| within_tolerance(&exact, c, epsilon));
                QualityRecord {
                    id: id.to_owned(),
                    seed,
                    eps_obs: estimate.as_ref().and_then(|c| eps_obs_or_zero(&exact, c)),
                    error: estimate
                        .is_none()
                        .then(|| "every core invocation failed".into()),
                    exact: exact.clone(),
                    estimate,
                    within,
                }
            }
            Err(e) => failed(seed, exact.clone(), e.to_string()),
        };
        out.push(record);
    }
}

/// Two-sided z threshold: `z0` standard errors for a single bin, with the
/// family-wise level held fixed across `bins` by Bonferroni correction.
pub fn bonferroni_z(z0: f64, bins: usize) -> f64 {
    let normal = Normal::standard();
    let family = 2.0 * (1.0 - normal.cdf(z0));
    normal.inverse_cdf(1.0 - family / (2.0 * bins.max(1) as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinCheck {
    pub label: String,
    pub observed: u64,
    pub frequency: f64,
    pub expected: f64,
    /// Allowed absolute deviation of `frequency`.
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawCheck {
    pub name: &'static str,
    pub z: f64,
    pub bins: Vec<BinCheck>,
}

impl LawCheck {
    fn new(name: &'static str, counts: &[(String, u64)], trials: u64, expected: f64) -> Self {
        let z = bonferroni_z(4.0, counts.len());
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        let bins = counts
            .iter()
            .map(|(label, observed)| {
                let frequency = *observed as f64 / trials as f64;
                BinCheck {
                    label: label.clone(),
                    observed: *observed,
                    frequency,
                    expected,
                    tolerance: z * se,
                    ok: (frequency - expected).abs() <= z * se,
                }
            })
            .collect();
        LawCheck { name, z, bins }
    }

    pub fn pass(&self) -> bool {
        self.bins.iter().all(|b| b.ok)
    }
}

#[derive(Clone, Debug)]
pub struct HashLawSpec {
    pub n: usize,
    pub k: u32,
    pub counts: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub x1: Vec<u64>,
    pub x2: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HashLawReport {
    pub n: usize,
    pub k: u32,
    pub counts: Vec<u32>,
    pub cells: u64,
    pub trials: u64,
    pub uniformity: LawCheck,
    pub joint: LawCheck,
    pub collision: LawCheck,
}

impl HashLawReport {
    pub fn pass(&self) -> bool {
        self.uniformity.pass() && self.joint.pass() && self.collision.pass()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HashLawError {
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("{0} cells is more than this harness tabulates (1000)")]
    TooManyCells(BigUint),
    #[error("the two inputs must be distinct")]
    SameInputs,
}

/// Position of a hash value in the mixed-radix numbering of cells.
fn cell_index(h: &HashFunction, value: &[u64]) -> usize {
    h.components().iter().zip(value).fold(0, |acc, (c, &v)| {
        acc * c.modulus.value() as usize + v as usize
    })
}

/// Empirical uniformity of `h(x1)`, the joint law of `(h(x1), h(x2))`, and
/// the collision rate, over `trials` independently sampled hashes.
pub fn hash_law_suite(spec: &HashLawSpec) -> Result<HashLawReport, HashLawError> {
    if spec.x1 == spec.x2 {
        return Err(HashLawError::SameInputs);
    }
    let config = HashConfig::new(spec.n, spec.k, &spec.counts)?;
    let cells = config.num_cells();
    let m = match u64::try_from(&cells) {
        Ok(m) if m <= 1000 => m as usize,
        _ => return Err(HashLawError::TooManyCells(cells)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut single = vec![0u64; m];
    let mut joint = vec![0u64; m * m];
    let mut collisions = 0u64;
    for _ in 0..spec.trials {
        let h = sample_hash(&config, &mut rng);
        let a = cell_index(&h, &h.eval(&spec.x1)?);
        let b = cell_index(&h, &h.eval(&spec.x2)?);
        single[a] += 1;
        joint[a * m + b] += 1;
        collisions += u64::from(a == b);
    }
    let p = 1.0 / m as f64;
    let label = |i: usize| i.to_string();
    let single: Vec<_> = single
        .into_iter()
        .enumerate()
        .map(|(i, c)| (label(i), c))
        .collect();
    let joint: Vec<_> = joint
        .into_iter()
        .enumerate()
        .map(|(i, c)| (format!("{},{}", i / m, i % m), c))
        .collect();
    Ok(HashLawReport {
        n: spec.n,
        k: spec.k,
        counts: spec.counts.clone(),
        cells: m as u64,
        trials: spec.trials,
        uniformity: LawCheck::new("uniformity", &single, spec.trials, p),
        joint: LawCheck::new("pairwise", &joint, spec.trials, p * p),
        collision: LawCheck::new("collision", &[("equal".into(), collisions)], spec.trials, p),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareCheck {
    pub label: String,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson's test of `counts` against the uniform distribution.
pub fn chi_squared_uniform(label: impl Into<String>, counts: &[u64]) -> ChiSquareCheck {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = counts.len().saturating_sub(1).max(1);
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    ChiSquareCheck {
        label: label.into(),
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    }
}

/// Per-slot histograms of sampled coefficients and offsets, each tested
/// for uniformity over its modulus.
pub fn coefficient_uniformity(config: &HashConfig, draws: u64, seed: u64) -> Vec<ChiSquareCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hists: Vec<Vec<u64>> = Vec::new();
    for _ in 0..draws {
        let h = sample_hash(config, &mut rng);
        let mut slot = 0;
        for c in h.components() {
            let p = c.modulus.value() as usize;
            for &v in c.coeffs.iter().chain(std::iter::once(&c.offset)) {
                if hists.len() <= slot {
                    hists.push(vec![0; p]);
                }
                hists[slot][v as usize] += 1;
                slot += 1;
            }
        }
    }
    hists
        .iter()
        .enumerate()
        .map(|(i, h)| chi_squared_uniform(format!("slot {i}"), h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonferroni_single_bin_is_z0() {
        assert!((bonferroni_z(4.0, 1) - 4.0).abs() < 1e-6);
        let z5 = bonferroni_z(4.0, 5);
        assert!(z5 > 4.0 && z5 < 4.6, "{z5}");
    }

    #[test]
    fn geometric_mean_rule() {
        assert_eq!(geometric_mean_eps([]), None);
        assert!(geometric_mean_eps([0.0, 0.0]).unwrap().abs() < 1e-12);
        // (1.44 * 1.0)^(1/2) - 1
        assert!((geometric_mean_eps([0.44, 0.0]).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_counts() {
        let z = BigUint::default();
        assert_eq!(eps_obs_or_zero(&z, &z), Some(0.0));
        assert_eq!(eps_obs_or_zero(&z, &BigUint::from(3u32)), None);
    }

    #[test]
    fn chi_squared_flat_and_skewed() {
        let flat = chi_squared_uniform("flat", &[1000; 17]);
        assert_eq!(flat.statistic, 0.0);
        assert!((flat.p_value - 1.0).abs() < 1e-12);
        let mut skew = vec![1000u64; 17];
        skew[3] = 1300;
        assert!(chi_squared_uniform("skew", &skew).p_value < 1e-3);
    }
}
