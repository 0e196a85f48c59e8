//! Quantitative side: the length bound recursion, the density and counting
//! bounds, an exhaustive census over `[r]^n`, and the search for long words
//! avoiding a pattern.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::decider::{decide, DecideError, SearchConfig};
use crate::pattern::{CanonicalPatterns, Pattern};
use crate::reflection::{reflects_as_suffix, ReflectionError};

pub const DEFAULT_DIGIT_CAP: usize = 1_000_000;
pub const DEFAULT_WORD_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("arguments must be positive")]
    ZeroArgument,
    #[error("r = {r} is out of range (need r > 2)")]
    OutOfRange { r: u64 },
    #[error("{r}^{n} words exceed the enumeration budget of {limit}")]
    CensusBudget { r: u64, n: u32, limit: u64 },
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// An exact value, or a marker that it has more decimal digits than the cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundValue {
    Exact(BigUint),
    Overflow { digit_cap: usize },
}

impl BoundValue {
    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            BoundValue::Exact(v) => Some(v),
            BoundValue::Overflow { .. } => None,
        }
    }

    fn from_capped(v: Option<BigUint>, digit_cap: usize) -> Self {
        v.map_or(BoundValue::Overflow { digit_cap }, BoundValue::Exact)
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Exact(v) => write!(f, "{v}"),
            BoundValue::Overflow { digit_cap } => write!(f, "overflow (more than {digit_cap} digits)"),
        }
    }
}

const LOG10_2: f64 = std::f64::consts::LOG10_2;

fn within_cap(x: &BigUint, cap: usize) -> bool {
    let bits = x.bits();
    // 2^(bits-1) <= x < 2^bits
    let low = ((bits.saturating_sub(1)) as f64 * LOG10_2).floor() as u64 + 1;
    let high = (bits as f64 * LOG10_2).ceil() as u64;
    let cap = cap as u64;
    if high < cap {
        true
    } else if low > cap + 1 {
        false
    } else {
        x.to_str_radix(10).len() as u64 <= cap
    }
}

fn capped(x: BigUint, cap: usize) -> Option<BigUint> {
    within_cap(&x, cap).then_some(x)
}

/// `base^exp`, or `None` past the digit cap. The size is estimated before
/// any multiplication happens.
fn pow_capped(base: &BigUint, exp: &BigUint, cap: usize) -> Option<BigUint> {
    if exp.is_zero() || base.is_one() {
        return capped(BigUint::one(), cap);
    }
    if base.is_zero() {
        return Some(BigUint::zero());
    }
    let e = exp.to_u64()?;
    let min_digits = ((base.bits() - 1) as f64 * e as f64 * LOG10_2).floor();
    if min_digits > cap as f64 + 1.0 {
        return None;
    }
    capped(Pow::pow(base, exp), cap)
}

/// The length bound `N(n, r)`: bases `N(1, r) = r + 1` and `N(n, 1) = n + 1`,
/// and for `n, r >= 2`
///
/// `N(n, r) = n * N(n, r-1) * N(n-1, n^2 * (r-1)^N(n, r-1))`.
pub fn bound_n(n: u64, r: u64, digit_cap: usize) -> Result<BoundValue, AnalysisError> {
    if n == 0 || r == 0 {
        return Err(AnalysisError::ZeroArgument);
    }
    Ok(BoundValue::from_capped(
        bound_value(n, &BigUint::from(r), digit_cap),
        digit_cap,
    ))
}

// `None` is overflow. Both arguments only push the value up: it is
// nondecreasing in r and N(n, r) > r, so an overflowing argument or an
// overflowing smaller r settles the answer.
fn bound_value(n: u64, r: &BigUint, cap: usize) -> Option<BigUint> {
    if n == 1 {
        return capped(r + 1u32, cap);
    }
    let n_big = BigUint::from(n);
    let mut value = capped(&n_big + 1u32, cap)?;
    let mut k = BigUint::one();
    while &k < r {
        let arg = pow_capped(&k, &value, cap)? * (&n_big * &n_big);
        let inner = bound_value(n - 1, &capped(arg, cap)?, cap)?;
        value = capped(&n_big * value * inner, cap)?;
        k += 1u32;
    }
    Some(value)
}

/// `((r-1)/r)^(n-1)`.
pub fn density_bound(r: u64, n: u32) -> Result<BigRational, AnalysisError> {
    if r == 0 || n == 0 {
        return Err(AnalysisError::ZeroArgument);
    }
    let ratio = BigRational::new((r - 1).into(), r.into());
    Ok(Pow::pow(ratio, n - 1))
}

/// `r((r-1)^(2^r - 1) - 1)/(r - 2)`, an upper bound on the number of
/// unavoidable patterns over `[r]`.
pub fn count_bound(r: u64, digit_cap: usize) -> Result<BoundValue, AnalysisError> {
    if r < 3 {
        return Err(AnalysisError::OutOfRange { r });
    }
    let exp = (BigUint::one() << r) - 1u32;
    // The quotient is at least (r-1)^exp - 1, so an overflowing power
    // overflows the result.
    let value = pow_capped(&BigUint::from(r - 1), &exp, digit_cap)
        .map(|power| BigUint::from(r) * (power - 1u32) / BigUint::from(r - 2))
        .and_then(|v| capped(v, digit_cap));
    Ok(BoundValue::from_capped(value, digit_cap))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusConfig {
    /// Largest `r^n` accepted.
    pub word_budget: u64,
    pub search: SearchConfig,
    /// Worker threads; `None` runs on the calling thread.
    pub workers: Option<usize>,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            word_budget: DEFAULT_WORD_BUDGET,
            search: SearchConfig::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusReport {
    pub r: u64,
    pub n: u32,
    pub total: u64,
    pub unavoidable: u64,
    pub fraction: BigRational,
    pub bound: BigRational,
    pub bound_holds: bool,
}

impl CensusReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "r": self.r,
            "n": self.n,
            "total": self.total,
            "unavoidable": self.unavoidable,
            "fraction_num": self.fraction.numer().to_string(),
            "fraction_den": self.fraction.denom().to_string(),
            "bound_num": self.bound.numer().to_string(),
            "bound_den": self.bound.denom().to_string(),
            "holds": self.bound_holds,
        })
    }
}

/// Aligned text table, one row per report.
pub fn census_table(reports: &[CensusReport]) -> String {
    let header = ["r", "n", "total", "unavoidable", "fraction", "bound", "holds"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|c| {
            [
                c.r.to_string(),
                c.n.to_string(),
                c.total.to_string(),
                c.unavoidable.to_string(),
                c.fraction.to_string(),
                c.bound.to_string(),
                if c.bound_holds { "yes" } else { "NO" }.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    for row in &rows {
        out += &line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

fn run_with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, AnalysisError> {
    match workers {
        None => Ok(job()),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| AnalysisError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Decides every word of `[r]^n`, one canonical representative per
/// renaming class weighted by the class size.
pub fn census(r: u64, n: u32, config: &CensusConfig) -> Result<CensusReport, AnalysisError> {
    if r == 0 || n == 0 {
        return Err(AnalysisError::ZeroArgument);
    }
    let total = r
        .checked_pow(n)
        .filter(|&t| t <= config.word_budget)
        .ok_or(AnalysisError::CensusBudget {
            r,
            n,
            limit: config.word_budget,
        })?;
    let max_letters = r.min(n as u64) as usize;
    let classes: Vec<Pattern> = CanonicalPatterns::new(n as usize, max_letters).collect();
    // r (r-1) ... (r-k+1) labeled words per class on k letters
    let weight = |k: usize| (0..k as u64).map(|i| r - i).product::<u64>();
    let search = config.search;
    let count = |p: &Pattern| -> Result<u64, DecideError> {
        Ok(if decide(p, &search)?.is_unavoidable() {
            weight(p.alphabet_size())
        } else {
            0
        })
    };
    let counts: Result<Vec<u64>, DecideError> = match config.workers {
        None => classes.iter().map(count).collect(),
        Some(_) => run_with_workers(config.workers, || classes.par_iter().map(count).collect())?,
    };
    let unavoidable: u64 = counts?.iter().sum();
    let fraction = BigRational::new(unavoidable.into(), total.into());
    let bound = density_bound(r, n)?;
    Ok(CensusReport {
        r,
        n,
        total,
        unavoidable,
        bound_holds: fraction <= bound,
        fraction,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LongestAvoiding {
    /// No avoiding word reaches the cap; the witness is the
    /// lexicographically first avoiding word of maximum length.
    Maximum { length: usize, witness: Vec<u32> },
    /// The lexicographically first avoiding word of length `cap`.
    CapReached { witness: Vec<u32> },
}

impl LongestAvoiding {
    pub fn witness(&self) -> &[u32] {
        match self {
            LongestAvoiding::Maximum { witness, .. } | LongestAvoiding::CapReached { witness } => witness,
        }
    }
}

/// Renders a word over `[r]` with the letters `a, b, c, ...`.
pub fn format_word(word: &[u32]) -> String {
    Pattern::from_indices(word.iter().copied()).format()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AvoidConfig {
    pub cap: usize,
    /// Node budget of each reflection check.
    pub reflect_budget: u64,
    pub workers: Option<usize>,
}

// Subtrees below this depth are searched independently.
const SPLIT_DEPTH: usize = 6;

/// Depth-first search over words of `[r]^<=cap` that do not reflect `p`.
/// Only words whose letters first appear in the order `a, b, c, ...` are
/// visited; every avoiding word is a renaming of one of those, and the
/// lexicographically first avoiding word of any length is one of them.
pub fn longest_avoiding(p: &Pattern, r: u32, config: &AvoidConfig) -> Result<LongestAvoiding, AnalysisError> {
    if r == 0 || config.cap == 0 {
        return Err(AnalysisError::ZeroArgument);
    }
    let search = Avoider {
        p,
        r,
        budget: config.reflect_budget,
    };
    // Enumerate the frontier sequentially, then search below it.
    let split = SPLIT_DEPTH.min(config.cap);
    let mut frontier = Vec::new();
    let mut shallow = Vec::new();
    let mut word = Vec::new();
    search.frontier(&mut word, split, &mut frontier, &mut shallow)?;
    if frontier.is_empty() || split == config.cap {
        return Ok(match frontier.into_iter().next() {
            Some(witness) => LongestAvoiding::CapReached { witness },
            None => LongestAvoiding::Maximum {
                length: shallow.len(),
                witness: shallow,
            },
        });
    }
    let explore = |prefix: &Vec<u32>| -> Result<(bool, Vec<u32>), ReflectionError> {
        let mut word = prefix.clone();
        let mut best = prefix.clone();
        let reached = search.dfs(&mut word, config.cap, &mut best)?;
        Ok((reached, best))
    };
    let results: Vec<Result<(bool, Vec<u32>), ReflectionError>> = match config.workers {
        None => frontier.iter().map(explore).collect(),
        Some(_) => run_with_workers(config.workers, || frontier.par_iter().map(explore).collect())?,
    };
    let mut best: Vec<u32> = Vec::new();
    for result in results {
        let (reached, candidate) = result?;
        if reached {
            return Ok(LongestAvoiding::CapReached { witness: candidate });
        }
        if candidate.len() > best.len() {
            best = candidate;
        }
    }
    Ok(LongestAvoiding::Maximum {
        length: best.len(),
        witness: best,
    })
}

struct Avoider<'a> {
    p: &'a Pattern,
    r: u32,
    budget: u64,
}

impl Avoider<'_> {
    fn letters(&self, word: &[u32]) -> std::ops::Range<u32> {
        let used = word.iter().max().map_or(0, |&m| m + 1);
        0..(used + 1).min(self.r)
    }

    fn avoids_after_push(&self, word: &[u32]) -> Result<bool, ReflectionError> {
        Ok(reflects_as_suffix(word, self.p, self.budget)?.is_none())
    }

    // Avoiding words of length `depth` in order; `best` gets the first
    // longest avoiding word shorter than that.
    fn frontier(
        &self,
        word: &mut Vec<u32>,
        depth: usize,
        out: &mut Vec<Vec<u32>>,
        best: &mut Vec<u32>,
    ) -> Result<(), ReflectionError> {
        if word.len() == depth {
            out.push(word.clone());
            return Ok(());
        }
        if word.len() > best.len() {
            *best = word.clone();
        }
        for c in self.letters(word) {
            word.push(c);
            if self.avoids_after_push(word)? {
                self.frontier(word, depth, out, best)?;
            }
            word.pop();
        }
        Ok(())
    }

    fn dfs(&self, word: &mut Vec<u32>, cap: usize, best: &mut Vec<u32>) -> Result<bool, ReflectionError> {
        if word.len() > best.len() {
            *best = word.clone();
        }
        if word.len() == cap {
            return Ok(true);
        }
        for c in self.letters(word) {
            word.push(c);
            if self.avoids_after_push(word)? && self.dfs(word, cap, best)? {
                return Ok(true);
            }
            word.pop();
        }
        Ok(false)
    }
}
