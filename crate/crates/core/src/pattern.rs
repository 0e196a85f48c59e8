//! Patterns over a dense integer alphabet and the two rewriting primitives
//! (letter deletion, letter identification).
//!
//! A [`Pattern`] stores its letters as dense 0-based indices. Display tokens
//! live only in the optional legend, which survives deletion and
//! identification so that a letter keeps its printed name across a reduction.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default ceiling on the number of distinct letters accepted by the parser.
pub const DEFAULT_ALPHABET_CAP: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("empty pattern")]
    EmptyPattern,
    #[error("pattern has more than {cap} distinct letters")]
    AlphabetCap { cap: usize },
    #[error("letter {0} does not occur in the pattern")]
    LetterAbsent(String),
    #[error("cannot identify a letter with itself ({0})")]
    SameLetter(String),
}

/// A letter of a pattern, addressed by its dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter(pub u32);

impl Letter {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An ordered adjacent pair of letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TwoFactor {
    pub first: Letter,
    pub second: Letter,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    letters: Vec<Letter>,
    alphabet_size: usize,
    legend: Option<Vec<String>>,
}

impl Pattern {
    /// The empty pattern. Only reachable as a reduction result.
    pub fn empty() -> Self {
        Pattern {
            letters: Vec::new(),
            alphabet_size: 0,
            legend: None,
        }
    }

    /// Builds a pattern from raw indices, compacting the alphabet while
    /// preserving the relative order of the indices that occur.
    pub fn from_indices<I: IntoIterator<Item = u32>>(indices: I) -> Self {
        let raw: Vec<u32> = indices.into_iter().collect();
        let (letters, kept) = compact(&raw);
        Pattern {
            alphabet_size: kept.len(),
            letters,
            legend: None,
        }
    }

    /// Builds a pattern from display tokens, indexing them by first occurrence.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], cap: usize) -> Result<Self, PatternError> {
        if tokens.is_empty() {
            return Err(PatternError::EmptyPattern);
        }
        let mut legend: Vec<String> = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut letters = Vec::with_capacity(tokens.len());
        for tok in tokens {
            let tok = tok.as_ref();
            let next = legend.len();
            let id = *index.entry(tok.to_string()).or_insert_with(|| {
                legend.push(tok.to_string());
                next
            });
            if legend.len() > cap {
                return Err(PatternError::AlphabetCap { cap });
            }
            letters.push(Letter(id as u32));
        }
        Ok(Pattern {
            alphabet_size: legend.len(),
            letters,
            legend: Some(legend),
        })
    }

    /// Parses the pattern text format with the default alphabet cap.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        Self::parse_with_cap(text, DEFAULT_ALPHABET_CAP)
    }

    /// Single-character tokens when the text is purely ASCII letters and
    /// digits, otherwise whitespace-separated tokens.
    pub fn parse_with_cap(text: &str, cap: usize) -> Result<Self, PatternError> {
        let tokens = tokenize(text);
        Self::from_tokens(&tokens, cap)
    }

    pub fn with_legend(mut self, legend: Vec<String>) -> Self {
        assert_eq!(legend.len(), self.alphabet_size, "legend size mismatch");
        self.legend = Some(legend);
        self
    }

    #[inline]
    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.letters.iter().map(|l| l.0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn legend(&self) -> Option<&[String]> {
        self.legend.as_deref()
    }

    pub fn alphabet(&self) -> impl Iterator<Item = Letter> {
        (0..self.alphabet_size as u32).map(Letter)
    }

    pub fn contains(&self, x: Letter) -> bool {
        x.index() < self.alphabet_size
    }

    /// Display token of a letter: the legend entry when present, otherwise a
    /// generated name (`a`..`z` for small alphabets, `x0`, `x1`, … beyond).
    pub fn token(&self, x: Letter) -> String {
        match &self.legend {
            Some(legend) => legend[x.index()].clone(),
            None => default_token(x.0, self.alphabet_size),
        }
    }

    /// Looks a letter up by its display token.
    pub fn letter_of(&self, token: &str) -> Option<Letter> {
        (0..self.alphabet_size as u32)
            .map(Letter)
            .find(|&x| self.token(x) == token)
    }

    /// Number of occurrences of every letter, indexed by letter.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.alphabet_size];
        for l in &self.letters {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Renames letters by order of first occurrence.
    pub fn canonicalize(&self) -> Pattern {
        let mut rename = vec![u32::MAX; self.alphabet_size];
        let mut next = 0u32;
        let letters = self
            .letters
            .iter()
            .map(|l| {
                let slot = &mut rename[l.index()];
                if *slot == u32::MAX {
                    *slot = next;
                    next += 1;
                }
                Letter(*slot)
            })
            .collect();
        let legend = self.legend.as_ref().map(|legend| {
            let mut out = vec![String::new(); self.alphabet_size];
            for (old, &new) in rename.iter().enumerate() {
                out[new as usize] = legend[old].clone();
            }
            out
        });
        Pattern {
            letters,
            alphabet_size: self.alphabet_size,
            legend,
        }
    }

    pub fn is_canonical(&self) -> bool {
        let mut next = 0u32;
        for l in &self.letters {
            if l.0 == next {
                next += 1;
            } else if l.0 > next {
                return false;
            }
        }
        true
    }

    /// Removes every occurrence of each listed letter and re-densifies the
    /// alphabet (surviving letters keep their relative order).
    pub fn delete_letters(&self, xs: &BTreeSet<Letter>) -> Result<Pattern, PatternError> {
        for &x in xs {
            if !self.contains(x) {
                return Err(PatternError::LetterAbsent(self.describe(x)));
            }
        }
        let raw: Vec<u32> = self.letters.iter().filter(|l| !xs.contains(l)).map(|l| l.0).collect();
        Ok(self.rebuild(&raw))
    }

    /// Replaces every occurrence of `x` by `y` and re-densifies.
    pub fn identify(&self, x: Letter, y: Letter) -> Result<Pattern, PatternError> {
        if x == y {
            return Err(PatternError::SameLetter(self.describe(x)));
        }
        for z in [x, y] {
            if !self.contains(z) {
                return Err(PatternError::LetterAbsent(self.describe(z)));
            }
        }
        let raw: Vec<u32> = self.letters.iter().map(|&l| if l == x { y.0 } else { l.0 }).collect();
        Ok(self.rebuild(&raw))
    }

    /// Distinct ordered adjacent pairs.
    pub fn two_factors(&self) -> BTreeSet<TwoFactor> {
        self.letters
            .windows(2)
            .map(|w| TwoFactor {
                first: w[0],
                second: w[1],
            })
            .collect()
    }

    /// Whether some letter occurs twice in a row.
    pub fn has_square_letter(&self) -> bool {
        self.letters.windows(2).any(|w| w[0] == w[1])
    }

    /// The factor `[start, end)` as a pattern of its own.
    pub fn factor(&self, start: usize, end: usize) -> Pattern {
        self.rebuild(&self.letters[start..end].iter().map(|l| l.0).collect::<Vec<_>>())
    }

    /// Renders the pattern in the text format that [`Pattern::parse`] reads.
    pub fn format(&self) -> String {
        let tokens: Vec<String> = self.alphabet().map(|x| self.token(x)).collect();
        let compact = tokens
            .iter()
            .all(|t| t.len() == 1 && t.chars().all(|c| c.is_ascii_alphanumeric()));
        let sep = if compact { "" } else { " " };
        self.letters
            .iter()
            .map(|&l| tokens[l.index()].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    fn describe(&self, x: Letter) -> String {
        if self.contains(x) {
            self.token(x)
        } else {
            x.to_string()
        }
    }

    fn rebuild(&self, raw: &[u32]) -> Pattern {
        let (letters, kept) = compact(raw);
        let legend = match &self.legend {
            Some(legend) => Some(kept.iter().map(|&old| legend[old as usize].clone()).collect()),
            None if kept.len() != self.alphabet_size => {
                // keep generated names stable across the shrink
                Some(kept.iter().map(|&old| default_token(old, self.alphabet_size)).collect())
            }
            None => None,
        };
        Pattern {
            alphabet_size: kept.len(),
            letters,
            legend,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.format())
        }
    }
}

/// Splits pattern text into tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let text = text.trim();
    if text.chars().all(|c| c.is_ascii_alphanumeric()) {
        text.chars().map(|c| c.to_string()).collect()
    } else {
        text.split_whitespace().map(str::to_string).collect()
    }
}

fn default_token(index: u32, alphabet_size: usize) -> String {
    if alphabet_size <= 26 {
        char::from(b'a' + index as u8).to_string()
    } else {
        format!("x{index}")
    }
}

/// Order-preserving alphabet compaction. Returns the rewritten letters and
/// the surviving old indices in increasing order.
fn compact(raw: &[u32]) -> (Vec<Letter>, Vec<u32>) {
    let kept: Vec<u32> = raw.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let max = kept.last().map_or(0, |&m| m as usize + 1);
    let mut rank = vec![0u32; max];
    for (i, &old) in kept.iter().enumerate() {
        rank[old as usize] = i as u32;
    }
    let letters = raw.iter().map(|&l| Letter(rank[l as usize])).collect();
    (letters, kept)
}

/// Enumerates canonical patterns (restricted growth strings) of a fixed
/// length using at most `max_letters` distinct letters, in lexicographic order.
#[derive(Debug, Clone)]
pub struct CanonicalPatterns {
    current: Vec<u32>,
    // prefix maxima: prefix_max[i] = max(current[..=i])
    prefix_max: Vec<u32>,
    max_letters: u32,
    done: bool,
}

impl CanonicalPatterns {
    pub fn new(len: usize, max_letters: usize) -> Self {
        CanonicalPatterns {
            current: vec![0; len],
            prefix_max: vec![0; len],
            max_letters: max_letters as u32,
            done: len == 0 || max_letters == 0,
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.current.len();
        for i in (1..n).rev() {
            let limit = (self.prefix_max[i - 1] + 1).min(self.max_letters - 1);
            if self.current[i] < limit {
                self.current[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.current[i]);
                for j in i + 1..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for CanonicalPatterns {
    type Item = Pattern;

    fn next(&mut self) -> Option<Pattern> {
        if self.done {
            return None;
        }
        let out = Pattern::from_indices(self.current.iter().copied());
        if !self.advance() {
            self.done = true;
        }
        Some(out)
    }
}

/// All canonical patterns of length `1..=max_len` over at most `max_letters` letters.
pub fn canonical_patterns_up_to(max_len: usize, max_letters: usize) -> impl Iterator<Item = Pattern> {
    (1..=max_len).flat_map(move |n| CanonicalPatterns::new(n, max_letters))
}
