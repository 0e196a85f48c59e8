//! Reflection of a pattern in a word (non-erasing morphic images as factors)
//! and Zimin words.

use thiserror::Error;

use crate::pattern::{Letter, Pattern};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
pub const DEFAULT_LENGTH_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReflectionError {
    #[error("no image for letter {0}")]
    MissingImage(Letter),
    #[error("image of letter {0} is empty")]
    EmptyImage(Letter),
    #[error("reflection search exceeded {limit} nodes")]
    Budget { limit: u64 },
    #[error("Zimin word Z_{k} is longer than the cap of {cap} letters")]
    LengthCap { k: usize, cap: usize },
    #[error("Zimin words start at k = 1")]
    ZeroRank,
}

/// A non-erasing morphism from pattern letters to words over `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism<T> {
    images: Vec<Vec<T>>,
}

impl<T: Clone> Morphism<T> {
    pub fn new(images: Vec<Vec<T>>) -> Result<Self, ReflectionError> {
        if let Some(i) = images.iter().position(Vec::is_empty) {
            return Err(ReflectionError::EmptyImage(Letter(i as u32)));
        }
        Ok(Morphism { images })
    }

    pub fn image(&self, x: Letter) -> Option<&[T]> {
        self.images.get(x.index()).map(Vec::as_slice)
    }

    pub fn images(&self) -> &[Vec<T>] {
        &self.images
    }

    /// Concatenation of the images in pattern order.
    pub fn apply(&self, p: &Pattern) -> Result<Vec<T>, ReflectionError> {
        let mut out = Vec::new();
        for &x in p.letters() {
            let image = self.image(x).ok_or(ReflectionError::MissingImage(x))?;
            out.extend_from_slice(image);
        }
        Ok(out)
    }
}

pub fn apply_morphism<T: Clone>(m: &Morphism<T>, p: &Pattern) -> Result<Vec<T>, ReflectionError> {
    m.apply(p)
}

/// Searches for a factor of `w` that is a non-erasing image of `p`.
pub fn reflects<T: PartialEq + Clone>(
    w: &[T],
    p: &Pattern,
    budget: u64,
) -> Result<Option<Morphism<T>>, ReflectionError> {
    let mut search = Matcher::new(w, p, budget);
    for start in 0..w.len() {
        if search.run(start, None)? {
            return Ok(Some(search.witness()));
        }
    }
    Ok(None)
}

/// Like [`reflects`], restricted to occurrences that end at the last letter
/// of `w`. Used to extend a word one letter at a time.
pub fn reflects_as_suffix<T: PartialEq + Clone>(
    w: &[T],
    p: &Pattern,
    budget: u64,
) -> Result<Option<Morphism<T>>, ReflectionError> {
    let mut search = Matcher::new(w, p, budget);
    // the image is at least |p| long
    for start in (0..=w.len().saturating_sub(p.len())).rev() {
        if search.run(start, Some(w.len()))? {
            return Ok(Some(search.witness()));
        }
    }
    Ok(None)
}

struct Matcher<'a, T> {
    word: &'a [T],
    pattern: &'a [Letter],
    // (offset, length) of each letter's image inside `word`
    images: Vec<Option<(usize, usize)>>,
    nodes: u64,
    budget: u64,
}

impl<'a, T: PartialEq + Clone> Matcher<'a, T> {
    fn new(word: &'a [T], p: &'a Pattern, budget: u64) -> Self {
        Matcher {
            word,
            pattern: p.letters(),
            images: vec![None; p.alphabet_size()],
            nodes: 0,
            budget,
        }
    }

    fn run(&mut self, start: usize, end: Option<usize>) -> Result<bool, ReflectionError> {
        self.images.iter_mut().for_each(|i| *i = None);
        let limit = end.unwrap_or(self.word.len());
        self.extend(0, start, limit, end.is_some())
    }

    fn extend(&mut self, i: usize, pos: usize, limit: usize, exact: bool) -> Result<bool, ReflectionError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(ReflectionError::Budget { limit: self.budget });
        }
        if i == self.pattern.len() {
            return Ok(!exact || pos == limit);
        }
        let rest = self.pattern.len() - i - 1;
        let x = self.pattern[i].index();
        match self.images[x] {
            Some((offset, len)) => {
                if pos + len + rest > limit || self.word[offset..offset + len] != self.word[pos..pos + len] {
                    return Ok(false);
                }
                self.extend(i + 1, pos + len, limit, exact)
            }
            None => {
                let max = limit.saturating_sub(pos + rest);
                for len in 1..=max {
                    self.images[x] = Some((pos, len));
                    if self.extend(i + 1, pos + len, limit, exact)? {
                        return Ok(true);
                    }
                }
                self.images[x] = None;
                Ok(false)
            }
        }
    }

    fn witness(&self) -> Morphism<T> {
        Morphism {
            images: self
                .images
                .iter()
                .map(|img| {
                    let (offset, len) = img.expect("every letter assigned");
                    self.word[offset..offset + len].to_vec()
                })
                .collect(),
        }
    }
}

/// Z_1 = x1, Z_{k+1} = Z_k x_{k+1} Z_k.
pub fn zimin(k: usize, cap: usize) -> Result<Pattern, ReflectionError> {
    if k == 0 {
        return Err(ReflectionError::ZeroRank);
    }
    if k >= usize::BITS as usize || (1usize << k) - 1 > cap {
        return Err(ReflectionError::LengthCap { k, cap });
    }
    let mut word: Vec<u32> = vec![0];
    for letter in 1..k as u32 {
        let prev = word.clone();
        word.push(letter);
        word.extend(prev);
    }
    Ok(Pattern::from_indices(word))
}

/// Cross-check for unavoidability: whether the Zimin word on as many letters
/// as `p` uses reflects `p`. Rests on Zimin's characterization from the
/// literature rather than on the reduction search.
pub fn decide_via_zimin(p: &Pattern, cap: usize, budget: u64) -> Result<bool, ReflectionError> {
    if p.is_empty() {
        return Ok(true);
    }
    let z = zimin(p.alphabet_size(), cap)?;
    let word: Vec<u32> = z.indices().collect();
    Ok(reflects(&word, p, budget)?.is_some())
}
