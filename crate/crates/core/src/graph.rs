//! The factor graph of a pattern and the freeness queries built on it.
//!
//! Every distinct 2-factor `ab` contributes two vertices, `^0ab` and `^1ab`.
//! A side-0 vertex points at every side-1 vertex sharing its second letter,
//! a side-1 vertex points at every side-0 vertex sharing its first letter.
//! A letter `x` is free exactly when no walk of at least one edge leads from a
//! side-0 vertex whose factor starts with `x` to a vertex whose factor ends
//! with `x`.
//!
//! Edges are never materialized: the out-neighbourhood of a vertex is one of
//! the `by_first` / `by_second` buckets, and a traversal scans each bucket at
//! most once.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::pattern::{Letter, Pattern};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("letter {0} does not occur in the pattern")]
    LetterAbsent(Letter),
    #[error("free-set query on an empty set")]
    EmptySet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Zero,
    One,
}

/// A vertex `^side factor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub side: Side,
    pub factor: usize,
}

#[derive(Debug, Clone)]
pub struct FactorGraph {
    alphabet_size: usize,
    factors: Vec<(u32, u32)>,
    by_first: Vec<Vec<usize>>,
    by_second: Vec<Vec<usize>>,
}

impl FactorGraph {
    /// Graph over the 2-factors of `p`. Patterns shorter than two letters
    /// give an empty graph.
    pub fn new(p: &Pattern) -> Self {
        Self::from_factors(p.alphabet_size(), p.letters().windows(2).map(|w| (w[0].0, w[1].0)))
    }

    /// Graph over an explicit collection of 2-factors; duplicates are merged.
    pub fn from_factors<I: IntoIterator<Item = (u32, u32)>>(alphabet_size: usize, factors: I) -> Self {
        let factors: Vec<(u32, u32)> = factors.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut by_first = vec![Vec::new(); alphabet_size];
        let mut by_second = vec![Vec::new(); alphabet_size];
        for (i, &(a, b)) in factors.iter().enumerate() {
            by_first[a as usize].push(i);
            by_second[b as usize].push(i);
        }
        FactorGraph {
            alphabet_size,
            factors,
            by_first,
            by_second,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.factors.len()
    }

    pub fn successors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let (a, b) = self.factors[v.factor];
        let (bucket, side) = match v.side {
            Side::Zero => (&self.by_second[b as usize], Side::One),
            Side::One => (&self.by_first[a as usize], Side::Zero),
        };
        bucket.iter().map(move |&factor| Vertex { side, factor })
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.factors.len()).flat_map(|factor| {
            [Side::Zero, Side::One]
                .into_iter()
                .map(move |side| Vertex { side, factor })
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.vertices()
            .flat_map(move |v| self.successors(v).map(move |w| (v, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.factors
            .iter()
            .map(|&(a, b)| self.by_second[b as usize].len() + self.by_first[a as usize].len())
            .sum()
    }

    /// Second letters of every factor reachable by a walk of at least one
    /// edge from a side-0 vertex starting with `x`. Stops early once `stop`
    /// is reached, if given.
    fn reach(&self, x: u32, stop: Option<u32>) -> Vec<bool> {
        let mut hit = vec![false; self.alphabet_size];
        if x as usize >= self.alphabet_size {
            return hit;
        }
        // A side-0 vertex (a,b) leads to bucket by_second[b]; a side-1 vertex
        // (a,b) leads to bucket by_first[a]. Vertices in one bucket share
        // their successors, so each bucket is expanded once.
        let mut seen_second = vec![false; self.alphabet_size];
        let mut seen_first = vec![false; self.alphabet_size];
        let mut stack: Vec<Vertex> = self.by_first[x as usize]
            .iter()
            .map(|&factor| Vertex {
                side: Side::Zero,
                factor,
            })
            .collect();
        while let Some(v) = stack.pop() {
            let (a, b) = self.factors[v.factor];
            match v.side {
                Side::Zero => {
                    if std::mem::replace(&mut seen_second[b as usize], true) {
                        continue;
                    }
                    // every side-1 vertex in the bucket ends with b
                    hit[b as usize] = true;
                    if stop == Some(b) {
                        return hit;
                    }
                    stack.extend(self.by_second[b as usize].iter().map(|&factor| Vertex {
                        side: Side::One,
                        factor,
                    }));
                }
                Side::One => {
                    if std::mem::replace(&mut seen_first[a as usize], true) {
                        continue;
                    }
                    for &factor in &self.by_first[a as usize] {
                        let second = self.factors[factor].1;
                        hit[second as usize] = true;
                        if stop == Some(second) {
                            return hit;
                        }
                        stack.push(Vertex {
                            side: Side::Zero,
                            factor,
                        });
                    }
                }
            }
        }
        hit
    }

    /// Whether `x` reaches a factor ending in `y`; `x = y` is the
    /// non-freeness test.
    pub fn conflicts(&self, x: Letter, y: Letter) -> bool {
        self.reach(x.0, Some(y.0))[y.index()]
    }

    pub fn letter_is_free(&self, x: Letter) -> bool {
        !self.conflicts(x, x)
    }

    /// The full relation, one traversal per letter.
    pub fn conflict_relation(&self) -> ConflictRelation {
        let n = self.alphabet_size;
        let mut bits = Vec::with_capacity(n * n);
        for x in 0..n as u32 {
            bits.extend(self.reach(x, None));
        }
        ConflictRelation { size: n, bits }
    }

    /// Graphviz rendering; vertex labels are the side tag followed by the
    /// factor's tokens.
    pub fn to_dot(&self, p: &Pattern) -> String {
        let label = |v: Vertex| {
            let (a, b) = self.factors[v.factor];
            let tag = match v.side {
                Side::Zero => 0,
                Side::One => 1,
            };
            format!("^{tag}{}{}", p.token(Letter(a)), p.token(Letter(b)))
        };
        let id = |v: Vertex| {
            2 * v.factor
                + match v.side {
                    Side::Zero => 0,
                    Side::One => 1,
                }
        };
        let mut out = String::from("digraph G {\n");
        for v in self.vertices() {
            let _ = writeln!(out, "  n{} [label=\"{}\"];", id(v), label(v).replace('"', "\\\""));
        }
        for (v, w) in self.edges() {
            let _ = writeln!(out, "  n{} -> n{};", id(v), id(w));
        }
        out.push_str("}\n");
        out
    }
}

/// `(x, y)` holds when a walk leads from an `x`-initial side-0 vertex to a
/// `y`-final vertex. `(x, x)` holds exactly when `x` is not free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictRelation {
    size: usize,
    bits: Vec<bool>,
}

impl ConflictRelation {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, x: Letter, y: Letter) -> bool {
        self.bits[x.index() * self.size + y.index()]
    }

    pub fn is_free(&self, x: Letter) -> bool {
        !self.get(x, x)
    }

    pub fn free_letters(&self) -> Vec<Letter> {
        (0..self.size as u32).map(Letter).filter(|&x| self.is_free(x)).collect()
    }

    pub fn is_free_set(&self, xs: &BTreeSet<Letter>) -> bool {
        xs.iter().all(|&x| xs.iter().all(|&y| !self.get(x, y)))
    }

    /// Nonempty free sets ordered by size, then lexicographically.
    pub fn free_sets(&self) -> FreeSets {
        let candidates = self.free_letters();
        let n = candidates.len();
        let mut compatible = vec![false; n * n];
        for (i, &x) in candidates.iter().enumerate() {
            for (j, &y) in candidates.iter().enumerate() {
                compatible[i * n + j] = !self.get(x, y) && !self.get(y, x);
            }
        }
        FreeSets {
            candidates,
            compatible,
            size: 1,
            stack: Vec::new(),
            fresh: true,
            found_at_size: false,
            done: n == 0,
        }
    }
}

/// Lazy enumeration of free sets, see [`ConflictRelation::free_sets`].
#[derive(Debug, Clone)]
pub struct FreeSets {
    candidates: Vec<Letter>,
    compatible: Vec<bool>,
    size: usize,
    stack: Vec<usize>,
    fresh: bool,
    found_at_size: bool,
    done: bool,
}

impl FreeSets {
    fn fits(&self, c: usize) -> bool {
        let n = self.candidates.len();
        self.stack.iter().all(|&s| self.compatible[s * n + c])
    }

    // Next independent combination of the current size at or after `start`.
    fn search(&mut self, mut start: usize) -> bool {
        let n = self.candidates.len();
        loop {
            if self.stack.len() == self.size {
                return true;
            }
            let need = self.size - self.stack.len();
            let found = (start..n).take_while(|&c| n - c >= need).find(|&c| self.fits(c));
            match found {
                Some(c) => {
                    self.stack.push(c);
                    start = c + 1;
                }
                None => match self.stack.pop() {
                    Some(last) => start = last + 1,
                    None => return false,
                },
            }
        }
    }
}

impl Iterator for FreeSets {
    type Item = BTreeSet<Letter>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let ok = if self.fresh {
                self.fresh = false;
                self.search(0)
            } else {
                let last = self.stack.pop().expect("stack holds the previous set");
                self.search(last + 1)
            };
            if ok {
                self.found_at_size = true;
                return Some(self.stack.iter().map(|&i| self.candidates[i]).collect());
            }
            // no set of this size left; larger sizes need a smaller one
            if !self.found_at_size || self.size == self.candidates.len() {
                self.done = true;
            } else {
                self.size += 1;
                self.stack.clear();
                self.fresh = true;
                self.found_at_size = false;
            }
        }
        None
    }
}

pub fn build_graph(p: &Pattern) -> FactorGraph {
    FactorGraph::new(p)
}

pub fn is_free(p: &Pattern, x: Letter) -> Result<bool, GraphError> {
    if !p.contains(x) {
        return Err(GraphError::LetterAbsent(x));
    }
    Ok(FactorGraph::new(p).letter_is_free(x))
}

pub fn is_free_set(p: &Pattern, xs: &BTreeSet<Letter>) -> Result<bool, GraphError> {
    if xs.is_empty() {
        return Err(GraphError::EmptySet);
    }
    if let Some(&x) = xs.iter().find(|&&x| !p.contains(x)) {
        return Err(GraphError::LetterAbsent(x));
    }
    let g = FactorGraph::new(p);
    Ok(xs.iter().all(|&x| xs.iter().all(|&y| !g.conflicts(x, y))))
}

pub fn free_letters(p: &Pattern) -> Vec<Letter> {
    let g = FactorGraph::new(p);
    p.alphabet().filter(|&x| g.letter_is_free(x)).collect()
}

pub fn enumerate_free_sets(p: &Pattern) -> FreeSets {
    FactorGraph::new(p).conflict_relation().free_sets()
}
