//! Unavoidability by exhaustive, memoized reduction search.
//!
//! Two independent strategies are provided:
//!
//! * [`decide_free_sets`] searches for a sequence of free-set deletions that
//!   empties the pattern.
//! * [`decide_bem`] searches over single free-letter deletions and letter
//!   identifications.
//!
//! Both emit a [`Certificate`] that [`verify_certificate`] replays from
//! scratch, so a positive verdict never has to be taken on trust.
//!
//! The free-set search works on a compressed state. Letters that occur once
//! split the pattern into blocks; factors touching such a letter never take
//! part in a conflict between other letters, so once-letters are held back
//! until every other letter is gone and only the blocks are searched. Within
//! that block state, a free letter that never sits strictly inside a block can
//! only lose factors under later deletions, so deleting it never closes a
//! route to the empty word; such letters are removed greedily without
//! branching. A state in which some block contains a square is a dead end.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::FactorGraph;
use crate::pattern::{Letter, Pattern, PatternError};

pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("state budget of {limit} exceeded")]
    Budget { limit: u64 },
    #[error("strategies disagree: free-set search says {free_sets}, identification search says {bem}")]
    Disagreement { free_sets: &'static str, bem: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    FreeSets,
    Bem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub state_budget: u64,
    /// Run both strategies and fail on disagreement.
    pub paranoid: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            state_budget: DEFAULT_STATE_BUDGET,
            paranoid: false,
        }
    }
}

/// One reduction step; letters are coordinates of the state it applies to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ReductionStep {
    DeleteFreeSet(BTreeSet<Letter>),
    DeleteFreeLetter(Letter),
    Identify { from: Letter, to: Letter },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub steps: Vec<ReductionStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Unavoidable(Certificate),
    Avoidable,
}

impl Verdict {
    pub fn is_unavoidable(&self) -> bool {
        matches!(self, Verdict::Unavoidable(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Unavoidable(_) => "unavoidable",
            Verdict::Avoidable => "avoidable",
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Unavoidable(c) => Some(c),
            Verdict::Avoidable => None,
        }
    }
}

/// Statistics from a search run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub states: u64,
    pub memo_hits: u64,
}

pub fn decide(p: &Pattern, config: &SearchConfig) -> Result<Verdict, DecideError> {
    let verdict = decide_free_sets(p, config)?;
    if config.paranoid {
        let other = decide_bem(p, config)?;
        if verdict.is_unavoidable() != other.is_unavoidable() {
            return Err(DecideError::Disagreement {
                free_sets: verdict.label(),
                bem: other.label(),
            });
        }
    }
    Ok(verdict)
}

pub fn decide_with(p: &Pattern, strategy: Strategy, config: &SearchConfig) -> Result<Verdict, DecideError> {
    match strategy {
        Strategy::FreeSets => decide_free_sets(p, config),
        Strategy::Bem => decide_bem(p, config),
    }
}

pub fn decide_free_sets(p: &Pattern, config: &SearchConfig) -> Result<Verdict, DecideError> {
    decide_free_sets_with_stats(p, config).map(|(v, _)| v)
}

pub fn decide_free_sets_with_stats(p: &Pattern, config: &SearchConfig) -> Result<(Verdict, SearchStats), DecideError> {
    let counts = p.occurrences();
    let once: Vec<u32> = (0..p.alphabet_size() as u32)
        .filter(|&x| counts[x as usize] == 1)
        .collect();
    let blocks: Vec<Vec<u32>> = p
        .letters()
        .split(|l| counts[l.index()] == 1)
        .map(|b| b.iter().map(|l| l.0).collect())
        .collect();

    let mut search = FreeSetSearch {
        alphabet_size: p.alphabet_size(),
        budget: config.state_budget,
        avoidable: HashSet::new(),
        path: Vec::new(),
        stats: SearchStats::default(),
    };
    let found = search.solve(normalize_blocks(blocks))?;
    let stats = search.stats;
    if !found {
        return Ok((Verdict::Avoidable, stats));
    }

    // Letters still standing: those never deleted from the block state, then
    // the once-letters.
    let mut deleted = vec![false; p.alphabet_size()];
    for step in &search.path {
        for &x in step {
            deleted[x as usize] = true;
        }
    }
    let mut steps = search.path;
    let is_once = |x: u32| counts[x as usize] == 1;
    steps.extend(
        (0..p.alphabet_size() as u32)
            .filter(|&x| !deleted[x as usize] && !is_once(x))
            .map(|x| vec![x]),
    );
    steps.extend(once.into_iter().map(|x| vec![x]));
    Ok((
        Verdict::Unavoidable(to_state_coordinates(p.alphabet_size(), steps)),
        stats,
    ))
}

/// Maps steps over original letter indices to the re-densified coordinates
/// of each intermediate state.
fn to_state_coordinates(alphabet_size: usize, steps: Vec<Vec<u32>>) -> Certificate {
    let mut alive: Vec<u32> = (0..alphabet_size as u32).collect();
    let mut out = Vec::with_capacity(steps.len());
    for step in steps {
        let set: BTreeSet<Letter> = step
            .iter()
            .map(|x| Letter(alive.binary_search(x).expect("letter alive") as u32))
            .collect();
        alive.retain(|x| !step.contains(x));
        out.push(ReductionStep::DeleteFreeSet(set));
    }
    Certificate { steps: out }
}

/// Blocks of length two or more, sorted and deduplicated. Shorter blocks
/// carry no 2-factor and never influence freeness.
fn normalize_blocks(blocks: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let mut blocks: Vec<Vec<u32>> = blocks.into_iter().filter(|b| b.len() >= 2).collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks
}

fn delete_from_blocks(blocks: &[Vec<u32>], xs: &[u32]) -> Vec<Vec<u32>> {
    normalize_blocks(
        blocks
            .iter()
            .map(|b| b.iter().copied().filter(|x| !xs.contains(x)).collect())
            .collect(),
    )
}

/// Memo key: the sorted blocks joined by a sentinel, renamed by first
/// occurrence. Equal keys mean the two states are renamings of each other.
fn block_key(blocks: &[Vec<u32>]) -> Vec<u32> {
    let mut rename = std::collections::HashMap::new();
    let mut key = Vec::with_capacity(blocks.iter().map(|b| b.len() + 1).sum());
    for b in blocks {
        for &x in b {
            let next = rename.len() as u32;
            key.push(*rename.entry(x).or_insert(next));
        }
        key.push(u32::MAX);
    }
    key
}

struct FreeSetSearch {
    alphabet_size: usize,
    budget: u64,
    avoidable: HashSet<Vec<u32>>,
    path: Vec<Vec<u32>>,
    stats: SearchStats,
}

/// Conflict data for the letters of a block state, in dense local coordinates.
struct Local {
    letters: Vec<u32>,
    relation: crate::graph::ConflictRelation,
}

impl FreeSetSearch {
    fn local(&self, blocks: &[Vec<u32>]) -> Local {
        let letters: Vec<u32> = blocks
            .iter()
            .flatten()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut dense = vec![u32::MAX; self.alphabet_size];
        for (i, &x) in letters.iter().enumerate() {
            dense[x as usize] = i as u32;
        }
        let graph = FactorGraph::from_factors(
            letters.len(),
            blocks
                .iter()
                .flat_map(|b| b.windows(2).map(|w| (dense[w[0] as usize], dense[w[1] as usize]))),
        );
        Local {
            relation: graph.conflict_relation(),
            letters,
        }
    }

    fn solve(&mut self, mut blocks: Vec<Vec<u32>>) -> Result<bool, DecideError> {
        let mark = self.path.len();
        let local = loop {
            if blocks.iter().any(|b| b.windows(2).any(|w| w[0] == w[1])) {
                self.path.truncate(mark);
                return Ok(false);
            }
            if blocks.is_empty() {
                return Ok(true);
            }
            let local = self.local(&blocks);
            let mut interior = vec![false; self.alphabet_size];
            for b in &blocks {
                for &x in &b[1..b.len() - 1] {
                    interior[x as usize] = true;
                }
            }
            let greedy: Vec<u32> = local
                .relation
                .free_letters()
                .into_iter()
                .map(|l| local.letters[l.index()])
                .filter(|&x| !interior[x as usize])
                .collect();
            if greedy.is_empty() {
                break local;
            }
            self.path.extend(greedy.iter().map(|&x| vec![x]));
            blocks = delete_from_blocks(&blocks, &greedy);
        };

        let key = block_key(&blocks);
        if self.avoidable.contains(&key) {
            self.stats.memo_hits += 1;
            self.path.truncate(mark);
            return Ok(false);
        }
        self.stats.states += 1;
        if self.stats.states > self.budget {
            return Err(DecideError::Budget { limit: self.budget });
        }

        for set in local.relation.free_sets() {
            let xs: Vec<u32> = set.iter().map(|l| local.letters[l.index()]).collect();
            let child = delete_from_blocks(&blocks, &xs);
            self.path.push(xs);
            if self.solve(child)? {
                return Ok(true);
            }
            self.path.pop();
        }
        self.avoidable.insert(key);
        self.path.truncate(mark);
        Ok(false)
    }
}

pub fn decide_bem(p: &Pattern, config: &SearchConfig) -> Result<Verdict, DecideError> {
    let mut search = BemSearch {
        budget: config.state_budget,
        states: 0,
        avoidable: HashSet::new(),
        path: Vec::new(),
    };
    if search.solve(p.clone())? {
        Ok(Verdict::Unavoidable(Certificate { steps: search.path }))
    } else {
        Ok(Verdict::Avoidable)
    }
}

struct BemSearch {
    budget: u64,
    states: u64,
    avoidable: HashSet<Vec<Letter>>,
    path: Vec<ReductionStep>,
}

impl BemSearch {
    fn solve(&mut self, state: Pattern) -> Result<bool, DecideError> {
        if state.is_empty() {
            return Ok(true);
        }
        if state.has_square_letter() {
            return Ok(false);
        }
        let key = state.canonicalize().letters().to_vec();
        if self.avoidable.contains(&key) {
            return Ok(false);
        }
        self.states += 1;
        if self.states > self.budget {
            return Err(DecideError::Budget { limit: self.budget });
        }
        let graph = FactorGraph::new(&state);
        for x in state.alphabet().filter(|&x| graph.letter_is_free(x)) {
            let child = state.delete_letters(&BTreeSet::from([x])).expect("letter present");
            self.path.push(ReductionStep::DeleteFreeLetter(x));
            if self.solve(child)? {
                return Ok(true);
            }
            self.path.pop();
        }
        for from in state.alphabet() {
            for to in state.alphabet().filter(|&to| to != from) {
                let child = state.identify(from, to).expect("letters present");
                self.path.push(ReductionStep::Identify { from, to });
                if self.solve(child)? {
                    return Ok(true);
                }
                self.path.pop();
            }
        }
        self.avoidable.insert(key);
        Ok(false)
    }
}

/// The first step of a certificate that fails to replay.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {reason}")]
pub struct CertificateError {
    /// 1-based step number; `steps + 1` when the replay ends non-empty.
    pub step: usize,
    pub reason: String,
}

/// Replays `c` from `p`, checking every precondition against the factor
/// graph of the state it applies to.
pub fn verify_certificate(p: &Pattern, c: &Certificate) -> Result<(), CertificateError> {
    let mut state = p.clone();
    for (i, step) in c.steps.iter().enumerate() {
        let fail = |reason: String| CertificateError { step: i + 1, reason };
        let name = |s: &Pattern, x: Letter| {
            if s.contains(x) {
                s.token(x)
            } else {
                x.to_string()
            }
        };
        state = match step {
            ReductionStep::DeleteFreeSet(xs) => {
                if xs.is_empty() {
                    return Err(fail("empty set".into()));
                }
                if let Some(&x) = xs.iter().find(|&&x| !state.contains(x)) {
                    return Err(fail(format!("{} absent", name(&state, x))));
                }
                let graph = FactorGraph::new(&state);
                for &x in xs {
                    for &y in xs {
                        if graph.conflicts(x, y) {
                            return Err(fail(if x == y {
                                format!("{} not free", state.token(x))
                            } else {
                                format!("set not free: {} reaches {}", state.token(x), state.token(y))
                            }));
                        }
                    }
                }
                state.delete_letters(xs).expect("letters present")
            }
            ReductionStep::DeleteFreeLetter(x) => {
                if !state.contains(*x) {
                    return Err(fail(format!("{} absent", name(&state, *x))));
                }
                if !FactorGraph::new(&state).letter_is_free(*x) {
                    return Err(fail(format!("{} not free", state.token(*x))));
                }
                state.delete_letters(&BTreeSet::from([*x])).expect("letter present")
            }
            ReductionStep::Identify { from, to } => match state.identify(*from, *to) {
                Ok(next) => next,
                Err(PatternError::SameLetter(t)) => return Err(fail(format!("cannot identify {t} with itself"))),
                Err(e) => return Err(fail(e.to_string())),
            },
        };
    }
    if !state.is_empty() {
        return Err(CertificateError {
            step: c.steps.len() + 1,
            reason: format!("replay ends at {state}, not the empty word"),
        });
    }
    Ok(())
}

/// Line-oriented JSON form of a step; letters are display tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StepRecord {
    DeleteFreeSet { letters: Vec<String> },
    DeleteFreeLetter { letter: String },
    Identify { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateFormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("step {step}: unknown letter {token}")]
    UnknownLetter { step: usize, token: String },
    #[error("step {step}: {source}")]
    Replay { step: usize, source: PatternError },
}

impl Certificate {
    /// Token-level records, using the legend of the state each step applies to.
    pub fn records(&self, p: &Pattern) -> Result<Vec<StepRecord>, CertificateFormatError> {
        let mut state = p.clone();
        let mut out = Vec::with_capacity(self.steps.len());
        for (i, step) in self.steps.iter().enumerate() {
            let step_no = i + 1;
            let token = |s: &Pattern, x: Letter| {
                if s.contains(x) {
                    Ok(s.token(x))
                } else {
                    Err(CertificateFormatError::Replay {
                        step: step_no,
                        source: PatternError::LetterAbsent(x.to_string()),
                    })
                }
            };
            let record = match step {
                ReductionStep::DeleteFreeSet(xs) => StepRecord::DeleteFreeSet {
                    letters: xs.iter().map(|&x| token(&state, x)).collect::<Result<_, _>>()?,
                },
                ReductionStep::DeleteFreeLetter(x) => StepRecord::DeleteFreeLetter {
                    letter: token(&state, *x)?,
                },
                ReductionStep::Identify { from, to } => StepRecord::Identify {
                    from: token(&state, *from)?,
                    to: token(&state, *to)?,
                },
            };
            state = apply_unchecked(&state, step)
                .map_err(|source| CertificateFormatError::Replay { step: step_no, source })?;
            out.push(record);
        }
        Ok(out)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self, p: &Pattern) -> Result<String, CertificateFormatError> {
        Ok(self
            .records(p)?
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect())
    }

    /// Resolves token-level records against the states reached by replaying
    /// them from `p`. Freeness is not checked here.
    pub fn from_records(p: &Pattern, records: &[StepRecord]) -> Result<Certificate, CertificateFormatError> {
        let mut state = p.clone();
        let mut steps = Vec::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            let step_no = i + 1;
            let letter = |s: &Pattern, t: &str| {
                s.letter_of(t).ok_or_else(|| CertificateFormatError::UnknownLetter {
                    step: step_no,
                    token: t.to_string(),
                })
            };
            let step = match record {
                StepRecord::DeleteFreeSet { letters } => {
                    ReductionStep::DeleteFreeSet(letters.iter().map(|t| letter(&state, t)).collect::<Result<_, _>>()?)
                }
                StepRecord::DeleteFreeLetter { letter: t } => ReductionStep::DeleteFreeLetter(letter(&state, t)?),
                StepRecord::Identify { from, to } => ReductionStep::Identify {
                    from: letter(&state, from)?,
                    to: letter(&state, to)?,
                },
            };
            state = apply_unchecked(&state, &step)
                .map_err(|source| CertificateFormatError::Replay { step: step_no, source })?;
            steps.push(step);
        }
        Ok(Certificate { steps })
    }

    /// Reads certificate lines. Blank lines and lines that are not JSON
    /// objects (such as a leading verdict line) are skipped; an object with a
    /// `certificate` array contributes that array.
    pub fn parse_json_lines(p: &Pattern, text: &str) -> Result<Certificate, CertificateFormatError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if !line.starts_with('{') {
                continue;
            }
            let syntax = |e: serde_json::Error| CertificateFormatError::Syntax {
                line: i + 1,
                message: e.to_string(),
            };
            let value: serde_json::Value = serde_json::from_str(line).map_err(syntax)?;
            match value.get("certificate") {
                Some(steps) => {
                    let steps: Vec<StepRecord> = serde_json::from_value(steps.clone()).map_err(syntax)?;
                    records.extend(steps);
                }
                None => records.push(serde_json::from_value(value).map_err(syntax)?),
            }
        }
        Self::from_records(p, &records)
    }
}

fn apply_unchecked(state: &Pattern, step: &ReductionStep) -> Result<Pattern, PatternError> {
    match step {
        ReductionStep::DeleteFreeSet(xs) => state.delete_letters(xs),
        ReductionStep::DeleteFreeLetter(x) => state.delete_letters(&BTreeSet::from([*x])),
        ReductionStep::Identify { from, to } => state.identify(*from, *to),
    }
}
