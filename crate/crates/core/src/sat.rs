//! Reduction from 3-CNF satisfiability to pattern unavoidability.
//!
//! Every variable `x_i` contributes `e x_i ~x_i e z`, every clause eleven
//! separator-terminated factors chosen by how many of its literals are
//! negated. The word is unavoidable exactly when the formula is satisfiable.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::decider::{
    decide, verify_certificate, Certificate, CertificateError, CertificateFormatError, DecideError, SearchConfig,
    StepRecord, Verdict,
};
use crate::pattern::{Pattern, PatternError, DEFAULT_ALPHABET_CAP};

/// Largest variable count accepted by the truth-table check.
pub const MAX_BRUTE_FORCE_VARIABLES: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("missing `p cnf` header")]
    MissingHeader,
    #[error("line {line}: malformed header")]
    MalformedHeader { line: usize },
    #[error("line {line}: bad literal `{token}`")]
    BadLiteral { line: usize, token: String },
    #[error("clause {clause} has {arity} literals, expected 3")]
    ClauseArity { clause: usize, arity: usize },
    #[error("clause {clause} repeats variable {variable}")]
    RepeatedVariable { clause: usize, variable: u32 },
    #[error("clause {clause} uses variable {variable}, header declares {variable_count}")]
    VariableOutOfRange {
        clause: usize,
        variable: u32,
        variable_count: u32,
    },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("last clause is not terminated by 0")]
    Unterminated,
    #[error("formula has no clauses")]
    NoClauses,
    #[error("formula has no variables")]
    NoVariables,
    #[error("{count} variables is too many for a truth-table check (limit {MAX_BRUTE_FORCE_VARIABLES})")]
    TooManyVariables { count: u32 },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Literal {
    /// 1-based.
    pub variable: u32,
    pub negated: bool,
}

impl Literal {
    pub fn pos(variable: u32) -> Self {
        Literal {
            variable,
            negated: false,
        }
    }

    pub fn neg(variable: u32) -> Self {
        Literal {
            variable,
            negated: true,
        }
    }

    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.variable as usize - 1] != self.negated
    }

    /// Display token of the letter standing for this literal.
    pub fn token(self) -> String {
        if self.negated {
            format!("~x{}", self.variable)
        } else {
            format!("x{}", self.variable)
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬")?;
        }
        write!(f, "x{}", self.variable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Clause {
    pub literals: [Literal; 3],
}

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Self {
        Clause { literals }
    }

    pub fn negation_count(&self) -> usize {
        self.literals.iter().filter(|l| l.negated).count()
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }

    /// Positive literals first, then negated ones, each by variable index.
    pub fn normalized(&self) -> Clause {
        let mut literals = self.literals;
        literals.sort_by_key(|l| (l.negated, l.variable));
        Clause { literals }
    }

    pub fn is_normalized(&self) -> bool {
        *self == self.normalized()
    }

    fn repeated_variable(&self) -> Option<u32> {
        let [a, b, c] = self.literals.map(|l| l.variable);
        if a == b || a == c {
            Some(a)
        } else if b == c {
            Some(b)
        } else {
            None
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.literals;
        write!(f, "({a}∨{b}∨{c})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CnfFormula {
    pub variable_count: u32,
    pub clauses: Vec<Clause>,
}

impl CnfFormula {
    /// Checks the structural invariants: at least one variable and clause,
    /// in-range variables, three distinct variables per clause.
    pub fn new(variable_count: u32, clauses: Vec<Clause>) -> Result<Self, SatError> {
        if variable_count == 0 {
            return Err(SatError::NoVariables);
        }
        if clauses.is_empty() {
            return Err(SatError::NoClauses);
        }
        for (j, clause) in clauses.iter().enumerate() {
            for l in clause.literals {
                if l.variable == 0 || l.variable > variable_count {
                    return Err(SatError::VariableOutOfRange {
                        clause: j + 1,
                        variable: l.variable,
                        variable_count,
                    });
                }
            }
            if let Some(variable) = clause.repeated_variable() {
                return Err(SatError::RepeatedVariable {
                    clause: j + 1,
                    variable,
                });
            }
        }
        Ok(CnfFormula {
            variable_count,
            clauses,
        })
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.eval(assignment))
    }

    pub fn is_normalized(&self) -> bool {
        self.clauses.iter().all(Clause::is_normalized)
    }

    /// First satisfying assignment in truth-table order (all false first,
    /// `x1` as the lowest bit).
    pub fn brute_force(&self) -> Result<Option<Vec<bool>>, SatError> {
        if self.variable_count > MAX_BRUTE_FORCE_VARIABLES {
            return Err(SatError::TooManyVariables {
                count: self.variable_count,
            });
        }
        let n = self.variable_count as usize;
        Ok((0u64..1 << n)
            .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.eval(a)))
    }

    /// Every satisfying assignment, in truth-table order.
    pub fn satisfying_assignments(&self) -> Result<Vec<Vec<bool>>, SatError> {
        if self.variable_count > MAX_BRUTE_FORCE_VARIABLES {
            return Err(SatError::TooManyVariables {
                count: self.variable_count,
            });
        }
        let n = self.variable_count as usize;
        Ok((0u64..1 << n)
            .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|a| self.eval(a))
            .collect())
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.variable_count, self.clauses.len());
        for c in &self.clauses {
            for l in c.literals {
                let v = l.variable as i64;
                out.push_str(&format!("{} ", if l.negated { -v } else { v }));
            }
            out.push_str("0\n");
        }
        out
    }
}

impl fmt::Display for CnfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.clauses.iter().enumerate() {
            if j > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Reads DIMACS CNF. Comment lines start with `c`; a `%` line ends the
/// input. Clauses are normalized as they are read.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, SatError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                ["p", "cnf", v, c] => v.parse::<u32>().ok().zip(c.parse::<usize>().ok()),
                _ => None,
            };
            if header.is_some() || parsed.is_none() {
                return Err(SatError::MalformedHeader { line: line_no });
            }
            header = parsed;
            continue;
        }
        if header.is_none() {
            return Err(SatError::MissingHeader);
        }
        for token in line.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| SatError::BadLiteral {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                let clause_no = clauses.len() + 1;
                let literals: [Literal; 3] = current.as_slice().try_into().map_err(|_| SatError::ClauseArity {
                    clause: clause_no,
                    arity: current.len(),
                })?;
                clauses.push(Clause::new(literals).normalized());
                current.clear();
            } else {
                let variable = u32::try_from(value.unsigned_abs()).map_err(|_| SatError::BadLiteral {
                    line: line_no,
                    token: token.to_string(),
                })?;
                current.push(Literal {
                    variable,
                    negated: value < 0,
                });
            }
        }
    }
    let (variable_count, declared) = header.ok_or(SatError::MissingHeader)?;
    if !current.is_empty() {
        return Err(SatError::Unterminated);
    }
    if declared != clauses.len() {
        return Err(SatError::ClauseCount {
            declared,
            found: clauses.len(),
        });
    }
    CnfFormula::new(variable_count, clauses)
}

pub fn normalize(f: &CnfFormula) -> CnfFormula {
    CnfFormula {
        variable_count: f.variable_count,
        clauses: f.clauses.iter().map(Clause::normalized).collect(),
    }
}

/// Which of the four letter families a letter of the reduction word is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "class")]
pub enum LetterOrigin {
    /// A variable or its negation.
    X {
        variable: u32,
        negated: bool,
    },
    /// One of `a_j`, `b_j`, `c_j`, `d_j` (1-based clause).
    Y {
        clause: usize,
        role: char,
    },
    E,
    /// The separator ending the `index`-th factor (1-based).
    Z {
        index: usize,
    },
}

impl LetterOrigin {
    pub fn token(self) -> String {
        match self {
            LetterOrigin::X { variable, negated } => Literal { variable, negated }.token(),
            LetterOrigin::Y { clause, role } => format!("{role}{clause}"),
            LetterOrigin::E => "e".to_string(),
            LetterOrigin::Z { index } => format!("z{index}"),
        }
    }

    pub fn is_x(self) -> bool {
        matches!(self, LetterOrigin::X { .. })
    }

    pub fn is_y(self) -> bool {
        matches!(self, LetterOrigin::Y { .. })
    }

    pub fn is_z(self) -> bool {
        matches!(self, LetterOrigin::Z { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LegendEntry {
    pub token: String,
    #[serde(flatten)]
    pub origin: LetterOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionOutput {
    pub word: Pattern,
    /// Indexed by letter.
    pub legend: Vec<LegendEntry>,
    /// The listed factors in order, each ending with its separator.
    pub factors: Vec<Vec<LetterOrigin>>,
}

impl ReductionOutput {
    pub fn separator_count(&self) -> usize {
        self.legend.iter().filter(|e| e.origin.is_z()).count()
    }

    pub fn legend_json(&self) -> serde_json::Value {
        serde_json::json!({ "letters": self.legend })
    }
}

// The four clause templates, before separators. `P`, `Q`, `R` stand for the
// clause's three literals after normalization.
#[derive(Clone, Copy)]
enum Slot {
    P,
    Q,
    R,
    A,
    B,
    C,
    D,
    E,
}

const TEMPLATES: [[[Slot; 2]; 11]; 4] = {
    use Slot::*;
    [
        [
            [A, P],
            [B, P],
            [B, Q],
            [C, Q],
            [C, R],
            [D, R],
            [D, A],
            [A, B],
            [A, C],
            [A, D],
            [A, E],
        ],
        [
            [A, P],
            [B, P],
            [B, Q],
            [C, Q],
            [C, D],
            [R, D],
            [R, A],
            [A, B],
            [A, C],
            [D, A],
            [A, E],
        ],
        [
            [A, P],
            [B, P],
            [B, C],
            [Q, C],
            [Q, D],
            [R, D],
            [R, A],
            [A, B],
            [C, A],
            [D, A],
            [A, E],
        ],
        [
            [A, B],
            [P, B],
            [P, C],
            [Q, C],
            [Q, D],
            [R, D],
            [R, A],
            [B, A],
            [C, A],
            [D, A],
            [E, A],
        ],
    ]
};

pub fn build_word(f: &CnfFormula) -> Result<ReductionOutput, SatError> {
    build_word_with_cap(f, DEFAULT_ALPHABET_CAP)
}

/// Builds the reduction word. Clauses that are not normalized are normalized
/// first; the formula is checked as in [`CnfFormula::new`].
pub fn build_word_with_cap(f: &CnfFormula, cap: usize) -> Result<ReductionOutput, SatError> {
    let f = CnfFormula::new(f.variable_count, f.clauses.iter().map(Clause::normalized).collect())?;
    let mut factors: Vec<Vec<LetterOrigin>> = Vec::new();
    let mut push = |mut factor: Vec<LetterOrigin>| {
        factor.push(LetterOrigin::Z {
            index: factors.len() + 1,
        });
        factors.push(factor);
    };
    for variable in 1..=f.variable_count {
        push(vec![
            LetterOrigin::E,
            LetterOrigin::X {
                variable,
                negated: false,
            },
            LetterOrigin::X {
                variable,
                negated: true,
            },
            LetterOrigin::E,
        ]);
    }
    for (j, clause) in f.clauses.iter().enumerate() {
        let clause_no = j + 1;
        let literal = |l: Literal| LetterOrigin::X {
            variable: l.variable,
            negated: l.negated,
        };
        let y = |role| LetterOrigin::Y {
            clause: clause_no,
            role,
        };
        let resolve = |slot: Slot| match slot {
            Slot::P => literal(clause.literals[0]),
            Slot::Q => literal(clause.literals[1]),
            Slot::R => literal(clause.literals[2]),
            Slot::A => y('a'),
            Slot::B => y('b'),
            Slot::C => y('c'),
            Slot::D => y('d'),
            Slot::E => LetterOrigin::E,
        };
        for pair in TEMPLATES[clause.negation_count()] {
            push(pair.iter().map(|&s| resolve(s)).collect());
        }
    }
    let origins: Vec<LetterOrigin> = factors.iter().flatten().copied().collect();
    let tokens: Vec<String> = origins.iter().map(|o| o.token()).collect();
    let word = Pattern::from_tokens(&tokens, cap)?;
    let mut legend: Vec<Option<LegendEntry>> = vec![None; word.alphabet_size()];
    for (&letter, &origin) in word.letters().iter().zip(&origins) {
        legend[letter.index()].get_or_insert_with(|| LegendEntry {
            token: origin.token(),
            origin,
        });
    }
    Ok(ReductionOutput {
        word,
        legend: legend.into_iter().map(|e| e.expect("every letter occurs")).collect(),
        factors,
    })
}

/// The five-stage deletion schedule for a satisfying assignment: the true
/// literals, then each clause's `a b c d`, then `e`, then the remaining
/// literals, then the separators. Returned as token-level records.
///
/// Whether every step deletes a free letter depends on the formula and the
/// assignment; [`check_schedule`] replays it.
pub fn deletion_schedule(out: &ReductionOutput, f: &CnfFormula, assignment: &[bool]) -> Vec<StepRecord> {
    let delete = |origin: LetterOrigin| StepRecord::DeleteFreeLetter { letter: origin.token() };
    let mut records = Vec::new();
    for variable in 1..=f.variable_count {
        let value = assignment[variable as usize - 1];
        records.push(delete(LetterOrigin::X {
            variable,
            negated: !value,
        }));
    }
    for clause in 1..=f.clauses.len() {
        for role in ['a', 'b', 'c', 'd'] {
            records.push(delete(LetterOrigin::Y { clause, role }));
        }
    }
    records.push(delete(LetterOrigin::E));
    for variable in 1..=f.variable_count {
        let value = assignment[variable as usize - 1];
        records.push(delete(LetterOrigin::X {
            variable,
            negated: value,
        }));
    }
    for index in 1..=out.separator_count() {
        records.push(delete(LetterOrigin::Z { index }));
    }
    records
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Format(#[from] CertificateFormatError),
    #[error(transparent)]
    Replay(#[from] CertificateError),
}

/// Resolves the schedule for `assignment` and replays it on the word.
pub fn check_schedule(
    out: &ReductionOutput,
    f: &CnfFormula,
    assignment: &[bool],
) -> Result<Certificate, ScheduleError> {
    let cert = Certificate::from_records(&out.word, &deletion_schedule(out, f, assignment))?;
    verify_certificate(&out.word, &cert)?;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub satisfiable: bool,
    /// First satisfying assignment in truth-table order.
    pub assignment: Option<Vec<bool>>,
    pub verdict: &'static str,
    pub agree: bool,
    /// `None` when unsatisfiable; otherwise the replay outcome of the
    /// deletion schedule for `assignment`. Serialized as `null`,
    /// `{"replays":true}` or `{"replays":false,"error":"..."}`.
    #[serde(serialize_with = "serialize_schedule")]
    pub schedule: Option<Result<(), String>>,
    pub letters: usize,
    pub alphabet: usize,
}

fn serialize_schedule<S: serde::Serializer>(schedule: &Option<Result<(), String>>, s: S) -> Result<S::Ok, S::Error> {
    match schedule {
        None => s.serialize_none(),
        Some(Ok(())) => serde_json::json!({ "replays": true }).serialize(s),
        Some(Err(e)) => serde_json::json!({ "replays": false, "error": e }).serialize(s),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

/// Truth-table satisfiability against the decider's verdict on the word,
/// run side by side.
pub fn check_equivalence(f: &CnfFormula, config: &SearchConfig) -> Result<EquivalenceReport, EquivalenceError> {
    let out = build_word(f)?;
    let f = normalize(f);
    let (sat, verdict) = rayon::join(|| f.brute_force(), || decide(&out.word, config));
    let assignment = sat?;
    let verdict: Verdict = verdict?;
    let satisfiable = assignment.is_some();
    let schedule = assignment
        .as_ref()
        .map(|a| check_schedule(&out, &f, a).map(|_| ()).map_err(|e| e.to_string()));
    Ok(EquivalenceReport {
        satisfiable,
        agree: satisfiable == verdict.is_unavoidable(),
        verdict: verdict.label(),
        assignment,
        schedule,
        letters: out.word.len(),
        alphabet: out.word.alphabet_size(),
    })
}

/// The eight clauses over `x1, x2, x3` with every sign combination, in
/// order of negation mask (bit `i` negates `x_{i+1}`).
pub fn sign_combination_clauses() -> Vec<Clause> {
    (0u8..8)
        .map(|mask| {
            let lit = |v: u32| Literal {
                variable: v,
                negated: mask >> (v - 1) & 1 == 1,
            };
            Clause::new([lit(1), lit(2), lit(3)]).normalized()
        })
        .collect()
}

/// Bundled test formulas: every 1-, 2- and 3-clause subset of the eight
/// sign-combination clauses over three variables (all satisfiable), then
/// the unsatisfiable conjunction of all eight.
pub fn corpus() -> Vec<CnfFormula> {
    let all = sign_combination_clauses();
    let mut out = Vec::new();
    for size in 1..=3 {
        for mask in 0u32..256 {
            if mask.count_ones() == size {
                let clauses = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| all[i]).collect();
                out.push(CnfFormula::new(3, clauses).expect("valid clauses"));
            }
        }
    }
    out.push(unsat_instance());
    out
}

pub fn unsat_instance() -> CnfFormula {
    CnfFormula::new(3, sign_combination_clauses()).expect("valid clauses")
}
