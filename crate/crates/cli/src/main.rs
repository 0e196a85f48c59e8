//! `unavoid`: command-line front end.
//!
//! Exit codes: 0 success, 1 negative verdict, 2 usage error, 3 budget exceeded.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use unavoidable::analysis::{
    self, census_table, format_word, AnalysisError, AvoidConfig, BoundValue, CensusConfig, LongestAvoiding,
    DEFAULT_DIGIT_CAP,
};
use unavoidable::decider::{decide_with, CertificateFormatError, DecideError, SearchConfig, Strategy, Verdict};
use unavoidable::pattern::{Pattern, DEFAULT_ALPHABET_CAP};
use unavoidable::reflection::{self, ReflectionError, DEFAULT_LENGTH_CAP, DEFAULT_NODE_BUDGET};
use unavoidable::sat::{self, EquivalenceError, SatError};
use unavoidable::{build_graph, decide, verify_certificate, Certificate, FactorGraph};

// Writes to stdout; a closed pipe (e.g. `| head`) ends the process quietly
// instead of panicking.
macro_rules! outraw {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if write!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

#[derive(Parser)]
#[command(
    name = "unavoid",
    version,
    about = "Decide and explore unavoidability of word patterns"
)]
struct Cli {
    /// Machine-readable output, one JSON document per line.
    #[arg(long, global = true)]
    json: bool,
    /// Search budget: decider states, or nodes per reflection check.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Largest alphabet accepted when parsing patterns.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHABET_CAP)]
    alphabet_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PatternInput {
    /// The pattern, e.g. `xyx` or `x1 x2 x1`.
    pattern: Option<String>,
    /// Read the pattern from a file instead.
    #[arg(long, conflicts_with = "pattern")]
    file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    FreeSets,
    Bem,
}

#[derive(Subcommand)]
enum Command {
    /// Free letters of a pattern, or whether one letter is free.
    Free {
        pattern: Option<String>,
        /// Test only this letter.
        letter: Option<String>,
        /// Read the pattern from a file; the first positional is then the letter.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Write the 2-factor graph in Graphviz format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Free sets, by size then lexicographically.
    FreeSets {
        #[command(flatten)]
        input: PatternInput,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Decide unavoidability and print a certificate.
    Decide {
        #[command(flatten)]
        input: PatternInput,
        #[arg(long, value_enum, default_value = "free-sets")]
        strategy: StrategyArg,
        /// Run both strategies and fail if they disagree.
        #[arg(long)]
        paranoid: bool,
    },
    /// Replay a certificate (JSON lines) against a pattern.
    Verify {
        #[command(flatten)]
        input: PatternInput,
        /// Certificate file; standard input when absent.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Whether a word contains a non-erasing image of a pattern.
    Reflect {
        word: String,
        #[command(flatten)]
        input: PatternInput,
    },
    /// The Zimin word Z_k.
    Zimin {
        k: usize,
        #[arg(long, default_value_t = DEFAULT_LENGTH_CAP)]
        cap: usize,
    },
    /// Build the pattern of a 3-CNF formula in DIMACS form.
    Reduce {
        /// DIMACS file; standard input when absent.
        dimacs: Option<PathBuf>,
    },
    /// Compare truth-table satisfiability with the verdict on the built pattern.
    CheckSat { dimacs: Option<PathBuf> },
    /// The length bound N(n, r).
    Bound {
        n: u64,
        r: u64,
        #[arg(long, default_value_t = DEFAULT_DIGIT_CAP)]
        digits: usize,
    },
    /// The density bound ((r-1)/r)^(n-1).
    Density { r: u64, n: u32 },
    /// The bound on the number of unavoidable patterns over [r].
    CountBound {
        r: u64,
        #[arg(long, default_value_t = DEFAULT_DIGIT_CAP)]
        digits: usize,
    },
    /// Count unavoidable words of [r]^n.
    Census {
        r: u64,
        n: u32,
        /// One row per length 1..=n.
        #[arg(long)]
        all_lengths: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Longest word over [r] avoiding a pattern, up to a cap.
    Avoid {
        #[command(flatten)]
        input: PatternInput,
        /// Alphabet size.
        #[arg(short = 'r', long = "alphabet")]
        r: u32,
        #[arg(long, default_value_t = 30)]
        cap: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Budget(String),
}

impl From<DecideError> for Failure {
    fn from(e: DecideError) -> Self {
        match e {
            DecideError::Budget { .. } => Failure::Budget(e.to_string()),
            DecideError::Disagreement { .. } => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ReflectionError> for Failure {
    fn from(e: ReflectionError) -> Self {
        match e {
            ReflectionError::Budget { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Decide(e) => e.into(),
            AnalysisError::Reflection(e) => e.into(),
            AnalysisError::CensusBudget { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<SatError> for Failure {
    fn from(e: SatError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<EquivalenceError> for Failure {
    fn from(e: EquivalenceError) -> Self {
        match e {
            EquivalenceError::Sat(e) => e.into(),
            EquivalenceError::Decide(e) => e.into(),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

struct Ctx {
    json: bool,
    budget: Option<u64>,
    alphabet_cap: usize,
}

impl Ctx {
    fn search(&self, paranoid: bool) -> SearchConfig {
        SearchConfig {
            state_budget: self.budget.unwrap_or(SearchConfig::default().state_budget),
            paranoid,
        }
    }

    fn node_budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_NODE_BUDGET)
    }

    fn pattern(&self, input: &PatternInput) -> Result<Pattern, Failure> {
        let text = match (&input.pattern, &input.file) {
            (Some(p), _) => p.clone(),
            (None, Some(path)) => {
                std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
            (None, None) => return Err(usage("no pattern given (inline or --file)")),
        };
        Pattern::parse_with_cap(&text, self.alphabet_cap).map_err(usage)
    }
}

fn read_input(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).map_err(usage)?;
            Ok(text)
        }
    }
}

fn emit(value: serde_json::Value) {
    out!("{value}");
}

fn bound_json(value: &BoundValue) -> serde_json::Value {
    match value {
        BoundValue::Exact(v) => json!({ "value": v.to_string(), "overflow": false }),
        BoundValue::Overflow { digit_cap } => json!({ "value": null, "overflow": true, "digit_cap": digit_cap }),
    }
}

fn run(cli: Cli) -> Outcome {
    let ctx = Ctx {
        json: cli.json,
        budget: cli.budget,
        alphabet_cap: cli.alphabet_cap,
    };
    match cli.command {
        Command::Free {
            pattern,
            letter,
            file,
            dot,
        } => {
            let (input, letter) = match file {
                Some(file) => {
                    if letter.is_some() {
                        return Err(usage("pattern given both inline and with --file"));
                    }
                    (
                        PatternInput {
                            pattern: None,
                            file: Some(file),
                        },
                        pattern,
                    )
                }
                None => (PatternInput { pattern, file: None }, letter),
            };
            let p = ctx.pattern(&input)?;
            let graph = build_graph(&p);
            if let Some(path) = dot {
                std::fs::write(&path, graph.to_dot(&p)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            match letter {
                Some(token) => {
                    let x = p
                        .letter_of(&token)
                        .ok_or_else(|| usage(format!("letter {token} does not occur")))?;
                    let free = graph.letter_is_free(x);
                    if ctx.json {
                        emit(json!({ "letter": token, "free": free }));
                    } else {
                        out!("{}", if free { "free" } else { "not free" });
                    }
                    Ok(free)
                }
                None => {
                    let free: Vec<String> = free_tokens(&p, &graph);
                    if ctx.json {
                        emit(json!({ "free_letters": free }));
                    } else {
                        out!("{}", free.join(" "));
                    }
                    Ok(true)
                }
            }
        }
        Command::FreeSets { input, limit } => {
            let p = ctx.pattern(&input)?;
            let sets = build_graph(&p).conflict_relation().free_sets();
            for set in sets.take(limit.unwrap_or(usize::MAX)) {
                let tokens: Vec<String> = set.iter().map(|&x| p.token(x)).collect();
                if ctx.json {
                    emit(json!(tokens));
                } else {
                    out!("{{{}}}", tokens.join(", "));
                }
            }
            Ok(true)
        }
        Command::Decide {
            input,
            strategy,
            paranoid,
        } => {
            let p = ctx.pattern(&input)?;
            let config = ctx.search(paranoid);
            let verdict = if paranoid {
                decide(&p, &config)?
            } else {
                let strategy = match strategy {
                    StrategyArg::FreeSets => Strategy::FreeSets,
                    StrategyArg::Bem => Strategy::Bem,
                };
                decide_with(&p, strategy, &config)?
            };
            print_verdict(&p, &verdict, ctx.json)?;
            Ok(verdict.is_unavoidable())
        }
        Command::Verify { input, cert } => {
            let p = ctx.pattern(&input)?;
            let text = read_input(cert.as_ref())?;
            let parsed = Certificate::parse_json_lines(&p, &text);
            let result = match parsed {
                Err(e @ CertificateFormatError::Syntax { .. }) => return Err(usage(e)),
                Err(e) => Err(e.to_string()),
                Ok(c) => verify_certificate(&p, &c).map_err(|e| e.to_string()),
            };
            match &result {
                Ok(()) if ctx.json => emit(json!({ "valid": true })),
                Ok(()) => out!("valid"),
                Err(reason) if ctx.json => emit(json!({ "valid": false, "reason": reason })),
                Err(reason) => out!("invalid: {reason}"),
            }
            Ok(result.is_ok())
        }
        Command::Reflect { word, input } => {
            let p = ctx.pattern(&input)?;
            let word = unavoidable::pattern::tokenize(&word);
            if word.is_empty() {
                return Err(usage("empty word"));
            }
            let found = reflection::reflects(&word, &p, ctx.node_budget())?;
            let images: Option<Vec<(String, String)>> = found.map(|m| {
                p.alphabet()
                    .map(|x| (p.token(x), join_tokens(m.image(x).expect("image of every letter"))))
                    .collect()
            });
            if ctx.json {
                let morphism: Option<serde_json::Map<String, serde_json::Value>> = images
                    .as_ref()
                    .map(|im| im.iter().map(|(k, v)| (k.clone(), json!(v))).collect());
                emit(json!({ "reflects": images.is_some(), "morphism": morphism }));
            } else {
                match &images {
                    Some(images) => {
                        out!("reflects");
                        for (x, image) in images {
                            out!("{x} -> {image}");
                        }
                    }
                    None => out!("no reflection"),
                }
            }
            Ok(images.is_some())
        }
        Command::Zimin { k, cap } => {
            let z = reflection::zimin(k, cap)?;
            if ctx.json {
                emit(json!({ "k": k, "word": z.format(), "length": z.len() }));
            } else {
                out!("{}", z.format());
            }
            Ok(true)
        }
        Command::Reduce { dimacs } => {
            let f = sat::parse_dimacs(&read_input(dimacs.as_ref())?)?;
            let out = sat::build_word_with_cap(&f, ctx.alphabet_cap)?;
            if ctx.json {
                emit(json!({ "word": out.word.format(), "legend": out.legend }));
            } else {
                out!("{}", out.word.format());
                out!("{}", out.legend_json());
            }
            Ok(true)
        }
        Command::CheckSat { dimacs } => {
            let f = sat::parse_dimacs(&read_input(dimacs.as_ref())?)?;
            let report = sat::check_equivalence(&f, &ctx.search(false))?;
            if ctx.json {
                emit(serde_json::to_value(&report).expect("report serializes"));
            } else {
                out!("formula: {f}");
                out!("satisfiable: {}", report.satisfiable);
                if let Some(a) = &report.assignment {
                    let bits: Vec<&str> = a.iter().map(|&b| if b { "1" } else { "0" }).collect();
                    out!("assignment: {}", bits.join(""));
                }
                out!("pattern: {} letters over {}", report.letters, report.alphabet);
                out!("verdict: {}", report.verdict);
                out!("agree: {}", report.agree);
                match &report.schedule {
                    Some(Ok(())) => out!("schedule: replays"),
                    Some(Err(e)) => out!("schedule: fails at {e}"),
                    None => {}
                }
            }
            Ok(report.agree)
        }
        Command::Bound { n, r, digits } => {
            let value = analysis::bound_n(n, r, digits)?;
            if ctx.json {
                let mut doc = bound_json(&value);
                doc["n"] = json!(n);
                doc["r"] = json!(r);
                emit(doc);
            } else {
                out!("{value}");
            }
            Ok(true)
        }
        Command::Density { r, n } => {
            let value = analysis::density_bound(r, n)?;
            if ctx.json {
                emit(json!({ "r": r, "n": n, "num": value.numer().to_string(), "den": value.denom().to_string() }));
            } else {
                out!("{value}");
            }
            Ok(true)
        }
        Command::CountBound { r, digits } => {
            let value = analysis::count_bound(r, digits)?;
            if ctx.json {
                let mut doc = bound_json(&value);
                doc["r"] = json!(r);
                emit(doc);
            } else {
                out!("{value}");
            }
            Ok(true)
        }
        Command::Census {
            r,
            n,
            all_lengths,
            workers,
        } => {
            let config = CensusConfig {
                search: ctx.search(false),
                workers,
                ..CensusConfig::default()
            };
            let lengths = if all_lengths { 1..=n } else { n..=n };
            let reports = lengths
                .map(|len| analysis::census(r, len, &config))
                .collect::<Result<Vec<_>, _>>()?;
            if ctx.json {
                reports.iter().for_each(|c| emit(c.to_json()));
            } else {
                outraw!("{}", census_table(&reports));
            }
            Ok(reports.iter().all(|c| c.bound_holds))
        }
        Command::Avoid { input, r, cap, workers } => {
            let p = ctx.pattern(&input)?;
            let config = AvoidConfig {
                cap,
                reflect_budget: ctx.node_budget(),
                workers,
            };
            let found = analysis::longest_avoiding(&p, r, &config)?;
            let witness = format_word(found.witness());
            let (kind, length) = match &found {
                LongestAvoiding::Maximum { length, .. } => ("maximum", *length),
                LongestAvoiding::CapReached { witness } => ("cap_reached", witness.len()),
            };
            if ctx.json {
                emit(json!({ "result": kind, "length": length, "witness": witness }));
            } else {
                match found {
                    LongestAvoiding::Maximum { .. } => out!("maximum length {length}"),
                    LongestAvoiding::CapReached { .. } => out!("cap {length} reached"),
                }
                out!("{witness}");
            }
            Ok(true)
        }
    }
}

fn free_tokens(p: &Pattern, graph: &FactorGraph) -> Vec<String> {
    p.alphabet()
        .filter(|&x| graph.letter_is_free(x))
        .map(|x| p.token(x))
        .collect()
}

fn join_tokens(tokens: &[String]) -> String {
    let sep = if tokens.iter().all(|t| t.chars().count() == 1) {
        ""
    } else {
        " "
    };
    tokens.join(sep)
}

fn print_verdict(p: &Pattern, verdict: &Verdict, json_out: bool) -> Result<(), Failure> {
    let records = match verdict.certificate() {
        Some(c) => c.records(p).map_err(usage)?,
        None => Vec::new(),
    };
    if json_out {
        let mut doc = json!({ "verdict": verdict.label() });
        if verdict.is_unavoidable() {
            doc["certificate"] = json!(records);
        }
        emit(doc);
    } else {
        out!("{}", verdict.label());
        for r in &records {
            emit(json!(r));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
