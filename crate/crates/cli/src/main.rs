//! `mvnabs`: simulate multi-valued networks and search for their abstractions.
//!
//! Exit status: 0 success or holds, 1 check failed or nothing found, 2 usage
//! or parse error, 3 a search guard was exceeded.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mvnabs::report::{
    AllMappingsJson, AttractorJson, CandidateTablesJson, SearchJson, TraceJson, VerdictJson,
};
use mvnabs::search::SearchOptions;
use mvnabs::{
    abstract_tables, brute_force_abstractions, enumerate_state_mappings, find_abstractions,
    find_abstractions_all_mappings, find_exact, parse_mapping, parse_model_document,
    serialize_model, trace_from, AbstractedLanguage, AbstractionMapping, GlobalState, Limits, Mvn,
    SearchError, StateGraph, Verdict,
};

#[derive(Parser)]
#[command(
    name = "mvnabs",
    version,
    about = "Trace semantics and abstractions of multi-valued networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Validate { model: PathBuf },
    /// Print the trace from a global state.
    Trace {
        model: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        json: bool,
        /// Write the state transition graph in DOT format.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// List every attractor.
    Attractors {
        model: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Decide whether one state reaches another.
    Reach {
        model: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Decide in an abstraction and transfer a positive answer.
        #[arg(long, num_args = 2, value_names = ["ABSTRACT", "MAP"])]
        via_abstraction: Option<Vec<PathBuf>>,
        #[arg(long)]
        json: bool,
    },
    /// Abstraction checking and search.
    #[command(subcommand)]
    Abstract(AbstractCommand),
}

#[derive(Args)]
struct ModelAndMap {
    model: PathBuf,
    map: PathBuf,
}

#[derive(Subcommand)]
enum AbstractCommand {
    /// Print the abstracted tables and the number of candidate models.
    Apply {
        #[command(flatten)]
        input: ModelAndMap,
        #[arg(long)]
        json: bool,
    },
    /// Check that ABSTRACT abstracts MODEL under MAP.
    Check {
        #[command(flatten)]
        input: ModelAndMap,
        #[arg(value_name = "ABSTRACT")]
        abstraction: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Find every abstraction of MODEL under MAP.
    Find {
        #[command(flatten)]
        input: ModelAndMap,
        /// Cross-check against the unpruned search when it fits its guard.
        #[arg(long)]
        oracle: bool,
        /// Check candidates on one thread.
        #[arg(long)]
        serial: bool,
        #[arg(long)]
        json: bool,
        /// Write the state graph of each abstraction in DOT format.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Find the exact abstraction, which exists only for a single candidate.
    FindExact {
        #[command(flatten)]
        input: ModelAndMap,
        #[arg(long)]
        json: bool,
    },
    /// Search under every mapping of every entity with three or more states.
    FindAll {
        model: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// List the surjective mappings from M states onto N states.
    Mappings {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad input; exit 2.
    Usage(String),
    /// A guard stopped the computation; exit 3.
    Guard(String),
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        if e.is_guard() {
            Failure::Guard(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

const FAILED: u8 = 1;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Mvn, Failure> {
    let text = read(path)?;
    parse_model_document(&text)
        .map(|d| d.model)
        .map_err(|e| Failure::Usage(located(path, &e)))
}

fn load_mapping(path: &Path, m: &Mvn) -> Result<AbstractionMapping, Failure> {
    let text = read(path)?;
    parse_mapping(&text, m).map_err(|e| Failure::Usage(located(path, &e)))
}

fn located(path: &Path, e: &mvnabs::ParseError) -> String {
    let mut out = String::new();
    for (i, d) in e.diagnostics.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        write!(
            out,
            "{}:{}:{}: {}",
            path.display(),
            d.line,
            d.column,
            d.kind
        )
        .unwrap();
    }
    out
}

fn parse_state(m: &Mvn, text: &str) -> Result<GlobalState, Failure> {
    m.parse_state(text)
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn graph(m: &Mvn) -> Result<StateGraph<'_>, Failure> {
    StateGraph::build(m, &Limits::default()).map_err(|e| Failure::Guard(e.to_string()))
}

fn validate(path: &Path) -> Outcome {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return Ok(ExitCode::from(FAILED));
        }
    };
    match parse_model_document(&text) {
        Ok(doc) => {
            let m = &doc.model;
            println!(
                "{}: valid, {} entities, {} global states",
                m.name(),
                m.len(),
                m.state_space_size()
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("{}", located(path, &e));
            Ok(ExitCode::from(FAILED))
        }
    }
}

fn trace(path: &Path, from: &str, json: bool, dot: Option<&Path>) -> Outcome {
    let m = load_model(path)?;
    let s = parse_state(&m, from)?;
    let t = trace_from(&m, &s);
    if let Some(dot) = dot {
        write_file(dot, &graph(&m)?.to_dot())?;
    }
    if json {
        print_json(&TraceJson::from(&t));
    } else {
        let states: Vec<String> = t.states().iter().map(|s| m.format_state(s)).collect();
        println!("{}", states.join(" "));
    }
    Ok(ExitCode::SUCCESS)
}

fn format_cycle(m: &Mvn, cycle: &[GlobalState]) -> String {
    let mut parts: Vec<String> = cycle.iter().map(|s| m.format_state(s)).collect();
    parts.push(m.format_state(&cycle[0]));
    parts.join(" -> ")
}

fn attractors(path: &Path, json: bool, dot: Option<&Path>) -> Outcome {
    let m = load_model(path)?;
    let g = graph(&m)?;
    if let Some(dot) = dot {
        write_file(dot, &g.to_dot())?;
    }
    let atts = g.attractors();
    if json {
        let list: Vec<AttractorJson> = atts.iter().map(AttractorJson::from).collect();
        print_json(&list);
    } else {
        for a in &atts {
            println!("{}", format_cycle(&m, a.states()));
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ReachJson {
    holds: bool,
    /// The concrete trace that reaches the target.
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<TraceJson>,
    /// Set when the question was decided in an abstraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    via_abstraction: Option<bool>,
    /// A negative answer in an abstraction says nothing about the model.
    inconclusive: bool,
}

const INCONCLUSIVE: &str = "inconclusive for the concrete model";

fn reach(path: &Path, from: &str, to: &str, via: Option<&[PathBuf]>, json: bool) -> Outcome {
    let m = load_model(path)?;
    let Some(via) = via else {
        let (s1, s2) = (parse_state(&m, from)?, parse_state(&m, to)?);
        let t = trace_from(&m, &s1);
        let holds = t.contains(&s2);
        if json {
            print_json(&ReachJson {
                holds,
                witness: holds.then(|| TraceJson::from(&t)),
                via_abstraction: None,
                inconclusive: false,
            });
        } else {
            println!("{}", if holds { "HOLDS" } else { "NOT-REACHABLE" });
        }
        return Ok(if holds {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(FAILED)
        });
    };

    let a = load_model(&via[0])?;
    let phi = load_mapping(&via[1], &m)?;
    let (s1, s2) = (parse_state(&a, from)?, parse_state(&a, to)?);
    if let Err(e) = mvnabs::abstraction::check_structure(&a, &m, &phi) {
        eprintln!("{} is not an abstraction of {}: {e}", a.name(), m.name());
        return Ok(ExitCode::from(FAILED));
    }
    let abstracted = AbstractedLanguage::new(&m, &phi, &Limits::default())
        .map_err(|e| Failure::Guard(e.to_string()))?;
    if let Verdict::Fails { witness } = abstracted
        .check(&a)
        .map_err(|e| Failure::Usage(e.to_string()))?
    {
        eprintln!(
            "{} is not an abstraction of {}: trace {} has no concrete counterpart",
            a.name(),
            m.name(),
            witness
        );
        return Ok(ExitCode::from(FAILED));
    }
    match mvnabs::transfer_reachability(&a, &m, &phi, &s1, &s2)
        .map_err(|e| Failure::Guard(e.to_string()))?
    {
        Some((c1, c2)) => {
            let t = trace_from(&m, &c1);
            if json {
                print_json(&ReachJson {
                    holds: true,
                    witness: Some(TraceJson::from(&t)),
                    via_abstraction: Some(true),
                    inconclusive: false,
                });
            } else {
                println!("HOLDS");
                println!(
                    "transferred from {}: {} reaches {} in {}",
                    a.name(),
                    m.format_state(&c1),
                    m.format_state(&c2),
                    m.name()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        None => {
            if json {
                print_json(&ReachJson {
                    holds: false,
                    witness: None,
                    via_abstraction: Some(true),
                    inconclusive: true,
                });
            } else {
                println!("NOT-REACHABLE in {}: {INCONCLUSIVE}", a.name());
            }
            Ok(ExitCode::from(FAILED))
        }
    }
}

fn apply(input: &ModelAndMap, json: bool) -> Outcome {
    let m = load_model(&input.model)?;
    let phi = load_mapping(&input.map, &m)?;
    let c = abstract_tables(&m, &phi).map_err(|e| Failure::Usage(e.to_string()))?;
    if json {
        print_json(&CandidateTablesJson::from(&c));
        return Ok(ExitCode::SUCCESS);
    }
    for (e, t) in c.entities().iter().zip(c.tables()) {
        println!("table {}", e.id());
        for (r, options) in t.options().iter().enumerate() {
            let inputs: Vec<String> = t.row_inputs(r).iter().map(|v| v.to_string()).collect();
            let outputs: Vec<String> = options.iter().map(|v| v.to_string()).collect();
            let mark = if options.len() > 1 { "  *" } else { "" };
            println!("{} -> {}{mark}", inputs.join(" "), outputs.join(","));
        }
        println!();
    }
    let choices: Vec<String> = c
        .choices_per_entity()
        .iter()
        .map(|n| n.to_string())
        .collect();
    println!(
        "candidates: {} ({})",
        c.candidate_count(),
        choices.join(" * ")
    );
    Ok(ExitCode::SUCCESS)
}

fn check(input: &ModelAndMap, abstraction: &Path, json: bool) -> Outcome {
    let m = load_model(&input.model)?;
    let phi = load_mapping(&input.map, &m)?;
    let a = load_model(abstraction)?;
    let verdict = match mvnabs::check_abstraction(&a, &m, &phi) {
        Ok(v) => v,
        Err(mvnabs::AbstractionError::Structure(e)) => {
            if json {
                print_json(&VerdictJson {
                    holds: false,
                    witness: None,
                });
            } else {
                println!("FAILS: {e}");
            }
            return Ok(ExitCode::from(FAILED));
        }
        Err(e) => return Err(Failure::Guard(e.to_string())),
    };
    if json {
        print_json(&VerdictJson::from(&verdict));
    } else {
        match &verdict {
            Verdict::Holds => println!("HOLDS"),
            Verdict::Fails { witness } => {
                println!("FAILS");
                let states: Vec<String> =
                    witness.states().iter().map(|s| a.format_state(s)).collect();
                println!("witness: {}", states.join(" "));
            }
        }
    }
    Ok(if verdict.holds() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    })
}

/// `out.dot` becomes `out.2.dot` for the second of several files.
fn numbered(path: &Path, index: usize, total: usize) -> PathBuf {
    if total <= 1 {
        return path.to_path_buf();
    }
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{}.{}", index + 1, ext.to_string_lossy()),
        None => format!("{stem}.{}", index + 1),
    };
    path.with_file_name(name)
}

fn guard_exit(json: bool, message: String, count: u128) -> Outcome {
    if json {
        print_json(&SearchJson::guard_exceeded(
            count.min(u64::MAX as u128) as u64
        ));
        eprintln!("{message}");
        Ok(ExitCode::from(3))
    } else {
        Err(Failure::Guard(message))
    }
}

fn find(
    input: &ModelAndMap,
    oracle: bool,
    serial: bool,
    json: bool,
    dot: Option<&Path>,
) -> Outcome {
    let m = load_model(&input.model)?;
    let phi = load_mapping(&input.map, &m)?;
    let opts = SearchOptions {
        parallel: !serial,
        ..SearchOptions::default()
    };
    let count = abstract_tables(&m, &phi)
        .map_err(|e| Failure::Usage(e.to_string()))?
        .candidate_count();
    let report = match find_abstractions(&m, &phi, &opts) {
        Ok(r) => r,
        Err(e) if e.is_guard() => return guard_exit(json, e.to_string(), count),
        Err(e) => return Err(e.into()),
    };
    if oracle {
        match brute_force_abstractions(&m, &phi, &opts.limits) {
            Ok(brute) => {
                let agree = brute.len() == report.abstractions.len()
                    && brute
                        .iter()
                        .zip(&report.abstractions)
                        .all(|(b, a)| b.same_network(a));
                if !agree {
                    eprintln!(
                        "oracle disagrees: brute force finds {} abstractions",
                        brute.len()
                    );
                    return Ok(ExitCode::from(FAILED));
                }
                eprintln!(
                    "oracle agrees: brute force finds {} abstractions",
                    brute.len()
                );
            }
            Err(e) if e.is_guard() => eprintln!("oracle skipped: {e}"),
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(dot) = dot {
        let total = report.abstractions.len();
        for (i, a) in report.abstractions.iter().enumerate() {
            write_file(&numbered(dot, i, total), &graph(a)?.to_dot())?;
        }
    }
    if json {
        print_json(&SearchJson::from_report(&report));
    } else {
        println!(
            "# {} candidates, {} abstractions",
            report.candidate_count,
            report.abstractions.len()
        );
        for a in &report.abstractions {
            println!();
            print!("{}", serialize_model(a));
        }
    }
    Ok(if report.abstractions.is_empty() {
        ExitCode::from(FAILED)
    } else {
        ExitCode::SUCCESS
    })
}

fn find_exact_cmd(input: &ModelAndMap, json: bool) -> Outcome {
    let m = load_model(&input.model)?;
    let phi = load_mapping(&input.map, &m)?;
    let count = abstract_tables(&m, &phi)
        .map_err(|e| Failure::Usage(e.to_string()))?
        .candidate_count();
    let exact = find_exact(&m, &phi)?;
    if json {
        let search = SearchJson {
            candidate_count: count.min(u64::MAX as u128) as u64,
            abstractions: exact.iter().map(Into::into).collect(),
            guard_exceeded: false,
            rejections: Vec::new(),
        };
        print_json(&search);
    } else {
        match &exact {
            Some(a) => print!("{}", serialize_model(a)),
            None => println!("no exact abstraction: {count} candidates"),
        }
    }
    Ok(if exact.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    })
}

fn find_all(path: &Path, json: bool) -> Outcome {
    let m = load_model(path)?;
    let report = match find_abstractions_all_mappings(&m, &SearchOptions::default()) {
        Ok(r) => r,
        Err(e @ SearchError::GuardExceeded { count, .. }) => {
            return guard_exit(json, e.to_string(), count)
        }
        Err(e) if e.is_guard() => return guard_exit(json, e.to_string(), 0),
        Err(e) => return Err(e.into()),
    };
    if json {
        print_json(&AllMappingsJson::from_report(&m, &report));
    } else {
        for o in &report.outcomes {
            let lines = mvnabs::parser::mapping_lines(&o.mapping, &m);
            println!(
                "# {}: {} candidates, {} abstractions",
                lines.join("; "),
                o.candidate_count,
                o.abstractions.len()
            );
            for a in &o.abstractions {
                println!();
                print!("{}", serialize_model(a));
            }
        }
        if report.none_found() {
            println!("no abstraction exists under any mapping");
        }
    }
    Ok(if report.none_found() {
        ExitCode::from(FAILED)
    } else {
        ExitCode::SUCCESS
    })
}

#[derive(Serialize)]
struct MappingsJson {
    states: usize,
    targets: usize,
    mappings: Vec<Vec<u32>>,
}

fn mappings(m: usize, n: usize, json: bool) -> Outcome {
    let all = enumerate_state_mappings(m, n).map_err(|e| Failure::Usage(e.to_string()))?;
    if json {
        print_json(&MappingsJson {
            states: m,
            targets: n,
            mappings: all.iter().map(|s| s.image().to_vec()).collect(),
        });
    } else {
        for s in &all {
            println!("{s}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { model } => validate(&model),
        Command::Trace {
            model,
            from,
            json,
            dot,
        } => trace(&model, &from, json, dot.as_deref()),
        Command::Attractors { model, json, dot } => attractors(&model, json, dot.as_deref()),
        Command::Reach {
            model,
            from,
            to,
            via_abstraction,
            json,
        } => reach(&model, &from, &to, via_abstraction.as_deref(), json),
        Command::Abstract(cmd) => match cmd {
            AbstractCommand::Apply { input, json } => apply(&input, json),
            AbstractCommand::Check {
                input,
                abstraction,
                json,
            } => check(&input, &abstraction, json),
            AbstractCommand::Find {
                input,
                oracle,
                serial,
                json,
                dot,
            } => find(&input, oracle, serial, json, dot.as_deref()),
            AbstractCommand::FindExact { input, json } => find_exact_cmd(&input, json),
            AbstractCommand::FindAll { model, json } => find_all(&model, json),
            AbstractCommand::Mappings { m, n, json } => mappings(m, n, json),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("guard exceeded: {msg}");
            ExitCode::from(3)
        }
    }
}
