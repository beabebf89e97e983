//! Command-line front end behind the `npalg` binary.
//!
//! Inputs are recognized by extension: `.consql` specification scripts,
//! `.npalg` queries, `.eso` sentences and `.json` circuits. `solve` and
//! `check` print a [`RunReport`] and exit with 0 when the answer is yes,
//! 1 when it is no and 2 on any error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::consql::{lower_spec, parse_script, run_query, ConsqlError, SearchProblem};
use crate::guess::{check, solve_exact, ExactOptions, GuessError, NpAlgQuery, Witness};
use crate::io::{load_circuit, load_db, save_db, IoError, ReportStats, RunReport};
use crate::polyfrag::{classify, FragmentClass};
use crate::relation::{Database, Relation};
use crate::search::{self, exhaustive, NpAlgSpace, SearchError, SolverParams, Strategy};
use crate::text::{self, TextError};
use crate::translate::{
    build_psi, forced_gate_extension, gen_succinct_3col, succinct_db, succinct_exact_options,
    Circuit, TranslateError,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Text { path: PathBuf, source: TextError },
    #[error("{path}: {source}")]
    Consql { path: PathBuf, source: ConsqlError },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Guess(#[from] GuessError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Fragment(#[from] crate::polyfrag::FragmentError),
    #[error("{0}: unrecognized input kind, expected .consql, .npalg, .eso or .json")]
    UnknownInput(PathBuf),
    #[error("{0}")]
    Usage(String),
    #[error("{solver} reported a solution that fails validation")]
    Unvalidated { solver: String },
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "npalg", version, about = "Guess-and-check relational algebra toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub opts: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Exact,
    Hill,
    Tabu,
    Tandem,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    #[arg(long, global = true, value_enum, default_value = "exact")]
    pub solver: SolverKind,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub max_iters: Option<u64>,
    #[arg(long, global = true)]
    pub restarts: Option<u32>,
    #[arg(long, global = true)]
    pub tenure: Option<u64>,
    /// Most candidate states the exact solver may visit.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Record wall time in the report, which makes it nondeterministic.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a specification script, query, ESO sentence or circuit.
    Solve {
        input: PathBuf,
        /// Directory of CSV relations.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Check a witness for a query: FAIL must be empty.
    Check {
        input: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory holding one CSV per guessed relation.
        #[arg(long)]
        witness: PathBuf,
    },
    /// Report the tractable fragment a query or ESO sentence falls into.
    Classify { input: PathBuf },
    /// Print the NP-Alg query for an ESO sentence or a circuit.
    Translate {
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build the succinct 3-coloring query for a circuit. With `--out`,
    /// writes `query.npalg`, the instance under `data/` and the forced
    /// gate relations under `gates/`.
    GenSuccinct {
        circuit: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Answer(true)) | Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Answer(false)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Answer(bool),
    Done,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Solve { input, data } => {
            let report = solve_input(input, data.as_deref(), &cli.opts)?;
            emit(&report, &cli.opts)?;
            Ok(Outcome::Answer(report.answer))
        }
        Command::Check {
            input,
            data,
            witness,
        } => {
            let report = check_input(input, data.as_deref(), witness, &cli.opts)?;
            emit(&report, &cli.opts)?;
            Ok(Outcome::Answer(report.answer))
        }
        Command::Classify { input } => {
            print!("{}", classify_input(input)?);
            Ok(Outcome::Done)
        }
        Command::Translate { input, out } => {
            let query = match Input::of(input)? {
                Input::Eso => build_psi(&read_eso(input)?)?,
                Input::Circuit => gen_succinct_3col(&load_circuit(input)?)?,
                _ => {
                    return Err(CliError::Usage(format!(
                        "{}: translate expects an .eso sentence or a .json circuit",
                        input.display()
                    )))
                }
            };
            write_or_print(&text::print_query(&query), out.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::GenSuccinct { circuit, out } => {
            let c = load_circuit(circuit)?;
            let query = text::print_query(&gen_succinct_3col(&c)?);
            match out {
                None => print!("{query}"),
                Some(dir) => write_succinct(&c, &query, dir)?,
            }
            Ok(Outcome::Done)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Input {
    Spec,
    Query,
    Eso,
    Circuit,
}

impl Input {
    fn of(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("consql") | Some("sql") => Ok(Input::Spec),
            Some("npalg") => Ok(Input::Query),
            Some("eso") => Ok(Input::Eso),
            Some("json") => Ok(Input::Circuit),
            _ => Err(CliError::UnknownInput(path.to_path_buf())),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn read_query(path: &Path) -> Result<NpAlgQuery> {
    text::parse_query(&read(path)?).map_err(|source| CliError::Text {
        path: path.to_path_buf(),
        source,
    })
}

fn read_eso(path: &Path) -> Result<crate::translate::EsoSentence> {
    text::parse_eso(&read(path)?).map_err(|source| CliError::Text {
        path: path.to_path_buf(),
        source,
    })
}

fn load_data(data: Option<&Path>) -> Result<Database> {
    Ok(match data {
        Some(dir) => load_db(dir)?,
        None => Database::new(),
    })
}

fn params(opts: &GlobalOpts) -> SolverParams {
    let d = SolverParams::default();
    SolverParams {
        seed: opts.seed,
        max_iters: opts.max_iters.unwrap_or(d.max_iters),
        restarts: opts.restarts.unwrap_or(d.restarts),
        tenure: opts.tenure.unwrap_or(d.tenure),
        threads: opts.threads,
        ..d
    }
}

fn strategy(kind: SolverKind) -> Option<Strategy> {
    match kind {
        SolverKind::Exact => None,
        SolverKind::Hill => Some(Strategy::Hill),
        SolverKind::Tabu => Some(Strategy::Tabu),
        SolverKind::Tandem => Some(Strategy::Tandem(vec![Strategy::Hill, Strategy::Tabu])),
    }
}

fn solver_name(kind: SolverKind) -> String {
    format!("{kind:?}").to_lowercase()
}

fn stats(opts: &GlobalOpts, iterations: u64, restarts: u32, started: Instant) -> ReportStats {
    ReportStats {
        solver: solver_name(opts.solver),
        seed: opts.seed,
        iterations,
        restarts,
        wall_time_ms: opts
            .timing
            .then(|| started.elapsed().as_secs_f64() * 1000.0),
    }
}

/// Solves `input` against the instance in `data` with the configured
/// solver. Non-exact solutions are re-validated before they are reported.
pub fn solve_input(input: &Path, data: Option<&Path>, opts: &GlobalOpts) -> Result<RunReport> {
    let started = Instant::now();
    match Input::of(input)? {
        Input::Spec => {
            let src = read(input)?;
            let consql_err = |source| CliError::Consql {
                path: input.to_path_buf(),
                source,
            };
            let script = parse_script(&src).map_err(consql_err)?;
            let [spec] = script.specs.as_slice() else {
                return Err(CliError::Usage(format!(
                    "{}: expected exactly one specification, found {}",
                    input.display(),
                    script.specs.len()
                )));
            };
            let db = load_data(data)?;
            let problem = lower_spec(spec, &db).map_err(consql_err)?;
            let (mut report, state) = solve_spec(&problem, opts, started)?;
            if let Some(state) = state {
                let tables: BTreeMap<String, Relation> = problem
                    .eval_returns(Some(&state))
                    .map_err(consql_err)?
                    .into_iter()
                    .map(|(k, v)| (format!("{}.{k}", problem.name().to_uppercase()), v))
                    .collect();
                for (i, q) in script.queries.iter().enumerate() {
                    let t = run_query(q, &tables).map_err(consql_err)?;
                    report = report.with_table(&format!("QUERY{}", i + 1), t.rows);
                }
            }
            Ok(report)
        }
        Input::Query => {
            let query = read_query(input)?;
            let db = load_data(data)?;
            solve_query(&query, &db, &exact_options(opts, ExactOptions::default()), opts, started)
        }
        Input::Eso => {
            let query = build_psi(&read_eso(input)?)?;
            let db = load_data(data)?;
            solve_query(&query, &db, &exact_options(opts, ExactOptions::default()), opts, started)
        }
        Input::Circuit => {
            let c = load_circuit(input)?;
            let query = gen_succinct_3col(&c)?;
            let base = succinct_exact_options(&c)?;
            let mut report = solve_query(&query, &succinct_db(), &exact_options(opts, base), opts, started)?;
            report.returns.retain(|k, _| k.starts_with("COL"));
            Ok(report)
        }
    }
}

fn exact_options(opts: &GlobalOpts, base: ExactOptions) -> ExactOptions {
    ExactOptions {
        budget: opts.budget.unwrap_or(base.budget),
        threads: opts.threads.or(base.threads),
        ..base
    }
}

fn best_state(
    problem: &SearchProblem,
    opts: &GlobalOpts,
) -> Result<(search::SearchState, search::Cost, u64, u32)> {
    match strategy(opts.solver) {
        None => {
            let limit = opts.budget.map_or(1 << 20, u128::from);
            let best = exhaustive(problem, limit)?.expect("state spaces are never empty");
            Ok((best.state, best.cost, best.stats.iterations, 0))
        }
        Some(s) => {
            let out = search::solve(problem, &params(opts), &s)?;
            Ok((out.state, out.cost, out.stats.iterations, out.stats.restarts))
        }
    }
}

fn solve_spec(
    problem: &SearchProblem,
    opts: &GlobalOpts,
    started: Instant,
) -> Result<(RunReport, Option<search::SearchState>)> {
    let (state, cost, iterations, restarts) = best_state(problem, opts)?;
    let answer = cost.feasible();
    if answer && opts.solver != SolverKind::Exact {
        for i in 0..problem.check_count() {
            let (holds, _) = problem.eval_condition(i, &state).map_err(SearchError::from)?;
            if !holds {
                return Err(CliError::Unvalidated {
                    solver: solver_name(opts.solver),
                });
            }
        }
    }
    let mut report = RunReport::new(answer, stats(opts, iterations, restarts, started));
    if answer {
        report.objective = cost.objective;
        for (name, rel) in problem.eval_returns(Some(&state)).map_err(SearchError::from)? {
            report = report.with_table(&name, rel.sorted_owned());
        }
    }
    Ok((report, answer.then_some(state)))
}

fn solve_query(
    query: &NpAlgQuery,
    db: &Database,
    exact: &ExactOptions,
    opts: &GlobalOpts,
    started: Instant,
) -> Result<RunReport> {
    let (witness, iterations, restarts) = match strategy(opts.solver) {
        None => (solve_exact(query, db, exact)?, 0, 0),
        Some(s) => {
            let space = NpAlgSpace::with_options(query, db, exact)?;
            let out = search::solve(&space, &params(opts), &s)?;
            let w = out.cost.feasible().then(|| space.witness(&out.state));
            if let Some(w) = &w {
                if !check(query, db, w)? {
                    return Err(CliError::Unvalidated {
                        solver: solver_name(opts.solver),
                    });
                }
            }
            (w, out.stats.iterations, out.stats.restarts)
        }
    };
    Ok(witness_report(witness.as_ref(), stats(opts, iterations, restarts, started)))
}

fn witness_report(witness: Option<&Witness>, stats: ReportStats) -> RunReport {
    let mut report = RunReport::new(witness.is_some(), stats);
    if let Some(w) = witness {
        for (name, rel) in &w.extensions {
            report = report.with_table(name, rel.sorted_owned());
        }
    }
    report
}

/// Checks the guessed relations stored as CSV files in `witness`.
pub fn check_input(input: &Path, data: Option<&Path>, witness: &Path, opts: &GlobalOpts) -> Result<RunReport> {
    let started = Instant::now();
    let query = match Input::of(input)? {
        Input::Query => read_query(input)?,
        Input::Eso => build_psi(&read_eso(input)?)?,
        _ => {
            return Err(CliError::Usage(format!(
                "{}: check expects an .npalg query or an .eso sentence",
                input.display()
            )))
        }
    };
    let db = load_data(data)?;
    let stored = load_db(witness)?;
    let mut w = Witness::new();
    for g in &query.guesses {
        let rel = stored
            .get(&g.name)
            .cloned()
            .unwrap_or_else(|| Relation::with_arity(g.arity));
        w = w.with(&g.name, rel);
    }
    if let Some((name, _)) = stored.relations().find(|(n, _)| query.decl(n).is_none()) {
        return Err(CliError::Usage(format!(
            "{}: `{name}` is not a guessed relation",
            witness.display()
        )));
    }
    let ok = check(&query, &db, &w)?;
    let stats = ReportStats {
        solver: "check".into(),
        ..stats(opts, 1, 0, started)
    };
    Ok(witness_report(ok.then_some(&w), stats))
}

/// Fragment tag on the first line, then the matched structure.
pub fn classify_input(input: &Path) -> Result<String> {
    let query = match Input::of(input)? {
        Input::Query => read_query(input)?,
        Input::Eso => build_psi(&read_eso(input)?)?,
        _ => {
            return Err(CliError::Usage(format!(
                "{}: classify expects an .npalg query or an .eso sentence",
                input.display()
            )))
        }
    };
    let class = classify(&query);
    let mut out = format!("{}\n", class.tag());
    match &class {
        FragmentClass::Eaa { guess, phi } | FragmentClass::E1eStarAa { guess, phi } => {
            out.push_str(&format!("guess: {guess}\nphi: {}\n", text::print_algebra(phi)));
        }
        FragmentClass::General { reason } => out.push_str(&format!("reason: {reason}\n")),
    }
    Ok(out)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_or_print(body: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_file(path, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn write_succinct(c: &Circuit, query: &str, dir: &Path) -> Result<()> {
    let mkdir = |p: &Path| {
        fs::create_dir_all(p).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        })
    };
    mkdir(dir)?;
    write_file(&dir.join("query.npalg"), query)?;
    let data = dir.join("data");
    mkdir(&data)?;
    save_db(&succinct_db(), &data)?;
    let gates = dir.join("gates");
    mkdir(&gates)?;
    save_db(&Database::from_relations(forced_gate_extension(c)?), &gates)?;
    Ok(())
}

fn emit(report: &RunReport, opts: &GlobalOpts) -> Result<()> {
    let json = report.to_json();
    if let Some(path) = &opts.json {
        write_file(path, &json)?;
    }
    print!("{json}");
    Ok(())
}
