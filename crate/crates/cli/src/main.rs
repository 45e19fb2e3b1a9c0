mod output;

use std::fmt::Write as _;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::One;
use serde_json::{Map, Value};
use visitprob::numerics::format_ratio;
use visitprob::oracle::{census_by_j_guarded, oracle_distribution_guarded, simulate_with_workers, DEFAULT_TRAJECTORY_GUARD};
use visitprob::validation::{run_validation, CaseStatus, ClosedFormEngine, Grid, ValidationConfig};
use visitprob::{total_variation, ChainSpec, ClosedForm, Error, NumericMode, ProbValue, State, VisitDistribution, VisitQuery};

use output::{Format, Record};

const GUARD_ENV: &str = "VISITPROB_ENUM_GUARD";
const SIG_DIGITS: usize = 17;
/// Horizons above this default to log-space evaluation.
const EXACT_DEFAULT_N_MAX: usize = 64;

#[derive(Parser)]
#[command(name = "visitprob", version, about = "Visit-count distributions of two-state Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ChainArgs {
    /// P(S0 -> S1), as "a/b" or a decimal
    #[arg(long)]
    p01: String,
    /// P(S1 -> S0)
    #[arg(long)]
    p10: String,
    /// P(start in S1)
    #[arg(long)]
    p1: String,
    /// Horizon: number of occupied positions
    #[arg(long)]
    n: usize,
    /// exact, float or logspace [default: exact for N <= 64, else logspace]
    #[arg(long)]
    mode: Option<NumericMode>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// P(N_state = k | N) from the closed form
    Prob {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        k: usize,
        /// Counted state, 0 or 1
        #[arg(long, default_value = "1")]
        state: State,
    },
    /// The whole distribution over k = 0..N
    Dist {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "1")]
        state: State,
    },
    /// Exhaustive enumeration of all 2^N trajectories
    Oracle {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "1")]
        state: State,
        /// Group paths with k visits to S1 by their S1 -> S0 count
        #[arg(long, requires_all = ["k", "initial", "final_state"])]
        census: bool,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        initial: Option<State>,
        #[arg(long = "final")]
        final_state: Option<State>,
    },
    /// Monte Carlo histogram of visits to S1 against the closed form
    Simulate {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Report wall-clock time (makes output run-dependent)
        #[arg(long)]
        timing: bool,
    },
    /// Cross-check closed form, oracle and backends over a parameter grid
    Validate {
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        /// coarse {0, 1/2, 1} or fine {0, 1/4, 1/2, 3/4, 1}
        #[arg(long, default_value = "coarse")]
        grid: Grid,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

enum Failure {
    Usage(String),
    Guard(String),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::TrajectoryGuard { .. } | Error::EnumerationTooLarge { .. } => Failure::Guard(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Failure {
        Failure::Usage(format!("writing output: {e}"))
    }
}

struct Resolved {
    chain: ChainSpec,
    mode: NumericMode,
    inputs: Map<String, Value>,
}

fn resolve(args: &ChainArgs) -> Result<Resolved, Failure> {
    let mode = args.mode.unwrap_or(if args.n <= EXACT_DEFAULT_N_MAX {
        NumericMode::Exact
    } else {
        NumericMode::LogSpace
    });
    let chain = ChainSpec::parse(&args.p01, &args.p10, &args.p1, mode)?;
    let inputs = object! {
        "p01" => args.p01.as_str(),
        "p10" => args.p10.as_str(),
        "p1" => args.p1.as_str(),
        "n" => args.n,
        "mode" => mode.as_str(),
    };
    Ok(Resolved { chain, mode, inputs })
}

fn state_str(s: State) -> &'static str {
    match s {
        State::S0 => "0",
        State::S1 => "1",
    }
}

fn decimal(p: &ProbValue) -> String {
    p.to_decimal_string(SIG_DIGITS)
}

/// `probability` and, for exact values, `exact`.
fn value_fields(p: &ProbValue, into: &mut Map<String, Value>) {
    into.insert("probability".into(), decimal(p).into());
    if let Some(r) = p.as_exact() {
        into.insert("exact".into(), format_ratio(r).into());
    }
}

fn display(p: &ProbValue) -> String {
    match p.as_exact() {
        Some(r) => format_ratio(r),
        None => decimal(p),
    }
}

fn enum_guard() -> Result<usize, Failure> {
    match std::env::var(GUARD_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{GUARD_ENV} must be a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_TRAJECTORY_GUARD),
    }
}

fn distribution_rows(dist: &VisitDistribution) -> (Vec<Map<String, Value>>, String) {
    let mut rows = Vec::with_capacity(dist.mass().len());
    let mut text = String::new();
    for (k, p) in dist.mass().iter().enumerate() {
        let mut row = object! { "k" => k };
        value_fields(p, &mut row);
        let _ = writeln!(text, "{k}\t{}", display(p));
        rows.push(row);
    }
    (rows, text)
}

fn cmd_prob(args: &ChainArgs, k: usize, state: State) -> Result<Record, Failure> {
    let r = resolve(args)?;
    let query = VisitQuery::new(args.n, k, state)?;
    let cf = ClosedForm::new(&r.chain, args.n)?;
    let p = cf.visits(query.visits_k(), state)?;
    let s1_k = if state == State::S1 { k } else { args.n - k };

    let mut inputs = r.inputs;
    inputs.insert("k".into(), k.into());
    inputs.insert("state".into(), state_str(state).into());
    let mut results = Map::new();
    value_fields(&p, &mut results);
    Ok(Record {
        command: "prob",
        inputs,
        rows: vec![results.clone()],
        results,
        diagnostics: object! { "terms" => cf.term_count(s1_k)? },
        text: format!("{}\n", display(&p)),
    })
}

fn normalization(dist: &VisitDistribution) -> Map<String, Value> {
    let sum = dist.total();
    let deviation = match &sum {
        ProbValue::Exact(r) => format_ratio(&(r - BigRational::one())),
        ProbValue::Float(x) => format!("{:.*e}", SIG_DIGITS - 1, x - 1.0),
        ProbValue::LogSpace(l) => format!("{:.*e}", SIG_DIGITS - 1, l.ln().exp_m1()),
    };
    let mut m = Map::new();
    value_fields(&sum, &mut m);
    m.insert("deviation".into(), deviation.into());
    m
}

fn cmd_dist(args: &ChainArgs, state: State) -> Result<Record, Failure> {
    let r = resolve(args)?;
    let cf = ClosedForm::new(&r.chain, args.n)?;
    let dist = cf.distribution(state)?;
    let terms: usize = (0..=args.n).map(|k| cf.term_count(k)).sum::<visitprob::Result<usize>>()?;
    let (mut rows, mut text) = distribution_rows(&dist);
    let norm = normalization(&dist);

    let mut trailer = object! { "k" => "sum" };
    trailer.extend(norm.clone());
    let _ = writeln!(text, "sum\t{}\tdeviation {}", display(&dist.total()), norm["deviation"].as_str().unwrap_or(""));
    let mut inputs = r.inputs;
    inputs.insert("state".into(), state_str(state).into());
    let results = object! { "rows" => Value::Array(rows.iter().cloned().map(Value::Object).collect()), "normalization" => norm };
    rows.push(trailer);
    Ok(Record {
        command: "dist",
        inputs,
        results,
        diagnostics: object! { "terms" => terms },
        rows,
        text,
    })
}

fn cmd_oracle(
    args: &ChainArgs,
    state: State,
    census: Option<(usize, State, State)>,
) -> Result<Record, Failure> {
    let r = resolve(args)?;
    let guard = enum_guard()?;
    let mut inputs = r.inputs;
    let trajectories = if args.n < 128 { (1u128 << args.n).to_string() } else { format!("2^{}", args.n) };

    let Some((k, initial, last)) = census else {
        let dist = oracle_distribution_guarded(args.n, state, &r.chain, guard)?;
        let (rows, text) = distribution_rows(&dist);
        inputs.insert("state".into(), state_str(state).into());
        return Ok(Record {
            command: "oracle",
            inputs,
            results: object! { "rows" => Value::Array(rows.iter().cloned().map(Value::Object).collect()) },
            diagnostics: object! { "trajectories" => trajectories },
            rows,
            text,
        });
    };

    let cells = census_by_j_guarded(args.n, k, initial, last, &r.chain, guard)?;
    inputs.insert("census".into(), true.into());
    inputs.insert("k".into(), k.into());
    inputs.insert("initial".into(), state_str(initial).into());
    inputs.insert("final".into(), state_str(last).into());
    let mut rows = Vec::new();
    let mut text = String::from("j\tpaths\tmonomial\n");
    let mut total = 0u64;
    for cell in cells.values() {
        total += cell.count;
        let mut row = object! {
            "j" => cell.j,
            "count" => cell.count,
            "monomial" => cell.monomial.to_string(),
        };
        let mut term = Map::new();
        value_fields(&cell.term, &mut term);
        row.insert("term_probability".into(), term["probability"].clone());
        if let Some(e) = term.get("exact") {
            row.insert("term_exact".into(), e.clone());
        }
        row.insert(
            "closed_form_count".into(),
            cell.expected_count.as_ref().map_or(Value::Null, |c| c.to_string().into()),
        );
        let _ = writeln!(text, "{}\t{}\t{}", cell.j, cell.count, cell.monomial);
        rows.push(row);
    }
    let _ = writeln!(text, "total\t{total}");
    Ok(Record {
        command: "oracle",
        inputs,
        results: object! {
            "rows" => Value::Array(rows.iter().cloned().map(Value::Object).collect()),
            "total_paths" => total,
        },
        diagnostics: object! { "trajectories" => trajectories },
        rows,
        text,
    })
}

fn cmd_simulate(args: &ChainArgs, trials: u64, seed: u64, workers: usize, timing: bool) -> Result<Record, Failure> {
    let r = resolve(args)?;
    let sim = simulate_with_workers(args.n, &r.chain, trials, seed, workers)?;
    let reference = ClosedForm::new(&r.chain, args.n)?.distribution(State::S1)?;
    let empirical = sim.empirical();
    let empirical = if r.mode == NumericMode::Exact { empirical } else { empirical.to_mode(r.mode) };
    let tv = total_variation(&empirical, &reference)?;
    let tv = format!("{:.*e}", SIG_DIGITS - 1, tv);

    let mut rows = Vec::new();
    let mut text = String::from("k\tcount\tempirical\tclosed_form\n");
    for (k, (&count, (e, c))) in sim.counts.iter().zip(empirical.mass().iter().zip(reference.mass())).enumerate() {
        rows.push(object! {
            "k" => k,
            "count" => count,
            "empirical" => decimal(e),
            "closed_form" => decimal(c),
        });
        let _ = writeln!(text, "{k}\t{count}\t{}\t{}", decimal(e), decimal(c));
    }
    let _ = writeln!(text, "total variation\t{tv}");
    let mut inputs = r.inputs;
    inputs.insert("trials".into(), trials.into());
    inputs.insert("seed".into(), seed.into());
    inputs.insert("workers".into(), workers.into());
    let mut diagnostics = object! { "generator" => "xoshiro256++" };
    if timing {
        diagnostics.insert("elapsed_ms".into(), (sim.elapsed.as_secs_f64() * 1e3).into());
    }
    let results = object! {
        "rows" => Value::Array(rows.iter().cloned().map(Value::Object).collect()),
        "total_variation" => tv.clone(),
    };
    rows.push(object! { "k" => "total_variation", "empirical" => tv });
    Ok(Record {
        command: "simulate",
        inputs,
        results,
        diagnostics,
        rows,
        text,
    })
}

fn cmd_validate(n_max: usize, grid: Grid) -> Result<(Record, bool), Failure> {
    let report = run_validation(&ClosedFormEngine, &ValidationConfig { n_max, grid })?;
    let mut failures = Vec::new();
    let mut text = format!("grid {}, N <= {n_max}\n", report.grid);
    for case in report.failures() {
        let (expected, actual) = match &case.status {
            CaseStatus::Fail { expected, actual } => (expected.as_str(), actual.as_str()),
            _ => ("", ""),
        };
        let k = case.k.map_or(Value::Null, Value::from);
        let _ = writeln!(
            text,
            "FAIL {} {} N={} k={} expected {expected} actual {actual}",
            case.check,
            case.chain,
            case.n,
            cell_text(&k)
        );
        failures.push(object! {
            "check" => case.check.as_str(),
            "chain" => case.chain.as_str(),
            "n" => case.n,
            "k" => k,
            "status" => case.status.label(),
            "expected" => expected,
            "actual" => actual,
        });
    }
    let s = report.summary;
    let _ = writeln!(
        text,
        "{} cases: {} exact-equal, {} within-tol, {} FAIL",
        s.total(),
        s.exact_equal,
        s.within_tol,
        s.failed
    );
    let summary = object! {
        "exact_equal" => s.exact_equal,
        "within_tol" => s.within_tol,
        "failed" => s.failed,
        "total" => s.total(),
    };
    let mut rows = failures.clone();
    let mut trailer = object! { "check" => "summary", "status" => if report.passed() { "pass" } else { "FAIL" } };
    trailer.extend(summary.clone());
    rows.push(trailer);
    let record = Record {
        command: "validate",
        inputs: object! { "n_max" => n_max, "grid" => grid.to_string() },
        results: object! {
            "grid" => report.grid.as_str(),
            "summary" => summary,
            "failures" => Value::Array(failures.into_iter().map(Value::Object).collect()),
        },
        diagnostics: Map::new(),
        rows,
        text,
    };
    Ok((record, report.passed()))
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let (record, format, passed) = match &cli.command {
        Command::Prob { chain, k, state } => (cmd_prob(chain, *k, *state)?, chain.format, true),
        Command::Dist { chain, state } => (cmd_dist(chain, *state)?, chain.format, true),
        Command::Oracle {
            chain,
            state,
            census,
            k,
            initial,
            final_state,
        } => {
            let census = match (census, k, initial, final_state) {
                (true, Some(k), Some(i), Some(f)) => Some((*k, *i, *f)),
                _ => None,
            };
            (cmd_oracle(chain, *state, census)?, chain.format, true)
        }
        Command::Simulate {
            chain,
            trials,
            seed,
            workers,
            timing,
        } => (cmd_simulate(chain, *trials, *seed, *workers, *timing)?, chain.format, true),
        Command::Validate { n_max, grid, format } => {
            let (record, passed) = cmd_validate(*n_max, *grid)?;
            (record, *format, passed)
        }
    };
    record.write(format, &mut out)?;
    out.flush()?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
