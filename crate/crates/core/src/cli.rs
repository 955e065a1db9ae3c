//! Command-line interface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::formula::{parse, EventFormula, Formula, InstanceFormula};
use crate::planner::plan_step;
use crate::semantics::{Mode, PredicateTable, Program, Run};
use crate::sim::{self, monitor, plot, ExecutionTrace, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "prstl", version, about = "Probabilistic STL missions over target beliefs")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a formula and report its structure, horizon and synthesizability.
    Parse {
        #[arg(long, value_name = "STR|@PATH")]
        formula: String,
    },
    /// Evaluate a formula at every time of a predicate table or trace.
    Eval(EvalArgs),
    /// Run one planning step from a scenario's initial state.
    Plan(ScenarioArgs),
    /// Run a closed-loop mission and write its trace.
    Simulate(ScenarioArgs),
    /// Render belief heatmaps of selected trace steps as SVG.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated step times; default is every snapshot step.
        #[arg(long, value_delimiter = ',')]
        steps: Vec<usize>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "STR|@PATH")]
    pub formula: String,
    /// Inline table `name=p0,p1,...;name2=...`, or `@PATH` to a CSV file with
    /// a header of predicate names and one row per time.
    #[arg(long, conflicts_with = "trace", required_unless_present = "trace")]
    pub table: Option<String>,
    /// Evaluate over the observations of a stored trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Keep only the first N times of the input.
    #[arg(long)]
    pub prefix: Option<usize>,
    /// Directory for `eval.csv` at full precision.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Replace the scenario's formula.
    #[arg(long, value_name = "STR|@PATH")]
    pub formula: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::Runtime(e) => e,
        }
    }
}

fn validation<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Validation(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

/// Parses arguments, runs the command, writes to `out`/`err`, and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    init_logging(cli.verbose);
    match execute(cli.command) {
        Ok(text) => {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
        Err(failure) => {
            let _ = writeln!(err, "error: {:#}", failure.error());
            failure.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Runs a command and returns its standard output.
pub fn execute(command: Command) -> Result<String, Failure> {
    match command {
        Command::Parse { formula } => cmd_parse(&formula),
        Command::Eval(args) => cmd_eval(&args),
        Command::Plan(args) => cmd_plan(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Plot { trace, steps, out } => cmd_plot(&trace, &steps, &out),
    }
}

fn read_text_arg(arg: &str) -> Result<String, Failure> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {path}"))
            .map_err(runtime),
        None => Ok(arg.to_owned()),
    }
}

fn load_formula(arg: &str) -> Result<Formula, Failure> {
    let text = read_text_arg(arg)?;
    parse(&text).map_err(validation)
}

fn cmd_parse(arg: &str) -> Result<String, Failure> {
    let formula = load_formula(arg)?;
    let mut out = String::new();
    let kind = match formula {
        Formula::Event(_) => "event",
        Formula::Instance(_) => "instance",
    };
    let _ = writeln!(out, "formula: {formula}");
    let _ = writeln!(out, "kind: {kind}");
    let _ = writeln!(out, "horizon: {}", formula.horizon());
    let _ = writeln!(out, "predicates: {}", formula.predicates().join(", "));
    let violations = formula.check_synthesizable();
    if violations.is_empty() {
        let _ = writeln!(out, "synthesizable: yes");
    } else {
        let _ = writeln!(out, "synthesizable: no");
        for v in &violations {
            let _ = writeln!(out, "  - {v}");
        }
    }
    out.push_str("tree:\n");
    match &formula {
        Formula::Event(e) => event_tree(e, 1, &mut out),
        Formula::Instance(i) => instance_tree(i, 1, &mut out),
    }
    Ok(out)
}

fn line(out: &mut String, depth: usize, text: &str) {
    let _ = writeln!(out, "{}{text}", "  ".repeat(depth));
}

fn event_tree(f: &EventFormula, depth: usize, out: &mut String) {
    match f {
        EventFormula::Pred(name) => line(out, depth, &format!("pred {name}")),
        EventFormula::Not(inner) => {
            line(out, depth, "not");
            event_tree(inner, depth + 1, out);
        }
        EventFormula::And(a, b) => {
            line(out, depth, "and");
            event_tree(a, depth + 1, out);
            event_tree(b, depth + 1, out);
        }
        EventFormula::AndInstance(a, b) => {
            line(out, depth, "and (gated by instance)");
            event_tree(a, depth + 1, out);
            instance_tree(b, depth + 1, out);
        }
        EventFormula::Eventually(bound, inner) => {
            line(out, depth, &format!("eventually {bound}"));
            event_tree(inner, depth + 1, out);
        }
        EventFormula::Globally(bound, inner) => {
            line(out, depth, &format!("globally {bound}"));
            event_tree(inner, depth + 1, out);
        }
    }
}

fn instance_tree(f: &InstanceFormula, depth: usize, out: &mut String) {
    match f {
        InstanceFormula::True => line(out, depth, "true"),
        InstanceFormula::Not(inner) => {
            line(out, depth, "not");
            instance_tree(inner, depth + 1, out);
        }
        InstanceFormula::And(a, b) => {
            line(out, depth, "and");
            instance_tree(a, depth + 1, out);
            instance_tree(b, depth + 1, out);
        }
        InstanceFormula::Until(bound, a, b) => {
            line(out, depth, &format!("until {bound}"));
            instance_tree(a, depth + 1, out);
            instance_tree(b, depth + 1, out);
        }
        InstanceFormula::Prob {
            cmp,
            threshold,
            event,
        } => {
            line(out, depth, &format!("prob {}{threshold}", cmp.symbol()));
            event_tree(event, depth + 1, out);
        }
    }
}

/// Parses `name=p0,p1;name2=...`.
fn parse_inline_table(text: &str) -> anyhow::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, values) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("table entry `{part}` is not `name=values`"))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad probability `{}` for `{}`", v.trim(), name.trim()))
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        names.push(name.trim().to_owned());
        columns.push(values);
    }
    if names.is_empty() {
        bail!("empty predicate table");
    }
    Ok((names, columns))
}

/// Parses a CSV with a header of predicate names and one row per time.
fn parse_csv_table(text: &str) -> anyhow::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| anyhow!("empty CSV table"))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_owned()).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, l) in lines.enumerate() {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.len() != names.len() {
            bail!("CSV row {} has {} cells, expected {}", row + 2, cells.len(), names.len());
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(
                cell.trim()
                    .parse::<f64>()
                    .with_context(|| format!("CSV row {}: bad number `{}`", row + 2, cell.trim()))?,
            );
        }
    }
    Ok((names, columns))
}

fn cmd_eval(args: &EvalArgs) -> Result<String, Failure> {
    let formula = load_formula(&args.formula)?;
    let table = if let Some(spec) = &args.table {
        let (names, columns) = match spec.strip_prefix('@') {
            Some(_) => parse_csv_table(&read_text_arg(spec)?),
            None => parse_inline_table(spec),
        }
        .map_err(validation)?;
        PredicateTable::new(names, columns, None).map_err(validation)?
    } else {
        let path = args.trace.as_ref().expect("clap requires table or trace");
        let trace = ExecutionTrace::load(path)
            .with_context(|| format!("loading {}", path.display()))
            .map_err(runtime)?;
        monitor::observed_table(&trace).map_err(validation)?
    };
    let table = match args.prefix {
        Some(0) => return Err(validation(anyhow!("--prefix must be at least 1"))),
        Some(n) if n < table.len() => table.prefix(n),
        _ => table,
    };
    if table.is_empty() {
        return Err(validation(anyhow!("predicate table has no time steps")));
    }
    formula.check_predicates(table.names()).map_err(validation)?;
    let program = Program::compile(&formula, table.names()).map_err(validation)?;
    let last = table.len() - 1;
    let horizon = formula.horizon();

    let mut shown = String::from("time,value,exact\n");
    let mut full = String::from("time,value,exact\n");
    for (t, r) in program.score_all(&table, Mode::Relaxed).into_iter().enumerate() {
        let exact = t as u64 + horizon <= last as u64;
        let (short, long) = match r {
            Ok(v) => (format!("{v:.3}"), v.to_string()),
            Err(crate::semantics::EvalError::EmptyWindow { .. }) => (String::new(), String::new()),
            Err(e) => return Err(runtime(e)),
        };
        let _ = writeln!(shown, "{t},{short},{exact}");
        let _ = writeln!(full, "{t},{long},{exact}");
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(runtime)?;
        std::fs::write(dir.join("eval.csv"), full).map_err(runtime)?;
    }
    Ok(shown)
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut scenario = Scenario::load(&args.scenario)
        .with_context(|| format!("loading {}", args.scenario.display()))
        .map_err(|e| match e.downcast_ref::<sim::ScenarioError>() {
            Some(sim::ScenarioError::Io(_)) => Failure::Runtime(e),
            _ => Failure::Validation(e),
        })?;
    if let Some(f) = &args.formula {
        scenario.formula = read_text_arg(f)?;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(n) = args.beam {
        scenario.beam_width = n;
    }
    if let Some(h) = args.horizon {
        scenario.horizon = h;
    }
    Ok(scenario)
}

fn cmd_plan(args: &ScenarioArgs) -> Result<String, Failure> {
    let scenario = load_scenario(args)?;
    let prepared = scenario.prepare().map_err(validation)?;
    let run = Run::new(prepared.initial, vec![false; prepared.target_ids.len()]);
    let outcome = plan_step(
        &run,
        &prepared.priors,
        &prepared.mission,
        &prepared.config,
        &prepared.context,
    )
    .map_err(runtime)?;
    let d = &outcome.diagnostics;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "control: {} ({:.1} deg/step)",
        outcome.control_index,
        outcome.control.to_degrees()
    );
    let _ = writeln!(out, "best score: {:.3}", d.best_score);
    let _ = writeln!(out, "best controls: {:?}", d.best_controls);
    let _ = writeln!(out, "depth: {} (converged: {})", d.depth, d.converged);
    let _ = writeln!(out, "candidates per depth: {:?}", d.candidates_per_depth);
    let _ = writeln!(out, "evaluations: {}", d.evaluations);
    if !d.clause_scores.is_empty() {
        let scores: Vec<String> = d.clause_scores.iter().map(|s| format!("{s:.3}")).collect();
        let _ = writeln!(out, "clause scores: {}", scores.join(", "));
    }
    let _ = writeln!(out, "elapsed: {:.3} s", d.elapsed.as_secs_f64());
    Ok(out)
}

fn cmd_simulate(args: &ScenarioArgs) -> Result<String, Failure> {
    let scenario = load_scenario(args)?;
    scenario.prepare().map_err(validation)?;
    let (trace, files) = sim::run(&scenario, &args.out).map_err(runtime)?;
    let s = &trace.summary;
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {} (seed {})", trace.header.scenario, trace.header.seed);
    let _ = writeln!(out, "steps: {} (final time {})", s.steps, s.final_time);
    for (id, first) in trace.header.targets.iter().zip(&s.first_detection) {
        match first {
            Some(t) => {
                let _ = writeln!(out, "first detection of {id}: t={t}");
            }
            None => {
                let _ = writeln!(out, "first detection of {id}: never");
            }
        }
    }
    let _ = writeln!(out, "mission value: {:.3}", s.final_monitored);
    let _ = writeln!(out, "ended early: {}", s.ended_early);
    let _ = writeln!(
        out,
        "peak candidates: {}, evaluations: {}, within complexity bound: {}",
        s.peak_candidates, s.total_evaluations, s.within_complexity_bound
    );
    let total: f64 = trace.timings.iter().map(|d| d.as_secs_f64()).sum();
    if !trace.timings.is_empty() {
        let _ = writeln!(
            out,
            "mean planning time: {:.3} s",
            total / trace.timings.len() as f64
        );
    }
    let _ = writeln!(out, "trace: {}", files.trace.display());
    let _ = writeln!(out, "timings: {}", files.timings.display());
    Ok(out)
}

fn cmd_plot(trace: &Path, steps: &[usize], out_dir: &Path) -> Result<String, Failure> {
    let trace = ExecutionTrace::load(trace)
        .with_context(|| format!("loading {}", trace.display()))
        .map_err(validation)?;
    let written = plot::write_plots(&trace, steps, out_dir).map_err(runtime)?;
    let mut out = String::new();
    for p in written {
        let _ = writeln!(out, "{}", p.display());
    }
    Ok(out)
}
