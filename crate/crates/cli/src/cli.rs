//! Argument parsing and the subcommands. Everything returns text plus an
//! exit code so the binary and the tests share one path.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use forcelab_core::capture::{alpha_z, captures, gamma_members, in_omega, in_omega_tree, CaptureSet};
use forcelab_core::format::{self, envelope, Codec};
use forcelab_core::fposet::{f_add_pair, f_raise, validate_fcondition_with, FCheck};
use forcelab_core::hposet::{add_branch_index, delta_system, extend_height, validate_condition_report, Policy};
use forcelab_core::lextree::validate_tree;
use forcelab_core::order::{LinOrder, OrderTerm};
use forcelab_core::pposet::{p_add_branch, validate_pcondition};
use forcelab_core::{Index, Rational, Violation};
use serde_json::{json, Value};

use crate::doc::{load, load_document, read_value, Document, InputError, SetFamily, Tree};
use crate::report::Report;
use crate::scenario::{run_scenario, RunOptions, Scenario};

pub const SEED_ENV: &str = "FORCELAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Human,
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "forcelab", version, about = "Validate, extend and exercise finite forcing conditions")]
pub struct Cli {
    /// Scenario seed; falls back to the scenario's own seed, then to FORCELAB_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Children per node for explicit growth steps; dense goals use the least admissible fanout.
    #[arg(long, global = true)]
    pub fanout: Option<usize>,
    /// Refuse steps that would raise the height past this value.
    #[arg(long, global = true)]
    pub max_height: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "human")]
    pub format: OutputFormat,
    /// Admit branches of the subtree generated by L that are not in L.
    #[arg(long, global = true)]
    pub allow_closure_branches: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a condition, ambient or tree file against every clause.
    Validate {
        file: PathBuf,
        /// Flag fibers of phi larger than this.
        #[arg(long)]
        fiber_bound: Option<usize>,
    },
    /// Apply one tactic to a condition and print the result.
    Extend {
        file: PathBuf,
        /// h: raise the height to this value.
        #[arg(long)]
        height: Option<usize>,
        /// h: add a branch for this index.
        #[arg(long)]
        index: Option<Index>,
        /// f: add the pair XI:ETA to phi.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(Index, Index)>,
        /// f: add this height to A.
        #[arg(long)]
        raise: Option<usize>,
        /// p: append the top entry plus this index's branch.
        #[arg(long)]
        branch: Option<Index>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a scenario schedule and print its report.
    Run {
        scenario: PathBuf,
        /// Also write the structured report here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Extract a largest delta-subsystem from a set family or from the
    /// domains of several h-conditions.
    DeltaSystem {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluate a capture set against an order or a tree.
    Capture {
        set: PathBuf,
        #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
        order: Option<PathBuf>,
        #[arg(long)]
        tree: Option<PathBuf>,
        /// List the k-subsets of the set's cuts that fail to capture.
        #[arg(long, requires = "order")]
        gamma: Option<usize>,
    },
    /// Scatteredness and Hausdorff rank of an order term (text or file).
    Rank { term: String },
    /// Re-render a report written by `run`.
    Report { runfile: PathBuf },
}

fn parse_pair(s: &str) -> Result<(Index, Index), String> {
    let (a, b) = s.split_once(':').ok_or("expected XI:ETA")?;
    Ok((a.trim().parse().map_err(|_| "bad XI")?, b.trim().parse().map_err(|_| "bad ETA")?))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn input_error(msg: impl std::fmt::Display) -> Self {
        Output {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// `env_seed` is the raw value of the seed environment variable.
pub fn run_cli<I, T>(args: I, env_seed: Option<String>) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Output::ok(text)
            } else {
                Output {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let fallback_seed = match env_seed.map(|s| s.trim().parse::<u64>()) {
        None => None,
        Some(Ok(s)) => Some(s),
        Some(Err(_)) => return Output::input_error(format!("{SEED_ENV} is not a natural number")),
    };
    let opts = RunOptions {
        seed: cli.seed,
        fallback_seed,
        fanout: cli.fanout,
        max_height: cli.max_height,
        allow_closure: cli.allow_closure_branches,
    };
    match dispatch(&cli, &opts) {
        Ok(out) => out,
        Err(e) => Output::input_error(e),
    }
}

fn dispatch(cli: &Cli, opts: &RunOptions) -> Result<Output, InputError> {
    let fmt = cli.format;
    match &cli.command {
        Command::Validate { file, fiber_bound } => cmd_validate(file, *fiber_bound, fmt, opts),
        Command::Extend {
            file,
            height,
            index,
            pair,
            raise,
            branch,
            output,
        } => {
            let tactic = Tactic::pick(*height, *index, *pair, *raise, *branch)?;
            cmd_extend(file, tactic, output.as_deref(), opts)
        }
        Command::Run { scenario, output } => cmd_run(scenario, output.as_deref(), fmt, opts),
        Command::DeltaSystem { files } => cmd_delta(files, fmt),
        Command::Capture {
            set,
            order,
            tree,
            gamma,
        } => cmd_capture(set, order.as_deref(), tree.as_deref(), *gamma, fmt, opts),
        Command::Rank { term } => cmd_rank(term, fmt),
        Command::Report { runfile } => cmd_report(runfile, fmt),
    }
}

fn structured(kind: &str, body: Value) -> String {
    let mut s = serde_json::to_string_pretty(&envelope(kind, &body)).expect("json");
    s.push('\n');
    s
}

fn violation_lines(vs: &[Violation]) -> String {
    vs.iter().map(|v| format!("  {v}\n")).collect()
}

pub fn cmd_validate(file: &Path, fiber_bound: Option<usize>, fmt: OutputFormat, opts: &RunOptions) -> Result<Output, InputError> {
    let doc = load_document(file, opts.allow_closure)?;
    let mut diagnostics = serde_json::Map::new();
    let violations = match &doc {
        Document::Tree(t) => validate_tree(t),
        Document::H(q) => {
            let r = validate_condition_report(q);
            diagnostics.insert("c6_vacuous".into(), json!(r.c6_vacuous));
            r.violations
        }
        Document::FAmbient(a) => a.validate(),
        Document::F(a, c) => {
            let mut v = a.validate();
            let r = validate_fcondition_with(a, c, FCheck { fiber_bound });
            diagnostics.insert("max_fiber".into(), json!(r.max_fiber));
            v.extend(r.violations);
            v
        }
        Document::PAmbient(a) => a.validate(),
        Document::P(a, c) => {
            let mut v = a.validate();
            v.extend(validate_pcondition(a, c));
            v
        }
    };
    let code = if violations.is_empty() { 0 } else { 1 };
    let stdout = match fmt {
        OutputFormat::Structured => structured(
            "validation",
            json!({
                "document": doc.kind(),
                "ok": violations.is_empty(),
                "violations": violations,
                "diagnostics": diagnostics,
            }),
        ),
        OutputFormat::Human => {
            let mut s = format!("{}: {}", file.display(), doc.kind());
            if violations.is_empty() {
                s.push_str(" ok");
            } else {
                let _ = write!(s, " {} violation(s)", violations.len());
            }
            for (k, v) in &diagnostics {
                let _ = write!(s, " {}={v}", k.replace('_', "-"));
            }
            s.push('\n');
            s + &violation_lines(&violations)
        }
    };
    Ok(Output {
        code,
        stdout,
        stderr: String::new(),
    })
}

#[derive(Debug, Clone, Copy)]
enum Tactic {
    Height(usize),
    Index(Index),
    Pair(Index, Index),
    Raise(usize),
    Branch(Index),
}

impl Tactic {
    fn pick(
        height: Option<usize>,
        index: Option<Index>,
        pair: Option<(Index, Index)>,
        raise: Option<usize>,
        branch: Option<Index>,
    ) -> Result<Tactic, InputError> {
        let all = [
            height.map(Tactic::Height),
            index.map(Tactic::Index),
            pair.map(|(a, b)| Tactic::Pair(a, b)),
            raise.map(Tactic::Raise),
            branch.map(Tactic::Branch),
        ];
        let mut given = all.into_iter().flatten();
        match (given.next(), given.next()) {
            (Some(t), None) => Ok(t),
            _ => Err(InputError::Invalid(
                "give exactly one of --height, --index, --pair, --raise, --branch".into(),
            )),
        }
    }
}

fn cmd_extend(file: &Path, tactic: Tactic, output: Option<&Path>, opts: &RunOptions) -> Result<Output, InputError> {
    let doc = load_document(file, opts.allow_closure)?;
    let policy = Policy {
        fanout: opts.fanout.unwrap_or(2),
        seed: opts.seed.or(opts.fallback_seed).unwrap_or(0),
    };
    let mismatch = || InputError::Invalid(format!("tactic {tactic:?} does not apply to a {} document", doc.kind()));
    let result: Result<Document, String> = match (&doc, tactic) {
        (Document::H(q), Tactic::Height(h)) => {
            if opts.max_height.is_some_and(|m| h > m) {
                Err(format!("height {h} exceeds the maximum"))
            } else {
                extend_height(q, h, policy).map(Document::H).map_err(|e| e.to_string())
            }
        }
        (Document::H(q), Tactic::Index(xi)) => add_branch_index(q, xi, policy).map(Document::H).map_err(|e| e.to_string()),
        (Document::F(a, c), Tactic::Pair(x, e)) => f_add_pair(a, c, x, e)
            .map(|c| Document::F(a.clone(), c))
            .map_err(|e| e.to_string()),
        (Document::F(a, c), Tactic::Raise(h)) => f_raise(a, c, h)
            .map(|c| Document::F(a.clone(), c))
            .map_err(|e| e.to_string()),
        (Document::P(a, c), Tactic::Branch(xi)) => p_add_branch(a, c, xi)
            .map(|c| Document::P(a.clone(), c))
            .map_err(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")),
        _ => return Err(mismatch()),
    };
    match result {
        Err(e) => Ok(Output {
            code: 1,
            stdout: String::new(),
            stderr: format!("tactic failed: {e}\n"),
        }),
        Ok(d) => {
            let text = d.to_json() + "\n";
            match output {
                Some(p) => {
                    write_file(p, &text)?;
                    Ok(Output::ok(String::new()))
                }
                None => Ok(Output::ok(text)),
            }
        }
    }
}

fn write_file(p: &Path, text: &str) -> Result<(), InputError> {
    fs::write(p, text).map_err(|source| InputError::Io {
        path: p.to_path_buf(),
        source,
    })
}

fn render_report(r: &Report, fmt: OutputFormat) -> String {
    match fmt {
        OutputFormat::Human => r.to_human(),
        OutputFormat::Structured => r.to_structured() + "\n",
    }
}

fn cmd_run(path: &Path, output: Option<&Path>, fmt: OutputFormat, opts: &RunOptions) -> Result<Output, InputError> {
    let scn: Scenario = load(path)?;
    let report = run_scenario(scn, path, opts)?;
    if let Some(p) = output {
        write_file(p, &(report.to_structured() + "\n"))?;
    }
    Ok(Output {
        code: report.status.exit_code(),
        stdout: render_report(&report, fmt),
        stderr: String::new(),
    })
}

fn cmd_report(path: &Path, fmt: OutputFormat) -> Result<Output, InputError> {
    let report: Report = load(path)?;
    Ok(Output {
        code: report.status.exit_code(),
        stdout: render_report(&report, fmt),
        stderr: String::new(),
    })
}

fn cmd_delta(files: &[PathBuf], fmt: OutputFormat) -> Result<Output, InputError> {
    let first = read_value(&files[0])?;
    let sets: Vec<BTreeSet<Index>> = if first.get("kind").and_then(Value::as_str) == Some(SetFamily::KIND) {
        if files.len() > 1 {
            return Err(InputError::Invalid("a set-family file must be given alone".into()));
        }
        format::from_value::<SetFamily>(first)
            .map_err(|source| InputError::Format {
                path: files[0].clone(),
                source,
            })?
            .sets
    } else {
        files
            .iter()
            .map(|f| match load_document(f, false)? {
                Document::H(q) => Ok(q.domain()),
                d => Err(InputError::Invalid(format!("{}: expected an h-condition, found {}", f.display(), d.kind()))),
            })
            .collect::<Result<_, _>>()?
    };
    let ds = delta_system(&sets);
    let stdout = match fmt {
        OutputFormat::Structured => format::to_json(&ds) + "\n",
        OutputFormat::Human => format!(
            "delta-system of {} sets: root {:?}, members {:?}{}\n",
            sets.len(),
            ds.root,
            ds.positions,
            if ds.exhaustive { "" } else { " (greedy)" }
        ),
    };
    Ok(Output::ok(stdout))
}

fn tree_of(doc: Document) -> Tree {
    match doc {
        Document::Tree(t) => t,
        Document::H(q) => q.tree,
        Document::FAmbient(a) | Document::F(a, _) => a.tree,
        Document::PAmbient(a) | Document::P(a, _) => a.tree,
    }
}

fn cmd_capture(
    set: &Path,
    order: Option<&Path>,
    tree: Option<&Path>,
    gamma: Option<usize>,
    fmt: OutputFormat,
    opts: &RunOptions,
) -> Result<Output, InputError> {
    let z: CaptureSet<Rational> = load(set)?;
    let body = if let Some(op) = order {
        let l: LinOrder<Rational> = load(op)?;
        let per: Vec<(String, bool)> = l
            .elements()
            .iter()
            .map(|(x, _)| (x.0.clone(), captures(&z, x, &l).expect("element of l")))
            .collect();
        let mut body = json!({
            "in_omega": in_omega(&z, &l),
            "captured": per.iter().map(|(x, c)| json!([x, c])).collect::<Vec<_>>(),
        });
        if let Some(k) = gamma {
            let members: Vec<Vec<String>> = gamma_members(&l, &z.cuts, k)
                .into_iter()
                .map(|m| m.iter().map(forcelab_core::Scalar::to_text).collect())
                .collect();
            body["gamma"] = json!(members);
        }
        body
    } else {
        let t = tree_of(load_document(tree.expect("clap requires one"), opts.allow_closure)?);
        match alpha_z(&z, &t) {
            Ok(a) => json!({"alpha_z": a, "in_omega_tree": in_omega_tree(&z, &t).unwrap_or(false)}),
            Err(e) => return Err(InputError::Invalid(format!("{}: {e}", set.display()))),
        }
    };
    let stdout = match fmt {
        OutputFormat::Structured => structured("capture-result", body),
        OutputFormat::Human => {
            let mut s = String::new();
            if let Some(v) = body.get("in_omega") {
                let _ = writeln!(s, "in omega: {v}");
                for pair in body["captured"].as_array().into_iter().flatten() {
                    let _ = writeln!(s, "  {} captured: {}", pair[0].as_str().unwrap_or(""), pair[1]);
                }
            }
            if let Some(g) = body.get("gamma").and_then(Value::as_array) {
                let _ = writeln!(s, "gamma members: {}", g.len());
                for m in g {
                    let _ = writeln!(s, "  {m}");
                }
            }
            if let Some(a) = body.get("alpha_z") {
                let _ = writeln!(s, "alpha_z: {a}\nin omega (tree): {}", body["in_omega_tree"]);
            }
            s
        }
    };
    Ok(Output::ok(stdout))
}

fn cmd_rank(arg: &str, fmt: OutputFormat) -> Result<Output, InputError> {
    let path = Path::new(arg);
    let term: OrderTerm = if path.is_file() {
        load(path)?
    } else {
        arg.parse()
            .map_err(|e| InputError::Invalid(format!("`{arg}` is neither a file nor a term: {e}")))?
    };
    let rank = term.hausdorff_rank().ok();
    let stdout = match fmt {
        OutputFormat::Structured => structured(
            "rank",
            json!({"term": term.to_string(), "scattered": term.is_scattered(), "hausdorff_rank": rank}),
        ),
        OutputFormat::Human => match rank {
            Some(r) => format!("{term}: scattered, Hausdorff rank {r}\n"),
            None => format!("{term}: not scattered\n"),
        },
    };
    Ok(Output::ok(stdout))
}
