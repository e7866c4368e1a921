//! The `treelog` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 a cap or step
//! limit was hit.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::automata::{compile, parse_qa, simulate, QaError, DEFAULT_MAX_STEPS};
use crate::datalog::{is_tmnf, parse_program, Program};
use crate::elog::{datalog_to_elog, datalog_to_elog_over, elog_to_datalog, eval_elog, parse_elog};
use crate::eval::{evaluate, naive_fixpoint_capped, EvalError, NAIVE_CAP};
use crate::mso::{encode_program, eval_mso_unary_with, parse_mso, MsoCaps, MsoError};
use crate::normalize::{to_tmnf, NormalizeOptions, Signature, Stage};
use crate::tree::{outline, parse_html, parse_term_tree, serialize_tree, HtmlOptions, Label, NodeId, Tree, TreeFormat};
use crate::wrap::{run_wrapper, ConflictPolicy, WrapError, WrapperSpec};

#[derive(Parser, Debug)]
#[command(name = "treelog", version, about = "Monadic datalog over document trees")]
struct Cli {
    /// Write output to this file instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Read an HTML page or term tree and print it.
    Ingest(IngestArgs),
    /// Evaluate a datalog program on a tree.
    Eval(EvalArgs),
    /// Rewrite a program into TMNF.
    Normalize(NormalizeArgs),
    /// Check that a program is in TMNF.
    CheckTmnf(ProgramArg),
    /// Query automata.
    #[command(subcommand)]
    Qa(QaCmd),
    /// Elog wrappers.
    #[command(subcommand)]
    Elog(ElogCmd),
    /// MSO encoding and brute-force evaluation.
    #[command(subcommand)]
    Mso(MsoCmd),
    /// Run a wrapper on a page and print the output tree.
    Wrap(WrapArgs),
}

#[derive(Args, Debug)]
struct HtmlFlags {
    /// Append the class attribute to HTML labels.
    #[arg(long)]
    class_labels: bool,
    /// Keep whitespace-only text nodes.
    #[arg(long)]
    keep_whitespace: bool,
}

impl HtmlFlags {
    fn options(&self) -> HtmlOptions {
        HtmlOptions { class_labels: self.class_labels, keep_whitespace_text: self.keep_whitespace }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Term,
    Jsonl,
    Outline,
}

#[derive(Args, Debug)]
struct IngestArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "term")]
    format: OutFormat,
    #[command(flatten)]
    html: HtmlFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Engine {
    Linear,
    Naive,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long)]
    tree: PathBuf,
    /// Predicates to print; defaults to the program's `@query` directives,
    /// then to every intensional predicate.
    #[arg(long)]
    query: Vec<String>,
    #[arg(long, value_enum, default_value = "linear")]
    engine: Engine,
    /// Print the atoms derived in each naive round.
    #[arg(long)]
    trace: bool,
    #[command(flatten)]
    html: HtmlFlags,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SigArg {
    Auto,
    Ranked,
    Unranked,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    signature: SigArg,
    #[arg(long)]
    max_rank: Option<u32>,
    /// acyclic, connect, decompose or full.
    #[arg(long, default_value = "full")]
    stage: Stage,
}

#[derive(Args, Debug)]
struct ProgramArg {
    #[arg(long)]
    program: PathBuf,
}

#[derive(Subcommand, Debug)]
enum QaCmd {
    /// Print the datalog program of an automaton.
    Compile {
        #[arg(long)]
        automaton: PathBuf,
    },
    /// Simulate an automaton on a tree.
    Run {
        #[arg(long)]
        automaton: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Print every configuration.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Subcommand, Debug)]
enum ElogCmd {
    /// Translate a wrapper to datalog.
    Compile {
        #[arg(long)]
        wrapper: PathBuf,
    },
    /// Print the extent of every pattern.
    Run {
        #[arg(long)]
        wrapper: PathBuf,
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        html: HtmlFlags,
    },
    /// Translate a datalog program to a wrapper.
    FromDatalog {
        #[arg(long)]
        program: PathBuf,
        /// Comma-separated labels used to expand `not_label` atoms.
        #[arg(long, value_delimiter = ',')]
        alphabet: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum MsoCmd {
    /// Print the formula for a program's query predicate.
    Emit {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        query: String,
    },
    /// Evaluate a formula with one free node variable on a tree.
    Eval {
        /// S-expression formula file.
        #[arg(long, conflicts_with = "program")]
        formula: Option<PathBuf>,
        #[arg(long, requires = "query")]
        program: Option<PathBuf>,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = MsoCaps::default().max_nodes)]
        max_nodes: usize,
        #[arg(long, default_value_t = MsoCaps::default().max_set_quantifiers)]
        max_set_quantifiers: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConflictArg {
    First,
    Error,
}

#[derive(Args, Debug)]
struct WrapArgs {
    #[arg(long)]
    wrapper: PathBuf,
    /// `.map` file of `pattern => label` lines.
    #[arg(long)]
    map: PathBuf,
    /// HTML page or term tree.
    #[arg(long)]
    page: PathBuf,
    #[arg(long, value_enum, default_value = "first")]
    conflict: ConflictArg,
    #[arg(long)]
    include_text: bool,
    /// Emit XML instead of the term format.
    #[arg(long)]
    xml: bool,
    #[command(flatten)]
    html: HtmlFlags,
}

enum Failure {
    Input(String),
    Cap(String),
}

type CmdResult = Result<String, Failure>;

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| Failure::Input(format!("{}: not UTF-8", path.display())))
}

fn is_html(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("html" | "htm"))
}

/// HTML by extension, otherwise the term format.
fn load_tree(path: &Path, html: &HtmlFlags) -> Result<Tree, Failure> {
    if is_html(path) {
        parse_html(&read(path)?, &html.options()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    } else {
        parse_term_tree(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn ids(nodes: &BTreeSet<NodeId>) -> String {
    nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Cap { .. } => Failure::Cap(e.to_string()),
        _ => input(e),
    }
}

fn mso_failure(e: MsoError) -> Failure {
    match e {
        MsoError::NodeCap { .. } | MsoError::SetCap { .. } => Failure::Cap(e.to_string()),
        _ => input(e),
    }
}

fn qa_failure(e: QaError) -> Failure {
    match e {
        QaError::MaxSteps(_) => Failure::Cap(e.to_string()),
        _ => input(e),
    }
}

fn cmd_ingest(a: &IngestArgs) -> CmdResult {
    let t = load_tree(&a.file, &a.html)?;
    let mut s = match a.format {
        OutFormat::Term => serialize_tree(&t, TreeFormat::Term),
        OutFormat::Jsonl => serialize_tree(&t, TreeFormat::JsonLines),
        OutFormat::Outline => outline(&t),
    };
    if !s.ends_with('\n') {
        s.push('\n');
    }
    Ok(s)
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let p = load_program(&a.program)?;
    let t = load_tree(&a.tree, &a.html)?;
    let mut queries = a.query.clone();
    if queries.is_empty() {
        queries = p.effective_queries();
    }
    let defined = p.idb_predicates();
    for q in &queries {
        if !defined.contains(q.as_str()) {
            return Err(Failure::Input(format!("unknown query predicate `{q}`")));
        }
    }
    let mut out = String::new();
    let sets: Vec<BTreeSet<NodeId>> = match a.engine {
        Engine::Linear if !a.trace => {
            let r = evaluate(&p, &t).map_err(eval_failure)?;
            queries.iter().map(|q| r.set_of(q)).collect()
        }
        _ => {
            let r = naive_fixpoint_capped(&p, &t, NAIVE_CAP).map_err(eval_failure)?;
            if a.trace {
                for (i, round) in r.rounds.iter().enumerate() {
                    let atoms: Vec<String> = round.iter().map(|g| g.to_string()).collect();
                    let _ = writeln!(out, "round {}: {}", i + 1, atoms.join(" "));
                }
            }
            queries.iter().map(|q| r.nodes_of(q)).collect()
        }
    };
    if queries.len() == 1 && !a.trace {
        let _ = writeln!(out, "{}", ids(&sets[0]));
    } else {
        for (q, s) in queries.iter().zip(&sets) {
            let _ = writeln!(out, "{q}: {}", ids(s));
        }
    }
    Ok(out)
}

fn cmd_normalize(a: &NormalizeArgs) -> CmdResult {
    let p = load_program(&a.program)?;
    let signature = match a.signature {
        SigArg::Auto => Signature::Auto,
        SigArg::Ranked => Signature::Ranked,
        SigArg::Unranked => Signature::Unranked,
    };
    let n = to_tmnf(&p, &NormalizeOptions { signature, max_rank: a.max_rank, stop_after: a.stage }).map_err(input)?;
    for w in &n.warnings {
        eprintln!("{w}");
    }
    Ok(n.program.to_string())
}

fn cmd_check_tmnf(a: &ProgramArg) -> CmdResult {
    let p = load_program(&a.program)?;
    match is_tmnf(&p) {
        Ok(()) => Ok("ok\n".into()),
        Err(v) => Err(Failure::Input(format!("rule {} is not in TMNF: {}", v.index + 1, v.rule))),
    }
}

fn cmd_qa(c: &QaCmd) -> CmdResult {
    match c {
        QaCmd::Compile { automaton } => {
            let a = parse_qa(&read_text(automaton)?).map_err(input)?;
            Ok(compile(&a).to_string())
        }
        QaCmd::Run { automaton, tree, max_steps, trace } => {
            let a = parse_qa(&read_text(automaton)?).map_err(input)?;
            let t = load_tree(tree, &HtmlFlags { class_labels: false, keep_whitespace: false })?;
            let run = simulate(&a, &t, *max_steps).map_err(qa_failure)?;
            let states = &a.core().states;
            let mut out = String::new();
            if *trace {
                for (i, c) in run.configurations().iter().enumerate() {
                    let cut: Vec<String> = c.iter().map(|(n, q)| format!("{n}:{}", states[*q])).collect();
                    let _ = writeln!(out, "c{i}: {}", cut.join(" "));
                }
            }
            let _ = writeln!(out, "steps: {}", run.step_count());
            let _ = writeln!(out, "accepted: {}", run.accepted);
            let _ = writeln!(out, "selected: {}", ids(&run.query()));
            Ok(out)
        }
    }
}

fn cmd_elog(c: &ElogCmd) -> CmdResult {
    match c {
        ElogCmd::Compile { wrapper } => {
            let e = parse_elog(&read_text(wrapper)?).map_err(input)?;
            Ok(elog_to_datalog(&e).map_err(input)?.to_string())
        }
        ElogCmd::Run { wrapper, tree, html } => {
            let e = parse_elog(&read_text(wrapper)?).map_err(input)?;
            let t = load_tree(tree, html)?;
            let ext = eval_elog(&e, &t).map_err(input)?;
            let mut out = String::new();
            for p in e.patterns() {
                let _ = writeln!(out, "{p}: {}", ext.get(p).map(ids).unwrap_or_default());
            }
            Ok(out)
        }
        ElogCmd::FromDatalog { program, alphabet } => {
            let p = load_program(program)?;
            let e = if alphabet.is_empty() {
                datalog_to_elog(&p)
            } else {
                let labels: BTreeSet<Label> = alphabet.iter().map(|l| Label::new(l.as_str())).collect::<Result<_, _>>().map_err(input)?;
                datalog_to_elog_over(&p, &labels)
            }
            .map_err(input)?;
            Ok(e.to_string())
        }
    }
}

fn cmd_mso(c: &MsoCmd) -> CmdResult {
    match c {
        MsoCmd::Emit { program, query } => {
            let p = load_program(program)?;
            let f = encode_program(&p, query).map_err(mso_failure)?;
            Ok(format!("{f}\n"))
        }
        MsoCmd::Eval { formula, program, query, tree, max_nodes, max_set_quantifiers } => {
            let f = match (formula, program, query) {
                (Some(path), _, _) => parse_mso(&read_text(path)?).map_err(mso_failure)?,
                (None, Some(path), Some(q)) => encode_program(&load_program(path)?, q).map_err(mso_failure)?,
                _ => return Err(Failure::Input("give --formula or --program with --query".into())),
            };
            let t = load_tree(tree, &HtmlFlags { class_labels: false, keep_whitespace: false })?;
            let caps = MsoCaps { max_nodes: *max_nodes, max_set_quantifiers: *max_set_quantifiers };
            let sel = eval_mso_unary_with(&t, &f, caps).map_err(mso_failure)?;
            Ok(format!("{}\n", ids(&sel)))
        }
    }
}

fn cmd_wrap(a: &WrapArgs) -> CmdResult {
    let wrapper = parse_elog(&read_text(&a.wrapper)?).map_err(input)?;
    let mut spec = WrapperSpec::parse_map(&read_text(&a.map)?).map_err(input)?;
    spec.conflict = match a.conflict {
        ConflictArg::First => ConflictPolicy::First,
        ConflictArg::Error => ConflictPolicy::Error,
    };
    spec.include_text = a.include_text;
    let out = if is_html(&a.page) {
        run_wrapper(&read(&a.page)?, &a.html.options(), &wrapper, &spec)
    } else {
        let t = load_tree(&a.page, &a.html)?;
        eval_elog(&wrapper, &t).map_err(WrapError::from).and_then(|ext| crate::wrap::build_output_tree(&t, &ext, &spec))
    }
    .map_err(input)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if a.xml { out.to_xml() } else { format!("{}\n", out.to_term()) })
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.cmd {
        Cmd::Ingest(a) => cmd_ingest(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Normalize(a) => cmd_normalize(a),
        Cmd::CheckTmnf(a) => cmd_check_tmnf(a),
        Cmd::Qa(c) => cmd_qa(c),
        Cmd::Elog(c) => cmd_elog(c),
        Cmd::Mso(c) => cmd_mso(c),
        Cmd::Wrap(a) => cmd_wrap(a),
    };
    match result {
        Ok(text) => {
            if let Some(path) = &cli.output {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("error: {}: {e}", path.display());
                    return 2;
                }
            } else {
                print!("{text}");
            }
            0
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Cap(m)) => {
            eprintln!("error: {m}");
            3
        }
    }
}
