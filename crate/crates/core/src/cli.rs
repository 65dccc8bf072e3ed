//! The `rewb` command-line tool.
//!
//! Exit status: 0 on success, 1 on a domain error (bad rewb, bad ref-word,
//! precondition violation, cross-check mismatch), 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::construct::{build_nesa, build_nsa};
use crate::langlab::{self, crosscheck, language_slice, Acceptor, BudgetPolicy, Example};
use crate::larsen::{label_note, larsen_alphabet, larsen_nesa, larsen_rewb};
use crate::machine::{to_dot, Budget, Outcome, StackMachine};
use crate::refnfa::{Oracle, RefNfa};
use crate::refword::{deref_values, RefWord};
use crate::syntax::{format_word, parse, Alphabet, Rewb, Word};

#[derive(Parser, Debug)]
#[command(name = "rewb", version, about = "Regular expressions with backreferences and their stack automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Via {
    Oracle,
    Nsa,
    Nesa,
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArgs {
    /// Maximum configurations expanded [default: $REWB_MAX_STEPS or 1000000]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: Option<u64>,
    /// Maximum tape cells [default: $REWB_MAX_CELLS or 10000]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_cells: Option<u64>,
}

impl BudgetArgs {
    fn budget(self) -> Budget {
        let mut b = Budget::from_env();
        if let Some(n) = self.max_steps {
            b.max_steps = n as usize;
        }
        if let Some(n) = self.max_cells {
            b.max_cells = n as usize;
        }
        b
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a rewb and describe it
    Parse {
        rewb: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Dereference a ref-word such as "[1 a ]1 1" (read from stdin if omitted)
    Deref {
        refword: Option<String>,
        /// Show the tape after each dereferencing loop
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// List the ref-words of a rewb up to a length, with their dereferences
    Refwords {
        rewb: String,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Decide membership of a word with the oracle
    Match {
        rewb: String,
        /// Word to test; "~" or "" for the empty word
        word: String,
        /// Alphabet used to split the word [default: letters of the rewb]
        #[arg(long)]
        alphabet: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile a rewb to a nested stack automaton
    CompileNsa {
        rewb: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile a rewb without captured references to a nonerasing stack automaton
    CompileNesa {
        rewb: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a machine on a word
    Run {
        #[command(flatten)]
        source: MachineSource,
        /// Machine JSON file followed by the word, or only the word when a
        /// machine option is given
        #[arg(required = true, num_args = 1..=2, value_name = "[MACHINE] WORD")]
        args: Vec<String>,
        /// Print the accepting run
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Membership of every word up to a length
    Slice {
        /// Rewb to slice (alternatively --machine or --example)
        rewb: Option<String>,
        #[arg(long, conflicts_with = "rewb")]
        machine: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["rewb", "machine"])]
        example: Option<String>,
        /// How a rewb is decided
        #[arg(long, value_enum, default_value = "oracle")]
        via: Via,
        #[arg(long)]
        alphabet: String,
        #[arg(long)]
        max_len: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare the oracle with the constructed machines on every word up to a length
    Crosscheck {
        rewb: String,
        #[arg(long)]
        alphabet: String,
        #[arg(long)]
        max_len: usize,
        /// Scale of the negative budget over the largest positive budget
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        negative_factor: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Larsen's hierarchy
    Larsen {
        #[arg(long)]
        level: usize,
        /// Print the rewb (default)
        #[arg(long, conflicts_with = "nesa")]
        rewb: bool,
        /// Print the nonerasing stack automaton
        #[arg(long)]
        nesa: bool,
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write a machine as JSON or DOT
    Export {
        #[command(flatten)]
        source: MachineSource,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
struct MachineSource {
    /// Machine JSON file ("-" for stdin)
    #[arg(long)]
    machine: Option<PathBuf>,
    /// Compile this rewb to an NSA
    #[arg(long)]
    nsa: Option<String>,
    /// Compile this rewb to an NESA
    #[arg(long)]
    nesa: Option<String>,
    /// Built-in machine: anbn_nesa, or larsen<i>
    #[arg(long)]
    example: Option<String>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

type Res<T = ()> = Result<T, Failure>;

struct Io<'a> {
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
}

pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    if let Err(msg) = check_usage(&cli.command) {
        let _ = writeln!(err, "error: {msg}");
        return 2;
    }
    let mut io = Io { input, out };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

impl MachineSource {
    fn is_given(&self) -> bool {
        self.machine.is_some() || self.nsa.is_some() || self.nesa.is_some() || self.example.is_some()
    }
}

fn check_usage(cmd: &Command) -> Result<(), String> {
    match cmd {
        Command::Run { source, args, .. } => match (source.is_given(), args.len()) {
            (true, 2) => Err("machine given both as a file argument and as an option".into()),
            (false, 1) => Err("run needs a machine: a JSON file argument, --machine, --nsa, --nesa or --example".into()),
            _ => Ok(()),
        },
        Command::Export { source, .. } if !source.is_given() => {
            Err("export needs one of --machine, --nsa, --nesa, --example".into())
        }
        _ => Ok(()),
    }
}

fn dispatch(cmd: Command, io: &mut Io<'_>) -> Res<u8> {
    match cmd {
        Command::Parse { rewb, format } => cmd_parse(&rewb, format, io)?,
        Command::Deref { refword, trace, format } => cmd_deref(refword, trace, format, io)?,
        Command::Refwords { rewb, max_len } => cmd_refwords(&rewb, max_len, io)?,
        Command::Match { rewb, word, alphabet, format } => cmd_match(&rewb, &word, alphabet, format, io)?,
        Command::CompileNsa { rewb, format, output } => {
            let m = build_nsa(&parse(&rewb)?);
            emit_machine(&m, format, output, io)?
        }
        Command::CompileNesa { rewb, format, output } => {
            let m = build_nesa(&parse(&rewb)?)?;
            emit_machine(&m, format, output, io)?
        }
        Command::Run { mut source, mut args, trace, budget, format } => {
            let word = args.pop().expect("at least one argument");
            if let Some(path) = args.pop() {
                source.machine = Some(PathBuf::from(path));
            }
            cmd_run(&source, &word, trace, budget.budget(), format, io)?
        }
        Command::Slice { rewb, machine, example, via, alphabet, max_len, budget, format } => {
            cmd_slice(rewb, machine, example, via, &alphabet, max_len, budget.budget(), format, io)?
        }
        Command::Crosscheck { rewb, alphabet, max_len, negative_factor, format } => {
            return cmd_crosscheck(&rewb, &alphabet, max_len, negative_factor as usize, format, io);
        }
        Command::Larsen { level, rewb: _, nesa, dot, json } => cmd_larsen(level, nesa, dot, json, io)?,
        Command::Export { source, format, output } => {
            let m = load_machine(&source, io)?;
            let format = if format == Format::Text { Format::Json } else { format };
            emit_machine(&m, format, output, io)?
        }
    }
    Ok(0)
}

fn cmd_parse(text: &str, format: Format, io: &mut Io<'_>) -> Res {
    let ast = parse(text)?;
    let labels = |s: &std::collections::BTreeSet<u32>| {
        s.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    };
    match format {
        Format::Json => {
            let body = json!({
                "rewb": ast.pretty(),
                "ast": ast,
                "k": ast.k(),
                "captures": ast.captured_labels(),
                "references": ast.referenced_labels(),
                "captured_reference": ast.has_captured_reference(),
            });
            writeln!(io.out, "{}", serde_json::to_string_pretty(&body)?)?;
        }
        _ => {
            writeln!(io.out, "rewb: {}", ast.pretty())?;
            writeln!(io.out, "k: {}", ast.k())?;
            writeln!(io.out, "captures: {}", labels(&ast.captured_labels()))?;
            writeln!(io.out, "references: {}", labels(&ast.referenced_labels()))?;
            writeln!(io.out, "captured reference: {}", if ast.has_captured_reference() { "yes" } else { "no" })?;
        }
    }
    Ok(())
}

fn cmd_deref(arg: Option<String>, trace: bool, format: Format, io: &mut Io<'_>) -> Res {
    let text = match arg {
        Some(t) => t,
        None => {
            let mut s = String::new();
            io.input.read_to_string(&mut s)?;
            s
        }
    };
    let v = RefWord::parse(&text)?;
    let t = deref_values(&v);
    if format == Format::Json {
        let body = json!({
            "refword": v.to_string(),
            "matching": v.is_matching(),
            "result": t.result.as_ref().map(|w| format_word(w)),
            "snapshots": t.snapshots.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        });
        writeln!(io.out, "{}", serde_json::to_string_pretty(&body)?)?;
    } else if trace {
        for (r, s) in t.snapshots.iter().enumerate() {
            writeln!(io.out, "{r}: {s}")?;
        }
    }
    match t.result {
        Some(w) if format != Format::Json => writeln!(io.out, "{}", format_word(&w))?,
        Some(_) => {}
        None => return Err(Failure(format!("dereference of {v} is undefined: a reference follows an unclosed capture"))),
    }
    Ok(())
}

fn cmd_refwords(text: &str, max_len: usize, io: &mut Io<'_>) -> Res {
    let ast = parse(text)?;
    let nfa = RefNfa::build(&ast);
    for v in nfa.enumerate_refwords(max_len) {
        let w = crate::refword::deref(&v).map(|w| format_word(&w)).unwrap_or_else(|| "undefined".into());
        writeln!(io.out, "{v}\t{w}")?;
    }
    Ok(())
}

fn alphabet_for(ast: &Rewb, decl: Option<&str>) -> Res<Alphabet> {
    match decl {
        Some(d) => Ok(Alphabet::parse(d)?),
        None if ast.letters().is_empty() => Ok(Alphabet::parse("a")?),
        None => Ok(Alphabet::new(ast.letters().into_iter().collect())?),
    }
}

fn cmd_match(text: &str, word: &str, alphabet: Option<String>, format: Format, io: &mut Io<'_>) -> Res {
    let ast = parse(text)?;
    let w = alphabet_for(&ast, alphabet.as_deref())?.tokenize(word)?;
    let r = Oracle::new(&ast).check(&w);
    if format == Format::Json {
        let body = json!({
            "rewb": ast.pretty(),
            "word": format_word(&w),
            "accepted": r.accepted,
            "witness": r.witness.as_ref().map(|v| v.to_string()),
            "explored": r.explored,
        });
        writeln!(io.out, "{}", serde_json::to_string_pretty(&body)?)?;
    } else if let Some(v) = r.witness {
        writeln!(io.out, "ACCEPT")?;
        writeln!(io.out, "witness: {v}")?;
    } else {
        writeln!(io.out, "REJECT")?;
    }
    Ok(())
}

fn write_to(text: &str, output: Option<PathBuf>, io: &mut Io<'_>) -> Res {
    match output {
        Some(p) => fs::write(&p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => Ok(io.out.write_all(text.as_bytes())?),
    }
}

fn machine_text(m: &StackMachine) -> String {
    let mut s = format!("{} ({:?})\n", m.name, m.flavor);
    s += &format!("states ({}): {}\n", m.states.len(), m.states.join(" "));
    s += &format!("input: {}\n", m.input_alphabet.join(" "));
    s += &format!("stack: {}\n", m.stack_alphabet.join(" "));
    s += &format!("start: {}  initial: {}  final: {}\n", m.start, m.initial_stack_symbol, m.finals.join(" "));
    s += &format!("rules ({}):\n", m.rules.len());
    for r in &m.rules {
        s += &format!("  {} --[{}]--> {}\n", r.from, r.label(), r.to);
    }
    s
}

fn emit_machine(m: &StackMachine, format: Format, output: Option<PathBuf>, io: &mut Io<'_>) -> Res {
    let text = match format {
        Format::Json => m.to_json() + "\n",
        Format::Dot => to_dot(m),
        Format::Text => machine_text(m),
    };
    write_to(&text, output, io)
}

fn named_machine(name: &str) -> Res<StackMachine> {
    if let Some(level) = name.strip_prefix("larsen") {
        let level: usize = level.parse().map_err(|_| Failure(format!("bad Larsen level in {name:?}")))?;
        return Ok(larsen_nesa(level));
    }
    match langlab::example(name)? {
        Example::Machine(m) => Ok(m),
        Example::Rewb(ast) => Ok(build_nsa(&ast)),
    }
}

fn load_machine(src: &MachineSource, io: &mut Io<'_>) -> Res<StackMachine> {
    if let Some(p) = &src.machine {
        let text = if p.as_os_str() == "-" {
            let mut s = String::new();
            io.input.read_to_string(&mut s)?;
            s
        } else {
            fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))?
        };
        let m = StackMachine::from_json(&text)?;
        m.runner()?;
        Ok(m)
    } else if let Some(r) = &src.nsa {
        Ok(build_nsa(&parse(r)?))
    } else if let Some(r) = &src.nesa {
        Ok(build_nesa(&parse(r)?)?)
    } else if let Some(name) = &src.example {
        named_machine(name)
    } else {
        Err(Failure("no machine given".into()))
    }
}

fn machine_alphabet(m: &StackMachine) -> Res<Alphabet> {
    if m.input_alphabet.is_empty() {
        return Ok(Alphabet::parse("a")?);
    }
    let syms = m.input_alphabet.iter().map(|s| crate::syntax::Symbol::new(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(Alphabet::new(syms)?)
}

fn cmd_run(src: &MachineSource, word: &str, trace: bool, budget: Budget, format: Format, io: &mut Io<'_>) -> Res {
    let m = load_machine(src, io)?;
    let w: Word = machine_alphabet(&m)?.tokenize(word)?;
    let runner = m.runner()?;
    let outcome = runner.accepts(&w, budget);
    let stats = outcome.stats();
    if format == Format::Json {
        let body = match &outcome {
            Outcome::Accepted(t) => json!({
                "word": format_word(&w),
                "outcome": "accepted",
                "stats": stats,
                "trace": t.configurations.iter().map(|c| runner.render_configuration(c, &w)).collect::<Vec<_>>(),
            }),
            Outcome::NotWithinBudget(_) => json!({
                "word": format_word(&w),
                "outcome": if stats.exhaustive() { "rejected" } else { "not_within_budget" },
                "stats": stats,
                "budget": budget,
            }),
        };
        writeln!(io.out, "{}", serde_json::to_string_pretty(&body)?)?;
        return Ok(());
    }
    match &outcome {
        Outcome::Accepted(t) => {
            writeln!(io.out, "ACCEPT ({} steps, {} configurations expanded)", t.len() - 1, stats.expanded)?;
            if trace {
                writeln!(io.out, "{}", runner.render_trace(t).trim_end())?;
            }
        }
        Outcome::NotWithinBudget(_) if stats.exhaustive() => {
            writeln!(io.out, "REJECT (exhaustive, {} configurations)", stats.visited)?;
        }
        Outcome::NotWithinBudget(_) => {
            writeln!(
                io.out,
                "NOT ACCEPTED within budget ({} steps, {} cells); bounded refutation only",
                budget.max_steps, budget.max_cells
            )?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_slice(
    rewb: Option<String>,
    machine: Option<PathBuf>,
    example: Option<String>,
    via: Via,
    alphabet: &str,
    max_len: usize,
    budget: Budget,
    format: Format,
    io: &mut Io<'_>,
) -> Res {
    let alphabet = Alphabet::parse(alphabet)?;
    let report = match (rewb, machine, example) {
        (Some(text), _, _) => {
            let ast = parse(&text)?;
            match via {
                Via::Oracle => language_slice(Acceptor::Rewb(&ast), &alphabet, max_len, budget),
                Via::Nsa => language_slice(Acceptor::Machine(&build_nsa(&ast)), &alphabet, max_len, budget),
                Via::Nesa => language_slice(Acceptor::Machine(&build_nesa(&ast)?), &alphabet, max_len, budget),
            }
        }
        (None, Some(path), _) => {
            let src = MachineSource { machine: Some(path), nsa: None, nesa: None, example: None };
            let m = load_machine(&src, io)?;
            language_slice(Acceptor::Machine(&m), &alphabet, max_len, budget)
        }
        (None, None, Some(name)) => match langlab::example(&name) {
            Ok(Example::Rewb(ast)) if via == Via::Oracle => language_slice(Acceptor::Rewb(&ast), &alphabet, max_len, budget),
            _ => language_slice(Acceptor::Machine(&named_machine(&name)?), &alphabet, max_len, budget),
        },
        (None, None, None) => return Err(Failure("slice needs a rewb, --machine or --example".into())),
    };
    if format == Format::Json {
        writeln!(io.out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        write!(io.out, "{}", report.to_text())?;
    }
    Ok(())
}

fn cmd_crosscheck(text: &str, alphabet: &str, max_len: usize, factor: usize, format: Format, io: &mut Io<'_>) -> Res<u8> {
    let ast = parse(text)?;
    let alphabet = Alphabet::parse(alphabet)?;
    let report = crosscheck(&ast, &alphabet, max_len, BudgetPolicy::Derived { negative_factor: factor });
    if format == Format::Json {
        let body = json!({
            "report": report,
            "mismatches": report.mismatches(),
            "invariant_errors": report.invariant_errors(),
            "clean": report.is_clean(),
        });
        writeln!(io.out, "{}", serde_json::to_string_pretty(&body)?)?;
    } else {
        write!(io.out, "{}", report.to_text())?;
    }
    Ok(if report.is_clean() { 0 } else { 1 })
}

fn cmd_larsen(level: usize, nesa: bool, dot: bool, json_out: bool, io: &mut Io<'_>) -> Res {
    if nesa {
        let m = larsen_nesa(level);
        let format = if dot { Format::Dot } else if json_out { Format::Json } else { Format::Text };
        return emit_machine(&m, format, None, io);
    }
    if dot {
        return Err(Failure("--dot needs --nesa".into()));
    }
    let ast = larsen_rewb(level);
    let symbols: Vec<String> = larsen_alphabet(level).symbols().iter().map(|s| s.spelled()).collect();
    if json_out {
        let body = json!({ "level": level, "rewb": ast.pretty(), "ast": ast, "alphabet": symbols, "labels": label_note(level) });
        writeln!(io.out, "{}", serde_json::to_string_pretty(&body)?)?;
    } else {
        writeln!(io.out, "{}", ast.pretty())?;
        writeln!(io.out, "alphabet: {}", symbols.join(" "))?;
        writeln!(io.out, "labels: {}", label_note(level))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (u8, String, String) {
        let mut input: &[u8] = b"";
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("rewb").chain(args.iter().copied()), &mut input, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn deref_golden() {
        let (code, out, _) = call(&["deref", "[1 a [2 b ]2 2 ]1 1"]);
        assert_eq!((code, out.as_str()), (0, "abbabb\n"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["parse", "(1:(1:a*))"]).0, 1);
        assert_eq!(call(&["parse"]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
        assert_eq!(call(&["compile-nesa", r"(1:a)(2:\1)\2"]).0, 1);
    }

    #[test]
    fn match_prints_witness() {
        let (code, out, _) = call(&["match", r"(1:(a+b)*)\1", "abab"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("ACCEPT\nwitness: [1 ab ]1 1"), "{out}");
    }
}
