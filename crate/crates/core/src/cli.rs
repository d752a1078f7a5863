//! Command-line front end.
//!
//! Exit codes: 0 for a positive verdict or a written result, 1 for a
//! negative verdict, 2 for usage, input and resource errors.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::aml::{check_wellformed_open, parse_model, ActorDef, Model};
use crate::assume::{generate_assumption, AssumeConfig, AssumptionOutcome, AssumptionRun};
use crate::infm::{parse_info, InfoSpec};
use crate::lts::{read_aut, write_aut, write_dot};
use crate::mcheck::{check_component, verify_monolithic, ComponentVerdict, MonolithicVerdict};
use crate::property::{compose_property_lts, parse_perr, ErrDfa};
use crate::semantics::{default_state_cap, explore};

#[derive(Debug, Parser)]
#[command(
    name = "agcheck",
    version,
    about = "Assume-guarantee checking of actor systems"
)]
pub struct Cli {
    /// Maximum number of states explored (default from AGCHECK_STATE_CAP).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub state_cap: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a model and check its well-formedness.
    Parse { model: PathBuf },
    /// Generate the assumption for the missing component of an open system.
    Assume(AssumeArgs),
    /// Check a concrete component against an assumption.
    Check(CheckArgs),
    /// Check a closed system against an error automaton directly.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        perr: PathBuf,
    },
    /// Export the state space of a closed model.
    Lts {
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Compose with an error automaton first.
        #[arg(long)]
        perr: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AssumeArgs {
    #[arg(long)]
    pub open: PathBuf,
    #[arg(long)]
    pub info: PathBuf,
    #[arg(long)]
    pub perr: PathBuf,
    /// Hand-written interface actor used instead of the synthesized one.
    #[arg(long)]
    pub infm: Option<PathBuf>,
    #[arg(long)]
    pub infm_capacity: Option<usize>,
    /// Output prefix; `<out>.aut` and its `<out>.aut.meta` sidecar are
    /// written.
    #[arg(long, default_value = "assumption")]
    pub out: PathBuf,
    /// Also write every intermediate LTS into `<out>.steps/`.
    #[arg(long)]
    pub trace_pipeline: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub component: PathBuf,
    #[arg(long)]
    pub open: PathBuf,
    #[arg(long)]
    pub info: PathBuf,
    /// Assumption written by `assume`; its sidecar is read alongside.
    #[arg(long, required_unless_present = "perr", conflicts_with = "perr")]
    pub assumption: Option<PathBuf>,
    /// Generate the assumption on the fly from this error automaton.
    #[arg(long)]
    pub perr: Option<PathBuf>,
    #[arg(long, requires = "perr")]
    pub infm: Option<PathBuf>,
}

type Failure = Box<dyn std::error::Error>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    parse_model(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_actor(path: &Path) -> Result<ActorDef, Failure> {
    let mut m = load_model(path)?;
    match m.actors.len() {
        1 => Ok(m.actors.remove(0)),
        n => Err(format!("{}: expected one actor, found {n}", path.display()).into()),
    }
}

fn load_perr(path: &Path) -> Result<ErrDfa, Failure> {
    parse_perr(&read(path)?).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_info(path: &Path, open: &Model, err: &mut dyn Write) -> Result<InfoSpec, Failure> {
    let parsed = parse_info(&read(path)?, open).map_err(|e| format!("{}: {e}", path.display()))?;
    for w in &parsed.warnings {
        writeln!(err, "warning: {}: {w}", path.display())?;
    }
    Ok(parsed.info)
}

fn with_ext(p: &Path, ext: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn state_cap(cli: &Cli) -> usize {
    cli.state_cap
        .map(|c| c as usize)
        .unwrap_or_else(default_state_cap)
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let cap = state_cap(cli);
    match &cli.command {
        Command::Parse { model } => cmd_parse(model, out, err),
        Command::Assume(a) => cmd_assume(a, cap, out, err),
        Command::Check(a) => cmd_check(a, cap, out, err),
        Command::Verify { model, perr } => {
            let m = load_model(model)?;
            let d = load_perr(perr)?;
            match verify_monolithic(&m, &d, cap)? {
                MonolithicVerdict::Holds => {
                    writeln!(out, "HOLDS")?;
                    Ok(0)
                }
                MonolithicVerdict::Violated(t) => {
                    writeln!(out, "VIOLATED")?;
                    for a in &t.0 {
                        writeln!(out, "  {a}")?;
                    }
                    Ok(1)
                }
            }
        }
        Command::Lts {
            model,
            out: path,
            dot,
            perr,
        } => {
            let m = load_model(model)?;
            let l = match perr {
                Some(p) => compose_property_lts(&m, &load_perr(p)?, cap)?.lts,
                None => explore(&m, cap)?.lts,
            };
            write_aut(&l, path)?;
            if let Some(d) = dot {
                write_dot(&l, d)?;
            }
            writeln!(
                out,
                "{} states, {} transitions",
                l.num_states(),
                l.num_transitions()
            )?;
            Ok(0)
        }
    }
}

fn cmd_parse(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let m = load_model(path)?;
    let external: BTreeSet<String> = m.external_targets().into_iter().collect();
    if let Err(diags) = check_wellformed_open(&m, &external) {
        for d in diags {
            writeln!(err, "{}: {d}", path.display())?;
        }
        return Ok(2);
    }
    if external.is_empty() {
        writeln!(out, "OK closed, {} actors", m.actors.len())?;
    } else {
        let names: Vec<_> = external.into_iter().collect();
        writeln!(
            out,
            "OK open, {} actors, missing {}",
            m.actors.len(),
            names.join(", ")
        )?;
    }
    Ok(0)
}

fn assume_run(
    open: &Model,
    info: &InfoSpec,
    perr: &Path,
    infm: Option<&Path>,
    config: &AssumeConfig,
) -> Result<AssumptionRun, Failure> {
    let d = load_perr(perr)?;
    let infm = infm.map(load_actor).transpose()?;
    Ok(generate_assumption(open, info, &d, infm.as_ref(), config)?)
}

fn cmd_assume(
    a: &AssumeArgs,
    cap: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let open = load_model(&a.open)?;
    let info = load_info(&a.info, &open, err)?;
    let config = AssumeConfig {
        state_cap: cap,
        infm_capacity: a.infm_capacity,
        trace_dir: a.trace_pipeline.then(|| with_ext(&a.out, ".steps")),
    };
    let run = assume_run(&open, &info, &a.perr, a.infm.as_deref(), &config)?;
    let s = &run.stats;
    writeln!(
        out,
        "property {} states, {} transitions (reduced {} / {})",
        s.property.0, s.property.1, s.property_reduced.0, s.property_reduced.1
    )?;
    match &run.outcome {
        AssumptionOutcome::AlwaysHolds => {
            writeln!(out, "ALWAYS_HOLDS")?;
            Ok(0)
        }
        AssumptionOutcome::NeverHolds => {
            writeln!(out, "NEVER_HOLDS")?;
            Ok(1)
        }
        AssumptionOutcome::Assumption(ta) => {
            let aut = with_ext(&a.out, ".aut");
            write_aut(ta, &aut)?;
            writeln!(
                out,
                "assumption {} states, {} transitions written to {}",
                ta.num_states(),
                ta.num_transitions(),
                aut.display()
            )?;
            Ok(0)
        }
    }
}

fn cmd_check(
    a: &CheckArgs,
    cap: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let open = load_model(&a.open)?;
    let info = load_info(&a.info, &open, err)?;
    let component = load_actor(&a.component)?;
    let outcome = match (&a.assumption, &a.perr) {
        (Some(p), _) => AssumptionOutcome::Assumption(read_aut(p)?),
        (None, Some(perr)) => {
            let config = AssumeConfig {
                state_cap: cap,
                ..Default::default()
            };
            assume_run(&open, &info, perr, a.infm.as_deref(), &config)?.outcome
        }
        (None, None) => return Err("either --assumption or --perr is required".into()),
    };
    match check_component(&component, &open, &info, &outcome, cap)? {
        ComponentVerdict::Accepted => {
            writeln!(out, "ACCEPTED")?;
            Ok(0)
        }
        ComponentVerdict::RejectedNonCompliant(v) => {
            writeln!(out, "REJECTED non-compliant")?;
            for x in v {
                writeln!(out, "  {x}")?;
            }
            Ok(1)
        }
        ComponentVerdict::RejectedTraceEscape(t) => {
            writeln!(out, "REJECTED counterexample {t}")?;
            Ok(1)
        }
    }
}
