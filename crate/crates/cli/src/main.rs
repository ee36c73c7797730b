//! `prmc`: check formulas, learn disappearance relations and inspect models.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use prmc_core::automata::{limits, to_dot, write_automaton, Limits, Nfa};
use prmc_core::catalog;
use prmc_core::disappearance::Budget;
use prmc_core::kripke::{check_s5, parse_model, state_space, Kripke};
use prmc_core::script::{parse_script, Command, CommandKind, Outcome, Session};
use prmc_core::semantics::Options;
use prmc_core::Error;

#[derive(Parser)]
#[command(name = "prmc", version, about = "Model checker for parameterized public announcement logic")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check formulas for validity; exit 1 if one fails.
    Check(Run),
    /// Learn the disappearance relation of announcing a formula repeatedly.
    Learn(Run),
    /// Print the S5 report and dump the model and its state spaces.
    Inspect(Run),
    /// List the bundled models and scripts.
    Models,
}

#[derive(Args)]
struct Run {
    /// Model file, or the name of a bundled model.
    model: String,
    /// Formula to check or learn; repeatable.
    #[arg(short = 'f', long = "formula")]
    formulas: Vec<String>,
    /// Script of announce/check/learn lines, or a bundled script name.
    #[arg(long)]
    script: Option<String>,
    /// Directory for counterexample and relation automata.
    #[arg(short = 'o', long, default_value = ".")]
    out: PathBuf,
    /// Directory receiving DOT renderings of intermediate automata.
    #[arg(long)]
    dot_out: Option<PathBuf>,
    /// File receiving the evaluation and learning transcript.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Largest automaton any operation may build.
    #[arg(long, default_value_t = Limits::default().max_states, value_parser = positive)]
    max_states: usize,
    /// Most words an explicit enumeration may produce.
    #[arg(long, default_value_t = Limits::default().max_enum, value_parser = positive)]
    max_enum: usize,
    /// Maximum number of equivalence queries.
    #[arg(long, default_value_t = Budget::default().max_eq, value_parser = positive)]
    eq_budget: usize,
    /// Variables to place first in the track order, e.g. `i,j`.
    #[arg(long, value_delimiter = ',')]
    var_order: Vec<String>,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// Exit status and the reason for it.
enum Failure {
    Property,
    Input(String),
    Resource(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity(_) | Error::Diverged(_) => Failure::Resource(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn read_source(arg: &str, bundled: fn(&str) -> Option<&'static catalog::Entry>) -> Result<String, Failure> {
    let p = Path::new(arg);
    if p.exists() {
        return fs::read_to_string(p).map_err(|e| io_err(p, e));
    }
    match bundled(arg) {
        Some(e) => Ok(e.text.to_string()),
        None => Err(Failure::Input(format!("{arg}: no such file or bundled entry"))),
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn save(dir: &Path, dot: Option<&Path>, name: &str, a: &Nfa) -> Result<PathBuf, Failure> {
    let path = dir.join(format!("{name}.aut"));
    write(&path, &write_automaton(a))?;
    if let Some(d) = dot {
        write(&d.join(format!("{name}.dot")), &to_dot(a, name))?;
    }
    Ok(path)
}

struct Ctx {
    run: Run,
    session: Session,
    transcript: Vec<String>,
}

impl Ctx {
    fn new(run: Run) -> Result<Self, Failure> {
        limits::set(Limits {
            max_states: run.max_states,
            max_enum: run.max_enum,
        });
        let model = parse_model(&read_source(&run.model, catalog::model_entry)?)?;
        let opts = Options {
            var_order: run.var_order.clone(),
            dot_dir: run.dot_out.clone(),
            budget: Budget {
                max_eq: run.eq_budget,
                ..Budget::default()
            },
        };
        Ok(Ctx {
            session: Session::new(model, opts),
            run,
            transcript: vec![],
        })
    }

    fn commands(&self, kind: CommandKind) -> Result<Vec<Command>, Failure> {
        let mut cmds = match &self.run.script {
            Some(s) => parse_script(&read_source(s, catalog::script_entry)?)?,
            None => vec![],
        };
        cmds.extend(self.run.formulas.iter().map(|f| Command {
            kind,
            formula: f.clone(),
            line: 0,
        }));
        Ok(cmds)
    }

    fn model(&self) -> &Kripke {
        self.session.model()
    }

    fn finish(&mut self) -> Result<(), Failure> {
        if let Some(path) = self.run.transcript.clone() {
            let mut text = String::new();
            for line in self.session.evaluator().transcript().iter().chain(&self.transcript) {
                let _ = writeln!(text, "{line}");
            }
            write(&path, &text)?;
        }
        Ok(())
    }
}

fn announce(ctx: &mut Ctx, cmd: &Command, step: &mut usize) -> Result<(), Failure> {
    let t = Instant::now();
    match ctx.session.run(cmd)? {
        Outcome::Announced { states } => {
            *step += 1;
            println!(
                "announce {}\n  state space: {} states ({:.2?})",
                cmd.formula,
                states.num_states(),
                t.elapsed()
            );
            if let Some(dot) = ctx.run.dot_out.clone() {
                save(&dot, None, &format!("states-{step}"), &states)?;
                write(&dot.join(format!("states-{step}.dot")), &to_dot(&states, &format!("states-{step}")))?;
            }
            Ok(())
        }
        _ => unreachable!(),
    }
}

fn check(run: Run) -> Result<(), Failure> {
    let mut ctx = Ctx::new(run)?;
    let mut failed = false;
    let (mut step, mut n) = (0, 0);
    for cmd in ctx.commands(CommandKind::Check)? {
        match cmd.kind {
            CommandKind::Announce => announce(&mut ctx, &cmd, &mut step)?,
            CommandKind::Learn => {}
            CommandKind::Check => {
                n += 1;
                let t = Instant::now();
                let outcome = ctx.session.run(&cmd);
                let elapsed = t.elapsed();
                let v = match outcome {
                    Ok(Outcome::Checked(v)) => v,
                    Ok(_) => unreachable!(),
                    Err(e) => {
                        ctx.finish()?;
                        return Err(e.into());
                    }
                };
                let peak = ctx.session.evaluator().stats().peak_states;
                println!("check {}", cmd.formula);
                match &v.witness {
                    None => println!("  VALID ({elapsed:.2?}, peak {peak} states)"),
                    Some(w) => {
                        failed = true;
                        let path = save(&ctx.run.out, ctx.run.dot_out.as_deref(), &format!("counterexample-{n}"), &v.counterexamples)?;
                        println!(
                            "  INVALID ({elapsed:.2?}, peak {peak} states)\n  witness: {}\n  counterexamples: {}",
                            ctx.model().state_layout().format_word(w),
                            path.display()
                        );
                    }
                }
            }
        }
    }
    if n == 0 {
        return Err(Failure::Input("nothing to check; give -f or a script with check lines".into()));
    }
    ctx.finish()?;
    if failed {
        Err(Failure::Property)
    } else {
        Ok(())
    }
}

fn learn(run: Run) -> Result<(), Failure> {
    let mut ctx = Ctx::new(run)?;
    let (mut step, mut n) = (0, 0);
    for cmd in ctx.commands(CommandKind::Learn)? {
        match cmd.kind {
            CommandKind::Announce => announce(&mut ctx, &cmd, &mut step)?,
            CommandKind::Check => {}
            CommandKind::Learn => {
                n += 1;
                println!("learn {}", cmd.formula);
                let t = Instant::now();
                match ctx.session.run(&cmd) {
                    Ok(Outcome::Learned(r)) => {
                        let path = save(&ctx.run.out, ctx.run.dot_out.as_deref(), &format!("relation-{n}"), &r.relation)?;
                        println!(
                            "  learned {} states ({:.2?}): {} equivalence, {} membership queries, hypotheses {:?}\n  relation: {}",
                            r.num_states(),
                            t.elapsed(),
                            r.eq_queries,
                            r.mq_queries,
                            r.hypotheses,
                            path.display()
                        );
                        ctx.transcript.extend(r.transcript.iter().cloned());
                    }
                    Ok(_) => unreachable!(),
                    Err(Error::Diverged(d)) => {
                        println!("  DIVERGED ({:.2?}): {d}", t.elapsed());
                        if let Some(h) = &d.last_hypothesis {
                            let path = save(&ctx.run.out, ctx.run.dot_out.as_deref(), &format!("hypothesis-{n}"), h)?;
                            println!("  last hypothesis: {}", path.display());
                        }
                        ctx.transcript.extend(d.transcript.iter().cloned());
                        ctx.finish()?;
                        return Err(Failure::Resource(d.reason.clone()));
                    }
                    Err(e) => {
                        ctx.finish()?;
                        return Err(e.into());
                    }
                }
            }
        }
    }
    if n == 0 {
        return Err(Failure::Input("nothing to learn; give -f or a script with learn lines".into()));
    }
    ctx.finish()
}

fn inspect(run: Run) -> Result<(), Failure> {
    let mut ctx = Ctx::new(run)?;
    let m = ctx.model().clone();
    let sig = m.signature();
    println!("alphabet: {}", m.sigma().syms.join(" "));
    println!("props: {}", sig.props.join(" "));
    if !sig.agents.is_empty() {
        let a: Vec<String> = sig.agents.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("agents: {}", a.join(" "));
    }
    println!(
        "transducer: {} states, {} transitions",
        m.trans().num_states(),
        m.trans().num_transitions()
    );
    println!("{}", check_s5(&m)?);
    let states = state_space(&m)?;
    if prmc_core::automata::is_empty(&states) {
        println!("state space is empty");
    } else {
        println!("state space: {} states", states.num_states());
    }
    if let Some(dot) = ctx.run.dot_out.clone() {
        write(&dot.join("model.dot"), &to_dot(m.trans(), "model"))?;
        write(&dot.join("states-0.dot"), &to_dot(&states, "states-0"))?;
        save(&dot, None, "states-0", &states)?;
    }
    let mut step = 0;
    for cmd in ctx.commands(CommandKind::Announce)? {
        if cmd.kind == CommandKind::Announce {
            announce(&mut ctx, &cmd, &mut step)?;
        }
    }
    ctx.finish()
}

fn list() {
    println!("models:");
    for e in catalog::MODELS {
        println!("  {:<18} {:<20} {}", e.name, e.file, e.about);
    }
    println!("scripts:");
    for e in catalog::SCRIPTS {
        println!("  {:<18} {:<26} {}", e.name, e.file, e.about);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Check(r) => check(r),
        Cmd::Learn(r) => learn(r),
        Cmd::Inspect(r) => inspect(r),
        Cmd::Models => {
            list();
            Ok(())
        }
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Property) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
