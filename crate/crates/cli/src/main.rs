use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use porthos::cat::{builtin_model, builtin_source, parse_cat, MemoryModel, BUILTIN_IDS};
use porthos::check::{check_highlevel, check_portability, check_state_refinement, HighLevelVerdict, StateVerdict, Verdict};
use porthos::encode::{encode_portability, encode_reachability_pred, Options, State, StateScope};
use porthos::events::{EventGraph, EventKind};
use porthos::gen::{gen_forall, gen_state, sb_seed, state_seed, Layout, Psi};
use porthos::oracle::{enumerate_executions, is_consistent, portable_bruteforce, OracleError, DEFAULT_LIMIT};
use porthos::prog::{parse_pred, parse_program, Program};
use porthos::solve::{emit_smt, solve, SolverConfig, Status};
use porthos::witness::{reach_state, to_dot, to_json, ExecutionWitness};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

const PORTABLE: u8 = 0;
const NOT_PORTABLE: u8 = 1;
const ERROR: u8 = 2;
const UNKNOWN: u8 = 3;

/// Bounded portability checking of concurrent programs across memory models.
#[derive(Parser)]
#[command(name = "porthos", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether every target-consistent execution is source-consistent.
    Check(CheckArgs),
    /// Decide whether some consistent execution reaches a final state.
    Reach(ReachArgs),
    /// Enumerate executions exhaustively.
    Oracle(OracleArgs),
    /// Emit reduction programs as `.lit` text.
    #[command(subcommand)]
    Gen(GenCmd),
    /// List or print the builtin memory models.
    #[command(subcommand)]
    Models(ModelsCmd),
    /// Portability of a high-level program across two labelled compilations.
    CheckHl(CheckHlArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Solver command; `{file}` is replaced by the query path.
    #[arg(long, env = "PORTHOS_SOLVER", default_value = porthos::solve::DEFAULT_TEMPLATE)]
    solver: String,
    /// Solver timeout in seconds.
    #[arg(long, default_value_t = 600)]
    timeout: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { template: self.solver.clone(), timeout: Duration::from_secs(self.timeout) }
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Program in `.lit` syntax.
    #[arg(short, long)]
    program: PathBuf,
    /// Source model: builtin id or `.cat` path.
    #[arg(short, long)]
    source: String,
    /// Target model: builtin id or `.cat` path.
    #[arg(short, long)]
    target: String,
    /// Loop unrolling bound.
    #[arg(short = 'k', long, default_value_t = 1)]
    unroll: usize,
    /// Restrict the search to dead executions.
    #[arg(long)]
    dead: bool,
    /// Like `--dead`, but reads of initial values do not count as justified.
    #[arg(long)]
    dead_strict: bool,
    /// Refine a bug into a state-level verdict.
    #[arg(long)]
    state: bool,
    /// Compare final states over locations only.
    #[arg(long, requires = "state")]
    locations_only: bool,
    /// Maximum number of reachability queries for `--state`.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Write the portability query to this file instead of solving.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    /// Write the witness as Graphviz.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the witness as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Cross-check the verdict by exhaustive enumeration.
    #[arg(long)]
    oracle: bool,
    /// Event limit for `--oracle`.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    oracle_limit: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ReachArgs {
    #[arg(short, long)]
    program: PathBuf,
    /// Memory model: builtin id or `.cat` path.
    #[arg(short, long)]
    model: String,
    /// Final-state predicate, e.g. `x=1 /\ t0:r0=0`.
    #[arg(long = "assert")]
    predicate: String,
    #[arg(short = 'k', long, default_value_t = 1)]
    unroll: usize,
    /// Write the query to this file instead of solving.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(short, long)]
    program: PathBuf,
    /// Keep only executions consistent with this model.
    #[arg(short, long)]
    model: Option<String>,
    /// Print the distinct final states instead of the executions.
    #[arg(long)]
    states: bool,
    /// Compare final states over locations only.
    #[arg(long)]
    locations_only: bool,
    #[arg(short = 'k', long, default_value_t = 1)]
    unroll: usize,
    /// Maximum number of non-initial events.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Interleaved,
    Grouped,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Portable iff the formula is a tautology.
    Forall {
        /// Boolean formula, e.g. `x1 | !x2`.
        #[arg(long)]
        psi: String,
        /// Non-portable seed program (default: store buffering).
        #[arg(long)]
        np: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "interleaved")]
        layout: LayoutArg,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// State-portable iff `∀x ∃y: psi` holds; `y*` variables are existential.
    State {
        #[arg(long)]
        psi: String,
        /// Non-portable seed program (default: built-in SC/TSO seed).
        #[arg(long)]
        np: Option<PathBuf>,
        /// Seed location that only the target model sets to 1.
        #[arg(long, default_value = "z")]
        flag: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelsCmd {
    List,
    Print { id: String },
}

#[derive(Args)]
struct CheckHlArgs {
    /// High-level program with `@hl` labels (or instruction ids) as origins.
    #[arg(long)]
    high: PathBuf,
    /// Compilation for the source architecture.
    #[arg(long)]
    source_program: PathBuf,
    /// Compilation for the target architecture.
    #[arg(long)]
    target_program: PathBuf,
    #[arg(short, long)]
    source: String,
    #[arg(short, long)]
    target: String,
    #[arg(short = 'k', long, default_value_t = 1)]
    unroll: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_program(path: &Path, unroll: usize) -> Result<Program> {
    let p = parse_program(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    if unroll == 0 {
        bail!("unroll bound must be positive");
    }
    Ok(p.unroll(unroll))
}

fn load_graph(path: &Path, unroll: usize) -> Result<EventGraph> {
    let p = load_program(path, unroll)?;
    EventGraph::compile(&p).with_context(|| format!("in {}", path.display()))
}

fn load_model(spec: &str) -> Result<MemoryModel> {
    if BUILTIN_IDS.contains(&spec) {
        return Ok(builtin_model(spec)?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!("`{spec}` is neither a builtin model ({}) nor a readable file", BUILTIN_IDS.join(", "));
    }
    parse_cat(&read(path)?).with_context(|| format!("in {spec}"))
}

fn format_state(s: &State) -> String {
    s.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn write_witness(args: &CheckArgs, w: &ExecutionWitness, g: &EventGraph, verdict: &str) -> Result<()> {
    if let Some(p) = &args.dot {
        write(p, &to_dot(w, g))?;
    }
    if let Some(p) = &args.json {
        write(p, &to_json(w, g, &args.source, &args.target, verdict))?;
    }
    Ok(())
}

fn report_witness(w: &ExecutionWitness, g: &EventGraph) {
    if !w.violated.is_empty() {
        println!("violated source axioms: {}", w.violated.join(", "));
    }
    println!("final state: {}", format_state(&reach_state(w, g)));
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    let g = load_graph(&args.program, args.unroll)?;
    let (src, tgt) = (load_model(&args.source)?, load_model(&args.target)?);
    let opts = Options { dead: args.dead || args.dead_strict, dead_strict: args.dead_strict };
    let cfg = args.solver.config();
    if let Some(path) = &args.emit_smt {
        write(path, &emit_smt(&encode_portability(&g, &src, &tgt, &opts).formula))?;
        println!("wrote {}", path.display());
        return Ok(PORTABLE);
    }
    if args.state {
        let scope = if args.locations_only { StateScope::Locations } else { StateScope::Full };
        let r = check_state_refinement(&g, &src, &tgt, &opts, &cfg, scope, args.budget)?;
        println!("verdict: {}", r.verdict.name());
        println!("reachability queries: {}", r.queries);
        return Ok(match &r.verdict {
            StateVerdict::Portable => PORTABLE,
            StateVerdict::StateReachable { witness, state } => {
                println!("source-reachable state: {}", format_state(state));
                write_witness(args, witness, &g, r.verdict.name())?;
                PORTABLE
            }
            StateVerdict::NewState { witness, state } => {
                println!("new state: {}", format_state(state));
                write_witness(args, witness, &g, r.verdict.name())?;
                NOT_PORTABLE
            }
            StateVerdict::Unknown(why) => {
                println!("reason: {why}");
                UNKNOWN
            }
        });
    }
    let (v, stats) = check_portability(&g, &src, &tgt, &opts, &cfg)?;
    println!("verdict: {}", v.name());
    println!("variables: {}, assertions: {}, solver time: {:.3}s", stats.vars, stats.assertions, stats.solver_time.as_secs_f64());
    let code = match &v {
        Verdict::Portable => PORTABLE,
        Verdict::NotPortable(w) => {
            report_witness(w, &g);
            write_witness(args, w, &g, v.name())?;
            NOT_PORTABLE
        }
        Verdict::Unknown(why) => {
            println!("reason: {why}");
            UNKNOWN
        }
    };
    if args.oracle && code != UNKNOWN && !args.dead {
        match portable_bruteforce(&g, &src, &tgt, args.oracle_limit) {
            Ok(found) => {
                let agrees = found.is_some() == (code == NOT_PORTABLE);
                println!("oracle: {}", if found.is_some() { "NotPortable" } else { "Portable" });
                if !agrees {
                    eprintln!("error: oracle disagrees with the solver verdict");
                    return Ok(ERROR);
                }
            }
            Err(e @ OracleError::LimitExceeded { .. }) => eprintln!("oracle skipped: {e}"),
        }
    }
    Ok(code)
}

fn cmd_reach(args: &ReachArgs) -> Result<u8> {
    let g = load_graph(&args.program, args.unroll)?;
    let m = load_model(&args.model)?;
    let pred = parse_pred(&args.predicate).context("in --assert")?;
    let e = encode_reachability_pred(&g, &m, &pred).map_err(anyhow::Error::msg)?;
    if let Some(path) = &args.emit_smt {
        write(path, &emit_smt(&e.formula))?;
        println!("wrote {}", path.display());
        return Ok(0);
    }
    let r = solve(&e.formula, &args.solver.config())?;
    Ok(match r.status {
        Status::Sat => {
            println!("reachable");
            0
        }
        Status::Unsat => {
            println!("unreachable");
            1
        }
        Status::Unknown => {
            println!("unknown");
            UNKNOWN
        }
    })
}

fn cmd_oracle(args: &OracleArgs) -> Result<u8> {
    let g = load_graph(&args.program, args.unroll)?;
    let m = args.model.as_deref().map(load_model).transpose()?;
    let all = enumerate_executions(&g, args.limit)?;
    let kept: Vec<&ExecutionWitness> = all.iter().filter(|w| m.as_ref().is_none_or(|m| is_consistent(w, &g, m))).collect();
    println!("executions: {}", all.len());
    if m.is_some() {
        println!("consistent: {}", kept.len());
    }
    let scope = if args.locations_only { StateScope::Locations } else { StateScope::Full };
    if args.states {
        let states: BTreeSet<State> = kept.iter().map(|w| scope.project(reach_state(w, &g))).collect();
        println!("states: {}", states.len());
        for s in &states {
            println!("  {}", format_state(s));
        }
    } else {
        for (i, w) in kept.iter().enumerate() {
            let rf: Vec<String> = w.rf.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            let co: Vec<String> = w.co.iter().filter(|(a, _)| g.events[*a].kind != EventKind::Init).map(|(a, b)| format!("{a}->{b}")).collect();
            println!("#{i}: rf [{}] co [{}] | {}", rf.join(" "), co.join(" "), format_state(&scope.project(reach_state(w, &g))));
        }
    }
    Ok(0)
}

fn emit(text: String, output: &Option<PathBuf>) -> Result<u8> {
    match output {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_gen(cmd: &GenCmd) -> Result<u8> {
    match cmd {
        GenCmd::Forall { psi, np, layout, output } => {
            let psi = Psi::parse(psi).context("in --psi")?;
            let seed = match np {
                Some(p) => load_program(p, 1)?,
                None => sb_seed(),
            };
            let layout = match layout {
                LayoutArg::Interleaved => Layout::Interleaved,
                LayoutArg::Grouped => Layout::Grouped,
            };
            emit(gen_forall(&psi, &seed, layout).to_string(), output)
        }
        GenCmd::State { psi, np, flag, output } => {
            let psi = Psi::parse(psi).context("in --psi")?;
            let seed = match np {
                Some(p) => load_program(p, 1)?,
                None => state_seed(),
            };
            if !seed.locations().contains(flag) {
                bail!("seed program has no location `{flag}`");
            }
            emit(gen_state(&psi, &seed, flag).to_string(), output)
        }
    }
}

fn cmd_models(cmd: &ModelsCmd) -> Result<u8> {
    match cmd {
        ModelsCmd::List => {
            for id in BUILTIN_IDS {
                println!("{id}");
            }
        }
        ModelsCmd::Print { id } => match builtin_source(id) {
            Some(src) => print!("{src}"),
            None => bail!("unknown model `{id}`; builtins are {}", BUILTIN_IDS.join(", ")),
        },
    }
    Ok(0)
}

fn cmd_check_hl(args: &CheckHlArgs) -> Result<u8> {
    let high = parse_program(&read(&args.high)?).with_context(|| format!("in {}", args.high.display()))?;
    let s = load_graph(&args.source_program, args.unroll)?;
    let t = load_graph(&args.target_program, args.unroll)?;
    let (src, tgt) = (load_model(&args.source)?, load_model(&args.target)?);
    let (v, _) = check_highlevel(&high, &s, &t, &src, &tgt, &args.solver.config())?;
    println!("verdict: {}", v.name());
    Ok(match &v {
        HighLevelVerdict::Portable => PORTABLE,
        HighLevelVerdict::NotPortable { source, target } => {
            println!("target final state: {}", format_state(&reach_state(target, &t)));
            println!("source final state: {}", format_state(&reach_state(source, &s)));
            NOT_PORTABLE
        }
        HighLevelVerdict::Unknown(why) => {
            println!("reason: {why}");
            UNKNOWN
        }
    })
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Reach(a) => cmd_reach(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Gen(c) => cmd_gen(c),
        Cmd::Models(c) => cmd_models(c),
        Cmd::CheckHl(a) => cmd_check_hl(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ERROR)
        }
    }
}
