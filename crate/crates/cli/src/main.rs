//! `reflax`: check, solve, simulate and build agents from `.rom` files.

mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use reflax::analysis::{self, Bound};
use reflax::cdt::{self, MultiAgentSpec};
use reflax::dsl::ToSource;
use reflax::game::{solve_via_game, NashConfig};
use reflax::machine::{MachineRegistry, OracleAssignment, QuerySet};
use reflax::poly;
use reflax::rational::{format_rational, to_f64};
use reflax::reflection::{solve_grid, ReflectionReport, SolveConfig};
use reflax::sample::Sampler;
use reflax::{exact_eval, Error};

use input::{load, CliError};
use output::{Manifest, Output};

#[derive(Parser)]
#[command(name = "reflax", version, about = "Reflective oracles for probabilistic oracle machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report closedness, the oracle-call bound and halting of a query set.
    Check {
        registry: PathBuf,
        queries: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Find an oracle assignment reflective on the query set.
    Solve {
        registry: PathBuf,
        queries: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build decision-theoretic agents for a world model or an agentgame.
    Agent {
        world: PathBuf,
        /// File with `utility` statements, if not in the world file.
        utilities: Option<PathBuf>,
        /// Also solve for a reflective oracle and report the agent's choice.
        #[arg(long)]
        solve: bool,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sample the queried machines under an assignment.
    Simulate {
        registry: PathBuf,
        queries: PathBuf,
        assignment: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Print the output-probability polynomial of every query.
    Poly {
        registry: PathBuf,
        queries: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Depth budget for exact evaluation.
    #[arg(long, default_value_t = reflax::DEFAULT_DEPTH_BUDGET)]
    depth: usize,
    /// Step budget for sampling.
    #[arg(long, default_value_t = reflax::DEFAULT_STEP_BUDGET)]
    steps: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Method::Game)]
    method: Method,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Game,
    Grid,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Game => "game",
            Method::Grid => "grid",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("REFLAX_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Check {
            registry,
            queries,
            common,
        } => cmd_check(vec![registry, queries], &common),
        Command::Solve {
            registry,
            queries,
            common,
            solver,
        } => cmd_solve(vec![registry, queries], &common, solver.method),
        Command::Agent {
            world,
            utilities,
            solve,
            common,
            solver,
        } => {
            let mut paths = vec![world];
            paths.extend(utilities);
            cmd_agent(paths, &common, solve, solver.method)
        }
        Command::Simulate {
            registry,
            queries,
            assignment,
            runs,
            common,
        } => cmd_simulate(vec![registry, queries, assignment], &common, runs),
        Command::Poly {
            registry,
            queries,
            common,
        } => cmd_poly(vec![registry, queries], &common),
    }
}

fn manifest(command: &str, paths: &[PathBuf], common: &Common, extra: Vec<(&str, Value)>) -> Manifest {
    let mut config = vec![
        ("eps", json!(common.eps)),
        ("seed", json!(common.seed)),
        ("depth", json!(common.depth)),
        ("steps", json!(common.steps)),
    ];
    config.extend(extra);
    Manifest::new(command, paths, config)
}

fn finish(out: Output, common: &Common, code: u8) -> Result<u8, CliError> {
    out.emit(common.format == Format::Json, common.out.as_deref())?;
    Ok(code)
}

fn precondition(e: Error) -> CliError {
    CliError::Precondition(e.to_string())
}

fn cmd_check(paths: Vec<PathBuf>, common: &Common) -> Result<u8, CliError> {
    let doc = load(&paths)?;
    let report = analysis::compute_bound(&doc.registry, &doc.queries).map_err(precondition)?;
    let mut out = Output::new(manifest("check", &paths, common, vec![]));
    for f in &report.findings {
        out.finding(f.to_string());
    }
    let summary = format!(
        "{}; {}; halting: {}",
        if report.closed { "closed" } else { "not closed" },
        match report.bound {
            Bound::Finite(b) => format!("B_R = {b}"),
            Bound::Unbounded => "unbounded".to_string(),
        },
        if report.halt_certified { "yes" } else { "no" }
    );
    out.line(&summary);
    out.report = json!({
        "closed": report.closed,
        "bound": report.bound_value(),
        "halting": report.halt_certified,
        "summary": summary,
    });
    finish(out, common, if report.is_ok() { 0 } else { 1 })
}

struct Solved {
    assignment: OracleAssignment,
    report: ReflectionReport,
    regret: Option<f64>,
}

fn solve(
    registry: &MachineRegistry,
    queries: &QuerySet,
    common: &Common,
    method: Method,
) -> Result<Solved, CliError> {
    match method {
        Method::Game => {
            let nash = NashConfig {
                seed: common.seed,
                ..NashConfig::default()
            };
            let sol = solve_via_game(registry, queries, common.eps, &nash).map_err(precondition)?;
            Ok(Solved {
                assignment: sol.assignment,
                report: sol.report,
                regret: Some(sol.equilibrium.max_regret()),
            })
        }
        Method::Grid => {
            let cfg = SolveConfig {
                epsilon: common.eps,
                ..SolveConfig::default()
            };
            let sol = solve_grid(registry, queries, &cfg).map_err(precondition)?;
            Ok(Solved {
                assignment: sol.assignment,
                report: sol.report,
                regret: None,
            })
        }
    }
}

fn report_json(report: &ReflectionReport) -> Value {
    json!({
        "pass": report.pass(),
        "queries": report.entries.iter().enumerate().map(|(i, e)| json!({
            "index": i + 1,
            "machine": e.query.machine,
            "threshold": format_rational(&e.query.threshold),
            "lo": to_f64(&e.interval.lo),
            "hi": to_f64(&e.interval.hi),
            "x": e.answer.to_f64(),
            "violation": to_f64(&e.violation),
            "verdict": if e.pass { "pass" } else { "fail" },
        })).collect::<Vec<_>>(),
    })
}

fn cmd_solve(paths: Vec<PathBuf>, common: &Common, method: Method) -> Result<u8, CliError> {
    let doc = load(&paths)?;
    let solved = solve(&doc.registry, &doc.queries, common, method)?;
    let mut out = Output::new(manifest(
        "solve",
        &paths,
        common,
        vec![("method", json!(method.name()))],
    ));
    out.set_assignment(&solved.assignment);
    out.comment_block(&solved.report.to_string());
    if let Some(r) = solved.regret {
        out.comment(&format!("equilibrium regret: {r:.3e}"));
    }
    out.report = report_json(&solved.report);
    finish(out, common, if solved.report.pass() { 0 } else { 1 })
}

fn cmd_poly(paths: Vec<PathBuf>, common: &Common) -> Result<u8, CliError> {
    let doc = load(&paths)?;
    let polys = poly::extract_all(&doc.registry, &doc.queries).map_err(precondition)?;
    let mut out = Output::new(manifest("poly", &paths, common, vec![]));
    let mut items = Vec::new();
    for (i, (q, p)) in doc.queries.iter().zip(&polys).enumerate() {
        out.line(&format!("P{} = {p}    # {q}", i + 1));
        items.push(json!({"index": i + 1, "query": q.to_string(), "polynomial": p.to_string()}));
    }
    out.report = json!({ "polynomials": items });
    finish(out, common, 0)
}

fn cmd_simulate(paths: Vec<PathBuf>, common: &Common, runs: u64) -> Result<u8, CliError> {
    let doc = load(&paths)?;
    let sampler = Sampler::new(&doc.registry, &doc.assignment).map_err(precondition)?;
    let mut out = Output::new(manifest(
        "simulate",
        &paths,
        common,
        vec![("runs", json!(runs))],
    ));
    out.set_assignment(&doc.assignment);
    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    for q in &doc.queries {
        if !seen.insert(q.machine.clone()) {
            continue;
        }
        let f = sampler
            .frequencies(&q.machine, runs, common.seed, common.steps)
            .map_err(precondition)?;
        let iv = exact_eval(&doc.registry, &q.machine, &doc.assignment, common.depth)
            .map_err(precondition)?;
        let (lo, hi) = (to_f64(&iv.lo), to_f64(&iv.hi));
        out.line(&format!(
            "{}: one={:.6} zero={:.6} other={:.6} timeout={:.6} exact=[{lo:.6}, {hi:.6}]",
            q.machine,
            f.fraction(f.one),
            f.fraction(f.zero),
            f.fraction(f.other),
            f.fraction(f.timeout),
        ));
        rows.push(json!({
            "machine": q.machine,
            "runs": f.runs,
            "one": f.fraction(f.one),
            "zero": f.fraction(f.zero),
            "other": f.fraction(f.other),
            "timeout": f.fraction(f.timeout),
            "lo": lo,
            "hi": hi,
        }));
    }
    out.report = json!({ "machines": rows });
    finish(out, common, 0)
}

fn new_machines(before: &MachineRegistry, after: &MachineRegistry) -> MachineRegistry {
    let mut fresh = MachineRegistry::new();
    for (name, body) in after.iter() {
        if !before.contains(name) {
            fresh.set(name, body.clone());
        }
    }
    fresh
}

fn cmd_agent(paths: Vec<PathBuf>, common: &Common, do_solve: bool, method: Method) -> Result<u8, CliError> {
    let doc = load(&paths)?;
    let mut out = Output::new(manifest(
        "agent",
        &paths,
        common,
        vec![("method", json!(method.name())), ("solve", json!(do_solve))],
    ));
    let mut registry = doc.registry.clone();
    if !doc.agent_games.is_empty() {
        let systems = doc
            .agent_games
            .iter()
            .map(|spec| cdt::build_multi_agent(&mut registry, spec))
            .collect::<reflax::Result<Vec<_>>>()
            .map_err(precondition)?;
        out.machines(&new_machines(&doc.registry, &registry).to_source());
        let mut code = 0;
        let mut games = Vec::new();
        for (spec, sys) in doc.agent_games.iter().zip(&systems) {
            let (c, g) = agent_game_report(&mut out, &registry, spec, sys, common, do_solve, method)?;
            code = code.max(c);
            games.push(g);
        }
        out.report = json!({ "agentgames": games });
        return finish(out, common, code);
    }
    let world = doc
        .world
        .as_ref()
        .ok_or_else(|| CliError::Precondition("no `world` statement or `agentgame` block".into()))?;
    let agent = cdt::build_cdt_agent(&mut registry, world, &doc.utilities, "agent").map_err(precondition)?;
    out.machines(&new_machines(&doc.registry, &registry).to_source());
    out.report = json!({ "agent": agent.name, "stages": agent.stages });
    if !do_solve {
        return finish(out, common, 0);
    }
    let solved = solve(&registry, &agent.queries, common, method)?;
    out.set_assignment(&solved.assignment);
    out.comment_block(&solved.report.to_string());
    let opt = cdt::verify_optimality(
        &registry,
        world,
        &doc.utilities,
        &agent,
        &solved.assignment,
        0.0,
        common.eps,
    )
    .map_err(precondition)?;
    let mut actions = Vec::new();
    for (a, (u, p)) in opt.utilities.iter().zip(&opt.action_probs).enumerate() {
        out.line(&format!(
            "action {a}: expected utility {:.6}, probability {:.6}",
            to_f64(u),
            to_f64(p)
        ));
        actions.push(json!({"action": a, "utility": to_f64(u), "probability": to_f64(p)}));
    }
    if opt.tie {
        out.line("tie: any answer reflective");
    } else {
        out.line(&format!(
            "action {} with probability {:.6}",
            opt.best,
            to_f64(&opt.action_probs[opt.best])
        ));
    }
    out.report = json!({
        "agent": agent.name,
        "stages": agent.stages,
        "reflection": report_json(&solved.report),
        "actions": actions,
        "best": opt.best,
        "tie": opt.tie,
        "optimal": opt.pass,
    });
    let ok = solved.report.pass() && opt.pass;
    finish(out, common, if ok { 0 } else { 1 })
}

fn agent_game_report(
    out: &mut Output,
    registry: &MachineRegistry,
    spec: &MultiAgentSpec,
    sys: &cdt::MultiAgentSystem,
    common: &Common,
    do_solve: bool,
    method: Method,
) -> Result<(u8, Value), CliError> {
    if !do_solve {
        return Ok((0, json!({ "name": spec.name, "agents": sys.agents })));
    }
    let solved = solve(registry, &sys.queries, common, method)?;
    out.set_assignment(&solved.assignment);
    out.comment_block(&solved.report.to_string());
    let s = solved.assignment.float_probs();
    let game = cdt::induced_game(registry, spec).map_err(precondition)?;
    let regrets = game.best_response_regret(&reflax::game::MixedProfile(s.clone()));
    let mut agents = Vec::new();
    for (i, x) in s.iter().enumerate() {
        out.line(&format!(
            "{} agent {}: action 1 with probability {x:.6}, regret {:.3e}",
            spec.name,
            i + 1,
            regrets[i]
        ));
        agents.push(json!({"agent": i + 1, "p_action_1": x, "regret": regrets[i]}));
    }
    let code = if solved.report.pass() { 0 } else { 1 };
    Ok((
        code,
        json!({
            "name": spec.name,
            "reflection": report_json(&solved.report),
            "agents": agents,
        }),
    ))
}
