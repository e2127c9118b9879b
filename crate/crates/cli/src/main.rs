//! `barygap`: JSON-in, JSON-out front end to the barygap-core library.
//!
//! Exit codes: 0 success, 1 failed property or disagreeing decision, 2 usage
//! or input error, 3 resource cap exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use barygap_core::bary::{bary_value_mot, borgwardt_2approx, extract_barycenter, uniformize, BaryInstance, DEFAULT_LP_CAP};
use barygap_core::chub::{solve_chub_with, ChubOptions};
use barygap_core::embed::{embed, PointConfig};
use barygap_core::graph::{circulant_with_degree, complete, cycle, petersen, random_regular, Graph, DEFAULT_ENUM_CAP};
use barygap_core::qexp::parse_q;
use barygap_core::reduction::{run_reduction, Solver, DEFAULT_REDUCTION_CAP};
use barygap_core::verify::{verify_lemma, DEFAULT_BUDGET};
use barygap_core::Error;

#[derive(Parser, Debug)]
#[command(name = "barygap", version, about = "Generalized Wasserstein barycenters and clique-gadget reductions")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for enumerations (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Suppress the plain-text summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print the JSON result on stdout even when `--out` is given.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Graph generators.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Embed a regular graph as a point configuration (embedding chosen by q).
    Embed(EmbedArgs),
    /// Minimum hub value over all tuples of a point configuration.
    Chub(ChubArgs),
    /// Barycenter solvers and transformations.
    Bary {
        #[command(subcommand)]
        command: BaryCommand,
    },
    /// Decide k-clique through the barycenter reduction.
    Reduce(ReduceArgs),
    /// Run a lemma property suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Debug)]
enum GraphCommand {
    /// Generate a graph from a named family.
    Gen(GenArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Family {
    Complete,
    Cycle,
    Circulant,
    Petersen,
    RandomRegular,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Vertex count (ignored for petersen).
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Degree for circulant and random-regular.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    /// A number or `inf`.
    #[arg(long, value_parser = parse_q)]
    q: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ChubArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Source graph; enables solving once per induced edge pattern.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Keep the per-tuple value table in the output.
    #[arg(long)]
    table: bool,
    #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
    cap: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BaryCommand {
    /// Barycenter value of an instance.
    Solve(SolveArgs),
    /// Replace every measure by a nearby uniform measure.
    Uniformize(UniformizeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BaryMethod {
    Mot,
    Borgwardt,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = BaryMethod::Mot)]
    method: BaryMethod,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UniformizeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolverArg {
    Chub,
    Mot,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, value_parser = parse_q)]
    q: f64,
    #[arg(long, value_enum, default_value_t = SolverArg::Chub)]
    solver: SolverArg,
    /// Solver tolerance; defaults to a twentieth of the certified gap.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_REDUCTION_CAP)]
    cap: u128,
    #[arg(long, alias = "out")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    lemma: String,
    /// Random cases per property.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    #[arg(long, alias = "out")]
    report: Option<PathBuf>,
}

/// What a command produced: its JSON, a one-line summary and whether it passed.
struct Output {
    json: serde_json::Value,
    summary: String,
    passed: bool,
    out: Option<PathBuf>,
}

fn output(value: &impl Serialize, summary: String, passed: bool, out: Option<PathBuf>) -> Result<Output, Error> {
    Ok(Output {
        json: serde_json::to_value(value)?,
        summary,
        passed,
        out,
    })
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<Graph, Error> {
    Graph::from_json(&read(path)?)
}

fn graph_gen(args: GenArgs, seed: u64) -> Result<Output, Error> {
    let need_degree = || args.degree.ok_or_else(|| Error::Input("--degree is required for this family".into()));
    let g = match args.family {
        Family::Complete => complete(args.n),
        Family::Cycle => cycle(args.n)?,
        Family::Circulant => circulant_with_degree(args.n, need_degree()?)?,
        Family::Petersen => petersen(),
        Family::RandomRegular => random_regular(args.n, need_degree()?, seed)?,
    };
    let summary = format!("graph: n={} edges={} degree={:?}", g.n(), g.edge_count(), g.regular_degree());
    output(&g, summary, true, args.out)
}

fn embed_cmd(args: EmbedArgs) -> Result<Output, Error> {
    let g = read_graph(&args.graph)?;
    let cfg = embed(&g, args.k, args.p, args.q)?;
    let summary = format!("embedding: k={} n={} d={} regime={:?}", cfg.k, cfg.n, cfg.d, cfg.regime);
    output(&cfg, summary, true, args.out)
}

fn chub_cmd(args: ChubArgs) -> Result<Output, Error> {
    let cfg = PointConfig::from_json(&read(&args.points)?)?;
    let opts = ChubOptions {
        cap: args.cap,
        keep_table: args.table,
        graph: args.graph.as_deref().map(read_graph).transpose()?,
        symmetric: true,
    };
    let res = solve_chub_with(&cfg, args.tol, &opts)?;
    let summary = format!("chub: value={} lower={} argmin={:?} method={:?}", res.value, res.lower_bound, res.argmin, res.method);
    output(&res, summary, true, args.out)
}

fn bary_solve(args: SolveArgs) -> Result<Output, Error> {
    let inst = BaryInstance::from_json(&read(&args.instance)?)?;
    match args.method {
        BaryMethod::Mot => {
            let res = bary_value_mot(&inst, args.tol)?;
            let nu = extract_barycenter(&res.plan, &inst, args.tol)?;
            let summary = format!("mot: value={} lower={} support={}", res.value, res.lower_bound, nu.len());
            let value = json!({
                "value": res.value,
                "lower_bound": res.lower_bound,
                "method": res.method,
                "plan": res.plan,
                "barycenter": nu,
                "marginal_violation": res.plan.marginal_violation(&inst),
            });
            output(&value, summary, true, args.out)
        }
        BaryMethod::Borgwardt => {
            let res = borgwardt_2approx(&inst, DEFAULT_LP_CAP)?;
            let summary = format!("borgwardt: value={} support={}", res.value, res.nu.len());
            output(&res, summary, true, args.out)
        }
    }
}

fn bary_uniformize(args: UniformizeArgs) -> Result<Output, Error> {
    let inst = BaryInstance::from_json(&read(&args.instance)?)?;
    let out = uniformize(&inst, args.eps)?;
    let atoms: Vec<usize> = out.measures.iter().map(|m| m.len()).collect();
    output(&out, format!("uniformized: atoms per measure {atoms:?}"), true, args.out)
}

fn reduce_cmd(args: ReduceArgs) -> Result<Output, Error> {
    let g = read_graph(&args.graph)?;
    let solver = match args.solver {
        SolverArg::Chub => Solver::ChubBruteforce,
        SolverArg::Mot => Solver::BaryMot,
    };
    let report = run_reduction(&g, args.k, args.p, args.q, solver, args.tol, args.cap)?;
    let summary = format!(
        "reduce: has_clique={} oracle={} agrees={} value={} gamma={} delta={}",
        report.decision.has_clique, report.oracle_has_clique, report.agrees, report.decision.value, report.certificate.gamma, report.certificate.delta
    );
    let agrees = report.agrees;
    output(&report, summary, agrees, args.report)
}

fn verify_cmd(args: VerifyArgs, seed: u64) -> Result<Output, Error> {
    let report = verify_lemma(&args.lemma, seed, args.budget)?;
    let mut lines = vec![format!("verify {}: {}", report.id, if report.passed { "PASS" } else { "FAIL" })];
    for r in &report.results {
        lines.push(format!("  {} [{}] {} cases", r.property, if r.passed { "PASS" } else { "FAIL" }, r.cases));
    }
    let passed = report.passed;
    output(&report, lines.join("\n"), passed, args.report)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Json(_) | Error::Io(_) => 2,
        Error::Resource { .. } => 3,
        Error::Solver { .. } | Error::Lp(_) => 1,
    }
}

fn run(cli: Cli) -> Result<Output, Error> {
    if cli.threads > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match cli.command {
        Command::Graph {
            command: GraphCommand::Gen(a),
        } => graph_gen(a, cli.seed),
        Command::Embed(a) => embed_cmd(a),
        Command::Chub(a) => chub_cmd(a),
        Command::Bary {
            command: BaryCommand::Solve(a),
        } => bary_solve(a),
        Command::Bary {
            command: BaryCommand::Uniformize(a),
        } => bary_uniformize(a),
        Command::Reduce(a) => reduce_cmd(a),
        Command::Verify(a) => verify_cmd(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (quiet, force_json) = (cli.quiet, cli.json);
    let out = match run(cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let text = serde_json::to_string_pretty(&out.json).expect("values serialize");
    match &out.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            if force_json {
                println!("{text}");
            }
        }
        None => println!("{text}"),
    }
    if !quiet {
        eprintln!("{}", out.summary);
    }
    ExitCode::from(if out.passed { 0 } else { 1 })
}
