//! Command-line driver: `gen`, `solve`, `verify`, `oracle` and `bench`.
//!
//! Every invocation produces one JSON document for stdout and an optional
//! human-readable table for stderr. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | verification failed |
//! | 2 | usage error (bad flags, unreadable files, digest mismatch) |
//! | 3 | infeasible instance |
//! | 4 | budget or enumeration cap exceeded |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::approx::{self, ApproxError};
use crate::formats::{FormatError, Instance, Solution};
use crate::gpoly::GpolyError;
use crate::instances::{gen_bdgpe, gen_metric_mvtsp, GeneratorConfig, LoopRule};
use crate::mvtsp::{feasibility_problem, tour_cost, EdgeMultiplicity, MvtspInstance};
use crate::oracles::{self, OracleBudget, OracleError};
use crate::rational::{format_rational, rat, ratio, to_f64, Rational};
use crate::rounding::{self, BdgpeInstance, HyperedgeReport, Regime, RoundingError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// Result of one invocation.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub json: Value,
    pub human: String,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Failure {
    code: i32,
    message: String,
}

fn fail<T>(code: i32, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure { code, message: message.into() })
}

fn usage<T>(message: impl Into<String>) -> Result<T, Failure> {
    fail(EXIT_USAGE, message)
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Gpoly(g) => g.into(),
            FormatError::Rounding(r) => r.into(),
            other => Failure { code: EXIT_USAGE, message: other.to_string() },
        }
    }
}

impl From<GpolyError> for Failure {
    fn from(e: GpolyError) -> Self {
        let code = match e {
            GpolyError::GroundSetTooLarge { .. } => EXIT_BUDGET,
            GpolyError::EmptyIntersection { .. } => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<RoundingError> for Failure {
    fn from(e: RoundingError) -> Self {
        let code = match &e {
            RoundingError::Infeasible => EXIT_INFEASIBLE,
            RoundingError::Gpoly(g) => return g.clone().into(),
            RoundingError::Unbounded | RoundingError::InvalidInstance(_) => EXIT_USAGE,
            RoundingError::NonTermination { .. } | RoundingError::Lp(_) => EXIT_VERIFY_FAILED,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<ApproxError> for Failure {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::Rounding(r) => r.into(),
            ApproxError::SubsetTooLarge { .. } | ApproxError::TooManyEdges { .. } => {
                Failure { code: EXIT_BUDGET, message: e.to_string() }
            }
            other => Failure { code: EXIT_VERIFY_FAILED, message: other.to_string() },
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded(_) | OracleError::UnboundedCoordinate(_) => {
                Failure { code: EXIT_BUDGET, message: e.to_string() }
            }
            OracleError::Gpoly(g) => g.into(),
            OracleError::Rounding(r) => r.into(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "mvtsp", version, about = "Iterative rounding and approximation for the metric many-visits TSP")]
struct Cli {
    /// Suppress the human-readable table on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded random instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run an algorithm on an instance file.
    Solve(SolveArgs),
    /// Recheck a solution file against its instance.
    Verify(VerifyArgs),
    /// Exact optimum by enumeration (and the LP bound for BDGPE instances).
    Oracle(OracleArgs),
    /// Sweep seeds and sizes, comparing against the exact oracle.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Metric many-visits TSP instance.
    Mvtsp {
        #[arg(long)]
        n: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        r_min: i64,
        #[arg(long, default_value_t = 3)]
        r_max: i64,
        /// Off-diagonal weights before metric closure are drawn from [1, w-max].
        #[arg(long, default_value_t = 20)]
        w_max: i64,
        #[arg(long, value_enum, default_value_t = LoopArg::Max)]
        loops: LoopArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Degree-bounded g-polymatroid element instance.
    Bdgpe {
        #[arg(long)]
        size: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = RegimeArg::Both)]
        regime: RegimeArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum LoopArg {
    Max,
    Uniform,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum RegimeArg {
    Both,
    Lower,
    Upper,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Both => Regime::Both,
            RegimeArg::Lower => Regime::LowerOnly,
            RegimeArg::Upper => Regime::UpperOnly,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Alg {
    Apx15,
    Apx25,
    Bdgpe,
    Exact,
}

impl Alg {
    fn name(self) -> &'static str {
        match self {
            Alg::Apx15 => "apx15",
            Alg::Apx25 => "apx25",
            Alg::Bdgpe => "bdgpe",
            Alg::Exact => "exact",
        }
    }

    /// Guaranteed approximation ratio on MVTSP instances.
    fn ratio_bound(self) -> Option<Rational> {
        match self {
            Alg::Apx15 => Some(ratio(3, 2)),
            Alg::Apx25 => Some(ratio(5, 2)),
            Alg::Exact => Some(rat(1)),
            Alg::Bdgpe => None,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct BudgetArgs {
    /// Largest BDGPE ground set the oracle enumerates.
    #[arg(long, default_value_t = OracleBudget::default().max_ground)]
    budget_ground: usize,
    /// Largest vertex count the exact MVTSP oracle accepts.
    #[arg(long, default_value_t = OracleBudget::default().max_vertices)]
    budget_vertices: usize,
    /// Largest total number of requested visits for the exact MVTSP oracle.
    #[arg(long, default_value_t = OracleBudget::default().max_total_visits)]
    budget_visits: i64,
    /// Search-node limit for either oracle.
    #[arg(long, default_value_t = OracleBudget::default().max_nodes)]
    budget_nodes: u64,
}

impl BudgetArgs {
    fn budget(&self) -> OracleBudget {
        OracleBudget {
            max_ground: self.budget_ground,
            max_vertices: self.budget_vertices,
            max_total_visits: self.budget_visits,
            max_nodes: self.budget_nodes,
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    alg: Alg,
    /// Keep only the bounds of this regime before solving a BDGPE instance.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Also run the exact oracle and report the ratio.
    #[arg(long)]
    oracle: bool,
    /// Write the solution file here.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Algorithm whose guarantee the solution must meet.
    #[arg(long, value_enum)]
    alg: Option<Alg>,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct OracleArgs {
    instance: PathBuf,
    #[command(flatten)]
    budget: BudgetArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = Alg::Apx15)]
    alg: Alg,
    /// Vertex counts (ground-set sizes for `--alg bdgpe`).
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 4, 5])]
    sizes: Vec<usize>,
    /// Number of seeds per size.
    #[arg(long, default_value_t = 30)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_start: u64,
    #[arg(long, default_value_t = 4)]
    r_max: i64,
    #[arg(long, value_enum, default_value_t = RegimeArg::Both)]
    regime: RegimeArg,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    budget: BudgetArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let json = if code == EXIT_OK {
                json!({ "status": "ok", "command": "help" })
            } else {
                error_json(code, &e.kind().to_string(), &first_line(&e.to_string()))
            };
            return Outcome { code, json, human: e.render().to_string(), quiet: false };
        }
    };
    let quiet = cli.quiet;
    let mut human = String::new();
    let result = match cli.command {
        Command::Gen(g) => cmd_gen(g, &mut human),
        Command::Solve(a) => cmd_solve(a, &mut human),
        Command::Verify(a) => cmd_verify(a, &mut human),
        Command::Oracle(a) => cmd_oracle(a, &mut human),
        Command::Bench(a) => cmd_bench(a, &mut human),
    };
    match result {
        Ok((code, json)) => Outcome { code, json, human, quiet },
        Err(f) => {
            let _ = writeln!(human, "error: {}", f.message);
            Outcome { code: f.code, json: error_json(f.code, "error", &f.message), human, quiet }
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string()
}

fn error_json(code: i32, kind: &str, message: &str) -> Value {
    json!({ "status": "error", "exit_code": code, "kind": kind, "error": message })
}

fn rational_json(r: &Rational) -> Value {
    json!({ "value": format_rational(r), "decimal": to_f64(r) })
}

fn read_instance(path: &Path) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .or_else(|e| usage(format!("cannot read instance {}: {e}", path.display())))?;
    Ok(Instance::from_json(&text)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).or_else(|e| usage(format!("cannot write {}: {e}", path.display())))
}

type CmdResult = Result<(i32, Value), Failure>;

fn cmd_gen(cmd: GenCommand, human: &mut String) -> CmdResult {
    let (instance, output) = match cmd {
        GenCommand::Mvtsp { n, seed, r_min, r_max, w_max, loops, output } => {
            if n < 1 {
                return usage(format!("--n must be at least 1, got {n}"));
            }
            if r_min < 1 {
                return usage(format!("--r-min must be at least 1, got {r_min}"));
            }
            if r_max < r_min {
                return usage(format!("--r-max must be at least --r-min ({r_min}), got {r_max}"));
            }
            if w_max < 1 {
                return usage(format!("--w-max must be at least 1, got {w_max}"));
            }
            let loop_rule = match loops {
                LoopArg::Max => LoopRule::Max,
                LoopArg::Uniform => LoopRule::Uniform,
            };
            let cfg = GeneratorConfig { seed, n: n as usize, r_lo: r_min, r_hi: r_max, w_max, loop_rule };
            let inst = gen_metric_mvtsp(&cfg).or_else(|e| usage(e.to_string()))?;
            (Instance::Mvtsp(inst), output)
        }
        GenCommand::Bdgpe { size, seed, regime, output } => {
            if !(1..=6).contains(&size) {
                return usage(format!("--size must be between 1 and 6, got {size}"));
            }
            (Instance::Bdgpe(gen_bdgpe(seed, size as usize, regime.into())), output)
        }
    };
    let text = instance.to_pretty_json()?;
    let digest = instance.digest()?;
    let _ = writeln!(human, "generated {} instance, digest {digest}", instance.kind());
    match output {
        Some(path) => {
            write_file(&path, &text)?;
            let _ = writeln!(human, "wrote {}", path.display());
            Ok((
                EXIT_OK,
                json!({ "status": "ok", "command": "gen", "kind": instance.kind(), "instance_digest": digest, "path": path }),
            ))
        }
        None => Ok((EXIT_OK, serde_json::from_str(&text).expect("generated JSON parses"))),
    }
}

/// Keeps only the bounds named by `regime`.
fn restrict_regime(inst: &BdgpeInstance, regime: Regime) -> Result<BdgpeInstance, Failure> {
    let mut out = inst.clone();
    out.regime = regime;
    for (i, e) in out.constraints.hyperedges.iter_mut().enumerate() {
        match regime {
            Regime::Both => {}
            Regime::LowerOnly => {
                if e.f.is_none() {
                    return usage(format!("--regime lower: hyperedge {i} has no lower bound"));
                }
                e.g = None;
            }
            Regime::UpperOnly => {
                if e.g.is_none() {
                    return usage(format!("--regime upper: hyperedge {i} has no upper bound"));
                }
                e.f = None;
            }
        }
    }
    rounding::validate(&out)?;
    Ok(out)
}

fn violation_rows(report: &[HyperedgeReport]) -> Value {
    Value::Array(
        report
            .iter()
            .map(|r| {
                json!({ "hyperedge": r.index, "achieved": r.achieved, "f": r.f, "g": r.g,
                        "violation": r.violation, "emptied": r.emptied })
            })
            .collect(),
    )
}

fn violation_table(report: &[HyperedgeReport], human: &mut String) {
    let _ = writeln!(human, "{:>9} {:>9} {:>6} {:>6} {:>9}", "hyperedge", "achieved", "f", "g", "violation");
    let show = |b: Option<i64>| b.map_or("-".to_string(), |v| v.to_string());
    for r in report {
        let _ = writeln!(human, "{:>9} {:>9} {:>6} {:>6} {:>9}", r.index, r.achieved, show(r.f), show(r.g), r.violation);
    }
}

/// Ratio `cost / optimum`, `1` when both are zero, absent when only the optimum is.
fn ratio_of(cost: &Rational, optimum: &Rational) -> Option<Rational> {
    if optimum.is_zero() {
        cost.is_zero().then(Rational::one)
    } else {
        Some(cost / optimum)
    }
}

fn run_mvtsp(alg: Alg, inst: &MvtspInstance, budget: &OracleBudget) -> Result<(EdgeMultiplicity, Value), Failure> {
    Ok(match alg {
        Alg::Apx15 => {
            let out = approx::apx15_detailed(inst)?;
            let bdgpe = approx::mvtsp_bdgpe_instance(inst)?;
            let d = out.intermediate.degrees(inst.n());
            let degrees_ok = (0..inst.n()).all(|v| d[v] >= 2 * inst.requests()[v] - 1);
            let z_cost = tour_cost(inst, &out.intermediate);
            let details = json!({
                "delta": out.rounding.delta,
                "iterations": out.rounding.iterations,
                "lp_solves": out.rounding.lp_solves,
                "lp_bound": rational_json(&out.rounding.lp_optimum),
                "intermediate_cost": rational_json(&z_cost),
                "intermediate_degrees": d,
                "intermediate_degrees_ok": degrees_ok,
                "intermediate_within_lp": z_cost <= out.rounding.lp_optimum,
                "matching": out.matching,
                "lp_solve_bound": 2 * bdgpe.pair.len() + bdgpe.constraints.hyperedges.len() + 1,
            });
            (out.tour, details)
        }
        Alg::Apx25 => (approx::apx25(inst)?, json!({})),
        Alg::Exact => (oracles::exact_mvtsp(inst, budget)?, json!({})),
        Alg::Bdgpe => return usage("--alg bdgpe needs a bdgpe instance"),
    })
}

fn cmd_solve(args: SolveArgs, human: &mut String) -> CmdResult {
    let instance = read_instance(&args.instance)?;
    let digest = instance.digest()?;
    let budget = args.budget.budget();
    let start = Instant::now();
    match &instance {
        Instance::Mvtsp(inst) => {
            if args.regime.is_some() {
                return usage("--regime applies to bdgpe instances only");
            }
            let (tour, details) = run_mvtsp(args.alg, inst, &budget)?;
            let elapsed = start.elapsed();
            let cost = tour_cost(inst, &tour);
            let problem = feasibility_problem(inst, &tour);
            let oracle = if args.oracle { Some(oracle_tour_json(inst, &cost, &budget)?) } else { None };
            let solution = Solution::Tour { instance_digest: digest.clone(), edges: tour };
            let sol_json = solution.to_value(None);
            if let Some(path) = &args.output {
                write_file(path, &(serde_json::to_string_pretty(&sol_json).expect("json") + "\n"))?;
            }
            let _ = writeln!(human, "{} on {} vertices: cost {} ({:.4})", args.alg.name(), inst.n(), format_rational(&cost), to_f64(&cost));
            let _ = writeln!(human, "feasible: {}", problem.as_deref().unwrap_or("yes"));
            if let Some(o) = &oracle {
                let _ = writeln!(human, "oracle: optimum {} ratio {}", o["optimum"]["value"], o["ratio"]["value"]);
            }
            Ok((
                EXIT_OK,
                json!({
                    "status": "ok",
                    "command": "solve",
                    "instance_digest": digest,
                    "algorithm": args.alg.name(),
                    "cost": rational_json(&cost),
                    "feasible": { "tour": problem.is_none(), "problem": problem },
                    "violations": [],
                    "oracle": oracle,
                    "details": details,
                    "wall_time_ms": elapsed.as_secs_f64() * 1e3,
                    "solution": sol_json,
                }),
            ))
        }
        Instance::Bdgpe(inst) => {
            let inst = match args.regime {
                Some(r) => restrict_regime(inst, r.into())?,
                None => inst.clone(),
            };
            let (z, details) = match args.alg {
                Alg::Bdgpe => {
                    let res = rounding::solve_bdgpe(&inst)?;
                    let details = json!({
                        "delta": res.delta,
                        "iterations": res.iterations,
                        "lp_solves": res.lp_solves,
                        "lp_bound": rational_json(&res.lp_optimum),
                        "lp_solve_bound": 2 * inst.pair.len() + inst.constraints.hyperedges.len() + 1,
                        "emptied": res.report.iter().filter(|r| r.emptied).map(|r| r.index).collect::<Vec<_>>(),
                    });
                    (res.z, details)
                }
                Alg::Exact => match oracles::exact_bdgpe(&inst, &budget)? {
                    Some((z, _)) => (z, json!({})),
                    None => return fail(EXIT_INFEASIBLE, "no integer point meets every bound"),
                },
                other => return usage(format!("--alg {} needs an mvtsp instance", other.name())),
            };
            let elapsed = start.elapsed();
            let check = element_check(&inst, &z, args.alg)?;
            let oracle = if args.oracle {
                Some(match oracles::exact_bdgpe(&inst, &budget)? {
                    Some((_, opt)) => json!({ "optimum": rational_json(&opt) }),
                    None => json!({ "optimum": null }),
                })
            } else {
                None
            };
            let solution = Solution::Element { instance_digest: digest.clone(), z: z.clone() };
            let sol_json = solution.to_value(Some(inst.pair.ground()));
            if let Some(path) = &args.output {
                write_file(path, &(serde_json::to_string_pretty(&sol_json).expect("json") + "\n"))?;
            }
            let _ = writeln!(human, "{} ({}) on {} elements: cost {}", args.alg.name(), inst.regime.name(), inst.pair.len(), format_rational(&check.cost));
            violation_table(&check.report, human);
            Ok((
                EXIT_OK,
                json!({
                    "status": "ok",
                    "command": "solve",
                    "instance_digest": digest,
                    "algorithm": args.alg.name(),
                    "regime": inst.regime.name(),
                    "cost": rational_json(&check.cost),
                    "feasible": check.flags(),
                    "violations": violation_rows(&check.report),
                    "oracle": oracle,
                    "details": details,
                    "wall_time_ms": elapsed.as_secs_f64() * 1e3,
                    "solution": sol_json,
                }),
            ))
        }
    }
}

/// Exact optimum and ratio for a tour of the given cost.
fn oracle_tour_json(inst: &MvtspInstance, cost: &Rational, budget: &OracleBudget) -> Result<Value, Failure> {
    let opt = oracles::exact_mvtsp(inst, budget)?;
    let opt_cost = tour_cost(inst, &opt);
    Ok(json!({
        "optimum": rational_json(&opt_cost),
        "ratio": ratio_of(cost, &opt_cost).as_ref().map(rational_json),
    }))
}

struct ElementCheck {
    cost: Rational,
    in_polyhedron: bool,
    report: Vec<HyperedgeReport>,
    delta: i64,
    within_guarantee: bool,
    lp_bound: Rational,
    within_lp: bool,
}

impl ElementCheck {
    fn flags(&self) -> Value {
        json!({
            "in_polyhedron": self.in_polyhedron,
            "within_guarantee": self.within_guarantee,
            "cost_within_lp_bound": self.within_lp,
            "delta": self.delta,
            "lp_bound": rational_json(&self.lp_bound),
        })
    }

    fn holds(&self) -> bool {
        self.in_polyhedron && self.within_guarantee && self.within_lp
    }
}

/// Rechecks an element: exact bounds for `exact`, the regime guarantee otherwise.
fn element_check(inst: &BdgpeInstance, z: &crate::gpoly::IntVector, alg: Alg) -> Result<ElementCheck, Failure> {
    if z.len() != inst.pair.len() {
        return fail(EXIT_VERIFY_FAILED, format!("element has {} coordinates, instance has {}", z.len(), inst.pair.len()));
    }
    let cost = rounding::cost_of(&inst.costs, z);
    let report = rounding::violation_report(inst, z);
    let delta = rounding::delta(&inst.constraints, inst.pair.len());
    let lp_bound = oracles::lp_lower_bound(inst)?;
    let (within_guarantee, within_lp) = if alg == Alg::Exact {
        (report.iter().all(|r| r.violation == 0), true)
    } else {
        (rounding::within_guarantee(inst.regime, delta, &report), cost <= lp_bound)
    };
    Ok(ElementCheck { in_polyhedron: inst.pair.contains(z)?, cost, report, delta, within_guarantee, lp_bound, within_lp })
}

fn cmd_verify(args: VerifyArgs, human: &mut String) -> CmdResult {
    let instance = read_instance(&args.instance)?;
    let digest = instance.digest()?;
    let text = std::fs::read_to_string(&args.solution)
        .or_else(|e| usage(format!("cannot read solution {}: {e}", args.solution.display())))?;
    let ground = match &instance {
        Instance::Bdgpe(b) => Some(b.pair.ground().clone()),
        Instance::Mvtsp(_) => None,
    };
    let solution = Solution::from_json(&text, ground.as_ref())?;
    if solution.instance_digest() != digest {
        return usage(format!(
            "digest mismatch: solution is for {}, instance is {digest}",
            solution.instance_digest()
        ));
    }
    let budget = args.budget.budget();
    match (&instance, solution) {
        (Instance::Mvtsp(inst), Solution::Tour { edges, .. }) => {
            if args.alg == Some(Alg::Bdgpe) {
                return usage("--alg bdgpe applies to element solutions");
            }
            let cost = tour_cost(inst, &edges);
            let problem = feasibility_problem(inst, &edges);
            let mut ok = problem.is_none();
            let mut oracle = Value::Null;
            let mut ratio_ok = Value::Null;
            if let (true, Some(bound)) = (ok, args.alg.and_then(Alg::ratio_bound)) {
                match oracle_tour_json(inst, &cost, &budget) {
                    Ok(o) => {
                        let opt = crate::rational::parse_rational(o["optimum"]["value"].as_str().expect("string"))
                            .expect("own output");
                        let holds = cost <= &opt * &bound;
                        ok &= holds;
                        ratio_ok = json!(holds);
                        oracle = o;
                    }
                    Err(f) if f.code == EXIT_BUDGET => {
                        oracle = json!({ "skipped": f.message });
                    }
                    Err(f) => return Err(f),
                }
            }
            let _ = writeln!(human, "cost {} ({:.4})", format_rational(&cost), to_f64(&cost));
            let _ = writeln!(human, "feasible: {}", problem.as_deref().unwrap_or("yes"));
            if let Some(r) = oracle.get("ratio").and_then(|r| r.get("value")) {
                let _ = writeln!(human, "ratio to optimum: {r}");
            }
            let _ = writeln!(human, "{}", if ok { "verified" } else { "FAILED" });
            Ok((
                if ok { EXIT_OK } else { EXIT_VERIFY_FAILED },
                json!({
                    "status": if ok { "ok" } else { "failed" },
                    "command": "verify",
                    "instance_digest": digest,
                    "algorithm": args.alg.map(Alg::name),
                    "cost": rational_json(&cost),
                    "feasible": { "tour": problem.is_none(), "problem": problem },
                    "oracle": oracle,
                    "ratio_within_bound": ratio_ok,
                    "verified": ok,
                }),
            ))
        }
        (Instance::Bdgpe(inst), Solution::Element { z, .. }) => {
            let alg = args.alg.unwrap_or(Alg::Bdgpe);
            if !matches!(alg, Alg::Bdgpe | Alg::Exact) {
                return usage(format!("--alg {} applies to tour solutions", alg.name()));
            }
            let check = element_check(inst, &z, alg)?;
            let mut ok = check.holds();
            let mut oracle = Value::Null;
            if alg == Alg::Exact && ok {
                match oracles::exact_bdgpe(inst, &budget) {
                    Ok(Some((_, opt))) => {
                        ok &= check.cost == opt;
                        oracle = json!({ "optimum": rational_json(&opt) });
                    }
                    Ok(None) => ok = false,
                    Err(e) => {
                        let f: Failure = e.into();
                        if f.code != EXIT_BUDGET {
                            return Err(f);
                        }
                        oracle = json!({ "skipped": f.message });
                    }
                }
            }
            violation_table(&check.report, human);
            let _ = writeln!(human, "cost {} lp bound {}", format_rational(&check.cost), format_rational(&check.lp_bound));
            let _ = writeln!(human, "{}", if ok { "verified" } else { "FAILED" });
            Ok((
                if ok { EXIT_OK } else { EXIT_VERIFY_FAILED },
                json!({
                    "status": if ok { "ok" } else { "failed" },
                    "command": "verify",
                    "instance_digest": digest,
                    "algorithm": alg.name(),
                    "cost": rational_json(&check.cost),
                    "feasible": check.flags(),
                    "violations": violation_rows(&check.report),
                    "oracle": oracle,
                    "verified": ok,
                }),
            ))
        }
        _ => usage("solution kind does not match the instance kind"),
    }
}

fn cmd_oracle(args: OracleArgs, human: &mut String) -> CmdResult {
    let instance = read_instance(&args.instance)?;
    let digest = instance.digest()?;
    let budget = args.budget.budget();
    let start = Instant::now();
    match &instance {
        Instance::Mvtsp(inst) => {
            let tour = oracles::exact_mvtsp(inst, &budget)?;
            let cost = tour_cost(inst, &tour);
            let _ = writeln!(human, "optimum {} ({:.4})", format_rational(&cost), to_f64(&cost));
            Ok((
                EXIT_OK,
                json!({
                    "status": "ok",
                    "command": "oracle",
                    "instance_digest": digest,
                    "optimum": rational_json(&cost),
                    "wall_time_ms": start.elapsed().as_secs_f64() * 1e3,
                    "solution": Solution::Tour { instance_digest: digest.clone(), edges: tour }.to_value(None),
                }),
            ))
        }
        Instance::Bdgpe(inst) => {
            let lp = oracles::lp_lower_bound(inst)?;
            let Some((z, opt)) = oracles::exact_bdgpe(inst, &budget)? else {
                return fail(EXIT_INFEASIBLE, "no integer point meets every bound");
            };
            let _ = writeln!(human, "optimum {} lp bound {}", format_rational(&opt), format_rational(&lp));
            Ok((
                EXIT_OK,
                json!({
                    "status": "ok",
                    "command": "oracle",
                    "instance_digest": digest,
                    "optimum": rational_json(&opt),
                    "lp_bound": rational_json(&lp),
                    "wall_time_ms": start.elapsed().as_secs_f64() * 1e3,
                    "solution": Solution::Element { instance_digest: digest.clone(), z }.to_value(Some(inst.pair.ground())),
                }),
            ))
        }
    }
}

/// One grid cell of a benchmark sweep.
#[derive(Debug, Clone)]
struct BenchRow {
    size: usize,
    seed: u64,
    outcome: Result<BenchValues, Failure>,
    wall_ms: f64,
}

#[derive(Debug, Clone)]
struct BenchValues {
    cost: Rational,
    /// Exact optimum for MVTSP cells, the LP bound for BDGPE cells.
    reference: Rational,
    ratio: Option<Rational>,
    feasible: bool,
    /// Largest violation magnitude over all hyperedges (BDGPE) or 0.
    max_violation: i64,
    iterations: usize,
    guarantee_holds: bool,
}

fn bench_cell(args: &BenchArgs, size: usize, seed: u64) -> Result<BenchValues, Failure> {
    let budget = args.budget.budget();
    if args.alg == Alg::Bdgpe {
        if !(1..=6).contains(&size) {
            return usage(format!("--sizes entries must be between 1 and 6 for bdgpe, got {size}"));
        }
        let inst = gen_bdgpe(seed, size, args.regime.into());
        let res = rounding::solve_bdgpe(&inst)?;
        let check = element_check(&inst, &res.z, Alg::Bdgpe)?;
        let max_violation = check.report.iter().map(|r| r.violation.abs()).max().unwrap_or(0);
        let bound_ok = res.lp_solves <= 2 * size + inst.constraints.hyperedges.len() + 1;
        return Ok(BenchValues {
            reference: check.lp_bound.clone(),
            ratio: None,
            feasible: check.in_polyhedron,
            max_violation,
            iterations: res.iterations,
            guarantee_holds: check.holds() && bound_ok,
            cost: check.cost,
        });
    }
    if size < 1 {
        return usage("--sizes entries must be at least 1");
    }
    let inst = gen_metric_mvtsp(&GeneratorConfig::new(seed, size, args.r_max)).or_else(|e| usage(e.to_string()))?;
    let (tour, details) = run_mvtsp(args.alg, &inst, &budget)?;
    let cost = tour_cost(&inst, &tour);
    let opt = tour_cost(&inst, &oracles::exact_mvtsp(&inst, &budget)?);
    let ratio = ratio_of(&cost, &opt);
    let feasible = feasibility_problem(&inst, &tour).is_none();
    let bound = args.alg.ratio_bound().expect("mvtsp algorithms have a ratio bound");
    let mut holds = feasible && cost <= &opt * &bound;
    if args.alg == Alg::Apx15 {
        holds &= details["intermediate_degrees_ok"] == json!(true) && details["intermediate_within_lp"] == json!(true);
    }
    Ok(BenchValues {
        cost,
        reference: opt,
        ratio,
        feasible,
        max_violation: 0,
        iterations: details["iterations"].as_u64().unwrap_or(0) as usize,
        guarantee_holds: holds,
    })
}

fn cmd_bench(args: BenchArgs, human: &mut String) -> CmdResult {
    if args.r_max < 1 {
        return usage(format!("--r-max must be at least 1, got {}", args.r_max));
    }
    let cells: Vec<(usize, u64)> = args
        .sizes
        .iter()
        .flat_map(|&n| (args.seed_start..args.seed_start + args.seeds).map(move |s| (n, s)))
        .collect();
    let work = |&(size, seed): &(usize, u64)| {
        let start = Instant::now();
        let outcome = bench_cell(&args, size, seed);
        BenchRow { size, seed, outcome, wall_ms: start.elapsed().as_secs_f64() * 1e3 }
    };
    let mut rows: Vec<BenchRow> = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .or_else(|e| usage(format!("--threads: {e}")))?
            .install(|| cells.par_iter().map(work).collect()),
        None => cells.par_iter().map(work).collect(),
    };
    rows.sort_by_key(|r| (r.size, r.seed));

    let mut code = EXIT_OK;
    let reference_name = if args.alg == Alg::Bdgpe { "lp_bound" } else { "optimum" };
    let row_json: Vec<Value> = rows
        .iter()
        .map(|r| match &r.outcome {
            Ok(v) => {
                if !v.guarantee_holds && code == EXIT_OK {
                    code = EXIT_VERIFY_FAILED;
                }
                json!({
                    "n": r.size, "seed": r.seed,
                    "cost": rational_json(&v.cost),
                    reference_name: rational_json(&v.reference),
                    "ratio": v.ratio.as_ref().map(rational_json),
                    "feasible": v.feasible,
                    "max_violation": v.max_violation,
                    "iterations": v.iterations,
                    "guarantee_holds": v.guarantee_holds,
                    "wall_time_ms": r.wall_ms,
                })
            }
            Err(f) => {
                if code == EXIT_OK {
                    code = f.code;
                }
                json!({ "n": r.size, "seed": r.seed, "error": f.message, "exit_code": f.code })
            }
        })
        .collect();

    let mut summary = Vec::new();
    let _ = writeln!(
        human,
        "{:>4} {:>6} {:>12} {:>10} {:>8} {:>8} {:>9}",
        "n", "cells", "worst ratio", "mean", "max viol", "max it", "failures"
    );
    for &size in &args.sizes {
        if summary.iter().any(|s: &Value| s["n"] == json!(size)) {
            continue;
        }
        let cell: Vec<&BenchRow> = rows.iter().filter(|r| r.size == size).collect();
        let ok: Vec<&BenchValues> = cell.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let ratios: Vec<&Rational> = ok.iter().filter_map(|v| v.ratio.as_ref()).collect();
        let worst = ratios.iter().max().map(|r| (*r).clone());
        let mean = (!ratios.is_empty())
            .then(|| ratios.iter().fold(Rational::zero(), |a, r| a + *r) / rat(ratios.len() as i64));
        let max_violation = ok.iter().map(|v| v.max_violation).max().unwrap_or(0);
        let max_iterations = ok.iter().map(|v| v.iterations).max().unwrap_or(0);
        let failures = cell.len() - ok.iter().filter(|v| v.guarantee_holds).count();
        let _ = writeln!(
            human,
            "{:>4} {:>6} {:>12} {:>10} {:>8} {:>8} {:>9}",
            size,
            cell.len(),
            worst.as_ref().map_or("-".into(), |w| format!("{:.4}", to_f64(w))),
            mean.as_ref().map_or("-".into(), |m| format!("{:.4}", to_f64(m))),
            max_violation,
            max_iterations,
            failures
        );
        summary.push(json!({
            "n": size,
            "cells": cell.len(),
            "worst_ratio": worst.as_ref().map(rational_json),
            "mean_ratio": mean.as_ref().map(rational_json),
            "max_violation": max_violation,
            "max_iterations": max_iterations,
            "failures": failures,
        }));
    }
    Ok((
        code,
        json!({
            "status": if code == EXIT_OK { "ok" } else { "failed" },
            "command": "bench",
            "algorithm": args.alg.name(),
            "regime": (args.alg == Alg::Bdgpe).then(|| Regime::from(args.regime).name()),
            "bound": args.alg.ratio_bound().as_ref().map(rational_json),
            "rows": row_json,
            "summary": summary,
        }),
    ))
}
