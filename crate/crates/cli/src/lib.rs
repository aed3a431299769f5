//! Command implementations behind the `hyperstl` binary.
//!
//! Exit codes: 0 feasible or holds, 2 infeasible or fails, 3 budget
//! exhausted, 1 usage or configuration error.

pub mod csvio;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hyperstl::config::{Config, Loaded};
use hyperstl::oracle::{enumerate_traces_capped, eval_hyper};
use hyperstl::planner::{
    plan, verify_inputs, Backend, Check, PlanResult, PlanStatus, Verification,
};
use hyperstl::semantics::{Monitor, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(hyperstl::Error),
}

impl CliError {
    fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<hyperstl::Error> for CliError {
    fn from(e: hyperstl::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hyperstl",
    version,
    about = "Plan, monitor and check HyperSTL specifications"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize inputs for the configured formula and write artifacts.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Output directory for the plan and its traces.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the robustness of the formula body over trajectory CSVs.
    Monitor {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV per trace variable, in prefix order; replaces `monitor.traces`.
        #[arg(long = "trace")]
        traces: Vec<PathBuf>,
        /// Evaluation time; replaces `monitor.at`.
        #[arg(long)]
        at: Option<usize>,
        /// Also write `monitor.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the formula, exhaustively over a grid or against a saved plan.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Decide the quantified formula over every grid rollout.
        #[arg(long)]
        exact: bool,
        /// plan.json whose inputs are checked against the remaining quantifiers.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Also write `verdict.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<Backend>,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: hyperstl::Error| e.to_string())
}

impl Common {
    fn load(&self) -> Result<Loaded, CliError> {
        let mut l = Config::load(&self.config)
            .map_err(|e| CliError::Usage(format!("{}: {e}", self.config.display())))?;
        if let Some(s) = self.seed {
            l.planner.search.seed = s;
        }
        if let Some(b) = self.backend {
            l.planner.backend = b;
        }
        Ok(l)
    }
}

/// Runs a parsed command and returns its exit code.
pub fn run(cli: Cli) -> i32 {
    let res = match cli.command {
        Command::Plan { common, out } => cmd_plan(&common, &out),
        Command::Monitor {
            common,
            traces,
            at,
            out,
        } => cmd_monitor(&common, &traces, at, out.as_deref()),
        Command::Verify {
            common,
            exact,
            plan,
            out,
        } => cmd_verify(&common, exact, plan.as_deref(), out.as_deref()),
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

/// `ρ` with nine significant digits.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

fn status_code(s: PlanStatus) -> i32 {
    s.exit_code()
}

pub fn cmd_plan(common: &Common, out: &Path) -> Result<i32, CliError> {
    let l = common.load()?;
    let model = &l.config.system;
    log::info!(
        "planning with backend {} and seed {}",
        l.planner.backend,
        l.planner.search.seed
    );
    let r = plan(&l.formula, model, &l.planner)?;
    write_artifacts(&l, &r, out)?;
    println!("status: {}", r.status);
    if let Some(rho) = r.robustness {
        println!("robustness: {}", sig9(rho));
    }
    if let Some(c) = r.cost {
        println!("cost: {}", sig9(c));
    }
    println!(
        "iterations: {}  verification: {:?}",
        r.iterations, r.verification
    );
    if let Some(m) = &r.message {
        println!("note: {m}");
    }
    if r.status == PlanStatus::Infeasible {
        match r.verification {
            Verification::Exact => println!("proof: exhaustive search over the input grid"),
            Verification::Milp => println!("proof: MILP infeasibility over the input box"),
            Verification::Budgeted => {
                println!("no proof: the sampling budget ran out without a witness")
            }
        }
    }
    println!("artifacts: {}", out.display());
    Ok(status_code(r.status))
}

/// Writes `plan.json`, one `trace_<slot>.csv` per returned trace, `iterations.jsonl` and `regions.json`.
pub fn write_artifacts(l: &Loaded, r: &PlanResult, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let put = |name: &str, text: String| -> Result<(), CliError> {
        let p = out.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    };
    put(
        "plan.json",
        serde_json::to_string_pretty(r).map_err(hyperstl::Error::from)? + "\n",
    )?;
    put("iterations.jsonl", r.log_jsonl())?;
    put(
        "regions.json",
        serde_json::to_string_pretty(&l.regions).map_err(hyperstl::Error::from)? + "\n",
    )?;
    for (i, tr) in r.traces.iter().enumerate() {
        let name = r.slots.get(i).cloned().unwrap_or_else(|| format!("{i}"));
        csvio::write_trace(&out.join(format!("trace_{name}.csv")), tr, r.inputs.get(i))?;
    }
    Ok(())
}

fn write_json(out: Option<&Path>, name: &str, value: serde_json::Value) -> Result<(), CliError> {
    let Some(dir) = out else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let p = dir.join(name);
    std::fs::write(&p, value.to_string() + "\n").map_err(|e| CliError::io(&p, e))
}

pub fn cmd_monitor(
    common: &Common,
    traces: &[PathBuf],
    at: Option<usize>,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let l = common.load()?;
    let spec = l.config.monitor.clone().unwrap_or_default();
    let files: Vec<PathBuf> = if traces.is_empty() {
        spec.traces.iter().map(|p| l.resolve(p)).collect()
    } else {
        traces.to_vec()
    };
    let vars = l.formula.prefix.vars();
    if files.len() != vars.len() {
        return Err(CliError::Usage(format!(
            "the formula quantifies {} trace variables but {} trace files were given",
            vars.len(),
            files.len()
        )));
    }
    let tr: Vec<Trace> = files
        .iter()
        .map(|p| csvio::read_trace(p))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&Trace> = tr.iter().collect();
    let at = at.unwrap_or(spec.at);
    let rho = Monitor::new(&l.formula.body, &vars)?.robustness(&refs, at)?;
    println!("{}", sig9(rho));
    write_json(
        out,
        "monitor.json",
        serde_json::json!({ "rho": rho, "at": at }),
    )?;
    Ok(if rho > 0.0 { EXIT_OK } else { EXIT_NO })
}

pub fn cmd_verify(
    common: &Common,
    exact: bool,
    plan_file: Option<&Path>,
    out: Option<&Path>,
) -> Result<i32, CliError> {
    let l = common.load()?;
    let model = &l.config.system;
    if exact {
        let spec = l.config.verify.clone().unwrap_or_default();
        let grid = spec
            .grid
            .or_else(|| l.planner.grid.clone())
            .ok_or_else(|| CliError::Usage("--exact needs `verify.grid` or `planner.grid`".into()))?
            .build(model)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let n = spec
            .n_steps
            .or(l.planner.n_steps)
            .unwrap_or_else(|| l.formula.horizon());
        let set = enumerate_traces_capped(model, &grid, n, l.planner.trace_cap)?;
        log::info!(
            "{} traces over a grid of {} points, N = {n}",
            set.len(),
            grid.len()
        );
        let v = eval_hyper(&l.formula, &set.traces)?;
        println!("{}", if v.holds { "HOLDS" } else { "FAILS" });
        write_json(
            out,
            "verdict.json",
            serde_json::json!({ "holds": v.holds, "assignment": v.assignment, "traces": set.len() }),
        )?;
        let vars = l.formula.prefix.vars();
        let q = l.formula.prefix.quantifiers();
        for (k, &i) in v.assignment.iter().enumerate() {
            let role = if q[k] == hyperstl::formula::Quantifier::Exists {
                "witness"
            } else {
                "refutation"
            };
            let steps: Vec<Vec<f64>> = set.inputs[i].steps().map(<[f64]>::to_vec).collect();
            println!(
                "{role} {}: {}",
                vars[k],
                serde_json::to_string(&steps).map_err(hyperstl::Error::from)?
            );
        }
        return Ok(if v.holds { EXIT_OK } else { EXIT_NO });
    }
    let path = plan_file
        .ok_or_else(|| CliError::Usage("verify needs --exact or --plan <plan.json>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let r: PlanResult = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
    let check = verify_inputs(&l.formula, model, &l.planner, &r.inputs)?;
    let label = match &check {
        Check::Holds { .. } => "HOLDS",
        Check::Fails { .. } => "FAILS",
        Check::Exhausted(_) => "BUDGET_EXHAUSTED",
    };
    write_json(out, "verdict.json", serde_json::json!({ "verdict": label }))?;
    Ok(match check {
        Check::Holds { rho } => {
            println!("HOLDS");
            if let Some(rho) = rho {
                println!("robustness: {}", sig9(rho));
            }
            EXIT_OK
        }
        Check::Fails { counterexample } => {
            println!("FAILS");
            if !counterexample.is_empty() {
                println!(
                    "counterexample: {}",
                    serde_json::to_string(&counterexample).map_err(hyperstl::Error::from)?
                );
            }
            EXIT_NO
        }
        Check::Exhausted(why) => {
            println!("BUDGET_EXHAUSTED: {why}");
            EXIT_BUDGET
        }
    })
}
