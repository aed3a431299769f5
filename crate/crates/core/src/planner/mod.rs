//! Counterexample-guided planning for existential HyperSTL.
//!
//! The planner alternates between a master problem that proposes inputs for
//! the leading existential block against a growing set of adversarial tuples,
//! and a recursive check that either certifies the proposal or returns a new
//! adversarial tuple. Three backends answer the underlying queries: exact
//! enumeration over an input grid, a mixed-integer encoding for affine
//! systems, and a budgeted cross-entropy search.

mod coupling;
mod grid;
mod milp_engine;
mod stochastic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use coupling::{apply_couplings, Anchor, Coupling, TriggerBox};

use crate::formula::{negate, Block, Body, HyperFormula, Quantifier, TraceVar};
use crate::milp::{CostTerms, SolveLimits, DEFAULT_MARGIN};
use crate::optimizer::SearchConfig;
use crate::oracle::DEFAULT_TRACE_CAP;
use crate::semantics::{Monitor, Trace};
use crate::system::{InputGrid, InputSequence, SystemModel};
use crate::{Error, Result};

/// Inputs closer than this (largest entry difference) count as the same candidate.
pub const DEDUP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Milp,
    #[serde(rename = "cem", alias = "stochastic")]
    Stochastic,
    Grid,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "milp" => Ok(Backend::Milp),
            "cem" | "stochastic" => Ok(Backend::Stochastic),
            "grid" => Ok(Backend::Grid),
            _ => Err(Error::Config(format!(
                "unknown backend `{s}`; expected milp, cem or grid"
            ))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Milp => "milp",
            Backend::Stochastic => "cem",
            Backend::Grid => "grid",
        })
    }
}

/// How far a verdict can be trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verification {
    /// Exhaustive over the input grid.
    Exact,
    /// Solver-proven over the continuous input box.
    Milp,
    /// Backed by a finite search budget only.
    Budgeted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanStatus {
    Feasible,
    Infeasible,
    BudgetExhausted,
}

impl PlanStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            PlanStatus::Feasible => 0,
            PlanStatus::Infeasible => 2,
            PlanStatus::BudgetExhausted => 3,
        }
    }
}

impl fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanStatus::Feasible => "FEASIBLE",
            PlanStatus::Infeasible => "INFEASIBLE",
            PlanStatus::BudgetExhausted => "BUDGET_EXHAUSTED",
        })
    }
}

/// Planning cost `J = -alpha * rho(task) + (1 - alpha) * sum |p_k - p_{k-1}|^2` on the first trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostSpec {
    pub alpha: f64,
    /// Single-trace task formula; its only variable is bound to the first trace.
    #[serde(with = "crate::formula::text::option")]
    pub task: Option<Body>,
    /// Position dimensions of the path term; empty means every non-angular state dimension.
    pub path_dims: Vec<usize>,
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec {
            alpha: 0.5,
            task: None,
            path_dims: Vec::new(),
        }
    }
}

/// Input grid for the exact backend: explicit points or per-dimension resolutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points { points: Vec<Vec<f64>> },
    Uniform { per_dim: Vec<usize> },
}

impl GridSpec {
    pub fn build(&self, model: &SystemModel) -> Result<InputGrid> {
        match self {
            GridSpec::Points { points } => InputGrid::new(points.clone(), &model.input_box),
            GridSpec::Uniform { per_dim } => InputGrid::uniform(&model.input_box, per_dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub backend: Backend,
    /// Cap on master iterations of every loop.
    pub max_iterations: usize,
    /// Plan length; the formula horizon when absent.
    pub n_steps: Option<usize>,
    pub cost: CostSpec,
    pub grid: Option<GridSpec>,
    pub trace_cap: u128,
    pub search: SearchConfig,
    pub milp: SolveLimits,
    /// Margin every encoded literal must clear in the MILP backend.
    pub milp_margin: f64,
    pub couplings: Vec<Coupling>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            backend: Backend::Grid,
            max_iterations: 50,
            n_steps: None,
            cost: CostSpec::default(),
            grid: None,
            trace_cap: DEFAULT_TRACE_CAP,
            search: SearchConfig::default(),
            milp: SolveLimits::default(),
            milp_margin: DEFAULT_MARGIN,
            couplings: Vec::new(),
        }
    }
}

/// One line of the iteration log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub seq: usize,
    /// Index of the quantifier block the event belongs to.
    pub block: usize,
    pub iteration: usize,
    pub event: String,
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    pub candidates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<InputSequence>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub status: PlanStatus,
    pub backend: Backend,
    pub verification: Verification,
    /// Names of the slots in `inputs`.
    pub slots: Vec<String>,
    /// Witness inputs: the whole tuple for purely existential formulas,
    /// otherwise the leading existential block. Couplings already applied.
    pub inputs: Vec<InputSequence>,
    pub traces: Vec<Trace>,
    /// Robustness of the witness tuple, or the smallest robustness seen by the final check.
    pub robustness: Option<f64>,
    pub cost: Option<f64>,
    pub iterations: usize,
    pub message: Option<String>,
    pub log: Vec<IterationRecord>,
}

impl PlanResult {
    pub fn log_jsonl(&self) -> String {
        self.log
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Role of a slot within a query.
#[derive(Clone, Debug, PartialEq)]
pub enum Role {
    Fixed(InputSequence),
    /// Free; shared by every tuple.
    Decision,
    /// Ranges over the query's tuples.
    Universal,
    /// Free; chosen separately for every tuple.
    Completion,
}

/// Find decision inputs such that for every tuple some completion makes the
/// body (or its negation) hold with the backend's margin.
#[derive(Clone, Debug)]
pub struct Query {
    pub positive: bool,
    pub roles: Vec<Role>,
    /// One entry per `Universal` slot, in slot order.
    pub tuples: Vec<Vec<InputSequence>>,
    /// Minimize the cost of slot 0, which must be a decision.
    pub with_cost: bool,
}

impl Query {
    fn slots_with(&self, pred: impl Fn(&Role) -> bool) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&i| pred(&self.roles[i]))
            .collect()
    }

    pub fn decisions(&self) -> Vec<usize> {
        self.slots_with(|r| matches!(r, Role::Decision))
    }

    pub fn universals(&self) -> Vec<usize> {
        self.slots_with(|r| matches!(r, Role::Universal))
    }

    pub fn completions(&self) -> Vec<usize> {
        self.slots_with(|r| matches!(r, Role::Completion))
    }

    /// Tuples to iterate; a single empty tuple when nothing is universal.
    pub fn effective_tuples(&self) -> Vec<Vec<InputSequence>> {
        if self.universals().is_empty() {
            vec![Vec::new()]
        } else {
            self.tuples.clone()
        }
    }

    /// Inputs for every slot of one tuple with its completions.
    pub fn assemble(
        &self,
        decision: &[InputSequence],
        tuple: &[InputSequence],
        completion: &[InputSequence],
    ) -> Vec<InputSequence> {
        let (mut d, mut u, mut c) = (0, 0, 0);
        self.roles
            .iter()
            .map(|r| match r {
                Role::Fixed(x) => x.clone(),
                Role::Decision => {
                    d += 1;
                    decision[d - 1].clone()
                }
                Role::Universal => {
                    u += 1;
                    tuple[u - 1].clone()
                }
                Role::Completion => {
                    c += 1;
                    completion[c - 1].clone()
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryOutcome {
    Found {
        decision: Vec<InputSequence>,
        completions: Vec<Vec<InputSequence>>,
        rho: f64,
        cost: Option<f64>,
    },
    Infeasible {
        proven: bool,
    },
    Unknown(String),
}

/// Smallest robustness over the free suffix and an input tuple attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct CountOutcome {
    pub min_rho: f64,
    /// Inputs for the free suffix slots; empty when the suffix has no candidates.
    pub argmin: Vec<InputSequence>,
}

/// Verdict of the recursive check.
#[derive(Clone, Debug, PartialEq)]
pub enum Check {
    Holds { rho: Option<f64> },
    Fails { counterexample: Vec<InputSequence> },
    Exhausted(String),
}

/// Everything the backends need to evaluate a query.
pub(crate) struct Problem<'a> {
    pub model: &'a SystemModel,
    pub slots: Vec<TraceVar>,
    pub bodies: [Body; 2],
    pub monitors: [Monitor; 2],
    pub n_steps: usize,
    pub cost: &'a CostSpec,
    pub cost_dims: Vec<usize>,
    pub task_monitor: Option<Monitor>,
    pub couplings: &'a [Coupling],
    /// Robustness a query must exceed in the grid and stochastic backends.
    pub margin: f64,
}

impl Problem<'_> {
    fn idx(positive: bool) -> usize {
        usize::from(!positive)
    }

    pub fn body(&self, positive: bool) -> &Body {
        &self.bodies[Self::idx(positive)]
    }

    pub fn monitor(&self, positive: bool) -> &Monitor {
        &self.monitors[Self::idx(positive)]
    }

    pub fn rollout(&self, u: &InputSequence) -> Trace {
        self.model.rollout(&self.model.x0, u)
    }

    /// Coupled inputs and traces for a full tuple.
    pub fn effective(&self, inputs: Vec<InputSequence>) -> (Vec<InputSequence>, Vec<Trace>) {
        let mut inputs = inputs;
        let mut traces: Vec<Trace> = inputs.iter().map(|u| self.rollout(u)).collect();
        apply_couplings(self.model, self.couplings, &mut inputs, &mut traces);
        (inputs, traces)
    }

    /// Robustness of a full tuple with precomputed uncoupled traces.
    pub fn rho_of(&self, positive: bool, inputs: &[&InputSequence], traces: &[&Trace]) -> f64 {
        let r = if self.couplings.is_empty() {
            self.monitor(positive).robustness(traces, 0)
        } else {
            let (_, owned) = self.effective(inputs.iter().map(|u| (*u).clone()).collect());
            let refs: Vec<&Trace> = owned.iter().collect();
            self.monitor(positive).robustness(&refs, 0)
        };
        r.expect("traces cover the planning horizon")
    }

    pub fn path_cost(&self, tr: &Trace) -> f64 {
        let mut s = 0.0;
        for k in 1..tr.len() {
            let (a, b) = (tr.state(k - 1), tr.state(k));
            s += self
                .cost_dims
                .iter()
                .map(|&d| (b[d] - a[d]).powi(2))
                .sum::<f64>();
        }
        s
    }

    /// The planning cost of a first-slot trace.
    pub fn cost_of(&self, tr: &Trace) -> f64 {
        let a = self.cost.alpha;
        let task = match &self.task_monitor {
            Some(m) if a != 0.0 => {
                let refs = vec![tr; m.slots().len()];
                m.robustness(&refs, 0)
                    .expect("task fits the planning horizon")
            }
            _ => 0.0,
        };
        -a * task + (1.0 - a) * self.path_cost(tr)
    }

    pub fn milp_cost(&self) -> CostTerms {
        CostTerms {
            alpha: self.cost.alpha,
            task: self.cost.task.clone(),
            path_dims: self.cost_dims.clone(),
        }
    }
}

/// A backend answering master queries and universal checks.
pub(crate) trait Engine {
    fn solve(&mut self, p: &Problem, q: &Query) -> Result<QueryOutcome>;
    /// Minimizes robustness over slots `fixed.len()..`; `None` when the budget ran out undecided.
    fn count(
        &mut self,
        p: &Problem,
        fixed: &[InputSequence],
        positive: bool,
    ) -> Result<Option<CountOutcome>>;
    fn verification(&self) -> Verification;
}

fn same_tuple(a: &[InputSequence], b: &[InputSequence]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.distance(y) <= DEDUP_TOL)
}

/// Deduplicated store of adversarial tuples.
#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    items: Vec<Vec<InputSequence>>,
}

impl CandidateSet {
    /// Adds `t` unless an equal tuple is present; returns whether it was new.
    pub fn insert(&mut self, t: Vec<InputSequence>) -> bool {
        if self.items.iter().any(|x| same_tuple(x, &t)) {
            return false;
        }
        self.items.push(t);
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Vec<InputSequence>] {
        &self.items
    }
}

/// Planning session for one formula on one system.
pub struct Planner<'a> {
    formula: &'a HyperFormula,
    cfg: &'a PlannerConfig,
    problem: Problem<'a>,
    engine: Box<dyn Engine + 'a>,
    quantifiers: Vec<Quantifier>,
    blocks: Vec<Block>,
    log: Vec<IterationRecord>,
}

impl<'a> Planner<'a> {
    pub fn new(
        formula: &'a HyperFormula,
        model: &'a SystemModel,
        cfg: &'a PlannerConfig,
    ) -> Result<Self> {
        formula.validate()?;
        model.validate()?;
        if !formula.is_plannable() {
            return Err(Error::InvalidFormula(
                "planning needs a leading existential quantifier".into(),
            ));
        }
        let slots = formula.prefix.vars();
        let horizon = formula.horizon();
        let n_steps = cfg.n_steps.unwrap_or(horizon);
        if n_steps < horizon {
            return Err(Error::HorizonOverrun {
                t: 0,
                horizon,
                last: n_steps,
            });
        }
        for c in &cfg.couplings {
            c.validate(slots.len())?;
        }
        let cost_dims = if cfg.cost.path_dims.is_empty() {
            (0..model.n())
                .filter(|d| !model.wrap_dims().contains(d))
                .collect()
        } else {
            cfg.cost.path_dims.clone()
        };
        if let Some(&d) = cost_dims.iter().find(|&&d| d >= model.n()) {
            return Err(Error::Config(format!(
                "cost dimension {d} exceeds the state dimension"
            )));
        }
        let task_monitor = match &cfg.cost.task {
            Some(t) => {
                if crate::formula::horizon(t) > n_steps {
                    return Err(Error::HorizonOverrun {
                        t: 0,
                        horizon: crate::formula::horizon(t),
                        last: n_steps,
                    });
                }
                Some(Monitor::for_body(t)?)
            }
            None => None,
        };
        let neg = negate(&formula.body);
        let monitors = [
            Monitor::new(&formula.body, &slots)?,
            Monitor::new(&neg, &slots)?,
        ];
        let problem = Problem {
            model,
            slots,
            bodies: [formula.body.clone(), neg],
            monitors,
            n_steps,
            cost: &cfg.cost,
            cost_dims,
            task_monitor,
            couplings: &cfg.couplings,
            margin: 0.0,
        };
        let engine: Box<dyn Engine + 'a> = match cfg.backend {
            Backend::Grid => {
                let spec = cfg
                    .grid
                    .as_ref()
                    .ok_or_else(|| Error::Config("the grid backend needs an input grid".into()))?;
                Box::new(grid::GridEngine::new(
                    model,
                    &spec.build(model)?,
                    n_steps,
                    cfg.trace_cap,
                )?)
            }
            Backend::Milp => {
                if !model.is_affine() {
                    return Err(Error::Unsupported(
                        "the MILP backend needs affine dynamics".into(),
                    ));
                }
                if !cfg.couplings.is_empty() {
                    return Err(Error::Unsupported(
                        "the MILP backend does not support couplings".into(),
                    ));
                }
                Box::new(milp_engine::MilpEngine::new(cfg.milp, cfg.milp_margin))
            }
            Backend::Stochastic => {
                cfg.search.validate()?;
                Box::new(stochastic::CemEngine::new(cfg.search.clone()))
            }
        };
        Ok(Planner {
            formula,
            cfg,
            problem,
            engine,
            quantifiers: formula.prefix.quantifiers(),
            blocks: formula.prefix.alternation_blocks(),
            log: Vec::new(),
        })
    }

    pub fn n_steps(&self) -> usize {
        self.problem.n_steps
    }

    pub fn verification(&self) -> Verification {
        self.engine.verification()
    }

    pub fn log(&self) -> &[IterationRecord] {
        &self.log
    }

    fn record(
        &mut self,
        block: usize,
        iteration: usize,
        event: &str,
        outcome: &str,
    ) -> &mut IterationRecord {
        let seq = self.log.len();
        self.log.push(IterationRecord {
            seq,
            block,
            iteration,
            event: event.into(),
            outcome: outcome.into(),
            rho: None,
            cost: None,
            candidates: 0,
            counterexample: None,
        });
        log::debug!("block {block} iteration {iteration}: {event} -> {outcome}");
        self.log.last_mut().unwrap()
    }

    fn block_at(&self, slot: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.slots.contains(&slot))
            .expect("slot lies in a block")
    }

    /// Answers a master query with the configured backend.
    pub fn solve_plan(&mut self, q: &Query) -> Result<QueryOutcome> {
        if q.roles.len() != self.problem.slots.len() {
            return Err(Error::InvalidFormula(
                "query roles must cover every slot".into(),
            ));
        }
        if q.with_cost && q.roles.first() != Some(&Role::Decision) {
            return Err(Error::InvalidFormula(
                "a cost needs slot 0 to be a decision".into(),
            ));
        }
        self.engine.solve(&self.problem, q)
    }

    /// Smallest robustness over every completion of `fixed`.
    pub fn count_check(
        &mut self,
        fixed: &[InputSequence],
        positive: bool,
    ) -> Result<Option<CountOutcome>> {
        if fixed.len() >= self.problem.slots.len() {
            return Err(Error::InvalidFormula(
                "count check needs at least one free slot".into(),
            ));
        }
        self.engine.count(&self.problem, fixed, positive)
    }

    fn effective_q(&self, i: usize, positive: bool) -> Quantifier {
        if positive {
            self.quantifiers[i]
        } else {
            self.quantifiers[i].dual()
        }
    }

    /// Decides the formula from slot `fixed.len()` on, whose effective leading quantifier must be universal.
    /// The fixed prefix may end inside a block.
    ///
    /// With `positive = false` the body is negated and every quantifier dualized.
    pub fn check_hyper(&mut self, fixed: &[InputSequence], positive: bool) -> Result<Check> {
        let k = fixed.len();
        if k >= self.problem.slots.len() {
            return Err(Error::InvalidFormula(
                "check needs at least one free slot".into(),
            ));
        }
        let bi = self.block_at(k);
        if self.effective_q(k, positive) != Quantifier::Forall {
            return Err(Error::InvalidFormula(
                "check must start at a universal block".into(),
            ));
        }
        let n = self.problem.slots.len();
        let margin = self.problem.margin;
        if bi + 1 == self.blocks.len() {
            let out = self.count_check(fixed, positive)?;
            let r = self.record(bi, 0, "count_check", "");
            return Ok(match out {
                None => {
                    r.outcome = "unknown".into();
                    Check::Exhausted("universal check ran out of budget".into())
                }
                Some(c) if c.min_rho > margin => {
                    r.outcome = "holds".into();
                    r.rho = Some(c.min_rho);
                    Check::Holds {
                        rho: Some(c.min_rho),
                    }
                }
                Some(c) => {
                    r.outcome = "refuted".into();
                    r.rho = Some(c.min_rho);
                    r.counterexample = Some(c.argmin.clone());
                    Check::Fails {
                        counterexample: c.argmin,
                    }
                }
            });
        }
        let m = self.blocks[bi].slots.end;
        let p = self.blocks[bi + 1].slots.end;
        let fixed_roles = || fixed.iter().map(|u| Role::Fixed(u.clone()));
        // Seed an adversary for the negated remainder with later blocks relaxed to existentials.
        let seed = Query {
            positive: !positive,
            roles: fixed_roles()
                .chain((k..m).map(|_| Role::Decision))
                .chain((m..n).map(|_| Role::Completion))
                .collect(),
            tuples: Vec::new(),
            with_cost: false,
        };
        let mut w = match self.solve_plan(&seed)? {
            QueryOutcome::Found { decision, .. } => decision,
            QueryOutcome::Infeasible { .. } => {
                self.record(bi, 0, "seed", "no_adversary");
                return Ok(Check::Holds { rho: None });
            }
            QueryOutcome::Unknown(msg) => return Ok(Check::Exhausted(msg)),
        };
        self.record(bi, 0, "seed", "found");
        let mut replies = CandidateSet::default();
        for it in 1..=self.cfg.max_iterations {
            let mut sub = fixed.to_vec();
            sub.extend(w.iter().cloned());
            match self.check_hyper(&sub, !positive)? {
                Check::Holds { .. } => {
                    let r = self.record(bi, it, "adversary", "refutes");
                    r.counterexample = Some(w.clone());
                    return Ok(Check::Fails { counterexample: w });
                }
                Check::Exhausted(msg) => return Ok(Check::Exhausted(msg)),
                Check::Fails { counterexample } => {
                    if !replies.insert(counterexample) {
                        self.record(bi, it, "reply", "stalled");
                        return Ok(Check::Exhausted(
                            "counterexample search stalled on a repeated reply".into(),
                        ));
                    }
                }
            }
            let master = Query {
                positive: !positive,
                roles: fixed_roles()
                    .chain((k..m).map(|_| Role::Decision))
                    .chain((m..p).map(|_| Role::Universal))
                    .chain((p..n).map(|_| Role::Completion))
                    .collect(),
                tuples: replies.items().to_vec(),
                with_cost: false,
            };
            let out = self.solve_plan(&master)?;
            let r = self.record(bi, it, "adversary_master", "");
            r.candidates = replies.len();
            match out {
                QueryOutcome::Found { decision, .. } => {
                    r.outcome = "found".into();
                    w = decision;
                }
                QueryOutcome::Infeasible { .. } => {
                    r.outcome = "infeasible".into();
                    return Ok(Check::Holds { rho: None });
                }
                QueryOutcome::Unknown(msg) => {
                    r.outcome = "unknown".into();
                    return Ok(Check::Exhausted(msg));
                }
            }
        }
        Ok(Check::Exhausted(format!(
            "adversary loop hit {} iterations",
            self.cfg.max_iterations
        )))
    }

    fn all_decision_query(&self) -> Query {
        Query {
            positive: true,
            roles: vec![Role::Decision; self.problem.slots.len()],
            tuples: Vec::new(),
            with_cost: true,
        }
    }

    fn finish(
        &self,
        status: PlanStatus,
        inputs: Vec<InputSequence>,
        rho: Option<f64>,
        iterations: usize,
        message: Option<String>,
    ) -> PlanResult {
        let k = inputs.len();
        let (inputs, traces) = if k == self.problem.slots.len() {
            self.problem.effective(inputs)
        } else {
            let traces = inputs.iter().map(|u| self.problem.rollout(u)).collect();
            (inputs, traces)
        };
        let cost = traces.first().map(|t| self.problem.cost_of(t));
        let rho = if k == self.problem.slots.len() {
            let refs: Vec<&Trace> = traces.iter().collect();
            self.problem.monitor(true).robustness(&refs, 0).ok()
        } else {
            rho
        };
        PlanResult {
            status,
            backend: self.cfg.backend,
            verification: self.engine.verification(),
            slots: self.problem.slots[..k]
                .iter()
                .map(|v| v.0.clone())
                .collect(),
            inputs,
            traces,
            robustness: rho,
            cost,
            iterations,
            message,
            log: self.log.clone(),
        }
    }

    fn fail(
        &self,
        status: PlanStatus,
        iterations: usize,
        message: impl Into<String>,
    ) -> PlanResult {
        self.finish(status, Vec::new(), None, iterations, Some(message.into()))
    }

    /// Plans for the whole formula.
    pub fn plan(&mut self) -> Result<PlanResult> {
        self.plan_loop(false)
    }

    /// The single-alternation loop: the master against a universal check, no recursion.
    pub fn plan_depth_one(&mut self) -> Result<PlanResult> {
        if self.blocks.len() > 2 {
            return Err(Error::Unsupported(
                "the single-alternation loop needs at most one quantifier switch".into(),
            ));
        }
        self.plan_loop(true)
    }

    fn plan_loop(&mut self, depth_one: bool) -> Result<PlanResult> {
        self.log.clear();
        let n = self.problem.slots.len();
        let first = self.solve_plan(&self.all_decision_query())?;
        let decision = match first {
            QueryOutcome::Found {
                decision,
                cost,
                rho,
                ..
            } => {
                let r = self.record(0, 0, "solve_plan", "found");
                r.rho = Some(rho);
                r.cost = cost;
                decision
            }
            QueryOutcome::Infeasible { .. } => {
                self.record(0, 0, "solve_plan", "infeasible");
                return Ok(self.fail(
                    PlanStatus::Infeasible,
                    0,
                    "no input tuple satisfies the relaxed formula",
                ));
            }
            QueryOutcome::Unknown(msg) => {
                self.record(0, 0, "solve_plan", "unknown");
                return Ok(self.fail(PlanStatus::BudgetExhausted, 0, msg));
            }
        };
        if self.blocks.len() == 1 {
            return Ok(self.finish(PlanStatus::Feasible, decision, None, 0, None));
        }
        let m1 = self.blocks[0].slots.end;
        let p1 = self.blocks[1].slots.end;
        let mut u: Vec<InputSequence> = decision[..m1].to_vec();
        let mut cands = CandidateSet::default();
        cands.insert(decision[m1..p1].to_vec());
        for it in 1..=self.cfg.max_iterations {
            let verdict = if depth_one {
                match self.count_check(&u, true)? {
                    None => Check::Exhausted("universal check ran out of budget".into()),
                    Some(c) if c.min_rho > self.problem.margin => Check::Holds {
                        rho: Some(c.min_rho),
                    },
                    Some(c) => Check::Fails {
                        counterexample: c.argmin[..p1 - m1].to_vec(),
                    },
                }
            } else {
                self.check_hyper(&u, true)?
            };
            match verdict {
                Check::Holds { rho } => {
                    let r = self.record(0, it, "check", "holds");
                    r.rho = rho;
                    return Ok(self.finish(PlanStatus::Feasible, u, rho, it, None));
                }
                Check::Exhausted(msg) => {
                    return Ok(self.fail(PlanStatus::BudgetExhausted, it, msg))
                }
                Check::Fails { counterexample } => {
                    let fresh = cands.insert(counterexample.clone());
                    let r = self.record(
                        0,
                        it,
                        "check",
                        if fresh { "counterexample" } else { "stalled" },
                    );
                    r.counterexample = Some(counterexample);
                    if !fresh {
                        return Ok(self.fail(
                            PlanStatus::BudgetExhausted,
                            it,
                            "counterexample search stalled on a repeated tuple",
                        ));
                    }
                }
            }
            let master = Query {
                positive: true,
                roles: (0..m1)
                    .map(|_| Role::Decision)
                    .chain((m1..p1).map(|_| Role::Universal))
                    .chain((p1..n).map(|_| Role::Completion))
                    .collect(),
                tuples: cands.items().to_vec(),
                with_cost: true,
            };
            let out = self.solve_plan(&master)?;
            let r = self.record(0, it, "master", "");
            r.candidates = cands.len();
            match out {
                QueryOutcome::Found {
                    decision,
                    rho,
                    cost,
                    ..
                } => {
                    r.outcome = "found".into();
                    r.rho = Some(rho);
                    r.cost = cost;
                    u = decision;
                }
                QueryOutcome::Infeasible { .. } => {
                    r.outcome = "infeasible".into();
                    return Ok(self.fail(
                        PlanStatus::Infeasible,
                        it,
                        "no plan survives the collected counterexamples",
                    ));
                }
                QueryOutcome::Unknown(msg) => {
                    r.outcome = "unknown".into();
                    return Ok(self.fail(PlanStatus::BudgetExhausted, it, msg));
                }
            }
        }
        Ok(self.fail(
            PlanStatus::BudgetExhausted,
            self.cfg.max_iterations,
            format!("planning loop hit {} iterations", self.cfg.max_iterations),
        ))
    }

    pub fn formula(&self) -> &HyperFormula {
        self.formula
    }
}

/// Plans `formula` on `model` with `cfg`.
pub fn plan(
    formula: &HyperFormula,
    model: &SystemModel,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    Planner::new(formula, model, cfg)?.plan()
}

/// Runs the single-alternation loop.
pub fn plan_depth_one(
    formula: &HyperFormula,
    model: &SystemModel,
    cfg: &PlannerConfig,
) -> Result<PlanResult> {
    Planner::new(formula, model, cfg)?.plan_depth_one()
}

/// Checks whether fixed leading inputs satisfy the rest of the formula.
///
/// `Holds` carries the robustness only when the witness fills every slot.
pub fn verify_inputs(
    formula: &HyperFormula,
    model: &SystemModel,
    cfg: &PlannerConfig,
    fixed: &[InputSequence],
) -> Result<Check> {
    let mut pl = Planner::new(formula, model, cfg)?;
    if fixed.len() == formula.prefix.len() {
        let (_, traces) = pl.problem.effective(fixed.to_vec());
        let refs: Vec<&Trace> = traces.iter().collect();
        let rho = pl.problem.monitor(true).robustness(&refs, 0)?;
        return Ok(if rho > pl.problem.margin {
            Check::Holds { rho: Some(rho) }
        } else {
            Check::Fails {
                counterexample: Vec::new(),
            }
        });
    }
    if fixed.len() > formula.prefix.len() {
        return Err(Error::Config(
            "more fixed inputs than trace variables".into(),
        ));
    }
    if pl.effective_q(fixed.len(), true) == Quantifier::Forall {
        return pl.check_hyper(fixed, true);
    }
    // An existential remainder holds iff its negation, checked universally, fails.
    Ok(match pl.check_hyper(fixed, false)? {
        Check::Holds { .. } => Check::Fails {
            counterexample: Vec::new(),
        },
        Check::Fails { counterexample } => {
            let mut all = fixed.to_vec();
            all.extend(counterexample);
            let rho = if all.len() == formula.prefix.len() {
                let (_, traces) = pl.problem.effective(all);
                let refs: Vec<&Trace> = traces.iter().collect();
                Some(pl.problem.monitor(true).robustness(&refs, 0)?)
            } else {
                None
            };
            Check::Holds { rho }
        }
        e @ Check::Exhausted(_) => e,
    })
}

#[cfg(test)]
mod tests;
