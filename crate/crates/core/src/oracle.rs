//! Exact evaluation of quantified formulas over finite trace sets.

use serde::Serialize;

use crate::formula::{HyperFormula, Quantifier};
use crate::semantics::{Monitor, Trace};
use crate::system::{InputGrid, InputSequence, SystemModel};
use crate::{Error, Result};

/// Default bound on `|grid|^N`.
pub const DEFAULT_TRACE_CAP: u128 = 100_000;

/// Traces paired with the inputs that generated them.
#[derive(Clone, Debug, Default)]
pub struct TraceSet {
    pub inputs: Vec<InputSequence>,
    pub traces: Vec<Trace>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// All rollouts from the model's `x0` over every length-`n` grid sequence.
///
/// Rollouts that leave the state box are not traces of the system and are dropped.
pub fn enumerate_traces(model: &SystemModel, grid: &InputGrid, n: usize) -> Result<TraceSet> {
    enumerate_traces_capped(model, grid, n, DEFAULT_TRACE_CAP)
}

pub fn enumerate_traces_capped(
    model: &SystemModel,
    grid: &InputGrid,
    n: usize,
    cap: u128,
) -> Result<TraceSet> {
    let count = grid.sequence_count(n);
    if count > cap {
        return Err(Error::TooLarge(count, cap));
    }
    let mut set = TraceSet::default();
    let mut dropped = 0usize;
    for u in grid.sequences(n) {
        let tr = model.rollout(&model.x0, &u);
        if model.stays_in_box(&tr) {
            set.inputs.push(u);
            set.traces.push(tr);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::debug!("dropped {dropped} of {count} rollouts that leave the state box");
    }
    Ok(set)
}

/// Outcome of an exact check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    /// Trace indices chosen for the leading decisive quantifiers: witnesses
    /// of true existentials and refutations of false universals, in prefix
    /// order, stopping at the first quantifier with no single decisive choice.
    pub assignment: Vec<usize>,
}

/// Decides `formula` with every trace variable ranging over `traces`.
pub fn eval_hyper(formula: &HyperFormula, traces: &[Trace]) -> Result<Verdict> {
    eval_hyper_fixed(formula, traces, &[])
}

/// As [`eval_hyper`] with the first `fixed.len()` quantified variables bound to `fixed`.
pub fn eval_hyper_fixed(
    formula: &HyperFormula,
    traces: &[Trace],
    fixed: &[&Trace],
) -> Result<Verdict> {
    let vars = formula.prefix.vars();
    if fixed.len() > vars.len() {
        return Err(Error::InvalidFormula(
            "more fixed traces than quantified variables".into(),
        ));
    }
    let monitor = Monitor::new(&formula.body, &vars)?;
    let qs = formula.prefix.quantifiers();
    let mut slots: Vec<&Trace> = fixed.to_vec();
    if slots.len() == vars.len() {
        let holds = monitor.eval_bool(&slots, 0)?;
        return Ok(Verdict {
            holds,
            assignment: Vec::new(),
        });
    }
    if traces.is_empty() {
        // Empty domain: existentials fail, universals hold vacuously.
        return Ok(Verdict {
            holds: qs[fixed.len()] == Quantifier::Forall,
            assignment: Vec::new(),
        });
    }
    let mut path = Vec::new();
    let holds = expand(&monitor, &qs, traces, &mut slots, &mut path)?;
    Ok(Verdict {
        holds,
        assignment: path,
    })
}

fn expand<'a>(
    monitor: &Monitor,
    qs: &[Quantifier],
    traces: &'a [Trace],
    slots: &mut Vec<&'a Trace>,
    path: &mut Vec<usize>,
) -> Result<bool> {
    let k = slots.len();
    if k == qs.len() {
        return monitor.eval_bool(slots, 0);
    }
    // An existential succeeds on the first witness, a universal fails on the first refutation.
    let decisive = qs[k] == Quantifier::Exists;
    let mark = path.len();
    for (i, tr) in traces.iter().enumerate() {
        slots.push(tr);
        path.truncate(mark);
        path.push(i);
        let v = expand(monitor, qs, traces, slots, path)?;
        slots.pop();
        if v == decisive {
            return Ok(decisive);
        }
    }
    path.truncate(mark);
    Ok(!decisive)
}
