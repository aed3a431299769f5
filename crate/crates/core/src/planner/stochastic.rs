//! Budgeted backend built on the cross-entropy search.

use std::collections::HashMap;

use super::{CountOutcome, Engine, Problem, Query, QueryOutcome, Role, Verification};
use crate::formula::{Body, TraceVar};
use crate::optimizer::{
    block_count, cem, expand_blocks, refine_chunks, Score, SearchConfig, SearchSpace,
};
use crate::semantics::Monitor;
use crate::semantics::Trace;
use crate::system::InputSequence;
use crate::Result;

/// The body split along its top-level `and`/`or` structure.
///
/// Robustness combines the leaves with min/max exactly as the monitor does.
/// The violation sums over conjuncts and takes the best disjunct, so it
/// keeps improving while the smallest conjunct is stuck.
enum Shaped {
    Leaf(Monitor),
    And(Vec<Shaped>),
    Or(Vec<Shaped>),
}

impl Shaped {
    fn build(body: &Body, slots: &[TraceVar]) -> Self {
        let all = |bs: &[Body]| bs.iter().map(|b| Shaped::build(b, slots)).collect();
        match body {
            Body::And(bs) => Shaped::And(all(bs)),
            Body::Or(bs) => Shaped::Or(all(bs)),
            Body::Implies(a, b) => Shaped::Or(all(&[Body::not((**a).clone()), (**b).clone()])),
            b => Shaped::Leaf(Monitor::new(b, slots).expect("sub-formula of a valid body")),
        }
    }

    /// `(robustness, violation)` at time 0.
    fn eval(&self, traces: &[&Trace]) -> (f64, f64) {
        match self {
            Shaped::Leaf(m) => {
                let r = m.robustness(traces, 0).expect("traces cover the horizon");
                (r, (-r).max(0.0))
            }
            Shaped::And(xs) => xs
                .iter()
                .map(|x| x.eval(traces))
                .fold((f64::INFINITY, 0.0), |a, b| (a.0.min(b.0), a.1 + b.1)),
            Shaped::Or(xs) => xs
                .iter()
                .map(|x| x.eval(traces))
                .fold((f64::NEG_INFINITY, f64::INFINITY), |a, b| {
                    (a.0.max(b.0), a.1.min(b.1))
                }),
        }
    }
}

/// Weight of the plain robustness next to the violation in infeasible keys.
const RHO_WEIGHT: f64 = 1e-3;

/// Fresh leaders tried by the staged fallback.
const STAGED_ATTEMPTS: usize = 3;

pub(crate) struct CemEngine {
    cfg: SearchConfig,
    calls: u64,
    /// Last best vector per query shape, reused as a warm start.
    warm: HashMap<String, Vec<f64>>,
    shapes: [Option<Shaped>; 2],
}

impl CemEngine {
    pub fn new(cfg: SearchConfig) -> Self {
        CemEngine {
            cfg,
            calls: 0,
            warm: HashMap::new(),
            shapes: [None, None],
        }
    }

    fn shape(&mut self, p: &Problem, positive: bool) {
        let i = usize::from(!positive);
        if self.shapes[i].is_none() {
            self.shapes[i] = Some(Shaped::build(p.body(positive), &p.slots));
        }
    }

    fn next_cfg(&mut self) -> SearchConfig {
        let mut c = self.cfg.clone();
        c.seed = self
            .cfg
            .seed
            .wrapping_add(self.calls.wrapping_mul(1_000_003));
        self.calls += 1;
        c
    }

    fn per_trace(&self, p: &Problem) -> usize {
        block_count(p.n_steps, self.cfg.block_len) * p.model.m()
    }

    /// A warm vector of length `d`: the stored prefix, padded by repeating its last trace.
    fn warm_start(&self, key: &str, d: usize, w: usize) -> Option<Vec<f64>> {
        let prev = self.warm.get(key)?;
        if prev.len() < w {
            return None;
        }
        let mut out = prev[..prev.len().min(d)].to_vec();
        let tail = prev[prev.len() - w..].to_vec();
        while out.len() < d {
            out.extend_from_slice(&tail);
        }
        out.truncate(d);
        Some(out)
    }
}

fn split(p: &Problem, block: usize, x: &[f64], count: usize) -> Vec<InputSequence> {
    let w = block_count(p.n_steps, block) * p.model.m();
    (0..count)
        .map(|i| expand_blocks(&x[i * w..(i + 1) * w], p.model.m(), p.n_steps, block))
        .collect()
}

/// The top-level conjuncts of `body` that mention only the first slot.
fn own_conjuncts(body: &Body, slots: &[TraceVar]) -> Option<Body> {
    fn flatten<'b>(b: &'b Body, out: &mut Vec<&'b Body>) {
        match b {
            Body::And(bs) => bs.iter().for_each(|x| flatten(x, out)),
            x => out.push(x),
        }
    }
    let mut parts = Vec::new();
    flatten(body, &mut parts);
    let own: Vec<Body> = parts
        .into_iter()
        .filter(|b| b.vars().iter().all(|v| *v == slots[0]))
        .cloned()
        .collect();
    (!own.is_empty()).then(|| Body::and(own))
}

/// Robustness with the state box folded in: leaving the box counts as a violation of size `-margin`.
fn penalized(rho: f64, box_margin: f64, maximize: bool) -> f64 {
    match (box_margin < 0.0, maximize) {
        (false, _) => rho,
        (true, true) => rho.min(box_margin),
        (true, false) => rho.max(-box_margin),
    }
}

impl Engine for CemEngine {
    fn solve(&mut self, p: &Problem, q: &Query) -> Result<QueryOutcome> {
        let cfg = self.next_cfg();
        let w = self.per_trace(p);
        let block = self.cfg.block_len;
        let dec = q.decisions();
        let comp = q.completions();
        let tuples = q.effective_tuples();
        let n_dec = dec.len();
        let n_comp = comp.len();
        let d = w * (n_dec + n_comp * tuples.len());
        let free: Vec<bool> = q
            .roles
            .iter()
            .map(|r| matches!(r, Role::Decision | Role::Completion))
            .collect();
        self.shape(p, q.positive);
        let shaped = self.shapes[usize::from(!q.positive)]
            .as_ref()
            .expect("built above");
        let unpack = |x: &[f64]| -> (Vec<InputSequence>, Vec<Vec<InputSequence>>) {
            let decision = split(p, block, &x[..w * n_dec], n_dec);
            let completions = (0..tuples.len())
                .map(|t| {
                    let off = w * (n_dec + n_comp * t);
                    split(p, block, &x[off..off + w * n_comp], n_comp)
                })
                .collect();
            (decision, completions)
        };
        // Worst penalized robustness over tuples with the summed violation; the first-slot trace rides along.
        let measure = |x: &[f64]| -> (f64, f64, Option<Trace>) {
            let (decision, completions) = unpack(x);
            let mut worst = f64::INFINITY;
            let mut violation = 0.0;
            let mut first = None;
            for (t, c) in tuples.iter().zip(&completions) {
                let (_, traces) = p.effective(q.assemble(&decision, t, c));
                let refs: Vec<&Trace> = traces.iter().collect();
                let (rho, v) = shaped.eval(&refs);
                let bm = traces
                    .iter()
                    .zip(&free)
                    .filter(|(_, f)| **f)
                    .map(|(tr, _)| p.model.box_margin(tr))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.min(penalized(rho, bm, true));
                violation += v + (-bm).max(0.0);
                if first.is_none() {
                    first = traces.into_iter().next();
                }
            }
            (worst, violation, first)
        };
        let margin = p.margin;
        let with_cost = q.with_cost;
        let eval = |x: &[f64]| -> Score {
            let (c, v, first) = measure(x);
            if c > margin {
                if with_cost {
                    Score::feasible(p.cost_of(first.as_ref().expect("slot 0 exists")))
                } else {
                    Score::feasible(-c)
                }
            } else {
                Score::infeasible(v - RHO_WEIGHT * c)
            }
        };
        let key = format!(
            "solve:{}:{:?}",
            q.positive,
            q.roles
                .iter()
                .map(|r| matches!(r, Role::Fixed(_)))
                .collect::<Vec<_>>()
        );
        let warm = self.warm_start(&key, d, w);
        let space =
            SearchSpace::repeated(&p.model.input_box, d / p.model.m(), cfg.init_std.as_deref());
        let stop_feasible = |s: &Score| s.feasible;
        let never = |_: &Score| false;
        let stop: &(dyn Fn(&Score) -> bool + Sync) =
            if with_cost { &never } else { &stop_feasible };
        let mut out = cem(&space, &cfg, warm.as_deref(), eval, stop);
        let chunks = d / w.max(1);
        if !out.score.feasible && chunks > 1 {
            out = refine_chunks(
                &space,
                &cfg,
                out,
                w,
                &[],
                cfg.refine_rounds,
                eval,
                &stop_feasible,
            );
        }
        // Staged fallback: settle the first trace on its own conjuncts, then fit the rest around it.
        if !out.score.feasible && chunks > 1 && q.roles[0] == Role::Decision {
            if let Some(own) = own_conjuncts(p.body(q.positive), &p.slots) {
                let own = Shaped::build(&own, &p.slots);
                let spread =
                    |x1: &[f64]| -> Vec<f64> { x1.iter().copied().cycle().take(d).collect() };
                let solo = |x1: &[f64]| -> Score {
                    let u = split(p, block, x1, 1).pop().expect("one trace");
                    let tr = p.rollout(&u);
                    let refs = vec![&tr; p.slots.len()];
                    let (rho, v) = own.eval(&refs);
                    let rho = penalized(rho, p.model.box_margin(&tr), true);
                    if rho > margin {
                        Score::feasible(-rho)
                    } else {
                        Score::infeasible(v - RHO_WEIGHT * rho)
                    }
                };
                let sub = SearchSpace::repeated(
                    &p.model.input_box,
                    w / p.model.m(),
                    cfg.init_std.as_deref(),
                );
                for attempt in 0..STAGED_ATTEMPTS {
                    if out.score.feasible {
                        break;
                    }
                    let mut lead_cfg = cfg.clone();
                    lead_cfg.seed = cfg.seed.wrapping_add(attempt as u64 * 7919);
                    let first = cem(&sub, &lead_cfg, None, solo, &never);
                    if first.score.feasible {
                        // The rest move together: a guard binds them inside one temporal leaf.
                        let lead = &first.x;
                        let joined =
                            |y: &[f64]| -> Vec<f64> { lead.iter().chain(y).copied().collect() };
                        let rest = SearchSpace::repeated(
                            &p.model.input_box,
                            (d - w) / p.model.m(),
                            cfg.init_std.as_deref(),
                        );
                        let tail = spread(lead)[w..].to_vec();
                        let found = cem(
                            &rest,
                            &cfg,
                            Some(&tail),
                            |y: &[f64]| eval(&joined(y)),
                            &stop_feasible,
                        );
                        let x = joined(&found.x);
                        let staged = crate::optimizer::SearchOutcome { x, ..found };
                        if staged.score.better_than(&out.score) {
                            out = staged;
                        }
                    }
                }
                if out.score.feasible && with_cost {
                    let mut polish = cfg.clone();
                    polish.restarts = 1;
                    let p2 = cem(&space, &polish, Some(&out.x), eval, &never);
                    if p2.score.better_than(&out.score) {
                        out = p2;
                    }
                }
            }
        }
        let (decision, completions) = unpack(&out.x);
        let (rho, _, first) = measure(&out.x);
        self.warm.insert(key, out.x);
        if !out.score.feasible {
            return Ok(QueryOutcome::Infeasible { proven: false });
        }
        let cost = with_cost.then(|| p.cost_of(first.as_ref().unwrap()));
        Ok(QueryOutcome::Found {
            decision,
            completions,
            rho,
            cost,
        })
    }

    fn count(
        &mut self,
        p: &Problem,
        fixed: &[InputSequence],
        positive: bool,
    ) -> Result<Option<CountOutcome>> {
        let cfg = self.next_cfg();
        let w = self.per_trace(p);
        let block = self.cfg.block_len;
        let k = fixed.len();
        let free = p.slots.len() - k;
        let d = w * free;
        let measure = |x: &[f64]| -> (f64, f64, Vec<InputSequence>) {
            let suffix = split(p, block, x, free);
            let mut all = fixed.to_vec();
            all.extend(suffix.iter().cloned());
            let (_, traces) = p.effective(all);
            let refs: Vec<&Trace> = traces.iter().collect();
            let rho = p
                .monitor(positive)
                .robustness(&refs, 0)
                .expect("traces cover the horizon");
            let bm = traces[k..]
                .iter()
                .map(|tr| p.model.box_margin(tr))
                .fold(f64::INFINITY, f64::min);
            (rho, bm, suffix)
        };
        let eval = |x: &[f64]| {
            let (rho, bm, _) = measure(x);
            Score::feasible(penalized(rho, bm, false))
        };
        let margin = p.margin;
        let stop = move |s: &Score| s.key <= margin;
        let key = format!("count:{positive}:{k}");
        let warm = self.warm_start(&key, d, w);
        let space =
            SearchSpace::repeated(&p.model.input_box, d / p.model.m(), cfg.init_std.as_deref());
        let out = cem(&space, &cfg, warm.as_deref(), eval, &stop);
        let (_, _, argmin) = measure(&out.x);
        self.warm.insert(key, out.x);
        Ok(Some(CountOutcome {
            min_rho: out.score.key,
            argmin,
        }))
    }

    fn verification(&self) -> Verification {
        Verification::Budgeted
    }
}
