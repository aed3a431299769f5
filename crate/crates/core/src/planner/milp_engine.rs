//! Mixed-integer backend for affine systems.

use super::{CountOutcome, Engine, Problem, Query, QueryOutcome, Role, Verification};
use crate::milp::{
    encode, solve, Direction, LinExpr, MilpBuilder, MilpStatus, Objective, SolveLimits, TraceHandle,
};
use crate::semantics::Trace;
use crate::system::InputSequence;
use crate::{Error, Result};

pub(crate) struct MilpEngine {
    limits: SolveLimits,
    margin: f64,
}

impl MilpEngine {
    pub fn new(limits: SolveLimits, margin: f64) -> Self {
        MilpEngine { limits, margin }
    }
}

fn tuple_rho(p: &Problem, positive: bool, inputs: &[InputSequence]) -> f64 {
    let traces: Vec<Trace> = inputs.iter().map(|u| p.rollout(u)).collect();
    let refs: Vec<&Trace> = traces.iter().collect();
    p.monitor(positive)
        .robustness(&refs, 0)
        .expect("traces cover the horizon")
}

impl Engine for MilpEngine {
    fn solve(&mut self, p: &Problem, q: &Query) -> Result<QueryOutcome> {
        let mut b = MilpBuilder::new(p.model, p.n_steps)?;
        let mut shared: Vec<Option<TraceHandle>> = Vec::with_capacity(q.roles.len());
        for r in &q.roles {
            shared.push(match r {
                Role::Fixed(u) => Some(b.add_fixed_input_trace(u)?),
                Role::Decision => Some(b.add_decision_trace()),
                _ => None,
            });
        }
        let tuples = q.effective_tuples();
        let mut per_tuple: Vec<Vec<TraceHandle>> = Vec::with_capacity(tuples.len());
        for t in &tuples {
            let mut u = t.iter();
            let mut handles = Vec::with_capacity(q.roles.len());
            for (i, r) in q.roles.iter().enumerate() {
                handles.push(match r {
                    Role::Universal => {
                        b.add_fixed_input_trace(u.next().expect("tuple covers universal slots"))?
                    }
                    Role::Completion => b.add_decision_trace(),
                    _ => shared[i].unwrap(),
                });
            }
            b.require(p.body(q.positive), &p.slots, &handles, self.margin)?;
            per_tuple.push(handles);
        }
        let objective = if q.with_cost {
            b.cost(&p.milp_cost(), shared[0].unwrap())?
        } else {
            LinExpr::default()
        };
        b.set_objective(objective, Direction::Minimize);
        let sol = solve(b.problem(), self.limits)?;
        if sol.status == MilpStatus::Infeasible {
            return Ok(QueryOutcome::Infeasible { proven: true });
        }
        if sol.values.is_empty() {
            return Ok(QueryOutcome::Unknown(format!(
                "MILP stopped after {} nodes without an incumbent",
                sol.nodes
            )));
        }
        let dec = |h: TraceHandle| b.decode(h, &sol.values).expect("decision trace decodes");
        let decision: Vec<InputSequence> = q
            .decisions()
            .iter()
            .map(|&i| dec(shared[i].unwrap()))
            .collect();
        let comp_slots = q.completions();
        let mut completions = Vec::with_capacity(tuples.len());
        let mut rho = f64::INFINITY;
        for (t, handles) in tuples.iter().zip(&per_tuple) {
            let c: Vec<InputSequence> = comp_slots.iter().map(|&i| dec(handles[i])).collect();
            rho = rho.min(tuple_rho(p, q.positive, &q.assemble(&decision, t, &c)));
            completions.push(c);
        }
        let cost = q.with_cost.then(|| p.cost_of(&p.rollout(&decision[0])));
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
        let n = p.slots.len();
        let mut f: Vec<Option<InputSequence>> = fixed.iter().cloned().map(Some).collect();
        f.resize(n, None);
        let enc = encode(
            p.body(positive),
            p.model,
            &p.slots,
            p.n_steps,
            &f,
            &Objective::MinRobustness,
            self.margin,
        )?;
        let sol = solve(enc.problem(), self.limits)?;
        match sol.status {
            MilpStatus::Infeasible => Err(Error::Solver(
                "robustness minimization reported infeasible".into(),
            )),
            MilpStatus::IterationLimit => {
                // An incumbent still refutes when its true robustness is low enough.
                if sol.values.is_empty() {
                    return Ok(None);
                }
                let argmin: Vec<InputSequence> =
                    enc.decode(&sol.values).into_iter().flatten().collect();
                let mut all = fixed.to_vec();
                all.extend(argmin.iter().cloned());
                let r = tuple_rho(p, positive, &all);
                Ok((r <= p.margin).then_some(CountOutcome { min_rho: r, argmin }))
            }
            MilpStatus::Optimal => {
                let argmin: Vec<InputSequence> =
                    enc.decode(&sol.values).into_iter().flatten().collect();
                let mut all = fixed.to_vec();
                all.extend(argmin.iter().cloned());
                let r = tuple_rho(p, positive, &all);
                if (r - sol.objective).abs() > 1e-6 * (1.0 + r.abs()) {
                    log::warn!(
                        "encoded minimum {} differs from monitored robustness {r}",
                        sol.objective
                    );
                }
                Ok(Some(CountOutcome {
                    min_rho: sol.objective.min(r),
                    argmin,
                }))
            }
        }
    }

    fn verification(&self) -> Verification {
        Verification::Milp
    }
}
