//! Exhaustive backend over the rollouts of a finite input grid.

use super::{CountOutcome, Engine, Problem, Query, QueryOutcome, Verification};
use crate::oracle::{enumerate_traces_capped, TraceSet};
use crate::semantics::Trace;
use crate::system::{InputGrid, InputSequence, SystemModel};
use crate::Result;

pub(crate) struct GridEngine {
    set: TraceSet,
}

/// Calls `f` on every `k`-digit index vector whose digit `i` ranges over `orders[i]`,
/// most significant digit first, until `f` returns `true`.
fn odometer(orders: &[&[usize]], mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if orders.iter().any(|o| o.is_empty()) {
        return false;
    }
    let k = orders.len();
    let mut pos = vec![0usize; k];
    let mut digits: Vec<usize> = orders.iter().map(|o| o[0]).collect();
    loop {
        if f(&digits) {
            return true;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < orders[i].len() {
                digits[i] = orders[i][pos[i]];
                break;
            }
            pos[i] = 0;
            digits[i] = orders[i][0];
        }
    }
}

impl GridEngine {
    pub fn new(model: &SystemModel, grid: &InputGrid, n_steps: usize, cap: u128) -> Result<Self> {
        Ok(GridEngine {
            set: enumerate_traces_capped(model, grid, n_steps, cap)?,
        })
    }
}

struct Slots<'s> {
    inputs: Vec<Option<&'s InputSequence>>,
    traces: Vec<Option<&'s Trace>>,
}

/// Robustness of the tuple in `s` with completion `c` filled in, if it clears the margin.
fn try_tuple<'s>(
    p: &Problem,
    positive: bool,
    comp: &[usize],
    set: &'s TraceSet,
    c: &[usize],
    s: &mut Slots<'s>,
) -> Option<f64> {
    for (j, &slot) in comp.iter().enumerate() {
        s.inputs[slot] = Some(&set.inputs[c[j]]);
        s.traces[slot] = Some(&set.traces[c[j]]);
    }
    let ins: Vec<&InputSequence> = s.inputs.iter().map(|x| x.unwrap()).collect();
    let trs: Vec<&Trace> = s.traces.iter().map(|x| x.unwrap()).collect();
    let r = p.rho_of(positive, &ins, &trs);
    (r > p.margin).then_some(r)
}

impl Engine for GridEngine {
    fn solve(&mut self, p: &Problem, q: &Query) -> Result<QueryOutcome> {
        let n = q.roles.len();
        let all: Vec<usize> = (0..self.set.len()).collect();
        let dec = q.decisions();
        let uni = q.universals();
        let comp = q.completions();
        let fixed: Vec<Option<(InputSequence, Trace)>> = q
            .roles
            .iter()
            .map(|r| match r {
                super::Role::Fixed(u) => Some((u.clone(), p.rollout(u))),
                _ => None,
            })
            .collect();
        let tuples: Vec<Vec<(InputSequence, Trace)>> = q
            .effective_tuples()
            .iter()
            .rev()
            .map(|t| t.iter().map(|u| (u.clone(), p.rollout(u))).collect())
            .collect();
        let mut first = all.clone();
        if q.with_cost {
            let costs: Vec<f64> = self.set.traces.iter().map(|t| p.cost_of(t)).collect();
            first.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        }
        let dec_orders: Vec<&[usize]> = (0..dec.len())
            .map(|i| {
                if i == 0 && q.with_cost {
                    &first[..]
                } else {
                    &all[..]
                }
            })
            .collect();
        let comp_orders: Vec<&[usize]> = vec![&all[..]; comp.len()];
        let set = &self.set;
        let mut base = Slots {
            inputs: vec![None; n],
            traces: vec![None; n],
        };
        for (i, f) in fixed.iter().enumerate() {
            if let Some((u, t)) = f {
                base.inputs[i] = Some(u);
                base.traces[i] = Some(t);
            }
        }
        let mut found: Option<(Vec<usize>, Vec<Vec<usize>>, f64)> = None;
        odometer(&dec_orders, |d| {
            let mut s = Slots {
                inputs: base.inputs.clone(),
                traces: base.traces.clone(),
            };
            for (j, &slot) in dec.iter().enumerate() {
                s.inputs[slot] = Some(&set.inputs[d[j]]);
                s.traces[slot] = Some(&set.traces[d[j]]);
            }
            let mut completions = Vec::with_capacity(tuples.len());
            let mut worst = f64::INFINITY;
            for t in &tuples {
                for (j, &slot) in uni.iter().enumerate() {
                    s.inputs[slot] = Some(&t[j].0);
                    s.traces[slot] = Some(&t[j].1);
                }
                let mut hit: Option<(Vec<usize>, f64)> = None;
                if comp.is_empty() {
                    if let Some(r) = try_tuple(p, q.positive, &comp, set, &[], &mut s) {
                        hit = Some((Vec::new(), r));
                    }
                } else {
                    odometer(&comp_orders, |c| {
                        if let Some(r) = try_tuple(p, q.positive, &comp, set, c, &mut s) {
                            hit = Some((c.to_vec(), r));
                            true
                        } else {
                            false
                        }
                    });
                }
                match hit {
                    Some((c, r)) => {
                        completions.push(c);
                        worst = worst.min(r);
                    }
                    None => return false,
                }
            }
            completions.reverse();
            found = Some((d.to_vec(), completions, worst));
            true
        });
        Ok(match found {
            Some((d, cs, rho)) => {
                let decision: Vec<InputSequence> =
                    d.iter().map(|&i| set.inputs[i].clone()).collect();
                let cost = (q.with_cost).then(|| p.cost_of(&set.traces[d[0]]));
                let completions = cs
                    .iter()
                    .map(|c| c.iter().map(|&i| set.inputs[i].clone()).collect())
                    .collect();
                QueryOutcome::Found {
                    decision,
                    completions,
                    rho,
                    cost,
                }
            }
            None => QueryOutcome::Infeasible { proven: true },
        })
    }

    fn count(
        &mut self,
        p: &Problem,
        fixed: &[InputSequence],
        positive: bool,
    ) -> Result<Option<CountOutcome>> {
        let n = p.slots.len();
        let k = fixed.len();
        let ftr: Vec<Trace> = fixed.iter().map(|u| p.rollout(u)).collect();
        let all: Vec<usize> = (0..self.set.len()).collect();
        let orders: Vec<&[usize]> = vec![&all[..]; n - k];
        let set = &self.set;
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut ins: Vec<&InputSequence> = fixed.iter().collect();
        let mut trs: Vec<&Trace> = ftr.iter().collect();
        odometer(&orders, |c| {
            ins.truncate(k);
            trs.truncate(k);
            ins.extend(c.iter().map(|&i| &set.inputs[i]));
            trs.extend(c.iter().map(|&i| &set.traces[i]));
            let r = p.rho_of(positive, &ins, &trs);
            if best.as_ref().is_none_or(|b| r < b.1) {
                best = Some((c.to_vec(), r));
            }
            false
        });
        Ok(Some(match best {
            Some((c, r)) => CountOutcome {
                min_rho: r,
                argmin: c.iter().map(|&i| set.inputs[i].clone()).collect(),
            },
            None => CountOutcome {
                min_rho: f64::INFINITY,
                argmin: Vec::new(),
            },
        }))
    }

    fn verification(&self) -> Verification {
        Verification::Exact
    }
}

#[cfg(test)]
mod tests {
    use super::odometer;

    #[test]
    fn odometer_order() {
        let a = [0usize, 1];
        let b = [2usize, 0, 1];
        let mut seen = Vec::new();
        odometer(&[&a, &b], |d| {
            seen.push(d.to_vec());
            false
        });
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![0, 2]);
        assert_eq!(seen[1], vec![0, 0]);
        assert_eq!(seen[3], vec![1, 2]);
        let mut calls = 0;
        assert!(odometer(&[], |_| {
            calls += 1;
            true
        }));
        assert_eq!(calls, 1);
    }
}
