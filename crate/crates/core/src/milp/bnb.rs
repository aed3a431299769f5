//! Best-first branch-and-bound over LP relaxations.
//!
//! Relaxations are solved by `microlp` with every binary relaxed to `[0, 1]`.
//! Children re-solve from their parent's basis by fixing the branching
//! variable, which runs a warm-started dual simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, SolveOutcome, Variable};
use serde::{Deserialize, Serialize};

use super::{Cmp, Direction, MilpProblem, VarKind, FEAS_TOL, INT_TOL};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

/// Node and wall-clock budgets for one solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub max_nodes: usize,
    #[serde(with = "secs")]
    pub time_limit: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: 100_000,
            time_limit: Duration::from_secs(60),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Variable values; the incumbent (if any) under `IterationLimit`, empty when infeasible.
    pub values: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    sol: Solution,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // Max-heap: smallest bound first, then deepest, then oldest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&o.depth))
            .then(o.seq.cmp(&self.seq))
    }
}

struct Lp {
    problem: Problem,
    vars: Vec<Variable>,
    sign: f64,
}

fn build_lp(p: &MilpProblem, fix: Option<&[f64]>) -> Lp {
    let sign = if p.direction == Direction::Maximize {
        -1.0
    } else {
        1.0
    };
    let mut obj = vec![0.0; p.vars.len()];
    for &(v, c) in &p.objective.normalized().terms {
        obj[v] += sign * c;
    }
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let vars = p
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| match (v.kind, fix) {
            (VarKind::Binary, Some(vals)) => {
                let r = vals[i].round().clamp(0.0, 1.0);
                problem.add_var(obj[i], (r, r))
            }
            _ => problem.add_var(obj[i], (v.lo, v.hi)),
        })
        .collect::<Vec<_>>();
    for c in &p.constraints {
        let op = match c.cmp {
            Cmp::Le => ComparisonOp::Le,
            Cmp::Ge => ComparisonOp::Ge,
            Cmp::Eq => ComparisonOp::Eq,
        };
        let expr: Vec<(Variable, f64)> = c.terms.iter().map(|&(v, k)| (vars[v], k)).collect();
        problem.add_constraint(expr, op, c.rhs);
    }
    Lp {
        problem,
        vars,
        sign,
    }
}

enum LpResult {
    Solved(Solution),
    Infeasible,
    Interrupted,
}

fn lift(r: std::result::Result<SolveOutcome, microlp::Error>) -> Result<LpResult> {
    match r {
        Ok(SolveOutcome::Solution(s)) => Ok(LpResult::Solved(s)),
        Ok(SolveOutcome::Interrupted(_)) => Ok(LpResult::Interrupted),
        Err(microlp::Error::Infeasible) => Ok(LpResult::Infeasible),
        Err(microlp::Error::Unbounded) => Err(Error::Solver("LP relaxation is unbounded".into())),
        Err(e) => Err(Error::Solver(e.to_string())),
    }
}

/// Solves `p` to optimality within `limits`.
pub fn solve(p: &MilpProblem, limits: SolveLimits) -> Result<MilpSolution> {
    let start = Instant::now();
    let remaining = |start: Instant| limits.time_limit.saturating_sub(start.elapsed());
    let binaries = p.binaries();
    let mut lp = build_lp(p, None);
    lp.problem.set_time_limit(remaining(start));
    let root = match lift(lp.problem.solve())? {
        LpResult::Solved(s) => s,
        LpResult::Infeasible => {
            return Ok(MilpSolution {
                status: MilpStatus::Infeasible,
                values: vec![],
                objective: f64::NAN,
                nodes: 1,
            })
        }
        LpResult::Interrupted => {
            return Ok(MilpSolution {
                status: MilpStatus::IterationLimit,
                values: vec![],
                objective: f64::NAN,
                nodes: 1,
            })
        }
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: root.objective(),
        depth: 0,
        seq,
        sol: root,
    });
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut limited = false;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - 1e-9 * best.abs().max(1.0) {
                continue;
            }
        }
        if nodes >= limits.max_nodes || start.elapsed() >= limits.time_limit {
            limited = true;
            break;
        }
        nodes += 1;
        let values: Vec<f64> = lp.vars.iter().map(|&v| node.sol.var_value_raw(v)).collect();
        // Most fractional binary, lowest index on ties.
        let mut branch: Option<(usize, f64)> = None;
        for &b in &binaries {
            let frac = (values[b] - values[b].round()).abs();
            if frac > INT_TOL && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((b, frac));
            }
        }
        match branch {
            None => {
                if let Some((obj, vals)) = polish(p, &values, remaining(start))? {
                    if incumbent
                        .as_ref()
                        .is_none_or(|(best, _)| obj < *best - 1e-12)
                    {
                        incumbent = Some((obj, vals));
                    }
                }
            }
            Some((b, _)) => {
                let near = values[b].round();
                for val in [near, 1.0 - near] {
                    seq += 1;
                    match lift(node.sol.clone().fix_var(lp.vars[b], val))? {
                        LpResult::Solved(s) => heap.push(Node {
                            bound: s.objective(),
                            depth: node.depth + 1,
                            seq,
                            sol: s,
                        }),
                        LpResult::Infeasible => {}
                        LpResult::Interrupted => limited = true,
                    }
                }
            }
        }
    }

    let limited = limited || !heap.is_empty();
    Ok(match incumbent {
        Some((obj, values)) => MilpSolution {
            status: if limited {
                MilpStatus::IterationLimit
            } else {
                MilpStatus::Optimal
            },
            objective: obj * lp.sign + 0.0,
            values,
            nodes,
        }
        .with_constant(p),
        None if limited => MilpSolution {
            status: MilpStatus::IterationLimit,
            values: vec![],
            objective: f64::NAN,
            nodes,
        },
        None => MilpSolution {
            status: MilpStatus::Infeasible,
            values: vec![],
            objective: f64::NAN,
            nodes,
        },
    })
}

impl MilpSolution {
    fn with_constant(mut self, p: &MilpProblem) -> Self {
        self.objective += p.objective.constant;
        self
    }
}

/// Re-solves with every binary fixed to its rounded value so the continuous
/// part is exact rather than off by integrality slack times big-M.
fn polish(p: &MilpProblem, values: &[f64], time: Duration) -> Result<Option<(f64, Vec<f64>)>> {
    let mut lp = build_lp(p, Some(values));
    lp.problem.set_time_limit(time);
    match lift(lp.problem.solve())? {
        LpResult::Solved(s) => {
            let mut vals: Vec<f64> = lp.vars.iter().map(|&v| s.var_value_raw(v)).collect();
            for b in p.binaries() {
                vals[b] = vals[b].round();
            }
            if !p.is_feasible(&vals, FEAS_TOL * 10.0) {
                log::debug!("polished LP point misses feasibility tolerance");
            }
            Ok(Some((s.objective(), vals)))
        }
        LpResult::Infeasible | LpResult::Interrupted => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::super::LinExpr;
    use super::*;

    #[test]
    fn pure_lp() {
        let mut p = MilpProblem::default();
        let x = p.add_var("x", -10.0, 10.0);
        p.add_constraint("c", &LinExpr::var(x), Cmp::Le, 3.0);
        p.objective = LinExpr::var(x);
        p.direction = Direction::Maximize;
        let s = solve(&p, SolveLimits::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn integrality_cuts_fraction() {
        let mut p = MilpProblem::default();
        let z = p.add_binary("z");
        p.add_constraint("c", &LinExpr::var(z), Cmp::Le, 0.5);
        p.objective = LinExpr::var(z);
        p.direction = Direction::Maximize;
        let s = solve(&p, SolveLimits::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert_eq!(s.values[z], 0.0);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn infeasible_proved() {
        let mut p = MilpProblem::default();
        let z = p.add_binary("z");
        let w = p.add_binary("w");
        let e = LinExpr {
            terms: vec![(z, 1.0), (w, 1.0)],
            constant: 0.0,
        };
        p.add_constraint("lo", &e, Cmp::Ge, 0.5);
        p.add_constraint("hi", &e, Cmp::Le, 0.7);
        let s = solve(&p, SolveLimits::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
    }

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut p = MilpProblem::default();
        let v: Vec<usize> = (0..3).map(|i| p.add_binary(format!("z{i}"))).collect();
        let row = |k: [f64; 3]| LinExpr {
            terms: v.iter().copied().zip(k).collect(),
            constant: 0.0,
        };
        p.add_constraint("r1", &row([2.0, 3.0, 1.0]), Cmp::Le, 5.0);
        p.add_constraint("r2", &row([4.0, 1.0, 2.0]), Cmp::Le, 11.0);
        p.add_constraint("r3", &row([3.0, 4.0, 2.0]), Cmp::Le, 8.0);
        p.objective = row([5.0, 4.0, 3.0]);
        p.direction = Direction::Maximize;
        let s = solve(&p, SolveLimits::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - 9.0).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn node_budget() {
        let mut p = MilpProblem::default();
        let v: Vec<usize> = (0..12).map(|i| p.add_binary(format!("z{i}"))).collect();
        let all = LinExpr {
            terms: v.iter().map(|&z| (z, 2.0)).collect(),
            constant: 0.0,
        };
        p.add_constraint("odd", &all, Cmp::Eq, 11.0);
        let s = solve(
            &p,
            SolveLimits {
                max_nodes: 5,
                time_limit: Duration::from_secs(5),
            },
        )
        .unwrap();
        assert_eq!(s.status, MilpStatus::IterationLimit);
    }
}
