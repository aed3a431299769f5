//! Big-M encodings of STL bodies over affine-system trajectories.
//!
//! Two encodings are offered. The Boolean one constrains satisfaction: every
//! literal occurrence gets a binary `z` with `z = 1` forcing the predicate to
//! hold by at least the margin in the polarity it is used with, and `And` /
//! `Or` combine children through continuous `[0, 1]` variables. The
//! robustness one builds a variable bounded by the min/max recursion from one
//! side (or both), with binaries selecting the active branch of each min/max
//! that needs it.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Cmp, Direction, LinExpr, MilpProblem, BIG_M_FACTOR};
use crate::formula::{horizon, Body, Predicate, TraceVar};
use crate::semantics::{Trace, ROBUSTNESS_CAP};
use crate::system::{Dynamics, InputSequence, SystemModel};
use crate::{Error, Result};

/// Which side of the true robustness an encoded variable is tied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// Encoded value never exceeds the robustness; maximize it.
    Lower,
    /// Encoded value never falls below the robustness; minimize it.
    Upper,
    /// Encoded value equals the robustness.
    Exact,
}

impl Side {
    fn flip(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
            Side::Exact => Side::Exact,
        }
    }
}

/// Cost `(1 - alpha) * sum |p_k - p_{k-1}|_1 - alpha * rho(task)` on the first trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub alpha: f64,
    pub task: Option<Body>,
    pub path_dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    MinCost(CostTerms),
    MaxRobustness,
    MinRobustness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceHandle(pub usize);

struct TraceData {
    states: Vec<Vec<LinExpr>>,
    inputs: Option<Vec<usize>>,
}

/// Incrementally builds a MILP over several traces of one affine system.
pub struct MilpBuilder {
    problem: MilpProblem,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
    model: SystemModel,
    n_steps: usize,
    traces: Vec<TraceData>,
    aux: usize,
}

struct Ctx<'a> {
    slots: &'a [TraceVar],
    handles: &'a [TraceHandle],
}

type Key = (usize, usize, u8);

impl MilpBuilder {
    pub fn new(model: &SystemModel, n_steps: usize) -> Result<Self> {
        let Dynamics::Affine { a, b, c } = &model.dynamics else {
            return Err(Error::Unsupported(
                "the MILP backend needs affine dynamics".into(),
            ));
        };
        let c = if c.is_empty() {
            vec![0.0; model.n()]
        } else {
            c.clone()
        };
        Ok(MilpBuilder {
            problem: MilpProblem::default(),
            a: a.clone(),
            b: b.clone(),
            c,
            model: model.clone(),
            n_steps,
            traces: Vec::new(),
            aux: 0,
        })
    }

    pub fn problem(&self) -> &MilpProblem {
        &self.problem
    }

    pub fn finish(self) -> MilpProblem {
        self.problem
    }

    fn name(&mut self, prefix: &str) -> String {
        self.aux += 1;
        format!("{prefix}{}", self.aux)
    }

    /// A trace whose inputs are decision variables; states obey the dynamics and the state box.
    pub fn add_decision_trace(&mut self) -> TraceHandle {
        let k = self.traces.len();
        let (n, m) = (self.model.n(), self.model.m());
        let ib = self.model.input_box.clone();
        let sb = self.model.state_box.clone();
        let mut inputs = Vec::with_capacity(self.n_steps * m);
        for s in 0..self.n_steps {
            for j in 0..m {
                inputs.push(
                    self.problem
                        .add_var(format!("u{k}_{s}_{j}"), ib.lo[j], ib.hi[j]),
                );
            }
        }
        let mut states = vec![self
            .model
            .x0
            .iter()
            .map(|&v| LinExpr::constant(v))
            .collect::<Vec<_>>()];
        for s in 1..=self.n_steps {
            let mut row = Vec::with_capacity(n);
            for i in 0..n {
                let x = self
                    .problem
                    .add_var(format!("x{k}_{s}_{i}"), sb.lo[i], sb.hi[i]);
                let mut dyn_row = LinExpr::var(x);
                for j in 0..n {
                    dyn_row.add_scaled(&states[s - 1][j], -self.a[i][j]);
                }
                for j in 0..m {
                    dyn_row.terms.push((inputs[(s - 1) * m + j], -self.b[i][j]));
                }
                self.problem.add_constraint(
                    format!("dyn{k}_{s}_{i}"),
                    &dyn_row,
                    Cmp::Eq,
                    self.c[i],
                );
                row.push(LinExpr::var(x));
            }
            states.push(row);
        }
        self.traces.push(TraceData {
            states,
            inputs: Some(inputs),
        });
        TraceHandle(k)
    }

    /// A trace with known states.
    pub fn add_constant_trace(&mut self, trace: &Trace) -> Result<TraceHandle> {
        if trace.len() < self.n_steps + 1 {
            return Err(Error::InvalidSystem(format!(
                "fixed trace has {} states, need {}",
                trace.len(),
                self.n_steps + 1
            )));
        }
        let states = (0..=self.n_steps)
            .map(|s| {
                trace
                    .state(s)
                    .iter()
                    .map(|&v| LinExpr::constant(v))
                    .collect()
            })
            .collect();
        self.traces.push(TraceData {
            states,
            inputs: None,
        });
        Ok(TraceHandle(self.traces.len() - 1))
    }

    /// A trace driven by known inputs.
    pub fn add_fixed_input_trace(&mut self, u: &InputSequence) -> Result<TraceHandle> {
        let tr = self.model.rollout(&self.model.x0, u);
        self.add_constant_trace(&tr)
    }

    /// Reads a decision trace's inputs from a solution vector.
    pub fn decode(&self, h: TraceHandle, values: &[f64]) -> Option<InputSequence> {
        let vars = self.traces[h.0].inputs.as_ref()?;
        let ib = &self.model.input_box;
        let m = self.model.m();
        let data = vars
            .iter()
            .enumerate()
            .map(|(i, &v)| values[v].clamp(ib.lo[i % m], ib.hi[i % m]))
            .collect();
        Some(InputSequence::from_flat(m, data))
    }

    fn check_horizon(&self, body: &Body, t: usize) -> Result<()> {
        let h = horizon(body);
        if t + h > self.n_steps {
            return Err(Error::HorizonOverrun {
                t,
                horizon: h,
                last: self.n_steps,
            });
        }
        Ok(())
    }

    fn pieces(&self, p: &Predicate, ctx: &Ctx, t: usize) -> Result<Vec<LinExpr>> {
        let affine = match p {
            Predicate::Affine(a) => vec![a.clone()],
            Predicate::Named(n) => n.affine_pieces(),
        };
        let n = self.model.n();
        affine
            .iter()
            .map(|a| {
                let mut e = LinExpr::constant(a.constant);
                for term in &a.terms {
                    let slot = ctx
                        .slots
                        .iter()
                        .position(|s| *s == term.var)
                        .ok_or_else(|| {
                            Error::InvalidFormula(format!(
                                "trace variable `{}` has no trace",
                                term.var
                            ))
                        })?;
                    if term.dim >= n {
                        return Err(Error::InvalidFormula(format!(
                            "predicate reads state dimension {} of a {n}-dimensional system",
                            term.dim
                        )));
                    }
                    let h = ctx.handles[slot];
                    e.add_scaled(&self.traces[h.0].states[t][term.dim], term.coef);
                }
                Ok(e.normalized())
            })
            .collect()
    }

    fn new_var(&mut self, prefix: &str, lo: f64, hi: f64) -> usize {
        let name = self.name(prefix);
        self.problem.add_var(name, lo, hi)
    }

    fn new_binary(&mut self) -> usize {
        let name = self.name("z");
        self.problem.add_binary(name)
    }

    fn row(&mut self, e: &LinExpr, cmp: Cmp, rhs: f64) {
        let name = self.name("c");
        self.problem.add_constraint(name, e, cmp, rhs);
    }

    // ----- Boolean encoding -------------------------------------------------

    /// Constrains `body` to hold at `t` with every used literal satisfied by `margin`.
    pub fn require(
        &mut self,
        body: &Body,
        slots: &[TraceVar],
        handles: &[TraceHandle],
        margin: f64,
    ) -> Result<()> {
        let root = self.satisfaction(body, slots, handles, 0, margin)?;
        match root.as_const() {
            Some(v) if v >= 0.5 => {}
            _ => self.row(&root, Cmp::Ge, 1.0),
        }
        Ok(())
    }

    /// A `[0, 1]` expression that can be `1` only when `body` holds at `t`.
    pub fn satisfaction(
        &mut self,
        body: &Body,
        slots: &[TraceVar],
        handles: &[TraceHandle],
        t: usize,
        margin: f64,
    ) -> Result<LinExpr> {
        self.check_horizon(body, t)?;
        let ctx = Ctx { slots, handles };
        let mut memo = HashMap::new();
        self.bool_enc(body, true, t, &ctx, margin, &mut memo)
    }

    fn literal(&mut self, nu: &LinExpr, pos: bool, margin: f64) -> LinExpr {
        let (lo, hi) = self.problem.bounds_of(nu);
        if pos {
            if lo >= margin {
                return LinExpr::constant(1.0);
            }
            if hi < margin {
                return LinExpr::constant(0.0);
            }
            let z = self.new_binary();
            let big_m = (margin - lo) * BIG_M_FACTOR + 1e-9;
            // nu >= margin - M (1 - z)
            let mut e = nu.clone();
            e.terms.push((z, -big_m));
            self.row(&e, Cmp::Ge, margin - big_m);
            LinExpr::var(z)
        } else {
            if hi <= -margin {
                return LinExpr::constant(1.0);
            }
            if lo > -margin {
                return LinExpr::constant(0.0);
            }
            let z = self.new_binary();
            let big_m = (hi + margin) * BIG_M_FACTOR + 1e-9;
            // nu <= -margin + M (1 - z)
            let mut e = nu.clone();
            e.terms.push((z, big_m));
            self.row(&e, Cmp::Le, big_m - margin);
            LinExpr::var(z)
        }
    }

    fn b_and(&mut self, parts: Vec<LinExpr>) -> LinExpr {
        let mut keep = Vec::new();
        for p in parts {
            match p.as_const() {
                Some(v) if v < 0.5 => return LinExpr::constant(0.0),
                Some(_) => {}
                None => keep.push(p),
            }
        }
        match keep.len() {
            0 => LinExpr::constant(1.0),
            1 => keep.pop().unwrap(),
            _ => {
                let y = self.new_var("a", 0.0, 1.0);
                for p in &keep {
                    let mut e = LinExpr::var(y);
                    e.add_scaled(p, -1.0);
                    self.row(&e, Cmp::Le, 0.0);
                }
                LinExpr::var(y)
            }
        }
    }

    fn b_or(&mut self, parts: Vec<LinExpr>) -> LinExpr {
        let mut keep = Vec::new();
        for p in parts {
            match p.as_const() {
                Some(v) if v >= 0.5 => return LinExpr::constant(1.0),
                Some(_) => {}
                None => keep.push(p),
            }
        }
        match keep.len() {
            0 => LinExpr::constant(0.0),
            1 => keep.pop().unwrap(),
            _ => {
                let y = self.new_var("o", 0.0, 1.0);
                let mut e = LinExpr::var(y);
                for p in &keep {
                    e.add_scaled(p, -1.0);
                }
                self.row(&e, Cmp::Le, 0.0);
                LinExpr::var(y)
            }
        }
    }

    fn bool_enc(
        &mut self,
        body: &Body,
        pos: bool,
        t: usize,
        ctx: &Ctx,
        margin: f64,
        memo: &mut HashMap<Key, LinExpr>,
    ) -> Result<LinExpr> {
        let key = (body as *const Body as usize, t, pos as u8);
        if let Some(e) = memo.get(&key) {
            return Ok(e.clone());
        }
        let out = match body {
            Body::True => LinExpr::constant(if pos { 1.0 } else { 0.0 }),
            Body::Pred(p) => {
                let lits: Vec<LinExpr> = self
                    .pieces(p, ctx, t)?
                    .iter()
                    .map(|nu| self.literal(nu, pos, margin))
                    .collect();
                if pos {
                    self.b_and(lits)
                } else {
                    self.b_or(lits)
                }
            }
            Body::Not(c) => self.bool_enc(c, !pos, t, ctx, margin, memo)?,
            Body::And(v) | Body::Or(v) => {
                let parts = v
                    .iter()
                    .map(|c| self.bool_enc(c, pos, t, ctx, margin, memo))
                    .collect::<Result<Vec<_>>>()?;
                if matches!(body, Body::And(_)) == pos {
                    self.b_and(parts)
                } else {
                    self.b_or(parts)
                }
            }
            Body::Implies(a, b) => {
                let ea = self.bool_enc(a, !pos, t, ctx, margin, memo)?;
                let eb = self.bool_enc(b, pos, t, ctx, margin, memo)?;
                if pos {
                    self.b_or(vec![ea, eb])
                } else {
                    self.b_and(vec![ea, eb])
                }
            }
            Body::Eventually(i, c) | Body::Always(i, c) => {
                let parts = (t + i.lo..=t + i.hi)
                    .map(|tp| self.bool_enc(c, pos, tp, ctx, margin, memo))
                    .collect::<Result<Vec<_>>>()?;
                if matches!(body, Body::Always(..)) == pos {
                    self.b_and(parts)
                } else {
                    self.b_or(parts)
                }
            }
            Body::Until(i, a, b) => {
                let mut outer = Vec::new();
                for tp in t + i.lo..=t + i.hi {
                    let mut inner = vec![self.bool_enc(b, pos, tp, ctx, margin, memo)?];
                    for tpp in t + i.lo..=tp {
                        inner.push(self.bool_enc(a, pos, tpp, ctx, margin, memo)?);
                    }
                    outer.push(if pos {
                        self.b_and(inner)
                    } else {
                        self.b_or(inner)
                    });
                }
                if pos {
                    self.b_or(outer)
                } else {
                    self.b_and(outer)
                }
            }
        };
        memo.insert(key, out.clone());
        Ok(out)
    }

    // ----- Robustness encoding ----------------------------------------------

    /// An expression tied to the robustness of `body` at `t` from `side`.
    pub fn robustness(
        &mut self,
        body: &Body,
        slots: &[TraceVar],
        handles: &[TraceHandle],
        t: usize,
        side: Side,
    ) -> Result<LinExpr> {
        self.check_horizon(body, t)?;
        let ctx = Ctx { slots, handles };
        let mut memo = HashMap::new();
        self.rob_enc(body, t, side, &ctx, &mut memo)
    }

    fn side_code(side: Side) -> u8 {
        match side {
            Side::Lower => 0,
            Side::Upper => 1,
            Side::Exact => 2,
        }
    }

    /// Removes parts that can never be the extremum; `min` selects min or max.
    fn prune(&self, parts: Vec<LinExpr>, min: bool) -> Vec<(LinExpr, f64, f64)> {
        let mut b: Vec<(LinExpr, f64, f64)> = parts
            .into_iter()
            .map(|p| {
                let (lo, hi) = self.problem.bounds_of(&p);
                (p, lo, hi)
            })
            .collect();
        let mut i = 0;
        while i < b.len() {
            let dominated = (0..b.len()).any(|j| {
                j != i
                    && if min {
                        b[j].2 <= b[i].1
                    } else {
                        b[j].1 >= b[i].2
                    }
            });
            if dominated && b.len() > 1 {
                b.remove(i);
            } else {
                i += 1;
            }
        }
        b
    }

    fn r_extremum(&mut self, parts: Vec<LinExpr>, side: Side, min: bool) -> LinExpr {
        let mut b = self.prune(parts, min);
        if b.len() == 1 {
            return b.pop().unwrap().0;
        }
        if b.is_empty() {
            return LinExpr::constant(if min { ROBUSTNESS_CAP } else { -ROBUSTNESS_CAP });
        }
        if b.iter().all(|p| p.0.as_const().is_some()) {
            let it = b.iter().map(|p| p.0.constant);
            return LinExpr::constant(if min {
                it.fold(f64::INFINITY, f64::min)
            } else {
                it.fold(f64::NEG_INFINITY, f64::max)
            });
        }
        let (rlo, rhi) = if min {
            (
                b.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
                b.iter().map(|p| p.2).fold(f64::INFINITY, f64::min),
            )
        } else {
            (
                b.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
                b.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let r = self.new_var("r", rlo, rhi);
        // The side that is a plain epigraph bound.
        let easy = if min { Side::Lower } else { Side::Upper };
        if side == easy || side == Side::Exact {
            for p in &b {
                let mut e = LinExpr::var(r);
                e.add_scaled(&p.0, -1.0);
                self.row(&e, if min { Cmp::Le } else { Cmp::Ge }, 0.0);
            }
        }
        if side != easy {
            let mut sel = LinExpr::default();
            for p in &b {
                let z = self.new_binary();
                sel.terms.push((z, 1.0));
                let mut e = LinExpr::var(r);
                e.add_scaled(&p.0, -1.0);
                if min {
                    // r >= e - M (1 - z)
                    let big_m = (p.2 - rlo) * BIG_M_FACTOR + 1e-9;
                    e.terms.push((z, -big_m));
                    self.row(&e, Cmp::Ge, -big_m);
                } else {
                    // r <= e + M (1 - z)
                    let big_m = (rhi - p.1) * BIG_M_FACTOR + 1e-9;
                    e.terms.push((z, big_m));
                    self.row(&e, Cmp::Le, big_m);
                }
            }
            self.row(&sel, Cmp::Eq, 1.0);
        }
        LinExpr::var(r)
    }

    fn rob_enc(
        &mut self,
        body: &Body,
        t: usize,
        side: Side,
        ctx: &Ctx,
        memo: &mut HashMap<Key, LinExpr>,
    ) -> Result<LinExpr> {
        let key = (body as *const Body as usize, t, Self::side_code(side));
        if let Some(e) = memo.get(&key) {
            return Ok(e.clone());
        }
        let out = match body {
            Body::True => LinExpr::constant(ROBUSTNESS_CAP),
            Body::Pred(p) => {
                let pieces = self.pieces(p, ctx, t)?;
                self.r_extremum(pieces, side, true)
            }
            Body::Not(c) => self.rob_enc(c, t, side.flip(), ctx, memo)?.scaled(-1.0),
            Body::And(v) | Body::Or(v) => {
                let parts = v
                    .iter()
                    .map(|c| self.rob_enc(c, t, side, ctx, memo))
                    .collect::<Result<Vec<_>>>()?;
                self.r_extremum(parts, side, matches!(body, Body::And(_)))
            }
            Body::Implies(a, b) => {
                let na = self.rob_enc(a, t, side.flip(), ctx, memo)?.scaled(-1.0);
                let eb = self.rob_enc(b, t, side, ctx, memo)?;
                self.r_extremum(vec![na, eb], side, false)
            }
            Body::Eventually(i, c) | Body::Always(i, c) => {
                let parts = (t + i.lo..=t + i.hi)
                    .map(|tp| self.rob_enc(c, tp, side, ctx, memo))
                    .collect::<Result<Vec<_>>>()?;
                self.r_extremum(parts, side, matches!(body, Body::Always(..)))
            }
            Body::Until(i, a, b) => {
                let mut outer = Vec::new();
                for tp in t + i.lo..=t + i.hi {
                    let mut inner = vec![self.rob_enc(b, tp, side, ctx, memo)?];
                    for tpp in t + i.lo..=tp {
                        inner.push(self.rob_enc(a, tpp, side, ctx, memo)?);
                    }
                    outer.push(self.r_extremum(inner, side, true));
                }
                self.r_extremum(outer, side, false)
            }
        };
        memo.insert(key, out.clone());
        Ok(out)
    }

    // ----- Cost -------------------------------------------------------------

    /// `sum_k sum_d |x_k[d] - x_{k-1}[d]|` through auxiliary epigraph variables.
    pub fn path_l1(&mut self, h: TraceHandle, dims: &[usize]) -> LinExpr {
        let mut total = LinExpr::default();
        for s in 1..=self.n_steps {
            for &d in dims {
                let mut diff = self.traces[h.0].states[s][d].clone();
                diff.add_scaled(&self.traces[h.0].states[s - 1][d].clone(), -1.0);
                let diff = diff.normalized();
                if let Some(c) = diff.as_const() {
                    total.constant += c.abs();
                    continue;
                }
                let (lo, hi) = self.problem.bounds_of(&diff);
                let a = self.new_var("d", 0.0, lo.abs().max(hi.abs()));
                let mut up = LinExpr::var(a);
                up.add_scaled(&diff, -1.0);
                self.row(&up, Cmp::Ge, 0.0);
                let mut dn = LinExpr::var(a);
                dn.add_scaled(&diff, 1.0);
                self.row(&dn, Cmp::Ge, 0.0);
                total.terms.push((a, 1.0));
            }
        }
        total
    }

    /// The linear cost of [`CostTerms`] on trace `h`.
    pub fn cost(&mut self, terms: &CostTerms, h: TraceHandle) -> Result<LinExpr> {
        let mut j = self.path_l1(h, &terms.path_dims).scaled(1.0 - terms.alpha);
        if let Some(task) = &terms.task {
            if terms.alpha != 0.0 {
                let vars = task.vars();
                let handles = vec![h; vars.len()];
                let r = self.robustness(task, &vars, &handles, 0, Side::Lower)?;
                j.add_scaled(&r, -terms.alpha);
            }
        }
        Ok(j)
    }

    pub fn set_objective(&mut self, e: LinExpr, direction: Direction) {
        self.problem.objective = e;
        self.problem.direction = direction;
    }
}

/// An encoded problem together with what is needed to decode it.
pub struct Encoded {
    pub builder: MilpBuilder,
    pub handles: Vec<TraceHandle>,
    /// The robustness expression for robustness objectives.
    pub rho: Option<LinExpr>,
}

impl Encoded {
    pub fn problem(&self) -> &MilpProblem {
        self.builder.problem()
    }

    /// Inputs per slot: decoded for free slots, `None` for fixed ones.
    pub fn decode(&self, values: &[f64]) -> Vec<Option<InputSequence>> {
        self.handles
            .iter()
            .map(|&h| self.builder.decode(h, values))
            .collect()
    }
}

/// Encodes `body` over `slots.len()` traces of length `n_steps`.
///
/// `fixed[i] = Some(u)` makes trace `i` a constant driven by `u`. `MinCost`
/// requires satisfaction with `margin`; the robustness objectives leave
/// satisfaction to the caller and expose the robustness in [`Encoded::rho`].
pub fn encode(
    body: &Body,
    model: &SystemModel,
    slots: &[TraceVar],
    n_steps: usize,
    fixed: &[Option<InputSequence>],
    objective: &Objective,
    margin: f64,
) -> Result<Encoded> {
    if fixed.len() != slots.len() {
        return Err(Error::InvalidFormula(
            "one fixed entry per trace slot is required".into(),
        ));
    }
    let mut b = MilpBuilder::new(model, n_steps)?;
    let handles = fixed
        .iter()
        .map(|f| match f {
            Some(u) => b.add_fixed_input_trace(u),
            None => Ok(b.add_decision_trace()),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rho = None;
    match objective {
        Objective::MinCost(terms) => {
            b.require(body, slots, &handles, margin)?;
            let j = if handles.is_empty() {
                LinExpr::default()
            } else {
                b.cost(terms, handles[0])?
            };
            b.set_objective(j, Direction::Minimize);
        }
        Objective::MaxRobustness => {
            let r = b.robustness(body, slots, &handles, 0, Side::Lower)?;
            b.set_objective(r.clone(), Direction::Maximize);
            rho = Some(r);
        }
        Objective::MinRobustness => {
            let r = b.robustness(body, slots, &handles, 0, Side::Upper)?;
            b.set_objective(r.clone(), Direction::Minimize);
            rho = Some(r);
        }
    }
    Ok(Encoded {
        builder: b,
        handles,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{solve, MilpStatus, SolveLimits, DEFAULT_MARGIN};
    use super::*;
    use crate::formula::parse_body;
    use crate::semantics::{robustness, Monitor};
    use crate::system::tuple_rollout_named;

    fn integrator() -> SystemModel {
        SystemModel::integrator(0.0, 1.0, 20.0)
    }

    fn p() -> Vec<TraceVar> {
        vec!["p".into()]
    }

    fn reach(body: &str, n: usize) -> (MilpStatus, Option<InputSequence>) {
        let body = parse_body(body).unwrap();
        let cost = CostTerms {
            alpha: 0.0,
            task: None,
            path_dims: vec![0],
        };
        let enc = encode(
            &body,
            &integrator(),
            &p(),
            n,
            &[None],
            &Objective::MinCost(cost),
            DEFAULT_MARGIN,
        )
        .unwrap();
        let s = solve(enc.problem(), SolveLimits::default()).unwrap();
        let u =
            (s.status == MilpStatus::Optimal).then(|| enc.decode(&s.values)[0].clone().unwrap());
        (s.status, u)
    }

    #[test]
    fn single_literal_one_binary() {
        let m = SystemModel::integrator(0.5, 1.0, 20.0);
        let body = parse_body("x[p][0] - 0.2 >= 0 | x[p][0] - 0.7 >= 0").unwrap();
        // Both literals are constant at t = 0: nothing to branch on.
        let mut b = MilpBuilder::new(&m, 1).unwrap();
        let h = b.add_decision_trace();
        b.require(&body, &p(), &[h], DEFAULT_MARGIN).unwrap();
        assert_eq!(b.problem().num_binaries(), 0);
        let body = parse_body("F[1,1](x[p][0] >= 0)").unwrap();
        let mut b = MilpBuilder::new(&m, 1).unwrap();
        let h = b.add_decision_trace();
        let before = b.problem().constraints.len();
        b.require(&body, &p(), &[h], DEFAULT_MARGIN).unwrap();
        assert_eq!(b.problem().num_binaries(), 1);
        // one big-M row plus the root requirement
        assert_eq!(b.problem().constraints.len() - before, 2);
    }

    #[test]
    fn always_binaries_count() {
        let n = 6;
        let body = parse_body(&format!("G[0,{n}](x[p][0] + 3 >= 0)")).unwrap();
        let mut b = MilpBuilder::new(&integrator(), n).unwrap();
        let h = b.add_decision_trace();
        b.require(&body, &p(), &[h], DEFAULT_MARGIN).unwrap();
        // x_0 is a constant that satisfies the literal; big-M bounds come from
        // the state box, so every later step needs its own binary.
        assert_eq!(b.problem().num_binaries(), n);
    }

    #[test]
    fn reachable_set_bound() {
        for k in 1..=5usize {
            let (s, u) = reach(
                &format!("F[{k},{k}](x[p][0] - {} >= 0)", k as f64 - 0.01),
                k,
            );
            assert_eq!(s, MilpStatus::Optimal, "k={k}");
            let tr = integrator().rollout(&[0.0], &u.unwrap());
            assert!(tr.state(k)[0] >= k as f64 - 0.01);
            let (s, _) = reach(
                &format!("F[{k},{k}](x[p][0] - {} >= 0)", k as f64 + 0.01),
                k,
            );
            assert_eq!(s, MilpStatus::Infeasible, "k={k}");
            let (s, _) = reach(
                &format!("F[{k},{k}](x[p][0] + {} <= 0)", k as f64 + 0.01),
                k,
            );
            assert_eq!(s, MilpStatus::Infeasible, "k={k}");
        }
        let (s, _) = reach("F[5,5](x[p][0] - 4 >= 0)", 5);
        assert_eq!(s, MilpStatus::Optimal);
        let (s, _) = reach("F[2,2](x[p][0] - 10 >= 0)", 2);
        assert_eq!(s, MilpStatus::Infeasible);
    }

    #[test]
    fn negated_until_is_sound() {
        let text = "!((x[p][0] >= -0.5) U[1,3] (x[p][0] - 1.5 >= 0)) & F[3,3](x[p][0] - 1 >= 0)";
        let (s, u) = reach(text, 3);
        assert_eq!(s, MilpStatus::Optimal);
        let u = u.unwrap();
        let tr = integrator().rollout(&[0.0], &u);
        let body = parse_body(text).unwrap();
        let m = Monitor::new(&body, &p()).unwrap();
        assert!(m.robustness(&[&tr], 0).unwrap() > 0.0);
        // Reaching 2 forces x_1, x_2 >= 0, which makes the until hold.
        let (s, _) = reach(
            "!((x[p][0] >= -0.5) U[1,3] (x[p][0] - 1.5 >= 0)) & F[3,3](x[p][0] - 2 >= 0)",
            3,
        );
        assert_eq!(s, MilpStatus::Infeasible);
    }

    #[test]
    fn max_robustness_matches_monitor() {
        let body = parse_body("F[3,3](x[p][0] - 2 >= 0)").unwrap();
        let enc = encode(
            &body,
            &integrator(),
            &p(),
            3,
            &[None],
            &Objective::MaxRobustness,
            0.0,
        )
        .unwrap();
        let s = solve(enc.problem(), SolveLimits::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-6);
        let u = enc.decode(&s.values)[0].clone().unwrap();
        let tup = tuple_rollout_named(&integrator(), &[0.0], &[u], &p()).unwrap();
        let rho = robustness(&body, &tup, 0).unwrap();
        assert!((rho - enc.rho.unwrap().eval(&s.values)).abs() < 1e-6);
    }

    #[test]
    fn min_robustness_with_fixed_trace() {
        let body = parse_body("G[0,2](x[a][0] - x[b][0] >= 0)").unwrap();
        let slots: Vec<TraceVar> = vec!["a".into(), "b".into()];
        let fixed = vec![Some(InputSequence::constant(&[0.5], 2)), None];
        let enc = encode(
            &body,
            &integrator(),
            &slots,
            2,
            &fixed,
            &Objective::MinRobustness,
            0.0,
        )
        .unwrap();
        let s = solve(enc.problem(), SolveLimits::default()).unwrap();
        // b climbs at full speed: min_t (0.5 t - t) = -1 at t = 2
        assert!((s.objective + 1.0).abs() < 1e-6, "{}", s.objective);
    }

    #[test]
    fn nonlinear_rejected() {
        let m = SystemModel::unicycle(0.5).unwrap();
        assert!(matches!(
            MilpBuilder::new(&m, 3),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn insufficient_steps_rejected() {
        let body = parse_body("F[0,4](x[p][0] >= 0)").unwrap();
        let r = encode(
            &body,
            &integrator(),
            &p(),
            3,
            &[None],
            &Objective::MaxRobustness,
            0.0,
        );
        assert!(matches!(r, Err(Error::HorizonOverrun { .. })));
    }
}
