//! Boolean satisfaction and robustness of quantifier-free bodies over trace tuples.
//!
//! Evaluation compiles the body once into a postorder node array and then runs
//! a dynamic program over `(node, time)`. Each node is only evaluated on the
//! time window its ancestors can actually read.

use serde::{Deserialize, Serialize};

use crate::formula::{horizon, Body, NamedPredicate, Predicate, TraceVar};
use crate::{Error, Result};

/// Robustness of `true`. Finite so that arithmetic on it stays well defined.
pub const ROBUSTNESS_CAP: f64 = 1e9;

/// A finite state sequence `x_0 .. x_L` stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct Trace {
    dim: usize,
    data: Vec<f64>,
}

impl Trace {
    pub fn new(states: Vec<Vec<f64>>) -> Result<Self> {
        let dim = states.first().map_or(0, Vec::len);
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidSystem(
                "trace states have mixed dimensions".into(),
            ));
        }
        Ok(Trace {
            dim,
            data: states.into_iter().flatten().collect(),
        })
    }

    /// Builds a trace from `len * dim` row-major values.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert!(
            dim > 0 && data.len().is_multiple_of(dim),
            "flat trace data does not match dimension"
        );
        Trace { dim, data }
    }

    /// A one-dimensional trace.
    pub fn scalar(values: &[f64]) -> Self {
        Trace {
            dim: 1,
            data: values.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of states, i.e. `L + 1`.
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

impl From<Trace> for Vec<Vec<f64>> {
    fn from(t: Trace) -> Self {
        t.states().map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Trace {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Trace::new(v)
    }
}

/// Ordered assignment of trace variables to traces of equal length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceTuple {
    entries: Vec<(TraceVar, Trace)>,
}

impl TraceTuple {
    pub fn new(entries: Vec<(TraceVar, Trace)>) -> Result<Self> {
        if let Some((_, first)) = entries.first() {
            for (v, t) in &entries {
                if t.len() != first.len() || t.dim() != first.dim() {
                    return Err(Error::InvalidSystem(format!(
                        "trace `{v}` has shape {}x{}, expected {}x{}",
                        t.len(),
                        t.dim(),
                        first.len(),
                        first.dim()
                    )));
                }
            }
        }
        for (i, (v, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(w, _)| w == v) {
                return Err(Error::InvalidSystem(format!(
                    "trace variable `{v}` assigned twice"
                )));
            }
        }
        Ok(TraceTuple { entries })
    }

    pub fn get(&self, v: &TraceVar) -> Option<&Trace> {
        self.entries.iter().find(|(w, _)| w == v).map(|(_, t)| t)
    }

    pub fn vars(&self) -> Vec<TraceVar> {
        self.entries.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn traces(&self) -> Vec<&Trace> {
        self.entries.iter().map(|(_, t)| t).collect()
    }

    pub fn entries(&self) -> &[(TraceVar, Trace)] {
        &self.entries
    }

    /// Last time index `L`, or `None` for an empty tuple.
    pub fn last_index(&self) -> Option<usize> {
        self.entries
            .first()
            .and_then(|(_, t)| t.len().checked_sub(1))
    }
}

#[derive(Clone, Debug)]
enum CPred {
    Affine {
        terms: Vec<(usize, usize, f64)>,
        constant: f64,
    },
    InBox {
        slot: usize,
        dims: Vec<usize>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    StateEq {
        a: usize,
        b: usize,
        dims: Vec<usize>,
        tol: f64,
    },
}

impl CPred {
    fn value(&self, traces: &[&Trace], t: usize) -> f64 {
        match self {
            CPred::Affine { terms, constant } => terms
                .iter()
                .fold(*constant, |acc, &(s, d, c)| acc + c * traces[s].state(t)[d]),
            CPred::InBox { slot, dims, lo, hi } => {
                let x = traces[*slot].state(t);
                dims.iter()
                    .enumerate()
                    .map(|(i, &d)| (x[d] - lo[i]).min(hi[i] - x[d]))
                    .fold(f64::INFINITY, f64::min)
            }
            CPred::StateEq { a, b, dims, tol } => {
                let (xa, xb) = (traces[*a].state(t), traces[*b].state(t));
                tol - dims
                    .iter()
                    .map(|&d| (xa[d] - xb[d]).abs())
                    .fold(0.0, f64::max)
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Node {
    True,
    Pred(CPred),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Implies(usize, usize),
    Until(usize, usize, usize, usize),
    Eventually(usize, usize, usize),
    Always(usize, usize, usize),
}

/// Value domain of the evaluation dynamic program.
trait Lattice: Copy {
    const TOP: Self;
    const BOTTOM: Self;
    fn from_pred(v: f64) -> Self;
    fn neg(self) -> Self;
    fn meet(self, o: Self) -> Self;
    fn join(self, o: Self) -> Self;
}

impl Lattice for f64 {
    const TOP: f64 = ROBUSTNESS_CAP;
    const BOTTOM: f64 = -ROBUSTNESS_CAP;
    fn from_pred(v: f64) -> f64 {
        v
    }
    fn neg(self) -> f64 {
        -self
    }
    fn meet(self, o: f64) -> f64 {
        self.min(o)
    }
    fn join(self, o: f64) -> f64 {
        self.max(o)
    }
}

impl Lattice for bool {
    const TOP: bool = true;
    const BOTTOM: bool = false;
    fn from_pred(v: f64) -> bool {
        v >= 0.0
    }
    fn neg(self) -> bool {
        !self
    }
    fn meet(self, o: bool) -> bool {
        self && o
    }
    fn join(self, o: bool) -> bool {
        self || o
    }
}

/// A body compiled against an ordered list of trace slots.
#[derive(Clone, Debug)]
pub struct Monitor {
    nodes: Vec<Node>,
    horizon: usize,
    slots: Vec<TraceVar>,
    max_dim: Option<usize>,
}

impl Monitor {
    /// Compiles `body`; trace variables resolve to positions in `slots`.
    pub fn new(body: &Body, slots: &[TraceVar]) -> Result<Self> {
        let mut m = Monitor {
            nodes: Vec::new(),
            horizon: horizon(body),
            slots: slots.to_vec(),
            max_dim: None,
        };
        m.compile(body)?;
        Ok(m)
    }

    /// Compiles `body` with slots in first-occurrence order.
    pub fn for_body(body: &Body) -> Result<Self> {
        Self::new(body, &body.vars())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn slots(&self) -> &[TraceVar] {
        &self.slots
    }

    fn slot(&self, v: &TraceVar) -> Result<usize> {
        self.slots
            .iter()
            .position(|s| s == v)
            .ok_or_else(|| Error::InvalidFormula(format!("trace variable `{v}` has no trace")))
    }

    fn compile(&mut self, body: &Body) -> Result<usize> {
        let node = match body {
            Body::True => Node::True,
            Body::Pred(p) => {
                if let Some(d) = p.max_dim() {
                    self.max_dim = Some(self.max_dim.map_or(d, |m| m.max(d)));
                }
                Node::Pred(match p {
                    Predicate::Affine(a) => CPred::Affine {
                        terms: a
                            .terms
                            .iter()
                            .map(|t| Ok((self.slot(&t.var)?, t.dim, t.coef)))
                            .collect::<Result<_>>()?,
                        constant: a.constant,
                    },
                    Predicate::Named(NamedPredicate::InBox { var, dims, lo, hi }) => {
                        if lo.len() != dims.len() || hi.len() != dims.len() {
                            return Err(Error::InvalidFormula(
                                "inbox bounds do not match its dimensions".into(),
                            ));
                        }
                        CPred::InBox {
                            slot: self.slot(var)?,
                            dims: dims.clone(),
                            lo: lo.clone(),
                            hi: hi.clone(),
                        }
                    }
                    Predicate::Named(NamedPredicate::StateEq { a, b, dims, tol }) => {
                        CPred::StateEq {
                            a: self.slot(a)?,
                            b: self.slot(b)?,
                            dims: dims.clone(),
                            tol: *tol,
                        }
                    }
                })
            }
            Body::Not(b) => Node::Not(self.compile(b)?),
            Body::And(v) => Node::And(v.iter().map(|b| self.compile(b)).collect::<Result<_>>()?),
            Body::Or(v) => Node::Or(v.iter().map(|b| self.compile(b)).collect::<Result<_>>()?),
            Body::Implies(a, b) => {
                let a = self.compile(a)?;
                Node::Implies(a, self.compile(b)?)
            }
            Body::Until(i, a, b) => {
                let a = self.compile(a)?;
                Node::Until(a, self.compile(b)?, i.lo, i.hi)
            }
            Body::Eventually(i, b) => Node::Eventually(self.compile(b)?, i.lo, i.hi),
            Body::Always(i, b) => Node::Always(self.compile(b)?, i.lo, i.hi),
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    fn check(&self, traces: &[&Trace], t: usize) -> Result<()> {
        if traces.len() < self.slots.len() {
            return Err(Error::InvalidFormula(format!(
                "monitor needs {} traces, got {}",
                self.slots.len(),
                traces.len()
            )));
        }
        let used = &traces[..self.slots.len()];
        let len = used.iter().map(|tr| tr.len()).min().unwrap_or(usize::MAX);
        if used.is_empty() {
            return Ok(());
        }
        if len == 0 || t + self.horizon > len - 1 {
            return Err(Error::HorizonOverrun {
                t,
                horizon: self.horizon,
                last: len.saturating_sub(1),
            });
        }
        if let Some(d) = self.max_dim {
            if let Some(tr) = used.iter().find(|tr| tr.dim() <= d) {
                return Err(Error::InvalidFormula(format!(
                    "predicate reads state dimension {d} of a {}-dimensional trace",
                    tr.dim()
                )));
            }
        }
        Ok(())
    }

    fn run<T: Lattice>(&self, traces: &[&Trace], t: usize) -> T {
        let n = self.nodes.len();
        // Time window each node must be evaluated on.
        let mut range = vec![(usize::MAX, 0usize); n];
        range[n - 1] = (t, t);
        for i in (0..n).rev() {
            let (s, e) = range[i];
            let mut widen = |c: usize, s: usize, e: usize| {
                let r = &mut range[c];
                r.0 = r.0.min(s);
                r.1 = r.1.max(e);
            };
            match &self.nodes[i] {
                Node::True | Node::Pred(_) => {}
                Node::Not(c) => widen(*c, s, e),
                Node::And(v) | Node::Or(v) => v.iter().for_each(|&c| widen(c, s, e)),
                Node::Implies(a, b) => {
                    widen(*a, s, e);
                    widen(*b, s, e);
                }
                Node::Until(a, b, lo, hi) => {
                    widen(*a, s + lo, e + hi);
                    widen(*b, s + lo, e + hi);
                }
                Node::Eventually(c, lo, hi) | Node::Always(c, lo, hi) => widen(*c, s + lo, e + hi),
            }
        }
        let mut vals: Vec<Vec<T>> = Vec::with_capacity(n);
        for i in 0..n {
            let (s, e) = range[i];
            let at = |vals: &Vec<Vec<T>>, c: usize, tt: usize| vals[c][tt - range[c].0];
            let mut out = Vec::with_capacity(e + 1 - s);
            for tt in s..=e {
                let v = match &self.nodes[i] {
                    Node::True => T::TOP,
                    Node::Pred(p) => T::from_pred(p.value(traces, tt)),
                    Node::Not(c) => at(&vals, *c, tt).neg(),
                    Node::And(v) => v.iter().fold(T::TOP, |acc, &c| acc.meet(at(&vals, c, tt))),
                    Node::Or(v) => v
                        .iter()
                        .fold(T::BOTTOM, |acc, &c| acc.join(at(&vals, c, tt))),
                    Node::Implies(a, b) => at(&vals, *a, tt).neg().join(at(&vals, *b, tt)),
                    Node::Until(a, b, lo, hi) => {
                        let mut best = T::BOTTOM;
                        let mut run = T::TOP;
                        for tp in tt + lo..=tt + hi {
                            run = run.meet(at(&vals, *a, tp));
                            best = best.join(run.meet(at(&vals, *b, tp)));
                        }
                        best
                    }
                    Node::Eventually(c, lo, hi) => {
                        (tt + lo..=tt + hi).fold(T::BOTTOM, |acc, tp| acc.join(at(&vals, *c, tp)))
                    }
                    Node::Always(c, lo, hi) => {
                        (tt + lo..=tt + hi).fold(T::TOP, |acc, tp| acc.meet(at(&vals, *c, tp)))
                    }
                };
                out.push(v);
            }
            vals.push(out);
        }
        vals[n - 1][0]
    }

    /// Robustness at `t`; `traces[i]` is the trace bound to `slots()[i]`.
    pub fn robustness(&self, traces: &[&Trace], t: usize) -> Result<f64> {
        self.check(traces, t)?;
        Ok(self.run::<f64>(traces, t))
    }

    /// Boolean satisfaction at `t` (predicates hold when their value is `>= 0`).
    pub fn eval_bool(&self, traces: &[&Trace], t: usize) -> Result<bool> {
        self.check(traces, t)?;
        Ok(self.run::<bool>(traces, t))
    }

    fn bind<'a>(&self, tuple: &'a TraceTuple) -> Result<Vec<&'a Trace>> {
        self.slots
            .iter()
            .map(|v| {
                tuple
                    .get(v)
                    .ok_or_else(|| Error::InvalidFormula(format!("no trace bound to `{v}`")))
            })
            .collect()
    }
}

/// Boolean satisfaction of `body` over `traces` at time `t`.
pub fn eval_bool(body: &Body, traces: &TraceTuple, t: usize) -> Result<bool> {
    let m = Monitor::for_body(body)?;
    m.eval_bool(&m.bind(traces)?, t)
}

/// Quantitative robustness of `body` over `traces` at time `t`.
pub fn robustness(body: &Body, traces: &TraceTuple, t: usize) -> Result<f64> {
    let m = Monitor::for_body(body)?;
    m.robustness(&m.bind(traces)?, t)
}

/// `true` iff robustness strictly exceeds `margin`.
pub fn robustness_margin_check(
    body: &Body,
    traces: &TraceTuple,
    t: usize,
    margin: f64,
) -> Result<bool> {
    Ok(robustness(body, traces, t)? > margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_body, AffinePredicate};

    fn one(values: &[f64]) -> TraceTuple {
        TraceTuple::new(vec![("p".into(), Trace::scalar(values))]).unwrap()
    }

    fn x_ge(c: f64) -> Body {
        Body::pred(AffinePredicate::new(-c).with_term("p", 0, 1.0))
    }

    #[test]
    fn predicate_value() {
        assert!(eval_bool(&x_ge(1.0), &one(&[3.0]), 0).unwrap());
        assert_eq!(robustness(&x_ge(1.0), &one(&[3.0]), 0).unwrap(), 2.0);
    }

    #[test]
    fn always_min() {
        let g = Body::always(0, 2, x_ge(0.0));
        let tr = one(&[1.0, -0.5, 2.0]);
        assert!(!eval_bool(&g, &tr, 0).unwrap());
        assert_eq!(robustness(&g, &tr, 0).unwrap(), -0.5);
    }

    #[test]
    fn eventually_max() {
        let f = Body::eventually(0, 2, x_ge(0.0));
        assert_eq!(robustness(&f, &one(&[-1.0, -3.0, 4.0]), 0).unwrap(), 4.0);
    }

    #[test]
    fn until_left_operand_starts_at_lower_bound() {
        let u = Body::until(1, 3, x_ge(0.0), x_ge(5.0));
        assert!(eval_bool(&u, &one(&[0.0, 1.0, 2.0, 6.0, 0.0]), 0).unwrap());
        // Left operand fails at t = 0, which lies before t + a and must be ignored.
        assert!(eval_bool(&u, &one(&[-9.0, 1.0, 2.0, 6.0, 0.0]), 0).unwrap());
        assert!(!eval_bool(&u, &one(&[0.0, 1.0, -2.0, 6.0, 0.0]), 0).unwrap());
    }

    #[test]
    fn margin_check_is_strict() {
        let tr = one(&[0.5]);
        assert!(robustness_margin_check(&x_ge(0.0), &tr, 0, 0.0).unwrap());
        assert!(!robustness_margin_check(&x_ge(0.5), &tr, 0, 0.0).unwrap());
        assert!(!robustness_margin_check(&x_ge(0.45), &tr, 0, 0.1).unwrap());
    }

    #[test]
    fn true_is_capped() {
        assert_eq!(
            robustness(&Body::True, &one(&[0.0]), 0).unwrap(),
            ROBUSTNESS_CAP
        );
    }

    #[test]
    fn horizon_overrun() {
        let g = Body::always(0, 3, x_ge(0.0));
        assert!(matches!(
            robustness(&g, &one(&[1.0, 1.0, 1.0]), 0),
            Err(Error::HorizonOverrun { .. })
        ));
        assert!(matches!(
            robustness(&g, &one(&[1.0; 5]), 2),
            Err(Error::HorizonOverrun { .. })
        ));
        assert!(robustness(&g, &one(&[1.0; 5]), 1).is_ok());
    }

    #[test]
    fn named_predicates() {
        let a = Trace::new(vec![vec![1.0, 9.0]]).unwrap();
        let b = Trace::new(vec![vec![1.5, 9.0]]).unwrap();
        let tup = TraceTuple::new(vec![("p".into(), a), ("q".into(), b)]).unwrap();
        let inb = parse_body("inbox(p; 0:[0,2], 1:[8,10])").unwrap();
        assert_eq!(robustness(&inb, &tup, 0).unwrap(), 1.0);
        let pq = parse_body("eq(p, q; 0,1; 0.1)").unwrap();
        let qp = parse_body("eq(q, p; 0,1; 0.1)").unwrap();
        assert_eq!(
            robustness(&pq, &tup, 0).unwrap(),
            robustness(&qp, &tup, 0).unwrap()
        );
        assert!((robustness(&pq, &tup, 0).unwrap() + 0.4).abs() < 1e-12);
    }

    #[test]
    fn windowed_evaluation_later_start() {
        let f = Body::always(1, 2, Body::eventually(0, 1, x_ge(0.0)));
        let tr = one(&[-1.0, -1.0, 2.0, -1.0, 3.0, -4.0]);
        // t=1: G over t'=2,3 of F[0,1]: max(x2,x3)=2, max(x3,x4)=3 -> 2
        assert_eq!(robustness(&f, &tr, 1).unwrap(), 2.0);
    }
}
