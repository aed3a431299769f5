//! HyperSTL abstract syntax and its normal forms.
//!
//! A [`HyperFormula`] is a prenex quantifier prefix over trace variables
//! followed by a bounded-time STL body whose predicates may relate the
//! states of several traces at the same instant. Time is integer-stepped.

mod parser;
mod print;
pub mod text;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::Error;

pub use parser::{parse, parse_body, ParseError};

/// Name of a trace variable, e.g. `p1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceVar(pub String);

impl TraceVar {
    pub fn new(name: impl Into<String>) -> Self {
        TraceVar(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TraceVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TraceVar {
    fn from(s: &str) -> Self {
        TraceVar(s.to_owned())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn dual(self) -> Self {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }
}

/// Closed integer step interval `[lo, hi]` of a temporal operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self, Error> {
        if lo > hi {
            return Err(Error::InvalidFormula(format!(
                "inverted interval [{lo},{hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> usize {
        self.hi - self.lo
    }
}

/// Affine predicate `sum(coef * x[var][dim]) + constant >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePredicate {
    pub terms: Vec<AffineTerm>,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineTerm {
    pub var: TraceVar,
    pub dim: usize,
    pub coef: f64,
}

impl AffinePredicate {
    pub fn new(constant: f64) -> Self {
        AffinePredicate {
            terms: Vec::new(),
            constant,
        }
    }

    /// Adds `coef * x[var][dim]`, merging with an existing term on the same state component.
    pub fn with_term(mut self, var: impl Into<TraceVar>, dim: usize, coef: f64) -> Self {
        self.add_term(var.into(), dim, coef);
        self
    }

    pub fn add_term(&mut self, var: TraceVar, dim: usize, coef: f64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.var == var && t.dim == dim) {
            t.coef += coef;
        } else {
            self.terms.push(AffineTerm { var, dim, coef });
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        AffinePredicate {
            terms: self
                .terms
                .iter()
                .map(|t| AffineTerm {
                    var: t.var.clone(),
                    dim: t.dim,
                    coef: t.coef * k,
                })
                .collect(),
            constant: self.constant * k,
        }
    }
}

/// Predicates that are not a single affine form but reduce to a conjunction of affine forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NamedPredicate {
    /// Membership of `x[var]` in an axis-aligned box over `dims`.
    /// Value is the smallest face margin, positive inside.
    InBox {
        var: TraceVar,
        dims: Vec<usize>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `|x[a][d] - x[b][d]| <= tol` for every `d` in `dims`.
    /// Value is `tol - max_d |x[a][d] - x[b][d]|`.
    StateEq {
        a: TraceVar,
        b: TraceVar,
        dims: Vec<usize>,
        tol: f64,
    },
}

impl NamedPredicate {
    /// The affine forms whose minimum equals this predicate's value.
    pub fn affine_pieces(&self) -> Vec<AffinePredicate> {
        match self {
            NamedPredicate::InBox { var, dims, lo, hi } => {
                let mut out = Vec::with_capacity(2 * dims.len());
                for (i, &d) in dims.iter().enumerate() {
                    out.push(AffinePredicate::new(-lo[i]).with_term(var.clone(), d, 1.0));
                    out.push(AffinePredicate::new(hi[i]).with_term(var.clone(), d, -1.0));
                }
                out
            }
            NamedPredicate::StateEq { a, b, dims, tol } => {
                let mut out = Vec::with_capacity(2 * dims.len());
                for &d in dims {
                    out.push(
                        AffinePredicate::new(*tol)
                            .with_term(a.clone(), d, -1.0)
                            .with_term(b.clone(), d, 1.0),
                    );
                    out.push(
                        AffinePredicate::new(*tol)
                            .with_term(a.clone(), d, 1.0)
                            .with_term(b.clone(), d, -1.0),
                    );
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predicate {
    Affine(AffinePredicate),
    Named(NamedPredicate),
}

impl Predicate {
    pub fn vars(&self) -> Vec<&TraceVar> {
        match self {
            Predicate::Affine(a) => a.terms.iter().map(|t| &t.var).collect(),
            Predicate::Named(NamedPredicate::InBox { var, .. }) => vec![var],
            Predicate::Named(NamedPredicate::StateEq { a, b, .. }) => vec![a, b],
        }
    }

    /// Largest state index referenced, used for dimension checks.
    pub fn max_dim(&self) -> Option<usize> {
        match self {
            Predicate::Affine(a) => a.terms.iter().map(|t| t.dim).max(),
            Predicate::Named(NamedPredicate::InBox { dims, .. })
            | Predicate::Named(NamedPredicate::StateEq { dims, .. }) => dims.iter().copied().max(),
        }
    }

    /// Rewrites every trace variable through `f`.
    pub fn rename(&self, f: &dyn Fn(&TraceVar) -> TraceVar) -> Predicate {
        match self {
            Predicate::Affine(a) => Predicate::Affine(AffinePredicate {
                terms: a
                    .terms
                    .iter()
                    .map(|t| AffineTerm {
                        var: f(&t.var),
                        dim: t.dim,
                        coef: t.coef,
                    })
                    .collect(),
                constant: a.constant,
            }),
            Predicate::Named(NamedPredicate::InBox { var, dims, lo, hi }) => {
                Predicate::Named(NamedPredicate::InBox {
                    var: f(var),
                    dims: dims.clone(),
                    lo: lo.clone(),
                    hi: hi.clone(),
                })
            }
            Predicate::Named(NamedPredicate::StateEq { a, b, dims, tol }) => {
                Predicate::Named(NamedPredicate::StateEq {
                    a: f(a),
                    b: f(b),
                    dims: dims.clone(),
                    tol: *tol,
                })
            }
        }
    }
}

/// Quantifier-free STL body. `Or`, `Implies`, `Eventually` and `Always` are
/// derived forms; [`desugar`] removes them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Body {
    True,
    Pred(Predicate),
    Not(Box<Body>),
    And(Vec<Body>),
    Or(Vec<Body>),
    Implies(Box<Body>, Box<Body>),
    Until(Interval, Box<Body>, Box<Body>),
    Eventually(Interval, Box<Body>),
    Always(Interval, Box<Body>),
}

impl Body {
    pub fn pred(p: impl Into<Predicate>) -> Body {
        Body::Pred(p.into())
    }

    pub fn not(b: Body) -> Body {
        Body::Not(Box::new(b))
    }

    pub fn falsum() -> Body {
        Body::not(Body::True)
    }

    /// Conjunction; a single operand is returned unchanged and an empty list is `True`.
    pub fn and(mut parts: Vec<Body>) -> Body {
        match parts.len() {
            0 => Body::True,
            1 => parts.pop().unwrap(),
            _ => Body::And(parts),
        }
    }

    /// Disjunction; a single operand is returned unchanged and an empty list is false.
    pub fn or(mut parts: Vec<Body>) -> Body {
        match parts.len() {
            0 => Body::falsum(),
            1 => parts.pop().unwrap(),
            _ => Body::Or(parts),
        }
    }

    pub fn implies(a: Body, b: Body) -> Body {
        Body::Implies(Box::new(a), Box::new(b))
    }

    pub fn until(lo: usize, hi: usize, a: Body, b: Body) -> Body {
        Body::Until(Interval { lo, hi }, Box::new(a), Box::new(b))
    }

    pub fn eventually(lo: usize, hi: usize, b: Body) -> Body {
        Body::Eventually(Interval { lo, hi }, Box::new(b))
    }

    pub fn always(lo: usize, hi: usize, b: Body) -> Body {
        Body::Always(Interval { lo, hi }, Box::new(b))
    }

    pub fn children(&self) -> Vec<&Body> {
        match self {
            Body::True | Body::Pred(_) => vec![],
            Body::Not(b) | Body::Eventually(_, b) | Body::Always(_, b) => vec![b],
            Body::And(v) | Body::Or(v) => v.iter().collect(),
            Body::Implies(a, b) | Body::Until(_, a, b) => vec![a, b],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Body::True | Body::Pred(_))
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Trace variables referenced by predicates, in first-occurrence order.
    pub fn vars(&self) -> Vec<TraceVar> {
        let mut out: Vec<TraceVar> = Vec::new();
        self.visit_preds(&mut |p| {
            for v in p.vars() {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn visit_preds(&self, f: &mut dyn FnMut(&Predicate)) {
        if let Body::Pred(p) = self {
            f(p);
        }
        for c in self.children() {
            c.visit_preds(f);
        }
    }

    /// Rewrites every trace variable through `f`.
    pub fn rename(&self, f: &dyn Fn(&TraceVar) -> TraceVar) -> Body {
        match self {
            Body::True => Body::True,
            Body::Pred(p) => Body::Pred(p.rename(f)),
            Body::Not(b) => Body::not(b.rename(f)),
            Body::And(v) => Body::And(v.iter().map(|b| b.rename(f)).collect()),
            Body::Or(v) => Body::Or(v.iter().map(|b| b.rename(f)).collect()),
            Body::Implies(a, b) => Body::implies(a.rename(f), b.rename(f)),
            Body::Until(i, a, b) => Body::Until(*i, Box::new(a.rename(f)), Box::new(b.rename(f))),
            Body::Eventually(i, b) => Body::Eventually(*i, Box::new(b.rename(f))),
            Body::Always(i, b) => Body::Always(*i, Box::new(b.rename(f))),
        }
    }

    /// Replaces every occurrence of trace variable `from` by `to`.
    pub fn substitute(&self, from: &TraceVar, to: &TraceVar) -> Body {
        self.rename(&|v| if v == from { to.clone() } else { v.clone() })
    }

    /// Checks interval ordering on every temporal node.
    pub fn validate_intervals(&self) -> Result<(), Error> {
        match self {
            Body::Until(i, ..) | Body::Eventually(i, _) | Body::Always(i, _) if i.lo > i.hi => {
                return Err(Error::InvalidFormula(format!(
                    "inverted interval [{},{}]",
                    i.lo, i.hi
                )));
            }
            _ => {}
        }
        self.children()
            .iter()
            .try_for_each(|c| c.validate_intervals())
    }
}

impl From<AffinePredicate> for Predicate {
    fn from(a: AffinePredicate) -> Self {
        Predicate::Affine(a)
    }
}

impl From<NamedPredicate> for Predicate {
    fn from(n: NamedPredicate) -> Self {
        Predicate::Named(n)
    }
}

/// Ordered quantifier prefix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantifierPrefix(pub Vec<(Quantifier, TraceVar)>);

/// Maximal run of equal quantifiers; `slots` indexes into the prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub quantifier: Quantifier,
    pub slots: Range<usize>,
}

impl QuantifierPrefix {
    pub fn new(entries: Vec<(Quantifier, TraceVar)>) -> Result<Self, Error> {
        let mut seen = BTreeSet::new();
        for (_, v) in &entries {
            if !seen.insert(v.clone()) {
                return Err(Error::InvalidFormula(format!(
                    "duplicate quantifier variable `{v}`"
                )));
            }
        }
        Ok(QuantifierPrefix(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> Vec<TraceVar> {
        self.0.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn quantifiers(&self) -> Vec<Quantifier> {
        self.0.iter().map(|(q, _)| *q).collect()
    }

    pub fn position(&self, v: &TraceVar) -> Option<usize> {
        self.0.iter().position(|(_, w)| w == v)
    }

    pub fn alternation_blocks(&self) -> Vec<Block> {
        alternation_blocks(&self.quantifiers())
    }

    /// Number of quantifier switches along the prefix.
    pub fn alternation_depth(&self) -> usize {
        self.alternation_blocks().len().saturating_sub(1)
    }

    /// ∃-HyperSTL: non-empty with a leading existential.
    pub fn is_plannable(&self) -> bool {
        matches!(self.0.first(), Some((Quantifier::Exists, _)))
    }
}

/// Run-length encoding of a quantifier sequence.
pub fn alternation_blocks(qs: &[Quantifier]) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for (i, &q) in qs.iter().enumerate() {
        match out.last_mut() {
            Some(b) if b.quantifier == q => b.slots.end = i + 1,
            _ => out.push(Block {
                quantifier: q,
                slots: i..i + 1,
            }),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperFormula {
    pub prefix: QuantifierPrefix,
    pub body: Body,
}

impl HyperFormula {
    /// Builds a formula after checking that every variable is bound.
    pub fn new(prefix: QuantifierPrefix, body: Body) -> Result<Self, Error> {
        let f = HyperFormula { prefix, body };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), Error> {
        QuantifierPrefix::new(self.prefix.0.clone())?;
        self.body.validate_intervals()?;
        for v in self.body.vars() {
            if self.prefix.position(&v).is_none() {
                return Err(Error::InvalidFormula(format!(
                    "unbound trace variable `{v}`"
                )));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        horizon(&self.body)
    }

    pub fn is_plannable(&self) -> bool {
        self.prefix.is_plannable()
    }

    /// The formula with every quantifier dualized and the body negated.
    pub fn negated(&self) -> HyperFormula {
        HyperFormula {
            prefix: QuantifierPrefix(
                self.prefix
                    .0
                    .iter()
                    .map(|(q, v)| (q.dual(), v.clone()))
                    .collect(),
            ),
            body: negate(&self.body),
        }
    }
}

/// Rewrites derived operators into `{True, Pred, Not, And, Until}`.
pub fn desugar(body: &Body) -> Body {
    match body {
        Body::True => Body::True,
        Body::Pred(p) => Body::Pred(p.clone()),
        Body::Not(b) => Body::not(desugar(b)),
        Body::And(v) => Body::And(v.iter().map(desugar).collect()),
        Body::Or(v) => Body::not(Body::And(v.iter().map(|b| Body::not(desugar(b))).collect())),
        Body::Implies(a, b) => Body::not(Body::And(vec![desugar(a), Body::not(desugar(b))])),
        Body::Until(i, a, b) => Body::Until(*i, Box::new(desugar(a)), Box::new(desugar(b))),
        Body::Eventually(i, b) => Body::Until(*i, Box::new(Body::True), Box::new(desugar(b))),
        Body::Always(i, b) => Body::not(Body::Until(
            *i,
            Box::new(Body::True),
            Box::new(Body::not(desugar(b))),
        )),
    }
}

/// Logical negation pushed to negation normal form.
///
/// Negations end up on atoms and on `Until` nodes (which have no
/// dual in the grammar). `Implies` is eliminated along the way.
pub fn negate(body: &Body) -> Body {
    nnf(body, false)
}

/// Negation normal form of `body` without changing its meaning.
pub fn to_nnf(body: &Body) -> Body {
    nnf(body, true)
}

fn nnf(body: &Body, positive: bool) -> Body {
    match (body, positive) {
        (Body::True, true) => Body::True,
        (Body::True, false) => Body::falsum(),
        (Body::Pred(p), true) => Body::Pred(p.clone()),
        (Body::Pred(p), false) => Body::not(Body::Pred(p.clone())),
        (Body::Not(b), _) => nnf(b, !positive),
        (Body::And(v), true) => Body::And(v.iter().map(|b| nnf(b, true)).collect()),
        (Body::And(v), false) => Body::Or(v.iter().map(|b| nnf(b, false)).collect()),
        (Body::Or(v), true) => Body::Or(v.iter().map(|b| nnf(b, true)).collect()),
        (Body::Or(v), false) => Body::And(v.iter().map(|b| nnf(b, false)).collect()),
        (Body::Implies(a, b), true) => Body::Or(vec![nnf(a, false), nnf(b, true)]),
        (Body::Implies(a, b), false) => Body::And(vec![nnf(a, true), nnf(b, false)]),
        (Body::Until(i, a, b), true) => {
            Body::Until(*i, Box::new(nnf(a, true)), Box::new(nnf(b, true)))
        }
        (Body::Until(i, a, b), false) => Body::not(Body::Until(
            *i,
            Box::new(nnf(a, true)),
            Box::new(nnf(b, true)),
        )),
        (Body::Eventually(i, b), true) => Body::Eventually(*i, Box::new(nnf(b, true))),
        (Body::Eventually(i, b), false) => Body::Always(*i, Box::new(nnf(b, false))),
        (Body::Always(i, b), true) => Body::Always(*i, Box::new(nnf(b, true))),
        (Body::Always(i, b), false) => Body::Eventually(*i, Box::new(nnf(b, false))),
    }
}

/// Evaluation horizon: the sum of nested temporal upper bounds along the deepest path.
pub fn horizon(body: &Body) -> usize {
    match body {
        Body::True | Body::Pred(_) => 0,
        Body::Not(b) => horizon(b),
        Body::And(v) | Body::Or(v) => v.iter().map(horizon).max().unwrap_or(0),
        Body::Implies(a, b) => horizon(a).max(horizon(b)),
        Body::Until(i, a, b) => i.hi + horizon(a).max(horizon(b)),
        Body::Eventually(i, b) | Body::Always(i, b) => i.hi + horizon(b),
    }
}
