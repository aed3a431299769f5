//! Information-flow templates (pre-opacity, K-anonymity, distinguishability)
//! and the warehouse workspace used by the demo scenarios.
//!
//! Every template binds its task to `pi1` (and, where the definition asks for
//! it, to the other traces), conjoins an optional target visit for `pi1`, and
//! returns the shared-prefix couplings the sampling backends use to realize
//! the state-equality constraint.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::formula::{
    horizon, Body, HyperFormula, NamedPredicate, Predicate, Quantifier, QuantifierPrefix, TraceVar,
};
use crate::optimizer::SearchConfig;
use crate::planner::{Anchor, Backend, CostSpec, Coupling, PlannerConfig, TriggerBox};
use crate::system::SystemModel;
use crate::{Error, Result};

/// Default tolerance of the state-equality predicate.
pub const EQ_TOL: f64 = 1e-6;

/// Named axis-aligned box over selected state dimensions. A box with some
/// `lo > hi` is empty: its membership value is negative everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub dims: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(
        name: impl Into<String>,
        dims: Vec<usize>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    ) -> Result<Self> {
        let r = Region {
            name: name.into(),
            dims,
            lo,
            hi,
        };
        r.validate()?;
        Ok(r)
    }

    /// A box `[x0, x1] x [y0, y1]` over state dimensions 0 and 1.
    pub fn planar(name: impl Into<String>, x: [f64; 2], y: [f64; 2]) -> Self {
        Region {
            name: name.into(),
            dims: vec![0, 1],
            lo: vec![x[0], y[0]],
            hi: vec![x[1], y[1]],
        }
    }

    /// The empty region over dimensions 0 and 1.
    pub fn empty(name: impl Into<String>) -> Self {
        Region {
            name: name.into(),
            dims: vec![0, 1],
            lo: vec![1.0, 1.0],
            hi: vec![-1.0, -1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty()
            || self.dims.len() != self.lo.len()
            || self.dims.len() != self.hi.len()
        {
            return Err(Error::Config(format!(
                "region `{}` needs one bound pair per dimension",
                self.name
            )));
        }
        if self.lo.iter().chain(&self.hi).any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "region `{}` has non-finite bounds",
                self.name
            )));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.dims
            .iter()
            .enumerate()
            .all(|(i, &d)| x[d] >= self.lo[i] && x[d] <= self.hi[i])
    }

    pub fn disjoint(&self, o: &Region) -> bool {
        if self.is_empty() || o.is_empty() {
            return true;
        }
        self.dims.iter().enumerate().any(|(i, d)| {
            o.dims
                .iter()
                .position(|e| e == d)
                .is_some_and(|j| self.hi[i] < o.lo[j] || o.hi[j] < self.lo[i])
        })
    }

    /// `x[var] in self`.
    pub fn inside(&self, var: &TraceVar) -> Body {
        Body::pred(Predicate::Named(NamedPredicate::InBox {
            var: var.clone(),
            dims: self.dims.clone(),
            lo: self.lo.clone(),
            hi: self.hi.clone(),
        }))
    }

    /// `x[var] not in self`.
    pub fn outside(&self, var: &TraceVar) -> Body {
        Body::not(self.inside(var))
    }

    pub fn trigger_box(&self) -> TriggerBox {
        TriggerBox {
            dims: self.dims.clone(),
            lo: self.lo.clone(),
            hi: self.hi.clone(),
        }
    }
}

/// `x[var]` in any of `regions`.
pub fn inside_any(regions: &[Region], var: &TraceVar) -> Body {
    Body::or(regions.iter().map(|r| r.inside(var)).collect())
}

/// A region `pi1` must visit inside a step window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub region: Region,
    pub window: [usize; 2],
}

fn default_eq_tol() -> f64 {
    EQ_TOL
}

fn default_true() -> bool {
    true
}

fn default_eq_dims() -> Vec<usize> {
    vec![0, 1, 2]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpacityParams {
    #[serde(with = "crate::formula::text")]
    pub task: Body,
    pub secret: Region,
    pub delta: usize,
    #[serde(default = "default_eq_tol")]
    pub eq_tol: f64,
    #[serde(default = "default_eq_dims")]
    pub eq_dims: Vec<usize>,
    #[serde(default = "default_true")]
    pub shared_prefix: bool,
    #[serde(default)]
    pub target: Option<Target>,
    /// Extra single-trace constraint on `pi1`, kept out of the task horizon.
    #[serde(default, with = "crate::formula::text::option")]
    pub guide: Option<Body>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnonymityParams {
    #[serde(with = "crate::formula::text")]
    pub task: Body,
    pub regions: Vec<Region>,
    pub k: usize,
    pub delta: usize,
    #[serde(default = "default_eq_tol")]
    pub eq_tol: f64,
    #[serde(default = "default_eq_dims")]
    pub eq_dims: Vec<usize>,
    #[serde(default = "default_true")]
    pub shared_prefix: bool,
    #[serde(default)]
    pub target: Option<Target>,
    /// Extra single-trace constraint on `pi1`, kept out of the task horizon.
    #[serde(default, with = "crate::formula::text::option")]
    pub guide: Option<Body>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinguishabilityParams {
    #[serde(with = "crate::formula::text")]
    pub task: Body,
    pub critical: Region,
    pub delta: usize,
    #[serde(default = "default_eq_tol")]
    pub eq_tol: f64,
    #[serde(default = "default_eq_dims")]
    pub eq_dims: Vec<usize>,
    #[serde(default = "default_true")]
    pub shared_prefix: bool,
    #[serde(default)]
    pub target: Option<Target>,
    /// Extra single-trace constraint on `pi1`, kept out of the task horizon.
    #[serde(default, with = "crate::formula::text::option")]
    pub guide: Option<Body>,
}

/// A template instance: the formula and the couplings that go with it.
#[derive(Clone, Debug, PartialEq)]
pub struct Template {
    pub formula: HyperFormula,
    pub couplings: Vec<Coupling>,
}

pub fn pi(i: usize) -> TraceVar {
    TraceVar::new(format!("pi{i}"))
}

/// The task with its single trace variable renamed to `var`.
pub fn bind_task(task: &Body, var: &TraceVar) -> Result<Body> {
    let vars = task.vars();
    if vars.len() > 1 {
        return Err(Error::InvalidFormula(format!(
            "a task must mention one trace, found {}",
            vars.len()
        )));
    }
    Ok(task.rename(&|_| var.clone()))
}

fn state_eq(a: &TraceVar, b: &TraceVar, dims: &[usize], tol: f64) -> Body {
    Body::pred(Predicate::Named(NamedPredicate::StateEq {
        a: a.clone(),
        b: b.clone(),
        dims: dims.to_vec(),
        tol,
    }))
}

fn check_common(
    delta: usize,
    eq_tol: f64,
    eq_dims: &[usize],
    target: &Option<Target>,
) -> Result<()> {
    if delta < 1 {
        return Err(Error::Config(
            "the prediction horizon must be at least one step".into(),
        ));
    }
    if !(eq_tol >= 0.0) || eq_dims.is_empty() {
        return Err(Error::Config(
            "state equality needs a non-negative tolerance and some dimensions".into(),
        ));
    }
    if let Some(t) = target {
        t.region.validate()?;
        if t.window[0] > t.window[1] {
            return Err(Error::Config("target window is inverted".into()));
        }
    }
    Ok(())
}

fn with_target(
    mut parts: Vec<Body>,
    target: &Option<Target>,
    guide: &Option<Body>,
) -> Result<Vec<Body>> {
    if let Some(t) = target {
        parts.push(Body::eventually(
            t.window[0],
            t.window[1],
            t.region.inside(&pi(1)),
        ));
    }
    if let Some(g) = guide {
        parts.push(bind_task(g, &pi(1))?);
    }
    Ok(parts)
}

fn exists(k: usize) -> Vec<(Quantifier, TraceVar)> {
    (1..=k).map(|i| (Quantifier::Exists, pi(i))).collect()
}

fn coupling(
    follower: usize,
    trigger: Vec<TriggerBox>,
    delta: usize,
    last: usize,
    anchor: Anchor,
) -> Coupling {
    Coupling {
        leader: 0,
        follower,
        trigger,
        delta,
        last_trigger: last,
        anchor,
    }
}

/// `exists pi1 pi2. phi(pi1) & phi(pi2) & G[0,T](F[d,d](pi1 in S) -> (pi1 = pi2) & G[0,d](pi2 not in S))`.
pub fn pre_opacity(p: &OpacityParams) -> Result<Template> {
    check_common(p.delta, p.eq_tol, &p.eq_dims, &p.target)?;
    p.secret.validate()?;
    let (a, b) = (pi(1), pi(2));
    let tp = horizon(&p.task);
    let d = p.delta;
    let guard = Body::implies(
        Body::eventually(d, d, p.secret.inside(&a)),
        Body::and(vec![
            state_eq(&a, &b, &p.eq_dims, p.eq_tol),
            Body::always(0, d, p.secret.outside(&b)),
        ]),
    );
    let parts = vec![
        bind_task(&p.task, &a)?,
        bind_task(&p.task, &b)?,
        Body::always(0, tp, guard),
    ];
    let formula = HyperFormula::new(
        QuantifierPrefix::new(exists(2))?,
        Body::and(with_target(parts, &p.target, &p.guide)?),
    )?;
    let couplings = if p.shared_prefix && !p.secret.is_empty() {
        vec![coupling(
            1,
            vec![p.secret.trigger_box()],
            d,
            tp,
            Anchor::Last,
        )]
    } else {
        Vec::new()
    };
    Ok(Template { formula, couplings })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `exists pi1..piK. phi(pi1) & G[0,T](F[d,d](pi1 in X_A) -> (pi1 = .. = piK) & OR_subsets AND_i F[0,d](pi_i in X_{m_i}))`.
///
/// Within each subset the `i`-th smallest region index is assigned to `pi_i`.
pub fn k_anonymity(p: &AnonymityParams) -> Result<Template> {
    check_common(p.delta, p.eq_tol, &p.eq_dims, &p.target)?;
    let n = p.regions.len();
    if p.k < 1 || p.k > n {
        return Err(Error::Config(format!("K = {} must lie in 1..={n}", p.k)));
    }
    for (i, r) in p.regions.iter().enumerate() {
        r.validate()?;
        if p.regions[i + 1..].iter().any(|o| !r.disjoint(o)) {
            return Err(Error::Config(format!(
                "anonymity regions must be pairwise disjoint; `{}` overlaps",
                r.name
            )));
        }
    }
    let tp = horizon(&p.task);
    let d = p.delta;
    let a = pi(1);
    let eq = Body::and(
        (2..=p.k)
            .map(|i| state_eq(&a, &pi(i), &p.eq_dims, p.eq_tol))
            .collect(),
    );
    let choices = Body::or(
        k_subsets(n, p.k)
            .into_iter()
            .map(|set| {
                Body::and(
                    set.iter()
                        .enumerate()
                        .map(|(i, &m)| Body::eventually(0, d, p.regions[m].inside(&pi(i + 1))))
                        .collect(),
                )
            })
            .collect(),
    );
    let guard = Body::implies(
        Body::eventually(d, d, inside_any(&p.regions, &a)),
        Body::and(vec![eq, choices]),
    );
    let parts = vec![bind_task(&p.task, &a)?, Body::always(0, tp, guard)];
    let formula = HyperFormula::new(
        QuantifierPrefix::new(exists(p.k))?,
        Body::and(with_target(parts, &p.target, &p.guide)?),
    )?;
    let boxes: Vec<TriggerBox> = p
        .regions
        .iter()
        .filter(|r| !r.is_empty())
        .map(Region::trigger_box)
        .collect();
    let couplings = if p.shared_prefix {
        (1..p.k)
            .map(|f| coupling(f, boxes.clone(), d, tp, Anchor::Last))
            .collect()
    } else {
        Vec::new()
    };
    Ok(Template { formula, couplings })
}

/// `exists pi1. forall pi2. phi(pi1) & (phi(pi2) -> G[0,T](F[d,d](pi1 in C) -> ((pi1 = pi2) -> F[0,d](pi2 in C))))`.
pub fn distinguishability(p: &DistinguishabilityParams) -> Result<Template> {
    check_common(p.delta, p.eq_tol, &p.eq_dims, &p.target)?;
    p.critical.validate()?;
    let (a, b) = (pi(1), pi(2));
    let tp = horizon(&p.task);
    let d = p.delta;
    let inner = Body::implies(
        Body::eventually(d, d, p.critical.inside(&a)),
        Body::implies(
            state_eq(&a, &b, &p.eq_dims, p.eq_tol),
            Body::eventually(0, d, p.critical.inside(&b)),
        ),
    );
    let parts = vec![
        bind_task(&p.task, &a)?,
        Body::implies(bind_task(&p.task, &b)?, Body::always(0, tp, inner)),
    ];
    let prefix = QuantifierPrefix::new(vec![(Quantifier::Exists, a), (Quantifier::Forall, b)])?;
    let formula = HyperFormula::new(prefix, Body::and(with_target(parts, &p.target, &p.guide)?))?;
    let couplings = if p.shared_prefix && !p.critical.is_empty() {
        vec![coupling(
            1,
            vec![p.critical.trigger_box()],
            d,
            tp,
            Anchor::First,
        )]
    } else {
        Vec::new()
    };
    Ok(Template { formula, couplings })
}

/// Workspace of the warehouse example with its robot model.
pub mod warehouse {
    use super::*;

    /// Trade-off between task robustness and path length.
    pub const ALPHA: f64 = 0.2;
    pub const DT: f64 = 0.5;
    /// Start pose `(p_x, p_y, theta)`.
    pub const X0: [f64; 3] = [0.5, 7.5, PI / 4.0];

    pub fn a1() -> Region {
        Region::planar("A1", [0.0, 2.0], [8.0, 10.0])
    }
    pub fn a2() -> Region {
        Region::planar("A2", [4.0, 6.0], [4.0, 6.0])
    }
    pub fn a3() -> Region {
        Region::planar("A3", [8.0, 10.0], [8.0, 10.0])
    }
    pub fn a4() -> Region {
        Region::planar("A4", [8.0, 10.0], [2.5, 4.5])
    }
    pub fn a5() -> Region {
        Region::planar("A5", [8.0, 10.0], [0.0, 2.0])
    }
    pub fn a6() -> Region {
        Region::planar("A6", [5.5, 7.5], [0.0, 2.0])
    }

    pub fn regions() -> Vec<Region> {
        vec![a1(), a2(), a3(), a4(), a5(), a6()]
    }

    /// `F[9,11](p in A1) & G[22,23](p in A2) & F[40,41](p in one of destinations)`.
    pub fn task_with(destinations: &[Region]) -> Body {
        let p = TraceVar::new("p");
        Body::and(vec![
            Body::eventually(9, 11, a1().inside(&p)),
            Body::always(22, 23, a2().inside(&p)),
            Body::eventually(40, 41, inside_any(destinations, &p)),
        ])
    }

    /// The delivery task ending in A3 to A5.
    pub fn task() -> Body {
        task_with(&[a3(), a4(), a5()])
    }

    /// The delivery task with destinations A3 to A6.
    pub fn task_anonymity() -> Body {
        task_with(&[a3(), a4(), a5(), a6()])
    }

    pub fn cost(task: &Body) -> CostSpec {
        CostSpec {
            alpha: ALPHA,
            task: Some(task.clone()),
            path_dims: vec![0, 1],
        }
    }

    pub fn model() -> SystemModel {
        SystemModel::unicycle(DT)
            .and_then(|m| m.with_x0(X0.to_vec()))
            .expect("workspace model is valid")
    }

    /// The last-window visit of `region`, used to make `pi1` commit to a destination.
    pub fn final_visit(region: Region) -> Target {
        Target {
            region,
            window: [40, 41],
        }
    }

    pub fn theta_range() -> [f64; 2] {
        [-PI, PI]
    }

    /// Observation delays of the three scenarios.
    pub const OPACITY_DELTA: usize = 4;
    pub const ANONYMITY_DELTA: usize = 10;
    pub const DISTINGUISHABILITY_DELTA: usize = 2;

    /// Route hint for `pi1` in the anonymity scenario: approach A4 from the
    /// north-west through a corridor, and stay clear of every destination
    /// except during the final visit. Followers then have room to branch
    /// towards A5 and A6 within the delay.
    pub fn anonymity_guide(delta: usize) -> Body {
        let p = TraceVar::new("p");
        let corridor = Region::planar("J", [7.0, 7.9], [2.8, 4.0]);
        let mut parts = vec![Body::eventually(31, 34, corridor.inside(&p))];
        for r in [a3(), a4(), a5(), a6()] {
            parts.push(Body::always(0, 39, r.outside(&p)));
            parts.push(Body::always(42, 41 + delta, r.outside(&p)));
        }
        Body::and(parts)
    }

    pub fn opacity() -> OpacityParams {
        OpacityParams {
            task: task(),
            secret: a4(),
            delta: OPACITY_DELTA,
            eq_tol: EQ_TOL,
            eq_dims: vec![0, 1, 2],
            shared_prefix: true,
            target: Some(final_visit(a4())),
            guide: None,
        }
    }

    pub fn anonymity() -> AnonymityParams {
        AnonymityParams {
            task: task_anonymity(),
            regions: vec![a3(), a4(), a5(), a6()],
            k: 3,
            delta: ANONYMITY_DELTA,
            eq_tol: EQ_TOL,
            eq_dims: vec![0, 1, 2],
            shared_prefix: true,
            target: Some(final_visit(a4())),
            guide: Some(anonymity_guide(ANONYMITY_DELTA)),
        }
    }

    pub fn distinguishability() -> DistinguishabilityParams {
        DistinguishabilityParams {
            task: task(),
            critical: a3(),
            delta: DISTINGUISHABILITY_DELTA,
            eq_tol: EQ_TOL,
            eq_dims: vec![0, 1, 2],
            shared_prefix: true,
            target: Some(final_visit(a3())),
            guide: None,
        }
    }

    /// Sampling planner settings used for all three scenarios; couplings come from the template.
    pub fn planner(seed: u64) -> PlannerConfig {
        PlannerConfig {
            backend: Backend::Stochastic,
            cost: cost(&task()),
            search: SearchConfig {
                block_len: 3,
                seed,
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

/// Task of the warehouse example with its regions and cost.
pub fn warehouse_task() -> (Body, Vec<Region>, CostSpec) {
    let t = warehouse::task();
    let c = warehouse::cost(&t);
    (t, warehouse::regions(), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::semantics::{Monitor, Trace};

    fn reach_task() -> Body {
        crate::formula::parse_body("F[0,2](x[p][0] - 1 >= 0)").unwrap()
    }

    fn line(r: &str, x: [f64; 2]) -> Region {
        Region {
            name: r.into(),
            dims: vec![0],
            lo: vec![x[0]],
            hi: vec![x[1]],
        }
    }

    #[test]
    fn opacity_shape() {
        let p = OpacityParams {
            task: reach_task(),
            secret: line("S", [3.0, 4.0]),
            delta: 2,
            eq_tol: EQ_TOL,
            eq_dims: vec![0],
            shared_prefix: true,
            target: None,
            guide: None,
        };
        let t = pre_opacity(&p).unwrap();
        assert_eq!(t.formula.prefix.quantifiers(), vec![Quantifier::Exists; 2]);
        assert_eq!(t.formula.horizon(), 4);
        assert_eq!(t.couplings.len(), 1);
        assert_eq!(t.couplings[0].anchor, Anchor::Last);
        assert!(pre_opacity(&OpacityParams { delta: 0, ..p }).is_err());
    }

    #[test]
    fn empty_secret_reduces_to_task() {
        let p = OpacityParams {
            task: reach_task(),
            secret: Region {
                name: "S".into(),
                dims: vec![0],
                lo: vec![1.0],
                hi: vec![-1.0],
            },
            delta: 1,
            eq_tol: EQ_TOL,
            eq_dims: vec![0],
            shared_prefix: true,
            target: None,
            guide: None,
        };
        let t = pre_opacity(&p).unwrap();
        assert!(t.couplings.is_empty());
        let m = Monitor::new(&t.formula.body, &[pi(1), pi(2)]).unwrap();
        let a = Trace::scalar(&[0.0, 1.5, 2.0, 2.0]);
        let b = Trace::scalar(&[0.0, 0.5, 1.2, 0.0]);
        let lazy = Trace::scalar(&[0.0, 0.0, 0.0, 0.0]);
        assert!(m.eval_bool(&[&a, &b], 0).unwrap());
        assert!(!m.eval_bool(&[&a, &lazy], 0).unwrap());
    }

    #[test]
    fn anonymity_disjunct_count() {
        let regions: Vec<Region> = (0..4)
            .map(|i| line(&format!("R{i}"), [i as f64 * 2.0, i as f64 * 2.0 + 1.0]))
            .collect();
        let p = AnonymityParams {
            task: reach_task(),
            regions,
            k: 3,
            delta: 2,
            eq_tol: EQ_TOL,
            eq_dims: vec![0],
            shared_prefix: true,
            target: None,
            guide: None,
        };
        assert_eq!(k_subsets(4, 3).len(), 4);
        let t = k_anonymity(&p).unwrap();
        assert_eq!(t.formula.prefix.len(), 3);
        assert_eq!(t.couplings.len(), 2);
        let mut boxes = 0;
        t.formula.body.visit_preds(&mut |p| {
            boxes += usize::from(matches!(p, Predicate::Named(NamedPredicate::InBox { .. })))
        });
        // Four trigger boxes plus three visits in each of the four disjuncts.
        assert_eq!(boxes, 4 + 12);
        assert!(k_anonymity(&AnonymityParams { k: 5, ..p.clone() }).is_err());
        let mut overl = p;
        overl.regions[1] = line("bad", [0.5, 1.5]);
        assert!(k_anonymity(&overl).is_err());
    }

    #[test]
    fn distinguishability_vacuous_when_companion_fails_task() {
        let p = DistinguishabilityParams {
            task: reach_task(),
            critical: line("C", [3.0, 9.0]),
            delta: 1,
            eq_tol: EQ_TOL,
            eq_dims: vec![0],
            shared_prefix: true,
            target: None,
            guide: None,
        };
        let t = distinguishability(&p).unwrap();
        assert_eq!(
            t.formula.prefix.quantifiers(),
            vec![Quantifier::Exists, Quantifier::Forall]
        );
        let m = Monitor::new(&t.formula.body, &[pi(1), pi(2)]).unwrap();
        let a = Trace::scalar(&[0.0, 1.5, 2.0, 3.5]);
        let idle = Trace::scalar(&[0.0, 0.0, 0.0, 0.0]);
        assert!(m.eval_bool(&[&a, &idle], 0).unwrap());
    }

    #[test]
    fn equality_is_symmetric() {
        let a = TraceVar::new("a");
        let b = TraceVar::new("b");
        let ab = Monitor::new(&state_eq(&a, &b, &[0, 1], 0.1), &[a.clone(), b.clone()]).unwrap();
        let ba = Monitor::new(&state_eq(&b, &a, &[0, 1], 0.1), &[a, b]).unwrap();
        let x = Trace::new(vec![vec![1.0, 2.0]]).unwrap();
        let y = Trace::new(vec![vec![1.05, 1.7]]).unwrap();
        assert_eq!(
            ab.robustness(&[&x, &y], 0).unwrap(),
            ba.robustness(&[&x, &y], 0).unwrap()
        );
    }

    #[test]
    fn warehouse_workspace() {
        let (task, regions, cost) = warehouse_task();
        assert_eq!(horizon(&task), 41);
        assert_eq!(regions[1], Region::planar("A2", [4.0, 6.0], [4.0, 6.0]));
        assert_eq!(cost.alpha, 0.2);
        assert!(warehouse::a6().disjoint(&warehouse::a5()));
        let f = parse("exists p. true").unwrap();
        assert!(f.is_plannable());
        assert!(!Region::empty("E").contains(&[0.0, 0.0]));
    }
}
