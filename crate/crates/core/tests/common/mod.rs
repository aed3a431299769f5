//! Shared generators and a reference evaluator for the integration tests.
#![allow(dead_code)]

use hyperstl::formula::{
    horizon, AffinePredicate, Body, HyperFormula, NamedPredicate, Predicate, Quantifier,
    QuantifierPrefix, TraceVar,
};
use hyperstl::planner::{Backend, GridSpec, PlannerConfig};
use hyperstl::semantics::{Trace, ROBUSTNESS_CAP};
use hyperstl::system::{BoxBounds, SystemModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which operators the generator may emit.
#[derive(Clone, Copy)]
pub struct Ops {
    pub until: bool,
    pub named: bool,
}

pub const ALL_OPS: Ops = Ops {
    until: true,
    named: true,
};

/// A random constant away from zero, so that ties with exact zero are improbable.
fn constant(rng: &mut TestRng) -> f64 {
    let c: f64 = rng.gen_range(0.05..2.5);
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

fn predicate(rng: &mut TestRng, vars: &[TraceVar], dims: usize, ops: Ops) -> Predicate {
    let pick = |rng: &mut TestRng| vars.choose(rng).unwrap().clone();
    if ops.named && rng.gen_bool(0.2) {
        let d: Vec<usize> = (0..dims).filter(|_| rng.gen_bool(0.7)).collect();
        let d = if d.is_empty() { vec![0] } else { d };
        if vars.len() > 1 && rng.gen_bool(0.5) {
            let a = pick(rng);
            let b = pick(rng);
            return Predicate::Named(NamedPredicate::StateEq {
                a,
                b,
                dims: d,
                tol: rng.gen_range(0.1..1.5),
            });
        }
        let lo: Vec<f64> = d.iter().map(|_| rng.gen_range(-2.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.3..2.5)).collect();
        return Predicate::Named(NamedPredicate::InBox {
            var: pick(rng),
            dims: d,
            lo,
            hi,
        });
    }
    let mut p = AffinePredicate::new(constant(rng));
    let terms = rng.gen_range(1..=2);
    for _ in 0..terms {
        let coef = [-1.0, 1.0, 0.5, -0.5, 2.0][rng.gen_range(0..5)];
        p.add_term(pick(rng), rng.gen_range(0..dims), coef);
    }
    if p.terms.iter().all(|t| t.coef == 0.0) {
        p.add_term(pick(rng), 0, 1.0);
    }
    Predicate::Affine(p)
}

/// A random body of at most `depth` levels whose horizon is at most `budget`.
pub fn body(
    rng: &mut TestRng,
    vars: &[TraceVar],
    dims: usize,
    depth: usize,
    budget: usize,
    ops: Ops,
) -> Body {
    if depth <= 1 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.05) {
            Body::True
        } else {
            Body::pred(predicate(rng, vars, dims, ops))
        };
    }
    let sub = |rng: &mut TestRng, budget| body(rng, vars, dims, depth - 1, budget, ops);
    let window = |rng: &mut TestRng| {
        let hi = rng.gen_range(0..=budget);
        let lo = rng.gen_range(0..=hi);
        (lo, hi)
    };
    match rng.gen_range(0..if ops.until { 8 } else { 7 }) {
        0 => Body::not(sub(rng, budget)),
        1 => Body::and(
            (0..rng.gen_range(2..=3))
                .map(|_| sub(rng, budget))
                .collect(),
        ),
        2 => Body::or(
            (0..rng.gen_range(2..=3))
                .map(|_| sub(rng, budget))
                .collect(),
        ),
        3 => Body::implies(sub(rng, budget), sub(rng, budget)),
        4 | 5 => {
            let (lo, hi) = window(rng);
            Body::eventually(lo, hi, sub(rng, budget - hi))
        }
        6 => {
            let (lo, hi) = window(rng);
            Body::always(lo, hi, sub(rng, budget - hi))
        }
        _ => {
            let (lo, hi) = window(rng);
            Body::until(lo, hi, sub(rng, budget - hi), sub(rng, budget - hi))
        }
    }
}

pub fn vars(k: usize) -> Vec<TraceVar> {
    (1..=k).map(|i| TraceVar::new(format!("pi{i}"))).collect()
}

/// A random trace with `len` samples of dimension `dims`.
pub fn trace(rng: &mut TestRng, len: usize, dims: usize) -> Trace {
    Trace::new(
        (0..len)
            .map(|_| (0..dims).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect(),
    )
    .unwrap()
}

/// Direct recursive robustness, coded from the definitions without sharing the monitor's code.
pub fn naive(b: &Body, vars: &[TraceVar], traces: &[&Trace], t: usize) -> f64 {
    let x = |v: &TraceVar, d: usize| traces[vars.iter().position(|u| u == v).unwrap()].state(t)[d];
    match b {
        Body::True => ROBUSTNESS_CAP,
        Body::Pred(Predicate::Affine(a)) => a.terms.iter().fold(a.constant, |acc, term| {
            acc + term.coef * x(&term.var, term.dim)
        }),
        Body::Pred(Predicate::Named(NamedPredicate::InBox { var, dims, lo, hi })) => {
            let mut m = f64::INFINITY;
            for (i, &d) in dims.iter().enumerate() {
                m = m.min((x(var, d) - lo[i]).min(hi[i] - x(var, d)));
            }
            m
        }
        Body::Pred(Predicate::Named(NamedPredicate::StateEq { a, b, dims, tol })) => {
            let mut gap: f64 = 0.0;
            for &d in dims {
                gap = gap.max((x(a, d) - x(b, d)).abs());
            }
            tol - gap
        }
        Body::Not(c) => -naive(c, vars, traces, t),
        Body::And(cs) => cs
            .iter()
            .map(|c| naive(c, vars, traces, t))
            .fold(ROBUSTNESS_CAP, f64::min),
        Body::Or(cs) => cs
            .iter()
            .map(|c| naive(c, vars, traces, t))
            .fold(-ROBUSTNESS_CAP, f64::max),
        Body::Implies(a, c) => (-naive(a, vars, traces, t)).max(naive(c, vars, traces, t)),
        Body::Eventually(i, c) => (t + i.lo..=t + i.hi)
            .map(|s| naive(c, vars, traces, s))
            .fold(-ROBUSTNESS_CAP, f64::max),
        Body::Always(i, c) => (t + i.lo..=t + i.hi)
            .map(|s| naive(c, vars, traces, s))
            .fold(ROBUSTNESS_CAP, f64::min),
        Body::Until(i, a, c) => {
            let mut best = -ROBUSTNESS_CAP;
            for s in t + i.lo..=t + i.hi {
                // The left operand must hold on [t + lo, s].
                let left = (t + i.lo..=s)
                    .map(|r| naive(a, vars, traces, r))
                    .fold(ROBUSTNESS_CAP, f64::min);
                best = best.max(left.min(naive(c, vars, traces, s)));
            }
            best
        }
    }
}

/// A random affine system of dimension 1 or 2 with a small input grid.
pub struct Instance {
    pub model: SystemModel,
    pub grid: Vec<Vec<f64>>,
    pub n_steps: usize,
}

pub fn instance(rng: &mut TestRng, k: usize) -> Instance {
    let n = rng.gen_range(1..=2);
    let m = rng.gen_range(1..=n);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        rng.gen_range(0.6..1.1)
                    } else {
                        rng.gen_range(-0.3..0.3)
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        rng.gen_range(0.5..1.5)
                    } else {
                        rng.gen_range(-0.5..0.5)
                    }
                })
                .collect()
        })
        .collect();
    let ubox = BoxBounds::new(vec![-1.0; m], vec![1.0; m]).unwrap();
    let xbox = BoxBounds::new(vec![-50.0; n], vec![50.0; n]).unwrap();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let model = SystemModel::affine(a, b, vec![0.0; n], xbox, ubox, x0).unwrap();
    let size = rng.gen_range(2..=3);
    let mut grid: Vec<Vec<f64>> = Vec::new();
    while grid.len() < size {
        let p: Vec<f64> = (0..m)
            .map(|_| [-1.0, -0.5, 0.0, 0.5, 1.0][rng.gen_range(0..5)])
            .collect();
        if !grid.contains(&p) {
            grid.push(p);
        }
    }
    // Keep |grid|^(N k) small enough for exhaustive checking.
    let mut n_steps = rng.gen_range(1..=5);
    while (size as f64).powi((n_steps * k) as i32) > 2.0e4 && n_steps > 1 {
        n_steps -= 1;
    }
    Instance {
        model,
        grid,
        n_steps,
    }
}

/// A random plannable prefix over `k` variables with at most `max_alt` alternations.
pub fn prefix(rng: &mut TestRng, k: usize, max_alt: usize) -> QuantifierPrefix {
    loop {
        let vs = vars(k);
        let qs: Vec<(Quantifier, TraceVar)> = vs
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                (
                    if i == 0 || rng.gen_bool(0.5) {
                        Quantifier::Exists
                    } else {
                        Quantifier::Forall
                    },
                    v,
                )
            })
            .collect();
        let p = QuantifierPrefix::new(qs).unwrap();
        if p.alternation_depth() <= max_alt {
            return p;
        }
    }
}

pub fn formula(prefix: QuantifierPrefix, body: Body) -> HyperFormula {
    HyperFormula::new(prefix, body).unwrap()
}

pub fn grid_cfg(inst: &Instance) -> PlannerConfig {
    PlannerConfig {
        backend: Backend::Grid,
        n_steps: Some(inst.n_steps),
        grid: Some(GridSpec::Points {
            points: inst.grid.clone(),
        }),
        ..Default::default()
    }
}

pub fn fits(b: &Body, n_steps: usize) -> bool {
    horizon(b) <= n_steps
}
