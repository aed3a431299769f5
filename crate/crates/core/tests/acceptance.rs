//! Acceptance criteria A1 to A8. Runs without the libtest harness and
//! prints one PASS/FAIL line per criterion; exits non-zero on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use hyperstl::config::{Config, Loaded, TemplateSpec};
use hyperstl::formula::{parse, Body, Quantifier, QuantifierPrefix};
use hyperstl::hyperspecs::Region;
use hyperstl::milp::{encode, solve, MilpStatus, Objective, SolveLimits};
use hyperstl::oracle::{enumerate_traces, eval_hyper, eval_hyper_fixed};
use hyperstl::planner::{plan, plan_depth_one, Backend, PlanResult, PlanStatus, PlannerConfig};
use hyperstl::semantics::{Monitor, Trace};
use hyperstl::system::{InputGrid, InputSequence, SystemModel};
use rand::Rng;

const A1_INSTANCES: usize = 120;
const A2_PAIRS: usize = 1000;
/// Robustness values closer to zero than this are exempt from the sign check.
const SIGN_EPS: f64 = 1e-9;
const A3_INSTANCES: usize = 60;
/// Desk budget for each scenario plan.
const SCENARIO_BUDGET: Duration = Duration::from_secs(15 * 60);
const A6_SAMPLES: usize = 1000;
const A6_MAX_DRAWS: usize = 200_000;
/// Agreement required between the MILP robustness variable and the monitor.
const MILP_RHO_TOL: f64 = 1e-6;
const A7_INSTANCES: usize = 60;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenarios() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"))
}

fn load(name: &str) -> Loaded {
    Config::load(&scenarios().join(name)).unwrap()
}

fn run_scenario(l: &Loaded) -> Result<(PlanResult, Duration), String> {
    let t = Instant::now();
    let r = plan(&l.formula, &l.config.system, &l.planner).map_err(|e| e.to_string())?;
    let took = t.elapsed();
    check(r.status == PlanStatus::Feasible, || {
        format!("status {} ({:?})", r.status, r.message)
    })?;
    check(took <= SCENARIO_BUDGET, || format!("took {took:?}"))?;
    Ok((r, took))
}

fn monitor(body: &Body, traces: &[&Trace]) -> f64 {
    let vars = body.vars();
    Monitor::new(body, &vars)
        .unwrap()
        .robustness(traces, 0)
        .unwrap()
}

fn full_rho(l: &Loaded, traces: &[Trace]) -> f64 {
    let refs: Vec<&Trace> = traces.iter().collect();
    Monitor::new(&l.formula.body, &l.formula.prefix.vars())
        .unwrap()
        .robustness(&refs, 0)
        .unwrap()
}

fn task_rho(task: &Body, tr: &Trace) -> f64 {
    monitor(task, &[tr])
}

/// `t` such that `trace` is inside one of `regions` at `t + delta`, for `t` in `0..=last`.
fn triggers(trace: &Trace, regions: &[Region], delta: usize, last: usize) -> Vec<usize> {
    (0..=last)
        .filter(|t| {
            t + delta < trace.len() && regions.iter().any(|r| r.contains(trace.state(t + delta)))
        })
        .collect()
}

fn a1() -> Outcome {
    let mut rng = rng(0xA1);
    let (mut feasible, mut done) = (0, 0);
    while done < A1_INSTANCES {
        let k = rng.gen_range(1..=3);
        let inst = instance(&mut rng, k);
        let pre = prefix(&mut rng, k, 2);
        let b = body(
            &mut rng,
            &pre.vars(),
            inst.model.n(),
            3,
            inst.n_steps,
            ALL_OPS,
        );
        let f = formula(pre, b);
        let cfg = grid_cfg(&inst);
        let grid = InputGrid::new(inst.grid.clone(), &inst.model.input_box).unwrap();
        let set = enumerate_traces(&inst.model, &grid, inst.n_steps).unwrap();
        let truth = eval_hyper(&f, &set.traces).unwrap().holds;
        let r = plan(&f, &inst.model, &cfg).map_err(|e| format!("instance {done}: {e}"))?;
        check(r.status != PlanStatus::BudgetExhausted, || {
            format!("instance {done} ran out of budget: {f}")
        })?;
        check((r.status == PlanStatus::Feasible) == truth, || {
            format!(
                "instance {done}: planner {} but oracle {truth} on {f}",
                r.status
            )
        })?;
        if truth {
            feasible += 1;
            let w = eval_hyper_fixed(&f, &set.traces, &[&r.traces[0]]).unwrap();
            check(w.holds, || {
                format!("instance {done}: returned pi1 is not a witness for {f}")
            })?;
        }
        done += 1;
    }
    Ok(format!(
        "{done} instances agree with the oracle ({feasible} feasible)"
    ))
}

fn a2() -> Outcome {
    let mut rng = rng(0xA2);
    let mut checked_sign = 0;
    for i in 0..A2_PAIRS {
        let k = rng.gen_range(1..=2);
        let dims = rng.gen_range(1..=2);
        let len = rng.gen_range(1..=10);
        let vs = vars(k);
        let b = body(&mut rng, &vs, dims, 4, len - 1, ALL_OPS);
        let trs: Vec<Trace> = (0..k).map(|_| trace(&mut rng, len, dims)).collect();
        let refs: Vec<&Trace> = trs.iter().collect();
        let m = Monitor::new(&b, &vs).unwrap();
        let rho = m.robustness(&refs, 0).unwrap();
        let reference = naive(&b, &vs, &refs, 0);
        check(rho.to_bits() == reference.to_bits(), || {
            format!("pair {i}: monitor {rho} vs naive {reference} on {b}")
        })?;
        if rho.abs() > SIGN_EPS {
            checked_sign += 1;
            check(m.eval_bool(&refs, 0).unwrap() == (rho > 0.0), || {
                format!("pair {i}: sign mismatch on {b}")
            })?;
        }
    }
    Ok(format!(
        "{A2_PAIRS} pairs match the naive evaluator bit for bit; {checked_sign} sign checks"
    ))
}

fn a3() -> Outcome {
    let mut rng = rng(0xA3);
    let (mut feasible, mut done) = (0, 0);
    while done < A3_INSTANCES {
        let k = rng.gen_range(2..=3);
        let e = rng.gen_range(1..k);
        let inst = instance(&mut rng, k);
        let qs = (0..k).map(|i| {
            if i < e {
                Quantifier::Exists
            } else {
                Quantifier::Forall
            }
        });
        let pre = QuantifierPrefix::new(qs.zip(vars(k)).collect()).unwrap();
        let b = body(
            &mut rng,
            &pre.vars(),
            inst.model.n(),
            3,
            inst.n_steps,
            ALL_OPS,
        );
        let f = formula(pre, b);
        let cfg = grid_cfg(&inst);
        let general = plan(&f, &inst.model, &cfg).map_err(|x| x.to_string())?;
        let depth_one = plan_depth_one(&f, &inst.model, &cfg).map_err(|x| x.to_string())?;
        check(general.status == depth_one.status, || {
            format!(
                "instance {done}: general {} vs depth-one {} on {f}",
                general.status, depth_one.status
            )
        })?;
        if depth_one.status == PlanStatus::Feasible {
            feasible += 1;
            // Exhaustive count check: every universal completion must give rho > 0.
            let grid = InputGrid::new(inst.grid.clone(), &inst.model.input_box).unwrap();
            let set = enumerate_traces(&inst.model, &grid, inst.n_steps).unwrap();
            let m = Monitor::new(&f.body, &f.prefix.vars()).unwrap();
            let lead: Vec<&Trace> = depth_one.traces.iter().take(e).collect();
            let mut idx = vec![0usize; k - e];
            'all: loop {
                if !set.is_empty() {
                    let mut tuple = lead.clone();
                    tuple.extend(idx.iter().map(|&i| &set.traces[i]));
                    let rho = m.robustness(&tuple, 0).unwrap();
                    check(rho > 0.0, || {
                        format!("instance {done}: completion {idx:?} has rho {rho} on {f}")
                    })?;
                }
                for slot in idx.iter_mut() {
                    *slot += 1;
                    if *slot < set.len() {
                        continue 'all;
                    }
                    *slot = 0;
                }
                break;
            }
        }
        done += 1;
    }
    Ok(format!(
        "{done} instances, both loops agree ({feasible} feasible, all completions clean)"
    ))
}

fn a4() -> Outcome {
    let l = load("opacity.json");
    let Some(TemplateSpec::PreOpacity(p)) = &l.config.formula.template else {
        return Err("not an opacity scenario".into());
    };
    let (r, took) = run_scenario(&l)?;
    let (pi1, pi2) = (&r.traces[0], &r.traces[1]);
    let t1 = task_rho(&p.task, pi1);
    let t2 = task_rho(&p.task, pi2);
    let body = full_rho(&l, &r.traces);
    check(t1 > 0.0 && t2 > 0.0, || {
        format!("task robustness {t1}, {t2}")
    })?;
    check(body > 0.0, || format!("formula robustness {body}"))?;
    let trig = triggers(
        pi1,
        std::slice::from_ref(&p.secret),
        p.delta,
        task_horizon(&p.task),
    );
    check(!trig.is_empty(), || "pi1 never triggers the secret".into())?;
    for &t in &trig {
        let inside = (t..=t + p.delta).find(|&s| p.secret.contains(pi2.state(s)));
        check(inside.is_none(), || {
            format!("pi2 inside the secret at {inside:?} after trigger {t}")
        })?;
    }
    Ok(format!(
        "FEASIBLE in {:.1?}; rho_task = {t1:.3e}, {t2:.3e}; rho = {body:.3e}; triggers {trig:?}",
        took
    ))
}

fn task_horizon(task: &Body) -> usize {
    hyperstl::formula::horizon(task)
}

/// Whether traces can be matched to distinct regions, each visited by its trace in `window`.
fn distinct_visits(
    traces: &[Trace],
    regions: &[Region],
    window: std::ops::RangeInclusive<usize>,
) -> Option<Vec<String>> {
    fn rec(i: usize, visits: &[Vec<usize>], used: &mut Vec<usize>) -> bool {
        if i == visits.len() {
            return true;
        }
        for &r in &visits[i] {
            if !used.contains(&r) {
                used.push(r);
                if rec(i + 1, visits, used) {
                    return true;
                }
                used.pop();
            }
        }
        false
    }
    let visits: Vec<Vec<usize>> = traces
        .iter()
        .map(|tr| {
            (0..regions.len())
                .filter(|&j| window.clone().any(|s| regions[j].contains(tr.state(s))))
                .collect()
        })
        .collect();
    let mut used = Vec::new();
    rec(0, &visits, &mut used).then(|| used.iter().map(|&j| regions[j].name.clone()).collect())
}

fn a5() -> Outcome {
    let l = load("anonymity.json");
    let Some(TemplateSpec::KAnonymity(p)) = &l.config.formula.template else {
        return Err("not an anonymity scenario".into());
    };
    let (r, took) = run_scenario(&l)?;
    check(r.traces.len() == p.k, || {
        format!("{} traces", r.traces.len())
    })?;
    let body = full_rho(&l, &r.traces);
    check(body > 0.0, || format!("formula robustness {body}"))?;
    let pi1 = &r.traces[0];
    let trig = triggers(pi1, &p.regions, p.delta, task_horizon(&p.task));
    check(!trig.is_empty(), || "pi1 never triggers".into())?;
    let mut names = Vec::new();
    for &t in &trig {
        for (i, tr) in r.traces.iter().enumerate() {
            let gap = p
                .eq_dims
                .iter()
                .map(|&d| (tr.state(t)[d] - pi1.state(t)[d]).abs())
                .fold(0.0, f64::max);
            check(gap <= p.eq_tol, || {
                format!("trace {} differs from pi1 by {gap} at trigger {t}", i + 1)
            })?;
        }
        names = distinct_visits(&r.traces, &p.regions, t..=t + p.delta)
            .ok_or_else(|| format!("no distinct regions within the delay after trigger {t}"))?;
    }
    Ok(format!(
        "FEASIBLE in {took:.1?}; rho = {body:.3e}; triggers {trig:?}; regions {names:?}"
    ))
}

fn a6() -> Outcome {
    let l = load("distinguishability.json");
    let Some(TemplateSpec::Distinguishability(p)) = &l.config.formula.template else {
        return Err("not a distinguishability scenario".into());
    };
    let (r, took) = run_scenario(&l)?;
    let model: &SystemModel = &l.config.system;
    let pi1 = &r.traces[0];
    check(task_rho(&p.task, pi1) > 0.0, || {
        "pi1 misses the task".into()
    })?;
    let trig = triggers(
        pi1,
        std::slice::from_ref(&p.critical),
        p.delta,
        task_horizon(&p.task),
    );
    let first = *trig.first().ok_or("pi1 never triggers")?;
    // Co-traces replay pi1 up to the first trigger, then draw inputs from a 3 x 3 grid.
    let (ulo, uhi) = (&model.input_box.lo, &model.input_box.hi);
    let grid: Vec<Vec<f64>> = [0.0, 0.5, 1.0]
        .iter()
        .flat_map(|a| {
            [0.0, 0.5, 1.0].iter().map(move |b| {
                vec![
                    ulo[0] + a * (uhi[0] - ulo[0]),
                    ulo[1] + b * (uhi[1] - ulo[1]),
                ]
            })
        })
        .collect();
    let n = r.inputs[0].len();
    let m = Monitor::new(&l.formula.body, &l.formula.prefix.vars()).unwrap();
    let mut rng = rng(0xA6);
    let (mut kept, mut draws, mut violations) = (0, 0, 0);
    while kept < A6_SAMPLES && draws < A6_MAX_DRAWS {
        draws += 1;
        let steps: Vec<Vec<f64>> = (0..n)
            .map(|s| {
                if s < first {
                    r.inputs[0].step(s).to_vec()
                } else {
                    grid[rng.gen_range(0..grid.len())].clone()
                }
            })
            .collect();
        let u = InputSequence::from_steps(steps).unwrap();
        let tr = model.rollout(&model.x0, &u);
        if !model.stays_in_box(&tr) || task_rho(&p.task, &tr) <= 0.0 {
            continue;
        }
        kept += 1;
        if !m.eval_bool(&[pi1, &tr], 0).unwrap() {
            violations += 1;
        }
    }
    check(kept >= A6_SAMPLES, || {
        format!("only {kept} task-satisfying co-traces in {draws} draws")
    })?;
    check(violations == 0, || {
        format!("{violations} of {kept} co-traces violate the obligation")
    })?;
    Ok(format!("FEASIBLE in {took:.1?}; {kept} co-traces from {draws} draws after trigger {first}, 0 violations"))
}

fn a7() -> Outcome {
    let mut rng = rng(0xA7);
    let mut optimal = 0;
    for i in 0..A7_INSTANCES {
        let k = rng.gen_range(1..=2);
        let inst = instance(&mut rng, k);
        let vs = vars(k);
        let b = body(&mut rng, &vs, inst.model.n(), 3, inst.n_steps, ALL_OPS);
        let objective = if rng.gen_bool(0.5) {
            Objective::MaxRobustness
        } else {
            Objective::MinRobustness
        };
        let enc = encode(
            &b,
            &inst.model,
            &vs,
            inst.n_steps,
            &vec![None; k],
            &objective,
            0.0,
        )
        .map_err(|e| e.to_string())?;
        let sol = solve(enc.problem(), SolveLimits::default()).map_err(|e| e.to_string())?;
        if sol.status != MilpStatus::Optimal {
            continue;
        }
        optimal += 1;
        let inputs: Vec<InputSequence> = enc
            .decode(&sol.values)
            .into_iter()
            .map(Option::unwrap)
            .collect();
        let trs: Vec<Trace> = inputs
            .iter()
            .map(|u| inst.model.rollout(&inst.model.x0, u))
            .collect();
        let refs: Vec<&Trace> = trs.iter().collect();
        let rho = Monitor::new(&b, &vs).unwrap().robustness(&refs, 0).unwrap();
        let milp_rho = enc.rho.as_ref().unwrap().eval(&sol.values);
        check(
            (rho - milp_rho).abs() <= MILP_RHO_TOL * (1.0 + rho.abs()),
            || format!("instance {i}: monitor {rho} vs MILP {milp_rho} on {b}"),
        )?;
    }
    check(optimal > A7_INSTANCES / 2, || {
        format!("only {optimal} optimal solves")
    })?;
    // Reachability of the integrator: x_k ranges over exactly [-k, k].
    let integ = SystemModel::integrator(0.0, 1.0, 100.0);
    let cfg = PlannerConfig {
        backend: Backend::Milp,
        ..Default::default()
    };
    let mut reach = 0;
    for k in 1..=5usize {
        for off in [-0.75, -0.25, 0.25, 0.75] {
            let c = k as f64 + off;
            for (src, expect) in [
                (
                    format!("exists p. F[{k},{k}](x[p][0] >= {c})"),
                    c < k as f64,
                ),
                (
                    format!("exists p. F[{k},{k}](x[p][0] <= {})", -c),
                    c < k as f64,
                ),
            ] {
                let r = plan(&parse(&src).unwrap(), &integ, &cfg).map_err(|e| e.to_string())?;
                check((r.status == PlanStatus::Feasible) == expect, || {
                    format!("{src}: {}", r.status)
                })?;
                reach += 1;
            }
        }
    }
    Ok(format!("{optimal} optimal solves agree within {MILP_RHO_TOL:e}; {reach} reach instances match [-k, k]"))
}

fn a8() -> Outcome {
    let mut same = Vec::new();
    for name in [
        "opacity.json",
        "integrator_reach.json",
        "integrator_unreachable.json",
    ] {
        let l = load(name);
        let a = plan(&l.formula, &l.config.system, &l.planner).map_err(|e| e.to_string())?;
        let b = plan(&l.formula, &l.config.system, &l.planner).map_err(|e| e.to_string())?;
        let (ja, jb) = (
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
        );
        check(ja == jb, || format!("{name}: results differ"))?;
        same.push(name);
    }
    Ok(format!("byte-identical PlanResult on rerun for {same:?}"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
    ];
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| a.starts_with('A'))
        .collect();
    let mut failed = 0;
    for (id, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match out {
            Ok(msg) => println!("{id} PASS ({:.1?}) {msg}", t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("{id} FAIL ({:.1?}) {msg}", t.elapsed());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
