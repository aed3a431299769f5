use super::*;
use crate::formula::parse;
use crate::oracle::{enumerate_traces, eval_hyper};

fn integrator() -> SystemModel {
    SystemModel::integrator(0.0, 1.0, 10.0)
}

fn grid_cfg(points: &[f64]) -> PlannerConfig {
    PlannerConfig {
        backend: Backend::Grid,
        grid: Some(GridSpec::Points {
            points: points.iter().map(|v| vec![*v]).collect(),
        }),
        ..Default::default()
    }
}

fn oracle_holds(f: &HyperFormula, cfg: &PlannerConfig) -> bool {
    let m = integrator();
    let g = cfg.grid.as_ref().unwrap().build(&m).unwrap();
    let set = enumerate_traces(&m, &g, f.horizon()).unwrap();
    eval_hyper(f, &set.traces).unwrap().holds
}

#[test]
fn existential_reach_on_grid() {
    let f = parse("exists p. F[2,2](x[p][0] - 1.5 >= 0)").unwrap();
    let r = plan(&f, &integrator(), &grid_cfg(&[-1.0, 0.0, 1.0])).unwrap();
    assert_eq!(r.status, PlanStatus::Feasible);
    assert_eq!(r.inputs[0].as_flat(), &[1.0, 1.0]);
    assert_eq!(r.verification, Verification::Exact);
    assert_eq!(r.log.len(), 1);
    let f = parse("exists p. F[2,2](x[p][0] - 2.5 >= 0)").unwrap();
    assert_eq!(
        plan(&f, &integrator(), &grid_cfg(&[-1.0, 0.0, 1.0]))
            .unwrap()
            .status,
        PlanStatus::Infeasible
    );
}

#[test]
fn cost_prefers_short_paths() {
    let f = parse("exists p. F[0,2](x[p][0] - 0.5 >= 0)").unwrap();
    let mut cfg = grid_cfg(&[-1.0, 0.0, 1.0]);
    cfg.cost.alpha = 0.0;
    let r = plan(&f, &integrator(), &cfg).unwrap();
    assert_eq!(r.status, PlanStatus::Feasible);
    assert_eq!(r.cost, Some(1.0));
}

#[test]
fn grid_matches_oracle_on_alternations() {
    let cfg = grid_cfg(&[-1.0, 0.0, 1.0]);
    for src in [
        "exists a. forall b. G[0,2](x[a][0] - x[b][0] + 0.5 >= 0)",
        "exists a. forall b. G[0,2](x[a][0] - x[b][0] - 0.5 >= 0)",
        "exists a. forall b. exists c. F[2,2](x[c][0] - x[b][0] - 0.5 >= 0 & x[a][0] + 0.5 >= 0)",
        "exists a. forall b. exists c. F[2,2](x[c][0] - x[b][0] - 1.5 >= 0)",
        "exists a. forall b. exists c. G[1,2](x[c][0] - x[b][0] + x[a][0] - 0.5 >= 0)",
        "exists a. exists b. forall c. F[0,2](x[a][0] - x[c][0] - 0.5 >= 0 | x[b][0] + x[c][0] - 0.5 <= 0)",
    ] {
        let f = parse(src).unwrap();
        let r = plan(&f, &integrator(), &cfg).unwrap();
        let expect = oracle_holds(&f, &cfg);
        assert_ne!(r.status, PlanStatus::BudgetExhausted, "{src}");
        assert_eq!(r.status == PlanStatus::Feasible, expect, "{src}");
        if expect {
            let set = enumerate_traces(&integrator(), &cfg.grid.as_ref().unwrap().build(&integrator()).unwrap(), 2).unwrap();
            let fixed: Vec<&Trace> = r.traces.iter().collect();
            assert!(crate::oracle::eval_hyper_fixed(&f, &set.traces, &fixed).unwrap().holds, "{src}");
        }
    }
}

#[test]
fn depth_one_agrees_with_general_loop() {
    let cfg = grid_cfg(&[-1.0, 0.0, 1.0]);
    let f = parse("exists a. forall b. G[0,2](x[a][0] - x[b][0] + 0.5 >= 0)").unwrap();
    let a = plan(&f, &integrator(), &cfg).unwrap();
    let b = plan_depth_one(&f, &integrator(), &cfg).unwrap();
    assert_eq!(a.status, b.status);
    assert_eq!(a.inputs, b.inputs);
    let g = parse("exists a. forall b. exists c. true").unwrap();
    assert!(plan_depth_one(&g, &integrator(), &cfg).is_err());
}

#[test]
fn milp_alternation() {
    let cfg = PlannerConfig {
        backend: Backend::Milp,
        ..Default::default()
    };
    let f = parse("exists a. forall b. F[2,2](x[a][0] - x[b][0] + 0.5 >= 0)").unwrap();
    let r = plan(&f, &integrator(), &cfg).unwrap();
    assert_eq!(r.status, PlanStatus::Feasible, "{:?}", r.message);
    assert!(r.traces[0].state(2)[0] > 1.5 - 1e-6);
    let f = parse("exists a. forall b. F[2,2](x[a][0] - x[b][0] - 0.5 >= 0)").unwrap();
    assert_eq!(
        plan(&f, &integrator(), &cfg).unwrap().status,
        PlanStatus::Infeasible
    );
}

#[test]
fn stochastic_alternation() {
    let mut cfg = PlannerConfig {
        backend: Backend::Stochastic,
        ..Default::default()
    };
    cfg.search.iterations = 60;
    cfg.search.restarts = 4;
    let f = parse("exists a. forall b. F[2,2](x[a][0] - x[b][0] + 0.5 >= 0)").unwrap();
    let r = plan(&f, &integrator(), &cfg).unwrap();
    assert_eq!(r.status, PlanStatus::Feasible);
    assert_eq!(r.verification, Verification::Budgeted);
    assert!(r.robustness.unwrap() > 0.0);
    let again = plan(&f, &integrator(), &cfg).unwrap();
    assert_eq!(r.inputs, again.inputs);
    assert_eq!(r.log, again.log);
}

#[test]
fn rejects_bad_setups() {
    let f = parse("forall a. true").unwrap();
    assert!(plan(&f, &integrator(), &grid_cfg(&[0.0])).is_err());
    let f = parse("exists a. true").unwrap();
    assert!(plan(&f, &integrator(), &PlannerConfig::default()).is_err());
    let uni = SystemModel::unicycle(0.5).unwrap();
    let cfg = PlannerConfig {
        backend: Backend::Milp,
        ..Default::default()
    };
    assert!(matches!(plan(&f, &uni, &cfg), Err(Error::Unsupported(_))));
}

#[test]
fn candidate_set_dedupes() {
    let mut s = CandidateSet::default();
    let a = vec![InputSequence::constant(&[0.5], 2)];
    assert!(s.insert(a.clone()));
    assert!(!s.insert(vec![InputSequence::from_flat(1, vec![0.5 + 1e-12, 0.5])]));
    assert!(s.insert(vec![InputSequence::constant(&[0.4], 2)]));
    assert_eq!(s.len(), 2);
}

#[test]
fn verify_fixed_prefix() {
    let cfg = grid_cfg(&[-1.0, 0.0, 1.0]);
    let f = parse("exists a. forall b. G[0,2](x[a][0] - x[b][0] + 0.5 >= 0)").unwrap();
    let top = InputSequence::constant(&[1.0], 2);
    let low = InputSequence::constant(&[0.0], 2);
    assert!(matches!(
        verify_inputs(&f, &integrator(), &cfg, &[top]).unwrap(),
        Check::Holds { .. }
    ));
    assert!(matches!(
        verify_inputs(&f, &integrator(), &cfg, &[low]).unwrap(),
        Check::Fails { .. }
    ));
}
