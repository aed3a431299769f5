//! The shipped scenario files load and give the documented verdicts.

use std::path::{Path, PathBuf};

use hyperstl::config::{Config, TemplateSpec};
use hyperstl::hyperspecs::warehouse;
use hyperstl::oracle::{enumerate_traces, eval_hyper};
use hyperstl::planner::{plan, PlanStatus};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn raw(name: &str) -> Config {
    Config::from_json(&std::fs::read_to_string(dir().join(name)).unwrap()).unwrap()
}

#[test]
fn every_scenario_loads_and_round_trips() {
    let mut seen = 0;
    for entry in std::fs::read_dir(dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let l = Config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(l.config.schema, 1);
            let again = Config::from_json(&serde_json::to_string(&l.config).unwrap()).unwrap();
            assert_eq!(again, l.config, "{}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, 8);
}

#[test]
fn case_study_files_match_builders() {
    let cases = [
        (
            "opacity.json",
            TemplateSpec::PreOpacity(warehouse::opacity()),
        ),
        (
            "anonymity.json",
            TemplateSpec::KAnonymity(warehouse::anonymity()),
        ),
        (
            "distinguishability.json",
            TemplateSpec::Distinguishability(warehouse::distinguishability()),
        ),
    ];
    for (name, template) in cases {
        let c = raw(name);
        assert_eq!(c.system, warehouse::model(), "{name}");
        assert_eq!(c.formula.template.as_ref(), Some(&template), "{name}");
        assert_eq!(c.regions, warehouse::regions(), "{name}");
        let expect = warehouse::planner(c.seed.unwrap_or_default());
        assert_eq!(c.planner.backend, expect.backend, "{name}");
        assert_eq!(c.planner.search, expect.search, "{name}");
    }
}

#[test]
fn templates_bind_couplings() {
    let l = Config::load(&dir().join("anonymity.json")).unwrap();
    assert_eq!(l.formula.prefix.len(), warehouse::anonymity().k);
    assert_eq!(l.planner.couplings.len(), warehouse::anonymity().k - 1);
    assert!(l.planner.couplings.iter().all(|c| c.leader == 0));
}

#[test]
fn integrator_verdicts() {
    for (name, expect) in [
        ("integrator_reach.json", PlanStatus::Feasible),
        ("integrator_unreachable.json", PlanStatus::Infeasible),
        ("integrator_dominance.json", PlanStatus::Feasible),
    ] {
        let l = Config::load(&dir().join(name)).unwrap();
        let r = plan(&l.formula, &l.config.system, &l.planner).unwrap();
        assert_eq!(r.status, expect, "{name}: {:?}", r.message);
    }
}

#[test]
fn exact_scenario_holds_on_its_grid() {
    let l = Config::load(&dir().join("integrator_exact.json")).unwrap();
    let v = l.config.verify.clone().unwrap();
    let grid = v.grid.unwrap().build(&l.config.system).unwrap();
    let set = enumerate_traces(&l.config.system, &grid, v.n_steps.unwrap()).unwrap();
    assert!(eval_hyper(&l.formula, &set.traces).unwrap().holds);
}
