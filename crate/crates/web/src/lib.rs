//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every entry point takes and returns JSON text so the page needs no
//! generated type glue. The plain `*_json` functions hold the logic and are
//! what the native tests call.

use hyperstl::config::Config;
use hyperstl::formula::parse;
use hyperstl::oracle::{enumerate_traces_capped, eval_hyper};
use hyperstl::planner::plan;
use hyperstl::semantics::{Monitor, Trace};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Robustness of `formula`'s body over `traces` (one array of state rows per trace variable).
pub fn monitor_json(formula: &str, traces: &str, at: usize) -> Res<String> {
    let f = parse(formula).map_err(err)?;
    let rows: Vec<Vec<Vec<f64>>> = serde_json::from_str(traces).map_err(err)?;
    let vars = f.prefix.vars();
    if rows.len() != vars.len() {
        return Err(format!(
            "{} trace variables but {} traces",
            vars.len(),
            rows.len()
        ));
    }
    let tr: Vec<Trace> = rows
        .into_iter()
        .map(Trace::new)
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let refs: Vec<&Trace> = tr.iter().collect();
    let m = Monitor::new(&f.body, &vars).map_err(err)?;
    let rho = m.robustness(&refs, at).map_err(err)?;
    Ok(json!({ "rho": rho, "holds": rho > 0.0 }).to_string())
}

fn load(config: &str) -> Res<hyperstl::config::Loaded> {
    let cfg = Config::from_json(config).map_err(err)?;
    if cfg.formula.file.is_some() {
        return Err("the demo cannot read formula files; use `text` or `template`".into());
    }
    cfg.resolve(Default::default()).map_err(err)
}

/// Exhaustive verdict over the config's grid.
pub fn verify_json(config: &str) -> Res<String> {
    let l = load(config)?;
    let model = &l.config.system;
    let spec = l.config.verify.clone().unwrap_or_default();
    let grid = spec
        .grid
        .or_else(|| l.planner.grid.clone())
        .ok_or("the config needs `verify.grid` or `planner.grid`")?
        .build(model)
        .map_err(err)?;
    let n = spec
        .n_steps
        .or(l.planner.n_steps)
        .unwrap_or_else(|| l.formula.horizon());
    let set = enumerate_traces_capped(model, &grid, n, l.planner.trace_cap).map_err(err)?;
    let v = eval_hyper(&l.formula, &set.traces).map_err(err)?;
    let chosen: Vec<Value> = v
        .assignment
        .iter()
        .map(|&i| json!({ "inputs": set.inputs[i], "states": states(&set.traces[i]) }))
        .collect();
    Ok(json!({ "holds": v.holds, "traces": set.len(), "assignment": chosen }).to_string())
}

fn states(t: &Trace) -> Vec<Vec<f64>> {
    t.states().map(<[f64]>::to_vec).collect()
}

/// Runs the planner and returns the plan with the regions to draw.
pub fn plan_json(config: &str) -> Res<String> {
    let l = load(config)?;
    let r = plan(&l.formula, &l.config.system, &l.planner).map_err(err)?;
    let traces: Vec<Vec<Vec<f64>>> = r.traces.iter().map(states).collect();
    Ok(json!({
        "status": r.status.to_string(),
        "robustness": r.robustness,
        "cost": r.cost,
        "iterations": r.iterations,
        "message": r.message,
        "slots": r.slots,
        "inputs": r.inputs,
        "traces": traces,
        "regions": l.regions,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn monitor(formula: &str, traces: &str, at: usize) -> Result<String, JsError> {
    monitor_json(formula, traces, at).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn verify(config: &str) -> Result<String, JsError> {
    verify_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = plan)]
pub fn plan_js(config: &str) -> Result<String, JsError> {
    plan_json(config).map_err(|e| JsError::new(&e))
}
