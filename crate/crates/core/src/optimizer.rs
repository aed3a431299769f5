//! Cross-entropy search over stacked input sequences.
//!
//! Samples are ranked feasible-first: feasible samples by ascending key,
//! infeasible ones by ascending key as well, where callers encode "less
//! violated" as a smaller key. Every restart draws from its own ChaCha stream
//! keyed by `seed` on stream `restart`, so serial and parallel runs agree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::formula::{Body, TraceVar};
use crate::semantics::Monitor;
use crate::system::{BoxBounds, InputSequence, SystemModel};
use crate::{Error, Result};

/// Restarts run in fixed-size waves; a stop condition is checked between waves.
const WAVE: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub population: usize,
    pub elite_frac: f64,
    pub iterations: usize,
    pub restarts: usize,
    /// Initial standard deviation per input dimension; a third of the box width when absent.
    pub init_std: Option<Vec<f64>>,
    pub seed: u64,
    /// Robustness a plan must exceed.
    pub margin: f64,
    /// Consecutive steps sharing one decision input.
    pub block_len: usize,
    /// Weight of the new elite statistics in the mean/std update.
    pub smoothing: f64,
    /// Per-trace coordinate sweeps tried when the joint search finds nothing feasible.
    pub refine_rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 200,
            elite_frac: 0.1,
            iterations: 150,
            restarts: 8,
            init_std: None,
            seed: 0,
            margin: 0.0,
            block_len: 1,
            smoothing: 0.8,
            refine_rounds: 3,
        }
    }
}

impl SearchConfig {
    pub fn elites(&self) -> usize {
        ((self.population as f64 * self.elite_frac).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.elites();
        if self.population < 2 * e || e < 1 {
            return Err(Error::Config(format!(
                "population {} must be at least twice the elite count {e}",
                self.population
            )));
        }
        if self.iterations == 0 || self.restarts == 0 || self.block_len == 0 {
            return Err(Error::Config(
                "iterations, restarts and block_len must be positive".into(),
            ));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::Config("smoothing must lie in (0, 1]".into()));
        }
        if let Some(s) = &self.init_std {
            if s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Config(
                    "initial standard deviations must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Rank of a sample: feasible beats infeasible, then smaller key wins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub feasible: bool,
    pub key: f64,
}

impl Score {
    pub fn feasible(key: f64) -> Self {
        Score {
            feasible: true,
            key,
        }
    }

    pub fn infeasible(key: f64) -> Self {
        Score {
            feasible: false,
            key,
        }
    }

    pub fn cmp_rank(&self, o: &Score) -> std::cmp::Ordering {
        o.feasible
            .cmp(&self.feasible)
            .then(self.key.total_cmp(&o.key))
    }

    pub fn better_than(&self, o: &Score) -> bool {
        self.cmp_rank(o) == std::cmp::Ordering::Less
    }
}

/// Box-constrained decision space with initial spreads.
#[derive(Clone, Debug)]
pub struct SearchSpace {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub std: Vec<f64>,
}

impl SearchSpace {
    /// `count` copies of the input box, one per decision block.
    pub fn repeated(input_box: &BoxBounds, count: usize, init_std: Option<&[f64]>) -> Self {
        let m = input_box.dim();
        let std: Vec<f64> = (0..m)
            .map(|j| {
                init_std
                    .map_or(input_box.width(j) / 3.0, |s| s[j])
                    .max(1e-12)
            })
            .collect();
        SearchSpace {
            lo: input_box
                .lo
                .iter()
                .copied()
                .cycle()
                .take(count * m)
                .collect(),
            hi: input_box
                .hi
                .iter()
                .copied()
                .cycle()
                .take(count * m)
                .collect(),
            std: std.iter().copied().cycle().take(count * m).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub score: Score,
    pub evaluations: usize,
    /// Best score after each iteration of the winning restart.
    pub history: Vec<Score>,
}

fn run_restart<F>(
    space: &SearchSpace,
    cfg: &SearchConfig,
    restart: usize,
    warm: Option<&[f64]>,
    eval: &F,
    stop: &(dyn Fn(&Score) -> bool + Sync),
) -> SearchOutcome
where
    F: Fn(&[f64]) -> Score + Sync,
{
    let d = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let mut mean: Vec<f64> = match (restart, warm) {
        (0, Some(w)) if w.len() == d => w.to_vec(),
        _ => (0..d)
            .map(|i| rng.gen_range(space.lo[i]..=space.hi[i]))
            .collect(),
    };
    let mut std = space.std.clone();
    let floor: Vec<f64> = (0..d)
        .map(|i| 1e-3 * (space.hi[i] - space.lo[i]).max(1e-9))
        .collect();
    let mut best = SearchOutcome {
        score: eval(&mean),
        x: mean.clone(),
        evaluations: 1,
        history: Vec::new(),
    };
    let elites = cfg.elites();
    if stop(&best.score) {
        return best;
    }
    let mut pop: Vec<(Vec<f64>, Score)> = Vec::with_capacity(cfg.population + 1);
    for _ in 0..cfg.iterations {
        pop.clear();
        pop.push((best.x.clone(), best.score));
        for _ in 0..cfg.population {
            let x: Vec<f64> = (0..d)
                .map(|i| {
                    let z: f64 = rng.sample(StandardNormal);
                    (mean[i] + std[i] * z).clamp(space.lo[i], space.hi[i])
                })
                .collect();
            let s = eval(&x);
            best.evaluations += 1;
            pop.push((x, s));
        }
        pop.sort_by(|a, b| a.1.cmp_rank(&b.1));
        if pop[0].1.better_than(&best.score) {
            best.score = pop[0].1;
            best.x = pop[0].0.clone();
        }
        best.history.push(best.score);
        if stop(&best.score) {
            break;
        }
        let a = cfg.smoothing;
        for i in 0..d {
            let m: f64 = pop[..elites].iter().map(|p| p.0[i]).sum::<f64>() / elites as f64;
            let v: f64 = pop[..elites]
                .iter()
                .map(|p| (p.0[i] - m).powi(2))
                .sum::<f64>()
                / elites as f64;
            mean[i] = a * m + (1.0 - a) * mean[i];
            std[i] = (a * v.sqrt() + (1.0 - a) * std[i]).max(floor[i]);
        }
    }
    best
}

/// Cross-entropy search; `warm` seeds the mean of the first restart.
pub fn cem<F>(
    space: &SearchSpace,
    cfg: &SearchConfig,
    warm: Option<&[f64]>,
    eval: F,
    stop: &(dyn Fn(&Score) -> bool + Sync),
) -> SearchOutcome
where
    F: Fn(&[f64]) -> Score + Sync,
{
    let mut results: Vec<SearchOutcome> = Vec::with_capacity(cfg.restarts);
    let mut r = 0;
    while r < cfg.restarts {
        let wave: Vec<usize> = (r..(r + WAVE).min(cfg.restarts)).collect();
        r += wave.len();
        results.extend(run_wave(&wave, space, cfg, warm, &eval, stop));
        if results.iter().any(|o| stop(&o.score)) {
            break;
        }
    }
    let total: usize = results.iter().map(|o| o.evaluations).sum();
    // Ties go to the lowest restart index.
    let mut best = results
        .into_iter()
        .reduce(|a, b| if b.score.better_than(&a.score) { b } else { a })
        .unwrap();
    best.evaluations = total;
    best
}

/// Block-coordinate polish of `start`: each `chunk`-sized slice not listed in
/// `frozen` is searched in turn with the rest held fixed, for up to `rounds`
/// sweeps or until `stop`.
///
/// Every slice search is a single warm-started restart with its own stream,
/// so the result depends on the seed only.
#[allow(clippy::too_many_arguments)]
pub fn refine_chunks<F>(
    space: &SearchSpace,
    cfg: &SearchConfig,
    start: SearchOutcome,
    chunk: usize,
    frozen: &[usize],
    rounds: usize,
    eval: F,
    stop: &(dyn Fn(&Score) -> bool + Sync),
) -> SearchOutcome
where
    F: Fn(&[f64]) -> Score + Sync,
{
    let d = space.dim();
    if chunk == 0 || chunk >= d || !d.is_multiple_of(chunk) {
        return start;
    }
    let mut best = start;
    let mut sub_cfg = cfg.clone();
    sub_cfg.restarts = 1;
    for round in 0..rounds {
        let before = best.score;
        for c in (0..d / chunk).filter(|c| !frozen.contains(c)) {
            if stop(&best.score) {
                return best;
            }
            let r = c * chunk..(c + 1) * chunk;
            let sub = SearchSpace {
                lo: space.lo[r.clone()].to_vec(),
                hi: space.hi[r.clone()].to_vec(),
                std: space.std[r.clone()].to_vec(),
            };
            sub_cfg.seed = cfg.seed.wrapping_add(1 + (round * d / chunk + c) as u64);
            let base = best.x.clone();
            let sub_eval = |y: &[f64]| {
                let mut x = base.clone();
                x[r.clone()].copy_from_slice(y);
                eval(&x)
            };
            let out = run_restart(&sub, &sub_cfg, 0, Some(&base[r.clone()]), &sub_eval, stop);
            best.evaluations += out.evaluations;
            if out.score.better_than(&best.score) {
                best.x[r.clone()].copy_from_slice(&out.x);
                best.score = out.score;
            }
        }
        if !best.score.better_than(&before) {
            break;
        }
    }
    best
}

#[cfg(feature = "parallel")]
fn run_wave<F>(
    wave: &[usize],
    space: &SearchSpace,
    cfg: &SearchConfig,
    warm: Option<&[f64]>,
    eval: &F,
    stop: &(dyn Fn(&Score) -> bool + Sync),
) -> Vec<SearchOutcome>
where
    F: Fn(&[f64]) -> Score + Sync,
{
    use rayon::prelude::*;
    wave.par_iter()
        .map(|&r| run_restart(space, cfg, r, warm, eval, stop))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_wave<F>(
    wave: &[usize],
    space: &SearchSpace,
    cfg: &SearchConfig,
    warm: Option<&[f64]>,
    eval: &F,
    stop: &(dyn Fn(&Score) -> bool + Sync),
) -> Vec<SearchOutcome>
where
    F: Fn(&[f64]) -> Score + Sync,
{
    wave.iter()
        .map(|&r| run_restart(space, cfg, r, warm, eval, stop))
        .collect()
}

/// Number of decision blocks covering `n_steps` steps.
pub fn block_count(n_steps: usize, block_len: usize) -> usize {
    n_steps.div_ceil(block_len.max(1))
}

/// Expands one trace's block vector (`blocks * m` values) into an input sequence.
pub fn expand_blocks(x: &[f64], m: usize, n_steps: usize, block_len: usize) -> InputSequence {
    let mut data = Vec::with_capacity(n_steps * m);
    for s in 0..n_steps {
        let b = s / block_len.max(1);
        data.extend_from_slice(&x[b * m..(b + 1) * m]);
    }
    InputSequence::from_flat(m, data)
}

/// Block averages of `u`, the inverse of [`expand_blocks`] on block-constant inputs.
pub fn compress_blocks(u: &InputSequence, block_len: usize) -> Vec<f64> {
    let m = u.m();
    let n = u.len();
    let mut out = Vec::new();
    for b in 0..block_count(n, block_len) {
        let steps: Vec<usize> = (b * block_len..((b + 1) * block_len).min(n)).collect();
        for j in 0..m {
            out.push(steps.iter().map(|&s| u.step(s)[j]).sum::<f64>() / steps.len() as f64);
        }
    }
    out
}

/// Best input tuple found for the free slots and its monitor robustness.
#[derive(Clone, Debug)]
pub struct OptResult {
    /// Inputs for every slot, fixed ones included.
    pub inputs: Vec<InputSequence>,
    pub rho: f64,
    /// Whether every free trace stays inside the state box.
    pub in_box: bool,
}

fn robustness_search(
    model: &SystemModel,
    body: &Body,
    slots: &[TraceVar],
    fixed: &[Option<InputSequence>],
    n_steps: usize,
    cfg: &SearchConfig,
    maximize: bool,
) -> Result<OptResult> {
    cfg.validate()?;
    if fixed.len() != slots.len() {
        return Err(Error::InvalidFormula(
            "one fixed entry per trace slot is required".into(),
        ));
    }
    let monitor = Monitor::new(body, slots)?;
    let m = model.m();
    let blocks = block_count(n_steps, cfg.block_len);
    let free: Vec<usize> = (0..slots.len()).filter(|&i| fixed[i].is_none()).collect();
    let fixed_traces: Vec<Option<_>> = fixed
        .iter()
        .map(|f| f.as_ref().map(|u| model.rollout(&model.x0, u)))
        .collect();
    let space = SearchSpace::repeated(
        &model.input_box,
        blocks * free.len(),
        cfg.init_std.as_deref(),
    );
    let assemble = |x: &[f64]| -> Vec<InputSequence> {
        let mut k = 0;
        (0..slots.len())
            .map(|i| match &fixed[i] {
                Some(u) => u.clone(),
                None => {
                    let u = expand_blocks(
                        &x[k * blocks * m..(k + 1) * blocks * m],
                        m,
                        n_steps,
                        cfg.block_len,
                    );
                    k += 1;
                    u
                }
            })
            .collect()
    };
    let score = |x: &[f64]| -> (f64, f64) {
        let us = assemble(x);
        let owned: Vec<_> = free
            .iter()
            .map(|&i| model.rollout(&model.x0, &us[i]))
            .collect();
        let mut traces = Vec::with_capacity(slots.len());
        let mut k = 0;
        for ft in fixed_traces.iter() {
            match ft {
                Some(t) => traces.push(t),
                None => {
                    traces.push(&owned[k]);
                    k += 1;
                }
            }
        }
        let rho = monitor.robustness(&traces, 0).unwrap_or(f64::NAN);
        let margin = owned
            .iter()
            .map(|t| model.box_margin(t))
            .fold(f64::INFINITY, f64::min);
        (rho, margin)
    };
    let eval = |x: &[f64]| -> Score {
        let (rho, bm) = score(x);
        if maximize {
            let eff = if bm < 0.0 { rho.min(bm) } else { rho };
            if eff > cfg.margin {
                Score::feasible(-eff)
            } else {
                Score::infeasible(-eff)
            }
        } else {
            let eff = if bm < 0.0 { rho.max(-bm) } else { rho };
            Score::feasible(eff)
        }
    };
    let margin = cfg.margin;
    let stop_min = move |s: &Score| s.key <= margin;
    let no_stop = |_: &Score| false;
    let stop: &(dyn Fn(&Score) -> bool + Sync) = if maximize { &no_stop } else { &stop_min };
    let out = cem(&space, cfg, None, eval, stop);
    let inputs = assemble(&out.x);
    let (rho, bm) = score(&out.x);
    Ok(OptResult {
        inputs,
        rho,
        in_box: bm >= -1e-9,
    })
}

/// Searches the free slots for the largest robustness of `body` at `t = 0`.
pub fn maximize_robustness(
    model: &SystemModel,
    body: &Body,
    slots: &[TraceVar],
    fixed: &[Option<InputSequence>],
    n_steps: usize,
    cfg: &SearchConfig,
) -> Result<OptResult> {
    robustness_search(model, body, slots, fixed, n_steps, cfg, true)
}

/// Searches the free slots for the smallest robustness; a result at or below the margin is a counterexample.
pub fn minimize_robustness(
    model: &SystemModel,
    body: &Body,
    slots: &[TraceVar],
    fixed: &[Option<InputSequence>],
    n_steps: usize,
    cfg: &SearchConfig,
) -> Result<OptResult> {
    robustness_search(model, body, slots, fixed, n_steps, cfg, false)
}
