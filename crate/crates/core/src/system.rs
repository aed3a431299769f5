//! Discrete-time systems `x_{t+1} = f(x_t, u_t)` with state and input boxes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::formula::TraceVar;
use crate::semantics::{Trace, TraceTuple};
use crate::{Error, Result};

/// Axis-aligned box `lo <= x <= hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = BoxBounds { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() {
            return Err(Error::InvalidSystem(
                "box bounds have different lengths".into(),
            ));
        }
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l <= h) || !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidSystem(format!(
                    "box dimension {i} has bounds [{l}, {h}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, h)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*l, *h);
        }
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

/// Named nonlinear steppers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepperName {
    /// State `(px, py, theta)`, input `(v, omega)`, forward Euler.
    Unicycle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dynamics {
    /// `x' = A x + B u + c`.
    Affine {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        #[serde(default)]
        c: Vec<f64>,
    },
    Nonlinear {
        stepper_name: StepperName,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
    },
}

/// A system with its boxes and initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(flatten)]
    pub dynamics: Dynamics,
    pub state_box: BoxBounds,
    pub input_box: BoxBounds,
    pub x0: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    1.0
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// How [`SystemModel::rollout_checked`] reacts to a state leaving its box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationPolicy {
    #[default]
    Warn,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxViolation {
    pub step: usize,
    pub dim: usize,
    pub value: f64,
}

impl SystemModel {
    pub fn new(
        dynamics: Dynamics,
        state_box: BoxBounds,
        input_box: BoxBounds,
        x0: Vec<f64>,
        dt: f64,
    ) -> Result<Self> {
        let mut m = SystemModel {
            dynamics,
            state_box,
            input_box,
            x0,
            dt,
        };
        if let Dynamics::Affine { c, a, .. } = &mut m.dynamics {
            if c.is_empty() {
                *c = vec![0.0; a.len()];
            }
        }
        m.validate()?;
        Ok(m)
    }

    /// Affine model `x' = A x + B u + c`.
    pub fn affine(
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        c: Vec<f64>,
        state_box: BoxBounds,
        input_box: BoxBounds,
        x0: Vec<f64>,
    ) -> Result<Self> {
        Self::new(Dynamics::Affine { a, b, c }, state_box, input_box, x0, 1.0)
    }

    /// One-dimensional integrator `x' = x + u` with `u in [-u_max, u_max]`.
    pub fn integrator(x0: f64, u_max: f64, x_bound: f64) -> Self {
        Self::affine(
            vec![vec![1.0]],
            vec![vec![1.0]],
            vec![0.0],
            BoxBounds {
                lo: vec![-x_bound],
                hi: vec![x_bound],
            },
            BoxBounds {
                lo: vec![-u_max],
                hi: vec![u_max],
            },
            vec![x0],
        )
        .expect("integrator parameters are valid")
    }

    /// The unicycle of the warehouse case study: workspace `[0,10]^2`,
    /// heading in `(-pi, pi]`, inputs `[0,1] x [-pi/15, pi/15]`, starting at the origin.
    pub fn unicycle(dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidSystem(format!(
                "sampling time must be positive, got {dt}"
            )));
        }
        Self::new(
            Dynamics::Nonlinear {
                stepper_name: StepperName::Unicycle,
                params: Default::default(),
            },
            BoxBounds {
                lo: vec![0.0, 0.0, -PI],
                hi: vec![10.0, 10.0, PI],
            },
            BoxBounds {
                lo: vec![0.0, -PI / 15.0],
                hi: vec![1.0, PI / 15.0],
            },
            vec![0.0, 0.0, 0.0],
            dt,
        )
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Result<Self> {
        self.x0 = x0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.state_box.validate()?;
        self.input_box.validate()?;
        let (n, m) = (self.state_box.dim(), self.input_box.dim());
        if n == 0 || m == 0 {
            return Err(Error::InvalidSystem(
                "state and input dimensions must be positive".into(),
            ));
        }
        match &self.dynamics {
            Dynamics::Affine { a, b, c } => {
                if a.len() != n || a.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidSystem(format!("A must be {n}x{n}")));
                }
                if b.len() != n || b.iter().any(|r| r.len() != m) {
                    return Err(Error::InvalidSystem(format!("B must be {n}x{m}")));
                }
                if !c.is_empty() && c.len() != n {
                    return Err(Error::InvalidSystem(format!("c must have length {n}")));
                }
            }
            Dynamics::Nonlinear {
                stepper_name: StepperName::Unicycle,
                params,
            } => {
                if n != 3 || m != 2 {
                    return Err(Error::InvalidSystem(
                        "unicycle needs a 3-D state box and a 2-D input box".into(),
                    ));
                }
                if let Some(k) = params.keys().next() {
                    return Err(Error::InvalidSystem(format!(
                        "unknown unicycle parameter `{k}`"
                    )));
                }
                if !(self.dt > 0.0) {
                    return Err(Error::InvalidSystem(
                        "sampling time must be positive".into(),
                    ));
                }
            }
        }
        if self.x0.len() != n {
            return Err(Error::InvalidSystem(format!(
                "x0 has length {}, expected {n}",
                self.x0.len()
            )));
        }
        if !self.state_box.contains(&self.x0, 1e-12) {
            return Err(Error::InvalidSystem(format!(
                "x0 {:?} lies outside the state box",
                self.x0
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.state_box.dim()
    }

    pub fn m(&self) -> usize {
        self.input_box.dim()
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.dynamics, Dynamics::Affine { .. })
    }

    /// State dimensions that wrap instead of being bounded.
    pub fn wrap_dims(&self) -> &'static [usize] {
        match self.dynamics {
            Dynamics::Affine { .. } => &[],
            Dynamics::Nonlinear {
                stepper_name: StepperName::Unicycle,
                ..
            } => &[2],
        }
    }

    /// Writes `f(x, u)` into `out`.
    pub fn step_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        match &self.dynamics {
            Dynamics::Affine { a, b, c } => {
                for i in 0..out.len() {
                    let mut v = c.get(i).copied().unwrap_or(0.0);
                    v += a[i].iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
                    v += b[i].iter().zip(u).map(|(p, q)| p * q).sum::<f64>();
                    out[i] = v;
                }
            }
            Dynamics::Nonlinear {
                stepper_name: StepperName::Unicycle,
                ..
            } => {
                let (v, w) = (u[0], u[1]);
                out[0] = x[0] + self.dt * v * x[2].cos();
                out[1] = x[1] + self.dt * v * x[2].sin();
                out[2] = wrap_angle(x[2] + self.dt * w);
            }
        }
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.step_into(x, u, &mut out);
        out
    }

    /// States `x_0 .. x_N` driven by `u`. The state box is not enforced.
    pub fn rollout(&self, x0: &[f64], u: &InputSequence) -> Trace {
        self.rollout_flat(x0, u.as_flat())
    }

    /// As [`rollout`](Self::rollout) on row-major inputs.
    pub fn rollout_flat(&self, x0: &[f64], u: &[f64]) -> Trace {
        let (n, m) = (self.n(), self.m());
        let steps = u.len() / m;
        let mut data = vec![0.0; (steps + 1) * n];
        data[..n].copy_from_slice(x0);
        for k in 0..steps {
            let (done, rest) = data.split_at_mut((k + 1) * n);
            self.step_into(&done[k * n..], &u[k * m..(k + 1) * m], &mut rest[..n]);
        }
        Trace::from_flat(n, data)
    }

    /// Rollout that reports state-box violations as warnings or as an error.
    pub fn rollout_checked(
        &self,
        x0: &[f64],
        u: &InputSequence,
        policy: ViolationPolicy,
    ) -> Result<(Trace, Vec<BoxViolation>)> {
        let tr = self.rollout(x0, u);
        let v = self.box_violations(&tr);
        if let Some(first) = v.first() {
            match policy {
                ViolationPolicy::Warn => log::warn!(
                    "state left its box at step {} (dimension {}, value {}); {} violations total",
                    first.step,
                    first.dim,
                    first.value,
                    v.len()
                ),
                ViolationPolicy::Error => {
                    return Err(Error::BoxViolation {
                        step: first.step,
                        dim: first.dim,
                        value: first.value,
                    })
                }
            }
        }
        Ok((tr, v))
    }

    pub fn box_violations(&self, tr: &Trace) -> Vec<BoxViolation> {
        let wrap = self.wrap_dims();
        let mut out = Vec::new();
        for (k, x) in tr.states().enumerate() {
            for d in 0..self.n() {
                if wrap.contains(&d) {
                    continue;
                }
                if x[d] < self.state_box.lo[d] - 1e-9 || x[d] > self.state_box.hi[d] + 1e-9 {
                    out.push(BoxViolation {
                        step: k,
                        dim: d,
                        value: x[d],
                    });
                }
            }
        }
        out
    }

    /// Smallest signed distance of any state to the box faces; negative when outside.
    pub fn box_margin(&self, tr: &Trace) -> f64 {
        let wrap = self.wrap_dims();
        let mut worst = f64::INFINITY;
        for x in tr.states() {
            for d in 0..self.n() {
                if !wrap.contains(&d) {
                    worst = worst
                        .min(x[d] - self.state_box.lo[d])
                        .min(self.state_box.hi[d] - x[d]);
                }
            }
        }
        worst
    }

    /// Whether every state lies in the box (wrapping dimensions excepted).
    pub fn stays_in_box(&self, tr: &Trace) -> bool {
        self.box_margin(tr) >= -1e-9
    }

    /// Rolls out each sequence from the same `x0`.
    pub fn rollout_all(&self, x0: &[f64], us: &[InputSequence]) -> Result<Vec<Trace>> {
        let first = us
            .first()
            .ok_or_else(|| Error::InvalidSystem("no input sequences given".into()))?;
        if let Some(bad) = us.iter().find(|u| u.len() != first.len()) {
            return Err(Error::InvalidSystem(format!(
                "input sequences have lengths {} and {}",
                first.len(),
                bad.len()
            )));
        }
        Ok(us.iter().map(|u| self.rollout(x0, u)).collect())
    }
}

/// Rolls out each sequence and names the traces `p1, p2, ...`.
pub fn tuple_rollout(model: &SystemModel, x0: &[f64], us: &[InputSequence]) -> Result<TraceTuple> {
    let vars: Vec<TraceVar> = (1..=us.len())
        .map(|i| TraceVar::new(format!("p{i}")))
        .collect();
    tuple_rollout_named(model, x0, us, &vars)
}

/// Rolls out each sequence and binds it to the matching variable.
pub fn tuple_rollout_named(
    model: &SystemModel,
    x0: &[f64],
    us: &[InputSequence],
    vars: &[TraceVar],
) -> Result<TraceTuple> {
    if vars.len() != us.len() {
        return Err(Error::InvalidSystem(format!(
            "{} variables for {} input sequences",
            vars.len(),
            us.len()
        )));
    }
    let traces = model.rollout_all(x0, us)?;
    TraceTuple::new(vars.iter().cloned().zip(traces).collect())
}

/// A length-`N` sequence of `m`-dimensional inputs, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct InputSequence {
    m: usize,
    data: Vec<f64>,
}

impl InputSequence {
    /// Builds a sequence, rejecting steps outside `input_box`.
    pub fn new(steps: Vec<Vec<f64>>, input_box: &BoxBounds) -> Result<Self> {
        let s = Self::from_steps(steps)?;
        s.check(input_box)?;
        Ok(s)
    }

    /// Builds a sequence without checking bounds.
    pub fn from_steps(steps: Vec<Vec<f64>>) -> Result<Self> {
        let m = steps.first().map_or(0, Vec::len);
        if steps.iter().any(|s| s.len() != m) {
            return Err(Error::InvalidSystem(
                "input steps have mixed dimensions".into(),
            ));
        }
        Ok(InputSequence {
            m,
            data: steps.into_iter().flatten().collect(),
        })
    }

    pub fn from_flat(m: usize, data: Vec<f64>) -> Self {
        assert!(
            m > 0 && data.len().is_multiple_of(m),
            "flat input data does not match dimension"
        );
        InputSequence { m, data }
    }

    /// `n` copies of the same step.
    pub fn constant(step: &[f64], n: usize) -> Self {
        InputSequence {
            m: step.len(),
            data: step.repeat(n),
        }
    }

    pub fn check(&self, input_box: &BoxBounds) -> Result<()> {
        if self.m != input_box.dim() && !self.data.is_empty() {
            return Err(Error::InvalidSystem(format!(
                "input steps have dimension {}, system expects {}",
                self.m,
                input_box.dim()
            )));
        }
        for (k, u) in self.steps().enumerate() {
            if !input_box.contains(u, 1e-9) {
                return Err(Error::InvalidSystem(format!(
                    "input {u:?} at step {k} lies outside the input box"
                )));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.m).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    pub fn steps(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.m.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Largest per-entry difference; infinite when shapes differ.
    pub fn distance(&self, other: &InputSequence) -> f64 {
        if self.m != other.m || self.data.len() != other.data.len() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<InputSequence> for Vec<Vec<f64>> {
    fn from(s: InputSequence) -> Self {
        s.steps().map(<[f64]>::to_vec).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for InputSequence {
    type Error = Error;
    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_steps(v)
    }
}

/// A finite set of input vectors shared by every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputGrid {
    points: Vec<Vec<f64>>,
}

impl InputGrid {
    pub fn new(points: Vec<Vec<f64>>, input_box: &BoxBounds) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("input grid is empty".into()));
        }
        for p in &points {
            if p.len() != input_box.dim() || !input_box.contains(p, 1e-12) {
                return Err(Error::Config(format!(
                    "grid point {p:?} lies outside the input box"
                )));
            }
        }
        Ok(InputGrid { points })
    }

    /// Cartesian product of `per_dim[i]` evenly spaced values on each box side.
    /// One value per dimension picks the midpoint.
    pub fn uniform(input_box: &BoxBounds, per_dim: &[usize]) -> Result<Self> {
        if per_dim.len() != input_box.dim() || per_dim.contains(&0) {
            return Err(Error::Config(
                "grid resolution must be positive for every input dimension".into(),
            ));
        }
        let axes: Vec<Vec<f64>> = per_dim
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let (l, h) = (input_box.lo[i], input_box.hi[i]);
                if k == 1 {
                    vec![0.5 * (l + h)]
                } else {
                    (0..k)
                        .map(|j| l + (h - l) * j as f64 / (k - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        Self::new(points, input_box)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|grid|^n`, saturating.
    pub fn sequence_count(&self, n: usize) -> u128 {
        (0..n).fold(1u128, |acc, _| {
            acc.saturating_mul(self.points.len() as u128)
        })
    }

    /// All length-`n` sequences in lexicographic order of grid indices.
    pub fn sequences(&self, n: usize) -> impl Iterator<Item = InputSequence> + '_ {
        let k = self.points.len();
        let m = self.points[0].len();
        let total = self.sequence_count(n);
        let mut idx = vec![0usize; n];
        let mut produced = 0u128;
        std::iter::from_fn(move || {
            if produced >= total {
                return None;
            }
            let data: Vec<f64> = idx
                .iter()
                .flat_map(|&i| self.points[i].iter().copied())
                .collect();
            produced += 1;
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < k {
                    break;
                }
                idx[d] = 0;
            }
            Some(InputSequence::from_flat(m, data))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn identity_dynamics_is_constant() {
        let m = SystemModel::affine(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0], vec![0.0]],
            vec![0.0, 0.0],
            BoxBounds::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap(),
            BoxBounds::new(vec![-1.0], vec![1.0]).unwrap(),
            vec![1.0, 2.0],
        )
        .unwrap();
        let tr = m.rollout(&[1.0, 2.0], &InputSequence::constant(&[0.7], 4));
        assert!(tr.states().all(|x| x == [1.0, 2.0]));
    }

    #[test]
    fn integrator_cumulative_sum() {
        let m = SystemModel::integrator(0.0, 1.0, 10.0);
        let tr = m.rollout(&[0.0], &InputSequence::constant(&[1.0], 3));
        assert_eq!(tr.as_flat(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn unicycle_euler_steps() {
        let m = SystemModel::unicycle(0.5).unwrap();
        assert!(close(
            &m.step(&[0.0, 0.0, 0.0], &[1.0, 0.0]),
            &[0.5, 0.0, 0.0]
        ));
        assert!(close(
            &m.step(&[0.0, 0.0, PI / 2.0], &[1.0, 0.0]),
            &[0.0, 0.5, PI / 2.0]
        ));
        assert_eq!(m.input_box.hi, vec![1.0, PI / 15.0]);
        let wrapped = m.step(&[5.0, 5.0, PI - 0.01], &[0.0, PI / 15.0]);
        assert!(wrapped[2] > -PI && wrapped[2] < 0.0);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn tuple_rollout_cases() {
        let m = SystemModel::integrator(0.0, 1.0, 10.0);
        let t = tuple_rollout(
            &m,
            &[0.0],
            &[
                InputSequence::constant(&[1.0], 1),
                InputSequence::constant(&[-1.0], 1),
            ],
        )
        .unwrap();
        assert_eq!(t.traces()[0].as_flat(), &[0.0, 1.0]);
        assert_eq!(t.traces()[1].as_flat(), &[0.0, -1.0]);
        assert!(tuple_rollout(&m, &[0.0], &[]).is_err());
        let same = tuple_rollout(
            &m,
            &[0.0],
            &[
                InputSequence::constant(&[0.3], 2),
                InputSequence::constant(&[0.3], 2),
            ],
        )
        .unwrap();
        assert_eq!(same.traces()[0], same.traces()[1]);
    }

    #[test]
    fn violations_reported() {
        let m = SystemModel::integrator(0.0, 1.0, 1.5);
        let u = InputSequence::constant(&[1.0], 3);
        let (_, v) = m
            .rollout_checked(&[0.0], &u, ViolationPolicy::Warn)
            .unwrap();
        assert_eq!(v.len(), 2);
        assert!(matches!(
            m.rollout_checked(&[0.0], &u, ViolationPolicy::Error),
            Err(Error::BoxViolation { step: 2, .. })
        ));
    }

    #[test]
    fn sequence_rejects_out_of_box() {
        let b = BoxBounds::new(vec![-1.0], vec![1.0]).unwrap();
        assert!(InputSequence::new(vec![vec![0.5], vec![2.0]], &b).is_err());
    }

    #[test]
    fn grid_enumeration_order() {
        let b = BoxBounds::new(vec![-1.0], vec![1.0]).unwrap();
        let g = InputGrid::uniform(&b, &[2]).unwrap();
        let seqs: Vec<Vec<f64>> = g.sequences(2).map(|s| s.as_flat().to_vec()).collect();
        assert_eq!(
            seqs,
            vec![
                vec![-1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0]
            ]
        );
        assert_eq!(g.sequences(0).count(), 1);
        let g2 = InputGrid::uniform(
            &BoxBounds::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(),
            &[2, 3],
        )
        .unwrap();
        assert_eq!(g2.len(), 6);
        assert!(InputGrid::new(vec![], &b).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = SystemModel::unicycle(0.5).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"stepper_name\":\"unicycle\""));
        assert_eq!(serde_json::from_str::<SystemModel>(&s).unwrap(), m);
        let j = r#"{"kind":"affine","A":[[1.0]],"B":[[1.0]],"c":[0.0],
            "state_box":{"lo":[-5],"hi":[5]},"input_box":{"lo":[-1],"hi":[1]},"x0":[0]}"#;
        let a: SystemModel = serde_json::from_str(j).unwrap();
        a.validate().unwrap();
        assert!(a.is_affine());
    }
}
