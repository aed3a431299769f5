//! Shared-prefix couplings between trace slots.
//!
//! A follower replays its leader's inputs up to a trigger step and uses its
//! own inputs afterwards, so both traces coincide exactly at the trigger. The
//! trigger is a step `t <= last_trigger` such that `delta` steps later the
//! leader sits in one of the trigger boxes.

use serde::{Deserialize, Serialize};

use crate::semantics::Trace;
use crate::system::{InputSequence, SystemModel};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    First,
    Last,
}

/// Closed axis-aligned box over selected state dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerBox {
    pub dims: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl TriggerBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.dims
            .iter()
            .enumerate()
            .all(|(i, &d)| x[d] >= self.lo[i] && x[d] <= self.hi[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub leader: usize,
    pub follower: usize,
    pub trigger: Vec<TriggerBox>,
    pub delta: usize,
    pub last_trigger: usize,
    pub anchor: Anchor,
}

impl Coupling {
    pub fn validate(&self, slots: usize) -> Result<()> {
        if self.leader >= slots || self.follower >= slots || self.leader == self.follower {
            return Err(Error::Config(format!(
                "coupling {} -> {} does not name two distinct slots",
                self.leader, self.follower
            )));
        }
        if self
            .trigger
            .iter()
            .any(|b| b.dims.len() != b.lo.len() || b.dims.len() != b.hi.len())
        {
            return Err(Error::Config("coupling box dimensions disagree".into()));
        }
        Ok(())
    }

    fn inside(&self, x: &[f64]) -> bool {
        self.trigger.iter().any(|b| b.contains(x))
    }

    /// The anchor trigger step of `leader`, if any.
    pub fn trigger(&self, leader: &Trace) -> Option<usize> {
        let mut ts = (0..=self.last_trigger)
            .take_while(|t| t + self.delta < leader.len())
            .filter(|t| self.inside(leader.state(t + self.delta)));
        match self.anchor {
            Anchor::First => ts.next(),
            Anchor::Last => ts.last(),
        }
    }

    /// Follower inputs with the leader's prefix spliced in before the trigger.
    pub fn splice(
        &self,
        leader_u: &InputSequence,
        leader: &Trace,
        follower_u: &InputSequence,
    ) -> InputSequence {
        let Some(t) = self.trigger(leader) else {
            return follower_u.clone();
        };
        let m = follower_u.m();
        let mut data = follower_u.as_flat().to_vec();
        let k = (t * m).min(data.len());
        data[..k].copy_from_slice(&leader_u.as_flat()[..k]);
        InputSequence::from_flat(m, data)
    }
}

/// Applies `couplings` in order, re-rolling each follower from the model's `x0`.
pub fn apply_couplings(
    model: &SystemModel,
    couplings: &[Coupling],
    inputs: &mut [InputSequence],
    traces: &mut [Trace],
) {
    for c in couplings {
        let u = c.splice(&inputs[c.leader], &traces[c.leader], &inputs[c.follower]);
        traces[c.follower] = model.rollout(&model.x0, &u);
        inputs[c.follower] = u;
    }
}
