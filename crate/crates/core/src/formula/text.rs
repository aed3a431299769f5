//! Serde adapters that store a [`Body`] as surface text.
//!
//! Deserialization also accepts the structured form, so both spellings load.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

use super::{parse_body, Body};

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Text(String),
    Tree(Body),
}

fn load<E: serde::de::Error>(r: Repr) -> Result<Body, E> {
    match r {
        Repr::Text(s) => parse_body(&s).map_err(|e| E::custom(format!("formula text: {e}"))),
        Repr::Tree(b) => Ok(b),
    }
}

pub fn serialize<S: Serializer>(b: &Body, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(b)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Body, D::Error> {
    load(
        Repr::deserialize(d)
            .map_err(|_| D::Error::custom("expected formula text or a formula tree"))?,
    )
}

/// The same for optional bodies.
pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(b: &Option<Body>, s: S) -> Result<S::Ok, S::Error> {
        match b {
            Some(b) => s.collect_str(b),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Body>, D::Error> {
        let r = Option::<Repr>::deserialize(d)
            .map_err(|_| D::Error::custom("expected formula text or a formula tree"))?;
        r.map(load).transpose()
    }
}
