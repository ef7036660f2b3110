//! Serde adapter for maps keyed by unordered pairs, which JSON cannot key on.
//! Serialized as a sequence of `[a, b, value]` triples in key order.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S, K, V>(map: &BTreeMap<(K, K), V>, s: S) -> Result<S::Ok, S::Error>
where
    S: Serializer,
    K: Serialize,
    V: Serialize,
{
    s.collect_seq(map.iter().map(|((a, b), v)| (a, b, v)))
}

pub fn deserialize<'de, D, K, V>(d: D) -> Result<BTreeMap<(K, K), V>, D::Error>
where
    D: Deserializer<'de>,
    K: Deserialize<'de> + Ord,
    V: Deserialize<'de>,
{
    let triples: Vec<(K, K, V)> = Vec::deserialize(d)?;
    Ok(triples.into_iter().map(|(a, b, v)| ((a, b), v)).collect())
}

/// Orders the endpoints so that `a <= b`.
pub fn ordered<T: Ord>(a: T, b: T) -> (T, T) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
