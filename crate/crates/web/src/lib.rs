//! Browser bindings. Every function returns a JSON string; failures come back
//! as `{"error": "..."}` so the page can show them inline.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use proglab::counting::{enumerate_configs, max_free_subset, SearchMethod};
use proglab::expsum::weyl_curve;
use proglab::gowers::{range_set, uk_norm_pow};
use proglab::signal::{IntervalSet, ZFunc};

const SEARCH_NODES: u64 = 50_000_000;

fn reply(v: proglab::Result<Value>) -> String {
    match v {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Samples of the Weyl sum over `[-t, t]` at `points` equally spaced
/// frequencies, as `[[theta, re, im, abs], ...]`.
#[wasm_bindgen]
pub fn weyl_curve_json(w: i32, r: i32, t: i32, points: u32) -> String {
    reply((|| {
        if w < 1 || t < 0 || !(1..=8192).contains(&points) {
            return Err(proglab::Error::InvalidParam("need W >= 1, T >= 0, 1 <= points <= 8192".into()));
        }
        let curve = weyl_curve(w.into(), r.into(), t.into(), points as usize);
        Ok(json!(curve.iter().map(|(th, z)| [*th, z.re, z.im, z.norm()]).collect::<Vec<_>>()))
    })())
}

/// Largest configuration-free subset of `[1, n]` with its canonical witness.
#[wasm_bindgen]
pub fn free_subset_json(n: u32) -> String {
    reply((|| {
        let method = if n <= 24 { SearchMethod::Exhaustive } else { SearchMethod::BranchAndBound };
        let (size, set) = max_free_subset(n.into(), method, SEARCH_NODES)?;
        Ok(json!({
            "n": n,
            "size": size,
            "witness": set.members(),
            "configurations_in_full": enumerate_configs(&IntervalSet::full(n.into())),
        }))
    })())
}

/// U^k power and norm over shifts `[l]` of the 0/1 word `bits`, read as a
/// function on `[0, len)`; other characters are ignored.
#[wasm_bindgen]
pub fn box_norm_json(bits: &str, k: u32, l: i32) -> String {
    reply((|| {
        let vals: Vec<f64> = bits
            .chars()
            .filter_map(|c| match c {
                '0' => Some(0.0),
                '1' => Some(1.0),
                _ => None,
            })
            .collect();
        if vals.is_empty() || !(1..=4).contains(&k) || l < 1 {
            return Err(proglab::Error::InvalidParam("need a nonempty 0/1 word, 1 <= k <= 4, L >= 1".into()));
        }
        let f = ZFunc::from_real(0, &vals);
        let pow = uk_norm_pow(&f, &range_set(l.into()), k as usize)?;
        Ok(json!({
            "length": vals.len(),
            "k": k,
            "L": l,
            "norm_pow": pow,
            "norm": pow.max(0.0).powf(1.0 / f64::from(1u32 << k)),
        }))
    })())
}
