//! Browser bindings. Every operation takes and returns JSON strings; the
//! plain functions in [`ops`] do the work and are tested natively.

use wasm_bindgen::prelude::*;

pub mod ops;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Anchor the characters `[start, end)` of `doc`.
#[wasm_bindgen(js_name = createAnchor)]
pub fn create_anchor(doc: &str, start: usize, end: usize, handle: &str) -> Result<String, JsValue> {
    js(ops::create_anchor(doc, start, end, handle))
}

/// Re-locate an anchor in a possibly edited document.
#[wasm_bindgen(js_name = resolveAnchor)]
pub fn resolve_anchor(doc: &str, anchor_json: &str) -> Result<String, JsValue> {
    js(ops::resolve_anchor(doc, anchor_json))
}

/// Best fuzzy similarity of the quote at each start offset of `doc`.
#[wasm_bindgen(js_name = similarityProfile)]
pub fn similarity_profile(doc: &str, exact: &str) -> Vec<f64> {
    ops::similarity_profile(doc, exact)
}

#[wasm_bindgen(js_name = parseRedif)]
pub fn parse_redif(text: &str) -> String {
    ops::parse_redif(text)
}

/// Builds a seeded random world and reports everyone's neighbors.
#[wasm_bindgen(js_name = randomWorld)]
pub fn random_world(seed: u64, persons: usize, outputs: usize) -> String {
    ops::random_world(seed, persons, outputs)
}
