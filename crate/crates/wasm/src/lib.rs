//! Browser bindings for the facecue demo page in `www/`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

pub mod demo;

fn to_js<T: Serialize>(value: &T) -> Result<JsValue, JsError> {
    Ok(serde_wasm_bindgen::to_value(value)?)
}

/// Landmarks and angle features of the template face.
#[wasm_bindgen]
pub fn face(brow_raise: f64, roll: f64) -> Result<JsValue, JsError> {
    to_js(&demo::face(brow_raise, roll))
}

/// A face and `copies` random affine copies of it.
#[wasm_bindgen(js_name = augmentPreview)]
pub fn augment_preview(
    seed: u32,
    rotation_range: f64,
    scale_range: f64,
    shift_range: f64,
    copies: usize,
) -> Result<JsValue, JsError> {
    let view = demo::augment_preview(
        seed.into(),
        rotation_range,
        scale_range,
        shift_range,
        copies,
    )
    .map_err(|e| JsError::new(&e))?;
    to_js(&view)
}

/// Trains on a synthetic population and reports held-out results.
#[wasm_bindgen(js_name = trainDemo)]
pub fn train_demo(
    seed: u32,
    brow_offset: f64,
    copies: usize,
    n_trees: usize,
) -> Result<JsValue, JsError> {
    let view = demo::train_demo(seed.into(), brow_offset, copies, n_trees)
        .map_err(|e| JsError::new(&e))?;
    to_js(&view)
}
