//! Three operations from the annotation workbench, exported to the browser.

use seglab_core::metrics::{agreement, boundary_distances, BoundarySet, MetricOptions};
use seglab_core::model::{AnnotationSegment, EpisodeAnnotation, LabelTimeline, TimeSeriesChannel};
use seglab_core::sync::{downsample_window, nearest_index};
use wasm_bindgen::prelude::*;

const EPSILON: f64 = 1e-6;

#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    /// Fraction of time both annotators assign the same label.
    pub agreement: f64,
    pub d_forward: f64,
    pub d_backward: f64,
    pub d_sym: f64,
}

/// Parses one segment per line: `start end label [fail]`. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_segments(text: &str) -> Result<Vec<AnnotationSegment>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("line {}: {s:?} is not a number", n + 1));
        match parts.as_slice() {
            [s, e, label] => out.push(AnnotationSegment::new(num(s)?, num(e)?, *label, true)),
            [s, e, label, "fail"] => out.push(AnnotationSegment::new(num(s)?, num(e)?, *label, false)),
            _ => return Err(format!("line {}: expected `start end label [fail]`", n + 1)),
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    Ok(out)
}

pub fn compare_text(a: &str, b: &str, duration: f64, include_outcome: bool) -> Result<Agreement, String> {
    let a = EpisodeAnnotation::new("demo", "a", parse_segments(a)?);
    let b = EpisodeAnnotation::new("demo", "b", parse_segments(b)?);
    for ann in [&a, &b] {
        ann.validate(Some(duration), None).map_err(|e| format!("annotator {}: {e}", ann.annotator_id))?;
    }
    let opts = MetricOptions { include_outcome };
    let timeline = |x: &EpisodeAnnotation| {
        if opts.include_outcome {
            LabelTimeline::with_labels(x, duration, |s| format!("{}|{}", s.label, s.success))
        } else {
            LabelTimeline::from_annotation(x, duration)
        }
    };
    let ta = timeline(&a).map_err(|e| e.to_string())?;
    let tb = timeline(&b).map_err(|e| e.to_string())?;
    let agreement = agreement(&ta, &tb).map_err(|e| e.to_string())?;
    let d = boundary_distances(&BoundarySet::from_annotation(&a, EPSILON), &BoundarySet::from_annotation(&b, EPSILON))
        .map_err(|e| e.to_string())?;
    Ok(Agreement {
        agreement,
        d_forward: d.forward,
        d_backward: d.backward,
        d_sym: d.sym,
    })
}

/// Min-max envelope of one signal, flattened as `[t0, v0, t1, v1, ...]`.
pub fn envelope(t: &[f64], v: &[f64], from: f64, to: f64, max_points: usize) -> Result<Vec<f64>, String> {
    let channel = TimeSeriesChannel::new("signal", "", vec!["v".into()], t.to_vec(), v.to_vec()).map_err(|e| e.to_string())?;
    let w = downsample_window(&channel, from, to, max_points).map_err(|e| e.to_string())?;
    let s = &w.series[0];
    Ok(s.t.iter().zip(&s.v).flat_map(|(&t, &v)| [t, v]).collect())
}

#[wasm_bindgen]
pub fn compare(a: &str, b: &str, duration: f64, include_outcome: bool) -> Result<Agreement, JsError> {
    compare_text(a, b, duration, include_outcome).map_err(|e| JsError::new(&e))
}

/// Index of the frame shown at `t`.
#[wasm_bindgen]
pub fn nearest(timestamps: &[f64], t: f64) -> Result<usize, JsError> {
    nearest_index(timestamps, t).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn downsample(t: &[f64], v: &[f64], from: f64, to: f64, max_points: usize) -> Result<Vec<f64>, JsError> {
    envelope(t, v, from, to, max_points).map_err(|e| JsError::new(&e))
}
