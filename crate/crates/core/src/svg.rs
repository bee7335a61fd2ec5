//! Minimal SVG scatter plots for two-dimensional scored datasets: marker
//! radius follows the score, fill the true class, outline the predicted one.

use std::fmt::Write;

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;
const MAX_RADIUS: f64 = 14.0;
const MIN_RADIUS: f64 = 1.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fill(label: Option<Label>) -> &'static str {
    match label {
        Some(Label::Normal) => "#4c78a8",
        Some(Label::Anomaly) => "#f58518",
        None => "#9d9d9d",
    }
}

fn stroke(label: Label) -> &'static str {
    match label {
        Label::Normal => "#222222",
        Label::Anomaly => "#d62728",
    }
}

/// Renders one `<circle>` per point. `truth` may be absent for unlabeled data.
pub fn scatter(
    dataset: &Dataset,
    scores: &[f64],
    truth: Option<&[Label]>,
    predicted: &[Label],
    title: &str,
) -> Result<String> {
    if dataset.d() != 2 {
        return Err(Error::Unsupported(format!(
            "SVG plots need two-dimensional data (d = {})",
            dataset.d()
        )));
    }
    let n = dataset.n();
    if scores.len() != n || predicted.len() != n || truth.is_some_and(|t| t.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: scores.len(),
        });
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in dataset.rows() {
        for j in 0..2 {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    // One scale for both axes keeps circles round in data units.
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let max_score = scores.iter().copied().fold(0.0, f64::max);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<title>{}</title>
<rect width="100%" height="100%" fill="white"/>"#,
        escape(title)
    );
    for (i, p) in dataset.rows().enumerate() {
        let cx = MARGIN + (p[0] - lo[0]) * scale;
        let cy = SIZE - MARGIN - (p[1] - lo[1]) * scale;
        let r = if max_score > 0.0 {
            MIN_RADIUS + (MAX_RADIUS - MIN_RADIUS) * scores[i] / max_score
        } else {
            MIN_RADIUS
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{r:.3}" fill="{}" fill-opacity="0.6" stroke="{}" stroke-width="1"/>"#,
            fill(truth.map(|t| t[i])),
            stroke(predicted[i]),
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_circle_per_point() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]]).unwrap();
        let pred = [Label::Normal, Label::Normal, Label::Anomaly];
        let svg = scatter(&ds, &[0.1, 0.2, 0.9], Some(&pred), &pred, "a < b & c").unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn rejects_other_dimensions() {
        let ds = Dataset::from_values(&[0.0, 1.0]).unwrap();
        let pred = [Label::Normal; 2];
        assert!(scatter(&ds, &[0.0, 1.0], None, &pred, "x").is_err());
    }
}
