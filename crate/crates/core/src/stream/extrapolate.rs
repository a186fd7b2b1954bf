use crate::graph::Reconstruction;
use crate::{Error, Result};

/// Fills a skipped frame from held even-phase frames, oldest first.
///
/// * duplicate: `[a]` gives `a`
/// * nearest: `[a, b]` gives `b`
/// * linear: `[a, b]` gives the midpoint
/// * cubic: `[p0, p1, p2, p3]` gives the Catmull-Rom midpoint of `p1` and `p2`
///
/// `transposed_conv` needs the layer's kernel and is only available inside
/// the stream engine.
pub fn extrapolate(window: &[&[f32]], mode: Reconstruction) -> Result<Vec<f32>> {
    let need = match mode {
        Reconstruction::Duplicate => 1,
        Reconstruction::Nearest | Reconstruction::Linear => 2,
        Reconstruction::Cubic => 4,
        Reconstruction::TransposedConv => {
            return Err(Error::Validation(
                "transposed_conv reconstruction needs the layer kernel".into(),
            ))
        }
    };
    if window.len() < need {
        return Err(Error::Shape(format!(
            "{mode} needs {need} held frames, got {}",
            window.len()
        )));
    }
    let w = &window[window.len() - need..];
    let ch = w[0].len();
    if w.iter().any(|f| f.len() != ch) {
        return Err(Error::Shape("held frames differ in width".into()));
    }
    Ok(match mode {
        Reconstruction::Duplicate => w[0].to_vec(),
        Reconstruction::Nearest => w[1].to_vec(),
        Reconstruction::Linear => (0..ch).map(|c| (w[0][c] + w[1][c]) * 0.5).collect(),
        Reconstruction::Cubic => (0..ch)
            .map(|c| ((w[1][c] + w[2][c]) * 9.0 - (w[0][c] + w[3][c])) * 0.0625)
            .collect(),
        Reconstruction::TransposedConv => unreachable!(),
    })
}
