//! Coefficient-matrix heatmaps as binary portable pixmaps.
//!
//! One pixel per matrix cell on an absolute grayscale: coefficient 0 (the
//! diagonal, indistinguishable pairs) renders white, coefficient 1 renders
//! black. Assets are ordered cluster-first so a good partition shows up as
//! light blocks along the diagonal against a darker background.

use crate::clustering::Clustering;
use crate::error::{Result, SdError};
use crate::matrix::SdMatrix;

/// Permutation putting assets in (cluster label, ticker) order. Without a
/// clustering the matrix keeps its stored order.
pub fn display_order(matrix: &SdMatrix, clustering: Option<&Clustering>) -> Result<Vec<usize>> {
    let Some(c) = clustering else {
        return Ok((0..matrix.n()).collect());
    };
    let mut keyed: Vec<(usize, &String)> = Vec::with_capacity(matrix.n());
    for t in &matrix.tickers {
        let label = *c.assignments.get(t).ok_or_else(|| {
            SdError::Config(format!("clustering does not cover matrix ticker {t}"))
        })?;
        keyed.push((label, t));
    }
    if c.assignments.len() != matrix.n() {
        return Err(SdError::Config(format!(
            "clustering covers {} assets, matrix has {}",
            c.assignments.len(),
            matrix.n()
        )));
    }
    let mut order: Vec<usize> = (0..matrix.n()).collect();
    order.sort_by_key(|&i| keyed[i]);
    Ok(order)
}

fn gray(value: f64) -> u8 {
    // Coefficients live in [0, 1]; clamp guards float dust from averaging.
    255 - (value.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Renders the matrix as a P6 pixmap, one pixel per cell, darker = larger.
pub fn render_p6(matrix: &SdMatrix) -> Vec<u8> {
    let n = matrix.n();
    let mut out = format!("P6\n{n} {n}\n255\n").into_bytes();
    out.reserve(3 * n * n);
    for i in 0..n {
        for k in 0..n {
            let g = gray(matrix.get(i, k));
            out.extend_from_slice(&[g, g, g]);
        }
    }
    out
}
