//! Small shared linear-algebra helpers.

use nalgebra::{DMatrix, DVector};

/// Least-squares solution of `design * w = rhs` for a full-column-rank tall
/// matrix, via thin QR and back substitution.
pub(crate) fn least_squares(design: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let k = design.ncols();
    let qr = design.clone().qr();
    let projected = qr.q().transpose() * DVector::from_column_slice(rhs);
    let r = qr.r();
    let mut out = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = projected[i];
        for j in i + 1..k {
            acc -= r[(i, j)] * out[j];
        }
        out[i] = acc / r[(i, i)];
    }
    out
}
