//! Optional similarity normalization of shape rows before training.

use super::ObservationMatrix;
use crate::error::{Error, Result};

/// Remove translation, scale and rotation from shape rows (x/y pairs) by
/// aligning each row to the evolving mean shape. Off by default — training
/// consumes raw vectors unless the caller asks for normalization.
pub fn similarity_normalize(data: &ObservationMatrix, iterations: usize) -> Result<ObservationMatrix> {
    if data.dim() % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "shape vectors need x/y pairs, got odd dimension {}",
            data.dim()
        )));
    }
    let n_points = data.dim() / 2;
    if n_points == 0 || data.count() == 0 {
        return Ok(data.clone());
    }

    // Center and unit-scale each row.
    let mut rows: Vec<Vec<f64>> = data
        .iter()
        .map(|row| {
            let mut r = row.to_vec();
            center(&mut r, n_points);
            unit_scale(&mut r);
            r
        })
        .collect();

    // Align to the mean, re-estimate, repeat.
    let mut reference = rows[0].clone();
    for _ in 0..iterations.max(1) {
        for r in &mut rows {
            rotate_to(r, &reference, n_points);
        }
        let mut mean = vec![0.0; data.dim()];
        for r in &rows {
            for (m, &x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= rows.len() as f64;
        }
        unit_scale(&mut mean);
        reference = mean;
    }

    let mut out = ObservationMatrix::new(data.dim());
    for r in &rows {
        out.push_row(r)?;
    }
    Ok(out)
}

fn center(row: &mut [f64], n_points: usize) {
    let (mut cx, mut cy) = (0.0, 0.0);
    for p in 0..n_points {
        cx += row[2 * p];
        cy += row[2 * p + 1];
    }
    cx /= n_points as f64;
    cy /= n_points as f64;
    for p in 0..n_points {
        row[2 * p] -= cx;
        row[2 * p + 1] -= cy;
    }
}

fn unit_scale(row: &mut [f64]) {
    let norm: f64 = row.iter().map(|&x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
}

/// Optimal rotation of `row` onto `reference` (both centered).
fn rotate_to(row: &mut [f64], reference: &[f64], n_points: usize) {
    let (mut a, mut b) = (0.0, 0.0);
    for p in 0..n_points {
        let (x, y) = (row[2 * p], row[2 * p + 1]);
        let (rx, ry) = (reference[2 * p], reference[2 * p + 1]);
        a += x * rx + y * ry;
        b += x * ry - y * rx;
    }
    let norm = (a * a + b * b).sqrt();
    if norm == 0.0 {
        return;
    }
    let (cos, sin) = (a / norm, b / norm);
    for p in 0..n_points {
        let (x, y) = (row[2 * p], row[2 * p + 1]);
        row[2 * p] = cos * x - sin * y;
        row[2 * p + 1] = sin * x + cos * y;
    }
}
