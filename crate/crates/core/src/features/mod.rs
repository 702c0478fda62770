//! Linear shape and appearance feature models.
//!
//! A model holds a mean vector plus orthonormal modes with per-mode
//! variances. Training runs PCA on centered observation rows and keeps the
//! minimal number of modes whose variance sum reaches the retained
//! fraction. Observations synthesize as `mean + sum_i params_i * mode_i`.
//!
//! Shape observations are landmark coordinate vectors (x/y pairs in
//! pixels); appearance observations are pixel intensity vectors pre-warped
//! to the mean shape. Warping and image fitting happen upstream — this
//! module only sees vectors.

mod io;
mod procrustes;

pub use procrustes::similarity_normalize;

use crate::error::{Error, Result};
use crate::frames::FrameSet;
use nalgebra::{DMatrix, SymmetricEigen};

/// Eigenvalues whose share of the largest eigenvalue falls below this are
/// treated as numerically zero rank.
const RANK_EPS: f64 = 1e-12;

/// A row-major matrix of equal-dimension observation vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    dim: usize,
    rows: Vec<f64>,
}

impl ObservationMatrix {
    pub fn new(dim: usize) -> ObservationMatrix {
        ObservationMatrix { dim, rows: Vec::new() }
    }

    pub fn from_frames(frames: &FrameSet) -> ObservationMatrix {
        ObservationMatrix {
            dim: frames.dim(),
            rows: frames.iter().flatten().copied().collect(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.rows.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.rows.len() / self.dim
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.dim)
    }
}

/// A trained linear model: mean, orthonormal modes, per-mode variances.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, descending variance order.
    pub modes: Vec<Vec<f64>>,
    /// Per-mode variances matching `modes`.
    pub eigenvalues: Vec<f64>,
    /// Sum of all eigenvalues of the training data, retained or not.
    pub total_variance: f64,
    pub retained_fraction: f64,
    /// Free-form descriptor of the observation domain, e.g. "shape" or
    /// "appearance over mean-shape pixels".
    pub domain_note: String,
}

/// Minimal number of leading eigenvalues whose sum reaches `fraction` of
/// the total. Zero total variance selects zero modes.
pub fn select_mode_count(eigenvalues: &[f64], fraction: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut cum = 0.0;
    for (i, &ev) in eigenvalues.iter().enumerate() {
        cum += ev;
        if cum / total >= fraction {
            return i + 1;
        }
    }
    eigenvalues.len()
}

impl LinearModel {
    /// Train on observation rows, keeping the minimal mode count that
    /// reaches `retained_fraction` of total variance.
    pub fn train(data: &ObservationMatrix, retained_fraction: f64) -> Result<LinearModel> {
        LinearModel::train_with_note(data, retained_fraction, "")
    }

    pub fn train_with_note(
        data: &ObservationMatrix,
        retained_fraction: f64,
        domain_note: &str,
    ) -> Result<LinearModel> {
        let n = data.count();
        let d = data.dim();
        if n < 2 {
            return Err(Error::EmptyData(format!(
                "linear model training needs at least 2 rows, got {n}"
            )));
        }
        if !(retained_fraction > 0.0 && retained_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "retained fraction must be in (0,1], got {retained_fraction}"
            )));
        }

        let mut mean = vec![0.0; d];
        for row in data.iter() {
            for (m, &x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }

        // Centered data, row major.
        let mut centered = Vec::with_capacity(n * d);
        for row in data.iter() {
            for (j, &x) in row.iter().enumerate() {
                centered.push(x - mean[j]);
            }
        }

        // Decompose whichever of the d x d covariance or the n x n Gram
        // matrix is smaller; both share the nonzero spectrum.
        let (mut eigenvalues, mut modes) = if d <= n {
            let mut cov = DMatrix::<f64>::zeros(d, d);
            for r in 0..n {
                let row = &centered[r * d..(r + 1) * d];
                for i in 0..d {
                    for j in i..d {
                        cov[(i, j)] += row[i] * row[j];
                    }
                }
            }
            let denom = (n - 1) as f64;
            for i in 0..d {
                for j in i..d {
                    let v = cov[(i, j)] / denom;
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
            let eig = SymmetricEigen::new(cov);
            let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
                .map(|k| {
                    let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                    (eig.eigenvalues[k], v)
                })
                .collect();
            sort_desc(&mut pairs);
            let eigenvalues: Vec<f64> = pairs.iter().map(|(ev, _)| ev.max(0.0)).collect();
            let modes: Vec<Vec<f64>> = pairs.into_iter().map(|(_, v)| v).collect();
            (eigenvalues, modes)
        } else {
            let mut gram = DMatrix::<f64>::zeros(n, n);
            for a in 0..n {
                let ra = &centered[a * d..(a + 1) * d];
                for b in a..n {
                    let rb = &centered[b * d..(b + 1) * d];
                    let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
                    gram[(a, b)] = dot;
                    gram[(b, a)] = dot;
                }
            }
            let denom = (n - 1) as f64;
            gram /= denom;
            let eig = SymmetricEigen::new(gram);
            let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
                .map(|k| {
                    let u: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                    (eig.eigenvalues[k], u)
                })
                .collect();
            sort_desc(&mut pairs);
            let mut eigenvalues = Vec::new();
            let mut modes = Vec::new();
            for (ev, u) in pairs {
                let ev = ev.max(0.0);
                // Lift a Gram eigenvector u to the data space: X^T u, with
                // norm sqrt((n-1) * ev). Zero eigenvalues carry no mode.
                let mut v = vec![0.0; d];
                for (r, &ur) in u.iter().enumerate() {
                    let row = &centered[r * d..(r + 1) * d];
                    for (vj, &xj) in v.iter_mut().zip(row) {
                        *vj += ur * xj;
                    }
                }
                let norm = (denom * ev).sqrt();
                if norm > 0.0 {
                    for vj in &mut v {
                        *vj /= norm;
                    }
                }
                eigenvalues.push(ev);
                modes.push(v);
            }
            (eigenvalues, modes)
        };

        // Drop numerically-zero directions so a fraction of 1.0 keeps
        // exactly the rank of the data.
        let max_ev = eigenvalues.first().copied().unwrap_or(0.0);
        let rank = eigenvalues
            .iter()
            .take_while(|&&ev| ev > RANK_EPS * max_ev && ev > 0.0)
            .count();
        let total_variance: f64 = eigenvalues.iter().sum();
        eigenvalues.truncate(rank);
        modes.truncate(rank);

        let m = select_mode_count(&eigenvalues, retained_fraction);
        eigenvalues.truncate(m);
        modes.truncate(m);
        for v in &mut modes {
            fix_sign(v);
        }

        Ok(LinearModel {
            mean,
            modes,
            eigenvalues,
            total_variance,
            retained_fraction,
            domain_note: domain_note.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Variance fraction explained by the retained modes.
    pub fn explained_fraction(&self) -> f64 {
        if self.total_variance <= 0.0 {
            1.0
        } else {
            self.eigenvalues.iter().sum::<f64>() / self.total_variance
        }
    }

    /// Project an observation onto the modes: `params_i = mode_i . (x - mean)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self
            .modes
            .iter()
            .map(|mode| {
                mode.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(&w, (&xi, &mi))| w * (xi - mi))
                    .sum()
            })
            .collect())
    }

    /// Synthesize an observation: `mean + sum_i params_i * mode_i`.
    pub fn reconstruct(&self, params: &[f64]) -> Result<Vec<f64>> {
        if params.len() != self.mode_count() {
            return Err(Error::LengthMismatch {
                expected: self.mode_count(),
                got: params.len(),
            });
        }
        let mut out = self.mean.clone();
        for (&p, mode) in params.iter().zip(&self.modes) {
            for (o, &w) in out.iter_mut().zip(mode) {
                *o += p * w;
            }
        }
        Ok(out)
    }
}

fn sort_desc(pairs: &mut [(f64, Vec<f64>)]) {
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("eigenvalues are finite"));
}

/// Orient a mode so its largest-magnitude entry is positive; ties go to the
/// lowest index. Keeps repeated trainings bitwise identical.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> ObservationMatrix {
        let mut m = ObservationMatrix::new(rows[0].len());
        for r in rows {
            m.push_row(r).unwrap();
        }
        m
    }

    #[test]
    fn identical_rows_give_mean_only_model() {
        let data = matrix(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]]);
        let model = LinearModel::train(&data, 0.95).unwrap();
        assert_eq!(model.mode_count(), 0);
        assert_eq!(model.mean, vec![1.0, 2.0, 3.0]);
        // Projection of anything is empty; reconstruction of [] is the mean.
        assert_eq!(model.project(&[9.0, 9.0, 9.0]).unwrap().len(), 0);
        assert_eq!(model.reconstruct(&[]).unwrap(), model.mean);
    }

    #[test]
    fn mode_selection_meets_fraction_with_geq() {
        // Eigenvalue shares 0.9/0.1: fraction 0.9 selects exactly one mode.
        assert_eq!(select_mode_count(&[9.0, 1.0], 0.9), 1);
        assert_eq!(select_mode_count(&[9.0, 1.0], 0.91), 2);
        assert_eq!(select_mode_count(&[9.0, 1.0], 1.0), 2);
        assert_eq!(select_mode_count(&[], 0.95), 0);
        assert_eq!(select_mode_count(&[0.0, 0.0], 0.5), 0);
    }

    #[test]
    fn projection_respects_orthonormality() {
        let data = matrix(&[
            &[2.0, 0.0],
            &[-2.0, 0.0],
            &[0.0, 0.5],
            &[0.0, -0.5],
        ]);
        let model = LinearModel::train(&data, 1.0).unwrap();
        assert_eq!(model.mode_count(), 2);
        // x = mean -> zero params.
        let p = model.project(&model.mean.clone()).unwrap();
        assert!(p.iter().all(|&v| v.abs() < 1e-12));
        // x = mean + 2 * mode_0 -> [2, 0].
        let x: Vec<f64> = model
            .mean
            .iter()
            .zip(&model.modes[0])
            .map(|(&m, &w)| m + 2.0 * w)
            .collect();
        let p = model.project(&x).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
        // p = unit on mode 0 -> mean + mode_0.
        let rec = model.reconstruct(&[1.0, 0.0]).unwrap();
        for ((r, &m), &w) in rec.iter().zip(&model.mean).zip(&model.modes[0]) {
            assert!((r - (m + w)).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_on_bad_dimensions() {
        let data = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let model = LinearModel::train(&data, 0.95).unwrap();
        assert!(matches!(
            model.project(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            model.reconstruct(&[1.0; 7]),
            Err(Error::LengthMismatch { .. })
        ));
        let single = matrix(&[&[1.0, 2.0]]);
        assert!(LinearModel::train(&single, 0.95).is_err());
        assert!(LinearModel::train(&data, 0.0).is_err());
        assert!(LinearModel::train(&data, 1.5).is_err());
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let data = matrix(&[
            &[0.3, 1.2, -0.5, 2.0],
            &[1.1, 0.2, 0.7, -1.0],
            &[-0.4, 0.9, 1.5, 0.3],
            &[2.2, -1.1, 0.0, 0.8],
        ]);
        let a = LinearModel::train(&data, 0.95).unwrap();
        let b = LinearModel::train(&data, 0.95).unwrap();
        assert_eq!(a, b);
        for mode in &a.modes {
            let best = mode
                .iter()
                .cloned()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            assert!(best > 0.0, "sign convention violated");
        }
    }
}
