//! Dense symmetric eigendecomposition and the Gram-matrix form of tangent
//! PCA.
//!
//! Sample counts stay small (hundreds), so a cyclic Jacobi sweep is fast,
//! deterministic, and dependency-free. PCA is phrased in terms of the Gram
//! matrix of log vectors so callers can supply whichever inner product their
//! space carries; directions come back as coefficient vectors over the
//! samples.

use crate::error::{Error, Result};

/// Eigenvalues below `RANK_TOL * trace` are treated as numerically zero and
/// the corresponding modes dropped.
pub const RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns: `vectors[i][m]` is component `i` of eigenvector `m`, so that
/// `A v_m = lambda_m v_m`.
pub fn jacobi_eigh(matrix: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    for row in matrix {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                left: row.len(),
                right: n,
            });
        }
    }

    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let frob_sq: f64 = a.iter().flatten().map(|x| x * x).sum();
    let stop = (1e-14_f64 * frob_sq.sqrt().max(f64::MIN_POSITIVE)).powi(2);

    for _ in 0..MAX_SWEEPS {
        let off_sq: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum::<f64>()
            * 2.0;
        if off_sq <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = a[p][p];
                let aqq = a[q][q];
                a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[p][i] = a[i][p];
                    a[i][q] = s * aip + c * aiq;
                    a[q][i] = a[i][q];
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|i| order.iter().map(|&m| v[i][m]).collect())
        .collect();
    Ok((eigenvalues, vectors))
}

/// Principal modes extracted from a Gram matrix of centered log vectors.
///
/// With logs X_1..X_N and G_jk = <X_j, X_k>, mode m has direction
/// `sum_j coefficients[m][j] * X_j`, unit-norm under the same inner product,
/// explained variance `eigenvalue_m / N`, and per-sample scores
/// `scores[j][m] = <X_j, direction_m>`.
#[derive(Debug, Clone)]
pub struct PcaModes {
    /// Gram eigenvalues, descending, one per kept mode.
    pub eigenvalues: Vec<f64>,
    /// Explained variance per mode: eigenvalue / sample count.
    pub variances: Vec<f64>,
    /// `coefficients[m][j]`: weight of sample j in direction m.
    pub coefficients: Vec<Vec<f64>>,
    /// `scores[j][m]`: projection of sample j onto direction m.
    pub scores: Vec<Vec<f64>>,
    /// Modes requested but dropped as numerically rank-deficient.
    pub dropped: usize,
}

/// Tangent PCA from a Gram matrix. Keeps at most `max_modes` modes, dropping
/// those with eigenvalue below `RANK_TOL * trace`. Directions are
/// sign-normalized so the largest-magnitude score in each mode is positive.
pub fn gram_pca(gram: &[Vec<f64>], max_modes: usize) -> Result<PcaModes> {
    let n = gram.len();
    let (eigenvalues, vectors) = jacobi_eigh(gram)?;
    let trace: f64 = (0..n).map(|i| gram[i][i]).sum();
    let cutoff = RANK_TOL * trace;

    let requested = max_modes.min(n);
    let kept = eigenvalues
        .iter()
        .take(requested)
        .filter(|&&l| l > cutoff && l > 0.0)
        .count();

    let mut out = PcaModes {
        eigenvalues: Vec::with_capacity(kept),
        variances: Vec::with_capacity(kept),
        coefficients: Vec::with_capacity(kept),
        scores: vec![Vec::with_capacity(kept); n],
        dropped: requested - kept,
    };
    for m in 0..kept {
        let lambda = eigenvalues[m];
        let scale = lambda.sqrt();
        let mut coeff: Vec<f64> = (0..n).map(|j| vectors[j][m] / scale).collect();
        let mut scores: Vec<f64> = (0..n).map(|j| scale * vectors[j][m]).collect();
        // Largest-magnitude score positive: fixes the eigenvector sign.
        // Ties resolve to the earliest sample for determinism.
        let mut peak = 0usize;
        for j in 1..n {
            if scores[j].abs() > scores[peak].abs() {
                peak = j;
            }
        }
        if scores[peak] < 0.0 {
            coeff.iter_mut().for_each(|x| *x = -*x);
            scores.iter_mut().for_each(|x| *x = -*x);
        }
        out.eigenvalues.push(lambda);
        out.variances.push(lambda / n as f64);
        out.coefficients.push(coeff);
        for (j, s) in scores.into_iter().enumerate() {
            out.scores[j].push(s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
            .collect()
    }

    #[test]
    fn two_by_two_known_spectrum() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let (vals, vecs) = jacobi_eigh(&a).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        // First eigenvector parallel to (1, 1).
        assert!((vecs[0][0].abs() - vecs[1][0].abs()).abs() < 1e-12);
        assert!(vecs[0][0] * vecs[1][0] > 0.0);
    }

    #[test]
    fn diagonal_matrix_is_sorted_not_rotated() {
        let a = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 5.0, 0.0],
            vec![0.0, 0.0, 3.0],
        ];
        let (vals, vecs) = jacobi_eigh(&a).unwrap();
        assert_eq!(vals, vec![5.0, 3.0, 1.0]);
        // Eigenvector of the top mode is the second axis.
        assert_eq!(vecs[1][0].abs(), 1.0);
    }

    #[test]
    fn random_symmetric_satisfies_eigen_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for n in [2usize, 5, 17, 40] {
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let x = rng.gen_range(-1.0..1.0);
                    a[i][j] = x;
                    a[j][i] = x;
                }
            }
            let (vals, vecs) = jacobi_eigh(&a).unwrap();
            let scale: f64 = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);

            // Descending order.
            for m in 1..n {
                assert!(vals[m - 1] >= vals[m]);
            }
            // Trace preserved.
            let trace: f64 = (0..n).map(|i| a[i][i]).sum();
            let sum: f64 = vals.iter().sum();
            assert!((trace - sum).abs() < 1e-10 * scale.max(1.0));
            // A v = lambda v and orthonormality.
            for m in 0..n {
                let col: Vec<f64> = (0..n).map(|i| vecs[i][m]).collect();
                let av = matvec(&a, &col);
                for i in 0..n {
                    assert!(
                        (av[i] - vals[m] * col[i]).abs() < 1e-9 * scale.max(1.0),
                        "residual at n={n} mode={m}"
                    );
                }
                for l in 0..n {
                    let dot: f64 = (0..n).map(|i| vecs[i][m] * vecs[i][l]).sum();
                    let expect = if m == l { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gram_pca_matches_hand_computed_cross() {
        // Four centered points on the axes of R^2: (±a, 0), (0, ±b).
        let (a, b) = (2.0, 1.0);
        let data = [[a, 0.0], [-a, 0.0], [0.0, b], [0.0, -b]];
        let gram: Vec<Vec<f64>> = data
            .iter()
            .map(|x| {
                data.iter()
                    .map(|y| x[0] * y[0] + x[1] * y[1])
                    .collect()
            })
            .collect();
        let pca = gram_pca(&gram, 4).unwrap();
        // Covariance eigenvalues are (2a^2/4, 2b^2/4) = (2, 0.5).
        assert_eq!(pca.dropped, 2);
        assert_eq!(pca.variances.len(), 2);
        assert!((pca.variances[0] - 2.0).abs() < 1e-12);
        assert!((pca.variances[1] - 0.5).abs() < 1e-12);
        // Scores recover the coordinates up to sign convention.
        assert!((pca.scores[0][0].abs() - a).abs() < 1e-12);
        assert!((pca.scores[2][1].abs() - b).abs() < 1e-12);
        // Sign convention: largest-magnitude score positive.
        let peak0 = pca
            .scores
            .iter()
            .map(|s| s[0])
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        assert!(peak0 > 0.0);
    }

    /// Gram-side PCA must agree with covariance-side PCA on the same data.
    #[test]
    fn gram_pca_matches_covariance_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        let (n, d) = (30usize, 4usize);
        let mut data = vec![vec![0.0; d]; n];
        for row in data.iter_mut() {
            for x in row.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        // Center.
        for j in 0..d {
            let mean: f64 = data.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            for row in data.iter_mut() {
                row[j] -= mean;
            }
        }
        let gram: Vec<Vec<f64>> = data
            .iter()
            .map(|x| {
                data.iter()
                    .map(|y| x.iter().zip(y).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        let pca = gram_pca(&gram, d).unwrap();

        let mut cov = vec![vec![0.0; d]; d];
        for row in &data {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += row[i] * row[j] / n as f64;
                }
            }
        }
        let (cov_vals, _) = jacobi_eigh(&cov).unwrap();
        assert_eq!(pca.variances.len(), d);
        for m in 0..d {
            assert!(
                (pca.variances[m] - cov_vals[m]).abs() < 1e-10,
                "mode {m}: {} vs {}",
                pca.variances[m],
                cov_vals[m]
            );
        }
        // Score vectors are orthogonal across modes with norm^2 = eigenvalue.
        for m in 0..d {
            for l in 0..d {
                let dot: f64 = (0..n).map(|j| pca.scores[j][m] * pca.scores[j][l]).sum();
                let expect = if m == l { pca.eigenvalues[m] } else { 0.0 };
                assert!((dot - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identical_samples_drop_all_modes() {
        let gram = vec![vec![0.0; 5]; 5];
        let pca = gram_pca(&gram, 5).unwrap();
        assert!(pca.variances.is_empty());
        assert_eq!(pca.dropped, 5);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(matches!(jacobi_eigh(&[]), Err(Error::EmptyInput)));
    }
}
