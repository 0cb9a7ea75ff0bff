//! The classification experiment: a product-metric PGA baseline for
//! resampled tracks, an RBF soft-margin SVM trained by sequential minimal
//! optimization with inverse-frequency class weights, balanced accuracy,
//! and repeated stratified cross-validation.

use crate::error::{Error, Result};
use crate::hurdat::StormClass;
use crate::linalg::gram_pca;
use crate::manifold::{Manifold, Point};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// PGA scores of one sample with its class and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub source_id: String,
    pub label: StormClass,
    pub values: Vec<f64>,
}

/// Splits labeled features into the plain matrix/label form the classifier
/// consumes. Errors if the rows are ragged.
pub fn feature_matrix(features: &[FeatureVector]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if features.is_empty() {
        return Err(Error::EmptyInput);
    }
    let width = features[0].values.len();
    for f in features {
        if f.values.len() != width {
            return Err(Error::DimensionMismatch {
                left: f.values.len(),
                right: width,
            });
        }
    }
    Ok((
        features.iter().map(|f| f.values.clone()).collect(),
        features.iter().map(|f| f.label.index()).collect(),
    ))
}

/// Column-wise z-scoring; constant columns are left untouched.
pub fn standardize(matrix: &mut [Vec<f64>]) {
    if matrix.is_empty() {
        return;
    }
    let n = matrix.len() as f64;
    let width = matrix[0].len();
    for c in 0..width {
        let mean: f64 = matrix.iter().map(|r| r[c]).sum::<f64>() / n;
        let var: f64 = matrix.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std > 0.0 {
            for r in matrix.iter_mut() {
                r[c] = (r[c] - mean) / std;
            }
        }
    }
}

// ── Product-metric PGA baseline ─────────────────────────────────────────

/// Tangent PCA of trajectories under the product metric of the sample
/// manifold: one Frechet mean per time index, logs stacked blockwise.
#[derive(Debug, Clone)]
pub struct ProductPga {
    /// Frechet mean per time index.
    pub means: Vec<Point>,
    /// Descending explained variances (eigenvalue over sample count).
    pub variances: Vec<f64>,
    /// `scores[j][m]`: projection of trajectory j onto mode m.
    pub scores: Vec<Vec<f64>>,
    /// Requested modes dropped as rank-deficient.
    pub dropped: usize,
}

/// PGA of fixed-length point sequences under the product metric: the Frechet
/// functional splits per time index, and the inner product is the block sum.
/// This is the baseline representation a trajectory metric is compared
/// against.
pub fn product_pga(
    manifold: &Manifold,
    trajectories: &[Vec<Point>],
    modes: usize,
) -> Result<ProductPga> {
    if trajectories.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: trajectories.len(),
            params: 0,
        });
    }
    let len = trajectories[0].len();
    for t in trajectories {
        if t.len() != len {
            return Err(Error::DimensionMismatch {
                left: t.len(),
                right: len,
            });
        }
    }
    let n = trajectories.len();
    let weights = vec![1.0 / n as f64; n];
    let means: Vec<Point> = (0..len)
        .into_par_iter()
        .map(|k| {
            let column: Vec<Point> = trajectories.iter().map(|t| t[k].clone()).collect();
            manifold
                .frechet_mean(&column, &weights)
                .map_err(|e| e.at_component("product_pga", k))
        })
        .collect::<Result<_>>()?;

    // Blockwise logs: log_j = (log(mean_k, x_jk))_k, stacked.
    let d = manifold.ambient_dim();
    let logs: Vec<Vec<f64>> = trajectories
        .par_iter()
        .map(|t| {
            let mut stacked = vec![0.0; len * d];
            for k in 0..len {
                let v = manifold.log(&means[k], &t[k])?;
                stacked[k * d..(k + 1) * d].copy_from_slice(v.vec());
            }
            Ok(stacked)
        })
        .collect::<Result<_>>()?;

    let mut gram = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in j..n {
            let g: f64 = logs[j].iter().zip(&logs[k]).map(|(a, b)| a * b).sum();
            gram[j][k] = g;
            gram[k][j] = g;
        }
    }
    let space_dim = len * manifold.intrinsic_dim();
    let pca = gram_pca(&gram, modes.min(n - 1).min(space_dim))?;
    Ok(ProductPga {
        means,
        variances: pca.variances,
        scores: pca.scores,
        dropped: pca.dropped,
    })
}

// ── SVM ─────────────────────────────────────────────────────────────────

/// Kernel and optimizer settings; the defaults are the experiment's.
#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    pub gamma: f64,
    pub c: f64,
    /// KKT violation tolerated by the SMO stopping rule.
    pub kkt_tol: f64,
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> SvmParams {
        SvmParams {
            gamma: 0.7,
            c: 3.0,
            kkt_tol: 1e-3,
            max_passes: 100_000,
        }
    }
}

/// One trained binary subproblem (positive class vs negative class).
#[derive(Debug, Clone)]
pub struct BinarySvm {
    pub class_pos: usize,
    pub class_neg: usize,
    /// (feature vector, +-1 label, dual coefficient) per support vector.
    pub supports: Vec<(Vec<f64>, f64, f64)>,
    pub bias: f64,
    /// Box caps actually used, per support vector (C times class weight).
    pub caps: Vec<f64>,
    /// Dual objective after every optimization pass; non-decreasing.
    pub objective_trace: Vec<f64>,
}

impl BinarySvm {
    /// Decision value before thresholding.
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        let mut f = self.bias;
        for (sv, y, alpha) in &self.supports {
            f += alpha * y * rbf(sv, x, gamma);
        }
        f
    }

    /// Largest violation of the box constraints and the linear constraint.
    pub fn dual_infeasibility(&self) -> f64 {
        let mut worst = 0.0_f64;
        let mut balance = 0.0;
        for ((_, y, alpha), cap) in self.supports.iter().zip(&self.caps) {
            worst = worst.max(-alpha).max(alpha - cap);
            balance += alpha * y;
        }
        worst.max(balance.abs())
    }
}

/// One-vs-one multiclass SVM with RBF kernel.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub params: SvmParams,
    /// Class ids present in training, ascending.
    pub classes: Vec<usize>,
    /// Inverse-frequency weight per entry of `classes`.
    pub weights: Vec<f64>,
    pub pairs: Vec<BinarySvm>,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let dist_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * dist_sq).exp()
}

/// Trains one-vs-one RBF SVMs with inverse-frequency class weights:
/// weight(c) = N / (n_classes * count(c)) over the full training set.
pub fn svm_train(x: &[Vec<f64>], y: &[usize], params: SvmParams) -> Result<SvmModel> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClassInput);
    }
    let n = y.len() as f64;
    let weights: Vec<f64> = classes
        .iter()
        .map(|c| {
            let count = y.iter().filter(|&l| l == c).count() as f64;
            n / (classes.len() as f64 * count)
        })
        .collect();

    let mut pairs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let (class_pos, class_neg) = (classes[a], classes[b]);
            let mut sub_x: Vec<&[f64]> = Vec::new();
            let mut sub_y: Vec<f64> = Vec::new();
            let mut caps: Vec<f64> = Vec::new();
            for (xi, &yi) in x.iter().zip(y) {
                if yi == class_pos || yi == class_neg {
                    sub_x.push(xi);
                    sub_y.push(if yi == class_pos { 1.0 } else { -1.0 });
                    let w = weights[if yi == class_pos { a } else { b }];
                    caps.push(params.c * w);
                }
            }
            let (alphas, bias, trace) = smo(&sub_x, &sub_y, &caps, params)?;
            let supports = sub_x
                .iter()
                .zip(&sub_y)
                .zip(&alphas)
                .map(|((xi, &yi), &alpha)| (xi.to_vec(), yi, alpha))
                .collect();
            pairs.push(BinarySvm {
                class_pos,
                class_neg,
                supports,
                bias,
                caps,
                objective_trace: trace,
            });
        }
    }
    Ok(SvmModel {
        params,
        classes,
        weights,
        pairs,
    })
}

impl SvmModel {
    /// Majority vote over the pairwise machines. A vote tie goes to the
    /// winner of the head-to-head pair among the tied classes; a cycle
    /// falls back to the smallest class id.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes: Vec<(usize, usize)> = self.classes.iter().map(|&c| (c, 0)).collect();
        let mut head_to_head: Vec<(usize, usize)> = Vec::with_capacity(self.pairs.len());
        for pair in &self.pairs {
            let winner = if pair.decision(x, self.params.gamma) >= 0.0 {
                pair.class_pos
            } else {
                pair.class_neg
            };
            head_to_head.push((
                winner,
                if winner == pair.class_pos {
                    pair.class_neg
                } else {
                    pair.class_pos
                },
            ));
            votes.iter_mut().find(|(c, _)| *c == winner).unwrap().1 += 1;
        }
        let top = votes.iter().map(|&(_, v)| v).max().unwrap();
        let tied: Vec<usize> = votes
            .iter()
            .filter(|&&(_, v)| v == top)
            .map(|&(c, _)| c)
            .collect();
        if tied.len() == 2 {
            for &(winner, loser) in &head_to_head {
                if tied.contains(&winner) && tied.contains(&loser) {
                    return winner;
                }
            }
        }
        tied[0]
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Vec<usize> {
        x.iter().map(|xi| self.predict(xi)).collect()
    }
}

/// Sequential minimal optimization on the dual of the weighted soft-margin
/// problem: maximize sum(alpha) - 1/2 alpha' Q alpha subject to
/// 0 <= alpha_i <= cap_i and sum(alpha_i y_i) = 0.
fn smo(
    x: &[&[f64]],
    y: &[f64],
    caps: &[f64],
    params: SvmParams,
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let n = x.len();
    let gamma = params.gamma;
    let tol = params.kkt_tol;

    let mut kernel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let k = rbf(x[i], x[j], gamma);
            kernel[i][j] = k;
            kernel[j][i] = k;
        }
    }

    let mut alphas = vec![0.0; n];
    let mut bias = 0.0;

    let decision = |alphas: &[f64], bias: f64, i: usize| -> f64 {
        let mut f = bias;
        for j in 0..n {
            if alphas[j] != 0.0 {
                f += alphas[j] * y[j] * kernel[j][i];
            }
        }
        f
    };
    let objective = |alphas: &[f64]| -> f64 {
        let mut obj: f64 = alphas.iter().sum();
        for i in 0..n {
            if alphas[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if alphas[j] != 0.0 {
                    obj -= 0.5 * alphas[i] * alphas[j] * y[i] * y[j] * kernel[i][j];
                }
            }
        }
        obj
    };

    // Joint optimization of the pair (i1, i2); true if the step moved.
    let take_step = |alphas: &mut Vec<f64>, bias: &mut f64, i1: usize, i2: usize| -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (alphas[i1], alphas[i2]);
        let (y1, y2) = (y[i1], y[i2]);
        let e1 = decision(alphas, *bias, i1) - y1;
        let e2 = decision(alphas, *bias, i2) - y2;
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            let gap = a2_old - a1_old;
            (gap.max(0.0), (caps[i1] + gap).min(caps[i2]))
        } else {
            let total = a1_old + a2_old;
            ((total - caps[i1]).max(0.0), total.min(caps[i2]))
        };
        if hi - lo < 1e-12 {
            return false;
        }
        let k11 = kernel[i1][i1];
        let k12 = kernel[i1][i2];
        let k22 = kernel[i2][i2];
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat direction: evaluate the objective at both clip ends.
            let f1 = y1 * (e1 + *bias) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 + *bias) - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let lobj = l1 * f1 + lo * f2
                + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22
                + s * lo * l1 * k12;
            let hobj = h1 * f1 + hi * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22
                + s * hi * h1 * k12;
            if lobj < hobj - 1e-12 {
                lo
            } else if lobj > hobj + 1e-12 {
                hi
            } else {
                a2_old
            }
        };
        // Snap to the box so bound status is exact.
        if a2 < 1e-10 {
            a2 = 0.0;
        } else if a2 > caps[i2] - 1e-10 {
            a2 = caps[i2];
        }
        if (a2 - a2_old).abs() < 1e-8 * (a2 + a2_old + 1e-8) {
            return false;
        }
        let a1 = a1_old + s * (a2_old - a2);

        let b1 = *bias - e1 - y1 * (a1 - a1_old) * k11 - y2 * (a2 - a2_old) * k12;
        let b2 = *bias - e2 - y1 * (a1 - a1_old) * k12 - y2 * (a2 - a2_old) * k22;
        *bias = if a1 > 0.0 && a1 < caps[i1] {
            b1
        } else if a2 > 0.0 && a2 < caps[i2] {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        alphas[i1] = a1;
        alphas[i2] = a2;
        true
    };

    // Second-choice heuristic: largest |E1 - E2| among unbound points, then
    // the remaining unbound, then everything, all in index order so the
    // result is deterministic.
    let examine = |alphas: &mut Vec<f64>, bias: &mut f64, i2: usize| -> bool {
        let y2 = y[i2];
        let a2 = alphas[i2];
        let e2 = decision(alphas, *bias, i2) - y2;
        let r2 = e2 * y2;
        if !((r2 < -tol && a2 < caps[i2]) || (r2 > tol && a2 > 0.0)) {
            return false;
        }
        let unbound: Vec<usize> = (0..n)
            .filter(|&j| alphas[j] > 0.0 && alphas[j] < caps[j])
            .collect();
        if unbound.len() > 1 {
            let i1 = *unbound
                .iter()
                .max_by(|&&a, &&b| {
                    let ea = (decision(alphas, *bias, a) - y[a] - e2).abs();
                    let eb = (decision(alphas, *bias, b) - y[b] - e2).abs();
                    ea.partial_cmp(&eb).expect("finite errors")
                })
                .expect("nonempty");
            if take_step(alphas, bias, i1, i2) {
                return true;
            }
        }
        for &i1 in &unbound {
            if take_step(alphas, bias, i1, i2) {
                return true;
            }
        }
        for i1 in 0..n {
            if take_step(alphas, bias, i1, i2) {
                return true;
            }
        }
        false
    };

    let mut trace = vec![objective(&alphas)];
    let mut examine_all = true;
    let mut passes = 0usize;
    loop {
        let mut changed = 0usize;
        if examine_all {
            for i in 0..n {
                changed += examine(&mut alphas, &mut bias, i) as usize;
            }
        } else {
            for i in 0..n {
                if alphas[i] > 0.0 && alphas[i] < caps[i] {
                    changed += examine(&mut alphas, &mut bias, i) as usize;
                }
            }
        }
        trace.push(objective(&alphas));
        passes += 1;
        if passes > params.max_passes {
            return Err(Error::NoConvergence {
                iterations: passes,
                residual: f64::NAN,
            });
        }
        if examine_all {
            if changed == 0 {
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }
    Ok((alphas, bias, trace))
}

// ── Scoring and cross-validation ────────────────────────────────────────

/// Mean per-class recall over classes `0..n_classes`.
pub fn balanced_accuracy(predicted: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut correct = vec![0usize; n_classes];
    let mut total = vec![0usize; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        total[t] += 1;
        if p == t {
            correct[t] += 1;
        }
    }
    let mut sum = 0.0;
    for c in 0..n_classes {
        if total[c] == 0 {
            return Err(Error::EmptyClass {
                class: c.to_string(),
            });
        }
        sum += correct[c] as f64 / total[c] as f64;
    }
    Ok(sum / n_classes as f64)
}

/// Accuracy distribution of repeated stratified cross-validation.
#[derive(Debug, Clone)]
pub struct CvSummary {
    /// One balanced accuracy per (repetition, fold), repetition-major.
    pub scores: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub quartile_low: f64,
    pub quartile_high: f64,
}

/// `repetitions` rounds of `folds`-fold stratified cross-validation. Each
/// repetition r shuffles within classes using an independent RNG stream of
/// the seed, so the full distribution is reproducible and the repetitions
/// can run concurrently.
pub fn repeated_cv(
    x: &[Vec<f64>],
    y: &[usize],
    folds: usize,
    repetitions: usize,
    seed: u64,
    params: SvmParams,
) -> Result<CvSummary> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    assert!(folds >= 2, "cross-validation needs at least 2 folds");
    let n_classes = y.iter().max().unwrap() + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &label) in y.iter().enumerate() {
        by_class[label].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < folds {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                folds,
            });
        }
    }

    let per_rep: Vec<Result<Vec<f64>>> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            // Stratified folds: shuffle within each class, deal round-robin.
            let mut fold_of = vec![0usize; y.len()];
            for members in &by_class {
                let mut order = members.clone();
                order.shuffle(&mut rng);
                for (k, &i) in order.iter().enumerate() {
                    fold_of[i] = k % folds;
                }
            }
            let mut scores = Vec::with_capacity(folds);
            for fold in 0..folds {
                let mut train_x = Vec::new();
                let mut train_y = Vec::new();
                let mut test_x = Vec::new();
                let mut test_y = Vec::new();
                for i in 0..y.len() {
                    if fold_of[i] == fold {
                        test_x.push(x[i].clone());
                        test_y.push(y[i]);
                    } else {
                        train_x.push(x[i].clone());
                        train_y.push(y[i]);
                    }
                }
                let model = svm_train(&train_x, &train_y, params)?;
                let predictions = model.predict_all(&test_x);
                scores.push(balanced_accuracy(&predictions, &test_y, n_classes)?);
            }
            Ok(scores)
        })
        .collect();

    let mut scores = Vec::with_capacity(repetitions * folds);
    for rep in per_rep {
        scores.extend(rep?);
    }
    Ok(summarize(scores))
}

fn summarize(scores: Vec<f64>) -> CvSummary {
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    CvSummary {
        mean,
        median: percentile(&sorted, 0.5),
        quartile_low: percentile(&sorted, 0.25),
        quartile_high: percentile(&sorted, 0.75),
        scores,
    }
}

/// Linear-interpolation percentile of an ascending slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
