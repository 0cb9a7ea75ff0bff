//! The space of C1 cubic splines treated as a product of tangent bundles.
//!
//! A spline is identified with its L + 1 anchors (join point, one third of
//! the velocity there), each a point of TM. Under this identification the
//! product Sasaki metric pulls back to the spline space, so geodesics, logs,
//! exponentials and Frechet means all decompose into independent per-anchor
//! bundle problems. PGA runs as tangent PCA at the mean with the pullback
//! inner product.

use crate::bezier::{CubicSpline, SegmentEnd};
use crate::error::{Error, Result};
use crate::linalg::gram_pca;
use crate::manifold::{Manifold, Point};
use crate::tangent_bundle::{BundlePoint, BundleTangent, Sasaki};
use rayon::prelude::*;

/// A spline in anchor coordinates: L + 1 points of the tangent bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCode {
    manifold: Manifold,
    anchors: Vec<BundlePoint>,
}

impl SplineCode {
    /// Validates dimensions and the fiber bound: every fiber norm must stay
    /// under a third of the injectivity guard so the derived interior
    /// controls always exist.
    pub fn new(manifold: Manifold, anchors: Vec<BundlePoint>) -> Result<SplineCode> {
        if anchors.is_empty() {
            return Err(Error::EmptyInput);
        }
        if anchors.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: anchors.len(),
                params: 0,
            });
        }
        let d = manifold.ambient_dim();
        let fiber_guard = manifold.injectivity_guard() / 3.0;
        for a in &anchors {
            if a.foot().coords().len() != d {
                return Err(Error::DimensionMismatch {
                    left: a.foot().coords().len(),
                    right: d,
                });
            }
            let n = a.fiber().norm();
            if n >= fiber_guard {
                return Err(Error::OutOfInjectivityRadius {
                    norm: n,
                    guard: fiber_guard,
                });
            }
        }
        Ok(SplineCode { manifold, anchors })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn anchors(&self) -> &[BundlePoint] {
        &self.anchors
    }

    pub fn segments(&self) -> usize {
        self.anchors.len() - 1
    }
}

/// A tangent vector of the spline space: one bundle tangent per anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCodeTangent {
    components: Vec<BundleTangent>,
}

impl SplineCodeTangent {
    pub fn new(components: Vec<BundleTangent>) -> Result<SplineCodeTangent> {
        if components.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(SplineCodeTangent { components })
    }

    /// Zero vector anchored at `code`.
    pub fn zero(code: &SplineCode) -> SplineCodeTangent {
        let m = code.manifold;
        SplineCodeTangent {
            components: code
                .anchors
                .iter()
                .map(|a| BundleTangent::zero(&m, a.clone()))
                .collect(),
        }
    }

    pub fn components(&self) -> &[BundleTangent] {
        &self.components
    }

    /// Pullback norm: root of the summed squared component norms.
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> SplineCodeTangent {
        SplineCodeTangent {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// `self + s * other`, component-wise; anchors must agree.
    pub fn axpy(&self, s: f64, other: &SplineCodeTangent) -> Result<SplineCodeTangent> {
        if self.components.len() != other.components.len() {
            return Err(Error::DimensionMismatch {
                left: self.components.len(),
                right: other.components.len(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .enumerate()
            .map(|(i, (a, b))| a.axpy(s, b).map_err(|e| e.at_component("axpy", i)))
            .collect::<Result<_>>()?;
        Ok(SplineCodeTangent { components })
    }
}

/// Anchor coordinates of a spline: `(B(i), velocity(i) / 3)` at each join.
pub fn encode(spline: &CubicSpline) -> Result<SplineCode> {
    let m = spline.manifold();
    let l = spline.segments();
    let mut anchors = Vec::with_capacity(l + 1);
    for i in 0..=l {
        let end = if i < l {
            SegmentEnd::Start(i)
        } else {
            SegmentEnd::End(l - 1)
        };
        let foot = spline.eval(i as f64)?;
        let fiber = spline.endpoint_velocity(end)?.scale(1.0 / 3.0);
        anchors.push(BundlePoint::new(foot, fiber)?);
    }
    SplineCode::new(m, anchors)
}

/// Controls back from anchors: segment i is
/// `(p_i, exp(u_i), exp(-u_{i+1}), p_{i+1})`. The result is C1 by
/// construction.
pub fn decode(code: &SplineCode) -> Result<CubicSpline> {
    let m = code.manifold;
    let mut points: Vec<Point> = Vec::with_capacity(3 * code.segments() + 1);
    points.push(code.anchors[0].foot().clone());
    for pair in code.anchors.windows(2) {
        points.push(m.exp(pair[0].foot(), pair[0].fiber())?);
        points.push(m.exp(pair[1].foot(), &pair[1].fiber().scale(-1.0))?);
        points.push(pair[1].foot().clone());
    }
    CubicSpline::new(m, points)
}

/// Pullback metric: the sum of per-anchor Sasaki inner products.
pub fn pullback_inner(
    code: &SplineCode,
    x: &SplineCodeTangent,
    y: &SplineCodeTangent,
) -> Result<f64> {
    if x.components.len() != code.anchors.len() || y.components.len() != code.anchors.len() {
        return Err(Error::DimensionMismatch {
            left: x.components.len().max(y.components.len()),
            right: code.anchors.len(),
        });
    }
    let sasaki = Sasaki::new(code.manifold);
    let mut total = 0.0;
    for (i, anchor) in code.anchors.iter().enumerate() {
        total += sasaki
            .inner(anchor, &x.components[i], &y.components[i])
            .map_err(|e| e.at_component("pullback_inner", i))?;
    }
    Ok(total)
}

/// Principal geodesic analysis of a spline population: Frechet mean, an
/// orthonormal hierarchy of tangent directions, per-mode variances, and
/// per-sample scores.
#[derive(Debug, Clone)]
pub struct PGAModel {
    pub mean: SplineCode,
    /// Orthonormal under the pullback inner product at the mean.
    pub directions: Vec<SplineCodeTangent>,
    /// Descending, nonnegative; eigenvalue over sample count.
    pub variances: Vec<f64>,
    /// `scores[j][m]`: projection of sample j onto direction m.
    pub scores: Vec<Vec<f64>>,
    /// Modes requested but numerically rank-deficient (reported, not fatal).
    pub dropped: usize,
}

/// The spline space with its pullback Sasaki structure. Wraps the
/// discretization used for the per-anchor bundle solves.
#[derive(Debug, Clone)]
pub struct Bezierfold {
    sasaki: Sasaki,
}

impl Bezierfold {
    pub fn new(manifold: Manifold) -> Bezierfold {
        Bezierfold {
            sasaki: Sasaki::new(manifold),
        }
    }

    pub fn with_segments(manifold: Manifold, segments: usize) -> Bezierfold {
        Bezierfold {
            sasaki: Sasaki::with_segments(manifold, segments),
        }
    }

    pub fn sasaki(&self) -> &Sasaki {
        &self.sasaki
    }

    fn check_pair(&self, a: &SplineCode, b: &SplineCode) -> Result<()> {
        if a.anchors.len() != b.anchors.len() {
            return Err(Error::DimensionMismatch {
                left: a.anchors.len(),
                right: b.anchors.len(),
            });
        }
        Ok(())
    }

    /// Discrete geodesic between codes: per-anchor bundle geodesics zipped
    /// back into one code per discretization node.
    pub fn geodesic(&self, a: &SplineCode, b: &SplineCode) -> Result<Vec<SplineCode>> {
        self.check_pair(a, b)?;
        let paths: Vec<_> = (0..a.anchors.len())
            .into_par_iter()
            .map(|i| {
                self.sasaki
                    .geodesic(&a.anchors[i], &b.anchors[i])
                    .map_err(|e| e.at_component("geodesic", i))
            })
            .collect::<Result<_>>()?;
        let nodes = self.sasaki.segments() + 1;
        (0..nodes)
            .map(|k| {
                let anchors = paths.iter().map(|p| p.nodes()[k].clone()).collect();
                SplineCode::new(a.manifold, anchors)
            })
            .collect()
    }

    pub fn log(&self, a: &SplineCode, b: &SplineCode) -> Result<SplineCodeTangent> {
        self.check_pair(a, b)?;
        let components = (0..a.anchors.len())
            .into_par_iter()
            .map(|i| {
                self.sasaki
                    .log(&a.anchors[i], &b.anchors[i])
                    .map_err(|e| e.at_component("log", i))
            })
            .collect::<Result<_>>()?;
        Ok(SplineCodeTangent { components })
    }

    pub fn exp(&self, x: &SplineCodeTangent) -> Result<SplineCode> {
        let anchors: Vec<BundlePoint> = x
            .components
            .par_iter()
            .enumerate()
            .map(|(i, c)| self.sasaki.exp(c).map_err(|e| e.at_component("exp", i)))
            .collect::<Result<_>>()?;
        SplineCode::new(*self.sasaki.manifold(), anchors)
    }

    /// Geodesic distance: root of the summed squared component distances.
    pub fn dist(&self, a: &SplineCode, b: &SplineCode) -> Result<f64> {
        self.check_pair(a, b)?;
        let total: f64 = (0..a.anchors.len())
            .into_par_iter()
            .map(|i| {
                self.sasaki
                    .dist(&a.anchors[i], &b.anchors[i])
                    .map(|d| d * d)
                    .map_err(|e| e.at_component("dist", i))
            })
            .sum::<Result<f64>>()?;
        Ok(total.sqrt())
    }

    /// Frechet mean, anchor by anchor: the product metric splits the Frechet
    /// functional into independent bundle means.
    pub fn mean(&self, codes: &[SplineCode]) -> Result<SplineCode> {
        if codes.is_empty() {
            return Err(Error::EmptyInput);
        }
        let count = codes[0].anchors.len();
        for c in codes {
            if c.anchors.len() != count {
                return Err(Error::DimensionMismatch {
                    left: c.anchors.len(),
                    right: count,
                });
            }
        }
        let anchors = (0..count)
            .into_par_iter()
            .map(|i| {
                let slot: Vec<BundlePoint> = codes.iter().map(|c| c.anchors[i].clone()).collect();
                self.sasaki
                    .mean(&slot)
                    .map_err(|e| e.at_component("mean", i))
            })
            .collect::<Result<_>>()?;
        SplineCode::new(codes[0].manifold, anchors)
    }

    /// Tangent PCA at the Frechet mean. `modes` is clamped to the rank bound
    /// min(sample count - 1, manifold dimension of the spline space); modes
    /// whose eigenvalue falls under the rank cutoff are dropped and counted.
    pub fn pga(&self, codes: &[SplineCode], modes: usize) -> Result<PGAModel> {
        if codes.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: codes.len(),
                params: 0,
            });
        }
        let mean = self.mean(codes)?;
        let logs: Vec<SplineCodeTangent> = codes
            .par_iter()
            .map(|c| self.log(&mean, c))
            .collect::<Result<_>>()?;

        let n = codes.len();
        let mut gram = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in j..n {
                let g = pullback_inner(&mean, &logs[j], &logs[k])?;
                gram[j][k] = g;
                gram[k][j] = g;
            }
        }

        let space_dim =
            2 * (mean.anchors.len()) * mean.manifold.intrinsic_dim();
        let requested = modes.min(n - 1).min(space_dim);
        let pca = gram_pca(&gram, requested)?;

        let mut directions = Vec::with_capacity(pca.coefficients.len());
        for coeff in &pca.coefficients {
            let mut dir = SplineCodeTangent::zero(&mean);
            for (j, &w) in coeff.iter().enumerate() {
                dir = dir.axpy(w, &logs[j])?;
            }
            directions.push(dir);
        }

        Ok(PGAModel {
            mean,
            directions,
            variances: pca.variances,
            scores: pca.scores,
            dropped: pca.dropped,
        })
    }

    /// Sample j rebuilt from its first `modes` scores:
    /// `exp(mean, sum_m scores[j][m] * direction_m)`.
    pub fn reconstruct(&self, model: &PGAModel, sample: usize, modes: usize) -> Result<SplineCode> {
        let mut x = SplineCodeTangent::zero(&model.mean);
        for m in 0..modes.min(model.directions.len()) {
            x = x.axpy(model.scores[sample][m], &model.directions[m])?;
        }
        self.exp(&x)
    }
}
