//! Riemannian primitives for the base manifolds.
//!
//! Two manifolds live behind one dispatch point: the unit sphere S^2 in its
//! 3-dimensional embedding (the production geometry) and flat n-space (the
//! oracle that turns every curved computation into checkable arithmetic).
//! Points and tangents are stored in embedding coordinates; invariants are
//! plain vector identities, checked at construction.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Unit-norm defect tolerated when constructing points and tangents.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Threshold on `1 + <p,q>` below which two sphere points count as antipodal.
pub const ANTIPODAL_TOL: f64 = 1e-9;

/// Norm below which a tangent vector is treated as exactly zero.
const ZERO_TOL: f64 = 1e-12;

/// The base manifold: unit sphere or flat space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Manifold {
    /// Unit sphere S^2 embedded in R^3. `injectivity_guard` bounds tangent
    /// norms accepted by the exponential so constructions stay inside a
    /// normal convex neighborhood.
    Sphere2 { injectivity_guard: f64 },
    /// Flat Euclidean n-space. exp/log/transport reduce to vector arithmetic.
    Euclidean { dim: usize },
}

impl Manifold {
    /// Unit sphere with the default guard just short of pi.
    pub fn sphere() -> Self {
        Manifold::Sphere2 {
            injectivity_guard: PI - 1e-6,
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        assert!(dim > 0, "euclidean manifold needs dim >= 1");
        Manifold::Euclidean { dim }
    }

    /// Dimension of the embedding coordinates.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Sphere2 { .. } => 3,
            Manifold::Euclidean { dim } => *dim,
        }
    }

    /// Intrinsic manifold dimension.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Manifold::Sphere2 { .. } => 2,
            Manifold::Euclidean { dim } => *dim,
        }
    }

    /// Radius within which the exponential map is trusted.
    pub fn injectivity_guard(&self) -> f64 {
        match self {
            Manifold::Sphere2 { injectivity_guard } => *injectivity_guard,
            Manifold::Euclidean { .. } => f64::INFINITY,
        }
    }
}

/// A point of the manifold in embedding coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Validates the manifold constraint (unit norm on the sphere).
    pub fn new(manifold: &Manifold, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                left: coords.len(),
                right: manifold.ambient_dim(),
            });
        }
        if let Manifold::Sphere2 { .. } = manifold {
            let defect = (norm(&coords) - 1.0).abs();
            if defect > CONSTRAINT_TOL {
                return Err(Error::InvalidPoint { defect });
            }
        }
        Ok(Point { coords })
    }

    /// Builds a sphere point from arbitrary nonzero coordinates by normalizing.
    pub fn sphere_normalized(coords: [f64; 3]) -> Point {
        let mut c = coords.to_vec();
        let n = norm(&c);
        assert!(n > ZERO_TOL, "cannot normalize a zero vector");
        for x in &mut c {
            *x /= n;
        }
        Point { coords: c }
    }

    /// Builds a sphere point from latitude/longitude in radians.
    pub fn from_lat_lon(lat: f64, lon: f64) -> Point {
        Point {
            coords: vec![lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn from_coords_unchecked(coords: Vec<f64>) -> Point {
        Point { coords }
    }
}

/// A tangent vector together with its foot point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    foot: Point,
    vec: Vec<f64>,
}

impl Tangent {
    /// Validates tangency (orthogonality to the foot on the sphere).
    pub fn new(manifold: &Manifold, foot: Point, vec: Vec<f64>) -> Result<Tangent> {
        if vec.len() != manifold.ambient_dim() {
            return Err(Error::DimensionMismatch {
                left: vec.len(),
                right: manifold.ambient_dim(),
            });
        }
        if let Manifold::Sphere2 { .. } = manifold {
            let defect = dot(foot.coords(), &vec).abs();
            if defect > CONSTRAINT_TOL {
                return Err(Error::InvalidTangent { defect });
            }
        }
        Ok(Tangent { foot, vec })
    }

    /// Zero vector at `foot`.
    pub fn zero(manifold: &Manifold, foot: Point) -> Tangent {
        let dim = manifold.ambient_dim();
        Tangent {
            foot,
            vec: vec![0.0; dim],
        }
    }

    pub fn foot(&self) -> &Point {
        &self.foot
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }

    /// Component-wise linear combination `self + s * other` (same foot).
    pub fn axpy(&self, s: f64, other: &Tangent) -> Result<Tangent> {
        check_same_foot(&self.foot, &other.foot)?;
        let vec = self
            .vec
            .iter()
            .zip(&other.vec)
            .map(|(a, b)| a + s * b)
            .collect();
        Ok(Tangent {
            foot: self.foot.clone(),
            vec,
        })
    }

    pub fn scale(&self, s: f64) -> Tangent {
        Tangent {
            foot: self.foot.clone(),
            vec: self.vec.iter().map(|x| x * s).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(foot: Point, vec: Vec<f64>) -> Tangent {
        Tangent { foot, vec }
    }
}

pub(crate) fn check_same_foot(a: &Point, b: &Point) -> Result<()> {
    let offset = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max);
    if offset > 1e-9 {
        return Err(Error::FootMismatch { offset });
    }
    Ok(())
}

impl Manifold {
    /// Geodesic shooting from `p` along `v`; `exp(p, 0) = p` exactly.
    pub fn exp(&self, p: &Point, v: &Tangent) -> Result<Point> {
        check_same_foot(p, v.foot())?;
        let n = v.norm();
        let guard = self.injectivity_guard();
        if n >= guard {
            return Err(Error::OutOfInjectivityRadius { norm: n, guard });
        }
        let mut out = vec![0.0; self.ambient_dim()];
        self.exp_slice(p.coords(), v.vec(), &mut out);
        Ok(Point { coords: out })
    }

    /// Inverse of `exp`: the vector at `p` pointing to `q` with norm d(p, q).
    pub fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        let mut out = vec![0.0; self.ambient_dim()];
        self.log_slice(p.coords(), q.coords(), &mut out)?;
        Ok(Tangent {
            foot: p.clone(),
            vec: out,
        })
    }

    /// Geodesic distance. Defined for antipodal pairs as well (arc length pi).
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        self.dist_slice(p.coords(), q.coords())
    }

    /// Riemannian inner product of two tangents at `p` (embedded dot product).
    pub fn inner(&self, p: &Point, v: &Tangent, w: &Tangent) -> Result<f64> {
        check_same_foot(p, v.foot())?;
        check_same_foot(p, w.foot())?;
        Ok(dot(v.vec(), w.vec()))
    }

    /// Parallel transport of `v` from `p` to `q` along the connecting geodesic.
    pub fn parallel_transport(&self, p: &Point, q: &Point, v: &Tangent) -> Result<Tangent> {
        check_same_foot(p, v.foot())?;
        let mut out = vec![0.0; self.ambient_dim()];
        self.transport_slice(p.coords(), q.coords(), v.vec(), &mut out)?;
        Ok(Tangent {
            foot: q.clone(),
            vec: out,
        })
    }

    /// Curvature tensor R(x, y)z; constant 1 on the unit sphere, zero on flat
    /// space.
    pub fn curvature(&self, p: &Point, x: &Tangent, y: &Tangent, z: &Tangent) -> Result<Tangent> {
        check_same_foot(p, x.foot())?;
        check_same_foot(p, y.foot())?;
        check_same_foot(p, z.foot())?;
        let mut out = vec![0.0; self.ambient_dim()];
        self.curvature_slice(x.vec(), y.vec(), z.vec(), &mut out);
        Ok(Tangent {
            foot: p.clone(),
            vec: out,
        })
    }

    /// Weighted Frechet mean by fixed-point iteration on the gradient map
    /// `p <- exp(p, sum_i w_i log(p, q_i))`, seeded at the normalized
    /// Euclidean mean.
    pub fn frechet_mean(&self, points: &[Point], weights: &[f64]) -> Result<Point> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                left: points.len(),
                right: weights.len(),
            });
        }
        let dim = self.ambient_dim();
        let flat: Vec<f64> = points.iter().flat_map(|p| p.coords().to_vec()).collect();
        let mut out = vec![0.0; dim];
        self.frechet_mean_slice(&flat, weights, &mut out)?;
        Ok(Point { coords: out })
    }

    /// Orthonormal basis of the tangent space at `p`, deterministic in `p`.
    pub fn tangent_basis(&self, p: &Point) -> Vec<Tangent> {
        self.tangent_basis_slices(p.coords())
            .into_iter()
            .map(|vec| Tangent {
                foot: p.clone(),
                vec,
            })
            .collect()
    }
}

// ── Slice-level kernels ─────────────────────────────────────────────────
//
// The solvers in `tangent_bundle` and `bezier` run on flat f64 buffers; the
// typed API above validates and delegates here. Kernels assume dimensional
// agreement and (on the sphere) unit feet.

impl Manifold {
    pub(crate) fn exp_slice(&self, p: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Euclidean { .. } => {
                for i in 0..p.len() {
                    out[i] = p[i] + v[i];
                }
            }
            Manifold::Sphere2 { .. } => {
                let n = norm(v);
                if n < ZERO_TOL {
                    out.copy_from_slice(p);
                    return;
                }
                let (s, c) = n.sin_cos();
                let k = s / n;
                for i in 0..3 {
                    out[i] = c * p[i] + k * v[i];
                }
            }
        }
    }

    pub(crate) fn log_slice(&self, p: &[f64], q: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Manifold::Euclidean { .. } => {
                for i in 0..p.len() {
                    out[i] = q[i] - p[i];
                }
                Ok(())
            }
            Manifold::Sphere2 { .. } => {
                let c = clamp_unit(dot(p, q));
                let gap = 1.0 + c;
                if gap < ANTIPODAL_TOL {
                    return Err(Error::AntipodalPoints { gap });
                }
                // q - <p,q> p is tangent at p and points toward q.
                let mut perp_norm_sq = 0.0;
                for i in 0..3 {
                    out[i] = q[i] - c * p[i];
                    perp_norm_sq += out[i] * out[i];
                }
                let perp_norm = perp_norm_sq.sqrt();
                if perp_norm < ZERO_TOL {
                    // q == p up to roundoff: log is exactly zero.
                    out.iter_mut().for_each(|x| *x = 0.0);
                    return Ok(());
                }
                // atan2 instead of acos: acos(c) cannot resolve angles below
                // sqrt(eps) ~ 1e-8, while sin ~ perp_norm keeps full relative
                // accuracy near zero and near pi.
                let theta = perp_norm.atan2(c);
                let k = theta / perp_norm;
                for x in out.iter_mut() {
                    *x *= k;
                }
                Ok(())
            }
        }
    }

    pub(crate) fn dist_slice(&self, p: &[f64], q: &[f64]) -> f64 {
        match self {
            Manifold::Euclidean { .. } => p
                .iter()
                .zip(q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            // atan2 of the cross and dot products stays fully accurate at
            // both ends of [0, pi], unlike acos which loses half the digits
            // whenever |<p,q>| is near 1.
            Manifold::Sphere2 { .. } => {
                let cx = p[1] * q[2] - p[2] * q[1];
                let cy = p[2] * q[0] - p[0] * q[2];
                let cz = p[0] * q[1] - p[1] * q[0];
                let sin = (cx * cx + cy * cy + cz * cz).sqrt();
                sin.atan2(dot(p, q))
            }
        }
    }

    /// Transport along the connecting geodesic. The component orthogonal to
    /// the great circle through p and q is untouched; the in-circle component
    /// rotates with the geodesic direction.
    pub(crate) fn transport_slice(
        &self,
        p: &[f64],
        q: &[f64],
        v: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        match self {
            Manifold::Euclidean { .. } => {
                out.copy_from_slice(v);
                Ok(())
            }
            Manifold::Sphere2 { .. } => {
                let mut lg = [0.0; 3];
                self.log_slice(p, q, &mut lg)?;
                let d = norm(&lg);
                if d < ZERO_TOL {
                    out.copy_from_slice(v);
                    return Ok(());
                }
                let e = [lg[0] / d, lg[1] / d, lg[2] / d];
                let a = dot(&e, v);
                let (s, c) = d.sin_cos();
                // Direction of the geodesic on arrival at q.
                for i in 0..3 {
                    let e_arr = c * e[i] - s * p[i];
                    out[i] = v[i] - a * e[i] + a * e_arr;
                }
                Ok(())
            }
        }
    }

    /// Transport of `u` from `p` along the geodesic generated by the tangent
    /// `v` at `p` (i.e. to exp_p(v)). Equivalent to `transport_slice` toward
    /// that endpoint but stable for arbitrarily small `v`, where recovering
    /// the direction from a log would cancel catastrophically.
    pub(crate) fn transport_along_slice(&self, p: &[f64], v: &[f64], u: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Euclidean { .. } => out.copy_from_slice(u),
            Manifold::Sphere2 { .. } => {
                let d = norm(v);
                if d < ZERO_TOL {
                    out.copy_from_slice(u);
                    return;
                }
                let e = [v[0] / d, v[1] / d, v[2] / d];
                let a = dot(&e, u);
                let (s, c) = d.sin_cos();
                for i in 0..3 {
                    out[i] = u[i] - a * e[i] + a * (c * e[i] - s * p[i]);
                }
            }
        }
    }

    /// R(x, y)z in embedding coordinates.
    pub(crate) fn curvature_slice(&self, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Euclidean { .. } => out.iter_mut().for_each(|o| *o = 0.0),
            Manifold::Sphere2 { .. } => {
                let yz = dot(y, z);
                let xz = dot(x, z);
                for i in 0..3 {
                    out[i] = yz * x[i] - xz * y[i];
                }
            }
        }
    }

    /// Re-projects `p` onto the manifold in place; returns the correction size.
    pub(crate) fn project_point_slice(&self, p: &mut [f64]) -> f64 {
        match self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Sphere2 { .. } => {
                let n = norm(p);
                for x in p.iter_mut() {
                    *x /= n;
                }
                (n - 1.0).abs()
            }
        }
    }

    /// Removes the normal component of `v` at `p` in place; returns its size.
    pub(crate) fn project_tangent_slice(&self, p: &[f64], v: &mut [f64]) -> f64 {
        match self {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Sphere2 { .. } => {
                let a = dot(p, v);
                for i in 0..3 {
                    v[i] -= a * p[i];
                }
                a.abs()
            }
        }
    }

    pub(crate) fn frechet_mean_slice(
        &self,
        points: &[f64],
        weights: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let dim = self.ambient_dim();
        let n = weights.len();
        debug_assert_eq!(points.len(), n * dim);

        // Seed: (normalized) Euclidean mean.
        let mut mean = vec![0.0; dim];
        for (j, w) in weights.iter().enumerate() {
            for i in 0..dim {
                mean[i] += w * points[j * dim + i];
            }
        }
        if let Manifold::Sphere2 { .. } = self {
            let nn = norm(&mean);
            if nn < ZERO_TOL {
                // Weighted centroid at the origin: points spread over more
                // than a hemisphere.
                return Err(Error::SpreadTooLarge { max_dist: PI });
            }
            for x in mean.iter_mut() {
                *x /= nn;
            }
            let max_dist = (0..n)
                .map(|j| self.dist_slice(&mean, &points[j * dim..(j + 1) * dim]))
                .fold(0.0_f64, f64::max);
            if max_dist >= PI / 2.0 {
                return Err(Error::SpreadTooLarge { max_dist });
            }
        }

        let mut grad = vec![0.0; dim];
        let mut lg = vec![0.0; dim];
        let mut residual = f64::INFINITY;
        for _ in 0..200 {
            grad.iter_mut().for_each(|x| *x = 0.0);
            for (j, w) in weights.iter().enumerate() {
                self.log_slice(&mean, &points[j * dim..(j + 1) * dim], &mut lg)?;
                for i in 0..dim {
                    grad[i] += w * lg[i];
                }
            }
            residual = norm(&grad);
            if residual < 1e-10 {
                out.copy_from_slice(&mean);
                return Ok(());
            }
            let mut next = vec![0.0; dim];
            self.exp_slice(&mean, &grad, &mut next);
            mean = next;
        }
        Err(Error::NoConvergence {
            iterations: 200,
            residual,
        })
    }

    /// Orthonormal tangent basis at `p`, written as `intrinsic_dim` rows of
    /// `ambient_dim` into `out`.
    pub(crate) fn tangent_basis_into(&self, p: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Euclidean { dim } => {
                out.iter_mut().for_each(|x| *x = 0.0);
                for i in 0..*dim {
                    out[i * dim + i] = 1.0;
                }
            }
            Manifold::Sphere2 { .. } => {
                // Start from the coordinate axis least aligned with p.
                let mut axis = [0.0; 3];
                let k = (0..3)
                    .min_by(|&a, &b| p[a].abs().partial_cmp(&p[b].abs()).unwrap())
                    .unwrap();
                axis[k] = 1.0;
                let a = dot(&axis, p);
                let (b1, b2) = out.split_at_mut(3);
                for i in 0..3 {
                    b1[i] = axis[i] - a * p[i];
                }
                let n1 = norm(b1);
                for x in b1.iter_mut() {
                    *x /= n1;
                }
                b2[0] = p[1] * b1[2] - p[2] * b1[1];
                b2[1] = p[2] * b1[0] - p[0] * b1[2];
                b2[2] = p[0] * b1[1] - p[1] * b1[0];
            }
        }
    }

    /// Orthonormal tangent basis vectors at `p` as raw coordinate vectors.
    pub(crate) fn tangent_basis_slices(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let (n, d) = (self.intrinsic_dim(), self.ambient_dim());
        let mut buf = vec![0.0; n * d];
        self.tangent_basis_into(p, &mut buf);
        buf.chunks(d).map(|c| c.to_vec()).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_sphere_point, random_tangent};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn vec_approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| approx(*x, *y, tol))
    }

    #[test]
    fn exp_zero_is_identity() {
        let m = Manifold::sphere();
        let p = Point::sphere_normalized([0.3, -0.5, 0.8]);
        let q = m.exp(&p, &Tangent::zero(&m, p.clone())).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn exp_quarter_circle() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let v = Tangent::new(&m, p.clone(), vec![0.0, PI / 2.0, 0.0]).unwrap();
        let q = m.exp(&p, &v).unwrap();
        assert!(vec_approx(q.coords(), &[0.0, 1.0, 0.0], 1e-15));
    }

    #[test]
    fn exp_semigroup_property() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![0.0, 0.0, 1.0]).unwrap();
        let half = Tangent::new(&m, p.clone(), vec![PI / 4.0, 0.0, 0.0]).unwrap();
        let q1 = m.exp(&p, &half).unwrap();
        // Continue along the transported direction for the second half.
        let t = m.parallel_transport(&p, &q1, &half).unwrap();
        let q2 = m.exp(&q1, &t).unwrap();
        let full = Tangent::new(&m, p.clone(), vec![PI / 2.0, 0.0, 0.0]).unwrap();
        let direct = m.exp(&p, &full).unwrap();
        assert!(vec_approx(q2.coords(), direct.coords(), 1e-12));
    }

    #[test]
    fn log_recovers_quarter_circle() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let q = Point::new(&m, vec![0.0, 1.0, 0.0]).unwrap();
        let v = m.log(&p, &q).unwrap();
        assert!(vec_approx(v.vec(), &[0.0, PI / 2.0, 0.0], 1e-15));
    }

    #[test]
    fn log_of_same_point_is_zero() {
        let m = Manifold::sphere();
        let p = Point::sphere_normalized([0.2, 0.9, -0.1]);
        let v = m.log(&p, &p).unwrap();
        assert_eq!(v.vec(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn log_norm_matches_embedded_angle() {
        let m = Manifold::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = random_sphere_point(&mut rng);
            let q = random_sphere_point(&mut rng);
            if 1.0 + dot(p.coords(), q.coords()) < 1e-6 {
                continue;
            }
            let v = m.log(&p, &q).unwrap();
            let angle = clamp_unit(dot(p.coords(), q.coords())).acos();
            assert!(approx(v.norm(), angle, 1e-12));
        }
    }

    #[test]
    fn log_rejects_antipodal() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let q = Point::new(&m, vec![-1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.log(&p, &q), Err(Error::AntipodalPoints { .. })));
        // dist is still defined via the embedded angle.
        assert!(approx(m.dist(&p, &q), PI, 1e-15));
    }

    #[test]
    fn exp_rejects_guard_violation() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let v = Tangent::new(&m, p.clone(), vec![0.0, 4.0, 0.0]).unwrap();
        assert!(matches!(
            m.exp(&p, &v),
            Err(Error::OutOfInjectivityRadius { .. })
        ));
    }

    #[test]
    fn inner_of_vector_with_itself() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![0.0, 0.0, 1.0]).unwrap();
        let v = Tangent::new(&m, p.clone(), vec![0.3, -0.4, 0.0]).unwrap();
        assert!(approx(m.inner(&p, &v, &v).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn foot_mismatch_detected() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let q = Point::new(&m, vec![0.0, 1.0, 0.0]).unwrap();
        let v = Tangent::new(&m, q, vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(m.exp(&p, &v), Err(Error::FootMismatch { .. })));
    }

    #[test]
    fn transport_to_same_point_is_identity() {
        let m = Manifold::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_sphere_point(&mut rng);
        let v = random_tangent(&mut rng, &p, 1.0);
        let w = m.parallel_transport(&p, &p, &v).unwrap();
        assert!(vec_approx(w.vec(), v.vec(), 1e-15));
    }

    #[test]
    fn transport_fixes_polar_component_on_equator() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let q = Point::new(&m, vec![0.0, 1.0, 0.0]).unwrap();
        let a = 0.37;
        let v = Tangent::new(&m, p.clone(), vec![0.0, 0.0, a]).unwrap();
        let w = m.parallel_transport(&p, &q, &v).unwrap();
        assert!(vec_approx(w.vec(), &[0.0, 0.0, a], 1e-15));
    }

    /// Transport checked against direct integration of the transport ODE
    /// u' = -<u, gamma'> gamma along the geodesic (embedded form).
    #[test]
    fn transport_matches_ode_integration() {
        let m = Manifold::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = random_sphere_point(&mut rng);
            let q = random_sphere_point(&mut rng);
            if 1.0 + dot(p.coords(), q.coords()) < 1e-3 {
                continue;
            }
            let v = random_tangent(&mut rng, &p, 1.0);
            let direct = m.parallel_transport(&p, &q, &v).unwrap();

            let lg = m.log(&p, &q).unwrap();
            let d = lg.norm();
            let e: Vec<f64> = lg.vec().iter().map(|x| x / d).collect();
            // gamma and gamma' in closed form at parameter t.
            let rhs = |t: f64, u: &[f64]| -> Vec<f64> {
                let (sn, cs) = (t * d).sin_cos();
                let gamma: Vec<f64> = (0..3).map(|i| cs * p.coords()[i] + sn * e[i]).collect();
                let dgamma: Vec<f64> = (0..3)
                    .map(|i| d * (-sn * p.coords()[i] + cs * e[i]))
                    .collect();
                let a = dot(u, &dgamma);
                (0..3).map(|i| -a * gamma[i]).collect()
            };
            let steps = 2000;
            let h = 1.0 / steps as f64;
            let mut u = v.vec().to_vec();
            for s in 0..steps {
                let t = s as f64 * h;
                let k1 = rhs(t, &u);
                let u2: Vec<f64> = (0..3).map(|i| u[i] + 0.5 * h * k1[i]).collect();
                let k2 = rhs(t + 0.5 * h, &u2);
                let u3: Vec<f64> = (0..3).map(|i| u[i] + 0.5 * h * k2[i]).collect();
                let k3 = rhs(t + 0.5 * h, &u3);
                let u4: Vec<f64> = (0..3).map(|i| u[i] + h * k3[i]).collect();
                let k4 = rhs(t + h, &u4);
                for i in 0..3 {
                    u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            assert!(
                vec_approx(&u, direct.vec(), 1e-9),
                "ODE transport {u:?} vs closed form {:?}",
                direct.vec()
            );
        }
    }

    #[test]
    fn curvature_antisymmetry_and_flatness() {
        let m = Manifold::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_sphere_point(&mut rng);
        let x = random_tangent(&mut rng, &p, 1.0);
        let z = random_tangent(&mut rng, &p, 1.0);
        let r = m.curvature(&p, &x, &x, &z).unwrap();
        assert!(r.norm() < 1e-15);

        let e = Manifold::euclidean(4);
        let pe = Point::new(&e, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let xe = Tangent::new(&e, pe.clone(), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let ye = Tangent::new(&e, pe.clone(), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let re = e.curvature(&pe, &xe, &ye, &xe).unwrap();
        assert!(re.norm() == 0.0);
    }

    #[test]
    fn curvature_skew_symmetry_in_last_slots() {
        let m = Manifold::sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let p = random_sphere_point(&mut rng);
            let x = random_tangent(&mut rng, &p, 1.0);
            let y = random_tangent(&mut rng, &p, 1.0);
            let z = random_tangent(&mut rng, &p, 1.0);
            let w = random_tangent(&mut rng, &p, 1.0);
            let rz = m.curvature(&p, &x, &y, &z).unwrap();
            let rw = m.curvature(&p, &x, &y, &w).unwrap();
            let s = m.inner(&p, &rz, &w).unwrap() + m.inner(&p, &rw, &z).unwrap();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn frechet_mean_of_single_point() {
        let m = Manifold::sphere();
        let p = Point::sphere_normalized([0.1, 0.5, 0.8]);
        let mean = m.frechet_mean(std::slice::from_ref(&p), &[1.0]).unwrap();
        assert!(vec_approx(mean.coords(), p.coords(), 1e-12));
    }

    #[test]
    fn frechet_mean_of_two_points_is_midpoint() {
        let m = Manifold::sphere();
        let p = Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap();
        let q = Point::new(&m, vec![0.0, 1.0, 0.0]).unwrap();
        let mean = m.frechet_mean(&[p.clone(), q.clone()], &[0.5, 0.5]).unwrap();
        let mid = m
            .exp(&p, &m.log(&p, &q).unwrap().scale(0.5))
            .unwrap();
        assert!(vec_approx(mean.coords(), mid.coords(), 1e-10));
    }

    /// Three points at equal latitude, symmetric around the pole: the mean is
    /// the pole. Verified through the gradient norm at the pole as well.
    #[test]
    fn frechet_mean_symmetric_configuration() {
        let m = Manifold::sphere();
        let lat: f64 = 0.9;
        let pts: Vec<Point> = (0..3)
            .map(|k| {
                let lon = 2.0 * PI * k as f64 / 3.0;
                Point::from_lat_lon(lat, lon)
            })
            .collect();
        let w = [1.0 / 3.0; 3];
        let mean = m.frechet_mean(&pts, &w).unwrap();
        let pole = Point::new(&m, vec![0.0, 0.0, 1.0]).unwrap();
        assert!(vec_approx(mean.coords(), pole.coords(), 1e-9));
        // Gradient at the pole vanishes by symmetry.
        let mut grad = vec![0.0; 3];
        for p in &pts {
            let lg = m.log(&pole, p).unwrap();
            for i in 0..3 {
                grad[i] += lg.vec()[i] / 3.0;
            }
        }
        assert!(norm(&grad) < 1e-15);
    }

    #[test]
    fn euclidean_ops_are_plain_arithmetic() {
        let m = Manifold::euclidean(3);
        let p = Point::new(&m, vec![1.0, 2.0, 3.0]).unwrap();
        let q = Point::new(&m, vec![-1.0, 0.5, 2.0]).unwrap();
        let v = Tangent::new(&m, p.clone(), vec![0.25, -0.5, 4.0]).unwrap();
        let e = m.exp(&p, &v).unwrap();
        assert_eq!(e.coords(), &[1.25, 1.5, 7.0]);
        let lg = m.log(&p, &q).unwrap();
        assert_eq!(lg.vec(), &[-2.0, -1.5, -1.0]);
        let t = m.parallel_transport(&p, &q, &v).unwrap();
        assert_eq!(t.vec(), v.vec());
        let mean = m
            .frechet_mean(&[p.clone(), q.clone()], &[0.5, 0.5])
            .unwrap();
        assert_eq!(mean.coords(), &[0.0, 1.25, 2.5]);
    }

    #[test]
    fn point_constructor_rejects_off_sphere() {
        let m = Manifold::sphere();
        assert!(matches!(
            Point::new(&m, vec![1.0, 1.0, 0.0]),
            Err(Error::InvalidPoint { .. })
        ));
        assert!(matches!(
            Tangent::new(
                &m,
                Point::new(&m, vec![1.0, 0.0, 0.0]).unwrap(),
                vec![0.5, 1.0, 0.0]
            ),
            Err(Error::InvalidTangent { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn sphere_point_strategy() -> impl Strategy<Value = Point> {
            (
                -1.0..1.0_f64,
                -1.0..1.0_f64,
                -1.0..1.0_f64,
            )
                .prop_filter("away from origin", |(a, b, c)| {
                    (a * a + b * b + c * c) > 0.01
                })
                .prop_map(|(a, b, c)| Point::sphere_normalized([a, b, c]))
        }

        proptest! {
            #[test]
            fn exp_log_round_trip(p in sphere_point_strategy(),
                                  a in -3.0..3.0_f64, b in -3.0..3.0_f64) {
                let m = Manifold::sphere();
                let basis = m.tangent_basis(&p);
                let v = basis[0].scale(a).axpy(1.0, &basis[1].scale(b)).unwrap();
                prop_assume!(v.norm() < 3.0);
                let q = m.exp(&p, &v).unwrap();
                let w = m.log(&p, &q).unwrap();
                let diff = w.axpy(-1.0, &v).unwrap();
                prop_assert!(diff.norm() < 1e-9, "round trip error {}", diff.norm());
            }

            #[test]
            fn metric_axioms(p in sphere_point_strategy(),
                             q in sphere_point_strategy(),
                             r in sphere_point_strategy()) {
                let m = Manifold::sphere();
                let dpq = m.dist(&p, &q);
                let dqp = m.dist(&q, &p);
                prop_assert!((dpq - dqp).abs() < 1e-12);
                prop_assert!(dpq >= 0.0);
                prop_assert!(m.dist(&p, &r) <= dpq + m.dist(&q, &r) + 1e-12);
            }

            #[test]
            fn transport_preserves_inner_products(p in sphere_point_strategy(),
                                                  q in sphere_point_strategy(),
                                                  a in -2.0..2.0_f64, b in -2.0..2.0_f64,
                                                  c in -2.0..2.0_f64, d in -2.0..2.0_f64) {
                let m = Manifold::sphere();
                prop_assume!(1.0 + dot(p.coords(), q.coords()) > 1e-3);
                let basis = m.tangent_basis(&p);
                let v = basis[0].scale(a).axpy(1.0, &basis[1].scale(b)).unwrap();
                let w = basis[0].scale(c).axpy(1.0, &basis[1].scale(d)).unwrap();
                let pv = m.parallel_transport(&p, &q, &v).unwrap();
                let pw = m.parallel_transport(&p, &q, &w).unwrap();
                let before = m.inner(&p, &v, &w).unwrap();
                let after = m.inner(&q, &pv, &pw).unwrap();
                prop_assert!((before - after).abs() < 1e-10);
            }
        }
    }
}
