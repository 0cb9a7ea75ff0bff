//! Manifold-valued cubic Bezier splines: De Casteljau evaluation, endpoint
//! velocities, least-squares regression over the C1 family, and the geometric
//! R^2 statistic.
//!
//! A spline with L segments stores 3L + 1 control points with joins shared,
//! so positional continuity is exact by construction. Regression does not
//! touch raw control points: it optimizes the anchor representation (one
//! foot point and one velocity third per join), under which the C1 condition
//! is automatic.

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, Tangent};

/// Largest C1 join defect tolerated when validating control points.
pub const C1_TOL: f64 = 1e-9;

/// Regression stops when the Riemannian gradient norm falls below this.
pub const FIT_GRAD_TOL: f64 = 1e-7;

const FIT_MAX_ITERS: usize = 1000;

/// Central-difference step for regression gradients, taken in orthonormal
/// tangent coordinates of each free parameter.
const FIT_FD_STEP: f64 = 1e-6;

/// Armijo sufficient-decrease constant for the line search.
const ARMIJO_C: f64 = 1e-4;

/// Objective comparisons tighter than this many ulps are below f64
/// resolution; the line search accepts steps inside the band once the
/// required Armijo decrease itself falls under it.
const NOISE_BAND_ULPS: f64 = 256.0;

/// Time step for the finite-difference velocities of the initial interpolant.
const INIT_VELOCITY_STEP: f64 = 1e-3;

/// A C1 cubic Bezier spline on a manifold.
///
/// Control point j of segment i is `points[3i + j]`; `points[3i + 3]` is
/// shared with segment i + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    manifold: Manifold,
    points: Vec<Point>,
}

/// Which end of which segment a velocity is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentEnd {
    Start(usize),
    End(usize),
}

impl CubicSpline {
    /// Validates the control net: 3L + 1 points, pairwise non-antipodal
    /// within each segment, and C1 joins within [`C1_TOL`].
    pub fn new(manifold: Manifold, points: Vec<Point>) -> Result<CubicSpline> {
        let len = points.len();
        if len < 4 || (len - 1) % 3 != 0 {
            return Err(Error::InvalidControlCount { got: len });
        }
        let d = manifold.ambient_dim();
        for p in &points {
            if p.coords().len() != d {
                return Err(Error::DimensionMismatch {
                    left: p.coords().len(),
                    right: d,
                });
            }
        }
        let l = (len - 1) / 3;
        for i in 0..l {
            let seg = &points[3 * i..3 * i + 4];
            for a in 0..4 {
                for b in a + 1..4 {
                    manifold.log(&seg[a], &seg[b])?;
                }
            }
        }
        // C1 at join i: extending the geodesic through (p2, p3) of segment
        // i-1 by one more step must land on p1 of segment i.
        for i in 1..l {
            let p2 = &points[3 * i - 1];
            let p3 = &points[3 * i];
            let next_p1 = &points[3 * i + 1];
            let v = manifold.log(p2, p3)?;
            let extended = manifold.exp(p2, &v.scale(2.0))?;
            let defect = manifold.dist(&extended, next_p1);
            if defect > C1_TOL {
                return Err(Error::C1Violation { join: i, defect });
            }
        }
        Ok(CubicSpline { manifold, points })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn segments(&self) -> usize {
        (self.points.len() - 1) / 3
    }

    /// All control points, joins stored once.
    pub fn control_points(&self) -> &[Point] {
        &self.points
    }

    /// The four control points of segment `i`. Panics if out of range.
    pub fn segment_controls(&self, i: usize) -> &[Point] {
        &self.points[3 * i..3 * i + 4]
    }

    /// Spline value at `t` in `[0, L]`: segment floor(t) evaluated at the
    /// fractional part, last segment closed at t = L.
    pub fn eval(&self, t: f64) -> Result<Point> {
        let l = self.segments();
        if !(0.0..=l as f64).contains(&t) {
            return Err(Error::ParameterOutOfRange { t, max: l as f64 });
        }
        let i = (t.floor() as usize).min(l - 1);
        decasteljau(&self.manifold, self.segment_controls(i), t - i as f64)
    }

    /// Velocity at a segment end: 3 log_{p0} p1 at the start, -3 log_{p3} p2
    /// at the end. C1 splines agree across joins.
    pub fn endpoint_velocity(&self, end: SegmentEnd) -> Result<Tangent> {
        let l = self.segments();
        let (i, scale, from, to) = match end {
            SegmentEnd::Start(i) => (i, 3.0, 0, 1),
            SegmentEnd::End(i) => (i, -3.0, 3, 2),
        };
        if i >= l {
            return Err(Error::ParameterOutOfRange {
                t: i as f64,
                max: (l - 1) as f64,
            });
        }
        let seg = self.segment_controls(i);
        Ok(self.manifold.log(&seg[from], &seg[to])?.scale(scale))
    }

    /// Splits every segment at its parametric midpoint, doubling L while
    /// reproducing the spline's anchors. The C1 property survives exactly:
    /// the new interior joins are geodesic midpoints of the last pyramid
    /// level, so the flanking controls are collinear with them.
    pub fn subdivide(&self) -> Result<CubicSpline> {
        let m = &self.manifold;
        let mid = |a: &Point, b: &Point| -> Result<Point> {
            let v = m.log(a, b)?;
            m.exp(a, &v.scale(0.5))
        };
        let mut out = Vec::with_capacity(6 * self.segments() + 1);
        out.push(self.points[0].clone());
        for i in 0..self.segments() {
            let c = self.segment_controls(i);
            let m01 = mid(&c[0], &c[1])?;
            let m12 = mid(&c[1], &c[2])?;
            let m23 = mid(&c[2], &c[3])?;
            let m012 = mid(&m01, &m12)?;
            let m123 = mid(&m12, &m23)?;
            let center = mid(&m012, &m123)?;
            out.extend([m01, m012, center, m123, m23, c[3].clone()]);
        }
        CubicSpline::new(self.manifold, out)
    }
}

/// Geodesic generalization of the De Casteljau pyramid: each level replaces
/// consecutive points by `gamma(t)` of their connecting geodesic. Endpoint
/// interpolation is exact because `t = 0` and `t = 1` short-circuit.
pub fn decasteljau(manifold: &Manifold, controls: &[Point], t: f64) -> Result<Point> {
    if controls.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterOutOfRange { t, max: 1.0 });
    }
    let d = manifold.ambient_dim();
    for p in controls {
        if p.coords().len() != d {
            return Err(Error::DimensionMismatch {
                left: p.coords().len(),
                right: d,
            });
        }
    }
    let mut pyramid: Vec<f64> = controls.iter().flat_map(|p| p.coords().to_vec()).collect();
    let mut tmp_v = vec![0.0; d];
    let mut tmp_p = vec![0.0; d];
    decasteljau_in_place(manifold, &mut pyramid, controls.len(), t, &mut tmp_v, &mut tmp_p)?;
    // No final re-projection: the pyramid is built from exact exponentials,
    // and t = 0 or 1 must return the control points bit for bit.
    pyramid.truncate(d);
    Ok(Point::from_coords_unchecked(pyramid))
}

/// `out = gamma(t; a, b)` with exact endpoints.
fn geodesic_slice(
    manifold: &Manifold,
    a: &[f64],
    b: &[f64],
    t: f64,
    tmp: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    if t == 0.0 {
        out.copy_from_slice(a);
        return Ok(());
    }
    if t == 1.0 {
        out.copy_from_slice(b);
        return Ok(());
    }
    manifold.log_slice(a, b, tmp)?;
    tmp.iter_mut().for_each(|x| *x *= t);
    manifold.exp_slice(a, tmp, out);
    Ok(())
}

/// Runs the pyramid destructively on `count` points packed in `pyramid`;
/// the result lands in the first ambient-dim slot.
fn decasteljau_in_place(
    manifold: &Manifold,
    pyramid: &mut [f64],
    count: usize,
    t: f64,
    tmp_v: &mut [f64],
    tmp_p: &mut [f64],
) -> Result<()> {
    let d = manifold.ambient_dim();
    for remaining in (2..=count).rev() {
        for i in 0..remaining - 1 {
            {
                let (head, tail) = pyramid.split_at(i * d + d);
                let a = &head[i * d..];
                let b = &tail[..d];
                geodesic_slice(manifold, a, b, t, tmp_v, tmp_p)?;
            }
            pyramid[i * d..(i + 1) * d].copy_from_slice(tmp_p);
        }
    }
    Ok(())
}

// ── Anchor representation ───────────────────────────────────────────────
//
// A C1 spline with L segments is coordinatized by L + 1 anchors (p_i, u_i):
// p_i is the join point B(i) and u_i is one third of the velocity there.
// Controls of segment i are (p_i, exp(u_i), exp(-u_{i+1}), p_{i+1}). Flat
// buffers pack anchors as [p_0, u_0, p_1, u_1, ...], ambient coordinates.

/// Expands anchors into the 3L + 1 control points, packed flat.
pub(crate) fn anchors_to_controls_flat(
    manifold: &Manifold,
    anchors: &[f64],
    segments: usize,
    out: &mut [f64],
    tmp: &mut [f64],
) -> Result<()> {
    let d = manifold.ambient_dim();
    let guard = manifold.injectivity_guard();
    for i in 0..=segments {
        let u = &anchors[i * 2 * d + d..(i + 1) * 2 * d];
        let n = crate::manifold::norm(u);
        if n >= guard {
            return Err(Error::OutOfInjectivityRadius { norm: n, guard });
        }
    }
    for i in 0..segments {
        let p = &anchors[i * 2 * d..i * 2 * d + d];
        let u = &anchors[i * 2 * d + d..(i + 1) * 2 * d];
        let pn = &anchors[(i + 1) * 2 * d..(i + 1) * 2 * d + d];
        let un = &anchors[(i + 1) * 2 * d + d..(i + 2) * 2 * d];
        out[3 * i * d..3 * i * d + d].copy_from_slice(p);
        manifold.exp_slice(p, u, &mut out[(3 * i + 1) * d..(3 * i + 2) * d]);
        for (dst, x) in tmp.iter_mut().zip(un) {
            *dst = -x;
        }
        manifold.exp_slice(pn, tmp, &mut out[(3 * i + 2) * d..(3 * i + 3) * d]);
    }
    let last = &anchors[segments * 2 * d..segments * 2 * d + d];
    out[3 * segments * d..].copy_from_slice(last);
    Ok(())
}

/// Reads the anchors back off a spline's control points.
pub(crate) fn spline_to_anchor_flat(spline: &CubicSpline) -> Result<Vec<f64>> {
    let m = spline.manifold;
    let d = m.ambient_dim();
    let l = spline.segments();
    let mut flat = vec![0.0; (l + 1) * 2 * d];
    for i in 0..=l {
        let p = &spline.points[3 * i];
        let u = if i < l {
            m.log(p, &spline.points[3 * i + 1])?
        } else {
            m.log(p, &spline.points[3 * i - 1])?.scale(-1.0)
        };
        flat[i * 2 * d..i * 2 * d + d].copy_from_slice(p.coords());
        flat[i * 2 * d + d..(i + 1) * 2 * d].copy_from_slice(u.vec());
    }
    Ok(flat)
}

pub(crate) fn controls_flat_to_spline(
    manifold: Manifold,
    controls: &[f64],
    segments: usize,
) -> Result<CubicSpline> {
    let d = manifold.ambient_dim();
    let points = (0..=3 * segments)
        .map(|j| {
            let mut coords = controls[j * d..(j + 1) * d].to_vec();
            manifold.project_point_slice(&mut coords);
            Point::from_coords_unchecked(coords)
        })
        .collect();
    CubicSpline::new(manifold, points)
}

// ── Timed samples ───────────────────────────────────────────────────────

/// Regression input: strictly increasing times over `[0, L]` with one
/// manifold point each; `times[0] = 0` and the last time names L.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSamples {
    manifold: Manifold,
    times: Vec<f64>,
    points: Vec<Point>,
}

impl TimedSamples {
    pub fn new(manifold: Manifold, times: Vec<f64>, points: Vec<Point>) -> Result<TimedSamples> {
        if times.len() != points.len() {
            return Err(Error::DimensionMismatch {
                left: times.len(),
                right: points.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: times.len(),
                params: 0,
            });
        }
        for p in &points {
            Point::new(&manifold, p.coords().to_vec())?;
        }
        if times[0] != 0.0 {
            return Err(Error::ParameterOutOfRange {
                t: times[0],
                max: 0.0,
            });
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(Error::NonMonotoneTimes { index: i });
            }
        }
        Ok(TimedSamples {
            manifold,
            times,
            points,
        })
    }

    /// Builds samples from raw non-decreasing timestamps: repeated times keep
    /// their first point and are dropped (count returned), the rest map
    /// affinely onto `[0, segments]`.
    pub fn from_unnormalized(
        manifold: Manifold,
        raw_times: &[f64],
        points: &[Point],
        segments: usize,
    ) -> Result<(TimedSamples, usize)> {
        assert!(segments >= 1, "a spline has at least one segment");
        if raw_times.len() != points.len() {
            return Err(Error::DimensionMismatch {
                left: raw_times.len(),
                right: points.len(),
            });
        }
        let mut kept_times: Vec<f64> = Vec::with_capacity(raw_times.len());
        let mut kept_points: Vec<Point> = Vec::with_capacity(points.len());
        for (i, (&t, p)) in raw_times.iter().zip(points).enumerate() {
            match kept_times.last() {
                Some(&prev) if t == prev => continue,
                Some(&prev) if !(t > prev) => return Err(Error::NonMonotoneTimes { index: i }),
                _ if !t.is_finite() => return Err(Error::NonMonotoneTimes { index: i }),
                _ => {
                    kept_times.push(t);
                    kept_points.push(p.clone());
                }
            }
        }
        let dropped = raw_times.len() - kept_times.len();
        if kept_times.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: kept_times.len(),
                params: 0,
            });
        }
        let first = kept_times[0];
        let span = kept_times[kept_times.len() - 1] - first;
        let l = segments as f64;
        for t in kept_times.iter_mut() {
            *t = l * (*t - first) / span;
        }
        kept_times[0] = 0.0;
        *kept_times.last_mut().expect("nonempty") = l;
        Ok((
            TimedSamples::new(manifold, kept_times, kept_points)?,
            dropped,
        ))
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

// ── Regression ──────────────────────────────────────────────────────────

/// What the fit did: per-accepted-iterate objectives, the final gradient
/// norm, and whether the gradient tolerance was reached within the budget.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
    pub objectives: Vec<f64>,
    pub converged: bool,
}

/// Least-squares spline fit: minimizes the mean squared geodesic distance
/// of the samples to the curve over the anchor coordinates. Initialization
/// evaluates the piecewise-geodesic interpolant of the data at integer
/// times; velocities come from finite differences of that interpolant.
/// A failure to reach the gradient tolerance is reported, not an error.
pub fn fit_spline(data: &TimedSamples, segments: usize) -> Result<(CubicSpline, FitReport)> {
    let anchors = init_anchors(data, segments)?;
    run_fit(data, segments, anchors)
}

/// Same minimization started from an existing spline, e.g. a subdivided
/// coarser fit. The seed must already have the requested segment count.
pub fn fit_spline_seeded(
    data: &TimedSamples,
    segments: usize,
    seed: &CubicSpline,
) -> Result<(CubicSpline, FitReport)> {
    if seed.segments() != segments {
        return Err(Error::DimensionMismatch {
            left: seed.segments(),
            right: segments,
        });
    }
    if seed.manifold != data.manifold {
        return Err(Error::DimensionMismatch {
            left: seed.manifold.ambient_dim(),
            right: data.manifold.ambient_dim(),
        });
    }
    let anchors = spline_to_anchor_flat(seed)?;
    run_fit(data, segments, anchors)
}

/// Coefficient of determination: one minus mean squared distance to the
/// curve over mean squared distance to the Frechet mean. At most 1; negative
/// when the curve explains less than the mean does.
pub fn r_squared(spline: &CubicSpline, data: &TimedSamples) -> Result<f64> {
    if spline.manifold != data.manifold {
        return Err(Error::DimensionMismatch {
            left: spline.manifold.ambient_dim(),
            right: data.manifold.ambient_dim(),
        });
    }
    let n = data.len() as f64;
    if data.points.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::DegenerateData);
    }
    let mut unexplained = 0.0;
    for (t, q) in data.times.iter().zip(&data.points) {
        unexplained += spline.manifold.dist(&spline.eval(*t)?, q).powi(2);
    }
    unexplained /= n;
    let weights = vec![1.0 / n; data.len()];
    let mean = spline.manifold.frechet_mean(&data.points, &weights)?;
    let total: f64 = data
        .points
        .iter()
        .map(|q| spline.manifold.dist(&mean, q).powi(2))
        .sum::<f64>()
        / n;
    if total == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(1.0 - unexplained / total)
}

/// Piecewise-geodesic interpolant of the samples, evaluated at `t`.
fn interpolant_at(data: &TimedSamples, t: f64, tmp: &mut [f64], out: &mut [f64]) -> Result<()> {
    let times = &data.times;
    let n = times.len();
    let j = match times.partial_cmp_search(t) {
        Ok(j) => j.min(n - 2),
        Err(k) => k.saturating_sub(1).min(n - 2),
    };
    let s = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
    geodesic_slice(
        &data.manifold,
        data.points[j].coords(),
        data.points[j + 1].coords(),
        s,
        tmp,
        out,
    )
}

trait TimeSearch {
    fn partial_cmp_search(&self, t: f64) -> std::result::Result<usize, usize>;
}

impl TimeSearch for [f64] {
    fn partial_cmp_search(&self, t: f64) -> std::result::Result<usize, usize> {
        self.binary_search_by(|x| x.partial_cmp(&t).expect("validated finite times"))
    }
}

/// Anchor initialization per the regression contract.
fn init_anchors(data: &TimedSamples, segments: usize) -> Result<Vec<f64>> {
    let m = data.manifold;
    let d = m.ambient_dim();
    let h = INIT_VELOCITY_STEP;
    let l = segments as f64;
    let mut flat = vec![0.0; (segments + 1) * 2 * d];
    let mut tmp = vec![0.0; d];
    let mut foot = vec![0.0; d];
    let mut probe = vec![0.0; d];
    let mut fwd = vec![0.0; d];
    let mut bwd = vec![0.0; d];
    for i in 0..=segments {
        let t = i as f64;
        interpolant_at(data, t, &mut tmp, &mut foot)?;
        let (lo, hi) = ((t - h).max(0.0), (t + h).min(l));
        interpolant_at(data, hi, &mut tmp, &mut probe)?;
        m.log_slice(&foot, &probe, &mut fwd)?;
        interpolant_at(data, lo, &mut tmp, &mut probe)?;
        m.log_slice(&foot, &probe, &mut bwd)?;
        let span = hi - lo;
        flat[i * 2 * d..i * 2 * d + d].copy_from_slice(&foot);
        for c in 0..d {
            flat[i * 2 * d + d + c] = (fwd[c] - bwd[c]) / (3.0 * span);
        }
    }
    Ok(flat)
}

struct Objective<'a> {
    data: &'a TimedSamples,
    segments: usize,
    /// Segment index and local parameter per sample, fixed by the times.
    locate: Vec<(usize, f64)>,
    controls: Vec<f64>,
    pyramid: Vec<f64>,
    tmp_v: Vec<f64>,
    tmp_p: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(data: &'a TimedSamples, segments: usize) -> Objective<'a> {
        let d = data.manifold.ambient_dim();
        let locate = data
            .times
            .iter()
            .map(|&t| {
                let i = (t.floor() as usize).min(segments - 1);
                (i, t - i as f64)
            })
            .collect();
        Objective {
            data,
            segments,
            locate,
            controls: vec![0.0; (3 * segments + 1) * d],
            pyramid: vec![0.0; 4 * d],
            tmp_v: vec![0.0; d],
            tmp_p: vec![0.0; d],
        }
    }

    fn eval(&mut self, anchors: &[f64]) -> Result<f64> {
        let m = &self.data.manifold;
        let d = m.ambient_dim();
        anchors_to_controls_flat(m, anchors, self.segments, &mut self.controls, &mut self.tmp_p)?;
        let mut sum = 0.0;
        for ((seg, x), q) in self.locate.iter().zip(&self.data.points) {
            self.pyramid
                .copy_from_slice(&self.controls[3 * seg * d..(3 * seg + 4) * d]);
            decasteljau_in_place(m, &mut self.pyramid, 4, *x, &mut self.tmp_v, &mut self.tmp_p)?;
            sum += m.dist_slice(&self.pyramid[..d], q.coords()).powi(2);
        }
        Ok(sum / self.data.len() as f64)
    }
}

fn run_fit(
    data: &TimedSamples,
    segments: usize,
    mut anchors: Vec<f64>,
) -> Result<(CubicSpline, FitReport)> {
    assert!(segments >= 1, "a spline has at least one segment");
    let m = data.manifold;
    let d = m.ambient_dim();
    let nb = m.intrinsic_dim();
    let n = data.len();
    let free = 2 * (segments + 1);
    if n < free {
        return Err(Error::InsufficientData {
            needed: free,
            got: n,
            params: free,
        });
    }
    let last = *data.times.last().expect("validated nonempty");
    if (last - segments as f64).abs() > 1e-9 {
        return Err(Error::ParameterOutOfRange {
            t: last,
            max: segments as f64,
        });
    }

    let mut obj = Objective::new(data, segments);
    let anchor_count = segments + 1;
    let mut basis = vec![0.0; anchor_count * nb * d];
    let mut grad = vec![0.0; anchor_count * 2 * nb];
    let mut probe = anchors.clone();
    let mut cand = anchors.clone();
    let mut dir = vec![0.0; d];
    let mut moved = vec![0.0; d];

    let mut energy = obj.eval(&anchors)?;
    let mut objectives = vec![energy];
    let mut step = 1.0;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for iter in 0..FIT_MAX_ITERS {
        iterations = iter;
        for a in 0..anchor_count {
            let node = &anchors[a * 2 * d..(a + 1) * 2 * d];
            let (pa, ua) = (&node[..d], &node[d..]);
            let nb_off = a * nb * d;
            m.tangent_basis_into(pa, &mut basis[nb_off..nb_off + nb * d]);
            for c in 0..nb {
                let b = &basis[nb_off + c * d..nb_off + (c + 1) * d];
                let mut probes = [0.0; 2];
                // Foot coordinate: move the foot, carry the fiber.
                for (side, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                    for i in 0..d {
                        dir[i] = sign * FIT_FD_STEP * b[i];
                    }
                    probe.copy_from_slice(&anchors);
                    {
                        let slot = &mut probe[a * 2 * d..(a + 1) * 2 * d];
                        m.exp_slice(pa, &dir, &mut moved);
                        slot[..d].copy_from_slice(&moved);
                        m.transport_along_slice(pa, &dir, ua, &mut moved);
                        slot[d..].copy_from_slice(&moved);
                    }
                    probes[side] = obj.eval(&probe)?;
                }
                grad[a * 2 * nb + c] = (probes[0] - probes[1]) / (2.0 * FIT_FD_STEP);
                // Fiber coordinate: foot fixed.
                for (side, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                    probe.copy_from_slice(&anchors);
                    for i in 0..d {
                        probe[a * 2 * d + d + i] = ua[i] + sign * FIT_FD_STEP * b[i];
                    }
                    probes[side] = obj.eval(&probe)?;
                }
                grad[a * 2 * nb + nb + c] = (probes[0] - probes[1]) / (2.0 * FIT_FD_STEP);
            }
        }
        let grad_norm_sq: f64 = grad.iter().map(|g| g * g).sum();
        grad_norm = grad_norm_sq.sqrt();
        if grad_norm < FIT_GRAD_TOL {
            converged = true;
            break;
        }

        // Same acceptance policy as the discrete-geodesic solver: strict
        // Armijo while decreases are measurable, noise-band acceptance
        // below f64 resolution, shrink-only step.
        let mut accepted = false;
        let mut tries = 0;
        while tries < 60 {
            if retract_anchors(&m, &anchors, &basis, &grad, step, &mut cand, &mut dir, &mut moved)
                .is_ok()
            {
                if let Ok(e_new) = obj.eval(&cand) {
                    let required = ARMIJO_C * step * grad_norm_sq;
                    let band = NOISE_BAND_ULPS * f64::EPSILON * energy.abs().max(1.0);
                    if e_new <= energy - required || (required <= band && e_new <= energy + band) {
                        energy = e_new;
                        std::mem::swap(&mut anchors, &mut cand);
                        objectives.push(energy);
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
            tries += 1;
        }
        if !accepted {
            break;
        }
    }

    let mut controls = vec![0.0; (3 * segments + 1) * d];
    anchors_to_controls_flat(&m, &anchors, segments, &mut controls, &mut dir)?;
    let spline = controls_flat_to_spline(m, &controls, segments)?;
    Ok((
        spline,
        FitReport {
            iterations,
            grad_norm,
            objective: energy,
            objectives,
            converged,
        },
    ))
}

/// Moves every anchor by its `-step * gradient` block: the foot through exp,
/// the fiber shifted then transported along the foot displacement.
#[allow(clippy::too_many_arguments)]
fn retract_anchors(
    manifold: &Manifold,
    anchors: &[f64],
    basis: &[f64],
    grad: &[f64],
    step: f64,
    cand: &mut [f64],
    dir: &mut [f64],
    fiber_tmp: &mut [f64],
) -> Result<()> {
    let d = manifold.ambient_dim();
    let nb = manifold.intrinsic_dim();
    let guard = manifold.injectivity_guard();
    let count = anchors.len() / (2 * d);
    for a in 0..count {
        let node = &anchors[a * 2 * d..(a + 1) * 2 * d];
        let (pa, ua) = (&node[..d], &node[d..]);
        let nb_off = a * nb * d;
        let ga = &grad[a * 2 * nb..(a + 1) * 2 * nb];
        dir.iter_mut().for_each(|x| *x = 0.0);
        for c in 0..nb {
            let b = &basis[nb_off + c * d..nb_off + (c + 1) * d];
            for i in 0..d {
                dir[i] -= step * ga[c] * b[i];
            }
        }
        let foot_norm = crate::manifold::norm(dir);
        if foot_norm >= guard {
            return Err(Error::OutOfInjectivityRadius {
                norm: foot_norm,
                guard,
            });
        }
        {
            let slot = &mut cand[a * 2 * d..(a + 1) * 2 * d];
            manifold.exp_slice(pa, dir, &mut slot[..d]);
        }
        fiber_tmp.copy_from_slice(ua);
        for c in 0..nb {
            let b = &basis[nb_off + c * d..nb_off + (c + 1) * d];
            for i in 0..d {
                fiber_tmp[i] -= step * ga[nb + c] * b[i];
            }
        }
        let moved_slot = a * 2 * d + d;
        let mut out = vec![0.0; d];
        manifold.transport_along_slice(pa, dir, fiber_tmp, &mut out);
        cand[moved_slot..moved_slot + d].copy_from_slice(&out);
    }
    Ok(())
}

// ── Serialization ───────────────────────────────────────────────────────

/// Plain-text record: a line with L, then 4L control-point lines (joins
/// repeated) with 17 significant digits, enough to round-trip f64 exactly.
pub fn spline_to_text(spline: &CubicSpline) -> String {
    let l = spline.segments();
    let mut out = String::new();
    out.push_str(&format!("{l}\n"));
    for i in 0..l {
        for p in spline.segment_controls(i) {
            let row: Vec<String> = p.coords().iter().map(|c| format!("{c:.16e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Inverse of [`spline_to_text`]; joins must agree across the repetition.
pub fn spline_from_text(manifold: Manifold, text: &str) -> Result<CubicSpline> {
    let d = manifold.ambient_dim();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::MalformedHeader {
        line: 1,
        reason: "empty record".into(),
    })?;
    let l: usize = header.trim().parse().map_err(|_| Error::MalformedHeader {
        line: 1,
        reason: format!("segment count expected, got {header:?}"),
    })?;
    if l == 0 {
        return Err(Error::MalformedHeader {
            line: 1,
            reason: "zero segments".into(),
        });
    }
    let mut points: Vec<Point> = Vec::with_capacity(3 * l + 1);
    let mut row = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if row == 4 * l {
            return Err(Error::MalformedRow {
                line: lineno,
                reason: "trailing data after the last control point".into(),
            });
        }
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::MalformedRow {
                line: lineno,
                reason: format!("bad coordinate: {e}"),
            })?;
        if coords.len() != d {
            return Err(Error::MalformedRow {
                line: lineno,
                reason: format!("expected {d} coordinates, got {}", coords.len()),
            });
        }
        let is_join_repeat = row % 4 == 0 && row > 0;
        if is_join_repeat {
            let prev = points.last().expect("previous segment parsed");
            let gap = prev
                .coords()
                .iter()
                .zip(&coords)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            if gap > 1e-12 {
                return Err(Error::MalformedRow {
                    line: lineno,
                    reason: format!("join repetition differs from shared point by {gap:.3e}"),
                });
            }
        } else {
            let point = Point::new(&manifold, coords).map_err(|e| Error::MalformedRow {
                line: lineno,
                reason: e.to_string(),
            })?;
            points.push(point);
        }
        row += 1;
    }
    if row != 4 * l {
        return Err(Error::MalformedRow {
            line: 0,
            reason: format!("expected {} control rows, got {row}", 4 * l),
        });
    }
    CubicSpline::new(manifold, points)
}
