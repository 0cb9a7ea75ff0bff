//! Shared helpers for unit tests: seeded random geometry on the sphere.

use crate::manifold::{norm, Manifold, Point, Tangent};
use rand::Rng;

pub(crate) fn random_sphere_point(rng: &mut impl Rng) -> Point {
    loop {
        let c = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if norm(&c) > 0.1 {
            return Point::sphere_normalized(c);
        }
    }
}

pub(crate) fn random_tangent(rng: &mut impl Rng, p: &Point, scale: f64) -> Tangent {
    let m = Manifold::sphere();
    let basis = m.tangent_basis(p);
    let a = rng.gen_range(-scale..scale);
    let b = rng.gen_range(-scale..scale);
    basis[0].scale(a).axpy(1.0, &basis[1].scale(b)).unwrap()
}
