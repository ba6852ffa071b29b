//! Shared sampling utilities: boxes, quasi-balls, interior probes and
//! boundary bisection.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};
use crate::oracle::{SetOracle, Verdict};
use crate::rng::CounterRng;

/// Axis-aligned sampling box over the flattened `(z…, t…)` coordinates.
#[derive(Clone, Debug)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
                context: "sample box bounds",
            });
        }
        if lo
            .iter()
            .chain(hi.iter())
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(SampleBox { lo, hi })
    }

    /// Cube `[-half, half]` in every coordinate of the group.
    pub fn cube(g: &GroupSpec, half: f64) -> Self {
        let dim = g.m() + g.ell();
        SampleBox {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    pub fn sample(&self, g: &GroupSpec, rng: &mut CounterRng) -> Point {
        let coords: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| rng.uniform_in(lo, hi))
            .collect();
        let (z, t) = coords.split_at(g.m());
        Point {
            z: DVector::from_row_slice(z),
            t: DVector::from_row_slice(t),
        }
    }

    /// Half-extent of the horizontal block, used to scale direction draws.
    pub fn z_half_extent(&self, g: &GroupSpec) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .take(g.m())
            .map(|(&lo, &hi)| (hi - lo) / 2.0)
            .fold(0.0, f64::max)
    }
}

/// Uniform draw from the quasi-ball of given radius around `center`:
/// offsets are drawn in the box chart `[-r, r]^m × [-r², r²]^ℓ` and kept
/// when their quasi-norm is at most `r`, then applied by left translation.
pub fn sample_quasi_ball(
    g: &GroupSpec,
    center: &Point,
    radius: f64,
    rng: &mut CounterRng,
) -> Point {
    let r2 = radius * radius;
    loop {
        let z = DVector::from_iterator(g.m(), (0..g.m()).map(|_| radius * rng.symmetric()));
        let t = DVector::from_iterator(g.ell(), (0..g.ell()).map(|_| r2 * rng.symmetric()));
        if z.norm() <= radius && t.norm() <= r2 {
            let offset = Point { z, t };
            return g.mul_unchecked(center, &offset);
        }
    }
}

/// Samples a small quasi-ball around `center`; `Some(v)` when every sample
/// (and the center) agrees on the verdict `v`, `None` on a mixed ball.
pub fn interior_verdict(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    center: &Point,
    radius: f64,
    n_samples: usize,
    rng: &mut CounterRng,
) -> Option<Verdict> {
    let v = oracle.classify(center);
    for _ in 0..n_samples {
        let p = sample_quasi_ball(g, center, radius, rng);
        if oracle.classify(&p) != v {
            return None;
        }
    }
    Some(v)
}

/// Refines an In/Out bracket to a boundary point by bisection on the
/// Euclidean segment between the endpoints.
pub fn bisect_boundary(
    oracle: &dyn SetOracle,
    inside: &Point,
    outside: &Point,
    tol: f64,
) -> Point {
    debug_assert!(oracle.classify(inside).is_in());
    debug_assert!(!oracle.classify(outside).is_in());
    let mut a = inside.clone();
    let mut b = outside.clone();
    let gap = |p: &Point, q: &Point| ((&p.z - &q.z).norm_squared() + (&p.t - &q.t).norm_squared()).sqrt();
    while gap(&a, &b) > tol {
        let mid = Point {
            z: (&a.z + &b.z) / 2.0,
            t: (&a.t + &b.t) / 2.0,
        };
        if oracle.classify(&mid).is_in() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Point {
        z: (&a.z + &b.z) / 2.0,
        t: (&a.t + &b.t) / 2.0,
    }
}

/// Walks outward from `seed` along coordinate directions until the oracle
/// verdict flips, then bisects. Returns the refined boundary point.
pub fn locate_boundary(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    seed: &Point,
    max_walk: f64,
    tol: f64,
) -> Result<Point> {
    let start = oracle.classify(seed);
    let dim = g.m() + g.ell();
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        let mut d = vec![0.0; dim];
        d[i] = 1.0;
        directions.push(d.clone());
        d[i] = -1.0;
        directions.push(d);
    }
    let mut rng = CounterRng::substream(0x10ca7e, 0);
    for _ in 0..4 {
        directions.push(rng.unit_vector(dim));
    }

    for d in &directions {
        let mut step = tol.max(1e-6) * 64.0;
        while step <= max_walk {
            let probe = offset_point(g, seed, d, step);
            if oracle.classify(&probe) != start {
                let (inside, outside) = if start.is_in() {
                    (seed.clone(), probe)
                } else {
                    (probe, seed.clone())
                };
                return Ok(bisect_boundary(oracle, &inside, &outside, tol));
            }
            step *= 2.0;
        }
    }
    Err(Error::BoundaryNotFound)
}

/// Euclidean coordinate offset `p + s·d` over flattened coordinates.
pub fn offset_point(g: &GroupSpec, p: &Point, dir: &[f64], s: f64) -> Point {
    let (dz, dt) = dir.split_at(g.m());
    Point {
        z: &p.z + s * DVector::from_row_slice(dz),
        t: &p.t + s * DVector::from_row_slice(dt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::HalfSpace;

    #[test]
    fn quasi_ball_samples_respect_radius() {
        let g = GroupSpec::heisenberg(1);
        let center = Point::from_coords(&[1.0, -0.5], &[0.3]).unwrap();
        let mut rng = CounterRng::new(9);
        for _ in 0..500 {
            let p = sample_quasi_ball(&g, &center, 0.25, &mut rng);
            assert!(g.quasi_dist(&center, &p).unwrap() <= 0.25 + 1e-12);
        }
    }

    #[test]
    fn bisection_finds_plane() {
        let g = GroupSpec::heisenberg(1);
        let oracle = HalfSpace::new(vec![1.0, 0.0, 0.0], 0.25);
        let seed = Point::from_coords(&[1.0, 0.2], &[0.1]).unwrap();
        let b = locate_boundary(&g, &oracle, &seed, 100.0, 1e-12).unwrap();
        assert!((b.z[0] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn interior_probe_detects_mixed_balls() {
        let g = GroupSpec::heisenberg(1);
        let oracle = HalfSpace::new(vec![1.0, 0.0, 0.0], 0.0);
        let mut rng = CounterRng::new(3);
        let deep = Point::from_coords(&[2.0, 0.0], &[0.0]).unwrap();
        assert_eq!(
            interior_verdict(&g, &oracle, &deep, 0.1, 64, &mut rng),
            Some(Verdict::In)
        );
        let boundary = Point::from_coords(&[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(interior_verdict(&g, &oracle, &boundary, 0.1, 64, &mut rng), None);
    }
}
