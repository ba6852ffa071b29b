//! Membership oracles: sets presented as pure predicates over points.

use serde::Serialize;

use crate::group::{GroupSpec, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    In,
    Out,
}

impl Verdict {
    pub fn flip(self) -> Verdict {
        match self {
            Verdict::In => Verdict::Out,
            Verdict::Out => Verdict::In,
        }
    }

    pub fn is_in(self) -> bool {
        self == Verdict::In
    }
}

/// A set given by a deterministic membership predicate.
///
/// Implementations must be pure: the same point always classifies the same
/// way, and concurrent calls are safe.
pub trait SetOracle: Sync {
    fn classify(&self, p: &Point) -> Verdict;
    fn label(&self) -> String;
}

impl<'a, T: SetOracle + ?Sized> SetOracle for &'a T {
    fn classify(&self, p: &Point) -> Verdict {
        (**self).classify(p)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<T: SetOracle + ?Sized> SetOracle for Box<T> {
    fn classify(&self, p: &Point) -> Verdict {
        (**self).classify(p)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// The complement of another oracle.
pub struct Complement<O>(pub O);

impl<O: SetOracle> SetOracle for Complement<O> {
    fn classify(&self, p: &Point) -> Verdict {
        self.0.classify(p).flip()
    }
    fn label(&self) -> String {
        format!("complement of {}", self.0.label())
    }
}

/// Open half-space `Σ cᵢ·coordᵢ > offset` over the flattened `(z…, t…)`
/// coordinates.
#[derive(Clone, Debug)]
pub struct HalfSpace {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        HalfSpace { coeffs, offset }
    }

    pub fn value(&self, p: &Point) -> f64 {
        p.z.iter()
            .chain(p.t.iter())
            .zip(&self.coeffs)
            .map(|(x, c)| x * c)
            .sum::<f64>()
            - self.offset
    }
}

impl SetOracle for HalfSpace {
    fn classify(&self, p: &Point) -> Verdict {
        if self.value(p) > 0.0 {
            Verdict::In
        } else {
            Verdict::Out
        }
    }
    fn label(&self) -> String {
        format!("halfspace {:?} > {}", self.coeffs, self.offset)
    }
}

/// Everything classifies `In`.
pub struct EverythingIn;

impl SetOracle for EverythingIn {
    fn classify(&self, _p: &Point) -> Verdict {
        Verdict::In
    }
    fn label(&self) -> String {
        "everything".into()
    }
}

/// Closed Euclidean ball in the flattened coordinates.
#[derive(Clone, Debug)]
pub struct EuclideanBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SetOracle for EuclideanBall {
    fn classify(&self, p: &Point) -> Verdict {
        let d2: f64 = p
            .coords()
            .iter()
            .zip(&self.center)
            .map(|(x, c)| (x - c) * (x - c))
            .sum();
        if d2 <= self.radius * self.radius {
            Verdict::In
        } else {
            Verdict::Out
        }
    }
    fn label(&self) -> String {
        format!("euclidean ball r={}", self.radius)
    }
}

/// Closed quasi-norm ball `‖center⁻¹ · p‖ ≤ radius`.
pub struct QuasiBall {
    pub g: GroupSpec,
    pub center: Point,
    pub radius: f64,
}

impl SetOracle for QuasiBall {
    fn classify(&self, p: &Point) -> Verdict {
        match self.g.quasi_dist(&self.center, p) {
            Ok(d) if d <= self.radius => Verdict::In,
            _ => Verdict::Out,
        }
    }
    fn label(&self) -> String {
        format!("quasi ball r={}", self.radius)
    }
}

/// The Heisenberg half-plane `{y ≥ 0}` with the x-axis removed.
///
/// A precisely monotone set that is not Euclidean convex: the aligned-pair
/// sampler finds no violation, yet the Euclidean midpoint of
/// `(1,0,1)` and `(-1,0,-1)` is the deleted origin.
pub struct YHalfplaneMinusAxis;

impl SetOracle for YHalfplaneMinusAxis {
    fn classify(&self, p: &Point) -> Verdict {
        let y = p.z[1];
        let t = p.t[0];
        if y > 0.0 || (y == 0.0 && t != 0.0) {
            Verdict::In
        } else {
            Verdict::Out
        }
    }
    fn label(&self) -> String {
        "y-halfplane minus x-axis".into()
    }
}

/// Epigraph `{u > a·x + b·y + c·t}` of a linear U-graph in the
/// Heisenberg-times-line group `(x, y, u, t)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct UGraphHR {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl UGraphHR {
    pub fn height(&self, x: f64, y: f64, t: f64) -> f64 {
        self.a * x + self.b * y + self.c * t
    }
}

impl SetOracle for UGraphHR {
    fn classify(&self, p: &Point) -> Verdict {
        let (x, y, u, t) = (p.z[0], p.z[1], p.z[2], p.t[0]);
        if u > self.height(x, y, t) {
            Verdict::In
        } else {
            Verdict::Out
        }
    }
    fn label(&self) -> String {
        format!("ugraph u > {}x + {}y + {}t", self.a, self.b, self.c)
    }
}

/// Wraps a closure as an oracle.
pub struct FnOracle<F> {
    pub f: F,
    pub name: String,
}

impl<F: Fn(&Point) -> Verdict + Sync> SetOracle for FnOracle<F> {
    fn classify(&self, p: &Point) -> Verdict {
        (self.f)(p)
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

impl<F: Fn(&Point) -> Verdict + Sync> FnOracle<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnOracle { f, name: name.into() }
    }
}

/// Random hyperplane half-space through a random point, for fuzzing
/// monotone-family checks.
pub fn random_halfspace(g: &GroupSpec, rng: &mut crate::rng::CounterRng) -> HalfSpace {
    let dim = g.m() + g.ell();
    let coeffs = rng.unit_vector(dim);
    let through: Vec<f64> = (0..dim).map(|_| rng.symmetric()).collect();
    let offset = coeffs.iter().zip(&through).map(|(c, x)| c * x).sum();
    HalfSpace::new(coeffs, offset)
}

/// Convenience: classify with a dimension check already done by the caller.
pub fn classify_many<'a>(
    oracle: &dyn SetOracle,
    points: impl IntoIterator<Item = &'a Point>,
) -> (usize, usize) {
    let mut inside = 0;
    let mut outside = 0;
    for p in points {
        match oracle.classify(p) {
            Verdict::In => inside += 1,
            Verdict::Out => outside += 1,
        }
    }
    (inside, outside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;

    #[test]
    fn halfspace_classifies_by_sign() {
        let o = HalfSpace::new(vec![1.0, 0.0, 0.0], 0.0);
        let p = Point::from_coords(&[0.5, 1.0], &[3.0]).unwrap();
        assert_eq!(o.classify(&p), Verdict::In);
        let q = Point::from_coords(&[-0.5, 1.0], &[3.0]).unwrap();
        assert_eq!(q.z[0], -0.5);
        assert_eq!(o.classify(&q), Verdict::Out);
        assert_eq!(Complement(&o).classify(&q), Verdict::In);
    }

    #[test]
    fn deleted_axis_example() {
        let o = YHalfplaneMinusAxis;
        let in_pt = Point::from_coords(&[1.0, 0.0], &[1.0]).unwrap();
        assert_eq!(o.classify(&in_pt), Verdict::In);
        let axis_pt = Point::from_coords(&[3.0, 0.0], &[0.0]).unwrap();
        assert_eq!(o.classify(&axis_pt), Verdict::Out);
        let below = Point::from_coords(&[0.0, -0.1], &[0.0]).unwrap();
        assert_eq!(o.classify(&below), Verdict::Out);
    }

    #[test]
    fn quasi_ball_boundary() {
        let g = GroupSpec::heisenberg(1);
        let o = QuasiBall {
            g: g.clone(),
            center: g.identity(),
            radius: 1.0,
        };
        assert_eq!(
            o.classify(&Point::from_coords(&[0.0, 0.0], &[1.0]).unwrap()),
            Verdict::In
        );
        assert_eq!(
            o.classify(&Point::from_coords(&[0.0, 0.0], &[1.1]).unwrap()),
            Verdict::Out
        );
    }
}
