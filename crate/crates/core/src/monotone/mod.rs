//! Monotone-set machinery: convexity samplers, intrinsic graphs, the
//! classified boundary families of the Heisenberg-times-line group, and
//! the horizontally-affine function checker.
//!
//! A set is horizontally convex when its trace on every horizontal line is
//! an interval, and precisely monotone when the same holds for its
//! complement. The samplers here draw aligned pairs inside the set and
//! look for an `In — Out — In` pattern along the line through them: an
//! interior gap is a certified violation, while a clean pass is evidence
//! (never proof) of convexity.

mod classify;
mod graphs;

pub use classify::{classify_boundary, BoundaryCase, Classification, ClassifyParams, PlaneCoeffs};
pub use graphs::{xgraph_plane_identity, EpiOracle, IntrinsicGraph, IpoOracle, XGraphHR};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};
use crate::oracle::{Complement, SetOracle, Verdict};
use crate::rng::CounterRng;
use crate::sampling::{offset_point, SampleBox};

pub use crate::oracle::UGraphHR;

/// Sampler parameters for the convexity checks.
#[derive(Clone, Debug, Serialize)]
pub struct HConvexParams {
    /// Aligned In-pairs to test.
    pub n_pairs: usize,
    /// Line samples per pair.
    pub line_samples: usize,
    /// Lines are sampled over `[-span, span]` around the pair `[0, 1]`.
    pub span: f64,
    /// Attempt budget per requested pair.
    pub attempts_per_pair: usize,
    pub seed: u64,
}

impl Default for HConvexParams {
    fn default() -> Self {
        HConvexParams {
            n_pairs: 1_000,
            line_samples: 16,
            span: 3.0,
            attempts_per_pair: 64,
            seed: 0,
        }
    }
}

/// An interior gap on a sampled line: `point` classified `Out` between two
/// `In` samples of the line through the aligned pair `(p, q)`.
#[derive(Clone, Debug)]
pub struct Violation {
    pub p: Point,
    pub q: Point,
    pub s: f64,
    pub point: Point,
}

#[derive(Clone, Debug)]
pub struct HConvexReport {
    pub pairs_tested: usize,
    pub violations: Vec<Violation>,
}

impl HConvexReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_STORED_VIOLATIONS: usize = 64;

/// Samples aligned `In`-pairs inside `sample_box` and flags interior gaps
/// on the lines through them.
pub fn hconvex_check(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    sample_box: &SampleBox,
    params: &HConvexParams,
) -> HConvexReport {
    let mut pairs_tested = 0;
    let mut violations = Vec::new();
    let u_scale = sample_box.z_half_extent(g).max(1e-12);

    'outer: for pair_idx in 0..params.n_pairs {
        let mut rng = CounterRng::substream(params.seed, pair_idx as u64);
        // find an In point, then an aligned In partner
        let mut found = None;
        for _ in 0..params.attempts_per_pair {
            let p = sample_box.sample(g, &mut rng);
            if oracle.classify(&p) != Verdict::In {
                continue;
            }
            let u = DVector::from_iterator(g.m(), (0..g.m()).map(|_| u_scale * rng.symmetric()));
            if u.norm() < 1e-9 {
                continue;
            }
            let q = g.exp_horizontal(&p, &u).expect("dimensions fixed");
            if oracle.classify(&q) == Verdict::In {
                found = Some((p, q, u));
                break;
            }
        }
        let Some((p, q, u)) = found else {
            continue 'outer;
        };
        pairs_tested += 1;

        // stratified parameters over [-span, span]; 0 and 1 are known In
        let mut evals: Vec<(f64, Verdict)> = vec![(0.0, Verdict::In), (1.0, Verdict::In)];
        for i in 0..params.line_samples {
            let s = -params.span
                + (i as f64 + rng.uniform()) * (2.0 * params.span / params.line_samples as f64);
            let pt = g.exp_horizontal(&p, &(s * &u)).expect("dimensions fixed");
            evals.push((s, oracle.classify(&pt)));
        }
        evals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let first_in = evals.iter().position(|(_, v)| v.is_in()).unwrap();
        let last_in = evals.iter().rposition(|(_, v)| v.is_in()).unwrap();
        for (s, v) in &evals[first_in..=last_in] {
            if !v.is_in() && violations.len() < MAX_STORED_VIOLATIONS {
                let point = g.exp_horizontal(&p, &(*s * &u)).expect("dimensions fixed");
                violations.push(Violation {
                    p: p.clone(),
                    q: q.clone(),
                    s: *s,
                    point,
                });
            }
        }
    }
    HConvexReport {
        pairs_tested,
        violations,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MonotoneVerdict {
    Monotone,
    NotConvex,
    ComplementNotConvex,
    Both,
}

/// Combined convexity report for a set and its complement.
#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    pub pairs_tested: usize,
    pub convexity_violations: Vec<Violation>,
    pub complement_violations: Vec<Violation>,
    pub verdict: MonotoneVerdict,
}

impl MonotonicityReport {
    pub fn witnesses_csv(&self) -> String {
        let mut out = String::from("side,s,coords...,verdict\n");
        for (side, list) in [
            ("set", &self.convexity_violations),
            ("complement", &self.complement_violations),
        ] {
            for v in list {
                let coords: Vec<String> =
                    v.point.coords().iter().map(|x| x.to_string()).collect();
                out.push_str(&format!("{},{},{},Out\n", side, v.s, coords.join(",")));
            }
        }
        out
    }
}

/// Runs [`hconvex_check`] on the oracle and on its complement.
pub fn monotone_check(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    sample_box: &SampleBox,
    params: &HConvexParams,
) -> MonotonicityReport {
    let set = hconvex_check(g, oracle, sample_box, params);
    let comp_oracle = Complement(oracle);
    let comp_params = HConvexParams {
        seed: params.seed ^ 0xc0_fe,
        ..params.clone()
    };
    let comp = hconvex_check(g, &comp_oracle, sample_box, &comp_params);
    let verdict = match (set.passed(), comp.passed()) {
        (true, true) => MonotoneVerdict::Monotone,
        (false, true) => MonotoneVerdict::NotConvex,
        (true, false) => MonotoneVerdict::ComplementNotConvex,
        (false, false) => MonotoneVerdict::Both,
    };
    MonotonicityReport {
        pairs_tested: set.pairs_tested + comp.pairs_tested,
        convexity_violations: set.violations,
        complement_violations: comp.violations,
        verdict,
    }
}

/// Witness of a failed horizontal-affinity identity.
#[derive(Clone, Debug, Serialize)]
pub struct HAffineWitness {
    pub z: Vec<f64>,
    pub t: f64,
    pub zeta: Vec<f64>,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HAffineReport {
    pub affine_along_lines: bool,
    pub samples: usize,
    pub witness: Option<HAffineWitness>,
}

/// Checks the horizontal-affinity identity
/// `ψ((z,t)·(λζ,0)) − ψ(z,t) = λ·[ψ((z,t)·(ζ,0)) − ψ(z,t)]`
/// on random Heisenberg samples, to relative tolerance `1e-9`.
///
/// Functions of the classified form `c·t + k·x + h·y + const` always pass.
pub fn haffine_check<F: Fn(&Point) -> f64>(
    g: &GroupSpec,
    psi: F,
    n_samples: usize,
    sample_box: &SampleBox,
    rng_seed: u64,
) -> HAffineReport {
    let scale = sample_box.z_half_extent(g).max(1e-12);
    for i in 0..n_samples {
        let mut rng = CounterRng::substream(rng_seed, i as u64);
        let base = sample_box.sample(g, &mut rng);
        let zeta = DVector::from_iterator(g.m(), (0..g.m()).map(|_| scale * rng.symmetric()));
        let lambda = 2.0 * rng.symmetric();

        let at_lambda = g
            .exp_horizontal(&base, &(lambda * &zeta))
            .expect("dimensions fixed");
        let at_one = g.exp_horizontal(&base, &zeta).expect("dimensions fixed");
        let f0 = psi(&base);
        let lhs = psi(&at_lambda) - f0;
        let rhs = lambda * (psi(&at_one) - f0);
        let tol = 1e-9 * (1.0 + f0.abs() + lhs.abs() + rhs.abs());
        if (lhs - rhs).abs() > tol {
            return HAffineReport {
                affine_along_lines: false,
                samples: i + 1,
                witness: Some(HAffineWitness {
                    z: base.z.as_slice().to_vec(),
                    t: base.t[0],
                    zeta: zeta.as_slice().to_vec(),
                    lambda,
                    lhs,
                    rhs,
                }),
            };
        }
    }
    HAffineReport {
        affine_along_lines: true,
        samples: n_samples,
        witness: None,
    }
}

/// Report of the line-in-boundary probe.
#[derive(Clone, Debug, Serialize)]
pub struct LineBoundaryReport {
    pub samples: usize,
    pub on_boundary: usize,
    pub boundary_fraction: f64,
    pub degenerate: bool,
}

/// Tests whether the whole line through two aligned near-boundary points
/// stays in the boundary.
///
/// Both endpoints are refined onto the boundary by bisection, then the
/// line through them is sampled over `[-span, span]`; a sample counts as
/// boundary when some coordinate direction flips the oracle verdict
/// across a `1e-9`-wide bracket. For a monotone set the expected fraction
/// is `1`.
pub fn line_in_boundary_probe(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    p_near: &Point,
    q_near: &Point,
    line_samples: usize,
    span: f64,
) -> Result<LineBoundaryReport> {
    let refine = |pt: &Point| crate::sampling::locate_boundary(g, oracle, pt, 64.0, 1e-12);
    let p = refine(p_near)?;
    let q = refine(q_near)?;

    let d = g.mul(&g.inverse(&p), &q)?;
    if d.t.norm() > 1e-10 {
        return Err(Error::NotAligned {
            discrepancy: d.t.norm(),
        });
    }
    if d.z.norm() < 1e-9 {
        return Ok(LineBoundaryReport {
            samples: 0,
            on_boundary: 0,
            boundary_fraction: 1.0,
            degenerate: true,
        });
    }

    let dim = g.m() + g.ell();
    let bracket = 1e-9;
    let mut on_boundary = 0;
    for i in 0..line_samples {
        let s = -span + (i as f64 + 0.5) * (2.0 * span / line_samples as f64);
        let pt = g.exp_horizontal(&p, &(s * &d.z))?;
        let mut is_boundary = false;
        for axis in 0..dim {
            let mut dir = vec![0.0; dim];
            dir[axis] = 1.0;
            let plus = oracle.classify(&offset_point(g, &pt, &dir, bracket / 2.0));
            let minus = oracle.classify(&offset_point(g, &pt, &dir, -bracket / 2.0));
            if plus != minus {
                is_boundary = true;
                break;
            }
        }
        if is_boundary {
            on_boundary += 1;
        }
    }
    Ok(LineBoundaryReport {
        samples: line_samples,
        on_boundary,
        boundary_fraction: on_boundary as f64 / line_samples as f64,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{EuclideanBall, FnOracle, HalfSpace, QuasiBall, YHalfplaneMinusAxis};

    #[test]
    fn halfspace_has_no_gaps() {
        let g = GroupSpec::heisenberg(1);
        let oracle = HalfSpace::new(vec![1.0, 0.0, 0.0], 0.0);
        let params = HConvexParams {
            n_pairs: 2_000,
            ..HConvexParams::default()
        };
        let rep = hconvex_check(&g, &oracle, &SampleBox::cube(&g, 1.0), &params);
        assert!(rep.pairs_tested > 1_000);
        assert!(rep.passed(), "{} gaps", rep.violations.len());
    }

    #[test]
    fn quasi_ball_complement_has_gaps() {
        let g = GroupSpec::heisenberg(1);
        let ball = QuasiBall {
            g: g.clone(),
            center: g.identity(),
            radius: 1.0,
        };
        let oracle = Complement(ball);
        let params = HConvexParams {
            n_pairs: 3_000,
            span: 4.0,
            ..HConvexParams::default()
        };
        let rep = hconvex_check(&g, &oracle, &SampleBox::cube(&g, 2.0), &params);
        assert!(!rep.passed(), "expected a gap across the ball");
        let v = &rep.violations[0];
        assert!(oracle.classify(&v.point) == Verdict::Out);
        assert!(oracle.classify(&v.p) == Verdict::In);
        assert!(oracle.classify(&v.q) == Verdict::In);
    }

    #[test]
    fn empty_oracle_is_vacuous() {
        let g = GroupSpec::heisenberg(1);
        let oracle = FnOracle::new("empty", |_: &Point| Verdict::Out);
        let rep = hconvex_check(
            &g,
            &oracle,
            &SampleBox::cube(&g, 1.0),
            &HConvexParams::default(),
        );
        assert_eq!(rep.pairs_tested, 0);
        assert!(rep.passed());
    }

    #[test]
    fn hxr_halfspace_is_monotone() {
        let g = GroupSpec::hr_product();
        let oracle = HalfSpace::new(vec![1.0, -0.5, 2.0, 0.25], 0.1);
        let rep = monotone_check(
            &g,
            &oracle,
            &SampleBox::cube(&g, 1.0),
            &HConvexParams::default(),
        );
        assert_eq!(rep.verdict, MonotoneVerdict::Monotone);
    }

    #[test]
    fn deleted_axis_example_is_monotone_but_not_euclidean_convex() {
        let g = GroupSpec::heisenberg(1);
        let oracle = YHalfplaneMinusAxis;
        let params = HConvexParams {
            n_pairs: 4_000,
            ..HConvexParams::default()
        };
        let rep = monotone_check(&g, &oracle, &SampleBox::cube(&g, 1.5), &params);
        assert_eq!(rep.verdict, MonotoneVerdict::Monotone);

        // Euclidean midpoint witness: both endpoints inside, midpoint not.
        let a = Point::from_coords(&[1.0, 0.0], &[1.0]).unwrap();
        let b = Point::from_coords(&[-1.0, 0.0], &[-1.0]).unwrap();
        assert_eq!(oracle.classify(&a), Verdict::In);
        assert_eq!(oracle.classify(&b), Verdict::In);
        let mid = Point {
            z: (&a.z + &b.z) / 2.0,
            t: (&a.t + &b.t) / 2.0,
        };
        assert_eq!(oracle.classify(&mid), Verdict::Out);
    }

    #[test]
    fn euclidean_ball_fails_on_the_complement_side() {
        let g = GroupSpec::heisenberg(1);
        let oracle = EuclideanBall {
            center: vec![0.0, 0.0, 0.0],
            radius: 1.0,
        };
        let params = HConvexParams {
            n_pairs: 3_000,
            span: 4.0,
            ..HConvexParams::default()
        };
        let rep = monotone_check(&g, &oracle, &SampleBox::cube(&g, 2.0), &params);
        assert_eq!(rep.verdict, MonotoneVerdict::ComplementNotConvex);
    }

    #[test]
    fn haffine_classified_family_passes() {
        let g = GroupSpec::heisenberg(1);
        let b = SampleBox::cube(&g, 1.0);
        let psi = |p: &Point| 2.0 * p.t[0] + 3.0 * p.z[0] - p.z[1] + 0.7;
        let rep = haffine_check(&g, psi, 2_000, &b, 0);
        assert!(rep.affine_along_lines);
    }

    #[test]
    fn haffine_rejects_xy_with_witness() {
        let g = GroupSpec::heisenberg(1);
        let b = SampleBox::cube(&g, 1.0);
        let rep = haffine_check(&g, |p: &Point| p.z[0] * p.z[1], 2_000, &b, 0);
        assert!(!rep.affine_along_lines);
        let w = rep.witness.unwrap();
        assert!((w.lhs - w.rhs).abs() > 0.0);
        // constants always pass
        let rep = haffine_check(&g, |_: &Point| 42.0, 500, &b, 0);
        assert!(rep.affine_along_lines);
    }

    #[test]
    fn boundary_line_fraction_one_on_halfspace() {
        let g = GroupSpec::heisenberg(1);
        let oracle = HalfSpace::new(vec![1.0, 0.0, 0.0], 0.0);
        let p = Point::from_coords(&[1e-4, 0.3], &[0.1]).unwrap();
        let q = Point::from_coords(&[-1e-4, 0.9], &[0.4]).unwrap();
        // refine both onto {x = 0}; any aligned pair there keeps x = 0.
        let p0 = crate::sampling::locate_boundary(&g, &oracle, &p, 8.0, 1e-12).unwrap();
        let q_aligned = g
            .exp_horizontal(&p0, &DVector::from_row_slice(&[0.0, 0.5]))
            .unwrap();
        let rep = line_in_boundary_probe(&g, &oracle, &p0, &q_aligned, 64, 3.0).unwrap();
        assert!(!rep.degenerate);
        assert_eq!(rep.boundary_fraction, 1.0);
    }

    #[test]
    fn boundary_line_fraction_below_one_on_ball() {
        let g = GroupSpec::heisenberg(1);
        let oracle = EuclideanBall {
            center: vec![0.0, 0.0, 0.0],
            radius: 1.0,
        };
        // x-axis tangent points (-1,0,0) and (1,0,0); the chord interior is
        // strictly inside the ball, so it is not boundary.
        let p = Point::from_coords(&[-1.0, 1e-6], &[0.0]).unwrap();
        let q = Point::from_coords(&[1.0, -1e-6], &[0.0]).unwrap();
        let rep = line_in_boundary_probe(&g, &oracle, &p, &q, 64, 2.0).unwrap();
        assert!(rep.boundary_fraction < 1.0);
    }

    #[test]
    fn degenerate_pair_is_vacuous() {
        let g = GroupSpec::heisenberg(1);
        let oracle = HalfSpace::new(vec![1.0, 0.0, 0.0], 0.0);
        let p = Point::from_coords(&[1e-5, 0.0], &[0.0]).unwrap();
        let rep = line_in_boundary_probe(&g, &oracle, &p, &p, 32, 2.0).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.boundary_fraction, 1.0);
    }
}
