//! Sampling certificates for the inner-cone property of horizontally
//! convex sets.
//!
//! Given a convex set `C`, a point `P` in its closure and a horizontal
//! direction `ξ` with `P·(ξ,0)` interior to `C`, some truncated cone
//!
//! ```text
//! ⋃_{0<s≤s_max} B(P·(sξ,0), εs) ⊂ C
//! ```
//!
//! exists for a positive aperture `ε`. The aperture is purely existential,
//! so this module estimates it: it samples quasi-norm balls along the cone
//! spine at geometrically shrinking apertures and returns the first `ε`
//! whose samples all land inside the set. The cone is genuinely truncated:
//! the same aperture that certifies `s ≤ 1` can fail at `s ≤ 10³`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};
use crate::oracle::{SetOracle, Verdict};
use crate::rng::CounterRng;
use crate::sampling::{interior_verdict, sample_quasi_ball};
use nalgebra::DVector;

/// Search parameters for cone certification.
#[derive(Clone, Debug, Serialize)]
pub struct ConeParams {
    /// First aperture tried.
    pub eps_start: f64,
    /// Geometric shrink factor between attempts.
    pub shrink: f64,
    /// Truncation height of the cone.
    pub s_max: f64,
    /// Number of spine cells over `(0, s_max]`.
    pub s_cells: usize,
    /// Samples per ball.
    pub samples_per_ball: usize,
    /// Shrink steps tried before giving up (eps_min = eps_start·shrink^cap).
    pub max_shrinks: usize,
    pub seed: u64,
}

impl Default for ConeParams {
    fn default() -> Self {
        ConeParams {
            eps_start: 0.5,
            shrink: 0.5,
            s_max: 1.0,
            s_cells: 12,
            samples_per_ball: 64,
            max_shrinks: 10,
            seed: 0,
        }
    }
}

/// Outcome of a cone evaluation. `violations == 0` means the certificate
/// passes; otherwise `witness` holds the first sampled point outside the set.
#[derive(Clone, Debug, Serialize)]
pub struct ConeCertificate {
    pub epsilon: f64,
    pub s_max: f64,
    pub n_samples: usize,
    pub violations: usize,
    #[serde(serialize_with = "serialize_witness")]
    pub witness: Option<Point>,
}

fn serialize_witness<S: serde::Serializer>(
    w: &Option<Point>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    match w {
        None => ser.serialize_none(),
        Some(p) => ser.serialize_some(&p.coords()),
    }
}

impl ConeCertificate {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Linear spine grid `s_i = s_max · i / cells`, never touching zero.
pub fn spine_grid(s_max: f64, cells: usize) -> Vec<f64> {
    (1..=cells).map(|i| s_max * i as f64 / cells as f64).collect()
}

/// Samples the truncated cone around `base` in direction `xi`: for each
/// spine parameter `s`, `n_per_ball` points of the quasi-ball of radius
/// `ε·s` centered at `base·(sξ, 0)`.
pub fn cone_points(
    g: &GroupSpec,
    base: &Point,
    xi: &DVector<f64>,
    epsilon: f64,
    s_grid: &[f64],
    n_per_ball: usize,
    rng_seed: u64,
) -> Result<Vec<Point>> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidInput("cone aperture must be positive".into()));
    }
    if s_grid.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidInput("spine parameters must be positive".into()));
    }
    g.exp_horizontal(base, xi)?; // dimension check
    let mut out = Vec::with_capacity(s_grid.len() * n_per_ball);
    for (si, &s) in s_grid.iter().enumerate() {
        let center = g.exp_horizontal(base, &(s * xi))?;
        for i in 0..n_per_ball {
            let mut rng = CounterRng::substream(rng_seed, (si * n_per_ball + i) as u64);
            out.push(sample_quasi_ball(g, &center, epsilon * s, &mut rng));
        }
    }
    Ok(out)
}

/// Evaluates one fixed aperture: classifies every cone sample and counts
/// the misses.
pub fn cone_evaluate(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    base: &Point,
    xi: &DVector<f64>,
    epsilon: f64,
    params: &ConeParams,
) -> Result<ConeCertificate> {
    let grid = spine_grid(params.s_max, params.s_cells);
    let pts = cone_points(g, base, xi, epsilon, &grid, params.samples_per_ball, params.seed)?;
    let mut violations = 0;
    let mut witness = None;
    for p in &pts {
        if oracle.classify(p) == Verdict::Out {
            violations += 1;
            if witness.is_none() {
                witness = Some(p.clone());
            }
        }
    }
    Ok(ConeCertificate {
        epsilon,
        s_max: params.s_max,
        n_samples: pts.len(),
        violations,
        witness,
    })
}

/// Searches for a passing aperture by geometric shrinking.
///
/// The hypothesis that `base·(ξ,0)` is interior is itself probed with a
/// small quasi-ball (radius `eps_start/4`, 64 samples); a mixed or outside
/// ball aborts with [`Error::HypothesisFails`]. The search returns the
/// first aperture whose cone samples are all inside, or the failing
/// certificate at the smallest aperture tried.
pub fn cone_certify(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    base: &Point,
    xi: &DVector<f64>,
    params: &ConeParams,
) -> Result<ConeCertificate> {
    let tip = g.exp_horizontal(base, xi)?;
    let mut hyp_rng = CounterRng::substream(params.seed ^ 0x483950, 0);
    match interior_verdict(g, oracle, &tip, params.eps_start / 4.0, 64, &mut hyp_rng) {
        Some(Verdict::In) => {}
        _ => return Err(Error::HypothesisFails),
    }

    let mut last = None;
    for step in 0..=params.max_shrinks {
        let eps = params.eps_start * params.shrink.powi(step as i32);
        let cert = cone_evaluate(g, oracle, base, xi, eps, params)?;
        if cert.passed() {
            return Ok(cert);
        }
        last = Some(cert);
    }
    Ok(last.expect("at least one aperture evaluated"))
}

/// Report of a transversal segment probe.
#[derive(Clone, Debug, Serialize)]
pub struct TransversalReport {
    pub segment_samples: usize,
    pub in_count: usize,
    pub out_count: usize,
    /// All supplied surface samples classified inside.
    pub hypothesis_ok: bool,
    #[serde(serialize_with = "serialize_witness")]
    pub witness: Option<Point>,
}

impl TransversalReport {
    pub fn passed(&self) -> bool {
        self.hypothesis_ok && self.out_count == 0
    }
}

/// Samples the open segment between two aligned points and counts verdicts.
///
/// When a surface inside the set crosses the line transversally at the far
/// point, every interior sample of the segment must be inside; an `Out`
/// sample falsifies that conclusion for the supplied oracle.
pub fn transversal_probe(
    g: &GroupSpec,
    oracle: &dyn SetOracle,
    p: &Point,
    q_on_line: &Point,
    surface_samples: &[Point],
    n_segment: usize,
    rng_seed: u64,
) -> Result<TransversalReport> {
    let d = g.mul(&g.inverse(p), q_on_line)?;
    let vert = d.t.norm();
    if vert > 1e-10 {
        return Err(Error::NotAligned { discrepancy: vert });
    }
    let hypothesis_ok = surface_samples
        .iter()
        .all(|s| oracle.classify(s) == Verdict::In);

    if d.z.norm() == 0.0 {
        // empty open segment
        return Ok(TransversalReport {
            segment_samples: 0,
            in_count: 0,
            out_count: 0,
            hypothesis_ok,
            witness: None,
        });
    }

    let mut rng = CounterRng::substream(rng_seed, 1);
    let mut in_count = 0;
    let mut out_count = 0;
    let mut witness = None;
    for i in 0..n_segment {
        // stratified draw over (0, 1)
        let s = (i as f64 + rng.uniform()) / n_segment as f64;
        let pt = g.exp_horizontal(p, &(s * &d.z))?;
        match oracle.classify(&pt) {
            Verdict::In => in_count += 1,
            Verdict::Out => {
                out_count += 1;
                if witness.is_none() {
                    witness = Some(pt);
                }
            }
        }
    }
    Ok(TransversalReport {
        segment_samples: n_segment,
        in_count,
        out_count,
        hypothesis_ok,
        witness,
    })
}
