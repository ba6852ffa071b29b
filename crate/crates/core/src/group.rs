//! Exact algebra of step-two Carnot groups.
//!
//! A group is the space `ℝ^m × ℝ^ℓ` of pairs `(z, t)` with product
//!
//! ```text
//! (z, t) · (ζ, τ) = (z + ζ, t + τ + Q(z, ζ)),
//! ```
//!
//! where the bilinear skew-symmetric form `Q : ℝ^m × ℝ^m → ℝ^ℓ` is given
//! componentwise by `Q(z, ζ)_β = zᵀ A^β ζ` for skew matrices `A^1 … A^ℓ`.
//! The `z` block is the horizontal layer, the `t` block the vertical one.
//!
//! Besides the group law the module provides anisotropic dilations,
//! horizontal exponentials and lines, a homogeneous quasi-norm standing in
//! for the control distance, and the two structural predicates (Hörmander
//! spanning, Métivier surjectivity) that drive everything downstream.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Skewness tolerance for group specs loaded from text formats.
pub const SKEW_TOL_LOADED: f64 = 1e-12;
/// Relative singular-value threshold used by every rank decision.
pub const RANK_REL_TOL: f64 = 1e-10;

/// A step-two Carnot group presented by its skew matrices.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    m: usize,
    ell: usize,
    a: Vec<DMatrix<f64>>,
}

/// A group element `(z, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub z: DVector<f64>,
    pub t: DVector<f64>,
}

/// A horizontal line `s ↦ base · (s·dir, 0)`.
#[derive(Clone, Debug)]
pub struct HorizontalLine {
    pub base: Point,
    pub dir: DVector<f64>,
}

/// Outcome of the Hörmander spanning test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HormanderReport {
    pub holds: bool,
    pub rank: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MetivierKind {
    Metivier,
    NotMetivier,
    Inconclusive,
}

/// Verdict of the randomized Métivier probe.
///
/// `Metivier` is probabilistic: it only says that every probed direction
/// kept full vertical rank. `NotMetivier` is certified by the witness.
#[derive(Clone, Debug)]
pub struct MetivierVerdict {
    pub kind: MetivierKind,
    pub witness: Option<DVector<f64>>,
    pub samples: usize,
}

#[derive(Serialize, Deserialize)]
struct GroupSpecFile {
    m: usize,
    ell: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<Vec<f64>>>,
}

impl Point {
    pub fn new(z: DVector<f64>, t: DVector<f64>) -> Result<Self> {
        if z.iter().chain(t.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point { z, t })
    }

    pub fn from_coords(z: &[f64], t: &[f64]) -> Result<Self> {
        Point::new(DVector::from_row_slice(z), DVector::from_row_slice(t))
    }

    /// Coordinates flattened as `(z…, t…)`.
    pub fn coords(&self) -> Vec<f64> {
        self.z.iter().chain(self.t.iter()).copied().collect()
    }
}

impl HorizontalLine {
    pub fn new(base: Point, dir: DVector<f64>) -> Result<Self> {
        if dir.norm() == 0.0 {
            return Err(Error::ZeroDirection);
        }
        Ok(HorizontalLine { base, dir })
    }
}

fn check_skew(a: &DMatrix<f64>, index: usize, tol: f64) -> Result<()> {
    let asym = (a + a.transpose()).abs().max();
    if asym > tol {
        return Err(Error::NonSkew {
            index,
            asymmetry: asym,
        });
    }
    Ok(())
}

impl GroupSpec {
    /// Validates and builds a group from its matrix presentation.
    ///
    /// Programmatically constructed matrices must be exactly skew; use
    /// [`GroupSpec::from_json`] for data that went through a text format.
    pub fn new(m: usize, ell: usize, a: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::with_tolerance(m, ell, a, 0.0)
    }

    pub fn with_tolerance(m: usize, ell: usize, a: Vec<DMatrix<f64>>, tol: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidInput("horizontal dimension must be >= 1".into()));
        }
        if a.len() != ell {
            return Err(Error::DimensionMismatch {
                expected: ell,
                got: a.len(),
                context: "number of skew matrices",
            });
        }
        for (beta, mat) in a.iter().enumerate() {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: mat.nrows().max(mat.ncols()),
                    context: "skew matrix size",
                });
            }
            check_skew(mat, beta, tol)?;
        }
        Ok(GroupSpec { m, ell, a })
    }

    /// The `n`-th Heisenberg group. Coordinates are interleaved
    /// `(x₁, y₁, …, xₙ, yₙ)` and the single vertical update is
    /// `2 Σⱼ (yⱼ xⱼ' − xⱼ yⱼ')`.
    pub fn heisenberg(n: usize) -> Self {
        assert!(n >= 1, "heisenberg(n) needs n >= 1");
        let m = 2 * n;
        let mut a = DMatrix::zeros(m, m);
        for j in 0..n {
            a[(2 * j, 2 * j + 1)] = -2.0;
            a[(2 * j + 1, 2 * j)] = 2.0;
        }
        GroupSpec::new(m, 1, vec![a]).expect("valid by construction")
    }

    /// The direct product of the Heisenberg group with a line.
    ///
    /// Coordinates `(x, y, u, t)`: the `u` direction is horizontal and
    /// central, `Q((x,y,u),(x',y',u')) = 2(yx' − y'x)`. This is the
    /// smallest group where the Métivier condition fails.
    pub fn hr_product() -> Self {
        let mut a = DMatrix::zeros(3, 3);
        a[(0, 1)] = -2.0;
        a[(1, 0)] = 2.0;
        GroupSpec::new(3, 1, vec![a]).expect("valid by construction")
    }

    /// The free step-two group on `m` generators: `ℓ = m(m−1)/2` and
    /// `Q(e_j, e_k)` for `j < k` runs over the vertical basis.
    pub fn free_step2(m: usize) -> Self {
        assert!(m >= 2, "free_step2(m) needs m >= 2");
        let ell = m * (m - 1) / 2;
        let mut mats = Vec::with_capacity(ell);
        for j in 0..m {
            for k in (j + 1)..m {
                let mut a = DMatrix::zeros(m, m);
                a[(j, k)] = 1.0;
                a[(k, j)] = -1.0;
                mats.push(a);
            }
        }
        GroupSpec::new(m, ell, mats).expect("valid by construction")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn identity(&self) -> Point {
        Point {
            z: DVector::zeros(self.m),
            t: DVector::zeros(self.ell),
        }
    }

    fn check_z(&self, z: &DVector<f64>, context: &'static str) -> Result<()> {
        if z.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: z.len(),
                context,
            });
        }
        Ok(())
    }

    fn check_point(&self, p: &Point, context: &'static str) -> Result<()> {
        self.check_z(&p.z, context)?;
        if p.t.len() != self.ell {
            return Err(Error::DimensionMismatch {
                expected: self.ell,
                got: p.t.len(),
                context,
            });
        }
        Ok(())
    }

    /// The vertical form `Q(z, ζ)`, componentwise `zᵀ A^β ζ`.
    pub fn q_form(&self, z: &DVector<f64>, zeta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_z(z, "q_form z")?;
        self.check_z(zeta, "q_form zeta")?;
        Ok(self.q_form_unchecked(z, zeta))
    }

    pub(crate) fn q_form_unchecked(&self, z: &DVector<f64>, zeta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.ell, self.a.iter().map(|a| (z.transpose() * a * zeta)[0]))
    }

    /// Group product `(z+ζ, t+τ+Q(z,ζ))`.
    pub fn mul(&self, p: &Point, q: &Point) -> Result<Point> {
        self.check_point(p, "mul lhs")?;
        self.check_point(q, "mul rhs")?;
        Ok(self.mul_unchecked(p, q))
    }

    pub(crate) fn mul_unchecked(&self, p: &Point, q: &Point) -> Point {
        Point {
            z: &p.z + &q.z,
            t: &p.t + &q.t + self.q_form_unchecked(&p.z, &q.z),
        }
    }

    /// Group inverse `(−z, −t)`.
    pub fn inverse(&self, p: &Point) -> Point {
        Point {
            z: -&p.z,
            t: -&p.t,
        }
    }

    /// Anisotropic dilation `δ_λ(z, t) = (λz, λ²t)`, a group automorphism.
    pub fn dilate(&self, lambda: f64, p: &Point) -> Point {
        Point {
            z: lambda * &p.z,
            t: (lambda * lambda) * &p.t,
        }
    }

    /// Horizontal flow `e^{u·X}(z,t) = (z+u, t+Q(z,u)) = (z,t)·(u,0)`.
    pub fn exp_horizontal(&self, p: &Point, u: &DVector<f64>) -> Result<Point> {
        self.check_point(p, "exp_horizontal point")?;
        self.check_z(u, "exp_horizontal direction")?;
        Ok(Point {
            z: &p.z + u,
            t: &p.t + self.q_form_unchecked(&p.z, u),
        })
    }

    /// Point of a horizontal line at parameter `s`.
    pub fn line_point(&self, line: &HorizontalLine, s: f64) -> Point {
        let step = Point {
            z: s * &line.dir,
            t: DVector::zeros(self.ell),
        };
        self.mul_unchecked(&line.base, &step)
    }

    /// Homogeneous gauge `max(|z|, |t|^{1/2})`; equivalent to the control
    /// distance from the identity up to structure constants.
    pub fn quasi_norm(&self, p: &Point) -> f64 {
        p.z.norm().max(p.t.norm().sqrt())
    }

    /// Left-invariant quasi-distance `‖p⁻¹ · q‖`.
    pub fn quasi_dist(&self, p: &Point, q: &Point) -> Result<f64> {
        let d = self.mul(&self.inverse(p), q)?;
        Ok(self.quasi_norm(&d))
    }

    /// Lexicographic pairs `(j, k)` with `j < k` indexing the columns of
    /// the structure matrix.
    pub fn pair_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m * (self.m - 1) / 2);
        for j in 0..self.m {
            for k in (j + 1)..self.m {
                out.push((j, k));
            }
        }
        out
    }

    /// The `ℓ × (m choose 2)` matrix whose columns are `Q(e_j, e_k)`.
    pub fn structure_matrix(&self) -> DMatrix<f64> {
        let pairs = self.pair_indices();
        let mut s = DMatrix::zeros(self.ell, pairs.len());
        for (col, &(j, k)) in pairs.iter().enumerate() {
            for beta in 0..self.ell {
                s[(beta, col)] = self.a[beta][(j, k)];
            }
        }
        s
    }

    /// Checks that `Span{Q(e_j, e_k) : j < k}` is the whole vertical layer.
    pub fn hormander_check(&self) -> HormanderReport {
        let s = self.structure_matrix();
        let rank = matrix_rank(&s);
        HormanderReport {
            holds: rank == self.ell,
            rank,
        }
    }

    /// Probes the Métivier condition: for every nonzero `z` the map
    /// `ζ ↦ Q(z, ζ)` must be onto the vertical layer.
    ///
    /// All standard basis directions are tested deterministically, then
    /// `n_samples` random unit directions. Any rank drop certifies
    /// `NotMetivier` with the failing `z` as witness; otherwise the verdict
    /// is `Metivier`, with the usual randomized caveat.
    pub fn metivier_probe(&self, n_samples: usize, rng_seed: u64) -> MetivierVerdict {
        let mut tested = 0usize;
        // ℓ > m forces failure: the ℓ×m matrix of a single z cannot have rank ℓ,
        // so a basis direction below is guaranteed to witness it.
        let structural = self.ell > self.m;

        let rank_at = |z: &DVector<f64>| -> usize {
            let mut mz = DMatrix::zeros(self.ell, self.m);
            for beta in 0..self.ell {
                let az = &self.a[beta] * z;
                for col in 0..self.m {
                    mz[(beta, col)] = az[col];
                }
            }
            matrix_rank(&mz)
        };

        for j in 0..self.m {
            let mut z = DVector::zeros(self.m);
            z[j] = 1.0;
            tested += 1;
            if rank_at(&z) < self.ell {
                return MetivierVerdict {
                    kind: MetivierKind::NotMetivier,
                    witness: Some(z),
                    samples: tested,
                };
            }
        }
        let mut rng = CounterRng::substream(rng_seed, 0);
        for _ in 0..n_samples {
            let z = DVector::from_vec(rng.unit_vector(self.m));
            tested += 1;
            if rank_at(&z) < self.ell {
                return MetivierVerdict {
                    kind: MetivierKind::NotMetivier,
                    witness: Some(z),
                    samples: tested,
                };
            }
        }
        debug_assert!(!structural, "ell > m must have failed on a basis direction");
        MetivierVerdict {
            kind: MetivierKind::Metivier,
            witness: None,
            samples: tested,
        }
    }

    pub fn to_json(&self) -> String {
        let file = GroupSpecFile {
            m: self.m,
            ell: self.ell,
            a: self
                .a
                .iter()
                .map(|mat| {
                    (0..self.m)
                        .map(|i| (0..self.m).map(|j| mat[(i, j)]).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    /// Loads `{"m": …, "ell": …, "A": [[[row]…]…]}` (row-major matrices),
    /// enforcing skewness within `1e-12`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GroupSpecFile = serde_json::from_str(text)?;
        let mats = file
            .a
            .iter()
            .map(|rows| {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                if rows.len() != file.m || flat.len() != file.m * file.m {
                    return Err(Error::DimensionMismatch {
                        expected: file.m,
                        got: rows.len(),
                        context: "matrix rows in group spec file",
                    });
                }
                Ok(DMatrix::from_row_slice(file.m, file.m, &flat))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSpec::with_tolerance(file.m, file.ell, mats, SKEW_TOL_LOADED)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Numerical rank with the crate-wide relative singular value threshold.
pub fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.max();
    if max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_REL_TOL * max)
        .count()
}
