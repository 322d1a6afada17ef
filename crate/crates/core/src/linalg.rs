//! Subspace arithmetic on finite truncations.
//!
//! Every rank decision in the crate goes through a single [`RankPolicy`]:
//! a singular value `σ` is kept iff `σ > max(rel_tol · scale, abs_floor)`,
//! where `scale` is the largest singular value of the matrix being examined
//! unless the caller supplies a larger reference scale.
//!
//! Subspaces are always carried as orthonormal bases. Two subspaces are
//! compared through their principal angles, never by comparing bases.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual norm below which a projected coordinate vector is skipped when
/// building a canonical basis.
const CANONICAL_ACCEPT: f64 = 1e-3;

pub type Mat = DMatrix<f64>;

/// Threshold used for every numerical rank decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPolicy {
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_floor: 1e-13,
        }
    }
}

impl RankPolicy {
    pub fn new(rel_tol: f64, abs_floor: f64) -> Result<Self> {
        let policy = Self { rel_tol, abs_floor };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidPolicy(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_floor > 0.0 && self.abs_floor.is_finite()) {
            return Err(Error::InvalidPolicy(format!(
                "abs_floor must be strictly positive, got {}",
                self.abs_floor
            )));
        }
        Ok(())
    }

    /// Cut-off for singular values of a matrix whose largest singular value is `scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        (self.rel_tol * scale).max(self.abs_floor)
    }
}

/// Linear subspace of `R^ambient_dim` held as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Mat,
    tol_used: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: Mat::zeros(ambient_dim, 0),
            tol_used: 0.0,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: Mat::identity(ambient_dim, ambient_dim),
            tol_used: 0.0,
        }
    }

    /// Span of the given vectors, orthonormalised. Linearly dependent
    /// directions are dropped under `policy`.
    pub fn span(ambient_dim: usize, vectors: &[DVector<f64>], policy: &RankPolicy) -> Self {
        if vectors.is_empty() {
            return Self::zero(ambient_dim);
        }
        let m = Mat::from_columns(vectors);
        image(&m, policy)
    }

    /// Span of the canonical basis vectors `e_i` (zero-based indices).
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut basis = Mat::zeros(ambient_dim, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            basis[(i, c)] = 1.0;
        }
        Self { basis, tol_used: 0.0 }
    }

    /// Wrap a basis that is already orthonormal. The caller vouches for it.
    pub(crate) fn from_orthonormal(basis: Mat, tol_used: f64) -> Self {
        Self { basis, tol_used }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn tol_used(&self) -> f64 {
        self.tol_used
    }

    /// Orthonormal basis that depends on the subspace only, not on the
    /// factorization that produced it: Gram–Schmidt on the projected
    /// coordinate vectors `P e_1, P e_2, …`, skipping those that are nearly
    /// dependent, then a sign flip so that the first entry larger than
    /// `1e-12` in magnitude is positive. Coordinate subspaces get
    /// coordinate vectors.
    pub fn canonical_basis(&self) -> Mat {
        let (n, r) = (self.ambient_dim(), self.rank());
        let proj = self.projector();
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(r);
        let residual = |cols: &[DVector<f64>], i: usize| {
            let mut w = proj.column(i).into_owned();
            for _ in 0..2 {
                for c in cols {
                    w -= c * c.dot(&w);
                }
            }
            w
        };
        for i in 0..n {
            if cols.len() == r {
                break;
            }
            let w = residual(&cols, i);
            if w.norm() > CANONICAL_ACCEPT {
                cols.push(w.normalize());
            }
        }
        while cols.len() < r {
            let w = (0..n)
                .map(|i| residual(&cols, i))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .expect("nonempty ambient space");
            cols.push(w.normalize());
        }
        for c in &mut cols {
            if let Some(first) = c.iter().copied().find(|x| x.abs() > 1e-12) {
                if first < 0.0 {
                    c.neg_mut();
                }
            }
            c.iter_mut().for_each(|x| {
                if x.abs() < 1e-15 {
                    *x = 0.0;
                }
            });
        }
        if cols.is_empty() {
            return Mat::zeros(n, 0);
        }
        Mat::from_columns(&cols)
    }

    pub fn projector(&self) -> Mat {
        projector(self)
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Whether the two subspaces coincide: equal rank and all principal
    /// angles below `angle_tol`.
    pub fn approx_eq(&self, other: &Subspace, angle_tol: f64) -> bool {
        subspace_distance(self, other) < angle_tol
    }
}

/// Thin SVD with singular values sorted in descending order.
struct SortedSvd {
    u: Mat,
    v: Mat,
    sigma: Vec<f64>,
}

fn sorted_svd(m: &Mat) -> SortedSvd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SortedSvd {
            u: Mat::zeros(rows, 0),
            v: Mat::zeros(cols, 0),
            sigma: Vec::new(),
        };
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = a.thin_svd().expect("svd converges on finite input");
    let (u, v, s) = (svd.U(), svd.V(), svd.S().column_vector());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    SortedSvd {
        u: Mat::from_fn(rows, k, |r, c| u[(r, order[c])]),
        v: Mat::from_fn(cols, k, |r, c| v[(r, order[c])]),
        sigma: order.iter().map(|&i| s[i]).collect(),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    sorted_svd(m).sigma
}

/// Eigenvalues of a square matrix, in no particular order.
pub fn eigenvalues(m: &Mat) -> Vec<Complex<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    a.eigenvalues()
        .expect("eigenvalues converge on finite input")
        .iter()
        .map(|z| Complex::new(z.re, z.im))
        .collect()
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn rank(m: &Mat, policy: &RankPolicy) -> usize {
    rank_scaled(m, policy, 0.0)
}

/// Rank with the relative threshold taken against `max(σ_max, scale)`.
pub fn rank_scaled(m: &Mat, policy: &RankPolicy, scale: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    let thr = policy.threshold(smax.max(scale));
    s.iter().filter(|&&x| x > thr).count()
}

fn kept(sigma: &[f64], thr: f64) -> usize {
    sigma.iter().take_while(|&&x| x > thr).count()
}

/// Column space of `m`.
pub fn image(m: &Mat, policy: &RankPolicy) -> Subspace {
    image_scaled(m, policy, 0.0)
}

pub fn image_scaled(m: &Mat, policy: &RankPolicy, scale: f64) -> Subspace {
    let svd = sorted_svd(m);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let thr = policy.threshold(smax.max(scale));
    let r = kept(&svd.sigma, thr);
    Subspace::from_orthonormal(svd.u.columns(0, r).into_owned(), thr)
}

/// `(Ker m)^⊥`, i.e. the row space of `m`, spanned by the leading right
/// singular vectors in descending singular-value order.
pub fn kernel_perp(m: &Mat, policy: &RankPolicy) -> Subspace {
    kernel_perp_scaled(m, policy, 0.0)
}

pub fn kernel_perp_scaled(m: &Mat, policy: &RankPolicy, scale: f64) -> Subspace {
    let svd = sorted_svd(m);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let thr = policy.threshold(smax.max(scale));
    let r = kept(&svd.sigma, thr);
    Subspace::from_orthonormal(svd.v.columns(0, r).into_owned(), thr)
}

/// `Ker m` as an explicit subspace.
pub fn kernel(m: &Mat, policy: &RankPolicy) -> Subspace {
    complement(&kernel_perp(m, policy))
}

/// Orthonormal basis of the span of a matrix whose columns are already close
/// to orthonormal (concatenations of mutually orthogonal bases). Singular
/// values are either ≈0 or ≈1, so a fixed cut at 1/2 is unambiguous.
fn orthonormalize(m: &Mat) -> Subspace {
    let svd = sorted_svd(m);
    let r = kept(&svd.sigma, 0.5);
    Subspace::from_orthonormal(svd.u.columns(0, r).into_owned(), 0.5)
}

/// Orthogonal complement `S^⊥`.
pub fn complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    if s.is_zero() {
        return Subspace::full(n);
    }
    let residual = Mat::identity(n, n) - s.projector();
    orthonormalize(&residual)
}

/// Orthogonal sum of subspaces that are (numerically) mutually orthogonal.
pub fn orthogonal_sum(parts: &[&Subspace]) -> Subspace {
    let n = parts.first().map(|s| s.ambient_dim()).unwrap_or(0);
    let cols: usize = parts.iter().map(|s| s.rank()).sum();
    if cols == 0 {
        return Subspace::zero(n);
    }
    let mut m = Mat::zeros(n, cols);
    let mut c = 0;
    for s in parts {
        m.columns_mut(c, s.rank()).copy_from(s.basis());
        c += s.rank();
    }
    orthonormalize(&m)
}

/// `P = B·Bᵀ`.
pub fn projector(s: &Subspace) -> Mat {
    s.basis() * s.basis().transpose()
}

/// Moore–Penrose pseudo-inverse with the policy's singular-value cut.
pub fn pinv(m: &Mat, policy: &RankPolicy) -> Mat {
    pinv_scaled(m, policy, 0.0)
}

pub fn pinv_scaled(m: &Mat, policy: &RankPolicy, scale: f64) -> Mat {
    reveal(m, policy, scale).pinv
}

/// Image, row space and pseudo-inverse from a single SVD, so that all three
/// agree on the rank.
#[derive(Debug, Clone)]
pub struct RankRevealed {
    pub image: Subspace,
    pub kernel_perp: Subspace,
    pub pinv: Mat,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

impl RankRevealed {
    pub fn rank(&self) -> usize {
        self.image.rank()
    }
}

pub fn reveal(m: &Mat, policy: &RankPolicy, scale: f64) -> RankRevealed {
    let svd = sorted_svd(m);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let thr = policy.threshold(smax.max(scale));
    let r = kept(&svd.sigma, thr);
    let mut pinv = Mat::zeros(m.ncols(), m.nrows());
    for i in 0..r {
        pinv += svd.v.column(i) * svd.u.column(i).transpose() * (1.0 / svd.sigma[i]);
    }
    RankRevealed {
        image: Subspace::from_orthonormal(svd.u.columns(0, r).into_owned(), thr),
        kernel_perp: Subspace::from_orthonormal(svd.v.columns(0, r).into_owned(), thr),
        pinv,
        singular_values: svd.sigma,
        threshold: thr,
    }
}

/// Principal angles between two subspaces, ascending, `min(rank)` of them.
///
/// Cosines come from the singular values of `B₁ᵀB₂` and sines from those of
/// the component of the smaller basis orthogonal to the larger one; the angle
/// is `atan2(sin, cos)`, which stays accurate both near 0 and near π/2.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Vec<f64> {
    assert_eq!(
        a.ambient_dim(),
        b.ambient_dim(),
        "subspaces live in different ambient spaces"
    );
    let (big, small) = if a.rank() >= b.rank() { (a, b) } else { (b, a) };
    let k = small.rank();
    if k == 0 {
        return Vec::new();
    }
    let cross = big.basis().transpose() * small.basis();
    let mut cos = singular_values(&cross);
    cos.resize(k, 0.0);
    let residual = small.basis() - big.basis() * &cross;
    let mut sin = singular_values(&residual);
    sin.resize(k, 0.0);
    // cos descending pairs with sin ascending
    sin.reverse();
    cos.iter()
        .zip(sin.iter())
        .map(|(&c, &s)| s.clamp(0.0, 1.0).atan2(c.clamp(0.0, 1.0)))
        .collect()
}

/// Largest principal angle when ranks agree, `π/2` otherwise.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> f64 {
    if a.rank() != b.rank() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(a, b).into_iter().fold(0.0, f64::max)
}

/// Outcome of [`direct_sum_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectSumReport {
    pub is_direct_sum: bool,
    pub rank_sum: usize,
    pub ambient_dim: usize,
    /// Smallest singular value of the concatenated bases (0 when empty).
    pub min_singular_value: f64,
    /// `(i, j, smallest principal angle between parts i and j)`.
    pub pairwise_min_angles: Vec<(usize, usize, f64)>,
}

/// Whether `parts` form a (not necessarily orthogonal) direct sum equal to
/// the whole ambient space.
pub fn direct_sum_check(parts: &[&Subspace], policy: &RankPolicy) -> DirectSumReport {
    let ambient_dim = parts.first().map(|s| s.ambient_dim()).unwrap_or(0);
    let rank_sum: usize = parts.iter().map(|s| s.rank()).sum();
    let mut pairwise = Vec::new();
    for i in 0..parts.len() {
        for j in (i + 1)..parts.len() {
            let min = principal_angles(parts[i], parts[j])
                .first()
                .copied()
                .unwrap_or(std::f64::consts::FRAC_PI_2);
            pairwise.push((i, j, min));
        }
    }
    let mut concat = Mat::zeros(ambient_dim, rank_sum);
    let mut c = 0;
    for s in parts {
        concat.columns_mut(c, s.rank()).copy_from(s.basis());
        c += s.rank();
    }
    let sigma = singular_values(&concat);
    let min_singular_value = if rank_sum == 0 || sigma.len() < rank_sum {
        0.0
    } else {
        sigma[rank_sum - 1]
    };
    let full_column_rank = rank_sum > 0 && rank(&concat, policy) == rank_sum;
    DirectSumReport {
        is_direct_sum: rank_sum == ambient_dim && full_column_rank,
        rank_sum,
        ambient_dim,
        min_singular_value,
        pairwise_min_angles: pairwise,
    }
}
