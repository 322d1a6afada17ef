//! Characteristic-root diagnostics through the companion matrix.
//!
//! The companion eigenvalues `λ` and the roots `z` of `det A(z)` are related
//! by `z = 1/λ`. A unit root of finite type shows up as a cluster of
//! eigenvalues at `λ = 1`; every other eigenvalue must lie strictly inside
//! the unit disc.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::linalg::{eigenvalues, rank_scaled, Mat, RankPolicy};
use crate::model::{to_complex, ArModel, RootPolicy};
use crate::CMat;

/// Why a model fails the finite-type check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailReason {
    NoUnitRoot,
    ExplosiveOrBoundaryRoot,
    SeasonalUnitRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason")]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail(FailReason),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex<f64>> for Eigenvalue {
    fn from(c: Complex<f64>) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl Eigenvalue {
    pub fn complex(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootDiagnostics {
    /// All `p·k` companion eigenvalues, sorted by distance to 1.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Number of eigenvalues attributed to `λ = 1`.
    pub unit_cluster_size: usize,
    /// `|mean(cluster) − 1|`, or `None` for an empty cluster.
    pub unit_cluster_offset: Option<f64>,
    pub has_unit_root: bool,
    /// Largest modulus among eigenvalues outside the cluster (0 if none).
    pub max_other_modulus: f64,
    /// `1 − max_other_modulus`.
    pub min_modulus_gap: f64,
    /// Distance from `w = 0` to the nearest other zero of `det A(1 − w)`.
    pub nearest_other_root_distance: Option<f64>,
    pub dim_ker_a0: usize,
    pub dim_coker_a0: usize,
    /// `A(1) = 0` numerically. Reported for information; the recursion
    /// handles it without factoring out `(1 − z)`.
    pub a0_vanishes: bool,
    pub policy: RootPolicy,
}

/// Block companion matrix; `A°_1` itself when `k = 1`.
pub fn companion(m: &ArModel) -> Mat {
    let p = m.p();
    let k = m.k();
    if k == 1 {
        return m.coeffs()[0].clone();
    }
    let mut c = Mat::zeros(p * k, p * k);
    for (h, a) in m.coeffs().iter().enumerate() {
        c.view_mut((0, h * p), (p, p)).copy_from(a);
    }
    for i in 0..p * (k - 1) {
        c[(p + i, i)] = 1.0;
    }
    c
}

pub fn root_diagnostics(m: &ArModel, policy: &RankPolicy) -> RootDiagnostics {
    let rp = m.root_policy();
    let one = Complex::new(1.0, 0.0);
    let mut eig: Vec<Complex<f64>> = eigenvalues(&companion(m));
    eig.sort_by(|a, b| {
        (a - one)
            .norm()
            .total_cmp(&(b - one).norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
    let cluster_size = eig.iter().take_while(|l| (*l - one).norm() < rp.cluster_radius).count();
    let offset = (cluster_size > 0).then(|| {
        let mean: Complex<f64> = eig[..cluster_size].iter().sum::<Complex<f64>>() / cluster_size as f64;
        (mean - one).norm()
    });
    let others = &eig[cluster_size..];
    let max_other_modulus = others.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let nearest = others
        .iter()
        .filter(|l| l.norm() > 1e-12)
        .map(|l| (one - l.inv()).norm())
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));

    let pencil = m.taylor_at_one();
    let a0 = pencil.a(0);
    let r = rank_scaled(&a0, policy, pencil.scale());
    let r_t = rank_scaled(&a0.transpose(), policy, pencil.scale());
    RootDiagnostics {
        eigenvalues: eig.iter().copied().map(Eigenvalue::from).collect(),
        unit_cluster_size: cluster_size,
        unit_cluster_offset: offset,
        has_unit_root: offset.is_some_and(|o| o < rp.unit_tol),
        max_other_modulus,
        min_modulus_gap: 1.0 - max_other_modulus,
        nearest_other_root_distance: nearest,
        dim_ker_a0: m.p() - r,
        dim_coker_a0: m.p() - r_t,
        a0_vanishes: r == 0,
        policy: rp,
    }
}

pub fn assert_finite_type(d: &RootDiagnostics) -> Verdict {
    let rp = &d.policy;
    let one = Complex::new(1.0, 0.0);
    let others = d.eigenvalues[d.unit_cluster_size..].iter().map(Eigenvalue::complex);
    let mut seasonal = false;
    let mut explosive = false;
    for l in others {
        let modulus = l.norm();
        if modulus >= 1.0 - rp.stability_margin {
            if modulus <= 1.0 + rp.stability_margin && (l - one).norm() >= rp.cluster_radius {
                seasonal = true;
            } else {
                explosive = true;
            }
        }
    }
    if explosive {
        return Verdict::Fail(FailReason::ExplosiveOrBoundaryRoot);
    }
    if seasonal {
        return Verdict::Fail(FailReason::SeasonalUnitRoot);
    }
    if d.unit_cluster_size > 0 && !d.has_unit_root {
        // the cluster near 1 is not centred on 1
        return Verdict::Fail(FailReason::ExplosiveOrBoundaryRoot);
    }
    if d.dim_ker_a0 == 0 || !d.has_unit_root {
        return Verdict::Fail(FailReason::NoUnitRoot);
    }
    Verdict::Pass
}

/// Riesz projector `(1/2πi) ∮ (λI − M)^{-1} dλ` on the circle
/// `|λ − center| = radius`, trapezoid rule with `nodes` points.
pub fn riesz_projector(m: &Mat, center: Complex<f64>, radius: f64, nodes: usize) -> Option<Mat> {
    let n = m.nrows();
    let mc = to_complex(m);
    let id = CMat::identity(n, n);
    let mut acc = CMat::zeros(n, n);
    for j in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let step = Complex::from_polar(radius, theta);
        let resolvent = (&id * (center + step) - &mc).try_inverse()?;
        acc += resolvent * step;
    }
    acc /= Complex::new(nodes as f64, 0.0);
    Some(acc.map(|c| c.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn diag(m: &ArModel) -> RootDiagnostics {
        root_diagnostics(m, &RankPolicy::default())
    }

    #[test]
    fn scalar_random_walk_passes() {
        let m = ArModel::new(vec![Mat::from_element(1, 1, 1.0)]).unwrap();
        let d = diag(&m);
        assert_eq!(d.dim_ker_a0, 1);
        assert!(d.a0_vanishes);
        assert_eq!(assert_finite_type(&d), Verdict::Pass);
    }

    #[test]
    fn i1_band_passes() {
        let d = diag(&fixtures::i1_band(0.5));
        assert_eq!(d.eigenvalues.len(), 6);
        assert_eq!(d.unit_cluster_size, 1);
        assert_eq!(d.dim_ker_a0, 1);
        assert_eq!(assert_finite_type(&d), Verdict::Pass);
        assert!((d.nearest_other_root_distance.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn i2_band_has_triple_cluster() {
        let d = diag(&fixtures::i2_band(0.5));
        assert_eq!(d.unit_cluster_size, 3);
        assert_eq!(d.dim_ker_a0, 2);
        assert_eq!(d.dim_coker_a0, 2);
        assert_eq!(assert_finite_type(&d), Verdict::Pass);
    }

    #[test]
    fn root_at_minus_one_is_seasonal() {
        let m = ArModel::new(vec![-Mat::identity(2, 2)]).unwrap();
        assert_eq!(
            assert_finite_type(&diag(&m)),
            Verdict::Fail(FailReason::SeasonalUnitRoot)
        );
    }

    #[test]
    fn stationary_has_no_unit_root() {
        let d = diag(&fixtures::stationary());
        assert_eq!(assert_finite_type(&d), Verdict::Fail(FailReason::NoUnitRoot));
    }

    #[test]
    fn explosive_root_fails() {
        let m = ArModel::new(vec![Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.2]))]).unwrap();
        assert_eq!(
            assert_finite_type(&diag(&m)),
            Verdict::Fail(FailReason::ExplosiveOrBoundaryRoot)
        );
    }

    #[test]
    fn companion_eigen_count_is_pk() {
        let m = ArModel::new(vec![
            Mat::identity(3, 3) * 0.5,
            Mat::identity(3, 3) * 0.2,
            Mat::zeros(3, 3),
        ])
        .unwrap();
        assert_eq!(diag(&m).eigenvalues.len(), 9);
    }

    #[test]
    fn k1_companion_is_coefficient() {
        let m = fixtures::i2_band(0.5);
        assert_eq!(companion(&m), m.coeffs()[0]);
    }

    #[test]
    fn second_order_unit_root_through_companion() {
        // (1 − z)^2 = 1 − 2z + z²
        let m = ArModel::new(vec![Mat::from_element(1, 1, 2.0), Mat::from_element(1, 1, -1.0)]).unwrap();
        let d = diag(&m);
        assert_eq!(d.unit_cluster_size, 2);
        assert_eq!(assert_finite_type(&d), Verdict::Pass);
    }

    #[test]
    fn riesz_projector_picks_the_unit_block() {
        let a = Mat::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.3]);
        let p = riesz_projector(&a, Complex::new(1.0, 0.0), 0.3, 128).unwrap();
        let mut expected = Mat::zeros(3, 3);
        expected[(0, 0)] = 1.0;
        expected[(1, 1)] = 1.0;
        assert!((p - expected).amax() < 1e-12);
    }
}
