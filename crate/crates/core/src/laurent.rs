//! Laurent expansion `A(z)^{-1} = Σ_{n≥0} C_n (1−z)^{n−d}` around `z = 1`.
//!
//! With `w = 1 − z` and `B(w) = A(1 − w)`, the function `F(w) = w^d B(w)^{-1}`
//! is analytic at 0 and `C_n` is its `n`-th Taylor coefficient, computed by
//! the trapezoid rule on `|w| = r`. The defining identity system
//! `Σ_j A_j C_{n−j} = δ_{n,d} I` (and its right-hand version) serves as an
//! independent certificate.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::linalg::{image, subspace_distance, Mat, RankPolicy};
use crate::model::{binom, ArModel, TaylorPencil};
use crate::roots::root_diagnostics;
use crate::CMat;

/// Largest identity residual accepted by [`laurent_coeffs`].
pub const CERTIFICATE_TOL: f64 = 1e-8;

const SINGULAR_CONDITION: f64 = 1e13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaurentOptions {
    /// Number of reported coefficients minus one; `None` means `d + 4`.
    pub last: Option<usize>,
    /// Contour radius; `None` picks half the distance to the nearest other
    /// root, capped at 0.5.
    pub radius: Option<f64>,
    pub nodes: usize,
}

impl Default for LaurentOptions {
    fn default() -> Self {
        Self {
            last: None,
            radius: None,
            nodes: 128,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LaurentSeries {
    pub d: usize,
    /// `C_0..C_N`.
    pub coeffs: Vec<Mat>,
    pub radius: f64,
    pub nodes: usize,
    /// Maximum identity residual (infinite until certified).
    pub residual: f64,
    /// Largest discarded imaginary part among the reported coefficients.
    pub max_imag: f64,
    /// `C_0..C_{nodes/2}`, used for pointwise evaluation.
    extended: Vec<Mat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentCertificate {
    pub d: usize,
    pub n_coeffs: usize,
    pub radius: f64,
    pub nodes: usize,
    pub residual: f64,
    pub max_imag: f64,
}

impl LaurentSeries {
    pub fn certificate(&self) -> LaurentCertificate {
        LaurentCertificate {
            d: self.d,
            n_coeffs: self.coeffs.len(),
            radius: self.radius,
            nodes: self.nodes,
            residual: self.residual,
            max_imag: self.max_imag,
        }
    }

    /// `Σ_n C_n w^{n−d}` with all available coefficients, `w = 1 − z`.
    pub fn eval_w(&self, w: Complex<f64>) -> CMat {
        let p = self.coeffs[0].nrows();
        let mut acc = CMat::zeros(p, p);
        for c in self.extended.iter().rev() {
            acc *= w;
            acc += c.map(|x| Complex::new(x, 0.0));
        }
        acc * w.powi(-(self.d as i32))
    }
}

/// Default contour radius for a pencil.
pub fn default_radius(pencil: &TaylorPencil) -> f64 {
    let model = match ArModel::new(pencil.ar_coeffs()) {
        Ok(m) => m,
        Err(_) => return 0.1,
    };
    let diag = root_diagnostics(&model, &RankPolicy::default());
    diag.nearest_other_root_distance.map_or(0.5, |g| (g / 2.0).min(0.5))
}

fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn node_value(pencil: &TaylorPencil, d: usize, r: f64, m: usize, j: usize) -> Result<CMat> {
    let w = Complex::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
    let b = pencil.eval_w(w);
    let inv = b.clone().try_inverse().ok_or(Error::SingularOnCircle {
        node: j,
        condition: f64::INFINITY,
    })?;
    let condition = norm1(&b) * norm1(&inv);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularOnCircle { node: j, condition });
    }
    Ok(inv * w.powi(d as i32))
}

#[cfg(feature = "parallel")]
fn node_values(pencil: &TaylorPencil, d: usize, r: f64, m: usize) -> Result<Vec<CMat>> {
    use rayon::prelude::*;
    (0..m).into_par_iter().map(|j| node_value(pencil, d, r, m, j)).collect()
}

#[cfg(not(feature = "parallel"))]
fn node_values(pencil: &TaylorPencil, d: usize, r: f64, m: usize) -> Result<Vec<CMat>> {
    (0..m).map(|j| node_value(pencil, d, r, m, j)).collect()
}

/// Contour coefficients without the certificate (`residual` left infinite).
pub fn contour_coeffs(pencil: &TaylorPencil, d: usize, opts: &LaurentOptions) -> Result<LaurentSeries> {
    let m = opts.nodes;
    if m < 8 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "node count must be even and >= 8, got {m}"
        )));
    }
    let last = opts.last.unwrap_or(d + 4);
    if last + 1 > m / 2 {
        return Err(Error::InvalidArgument(format!(
            "at most {} coefficients for {m} nodes",
            m / 2
        )));
    }
    let r = opts.radius.unwrap_or_else(|| default_radius(pencil));
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let values = node_values(pencil, d, r, m)?;
    let p = pencil.p();
    let mut extended = Vec::with_capacity(m / 2 + 1);
    let mut max_imag: f64 = 0.0;
    for n in 0..=m / 2 {
        let mut acc = CMat::zeros(p, p);
        for (j, f) in values.iter().enumerate() {
            let angle = -2.0 * std::f64::consts::PI * ((j * n) % m) as f64 / m as f64;
            acc += f * Complex::from_polar(1.0, angle);
        }
        let scale = r.powi(-(n as i32)) / m as f64;
        if n <= last {
            max_imag = max_imag.max(acc.iter().map(|c| c.im.abs()).fold(0.0, f64::max) * scale);
        }
        extended.push(acc.map(|c| c.re * scale));
    }
    Ok(LaurentSeries {
        d,
        coeffs: extended[..=last].to_vec(),
        radius: r,
        nodes: m,
        residual: f64::INFINITY,
        max_imag,
        extended,
    })
}

/// Contour coefficients with the identity-system certificate.
pub fn laurent_coeffs(pencil: &TaylorPencil, d: usize, opts: &LaurentOptions) -> Result<LaurentSeries> {
    let mut series = contour_coeffs(pencil, d, opts)?;
    let res = identity_residuals(pencil, &series);
    series.residual = res.max_residual();
    if series.residual.is_nan() || series.residual >= CERTIFICATE_TOL {
        return Err(Error::RadiusTooLarge {
            radius: series.radius,
            residual: series.residual,
            threshold: CERTIFICATE_TOL,
        });
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `‖Σ_j A_j C_{n−j} − δ_{n,d} I‖_F` for `n = 0..N`.
    pub left: Vec<f64>,
    /// `‖Σ_j C_{n−j} A_j − δ_{n,d} I‖_F` for `n = 0..N`.
    pub right: Vec<f64>,
    /// `‖A(z) Â(z)^{-1} − I‖_F` at 8 points on `|1 − z| = r/2`.
    pub pointwise: Vec<f64>,
}

impl IdentityResiduals {
    pub fn max_residual(&self) -> f64 {
        self.left
            .iter()
            .chain(&self.right)
            .chain(&self.pointwise)
            .fold(
                0.0,
                |a: f64, &b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) },
            )
    }

    /// Largest left/right residual among equations `0..=n`.
    pub fn equation_residual_up_to(&self, n: usize) -> f64 {
        self.left
            .iter()
            .take(n + 1)
            .chain(self.right.iter().take(n + 1))
            .fold(0.0, |a, &b| a.max(b))
    }
}

pub fn identity_residuals(pencil: &TaylorPencil, series: &LaurentSeries) -> IdentityResiduals {
    let p = pencil.p();
    let d = series.d;
    let c = &series.coeffs;
    let id = Mat::identity(p, p);
    let mut left = Vec::with_capacity(c.len());
    let mut right = Vec::with_capacity(c.len());
    for n in 0..c.len() {
        let mut l = Mat::zeros(p, p);
        let mut r = Mat::zeros(p, p);
        for j in 0..=n.min(pencil.degree()) {
            let a = &pencil.coeffs()[j];
            l += a * &c[n - j];
            r += &c[n - j] * a;
        }
        if n == d {
            l -= &id;
            r -= &id;
        }
        left.push(l.norm());
        right.push(r.norm());
    }
    let cid = CMat::identity(p, p);
    let pointwise = (0..8)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / 8.0;
            let w = Complex::from_polar(series.radius / 2.0, theta);
            (pencil.eval_w(w) * series.eval_w(w) - &cid).norm()
        })
        .collect();
    IdentityResiduals { left, right, pointwise }
}

/// Loadings `C_0..C_{d−1}` of the cumulated random walks and the
/// `z`-power coefficients of the stationary part.
#[derive(Debug, Clone)]
pub struct CommonTrendsOperators {
    pub d: usize,
    pub loadings: Vec<Mat>,
    /// `ψ*_j`, `j = 0..tail_terms`, with `Σ ψ*_j z^j = Σ_{n≥d} C_n (1−z)^{n−d}`.
    pub tail: Vec<Mat>,
    pub attractor_residual: f64,
    pub kernel_residual: f64,
}

/// Packages the common-trends operators and checks `Im C_0 = τ_d`,
/// `Ker C_0 ⊇ Z_d`.
///
/// The stationary part is expanded in powers of `z`, obtained as the impulse
/// responses of `A(z)^{-1}` minus those of the principal part. Its
/// expansion in powers of `(1 − z)` does not converge on the unit circle in
/// general.
pub fn common_trends(
    series: &LaurentSeries,
    dec: &Decomposition,
    pencil: &TaylorPencil,
    tail_terms: usize,
) -> Result<CommonTrendsOperators> {
    let d = dec.d;
    if series.d != d || series.coeffs.len() < d {
        return Err(Error::InvalidArgument(format!(
            "series has pole order {} and {} coefficients, decomposition has d = {d}",
            series.d,
            series.coeffs.len()
        )));
    }
    let c0 = &series.coeffs[0];
    let attractor_residual = subspace_distance(&image(c0, &RankPolicy::default()), &dec.attractor);
    let c0_norm = c0.norm().max(f64::MIN_POSITIVE);
    let kernel_residual = (c0 * dec.z_space.basis()).norm() / c0_norm;
    let worst = attractor_residual.max(kernel_residual);
    if worst.is_nan() || worst > 1e-6 {
        return Err(Error::AttractorMismatch { residual: worst });
    }

    let p = pencil.p();
    let ar = pencil.ar_coeffs();
    let mut psi: Vec<Mat> = vec![Mat::identity(p, p)];
    for j in 1..tail_terms {
        let mut acc = Mat::zeros(p, p);
        for (h, a) in ar.iter().enumerate() {
            if h < j {
                acc += a * &psi[j - 1 - h];
            }
        }
        psi.push(acc);
    }
    let tail = psi
        .into_iter()
        .enumerate()
        .map(|(j, mut m)| {
            for (n, c) in series.coeffs.iter().take(d).enumerate() {
                let order = d - n;
                m -= c * binom(j + order - 1, order - 1);
            }
            m
        })
        .collect();
    Ok(CommonTrendsOperators {
        d,
        loadings: series.coeffs[..d].to_vec(),
        tail,
        attractor_residual,
        kernel_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::decompose;
    use crate::fixtures;
    use nalgebra::DVector;

    fn scalar_rw() -> TaylorPencil {
        ArModel::new(vec![Mat::from_element(1, 1, 1.0)])
            .unwrap()
            .taylor_at_one()
    }

    fn diag_model() -> TaylorPencil {
        ArModel::new(vec![Mat::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]))])
            .unwrap()
            .taylor_at_one()
    }

    #[test]
    fn scalar_random_walk_series() {
        let s = laurent_coeffs(&scalar_rw(), 1, &Default::default()).unwrap();
        assert!((s.coeffs[0][(0, 0)] - 1.0).abs() < 1e-14);
        for c in &s.coeffs[1..] {
            assert!(c[(0, 0)].abs() < 1e-14);
        }
        let res = identity_residuals(&scalar_rw(), &s);
        assert!(res.max_residual() < 1e-14);
    }

    #[test]
    fn diagonal_geometric_tail() {
        let s = laurent_coeffs(&diag_model(), 1, &Default::default()).unwrap();
        let expected = [(1.0, 0.0), (0.0, 2.0), (0.0, -2.0), (0.0, 2.0)];
        for (n, (a, b)) in expected.iter().enumerate() {
            let want = Mat::from_diagonal(&DVector::from_vec(vec![*a, *b]));
            assert!((&s.coeffs[n] - want).amax() < 1e-12, "C_{n} = {}", s.coeffs[n]);
        }
        assert!(s.max_imag < 1e-10);
    }

    #[test]
    fn i1_band_c0_is_e1_projector() {
        let pen = fixtures::i1_band(0.5).taylor_at_one();
        let s = laurent_coeffs(&pen, 1, &Default::default()).unwrap();
        let mut e = Mat::zeros(6, 6);
        e[(0, 0)] = 1.0;
        assert!((&s.coeffs[0] - e).amax() < 1e-12);
    }

    #[test]
    fn i2_band_equation_d_residual() {
        let pen = fixtures::i2_band(0.5).taylor_at_one();
        let s = laurent_coeffs(&pen, 2, &Default::default()).unwrap();
        let res = identity_residuals(&pen, &s);
        assert!(res.left[2] < 1e-9);
        let mut e12 = Mat::zeros(6, 6);
        e12[(0, 1)] = 1.0;
        assert!((&s.coeffs[0] - e12).amax() < 1e-12);
    }

    #[test]
    fn too_small_pole_order_fails_certificate() {
        let pen = fixtures::i2_band(0.5).taylor_at_one();
        let s = contour_coeffs(&pen, 1, &Default::default()).unwrap();
        let res = identity_residuals(&pen, &s);
        assert!(res.max_residual() > 0.1);
        assert!(matches!(
            laurent_coeffs(&pen, 1, &Default::default()),
            Err(Error::RadiusTooLarge { .. })
        ));
    }

    #[test]
    fn larger_pole_order_shifts_coefficients() {
        let pen = fixtures::i2_band(0.5).taylor_at_one();
        let s2 = laurent_coeffs(&pen, 2, &Default::default()).unwrap();
        let s4 = laurent_coeffs(&pen, 4, &Default::default()).unwrap();
        assert!(s4.coeffs[0].amax() < 1e-8 && s4.coeffs[1].amax() < 1e-8);
        for n in 0..5 {
            assert!((&s4.coeffs[n + 2] - &s2.coeffs[n]).amax() < 1e-8);
        }
    }

    #[test]
    fn radius_halving_is_stable() {
        let pen = fixtures::i2_band(0.5).taylor_at_one();
        let a = laurent_coeffs(&pen, 2, &Default::default()).unwrap();
        let b = laurent_coeffs(
            &pen,
            2,
            &LaurentOptions {
                radius: Some(a.radius / 2.0),
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((x - y).norm() <= 1e-7 * x.norm().max(1.0));
        }
    }

    #[test]
    fn singular_on_circle_is_reported() {
        // root of 1 − 0.5z at z = 2, i.e. w = −1
        let err = contour_coeffs(
            &diag_model(),
            1,
            &LaurentOptions {
                radius: Some(1.0),
                nodes: 32,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularOnCircle { .. }), "{err:?}");
    }

    #[test]
    fn common_trends_diag_tail_is_geometric() {
        let pen = diag_model();
        let dec = decompose(&pen, &RankPolicy::default()).unwrap();
        let s = laurent_coeffs(&pen, 1, &Default::default()).unwrap();
        let ct = common_trends(&s, &dec, &pen, 12).unwrap();
        assert_eq!(ct.loadings.len(), 1);
        for (j, t) in ct.tail.iter().enumerate() {
            assert!(t[(0, 0)].abs() < 1e-12);
            assert!((t[(1, 1)] - 0.5f64.powi(j as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn common_trends_i2_loadings() {
        let pen = fixtures::i2_band(0.5).taylor_at_one();
        let dec = decompose(&pen, &RankPolicy::default()).unwrap();
        let s = laurent_coeffs(&pen, 2, &Default::default()).unwrap();
        let ct = common_trends(&s, &dec, &pen, 12).unwrap();
        assert_eq!(ct.loadings.len(), 2);
        assert!(ct.attractor_residual < 1e-8);
        // tail of the stable coordinates is 0.5^j, unit-root part vanishes
        for (j, t) in ct.tail.iter().enumerate() {
            assert!((t[(4, 4)] - 0.5f64.powi(j as i32)).abs() < 1e-10);
            assert!(t.view((0, 0), (3, 3)).amax() < 1e-8, "j = {j}: {t}");
        }
    }

    #[test]
    fn common_trends_rejects_wrong_attractor() {
        let pen = fixtures::i1_band(0.5).taylor_at_one();
        let dec = decompose(&pen, &RankPolicy::default()).unwrap();
        let mut s = laurent_coeffs(&pen, 1, &Default::default()).unwrap();
        assert!(common_trends(&s, &dec, &pen, 4).is_ok());
        s.coeffs[0] = Mat::zeros(6, 6);
        s.coeffs[0][(1, 1)] = 1.0;
        assert!(matches!(
            common_trends(&s, &dec, &pen, 4),
            Err(Error::AttractorMismatch { .. })
        ));
    }
}
