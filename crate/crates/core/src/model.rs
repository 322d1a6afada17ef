//! The AR operator polynomial `A(z) = I − Σ A°_h z^h` and its expansion
//! `A(z) = Σ A_n (1−z)^n` around `z = 1`.
//!
//! Models are read from and written to a small JSON format:
//!
//! ```json
//! {"p": 2, "k": 1, "coeffs": [[[1.0, 0.0], [0.0, 0.5]]],
//!  "noise_cov": [[1.0, 0.0], [0.0, 1.0]],
//!  "policy": {"rel_tol": 1e-9}}
//! ```
//!
//! `coeffs` lists `A°_1..A°_k` as row-major `p × p` arrays; `noise_cov` and
//! `policy` are optional.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat, RankPolicy};
use crate::CMat;

/// Numerical bands used when classifying companion eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootPolicy {
    /// Tolerance on the centroid of the cluster at `λ = 1`.
    pub unit_tol: f64,
    /// Non-unit eigenvalues must satisfy `|λ| < 1 − stability_margin`.
    pub stability_margin: f64,
    /// Eigenvalues within this distance of 1 are attributed to the unit
    /// cluster (a Jordan block of size `b` splits by roughly `ε^{1/b}`).
    pub cluster_radius: f64,
}

impl Default for RootPolicy {
    fn default() -> Self {
        Self {
            unit_tol: 1e-7,
            stability_margin: 1e-6,
            cluster_radius: 1e-3,
        }
    }
}

/// Optional per-model overrides, as they appear in the JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    p: usize,
    k: usize,
    coeffs: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_cov: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<PolicyOverrides>,
}

/// `x_t = A°_1 x_{t−1} + … + A°_k x_{t−k} + ε_t` on `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    p: usize,
    coeffs: Vec<Mat>,
    noise_cov: Option<Mat>,
    policy: Option<PolicyOverrides>,
}

fn check_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{what} has non-finite entries")))
    }
}

fn rows_to_mat(rows: &[Vec<f64>], p: usize, what: &str) -> Result<Mat> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidModel(format!("{what} must be {p}x{p}")));
    }
    Ok(Mat::from_fn(p, p, |i, j| rows[i][j]))
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ArModel {
    pub fn new(coeffs: Vec<Mat>) -> Result<Self> {
        let p = coeffs
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidModel("need at least one coefficient".into()))?;
        let model = Self {
            p,
            coeffs,
            noise_cov: None,
            policy: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_noise_cov(mut self, cov: Mat) -> Result<Self> {
        self.noise_cov = Some(cov);
        self.validate()?;
        Ok(self)
    }

    pub fn with_policy(mut self, policy: PolicyOverrides) -> Result<Self> {
        self.policy = Some(policy);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let p = self.p;
        if p == 0 {
            return Err(Error::InvalidModel("p must be positive".into()));
        }
        if self.coeffs.is_empty() {
            return Err(Error::InvalidModel("k must be at least 1".into()));
        }
        for (h, a) in self.coeffs.iter().enumerate() {
            if a.shape() != (p, p) {
                return Err(Error::InvalidModel(format!("A°_{} must be {p}x{p}", h + 1)));
            }
            check_finite(a, &format!("A°_{}", h + 1))?;
        }
        if let Some(cov) = &self.noise_cov {
            if cov.shape() != (p, p) {
                return Err(Error::InvalidModel(format!("noise_cov must be {p}x{p}")));
            }
            check_finite(cov, "noise_cov")?;
            let scale = cov.amax().max(1.0);
            if (cov - cov.transpose()).amax() > 1e-10 * scale {
                return Err(Error::InvalidModel("noise_cov is not symmetric".into()));
            }
            let sym = (cov + cov.transpose()) * 0.5;
            let min_eig = sym.symmetric_eigenvalues().min();
            if min_eig < -1e-10 * scale {
                return Err(Error::InvalidModel(format!(
                    "noise_cov is not positive semidefinite (eigenvalue {min_eig:e})"
                )));
            }
        }
        self.rank_policy()?;
        let rp = self.root_policy();
        for (name, v) in [
            ("unit_tol", rp.unit_tol),
            ("stability_margin", rp.stability_margin),
            ("cluster_radius", rp.cluster_radius),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidPolicy(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        if spec.coeffs.len() != spec.k {
            return Err(Error::InvalidModel(format!(
                "k = {} but {} coefficient matrices given",
                spec.k,
                spec.coeffs.len()
            )));
        }
        let coeffs = spec
            .coeffs
            .iter()
            .enumerate()
            .map(|(h, rows)| rows_to_mat(rows, spec.p, &format!("A°_{}", h + 1)))
            .collect::<Result<Vec<_>>>()?;
        let noise_cov = spec
            .noise_cov
            .as_ref()
            .map(|rows| rows_to_mat(rows, spec.p, "noise_cov"))
            .transpose()?;
        let model = Self {
            p: spec.p,
            coeffs,
            noise_cov,
            policy: spec.policy,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec()).expect("model spec is always serialisable")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.spec()).expect("model spec is always serialisable")
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec {
            p: self.p,
            k: self.k(),
            coeffs: self.coeffs.iter().map(mat_to_rows).collect(),
            noise_cov: self.noise_cov.as_ref().map(mat_to_rows),
            policy: self.policy.clone(),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    /// `A°_1..A°_k`.
    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn noise_cov(&self) -> Mat {
        self.noise_cov.clone().unwrap_or_else(|| Mat::identity(self.p, self.p))
    }

    pub fn policy_overrides(&self) -> Option<&PolicyOverrides> {
        self.policy.as_ref()
    }

    pub fn rank_policy(&self) -> Result<RankPolicy> {
        let d = RankPolicy::default();
        let o = self.policy.clone().unwrap_or_default();
        RankPolicy::new(o.rel_tol.unwrap_or(d.rel_tol), o.abs_floor.unwrap_or(d.abs_floor))
    }

    pub fn root_policy(&self) -> RootPolicy {
        let d = RootPolicy::default();
        let o = self.policy.clone().unwrap_or_default();
        RootPolicy {
            unit_tol: o.unit_tol.unwrap_or(d.unit_tol),
            stability_margin: o.stability_margin.unwrap_or(d.stability_margin),
            cluster_radius: o.cluster_radius.unwrap_or(d.cluster_radius),
        }
    }

    /// `A(z) = I − Σ A°_h z^h`.
    pub fn eval(&self, z: Complex<f64>) -> CMat {
        let mut poly = Vec::with_capacity(self.k() + 1);
        poly.push(Mat::identity(self.p, self.p));
        poly.extend(self.coeffs.iter().map(|a| -a));
        horner(&poly, z)
    }

    pub fn taylor_at_one(&self) -> TaylorPencil {
        taylor_at_one(self)
    }
}

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub(crate) fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex::new(x, 0.0))
}

/// `Σ coeffs[n] x^n` by Horner's rule.
pub fn horner(coeffs: &[Mat], x: Complex<f64>) -> CMat {
    let p = coeffs.first().map(|m| m.nrows()).unwrap_or(0);
    let mut acc = DMatrix::<Complex<f64>>::zeros(p, p);
    for c in coeffs.iter().rev() {
        acc *= x;
        acc += to_complex(c);
    }
    acc
}

/// `A_0..A_k` with `A(z) = Σ A_n (1−z)^n`; `A_n = 0` for `n > k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorPencil {
    coeffs: Vec<Mat>,
}

impl TaylorPencil {
    pub fn from_coeffs(coeffs: Vec<Mat>) -> Result<Self> {
        let p = coeffs
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidModel("empty pencil".into()))?;
        for (n, a) in coeffs.iter().enumerate() {
            if a.shape() != (p, p) {
                return Err(Error::InvalidModel(format!("A_{n} must be {p}x{p}")));
            }
            check_finite(a, &format!("A_{n}"))?;
        }
        Ok(Self { coeffs })
    }

    pub fn p(&self) -> usize {
        self.coeffs[0].nrows()
    }

    /// Polynomial degree bound `k`.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    /// Largest spectral norm among `A_0..A_k`; the reference scale for rank
    /// decisions on matrices derived from the pencil.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(crate::linalg::spectral_norm).fold(0.0, f64::max)
    }

    /// `A_n`, zero beyond the degree.
    pub fn a(&self, n: usize) -> Mat {
        self.coeffs
            .get(n)
            .cloned()
            .unwrap_or_else(|| Mat::zeros(self.p(), self.p()))
    }

    /// `B(w) = Σ A_n w^n = A(1 − w)`.
    pub fn eval_w(&self, w: Complex<f64>) -> CMat {
        horner(&self.coeffs, w)
    }

    pub fn eval(&self, z: Complex<f64>) -> CMat {
        self.eval_w(Complex::new(1.0, 0.0) - z)
    }

    /// Back to `A°_1..A°_k` by expanding `(1−z)^n`.
    pub fn ar_coeffs(&self) -> Vec<Mat> {
        let p = self.p();
        let k = self.degree();
        (1..=k.max(1))
            .map(|j| {
                let mut c = Mat::zeros(p, p);
                for n in j..=k {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    c += &self.coeffs[n] * (binom(n, j) * sign);
                }
                -c
            })
            .collect()
    }
}

pub fn taylor_at_one(m: &ArModel) -> TaylorPencil {
    let p = m.p();
    let k = m.k();
    let a = m.coeffs();
    let mut coeffs = Vec::with_capacity(k + 1);
    let mut a0 = Mat::identity(p, p);
    for c in a {
        a0 -= c;
    }
    coeffs.push(a0);
    for n in 1..=k {
        let mut acc = Mat::zeros(p, p);
        for h in 0..=(k - n) {
            acc += &a[n + h - 1] * binom(n + h, n);
        }
        let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(acc * sign);
    }
    TaylorPencil { coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random_model(p: usize, k: usize, seed: u64) -> ArModel {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..k)
            .map(|_| Mat::from_fn(p, p, |_, _| rng.random_range(-0.5..0.5)))
            .collect();
        ArModel::new(coeffs).unwrap()
    }

    #[test]
    fn var1_pencil() {
        let m = Mat::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.7]);
        let pen = ArModel::new(vec![m.clone()]).unwrap().taylor_at_one();
        assert_eq!(pen.a(0), Mat::identity(2, 2) - &m);
        assert_eq!(pen.a(1), m);
        assert_eq!(pen.a(2), Mat::zeros(2, 2));
    }

    #[test]
    fn var2_pencil_matches_derivatives() {
        let model = random_model(3, 2, 11);
        let (a1, a2) = (&model.coeffs()[0], &model.coeffs()[1]);
        let pen = model.taylor_at_one();
        let i = Mat::identity(3, 3);
        assert!((pen.a(0) - (&i - a1 - a2)).amax() < 1e-15);
        assert!((pen.a(1) - (a1 + a2 * 2.0)).amax() < 1e-15);
        assert!((pen.a(2) + a2).amax() < 1e-15);
    }

    #[test]
    fn zero_coefficients_give_identity_pencil() {
        let pen = ArModel::new(vec![Mat::zeros(2, 2); 3]).unwrap().taylor_at_one();
        assert_eq!(pen.a(0), Mat::identity(2, 2));
        for n in 1..5 {
            assert_eq!(pen.a(n), Mat::zeros(2, 2));
        }
    }

    #[test]
    fn eval_at_zero_is_identity() {
        let model = random_model(4, 3, 5);
        let e = model.eval(c(0.0, 0.0));
        assert!((e - to_complex(&Mat::identity(4, 4))).camax() < 1e-15);
        let pe = model.taylor_at_one().eval(c(0.0, 0.0));
        assert!((pe - to_complex(&Mat::identity(4, 4))).camax() < 1e-13);
    }

    #[test]
    fn band_model_at_one_is_a0() {
        let model = fixtures::i1_band(0.5);
        let a0 = model.eval(c(1.0, 0.0));
        let mut expected = Mat::zeros(6, 6);
        for i in 1..6 {
            expected[(i, i)] = 0.5;
        }
        assert!((a0 - to_complex(&expected)).camax() < 1e-15);
    }

    #[test]
    fn both_forms_agree_at_point_three() {
        let model = random_model(5, 3, 9);
        let a = model.eval(c(0.3, 0.0));
        let b = model.taylor_at_one().eval(c(0.3, 0.0));
        assert!((a - b).camax() < 1e-10);
    }

    #[test]
    fn ar_coeffs_round_trip() {
        let model = random_model(3, 3, 2);
        let back = model.taylor_at_one().ar_coeffs();
        for (x, y) in model.coeffs().iter().zip(&back) {
            assert!((x - y).camax() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = random_model(3, 2, 4)
            .with_noise_cov(Mat::from_row_slice(
                3,
                3,
                &[2.0, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 0.5],
            ))
            .unwrap()
            .with_policy(PolicyOverrides {
                rel_tol: Some(1e-10),
                ..Default::default()
            })
            .unwrap();
        let text = model.to_json();
        let back = ArModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn schema_errors() {
        assert!(ArModel::from_json(r#"{"p":2,"k":1,"coeffs":[[[1,0],[0]]]}"#).is_err());
        assert!(ArModel::from_json(r#"{"p":1,"k":2,"coeffs":[[[1]]]}"#).is_err());
        assert!(ArModel::from_json(r#"{"p":1,"k":1,"coeffs":[[[1]]],"extra":1}"#).is_err());
        assert!(ArModel::from_json(r#"{"p":1,"k":1,"coeffs":[[[1]]],"noise_cov":[[-1]]}"#).is_err());
        assert!(ArModel::from_json(r#"{"p":1,"k":1,"coeffs":[[[1]]],"policy":{"rel_tol":2}}"#).is_err());
        assert!(ArModel::from_json(r#"{"p":1,"k":1,"coeffs":[[[1]]]}"#).is_ok());
    }

    proptest! {
        #[test]
        fn expansion_reproduces_polynomial(seed in any::<u64>(), p in 1usize..5, k in 1usize..4,
                                           re in -1.5f64..1.5, im in -1.5f64..1.5) {
            let model = random_model(p, k, seed);
            let z = c(re, im);
            let a = model.eval(z);
            let b = model.taylor_at_one().eval(z);
            prop_assert!((a - b).camax() < 1e-9);
        }

        #[test]
        fn json_round_trip(seed in any::<u64>(), p in 1usize..5, k in 1usize..4) {
            let model = random_model(p, k, seed);
            let back = ArModel::from_json(&model.to_json()).unwrap();
            prop_assert_eq!(back, model);
        }
    }
}
