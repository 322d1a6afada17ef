//! The `S_h` recursion: integration order, the `ζ_h`/`τ_h` chains, attractor
//! and cointegrating spaces, and polynomial cointegrating relations.
//!
//! ```text
//! S_0 = A_0,  S_h = P_{Z_h^⊥} A_{h,1} P_{T_h^⊥},
//! ζ_h = Im S_h,  τ_h = (Ker S_h)^⊥,
//! Z_h = ζ_0 ⊕ … ⊕ ζ_{h−1},  T_h = τ_0 ⊕ … ⊕ τ_{h−1},
//! A_{1,n} = A_n,  A_{h,n} = A_{h−1,n+1} − A_{h−1,1} Σ_{j=0}^{h−2} S_j^+ A_{j+1,n}.
//! ```
//!
//! The recursion stops at the first `h` with `T_{h+1} = R^p`; that `h` is the
//! integration order `d`, `τ_d` is the attractor and `T_d` the cointegrating
//! space. Zero-dimensional `τ_h` do not stop it.

use nalgebra::{Complex, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{identity_residuals, LaurentSeries};
use crate::linalg::{
    complement, direct_sum_check, eigenvalues, image, image_scaled, kernel, orthogonal_sum, projector, rank_scaled,
    reveal, spectral_norm, subspace_distance, DirectSumReport, Mat, RankPolicy, Subspace,
};
use crate::model::TaylorPencil;
use crate::roots::riesz_projector;

/// One step of the recursion.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub h: usize,
    pub s: Mat,
    pub s_pinv: Mat,
    pub zeta: Subspace,
    pub tau: Subspace,
    /// `Z_h^⊥`.
    pub z_perp: Subspace,
    /// `T_h^⊥`.
    pub t_perp: Subspace,
    /// `A_{h+1,n}` for `n = 1, 2, …` (index `n − 1`).
    pub a_next: Vec<Mat>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub d: usize,
    pub steps: Vec<StepRecord>,
    /// `τ_d`.
    pub attractor: Subspace,
    /// `T_d = τ_0 ⊕ … ⊕ τ_{d−1}`.
    pub coint_space: Subspace,
    /// `Z_d = ζ_0 ⊕ … ⊕ ζ_{d−1}`.
    pub z_space: Subspace,
    /// `dim τ_0, …, dim τ_d`.
    pub dims: Vec<usize>,
}

impl Decomposition {
    pub fn p(&self) -> usize {
        self.attractor.ambient_dim()
    }

    pub fn tau(&self, h: usize) -> &Subspace {
        &self.steps[h].tau
    }

    pub fn zeta(&self, h: usize) -> &Subspace {
        &self.steps[h].zeta
    }

    /// `A_{h,n}` for `h ≥ 1`, `n ≥ 1`, as far as the ledger reaches.
    pub fn a_hn(&self, h: usize, n: usize) -> Option<&Mat> {
        if h == 0 || n == 0 {
            return None;
        }
        self.steps.get(h - 1)?.a_next.get(n - 1)
    }
}

/// Maximum number of steps; the companion dimension bounds every Jordan
/// chain at 1.
fn step_cap(pencil: &TaylorPencil) -> usize {
    pencil.p() * pencil.degree().max(1)
}

pub fn decompose(pencil: &TaylorPencil, policy: &RankPolicy) -> Result<Decomposition> {
    let p = pencil.p();
    let cap = step_cap(pencil);
    let ledger_len = cap + 2;
    let base_scale = pencil.scale();

    let mut steps: Vec<StepRecord> = Vec::new();
    let mut z_space = Subspace::zero(p);
    let mut t_space = Subspace::zero(p);
    // A_{h,·} for the current h (starting at h = 1)
    let mut a_cur: Vec<Mat> = (1..=ledger_len).map(|n| pencil.a(n)).collect();

    for h in 0..=cap {
        let z_perp = complement(&z_space);
        let t_perp = complement(&t_space);
        let (s, scale) = if h == 0 {
            (pencil.a(0), base_scale)
        } else {
            let a1 = &a_cur[0];
            let s = projector(&z_perp) * a1 * projector(&t_perp);
            (s, spectral_norm(a1))
        };
        let rr = reveal(&s, policy, scale);
        debug_assert!(
            (&rr.pinv * &s - projector(&rr.kernel_perp)).amax() < 1e-8 * (1.0 + rr.pinv.amax() * s.amax()),
            "S_h^+ S_h != P_tau at step {h}"
        );
        debug_assert!(
            (&s * &rr.pinv - projector(&rr.image)).amax() < 1e-8 * (1.0 + rr.pinv.amax() * s.amax()),
            "S_h S_h^+ != P_zeta at step {h}"
        );

        // A_{h+1,·}
        let a_next: Vec<Mat> = if h == 0 {
            a_cur.clone()
        } else {
            let a1 = a_cur[0].clone();
            (1..a_cur.len())
                .map(|n| {
                    let mut sum = Mat::zeros(p, p);
                    // S_j^+ A_{j+1,n}, j = 0..h−1
                    for step in &steps {
                        sum += &step.s_pinv * &step.a_next[n - 1];
                    }
                    &a_cur[n] - &a1 * sum
                })
                .collect()
        };

        z_space = orthogonal_sum(&[&z_space, &rr.image]);
        t_space = orthogonal_sum(&[&t_space, &rr.kernel_perp]);
        let done = t_space.rank() == p;
        let record = StepRecord {
            h,
            s,
            s_pinv: rr.pinv.clone(),
            zeta: rr.image.clone(),
            tau: rr.kernel_perp.clone(),
            z_perp,
            t_perp,
            a_next: a_next.clone(),
            singular_values: rr.singular_values.clone(),
            threshold: rr.threshold,
        };
        if done && h == 0 {
            return Err(Error::Precondition("A(1) is invertible: no unit root at z = 1".into()));
        }
        steps.push(record);
        if done {
            let d = h;
            let dims = steps.iter().map(|s| s.tau.rank()).collect();
            let attractor = steps[d].tau.clone();
            let coint_space = complement(&steps[d].t_perp);
            let z_d = complement(&steps[d].z_perp);
            return Ok(Decomposition {
                d,
                steps,
                attractor,
                coint_space,
                z_space: z_d,
                dims,
            });
        }
        a_cur = a_next;
    }
    Err(Error::DCapExceeded { cap })
}

/// Coefficients of a polynomial cointegrating relation for `v ∈ τ_h`:
/// `⟨v, x_t⟩ + Σ_n ⟨v, coeffs[n−1] Δ^n x_t⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCointRelation {
    pub h: usize,
    /// `S_h^+ A_{h+1,n}` for `n = 1..d−h−1`.
    pub coeffs: Vec<Mat>,
}

impl PolyCointRelation {
    /// Row vectors `coeffs[n]ᵀ v`, so that the relation reads
    /// `⟨v, x_t⟩ + Σ_n ⟨w_n, Δ^n x_t⟩`.
    pub fn weights(&self, v: &DVector<f64>) -> Vec<DVector<f64>> {
        self.coeffs.iter().map(|c| c.transpose() * v).collect()
    }
}

pub fn relations(dec: &Decomposition, h: usize) -> Result<PolyCointRelation> {
    if h > dec.d {
        return Err(Error::IndexOutOfRange { index: h, max: dec.d });
    }
    let step = &dec.steps[h];
    let terms = dec.d.saturating_sub(h + 1);
    let coeffs = (0..terms).map(|i| &step.s_pinv * &step.a_next[i]).collect();
    Ok(PolyCointRelation { h, coeffs })
}

/// For `d = 2` only: the `h = 0` relation with `Δx_t` replaced by
/// `P_{τ_2} Δx_t`, which drops stationary terms that are not needed for
/// cointegration.
pub fn relations_projected(dec: &Decomposition, h: usize) -> Result<PolyCointRelation> {
    if dec.d != 2 {
        return Err(Error::InvalidArgument(format!(
            "the projected relation is defined for d = 2 only (d = {})",
            dec.d
        )));
    }
    let mut rel = relations(dec, h)?;
    let proj = projector(&dec.attractor);
    for c in &mut rel.coeffs {
        *c = &*c * &proj;
    }
    Ok(rel)
}

const EQUIV_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceItem {
    pub statement: String,
    pub holds: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub items: Vec<EquivalenceItem>,
    pub all_agree: bool,
}

/// Checks the mutually equivalent characterisations of a pole of order `d`.
pub fn verify_pole_equivalences(
    dec: &Decomposition,
    pencil: &TaylorPencil,
    series: &LaurentSeries,
    policy: &RankPolicy,
) -> EquivalenceReport {
    let d = dec.d;
    let c0 = &series.coeffs[0];
    let res = identity_residuals(pencil, series);
    let mut items = Vec::new();

    let c0_norm = spectral_norm(c0);
    items.push(EquivalenceItem {
        statement: "A(z)^{-1} has a pole of order d at z = 1 (C_0 != 0)".into(),
        holds: c0_norm > EQUIV_TOL && res.max_residual() < EQUIV_TOL,
        residual: res.max_residual(),
    });
    let eq_d = res.equation_residual_up_to(d);
    items.push(EquivalenceItem {
        statement: "the identity first appears in equation d of the system".into(),
        holds: eq_d < EQUIV_TOL,
        residual: eq_d,
    });

    let zeta_d = dec.zeta(d);
    let z_perp = &dec.steps[d].z_perp;
    let r = subspace_distance(zeta_d, z_perp);
    items.push(EquivalenceItem {
        statement: "zeta_d = Z_d^perp != 0".into(),
        holds: r < EQUIV_TOL && !zeta_d.is_zero(),
        residual: r,
    });

    let ker_c0 = kernel(c0, policy);
    let r = subspace_distance(&ker_c0, &dec.z_space);
    items.push(EquivalenceItem {
        statement: "Ker C_0 = Z_d".into(),
        holds: r < EQUIV_TOL,
        residual: r,
    });

    let tau_d = dec.tau(d);
    let r = subspace_distance(tau_d, &dec.steps[d].t_perp);
    items.push(EquivalenceItem {
        statement: "tau_d = T_d^perp != 0".into(),
        holds: r < EQUIV_TOL && !tau_d.is_zero(),
        residual: r,
    });

    let im_c0 = image(c0, policy);
    let r = subspace_distance(&im_c0, tau_d);
    items.push(EquivalenceItem {
        statement: "Im C_0 = tau_d".into(),
        holds: r < EQUIV_TOL,
        residual: r,
    });

    let taus: Vec<&Subspace> = dec.steps.iter().map(|s| &s.tau).collect();
    let zetas: Vec<&Subspace> = dec.steps.iter().map(|s| &s.zeta).collect();
    for (name, parts) in [("tau", &taus), ("zeta", &zetas)] {
        let rep = direct_sum_check(parts, policy);
        items.push(EquivalenceItem {
            statement: format!("R^p = {name}_0 + ... + {name}_d (direct sum)"),
            holds: rep.is_direct_sum,
            residual: (1.0 - rep.min_singular_value).abs(),
        });
    }

    let all_agree = items.iter().all(|i| i.holds);
    EquivalenceReport { items, all_agree }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceLemmaResidual {
    pub h: usize,
    pub n: usize,
    pub left: f64,
    pub right: f64,
}

/// Mirror image of the `A_{h,n}` ledger, built from the right:
/// `Ã_{1,n} = A_n`, `Ã_{h+1,n} = Ã_{h,n+1} − (Σ_{i<h} Ã_{i+1,n} S_i^+) Ã_{h,1}`.
/// Entry `[h][n − 1]` is `Ã_{h+1,n}`.
fn right_ledger(dec: &Decomposition, pencil: &TaylorPencil, len: usize) -> Vec<Vec<Mat>> {
    let p = dec.p();
    let mut ledger: Vec<Vec<Mat>> = vec![(1..=len + dec.d).map(|n| pencil.a(n)).collect()];
    for h in 1..=dec.d {
        let prev = &ledger[h - 1];
        let next = (1..prev.len())
            .map(|n| {
                let mut sum = Mat::zeros(p, p);
                for (i, step) in dec.steps.iter().take(h).enumerate() {
                    sum += &ledger[i][n - 1] * &step.s_pinv;
                }
                &prev[n] - sum * &prev[0]
            })
            .collect();
        ledger.push(next);
    }
    ledger
}

/// For `n + h ≤ d`:
/// `S_h C_n + P_{Z_h^⊥} Σ_{k=1}^n A_{h+1,k} C_{n−k} = δ_{n+h,d} P_{Z_h^⊥}` and
/// `C_n S_h + Σ_{k=1}^n C_{n−k} Ã_{h+1,k} P_{T_h^⊥} = δ_{n+h,d} P_{T_h^⊥}`,
/// residuals in Frobenius norm. The right-hand version uses the mirrored
/// ledger; with `A_{h+1,k}` in its place it fails once `d ≥ 3`.
pub fn subspace_lemma_residuals(
    dec: &Decomposition,
    pencil: &TaylorPencil,
    series: &LaurentSeries,
) -> Vec<SubspaceLemmaResidual> {
    let d = dec.d;
    let c = &series.coeffs;
    let right_a = right_ledger(dec, pencil, d + 1);
    let mut out = Vec::new();
    for (h, step) in dec.steps.iter().enumerate() {
        let pz = projector(&step.z_perp);
        let pt = projector(&step.t_perp);
        for n in 0..=(d - h) {
            let mut left = &step.s * &c[n];
            let mut right = &c[n] * &step.s;
            for k in 1..=n {
                left += &pz * &step.a_next[k - 1] * &c[n - k];
                right += &c[n - k] * &right_a[h][k - 1] * &pt;
            }
            if n + h == d {
                left -= &pz;
                right -= &pt;
            }
            out.push(SubspaceLemmaResidual {
                h,
                n,
                left: left.norm(),
                right: right.norm(),
            });
        }
    }
    out
}

/// Principal part of `γ_h(z) A(z)^{-1}` with
/// `γ_h(z) = P_{τ_h} + S_h^+ Σ_{n=1}^{d−h−1} A_{h+1,n} (1−z)^n`:
/// entry `i` is the coefficient of `(1−z)^{-(d−i)}`, `i = 0..d`.
/// For `v ∈ τ_h` the entries with `d − i > h` vanish.
pub fn gamma_principal_part(dec: &Decomposition, series: &LaurentSeries, h: usize) -> Result<Vec<Mat>> {
    let rel = relations(dec, h)?;
    let mut gamma = vec![projector(dec.tau(h))];
    gamma.extend(rel.coeffs);
    let c = &series.coeffs;
    Ok((0..dec.d)
        .map(|j| {
            let mut acc = Mat::zeros(dec.p(), dec.p());
            for (n, g) in gamma.iter().enumerate().take(j + 1) {
                acc += g * &c[j - n];
            }
            acc
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectSumOutcome {
    Holds,
    Fails,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplePoleCheck {
    pub outcome: DirectSumOutcome,
    pub report: Option<DirectSumReport>,
}

/// `R^p = Im A_0 ⊕ A_1 Ker A_0`, which holds exactly when `d = 1`.
pub fn simple_pole_check(pencil: &TaylorPencil, policy: &RankPolicy) -> SimplePoleCheck {
    let scale = pencil.scale();
    let rr = reveal(&pencil.a(0), policy, scale);
    let ker = complement(&rr.kernel_perp);
    if ker.is_zero() {
        return SimplePoleCheck {
            outcome: DirectSumOutcome::NotApplicable,
            report: None,
        };
    }
    let a1_ker = image_scaled(&(pencil.a(1) * ker.basis()), policy, scale);
    let report = direct_sum_check(&[&rr.image, &a1_ker], policy);
    SimplePoleCheck {
        outcome: if report.is_direct_sum {
            DirectSumOutcome::Holds
        } else {
            DirectSumOutcome::Fails
        },
        report: Some(report),
    }
}

/// Index of the eigenvalue 1 of `A°_1`: the nilpotency index of `A°_1 − I`
/// restricted to the generalized eigenspace at 1, found by rank
/// stabilisation of its powers.
///
/// The generalized eigenspace is the range of the Riesz projector around 1,
/// which keeps this route independent of the `S_h` recursion.
pub fn jordan_oracle_ar1(a1: &Mat, policy: &RankPolicy) -> Result<usize> {
    let p = a1.nrows();
    let one = Complex::new(1.0, 0.0);
    let eig: Vec<Complex<f64>> = eigenvalues(a1);
    let cluster_radius = 1e-3;
    if !eig.iter().any(|l| (l - one).norm() < cluster_radius) {
        return Err(Error::NoUnitEigenvalue);
    }
    let gap = eig
        .iter()
        .map(|l| (l - one).norm())
        .filter(|&x| x >= cluster_radius)
        .fold(f64::INFINITY, f64::min);
    let radius = (gap / 2.0).min(0.5);
    let proj = riesz_projector(a1, one, radius, 128).ok_or(Error::NoUnitEigenvalue)?;
    let g = image(&proj, policy);
    if g.is_zero() {
        return Err(Error::NoUnitEigenvalue);
    }
    let n = a1 - Mat::identity(p, p);
    let ng = g.basis().transpose() * n * g.basis();
    let scale = spectral_norm(&ng).max(1.0);
    let r = g.rank();
    let mut power = Mat::identity(r, r);
    let mut ranks = vec![r];
    for m in 1..=(r + 1) {
        power = &power * &ng;
        ranks.push(rank_scaled(&power, policy, scale.powi(m as i32)));
        if ranks[m] == ranks[m - 1] {
            return Ok((m - 1).max(1));
        }
    }
    Ok(r)
}
