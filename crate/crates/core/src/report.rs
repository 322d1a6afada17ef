//! The full analysis pipeline and its serialisable report.
//!
//! validate → expand at 1 → root diagnostics → decompose → Laurent
//! coefficients → equivalence checks → report.

use serde::{Deserialize, Serialize};

use crate::decomp::{
    decompose, jordan_oracle_ar1, relations, simple_pole_check, subspace_lemma_residuals, verify_pole_equivalences,
    Decomposition, DirectSumOutcome, EquivalenceReport, SubspaceLemmaResidual,
};
use crate::error::Result;
use crate::laurent::{laurent_coeffs, LaurentCertificate, LaurentOptions, LaurentSeries};
use crate::linalg::{Mat, RankPolicy, Subspace};
use crate::model::{ArModel, TaylorPencil};
use crate::roots::{assert_finite_type, root_diagnostics, Eigenvalue, RootDiagnostics, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalyzeOptions {
    /// Replaces the relative rank tolerance from the model file.
    pub rel_tol: Option<f64>,
    /// Contour radius for the Laurent coefficients.
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSummary {
    pub eigenvalues: Vec<Eigenvalue>,
    pub unit_cluster_size: usize,
    pub unit_cluster_offset: Option<f64>,
    pub max_other_modulus: f64,
    pub nearest_other_root_distance: Option<f64>,
    pub dim_ker_a0: usize,
    pub dim_coker_a0: usize,
    pub a0_vanishes: bool,
}

impl From<&RootDiagnostics> for RootSummary {
    fn from(d: &RootDiagnostics) -> Self {
        Self {
            eigenvalues: d.eigenvalues.clone(),
            unit_cluster_size: d.unit_cluster_size,
            unit_cluster_offset: d.unit_cluster_offset,
            max_other_modulus: d.max_other_modulus,
            nearest_other_root_distance: d.nearest_other_root_distance,
            dim_ker_a0: d.dim_ker_a0,
            dim_coker_a0: d.dim_coker_a0,
            a0_vanishes: d.a0_vanishes,
        }
    }
}

/// Coefficient matrices (row-major) of the relation for `v ∈ τ_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTemplate {
    pub h: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub equivalences: EquivalenceReport,
    pub subspace_lemma: Vec<SubspaceLemmaResidual>,
    pub subspace_lemma_max: f64,
    pub direct_sum: DirectSumOutcome,
    pub direct_sum_agrees: bool,
    pub jordan_oracle_d: Option<usize>,
    pub jordan_agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub p: usize,
    pub k: usize,
    pub verdict: Verdict,
    pub roots: RootSummary,
    pub d: Option<usize>,
    pub tau_dims: Vec<usize>,
    /// Basis vectors of each `τ_h`, first nonzero entry positive.
    pub tau_bases: Vec<Vec<Vec<f64>>>,
    pub attractor: Vec<Vec<f64>>,
    pub coint_space: Vec<Vec<f64>>,
    pub relations: Vec<RelationTemplate>,
    pub checks: Option<Checks>,
    pub laurent: Option<LaurentCertificate>,
    pub policy: RankPolicy,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report is serialisable")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = match self.verdict {
            Verdict::Pass => "PASS".to_string(),
            Verdict::Fail(r) => format!("FAIL ({r:?})"),
        };
        s += &format!("model: p = {}, k = {}\n", self.p, self.k);
        s += &format!("finite-type unit root: {verdict}\n");
        s += &format!(
            "dim Ker A_0 = {}, unit cluster size = {}\n",
            self.roots.dim_ker_a0, self.roots.unit_cluster_size
        );
        let Some(d) = self.d else {
            return s;
        };
        s += &format!("integration order d = {d}\n");
        s += &format!("dim tau_h = {:?}\n", self.tau_dims);
        for (h, b) in self.tau_bases.iter().enumerate() {
            s += &format!("tau_{h}:\n");
            for v in b {
                s += &format!("  {}\n", fmt_vec(v));
            }
        }
        for rel in &self.relations {
            s += &format!("relation h = {}: {} difference term(s)\n", rel.h, rel.coeffs.len());
            for (n, c) in rel.coeffs.iter().enumerate() {
                s += &format!("  coefficient of Δ^{}:\n", n + 1);
                for row in c {
                    s += &format!("    {}\n", fmt_vec(row));
                }
            }
        }
        if let Some(l) = &self.laurent {
            s += &format!(
                "Laurent: radius = {}, nodes = {}, residual = {:.3e}, max imag = {:.3e}\n",
                l.radius, l.nodes, l.residual, l.max_imag
            );
        }
        if let Some(c) = &self.checks {
            s += "checks:\n";
            for item in &c.equivalences.items {
                s += &format!(
                    "  [{}] {} (residual {:.3e})\n",
                    if item.holds { "ok" } else { "FAIL" },
                    item.statement,
                    item.residual
                );
            }
            s += &format!("  subspace lemma max residual {:.3e}\n", c.subspace_lemma_max);
            s += &format!(
                "  direct-sum pole-1 test: {:?} (agrees: {})\n",
                c.direct_sum, c.direct_sum_agrees
            );
            if let Some(j) = c.jordan_oracle_d {
                s += &format!("  Jordan oracle d = {j}\n");
            }
        }
        s
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:>10.6}")).collect();
    format!("[{}]", parts.join(" "))
}

fn basis_rows(s: &Subspace) -> Vec<Vec<f64>> {
    s.canonical_basis()
        .column_iter()
        .map(|c| c.iter().map(|&x| if x == 0.0 { 0.0 } else { x }).collect())
        .collect()
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Everything computed along the way, for callers that go on to simulate.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub model: ArModel,
    pub pencil: TaylorPencil,
    pub policy: RankPolicy,
    pub diagnostics: RootDiagnostics,
    pub verdict: Verdict,
    pub dec: Option<Decomposition>,
    pub series: Option<LaurentSeries>,
    pub report: AnalysisReport,
}

pub fn run(model: &ArModel, opts: &AnalyzeOptions) -> Result<Analysis> {
    let mut policy = model.rank_policy()?;
    if let Some(t) = opts.rel_tol {
        policy = RankPolicy::new(t, policy.abs_floor)?;
    }
    let pencil = model.taylor_at_one();
    let diagnostics = root_diagnostics(model, &policy);
    let verdict = assert_finite_type(&diagnostics);
    let mut report = AnalysisReport {
        schema: SCHEMA_VERSION,
        p: model.p(),
        k: model.k(),
        verdict,
        roots: RootSummary::from(&diagnostics),
        d: None,
        tau_dims: Vec::new(),
        tau_bases: Vec::new(),
        attractor: Vec::new(),
        coint_space: Vec::new(),
        relations: Vec::new(),
        checks: None,
        laurent: None,
        policy,
    };
    if !verdict.is_pass() {
        return Ok(Analysis {
            model: model.clone(),
            pencil,
            policy,
            diagnostics,
            verdict,
            dec: None,
            series: None,
            report,
        });
    }

    let dec = decompose(&pencil, &policy)?;
    let series = laurent_coeffs(
        &pencil,
        dec.d,
        &LaurentOptions {
            radius: opts.radius,
            ..Default::default()
        },
    )?;
    let equivalences = verify_pole_equivalences(&dec, &pencil, &series, &policy);
    let subspace_lemma = subspace_lemma_residuals(&dec, &pencil, &series);
    let subspace_lemma_max = subspace_lemma.iter().map(|r| r.left.max(r.right)).fold(0.0, f64::max);
    let direct_sum = simple_pole_check(&pencil, &policy).outcome;
    let jordan_oracle_d = if model.k() == 1 {
        jordan_oracle_ar1(&model.coeffs()[0], &policy).ok()
    } else {
        None
    };

    report.d = Some(dec.d);
    report.tau_dims = dec.dims.clone();
    report.tau_bases = dec.steps.iter().map(|s| basis_rows(&s.tau)).collect();
    report.attractor = basis_rows(&dec.attractor);
    report.coint_space = basis_rows(&dec.coint_space);
    report.relations = (0..=dec.d)
        .map(|h| {
            let rel = relations(&dec, h).expect("h <= d");
            RelationTemplate {
                h,
                coeffs: rel.coeffs.iter().map(mat_rows).collect(),
            }
        })
        .collect();
    report.checks = Some(Checks {
        equivalences,
        subspace_lemma,
        subspace_lemma_max,
        direct_sum,
        direct_sum_agrees: (direct_sum == DirectSumOutcome::Holds) == (dec.d == 1),
        jordan_oracle_d,
        jordan_agrees: jordan_oracle_d.map(|j| j == dec.d),
    });
    report.laurent = Some(series.certificate());

    Ok(Analysis {
        model: model.clone(),
        pencil,
        policy,
        diagnostics,
        verdict,
        dec: Some(dec),
        series: Some(series),
        report,
    })
}

pub fn analyze(model: &ArModel, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    Ok(run(model, opts)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::roots::FailReason;

    #[test]
    fn i1_report() {
        let r = analyze(&fixtures::i1_band(0.5), &Default::default()).unwrap();
        assert_eq!(r.d, Some(1));
        assert_eq!(r.tau_dims, vec![5, 1]);
        assert_eq!(r.attractor, vec![vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]]);
        let c = r.checks.as_ref().unwrap();
        assert!(c.equivalences.all_agree && c.direct_sum_agrees);
        assert_eq!(c.jordan_agrees, Some(true));
    }

    #[test]
    fn i2_report_relation() {
        let r = analyze(&fixtures::i2_band(0.5), &Default::default()).unwrap();
        assert_eq!(r.d, Some(2));
        assert_eq!(r.tau_dims, vec![4, 1, 1]);
        assert_eq!(r.relations.len(), 3);
        let c = &r.relations[0].coeffs[0];
        // row 2 of A_0^+ A_1
        assert!((c[1][0] + 1.0).abs() < 1e-12 && (c[1][1] + 1.0).abs() < 1e-12);
        assert!(r.relations[1].coeffs.is_empty());
    }

    #[test]
    fn stationary_report_fails() {
        let r = analyze(&fixtures::stationary(), &Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail(FailReason::NoUnitRoot));
        assert_eq!(r.d, None);
    }

    #[test]
    fn report_round_trips() {
        for m in [fixtures::i1_band(0.5), fixtures::i2_band(0.5), fixtures::stationary()] {
            let r = analyze(&m, &Default::default()).unwrap();
            let back = AnalysisReport::from_json(&r.to_json()).unwrap();
            assert_eq!(back, r);
            assert_eq!(back.to_json(), r.to_json());
        }
    }

    #[test]
    fn text_summary_mentions_order() {
        let r = analyze(&fixtures::i2_band(0.5), &Default::default()).unwrap();
        assert!(r.to_text().contains("integration order d = 2"));
    }
}
