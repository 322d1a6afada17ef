//! Level, slope and curvature characteristics of a curve sampled on a grid
//! of `p` equal cells of `(0, 1]`.
//!
//! A function `v` is represented by `√p · ∫_cell v` on each cell, so that the
//! Euclidean inner product of two step functions on the grid equals their
//! `L²(0, 1)` inner product.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::ArModel;
use crate::report::{run, AnalysisReport, AnalyzeOptions};
use crate::simulate::{gaussian_noise, growth_diagnostic, simulate_ar, v_characteristic, GrowthDiagnostic};

pub const MIN_GRID: usize = 4;
const PROJECTION_TOL: f64 = 1e-8;

/// Piecewise-constant function on `(0, 1]`: `(a, b, value)` triples.
type StepFunction = &'static [(f64, f64, f64)];

const LEVEL: StepFunction = &[(0.0, 1.0, 1.0)];
const SLOPE: StepFunction = &[(0.0, 0.5, -0.5), (0.5, 1.0, 0.5)];
const CURVATURE: StepFunction = &[
    (0.0, 0.25, 0.25),
    (0.25, 0.5, -0.25),
    (0.5, 0.75, -0.25),
    (0.75, 1.0, 0.25),
];

fn discretize(f: StepFunction, p: usize) -> DVector<f64> {
    let scale = (p as f64).sqrt();
    DVector::from_fn(p, |i, _| {
        let (lo, hi) = (i as f64 / p as f64, (i + 1) as f64 / p as f64);
        let integral: f64 = f
            .iter()
            .map(|&(a, b, val)| val * (hi.min(b) - lo.max(a)).max(0.0))
            .sum();
        scale * integral
    })
}

fn check_grid(p: usize) -> Result<()> {
    if p < MIN_GRID {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least {MIN_GRID} cells, got {p}"
        )));
    }
    Ok(())
}

/// `[v_0, v_1, v_2]` on a grid of `p` cells.
pub fn characteristics(p: usize) -> Result<[DVector<f64>; 3]> {
    check_grid(p)?;
    Ok([discretize(LEVEL, p), discretize(SLOPE, p), discretize(CURVATURE, p)])
}

/// `A°_1 = P_{v_0} + 0.9·P_{v_1} + 0.5·(I − P_{v_0} − P_{v_1})`: a random
/// walk in the level, a persistent stationary slope, everything else AR(1)
/// with coefficient 0.5.
pub fn demo_model(p: usize) -> Result<ArModel> {
    let [v0, v1, _] = characteristics(p)?;
    let proj = |v: &DVector<f64>| {
        let u = v.normalize();
        &u * u.transpose()
    };
    let (p0, p1) = (proj(&v0), proj(&v1));
    let rest = Mat::identity(p, p) - &p0 - &p1;
    ArModel::new(vec![p0 + p1 * 0.9 + rest * 0.5])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicOrder {
    pub name: String,
    pub vector: Vec<f64>,
    /// `‖P_{τ_h} v‖ / ‖v‖` for `h = 0..=d`.
    pub projections: Vec<f64>,
    /// Largest `h` with a non-negligible component in `τ_h`.
    pub order: usize,
    pub empirical: GrowthDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldDemo {
    pub grid: usize,
    pub t: usize,
    pub seed: u64,
    pub report: AnalysisReport,
    pub characteristics: Vec<CharacteristicOrder>,
}

/// Analyzes the demo model on a grid of `p` cells and classifies the level,
/// slope and curvature characteristics, both from the `τ` chain and from a
/// simulated path of length `t_len`.
pub fn yield_demo(p: usize, t_len: usize, seed: u64) -> Result<YieldDemo> {
    let model = demo_model(p)?;
    let analysis = run(&model, &AnalyzeOptions::default())?;
    let dec = analysis
        .dec
        .as_ref()
        .ok_or_else(|| Error::Precondition("demo model has no unit root".into()))?;
    let shocks = gaussian_noise(p, &model.noise_cov(), 0, t_len as i64, seed)?;
    let path = simulate_ar(&model, &shocks)?;
    let names = ["level", "slope", "curvature"];
    let mut out = Vec::new();
    for (name, v) in names.iter().zip(characteristics(p)?) {
        let norm = v.norm();
        let projections: Vec<f64> = dec.steps.iter().map(|s| s.tau.project(&v).norm() / norm).collect();
        let order = projections.iter().rposition(|&x| x > PROJECTION_TOL).unwrap_or(0);
        let series = v_characteristic(&path.panel, &v, None);
        let empirical = growth_diagnostic(series.positive_part())?;
        out.push(CharacteristicOrder {
            name: name.to_string(),
            vector: v.iter().copied().collect(),
            projections,
            order,
            empirical,
        });
    }
    Ok(YieldDemo {
        grid: p,
        t: t_len,
        seed,
        report: analysis.report,
        characteristics: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_is_constant() {
        let [v0, _, _] = characteristics(8).unwrap();
        for x in v0.iter() {
            assert!((x - 1.0 / 8f64.sqrt()).abs() < 1e-15);
        }
        assert!((v0.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norms_match_l2() {
        // ‖v_1‖² = 1/4, ‖v_2‖² = 1/16 whenever the grid resolves the cells
        for p in [4, 8, 12, 16] {
            let [_, v1, v2] = characteristics(p).unwrap();
            assert!((v1.norm_squared() - 0.25).abs() < 1e-14);
            assert!((v2.norm_squared() - 1.0 / 16.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pairwise_orthogonal() {
        for p in (4..=20).step_by(2) {
            let [v0, v1, v2] = characteristics(p).unwrap();
            assert!(v0.dot(&v1).abs() < 1e-14, "p = {p}");
            assert!(v0.dot(&v2).abs() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn odd_grid_cell_overlap() {
        // p = 5: the middle cell (0.4, 0.6] straddles 1/2
        let [_, v1, _] = characteristics(5).unwrap();
        assert!(v1[2].abs() < 1e-15);
        assert!((v1[0] + 0.5 * 0.2 * 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(characteristics(3).is_err());
        assert!(characteristics(4).is_ok());
        assert!(demo_model(2).is_err());
    }

    #[test]
    fn demo_classification() {
        let demo = yield_demo(8, 2048, 1).unwrap();
        assert_eq!(demo.report.d, Some(1));
        let orders: Vec<usize> = demo.characteristics.iter().map(|c| c.order).collect();
        assert_eq!(orders, vec![1, 0, 0]);
        let emp: Vec<usize> = demo.characteristics.iter().map(|c| c.empirical.order).collect();
        assert_eq!(emp, vec![1, 0, 0]);
    }
}
