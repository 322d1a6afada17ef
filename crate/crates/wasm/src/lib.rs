//! Browser bindings. Every entry point takes and returns JSON strings; the
//! plain functions are usable (and tested) natively, the `#[wasm_bindgen]`
//! wrappers only convert errors.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hcoint::report::{run, AnalysisReport, AnalyzeOptions};
use hcoint::simulate::{gaussian_noise, relation_table, simulate_ar, Panel};
use hcoint::yield_curve::yield_demo;
use hcoint::{fixtures, ArModel};

/// Longest path the page may request.
pub const MAX_T: usize = 20_000;

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    report: &'a AnalysisReport,
    text: String,
}

#[derive(Serialize)]
struct Columns {
    t: Vec<i64>,
    names: Vec<String>,
    /// One vector per column.
    values: Vec<Vec<f64>>,
}

impl Columns {
    fn from_panel(names: Vec<String>, panel: &Panel) -> Self {
        Self {
            t: (panel.t_min()..=panel.t_max()).collect(),
            names,
            values: panel
                .values()
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
        }
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Model file for `i1_band`, `i2_band` or `stationary`.
pub fn fixture_spec(name: &str) -> Result<String, String> {
    let model = match name {
        "i1_band" => fixtures::i1_band(0.5),
        "i2_band" => fixtures::i2_band(0.5),
        "stationary" => fixtures::stationary(),
        other => return Err(format!("unknown fixture {other}")),
    };
    Ok(model.to_json_pretty())
}

/// `{report, text}` for a model file.
pub fn analyze_spec(spec: &str, rel_tol: Option<f64>, radius: Option<f64>) -> Result<String, String> {
    let model = ArModel::from_json(spec).map_err(err)?;
    let report = run(&model, &AnalyzeOptions { rel_tol, radius }).map_err(err)?.report;
    serde_json::to_string(&AnalyzeOutput {
        text: report.to_text(),
        report: &report,
    })
    .map_err(err)
}

/// Sample path for `t = 1..=t_len` as columns, or the relation-corrected
/// characteristics when `relations` is set.
pub fn simulate_spec(spec: &str, t_len: usize, seed: u64, relations: bool) -> Result<String, String> {
    if t_len == 0 || t_len > MAX_T {
        return Err(format!("T must lie in 1..={MAX_T}"));
    }
    let model = ArModel::from_json(spec).map_err(err)?;
    let shocks =
        gaussian_noise(model.p(), &model.noise_cov(), 1 - model.k() as i64, t_len as i64, seed).map_err(err)?;
    let x = simulate_ar(&model, &shocks).map_err(err)?.panel;
    let cols = if relations {
        let analysis = run(&model, &AnalyzeOptions::default()).map_err(err)?;
        let dec = analysis
            .dec
            .ok_or_else(|| format!("no unit root of finite type: {:?}", analysis.verdict))?;
        let (names, table) = relation_table(&dec, &x, 1).map_err(err)?;
        Columns::from_panel(names, &table)
    } else {
        let names = (1..=model.p()).map(|i| format!("x_{i}")).collect();
        Columns::from_panel(names, &x.tail_from(1))
    };
    serde_json::to_string(&cols).map_err(err)
}

/// Yield-curve demo together with the level, slope and curvature series.
pub fn yield_demo_json(grid: usize, t_len: usize, seed: u64) -> Result<String, String> {
    if t_len > MAX_T {
        return Err(format!("T must be at most {MAX_T}"));
    }
    let demo = yield_demo(grid, t_len, seed).map_err(err)?;
    serde_json::to_string(&demo).map_err(err)
}

#[wasm_bindgen]
pub fn fixture(name: &str) -> Result<String, JsError> {
    fixture_spec(name).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze(spec: &str, rel_tol: Option<f64>, radius: Option<f64>) -> Result<String, JsError> {
    analyze_spec(spec, rel_tol, radius).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(spec: &str, t_len: usize, seed: u64, relations: bool) -> Result<String, JsError> {
    simulate_spec(spec, t_len, seed, relations).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = yieldDemo)]
pub fn yield_demo_js(grid: usize, t_len: usize, seed: u64) -> Result<String, JsError> {
    yield_demo_json(grid, t_len, seed).map_err(|e| JsError::new(&e))
}
