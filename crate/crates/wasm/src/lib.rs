//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function takes plain values and returns a JSON string. The
//! `*_json` functions hold the logic and are callable from native tests.

use bes_core::bf;
use bes_core::dist::CoefDistribution;
use bes_core::rng::{self, Purpose, StreamKey};
use bes_core::sim;
use bes_core::simgen::{self, DataGenSpec, PlanCell};
use bes_core::{Alternative, ConstraintSystem, Family, SynthesisState};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct BetaTable {
    family: Family,
    r2: f64,
    names: Vec<String>,
    weights: Vec<f64>,
    beta: Vec<f64>,
    linear_predictor_variance: f64,
}

/// Population coefficients of the data generator for one family and R^2.
pub fn beta_table_json(family: &str, r2: f64) -> Result<String, String> {
    let family: Family = family.parse()?;
    let spec = DataGenSpec::new(family, 100, r2, 0);
    spec.validate().map_err(err)?;
    let table = BetaTable {
        family,
        r2,
        names: spec.predictor_names(),
        weights: spec.weights.clone(),
        beta: simgen::compute_beta(&spec).iter().copied().collect(),
        linear_predictor_variance: simgen::var_linear_predictor(family, r2),
    };
    serde_json::to_string(&table).map_err(err)
}

#[wasm_bindgen]
pub fn beta_table(family: &str, r2: f64) -> Result<String, JsError> {
    js(beta_table_json(family, r2))
}

#[derive(Serialize)]
struct HypothesisResult {
    fit: f64,
    complexity: f64,
    #[serde(with = "bes_core::bf::sentinel")]
    log_bf_iu: f64,
    #[serde(with = "bes_core::bf::sentinel_opt")]
    log_bf_ic: Option<f64>,
    mc_se_log_bf_iu: f64,
    mc_draws: usize,
    prior_center: Vec<f64>,
    warnings: Vec<String>,
}

/// Evaluate `hypothesis` against a normal posterior given by its mean and
/// row-major covariance. The prior has covariance `cov / b` and is centred
/// on the hypothesis boundary.
pub fn evaluate_normal_json(
    hypothesis: &str,
    names: &str,
    mean: &[f64],
    cov: &[f64],
    b: f64,
    draws: usize,
    seed: u64,
) -> Result<String, String> {
    let names: Vec<String> = names
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let k = names.len();
    if mean.len() != k || cov.len() != k * k {
        return Err(format!(
            "{k} names need a mean of length {k} and a {k}x{k} covariance; got {} and {} values",
            mean.len(),
            cov.len()
        ));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(format!("b must lie in (0, 1), got {b}"));
    }
    let h = ConstraintSystem::parse(hypothesis).map_err(err)?;
    let cov = DMatrix::from_row_slice(k, k, cov);
    let posterior = CoefDistribution::normal(DVector::from_column_slice(mean), cov.clone()).map_err(err)?;
    let (center, consistent) = bf::adjustment_center(&h, &names).map_err(err)?;
    let prior = CoefDistribution::normal(center.clone(), cov / b).map_err(err)?;
    let mut rng = rng::stream(
        seed,
        StreamKey {
            sim_id: 0,
            condition: 0,
            iteration: 0,
            study: 0,
            purpose: Purpose::MonteCarlo,
        },
    );
    let ev = bf::bf_iu(&posterior, &prior, &h, &names, draws, &mut rng).map_err(err)?;
    let mut warnings = ev.diagnostics.clone();
    warnings.extend(h.warnings().iter().cloned());
    if !consistent {
        warnings.push("boundary equations are inconsistent".into());
    }
    let res = HypothesisResult {
        fit: ev.fit,
        complexity: ev.complexity,
        log_bf_iu: ev.log_bf_iu,
        log_bf_ic: ev.log_bf_ic,
        mc_se_log_bf_iu: ev.mc_se_log_bf_iu(),
        mc_draws: ev.mc_draws,
        prior_center: center.iter().copied().collect(),
        warnings,
    };
    serde_json::to_string(&res).map_err(err)
}

#[wasm_bindgen]
pub fn evaluate_normal(
    hypothesis: &str,
    names: &str,
    mean: &[f64],
    cov: &[f64],
    b: f64,
    draws: usize,
    seed: u64,
) -> Result<String, JsError> {
    js(evaluate_normal_json(hypothesis, names, mean, cov, b, draws, seed))
}

#[derive(Serialize, Default)]
struct Curve {
    label: String,
    #[serde(with = "bes_core::bf::sentinel_vec")]
    study_log_bf: Vec<f64>,
    #[serde(with = "bes_core::bf::sentinel_vec")]
    cumulative_log_bf: Vec<f64>,
    pmp: Vec<f64>,
}

#[derive(Serialize)]
struct CurveSet {
    sim_id: u32,
    n: usize,
    alternative: Alternative,
    hypotheses: Vec<(String, String)>,
    curves: Vec<Curve>,
}

/// Cumulative log Bayes factor over `studies` generated studies of a
/// multi-study simulation (9, 10 or 11).
pub fn cumulative_curve_json(
    sim_id: u32,
    n: usize,
    studies: usize,
    alternative: &str,
    decomposed: bool,
    draws: usize,
    seed: u64,
) -> Result<String, String> {
    if !simgen::is_part2(sim_id) {
        return Err(format!("simulation {sim_id} is not a multi-study simulation"));
    }
    if studies == 0 || studies > 500 {
        return Err("studies must lie in 1..=500".into());
    }
    let alternative: Alternative = alternative.parse()?;
    let cell = PlanCell {
        n,
        r2: simgen::PART2_R2,
        studies,
        decomposed,
    };
    let key = |study: u64, purpose| StreamKey {
        sim_id: sim_id as u64,
        condition: 0,
        iteration: 0,
        study,
        purpose,
    };
    let mut plan_rng = rng::stream(seed, key(u64::MAX, Purpose::Plan));
    let plans = simgen::study_plan(sim_id, &cell, &mut plan_rng, |i| {
        rng::derive_seed(seed, key(i as u64, Purpose::Data))
    })
    .map_err(err)?;
    let hypotheses = plans[0].hypotheses.clone();
    let mut states = hypotheses
        .iter()
        .map(|(l, _)| SynthesisState::uniform(vec![l.clone(), alternative.slot_label().to_string()]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let mut curves: Vec<Curve> = hypotheses
        .iter()
        .map(|(l, _)| Curve {
            label: l.clone(),
            ..Default::default()
        })
        .collect();
    for (i, plan) in plans.iter().enumerate() {
        let mut mc = rng::stream(seed, key(i as u64, Purpose::MonteCarlo));
        let outcome = sim::run_study(plan, None, draws, &mut mc).map_err(err)?;
        for (h, (label, ev)) in outcome.evidence.iter().enumerate() {
            let v = ev
                .log_bf(alternative)
                .ok_or_else(|| format!("`{label}` has no complement"))?;
            states[h]
                .update(&format!("s{i:04}"), &[(label.clone(), v)])
                .map_err(err)?;
            curves[h].study_log_bf.push(v);
            curves[h].cumulative_log_bf.push(states[h].cumulative_log_bf()[0]);
            curves[h].pmp.push(states[h].pmps()[0]);
        }
    }
    let set = CurveSet {
        sim_id,
        n,
        alternative,
        hypotheses,
        curves,
    };
    serde_json::to_string(&set).map_err(err)
}

#[wasm_bindgen]
pub fn cumulative_curve(
    sim_id: u32,
    n: usize,
    studies: usize,
    alternative: &str,
    decomposed: bool,
    draws: usize,
    seed: u64,
) -> Result<String, JsError> {
    js(cumulative_curve_json(
        sim_id,
        n,
        studies,
        alternative,
        decomposed,
        draws,
        seed,
    ))
}
