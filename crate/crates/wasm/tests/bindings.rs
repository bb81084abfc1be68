use bes_wasm::{beta_table_json, cumulative_curve_json, evaluate_normal_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn beta_table_scales_weights() {
    let t = parse(beta_table_json("probit", 0.13).unwrap());
    let beta: Vec<f64> = t["beta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(beta.len(), 6);
    assert_eq!(beta[0], 0.0);
    assert!((beta[5] / beta[4] - 1.5).abs() < 1e-12);
    assert!(beta_table_json("poisson", 0.13).is_err());
    assert!(beta_table_json("logit", 1.5).is_err());
}

#[test]
fn one_sided_hypothesis_on_a_sharp_posterior() {
    let r = parse(evaluate_normal_json("b1 > 0", "b1", &[5.0], &[0.01], 0.1, 1000, 1).unwrap());
    assert!((r["complexity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((r["log_bf_iu"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-9);
    assert_eq!(r["mc_draws"], 0);
}

#[test]
fn equality_hypothesis_uses_density_ratio() {
    // Posterior N(0, 1) and prior N(0, 1 / b): the ratio of densities at 0 is sqrt(1 / b).
    let r = parse(evaluate_normal_json("b1 = 0", "b1", &[0.0], &[1.0], 0.5, 1000, 1).unwrap());
    assert!((r["log_bf_iu"].as_f64().unwrap() - 0.5 * 2f64.ln()).abs() < 1e-12);
    assert!(r["log_bf_ic"].is_null());
}

#[test]
fn evaluate_rejects_bad_shapes() {
    assert!(evaluate_normal_json("b1 > 0", "b1,b2", &[0.0], &[1.0], 0.5, 10, 1).is_err());
    assert!(evaluate_normal_json("b1 >> 0", "b1", &[0.0], &[1.0], 0.5, 10, 1).is_err());
    assert!(evaluate_normal_json("b1 > 0", "b1", &[0.0], &[1.0], 1.5, 10, 1).is_err());
}

#[test]
fn cumulative_curve_is_a_running_sum() {
    let c = parse(cumulative_curve_json(9, 50, 12, "unconstrained", false, 2000, 7).unwrap());
    let curve = &c["curves"][0];
    let per: Vec<f64> = curve["study_log_bf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let cum: Vec<f64> = curve["cumulative_log_bf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(per.len(), 12);
    let mut acc = 0.0;
    for (p, c) in per.iter().zip(&cum) {
        acc += p;
        assert!((acc - c).abs() < 1e-9);
    }
    let again = cumulative_curve_json(9, 50, 12, "unconstrained", false, 2000, 7).unwrap();
    assert_eq!(c, parse(again));
    let split = parse(cumulative_curve_json(11, 25, 3, "complement", true, 2000, 7).unwrap());
    assert_eq!(split["curves"].as_array().unwrap().len(), 3);
    assert!(cumulative_curve_json(3, 25, 3, "unconstrained", false, 2000, 7).is_err());
}
