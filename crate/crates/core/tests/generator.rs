use bes_core::glm::{self, FitOptions};
use bes_core::rng::{self, Purpose, StreamKey};
use bes_core::simgen::{self, DataGenSpec, ModelSpec};
use bes_core::Family;

fn key(study: u64, purpose: Purpose) -> StreamKey {
    StreamKey {
        sim_id: 1,
        condition: 0,
        iteration: 0,
        study,
        purpose,
    }
}

#[test]
fn gaussian_data_reaches_target_r2() {
    for r2 in [0.02, 0.13, 0.26] {
        let spec = DataGenSpec::new(Family::Gaussian, 100_000, r2, 7);
        let (d, _) = simgen::gen_dataset(&spec, &mut simgen::spec_rng(&spec)).unwrap();
        let fit = glm::fit(&d.with_intercept().unwrap(), &FitOptions::default()).unwrap();
        let resid_var = fit.dispersion;
        assert!(
            (resid_var - (1.0 - r2)).abs() < 0.015,
            "r2 {r2}: residual variance {resid_var}"
        );
        let y = d.y();
        let sample_r2 = 1.0 - resid_var / glm::sample_variance(y.as_slice());
        assert!((sample_r2 - r2).abs() < 0.01, "target {r2}, got {sample_r2}");
    }
}

#[test]
fn binomial_fits_recover_generating_coefficients() {
    for family in [Family::BinomialLogit, Family::BinomialProbit] {
        let spec = DataGenSpec::new(family, 60_000, 0.26, 11);
        let (d, _) = simgen::gen_dataset(&spec, &mut simgen::spec_rng(&spec)).unwrap();
        let fit = glm::fit(&d.with_intercept().unwrap(), &FitOptions::default()).unwrap();
        let truth = simgen::compute_beta(&spec);
        for (i, t) in truth.iter().enumerate() {
            let est = fit.beta_hat[i + 1];
            let se = fit.cov_beta[(i + 1, i + 1)].sqrt();
            assert!((est - t).abs() < 5.0 * se, "{family:?} b{}: {est} vs {t}", i + 1);
        }
        let mz = glm::mz_r2(&fit, d.with_intercept().unwrap().x()).unwrap();
        assert!((mz - 0.26).abs() < 0.02, "{family:?} McKelvey-Zavoina {mz}");
    }
}

#[test]
fn coefficient_ratios_follow_weights() {
    let spec = DataGenSpec::new(Family::BinomialLogit, 100, 0.09, 0);
    let beta = simgen::compute_beta(&spec);
    for (b, w) in beta.iter().zip(simgen::DEFAULT_WEIGHTS) {
        assert!((b / beta[5] - w / simgen::DEFAULT_WEIGHTS[5]).abs() < 1e-12);
    }
}

#[test]
fn same_seed_same_data() {
    let spec = DataGenSpec::new(Family::BinomialProbit, 300, 0.13, 99);
    let a = simgen::gen_dataset(&spec, &mut simgen::spec_rng(&spec)).unwrap();
    let b = simgen::gen_dataset(&spec, &mut simgen::spec_rng(&spec)).unwrap();
    assert_eq!(a.0.x(), b.0.x());
    assert_eq!(a.0.y(), b.0.y());
}

#[test]
fn stream_seeds_differ_across_keys() {
    let mut seen = std::collections::HashSet::new();
    for study in 0..200u64 {
        for purpose in [Purpose::Data, Purpose::MonteCarlo, Purpose::Plan] {
            assert!(seen.insert(rng::derive_seed(42, key(study, purpose))));
        }
    }
    assert_ne!(
        rng::derive_seed(1, key(0, Purpose::Data)),
        rng::derive_seed(2, key(0, Purpose::Data))
    );
}

#[test]
fn tertile_design_replaces_the_intercept() {
    let spec = DataGenSpec::new(Family::Gaussian, 100, 0.13, 3);
    let (d, _) = simgen::gen_dataset(&spec, &mut simgen::spec_rng(&spec)).unwrap();
    let design = ModelSpec::Tertiles { column: "b1".into() }.design(&d).unwrap();
    assert!(design.names().iter().all(|n| n != "intercept"));
    let low = design.column("b1_low").unwrap();
    let ones: f64 = low.iter().sum();
    assert_eq!(ones as usize, simgen::tertile_sizes(100)[0]);
    let fit = glm::fit(&design, &FitOptions::default()).unwrap();
    assert_eq!(fit.p, 8);
}

#[test]
fn persisted_dataset_reads_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DataGenSpec::new(Family::BinomialLogit, 120, 0.13, 21);
    let (d, redraws) = simgen::gen_dataset(&spec, &mut simgen::spec_rng(&spec)).unwrap();
    simgen::persist_dataset(dir.path(), "study", &d, &spec, &ModelSpec::Standard, redraws).unwrap();
    let back = bes_core::io::read_dataset_csv(&dir.path().join("study.csv"), "y", None, Family::BinomialLogit).unwrap();
    assert_eq!(back.names(), d.names());
    // Values are written with ten significant digits.
    for (a, b) in back.x().iter().zip(d.x().iter()) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300), "{a} vs {b}");
    }
    assert_eq!(back.y(), d.y());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("study.json")).unwrap()).unwrap();
    assert_eq!(manifest["file"], "study.csv");
    assert_eq!(manifest["spec"]["n"], 120);
}
