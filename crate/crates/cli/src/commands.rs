use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bes_core::bf::{self, EvalOptions, FractionSpec};
use bes_core::glm::{self, FitOptions};
use bes_core::io::{fmt_g10, read_dataset_csv};
use bes_core::sim::{self, SimConfig};
use bes_core::{Alternative, ConstraintSystem, EvidenceRecord, HypothesisSet, SynthesisState};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{io_err, CliError};
use crate::{AnalyzeArgs, ReportArgs, SimulateArgs, SynthesizeArgs};

fn parse_fraction(s: &str) -> Result<Option<f64>, CliError> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(b) if b > 0.0 && b < 1.0 => Ok(Some(b)),
        _ => Err(CliError::Other(format!(
            "--fraction must be `auto` or a number in (0, 1), got `{s}`"
        ))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| io_err(path, e))
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    if !a.labels.is_empty() && a.labels.len() != a.hypotheses.len() {
        return Err(CliError::Other(format!(
            "{} labels for {} hypotheses",
            a.labels.len(),
            a.hypotheses.len()
        )));
    }
    let labels: Vec<String> = if a.labels.is_empty() {
        (1..=a.hypotheses.len()).map(|i| format!("H{i}")).collect()
    } else {
        a.labels.clone()
    };
    let systems = a
        .hypotheses
        .iter()
        .map(|t| ConstraintSystem::parse(t))
        .collect::<Result<Vec<_>, _>>()?;
    let set = HypothesisSet::uniform(labels.into_iter().zip(systems).collect(), a.alternative)?;

    let fraction = parse_fraction(&a.fraction)?;
    let raw = read_dataset_csv(&a.data, &a.outcome, a.predictors.as_deref(), a.family)?;
    let data = if a.no_intercept { raw } else { raw.with_intercept()? };
    let fit = glm::fit(&data, &FitOptions::default())?;

    let j = bf::independent_constraint_count(set.hypotheses.iter().map(|(_, h)| h), &fit.names)?;
    let frac = match fraction {
        Some(b) => FractionSpec::explicit(b)?,
        None => FractionSpec::auto(&fit, j)?,
    };
    let study_id = a.study_id.clone().unwrap_or_else(|| {
        a.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "study".into())
    });

    let opts = EvalOptions { mc_draws: a.mc_draws };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut records = Vec::with_capacity(set.hypotheses.len());
    for (label, h) in &set.hypotheses {
        let ev = bf::evaluate(&fit, h, &frac, &opts, &mut rng)?;
        let mut rec = EvidenceRecord::new(&study_id, label, a.alternative, &ev, fit.family, fit.n);
        if !fit.converged {
            rec.warnings.push("model fit did not converge".into());
        }
        records.push(rec);
    }

    let mut w = create(&a.out)?;
    if records.len() == 1 {
        serde_json::to_writer_pretty(&mut w, &records[0])?;
    } else {
        serde_json::to_writer_pretty(&mut w, &records)?;
    }
    writeln!(w).map_err(|e| io_err(&a.out, e))?;
    finish(w, &a.out)
}

/// Expand directories into their `.json` files, sorted by name.
fn record_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| io_err(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn read_records(path: &Path) -> Result<Vec<EvidenceRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let parsed = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|r| vec![r])
    };
    parsed.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_priors(s: &str, k: usize) -> Result<Vec<f64>, CliError> {
    if s == "uniform" {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Other(format!("--priors: {e}")))?;
    if v.len() != k {
        return Err(CliError::Other(format!(
            "--priors has {} values; {k} are needed (hypotheses, then the alternative)",
            v.len()
        )));
    }
    Ok(v)
}

pub fn synthesize(a: &SynthesizeArgs) -> Result<(), CliError> {
    let files = record_files(&a.records)?;
    let mut records = Vec::new();
    for f in &files {
        records.extend(read_records(f)?);
    }
    if records.is_empty() {
        return Err(CliError::Other("no evidence records found".into()));
    }

    let alternative = records[0].alternative;
    if let Some(r) = records.iter().find(|r| r.alternative != alternative) {
        return Err(CliError::Other(format!(
            "records mix alternatives: `{alternative}` and `{}` (study `{}`)",
            r.alternative, r.study_id
        )));
    }

    let mut labels: Vec<String> = Vec::new();
    let mut studies: BTreeMap<&str, Vec<(String, f64)>> = BTreeMap::new();
    for r in &records {
        if !labels.contains(&r.hypothesis) {
            labels.push(r.hypothesis.clone());
        }
        let v = r.log_bf().ok_or_else(|| {
            CliError::Other(format!(
                "record `{}` / `{}` has no log BF against the complement",
                r.study_id, r.hypothesis
            ))
        })?;
        let entry = studies.entry(&r.study_id).or_default();
        if entry.iter().any(|(l, _)| *l == r.hypothesis) {
            return Err(CliError::Other(format!(
                "study `{}` has two records for `{}`",
                r.study_id, r.hypothesis
            )));
        }
        entry.push((r.hypothesis.clone(), v));
    }
    if alternative == Alternative::Complement && labels.len() != 1 {
        return Err(CliError::Other(
            "a complement alternative allows exactly one hypothesis".into(),
        ));
    }
    for (id, vals) in &studies {
        if vals.len() != labels.len() {
            let missing: Vec<&str> = labels
                .iter()
                .filter(|l| !vals.iter().any(|(v, _)| v == *l))
                .map(String::as_str)
                .collect();
            return Err(CliError::Other(format!(
                "study `{id}` lacks records for {}",
                missing.join(", ")
            )));
        }
    }
    if labels.iter().any(|l| l == alternative.slot_label()) {
        return Err(CliError::Other(format!(
            "hypothesis label `{}` is reserved for the alternative",
            alternative.slot_label()
        )));
    }

    let mut all_labels = labels.clone();
    all_labels.push(alternative.slot_label().to_string());
    let priors = parse_priors(&a.priors, all_labels.len())?;
    let mut state = SynthesisState::new(all_labels, priors)?;
    for (id, vals) in &studies {
        state.update(id, vals)?;
    }

    let mut w = create(&a.out)?;
    serde_json::to_writer_pretty(&mut w, &state.summary())?;
    writeln!(w).map_err(|e| io_err(&a.out, e))?;
    finish(w, &a.out)?;

    if let Some(path) = &a.trail {
        write_trail(&state, path)?;
    }
    Ok(())
}

/// One row per study and hypothesis, with the running aggregate in study order.
fn write_trail(state: &SynthesisState, path: &Path) -> Result<(), CliError> {
    let labels = state.labels();
    let mut running = SynthesisState::new(labels.to_vec(), state.prior_probs().to_vec())?;
    let mut w = create(path)?;
    let mut line = |s: String| writeln!(w, "{s}").map_err(|e| io_err(path, e));
    line("step,study_id,hypothesis,log_bf,cumulative_log_bf,pmp".into())?;
    for (step, entry) in state.trail().iter().enumerate() {
        let vals: Vec<(String, f64)> = labels.iter().cloned().zip(entry.log_bf.iter().copied()).collect();
        running.update(&entry.study_id, &vals)?;
        for (i, l) in labels.iter().enumerate() {
            line(format!(
                "{},{},{},{},{},{}",
                step + 1,
                entry.study_id,
                l,
                fmt_g10(entry.log_bf[i]),
                fmt_g10(running.cumulative_log_bf()[i]),
                fmt_g10(running.pmps()[i])
            ))?;
        }
    }
    finish(w, path)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = SimConfig::new(a.sim, a.seed);
    cfg.iters = a.iters;
    if let Some(n) = &a.n {
        cfg.n_grid = n.clone();
    }
    if let Some(r2) = &a.r2 {
        cfg.r2_grid = r2.clone();
    }
    cfg.alternative = a.alternative;
    if let Some(s) = a.studies {
        cfg.studies = s;
    }
    cfg.decomposed = a.decomposed;
    cfg.mc_draws = a.mc_draws;
    cfg.fraction = parse_fraction(&a.fraction)?;
    cfg.save_data = a.save_data.clone();

    let out = sim::simulate_with_threads(&cfg, a.threads)?;
    let w = create(&a.out)?;
    sim::write_results(&out.rows, w)?;

    if !out.skipped.is_empty() {
        let path = skipped_path(&a.out);
        sim::write_skipped(&out.skipped, create(&path)?)?;
        eprintln!(
            "warning: {} iteration(s) skipped after persistent separation; see {}",
            out.skipped.len(),
            path.display()
        );
    }
    if out.redraws > 0 {
        eprintln!(
            "note: {} dataset(s) redrawn because of separation or non-convergence",
            out.redraws
        );
    }
    Ok(())
}

fn skipped_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.skipped.csv"))
}

pub fn report(a: &ReportArgs) -> Result<(), CliError> {
    let input = File::open(&a.input).map_err(|e| io_err(&a.input, e))?;
    let rows = sim::read_results(input)?;
    if rows.is_empty() {
        return Err(CliError::Other(format!("{} has no result rows", a.input.display())));
    }
    let summary = sim::summarize(&rows)?;
    sim::write_summary(&summary, create(&a.out)?)?;
    Ok(())
}
