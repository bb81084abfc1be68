//! Simulation runner and plot-ready summaries.
//!
//! Every (condition, iteration) pair is an independent task with its own
//! random streams. Tasks may run in parallel; their rows are collected in
//! task order, so the output does not depend on the thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bf::{self, BfError, EvalOptions, Evidence, FractionSpec};
use crate::glm::{self, Dataset, FitOptions, FitResult, GlmError};
use crate::hypothesis::{Alternative, ConstraintSystem, HypothesisError};
use crate::io::{fmt_g10, parse_f64, IoError};
use crate::rng::{self, Purpose, StreamKey};
use crate::simgen::{self, PlanCell, SimGenError, StudyPlan};
use crate::synthesis::{SynthesisError, SynthesisState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gen(#[from] SimGenError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Bf(#[from] BfError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("aggregate check failed: {0}")]
    CrossCheck(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub sim_id: u32,
    pub iters: usize,
    pub n_grid: Vec<usize>,
    pub r2_grid: Vec<f64>,
    pub alternative: Alternative,
    pub seed: u64,
    /// Studies per iteration for simulations 9 to 11.
    pub studies: usize,
    pub decomposed: bool,
    pub mc_draws: usize,
    /// Explicit fraction `b`; `None` uses the family rule.
    pub fraction: Option<f64>,
    /// Write every generated dataset with a manifest into this directory.
    pub save_data: Option<PathBuf>,
}

impl SimConfig {
    /// Default grids for a simulation.
    pub fn new(sim_id: u32, seed: u64) -> Self {
        let part2 = simgen::is_part2(sim_id);
        Self {
            sim_id,
            iters: 100,
            n_grid: if part2 {
                simgen::PART2_N.to_vec()
            } else {
                simgen::PART1_N.to_vec()
            },
            r2_grid: if part2 {
                vec![simgen::PART2_R2]
            } else {
                simgen::PART1_R2.to_vec()
            },
            alternative: Alternative::Unconstrained,
            seed,
            studies: simgen::PART2_MAX_STUDIES,
            decomposed: false,
            mc_draws: bf::DEFAULT_MC_DRAWS,
            fraction: None,
            save_data: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |s: String| Err(SimError::Config(s));
        if !(1..=11).contains(&self.sim_id) {
            return bad(format!("unknown simulation {}", self.sim_id));
        }
        if self.iters == 0 {
            return bad("at least one iteration is required".into());
        }
        if self.n_grid.is_empty() || self.r2_grid.is_empty() {
            return bad("empty grid".into());
        }
        if self.r2_grid.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return bad("r2 values must lie in (0, 1)".into());
        }
        if simgen::is_part2(self.sim_id) && self.studies == 0 {
            return bad("at least one study is required".into());
        }
        if self.decomposed && self.sim_id != 11 {
            return bad("the decomposed variant exists only for simulation 11".into());
        }
        if self.mc_draws == 0 {
            return bad("mc-draws must be positive".into());
        }
        Ok(())
    }

    /// `(n, r2)` cells in output order.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.n_grid
            .iter()
            .flat_map(|n| self.r2_grid.iter().map(move |r| (*n, *r)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Study,
    Aggregate,
}

impl RowKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowKind::Study => "study",
            RowKind::Aggregate => "aggregate",
        }
    }
}

/// One output line. Study rows carry the running aggregate after that study.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sim_id: u32,
    pub kind: RowKind,
    /// Family of the study, or the `+`-joined family set for aggregates.
    pub family: String,
    /// Cell sample size.
    pub n: usize,
    /// Realized sample size of the study.
    pub study_n: Option<usize>,
    pub r2: f64,
    pub iteration: usize,
    pub study: Option<usize>,
    /// Studies included in the aggregate.
    pub studies: usize,
    pub hypothesis: String,
    pub alternative: Alternative,
    pub fit: Option<f64>,
    pub complexity: Option<f64>,
    pub log_bf: Option<f64>,
    pub aggregated_log_bf: f64,
    pub aggregated_mc_se: f64,
    pub pmp: f64,
}

pub const RESULT_COLUMNS: [&str; 17] = [
    "sim_id",
    "kind",
    "family",
    "n",
    "study_n",
    "r2",
    "iteration",
    "study",
    "studies",
    "hypothesis",
    "alternative",
    "fit",
    "complexity",
    "log_bf",
    "aggregated_log_bf",
    "aggregated_mc_se",
    "pmp",
];

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_g10).unwrap_or_default()
}

fn opt_u(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.sim_id.to_string(),
            self.kind.as_str().into(),
            self.family.clone(),
            self.n.to_string(),
            opt_u(self.study_n),
            fmt_g10(self.r2),
            self.iteration.to_string(),
            opt_u(self.study),
            self.studies.to_string(),
            self.hypothesis.clone(),
            self.alternative.as_str().into(),
            opt_f(self.fit),
            opt_f(self.complexity),
            opt_f(self.log_bf),
            fmt_g10(self.aggregated_log_bf),
            fmt_g10(self.aggregated_mc_se),
            fmt_g10(self.pmp),
        ]
    }
}

/// An iteration dropped because a study kept separating.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipRecord {
    pub sim_id: u32,
    pub n: usize,
    pub r2: f64,
    pub iteration: usize,
    pub study: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimOutput {
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<SkipRecord>,
    /// Datasets discarded for separation across all tasks.
    pub redraws: usize,
}

/// Result of one study of an iteration.
#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub fit: FitResult,
    pub evidence: Vec<(String, Evidence)>,
    pub redraws: usize,
    pub data: Dataset,
}

fn redraw_worthy(e: &GlmError) -> bool {
    matches!(
        e,
        GlmError::Separation | GlmError::SingleClass | GlmError::NotConverged(_)
    )
}

/// Generate, fit and evaluate one study.
///
/// Binomial datasets whose analysis fit separates, has one outcome class or
/// fails to converge are redrawn.
pub fn run_study<R: rand::Rng + ?Sized>(
    plan: &StudyPlan,
    fraction: Option<f64>,
    mc_draws: usize,
    mc_rng: &mut R,
) -> Result<StudyOutcome, SimError> {
    let opts = FitOptions::default();
    let mut data_rng = simgen::spec_rng(&plan.spec);
    let ((data, fit), redraws) = simgen::draw_until(&plan.spec, &mut data_rng, |d| {
        let design = plan.model.design(&d)?;
        match glm::fit(&design, &opts) {
            Ok(f) => Ok(Some((d, f))),
            Err(e) if plan.spec.family.is_binomial() && redraw_worthy(&e) => Ok(None),
            Err(e) => Err(e.into()),
        }
    })?;
    let systems = plan
        .hypotheses
        .iter()
        .map(|(_, h)| ConstraintSystem::parse(h))
        .collect::<Result<Vec<_>, _>>()?;
    let frac = match fraction {
        Some(b) => FractionSpec::explicit(b)?,
        None => FractionSpec::auto(&fit, bf::independent_constraint_count(systems.iter(), &fit.names)?)?,
    };
    let eval = EvalOptions { mc_draws };
    let mut evidence = Vec::with_capacity(systems.len());
    for ((label, _), h) in plan.hypotheses.iter().zip(&systems) {
        evidence.push((label.clone(), bf::evaluate(&fit, h, &frac, &eval, mc_rng)?));
    }
    Ok(StudyOutcome {
        fit,
        evidence,
        redraws,
        data,
    })
}

fn key(cfg: &SimConfig, cond: usize, iter: usize, study: usize, purpose: Purpose) -> StreamKey {
    StreamKey {
        sim_id: cfg.sim_id as u64,
        condition: cond as u64,
        iteration: iter as u64,
        study: study as u64,
        purpose,
    }
}

struct TaskResult {
    rows: Vec<ResultRow>,
    skipped: Option<SkipRecord>,
    redraws: usize,
}

fn run_task(cfg: &SimConfig, cond: usize, n: usize, r2: f64, iter: usize) -> Result<TaskResult, SimError> {
    let cell = PlanCell {
        n,
        r2,
        studies: cfg.studies,
        decomposed: cfg.decomposed,
    };
    let mut plan_rng = rng::stream(cfg.seed, key(cfg, cond, iter, usize::MAX, Purpose::Plan));
    let plans = simgen::study_plan(cfg.sim_id, &cell, &mut plan_rng, |i| {
        rng::derive_seed(cfg.seed, key(cfg, cond, iter, i, Purpose::Data))
    })?;
    let mut outcomes = Vec::with_capacity(plans.len());
    let mut redraws = 0;
    for (i, plan) in plans.iter().enumerate() {
        let mut mc = rng::stream(cfg.seed, key(cfg, cond, iter, i, Purpose::MonteCarlo));
        match run_study(plan, cfg.fraction, cfg.mc_draws, &mut mc) {
            Ok(o) => {
                redraws += o.redraws;
                if let Some(dir) = &cfg.save_data {
                    let stem = format!("sim{}_c{cond}_i{iter}_s{i}", cfg.sim_id);
                    simgen::persist_dataset(dir, &stem, &o.data, &plan.spec, &plan.model, o.redraws)?;
                }
                outcomes.push(o);
            }
            Err(SimError::Gen(SimGenError::PersistentSeparation(k))) => {
                return Ok(TaskResult {
                    rows: Vec::new(),
                    skipped: Some(SkipRecord {
                        sim_id: cfg.sim_id,
                        n,
                        r2,
                        iteration: iter,
                        study: i,
                        reason: format!("separation persisted after {k} redraws"),
                    }),
                    redraws: redraws + k,
                });
            }
            Err(e) => return Err(e),
        }
    }

    let alt = cfg.alternative;
    let family_set = {
        let mut fams: Vec<&str> = Vec::new();
        for p in &plans {
            if !fams.contains(&p.spec.family.as_str()) {
                fams.push(p.spec.family.as_str());
            }
        }
        fams.join("+")
    };
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for (h, (label, _)) in plans[0].hypotheses.iter().enumerate() {
        let mut state = SynthesisState::uniform(vec![label.clone(), alt.slot_label().to_string()])?;
        let mut se2 = 0.0;
        let mut conflict = false;
        for (i, (plan, o)) in plans.iter().zip(&outcomes).enumerate() {
            let ev = &o.evidence[h].1;
            let lbf = ev.log_bf(alt).ok_or(HypothesisError::EqualityComplementUnsupported)?;
            se2 += ev.mc_se_log_bf(alt).powi(2);
            if !conflict && state.update(&format!("s{i:04}"), &[(label.clone(), lbf)]).is_err() {
                conflict = true;
            }
            let (agg, pmp) = if conflict {
                (f64::NAN, f64::NAN)
            } else {
                (state.cumulative_log_bf()[0], state.pmps()[0])
            };
            rows.push(ResultRow {
                sim_id: cfg.sim_id,
                kind: RowKind::Study,
                family: plan.spec.family.as_str().to_string(),
                n,
                study_n: Some(plan.spec.n),
                r2,
                iteration: iter,
                study: Some(i),
                studies: i + 1,
                hypothesis: label.clone(),
                alternative: alt,
                fit: Some(ev.fit),
                complexity: Some(ev.complexity),
                log_bf: Some(lbf),
                aggregated_log_bf: agg,
                aggregated_mc_se: se2.sqrt(),
                pmp,
            });
        }
        let last = rows.last().expect("at least one study").clone();
        aggregates.push(ResultRow {
            kind: RowKind::Aggregate,
            family: family_set.clone(),
            study_n: None,
            study: None,
            fit: None,
            complexity: None,
            log_bf: None,
            ..last
        });
    }
    rows.extend(aggregates);
    Ok(TaskResult {
        rows,
        skipped: None,
        redraws,
    })
}

/// Run a simulation on the current thread pool.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, f64, usize)> = cfg
        .cells()
        .into_iter()
        .enumerate()
        .flat_map(|(c, (n, r2))| (0..cfg.iters).map(move |it| (c, n, r2, it)))
        .collect();
    let run = |&(c, n, r2, it): &(usize, usize, f64, usize)| run_task(cfg, c, n, r2, it);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<TaskResult, SimError>> = {
        use rayon::prelude::*;
        tasks.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<TaskResult, SimError>> = tasks.iter().map(run).collect();

    let mut out = SimOutput::default();
    for r in results {
        let r = r?;
        out.rows.extend(r.rows);
        out.skipped.extend(r.skipped);
        out.redraws += r.redraws;
    }
    Ok(out)
}

/// Run on a dedicated pool of `threads` workers (0 picks the default).
pub fn simulate_with_threads(cfg: &SimConfig, threads: usize) -> Result<SimOutput, SimError> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SimError::Config(e.to_string()))?;
        pool.install(|| simulate(cfg))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        simulate(cfg)
    }
}

/// Each aggregate must equal the sum of its study log BFs.
pub fn cross_check(rows: &[ResultRow]) -> Result<(), SimError> {
    let mut sums: BTreeMap<(u32, usize, u64, usize, &str), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == RowKind::Study) {
        sums.entry((r.sim_id, r.n, r.r2.to_bits(), r.iteration, r.hypothesis.as_str()))
            .or_default()
            .push(r.log_bf.unwrap_or(f64::NAN));
    }
    for r in rows.iter().filter(|r| r.kind == RowKind::Aggregate) {
        let k = (r.sim_id, r.n, r.r2.to_bits(), r.iteration, r.hypothesis.as_str());
        let vals = sums
            .get(&k)
            .ok_or_else(|| SimError::CrossCheck(format!("no studies for aggregate {k:?}")))?;
        if vals.len() != r.studies {
            return Err(SimError::CrossCheck(format!(
                "{k:?}: {} studies, expected {}",
                vals.len(),
                r.studies
            )));
        }
        let expect = crate::synthesis::aggregate_log_bf(vals).unwrap_or(f64::NAN);
        let ok = if expect.is_nan() || r.aggregated_log_bf.is_nan() {
            expect.is_nan() && r.aggregated_log_bf.is_nan()
        } else if expect.is_infinite() || r.aggregated_log_bf.is_infinite() {
            expect == r.aggregated_log_bf
        } else {
            (expect - r.aggregated_log_bf).abs() <= 1e-9 * expect.abs().max(1.0)
        };
        if !ok {
            return Err(SimError::CrossCheck(format!(
                "{k:?}: aggregate {} but studies sum to {expect}",
                r.aggregated_log_bf
            )));
        }
    }
    Ok(())
}

/// Write rows as CSV after the aggregate cross-check.
pub fn write_results<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<(), SimError> {
    cross_check(rows)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS).map_err(IoError::from)?;
    for r in rows {
        w.write_record(r.record()).map_err(IoError::from)?;
    }
    w.flush().map_err(|e| IoError::io(Path::new("<results>"), e))?;
    Ok(())
}

pub fn write_skipped<W: std::io::Write>(skipped: &[SkipRecord], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sim_id", "n", "r2", "iteration", "study", "reason"])
        .map_err(IoError::from)?;
    for s in skipped {
        w.write_record([
            s.sim_id.to_string(),
            s.n.to_string(),
            fmt_g10(s.r2),
            s.iteration.to_string(),
            s.study.to_string(),
            s.reason.clone(),
        ])
        .map_err(IoError::from)?;
    }
    w.flush().map_err(|e| IoError::io(Path::new("<skipped>"), e))?;
    Ok(())
}

pub fn read_results<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>, SimError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(IoError::from)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut idx = [0usize; 17];
    for (k, col) in RESULT_COLUMNS.iter().enumerate() {
        idx[k] = headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| IoError::Schema(format!("results file lacks column `{col}`")))?;
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(IoError::from)?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let bad = |k: usize| {
            IoError::Schema(format!(
                "row {}: bad `{}` value `{}`",
                line + 1,
                RESULT_COLUMNS[k],
                field(k)
            ))
        };
        let num = |k: usize| parse_f64(field(k)).ok_or_else(|| bad(k));
        let int = |k: usize| field(k).parse::<usize>().map_err(|_| bad(k));
        let opt_num = |k: usize| {
            if field(k).is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        let opt_int = |k: usize| {
            if field(k).is_empty() {
                Ok(None)
            } else {
                int(k).map(Some)
            }
        };
        let kind = match field(1) {
            "study" => RowKind::Study,
            "aggregate" => RowKind::Aggregate,
            _ => return Err(bad(1).into()),
        };
        rows.push(ResultRow {
            sim_id: field(0).parse().map_err(|_| bad(0))?,
            kind,
            family: field(2).to_string(),
            n: int(3)?,
            study_n: opt_int(4)?,
            r2: num(5)?,
            iteration: int(6)?,
            study: opt_int(7)?,
            studies: int(8)?,
            hypothesis: field(9).to_string(),
            alternative: field(10).parse().map_err(|_| bad(10))?,
            fit: opt_num(11)?,
            complexity: opt_num(12)?,
            log_bf: opt_num(13)?,
            aggregated_log_bf: num(14)?,
            aggregated_mc_se: num(15)?,
            pmp: num(16)?,
        });
    }
    Ok(rows)
}

/// Five-number summary, mean and mean PMP of one group of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sim_id: u32,
    pub family_set: String,
    pub n: usize,
    pub r2: f64,
    pub hypothesis: String,
    pub alternative: Alternative,
    pub studies: usize,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub mean_pmp: f64,
}

impl SummaryRow {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "sim_id",
    "family_set",
    "n",
    "r2",
    "hypothesis",
    "alternative",
    "studies",
    "count",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "mean",
    "mean_pmp",
];

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(x: &[f64], q: f64) -> f64 {
    let h = (x.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= x.len() || x[lo] == x[lo + 1] {
        return x[lo];
    }
    x[lo] + frac * (x[lo + 1] - x[lo])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Summaries per (sim, family set, n, r2, hypothesis, alternative, studies).
///
/// Simulations 1 to 8 are summarized over aggregate rows; simulations 9 to 11
/// over the running aggregates of study rows, one group per study count.
/// Rows whose aggregate is undefined are not counted.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>, SimError> {
    if rows.is_empty() {
        return Err(SimError::Config("no result rows to summarize".into()));
    }
    type Key = (u32, String, usize, u64, String, &'static str, usize);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<f64>, Alternative, f64)> = BTreeMap::new();
    let mut family_sets: BTreeMap<(u32, usize, u64, usize), String> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == RowKind::Aggregate) {
        family_sets.insert((r.sim_id, r.n, r.r2.to_bits(), r.iteration), r.family.clone());
    }
    for r in rows {
        let part2 = simgen::is_part2(r.sim_id);
        let wanted = if part2 {
            r.kind == RowKind::Study
        } else {
            r.kind == RowKind::Aggregate
        };
        if !wanted || r.aggregated_log_bf.is_nan() {
            continue;
        }
        let fam = family_sets
            .get(&(r.sim_id, r.n, r.r2.to_bits(), r.iteration))
            .cloned()
            .unwrap_or_else(|| r.family.clone());
        let k = (
            r.sim_id,
            fam,
            r.n,
            r.r2.to_bits(),
            r.hypothesis.clone(),
            r.alternative.as_str(),
            r.studies,
        );
        let e = groups
            .entry(k)
            .or_insert_with(|| (Vec::new(), Vec::new(), r.alternative, r.r2));
        e.0.push(r.aggregated_log_bf);
        e.1.push(r.pmp);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((sim_id, family_set, n, _, hypothesis, _, studies), (mut v, p, alternative, r2)) in groups {
        v.sort_by(f64::total_cmp);
        out.push(SummaryRow {
            sim_id,
            family_set,
            n,
            r2,
            hypothesis,
            alternative,
            studies,
            count: v.len(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
            mean: mean(&v),
            mean_pmp: mean(&p),
        });
    }
    Ok(out)
}

pub fn write_summary<W: std::io::Write>(rows: &[SummaryRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS).map_err(IoError::from)?;
    for s in rows {
        w.write_record([
            s.sim_id.to_string(),
            s.family_set.clone(),
            s.n.to_string(),
            fmt_g10(s.r2),
            s.hypothesis.clone(),
            s.alternative.as_str().to_string(),
            s.studies.to_string(),
            s.count.to_string(),
            fmt_g10(s.min),
            fmt_g10(s.q1),
            fmt_g10(s.median),
            fmt_g10(s.q3),
            fmt_g10(s.max),
            fmt_g10(s.mean),
            fmt_g10(s.mean_pmp),
        ])
        .map_err(IoError::from)?;
    }
    w.flush().map_err(|e| IoError::io(Path::new("<summary>"), e))?;
    Ok(())
}
