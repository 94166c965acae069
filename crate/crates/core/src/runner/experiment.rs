//! Runs HC and RC side by side over a trajectory-budget schedule.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, Plan};
use super::metrics::{heldout_surrogate_loss, mean, normalize, paired_returns, Exact};
use super::table::{write_results, write_theorem_table, Algorithm, ResultRow};
use crate::domain::{Dataset, Provenance, RandomSource, Trajectory};
use crate::envs::{gridworld_generate, Environment, PointMassEnv};
use crate::error::{Error, Result};
use crate::learners::Policy;
use crate::sampling::{
    data_equalized_schedule, hc_collect_with, rc_dagger_scheduled, Labeler, RcConfig,
};
use crate::supervisors::{GridSupervisor, Supervisor, SwitchingLqr};
use crate::theorem::stuck_table;

/// Environment variable overriding the number of worker threads.
pub const WORKERS_ENV: &str = "LFD_WORKERS";

// Sub-stream labels derived from each trial's root stream.
const ENV_STREAM: u64 = 1;
const HC_STREAM: u64 = 2;
const HC_FIT_STREAM: u64 = 3;
const HC_HELDOUT_STREAM: u64 = 4;
const RC_STREAM: u64 = 5;
const EVAL_STREAM: u64 = 6;

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialManifest {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    /// Aggregate size of each HC fit, aligned with the schedule.
    pub hc_dataset_sizes: Vec<usize>,
    /// Aggregate size after every RC fit. One entry per iteration of the
    /// single run, or one list per budget when budgets run separately.
    pub rc_dataset_sizes: Vec<Vec<usize>>,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalPolicy {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub demos: usize,
    pub policy: Policy,
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub rows: Vec<ResultRow>,
    pub manifest: TrialManifest,
    pub policies: Vec<FinalPolicy>,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    plan: &'a Plan,
    workers: usize,
    wall_seconds: f64,
    trials: Vec<TrialManifest>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<ResultRow>,
    pub errors: usize,
    pub outputs: Vec<PathBuf>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Writes the CSV plus `<stem>.manifest.json` and `<stem>.policies.json`
/// next to it. Per-trial failures land in the `error` column.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    if cfg.experiment == ExperimentKind::Theorem {
        cfg.validate_theorem()?;
        let t = &cfg.theorem;
        let table = stuck_table(&t.m_values, t.mu, t.trials, cfg.seed)?;
        create_parent(&cfg.output)?;
        write_theorem_table(BufWriter::new(File::create(&cfg.output)?), &table)?;
        return Ok(RunSummary {
            rows: Vec::new(),
            errors: 0,
            outputs: vec![cfg.output.clone()],
        });
    }
    let plan = cfg.plan()?;
    let start = Instant::now();
    let workers = worker_count();
    let reports = run_trials(&plan, workers)?;
    let wall = start.elapsed().as_secs_f64();

    let rows: Vec<ResultRow> = reports.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    create_parent(&cfg.output)?;
    write_results(BufWriter::new(File::create(&cfg.output)?), &rows)?;
    let manifest = Manifest {
        config: cfg,
        plan: &plan,
        workers,
        wall_seconds: wall,
        trials: reports.iter().map(|r| r.manifest.clone()).collect(),
    };
    let man_path = sibling(&cfg.output, "manifest.json");
    serde_json::to_writer_pretty(BufWriter::new(File::create(&man_path)?), &manifest)?;
    let policies: Vec<&FinalPolicy> = reports.iter().flat_map(|r| &r.policies).collect();
    let pol_path = sibling(&cfg.output, "policies.json");
    serde_json::to_writer(BufWriter::new(File::create(&pol_path)?), &policies)?;
    Ok(RunSummary {
        rows,
        errors,
        outputs: vec![cfg.output.clone(), man_path, pol_path],
    })
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// All trials of `plan` on a pool of `workers` threads, in trial order.
pub fn run_trials(plan: &Plan, workers: usize) -> Result<Vec<TrialReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..plan.trials).into_par_iter().map(|t| run_trial(plan, t)).collect()))
}

pub fn run_trial(plan: &Plan, trial: usize) -> TrialReport {
    let start = Instant::now();
    let mut report = TrialReport {
        rows: Vec::new(),
        manifest: TrialManifest {
            trial,
            seed: plan.seed,
            stream: trial as u64,
            hc_dataset_sizes: Vec::new(),
            rc_dataset_sizes: Vec::new(),
            wall_seconds: 0.0,
            error: None,
        },
        policies: Vec::new(),
    };
    if let Err(e) = trial_body(plan, trial, &mut report) {
        // Setup failed before any row was produced.
        report.manifest.error = Some(e.to_string());
        report.rows.clear();
        for alg in [Algorithm::HC, Algorithm::RC] {
            for &b in &plan.schedule {
                report.rows.push(ResultRow::failed(trial, alg, b, &e));
            }
        }
    }
    report.manifest.wall_seconds = start.elapsed().as_secs_f64();
    report
}

/// Builds the trial's environment and supervisor.
pub fn trial_setup(plan: &Plan, rng: &mut RandomSource) -> Result<(Environment, Supervisor)> {
    match plan.kind {
        ExperimentKind::GridExpressiveness | ExperimentKind::GridNoisy => {
            let mut world = gridworld_generate(rng, plan.grid_size, plan.grid_size, plan.penalty_frac)?;
            world.slip_prob = plan.slip_prob;
            world.horizon = plan.horizon;
            let mut sup = Supervisor::Grid(GridSupervisor::solve(&world)?);
            if let Some(p) = plan.flip_prob {
                sup = Supervisor::noisy(sup, p)?;
            }
            Ok((Environment::Grid(world), sup))
        }
        ExperimentKind::PointmassConvergence => {
            let mut pm = PointMassEnv::with_noise(plan.noise_var);
            pm.horizon = plan.horizon;
            let sup = Supervisor::SwitchingLqr(SwitchingLqr::for_env(&pm)?);
            Ok((Environment::PointMass(pm), sup))
        }
        ExperimentKind::Theorem => Err(Error::Config("theorem runs have no trials".into())),
    }
}

struct Evaluator<'a> {
    env: &'a Environment,
    plan: &'a Plan,
    seed: u64,
    baseline: f64,
}

impl Evaluator<'_> {
    fn score(&self, policy: &Policy) -> Result<(f64, bool)> {
        let r = paired_returns(self.env, policy, self.plan.n_eval, self.plan.horizon, self.seed)?;
        let n = normalize(self.env, mean(&r), self.baseline, self.plan.horizon, true)?;
        Ok((n.value, n.baseline_shifted))
    }
}

fn flatten(trajs: &[Trajectory], provenance: Provenance) -> Dataset {
    let mut d = Dataset::new();
    for t in trajs {
        d.extend_from_trajectory(t, provenance);
    }
    d
}

/// Number of trailing trajectories held out at budget `b`.
pub fn heldout_count(b: usize) -> usize {
    b / 6
}

fn fill_losses(row: &mut ResultRow, losses: Result<Vec<f64>>) {
    match losses {
        Ok(l) => {
            row.loss_dim1 = l.first().copied();
            row.loss_dim2 = l.get(1).copied();
        }
        Err(e) => row.error = Some(e.to_string()),
    }
}

fn blank_row(trial: usize, algorithm: Algorithm, demos: usize) -> ResultRow {
    ResultRow {
        trial,
        algorithm,
        demos,
        norm_perf: None,
        loss_dim1: None,
        loss_dim2: None,
        baseline_shifted: false,
        error: None,
    }
}

fn scored_row(
    eval: &Evaluator<'_>,
    trial: usize,
    alg: Algorithm,
    b: usize,
    policy: std::result::Result<&Policy, &Error>,
) -> ResultRow {
    let mut row = blank_row(trial, alg, b);
    match policy.map(|p| eval.score(p)) {
        Ok(Ok((v, shifted))) => {
            row.norm_perf = Some(v);
            row.baseline_shifted = shifted;
        }
        Ok(Err(e)) => row.error = Some(e.to_string()),
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn trial_body(plan: &Plan, trial: usize, report: &mut TrialReport) -> Result<()> {
    let root = RandomSource::child(plan.seed, trial as u64);
    let (env, sup) = trial_setup(plan, &mut root.derive(ENV_STREAM))?;
    let eval_seed = root.derive(EVAL_STREAM).next_u64();
    let base = paired_returns(&env, &Exact(&sup), plan.n_eval, plan.horizon, eval_seed)?;
    let eval = Evaluator {
        env: &env,
        plan,
        seed: eval_seed,
        baseline: mean(&base),
    };
    let labeler = Labeler::new(&sup, plan.label_noise)?;
    let max_b = *plan.schedule.last().expect("validated nonempty");
    let heldout_on = |b: usize| heldout_count(b) > 0 && b - heldout_count(b) >= 1;

    // Human-centric: one batch of demonstrations, fit on every prefix.
    let (_, demos) = hc_collect_with(&env, &labeler, max_b, plan.horizon, &mut root.derive(HC_STREAM))?;
    for &b in &plan.schedule {
        let data = flatten(&demos[..b], Provenance::InitialDemo);
        report.manifest.hc_dataset_sizes.push(data.len());
        let fit = plan.learner.fit(&env, &data, &mut root.derive(HC_FIT_STREAM).derive(b as u64));
        let mut row = scored_row(&eval, trial, Algorithm::HC, b, fit.as_ref());
        if heldout_on(b) && row.error.is_none() {
            let h = heldout_count(b);
            let train = flatten(&demos[..b - h], Provenance::InitialDemo);
            let test = flatten(&demos[b - h..b], Provenance::InitialDemo);
            let losses = plan
                .learner
                .fit(&env, &train, &mut root.derive(HC_HELDOUT_STREAM).derive(b as u64))
                .and_then(|p| heldout_surrogate_loss(&p, &test));
            fill_losses(&mut row, losses);
        }
        report.rows.push(row);
        if b == max_b {
            if let Ok(p) = fit {
                report.policies.push(FinalPolicy { trial, algorithm: Algorithm::HC, demos: b, policy: p });
            }
        }
    }

    // Robot-centric.
    let rc_cfg = RcConfig {
        m_initial: plan.rc.m_initial,
        iterations: plan.rc.iterations.unwrap_or(0),
        rollouts_per_iteration: plan.rc.rollouts_per_iteration,
        beta: plan.rc.beta,
        label_noise: plan.label_noise,
        learner: plan.learner.clone(),
    };
    let mut rc_rng = root.derive(RC_STREAM);
    match plan.rc.iterations {
        None => {
            let r = plan.rc.rollouts_per_iteration;
            let schedule = vec![r; (max_b - plan.rc.m_initial) / r];
            match rc_dagger_scheduled(&env, &sup, &rc_cfg, &schedule, plan.horizon, &mut rc_rng) {
                Ok(out) => {
                    report.manifest.rc_dataset_sizes.push(out.dataset_sizes.clone());
                    let index_of = |b: usize| (b - plan.rc.m_initial) / r;
                    let reachable = |b: usize| b >= plan.rc.m_initial && (b - plan.rc.m_initial).is_multiple_of(r);
                    for &b in &plan.schedule {
                        let policy = &out.policies[index_of(b)];
                        let mut row = scored_row(&eval, trial, Algorithm::RC, b, Ok(policy));
                        let h = heldout_count(b);
                        if heldout_on(b) && reachable(b - h) && row.error.is_none() {
                            let test = flatten(&out.trajectories[b - h..b], Provenance::InitialDemo);
                            let losses = heldout_surrogate_loss(
                                &out.policies[index_of(b - h)],
                                &test,
                            );
                            fill_losses(&mut row, losses);
                        }
                        report.rows.push(row);
                    }
                    report.policies.push(FinalPolicy {
                        trial,
                        algorithm: Algorithm::RC,
                        demos: max_b,
                        policy: out.policy,
                    });
                }
                Err(e) => {
                    for &b in &plan.schedule {
                        report.rows.push(ResultRow::failed(trial, Algorithm::RC, b, &e));
                    }
                }
            }
        }
        Some(_) => {
            for &b in &plan.schedule {
                let mut rng = rc_rng.derive(b as u64);
                let run = data_equalized_schedule(b, &rc_cfg)
                    .and_then(|s| rc_dagger_scheduled(&env, &sup, &rc_cfg, &s, plan.horizon, &mut rng));
                match run {
                    Ok(out) => {
                        report.manifest.rc_dataset_sizes.push(out.dataset_sizes.clone());
                        report.rows.push(scored_row(&eval, trial, Algorithm::RC, b, Ok(&out.policy)));
                        if b == max_b {
                            report.policies.push(FinalPolicy {
                                trial,
                                algorithm: Algorithm::RC,
                                demos: b,
                                policy: out.policy,
                            });
                        }
                    }
                    Err(e) => report.rows.push(ResultRow::failed(trial, Algorithm::RC, b, &e)),
                }
            }
        }
    }
    Ok(())
}

/// Runs the theorem table for `m` in `ms` and writes it to `out`.
pub fn theorem_csv<W: std::io::Write>(out: W, ms: &[usize], mu: f64, trials: usize, seed: u64) -> Result<()> {
    let table = stuck_table(ms, mu, trials, seed)?;
    write_theorem_table(out, &table)
}
