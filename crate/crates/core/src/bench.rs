//! Benchmark suites: planning cases run over fixed seed lists.
//!
//! A suite file lists cases (scene, goal, seeds, expectations). Trials of a
//! case run through [`crate::par::map`]; the report keeps every trial so
//! the deterministic columns (success, switch-overs, iterations) can be
//! compared across machines while the timing columns cannot.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{plan_with, verify_plan, HistoryPoint, PlanError, PlanOptions};
use crate::pose::GraspPose;
use crate::scene::{Scene, SceneError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read suite: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed suite: {0}")]
    Parse(String),
    #[error("case {case}: {source}")]
    Scene {
        case: String,
        #[source]
        source: SceneError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCase {
    pub name: String,
    /// Scene file, relative to the suite file.
    pub scene: PathBuf,
    /// Goal pose as (x mm, z mm, theta deg).
    pub goal: [f64; 3],
    pub seeds: Vec<u64>,
    /// Successful seeds needed for the case to pass.
    pub min_successes: usize,
    /// Largest switch-over count allowed in a successful plan.
    pub max_switchovers: usize,
    /// Planner threshold; defaults to the scene's.
    #[serde(default)]
    pub switchover_threshold: Option<usize>,
    /// Wall-clock budget per trial, s.
    pub time_budget_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSuite {
    #[serde(default)]
    pub name: String,
    pub cases: Vec<BenchCase>,
}

impl BenchSuite {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let suite: Self =
            serde_json::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))?;
        for c in &suite.cases {
            if !(c.time_budget_s > 0.0 && c.time_budget_s.is_finite()) {
                return Err(BenchError::Parse(format!("case {}: time_budget_s must be positive", c.name)));
            }
            if c.goal.iter().any(|v| !v.is_finite()) {
                return Err(BenchError::Parse(format!("case {}: goal must be finite", c.name)));
            }
        }
        Ok(suite)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub success: bool,
    /// The run hit the wall-clock budget.
    pub timed_out: bool,
    pub switchovers: Option<usize>,
    pub iterations: usize,
    pub tree_size: usize,
    pub history: Vec<HistoryPoint>,
    /// Final pose minus goal, (mm, mm, deg).
    pub final_error: Option<[f64; 3]>,
    pub elapsed_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub name: String,
    pub scene: PathBuf,
    pub scene_hash: String,
    pub goal: [f64; 3],
    pub successes: usize,
    pub success_rate: f64,
    pub median_time_s: f64,
    pub p90_time_s: f64,
    pub median_iterations: f64,
    pub best_switchovers: Option<usize>,
    /// Largest |error| per axis over successful trials, (mm, mm, deg).
    pub max_final_error: Option<[f64; 3]>,
    pub passed: bool,
    pub failures: Vec<String>,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub logical_cpus: usize,
    pub parallel: bool,
    pub optimized: bool,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            parallel: crate::par::PARALLEL,
            optimized: !cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub format_version: u32,
    pub suite: String,
    pub environment: Environment,
    pub cases: Vec<CaseReport>,
    pub passed: bool,
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Fixed-width text table, one row per case.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<24} {:>7} {:>9} {:>9} {:>10} {:>4}  {}\n",
            "case", "success", "median s", "p90 s", "median it", "sw", "result"
        );
        for c in &self.cases {
            out += &format!(
                "{:<24} {:>7} {:>9.3} {:>9.3} {:>10.0} {:>4}  {}\n",
                c.name,
                format!("{}/{}", c.successes, c.trials.len()),
                c.median_time_s,
                c.p90_time_s,
                c.median_iterations,
                c.best_switchovers.map_or("-".into(), |s| s.to_string()),
                if c.passed { "pass" } else { "FAIL" },
            );
        }
        out
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Nearest-rank percentile, `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = (q * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

pub fn run_trial(scene: &Scene, case: &BenchCase, seed: u64) -> TrialResult {
    let goal = GraspPose::from_mm_deg(case.goal[0], case.goal[1], case.goal[2]);
    let budget = Duration::from_secs_f64(case.time_budget_s);
    let opts = PlanOptions {
        switchover_threshold: case.switchover_threshold,
        seed: Some(seed),
        deadline: Some(budget),
        ..Default::default()
    };
    let mut t = TrialResult {
        seed,
        success: false,
        timed_out: false,
        switchovers: None,
        iterations: 0,
        tree_size: 0,
        history: Vec::new(),
        final_error: None,
        elapsed_s: 0.0,
        error: None,
    };
    match plan_with(scene, &GraspPose::default(), &goal, &opts) {
        Ok(out) => {
            let v = verify_plan(scene, &out.plan);
            let e = out.plan.final_error;
            t.success = v.is_ok();
            t.switchovers = Some(out.plan.switchovers);
            t.iterations = out.stats.iterations;
            t.tree_size = out.stats.tree_size;
            t.history = out.stats.history;
            t.final_error = Some([e[0] * 1e3, e[1] * 1e3, e[2].to_degrees()]);
            t.elapsed_s = out.stats.elapsed.as_secs_f64();
            if !v.is_ok() {
                t.error = Some(format!("plan failed re-verification: {:?}", v.issues));
            }
        }
        Err(e) => {
            if let PlanError::BudgetExhausted { stats, .. } = &e {
                t.iterations = stats.iterations;
                t.tree_size = stats.tree_size;
                t.history = stats.history.clone();
                t.elapsed_s = stats.elapsed.as_secs_f64();
                t.timed_out = stats.elapsed >= budget;
            }
            t.error = Some(e.to_string());
        }
    }
    t
}

pub fn run_case(scene: &Scene, case: &BenchCase, scene_path: PathBuf) -> CaseReport {
    let trials = crate::par::map(&case.seeds, |&seed| run_trial(scene, case, seed));
    summarize(case, scene, scene_path, trials)
}

fn summarize(case: &BenchCase, scene: &Scene, scene_path: PathBuf, trials: Vec<TrialResult>) -> CaseReport {
    let ok: Vec<&TrialResult> = trials.iter().filter(|t| t.success).collect();
    let times: Vec<f64> = trials.iter().map(|t| t.elapsed_s).collect();
    let iters: Vec<f64> = trials.iter().map(|t| t.iterations as f64).collect();
    let best_switchovers = ok.iter().filter_map(|t| t.switchovers).min();
    let max_final_error = ok.iter().filter_map(|t| t.final_error).fold(None, |acc: Option<[f64; 3]>, e| {
        let a = acc.unwrap_or([0.0; 3]);
        Some([a[0].max(e[0].abs()), a[1].max(e[1].abs()), a[2].max(e[2].abs())])
    });
    let mut failures = Vec::new();
    if ok.len() < case.min_successes {
        failures.push(format!(
            "{} of {} seeds succeeded, {} required",
            ok.len(),
            trials.len(),
            case.min_successes
        ));
    }
    for t in &ok {
        if t.switchovers.is_some_and(|s| s > case.max_switchovers) {
            failures.push(format!(
                "seed {} used {} switch-overs, at most {} allowed",
                t.seed,
                t.switchovers.unwrap_or_default(),
                case.max_switchovers
            ));
        }
    }
    CaseReport {
        name: case.name.clone(),
        scene: scene_path,
        scene_hash: scene.content_hash(),
        goal: case.goal,
        successes: ok.len(),
        success_rate: if trials.is_empty() { 0.0 } else { ok.len() as f64 / trials.len() as f64 },
        median_time_s: median(&times),
        p90_time_s: percentile(&times, 0.9),
        median_iterations: median(&iters),
        best_switchovers,
        max_final_error,
        passed: failures.is_empty(),
        failures,
        trials,
    }
}

/// Runs every case. Scene paths are resolved against `base_dir`.
pub fn run_suite(suite: &BenchSuite, base_dir: &Path) -> Result<BenchReport, BenchError> {
    let mut cases = Vec::with_capacity(suite.cases.len());
    for case in &suite.cases {
        let path = base_dir.join(&case.scene);
        let scene = Scene::load(&path).map_err(|source| BenchError::Scene {
            case: case.name.clone(),
            source,
        })?;
        cases.push(run_case(&scene, case, case.scene.clone()));
    }
    Ok(BenchReport {
        format_version: FORMAT_VERSION,
        suite: suite.name.clone(),
        environment: Environment::current(),
        passed: cases.iter().all(|c| c.passed),
        cases,
    })
}
