use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use prepush::bench::{run_suite, BenchError, BenchSuite};
use prepush::dynamics::{DynamicsError, StepAnalysis};
use prepush::plan_file::{PlanDocument, PlanFileError};
use prepush::planner::{plan_with, verify_plan, PlanError, PlanOptions};
use prepush::render::render_plan;
use prepush::scene::SceneError;
use prepush::{check_stable_push, FeasibilityCertificate, GraspPose, ObjectTwist, Scene};

/// Exit statuses. Stable: scripts and tests depend on them.
mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const INVALID_INPUT: u8 = 4;
    pub const BUDGET_EXHAUSTED: u8 = 5;
    pub const UNKNOWN_PUSHER: u8 = 6;
    pub const HASH_MISMATCH: u8 = 7;
    pub const BENCH_FAILED: u8 = 8;
    pub const VERIFICATION_FAILED: u8 = 9;
}

#[derive(Parser)]
#[command(name = "prepush", version, about = "Stable prehensile pushing: feasibility checks and in-hand regrasp planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a regrasp from the start pose (0, 0, 0) to a goal pose.
    Plan(PlanArgs),
    /// Check one push, or re-verify every step of a plan file.
    Check(CheckArgs),
    /// Run a benchmark suite and write a report.
    Bench(BenchArgs),
    /// Draw a plan as a sequence of SVG frames.
    Render(RenderArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Goal pose "x,z,theta" in mm, mm, deg.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    goal: [f64; 3],
    #[arg(long)]
    seed: Option<u64>,
    /// Largest acceptable number of pusher switch-overs.
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Wall-clock limit in seconds. Runs that hit it are not reproducible.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Record wall time in the plan file (makes the file non-deterministic).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: PathBuf,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Plan file to re-verify step by step.
    #[arg(long, conflicts_with_all = ["twist", "pusher", "pose", "ignore_sticking"])]
    plan: Option<PathBuf>,
    /// Object twist "v_x,v_z,omega" in mm/s, mm/s, deg/s (object frame).
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true, required_unless_present = "plan")]
    twist: Option<[f64; 3]>,
    #[arg(long, required_unless_present = "plan")]
    pusher: Option<String>,
    /// Pose "x,z,theta" in mm, mm, deg.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pose: Option<[f64; 3]>,
    /// Treat every finger point as sliding, even where it sticks.
    #[arg(long)]
    ignore_sticking: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        let code = match e {
            SceneError::Io(_) => exit::IO,
            _ => exit::INVALID_INPUT,
        };
        fail(code, e.to_string())
    }
}

impl From<PlanFileError> for Failure {
    fn from(e: PlanFileError) -> Self {
        let code = match e {
            PlanFileError::Io(_) => exit::IO,
            PlanFileError::HashMismatch { .. } => exit::HASH_MISMATCH,
            _ => exit::INVALID_INPUT,
        };
        fail(code, e.to_string())
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"))?;
        if !o.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| fail(exit::IO, format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn cmd_plan(a: PlanArgs) -> Result<(), Failure> {
    let scene = Scene::load(&a.scene)?;
    let goal = GraspPose::from_mm_deg(a.goal[0], a.goal[1], a.goal[2]);
    let seed = a.seed.unwrap_or(scene.planner().seed);
    let threshold = a.threshold.unwrap_or(scene.planner().switchover_threshold);
    let deadline = match a.time_limit {
        Some(t) if t > 0.0 && t.is_finite() => Some(Duration::from_secs_f64(t)),
        Some(t) => return Err(fail(exit::USAGE, format!("--time-limit must be positive, got {t}"))),
        None => None,
    };
    let opts = PlanOptions {
        switchover_threshold: Some(threshold),
        max_iterations: a.max_iterations,
        seed: Some(seed),
        deadline,
    };
    let started = Instant::now();
    let outcome = match plan_with(&scene, &GraspPose::default(), &goal, &opts) {
        Ok(o) => o,
        Err(e @ PlanError::BudgetExhausted { .. }) => return Err(fail(exit::BUDGET_EXHAUSTED, e.to_string())),
        Err(e) => return Err(fail(exit::INVALID_INPUT, e.to_string())),
    };
    let mut doc = PlanDocument::new(&scene, &outcome, seed, threshold);
    if a.timing {
        doc = doc.with_wall_time(started.elapsed().as_secs_f64());
    }
    write_file(&a.out, &doc.to_json())?;
    let p = &outcome.plan;
    let err = [p.final_error[0] * 1e3, p.final_error[1] * 1e3, p.final_error[2].to_degrees()];
    if a.json {
        let summary = serde_json::json!({
            "out": a.out,
            "seed": seed,
            "segments": p.segments.len(),
            "steps": p.step_count(),
            "switchovers": p.switchovers,
            "pushers": p.segments.iter().map(|s| s.pusher.as_str()).collect::<Vec<_>>(),
            "final_error_mm_deg": err,
            "iterations": outcome.stats.iterations,
            "tree_size": outcome.stats.tree_size,
        });
        println!("{}", to_json(&summary));
    } else {
        let pushers: Vec<&str> = p.segments.iter().map(|s| s.pusher.as_str()).collect();
        println!(
            "plan: {} steps in {} segments, {} switch-overs [{}]",
            p.step_count(),
            p.segments.len(),
            p.switchovers,
            pushers.join(" -> ")
        );
        println!(
            "final error: x {:+.3} mm, z {:+.3} mm, theta {:+.3} deg",
            err[0], err[1], err[2]
        );
        println!(
            "search: {} iterations, {} tree nodes, seed {seed}",
            outcome.stats.iterations, outcome.stats.tree_size
        );
        println!("wrote {}", a.out.display());
    }
    Ok(())
}

fn print_certificate(c: &FeasibilityCertificate) {
    println!("verdict: {}", if c.feasible { "feasible" } else { "infeasible" });
    println!("case: {:?}", c.case);
    println!("pusher: {}", c.pusher);
    match c.margin {
        Some(m) => println!("margin: {m:.6e}"),
        None => println!("margin: none (no candidate wrench in the cone)"),
    }
    if let Some(w) = &c.witness {
        let p = w.pusher_wrench;
        println!(
            "witness pusher impulse: fx {:.6e} N s, fz {:.6e} N s, tau {:.6e} N m s",
            p.fx, p.fz, p.tau
        );
        let s = w.sticking_impulse;
        println!(
            "witness sticking impulse: fx {:.6e} N s, fz {:.6e} N s, tau {:.6e} N m s",
            s.fx, s.fz, s.tau
        );
    }
    if let Some(r) = c.residual {
        println!("residual: {r:.3e}");
    }
}

fn cmd_check(a: CheckArgs) -> Result<(), Failure> {
    let scene = Scene::load(&a.scene)?;
    if let Some(plan_path) = a.plan {
        return check_plan(&scene, &plan_path, a.json);
    }
    let (Some(t), Some(pusher)) = (a.twist, a.pusher) else {
        return Err(fail(exit::USAGE, "--twist and --pusher are required without --plan"));
    };
    let twist = ObjectTwist::new(t[0] * 1e-3, t[1] * 1e-3, t[2].to_radians());
    let pose = a
        .pose
        .map_or_else(GraspPose::default, |p| GraspPose::from_mm_deg(p[0], p[1], p[2]));
    let cert = if a.ignore_sticking {
        let i = scene
            .pusher_index(&pusher)
            .ok_or_else(|| fail(exit::UNKNOWN_PUSHER, format!("unknown pusher {pusher:?}")))?;
        StepAnalysis::new(&scene, &pose, &twist)
            .map(|s| s.check_ignoring_sticking(&scene, i))
    } else {
        check_stable_push(&scene, &pose, &twist, &pusher)
    };
    let cert = cert.map_err(|e| match e {
        DynamicsError::UnknownPusher(_) => fail(exit::UNKNOWN_PUSHER, e.to_string()),
        DynamicsError::ZeroTwist => fail(exit::USAGE, format!("{e}: the twist must be nonzero and finite")),
    })?;
    if a.json {
        println!("{}", to_json(&cert));
    } else {
        print_certificate(&cert);
    }
    Ok(())
}

fn check_plan(scene: &Scene, path: &Path, json: bool) -> Result<(), Failure> {
    let doc = PlanDocument::load(path)?;
    doc.check_scene(scene)?;
    let v = verify_plan(scene, &doc.plan);
    if json {
        println!("{}", to_json(&v));
    } else {
        println!("steps checked: {}", v.steps_checked);
        for i in &v.issues {
            println!("segment {} step {}: {:?}", i.segment, i.step, i.issue);
        }
        println!("{}", if v.is_ok() { "plan verified" } else { "plan FAILED verification" });
    }
    if v.is_ok() {
        Ok(())
    } else {
        Err(fail(
            exit::VERIFICATION_FAILED,
            format!("{} verification issues", v.issues.len()),
        ))
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let suite = BenchSuite::load(&a.suite).map_err(|e| match e {
        BenchError::Io(_) => fail(exit::IO, format!("{}: {e}", a.suite.display())),
        _ => fail(exit::INVALID_INPUT, e.to_string()),
    })?;
    let base = a.suite.parent().unwrap_or(Path::new("."));
    let report = run_suite(&suite, base).map_err(|e| match &e {
        BenchError::Scene {
            source: SceneError::Io(_),
            ..
        } => fail(exit::IO, e.to_string()),
        _ => fail(exit::INVALID_INPUT, e.to_string()),
    })?;
    write_file(&a.out, &report.to_json())?;
    if a.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.table());
        for c in report.cases.iter().filter(|c| !c.passed) {
            for f in &c.failures {
                eprintln!("{}: {f}", c.name);
            }
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(fail(exit::BENCH_FAILED, "benchmark expectations not met"))
    }
}

fn cmd_render(a: RenderArgs) -> Result<(), Failure> {
    let doc = PlanDocument::load(&a.plan)?;
    let scene = Scene::load(&a.scene)?;
    doc.check_scene(&scene)?;
    std::fs::create_dir_all(&a.out)
        .map_err(|e| fail(exit::IO, format!("cannot create {}: {e}", a.out.display())))?;
    let frames = render_plan(&scene, &doc.plan);
    for f in &frames {
        write_file(&a.out.join(&f.file_name), &f.svg)?;
    }
    println!("wrote {} frames to {}", frames.len(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Check(a) => cmd_check(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
