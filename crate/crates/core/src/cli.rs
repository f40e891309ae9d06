//! `lfd` command line. Exit codes: 0 success, 1 task failure, 2 usage or
//! unreadable input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::contact_analysis::HysteresisParams;
use crate::execution_sim::{execute_policy, ExecParams, ExecutionResult, Outcome, PerceptionParams, SceneSpec, WorldState, SCENE_VERSION};
use crate::pose_estimation::IcpParams;
use crate::io::{self, FormatError, PlotOptions};
use crate::motion_planning::KinematicChain;
use crate::pipeline::{learn_from_demo, segment_demo, PipelineParams};
use crate::scenario::{generate_demo, ScenarioSpec, SCENARIO_VERSION};
use crate::scenarios::{dishwash_layout, dishwash_spec, pick_place_spec, wrist_flip, Variant};

pub const BUILTIN_CHAIN: &str = "builtin:franka-like";

#[derive(Parser)]
#[command(name = "lfd", version, about = "Learn contact primitives from a demonstration and replay them in simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a demonstration directory (and truth.json) from a scenario spec.
    GenDemo { spec: PathBuf, out: PathBuf },
    /// Contact timelines and primitive segmentation.
    Segment {
        demo: PathBuf,
        #[arg(long)]
        d_make: f64,
        #[arg(long)]
        d_break: f64,
        /// Output directory for timeline.csv and primitives.json (default: the demo directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Learn a policy from a demonstration.
    Learn {
        demo: PathBuf,
        policy_out: PathBuf,
        #[command(flatten)]
        thresholds: Thresholds,
    },
    /// Dry run: report per-primitive feasibility without writing results.
    Plan {
        policy: PathBuf,
        scene: PathBuf,
        /// Robot description JSON, or `builtin:franka-like`.
        chain: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Execute a policy in a simulated scene and emit the result JSON.
    Execute {
        policy: PathBuf,
        scene: PathBuf,
        chain: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        continue_on_error: bool,
        /// Result file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Joint and held-object trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Condition name stored in the result, used by `eval`.
        #[arg(long)]
        label: Option<String>,
        /// Disable alternative goal poses.
        #[arg(long)]
        no_alternatives: bool,
        /// Re-estimate object poses by ICP on clouds rendered with this noise (m).
        #[arg(long, value_name = "SIGMA")]
        perceive: Option<f64>,
    },
    /// Success-rate table over result files.
    Eval {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVG plot of a timeline or trace CSV.
    Plot {
        csv: PathBuf,
        svg_out: PathBuf,
        #[command(flatten)]
        thresholds: Thresholds,
    },
    /// Write a bundled scenario, scene or policy as files.
    Preset {
        #[command(subcommand)]
        which: Preset,
    },
}

#[derive(Args, Clone, Copy)]
struct Thresholds {
    #[arg(long, default_value_t = 0.005)]
    d_make: f64,
    #[arg(long, default_value_t = 0.010)]
    d_break: f64,
}

#[derive(Subcommand)]
enum Preset {
    /// Dishwash demonstration script.
    DishwashSpec {
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Dishwash execution scene.
    DishwashScene {
        out: PathBuf,
        /// nominal, displaced, unseen-bowl or displaced+unseen-bowl
        #[arg(long, default_value = "nominal")]
        variant: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random pick-and-place demonstration script.
    PickPlaceSpec {
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Wrist-flip scene plus its two-primitive policy, written to a directory.
    WristFlip {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Task(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Res = Result<i32, Failure>;

/// Runs the CLI with `argv` (including the program name).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Task(m)) => {
            eprintln!("failed: {m}");
            1
        }
    }
}

fn thresholds(d_make: f64, d_break: f64) -> Result<HysteresisParams, Failure> {
    HysteresisParams::new(d_make, d_break).map_err(|e| Failure::Usage(e.to_string()))
}

pub fn load_chain(arg: &str) -> Result<KinematicChain, FormatError> {
    if arg == BUILTIN_CHAIN {
        return Ok(KinematicChain::franka_like());
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::new(path, e.to_string()))?;
    KinematicChain::from_json(&text).map_err(|e| FormatError::new(path, e.to_string()))
}

fn load_world(policy: &Path, scene: &Path, chain: &str) -> Result<(crate::primitive_learning::Policy, WorldState, KinematicChain), Failure> {
    let policy = io::load_policy(policy)?;
    let spec: SceneSpec = io::read_versioned(scene, SCENE_VERSION)?;
    let chain = load_chain(chain)?;
    let world = WorldState::from_scene(&spec, &chain).map_err(|e| Failure::Usage(format!("{}: {e}", scene.display())))?;
    Ok((policy, world, chain))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(d).map_err(|e| Failure::Task(format!("{}: {e}", d.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Task(format!("{}: {e}", path.display())))
}

fn summary(r: &ExecutionResult) -> String {
    let mut s = String::new();
    for p in &r.primitives {
        let cand = p.candidate.map(|c| format!(" candidate {c}")).unwrap_or_default();
        let msg = p.message.as_deref().map(|m| format!(" ({m})")).unwrap_or_default();
        s += &format!("{:>3} {:<16} {:<8} {:?}{cand}{msg}\n", p.index, format!("{:?}", p.kind), p.target, p.outcome);
    }
    s
}

fn dispatch(cmd: Command) -> Res {
    match cmd {
        Command::GenDemo { spec, out } => {
            let spec: ScenarioSpec = io::read_versioned(&spec, SCENARIO_VERSION)?;
            let (demo, truth) = generate_demo(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
            io::save_demo(&demo, &out).map_err(|e| Failure::Task(e.to_string()))?;
            io::save_truth(&truth, &out).map_err(|e| Failure::Task(e.to_string()))?;
            println!("wrote {} frames to {}", demo.len(), out.display());
            Ok(0)
        }
        Command::Segment { demo, d_make, d_break, out_dir } => {
            let p = thresholds(d_make, d_break)?;
            let d = io::load_demo(&demo)?;
            let seg = segment_demo(&d, &p).map_err(|e| Failure::Task(e.to_string()))?;
            let dir = out_dir.unwrap_or(demo);
            write_file(&dir.join("timeline.csv"), &io::timeline_csv(&seg.contacts))?;
            write_file(&dir.join("primitives.json"), &io::primitives_json(&seg.primitives))?;
            for p in &seg.primitives {
                println!("{:<16} {:<8} {:>4}..{}", format!("{:?}", p.kind), p.target, p.span.0, p.span.1);
            }
            Ok(0)
        }
        Command::Learn { demo, policy_out, thresholds: t } => {
            let params = PipelineParams { hysteresis: thresholds(t.d_make, t.d_break)?, ..Default::default() };
            let d = io::load_demo(&demo)?;
            let (_, _, policy) = learn_from_demo(&d, &params).map_err(|e| Failure::Task(e.to_string()))?;
            io::save_policy(&policy, &policy_out).map_err(|e| Failure::Task(e.to_string()))?;
            println!("learned {} primitives -> {}", policy.primitives.len(), policy_out.display());
            Ok(0)
        }
        Command::Plan { policy, scene, chain, seed } => {
            let (policy, world, chain) = load_world(&policy, &scene, &chain)?;
            let params = ExecParams { seed, continue_on_error: true, ..Default::default() };
            let (_, r) = execute_policy(&policy, &world, &chain, &params);
            print!("{}", summary(&r));
            let feasible = r.primitives.iter().all(|p| p.outcome == Outcome::Success);
            println!("{}", if feasible { "feasible" } else { "infeasible" });
            Ok(if feasible { 0 } else { 1 })
        }
        Command::Execute { policy, scene, chain, seed, continue_on_error, out, trace, label, no_alternatives, perceive } => {
            if perceive.is_some_and(|s| !(s.is_finite() && s >= 0.0)) {
                return Err(Failure::Usage("--perceive must be a non-negative noise level".into()));
            }
            let (policy, world, chain) = load_world(&policy, &scene, &chain)?;
            let params = ExecParams {
                seed,
                continue_on_error,
                propose_alternatives: !no_alternatives,
                record_trace: trace.is_some(),
                perception: perceive.map(|noise_sigma| PerceptionParams { noise_sigma, icp: IcpParams::default() }),
                ..Default::default()
            };
            let (_, mut r) = execute_policy(&policy, &world, &chain, &params);
            r.label = label;
            if let Some(t) = &trace {
                write_file(t, &io::trace_csv(&r))?;
            }
            match &out {
                Some(path) => {
                    io::write_result(&r, path).map_err(|e| Failure::Task(e.to_string()))?;
                    eprint!("{}", summary(&r));
                }
                None => {
                    let text = serde_json::to_string_pretty(&r).expect("serializable");
                    let _ = writeln!(std::io::stdout(), "{text}");
                }
            }
            Ok(if r.success { 0 } else { 1 })
        }
        Command::Eval { results, out } => {
            let rs = results.iter().map(|p| io::read_result(p)).collect::<Result<Vec<_>, _>>()?;
            let table = io::eval_table(&rs).to_string();
            match out {
                Some(p) => write_file(&p, &table)?,
                None => print!("{table}"),
            }
            Ok(0)
        }
        Command::Plot { csv, svg_out, thresholds: t } => {
            let opts = PlotOptions { thresholds: thresholds(t.d_make, t.d_break)?, ..Default::default() };
            let text = std::fs::read_to_string(&csv).map_err(|e| Failure::Usage(format!("{}: {e}", csv.display())))?;
            let svg = io::plot_csv(&text, &csv, &opts)?;
            write_file(&svg_out, &svg)?;
            Ok(0)
        }
        Command::Preset { which } => preset(which),
    }
}

fn preset(which: Preset) -> Res {
    let task = |e: FormatError| Failure::Task(e.to_string());
    match which {
        Preset::DishwashSpec { out, seed } => io::write_json(&out, &dishwash_spec(seed)).map_err(task)?,
        Preset::PickPlaceSpec { out, seed } => io::write_json(&out, &pick_place_spec(seed)).map_err(task)?,
        Preset::DishwashScene { out, variant, seed } => {
            let v = Variant::parse(&variant).ok_or_else(|| Failure::Usage(format!("unknown variant '{variant}'")))?;
            io::write_json(&out, &dishwash_layout(v, seed).scene()).map_err(task)?
        }
        Preset::WristFlip { dir, seed } => {
            let (scene, policy) = wrist_flip(seed).map_err(|e| Failure::Task(e.to_string()))?;
            io::write_json(&dir.join("scene.json"), &scene).map_err(task)?;
            io::save_policy(&policy, &dir.join("policy.json")).map_err(task)?;
        }
    }
    Ok(0)
}
