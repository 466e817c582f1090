//! `fieldnav` — command line front end for the navigation testbed.
//!
//! Subcommands: `scene-gen` (procedural scenes + manifest), `dataset-gen`
//! (training tuples from a scene manifest), `eval` (policy grid over seeded
//! episodes, JSON report), `render` (map images with potential or trajectory
//! overlays) and `bench` (wall-time of the core operations).
//!
//! Exit codes: 0 success; 2 usage or configuration error (unknown flags,
//! malformed or out-of-range config values — the message names the field);
//! 1 runtime failure (missing files, malformed inputs, generation errors).
//! Every artifact is written atomically (write to a temp file, then rename),
//! and every subcommand is deterministic given its config and seed.

mod config;
mod manifest;
mod render;

use std::fmt;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use fieldnav::dataset::{
    make_tuple_with_provenance, write_dataset, AugmentRecord, MaskStrategy, Provenance,
};
use fieldnav::geodesics::{distance_field, FieldMode};
use fieldnav::grid::{GridCell, SemanticGrid};
use fieldnav::mapfile;
use fieldnav::potentials::{area_potential, object_potential};
use fieldnav::predictor::PredictorKind;
use fieldnav::scenegen::{generate_scene, SceneParams};
use fieldnav::sim::{evaluate, EvalOptions, EvalReport, Policy};

use config::RunConfig;
use render::Overlay;

/// Grid-world testbed for potential-field object-goal navigation.
#[derive(Parser)]
#[command(name = "fieldnav", version, about)]
struct Cli {
    /// TOML run configuration; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the effective configuration (file + flag merges) as TOML and
    /// exit without running the subcommand.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate procedural indoor scenes and a manifest listing them.
    SceneGen(SceneGenArgs),
    /// Generate a training-tuple dataset from a scene manifest.
    DatasetGen(DatasetGenArgs),
    /// Evaluate navigation policies over seeded episodes.
    Eval(EvalArgs),
    /// Render a map to a PNG, optionally with an overlay.
    Render(RenderArgs),
    /// Time the core operations.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SceneGenArgs {
    /// Seed of the first scene; scene i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of scenes to generate.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Scene width in meters.
    #[arg(long, default_value_t = 10.0)]
    width_m: f64,
    /// Scene height in meters.
    #[arg(long, default_value_t = 10.0)]
    height_m: f64,
    /// Outer wall margin in meters.
    #[arg(long, default_value_t = 0.5)]
    margin_m: f64,
    /// Minimum number of rooms.
    #[arg(long, default_value_t = 4)]
    rooms_min: usize,
    /// Maximum number of rooms.
    #[arg(long, default_value_t = 7)]
    rooms_max: usize,
}

#[derive(Args)]
struct DatasetGenArgs {
    /// Scene manifest written by scene-gen.
    #[arg(long, value_name = "FILE")]
    scenes: PathBuf,
    /// Number of training tuples.
    #[arg(long, default_value_t = 64)]
    count: usize,
    /// Exploration mask strategy: square or view-cone.
    #[arg(long)]
    mask: Option<String>,
    /// Master seed; tuple seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Scene manifest written by scene-gen.
    #[arg(long, value_name = "FILE")]
    scenes: PathBuf,
    /// Policy to evaluate (repeatable): poni, fbe, area_only, object_only.
    #[arg(long = "policy", value_name = "NAME")]
    policies: Vec<String>,
    /// Predictor feeding the potential-driven policies: oracle,
    /// frontier-area-heuristic or uniform-frontier.
    #[arg(long, default_value = "oracle")]
    predictor: String,
    /// Episodes per scene.
    #[arg(long, default_value_t = 5)]
    episodes: usize,
    /// Evaluation seed (episode sampling and tie-breaking).
    #[arg(long)]
    seed: Option<u64>,
    /// Output JSON report.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,
    /// Step budget per episode.
    #[arg(long, default_value_t = 500)]
    budget_steps: usize,
    /// Blend weight override for the combined potential.
    #[arg(long)]
    alpha: Option<f64>,
    /// Distance saturation override for the object potential, meters.
    #[arg(long)]
    d_max_m: Option<f64>,
}

#[derive(Args)]
struct RenderArgs {
    /// Map file to draw.
    #[arg(long, value_name = "FILE")]
    map: PathBuf,
    /// Overlay: none, pf:area, pf:object:<cat> or
    /// trajectory:<report>,<episode>.
    #[arg(long, default_value = "none")]
    overlay: Overlay,
    /// Complete reference map for potential overlays (defaults to --map).
    #[arg(long, value_name = "FILE")]
    complete: Option<PathBuf>,
    /// Output PNG.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Pixels per cell.
    #[arg(long, default_value_t = 1)]
    scale: u32,
}

#[derive(Args)]
struct BenchArgs {
    /// Repetitions per operation.
    #[arg(long, default_value_t = 3)]
    reps: usize,
}

/// Errors split by exit code: usage/config problems exit 2, runtime
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<fieldnav::Error> for CliError {
    fn from(e: fieldnav::Error) -> Self {
        CliError::Runtime(anyhow::Error::new(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::SceneGen(args) => {
            let mut cfg = base;
            if let Some(seed) = args.seed {
                cfg.seeds.scene = seed;
            }
            cfg.validate()?;
            if cli.print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            scene_gen(&cfg, &args)
        }
        Command::DatasetGen(args) => {
            let mut cfg = base;
            if let Some(seed) = args.seed {
                cfg.seeds.dataset = seed;
            }
            if let Some(mask) = &args.mask {
                cfg.mask.strategy = parse_mask_strategy(mask)?;
            }
            cfg.validate()?;
            if cli.print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            dataset_gen(&cfg, &args)
        }
        Command::Eval(args) => {
            let mut cfg = base;
            if let Some(seed) = args.seed {
                cfg.seeds.eval = seed;
            }
            if let Some(alpha) = args.alpha {
                cfg.potential.alpha = alpha;
            }
            if let Some(d_max) = args.d_max_m {
                cfg.potential.d_max_m = d_max;
            }
            cfg.validate()?;
            if cli.print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            eval_cmd(&cfg, &args)
        }
        Command::Render(args) => {
            let cfg = base;
            cfg.validate()?;
            if cli.print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            render_cmd(&cfg, &args)
        }
        Command::Bench(args) => {
            let cfg = base;
            cfg.validate()?;
            if cli.print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            bench_cmd(&cfg, &args)
        }
    }
}

fn parse_mask_strategy(name: &str) -> Result<MaskStrategy, CliError> {
    match name {
        "square" => Ok(MaskStrategy::Square),
        "view-cone" => Ok(MaskStrategy::ViewCone),
        other => Err(CliError::Usage(format!(
            "unknown mask strategy '{other}' (expected square or view-cone)"
        ))),
    }
}

/// Writes `bytes` to `path` atomically: a temp file in the same directory is
/// renamed over the target, so readers never observe a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp_name = format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id());
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

/// Mixes a tuple index into the master seed (splitmix64 finalizer) so each
/// tuple gets an independent, reproducible stream.
fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn scene_gen(cfg: &RunConfig, args: &SceneGenArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if args.rooms_min > args.rooms_max {
        return Err(CliError::Usage(format!(
            "--rooms-min {} exceeds --rooms-max {}",
            args.rooms_min, args.rooms_max
        )));
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::Runtime)?;
    let mut entries = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let seed = cfg.seeds.scene.wrapping_add(i as u64);
        let params = SceneParams {
            seed,
            width_m: args.width_m,
            height_m: args.height_m,
            resolution_m: cfg.resolution_m,
            margin_m: args.margin_m,
            room_count_range: (args.rooms_min, args.rooms_max),
            ..SceneParams::default()
        };
        let grid = generate_scene(&params)?;
        let id = format!("scene-{seed:04}");
        let file = format!("{id}.map");
        write_atomic(
            &args.out.join(&file),
            mapfile::write_map_string(&grid).as_bytes(),
        )?;
        entries.push(manifest::ManifestEntry {
            id,
            seed,
            path: file,
        });
    }
    let man = manifest::Manifest {
        version: manifest::MANIFEST_VERSION,
        resolution_m: cfg.resolution_m,
        width_m: args.width_m,
        height_m: args.height_m,
        scenes: entries,
    };
    write_atomic(&args.out.join("manifest.json"), man.to_json().as_bytes())?;
    println!(
        "wrote {} scene(s) and manifest.json to {}",
        args.count,
        args.out.display()
    );
    Ok(())
}

fn dataset_gen(cfg: &RunConfig, args: &DatasetGenArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let scenes = manifest::load_scenes(&args.scenes)?;
    let mut tuples = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let (id, grid) = &scenes[i % scenes.len()];
        let provenance = Provenance {
            scene_id: id.clone(),
            seed: derive_seed(cfg.seeds.dataset, i as u64),
            augment: AugmentRecord::identity(),
        };
        let tuple = make_tuple_with_provenance(grid, provenance, &cfg.mask, &cfg.potential)?;
        tuples.push(tuple);
    }
    let tmp = args.out.with_extension("pfds.tmp");
    write_dataset(&tmp, &tuples)?;
    std::fs::rename(&tmp, &args.out)
        .with_context(|| format!("renaming {} to {}", tmp.display(), args.out.display()))
        .map_err(CliError::Runtime)?;
    println!(
        "wrote {} tuple(s) from {} scene(s) to {}",
        args.count,
        scenes.len(),
        args.out.display()
    );
    Ok(())
}

fn eval_cmd(cfg: &RunConfig, args: &EvalArgs) -> Result<(), CliError> {
    let kind = PredictorKind::from_str(&args.predictor).map_err(|e| CliError::Usage(e.to_string()))?;
    let names: Vec<String> = if args.policies.is_empty() {
        vec!["poni".to_string()]
    } else {
        args.policies.clone()
    };
    let mut policies = Vec::with_capacity(names.len());
    for name in &names {
        if names.iter().filter(|n| *n == name).count() > 1 {
            return Err(CliError::Usage(format!("--policy {name} given more than once")));
        }
        let policy =
            Policy::from_name(name, kind, cfg.potential).map_err(|e| CliError::Usage(e.to_string()))?;
        policies.push(policy);
    }
    let scenes = manifest::load_scenes(&args.scenes)?;
    let options = EvalOptions {
        sensors: cfg.sensor,
        motion: cfg.motion,
        budget_steps: args.budget_steps,
        success_radius_m: cfg.potential.success_radius_m,
        ..EvalOptions::default()
    };
    let report = evaluate(&policies, &scenes, args.episodes, cfg.seeds.eval, &options)?;
    let mut json = report.to_json()?;
    json.push('\n');
    write_atomic(&args.report, json.as_bytes())?;
    println!(
        "{:<12} {:>9} {:>7} {:>8} {:>7}",
        "policy", "success", "spl", "softspl", "dts_m"
    );
    for p in &report.policies {
        println!(
            "{:<12} {:>9.3} {:>7.3} {:>8.3} {:>7.2}",
            p.policy,
            p.aggregate.success_rate,
            p.aggregate.mean_spl,
            p.aggregate.mean_softspl,
            p.aggregate.mean_dts_m
        );
    }
    println!("report: {}", args.report.display());
    Ok(())
}

fn render_cmd(cfg: &RunConfig, args: &RenderArgs) -> Result<(), CliError> {
    if args.scale == 0 {
        return Err(CliError::Usage("--scale must be at least 1".into()));
    }
    let map: SemanticGrid = mapfile::read_map(&args.map)?;
    let mut img = render::render_base(&map, args.scale);
    match &args.overlay {
        Overlay::None => {}
        Overlay::PfArea => {
            let complete = load_reference(&map, args.complete.as_deref())?;
            let field = area_potential(&map, &complete, &cfg.potential)?;
            render::overlay_field(&mut img, &map, &field, args.scale);
        }
        Overlay::PfObject(name) => {
            let complete = load_reference(&map, args.complete.as_deref())?;
            let id = complete.categories().id_of(name).ok_or_else(|| {
                CliError::Runtime(anyhow::anyhow!(
                    "category '{name}' is not in the map's category table"
                ))
            })?;
            let field = object_potential(&map, &complete, id, &cfg.potential)?;
            render::overlay_field(&mut img, &map, &field, args.scale);
        }
        Overlay::Trajectory { report, episode } => {
            let text = std::fs::read_to_string(report)
                .with_context(|| format!("cannot read report {report}"))
                .map_err(CliError::Runtime)?;
            let parsed: EvalReport = serde_json::from_str(&text)
                .with_context(|| format!("invalid report {report}"))
                .map_err(CliError::Runtime)?;
            let rows: Vec<_> = parsed
                .policies
                .iter()
                .flat_map(|p| p.episodes.iter())
                .collect();
            let row = rows.get(*episode).ok_or_else(|| {
                CliError::Runtime(anyhow::anyhow!(
                    "episode {episode} out of range: report has {} row(s)",
                    rows.len()
                ))
            })?;
            render::overlay_trajectory(&mut img, &map, &row.trajectory, args.scale);
        }
    }
    let mut buf = Vec::new();
    img.write_to(&mut Cursor::new(&mut buf), image::ImageOutputFormat::Png)
        .context("encoding png")
        .map_err(CliError::Runtime)?;
    write_atomic(&args.out, &buf)?;
    println!(
        "wrote {} ({}x{} px)",
        args.out.display(),
        img.width(),
        img.height()
    );
    Ok(())
}

/// PF overlays compare the drawn map against a complete reference; with no
/// `--complete` the map itself is the reference (useful for complete maps —
/// partial maps then render an all-zero overlay).
fn load_reference(map: &SemanticGrid, path: Option<&Path>) -> Result<SemanticGrid, CliError> {
    let complete = match path {
        Some(p) => mapfile::read_map(p)?,
        None => map.clone(),
    };
    Ok(complete)
}

fn bench_cmd(cfg: &RunConfig, args: &BenchArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let params = SceneParams {
        seed: cfg.seeds.scene,
        resolution_m: cfg.resolution_m,
        ..SceneParams::default()
    };
    let scene = generate_scene(&params)?;
    let cells = scene.width() * scene.height();
    println!(
        "benchmarking on a {}x{} cell scene, {} rep(s) per op",
        scene.width(),
        scene.height(),
        args.reps
    );

    let time = |label: &str, mut op: Box<dyn FnMut() -> Result<(), CliError>>| -> Result<(), CliError> {
        let start = Instant::now();
        for _ in 0..args.reps {
            op()?;
        }
        let mean_ms = start.elapsed().as_secs_f64() * 1e3 / args.reps as f64;
        println!("{label:<34} {mean_ms:>9.2} ms/op");
        Ok(())
    };

    {
        let params = params.clone();
        time(
            "scene-gen",
            Box::new(move || {
                generate_scene(&params)?;
                Ok(())
            }),
        )?;
    }
    {
        let scene = scene.clone();
        let source = scene
            .cells()
            .find(|&c| scene.is_free(c))
            .context("scene has no free cell")
            .map_err(CliError::Runtime)?;
        time(
            "distance-field (octile, full map)",
            Box::new(move || {
                let sources = std::collections::BTreeSet::from([source]);
                distance_field(
                    &scene,
                    &sources,
                    |c: GridCell| !scene.is_obstacle(c),
                    FieldMode::DijkstraOctile,
                )?;
                Ok(())
            }),
        )?;
    }
    {
        // Potentials want a partial map; reveal the left half.
        let mut partial = SemanticGrid::new_unexplored(
            scene.width(),
            scene.height(),
            scene.resolution(),
            scene.categories().clone(),
        )?;
        let half: std::collections::BTreeSet<GridCell> = scene
            .cells()
            .filter(|c| c.col < scene.width() / 2)
            .collect();
        partial.reveal_from(&scene, &half)?;
        let goal = *scene
            .categories()
            .goal_ids()
            .first()
            .context("no goal category")
            .map_err(CliError::Runtime)?;
        let scene = scene.clone();
        let potential = cfg.potential;
        time(
            "area+object potentials",
            Box::new(move || {
                area_potential(&partial, &scene, &potential)?;
                object_potential(&partial, &scene, goal, &potential)?;
                Ok(())
            }),
        )?;
    }
    {
        let scenes = vec![("bench".to_string(), Arc::new(scene))];
        let policies = vec![Policy::Poni {
            kind: PredictorKind::Oracle,
            params: cfg.potential,
        }];
        let options = EvalOptions {
            sensors: cfg.sensor,
            motion: cfg.motion,
            budget_steps: 200,
            success_radius_m: cfg.potential.success_radius_m,
            min_start_dist_m: 1.0,
            ..EvalOptions::default()
        };
        let seed = cfg.seeds.eval;
        time(
            "episode (poni-oracle, 200 steps)",
            Box::new(move || {
                evaluate(&policies, &scenes, 1, seed, &options)?;
                Ok(())
            }),
        )?;
    }
    println!("({cells} cells per map)");
    Ok(())
}
