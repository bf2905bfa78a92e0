use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hotelnav_core::planner::PlanStatus;
use hotelnav_core::world::{FloorId, GridMap};
use hotelnav_cli::bench::{bench_csv, bench_markdown, run_bench, BenchConfig, ChangePattern, Corpus};
use hotelnav_cli::metrics::MetricsReport;
use hotelnav_cli::plan::{parse_cell, parse_path_csv, path_csv, run_plan, stats_line, Algorithm};
use hotelnav_cli::render::{parse_trajectory_csv, render_ppm, Overlays};
use hotelnav_cli::replay::experiment;
use hotelnav_cli::scenario::{load_building, load_scenario, parse_seed_list, Prepared, Scenario, SeedSpec};
use hotelnav_cli::simulate::{simulate, write_outputs};
use hotelnav_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "hotelnav", version, about = "Hotel delivery robot navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a path between two cells of one floor.
    Plan(PlanArgs),
    /// Run a scenario over its seeds and report metrics.
    Simulate(SimulateArgs),
    /// Re-run one of the bundled recorded experiments.
    Replay(ReplayArgs),
    /// Compare incremental repair against fresh A* on generated maps.
    Bench(BenchArgs),
    /// Draw a map with optional path, trajectory and waypoint overlays as PPM.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Args)]
struct MapArgs {
    /// ASCII map file.
    #[arg(long, conflicts_with = "building")]
    map: Option<PathBuf>,
    /// Building config (JSON), or `demo`.
    #[arg(long, requires = "floor")]
    building: Option<String>,
    /// Floor of the building to use.
    #[arg(long, allow_hyphen_values = true)]
    floor: Option<FloorId>,
    /// Metres per cell for `--map`.
    #[arg(long, default_value_t = 0.1)]
    resolution: f64,
}

impl MapArgs {
    fn load(&self) -> CliResult<GridMap> {
        match (&self.map, &self.building) {
            (Some(path), _) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                GridMap::parse_with_resolution(&text, self.resolution)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
            }
            (None, Some(reference)) => {
                let building = load_building(reference, Path::new("."))?;
                let floor = self.floor.expect("clap enforces --floor");
                building.floor(floor).cloned().map_err(|e| CliError::input(e.to_string()))
            }
            (None, None) => Err(CliError::input("one of --map or --building is required")),
        }
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Start cell as `x,y`.
    #[arg(long)]
    start: String,
    /// Goal cell as `x,y`.
    #[arg(long)]
    goal: String,
    #[arg(long, default_value = "astar")]
    algo: String,
    /// Obstacle inflation radius in metres.
    #[arg(long, default_value_t = 0.0)]
    inflation: f64,
    /// Path file to write; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Overrides the scenario's seeds with `a..b` or a comma list.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<String>,
    /// Runs a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for metrics.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one trajectory CSV per seed and leg into `--out`.
    #[arg(long, requires = "out")]
    trajectories: bool,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// floor2-238, floor2-236, floor2-234, floor2-230, floor3-320 or floor3-315.
    experiment: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// `random` or `corridor`.
    #[arg(long, default_value = "random")]
    corpus: String,
    /// Comma list of square map sizes.
    #[arg(long, value_delimiter = ',', default_value = "32,64,100")]
    sizes: Vec<usize>,
    /// Comma list of obstacle densities.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2")]
    densities: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    instances: usize,
    /// Changes injected per instance.
    #[arg(long, default_value_t = 3)]
    changes: usize,
    /// `none`, `near-path` or `random`.
    #[arg(long, default_value = "near-path")]
    pattern: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add wall-clock columns. Their values vary between runs.
    #[arg(long)]
    timing: bool,
    #[arg(long, value_enum, default_value = "md")]
    format: Format,
    /// File for the CSV table; the `--format` table still goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Path file from `plan`.
    #[arg(long)]
    path: Option<PathBuf>,
    /// Trajectory CSV from `simulate --trajectories`.
    #[arg(long)]
    trajectory: Option<PathBuf>,
    /// Waypoint CSV with `x,y` columns in metres.
    #[arg(long)]
    waypoints: Option<PathBuf>,
    /// Pixels per cell.
    #[arg(long, default_value_t = 4)]
    scale: usize,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn cmd_plan(args: PlanArgs) -> CliResult<()> {
    let map = args.map.load()?;
    let algo: Algorithm = args.algo.parse()?;
    let result = run_plan(&map, parse_cell(&args.start)?, parse_cell(&args.goal)?, algo, args.inflation)?;
    println!("{}", stats_line(algo, &result));
    if result.status == PlanStatus::Unreachable {
        return Err(CliError::Failed(format!("no path from {} to {}", args.start, args.goal)));
    }
    match args.out {
        Some(path) => std::fs::write(path, path_csv(&result.path))?,
        None => print!("{}", path_csv(&result.path)),
    }
    Ok(())
}

fn run_scenario(mut scenario: Scenario, base: &Path, args: &RunArgs) -> CliResult<()> {
    if let Some(list) = &args.seeds {
        scenario.seeds = SeedSpec::List(parse_seed_list(list)?);
    } else if let Some(seed) = args.seed {
        scenario.seeds = SeedSpec::List(vec![seed]);
    }
    let building = load_building(&scenario.building, base)?;
    let prepared = Prepared::new(scenario, building)?;
    let (report, runs) = simulate(&prepared)?;
    if let Some(dir) = &args.out {
        write_outputs(dir, &report, &runs, args.trajectories)?;
    }
    print_report(&report, args.format)?;
    if report.aggregates.reached == 0 {
        return Err(CliError::Failed(format!("no seed of {} reached its goal", report.scenario)));
    }
    Ok(())
}

fn print_report(report: &MetricsReport, format: Format) -> CliResult<()> {
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
        Format::Md => report.to_markdown(),
    };
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let (scenario, base) = load_scenario(&args.scenario)?;
    run_scenario(scenario, &base, &args.run)
}

fn cmd_replay(args: ReplayArgs) -> CliResult<()> {
    run_scenario(experiment(&args.experiment)?, Path::new("."), &args.run)
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let cfg = BenchConfig {
        corpus: args.corpus.parse::<Corpus>()?,
        sizes: args.sizes,
        densities: args.densities,
        instances: args.instances,
        changes: args.changes,
        pattern: args.pattern.parse::<ChangePattern>()?,
        seed: args.seed,
        timing: args.timing,
    };
    let rows = run_bench(&cfg)?;
    if let Some(path) = &args.out {
        std::fs::write(path, bench_csv(&rows, cfg.timing))?;
    }
    let text = match args.format {
        Format::Csv => bench_csv(&rows, cfg.timing),
        Format::Md => bench_markdown(&rows, cfg.timing),
        Format::Json => return Err(CliError::input("bench supports --format csv or md")),
    };
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn parse_waypoints(text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.trim().starts_with("x,y") {
        return Err(CliError::input("waypoint file must start with the header x,y"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut f = l.split(',').map(|v| v.trim().parse::<f64>());
            match (f.next(), f.next()) {
                (Some(Ok(x)), Some(Ok(y))) => Ok((x, y)),
                _ => Err(CliError::input(format!("bad waypoint line {l:?}"))),
            }
        })
        .collect()
}

fn cmd_render(args: RenderArgs) -> CliResult<()> {
    let map = args.map.load()?;
    let mut overlays = Overlays::default();
    if let Some(p) = &args.path {
        overlays.path = parse_path_csv(&read(p)?)?;
    }
    if let Some(p) = &args.trajectory {
        overlays.trajectory = parse_trajectory_csv(&read(p)?)?;
    }
    if let Some(p) = &args.waypoints {
        overlays.waypoints = parse_waypoints(&read(p)?)?;
    }
    let ppm = render_ppm(&map, &overlays, args.scale)?;
    std::fs::write(&args.out, ppm)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
