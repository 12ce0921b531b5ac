use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use idla::analysis::{self, ExperimentReport, Replicates};
use idla::forest::{build_forest, build_radial_tree, diff_forests, Forest};
use idla::growth::{grow, Aggregate, GrowthSpec, Variant};
use idla::io::{self, Guide, SvgOptions};
use idla::runner::seed_range;
use idla::{Error, RandomSource, Region, Site};

#[derive(Parser, Debug)]
#[command(name = "idla", version, about = "Internal DLA with sources on the vertical axis")]
#[command(args_override_self = true)]
struct Cli {
    /// Read defaults from a `key = value` file; flags given on the command
    /// line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grow an aggregate and write it to a file.
    Grow(GrowCmd),
    /// Grow a clock-variant or classical run and write its forest.
    Forest(GrowCmd),
    /// Compare two forest files.
    Diff(DiffCmd),
    /// Run a replicate experiment.
    Experiment(Box<ExperimentCmd>),
    /// Render an aggregate or forest file as SVG.
    Render(RenderCmd),
}

#[derive(Args, Debug, Clone)]
struct GrowthArgs {
    #[arg(long, default_value = "det")]
    variant: String,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long = "M", default_value_t = 0)]
    m: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `stacks` (per-site direction stacks) or `streams` (per-particle).
    #[arg(long, default_value = "stacks")]
    randomness: String,
    #[arg(long, default_value_t = idla::walk::DEFAULT_MAX_STEPS)]
    max_steps: u64,
}

#[derive(Args, Debug)]
struct GrowCmd {
    #[command(flatten)]
    growth: GrowthArgs,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Draw the strip |y| <= K on the SVG.
    #[arg(long)]
    strip: Option<i32>,
}

#[derive(Args, Debug)]
struct DiffCmd {
    first: PathBuf,
    second: PathBuf,
    /// Compare only the strip |y| <= K.
    #[arg(long)]
    strip: Option<i32>,
    /// Write the discrepancies as CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderCmd {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    strip: Option<i32>,
    #[arg(long)]
    rect: Option<i32>,
    #[arg(long, default_value_t = 6)]
    cell: u32,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Experiment {
    Width,
    Shape,
    Far,
    Height,
    Lines,
    Mixing,
    Symmetry,
    StabilizeForest,
    ExitCounts,
    Abelian,
}

#[derive(Args, Debug)]
struct ExperimentCmd {
    #[arg(value_enum)]
    name: Experiment,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "M")]
    m: Option<u32>,
    #[arg(long, default_value_t = 100)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Worker threads; defaults to the hardware threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// `stacks` or `streams`, for experiments that grow line aggregates.
    #[arg(long, default_value = "stacks")]
    randomness: String,
    /// Write `<PREFIX>.csv` and `<PREFIX>.summary.txt`.
    #[arg(short, long, value_name = "PREFIX")]
    output: Option<PathBuf>,

    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rows: Option<Vec<i32>>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u32>>,
    #[arg(long = "K")]
    k_strip: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "M-grid", value_delimiter = ',')]
    m_grid: Option<Vec<u32>>,
    #[arg(long)]
    far_levels: Option<u32>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    zeta: Option<Vec<i64>>,
    #[arg(long)]
    t_max: Option<i32>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    window: Option<Vec<i32>>,
    #[arg(long)]
    c1: Option<String>,
    #[arg(long)]
    c2: Option<String>,
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<i32>>,
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i32>,
    #[arg(long)]
    particles: Option<u32>,
    #[arg(long)]
    orders: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    levels: Option<Vec<i32>>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    rp: Option<u32>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long = "L", value_delimiter = ',')]
    l_sweep: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<u32>>,
    #[arg(long)]
    bound: Option<u32>,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::Lib(Error::Io(e)))
}

fn variant(s: &str) -> Outcome<Variant> {
    Variant::parse(s).ok_or_else(|| Failure::Usage(format!("unknown variant {s:?}")))
}

fn spec(args: &GrowthArgs) -> Outcome<GrowthSpec> {
    let v = variant(&args.variant)?;
    let source = RandomSource::parse(&args.randomness)
        .ok_or_else(|| Failure::Usage(format!("unknown randomness {:?}", args.randomness)))?;
    if args.n == 0 {
        return usage("--n must be at least 1");
    }
    if args.max_steps == 0 {
        return usage("--max-steps must be positive");
    }
    Ok(GrowthSpec::new(v, args.n, args.m, args.seed)
        .with_source(source)
        .with_max_steps(args.max_steps))
}

fn guides(strip: Option<i32>, rect: Option<i32>) -> Vec<Guide> {
    strip
        .map(Guide::Strip)
        .into_iter()
        .chain(rect.map(Guide::Rectangle))
        .collect()
}

fn aggregate_svg(agg: &Aggregate, opts: &SvgOptions) -> String {
    io::render_svg(agg.sites(), &[], opts)
}

fn forest_svg(f: &Forest, opts: &SvgOptions) -> String {
    let sites: Vec<Site> = f.nodes().iter().map(|n| n.site).collect();
    let edges: Vec<(Site, Site)> = f.edges().collect();
    io::render_svg(&sites, &edges, opts)
}

fn cmd_grow(cmd: &GrowCmd) -> Outcome<()> {
    let spec = spec(&cmd.growth)?;
    let agg = grow(&spec)?.aggregate;
    write(&cmd.output, &io::write_aggregate(&agg))?;
    if let Some(svg) = &cmd.svg {
        let opts = SvgOptions {
            guides: guides(cmd.strip, None),
            ..Default::default()
        };
        write(svg, &aggregate_svg(&agg, &opts))?;
    }
    eprintln!("{} sites", agg.len());
    Ok(())
}

fn cmd_forest(cmd: &GrowCmd) -> Outcome<()> {
    let spec = spec(&cmd.growth)?;
    let agg = grow(&spec)?.aggregate;
    let f = match spec.variant {
        Variant::PoissonClock => build_forest(&agg)?,
        Variant::Classical => build_radial_tree(&agg)?,
        v => return usage(format!("forest needs the clock or classical variant, got {v}")),
    };
    write(&cmd.output, &io::write_forest(&f))?;
    if let Some(svg) = &cmd.svg {
        let opts = SvgOptions {
            guides: guides(cmd.strip, None),
            ..Default::default()
        };
        write(svg, &forest_svg(&f, &opts))?;
    }
    eprintln!("{} vertices, {} roots", f.len(), f.roots().count());
    Ok(())
}

fn parse_forest_file(path: &Path) -> Outcome<Forest> {
    io::parse_forest(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_diff(cmd: &DiffCmd) -> Outcome<()> {
    let a = parse_forest_file(&cmd.first)?;
    let b = parse_forest_file(&cmd.second)?;
    let region = cmd.strip.map_or(Region::All, Region::Strip);
    let diff = diff_forests(&a, &b, &region);
    println!(
        "{} discrepancies ({} vertex, {} edge)",
        diff.total(),
        diff.vertex_discrepancies.len(),
        diff.edge_discrepancies.len()
    );
    if let Some(out) = &cmd.output {
        write(out, &io::diff_to_csv(&diff))?;
    }
    Ok(())
}

fn cmd_render(cmd: &RenderCmd) -> Outcome<()> {
    let text = read(&cmd.input)?;
    let opts = SvgOptions {
        cell: cmd.cell,
        guides: guides(cmd.strip, cmd.rect),
    };
    let svg = if text.starts_with(io::FOREST_TAG) {
        forest_svg(&io::parse_forest(&text).map_err(|e| Failure::Usage(e.to_string()))?, &opts)
    } else {
        aggregate_svg(&io::parse_aggregate(&text).map_err(|e| Failure::Usage(e.to_string()))?, &opts)
    };
    write(&cmd.output, &svg)
}

fn sites_arg(value: &Option<String>, default: &str) -> Outcome<Vec<Site>> {
    let s = value.as_deref().unwrap_or(default);
    let sites = io::parse_sites(s).map_err(|e| Failure::Usage(format!("site list {s:?}: {e}")))?;
    if sites.is_empty() && !s.trim().is_empty() {
        return usage(format!("empty site list {s:?}"));
    }
    Ok(sites)
}

fn run_experiment(cmd: &ExperimentCmd) -> Outcome<ExperimentReport> {
    let source = RandomSource::parse(&cmd.randomness)
        .ok_or_else(|| Failure::Usage(format!("unknown randomness {:?}", cmd.randomness)))?;
    let reps = Replicates::new(seed_range(cmd.first_seed, cmd.seeds))
        .with_jobs(cmd.jobs)
        .with_source(source);
    if cmd.seeds == 0 {
        return usage("--seeds must be at least 1");
    }
    if cmd.jobs == Some(0) {
        return usage("--jobs must be at least 1");
    }
    let var = |default: Variant| -> Outcome<Variant> { cmd.variant.as_deref().map_or(Ok(default), variant) };
    let n = |default: u32| -> Outcome<u32> {
        match cmd.n.unwrap_or(default) {
            0 => usage("--n must be at least 1"),
            n => Ok(n),
        }
    };
    let m = |default: u32| cmd.m.unwrap_or(default);
    let report = match cmd.name {
        Experiment::Width => {
            let rows = cmd.rows.clone().unwrap_or_else(|| vec![0]);
            analysis::width_per_level(var(Variant::Deterministic)?, n(30)?, m(200), &rows, &reps)?
        }
        Experiment::Shape => {
            let ns = cmd.n_list.clone().unwrap_or_else(|| vec![50, 100, 200]);
            if ns.contains(&0) {
                return usage("--n-list entries must be at least 1");
            }
            let k = cmd.k_strip.unwrap_or(10);
            let fixed = cmd.m;
            let m_of = move |n: u32| fixed.unwrap_or_else(|| (k * k).max(2 * n));
            analysis::shape_deviation_scan(var(Variant::Deterministic)?, &ns, k, &m_of, &reps)?
        }
        Experiment::Far => {
            let grid = cmd.m_grid.clone().unwrap_or_else(|| vec![4, 8, 16]);
            analysis::far_particle_monitor(n(2)?, cmd.alpha.unwrap_or(2.0), &grid, cmd.far_levels, &reps)?
        }
        Experiment::Height => {
            let m = m(20);
            let zetas = cmd.zeta.clone().unwrap_or_else(|| vec![0, 1, 2]);
            let t_max = cmd.t_max.unwrap_or(m as i32 + 500);
            analysis::height_drift(var(Variant::PoissonUsual)?, n(5)?, m, &zetas, t_max, &reps)?
        }
        Experiment::Lines => {
            let m = m(50);
            let half = (m / 2) as i32;
            let window = match cmd.window.as_deref() {
                None => (-half, half),
                Some([lo, hi]) => (*lo, *hi),
                Some(_) => return usage("--window takes lo,hi"),
            };
            analysis::empty_lines(var(Variant::PoissonUsual)?, n(1)?, m, window, &reps)?
        }
        Experiment::Mixing => {
            let c1 = sites_arg(&cmd.c1, "(0,0)")?;
            let c2 = sites_arg(&cmd.c2, "(0,0)")?;
            let ks = cmd.k_grid.clone().unwrap_or_else(|| vec![0, 1, 2, 4, 8, 16, 32, 64, 96]);
            analysis::mixing_correlation(var(Variant::PoissonClock)?, n(2)?, m(200), &c1, &c2, &ks, &reps)?
        }
        Experiment::Symmetry => {
            let pattern = sites_arg(&cmd.pattern, "(5,0)")?;
            analysis::symmetry_checks(var(Variant::PoissonClock)?, n(3)?, m(120), &pattern, cmd.k.unwrap_or(4), &reps)?
        }
        Experiment::StabilizeForest => {
            let grid = cmd.grid.clone().unwrap_or_else(|| vec![0, 1, 2, 4, 8, 16, 32, 64, 128]);
            analysis::stabilize_forest(n(1)?, cmd.k_strip.unwrap_or(0), &grid, cmd.bound.unwrap_or(64), &reps)?
        }
        Experiment::ExitCounts => {
            let tau = sites_arg(&cmd.tau, "(6,0)")?;
            let sweep = cmd.l_sweep.clone().unwrap_or_else(|| vec![50, 100, 200]);
            analysis::exit_counts(cmd.r.unwrap_or(0), cmd.rp.unwrap_or(6), &tau, &sweep)?
        }
        Experiment::Abelian => {
            match cmd.orders.as_deref() {
                None | Some("all") => {}
                Some(o) => return usage(format!("unsupported --orders {o:?}; only \"all\" is available")),
            }
            let particles = cmd.particles.unwrap_or(3);
            let levels = cmd.levels.clone().unwrap_or_else(|| vec![0, 1]);
            analysis::abelian_check(particles, &levels)?
        }
    };
    Ok(report)
}

fn cmd_experiment(cmd: &ExperimentCmd) -> Outcome<()> {
    let clock = Instant::now();
    let report = run_experiment(cmd)?;
    let summary = report.summary();
    print!("{summary}");
    if let Some(prefix) = &cmd.output {
        let with_ext = |ext: &str| {
            let mut s = prefix.clone().into_os_string();
            s.push(ext);
            PathBuf::from(s)
        };
        write(&with_ext(".csv"), &report.to_csv())?;
        write(&with_ext(".summary.txt"), &summary)?;
    }
    eprintln!("elapsed {:.3}s", clock.elapsed().as_secs_f64());
    Ok(())
}

/// Expands `--config FILE` into flags placed right after the subcommand, so
/// that flags given later on the command line win.
fn expand_config(args: Vec<OsString>) -> Outcome<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            match it.next() {
                Some(p) => path = Some(PathBuf::from(p)),
                None => return usage("--config needs a file"),
            }
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = read(&path)?;
    let pairs = io::parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if rest.len() < 2 {
        return Ok(rest);
    }
    let mut out: Vec<OsString> = rest[..2].to_vec();
    for (k, v) in pairs {
        out.push(format!("--{k}").into());
        out.push(v.into());
    }
    out.extend(rest.into_iter().skip(2));
    Ok(out)
}

fn run(args: Vec<OsString>) -> Outcome<()> {
    let args = expand_config(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let _ = cli.config;
    match &cli.command {
        Command::Grow(c) => cmd_grow(c),
        Command::Forest(c) => cmd_forest(c),
        Command::Diff(c) => cmd_diff(c),
        Command::Experiment(c) => cmd_experiment(c),
        Command::Render(c) => cmd_render(c),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::StepBudget { .. } | Error::Budget(_) | Error::Numerical(_) => 3,
                Error::Io(_) => 1,
                _ => 2,
            })
        }
    }
}
