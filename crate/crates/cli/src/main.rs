//! `momdist` command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use momdist::data::{
    fixtures, gen_circle, gen_interlocked_circles, gen_matern_cluster, gen_uniform_box, image_to_pointcloud,
    matern_outliers, random_rotation, rotate_into, IntensityImage, Window,
};
use momdist::experiment::{run_experiment, ExperimentName, ExperimentSpec};
use momdist::filtration::PowerParam;
use momdist::geometry::{eval_weights, DtmMode, PointCloud, WeightFunctionKind};
use momdist::grid::{lower_star_diagram_with, sample_grid, BBox, DEFAULT_RESOLUTION};
use momdist::io::{point_cloud_to_csv, read_point_cloud};
use momdist::metrics::{bottleneck, bottleneck_matching, DEFAULT_TOL};
use momdist::persistence::{weighted_rips_diagram, FlagOptions, PersistenceDiagram, ReduceOptions};
use momdist::selection::{build_ladder, heuristic_trace, lepski_select, LepskiConfig, Pipeline, StandardCondition};

#[derive(Parser)]
#[command(name = "momdist", version, about = "Outlier-robust persistence with median-of-means distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Persistence diagram of a point cloud.
    Diagram(DiagramArgs),
    /// Bottleneck distance between two diagrams (JSON or CSV files).
    Bottleneck(BottleneckArgs),
    /// Choose the number of blocks Q.
    SelectQ(SelectArgs),
    /// Run a named experiment and write its artifacts.
    Experiment(ExperimentArgs),
    /// Generate synthetic point clouds as CSV.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct FiltrationArgs {
    /// Power of the weighted radius: 1, 2, inf or any real >= 1.
    #[arg(long, default_value = "1")]
    p: PowerParam,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    max_dim: u8,
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Args)]
struct DiagramArgs {
    points: PathBuf,
    /// Skip one header line in the CSV input.
    #[arg(long)]
    header: bool,
    /// MoM-Dist weights with this many blocks.
    #[arg(long, conflicts_with = "dtm_knn")]
    q: Option<usize>,
    /// DTM weights with this many neighbours.
    #[arg(long)]
    dtm_knn: Option<usize>,
    /// Shuffle points before dealing them into blocks.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    filtration: FiltrationArgs,
    /// Keep zero-persistence pairs.
    #[arg(long)]
    keep_zero: bool,
    /// Grid lower-star filtration of the weight function instead of weighted Rips (2-D only).
    #[arg(long)]
    sublevel: bool,
    /// Grid box `x0,y0,x1,y1`; defaults to the data box padded by the largest weight.
    #[arg(long, requires = "sublevel")]
    bbox: Option<BBox>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION, requires = "sublevel")]
    resolution: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BottleneckArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Also report an optimal matching.
    #[arg(long)]
    matching: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Lepski,
    Resample,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineKind {
    Weighted,
    Sublevel,
}

#[derive(Args)]
struct SelectArgs {
    points: PathBuf,
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value = "lepski")]
    method: Method,
    #[arg(long, default_value_t = 20)]
    m_min: usize,
    #[arg(long, default_value_t = 200)]
    m_max: usize,
    #[arg(long, default_value_t = 1.07)]
    theta: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Defaults to the ambient dimension.
    #[arg(long)]
    b: Option<f64>,
    /// Number of shuffles for the resampling heuristic.
    #[arg(long, default_value_t = 50)]
    replicates: usize,
    /// Comma-separated Q values for the heuristic; defaults to the Lepski ladder.
    #[arg(long, value_delimiter = ',')]
    q_grid: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Abort when a radius is used outside its valid range.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "weighted")]
    pipeline: PipelineKind,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: f64,
    /// Homological dimension compared across rungs.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[command(flatten)]
    filtration: FiltrationArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// adaptive_q, sublevel_compare, highdim, image_recover or influence.
    name: ExperimentName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "momdist-out")]
    out: PathBuf,
    /// Override a parameter, `key=value`; repeatable.
    #[arg(long = "set", value_parser = parse_key_value)]
    overrides: Vec<(String, String)>,
    /// Print the default parameters and exit.
    #[arg(long)]
    list_parameters: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Noisy samples of a circle centred at the origin.
    Circle {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
    },
    /// Matérn cluster process in the window `[-3, 3]^2` (or `--window`).
    Matern {
        /// Exact number of points; parent intensity is set to match it.
        #[arg(long, conflicts_with = "parent_intensity")]
        count: Option<usize>,
        #[arg(long)]
        parent_intensity: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        mean_offspring: f64,
        #[arg(long, default_value_t = 0.3)]
        cluster_radius: f64,
        #[arg(long)]
        window: Option<BBox>,
    },
    /// Uniform points in the cube `[low, high]^dim`.
    Uniform {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        low: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        high: f64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Two linked unit circles, optionally rotated into a higher dimension.
    Interlocked {
        #[arg(long, default_value_t = 200)]
        n_per_circle: usize,
        #[arg(long, default_value_t = 3)]
        ambient_dim: usize,
    },
    /// Points sampled from pixel intensities of a PGM image (or a bundled `digit6`/`digit8`).
    Image {
        image: String,
        #[arg(long, default_value_t = 10.0)]
        factor: f64,
    },
}

fn parse_key_value(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("MOMDIST_THREADS") {
        let n: usize = threads.parse().with_context(|| format!("MOMDIST_THREADS=`{threads}` is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match Cli::parse().command {
        Command::Diagram(args) => diagram(args),
        Command::Bottleneck(args) => bottleneck_cmd(args),
        Command::SelectQ(args) => select_q(args),
        Command::Experiment(args) => experiment(args),
        Command::Gen(args) => gen(args),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn weight_kind(q: Option<usize>, dtm_knn: Option<usize>, seed: Option<u64>) -> WeightFunctionKind {
    match (q, dtm_knn) {
        (Some(q), _) => WeightFunctionKind::MomDist { q, seed },
        (None, Some(k)) => WeightFunctionKind::Dtm { k, mode: DtmMode::Rms },
        (None, None) => WeightFunctionKind::PlainDistance,
    }
}

fn diagram(args: DiagramArgs) -> Result<()> {
    let cloud =
        read_point_cloud(&args.points, args.header).with_context(|| format!("reading {}", args.points.display()))?;
    let kind = weight_kind(args.q, args.dtm_knn, args.seed);
    let weights = eval_weights(&cloud, &kind, &cloud)?;
    let diagram = if args.sublevel {
        let bbox = match args.bbox {
            Some(b) => b,
            None => BBox::around(&cloud, weights.max())?,
        };
        let grid = sample_grid(&cloud, &kind, bbox, args.resolution)?;
        lower_star_diagram_with(&grid, ReduceOptions { keep_zero: args.keep_zero })?
    } else {
        let opts = FlagOptions {
            max_dim: args.filtration.max_dim as usize,
            t_max: args.filtration.t_max.unwrap_or(f64::INFINITY),
            keep_zero: args.keep_zero,
        };
        weighted_rips_diagram(&cloud, &weights, args.filtration.p, opts)?
    };
    let text = match args.format {
        Format::Json => diagram.to_json()? + "\n",
        Format::Csv => diagram.to_csv(),
    };
    emit(args.output.as_deref(), &text)
}

fn read_diagram(path: &Path) -> Result<PersistenceDiagram> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if text.trim_start().starts_with('[') {
        PersistenceDiagram::from_json(&text)
    } else {
        PersistenceDiagram::from_csv(&text)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn bottleneck_cmd(args: BottleneckArgs) -> Result<()> {
    let (d1, d2) = (read_diagram(&args.first)?, read_diagram(&args.second)?);
    let result = if args.matching {
        bottleneck_matching(&d1, &d2, args.dim, DEFAULT_TOL)?
    } else {
        bottleneck(&d1, &d2, args.dim, DEFAULT_TOL)?
    };
    emit(None, &(serde_json::to_string_pretty(&result)? + "\n"))
}

fn select_q(args: SelectArgs) -> Result<()> {
    let cloud =
        read_point_cloud(&args.points, args.header).with_context(|| format!("reading {}", args.points.display()))?;
    let ab = StandardCondition::new(args.a, args.b.unwrap_or(cloud.dim() as f64))?;
    let config = LepskiConfig {
        partition_seed: args.seed,
        strict: args.strict,
        ..LepskiConfig::new(args.m_min, args.m_max, args.theta, args.delta, ab)
    };
    let max_dim = args.filtration.max_dim as usize;
    let trace = match args.method {
        Method::Lepski => {
            let pipeline = match args.pipeline {
                PipelineKind::Weighted => {
                    Pipeline::Weighted { p: args.filtration.p, max_dim, t_max: args.filtration.t_max }
                }
                PipelineKind::Sublevel => Pipeline::Sublevel { bbox: None, resolution: args.resolution },
            };
            lepski_select(&cloud, &config, pipeline, args.dim)?
        }
        Method::Resample => {
            if matches!(args.pipeline, PipelineKind::Sublevel) {
                bail!("the resampling heuristic uses the weighted pipeline only");
            }
            let grid = match args.q_grid {
                Some(g) => g,
                None => build_ladder(&config, cloud.len())?.iter().map(|&(_, m)| 2 * m + 1).collect(),
            };
            heuristic_trace(
                &cloud,
                &grid,
                args.replicates,
                args.seed.unwrap_or(0),
                args.filtration.p,
                max_dim,
                args.dim,
            )?
        }
    };
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    emit(None, &(serde_json::to_string_pretty(&trace)? + "\n"))
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(args.name, args.seed, &args.out);
    if args.list_parameters {
        let listing: String = spec.parameters.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        return emit(None, &listing);
    }
    for (k, v) in args.overrides {
        spec.parameters.insert(k, v);
    }
    let outcome = run_experiment(&spec)?;
    eprintln!("wrote {} files to {}", outcome.manifest.files.len() + 1, args.out.display());
    emit(None, &(serde_json::to_string_pretty(&outcome.summary)? + "\n"))
}

fn load_image(source: &str) -> Result<IntensityImage> {
    Ok(match source {
        "digit6" => fixtures::digit6(),
        "digit8" => fixtures::digit8(),
        path => IntensityImage::from_pgm(&fs::read(path).with_context(|| format!("reading {path}"))?)?,
    })
}

fn gen(args: GenArgs) -> Result<()> {
    let seed = args.seed;
    let cloud = match args.kind {
        GenKind::Circle { n, radius, sigma } => gen_circle(n, radius, sigma, seed)?,
        GenKind::Matern { count, parent_intensity, mean_offspring, cluster_radius, window } => {
            let window = window.map(|b| Window { lo: b.lo, hi: b.hi }).unwrap_or_default();
            let pts = match (count, parent_intensity) {
                (Some(m), _) => matern_outliers(m, window, mean_offspring, cluster_radius, seed)?,
                (None, Some(kappa)) => {
                    gen_matern_cluster(window, kappa, mean_offspring, cluster_radius, seed)?.to_vecs()
                }
                (None, None) => bail!("give --count or --parent-intensity"),
            };
            PointCloud::new(pts)?
        }
        GenKind::Uniform { m, low, high, dim } => PointCloud::new(gen_uniform_box(m, low, high, dim, seed)?)?,
        GenKind::Interlocked { n_per_circle, ambient_dim } => {
            let circles = gen_interlocked_circles(n_per_circle, seed)?;
            if ambient_dim <= 3 {
                circles
            } else {
                let rotation = random_rotation(ambient_dim, seed.wrapping_add(1))?;
                PointCloud::new(rotate_into(&circles.to_vecs(), &rotation)?)?
            }
        }
        GenKind::Image { image, factor } => PointCloud::new(image_to_pointcloud(&load_image(&image)?, factor, seed)?)?,
    };
    emit(args.output.as_deref(), &point_cloud_to_csv(&cloud))
}
