//! The `rle` command line.
//!
//! Exit codes: 0 on success, 1 on a data or I/O error, 2 on a usage error.
//! Output files are written atomically (temporary file, then rename).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::decompose::{self, AdditiveRemoval, DecomposeOptions, SeriesStep};
use crate::defaults;
use crate::io::{self, LoadOptions, Orientation};
use crate::matrix::ExpressionMatrix;
use crate::render::{self, OutlierGlyph, PlotKind, RenderSpec};
use crate::rle::{self, BoxplotOptions, BoxplotStats, QuantileMethod};
use crate::simulate::{self, SimulationConfig};

#[derive(Debug, Parser)]
#[command(name = "rle", version, about = "Relative log expression diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-sample RLE boxplot statistics (deviations from feature medians).
    Rle(SummaryArgs),
    /// Per-sample boxplot statistics of the raw values.
    Boxplot(SummaryArgs),
    /// Simulate a matrix from one of the preset scenarios.
    Simulate(SimulateArgs),
    /// Remove additive and rank-1 non-additive sample effects.
    Decompose(DecomposeArgs),
    /// Render summary JSON as SVG boxplots.
    Render(RenderArgs),
    /// Simulate, summarise, decompose and render in one go.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    /// Rows are samples, columns are features.
    Samples,
    /// Rows are features, columns are samples.
    Features,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum QuantileArg {
    /// Linear interpolation (type 7).
    Linear,
    /// Tukey hinges.
    Tukey,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AdditiveArg {
    /// Subtract each sample's mean.
    SampleMean,
    /// Subtract each feature's mean.
    FeatureMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Rle,
    Standard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GlyphArg {
    Circle,
    Cross,
    Hidden,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input matrix (CSV or TSV).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Whether rows of the input are samples or features.
    #[arg(long, value_enum, default_value = "samples")]
    orientation: OrientationArg,
    /// Field delimiter; defaults to tab for .tsv/.tab/.txt and comma otherwise.
    #[arg(long, value_name = "CHAR")]
    delimiter: Option<char>,
    /// The input has no id row or id column.
    #[arg(long)]
    no_header: bool,
    /// Drop features with missing values instead of failing.
    #[arg(long)]
    drop_missing: bool,
    /// Log-transform the input before analysis.
    #[arg(long)]
    log: bool,
    #[arg(long, default_value_t = defaults::LOG_BASE)]
    log_base: f64,
    #[arg(long, default_value_t = defaults::LOG_OFFSET)]
    log_offset: f64,
    /// Two-column sample,group table.
    #[arg(long, value_name = "PATH")]
    groups: Option<PathBuf>,
    /// Group for samples absent from --groups.
    #[arg(long, requires = "groups")]
    default_group: Option<String>,
}

#[derive(Debug, Args)]
struct BoxArgs {
    #[arg(long, value_enum, default_value = "linear")]
    quantile: QuantileArg,
    /// Whisker reach in IQRs beyond the quartiles.
    #[arg(long, default_value_t = defaults::WHISKER_COEF)]
    whisker: f64,
}

#[derive(Debug, Args)]
struct SummaryArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boxplot: BoxArgs,
    /// Write summaries as JSON (stdout when no output is given).
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write summaries as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write an SVG boxplot.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Preset scenario 1-4.
    #[arg(long)]
    scenario: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output matrix.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Ground-truth JSON (μ, θ, σ², λ, batches).
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
    /// Override the number of features.
    #[arg(long)]
    features: Option<usize>,
    /// Override the interaction scale λ.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boxplot: BoxArgs,
    /// Highest number of rank-1 components to remove.
    #[arg(long)]
    p: usize,
    /// Prefix for all output files.
    #[arg(long, value_name = "PREFIX")]
    out_prefix: PathBuf,
    #[arg(long, default_value_t = defaults::RANK_TOL)]
    rank_tol: f64,
    #[arg(long, value_enum, default_value = "sample-mean")]
    additive: AdditiveArg,
}

#[derive(Debug, Args)]
struct RenderOpts {
    #[arg(long)]
    title: Option<String>,
    #[arg(long, default_value_t = defaults::RENDER_WIDTH)]
    width: u32,
    #[arg(long, default_value_t = defaults::RENDER_HEIGHT)]
    height: u32,
    /// Fixed y range as LOW,HIGH.
    #[arg(long, value_name = "LOW,HIGH", value_parser = parse_limits, allow_hyphen_values = true)]
    ylim: Option<(f64, f64)>,
    /// Omit the horizontal zero line.
    #[arg(long)]
    no_zero_line: bool,
    #[arg(long, value_enum, default_value = "circle")]
    outlier_glyph: GlyphArg,
    /// Box width as a fraction of the per-sample slot.
    #[arg(long, default_value_t = defaults::BOX_WIDTH_FRACTION)]
    box_width: f64,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Summary JSON: an array of boxplot summaries or of {label, summaries} entries.
    #[arg(long, value_name = "PATH", required = true)]
    stats: Vec<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Lay the inputs out as a grid of panels.
    #[arg(long)]
    panel: bool,
    #[arg(long, value_enum, default_value = "rle")]
    kind: KindArg,
    #[command(flatten)]
    render: RenderOpts,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    scenario: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    p: usize,
    /// Output directory; defaults to $RLE_OUT_DIR, then ./rle-out.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = defaults::RANK_TOL)]
    rank_tol: f64,
    #[command(flatten)]
    boxplot: BoxArgs,
}

fn parse_limits(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LOW,HIGH")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("low: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("high: {e}"))?;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(format!("low ({lo}) must be below high ({hi})"));
    }
    Ok((lo, hi))
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Rle(args) => summary(args, PlotKind::Rle),
        Command::Boxplot(args) => summary(args, PlotKind::Standard),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Decompose(args) => decompose_cmd(args),
        Command::Render(args) => render_cmd(args),
        Command::Pipeline(args) => pipeline(args),
    }
}

fn delimiter_byte(d: Option<char>) -> anyhow::Result<Option<u8>> {
    match d {
        None => Ok(None),
        Some(c) if c.is_ascii() => Ok(Some(c as u8)),
        Some(c) => bail!("--delimiter must be an ASCII character, got {c:?}"),
    }
}

fn load_input(args: &InputArgs) -> anyhow::Result<ExpressionMatrix> {
    let opts = LoadOptions {
        delimiter: delimiter_byte(args.delimiter)?,
        orientation: match args.orientation {
            OrientationArg::Samples => Orientation::SamplesAsRows,
            OrientationArg::Features => Orientation::FeaturesAsRows,
        },
        header: !args.no_header,
        drop_missing: args.drop_missing,
    };
    let path = &args.input;
    let mut matrix = io::load_matrix(path, &opts).with_context(|| format!("reading {}", path.display()))?;
    if args.log {
        matrix = matrix
            .log_transform(args.log_base, args.log_offset)
            .with_context(|| format!("log-transforming {}", path.display()))?;
    }
    if let Some(groups) = &args.groups {
        let map = io::load_groups(groups, None).with_context(|| format!("reading {}", groups.display()))?;
        matrix = matrix
            .attach_groups(&map, args.default_group.as_deref())
            .with_context(|| format!("applying groups from {}", groups.display()))?;
    }
    Ok(matrix)
}

fn box_options(args: &BoxArgs) -> anyhow::Result<BoxplotOptions> {
    let opts = BoxplotOptions {
        method: match args.quantile {
            QuantileArg::Linear => QuantileMethod::Linear,
            QuantileArg::Tukey => QuantileMethod::TukeyHinges,
        },
        whisker_coef: args.whisker,
    };
    opts.validate().context("--whisker")?;
    Ok(opts)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    io::write_atomic(path, contents.as_ref()).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn summary(args: SummaryArgs, kind: PlotKind) -> anyhow::Result<()> {
    let matrix = load_input(&args.input)?;
    let opts = box_options(&args.boxplot)?;
    let summaries = match kind {
        PlotKind::Rle => rle::rle_summary(&matrix, &opts)?,
        PlotKind::Standard => rle::standard_boxplot_summary(&matrix, &opts)?,
    };
    let json = to_json(&summaries)?;
    if let Some(path) = &args.json {
        write(path, &json)?;
    }
    if let Some(path) = &args.csv {
        write(path, rle::summaries_to_csv(&summaries))?;
    }
    if let Some(path) = &args.svg {
        let default_title = match kind {
            PlotKind::Rle => "RLE plot",
            PlotKind::Standard => "Boxplots",
        };
        let title = args.title.clone().unwrap_or_else(|| default_title.to_string());
        let spec = match kind {
            PlotKind::Rle => RenderSpec::rle(title),
            PlotKind::Standard => RenderSpec::standard(title),
        };
        write(path, render::render_boxplots(&summaries, &spec)?)?;
    }
    if args.json.is_none() && args.csv.is_none() && args.svg.is_none() {
        print!("{json}");
    }
    Ok(())
}

fn simulate_cmd(args: SimulateArgs) -> anyhow::Result<()> {
    let mut config = SimulationConfig::scenario(args.scenario)?.with_seed(args.seed);
    if let Some(n) = args.features {
        config.n_features = n;
    }
    if let Some(l) = args.lambda {
        config.lambda = l;
    }
    let ds = simulate::simulate(&config)?;
    io::write_matrix(&args.out, &ds.matrix, None).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.truth {
        write(path, to_json(&ds.truth())?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct SingularValues {
    rank: usize,
    singular_values: Vec<f64>,
}

fn decompose_cmd(args: DecomposeArgs) -> anyhow::Result<()> {
    let matrix = load_input(&args.input)?;
    let box_opts = box_options(&args.boxplot)?;
    let opts = DecomposeOptions {
        rank_tol: args.rank_tol,
        additive: match args.additive {
            AdditiveArg::SampleMean => AdditiveRemoval::SampleMean,
            AdditiveArg::FeatureMean => AdditiveRemoval::FeatureMean,
        },
    };
    let (result, steps) = decompose::rle_series(&matrix, args.p, &opts, &box_opts)
        .with_context(|| format!("decomposing {}", args.input.input.display()))?;
    let prefix = args.out_prefix.to_string_lossy().into_owned();
    for step in &steps {
        let corrected = matrix.with_values(result.corrected(step.p)?)?;
        let path = PathBuf::from(format!("{prefix}_p{}.csv", step.p));
        io::write_matrix(&path, &corrected, Some(b',')).with_context(|| format!("writing {}", path.display()))?;
        write(Path::new(&format!("{prefix}_p{}_rle.json", step.p)), to_json(&step.summaries)?)?;
    }
    write(
        Path::new(&format!("{prefix}_singular_values.json")),
        to_json(&SingularValues {
            rank: result.rank(),
            singular_values: result.singular_values().to_vec(),
        })?,
    )?;
    write(Path::new(&format!("{prefix}_series.json")), to_json(&steps)?)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PanelEntry {
    label: String,
    summaries: Vec<BoxplotStats>,
}

enum StatsFile {
    Summaries(Vec<BoxplotStats>),
    Series(Vec<PanelEntry>),
}

fn read_stats(path: &Path) -> anyhow::Result<StatsFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let is_series = value
        .as_array()
        .and_then(|a| a.first())
        .is_some_and(|first| first.get("summaries").is_some());
    let parsed = if is_series {
        serde_json::from_value(value).map(StatsFile::Series)
    } else {
        serde_json::from_value(value).map(StatsFile::Summaries)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn render_spec(opts: &RenderOpts, kind: PlotKind, default_title: &str) -> RenderSpec {
    let base = match kind {
        PlotKind::Rle => RenderSpec::rle(default_title),
        PlotKind::Standard => RenderSpec::standard(default_title),
    };
    RenderSpec {
        title: opts.title.clone().unwrap_or(base.title.clone()),
        width: opts.width,
        height: opts.height,
        y_limits: opts.ylim,
        zero_line: base.zero_line && !opts.no_zero_line,
        outlier_glyph: match opts.outlier_glyph {
            GlyphArg::Circle => OutlierGlyph::Circle,
            GlyphArg::Cross => OutlierGlyph::Cross,
            GlyphArg::Hidden => OutlierGlyph::Hidden,
        },
        box_width_fraction: opts.box_width,
        ..base
    }
}

fn render_cmd(args: RenderArgs) -> anyhow::Result<()> {
    let kind = match args.kind {
        KindArg::Rle => PlotKind::Rle,
        KindArg::Standard => PlotKind::Standard,
    };
    let mut series: Vec<(String, Vec<BoxplotStats>)> = Vec::new();
    for path in &args.stats {
        match read_stats(path)? {
            StatsFile::Summaries(s) => {
                let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                series.push((label, s));
            }
            StatsFile::Series(entries) => series.extend(entries.into_iter().map(|e| (e.label, e.summaries))),
        }
    }
    let svg = if args.panel {
        let spec = render_spec(&args.render, kind, "");
        render::render_panel(&series, &spec)?
    } else {
        if series.len() != 1 {
            bail!(
                "{} summary sets given; pass --panel to render more than one",
                series.len()
            );
        }
        let (label, summaries) = series.remove(0);
        let spec = render_spec(&args.render, kind, &label);
        render::render_boxplots(&summaries, &spec)?
    };
    write(&args.out, svg)
}

/// Largest absolute RLE median across samples.
pub fn max_abs_median(summaries: &[BoxplotStats]) -> f64 {
    summaries.iter().map(|s| s.median.abs()).fold(0.0, f64::max)
}

#[derive(Debug, Serialize, Deserialize)]
struct PipelineReport {
    scenario: u8,
    seed: u64,
    rank: usize,
    singular_values: Vec<f64>,
    /// `max_i |RLE median|` of `Y′_p` for `p = 0..=p_max`.
    max_abs_median: Vec<f64>,
}

fn pipeline(args: PipelineArgs) -> anyhow::Result<()> {
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(defaults::OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("rle-out"));
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let box_opts = box_options(&args.boxplot)?;

    let config = SimulationConfig::scenario(args.scenario)?.with_seed(args.seed);
    let ds = simulate::simulate(&config)?;
    let matrix = &ds.matrix;
    let at = |name: &str| out_dir.join(name);

    io::write_matrix(at("matrix.csv"), matrix, Some(b',')).context("writing matrix.csv")?;
    write(&at("truth.json"), to_json(&ds.truth())?)?;

    let raw_rle = rle::rle_summary(matrix, &box_opts)?;
    write(&at("rle.json"), to_json(&raw_rle)?)?;
    let title = format!("Scenario {} (seed {}): RLE plot", args.scenario, args.seed);
    write(&at("rle.svg"), render::render_boxplots(&raw_rle, &RenderSpec::rle(title))?)?;
    let standard = rle::standard_boxplot_summary(matrix, &box_opts)?;
    write(&at("boxplot.json"), to_json(&standard)?)?;
    let title = format!("Scenario {} (seed {}): boxplots", args.scenario, args.seed);
    write(&at("boxplot.svg"), render::render_boxplots(&standard, &RenderSpec::standard(title))?)?;

    let opts = DecomposeOptions {
        rank_tol: args.rank_tol,
        ..Default::default()
    };
    let (result, steps) = decompose::rle_series(matrix, args.p, &opts, &box_opts)?;
    for step in &steps {
        write(&at(&format!("rle_p{}.json", step.p)), to_json(&step.summaries)?)?;
    }
    write(&at("series.json"), to_json(&steps)?)?;

    let series: Vec<(String, Vec<BoxplotStats>)> = steps
        .iter()
        .map(|s: &SeriesStep| (s.label.clone(), s.summaries.clone()))
        .collect();
    let limits = render::auto_limits(series.iter().flat_map(|(_, s)| s), PlotKind::Rle);
    let spec = RenderSpec {
        y_limits: Some(limits),
        ..RenderSpec::rle(format!(
            "Scenario {} (seed {}): additive and first p non-additive effects removed",
            args.scenario, args.seed
        ))
    };
    write(&at("panel.svg"), render::render_panel(&series, &spec)?)?;

    let report = PipelineReport {
        scenario: args.scenario,
        seed: args.seed,
        rank: result.rank(),
        singular_values: result.singular_values().to_vec(),
        max_abs_median: steps.iter().map(|s| max_abs_median(&s.summaries)).collect(),
    };
    write(&at("report.json"), to_json(&report)?)?;
    for (p, v) in report.max_abs_median.iter().enumerate() {
        println!("p={p}\tmax|median|={v:.6}");
    }
    Ok(())
}
