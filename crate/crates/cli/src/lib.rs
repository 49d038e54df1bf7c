//! Batch commands: synthesize travel times, invert them through the QUBO
//! solver, solve the classical reference, compare, and export QUBOs.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use seisqubo::model::uniform_boundaries;
use seisqubo::solver::{encode_box, IterationRecord, Termination};
use seisqubo::{
    build_system, build_system_with_times, compare, condition_bound, forward_substitution, invert,
    model_from_profile, travel_times, BoxTransform, ComparisonReport, ConditioningReport, LayeredModel,
    LinearSystem, SamplerChoice, ScheduleTemplate, SlownessVector, SolverConfig, SoundSpeedProfile,
    SpacingPolicy, TravelTimes,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] seisqubo::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Csv { .. } => "csv",
            CliError::Usage(_) => "usage",
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "seisqubo", version, about = "Layered travel-time inversion via recursive QUBO box shrinking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the travel times of the layered model.
    Forward(ForwardArgs),
    /// Invert travel times with the box-shrinking QUBO solver.
    Invert(InvertArgs),
    /// Solve the triangular system by forward substitution.
    Oracle(OracleArgs),
    /// Compare an inversion result against an oracle solution.
    Compare(CompareArgs),
    /// Export the first-iteration QUBO.
    QuboDump(QuboDumpArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Sound-speed profile CSV with header `depth_m,speed_mps`.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub profile: Option<PathBuf>,
    /// Use the built-in synthetic ocean profile.
    #[arg(long)]
    pub synthetic: bool,
    /// Maximum depth of the synthetic profile, meters.
    #[arg(long, default_value_t = 5000.0)]
    pub synthetic_depth: f64,
    /// Sample spacing of the synthetic profile, meters.
    #[arg(long, default_value_t = 10.0)]
    pub synthetic_step: f64,
    /// Comma-separated bottom depth of each layer, meters.
    #[arg(long, value_delimiter = ',', required_unless_present = "layers", conflicts_with = "layers")]
    pub boundaries: Option<Vec<f64>>,
    /// Number of equally thick layers spanning the profile.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Common incident angle, degrees in [0, 90).
    #[arg(long, required_unless_present = "spacing", conflicts_with = "spacing")]
    pub theta0: Option<f64>,
    /// Comma-separated source spacing per layer, meters.
    #[arg(long, value_delimiter = ',')]
    pub spacing: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TimesArgs {
    /// Observed times CSV (column `time_s`); synthesized from the model when absent.
    #[arg(long)]
    pub times: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoxArgs {
    /// Initial box center in slowness (s/m): one value for all layers or one per layer.
    #[arg(long, value_delimiter = ',')]
    pub s0: Option<Vec<f64>>,
    /// Initial box half-width in slowness (s/m).
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Bits per layer.
    #[arg(long, default_value_t = 3)]
    pub bits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exact,
    Annealed,
    Gauged,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    /// Stop once the squared update norm falls to this value; 0 runs every iteration.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = SamplerKind::Gauged)]
    pub sampler: SamplerKind,
    #[arg(long, default_value_t = 100)]
    pub reads: usize,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    /// Initial inverse temperature in units of 1/mean|Q|.
    #[arg(long, default_value_t = 0.1)]
    pub beta_initial: f64,
    /// Final inverse temperature in units of 1/mean|Q|.
    #[arg(long, default_value_t = 10.0)]
    pub beta_final: f64,
    #[arg(long, default_value_t = 10)]
    pub gauges: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ForwardArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub times: TimesArgs,
    #[command(flatten)]
    pub bx: BoxArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub times: TimesArgs,
    /// Relative error assumed on the travel times for the conditioning bound.
    #[arg(long, default_value_t = 1e-3)]
    pub rhs_rel_error: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// `result.json` written by `invert`.
    #[arg(long)]
    pub result: PathBuf,
    /// `oracle.json` written by `oracle`.
    #[arg(long)]
    pub reference: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct QuboDumpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub times: TimesArgs,
    #[command(flatten)]
    pub bx: BoxArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Everything that determines an inversion, echoed into `result.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub model: ModelArgs,
    pub times: TimesArgs,
    pub bx: BoxArgs,
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeRow {
    pub layer: usize,
    pub depth_m: f64,
    pub thickness_m: f64,
    pub velocity_mps: f64,
    pub spacing_m: f64,
    pub angle_rad: f64,
    pub time_s: f64,
}

#[derive(Debug, Deserialize)]
struct ObservedTime {
    time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleDocument {
    pub depths_m: Vec<f64>,
    pub slowness: SlownessVector,
    pub velocity_mps: Vec<f64>,
    pub residual_norm: f64,
    pub conditioning: ConditioningReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultMetadata {
    pub num_layers: usize,
    pub num_binary_vars: usize,
    pub bits_per_var: usize,
    pub sampler: String,
    pub termination: Termination,
    pub iterations_run: usize,
    pub initial_half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultDocument {
    pub metadata: ResultMetadata,
    pub depths_m: Vec<f64>,
    pub final_slowness: SlownessVector,
    pub final_velocity_mps: Vec<f64>,
    pub reference_slowness: SlownessVector,
    pub max_rel_error_vs_oracle: f64,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Serialize)]
struct ResultFile<'a> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    result: &'a ResultDocument,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    iteration: usize,
    half_width: f64,
    residual: f64,
    update_norm_sq: f64,
    energy: f64,
    max_rel_error: f64,
}

#[derive(Debug, Serialize)]
struct ProfileRow {
    iteration: usize,
    layer: usize,
    depth_m: f64,
    velocity_mps: f64,
    v_classical: f64,
}

pub fn load_profile(args: &ModelArgs) -> Result<SoundSpeedProfile> {
    match &args.profile {
        Some(path) => {
            let f = File::open(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Ok(SoundSpeedProfile::from_csv(BufReader::new(f))?)
        }
        None => Ok(SoundSpeedProfile::synthetic(args.synthetic_depth, args.synthetic_step)?),
    }
}

pub fn build_model(args: &ModelArgs, profile: &SoundSpeedProfile) -> Result<LayeredModel> {
    let boundaries = match (&args.boundaries, args.layers) {
        (Some(b), None) => b.clone(),
        (None, Some(n)) if n > 0 => uniform_boundaries(profile.depth_range().1, n),
        (None, Some(_)) => return Err(CliError::Usage("--layers must be at least 1".into())),
        _ => return Err(CliError::Usage("give exactly one of --boundaries or --layers".into())),
    };
    let spacing = match (args.theta0, &args.spacing) {
        (Some(deg), None) => {
            if !(0.0..90.0).contains(&deg) {
                return Err(CliError::Core(seisqubo::Error::OutOfRange(format!(
                    "incident angle must lie in [0, 90) degrees, got {deg}"
                ))));
            }
            SpacingPolicy::IncidentAngle(deg.to_radians())
        }
        (None, Some(d)) => SpacingPolicy::Explicit(d.clone()),
        _ => return Err(CliError::Usage("give exactly one of --theta0 or --spacing".into())),
    };
    Ok(model_from_profile(profile, &boundaries, &spacing)?)
}

pub fn read_times(path: &Path) -> Result<TravelTimes> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut times = Vec::new();
    for row in reader.deserialize::<ObservedTime>() {
        times.push(row.map_err(csv_err)?.time_s);
    }
    Ok(TravelTimes::new(times)?)
}

fn system_for(model: &LayeredModel, times: &TimesArgs) -> Result<LinearSystem> {
    match &times.times {
        Some(path) => Ok(build_system_with_times(model, &read_times(path)?)?),
        None => Ok(build_system(model)),
    }
}

pub fn initial_box(args: &BoxArgs, profile: &SoundSpeedProfile, dim: usize) -> Result<BoxTransform> {
    let center = match &args.s0 {
        None => vec![1.0 / profile.mean_speed(); dim],
        Some(v) if v.len() == 1 => vec![v[0]; dim],
        Some(v) if v.len() == dim => v.clone(),
        Some(v) => {
            return Err(CliError::Core(seisqubo::Error::DimensionMismatch {
                what: "--s0 entries",
                expected: dim,
                actual: v.len(),
            }))
        }
    };
    let half_width = args
        .half_width
        .unwrap_or_else(|| 0.5 * center.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    Ok(BoxTransform::new(center, half_width)?)
}

pub fn sampler_choice(args: &SolverArgs) -> SamplerChoice {
    let schedule = ScheduleTemplate {
        reads: args.reads,
        sweeps: args.sweeps,
        beta_factors: (args.beta_initial, args.beta_final),
        seed: args.seed,
    };
    match args.sampler {
        SamplerKind::Exact => SamplerChoice::Exact,
        SamplerKind::Annealed => SamplerChoice::Annealed { schedule },
        SamplerKind::Gauged => SamplerChoice::Gauged { schedule, num_gauges: args.gauges },
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_reader(BufReader::new(f)).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn cmd_forward(args: &ForwardArgs) -> Result<Vec<PathBuf>> {
    let profile = load_profile(&args.model)?;
    let model = build_model(&args.model, &profile)?;
    let times = travel_times(&model);
    let depths = model.bottom_depths();
    let angles = model.angles();
    let rows = model.layers().iter().enumerate().map(|(k, l)| TimeRow {
        layer: k + 1,
        depth_m: depths[k],
        thickness_m: l.thickness(),
        velocity_mps: l.velocity(),
        spacing_m: model.spacing()[k],
        angle_rad: angles[k],
        time_s: times.as_slice()[k],
    });
    prepare_dir(&args.out.out)?;
    let path = args.out.out.join("times.csv");
    write_csv(&path, rows)?;
    Ok(vec![path])
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<Vec<PathBuf>> {
    let profile = load_profile(&args.model)?;
    let model = build_model(&args.model, &profile)?;
    let sys = system_for(&model, &args.times)?;
    let s = forward_substitution(&sys)?;
    let doc = OracleDocument {
        depths_m: model.bottom_depths(),
        velocity_mps: s.velocities(),
        residual_norm: sys.residual_norm(&s),
        conditioning: condition_bound(&model, args.rhs_rel_error)?,
        slowness: s,
    };
    prepare_dir(&args.out.out)?;
    let json = args.out.out.join("oracle.json");
    write_json(&json, &doc)?;
    let csv_path = args.out.out.join("oracle.csv");
    #[derive(Serialize)]
    struct Row {
        layer: usize,
        depth_m: f64,
        slowness_spm: f64,
        velocity_mps: f64,
    }
    write_csv(
        &csv_path,
        (0..doc.depths_m.len()).map(|k| Row {
            layer: k + 1,
            depth_m: doc.depths_m[k],
            slowness_spm: doc.slowness.as_slice()[k],
            velocity_mps: doc.velocity_mps[k],
        }),
    )?;
    Ok(vec![json, csv_path])
}

/// Runs the inversion and assembles the result document without writing it.
pub fn run_inversion(args: &InvertArgs) -> Result<ResultDocument> {
    let profile = load_profile(&args.model)?;
    let model = build_model(&args.model, &profile)?;
    let sys = system_for(&model, &args.times)?;
    let bx = initial_box(&args.bx, &profile, model.len())?;
    let mut config = SolverConfig::new(bx, sampler_choice(&args.solver));
    config.max_iterations = args.solver.iterations;
    config.tolerance = args.solver.tolerance;
    config.bits_per_var = args.bx.bits;
    let result = invert(&sys, &config)?;
    let reference = forward_substitution(&sys)?;
    let report = compare(&result.final_slowness, &reference)?;
    Ok(ResultDocument {
        metadata: ResultMetadata {
            num_layers: model.len(),
            num_binary_vars: result.num_binary_vars,
            bits_per_var: result.bits_per_var,
            sampler: config.sampler.name().to_string(),
            termination: result.termination,
            iterations_run: result.trace.len(),
            initial_half_width: config.initial_box.half_width(),
        },
        depths_m: model.bottom_depths(),
        final_velocity_mps: result.final_slowness.velocities(),
        final_slowness: result.final_slowness,
        reference_slowness: reference,
        max_rel_error_vs_oracle: report.max_rel_error,
        trace: result.trace,
    })
}

pub fn cmd_invert(args: &InvertArgs) -> Result<Vec<PathBuf>> {
    let doc = run_inversion(args)?;
    let manifest = RunManifest {
        model: args.model.clone(),
        times: args.times.clone(),
        bx: args.bx.clone(),
        solver: args.solver.clone(),
    };
    let dir = &args.out.out;
    prepare_dir(dir)?;

    let json = dir.join("result.json");
    write_json(&json, &ResultFile { manifest: &manifest, result: &doc })?;

    let reference = &doc.reference_slowness;
    let mut trace_rows = Vec::with_capacity(doc.trace.len());
    for rec in &doc.trace {
        let err = compare(&SlownessVector::new(rec.slowness.clone()), reference)?.max_rel_error;
        trace_rows.push(TraceRow {
            iteration: rec.iteration,
            half_width: rec.half_width,
            residual: rec.residual,
            update_norm_sq: rec.update_norm_sq,
            energy: rec.energy,
            max_rel_error: err,
        });
    }
    let trace = dir.join("trace.csv");
    write_csv(&trace, trace_rows)?;

    let v_ref = reference.velocities();
    let mut profile_rows = Vec::new();
    let first_center = doc.trace.first().map(|r| r.center.clone()).unwrap_or_default();
    let stages = std::iter::once((0, first_center)).chain(doc.trace.iter().map(|r| (r.iteration, r.slowness.clone())));
    for (iteration, s) in stages {
        for (k, sk) in s.iter().enumerate() {
            profile_rows.push(ProfileRow {
                iteration,
                layer: k + 1,
                depth_m: doc.depths_m[k],
                velocity_mps: 1.0 / sk,
                v_classical: v_ref[k],
            });
        }
    }
    let profiles = dir.join("profiles.csv");
    write_csv(&profiles, profile_rows)?;
    Ok(vec![json, trace, profiles])
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Vec<PathBuf>> {
    let result: ResultDocument = read_json(&args.result)?;
    let oracle: OracleDocument = read_json(&args.reference)?;
    let report: ComparisonReport = compare(&result.final_slowness, &oracle.slowness)?;
    let dir = &args.out.out;
    prepare_dir(dir)?;
    let json = dir.join("comparison.json");
    write_json(&json, &report)?;
    let csv_path = dir.join("comparison.csv");
    let f = File::create(&csv_path).map_err(|source| CliError::Io { path: csv_path.clone(), source })?;
    let mut w = BufWriter::new(f);
    seisqubo::metrics::write_comparison_csv(&mut w, &result.depths_m, &result.final_slowness, &oracle.slowness, &report)?;
    w.flush().map_err(|source| CliError::Io { path: csv_path.clone(), source })?;
    Ok(vec![json, csv_path])
}

pub fn cmd_qubo_dump(args: &QuboDumpArgs) -> Result<Vec<PathBuf>> {
    let profile = load_profile(&args.model)?;
    let model = build_model(&args.model, &profile)?;
    let sys = system_for(&model, &args.times)?;
    let bx = initial_box(&args.bx, &profile, model.len())?;
    let p = encode_box(&sys, &bx, args.bx.bits)?;
    prepare_dir(&args.out.out)?;
    let path = args.out.out.join("qubo.json");
    write_json(&path, &p.to_document())?;
    Ok(vec![path])
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Forward(a) => cmd_forward(a),
        Command::Invert(a) => cmd_invert(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a),
        Command::QuboDump(a) => cmd_qubo_dump(a),
    }
}
