//! Command-line experiments: sequence generation, exact torus points, pair
//! correlation curves, additive energy profiles and the level construction.
//!
//! Every command writes a single artifact (JSON, CSV or a binary point file)
//! to `--out` or standard output. JSON artifacts carry `schema_version`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use paircorr_core::construction::{
    build_levels, find_hits, hit_survey, verify_condition_star, witness_non_poissonian, BuildOptions,
    ConstructionState, GrowthMode, Hit, InterleavedProgression,
};
use paircorr_core::energy::{classify, energy_profile, ClassifyConfig, EnergyClass, EnergyProfile};
use paircorr_core::exact::{format_rational, parse_rational, rational_to_f64};
use paircorr_core::paircorr::{
    default_s_grid, gap_structure, parse_s_grid, r2_curve, r2_naive,
    PairCorrelationCurve,
};
use paircorr_core::sequences::{
    gen_lacunary, gen_polynomial, gen_quasi_arithmetic_deg1, gen_sidon_greedy, IntSeq, QuasiArithmeticParams,
};
use paircorr_core::sweep::{batch_alpha_sweep, SweepConfig, SweepSummary};
use paircorr_core::torus::{alpha_golden, alpha_random, alpha_rational, alpha_sqrt, FixedPointAlpha, TorusPointSet};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that caps the worker pool.
pub const WORKERS_ENV: &str = "PAIRCORR_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] paircorr_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(_) => "computation",
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Config(_) => "config",
        }
    }

    /// `{"error": kind, "message": ...}` for standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "paircorr", version, about = "Pair correlations, additive energy and non-Poissonian witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an integer sequence.
    Gen(GenArgs),
    /// Build a fixed-point alpha.
    Alpha(AlphaArgs),
    /// Exact fractional parts {a(n) alpha} as a binary point file.
    Points(PointsArgs),
    /// Pair correlation curve as CSV.
    R2(R2Args),
    /// Nearest-neighbour gap statistics.
    Spacings(SpacingsArgs),
    /// Additive energy profile and growth classification.
    Energy(EnergyArgs),
    /// Level construction for a degree-one quasi-arithmetic sequence.
    Construct(ConstructArgs),
    /// Weighted divergence condition on a construction state.
    Star(StarArgs),
    /// Hits ||lambda_n alpha|| <= psi_n over seeded random alphas.
    Hits(HitsArgs),
    /// Deviation witness at one hit.
    Witness(WitnessArgs),
    /// Poissonian deviation over many seeded random alphas.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Poly,
    Lacunary,
    Qa1,
    Sidon,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: usize,
    /// Polynomial coefficients, highest degree first, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    /// Lacunary base.
    #[arg(long)]
    pub base: Option<u64>,
    /// Block size M for qa1.
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long = "C")]
    pub density: Option<String>,
    #[arg(long = "K")]
    pub span: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub step: u64,
    /// Progression offset b for qa1.
    #[arg(long, default_value_t = 1)]
    pub offset: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlphaArgs {
    #[arg(long, conflicts_with_all = ["sqrt", "golden", "rational"], requires = "seed")]
    pub random: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fractional part of sqrt(D).
    #[arg(long)]
    pub sqrt: Option<u64>,
    /// Fractional part of the golden ratio.
    #[arg(long)]
    pub golden: bool,
    /// p/q truncated to B bits.
    #[arg(long)]
    pub rational: Option<String>,
    #[arg(long)]
    pub bits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PointsArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long)]
    pub alpha: PathBuf,
    /// Number of terms; defaults to the whole sequence.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum R2Method {
    Fast,
    Naive,
}

#[derive(Debug, Args)]
pub struct R2Args {
    #[arg(long)]
    pub points: PathBuf,
    /// `start:end:step` or a comma list of rationals.
    #[arg(long = "s-grid")]
    pub s_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = R2Method::Fast)]
    pub method: R2Method,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpacingsArgs {
    #[arg(long)]
    pub points: PathBuf,
    /// Fail unless there are at most this many distinct gaps.
    #[arg(long = "max-distinct")]
    pub max_distinct: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long)]
    pub seq: PathBuf,
    /// Ascending truncation lengths, comma separated.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub kappa: f64,
    #[arg(long = "max-residual", default_value_t = 0.1)]
    pub max_residual: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Strict,
    Relaxed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConstructFamily {
    Qa1,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[arg(long, value_enum, default_value_t = ConstructFamily::Qa1)]
    pub family: ConstructFamily,
    #[arg(long = "C", default_value = "1")]
    pub density: String,
    #[arg(long = "K", default_value = "1")]
    pub span: String,
    /// Progression step; defaults to the smallest step that fits the filler.
    #[arg(long)]
    pub step: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub offset: u64,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
    pub mode: ModeArg,
    #[arg(long = "first-m", default_value_t = 8)]
    pub first_m: u64,
    #[arg(long, default_value_t = 1 << 22)]
    pub budget: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StarArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Prefix length; defaults to every built index.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HitsArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// The i-th alpha uses seed `alpha-seed + i`.
    #[arg(long = "alpha-seed")]
    pub alpha_seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 128)]
    pub bits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// One-based index n of the hit.
    #[arg(long)]
    pub hit: usize,
    /// Alpha file from `alpha`.
    #[arg(long, required_unless_present = "alpha_seed", conflicts_with = "alpha_seed")]
    pub alpha: Option<PathBuf>,
    #[arg(long = "alpha-seed")]
    pub alpha_seed: Option<u64>,
    #[arg(long, default_value_t = 128)]
    pub bits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 128)]
    pub bits: u32,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long = "s-grid")]
    pub s_grid: Option<String>,
    /// Fail when the median deviation exceeds this bound.
    #[arg(long = "max-median")]
    pub max_median: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a finished command reports back to `main`.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Names of requested checks that failed; empty means exit code 0.
    pub failed_checks: Vec<String>,
}

impl Outcome {
    fn check(name: &str, ok: bool) -> Self {
        Outcome {
            failed_checks: if ok { vec![] } else { vec![name.to_string()] },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn versioned<T>(body: T) -> Versioned<T> {
    Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    }
}

/// Sizes the global worker pool from the environment; ignored if already set up.
pub fn init_workers() -> CliResult<()> {
    let Ok(text) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got {text:?}")))?;
    if workers == 0 {
        return Err(CliError::Config(format!("{WORKERS_ENV} must be at least 1")));
    }
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Alpha(a) => alpha(a),
        Command::Points(a) => points(a),
        Command::R2(a) => r2(a),
        Command::Spacings(a) => spacings(a),
        Command::Energy(a) => energy(a),
        Command::Construct(a) => construct(a),
        Command::Star(a) => star(a),
        Command::Hits(a) => hits(a),
        Command::Witness(a) => witness(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let file = File::open(path).map_err(io_err(path))?;
    let v: Versioned<T> = serde_json::from_reader(BufReader::new(file)).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            v.schema_version
        )));
    }
    Ok(v.body)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(io_err(path)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)
                .and_then(|_| lock.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, body: T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(&versioned(body)).map_err(|source| CliError::Json {
        path: "<output>".into(),
        source,
    })?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn rational_arg(name: &str, text: &str) -> CliResult<BigRational> {
    parse_rational(text).map_err(|e| CliError::Config(format!("--{name}: {e}")))
}

fn require<T>(value: Option<T>, flag: &str, family: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("--{flag} is required for family {family}")))
}

fn gen(a: GenArgs) -> CliResult<Outcome> {
    let seq = match a.family {
        FamilyArg::Poly => {
            let text = require(a.coeffs, "coeffs", "poly")?;
            let coeffs = text
                .split(',')
                .map(|c| c.trim().parse::<BigInt>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("--coeffs: {e}")))?;
            gen_polynomial(&coeffs, a.n)?
        }
        FamilyArg::Lacunary => gen_lacunary(require(a.base, "base", "lacunary")?, a.n)?,
        FamilyArg::Sidon => gen_sidon_greedy(a.n)?,
        FamilyArg::Qa1 => {
            let params = QuasiArithmeticParams {
                block: require(a.block, "block", "qa1")?,
                density: rational_arg("C", &require(a.density, "C", "qa1")?)?,
                span: rational_arg("K", &require(a.span, "K", "qa1")?)?,
                step: a.step,
                base: a.offset,
                seed: require(a.seed, "seed", "qa1")?,
            };
            gen_quasi_arithmetic_deg1(&params, a.n)?
        }
    };
    emit_json(a.out.as_deref(), &seq)?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct AlphaOut<'a> {
    #[serde(flatten)]
    alpha: &'a FixedPointAlpha,
    approx: f64,
}

fn alpha(a: AlphaArgs) -> CliResult<Outcome> {
    let alpha = if a.random {
        alpha_random(a.bits, a.seed.expect("clap enforces --seed"))?
    } else if let Some(d) = a.sqrt {
        alpha_sqrt(d, a.bits)?
    } else if a.golden {
        alpha_golden(a.bits)?
    } else if let Some(text) = a.rational {
        let (p, q) = text
            .split_once('/')
            .and_then(|(p, q)| Some((p.trim().parse().ok()?, q.trim().parse().ok()?)))
            .ok_or_else(|| CliError::Config(format!("--rational expects p/q, got {text:?}")))?;
        alpha_rational(p, q, a.bits)?
    } else {
        return Err(CliError::Config(
            "one of --random, --sqrt, --golden or --rational is required".into(),
        ));
    };
    emit_json(
        a.out.as_deref(),
        AlphaOut {
            approx: alpha.to_f64(),
            alpha: &alpha,
        },
    )?;
    Ok(Outcome::default())
}

fn read_alpha(path: &Path) -> CliResult<FixedPointAlpha> {
    read_json(path)
}

fn read_points(path: &Path) -> CliResult<TorusPointSet> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(TorusPointSet::read_binary(BufReader::new(file))?)
}

fn points(a: PointsArgs) -> CliResult<Outcome> {
    let seq: IntSeq = read_json(&a.seq)?;
    seq.validate()?;
    let alpha = read_alpha(&a.alpha)?;
    let n = a.n.unwrap_or(seq.len());
    if n > seq.len() {
        return Err(CliError::Config(format!("--n {n} exceeds the sequence length {}", seq.len())));
    }
    let set = TorusPointSet::from_sequence(&seq, n, &alpha)?;
    let file = File::create(&a.out).map_err(io_err(&a.out))?;
    let mut writer = BufWriter::new(file);
    set.write_binary(&mut writer)?;
    writer.flush().map_err(io_err(&a.out))?;
    Ok(Outcome::default())
}

fn s_grid(text: Option<&str>) -> CliResult<Vec<BigRational>> {
    match text {
        Some(t) => Ok(parse_s_grid(t)?),
        None => Ok(default_s_grid()),
    }
}

/// `s_num,s_den,r2_num,r2_den,r2_float` rows; the last column is diagnostic.
pub fn curve_csv(curve: &PairCorrelationCurve) -> String {
    let mut out = String::from("s_num,s_den,r2_num,r2_den,r2_float\n");
    for (s, r) in curve.iter() {
        out.push_str(&format!(
            "{},{},{},{},{:.12}\n",
            s.numer(),
            s.denom(),
            r.numer(),
            r.denom(),
            rational_to_f64(r)
        ));
    }
    out
}

fn r2(a: R2Args) -> CliResult<Outcome> {
    let set = read_points(&a.points)?;
    let grid = s_grid(a.s_grid.as_deref())?;
    let curve = match a.method {
        R2Method::Fast => r2_curve(&set, &grid)?,
        R2Method::Naive => PairCorrelationCurve {
            r2_values: grid.iter().map(|s| r2_naive(&set, s)).collect::<Result<_, _>>()?,
            s_grid: grid,
            n: set.len(),
        },
    };
    emit(a.out.as_deref(), curve_csv(&curve).as_bytes())?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct SpacingsOut {
    n: usize,
    bits: u32,
    distinct_gap_count: usize,
    #[serde(with = "paircorr_core::exact::decimal::vec")]
    distinct_gaps: Vec<paircorr_core::BigUint>,
    ks_to_exponential: f64,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
}

fn spacings(a: SpacingsArgs) -> CliResult<Outcome> {
    let set = read_points(&a.points)?;
    let stats = gap_structure(&set)?;
    let distinct = stats.distinct_gaps();
    let checks: Vec<Check> = a
        .max_distinct
        .map(|k| Check {
            name: format!("distinct_gaps<={k}"),
            passed: distinct.len() <= k,
        })
        .into_iter()
        .collect();
    let outcome = outcome_of(&checks);
    emit_json(
        a.out.as_deref(),
        SpacingsOut {
            n: stats.n,
            bits: stats.bits,
            distinct_gap_count: stats.distinct_gap_count,
            distinct_gaps: distinct,
            ks_to_exponential: stats.ks_to_exponential,
            checks,
        },
    )?;
    Ok(outcome)
}

fn outcome_of(checks: &[Check]) -> Outcome {
    Outcome {
        failed_checks: checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect(),
    }
}

#[derive(Serialize)]
struct EnergyOut {
    #[serde(flatten)]
    profile: EnergyProfile,
    classification: EnergyClass,
    classifier: ClassifyConfig,
}

fn energy(a: EnergyArgs) -> CliResult<Outcome> {
    let seq: IntSeq = read_json(&a.seq)?;
    seq.validate()?;
    let grid = a
        .grid
        .split(',')
        .map(|g| g.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(format!("--grid: {e}")))?;
    let profile = energy_profile(&seq, &grid)?;
    let config = ClassifyConfig {
        epsilon0: a.epsilon0,
        kappa: a.kappa,
        max_residual: a.max_residual,
    };
    let classification = classify(&profile, &config);
    emit_json(
        a.out.as_deref(),
        EnergyOut {
            profile,
            classification,
            classifier: config,
        },
    )?;
    Ok(Outcome::default())
}

fn construct(a: ConstructArgs) -> CliResult<Outcome> {
    let ConstructFamily::Qa1 = a.family;
    let density = rational_arg("C", &a.density)?;
    let span = rational_arg("K", &a.span)?;
    let step = a.step.unwrap_or_else(|| InterleavedProgression::min_step(&density));
    let family = InterleavedProgression::new(a.offset, step, density, span)?;
    let options = BuildOptions {
        levels: a.levels,
        mode: match a.mode {
            ModeArg::Strict => GrowthMode::Strict,
            ModeArg::Relaxed => GrowthMode::Relaxed,
        },
        first_m: a.first_m,
        budget: a.budget,
    };
    let state = build_levels(&family, &options)?;
    emit_json(a.out.as_deref(), &state)?;
    Ok(Outcome::default())
}

fn read_state(path: &Path) -> CliResult<ConstructionState> {
    let state: ConstructionState = read_json(path)?;
    state.validate()?;
    Ok(state)
}

fn star(a: StarArgs) -> CliResult<Outcome> {
    let state = read_state(&a.state)?;
    let c = rational_arg("c", &a.c)?;
    let report = verify_condition_star(&state, a.n.unwrap_or(state.len()), &c)?;
    let outcome = Outcome::check("condition_star", report.passes);
    emit_json(a.out.as_deref(), &report)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct HitsOut {
    conforming: bool,
    bits: u32,
    alpha_seed: u64,
    count: usize,
    alphas_with_hits: usize,
    hit_fraction: f64,
    /// Fraction of alphas with a hit on each level.
    level_hit_fraction: Vec<f64>,
    runs: Vec<HitRun>,
}

#[derive(Serialize)]
struct HitRun {
    seed: u64,
    hits: Vec<Hit>,
}

fn hits(a: HitsArgs) -> CliResult<Outcome> {
    let state = read_state(&a.state)?;
    if a.count == 0 {
        return Err(CliError::Config("--count must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..a.count as u64).map(|i| a.alpha_seed.wrapping_add(i)).collect();
    let alphas = seeds
        .iter()
        .map(|&s| alpha_random(a.bits, s))
        .collect::<Result<Vec<_>, _>>()?;
    let survey = hit_survey(&state, &alphas)?;
    let with_hits = survey.iter().filter(|h| !h.is_empty()).count();
    let level_hit_fraction = (1..=state.levels.len())
        .map(|l| survey.iter().filter(|h| h.iter().any(|x| x.level == l)).count() as f64 / a.count as f64)
        .collect();
    emit_json(
        a.out.as_deref(),
        HitsOut {
            conforming: state.conforming,
            bits: a.bits,
            alpha_seed: a.alpha_seed,
            count: a.count,
            alphas_with_hits: with_hits,
            hit_fraction: with_hits as f64 / a.count as f64,
            level_hit_fraction,
            runs: seeds
                .into_iter()
                .zip(survey)
                .map(|(seed, hits)| HitRun { seed, hits })
                .collect(),
        },
    )?;
    Ok(Outcome::default())
}

fn witness(a: WitnessArgs) -> CliResult<Outcome> {
    let state = read_state(&a.state)?;
    let alpha = match (&a.alpha, a.alpha_seed) {
        (Some(path), _) => read_alpha(path)?,
        (None, Some(seed)) => alpha_random(a.bits, seed)?,
        (None, None) => return Err(CliError::Config("--alpha or --alpha-seed is required".into())),
    };
    let hit = find_hits(&state, &alpha)?
        .into_iter()
        .find(|h| h.n == a.hit)
        .ok_or_else(|| CliError::Config(format!("index {} is not a hit for this alpha", a.hit)))?;
    let report = witness_non_poissonian(&state, &alpha, &hit)?;
    let outcome = Outcome::check("witness", report.holds);
    #[derive(Serialize)]
    struct WitnessOut<T> {
        conforming: bool,
        /// The deviation is shown at one scale, not as a limit.
        scope: &'static str,
        #[serde(flatten)]
        report: T,
    }
    emit_json(
        a.out.as_deref(),
        WitnessOut {
            conforming: state.conforming,
            scope: "deviation witness at scale M_l",
            report,
        },
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct SweepOut {
    #[serde(flatten)]
    summary: SweepSummary,
    seed: u64,
    count: usize,
    s_grid: Vec<String>,
    checks: Vec<Check>,
}

fn sweep(a: SweepArgs) -> CliResult<Outcome> {
    let seq: IntSeq = read_json(&a.seq)?;
    seq.validate()?;
    let grid = s_grid(a.s_grid.as_deref())?;
    let config = SweepConfig {
        n: a.n.unwrap_or(seq.len()),
        bits: a.bits,
        seed: a.seed,
        count: a.count,
        s_grid: grid.clone(),
    };
    let summary = batch_alpha_sweep(&seq, &config)?;
    let checks: Vec<Check> = a
        .max_median
        .map(|bound| Check {
            name: format!("median<={bound}"),
            passed: summary.median <= bound,
        })
        .into_iter()
        .collect();
    let outcome = outcome_of(&checks);
    emit_json(
        a.out.as_deref(),
        SweepOut {
            summary,
            seed: a.seed,
            count: a.count,
            s_grid: grid.iter().map(format_rational).collect(),
            checks,
        },
    )?;
    Ok(outcome)
}
