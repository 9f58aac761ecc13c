//! Command-line experiment runner: configuration, dispatch, run manifests
//! and reproduction.
//!
//! Every command resolves its parameters from CLI flags first, then from the
//! matching block of an optional JSON config file. The resolved job plus its
//! root seed fully determine the output bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assembly::CompletionRule;
use crate::integration::{self, HiddenForm, IntegrationConfig};
use crate::painting::{generate_painting, label_histogram, Painting, PaintingSpec, APPROX_COLOUR_ASPECT, COLOUR_FORM_ASPECT, LOCATION_ASPECT};
use crate::phenomenon::{self, probabilise_painting, RandomPhenomenon};
use crate::prob::{self, AlgebraOptions, Measure, ProbError, Universe};
use crate::puzzle::{self, BorderOptions, FragmentPool, PuzzleMode};
use crate::rational::Rational;
use crate::seeding;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 0.01;
pub const DEFAULT_REPETITIONS: u64 = 200;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{kind} error: {message}")]
    Failed { kind: &'static str, message: String },
    #[error("i/o error on {}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::MissingInput(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::MissingInput(_) => "missing-input",
            RunError::Failed { kind, .. } => kind,
            RunError::Io { .. } => "io",
        }
    }
}

macro_rules! failed_from {
    ($($t:ty => $kind:literal),* $(,)?) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Failed { kind: $kind, message: e.to_string() }
            }
        }
    )*};
}

failed_from! {
    crate::painting::PaintingError => "painting",
    crate::puzzle::PuzzleError => "puzzle",
    ProbError => "probability",
    crate::phenomenon::PhenomenonError => "phenomenon",
    crate::integration::IntegrationError => "integration",
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Location,
    Border,
}

impl From<ModeArg> for PuzzleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Location => PuzzleMode::Location,
            ModeArg::Border => PuzzleMode::Border,
        }
    }
}

/// Label weights of an urn, `label=weight` pairs on the command line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weights(pub BTreeMap<String, u64>);

fn parse_weights(s: &str) -> Result<Weights, String> {
    let mut m = BTreeMap::new();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("expected label=weight, got {part:?}"))?;
        let v: u64 = v.trim().parse().map_err(|e| format!("weight of {k:?}: {e}"))?;
        if m.insert(k.trim().to_string(), v).is_some() {
            return Err(format!("label {k:?} given twice"));
        }
    }
    Ok(Weights(m))
}

// ---- command line ----

#[derive(Debug, Parser)]
#[command(name = "fpl", version, about = "Factual probability laws: painting games, probability spaces and semantic integration")]
pub struct Cli {
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, or a file path ending in .json or .csv.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for parallel repetitions.
    #[arg(long, global = true, env = "FPL_JOBS")]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a painting from a painting spec.
    GenPainting(GenPaintingParams),
    /// Generate a hidden form (a painting with complexification indices).
    GenForm(GenFormParams),
    /// Draw a painting's fragments without replacement and reassemble them.
    PlayPuzzle(PuzzleParams),
    /// Draw labels with replacement and tabulate relative frequencies.
    PlayProbGame(ProbGameParams),
    /// Close an event algebra over a measure and check the axioms.
    ValidateSpace(SpaceParams),
    /// Estimate the meta-probability of frequency convergence.
    Lln(LlnParams),
    /// Integrate a hidden form's complexified stream into its law.
    Integrate(IntegrateParams),
    /// Integrate, then compare an independent frequency run to the law.
    EndToEnd(EndToEndParams),
    /// Rerun a manifest and compare output digests.
    Reproduce(ReproduceParams),
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenPaintingParams {
    /// Painting spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(skip)]
    pub inline_spec: Option<PaintingSpec>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenFormParams {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(skip)]
    pub inline_spec: Option<PaintingSpec>,
    /// Size of the complexification range; defaults to the smallest allowed.
    #[arg(long)]
    pub s_prime: Option<u64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PuzzleParams {
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub replicas: Option<u32>,
    #[arg(long)]
    pub painting: Option<PathBuf>,
    #[arg(long)]
    pub trial_budget: Option<u64>,
    /// Report file; same as --out.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbGameParams {
    #[arg(long)]
    pub painting: Option<PathBuf>,
    #[arg(long)]
    pub draws: Option<u64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceParams {
    /// Space JSON: universe, atoms, optional generators and complement flag.
    #[arg(long)]
    pub space: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlnParams {
    /// Draw labels from a painting's urn.
    #[arg(long)]
    pub painting: Option<PathBuf>,
    /// Draw from an urn given as label=weight pairs.
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<Weights>,
    #[arg(long)]
    pub label: Option<String>,
    /// Asserted probability as "num/den"; defaults to the urn's law.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Sequence length for a single estimate.
    #[arg(long)]
    pub n: Option<u64>,
    /// Search for N0 reaching 1 - delta.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, short = 'm')]
    pub repetitions: Option<u64>,
    #[arg(long)]
    pub search_start: Option<u64>,
    #[arg(long)]
    pub search_cap: Option<u64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationParams {
    #[arg(long)]
    pub confirm: Option<u32>,
    #[arg(long)]
    pub max_events: Option<u64>,
    #[arg(long)]
    pub ambiguity_budget: Option<u64>,
    /// Close boards that stop growing for this many events.
    #[arg(long)]
    pub patience: Option<u64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateParams {
    #[arg(long)]
    pub form: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub integration: IntegrationParams,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndToEndParams {
    #[arg(long)]
    pub form: Option<PathBuf>,
    #[arg(long)]
    pub draws: Option<u64>,
    /// Largest accepted sup-distance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub integration: IntegrationParams,
}

#[derive(Clone, Debug, Args)]
pub struct ReproduceParams {
    pub manifest: PathBuf,
}

// ---- config file ----

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub gen_painting: Option<GenPaintingParams>,
    #[serde(default)]
    pub gen_form: Option<GenFormParams>,
    #[serde(default)]
    pub play_puzzle: Option<PuzzleParams>,
    #[serde(default)]
    pub play_prob_game: Option<ProbGameParams>,
    #[serde(default)]
    pub validate_space: Option<SpaceParams>,
    #[serde(default)]
    pub lln: Option<LlnParams>,
    #[serde(default)]
    pub integrate: Option<IntegrateParams>,
    #[serde(default)]
    pub end_to_end: Option<EndToEndParams>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }
}

// ---- resolved jobs ----

/// A fully resolved command. Input paths are absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    GenPainting { spec: PaintingSpec },
    GenForm { spec: PaintingSpec, s_prime: Option<u64> },
    PlayPuzzle { painting: PathBuf, mode: PuzzleMode, replicas: u32, trial_budget: u64 },
    PlayProbGame { painting: PathBuf, draws: u64 },
    ValidateSpace { space: PathBuf },
    Lln(LlnJob),
    Integrate { form: PathBuf, integration: IntegrationConfig },
    EndToEnd { form: PathBuf, draws: u64, tolerance: f64, integration: IntegrationConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlnJob {
    pub source: UrnSource,
    pub label: String,
    pub p: Option<Rational>,
    pub epsilon: f64,
    pub n: Option<u64>,
    pub delta: Option<f64>,
    pub repetitions: u64,
    pub search_start: u64,
    pub search_cap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UrnSource {
    Painting(PathBuf),
    Weights(BTreeMap<String, u64>),
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::GenPainting { .. } => "gen-painting",
            Job::GenForm { .. } => "gen-form",
            Job::PlayPuzzle { .. } => "play-puzzle",
            Job::PlayProbGame { .. } => "play-prob-game",
            Job::ValidateSpace { .. } => "validate-space",
            Job::Lln(_) => "lln",
            Job::Integrate { .. } => "integrate",
            Job::EndToEnd { .. } => "end-to-end",
        }
    }

    fn needs_seed(&self) -> bool {
        !matches!(self, Job::ValidateSpace { .. })
    }

    fn default_format(&self) -> Format {
        match self {
            Job::PlayProbGame { .. } => Format::Csv,
            _ => Format::Json,
        }
    }

    fn supports(&self, f: Format) -> bool {
        f == Format::Json || matches!(self, Job::PlayProbGame { .. } | Job::Lln(_))
    }

    fn output_name(&self, f: Format) -> &'static str {
        match (self, f) {
            (Job::GenPainting { .. }, _) => "painting.json",
            (Job::GenForm { .. }, _) => "form.json",
            (Job::PlayPuzzle { .. }, _) => "report.json",
            (Job::PlayProbGame { .. }, Format::Csv) => "freq.csv",
            (Job::PlayProbGame { .. }, Format::Json) => "freq.json",
            (Job::ValidateSpace { .. }, _) => "validation.json",
            (Job::Lln(_), Format::Csv) => "lln.csv",
            (Job::Lln(_), Format::Json) => "lln.json",
            (Job::Integrate { .. }, _) => "integration.json",
            (Job::EndToEnd { .. }, _) => "end_to_end.json",
        }
    }

    fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Job::PlayPuzzle { painting, .. } | Job::PlayProbGame { painting, .. } => vec![painting.clone()],
            Job::ValidateSpace { space } => vec![space.clone()],
            Job::Lln(LlnJob { source: UrnSource::Painting(p), .. }) => vec![p.clone()],
            Job::Integrate { form, .. } | Job::EndToEnd { form, .. } => vec![form.clone()],
            _ => vec![],
        }
    }
}

/// A job with its root seed and output format.
#[derive(Clone, Debug, PartialEq)]
pub struct Invocation {
    pub job: Job,
    pub seed: Option<u64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub config_path: Option<PathBuf>,
}

fn absolute(base: Option<&Path>, p: &Path) -> PathBuf {
    let joined = match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    };
    std::path::absolute(&joined).unwrap_or(joined)
}

fn require<T>(v: Option<T>, what: &str) -> Result<T, RunError> {
    v.ok_or_else(|| RunError::Config(format!("missing parameter `{what}`")))
}

fn load_spec(path: Option<PathBuf>, inline: Option<PaintingSpec>, base: Option<&Path>) -> Result<PaintingSpec, RunError> {
    match (path, inline) {
        (Some(p), _) => {
            let p = absolute(base, &p);
            let text = fs::read_to_string(&p).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))
        }
        (None, Some(s)) => Ok(s),
        (None, None) => Err(RunError::Config("missing parameter `spec`".into())),
    }
}

fn integration_config(p: IntegrationParams) -> IntegrationConfig {
    let d = IntegrationConfig::default();
    IntegrationConfig {
        max_events: p.max_events.unwrap_or(d.max_events),
        confirmation_replicas: p.confirm.unwrap_or(d.confirmation_replicas),
        ambiguity_budget: p.ambiguity_budget.unwrap_or(d.ambiguity_budget),
        completion: match p.patience {
            Some(patience) => CompletionRule::Stability { patience },
            None => CompletionRule::Closure,
        },
    }
}

fn merge_integration(cli: IntegrationParams, cfg: IntegrationParams) -> IntegrationParams {
    IntegrationParams {
        confirm: cli.confirm.or(cfg.confirm),
        max_events: cli.max_events.or(cfg.max_events),
        ambiguity_budget: cli.ambiguity_budget.or(cfg.ambiguity_budget),
        patience: cli.patience.or(cfg.patience),
    }
}

impl Cli {
    /// Merge flags with the config file into a runnable invocation.
    pub fn resolve(self) -> Result<Invocation, RunError> {
        let cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig { schema_version: SCHEMA_VERSION, ..Default::default() },
        };
        let cfg_dir = self.config.as_ref().map(|p| absolute(None, p).parent().map(Path::to_path_buf).unwrap_or_default());
        let base = cfg_dir.as_deref();
        // CLI paths are relative to the working directory
        let cli_path = |p: Option<PathBuf>| p.map(|p| absolute(None, &p));
        let cfg_path = |p: Option<PathBuf>| p.map(|p| absolute(base, &p));

        let mut out = self.out.clone().map(|p| absolute(None, &p)).or(cfg_path(cfg.out.clone()));
        let mut spec_seed = None;
        let job = match self.command {
            Command::GenPainting(a) => {
                let c = cfg.gen_painting.clone().unwrap_or_default();
                let mut spec = match a.spec {
                    Some(p) => load_spec(Some(p), None, None)?,
                    None => load_spec(c.spec, c.inline_spec, base)?,
                };
                spec_seed = spec.seed.take();
                Job::GenPainting { spec }
            }
            Command::GenForm(a) => {
                let c = cfg.gen_form.clone().unwrap_or_default();
                let mut spec = match a.spec {
                    Some(p) => load_spec(Some(p), None, None)?,
                    None => load_spec(c.spec, c.inline_spec, base)?,
                };
                spec_seed = spec.seed.take();
                Job::GenForm { spec, s_prime: a.s_prime.or(c.s_prime) }
            }
            Command::PlayPuzzle(a) => {
                let c = cfg.play_puzzle.clone().unwrap_or_default();
                if let Some(r) = cli_path(a.report).or(cfg_path(c.report)) {
                    out = Some(r);
                }
                Job::PlayPuzzle {
                    painting: require(cli_path(a.painting).or(cfg_path(c.painting)), "painting")?,
                    mode: a.mode.or(c.mode).unwrap_or(ModeArg::Location).into(),
                    replicas: a.replicas.or(c.replicas).unwrap_or(1),
                    trial_budget: a.trial_budget.or(c.trial_budget).unwrap_or(puzzle::DEFAULT_TRIAL_BUDGET),
                }
            }
            Command::PlayProbGame(a) => {
                let c = cfg.play_prob_game.clone().unwrap_or_default();
                Job::PlayProbGame {
                    painting: require(cli_path(a.painting).or(cfg_path(c.painting)), "painting")?,
                    draws: require(a.draws.or(c.draws), "draws")?,
                }
            }
            Command::ValidateSpace(a) => {
                let c = cfg.validate_space.clone().unwrap_or_default();
                Job::ValidateSpace { space: require(cli_path(a.space).or(cfg_path(c.space)), "space")? }
            }
            Command::Lln(a) => {
                let c = cfg.lln.clone().unwrap_or_default();
                let source = match (cli_path(a.painting), a.weights) {
                    (Some(p), _) => UrnSource::Painting(p),
                    (None, Some(w)) => UrnSource::Weights(w.0),
                    (None, None) => match (cfg_path(c.painting), c.weights) {
                        (Some(p), _) => UrnSource::Painting(p),
                        (None, Some(w)) => UrnSource::Weights(w.0),
                        (None, None) => return Err(RunError::Config("lln needs `painting` or `weights`".into())),
                    },
                };
                let p = match a.p.or(c.p) {
                    Some(s) => Some(Rational::parse(&s).map_err(|e| RunError::Config(format!("p: {e}")))?),
                    None => None,
                };
                let job = LlnJob {
                    source,
                    label: require(a.label.or(c.label), "label")?,
                    p,
                    epsilon: require(a.epsilon.or(c.epsilon), "epsilon")?,
                    n: a.n.or(c.n),
                    delta: a.delta.or(c.delta),
                    repetitions: a.repetitions.or(c.repetitions).unwrap_or(DEFAULT_REPETITIONS),
                    search_start: a.search_start.or(c.search_start).unwrap_or(prob::DEFAULT_N0_START),
                    search_cap: a.search_cap.or(c.search_cap).unwrap_or(prob::DEFAULT_N0_CAP),
                };
                if job.n.is_none() && job.delta.is_none() {
                    return Err(RunError::Config("lln needs `n`, `delta`, or both".into()));
                }
                Job::Lln(job)
            }
            Command::Integrate(a) => {
                let c = cfg.integrate.clone().unwrap_or_default();
                Job::Integrate {
                    form: require(cli_path(a.form).or(cfg_path(c.form)), "form")?,
                    integration: integration_config(merge_integration(a.integration, c.integration)),
                }
            }
            Command::EndToEnd(a) => {
                let c = cfg.end_to_end.clone().unwrap_or_default();
                Job::EndToEnd {
                    form: require(cli_path(a.form).or(cfg_path(c.form)), "form")?,
                    draws: require(a.draws.or(c.draws), "draws")?,
                    tolerance: a.tolerance.or(c.tolerance).unwrap_or(DEFAULT_TOLERANCE),
                    integration: integration_config(merge_integration(a.integration, c.integration)),
                }
            }
            Command::Reproduce(_) => return Err(RunError::Config("reproduce is not a job".into())),
        };
        let seed = self.seed.or(cfg.seed).or(spec_seed);
        if job.needs_seed() && seed.is_none() {
            return Err(RunError::Config(format!("{} needs an explicit seed", job.name())));
        }
        let format = self.format.or(cfg.format).unwrap_or(job.default_format());
        if !job.supports(format) {
            return Err(RunError::Config(format!("{} has no {format:?} output", job.name())));
        }
        Ok(Invocation {
            job,
            seed,
            format,
            out,
            jobs: self.jobs.or(cfg.jobs),
            config_path: self.config.map(|p| absolute(None, &p)),
        })
    }
}

// ---- execution ----

/// Bytes of the primary output, and the reason a check failed, if one did.
#[derive(Clone, Debug)]
pub struct Produced {
    pub bytes: Vec<u8>,
    pub check_failure: Option<String>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, RunError> {
    if !path.exists() {
        return Err(RunError::MissingInput(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Failed { kind: "input", message: format!("{}: {e}", path.display()) })
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

#[derive(Serialize)]
struct PuzzleOutput {
    #[serde(flatten)]
    report: puzzle::AssemblyReport,
    boards_match_source: bool,
    histograms_match_source: bool,
}

fn check_puzzle(p: &Painting, a: &puzzle::Assembly) -> (bool, bool) {
    let by_form: BTreeMap<String, &crate::painting::Tile> =
        p.tiles().iter().map(|t| (crate::painting::form_token(t.form), t)).collect();
    let by_loc: BTreeMap<String, &crate::painting::Tile> =
        p.tiles().iter().map(|t| (crate::painting::location_token(t.x, t.y), t)).collect();
    let source = label_histogram(p);
    let mut layout_ok = a.boards.len() as u32 == a.report.replicas;
    let mut hist_ok = layout_ok;
    for board in &a.boards {
        let mut hist: BTreeMap<u32, u64> = BTreeMap::new();
        for y in 1..=board.height {
            for x in 1..=board.width {
                let Some(d) = board.get(x, y) else {
                    layout_ok = false;
                    continue;
                };
                let tile = d
                    .value(COLOUR_FORM_ASPECT)
                    .and_then(|f| by_form.get(f))
                    .or_else(|| d.value(LOCATION_ASPECT).and_then(|l| by_loc.get(l)));
                match tile {
                    Some(t) => {
                        layout_ok &= (t.x, t.y) == (x, y) || d.value(LOCATION_ASPECT).is_none();
                        *hist.entry(t.label).or_default() += 1;
                    }
                    None => layout_ok = false,
                }
                // labels carried by the fragment, when the view kept them
                if let (Some(l), Some(t)) = (d.value(APPROX_COLOUR_ASPECT), tile) {
                    hist_ok &= l == t.label.to_string();
                }
            }
        }
        hist_ok &= hist == source;
        if a.report.mode == PuzzleMode::Border {
            let expected: std::collections::BTreeSet<_> = p
                .adjacency_graph()
                .into_iter()
                .map(|(x, y, d)| (crate::painting::form_token(x), crate::painting::form_token(y), d))
                .collect();
            layout_ok &= puzzle::board_adjacency(board) == expected;
        }
    }
    (layout_ok, hist_ok)
}

#[derive(Serialize)]
struct SpaceFile {
    universe: Vec<String>,
    atoms: BTreeMap<String, Rational>,
    #[serde(default)]
    generators: Option<Vec<Vec<String>>>,
    #[serde(default)]
    complement_closure: bool,
}

impl<'de> Deserialize<'de> for SpaceFile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            universe: Vec<String>,
            atoms: BTreeMap<String, Rational>,
            #[serde(default)]
            generators: Option<Vec<Vec<String>>>,
            #[serde(default)]
            complement_closure: bool,
        }
        let r = Raw::deserialize(d)?;
        Ok(SpaceFile { universe: r.universe, atoms: r.atoms, generators: r.generators, complement_closure: r.complement_closure })
    }
}

#[derive(Serialize)]
struct SpaceOutput {
    measure: Measure,
    algebra_size: usize,
    complement_closed: bool,
    algebra: Vec<Vec<String>>,
    report: prob::ValidationReport,
}

#[derive(Serialize)]
struct LlnOutput {
    label: String,
    p: Rational,
    epsilon: f64,
    repetitions: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta_probability: Option<MetaEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n0_search: Option<N0Output>,
}

#[derive(Serialize)]
struct MetaEstimate {
    n: u64,
    estimate: f64,
}

#[derive(Serialize)]
struct N0Output {
    delta: f64,
    reached: bool,
    n0: Option<u64>,
    estimate: Option<f64>,
    history: Vec<MetaEstimate>,
}

#[derive(Serialize)]
struct EndToEndOutput {
    tolerance: f64,
    passed: bool,
    #[serde(flatten)]
    report: integration::ComparisonReport,
}

fn urn(source: &UrnSource) -> Result<RandomPhenomenon, RunError> {
    match source {
        UrnSource::Painting(p) => Ok(probabilise_painting(&read_json::<Painting>(p)?)),
        UrnSource::Weights(w) => {
            let universe = Universe::new(w.keys().cloned())?;
            let weights: Vec<u64> = w.values().copied().collect();
            Ok(RandomPhenomenon::from_weights("urn", universe, &weights)?)
        }
    }
}

fn run_lln(j: &LlnJob, seed: u64, format: Format) -> Result<Produced, RunError> {
    let ph = urn(&j.source)?;
    let p = match &j.p {
        Some(p) => p.clone(),
        None => ph
            .law()
            .atom(&j.label)
            .cloned()
            .ok_or_else(|| RunError::Config(format!("label {:?} is not in the urn", j.label)))?,
    };
    let meta = match j.n {
        Some(n) => Some(MetaEstimate {
            n,
            estimate: prob::meta_probability(&ph, &j.label, &p, j.epsilon, n, j.repetitions, seed)?,
        }),
        None => None,
    };
    let mut failure = None;
    let n0 = match j.delta {
        Some(delta) => {
            let opts = prob::SearchOptions { start: j.search_start, cap: j.search_cap };
            let hist = |h: Vec<(u64, f64)>| h.into_iter().map(|(n, estimate)| MetaEstimate { n, estimate }).collect();
            Some(match prob::find_n0(&ph, &j.label, &p, j.epsilon, delta, j.repetitions, seed, opts) {
                Ok(s) => N0Output { delta, reached: true, n0: Some(s.n0), estimate: Some(s.estimate), history: hist(s.history) },
                Err(ProbError::NotReached { cap, history }) => {
                    failure = Some(format!("no N up to {cap} reached 1 - delta = {}", 1.0 - delta));
                    N0Output { delta, reached: false, n0: None, estimate: None, history: hist(history) }
                }
                Err(e) => return Err(e.into()),
            })
        }
        None => None,
    };
    let out = LlnOutput { label: j.label.clone(), p, epsilon: j.epsilon, repetitions: j.repetitions, meta_probability: meta, n0_search: n0 };
    let bytes = match format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| RunError::Failed { kind: "output", message: e.to_string() };
            w.write_record(["kind", "n", "estimate"]).map_err(csv_err)?;
            if let Some(m) = &out.meta_probability {
                w.write_record(["single", &m.n.to_string(), &format!("{:.6}", m.estimate)]).map_err(csv_err)?;
            }
            for m in out.n0_search.iter().flat_map(|s| &s.history) {
                w.write_record(["search", &m.n.to_string(), &format!("{:.6}", m.estimate)]).map_err(csv_err)?;
            }
            w.into_inner().map_err(|e| RunError::Failed { kind: "output", message: e.to_string() })?
        }
    };
    Ok(Produced { bytes, check_failure: failure })
}

/// Run one job and return its primary output bytes.
pub fn execute(job: &Job, seed: Option<u64>, format: Format) -> Result<Produced, RunError> {
    let seed_or = || seed.ok_or_else(|| RunError::Config(format!("{} needs an explicit seed", job.name())));
    let ok = |bytes| Ok(Produced { bytes, check_failure: None });
    match job {
        Job::GenPainting { spec } => {
            let spec = PaintingSpec { seed: Some(seed_or()?), ..spec.clone() };
            ok(to_json(&generate_painting(&spec)?))
        }
        Job::GenForm { spec, s_prime } => {
            let spec = PaintingSpec { seed: Some(seed_or()?), ..spec.clone() };
            ok(to_json(&HiddenForm::generate(&spec, *s_prime)?))
        }
        Job::PlayPuzzle { painting, mode, replicas, trial_budget } => {
            let p: Painting = read_json(painting)?;
            let pool = FragmentPool::from_painting(&p, *mode, *replicas, seed_or()?)?;
            let assembly = match mode {
                PuzzleMode::Location => puzzle::solve_by_location(pool)?,
                PuzzleMode::Border => puzzle::solve_by_borders(pool, BorderOptions { trial_budget: *trial_budget })?,
            };
            let (layout, hist) = check_puzzle(&p, &assembly);
            let out = PuzzleOutput { report: assembly.report, boards_match_source: layout, histograms_match_source: hist };
            Ok(Produced {
                bytes: to_json(&out),
                check_failure: (!(layout && hist)).then(|| "recovered boards differ from the source painting".into()),
            })
        }
        Job::PlayProbGame { painting, draws } => {
            let p: Painting = read_json(painting)?;
            let ph = probabilise_painting(&p);
            let table = phenomenon::run_frequency_experiment(&ph, *draws, seed_or()?);
            let report = phenomenon::compare_law(&table, &ph.law())?;
            let bytes = match format {
                Format::Json => to_json(&report),
                Format::Csv => {
                    let mut buf = Vec::new();
                    phenomenon::write_frequency_csv(&report, &mut buf)?;
                    buf
                }
            };
            ok(bytes)
        }
        Job::ValidateSpace { space } => {
            let s: SpaceFile = read_json(space)?;
            let universe = Universe::new(s.universe.iter().cloned())?;
            let measure: Measure = serde_json::from_value(serde_json::json!({ "universe": s.universe, "atoms": s.atoms }))
                .map_err(|e| RunError::Failed { kind: "input", message: e.to_string() })?;
            let gens = match &s.generators {
                Some(g) => g.iter().map(|ids| universe.event(ids)).collect::<Result<Vec<_>, _>>()?,
                None => universe.singletons(),
            };
            let algebra = prob::generate_algebra(&universe, &gens, AlgebraOptions { complement_closure: s.complement_closure })?;
            let report = prob::validate_measure(&measure, &algebra);
            let passed = report.passed();
            let out = SpaceOutput {
                algebra_size: algebra.len(),
                complement_closed: algebra.complement_closed(),
                algebra: algebra.events().iter().map(|e| universe.names(e).into_iter().map(String::from).collect()).collect(),
                measure,
                report,
            };
            Ok(Produced { bytes: to_json(&out), check_failure: (!passed).then(|| "measure violates the axioms".into()) })
        }
        Job::Lln(j) => run_lln(j, seed_or()?, format),
        Job::Integrate { form, integration } => {
            let form: HiddenForm = read_json(form)?;
            let stream = integration::complexified_phenomenon(&form, seed_or()?);
            let result = integration::integrate(stream, *integration)?;
            let exact = result.law == form.histogram_law();
            Ok(Produced {
                bytes: to_json(&result),
                check_failure: (!exact).then(|| "integrated law differs from the form's histogram".into()),
            })
        }
        Job::EndToEnd { form, draws, tolerance, integration } => {
            let form: HiddenForm = read_json(form)?;
            let report = integration::end_to_end_check(&form, *draws, seed_or()?, *integration)?;
            let passed = report.exact_recovery && report.sup_distance <= *tolerance;
            let failure = (!passed).then(|| {
                format!("exact recovery {}, sup distance {} (tolerance {tolerance})", report.exact_recovery, report.sup_distance)
            });
            Ok(Produced { bytes: to_json(&EndToEndOutput { tolerance: *tolerance, passed, report }), check_failure: failure })
        }
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(RunError::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

// ---- manifests ----

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    /// sha256 of the canonical JSON of `job` and `format`.
    pub config_hash: String,
    pub config_path: Option<PathBuf>,
    /// Root seed first, then the named child seeds the command derives.
    pub seeds: Vec<u64>,
    pub format: Format,
    pub job: Job,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub exit_code: i32,
    pub started_at_unix: u64,
    pub wall_clock_ms: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn config_hash(job: &Job, format: Format) -> String {
    let canon = serde_json::to_vec(&serde_json::json!({ "job": job, "format": format })).expect("serializable");
    sha256_hex(&canon)
}

fn seed_list(job: &Job, seed: Option<u64>) -> Vec<u64> {
    let Some(s) = seed else { return vec![] };
    match job {
        Job::EndToEnd { .. } => vec![s, seeding::derive_named(s, "integration"), seeding::derive_named(s, "frequency")],
        _ => vec![s],
    }
}

fn digest_file(path: &Path) -> Result<FileDigest, RunError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => RunError::MissingInput(path.to_path_buf()),
        _ => RunError::Io { path: path.to_path_buf(), source: e },
    })?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

/// Where the primary output goes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutTarget {
    Stdout,
    File(PathBuf),
    Dir(PathBuf),
}

impl OutTarget {
    pub fn from_option(p: Option<&Path>) -> Self {
        match p {
            None => OutTarget::Stdout,
            Some(p) if matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "csv")) => OutTarget::File(p.to_path_buf()),
            Some(p) => OutTarget::Dir(p.to_path_buf()),
        }
    }

    fn paths(&self, name: &str) -> Option<(PathBuf, PathBuf, PathBuf)> {
        match self {
            OutTarget::Stdout => None,
            OutTarget::File(f) => {
                let with = |suffix: &str| {
                    let mut s = f.clone().into_os_string();
                    s.push(suffix);
                    PathBuf::from(s)
                };
                Some((f.clone(), with(".manifest.json"), with(".error.json")))
            }
            OutTarget::Dir(d) => Some((d.join(name), d.join("manifest.json"), d.join("error.json"))),
        }
    }
}

/// Final state of a run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: Option<RunManifest>,
    pub manifest_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub check_failure: Option<String>,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Run a resolved invocation: write the output and its manifest, or print
/// the output to `stdout` when no target is set.
pub fn run(inv: &Invocation, stdout: &mut dyn Write) -> Result<RunOutcome, RunError> {
    let started = Instant::now();
    let started_at_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let target = OutTarget::from_option(inv.out.as_deref());
    let name = inv.job.output_name(inv.format);
    let paths = target.paths(name);
    let produced = match with_jobs(inv.jobs, || execute(&inv.job, inv.seed, inv.format))? {
        Ok(p) => p,
        Err(e) => {
            if let (Some((_, _, err_path)), false) = (&paths, matches!(e, RunError::Config(_))) {
                let rec = ErrorRecord { kind: e.kind(), message: e.to_string(), exit_code: e.exit_code() };
                write_file(err_path, &to_json(&rec))?;
            }
            return Err(e);
        }
    };
    let exit_code = if produced.check_failure.is_some() { 1 } else { 0 };
    let Some((out_path, manifest_path, _)) = paths else {
        stdout.write_all(&produced.bytes).map_err(io_err(Path::new("<stdout>")))?;
        return Ok(RunOutcome { exit_code, manifest: None, manifest_path: None, output_path: None, check_failure: produced.check_failure });
    };
    write_file(&out_path, &produced.bytes)?;
    let mut inputs = inv.job.inputs().iter().map(|p| digest_file(p)).collect::<Result<Vec<_>, _>>()?;
    if let Some(c) = &inv.config_path {
        inputs.push(digest_file(c)?);
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        command: inv.job.name().to_string(),
        config_hash: config_hash(&inv.job, inv.format),
        config_path: inv.config_path.clone(),
        seeds: seed_list(&inv.job, inv.seed),
        format: inv.format,
        job: inv.job.clone(),
        inputs,
        outputs: vec![FileDigest { path: name_of(&out_path), sha256: sha256_hex(&produced.bytes) }],
        exit_code,
        started_at_unix,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    };
    write_file(&manifest_path, &to_json(&manifest))?;
    Ok(RunOutcome {
        exit_code,
        manifest: Some(manifest),
        manifest_path: Some(manifest_path),
        output_path: Some(out_path),
        check_failure: produced.check_failure,
    })
}

fn name_of(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigestCheck {
    pub path: String,
    pub expected: String,
    pub actual: Option<String>,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub manifest: PathBuf,
    pub config_hash_matches: bool,
    pub inputs: Vec<DigestCheck>,
    pub outputs: Vec<DigestCheck>,
    pub passed: bool,
}

/// Rerun the job a manifest records, in a scratch directory, and compare
/// every output digest. Inputs that no longer exist are an error.
pub fn reproduce(manifest_path: &Path) -> Result<ReproductionReport, RunError> {
    if !manifest_path.exists() {
        return Err(RunError::MissingInput(manifest_path.to_path_buf()));
    }
    let text = fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let m: RunManifest = serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", manifest_path.display())))?;
    if let Some(c) = &m.config_path {
        if !c.exists() {
            return Err(RunError::MissingInput(c.clone()));
        }
    }
    let mut inputs = Vec::new();
    for d in &m.inputs {
        let now = digest_file(Path::new(&d.path))?;
        inputs.push(DigestCheck { matches: now.sha256 == d.sha256, path: d.path.clone(), expected: d.sha256.clone(), actual: Some(now.sha256) });
    }
    let scratch = tempfile::tempdir().map_err(io_err(Path::new("<tempdir>")))?;
    let out_name = m.outputs.first().map(|o| o.path.clone()).unwrap_or_else(|| m.job.output_name(m.format).to_string());
    let inv = Invocation {
        job: m.job.clone(),
        seed: m.seeds.first().copied(),
        format: m.format,
        out: Some(scratch.path().join(&out_name)),
        jobs: None,
        config_path: None,
    };
    // a failed check still leaves an output to compare
    let rerun = run(&inv, &mut std::io::sink());
    let mut outputs = Vec::new();
    for d in &m.outputs {
        let actual = match &rerun {
            Ok(_) => fs::read(scratch.path().join(&d.path)).ok().map(|b| sha256_hex(&b)),
            Err(_) => None,
        };
        outputs.push(DigestCheck { matches: actual.as_deref() == Some(&d.sha256), path: d.path.clone(), expected: d.sha256.clone(), actual });
    }
    let config_hash_matches = config_hash(&m.job, m.format) == m.config_hash;
    let passed = config_hash_matches && inputs.iter().chain(&outputs).all(|c| c.matches);
    Ok(ReproductionReport { manifest: manifest_path.to_path_buf(), config_hash_matches, inputs, outputs, passed })
}

/// Parse arguments, run, and report. Returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    let report_err = |e: &RunError, stderr: &mut dyn Write| {
        let rec = ErrorRecord { kind: e.kind(), message: e.to_string(), exit_code: e.exit_code() };
        let _ = writeln!(stderr, "{}", serde_json::to_string(&rec).expect("serializable"));
        e.exit_code()
    };
    if let Command::Reproduce(r) = &cli.command {
        return match reproduce(&r.manifest) {
            Ok(rep) => {
                let bytes = to_json(&rep);
                let written = match OutTarget::from_option(cli.out.as_deref()) {
                    OutTarget::Stdout => stdout.write_all(&bytes).map_err(io_err(Path::new("<stdout>"))),
                    OutTarget::File(f) => write_file(&f, &bytes),
                    OutTarget::Dir(d) => write_file(&d.join("reproduction.json"), &bytes),
                };
                match written {
                    Ok(()) if rep.passed => 0,
                    Ok(()) => 1,
                    Err(e) => report_err(&e, stderr),
                }
            }
            Err(e) => report_err(&e, stderr),
        };
    }
    let outcome = cli.resolve().and_then(|inv| run(&inv, stdout));
    match outcome {
        Ok(o) => {
            if let Some(msg) = &o.check_failure {
                let _ = writeln!(stderr, "check failed: {msg}");
            }
            o.exit_code
        }
        Err(e) => report_err(&e, stderr),
    }
}
