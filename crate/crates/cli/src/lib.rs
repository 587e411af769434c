//! The `upcase` command line.
//!
//! Exit codes: 0 on success, 1 on internal failure, 2 for unreadable,
//! malformed or invalid input. Indeterminate statistics print as `undefined`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use upcase_core::casestudy::{self, Rater};
use upcase_core::report::{generate_results, render_report, ReportFormat, SessionMetadata};
use upcase_core::stats::{
    cronbach_alpha, icc, kappa_row, parse_matrix_csv, parse_pair_csv, reliability_report,
    IccVariant, RatingVector, Section, StatsError, Weighting, CATEGORIES,
};
use upcase_core::store::{AssessmentFilter, FileStore};
use upcase_core::{
    build_profile, load_reference_model, validate_reference_model, ReferenceModel, ResponseSheet,
};

#[derive(Debug, Parser)]
#[command(
    name = "upcase",
    version,
    about = "Usability process self-assessment toolkit"
)]
pub struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a response sheet (JSON, or CSV of item,rating rows).
    Score(ScoreArgs),
    /// Inter-rater and internal-consistency statistics.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Render the report of a stored assessment or of a response sheet.
    Report(ReportArgs),
    /// List stored assessments.
    List(ListArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Check a reference model file.
    ValidateModel { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub sheet: PathBuf,
    /// Reference model file (defaults to the bundled 1.0 model).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Respondent label for CSV sheets.
    #[arg(long, default_value = "respondent")]
    pub label: String,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Cohen's kappa for a two-column CSV of category codes 0..k-1.
    Kappa {
        file: PathBuf,
        /// none, linear, quadratic or all.
        #[arg(long, default_value = "linear")]
        weights: String,
        #[arg(long, default_value_t = CATEGORIES)]
        categories: usize,
    },
    /// Intraclass correlation for a subjects x raters CSV matrix.
    Icc {
        file: PathBuf,
        /// oneway, consistency, agreement or all.
        #[arg(long, default_value = "all")]
        variant: String,
    },
    /// Cronbach's alpha for a respondents x items CSV matrix.
    Alpha { file: PathBuf },
    /// Full reliability report over the bundled case-study responses.
    Casestudy,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Stored assessment id.
    pub id: Option<String>,
    #[arg(long, env = "UPCASE_DATA_DIR", default_value = "upcase-data")]
    pub data_dir: PathBuf,
    /// Build the report from a response sheet instead of a stored assessment.
    #[arg(long, conflicts_with = "id")]
    pub sheet: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub organization: String,
    #[arg(long, default_value = "")]
    pub date: String,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// markdown, html or json.
    #[arg(long, default_value = "markdown")]
    pub format: String,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long, env = "UPCASE_DATA_DIR", default_value = "upcase-data")]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub organization: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or invalid input. Exit code 2.
    Input(String),
    /// Failure that is not the caller's input. Exit code 1.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn input(e: impl ToString) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl ToString) -> CliError {
    CliError::Internal(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_model(path: Option<&Path>) -> Result<ReferenceModel, CliError> {
    match path {
        None => Ok(ReferenceModel::canonical()),
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| input(format!("{}: {e}", p.display())))?;
            load_reference_model(file).map_err(input)
        }
    }
}

fn load_sheet(path: &Path, model: &ReferenceModel, label: &str) -> Result<ResponseSheet, CliError> {
    let text = read(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    if is_json {
        ResponseSheet::from_json(&text).map_err(input)
    } else {
        ResponseSheet::from_csv(&text, model.version.clone(), label).map_err(input)
    }
}

fn stats_err(e: StatsError) -> CliError {
    input(e)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn fmt_coef(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

/// Sections for the case-study reliability report: one per sub-process plus all items.
pub fn model_sections(model: &ReferenceModel) -> Vec<Section> {
    let mut sections: Vec<Section> = model
        .sub_processes
        .iter()
        .map(|sp| Section {
            label: sp.id.to_string(),
            items: model
                .indicators_of(sp.id)
                .map(|i| i.id as usize - 1)
                .collect(),
        })
        .collect();
    sections.push(Section {
        label: "Usability process".into(),
        items: (0..model.indicators.len()).collect(),
    });
    sections
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    let json = cli.json;
    match cli.command {
        Command::Score(args) => {
            let model = load_model(args.model.as_deref())?;
            let sheet = load_sheet(&args.sheet, &model, &args.label)?;
            let profile = build_profile(&sheet, &model).map_err(input)?;
            Ok(if json {
                to_json(&profile)
            } else {
                profile.to_text()
            })
        }
        Command::Stats(cmd) => run_stats(cmd, json),
        Command::Report(args) => run_report(args),
        Command::List(args) => {
            let store = FileStore::open(&args.data_dir).map_err(input)?;
            let filter = AssessmentFilter {
                organization: args.organization,
                ..Default::default()
            };
            let items = store.list_assessments(&filter).map_err(input)?;
            if json {
                return Ok(to_json(&items));
            }
            let mut out = String::new();
            for a in items {
                let _ = writeln!(
                    out,
                    "{}  {}  {:<10}  {}  {}",
                    a.id,
                    a.created_at.format("%Y-%m-%d"),
                    a.phase.to_string(),
                    a.overall.unwrap_or_else(|| "-".into()),
                    a.organization_name
                );
            }
            Ok(out)
        }
        Command::Serve(args) => {
            let mut config = upcase_service::Config::from_env().map_err(input)?;
            if let Some(b) = args.bind {
                config.bind = b;
            }
            if let Some(d) = args.data_dir {
                config.data_dir = d;
            }
            if args.model.is_some() {
                config.model_path = args.model;
            }
            let _ = tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .try_init();
            let rt = tokio::runtime::Runtime::new().map_err(internal)?;
            rt.block_on(upcase_service::serve(config))
                .map_err(internal)?;
            Ok(String::new())
        }
        Command::ValidateModel { path } => {
            let text = read(&path)?;
            let model: ReferenceModel = serde_json::from_str(&text).map_err(input)?;
            let violations = validate_reference_model(&model);
            if json {
                let out = to_json(&serde_json::json!({
                    "version": model.version,
                    "valid": violations.is_empty(),
                    "violations": violations,
                }));
                return if violations.is_empty() {
                    Ok(out)
                } else {
                    Err(CliError::Input(out))
                };
            }
            if violations.is_empty() {
                Ok(format!(
                    "model {} is valid: {} sub-processes, {} indicators, {} glossary terms\n",
                    model.version,
                    model.sub_processes.len(),
                    model.indicators.len(),
                    model.glossary.len()
                ))
            } else {
                Err(CliError::Input(violations.join("\n")))
            }
        }
    }
}

fn run_stats(cmd: StatsCommand, json: bool) -> Result<String, CliError> {
    match cmd {
        StatsCommand::Kappa {
            file,
            weights,
            categories,
        } => {
            let (a, b) = parse_pair_csv(&read(&file)?).map_err(stats_err)?;
            let mut row =
                kappa_row(&file.display().to_string(), &a, &b, categories).map_err(stats_err)?;
            if !weights.eq_ignore_ascii_case("all") {
                let w: Weighting = weights.parse().map_err(stats_err)?;
                row.entries.retain(|e| e.weighting == w);
            }
            if json {
                return Ok(to_json(&row));
            }
            let mut out = format!("n = {}, agreements = {}\n", row.n, row.agreements);
            for e in &row.entries {
                let band = e
                    .band
                    .map_or(String::new(), |b| format!(" ({})", b.label()));
                let _ = writeln!(
                    out,
                    "{:<9} kappa = {}{band}",
                    e.weighting.as_str(),
                    fmt_coef(e.coefficient)
                );
            }
            Ok(out)
        }
        StatsCommand::Icc { file, variant } => {
            let matrix = parse_matrix_csv(&read(&file)?).map_err(stats_err)?;
            let variants: Vec<IccVariant> = if variant.eq_ignore_ascii_case("all") {
                IccVariant::ALL.to_vec()
            } else {
                vec![variant.parse().map_err(stats_err)?]
            };
            let results = variants
                .into_iter()
                .map(|v| icc(&matrix, v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(stats_err)?;
            if json {
                return Ok(to_json(&results));
            }
            let mut out = String::new();
            for r in results {
                let band = r.band.map_or("", |b| b.label());
                let _ = writeln!(
                    out,
                    "{:<24} {} {band}",
                    r.variant.as_str(),
                    fmt_coef(r.coefficient)
                );
            }
            Ok(out)
        }
        StatsCommand::Alpha { file } => {
            let matrix = parse_matrix_csv(&read(&file)?).map_err(stats_err)?;
            let r = match cronbach_alpha(&matrix) {
                Ok(r) => r,
                Err(StatsError::Indeterminate(why)) => {
                    return Ok(if json {
                        to_json(
                            &serde_json::json!({ "alpha": null, "defined": false, "reason": why }),
                        )
                    } else {
                        format!("alpha = undefined ({why})\n")
                    });
                }
                Err(e) => return Err(stats_err(e)),
            };
            if json {
                return Ok(to_json(&r));
            }
            let mut out = format!(
                "alpha = {:.4} (k = {}, {})\n",
                r.alpha, r.k, r.variance_convention
            );
            for (item, a) in &r.alpha_if_deleted {
                let _ = writeln!(out, "  without item {item:>2}: {}", fmt_coef(*a));
            }
            Ok(out)
        }
        StatsCommand::Casestudy => {
            let model = ReferenceModel::canonical();
            let pairs: Vec<_> = (1..=casestudy::ORGANIZATIONS)
                .map(|org| {
                    let rv = |r| {
                        RatingVector::from_codes(format!("org{org}"), &casestudy::codes(org, r))
                    };
                    Ok((format!("org{org}"), rv(Rater::Team)?, rv(Rater::Observer)?))
                })
                .collect::<Result<_, StatsError>>()
                .map_err(stats_err)?;
            let matrix = casestudy::item_matrix();
            let report = reliability_report(&pairs, &model_sections(&model), Some(&matrix))
                .map_err(stats_err)?;
            Ok(if json {
                report.to_json()
            } else {
                report.to_markdown()
            })
        }
    }
}

fn run_report(args: ReportArgs) -> Result<String, CliError> {
    let format: ReportFormat = args.format.parse().map_err(input)?;
    let results = match (&args.id, &args.sheet) {
        (Some(id), None) => {
            let store = FileStore::open(&args.data_dir).map_err(input)?;
            let (_, snapshot) = store.load_assessment(id).map_err(input)?;
            snapshot.results.ok_or_else(|| {
                input(format!(
                    "assessment {id} is {}; no results yet",
                    snapshot.phase
                ))
            })?
        }
        (None, Some(path)) => {
            let model = load_model(args.model.as_deref())?;
            let sheet = load_sheet(path, &model, &args.organization)?;
            let profile = build_profile(&sheet, &model).map_err(input)?;
            let meta = SessionMetadata {
                organization_name: args.organization.clone(),
                assessment_date: args.date.clone(),
                ..Default::default()
            };
            generate_results(&sheet, &profile, &model, &meta).map_err(input)?
        }
        _ => return Err(input("give a stored assessment id or --sheet")),
    };
    let bytes = render_report(&results, format);
    match args.out {
        Some(path) => {
            fs::write(&path, &bytes).map_err(|e| input(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(String::from_utf8(bytes).expect("reports are UTF-8")),
    }
}
