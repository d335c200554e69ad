// SPDX-License-Identifier: Apache-2.0

//! Subcommand definitions and dispatch. `run` writes machine output to
//! `out` and diagnostics to `err`, and returns the process exit code.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use feascore::dataset::{area_bucket_stats, load_dataset_report, save_dataset, DataFormat, DesignRecord};
use feascore::evaluation::loo_by_project_cv;
use feascore::learner::{
    export_tree, import_tree, ClassWeight, ExportFormat, LeafScore, DEFAULT_CUTOFF, REFERENCE_MODEL_ID,
};
use feascore::scoring::{parse_polygon_field, score, ScoreRequest};
use feascore::synthgen::{generate, GenConfig, OracleRule, ShapeFamily};
use feascore::{reference_model, train, DecisionTree, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "feascore",
    version,
    about = "Place-and-route feasibility estimates for digital blocks"
)]
pub struct Cli {
    /// Print JSON instead of human-readable tables.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shape factor of a rectilinear outline.
    ShapeFactor {
        /// Vertices as "x0 y0;x1 y1;...".
        #[arg(long)]
        polygon: String,
    },
    /// Fit a decision tree on a labeled dataset.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learner: LearnerArgs,
        /// Write the model JSON here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score one candidate region.
    Predict {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, conflicts_with = "polygon", required_unless_present = "polygon")]
        sf: Option<f64>,
        #[arg(long)]
        polygon: Option<String>,
        /// Row utilization in percent.
        #[arg(long)]
        util: f64,
        #[arg(long)]
        layers: u32,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: f64,
    },
    /// Leave-one-project-out cross-validation.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        learner: LearnerArgs,
    },
    /// Generate a synthetic labeled dataset.
    Gen {
        #[arg(long, default_value_t = 96)]
        n_records: usize,
        #[arg(long, default_value_t = 8)]
        n_projects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Comma-separated subset of rectangle,l_shape,t_shape.
        #[arg(long, value_delimiter = ',', default_value = "rectangle,l_shape,t_shape")]
        families: Vec<ShapeFamily>,
        #[arg(long, default_value_t = 3)]
        min_layers: u32,
        #[arg(long, default_value_t = 6)]
        max_layers: u32,
        #[arg(long, default_value_t = 50.0)]
        min_util: f64,
        #[arg(long, default_value_t = 100.0)]
        max_util: f64,
        #[arg(long, default_value_t = 55.0)]
        base: f64,
        #[arg(long, default_value_t = 10.0)]
        layer_gain: f64,
        #[arg(long, default_value_t = 30.0)]
        sf_gain: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Area distribution and load warnings for a dataset.
    Stats {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Render a model as JSON, Graphviz DOT or text.
    Export {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = ExportArg::Dot)]
        format: ExportArg,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP scoring service.
    Serve {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// "reference" or a path to a model JSON file.
    #[arg(long, env = "FEASCORE_MODEL", default_value = REFERENCE_MODEL_ID)]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file (CSV or JSON).
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults to the file extension.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
    #[arg(long, value_enum, default_value_t = WeightArg::Balanced)]
    pub class_weight: WeightArg,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    #[arg(long, value_enum, default_value_t = LeafArg::Weighted)]
    pub leaf_score: LeafArg,
}

impl LearnerArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            max_depth: self.max_depth,
            class_weight: match self.class_weight {
                WeightArg::Balanced => ClassWeight::Balanced,
                WeightArg::Uniform => ClassWeight::Uniform,
            },
            min_samples_split: self.min_samples_split,
            leaf_score: match self.leaf_score {
                LeafArg::Weighted => LeafScore::Weighted,
                LeafArg::Raw => LeafScore::Raw,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DataFormat::Csv,
            FormatArg::Json => DataFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExportArg {
    Json,
    Dot,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    Balanced,
    Uniform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LeafArg {
    Weighted,
    Raw,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn invalid(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.to_string(),
    }
}

pub fn load_model(source: &str) -> Result<DecisionTree, Failure> {
    if source == REFERENCE_MODEL_ID {
        return Ok(reference_model());
    }
    let bytes = std::fs::read(source).map_err(|e| invalid(format!("{source}: {e}")))?;
    import_tree(&bytes).map_err(|e| invalid(format!("{source}: {e}")))
}

fn load_records(args: &DataArgs, err: &mut dyn Write) -> Result<Vec<DesignRecord>, Failure> {
    let format = args
        .format
        .map(DataFormat::from)
        .unwrap_or_else(|| guess_format(&args.data));
    let file = File::open(&args.data).map_err(|e| invalid(format!("{}: {e}", args.data.display())))?;
    let report = load_dataset_report(BufReader::new(file), format)
        .map_err(|e| invalid(format!("{}: {e}", args.data.display())))?;
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(report.records)
}

fn guess_format(path: &Path) -> DataFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => DataFormat::Json,
        _ => DataFormat::Csv,
    }
}

fn write_output(out: &mut dyn Write, path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => out.write_all(bytes).map_err(invalid),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let json = cli.json;
    match cli.command {
        Command::ShapeFactor { polygon } => {
            let poly = parse_polygon_field(&polygon).map_err(|e| invalid(e.reason))?;
            let metrics = poly.shape_metrics();
            if json {
                writeln!(out, "{}", to_json(&metrics)).map_err(invalid)
            } else {
                writeln!(out, "{:.6}", metrics.shape_factor).map_err(invalid)
            }
        }
        Command::Train {
            data,
            learner,
            out: path,
        } => {
            let records = load_records(&data, err)?;
            let samples = records
                .iter()
                .map(|r| {
                    r.label
                        .map(|l| (r.features(), l))
                        .ok_or_else(|| invalid(format!("{}: record has no label", r.design_id)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let tree = train(&samples, &learner.config()).map_err(invalid)?;
            let _ = writeln!(
                err,
                "trained {} (depth {}, {} nodes) on {} records",
                tree.model_id,
                tree.depth(),
                tree.root.node_count(),
                samples.len()
            );
            write_output(out, path.as_deref(), &export_tree(&tree, ExportFormat::Json))
        }
        Command::Predict {
            model,
            sf,
            polygon,
            util,
            layers,
            cutoff,
        } => {
            let tree = load_model(&model.model)?;
            let req = ScoreRequest {
                polygon,
                shape_factor: sf,
                row_utilization_pct: util,
                routing_layers: layers,
                model: None,
                cutoff: Some(cutoff),
            };
            let resp = score(&tree, &req).map_err(|e| invalid(e.to_string()))?;
            if json {
                writeln!(out, "{}", to_json(&resp)).map_err(invalid)?;
            }
            match resp.feasibility_score_pct {
                Some(pct) if !json => writeln!(out, "{pct:.2}").map_err(invalid),
                Some(_) => Ok(()),
                None => {
                    let condition = resp.decision_path.last().map(|s| s.condition()).unwrap_or_default();
                    Err(invalid(format!("unsupported region: {condition}")))
                }
            }
        }
        Command::Cv { data, learner } => {
            let records = load_records(&data, err)?;
            let report = loo_by_project_cv(&records, &learner.config()).map_err(invalid)?;
            if json {
                writeln!(out, "{}", to_json(&report)).map_err(invalid)
            } else {
                writeln!(out, "{report}").map_err(invalid)
            }
        }
        Command::Gen {
            n_records,
            n_projects,
            seed,
            noise,
            families,
            min_layers,
            max_layers,
            min_util,
            max_util,
            base,
            layer_gain,
            sf_gain,
            format,
            out: path,
        } => {
            let cfg = GenConfig {
                n_records,
                n_projects,
                seed,
                noise_rate: noise,
                shape_families: families,
                layer_range: (min_layers, max_layers),
                util_range: (min_util, max_util),
            };
            let rule = OracleRule {
                base,
                layer_gain,
                sf_gain,
            };
            if [base, layer_gain, sf_gain].iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(invalid("oracle parameters must be non-negative"));
            }
            let records = generate(&cfg, &rule).map_err(invalid)?;
            let mut buf = Vec::new();
            save_dataset(&records, &mut buf, format.into()).map_err(invalid)?;
            write_output(out, path.as_deref(), &buf)
        }
        Command::Stats { data } => {
            let records = load_records(&data, err)?;
            let stats = area_bucket_stats(&records);
            if json {
                writeln!(out, "{}", to_json(&stats)).map_err(invalid)
            } else {
                writeln!(out, "{stats}").map_err(invalid)
            }
        }
        Command::Export {
            model,
            format,
            out: path,
        } => {
            let tree = load_model(&model.model)?;
            let fmt = match format {
                ExportArg::Json => ExportFormat::Json,
                ExportArg::Dot => ExportFormat::Dot,
                ExportArg::Text => ExportFormat::Text,
            };
            write_output(out, path.as_deref(), &export_tree(&tree, fmt))
        }
        Command::Serve { model, bind } => {
            let tree = Arc::new(load_model(&model.model)?);
            let runtime = tokio::runtime::Runtime::new().map_err(invalid)?;
            let model_id = tree.model_id.clone();
            runtime
                .block_on(crate::service::serve(tree, bind, |addr| {
                    log::info!("serving model {model_id} on http://{addr}");
                    eprintln!("listening on {addr}");
                }))
                .map_err(|e| invalid(format!("{bind}: {e}")))
        }
    }
}

/// Entry point shared by the binary and tests: parses `argv`, maps clap
/// errors to exit code 2 (help and version to 0).
pub fn main_with(argv: impl IntoIterator<Item = String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match Cli::try_parse_from(argv) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

pub fn stdio_main() -> i32 {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = io::stderr();
    let code = main_with(std::env::args(), &mut out, &mut err);
    let _ = out.flush();
    code
}
