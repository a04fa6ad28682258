//! The `treerules` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use treerules_core::explain::{explain_local_with_budget, global_from_candidates, select_from_candidates};
use treerules_core::rules::{emit_facts, extract_rules};
use treerules_core::selection::{emit_asp_program, Budget, Unlimited};
use treerules_core::{Dataset, Ensemble, Schema};

use crate::budget::Deadline;
use crate::candidates::{load_candidates, to_json as candidates_json};
use crate::config::RunConfig;
use crate::crossval::run_crossval;
use crate::error::{Error, Result};
use crate::interchange::{load_ensemble, to_json};
use crate::io::{load_dataset, load_schema, parse_instance, read_text};
use crate::manifest::RunDir;
use crate::report::{build_classifier, EvalReport, ExplanationDoc, LocalEvalReport};
use crate::train::{train_model, ModelKind};

#[derive(Parser, Debug)]
#[command(name = "treerules", version, about = "Rule-set explanations for tree ensembles")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic component.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Root directory for run outputs.
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// CSV dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column name.
    #[arg(long)]
    pub label: Option<String>,
    /// JSON schema sidecar.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train an ensemble and save it in the interchange format.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_parser = parse_kind)]
        kind: Option<ModelKind>,
    },
    /// Extract candidate rules and their answer-set facts.
    Extract {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Select a rule set from cached candidates.
    Select {
        #[arg(long)]
        candidates: PathBuf,
    },
    /// Global explanation of a model.
    ExplainGlobal {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Local explanations for rows of a CSV or an inline instance.
    ExplainLocal {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Row index (0-based, header excluded); repeatable.
        #[arg(long = "row")]
        rows: Vec<usize>,
        /// CSV the row indices refer to; defaults to the training data.
        #[arg(long)]
        instances: Option<PathBuf>,
        /// Inline `name=value,...` instance.
        #[arg(long, conflicts_with_all = ["rows", "instances"])]
        instance: Option<String>,
    },
    /// Score an explanation against a validation split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        explanation: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Write the answer-set program equivalent to `select`.
    ExportAsp {
        #[arg(long)]
        candidates: PathBuf,
    },
    /// k-fold train, explain and evaluate.
    Crossval {
        #[command(flatten)]
        data: DataArgs,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    match s {
        "tree" => Ok(ModelKind::Tree),
        "forest" => Ok(ModelKind::Forest),
        "gbdt" => Ok(ModelKind::Gbdt),
        _ => Err(format!("unknown model kind `{s}` (tree, forest, gbdt)")),
    }
}

fn load_config(common: &Common, data: Option<&DataArgs>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &common.outdir {
        cfg.run.outdir = o.clone();
    }
    if let Some(t) = common.threads {
        cfg.run.threads = Some(t);
    }
    if let Some(d) = data {
        if let Some(p) = &d.data {
            cfg.data.path = Some(p.clone());
        }
        if let Some(l) = &d.label {
            cfg.data.label = l.clone();
        }
        if let Some(s) = &d.schema {
            cfg.data.schema = Some(s.clone());
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn data_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.data.path.as_deref().ok_or_else(|| Error::Usage("no dataset given (--data or data.path)".into()))
}

fn load_training_data(cfg: &RunConfig) -> Result<Dataset> {
    let schema = cfg.data.schema.as_deref().map(load_schema).transpose()?;
    load_dataset(data_path(cfg)?, &cfg.data.label, schema.as_ref())
}

/// Loads a CSV with the model's own feature and class encoding.
fn load_for_model(path: &Path, label: &str, ens: &Ensemble) -> Result<Dataset> {
    let schema = Schema { features: ens.features().to_vec(), label: label.into(), classes: ens.classes().to_vec() };
    let data = load_dataset(path, label, Some(&schema))?;
    ens.check_dataset(&data)?;
    Ok(data)
}

fn budget(cfg: &RunConfig) -> Box<dyn Budget + Send> {
    match cfg.time_limit() {
        Some(t) => Box::new(Deadline::after(t)),
        None => Box::new(Unlimited),
    }
}

/// Runs a parsed command; returns the files written, manifest last.
pub fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    let common = &cli.common;
    let mut out = Vec::new();
    let run = match cli.command {
        Command::Train { data, kind } => {
            let mut cfg = load_config(common, Some(&data))?;
            if let Some(k) = kind {
                cfg.model.kind = k;
            }
            let path = data_path(&cfg)?.to_path_buf();
            let ds = load_training_data(&cfg)?;
            let ens = train_model(&ds, &cfg.model, cfg.run.seed)?;
            let mut run = RunDir::create("train", &cfg, &[&path])?;
            out.push(run.write("model.json", &to_json(&ens))?);
            out.push(run.write("schema.json", &(serde_json::to_string_pretty(ds.schema()).expect("schema") + "\n"))?);
            run
        }
        Command::Extract { model, data } => {
            let cfg = load_config(common, Some(&data))?;
            let ens = load_ensemble(&model)?;
            let path = data_path(&cfg)?.to_path_buf();
            let ds = load_for_model(&path, &cfg.data.label, &ens)?;
            let crs = extract_rules(&ens, &ds, cfg.extraction.mode)?;
            let mut run = RunDir::create("extract", &cfg, &[&model, &path])?;
            out.push(run.write("candidates.json", &candidates_json(&crs))?);
            out.push(run.write("facts.lp", &emit_facts(&crs))?);
            run
        }
        Command::Select { candidates } => {
            let cfg = load_config(common, None)?;
            let crs = load_candidates(&candidates)?;
            let mut b = budget(&cfg);
            let (rules, solution, validity) = select_from_candidates(&crs, &cfg.selection_config(), b.as_mut())?;
            let doc = serde_json::json!({ "solution": solution, "validity": validity, "rules": rules });
            let mut run = RunDir::create("select", &cfg, &[&candidates])?;
            out.push(run.write("solution.json", &(serde_json::to_string_pretty(&doc).expect("solution") + "\n"))?);
            run
        }
        Command::ExplainGlobal { model, data } => {
            let cfg = load_config(common, Some(&data))?;
            let ens = load_ensemble(&model)?;
            let path = data_path(&cfg)?.to_path_buf();
            let ds = load_for_model(&path, &cfg.data.label, &ens)?;
            let explain = cfg.global_explain_config();
            let t = Instant::now();
            let crs = extract_rules(&ens, &ds, explain.mode)?;
            let mut b = budget(&cfg);
            let mut expl = global_from_candidates(&crs, &explain, b.as_mut())?;
            expl.solution.stats.elapsed_ms = t.elapsed().as_millis() as u64;
            let doc = ExplanationDoc::global(expl, ds.majority_class(), &ens);
            let mut run = RunDir::create("explain-global", &cfg, &[&model, &path])?;
            out.push(run.write("explanation.json", &doc.to_json())?);
            out.push(run.write("explanation.txt", &doc.to_text())?);
            run
        }
        Command::ExplainLocal { model, data, rows, instances, instance } => {
            let cfg = load_config(common, Some(&data))?;
            let ens = load_ensemble(&model)?;
            let path = data_path(&cfg)?.to_path_buf();
            let ds = load_for_model(&path, &cfg.data.label, &ens)?;
            let mut inputs: Vec<PathBuf> = vec![model.clone(), path.clone()];
            let points: Vec<Vec<f64>> = if let Some(spec) = &instance {
                vec![parse_instance(spec, ds.schema())?]
            } else {
                if rows.is_empty() {
                    return Err(Error::Usage("give --row or --instance".into()));
                }
                let source = match &instances {
                    Some(p) => {
                        inputs.push(p.clone());
                        load_for_model(p, &cfg.data.label, &ens)?
                    }
                    None => ds.clone(),
                };
                rows.iter()
                    .map(|&r| {
                        if r < source.n() {
                            Ok(source.row(r).to_vec())
                        } else {
                            Err(Error::Usage(format!("row {r} out of range ({} rows)", source.n())))
                        }
                    })
                    .collect::<Result<_>>()?
            };
            let explain = cfg.local_explain_config();
            let docs = points
                .par_iter()
                .map(|x| {
                    let t = Instant::now();
                    let mut b = budget(&cfg);
                    let mut e = explain_local_with_budget(&ens, &ds, x, &explain, b.as_mut())?;
                    e.solution.stats.elapsed_ms = t.elapsed().as_millis() as u64;
                    Ok(ExplanationDoc::local(e, &ens))
                })
                .collect::<Result<Vec<_>>>()?;
            let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
            let mut run = RunDir::create("explain-local", &cfg, &input_refs)?;
            if let [doc] = docs.as_slice() {
                out.push(run.write("explanation.json", &doc.to_json())?);
                out.push(run.write("explanation.txt", &doc.to_text())?);
            } else {
                let json = serde_json::to_string_pretty(&docs).expect("explanations") + "\n";
                out.push(run.write("explanations.json", &json)?);
                let text: Vec<String> = docs.iter().map(ExplanationDoc::to_text).collect();
                out.push(run.write("explanations.txt", &text.join("\n"))?);
            }
            run
        }
        Command::Evaluate { model, explanation, data } => {
            let cfg = load_config(common, Some(&data))?;
            let ens = load_ensemble(&model)?;
            let path = data_path(&cfg)?.to_path_buf();
            let ds = load_for_model(&path, &cfg.data.label, &ens)?;
            let doc: ExplanationDoc = serde_json::from_str(&read_text(&explanation)?)
                .map_err(|e| Error::format(&explanation, e))?;
            let mut run = RunDir::create("evaluate", &cfg, &[&model, &explanation, &path])?;
            match doc {
                ExplanationDoc::Global { explanation: e, default_label, .. } => {
                    let clf = build_classifier(&e.rules, default_label, cfg.evaluate.rule_order);
                    let report = EvalReport::compute(&e.rules, &clf, &ens, &ds)?;
                    out.push(run.write("eval.json", &(serde_json::to_string_pretty(&report).expect("eval") + "\n"))?);
                    out.push(run.write("eval.txt", &report.to_text())?);
                }
                ExplanationDoc::Local { explanation: e, .. } => {
                    let report = LocalEvalReport::compute(&e, &ens, &ds)?;
                    out.push(run.write("eval.json", &(serde_json::to_string_pretty(&report).expect("eval") + "\n"))?);
                    out.push(run.write("eval.txt", &report.to_text())?);
                }
            }
            run
        }
        Command::ExportAsp { candidates } => {
            let cfg = load_config(common, None)?;
            let crs = load_candidates(&candidates)?;
            cfg.selection_config().check()?;
            let mut run = RunDir::create("export-asp", &cfg, &[&candidates])?;
            out.push(run.write("program.lp", &emit_asp_program(&crs, &cfg.selection_config()))?);
            run
        }
        Command::Crossval { data } => {
            let cfg = load_config(common, Some(&data))?;
            let path = data_path(&cfg)?.to_path_buf();
            let ds = load_training_data(&cfg)?;
            let report = run_crossval(&ds, &cfg)?;
            let mut run = RunDir::create("crossval", &cfg, &[&path])?;
            out.push(run.write("crossval.json", &(serde_json::to_string_pretty(&report).expect("report") + "\n"))?);
            out.push(run.write("crossval.txt", &report.to_text())?);
            run
        }
    };
    out.push(run.finish()?);
    Ok(out)
}

/// Parses arguments, runs, prints written paths to stdout and error lines
/// to stderr. Returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            if e.use_stderr() {
                let first = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
                eprintln!("error[usage]: {first}");
                eprint!("{e}");
            } else {
                print!("{e}");
            }
            return code;
        }
    };
    if let Some(n) = cli.common.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(cli) {
        Ok(paths) => {
            // a closed stdout (e.g. piped into `head`) is not an error
            let mut out = std::io::stdout().lock();
            for p in paths {
                if writeln!(out, "{}", p.display()).is_err() {
                    break;
                }
            }
            0
        }
        Err(e) => {
            for line in e.lines() {
                eprintln!("{line}");
            }
            match e {
                Error::Config(_) | Error::Usage(_) => 2,
                _ => 1,
            }
        }
    }
}
