//! Command-line surface.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 parse or invalid input,
//! 5 incompatible checkpoint, 6 numerical or training failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{corpus_stats, load_corpus, save_corpus, split_by_source, Corpus, SplitManifest};
use crate::ensemble::{EnsembleConfig, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::eval::{labeled_pairs, mcnemar, read_predictions, write_predictions, Prediction};
use crate::features::{extract_all, write_feature_matrix, HeuristicTagger};
use crate::pipeline::{ensemble_apply, ensemble_fit, run_eval, run_train, write_eval, ModelKind, Profile, RunConfig};
use crate::synth::{generate, SynthConfig};

// Writes to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Environment variable consulted for the seed when no flag or config value
/// sets one.
pub const SEED_ENV: &str = "CLICKBAIT_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "clickbait",
    version,
    about = "Train, evaluate and compare clickbait detectors"
)]
pub struct Cli {
    /// Log verbosity (-v info, -vv debug); logs go to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file and print its statistics.
    Ingest {
        /// Corpus in JSON-lines format.
        corpus: PathBuf,
        /// Print statistics as JSON instead of key-value lines.
        #[arg(long)]
        json: bool,
    },
    /// Split a corpus by source and write train.jsonl / test.jsonl.
    Split {
        /// Corpus in JSON-lines format.
        corpus: PathBuf,
        /// Manifest of `source<TAB>train|test` lines.
        #[arg(long)]
        manifest: PathBuf,
        /// Directory receiving the two split files.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write the handcrafted feature matrix of a corpus as TSV.
    Featurize {
        /// Corpus in JSON-lines format.
        corpus: PathBuf,
        /// TSV file with one row of features per article.
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a model; also evaluates it when a test corpus is configured.
    Train(TrainArgs),
    /// Evaluate a model on a labeled corpus, or re-score a prediction file.
    Eval {
        /// Model directory written by `train`.
        #[arg(long, requires = "corpus", conflicts_with = "predictions")]
        model: Option<PathBuf>,
        /// Labeled corpus to evaluate on.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Existing prediction file to report on.
        #[arg(long, required_unless_present = "model")]
        predictions: Option<PathBuf>,
        /// Output directory for predictions.tsv, report.txt, report.kv and
        /// pr_curve.tsv.
        #[arg(long)]
        output: PathBuf,
    },
    /// Predict labels and clickbait scores for a corpus.
    Predict {
        /// Model directory written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Corpus to label; gold labels are optional.
        #[arg(long)]
        corpus: PathBuf,
        /// Prediction file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit or apply a weighted-vote ensemble.
    #[command(subcommand)]
    Ensemble(EnsembleCommand),
    /// Generate a synthetic topic corpus.
    Synth {
        /// Number of articles.
        #[arg(long, default_value_t = 600)]
        articles: usize,
        /// Number of topics, each with its own vocabulary.
        #[arg(long, default_value_t = 8)]
        topics: usize,
        /// Defaults to $CLICKBAIT_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Corpus file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// McNemar's test between two prediction files over the same articles.
    Compare {
        /// First prediction file.
        a: PathBuf,
        /// Second prediction file.
        b: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One of rf, svm, bilstm, contrastive, encoder-head.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Hyperparameter profile: full or desk.
    #[arg(long)]
    pub profile: Option<Profile>,
    /// Defaults to the config value, then $CLICKBAIT_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Epoch override for the selected model.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Training corpus.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test corpus evaluated after training.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Full corpus split with --manifest.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Source split manifest used with --corpus.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Run directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Fraction of each training source held out for validation predictions.
    #[arg(long)]
    pub validation: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum EnsembleCommand {
    /// Weights from each model's accuracy on shared validation predictions.
    Fit {
        /// `name=path` prediction file, once per model.
        #[arg(long = "pred", required = true, value_parser = parse_named)]
        preds: Vec<(String, PathBuf)>,
        /// Combined score at or above which an article is clickbait.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Ensemble config (TOML) to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Combine prediction files with a fitted ensemble config.
    Apply {
        /// Ensemble config written by `ensemble fit`.
        #[arg(long)]
        config: PathBuf,
        /// `name=path` prediction file, once per ensemble member.
        #[arg(long = "pred", required = true, value_parser = parse_named)]
        preds: Vec<(String, PathBuf)>,
        /// Output directory; reports are written when gold labels exist.
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_named(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok((n.to_string(), PathBuf::from(p))),
        _ => Err(format!("expected name=path, got {s:?}")),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn class_line(name: &str, c: &Corpus) -> String {
    let [cb, ncb] = c.class_counts();
    format!("{name}\t{}\tclickbait {cb}\tnon-clickbait {ncb}", c.len())
}

/// Resolves the run config from an optional file plus flag overrides.
pub fn resolve_train_config(args: &TrainArgs) -> Result<RunConfig> {
    let (mut cfg, file_has_seed) = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path, args.profile)?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let has_seed = text
                .parse::<toml::Table>()
                .map(|t| t.contains_key("seed"))
                .unwrap_or(false);
            (cfg, has_seed)
        }
        None => (RunConfig::for_profile(args.profile.unwrap_or_default()), false),
    };
    if let Some(m) = args.model {
        cfg.model = m;
    }
    match (args.seed, file_has_seed) {
        (Some(s), _) => cfg.seed = s,
        (None, true) => {}
        (None, false) => cfg.seed = env_seed()?.unwrap_or(0),
    }
    if let Some(e) = args.epochs {
        cfg.set_epochs(e);
    }
    for (slot, flag) in [
        (&mut cfg.train, &args.train),
        (&mut cfg.test, &args.test),
        (&mut cfg.corpus, &args.corpus),
        (&mut cfg.manifest, &args.manifest),
    ] {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    if let Some(o) = &args.output {
        cfg.output = o.clone();
    }
    if let Some(v) = args.validation {
        cfg.validation_fraction = v;
    }
    Ok(cfg.resolve())
}

fn read_named(preds: &[(String, PathBuf)]) -> Result<Vec<(String, Vec<Prediction>)>> {
    preds
        .iter()
        .map(|(n, p)| Ok((n.clone(), read_predictions(p)?)))
        .collect()
}

fn print_report(out: &Path, table: &str) {
    out!("{}", table.trim_end());
    out!("wrote {}", out.display());
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { corpus, json } => {
            let c = load_corpus(&corpus)?;
            let s = corpus_stats(&c)?;
            if json {
                out!(
                    "{}",
                    serde_json::to_string_pretty(&s).map_err(|e| Error::invalid(e.to_string()))?
                );
            } else {
                out!("total\t{}", s.total);
                out!("clickbait\t{}", s.clickbait);
                out!("non_clickbait\t{}", s.non_clickbait);
                out!("token_total\t{}", s.token_total);
                out!("avg_title_tokens\t{:.2}", s.avg_title_tokens);
                out!("avg_content_tokens\t{:.2}", s.avg_content_tokens);
                out!("avg_sentences\t{:.2}", s.avg_sentences);
                out!("sentence_range\t{}-{}", s.sentence_range.0, s.sentence_range.1);
                for (src, r) in &s.per_source_clickbait_ratio {
                    out!("clickbait_ratio.{src}\t{r:.4}");
                }
            }
        }
        Command::Split {
            corpus,
            manifest,
            out_dir,
        } => {
            let (train, test) = split_by_source(&load_corpus(&corpus)?, &SplitManifest::load(&manifest)?)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            save_corpus(&train, &out_dir.join("train.jsonl"))?;
            save_corpus(&test, &out_dir.join("test.jsonl"))?;
            out!("{}", class_line("train", &train));
            out!("{}", class_line("test", &test));
        }
        Command::Featurize { corpus, output } => {
            let c = load_corpus(&corpus)?;
            let rows = extract_all(c.articles(), &HeuristicTagger)?;
            write_feature_matrix(&output, c.articles(), &rows)?;
            out!("wrote {} rows to {}", rows.len(), output.display());
        }
        Command::Train(args) => {
            let cfg = resolve_train_config(&args)?;
            let model_dir = run_train(&cfg)?;
            out!("model {}", model_dir.display());
            if let Some(test) = cfg.test_corpus()? {
                let out = cfg.output.join("eval");
                let r = run_eval(&model_dir, &test, &out)?;
                print_report(&out, &r.to_table());
            }
        }
        Command::Eval {
            model,
            corpus,
            predictions,
            output,
        } => {
            let r = match (model, corpus, predictions) {
                (Some(m), Some(c), None) => run_eval(&m, &load_corpus(&c)?, &output)?,
                (None, _, Some(p)) => write_eval(&output, &read_predictions(&p)?)?,
                _ => return Err(Error::invalid("eval needs --model with --corpus, or --predictions")),
            };
            print_report(&output, &r.to_table());
        }
        Command::Predict { model, corpus, output } => {
            let m = crate::pipeline::Predictor::load(&model)?;
            let preds = m.predictions(&load_corpus(&corpus)?)?;
            write_predictions(&output, &preds)?;
            out!("wrote {} predictions to {}", preds.len(), output.display());
        }
        Command::Ensemble(EnsembleCommand::Fit {
            preds,
            threshold,
            output,
        }) => {
            let cfg = ensemble_fit(&read_named(&preds)?, threshold)?;
            cfg.save(&output)?;
            for (m, w) in cfg.models.iter().zip(&cfg.weights) {
                out!("{m}\t{w:.4}");
            }
        }
        Command::Ensemble(EnsembleCommand::Apply { config, preds, output }) => {
            let cfg = EnsembleConfig::load(&config)?;
            let combined = ensemble_apply(&cfg, &read_named(&preds)?)?;
            if combined.iter().all(|p| p.gold.is_some()) {
                let r = write_eval(&output, &combined)?;
                print_report(&output, &r.to_table());
            } else {
                std::fs::create_dir_all(&output).map_err(|e| Error::io(&output, e))?;
                write_predictions(&output.join("predictions.tsv"), &combined)?;
                out!("wrote {}", output.display());
            }
            cfg.save(&output.join("ensemble.toml"))?;
        }
        Command::Synth {
            articles,
            topics,
            seed,
            output,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let c = generate(&SynthConfig {
                articles,
                topics,
                seed,
                ..Default::default()
            })?;
            save_corpus(&c, &output)?;
            out!("{}", class_line("synthetic", &c));
        }
        Command::Compare { a, b } => {
            let (pa, pb) = (read_predictions(&a)?, read_predictions(&b)?);
            if pa.len() != pb.len() || pa.iter().zip(&pb).any(|(x, y)| x.id != y.id) {
                return Err(Error::invalid("prediction files cover different articles"));
            }
            let (preds_a, golds) = labeled_pairs(&pa)?;
            let (preds_b, _) = labeled_pairs(&pb)?;
            let m = mcnemar(&preds_a, &preds_b, &golds)?;
            out!("b\t{}", m.b);
            out!("c\t{}", m.c);
            out!("statistic\t{:.4}", m.statistic);
            out!("p_value\t{:.6}", m.p_value);
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
