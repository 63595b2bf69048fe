//! Run configuration, model artifacts and the train / eval / predict /
//! ensemble flows shared by the CLI and the FFI layer.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{train_random_forest, train_svm, ForestConfig, RandomForestModel, SvmConfig, SvmModel};
use crate::corpus::{carve_validation, load_corpus, split_by_source, Corpus, Label, SplitManifest};
use crate::ensemble::{fit_weights, EnsembleConfig};
use crate::error::{Error, Result};
use crate::eval::{format_pr_curve, report, write_predictions, EvalReport, Prediction};
use crate::features::{extract_all, FeatureVector, HeuristicTagger, Standardizer};
use crate::neural::{
    train_bilstm, train_contrastive, train_encoder_head, BiLstmClassifier, BiLstmConfig, ContrastiveConfig,
    EncoderHeadConfig, EncoderHeadModel, Scored, SiameseModel, TrainReport,
};

/// Version of the on-disk model directory layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Rf,
    Svm,
    Bilstm,
    Contrastive,
    EncoderHead,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Rf,
        ModelKind::Svm,
        ModelKind::Bilstm,
        ModelKind::Contrastive,
        ModelKind::EncoderHead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Svm => "svm",
            ModelKind::Bilstm => "bilstm",
            ModelKind::Contrastive => "contrastive",
            ModelKind::EncoderHead => "encoder-head",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Full-scale hyperparameters.
    #[default]
    Full,
    /// Small shapes and vocabularies for quick local runs.
    Desk,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::invalid(format!("unknown profile {s:?}"))),
        }
    }
}

/// Everything a run needs. Model seeds are overwritten by `seed` when the
/// config is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub profile: Profile,
    pub model: ModelKind,
    pub seed: u64,
    /// Full corpus, split with `manifest` when `train`/`test` are unset.
    pub corpus: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub output: PathBuf,
    /// Fraction of each training source held out for validation
    /// predictions (0 disables).
    pub validation_fraction: f64,
    pub forest: ForestConfig,
    pub svm: SvmConfig,
    pub bilstm: BiLstmConfig,
    pub encoder_head: EncoderHeadConfig,
    pub contrastive: ContrastiveConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::for_profile(Profile::Full)
    }
}

fn merge_toml(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_toml(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (bilstm, encoder_head, contrastive) = match profile {
            Profile::Full => Default::default(),
            Profile::Desk => (
                BiLstmConfig::desk(),
                EncoderHeadConfig::desk(),
                ContrastiveConfig::desk(),
            ),
        };
        RunConfig {
            profile,
            model: ModelKind::Rf,
            seed: 0,
            corpus: None,
            manifest: None,
            train: None,
            test: None,
            output: PathBuf::from("run"),
            validation_fraction: 0.0,
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
            bilstm,
            encoder_head,
            contrastive,
        }
    }

    /// Parses TOML text. Keys missing from the text take the defaults of the
    /// profile named in it (or `profile_override`).
    pub fn from_toml(text: &str, profile_override: Option<Profile>) -> std::result::Result<Self, toml::de::Error> {
        let over: toml::Value = toml::from_str(text)?;
        let named = over
            .get("profile")
            .and_then(|p| p.as_str())
            .and_then(|p| p.parse().ok())
            .unwrap_or_default();
        let profile = profile_override.unwrap_or(named);
        let base = RunConfig::for_profile(profile);
        let mut merged = toml::Value::try_from(&base).expect("run config serializes");
        merge_toml(&mut merged, over);
        let mut cfg: RunConfig = merged.try_into()?;
        cfg.profile = profile;
        Ok(cfg)
    }

    pub fn load(path: &Path, profile_override: Option<Profile>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, profile_override).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    /// Propagates the run seed into every model config.
    pub fn resolve(mut self) -> Self {
        self.forest.seed = self.seed;
        self.svm.seed = self.seed;
        self.bilstm.seed = self.seed;
        self.encoder_head.seed = self.seed;
        self.contrastive.seed = self.seed;
        self
    }

    /// Overrides the epoch count of the selected model.
    pub fn set_epochs(&mut self, epochs: usize) {
        match self.model {
            ModelKind::Rf => {}
            ModelKind::Svm => self.svm.epochs = epochs,
            ModelKind::Bilstm => self.bilstm.epochs = epochs,
            ModelKind::Contrastive => self.contrastive.epochs = epochs,
            ModelKind::EncoderHead => self.encoder_head.epochs = epochs,
        }
    }

    fn split_side(&self, test: bool) -> Result<Option<Corpus>> {
        let direct = if test { &self.test } else { &self.train };
        if let Some(p) = direct {
            return load_corpus(p).map(Some);
        }
        match (&self.corpus, &self.manifest) {
            (Some(c), Some(m)) => {
                let (train, test_side) = split_by_source(&load_corpus(c)?, &SplitManifest::load(m)?)?;
                Ok(Some(if test { test_side } else { train }))
            }
            (Some(c), None) if !test => load_corpus(c).map(Some),
            _ => Ok(None),
        }
    }

    pub fn train_corpus(&self) -> Result<Corpus> {
        self.split_side(false)?
            .ok_or_else(|| Error::invalid("no training corpus configured (set train, or corpus and manifest)"))
    }

    pub fn test_corpus(&self) -> Result<Option<Corpus>> {
        self.split_side(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelManifest {
    format_version: u32,
    kind: ModelKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SvmArtifact {
    standardizer: Standardizer,
    model: SvmModel,
}

/// A trained model of any family.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Predictor {
    Forest(RandomForestModel),
    Svm {
        model: SvmModel,
        standardizer: Standardizer,
    },
    Bilstm(BiLstmClassifier),
    EncoderHead(EncoderHeadModel),
    Contrastive(SiameseModel),
}

fn features(corpus_articles: &[crate::corpus::NewsArticle]) -> Result<Vec<FeatureVector>> {
    extract_all(corpus_articles, &HeuristicTagger)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

impl Predictor {
    pub fn kind(&self) -> ModelKind {
        match self {
            Predictor::Forest(_) => ModelKind::Rf,
            Predictor::Svm { .. } => ModelKind::Svm,
            Predictor::Bilstm(_) => ModelKind::Bilstm,
            Predictor::EncoderHead(_) => ModelKind::EncoderHead,
            Predictor::Contrastive(_) => ModelKind::Contrastive,
        }
    }

    pub fn predict(&self, articles: &[crate::corpus::NewsArticle]) -> Result<Vec<Scored>> {
        match self {
            Predictor::Forest(m) => features(articles)?
                .iter()
                .map(|x| {
                    Ok(Scored {
                        label: m.predict(x)?,
                        clickbait_score: m.predict_proba(x)?,
                    })
                })
                .collect(),
            Predictor::Svm { model, standardizer } => features(articles)?
                .iter()
                .map(|x| {
                    let z = standardizer.apply(x)?;
                    Ok(Scored {
                        label: model.predict(&z)?,
                        clickbait_score: model.predict_proba(&z)?,
                    })
                })
                .collect(),
            Predictor::Bilstm(m) => m.predict(articles),
            Predictor::EncoderHead(m) => m.predict(articles),
            Predictor::Contrastive(m) => m.predict(articles),
        }
    }

    /// Predictions with gold labels attached where the corpus has them.
    pub fn predictions(&self, corpus: &Corpus) -> Result<Vec<Prediction>> {
        let scored = self.predict(corpus.articles())?;
        Ok(corpus
            .articles()
            .iter()
            .zip(scored)
            .map(|(a, s)| Prediction {
                id: a.id.clone(),
                gold: a.label,
                pred: s.label,
                clickbait_score: s.clickbait_score,
            })
            .collect())
    }

    /// Writes `model.json` plus the family's payload files into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(
            &dir.join("model.json"),
            &ModelManifest {
                format_version: MODEL_FORMAT_VERSION,
                kind: self.kind(),
            },
        )?;
        match self {
            Predictor::Forest(m) => write_json(&dir.join("forest.json"), m),
            Predictor::Svm { model, standardizer } => write_json(
                &dir.join("svm.json"),
                &SvmArtifact {
                    standardizer: standardizer.clone(),
                    model: model.clone(),
                },
            ),
            Predictor::Bilstm(m) => m.save(dir),
            Predictor::EncoderHead(m) => m.save(dir),
            Predictor::Contrastive(m) => m.save(dir),
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: ModelManifest = read_json(&dir.join("model.json"))?;
        if manifest.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: model format version {} (expected {MODEL_FORMAT_VERSION})",
                dir.display(),
                manifest.format_version
            )));
        }
        Ok(match manifest.kind {
            ModelKind::Rf => Predictor::Forest(read_json(&dir.join("forest.json"))?),
            ModelKind::Svm => {
                let a: SvmArtifact = read_json(&dir.join("svm.json"))?;
                Predictor::Svm {
                    model: a.model,
                    standardizer: a.standardizer,
                }
            }
            ModelKind::Bilstm => Predictor::Bilstm(BiLstmClassifier::load(dir)?),
            ModelKind::EncoderHead => Predictor::EncoderHead(EncoderHeadModel::load(dir)?),
            ModelKind::Contrastive => Predictor::Contrastive(SiameseModel::load(dir)?),
        })
    }
}

/// Trains the configured model family; returns it with human-readable log
/// lines.
pub fn train_model(config: &RunConfig, corpus: &Corpus) -> Result<(Predictor, Vec<String>)> {
    let epoch_lines = |r: &TrainReport| -> Vec<String> {
        r.epoch_losses
            .iter()
            .enumerate()
            .map(|(i, l)| format!("epoch {} loss {l}", i + 1))
            .collect()
    };
    Ok(match config.model {
        ModelKind::Rf => {
            let x = features(corpus.articles())?;
            let m = train_random_forest(&x, &corpus.labels()?, &config.forest)?;
            let line = match m.oob_score {
                Some(s) => format!("oob_score {s}"),
                None => "oob_score none".to_string(),
            };
            (Predictor::Forest(m), vec![line])
        }
        ModelKind::Svm => {
            let x = features(corpus.articles())?;
            let standardizer = Standardizer::fit(&x)?;
            let z = x.iter().map(|r| standardizer.apply(r)).collect::<Result<Vec<_>>>()?;
            let model = train_svm(&z, &corpus.labels()?, &config.svm)?;
            let log = model
                .objective_history
                .iter()
                .enumerate()
                .map(|(i, o)| format!("epoch {} objective {o}", i + 1))
                .collect();
            (Predictor::Svm { model, standardizer }, log)
        }
        ModelKind::Bilstm => {
            let (m, r) = train_bilstm(corpus, &config.bilstm)?;
            (Predictor::Bilstm(m), epoch_lines(&r))
        }
        ModelKind::EncoderHead => {
            let (m, r) = train_encoder_head(corpus, &config.encoder_head)?;
            (Predictor::EncoderHead(m), epoch_lines(&r))
        }
        ModelKind::Contrastive => {
            let (m, r) = train_contrastive(corpus, &config.contrastive)?;
            (Predictor::Contrastive(m), epoch_lines(&r))
        }
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `train` flow: writes `model/`, `config.toml`, `train.log` and, when a
/// validation fraction is set, `validation.tsv` under the output directory.
/// Returns the model directory.
pub fn run_train(config: &RunConfig) -> Result<PathBuf> {
    let config = config.clone().resolve();
    let out = &config.output;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let full = config.train_corpus()?;
    let (train, validation) = if config.validation_fraction > 0.0 {
        let (t, v) = carve_validation(&full, config.validation_fraction, config.seed)?;
        (t, Some(v))
    } else {
        (full, None)
    };
    log::info!("training {} on {} articles", config.model, train.len());
    let (model, lines) = train_model(&config, &train)?;
    let model_dir = out.join("model");
    model.save(&model_dir)?;
    config.save(&model_dir.join("config.toml"))?;
    config.save(&out.join("config.toml"))?;
    let mut log = lines.join("\n");
    log.push('\n');
    write_text(&out.join("train.log"), &log)?;
    if let Some(v) = validation {
        write_predictions(&out.join("validation.tsv"), &model.predictions(&v)?)?;
    }
    Ok(model_dir)
}

/// Files written by [`write_eval`].
pub fn write_eval(out: &Path, preds: &[Prediction]) -> Result<EvalReport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_predictions(&out.join("predictions.tsv"), preds)?;
    let r = report(preds)?;
    write_text(&out.join("report.txt"), &r.to_table())?;
    write_text(&out.join("report.kv"), &r.to_key_values())?;
    if let Some(curve) = &r.pr_curve {
        write_text(&out.join("pr_curve.tsv"), &format_pr_curve(curve))?;
    }
    Ok(r)
}

/// `eval` flow: predicts a labeled corpus and writes predictions, reports
/// and the model's config snapshot into `out`.
pub fn run_eval(model_dir: &Path, corpus: &Corpus, out: &Path) -> Result<EvalReport> {
    corpus.require_labeled()?;
    let model = Predictor::load(model_dir)?;
    let preds = model.predictions(corpus)?;
    let r = write_eval(out, &preds)?;
    let snapshot = model_dir.join("config.toml");
    if snapshot.exists() {
        std::fs::copy(&snapshot, out.join("config.toml")).map_err(|e| Error::io(&snapshot, e))?;
    }
    Ok(r)
}

fn check_aligned(named: &[(String, Vec<Prediction>)]) -> Result<()> {
    let Some((first_name, first)) = named.first() else {
        return Err(Error::invalid("no prediction files given"));
    };
    for (name, preds) in &named[1..] {
        if preds.len() != first.len() || preds.iter().zip(first).any(|(a, b)| a.id != b.id) {
            return Err(Error::invalid(format!(
                "predictions of {name} are not aligned with {first_name}"
            )));
        }
    }
    Ok(())
}

/// Weights from validation accuracy of each named prediction set.
pub fn ensemble_fit(named: &[(String, Vec<Prediction>)], threshold: f64) -> Result<EnsembleConfig> {
    check_aligned(named)?;
    let golds = named[0]
        .1
        .iter()
        .map(|p| {
            p.gold
                .ok_or_else(|| Error::invalid(format!("prediction {} has no gold label", p.id)))
        })
        .collect::<Result<Vec<Label>>>()?;
    let preds: Vec<Vec<Label>> = named.iter().map(|(_, p)| p.iter().map(|x| x.pred).collect()).collect();
    let weights = fit_weights(&preds, &golds)?;
    EnsembleConfig::new(named.iter().map(|(n, _)| n.clone()).collect(), weights, threshold)
}

/// Weighted vote over named prediction sets, matched to the config's model
/// order by name.
pub fn ensemble_apply(config: &EnsembleConfig, named: &[(String, Vec<Prediction>)]) -> Result<Vec<Prediction>> {
    config.validate()?;
    let ordered = config
        .models
        .iter()
        .map(|m| {
            named
                .iter()
                .find(|(n, _)| n == m)
                .ok_or_else(|| Error::invalid(format!("no predictions for ensemble member {m}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let owned: Vec<(String, Vec<Prediction>)> = ordered.iter().map(|p| (*p).clone()).collect();
    check_aligned(&owned)?;
    let base = &owned[0].1;
    (0..base.len())
        .map(|i| {
            let scores: Vec<f64> = owned.iter().map(|(_, p)| p[i].clickbait_score).collect();
            let (pred, combined) = config.predict(&scores)?;
            Ok(Prediction {
                id: base[i].id.clone(),
                gold: base[i].gold,
                pred,
                clickbait_score: combined,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::save_corpus;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn profile_defaults_and_overrides() {
        let cfg = RunConfig::from_toml("profile = \"desk\"\nseed = 7\n[bilstm]\nepochs = 3\n", None).unwrap();
        assert_eq!(cfg.profile, Profile::Desk);
        assert_eq!(cfg.bilstm.epochs, 3);
        assert_eq!(cfg.bilstm.embed_dim, BiLstmConfig::desk().embed_dim);
        assert_eq!(cfg.contrastive, ContrastiveConfig::desk());
        let full = RunConfig::default();
        assert_eq!(full.bilstm.title_vocab, 12_000);
        assert_eq!(full.contrastive.lr, 1e-6);
        assert_eq!(full.encoder_head.lr, 2e-5);
        assert_eq!(full.forest.n_estimators, 150);
        let resolved = cfg.resolve();
        assert_eq!(resolved.contrastive.seed, 7);
        assert!(RunConfig::from_toml("model = \"gbm\"\n", None).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = RunConfig::for_profile(Profile::Desk);
        cfg.model = ModelKind::EncoderHead;
        cfg.train = Some("a.jsonl".into());
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn model_kinds_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("cnn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn feature_models_round_trip_and_version_is_checked() {
        let corpus = generate(&SynthConfig {
            articles: 80,
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Rf, ModelKind::Svm] {
            let mut cfg = RunConfig::for_profile(Profile::Desk);
            cfg.model = kind;
            cfg.forest.n_estimators = 10;
            cfg.svm.epochs = 5;
            let (m, log) = train_model(&cfg, &corpus).unwrap();
            assert!(!log.is_empty());
            let d = dir.path().join(kind.as_str());
            m.save(&d).unwrap();
            let back = Predictor::load(&d).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.predictions(&corpus).unwrap(), m.predictions(&corpus).unwrap());
        }
        let d = dir.path().join("rf");
        std::fs::write(d.join("model.json"), "{\"format_version\": 9, \"kind\": \"rf\"}").unwrap();
        assert!(matches!(Predictor::load(&d), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn train_and_eval_flow_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate(&SynthConfig {
            articles: 60,
            ..Default::default()
        })
        .unwrap();
        let path = dir.path().join("c.jsonl");
        save_corpus(&corpus, &path).unwrap();
        let mut cfg = RunConfig::for_profile(Profile::Desk);
        cfg.model = ModelKind::Contrastive;
        cfg.contrastive.epochs = 0;
        cfg.train = Some(path.clone());
        cfg.output = dir.path().join("run");
        cfg.validation_fraction = 0.2;
        let model_dir = run_train(&cfg).unwrap();
        for f in [
            "model/model.json",
            "model/params.tensors",
            "config.toml",
            "train.log",
            "validation.tsv",
        ] {
            assert!(cfg.output.join(f).exists(), "{f}");
        }
        let out = dir.path().join("eval");
        run_eval(&model_dir, &corpus, &out).unwrap();
        for f in ["predictions.tsv", "report.txt", "report.kv", "config.toml"] {
            assert!(out.join(f).exists(), "{f}");
        }
    }

    #[test]
    fn ensemble_flow() {
        let p = |id: &str, gold: Label, pred: Label, s: f64| Prediction {
            id: id.into(),
            gold: Some(gold),
            pred,
            clickbait_score: s,
        };
        use Label::{Clickbait as CB, NonClickbait as NCB};
        let a = vec![p("1", CB, CB, 0.9), p("2", NCB, NCB, 0.2)];
        let b = vec![p("1", CB, NCB, 0.4), p("2", NCB, NCB, 0.1)];
        let named = vec![("a".to_string(), a.clone()), ("b".to_string(), b.clone())];
        let cfg = ensemble_fit(&named, 0.5).unwrap();
        assert_eq!(cfg.weights, vec![2.0 / 3.0, 1.0 / 3.0]);
        let reversed = vec![("b".to_string(), b), ("a".to_string(), a)];
        let out = ensemble_apply(&cfg, &reversed).unwrap();
        assert_eq!(out[0].pred, CB);
        assert!((out[0].clickbait_score - (0.9 * 2.0 / 3.0 + 0.4 / 3.0)).abs() < 1e-12);
        assert!(ensemble_apply(&cfg, &reversed[..1]).is_err());
    }
}
