//! News corpora: records, loading, source-separated splits, statistics and
//! annotation agreement.
//!
//! Corpus files are UTF-8 JSON Lines, one article per line:
//!
//! ```text
//! {"id":"a1","title":"...","content":"...","label":"clickbait","source":"Cancan"}
//! ```
//!
//! `label` is `"clickbait"`, `"non-clickbait"`, or absent/`null` for unlabeled
//! corpora used only for prediction.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::tokenize;

/// Binary class. Numeric encoding is fixed: clickbait = 0, non-clickbait = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "clickbait")]
    Clickbait,
    #[serde(rename = "non-clickbait")]
    NonClickbait,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Clickbait, Label::NonClickbait];

    pub fn index(self) -> usize {
        match self {
            Label::Clickbait => 0,
            Label::NonClickbait => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        match i {
            0 => Some(Label::Clickbait),
            1 => Some(Label::NonClickbait),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Clickbait => "clickbait",
            Label::NonClickbait => "non-clickbait",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Clickbait => Label::NonClickbait,
            Label::NonClickbait => Label::Clickbait,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clickbait" => Ok(Label::Clickbait),
            "non-clickbait" => Ok(Label::NonClickbait),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub id: String,
    pub title: String,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    pub source: String,
}

impl NewsArticle {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        content: impl Into<String>,
        label: Option<Label>,
        source: impl Into<String>,
    ) -> Self {
        NewsArticle {
            id: id.into(),
            title: title.into(),
            content: content.into(),
            label,
            source: source.into(),
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.title.trim().is_empty() {
            return Err(format!("article {}: empty title", self.id));
        }
        if self.content.trim().is_empty() {
            return Err(format!("article {}: empty content", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub name: String,
    articles: Vec<NewsArticle>,
}

impl Corpus {
    /// Builds a corpus, enforcing unique ids, non-empty text and a single
    /// labeling mode.
    pub fn new(name: impl Into<String>, articles: Vec<NewsArticle>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &articles {
            a.validate().map_err(Error::Invalid)?;
            if !seen.insert(a.id.as_str()) {
                return Err(Error::invalid(format!("duplicate id {:?}", a.id)));
            }
        }
        let labeled = articles.iter().filter(|a| a.label.is_some()).count();
        if labeled != 0 && labeled != articles.len() {
            return Err(Error::invalid("corpus mixes labeled and unlabeled articles"));
        }
        Ok(Corpus {
            name: name.into(),
            articles,
        })
    }

    pub fn articles(&self) -> &[NewsArticle] {
        &self.articles
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.articles.is_empty() && self.articles.iter().all(|a| a.label.is_some())
    }

    /// Labels of a labeled corpus; errors when any article lacks one.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.articles
            .iter()
            .map(|a| {
                a.label
                    .ok_or_else(|| Error::invalid(format!("article {} is unlabeled", a.id)))
            })
            .collect()
    }

    pub fn require_labeled(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid(format!("corpus {:?} is empty", self.name)));
        }
        if !self.is_labeled() {
            return Err(Error::invalid(format!(
                "corpus {:?} is unlabeled; labels are required here",
                self.name
            )));
        }
        Ok(())
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in self.articles.iter().filter_map(|a| a.label) {
            c[l.index()] += 1;
        }
        c
    }

    pub fn sources(&self) -> BTreeSet<&str> {
        self.articles.iter().map(|a| a.source.as_str()).collect()
    }

    pub fn subset(&self, name: impl Into<String>, idx: &[usize]) -> Corpus {
        Corpus {
            name: name.into(),
            articles: idx.iter().map(|&i| self.articles[i].clone()).collect(),
        }
    }
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    let mut labeled = None;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let article = parse_record(&line).map_err(|m| parse_err(lineno, m))?;
        article.validate().map_err(|m| parse_err(lineno, m))?;
        if !seen.insert(article.id.clone()) {
            return Err(parse_err(lineno, format!("duplicate id {:?}", article.id)));
        }
        let has = article.label.is_some();
        if *labeled.get_or_insert(has) != has {
            return Err(parse_err(lineno, "corpus mixes labeled and unlabeled articles".into()));
        }
        articles.push(article);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Corpus { name, articles })
}

#[derive(Deserialize)]
struct RawRecord {
    id: serde_json::Value,
    title: String,
    content: String,
    #[serde(default)]
    label: Option<String>,
    source: String,
}

fn parse_record(line: &str) -> std::result::Result<NewsArticle, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let id = match raw.id {
        serde_json::Value::String(s) => s,
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(format!("invalid id {other}")),
    };
    let label = match raw.label.as_deref() {
        None => None,
        Some(s) => Some(s.parse::<Label>().map_err(|_| format!("unknown label {s:?}"))?),
    };
    Ok(NewsArticle {
        id,
        title: raw.title,
        content: raw.content,
        label,
        source: raw.source,
    })
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for a in &corpus.articles {
        let line = serde_json::to_string(a).expect("article serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSide {
    Train,
    Test,
}

/// Source-to-side assignment read from a manifest of `source<TAB>train|test`
/// lines. Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitManifest {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl SplitManifest {
    pub fn new<I, J, S, T>(train: I, test: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        SplitManifest {
            train: train.into_iter().map(Into::into).collect(),
            test: test.into_iter().map(Into::into).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = SplitManifest::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (source, side) = line
                .rsplit_once('\t')
                .ok_or_else(|| err("expected `source<TAB>train|test`".into()))?;
            let source = source.trim().to_string();
            match side.trim() {
                "train" => m.train.insert(source),
                "test" => m.test.insert(source),
                other => return Err(err(format!("unknown split side {other:?}"))),
            };
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for s in &self.train {
            out.push_str(&format!("{s}\ttrain\n"));
        }
        for s in &self.test {
            out.push_str(&format!("{s}\ttest\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Partitions a corpus by publication source so that no source appears on
/// both sides.
pub fn split_by_source(corpus: &Corpus, manifest: &SplitManifest) -> Result<(Corpus, Corpus)> {
    let overlap: Vec<&String> = manifest.train.intersection(&manifest.test).collect();
    if !overlap.is_empty() {
        return Err(Error::invalid(format!(
            "sources assigned to both train and test: {overlap:?}"
        )));
    }
    let unassigned: BTreeSet<&str> = corpus
        .articles
        .iter()
        .map(|a| a.source.as_str())
        .filter(|s| !manifest.train.contains(*s) && !manifest.test.contains(*s))
        .collect();
    if !unassigned.is_empty() {
        return Err(Error::invalid(format!(
            "sources in neither train nor test: {unassigned:?}"
        )));
    }
    let (train, test): (Vec<_>, Vec<_>) = corpus
        .articles
        .iter()
        .cloned()
        .partition(|a| manifest.train.contains(&a.source));
    Ok((
        Corpus {
            name: format!("{}-train", corpus.name),
            articles: train,
        },
        Corpus {
            name: format!("{}-test", corpus.name),
            articles: test,
        },
    ))
}

/// Carves a validation set out of a training corpus by taking
/// `round(fraction * n_s)` shuffled articles from every source `s`.
pub fn carve_validation(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("validation fraction {fraction} outside [0, 1)")));
    }
    let mut by_source: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, a) in corpus.articles.iter().enumerate() {
        by_source.entry(a.source.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut val = BTreeSet::new();
    for idx in by_source.values_mut() {
        idx.shuffle(&mut rng);
        let k = (fraction * idx.len() as f64).round() as usize;
        val.extend(idx.iter().take(k).copied());
    }
    let (v, t): (Vec<usize>, Vec<usize>) = (0..corpus.len()).partition(|i| val.contains(i));
    Ok((
        corpus.subset(format!("{}-fit", corpus.name), &t),
        corpus.subset(format!("{}-validation", corpus.name), &v),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    pub clickbait: usize,
    pub non_clickbait: usize,
    pub per_source_clickbait_ratio: BTreeMap<String, f64>,
    /// Word tokens over titles and contents.
    pub token_total: usize,
    pub avg_title_tokens: f64,
    pub avg_content_tokens: f64,
    /// Sentences per article content.
    pub avg_sentences: f64,
    pub sentence_range: (usize, usize),
}

/// Corpus statistics with the shared tokenizer. Token counts are word tokens
/// (punctuation excluded); sentence counts are over article contents.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    corpus.require_labeled()?;
    let mut per_source: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut title_tokens, mut content_tokens, mut sentences) = (0usize, 0usize, 0usize);
    let mut range = (usize::MAX, 0usize);
    for a in &corpus.articles {
        let t = tokenize(&a.title);
        let c = tokenize(&a.content);
        title_tokens += t.word_count();
        content_tokens += c.word_count();
        let s = c.sentence_count();
        sentences += s;
        range = (range.0.min(s), range.1.max(s));
        let e = per_source.entry(a.source.clone()).or_default();
        e.1 += 1;
        if a.label == Some(Label::Clickbait) {
            e.0 += 1;
        }
    }
    let n = corpus.len() as f64;
    let [clickbait, non_clickbait] = corpus.class_counts();
    Ok(CorpusStats {
        total: corpus.len(),
        clickbait,
        non_clickbait,
        per_source_clickbait_ratio: per_source
            .into_iter()
            .map(|(s, (cb, tot))| (s, cb as f64 / tot as f64))
            .collect(),
        token_total: title_tokens + content_tokens,
        avg_title_tokens: title_tokens as f64 / n,
        avg_content_tokens: content_tokens as f64 / n,
        avg_sentences: sentences as f64 / n,
        sentence_range: range,
    })
}

/// Label holding a strict majority of an odd number of votes.
pub fn majority_label(votes: &[Label]) -> Result<Label> {
    if votes.is_empty() || votes.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "majority vote needs an odd number of votes, got {}",
            votes.len()
        )));
    }
    let cb = votes.iter().filter(|&&v| v == Label::Clickbait).count();
    Ok(if 2 * cb > votes.len() {
        Label::Clickbait
    } else {
        Label::NonClickbait
    })
}

/// Cohen's kappa with marginal-product chance agreement. Defines 0/0 as 1
/// (both raters constant and identical).
pub fn cohens_kappa(a: &[Label], b: &[Label]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "kappa inputs differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("kappa needs at least one item"));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;
    let p_e: f64 = Label::ALL
        .iter()
        .map(|l| {
            let pa = a.iter().filter(|x| *x == l).count() as f64 / n;
            let pb = b.iter().filter(|x| *x == l).count() as f64 / n;
            pa * pb
        })
        .sum();
    if p_e == 1.0 {
        // Both raters used one identical class throughout.
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Labels from `k` annotators over the same `n` items.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub item_ids: Vec<String>,
    pub annotator_labels: Vec<Vec<Label>>,
}

impl AnnotationSet {
    pub fn new(item_ids: Vec<String>, annotator_labels: Vec<Vec<Label>>) -> Result<Self> {
        if item_ids.is_empty() {
            return Err(Error::invalid("annotation set needs at least one item"));
        }
        if annotator_labels.is_empty() {
            return Err(Error::invalid("annotation set needs at least one annotator"));
        }
        if let Some(bad) = annotator_labels.iter().find(|l| l.len() != item_ids.len()) {
            return Err(Error::invalid(format!(
                "annotator list of length {} does not match {} items",
                bad.len(),
                item_ids.len()
            )));
        }
        Ok(AnnotationSet {
            item_ids,
            annotator_labels,
        })
    }

    /// Kappa for every annotator pair `(i, j)` with `i < j`.
    pub fn pairwise_kappas(&self) -> Result<Vec<((usize, usize), f64)>> {
        let k = self.annotator_labels.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let kappa = cohens_kappa(&self.annotator_labels[i], &self.annotator_labels[j])?;
                out.push(((i, j), kappa));
            }
        }
        Ok(out)
    }

    /// Mean of the pairwise kappas; needs at least two annotators.
    pub fn mean_kappa(&self) -> Result<f64> {
        let pairs = self.pairwise_kappas()?;
        if pairs.is_empty() {
            return Err(Error::invalid("agreement needs at least two annotators"));
        }
        Ok(pairs.iter().map(|(_, k)| k).sum::<f64>() / pairs.len() as f64)
    }

    /// Per-item majority labels; needs an odd number of annotators.
    pub fn aggregate(&self) -> Result<Vec<Label>> {
        (0..self.item_ids.len())
            .map(|i| {
                let votes: Vec<Label> = self.annotator_labels.iter().map(|l| l[i]).collect();
                majority_label(&votes)
            })
            .collect()
    }
}
