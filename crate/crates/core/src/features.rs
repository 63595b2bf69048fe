//! Handcrafted morphological, punctuation and readability features.
//!
//! The feature vector has [`FEATURE_DIM`] entries in the order given by
//! [`feature_names`]:
//!
//! | slots  | source  | content                                    |
//! |--------|---------|--------------------------------------------|
//! | 0..12  | title   | part-of-speech histogram over [`PosTag`]   |
//! | 12     | title   | question word count                        |
//! | 13..19 | title   | counts of `? ! . : " '` in the raw title   |
//! | 19, 20 | title   | LIX, RIX                                   |
//! | 21..24 | content | LIX, RIX, Coleman-Liau                     |
//! | 24, 25 | both    | common noun count, proper noun count       |

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::NewsArticle;
use crate::error::{Error, Result};
use crate::textproc::{is_word, normalize, tokenize, TokenizedDoc};

/// Words with more than this many letters count as long.
pub const LONG_WORD_LETTERS: usize = 6;

pub const PUNCTUATION_CHARS: [char; 6] = ['?', '!', '.', ':', '"', '\''];

pub const FEATURE_DIM: usize = PosTag::COUNT + 1 + PUNCTUATION_CHARS.len() + 2 + 3 + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    PropNoun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Conj,
    Num,
    Punct,
    Other,
}

impl PosTag {
    pub const COUNT: usize = 12;
    pub const ALL: [PosTag; 12] = [
        PosTag::Noun,
        PosTag::PropNoun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adv,
        PosTag::Pron,
        PosTag::Det,
        PosTag::Adp,
        PosTag::Conj,
        PosTag::Num,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::PropNoun => "PROPN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Conj => "CONJ",
            PosTag::Num => "NUM",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }
}

/// Part-of-speech tagging capability: one tag per token.
pub trait Tagger {
    fn tag(&self, doc: &TokenizedDoc) -> Result<Vec<PosTag>>;
}

/// Deterministic rule-based tagger for Romanian text.
///
/// Rules, first match wins:
/// 1. punctuation tokens are `PUNCT`; all-digit tokens `NUM`; other tokens
///    with digits `OTHER`;
/// 2. closed-class lexicons (pronouns, determiners, adpositions,
///    conjunctions, adverbs, auxiliary and frequent verbs) on the lowercase
///    form;
/// 3. capitalized words: all-caps words of at most four letters are
///    acronyms (`PROPN`); any other capitalized word that is not the first
///    word of its sentence is `PROPN`; a sentence-initial capitalized word is
///    `PROPN` only when its lowercase form never occurs in the document and
///    it carries no common-noun suffix;
/// 4. a lowercase word ending in `t` or `s` right after an auxiliary
///    (`a`, `am`, `ai`, `au`, `ați`) is a participle (`VERB`);
/// 5. suffix rules: `-mente` adverbs, then common-noun suffixes (including
///    definite-article endings), verb suffixes and adjective suffixes;
/// 6. everything else is a common noun.
///
/// Tokens should come from raw (non-lowercased) text so capitalization is
/// visible.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicTagger;

const PRONOUNS: &[&str] = &[
    "eu", "tu", "el", "ea", "noi", "voi", "ei", "ele", "mă", "te", "se", "își", "îi", "îl", "le", "ne", "vă", "mi",
    "ți", "lui", "lor", "mine", "tine", "sine", "acesta", "aceasta", "aceștia", "acestea", "asta", "ăsta", "aia",
    "ăla", "cine", "ce", "care", "nimeni", "nimic", "cineva", "ceva", "totul", "tot",
];
const DETERMINERS: &[&str] = &[
    "un", "o", "unei", "unui", "niște", "acest", "această", "acești", "aceste", "acel", "acea", "acei", "acele",
    "fiecare", "orice", "toți", "toate", "cel", "cea", "cei", "cele", "al",
];
const ADPOSITIONS: &[&str] = &[
    "în", "pe", "la", "de", "din", "cu", "pentru", "despre", "spre", "prin", "după", "fără", "până", "între", "sub",
    "peste", "lângă", "către", "dintre", "printre", "contra", "asupra",
];
const CONJUNCTIONS: &[&str] = &[
    "și", "sau", "dar", "iar", "ci", "că", "să", "dacă", "deși", "ori", "nici", "ca", "încât", "fiindcă", "deoarece",
];
const ADVERBS: &[&str] = &[
    "nu", "foarte", "mai", "acum", "azi", "astăzi", "ieri", "mâine", "aici", "acolo", "unde", "când", "cum", "doar",
    "chiar", "deja", "încă", "totuși", "bine", "rău", "mult", "puțin", "oare", "atunci", "aproape", "des", "iată",
    "abia",
];
const VERBS: &[&str] = &[
    "este", "e", "sunt", "ești", "suntem", "sunteți", "era", "erau", "a", "au", "am", "ai", "ați", "are", "avea",
    "aveau", "fost", "fi", "fie", "va", "vor", "vei", "poate", "pot", "trebuie", "face", "fac", "vine", "vin", "vrea",
    "vrei", "zice", "spune", "spun",
];
const NOUN_SUFFIXES: &[&str] = &[
    "ului", "ilor", "ul", "ția", "ție", "ții", "ța", "tate", "ism", "ist", "iune", "ment", "ură", "ii", "ile", "ele",
];
const AUXILIARIES: &[&str] = &["a", "am", "ai", "au", "ați"];
const VERB_SUFFIXES: &[&str] = &["ează", "ește", "esc", "ăm", "ați", "eau", "ind", "ând", "it"];
const ADJ_SUFFIXES: &[&str] = &[
    "oasă", "oase", "os", "ică", "ice", "ic", "abilă", "abil", "ibilă", "ibil", "ivă", "ive", "iv",
];

fn fold_cedilla(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            'ş' => 'ș',
            'ţ' => 'ț',
            'Ş' => 'Ș',
            'Ţ' => 'Ț',
            c => c,
        })
        .collect()
}

impl HeuristicTagger {
    fn closed_class(lower: &str) -> Option<PosTag> {
        let lists: [(&[&str], PosTag); 6] = [
            (PRONOUNS, PosTag::Pron),
            (DETERMINERS, PosTag::Det),
            (ADPOSITIONS, PosTag::Adp),
            (CONJUNCTIONS, PosTag::Conj),
            (ADVERBS, PosTag::Adv),
            (VERBS, PosTag::Verb),
        ];
        lists
            .iter()
            .find(|(words, _)| words.contains(&lower))
            .map(|(_, tag)| *tag)
    }

    fn ends_with_any(lower: &str, suffixes: &[&str]) -> bool {
        // Suffixes only apply when a stem of at least two letters remains.
        suffixes
            .iter()
            .any(|s| lower.ends_with(s) && lower.chars().count() >= s.chars().count() + 2)
    }

    fn by_suffix(lower: &str) -> PosTag {
        let ends = |suffixes: &[&str]| Self::ends_with_any(lower, suffixes);
        if ends(&["mente"]) {
            PosTag::Adv
        } else if ends(NOUN_SUFFIXES) {
            PosTag::Noun
        } else if ends(VERB_SUFFIXES) {
            PosTag::Verb
        } else if ends(ADJ_SUFFIXES) {
            PosTag::Adj
        } else {
            PosTag::Noun
        }
    }
}

impl Tagger for HeuristicTagger {
    fn tag(&self, doc: &TokenizedDoc) -> Result<Vec<PosTag>> {
        let lowercase_forms: HashSet<String> = doc
            .tokens
            .iter()
            .filter(|t| t.chars().all(|c| !c.is_uppercase()))
            .map(|t| fold_cedilla(t))
            .collect();
        let mut sentence_initial = vec![false; doc.len()];
        let mut start = 0;
        for &end in &doc.sentence_boundaries {
            if let Some(i) = (start..end).find(|&i| is_word(&doc.tokens[i])) {
                sentence_initial[i] = true;
            }
            start = end;
        }

        let tags = doc
            .tokens
            .iter()
            .enumerate()
            .map(|(i, tok)| {
                if !is_word(tok) {
                    return PosTag::Punct;
                }
                if tok.chars().all(|c| c.is_ascii_digit()) {
                    return PosTag::Num;
                }
                if tok.chars().any(|c| c.is_numeric()) {
                    return PosTag::Other;
                }
                let lower = fold_cedilla(&tok.to_lowercase());
                if let Some(tag) = Self::closed_class(&lower) {
                    return tag;
                }
                let letters = tok.chars().count();
                let capitalized = tok.chars().next().is_some_and(char::is_uppercase);
                let all_caps = tok.chars().all(char::is_uppercase);
                if all_caps && letters >= 2 {
                    if letters <= 4 {
                        return PosTag::PropNoun;
                    }
                } else if capitalized
                    && (!sentence_initial[i]
                        || !(lowercase_forms.contains(&lower) || Self::ends_with_any(&lower, NOUN_SUFFIXES)))
                {
                    return PosTag::PropNoun;
                }
                let after_aux =
                    i > 0 && AUXILIARIES.contains(&fold_cedilla(&doc.tokens[i - 1].to_lowercase()).as_str());
                if after_aux && !capitalized && (lower.ends_with('t') || lower.ends_with('s')) {
                    return PosTag::Verb;
                }
                Self::by_suffix(&lower)
            })
            .collect();
        Ok(tags)
    }
}

fn require_words_and_sentences(doc: &TokenizedDoc, what: &str) -> Result<(f64, f64)> {
    let w = doc.word_count();
    let s = doc.sentence_count();
    if w == 0 || s == 0 {
        return Err(Error::invalid(format!(
            "{what} needs at least one word and one sentence"
        )));
    }
    Ok((w as f64, s as f64))
}

fn letters(word: &str) -> usize {
    word.chars().filter(|c| c.is_alphabetic()).count()
}

fn long_words(doc: &TokenizedDoc) -> f64 {
    doc.words().filter(|w| letters(w) > LONG_WORD_LETTERS).count() as f64
}

/// LIX = words/sentences + 100 * long_words/words.
pub fn lix(doc: &TokenizedDoc) -> Result<f64> {
    let (w, s) = require_words_and_sentences(doc, "LIX")?;
    Ok(w / s + 100.0 * long_words(doc) / w)
}

/// RIX = long_words/sentences.
pub fn rix(doc: &TokenizedDoc) -> Result<f64> {
    let (_, s) = require_words_and_sentences(doc, "RIX")?;
    Ok(long_words(doc) / s)
}

/// Coleman-Liau index 0.0588 L - 0.296 S - 15.8 with L letters and S
/// sentences per 100 words.
pub fn cl_score(doc: &TokenizedDoc) -> Result<f64> {
    let (w, s) = require_words_and_sentences(doc, "Coleman-Liau")?;
    let l: usize = doc.words().map(letters).sum();
    let l100 = l as f64 / w * 100.0;
    let s100 = s / w * 100.0;
    Ok(0.0588 * l100 - 0.296 * s100 - 15.8)
}

const QUESTION_WORDS: &[&str] = &[
    "cine", "ce", "care", "când", "unde", "cum", "cât", "câte", "câți", "oare",
];

/// Counts Romanian interrogatives; "de ce" counts once.
pub fn question_word_count(doc: &TokenizedDoc) -> usize {
    let words: Vec<String> = doc.words().map(|w| fold_cedilla(&w.to_lowercase())).collect();
    let mut count = 0;
    let mut i = 0;
    while i < words.len() {
        if words[i] == "de" && words.get(i + 1).is_some_and(|w| w == "ce") {
            count += 1;
            i += 2;
            continue;
        }
        if QUESTION_WORDS.contains(&words[i].as_str()) {
            count += 1;
        }
        i += 1;
    }
    count
}

/// Counts of each of `? ! . : " '` in the raw title.
pub fn punctuation_counts(title: &str) -> [usize; 6] {
    let mut out = [0; 6];
    for ch in title.chars() {
        if let Some(k) = PUNCTUATION_CHARS.iter().position(|&p| p == ch) {
            out[k] += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosCounts {
    pub histogram: [usize; PosTag::COUNT],
    pub common_nouns: usize,
    pub proper_nouns: usize,
}

pub fn pos_counts(doc: &TokenizedDoc, tagger: &dyn Tagger) -> Result<PosCounts> {
    let tags = tagger.tag(doc)?;
    if tags.len() != doc.len() {
        return Err(Error::invalid(format!(
            "tagger returned {} tags for {} tokens",
            tags.len(),
            doc.len()
        )));
    }
    let mut histogram = [0; PosTag::COUNT];
    for t in tags {
        histogram[t.index()] += 1;
    }
    Ok(PosCounts {
        histogram,
        common_nouns: histogram[PosTag::Noun.index()],
        proper_nouns: histogram[PosTag::PropNoun.index()],
    })
}

pub type FeatureVector = Vec<f64>;

pub fn feature_names() -> Vec<String> {
    let mut names: Vec<String> = PosTag::ALL
        .iter()
        .map(|t| format!("title_pos_{}", t.name().to_lowercase()))
        .collect();
    names.push("title_question_words".into());
    for name in [
        "question",
        "exclamation",
        "period",
        "colon",
        "double_quote",
        "single_quote",
    ] {
        names.push(format!("title_punct_{name}"));
    }
    names.extend(
        [
            "title_lix",
            "title_rix",
            "body_lix",
            "body_rix",
            "body_clscore",
            "common_noun_count",
            "proper_noun_count",
        ]
        .map(String::from),
    );
    names
}

fn concat_docs(a: TokenizedDoc, b: TokenizedDoc) -> TokenizedDoc {
    let offset = a.len();
    let mut tokens = a.tokens;
    tokens.extend(b.tokens);
    let mut sentence_boundaries = a.sentence_boundaries;
    sentence_boundaries.extend(b.sentence_boundaries.iter().map(|s| s + offset));
    TokenizedDoc {
        tokens,
        sentence_boundaries,
    }
}

pub fn extract_features(article: &NewsArticle, tagger: &dyn Tagger) -> Result<FeatureVector> {
    let with_id = |e: Error| match e {
        Error::Invalid(m) => Error::Invalid(format!("article {}: {m}", article.id)),
        other => other,
    };
    let raw_title = tokenize(&article.title);
    let raw_content = tokenize(&article.content);
    let title = tokenize(&normalize(&article.title));
    let body = tokenize(&normalize(&article.content));

    let title_pos = pos_counts(&raw_title, tagger).map_err(with_id)?;
    let shared = pos_counts(&concat_docs(raw_title, raw_content), tagger).map_err(with_id)?;

    let mut v = Vec::with_capacity(FEATURE_DIM);
    v.extend(title_pos.histogram.iter().map(|&c| c as f64));
    v.push(question_word_count(&title) as f64);
    v.extend(punctuation_counts(&article.title).iter().map(|&c| c as f64));
    v.push(lix(&title).map_err(with_id)?);
    v.push(rix(&title).map_err(with_id)?);
    v.push(lix(&body).map_err(with_id)?);
    v.push(rix(&body).map_err(with_id)?);
    v.push(cl_score(&body).map_err(with_id)?);
    v.push(shared.common_nouns as f64);
    v.push(shared.proper_nouns as f64);
    debug_assert_eq!(v.len(), FEATURE_DIM);
    Ok(v)
}

pub fn extract_all(articles: &[NewsArticle], tagger: &(dyn Tagger + Sync)) -> Result<Vec<FeatureVector>> {
    use rayon::prelude::*;
    articles.par_iter().map(|a| extract_features(a, tagger)).collect()
}

/// Per-dimension z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation; zero-variance columns get
    /// std 1.
    pub fn fit(rows: &[FeatureVector]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid(format!(
                "standardizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("ragged feature matrix"));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<FeatureVector> {
        if row.len() != self.dim() {
            return Err(Error::invalid(format!(
                "feature vector has {} dims, standardizer expects {}",
                row.len(),
                self.dim()
            )));
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

/// Writes a tab-separated feature matrix with an `id`, the named feature
/// columns, and a trailing `label` column.
pub fn write_feature_matrix(path: &Path, articles: &[NewsArticle], rows: &[FeatureVector]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "id\t{}\tlabel", feature_names().join("\t")).map_err(io)?;
    for (a, r) in articles.iter().zip(rows) {
        let vals: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        let label = a.label.map_or("-", |l| l.as_str());
        writeln!(w, "{}\t{}\t{}", a.id, vals.join("\t"), label).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    const EXAMPLE: &str = "ana are mere. mihai cumpara portocale delicioase.";

    #[test]
    fn readability_worked_example() {
        let d = tokenize(EXAMPLE);
        assert!((lix(&d).unwrap() - (7.0 / 2.0 + 300.0 / 7.0)).abs() < 1e-12);
        assert!((lix(&d).unwrap() - 46.357).abs() < 1e-3);
        assert_eq!(rix(&d).unwrap(), 1.5);
        let expected = 0.0588 * (41.0 / 7.0 * 100.0) - 0.296 * (2.0 / 7.0 * 100.0) - 15.8;
        assert!((cl_score(&d).unwrap() - expected).abs() < 1e-12);
        assert!((cl_score(&d).unwrap() - 10.18).abs() < 5e-3);
    }

    #[test]
    fn readability_degenerate() {
        let one = tokenize("a");
        assert_eq!(lix(&one).unwrap(), 1.0);
        assert_eq!(rix(&one).unwrap(), 0.0);
        let hundred = tokenize(&vec!["a"; 100].join(" "));
        assert!((cl_score(&hundred).unwrap() - (-10.216)).abs() < 1e-9);
        let empty = tokenize("");
        assert!(lix(&empty).is_err());
        assert!(rix(&empty).is_err());
        assert!(cl_score(&empty).is_err());
        assert!(lix(&tokenize("?!")).is_err());
    }

    #[test]
    fn question_words() {
        assert_eq!(question_word_count(&tokenize("cum a slăbit")), 1);
        assert_eq!(question_word_count(&tokenize("ana are mere")), 0);
        assert_eq!(question_word_count(&tokenize("de ce oare")), 2);
        assert_eq!(question_word_count(&tokenize("câţi au venit? cine ştie")), 2);
    }

    #[test]
    fn punctuation() {
        assert_eq!(punctuation_counts("Șoc!!!"), [0, 3, 0, 0, 0, 0]);
        assert_eq!(punctuation_counts(""), [0; 6]);
        assert_eq!(punctuation_counts("a? b?"), [2, 0, 0, 0, 0, 0]);
        assert_eq!(punctuation_counts("\"x\": 'y'."), [0, 0, 1, 1, 2, 2]);
    }

    struct ConstTagger(PosTag);
    impl Tagger for ConstTagger {
        fn tag(&self, doc: &TokenizedDoc) -> Result<Vec<PosTag>> {
            Ok(vec![self.0; doc.len()])
        }
    }

    struct BrokenTagger;
    impl Tagger for BrokenTagger {
        fn tag(&self, _: &TokenizedDoc) -> Result<Vec<PosTag>> {
            Err(Error::invalid("tagger unavailable"))
        }
    }

    #[test]
    fn pos_counts_with_stub_taggers() {
        let d = tokenize("Ana are mere.");
        let c = pos_counts(&d, &ConstTagger(PosTag::Verb)).unwrap();
        assert_eq!(c.histogram[PosTag::Verb.index()], 4);
        assert_eq!(c.histogram.iter().sum::<usize>(), 4);
        assert!(pos_counts(&d, &BrokenTagger).is_err());
        let e = pos_counts(&tokenize(""), &HeuristicTagger).unwrap();
        assert_eq!(e.histogram, [0; PosTag::COUNT]);
    }

    #[test]
    fn heuristic_tagger_maria() {
        let d = tokenize("Maria are mere");
        let tags = HeuristicTagger.tag(&d).unwrap();
        assert_eq!(tags, [PosTag::PropNoun, PosTag::Verb, PosTag::Noun]);
        let c = pos_counts(&d, &HeuristicTagger).unwrap();
        assert_eq!((c.common_nouns, c.proper_nouns), (1, 1));
    }

    #[test]
    fn sentence_initial_word_with_lowercase_variant_is_common() {
        let d = tokenize("Mere bune. Maria are mere.");
        let tags = HeuristicTagger.tag(&d).unwrap();
        assert_eq!(tags[0], PosTag::Noun);
        assert_eq!(tags[3], PosTag::PropNoun);
    }

    fn article(title: &str, content: &str) -> NewsArticle {
        NewsArticle::new("x", title, content, Some(Label::Clickbait), "S")
    }

    #[test]
    fn extract_features_composition() {
        let a = article("Ana are mere", EXAMPLE);
        let v = extract_features(&a, &HeuristicTagger).unwrap();
        assert_eq!(v.len(), FEATURE_DIM);
        assert_eq!(feature_names().len(), FEATURE_DIM);
        assert_eq!(v[12], 0.0);
        assert_eq!(&v[13..19], &[0.0; 6]);
        // title "ana are mere": W=3, S=1, no long words
        assert_eq!(v[19], 3.0);
        assert_eq!(v[20], 0.0);
        let body = tokenize(EXAMPLE);
        assert_eq!(v[21], lix(&body).unwrap());
        assert_eq!(v[22], 1.5);
        assert_eq!(v[23], cl_score(&body).unwrap());
        assert_eq!(v, extract_features(&a, &HeuristicTagger).unwrap());
    }

    #[test]
    fn repeated_body_rix_scales_with_long_words() {
        // "portocale delicioase." has 2 long words per sentence.
        let body = ["portocale delicioase."; 10].join(" ");
        let v = extract_features(&article("Ce?", &body), &HeuristicTagger).unwrap();
        assert_eq!(v[22], 20.0 / 10.0);
        assert_eq!(v[21], 20.0 / 10.0 + 100.0 * 20.0 / 20.0);
        assert_eq!(v[12], 1.0);
        assert_eq!(v[13], 1.0);
    }

    #[test]
    fn title_without_words_errors() {
        assert!(extract_features(&article("?!", "text."), &HeuristicTagger).is_err());
    }

    #[test]
    fn standardizer_examples() {
        let s = Standardizer::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.mean, [2.0, 5.0]);
        assert_eq!(s.std, [1.0, 1.0]);
        assert_eq!(s.apply(&[1.0, 5.0]).unwrap(), [-1.0, 0.0]);
        assert_eq!(s.apply(&[3.0, 5.0]).unwrap(), [1.0, 0.0]);
        assert!(Standardizer::fit(&[vec![1.0]]).is_err());
        assert!(s.apply(&[1.0]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn standardized_columns_have_zero_mean_unit_variance(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 2..30)
        ) {
            let s = Standardizer::fit(&rows).unwrap();
            let z: Vec<_> = rows.iter().map(|r| s.apply(r).unwrap()).collect();
            let n = z.len() as f64;
            for j in 0..3 {
                let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
                proptest::prop_assert!(mean.abs() < 1e-9);
                if s.std[j] != 1.0 || rows.iter().any(|r| r[j] != rows[0][j]) {
                    let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                    proptest::prop_assert!((var - 1.0).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn features_are_finite_and_counts_nonnegative(title in "[A-Za-zăîșț]{1,8}( [a-zăîșț?!]{1,8}){0,6}", body in "[a-zA-Z]{1,9}( [a-z.]{1,9}){0,30}") {
            let v = extract_features(&article(&title, &body), &HeuristicTagger).unwrap();
            proptest::prop_assert!(v.iter().all(|x| x.is_finite()));
            proptest::prop_assert!(v[..19].iter().all(|&x| x >= 0.0 && x.fract() == 0.0));
            proptest::prop_assert!(v[24] >= 0.0 && v[25] >= 0.0);
        }
    }
}
