//! Normalization, tokenization, sentence splitting and vocabulary encoding.
//!
//! One tokenizer is shared by corpus statistics, handcrafted features and the
//! neural encoders so that every component sees the same token stream.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Punctuation kept by [`normalize`].
const KEPT_PUNCTUATION: &[char] = &['.', ',', '!', '?', ':', ';', '"', '\'', '-'];

/// Tokens that close a sentence.
const SENTENCE_TERMINATORS: &[&str] = &[".", "!", "?"];

/// Lowercases, strips characters outside letters, digits, whitespace and
/// `. , ! ? : ; " ' -`, and collapses whitespace runs to a single space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            pending_space = true;
            continue;
        }
        if !(ch.is_alphanumeric() || KEPT_PUNCTUATION.contains(&ch)) {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.extend(ch.to_lowercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
    /// Exclusive end offsets of each sentence; the last equals `tokens.len()`.
    pub sentence_boundaries: Vec<usize>,
}

impl TokenizedDoc {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.sentence_boundaries.len()
    }

    /// Tokens made of letters and digits, i.e. everything but punctuation.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str).filter(|t| is_word(t))
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }
}

/// A token is a word when it starts with a letter or digit.
pub fn is_word(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_alphanumeric)
}

/// Splits text into maximal alphanumeric runs and single-character
/// punctuation tokens.
///
/// A sentence ends after a run of `.`, `!` or `?` tokens, and at the end of
/// the text when trailing tokens are left open.
pub fn tokenize(text: &str) -> TokenizedDoc {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.push(ch);
            continue;
        }
        if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
        if !ch.is_whitespace() {
            tokens.push(ch.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }

    let mut sentence_boundaries = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        let closes = SENTENCE_TERMINATORS.contains(&tok.as_str());
        let next_closes = tokens
            .get(i + 1)
            .is_some_and(|n| SENTENCE_TERMINATORS.contains(&n.as_str()));
        if closes && !next_closes {
            sentence_boundaries.push(i + 1);
        }
    }
    if !tokens.is_empty() && sentence_boundaries.last() != Some(&tokens.len()) {
        sentence_boundaries.push(tokens.len());
    }
    TokenizedDoc {
        tokens,
        sentence_boundaries,
    }
}

pub const PAD_ID: usize = 0;
pub const OOV_ID: usize = 1;
/// Separator between title and content in single-sequence encoders.
pub const SEPARATOR_TOKEN: &str = "[SEP]";

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    /// Tokens in id order, starting at id 2.
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    max_size: usize,
}

impl Vocabulary {
    /// Keeps the `max_size` most frequent word tokens, ties broken
    /// lexicographically. Punctuation never enters the vocabulary.
    pub fn build(docs: &[TokenizedDoc], max_size: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("cannot build a vocabulary from zero documents"));
        }
        if max_size == 0 {
            return Err(Error::invalid("vocabulary max_size must be at least 1"));
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for w in doc.words() {
                *freq.entry(w).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);
        Ok(Self::from_tokens(
            ranked.into_iter().map(|(t, _)| t.to_string()).collect(),
            max_size,
        ))
    }

    fn from_tokens(tokens: Vec<String>, max_size: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i + 2)).collect();
        Vocabulary {
            tokens,
            index,
            max_size,
        }
    }

    /// Appends the separator token if missing.
    pub fn with_separator(mut self) -> Self {
        if !self.index.contains_key(SEPARATOR_TOKEN) {
            self.index.insert(SEPARATOR_TOKEN.to_string(), self.tokens.len() + 2);
            self.tokens.push(SEPARATOR_TOKEN.to_string());
        }
        self
    }

    pub fn separator_id(&self) -> Option<usize> {
        self.index.get(SEPARATOR_TOKEN).copied()
    }

    /// Total number of ids, including pad and oov.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(OOV_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        id.checked_sub(2).and_then(|i| self.tokens.get(i)).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Writes one token per line; line `k` (0-based) holds id `k + 2`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for t in &self.tokens {
            writeln!(f, "{t}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut tokens = Vec::new();
        for (lineno, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() || line.chars().any(char::is_whitespace) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("invalid vocabulary token {line:?}"),
                });
            }
            tokens.push(line);
        }
        let n = tokens.len();
        let vocab = Self::from_tokens(tokens, n.max(1));
        if vocab.index.len() != n {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: "duplicate token in vocabulary".into(),
            });
        }
        Ok(vocab)
    }
}

/// Fixed-length id sequence with its padding mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub ids: Vec<usize>,
    pub mask: Vec<u8>,
}

impl Encoded {
    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1).count()
    }
}

/// Maps tokens to ids, keeping the head of long sequences and right padding
/// short ones. Tokens outside the vocabulary (punctuation included) map to
/// [`OOV_ID`].
pub fn encode(doc: &TokenizedDoc, vocab: &Vocabulary, max_len: usize) -> Encoded {
    encode_ids(doc.tokens.iter().map(|w| vocab.id(w)), max_len)
}

/// Encodes `title [SEP] content` as one sequence.
pub fn encode_pair(
    title: &TokenizedDoc,
    content: &TokenizedDoc,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Encoded> {
    let sep = vocab
        .separator_id()
        .ok_or_else(|| Error::invalid("vocabulary has no separator token"))?;
    let ids = title
        .tokens
        .iter()
        .map(|w| vocab.id(w))
        .chain(std::iter::once(sep))
        .chain(content.tokens.iter().map(|w| vocab.id(w)));
    Ok(encode_ids(ids, max_len))
}

fn encode_ids(ids: impl Iterator<Item = usize>, max_len: usize) -> Encoded {
    let max_len = max_len.max(1);
    let mut out: Vec<usize> = ids.take(max_len).collect();
    let real = out.len();
    out.resize(max_len, PAD_ID);
    let mut mask = vec![1u8; real];
    mask.resize(max_len, 0);
    Encoded { ids: out, mask }
}
