//! Synthetic topic corpora for smoke tests and separation checks.
//!
//! Every topic owns a disjoint set of pseudo-words. Non-clickbait articles
//! draw title and content from the same topic; clickbait articles take the
//! title from a different topic and dress it up with exclamations and
//! question openers.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, NewsArticle};
use crate::error::{Error, Result};
use crate::tensor::seeded_rng;

pub const SYNTH_SOURCES: [&str; 6] = ["alfa", "beta", "gama", "delta", "epsilon", "zeta"];

const SYLLABLES: [&str; 20] = [
    "ba", "co", "di", "fe", "gu", "la", "mo", "ni", "pa", "re", "si", "tu", "va", "zo", "ri", "ne", "ta", "lu", "me",
    "so",
];
const FILLER: [&str; 8] = ["si", "de", "la", "cu", "pe", "din", "in", "un"];
const OPENERS: [&str; 4] = ["Ce", "Cum", "Cine", "Unde"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub articles: usize,
    pub topics: usize,
    pub words_per_topic: usize,
    pub clickbait_ratio: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            articles: 600,
            topics: 8,
            words_per_topic: 30,
            clickbait_ratio: 0.45,
            seed: 0,
        }
    }
}

fn topic_vocabularies(config: &SynthConfig, rng: &mut crate::tensor::RunRng) -> Vec<Vec<String>> {
    let mut seen: HashSet<String> = FILLER.iter().map(|s| s.to_string()).collect();
    (0..config.topics)
        .map(|_| {
            let mut words = Vec::with_capacity(config.words_per_topic);
            while words.len() < config.words_per_topic {
                let n = rng.random_range(2..=4);
                let w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
                if seen.insert(w.clone()) {
                    words.push(w);
                }
            }
            words
        })
        .collect()
}

fn phrase(words: &[String], len: usize, rng: &mut crate::tensor::RunRng) -> Vec<String> {
    (0..len)
        .map(|_| {
            if rng.random_bool(0.15) {
                FILLER.choose(rng).unwrap().to_string()
            } else {
                words.choose(rng).unwrap().clone()
            }
        })
        .collect()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

/// Generates a labeled corpus, cycling articles over [`SYNTH_SOURCES`].
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    if config.topics < 2 || config.words_per_topic == 0 || config.articles == 0 {
        return Err(Error::invalid("synthetic corpus needs two topics, words and articles"));
    }
    if !(0.0..=1.0).contains(&config.clickbait_ratio) {
        return Err(Error::invalid(format!(
            "clickbait ratio {} outside [0, 1]",
            config.clickbait_ratio
        )));
    }
    let mut rng = seeded_rng(config.seed);
    let vocab = topic_vocabularies(config, &mut rng);
    let mut articles = Vec::with_capacity(config.articles);
    for i in 0..config.articles {
        let clickbait = rng.random_bool(config.clickbait_ratio);
        let topic = rng.random_range(0..config.topics);
        let title_topic = if clickbait {
            (topic + rng.random_range(1..config.topics)) % config.topics
        } else {
            topic
        };
        let len = rng.random_range(6..=10);
        let mut title = phrase(&vocab[title_topic], len, &mut rng);
        if clickbait && rng.random_bool(0.5) {
            title.insert(0, OPENERS.choose(&mut rng).unwrap().to_string());
        }
        let mut title = capitalize(&title.join(" "));
        if clickbait {
            title.push_str(if rng.random_bool(0.5) { "!" } else { "?!" });
        }
        let sentences = rng.random_range(3..=6);
        let content: Vec<String> = (0..sentences)
            .map(|_| {
                let len = rng.random_range(8..=14);
                capitalize(&phrase(&vocab[topic], len, &mut rng).join(" ")) + "."
            })
            .collect();
        let label = if clickbait {
            Label::Clickbait
        } else {
            Label::NonClickbait
        };
        articles.push(NewsArticle::new(
            format!("syn-{i:05}"),
            title,
            content.join(" "),
            Some(label),
            SYNTH_SOURCES[i % SYNTH_SOURCES.len()],
        ));
    }
    Corpus::new(format!("synthetic-{}", config.seed), articles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let cfg = SynthConfig::default();
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        assert_ne!(a, generate(&SynthConfig { seed: 1, ..cfg.clone() }).unwrap());
        assert_eq!(a.len(), 600);
        let [cb, ncb] = a.class_counts();
        assert!(cb > 200 && ncb > 250, "{cb} {ncb}");
        assert_eq!(a.sources().len(), 6);
    }

    #[test]
    fn topics_are_disjoint_by_label() {
        let cfg = SynthConfig {
            articles: 100,
            ..Default::default()
        };
        let corpus = generate(&cfg).unwrap();
        let words = |s: &str| -> HashSet<String> {
            s.split(|c: char| !c.is_alphanumeric())
                .filter(|w| !w.is_empty())
                .map(|w| w.to_lowercase())
                .filter(|w| !FILLER.contains(&w.as_str()) && !OPENERS.iter().any(|o| o.to_lowercase() == *w))
                .collect()
        };
        for a in corpus.articles() {
            let shared = words(&a.title).intersection(&words(&a.content)).count();
            match a.label.unwrap() {
                Label::Clickbait => assert_eq!(shared, 0, "{}", a.id),
                Label::NonClickbait => assert!(shared > 0, "{}", a.id),
            }
        }
    }

    #[test]
    fn rejects_degenerate_configs() {
        assert!(generate(&SynthConfig {
            topics: 1,
            ..Default::default()
        })
        .is_err());
        assert!(generate(&SynthConfig {
            clickbait_ratio: 1.5,
            ..Default::default()
        })
        .is_err());
    }
}
