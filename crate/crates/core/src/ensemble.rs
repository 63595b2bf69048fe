//! Weighted soft voting over base-model clickbait scores.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Base model identifiers, aligned with `weights`.
    pub models: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

/// Scales non-negative raw weights to sum to one.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::invalid("no ensemble weights"));
    }
    if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::invalid(format!(
            "weights must be finite and non-negative: {raw:?}"
        )));
    }
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("weights sum to zero"));
    }
    Ok(raw.iter().map(|w| w / total).collect())
}

/// Validation accuracy of each model, normalized to sum to one.
/// `predictions[m][i]` is model `m`'s label for sample `i`.
pub fn fit_weights(predictions: &[Vec<Label>], golds: &[Label]) -> Result<Vec<f64>> {
    if golds.is_empty() {
        return Err(Error::invalid("empty validation set"));
    }
    let accs = predictions
        .iter()
        .enumerate()
        .map(|(m, p)| {
            if p.len() != golds.len() {
                return Err(Error::invalid(format!(
                    "model {m}: {} predictions for {} validation samples",
                    p.len(),
                    golds.len()
                )));
            }
            let correct = p.iter().zip(golds).filter(|(a, b)| a == b).count();
            Ok(correct as f64 / golds.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_weights(&accs)
}

impl EnsembleConfig {
    pub fn new(models: Vec<String>, weights: Vec<f64>, threshold: f64) -> Result<Self> {
        let cfg = EnsembleConfig {
            models,
            weights,
            threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "{} models but {} weights",
                self.models.len(),
                self.weights.len()
            )));
        }
        let norm = normalize_weights(&self.weights)?;
        if norm.iter().zip(&self.weights).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::invalid("ensemble weights must sum to 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: EnsembleConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn predict(&self, scores: &[f64]) -> Result<(Label, f64)> {
        ensemble_predict(scores, &self.weights, self.threshold)
    }
}

/// Combined score `sum(w_i * s_i)`; clickbait when it reaches `threshold`.
pub fn ensemble_predict(scores: &[f64], weights: &[f64], threshold: f64) -> Result<(Label, f64)> {
    if scores.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} weights",
            scores.len(),
            weights.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::invalid(format!("score {s} outside [0, 1]")));
    }
    let combined: f64 = scores.iter().zip(weights).map(|(s, w)| s * w).sum();
    let label = if combined >= threshold {
        Label::Clickbait
    } else {
        Label::NonClickbait
    };
    Ok((label, combined))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Clickbait as CB, NonClickbait as NCB};

    const REFERENCE: [f64; 5] = [0.19, 0.19, 0.22, 0.19, 0.21];

    #[test]
    fn predict_examples() {
        assert_eq!(ensemble_predict(&[0.9; 5], &REFERENCE, 0.5).unwrap().0, CB);
        let (l, s) = ensemble_predict(&[1.0, 1.0, 0.0, 0.0, 0.0], &REFERENCE, 0.5).unwrap();
        assert!((s - 0.38).abs() < 1e-12);
        assert_eq!(l, NCB);
        assert_eq!(ensemble_predict(&[0.5, 0.5], &[0.5, 0.5], 0.5).unwrap(), (CB, 0.5));
        assert!(ensemble_predict(&[1.2, 0.0], &[0.5, 0.5], 0.5).is_err());
        assert!(ensemble_predict(&[0.2], &[0.5, 0.5], 0.5).is_err());
    }

    #[test]
    fn fit_examples() {
        let golds = vec![CB, NCB, CB];
        let right = golds.clone();
        let wrong: Vec<Label> = golds.iter().map(|l| l.other()).collect();
        assert_eq!(fit_weights(&[right.clone(), wrong], &golds).unwrap(), vec![1.0, 0.0]);
        assert_eq!(fit_weights(&[right.clone(), right], &golds).unwrap(), vec![0.5, 0.5]);
        assert!(fit_weights(&[vec![]], &[]).is_err());
    }

    #[test]
    fn reference_vector_from_accuracies() {
        let w = normalize_weights(&REFERENCE).unwrap();
        for (a, b) in w.iter().zip(REFERENCE) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = EnsembleConfig::new(
            ["rf", "svm", "bilstm", "encoder-head", "contrastive"]
                .map(String::from)
                .to_vec(),
            REFERENCE.to_vec(),
            0.5,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ensemble.toml");
        cfg.save(&p).unwrap();
        assert_eq!(EnsembleConfig::load(&p).unwrap(), cfg);
        std::fs::write(&p, "models = [\"a\"]\nweights = [0.3]\n").unwrap();
        assert!(EnsembleConfig::load(&p).is_err());
    }

    proptest! {
        #[test]
        fn convex_and_scale_invariant(
            rows in prop::collection::vec((0.0f64..=1.0, 0.01f64..5.0), 1..8),
            factor in 0.01f64..100.0,
        ) {
            let scores: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let raw: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let w = normalize_weights(&raw).unwrap();
            let scaled: Vec<f64> = raw.iter().map(|v| v * factor).collect();
            let w2 = normalize_weights(&scaled).unwrap();
            let (l, c) = ensemble_predict(&scores, &w, 0.5).unwrap();
            let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c >= lo - 1e-12 && c <= hi + 1e-12);
            let (l2, c2) = ensemble_predict(&scores, &w2, 0.5).unwrap();
            if (c - 0.5).abs() > 1e-12 {
                prop_assert_eq!(l, l2);
            }
            prop_assert!((c - c2).abs() < 1e-12);
        }

        #[test]
        fn unanimous_extremes_preserved(n in 1usize..8, cb in any::<bool>()) {
            let s = if cb { 1.0 } else { 0.0 };
            let w = normalize_weights(&vec![1.0; n]).unwrap();
            let (l, _) = ensemble_predict(&vec![s; n], &w, 0.5).unwrap();
            prop_assert_eq!(l, if cb { CB } else { NCB });
        }
    }
}
