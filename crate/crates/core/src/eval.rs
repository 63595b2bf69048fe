//! Evaluation: confusion counts, per-class and macro scores, precision-recall
//! curves with average precision, McNemar's paired test, prediction files and
//! reports.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn check_aligned(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("{what}: {a} predictions vs {b} gold labels")));
    }
    if a == 0 {
        return Err(Error::invalid(format!("{what}: empty input")));
    }
    Ok(())
}

/// Confusion counts treating `target` as the positive class.
pub fn confusion(preds: &[Label], golds: &[Label], target: Label) -> Result<Confusion> {
    check_aligned(preds.len(), golds.len(), "confusion")?;
    let mut c = Confusion::default();
    for (&p, &g) in preds.iter().zip(golds) {
        match (p == target, g == target) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 for one class. Zero denominators give zero.
pub fn prf1(preds: &[Label], golds: &[Label], target: Label) -> Result<Prf1> {
    let c = confusion(preds, golds, target)?;
    Ok(Prf1 {
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
    })
}

/// Unweighted mean of the two per-class F1 scores.
pub fn macro_f1(preds: &[Label], golds: &[Label]) -> Result<f64> {
    let a = prf1(preds, golds, Label::Clickbait)?.f1;
    let b = prf1(preds, golds, Label::NonClickbait)?.f1;
    Ok((a + b) / 2.0)
}

pub fn accuracy(preds: &[Label], golds: &[Label]) -> Result<f64> {
    check_aligned(preds.len(), golds.len(), "accuracy")?;
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// One point per distinct score, in descending threshold order.
    pub points: Vec<PrPoint>,
    pub ap: f64,
}

/// Precision-recall curve over descending score thresholds, with tied
/// scores grouped into one threshold. AP is the non-interpolated sum of
/// precision times recall increment.
pub fn pr_curve(scores: &[f64], positives: &[bool]) -> Result<PrCurve> {
    if scores.len() != positives.len() {
        return Err(Error::invalid(format!(
            "pr_curve: {} scores vs {} labels",
            scores.len(),
            positives.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("pr_curve: non-finite score {s}")));
    }
    let npos = positives.iter().filter(|&&p| p).count();
    if npos == 0 {
        return Err(Error::invalid("pr_curve: no positive examples"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp, mut ap) = (0usize, 0usize, 0.0);
    let mut points = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let tp_prev = tp;
        while i < order.len() && scores[order[i]] == threshold {
            if positives[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        if tp > tp_prev {
            ap += precision * ((tp - tp_prev) as f64 / npos as f64);
        }
        points.push(PrPoint {
            threshold,
            recall: tp as f64 / npos as f64,
            precision,
        });
    }
    Ok(PrCurve { points, ap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// Samples the first model gets right and the second gets wrong.
    pub b: usize,
    /// Samples the second model gets right and the first gets wrong.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Continuity-corrected McNemar test from discordant counts.
pub fn mcnemar_from_counts(b: usize, c: usize) -> McNemar {
    if b + c == 0 {
        return McNemar {
            b,
            c,
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let diff = b.abs_diff(c) as f64 - 1.0;
    let statistic = diff * diff / (b + c) as f64;
    McNemar {
        b,
        c,
        statistic,
        p_value: chi_square_sf(statistic, 1),
    }
}

pub fn mcnemar(preds_a: &[Label], preds_b: &[Label], golds: &[Label]) -> Result<McNemar> {
    check_aligned(preds_a.len(), golds.len(), "mcnemar")?;
    check_aligned(preds_b.len(), golds.len(), "mcnemar")?;
    let (mut b, mut c) = (0, 0);
    for ((pa, pb), g) in preds_a.iter().zip(preds_b).zip(golds) {
        match (pa == g, pb == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}

/// Survival function of the chi-square distribution.
pub fn chi_square_sf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = COEF[1..]
        .iter()
        .enumerate()
        .fold(COEF[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 500;

/// Regularized upper incomplete gamma Q(a, x): series for x < a + 1,
/// Lentz continued fraction otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        1.0 - sum * log_prefix.exp()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        log_prefix.exp() * h
    }
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub gold: Option<Label>,
    pub pred: Label,
    pub clickbait_score: f64,
}

pub const PREDICTION_HEADER: &str = "id\tgold\tpred\tclickbait_score";

pub fn format_predictions(preds: &[Prediction]) -> String {
    let mut out = String::from(PREDICTION_HEADER);
    out.push('\n');
    for p in preds {
        let gold = p.gold.map_or("-", Label::as_str);
        let _ = writeln!(out, "{}\t{}\t{}\t{}", p.id, gold, p.pred, p.clickbait_score);
    }
    out
}

pub fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<()> {
    std::fs::write(path, format_predictions(preds)).map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == PREDICTION_HEADER => {}
        _ => return Err(parse(1, format!("expected header {PREDICTION_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, gold, pred, score] = fields[..] else {
            return Err(parse(i + 1, format!("expected 4 fields, got {}", fields.len())));
        };
        let gold = match gold {
            "-" => None,
            g => Some(g.parse().map_err(|e: Error| parse(i + 1, e.to_string()))?),
        };
        let pred = pred.parse().map_err(|e: Error| parse(i + 1, e.to_string()))?;
        let clickbait_score: f64 = score
            .parse()
            .map_err(|e| parse(i + 1, format!("bad score {score:?}: {e}")))?;
        if !(0.0..=1.0).contains(&clickbait_score) {
            return Err(parse(i + 1, format!("score {clickbait_score} outside [0, 1]")));
        }
        out.push(Prediction {
            id: id.to_string(),
            gold,
            pred,
            clickbait_score,
        });
    }
    Ok(out)
}

/// Splits labeled predictions into (predicted, gold) label vectors.
pub fn labeled_pairs(preds: &[Prediction]) -> Result<(Vec<Label>, Vec<Label>)> {
    preds
        .iter()
        .map(|p| {
            p.gold
                .map(|g| (p.pred, g))
                .ok_or_else(|| Error::invalid(format!("prediction {} has no gold label", p.id)))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: Label,
    pub confusion: Confusion,
    pub scores: Prf1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub classes: Vec<ClassReport>,
    pub macro_f1: f64,
    /// Absent when the evaluated set has no clickbait examples.
    pub pr_curve: Option<PrCurve>,
}

pub fn report(preds: &[Prediction]) -> Result<EvalReport> {
    let (p, g) = labeled_pairs(preds)?;
    check_aligned(p.len(), g.len(), "report")?;
    let classes = Label::ALL
        .iter()
        .map(|&label| {
            let c = confusion(&p, &g, label)?;
            Ok(ClassReport {
                label,
                confusion: c,
                scores: Prf1 {
                    precision: c.precision(),
                    recall: c.recall(),
                    f1: c.f1(),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let positives: Vec<bool> = g.iter().map(|&l| l == Label::Clickbait).collect();
    let pr = if positives.contains(&true) {
        let scores: Vec<f64> = preds.iter().map(|p| p.clickbait_score).collect();
        Some(pr_curve(&scores, &positives)?)
    } else {
        None
    };
    Ok(EvalReport {
        n: p.len(),
        accuracy: accuracy(&p, &g)?,
        macro_f1: (classes[0].scores.f1 + classes[1].scores.f1) / 2.0,
        classes,
        pr_curve: pr,
    })
}

impl EvalReport {
    /// Aligned per-class table followed by the summary scores.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>9} {:>9} {:>9} {:>6} {:>6} {:>6} {:>6}\n",
            "class", "precision", "recall", "f1", "tp", "fp", "fn", "tn"
        );
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<14} {:>9.4} {:>9.4} {:>9.4} {:>6} {:>6} {:>6} {:>6}",
                c.label.as_str(),
                c.scores.precision,
                c.scores.recall,
                c.scores.f1,
                c.confusion.tp,
                c.confusion.fp,
                c.confusion.fn_,
                c.confusion.tn
            );
        }
        let _ = writeln!(out, "{:<14} {:>9.4}", "macro-f1", self.macro_f1);
        let _ = writeln!(out, "{:<14} {:>9.4}", "accuracy", self.accuracy);
        match &self.pr_curve {
            Some(pr) => {
                let _ = writeln!(out, "{:<14} {:>9.4}", "ap", pr.ap);
            }
            None => {
                let _ = writeln!(out, "{:<14} {:>9}", "ap", "n/a");
            }
        }
        let _ = writeln!(out, "{:<14} {:>9}", "n", self.n);
        out
    }

    /// `key=value` lines with full-precision numbers.
    pub fn to_key_values(&self) -> String {
        let mut out = format!("n={}\naccuracy={}\nmacro_f1={}\n", self.n, self.accuracy, self.macro_f1);
        for c in &self.classes {
            let k = c.label.as_str();
            let s = &c.scores;
            let m = &c.confusion;
            let _ = writeln!(out, "{k}.precision={}", s.precision);
            let _ = writeln!(out, "{k}.recall={}", s.recall);
            let _ = writeln!(out, "{k}.f1={}", s.f1);
            let _ = writeln!(
                out,
                "{k}.tp={}\n{k}.fp={}\n{k}.fn={}\n{k}.tn={}",
                m.tp, m.fp, m.fn_, m.tn
            );
        }
        if let Some(pr) = &self.pr_curve {
            let _ = writeln!(out, "ap={}", pr.ap);
        }
        out
    }
}

/// `threshold recall precision` rows for external plotting.
pub fn format_pr_curve(curve: &PrCurve) -> String {
    let mut out = String::from("threshold\trecall\tprecision\n");
    for p in &curve.points {
        let _ = writeln!(out, "{}\t{}\t{}", p.threshold, p.recall, p.precision);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Clickbait as CB, NonClickbait as NCB};

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter().map(|&b| Label::from_index(b as usize).unwrap()).collect()
    }

    #[test]
    fn prf1_hand_fixture() {
        // tp=2, fp=1, fn=2, tn=1
        let preds = labels(&[0, 0, 0, 1, 1, 1]);
        let golds = labels(&[0, 0, 1, 0, 0, 1]);
        let r = prf1(&preds, &golds, CB).unwrap();
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 0.5).abs() < 1e-12);
        assert!((r.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn prf1_zero_conventions() {
        let r = prf1(&[NCB, NCB], &[NCB, NCB], CB).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert!(prf1(&[CB], &[CB, CB], CB).is_err());
        assert!(prf1(&[], &[], CB).is_err());
    }

    #[test]
    fn perfect_and_macro() {
        let g = labels(&[0, 1, 1, 0]);
        let r = prf1(&g, &g, NCB).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(macro_f1(&g, &g).unwrap(), 1.0);
    }

    #[test]
    fn ap_hand_example() {
        let c = pr_curve(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((c.ap - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-12);
        let c = pr_curve(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap();
        assert_eq!(c.ap, 1.0);
        assert!(pr_curve(&[0.5], &[false]).is_err());
    }

    #[test]
    fn ties_share_a_threshold() {
        let c = pr_curve(&[0.5, 0.5, 0.5, 0.1], &[true, false, true, false]).unwrap();
        assert_eq!(c.points.len(), 2);
        assert!((c.ap - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mcnemar_worked_example() {
        let m = mcnemar_from_counts(10, 2);
        assert!((m.statistic - 49.0 / 12.0).abs() < 1e-12);
        assert!((m.p_value - 0.0433).abs() < 5e-4);
        let z = mcnemar(&[CB, NCB], &[CB, NCB], &[CB, CB]).unwrap();
        assert_eq!((z.statistic, z.p_value), (0.0, 1.0));
    }

    #[test]
    fn chi_square_table_values() {
        for (x, dof, p) in [
            (3.841_459, 1, 0.05),
            (6.634_897, 1, 0.01),
            (10.827_566, 1, 0.001),
            (5.991_465, 2, 0.05),
            (0.454_936, 1, 0.5),
            (18.307_038, 10, 0.05),
        ] {
            assert!((chi_square_sf(x, dof) - p).abs() < 1e-6, "{x} {dof}");
        }
        // dof 2 survival is exp(-x/2)
        assert!((chi_square_sf(3.0, 2) - (-1.5f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn prediction_file_round_trip() {
        let preds = vec![
            Prediction {
                id: "a".into(),
                gold: Some(CB),
                pred: NCB,
                clickbait_score: 0.1 + 0.2,
            },
            Prediction {
                id: "b".into(),
                gold: None,
                pred: CB,
                clickbait_score: 1.0,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.tsv");
        write_predictions(&p, &preds).unwrap();
        assert_eq!(read_predictions(&p).unwrap(), preds);
        std::fs::write(&p, format!("{PREDICTION_HEADER}\na\tclickbait\tmaybe\t0.5\n")).unwrap();
        assert!(matches!(read_predictions(&p), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn report_composes_components() {
        let golds = labels(&[0, 0, 1, 0, 0, 1]);
        let preds = labels(&[0, 0, 0, 1, 1, 1]);
        let scores = [0.9, 0.8, 0.7, 0.4, 0.3, 0.2];
        let rows: Vec<Prediction> = (0..6)
            .map(|i| Prediction {
                id: i.to_string(),
                gold: Some(golds[i]),
                pred: preds[i],
                clickbait_score: scores[i],
            })
            .collect();
        let r = report(&rows).unwrap();
        assert_eq!(r.classes[0].scores, prf1(&preds, &golds, CB).unwrap());
        assert_eq!(r.classes[1].scores, prf1(&preds, &golds, NCB).unwrap());
        assert_eq!(r.macro_f1, macro_f1(&preds, &golds).unwrap());
        let pos: Vec<bool> = golds.iter().map(|&g| g == CB).collect();
        assert_eq!(r.pr_curve.unwrap(), pr_curve(&scores, &pos).unwrap());
        assert!(report(&[]).is_err());
    }

    proptest! {
        #[test]
        fn counts_are_consistent(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let (p, g): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let (p, g) = (labels(&p), labels(&g));
            for t in Label::ALL {
                let c = confusion(&p, &g, t).unwrap();
                prop_assert_eq!(c.tp + c.fn_, g.iter().filter(|&&l| l == t).count());
                prop_assert_eq!(c.tp + c.fp, p.iter().filter(|&&l| l == t).count());
                prop_assert_eq!(c.total(), p.len());
            }
        }

        #[test]
        fn macro_f1_class_swap_invariant(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60)) {
            let (p, g): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let (p, g) = (labels(&p), labels(&g));
            let sp: Vec<Label> = p.iter().map(|l| l.other()).collect();
            let sg: Vec<Label> = g.iter().map(|l| l.other()).collect();
            prop_assert!((macro_f1(&p, &g).unwrap() - macro_f1(&sp, &sg).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn mcnemar_symmetric(triples in prop::collection::vec((0u8..2, 0u8..2, 0u8..2), 1..80)) {
            let a = labels(&triples.iter().map(|t| t.0).collect::<Vec<_>>());
            let b = labels(&triples.iter().map(|t| t.1).collect::<Vec<_>>());
            let g = labels(&triples.iter().map(|t| t.2).collect::<Vec<_>>());
            let ab = mcnemar(&a, &b, &g).unwrap();
            let ba = mcnemar(&b, &a, &g).unwrap();
            prop_assert_eq!(ab.statistic, ba.statistic);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn pr_curve_shape(
            items in prop::collection::vec((0u8..20, any::<bool>()), 1..80)
        ) {
            let scores: Vec<f64> = items.iter().map(|i| i.0 as f64 / 20.0).collect();
            let pos: Vec<bool> = items.iter().map(|i| i.1).collect();
            prop_assume!(pos.contains(&true));
            let c = pr_curve(&scores, &pos).unwrap();
            prop_assert!((0.0..=1.0).contains(&c.ap));
            prop_assert!(c.points.windows(2).all(|w| w[0].recall <= w[1].recall));
            prop_assert_eq!(c.points.last().unwrap().recall, 1.0);
        }

        #[test]
        fn ap_is_one_iff_positives_outrank(
            items in prop::collection::btree_map(0u32..1000, any::<bool>(), 1..50)
        ) {
            // distinct scores from the map keys
            let scores: Vec<f64> = items.keys().map(|&k| k as f64).collect();
            let pos: Vec<bool> = items.values().copied().collect();
            prop_assume!(pos.contains(&true));
            let c = pr_curve(&scores, &pos).unwrap();
            let min_pos = scores.iter().zip(&pos).filter(|p| *p.1).map(|p| *p.0).fold(f64::INFINITY, f64::min);
            let max_neg = scores.iter().zip(&pos).filter(|p| !*p.1).map(|p| *p.0).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!((c.ap - 1.0).abs() < 1e-12, min_pos > max_neg);
        }
    }
}
