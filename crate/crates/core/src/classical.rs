//! Random forest and linear SVM over handcrafted feature vectors.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::tensor::{seeded_rng, RunRng};

/// Shannon entropy in bits of (possibly weighted) class counts.
pub fn entropy(counts: &[f64]) -> Result<f64> {
    let total: f64 = counts.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::invalid("entropy of an empty node"));
    }
    Ok(counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum())
}

/// Per-class sample weights, indexed by [`Label::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub [f64; 2]);

impl ClassWeights {
    pub const UNIFORM: ClassWeights = ClassWeights([1.0, 1.0]);

    /// `n / (2 * n_class)` for each class.
    pub fn balanced(labels: &[Label]) -> Result<Self> {
        let counts = class_counts(labels);
        if counts.contains(&0) {
            return Err(Error::invalid("balanced weights need both classes"));
        }
        let n = labels.len() as f64;
        Ok(ClassWeights([
            n / (2.0 * counts[0] as f64),
            n / (2.0 * counts[1] as f64),
        ]))
    }

    fn apply(&self, counts: [usize; 2]) -> [f64; 2] {
        [self.0[0] * counts[0] as f64, self.0[1] * counts[1] as f64]
    }
}

fn class_counts(labels: &[Label]) -> [usize; 2] {
    let mut c = [0; 2];
    for l in labels {
        c[l.index()] += 1;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn node_entropy(w: [f64; 2]) -> f64 {
    entropy(&w).unwrap_or(0.0)
}

/// Information gain of sending `left` counts left out of `parent`.
fn split_gain(parent: [usize; 2], left: [usize; 2], weights: &ClassWeights) -> f64 {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    let (wp, wl, wr) = (weights.apply(parent), weights.apply(left), weights.apply(right));
    let (tp, tl, tr) = (wp[0] + wp[1], wl[0] + wl[1], wr[0] + wr[1]);
    node_entropy(wp) - (tl / tp) * node_entropy(wl) - (tr / tp) * node_entropy(wr)
}

/// Best threshold split of the rows in `idx`: `x <= threshold` goes left.
///
/// Thresholds are midpoints between consecutive distinct values. Ties in
/// gain keep the lowest feature index, then the lowest threshold. Returns
/// `None` when no candidate feature separates the rows.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[Label],
    idx: &[usize],
    features: &[usize],
    weights: &ClassWeights,
) -> Result<Option<Split>> {
    if idx.len() < 2 {
        return Err(Error::invalid("best_split needs at least two rows"));
    }
    let parent = class_counts(&idx.iter().map(|&i| y[i]).collect::<Vec<_>>());
    let mut features = features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<Split> = None;
    let mut column: Vec<(f64, Label)> = Vec::with_capacity(idx.len());
    for &f in &features {
        column.clear();
        column.extend(idx.iter().map(|&i| (x[i][f], y[i])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0usize; 2];
        for k in 0..column.len() - 1 {
            left[column[k].1.index()] += 1;
            let (lo, hi) = (column[k].0, column[k + 1].0);
            if lo >= hi {
                continue;
            }
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let gain = split_gain(parent, left, weights);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        /// Class probabilities indexed by [`Label::index`].
        proba: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored in preorder with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Validates a hand-built preorder node list.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("tree has no nodes"));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid(format!("tree node {i} reached twice")));
            }
            match &nodes[i] {
                TreeNode::Leaf { proba } => {
                    if proba.iter().any(|p| !(0.0..=1.0).contains(p)) || ((proba[0] + proba[1]) - 1.0).abs() > 1e-9 {
                        return Err(Error::invalid(format!("leaf {i} probabilities {proba:?}")));
                    }
                }
                &TreeNode::Split {
                    left, right, threshold, ..
                } => {
                    if left <= i || right <= i || left >= nodes.len() || right >= nodes.len() || !threshold.is_finite()
                    {
                        return Err(Error::invalid(format!("split node {i} has bad children or threshold")));
                    }
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        if seen.contains(&false) {
            return Err(Error::invalid("tree has unreachable nodes"));
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { proba } => return *proba,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

fn leaf(counts: [usize; 2], weights: &ClassWeights) -> TreeNode {
    let w = weights.apply(counts);
    let total = w[0] + w[1];
    TreeNode::Leaf {
        proba: [w[0] / total, w[1] / total],
    }
}

/// Rows of a node still to grow, with the parent slot to patch and whether
/// it is the left child.
type Pending = (Vec<usize>, Option<(usize, bool)>);

/// Grows an unpruned entropy tree on the (possibly repeated) rows `idx`,
/// drawing `max_features` candidate features at each split.
fn grow_tree(
    x: &[Vec<f64>],
    y: &[Label],
    idx: Vec<usize>,
    max_features: usize,
    weights: &ClassWeights,
    rng: &mut RunRng,
) -> Result<DecisionTree> {
    let dim = x[0].len();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut stack: Vec<Pending> = vec![(idx, None)];
    while let Some((rows, parent)) = stack.pop() {
        let me = nodes.len();
        if let Some((p, is_left)) = parent {
            if let TreeNode::Split { left, right, .. } = &mut nodes[p] {
                *(if is_left { left } else { right }) = me;
            }
        }
        let counts = class_counts(&rows.iter().map(|&i| y[i]).collect::<Vec<_>>());
        if rows.len() < 2 || counts.contains(&0) {
            nodes.push(leaf(counts, weights));
            continue;
        }
        let drawn = sample(rng, dim, max_features.min(dim)).into_vec();
        let mut split = best_split(x, y, &rows, &drawn, weights)?;
        if split.is_none() && drawn.len() < dim {
            let rest: Vec<usize> = (0..dim).filter(|f| !drawn.contains(f)).collect();
            split = best_split(x, y, &rows, &rest, weights)?;
        }
        let Some(s) = split else {
            nodes.push(leaf(counts, weights));
            continue;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][s.feature] <= s.threshold);
        nodes.push(TreeNode::Split {
            feature: s.feature,
            threshold: s.threshold,
            left: 0,
            right: 0,
        });
        stack.push((r, Some((me, false))));
        stack.push((l, Some((me, true))));
    }
    Ok(DecisionTree { nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// Candidate features per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 150,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<DecisionTree>,
    /// Sorted out-of-bag row indices per tree.
    pub oob_indices: Vec<Vec<usize>>,
    pub class_weights: ClassWeights,
    /// Accuracy of out-of-bag votes over rows left out by at least one tree;
    /// `None` if no row was ever left out.
    pub oob_score: Option<f64>,
    pub n_features: usize,
}

fn check_training_set(x: &[Vec<f64>], y: &[Label]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("{} rows vs {} labels", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("training needs at least two rows"));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::invalid("feature rows must share a non-zero dimension"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature matrix contains non-finite values"));
    }
    if class_counts(y).contains(&0) {
        return Err(Error::invalid("training labels contain a single class"));
    }
    Ok(dim)
}

/// Sum of per-tree class probabilities; the label is clickbait only if its
/// mass is strictly larger.
fn vote(sums: [f64; 2]) -> Label {
    if sums[0] > sums[1] {
        Label::Clickbait
    } else {
        Label::NonClickbait
    }
}

pub fn train_random_forest(x: &[Vec<f64>], y: &[Label], config: &ForestConfig) -> Result<RandomForestModel> {
    let dim = check_training_set(x, y)?;
    if config.n_estimators == 0 {
        return Err(Error::invalid("n_estimators must be positive"));
    }
    let max_features = config
        .max_features
        .unwrap_or_else(|| ((dim as f64).sqrt().floor() as usize).max(1));
    if max_features == 0 {
        return Err(Error::invalid("max_features must be positive"));
    }
    let weights = ClassWeights::balanced(y)?;
    let n = x.len();
    let grown: Vec<(DecisionTree, Vec<usize>)> = (0..config.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeded_rng(config.seed);
            rng.set_stream(t as u64 + 1);
            let boot: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut in_bag = vec![false; n];
            boot.iter().for_each(|&i| in_bag[i] = true);
            let oob = (0..n).filter(|&i| !in_bag[i]).collect();
            let tree = grow_tree(x, y, boot, max_features, &weights, &mut rng)?;
            Ok((tree, oob))
        })
        .collect::<Result<_>>()?;
    let (trees, oob_indices): (Vec<_>, Vec<_>) = grown.into_iter().unzip();

    let mut sums = vec![[0.0f64; 2]; n];
    let mut seen = vec![false; n];
    for (tree, oob) in trees.iter().zip(&oob_indices) {
        for &i in oob {
            let p = tree.predict_proba(&x[i]);
            sums[i][0] += p[0];
            sums[i][1] += p[1];
            seen[i] = true;
        }
    }
    let scored: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    let oob_score = (!scored.is_empty()).then(|| {
        let correct = scored.iter().filter(|&&i| vote(sums[i]) == y[i]).count();
        correct as f64 / scored.len() as f64
    });
    log::info!(
        "random forest: {} trees, oob score {}",
        trees.len(),
        oob_score.map_or("n/a".to_string(), |s| format!("{s:.4}"))
    );
    Ok(RandomForestModel {
        trees,
        oob_indices,
        class_weights: weights,
        oob_score,
        n_features: dim,
    })
}

impl RandomForestModel {
    /// A forest from hand-built trees, with no out-of-bag information.
    pub fn from_trees(trees: Vec<DecisionTree>, n_features: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("forest has no trees"));
        }
        for t in &trees {
            for node in t.nodes() {
                if let TreeNode::Split { feature, .. } = node {
                    if *feature >= n_features {
                        return Err(Error::invalid(format!("split on feature {feature} of {n_features}")));
                    }
                }
            }
        }
        Ok(RandomForestModel {
            oob_indices: vec![Vec::new(); trees.len()],
            trees,
            class_weights: ClassWeights::UNIFORM,
            oob_score: None,
            n_features,
        })
    }

    fn class_sums(&self, x: &[f64]) -> Result<[f64; 2]> {
        if x.len() != self.n_features {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let mut s = [0.0; 2];
        for t in &self.trees {
            let p = t.predict_proba(x);
            s[0] += p[0];
            s[1] += p[1];
        }
        Ok(s)
    }

    /// Mean clickbait probability across trees.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.class_sums(x)?[0] / self.trees.len() as f64)
    }

    /// Argmax of the mean class probabilities; exact ties go to
    /// non-clickbait.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(vote(self.class_sums(x)?))
    }
}

/// Logistic map from SVM decision values to clickbait probability:
/// `1 / (1 + exp(a * f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaler {
    pub a: f64,
    pub b: f64,
}

impl PlattScaler {
    pub fn probability(&self, decision: f64) -> f64 {
        let z = self.a * decision + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }

    /// Newton fit with backtracking on smoothed targets. `positive[i]` marks
    /// the class the probability refers to.
    pub fn fit(decisions: &[f64], positive: &[bool]) -> Result<Self> {
        if decisions.len() != positive.len() || decisions.is_empty() {
            return Err(Error::invalid("platt scaling needs aligned, non-empty inputs"));
        }
        let n_pos = positive.iter().filter(|&&p| p).count() as f64;
        let n_neg = positive.len() as f64 - n_pos;
        let hi = (n_pos + 1.0) / (n_pos + 2.0);
        let lo = 1.0 / (n_neg + 2.0);
        let t: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();

        const MAX_ITER: usize = 100;
        const MIN_STEP: f64 = 1e-10;
        const SIGMA: f64 = 1e-12;
        let objective = |a: f64, b: f64| -> f64 {
            decisions
                .iter()
                .zip(&t)
                .map(|(&f, &ti)| {
                    let z = f * a + b;
                    if z >= 0.0 {
                        ti * z + (-z).exp().ln_1p()
                    } else {
                        (ti - 1.0) * z + z.exp().ln_1p()
                    }
                })
                .sum()
        };
        let (mut a, mut b) = (0.0, ((n_neg + 1.0) / (n_pos + 1.0)).ln());
        let mut fval = objective(a, b);
        for _ in 0..MAX_ITER {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
            for (&f, &ti) in decisions.iter().zip(&t) {
                let z = f * a + b;
                let (p, q) = if z >= 0.0 {
                    let e = (-z).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += f * f * d2;
                h22 += d2;
                h21 += f * d2;
                let d1 = ti - p;
                g1 += f * d1;
                g2 += d1;
            }
            if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= MIN_STEP {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    (a, b, fval) = (na, nb, nf);
                    break;
                }
                step /= 2.0;
            }
            if step < MIN_STEP {
                log::debug!("platt line search stalled");
                break;
            }
        }
        Ok(PlattScaler { a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub platt: PlattScaler,
    /// Primal objective of the kept iterate after each epoch.
    pub objective_history: Vec<f64>,
}

fn sign(label: Label) -> f64 {
    match label {
        Label::Clickbait => 1.0,
        Label::NonClickbait => -1.0,
    }
}

fn dot_aug(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}

/// `0.5 * |w|^2 + C * sum(hinge)`, with the bias as a regularized
/// constant feature.
pub fn svm_objective(w_aug: &[f64], c: f64, x: &[Vec<f64>], y: &[Label]) -> f64 {
    let reg = 0.5 * w_aug.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, &yi)| (1.0 - sign(yi) * dot_aug(w_aug, xi)).max(0.0))
        .sum();
    reg + c * hinge
}

/// Linear SVM by epoch-shuffled stochastic subgradient descent with step
/// `1 / (lambda t)`, `lambda = 1 / (C n)`. The averaged iterate is scored
/// after every epoch and the best one so far is kept. Clickbait is the
/// positive side of the decision function.
pub fn train_svm(x: &[Vec<f64>], y: &[Label], config: &SvmConfig) -> Result<SvmModel> {
    let dim = check_training_set(x, y)?;
    if !config.c.is_finite() || config.c <= 0.0 {
        return Err(Error::invalid(format!("C must be positive, got {}", config.c)));
    }
    let n = x.len();
    let lambda = 1.0 / (config.c * n as f64);
    let mut rng = seeded_rng(config.seed);
    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let mut best = avg.clone();
    let mut best_obj = svm_objective(&best, config.c, x, y);
    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = sign(y[i]);
            let margin = yi * dot_aug(&w, &x[i]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, xv) in w[..dim].iter_mut().zip(&x[i]) {
                    *v += eta * yi * xv;
                }
                w[dim] += eta * yi;
            }
            let k = 1.0 / t as f64;
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += (v - *a) * k;
            }
        }
        let obj = svm_objective(&avg, config.c, x, y);
        if obj < best_obj {
            best_obj = obj;
            best.clone_from(&avg);
        }
        history.push(best_obj);
    }
    let bias = best[dim];
    best.truncate(dim);
    let decisions: Vec<f64> = x
        .iter()
        .map(|xi| xi.iter().zip(&best).map(|(a, b)| a * b).sum::<f64>() + bias)
        .collect();
    let positive: Vec<bool> = y.iter().map(|&l| l == Label::Clickbait).collect();
    let platt = PlattScaler::fit(&decisions, &positive)?;
    log::info!("svm: objective {best_obj:.6}, platt a={:.4} b={:.4}", platt.a, platt.b);
    Ok(SvmModel {
        weights: best,
        bias,
        c: config.c,
        platt,
        objective_history: history,
    })
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "expected {} features, got {}",
                self.weights.len(),
                x.len()
            )));
        }
        Ok(x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }

    /// Calibrated clickbait probability.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.platt.probability(self.decision(x)?))
    }

    /// Clickbait when the calibrated probability exceeds 0.5.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(if self.predict_proba(x)? > 0.5 {
            Label::Clickbait
        } else {
            Label::NonClickbait
        })
    }
}
