//! Neural classifiers: the dual-branch BiLSTM, a classification head over a
//! pluggable sequence encoder, and the Siamese title/content model trained
//! with a contrastive loss.
//!
//! Sequences are batched time-major (row `t * B + b` holds step `t` of
//! sequence `b`) and trimmed to the longest real sequence in the batch.
//! Every layer masks padding, so outputs do not depend on batch
//! composition.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, NewsArticle};
use crate::error::{Error, Result};
use crate::tensor::{
    load_checkpoint, save_checkpoint, seeded_rng, Adam, AdamConfig, Gradients, Graph, ParamId, ParamStore, RunRng,
    Tensor, TensorError, Var,
};
use crate::textproc::{encode, encode_pair, normalize, tokenize, Encoded, TokenizedDoc, Vocabulary, PAD_ID};

type GraphResult<T> = std::result::Result<T, TensorError>;

const INFERENCE_BATCH: usize = 64;

/// Normalized, tokenized text as fed to every neural model.
pub fn prepare(text: &str) -> TokenizedDoc {
    tokenize(&normalize(text))
}

/// Time-major batch of id sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    pub ids: Vec<usize>,
    pub mask: Vec<u8>,
    pub steps: usize,
    pub batch: usize,
}

impl SeqBatch {
    /// Transposes right-padded sequences, dropping trailing steps that are
    /// padding in every sequence (at least one step is kept).
    pub fn from_encoded(seqs: &[&Encoded]) -> Self {
        let batch = seqs.len();
        let steps = seqs.iter().map(|e| e.real_len()).max().unwrap_or(0).max(1);
        let mut ids = Vec::with_capacity(steps * batch);
        let mut mask = Vec::with_capacity(steps * batch);
        for t in 0..steps {
            for e in seqs {
                let (id, m) = match (e.ids.get(t), e.mask.get(t)) {
                    (Some(&i), Some(&m)) => (i, m),
                    _ => (PAD_ID, 0),
                };
                ids.push(id);
                mask.push(m);
            }
        }
        SeqBatch {
            ids,
            mask,
            steps,
            batch,
        }
    }

    fn step_mask(&self, t: usize) -> &[u8] {
        &self.mask[t * self.batch..(t + 1) * self.batch]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Linear {
    w: ParamId,
    b: ParamId,
}

impl Linear {
    fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut RunRng) -> Self {
        Linear {
            w: store.add_uniform(format!("{name}.w"), &[input, output], rng),
            b: store.add_uniform(format!("{name}.b"), &[output], rng),
        }
    }

    fn forward(&self, g: &mut Graph, x: Var) -> GraphResult<Var> {
        let (w, b) = (g.param(self.w), g.param(self.b));
        let h = g.matmul(x, w)?;
        g.add_row(h, b)
    }
}

/// One LSTM direction. Gates are packed as input, forget, output, candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Lstm {
    input: Linear,
    recurrent: ParamId,
    hidden: usize,
}

impl Lstm {
    fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut RunRng) -> Self {
        Lstm {
            input: Linear::new(store, &format!("{name}.x"), input, 4 * hidden, rng),
            recurrent: store.add_uniform(format!("{name}.h"), &[hidden, 4 * hidden], rng),
            hidden,
        }
    }

    /// Runs over `x: [T*B, in]`, returning hidden states `[T*B, hidden]` in
    /// time order. Padded steps carry the previous state forward.
    fn run(&self, g: &mut Graph, x: Var, batch: &SeqBatch, reverse: bool) -> GraphResult<Var> {
        let (h_dim, b) = (self.hidden, batch.batch);
        let gates_x = self.input.forward(g, x)?;
        let wh = g.param(self.recurrent);
        let zeros = g.constant(Tensor::zeros(&[b, h_dim]))?;
        let (mut h, mut c) = (zeros, zeros);
        let mut outs = vec![zeros; batch.steps];
        let order: Vec<usize> = if reverse {
            (0..batch.steps).rev().collect()
        } else {
            (0..batch.steps).collect()
        };
        for t in order {
            let m = batch.step_mask(t);
            if m.iter().all(|&v| v == 0) {
                outs[t] = h;
                continue;
            }
            let xt = g.row_slice(gates_x, t * b, b)?;
            let hz = g.matmul(h, wh)?;
            let z = g.add(xt, hz)?;
            let zi = g.col_slice(z, 0, h_dim)?;
            let zf = g.col_slice(z, h_dim, h_dim)?;
            let zo = g.col_slice(z, 2 * h_dim, h_dim)?;
            let zc = g.col_slice(z, 3 * h_dim, h_dim)?;
            let (i, f, o, cand) = (g.sigmoid(zi)?, g.sigmoid(zf)?, g.sigmoid(zo)?, g.tanh(zc)?);
            let fc = g.mul(f, c)?;
            let ic = g.mul(i, cand)?;
            let c_new = g.add(fc, ic)?;
            let tc = g.tanh(c_new)?;
            let h_new = g.mul(o, tc)?;
            if m.iter().all(|&v| v != 0) {
                (h, c) = (h_new, c_new);
            } else {
                let keep: Vec<f64> = m.iter().map(|&v| if v != 0 { 1.0 } else { 0.0 }).collect();
                let hold: Vec<f64> = keep.iter().map(|k| 1.0 - k).collect();
                let (cn, co) = (g.scale_rows(c_new, &keep)?, g.scale_rows(c, &hold)?);
                c = g.add(cn, co)?;
                let (hn, ho) = (g.scale_rows(h_new, &keep)?, g.scale_rows(h, &hold)?);
                h = g.add(hn, ho)?;
            }
            outs[t] = h;
        }
        g.concat_rows(&outs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BiLstmLayer {
    fwd: Lstm,
    bwd: Lstm,
}

impl BiLstmLayer {
    fn new(store: &mut ParamStore, name: &str, input: usize, hidden: usize, rng: &mut RunRng) -> Self {
        BiLstmLayer {
            fwd: Lstm::new(store, &format!("{name}.fwd"), input, hidden, rng),
            bwd: Lstm::new(store, &format!("{name}.bwd"), input, hidden, rng),
        }
    }

    fn forward(&self, g: &mut Graph, x: Var, batch: &SeqBatch) -> GraphResult<Var> {
        let f = self.fwd.run(g, x, batch, false)?;
        let b = self.bwd.run(g, x, batch, true)?;
        g.concat_cols(&[f, b])
    }
}

/// Embedding, two stacked bidirectional layers, masked global max-pool.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Branch {
    emb: ParamId,
    layers: [BiLstmLayer; 2],
}

impl Branch {
    fn new(store: &mut ParamStore, name: &str, vocab: usize, embed: usize, units: usize, rng: &mut RunRng) -> Self {
        let emb = store.add_uniform(format!("{name}.emb"), &[vocab, embed], rng);
        let l0 = BiLstmLayer::new(store, &format!("{name}.l0"), embed, units, rng);
        let l1 = BiLstmLayer::new(store, &format!("{name}.l1"), 2 * units, units, rng);
        Branch { emb, layers: [l0, l1] }
    }

    fn forward(&self, g: &mut Graph, batch: &SeqBatch) -> GraphResult<Var> {
        let table = g.param(self.emb);
        let mut x = g.embedding(table, &batch.ids, Some(PAD_ID))?;
        for layer in &self.layers {
            x = layer.forward(g, x, batch)?;
        }
        g.max_pool_time(x, &batch.mask, batch.batch)
    }
}

/// Argmax of a two-class probability row; exact ties go to non-clickbait.
pub fn label_from_probs(p: [f64; 2]) -> Label {
    if p[0] > p[1] {
        Label::Clickbait
    } else {
        Label::NonClickbait
    }
}

/// Label and clickbait score produced for one article.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub label: Label,
    pub clickbait_score: f64,
}

fn probs_to_scored(g: &Graph, probs: Var) -> Vec<Scored> {
    let t = g.value(probs);
    (0..t.shape()[0])
        .map(|i| {
            let r = t.row(i);
            Scored {
                label: label_from_probs([r[0], r[1]]),
                clickbait_score: r[0],
            }
        })
        .collect()
}

/// Per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch loop with per-epoch shuffling. `batch_loss` returns the mean
/// loss of a batch and its gradients.
#[allow(clippy::too_many_arguments)]
fn run_training<F>(
    n: usize,
    epochs: usize,
    batch_size: usize,
    params: &mut ParamStore,
    optimizer: AdamConfig,
    rng: &mut RunRng,
    tag: &str,
    mut batch_loss: F,
) -> Result<TrainReport>
where
    F: FnMut(&ParamStore, &[usize], &mut RunRng) -> GraphResult<(f64, Gradients)>,
{
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let mut adam = Adam::new(optimizer, params);
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport::default();
    for epoch in 0..epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch_size) {
            let (loss, grads) = batch_loss(params, chunk, rng)?;
            adam.step(params, &grads)?;
            total += loss * chunk.len() as f64;
        }
        let mean = total / n as f64;
        log::info!("{tag}: epoch {} loss {mean:.6}", epoch + 1);
        report.epoch_losses.push(mean);
    }
    Ok(report)
}

fn labeled_training_set(corpus: &Corpus) -> Result<Vec<Label>> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let labels = corpus.labels()?;
    if !labels.contains(&Label::Clickbait) || !labels.contains(&Label::NonClickbait) {
        return Err(Error::invalid("training corpus contains a single class"));
    }
    Ok(labels)
}

/// Overwrites table rows with vectors from a text embedding file
/// (`token v1 ... vd` per line, optional `count dim` header). Returns the
/// number of rows filled.
pub fn load_pretrained_embeddings(path: &Path, vocab: &Vocabulary, table: &mut Tensor) -> Result<usize> {
    let (rows, dim) = table
        .dims2()
        .ok_or_else(|| Error::invalid("embedding table must be 2-D"))?;
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut filled = 0;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Vec<&str> = parts.collect();
        if i == 0 && values.len() == 1 && token.parse::<usize>().is_ok() && values[0].parse::<usize>().is_ok() {
            continue;
        }
        if values.len() != dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected {dim} values, got {}", values.len()),
            });
        }
        let id = vocab.id(token);
        if id < 2 || id >= rows || vocab.token(id) != Some(token) {
            continue;
        }
        let parsed = values
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        table.data_mut()[id * dim..(id + 1) * dim].copy_from_slice(&parsed);
        filled += 1;
    }
    Ok(filled)
}

fn write_model(dir: &Path, kind: &str, config: &impl Serialize, params: &ParamStore) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = BTreeMap::from([
        ("kind".to_string(), kind.to_string()),
        (
            "config".to_string(),
            serde_json::to_string(config).map_err(|e| Error::invalid(e.to_string()))?,
        ),
    ]);
    save_checkpoint(&dir.join("params.tensors"), params, &meta)
}

/// Loads a checkpoint and checks its kind; returns the stored config JSON.
fn read_model(dir: &Path, kind: &str) -> Result<(String, ParamStore)> {
    let ckpt = load_checkpoint(&dir.join("params.tensors"))?;
    match ckpt.meta.get("kind") {
        Some(k) if k == kind => {}
        other => {
            return Err(Error::Checkpoint(format!(
                "{}: expected a {kind} checkpoint, found {other:?}",
                dir.display()
            )))
        }
    }
    let config = ckpt
        .meta
        .get("config")
        .cloned()
        .ok_or_else(|| Error::Checkpoint(format!("{}: checkpoint has no config", dir.display())))?;
    Ok((config, ckpt.params))
}

fn parse_config<T: for<'de> Deserialize<'de>>(json: &str) -> Result<T> {
    serde_json::from_str(json).map_err(|e| Error::Checkpoint(format!("bad model config: {e}")))
}

/// Checks that `loaded` has the same parameter names and shapes, in order,
/// as a freshly built `fresh` store.
fn adopt_params(fresh: &ParamStore, loaded: ParamStore) -> Result<ParamStore> {
    let same = fresh.len() == loaded.len()
        && fresh
            .iter()
            .zip(loaded.iter())
            .all(|((n1, t1), (n2, t2))| n1 == n2 && t1.shape() == t2.shape());
    if !same {
        return Err(Error::Checkpoint(
            "checkpoint parameters do not match the model layout".into(),
        ));
    }
    Ok(loaded)
}

// ---------------------------------------------------------------------------
// BiLSTM

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiLstmConfig {
    pub title_vocab: usize,
    pub content_vocab: usize,
    pub embed_dim: usize,
    pub title_units: usize,
    pub content_units: usize,
    pub dense1: usize,
    pub dense2: usize,
    pub dropout: f64,
    pub title_max_len: usize,
    pub content_max_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Optional text embedding file used to initialize both tables.
    pub embeddings: Option<PathBuf>,
}

impl Default for BiLstmConfig {
    fn default() -> Self {
        BiLstmConfig {
            title_vocab: 12_000,
            content_vocab: 25_000,
            embed_dim: 300,
            title_units: 32,
            content_units: 64,
            dense1: 128,
            dense2: 64,
            dropout: 0.6,
            title_max_len: 64,
            content_max_len: 512,
            epochs: 10,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
            embeddings: None,
        }
    }
}

impl BiLstmConfig {
    pub fn desk() -> Self {
        BiLstmConfig {
            title_vocab: 2_000,
            content_vocab: 4_000,
            embed_dim: 24,
            title_units: 8,
            content_units: 16,
            dense1: 32,
            dense2: 16,
            title_max_len: 24,
            content_max_len: 96,
            epochs: 12,
            batch_size: 16,
            lr: 5e-3,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct BiLstmNet {
    title: Branch,
    content: Branch,
    dense1: Linear,
    dense2: Linear,
    out: Linear,
}

impl BiLstmNet {
    fn new(
        store: &mut ParamStore,
        c: &BiLstmConfig,
        title_vocab: usize,
        content_vocab: usize,
        rng: &mut RunRng,
    ) -> Self {
        let title = Branch::new(store, "title", title_vocab, c.embed_dim, c.title_units, rng);
        let content = Branch::new(store, "content", content_vocab, c.embed_dim, c.content_units, rng);
        let merged = 2 * (c.title_units + c.content_units);
        BiLstmNet {
            title,
            content,
            dense1: Linear::new(store, "dense1", merged, c.dense1, rng),
            dense2: Linear::new(store, "dense2", c.dense1, c.dense2, rng),
            out: Linear::new(store, "out", c.dense2, 2, rng),
        }
    }

    fn forward(
        &self,
        g: &mut Graph,
        titles: &SeqBatch,
        contents: &SeqBatch,
        dropout: f64,
        train: bool,
        rng: &mut RunRng,
    ) -> GraphResult<Var> {
        if titles.batch != contents.batch {
            return Err(TensorError::Invalid(format!(
                "{} titles vs {} contents",
                titles.batch, contents.batch
            )));
        }
        let t = self.title.forward(g, titles)?;
        let c = self.content.forward(g, contents)?;
        let mut h = g.concat_cols(&[t, c])?;
        for layer in [self.dense1, self.dense2] {
            h = layer.forward(g, h)?;
            h = g.relu(h)?;
            h = g.dropout(h, dropout, train, rng)?;
        }
        let logits = self.out.forward(g, h)?;
        g.softmax(logits)
    }
}

/// Title and content branches merged into a two-layer dense classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmClassifier {
    pub config: BiLstmConfig,
    pub title_vocab: Vocabulary,
    pub content_vocab: Vocabulary,
    pub params: ParamStore,
    net: BiLstmNet,
}

impl BiLstmClassifier {
    pub const KIND: &'static str = "bilstm";

    pub fn new(config: BiLstmConfig, title_vocab: Vocabulary, content_vocab: Vocabulary) -> Result<Self> {
        let mut rng = seeded_rng(config.seed);
        let mut params = ParamStore::new();
        let net = BiLstmNet::new(&mut params, &config, title_vocab.len(), content_vocab.len(), &mut rng);
        if let Some(path) = &config.embeddings {
            for (branch, vocab) in [(net.title, &title_vocab), (net.content, &content_vocab)] {
                let n = load_pretrained_embeddings(path, vocab, params.get_mut(branch.emb))?;
                log::info!("loaded {n} pretrained vectors");
            }
        }
        Ok(BiLstmClassifier {
            config,
            title_vocab,
            content_vocab,
            params,
            net,
        })
    }

    pub fn encode(&self, article: &NewsArticle) -> (Encoded, Encoded) {
        (
            encode(&prepare(&article.title), &self.title_vocab, self.config.title_max_len),
            encode(
                &prepare(&article.content),
                &self.content_vocab,
                self.config.content_max_len,
            ),
        )
    }

    /// Class probabilities `[B, 2]` for pre-encoded inputs.
    pub fn forward(
        &self,
        g: &mut Graph,
        titles: &[&Encoded],
        contents: &[&Encoded],
        train: bool,
        rng: &mut RunRng,
    ) -> GraphResult<Var> {
        let (tb, cb) = (SeqBatch::from_encoded(titles), SeqBatch::from_encoded(contents));
        self.net.forward(g, &tb, &cb, self.config.dropout, train, rng)
    }

    pub fn predict(&self, articles: &[NewsArticle]) -> Result<Vec<Scored>> {
        let encoded: Vec<(Encoded, Encoded)> = articles.iter().map(|a| self.encode(a)).collect();
        let chunks: Vec<Vec<Scored>> = encoded
            .par_chunks(INFERENCE_BATCH)
            .map(|chunk| {
                let mut g = Graph::new(&self.params);
                let t: Vec<&Encoded> = chunk.iter().map(|p| &p.0).collect();
                let c: Vec<&Encoded> = chunk.iter().map(|p| &p.1).collect();
                let mut rng = seeded_rng(0);
                let probs = self.forward(&mut g, &t, &c, false, &mut rng)?;
                Ok(probs_to_scored(&g, probs))
            })
            .collect::<Result<_>>()?;
        Ok(chunks.concat())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_model(dir, Self::KIND, &self.config, &self.params)?;
        self.title_vocab.save(&dir.join("title.vocab"))?;
        self.content_vocab.save(&dir.join("content.vocab"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (config, params) = read_model(dir, Self::KIND)?;
        let mut config: BiLstmConfig = parse_config(&config)?;
        config.embeddings = None;
        let title_vocab = Vocabulary::load(&dir.join("title.vocab"))?;
        let content_vocab = Vocabulary::load(&dir.join("content.vocab"))?;
        let mut model = Self::new(config, title_vocab, content_vocab)?;
        model.params = adopt_params(&model.params, params)?;
        Ok(model)
    }
}

pub fn train_bilstm(corpus: &Corpus, config: &BiLstmConfig) -> Result<(BiLstmClassifier, TrainReport)> {
    let labels = labeled_training_set(corpus)?;
    let titles: Vec<TokenizedDoc> = corpus.articles().iter().map(|a| prepare(&a.title)).collect();
    let contents: Vec<TokenizedDoc> = corpus.articles().iter().map(|a| prepare(&a.content)).collect();
    let tv = Vocabulary::build(&titles, config.title_vocab)?;
    let cv = Vocabulary::build(&contents, config.content_vocab)?;
    let mut model = BiLstmClassifier::new(config.clone(), tv, cv)?;
    let te: Vec<Encoded> = titles
        .iter()
        .map(|d| encode(d, &model.title_vocab, config.title_max_len))
        .collect();
    let ce: Vec<Encoded> = contents
        .iter()
        .map(|d| encode(d, &model.content_vocab, config.content_max_len))
        .collect();
    let mut rng = seeded_rng(config.seed);
    let mut params = std::mem::take(&mut model.params);
    let report = {
        let m = &model;
        run_training(
            labels.len(),
            config.epochs,
            config.batch_size,
            &mut params,
            AdamConfig::adam(config.lr),
            &mut rng,
            "bilstm",
            |store, idx, rng| {
                let mut g = Graph::new(store);
                let t: Vec<&Encoded> = idx.iter().map(|&i| &te[i]).collect();
                let c: Vec<&Encoded> = idx.iter().map(|&i| &ce[i]).collect();
                let targets: Vec<usize> = idx.iter().map(|&i| labels[i].index()).collect();
                let (tb, cb) = (SeqBatch::from_encoded(&t), SeqBatch::from_encoded(&c));
                let probs = m.net.forward(&mut g, &tb, &cb, m.config.dropout, true, rng)?;
                let loss = g.cross_entropy(probs, &targets)?;
                Ok((g.value(loss).item(), g.backward(loss)?))
            },
        )?
    };
    model.params = params;
    Ok((model, report))
}

// ---------------------------------------------------------------------------
// Sequence encoders and the classification head

/// Maps a batch of id sequences to one summary vector per sequence.
pub trait SequenceEncoder: Send + Sync {
    fn encode(&self, g: &mut Graph, batch: &SeqBatch) -> GraphResult<Var>;
    fn output_dim(&self) -> usize;
}

/// Embeds tokens, subtracts each sequence's mean non-padding embedding,
/// applies a token-wise ReLU layer, mean-pools over real tokens and
/// projects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteredMeanEncoder {
    emb: ParamId,
    token: Linear,
    proj: Linear,
    out_dim: usize,
}

impl CenteredMeanEncoder {
    pub fn new(store: &mut ParamStore, name: &str, dims: EncoderDims, rng: &mut RunRng) -> Self {
        CenteredMeanEncoder {
            emb: store.add_uniform(format!("{name}.emb"), &[dims.vocab, dims.embed], rng),
            token: Linear::new(store, &format!("{name}.token"), dims.embed, dims.hidden, rng),
            proj: Linear::new(store, &format!("{name}.proj"), dims.hidden, dims.output, rng),
            out_dim: dims.output,
        }
    }

    pub fn embedding(&self) -> ParamId {
        self.emb
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub output: usize,
}

impl SequenceEncoder for CenteredMeanEncoder {
    fn encode(&self, g: &mut Graph, batch: &SeqBatch) -> GraphResult<Var> {
        let table = g.param(self.emb);
        let e = g.embedding(table, &batch.ids, Some(PAD_ID))?;
        let mean = g.mean_time(e, &batch.mask, batch.batch)?;
        let tiled = g.repeat_time(mean, batch.steps)?;
        let centered = g.sub(e, tiled)?;
        let h = self.token.forward(g, centered)?;
        let h = g.relu(h)?;
        let pooled = g.mean_time(h, &batch.mask, batch.batch)?;
        self.proj.forward(g, pooled)
    }

    fn output_dim(&self) -> usize {
        self.out_dim
    }
}

/// Dropout, a ReLU dense layer and a two-way softmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassHead {
    dense: Linear,
    out: Linear,
    pub dropout: f64,
}

impl ClassHead {
    pub fn new(store: &mut ParamStore, input: usize, hidden: usize, dropout: f64, rng: &mut RunRng) -> Self {
        ClassHead {
            dense: Linear::new(store, "head.dense", input, hidden, rng),
            out: Linear::new(store, "head.out", hidden, 2, rng),
            dropout,
        }
    }

    /// Class probabilities `[B, 2]` for one encoded batch.
    pub fn forward(
        &self,
        g: &mut Graph,
        encoder: &dyn SequenceEncoder,
        batch: &SeqBatch,
        train: bool,
        rng: &mut RunRng,
    ) -> GraphResult<Var> {
        let summary = encoder.encode(g, batch)?;
        let h = g.dropout(summary, self.dropout, train, rng)?;
        let h = self.dense.forward(g, h)?;
        let h = g.relu(h)?;
        let logits = self.out.forward(g, h)?;
        g.softmax(logits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderHeadConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub encoder_dim: usize,
    pub dense: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for EncoderHeadConfig {
    fn default() -> Self {
        EncoderHeadConfig {
            vocab_size: 30_000,
            embed_dim: 300,
            hidden_dim: 300,
            encoder_dim: 300,
            dense: 128,
            dropout: 0.2,
            max_len: 512,
            epochs: 10,
            batch_size: 4,
            lr: 2e-5,
            weight_decay: 0.01,
            seed: 0,
        }
    }
}

impl EncoderHeadConfig {
    pub fn desk() -> Self {
        EncoderHeadConfig {
            vocab_size: 4_000,
            embed_dim: 32,
            hidden_dim: 32,
            encoder_dim: 32,
            max_len: 128,
            epochs: 15,
            batch_size: 16,
            lr: 5e-3,
            ..Self::default()
        }
    }
}

/// `title [SEP] content` through the default encoder and the class head.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderHeadModel {
    pub config: EncoderHeadConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
    encoder: CenteredMeanEncoder,
    head: ClassHead,
}

impl EncoderHeadModel {
    pub const KIND: &'static str = "encoder-head";

    /// Builds an untrained model. The vocabulary must contain the separator.
    pub fn new(config: EncoderHeadConfig, vocab: Vocabulary) -> Result<Self> {
        if vocab.separator_id().is_none() {
            return Err(Error::invalid("encoder head vocabulary has no separator token"));
        }
        let mut rng = seeded_rng(config.seed);
        let mut params = ParamStore::new();
        let dims = EncoderDims {
            vocab: vocab.len(),
            embed: config.embed_dim,
            hidden: config.hidden_dim,
            output: config.encoder_dim,
        };
        let encoder = CenteredMeanEncoder::new(&mut params, "encoder", dims, &mut rng);
        let head = ClassHead::new(&mut params, config.encoder_dim, config.dense, config.dropout, &mut rng);
        Ok(EncoderHeadModel {
            config,
            vocab,
            params,
            encoder,
            head,
        })
    }

    pub fn encode(&self, article: &NewsArticle) -> Result<Encoded> {
        encode_pair(
            &prepare(&article.title),
            &prepare(&article.content),
            &self.vocab,
            self.config.max_len,
        )
    }

    pub fn forward(&self, g: &mut Graph, seqs: &[&Encoded], train: bool, rng: &mut RunRng) -> GraphResult<Var> {
        self.head
            .forward(g, &self.encoder, &SeqBatch::from_encoded(seqs), train, rng)
    }

    pub fn predict(&self, articles: &[NewsArticle]) -> Result<Vec<Scored>> {
        let encoded = articles.iter().map(|a| self.encode(a)).collect::<Result<Vec<_>>>()?;
        let chunks: Vec<Vec<Scored>> = encoded
            .par_chunks(INFERENCE_BATCH)
            .map(|chunk| {
                let mut g = Graph::new(&self.params);
                let seqs: Vec<&Encoded> = chunk.iter().collect();
                let probs = self.forward(&mut g, &seqs, false, &mut seeded_rng(0))?;
                Ok(probs_to_scored(&g, probs))
            })
            .collect::<Result<_>>()?;
        Ok(chunks.concat())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_model(dir, Self::KIND, &self.config, &self.params)?;
        self.vocab.save(&dir.join("vocab"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (config, params) = read_model(dir, Self::KIND)?;
        let vocab = Vocabulary::load(&dir.join("vocab"))?;
        let mut model = Self::new(parse_config(&config)?, vocab)?;
        model.params = adopt_params(&model.params, params)?;
        Ok(model)
    }
}

pub fn train_encoder_head(corpus: &Corpus, config: &EncoderHeadConfig) -> Result<(EncoderHeadModel, TrainReport)> {
    let labels = labeled_training_set(corpus)?;
    let docs: Vec<(TokenizedDoc, TokenizedDoc)> = corpus
        .articles()
        .iter()
        .map(|a| (prepare(&a.title), prepare(&a.content)))
        .collect();
    let all: Vec<TokenizedDoc> = docs.iter().flat_map(|(t, c)| [t.clone(), c.clone()]).collect();
    let vocab = Vocabulary::build(&all, config.vocab_size)?.with_separator();
    let mut model = EncoderHeadModel::new(config.clone(), vocab)?;
    let encoded = docs
        .iter()
        .map(|(t, c)| encode_pair(t, c, &model.vocab, config.max_len))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = seeded_rng(config.seed);
    let mut params = std::mem::take(&mut model.params);
    let report = {
        let m = &model;
        run_training(
            labels.len(),
            config.epochs,
            config.batch_size,
            &mut params,
            AdamConfig::adamw(config.lr, config.weight_decay),
            &mut rng,
            "encoder-head",
            |store, idx, rng| {
                let mut g = Graph::new(store);
                let seqs: Vec<&Encoded> = idx.iter().map(|&i| &encoded[i]).collect();
                let targets: Vec<usize> = idx.iter().map(|&i| labels[i].index()).collect();
                let probs = m
                    .head
                    .forward(&mut g, &m.encoder, &SeqBatch::from_encoded(&seqs), true, rng)?;
                let loss = g.cross_entropy(probs, &targets)?;
                Ok((g.value(loss).item(), g.backward(loss)?))
            },
        )?
    };
    model.params = params;
    Ok((model, report))
}

// ---------------------------------------------------------------------------
// Siamese contrastive model

/// `1 - cos(u, v)`; zero vectors are an error.
pub fn cosine_dissimilarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!("vectors of length {} and {}", u.len(), v.len())));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::invalid("cosine dissimilarity of a zero vector"));
    }
    Ok(1.0 - dot / (nu * nv))
}

/// Pair loss: `y * d + (1 - y) * max(0, m - d)` where `y = 1` marks a
/// non-clickbait pair.
pub fn contrastive_term(delta: f64, y: f64, margin: f64) -> f64 {
    y * delta + (1.0 - y) * (margin - delta).max(0.0)
}

/// Mean contrastive loss over `(title vector, content vector, label)`.
pub fn contrastive_loss(pairs: &[(&[f64], &[f64], Label)], margin: f64) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("contrastive loss over an empty batch"));
    }
    let mut total = 0.0;
    for (t, c, label) in pairs {
        total += contrastive_term(cosine_dissimilarity(t, c)?, label.index() as f64, margin);
    }
    Ok(total / pairs.len() as f64)
}

/// Graph version of [`contrastive_loss`] on `[B, d]` title and content
/// encodings; `targets` are label indices.
pub fn contrastive_loss_graph(g: &mut Graph, vt: Var, vc: Var, targets: &[usize], margin: f64) -> GraphResult<Var> {
    if let Some(t) = targets.iter().find(|&&t| t > 1) {
        return Err(TensorError::Invalid(format!("contrastive target {t} is not 0 or 1")));
    }
    let cos = g.cosine_similarity(vt, vc)?;
    let neg = g.scale(cos, -1.0)?;
    let delta = g.add_scalar(neg, 1.0)?;
    let y: Vec<f64> = targets.iter().map(|&t| t as f64).collect();
    let not_y: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
    let n = y.len();
    let y = g.constant(Tensor::new(vec![n], y)?)?;
    let not_y = g.constant(Tensor::new(vec![n], not_y)?)?;
    let pull = g.mul(y, delta)?;
    let neg_delta = g.scale(delta, -1.0)?;
    let gap = g.add_scalar(neg_delta, margin)?;
    let hinge = g.relu(gap)?;
    let push = g.mul(not_y, hinge)?;
    let total = g.add(pull, push)?;
    g.mean(total)
}

/// Label and clickbait score from a title/content cosine similarity:
/// non-clickbait iff `s >= threshold`, score `clamp((1 - s) / 2, 0, 1)`.
pub fn contrastive_predict(similarity: f64, threshold: f64) -> Scored {
    Scored {
        label: if similarity >= threshold {
            Label::NonClickbait
        } else {
            Label::Clickbait
        },
        clickbait_score: ((1.0 - similarity) / 2.0).clamp(0.0, 1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContrastiveConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub max_len: usize,
    pub margin: f64,
    pub threshold: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ContrastiveConfig {
    fn default() -> Self {
        ContrastiveConfig {
            vocab_size: 30_000,
            embed_dim: 300,
            hidden_dim: 300,
            output_dim: 128,
            max_len: 256,
            margin: 1.0,
            threshold: 0.75,
            epochs: 5,
            batch_size: 4,
            lr: 1e-6,
            seed: 0,
        }
    }
}

impl ContrastiveConfig {
    pub fn desk() -> Self {
        ContrastiveConfig {
            vocab_size: 4_000,
            embed_dim: 64,
            hidden_dim: 128,
            output_dim: 32,
            max_len: 64,
            epochs: 40,
            batch_size: 8,
            lr: 3e-3,
            ..Self::default()
        }
    }
}

/// Shared encoder applied to titles and contents, producing unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseModel {
    pub config: ContrastiveConfig,
    pub vocab: Vocabulary,
    pub params: ParamStore,
    encoder: CenteredMeanEncoder,
}

impl SiameseModel {
    pub const KIND: &'static str = "contrastive";

    pub fn new(config: ContrastiveConfig, vocab: Vocabulary) -> Self {
        let mut rng = seeded_rng(config.seed);
        let mut params = ParamStore::new();
        let dims = EncoderDims {
            vocab: vocab.len(),
            embed: config.embed_dim,
            hidden: config.hidden_dim,
            output: config.output_dim,
        };
        let encoder = CenteredMeanEncoder::new(&mut params, "encoder", dims, &mut rng);
        SiameseModel {
            config,
            vocab,
            params,
            encoder,
        }
    }

    pub fn encode_text(&self, text: &str) -> Encoded {
        encode(&prepare(text), &self.vocab, self.config.max_len)
    }

    /// Unit-norm encodings `[B, d]`. Sequences without real tokens are an
    /// error.
    pub fn encode(&self, g: &mut Graph, seqs: &[&Encoded]) -> GraphResult<Var> {
        if let Some(i) = seqs.iter().position(|e| e.real_len() == 0) {
            return Err(TensorError::Invalid(format!("sequence {i} has no tokens")));
        }
        let v = self.encoder.encode(g, &SeqBatch::from_encoded(seqs))?;
        g.l2_normalize(v)
    }

    /// Encodes a single text to a unit vector.
    pub fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let e = self.encode_text(text);
        let mut g = Graph::new(&self.params);
        let v = self.encode(&mut g, &[&e])?;
        Ok(g.value(v).data().to_vec())
    }

    /// Mean contrastive loss of a batch of encoded pairs.
    pub fn loss(
        &self,
        g: &mut Graph,
        titles: &[&Encoded],
        contents: &[&Encoded],
        targets: &[usize],
    ) -> GraphResult<Var> {
        let vt = self.encode(g, titles)?;
        let vc = self.encode(g, contents)?;
        contrastive_loss_graph(g, vt, vc, targets, self.config.margin)
    }

    /// Title/content cosine similarity per article.
    pub fn similarities(&self, articles: &[NewsArticle]) -> Result<Vec<f64>> {
        let encoded: Vec<(Encoded, Encoded)> = articles
            .iter()
            .map(|a| (self.encode_text(&a.title), self.encode_text(&a.content)))
            .collect();
        let chunks: Vec<Vec<f64>> = encoded
            .par_chunks(INFERENCE_BATCH)
            .map(|chunk| {
                let mut g = Graph::new(&self.params);
                let t: Vec<&Encoded> = chunk.iter().map(|p| &p.0).collect();
                let c: Vec<&Encoded> = chunk.iter().map(|p| &p.1).collect();
                let vt = self.encode(&mut g, &t)?;
                let vc = self.encode(&mut g, &c)?;
                let s = g.cosine_similarity(vt, vc)?;
                Ok(g.value(s).data().to_vec())
            })
            .collect::<Result<_>>()?;
        Ok(chunks.concat())
    }

    pub fn predict(&self, articles: &[NewsArticle]) -> Result<Vec<Scored>> {
        Ok(self
            .similarities(articles)?
            .into_iter()
            .map(|s| contrastive_predict(s, self.config.threshold))
            .collect())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_model(dir, Self::KIND, &self.config, &self.params)?;
        self.vocab.save(&dir.join("vocab"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (config, params) = read_model(dir, Self::KIND)?;
        let vocab = Vocabulary::load(&dir.join("vocab"))?;
        let mut model = Self::new(parse_config(&config)?, vocab);
        model.params = adopt_params(&model.params, params)?;
        Ok(model)
    }
}

/// Trains the shared encoder on each article's own (title, content) pair.
pub fn train_contrastive(corpus: &Corpus, config: &ContrastiveConfig) -> Result<(SiameseModel, TrainReport)> {
    if corpus.is_empty() {
        return Err(Error::invalid("training corpus is empty"));
    }
    let labels = corpus.labels()?;
    let docs: Vec<(TokenizedDoc, TokenizedDoc)> = corpus
        .articles()
        .iter()
        .map(|a| (prepare(&a.title), prepare(&a.content)))
        .collect();
    let all: Vec<TokenizedDoc> = docs.iter().flat_map(|(t, c)| [t.clone(), c.clone()]).collect();
    let vocab = Vocabulary::build(&all, config.vocab_size)?;
    let mut model = SiameseModel::new(config.clone(), vocab);
    let te: Vec<Encoded> = docs
        .iter()
        .map(|d| encode(&d.0, &model.vocab, config.max_len))
        .collect();
    let ce: Vec<Encoded> = docs
        .iter()
        .map(|d| encode(&d.1, &model.vocab, config.max_len))
        .collect();
    let mut rng = seeded_rng(config.seed);
    let mut params = std::mem::take(&mut model.params);
    let report = {
        let m = &model;
        run_training(
            labels.len(),
            config.epochs,
            config.batch_size,
            &mut params,
            AdamConfig::adam(config.lr),
            &mut rng,
            "contrastive",
            |store, idx, _| {
                let mut g = Graph::new(store);
                let t: Vec<&Encoded> = idx.iter().map(|&i| &te[i]).collect();
                let c: Vec<&Encoded> = idx.iter().map(|&i| &ce[i]).collect();
                let targets: Vec<usize> = idx.iter().map(|&i| labels[i].index()).collect();
                let vt = m.encoder.encode(&mut g, &SeqBatch::from_encoded(&t))?;
                let vt = g.l2_normalize(vt)?;
                let vc = m.encoder.encode(&mut g, &SeqBatch::from_encoded(&c))?;
                let vc = g.l2_normalize(vc)?;
                let loss = contrastive_loss_graph(&mut g, vt, vc, &targets, m.config.margin)?;
                Ok((g.value(loss).item(), g.backward(loss)?))
            },
        )?
    };
    model.params = params;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{check_gradients, GradCheckConfig};
    use proptest::prelude::*;
    use Label::{Clickbait as CB, NonClickbait as NCB};

    fn toy_corpus() -> Corpus {
        // Clickbait titles use one vocabulary, non-clickbait another.
        let cb_words = ["wow", "shock", "secret", "unbelievable", "you", "never"];
        let ncb_words = ["council", "budget", "report", "minister", "vote", "law"];
        let mut arts = Vec::new();
        for i in 0..20 {
            let (words, label) = if i % 2 == 0 { (cb_words, CB) } else { (ncb_words, NCB) };
            let title: Vec<&str> = (0..4).map(|k| words[(i + k) % 6]).collect();
            let content: Vec<&str> = (0..8).map(|k| words[(i * 3 + k) % 6]).collect();
            arts.push(NewsArticle::new(
                format!("a{i}"),
                title.join(" "),
                content.join(" ") + ".",
                Some(label),
                "toy",
            ));
        }
        Corpus::new("toy", arts).unwrap()
    }

    fn tiny_bilstm() -> BiLstmConfig {
        BiLstmConfig {
            embed_dim: 6,
            title_units: 3,
            content_units: 4,
            dense1: 8,
            dense2: 6,
            title_max_len: 6,
            content_max_len: 10,
            epochs: 200,
            batch_size: 20,
            lr: 1e-2,
            dropout: 0.0,
            ..BiLstmConfig::desk()
        }
    }

    fn accuracy(scored: &[Scored], corpus: &Corpus) -> f64 {
        let labels = corpus.labels().unwrap();
        scored.iter().zip(&labels).filter(|(s, l)| s.label == **l).count() as f64 / labels.len() as f64
    }

    #[test]
    fn seq_batch_is_time_major_and_trimmed() {
        let a = Encoded {
            ids: vec![5, 6, 0, 0],
            mask: vec![1, 1, 0, 0],
        };
        let b = Encoded {
            ids: vec![7, 0, 0, 0],
            mask: vec![1, 0, 0, 0],
        };
        let s = SeqBatch::from_encoded(&[&a, &b]);
        assert_eq!((s.steps, s.batch), (2, 2));
        assert_eq!(s.ids, vec![5, 7, 6, 0]);
        assert_eq!(s.mask, vec![1, 1, 1, 0]);
    }

    #[test]
    fn bilstm_outputs_simplex_and_handles_all_pad() {
        let corpus = toy_corpus();
        let cfg = BiLstmConfig {
            epochs: 0,
            ..tiny_bilstm()
        };
        let (m, report) = train_bilstm(&corpus, &cfg).unwrap();
        assert!(report.epoch_losses.is_empty());
        let mut g = Graph::new(&m.params);
        let pad = Encoded {
            ids: vec![0; 6],
            mask: vec![0; 6],
        };
        let (t, c) = m.encode(&corpus.articles()[0]);
        let p = m
            .forward(&mut g, &[&t, &pad], &[&c, &pad], false, &mut seeded_rng(0))
            .unwrap();
        for i in 0..2 {
            let r = g.value(p).row(i);
            assert!((r[0] + r[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bilstm_overfits_toy_corpus() {
        let corpus = toy_corpus();
        let (m, report) = train_bilstm(&corpus, &tiny_bilstm()).unwrap();
        assert!(report.epoch_losses.last().unwrap() < &report.epoch_losses[0]);
        assert_eq!(accuracy(&m.predict(corpus.articles()).unwrap(), &corpus), 1.0);
    }

    #[test]
    fn bilstm_gradients_match_finite_differences() {
        let corpus = toy_corpus();
        let cfg = BiLstmConfig {
            epochs: 0,
            ..tiny_bilstm()
        };
        let (m, _) = train_bilstm(&corpus, &cfg).unwrap();
        let enc: Vec<(Encoded, Encoded)> = corpus.articles()[..3].iter().map(|a| m.encode(a)).collect();
        let t: Vec<&Encoded> = enc.iter().map(|p| &p.0).collect();
        let c: Vec<&Encoded> = enc.iter().map(|p| &p.1).collect();
        let r = check_gradients(
            &m.params,
            |g| {
                let p = m.forward(g, &t, &c, false, &mut seeded_rng(0))?;
                g.cross_entropy(p, &[0, 1, 0])
            },
            &GradCheckConfig {
                samples: 300,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(3)]);
    }

    #[test]
    fn bilstm_checkpoint_round_trip() {
        let corpus = toy_corpus();
        let (m, _) = train_bilstm(
            &corpus,
            &BiLstmConfig {
                epochs: 1,
                ..tiny_bilstm()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = BiLstmClassifier::load(dir.path()).unwrap();
        assert_eq!(back.params, m.params);
        assert_eq!(
            back.predict(corpus.articles()).unwrap(),
            m.predict(corpus.articles()).unwrap()
        );
        assert!(matches!(SiameseModel::load(dir.path()), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = toy_corpus();
        let cfg = BiLstmConfig {
            epochs: 2,
            dropout: 0.5,
            ..tiny_bilstm()
        };
        let (a, _) = train_bilstm(&corpus, &cfg).unwrap();
        let (b, _) = train_bilstm(&corpus, &cfg).unwrap();
        assert_eq!(a.params, b.params);
    }

    fn tiny_head() -> EncoderHeadConfig {
        EncoderHeadConfig {
            embed_dim: 8,
            hidden_dim: 8,
            encoder_dim: 8,
            dense: 8,
            max_len: 16,
            epochs: 200,
            batch_size: 20,
            lr: 1e-2,
            ..EncoderHeadConfig::desk()
        }
    }

    #[test]
    fn encoder_head_overfits_and_needs_separator() {
        let corpus = toy_corpus();
        let (m, _) = train_encoder_head(&corpus, &tiny_head()).unwrap();
        assert_eq!(accuracy(&m.predict(corpus.articles()).unwrap(), &corpus), 1.0);
        let docs = [prepare("a b c")];
        let plain = Vocabulary::build(&docs, 10).unwrap();
        assert!(EncoderHeadModel::new(tiny_head(), plain).is_err());
    }

    struct ConstEncoder;

    impl SequenceEncoder for ConstEncoder {
        fn encode(&self, g: &mut Graph, batch: &SeqBatch) -> GraphResult<Var> {
            g.constant(Tensor::zeros(&[batch.batch, 3]))
        }

        fn output_dim(&self) -> usize {
            3
        }
    }

    #[test]
    fn head_accepts_any_encoder_and_ties_go_to_non_clickbait() {
        let mut store = ParamStore::new();
        let mut rng = seeded_rng(0);
        let head = ClassHead::new(&mut store, 3, 4, 0.2, &mut rng);
        // Zero the output layer so both classes get probability 0.5.
        for name in ["head.out.w", "head.out.b"] {
            let id = store.id(name).unwrap();
            store.get_mut(id).data_mut().fill(0.0);
        }
        let mut g = Graph::new(&store);
        let batch = SeqBatch::from_encoded(&[&Encoded {
            ids: vec![2],
            mask: vec![1],
        }]);
        let p = head.forward(&mut g, &ConstEncoder, &batch, false, &mut rng).unwrap();
        let s = probs_to_scored(&g, p);
        assert_eq!(s[0].clickbait_score, 0.5);
        assert_eq!(s[0].label, NCB);
        assert_eq!(label_from_probs([0.5, 0.5]), NCB);
    }

    #[test]
    fn loss_cases_are_exact() {
        let u = [0.6, 0.8];
        let orth = [-0.8, 0.6];
        let opp = [-0.6, -0.8];
        assert_eq!(contrastive_loss(&[(&u, &u, NCB)], 1.0).unwrap(), 0.0);
        assert_eq!(contrastive_loss(&[(&u, &u, CB)], 1.0).unwrap(), 1.0);
        assert!(contrastive_loss(&[(&u, &orth, CB)], 1.0).unwrap().abs() < 1e-12);
        assert!(cosine_dissimilarity(&u, &u).unwrap().abs() < 1e-12);
        assert!((cosine_dissimilarity(&u, &orth).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_dissimilarity(&u, &opp).unwrap() - 2.0).abs() < 1e-12);
        assert!(cosine_dissimilarity(&u, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn graph_loss_matches_scalar_loss() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let a = Tensor::from_rows(&[vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![0.6, 0.8], vec![0.0, 1.0], vec![0.6, 0.8]]).unwrap();
        let (va, vb) = (g.constant(a.clone()).unwrap(), g.constant(b.clone()).unwrap());
        let l = contrastive_loss_graph(&mut g, va, vb, &[1, 0, 0], 1.0).unwrap();
        let pairs: Vec<(&[f64], &[f64], Label)> = (0..3).map(|i| (a.row(i), b.row(i), [NCB, CB, CB][i])).collect();
        assert!((g.value(l).item() - contrastive_loss(&pairs, 1.0).unwrap()).abs() < 1e-12);
        assert!(contrastive_loss_graph(&mut g, va, vb, &[2, 0, 0], 1.0).is_err());
    }

    #[test]
    fn predict_rule() {
        let s = contrastive_predict(0.9, 0.75);
        assert_eq!(s.label, NCB);
        assert!((s.clickbait_score - 0.05).abs() < 1e-12);
        let s = contrastive_predict(0.3, 0.75);
        assert_eq!(s.label, CB);
        assert!((s.clickbait_score - 0.35).abs() < 1e-12);
        assert_eq!(contrastive_predict(0.75, 0.75).label, NCB);
    }

    fn tiny_siamese() -> ContrastiveConfig {
        ContrastiveConfig {
            embed_dim: 8,
            hidden_dim: 8,
            output_dim: 6,
            max_len: 16,
            epochs: 0,
            ..ContrastiveConfig::desk()
        }
    }

    #[test]
    fn siamese_encoding_contract() {
        let corpus = toy_corpus();
        let (m, _) = train_contrastive(&corpus, &tiny_siamese()).unwrap();
        let v = m.embed("wow shock secret").unwrap();
        assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-9);
        assert_eq!(v, m.embed("wow shock secret").unwrap());
        // Extra padding beyond the real tokens does not matter.
        let short = m.encode_text("wow shock secret");
        let mut long = short.clone();
        long.ids.extend([0; 7]);
        long.mask.extend([0; 7]);
        let mut g = Graph::new(&m.params);
        let a = m.encode(&mut g, &[&short]).unwrap();
        let b = m.encode(&mut g, &[&long]).unwrap();
        assert_eq!(g.value(a).data(), g.value(b).data());
        let empty = Encoded {
            ids: vec![0; 4],
            mask: vec![0; 4],
        };
        assert!(m.encode(&mut g, &[&empty]).is_err());
    }

    #[test]
    fn contrastive_gradients_match_finite_differences() {
        let corpus = toy_corpus();
        let (m, _) = train_contrastive(&corpus, &tiny_siamese()).unwrap();
        let arts = &corpus.articles()[..2];
        let t: Vec<Encoded> = arts.iter().map(|a| m.encode_text(&a.title)).collect();
        let c: Vec<Encoded> = arts.iter().map(|a| m.encode_text(&a.content)).collect();
        let (tr, cr): (Vec<&Encoded>, Vec<&Encoded>) = (t.iter().collect(), c.iter().collect());
        let r = check_gradients(&m.params, |g| m.loss(g, &tr, &cr, &[0, 1]), &GradCheckConfig::default()).unwrap();
        assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(3)]);
    }

    #[test]
    fn contrastive_training_round_trips() {
        let corpus = toy_corpus();
        let cfg = ContrastiveConfig {
            epochs: 60,
            batch_size: 5,
            ..tiny_siamese()
        };
        let (m, report) = train_contrastive(&corpus, &cfg).unwrap();
        assert!(report.epoch_losses.iter().all(|l| *l >= 0.0));
        let sims = m.similarities(corpus.articles()).unwrap();
        let labels = corpus.labels().unwrap();
        let mean = |want: Label| {
            let v: Vec<f64> = sims
                .iter()
                .zip(&labels)
                .filter(|p| *p.1 == want)
                .map(|p| *p.0)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        // Titles and contents share vocabulary in both classes here, so only
        // check that training keeps similarities finite and bounded.
        assert!(mean(NCB).is_finite() && mean(CB).is_finite());
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(
            SiameseModel::load(dir.path())
                .unwrap()
                .similarities(corpus.articles())
                .unwrap(),
            sims
        );
    }

    #[test]
    fn pretrained_vectors_fill_rows() {
        let docs = [prepare("alpha beta gamma")];
        let vocab = Vocabulary::build(&docs, 10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vec.txt");
        std::fs::write(&p, "2 3\nbeta 1 2 3\nzeta 4 5 6\n").unwrap();
        let mut table = Tensor::zeros(&[vocab.len(), 3]);
        assert_eq!(load_pretrained_embeddings(&p, &vocab, &mut table).unwrap(), 1);
        assert_eq!(table.row(vocab.id("beta")), &[1.0, 2.0, 3.0]);
        std::fs::write(&p, "beta 1 2\n").unwrap();
        assert!(load_pretrained_embeddings(&p, &vocab, &mut table).is_err());
    }

    proptest! {
        #[test]
        fn loss_bounds_on_random_unit_vectors(
            raw in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 4), prop::collection::vec(-1.0f64..1.0, 4), any::<bool>()), 1..8)
        ) {
            let unit = |v: &Vec<f64>| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect::<Vec<_>>()
            };
            prop_assume!(raw.iter().all(|r| r.0.iter().any(|x| *x != 0.0) && r.1.iter().any(|x| *x != 0.0)));
            let vecs: Vec<(Vec<f64>, Vec<f64>, Label)> =
                raw.iter().map(|r| (unit(&r.0), unit(&r.1), if r.2 { NCB } else { CB })).collect();
            let pairs: Vec<(&[f64], &[f64], Label)> = vecs.iter().map(|v| (&v.0[..], &v.1[..], v.2)).collect();
            let l = contrastive_loss(&pairs, 1.0).unwrap();
            prop_assert!((0.0..=2.0).contains(&l));
            for v in &vecs {
                let d = cosine_dissimilarity(&v.0, &v.1).unwrap();
                prop_assert!((-1e-12..=2.0 + 1e-12).contains(&d));
            }
        }

        #[test]
        fn predict_label_depends_only_on_threshold(s in -1.0f64..=1.0, t in -1.0f64..=1.0) {
            let p = contrastive_predict(s, t);
            prop_assert_eq!(p.label == NCB, s >= t);
            prop_assert!((0.0..=1.0).contains(&p.clickbait_score));
        }
    }
}
