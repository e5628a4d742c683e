use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::alias::AliasTable;
use super::matrix::EmbeddingMatrix;
use super::walk::WalkCorpus;
use crate::error::{Error, Result};
use crate::graph::NodeIndex;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    /// Every node within this many positions of the center is a context.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial SGD step, decayed linearly to ~0 over training.
    pub learning_rate: f64,
    pub seed: u64,
    /// Lock-free multi-threaded updates. Results then depend on thread
    /// scheduling; leave off for reproducible runs.
    pub parallel: bool,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            parallel: false,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid("embedding dimension must be at least 2"));
        }
        if self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::invalid(
                "window, negatives and epochs must all be at least 1",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("skip-gram learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramOutcome {
    pub embedding: EmbeddingMatrix,
    /// Mean negative-sampling loss per (center, context) pair, per epoch.
    pub epoch_loss: Vec<f64>,
}

/// Trains skip-gram with negative sampling on `corpus` and returns the
/// center (input) vectors as the step-`timestep` embedding.
pub fn train_skipgram(
    corpus: &WalkCorpus,
    cfg: &SkipGramConfig,
    nodes: &Arc<NodeIndex>,
    timestep: usize,
) -> Result<EmbeddingMatrix> {
    train_skipgram_traced(corpus, cfg, nodes, timestep).map(|o| o.embedding)
}

pub fn train_skipgram_traced(
    corpus: &WalkCorpus,
    cfg: &SkipGramConfig,
    nodes: &Arc<NodeIndex>,
    timestep: usize,
) -> Result<SkipGramOutcome> {
    cfg.validate()?;
    if corpus.token_count() == 0 {
        return Err(Error::invalid("cannot train skip-gram on an empty corpus"));
    }
    let n = nodes.len();
    let mut counts = vec![0u64; n];
    for &v in corpus.walks.iter().flatten() {
        let slot = counts.get_mut(v as usize).ok_or_else(|| {
            Error::invalid(format!(
                "walk visits node {v}, which is not in the node index"
            ))
        })?;
        *slot += 1;
    }
    let vocab: Vec<u32> = (0..n as u32).filter(|&v| counts[v as usize] > 0).collect();
    let mut local = vec![u32::MAX; n];
    for (i, &v) in vocab.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    let walks: Vec<Vec<u32>> = corpus
        .walks
        .iter()
        .map(|w| w.iter().map(|&v| local[v as usize]).collect())
        .collect();
    let noise_weights: Vec<f64> = vocab
        .iter()
        .map(|&v| (counts[v as usize] as f64).powf(0.75))
        .collect();
    let noise = AliasTable::new(&noise_weights).expect("corpus is non-empty");

    let d = cfg.dim;
    let mut init_rng = seed::rng(cfg.seed, "skipgram.init", 0);
    let bound = 0.5 / d as f64;
    let input: Vec<f64> = (0..vocab.len() * d)
        .map(|_| init_rng.gen_range(-bound..bound))
        .collect();
    let output = vec![0.0; vocab.len() * d];

    let total_work = (cfg.epochs * corpus.token_count()) as f64;
    let trainer = Trainer {
        cfg,
        noise: &noise,
        total_work,
    };
    let (input, epoch_loss) = if cfg.parallel {
        trainer.run_parallel(&walks, input, output)
    } else {
        trainer.run_serial(&walks, input, output)
    };

    let embedding = EmbeddingMatrix::new(Arc::clone(nodes), timestep, d, vocab, input)?;
    Ok(SkipGramOutcome {
        embedding,
        epoch_loss,
    })
}

/// Row storage that the SGD kernel reads and updates.
trait Rows {
    fn read(&self, row: usize, buf: &mut [f64]);
    fn add(&self, row: usize, delta: &[f64], scale: f64);
}

struct Serial<'a>(std::cell::RefCell<&'a mut [f64]>);

impl Rows for Serial<'_> {
    fn read(&self, row: usize, buf: &mut [f64]) {
        let d = buf.len();
        buf.copy_from_slice(&self.0.borrow()[row * d..(row + 1) * d]);
    }

    fn add(&self, row: usize, delta: &[f64], scale: f64) {
        let d = delta.len();
        let mut data = self.0.borrow_mut();
        for (x, y) in data[row * d..(row + 1) * d].iter_mut().zip(delta) {
            *x += scale * y;
        }
    }
}

/// f64 bits in relaxed atomics: racy (Hogwild) but free of undefined
/// behaviour.
struct Shared(Vec<AtomicU64>);

impl Shared {
    fn new(v: Vec<f64>) -> Self {
        Shared(v.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect())
    }

    fn into_inner(self) -> Vec<f64> {
        self.0
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}

impl Rows for Shared {
    fn read(&self, row: usize, buf: &mut [f64]) {
        let d = buf.len();
        for (b, a) in buf.iter_mut().zip(&self.0[row * d..(row + 1) * d]) {
            *b = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add(&self, row: usize, delta: &[f64], scale: f64) {
        let d = delta.len();
        for (a, y) in self.0[row * d..(row + 1) * d].iter().zip(delta) {
            let x = f64::from_bits(a.load(Ordering::Relaxed)) + scale * y;
            a.store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

struct Trainer<'a> {
    cfg: &'a SkipGramConfig,
    noise: &'a AliasTable,
    total_work: f64,
}

struct Scratch {
    center: Vec<f64>,
    other: Vec<f64>,
    grad: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self {
            center: vec![0.0; d],
            other: vec![0.0; d],
            grad: vec![0.0; d],
        }
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

impl Trainer<'_> {
    fn learning_rate(&self, processed: usize) -> f64 {
        self.cfg.learning_rate * (1.0 - processed as f64 / self.total_work).max(1e-4)
    }

    /// One pass over a walk. Returns (loss sum, pair count).
    fn train_walk<R: Rng>(
        &self,
        walk: &[u32],
        input: &impl Rows,
        output: &impl Rows,
        lr: f64,
        rng: &mut R,
        s: &mut Scratch,
    ) -> (f64, usize) {
        let k = self.cfg.window;
        let mut loss = 0.0;
        let mut pairs = 0;
        for (i, &center) in walk.iter().enumerate() {
            let lo = i.saturating_sub(k);
            let hi = (i + k + 1).min(walk.len());
            for (j, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                if j == i {
                    continue;
                }
                input.read(center as usize, &mut s.center);
                s.grad.iter_mut().for_each(|g| *g = 0.0);
                for n in 0..=self.cfg.negatives {
                    let (target, label) = if n == 0 {
                        (context as usize, 1.0)
                    } else {
                        let t = self.noise.sample(rng);
                        if t == context as usize {
                            continue;
                        }
                        (t, 0.0)
                    };
                    output.read(target, &mut s.other);
                    let f: f64 = s.center.iter().zip(&s.other).map(|(a, b)| a * b).sum();
                    loss -= if label > 0.0 {
                        log_sigmoid(f)
                    } else {
                        log_sigmoid(-f)
                    };
                    let g = (label - 1.0 / (1.0 + (-f).exp())) * lr;
                    for (acc, o) in s.grad.iter_mut().zip(&s.other) {
                        *acc += g * o;
                    }
                    output.add(target, &s.center, g);
                }
                input.add(center as usize, &s.grad, 1.0);
                pairs += 1;
            }
        }
        (loss, pairs)
    }

    fn run_serial(
        &self,
        walks: &[Vec<u32>],
        mut input: Vec<f64>,
        mut output: Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>) {
        let d = self.cfg.dim;
        let mut trace = Vec::with_capacity(self.cfg.epochs);
        {
            let inp = Serial(std::cell::RefCell::new(&mut input[..]));
            let out = Serial(std::cell::RefCell::new(&mut output[..]));
            let mut scratch = Scratch::new(d);
            let mut processed = 0;
            for epoch in 0..self.cfg.epochs {
                let mut rng = seed::rng(self.cfg.seed, "skipgram.noise", epoch as u64);
                let (mut loss, mut pairs) = (0.0, 0);
                for walk in walks {
                    let lr = self.learning_rate(processed);
                    let (l, p) = self.train_walk(walk, &inp, &out, lr, &mut rng, &mut scratch);
                    loss += l;
                    pairs += p;
                    processed += walk.len();
                }
                trace.push(loss / pairs.max(1) as f64);
            }
        }
        (input, trace)
    }

    fn run_parallel(
        &self,
        walks: &[Vec<u32>],
        input: Vec<f64>,
        output: Vec<f64>,
    ) -> (Vec<f64>, Vec<f64>) {
        let d = self.cfg.dim;
        let inp = Shared::new(input);
        let out = Shared::new(output);
        let processed = AtomicUsize::new(0);
        let mut trace = Vec::with_capacity(self.cfg.epochs);
        let chunk = walks
            .len()
            .div_ceil(rayon::current_num_threads() * 4)
            .max(1);
        for epoch in 0..self.cfg.epochs {
            let (loss, pairs) = walks
                .par_chunks(chunk)
                .enumerate()
                .map(|(c, part)| {
                    let mut rng = seed::rng(
                        self.cfg.seed,
                        "skipgram.noise",
                        ((epoch as u64) << 32) | c as u64,
                    );
                    let mut scratch = Scratch::new(d);
                    let (mut loss, mut pairs) = (0.0, 0);
                    for walk in part {
                        let lr = self.learning_rate(processed.load(Ordering::Relaxed));
                        let (l, p) = self.train_walk(walk, &inp, &out, lr, &mut rng, &mut scratch);
                        loss += l;
                        pairs += p;
                        processed.fetch_add(walk.len(), Ordering::Relaxed);
                    }
                    (loss, pairs)
                })
                .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            trace.push(loss / pairs.max(1) as f64);
        }
        (inp.into_inner(), trace)
    }
}
