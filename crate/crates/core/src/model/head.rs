use rand::Rng;

use crate::error::{Error, Result};

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Fully connected layer `W h + b` with `W` row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            w: vec![0.0; inputs * outputs],
            b: vec![0.0; outputs],
        }
    }

    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut l = Self::zeros(inputs, outputs);
        l.w.iter_mut()
            .for_each(|w| *w = rng.gen_range(-bound..bound));
        l
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.w
            .chunks_exact(self.inputs)
            .zip(&self.b)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], d_out: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; self.inputs];
        for (o, &g) in d_out.iter().enumerate() {
            grad.b[o] += g;
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad.w[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
        dx
    }
}

/// Output layer of the model: `L` class probabilities per node, or the
/// probability of a link from the concatenated endpoint vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskHead {
    /// `L x d` followed by softmax.
    NodeClass(Dense),
    /// `2 x 2d` followed by softmax; class 1 means "edge".
    Link(Dense),
}

impl TaskHead {
    pub fn node_class<R: Rng>(dim: usize, classes: usize, rng: &mut R) -> Result<Self> {
        if classes < 2 {
            return Err(Error::invalid(format!(
                "node classification needs at least 2 classes, got {classes}"
            )));
        }
        Ok(TaskHead::NodeClass(Dense::init(dim, classes, rng)))
    }

    pub fn link<R: Rng>(dim: usize, rng: &mut R) -> Self {
        TaskHead::Link(Dense::init(2 * dim, 2, rng))
    }

    pub fn dense(&self) -> &Dense {
        match self {
            TaskHead::NodeClass(l) | TaskHead::Link(l) => l,
        }
    }

    pub fn dense_mut(&mut self) -> &mut Dense {
        match self {
            TaskHead::NodeClass(l) | TaskHead::Link(l) => l,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let l = self.dense();
        let z = Dense::zeros(l.inputs, l.outputs);
        match self {
            TaskHead::NodeClass(_) => TaskHead::NodeClass(z),
            TaskHead::Link(_) => TaskHead::Link(z),
        }
    }

    /// Number of classes (2 for the link head).
    pub fn classes(&self) -> usize {
        self.dense().outputs
    }
}

/// Mean categorical cross-entropy of the true classes, with `log` clamped
/// at `1e-15`.
pub fn loss_node_classification(probabilities: &[Vec<f64>], classes: &[usize]) -> f64 {
    assert_eq!(probabilities.len(), classes.len());
    let n = probabilities.len().max(1) as f64;
    probabilities
        .iter()
        .zip(classes)
        .map(|(p, &c)| -p[c].max(1e-15).ln())
        .sum::<f64>()
        / n
}

/// Mean binary cross-entropy, with `log` clamped at `1e-15`.
pub fn loss_link_prediction(probabilities: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(probabilities.len(), labels.len());
    let n = probabilities.len().max(1) as f64;
    probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| -(if y { p } else { 1.0 - p }).max(1e-15).ln())
        .sum::<f64>()
        / n
}
