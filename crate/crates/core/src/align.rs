//! Orthogonal Procrustes alignment of consecutive snapshot embeddings.
//!
//! Independently trained embeddings of similar graphs differ by an
//! arbitrary orthogonal transform. Each step is rotated onto the already
//! aligned previous step using the nodes both steps share.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{determinant, frobenius, identity, matmul, svd_jacobi, transpose};

/// A `d x d` orthogonal matrix aligning step `timestep` onto its
/// predecessor, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    pub dim: usize,
    pub timestep: usize,
    pub values: Vec<f64>,
}

impl RotationMatrix {
    pub fn identity(dim: usize, timestep: usize) -> Self {
        Self {
            dim,
            timestep,
            values: identity(dim),
        }
    }

    pub fn determinant(&self) -> f64 {
        determinant(&self.values, self.dim)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.values.chunks_exact(self.dim) {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// `‖RᵀR − I‖_F`.
pub fn orthogonality_residual(r: &RotationMatrix) -> f64 {
    let d = r.dim;
    let rtr = matmul(&transpose(&r.values, d, d), &r.values, d, d, d);
    let diff: Vec<f64> = rtr.iter().zip(identity(d)).map(|(a, b)| a - b).collect();
    frobenius(&diff)
}

/// Gradient refinement of the penalized objective
/// `‖R·Q_next − Q_prev‖² + λ‖RᵀR − I‖²`, started from the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyRefinement {
    pub lambda: f64,
    pub steps: usize,
    pub step_size: f64,
}

impl Default for PenaltyRefinement {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            steps: 100,
            step_size: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignOptions {
    /// Flip the weakest singular direction when needed so that
    /// `det(R) = +1`.
    pub proper_rotation: bool,
    pub refine: Option<PenaltyRefinement>,
}

/// `(Σ prev_j next_jᵀ, shared count)` over nodes present in both.
fn cross_covariance(next: &EmbeddingMatrix, prev: &EmbeddingMatrix) -> (Vec<f64>, usize) {
    let d = next.dim();
    let mut m = vec![0.0; d * d];
    let mut shared = 0;
    for (j, &node) in next.columns().iter().enumerate() {
        let Some(p) = prev.get(node) else { continue };
        let n = next.column_at(j);
        shared += 1;
        for a in 0..d {
            for b in 0..d {
                m[a * d + b] += p[a] * n[b];
            }
        }
    }
    (m, shared)
}

/// Closed-form orthogonal `R` minimizing `‖R·Q_next − Q_prev‖_F` over the
/// nodes present in both matrices.
pub fn procrustes_align(next: &EmbeddingMatrix, prev: &EmbeddingMatrix) -> Result<RotationMatrix> {
    procrustes_align_with(next, prev, &AlignOptions::default())
}

pub fn procrustes_align_with(
    next: &EmbeddingMatrix,
    prev: &EmbeddingMatrix,
    opts: &AlignOptions,
) -> Result<RotationMatrix> {
    let d = next.dim();
    if prev.dim() != d {
        return Err(Error::invalid(format!(
            "cannot align dimension {d} onto dimension {}",
            prev.dim()
        )));
    }
    let (m, shared) = cross_covariance(next, prev);
    if shared == 0 {
        return Err(Error::invalid(format!(
            "steps {} and {} share no nodes; alignment is undefined",
            next.timestep(),
            prev.timestep()
        )));
    }
    if shared < d {
        log::warn!(
            "aligning step {} on only {shared} shared nodes (< d = {d}); the rotation is not unique",
            next.timestep()
        );
    }
    let mut svd = svd_jacobi(&m, d);
    let mut values = matmul(&svd.u, &transpose(&svd.v, d, d), d, d, d);
    if opts.proper_rotation && determinant(&values, d) < 0.0 {
        for i in 0..d {
            svd.u[i * d + d - 1] = -svd.u[i * d + d - 1];
        }
        values = matmul(&svd.u, &transpose(&svd.v, d, d), d, d, d);
    }
    let mut r = RotationMatrix {
        dim: d,
        timestep: next.timestep(),
        values,
    };
    if let Some(refine) = opts.refine {
        refine_penalized(&mut r, next, prev, &refine);
    }
    if r.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("in rotation for step {}", r.timestep),
        });
    }
    Ok(r)
}

/// Penalized alignment objective over shared nodes.
pub fn penalized_objective(
    r: &[f64],
    next: &EmbeddingMatrix,
    prev: &EmbeddingMatrix,
    lambda: f64,
) -> f64 {
    let d = next.dim();
    let mut fit = 0.0;
    for (j, &node) in next.columns().iter().enumerate() {
        let Some(p) = prev.get(node) else { continue };
        let n = next.column_at(j);
        for a in 0..d {
            let rn: f64 = (0..d).map(|b| r[a * d + b] * n[b]).sum();
            fit += (rn - p[a]).powi(2);
        }
    }
    let rtr = matmul(&transpose(r, d, d), r, d, d, d);
    let pen: f64 = rtr
        .iter()
        .zip(identity(d))
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    fit + lambda * pen
}

fn refine_penalized(
    r: &mut RotationMatrix,
    next: &EmbeddingMatrix,
    prev: &EmbeddingMatrix,
    cfg: &PenaltyRefinement,
) {
    let d = r.dim;
    let (m, _) = cross_covariance(next, prev);
    // Σ n_j n_jᵀ over shared nodes.
    let mut nn = vec![0.0; d * d];
    for (j, &node) in next.columns().iter().enumerate() {
        if !prev.contains(node) {
            continue;
        }
        let n = next.column_at(j);
        for a in 0..d {
            for b in 0..d {
                nn[a * d + b] += n[a] * n[b];
            }
        }
    }
    for _ in 0..cfg.steps {
        let rnn = matmul(&r.values, &nn, d, d, d);
        let rtr = matmul(&transpose(&r.values, d, d), &r.values, d, d, d);
        let off: Vec<f64> = rtr.iter().zip(identity(d)).map(|(a, b)| a - b).collect();
        let pen = matmul(&r.values, &off, d, d, d);
        for i in 0..d * d {
            let grad = 2.0 * (rnn[i] - m[i]) + 4.0 * cfg.lambda * pen[i];
            r.values[i] -= cfg.step_size * grad;
        }
    }
}

/// Aligned matrices plus the rotation used at each step (identity first).
#[derive(Debug, Clone)]
pub struct AlignedSeries {
    pub matrices: Vec<EmbeddingMatrix>,
    pub rotations: Vec<RotationMatrix>,
}

/// Chains Procrustes alignments: step `k+1` is rotated onto the already
/// aligned step `k`, and the rotation is applied to all of its columns,
/// including nodes new at `k+1`.
pub fn align_series(mats: &[EmbeddingMatrix]) -> Result<Vec<EmbeddingMatrix>> {
    align_series_with(mats, &AlignOptions::default()).map(|a| a.matrices)
}

pub fn align_series_with(mats: &[EmbeddingMatrix], opts: &AlignOptions) -> Result<AlignedSeries> {
    let first = mats
        .first()
        .ok_or_else(|| Error::invalid("cannot align an empty series"))?;
    let d = first.dim();
    let mut matrices = vec![first.clone()];
    let mut rotations = vec![RotationMatrix::identity(d, first.timestep())];
    for next in &mats[1..] {
        if next.dim() != d {
            return Err(Error::invalid(
                "embedding dimensions differ across the series",
            ));
        }
        let prev = matrices.last().expect("seeded with the first matrix");
        let r = procrustes_align_with(next, prev, opts)?;
        matrices.push(next.rotated(&r.values));
        rotations.push(r);
    }
    Ok(AlignedSeries {
        matrices,
        rotations,
    })
}
