//! Small dense row-major matrix helpers and a one-sided Jacobi SVD.

/// `a (n x k) * b (k x m)`.
pub fn matmul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for l in 0..k {
            let x = a[i * k + l];
            if x == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += x * b[l * m + j];
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    out
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Determinant by partial-pivot LU.
pub fn determinant(a: &[f64], d: usize) -> f64 {
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..d {
        let pivot = (c..d)
            .max_by(|&i, &j| m[i * d + c].abs().total_cmp(&m[j * d + c].abs()))
            .expect("non-empty range");
        if m[pivot * d + c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            for j in 0..d {
                m.swap(c * d + j, pivot * d + j);
            }
            det = -det;
        }
        let p = m[c * d + c];
        det *= p;
        for i in c + 1..d {
            let f = m[i * d + c] / p;
            for j in c..d {
                m[i * d + j] -= f * m[c * d + j];
            }
        }
    }
    det
}

/// `a = u * diag(s) * vᵀ` for a square `d x d` matrix; `s` is descending and
/// `u`, `v` are orthogonal even when `a` is rank deficient.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub sweeps: usize,
}

pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// One-sided (Hestenes) Jacobi SVD of a row-major `d x d` matrix.
pub fn svd_jacobi(a: &[f64], d: usize) -> Svd {
    assert_eq!(a.len(), d * d);
    // Columns of `w` converge to u_j * s_j.
    let mut w = a.to_vec();
    let mut v = identity(d);
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..d {
                    let (x, y) = (w[i * d + p], w[i * d + q]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for i in 0..d {
                        let (x, y) = (m[i * d + p], m[i * d + q]);
                        m[i * d + p] = c * x - s * y;
                        m[i * d + q] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..d)
        .map(|j| (0..d).map(|i| w[i * d + j].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let scale = norms.iter().copied().fold(0.0, f64::max);
    let cutoff = scale * d as f64 * f64::EPSILON;

    let mut u = vec![0.0; d * d];
    let mut vs = vec![0.0; d * d];
    let mut s = vec![0.0; d];
    let mut filled = Vec::with_capacity(d);
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        for i in 0..d {
            vs[i * d + k] = v[i * d + j];
        }
        if norms[j] > cutoff {
            for i in 0..d {
                u[i * d + k] = w[i * d + j] / norms[j];
            }
            filled.push(k);
        }
    }
    complete_orthonormal(&mut u, d, &filled);
    Svd {
        u,
        s,
        v: vs,
        sweeps,
    }
}

/// Fills the columns of `u` not listed in `filled` with an orthonormal
/// completion via Gram-Schmidt against the standard basis.
fn complete_orthonormal(u: &mut [f64], d: usize, filled: &[usize]) {
    let mut have: Vec<usize> = filled.to_vec();
    let missing: Vec<usize> = (0..d).filter(|k| !filled.contains(k)).collect();
    let mut basis = 0;
    for k in missing {
        loop {
            let mut cand = vec![0.0; d];
            cand[basis % d] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for &h in &have {
                    let dot: f64 = (0..d).map(|i| cand[i] * u[i * d + h]).sum();
                    for i in 0..d {
                        cand[i] -= dot * u[i * d + h];
                    }
                }
            }
            let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for i in 0..d {
                    u[i * d + k] = cand[i] / norm;
                }
                have.push(k);
                break;
            }
            assert!(basis < 2 * d + d, "orthonormal completion failed");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn reconstruct(svd: &Svd, d: usize) -> Vec<f64> {
        let mut us = svd.u.clone();
        for i in 0..d {
            for j in 0..d {
                us[i * d + j] *= svd.s[j];
            }
        }
        matmul(&us, &transpose(&svd.v, d, d), d, d, d)
    }

    fn orth_err(m: &[f64], d: usize) -> f64 {
        let mtm = matmul(&transpose(m, d, d), m, d, d, d);
        let diff: Vec<f64> = mtm.iter().zip(identity(d)).map(|(a, b)| a - b).collect();
        frobenius(&diff)
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for d in 1..8 {
            let a: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let svd = svd_jacobi(&a, d);
            let back = reconstruct(&svd, d);
            let err: f64 = a
                .iter()
                .zip(&back)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "d={d} err={err}");
            let ue = orth_err(&svd.u, d);
            assert!(ue < 1e-10, "d={d} u err {ue:e} s={:?}", svd.s);
            assert!(orth_err(&svd.v, d) < 1e-10);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_still_orthogonal() {
        // Rank 1.
        let a = vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 0.0];
        let svd = svd_jacobi(&a, 3);
        assert!(orth_err(&svd.u, 3) < 1e-12);
        assert!(orth_err(&svd.v, 3) < 1e-12);
        assert!(svd.s[1].abs() < 1e-12);
        let zero = svd_jacobi(&[0.0; 4], 2);
        assert!(orth_err(&zero.u, 2) < 1e-12);
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&identity(3), 3), 1.0);
        assert!((determinant(&[0.0, 1.0, 1.0, 0.0], 2) + 1.0).abs() < 1e-15);
        assert!((determinant(&[2.0, 1.0, 1.0, 3.0], 2) - 5.0).abs() < 1e-12);
        assert_eq!(determinant(&[1.0, 2.0, 2.0, 4.0], 2), 0.0);
    }
}
