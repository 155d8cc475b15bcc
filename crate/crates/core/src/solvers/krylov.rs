use super::sparse::{norm2, CsrMatrix};
use crate::error::{Error, Result};

/// Block-Jacobi preconditioner with dense inverted diagonal blocks.
#[derive(Clone, Debug)]
pub struct BlockJacobi {
    block: usize,
    inverses: Vec<Vec<f64>>,
}

impl BlockJacobi {
    /// A trailing partial block is used when `block` does not divide the size.
    pub fn new(a: &CsrMatrix, block: usize) -> Result<Self> {
        let n = a.nrows();
        let block = block.max(1);
        let mut inverses = Vec::with_capacity(n.div_ceil(block));
        let mut start = 0;
        while start < n {
            let b = block.min(n - start);
            let mut m = vec![0.0; b * b];
            for r in 0..b {
                for (j, v) in a.row(start + r) {
                    if j >= start && j < start + b {
                        m[r * b + (j - start)] = v;
                    }
                }
            }
            inverses.push(invert_dense(&m, b).ok_or(Error::SingularMatrix { column: start })?);
            start += b;
        }
        Ok(BlockJacobi { block, inverses })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        for (bi, inv) in self.inverses.iter().enumerate() {
            let s = bi * self.block;
            let b = (inv.len() as f64).sqrt() as usize;
            for i in 0..b {
                z[s + i] = (0..b).map(|j| inv[i * b + j] * r[s + j]).sum();
            }
        }
    }
}

fn invert_dense(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))?;
        if a[p * n + c] == 0.0 {
            return None;
        }
        for k in 0..n {
            a.swap(c * n + k, p * n + k);
            inv.swap(c * n + k, p * n + k);
        }
        let d = a[c * n + c];
        for k in 0..n {
            a[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r * n + c];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[c * n + k];
                        inv[r * n + k] -= f * inv[c * n + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned BiCGStab. Stops when `|b - Ax| / |b| <= tol`.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    precond: &BlockJacobi,
    tol: f64,
    max_iter: usize,
) -> Result<KrylovReport> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let ax = a.mul_vec(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut res = norm2(&r) / bnorm;
    for it in 1..=max_iter {
        if res <= tol {
            return Ok(KrylovReport {
                iterations: it - 1,
                relative_residual: res,
            });
        }
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(&p, &mut phat);
        v = a.mul_vec(&phat);
        let r0v = dot(&r0, &v);
        if r0v == 0.0 {
            break;
        }
        alpha = rho / r0v;
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm2(&s) / bnorm <= tol {
            x.iter_mut().zip(&phat).for_each(|(x, p)| *x += alpha * p);
            let ax = a.mul_vec(x);
            res = b
                .iter()
                .zip(&ax)
                .map(|(b, a)| (b - a).powi(2))
                .sum::<f64>()
                .sqrt()
                / bnorm;
            if res <= tol {
                return Ok(KrylovReport {
                    iterations: it,
                    relative_residual: res,
                });
            }
            r = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            continue;
        }
        precond.apply(&s, &mut shat);
        let t = a.mul_vec(&shat);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / bnorm;
    }
    let ax = a.mul_vec(x);
    res = b
        .iter()
        .zip(&ax)
        .map(|(b, a)| (b - a).powi(2))
        .sum::<f64>()
        .sqrt()
        / bnorm;
    if res <= tol {
        return Ok(KrylovReport {
            iterations: max_iter,
            relative_residual: res,
        });
    }
    Err(Error::LinearSolverStagnation {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::sparse::TripletMatrix;
    use rand::{Rng, SeedableRng};

    #[test]
    fn random_spd_meets_tolerance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let mut m = vec![0.0; n * n];
        for v in m.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        // A = M M^T + n I
        let mut t = TripletMatrix::new(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|k| m[i * n + k] * m[j * n + k]).sum();
                if i == j {
                    s += n as f64;
                }
                t.push(i, j, s);
            }
        }
        let a = t.to_csr();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; n];
        let pc = BlockJacobi::new(&a, 2).unwrap();
        let rep = bicgstab(&a, &b, &mut x, &pc, 1e-10, 500).unwrap();
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = ax.iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) / norm2(&b) <= 1e-10, "{rep:?}");
    }

    #[test]
    fn block_inverse() {
        let inv = invert_dense(&[0.0, 2.0, 4.0, 0.0], 2).unwrap();
        assert_eq!(inv, vec![0.0, 0.25, 0.5, 0.0]);
        assert!(invert_dense(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
    }
}
