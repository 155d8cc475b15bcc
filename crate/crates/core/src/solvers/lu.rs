//! Left-looking sparse LU with partial pivoting (Gilbert-Peierls).
//!
//! Columns of `L` and `U` are computed one at a time by a sparse triangular
//! solve whose nonzero pattern comes from a depth-first reach over the
//! graph of `L`. Pivoting prefers the diagonal while it stays within a
//! threshold of the column maximum.

use super::sparse::{norm_inf, CsrMatrix};
use crate::error::{Error, Result};

/// Compressed columns.
#[derive(Clone, Debug, Default)]
struct Csc {
    p: Vec<usize>,
    i: Vec<usize>,
    x: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    l: Csc,
    u: Csc,
    /// `pinv[row] = k`: original row placed at pivot position `k`.
    pinv: Vec<usize>,
}

const UNSET: usize = usize::MAX;

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        Self::factor_with_threshold(a, 0.1)
    }

    pub fn factor_with_threshold(a: &CsrMatrix, tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let at = a.transpose(); // rows of A^T = columns of A
        let mut l = Csc {
            p: Vec::with_capacity(n + 1),
            ..Default::default()
        };
        let mut u = Csc {
            p: Vec::with_capacity(n + 1),
            ..Default::default()
        };
        let mut pinv = vec![UNSET; n];
        let mut x = vec![0.0; n];
        let mut reach = Reach::new(n);

        for k in 0..n {
            l.p.push(l.i.len());
            u.p.push(u.i.len());
            let bcol: Vec<(usize, f64)> = at.row(k).collect();
            let top = reach.compute(&l, &pinv, bcol.iter().map(|e| e.0));
            let pattern = &reach.out[top..];
            for &i in pattern {
                x[i] = 0.0;
            }
            for &(i, v) in &bcol {
                x[i] = v;
            }
            // triangular solve in topological order
            for &j in pattern {
                let jj = pinv[j];
                if jj == UNSET {
                    continue;
                }
                let (start, end) = (l.p[jj], l.p[jj + 1]);
                let xj = x[j]; // unit diagonal stored first
                for p in start + 1..end {
                    x[l.i[p]] -= l.x[p] * xj;
                }
            }
            let mut ipiv = UNSET;
            let mut amax = -1.0f64;
            for &i in pattern {
                if pinv[i] == UNSET {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u.i.push(pinv[i]);
                    u.x.push(x[i]);
                }
            }
            if ipiv == UNSET || !(amax > 0.0) || !amax.is_finite() {
                return Err(Error::SingularMatrix { column: k });
            }
            if pinv[k] == UNSET && x[k].abs() >= amax * tol {
                ipiv = k;
            }
            let pivot = x[ipiv];
            u.i.push(k);
            u.x.push(pivot);
            pinv[ipiv] = k;
            l.i.push(ipiv);
            l.x.push(1.0);
            for &i in pattern {
                if pinv[i] == UNSET {
                    l.i.push(i);
                    l.x.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        l.p.push(l.i.len());
        u.p.push(u.i.len());
        for r in l.i.iter_mut() {
            *r = pinv[*r];
        }
        Ok(SparseLu { n, l, u, pinv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in `L` and `U`.
    pub fn fill(&self) -> usize {
        self.l.x.len() + self.u.x.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "right-hand side",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for (i, &v) in b.iter().enumerate() {
            y[self.pinv[i]] = v;
        }
        for j in 0..self.n {
            let yj = y[j];
            for p in self.l.p[j] + 1..self.l.p[j + 1] {
                y[self.l.i[p]] -= self.l.x[p] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let end = self.u.p[j + 1] - 1; // diagonal stored last
            y[j] /= self.u.x[end];
            let yj = y[j];
            for p in self.u.p[j]..end {
                y[self.u.i[p]] -= self.u.x[p] * yj;
            }
        }
        Ok(y)
    }

    /// Solve followed by one step of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solve(b)?;
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        if norm_inf(&r) > 0.0 {
            let dx = self.solve(&r)?;
            x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
        }
        Ok(x)
    }
}

/// Depth-first reach of a column pattern in the graph of `L`.
struct Reach {
    out: Vec<usize>,
    stack: Vec<usize>,
    pstack: Vec<usize>,
    mark: Vec<usize>,
    stamp: usize,
}

impl Reach {
    fn new(n: usize) -> Self {
        Reach {
            out: vec![0; n],
            stack: vec![0; n],
            pstack: vec![0; n],
            mark: vec![0; n],
            stamp: 0,
        }
    }

    /// Writes the reach into `out[top..]` in topological order, returns top.
    fn compute(&mut self, l: &Csc, pinv: &[usize], start: impl Iterator<Item = usize>) -> usize {
        self.stamp += 1;
        let n = self.out.len();
        let mut top = n;
        let ncols = l.p.len() - 1; // columns finished so far
        for s in start {
            if self.mark[s] == self.stamp {
                continue;
            }
            let mut head = 0;
            self.stack[0] = s;
            loop {
                let j = self.stack[head];
                let jnew = pinv[j];
                let (lo, hi) = if jnew == UNSET || jnew >= ncols {
                    (0, 0)
                } else {
                    (l.p[jnew], l.p[jnew + 1])
                };
                if self.mark[j] != self.stamp {
                    self.mark[j] = self.stamp;
                    self.pstack[head] = lo;
                }
                let mut done = true;
                let mut p = self.pstack[head].max(lo);
                while p < hi {
                    let i = l.i[p];
                    p += 1;
                    if self.mark[i] == self.stamp {
                        continue;
                    }
                    self.pstack[head] = p;
                    head += 1;
                    self.stack[head] = i;
                    done = false;
                    break;
                }
                if done {
                    top -= 1;
                    self.out[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }
        top
    }
}
