use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from row-major dense data; exact zeros are dropped.
    pub fn from_dense(nrows: usize, ncols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::LengthMismatch {
                what: "dense matrix data",
                expected: nrows * ncols,
                got: data.len(),
            });
        }
        let mut t = TripletMatrix::new(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                let v = data[i * ncols + j];
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        Ok(t.to_csr())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matrix-vector size mismatch");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Zero every entry of row `i`, keeping the pattern.
    pub fn clear_row(&mut self, i: usize) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.values[r].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[i * self.ncols + j] = v;
            }
        }
        d
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Coordinate-format accumulator; duplicates are summed on conversion.
#[derive(Clone, Debug)]
pub struct TripletMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletMatrix {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut e = self.entries.clone();
        e.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(e.len());
        let mut values: Vec<f64> = Vec::with_capacity(e.len());
        let mut last = None;
        for (i, j, v) in e {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Block matrix and residual of a coupled system: `blocks[i][i]` is the
/// Jacobian of domain `i`, `blocks[i][j]` the coupling derivatives.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub blocks: Vec<Vec<CsrMatrix>>,
    pub residuals: Vec<Vec<f64>>,
}

impl BlockSystem {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut o = vec![0];
        for r in &self.residuals {
            o.push(o.last().unwrap() + r.len());
        }
        o
    }

    pub fn monolithic_matrix(&self) -> CsrMatrix {
        let off = self.offsets();
        let n = *off.last().unwrap();
        let mut t = TripletMatrix::new(n, n);
        for (bi, row) in self.blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                for i in 0..b.nrows() {
                    for (j, v) in b.row(i) {
                        t.push(off[bi] + i, off[bj] + j, v);
                    }
                }
            }
        }
        t.to_csr()
    }

    pub fn monolithic_residual(&self) -> Vec<f64> {
        self.residuals.concat()
    }
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let mut t = TripletMatrix::new(2, 3);
        t.push(1, 2, 1.0);
        t.push(0, 1, 2.0);
        t.push(1, 0, 3.0);
        t.push(1, 2, 4.0);
        let a = t.to_csr();
        assert_eq!(a.row_ptr(), &[0, 1, 3]);
        assert_eq!(a.col_idx(), &[1, 0, 2]);
        assert_eq!(a.values(), &[2.0, 3.0, 5.0]);
        assert_eq!(a.get(1, 2), 5.0);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![2.0, 8.0]);
        let tt = a.transpose();
        assert_eq!(tt.to_dense(), vec![0.0, 3.0, 2.0, 0.0, 0.0, 5.0]);
    }

    #[test]
    fn block_system_concatenates() {
        let sys = BlockSystem {
            blocks: vec![
                vec![
                    CsrMatrix::identity(2),
                    CsrMatrix::from_dense(2, 1, &[0.0, 7.0]).unwrap(),
                ],
                vec![CsrMatrix::zeros(1, 2), CsrMatrix::identity(1)],
            ],
            residuals: vec![vec![1.0, 2.0], vec![3.0]],
        };
        let m = sys.monolithic_matrix();
        assert_eq!(
            m.to_dense(),
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 7.0, 0.0, 0.0, 1.0]
        );
        assert_eq!(sys.offsets(), vec![0, 2, 3]);
    }
}
