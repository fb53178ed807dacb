//! Packed lower-triangular Cholesky factor with rank-one update/downdate.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DowndateFailed;

/// Lower-triangular `n x n` matrix stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangular {
    dim: usize,
    data: Vec<f64>,
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

impl LowerTriangular {
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut data = vec![0.0; dim * (dim + 1) / 2];
        for i in 0..dim {
            data[idx(i, i)] = scale;
        }
        Self { dim, data }
    }

    /// Builds from a dense row-major matrix, ignoring the upper triangle.
    pub fn from_dense(dim: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), dim * dim);
        let mut data = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            data.extend_from_slice(&dense[i * dim..i * dim + i + 1]);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[idx(i, j)]
        }
    }

    pub fn has_positive_diagonal(&self) -> bool {
        (0..self.dim).all(|i| self.data[idx(i, i)] > 0.0)
    }

    /// `L x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let row = &self.data[idx(i, 0)..=idx(i, i)];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Dense row-major `L L^T`.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let ri = &self.data[idx(i, 0)..=idx(i, i)];
                let rj = &self.data[idx(j, 0)..=idx(j, j)];
                let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    /// In place `L L^T <- L L^T + sign * v v^T` for `sign` in `{+1, -1}`.
    /// `v` is used as workspace. On failure the factor is left partially
    /// modified; callers that need to retry must keep a copy.
    pub fn rank_one_update(&mut self, v: &mut [f64], sign: f64) -> Result<(), DowndateFailed> {
        let n = self.dim;
        assert_eq!(v.len(), n);
        for j in 0..n {
            let ljj = self.data[idx(j, j)];
            let vj = v[j];
            let arg = ljj * ljj + sign * vj * vj;
            if !(arg > 0.0) || !arg.is_finite() {
                return Err(DowndateFailed);
            }
            let r = arg.sqrt();
            let c = r / ljj;
            let s = vj / ljj;
            self.data[idx(j, j)] = r;
            for i in (j + 1)..n {
                let k = idx(i, j);
                let lij = (self.data[k] + sign * s * v[i]) / c;
                self.data[k] = lij;
                v[i] = c * v[i] - s * lij;
            }
        }
        Ok(())
    }
}
