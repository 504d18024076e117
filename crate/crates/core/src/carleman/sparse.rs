//! Compressed sparse row matrices over `Complex64`.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self { rows, cols, indptr, indices, values };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != Complex64::new(0.0, 0.0)) {
            return;
        }
        let mut indptr = vec![0; self.rows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != Complex64::new(0.0, 0.0) {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        *self = Self { rows: self.rows, cols: self.cols, indptr, indices, values };
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k])))
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows);
        let mut trip = Vec::new();
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (mid, a) = (self.indices[k], self.values[k]);
                for q in other.indptr[mid]..other.indptr[mid + 1] {
                    trip.push((r, other.indices[q], a * other.values[q]));
                }
            }
        }
        Self::from_triplets(self.rows, other.cols, trip)
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &CsrMatrix) -> CsrMatrix {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `self + alpha·other`.
    fn axpy(&self, alpha: Complex64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let trip = self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, alpha * v))).collect();
        Self::from_triplets(self.rows, self.cols, trip)
    }

    pub fn scale(&self, alpha: Complex64) -> CsrMatrix {
        Self::from_triplets(self.rows, self.cols, self.triplets().map(|(r, c, v)| (r, c, alpha * v)).collect())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CsrMatrix {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect())
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.values[self.indptr[r]..self.indptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn assembly_sums_duplicates_and_drops_zeros() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, c(1.0)), (0, 0, c(2.0)), (1, 2, c(0.5)), (0, 1, c(1.0)), (0, 1, c(-1.0))]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), c(1.5));
        assert_eq!(m.get(0, 1), c(0.0));
        assert_eq!(m.mul_vec(&[c(1.0), c(7.0), c(2.0)]), vec![c(2.0), c(3.0)]);
    }

    #[test]
    fn products_and_adjoint() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, Complex64::new(0.0, 1.0)), (1, 0, c(2.0))]);
        let aa = a.matmul(&a);
        assert_eq!(aa.get(0, 0), Complex64::new(0.0, 2.0));
        assert_eq!(aa.get(1, 1), Complex64::new(0.0, 2.0));
        let adj = a.adjoint();
        assert_eq!(adj.get(1, 0), Complex64::new(0.0, -1.0));
        assert_eq!(a.sub(&a).nnz(), 0);
        assert_eq!(a.add(&CsrMatrix::identity(2)).get(0, 0), c(1.0));
        assert_eq!(a.scale(c(3.0)).get(1, 0), c(6.0));
        assert_eq!(a.norm_inf(), 2.0);
    }
}
