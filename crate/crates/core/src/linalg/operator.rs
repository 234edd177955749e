use crate::linalg::SymMatrix;
use crate::Real;

/// A symmetric linear map applied by matrix-vector product.
pub trait SymmetricOperator<T>: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[T], y: &mut [T]);
}

impl<T: Real> SymmetricOperator<T> for SymMatrix<T> {
    fn dim(&self) -> usize {
        SymMatrix::dim(self)
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec(x, y)
    }
}

/// Symmetric matrix in compressed sparse row form, both triangles stored.
#[derive(Clone, Debug)]
pub struct SparseSym<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseSym<T> {
    /// Builds from lower-triangle triplets `(i, j, v)` with `i >= j`
    /// (0-based); the upper triangle is mirrored.
    pub fn from_lower_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, T)>) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, j, v) in triplets {
            debug_assert!(i >= j && i < n);
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseSym { n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn frobenius_norm(&self) -> T {
        self.vals.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn to_dense(&self) -> SymMatrix<T> {
        let mut m = SymMatrix::zeros(self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m.set(i, self.cols[p], self.vals[p]);
            }
        }
        m
    }
}

impl<T: Real> SymmetricOperator<T> for SparseSym<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *yi = acc;
        }
    }
}

/// Kernel matrix whose off-diagonal entries depend only on the larger index:
/// `a_ij = off[max(i, j)]` for `i != j`, `a_ii = diag[i]`, and every entry
/// with `min(i, j) < start` is zero.
///
/// Covers the expected charge-flow matrices, the truncated `1/(i∨j)^2`
/// operator, and the midpoint discretization of `1/(s∨t)^2`. The product
/// costs O(n) through prefix and suffix sums.
#[derive(Clone, Debug)]
pub struct MaxKernel<T> {
    off: Vec<T>,
    diag: Vec<T>,
    start: usize,
}

impl<T: Real> MaxKernel<T> {
    pub fn new(off: Vec<T>, diag: Vec<T>) -> Self {
        assert_eq!(off.len(), diag.len());
        MaxKernel { off, diag, start: 0 }
    }

    /// Kernel with the diagonal following the same profile as the off-diagonal.
    pub fn uniform(profile: Vec<T>) -> Self {
        let diag = profile.clone();
        Self::new(profile, diag)
    }

    /// Zeroes every row and column with index `< start`.
    pub fn with_start(mut self, start: usize) -> Self {
        self.start = start.min(self.off.len());
        self
    }

    pub fn scaled(&self, s: T) -> Self {
        MaxKernel {
            off: self.off.iter().map(|&x| x * s).collect(),
            diag: self.diag.iter().map(|&x| x * s).collect(),
            start: self.start,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        if i.min(j) < self.start {
            T::zero()
        } else if i == j {
            self.diag[i]
        } else {
            self.off[i.max(j)]
        }
    }

    pub fn trace(&self) -> T {
        self.diag[self.start..].iter().copied().sum()
    }

    /// `tr(A^2) = ||A||_F^2`, in O(n).
    pub fn trace_of_square(&self) -> T {
        let mut acc = T::zero();
        for i in self.start..self.off.len() {
            let below = T::from_count(i - self.start);
            acc += self.diag[i] * self.diag[i] + (T::one() + T::one()) * below * self.off[i] * self.off[i];
        }
        acc
    }

    pub fn to_dense(&self) -> SymMatrix<T> {
        SymMatrix::from_fn(self.off.len(), |i, j| self.entry(i, j))
    }
}

impl<T: Real> SymmetricOperator<T> for MaxKernel<T> {
    fn dim(&self) -> usize {
        self.off.len()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = self.off.len();
        let s = self.start;
        for yi in &mut y[..s] {
            *yi = T::zero();
        }
        // y_i = off_i * sum_{s<=j<i} x_j + diag_i x_i + sum_{j>i} off_j x_j
        let mut suffix = T::zero();
        for i in (s..n).rev() {
            y[i] = suffix;
            suffix += self.off[i] * x[i];
        }
        let mut prefix = T::zero();
        for i in s..n {
            y[i] += self.off[i] * prefix + self.diag[i] * x[i];
            prefix += x[i];
        }
    }
}
