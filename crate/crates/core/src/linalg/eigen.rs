//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by implicit-shift QL
//! iteration, after the EISPACK `tred2`/`tql2` pair. The working matrix is
//! kept column-major so the inner loops of both phases run over contiguous
//! memory.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::Real;

/// Largest dimension accepted by [`eigenvalues_dense`] unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 4000;

const MAX_QL_SWEEPS: usize = 60;

#[derive(Clone, Copy, Debug)]
pub struct DenseOptions {
    pub cap: usize,
    /// Relative tolerance on `|a_ij - a_ji| / max|a|`.
    pub symmetry_tol: f64,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions {
            cap: DEFAULT_DENSE_CAP,
            symmetry_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Unit eigenvectors, `vectors[i]` pairs with `values[i]`.
    pub vectors: Option<Vec<Vec<T>>>,
}

/// Full spectrum of a symmetric matrix, descending.
pub fn eigenvalues_dense<T: Real>(a: &SymMatrix<T>) -> Result<Vec<T>> {
    Ok(symmetric_eigen(a, false, &DenseOptions::default())?.values)
}

pub fn symmetric_eigen<T: Real>(
    a: &SymMatrix<T>,
    want_vectors: bool,
    opts: &DenseOptions,
) -> Result<SymmetricEigen<T>> {
    let n = a.dim();
    if n > opts.cap {
        return Err(Error::domain(format!(
            "dimension {n} exceeds dense eigensolver cap {}",
            opts.cap
        )));
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let scale = a.max_abs();
    let tol = T::lit(opts.symmetry_tol).max(T::epsilon() * T::lit(8.0));
    if a.asymmetry() > tol * scale {
        return Err(Error::domain(format!(
            "matrix is not symmetric: max |a_ij - a_ji| = {} exceeds {} relative",
            a.asymmetry(),
            tol
        )));
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: want_vectors.then(Vec::new),
        });
    }

    // Column-major copy: v[j * n + k] holds V[k][j]. Input is symmetric so
    // the row-major buffer already is its own transpose.
    let mut v = a.as_slice().to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    householder_tridiagonalize(n, &mut v, &mut d, &mut e, want_vectors);
    let vecs = if want_vectors { Some(&mut v[..]) } else { None };
    implicit_ql(n, &mut d, &mut e, vecs)?;

    Ok(sort_descending(n, d, want_vectors.then_some(v)))
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and sub-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T], want_vectors: bool) -> Result<SymmetricEigen<T>> {
    let n = diag.len();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: want_vectors.then(Vec::new),
        });
    }
    if off.len() + 1 != n {
        return Err(Error::domain("off-diagonal length must be one less than diagonal"));
    }
    let mut d = diag.to_vec();
    // implicit_ql expects the sub-diagonal in e[1..n].
    let mut e = vec![T::zero(); n];
    e[1..].copy_from_slice(off);
    let mut v = if want_vectors {
        let mut id = vec![T::zero(); n * n];
        for i in 0..n {
            id[i * n + i] = T::one();
        }
        Some(id)
    } else {
        None
    };
    implicit_ql(n, &mut d, &mut e, v.as_deref_mut())?;
    Ok(sort_descending(n, d, v))
}

fn sort_descending<T: Real>(n: usize, d: Vec<T>, v: Option<Vec<T>>) -> SymmetricEigen<T> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = v.map(|v| order.iter().map(|&i| v[i * n..(i + 1) * n].to_vec()).collect());
    SymmetricEigen { values, vectors }
}

#[inline]
fn at(n: usize, row: usize, col: usize) -> usize {
    col * n + row
}

fn householder_tridiagonalize<T: Real>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T], accumulate: bool) {
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = zero;
                v[at(n, j, i)] = zero;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = zero;
            }

            for j in 0..i {
                f = d[j];
                v[at(n, j, i)] = f;
                g = e[j] + v[at(n, j, j)] * f;
                let col = &v[j * n..j * n + i];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = zero;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for (i, di) in d.iter_mut().enumerate() {
            *di = v[at(n, i, i)];
        }
        e[0] = zero;
        return;
    }

    for i in 0..n - 1 {
        v[at(n, n - 1, i)] = v[at(n, i, i)];
        v[at(n, i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[at(n, k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[at(n, k, i + 1)] * v[at(n, k, j)];
                }
                for k in 0..=i {
                    let dk = d[k];
                    v[at(n, k, j)] -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v[at(n, k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
        v[at(n, n - 1, j)] = zero;
    }
    v[at(n, n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Implicit QL on the tridiagonal (d, e[1..]); rotations are applied to the
/// column-major `v` when given.
fn implicit_ql<T: Real>(n: usize, d: &mut [T], e: &mut [T], mut v: Option<&mut [T]>) -> Result<()> {
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_SWEEPS {
                    return Err(Error::numeric(
                        format!(
                            "implicit QL failed to deflate eigenvalue {l} of {n}: |e| = {}, tolerance {}",
                            e[l].abs(),
                            eps * tst1
                        ),
                        iter,
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut((i + 1) * n);
                        let col_i = &mut lo[i * n..];
                        let col_i1 = &mut hi[..n];
                        for k in 0..n {
                            let hk = col_i1[k];
                            col_i1[k] = s * col_i[k] + c * hk;
                            col_i[k] = c * col_i[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_unit_spectrum() {
        let vals = eigenvalues_dense(&SymMatrix::<f64>::identity(3)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix() {
        let a = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]);
        let vals = eigenvalues_dense(&a).unwrap();
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(vals[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = SymMatrix::from_row_major(2, vec![0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(eigenvalues_dense(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_over_cap() {
        let a = SymMatrix::<f64>::identity(5);
        let opts = DenseOptions {
            cap: 4,
            ..Default::default()
        };
        assert!(symmetric_eigen(&a, false, &opts).is_err());
    }

    #[test]
    fn empty_and_scalar() {
        assert!(eigenvalues_dense(&SymMatrix::<f64>::zeros(0)).unwrap().is_empty());
        let a = SymMatrix::from_row_major(1, vec![-2.5]);
        assert_eq!(eigenvalues_dense(&a).unwrap(), vec![-2.5]);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [2.0, -1.0, 0.5, 3.0];
        let off = [1.0, 0.25, -0.75];
        let dense = SymMatrix::from_fn(4, |i, j| {
            if i == j {
                diag[i]
            } else if i == j + 1 {
                off[j]
            } else if j == i + 1 {
                off[i]
            } else {
                0.0
            }
        });
        let a = tridiagonal_eigen(&diag, &off, true).unwrap();
        let b = eigenvalues_dense(&dense).unwrap();
        for (x, y) in a.values.iter().zip(&b) {
            assert_relative_eq!(x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn vectors_are_orthonormal_with_small_residual() {
        let n = 30;
        let a = SymMatrix::from_fn(n, |i, j| {
            1.0 / ((i.max(j) + 1) as f64).powi(2) + ((i + j) % 3) as f64 * 0.1
        });
        let eig = symmetric_eigen(&a, true, &DenseOptions::default()).unwrap();
        let vecs = eig.vectors.unwrap();
        let fro = a.frobenius_norm();
        let mut av = vec![0.0; n];
        for (lam, v) in eig.values.iter().zip(&vecs) {
            a.matvec(v, &mut av);
            let r: f64 = av.iter().zip(v).map(|(x, y)| (x - lam * y).powi(2)).sum::<f64>().sqrt();
            assert!(r <= 1e-12 * fro, "residual {r}");
        }
        for i in 0..n {
            for j in 0..n {
                let d = crate::linalg::dot(&vecs[i], &vecs[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_precision() {
        let a = SymMatrix::<f32>::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]);
        let vals = eigenvalues_dense(&a).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-6);
        assert!((vals[1] - 1.0).abs() < 1e-6);
    }
}
