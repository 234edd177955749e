//! Largest eigenvalues of a symmetric operator by Lanczos iteration with
//! full reorthogonalization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, tridiagonal_eigen, SymmetricOperator};
use crate::Real;

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Relative tolerance on the Ritz residual bound.
    pub tol: f64,
    /// Krylov dimension cap; `None` means `min(n, 600)`.
    pub max_dim: Option<usize>,
    /// Seed for the start vector (and restart vectors after breakdown).
    pub seed: u64,
    /// Convergence is tested every `check_every` steps.
    pub check_every: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-8,
            max_dim: None,
            seed: 0x5eed_1a4c_2b0f_0001,
            check_every: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TopEigen<T> {
    /// `k` largest eigenvalues, descending.
    pub values: Vec<T>,
    /// Ritz vectors paired with `values`.
    pub vectors: Vec<Vec<T>>,
    /// True residual norms `||A y - θ y||`.
    pub residuals: Vec<T>,
    /// Krylov dimension at convergence.
    pub krylov_dim: usize,
}

pub fn top_eigenvalues<T: Real, Op: SymmetricOperator<T> + ?Sized>(
    op: &Op,
    k: usize,
    opts: &LanczosOptions,
) -> Result<TopEigen<T>> {
    let n = op.dim();
    if k == 0 {
        return Err(Error::domain("requested zero eigenvalues"));
    }
    if k > n {
        return Err(Error::domain(format!(
            "requested {k} eigenvalues of a {n}-dimensional operator"
        )));
    }
    let max_dim = opts.max_dim.unwrap_or(600).max(k).min(n);
    let tol = T::lit(opts.tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(max_dim);
    let mut alpha: Vec<T> = Vec::with_capacity(max_dim);
    let mut beta: Vec<T> = Vec::with_capacity(max_dim);

    let mut q = random_unit(n, &mut rng, &basis).ok_or_else(|| Error::numeric("zero start vector", 0))?;
    let mut w = vec![T::zero(); n];
    // Running estimate of ||A|| for breakdown detection.
    let mut scale = T::zero();
    // Top-k Ritz values at the previous breakdown; a restart that does not
    // change them means the search has stopped finding new directions.
    let mut top_at_last_breakdown: Option<Vec<T>> = None;

    loop {
        let j = basis.len();
        op.apply(&q, &mut w);
        let a = dot(&q, &w);
        alpha.push(a);
        for (wi, &qi) in w.iter_mut().zip(&q) {
            *wi -= a * qi;
        }
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            for (wi, &pi) in w.iter_mut().zip(prev) {
                *wi -= b * pi;
            }
        }
        basis.push(q);
        // Two passes of classical Gram-Schmidt against the full basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, &vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = norm(&w);
        scale = scale.max(a.abs() + b);
        let dim = j + 1;

        let exhausted = dim == n;
        let breakdown = b <= T::epsilon() * T::lit(64.0) * scale.max(T::min_positive_value());
        let at_cap = dim == max_dim;
        let check = dim >= k && (exhausted || breakdown || at_cap || dim.is_multiple_of(opts.check_every));

        if check {
            let eig = tridiagonal_eigen(&alpha, &beta, true)?;
            let svecs = eig.vectors.as_ref().expect("requested vectors");
            let theta_max = eig.values.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
            let converged = if exhausted {
                true
            } else if breakdown {
                let top = eig.values[..k].to_vec();
                let stalled = top_at_last_breakdown
                    .as_ref()
                    .is_some_and(|prev| prev.iter().zip(&top).all(|(&p, &t)| (p - t).abs() <= tol * theta_max));
                top_at_last_breakdown = Some(top);
                stalled
            } else {
                (0..k).all(|i| (b * svecs[i][dim - 1]).abs() <= tol * theta_max.max(T::min_positive_value()))
            };
            if converged {
                return Ok(ritz_pairs(op, &basis, &eig.values, svecs, k));
            }
            if at_cap {
                let worst = (0..k)
                    .map(|i| (b * svecs[i][dim - 1]).abs() / theta_max)
                    .fold(T::zero(), |m, x| m.max(x));
                return Err(Error::numeric(
                    format!(
                        "Lanczos did not converge at Krylov dimension {dim}: worst relative residual bound {worst}"
                    ),
                    dim,
                ));
            }
        }

        if breakdown {
            // Invariant subspace found; continue in its orthogonal complement.
            q = random_unit(n, &mut rng, &basis)
                .ok_or_else(|| Error::numeric("cannot extend Krylov basis after breakdown", dim))?;
            beta.push(T::zero());
        } else {
            let inv = T::one() / b;
            q = w.iter().map(|&x| x * inv).collect();
            beta.push(b);
        }
    }
}

fn ritz_pairs<T: Real, Op: SymmetricOperator<T> + ?Sized>(
    op: &Op,
    basis: &[Vec<T>],
    theta: &[T],
    svecs: &[Vec<T>],
    k: usize,
) -> TopEigen<T> {
    let n = op.dim();
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut ay = vec![T::zero(); n];
    for i in 0..k {
        let mut y = vec![T::zero(); n];
        for (c, v) in svecs[i].iter().zip(basis) {
            for (yi, &vi) in y.iter_mut().zip(v) {
                *yi += *c * vi;
            }
        }
        op.apply(&y, &mut ay);
        let r = ay
            .iter()
            .zip(&y)
            .map(|(&a, &b)| (a - theta[i] * b) * (a - theta[i] * b))
            .sum::<T>()
            .sqrt();
        vectors.push(y);
        residuals.push(r);
    }
    TopEigen {
        values: theta[..k].to_vec(),
        vectors,
        residuals,
        krylov_dim: basis.len(),
    }
}

/// Random unit vector orthogonal to `basis`, or `None` if the complement is
/// numerically empty.
fn random_unit<T: Real>(n: usize, rng: &mut ChaCha8Rng, basis: &[Vec<T>]) -> Option<Vec<T>> {
    for _ in 0..8 {
        let mut v: Vec<T> = (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let nv = norm(&v);
        if nv > T::lit(1e-8) {
            let inv = T::one() / nv;
            return Some(v.iter().map(|&x| x * inv).collect());
        }
    }
    None
}
