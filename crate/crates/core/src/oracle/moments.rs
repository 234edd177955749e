//! Trace moments `α^k tr(L^k)` of the limit operators.

use crate::error::{Error, Result};
use crate::linalg::{dot, SymmetricOperator};
use crate::oracle::kernel_k::k_eigenvalue;
use crate::oracle::m_operator::m_kernel;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitKernel {
    /// `N × N` section of `1/(i∨j)^2`.
    MTruncated { truncation: usize },
    /// Integral operator on `[1, ∞)`, summed over the first `terms`
    /// Bessel-zero eigenvalues.
    K { terms: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitMoment<T> {
    /// The truncated sum, already multiplied by `α^k`.
    pub value: T,
    /// Estimated contribution of everything beyond the truncation, same scale.
    pub tail_estimate: T,
}

impl<T: Real> LimitMoment<T> {
    pub fn corrected(&self) -> T {
        self.value + self.tail_estimate
    }
}

/// `α^k tr(L^k)` for `k >= 1`.
///
/// For `M`, orders 1 and 2 are the closed sums `Σ 1/i^2` and
/// `Σ (2i-1)/i^4`; higher orders take `Σ_i e_iᵀ M^k e_i` with the O(N)
/// product. For `K` the moment is `Σ λ_j^k` plus the integral of the
/// leading-order tail `λ_j ≈ 8/((j + 1/4)π)^2`.
pub fn limit_moment<T: Real>(kernel: LimitKernel, k: u32, alpha: T) -> Result<LimitMoment<T>> {
    if k == 0 {
        return Err(Error::domain("moment order starts at 1"));
    }
    let scale = alpha.powi(k as i32);
    let (value, tail) = match kernel {
        LimitKernel::MTruncated { truncation } => m_moment::<T>(truncation, k)?,
        LimitKernel::K { terms } => k_moment::<T>(terms, k)?,
    };
    Ok(LimitMoment {
        value: value * scale,
        tail_estimate: tail * scale,
    })
}

fn m_moment<T: Real>(n: usize, k: u32) -> Result<(T, T)> {
    if n == 0 {
        return Err(Error::domain("M truncation must be >= 1"));
    }
    let nf = T::from_count(n);
    let value = match k {
        1 => (1..=n).map(|i| T::one() / T::from_count(i).powi(2)).sum(),
        2 => (1..=n)
            .map(|i| {
                let u = T::from_count(i);
                (u + u - T::one()) / u.powi(4)
            })
            .sum(),
        _ => power_trace(&m_kernel::<T>(n), k),
    };
    let tail = match k {
        1 => T::one() / nf,
        2 => T::one() / (nf * nf),
        // Coarse: k ||M||^(k-1) times the discarded trace.
        _ => T::from_count(k as usize) * T::lit(1.2).powi(k as i32 - 1) / nf,
    };
    Ok((value, tail))
}

fn power_trace<T: Real, Op: SymmetricOperator<T>>(op: &Op, k: u32) -> T {
    let n = op.dim();
    let half = k / 2;
    let mut acc = T::zero();
    let mut a = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    for i in 0..n {
        a.iter_mut().for_each(|x| *x = T::zero());
        a[i] = T::one();
        for _ in 0..half {
            op.apply(&a, &mut b);
            std::mem::swap(&mut a, &mut b);
        }
        acc += if k.is_multiple_of(2) {
            dot(&a, &a)
        } else {
            op.apply(&a, &mut b);
            dot(&a, &b)
        };
    }
    acc
}

fn k_moment<T: Real>(terms: usize, k: u32) -> Result<(T, T)> {
    if terms == 0 {
        return Err(Error::domain("K moment needs at least one eigenvalue"));
    }
    let mut value = T::zero();
    for j in 1..=terms {
        value += k_eigenvalue::<T>(j)?.powi(k as i32);
    }
    let c = T::lit(8.0) / (T::PI() * T::PI());
    let two_k = T::from_count(2 * k as usize);
    let edge = T::from_count(terms) + T::lit(0.75);
    let tail = c.powi(k as i32) * edge.powf(T::one() - two_k) / (two_k - T::one());
    Ok((value, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues_dense, MaxKernel};

    #[test]
    fn trace_of_k() {
        let m = limit_moment(LimitKernel::K { terms: 1000 }, 1, 1.0f64).unwrap();
        assert!((m.value - 1.0).abs() < 1e-3);
        assert!((m.corrected() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn second_moment_of_k_with_alpha() {
        let m = limit_moment(LimitKernel::K { terms: 1000 }, 2, 2.0f64).unwrap();
        assert!((m.value - 4.0 / 3.0).abs() < 4e-6);
    }

    #[test]
    fn m_first_moment_is_basel() {
        let m = limit_moment(LimitKernel::MTruncated { truncation: 1_000_000 }, 1, 1.0f64).unwrap();
        let gap = std::f64::consts::PI.powi(2) / 6.0 - m.value;
        assert!(gap > 0.0 && gap < 1.1e-6);
        assert!(gap <= m.tail_estimate);
    }

    #[test]
    fn closed_orders_match_power_trace() {
        let kern: MaxKernel<f64> = m_kernel(60);
        let dense = eigenvalues_dense(&kern.to_dense()).unwrap();
        for k in 1..=4u32 {
            let from_eig: f64 = dense.iter().map(|l| l.powi(k as i32)).sum();
            let closed = limit_moment(LimitKernel::MTruncated { truncation: 60 }, k, 1.0)
                .unwrap()
                .value;
            let direct = power_trace(&kern, k);
            assert!((closed - from_eig).abs() < 1e-12, "k = {k}");
            assert!((direct - from_eig).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert!(limit_moment(LimitKernel::K { terms: 5 }, 0, 1.0f64).is_err());
    }
}
