//! Bessel functions of the first kind, orders 0 and 1, and the positive zeros
//! of `J1`.
//!
//! Evaluation switches between three regimes:
//! - ascending power series for `x <= 8`,
//! - Miller backward recurrence normalized by `J0 + 2 Σ J_2k = 1` on `(8, 25)`,
//! - Hankel asymptotic expansion for `x >= 25`.
//!
//! The series alone loses about four digits to cancellation by `x = 12`, and
//! the asymptotic expansion is not yet accurate to 1e-13 below `x ≈ 20`, so the
//! recurrence covers the middle band.

use crate::error::{Error, Result};
use crate::Real;

const SERIES_MAX: f64 = 8.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BesselOrder {
    Zero,
    One,
}

/// `J_order(x)` for `x >= 0`.
pub fn bessel_j<T: Real>(order: BesselOrder, x: T) -> Result<T> {
    if x.is_nan() || x < T::zero() {
        return Err(Error::domain(format!("Bessel J requires x >= 0, got {x}")));
    }
    let (j0, j1) = j0_j1(x);
    Ok(match order {
        BesselOrder::Zero => j0,
        BesselOrder::One => j1,
    })
}

pub fn j0<T: Real>(x: T) -> T {
    j0_j1(x.abs()).0
}

/// Odd extension for negative arguments.
pub fn j1<T: Real>(x: T) -> T {
    let v = j0_j1(x.abs()).1;
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// `J1'(x) = J0(x) - J1(x)/x`, with the limit `1/2` at the origin.
pub fn j1_derivative<T: Real>(x: T) -> T {
    if x == T::zero() {
        return T::lit(0.5);
    }
    let (a, b) = j0_j1(x.abs());
    a - b / x.abs()
}

/// Both `J0(x)` and `J1(x)` for `x >= 0`.
pub fn j0_j1<T: Real>(x: T) -> (T, T) {
    if x <= T::lit(SERIES_MAX) {
        (series(0, x), series(1, x))
    } else if x < T::lit(ASYMPTOTIC_MIN) {
        miller(x)
    } else {
        (hankel(0, x), hankel(1, x))
    }
}

fn series<T: Real>(order: u32, x: T) -> T {
    let half = x * T::lit(0.5);
    let q = half * half;
    let mut term = if order == 0 { T::one() } else { half };
    let mut sum = term;
    let nu = T::from_count(order as usize);
    for k in 1..80 {
        let kf = T::from_count(k);
        term = -term * q / (kf * (kf + nu));
        sum += term;
        if term.abs() <= T::epsilon() * T::lit(0.5) * sum.abs().max(T::min_positive_value()) {
            break;
        }
    }
    sum
}

fn miller<T: Real>(x: T) -> (T, T) {
    let xf = x.to_f64_lossy();
    // Start index well beyond the turning point so J_N(x) is negligible.
    let mut top = (xf + 12.0 * xf.cbrt() + 30.0).ceil() as usize;
    if top % 2 == 1 {
        top += 1;
    }
    let two = T::lit(2.0);
    let big = T::lit(1e10);
    let small = T::lit(1e-10);
    let mut above = T::zero();
    let mut current = T::lit(1e-20);
    let mut norm = T::zero();
    let mut j1 = T::zero();
    // On entry to iteration k, `current` holds J_k (unnormalized).
    for k in (1..=top).rev() {
        if k % 2 == 0 {
            norm += two * current;
        }
        if k == 1 {
            j1 = current;
        }
        let below = two * T::from_count(k) / x * current - above;
        above = current;
        current = below;
        if current.abs() > big {
            current *= small;
            above *= small;
            norm *= small;
            j1 *= small;
        }
    }
    let j0 = current;
    norm += j0;
    (j0 / norm, j1 / norm)
}

fn hankel<T: Real>(order: u32, x: T) -> T {
    let mu = T::from_count(4 * (order * order) as usize);
    let eight_x = T::lit(8.0) * x;
    // a_k = prod_{i=1..k} (mu - (2i-1)^2) / (k! (8x)^k)
    let mut p = T::one();
    let mut q = T::zero();
    let mut a = T::one();
    let mut prev_abs = T::infinity();
    for k in 1..60usize {
        let odd = T::from_count(2 * k - 1);
        a = a * (mu - odd * odd) / (T::from_count(k) * eight_x);
        let mag = a.abs();
        if mag >= prev_abs || mag <= T::epsilon() * T::lit(1e-3) {
            break;
        }
        prev_abs = mag;
        // Signs cycle with period 4: P gets +a0, -a2, +a4, ...; Q gets a1, -a3, ...
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    // chi = x - (order/2 + 1/4) pi, expanded so that cos/sin see x exactly.
    let phase = (T::from_count(order as usize) * T::lit(0.5) + T::lit(0.25)) * T::PI();
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// The k-th positive zero of `J1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselZero<T> {
    pub index: usize,
    pub location: T,
    /// `|J1(location)|`.
    pub residual: T,
}

/// McMahon leading-order location `(k + 1/4) π`.
pub fn mcmahon_estimate<T: Real>(k: usize) -> T {
    (T::from_count(k) + T::lit(0.25)) * T::PI()
}

/// Locates the k-th positive zero of `J1` (k >= 1).
///
/// The zero is bracketed within `π/2` of the McMahon estimate, narrowed by
/// bisection and polished with Newton steps using `J1' = J0 - J1/x`.
pub fn j1_zero<T: Real>(k: usize) -> Result<BesselZero<T>> {
    if k == 0 {
        return Err(Error::domain("Bessel zero index starts at 1"));
    }
    let center = mcmahon_estimate::<T>(k);
    let mut lo = center - T::FRAC_PI_2();
    let mut hi = center + T::FRAC_PI_2();
    let mut f_lo = j1(lo);
    let f_hi = j1(hi);
    if f_lo * f_hi > T::zero() {
        return Err(Error::numeric(
            format!("no sign change of J1 on [{lo}, {hi}] for zero {k}"),
            0,
        ));
    }

    let mut iterations = 0;
    while hi - lo > T::lit(1e-3) {
        iterations += 1;
        let mid = (lo + hi) * T::lit(0.5);
        let f_mid = j1(mid);
        if f_mid == T::zero() {
            lo = mid;
            hi = mid;
            break;
        }
        if f_lo * f_mid < T::zero() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }

    let mut x = (lo + hi) * T::lit(0.5);
    for _ in 0..40 {
        iterations += 1;
        let (a, b) = j0_j1(x);
        let slope = a - b / x;
        let step = b / slope;
        let next = x - step;
        // Newton stays inside the bracket for this well-conditioned root;
        // fall back to the midpoint if it ever leaves.
        x = if next > lo && next < hi {
            next
        } else {
            (lo + hi) * T::lit(0.5)
        };
        if step.abs() <= T::epsilon() * T::lit(4.0) * x {
            break;
        }
    }

    let residual = j1(x).abs();
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
    if residual > tol {
        return Err(Error::numeric(
            format!("J1 zero {k} residual {residual} exceeds {tol}"),
            iterations,
        ));
    }
    Ok(BesselZero {
        index: k,
        location: x,
        residual,
    })
}

/// The first `count` positive zeros of `J1`.
pub fn j1_zeros<T: Real>(count: usize) -> Result<Vec<BesselZero<T>>> {
    (1..=count).map(j1_zero).collect()
}
