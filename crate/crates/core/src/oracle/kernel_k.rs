//! The integral operator `[K f](t) = ∫_1^∞ f(s) / (s∨t)^2 ds` on `L2([1, ∞))`.
//!
//! Its nonzero eigenvalues are exactly `8 / x^2` for the positive zeros `x`
//! of `J1`. With `h(t) = 2√2 / √(λ t)`, the eigenfunction is
//! `φ(t) = C1 (J1(h)/√t − √2/(t√λ) J0(h))`, the derivative of
//! `Ψ(t) = C1 √t J1(h)`, and the boundary condition `Ψ(1) = 0` is what
//! singles out the admissible `λ`.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, top_eigenvalues, DenseOptions, LanczosOptions, MaxKernel};
use crate::oracle::bessel::{j0_j1, j1_zero};
use crate::oracle::quad::adaptive_simpson;
use crate::oracle::{OracleParams, OracleSpectrum, Provenance};
use crate::Real;

/// Default right end of the truncated domain `[1, T]`.
pub const DEFAULT_CUTOFF: f64 = 200.0;

/// The k-th eigenvalue `8 / j_{1,k}^2`.
pub fn k_eigenvalue<T: Real>(k: usize) -> Result<T> {
    let x = j1_zero::<T>(k)?.location;
    Ok(T::lit(8.0) / (x * x))
}

/// The `count` largest eigenvalues of K from the Bessel zeros.
pub fn k_spectrum<T: Real>(count: usize) -> Result<OracleSpectrum<T>> {
    if count == 0 {
        return Err(Error::domain("k_spectrum needs count >= 1"));
    }
    let values = (1..=count).map(k_eigenvalue).collect::<Result<Vec<T>>>()?;
    OracleSpectrum::new(values, Provenance::BesselClosedForm, OracleParams::default())
}

/// Eigenfunction of K (second-kind branch excluded), normalized to unit
/// `L2` norm on `[1, cutoff]`.
#[derive(Clone, Copy, Debug)]
pub struct EigenfunctionK<T> {
    pub lambda: T,
    pub c1: T,
    pub cutoff: T,
}

impl<T: Real> EigenfunctionK<T> {
    /// Requires `λ` to be an eigenvalue: `|J1(2√2/√λ)| <= 1e-8`.
    pub fn new(lambda: T, cutoff: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::domain(format!("eigenvalue must be positive, got {lambda}")));
        }
        let boundary = j0_j1(argument(lambda, T::one())).1.abs();
        if boundary > T::lit(1e-8) {
            return Err(Error::domain(format!(
                "{lambda} is not an eigenvalue of K: |J1(2√2/√λ)| = {boundary}"
            )));
        }
        Self::trial(lambda, cutoff)
    }

    /// Same closed form for an arbitrary `λ > 0`, without the eigenvalue
    /// check. Used to show the eigen-equation fails off the spectrum.
    pub fn trial(lambda: T, cutoff: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::domain(format!("λ must be positive, got {lambda}")));
        }
        if !(cutoff > T::one()) {
            return Err(Error::domain(format!("cutoff must exceed 1, got {cutoff}")));
        }
        let raw = EigenfunctionK {
            lambda,
            c1: T::one(),
            cutoff,
        };
        let mass = adaptive_simpson(&|t| raw.eval(t).powi(2), T::one(), cutoff, T::lit(1e-13));
        Ok(EigenfunctionK {
            c1: T::one() / mass.sqrt(),
            ..raw
        })
    }

    pub fn eval(&self, t: T) -> T {
        let h = argument(self.lambda, t);
        let (b0, b1) = j0_j1(h);
        let two = T::lit(2.0);
        self.c1 * (b1 / t.sqrt() - two.sqrt() / (t * self.lambda.sqrt()) * b0)
    }

    /// `Ψ(t) = ∫_1^t φ + Ψ(1)`, in closed form.
    pub fn psi(&self, t: T) -> T {
        self.c1 * t.sqrt() * j0_j1(argument(self.lambda, t)).1
    }

    /// Leading large-t behaviour `φ(t) ≈ a / t^2`; returns `a`.
    pub fn tail_coefficient(&self) -> T {
        self.c1 * T::lit(2.0).sqrt() / self.lambda.powf(T::lit(1.5))
    }
}

fn argument<T: Real>(lambda: T, t: T) -> T {
    T::lit(8.0).sqrt() / (lambda * t).sqrt()
}

/// `count` log-spaced points in `[1, cutoff]`.
pub fn log_grid<T: Real>(count: usize, cutoff: T) -> Vec<T> {
    if count == 1 {
        return vec![T::one()];
    }
    let span = cutoff.ln();
    let mut grid: Vec<T> = (0..count)
        .map(|i| (span * T::from_count(i) / T::from_count(count - 1)).exp())
        .collect();
    grid[count - 1] = cutoff;
    grid
}

#[derive(Clone, Copy, Debug)]
pub struct EigenResidual<T> {
    /// `sup |λφ(t) − t⁻² ∫_1^t φ − ∫_t^∞ s⁻² φ|` over the grid.
    pub sup_residual: T,
    /// `sup |λφ(t)|` over the grid.
    pub sup_lambda_phi: T,
}

impl<T: Real> EigenResidual<T> {
    pub fn relative(&self) -> T {
        self.sup_residual / self.sup_lambda_phi
    }
}

/// Evaluates the eigen-equation residual of `phi` on `grid` (points in
/// `[1, cutoff]`, any order). Integrals are adaptive Simpson between
/// consecutive grid points, plus the exact tail beyond the cutoff.
pub fn eigen_residual<T: Real>(phi: &EigenfunctionK<T>, grid: &[T]) -> Result<EigenResidual<T>> {
    let cutoff = phi.cutoff;
    if grid.iter().any(|&t| t < T::one() || t > cutoff) {
        return Err(Error::domain("residual grid must lie in [1, cutoff]"));
    }
    let mut points: Vec<T> = grid.to_vec();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    points.dedup();

    let tol = T::lit(1e-13);
    let f = |t: T| phi.eval(t);
    let g = |t: T| phi.eval(t) / (t * t);

    // Forward: ∫_1^{t_i} φ.
    let mut inner = Vec::with_capacity(points.len());
    let mut acc = T::zero();
    let mut left = T::one();
    for &t in &points {
        acc += adaptive_simpson(&f, left, t, tol);
        inner.push(acc);
        left = t;
    }

    // Backward: ∫_{t_i}^∞ s⁻² φ. Past the cutoff, u = 1/s turns the tail
    // into ∫_0^{1/T} φ(1/u) du, whose integrand is analytic at u = 0.
    let flipped = |u: T| {
        if u == T::zero() {
            T::zero()
        } else {
            phi.eval(T::one() / u)
        }
    };
    let tail = adaptive_simpson(&flipped, T::zero(), T::one() / cutoff, tol);
    let mut outer = vec![T::zero(); points.len()];
    let mut acc = tail;
    let mut right = cutoff;
    for (i, &t) in points.iter().enumerate().rev() {
        acc += adaptive_simpson(&g, t, right, tol);
        outer[i] = acc;
        right = t;
    }

    let mut sup_residual = T::zero();
    let mut sup_lambda_phi = T::zero();
    for (i, &t) in points.iter().enumerate() {
        let lhs = phi.lambda * phi.eval(t);
        let r = lhs - inner[i] / (t * t) - outer[i];
        sup_residual = sup_residual.max(r.abs());
        sup_lambda_phi = sup_lambda_phi.max(lhs.abs());
    }
    Ok(EigenResidual {
        sup_residual,
        sup_lambda_phi,
    })
}

/// Midpoint-rule discretization of K on `[1, cutoff]`.
///
/// With equal weights `h` the symmetrized matrix `D^{1/2} K D^{1/2}` has
/// entries `h / (t_i ∨ t_j)^2`, which only depend on the larger node.
#[derive(Clone, Debug)]
pub struct NystromK<T> {
    pub kernel: MaxKernel<T>,
    pub cutoff: T,
    pub grid: usize,
}

pub fn nystrom_k<T: Real>(cutoff: T, grid: usize) -> Result<NystromK<T>> {
    if cutoff < T::lit(50.0) {
        return Err(Error::domain(format!("Nyström cutoff must be >= 50, got {cutoff}")));
    }
    if grid < 100 {
        return Err(Error::domain(format!(
            "Nyström grid must have >= 100 points, got {grid}"
        )));
    }
    let h = (cutoff - T::one()) / T::from_count(grid);
    let profile = (0..grid)
        .map(|i| {
            let t = T::one() + h * (T::from_count(i) + T::lit(0.5));
            h / (t * t)
        })
        .collect();
    Ok(NystromK {
        kernel: MaxKernel::uniform(profile),
        cutoff,
        grid,
    })
}

impl<T: Real> NystromK<T> {
    fn params(&self) -> OracleParams {
        OracleParams {
            grid: Some(self.grid),
            cutoff: Some(self.cutoff.to_f64_lossy()),
            ..OracleParams::default()
        }
    }

    /// Largest `count` eigenvalues (Lanczos on the O(n) product).
    pub fn top(&self, count: usize) -> Result<OracleSpectrum<T>> {
        let opts = LanczosOptions {
            tol: 1e-12,
            ..LanczosOptions::default()
        };
        let top = top_eigenvalues(&self.kernel, count, &opts)?;
        OracleSpectrum::new(top.values, Provenance::Nystrom, self.params())
    }

    /// Full spectrum by the dense solver; only for grids under the dense cap.
    pub fn dense_spectrum(&self) -> Result<Vec<T>> {
        Ok(symmetric_eigen(&self.kernel.to_dense(), false, &DenseOptions::default())?.values)
    }

    /// Matrix trace, the midpoint sum for `∫_1^T t⁻² dt = 1 − 1/T`.
    pub fn trace(&self) -> T {
        self.kernel.trace()
    }

    /// Sum of squared eigenvalues.
    pub fn trace_of_square(&self) -> T {
        self.kernel.trace_of_square()
    }
}

/// Top `count` eigenvalues of the Nyström discretization on `[1, cutoff]`.
pub fn k_spectrum_nystrom<T: Real>(cutoff: T, grid: usize, count: usize) -> Result<OracleSpectrum<T>> {
    nystrom_k(cutoff, grid)?.top(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_eigenvalue() {
        let l1: f64 = k_eigenvalue(1).unwrap();
        assert!((l1 - 0.54489).abs() < 1e-5);
    }

    #[test]
    fn spectrum_is_strictly_decreasing() {
        let s = k_spectrum::<f64>(200).unwrap();
        assert!(s.eigenvalues.windows(2).all(|w| w[0] > w[1]));
        assert!(k_spectrum::<f64>(0).is_err());
    }

    #[test]
    fn eigenfunction_boundary_and_ode() {
        let lam: f64 = k_eigenvalue(1).unwrap();
        let phi = EigenfunctionK::new(lam, DEFAULT_CUTOFF).unwrap();
        assert!(phi.psi(1.0).abs() <= 1e-10);
        let h = 1e-3;
        for t in [1.5, 3.0, 10.0] {
            let second = (phi.psi(t + h) - 2.0 * phi.psi(t) + phi.psi(t - h)) / (h * h);
            let r = lam * second + 2.0 / t.powi(3) * phi.psi(t);
            assert!(r.abs() <= 1e-6, "ODE residual {r} at {t}");
        }
    }

    #[test]
    fn psi_derivative_is_phi() {
        let lam: f64 = k_eigenvalue(2).unwrap();
        let phi = EigenfunctionK::new(lam, DEFAULT_CUTOFF).unwrap();
        let h = 1e-5;
        for t in [1.2, 4.0, 30.0] {
            let fd = (phi.psi(t + h) - phi.psi(t - h)) / (2.0 * h);
            assert!((fd - phi.eval(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenfunction_decays_faster_than_one_over_t() {
        let lam: f64 = k_eigenvalue(1).unwrap();
        let phi = EigenfunctionK::new(lam, DEFAULT_CUTOFF).unwrap();
        let mut prev = f64::INFINITY;
        for t in (50..=200).step_by(10) {
            let v = phi.eval(t as f64).abs() * t as f64;
            assert!(v <= prev);
            prev = v;
        }
        let t: f64 = 1e6;
        assert!((phi.eval(t) * t * t / phi.tail_coefficient() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn non_eigenvalue_is_rejected() {
        let lam: f64 = k_eigenvalue(1).unwrap();
        assert!(matches!(EigenfunctionK::new(lam * 1.1, 200.0), Err(Error::Domain(_))));
        assert!(EigenfunctionK::trial(lam * 1.1, 200.0).is_ok());
    }

    #[test]
    fn residual_discriminates() {
        let grid = log_grid(120, DEFAULT_CUTOFF);
        let lam: f64 = k_eigenvalue(1).unwrap();
        let good = eigen_residual(&EigenfunctionK::new(lam, DEFAULT_CUTOFF).unwrap(), &grid).unwrap();
        assert!(good.relative() <= 1e-6, "{}", good.relative());
        let bad = eigen_residual(&EigenfunctionK::trial(lam * 1.1, DEFAULT_CUTOFF).unwrap(), &grid).unwrap();
        assert!(bad.relative() >= 1e-2);
        let lam3: f64 = k_eigenvalue(3).unwrap();
        let third = eigen_residual(&EigenfunctionK::new(lam3, DEFAULT_CUTOFF).unwrap(), &grid).unwrap();
        assert!(third.relative() <= 1e-5);
    }

    #[test]
    fn log_grid_hits_both_ends() {
        for count in [2, 7, 200] {
            let g = log_grid(count, DEFAULT_CUTOFF);
            assert_eq!((g[0], g[count - 1]), (1.0, DEFAULT_CUTOFF));
        }
    }

    #[test]
    fn nystrom_trace_is_midpoint_integral() {
        let ny = nystrom_k::<f64>(200.0, 4000).unwrap();
        assert!((ny.trace() - (1.0 - 1.0 / 200.0)).abs() < 1e-3);
        assert!(nystrom_k::<f64>(20.0, 400).is_err());
        assert!(nystrom_k::<f64>(200.0, 50).is_err());
    }
}
