//! Exact single-unit transfer law at finite `n`.
//!
//! A unit started uniformly on `{1..n}` visits a decreasing sequence of
//! ranks. Writing `h(v, U)` for the probability that a unit currently at
//! `v > U` ever reaches `U`, the first step out of `v` is uniform on the
//! `w(v)` effective targets, so
//!
//! ```text
//! h(v, U) = (1 / w(v)) * (1 + Σ_{u=U+1}^{v-1} h(u, U))
//! ```
//!
//! with `w(v) = v` when a self-pick terminates the unit and `w(v) = v - 1`
//! when it is a no-op. The visit probability is
//! `P(U) = (1 + Σ_{v>U} h(v, U)) / n`, and every downward edge out of `i` is
//! taken with probability `P(i) / w(i)`.

use crate::dynamics::LeakSemantics;
use crate::error::{Error, Result};
use crate::linalg::MaxKernel;
use crate::{Field, Real};

/// Visit, edge and leak probabilities for one unit, indexed by rank - 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbabilities<F> {
    pub n: usize,
    pub semantics: LeakSemantics,
    /// `P(visit U)`.
    pub visit: Vec<F>,
    /// Probability of the downward move `i → j` for any fixed `j < i`.
    pub step: Vec<F>,
    /// Probability that the unit terminates at `i` and records a diagonal
    /// event (zero everywhere under `stay`).
    pub leak: Vec<F>,
}

impl<F: Field> EdgeProbabilities<F> {
    /// Probability that the unit traverses the edge `{i, j}` (1-based,
    /// either order); `i == j` gives the leak probability.
    pub fn edge(&self, i: usize, j: usize) -> F {
        assert!(i >= 1 && j >= 1 && i <= self.n && j <= self.n, "rank out of range");
        let u = i.max(j);
        if i == j {
            self.leak[u - 1].clone()
        } else {
            self.step[u - 1].clone()
        }
    }

    /// `Σ_{j <= i} P_edge(i, j)`: everything that leaves or ends at `i`.
    pub fn row_sum(&self, i: usize) -> F {
        let mut s = self.leak[i - 1].clone();
        s += self.step[i - 1].clone() * F::from_count(i - 1);
        s
    }

    /// Expected number of distinct vertices visited.
    pub fn expected_path_length(&self) -> F {
        self.visit.iter().cloned().fold(F::zero(), |a, b| a + b)
    }
}

impl<T: Real> EdgeProbabilities<T> {
    /// `m` times the edge-probability matrix, as an O(n) operator.
    pub fn to_kernel(&self, m: T) -> MaxKernel<T> {
        MaxKernel::new(self.step.clone(), self.leak.clone()).scaled(m)
    }
}

/// Runs the recursion for all ranks; O(n^2) time, O(n) memory.
pub fn exact_edge_probability<F: Field>(n: usize, semantics: LeakSemantics) -> Result<EdgeProbabilities<F>> {
    if n == 0 {
        return Err(Error::domain("edge probabilities need n >= 1"));
    }
    let records_leak = semantics.records_leak();
    // 1 / w(v); vertex 1 under `stay` has no effective move and never needs it.
    let inv_width: Vec<F> = (1..=n)
        .map(|v| {
            let w = if records_leak { v } else { v - 1 };
            if w == 0 {
                F::zero()
            } else {
                F::one() / F::from_count(w)
            }
        })
        .collect();

    let n_f = F::from_count(n);
    let mut visit = Vec::with_capacity(n);
    for u in 1..=n {
        let mut below = F::zero();
        for v in u + 1..=n {
            let h = inv_width[v - 1].clone() * (F::one() + below.clone());
            below += h;
        }
        visit.push((F::one() + below) / n_f.clone());
    }

    let step: Vec<F> = visit
        .iter()
        .zip(&inv_width)
        .map(|(p, w)| p.clone() * w.clone())
        .collect();
    let leak = if records_leak { step.clone() } else { vec![F::zero(); n] };
    Ok(EdgeProbabilities {
        n,
        semantics,
        visit,
        step,
        leak,
    })
}

/// `(n+1) / (n (U+1))` when self-picks terminate, `1/U` when they are no-ops.
pub fn visit_probability_closed_form<F: Field>(n: usize, u: usize, semantics: LeakSemantics) -> F {
    if semantics.records_leak() {
        F::from_count(n + 1) / (F::from_count(n) * F::from_count(u + 1))
    } else {
        F::one() / F::from_count(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use num_traits::{One, Zero};

    const ALL: [LeakSemantics; 3] = [LeakSemantics::Remove, LeakSemantics::Stay, LeakSemantics::Freeze];

    #[test]
    fn recursion_matches_closed_forms_exactly() {
        for n in 1..=30 {
            for sem in ALL {
                let p = exact_edge_probability::<Rational>(n, sem).unwrap();
                for u in 1..=n {
                    assert_eq!(
                        p.visit[u - 1],
                        visit_probability_closed_form(n, u, sem),
                        "n={n} U={u} {sem:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn outflow_is_conserved_exactly() {
        let p = exact_edge_probability::<Rational>(25, LeakSemantics::Remove).unwrap();
        for i in 1..=25 {
            assert_eq!(p.row_sum(i), p.visit[i - 1]);
        }
        let s = exact_edge_probability::<Rational>(25, LeakSemantics::Stay).unwrap();
        for i in 2..=25 {
            assert_eq!(s.row_sum(i), s.visit[i - 1]);
        }
        // Under `stay` the unit ends at 1 without a recorded event.
        assert!(s.row_sum(1).is_zero());
        assert!(s.visit[0].is_one());
    }

    #[test]
    fn total_leak_is_one_unit() {
        let p = exact_edge_probability::<Rational>(17, LeakSemantics::Freeze).unwrap();
        let total = p.leak.iter().cloned().fold(Rational::zero(), |a, b| a + b);
        assert!(total.is_one());
    }

    #[test]
    fn two_vertex_law() {
        let p = exact_edge_probability::<Rational>(2, LeakSemantics::Remove).unwrap();
        // Start at 2 w.p. 1/2, then move to 1 w.p. 1/2.
        assert_eq!(p.edge(2, 1), Rational::new(1.into(), 4.into()));
        assert_eq!(p.edge(1, 1), Rational::new(3.into(), 4.into()));
    }

    #[test]
    fn floating_point_edge_at_scale() {
        let p = exact_edge_probability::<f64>(1000, LeakSemantics::Remove).unwrap();
        let want = 1001.0 / (1000.0 * 10.0 * 11.0);
        assert!((p.edge(10, 3) - want).abs() < 1e-15);
        assert!((p.edge(3, 10) * 1000.0 - 9.1).abs() < 1e-3);
    }

    #[test]
    fn approaches_inverse_square_kernel() {
        let p = exact_edge_probability::<f64>(4000, LeakSemantics::Remove).unwrap();
        for u in [5usize, 50, 500] {
            let ratio = p.edge(u, 1) * (u * u) as f64;
            let want = u as f64 / (u as f64 + 1.0) * 4001.0 / 4000.0;
            assert!((ratio - want).abs() < 1e-12);
        }
    }
}
