//! Exhaustive sparsest-solution search, used as ground truth for the solver.

use nalgebra::{DMatrix, DVector};

use super::SparseCoefficients;
use crate::error::{Error, Result};

pub const ORACLE_MAX_COLUMNS: usize = 24;
pub const ORACLE_MAX_SUPPORT: usize = 4;

/// Enumerates every support of size `0..=k_max` (lexicographic within a
/// size), fits least squares on each, and returns the smallest feasible
/// support; ties go to the smaller ℓ1 norm, then the earlier support.
///
/// A support counts as feasible when its residual is at most
/// `epsilon + 1e-9·(1 + ‖f‖₂)`; the slack absorbs rounding in the fit.
pub fn l0_oracle(a: &DMatrix<f64>, f: &[f64], k_max: usize, epsilon: f64) -> Result<SparseCoefficients> {
    let (m, n) = a.shape();
    if n > ORACLE_MAX_COLUMNS || k_max > ORACLE_MAX_SUPPORT {
        return Err(Error::validation(format!(
            "oracle budget exceeded: {n} columns (max {ORACLE_MAX_COLUMNS}), k_max {k_max} (max {ORACLE_MAX_SUPPORT})"
        )));
    }
    if f.len() != m {
        return Err(Error::validation(format!(
            "measurement has {} entries, matrix has {m} rows",
            f.len()
        )));
    }
    let f = DVector::from_column_slice(f);
    let bound = epsilon + 1e-9 * (1.0 + f.norm());

    if f.norm() <= bound {
        return Ok(SparseCoefficients {
            values: vec![0.0; n],
            residual_norm: f.norm(),
            iterations: 0,
        });
    }

    let mut visited = 0;
    for k in 1..=k_max.min(n) {
        let mut best: Option<(f64, DVector<f64>, f64)> = None;
        for support in Combinations::new(n, k) {
            visited += 1;
            let a_s = a.select_columns(&support);
            let Ok(coef) = a_s.clone().svd(true, true).solve(&f, 1e-14) else {
                continue;
            };
            let residual = (&a_s * &coef - &f).norm();
            if residual > bound {
                continue;
            }
            let l1 = coef.lp_norm(1);
            let better = best.as_ref().is_none_or(|(b, _, _)| l1 < *b * (1.0 - 1e-12));
            if better {
                let mut full = DVector::zeros(n);
                for (c, &i) in coef.iter().zip(&support) {
                    full[i] = *c;
                }
                best = Some((l1, full, residual));
            }
        }
        if let Some((_, values, residual_norm)) = best {
            return Ok(SparseCoefficients {
                values: values.as_slice().to_vec(),
                residual_norm,
                iterations: visited,
            });
        }
    }
    Err(Error::Infeasible(format!(
        "no support of size at most {k_max} fits within epsilon {epsilon:.3e}"
    )))
}

/// Lexicographic k-subsets of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in (i + 1)..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        assert_eq!(Combinations::new(5, 2).count(), 10);
        assert_eq!(Combinations::new(4, 0).count(), 1);
        let all: Vec<_> = Combinations::new(3, 2).collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn zero_measurement() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = l0_oracle(&a, &[0.0, 0.0], 2, 0.0).unwrap();
        assert_eq!(out.values, vec![0.0; 3]);
    }

    #[test]
    fn identity_single_entry() {
        let a = DMatrix::<f64>::identity(3, 3);
        let out = l0_oracle(&a, &[0.0, 0.0, 7.0], 1, 0.0).unwrap();
        assert!((out.values[2] - 7.0).abs() < 1e-12);
        assert_eq!(out.values[0], 0.0);
        assert_eq!(out.values[1], 0.0);
    }

    #[test]
    fn infeasible_within_budget() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(
            l0_oracle(&a, &[1.0, 1.0, 1.0], 2, 0.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn budget_enforced() {
        let a = DMatrix::<f64>::zeros(2, 30);
        assert!(matches!(l0_oracle(&a, &[1.0, 0.0], 2, 0.0), Err(Error::Validation(_))));
    }
}
