//! Basis pursuit denoising: `min ‖h‖₁  s.t.  ‖A·h − f‖₂ ≤ ε`.
//!
//! ADMM on the split `h = z` (ℓ1 term), `A·h = w` (ball indicator). Every
//! few iterations the sparse iterate `z` is purified to a vertex, refit on
//! its support and scored against a dual point; the solve stops once a
//! feasible primal candidate has relative duality gap below `solver_tol`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{RecoveryConfig, SparseCoefficients};
use crate::error::{Error, Result};

const CERTIFY_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
const RHO_STEP: f64 = 2.0;
const RHO_FREEZE: usize = 1000;

/// Solver state that depends only on `A`, shareable across right-hand sides.
#[derive(Debug, Clone)]
pub struct BpdnSolver {
    a: DMatrix<f64>,
    at: DMatrix<f64>,
    /// Cholesky factor of `I + A·Aᵀ` (M×M).
    gram: Cholesky<f64, Dyn>,
    /// Orthonormal basis of range(A) when A is row-rank deficient.
    range_basis: Option<DMatrix<f64>>,
}

impl BpdnSolver {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        if m == 0 || n == 0 {
            return Err(Error::validation("measurement matrix is empty"));
        }
        if m > n {
            return Err(Error::validation(format!(
                "more measurements ({m}) than unknowns ({n})"
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("measurement matrix has non-finite entries"));
        }
        let at = a.transpose();
        let gram = Cholesky::new(DMatrix::identity(m, m) + &a * &at)
            .ok_or_else(|| Error::Numerical("I + A·Aᵀ is not positive definite".into()))?;

        let svd = a.clone().svd(true, false);
        let smax = svd.singular_values.max();
        let cutoff = smax * 1e-12 * n as f64;
        let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
        let range_basis = if rank < m {
            let u = svd.u.expect("left singular vectors requested");
            let cols: Vec<usize> = svd
                .singular_values
                .iter()
                .enumerate()
                .filter(|(_, &s)| s > cutoff)
                .map(|(i, _)| i)
                .collect();
            Some(u.select_columns(&cols))
        } else {
            None
        };
        Ok(Self {
            a,
            at,
            gram,
            range_basis,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `(I + AᵀA)⁻¹·b` through the M×M factor.
    fn solve_normal(&self, b: &DVector<f64>) -> DVector<f64> {
        let ab = &self.a * b;
        b - &self.at * self.gram.solve(&ab)
    }

    pub fn solve(&self, f: &[f64], epsilon: f64, config: &RecoveryConfig) -> Result<SparseCoefficients> {
        config.validate()?;
        let (m, n) = self.a.shape();
        if f.len() != m {
            return Err(Error::validation(format!(
                "measurement has {} entries, matrix has {m} rows",
                f.len()
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::validation(format!("epsilon must be nonnegative, got {epsilon}")));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("measurement has non-finite entries"));
        }
        let f = DVector::from_column_slice(f);
        let f_norm = f.norm();
        let tol = config.solver_tol;
        let feas_bound = epsilon + tol * (1.0 + f_norm);

        if f_norm <= epsilon {
            return Ok(SparseCoefficients {
                values: vec![0.0; n],
                residual_norm: f_norm,
                iterations: 0,
            });
        }
        if let Some(q) = &self.range_basis {
            let floor = (&f - q * (q.transpose() * &f)).norm();
            if floor > feas_bound {
                return Err(Error::Infeasible(format!(
                    "measurement is {floor:.3e} from the range of A, above epsilon {epsilon:.3e}"
                )));
            }
        }

        let atf = &self.at * &f;
        let mut rho = 1.0 / atf.amax().max(f64::MIN_POSITIVE);
        let mut h = DVector::<f64>::zeros(n);
        let mut z = DVector::<f64>::zeros(n);
        let mut w = f.clone();
        let mut u = DVector::<f64>::zeros(n);
        let mut v = DVector::<f64>::zeros(m);
        let mut best: Option<(DVector<f64>, f64)> = None;

        for iter in 1..=config.max_iters {
            let rhs = (&z - &u) + &self.at * (&w - &v);
            h = self.solve_normal(&rhs);
            let ah = &self.a * &h;

            let z_old = std::mem::replace(&mut z, soft_threshold(&(&h + &u), 1.0 / rho));
            let w_old = std::mem::replace(&mut w, project_ball(&(&ah + &v), &f, epsilon));

            u += &h - &z;
            v += &ah - &w;

            let r_norm = ((&h - &z).norm_squared() + (&ah - &w).norm_squared()).sqrt();
            let s_norm = rho * ((&z - &z_old) + &self.at * (&w - &w_old)).norm();
            let pri_scale = (h.norm_squared() + ah.norm_squared())
                .sqrt()
                .max((z.norm_squared() + w.norm_squared()).sqrt())
                .max(f64::MIN_POSITIVE);
            // u + Aᵀv vanishes at the optimum, so scale by the blocks separately
            let dual_scale = (rho * (u.norm_squared() + (&self.at * &v).norm_squared()).sqrt()).max(f64::MIN_POSITIVE);

            if iter % CERTIFY_EVERY == 0 || iter == config.max_iters {
                let lambda_admm = -&v * rho;
                let cert = self.certify(&f, epsilon, &[&z, &h], &lambda_admm, tol);
                log::trace!(
                    "iter {iter} rho {rho:.3e} r {:.3e} s {:.3e} nnz {} gap {:?}",
                    r_norm / pri_scale,
                    s_norm / dual_scale,
                    support(&z).len(),
                    cert.as_ref().map(|c| c.1)
                );
                if let Some((cand, gap)) = cert {
                    let l1 = cand.lp_norm(1);
                    if gap <= tol * (1.0 + l1) {
                        let residual_norm = (&self.a * &cand - &f).norm();
                        return Ok(SparseCoefficients {
                            values: cand.as_slice().to_vec(),
                            residual_norm,
                            iterations: iter,
                        });
                    }
                    if best.as_ref().is_none_or(|(_, g)| gap < *g) {
                        best = Some((cand, gap));
                    }
                }
            }

            // residual balancing on scale-free residuals, frozen after burn-in
            let r_rel = r_norm / pri_scale;
            let s_rel = s_norm / dual_scale;
            if iter % CERTIFY_EVERY != 0 || iter > RHO_FREEZE {
                continue;
            }
            if r_rel > BALANCE_RATIO * s_rel {
                rho *= RHO_STEP;
                u /= RHO_STEP;
                v /= RHO_STEP;
            } else if s_rel > BALANCE_RATIO * r_rel {
                rho /= RHO_STEP;
                u *= RHO_STEP;
                v *= RHO_STEP;
            }
        }

        let best_vec = best.map(|(c, _)| c).unwrap_or(h);
        let residual = (&self.a * &best_vec - &f).norm();
        Err(Error::NonConvergence {
            iterations: config.max_iters,
            residual,
            best: best_vec.as_slice().to_vec(),
        })
    }

    /// Best feasible primal candidate derived from the iterates, with its
    /// duality gap against the best available dual point.
    fn certify(
        &self,
        f: &DVector<f64>,
        epsilon: f64,
        iterates: &[&DVector<f64>],
        lambda_admm: &DVector<f64>,
        tol: f64,
    ) -> Option<(DVector<f64>, f64)> {
        let feas_bound = epsilon + tol * (1.0 + f.norm());
        let mut duals = vec![lambda_admm.clone()];
        let mut primals = Vec::new();

        let purified = purify(&self.a, iterates[0]);
        if let Some(p) = refit_support(&self.a, f, epsilon, &purified, lambda_admm) {
            primals.push(p.h);
            duals.push(p.lambda);
        }
        primals.extend(iterates.iter().map(|x| (*x).clone()));

        let dual_value = duals
            .iter()
            .map(|l| {
                let scale = (&self.at * l).amax().max(1.0);
                let l = l / scale;
                l.dot(f) - epsilon * l.norm()
            })
            .fold(f64::NEG_INFINITY, f64::max);

        primals
            .into_iter()
            .filter(|h| (&self.a * h - f).norm() <= feas_bound)
            .map(|h| {
                let gap = h.lp_norm(1) - dual_value;
                (h, gap)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub(crate) fn soft_threshold(x: &DVector<f64>, k: f64) -> DVector<f64> {
    x.map(|v| {
        if v > k {
            v - k
        } else if v < -k {
            v + k
        } else {
            0.0
        }
    })
}

/// Projection onto the Euclidean ball of radius `eps` about `center`.
fn project_ball(x: &DVector<f64>, center: &DVector<f64>, eps: f64) -> DVector<f64> {
    let d = x - center;
    let norm = d.norm();
    if norm <= eps {
        x.clone()
    } else {
        center + d * (eps / norm)
    }
}

fn support(h: &DVector<f64>) -> Vec<usize> {
    h.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Moves `h` to a point with linearly independent support columns while
/// keeping `A·h` fixed and never increasing ‖h‖₁. When the ℓ1 value is flat
/// along a null direction, the highest-index coefficient is driven out first,
/// so ties resolve toward leading dictionary columns.
pub(crate) fn purify(a: &DMatrix<f64>, h: &DVector<f64>) -> DVector<f64> {
    let mut h = h.clone();
    let scale = a.amax().max(f64::MIN_POSITIVE);
    loop {
        let s = support(&h);
        if s.is_empty() {
            return h;
        }
        let a_s = a.select_columns(&s);
        let svd = a_s.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let (smin_idx, smin) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
        let k = s.len();
        let independent = k <= a.nrows() && smin > 1e-10 * scale * (k as f64).sqrt();
        if independent {
            return h;
        }
        // null direction: right singular vector of the smallest singular value,
        // or any row of Vᵀ beyond the thin SVD when k exceeds the row count
        let d: Vec<f64> = if k > svd.singular_values.len() {
            null_vector(&a_s)
        } else {
            v_t.row(smin_idx).iter().copied().collect()
        };
        let slope: f64 = s.iter().zip(&d).map(|(&i, &di)| h[i].signum() * di).sum();
        let dnorm: f64 = d.iter().map(|x| x.abs()).sum();
        // orient d so ‖h + αd‖₁ is nonincreasing for small α > 0
        let dir = if slope.abs() > 1e-12 * dnorm {
            -slope.signum()
        } else {
            let j = (0..k).rev().find(|&j| d[j].abs() > 1e-12 * dnorm).unwrap_or(k - 1);
            -(h[s[j]] * d[j]).signum()
        };
        let mut step = f64::INFINITY;
        let mut hit = None;
        for (idx, (&i, &di)) in s.iter().zip(&d).enumerate() {
            let di = dir * di;
            if di != 0.0 && h[i] * di < 0.0 {
                let t = -h[i] / di;
                if t < step || (t == step && hit.is_some_and(|prev| idx > prev)) {
                    step = t;
                    hit = Some(idx);
                }
            }
        }
        let Some(hit) = hit else {
            return h;
        };
        for (&i, &di) in s.iter().zip(&d) {
            h[i] += step * dir * di;
        }
        h[s[hit]] = 0.0;
    }
}

/// Unit vector in the null space of a wide matrix via Gram-Schmidt against
/// its row space.
fn null_vector(a: &DMatrix<f64>) -> Vec<f64> {
    let k = a.ncols();
    let q = a.transpose().qr().q();
    for j in 0..k {
        let mut e = DVector::<f64>::zeros(k);
        e[j] = 1.0;
        let proj = &q * (q.transpose() * &e);
        let r = e - proj;
        if r.norm() > 1e-8 {
            return (r.normalize()).as_slice().to_vec();
        }
    }
    vec![0.0; k]
}

pub(crate) struct Refit {
    pub h: DVector<f64>,
    pub lambda: DVector<f64>,
}

/// Minimizes the ℓ1 objective restricted to `h`'s support and signs: the
/// least-squares fit on the support, pushed along `−G⁻¹s` until the residual
/// reaches ε. Returns the refit point and its dual multiplier.
pub(crate) fn refit_support(
    a: &DMatrix<f64>,
    f: &DVector<f64>,
    epsilon: f64,
    h: &DVector<f64>,
    lambda_hint: &DVector<f64>,
) -> Option<Refit> {
    let s = support(h);
    if s.is_empty() || s.len() > a.nrows() {
        return None;
    }
    let a_s = a.select_columns(&s);
    let g = a_s.tr_mul(&a_s);
    let chol = Cholesky::new(g)?;
    let h_ls = chol.solve(&a_s.tr_mul(f));
    let r_ls = f - &a_s * &h_ls;
    let signs = DVector::from_iterator(s.len(), s.iter().map(|&i| h[i].signum()));
    let q = chol.solve(&signs);
    let denom = signs.dot(&q);
    if !(denom > 0.0) {
        return None;
    }
    let slack = epsilon * epsilon - r_ls.norm_squared();
    let t = if slack > 0.0 { (slack / denom).sqrt() } else { 0.0 };
    let h_s = &h_ls - &q * t;
    if h_s.iter().zip(signs.iter()).any(|(x, sg)| x * sg <= 0.0) {
        return None;
    }

    let mut full = DVector::<f64>::zeros(a.ncols());
    for (k, &i) in s.iter().enumerate() {
        full[i] = h_s[k];
    }
    let lambda = if t > 0.0 {
        (f - a * &full) / t
    } else {
        // closest point to the ADMM multiplier with A_Sᵀλ = s
        let mismatch = &signs - a_s.tr_mul(lambda_hint);
        lambda_hint + &a_s * chol.solve(&mismatch)
    };
    Some(Refit { h: full, lambda })
}

pub fn bpdn_solve(a: &DMatrix<f64>, f: &[f64], epsilon: f64, config: &RecoveryConfig) -> Result<SparseCoefficients> {
    BpdnSolver::new(a.clone())?.solve(f, epsilon, config)
}
