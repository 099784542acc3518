//! Weighted logistic regression under homogeneous linear inequality constraints.
//!
//! The solver minimizes the weight-normalized negative log-likelihood
//! `sum_k w_k [softplus(z_k) - y_k z_k] / sum_k w_k`, `z_k = theta . x_k`,
//! subject to `c . theta >= 0` for each constraint row `c`.
//!
//! Problems here have at most three coefficients and two constraints, so the
//! active set is found by enumeration: for every subset of constraints the
//! objective is minimized on the subspace where that subset holds with
//! equality (damped Newton with backtracking, falling back to gradient
//! descent), and the feasible candidate with the lowest objective wins. For a
//! convex objective this is the constrained optimum.

use crate::error::{Error, Result};
use crate::math::{sigmoid, softplus};

pub const GRAD_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 200;
const FEASIBILITY_TOL: f64 = 1e-10;
const NOISE_DECREASE: f64 = 1e-10;

/// Design matrix, labels and weights of one fit.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    dim: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    total_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub theta: Vec<f64>,
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LogisticProblem {
    /// `features` is row-major with `dim` columns per sample.
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(features.len(), dim * labels.len());
        assert_eq!(labels.len(), weights.len());
        let total_weight = weights.iter().sum();
        LogisticProblem { dim, x: features, y: labels, w: weights, total_weight }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn rows(&self) -> impl Iterator<Item = (&[f64], f64, f64)> {
        self.x.chunks_exact(self.dim).zip(&self.y).zip(&self.w).map(|((x, &y), &w)| (x, y, w))
    }

    fn z(theta: &[f64], x: &[f64]) -> f64 {
        theta.iter().zip(x).map(|(t, v)| t * v).sum()
    }

    pub fn nll(&self, theta: &[f64]) -> f64 {
        self.rows()
            .map(|(x, y, w)| {
                let z = Self::z(theta, x);
                w * (softplus(z) - y * z)
            })
            .sum::<f64>()
            / self.total_weight
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (x, y, w) in self.rows() {
            let r = w * (sigmoid(Self::z(theta, x)) - y);
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += r * xj;
            }
        }
        g.iter_mut().for_each(|v| *v /= self.total_weight);
        g
    }

    /// Row-major `dim x dim` Hessian.
    pub fn hessian(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut h = vec![0.0; d * d];
        for (x, _, w) in self.rows() {
            let p = sigmoid(Self::z(theta, x));
            let c = w * p * (1.0 - p);
            for a in 0..d {
                for b in 0..d {
                    h[a * d + b] += c * x[a] * x[b];
                }
            }
        }
        h.iter_mut().for_each(|v| *v /= self.total_weight);
        h
    }
}

/// Minimizes the problem subject to `c . theta >= 0` for every row in
/// `constraints`, with coefficients listed in `pinned` held at zero.
pub fn fit_constrained(
    problem: &LogisticProblem,
    constraints: &[Vec<f64>],
    pinned: &[usize],
) -> Result<LogisticFit> {
    let d = problem.dim();
    let pinned_rows: Vec<Vec<f64>> = pinned
        .iter()
        .map(|&k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        })
        .collect();

    let mut best: Option<LogisticFit> = None;
    for mask in 0u32..(1 << constraints.len()) {
        let mut equalities = pinned_rows.clone();
        equalities.extend(
            constraints.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, c)| c.clone()),
        );
        let basis = null_space(&equalities, d);
        let fit = minimize_on_subspace(problem, &basis);
        let feasible = constraints.iter().all(|c| dot(c, &fit.theta) >= -FEASIBILITY_TOL);
        if feasible && fit.nll.is_finite() && best.as_ref().is_none_or(|b| fit.nll < b.nll) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Fit("no feasible solution for constrained logistic fit".into()))
}

fn minimize_on_subspace(problem: &LogisticProblem, basis: &[Vec<f64>]) -> LogisticFit {
    let d = problem.dim();
    let r = basis.len();
    let lift = |beta: &[f64]| -> Vec<f64> {
        let mut theta = vec![0.0; d];
        for (b, z) in beta.iter().zip(basis) {
            for (t, zj) in theta.iter_mut().zip(z) {
                *t += b * zj;
            }
        }
        theta
    };
    if r == 0 {
        let theta = vec![0.0; d];
        return LogisticFit { nll: problem.nll(&theta), theta, iterations: 0, converged: true };
    }
    let reduce_grad = |g: &[f64]| -> Vec<f64> { basis.iter().map(|z| dot(z, g)).collect() };

    let mut beta = vec![0.0; r];
    let mut theta = lift(&beta);
    let mut f = problem.nll(&theta);
    let mut newton_ok = true;
    for iter in 0..MAX_ITER {
        let g = reduce_grad(&problem.gradient(&theta));
        if g.iter().all(|v| v.abs() < GRAD_TOL) {
            return LogisticFit { theta, nll: f, iterations: iter, converged: true };
        }
        let direction = if newton_ok {
            let h_full = problem.hessian(&theta);
            let mut h = vec![0.0; r * r];
            for a in 0..r {
                for b in 0..r {
                    h[a * r + b] = quad(&basis[a], &h_full, &basis[b], d);
                }
            }
            match solve_damped(&h, &g, r) {
                Some(step) => step,
                None => {
                    newton_ok = false;
                    g.iter().map(|v| -v).collect()
                }
            }
        } else {
            g.iter().map(|v| -v).collect()
        };
        let slope = dot(&g, &direction);
        // Close to the optimum the predicted decrease drops below the rounding
        // noise of the summed objective, so the sufficient-decrease test is
        // meaningless; take the full Newton step.
        if newton_ok && -slope <= NOISE_DECREASE * f.abs().max(1.0) {
            let cand: Vec<f64> = beta.iter().zip(&direction).map(|(b, s)| b + s).collect();
            let cand_theta = lift(&cand);
            let fc = problem.nll(&cand_theta);
            if fc.is_finite() {
                beta = cand;
                theta = cand_theta;
                f = fc;
                continue;
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let cand: Vec<f64> = beta.iter().zip(&direction).map(|(b, s)| b + t * s).collect();
            let cand_theta = lift(&cand);
            let fc = problem.nll(&cand_theta);
            if fc.is_finite() && fc <= f + 1e-4 * t * slope {
                beta = cand;
                theta = cand_theta;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if newton_ok {
                newton_ok = false;
                continue;
            }
            return LogisticFit { theta, nll: f, iterations: iter + 1, converged: false };
        }
    }
    let g = reduce_grad(&problem.gradient(&theta));
    let converged = g.iter().all(|v| v.abs() < GRAD_TOL);
    LogisticFit { theta, nll: f, iterations: MAX_ITER, converged }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad(a: &[f64], m: &[f64], b: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += a[i] * m[i * d + j] * b[j];
        }
    }
    s
}

/// Solves `(H + lambda I) step = -g` by Cholesky, raising `lambda` until the
/// factorization succeeds.
fn solve_damped(h: &[f64], g: &[f64], r: usize) -> Option<Vec<f64>> {
    let scale = (0..r).map(|i| h[i * r + i].abs()).fold(0.0, f64::max).max(1e-300);
    let mut lambda = 0.0;
    for _ in 0..30 {
        let mut m = h.to_vec();
        for i in 0..r {
            m[i * r + i] += lambda;
        }
        if let Some(l) = cholesky(&m, r) {
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            return Some(cholesky_solve(&l, &rhs, r));
        }
        lambda = if lambda == 0.0 { 1e-10 * scale } else { lambda * 10.0 };
    }
    None
}

fn cholesky(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    x
}

/// Orthonormal basis of `{v : e . v = 0 for every row e}`.
fn null_space(rows: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        if let Some(v) = orthogonalize(row.clone(), &ortho) {
            ortho.push(v);
        }
    }
    let mut basis = Vec::new();
    for j in 0..d {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        let against: Vec<Vec<f64>> = ortho.iter().chain(&basis).cloned().collect();
        if let Some(v) = orthogonalize(e, &against) {
            basis.push(v);
        }
    }
    basis
}

fn orthogonalize(mut v: Vec<f64>, against: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for q in against {
            let p = dot(&v, q);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
    }
    let norm = dot(&v, &v).sqrt();
    (norm > 1e-10).then(|| v.into_iter().map(|a| a / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> LogisticProblem {
        // s in {-1, +1} with P(y=1) = 0.2 and 0.8, features (s, 1)
        LogisticProblem::new(2, vec![-1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0], vec![1.0, 0.0, 1.0, 0.0], vec![0.2, 0.8, 0.8, 0.2])
    }

    #[test]
    fn unconstrained_two_point_moment_match() {
        let fit = fit_constrained(&two_point(), &[], &[]).unwrap();
        assert!(fit.converged);
        let (a, b) = (fit.theta[0], fit.theta[1]);
        assert!((sigmoid(-a + b) - 0.2).abs() < 1e-9);
        assert!((sigmoid(a + b) - 0.8).abs() < 1e-9);
    }

    #[test]
    fn active_constraint_pins_slope_at_zero() {
        // the data prefers a negative slope; a >= 0 forces a = 0 and b = logit(mean)
        let p = LogisticProblem::new(2, vec![-1.0, 1.0, 1.0, 1.0], vec![0.9, 0.1], vec![1.0, 1.0]);
        let fit = fit_constrained(&p, &[vec![1.0, 0.0]], &[]).unwrap();
        assert!(fit.theta[0].abs() < 1e-12);
        assert!((sigmoid(fit.theta[1]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn pinned_coefficient_stays_zero() {
        let fit = fit_constrained(&two_point(), &[], &[0]).unwrap();
        assert_eq!(fit.theta[0], 0.0);
        assert!((sigmoid(fit.theta[1]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn null_space_is_orthogonal() {
        let basis = null_space(&[vec![1.0, 2.0, 0.0]], 3);
        assert_eq!(basis.len(), 2);
        for z in &basis {
            assert!(dot(z, &[1.0, 2.0, 0.0]).abs() < 1e-12);
            assert!((dot(z, z) - 1.0).abs() < 1e-12);
        }
    }
}
