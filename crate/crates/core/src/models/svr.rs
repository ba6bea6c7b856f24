//! Linear-kernel ε-insensitive support vector regression.
//!
//! Solves the dual
//!
//! ```text
//! min ½ αᵀQα + pᵀα   s.t.  Σ zₜαₜ = 0,  0 ≤ αₜ ≤ C
//! ```
//!
//! over 2n variables (the upper and lower tube multipliers) with sequential
//! minimal optimization and second-order working-set selection. The
//! equality constraint comes from the unregularized intercept. Iteration
//! stops once the maximal KKT violation drops below `tol`.
//!
//! Inputs are 0/1 fingerprints, so every kernel entry is a popcount.

use serde::{Deserialize, Serialize};

use crate::data::{Fingerprint, N_BITS};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-4,
            max_iter: 10_000,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!("svr c must be > 0, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::domain(format!(
                "svr epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::domain(format!(
                "svr tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("svr max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvrModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
    /// Dual variables: `alpha[i]` for the upper tube, `alpha[n + i]` for the lower.
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation at exit.
    pub kkt_violation: f64,
}

impl SvrModel {
    pub fn predict_fingerprint(&self, x: Fingerprint) -> f64 {
        let mut acc = self.intercept;
        for (j, c) in self.coef.iter().enumerate() {
            if x.bit(j) {
                acc += c;
            }
        }
        acc
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Dual problem state shared by the solver and the KKT check.
struct Dual<'a> {
    x: &'a [Fingerprint],
    n: usize,
    c: f64,
}

impl Dual<'_> {
    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn base(&self, t: usize) -> usize {
        t % self.n
    }

    /// Column `t` of Q: `Q[t][u] = zₜ z_u K(xₜ, x_u)`.
    fn column(&self, t: usize, out: &mut [f64]) {
        let xt = self.x[self.base(t)];
        let zt = self.sign(t);
        let (upper, lower) = out.split_at_mut(self.n);
        for (s, (u, l)) in upper.iter_mut().zip(lower.iter_mut()).enumerate() {
            let k = xt.dot(self.x[s]);
            *u = zt * k;
            *l = -zt * k;
        }
    }

    fn in_up(&self, t: usize, a: f64) -> bool {
        if self.sign(t) > 0.0 {
            a < self.c
        } else {
            a > 0.0
        }
    }

    fn in_low(&self, t: usize, a: f64) -> bool {
        if self.sign(t) > 0.0 {
            a > 0.0
        } else {
            a < self.c
        }
    }

    /// `max_{I_up} -zG - min_{I_low} -zG`, zero or negative at optimality.
    fn violation(&self, alpha: &[f64], grad: &[f64]) -> f64 {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::NEG_INFINITY;
        for t in 0..alpha.len() {
            let zg = -self.sign(t) * grad[t];
            if self.in_up(t, alpha[t]) {
                up = up.max(zg);
            }
            if self.in_low(t, alpha[t]) {
                low = low.max(-zg);
            }
        }
        up + low
    }
}

pub fn fit(params: &SvrParams, x: &[Fingerprint], y: &[f64]) -> SvrModel {
    let n = x.len();
    let l = 2 * n;
    let c = params.c;
    let dual = Dual { x, n, c };

    let diag: Vec<f64> = (0..l).map(|t| x[t % n].dot(x[t % n])).collect();
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - n]
            }
        })
        .collect();

    let mut qi = vec![0.0; l];
    let mut qj = vec![0.0; l];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        // First index: maximal violation of -zG over I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if dual.in_up(t, alpha[t]) {
                let v = -dual.sign(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        dual.column(i, &mut qi);

        // Second index: largest guaranteed objective decrease over I_low.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..l {
            if !dual.in_low(t, alpha[t]) {
                continue;
            }
            let zg = dual.sign(t) * grad[t];
            gmax2 = gmax2.max(zg);
            let grad_diff = gmax + zg;
            if grad_diff > 0.0 {
                let mut quad = diag[i] + diag[t] - 2.0 * dual.sign(i) * dual.sign(t) * qi[t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj < best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < params.tol {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        dual.column(j, &mut qj);
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (zi, zj) = (dual.sign(i), dual.sign(j));
        if zi != zj {
            let mut quad = diag[i] + diag[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }

    let kkt_violation = dual.violation(&alpha, &grad).max(0.0);
    let intercept = -rho(&dual, &alpha, &grad);

    let mut coef = vec![0.0; N_BITS];
    for s in 0..n {
        let beta = alpha[s] - alpha[n + s];
        if beta != 0.0 {
            for (j, w) in coef.iter_mut().enumerate() {
                if x[s].bit(j) {
                    *w += beta;
                }
            }
        }
    }

    SvrModel {
        coef,
        intercept,
        alpha,
        iterations,
        converged,
        kkt_violation,
    }
}

/// Offset of the decision function: the mean of `zG` over free variables,
/// or the midpoint of the feasible interval when none are free.
fn rho(dual: &Dual<'_>, alpha: &[f64], grad: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let zg = dual.sign(t) * grad[t];
        let positive = dual.sign(t) > 0.0;
        if alpha[t] >= dual.c {
            if positive {
                lb = lb.max(zg);
            } else {
                ub = ub.min(zg);
            }
        } else if alpha[t] <= 0.0 {
            if positive {
                ub = ub.min(zg);
            } else {
                lb = lb.max(zg);
            }
        } else {
            free += 1;
            free_sum += zg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Recomputes the dual gradient from scratch and returns the maximal KKT
/// violation of `model.alpha` on `(x, y)`.
pub fn kkt_violation(params: &SvrParams, model: &SvrModel, x: &[Fingerprint], y: &[f64]) -> f64 {
    let n = x.len();
    let dual = Dual { x, n, c: params.c };
    let l = 2 * n;
    let beta: Vec<f64> = (0..n)
        .map(|s| model.alpha[s] - model.alpha[n + s])
        .collect();
    let grad: Vec<f64> = (0..l)
        .map(|t| {
            let s = t % n;
            let k_beta: f64 = (0..n).map(|u| x[s].dot(x[u]) * beta[u]).sum();
            if t < n {
                k_beta + params.epsilon - y[s]
            } else {
                -k_beta + params.epsilon + y[s]
            }
        })
        .collect();
    dual.violation(&model.alpha, &grad).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn problem(n: usize, seed: u64) -> (Vec<Fingerprint>, Vec<f64>) {
        let mut r = rng::rng_from_seed(seed);
        let w: Vec<f64> = (0..N_BITS).map(|_| r.gen_range(-0.3..0.3)).collect();
        let x: Vec<Fingerprint> = (0..n)
            .map(|_| Fingerprint::from_u128(r.gen::<u128>() & r.gen::<u128>()))
            .collect();
        let y = x
            .iter()
            .map(|f| {
                6.0 + (0..N_BITS).filter(|&j| f.bit(j)).map(|j| w[j]).sum::<f64>()
                    + r.gen_range(-0.2..0.2)
            })
            .collect();
        (x, y)
    }

    #[test]
    fn converges_and_satisfies_kkt() {
        let (x, y) = problem(80, 4);
        let params = SvrParams::default();
        let m = fit(&params, &x, &y);
        assert!(m.converged, "iterations {}", m.iterations);
        assert!(m.kkt_violation <= params.tol);
        let recomputed = kkt_violation(&params, &m, &x, &y);
        assert!(recomputed <= params.tol + 1e-9, "{recomputed}");
        // Equality constraint from the free intercept.
        let s: f64 = (0..x.len())
            .map(|i| m.alpha[i] - m.alpha[x.len() + i])
            .sum();
        assert!(s.abs() < 1e-9);
        assert!(m.alpha.iter().all(|&a| (0.0..=params.c).contains(&a)));
    }

    #[test]
    fn wide_tube_gives_flat_model() {
        let (x, y) = problem(30, 8);
        let params = SvrParams {
            epsilon: 100.0,
            ..Default::default()
        };
        let m = fit(&params, &x, &y);
        assert!(m.coef.iter().all(|&c| c == 0.0));
        assert!(m.converged);
    }

    #[test]
    fn iteration_cap_flags_non_convergence() {
        let (x, y) = problem(80, 5);
        let params = SvrParams {
            max_iter: 3,
            ..Default::default()
        };
        let m = fit(&params, &x, &y);
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn fits_linear_signal() {
        let (x, y) = problem(200, 6);
        let m = fit(&SvrParams::default(), &x, &y);
        let mse: f64 = x
            .iter()
            .zip(&y)
            .map(|(&f, &t)| (m.predict_fingerprint(f) - t).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / y.len() as f64;
        assert!(mse < 0.2 * var, "mse {mse} var {var}");
    }
}
