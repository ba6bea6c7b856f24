//! Reference implementations used by the integration and acceptance tests.
//! They share no code with the library beyond its data types.
#![allow(dead_code)]

use activesplit::{Fingerprint, N_BITS};
use itertools::Itertools;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A γ for which the active count of an `n`-element test set is `a`.
pub fn gamma_for(n: usize, a: usize) -> f64 {
    1.0 - (a as f64 + 0.5) / n as f64
}

/// Positions of the `a` largest truths; a lower position wins a tie.
pub fn oracle_actives(truth: &[f64], a: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..truth.len())
        .filter(|&i| {
            let beaten_by = (0..truth.len())
                .filter(|&j| truth[j] > truth[i] || (truth[j] == truth[i] && j < i))
                .count();
            beaten_by < a
        })
        .collect();
    v.sort_unstable();
    v
}

/// Losses for one strict ranking: `order[r]` is the position ranked r-th.
pub fn losses_for_order(order: &[usize], actives: &[usize]) -> (f64, f64) {
    let n = order.len() as f64;
    let a = actives.len() as f64;
    let ranks: Vec<f64> = order
        .iter()
        .enumerate()
        .filter(|(_, p)| actives.contains(p))
        .map(|(r, _)| r as f64)
        .collect();
    let min = ranks.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum: f64 = ranks.iter().sum();
    (min / (n - a), (sum - a * (a - 1.0) / 2.0) / (a * (n - a)))
}

/// Mean losses over every strict ranking consistent with `predicted`
/// (higher prediction ranks first; tied predictions in any order).
pub fn oracle_losses(predicted: &[f64], truth: &[f64], a: usize) -> (f64, f64) {
    let actives = oracle_actives(truth, a);
    let n = predicted.len();
    let mut count = 0usize;
    let (mut lmin, mut lsum) = (0.0, 0.0);
    for order in (0..n).permutations(n) {
        let consistent = order.windows(2).all(|w| predicted[w[0]] >= predicted[w[1]]);
        if consistent {
            let (m, s) = losses_for_order(&order, &actives);
            lmin += m;
            lsum += s;
            count += 1;
        }
    }
    (lmin / count as f64, lsum / count as f64)
}

/// Element at sorted index min(⌊n·f⌋, n−1), found by counting.
pub fn oracle_quantile(values: &[f64], fraction: f64) -> f64 {
    let n = values.len();
    let k = ((n as f64 * fraction).floor() as usize).min(n - 1);
    *values
        .iter()
        .find(|&&v| {
            let below = values.iter().filter(|&&x| x < v).count();
            let at_most = values.iter().filter(|&&x| x <= v).count();
            below <= k && k < at_most
        })
        .expect("some element holds every index")
}

pub fn random_fingerprint(r: &mut impl Rng, density: f64) -> Fingerprint {
    let bits: Vec<u8> = (0..N_BITS).map(|_| r.gen_bool(density) as u8).collect();
    Fingerprint::from_bits(&bits).unwrap()
}

/// Random regression problem with a sparse linear signal plus noise.
pub fn random_problem(seed: u64, n: usize, density: f64) -> (Vec<Fingerprint>, Vec<f64>) {
    let mut r = rng(seed);
    let w: Vec<f64> = (0..N_BITS)
        .map(|_| {
            if r.gen_bool(0.3) {
                r.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let x: Vec<Fingerprint> = (0..n)
        .map(|_| random_fingerprint(&mut r, density))
        .collect();
    let y = x
        .iter()
        .map(|fp| {
            6.0 + (0..N_BITS)
                .filter(|&j| fp.bit(j))
                .map(|j| w[j])
                .sum::<f64>()
                + r.gen_range(-0.5..0.5)
        })
        .collect();
    (x, y)
}

/// Minimizes ‖y − b − Xw‖² + α‖w‖² by conjugate gradients on the
/// uncentered normal equations in (w, b). Returns (w, b).
pub fn ridge_by_cg(x: &[Fingerprint], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let p = N_BITS + 1;
    let rows: Vec<Vec<f64>> = x
        .iter()
        .map(|fp| {
            let mut row: Vec<f64> = (0..N_BITS).map(|j| fp.bit(j) as u8 as f64).collect();
            row.push(1.0);
            row
        })
        .collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; p];
        for row in &rows {
            let s: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * s;
            }
        }
        for j in 0..N_BITS {
            out[j] += alpha * v[j];
        }
        out
    };
    let mut rhs = vec![0.0; p];
    for (row, &t) in rows.iter().zip(y) {
        for (o, a) in rhs.iter_mut().zip(row) {
            *o += a * t;
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut theta = vec![0.0; p];
    let mut res = rhs.clone();
    let mut dir = res.clone();
    let mut rr = dot(&res, &res);
    let scale = rr.sqrt().max(1.0);
    for _ in 0..20 * p {
        if rr.sqrt() < 1e-13 * scale {
            break;
        }
        let ad = apply(&dir);
        let step = rr / dot(&dir, &ad);
        for i in 0..p {
            theta[i] += step * dir[i];
            res[i] -= step * ad[i];
        }
        let rr_next = dot(&res, &res);
        let beta = rr_next / rr;
        for i in 0..p {
            dir[i] = res[i] + beta * dir[i];
        }
        rr = rr_next;
    }
    let b = theta.pop().unwrap();
    (theta, b)
}

/// Least squares with intercept through a QR factorization of [X 1].
pub fn ols(x: &[Fingerprint], y: &[f64], columns: &[usize]) -> (Vec<f64>, f64) {
    let n = x.len();
    let k = columns.len() + 1;
    let a = nalgebra::DMatrix::from_fn(n, k, |i, j| {
        if j < columns.len() {
            x[i].bit(columns[j]) as u8 as f64
        } else {
            1.0
        }
    });
    let b = nalgebra::DVector::from_column_slice(y);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let sol = qr
        .r()
        .solve_upper_triangular(&qtb)
        .expect("full column rank");
    (sol.as_slice()[..columns.len()].to_vec(), sol[columns.len()])
}
