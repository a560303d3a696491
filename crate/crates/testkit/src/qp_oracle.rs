//! Brute-force reference solver for the one-class SVM dual:
//!
//! ```text
//!     minimize    1/2 a' Q a      Q_ij = exp(-gamma |x_i - x_j|^2)
//!     subject to  sum a = 1,      0 <= a_i <= 1/(nu l)
//! ```
//!
//! Projected gradient with Nesterov momentum and adaptive restart. The
//! projection onto the capped simplex is computed by bisection. Slow and
//! simple on purpose; intended for l <= a few hundred.

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub rho: f64,
    pub iterations: usize,
}

pub fn rbf(a: &[f64; 4], b: &[f64; 4], gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for c in 0..4 {
        let d = a[c] - b[c];
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

pub fn gram_matrix(points: &[[f64; 4]], gamma: f64) -> Vec<Vec<f64>> {
    let l = points.len();
    let mut q = vec![vec![0.0; l]; l];
    for i in 0..l {
        for j in 0..=i {
            let k = rbf(&points[i], &points[j], gamma);
            q[i][j] = k;
            q[j][i] = k;
        }
    }
    q
}

/// 1/2 a' Q a for an explicit alpha vector.
pub fn objective(points: &[[f64; 4]], gamma: f64, alpha: &[f64]) -> f64 {
    let l = points.len();
    assert_eq!(alpha.len(), l);
    let mut w = 0.0;
    for i in 0..l {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..l {
            if alpha[j] != 0.0 {
                w += alpha[i] * alpha[j] * rbf(&points[i], &points[j], gamma);
            }
        }
    }
    0.5 * w
}

/// sum_i alpha_i k(x_i, x) - rho.
pub fn decision_score(
    points: &[[f64; 4]],
    alpha: &[f64],
    gamma: f64,
    rho: f64,
    x: &[f64; 4],
) -> f64 {
    let mut s = 0.0;
    for (p, &a) in points.iter().zip(alpha) {
        if a != 0.0 {
            s += a * rbf(p, x, gamma);
        }
    }
    s - rho
}

/// KKT violation of a feasible alpha: max gradient over movable-down
/// coordinates minus min gradient over movable-up coordinates. <= 0 at the
/// exact optimum.
pub fn kkt_gap(points: &[[f64; 4]], alpha: &[f64], gamma: f64, nu: f64) -> f64 {
    let l = points.len();
    let cap = 1.0 / (nu * l as f64);
    let bound_tol = cap * 1e-9;
    let mut up = f64::INFINITY;
    let mut down = f64::NEG_INFINITY;
    for i in 0..l {
        let g = gradient_at(points, alpha, gamma, i);
        if alpha[i] < cap - bound_tol {
            up = up.min(g);
        }
        if alpha[i] > bound_tol {
            down = down.max(g);
        }
    }
    down - up
}

fn gradient_at(points: &[[f64; 4]], alpha: &[f64], gamma: f64, i: usize) -> f64 {
    let mut g = 0.0;
    for (p, &a) in points.iter().zip(alpha) {
        if a != 0.0 {
            g += a * rbf(&points[i], p, gamma);
        }
    }
    g
}

/// Euclidean projection onto { sum a = 1, 0 <= a_i <= cap } by bisection on
/// the shift multiplier.
fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clip_sum =
        |lambda: f64| -> f64 { v.iter().map(|&x| (x - lambda).clamp(0.0, cap)).sum::<f64>() };
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - cap - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clip_sum(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    v.iter().map(|&x| (x - lambda).clamp(0.0, cap)).collect()
}

/// Solve the dual to high accuracy. `max_iter` caps gradient steps; the
/// solver stops early once the objective stagnates.
pub fn solve_one_class_dual(
    points: &[[f64; 4]],
    nu: f64,
    gamma: f64,
    max_iter: usize,
) -> OracleSolution {
    let l = points.len();
    assert!(l > 0 && nu > 0.0 && nu <= 1.0);
    let cap = 1.0 / (nu * l as f64);
    let q = gram_matrix(points, gamma);
    // Lipschitz bound: max row sum of Q.
    let lip = q
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let step = 1.0 / lip;

    let grad = |a: &[f64]| -> Vec<f64> {
        (0..l)
            .map(|i| q[i].iter().zip(a).map(|(k, x)| k * x).sum::<f64>())
            .collect()
    };
    let obj = |a: &[f64]| -> f64 { 0.5 * (0..l).map(|i| grad_dot(&q[i], a) * a[i]).sum::<f64>() };

    let mut alpha = project_capped_simplex(&vec![1.0 / l as f64; l], cap);
    let mut prev = alpha.clone();
    let mut t = 1.0f64;
    let mut best = obj(&alpha);
    let mut stagnant = 0usize;
    let mut iterations = 0usize;

    for k in 0..max_iter {
        iterations = k + 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let y: Vec<f64> = alpha
            .iter()
            .zip(&prev)
            .map(|(&a, &p)| a + momentum * (a - p))
            .collect();
        let g = grad(&y);
        let stepped: Vec<f64> = y.iter().zip(&g).map(|(&x, &gi)| x - step * gi).collect();
        let next = project_capped_simplex(&stepped, cap);

        let w = obj(&next);
        if w > best {
            // adaptive restart: drop momentum when the objective rises
            prev = alpha.clone();
            t = 1.0;
            stagnant += 1;
        } else {
            if best - w < 1e-16 * best.abs().max(1.0) {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
            best = w;
            prev = std::mem::replace(&mut alpha, next);
            t = t_next;
        }
        if stagnant > 500 {
            break;
        }
    }

    let g = grad(&alpha);
    let rho = rho_from(&alpha, &g, cap);
    OracleSolution {
        objective: obj(&alpha),
        alpha,
        rho,
        iterations,
    }
}

fn grad_dot(row: &[f64], a: &[f64]) -> f64 {
    row.iter().zip(a).map(|(k, x)| k * x).sum()
}

/// Offset convention shared with the production model: average gradient over
/// free coordinates, midpoint of the active-bound bracket when none are free.
fn rho_from(alpha: &[f64], g: &[f64], cap: f64) -> f64 {
    let bound_tol = (cap * 1e-7).max(1e-12);
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut down = f64::NEG_INFINITY;
    let mut up = f64::INFINITY;
    for (&a, &gi) in alpha.iter().zip(g) {
        let at_lower = a <= bound_tol;
        let at_upper = a >= cap - bound_tol;
        if !at_lower && !at_upper {
            free_sum += gi;
            free_n += 1;
        }
        if !at_lower {
            down = down.max(gi);
        }
        if !at_upper {
            up = up.min(gi);
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else {
        0.5 * (down + up)
    }
}
