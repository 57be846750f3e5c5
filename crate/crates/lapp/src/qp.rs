//! Internal convex-subproblem solver: quadratic objective, two-sided linear
//! constraints.
//!
//! ```text
//!     minimize   1/2 x' P x + q' x
//!     subject to l <= A x <= u
//! ```
//!
//! Operator-splitting (ADMM) iterations with a fixed cap and residual-based
//! termination, followed by an active-set polish solve that refines the
//! iterate to tight KKT residuals. `P` must be symmetric positive
//! semidefinite; bounds may be infinite on either side.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpError {
    #[error("inconsistent problem dimensions")]
    BadShape,
    #[error("KKT factorization failed (P not PSD?)")]
    Factorization,
    #[error("solver did not reach the requested accuracy")]
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub n: usize,
    pub m: usize,
    /// `n x n` row-major, symmetric PSD.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `m x n` row-major.
    pub a: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

impl QpProblem {
    pub fn validate(&self) -> Result<(), QpError> {
        let ok = self.p.len() == self.n * self.n
            && self.q.len() == self.n
            && self.a.len() == self.m * self.n
            && self.l.len() == self.m
            && self.u.len() == self.m
            && self.l.iter().zip(&self.u).all(|(l, u)| l <= u);
        if ok {
            Ok(())
        } else {
            Err(QpError::BadShape)
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for i in 0..self.n {
            let mut px = 0.0;
            for j in 0..self.n {
                px += self.p[i * self.n + j] * x[j];
            }
            v += 0.5 * x[i] * px + self.q[i] * x[i];
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// Row duals; positive at an active upper bound, negative at a lower.
    pub y: Vec<f64>,
    pub iterations: usize,
    pub polished: bool,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
pub struct QpSettings {
    pub max_iter: usize,
    pub eps: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub rho0: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            max_iter: 8000,
            eps: 1e-9,
            sigma: 1e-6,
            alpha: 1.6,
            rho0: 0.1,
        }
    }
}

fn mat_vec(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let mut acc = 0.0;
        for c in 0..cols {
            acc += m[r * cols + c] * x[c];
        }
        out[r] = acc;
    }
}

fn mat_t_vec(m: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..rows {
        let xr = x[r];
        if xr != 0.0 {
            for c in 0..cols {
                out[c] += m[r * cols + c] * xr;
            }
        }
    }
}

/// Dense Cholesky factorization in place (lower triangle).
fn cholesky(mat: &mut [f64], n: usize) -> Result<(), QpError> {
    for i in 0..n {
        for j in 0..=i {
            let mut s = mat[i * n + j];
            for k in 0..j {
                s -= mat[i * n + k] * mat[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(QpError::Factorization);
                }
                mat[i * n + i] = s.sqrt();
            } else {
                mat[i * n + j] = s / mat[j * n + j];
            }
        }
    }
    Ok(())
}

fn cholesky_solve(chol: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= chol[i * n + k] * b[k];
        }
        b[i] = s / chol[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= chol[k * n + i] * b[k];
        }
        b[i] = s / chol[i * n + i];
    }
}

/// Dense LU with partial pivoting; solves in place.
fn lu_solve(mut a: Vec<f64>, n: usize, b: &mut [f64]) -> Result<(), QpError> {
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = a[piv[k] * n + k].abs();
        for r in (k + 1)..n {
            let v = a[piv[r] * n + k].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < 1e-14 {
            return Err(QpError::Factorization);
        }
        piv.swap(k, p);
        let pk = piv[k];
        for r in (k + 1)..n {
            let pr = piv[r];
            let f = a[pr * n + k] / a[pk * n + k];
            a[pr * n + k] = f;
            for c in (k + 1)..n {
                a[pr * n + c] -= f * a[pk * n + c];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[piv[i]];
        for k in 0..i {
            s -= a[piv[i] * n + k] * y[k];
        }
        y[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= a[piv[i] * n + k] * b[k];
        }
        b[i] = s / a[piv[i] * n + i];
    }
    Ok(())
}

/// Max KKT residual of `(x, y)`: stationarity, primal feasibility, and
/// complementary slackness.
pub fn kkt_residual(prob: &QpProblem, x: &[f64], y: &[f64]) -> f64 {
    let (n, m) = (prob.n, prob.m);
    let mut res: f64 = 0.0;
    // stationarity: P x + q + A' y = 0
    let mut px = vec![0.0; n];
    mat_vec(&prob.p, n, n, x, &mut px);
    let mut aty = vec![0.0; n];
    mat_t_vec(&prob.a, m, n, y, &mut aty);
    for i in 0..n {
        res = res.max((px[i] + prob.q[i] + aty[i]).abs());
    }
    let mut ax = vec![0.0; m];
    mat_vec(&prob.a, m, n, x, &mut ax);
    for i in 0..m {
        res = res.max(prob.l[i] - ax[i]).max(ax[i] - prob.u[i]);
        if prob.l[i] < prob.u[i] {
            if y[i] > 0.0 {
                let gap = if prob.u[i].is_finite() { prob.u[i] - ax[i] } else { 1.0 };
                res = res.max(y[i] * gap.abs().min(1.0));
            } else if y[i] < 0.0 {
                let gap = if prob.l[i].is_finite() { ax[i] - prob.l[i] } else { 1.0 };
                res = res.max((-y[i]) * gap.abs().min(1.0));
            }
        }
    }
    res
}

/// Solve the QP. The returned solution carries its own measured KKT
/// residual; `polished` reports whether the active-set refinement succeeded.
pub fn solve(prob: &QpProblem, settings: &QpSettings) -> Result<QpSolution, QpError> {
    prob.validate()?;
    let (n, m) = (prob.n, prob.m);

    // Per-row penalty: stiffer on equality rows.
    let mut rho = vec![settings.rho0; m];
    for i in 0..m {
        if prob.u[i] - prob.l[i] < 1e-12 {
            rho[i] = settings.rho0 * 1e3;
        }
    }

    let factor = |rho: &[f64]| -> Result<Vec<f64>, QpError> {
        let mut mtx = prob.p.clone();
        for i in 0..n {
            mtx[i * n + i] += settings.sigma;
        }
        for r in 0..m {
            for i in 0..n {
                let ari = prob.a[r * n + i];
                if ari == 0.0 {
                    continue;
                }
                for j in 0..n {
                    mtx[i * n + j] += rho[r] * ari * prob.a[r * n + j];
                }
            }
        }
        cholesky(&mut mtx, n)?;
        Ok(mtx)
    };

    let mut chol = factor(&rho)?;
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut ax = vec![0.0; m];
    let mut iterations = 0;

    for it in 0..settings.max_iter {
        iterations = it + 1;
        // x-update
        let mut rhs = vec![0.0; n];
        let mut w = vec![0.0; m];
        for i in 0..m {
            w[i] = rho[i] * z[i] - y[i];
        }
        mat_t_vec(&prob.a, m, n, &w, &mut rhs);
        for i in 0..n {
            rhs[i] += settings.sigma * x[i] - prob.q[i];
        }
        cholesky_solve(&chol, n, &mut rhs);
        let x_tilde = rhs;
        let mut z_tilde = vec![0.0; m];
        mat_vec(&prob.a, m, n, &x_tilde, &mut z_tilde);

        // relaxed updates
        for i in 0..n {
            x[i] = settings.alpha * x_tilde[i] + (1.0 - settings.alpha) * x[i];
        }
        for i in 0..m {
            let zr = settings.alpha * z_tilde[i] + (1.0 - settings.alpha) * z[i];
            let znew = (zr + y[i] / rho[i]).clamp(prob.l[i], prob.u[i]);
            y[i] += rho[i] * (zr - znew);
            z[i] = znew;
        }

        if it % 10 == 9 || it + 1 == settings.max_iter {
            mat_vec(&prob.a, m, n, &x, &mut ax);
            let mut r_pri: f64 = 0.0;
            for i in 0..m {
                r_pri = r_pri.max((ax[i] - z[i]).abs());
            }
            let mut px = vec![0.0; n];
            mat_vec(&prob.p, n, n, &x, &mut px);
            let mut aty = vec![0.0; n];
            mat_t_vec(&prob.a, m, n, &y, &mut aty);
            let mut r_dua: f64 = 0.0;
            for i in 0..n {
                r_dua = r_dua.max((px[i] + prob.q[i] + aty[i]).abs());
            }
            if r_pri < settings.eps * 10.0 && r_dua < settings.eps * 10.0 {
                break;
            }
            // occasional penalty rebalancing
            if it % 100 == 99 && r_pri > 0.0 && r_dua > 0.0 {
                let scale = (r_pri / r_dua).sqrt().clamp(1e-3, 1e3);
                if !(0.5..=2.0).contains(&scale) {
                    for r in &mut rho {
                        *r = (*r * scale).clamp(1e-6, 1e6);
                    }
                    chol = factor(&rho)?;
                }
            }
        }
    }

    // Post-hoc projection of z cleans tiny bound violations before polish.
    let mut sol = QpSolution {
        x,
        y,
        iterations,
        polished: false,
        kkt_residual: 0.0,
    };
    if let Some((px, py)) = polish(prob, &sol) {
        let polished_res = kkt_residual(prob, &px, &py);
        let raw_res = kkt_residual(prob, &sol.x, &sol.y);
        if polished_res < raw_res {
            sol.x = px;
            sol.y = py;
            sol.polished = true;
        }
    }
    sol.kkt_residual = kkt_residual(prob, &sol.x, &sol.y);
    Ok(sol)
}

/// Re-solve the equality-constrained KKT system on the active set guessed
/// from the ADMM iterate. Returns `None` when the guess is rank-deficient or
/// fails feasibility/dual-sign validation.
fn polish(prob: &QpProblem, sol: &QpSolution) -> Option<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (prob.n, prob.m);
    let mut ax = vec![0.0; m];
    mat_vec(&prob.a, m, n, &sol.x, &mut ax);

    #[derive(Clone, Copy, PartialEq)]
    enum Side {
        Lower,
        Upper,
    }
    let mut active: Vec<(usize, Side)> = Vec::new();
    let slack_tol = 1e-6;
    for i in 0..m {
        if prob.u[i] - prob.l[i] < 1e-12 {
            active.push((i, Side::Upper));
        } else if sol.y[i] < -1e-9 || (prob.l[i].is_finite() && ax[i] - prob.l[i] < slack_tol) {
            active.push((i, Side::Lower));
        } else if sol.y[i] > 1e-9 || (prob.u[i].is_finite() && prob.u[i] - ax[i] < slack_tol) {
            active.push((i, Side::Upper));
        }
    }
    let k = active.len();
    if k > n {
        // keep the strongest duals to stay full-rank
        active.sort_by(|a, b| sol.y[b.0].abs().partial_cmp(&sol.y[a.0].abs()).unwrap());
        active.truncate(n);
    }
    let k = active.len();
    let dim = n + k;
    let delta = 1e-9;
    let mut kkt = vec![0.0; dim * dim];
    for i in 0..n {
        for j in 0..n {
            kkt[i * dim + j] = prob.p[i * n + j];
        }
        kkt[i * dim + i] += delta;
    }
    for (r, &(row, _)) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r) * dim + j] = prob.a[row * n + j];
            kkt[j * dim + (n + r)] = prob.a[row * n + j];
        }
        kkt[(n + r) * dim + (n + r)] = -delta;
    }
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        rhs[i] = -prob.q[i];
    }
    for (r, &(row, side)) in active.iter().enumerate() {
        rhs[n + r] = match side {
            Side::Lower => prob.l[row],
            Side::Upper => prob.u[row],
        };
    }
    lu_solve(kkt, dim, &mut rhs).ok()?;

    let x: Vec<f64> = rhs[..n].to_vec();
    let mut y = vec![0.0; m];
    for (r, &(row, _)) in active.iter().enumerate() {
        y[row] = rhs[n + r];
    }
    // validate: primal feasibility and dual signs
    let mut ax = vec![0.0; m];
    mat_vec(&prob.a, m, n, &x, &mut ax);
    let tol = 1e-7;
    for i in 0..m {
        if ax[i] < prob.l[i] - tol || ax[i] > prob.u[i] + tol {
            return None;
        }
    }
    for &(row, side) in &active {
        if prob.u[row] - prob.l[row] < 1e-12 {
            continue;
        }
        match side {
            Side::Lower if y[row] > tol => return None,
            Side::Upper if y[row] < -tol => return None,
            _ => {}
        }
    }
    Some((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_minimum() {
        // min 1/2 (x0^2 + x1^2) - x0  -> x = (1, 0)
        let prob = QpProblem {
            n: 2,
            m: 1,
            p: vec![1.0, 0.0, 0.0, 1.0],
            q: vec![-1.0, 0.0],
            a: vec![1.0, 0.0],
            l: vec![-10.0],
            u: vec![10.0],
        };
        let sol = solve(&prob, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        assert!(sol.x[1].abs() < 1e-7);
        assert!(sol.kkt_residual < 1e-6, "res {}", sol.kkt_residual);
    }

    #[test]
    fn active_box_bound() {
        // min 1/2 x^2 - 3x s.t. x <= 1  -> x = 1, y = 2 at upper bound
        let prob = QpProblem {
            n: 1,
            m: 1,
            p: vec![1.0],
            q: vec![-3.0],
            a: vec![1.0],
            l: vec![f64::NEG_INFINITY],
            u: vec![1.0],
        };
        let sol = solve(&prob, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        assert!((sol.y[0] - 2.0).abs() < 1e-5);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn equality_row() {
        // min 1/2 ||x||^2 s.t. x0 + x1 = 1 -> x = (0.5, 0.5)
        let prob = QpProblem {
            n: 2,
            m: 1,
            p: vec![1.0, 0.0, 0.0, 1.0],
            q: vec![0.0, 0.0],
            a: vec![1.0, 1.0],
            l: vec![1.0],
            u: vec![1.0],
        };
        let sol = solve(&prob, &QpSettings::default()).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-7);
        assert!((sol.x[1] - 0.5).abs() < 1e-7);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn psd_objective_with_slack_variable() {
        // variables (x, s): min 1/2 x^2 + 10 s, s.t. x + s >= 2, s >= 0
        let prob = QpProblem {
            n: 2,
            m: 2,
            p: vec![1.0, 0.0, 0.0, 0.0],
            q: vec![0.0, 10.0],
            a: vec![1.0, 1.0, 0.0, 1.0],
            l: vec![2.0, 0.0],
            u: vec![f64::INFINITY, f64::INFINITY],
        };
        let sol = solve(&prob, &QpSettings::default()).unwrap();
        // x = 2 costs 2; pushing slack costs 10/unit, so x -> 2, s -> 0
        assert!((sol.x[0] - 2.0).abs() < 1e-6, "x = {:?}", sol.x);
        assert!(sol.x[1].abs() < 1e-6);
        assert!(sol.kkt_residual < 1e-6);
    }
}
