//! Jacobi-preconditioned conjugate gradients on a Laplacian with
//! Dirichlet (pinned) vertices.

use crate::error::{Error, Result};
use crate::network::Network;

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    /// Stop once `||r|| <= rel_tol * ||b||`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-10,
            max_iter: 200_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CgOutcome {
    pub iterations: usize,
    /// True residual of the returned solution, relative to the right-hand side.
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y = L_II p` where `p` vanishes on pinned vertices.
fn apply_restricted(net: &Network, pinned: &[bool], p: &[f64], y: &mut [f64]) {
    for v in 0..net.vertex_count() {
        if pinned[v] {
            y[v] = 0.0;
            continue;
        }
        let mut acc = net.degree(v) as f64 * p[v];
        for &(w, _) in net.neighbors(v) {
            acc -= p[w as usize];
        }
        y[v] = acc;
    }
}

/// Solves `(L f)(v) = source(v)` for every free vertex `v`, with `f` held at
/// its given values on pinned vertices. `values` carries the boundary data on
/// entry and the solution on exit; `source` may be empty for zero.
pub fn solve_dirichlet(
    net: &Network,
    pinned: &[bool],
    values: &mut [f64],
    source: &[f64],
    opts: CgOptions,
) -> Result<CgOutcome> {
    let n = net.vertex_count();
    if !pinned.iter().any(|&b| b) {
        return Err(Error::Domain("at least one vertex must be pinned".into()));
    }
    // b = s_I + sum of pinned neighbour values
    let mut b = vec![0.0; n];
    for v in 0..n {
        if pinned[v] {
            continue;
        }
        let mut acc = source.get(v).copied().unwrap_or(0.0);
        for &(w, _) in net.neighbors(v) {
            if pinned[w as usize] {
                acc += values[w as usize];
            }
        }
        b[v] = acc;
    }
    let b_norm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        for v in (0..n).filter(|&v| !pinned[v]) {
            values[v] = 0.0;
        }
        return Ok(CgOutcome {
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = (0..n)
        .map(|v| if pinned[v] { 0.0 } else { 1.0 / net.degree(v) as f64 })
        .collect();
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        apply_restricted(net, pinned, &p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver("restricted Laplacian is not positive definite".into()));
        }
        let alpha = rz / pap;
        for v in 0..n {
            x[v] += alpha * p[v];
            r[v] -= alpha * ap[v];
        }
        iterations += 1;
        if dot(&r, &r).sqrt() <= opts.rel_tol * b_norm {
            break;
        }
        for v in 0..n {
            z[v] = r[v] * inv_diag[v];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for v in 0..n {
            p[v] = z[v] + beta * p[v];
        }
    }
    apply_restricted(net, pinned, &x, &mut ap);
    let true_res = (0..n)
        .filter(|&v| !pinned[v])
        .map(|v| (b[v] - ap[v]).powi(2))
        .sum::<f64>()
        .sqrt()
        / b_norm;
    if true_res > opts.rel_tol * 10.0 {
        return Err(Error::Solver(format!(
            "CG stalled at relative residual {true_res:.3e} after {iterations} iterations"
        )));
    }
    for v in (0..n).filter(|&v| !pinned[v]) {
        values[v] = x[v];
    }
    Ok(CgOutcome {
        iterations,
        rel_residual: true_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_potential_on_path() {
        let net = Network::path(4);
        let mut pinned = vec![false; 5];
        pinned[0] = true;
        pinned[4] = true;
        let mut f = vec![1.0, 0.0, 0.0, 0.0, 0.0];
        let out = solve_dirichlet(&net, &pinned, &mut f, &[], CgOptions::default()).unwrap();
        for (i, v) in f.iter().enumerate() {
            assert!((v - (1.0 - i as f64 / 4.0)).abs() < 1e-12);
        }
        assert!(out.rel_residual <= 1e-10);
    }

    #[test]
    fn needs_a_pin() {
        let net = Network::path(2);
        let mut f = vec![0.0; 3];
        assert!(solve_dirichlet(&net, &[false; 3], &mut f, &[], CgOptions::default()).is_err());
    }
}
