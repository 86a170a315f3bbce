//! Sparse `P A P^T = L D L^T` factorization of symmetric positive definite
//! matrices (up-looking, elimination-tree driven), with Takahashi selected
//! inversion on the factor pattern.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct LdlFactor {
    n: usize,
    // perm[k] = original index of pivot k
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factors the `n x n` matrix whose column `j` (original numbering) is
    /// produced by `column(j)` as `(row, value)` pairs; duplicates add up.
    /// `perm` lists original indices in pivot order.
    pub fn factor<F, I>(n: usize, perm: Vec<usize>, column: F) -> Result<Self>
    where
        F: Fn(usize) -> I,
        I: IntoIterator<Item = (usize, f64)>,
    {
        assert_eq!(perm.len(), n);
        let mut iperm = vec![NONE; n];
        for (k, &o) in perm.iter().enumerate() {
            iperm[o] = k;
        }
        // permuted upper triangle, column by column
        let mut ap = Vec::with_capacity(n + 1);
        let mut ai = Vec::new();
        let mut ax = Vec::new();
        ap.push(0);
        for &orig in &perm {
            let k = iperm[orig];
            for (row, val) in column(orig) {
                let i = iperm[row];
                if i <= k {
                    ai.push(i);
                    ax.push(val);
                }
            }
            ap.push(ai.len());
        }

        // symbolic
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &i0 in &ai[ap[k]..ap[k + 1]] {
                let mut i = i0;
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for k in 0..n {
            lp.push(lp[k] + lnz[k]);
        }
        let nnz = lp[n];

        // numeric
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = NONE);
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            for p in ap[k]..ap[k + 1] {
                let mut i = ai[p];
                y[i] += ax[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for t in top..n {
                let i = pattern[t];
                let yi = y[i];
                y[i] = 0.0;
                let end = lp[i] + lnz[i];
                for p in lp[i]..end {
                    y[li[p] as usize] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[end] = k as u32;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if d[k] <= 0.0 || !d[k].is_finite() {
                return Err(Error::Solver(format!(
                    "matrix is not positive definite (pivot {k}: {})",
                    d[k]
                )));
            }
        }
        Ok(LdlFactor {
            n,
            perm,
            lp,
            li,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    /// Overwrites `b` (original numbering) with `A^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        self.solve_permuted(&mut x);
        for (k, &o) in self.perm.iter().enumerate() {
            b[o] = x[k];
        }
    }

    fn solve_permuted(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p] as usize] -= self.lx[p] * xj;
                }
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        self.back_substitute(x);
    }

    fn back_substitute(&self, x: &mut [f64]) {
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * x[self.li[p] as usize];
            }
            x[j] = acc;
        }
    }

    /// `P^T L^{-T} D^{-1/2} z`, whose covariance is `A^{-1}` when `z` is
    /// standard normal. `z` is indexed by pivot position.
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = z.iter().zip(&self.d).map(|(a, d)| a / d.sqrt()).collect();
        self.back_substitute(&mut w);
        let mut out = vec![0.0; self.n];
        for (k, &o) in self.perm.iter().enumerate() {
            out[o] = w[k];
        }
        out
    }

    /// Entries of `A^{-1}` on the diagonal and on the pattern of `L`.
    pub fn selected_inverse(&self) -> SelectedInverse {
        let n = self.n;
        let mut zd = vec![0.0; n];
        let mut zx = vec![0.0; self.lx.len()];
        let mut scratch = Vec::new();
        for j in (0..n).rev() {
            let (start, end) = (self.lp[j], self.lp[j + 1]);
            let rows = &self.li[start..end];
            let ls = &self.lx[start..end];
            scratch.clear();
            for &i in rows.iter() {
                let i = i as usize;
                let mut acc = 0.0;
                for (b, &k) in rows.iter().enumerate() {
                    let k = k as usize;
                    let zik = if i == k {
                        zd[i]
                    } else {
                        let (c, r) = if i < k { (i, k) } else { (k, i) };
                        let col = &self.li[self.lp[c]..self.lp[c + 1]];
                        let pos = col
                            .binary_search(&(r as u32))
                            .expect("factor pattern is chordal");
                        zx[self.lp[c] + pos]
                    };
                    acc += ls[b] * zik;
                }
                scratch.push(-acc);
            }
            let mut diag = 1.0 / self.d[j];
            for (a, &z) in scratch.iter().enumerate() {
                zx[start + a] = z;
                diag -= ls[a] * z;
            }
            zd[j] = diag;
        }
        let mut iperm = vec![0; n];
        for (k, &o) in self.perm.iter().enumerate() {
            iperm[o] = k;
        }
        SelectedInverse {
            lp: self.lp.clone(),
            li: self.li.clone(),
            zx,
            zd,
            iperm,
        }
    }
}

/// Entries of `A^{-1}` restricted to the filled pattern.
#[derive(Clone, Debug)]
pub struct SelectedInverse {
    lp: Vec<usize>,
    li: Vec<u32>,
    zx: Vec<f64>,
    zd: Vec<f64>,
    iperm: Vec<usize>,
}

impl SelectedInverse {
    /// Diagonal in original numbering.
    pub fn diagonal(&self) -> Vec<f64> {
        self.iperm.iter().map(|&k| self.zd[k]).collect()
    }

    /// `(A^{-1})_{ij}` if it lies on the filled pattern.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (self.iperm[i], self.iperm[j]);
        if a == b {
            return Some(self.zd[a]);
        }
        let (c, r) = if a < b { (a, b) } else { (b, a) };
        let col = &self.li[self.lp[c]..self.lp[c + 1]];
        col.binary_search(&(r as u32))
            .ok()
            .map(|pos| self.zx[self.lp[c] + pos])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense;

    // tridiagonal-plus-corner SPD matrix
    fn matrix(n: usize) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 4.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        a[n - 1] = -1.0;
        a[(n - 1) * n] = -1.0;
        a
    }

    fn factor_dense(a: &[f64], n: usize, perm: Vec<usize>) -> LdlFactor {
        LdlFactor::factor(n, perm, |j| {
            (0..n)
                .filter(move |&i| a[i * n + j] != 0.0)
                .map(move |i| (i, a[i * n + j]))
                .collect::<Vec<_>>()
        })
        .unwrap()
    }

    #[test]
    fn solve_matches_dense() {
        let n = 9;
        let a = matrix(n);
        let f = factor_dense(&a, n, vec![4, 0, 8, 2, 6, 1, 3, 5, 7]);
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let mut ad = a.clone();
        let mut y = b.clone();
        assert!(dense::solve_in_place(&mut ad, &mut y, n));
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn selected_inverse_matches_columns() {
        let n = 9;
        let a = matrix(n);
        let f = factor_dense(&a, n, (0..n).rev().collect());
        let sel = f.selected_inverse();
        let diag = sel.diagonal();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            f.solve_in_place(&mut e);
            assert!((diag[j] - e[j]).abs() < 1e-12);
            for i in 0..n {
                if let Some(z) = sel.get(i, j) {
                    assert!((z - e[i]).abs() < 1e-12);
                }
            }
            // every nonzero of A is on the pattern
            for i in 0..n {
                if a[i * n + j] != 0.0 {
                    assert!(sel.get(i, j).is_some());
                }
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        let r = LdlFactor::factor(2, vec![0, 1], |j| vec![(0, a[j]), (1, a[2 + j])]);
        assert!(r.is_err());
    }
}
