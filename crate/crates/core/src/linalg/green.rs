//! Green function of a network with one grounded vertex.
//!
//! `G = (L restricted to V \ {pin})^{-1}`, extended by zero at the pin.
//! For unit conductances `R(x, y) = G_xx + G_yy - 2 G_xy`, and `G` is the
//! covariance of the free field pinned at `pin`.

use crate::error::{Error, Result};
use crate::linalg::ldl::{LdlFactor, SelectedInverse};
use crate::linalg::ordering;
use crate::network::Network;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct GreenFunction {
    pin: usize,
    n: usize,
    // reduced index of each vertex, NONE at the pin
    reduced: Vec<usize>,
    full: Vec<usize>,
    factor: LdlFactor,
}

impl GreenFunction {
    pub fn new(net: &Network, pin: usize) -> Result<Self> {
        let n = net.vertex_count();
        if pin >= n {
            return Err(Error::Domain(format!("pin {pin} outside network of {n} vertices")));
        }
        if !net.is_connected() {
            return Err(Error::Domain("network is not connected".into()));
        }
        let full: Vec<usize> = (0..n).filter(|&v| v != pin).collect();
        let mut reduced = vec![NONE; n];
        for (k, &v) in full.iter().enumerate() {
            reduced[v] = k;
        }
        let order: Vec<usize> = match net.coords() {
            Some(coords) => ordering::nested_dissection(coords, &full),
            None if n <= 5000 => {
                let adj: Vec<Vec<usize>> = full
                    .iter()
                    .map(|&v| {
                        net.neighbors(v)
                            .iter()
                            .filter(|&&(w, _)| w as usize != pin)
                            .map(|&(w, _)| reduced[w as usize])
                            .collect()
                    })
                    .collect();
                ordering::minimum_degree(&adj)
                    .into_iter()
                    .map(|k| full[k])
                    .collect()
            }
            None => full.clone(),
        };
        let perm: Vec<usize> = order.iter().map(|&v| reduced[v]).collect();
        let factor = LdlFactor::factor(n - 1, perm, |k| {
            let v = full[k];
            let mut col = Vec::with_capacity(net.degree(v) + 1);
            col.push((k, net.degree(v) as f64));
            for &(w, _) in net.neighbors(v) {
                let r = reduced[w as usize];
                if r != NONE {
                    col.push((r, -1.0));
                }
            }
            col
        })?;
        Ok(GreenFunction {
            pin,
            n,
            reduced,
            full,
            factor,
        })
    }

    pub fn pin(&self) -> usize {
        self.pin
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.factor.nnz()
    }

    /// Solves `L_r u = rhs` on `V \ {pin}`; `rhs[pin]` is ignored and
    /// `u[pin] = 0`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = self.full.iter().map(|&v| rhs[v]).collect();
        self.factor.solve_in_place(&mut b);
        let mut out = vec![0.0; self.n];
        for (k, &v) in self.full.iter().enumerate() {
            out[v] = b[k];
        }
        out
    }

    /// Column `G(., v)`.
    pub fn column(&self, v: usize) -> Vec<f64> {
        if v == self.pin {
            return vec![0.0; self.n];
        }
        let mut e = vec![0.0; self.n];
        e[v] = 1.0;
        self.solve(&e)
    }

    pub fn selected(&self) -> GreenSelected<'_> {
        GreenSelected {
            green: self,
            inner: self.factor.selected_inverse(),
        }
    }

    /// One exact sample with covariance `G`, from standard normals `z`
    /// (length `n - 1`).
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        let reduced = self.factor.correlate(z);
        let mut out = vec![0.0; self.n];
        for (k, &v) in self.full.iter().enumerate() {
            out[v] = reduced[k];
        }
        out
    }
}

/// Green function entries on the filled pattern (includes every edge).
pub struct GreenSelected<'a> {
    green: &'a GreenFunction,
    inner: SelectedInverse,
}

impl GreenSelected<'_> {
    /// `G_vv = R(v, pin)` for every vertex.
    pub fn diagonal(&self) -> Vec<f64> {
        let d = self.inner.diagonal();
        let mut out = vec![0.0; self.green.n];
        for (k, &v) in self.green.full.iter().enumerate() {
            out[v] = d[k];
        }
        out
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let (a, b) = (self.green.reduced[u], self.green.reduced[v]);
        if a == NONE || b == NONE {
            return Some(0.0);
        }
        self.inner.get(a, b)
    }

    /// Effective resistance across each edge of `net`.
    pub fn edge_resistances(&self, net: &Network) -> Vec<f64> {
        net.edges()
            .iter()
            .map(|&(u, v)| {
                let (u, v) = (u as usize, v as usize);
                let guu = self.get(u, u).unwrap();
                let gvv = self.get(v, v).unwrap();
                let guv = self.get(u, v).expect("edges lie on the factor pattern");
                guu + gvv - 2.0 * guv
            })
            .collect()
    }
}
