//! Special open paths ("beards") hanging off a face of the box.
//!
//! A face vertex `x` with `x_1 = r` is m-special when the edges
//! `{x + i e_1, x + (i+1) e_1}` are open for `0 <= i < m` and each
//! `x + i e_1` with `1 <= i <= m` has no other open edge.

use serde::Serialize;

use crate::cluster::{largest_cluster, Cluster};
use crate::config::BondConfiguration;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Point};

#[derive(Clone, Debug, Serialize)]
pub struct SpecialVertexReport {
    pub m: usize,
    pub inner_radius: usize,
    pub base_points: Vec<Point>,
    pub tips: Vec<Point>,
}

impl SpecialVertexReport {
    pub fn count(&self) -> usize {
        self.base_points.len()
    }
}

/// Literal m-special test for the vertex of rank `base`.
pub fn is_m_special(config: &BondConfiguration, base: usize, m: usize) -> bool {
    let lat = config.lattice();
    let mut v = base;
    for i in 0..m {
        let Some(e) = lat.forward_edge(v, 0) else {
            return false;
        };
        if !config.is_open(e) {
            return false;
        }
        let w = v + lat.stride(0);
        // w = base + (i+1) e_1 may only use its beard edges
        let allowed_next = if i + 1 < m { lat.forward_edge(w, 0) } else { None };
        for (_, f) in lat.neighbors(w) {
            if f != e && Some(f) != allowed_next && config.is_open(f) {
                return false;
            }
        }
        v = w;
    }
    true
}

/// Edge sets forced open and forced closed by the m-special event at `base`.
pub fn beard_edge_requirements(lat: &Lattice, base: usize, m: usize) -> (Vec<usize>, Vec<usize>) {
    let mut open = Vec::new();
    let mut closed = Vec::new();
    let mut v = base;
    for _ in 0..m {
        open.push(lat.forward_edge(v, 0).expect("beard fits in the box"));
        v += lat.stride(0);
    }
    let mut v = base;
    for _ in 0..m {
        v += lat.stride(0);
        for (_, f) in lat.neighbors(v) {
            if !open.contains(&f) && !closed.contains(&f) {
                closed.push(f);
            }
        }
    }
    (open, closed)
}

/// Exact probability of the m-special event at `base`.
pub fn special_probability(lat: &Lattice, base: usize, m: usize, p: f64) -> f64 {
    let (open, closed) = beard_edge_requirements(lat, base, m);
    p.powi(open.len() as i32) * (1.0 - p).powi(closed.len() as i32)
}

/// Scans the face `{x_1 = inner_radius}` of `B(inner_radius)` for m-special
/// bases that belong to the giant cluster.
pub fn special_vertex_census(
    config: &BondConfiguration,
    m: usize,
    inner_radius: usize,
) -> Result<SpecialVertexReport> {
    let giant = largest_cluster(config);
    special_vertex_census_in(config, &giant, m, inner_radius)
}

/// Census against an already extracted giant cluster.
pub fn special_vertex_census_in(
    config: &BondConfiguration,
    giant: &Cluster,
    m: usize,
    inner_radius: usize,
) -> Result<SpecialVertexReport> {
    let n = config.spec().n;
    if m == 0 {
        return Err(Error::Precondition("beard length must be at least 1".into()));
    }
    if inner_radius + m > n {
        return Err(Error::Precondition(format!(
            "beard of length {m} from radius {inner_radius} leaves B({n})"
        )));
    }
    let lat = config.lattice();
    let d = lat.dim();
    let r = inner_radius as i64;
    let side = 2 * inner_radius + 1;
    let mut base_points = Vec::new();
    let mut tips = Vec::new();
    for k in 0..side.pow(d as u32 - 1) {
        let mut point = vec![r; d];
        let mut rest = k;
        for a in (1..d).rev() {
            point[a] = (rest % side) as i64 - r;
            rest /= side;
        }
        let base = lat.rank(&point).unwrap();
        if giant.local(base).is_some() && is_m_special(config, base, m) {
            let mut tip = point.clone();
            tip[0] += m as i64;
            base_points.push(point);
            tips.push(tip);
        }
    }
    Ok(SpecialVertexReport {
        m,
        inner_radius,
        base_points,
        tips,
    })
}

/// Beard length `max(1, floor(c1 ln n))` used by the experiments.
pub fn beard_length(c1: f64, n: usize) -> usize {
    ((c1 * (n as f64).ln()).floor() as usize).max(1)
}
