//! Finite connected graphs with unit conductances.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::Point;

/// Undirected multigraph with unit conductance on every edge.
///
/// Edges are stored once, oriented `(lo, hi)` with `lo < hi`; that
/// orientation is the sign convention for [`crate::electrical::Flow`].
#[derive(Clone, Debug)]
pub struct Network {
    vertex_count: usize,
    edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    // (neighbour, edge index)
    adjacency: Vec<(u32, u32)>,
    coords: Option<Vec<Point>>,
}

impl Network {
    /// Builds a connected network. Parallel edges are allowed, loops are not.
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let net = Self::build(vertex_count, edges, None)?;
        if !net.is_connected() {
            return Err(Error::Domain("network is not connected".into()));
        }
        Ok(net)
    }

    /// Like [`Network::new`] but attaches lattice coordinates to vertices,
    /// which enables geometric fill-reducing orderings.
    pub fn with_coords(edges: &[(usize, usize)], coords: Vec<Point>) -> Result<Self> {
        let net = Self::build(coords.len(), edges, Some(coords))?;
        if !net.is_connected() {
            return Err(Error::Domain("network is not connected".into()));
        }
        Ok(net)
    }

    fn build(
        vertex_count: usize,
        edges: &[(usize, usize)],
        coords: Option<Vec<Point>>,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::Domain("network needs at least one vertex".into()));
        }
        let mut stored = Vec::with_capacity(edges.len());
        let mut degree = vec![0usize; vertex_count];
        for &(u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::Domain(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at {u}")));
            }
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            stored.push((lo as u32, hi as u32));
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut fill = offsets[..vertex_count].to_vec();
        let mut adjacency = vec![(0u32, 0u32); acc];
        for (e, &(u, v)) in stored.iter().enumerate() {
            adjacency[fill[u as usize]] = (v, e as u32);
            fill[u as usize] += 1;
            adjacency[fill[v as usize]] = (u, e as u32);
            fill[v as usize] += 1;
        }
        Ok(Network {
            vertex_count,
            edges: stored,
            offsets,
            adjacency,
            coords,
        })
    }

    /// Path `0 - 1 - ... - len`.
    pub fn path(len: usize) -> Self {
        let edges: Vec<_> = (0..len).map(|i| (i, i + 1)).collect();
        Self::new(len + 1, &edges).expect("paths are connected")
    }

    /// Full grid `[0, w) x [0, h)` with coordinates.
    pub fn grid(w: usize, h: usize) -> Self {
        let id = |x: usize, y: usize| x * h + y;
        let mut edges = Vec::new();
        let mut coords = Vec::new();
        for x in 0..w {
            for y in 0..h {
                coords.push(vec![x as i64, y as i64]);
                if x + 1 < w {
                    edges.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < h {
                    edges.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        Self::with_coords(&edges, coords).expect("grids are connected")
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        let (u, v) = self.edges[e];
        (u as usize, v as usize)
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(u32, u32)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn coords(&self) -> Option<&[Point]> {
        self.coords.as_deref()
    }

    /// Index of some edge joining `u` and `v`.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.neighbors(u)
            .iter()
            .find(|&&(w, _)| w as usize == v)
            .map(|&(_, e)| e as usize)
    }

    /// `y = L x` with `L = D - A`.
    pub fn apply_laplacian(&self, x: &[f64], y: &mut [f64]) {
        for v in 0..self.vertex_count {
            let mut acc = self.degree(v) as f64 * x[v];
            for &(w, _) in self.neighbors(v) {
                acc -= x[w as usize];
            }
            y[v] = acc;
        }
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(|&d| d != u32::MAX)
    }

    /// Hop distances from `source`; `u32::MAX` marks unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in self.neighbors(v) {
                let w = w as usize;
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// A shortest path from `source` to `target` (inclusive).
    pub fn shortest_path(&self, source: usize, target: usize) -> Option<Vec<usize>> {
        let mut parent = vec![usize::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        parent[source] = source;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            if v == target {
                break;
            }
            for &(w, _) in self.neighbors(v) {
                let w = w as usize;
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if parent[target] == usize::MAX {
            return None;
        }
        let mut path = vec![target];
        let mut v = target;
        while v != source {
            v = parent[v];
            path.push(v);
        }
        path.reverse();
        Some(path)
    }

    /// Subnetwork without the listed edges; `None` if it disconnects.
    pub fn without_edges(&self, removed: &[usize]) -> Option<Network> {
        let mut skip = vec![false; self.edges.len()];
        for &e in removed {
            skip[e] = true;
        }
        let kept: Vec<(usize, usize)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(e, _)| !skip[*e])
            .map(|(_, &(u, v))| (u as usize, v as usize))
            .collect();
        let net = Self::build(self.vertex_count, &kept, self.coords.clone()).ok()?;
        net.is_connected().then_some(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let net = Network::grid(3, 4);
        let ones = vec![1.0; net.vertex_count()];
        let mut y = vec![0.0; net.vertex_count()];
        net.apply_laplacian(&ones, &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-15));
        for v in 0..net.vertex_count() {
            assert_eq!(net.degree(v), net.neighbors(v).len());
        }
        assert_eq!(net.edge_count(), 2 * 3 * 4 - 3 - 4);
    }

    #[test]
    fn rejects_disconnected_and_loops() {
        assert!(Network::new(3, &[(0, 1)]).is_err());
        assert!(Network::new(2, &[(0, 0), (0, 1)]).is_err());
        assert!(Network::new(2, &[(0, 2)]).is_err());
        assert!(Network::new(2, &[(0, 1), (1, 0)]).is_ok());
    }

    #[test]
    fn shortest_path_on_grid() {
        let net = Network::grid(4, 4);
        let p = net.shortest_path(0, 15).unwrap();
        assert_eq!(p.len(), 7);
        assert_eq!(net.bfs_distances(0)[15], 6);
    }
}
