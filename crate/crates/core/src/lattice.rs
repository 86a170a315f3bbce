//! Geometry of the box `B(n) = [-n, n]^d` and its canonical edge order.
//!
//! Vertices are ranked row-major with the first coordinate most significant,
//! so rank order is lexicographic order of points. Edges are enumerated by
//! their lexicographically smaller endpoint, then by axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice point; `point[0]` is the `e_1` coordinate.
pub type Point = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
}

impl LatticeSpec {
    pub fn new(d: usize, n: usize, p: f64, seed: u64) -> Result<Self> {
        let spec = LatticeSpec { d, n, p, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidSpec(format!("dimension {} < 2", self.d)));
        }
        if self.n < 1 {
            return Err(Error::InvalidSpec("box radius must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidSpec(format!("p = {} outside [0, 1]", self.p)));
        }
        let side = (2 * self.n + 1) as u128;
        let vertices = side.checked_pow(self.d as u32).unwrap_or(u128::MAX);
        if vertices > u32::MAX as u128 {
            return Err(Error::InvalidSpec(format!(
                "box with d = {}, n = {} is too large",
                self.d, self.n
            )));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub fn vertex_count(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    /// `d * (2n+1)^(d-1) * 2n`.
    pub fn edge_count(&self) -> usize {
        self.d * self.side().pow(self.d as u32 - 1) * 2 * self.n
    }

    pub fn with_p(&self, p: f64) -> Self {
        LatticeSpec { p, ..*self }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        LatticeSpec { seed, ..*self }
    }
}

/// Index arithmetic for `B(n)`.
#[derive(Clone, Debug)]
pub struct Lattice {
    d: usize,
    n: i64,
    side: usize,
    strides: Vec<usize>,
    // edge_offsets[v] = index of the first edge stored at v
    edge_offsets: Vec<u32>,
}

impl Lattice {
    pub fn new(d: usize, n: usize) -> Self {
        let side = 2 * n + 1;
        let strides: Vec<usize> = (0..d).map(|a| side.pow((d - 1 - a) as u32)).collect();
        let vcount = side.pow(d as u32);
        let mut edge_offsets = Vec::with_capacity(vcount + 1);
        let mut acc = 0u32;
        for v in 0..vcount {
            edge_offsets.push(acc);
            for &stride in &strides {
                if (v / stride) % side < side - 1 {
                    acc += 1;
                }
            }
        }
        edge_offsets.push(acc);
        Lattice {
            d,
            n: n as i64,
            side,
            strides,
            edge_offsets,
        }
    }

    pub fn from_spec(spec: &LatticeSpec) -> Self {
        Self::new(spec.d, spec.n)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i64 {
        self.n
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn vertex_count(&self) -> usize {
        self.edge_offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        *self.edge_offsets.last().unwrap() as usize
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        point.len() == self.d && point.iter().all(|&c| c.abs() <= self.n)
    }

    pub fn rank(&self, point: &[i64]) -> Option<usize> {
        if !self.contains(point) {
            return None;
        }
        Some(
            point
                .iter()
                .zip(&self.strides)
                .map(|(&c, &s)| (c + self.n) as usize * s)
                .sum(),
        )
    }

    #[inline]
    pub fn coord(&self, rank: usize, axis: usize) -> i64 {
        ((rank / self.strides[axis]) % self.side) as i64 - self.n
    }

    pub fn point(&self, rank: usize) -> Point {
        (0..self.d).map(|a| self.coord(rank, a)).collect()
    }

    /// Neighbor `rank + sign * e_axis`, if inside the box.
    #[inline]
    pub fn step(&self, rank: usize, axis: usize, forward: bool) -> Option<usize> {
        let c = self.coord(rank, axis);
        if forward {
            (c < self.n).then(|| rank + self.strides[axis])
        } else {
            (c > -self.n).then(|| rank - self.strides[axis])
        }
    }

    /// Index of the edge `{v, v + e_axis}`.
    #[inline]
    pub fn forward_edge(&self, v: usize, axis: usize) -> Option<usize> {
        if self.coord(v, axis) >= self.n {
            return None;
        }
        let skipped = (0..axis)
            .filter(|&a| self.coord(v, a) < self.n)
            .count();
        Some(self.edge_offsets[v] as usize + skipped)
    }

    /// Edge between two lattice neighbors.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        let diff = hi - lo;
        let axis = self.strides.iter().position(|&s| s == diff)?;
        if self.step(lo, axis, true) != Some(hi) {
            return None;
        }
        self.forward_edge(lo, axis)
    }

    /// `(lower endpoint, upper endpoint, axis)` of an edge index.
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize, usize) {
        let e32 = e as u32;
        let v = self.edge_offsets.partition_point(|&o| o <= e32) - 1;
        let mut k = e - self.edge_offsets[v] as usize;
        for axis in 0..self.d {
            if self.coord(v, axis) < self.n {
                if k == 0 {
                    return (v, v + self.strides[axis], axis);
                }
                k -= 1;
            }
        }
        unreachable!("edge index {e} out of range")
    }

    /// All lattice neighbors `(w, edge)` of `v`.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.d).flat_map(move |axis| {
            let fwd = self
                .step(v, axis, true)
                .map(|w| (w, self.forward_edge(v, axis).unwrap()));
            let bwd = self
                .step(v, axis, false)
                .map(|w| (w, self.forward_edge(w, axis).unwrap()));
            fwd.into_iter().chain(bwd)
        })
    }

    /// l-infinity distance between two ranks.
    pub fn linf(&self, u: usize, v: usize) -> i64 {
        (0..self.d)
            .map(|a| (self.coord(u, a) - self.coord(v, a)).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn l1(&self, u: usize, v: usize) -> i64 {
        (0..self.d)
            .map(|a| (self.coord(u, a) - self.coord(v, a)).abs())
            .sum()
    }
}

/// Formats a point as `x1:x2:...`.
pub fn format_point(p: &[i64]) -> String {
    p.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(":")
}

/// Parses `x1:x2:...`.
pub fn parse_point(s: &str) -> Result<Point> {
    s.trim()
        .split(':')
        .map(|c| {
            c.trim()
                .parse::<i64>()
                .map_err(|_| Error::Format(format!("bad coordinate '{c}' in point '{s}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_edges(d: usize, n: usize) -> Vec<(Point, Point)> {
        let lat = Lattice::new(d, n);
        let mut out = Vec::new();
        for v in 0..lat.vertex_count() {
            let p = lat.point(v);
            for axis in 0..d {
                let mut q = p.clone();
                q[axis] += 1;
                if lat.contains(&q) {
                    out.push((p.clone(), q));
                }
            }
        }
        out
    }

    #[test]
    fn edge_count_matches_enumeration() {
        for (d, n) in [(2, 1), (2, 3), (3, 1), (3, 2), (4, 1)] {
            let spec = LatticeSpec::new(d, n, 0.5, 0).unwrap();
            let lat = Lattice::from_spec(&spec);
            let brute = brute_edges(d, n);
            assert_eq!(brute.len(), spec.edge_count());
            assert_eq!(lat.edge_count(), spec.edge_count());
            for (e, (a, b)) in brute.iter().enumerate() {
                let (u, v, _) = lat.edge_endpoints(e);
                assert_eq!(&lat.point(u), a);
                assert_eq!(&lat.point(v), b);
                assert_eq!(lat.edge_between(u, v), Some(e));
                assert_eq!(lat.edge_between(v, u), Some(e));
            }
        }
    }

    #[test]
    fn rank_is_lexicographic() {
        let lat = Lattice::new(2, 1);
        let pts: Vec<Point> = (0..9).map(|r| lat.point(r)).collect();
        let mut sorted = pts.clone();
        sorted.sort();
        assert_eq!(pts, sorted);
        assert_eq!(pts[0], vec![-1, -1]);
        for (r, p) in pts.iter().enumerate() {
            assert_eq!(lat.rank(p), Some(r));
        }
        assert_eq!(lat.rank(&[2, 0]), None);
    }

    #[test]
    fn neighbors_have_unit_l1() {
        let lat = Lattice::new(3, 2);
        for v in 0..lat.vertex_count() {
            let nb: Vec<_> = lat.neighbors(v).collect();
            let interior = (0..3).filter(|&a| lat.coord(v, a).abs() < 2).count();
            let boundary = 3 - interior;
            assert_eq!(nb.len(), 2 * interior + boundary);
            for (w, e) in nb {
                assert_eq!(lat.l1(v, w), 1);
                assert_eq!(lat.edge_between(v, w), Some(e));
            }
        }
    }

    #[test]
    fn bad_specs() {
        assert!(LatticeSpec::new(1, 3, 0.5, 0).is_err());
        assert!(LatticeSpec::new(2, 0, 0.5, 0).is_err());
        assert!(LatticeSpec::new(2, 3, 1.5, 0).is_err());
    }

    #[test]
    fn point_format_roundtrip() {
        assert_eq!(parse_point("3:-4").unwrap(), vec![3, -4]);
        assert_eq!(format_point(&[3, -4]), "3:-4");
        assert!(parse_point("a:1").is_err());
    }
}
