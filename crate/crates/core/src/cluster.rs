//! Open clusters of a bond configuration.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::config::BondConfiguration;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeSpec, Point};
use crate::network::Network;

/// Union-find with union by size and path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let grand = self.parent[self.parent[x] as usize];
            self.parent[x] = grand;
            x = grand as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r] as usize
    }
}

/// Labelling of all open clusters. Labels are assigned in order of each
/// cluster's smallest vertex rank.
#[derive(Clone, Debug)]
pub struct ClusterLabels {
    pub label: Vec<u32>,
    pub sizes: Vec<usize>,
    pub min_rank: Vec<usize>,
}

impl ClusterLabels {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Largest cluster; ties go to the smallest minimal vertex.
    pub fn largest(&self) -> usize {
        let mut best = 0;
        for (l, &s) in self.sizes.iter().enumerate() {
            if s > self.sizes[best] {
                best = l;
            }
        }
        best
    }
}

pub fn open_clusters(config: &BondConfiguration) -> ClusterLabels {
    let lat = config.lattice();
    let mut uf = UnionFind::new(lat.vertex_count());
    for e in 0..lat.edge_count() {
        if config.is_open(e) {
            let (u, v, _) = lat.edge_endpoints(e);
            uf.union(u, v);
        }
    }
    let mut root_label = vec![u32::MAX; lat.vertex_count()];
    let mut label = vec![0u32; lat.vertex_count()];
    let mut sizes = Vec::new();
    let mut min_rank = Vec::new();
    for v in 0..lat.vertex_count() {
        let r = uf.find(v);
        if root_label[r] == u32::MAX {
            root_label[r] = sizes.len() as u32;
            sizes.push(0);
            min_rank.push(v);
        }
        let l = root_label[r];
        label[v] = l;
        sizes[l as usize] += 1;
    }
    ClusterLabels {
        label,
        sizes,
        min_rank,
    }
}

/// A connected open subgraph together with its unit-conductance network.
#[derive(Clone, Debug)]
pub struct Cluster {
    spec: LatticeSpec,
    lattice: Arc<Lattice>,
    ranks: Vec<usize>,
    network: Network,
}

impl Cluster {
    /// Extracts the cluster with the given label.
    pub fn extract(config: &BondConfiguration, labels: &ClusterLabels, which: usize) -> Self {
        let lat = config.lattice();
        let ranks: Vec<usize> = (labels.min_rank[which]..lat.vertex_count())
            .filter(|&v| labels.label[v] as usize == which)
            .collect();
        Self::from_ranks(config, ranks)
    }

    /// Builds the open subgraph induced on a connected set of ranks.
    pub(crate) fn from_ranks(config: &BondConfiguration, ranks: Vec<usize>) -> Self {
        let lat = config.lattice();
        let local = |r: usize| ranks.binary_search(&r).ok();
        let mut edges = Vec::new();
        for (i, &r) in ranks.iter().enumerate() {
            for axis in 0..lat.dim() {
                if let (Some(w), Some(e)) = (lat.step(r, axis, true), lat.forward_edge(r, axis)) {
                    if config.is_open(e) {
                        if let Some(j) = local(w) {
                            edges.push((i, j));
                        }
                    }
                }
            }
        }
        let coords: Vec<Point> = ranks.iter().map(|&r| lat.point(r)).collect();
        let network = Network::with_coords(&edges, coords).expect("open clusters are connected");
        Cluster {
            spec: *config.spec(),
            lattice: config.lattice_arc(),
            ranks,
            network,
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Lattice ranks of the vertices, sorted; position = local index.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn local(&self, rank: usize) -> Option<usize> {
        self.ranks.binary_search(&rank).ok()
    }

    pub fn local_of(&self, point: &[i64]) -> Option<usize> {
        self.lattice.rank(point).and_then(|r| self.local(r))
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.local_of(point).is_some()
    }

    pub fn point(&self, local: usize) -> Point {
        self.lattice.point(self.ranks[local])
    }

    pub fn rank(&self, local: usize) -> usize {
        self.ranks[local]
    }

    /// Local index of a vertex, or a domain error.
    pub fn require(&self, point: &[i64]) -> Result<usize> {
        self.local_of(point)
            .ok_or_else(|| Error::Domain(format!("{point:?} is not in the cluster")))
    }
}

/// Largest open cluster `C^n` of the configuration.
pub fn largest_cluster(config: &BondConfiguration) -> Cluster {
    let labels = open_clusters(config);
    Cluster::extract(config, &labels, labels.largest())
}

#[derive(Clone, Debug, Serialize)]
pub struct GiantEvent {
    pub holds: bool,
    pub giant_fraction: f64,
    /// Largest l-infinity diameter among the other clusters.
    pub max_other_diameter: i64,
    pub threshold: f64,
}

/// Checks that every open cluster other than `C^n` has l-infinity diameter
/// at most `kappa * ln n`, so every longer open path lies in `C^n`.
pub fn check_giant_event(config: &BondConfiguration, kappa: f64) -> Result<GiantEvent> {
    let n = config.spec().n;
    if n < 2 {
        return Err(Error::Precondition("giant event needs n >= 2".into()));
    }
    if kappa <= 0.0 {
        return Err(Error::Precondition("kappa must be positive".into()));
    }
    let lat = config.lattice();
    let labels = open_clusters(config);
    let giant = labels.largest();
    let d = lat.dim();
    let k = labels.count();
    let mut lo = vec![i64::MAX; k * d];
    let mut hi = vec![i64::MIN; k * d];
    for v in 0..lat.vertex_count() {
        let l = labels.label[v] as usize;
        for a in 0..d {
            let c = lat.coord(v, a);
            lo[l * d + a] = lo[l * d + a].min(c);
            hi[l * d + a] = hi[l * d + a].max(c);
        }
    }
    let max_other = (0..k)
        .filter(|&l| l != giant)
        .map(|l| (0..d).map(|a| hi[l * d + a] - lo[l * d + a]).max().unwrap())
        .max()
        .unwrap_or(0);
    let threshold = kappa * (n as f64).ln();
    Ok(GiantEvent {
        holds: (max_other as f64) <= threshold,
        giant_fraction: labels.sizes[giant] as f64 / lat.vertex_count() as f64,
        max_other_diameter: max_other,
        threshold,
    })
}

/// Graph distance inside the cluster.
pub fn chemical_distance(cluster: &Cluster, x: &[i64], y: &[i64]) -> Result<usize> {
    let (a, b) = (cluster.require(x)?, cluster.require(y)?);
    let net = cluster.network();
    let mut dist = vec![u32::MAX; net.vertex_count()];
    let mut queue = VecDeque::from([a]);
    dist[a] = 0;
    while let Some(v) = queue.pop_front() {
        if v == b {
            return Ok(dist[v] as usize);
        }
        for &(w, _) in net.neighbors(v) {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[v] + 1;
                queue.push_back(w as usize);
            }
        }
    }
    unreachable!("clusters are connected")
}
