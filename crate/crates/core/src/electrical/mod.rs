//! Effective resistances and the two certificate directions: cutset lower
//! bounds and unit-flow upper bounds.

mod averaged;
mod flow;

pub use averaged::{
    average_paths, construct_averaged_flow, AveragedFlow, FlowDiagnostics, FlowLayout, LabelPaths,
    LatticeCrossings,
};
pub use flow::{flow_energy, write_flow_csv, Flow};

use std::collections::VecDeque;

use rand::seq::index;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{solve_dirichlet, CgOptions, GreenFunction};
use crate::network::Network;
use crate::{par, rng};

/// Largest network on which [`MaxMode::Exact`] is allowed.
pub const EXACT_MODE_MAX_VERTICES: usize = 3000;

/// Number of uniformly random vertices added to every candidate set.
pub const RANDOM_CANDIDATES: usize = 32;

/// `sum over edges of (f(u) - f(v))^2`.
pub fn dirichlet_energy(net: &Network, f: &[f64]) -> f64 {
    net.edges()
        .iter()
        .map(|&(u, v)| (f[u as usize] - f[v as usize]).powi(2))
        .sum()
}

/// Harmonic potential, 1 on `a`, 0 on `b`.
#[derive(Clone, Debug)]
pub struct Potential {
    pub values: Vec<f64>,
    pub source: Vec<usize>,
    pub sink: Vec<usize>,
}

fn check_terminals(net: &Network, a: &[usize], b: &[usize]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("terminal sets must be nonempty".into()));
    }
    let n = net.vertex_count();
    if let Some(&v) = a.iter().chain(b).find(|&&v| v >= n) {
        return Err(Error::Domain(format!("vertex {v} is outside the network")));
    }
    if a.iter().any(|v| b.contains(v)) {
        return Err(Error::Domain("terminal sets intersect".into()));
    }
    Ok(())
}

pub fn harmonic_potential(net: &Network, a: &[usize], b: &[usize]) -> Result<Potential> {
    check_terminals(net, a, b)?;
    let n = net.vertex_count();
    let mut pinned = vec![false; n];
    let mut values = vec![0.0; n];
    for &v in a {
        pinned[v] = true;
        values[v] = 1.0;
    }
    for &v in b {
        pinned[v] = true;
    }
    solve_dirichlet(net, &pinned, &mut values, &[], CgOptions::default())?;
    Ok(Potential {
        values,
        source: a.to_vec(),
        sink: b.to_vec(),
    })
}

/// `R(A, B) = 1 / min energy`, by preconditioned CG on the pinned Laplacian.
pub fn effective_resistance(net: &Network, a: &[usize], b: &[usize]) -> Result<f64> {
    let pot = harmonic_potential(net, a, b)?;
    Ok(1.0 / dirichlet_energy(net, &pot.values))
}

pub fn resistance_between(net: &Network, x: usize, y: usize) -> Result<f64> {
    effective_resistance(net, &[x], &[y])
}

/// Resistances of many pairs through one factorization.
pub struct PairResistances {
    green: GreenFunction,
    diag: Vec<f64>,
}

impl PairResistances {
    pub fn new(net: &Network) -> Result<Self> {
        let green = GreenFunction::new(net, central_vertex(net))?;
        let diag = green.selected().diagonal();
        Ok(PairResistances { green, diag })
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    /// `R(v, pin)` for every vertex.
    pub fn to_pin(&self) -> &[f64] {
        &self.diag
    }

    pub fn column(&self, v: usize) -> Vec<f64> {
        self.green.column(v)
    }

    pub fn resistance(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        let col = self.green.column(x);
        self.diag[x] + self.diag[y] - 2.0 * col[y]
    }
}

/// Midpoint of a double-sweep BFS diameter path.
pub fn central_vertex(net: &Network) -> usize {
    let far = |s: usize| {
        let d = net.bfs_distances(s);
        (0..d.len()).max_by_key(|&v| (d[v], std::cmp::Reverse(v))).unwrap()
    };
    let a = far(0);
    let b = far(a);
    let path = net.shortest_path(a, b).unwrap();
    path[path.len() / 2]
}

#[derive(Clone, Debug)]
pub enum MaxMode {
    /// All pairs; only for networks with at most
    /// [`EXACT_MODE_MAX_VERTICES`] vertices.
    Exact,
    /// Degree-one vertices, the listed extra vertices (e.g. beard tips) and
    /// [`RANDOM_CANDIDATES`] random vertices drawn with `seed`.
    Candidate { extra: Vec<usize>, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxResistance {
    pub value: f64,
    pub pair: (usize, usize),
    pub candidates: usize,
    /// Green columns actually solved before the bound closed the search.
    pub columns_solved: usize,
}

pub fn candidate_set(net: &Network, extra: &[usize], seed: u64) -> Vec<usize> {
    let n = net.vertex_count();
    let mut mark = vec![false; n];
    for v in (0..n).filter(|&v| net.degree(v) == 1) {
        mark[v] = true;
    }
    for &v in extra {
        mark[v] = true;
    }
    let mut rng = rng::trial_rng(seed, 0);
    for v in index::sample(&mut rng, n, RANDOM_CANDIDATES.min(n)) {
        mark[v] = true;
    }
    (0..n).filter(|&v| mark[v]).collect()
}

pub fn max_pairwise_resistance(net: &Network, mode: &MaxMode) -> Result<MaxResistance> {
    let set: Vec<usize> = match mode {
        MaxMode::Exact => {
            if net.vertex_count() > EXACT_MODE_MAX_VERTICES {
                return Err(Error::Resource(format!(
                    "exact mode allows at most {EXACT_MODE_MAX_VERTICES} vertices, got {}",
                    net.vertex_count()
                )));
            }
            (0..net.vertex_count()).collect()
        }
        MaxMode::Candidate { extra, seed } => {
            if let Some(&v) = extra.iter().find(|&&v| v >= net.vertex_count()) {
                return Err(Error::Domain(format!("candidate {v} outside the network")));
            }
            candidate_set(net, extra, *seed)
        }
    };
    max_over_set(net, &set)
}

/// Exact `max R(x, y)` over pairs from `set`.
///
/// With the Green function grounded at `x0`, `G >= 0` entrywise so
/// `R(x, y) <= G_xx + G_yy`. Candidates are visited by decreasing `G_xx` and
/// the search stops once the best pair beats that bound for all pairs not
/// yet covered.
pub fn max_over_set(net: &Network, set: &[usize]) -> Result<MaxResistance> {
    if net.vertex_count() == 1 || set.len() < 2 {
        let v = set.first().copied().unwrap_or(0);
        return Ok(MaxResistance {
            value: 0.0,
            pair: (v, v),
            candidates: set.len(),
            columns_solved: 0,
        });
    }
    Ok(max_over_set_with(&PairResistances::new(net)?, set))
}

/// [`max_over_set`] reusing an existing factorization.
pub fn max_over_set_with(pr: &PairResistances, set: &[usize]) -> MaxResistance {
    let diag = pr.to_pin();
    let mut order = set.to_vec();
    order.sort_unstable();
    order.dedup();
    if order.len() < 2 {
        let v = order.first().copied().unwrap_or(0);
        return MaxResistance {
            value: 0.0,
            pair: (v, v),
            candidates: order.len(),
            columns_solved: 0,
        };
    }
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]).then(a.cmp(&b)));
    let k = order.len();
    let mut best = (-1.0f64, (order[0], order[1]));
    let mut solved = 0;
    let batch = if par::is_parallel() { 16 } else { 1 };
    let mut t = 0;
    while t + 1 < k {
        let bound = diag[order[t]] + diag[order[t + 1]];
        if best.0 >= bound {
            break;
        }
        let end = (t + batch).min(k - 1);
        let results = par::map_range(end - t, |off| {
            let s = t + off;
            let a = order[s];
            let col = pr.column(a);
            let mut local = (-1.0f64, (a, a));
            for &b in &order[s + 1..] {
                let r = diag[a] + diag[b] - 2.0 * col[b];
                if r > local.0 {
                    local = (r, (a.min(b), a.max(b)));
                }
            }
            local
        });
        for r in results {
            if r.0 > best.0 {
                best = r;
            }
        }
        solved += end - t;
        t = end;
    }
    MaxResistance {
        value: best.0.max(0.0),
        pair: best.1,
        candidates: k,
        columns_solved: solved,
    }
}

/// `min R(x, y)` over distinct pairs from `set`, with the minimizing pair.
pub fn min_over_set(net: &Network, set: &[usize]) -> Result<(f64, (usize, usize))> {
    let mut set = set.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() < 2 {
        return Err(Error::Domain("need at least two distinct vertices".into()));
    }
    let pr = PairResistances::new(net)?;
    let diag = pr.to_pin();
    let rows = par::map_range(set.len() - 1, |i| {
        let a = set[i];
        let col = pr.column(a);
        set[i + 1..]
            .iter()
            .map(|&b| (diag[a] + diag[b] - 2.0 * col[b], (a, b)))
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap()
    });
    Ok(rows
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap())
}

/// Edges of `net` crossing between BFS layers `k` and `k + 1` around `x`,
/// for `0 <= k < dist(x, y)`. These are disjoint and each separates `x`
/// from `y`.
pub fn bfs_layer_cutsets(net: &Network, x: usize, y: usize) -> Vec<Vec<usize>> {
    let dist = net.bfs_distances(x);
    let layers = dist[y] as usize;
    let mut cutsets = vec![Vec::new(); layers];
    for (e, &(u, v)) in net.edges().iter().enumerate() {
        let (du, dv) = (dist[u as usize], dist[v as usize]);
        let lo = du.min(dv) as usize;
        if du != dv && lo < layers {
            cutsets[lo].push(e);
        }
    }
    cutsets
}

fn separates(net: &Network, x: usize, y: usize, cut: &[usize]) -> bool {
    let mut blocked = vec![false; net.edge_count()];
    for &e in cut {
        blocked[e] = true;
    }
    let mut seen = vec![false; net.vertex_count()];
    let mut queue = VecDeque::from([x]);
    seen[x] = true;
    while let Some(v) = queue.pop_front() {
        if v == y {
            return false;
        }
        for &(w, e) in net.neighbors(v) {
            if !blocked[e as usize] && !seen[w as usize] {
                seen[w as usize] = true;
                queue.push_back(w as usize);
            }
        }
    }
    true
}

/// `sum_k 1 / |cutset_k|` after validating that the cutsets are pairwise
/// disjoint and each separates `x` from `y`; a lower bound on `R(x, y)`.
pub fn nash_williams_bound(net: &Network, x: usize, y: usize, cutsets: &[Vec<usize>]) -> Result<f64> {
    let n = net.vertex_count();
    if x >= n || y >= n {
        return Err(Error::Domain("vertex outside the network".into()));
    }
    let mut owner = vec![usize::MAX; net.edge_count()];
    for (k, cut) in cutsets.iter().enumerate() {
        for &e in cut {
            if e >= net.edge_count() {
                return Err(Error::CertificateInvalid(format!("edge {e} out of range")));
            }
            if owner[e] != usize::MAX && owner[e] != k {
                return Err(Error::CertificateInvalid(format!(
                    "edge {e} lies in cutsets {} and {k}",
                    owner[e]
                )));
            }
            owner[e] = k;
        }
    }
    let checks = par::map_slice(cutsets, |cut| separates(net, x, y, cut));
    if let Some(k) = checks.iter().position(|ok| !ok) {
        return Err(Error::CertificateInvalid(format!(
            "cutset {k} does not separate {x} from {y}"
        )));
    }
    Ok(cutsets.iter().map(|c| 1.0 / c.len() as f64).sum())
}

/// `sum over edges of R(u, v) - (|V| - 1)`, which vanishes exactly; each
/// edge resistance comes from an independent CG solve.
pub fn foster_check(net: &Network) -> Result<f64> {
    let rs = par::map_range(net.edge_count(), |e| {
        let (u, v) = net.edge(e);
        resistance_between(net, u, v)
    });
    let mut total = 0.0;
    for r in rs {
        total += r?;
    }
    Ok(total - (net.vertex_count() as f64 - 1.0))
}

/// Same identity evaluated through the selected inverse of one factor.
pub fn foster_check_factor(net: &Network) -> Result<f64> {
    let green = GreenFunction::new(net, central_vertex(net))?;
    let total: f64 = green.selected().edge_resistances(net).iter().sum();
    Ok(total - (net.vertex_count() as f64 - 1.0))
}
