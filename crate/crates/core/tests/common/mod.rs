#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use perclab::{BondConfiguration, Network};

/// Random connected simple graphs: a random spanning tree plus extra edges.
pub fn graph_corpus(count: usize, min_vertices: usize, max_vertices: usize, seed: u64) -> Vec<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(min_vertices..=max_vertices);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut edges = HashSet::new();
            for i in 1..n {
                let j = rng.random_range(0..i);
                let (a, b) = (order[i], order[j]);
                edges.insert((a.min(b), a.max(b)));
            }
            let extra = rng.random_range(0..=n);
            for _ in 0..extra {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
            edges.sort();
            Network::new(n, &edges).unwrap()
        })
        .collect()
}

/// Exact `R(x, y)` by Gaussian elimination over the rationals on the
/// Laplacian grounded at `y`.
pub fn rational_resistance(net: &Network, x: usize, y: usize) -> BigRational {
    if x == y {
        return BigRational::zero();
    }
    let n = net.vertex_count();
    let idx: Vec<usize> = (0..n).filter(|&v| v != y).collect();
    let pos = |v: usize| idx.iter().position(|&w| w == v);
    let k = idx.len();
    let mut a = vec![vec![BigRational::zero(); k + 1]; k];
    for &(u, v) in net.edges() {
        let (u, v) = (u as usize, v as usize);
        for (p, q) in [(u, v), (v, u)] {
            if let Some(i) = pos(p) {
                a[i][i] += BigRational::one();
                if let Some(j) = pos(q) {
                    a[i][j] -= BigRational::one();
                }
            }
        }
    }
    let xi = pos(x).unwrap();
    a[xi][k] = BigRational::one();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero()).expect("connected graph");
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for j in col..=k {
            a[col][j] = &a[col][j] / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=k {
                    let t = &f * &a[col][j];
                    a[r][j] -= t;
                }
            }
        }
    }
    a[xi][k].clone()
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Maximum number of vertex-disjoint left-right crossings of occupied sites
/// by enumerating every crossing and searching all packings.
pub fn brute_force_crossings(columns: usize, rows: usize, occupied: &[bool]) -> usize {
    assert!(columns * rows <= 32);
    let mut masks: HashSet<u32> = HashSet::new();
    for y in 0..rows {
        let start = y * columns;
        if occupied[start] {
            let mut path = vec![start];
            extend(columns, rows, occupied, &mut path, 1 << start, &mut masks);
        }
    }
    // Enumerated crossings meet the left column in exactly one site.
    let by_start: Vec<Vec<u32>> = (0..rows)
        .map(|y| masks.iter().copied().filter(|m| m & (1 << (y * columns)) != 0).collect())
        .collect();
    pack(&by_start, 0, 0, &mut HashMap::new())
}

fn extend(columns: usize, rows: usize, occupied: &[bool], path: &mut Vec<usize>, used: u32, out: &mut HashSet<u32>) {
    let v = *path.last().unwrap();
    if v % columns == columns - 1 {
        out.insert(used);
        return;
    }
    let (x, y) = (v % columns, v / columns);
    let mut next = Vec::new();
    if x + 1 < columns {
        next.push(v + 1);
    }
    if x > 1 {
        next.push(v - 1);
    }
    if y > 0 && x > 0 {
        next.push(v - columns);
    }
    if y + 1 < rows && x > 0 {
        next.push(v + columns);
    }
    for w in next {
        if occupied[w] && used & (1 << w) == 0 {
            path.push(w);
            extend(columns, rows, occupied, path, used | (1 << w), out);
            path.pop();
        }
    }
}

fn pack(by_start: &[Vec<u32>], row: usize, used: u32, memo: &mut HashMap<(usize, u32), usize>) -> usize {
    if row == by_start.len() {
        return 0;
    }
    if let Some(&b) = memo.get(&(row, used)) {
        return b;
    }
    let mut best = pack(by_start, row + 1, used, memo);
    for &m in &by_start[row] {
        if m & used == 0 {
            best = best.max(1 + pack(by_start, row + 1, used | m, memo));
        }
    }
    memo.insert((row, used), best);
    best
}

/// Graph distance between two lattice ranks along open edges, by Dijkstra
/// with unit weights on the configuration itself.
pub fn dijkstra_open(config: &BondConfiguration, a: usize, b: usize) -> Option<usize> {
    let n = config.lattice().vertex_count();
    let mut dist = vec![usize::MAX; n];
    let mut heap = BinaryHeap::from([Reverse((0usize, a))]);
    dist[a] = 0;
    while let Some(Reverse((d, v))) = heap.pop() {
        if v == b {
            return Some(d);
        }
        if d > dist[v] {
            continue;
        }
        for w in config.open_neighbors(v) {
            if d + 1 < dist[w] {
                dist[w] = d + 1;
                heap.push(Reverse((d + 1, w)));
            }
        }
    }
    None
}
