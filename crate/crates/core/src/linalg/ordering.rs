//! Fill-reducing orderings.

use std::collections::{BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use crate::lattice::Point;

const LEAF: usize = 48;

/// Geometric nested dissection for subgraphs of `Z^d`.
///
/// Removing every vertex with a given coordinate along some axis separates
/// the rest, so each level cuts the bounding box at the median along its
/// longest side and numbers the separator last.
pub fn nested_dissection(coords: &[Point], members: &[usize]) -> Vec<usize> {
    let mut idx = members.to_vec();
    let mut out = Vec::with_capacity(idx.len());
    dissect(&mut idx, coords, &mut out);
    out
}

fn dissect(idx: &mut [usize], coords: &[Point], out: &mut Vec<usize>) {
    if idx.len() <= LEAF {
        out.extend_from_slice(idx);
        return;
    }
    let d = coords[idx[0]].len();
    let (mut axis, mut extent) = (0, -1);
    for a in 0..d {
        let lo = idx.iter().map(|&i| coords[i][a]).min().unwrap();
        let hi = idx.iter().map(|&i| coords[i][a]).max().unwrap();
        if hi - lo > extent {
            axis = a;
            extent = hi - lo;
        }
    }
    if extent <= 0 {
        out.extend_from_slice(idx);
        return;
    }
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by_key(mid, |&i| coords[i][axis]);
    let cut = coords[idx[mid]][axis];
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &i in idx.iter() {
        match coords[i][axis].cmp(&cut) {
            std::cmp::Ordering::Less => left.push(i),
            std::cmp::Ordering::Greater => right.push(i),
            std::cmp::Ordering::Equal => sep.push(i),
        }
    }
    dissect(&mut left, coords, out);
    dissect(&mut right, coords, out);
    out.extend_from_slice(&sep);
}

/// Greedy minimum degree on the elimination graph of `adjacency`.
pub fn minimum_degree(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut graph: Vec<BTreeSet<usize>> = adjacency
        .iter()
        .enumerate()
        .map(|(v, nb)| nb.iter().copied().filter(|&w| w != v).collect())
        .collect();
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|v| Reverse((graph[v].len(), v))).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if done[v] || deg != graph[v].len() {
            continue;
        }
        done[v] = true;
        order.push(v);
        let nb: Vec<usize> = std::mem::take(&mut graph[v]).into_iter().collect();
        for &a in &nb {
            graph[a].remove(&v);
        }
        for (k, &a) in nb.iter().enumerate() {
            for &b in &nb[k + 1..] {
                graph[a].insert(b);
                graph[b].insert(a);
            }
        }
        for &a in &nb {
            heap.push(Reverse((graph[a].len(), a)));
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orderings_are_permutations() {
        let coords: Vec<Point> = (0..400).map(|i| vec![i / 20, i % 20]).collect();
        let members: Vec<usize> = (0..400).collect();
        let mut o = nested_dissection(&coords, &members);
        o.sort();
        assert_eq!(o, members);

        let adj: Vec<Vec<usize>> = (0..30)
            .map(|i: usize| vec![(i + 1) % 30, (i + 29) % 30])
            .collect();
        let mut o = minimum_degree(&adj);
        o.sort();
        assert_eq!(o, (0..30).collect::<Vec<_>>());
    }
}
