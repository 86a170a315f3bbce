//! Maximum families of vertex-disjoint paths between two vertex sets, by
//! unit-capacity max-flow on the node-split graph (Menger).

use std::collections::VecDeque;

struct Arc {
    to: u32,
    cap: u8,
}

struct FlowGraph {
    arcs: Vec<Arc>,
    head: Vec<Vec<u32>>,
}

impl FlowGraph {
    fn new(nodes: usize) -> Self {
        FlowGraph {
            arcs: Vec::new(),
            head: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize) {
        self.head[from].push(self.arcs.len() as u32);
        self.arcs.push(Arc { to: to as u32, cap: 1 });
        self.head[to].push(self.arcs.len() as u32);
        self.arcs.push(Arc { to: from as u32, cap: 0 });
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.head.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &a in &self.head[v] {
                let arc = &self.arcs[a as usize];
                if arc.cap > 0 && level[arc.to as usize] == u32::MAX {
                    level[arc.to as usize] = level[v] + 1;
                    queue.push_back(arc.to as usize);
                }
            }
        }
        (level[t] != u32::MAX).then_some(level)
    }

    /// One blocking flow; iterative DFS over the level graph.
    fn augment(&mut self, s: usize, t: usize, level: &[u32]) -> usize {
        let mut next = vec![0usize; self.head.len()];
        let mut pushed = 0;
        let mut stack: Vec<u32> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                for &a in &stack {
                    self.arcs[a as usize].cap -= 1;
                    self.arcs[a as usize ^ 1].cap += 1;
                }
                pushed += 1;
                stack.clear();
                v = s;
                continue;
            }
            let mut advanced = false;
            while next[v] < self.head[v].len() {
                let a = self.head[v][next[v]] as usize;
                let to = self.arcs[a].to as usize;
                if self.arcs[a].cap > 0 && level[to] == level[v] + 1 {
                    stack.push(a as u32);
                    v = to;
                    advanced = true;
                    break;
                }
                next[v] += 1;
            }
            if !advanced {
                if v == s {
                    return pushed;
                }
                let a = stack.pop().unwrap() as usize;
                v = self.arcs[a ^ 1].to as usize;
                next[v] += 1;
            }
        }
    }
}

/// Maximum family of vertex-disjoint paths from `sources` to `sinks` in the
/// graph on `0..n` whose neighbours are listed by `adjacent`. Paths are
/// returned source-first, sorted by their first vertex; a vertex that is
/// both a source and a sink yields a one-vertex path.
pub fn vertex_disjoint_paths(
    n: usize,
    adjacent: impl Fn(usize, &mut Vec<usize>),
    is_source: impl Fn(usize) -> bool,
    is_sink: impl Fn(usize) -> bool,
) -> Vec<Vec<usize>> {
    let (s, t) = (2 * n, 2 * n + 1);
    let mut g = FlowGraph::new(2 * n + 2);
    let mut nbrs = Vec::new();
    for v in 0..n {
        g.add(2 * v, 2 * v + 1);
        if is_source(v) {
            g.add(s, 2 * v);
        }
        if is_sink(v) {
            g.add(2 * v + 1, t);
        }
        nbrs.clear();
        adjacent(v, &mut nbrs);
        for &w in &nbrs {
            g.add(2 * v + 1, 2 * w);
        }
    }
    while let Some(level) = g.levels(s, t) {
        if g.augment(s, t, &level) == 0 {
            break;
        }
    }
    // every used vertex carries one unit, so following saturated arcs from
    // the super source traces each path exactly once
    let used = |a: usize| a % 2 == 0 && g.arcs[a].cap == 0;
    let mut paths = Vec::new();
    for &a in &g.head[s] {
        if !used(a as usize) {
            continue;
        }
        let mut v = g.arcs[a as usize].to as usize / 2;
        let mut path = vec![v];
        loop {
            let out = 2 * v + 1;
            let step = g.head[out]
                .iter()
                .map(|&b| b as usize)
                .find(|&b| used(b))
                .map(|b| g.arcs[b].to as usize)
                .unwrap();
            if step == t {
                break;
            }
            v = step / 2;
            path.push(v);
        }
        paths.push(path);
    }
    paths.sort();
    paths
}

/// Chronological loop erasure of a walk.
pub fn loop_erase(walk: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(walk.len());
    let mut pos = std::collections::HashMap::new();
    for &v in walk {
        if let Some(&k) = pos.get(&v) {
            for w in out.drain(k + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_adj(w: usize, h: usize, open: &[bool]) -> impl Fn(usize, &mut Vec<usize>) + '_ {
        move |v, out| {
            let (x, y) = (v % w, v / w);
            if !open[v] {
                return;
            }
            let mut push = |u: usize| {
                if open[u] {
                    out.push(u)
                }
            };
            if x > 0 {
                push(v - 1);
            }
            if x + 1 < w {
                push(v + 1);
            }
            if y > 0 {
                push(v - w);
            }
            if y + 1 < h {
                push(v + w);
            }
        }
    }

    #[test]
    fn full_rectangle_rows() {
        let (w, h) = (6, 4);
        let open = vec![true; w * h];
        let paths = vertex_disjoint_paths(w * h, grid_adj(w, h, &open), |v| v % w == 0, |v| v % w == w - 1);
        assert_eq!(paths.len(), h);
        for p in &paths {
            assert_eq!(p.len(), w);
        }
    }

    #[test]
    fn bottleneck() {
        // two rows joined through a single middle column vertex
        let (w, h) = (5, 3);
        let mut open = vec![true; w * h];
        for y in 0..h {
            if y != 1 {
                open[y * w + 2] = false;
            }
        }
        let paths = vertex_disjoint_paths(w * h, grid_adj(w, h, &open), |v| v % w == 0, |v| v % w == w - 1);
        assert_eq!(paths.len(), 1);
        assert!(paths[0].contains(&(w + 2)));
    }

    #[test]
    fn shared_endpoint_source_sink() {
        let paths = vertex_disjoint_paths(1, |_, _| {}, |_| true, |_| true);
        assert_eq!(paths, vec![vec![0]]);
    }

    #[test]
    fn loop_erasure() {
        assert_eq!(loop_erase(&[0, 1, 2, 1, 3]), vec![0, 1, 3]);
        assert_eq!(loop_erase(&[0, 1, 2, 0, 4, 5, 4]), vec![0, 4]);
        assert_eq!(loop_erase(&[7]), vec![7]);
    }
}
