//! Averaged random-path unit flows on two-dimensional clusters.
//!
//! The section `[-lt, lt]^2` is cut into squares of side `2A + 1` centred at
//! `(2A + 1) k`. Horizontal and vertical strips of squares carry families of
//! vertex-disjoint open crossings inside the cluster; for every label
//! `(i, j)` a path from `x` to `y` climbs a staircase of squares switching
//! between the `j`-th crossings, and the flow is the average over labels.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::flow::Flow;
use crate::cluster::Cluster;
use crate::crossings::{loop_erase, vertex_disjoint_paths};
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowLayout {
    pub n: usize,
    pub alpha: f64,
    pub c: f64,
    /// `A = ceil(alpha ln n)`, the half-width of a square.
    pub half_width: i64,
    /// `2A + 1`.
    pub period: i64,
    /// Largest `l` with `(2A + 1) l + A <= n`.
    pub ell: i64,
    /// `(2A + 1) ell + A`.
    pub ell_tilde: i64,
    /// `ceil(2 c A)` crossings used per strip.
    pub crossings_per_strip: usize,
}

impl FlowLayout {
    pub fn new(n: usize, alpha: f64, c: f64) -> Result<Self> {
        if n < 2 || alpha <= 0.0 || c <= 0.0 {
            return Err(Error::Configuration(format!(
                "flow layout needs n >= 2, alpha > 0, c > 0 (got n={n}, alpha={alpha}, c={c})"
            )));
        }
        let a = (alpha * (n as f64).ln()).ceil().max(1.0) as i64;
        let period = 2 * a + 1;
        let ell = (n as i64 - a).div_euclid(period);
        if ell < 1 {
            return Err(Error::Configuration(format!(
                "n={n} too small for squares of half-width {a}"
            )));
        }
        Ok(FlowLayout {
            n,
            alpha,
            c,
            half_width: a,
            period,
            ell,
            ell_tilde: period * ell + a,
            crossings_per_strip: (2.0 * c * a as f64).ceil() as usize,
        })
    }

    /// Index `k` of the band `|s - (2A + 1) k| <= A` containing `s`, if the
    /// band lies in the section.
    pub fn band(&self, s: i64) -> Option<i64> {
        let k = (s + self.half_width).div_euclid(self.period);
        (k.abs() <= self.ell).then_some(k)
    }

    fn in_band(&self, s: i64, k: i64) -> bool {
        (s - self.period * k).abs() <= self.half_width
    }

    /// `(k1, k2)` of the square containing a point of the section.
    pub fn square_of(&self, p: &[i64]) -> Option<(i64, i64)> {
        Some((self.band(p[0])?, self.band(p[1])?))
    }

    /// Whether a flow between the two points can be built: same column of
    /// squares and an even, nonzero number of rows apart.
    pub fn admissible(&self, px: &[i64], py: &[i64]) -> bool {
        match (self.square_of(px), self.square_of(py)) {
            (Some((a1, a2)), Some((b1, b2))) => a1 == b1 && a2 != b2 && (a2 - b2) % 2 == 0,
            _ => false,
        }
    }
}

/// Disjoint open crossings of every strip of the section, inside a cluster.
#[derive(Clone, Debug)]
pub struct LatticeCrossings {
    layout: FlowLayout,
    horizontal: Vec<Vec<Vec<usize>>>,
    vertical: Vec<Vec<Vec<usize>>>,
}

impl LatticeCrossings {
    pub fn compute(cluster: &Cluster, layout: FlowLayout) -> Result<Self> {
        if cluster.lattice().dim() != 2 {
            return Err(Error::Precondition("averaged flows need d = 2".into()));
        }
        if layout.ell_tilde > cluster.lattice().radius() {
            return Err(Error::Precondition("layout does not fit in the box".into()));
        }
        let strips = 2 * layout.ell as usize + 1;
        let all = par::map_range(2 * strips, |k| {
            let axis = k / strips;
            let m = (k % strips) as i64 - layout.ell;
            strip_crossings(cluster, &layout, axis, m)
        });
        let mut all = all.into_iter();
        let horizontal = all.by_ref().take(strips).collect();
        let vertical = all.collect();
        Ok(LatticeCrossings {
            layout,
            horizontal,
            vertical,
        })
    }

    pub fn layout(&self) -> &FlowLayout {
        &self.layout
    }

    /// Left-to-right crossings of horizontal strip `m`.
    pub fn horizontal(&self, m: i64) -> &[Vec<usize>] {
        &self.horizontal[(m + self.layout.ell) as usize]
    }

    /// Bottom-to-top crossings of vertical strip `m`.
    pub fn vertical(&self, m: i64) -> &[Vec<usize>] {
        &self.vertical[(m + self.layout.ell) as usize]
    }

    /// Crossing counts of horizontal then vertical strips, `m` ascending.
    pub fn counts(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.horizontal.iter().map(Vec::len).collect(),
            self.vertical.iter().map(Vec::len).collect(),
        )
    }
}

impl LatticeCrossings {
    /// Square geometries `(m1, m2, rows)` whose strips all carry enough
    /// crossings for a flow between squares `(m1, m2)` and `(m1, m2 + rows)`.
    pub fn feasible_geometries(&self) -> Vec<(i64, i64, i64)> {
        let l = self.layout.ell;
        let need = self.layout.crossings_per_strip;
        if need < 2 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for m1 in -l..=l {
            for m2 in -l..=l {
                for rows in (2..=l - m2).step_by(2) {
                    let reach = rows / 2 - 1;
                    let lean = if m1 + reach <= l {
                        1
                    } else if m1 - reach >= -l {
                        -1
                    } else {
                        continue;
                    };
                    let h_ok = (1..rows).all(|s| self.horizontal(m2 + s).len() >= need);
                    let v_ok = (0..=reach).all(|f| self.vertical(m1 + lean * f).len() >= need);
                    if h_ok && v_ok {
                        out.push((m1, m2, rows));
                    }
                }
            }
        }
        out
    }
}

/// Strip `m` along `axis`: the points with `|x_other - (2A+1) m| <= A`.
fn strip_crossings(cluster: &Cluster, layout: &FlowLayout, axis: usize, m: i64) -> Vec<Vec<usize>> {
    let other = 1 - axis;
    let lt = layout.ell_tilde;
    let lat = cluster.lattice();
    let members: Vec<usize> = (0..cluster.len())
        .filter(|&v| {
            let r = cluster.rank(v);
            layout.in_band(lat.coord(r, other), m) && lat.coord(r, axis).abs() <= lt
        })
        .collect();
    let mut index = HashMap::with_capacity(members.len());
    for (i, &v) in members.iter().enumerate() {
        index.insert(v, i);
    }
    let net = cluster.network();
    let along = |i: usize| lat.coord(cluster.rank(members[i]), axis);
    let paths = vertex_disjoint_paths(
        members.len(),
        |i, out| {
            out.extend(
                net.neighbors(members[i])
                    .iter()
                    .filter_map(|&(w, _)| index.get(&(w as usize)).copied()),
            )
        },
        |i| along(i) == -lt,
        |i| along(i) == lt,
    );
    paths
        .into_iter()
        .map(|p| p.into_iter().map(|i| members[i]).collect())
        .collect()
}

/// Shortest left-to-right crossing of square `(k1, k2)` inside the cluster.
fn square_crossing(cluster: &Cluster, layout: &FlowLayout, k1: i64, k2: i64) -> Option<Vec<usize>> {
    let lat = cluster.lattice();
    let inside = |v: usize| {
        let r = cluster.rank(v);
        layout.in_band(lat.coord(r, 0), k1) && layout.in_band(lat.coord(r, 1), k2)
    };
    let x1 = |v: usize| lat.coord(cluster.rank(v), 0);
    let (left, right) = (layout.period * k1 - layout.half_width, layout.period * k1 + layout.half_width);
    let mut parent: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for v in (0..cluster.len()).filter(|&v| inside(v) && x1(v) == left) {
        parent.insert(v, v);
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        if x1(v) == right {
            let mut path = vec![v];
            let mut u = v;
            while parent[&u] != u {
                u = parent[&u];
                path.push(u);
            }
            path.reverse();
            return Some(path);
        }
        for &(w, _) in cluster.network().neighbors(v) {
            let w = w as usize;
            if inside(w) && !parent.contains_key(&w) {
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    None
}

/// The path built for label `(i, j)`.
#[derive(Clone, Debug, Serialize)]
pub struct LabelPaths {
    pub i: usize,
    pub j: usize,
    pub path: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FlowDiagnostics {
    pub labels: usize,
    /// Rows of squares between the terminals.
    pub rows: i64,
    /// `1` when the staircase leans towards increasing `x_1`, `-1` otherwise.
    pub lean: i64,
    pub crossings_per_strip: usize,
    pub mean_path_length: f64,
    pub max_path_length: usize,
    pub energy: f64,
    /// Energy on edges with both ends on the connectors and the crossings
    /// of the two end squares.
    pub energy_near_terminals: f64,
    /// Remaining energy by row of squares above the lower terminal.
    pub energy_by_level: Vec<f64>,
    /// `max p(e) r L` over edges off the terminal set, where `p(e)` is the
    /// fraction of label paths through `e` and `r >= 1` the distance in rows
    /// to the nearer terminal square.
    pub max_scaled_passage: f64,
}

#[derive(Clone, Debug)]
pub struct AveragedFlow {
    pub flow: Flow,
    pub paths: Vec<LabelPaths>,
    pub diagnostics: FlowDiagnostics,
}

struct PairPlan<'a> {
    crossings: &'a LatticeCrossings,
    m1: i64,
    m2: i64,
    rows: i64,
    lean: i64,
    hx: Vec<usize>,
    hy: Vec<usize>,
    to_hx: Vec<usize>,
    from_hy: Vec<usize>,
}

fn construction(msg: String) -> Error {
    Error::Construction(msg)
}

impl<'a> PairPlan<'a> {
    fn new(cluster: &Cluster, crossings: &'a LatticeCrossings, x: usize, y: usize) -> Result<Self> {
        let layout = crossings.layout();
        let (px, py) = (cluster.point(x), cluster.point(y));
        let (m1, m2) = layout
            .square_of(&px)
            .ok_or_else(|| construction(format!("{px:?} lies outside the section")))?;
        let (k1, k2) = layout
            .square_of(&py)
            .ok_or_else(|| construction(format!("{py:?} lies outside the section")))?;
        let rows = k2 - m2;
        if k1 != m1 || rows <= 0 || rows % 2 != 0 {
            return Err(construction(format!(
                "squares ({m1},{m2}) and ({k1},{k2}) are not an even number of rows apart in one column"
            )));
        }
        let reach = rows / 2 - 1;
        let lean = if m1 + reach <= layout.ell {
            1
        } else if m1 - reach >= -layout.ell {
            -1
        } else {
            return Err(construction("staircase leaves the section".into()));
        };
        let need = layout.crossings_per_strip;
        if need < 2 {
            return Err(construction(format!("{need} crossings per strip, need at least 2")));
        }
        for s in 1..rows {
            let found = crossings.horizontal(m2 + s).len();
            if found < need {
                return Err(construction(format!(
                    "horizontal strip {} has {found} crossings, need {need}",
                    m2 + s
                )));
            }
        }
        for f in 0..=reach {
            let found = crossings.vertical(m1 + lean * f).len();
            if found < need {
                return Err(construction(format!(
                    "vertical strip {} has {found} crossings, need {need}",
                    m1 + lean * f
                )));
            }
        }
        let hx = square_crossing(cluster, layout, m1, m2)
            .ok_or_else(|| construction(format!("square ({m1},{m2}) has no open crossing")))?;
        let hy = square_crossing(cluster, layout, k1, k2)
            .ok_or_else(|| construction(format!("square ({k1},{k2}) has no open crossing")))?;
        let budget = (8.0 * (layout.n as f64).ln()).ceil() as usize + 2 * layout.period as usize;
        let net = cluster.network();
        let to_hx = net.shortest_path(x, hx[0]).unwrap();
        let from_hy = net.shortest_path(*hy.last().unwrap(), y).unwrap();
        if to_hx.len() > budget + 1 || from_hy.len() > budget + 1 {
            return Err(construction(format!(
                "terminal connectors of length {} and {} exceed the budget {budget}",
                to_hx.len() - 1,
                from_hy.len() - 1
            )));
        }
        Ok(PairPlan {
            crossings,
            m1,
            m2,
            rows,
            lean,
            hx,
            hy,
            to_hx,
            from_hy,
        })
    }

    /// Row offsets `0 = s_0 < ... < s_{2i+1} = rows`, spread evenly.
    fn steps(&self, i: usize) -> Vec<i64> {
        let q = 2 * i as i64 + 1;
        (0..=q).map(|r| (2 * r * self.rows + q) / (2 * q)).collect()
    }

    /// Horizontal crossing used at stage `r`, oriented in travel direction.
    fn row_path(&self, s: i64, r: usize, i: usize, j: usize) -> Vec<usize> {
        if s == 0 {
            return self.hx.clone();
        }
        if s == self.rows {
            return self.hy.clone();
        }
        let mut p = self.crossings.horizontal(self.m2 + s)[j].clone();
        let dir = if r <= i { self.lean } else { -self.lean };
        if dir < 0 {
            p.reverse();
        }
        p
    }

    fn label_path(&self, i: usize, j: usize) -> Result<Vec<usize>> {
        let s = self.steps(i);
        let f = |r: usize| if r <= i { r as i64 } else { (2 * i - r) as i64 };
        let mut walk = self.to_hx.clone();
        let mut a = self.hx[0];
        let mut row = self.hx.clone();
        for r in 0..=2 * i {
            let col = &self.crossings.vertical(self.m1 + self.lean * f(r))[j];
            let start = row.iter().position(|&v| v == a).unwrap();
            let on_col: HashMap<usize, usize> = col.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let (stop, _) = row[start..]
                .iter()
                .enumerate()
                .filter_map(|(k, v)| on_col.get(v).map(|&t| (start + k, t)))
                .max_by_key(|&(_, t)| t)
                .ok_or_else(|| construction(format!("label ({i},{j}): row {} misses column", s[r])))?;
            walk.extend_from_slice(&row[start + 1..=stop]);
            let b = row[stop];
            let next = self.row_path(s[r + 1], r + 1, i, j);
            let on_next: HashMap<usize, usize> = next.iter().enumerate().map(|(k, &v)| (v, k)).collect();
            let vstart = on_col[&b];
            let (vstop, _) = col[vstart..]
                .iter()
                .enumerate()
                .filter_map(|(k, v)| on_next.get(v).map(|&t| (vstart + k, t)))
                .max_by_key(|&(_, t)| t)
                .ok_or_else(|| {
                    construction(format!("label ({i},{j}): column misses row {}", s[r + 1]))
                })?;
            walk.extend_from_slice(&col[vstart + 1..=vstop]);
            a = col[vstop];
            row = next;
        }
        let start = self.hy.iter().position(|&v| v == a).unwrap();
        walk.extend_from_slice(&self.hy[start + 1..]);
        walk.extend_from_slice(&self.from_hy[1..]);
        Ok(loop_erase(&walk))
    }
}

/// Averages unit flows along `paths`, all running from `x` to `y`.
pub fn average_paths(cluster: &Cluster, x: usize, y: usize, paths: &[Vec<usize>]) -> Result<Flow> {
    let net = cluster.network();
    let mut flow = Flow::zero(net, x, y);
    if x == y {
        return Ok(flow);
    }
    let w = 1.0 / paths.len() as f64;
    for path in paths {
        if path.first() != Some(&x) || path.last() != Some(&y) {
            return Err(construction("label path has the wrong endpoints".into()));
        }
        for s in path.windows(2) {
            flow.push(net, s[0], s[1], w)?;
        }
    }
    flow.strength = 1.0;
    Ok(flow)
}

/// Unit flow from `x` to `y` (cluster-local ids) averaged over all labels.
pub fn construct_averaged_flow(
    cluster: &Cluster,
    x: usize,
    y: usize,
    crossings: &LatticeCrossings,
) -> Result<AveragedFlow> {
    let n = cluster.len();
    if x >= n || y >= n {
        return Err(Error::Domain("vertex outside the cluster".into()));
    }
    if x == y {
        return Ok(AveragedFlow {
            flow: Flow::zero(cluster.network(), x, y),
            paths: Vec::new(),
            diagnostics: FlowDiagnostics::default(),
        });
    }
    let layout = crossings.layout();
    let flipped = match (layout.square_of(&cluster.point(x)), layout.square_of(&cluster.point(y))) {
        (Some((_, a)), Some((_, b))) => b < a,
        _ => false,
    };
    let (lo, hi) = if flipped { (y, x) } else { (x, y) };
    let plan = PairPlan::new(cluster, crossings, lo, hi)?;
    let labels: Vec<(usize, usize)> = (0..(plan.rows / 2) as usize)
        .flat_map(|i| (0..layout.crossings_per_strip).map(move |j| (i, j)))
        .collect();
    let built = par::map_slice(&labels, |&(i, j)| plan.label_path(i, j));
    let mut paths = Vec::with_capacity(labels.len());
    for (&(i, j), p) in labels.iter().zip(built) {
        let mut path = p?;
        if flipped {
            path.reverse();
        }
        paths.push(LabelPaths { i, j: j + 1, path });
    }
    let raw: Vec<Vec<usize>> = paths.iter().map(|l| l.path.clone()).collect();
    let flow = average_paths(cluster, x, y, &raw)?;
    let diagnostics = diagnose(cluster, &plan, &flow, &raw);
    Ok(AveragedFlow {
        flow,
        paths,
        diagnostics,
    })
}

fn diagnose(cluster: &Cluster, plan: &PairPlan, flow: &Flow, paths: &[Vec<usize>]) -> FlowDiagnostics {
    let net = cluster.network();
    let layout = plan.crossings.layout();
    let lat = cluster.lattice();
    let near: HashSet<usize> = plan
        .hx
        .iter()
        .chain(&plan.hy)
        .chain(&plan.to_hx)
        .chain(&plan.from_hy)
        .copied()
        .collect();
    let mut uses = vec![0usize; net.edge_count()];
    for path in paths {
        for s in path.windows(2) {
            uses[net.edge_between(s[0], s[1]).unwrap()] += 1;
        }
    }
    let labels = paths.len();
    let per_strip = layout.crossings_per_strip;
    let mut d = FlowDiagnostics {
        labels,
        rows: plan.rows,
        lean: plan.lean,
        crossings_per_strip: per_strip,
        mean_path_length: paths.iter().map(|p| p.len() - 1).sum::<usize>() as f64 / labels as f64,
        max_path_length: paths.iter().map(|p| p.len() - 1).max().unwrap_or(0),
        energy_by_level: vec![0.0; plan.rows as usize + 1],
        ..Default::default()
    };
    for (e, &val) in flow.edge_values.iter().enumerate() {
        let sq = val * val;
        d.energy += sq;
        let (u, v) = net.edge(e);
        if near.contains(&u) && near.contains(&v) {
            d.energy_near_terminals += sq;
            continue;
        }
        let x2 = lat.coord(cluster.rank(u), 1).min(lat.coord(cluster.rank(v), 1));
        let level = layout
            .band(x2)
            .map_or(0, |k| (k - plan.m2).clamp(0, plan.rows)) as usize;
        d.energy_by_level[level] += sq;
        if uses[e] > 0 {
            let r = level.min(plan.rows as usize - level).max(1);
            let p = uses[e] as f64 / labels as f64;
            d.max_scaled_passage = d.max_scaled_passage.max(p * (r * per_strip) as f64);
        }
    }
    d
}
