//! Block renormalization: white sites, the strip layout of a
//! two-dimensional section, disjoint white crossings and Kesten grids.

use serde::{Deserialize, Serialize};

use crate::cluster::UnionFind;
use crate::config::{sample_configuration, BondConfiguration};
use crate::crossings::vertex_disjoint_paths;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Point};
use crate::{par, rng};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RenormSpec {
    pub k: usize,
    pub alpha: f64,
    /// Crossing-count constant: `L = ceil(2 c ceil(alpha ln n))`.
    #[serde(default = "default_c")]
    pub c: f64,
    pub underlying: LatticeSpec,
}

fn default_c() -> f64 {
    0.25
}

impl RenormSpec {
    pub fn new(k: usize, alpha: f64, underlying: LatticeSpec) -> Result<Self> {
        let spec = RenormSpec {
            k,
            alpha,
            c: default_c(),
            underlying,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.underlying.validate()?;
        if self.k == 0 || !(self.alpha > 0.0) || !(self.c > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "need K >= 1, alpha > 0, c > 0 (got K={}, alpha={}, c={})",
                self.k, self.alpha, self.c
            )));
        }
        Ok(())
    }
}

/// Half-width `floor(5K/4)` of the enlarged block.
pub fn enlarged_half_width(k: usize) -> i64 {
    (5 * k / 4) as i64
}

/// Centre `(2K + 1) a` of the blocks of `a`.
pub fn block_centre(a: &[i64], k: usize) -> Point {
    a.iter().map(|&c| (2 * k as i64 + 1) * c).collect()
}

/// Bullet-by-bullet outcome of the white-site event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WhiteReport {
    /// Exactly one cluster of the enlarged block touches all of its faces.
    pub unique_crossing: bool,
    /// That cluster meets every face of every subbox of side above `K/10`.
    pub crosses_subboxes: bool,
    /// Every other cluster has diameter at most `K/10`.
    pub others_small: bool,
}

impl WhiteReport {
    pub fn white(&self) -> bool {
        self.unique_crossing && self.crosses_subboxes && self.others_small
    }
}

pub fn white_site(config: &BondConfiguration, a: &[i64], k: usize) -> Result<bool> {
    Ok(white_site_report(config, a, k)?.white())
}

/// Evaluates the three conditions on the enlarged block of `a`, using only
/// open edges with both ends in the block.
pub fn white_site_report(config: &BondConfiguration, a: &[i64], k: usize) -> Result<WhiteReport> {
    let lat = config.lattice();
    let d = lat.dim();
    if a.len() != d || k == 0 {
        return Err(Error::Domain("renormalized vertex has the wrong dimension".into()));
    }
    let h = enlarged_half_width(k);
    let centre = block_centre(a, k);
    if centre.iter().any(|&c| c.abs() + h > lat.radius()) {
        return Err(Error::Precondition(format!(
            "enlarged block of {a:?} with K={k} leaves the box of radius {}",
            lat.radius()
        )));
    }
    let side = (2 * h + 1) as usize;
    let total = side.pow(d as u32);
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * side;
    }
    let local_coord = |idx: usize, i: usize| (idx / strides[i]) % side;
    let rank_of = |idx: usize| {
        let p: Point = (0..d).map(|i| centre[i] - h + local_coord(idx, i) as i64).collect();
        lat.rank(&p).unwrap()
    };
    let mut uf = UnionFind::new(total);
    for idx in 0..total {
        let r = rank_of(idx);
        for i in 0..d {
            if local_coord(idx, i) + 1 < side && config.is_open(lat.forward_edge(r, i).unwrap()) {
                uf.union(idx, idx + strides[i]);
            }
        }
    }
    // per root: face mask and coordinate extents
    let mut faces = vec![0u64; total];
    let mut lo = vec![usize::MAX; total * d];
    let mut hi = vec![0usize; total * d];
    for idx in 0..total {
        let root = uf.find(idx);
        for i in 0..d {
            let c = local_coord(idx, i);
            if c == 0 {
                faces[root] |= 1 << (2 * i);
            }
            if c == side - 1 {
                faces[root] |= 1 << (2 * i + 1);
            }
            lo[root * d + i] = lo[root * d + i].min(c);
            hi[root * d + i] = hi[root * d + i].max(c);
        }
    }
    let all_faces = (1u64 << (2 * d)) - 1;
    let roots: Vec<usize> = (0..total).filter(|&v| uf.find(v) == v).collect();
    let crossing: Vec<usize> = roots.iter().copied().filter(|&r| faces[r] == all_faces).collect();
    if crossing.len() != 1 {
        return Ok(WhiteReport {
            unique_crossing: false,
            crosses_subboxes: false,
            others_small: false,
        });
    }
    let main = crossing[0];
    let others_small = roots.iter().filter(|&&r| r != main).all(|&r| {
        let diam = (0..d).map(|i| hi[r * d + i] - lo[r * d + i]).max().unwrap_or(0);
        10 * diam <= k
    });
    let member: Vec<bool> = (0..total).map(|v| uf.find(v) == main).collect();
    let crosses_subboxes = subboxes_crossed(&member, d, side, k);
    Ok(WhiteReport {
        unique_crossing: true,
        crosses_subboxes,
        others_small,
    })
}

/// Whether the marked set meets every face of every cubic subbox
/// `c + [0, L]^d` with `ceil(K/10) + 1 <= L <= side - 1`, via a
/// `d`-dimensional summed-area table.
fn subboxes_crossed(member: &[bool], d: usize, side: usize, k: usize) -> bool {
    let ext = side + 1;
    let total_ext = ext.pow(d as u32);
    let mut sat = vec![0u32; total_ext];
    let mut ext_strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        ext_strides[i] = ext_strides[i + 1] * ext;
    }
    let mut strides = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * side;
    }
    for (idx, &m) in member.iter().enumerate() {
        let e: usize = (0..d).map(|i| ((idx / strides[i]) % side + 1) * ext_strides[i]).sum();
        sat[e] = m as u32;
    }
    for i in 0..d {
        for e in 0..total_ext {
            if (e / ext_strides[i]) % ext > 0 {
                sat[e] += sat[e - ext_strides[i]];
            }
        }
    }
    // count of marked points in the half-open box [lo, hi)
    let count = |lo: &[usize], hi: &[usize]| -> i64 {
        let mut s = 0i64;
        for corner in 0..(1usize << d) {
            let mut e = 0;
            let mut sign = 1i64;
            for i in 0..d {
                if corner >> i & 1 == 1 {
                    e += lo[i] * ext_strides[i];
                    sign = -sign;
                } else {
                    e += hi[i] * ext_strides[i];
                }
            }
            s += sign * sat[e] as i64;
        }
        s
    };
    let min_side = k.div_ceil(10) + 1;
    let mut lo = vec![0usize; d];
    let mut hi = vec![0usize; d];
    let mut corner = vec![0usize; d];
    for len in min_side..side {
        let positions = side - len;
        corner.iter_mut().for_each(|c| *c = 0);
        loop {
            for axis in 0..d {
                for far in [0, len] {
                    for i in 0..d {
                        lo[i] = corner[i];
                        hi[i] = corner[i] + len + 1;
                    }
                    lo[axis] = corner[axis] + far;
                    hi[axis] = lo[axis] + 1;
                    if count(&lo, &hi) == 0 {
                        return false;
                    }
                }
            }
            let mut i = 0;
            while i < d {
                corner[i] += 1;
                if corner[i] < positions {
                    break;
                }
                corner[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
        }
    }
    true
}

/// Fraction of white sites among `boxes` independent enlarged blocks, each
/// sampled as the whole box `B(floor(5K/4))`.
pub fn white_density(d: usize, p: f64, k: usize, boxes: usize, seed: u64) -> Result<f64> {
    let h = enlarged_half_width(k) as usize;
    let origin = vec![0i64; d];
    let whites = par::map_range(boxes, |t| -> Result<bool> {
        let spec = LatticeSpec::new(d, h, p, rng::derive_seed(seed, &[k as u64, t as u64]))?;
        white_site(&sample_configuration(spec)?, &origin, k)
    });
    let mut count = 0usize;
    for w in whites {
        count += w? as usize;
    }
    Ok(count as f64 / boxes as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridLayout {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    /// `ceil(alpha ln n)`.
    pub log_width: i64,
    pub ell: i64,
    pub ell_tilde: i64,
    /// Strips are indexed `-ell..=ell`.
    pub strips: i64,
}

impl GridLayout {
    /// Largest coordinate of any vertex in the union of the enlarged blocks
    /// of `[-ell_tilde, ell_tilde]^d`.
    pub fn fattened_radius(&self) -> i64 {
        (2 * self.k as i64 + 1) * self.ell_tilde + enlarged_half_width(self.k)
    }

    pub fn sections(&self, d: usize) -> usize {
        d * (d - 1) / 2 * ((2 * self.ell_tilde + 1) as usize).pow(d as u32 - 2)
    }
}

/// `ell = max{l >= 0 : (2K+1)((2A+1) l + A) + 5K/4 <= n}` with
/// `A = ceil(alpha ln n)`. `ell = 0` is accepted (one strip per direction).
pub fn grid_layout(n: usize, k: usize, alpha: f64) -> Result<GridLayout> {
    if n < 2 || k == 0 || !(alpha > 0.0) {
        return Err(Error::Configuration(format!(
            "grid layout needs n >= 2, K >= 1, alpha > 0 (got n={n}, K={k}, alpha={alpha})"
        )));
    }
    let a = (alpha * (n as f64).ln()).ceil() as i64;
    let (k, n4) = (k as i64, 4 * n as i64);
    let fits = |l: i64| 4 * (2 * k + 1) * ((2 * a + 1) * l + a) + 5 * k <= n4;
    if !fits(0) {
        return Err(Error::Configuration(format!(
            "no feasible layout for n={n}, K={k}, alpha={alpha}"
        )));
    }
    let mut ell = 0;
    while fits(ell + 1) {
        ell += 1;
    }
    Ok(GridLayout {
        n,
        k: k as usize,
        alpha,
        log_width: a,
        ell,
        ell_tilde: (2 * a + 1) * ell + a,
        strips: 2 * ell + 1,
    })
}

/// Occupied/vacant sites of the rectangle `[0, columns-1] x [0, rows-1]`,
/// row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteField {
    pub columns: usize,
    pub rows: usize,
    pub occupied: Vec<bool>,
}

impl SiteField {
    pub fn new(columns: usize, rows: usize, occupied: Vec<bool>) -> Result<Self> {
        if columns == 0 || rows == 0 || occupied.len() != columns * rows {
            return Err(Error::Domain("site field size mismatch".into()));
        }
        Ok(SiteField { columns, rows, occupied })
    }

    pub fn filled(columns: usize, rows: usize, value: bool) -> Self {
        SiteField {
            columns,
            rows,
            occupied: vec![value; columns * rows],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.occupied[y * self.columns + x]
    }

    pub fn transposed(&self) -> SiteField {
        let mut occupied = vec![false; self.occupied.len()];
        for y in 0..self.rows {
            for x in 0..self.columns {
                occupied[x * self.rows + y] = self.get(x, y);
            }
        }
        SiteField {
            columns: self.rows,
            rows: self.columns,
            occupied,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossingFamily {
    pub count: usize,
    /// Left-to-right witness paths as `(x, y)` sites.
    pub paths: Vec<Vec<(usize, usize)>>,
}

/// Maximum number of vertex-disjoint left-right crossings of occupied sites.
pub fn count_disjoint_crossings(field: &SiteField) -> CrossingFamily {
    let w = field.columns;
    let h = field.rows;
    let paths = vertex_disjoint_paths(
        w * h,
        |v, out| {
            if !field.occupied[v] {
                return;
            }
            let (x, y) = (v % w, v / w);
            let mut push = |u: usize| {
                if field.occupied[u] {
                    out.push(u);
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
        },
        |v| field.occupied[v] && v % w == 0,
        |v| field.occupied[v] && v % w == w - 1,
    );
    let paths: Vec<Vec<(usize, usize)>> = paths
        .into_iter()
        .map(|p| p.into_iter().map(|v| (v % w, v / w)).collect())
        .collect();
    CrossingFamily {
        count: paths.len(),
        paths,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StripCrossings {
    pub m: i64,
    pub available: usize,
    /// Selected crossings as section coordinates `(k1, k2)`.
    pub crossings: Vec<Vec<(i64, i64)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KestenGrid {
    pub section: usize,
    pub axes: (usize, usize),
    /// Renormalized coordinates of the section's other axes.
    pub offset: Vec<i64>,
    pub k: usize,
    pub alpha: f64,
    pub c: f64,
    pub layout: GridLayout,
    pub crossings_per_strip: usize,
    pub white_fraction: f64,
    pub horizontal: Vec<StripCrossings>,
    pub vertical: Vec<StripCrossings>,
    pub complete: bool,
    /// `(direction, m, shortfall)` for every strip lacking crossings.
    pub deficits: Vec<(String, i64, usize)>,
}

impl KestenGrid {
    /// Whether every selected horizontal crossing shares a site with every
    /// selected vertical crossing.
    pub fn crossings_intersect(&self) -> bool {
        use std::collections::HashSet;
        let verticals: Vec<HashSet<(i64, i64)>> = self
            .vertical
            .iter()
            .flat_map(|s| s.crossings.iter().map(|c| c.iter().copied().collect()))
            .collect();
        self.horizontal
            .iter()
            .flat_map(|s| &s.crossings)
            .all(|h| verticals.iter().all(|v| h.iter().any(|p| v.contains(p))))
    }
}

/// Decodes a section index into its axis pair and the coordinates of the
/// remaining axes (each in `[-ell_tilde, ell_tilde]`).
pub fn section_geometry(d: usize, ell_tilde: i64, section: usize) -> Result<((usize, usize), Vec<i64>)> {
    let width = (2 * ell_tilde + 1) as usize;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    let per_pair = width.pow(d as u32 - 2);
    if section >= pairs.len() * per_pair {
        return Err(Error::Domain(format!(
            "section {section} out of range (there are {})",
            pairs.len() * per_pair
        )));
    }
    let (pair, mut rest) = (pairs[section / per_pair], section % per_pair);
    let mut offset = Vec::with_capacity(d - 2);
    for _ in 0..d - 2 {
        offset.push((rest % width) as i64 - ell_tilde);
        rest /= width;
    }
    Ok((pair, offset))
}

pub fn build_kesten_grid(config: &BondConfiguration, spec: &RenormSpec, section: usize) -> Result<KestenGrid> {
    spec.validate()?;
    let d = config.lattice().dim();
    let layout = grid_layout(config.lattice().radius() as usize, spec.k, spec.alpha)?;
    let lt = layout.ell_tilde;
    let ((a0, a1), offset) = section_geometry(d, lt, section)?;
    let width = (2 * lt + 1) as usize;
    let site = |k1: i64, k2: i64| -> Point {
        let mut a = vec![0i64; d];
        let mut rest = offset.iter();
        for (i, c) in a.iter_mut().enumerate() {
            *c = if i == a0 {
                k1
            } else if i == a1 {
                k2
            } else {
                *rest.next().unwrap()
            };
        }
        a
    };
    let white = par::map_range(width * width, |idx| {
        let (x, y) = (idx % width, idx / width);
        white_site(config, &site(x as i64 - lt, y as i64 - lt), spec.k)
    });
    let white: Vec<bool> = white.into_iter().collect::<Result<_>>()?;
    let field = SiteField::new(width, width, white)?;
    let a = layout.log_width;
    let need = (2.0 * spec.c * a as f64).ceil() as usize;
    let strip = |m: i64, transpose: bool| -> StripCrossings {
        let base = if transpose { field.transposed() } else { field.clone() };
        let y0 = (2 * a + 1) * m - a + lt;
        let rows = (2 * a + 1) as usize;
        let occupied = base.occupied[y0 as usize * width..(y0 as usize + rows) * width].to_vec();
        let family = count_disjoint_crossings(&SiteField::new(width, rows, occupied).unwrap());
        let crossings = family
            .paths
            .iter()
            .take(need)
            .map(|p| {
                p.iter()
                    .map(|&(x, y)| {
                        let (u, v) = (x as i64 - lt, y as i64 + y0 - lt);
                        if transpose { (v, u) } else { (u, v) }
                    })
                    .collect()
            })
            .collect();
        StripCrossings {
            m,
            available: family.count,
            crossings,
        }
    };
    let ms: Vec<i64> = (-layout.ell..=layout.ell).collect();
    let horizontal = par::map_slice(&ms, |&m| strip(m, false));
    let vertical = par::map_slice(&ms, |&m| strip(m, true));
    let mut deficits = Vec::new();
    for (name, strips) in [("horizontal", &horizontal), ("vertical", &vertical)] {
        for s in strips {
            if s.available < need {
                deficits.push((name.to_string(), s.m, need - s.available));
            }
        }
    }
    let white_fraction = field.occupied.iter().filter(|&&w| w).count() as f64 / (width * width) as f64;
    Ok(KestenGrid {
        section,
        axes: (a0, a1),
        offset,
        k: spec.k,
        alpha: spec.alpha,
        c: spec.c,
        layout,
        crossings_per_strip: need,
        white_fraction,
        horizontal,
        vertical,
        complete: deficits.is_empty(),
        deficits,
    })
}
