//! Simple random walks: cover and hitting times by simulation, exact cover
//! times on tiny graphs, and the Matthews-type resistance bounds.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::electrical::{max_pairwise_resistance, min_over_set, resistance_between, MaxMode, EXACT_MODE_MAX_VERTICES};
use crate::error::{Error, Result};
use crate::linalg::dense;
use crate::network::Network;
use crate::{par, rng};

/// Largest graph accepted by [`exact_cover_time`].
pub const EXACT_COVER_MAX_VERTICES: usize = 14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkStats {
    pub start: usize,
    pub trials: usize,
    pub cover_time_mean: f64,
    pub cover_time_stderr: f64,
    pub hitting_means: Option<Vec<f64>>,
}

/// Sample mean and standard error `sd / sqrt(len)`.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

#[inline]
fn step(net: &Network, v: usize, rng: &mut ChaCha8Rng) -> usize {
    let nbrs = net.neighbors(v);
    nbrs[rng.random_range(0..nbrs.len())].0 as usize
}

/// Steps until every vertex has been visited.
pub fn cover_time_once(net: &Network, start: usize, rng: &mut ChaCha8Rng) -> u64 {
    let n = net.vertex_count();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut left = n - 1;
    let mut v = start;
    let mut t = 0u64;
    while left > 0 {
        v = step(net, v, rng);
        t += 1;
        if !seen[v] {
            seen[v] = true;
            left -= 1;
        }
    }
    t
}

/// Steps until `target` is first visited.
pub fn hitting_time_once(net: &Network, start: usize, target: usize, rng: &mut ChaCha8Rng) -> u64 {
    let mut v = start;
    let mut t = 0u64;
    while v != target {
        v = step(net, v, rng);
        t += 1;
    }
    t
}

fn check_vertex(net: &Network, v: usize) -> Result<()> {
    if v >= net.vertex_count() {
        return Err(Error::Domain(format!("vertex {v} is outside the network")));
    }
    Ok(())
}

/// Monte-Carlo cover time from `start`; trial `t` uses the stream
/// `(seed, t)`, so results do not depend on scheduling.
pub fn simulate_cover(net: &Network, start: usize, trials: usize, seed: u64) -> Result<WalkStats> {
    check_vertex(net, start)?;
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let times = par::map_range(trials, |t| {
        let mut rng = rng::trial_rng(seed, t as u64);
        cover_time_once(net, start, &mut rng) as f64
    });
    let (mean, stderr) = mean_stderr(&times);
    Ok(WalkStats {
        start,
        trials,
        cover_time_mean: mean,
        cover_time_stderr: stderr,
        hitting_means: None,
    })
}

/// Cover statistics plus mean hitting times of every vertex, measured on the
/// same walks.
pub fn simulate_cover_with_hitting(net: &Network, start: usize, trials: usize, seed: u64) -> Result<WalkStats> {
    check_vertex(net, start)?;
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let n = net.vertex_count();
    let runs = par::map_range(trials, |t| {
        let mut rng = rng::trial_rng(seed, t as u64);
        let mut first = vec![u64::MAX; n];
        first[start] = 0;
        let (mut v, mut time, mut left) = (start, 0u64, n - 1);
        while left > 0 {
            v = step(net, v, &mut rng);
            time += 1;
            if first[v] == u64::MAX {
                first[v] = time;
                left -= 1;
            }
        }
        (time as f64, first)
    });
    let times: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (mean, stderr) = mean_stderr(&times);
    let mut hitting = vec![0.0; n];
    for (_, first) in &runs {
        for (h, &f) in hitting.iter_mut().zip(first) {
            *h += f as f64;
        }
    }
    hitting.iter_mut().for_each(|h| *h /= trials as f64);
    Ok(WalkStats {
        start,
        trials,
        cover_time_mean: mean,
        cover_time_stderr: stderr,
        hitting_means: Some(hitting),
    })
}

/// Mean and standard error of the hitting time of `target` from `start`.
pub fn simulate_hitting(net: &Network, start: usize, target: usize, trials: usize, seed: u64) -> Result<(f64, f64)> {
    check_vertex(net, start)?;
    check_vertex(net, target)?;
    let times = par::map_range(trials, |t| {
        let mut rng = rng::trial_rng(seed, t as u64);
        hitting_time_once(net, start, target, &mut rng) as f64
    });
    Ok(mean_stderr(&times))
}

/// Exact expected cover time from `start`.
///
/// `T(S, v)`, the expected remaining time with visited set `S` and current
/// vertex `v`, solves one linear system per `S`; sets are processed by
/// decreasing size so every `T(S + w, w)` is already known.
pub fn exact_cover_time(net: &Network, start: usize) -> Result<f64> {
    check_vertex(net, start)?;
    let n = net.vertex_count();
    if n > EXACT_COVER_MAX_VERTICES {
        return Err(Error::Resource(format!(
            "exact cover time allows at most {EXACT_COVER_MAX_VERTICES} vertices, got {n}"
        )));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let full = (1usize << n) - 1;
    let mut table = vec![0.0f64; (full + 1) * n];
    let mut sets: Vec<usize> = (1..full).collect();
    sets.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    let mut a = Vec::new();
    let mut b = Vec::new();
    for s in sets {
        let members: Vec<usize> = (0..n).filter(|&v| s >> v & 1 == 1).collect();
        let k = members.len();
        let mut pos = [usize::MAX; EXACT_COVER_MAX_VERTICES];
        for (i, &v) in members.iter().enumerate() {
            pos[v] = i;
        }
        a.clear();
        a.resize(k * k, 0.0);
        b.clear();
        b.resize(k, 1.0);
        for (i, &v) in members.iter().enumerate() {
            a[i * k + i] = 1.0;
            let w = 1.0 / net.degree(v) as f64;
            for &(u, _) in net.neighbors(v) {
                let u = u as usize;
                if pos[u] != usize::MAX {
                    a[i * k + pos[u]] -= w;
                } else {
                    b[i] += w * table[(s | 1 << u) * n + u];
                }
            }
        }
        if !dense::solve_in_place(&mut a, &mut b, k) {
            return Err(Error::Solver("singular cover-time system".into()));
        }
        for (i, &v) in members.iter().enumerate() {
            table[s * n + v] = b[i];
        }
    }
    Ok(table[(1 << start) * n + start])
}

/// `max` over starts of [`exact_cover_time`], with the maximizing start.
pub fn exact_worst_cover_time(net: &Network) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, 0);
    for v in 0..net.vertex_count() {
        let t = exact_cover_time(net, v)?;
        if t > best.0 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Start vertex for cover-time estimates on large graphs: an end of the
/// largest-resistance candidate pair, `extra` joining the candidate set.
pub fn cover_start(net: &Network, extra: &[usize], seed: u64) -> Result<usize> {
    let mode = MaxMode::Candidate { extra: extra.to_vec(), seed };
    let best = max_pairwise_resistance(net, &mode)?;
    Ok(best.pair.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct CommuteCheck {
    /// Simulated `E_x tau_y + E_y tau_x`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `2 |E| R(x, y)`.
    pub rhs: f64,
}

impl CommuteCheck {
    pub fn z_score(&self) -> f64 {
        if self.lhs_stderr == 0.0 {
            if (self.lhs - self.rhs).abs() <= 1e-9 * self.rhs { 0.0 } else { f64::INFINITY }
        } else {
            (self.lhs - self.rhs).abs() / self.lhs_stderr
        }
    }
}

pub fn commute_time_check(net: &Network, x: usize, y: usize, trials: usize, seed: u64) -> Result<CommuteCheck> {
    check_vertex(net, x)?;
    check_vertex(net, y)?;
    if x == y {
        return Err(Error::Domain("commute check needs distinct vertices".into()));
    }
    let sums = par::map_range(trials, |t| {
        let mut rng = rng::trial_rng(seed, t as u64);
        (hitting_time_once(net, x, y, &mut rng) + hitting_time_once(net, y, x, &mut rng)) as f64
    });
    let (lhs, lhs_stderr) = mean_stderr(&sums);
    let rhs = 2.0 * net.edge_count() as f64 * resistance_between(net, x, y)?;
    Ok(CommuteCheck { lhs, lhs_stderr, rhs })
}

/// `|E| max R ln |V|`; the maximum is exact up to the exact-mode size cap
/// and over the candidate set beyond it.
pub fn matthews_upper(net: &Network) -> Result<f64> {
    let n = net.vertex_count();
    if n < 2 {
        return Ok(0.0);
    }
    let mode = if n <= EXACT_MODE_MAX_VERTICES {
        MaxMode::Exact
    } else {
        MaxMode::Candidate { extra: Vec::new(), seed: 0 }
    };
    let max_r = max_pairwise_resistance(net, &mode)?.value;
    Ok(net.edge_count() as f64 * max_r * (n as f64).ln())
}

/// `|E| min R ln |subset|` over distinct pairs of `subset`.
pub fn matthews_lower(net: &Network, subset: &[usize]) -> Result<f64> {
    let mut set = subset.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() < 2 {
        return Err(Error::Domain("subset needs at least two distinct vertices".into()));
    }
    for &v in &set {
        check_vertex(net, v)?;
    }
    let (min_r, _) = min_over_set(net, &set)?;
    Ok(net.edge_count() as f64 * min_r * (set.len() as f64).ln())
}
