//! Gaussian free field pinned at one vertex, its expected maximum, and the
//! cover-time ratio `t_cov / (|E| M^2)`.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::electrical::PairResistances;
use crate::error::{Error, Result};
use crate::linalg::GreenFunction;
use crate::network::Network;
use crate::walks::{self, mean_stderr, EXACT_COVER_MAX_VERTICES};
use crate::{par, rng};

/// Smallest trial count accepted by [`estimate_max`].
pub const MIN_MAX_TRIALS: usize = 100;

#[derive(Clone, Debug)]
pub struct GFFModel {
    green: GreenFunction,
    edges: usize,
}

pub fn build_gff(net: &Network, pin: usize) -> Result<GFFModel> {
    Ok(GFFModel {
        green: GreenFunction::new(net, pin)?,
        edges: net.edge_count(),
    })
}

impl GFFModel {
    pub fn pin(&self) -> usize {
        self.green.pin()
    }

    pub fn vertex_count(&self) -> usize {
        self.green.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn green(&self) -> &GreenFunction {
        &self.green
    }

    /// `Var(eta_v)` for every vertex, from the factor.
    pub fn variances(&self) -> Vec<f64> {
        self.green.selected().diagonal()
    }

    /// `E(eta_x eta_y)`.
    pub fn covariance(&self, x: usize, y: usize) -> f64 {
        self.green.column(x)[y]
    }

    /// Field from explicit standard normals (one per unpinned vertex).
    pub fn field_from_normals(&self, z: &[f64]) -> Vec<f64> {
        self.green.correlate(z)
    }
}

/// One exact sample; `eta[pin] = 0`.
pub fn sample_gff(model: &GFFModel, seed: u64) -> Vec<f64> {
    sample_trial(model, seed, 0)
}

fn sample_trial(model: &GFFModel, seed: u64, trial: u64) -> Vec<f64> {
    let mut rng = rng::trial_rng(seed, trial);
    let z: Vec<f64> = (1..model.vertex_count())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    model.field_from_normals(&z)
}

/// `count` samples, sample `t` drawn from stream `(seed, t)`.
pub fn sample_many(model: &GFFModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    par::map_range(count, |t| sample_trial(model, seed, t as u64))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaxEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Monte-Carlo `E max_x eta_x`, the pinned value included.
pub fn estimate_max(model: &GFFModel, trials: usize, seed: u64) -> Result<MaxEstimate> {
    if trials < MIN_MAX_TRIALS {
        return Err(Error::Domain(format!(
            "estimate_max needs at least {MIN_MAX_TRIALS} trials, got {trials}"
        )));
    }
    let maxima = par::map_range(trials, |t| {
        sample_trial(model, seed, t as u64)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let (mean, stderr) = mean_stderr(&maxima);
    Ok(MaxEstimate { mean, stderr, trials })
}

/// Largest deviation of `E(eta_x eta_y)` from
/// `(R(x, x0) + R(y, x0) - R(x, y)) / 2` over the given pairs, with
/// resistances from an independently grounded factorization.
pub fn covariance_identity_error(net: &Network, model: &GFFModel, pairs: &[(usize, usize)]) -> Result<f64> {
    let pr = PairResistances::new(net)?;
    let x0 = model.pin();
    let errs = par::map_slice(pairs, |&(x, y)| {
        let target = 0.5 * (pr.resistance(x, x0) + pr.resistance(y, x0) - pr.resistance(x, y));
        (model.covariance(x, y) - target).abs()
    });
    Ok(errs.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DlpReport {
    pub cover_time: f64,
    pub cover_stderr: f64,
    pub edges: usize,
    pub max_mean: f64,
    pub max_stderr: f64,
    pub ratio: f64,
}

pub fn dlp_ratio(cover_time: f64, edges: usize, max_mean: f64) -> f64 {
    cover_time / (edges as f64 * max_mean * max_mean)
}

/// `t_cov / (|E| M^2)`. Cover time is exact (worst start) on graphs within
/// the exact-cover limit; otherwise simulated from one end of the largest
/// candidate resistance pair.
pub fn dlp_consistency(net: &Network, trials: usize, seed: u64) -> Result<DlpReport> {
    let (cover_time, cover_stderr) = if net.vertex_count() <= EXACT_COVER_MAX_VERTICES {
        (walks::exact_worst_cover_time(net)?.0, 0.0)
    } else {
        let start = walks::cover_start(net, &[], seed)?;
        let stats = walks::simulate_cover(net, start, trials, rng::derive_seed(seed, &[1]))?;
        (stats.cover_time_mean, stats.cover_time_stderr)
    };
    let pin = crate::electrical::central_vertex(net);
    let model = build_gff(net, pin)?;
    let m = estimate_max(&model, trials.max(MIN_MAX_TRIALS), rng::derive_seed(seed, &[2]))?;
    Ok(DlpReport {
        cover_time,
        cover_stderr,
        edges: net.edge_count(),
        max_mean: m.mean,
        max_stderr: m.stderr,
        ratio: dlp_ratio(cover_time, net.edge_count(), m.mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge_variance_and_pin() {
        let net = Network::path(1);
        let m = build_gff(&net, 0).unwrap();
        assert!((m.variances()[1] - 1.0).abs() < 1e-12);
        let eta = sample_gff(&m, 4);
        assert_eq!(eta[0], 0.0);
        assert_eq!(eta, sample_gff(&m, 4));
    }

    #[test]
    fn path_covariances() {
        let m = build_gff(&Network::path(2), 0).unwrap();
        assert!((m.variances()[2] - 2.0).abs() < 1e-12);
        assert!((m.covariance(1, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn max_trial_floor() {
        let m = build_gff(&Network::path(1), 0).unwrap();
        assert!(estimate_max(&m, 99, 0).is_err());
        let est = estimate_max(&m, 20000, 1).unwrap();
        let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((est.mean - exact).abs() < 3.0 * est.stderr);
    }

    #[test]
    fn identity_on_grid() {
        let net = Network::grid(6, 5);
        let m = build_gff(&net, 7).unwrap();
        let pairs: Vec<(usize, usize)> = (0..30).map(|k| (k, (7 * k + 3) % 30)).collect();
        assert!(covariance_identity_error(&net, &m, &pairs).unwrap() < 1e-9);
    }

    #[test]
    fn single_edge_dlp() {
        let r = dlp_consistency(&Network::path(1), 40000, 3).unwrap();
        assert_eq!(r.cover_time, 1.0);
        assert!((r.ratio - 2.0 * std::f64::consts::PI).abs() < 0.3);
    }
}
