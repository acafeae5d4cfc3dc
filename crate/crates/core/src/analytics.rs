//! Closed-form erasure analytics for line networks.
//!
//! Single-hop residual erasure uses the idealized full-rank model: a source
//! packet stays lost after one hop iff it is erased itself and the other
//! `n - 1` packets of the block deliver fewer than `k`. Multi-hop values
//! compose the per-hop terms as a product.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::CodeParams;
use crate::error::{invalid, Result};

/// Slack for floating comparisons in the region checks.
const REGION_EPS: f64 = 1e-12;

/// Per-link erasure probabilities of a line network, in hop order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    deltas: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl PathProfile {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(invalid("path needs at least one link"));
        }
        if let Some((i, d)) = deltas.iter().enumerate().find(|(_, d)| !(0.0..=1.0).contains(*d)) {
            return Err(invalid(format!("erasure rate of link {} is {d}, outside [0,1]", i + 1)));
        }
        Ok(Self { deltas, labels: None })
    }

    pub fn with_labels(deltas: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != deltas.len() {
            return Err(invalid("one label per link required"));
        }
        let mut p = Self::new(deltas)?;
        p.labels = Some(labels);
        Ok(p)
    }

    /// `hops` links with the same erasure rate.
    pub fn homogeneous(delta: f64, hops: usize) -> Result<Self> {
        Self::new(vec![delta; hops])
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn hops(&self) -> usize {
        self.deltas.len()
    }

    /// Erasure rate of link `i` (1-based).
    pub fn delta(&self, i: usize) -> f64 {
        self.deltas[i - 1]
    }

    fn check_hop(&self, h: usize) -> Result<()> {
        if h == 0 || h > self.hops() {
            return Err(invalid(format!("hop {h} outside [1, {}]", self.hops())));
        }
        Ok(())
    }
}

/// P[X < k] for X ~ Binomial(trials, p), summed exactly in log space.
pub fn binomial_cdf_below(trials: usize, p: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > trials {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let nf = trials as f64;
    let mut ln_choose = 0.0f64;
    let mut terms = Vec::with_capacity(k);
    for j in 0..k {
        if j > 0 {
            ln_choose += (nf - (j - 1) as f64).ln() - (j as f64).ln();
        }
        terms.push(ln_choose + j as f64 * lp + (nf - j as f64) * lq);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).exp().min(1.0)
}

/// Residual packet erasure rate after one coded hop:
/// `delta * P[Binomial(n-1, 1-delta) < k]`.
pub fn rper_single_hop(params: &CodeParams, delta: f64) -> f64 {
    rper(params.k(), params.n(), delta)
}

pub(crate) fn rper(k: usize, n: usize, delta: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    if delta >= 1.0 {
        return 1.0;
    }
    delta * binomial_cdf_below(n - 1, 1.0 - delta, k)
}

/// Reliability after decoding at hop `h` with re-encoding at every relay.
pub fn reliability_nc(params: &CodeParams, path: &PathProfile, h: usize) -> Result<f64> {
    path.check_hop(h)?;
    Ok(path.deltas[..h].iter().map(|&d| 1.0 - rper_single_hop(params, d)).product())
}

/// Reliability at hop `h` without coding.
pub fn reliability_uncoded(path: &PathProfile, h: usize) -> Result<f64> {
    path.check_hop(h)?;
    Ok(path.deltas[..h].iter().map(|&d| 1.0 - d).product())
}

/// Achievable rate `r * (1 - eta^m)` of the receiver `m` hops downstream.
pub fn achievable_rate(params: &CodeParams, path: &PathProfile, m: usize) -> Result<f64> {
    Ok(params.rate() * reliability_nc(params, path, m)?)
}

/// Per-hop breakdown of the coded reliability along a path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopReliability {
    pub per_hop_eta: Vec<f64>,
    pub cumulative_eta: Vec<f64>,
    pub cumulative_rho: Vec<f64>,
    pub rates: Vec<f64>,
}

pub fn hop_reliability(params: &CodeParams, path: &PathProfile) -> HopReliability {
    let per_hop_eta: Vec<f64> = path.deltas.iter().map(|&d| rper_single_hop(params, d)).collect();
    let mut rho = 1.0;
    let cumulative_rho: Vec<f64> = per_hop_eta
        .iter()
        .map(|e| {
            rho *= 1.0 - e;
            rho
        })
        .collect();
    HopReliability {
        cumulative_eta: cumulative_rho.iter().map(|r| 1.0 - r).collect(),
        rates: cumulative_rho.iter().map(|r| params.rate() * r).collect(),
        per_hop_eta,
        cumulative_rho,
    }
}

/// The three per-receiver rate-region inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Inequality {
    /// `R^m <= min over upstream links of (1 - delta_i)`.
    MinCut,
    /// `eta^m <= eta_0`.
    TargetRper,
    /// `R^m <= R^{m-1}`.
    RateMonotone,
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inequality::MinCut => "min-cut",
            Inequality::TargetRper => "target-rper",
            Inequality::RateMonotone => "rate-monotone",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCheck {
    pub satisfies: bool,
    pub violated: Vec<Inequality>,
    /// Analytic RPER at the receiver.
    pub eta: f64,
    /// Analytic rate of the upstream vertex (`r` at the source).
    pub upstream_rate: f64,
}

/// Analytic rate at vertex `v` (1 = source, which carries rate `r`).
pub fn vertex_rate(params: &CodeParams, path: &PathProfile, v: usize) -> Result<f64> {
    if v == 0 || v > path.hops() + 1 {
        return Err(invalid(format!("vertex {v} outside [1, {}]", path.hops() + 1)));
    }
    if v == 1 {
        return Ok(params.rate());
    }
    achievable_rate(params, path, v - 1)
}

/// Tests a candidate rate for the receiver at vertex `m` (the source is
/// vertex 1, so the receiver sits behind links `1..m-1`).
pub fn theorem1_region_check(
    params: &CodeParams,
    path: &PathProfile,
    m: usize,
    candidate_rate: f64,
    eta0: f64,
) -> Result<RegionCheck> {
    if m < 2 || m > path.hops() + 1 {
        return Err(invalid(format!(
            "receiver vertex m={m} outside [2, {}]",
            path.hops() + 1
        )));
    }
    let min_cut = path.deltas[..m - 1].iter().map(|d| 1.0 - d).fold(f64::INFINITY, f64::min);
    let eta = 1.0 - reliability_nc(params, path, m - 1)?;
    let upstream_rate = vertex_rate(params, path, m - 1)?;

    let mut violated = Vec::new();
    if candidate_rate > min_cut + REGION_EPS {
        violated.push(Inequality::MinCut);
    }
    if eta > eta0 + REGION_EPS {
        violated.push(Inequality::TargetRper);
    }
    if candidate_rate > upstream_rate + REGION_EPS {
        violated.push(Inequality::RateMonotone);
    }
    Ok(RegionCheck { satisfies: violated.is_empty(), violated, eta, upstream_rate })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Coding at the source and re-encoding at the relay.
    NcCase,
    /// Coding at the source only; the decoder sees the total erasure.
    EndToEnd,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::NcCase => "nc",
            Scheme::EndToEnd => "e2e",
        })
    }
}

impl Scheme {
    /// Two-hop residual erasure of this scheme for block length `n`.
    pub fn eta(self, k: usize, n: usize, d1: f64, d2: f64) -> f64 {
        match self {
            Scheme::NcCase => 1.0 - (1.0 - rper(k, n, d1)) * (1.0 - rper(k, n, d2)),
            Scheme::EndToEnd => rper(k, n, 1.0 - (1.0 - d1) * (1.0 - d2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k: usize,
    pub rate_min: f64,
    pub rate_max: f64,
    pub eta0: f64,
    pub delta_max: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { k: 50, rate_min: 0.5, rate_max: 1.0, eta0: 0.05, delta_max: 0.5, step: 0.01 }
    }
}

impl GridSpec {
    /// Block lengths whose rate k/n falls in the window, smallest first.
    pub fn block_lengths(&self) -> Result<Vec<usize>> {
        if self.k == 0 {
            return Err(invalid("k must be positive"));
        }
        if !(self.rate_min > 0.0 && self.rate_min <= self.rate_max && self.rate_max <= 1.0) {
            return Err(invalid(format!(
                "rate window [{}, {}] is not inside (0, 1]",
                self.rate_min, self.rate_max
            )));
        }
        let k = self.k as f64;
        let lo = (k / self.rate_max - 1e-9).ceil() as usize;
        let hi = (k / self.rate_min + 1e-9).floor() as usize;
        let ns: Vec<usize> = (lo.max(self.k)..=hi).collect();
        if ns.is_empty() {
            return Err(invalid("rate window contains no block length"));
        }
        Ok(ns)
    }

    pub fn axis(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(0.0..=1.0).contains(&self.delta_max) {
            return Err(invalid("grid step must be positive and delta_max in [0,1]"));
        }
        let count = (self.delta_max / self.step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| i as f64 * self.step).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub feasible: bool,
    pub best_n: Option<usize>,
    pub best_r: Option<f64>,
    pub achieved_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRegionGrid {
    pub scheme: Scheme,
    pub delta1_axis: Vec<f64>,
    pub delta2_axis: Vec<f64>,
    /// `cells[i][j]` is the cell at `(delta1_axis[i], delta2_axis[j])`.
    pub cells: Vec<Vec<GridCell>>,
}

/// Per `(delta1, delta2)`, the largest rate in the window whose two-hop RPER
/// meets `eta0`.
pub fn rate_region_grid(scheme: Scheme, spec: &GridSpec) -> Result<RateRegionGrid> {
    let ns = spec.block_lengths()?;
    let axis = spec.axis()?;
    let k = spec.k;
    let cells = axis
        .par_iter()
        .map(|&d1| {
            axis.iter()
                .map(|&d2| {
                    let hit = ns.iter().find_map(|&n| {
                        let eta = scheme.eta(k, n, d1, d2);
                        (eta <= spec.eta0).then_some((n, eta))
                    });
                    match hit {
                        Some((n, eta)) => {
                            let r = k as f64 / n as f64;
                            GridCell {
                                feasible: true,
                                best_n: Some(n),
                                best_r: Some(r),
                                achieved_rate: Some(r * (1.0 - eta)),
                            }
                        }
                        None => GridCell {
                            feasible: false,
                            best_n: None,
                            best_r: None,
                            achieved_rate: None,
                        },
                    }
                })
                .collect()
        })
        .collect();
    Ok(RateRegionGrid { scheme, delta1_axis: axis.clone(), delta2_axis: axis, cells })
}

impl RateRegionGrid {
    pub fn feasible_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.feasible).count()
    }

    pub fn is_transpose_symmetric(&self) -> bool {
        let n = self.cells.len();
        self.delta1_axis == self.delta2_axis
            && (0..n).all(|i| (0..n).all(|j| self.cells[i][j] == self.cells[j][i]))
    }

    /// Cells where the feasible set differs from the product of its
    /// projections onto the two axes.
    pub fn product_set_mismatches(&self) -> Vec<(usize, usize)> {
        let rows: Vec<bool> = self.cells.iter().map(|r| r.iter().any(|c| c.feasible)).collect();
        let cols: Vec<bool> = (0..self.delta2_axis.len())
            .map(|j| self.cells.iter().any(|r| r[j].feasible))
            .collect();
        let mut out = Vec::new();
        for (i, row) in self.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.feasible != (rows[i] && cols[j]) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "delta1,delta2,scheme,feasible,best_r,achieved_rate")?;
        for (i, row) in self.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    self.delta1_axis[i],
                    self.delta2_axis[j],
                    self.scheme,
                    c.feasible,
                    opt(c.best_r),
                    opt(c.achieved_rate)
                )?;
            }
        }
        Ok(())
    }
}
