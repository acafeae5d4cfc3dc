//! Packet-level Monte-Carlo simulation of a coded line network.
//!
//! Each trial encodes a random generation at the source, erases every packet
//! independently on every link, lets each relay decode and re-encode (or
//! just forward), and counts the source packets each downstream node holds.
//! Trial `t` draws from ChaCha8 stream `t` of the configured seed, so the
//! integer counts do not depend on how trials are scheduled.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{rper, reliability_nc, PathProfile};
use crate::codec::{CodeParams, Codec, Generation, Packet};
use crate::error::{invalid, Result};

pub const DEFAULT_Z: f64 = 3.0;

/// Tolerance used when an estimate has zero variance.
const ZERO_VARIANCE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayMode {
    #[default]
    DecodeReencode,
    /// Relays pass received packets through untouched (end-to-end coding).
    ForwardOnly,
}

impl fmt::Display for RelayMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelayMode::DecodeReencode => "decode-reencode",
            RelayMode::ForwardOnly => "forward-only",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub params: CodeParams,
    pub path: PathProfile,
    pub trials: usize,
    pub seed: u64,
    pub relay_mode: RelayMode,
}

impl SimConfig {
    pub fn new(params: CodeParams, path: PathProfile, trials: usize, seed: u64) -> Self {
        Self { params, path, trials, seed, relay_mode: RelayMode::DecodeReencode }
    }

    pub fn with_mode(mut self, relay_mode: RelayMode) -> Self {
        self.relay_mode = relay_mode;
        self
    }

    /// Closed-form counterpart of each per-hop estimate.
    pub fn analytic_rho(&self) -> Result<Vec<f64>> {
        let (k, n) = (self.params.k(), self.params.n());
        (1..=self.path.hops())
            .map(|h| match self.relay_mode {
                RelayMode::DecodeReencode => reliability_nc(&self.params, &self.path, h),
                RelayMode::ForwardOnly => {
                    let pass: f64 = self.path.deltas()[..h].iter().map(|d| 1.0 - d).product();
                    Ok(1.0 - rper(k, n, 1.0 - pass))
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub k: usize,
    pub rate: f64,
    pub trials: usize,
    /// Source packets held after hop `h`, summed over trials (index `h - 1`).
    pub delivered: Vec<u64>,
    /// Recovered payloads that differed from the source.
    pub corrupted: u64,
    pub rho_hat: Vec<f64>,
    pub eta_hat: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SimEstimate {
    fn from_counts(k: usize, rate: f64, trials: usize, delivered: Vec<u64>, corrupted: u64) -> Self {
        let total = (k * trials) as f64;
        let rho_hat: Vec<f64> = delivered.iter().map(|&d| d as f64 / total).collect();
        let eta_hat = rho_hat.iter().map(|p| 1.0 - p).collect();
        let stderr = rho_hat.iter().map(|p| (p * (1.0 - p) / trials as f64).sqrt()).collect();
        Self { k, rate, trials, delivered, corrupted, rho_hat, eta_hat, stderr }
    }

    pub fn hops(&self) -> usize {
        self.rho_hat.len()
    }

    /// Achievable-rate estimate at the receiver after hop `m`.
    pub fn rate_hat(&self, m: usize) -> f64 {
        self.rate * self.rho_hat[m - 1]
    }
}

fn erase(rng: &mut ChaCha8Rng, packets: Vec<Packet>, delta: f64) -> Vec<Packet> {
    packets.into_iter().filter(|_| rng.random::<f64>() >= delta).collect()
}

struct Tally {
    delivered: Vec<u64>,
    corrupted: u64,
}

fn run_trial(codec: &Codec, cfg: &SimConfig, trial: u64) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let coeff_seed = rng.random();
    let gen = Generation::random(codec.params(), &mut rng, coeff_seed);
    let source = gen.payloads();
    let mut in_flight = codec.encode(&gen)?;
    let hops = cfg.path.hops();
    let mut tally = Tally { delivered: vec![0; hops], corrupted: 0 };
    for (i, &delta) in cfg.path.deltas().iter().enumerate() {
        let received = erase(&mut rng, in_flight, delta);
        let decoded = codec.decode(&received)?;
        for (got, want) in decoded.payloads.iter().zip(&source) {
            if let Some(p) = got {
                tally.delivered[i] += 1;
                if p != want {
                    tally.corrupted += 1;
                }
            }
        }
        if i + 1 == hops {
            break;
        }
        in_flight = match cfg.relay_mode {
            RelayMode::DecodeReencode => codec.reencode(&decoded, rng.random())?,
            RelayMode::ForwardOnly => received,
        };
    }
    Ok(tally)
}

/// Runs `config.trials` independent trials.
///
/// Payload contents never influence which indices a node recovers, so trials
/// use one-byte packets regardless of `params.packet_bytes()`.
pub fn simulate(config: &SimConfig) -> Result<SimEstimate> {
    if config.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let p = config.params;
    let codec = Codec::new(CodeParams::new(p.k(), p.n(), p.q(), 1)?)?;
    let hops = config.path.hops();
    let tally = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(&codec, config, t))
        .try_reduce(
            || Tally { delivered: vec![0; hops], corrupted: 0 },
            |mut a, b| {
                for (x, y) in a.delivered.iter_mut().zip(&b.delivered) {
                    *x += y;
                }
                a.corrupted += b.corrupted;
                Ok(a)
            },
        )?;
    Ok(SimEstimate::from_counts(p.k(), p.rate(), config.trials, tally.delivered, tally.corrupted))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: String,
    pub hop: usize,
    pub analytic: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Comparison {
    /// Deviation in standard errors (infinite when variance is zero and
    /// the values differ).
    pub fn z_score(&self) -> f64 {
        let d = (self.analytic - self.estimate).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d <= ZERO_VARIANCE_TOL {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub z: f64,
    pub rows: Vec<Comparison>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Comparison> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Flags every hop where the analytic reliability (and its complement, the
/// residual erasure rate) lies more than `z` standard errors from the
/// estimate. The standard error is the larger of the estimate's and the one
/// implied by the analytic value.
pub fn compare(analytic_rho: &[f64], estimate: &SimEstimate, z: f64) -> Result<ComparisonReport> {
    if analytic_rho.len() != estimate.hops() {
        return Err(invalid(format!(
            "{} analytic values for {} simulated hops",
            analytic_rho.len(),
            estimate.hops()
        )));
    }
    let mut rows = Vec::with_capacity(2 * analytic_rho.len());
    for (i, &a) in analytic_rho.iter().enumerate() {
        // The plug-in error vanishes when no trial lost (or kept) anything,
        // so the error under the analytic value is used when larger.
        let null = (a.clamp(0.0, 1.0) * (1.0 - a.clamp(0.0, 1.0)) / estimate.trials as f64).sqrt();
        let se = estimate.stderr[i].max(null);
        let tolerance = (z * se).max(ZERO_VARIANCE_TOL);
        for (quantity, analytic, est) in [
            ("rho", a, estimate.rho_hat[i]),
            ("eta", 1.0 - a, estimate.eta_hat[i]),
        ] {
            rows.push(Comparison {
                quantity: quantity.into(),
                hop: i + 1,
                analytic,
                estimate: est,
                stderr: se,
                tolerance,
                pass: (analytic - est).abs() <= tolerance,
            });
        }
    }
    Ok(ComparisonReport { z, rows })
}

/// Simulates and compares against the closed form for the same relay mode.
pub fn validate(config: &SimConfig, z: f64) -> Result<(SimEstimate, ComparisonReport)> {
    let est = simulate(config)?;
    let report = compare(&config.analytic_rho()?, &est, z)?;
    Ok((est, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, n: usize, deltas: Vec<f64>, trials: usize) -> SimConfig {
        SimConfig::new(CodeParams::new(k, n, 8, 100).unwrap(), PathProfile::new(deltas).unwrap(), trials, 11)
    }

    #[test]
    fn lossless_path_is_exact() {
        let est = simulate(&cfg(10, 12, vec![0.0, 0.0], 200)).unwrap();
        assert_eq!(est.rho_hat, vec![1.0, 1.0]);
        assert_eq!(est.stderr, vec![0.0, 0.0]);
        assert!(compare(&[1.0, 1.0], &est, DEFAULT_Z).unwrap().passed());
    }

    #[test]
    fn two_packet_code() {
        let (est, report) = validate(&cfg(1, 2, vec![0.5], 20_000), DEFAULT_Z).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!((est.eta_hat[0] - 0.25).abs() < 0.02);
        assert_eq!(est.corrupted, 0);
    }

    #[test]
    fn perturbed_analytic_fails() {
        let c = cfg(10, 12, vec![0.1], 5_000);
        let est = simulate(&c).unwrap();
        let a: Vec<f64> = c.analytic_rho().unwrap().iter().map(|r| r - 0.05).collect();
        assert!(!compare(&a, &est, DEFAULT_Z).unwrap().passed());
        assert!(compare(&[0.5, 0.5], &est, DEFAULT_Z).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg(10, 12, vec![0.2, 0.1], 500);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = SimConfig { seed: 12, ..c.clone() };
        assert_ne!(simulate(&c).unwrap().delivered, simulate(&other).unwrap().delivered);
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let c = cfg(10, 13, vec![0.2, 0.3], 400);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate(&c).unwrap());
        let b = four.install(|| simulate(&c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn forward_only_collapses_to_single_hop() {
        let (d1, d2) = (0.1, 0.15);
        let multi = cfg(10, 13, vec![d1, d2], 20_000).with_mode(RelayMode::ForwardOnly);
        let single = cfg(10, 13, vec![1.0 - (1.0 - d1) * (1.0 - d2)], 20_000);
        let a = simulate(&multi).unwrap();
        let b = simulate(&SimConfig { seed: 99, ..single }).unwrap();
        let se = (a.stderr[1].powi(2) + b.stderr[0].powi(2)).sqrt();
        assert!((a.rho_hat[1] - b.rho_hat[0]).abs() <= 3.0 * se);
        assert!(validate(&multi, DEFAULT_Z).unwrap().1.passed());
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let a = simulate(&cfg(10, 12, vec![0.2], 1_000)).unwrap();
        let b = simulate(&cfg(10, 12, vec![0.2], 100_000)).unwrap();
        let ratio = a.stderr[0] / b.stderr[0];
        assert!((ratio - 10.0).abs() < 1.5, "{ratio}");
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(simulate(&cfg(1, 2, vec![0.1], 0)).is_err());
    }
}
