//! Logic-gate cost of encoding, decoding and relaying.
//!
//! A GF(2^q) multiplication costs `2q^2 + 2q` gates and an addition `q`.
//! Decoding is costed as worst-case systematic Gaussian elimination over the
//! `w = n - k` unknowns a systematic decoder may have to solve for:
//! `(w^3 - w)/3 + w^2 s` multiplications and as many additions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::CodeParams;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Source,
    Relay,
    Dest,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Source => "source",
            Role::Relay => "relay",
            Role::Dest => "dest",
        })
    }
}

/// Gates per field multiplication and per addition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCosts {
    pub mul: u64,
    pub add: u64,
}

impl GateCosts {
    pub fn for_field(q: u8) -> Self {
        let q = q as u64;
        Self { mul: 2 * q * q + 2 * q, add: q }
    }

    pub fn scaled(self, factor: u64) -> Self {
        Self { mul: self.mul * factor, add: self.add * factor }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub role: Role,
    pub n_mul: u64,
    pub n_add: u64,
    pub gates: u64,
}

impl ComplexityReport {
    fn new(role: Role, n_mul: u64, n_add: u64, costs: GateCosts) -> Self {
        let gates = n_mul
            .saturating_mul(costs.mul)
            .saturating_add(n_add.saturating_mul(costs.add));
        Self { role, n_mul, n_add, gates }
    }
}

/// Gate-count ceilings per node role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityBudget {
    pub beta0_source: u64,
    pub beta0_relay: u64,
    pub beta0_dest: u64,
}

impl ComplexityBudget {
    pub fn new(beta0_source: u64, beta0_relay: u64, beta0_dest: u64) -> Result<Self> {
        if beta0_source == 0 || beta0_relay == 0 || beta0_dest == 0 {
            return Err(invalid("complexity ceilings must be positive"));
        }
        Ok(Self { beta0_source, beta0_relay, beta0_dest })
    }

    /// Same ceiling for every role.
    pub fn uniform(beta0: u64) -> Result<Self> {
        Self::new(beta0, beta0, beta0)
    }

    pub fn scaled(self, factor: u64) -> Self {
        Self {
            beta0_source: self.beta0_source * factor,
            beta0_relay: self.beta0_relay * factor,
            beta0_dest: self.beta0_dest * factor,
        }
    }

    pub fn ceiling(&self, role: Role) -> u64 {
        match role {
            Role::Source => self.beta0_source,
            Role::Relay => self.beta0_relay,
            Role::Dest => self.beta0_dest,
        }
    }
}

fn narrow(x: u128) -> u64 {
    x.min(u64::MAX as u128) as u64
}

fn counts_enc(k: u64, n: u64, s: u64) -> (u64, u64) {
    let (k, w, s) = (k as u128, (n - k) as u128, s as u128);
    (narrow(w * k * s), narrow(w * (k - 1) * s))
}

fn counts_dec(k: u64, n: u64, s: u64) -> (u64, u64) {
    let (w, s) = ((n - k) as u128, s as u128);
    let m = narrow((w * w * w - w) / 3 + w * w * s);
    (m, m)
}

pub fn encoding_complexity_with(params: &CodeParams, costs: GateCosts) -> ComplexityReport {
    let (m, a) = counts_enc(params.k() as u64, params.n() as u64, params.symbols() as u64);
    ComplexityReport::new(Role::Source, m, a, costs)
}

pub fn decoding_complexity_with(params: &CodeParams, costs: GateCosts) -> ComplexityReport {
    let (m, a) = counts_dec(params.k() as u64, params.n() as u64, params.symbols() as u64);
    ComplexityReport::new(Role::Dest, m, a, costs)
}

pub fn relay_complexity_with(params: &CodeParams, costs: GateCosts) -> ComplexityReport {
    let e = encoding_complexity_with(params, costs);
    let d = decoding_complexity_with(params, costs);
    ComplexityReport {
        role: Role::Relay,
        n_mul: e.n_mul.saturating_add(d.n_mul),
        n_add: e.n_add.saturating_add(d.n_add),
        gates: e.gates.saturating_add(d.gates),
    }
}

/// Source encoding cost.
pub fn encoding_complexity(params: &CodeParams) -> ComplexityReport {
    encoding_complexity_with(params, GateCosts::for_field(params.q()))
}

/// Destination decoding cost.
pub fn decoding_complexity(params: &CodeParams) -> ComplexityReport {
    decoding_complexity_with(params, GateCosts::for_field(params.q()))
}

/// Relay cost: decode then re-encode.
pub fn relay_complexity(params: &CodeParams) -> ComplexityReport {
    relay_complexity_with(params, GateCosts::for_field(params.q()))
}

pub fn role_complexity(params: &CodeParams, role: Role, costs: GateCosts) -> ComplexityReport {
    match role {
        Role::Source => encoding_complexity_with(params, costs),
        Role::Relay => relay_complexity_with(params, costs),
        Role::Dest => decoding_complexity_with(params, costs),
    }
}

/// Largest block length each role can afford.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLengthBounds {
    pub k: usize,
    pub source: usize,
    pub relay: usize,
    pub dest: usize,
}

impl BlockLengthBounds {
    /// Common n for the whole path (one rate for all nodes). The relay bound
    /// only applies when the path has a relay.
    pub fn overall(&self, relays_present: bool) -> usize {
        let n = self.source.min(self.dest);
        if relays_present {
            n.min(self.relay)
        } else {
            n
        }
    }

    pub fn for_hops(&self, hops: usize) -> usize {
        self.overall(hops >= 2)
    }
}

/// Cap on the block-length search; costs exceed any u64 ceiling far earlier.
const N_SEARCH_CAP: usize = 1 << 24;

fn largest_affordable(template: &CodeParams, role: Role, costs: GateCosts, ceiling: u64) -> Result<usize> {
    let k = template.k();
    let fits = |n: usize| -> Result<bool> {
        Ok(role_complexity(&template.with_n(n)?, role, costs).gates <= ceiling)
    };
    // n = k is free; grow until the cost crosses the ceiling, then bisect.
    let mut lo = k;
    let mut step = 1;
    let mut hi = loop {
        let probe = (k + step).min(N_SEARCH_CAP);
        if !fits(probe)? {
            break probe;
        }
        lo = probe;
        if probe == N_SEARCH_CAP {
            return Ok(probe);
        }
        step *= 2;
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Largest n per role under the ceilings, for the `k`, `q`, `L` of
/// `template` (its own `n` is ignored).
pub fn max_n_under_budget_with(
    template: &CodeParams,
    budget: &ComplexityBudget,
    costs: GateCosts,
) -> Result<BlockLengthBounds> {
    Ok(BlockLengthBounds {
        k: template.k(),
        source: largest_affordable(template, Role::Source, costs, budget.beta0_source)?,
        relay: largest_affordable(template, Role::Relay, costs, budget.beta0_relay)?,
        dest: largest_affordable(template, Role::Dest, costs, budget.beta0_dest)?,
    })
}

pub fn max_n_under_budget(template: &CodeParams, budget: &ComplexityBudget) -> Result<BlockLengthBounds> {
    max_n_under_budget_with(template, budget, GateCosts::for_field(template.q()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: usize, n: usize, bytes: usize) -> CodeParams {
        CodeParams::new(k, n, 8, bytes).unwrap()
    }

    #[test]
    fn encoding_examples() {
        let r = encoding_complexity(&p(50, 60, 100));
        assert_eq!((r.n_mul, r.n_add, r.gates), (50_000, 49_000, 7_592_000));
        assert_eq!(encoding_complexity(&p(50, 50, 100)).gates, 0);
        let r = encoding_complexity(&p(1, 2, 1));
        assert_eq!((r.n_mul, r.n_add, r.gates), (1, 0, 144));
    }

    #[test]
    fn decoding_examples() {
        let r = decoding_complexity(&p(50, 60, 100));
        assert_eq!(r.n_mul, 10_330);
        assert_eq!(r.n_add, 10_330);
        assert_eq!(r.gates, 1_570_160);
        assert_eq!(decoding_complexity(&p(50, 50, 100)).gates, 0);
        assert_eq!(decoding_complexity(&p(3, 4, 1)).n_mul, 1);
    }

    #[test]
    fn relay_examples() {
        assert_eq!(relay_complexity(&p(50, 60, 100)).gates, 9_162_160);
        assert_eq!(relay_complexity(&p(50, 50, 100)).gates, 0);
        for n in 50..80 {
            let pp = p(50, n, 100);
            let r = relay_complexity(&pp).gates;
            assert!(r >= encoding_complexity(&pp).gates.max(decoding_complexity(&pp).gates));
        }
    }

    #[test]
    fn gate_identity_and_monotonicity() {
        for q in [1u8, 4, 8] {
            let c = GateCosts::for_field(q);
            let mut prev = (0, 0);
            for n in 20..60 {
                let pp = CodeParams::new(20, n, q, 10).unwrap();
                for r in [encoding_complexity(&pp), decoding_complexity(&pp), relay_complexity(&pp)] {
                    assert_eq!(r.gates, r.n_mul * c.mul + r.n_add * c.add);
                }
                let e = encoding_complexity(&pp).gates;
                let d = decoding_complexity(&pp).gates;
                if n > 20 {
                    assert!(e > prev.0 && d > prev.1);
                }
                prev = (e, d);
            }
        }
    }

    #[test]
    fn doubling_s_doubles_encoding_counts() {
        let a = encoding_complexity(&p(10, 15, 20));
        let b = encoding_complexity(&p(10, 15, 40));
        assert_eq!((2 * a.n_mul, 2 * a.n_add), (b.n_mul, b.n_add));
    }

    #[test]
    fn budget_bounds() {
        let t = p(50, 50, 100);
        let tiny = max_n_under_budget(&t, &ComplexityBudget::uniform(1).unwrap()).unwrap();
        assert_eq!(tiny.overall(true), 50);

        let low = max_n_under_budget(&t, &ComplexityBudget::uniform(8_000_000).unwrap()).unwrap();
        assert_eq!(low.source, 60);
        assert_eq!(encoding_complexity(&p(50, 61, 100)).gates, 8_351_200);
        // Brute-force the relay and destination bounds.
        let brute = |role: Role, ceil: u64| {
            (50..200)
                .filter(|&n| role_complexity(&p(50, n, 100), role, GateCosts::for_field(8)).gates <= ceil)
                .max()
                .unwrap()
        };
        assert_eq!(low.relay, brute(Role::Relay, 8_000_000));
        assert_eq!(low.dest, brute(Role::Dest, 8_000_000));
        assert_eq!(low.relay, 58);
        assert_eq!(low.overall(true), 58);
        assert_eq!(low.overall(false), 60);

        let high = max_n_under_budget(&t, &ComplexityBudget::uniform(10_000_000).unwrap()).unwrap();
        assert!(high.overall(true) >= low.overall(true));
        assert_eq!(high.source, 63);
        assert_eq!(high.relay, 60);
    }

    #[test]
    fn zero_budget_rejected() {
        assert!(ComplexityBudget::new(0, 1, 1).is_err());
    }
}
