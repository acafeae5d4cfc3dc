//! Utility-driven choice of the block length.
//!
//! The utility of a coding configuration is its reliability surplus over the
//! target divided by the source encoding cost. `k` is fixed, so the decision
//! variable is the integer block length `n`; `n = k` costs nothing and has no
//! defined utility, so it is never part of the argmax domain.

use std::io::Write;

use log::info;
use serde::{Deserialize, Serialize};

use crate::analytics::{reliability_nc, rper_single_hop, PathProfile};
use crate::codec::CodeParams;
use crate::complexity::{
    encoding_complexity_with, max_n_under_budget_with, role_complexity, BlockLengthBounds,
    ComplexityBudget, GateCosts, Role,
};
use crate::error::{invalid, Result};

/// Largest hop count probed by the connectivity search.
pub const HOP_SEARCH_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub source: bool,
    pub relay: bool,
    pub dest: bool,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.source && self.relay && self.dest
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityPoint {
    pub n: usize,
    pub r: f64,
    /// `None` when the cost is zero (n = k).
    pub utility: Option<f64>,
    pub goodness: f64,
    pub cost: u64,
    pub reliability: f64,
    pub meets_target: bool,
    pub feasible: Option<Feasibility>,
}

fn check_rho0(rho0: f64) -> Result<()> {
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(invalid(format!("target reliability {rho0} outside (0,1)")));
    }
    Ok(())
}

/// Utility at the sink of `path`, with default gate costs and no budget.
pub fn utility(params: &CodeParams, path: &PathProfile, rho0: f64) -> Result<UtilityPoint> {
    check_rho0(rho0)?;
    evaluate(params, path, rho0, None, GateCosts::for_field(params.q()))
}

/// Utility plus per-role budget flags.
pub fn evaluate(
    params: &CodeParams,
    path: &PathProfile,
    rho0: f64,
    budget: Option<&ComplexityBudget>,
    costs: GateCosts,
) -> Result<UtilityPoint> {
    let reliability = reliability_nc(params, path, path.hops())?;
    let goodness = reliability - rho0;
    let cost = encoding_complexity_with(params, costs).gates;
    let feasible = budget.map(|b| {
        let ok = |role| role_complexity(params, role, costs).gates <= b.ceiling(role);
        Feasibility {
            source: ok(Role::Source),
            relay: path.hops() < 2 || ok(Role::Relay),
            dest: ok(Role::Dest),
        }
    });
    Ok(UtilityPoint {
        n: params.n(),
        r: params.rate(),
        utility: (cost > 0).then(|| goodness / cost as f64),
        goodness,
        cost,
        reliability,
        meets_target: reliability >= rho0,
        feasible,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Maximize utility; fall back to maximum reliability when the target
    /// cannot be met.
    #[default]
    UtilityArgmax,
    /// Spend the whole budget on redundancy.
    MaxRedundancy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Search {
    /// Bisection on the sign of the utility increment, after a coarse
    /// unimodality scan.
    #[default]
    QuasiConcave,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub objective: Objective,
    pub search: Search,
    pub costs: Option<GateCosts>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { objective: Objective::UtilityArgmax, search: Search::QuasiConcave, costs: None }
    }
}

impl OptimizerConfig {
    fn costs(&self, q: u8) -> GateCosts {
        self.costs.unwrap_or_else(|| GateCosts::for_field(q))
    }
}

/// What the search did to produce an [`Optimum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchOutcome {
    /// Only n = k fits the budget.
    NoCoding,
    /// Target unreachable within budget; most reliable n returned.
    BestEffort,
    MaxRedundancy,
    Bisection,
    /// Exhaustive scan, requested or forced by a unimodality violation.
    Exhaustive { fallback: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub point: UtilityPoint,
    pub n_max: usize,
    pub outcome: SearchOutcome,
}

impl Optimum {
    pub fn best_effort(&self) -> bool {
        !self.point.meets_target
    }
}

struct Problem<'a> {
    template: CodeParams,
    path: &'a PathProfile,
    rho0: f64,
    budget: &'a ComplexityBudget,
    costs: GateCosts,
    bounds: BlockLengthBounds,
}

impl<'a> Problem<'a> {
    fn new(
        template: &CodeParams,
        path: &'a PathProfile,
        rho0: f64,
        budget: &'a ComplexityBudget,
        costs: GateCosts,
    ) -> Result<Self> {
        check_rho0(rho0)?;
        let bounds = max_n_under_budget_with(template, budget, costs)?;
        Ok(Self { template: *template, path, rho0, budget, costs, bounds })
    }

    fn n_max(&self) -> usize {
        self.bounds.for_hops(self.path.hops())
    }

    fn point(&self, n: usize) -> Result<UtilityPoint> {
        evaluate(&self.template.with_n(n)?, self.path, self.rho0, Some(self.budget), self.costs)
    }

    fn utility(&self, n: usize) -> Result<f64> {
        Ok(self.point(n)?.utility.expect("n > k has positive cost"))
    }

    fn points(&self) -> Result<Vec<UtilityPoint>> {
        (self.template.k() + 1..=self.n_max()).map(|n| self.point(n)).collect()
    }

    fn exhaustive_argmax(&self) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for n in self.template.k() + 1..=self.n_max() {
            let u = self.utility(n)?;
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((n, u));
            }
        }
        Ok(best.expect("nonempty domain").0)
    }

    /// Samples the utility at a coarse stride and checks the samples rise
    /// then fall.
    fn looks_unimodal(&self) -> Result<bool> {
        let (lo, hi) = (self.template.k() + 1, self.n_max());
        let stride = ((hi - lo) / 16).max(1);
        let mut samples = Vec::new();
        let mut n = lo;
        while n <= hi {
            samples.push(self.utility(n)?);
            n += stride;
        }
        if (hi - lo) % stride != 0 {
            samples.push(self.utility(hi)?);
        }
        let mut falling = false;
        for w in samples.windows(2) {
            if w[1] < w[0] {
                falling = true;
            } else if falling && w[1] > w[0] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// First n where the utility stops increasing.
    fn bisection_argmax(&self) -> Result<usize> {
        let (mut lo, mut hi) = (self.template.k() + 1, self.n_max());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.utility(mid + 1)? <= self.utility(mid)? {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }
}

/// Block length maximizing the utility under the three budget constraints.
pub fn optimize_rate(
    template: &CodeParams,
    path: &PathProfile,
    rho0: f64,
    budget: &ComplexityBudget,
    config: &OptimizerConfig,
) -> Result<Optimum> {
    let problem = Problem::new(template, path, rho0, budget, config.costs(template.q()))?;
    let k = template.k();
    let n_max = problem.n_max();
    let done = |n, outcome| -> Result<Optimum> {
        Ok(Optimum { point: problem.point(n)?, n_max, outcome })
    };

    if n_max == k {
        return done(k, SearchOutcome::NoCoding);
    }
    if config.objective == Objective::MaxRedundancy {
        return done(n_max, SearchOutcome::MaxRedundancy);
    }
    // Reliability grows with n, so the target is reachable iff it holds at n_max.
    if !problem.point(n_max)?.meets_target {
        return done(n_max, SearchOutcome::BestEffort);
    }
    match config.search {
        Search::Exhaustive => done(problem.exhaustive_argmax()?, SearchOutcome::Exhaustive { fallback: false }),
        Search::QuasiConcave => {
            if problem.looks_unimodal()? {
                done(problem.bisection_argmax()?, SearchOutcome::Bisection)
            } else {
                info!(
                    "utility not unimodal for k={k}, n in ({k}, {n_max}], hops={}; scanning exhaustively",
                    path.hops()
                );
                done(problem.exhaustive_argmax()?, SearchOutcome::Exhaustive { fallback: true })
            }
        }
    }
}

/// Lower bound of the operative range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum UMinPolicy {
    /// The smallest utility among block lengths that still meet the target.
    #[default]
    SmallestMeetingTarget,
    FixedFloor(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperativeRange {
    /// Budget-feasible points with `u_min <= u <= u_max` that meet the target.
    pub points: Vec<UtilityPoint>,
    pub u_max: Option<UtilityPoint>,
    pub u_min: Option<f64>,
    pub policy: UMinPolicy,
    pub activate: bool,
    /// What the source runs when the range is empty.
    pub best_effort: Optimum,
}

pub fn operative_range(
    template: &CodeParams,
    path: &PathProfile,
    rho0: f64,
    budget: &ComplexityBudget,
    policy: UMinPolicy,
    config: &OptimizerConfig,
) -> Result<OperativeRange> {
    let problem = Problem::new(template, path, rho0, budget, config.costs(template.q()))?;
    let best_effort = optimize_rate(template, path, rho0, budget, config)?;
    let all = problem.points()?;
    let u = |p: &UtilityPoint| p.utility.unwrap();

    let u_max = all.iter().fold(None::<&UtilityPoint>, |best, p| match best {
        Some(b) if u(b) >= u(p) => Some(b),
        _ => Some(p),
    });
    let meeting: Vec<&UtilityPoint> = all.iter().filter(|p| p.meets_target).collect();
    let u_min = match policy {
        UMinPolicy::SmallestMeetingTarget => meeting.iter().map(|p| u(p)).reduce(f64::min),
        UMinPolicy::FixedFloor(x) => Some(x),
    };
    let points: Vec<UtilityPoint> = match (u_max, u_min) {
        (Some(top), Some(floor)) if top.meets_target => meeting
            .into_iter()
            .filter(|p| u(p) >= floor && u(p) <= u(top))
            .cloned()
            .collect(),
        _ => Vec::new(),
    };
    Ok(OperativeRange {
        activate: !points.is_empty(),
        u_max: u_max.cloned(),
        points,
        u_min,
        policy,
        best_effort,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityResult {
    pub h_nc: usize,
    pub h_unc: usize,
    /// `h_nc / h_unc`; `None` when the uncoded case never meets the target.
    pub gamma: Option<f64>,
    /// Block length used on a single hop (no relay constraint).
    pub n_single_hop: usize,
    /// Block length used on paths with relays.
    pub n_multi_hop: usize,
    /// A hop count reached [`HOP_SEARCH_CAP`].
    pub capped: bool,
}

/// Largest h in `[0, cap]` with `ok(h)`, for `ok` monotone decreasing in h.
fn largest_satisfying(cap: usize, mut ok: impl FnMut(usize) -> bool) -> (usize, bool) {
    if !ok(1) {
        return (0, false);
    }
    let mut lo = 1;
    let hi = loop {
        let probe = (lo * 2).min(cap);
        if !ok(probe) {
            break probe;
        }
        lo = probe;
        if probe == cap {
            return (cap, true);
        }
    };
    let mut hi = hi;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, false)
}

fn repeated_product(term: f64, h: usize) -> f64 {
    (0..h).fold(1.0, |acc, _| acc * term)
}

/// Farthest hop meeting `rho0` with coding versus without, on a homogeneous
/// line with erasure rate `delta`.
pub fn connectivity_gain(
    template: &CodeParams,
    delta: f64,
    rho0: f64,
    budget: &ComplexityBudget,
    costs: Option<GateCosts>,
) -> Result<ConnectivityResult> {
    check_rho0(rho0)?;
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid(format!("erasure rate {delta} outside [0,1]")));
    }
    let costs = costs.unwrap_or_else(|| GateCosts::for_field(template.q()));
    let bounds = max_n_under_budget_with(template, budget, costs)?;
    let (n1, n2) = (bounds.for_hops(1), bounds.for_hops(2));
    let keep1 = 1.0 - rper_single_hop(&template.with_n(n1)?, delta);
    let keep2 = 1.0 - rper_single_hop(&template.with_n(n2)?, delta);

    let (h_unc, cap_unc) = largest_satisfying(HOP_SEARCH_CAP, |h| repeated_product(1.0 - delta, h) >= rho0);
    let (h_nc, cap_nc) = largest_satisfying(HOP_SEARCH_CAP, |h| {
        let keep = if h >= 2 { keep2 } else { keep1 };
        repeated_product(keep, h) >= rho0
    });
    Ok(ConnectivityResult {
        h_nc,
        h_unc,
        gamma: (h_unc > 0).then(|| h_nc as f64 / h_unc as f64),
        n_single_hop: n1,
        n_multi_hop: n2,
        capped: cap_unc || cap_nc,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    pub h: usize,
    pub delta: f64,
    pub beta0: u64,
    pub n_opt: usize,
    pub r_opt: f64,
    pub rho_nc: f64,
    pub rho_unc: f64,
    pub gain: f64,
    pub utility: Option<f64>,
}

pub const GAIN_CSV_HEADER: &str = "h,delta,beta0,n_opt,r_opt,rho_nc,rho_unc,gain,utility";

impl GainRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.h,
            self.delta,
            self.beta0,
            self.n_opt,
            self.r_opt,
            self.rho_nc,
            self.rho_unc,
            self.gain,
            self.utility.map(|u| u.to_string()).unwrap_or_default()
        )
    }
}

pub fn write_gain_csv<W: Write>(mut w: W, records: &[GainRecord]) -> std::io::Result<()> {
    writeln!(w, "{GAIN_CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Optimized coded reliability versus uncoded reliability for h = 1..=h_max.
pub fn reliability_gain_sweep(
    template: &CodeParams,
    delta: f64,
    rho0: f64,
    budget: &ComplexityBudget,
    h_max: usize,
    config: &OptimizerConfig,
) -> Result<Vec<GainRecord>> {
    (1..=h_max)
        .map(|h| {
            let path = PathProfile::homogeneous(delta, h)?;
            let opt = optimize_rate(template, &path, rho0, budget, config)?;
            let rho_unc = crate::analytics::reliability_uncoded(&path, h)?;
            Ok(GainRecord {
                h,
                delta,
                beta0: budget.beta0_source,
                n_opt: opt.point.n,
                r_opt: opt.point.r,
                rho_nc: opt.point.reliability,
                rho_unc,
                gain: opt.point.reliability - rho_unc,
                utility: opt.point.utility,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t() -> CodeParams {
        CodeParams::new(50, 50, 8, 100).unwrap()
    }

    #[test]
    fn utility_signs() {
        let params = CodeParams::new(50, 60, 8, 100).unwrap();
        let path = PathProfile::homogeneous(0.1, 2).unwrap();
        let rho = reliability_nc(&params, &path, 2).unwrap();
        let at = utility(&params, &path, rho).unwrap();
        assert_eq!(at.goodness, 0.0);
        assert_eq!(at.utility, Some(0.0));
        let above = utility(&params, &path, 0.999).unwrap();
        assert!(above.utility.unwrap() < 0.0);
        let pt = utility(&params, &path, 0.8).unwrap();
        assert_eq!(pt.cost, 7_592_000);
        assert_eq!(pt.goodness, pt.reliability - 0.8);
        assert_eq!(pt.utility.unwrap(), pt.goodness / 7_592_000.0);
        assert!(utility(&t(), &path, 0.8).unwrap().utility.is_none());
        assert!(utility(&params, &path, 1.0).is_err());
    }

    #[test]
    fn lossless_path_prefers_least_redundancy() {
        let path = PathProfile::homogeneous(0.0, 3).unwrap();
        let b = ComplexityBudget::uniform(10_000_000).unwrap();
        let opt = optimize_rate(&t(), &path, 0.8, &b, &OptimizerConfig::default()).unwrap();
        assert_eq!(opt.point.n, 51);
        assert!(opt.point.meets_target);
    }

    #[test]
    fn only_no_coding_fits() {
        let path = PathProfile::homogeneous(0.1, 2).unwrap();
        let b = ComplexityBudget::uniform(100).unwrap();
        let opt = optimize_rate(&t(), &path, 0.8, &b, &OptimizerConfig::default()).unwrap();
        assert_eq!(opt.outcome, SearchOutcome::NoCoding);
        assert_eq!(opt.point.n, 50);
        assert!(opt.point.utility.is_none());
    }

    #[test]
    fn best_effort_when_target_unreachable() {
        let path = PathProfile::homogeneous(0.3, 4).unwrap();
        let b = ComplexityBudget::uniform(8_000_000).unwrap();
        let opt = optimize_rate(&t(), &path, 0.8, &b, &OptimizerConfig::default()).unwrap();
        assert_eq!(opt.outcome, SearchOutcome::BestEffort);
        assert_eq!(opt.point.n, opt.n_max);
        assert!(opt.best_effort());
        let range = operative_range(&t(), &path, 0.8, &b, UMinPolicy::default(), &OptimizerConfig::default()).unwrap();
        assert!(!range.activate);
        assert!(range.points.is_empty());
        assert_eq!(range.best_effort.point.n, opt.n_max);
    }

    #[test]
    fn optimum_below_full_reliability() {
        let path = PathProfile::homogeneous(0.1, 5).unwrap();
        let b = ComplexityBudget::uniform(10_000_000).unwrap();
        let opt = optimize_rate(&t(), &path, 0.8, &b, &OptimizerConfig::default()).unwrap();
        assert!(opt.point.meets_target);
        assert!(opt.point.reliability < 1.0);
        let cfg = OptimizerConfig { search: Search::Exhaustive, ..OptimizerConfig::default() };
        let ex = optimize_rate(&t(), &path, 0.8, &b, &cfg).unwrap();
        assert_eq!(opt.point.n, ex.point.n);
    }

    #[test]
    fn range_matches_exhaustive_filter() {
        let b = ComplexityBudget::uniform(10_000_000).unwrap();
        for (delta, hops) in [(0.1, 3), (0.05, 8), (0.0, 2)] {
            let path = PathProfile::homogeneous(delta, hops).unwrap();
            let cfg = OptimizerConfig::default();
            let r = operative_range(&t(), &path, 0.8, &b, UMinPolicy::default(), &cfg).unwrap();
            let n_max = max_n_under_budget_with(&t(), &b, GateCosts::for_field(8)).unwrap().for_hops(hops);
            let pts: Vec<UtilityPoint> = (51..=n_max)
                .map(|n| evaluate(&t().with_n(n).unwrap(), &path, 0.8, Some(&b), GateCosts::for_field(8)).unwrap())
                .collect();
            let umax = pts.iter().map(|p| p.utility.unwrap()).fold(f64::NEG_INFINITY, f64::max);
            let umin = pts.iter().filter(|p| p.meets_target).map(|p| p.utility.unwrap()).fold(f64::INFINITY, f64::min);
            let expect: Vec<usize> = pts
                .iter()
                .filter(|p| p.meets_target && p.utility.unwrap() >= umin && p.utility.unwrap() <= umax)
                .map(|p| p.n)
                .collect();
            let got: Vec<usize> = r.points.iter().map(|p| p.n).collect();
            assert_eq!(got, expect);
            assert!(r.activate);
            assert!(r.points.iter().all(|p| p.reliability >= 0.8));
            assert!(got.contains(&r.u_max.as_ref().unwrap().n));
        }
    }

    #[test]
    fn singleton_range() {
        // A budget that admits exactly one coded block length.
        let one = crate::complexity::encoding_complexity(&t().with_n(51).unwrap()).gates;
        let b = ComplexityBudget::uniform(one).unwrap();
        let path = PathProfile::homogeneous(0.01, 1).unwrap();
        let r = operative_range(&t(), &path, 0.8, &b, UMinPolicy::default(), &OptimizerConfig::default()).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.u_min, r.points[0].utility);
    }

    #[test]
    fn connectivity_closed_form_hops() {
        let b = ComplexityBudget::uniform(10_000_000).unwrap();
        let c = connectivity_gain(&t(), 0.1, 0.8, &b, None).unwrap();
        assert_eq!(c.h_unc, 2);
        assert!(c.h_nc >= c.h_unc);
        assert!(c.gamma.unwrap() >= 1.0);
        let undefined = connectivity_gain(&t(), 0.25, 0.8, &b, None).unwrap();
        assert_eq!(undefined.h_unc, 0);
        assert!(undefined.gamma.is_none());
        let lossless = connectivity_gain(&t(), 0.0, 0.8, &b, None).unwrap();
        assert!(lossless.capped);
    }

    #[test]
    fn connectivity_hops_by_linear_scan() {
        let b = ComplexityBudget::uniform(8_000_000).unwrap();
        for &delta in &[0.05, 0.1, 0.15] {
            let c = connectivity_gain(&t(), delta, 0.8, &b, None).unwrap();
            let scan = (1..2000)
                .take_while(|&h| {
                    let n = if h >= 2 { c.n_multi_hop } else { c.n_single_hop };
                    let path = PathProfile::homogeneous(delta, h).unwrap();
                    reliability_nc(&t().with_n(n).unwrap(), &path, h).unwrap() >= 0.8
                })
                .last()
                .unwrap_or(0);
            assert_eq!(c.h_nc, scan, "delta={delta}");
        }
    }

    #[test]
    fn gain_sweep_basics() {
        let b = ComplexityBudget::uniform(10_000_000).unwrap();
        let zero = reliability_gain_sweep(&t(), 0.0, 0.8, &b, 5, &OptimizerConfig::default()).unwrap();
        assert!(zero.iter().all(|r| r.gain == 0.0));
        let recs = reliability_gain_sweep(&t(), 0.1, 0.8, &b, 20, &OptimizerConfig::default()).unwrap();
        assert_eq!(recs.len(), 20);
        assert_eq!(recs[19].rho_unc, (0..20).fold(1.0, |a, _| a * 0.9));
        assert!((recs[19].rho_unc - 0.1216).abs() < 1e-4);
        let mut buf = Vec::new();
        write_gain_csv(&mut buf, &recs).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with(GAIN_CSV_HEADER));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn argmax_invariant_under_common_scaling(
            delta in 0.0f64..0.3, hops in 1usize..8, beta in 2_000_000u64..12_000_000, factor in 2u64..50, rho0 in 0.5f64..0.95
        ) {
            let path = PathProfile::homogeneous(delta, hops).unwrap();
            let b = ComplexityBudget::uniform(beta).unwrap();
            let base = OptimizerConfig { search: Search::Exhaustive, ..Default::default() };
            let scaled = OptimizerConfig { costs: Some(GateCosts::for_field(8).scaled(factor)), ..base };
            let a = optimize_rate(&t(), &path, rho0, &b, &base).unwrap();
            let s = optimize_rate(&t(), &path, rho0, &b.scaled(factor), &scaled).unwrap();
            prop_assert_eq!(a.point.n, s.point.n);
        }

        #[test]
        fn bisection_agrees_with_exhaustive(
            delta in 0.0f64..0.25, hops in 1usize..12, beta in 1_000_000u64..15_000_000, rho0 in 0.3f64..0.95
        ) {
            let path = PathProfile::homogeneous(delta, hops).unwrap();
            let b = ComplexityBudget::uniform(beta).unwrap();
            let fast = optimize_rate(&t(), &path, rho0, &b, &OptimizerConfig::default()).unwrap();
            let slow = optimize_rate(&t(), &path, rho0, &b, &OptimizerConfig { search: Search::Exhaustive, ..Default::default() }).unwrap();
            prop_assert_eq!(fast.point.n, slow.point.n);
            if let Some(f) = fast.point.feasible { prop_assert!(f.all()); }
        }
    }
}
