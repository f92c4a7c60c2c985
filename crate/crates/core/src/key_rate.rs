//! Secure key rate from the bound outputs, and the signal-intensity
//! optimiser built on top of the simulated link.

use serde::{Deserialize, Serialize};

use crate::bounds::{full_report, Basis, BasisReports, BoundReport, ObservedStatistics, Variant};
use crate::channel::{observe, true_yields, ChannelParams, YieldTable};
use crate::error::{invalid, Error, Result};
use crate::search::{maximize, SearchSettings};
use crate::source::{Member, SourceFamily, SourceTriple, DEFAULT_N_MAX};

/// Error-correction inefficiency used when none is given.
pub const DEFAULT_F_EC: f64 = 1.16;

/// Shannon binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyRateResult {
    /// Bits per pulse pair; negative when correction costs exceed the
    /// privacy term.
    pub rate_raw: f64,
    /// `max(0, rate_raw)`.
    pub rate: f64,
    pub a1s_b1s: f64,
    pub y11_z: f64,
    pub e11_x: Option<f64>,
    pub yss_z: f64,
    pub ess_z: f64,
    pub f_ec: f64,
    /// No usable phase-error bound was available; the rate is forced to 0.
    pub e11_undefined: bool,
}

/// `R = a1^s b1^s y11 [1 - H(e11)] - Y_ss f H(E_ss)`.
///
/// A negative `y11` counts as zero, and `e11 >= 0.5` contributes no privacy
/// term. Without an `e11` bound the rate is reported as 0.
pub fn key_rate_from_parts(
    a1s_b1s: f64,
    y11_z: f64,
    e11_x: Option<f64>,
    yss_z: f64,
    ess_z: f64,
    f_ec: f64,
) -> Result<KeyRateResult> {
    if !(f_ec >= 1.0) || !f_ec.is_finite() {
        return Err(invalid(format!("error-correction inefficiency must be >= 1, got {f_ec}")));
    }
    let y11 = y11_z.max(0.0);
    let cost = yss_z * f_ec * binary_entropy(ess_z)?;
    let (rate_raw, rate) = match e11_x {
        Some(e) => {
            let privacy = if e < 0.5 { a1s_b1s * y11 * (1.0 - binary_entropy(e.clamp(0.0, 1.0))?) } else { 0.0 };
            let raw = privacy - cost;
            (raw, raw.max(0.0))
        }
        None => (-cost, 0.0),
    };
    Ok(KeyRateResult { rate_raw, rate, a1s_b1s, y11_z, e11_x, yss_z, ess_z, f_ec, e11_undefined: e11_x.is_none() })
}

/// Key rate from the tightest bound (`y11_123` and its `e11`).
pub fn key_rate(
    report_z: &BoundReport,
    report_x: &BoundReport,
    stats_z: &ObservedStatistics,
    alice: &SourceTriple,
    bob: &SourceTriple,
    f_ec: f64,
) -> Result<KeyRateResult> {
    key_rate_for(Variant::Eq123, report_z, report_x, stats_z, alice, bob, f_ec)
}

/// Key rate using one particular bound variant for both `y11^Z` and `e11^X`.
pub fn key_rate_for(
    variant: Variant,
    report_z: &BoundReport,
    report_x: &BoundReport,
    stats_z: &ObservedStatistics,
    alice: &SourceTriple,
    bob: &SourceTriple,
    f_ec: f64,
) -> Result<KeyRateResult> {
    let expect = (alice.n_max(), bob.n_max());
    if report_z.n_max != expect || report_x.n_max != expect {
        return Err(invalid(format!(
            "reports were computed with truncations {:?}/{:?}, sources have {expect:?}",
            report_z.n_max, report_x.n_max
        )));
    }
    if report_z.basis != Basis::Z || report_x.basis != Basis::X || stats_z.basis != Basis::Z {
        return Err(invalid("key rate needs Z-basis yields and statistics with an X-basis error bound"));
    }
    key_rate_from_parts(
        signal_single_photon_weight(alice, bob),
        report_z.y11(variant).max(0.0),
        report_x.e11(variant),
        stats_z.gain(Member::S, Member::S),
        stats_z.error_rate(Member::S, Member::S),
        f_ec,
    )
}

fn signal_single_photon_weight(alice: &SourceTriple, bob: &SourceTriple) -> f64 {
    alice.s().prob(1) * bob.s().prob(1)
}

/// How `y11` and `e11` enter the key rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateMethod {
    Bound(Variant),
    /// The model's true single-photon values, the limit of infinitely many
    /// decoy intensities.
    Infinite,
}

impl RateMethod {
    pub const ALL: [RateMethod; 6] = [
        RateMethod::Bound(Variant::Eq123),
        RateMethod::Bound(Variant::Eq124),
        RateMethod::Bound(Variant::Eq134),
        RateMethod::Bound(Variant::Eq234),
        RateMethod::Bound(Variant::Eq14),
        RateMethod::Infinite,
    ];

    /// Config name: `y11_123`, ..., `y11_14`, `infinite`.
    pub fn name(self) -> &'static str {
        match self {
            RateMethod::Bound(Variant::Eq123) => "y11_123",
            RateMethod::Bound(Variant::Eq124) => "y11_124",
            RateMethod::Bound(Variant::Eq134) => "y11_134",
            RateMethod::Bound(Variant::Eq234) => "y11_234",
            RateMethod::Bound(Variant::Eq14) => "y11_14",
            RateMethod::Infinite => "infinite",
        }
    }

    /// Column suffix: `123`, ..., `14`, `inf`.
    pub fn key(self) -> &'static str {
        match self {
            RateMethod::Bound(v) => v.key(),
            RateMethod::Infinite => "inf",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Symmetric-channel link: both parties' sources, the reference channel and
/// the error-correction inefficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSetup {
    pub alice: SourceTriple,
    pub bob: SourceTriple,
    pub channel: ChannelParams,
    pub f_ec: f64,
}

/// Everything the reference model and the bounds say about one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSimulation {
    pub yields_z: YieldTable,
    pub yields_x: YieldTable,
    pub stats_z: ObservedStatistics,
    pub stats_x: ObservedStatistics,
    pub reports: BasisReports,
}

impl LinkSetup {
    pub fn simulate(&self) -> Result<LinkSimulation> {
        if self.alice.n_max() != self.bob.n_max() {
            return Err(invalid("both parties must share one truncation"));
        }
        let n = self.alice.n_max();
        let yields_z = true_yields(&self.channel, n, Basis::Z)?;
        let yields_x = true_yields(&self.channel, n, Basis::X)?;
        let stats_z = observe(&self.alice, &self.bob, &yields_z)?;
        let stats_x = observe(&self.alice, &self.bob, &yields_x)?;
        let reports = full_report(&stats_z, &stats_x, &self.alice, &self.bob)?;
        Ok(LinkSimulation { yields_z, yields_x, stats_z, stats_x, reports })
    }

    pub fn rate(&self, sim: &LinkSimulation, method: RateMethod) -> Result<KeyRateResult> {
        match method {
            RateMethod::Bound(v) => {
                key_rate_for(v, &sim.reports.z, &sim.reports.x, &sim.stats_z, &self.alice, &self.bob, self.f_ec)
            }
            RateMethod::Infinite => key_rate_from_parts(
                signal_single_photon_weight(&self.alice, &self.bob),
                sim.yields_z.y11(),
                Some(sim.yields_x.e11()),
                sim.stats_z.gain(Member::S, Member::S),
                sim.stats_z.error_rate(Member::S, Member::S),
                self.f_ec,
            ),
        }
    }
}

/// Signal-intensity search with the weaker intensities held fixed and
/// `μ_s = ν_s` shared by both parties.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSearch {
    pub family: SourceFamily,
    /// Alice's `(μ_v, μ_d)`.
    pub alice: [f64; 2],
    /// Bob's `(ν_v, ν_d)`.
    pub bob: [f64; 2],
    pub n_max: usize,
    pub channel: ChannelParams,
    pub f_ec: f64,
    pub method: RateMethod,
    pub settings: SearchSettings,
}

impl SignalSearch {
    /// Default search for the given fixed intensities, coherent sources.
    pub fn new(mu_v: f64, mu_d: f64, channel: ChannelParams, f_ec: f64, method: RateMethod) -> Self {
        Self {
            family: SourceFamily::Coherent,
            alice: [mu_v, mu_d],
            bob: [mu_v, mu_d],
            n_max: DEFAULT_N_MAX,
            channel,
            f_ec,
            method,
            settings: SearchSettings::default(),
        }
    }

    /// `(max(μ_d, ν_d), 1)`.
    pub fn interval(&self) -> (f64, f64) {
        (self.alice[1].max(self.bob[1]), 1.0)
    }

    pub fn link(&self, mu_s: f64) -> Result<LinkSetup> {
        Ok(LinkSetup {
            alice: self.family.triple([self.alice[0], self.alice[1], mu_s], self.n_max)?,
            bob: self.family.triple([self.bob[0], self.bob[1], mu_s], self.n_max)?,
            channel: self.channel,
            f_ec: self.f_ec,
        })
    }

    pub fn rate_at(&self, mu_s: f64) -> Result<KeyRateResult> {
        let link = self.link(mu_s)?;
        let sim = link.simulate()?;
        link.rate(&sim, self.method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub mu_s: f64,
    pub rate: f64,
    pub rate_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub best_intensity: f64,
    pub best_rate: f64,
    pub best_rate_raw: f64,
    pub trace: Vec<TracePoint>,
    /// Every sampled intensity gave a zero rate.
    pub zero_rate: bool,
}

/// Maximises the key rate over `μ_s = ν_s ∈ (μ_d, 1)`.
///
/// The raw (unclamped) rate is the objective so the search still has a
/// slope to follow where the clamped rate is flat at zero.
pub fn optimize_signal_intensity(search: &SignalSearch) -> Result<OptimizationResult> {
    for [v, d] in [search.alice, search.bob] {
        if !(0.0 <= v && v < d && d < 1.0) {
            return Err(invalid(format!("need 0 <= mu_v < mu_d < 1, got mu_v = {v}, mu_d = {d}")));
        }
    }
    search.channel.validate()?;
    if !(search.f_ec >= 1.0) {
        return Err(invalid(format!("error-correction inefficiency must be >= 1, got {}", search.f_ec)));
    }
    let (lo, hi) = search.interval();

    let first_error: std::cell::RefCell<Option<Error>> = Default::default();
    let raw_at = |mu: f64| match search.rate_at(mu) {
        Ok(r) => r.rate_raw,
        Err(e) => {
            first_error.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let max = maximize(raw_at, lo, hi, search.settings)?;
    if let Some(e) = first_error.into_inner() {
        return Err(e);
    }
    let trace: Vec<TracePoint> =
        max.trace.iter().map(|&(mu_s, raw)| TracePoint { mu_s, rate: raw.max(0.0), rate_raw: raw }).collect();
    let best_rate = max.value.max(0.0);
    Ok(OptimizationResult {
        best_intensity: max.argmax,
        best_rate,
        best_rate_raw: max.value,
        zero_rate: best_rate == 0.0,
        trace,
    })
}
