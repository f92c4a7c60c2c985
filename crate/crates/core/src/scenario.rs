//! JSON scenario files and the CSV datasets produced from them.
//!
//! ```json
//! {
//!   "version": 1,
//!   "alice": {"family": "coherent", "intensities": [0.01, 0.1, 0.5]},
//!   "bob":   {"family": "coherent", "intensities": [0.01, 0.1, 0.5]},
//!   "channel": {"e_d": 0.015, "p_d": 3e-6},
//!   "f_ec": 1.16,
//!   "sweep": {"loss_db_start": 0, "loss_db_end": 40, "loss_db_step": 1},
//!   "methods": ["y11_123", "y11_14", "infinite"]
//! }
//! ```

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::key_rate::{optimize_signal_intensity, LinkSetup, RateMethod, SignalSearch, DEFAULT_F_EC};
use crate::search::SearchSettings;
use crate::source::{PhotonDistribution, SourceFamily, SourceTriple, DEFAULT_N_MAX, MIN_N_MAX};

pub const SCENARIO_VERSION: u32 = 1;

/// Sweeps longer than this are refused.
pub const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Coherent,
    Thermal,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensities: Option<[f64; 3]>,
    /// Photon-number probabilities of the vacuum, decoy and signal members.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<[Vec<f64>; 3]>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

impl SourceSpec {
    pub fn coherent(intensities: [f64; 3]) -> Self {
        Self { family: FamilyName::Coherent, intensities: Some(intensities), probs: None, n_max: DEFAULT_N_MAX }
    }

    pub fn triple(&self) -> Result<SourceTriple> {
        if self.n_max < MIN_N_MAX {
            return Err(Error::Config(format!("n_max must be >= {MIN_N_MAX}, got {}", self.n_max)));
        }
        match (self.family, self.intensities.as_ref(), self.probs.as_ref()) {
            (FamilyName::Custom, None, Some(p)) => {
                let [v, d, s] = p.clone().map(|probs| PhotonDistribution::custom_with_n_max(probs, self.n_max));
                SourceTriple::new(v?, d?, s?)
            }
            (FamilyName::Custom, _, _) => {
                Err(Error::Config("custom sources need \"probs\" and no \"intensities\"".into()))
            }
            (_, Some(mu), None) => {
                if !(mu[0] < mu[1] && mu[1] < mu[2]) {
                    return Err(Error::Config(format!("intensities must be strictly increasing, got {mu:?}")));
                }
                self.family_kind().expect("not custom").triple(*mu, self.n_max)
            }
            _ => Err(Error::Config("coherent and thermal sources need \"intensities\" and no \"probs\"".into())),
        }
    }

    fn family_kind(&self) -> Option<SourceFamily> {
        match self.family {
            FamilyName::Coherent => Some(SourceFamily::Coherent),
            FamilyName::Thermal => Some(SourceFamily::Thermal),
            FamilyName::Custom => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub loss_db_start: f64,
    pub loss_db_end: f64,
    pub loss_db_step: f64,
}

impl SweepSpec {
    /// `start + i * step` up to `end`, computed by index so the grid does
    /// not drift.
    pub fn points(&self) -> Vec<f64> {
        let span = (self.loss_db_end - self.loss_db_start) / self.loss_db_step;
        let n = (span + 1e-9).floor() as usize;
        (0..=n).map(|i| self.loss_db_start + self.loss_db_step * i as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.loss_db_start, self.loss_db_end, self.loss_db_step].iter().all(|x| x.is_finite());
        if !finite || !(self.loss_db_step > 0.0) {
            return Err(Error::Config(format!("sweep step must be positive, got {}", self.loss_db_step)));
        }
        if !(self.loss_db_start >= 0.0 && self.loss_db_start <= self.loss_db_end) {
            return Err(Error::Config(format!(
                "sweep needs 0 <= start <= end, got start {} end {}",
                self.loss_db_start, self.loss_db_end
            )));
        }
        if (self.loss_db_end - self.loss_db_start) / self.loss_db_step > MAX_SWEEP_POINTS as f64 {
            return Err(Error::Config(format!("sweep has more than {MAX_SWEEP_POINTS} points")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub alice: SourceSpec,
    pub bob: SourceSpec,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default = "default_f_ec")]
    pub f_ec: f64,
    pub sweep: SweepSpec,
    #[serde(with = "method_names")]
    pub methods: Vec<RateMethod>,
}

fn default_f_ec() -> f64 {
    DEFAULT_F_EC
}

mod method_names {
    use super::RateMethod;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(methods: &[RateMethod], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(methods.iter().map(|m| m.name()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<RateMethod>, D::Error> {
        Ok(Vec::<Name>::deserialize(d)?.into_iter().map(|n| n.0).collect())
    }

    struct Name(RateMethod);

    impl<'de> Deserialize<'de> for Name {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            let n = String::deserialize(d)?;
            RateMethod::parse(&n).map(Name).ok_or_else(|| {
                D::Error::custom(format!(
                    "unknown method \"{n}\", expected one of y11_123, y11_124, y11_134, y11_234, y11_14, infinite"
                ))
            })
        }
    }
}

impl Default for Scenario {
    /// Symmetric coherent sources at 0.01 / 0.1 / 0.5, default channel,
    /// 0 to 40 dB in 1 dB steps, every method.
    fn default() -> Self {
        Self {
            version: SCENARIO_VERSION,
            alice: SourceSpec::coherent([0.01, 0.1, 0.5]),
            bob: SourceSpec::coherent([0.01, 0.1, 0.5]),
            channel: ChannelParams::default(),
            f_ec: DEFAULT_F_EC,
            sweep: SweepSpec { loss_db_start: 0.0, loss_db_end: 40.0, loss_db_step: 1.0 },
            methods: RateMethod::ALL.to_vec(),
        }
    }
}

impl Scenario {
    /// Parses and validates. Syntax and schema errors carry the line and
    /// column reported by the JSON parser.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(head, _)| head);
            Error::Config(format!("line {}, column {}: {msg}", e.line(), e.column()))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::Config(format!("unsupported version {}, expected {SCENARIO_VERSION}", self.version)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {} listed twice", m.name())));
            }
        }
        if !(self.f_ec >= 1.0) || !self.f_ec.is_finite() {
            return Err(Error::Config(format!("f_ec must be >= 1, got {}", self.f_ec)));
        }
        self.sweep.validate()?;
        self.channel.validate().map_err(|e| Error::Config(format!("channel: {e}")))?;
        if self.alice.n_max != self.bob.n_max {
            return Err(Error::Config(format!(
                "alice and bob must share n_max, got {} and {}",
                self.alice.n_max, self.bob.n_max
            )));
        }
        for (who, spec) in [("alice", &self.alice), ("bob", &self.bob)] {
            spec.triple().map_err(|e| Error::Config(format!("{who}: {e}")))?;
        }
        Ok(())
    }

    fn link_at(&self, loss_db: f64) -> Result<LinkSetup> {
        Ok(LinkSetup {
            alice: self.alice.triple()?,
            bob: self.bob.triple()?,
            channel: self.channel.with_loss(loss_db),
            f_ec: self.f_ec,
        })
    }

    /// Signal-intensity search for one method at one loss.
    pub fn signal_search(&self, loss_db: f64, method: RateMethod) -> Result<SignalSearch> {
        let family = match (self.alice.family_kind(), self.bob.family_kind()) {
            (Some(a), Some(b)) if a == b => a,
            _ => {
                return Err(Error::Config(
                    "optimize needs alice and bob to use the same coherent or thermal family".into(),
                ))
            }
        };
        let (a, b) = (self.alice.intensities.expect("validated"), self.bob.intensities.expect("validated"));
        if !(a[1] < 1.0 && b[1] < 1.0) {
            return Err(Error::Config("optimize needs decoy intensities below 1".into()));
        }
        Ok(SignalSearch {
            family,
            alice: [a[0], a[1]],
            bob: [b[0], b[1]],
            n_max: self.alice.n_max,
            channel: self.channel.with_loss(loss_db),
            f_ec: self.f_ec,
            method,
            settings: SearchSettings::default(),
        })
    }
}

/// Nine significant digits, `nan` for missing values.
pub fn format_value(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.8e}"),
        Some(v) if v.is_nan() => "nan".into(),
        Some(v) => if v > 0.0 { "inf" } else { "-inf" }.into(),
        None => "nan".into(),
    }
}

/// One row of a loss sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub loss_db: f64,
    pub true_y11: f64,
    pub methods: Vec<MethodPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodPoint {
    pub method: RateMethod,
    pub y11: f64,
    /// `y11 / true_y11`.
    pub relative_y11: f64,
    pub e11: Option<f64>,
    pub rate: f64,
}

fn sweep_point(scenario: &Scenario, loss_db: f64) -> Result<SweepRow> {
    let link = scenario.link_at(loss_db)?;
    let sim = link.simulate()?;
    let true_y11 = sim.yields_z.y11();
    let methods = scenario
        .methods
        .iter()
        .map(|&method| {
            let rate = link.rate(&sim, method)?;
            let (y11, e11) = match method {
                RateMethod::Bound(v) => (sim.reports.z.y11(v), sim.reports.x.e11(v)),
                RateMethod::Infinite => (true_y11, Some(sim.yields_x.e11())),
            };
            Ok(MethodPoint { method, y11, relative_y11: y11 / true_y11, e11, rate: rate.rate })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRow { loss_db, true_y11, methods })
}

/// Evaluates every loss point, in parallel, returned in loss order.
pub fn sweep_rows(scenario: &Scenario) -> Result<Vec<SweepRow>> {
    scenario.validate()?;
    scenario.sweep.points().into_par_iter().map(|loss| sweep_point(scenario, loss)).collect()
}

/// Columns: `loss_db,true_y11`, then `y11_K,rel_y11_K,e11_K,rate_K` for
/// each configured method `K` in config order.
pub fn run_sweep(scenario: &Scenario) -> Result<String> {
    let rows = sweep_rows(scenario)?;
    let mut out = String::from("loss_db,true_y11");
    for m in &scenario.methods {
        let k = m.key();
        write!(out, ",y11_{k},rel_y11_{k},e11_{k},rate_{k}").unwrap();
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format_value(Some(row.loss_db)));
        out.push(',');
        out.push_str(&format_value(Some(row.true_y11)));
        for p in row.methods {
            for v in [Some(p.y11), Some(p.relative_y11), p.e11, Some(p.rate)] {
                out.push(',');
                out.push_str(&format_value(v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeRow {
    pub loss_db: f64,
    pub methods: Vec<OptimizedPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizedPoint {
    pub method: RateMethod,
    pub mu_s: f64,
    pub rate: f64,
    /// Optimal rate over the optimal infinite-decoy rate. Fixed at 1 for the
    /// infinite method itself and 0 when the infinite rate is 0.
    pub relative_rate: f64,
    /// Rate at the configured signal intensity.
    pub fixed_rate: f64,
    pub zero_rate: bool,
}

fn optimize_point(scenario: &Scenario, loss_db: f64) -> Result<OptimizeRow> {
    let link = scenario.link_at(loss_db)?;
    let sim = link.simulate()?;
    let best = |method| optimize_signal_intensity(&scenario.signal_search(loss_db, method)?);
    let infinite = best(RateMethod::Infinite)?;
    let methods = scenario
        .methods
        .iter()
        .map(|&method| {
            let opt = if method == RateMethod::Infinite { infinite.clone() } else { best(method)? };
            let relative_rate = match method {
                RateMethod::Infinite => 1.0,
                _ if infinite.best_rate > 0.0 => opt.best_rate / infinite.best_rate,
                _ => 0.0,
            };
            Ok(OptimizedPoint {
                method,
                mu_s: opt.best_intensity,
                rate: opt.best_rate,
                relative_rate,
                fixed_rate: link.rate(&sim, method)?.rate,
                zero_rate: opt.zero_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizeRow { loss_db, methods })
}

/// Optimises `μ_s = ν_s` for every method at every loss point.
pub fn optimize_rows(scenario: &Scenario) -> Result<Vec<OptimizeRow>> {
    scenario.validate()?;
    scenario.signal_search(scenario.sweep.loss_db_start, RateMethod::Infinite)?;
    scenario.sweep.points().into_par_iter().map(|loss| optimize_point(scenario, loss)).collect()
}

/// Columns: `loss_db`, then `mu_s_K,rate_K,rel_rate_K,fixed_rate_K,zero_rate_K`
/// for each configured method `K`.
pub fn run_optimize(scenario: &Scenario) -> Result<String> {
    let rows = optimize_rows(scenario)?;
    let mut out = String::from("loss_db");
    for m in &scenario.methods {
        let k = m.key();
        write!(out, ",mu_s_{k},rate_{k},rel_rate_{k},fixed_rate_{k},zero_rate_{k}").unwrap();
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format_value(Some(row.loss_db)));
        for p in row.methods {
            for v in [p.mu_s, p.rate, p.relative_rate, p.fixed_rate] {
                out.push(',');
                out.push_str(&format_value(Some(v)));
            }
            out.push_str(if p.zero_rate { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    Ok(out)
}
