//! Photon-number statistics of the three sources each party holds.
//!
//! A [`PhotonDistribution`] is a truncated vector of photon-number
//! probabilities. Three of them, ordered weakest to strongest, form a
//! [`SourceTriple`]; the vacuum-normalised ratios of the triple
//! ([`HRatioTable`]) are the only source information the bound formulas use.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Truncation used by the built-in families when none is given.
pub const DEFAULT_N_MAX: usize = 20;

/// Smallest admissible truncation; the reduced system references photon
/// numbers 1 and 2 plus at least one multi-photon residual term.
pub const MIN_N_MAX: usize = 3;

/// Relative slack on the ratio comparisons of the source condition.
pub const CONDITION_RELATIVE_SLACK: f64 = 1e-12;

const CUSTOM_SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    intensity: Option<f64>,
    /// Probability mass of the family beyond `n_max` (zero for custom vectors).
    tail_mass: f64,
}

impl PhotonDistribution {
    /// Poissonian photon statistics of a phase-randomised coherent state.
    pub fn coherent(mu: f64, n_max: usize) -> Result<Self> {
        check_family_args("coherent", mu, n_max)?;
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut p = (-mu).exp();
        probs.push(p);
        for k in 1..=n_max {
            p *= mu / k as f64;
            probs.push(p);
        }
        // Continue the recurrence past the cutoff to measure the dropped mass.
        let mut tail = 0.0;
        let mut k = n_max + 1;
        loop {
            p *= mu / k as f64;
            tail += p;
            if p <= tail * 1e-17 || p == 0.0 {
                break;
            }
            k += 1;
        }
        Ok(Self { probs, intensity: Some(mu), tail_mass: tail })
    }

    /// Single-mode thermal (Bose-Einstein) statistics, the marginal of a
    /// heralded parametric down-conversion source.
    pub fn thermal(mean: f64, n_max: usize) -> Result<Self> {
        check_family_args("thermal", mean, n_max)?;
        let ratio = mean / (1.0 + mean);
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut p = 1.0 / (1.0 + mean);
        probs.push(p);
        for _ in 1..=n_max {
            p *= ratio;
            probs.push(p);
        }
        let tail_mass = ratio.powi(n_max as i32 + 1);
        Ok(Self { probs, intensity: Some(mean), tail_mass })
    }

    /// Arbitrary (possibly sub-normalised) photon-number vector. Short
    /// vectors are zero-padded up to the minimum truncation.
    pub fn custom(probs: Vec<f64>) -> Result<Self> {
        let n_max = probs.len().saturating_sub(1).max(MIN_N_MAX);
        Self::custom_with_n_max(probs, n_max)
    }

    /// As [`custom`](Self::custom), zero-padded to exactly `n_max`.
    pub fn custom_with_n_max(mut probs: Vec<f64>, n_max: usize) -> Result<Self> {
        if n_max < MIN_N_MAX {
            return Err(invalid(format!("n_max must be >= {MIN_N_MAX}, got {n_max}")));
        }
        if probs.len() > n_max + 1 {
            return Err(invalid(format!("{} probabilities do not fit truncation n_max = {n_max}", probs.len())));
        }
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
            return Err(invalid(format!("probability for k = {k} is {p}")));
        }
        if probs.first().copied().unwrap_or(0.0) <= 0.0 {
            return Err(invalid("vacuum probability must be positive"));
        }
        let sum: f64 = probs.iter().sum();
        if sum > 1.0 + CUSTOM_SUM_SLACK {
            return Err(invalid(format!("probabilities sum to {sum} > 1")));
        }
        probs.resize(n_max + 1, 0.0);
        Ok(Self { probs, intensity: None, tail_mass: 0.0 })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Mean photon number the distribution was built from, if any.
    pub fn intensity(&self) -> Option<f64> {
        self.intensity
    }

    /// Mass the truncation dropped from a built-in family.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `p_k / p_0` for every photon number.
    pub fn h_ratios(&self) -> Vec<f64> {
        let p0 = self.probs[0];
        self.probs.iter().map(|p| p / p0).collect()
    }
}

fn check_family_args(family: &str, mean: f64, n_max: usize) -> Result<()> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(invalid(format!("{family} intensity must be finite and >= 0, got {mean}")));
    }
    if n_max < MIN_N_MAX {
        return Err(invalid(format!("n_max must be >= {MIN_N_MAX}, got {n_max}")));
    }
    Ok(())
}

/// Built-in source families that can be rebuilt at any intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFamily {
    Coherent,
    Thermal,
}

impl SourceFamily {
    pub fn distribution(self, intensity: f64, n_max: usize) -> Result<PhotonDistribution> {
        match self {
            SourceFamily::Coherent => PhotonDistribution::coherent(intensity, n_max),
            SourceFamily::Thermal => PhotonDistribution::thermal(intensity, n_max),
        }
    }

    pub fn triple(self, intensities: [f64; 3], n_max: usize) -> Result<SourceTriple> {
        match self {
            SourceFamily::Coherent => SourceTriple::coherent(intensities, n_max),
            SourceFamily::Thermal => SourceTriple::thermal(intensities, n_max),
        }
    }
}

/// Which of a party's three sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Member {
    V,
    D,
    S,
}

impl Member {
    pub const ALL: [Member; 3] = [Member::V, Member::D, Member::S];

    pub fn index(self) -> usize {
        match self {
            Member::V => 0,
            Member::D => 1,
            Member::S => 2,
        }
    }
}

/// Outcome of the source condition check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionVerdict {
    Pass,
    /// First photon number at which the ratio chain breaks.
    Fail {
        k: usize,
        ratio_k: f64,
        ratio_2: f64,
        ratio_1: f64,
    },
}

impl ConditionVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ConditionVerdict::Pass)
    }
}

/// The weakest (`v`), decoy (`d`) and signal (`s`) sources of one party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceTriple {
    v: PhotonDistribution,
    d: PhotonDistribution,
    s: PhotonDistribution,
}

impl SourceTriple {
    /// Builds an admissible triple: strictly ordered first-order ratios and
    /// a passing condition check.
    pub fn new(v: PhotonDistribution, d: PhotonDistribution, s: PhotonDistribution) -> Result<Self> {
        let triple = Self::unchecked(v, d, s)?;
        match triple.check_condition()? {
            ConditionVerdict::Pass => Ok(triple),
            ConditionVerdict::Fail { k, ratio_k, ratio_2, ratio_1 } => Err(Error::InadmissibleTriple(format!(
                "ratio condition fails at k = {k} (r_k = {ratio_k:e}, r_2 = {ratio_2:e}, r_1 = {ratio_1:e})"
            ))),
        }
    }

    /// Groups three distributions, checking only that their truncations agree.
    pub fn unchecked(v: PhotonDistribution, d: PhotonDistribution, s: PhotonDistribution) -> Result<Self> {
        if v.n_max() != d.n_max() || v.n_max() != s.n_max() {
            return Err(invalid(format!("source truncations differ: {} / {} / {}", v.n_max(), d.n_max(), s.n_max())));
        }
        Ok(Self { v, d, s })
    }

    pub fn coherent(intensities: [f64; 3], n_max: usize) -> Result<Self> {
        let [v, d, s] = intensities;
        Self::new(
            PhotonDistribution::coherent(v, n_max)?,
            PhotonDistribution::coherent(d, n_max)?,
            PhotonDistribution::coherent(s, n_max)?,
        )
    }

    pub fn thermal(intensities: [f64; 3], n_max: usize) -> Result<Self> {
        let [v, d, s] = intensities;
        Self::new(
            PhotonDistribution::thermal(v, n_max)?,
            PhotonDistribution::thermal(d, n_max)?,
            PhotonDistribution::thermal(s, n_max)?,
        )
    }

    pub fn get(&self, member: Member) -> &PhotonDistribution {
        match member {
            Member::V => &self.v,
            Member::D => &self.d,
            Member::S => &self.s,
        }
    }

    pub fn v(&self) -> &PhotonDistribution {
        &self.v
    }

    pub fn d(&self) -> &PhotonDistribution {
        &self.d
    }

    pub fn s(&self) -> &PhotonDistribution {
        &self.s
    }

    pub fn n_max(&self) -> usize {
        self.v.n_max()
    }

    pub fn h_ratios(&self) -> HRatioTable {
        HRatioTable::new(self)
    }

    /// Verifies `h̃_k^s/h̃_k^d >= h̃_2^s/h̃_2^d >= h̃_1^s/h̃_1^d` for every
    /// `k` in `2..=n_max`.
    ///
    /// Terms where both differences vanish are skipped; a vanishing decoy
    /// difference with a positive signal difference counts as an infinite
    /// ratio. Negative differences at any `k >= 1` fail outright, since the
    /// bound proofs need every `h̃` to be non-negative.
    pub fn check_condition(&self) -> Result<ConditionVerdict> {
        let table = self.h_ratios();
        let (d1, s1) = (table.tilde_d(1), table.tilde_s(1));
        if !(d1 > 0.0 && s1 > 0.0) || !(s1 > d1) {
            return Err(Error::InadmissibleTriple(format!(
                "first-order ratios must satisfy 0 < h̃_1^d < h̃_1^s, got h̃_1^d = {d1:e}, h̃_1^s = {s1:e}"
            )));
        }
        let ratio_1 = s1 / d1;
        let ratio_at = |k: usize| -> Option<f64> {
            let (d, s) = (table.tilde_d(k), table.tilde_s(k));
            if d < 0.0 || s < 0.0 {
                Some(f64::NAN)
            } else if d == 0.0 && s == 0.0 {
                None
            } else if d == 0.0 {
                Some(f64::INFINITY)
            } else {
                Some(s / d)
            }
        };
        let ratio_2 = match ratio_at(2) {
            Some(r) => r,
            // Degenerate second order: nothing to anchor the chain to.
            None => f64::NAN,
        };
        if !at_least(ratio_2, ratio_1) {
            return Ok(ConditionVerdict::Fail { k: 2, ratio_k: ratio_2, ratio_2, ratio_1 });
        }
        for k in 3..=self.n_max() {
            if let Some(ratio_k) = ratio_at(k) {
                if !at_least(ratio_k, ratio_2) {
                    return Ok(ConditionVerdict::Fail { k, ratio_k, ratio_2, ratio_1 });
                }
            }
        }
        Ok(ConditionVerdict::Pass)
    }
}

fn at_least(a: f64, b: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return false;
    }
    if a == f64::INFINITY {
        return true;
    }
    a >= b - CONDITION_RELATIVE_SLACK * a.abs().max(b.abs())
}

/// Vacuum-normalised ratios `h_k = p_k / p_0` of a triple and their
/// differences `h̃_k = h_k - h_k^v` for the decoy and signal members.
#[derive(Debug, Clone, PartialEq)]
pub struct HRatioTable {
    h: [Vec<f64>; 3],
    tilde: [Vec<f64>; 2],
}

impl HRatioTable {
    fn new(triple: &SourceTriple) -> Self {
        let h = [triple.v.h_ratios(), triple.d.h_ratios(), triple.s.h_ratios()];
        let diff = |m: &Vec<f64>| -> Vec<f64> { m.iter().zip(&h[0]).map(|(x, v)| x - v).collect() };
        let tilde = [diff(&h[1]), diff(&h[2])];
        Self { h, tilde }
    }

    pub fn n_max(&self) -> usize {
        self.h[0].len() - 1
    }

    #[inline]
    pub fn h(&self, member: Member, k: usize) -> f64 {
        self.h[member.index()][k]
    }

    /// `h̃_k^i` for `i` in {d, s}; zero for the weakest source by definition.
    #[inline]
    pub fn tilde(&self, member: Member, k: usize) -> f64 {
        match member {
            Member::V => 0.0,
            Member::D => self.tilde[0][k],
            Member::S => self.tilde[1][k],
        }
    }

    #[inline]
    pub fn tilde_d(&self, k: usize) -> f64 {
        self.tilde[0][k]
    }

    #[inline]
    pub fn tilde_s(&self, k: usize) -> f64 {
        self.tilde[1][k]
    }

    /// `h̃_1^d h̃_2^s - h̃_1^s h̃_2^d`, the per-party elimination determinant.
    pub fn elimination_determinant(&self) -> f64 {
        self.tilde_d(1) * self.tilde_s(2) - self.tilde_s(1) * self.tilde_d(2)
    }
}
